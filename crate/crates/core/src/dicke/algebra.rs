//! Single-state rate algebra on the Dicke triangle.
//!
//! Everything here is evaluated on a single `|j, m>`; for a Dicke state the
//! collective moment equations project exactly onto these expressions.

use serde::{Deserialize, Serialize};

use super::index::{DickeIndex, HalfInt};
use crate::error::{Error, Result};
use crate::rates::RateSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Raise,
    Lower,
}

/// `|<j, m±1| J± |j, m>| = sqrt((j ∓ m)(j ± m + 1))`; zero off the end of the ladder.
pub fn ladder_coefficient(j: HalfInt, m: HalfInt, direction: Ladder) -> f64 {
    let (j2, m2) = (j.doubled(), m.doubled());
    let quad = match direction {
        Ladder::Raise => (j2 - m2) * (j2 + m2 + 2),
        Ladder::Lower => (j2 + m2) * (j2 - m2 + 2),
    };
    if quad <= 0 {
        0.0
    } else {
        (quad as f64 / 4.0).sqrt()
    }
}

/// Photon emission rate out of `|j, m>`: `gamma_S (j^2 + j - m^2 + m)`.
pub fn emission_rate(j: HalfInt, m: HalfInt, gamma_s: f64) -> f64 {
    let (j2, m2) = (j.doubled(), m.doubled());
    // (j + m)(j - m + 1), exact in integers
    let quad = (j2 + m2) * (j2 - m2 + 2);
    gamma_s * quad as f64 / 4.0
}

/// Contributions of the three channels to one derivative.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChannelParts {
    pub s: f64,
    pub l: f64,
    pub d: f64,
}

impl ChannelParts {
    pub fn total(&self) -> f64 {
        self.s + self.l + self.d
    }
}

/// `dm/dt` and `dj/dt` on a Dicke state, split by channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateDerivatives {
    pub dm_dt: ChannelParts,
    pub dj_dt: ChannelParts,
}

/// Derivatives at a (possibly non-quantized) point of the triangle.
///
/// `dm/dt = -gS (j^2+j-m^2+m) - gL (m + N/2)`
/// `dj/dt = -[gD (j^2+j-m^2-N/2) + gL (j^2+j+(N-1)m+m^2-N)] / (2j+1)`
pub fn state_derivatives_at(j: f64, m: f64, rates: &RateSet, n: u32) -> StateDerivatives {
    let nf = n as f64;
    let jj = j * j + j;
    let width = 2.0 * j + 1.0;
    StateDerivatives {
        dm_dt: ChannelParts {
            s: -rates.gamma_s * (jj - m * m + m),
            l: -rates.gamma_l * (m + nf / 2.0),
            d: 0.0,
        },
        dj_dt: ChannelParts {
            s: 0.0,
            l: -rates.gamma_l * (jj + (nf - 1.0) * m + m * m - nf) / width,
            d: -rates.gamma_d * (jj - m * m - nf / 2.0) / width,
        },
    }
}

pub fn state_derivatives(idx: DickeIndex, rates: &RateSet, n: u32) -> Result<StateDerivatives> {
    idx.check(n)?;
    Ok(state_derivatives_at(idx.jf(), idx.mf(), rates, n))
}

/// Where `dj/dt` changes sign at a fixed `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Boundary {
    /// The continuous cooperation number of the `dj/dt = 0` locus.
    Locus(f64),
    /// `dj/dt < 0` for every `j >= 0` at this `m`.
    NoBoundary,
}

impl Boundary {
    pub fn locus(self) -> Option<f64> {
        match self {
            Boundary::Locus(j) => Some(j),
            Boundary::NoBoundary => None,
        }
    }
}

/// The `dj/dt = 0` locus at height `m`: the non-negative root of
/// `j^2 + j = [gD (m^2 + N/2) + gL (N - (N-1)m - m^2)] / (gD + gL)`.
///
/// Below the locus `dj/dt > 0`, above it `dj/dt < 0`.
pub fn boundary_j(m: f64, rates: &RateSet, n: u32) -> Result<Boundary> {
    let (gd, gl) = (rates.gamma_d, rates.gamma_l);
    if gd + gl <= 0.0 {
        return Err(Error::Domain(
            "the dj/dt = 0 locus needs gamma_D + gamma_L > 0".into(),
        ));
    }
    let nf = n as f64;
    let rhs = (gd * (m * m + nf / 2.0) + gl * (nf - (nf - 1.0) * m - m * m)) / (gd + gl);
    if rhs < 0.0 {
        return Ok(Boundary::NoBoundary);
    }
    Ok(Boundary::Locus(0.5 * (-1.0 + (1.0 + 4.0 * rhs).sqrt())))
}

/// Pure-superfluorescence delay time `ln(N) / (N gamma_S)`; needs `N >= 2`.
pub fn delay_time_pure(n: u64, gamma_s: f64) -> f64 {
    let nf = n as f64;
    nf.ln() / (nf * gamma_s)
}

/// Dephasing rate above which the burst is suppressed,
/// `gamma_S N / sqrt(ln N)`; needs `N >= 2`.
pub fn dephasing_threshold(n: u64, gamma_s: f64) -> f64 {
    let nf = n as f64;
    gamma_s * nf / nf.ln().sqrt()
}
