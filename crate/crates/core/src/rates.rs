use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scattering rates of the three dissipative channels plus the transition
/// frequency, all in inverse-time units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    /// Collective spontaneous emission.
    pub gamma_s: f64,
    /// Local nonradiative loss.
    pub gamma_l: f64,
    /// Local pure dephasing.
    pub gamma_d: f64,
    pub omega0: f64,
}

impl RateSet {
    pub fn new(gamma_s: f64, gamma_l: f64, gamma_d: f64) -> Self {
        RateSet {
            gamma_s,
            gamma_l,
            gamma_d,
            omega0: 0.0,
        }
    }

    pub fn with_omega0(mut self, omega0: f64) -> Self {
        self.omega0 = omega0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [
            ("gamma_S", self.gamma_s),
            ("gamma_L", self.gamma_l),
            ("gamma_D", self.gamma_d),
        ] {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::Domain(format!("{name} must be a finite non-negative rate, got {g}")));
            }
        }
        if !self.omega0.is_finite() {
            return Err(Error::Domain("omega0 must be finite".into()));
        }
        Ok(())
    }

    /// As [`validate`](Self::validate), and additionally at least one rate
    /// must be positive.
    pub fn validate_for_evolution(&self) -> Result<()> {
        self.validate()?;
        if self.gamma_s == 0.0 && self.gamma_l == 0.0 && self.gamma_d == 0.0 {
            return Err(Error::Domain("at least one scattering rate must be positive".into()));
        }
        Ok(())
    }

    /// Incoherent decay time `t0 = 1 / (gamma_S + gamma_L)`.
    pub fn t0(&self) -> f64 {
        1.0 / (self.gamma_s + self.gamma_l)
    }
}

/// The dissipative channels of the master equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Channel {
    /// Collective emission, jump operator `J-`.
    S,
    /// Local loss, jump operators `J-,n`.
    L,
    /// Local dephasing, jump operators `Jz,n`.
    D,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::S, Channel::L, Channel::D];

    pub fn rate(self, rates: &RateSet) -> f64 {
        match self {
            Channel::S => rates.gamma_s,
            Channel::L => rates.gamma_l,
            Channel::D => rates.gamma_d,
        }
    }
}
