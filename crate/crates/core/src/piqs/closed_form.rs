//! Transition rates between Dicke states, per unit channel strength.
//!
//! With `L[O] rho = 2 O rho O^dag - ...` and prefactor `gamma/2`, a channel
//! with jump operators `O_k` moves probability from `|j m>` to `|j' m'>` at
//! `gamma * (1/D_j) sum_{alpha, alpha', k} |<j' m' alpha'| O_k |j m alpha>|^2`.
//! The functions below give that quantity for `gamma = 1`:
//!
//! | channel | destination      | rate |
//! |---------|------------------|------|
//! | S       | `(j, m-1)`       | `(j+m)(j-m+1)` |
//! | L       | `(j, m-1)`       | `(N/2+1)(j+m)(j-m+1) / (2j(j+1))` |
//! | L       | `(j-1, m-1)`     | `(N/2+j+1)(j+m)(j+m-1) / (2j(2j+1))` |
//! | L       | `(j+1, m-1)`     | `(N/2-j)(j-m+1)(j-m+2) / (2(j+1)(2j+1))` |
//! | D       | `(j+1, m)`       | `(N/2-j)(j-m+1)(j+m+1) / (2(2j+1)(j+1))` |
//! | D       | `(j-1, m)`       | `(N/2+j+1)(j-m)(j+m) / (2j(2j+1))` |
//!
//! Dephasing also returns a state to itself at rate `m^2 (N/2+1)/(2 j(j+1))`
//! (zero at `j = 0`), which has no effect on populations and is left out.
//! Terms whose denominators vanish at `j = 0` carry a vanishing numerator and
//! are taken as zero.

use crate::dicke::{DickeIndex, HalfInt};
use crate::error::{Error, Result};
use crate::rates::Channel;

/// All population-changing destinations of `from`, with unit-strength rates.
/// Only valid destinations with a positive rate are listed.
pub fn transitions(n: u32, from: DickeIndex, channel: Channel) -> Vec<(DickeIndex, f64)> {
    let nf = n as f64;
    let (j, m) = (from.jf(), from.mf());
    let half_n = nf / 2.0;
    let mut out = Vec::with_capacity(3);
    let mut push = |dj: i64, dm: i64, rate: f64| {
        if rate > 0.0 {
            let to = DickeIndex {
                j: from.j + HalfInt::from_int(dj),
                m: from.m + HalfInt::from_int(dm),
            };
            debug_assert!(to.check(n).is_ok(), "{from} -> {to}");
            out.push((to, rate));
        }
    };
    let lower = (j + m) * (j - m + 1.0);
    match channel {
        Channel::S => push(0, -1, lower),
        Channel::L => {
            if j > 0.0 {
                push(0, -1, (half_n + 1.0) * lower / (2.0 * j * (j + 1.0)));
                push(-1, -1, (half_n + j + 1.0) * (j + m) * (j + m - 1.0) / (2.0 * j * (2.0 * j + 1.0)));
            }
            push(1, -1, (half_n - j) * (j - m + 1.0) * (j - m + 2.0) / (2.0 * (j + 1.0) * (2.0 * j + 1.0)));
        }
        Channel::D => {
            push(1, 0, (half_n - j) * (j - m + 1.0) * (j + m + 1.0) / (2.0 * (2.0 * j + 1.0) * (j + 1.0)));
            if j > 0.0 {
                push(-1, 0, (half_n + j + 1.0) * (j - m) * (j + m) / (2.0 * j * (2.0 * j + 1.0)));
            }
        }
    }
    out
}

/// Rate of a single transition `from -> to` in `channel`, per unit strength.
///
/// Errors when `to` is not a destination the channel can reach from `from`
/// (the structural pattern), or either index is invalid for `n`.
pub fn channel_rate_closed_form(n: u32, from: DickeIndex, to: DickeIndex, channel: Channel) -> Result<f64> {
    from.check(n)?;
    to.check(n)?;
    let dj = (to.j - from.j).doubled();
    let dm = (to.m - from.m).doubled();
    let allowed = match channel {
        Channel::S => dj == 0 && dm == -2,
        Channel::L => dj.abs() <= 2 && dm == -2,
        Channel::D => (dj == 2 || dj == -2) && dm == 0,
    };
    if !allowed {
        return Err(Error::Domain(format!(
            "channel {channel:?} has no transition {from} -> {to}"
        )));
    }
    Ok(transitions(n, from, channel)
        .into_iter()
        .find(|(d, _)| *d == to)
        .map_or(0.0, |(_, r)| r))
}

/// Total unit-strength jump rate out of `from`, including returns to itself.
pub fn total_outflow(n: u32, from: DickeIndex, channel: Channel) -> f64 {
    let (j, m) = (from.jf(), from.mf());
    match channel {
        Channel::S => (j + m) * (j - m + 1.0),
        Channel::L => m + n as f64 / 2.0,
        Channel::D => n as f64 / 4.0,
    }
}
