//! Least-squares helpers for rates and power laws.

use crate::error::{Error, Result};

/// Straight-line fit `y = a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let n = x.len() as f64;
    if x.len() < 2 {
        return Err(Error::Domain("a line needs at least two points".into()));
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("abscissae are all equal".into()));
    }
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}

/// Fits `y = A exp(-rate t)` through `ln y` over samples with `t` in
/// `[t_lo, t_hi]` and `y > 0`; returns `(rate, A)`.
pub fn exponential_rate(t: &[f64], y: &[f64], t_lo: f64, t_hi: f64) -> Result<(f64, f64)> {
    let (xs, ls): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(y)
        .filter(|(t, y)| **t >= t_lo && **t <= t_hi && **y > 0.0)
        .map(|(t, y)| (*t, y.ln()))
        .unzip();
    let (a, b) = linear_fit(&xs, &ls)?;
    Ok((-b, a.exp()))
}

/// Exponent of `y = c x^p` by a log-log fit.
pub fn power_law_exponent(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.iter().chain(y).any(|v| *v <= 0.0) {
        return Err(Error::Domain("power-law fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Ok(linear_fit(&lx, &ly)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_data() {
        let t: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|t| 3.0 * (-1.7 * t).exp()).collect();
        let (rate, amp) = exponential_rate(&t, &y, 0.0, 10.0).unwrap();
        assert!((rate - 1.7).abs() < 1e-12 && (amp - 3.0).abs() < 1e-12);
        let x = [1.0, 2.0, 4.0, 8.0];
        let p: Vec<f64> = x.iter().map(|x: &f64| 0.5 * x.powf(2.0)).collect();
        assert!((power_law_exponent(&x, &p).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(linear_fit(&[1.0], &[2.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_err());
        assert!(exponential_rate(&[0.0, 1.0], &[1.0, 0.5], 5.0, 6.0).is_err());
    }
}
