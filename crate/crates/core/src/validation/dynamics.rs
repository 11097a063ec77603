use rayon::prelude::*;

use super::CriterionOutcome;
use crate::analysis::{
    effective_delay_time, refine_delay_time, sweep_phase_diagram, trajectory_jm, DephasingGrid, SweepSpec,
};
use crate::bosonic::{bright_decay_rate, validate_against_full, ValidationOptions};
use crate::dicke::{delay_time_pure, dephasing_threshold};
use crate::error::{Error, Result};
use crate::fit::{exponential_rate, power_law_exponent};
use crate::rates::RateSet;
use crate::run::{run, RunConfig, SolverKind};
use crate::series::{uniform_grid, Observable, TimeSeries};

/// Largest sample, refined by a parabola through its neighbours on a
/// uniform grid; returns `(t, value)`.
pub fn peak(t: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let (i, _) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Series("empty series".into()))?;
    if i == 0 || i + 1 == y.len() {
        return Ok((t[i], y[i]));
    }
    let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
    let curv = a - 2.0 * b + c;
    if curv >= 0.0 {
        return Ok((t[i], b));
    }
    let delta = 0.5 * (a - c) / curv;
    let h = t[i + 1] - t[i];
    Ok((t[i] + delta * h, b - 0.25 * (a - c) * delta))
}

fn solve(solver: SolverKind, n: u32, rates: RateSet, t_max: f64, samples: usize, rtol: f64) -> Result<TimeSeries> {
    let mut config = RunConfig::new(solver, n, rates, t_max);
    config.samples = samples;
    config.rtol = rtol;
    run(&config)
}

/// Burst time and peak-intensity scaling without dephasing or loss.
pub fn pure_superfluorescence() -> Result<CriterionOutcome> {
    let rates = RateSet::new(1.0, 0.0, 0.0);
    let sizes: [(u32, SolverKind); 4] = [
        (50, SolverKind::Piqs),
        (100, SolverKind::Piqs),
        (200, SolverKind::Piqs),
        (400, SolverKind::Cumulant(2)),
    ];
    let peaks = sizes
        .par_iter()
        .map(|&(n, solver)| {
            let t_d = delay_time_pure(n as u64, 1.0);
            let s = solve(solver, n, rates, 4.0 * t_d, 1601, 1e-10)?;
            peak(&s.t, s.require(Observable::JpJm)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut passed = true;
    let mut detail = String::new();
    for (k, &(n, _)) in sizes.iter().enumerate().take(3).skip(1) {
        let t_d = delay_time_pure(n as u64, 1.0);
        let off = (peaks[k].0 - t_d).abs() / t_d;
        passed &= off <= 0.15;
        detail.push_str(&format!("N={n}: t_peak {:.4} vs t_d {t_d:.4} ({:+.1}%); ", peaks[k].0, 100.0 * (peaks[k].0 / t_d - 1.0)));
    }
    let ns: Vec<f64> = sizes.iter().map(|(n, _)| *n as f64).collect();
    let ip: Vec<f64> = peaks.iter().map(|p| p.1).collect();
    let exponent = power_law_exponent(&ns, &ip)?;
    passed &= (exponent - 2.0).abs() <= 0.1;
    detail.push_str(&format!(
        "I_peak {:?}, exponent {exponent:.3} (2 +- 0.1)",
        ip.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>()
    ));
    Ok(CriterionOutcome::new(5, "pure superfluorescence", passed, detail))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Closures against the population solver at `N = 50`, and the incoherent
/// decay at strong dephasing.
pub fn fig2_small_n() -> Result<CriterionOutcome> {
    let n = 50;
    let dephasing = [1.0, 10.0, 100.0];
    let mut passed = true;
    let mut detail = String::new();
    let rows = dephasing
        .par_iter()
        .map(|&gd| {
            let rates = RateSet::new(1.0, 0.1, gd);
            let t_max = 3.0 * rates.t0();
            let scaled = |solver| -> Result<TimeSeries> {
                let mut config = RunConfig::new(solver, n, rates, t_max);
                config.samples = 1201;
                config.rtol = 1e-10;
                config.normalize = true;
                run(&config)
            };
            let exact = scaled(SolverKind::Piqs)?;
            let first = scaled(SolverKind::Cumulant(1))?;
            let second = scaled(SolverKind::Cumulant(2))?;
            let jz = exact.require(Observable::Jz)?;
            let e1 = max_abs_diff(first.require(Observable::Jz)?, jz);
            let e2 = max_abs_diff(second.require(Observable::Jz)?, jz);
            Ok((gd, e1, e2, exact, rates))
        })
        .collect::<Result<Vec<_>>>()?;
    for (gd, e1, e2, _, _) in &rows {
        passed &= e2 <= e1;
        detail.push_str(&format!("gD={gd}: Linf first {e1:.3e}, second {e2:.3e}; "));
    }
    let (_, _, _, exact, rates) = rows.last().expect("three rows");
    let t0 = rates.t0();
    let (rate, _) = exponential_rate(&exact.t, exact.require(Observable::JpJm)?, 0.2 * t0, 3.0 * t0)?;
    let want = rates.gamma_s + rates.gamma_l;
    let off = (rate - want).abs() / want;
    passed &= off <= 0.10;
    detail.push_str(&format!("gD=100 decay rate {rate:.4} vs {want} ({:+.1}%)", 100.0 * (rate / want - 1.0)));
    Ok(CriterionOutcome::new(6, "small-N closures", passed, detail))
}

/// First- against second-order closure at growing `N`.
pub fn closure_convergence() -> Result<CriterionOutcome> {
    let rates = RateSet::new(1.0, 10.0, 100.0);
    let sizes = [100u32, 1_000, 10_000];
    let gaps = sizes
        .par_iter()
        .map(|&n| {
            let t_max = 5.0 * rates.t0();
            let scaled = |order| -> Result<TimeSeries> {
                let mut config = RunConfig::new(SolverKind::Cumulant(order), n, rates, t_max);
                config.samples = 2001;
                config.rtol = 1e-10;
                config.normalize = true;
                run(&config)
            };
            let (a, b) = (scaled(1)?, scaled(2)?);
            let mut gap: f64 = 0.0;
            for obs in [Observable::Jz, Observable::J2, Observable::JpJm] {
                gap = gap.max(max_abs_diff(a.require(obs)?, b.require(obs)?));
            }
            Ok(gap)
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = gaps.windows(2).all(|w| w[1] < w[0]);
    let detail = sizes
        .iter()
        .zip(&gaps)
        .map(|(n, g)| format!("N={n}: {g:.3e}"))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(CriterionOutcome::new(7, "large-N closure agreement", passed, format!("max normalized gap {detail}")))
}

/// Where a monotone row crosses `target`, interpolated in `ln x`.
fn crossing_log(x: &[f64], y: &[f64], target: f64) -> Option<f64> {
    for k in 1..y.len() {
        let (a, b) = (y[k - 1] - target, y[k] - target);
        if a == 0.0 {
            return Some(x[k - 1]);
        }
        if a * b < 0.0 || b == 0.0 {
            let f = a / (a - b);
            return Some((x[k - 1].ln() + f * (x[k].ln() - x[k - 1].ln())).exp());
        }
    }
    None
}

/// Delay times on a 6 x 6 grid around the dephasing threshold.
pub fn crossover_grid() -> Result<CriterionOutcome> {
    let n_grid: Vec<u32> = (0..6).map(|k| (100.0 * 10f64.powf(k as f64 / 5.0)).round() as u32).collect();
    let relative: Vec<f64> = (0..6).map(|k| 10f64.powf(-1.0 + 2.0 * k as f64 / 5.0)).collect();
    let spec = SweepSpec::new(
        n_grid.clone(),
        DephasingGrid::RelativeToThreshold(relative.clone()),
        1.0,
        10.0,
        SolverKind::Cumulant(2),
    );
    let rows = sweep_phase_diagram(&spec)?;
    let mut passed = true;
    let mut detail = String::new();
    for (i, &n) in n_grid.iter().enumerate() {
        let row = &rows[i * relative.len()..(i + 1) * relative.len()];
        let Some(t_eff) = row.iter().map(|r| r.t_d_eff).collect::<Option<Vec<f64>>>() else {
            passed = false;
            detail.push_str(&format!("N={n}: delay not found; "));
            continue;
        };
        let t_d = row[0].t_d;
        let half_life = std::f64::consts::LN_2 * row[0].t0;
        let low = (t_eff[0] - t_d).abs() / t_d;
        let high = (t_eff[t_eff.len() - 1] - half_life).abs() / half_life;
        let gd: Vec<f64> = row.iter().map(|r| r.gamma_d).collect();
        let star = dephasing_threshold(n as u64, 1.0);
        let mid = crossing_log(&gd, &t_eff, 0.5 * (t_d + half_life));
        let mid_ok = mid.is_some_and(|g| g / star <= 3.0 && star / g <= 3.0);
        passed &= low <= 0.3 && high <= 0.3 && mid_ok;
        detail.push_str(&format!(
            "N={n}: low end {:+.0}% of t_d, high end {:+.0}% of ln2 t0, midpoint {}; ",
            100.0 * (t_eff[0] / t_d - 1.0),
            100.0 * (t_eff[t_eff.len() - 1] / half_life - 1.0),
            match mid {
                Some(g) => format!("{:.2} gD*", g / star),
                None => "none".into(),
            }
        ));
    }
    Ok(CriterionOutcome::new(8, "phase-diagram crossover", passed, detail.trim_end_matches("; ").into()))
}

/// Path through the triangle for `N = 1000` at strong dephasing and loss.
pub fn trajectory_endpoint() -> Result<CriterionOutcome> {
    let n = 1000;
    let rates = RateSet::new(1.0, 10.0, 100.0);
    let t0 = rates.t0();
    let mut config = RunConfig::new(SolverKind::Cumulant(2), n, rates, 3.0 * t0);
    config.samples = 3001;
    config.rtol = 1e-10;
    let series = run(&config)?;
    let t_eff = refine_delay_time(&config, effective_delay_time(&series)?)?
        .time()
        .ok_or_else(|| Error::Series("no half-filling crossing".into()))?;
    let tr = trajectory_jm(&series)?;
    let nf = n as f64;
    let depth = tr.j.iter().map(|j| nf / 2.0 - j).fold(f64::NEG_INFINITY, f64::max);
    let dark = tr
        .t
        .iter()
        .zip(tr.j.iter().zip(&tr.m))
        .filter(|(t, _)| **t >= t_eff)
        .map(|(_, (j, m))| j + m)
        .fold(f64::INFINITY, f64::min);
    let passed = t_eff <= t0 / 5.0 && depth > 0.05 * nf && dark < 0.05 * nf;
    Ok(CriterionOutcome::new(
        9,
        "trajectory endpoint",
        passed,
        format!(
            "t_d_eff {t_eff:.4e} = t0/{:.1}; max N/2 - j = {depth:.1} (> {:.0}); min j + m after t_d_eff = {dark:.2} (< {:.0})",
            t0 / t_eff,
            0.05 * nf,
            0.05 * nf
        ),
    ))
}

/// Single bright excitation on 200 emitters against the full populations.
pub fn dilute_limit() -> Result<CriterionOutcome> {
    let n = 200;
    let rates = RateSet::new(1.0, 10.0, 100.0);
    let grid = uniform_grid(0.3, 3001)?;
    let opts = ValidationOptions::default();
    let report = validate_against_full(n, 1, &rates, &grid, &opts)?;
    let predicted = bright_decay_rate(&rates, n);
    let fitted = report
        .fitted_bright_rate
        .ok_or_else(|| Error::Series("bright population could not be fitted".into()))?;
    let rate_off = (fitted - predicted).abs() / predicted;
    let nd_off = report.relative_deviation.nd;

    let quiet = RateSet::new(1.0, 10.0, 0.0);
    let quiet_report = validate_against_full(n, 1, &quiet, &grid, &opts)?;
    let dark = quiet_report.max_full_dark;

    let passed = rate_off <= 0.02 && nd_off <= 0.05 && dark < 1.0 / n as f64;
    Ok(CriterionOutcome::new(
        10,
        "bosonic dilute limit",
        passed,
        format!(
            "bright rate {fitted:.3} vs {predicted} ({:+.2}%); n_d deviation {:.2}%; dark population without dephasing {dark:.2e} (< {:.0e})",
            100.0 * (fitted / predicted - 1.0),
            100.0 * nd_off,
            1.0 / n as f64
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabolic_peak() {
        let t: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.0 - (t - 0.437).powi(2)).collect();
        let (tp, yp) = peak(&t, &y).unwrap();
        assert!((tp - 0.437).abs() < 1e-12 && (yp - 2.0).abs() < 1e-12);
    }

    #[test]
    fn log_crossing() {
        let x = [1.0, 10.0, 100.0];
        let y = [0.0, 1.0, 2.0];
        assert!((crossing_log(&x, &y, 1.5).unwrap() - 10f64.powf(1.5)).abs() < 1e-9);
        assert!(crossing_log(&x, &y, 3.0).is_none());
    }
}
