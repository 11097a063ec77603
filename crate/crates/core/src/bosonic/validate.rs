use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{bright_decay_rate, evolve_bright_dark, map_exact, BosonicPath, BrightDarkState};
use crate::dicke::{DickeIndex, HalfInt};
use crate::error::{Error, Result};
use crate::fit::exponential_rate;
use crate::piqs::{evolve_populations, initial_dicke_state, PiqsOptions};
use crate::rates::RateSet;
use crate::series::{Observable, SeriesMeta, TimeSeries};

/// How a full population trajectory becomes `(n_b, n_d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PopulationMap {
    /// The exact map averaged over the populations: `n_b = <J+J->/N`.
    PopulationWeighted,
    /// The exact map at the mean point `(j(t), <Jz>)`, with `j(t)` the
    /// non-negative root of `j(j+1) = <J^2>`.
    MeanTrajectory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    /// Largest accepted excitation fraction `k/N`.
    pub max_fraction: f64,
    /// Accepted relative deviation.
    pub tolerance: f64,
    pub map: PopulationMap,
    pub piqs: PiqsOptions,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            max_fraction: 0.05,
            tolerance: 0.05,
            map: PopulationMap::PopulationWeighted,
            piqs: PiqsOptions::with_rtol(1e-10),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DeviationSummary {
    pub nb: f64,
    pub nd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BosonicReport {
    pub n: u32,
    pub excitations: u32,
    pub rates: RateSet,
    pub map: PopulationMap,
    pub tolerance: f64,
    pub max_abs_deviation: DeviationSummary,
    /// Largest pointwise deviation over the peak of the reduced trajectory
    /// (floored at `1/N`).
    pub relative_deviation: DeviationSummary,
    /// Peak dark population reached in the full model.
    pub max_full_dark: f64,
    /// Decay rate of `n_b` fitted on the full trajectory.
    pub fitted_bright_rate: Option<f64>,
    pub predicted_bright_rate: f64,
    pub passed: bool,
    /// Observable name to the file holding it, filled in by [`save`](Self::save).
    #[serde(default)]
    pub series: BTreeMap<String, String>,
    #[serde(skip)]
    pub full: Option<TimeSeries>,
    #[serde(skip)]
    pub reduced: Option<TimeSeries>,
}

impl BosonicReport {
    /// Writes `full.csv`, `reduced.csv` and `report.json` into `dir`.
    pub fn save(&mut self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (label, series) in [("full", &self.full), ("reduced", &self.reduced)] {
            if let Some(s) = series {
                let path = dir.join(format!("{label}.csv"));
                s.save_csv(&path)?;
                for obs in [Observable::Nb, Observable::Nd] {
                    self.series
                        .insert(format!("{label}.{}", obs.name()), path.display().to_string());
                }
            }
        }
        let file = std::fs::File::create(dir.join("report.json"))?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }
}

fn invert_j2(j2: f64) -> f64 {
    if j2 < 0.0 {
        log::warn!("negative <J^2> = {j2} clamped to zero");
    }
    0.5 * (-1.0 + (1.0 + 4.0 * j2.max(0.0)).sqrt())
}

/// Runs the population solver from `(N/2, -N/2 + k)` and compares the mapped
/// trajectory with the bright/dark rate equations.
pub fn validate_against_full(
    n: u32,
    k: u32,
    rates: &RateSet,
    t_grid: &[f64],
    options: &ValidationOptions,
) -> Result<BosonicReport> {
    if k == 0 || k as f64 > options.max_fraction * n as f64 {
        return Err(Error::Domain(format!(
            "{k} excitations on {n} emitters is outside the dilute regime (k/N <= {})",
            options.max_fraction
        )));
    }
    let start = DickeIndex::new(n, HalfInt::half_of(n), HalfInt::from_doubled(2 * k as i64 - n as i64))?;
    let full = evolve_populations(&initial_dicke_state(n, start)?, rates, t_grid, &options.piqs)?;
    let jz = full.series.require(Observable::Jz)?;
    let j2 = full.series.require(Observable::J2)?;
    let jpjm = full.series.require(Observable::JpJm)?;
    let nf = n as f64;
    let (mut nb_full, mut nd_full) = (Vec::new(), Vec::new());
    for i in 0..t_grid.len() {
        let exc = jz[i] + nf / 2.0;
        let nb = match options.map {
            PopulationMap::PopulationWeighted => jpjm[i] / nf,
            PopulationMap::MeanTrajectory => super::map_exact_at(invert_j2(j2[i]), jz[i], n).0,
        };
        nb_full.push(nb);
        nd_full.push(exc - nb);
    }

    let (b0, d0) = map_exact(start, n)?;
    let reduced = evolve_bright_dark(&BrightDarkState::new(n, b0, d0)?, rates, t_grid, BosonicPath::ClosedForm, 1e-12)?;
    let nb_red = reduced.series.require(Observable::Nb)?;
    let nd_red = reduced.series.require(Observable::Nd)?;

    let deviation = |a: &[f64], b: &[f64]| -> (f64, f64) {
        let abs = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let peak = b.iter().fold(0.0, |m: f64, v| m.max(v.abs())).max(1.0 / nf);
        (abs, abs / peak)
    };
    let (ab, rb) = deviation(&nb_full, nb_red);
    let (ad, rd) = deviation(&nd_full, nd_red);
    let predicted = bright_decay_rate(rates, n);
    let fitted = exponential_rate(t_grid, &nb_full, t_grid[0], t_grid[0] + 5.0 / predicted)
        .ok()
        .map(|(rate, _)| rate);

    let mut meta = SeriesMeta::new("piqs+map", n, rates);
    meta.config = serde_json::json!({ "map": options.map, "k": k });
    let mut full_series = TimeSeries::new(t_grid.to_vec(), meta);
    full_series.push_column(Observable::Nb.name(), nb_full)?;
    full_series.push_column(Observable::Nd.name(), nd_full.clone())?;

    Ok(BosonicReport {
        n,
        excitations: k,
        rates: *rates,
        map: options.map,
        tolerance: options.tolerance,
        max_abs_deviation: DeviationSummary { nb: ab, nd: ad },
        relative_deviation: DeviationSummary { nb: rb, nd: rd },
        max_full_dark: nd_full.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        fitted_bright_rate: fitted,
        predicted_bright_rate: predicted,
        passed: rb <= options.tolerance && rd <= options.tolerance,
        series: BTreeMap::new(),
        full: Some(full_series),
        reduced: Some(reduced.series),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::uniform_grid;

    #[test]
    fn non_dilute_rejected() {
        let grid = uniform_grid(0.1, 5).unwrap();
        let err = validate_against_full(40, 3, &RateSet::new(1.0, 1.0, 1.0), &grid, &ValidationOptions::default());
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn loss_only_single_excitation() {
        let grid = uniform_grid(0.5, 51).unwrap();
        let report =
            validate_against_full(60, 1, &RateSet::new(1.0, 4.0, 0.0), &grid, &ValidationOptions::default()).unwrap();
        assert!(report.relative_deviation.nb < 0.01, "{report:?}");
        assert!(report.max_full_dark < 1.0 / 60.0);
        assert!(report.passed);
    }

    #[test]
    fn report_round_trip() {
        let grid = uniform_grid(0.2, 21).unwrap();
        let mut report =
            validate_against_full(40, 1, &RateSet::new(1.0, 1.0, 5.0), &grid, &ValidationOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        report.save(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        let back: BosonicReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.series.len(), 4);
        assert_eq!(back.relative_deviation, report.relative_deviation);
        assert!(dir.path().join("full.csv").exists());
    }
}
