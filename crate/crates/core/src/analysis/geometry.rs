use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dicke::{boundary_j, Boundary};
use crate::error::{Error, Result};
use crate::rates::RateSet;
use crate::series::{fmt_float, Observable, TimeSeries};

/// Path of the mean state through the triangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n: u64,
    pub t: Vec<f64>,
    pub j: Vec<f64>,
    pub m: Vec<f64>,
}

/// `m = <Jz>` and `j` the non-negative root of `j(j+1) = <J^2>`.
pub fn trajectory_jm(series: &TimeSeries) -> Result<Trajectory> {
    let raw = series.to_raw()?;
    let jz = raw.require(Observable::Jz)?;
    let j2 = raw.require(Observable::J2)?;
    let j = j2
        .iter()
        .map(|&c| {
            if c < 0.0 {
                log::warn!("negative <J^2> = {c} clamped to zero");
            }
            0.5 * (-1.0 + (1.0 + 4.0 * c.max(0.0)).sqrt())
        })
        .collect();
    Ok(Trajectory {
        n: raw.meta.n,
        t: raw.t.clone(),
        j,
        m: jz.to_vec(),
    })
}

impl Trajectory {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "j", "m"])?;
        for k in 0..self.t.len() {
            out.write_record([fmt_float(self.t[k]), fmt_float(self.j[k]), fmt_float(self.m[k])])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// One sample of the emission-rate map; `value` is `None` outside the triangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldPoint {
    pub j: f64,
    pub m: f64,
    pub value: Option<f64>,
}

/// `gamma_S (j^2 + j - m^2 + m) / (N^2 gamma_S)` on a `resolution x resolution`
/// grid over `j in [0, N/2]`, `m in [-N/2, N/2]`, `j` outer.
pub fn emission_field(n: u32, gamma_s: f64, resolution: usize) -> Result<Vec<FieldPoint>> {
    if resolution < 2 {
        return Err(Error::Domain("field resolution must be at least 2".into()));
    }
    if n == 0 || !(gamma_s > 0.0) {
        return Err(Error::Domain("the field needs N > 0 and gamma_S > 0".into()));
    }
    let half = n as f64 / 2.0;
    let nf = n as f64;
    let step = |k: usize| k as f64 / (resolution - 1) as f64;
    let mut out = Vec::with_capacity(resolution * resolution);
    for a in 0..resolution {
        let j = half * step(a);
        for b in 0..resolution {
            let m = -half + nf * step(b);
            let inside = m.abs() <= j * (1.0 + 1e-12);
            let value = inside.then(|| gamma_s * (j * j + j - m * m + m) / (nf * nf * gamma_s));
            out.push(FieldPoint { j, m, value });
        }
    }
    Ok(out)
}

pub fn write_field_csv<W: Write>(points: &[FieldPoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["j", "m", "rate_over_N2_gamma_S"])?;
    for p in points {
        out.write_record([fmt_float(p.j), fmt_float(p.m), p.value.map(fmt_float).unwrap_or_default()])?;
    }
    out.flush()?;
    Ok(())
}

/// Relative weight of loss and dephasing for one boundary curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossDephasingRatio {
    /// `gamma_L / gamma_D`.
    Ratio(f64),
    PureDephasing,
    PureLoss,
}

impl LossDephasingRatio {
    fn rates(self) -> Result<RateSet> {
        match self {
            LossDephasingRatio::Ratio(r) if r > 0.0 && r.is_finite() => Ok(RateSet::new(0.0, r, 1.0)),
            LossDephasingRatio::Ratio(r) => Err(Error::Domain(format!("ratio must be positive, got {r}"))),
            LossDephasingRatio::PureDephasing => Ok(RateSet::new(0.0, 0.0, 1.0)),
            LossDephasingRatio::PureLoss => Ok(RateSet::new(0.0, 1.0, 0.0)),
        }
    }

    pub fn label(self) -> String {
        match self {
            LossDephasingRatio::Ratio(r) => fmt_float(r),
            LossDephasingRatio::PureDephasing => "0".into(),
            LossDephasingRatio::PureLoss => "inf".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub m: f64,
    /// The `dj/dt = 0` locus, if there is one at this `m`.
    pub j: Option<f64>,
    /// The locus lies in the triangle, `|m| <= j <= N/2`.
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub ratio: LossDephasingRatio,
    pub points: Vec<BoundaryPoint>,
}

/// The `dj/dt = 0` locus at `samples` evenly spaced `m in [-N/2, N/2]` for
/// each ratio.
pub fn boundary_curves(n: u32, ratios: &[LossDephasingRatio], samples: usize) -> Result<Vec<BoundaryCurve>> {
    if samples < 2 {
        return Err(Error::Domain("at least two samples are needed".into()));
    }
    let half = n as f64 / 2.0;
    ratios
        .iter()
        .map(|&ratio| {
            let rates = ratio.rates()?;
            let points = (0..samples)
                .map(|k| {
                    let m = -half + n as f64 * k as f64 / (samples - 1) as f64;
                    let j = match boundary_j(m, &rates, n)? {
                        Boundary::Locus(j) => Some(j),
                        Boundary::NoBoundary => None,
                    };
                    let inside = j.is_some_and(|j| j + 1e-9 >= m.abs() && j <= half + 1e-9);
                    Ok(BoundaryPoint { m, j, inside })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(BoundaryCurve { ratio, points })
        })
        .collect()
}

/// Long format: one row per `(ratio, m)`, with `j` empty where there is no
/// locus.
pub fn write_boundary_csv<W: Write>(curves: &[BoundaryCurve], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["gamma_L_over_gamma_D", "m", "j", "inside"])?;
    for c in curves {
        for p in &c.points {
            out.write_record([
                c.ratio.label(),
                fmt_float(p.m),
                p.j.map(fmt_float).unwrap_or_default(),
                p.inside.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::SeriesMeta;

    #[test]
    fn field_peak_and_diagonal() {
        let n = 200;
        let pts = emission_field(n, 2.0, 201).unwrap();
        let best = pts
            .iter()
            .filter_map(|p| p.value.map(|v| (v, p)))
            .fold((f64::MIN, None), |acc, (v, p)| if v > acc.0 { (v, Some(p)) } else { acc });
        let top = best.1.unwrap();
        assert_eq!(top.j, 100.0);
        assert!(top.m.abs() <= 1.0);
        assert!((best.0 - 0.25).abs() < 0.01);
        for p in &pts {
            if let Some(v) = p.value {
                if (p.m + p.j).abs() < 1e-12 {
                    assert!(v.abs() < 1e-15);
                }
            }
        }
        // (N/4, 0)
        let quarter = pts.iter().find(|p| p.j == 50.0 && p.m == 0.0).unwrap();
        assert!((quarter.value.unwrap() - (2500.0 + 50.0) / 40000.0).abs() < 1e-15);
    }

    #[test]
    fn field_rejects_coarse_grids() {
        assert!(emission_field(10, 1.0, 1).is_err());
    }

    #[test]
    fn loss_widens_the_growth_region() {
        let n = 100;
        let ratios = [
            LossDephasingRatio::Ratio(0.1),
            LossDephasingRatio::Ratio(1.0),
            LossDephasingRatio::Ratio(10.0),
        ];
        let curves = boundary_curves(n, &ratios, 101).unwrap();
        // area with dj/dt > 0 is the part of the triangle below the locus
        let area = |c: &BoundaryCurve| -> f64 {
            c.points
                .iter()
                .map(|p| match p.j {
                    Some(j) => (j.min(50.0) - p.m.abs()).max(0.0),
                    None => 0.0,
                })
                .sum()
        };
        let a: Vec<f64> = curves.iter().map(area).collect();
        assert!(a[0] < a[1] && a[1] < a[2], "{a:?}");
    }

    #[test]
    fn pure_dephasing_locus() {
        let n = 60;
        let curves = boundary_curves(n, &[LossDephasingRatio::PureDephasing, LossDephasingRatio::Ratio(1e-9)], 61).unwrap();
        for (p, q) in curves[0].points.iter().zip(&curves[1].points) {
            let j = p.j.unwrap();
            assert!((j * j + j - p.m * p.m - 30.0).abs() < 1e-9);
            assert!((q.j.unwrap() - j).abs() < 1e-6);
        }
    }

    #[test]
    fn trajectory_of_constant_state() {
        let mut s = TimeSeries::new(vec![0.0, 1.0], SeriesMeta::new("t", 4u32, &RateSet::new(1.0, 0.0, 0.0)));
        s.push_column("Jz", vec![-2.0, -2.0]).unwrap();
        s.push_column("J2", vec![6.0, -1e-14]).unwrap();
        let tr = trajectory_jm(&s).unwrap();
        assert_eq!(tr.j[0], 2.0);
        assert_eq!(tr.j[1], 0.0);
        assert_eq!(tr.m, vec![-2.0, -2.0]);
    }
}
