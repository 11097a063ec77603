//! Sampled observables with solver metadata, and their CSV/JSON forms.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::rates::RateSet;

/// Named observable columns, in schema order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observable {
    Jz,
    J2,
    JpJm,
    Jz2,
    Nb,
    Nd,
}

impl Observable {
    pub const ALL: [Observable; 6] = [
        Observable::Jz,
        Observable::J2,
        Observable::JpJm,
        Observable::Jz2,
        Observable::Nb,
        Observable::Nd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::Jz => "Jz",
            Observable::J2 => "J2",
            Observable::JpJm => "JpJm",
            Observable::Jz2 => "Jz2",
            Observable::Nb => "nb",
            Observable::Nd => "nd",
        }
    }
}

/// Columns hold plain expectation values.
pub const NORMALIZATION_RAW: &str = "raw expectation values";
/// `Jz` in units of `N/2`; `J2` and `JpJm` in units of `(N/2)(N/2+1)`;
/// `Jz2` in units of `(N/2)^2`.
pub const NORMALIZATION_SCALED: &str = "Jz/(N/2); J2, JpJm/((N/2)(N/2+1)); Jz2/(N/2)^2";

/// Scale dividing each observable under [`NORMALIZATION_SCALED`].
pub fn observable_scale(obs: Observable, n: u64) -> f64 {
    let half = n as f64 / 2.0;
    match obs {
        Observable::Jz => half,
        Observable::J2 | Observable::JpJm => half * (half + 1.0),
        Observable::Jz2 => half * half,
        Observable::Nb | Observable::Nd => 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub solver: String,
    pub n: u64,
    pub rates: RateSet,
    /// How the columns are scaled; raw expectation values unless stated.
    pub normalization: String,
    pub code_version: String,
    #[serde(default)]
    pub config: Value,
    #[serde(default)]
    pub diagnostics: Map<String, Value>,
}

impl SeriesMeta {
    pub fn new(solver: &str, n: impl Into<u64>, rates: &RateSet) -> Self {
        SeriesMeta {
            solver: solver.to_string(),
            n: n.into(),
            rates: *rates,
            normalization: NORMALIZATION_RAW.into(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            config: Value::Null,
            diagnostics: Map::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
    pub meta: SeriesMeta,
}

impl TimeSeries {
    pub fn new(t: Vec<f64>, meta: SeriesMeta) -> Self {
        TimeSeries {
            t,
            columns: Vec::new(),
            meta,
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn push_column(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.t.len() {
            return Err(Error::DimensionMismatch {
                expected: self.t.len(),
                found: values.len(),
            });
        }
        if name == "t" || self.column(name).is_some() {
            return Err(Error::Series(format!("duplicate column {name}")));
        }
        self.columns.push((name.to_string(), values));
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn observable(&self, obs: Observable) -> Option<&[f64]> {
        self.column(obs.name())
    }

    pub fn require(&self, obs: Observable) -> Result<&[f64]> {
        self.observable(obs)
            .ok_or_else(|| Error::Series(format!("series has no {} column", obs.name())))
    }

    /// The same series with every column expressed as a plain expectation value.
    pub fn to_raw(&self) -> Result<TimeSeries> {
        match self.meta.normalization.as_str() {
            NORMALIZATION_RAW => Ok(self.clone()),
            NORMALIZATION_SCALED => self.rescaled(true),
            other => Err(Error::Series(format!("unknown normalization {other:?}"))),
        }
    }

    /// The same series in the scaled units of [`NORMALIZATION_SCALED`].
    pub fn to_scaled(&self) -> Result<TimeSeries> {
        match self.meta.normalization.as_str() {
            NORMALIZATION_SCALED => Ok(self.clone()),
            NORMALIZATION_RAW => self.rescaled(false),
            other => Err(Error::Series(format!("unknown normalization {other:?}"))),
        }
    }

    fn rescaled(&self, to_raw: bool) -> Result<TimeSeries> {
        let mut out = self.clone();
        for (name, col) in out.columns.iter_mut() {
            let obs = Observable::ALL.iter().find(|o| o.name() == name);
            if let Some(&obs) = obs {
                let s = observable_scale(obs, self.meta.n);
                col.iter_mut().for_each(|v| *v = if to_raw { *v * s } else { *v / s });
            }
        }
        out.meta.normalization = if to_raw { NORMALIZATION_RAW } else { NORMALIZATION_SCALED }.into();
        Ok(out)
    }

    /// Equal column lengths and strictly increasing times.
    pub fn validate(&self) -> Result<()> {
        for (name, col) in &self.columns {
            if col.len() != self.t.len() {
                return Err(Error::Series(format!(
                    "column {name} has {} samples, t has {}",
                    col.len(),
                    self.t.len()
                )));
            }
        }
        if let Some(w) = self.t.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::Series(format!(
                "times not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(())
    }

    /// CSV with one header row, `t` first, 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        self.validate()?;
        let mut out = csv::Writer::from_writer(w);
        let header = std::iter::once("t").chain(self.columns.iter().map(|(n, _)| n.as_str()));
        out.write_record(header)?;
        for (i, t) in self.t.iter().enumerate() {
            let row = std::iter::once(fmt_float(*t))
                .chain(self.columns.iter().map(|(_, c)| fmt_float(c[i])));
            out.write_record(row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Parses CSV written by [`write_csv`](Self::write_csv); metadata is supplied by the caller.
    pub fn read_csv<R: Read>(r: R, meta: SeriesMeta) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("t") {
            return Err(Error::Series("first CSV column must be t".into()));
        }
        let mut t = Vec::new();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); headers.len() - 1];
        for rec in rdr.records() {
            let rec = rec?;
            for (k, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Series(format!("bad float {field:?}")))?;
                if k == 0 {
                    t.push(v);
                } else {
                    cols[k - 1].push(v);
                }
            }
        }
        let mut series = TimeSeries::new(t, meta);
        for (name, col) in headers.iter().skip(1).zip(cols) {
            series.push_column(name, col)?;
        }
        series.validate()?;
        Ok(series)
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        self.validate()?;
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let s: TimeSeries = serde_json::from_reader(r)?;
        s.validate()?;
        Ok(s)
    }

    /// Writes `path` as CSV plus `path.meta.json`.
    pub fn save_csv(&self, path: &Path) -> Result<PathBuf> {
        self.write_csv(BufWriter::new(File::create(path)?))?;
        let meta_path = sidecar_path(path);
        serde_json::to_writer_pretty(BufWriter::new(File::create(&meta_path)?), &self.meta)?;
        Ok(meta_path)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let meta: SeriesMeta =
            serde_json::from_reader(BufReader::new(File::open(sidecar_path(path))?))?;
        Self::read_csv(BufReader::new(File::open(path)?), meta)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Evenly spaced grid `0, t_max/(samples-1), ..., t_max`.
pub fn uniform_grid(t_max: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 || !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::Domain(format!(
            "time grid needs t_max > 0 and at least 2 samples (got {t_max}, {samples})"
        )));
    }
    let last = (samples - 1) as f64;
    Ok((0..samples)
        .map(|i| if i + 1 == samples { t_max } else { t_max * i as f64 / last })
        .collect())
}
