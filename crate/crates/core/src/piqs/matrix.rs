use std::io::Write;

use super::closed_form::transitions;
use crate::dicke::{dicke_position, dicke_space_len, enumerate_dicke_space, DickeIndex};
use crate::error::Result;
use crate::rates::{Channel, RateSet};

/// Unit-strength generator of one channel, as `(row, col, value)` with the
/// diagonal holding minus the column's off-diagonal sum.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub channel: Channel,
    pub triplets: Vec<(usize, usize, f64)>,
}

/// `A = gS A_S + gL A_L + gD A_D` over the enumerated Dicke space, so that
/// `dp/dt = A p`.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    pub n: u32,
    pub rates: RateSet,
    pub states: Vec<DickeIndex>,
    pub channels: Vec<ChannelMatrix>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

pub fn build_channel_matrix(n: u32, channel: Channel) -> Result<ChannelMatrix> {
    let states = enumerate_dicke_space(n)?;
    let mut triplets = Vec::new();
    for (col, &from) in states.iter().enumerate() {
        let mut out = 0.0;
        for (to, rate) in transitions(n, from, channel) {
            triplets.push((dicke_position(n, to), col, rate));
            out += rate;
        }
        if out > 0.0 {
            triplets.push((col, col, -out));
        }
    }
    Ok(ChannelMatrix { channel, triplets })
}

pub fn build_rate_matrix(n: u32, rates: &RateSet) -> Result<RateMatrix> {
    rates.validate()?;
    let states = enumerate_dicke_space(n)?;
    let channels = Channel::ALL
        .iter()
        .map(|&c| build_channel_matrix(n, c))
        .collect::<Result<Vec<_>>>()?;
    let dim = states.len();
    let mut combined: Vec<(usize, usize, f64)> = channels
        .iter()
        .flat_map(|cm| {
            let g = cm.channel.rate(rates);
            cm.triplets
                .iter()
                .filter(move |_| g != 0.0)
                .map(move |&(r, c, v)| (r, c, g * v))
        })
        .collect();
    combined.sort_by_key(|&(r, c, _)| (r, c));
    let mut row_ptr = vec![0usize; dim + 1];
    let mut cols: Vec<usize> = Vec::with_capacity(combined.len());
    let mut vals: Vec<f64> = Vec::with_capacity(combined.len());
    let mut last = None;
    for (r, c, v) in combined {
        if last == Some((r, c)) {
            *vals.last_mut().unwrap() += v;
        } else {
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
            last = Some((r, c));
        }
    }
    for i in 0..dim {
        row_ptr[i + 1] += row_ptr[i];
    }
    Ok(RateMatrix {
        n,
        rates: *rates,
        states,
        channels,
        row_ptr,
        cols,
        vals,
    })
}

impl RateMatrix {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(0.0, |(_, v)| v)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim()).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// `dp = A p`.
    pub fn apply(&self, p: &[f64], dp: &mut [f64]) {
        for (r, out) in dp.iter_mut().enumerate() {
            *out = self.row(r).map(|(c, v)| v * p[c]).sum();
        }
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.dim()];
        for (_, c, v) in self.triplets() {
            sums[c] += v;
        }
        sums
    }

    /// Text dump: `#`-prefixed header lines, then one `row col value` triplet
    /// per line (zero-based indices into the state list printed in the header,
    /// values with 17 significant digits).
    pub fn write_triplets<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# N = {}", self.n)?;
        writeln!(
            w,
            "# gamma_S = {} gamma_L = {} gamma_D = {}",
            self.rates.gamma_s, self.rates.gamma_l, self.rates.gamma_d
        )?;
        writeln!(w, "# dim = {} nnz = {}", self.dim(), self.nnz())?;
        for (k, s) in self.states.iter().enumerate() {
            writeln!(w, "# state {k} j = {} m = {}", s.j, s.m)?;
        }
        writeln!(w, "# row col value")?;
        for (r, c, v) in self.triplets() {
            writeln!(w, "{r} {c} {v:.16e}")?;
        }
        Ok(())
    }
}

/// Expected dimension of the population space.
pub fn rate_matrix_dim(n: u32) -> usize {
    dicke_space_len(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        let a = build_rate_matrix(50, &RateSet::new(1.0, 0.1, 10.0)).unwrap();
        assert_eq!(a.dim(), 676);
        assert_eq!(rate_matrix_dim(50), 676);
        // at most three destinations per channel, plus the diagonal
        assert!(a.nnz() <= 6 * a.dim());
    }

    #[test]
    fn pure_cascade_has_one_entry_per_state() {
        let n = 9;
        let a = build_rate_matrix(n, &RateSet::new(1.0, 0.0, 0.0)).unwrap();
        let offdiag = a.triplets().filter(|(r, c, _)| r != c).count();
        let bottoms = a.states.iter().filter(|s| s.m == -s.j).count();
        assert_eq!(offdiag, a.dim() - bottoms);
    }

    #[test]
    fn triplet_dump() {
        let a = build_rate_matrix(2, &RateSet::new(1.0, 0.0, 0.0)).unwrap();
        let mut buf = Vec::new();
        a.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), a.nnz());
        assert!(data.contains(&"1 0 2.0000000000000000e0"));
    }
}
