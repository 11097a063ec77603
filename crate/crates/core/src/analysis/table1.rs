//! Exact derivatives at the characteristic points of the triangle next to
//! their leading-order forms.

use std::fmt::Write as _;

use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::moments::{rational, NPoly, Rational};
use crate::rates::Channel;

/// Size at which the leading forms are checked numerically.
pub const TABLE1_N: u32 = 400;

/// `a N + b` from two fractions.
fn lin(a: (i64, i64), b: (i64, i64)) -> NPoly {
    NPoly::linear(rational(a.0, a.1), rational(b.0, b.1))
}

fn neg(p: &NPoly) -> NPoly {
    p.scale(&rational(-1, 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Derivative {
    #[serde(rename = "dm/dt")]
    Dm,
    #[serde(rename = "dj/dt")]
    Dj,
}

impl Derivative {
    pub fn label(self) -> &'static str {
        match self {
            Derivative::Dm => "dm/dt",
            Derivative::Dj => "dj/dt",
        }
    }
}

struct PointSpec {
    symbol: &'static str,
    state: &'static str,
    j: NPoly,
    m: NPoly,
    /// Leading coefficient of each rate, per derivative, and whether the
    /// entry is exact.
    entries: Vec<(Derivative, Vec<(Channel, NPoly)>, bool)>,
}

fn points() -> Vec<PointSpec> {
    let n = |a: i64, d: i64| lin((a, d), (0, 1));
    let c = |a: i64, d: i64| lin((0, 1), (a, d));
    let n2 = |a: i64, d: i64| {
        let q = lin((1, 1), (0, 1));
        q.mul(&q).scale(&rational(a, d))
    };
    vec![
        PointSpec {
            symbol: "open circle",
            state: "|N/2, N/2>",
            j: n(1, 2),
            m: n(1, 2),
            entries: vec![
                (Derivative::Dm, vec![(Channel::S, n(-1, 1)), (Channel::L, n(-1, 1))], true),
                (Derivative::Dj, vec![(Channel::L, n(-1, 1))], false),
            ],
        },
        PointSpec {
            symbol: "filled square",
            state: "|N/4, N/4>",
            j: n(1, 4),
            m: n(1, 4),
            entries: vec![
                (Derivative::Dm, vec![(Channel::S, n(-1, 2)), (Channel::L, n(-3, 4))], false),
                (Derivative::Dj, vec![(Channel::D, c(1, 2)), (Channel::L, n(-3, 4))], false),
            ],
        },
        PointSpec {
            symbol: "dotted circle",
            state: "|N/2, 0>",
            j: n(1, 2),
            m: c(0, 1),
            entries: vec![
                (Derivative::Dm, vec![(Channel::S, n2(-1, 4)), (Channel::L, n(-1, 2))], false),
                (Derivative::Dj, vec![(Channel::D, n(-1, 4)), (Channel::L, n(-1, 4))], false),
            ],
        },
        PointSpec {
            symbol: "star",
            state: "|0, 0>",
            j: c(0, 1),
            m: c(0, 1),
            entries: vec![
                (Derivative::Dm, vec![(Channel::L, n(-1, 2))], true),
                (Derivative::Dj, vec![(Channel::D, n(1, 2)), (Channel::L, n(1, 1))], true),
            ],
        },
        PointSpec {
            symbol: "open square",
            state: "|N/4, -N/4>",
            j: n(1, 4),
            m: n(-1, 4),
            entries: vec![
                (Derivative::Dm, vec![(Channel::L, n(-1, 4))], true),
                (Derivative::Dj, vec![(Channel::D, c(1, 2)), (Channel::L, n(1, 4))], false),
            ],
        },
    ]
}

/// Exact `(numerator, denominator)` of one channel's contribution, per unit rate.
fn exact_form(j: &NPoly, m: &NPoly, d: Derivative, ch: Channel) -> (NPoly, NPoly) {
    let nn = lin((1, 1), (0, 1));
    let half_n = lin((1, 2), (0, 1));
    let one = NPoly::int(1);
    let jj = j.mul(j).add(j);
    let mm = m.mul(m);
    let width = j.scale(&rational(2, 1)).add(&one);
    match (d, ch) {
        (Derivative::Dm, Channel::S) => (neg(&jj.add(&neg(&mm)).add(m)), one),
        (Derivative::Dm, Channel::L) => (neg(&m.add(&half_n)), one),
        (Derivative::Dm, Channel::D) => (NPoly::zero(), one),
        (Derivative::Dj, Channel::S) => (NPoly::zero(), one),
        (Derivative::Dj, Channel::D) => (neg(&jj.add(&neg(&mm)).add(&neg(&half_n))), width),
        (Derivative::Dj, Channel::L) => {
            let loss = jj
                .add(&nn.add(&NPoly::int(-1)).mul(m))
                .add(&mm)
                .add(&neg(&nn));
            (neg(&loss), width)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Entry {
    pub channel: Channel,
    pub leading: String,
    pub exact: String,
    pub exact_at_n: f64,
    pub leading_at_n: f64,
    pub relative_error: f64,
    pub within_tolerance: bool,
    /// The leading form equals the exact expression identically.
    pub identical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Cell {
    pub symbol: String,
    pub state: String,
    pub derivative: Derivative,
    pub expected_exact: bool,
    pub entries: Vec<Table1Entry>,
}

impl Table1Cell {
    pub fn passed(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.within_tolerance && (!self.expected_exact || e.identical))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Report {
    pub n: u32,
    /// Accepted relative error of a leading form, `2/N`.
    pub tolerance: f64,
    pub cells: Vec<Table1Cell>,
}

fn render(num: &NPoly, den: &NPoly) -> String {
    if *den == NPoly::int(1) {
        num.to_string()
    } else {
        format!("({num}) / ({den})")
    }
}

/// Builds the table at `N =` [`TABLE1_N`], with exact rational arithmetic.
pub fn table1_report() -> Table1Report {
    table1_report_at(TABLE1_N)
}

pub fn table1_report_at(n: u32) -> Table1Report {
    let nr = rational(n as i64, 1);
    let tol = rational(2, n as i64);
    let mut cells = Vec::new();
    for point in points() {
        for (derivative, leading, expected_exact) in &point.entries {
            let entries = leading
                .iter()
                .map(|(ch, lead)| {
                    let (num, den) = exact_form(&point.j, &point.m, *derivative, *ch);
                    let exact_val: Rational = num.eval_exact(&nr) / den.eval_exact(&nr);
                    let lead_val = lead.eval_exact(&nr);
                    let rel = if lead_val.is_zero() {
                        exact_val.abs()
                    } else {
                        ((&exact_val - &lead_val) / &lead_val).abs()
                    };
                    Table1Entry {
                        channel: *ch,
                        leading: lead.to_string(),
                        exact: render(&num, &den),
                        exact_at_n: exact_val.to_f64().unwrap_or(f64::NAN),
                        leading_at_n: lead_val.to_f64().unwrap_or(f64::NAN),
                        relative_error: rel.to_f64().unwrap_or(f64::NAN),
                        within_tolerance: rel <= tol,
                        identical: num == lead.mul(&den),
                    }
                })
                .collect();
            cells.push(Table1Cell {
                symbol: point.symbol.into(),
                state: point.state.into(),
                derivative: *derivative,
                expected_exact: *expected_exact,
                entries,
            });
        }
    }
    Table1Report {
        n,
        tolerance: 2.0 / n as f64,
        cells,
    }
}

impl Table1Report {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(Table1Cell::passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "characteristic-point derivatives, per unit rate; checked at N = {}", self.n);
        for cell in &self.cells {
            let _ = writeln!(
                out,
                "{} {} {}{}: {}",
                cell.symbol,
                cell.state,
                cell.derivative.label(),
                if cell.expected_exact { " (exact)" } else { "" },
                if cell.passed() { "ok" } else { "MISMATCH" }
            );
            for e in &cell.entries {
                let _ = writeln!(
                    out,
                    "    g{:?}: leading {} | exact {} | at N: {:.10e} vs {:.10e}, rel. error {:.3e} (limit {:.3e}){}",
                    e.channel,
                    e.leading,
                    e.exact,
                    e.exact_at_n,
                    e.leading_at_n,
                    e.relative_error,
                    self.tolerance,
                    if e.identical { ", identical" } else { "" }
                );
            }
        }
        out
    }
}
