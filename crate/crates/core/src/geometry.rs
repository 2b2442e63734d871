//! The subsequence index sets along which the limsup statistics are driven,
//! plus their geometric sanity checks: window overlap, window disjointness,
//! gap asymptotics, and the exact cell count of the discrepancy region
//! between an arbitrary window and its anchored bracketing window.
//!
//! Every inequality is evaluated twice: on the real-valued terms (the form
//! in which it is provable) and on the floored terms (the form the lattice
//! actually sees). Both results are reported; nothing is coerced.

use serde::{Deserialize, Serialize};

use crate::lattice::LatticeIndex;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsequenceKind {
    /// (i / log i)^{1/(1-alpha)} with the first two terms pinned to 1, 2.
    Lambda,
    /// i^{beta/(1-alpha)} (log i)^{beta2}.
    LambdaStar,
    /// i^{1/(1-alpha)}.
    A,
    /// i^{beta/(1-alpha)}.
    AStar,
    /// (t_i, ..., t_i) with t_i = i^{beta/(1-alpha)}.
    Diagonal,
    /// (lambda_j, k) for k = 1..rows, two-dimensional.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsequenceSpec {
    pub kind: SubsequenceKind,
    pub d: usize,
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default)]
    pub beta2: f64,
    /// Row count for the boundary set; ignored elsewhere.
    #[serde(default = "one_u64")]
    pub rows: u64,
}

fn one() -> f64 {
    1.0
}

fn one_u64() -> u64 {
    1
}

impl SubsequenceSpec {
    pub fn new(kind: SubsequenceKind, d: usize, alpha: f64) -> Result<Self> {
        let s = Self {
            kind,
            d,
            alpha,
            beta: 1.0,
            beta2: 0.0,
            rows: 1,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_beta2(mut self, beta2: f64) -> Self {
        self.beta2 = beta2;
        self
    }

    pub fn with_rows(mut self, rows: u64) -> Self {
        self.rows = rows;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain("alpha must lie in (0, 1)"));
        }
        if self.d == 0 {
            return Err(Error::Domain("dimension must be >= 1"));
        }
        if self.beta < 1.0 {
            return Err(Error::Domain("beta must be >= 1"));
        }
        if self.kind == SubsequenceKind::Boundary && self.d != 2 {
            return Err(Error::Domain("the boundary set is two-dimensional"));
        }
        Ok(())
    }

    /// i-th term of the one-dimensional coordinate sequence, pre-floor.
    pub fn real_term(&self, i: u64) -> f64 {
        let x = i as f64;
        let inv = 1.0 / (1.0 - self.alpha);
        match self.kind {
            SubsequenceKind::Lambda | SubsequenceKind::Boundary => match i {
                1 => 1.0,
                2 => 2.0,
                _ => (x / x.ln()).powf(inv),
            },
            SubsequenceKind::A => x.powf(inv),
            SubsequenceKind::LambdaStar
            | SubsequenceKind::AStar
            | SubsequenceKind::Diagonal => {
                let core = x.powf(self.beta * inv);
                if self.beta2 == 0.0 || i == 1 {
                    core
                } else {
                    core * x.ln().powf(self.beta2)
                }
            }
        }
    }

    /// Floored term, clamped to >= 1 so it stays a lattice coordinate.
    pub fn term(&self, i: u64) -> u64 {
        (self.real_term(i).floor() as u64).max(1)
    }

    /// All base points of the set with |n| <= budget, deduplicated after
    /// flooring, ordered by increasing |n| with lexicographic tie-break.
    pub fn generate(&self, budget: u64) -> Result<Vec<LatticeIndex>> {
        self.validate()?;
        let mut points: Vec<LatticeIndex> = match self.kind {
            SubsequenceKind::Diagonal => {
                let mut out = Vec::new();
                let mut i = 1u64;
                loop {
                    let t = self.term(i);
                    let mut size = 1u64;
                    let mut ok = true;
                    for _ in 0..self.d {
                        size = match size.checked_mul(t) {
                            Some(s) if s <= budget => s,
                            _ => {
                                ok = false;
                                break;
                            }
                        };
                    }
                    if !ok {
                        if self.real_term(i) > budget as f64 {
                            break;
                        }
                        i += 1;
                        continue;
                    }
                    out.push(LatticeIndex::new(vec![t; self.d])?);
                    i += 1;
                }
                out
            }
            SubsequenceKind::Boundary => {
                let mut out = Vec::new();
                let mut j = 1u64;
                loop {
                    let t = self.term(j);
                    if t > budget {
                        break;
                    }
                    for k in 1..=self.rows {
                        if t.checked_mul(k).is_some_and(|s| s <= budget) {
                            out.push(LatticeIndex::new(vec![t, k])?);
                        }
                    }
                    j += 1;
                }
                out
            }
            _ => {
                let terms = self.terms_up_to(budget);
                let mut out = Vec::new();
                let mut coords = vec![0u64; self.d];
                product_rec(&terms, budget, &mut coords, 0, 1, &mut out)?;
                out
            }
        };
        points.sort_by_key(|p| (p.size_f64() as u64, p.coords().to_vec()));
        points.dedup();
        Ok(points)
    }

    /// Distinct floored terms not exceeding the budget, increasing.
    pub fn terms_up_to(&self, budget: u64) -> Vec<u64> {
        let mut out = Vec::new();
        if budget == 0 {
            return out;
        }
        let mut i = 1u64;
        loop {
            let t = self.term(i);
            if t > budget {
                // terms are nondecreasing in i beyond the pinned prefix
                if i > 2 {
                    break;
                }
            } else if out.last() != Some(&t) {
                out.push(t);
            }
            i += 1;
        }
        out
    }
}

fn product_rec(
    terms: &[u64],
    budget: u64,
    coords: &mut [u64],
    depth: usize,
    size: u64,
    out: &mut Vec<LatticeIndex>,
) -> Result<()> {
    if depth == coords.len() {
        out.push(LatticeIndex::new(coords.to_vec())?);
        return Ok(());
    }
    for &t in terms {
        match size.checked_mul(t) {
            Some(s) if s <= budget => {
                coords[depth] = t;
                product_rec(terms, budget, coords, depth + 1, s, out)?;
            }
            _ => break,
        }
    }
    Ok(())
}

/// Outcome of a scan of a strict inequality over an index range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckReport {
    pub all_hold: bool,
    pub first_failure: Option<u64>,
}

impl CheckReport {
    fn from_scan(mut failures: impl Iterator<Item = u64>) -> Self {
        match failures.next() {
            None => CheckReport {
                all_hold: true,
                first_failure: None,
            },
            Some(i) => CheckReport {
                all_hold: false,
                first_failure: Some(i),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualReport {
    pub real: CheckReport,
    pub floored: CheckReport,
}

/// lambda_i + lambda_i^alpha > lambda_{i+1}: consecutive windows overlap.
pub fn overlap_check(
    spec: &SubsequenceSpec,
    i_range: std::ops::RangeInclusive<u64>,
) -> Result<DualReport> {
    if spec.kind != SubsequenceKind::Lambda {
        return Err(Error::Domain("overlap check applies to the lambda set"));
    }
    if *i_range.start() < 3 {
        return Err(Error::Domain("overlap holds only from i = 3 on"));
    }
    let a = spec.alpha;
    let real = CheckReport::from_scan(i_range.clone().filter(|&i| {
        let t = spec.real_term(i);
        t + t.powf(a) <= spec.real_term(i + 1)
    }));
    let floored = CheckReport::from_scan(i_range.filter(|&i| {
        let t = spec.term(i);
        let w = ((t as f64).powf(a).floor() as u64).max(1);
        t.saturating_add(w) <= spec.term(i + 1)
    }));
    Ok(DualReport { real, floored })
}

/// t_i + t_i^alpha < t_{i+1}: consecutive windows are disjoint.
pub fn disjointness_check(
    spec: &SubsequenceSpec,
    i_range: std::ops::RangeInclusive<u64>,
) -> Result<DualReport> {
    match spec.kind {
        SubsequenceKind::A | SubsequenceKind::AStar | SubsequenceKind::Diagonal => {}
        _ => return Err(Error::Domain("disjointness applies to the power sets")),
    }
    if spec.kind == SubsequenceKind::AStar && spec.beta <= 1.0 {
        return Err(Error::Domain("the starred set needs beta > 1"));
    }
    let a = spec.alpha;
    let real = CheckReport::from_scan(i_range.clone().filter(|&i| {
        let t = spec.real_term(i);
        t + t.powf(a) >= spec.real_term(i + 1)
    }));
    let floored = CheckReport::from_scan(i_range.filter(|&i| {
        let t = spec.term(i);
        let w = ((t as f64).powf(a).floor() as u64).max(1);
        t.saturating_add(w) >= spec.term(i + 1)
    }));
    Ok(DualReport { real, floored })
}

/// Do the floored windows (lambda_i, lambda_i + w_i], i >= 3, chain without
/// gaps? Coverage of the whole stretch reduces to lambda_{i+1} <= lambda_i + w_i.
pub fn window_cover_check(
    spec: &SubsequenceSpec,
    i_range: std::ops::RangeInclusive<u64>,
) -> Result<CheckReport> {
    if spec.kind != SubsequenceKind::Lambda {
        return Err(Error::Domain("cover check applies to the lambda set"));
    }
    let a = spec.alpha;
    Ok(CheckReport::from_scan(i_range.filter(|&i| {
        let t = spec.term(i);
        let w = ((t as f64).powf(a).floor() as u64).max(1);
        spec.term(i + 1) > t.saturating_add(w)
    })))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapStats {
    pub i: u64,
    /// lambda_{i+1} - lambda_i on real-valued terms.
    pub gap: f64,
    /// lambda_{i+1}^alpha - lambda_i^alpha.
    pub width_gap: f64,
    /// (1/(1-alpha)) i^{alpha/(1-alpha)} / (log i)^{1/(1-alpha)}.
    pub predicted_gap: f64,
    pub ratio: f64,
}

pub fn gap_stats(
    spec: &SubsequenceSpec,
    i_range: std::ops::RangeInclusive<u64>,
) -> Result<Vec<GapStats>> {
    if spec.kind != SubsequenceKind::Lambda {
        return Err(Error::Domain("gap stats apply to the lambda set"));
    }
    let a = spec.alpha;
    let inv = 1.0 / (1.0 - a);
    Ok(i_range
        .map(|i| {
            let t0 = spec.real_term(i);
            let t1 = spec.real_term(i + 1);
            let gap = t1 - t0;
            let x = i as f64;
            let predicted_gap = inv * x.powf(a * inv) / x.ln().powf(inv);
            GapStats {
                i,
                gap,
                width_gap: t1.powf(a) - t0.powf(a),
                predicted_gap,
                ratio: gap / predicted_gap,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrepancy {
    /// Exact cell count of the symmetric difference of the two windows.
    pub cardinality: u64,
    /// Real-valued scale m_j^alpha n_k^alpha (1/log j + 1/log k) the count
    /// is measured against (the unnamed constant is not modeled).
    pub bound_scale: f64,
}

/// Cell count of the discrepancy region between the window based at (m, n)
/// and the anchored window based at (m_j, n_k), where (m, n) lies in the
/// bracketing cell [m_j, m_{j+1}] x [n_k, n_{k+1}] of the lambda grid.
pub fn discrepancy_cardinality(
    alpha: f64,
    j: u64,
    k: u64,
    m: u64,
    n: u64,
) -> Result<Discrepancy> {
    if j < 3 || k < 3 {
        return Err(Error::Precondition(
            "bracketing indices must be >= 3".into(),
        ));
    }
    let spec = SubsequenceSpec::new(SubsequenceKind::Lambda, 1, alpha)?;
    let (mj, mj1) = (spec.term(j), spec.term(j + 1));
    let (nk, nk1) = (spec.term(k), spec.term(k + 1));
    if !(mj <= m && m <= mj1 && nk <= n && n <= nk1) {
        return Err(Error::Precondition(format!(
            "({m}, {n}) is outside the bracketing cell [{mj}, {mj1}] x [{nk}, {nk1}]"
        )));
    }
    let width = |x: u64| ((x as f64).powf(alpha).floor() as i128).max(1);
    let (m, n, mj, nk) = (m as i128, n as i128, mj as i128, nk as i128);
    let (am, an, amj, ank) = (width(m as u64), width(n as u64), width(mj as u64), width(nk as u64));
    let card = (m + am - mj - amj) * an
        + (mj + amj - m) * (n + an - nk - ank)
        + amj * (n - nk)
        + (m - mj) * (nk + ank - n);
    let card = u64::try_from(card)
        .map_err(|_| Error::Precondition("negative discrepancy count".into()))?;
    let bound_scale = spec.real_term(j).powf(alpha) * spec.real_term(k).powf(alpha)
        * (1.0 / (j as f64).ln() + 1.0 / (k as f64).ln());
    Ok(Discrepancy {
        cardinality: card,
        bound_scale,
    })
}
