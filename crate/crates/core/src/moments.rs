//! Borel-Cantelli series bookkeeping: the tail series over the lattice in
//! its divisor-weighted form, the equivalence between its convergence and
//! a moment condition, and the necessity-side running-max statistic.

use serde::{Deserialize, Serialize};

use crate::field::{moment_functional, Distribution, FieldSpec};
use crate::lattice::{CountTable, LatticeIndex};
use crate::numeric::CompensatedSum;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSeriesSpec {
    pub d: usize,
    pub alpha: f64,
    pub kappa: f64,
    pub distribution: Distribution,
    pub j_max: u64,
}

impl TailSeriesSpec {
    pub fn validate(&self) -> Result<()> {
        if self.j_max < 2 {
            return Err(Error::Domain("tail series needs j_max >= 2"));
        }
        if self.alpha <= 0.0 {
            return Err(Error::Domain("tail series needs alpha > 0"));
        }
        if self.d == 0 {
            return Err(Error::Domain("dimension must be >= 1"));
        }
        Ok(())
    }

    /// Threshold j^alpha (log j)^kappa for the inner tail probability.
    pub fn threshold(&self, j: u64) -> f64 {
        let x = j as f64;
        x.powf(self.alpha) * x.ln().powf(self.kappa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailTerm {
    pub j: u64,
    pub dj: u64,
    pub term: f64,
    pub partial_sum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesTrend {
    Converging,
    Diverging,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct TailSeriesResult {
    pub partial_sum: f64,
    /// Ratio of the partial sum at j_max to the one at j_max / 2; near 1
    /// for convergent series, visibly above 1 for divergent ones.
    pub tail_growth: f64,
    /// Analytic verdict from the tail-exponent rule; the partial sums
    /// are corroborating evidence only.
    pub verdict: SeriesTrend,
}

/// Per-j rows of the divisor-weighted series sum_j d(j) P(|X| > threshold(j)).
pub fn tail_series_table(spec: &TailSeriesSpec) -> Result<Vec<TailTerm>> {
    spec.validate()?;
    let table = CountTable::new(spec.d, spec.j_max)?;
    let mut acc = CompensatedSum::new();
    let mut out = Vec::with_capacity(spec.j_max as usize);
    for j in 1..=spec.j_max {
        let term = table.count(j) as f64 * spec.distribution.tail_prob(spec.threshold(j));
        acc.add(term);
        out.push(TailTerm {
            j,
            dj: table.count(j),
            term,
            partial_sum: acc.value(),
        });
    }
    Ok(out)
}

pub fn tail_series(spec: &TailSeriesSpec) -> Result<TailSeriesResult> {
    let rows = tail_series_table(spec)?;
    let at = |j: u64| rows[(j - 1) as usize].partial_sum;
    let half = at(spec.j_max / 2);
    let full = at(spec.j_max);
    let tail_growth = if half > 0.0 { full / half } else { 1.0 };
    let verdict = if analytic_series_converges(spec) {
        SeriesTrend::Converging
    } else {
        SeriesTrend::Diverging
    };
    Ok(TailSeriesResult {
        partial_sum: full,
        tail_growth,
        verdict,
    })
}

/// Convergence of sum_j d(j) P(|X| > j^alpha (log j)^kappa), decided from
/// the tail exponent alone. d(j) contributes (log j)^{d-1} on average, so
/// with a polynomial tail x^{-t} the series behaves like
/// sum j^{-alpha t} (log j)^{d-1-kappa t}: convergent iff alpha t > 1, or
/// alpha t = 1 and kappa t - (d - 1) > 1.
fn analytic_series_converges(spec: &TailSeriesSpec) -> bool {
    match spec.distribution {
        // bounded support or faster-than-polynomial decay
        Distribution::Rademacher
        | Distribution::PointMass { .. }
        | Distribution::UniformCentered { .. }
        | Distribution::Normal { .. } => true,
        Distribution::SymmetrizedPareto { tail } => {
            let s = spec.alpha * tail;
            if s > 1.0 {
                true
            } else if s < 1.0 {
                false
            } else {
                spec.kappa * tail - (spec.d as f64 - 1.0) > 1.0
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub moment_finite: bool,
    pub series_converges: bool,
    pub agree: bool,
}

/// Both sides of the equivalence
///   sum_n P(|X| > |n|^alpha (log|n|)^kappa) < inf
///     <=>  E |X|^{1/alpha} (log+ |X|)^{d-1-kappa/alpha} < inf,
/// computed independently: the moment side by the moment functional, the
/// series side by the tail-exponent rule above.
pub fn moment_series_equivalence(
    distribution: &Distribution,
    alpha: f64,
    kappa: f64,
    d: usize,
) -> Result<EquivalenceReport> {
    if alpha <= 0.0 {
        return Err(Error::Domain("equivalence report needs alpha > 0"));
    }
    let p = 1.0 / alpha;
    let q = d as f64 - 1.0 - kappa / alpha;
    let moment_finite = match distribution {
        // the moment functional rejects |X| = 0 a.s. edge cleanly
        Distribution::PointMass { value } if *value == 0.0 => true,
        _ => moment_functional(distribution, p, q)?.is_finite(),
    };
    let spec = TailSeriesSpec {
        d,
        alpha,
        kappa,
        distribution: *distribution,
        j_max: 2,
    };
    let series_converges = analytic_series_converges(&spec);
    Ok(EquivalenceReport {
        moment_finite,
        series_converges,
        agree: moment_finite == series_converges,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NecessityRecord {
    pub size: u64,
    pub stat: f64,
    pub running_max: f64,
}

/// Running max of |X_n| / sqrt(|n|^alpha log|n|) over the given points in
/// their given order; a record is emitted whenever the running max moves.
/// Points with |n| < 2 (vanishing log) are skipped.
pub fn necessity_tail_statistic(
    field: &FieldSpec,
    alpha: f64,
    points: &[LatticeIndex],
) -> Result<Vec<NecessityRecord>> {
    let mut out = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for p in points {
        let size = p.size()?;
        if size < 2 {
            continue;
        }
        let s = size as f64;
        let stat = field.sample(p).abs() / (s.powf(alpha) * s.ln()).sqrt();
        if stat > best {
            best = stat;
            out.push(NecessityRecord {
                size,
                stat,
                running_max: best,
            });
        }
    }
    Ok(out)
}

/// Terminal running max among records with size <= budget.
pub fn running_max_at(records: &[NecessityRecord], budget: u64) -> f64 {
    records
        .iter()
        .take_while(|r| r.size <= budget)
        .last()
        .map(|r| r.running_max)
        .unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::enumerate_up_to;

    #[test]
    fn weighted_sum_equals_naive_lattice_sum() {
        let spec = TailSeriesSpec {
            d: 2,
            alpha: 0.5,
            kappa: 0.0,
            distribution: Distribution::SymmetrizedPareto { tail: 2.0 },
            j_max: 200,
        };
        let weighted = tail_series_table(&spec).unwrap().last().unwrap().partial_sum;
        let mut naive = 0.0;
        for p in enumerate_up_to(2, 200).unwrap() {
            let s = p.size().unwrap();
            naive += spec.distribution.tail_prob(spec.threshold(s));
        }
        assert!((weighted - naive).abs() < 1e-10, "{weighted} vs {naive}");
    }

    #[test]
    fn bounded_support_series_vanish_quickly() {
        let spec = TailSeriesSpec {
            d: 2,
            alpha: 0.5,
            kappa: 0.0,
            distribution: Distribution::Rademacher,
            j_max: 1000,
        };
        let r = tail_series(&spec).unwrap();
        assert_eq!(r.verdict, SeriesTrend::Converging);
        assert!(r.partial_sum.is_finite());
        // terms vanish once the threshold passes 1
        let rows = tail_series_table(&spec).unwrap();
        assert!(rows.iter().skip(10).all(|t| t.term == 0.0));
    }

    #[test]
    fn verdict_examples() {
        let normal = TailSeriesSpec {
            d: 2,
            alpha: 0.5,
            kappa: 0.0,
            distribution: Distribution::Normal { sigma: 1.0 },
            j_max: 10_000,
        };
        let r = tail_series(&normal).unwrap();
        assert_eq!(r.verdict, SeriesTrend::Converging);
        assert!(r.tail_growth < 1.0 + 1e-6, "growth {}", r.tail_growth);

        let heavy = TailSeriesSpec {
            distribution: Distribution::SymmetrizedPareto { tail: 2.0 },
            ..normal
        };
        let r = tail_series(&heavy).unwrap();
        assert_eq!(r.verdict, SeriesTrend::Diverging);
        assert!(r.tail_growth > 1.05, "growth {}", r.tail_growth);
    }

    #[test]
    fn equivalence_never_disagrees_on_builtins() {
        let dists = [
            Distribution::Normal { sigma: 1.0 },
            Distribution::Rademacher,
            Distribution::SymmetrizedPareto { tail: 2.0 },
            Distribution::SymmetrizedPareto { tail: 4.0 },
            Distribution::PointMass { value: 0.0 },
            Distribution::UniformCentered { half_width: 1.0 },
        ];
        for dist in dists {
            for alpha in [0.3, 0.5, 0.7] {
                for kappa in [0.0, 1.0] {
                    for d in [1, 2, 3] {
                        let r = moment_series_equivalence(&dist, alpha, kappa, d).unwrap();
                        assert!(r.agree, "{dist:?} alpha={alpha} kappa={kappa} d={d}: {r:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn boundary_case_splits_on_kappa() {
        // pareto tail 2, alpha = 0.5: alpha * t = 1 exactly; the log power
        // decides. kappa = 0 diverges, kappa large enough converges.
        let diverging = moment_series_equivalence(
            &Distribution::SymmetrizedPareto { tail: 2.0 },
            0.5,
            0.0,
            2,
        )
        .unwrap();
        assert!(!diverging.series_converges && !diverging.moment_finite);
        let converging = moment_series_equivalence(
            &Distribution::SymmetrizedPareto { tail: 2.0 },
            0.5,
            1.5,
            2,
        )
        .unwrap();
        assert!(converging.series_converges && converging.moment_finite);
    }

    #[test]
    fn kappa_monotonicity() {
        // raising kappa only shrinks the summands (j >= 3), so a converging
        // series can never start diverging
        let dists = [
            Distribution::Normal { sigma: 1.0 },
            Distribution::SymmetrizedPareto { tail: 2.0 },
            Distribution::SymmetrizedPareto { tail: 3.0 },
        ];
        for dist in dists {
            for d in [1, 2, 3] {
                for alpha in [0.3, 0.5, 0.7] {
                    let lo = TailSeriesSpec {
                        d,
                        alpha,
                        kappa: 0.0,
                        distribution: dist,
                        j_max: 2,
                    };
                    let hi = TailSeriesSpec { kappa: 1.0, ..lo };
                    if analytic_series_converges(&lo) {
                        assert!(analytic_series_converges(&hi), "{dist:?} d={d} a={alpha}");
                    }
                }
            }
        }
    }

    #[test]
    fn necessity_zero_field() {
        let field = FieldSpec::new(Distribution::PointMass { value: 0.0 }, 0);
        let pts = enumerate_up_to(2, 100).unwrap();
        let recs = necessity_tail_statistic(&field, 0.5, &pts).unwrap();
        assert!(recs.iter().all(|r| r.running_max == 0.0));
    }

    #[test]
    fn necessity_running_max_monotone() {
        let field = FieldSpec::new(Distribution::Normal { sigma: 1.0 }, 21);
        let pts = enumerate_up_to(2, 2000).unwrap();
        let recs = necessity_tail_statistic(&field, 0.5, &pts).unwrap();
        assert!(!recs.is_empty());
        for w in recs.windows(2) {
            assert!(w[1].running_max > w[0].running_max);
            assert!(w[1].size >= w[0].size);
        }
        let terminal = running_max_at(&recs, 2000);
        assert!(terminal.is_finite() && terminal > 0.0);
    }
}
