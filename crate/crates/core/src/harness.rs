//! Monte Carlo experiment drivers: each one walks an index set in a fixed
//! deterministic order, evaluates a normalized window statistic per base
//! point with a fresh deterministic field per replication, and reports
//! trajectories plus per-replication terminal extremes.
//!
//! limsup-type quantities converge at log speed, so nothing here pretends
//! to produce a converged scalar: the deliverable is always a running-max
//! trajectory and a cross-replication summary.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{classify, BoundParams, TruncationClass, TruncationReading};
use crate::delta::{self, TransformKind};
use crate::field::{Distribution, FieldSpec};
use crate::geometry::{SubsequenceKind, SubsequenceSpec};
use crate::lattice::{enumerate_up_to, LatticeIndex};
use crate::moments::{necessity_tail_statistic, running_max_at, NecessityRecord};
use crate::window::{max_window, window_sum, WindowSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    LslFull,
    LslSubsequence,
    LslDiagonal,
    MaxWindow,
    Negligibility,
    Necessity,
    GapDiscrepancy,
    GaussianHeuristic,
    Delta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub field: FieldSpec,
    pub index_set: SubsequenceSpec,
    pub sigma: f64,
    /// Largest |n| visited.
    pub budget: u64,
    pub replications: u64,
    /// Largest window volume evaluated; bigger windows are skipped and logged.
    #[serde(default = "default_cell_budget")]
    pub cell_budget: u64,
    /// Budgets at which the running max is snapshotted (always includes
    /// the full budget).
    #[serde(default)]
    pub checkpoints: Vec<u64>,
    /// Normalize by sqrt(2 |n|^alpha log|n|); without the flag the sqrt(2)
    /// is dropped.
    #[serde(default = "default_true")]
    pub sqrt2: bool,
    #[serde(default)]
    pub bounds: Option<BoundParams>,
    #[serde(default)]
    pub reading: TruncationReading,
    #[serde(default)]
    pub two_sided: bool,
}

fn default_cell_budget() -> u64 {
    1 << 24
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::Domain("at least one replication is required"));
        }
        if self.budget < 4 {
            return Err(Error::Domain("budget must be >= 4"));
        }
        self.index_set.validate()?;
        self.field.distribution.validate()?;
        if self.sigma <= 0.0 {
            return Err(Error::Domain("sigma must be positive"));
        }
        if let Some(b) = &self.bounds {
            b.validate()?;
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.index_set.alpha
    }

    fn normalizer(&self, size: f64) -> f64 {
        let base = size.powf(self.alpha()) * size.ln();
        if self.sqrt2 {
            (2.0 * base).sqrt()
        } else {
            base.sqrt()
        }
    }

    fn checkpoint_list(&self) -> Vec<u64> {
        let mut cps = self.checkpoints.clone();
        cps.push(self.budget);
        cps.sort_unstable();
        cps.dedup();
        cps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub size: u64,
    pub coords: Vec<u64>,
    pub stat: f64,
    pub running_max: f64,
    pub running_min: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationSummary {
    pub replication: u64,
    pub terminal_max: f64,
    pub terminal_min: f64,
    pub target: f64,
    pub points_evaluated: u64,
    pub points_skipped: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub target: f64,
    pub summaries: Vec<ReplicationSummary>,
    /// Full trajectory of replication 0 (the others differ only in seed).
    pub trajectory: Trajectory,
    /// Budgets at which running maxes were snapshotted, ascending.
    pub checkpoints: Vec<u64>,
    /// checkpoint_maxes[rep][c] = running max among points with |n| <=
    /// checkpoints[c] in replication rep.
    pub checkpoint_maxes: Vec<Vec<f64>>,
}

impl RunOutput {
    pub fn median_terminal_max(&self) -> f64 {
        let mut v: Vec<f64> = self.summaries.iter().map(|s| s.terminal_max).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }

    pub fn median_checkpoint_max(&self, c: usize) -> f64 {
        let mut v: Vec<f64> = self.checkpoint_maxes.iter().map(|r| r[c]).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }
}

/// Walk `points` once per replication, evaluating `stat`; Ok(None) marks a
/// skipped point. Points are processed in parallel but reduced in their
/// deterministic input order.
fn run_statistic<F>(config: &ExperimentConfig, target: f64, points: &[LatticeIndex], stat: F) -> Result<RunOutput>
where
    F: Fn(&FieldSpec, &LatticeIndex) -> Result<Option<f64>> + Sync,
{
    config.validate()?;
    let checkpoints = config.checkpoint_list();
    let mut summaries = Vec::with_capacity(config.replications as usize);
    let mut trajectory = Trajectory::default();
    let mut checkpoint_maxes = Vec::with_capacity(config.replications as usize);
    for rep in 0..config.replications {
        let field = config.field.with_replication(rep);
        let values: Vec<Result<Option<f64>>> =
            points.par_iter().map(|p| stat(&field, p)).collect();
        let mut running_max = f64::NEG_INFINITY;
        let mut running_min = f64::INFINITY;
        let mut evaluated = 0u64;
        let mut skipped = 0u64;
        let mut cp_maxes = vec![f64::NEG_INFINITY; checkpoints.len()];
        let mut cp_cursor = 0usize;
        for (p, v) in points.iter().zip(values) {
            let size = p.size()?;
            while cp_cursor < checkpoints.len() && size > checkpoints[cp_cursor] {
                cp_maxes[cp_cursor] = running_max;
                cp_cursor += 1;
            }
            match v? {
                None => skipped += 1,
                Some(value) => {
                    evaluated += 1;
                    running_max = running_max.max(value);
                    running_min = running_min.min(value);
                    if rep == 0 {
                        trajectory.records.push(TrajectoryRecord {
                            size,
                            coords: p.coords().to_vec(),
                            stat: value,
                            running_max,
                            running_min,
                        });
                    }
                }
            }
        }
        if evaluated == 0 {
            // nothing fit under the cell budget: the run is vacuous, abort
            let volume = points
                .iter()
                .filter_map(|p| WindowSpec::new(p.clone(), config.alpha()).ok())
                .filter_map(|w| w.volume().ok())
                .min()
                .unwrap_or(0);
            return Err(Error::CellBudgetExceeded {
                volume,
                budget: config.cell_budget,
            });
        }
        for m in cp_maxes.iter_mut().skip(cp_cursor) {
            *m = running_max;
        }
        checkpoint_maxes.push(cp_maxes);
        summaries.push(ReplicationSummary {
            replication: rep,
            terminal_max: running_max,
            terminal_min: running_min,
            target,
            points_evaluated: evaluated,
            points_skipped: skipped,
        });
    }
    Ok(RunOutput {
        target,
        summaries,
        trajectory,
        checkpoints,
        checkpoint_maxes,
    })
}

fn skippable(e: Error) -> Result<Option<f64>> {
    match e {
        Error::CellBudgetExceeded { .. } => Ok(None),
        other => Err(other),
    }
}

/// R_n = T_{n,n+n^alpha} / sqrt(2 |n|^alpha log|n|) over the configured
/// index set; target sigma sqrt(1 - alpha).
pub fn run_lsl(config: &ExperimentConfig) -> Result<RunOutput> {
    match config.index_set.kind {
        SubsequenceKind::A | SubsequenceKind::Lambda => {}
        _ => return Err(Error::Domain("full-rate run expects the A or lambda set")),
    }
    let target = config.sigma * (1.0 - config.alpha()).sqrt();
    lsl_inner(config, target)
}

/// Same statistic restricted to a thinned subsequence; target
/// sigma sqrt((1 - alpha) / beta).
pub fn run_subsequence_lsl(config: &ExperimentConfig) -> Result<RunOutput> {
    match config.index_set.kind {
        SubsequenceKind::LambdaStar | SubsequenceKind::AStar => {}
        _ => return Err(Error::Domain("subsequence run expects a starred set")),
    }
    let target = config.sigma * ((1.0 - config.alpha()) / config.index_set.beta).sqrt();
    lsl_inner(config, target)
}

/// Diagonal base points; target sigma sqrt((1 - alpha) / (d beta)).
pub fn run_diagonal_lsl(config: &ExperimentConfig) -> Result<RunOutput> {
    if config.index_set.kind != SubsequenceKind::Diagonal {
        return Err(Error::Domain("diagonal run expects the diagonal set"));
    }
    let target = config.sigma
        * ((1.0 - config.alpha()) / (config.index_set.d as f64 * config.index_set.beta)).sqrt();
    lsl_inner(config, target)
}

fn lsl_inner(config: &ExperimentConfig, target: f64) -> Result<RunOutput> {
    let points = config.index_set.generate(config.budget)?;
    let alpha = config.alpha();
    let cell_budget = config.cell_budget;
    run_statistic(config, target, &points, move |field, p| {
        let size = p.size()?;
        if size < 2 {
            return Ok(None);
        }
        let w = WindowSpec::new(p.clone(), alpha)?;
        match window_sum(field, &w, cell_budget) {
            Ok(v) => Ok(Some(v.sum / config.normalizer(size as f64))),
            Err(e) => skippable(e),
        }
    })
}

/// max_{0<=k<=n^alpha} T_{n,n+k} normalized as in `run_lsl`; same target.
pub fn run_max_window(config: &ExperimentConfig) -> Result<RunOutput> {
    let target = config.sigma * (1.0 - config.alpha()).sqrt();
    let points = config.index_set.generate(config.budget)?;
    let alpha = config.alpha();
    let cell_budget = config.cell_budget;
    let two_sided = config.two_sided;
    run_statistic(config, target, &points, move |field, p| {
        let size = p.size()?;
        if size < 2 {
            return Ok(None);
        }
        let w = WindowSpec::new(p.clone(), alpha)?;
        match max_window(field, &w, two_sided, cell_budget) {
            Ok(v) => Ok(Some(v / config.normalizer(size as f64))),
            Err(e) => skippable(e),
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegligibilitySummary {
    pub replication: u64,
    /// Running max of |sum of mid-range summands| / sqrt(|n|^alpha log|n|).
    pub double_max: f64,
    /// The bound delta / (1 - alpha) it is measured against.
    pub double_bound: f64,
    /// Windows at |n| >= size_floor containing any extreme summand.
    pub triple_nonzero: u64,
    pub windows_counted: u64,
    pub points_evaluated: u64,
    pub points_skipped: u64,
}

/// Decompose every window into the three truncation classes and track the
/// normalized mid-range ("double-primed") part and the frequency of
/// extreme ("triple-primed") summands.
pub fn run_negligibility(config: &ExperimentConfig, size_floor: u64) -> Result<Vec<NegligibilitySummary>> {
    config.validate()?;
    let params = config
        .bounds
        .ok_or(Error::Domain("negligibility run needs bound parameters"))?;
    let alpha = config.alpha();
    let points = config.index_set.generate(config.budget)?;
    let mut out = Vec::new();
    for rep in 0..config.replications {
        let field = config.field.with_replication(rep);
        let per_point: Vec<Result<Option<(f64, bool, u64)>>> = points
            .par_iter()
            .map(|p| -> Result<Option<(f64, bool, u64)>> {
                let size = p.size()?;
                if size < 2 {
                    return Ok(None);
                }
                let w = WindowSpec::new(p.clone(), alpha)?;
                let volume = w.volume()?;
                if volume > config.cell_budget {
                    return Ok(None);
                }
                let d = p.dim();
                let mut offset = vec![1u64; d];
                let mut coords: Vec<u64> =
                    (0..d).map(|k| p.coords()[k] + 1).collect();
                let mut double = crate::numeric::CompensatedSum::new();
                let mut any_triple = false;
                'walk: loop {
                    let x = field.sample_coords(&coords);
                    match classify(&params, config.reading, alpha, p, x)? {
                        TruncationClass::Primed => {}
                        TruncationClass::Double => double.add(x),
                        TruncationClass::Triple => any_triple = true,
                    }
                    for axis in (0..d).rev() {
                        if offset[axis] < w.widths[axis] {
                            offset[axis] += 1;
                            coords[axis] += 1;
                            continue 'walk;
                        }
                        offset[axis] = 1;
                        coords[axis] = p.coords()[axis] + 1;
                        if axis == 0 {
                            break 'walk;
                        }
                    }
                }
                let s = size as f64;
                let norm = (s.powf(alpha) * s.ln()).sqrt();
                Ok(Some((double.value().abs() / norm, any_triple, size)))
            })
            .collect();
        let mut double_max = 0.0f64;
        let mut triple_nonzero = 0u64;
        let mut windows_counted = 0u64;
        let mut evaluated = 0u64;
        let mut skipped = 0u64;
        for r in per_point {
            match r? {
                None => skipped += 1,
                Some((dstat, any_triple, size)) => {
                    evaluated += 1;
                    double_max = double_max.max(dstat);
                    if size >= size_floor {
                        windows_counted += 1;
                        if any_triple {
                            triple_nonzero += 1;
                        }
                    }
                }
            }
        }
        out.push(NegligibilitySummary {
            replication: rep,
            double_max,
            double_bound: params.delta / (1.0 - alpha),
            triple_nonzero,
            windows_counted,
            points_evaluated: evaluated,
            points_skipped: skipped,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapDiscrepancyRecord {
    pub j: u64,
    pub replication: u64,
    /// max over the sampled cell grid of |T(m,n) - T(m_j, n_j)| divided by
    /// sqrt(m_j^alpha n_j^alpha log(m_j n_j)).
    pub normalized_max: f64,
}

/// For each bracketing index j (= k, on the diagonal of the lambda grid),
/// compare the window at a grid of (m, n) inside the cell against the
/// anchored window at (m_j, n_j) on a shared field realization.
pub fn run_gap_discrepancy(
    config: &ExperimentConfig,
    js: &[u64],
    grid: u64,
) -> Result<Vec<GapDiscrepancyRecord>> {
    config.validate()?;
    if config.index_set.d != 2 || config.index_set.kind != SubsequenceKind::Lambda {
        return Err(Error::Domain(
            "gap discrepancy runs on the two-dimensional lambda geometry",
        ));
    }
    let alpha = config.alpha();
    let one_d = SubsequenceSpec::new(SubsequenceKind::Lambda, 1, alpha)?;
    let mut out = Vec::new();
    for &j in js {
        let (mj, mj1) = (one_d.term(j), one_d.term(j + 1));
        let norm = {
            let mjf = mj as f64;
            (mjf.powf(alpha) * mjf.powf(alpha) * (mjf * mjf).ln()).sqrt()
        };
        for rep in 0..config.replications {
            let field = config.field.with_replication(rep);
            let anchor = window_sum(
                &field,
                &WindowSpec::new(LatticeIndex::new(vec![mj, mj])?, alpha)?,
                config.cell_budget,
            )?
            .sum;
            let steps: Vec<(u64, u64)> = (0..=grid)
                .flat_map(|a| (0..=grid).map(move |b| (a, b)))
                .collect();
            let worst = steps
                .par_iter()
                .map(|&(a, b)| -> Result<f64> {
                    let m = mj + (mj1 - mj) * a / grid;
                    let n = mj + (mj1 - mj) * b / grid;
                    let t = window_sum(
                        &field,
                        &WindowSpec::new(LatticeIndex::new(vec![m, n])?, alpha)?,
                        config.cell_budget,
                    )?
                    .sum;
                    Ok((t - anchor).abs())
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0f64, f64::max);
            out.push(GapDiscrepancyRecord {
                j,
                replication: rep,
                normalized_max: worst / norm,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct HeuristicOutput {
    /// Running max of T_{n,n+n^alpha} / sqrt(|n|^alpha log|n|).
    pub field_trajectory: Trajectory,
    /// Running max of sigma Z_n / sqrt(log|n|) on the same index grid,
    /// Z_n independent standard normals.
    pub gaussian_trajectory: Trajectory,
}

/// Report-only comparison of the window statistic against the classical
/// normalized-maxima behaviour of plain i.i.d. Gaussians.
pub fn run_gaussian_heuristic(config: &ExperimentConfig) -> Result<HeuristicOutput> {
    config.validate()?;
    let points = config.index_set.generate(config.budget)?;
    let alpha = config.alpha();
    let field = config.field.with_replication(0);
    // an unrelated stream for the comparison variates
    let gauss = FieldSpec::new(
        Distribution::Normal { sigma: config.sigma },
        config.field.master_seed ^ 0xa5a5_5a5a_dead_beef,
    );
    let mut field_traj = Trajectory::default();
    let mut gauss_traj = Trajectory::default();
    let (mut fmax, mut fmin) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut gmax, mut gmin) = (f64::NEG_INFINITY, f64::INFINITY);
    for p in &points {
        let size = p.size()?;
        if size < 2 {
            continue;
        }
        let s = size as f64;
        let w = WindowSpec::new(p.clone(), alpha)?;
        let t = match window_sum(&field, &w, config.cell_budget) {
            Ok(v) => v.sum,
            Err(Error::CellBudgetExceeded { .. }) => continue,
            Err(e) => return Err(e),
        };
        let fstat = t / (s.powf(alpha) * s.ln()).sqrt();
        fmax = fmax.max(fstat);
        fmin = fmin.min(fstat);
        field_traj.records.push(TrajectoryRecord {
            size,
            coords: p.coords().to_vec(),
            stat: fstat,
            running_max: fmax,
            running_min: fmin,
        });
        let gstat = gauss.sample(p) / s.ln().sqrt();
        gmax = gmax.max(gstat);
        gmin = gmin.min(gstat);
        gauss_traj.records.push(TrajectoryRecord {
            size,
            coords: p.coords().to_vec(),
            stat: gstat,
            running_max: gmax,
            running_min: gmin,
        });
    }
    Ok(HeuristicOutput {
        field_trajectory: field_traj,
        gaussian_trajectory: gauss_traj,
    })
}

#[derive(Debug, Clone)]
pub struct NecessityOutput {
    pub checkpoints: Vec<u64>,
    /// checkpoint_maxes[rep][c]
    pub checkpoint_maxes: Vec<Vec<f64>>,
    /// Records of replication 0.
    pub records: Vec<NecessityRecord>,
}

/// Running max of |X_n| / sqrt(|n|^alpha log|n|) over the whole lattice up
/// to the budget, snapshotted at the configured checkpoints.
pub fn run_necessity(config: &ExperimentConfig) -> Result<NecessityOutput> {
    config.validate()?;
    let points = enumerate_up_to(config.index_set.d, config.budget)?;
    let checkpoints = config.checkpoint_list();
    let mut checkpoint_maxes = Vec::new();
    let mut records0 = Vec::new();
    for rep in 0..config.replications {
        let field = config.field.with_replication(rep);
        let records = necessity_tail_statistic(&field, config.alpha(), &points)?;
        checkpoint_maxes.push(
            checkpoints
                .iter()
                .map(|&b| running_max_at(&records, b))
                .collect(),
        );
        if rep == 0 {
            records0 = records;
        }
    }
    Ok(NecessityOutput {
        checkpoints,
        checkpoint_maxes,
        records: records0,
    })
}

/// The smooth-transform experiment in one dimension: emits
/// a_n^m (g(T_{n,n+n^alpha}/n^alpha) - g(mu)) with a_n = sqrt(n^alpha/(2 log n))
/// over the configured index set, plus the predicted extreme limit points.
pub fn run_delta(
    config: &ExperimentConfig,
    kind: &TransformKind,
    mu: f64,
) -> Result<(delta::PredictedLimits, Vec<ReplicationSummary>)> {
    config.validate()?;
    if config.index_set.d != 1 {
        return Err(Error::Domain("the transform run is one-dimensional"));
    }
    let alpha = config.alpha();
    let points = config.index_set.generate(config.budget)?;
    let predicted = delta::predicted_limits(kind, mu, config.sigma * std::f64::consts::SQRT_2)?;
    let mut summaries = Vec::new();
    for rep in 0..config.replications {
        let field = config.field.with_replication(rep);
        let entries: Vec<(f64, f64, f64)> = points
            .par_iter()
            .map(|p| -> Result<Option<(f64, f64, f64)>> {
                let size = p.size()?;
                if size < 2 {
                    return Ok(None);
                }
                let s = size as f64;
                let w = WindowSpec::new(p.clone(), alpha)?;
                let t = match window_sum(&field, &w, config.cell_budget) {
                    Ok(v) => v.sum,
                    Err(Error::CellBudgetExceeded { .. }) => return Ok(None),
                    Err(e) => return Err(e),
                };
                let a_n = (s.powf(alpha) / (2.0 * s.ln())).sqrt();
                let b_n = s.powf(alpha);
                Ok(Some((a_n, b_n, t)))
            })
            .collect::<Result<Vec<Option<(f64, f64, f64)>>>>()?
            .into_iter()
            .flatten()
            .collect();
        let transformed = delta::transform_trajectory(&entries, kind, mu)?;
        let last = transformed.last().ok_or(Error::Domain("empty transform trajectory"))?;
        summaries.push(ReplicationSummary {
            replication: rep,
            terminal_max: last.running_max,
            terminal_min: last.running_min,
            target: predicted.limsup,
            points_evaluated: entries.len() as u64,
            points_skipped: (points.len() - entries.len()) as u64,
        });
    }
    Ok((predicted, summaries))
}

/// The classical-partial-sum variant: a_n^m (g(S_n/n) - g(mu)) with
/// a_n = sqrt(n/(2 sigma^2 log log n)) over one i.i.d. sequence per replication,
/// n running from 3 (the first index with log log n > 0) to the budget.
pub fn run_delta_lil(
    config: &ExperimentConfig,
    kind: &TransformKind,
    mu: f64,
) -> Result<(delta::PredictedLimits, Vec<ReplicationSummary>)> {
    config.validate()?;
    let predicted = delta::predicted_limits(kind, mu, config.sigma * std::f64::consts::SQRT_2)?;
    let (m, _) = kind.derivative_order(mu)?;
    let g_mu = kind.eval(mu);
    let mut summaries = Vec::new();
    for rep in 0..config.replications {
        let field = config.field.with_replication(rep);
        let mut s = crate::numeric::CompensatedSum::new();
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        let mut evaluated = 0u64;
        for n in 1..=config.budget {
            s.add(field.sample_coords(&[n]));
            if n < 3 {
                continue;
            }
            let x = n as f64;
            let a_n = (x / (2.0 * config.sigma * config.sigma * x.ln().ln())).sqrt();
            let value = a_n.powi(m as i32) * (kind.eval(s.value() / x) - g_mu);
            hi = hi.max(value);
            lo = lo.min(value);
            evaluated += 1;
        }
        summaries.push(ReplicationSummary {
            replication: rep,
            terminal_max: hi,
            terminal_min: lo,
            target: predicted.limsup,
            points_evaluated: evaluated,
            points_skipped: config.budget.saturating_sub(evaluated),
        });
    }
    Ok((predicted, summaries))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config(kind: ExperimentKind, set: SubsequenceKind, d: usize) -> ExperimentConfig {
        ExperimentConfig {
            kind,
            field: FieldSpec::new(Distribution::Normal { sigma: 1.0 }, 2024),
            index_set: SubsequenceSpec::new(set, d, 0.5).unwrap(),
            sigma: 1.0,
            budget: 20_000,
            replications: 3,
            cell_budget: 1 << 24,
            checkpoints: vec![],
            sqrt2: true,
            bounds: None,
            reading: TruncationReading::Displayed,
            two_sided: false,
        }
    }

    #[test]
    fn zero_field_runs_flat() {
        let mut c = base_config(ExperimentKind::LslFull, SubsequenceKind::A, 2);
        c.field = FieldSpec::new(Distribution::PointMass { value: 0.0 }, 1);
        c.replications = 1;
        let out = run_lsl(&c).unwrap();
        assert!(out.trajectory.records.iter().all(|r| r.stat == 0.0));
        assert_eq!(out.summaries[0].terminal_max, 0.0);
    }

    #[test]
    fn target_constants() {
        let c = base_config(ExperimentKind::LslFull, SubsequenceKind::A, 2);
        let out = run_lsl(&c).unwrap();
        assert!((out.target - 0.5f64.sqrt()).abs() < 1e-12);

        let mut c = base_config(ExperimentKind::LslSubsequence, SubsequenceKind::AStar, 2);
        c.index_set = c.index_set.with_beta(2.0);
        let out = run_subsequence_lsl(&c).unwrap();
        assert!((out.target - 0.5).abs() < 1e-12);

        let mut c = base_config(ExperimentKind::LslDiagonal, SubsequenceKind::Diagonal, 2);
        c.index_set = c.index_set.with_beta(2.0);
        let out = run_diagonal_lsl(&c).unwrap();
        assert!((out.target - 0.35355).abs() < 1e-4);
    }

    #[test]
    fn trajectories_are_monotone_and_accounted() {
        let c = base_config(ExperimentKind::LslFull, SubsequenceKind::A, 2);
        let out = run_lsl(&c).unwrap();
        for w in out.trajectory.records.windows(2) {
            assert!(w[1].running_max >= w[0].running_max);
            assert!(w[1].running_min <= w[0].running_min);
            assert!(w[1].size >= w[0].size);
        }
        let points = c.index_set.generate(c.budget).unwrap().len() as u64;
        for s in &out.summaries {
            assert_eq!(s.points_evaluated + s.points_skipped, points);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let c = base_config(ExperimentKind::LslFull, SubsequenceKind::A, 2);
        let a = run_lsl(&c).unwrap();
        let b = run_lsl(&c).unwrap();
        assert_eq!(a.trajectory, b.trajectory);
        assert_eq!(a.summaries, b.summaries);
    }

    #[test]
    fn checkpoint_maxes_monotone_in_budget() {
        let mut c = base_config(ExperimentKind::LslFull, SubsequenceKind::A, 2);
        c.checkpoints = vec![1_000, 5_000];
        let out = run_lsl(&c).unwrap();
        assert_eq!(out.checkpoints, vec![1_000, 5_000, 20_000]);
        for rep in &out.checkpoint_maxes {
            for w in rep.windows(2) {
                assert!(w[1] >= w[0]);
            }
        }
    }

    #[test]
    fn max_window_dominates_plain_run() {
        let c = base_config(ExperimentKind::MaxWindow, SubsequenceKind::A, 2);
        let plain = run_lsl(&c).unwrap();
        let maxed = run_max_window(&c).unwrap();
        for (a, b) in plain
            .trajectory
            .records
            .iter()
            .zip(&maxed.trajectory.records)
        {
            assert!(b.stat >= a.stat - 1e-12, "size {}", a.size);
        }
    }

    #[test]
    fn negligibility_bounded_support_has_no_tails() {
        let mut c = base_config(ExperimentKind::Negligibility, SubsequenceKind::A, 2);
        c.field = FieldSpec::new(Distribution::Rademacher, 5);
        // loose level: b_n >= 1 for every window in range
        c.bounds = Some(BoundParams::new(1.0, 0.9, 0.1, 0.5, 0.5).unwrap());
        let out = run_negligibility(&c, 10_000).unwrap();
        for s in &out {
            assert_eq!(s.triple_nonzero, 0);
            assert_eq!(s.double_max, 0.0);
        }
    }

    #[test]
    fn gap_discrepancy_zero_at_anchor_and_constant_field() {
        let mut c = base_config(ExperimentKind::GapDiscrepancy, SubsequenceKind::Lambda, 2);
        c.field = FieldSpec::new(Distribution::PointMass { value: 1.0 }, 1);
        c.replications = 1;
        let recs = run_gap_discrepancy(&c, &[50], 4).unwrap();
        // constant field: |T(m,n) - T(anchor)| equals the signed volume
        // difference, which the geometry module's count bounds from above
        let one_d = SubsequenceSpec::new(SubsequenceKind::Lambda, 1, 0.5).unwrap();
        let j = 50u64;
        let (mj, mj1) = (one_d.term(j), one_d.term(j + 1));
        let vol = |m: u64, n: u64| {
            let am = ((m as f64).sqrt().floor() as u64).max(1);
            let an = ((n as f64).sqrt().floor() as u64).max(1);
            (am * an) as i64
        };
        let mut worst = 0i64;
        for a in 0..=4u64 {
            for b in 0..=4u64 {
                let m = mj + (mj1 - mj) * a / 4;
                let n = mj + (mj1 - mj) * b / 4;
                let signed = (vol(m, n) - vol(mj, mj)).abs();
                let card = crate::geometry::discrepancy_cardinality(0.5, j, j, m, n)
                    .unwrap()
                    .cardinality as i64;
                assert!(signed <= card);
                worst = worst.max(signed);
            }
        }
        let mjf = mj as f64;
        let norm = (mjf.sqrt() * mjf.sqrt() * (mjf * mjf).ln()).sqrt();
        assert!((recs[0].normalized_max - worst as f64 / norm).abs() < 1e-9);
    }

    #[test]
    fn heuristic_emits_matched_grids() {
        let c = base_config(ExperimentKind::GaussianHeuristic, SubsequenceKind::A, 2);
        let out = run_gaussian_heuristic(&c).unwrap();
        assert_eq!(
            out.field_trajectory.records.len(),
            out.gaussian_trajectory.records.len()
        );
        for (a, b) in out
            .field_trajectory
            .records
            .iter()
            .zip(&out.gaussian_trajectory.records)
        {
            assert_eq!(a.size, b.size);
            assert_eq!(a.coords, b.coords);
        }
    }

    #[test]
    fn necessity_checkpoints() {
        let mut c = base_config(ExperimentKind::Necessity, SubsequenceKind::A, 2);
        c.budget = 5_000;
        c.checkpoints = vec![500];
        c.replications = 2;
        let out = run_necessity(&c).unwrap();
        assert_eq!(out.checkpoints, vec![500, 5_000]);
        for rep in &out.checkpoint_maxes {
            assert!(rep[1] >= rep[0]);
        }
    }

    #[test]
    fn delta_run_identity_matches_raw_statistic() {
        let mut c = base_config(ExperimentKind::Delta, SubsequenceKind::Lambda, 1);
        c.budget = 50_000;
        c.replications = 2;
        let (pred, summaries) = run_delta(&c, &TransformKind::Identity, 0.0).unwrap();
        assert!((pred.limsup - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert_eq!(summaries.len(), 2);
        // the identity transform is T / sqrt(n^alpha log n): finite, positive max
        for s in &summaries {
            assert!(s.terminal_max.is_finite() && s.terminal_max > 0.0);
            assert!(s.terminal_min < s.terminal_max);
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = base_config(ExperimentKind::LslFull, SubsequenceKind::A, 2);
        c.replications = 0;
        assert!(c.validate().is_err());
        let mut c = base_config(ExperimentKind::LslFull, SubsequenceKind::A, 2);
        c.budget = 2;
        assert!(c.validate().is_err());
    }
}
