//! Delayed sums ("windows") over the field: the increment of partial sums
//! over the box (n, n + n^alpha], its maximal variant, and a Monte Carlo
//! check of the d-dimensional Levy inequality.
//!
//! Each window is evaluated directly in O(V) over its V cells. Base points
//! reach |n| ~ 1e6 and beyond, so a global prefix-sum table is out of the
//! question, but V = |n|^alpha stays small.

use serde::{Deserialize, Serialize};

use crate::field::FieldSpec;
use crate::lattice::LatticeIndex;
use crate::numeric::CompensatedSum;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub base: LatticeIndex,
    pub alpha: f64,
    /// w_k = max(1, floor(n_k^alpha)) — coordinates of n^alpha treated as integers.
    pub widths: Vec<u64>,
}

impl WindowSpec {
    pub fn new(base: LatticeIndex, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain("alpha must lie in (0, 1)"));
        }
        let widths = base
            .coords()
            .iter()
            .map(|&c| ((c as f64).powf(alpha).floor() as u64).max(1))
            .collect();
        Ok(Self { base, alpha, widths })
    }

    pub fn volume(&self) -> Result<u64> {
        let mut v: u64 = 1;
        for &w in &self.widths {
            v = v.checked_mul(w).ok_or(Error::ArithmeticOverflow)?;
        }
        Ok(v)
    }

    /// sqrt(2 |n|^alpha log |n|) with the real-valued |n|^alpha.
    pub fn norm_real(&self) -> f64 {
        let size = self.base.size_f64();
        (2.0 * size.powf(self.alpha) * size.ln()).sqrt()
    }

    /// Same normalizer with the floored window volume in place of |n|^alpha.
    pub fn norm_floored(&self) -> f64 {
        let size = self.base.size_f64();
        let v = self.widths.iter().map(|&w| w as f64).product::<f64>();
        (2.0 * v * size.ln()).sqrt()
    }

    fn check_budget(&self, cell_budget: u64) -> Result<u64> {
        let v = self.volume()?;
        if v > cell_budget {
            Err(Error::CellBudgetExceeded {
                volume: v,
                budget: cell_budget,
            })
        } else {
            Ok(v)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowValue {
    pub sum: f64,
    pub volume: u64,
    pub norm_real: f64,
    pub norm_floored: f64,
}

/// T_{n, n+n^alpha} = sum of X_i over n < i <= n + n^alpha.
pub fn window_sum(field: &FieldSpec, w: &WindowSpec, cell_budget: u64) -> Result<WindowValue> {
    let volume = w.check_budget(cell_budget)?;
    let d = w.base.dim();
    let base = w.base.coords();
    // odometer over the offsets 1..=w_k per axis
    let mut offset = vec![1u64; d];
    let mut coords: Vec<u64> = (0..d).map(|k| base[k] + 1).collect();
    let mut acc = CompensatedSum::new();
    loop {
        acc.add(field.sample_coords(&coords));
        let mut axis = d;
        while axis > 0 {
            axis -= 1;
            if offset[axis] < w.widths[axis] {
                offset[axis] += 1;
                coords[axis] += 1;
                break;
            }
            offset[axis] = 1;
            coords[axis] = base[axis] + 1;
            if axis == 0 {
                return Ok(WindowValue {
                    sum: acc.value(),
                    volume,
                    norm_real: w.norm_real(),
                    norm_floored: w.norm_floored(),
                });
            }
        }
    }
}

/// max_{0 <= k <= n^alpha} T_{n,n+k} via one local prefix-sum pass; k = 0
/// (the empty window, value 0) is in the feasible set. With `two_sided`
/// the maximum is over |T_{n,n+k}|.
pub fn max_window(
    field: &FieldSpec,
    w: &WindowSpec,
    two_sided: bool,
    cell_budget: u64,
) -> Result<f64> {
    w.check_budget(cell_budget)?;
    let d = w.base.dim();
    let base = w.base.coords();
    let dims: Vec<usize> = w.widths.iter().map(|&x| x as usize).collect();
    let len: usize = dims.iter().product();
    // fill the local box with field values at n + offset, offset in [1, w]
    let mut buf = vec![0.0f64; len];
    let mut coords: Vec<u64> = (0..d).map(|k| base[k] + 1).collect();
    let mut offset = vec![0usize; d];
    for cell in buf.iter_mut() {
        *cell = field.sample_coords(&coords);
        for axis in (0..d).rev() {
            if offset[axis] + 1 < dims[axis] {
                offset[axis] += 1;
                coords[axis] += 1;
                break;
            }
            offset[axis] = 0;
            coords[axis] = base[axis] + 1;
        }
    }
    // in-place prefix sums along each axis turn buf[k-1] into T_{n,n+k}
    let mut stride = 1usize;
    for axis in (0..d).rev() {
        let dim = dims[axis];
        if dim > 1 {
            for start in block_starts(&dims, axis, stride) {
                for i in 1..dim {
                    buf[start + i * stride] += buf[start + (i - 1) * stride];
                }
            }
        }
        stride *= dim;
    }
    let mut best = 0.0f64; // k = 0
    for &v in &buf {
        let c = if two_sided { v.abs() } else { v };
        if c > best {
            best = c;
        }
    }
    Ok(best)
}

/// Enumerate the linear indices where each 1-d lane along `axis` starts.
fn block_starts(dims: &[usize], axis: usize, stride: usize) -> Vec<usize> {
    let len: usize = dims.iter().product();
    let dim = dims[axis];
    let mut out = Vec::with_capacity(len / dim);
    for i in 0..len {
        if (i / stride).is_multiple_of(dim) {
            out.push(i);
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct LevyReport {
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
    /// lhs <= rhs within 3 combined standard errors.
    pub holds: bool,
}

/// Monte Carlo check of P(max_{k<=n} S_k > x) <= 2^d P(S_n > x - d sqrt(2 Var S_n)),
/// with S_k the origin-anchored partial sums and Var S_n taken analytically.
pub fn levy_inequality_check(
    field: &FieldSpec,
    n: &LatticeIndex,
    x: f64,
    mc_reps: u64,
) -> Result<LevyReport> {
    let cells = n.size()?;
    if cells > 10_000 {
        return Err(Error::Precondition(format!(
            "levy check needs full enumeration; |n| = {cells} > 10000"
        )));
    }
    let d = n.dim();
    let var = field
        .distribution
        .variance()
        .ok_or(Error::Domain("levy check needs a finite variance"))?
        * cells as f64;
    let shift = d as f64 * (2.0 * var).sqrt();
    let dims: Vec<usize> = n.coords().iter().map(|&c| c as usize).collect();
    let len: usize = dims.iter().product();
    let mut lhs_hits = 0u64;
    let mut rhs_hits = 0u64;
    for rep in 0..mc_reps {
        let f = field.with_replication(field.replication_id.wrapping_add(rep));
        let mut buf = vec![0.0f64; len];
        let mut coords = vec![1u64; d];
        for cell in buf.iter_mut() {
            *cell = f.sample_coords(&coords);
            for axis in (0..d).rev() {
                if coords[axis] < dims[axis] as u64 {
                    coords[axis] += 1;
                    break;
                }
                coords[axis] = 1;
            }
        }
        let mut stride = 1usize;
        for axis in (0..d).rev() {
            let dim = dims[axis];
            if dim > 1 {
                for start in block_starts(&dims, axis, stride) {
                    for i in 1..dim {
                        buf[start + i * stride] += buf[start + (i - 1) * stride];
                    }
                }
            }
            stride *= dim;
        }
        let max_s = buf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s_n = buf[len - 1];
        if max_s > x {
            lhs_hits += 1;
        }
        if s_n > x - shift {
            rhs_hits += 1;
        }
    }
    let m = mc_reps as f64;
    let lhs = lhs_hits as f64 / m;
    let rhs_p = rhs_hits as f64 / m;
    let factor = (1u64 << d) as f64;
    let lhs_se = (lhs * (1.0 - lhs) / m).sqrt();
    let rhs_se = factor * (rhs_p * (1.0 - rhs_p) / m).sqrt();
    let rhs = factor * rhs_p;
    let combined = (lhs_se * lhs_se + rhs_se * rhs_se).sqrt();
    Ok(LevyReport {
        lhs,
        lhs_se,
        rhs,
        rhs_se,
        holds: lhs <= rhs + 3.0 * combined,
    })
}
