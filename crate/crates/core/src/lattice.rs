//! Exact counting and enumeration of lattice points by size.
//!
//! `d(j)` counts the ordered d-tuples of positive integers with product j
//! (the d-dimensional Piltz divisor function) and `M(j)` is its cumulative
//! sum. Both are computed exactly in 64-bit checked arithmetic.

use crate::{Error, Result};

/// A point of the positive integer d-dimensional lattice.
#[derive(
    Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
#[serde(transparent)]
pub struct LatticeIndex {
    coords: Vec<u64>,
}

impl LatticeIndex {
    pub fn new(coords: Vec<u64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Domain("lattice index needs at least one coordinate"));
        }
        if coords.contains(&0) {
            return Err(Error::Domain("lattice coordinates must be >= 1"));
        }
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    /// The size |n| = prod n_k, with overflow reported rather than wrapped.
    pub fn size(&self) -> Result<u64> {
        let mut p: u64 = 1;
        for &c in &self.coords {
            p = p.checked_mul(c).ok_or(Error::ArithmeticOverflow)?;
        }
        if p > i64::MAX as u64 {
            return Err(Error::ArithmeticOverflow);
        }
        Ok(p)
    }

    /// |n| as a float, for normalizers; never overflows.
    pub fn size_f64(&self) -> f64 {
        self.coords.iter().map(|&c| c as f64).product()
    }

    /// Coordinatewise partial order m <= n.
    pub fn le(&self, other: &LatticeIndex) -> bool {
        self.dim() == other.dim()
            && self.coords.iter().zip(&other.coords).all(|(a, b)| a <= b)
    }
}

impl std::fmt::Display for LatticeIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

fn checked_binomial(n: u64, k: u64) -> Result<u64> {
    let k = k.min(n - k.min(n));
    let mut acc: u64 = 1;
    for i in 1..=k {
        // multiply before divide stays exact because acc holds C(n, i-1) * i! / i!
        acc = acc
            .checked_mul(n - k + i)
            .ok_or(Error::ArithmeticOverflow)?
            / i;
    }
    Ok(acc)
}

fn factorize(mut j: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= j {
        if j.is_multiple_of(p) {
            let mut a = 0;
            while j.is_multiple_of(p) {
                j /= p;
                a += 1;
            }
            out.push((p, a));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if j > 1 {
        out.push((j, 1));
    }
    out
}

/// Card{k in Z_+^d : |k| = j}, multiplicative with d(p^a) = C(a+d-1, d-1).
pub fn count_equisized(d: usize, j: u64) -> Result<u64> {
    if d == 0 || j == 0 {
        return Err(Error::Domain("count_equisized needs d >= 1 and j >= 1"));
    }
    if d == 1 {
        return Ok(1);
    }
    let mut count: u64 = 1;
    for (_, a) in factorize(j) {
        let f = checked_binomial(a as u64 + d as u64 - 1, d as u64 - 1)?;
        count = count.checked_mul(f).ok_or(Error::ArithmeticOverflow)?;
    }
    Ok(count)
}

/// Precomputed table of d(j) and M(j) for j = 1..=j_max, built by a
/// divisor-convolution sieve: d-dimensional counts are the (d-1)-fold
/// Dirichlet convolution of the all-ones function with itself.
#[derive(Debug, Clone)]
pub struct CountTable {
    d: usize,
    dj: Vec<u64>,
    mj: Vec<u64>,
}

impl CountTable {
    #[allow(clippy::needless_range_loop)] // sieve: i is both index and stride seed
    pub fn new(d: usize, j_max: u64) -> Result<Self> {
        if d == 0 || j_max == 0 {
            return Err(Error::Domain("CountTable needs d >= 1 and j_max >= 1"));
        }
        let n = j_max as usize;
        let mut dj = vec![1u64; n + 1];
        dj[0] = 0;
        for _ in 1..d {
            let mut next = vec![0u64; n + 1];
            for i in 1..=n {
                let di = dj[i];
                if di == 0 {
                    continue;
                }
                let mut m = i;
                while m <= n {
                    next[m] = next[m].checked_add(di).ok_or(Error::ArithmeticOverflow)?;
                    m += i;
                }
            }
            dj = next;
        }
        let mut mj = vec![0u64; n + 1];
        let mut acc = 0u64;
        for i in 1..=n {
            acc = acc.checked_add(dj[i]).ok_or(Error::ArithmeticOverflow)?;
            mj[i] = acc;
        }
        Ok(Self { d, dj, mj })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn j_max(&self) -> u64 {
        (self.dj.len() - 1) as u64
    }

    pub fn count(&self, j: u64) -> u64 {
        self.dj[j as usize]
    }

    pub fn cumulative(&self, j: u64) -> u64 {
        self.mj[j as usize]
    }

    /// M(j) * (d-1)! / (j (log j)^{d-1}), the quantity tending to 1.
    pub fn piltz_ratio(&self, j: u64) -> f64 {
        let lj = (j as f64).ln();
        let fact: f64 = (1..self.d as u64).map(|k| k as f64).product();
        self.cumulative(j) as f64 * fact / (j as f64 * lj.powi(self.d as i32 - 1))
    }
}

/// M(j) = Card{k : |k| <= j}. Convenience wrapper that builds the sieve;
/// use `CountTable` directly when many values are needed.
pub fn cumulative_count(d: usize, j: u64) -> Result<u64> {
    Ok(CountTable::new(d, j)?.cumulative(j))
}

fn sorted_divisors(j: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut i = 1u64;
    while i * i <= j {
        if j.is_multiple_of(i) {
            small.push(i);
            if i != j / i {
                large.push(j / i);
            }
        }
        i += 1;
    }
    large.reverse();
    small.extend(large);
    small
}

/// All ordered d-tuples with product j, in lexicographic order.
pub fn enumerate_equisized(d: usize, j: u64) -> Result<Vec<LatticeIndex>> {
    if d == 0 || j == 0 {
        return Err(Error::Domain("enumerate_equisized needs d >= 1 and j >= 1"));
    }
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(d);
    enumerate_rec(d, j, &mut prefix, &mut out);
    Ok(out)
}

fn enumerate_rec(remaining: usize, j: u64, prefix: &mut Vec<u64>, out: &mut Vec<LatticeIndex>) {
    if remaining == 1 {
        prefix.push(j);
        out.push(LatticeIndex {
            coords: prefix.clone(),
        });
        prefix.pop();
        return;
    }
    for c in sorted_divisors(j) {
        prefix.push(c);
        enumerate_rec(remaining - 1, j / c, prefix, out);
        prefix.pop();
    }
}

/// All points with |n| <= budget, in increasing size order with
/// lexicographic tie-break.
pub fn enumerate_up_to(d: usize, budget: u64) -> Result<Vec<LatticeIndex>> {
    let mut out = Vec::new();
    for j in 1..=budget {
        out.extend(enumerate_equisized(d, j)?);
    }
    Ok(out)
}

/// Empirical maximum of d(j)/j^delta over 1..=j_max (d(j) = o(j^delta)).
#[derive(Debug, Clone, Copy)]
pub struct SubexpReport {
    pub max_ratio: f64,
    pub attained_j: u64,
}

pub fn subexponential_check(d: usize, j_max: u64, delta: f64) -> Result<SubexpReport> {
    subexponential_check_range(d, 1..=j_max, delta)
}

pub fn subexponential_check_range(
    d: usize,
    range: std::ops::RangeInclusive<u64>,
    delta: f64,
) -> Result<SubexpReport> {
    if delta <= 0.0 {
        return Err(Error::Domain("subexponential_check needs delta > 0"));
    }
    let table = CountTable::new(d, *range.end())?;
    let mut best = (f64::MIN, 0u64);
    for j in range {
        let r = table.count(j) as f64 / (j as f64).powf(delta);
        if r > best.0 {
            best = (r, j);
        }
    }
    Ok(SubexpReport {
        max_ratio: best.0,
        attained_j: best.1,
    })
}
