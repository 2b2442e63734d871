//! Deterministic, index-keyed sampling of the i.i.d. field.
//!
//! A variate is a pure function of (master_seed, replication_id, index):
//! the key tuple is hashed to uniform bits with a splitmix-style mixing
//! chain and pushed through the inverse CDF. No state, no stream order —
//! any window anywhere on the lattice is computable without storing the
//! field, and parallel schedules cannot change a single bit.

use serde::{Deserialize, Serialize};

use crate::lattice::LatticeIndex;
use crate::numeric::{inv_normal_cdf, log_plus};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Distribution {
    Normal { sigma: f64 },
    Rademacher,
    /// |X| has tail P(|X| > x) = x^{-tail} for x >= 1, sign +-1 equiprobable.
    SymmetrizedPareto { tail: f64 },
    PointMass { value: f64 },
    UniformCentered { half_width: f64 },
}

impl Distribution {
    pub fn mean(&self) -> f64 {
        match self {
            Distribution::PointMass { value } => *value,
            _ => 0.0,
        }
    }

    /// Var X; None when infinite.
    pub fn variance(&self) -> Option<f64> {
        match self {
            Distribution::Normal { sigma } => Some(sigma * sigma),
            Distribution::Rademacher => Some(1.0),
            Distribution::SymmetrizedPareto { tail } => {
                if *tail > 2.0 {
                    Some(tail / (tail - 2.0))
                } else {
                    None
                }
            }
            Distribution::PointMass { .. } => Some(0.0),
            Distribution::UniformCentered { half_width } => Some(half_width * half_width / 3.0),
        }
    }

    /// P(|X| > x) in closed form.
    pub fn tail_prob(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        match self {
            Distribution::Normal { sigma } => {
                statrs::function::erf::erfc(x / (sigma * std::f64::consts::SQRT_2))
            }
            Distribution::Rademacher => {
                if x < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::SymmetrizedPareto { tail } => {
                if x < 1.0 {
                    1.0
                } else {
                    x.powf(-tail)
                }
            }
            Distribution::PointMass { value } => {
                if x < value.abs() {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::UniformCentered { half_width } => (1.0 - x / half_width).max(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Distribution::Normal { sigma } => *sigma > 0.0,
            Distribution::SymmetrizedPareto { tail } => *tail > 0.0,
            Distribution::UniformCentered { half_width } => *half_width > 0.0,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain("distribution parameter must be positive"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub distribution: Distribution,
    pub master_seed: u64,
    #[serde(default)]
    pub replication_id: u64,
}

impl FieldSpec {
    pub fn new(distribution: Distribution, master_seed: u64) -> Self {
        Self {
            distribution,
            master_seed,
            replication_id: 0,
        }
    }

    pub fn with_replication(&self, replication_id: u64) -> Self {
        Self {
            replication_id,
            ..*self
        }
    }

    /// X_k: deterministic in (master_seed, replication_id, k).
    pub fn sample(&self, k: &LatticeIndex) -> f64 {
        self.sample_coords(k.coords())
    }

    pub fn sample_coords(&self, coords: &[u64]) -> f64 {
        match self.distribution {
            Distribution::Normal { sigma } => {
                sigma * inv_normal_cdf(self.uniform(coords, 0))
            }
            Distribution::Rademacher => {
                if self.bits(coords, 0) >> 63 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Distribution::SymmetrizedPareto { tail } => {
                let mag = self.uniform(coords, 0).powf(-1.0 / tail);
                if self.bits(coords, 1) >> 63 == 0 {
                    mag
                } else {
                    -mag
                }
            }
            Distribution::PointMass { value } => value,
            Distribution::UniformCentered { half_width } => {
                half_width * (2.0 * self.uniform(coords, 0) - 1.0)
            }
        }
    }

    /// Uniform in the open interval (0, 1).
    #[inline]
    fn uniform(&self, coords: &[u64], salt: u64) -> f64 {
        ((self.bits(coords, salt) >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    #[inline]
    fn bits(&self, coords: &[u64], salt: u64) -> u64 {
        let mut h = mix64(self.master_seed ^ 0x9e3779b97f4a7c15);
        h = absorb(h, self.replication_id);
        h = absorb(h, salt);
        h = absorb(h, coords.len() as u64);
        for &c in coords {
            h = absorb(h, c);
        }
        mix64(h)
    }
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[inline]
fn absorb(h: u64, v: u64) -> u64 {
    mix64(h ^ v.wrapping_mul(0x9e3779b97f4a7c15))
}

/// E|X|^p (log^+ |X|)^q, or Infinite when the defining integral diverges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentValue {
    Finite(f64),
    Infinite,
}

impl MomentValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, MomentValue::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            MomentValue::Finite(v) => Some(*v),
            MomentValue::Infinite => None,
        }
    }
}

/// E|X|^p (log^+ |X|)^q. Divergence is decided analytically from the tail
/// exponent; finite values come from closed forms or adaptive quadrature.
pub fn moment_functional(dist: &Distribution, p: f64, q: f64) -> Result<MomentValue> {
    if p <= 0.0 {
        return Err(Error::Domain("moment_functional needs p > 0"));
    }
    let e = std::f64::consts::E;
    match dist {
        Distribution::Rademacher => Ok(MomentValue::Finite(1.0)),
        Distribution::PointMass { value } => {
            let a = value.abs();
            if a == 0.0 {
                Ok(MomentValue::Finite(0.0))
            } else {
                Ok(MomentValue::Finite(a.powf(p) * log_plus(a).powf(q)))
            }
        }
        Distribution::UniformCentered { half_width } => {
            let a = *half_width;
            // |X| uniform on (0, a); log^+ is 1 up to e
            let head_end = a.min(e);
            let mut v = head_end.powf(p + 1.0) / ((p + 1.0) * a);
            if a > e {
                v += crate::numeric::integrate(
                    |x| x.powf(p) * x.ln().powf(q),
                    e,
                    a,
                    1e-12 * a.powf(p + 1.0).max(1.0),
                )? / a;
            }
            Ok(MomentValue::Finite(v))
        }
        Distribution::Normal { sigma } => {
            let s = *sigma;
            let pdf = move |x: f64| {
                (-0.5 * (x / s) * (x / s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
            };
            let hi = (e + 1.0).max(s * (60.0 + 4.0 * p));
            let head =
                crate::numeric::integrate(|x| 2.0 * pdf(x) * x.powf(p), 0.0, e.min(hi), 1e-13)?;
            let tail = if hi > e {
                crate::numeric::integrate(
                    |x| 2.0 * pdf(x) * x.powf(p) * x.ln().powf(q),
                    e,
                    hi,
                    1e-13,
                )?
            } else {
                0.0
            };
            Ok(MomentValue::Finite(head + tail))
        }
        Distribution::SymmetrizedPareto { tail } => {
            let t = *tail;
            if p > t || (p == t && q >= -1.0) {
                return Ok(MomentValue::Infinite);
            }
            // density of |X| is t x^{-t-1} on [1, inf)
            let head = t * if (p - t).abs() < 1e-12 {
                1.0
            } else {
                (e.powf(p - t) - 1.0) / (p - t)
            };
            // substitute u = log x on [e, inf): t e^{(p-t)u} u^q du
            let rate = t - p;
            let tail_part = if rate < 1e-12 {
                // p == t with q < -1: integral of t u^q is exact
                t / (-q - 1.0)
            } else {
                let u_max = 1.0 + (80.0 + 20.0 * q.max(0.0)) / rate;
                crate::numeric::integrate(|u| t * (-rate * u).exp() * u.powf(q), 1.0, u_max, 1e-13)?
            };
            Ok(MomentValue::Finite(head + tail_part))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(coords: &[u64]) -> LatticeIndex {
        LatticeIndex::new(coords.to_vec()).unwrap()
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = FieldSpec::new(Distribution::Rademacher, 42);
        let k = idx(&[3, 17]);
        let a = spec.sample(&k);
        let b = spec.sample(&k);
        assert_eq!(a, b);
        assert!(a == 1.0 || a == -1.0);
    }

    #[test]
    fn point_mass_is_constant() {
        let spec = FieldSpec::new(Distribution::PointMass { value: 1.0 }, 7);
        for c in [[1u64, 1], [5, 9], [1000, 2]] {
            assert_eq!(spec.sample(&idx(&c)), 1.0);
        }
    }

    #[test]
    fn replications_and_seeds_change_the_stream() {
        let a = FieldSpec::new(Distribution::Normal { sigma: 1.0 }, 1);
        let b = a.with_replication(1);
        let c = FieldSpec::new(Distribution::Normal { sigma: 1.0 }, 2);
        let k = idx(&[10, 20]);
        assert_ne!(a.sample(&k), b.sample(&k));
        assert_ne!(a.sample(&k), c.sample(&k));
    }

    #[test]
    fn dimension_is_part_of_the_key() {
        let spec = FieldSpec::new(Distribution::Normal { sigma: 1.0 }, 5);
        assert_ne!(spec.sample_coords(&[2]), spec.sample_coords(&[2, 1]));
    }

    #[test]
    fn normal_moments_at_scale() {
        let spec = FieldSpec::new(Distribution::Normal { sigma: 1.0 }, 2024);
        let n = 1_000_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 1..=n {
            let x = spec.sample_coords(&[i]);
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn ks_statistic_below_critical() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let spec = FieldSpec::new(Distribution::Normal { sigma: 1.0 }, 99);
        let n = 100_000usize;
        let mut xs: Vec<f64> = (1..=n as u64).map(|i| spec.sample_coords(&[i, 7])).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let std_normal = Normal::new(0.0, 1.0).unwrap();
        let mut ks: f64 = 0.0;
        for (i, x) in xs.iter().enumerate() {
            let f = std_normal.cdf(*x);
            ks = ks.max((f - i as f64 / n as f64).abs());
            ks = ks.max(((i + 1) as f64 / n as f64 - f).abs());
        }
        // 1% critical value for the KS statistic
        let crit = 1.628 / (n as f64).sqrt();
        assert!(ks < crit, "ks {ks} >= {crit}");
    }

    #[test]
    fn independence_proxy_correlation() {
        let spec = FieldSpec::new(Distribution::Normal { sigma: 1.0 }, 123);
        let n = 100_000u64;
        let mut sxy = 0.0;
        for i in 1..=n {
            // adjacent lattice pairs
            let x = spec.sample_coords(&[i, 1]);
            let y = spec.sample_coords(&[i, 2]);
            sxy += x * y;
        }
        let corr = sxy / n as f64;
        assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "corr {corr}");
    }

    #[test]
    fn pareto_magnitude_and_sign() {
        let spec = FieldSpec::new(Distribution::SymmetrizedPareto { tail: 3.0 }, 11);
        let n = 100_000u64;
        let mut pos = 0u64;
        let mut exceed_2 = 0u64;
        for i in 1..=n {
            let x = spec.sample_coords(&[i]);
            assert!(x.abs() >= 1.0);
            if x > 0.0 {
                pos += 1;
            }
            if x.abs() > 2.0 {
                exceed_2 += 1;
            }
        }
        let frac_pos = pos as f64 / n as f64;
        assert!((frac_pos - 0.5).abs() < 0.01);
        let frac_tail = exceed_2 as f64 / n as f64;
        assert!((frac_tail - 0.125).abs() < 0.005, "tail {frac_tail}");
    }

    #[test]
    fn moment_functional_examples() {
        // rademacher: |X| = 1 and log^+ 1 = 1
        assert_eq!(
            moment_functional(&Distribution::Rademacher, 3.7, -2.0).unwrap(),
            MomentValue::Finite(1.0)
        );
        // gaussian fourth moment
        let v = moment_functional(&Distribution::Normal { sigma: 1.0 }, 4.0, 0.0)
            .unwrap()
            .finite()
            .unwrap();
        assert!((v - 3.0).abs() < 1e-8, "EX^4 = {v}");
        // heavy tail dominates
        assert_eq!(
            moment_functional(&Distribution::SymmetrizedPareto { tail: 3.0 }, 4.0, 0.0).unwrap(),
            MomentValue::Infinite
        );
    }

    #[test]
    fn pareto_moment_closed_form_check() {
        // for p < t and ignoring the log factor (q = 0):
        // E|X|^p = t/(t-p)
        let t = 3.0;
        for p in [0.5, 1.0, 2.0] {
            let v = moment_functional(&Distribution::SymmetrizedPareto { tail: t }, p, 0.0)
                .unwrap()
                .finite()
                .unwrap();
            assert!((v - t / (t - p)).abs() < 1e-8, "p={p} v={v}");
        }
    }

    #[test]
    fn pareto_boundary_divergence() {
        // p == t diverges whenever q >= -1
        let d = Distribution::SymmetrizedPareto { tail: 2.0 };
        assert_eq!(moment_functional(&d, 2.0, 0.0).unwrap(), MomentValue::Infinite);
        assert_eq!(moment_functional(&d, 2.0, -1.0).unwrap(), MomentValue::Infinite);
        assert!(moment_functional(&d, 2.0, -1.5).unwrap().is_finite());
    }

    #[test]
    fn mean_zero_for_all_centered_families() {
        for dist in [
            Distribution::Normal { sigma: 2.0 },
            Distribution::Rademacher,
            Distribution::SymmetrizedPareto { tail: 4.0 },
            Distribution::UniformCentered { half_width: 3.0 },
        ] {
            let spec = FieldSpec::new(dist, 314);
            let n = 200_000u64;
            let mean: f64 = (1..=n).map(|i| spec.sample_coords(&[i])).sum::<f64>() / n as f64;
            let sd = dist.variance().unwrap().sqrt();
            assert!(mean.abs() < 5.0 * sd / (n as f64).sqrt(), "{dist:?}: {mean}");
        }
    }
}
