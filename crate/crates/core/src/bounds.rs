//! The three-way truncation of the summands and the exponents of the
//! exponential tail bounds built on top of it, plus the convergence /
//! divergence verdicts for the resulting subsequence series.

use serde::{Deserialize, Serialize};

use crate::field::FieldSpec;
use crate::lattice::LatticeIndex;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub sigma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub eta: f64,
}

impl BoundParams {
    pub fn new(sigma: f64, delta: f64, epsilon: f64, gamma: f64, eta: f64) -> Result<Self> {
        let p = Self {
            sigma,
            delta,
            epsilon,
            gamma,
            eta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.epsilon > 0.0 && self.gamma > 0.0 && self.eta > 0.0) {
            return Err(Error::Domain("bound parameters must be strictly positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Domain("delta must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// The truncation level's typography admits two readings; both are
/// implemented and the choice is a config switch, defaulting to the form
/// as displayed: sqrt(|n|^alpha) / log|n|.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruncationReading {
    #[default]
    Displayed,
    /// sqrt(|n|^alpha / log|n|)
    Alternative,
}

/// b_n = (sigma delta / epsilon) * sqrt(|n|^alpha) / log|n| (displayed reading).
pub fn truncation_level(
    params: &BoundParams,
    reading: TruncationReading,
    size: f64,
    alpha: f64,
) -> Result<f64> {
    if size < 2.0 {
        return Err(Error::Domain("truncation level needs |n| >= 2"));
    }
    let lead = params.sigma * params.delta / params.epsilon;
    Ok(match reading {
        TruncationReading::Displayed => lead * size.powf(alpha).sqrt() / size.ln(),
        TruncationReading::Alternative => lead * (size.powf(alpha) / size.ln()).sqrt(),
    })
}

/// delta * sqrt(|n|^alpha log|n|), the upper truncation threshold.
pub fn upper_threshold(params: &BoundParams, size: f64, alpha: f64) -> f64 {
    params.delta * (size.powf(alpha) * size.ln()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruncationClass {
    /// |x| <= b_n
    Primed,
    /// b_n < |x| < delta sqrt(|n|^alpha log|n|)
    Double,
    /// |x| >= delta sqrt(|n|^alpha log|n|)
    Triple,
}

/// Partition membership. At small |n| the two thresholds may be out of
/// order (b_n >= the upper threshold); the triple test is applied first so
/// the classes always partition the line. `ordering_threshold` reports
/// where the intended ordering starts to hold.
pub fn classify(
    params: &BoundParams,
    reading: TruncationReading,
    alpha: f64,
    k: &LatticeIndex,
    x: f64,
) -> Result<TruncationClass> {
    let size = k.size()? as f64;
    if size < 2.0 {
        return Err(Error::Domain("classification needs |k| >= 2"));
    }
    let b = truncation_level(params, reading, size, alpha)?;
    let up = upper_threshold(params, size, alpha);
    let a = x.abs();
    Ok(if a >= up {
        TruncationClass::Triple
    } else if a <= b {
        TruncationClass::Primed
    } else {
        TruncationClass::Double
    })
}

/// Smallest size |n| >= 2 with b_n < delta sqrt(|n|^alpha log|n|), found by
/// scan up to `size_max`; None if the ordering never starts holding there.
pub fn ordering_threshold(
    params: &BoundParams,
    reading: TruncationReading,
    alpha: f64,
    size_max: u64,
) -> Option<u64> {
    (2..=size_max).find(|&s| {
        let size = s as f64;
        let b = truncation_level(params, reading, size, alpha).unwrap();
        b < upper_threshold(params, size, alpha)
    })
}

#[derive(Debug, Clone, Copy)]
pub struct TruncatedMoments {
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
    /// Var X' <= EX'^2 <= EX^2 = sigma^2 (upper chain; always checkable).
    pub variance_upper: f64,
    /// sigma^2 (1 - delta), the large-|n| lower bound on Var X'.
    pub variance_lower: f64,
}

/// Monte Carlo mean and variance of the level-b_n-truncated summand
/// (the variate kept when |x| <= b_n, replaced by 0 otherwise).
pub fn truncated_moments(
    field: &FieldSpec,
    params: &BoundParams,
    reading: TruncationReading,
    alpha: f64,
    k: &LatticeIndex,
    mc_reps: u64,
) -> Result<TruncatedMoments> {
    if mc_reps < 10_000 {
        return Err(Error::Domain("truncated moment estimation needs >= 1e4 reps"));
    }
    let size = k.size()? as f64;
    let b = truncation_level(params, reading, size, alpha)?;
    let mut s1 = crate::numeric::CompensatedSum::new();
    let mut s2 = crate::numeric::CompensatedSum::new();
    let mut s4 = crate::numeric::CompensatedSum::new();
    for i in 1..=mc_reps {
        let x = field.sample_coords(&[i, u64::MAX]);
        let t = if x.abs() <= b { x } else { 0.0 };
        s1.add(t);
        s2.add(t * t);
        s4.add(t * t * t * t);
    }
    let m = mc_reps as f64;
    let mean = s1.value() / m;
    let ex2 = s2.value() / m;
    let variance = ex2 - mean * mean;
    let mean_se = (variance.max(0.0) / m).sqrt();
    let var_of_sq = (s4.value() / m - ex2 * ex2).max(0.0);
    let sigma2 = field
        .distribution
        .variance()
        .ok_or(Error::Domain("truncated moment report needs finite variance"))?;
    Ok(TruncatedMoments {
        mean,
        mean_se,
        variance,
        variance_se: (var_of_sq / m).sqrt(),
        variance_upper: sigma2,
        variance_lower: sigma2 * (1.0 - params.delta),
    })
}

/// epsilon^2 (1 - delta)^3 / sigma^2: the polynomial decay exponent of the
/// upper exponential tail bound.
pub fn upper_exponent(params: &BoundParams) -> f64 {
    let d = 1.0 - params.delta;
    params.epsilon * params.epsilon * d * d * d / (params.sigma * params.sigma)
}

/// epsilon^2 (1 + delta)^2 (1 + gamma) / (sigma^2 (1 - delta)): the decay
/// exponent of the lower exponential bound.
pub fn lower_exponent(params: &BoundParams) -> f64 {
    let u = 1.0 + params.delta;
    params.epsilon * params.epsilon * u * u * (1.0 + params.gamma)
        / (params.sigma * params.sigma * (1.0 - params.delta))
}

/// The thinned-subsequence versions carry a beta multiplier.
pub fn upper_exponent_scaled(params: &BoundParams, beta: f64) -> f64 {
    beta * upper_exponent(params)
}

pub fn lower_exponent_scaled(params: &BoundParams, beta: f64) -> f64 {
    beta * lower_exponent(params)
}

/// The epsilon at which the upper-bound series over the beta-thinned power
/// subsequence sits exactly on the convergence boundary.
pub fn critical_epsilon(sigma: f64, delta: f64, alpha: f64, beta: f64) -> f64 {
    let d = 1.0 - delta;
    sigma * ((1.0 - alpha) / (beta * d * d * d)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesVerdict {
    Converges,
    Diverges,
    /// theta = 1/kappa exactly: the comparison test is silent.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesKind {
    Lambda,
    A,
    LambdaStar,
    AStar,
}

/// Sum_i d(i) i^{-kappa theta} with kappa = 1/(1-alpha) (plain sets) or
/// beta/(1-alpha) (starred sets): converges iff theta > 1/kappa, diverges
/// iff theta < 1/kappa, boundary at equality.
pub fn series_verdict(theta: f64, kind: SeriesKind, alpha: f64, beta: f64) -> Result<SeriesVerdict> {
    if theta < 0.0 {
        return Err(Error::Domain("series exponent must be nonnegative"));
    }
    let kappa = match kind {
        SeriesKind::Lambda | SeriesKind::A => 1.0 / (1.0 - alpha),
        SeriesKind::LambdaStar | SeriesKind::AStar => beta / (1.0 - alpha),
    };
    let crit = 1.0 / kappa;
    Ok(if theta > crit {
        SeriesVerdict::Converges
    } else if theta < crit {
        SeriesVerdict::Diverges
    } else {
        SeriesVerdict::Boundary
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Distribution;
    use proptest::prelude::*;

    fn params(sigma: f64, delta: f64, epsilon: f64) -> BoundParams {
        BoundParams::new(sigma, delta, epsilon, 0.5, 0.5).unwrap()
    }

    #[test]
    fn level_formula_examples() {
        let p = params(1.0, 0.1, 1.0);
        let size = 4.0f64.exp();
        let b = truncation_level(&p, TruncationReading::Displayed, size, 0.5).unwrap();
        assert!((b - 0.1 * size.powf(0.25) / 4.0).abs() < 1e-14);
        assert!((b - 0.06796).abs() < 5e-4, "b {b}");
        // unit cancellation at |n| = e
        let p2 = BoundParams::new(2.0, 0.999, 2.0, 0.5, 0.5).unwrap();
        let b2 = truncation_level(&p2, TruncationReading::Displayed, std::f64::consts::E, 0.7)
            .unwrap();
        assert!((b2 - 0.999 * (0.7f64 / 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn level_scales_with_delta() {
        let size = 100.0;
        let small = truncation_level(&params(1.0, 0.01, 1.0), TruncationReading::Displayed, size, 0.5).unwrap();
        let big = truncation_level(&params(1.0, 0.5, 1.0), TruncationReading::Displayed, size, 0.5).unwrap();
        assert!((big / small - 50.0).abs() < 1e-9);
    }

    #[test]
    fn level_rejects_tiny_sizes() {
        assert!(truncation_level(&params(1.0, 0.1, 1.0), TruncationReading::Displayed, 1.0, 0.5)
            .is_err());
    }

    #[test]
    fn readings_differ_but_agree_at_log_one() {
        let p = params(1.0, 0.1, 1.0);
        let e = std::f64::consts::E;
        let a = truncation_level(&p, TruncationReading::Displayed, e, 0.5).unwrap();
        let b = truncation_level(&p, TruncationReading::Alternative, e, 0.5).unwrap();
        assert!((a - b).abs() < 1e-14);
        let a = truncation_level(&p, TruncationReading::Displayed, 1e6, 0.5).unwrap();
        let b = truncation_level(&p, TruncationReading::Alternative, 1e6, 0.5).unwrap();
        assert!(a < b);
    }

    #[test]
    fn classify_examples() {
        let p = params(1.0, 0.1, 1.0);
        let k = LatticeIndex::new(vec![100, 100]).unwrap();
        let r = TruncationReading::Displayed;
        assert_eq!(classify(&p, r, 0.5, &k, 0.0).unwrap(), TruncationClass::Primed);
        let up = upper_threshold(&p, 1e4, 0.5);
        let b = truncation_level(&p, r, 1e4, 0.5).unwrap();
        assert!(b < up);
        let mid = 0.5 * (b + up);
        assert_eq!(classify(&p, r, 0.5, &k, mid).unwrap(), TruncationClass::Double);
        assert_eq!(
            classify(&p, r, 0.5, &k, 10.0 * up).unwrap(),
            TruncationClass::Triple
        );
    }

    #[test]
    fn ordering_threshold_exists() {
        let p = params(1.0, 0.1, 1.0);
        let t = ordering_threshold(&p, TruncationReading::Displayed, 0.5, 1000).unwrap();
        assert!(t >= 2);
        // verify it is genuinely the first size where ordering holds
        for s in 2..t {
            let size = s as f64;
            assert!(
                truncation_level(&p, TruncationReading::Displayed, size, 0.5).unwrap()
                    >= upper_threshold(&p, size, 0.5)
            );
        }
    }

    #[test]
    fn exponent_closed_forms() {
        assert!((upper_exponent(&BoundParams::new(1.0, 1e-12, 1.0, 0.5, 0.5).unwrap()) - 1.0).abs() < 1e-9);
        let p = params(1.0, 0.1, 1.0);
        assert!((upper_exponent(&p) - 0.729).abs() < 1e-12);
        // epsilon = sigma sqrt(1 - alpha), delta, gamma -> 0 gives 1 - alpha
        let alpha = 0.37;
        let p = BoundParams::new(1.0, 1e-9, (1.0f64 - alpha).sqrt(), 1e-9, 0.5).unwrap();
        assert!((lower_exponent(&p) - (1.0 - alpha)).abs() < 1e-7);
    }

    #[test]
    fn critical_epsilon_extrapolates_to_threshold() {
        for beta in [1.0, 2.0, 4.0] {
            for alpha in [0.3, 0.5, 0.7] {
                let e1 = critical_epsilon(1.0, 0.01, alpha, beta);
                let e2 = critical_epsilon(1.0, 0.02, alpha, beta);
                let extrap = 2.0 * e1 - e2;
                let target = ((1.0 - alpha) / beta as f64).sqrt();
                assert!((extrap / target - 1.0).abs() < 0.01, "beta={beta} alpha={alpha}");
            }
        }
    }

    #[test]
    fn series_verdicts() {
        // kappa = 2 (alpha = 0.5, plain)
        assert_eq!(
            series_verdict(1.0, SeriesKind::Lambda, 0.5, 1.0).unwrap(),
            SeriesVerdict::Converges
        );
        assert_eq!(
            series_verdict(0.25, SeriesKind::Lambda, 0.5, 1.0).unwrap(),
            SeriesVerdict::Diverges
        );
        assert_eq!(
            series_verdict(0.5, SeriesKind::A, 0.5, 1.0).unwrap(),
            SeriesVerdict::Boundary
        );
        // starred set halves the critical exponent at beta = 2
        assert_eq!(
            series_verdict(0.3, SeriesKind::AStar, 0.5, 2.0).unwrap(),
            SeriesVerdict::Converges
        );
    }

    #[test]
    fn truncated_moments_trivial_fields() {
        let p = params(1.0, 0.1, 1.0);
        let k = LatticeIndex::new(vec![100, 100]).unwrap();
        let zero = FieldSpec::new(Distribution::PointMass { value: 0.0 }, 1);
        let m = truncated_moments(&zero, &p, TruncationReading::Displayed, 0.5, &k, 10_000).unwrap();
        assert_eq!(m.mean, 0.0);
        assert_eq!(m.variance, 0.0);
        // rademacher with b >= 1: no truncation at all
        let p_loose = params(1.0, 0.9, 0.1);
        let b = truncation_level(&p_loose, TruncationReading::Displayed, 1e4, 0.5).unwrap();
        assert!(b >= 1.0);
        let rad = FieldSpec::new(Distribution::Rademacher, 2);
        let m = truncated_moments(&rad, &p_loose, TruncationReading::Displayed, 0.5, &k, 50_000)
            .unwrap();
        assert!(m.mean.abs() < 4.0 * m.mean_se.max(1e-3));
        // untruncated rademacher: second moment is exactly 1, variance
        // differs from it only by the squared sample mean
        assert!((m.variance - 1.0).abs() < 1e-4, "var {}", m.variance);
    }

    #[test]
    fn truncated_variance_matches_quadrature_oracle() {
        // N(0,1) truncated at a tight level: compare with direct integration
        let p = params(1.0, 0.1, 1.0);
        let size = 4.0f64.exp();
        let k = LatticeIndex::new(vec![55]).unwrap(); // |k| = 55 ~ e^4
        let b = truncation_level(&p, TruncationReading::Displayed, 55.0, 0.5).unwrap();
        let field = FieldSpec::new(Distribution::Normal { sigma: 1.0 }, 3);
        let m = truncated_moments(&field, &p, TruncationReading::Displayed, 0.5, &k, 1_000_000)
            .unwrap();
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let want = 2.0 * crate::numeric::integrate(|x| x * x * pdf(x), 0.0, b, 1e-14).unwrap();
        assert!(
            (m.variance - want).abs() < 3.0 * m.variance_se.max(1e-6),
            "mc {} oracle {want} se {}",
            m.variance,
            m.variance_se
        );
        let _ = size;
    }

    #[test]
    fn truncated_variance_never_exceeds_sigma2() {
        let p = params(1.5, 0.2, 0.8);
        let k = LatticeIndex::new(vec![40, 40]).unwrap();
        for seed in 0..5 {
            let field = FieldSpec::new(Distribution::Normal { sigma: 1.5 }, seed);
            let m =
                truncated_moments(&field, &p, TruncationReading::Displayed, 0.5, &k, 50_000).unwrap();
            assert!(m.variance <= m.variance_upper + 3.0 * m.variance_se);
        }
    }

    proptest! {
        #[test]
        fn classes_partition_the_line(
            x in -1e6f64..1e6,
            c1 in 2u64..500,
            c2 in 1u64..500,
            delta in 0.01f64..0.99,
            eps in 0.1f64..10.0,
        ) {
            let p = BoundParams::new(1.0, delta, eps, 0.5, 0.5).unwrap();
            let k = LatticeIndex::new(vec![c1, c2]).unwrap();
            // exactly one class claims x: classify is total and deterministic
            let a = classify(&p, TruncationReading::Displayed, 0.5, &k, x).unwrap();
            let b = classify(&p, TruncationReading::Displayed, 0.5, &k, x).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn upper_exponent_decreasing_in_delta(
            d1 in 0.01f64..0.5, bump in 0.01f64..0.4,
        ) {
            let lo = BoundParams::new(1.0, d1, 1.0, 0.5, 0.5).unwrap();
            let hi = BoundParams::new(1.0, d1 + bump, 1.0, 0.5, 0.5).unwrap();
            prop_assert!(upper_exponent(&hi) < upper_exponent(&lo));
        }

        #[test]
        fn lower_exponent_increasing_in_delta_and_gamma(
            d1 in 0.01f64..0.5, bump in 0.01f64..0.4, g in 0.01f64..2.0, gbump in 0.01f64..2.0,
        ) {
            let base = BoundParams::new(1.0, d1, 1.0, g, 0.5).unwrap();
            let d_hi = BoundParams::new(1.0, d1 + bump, 1.0, g, 0.5).unwrap();
            let g_hi = BoundParams::new(1.0, d1, 1.0, g + gbump, 0.5).unwrap();
            prop_assert!(lower_exponent(&d_hi) > lower_exponent(&base));
            prop_assert!(lower_exponent(&g_hi) > lower_exponent(&base));
        }
    }
}
