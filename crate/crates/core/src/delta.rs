//! Pushing a normalized statistic through a smooth scalar map and
//! predicting the extreme limit points of the transformed trajectory from
//! the first nonvanishing derivative at the expansion point.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "g", rename_all = "kebab-case")]
pub enum TransformKind {
    Identity,
    Square,
    Cube,
    Exp,
    /// ln(1 + x); needs mu > -1.
    Log1pShifted,
    CoshMinusOne,
    /// c0 + c1 x + c2 x^2 + ... with exact derivatives.
    Polynomial { coeffs: Vec<f64> },
}

impl TransformKind {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TransformKind::Identity => x,
            TransformKind::Square => x * x,
            TransformKind::Cube => x * x * x,
            TransformKind::Exp => x.exp(),
            TransformKind::Log1pShifted => x.ln_1p(),
            TransformKind::CoshMinusOne => x.cosh() - 1.0,
            TransformKind::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            }
        }
    }

    /// (m, g^{(m)}(mu)): order and value of the first nonvanishing
    /// derivative at mu, analytically per catalog entry, then re-verified
    /// by central finite differences.
    pub fn derivative_order(&self, mu: f64) -> Result<(u32, f64)> {
        let analytic = self.analytic_order(mu)?;
        self.verify_order(mu, analytic)?;
        Ok(analytic)
    }

    fn analytic_order(&self, mu: f64) -> Result<(u32, f64)> {
        let nonzero = |v: f64| v.abs() > 1e-12;
        Ok(match self {
            TransformKind::Identity => (1, 1.0),
            TransformKind::Square => {
                if nonzero(mu) {
                    (1, 2.0 * mu)
                } else {
                    (2, 2.0)
                }
            }
            TransformKind::Cube => {
                if nonzero(mu) {
                    (1, 3.0 * mu * mu)
                } else {
                    (3, 6.0)
                }
            }
            TransformKind::Exp => (1, mu.exp()),
            TransformKind::Log1pShifted => {
                if mu <= -1.0 {
                    return Err(Error::Domain("log transform needs mu > -1"));
                }
                (1, 1.0 / (1.0 + mu))
            }
            TransformKind::CoshMinusOne => {
                if nonzero(mu) {
                    (1, mu.sinh())
                } else {
                    (2, 1.0)
                }
            }
            TransformKind::Polynomial { coeffs } => {
                let mut deriv: Vec<f64> = coeffs.clone();
                for m in 1..=coeffs.len().max(1) as u32 {
                    deriv = differentiate(&deriv);
                    let v = deriv.iter().rev().fold(0.0, |acc, &c| acc * mu + c);
                    if nonzero(v) {
                        return Ok((m, v));
                    }
                }
                return Err(Error::Domain(
                    "polynomial is constant near the expansion point",
                ));
            }
        })
    }

    fn verify_order(&self, mu: f64, (m, gm): (u32, f64)) -> Result<()> {
        let fd = |k: u32| self.finite_difference(mu, k);
        for k in 1..m {
            // all lower derivatives must vanish to finite-difference noise
            if fd(k).abs() > 1e-5 * gm.abs().max(1.0) {
                return Err(Error::Precondition(format!(
                    "derivative of order {k} does not vanish at mu = {mu}"
                )));
            }
        }
        let est = fd(m);
        if ((est - gm) / gm).abs() > 1e-6 {
            return Err(Error::Precondition(format!(
                "order-{m} derivative mismatch at mu = {mu}: analytic {gm}, numeric {est}"
            )));
        }
        Ok(())
    }

    fn finite_difference(&self, mu: f64, order: u32) -> f64 {
        let g = |x: f64| self.eval(x);
        match order {
            1 => {
                let h = 1e-6;
                (g(mu + h) - g(mu - h)) / (2.0 * h)
            }
            2 => {
                let h = 1e-4;
                (g(mu + h) - 2.0 * g(mu) + g(mu - h)) / (h * h)
            }
            3 => {
                let h = 1e-3;
                (g(mu + 2.0 * h) - 2.0 * g(mu + h) + 2.0 * g(mu - h) - g(mu - 2.0 * h))
                    / (2.0 * h * h * h)
            }
            k => {
                // recursive central difference for higher polynomial orders
                let h = 1e-2;
                let lower = |x: f64| {
                    let shifted = match self {
                        TransformKind::Polynomial { coeffs } => TransformKind::Polynomial {
                            coeffs: coeffs.clone(),
                        },
                        other => other.clone(),
                    };
                    let mut v = 0.0;
                    // k-th central difference stencil
                    for i in 0..=k {
                        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                        v += sign
                            * binom(k, i)
                            * shifted.eval(x + (k as f64 / 2.0 - i as f64) * h);
                    }
                    v / h.powi(k as i32)
                };
                lower(mu)
            }
        }
    }
}

fn binom(n: u32, k: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

fn differentiate(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedLimits {
    pub limsup: f64,
    pub liminf: f64,
    pub order: u32,
}

/// Extreme limit points of the transformed statistic, given the extreme
/// scale of the untransformed one. First order keeps the sign structure
/// (+-scale |g'|); odd higher orders keep it with the factorial correction;
/// even orders lose the sign, pinning the liminf at 0.
pub fn predicted_limits(kind: &TransformKind, mu: f64, scale: f64) -> Result<PredictedLimits> {
    if scale <= 0.0 {
        return Err(Error::Domain("limit scale must be positive"));
    }
    let (m, gm) = kind.derivative_order(mu)?;
    let fact: f64 = (1..=m as u64).map(|i| i as f64).product();
    let v = scale.powi(m as i32) * gm / fact;
    Ok(if m % 2 == 1 {
        PredictedLimits {
            limsup: v.abs(),
            liminf: -v.abs(),
            order: m,
        }
    } else {
        PredictedLimits {
            limsup: v,
            liminf: 0.0,
            order: m,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformedPoint {
    pub value: f64,
    pub running_max: f64,
    pub running_min: f64,
}

/// a_n^m (g(U_n / b_n) - g(mu)) per trajectory entry, with running
/// extremes. Entries are (a_n, b_n, U_n); a_n and b_n must be positive.
pub fn transform_trajectory(
    entries: &[(f64, f64, f64)],
    kind: &TransformKind,
    mu: f64,
) -> Result<Vec<TransformedPoint>> {
    let (m, _) = kind.derivative_order(mu)?;
    let g_mu = kind.eval(mu);
    let mut out = Vec::with_capacity(entries.len());
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for &(a_n, b_n, u_n) in entries {
        if a_n <= 0.0 || b_n <= 0.0 {
            return Err(Error::Domain("normalizing sequences must be positive"));
        }
        let value = a_n.powi(m as i32) * (kind.eval(u_n / b_n) - g_mu);
        hi = hi.max(value);
        lo = lo.min(value);
        out.push(TransformedPoint {
            value,
            running_max: hi,
            running_min: lo,
        });
    }
    Ok(out)
}
