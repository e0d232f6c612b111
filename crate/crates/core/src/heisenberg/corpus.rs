//! Closed-form test functions with exact horizontal gradients.

use serde::{Deserialize, Serialize};

use super::{horizontal, rho_gradient, HeisPoint};
use crate::{QflowError, Result};

/// `b(x) = exp(1 - 1/(1 - x))` for `x < 1`, zero otherwise; `b(0) = 1`.
fn bump(x: f64) -> (f64, f64) {
    if x >= 1.0 {
        return (0.0, 0.0);
    }
    let d = 1.0 - x;
    let b = (1.0 - 1.0 / d).exp();
    (b, -b / (d * d))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    Zero,
    /// `amp * b(|u|^4 / a^4)`, supported in the ball of radius `a`.
    Bump { radius: f64, amp: f64 },
    /// Bump composed with left translation by `center^{-1}`.
    TranslatedBump { center: HeisPoint, radius: f64, amp: f64 },
    /// `(c0 + cx x + cy y + ct t) * b(|u|^4 / a^4)`.
    PolyBump { coeffs: [f64; 4], radius: f64 },
    /// `f(delta_r u)`
    Dilated { inner: Box<TestFunction>, r: f64 },
}

impl TestFunction {
    pub fn value(&self, u: &HeisPoint) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Bump { radius, amp } => amp * bump(u.rho() / radius.powi(4)).0,
            Self::TranslatedBump { center, radius, amp } => {
                amp * bump(center.inverse().mul(u).rho() / radius.powi(4)).0
            }
            Self::PolyBump { coeffs, radius } => {
                let c = coeffs;
                (c[0] + c[1] * u.z.re + c[2] * u.z.im + c[3] * u.t) * bump(u.rho() / radius.powi(4)).0
            }
            Self::Dilated { inner, r } => inner.value(&u.dilate(*r)),
        }
    }

    /// `(X f, Y f)` at `u`.
    pub fn gradient(&self, u: &HeisPoint) -> [f64; 2] {
        match self {
            Self::Zero => [0.0, 0.0],
            Self::Bump { radius, amp } => {
                let a4 = radius.powi(4);
                let (_, db) = bump(u.rho() / a4);
                let g = rho_gradient(u);
                [amp * db / a4 * g[0], amp * db / a4 * g[1]]
            }
            Self::TranslatedBump { center, radius, amp } => {
                // X, Y commute with left translations.
                let w = center.inverse().mul(u);
                Self::Bump { radius: *radius, amp: *amp }.gradient(&w)
            }
            Self::PolyBump { coeffs, radius } => {
                let a4 = radius.powi(4);
                let (b, db) = bump(u.rho() / a4);
                let c = coeffs;
                let poly = c[0] + c[1] * u.z.re + c[2] * u.z.im + c[3] * u.t;
                let dp = horizontal(u, c[1], c[2], c[3]);
                let g = rho_gradient(u);
                [dp[0] * b + poly * db / a4 * g[0], dp[1] * b + poly * db / a4 * g[1]]
            }
            Self::Dilated { inner, r } => {
                let g = inner.gradient(&u.dilate(*r));
                [r * g[0], r * g[1]]
            }
        }
    }

    /// `|grad_b f|`
    pub fn gradient_norm(&self, u: &HeisPoint) -> f64 {
        let g = self.gradient(u);
        g[0].hypot(g[1])
    }

    /// Homogeneous radius outside which the function vanishes.
    pub fn support_radius(&self) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Bump { radius, .. } | Self::PolyBump { radius, .. } => *radius,
            // Korányi norm satisfies the triangle inequality.
            Self::TranslatedBump { center, radius, .. } => center.norm() + radius,
            Self::Dilated { inner, r } => inner.support_radius() / r,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Bump { radius, amp } => format!("bump a={radius} amp={amp}"),
            Self::TranslatedBump { center, radius, amp } => format!(
                "translated-bump x={} y={} t={} a={radius} amp={amp}",
                center.z.re, center.z.im, center.t
            ),
            Self::PolyBump { coeffs, radius } => format!(
                "poly-bump c0={} cx={} cy={} ct={} a={radius}",
                coeffs[0], coeffs[1], coeffs[2], coeffs[3]
            ),
            Self::Dilated { inner, r } => format!("{} dilate={r}", inner.label()),
        }
    }
}

impl std::str::FromStr for TestFunction {
    type Err = QflowError;

    /// `name key=value ...`, e.g. `bump a=0.8 amp=1` or
    /// `poly-bump c0=1 cx=0.5 a=0.9 dilate=2`.
    fn from_str(s: &str) -> Result<Self> {
        let mut words = s.split_whitespace();
        let name = words.next().ok_or_else(|| QflowError::Invalid("empty test function".into()))?;
        let mut kv = std::collections::BTreeMap::new();
        for w in words {
            let (k, v) = w.split_once('=').ok_or_else(|| QflowError::Invalid(format!("expected key=value, got '{w}'")))?;
            let v: f64 = v.parse().map_err(|_| QflowError::Invalid(format!("bad number in '{w}'")))?;
            kv.insert(k.to_string(), v);
        }
        let mut take = |k: &str, default: f64| kv.remove(k).unwrap_or(default);
        let base = match name {
            "zero" => Self::Zero,
            "bump" => Self::Bump { radius: take("a", 1.0), amp: take("amp", 1.0) },
            "translated-bump" => Self::TranslatedBump {
                center: HeisPoint::new(take("x", 0.0), take("y", 0.0), take("t", 0.0)),
                radius: take("a", 0.5),
                amp: take("amp", 1.0),
            },
            "poly-bump" => Self::PolyBump {
                coeffs: [take("c0", 1.0), take("cx", 0.0), take("cy", 0.0), take("ct", 0.0)],
                radius: take("a", 1.0),
            },
            other => return Err(QflowError::Invalid(format!("unknown test function '{other}'"))),
        };
        let dilate = take("dilate", 1.0);
        if let Some(k) = kv.keys().next() {
            return Err(QflowError::Invalid(format!("unknown parameter '{k}' for {name}")));
        }
        if !(dilate > 0.0) {
            return Err(QflowError::Invalid("dilation must be positive".into()));
        }
        Ok(if dilate == 1.0 { base } else { Self::Dilated { inner: Box::new(base), r: dilate } })
    }
}

/// `;`-separated list of test functions.
pub fn parse_corpus(s: &str) -> Result<Vec<TestFunction>> {
    s.split(';').map(str::trim).filter(|p| !p.is_empty()).map(str::parse).collect()
}

/// Bumps, a translated bump, non-radial polynomial bumps and a dilated copy,
/// all supported in the unit ball.
pub fn default_corpus() -> Vec<TestFunction> {
    parse_corpus(
        "bump a=1 amp=1; bump a=0.6 amp=2; translated-bump x=0.2 y=-0.1 t=0.15 a=0.5 amp=1; \
         poly-bump c0=1 cx=0.5 cy=-0.3 ct=0.4 a=0.9; poly-bump c0=0 cx=1 a=1; \
         poly-bump c0=1 cx=0.5 ct=0.4 a=0.9 dilate=2",
    )
    .expect("default corpus parses")
}
