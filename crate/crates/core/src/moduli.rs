//! Moduli of continuity: the Hölder family, the three slowly varying
//! families used as examples of the infinite-slope condition, and helpers to
//! validate the axioms on finite grids.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Named families with built-in formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LogFamily {
    /// `ln^α(t + 1)`, α ∈ (0, 1).
    LogPower,
    /// `t^α ln(1/t)` up to `e^{-1/α}`, then the plateau `1/(αe)`; α ∈ (0, 1].
    PowerLog,
    /// `ln^{-α}(1/t)` up to `e^{-(1+α)}`, then the plateau `(1+α)^{-α}`; α ∈ (0, 1].
    InverseLog,
}

#[derive(Clone)]
enum Kind {
    Holder(f64),
    Family(LogFamily, f64),
    Lipschitz,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// A modulus of continuity ω, immutable after construction.
#[derive(Clone)]
pub struct Modulus {
    name: String,
    kind: Kind,
    convex_upwards: bool,
}

impl fmt::Debug for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Modulus")
            .field("name", &self.name)
            .field("convex_upwards", &self.convex_upwards)
            .finish()
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// `ω(t) = t^α` with `0 < α < 1`.
pub fn make_holder(alpha: f64) -> Result<Modulus> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            name: "alpha",
            value: alpha,
            expected: "0 < alpha < 1",
        });
    }
    Ok(Modulus {
        name: format!("holder:{alpha}"),
        kind: Kind::Holder(alpha),
        convex_upwards: true,
    })
}

pub fn make_log_modulus(family: LogFamily, alpha: f64) -> Result<Modulus> {
    let (ok, expected, tag) = match family {
        LogFamily::LogPower => (alpha > 0.0 && alpha < 1.0, "0 < alpha < 1", "logpow"),
        LogFamily::PowerLog => (alpha > 0.0 && alpha <= 1.0, "0 < alpha <= 1", "powlog"),
        LogFamily::InverseLog => (alpha > 0.0 && alpha <= 1.0, "0 < alpha <= 1", "invlog"),
    };
    if !ok {
        return Err(Error::Domain {
            name: "alpha",
            value: alpha,
            expected,
        });
    }
    Ok(Modulus {
        name: format!("{tag}:{alpha}"),
        kind: Kind::Family(family, alpha),
        convex_upwards: true,
    })
}

impl Modulus {
    /// `ω(t) = t`. Concave, but with finite slope at zero.
    pub fn lipschitz() -> Modulus {
        Modulus {
            name: "lip".to_string(),
            kind: Kind::Lipschitz,
            convex_upwards: true,
        }
    }

    /// Wraps an arbitrary function. Nothing is checked: run
    /// [`check_modulus_axioms`] on the result when in doubt.
    pub fn from_fn<F>(name: impl Into<String>, f: F, convex_upwards: bool) -> Modulus
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Modulus {
            name: name.into(),
            kind: Kind::Custom(Arc::new(f)),
            convex_upwards,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn convex_upwards(&self) -> bool {
        self.convex_upwards
    }

    /// The exponent of the Hölder family, `None` for every other modulus.
    pub fn holder_exponent(&self) -> Option<f64> {
        match self.kind {
            Kind::Holder(a) => Some(a),
            _ => None,
        }
    }

    /// Family parameter α, if any.
    pub fn alpha(&self) -> Option<f64> {
        match self.kind {
            Kind::Holder(a) | Kind::Family(_, a) => Some(a),
            _ => None,
        }
    }

    /// Points where the piecewise families switch to their plateau.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            Kind::Family(LogFamily::PowerLog, a) => vec![(-1.0 / a).exp()],
            Kind::Family(LogFamily::InverseLog, a) => vec![(-(1.0 + a)).exp()],
            _ => Vec::new(),
        }
    }

    /// Evaluates ω at `|t|`.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        if t == 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Holder(a) => t.powf(*a),
            Kind::Lipschitz => t,
            Kind::Family(LogFamily::LogPower, a) => t.ln_1p().powf(*a),
            Kind::Family(LogFamily::PowerLog, a) => {
                if t <= (-1.0 / a).exp() {
                    t.powf(*a) * (-t.ln())
                } else {
                    1.0 / (a * std::f64::consts::E)
                }
            }
            Kind::Family(LogFamily::InverseLog, a) => {
                if t <= (-(1.0 + a)).exp() {
                    (-t.ln()).powf(-a)
                } else {
                    (1.0 + a).powf(-a)
                }
            }
            Kind::Custom(f) => f(t),
        }
    }
}

/// Parses the CLI descriptor syntax `family:alpha`, e.g. `holder:0.5`.
/// `lip` (no parameter) selects ω(t) = t.
impl FromStr for Modulus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Modulus> {
        let s = s.trim();
        if s == "lip" {
            return Ok(Modulus::lipschitz());
        }
        let (family, param) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("modulus `{s}` must look like family:alpha")))?;
        let alpha: f64 = param
            .parse()
            .map_err(|_| Error::Config(format!("bad modulus parameter `{param}`")))?;
        match family {
            "holder" => make_holder(alpha),
            "logpow" => make_log_modulus(LogFamily::LogPower, alpha),
            "powlog" => make_log_modulus(LogFamily::PowerLog, alpha),
            "invlog" => make_log_modulus(LogFamily::InverseLog, alpha),
            other => Err(Error::Config(format!(
                "unknown modulus family `{other}` (expected holder, logpow, powlog, invlog or lip)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxiomReport {
    pub holds: bool,
    pub max_violation: f64,
}

/// Checks ω(0) = 0, monotonicity, subadditivity and (for convex-upwards moduli)
/// midpoint concavity over every pair of grid points.
pub fn check_modulus_axioms(m: &Modulus, grid: &[f64], tol: f64) -> AxiomReport {
    let mut worst = m.eval(0.0).abs();
    let values: Vec<f64> = grid.iter().map(|&t| m.eval(t)).collect();
    for (i, (&a, &wa)) in grid.iter().zip(&values).enumerate() {
        for (&b, &wb) in grid[i..].iter().zip(&values[i..]) {
            let (lo, hi, wlo, whi) = if a <= b {
                (a, b, wa, wb)
            } else {
                (b, a, wb, wa)
            };
            worst = worst.max(wlo - whi);
            worst = worst.max(m.eval(lo + hi) - wlo - whi);
            if m.convex_upwards {
                worst = worst.max(0.5 * (wlo + whi) - m.eval(0.5 * (lo + hi)));
            }
        }
    }
    let max_violation = worst.max(0.0);
    AxiomReport {
        holds: max_violation <= tol,
        max_violation,
    }
}

/// Dyadic proxy for `ω(t)/t → ∞` as `t → 0`: the ratios `ω(2^{-k})·2^k`,
/// `k = 1..=k_max`, must be strictly increasing over the second half of the
/// sequence. This is a heuristic; no finite test certifies a limit.
pub fn has_infinite_slope(m: &Modulus, k_max: u32) -> bool {
    let k_max = k_max.max(8);
    let ratios: Vec<f64> = (1..=k_max)
        .map(|k| {
            let t = (-(k as f64)).exp2();
            m.eval(t) / t
        })
        .collect();
    let tail = &ratios[ratios.len() / 2..];
    tail.iter().all(|r| r.is_finite()) && tail.windows(2).all(|w| w[1] > w[0])
}
