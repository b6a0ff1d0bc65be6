//! Elliptic integral `𝐊(q)`, the constant `K_{p,q}`, the functional `e_n(ω)`
//! and the principal terms of the three asymptotic formulas.
//!
//! Every prediction carries the common prefactor `q^{n−p+1}/p` separately
//! (as a logarithm) so that ratios stay representable when `q^{n−p+1}`
//! underflows.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{PoissonParams, VPParams};
use crate::moduli::Modulus;
use crate::quadrature;

/// Absolute tolerance of [`k_pq_quadrature`].
pub const KPQ_TOLERANCE: f64 = 1e-11;
/// Absolute tolerance of [`e_n`].
pub const EN_TOLERANCE: f64 = 1e-12;

/// Arithmetic–geometric mean of two non-negative numbers.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 4.0 * f64::EPSILON * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    0.5 * (a + b)
}

/// Complete elliptic integral of the first kind with modulus `q`:
/// `∫₀^{π/2} dt / √(1 − q² sin² t) = π / (2 AGM(1, √(1 − q²)))`.
pub fn elliptic_k(q: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::Domain {
            name: "q",
            value: q,
            expected: "0 <= q < 1",
        });
    }
    Ok(FRAC_PI_2 / agm(1.0, ((1.0 - q) * (1.0 + q)).sqrt()))
}

fn check_pq(p: usize, q: f64) -> Result<()> {
    if p == 0 {
        return Err(Error::Domain {
            name: "p",
            value: 0.0,
            expected: "p >= 1",
        });
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain {
            name: "q",
            value: q,
            expected: "0 < q < 1",
        });
    }
    Ok(())
}

/// `K_{p,q} = ∫₀^{2π} √(1 − 2q^p cos pt + q^{2p}) / (1 − 2q cos t + q²) dt`
/// by adaptive Gauss–Legendre quadrature.
pub fn k_pq_quadrature(p: usize, q: f64) -> Result<f64> {
    check_pq(p, q)?;
    let qp = q.powi(p as i32);
    let pf = p as f64;
    let f = |t: f64| {
        (1.0 - 2.0 * qp * (pf * t).cos() + qp * qp).sqrt() / (1.0 - 2.0 * q * t.cos() + q * q)
    };
    // Even about π.
    Ok(2.0 * quadrature::integrate(&f, 0.0, PI, 0.5 * KPQ_TOLERANCE)?)
}

/// `K_{p,q} = 4 (1 − q^{2p})/(1 − q²) 𝐊(q^p)`.
pub fn k_pq_closed(p: usize, q: f64) -> Result<f64> {
    check_pq(p, q)?;
    let qp = q.powi(p as i32);
    Ok(4.0 * (1.0 - qp * qp) / (1.0 - q * q) * elliptic_k(qp)?)
}

/// Remainder exponent: 2 for `p = 1`, 3 otherwise.
pub fn delta_p(p: usize) -> u32 {
    if p == 1 {
        2
    } else {
        3
    }
}

/// `e_n(ω) = ∫₀^{π/2} ω(2t/n) sin t dt` for convex-upwards ω.
pub fn e_n(m: &Modulus, n: usize) -> Result<f64> {
    if !m.convex_upwards() {
        return Err(Error::Unsupported(format!(
            "e_n is only defined here for convex-upwards moduli, `{m}` is not"
        )));
    }
    if n == 0 {
        return Err(Error::Domain {
            name: "n",
            value: 0.0,
            expected: "n >= 1",
        });
    }
    let scale = 2.0 / n as f64;
    let breaks: Vec<f64> = m.breakpoints().iter().map(|b| b / scale).collect();
    quadrature::integrate_with_breaks(
        &|t: f64| m.eval(scale * t) * t.sin(),
        0.0,
        FRAC_PI_2,
        &breaks,
        EN_TOLERANCE,
    )
}

/// `∫₀^{π/2} t^α sin t dt`.
pub fn holder_sine_moment(alpha: f64) -> Result<f64> {
    quadrature::integrate(
        &|t: f64| t.powf(alpha) * t.sin(),
        0.0,
        FRAC_PI_2,
        EN_TOLERANCE,
    )
}

/// Principal term and remainder scale of one asymptotic formula.
///
/// `principal` and `remainder_scale` are the full quantities; the
/// `normalized_*` fields are the same divided by `q^{n−p+1}/p`, whose natural
/// logarithm is `ln_prefactor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremPrediction {
    pub principal: f64,
    pub remainder_scale: f64,
    pub bracket_low: Option<f64>,
    pub bracket_high: Option<f64>,
    pub normalized_principal: f64,
    pub normalized_remainder: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized_bracket: Option<(f64, f64)>,
    pub ln_prefactor: f64,
}

impl TheoremPrediction {
    fn from_normalized(
        params: &PoissonParams,
        vp: &VPParams,
        principal: f64,
        remainder: f64,
        bracket: Option<(f64, f64)>,
    ) -> Self {
        let ln_prefactor = vp.offset() as f64 * params.q().ln() - (vp.p() as f64).ln();
        let pre = ln_prefactor.exp();
        Self {
            principal: pre * principal,
            remainder_scale: pre * remainder,
            bracket_low: bracket.map(|b| pre * b.0),
            bracket_high: bracket.map(|b| pre * b.1),
            normalized_principal: principal,
            normalized_remainder: remainder,
            normalized_bracket: bracket,
            ln_prefactor,
        }
    }

    /// `remainder_scale / principal`; above 0.5 the principal term is not
    /// considered dominant.
    pub fn remainder_ratio(&self) -> f64 {
        self.normalized_remainder / self.normalized_principal
    }
}

/// `principal = (q^{n−p+1}/p)(K_{p,q}/π²) e_{n−p+1}(ω)`,
/// `remainder = (q^{n−p+1}/p) ω(π)/((1−q)^{δ(p)}(n−p+1))`.
pub fn theorem1_prediction(
    m: &Modulus,
    params: &PoissonParams,
    vp: &VPParams,
) -> Result<TheoremPrediction> {
    let q = params.q();
    let off = vp.offset();
    let k = k_pq_closed(vp.p(), q)?;
    let principal = k / (PI * PI) * e_n(m, off)?;
    let remainder = m.eval(PI) / ((1.0 - q).powi(delta_p(vp.p()) as i32) * off as f64);
    Ok(TheoremPrediction::from_normalized(
        params, vp, principal, remainder, None,
    ))
}

/// Hölder case `ω(t) = t^α` written with the explicit moment
/// `∫₀^{π/2} t^α sin t dt`.
pub fn theorem2_prediction(
    alpha: f64,
    params: &PoissonParams,
    vp: &VPParams,
) -> Result<TheoremPrediction> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            name: "alpha",
            value: alpha,
            expected: "0 < alpha < 1",
        });
    }
    let q = params.q();
    let off = vp.offset() as f64;
    let scale = off.powf(-alpha);
    let k = k_pq_closed(vp.p(), q)?;
    let principal = scale * 2f64.powf(alpha) / (PI * PI) * k * holder_sine_moment(alpha)?;
    let remainder = scale / ((1.0 - q).powi(delta_p(vp.p()) as i32) * off.powf(1.0 - alpha));
    Ok(TheoremPrediction::from_normalized(
        params, vp, principal, remainder, None,
    ))
}

/// Two-sided bracket with `J ∈ [((1+q^p)/(1+q)) 𝐊(q^p), 𝐊(q)]`.
pub fn theorem3_bracket(
    m: &Modulus,
    params: &PoissonParams,
    vp: &VPParams,
) -> Result<TheoremPrediction> {
    let q = params.q();
    let p = vp.p();
    let off = vp.offset();
    let qp = q.powi(p as i32);
    let j_low = (1.0 + qp) / (1.0 + q) * elliptic_k(qp)?;
    let j_high = elliptic_k(q)?;
    let e = e_n(m, off)?;
    let factor = 4.0 / (PI * PI) * (1.0 - qp) / (1.0 - q) * e;
    let (low, high) = (factor * j_low, factor * j_high);
    let remainder = m.eval(1.0 / off as f64) / ((1.0 - q).powi(delta_p(p) as i32) * off as f64);
    Ok(TheoremPrediction::from_normalized(
        params,
        vp,
        low,
        remainder,
        Some((low, high)),
    ))
}

/// `2π/(1 − q²)`, the `p → ∞` limit of `K_{p,q}`.
pub fn k_pq_limit(q: f64) -> f64 {
    TAU / (1.0 - q * q)
}
