//! Poisson kernel `P_{q,β}(t) = Σ_{k≥1} q^k cos(kt + βπ/2)`, its tails, and the
//! auxiliary amplitude/phase pair `Z_q`, `θ_q` with
//! `1/(1 − q e^{it}) = Z_q(t) e^{iθ_q(t)}`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sums::{FourierCoeffs, SampledPeriodicFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoissonParams {
    q: f64,
    beta: f64,
}

impl PoissonParams {
    /// `q` must lie strictly inside (0, 1). `beta` is reduced modulo 4.
    pub fn new(q: f64, beta: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain {
                name: "q",
                value: q,
                expected: "0 < q < 1",
            });
        }
        if !beta.is_finite() {
            return Err(Error::Domain {
                name: "beta",
                value: beta,
                expected: "finite",
            });
        }
        let mut beta = beta.rem_euclid(4.0);
        if beta >= 4.0 {
            beta = 0.0;
        }
        Ok(Self { q, beta })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// β reduced to [0, 4).
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The phase βπ/2.
    pub fn phase(&self) -> f64 {
        self.beta * FRAC_PI_2
    }
}

/// Orders `(n, p)` of the de la Vallée Poussin sum `V_{n,p}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VPParams {
    n: usize,
    p: usize,
}

impl VPParams {
    /// Requires `1 ≤ p < n`.
    pub fn new(n: usize, p: usize) -> Result<Self> {
        if p == 0 || p >= n {
            return Err(Error::Config(format!(
                "de la Vallée Poussin orders need 1 <= p < n, got n = {n}, p = {p}"
            )));
        }
        Ok(Self { n, p })
    }

    /// Like [`VPParams::new`] but also accepts `p == n` (then `V_{n,n}` is the
    /// Fejér-type mean starting at `S_0`).
    pub fn new_inclusive(n: usize, p: usize) -> Result<Self> {
        if p == 0 || p > n {
            return Err(Error::Config(format!(
                "de la Vallée Poussin orders need 1 <= p <= n, got n = {n}, p = {p}"
            )));
        }
        Ok(Self { n, p })
    }

    /// Builds the pair from `n − p + 1` and `p`.
    pub fn from_offset(n_minus_p_plus_1: usize, p: usize) -> Result<Self> {
        if n_minus_p_plus_1 < 2 {
            return Err(Error::Config("n - p + 1 must be at least 2".into()));
        }
        Self::new(n_minus_p_plus_1 + p - 1, p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `n − p + 1`, the index that governs every asymptotic quantity.
    pub fn offset(&self) -> usize {
        self.n - self.p + 1
    }
}

pub fn poisson_kernel(params: &PoissonParams, t: f64) -> f64 {
    // q e^{it} / (1 − q e^{it}) = (q cos t − q² + i q sin t) / (1 − 2q cos t + q²)
    let q = params.q;
    let (s, c) = t.sin_cos();
    let denom = 1.0 - 2.0 * q * c + q * q;
    let re = q * (c - q) / denom;
    let im = q * s / denom;
    let (ps, pc) = params.phase().sin_cos();
    pc * re - ps * im
}

pub fn z_q(q: f64, t: f64) -> f64 {
    // (1−q)² + 4q sin²(t/2): no cancellation near t = 0 when q → 1
    let s = (0.5 * t).sin();
    1.0 / ((1.0 - q) * (1.0 - q) + 4.0 * q * s * s).sqrt()
}

/// Continuous in `t` because `1 − q cos t > 0`.
pub fn theta_q(q: f64, t: f64) -> f64 {
    let (s, c) = t.sin_cos();
    (q * s).atan2(1.0 - q * c)
}

/// `Σ_{j≥m} q^j cos(jt + βπ/2) = q^m Z_q(t) cos(mt + θ_q(t) + βπ/2)`.
pub fn poisson_tail(params: &PoissonParams, m: usize, t: f64) -> f64 {
    let q = params.q;
    q.powi(m as i32) * z_q(q, t) * (m as f64 * t + theta_q(q, t) + params.phase()).cos()
}

/// The block `Σ_{k=n−p+1}^{n} q^k cos(kt + θ_q(t) + βπ/2)` in closed form.
pub fn block_sum(params: &PoissonParams, vp: &VPParams, t: f64) -> f64 {
    let q = params.q;
    let p = vp.p;
    let qp = q.powi(p as i32);
    let pt = p as f64 * t;
    let m = vp.offset() as f64;
    q.powi(vp.offset() as i32) * z_q(q, t) / z_q(qp, pt)
        * (m * t + 2.0 * theta_q(q, t) - theta_q(qp, pt) + params.phase()).cos()
}

/// The kernel of the integral representation of `ρ_{n,p}`:
/// `(q^{n−p+1}/(πp)) Z_q²(t)/Z_{q^p}(pt) cos((n−p+1)t + 2θ_q(t) − θ_{q^p}(pt) + βπ/2)`.
pub fn deviation_kernel(params: &PoissonParams, vp: &VPParams, t: f64) -> f64 {
    params.q.powi(vp.offset() as i32) * normalized_deviation_kernel(params, vp, t)
}

/// [`deviation_kernel`] without the factor `q^{n−p+1}`.
pub fn normalized_deviation_kernel(params: &PoissonParams, vp: &VPParams, t: f64) -> f64 {
    let q = params.q;
    let p = vp.p;
    let qp = q.powi(p as i32);
    let pt = p as f64 * t;
    let zq = z_q(q, t);
    zq * zq / z_q(qp, pt)
        * (vp.offset() as f64 * t + 2.0 * theta_q(q, t) - theta_q(qp, pt) + params.phase()).cos()
        / (PI * p as f64)
}

/// Smallest quadrature grid accepted for Poisson integrals.
pub const MIN_POISSON_GRID: usize = 256;

/// `a0 + (1/π)∫₀^{2π} φ(x + t) P_{q,β}(t) dt` by the periodic trapezoid rule on
/// `grid` nodes (a power of two, at least 256).
pub fn poisson_integral<F: Fn(f64) -> f64>(
    phi: F,
    params: &PoissonParams,
    a0: f64,
    x: f64,
    grid: usize,
) -> Result<f64> {
    check_grid(grid)?;
    let h = TAU / grid as f64;
    let sum: f64 = (0..grid)
        .map(|j| {
            let t = j as f64 * h;
            phi(x + t) * poisson_kernel(params, t)
        })
        .sum();
    Ok(a0 + sum * h / PI)
}

/// Number of harmonics kept by the spectral route: the smallest `K` with
/// `q^K/(1 − q) < 1e-15`.
pub fn spectral_cutoff(q: f64) -> usize {
    let k = ((1e-15 * (1.0 - q)).ln() / q.ln()).ceil();
    k.max(1.0) as usize
}

/// Samples of the Poisson integral of sampled `phi` on the same grid: harmonic
/// `k` of φ is attenuated by `q^k` and its phase shifted by `−βπ/2`.
pub fn poisson_integral_spectral(
    phi: &SampledPeriodicFunction,
    params: &PoissonParams,
    a0: f64,
) -> Result<SampledPeriodicFunction> {
    check_grid(phi.len())?;
    let k_max = spectral_cutoff(params.q).min(phi.len() / 2 - 1);
    let coeffs = phi.fourier_coeffs(k_max)?;
    poisson_transform(&coeffs, params, a0).synthesize(phi.len())
}

/// Fourier coefficients of the Poisson integral of a function with
/// coefficients `phi`.
pub fn poisson_transform(phi: &FourierCoeffs, params: &PoissonParams, a0: f64) -> FourierCoeffs {
    let (ps, pc) = params.phase().sin_cos();
    let mut qk = 1.0;
    let (a, b): (Vec<f64>, Vec<f64>) = phi
        .a
        .iter()
        .zip(&phi.b)
        .map(|(&a, &b)| {
            qk *= params.q;
            // q^k (a cos(k x − γ) + b sin(k x − γ)) regrouped by cos kx, sin kx.
            (qk * (a * pc - b * ps), qk * (b * pc + a * ps))
        })
        .unzip();
    FourierCoeffs { a0, a, b }
}

fn check_grid(grid: usize) -> Result<()> {
    if grid < MIN_POISSON_GRID || !grid.is_power_of_two() {
        return Err(Error::Config(format!(
            "quadrature grid must be a power of two >= {MIN_POISSON_GRID}, got {grid}"
        )));
    }
    Ok(())
}
