//! Fourier analysis on uniform grids: coefficients, partial sums `S_k`,
//! de la Vallée Poussin sums `V_{n,p}` and the deviation `ρ_{n,p} = f − V_{n,p}`.

use std::f64::consts::TAU;

pub use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{deviation_kernel, PoissonParams, VPParams};

/// Smallest admissible grid.
pub const MIN_GRID: usize = 256;

/// Samples `f(2πj/N)`, `j = 0..N`, of a 2π-periodic function. `N` is a power
/// of two no smaller than [`MIN_GRID`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPeriodicFunction {
    samples: Vec<f64>,
}

impl SampledPeriodicFunction {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        let n = samples.len();
        if n < MIN_GRID || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "sample grid must be a power of two >= {MIN_GRID}, got {n}"
            )));
        }
        Ok(Self { samples })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(f: F, n: usize) -> Result<Self> {
        Self::new((0..n).map(|j| f(TAU * j as f64 / n as f64)).collect())
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Grid node `t_j = 2πj/N`.
    pub fn node(&self, j: usize) -> f64 {
        TAU * j as f64 / self.samples.len() as f64
    }

    pub fn sup_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index and value of the sample with the largest modulus.
    pub fn argmax_abs(&self) -> (usize, f64) {
        self.samples
            .iter()
            .enumerate()
            .fold(
                (0, 0.0),
                |(bi, bv), (i, &v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) },
            )
    }

    pub fn fourier_coeffs(&self, k: usize) -> Result<FourierCoeffs> {
        fourier_coeffs(self, k)
    }

    fn spectrum(&self) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self
            .samples
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        FftPlanner::new()
            .plan_fft_forward(buf.len())
            .process(&mut buf);
        buf
    }

    fn from_spectrum(mut spec: Vec<Complex64>) -> Self {
        let n = spec.len();
        FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
        let scale = 1.0 / n as f64;
        Self {
            samples: spec.into_iter().map(|c| c.re * scale).collect(),
        }
    }

    /// Multiplies harmonic `j` (both `e^{±ijt}`) by `weight(j)`; the mean is
    /// harmonic 0.
    pub fn apply_harmonic_weights<W: Fn(usize) -> f64>(&self, weight: W) -> Self {
        self.apply_harmonic_multipliers(|j| Complex64::new(weight(j), 0.0))
    }

    /// Multiplies the `e^{ijt}` component by `m(j)` and the `e^{−ijt}`
    /// component by its conjugate, which keeps the result real. The Nyquist
    /// harmonic only receives the real part of its multiplier.
    pub fn apply_harmonic_multipliers<M: Fn(usize) -> Complex64>(&self, m: M) -> Self {
        let n = self.len();
        let mut spec = self.spectrum();
        for (k, c) in spec.iter_mut().enumerate() {
            *c *= if k == 0 || 2 * k == n {
                Complex64::new(m(k).re, 0.0)
            } else if 2 * k < n {
                m(k)
            } else {
                m(n - k).conj()
            };
        }
        Self::from_spectrum(spec)
    }
}

/// Trigonometric coefficients. `a0` is the mean value itself (no halving);
/// `a[k-1]`, `b[k-1]` belong to `cos kt`, `sin kt`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierCoeffs {
    pub a0: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl FourierCoeffs {
    /// Highest stored harmonic.
    pub fn degree(&self) -> usize {
        self.a.len()
    }

    /// Samples of `Σ_{k≤K}` on an `n`-point grid.
    pub fn synthesize(&self, n: usize) -> Result<SampledPeriodicFunction> {
        if n < MIN_GRID || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "sample grid must be a power of two >= {MIN_GRID}, got {n}"
            )));
        }
        if 2 * self.degree() >= n {
            return Err(Error::Aliasing {
                harmonic: self.degree(),
                grid: n,
            });
        }
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        spec[0] = Complex64::new(self.a0 * n as f64, 0.0);
        for (k, (&a, &b)) in self.a.iter().zip(&self.b).enumerate() {
            let c = Complex64::new(a, -b) * (0.5 * n as f64);
            spec[k + 1] = c;
            spec[n - k - 1] = c.conj();
        }
        Ok(SampledPeriodicFunction::from_spectrum(spec))
    }
}

/// `a_k = (2/N)Σ f(t_j) cos(k t_j)`, `b_k` likewise with sine, for `k ≤ K`.
pub fn fourier_coeffs(f: &SampledPeriodicFunction, k: usize) -> Result<FourierCoeffs> {
    let n = f.len();
    if 2 * k >= n {
        return Err(Error::Aliasing {
            harmonic: k,
            grid: n,
        });
    }
    let spec = f.spectrum();
    let scale = 2.0 / n as f64;
    Ok(FourierCoeffs {
        a0: spec[0].re / n as f64,
        a: spec[1..=k].iter().map(|c| c.re * scale).collect(),
        b: spec[1..=k].iter().map(|c| -c.im * scale).collect(),
    })
}

/// `S_k(x) = A₀ + Σ_{j=1}^{k} (a_j cos jx + b_j sin jx)`.
pub fn partial_sum(c: &FourierCoeffs, k: usize, x: f64) -> Result<f64> {
    if k > c.degree() {
        return Err(Error::Range(format!(
            "partial sum of order {k} needs {k} harmonics, only {} stored",
            c.degree()
        )));
    }
    Ok(c.a0
        + (1..=k)
            .map(|j| {
                let (s, co) = (j as f64 * x).sin_cos();
                c.a[j - 1] * co + c.b[j - 1] * s
            })
            .sum::<f64>())
}

/// Weight with which `V_{n,p}` keeps harmonic `j`.
pub fn vp_weight(vp: &VPParams, j: usize) -> f64 {
    let (n, p) = (vp.n(), vp.p());
    if j + p <= n {
        1.0
    } else if j < n {
        (n - j) as f64 / p as f64
    } else {
        0.0
    }
}

/// `V_{n,p}(x) = (1/p) Σ_{k=n−p}^{n−1} S_k(x)`.
pub fn vp_sum(c: &FourierCoeffs, vp: &VPParams, x: f64) -> Result<f64> {
    let n = vp.n();
    if n - 1 > c.degree() {
        return Err(Error::Range(format!(
            "V_{{{n},{}}} needs {} harmonics, only {} stored",
            vp.p(),
            n - 1,
            c.degree()
        )));
    }
    Ok(c.a0
        + (1..n)
            .map(|j| {
                let (s, co) = (j as f64 * x).sin_cos();
                vp_weight(vp, j) * (c.a[j - 1] * co + c.b[j - 1] * s)
            })
            .sum::<f64>())
}

/// Samples of `ρ_{n,p}(f; x) = f(x) − V_{n,p}(f; x)` on the grid of `f`.
pub fn deviation_direct(
    f: &SampledPeriodicFunction,
    vp: &VPParams,
) -> Result<SampledPeriodicFunction> {
    if 2 * (vp.n() - 1) >= f.len() {
        return Err(Error::Aliasing {
            harmonic: vp.n() - 1,
            grid: f.len(),
        });
    }
    Ok(f.apply_harmonic_weights(|j| 1.0 - vp_weight(vp, j)))
}

/// Minimum nodes per unit of `n − p + 1` for [`deviation_integral`].
pub const DEVIATION_NODES_PER_OFFSET: usize = 16;

/// `ρ_{n,p}(f; x)` for `f` the Poisson integral of `phi`, from the integral
/// representation
/// `(q^{n−p+1}/(πp)) ∫ (φ(x+t) − φ(x)) Z_q²(t)/Z_{q^p}(pt) cos(…) dt`,
/// by the trapezoid rule on `grid` nodes.
pub fn deviation_integral<F: Fn(f64) -> f64>(
    phi: F,
    params: &PoissonParams,
    vp: &VPParams,
    x: f64,
    grid: usize,
) -> Result<f64> {
    if vp.p() >= vp.n() {
        return Err(Error::Config(
            "the integral representation needs p < n".into(),
        ));
    }
    let needed = DEVIATION_NODES_PER_OFFSET * vp.offset();
    if grid < needed {
        return Err(Error::Config(format!(
            "quadrature grid {grid} under-resolves the kernel, need at least {needed}"
        )));
    }
    let h = TAU / grid as f64;
    let base = phi(x);
    let sum: f64 = (0..grid)
        .map(|j| {
            let t = j as f64 * h;
            (phi(x + t) - base) * deviation_kernel(params, vp, t)
        })
        .sum();
    Ok(sum * h)
}

/// Tabulates the kernel of [`deviation_integral`] on `grid` nodes, so the
/// deviation at `x = t_i` becomes a cyclic correlation with the samples.
pub fn deviation_kernel_samples(params: &PoissonParams, vp: &VPParams, grid: usize) -> Vec<f64> {
    let h = TAU / grid as f64;
    (0..grid)
        .map(|j| deviation_kernel(params, vp, j as f64 * h) * h)
        .collect()
}
