//! The extremal function φ* that realises the principal term from below.
//!
//! The change of variable
//! `y₁(t) = t + (2θ_q(t) − θ_{q^p}(pt) + (1 − α_q)t + βπ/2)/(n − p + α_q)`
//! turns the phase of the deviation kernel into `(n − p + α_q)·y₁(t)`. φ* is
//! built from half-arches `½ω(·)` laid between consecutive roots `τ_i` of
//! `cos((n − p + α_q)τ)`, with alternating signs, and pulled back through `y₁`.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{theta_q, z_q, PoissonParams, VPParams};
use crate::moduli::Modulus;
use crate::sums::SampledPeriodicFunction;

/// `α_q = ⌊3q/(1 − q)⌋ + 2`.
pub fn alpha_q(q: f64) -> usize {
    (3.0 * q / (1.0 - q)).floor() as usize + 2
}

/// Smallest `n − p` with `n − p ≥ 6/(1 − q)`.
pub fn min_admissible_gap(q: f64) -> usize {
    (6.0 / (1.0 - q)).ceil() as usize
}

pub fn is_admissible(params: &PoissonParams, vp: &VPParams) -> bool {
    ((vp.n() - vp.p()) as f64) >= 6.0 / (1.0 - params.q())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChangeOfVariable {
    params: PoissonParams,
    vp: VPParams,
    alpha_q: usize,
    /// `n − p + α_q`
    frequency: f64,
}

pub fn make_change_of_variable(params: &PoissonParams, vp: &VPParams) -> Result<ChangeOfVariable> {
    if !is_admissible(params, vp) {
        return Err(Error::Inadmissible {
            n_minus_p: vp.n() - vp.p(),
            required: min_admissible_gap(params.q()),
            q: params.q(),
        });
    }
    let alpha_q = alpha_q(params.q());
    Ok(ChangeOfVariable {
        params: *params,
        vp: *vp,
        alpha_q,
        frequency: (vp.n() - vp.p() + alpha_q) as f64,
    })
}

impl ChangeOfVariable {
    pub fn params(&self) -> &PoissonParams {
        &self.params
    }

    pub fn vp(&self) -> &VPParams {
        &self.vp
    }

    pub fn alpha_q(&self) -> usize {
        self.alpha_q
    }

    /// `n − p + α_q`.
    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn forward(&self, t: f64) -> f64 {
        let q = self.params.q();
        let p = self.vp.p();
        let qp = q.powi(p as i32);
        let shift = 2.0 * theta_q(q, t) - theta_q(qp, p as f64 * t)
            + (1.0 - self.alpha_q as f64) * t
            + self.params.phase();
        t + shift / self.frequency
    }

    /// `y₁′(t) = Z_q²(t)/Z_{q,n,p}²(t)`.
    pub fn derivative(&self, t: f64) -> f64 {
        let q = self.params.q();
        let p = self.vp.p() as f64;
        let qp = q.powf(p);
        let lambda = 2.0 * q * (t.cos() - q) * z_q(q, t).powi(2)
            - p * qp * ((p * t).cos() - qp) * z_q(qp, p * t).powi(2);
        1.0 + (lambda + 1.0 - self.alpha_q as f64) / self.frequency
    }

    /// `y = y₁⁻¹` by bracketed bisection.
    pub fn inverse(&self, tau: f64) -> f64 {
        // y₁′ ∈ (1/3, 1): the root lies within 3|τ − y₁(t₀)| of any t₀.
        let t0 = tau;
        let gap = (tau - self.forward(t0)).abs();
        let mut lo = t0 - 3.0 * gap - 1e-9;
        let mut hi = t0 + 3.0 * gap + 1e-9;
        while self.forward(lo) > tau {
            lo -= 1.0;
        }
        while self.forward(hi) < tau {
            hi += 1.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-15 {
                break;
            }
            if self.forward(mid) < tau {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Nodes `x_k = kπ/(n−p+α_q)` and roots `τ_k = x_k + π/(2(n−p+α_q))`,
/// `k = 2..=k0+1`.
#[derive(Debug, Clone, Serialize)]
pub struct OscillationGrid {
    pub x_k: Vec<f64>,
    pub tau_k: Vec<f64>,
    pub k0: usize,
    pub s: usize,
    frequency: f64,
}

/// First index stored in an [`OscillationGrid`].
pub const FIRST_NODE: usize = 2;

impl OscillationGrid {
    pub fn x(&self, k: usize) -> f64 {
        k as f64 * PI / self.frequency
    }

    pub fn tau(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * PI / self.frequency
    }
}

pub fn make_grid(cov: &ChangeOfVariable) -> OscillationGrid {
    let freq = cov.frequency;
    let end = cov.forward(TAU);
    let tau = |k: usize| (k as f64 + 0.5) * PI / freq;
    let mut k0 = (end * freq / PI - 0.5).floor().max(0.0) as usize;
    while tau(k0 + 1) <= end {
        k0 += 1;
    }
    while k0 > 0 && tau(k0) > end {
        k0 -= 1;
    }
    let s = if k0 % 2 == 1 { 2 } else { 3 };
    let ks = FIRST_NODE..=k0 + 1;
    OscillationGrid {
        x_k: ks.clone().map(|k| k as f64 * PI / freq).collect(),
        tau_k: ks.map(tau).collect(),
        k0,
        s,
        frequency: freq,
    }
}

/// φ* together with the data needed to evaluate it anywhere.
#[derive(Debug, Clone)]
pub struct ExtremalFunction {
    modulus: Modulus,
    cov: ChangeOfVariable,
    grid: OscillationGrid,
    /// `y(τ_i)`, `i = s..=k0`
    root_preimages: Vec<f64>,
    /// `y(x_{i+1})`, `i = s..k0`
    peak_preimages: Vec<f64>,
}

impl ExtremalFunction {
    pub fn new(modulus: &Modulus, cov: &ChangeOfVariable, grid: &OscillationGrid) -> Result<Self> {
        if !modulus.convex_upwards() {
            return Err(Error::Unsupported(format!(
                "the extremal construction needs a convex-upwards modulus, `{modulus}` is not"
            )));
        }
        let root_preimages = (grid.s..=grid.k0)
            .map(|i| cov.inverse(grid.tau(i)))
            .collect();
        let peak_preimages = (grid.s..grid.k0)
            .map(|i| cov.inverse(grid.x(i + 1)))
            .collect();
        Ok(Self {
            modulus: modulus.clone(),
            cov: *cov,
            grid: grid.clone(),
            root_preimages,
            peak_preimages,
        })
    }

    pub fn grid(&self) -> &OscillationGrid {
        &self.grid
    }

    /// `[y(τ_s), y(τ_{k0})]`, outside of which φ* vanishes on [0, 2π].
    pub fn support(&self) -> (f64, f64) {
        match (self.root_preimages.first(), self.root_preimages.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (0.0, 0.0),
        }
    }

    pub fn root_preimages(&self) -> &[f64] {
        &self.root_preimages
    }

    /// Points `y(x_{i+1})` where |φ*| peaks.
    pub fn peak_preimages(&self) -> &[f64] {
        &self.peak_preimages
    }

    /// `½ω(π/(n − p + α_q))`.
    pub fn expected_sup(&self) -> f64 {
        0.5 * self.modulus.eval(PI / self.cov.frequency)
    }

    /// Index `i` of the arch `[y(τ_i), y(τ_{i+1})]` containing `t`, if any.
    pub fn arch_index(&self, t: f64) -> Option<usize> {
        let t = t.rem_euclid(TAU);
        let u = self.cov.forward(t);
        self.arch_of(u)
    }

    fn arch_of(&self, u: f64) -> Option<usize> {
        let g = &self.grid;
        if g.k0 <= g.s || u < g.tau(g.s) || u > g.tau(g.k0) {
            return None;
        }
        let i = (u * g.frequency / PI - 0.5).floor() as isize;
        Some((i.max(g.s as isize) as usize).min(g.k0 - 1))
    }

    /// φ*(t), extended 2π-periodically.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.rem_euclid(TAU);
        let u = self.cov.forward(t);
        let Some(i) = self.arch_of(u) else {
            return 0.0;
        };
        let g = &self.grid;
        let half = if u <= g.x(i + 1) {
            0.5 * self.modulus.eval(2.0 * (u - g.tau(i)))
        } else {
            0.5 * self.modulus.eval(2.0 * (g.tau(i + 1) - u))
        };
        if i % 2 == 1 {
            half
        } else {
            -half
        }
    }

    /// Largest |φ*| over the peak points.
    pub fn sup_at_peaks(&self) -> f64 {
        self.peak_preimages
            .iter()
            .fold(0.0, |m, &t| m.max(self.eval(t).abs()))
    }

    pub fn sample(&self, n: usize) -> Result<SampledPeriodicFunction> {
        let h = TAU / n as f64;
        let samples: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|j| self.eval(j as f64 * h))
            .collect();
        SampledPeriodicFunction::new(samples)
    }
}

/// Samples of φ* on an `n`-point grid.
pub fn build_phi_star(
    m: &Modulus,
    cov: &ChangeOfVariable,
    grid: &OscillationGrid,
    n: usize,
) -> Result<SampledPeriodicFunction> {
    ExtremalFunction::new(m, cov, grid)?.sample(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HOmegaReport {
    /// `max |f(t′) − f(t″)| − ω(dist(t′, t″))` over all sample pairs, with the
    /// periodic distance.
    pub max_excess: f64,
}

impl HOmegaReport {
    pub fn is_member(&self, tol: f64) -> bool {
        self.max_excess <= tol
    }
}

pub fn check_h_omega(f: &SampledPeriodicFunction, m: &Modulus) -> HOmegaReport {
    let v = f.samples();
    let n = v.len();
    let h = TAU / n as f64;
    let max_excess = (1..=n / 2)
        .into_par_iter()
        .map(|k| {
            let w = m.eval(k as f64 * h);
            let diff = (0..n).fold(0.0f64, |acc, i| acc.max((v[i] - v[(i + k) % n]).abs()));
            diff - w
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    HOmegaReport {
        max_excess: if n > 1 { max_excess } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::make_holder;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn setup(q: f64, beta: f64, n: usize, p: usize) -> (ChangeOfVariable, OscillationGrid) {
        let params = PoissonParams::new(q, beta).unwrap();
        let vp = VPParams::new(n, p).unwrap();
        let cov = make_change_of_variable(&params, &vp).unwrap();
        let grid = make_grid(&cov);
        (cov, grid)
    }

    #[test]
    fn alpha_q_values() {
        assert_eq!(alpha_q(0.5), 5);
        assert_eq!(alpha_q(0.3), 3);
        assert_eq!(alpha_q(0.1), 2);
        // 3·0.9/0.1 = 27, floor + 2
        assert_eq!(alpha_q(0.9), 29);
    }

    #[test]
    fn admissibility() {
        let params = PoissonParams::new(0.5, 0.0).unwrap();
        assert!(make_change_of_variable(&params, &VPParams::new(13, 1).unwrap()).is_ok());
        let err = make_change_of_variable(&params, &VPParams::new(12, 1).unwrap()).unwrap_err();
        assert_eq!(
            err,
            Error::Inadmissible {
                n_minus_p: 11,
                required: 12,
                q: 0.5
            }
        );
    }

    #[test]
    fn derivative_bounds() {
        for (q, beta, n, p) in [
            (0.5, 0.0, 60, 2),
            (0.9, 3.5, 70, 1),
            (0.3, 1.0, 12, 3),
            (0.8, 2.0, 40, 7),
        ] {
            let (cov, _) = setup(q, beta, n, p);
            for j in 0..512 {
                let d = cov.derivative(TAU * j as f64 / 512.0);
                assert!(d > 1.0 / 3.0 && d < 1.0, "q={q} n={n} p={p}: {d}");
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let (cov, _) = setup(0.7, 1.3, 50, 4);
        let h = 1e-5;
        for j in 0..64 {
            let t = 0.1 * j as f64;
            let fd = (cov.forward(t + h) - cov.forward(t - h)) / (2.0 * h);
            assert_abs_diff_eq!(cov.derivative(t), fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn inverse_round_trip() {
        let (cov, _) = setup(0.5, 0.0, 60, 2);
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..64 {
            let t: f64 = rng.gen_range(0.0..TAU);
            assert_abs_diff_eq!(cov.inverse(cov.forward(t)), t, epsilon = 1e-11);
        }
    }

    #[test]
    fn forward_end_points() {
        for beta in [0.0, 1.0, 2.5, 3.99] {
            let (cov, grid) = setup(0.6, beta, 45, 2);
            assert_abs_diff_eq!(
                cov.forward(0.0),
                beta * PI / (2.0 * cov.frequency()),
                epsilon = 1e-15
            );
            assert!(cov.forward(TAU) < 2.0 * TAU);
            assert!(grid.tau(grid.s) > cov.forward(0.0));
            let phi = ExtremalFunction::new(&make_holder(0.5).unwrap(), &cov, &grid).unwrap();
            let (a, b) = phi.support();
            assert!(a > 0.0 && b <= TAU);
        }
    }

    #[test]
    fn grid_structure() {
        let (cov, grid) = setup(0.5, 0.0, 60, 2);
        let step = PI / cov.frequency();
        for w in grid.x_k.windows(2) {
            assert_abs_diff_eq!(w[1] - w[0], step, epsilon = 1e-14);
        }
        for &t in &grid.tau_k {
            assert_abs_diff_eq!((cov.frequency() * t).cos(), 0.0, epsilon = 1e-12);
        }
        // brute-force scan of all roots below y₁(2π)
        let end = cov.forward(TAU);
        let mut k0 = 0;
        let mut k = 0;
        loop {
            let root = (k as f64 + 0.5) * PI / cov.frequency();
            if root > end {
                break;
            }
            k0 = k;
            k += 1;
        }
        assert_eq!(grid.k0, k0);
        assert_eq!(grid.s, if k0 % 2 == 1 { 2 } else { 3 });
        assert_eq!(grid.x_k.len(), k0);
        assert_abs_diff_eq!(grid.tau_k[0], grid.tau(2));
    }

    #[test]
    fn phi_star_vanishes_at_roots_and_peaks_at_expected_height() {
        let m = make_holder(0.5).unwrap();
        let (cov, grid) = setup(0.5, 0.0, 60, 2);
        let phi = ExtremalFunction::new(&m, &cov, &grid).unwrap();
        for &t in phi.root_preimages() {
            assert!(phi.eval(t).abs() < 1e-6, "{}", phi.eval(t));
        }
        let want = 0.5 * m.eval(PI / cov.frequency());
        assert_abs_diff_eq!(phi.sup_at_peaks(), want, epsilon = 1e-10);
        assert_abs_diff_eq!(phi.expected_sup(), want);
        let sampled = phi.sample(4096).unwrap();
        assert!(sampled.sup_abs() <= want + 1e-14);
        assert_abs_diff_eq!(phi.eval(0.0), 0.0);
        assert_abs_diff_eq!(phi.eval(TAU + 1.0), phi.eval(1.0));
    }

    #[test]
    fn sign_alternates_between_arches() {
        let m = make_holder(0.5).unwrap();
        let (cov, grid) = setup(0.3, 1.0, 40, 1);
        let phi = ExtremalFunction::new(&m, &cov, &grid).unwrap();
        let peaks = phi.peak_preimages();
        for (i, w) in peaks.windows(2).enumerate() {
            let (a, b) = (phi.eval(w[0]), phi.eval(w[1]));
            assert!(a * b < 0.0, "arch {i}: {a} {b}");
        }
        assert_eq!(phi.eval(peaks[0]) > 0.0, grid.s % 2 == 1);
    }

    fn naive_excess(f: &SampledPeriodicFunction, m: &Modulus) -> f64 {
        let v = f.samples();
        let n = v.len();
        let mut worst = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = (i as isize - j as isize).unsigned_abs();
                let d = d.min(n - d) as f64 * TAU / n as f64;
                worst = worst.max((v[i] - v[j]).abs() - m.eval(d));
            }
        }
        worst
    }

    #[test]
    fn phi_star_in_h_omega_by_pair_enumeration() {
        let m = make_holder(0.5).unwrap();
        for (q, n, p) in [(0.5, 40, 1), (0.5, 60, 2)] {
            let (cov, grid) = setup(q, 0.0, n, p);
            let f = build_phi_star(&m, &cov, &grid, 1024).unwrap();
            let naive = naive_excess(&f, &m);
            let fast = check_h_omega(&f, &m).max_excess;
            assert_abs_diff_eq!(naive, fast, epsilon = 1e-15);
            let slack = m.eval(TAU / 1024.0);
            assert!(fast <= 1e-3 * slack, "{fast}");
        }
    }

    #[test]
    fn h_omega_examples() {
        let m = make_holder(0.5).unwrap();
        let zero = SampledPeriodicFunction::new(vec![0.0; 256]).unwrap();
        assert!(check_h_omega(&zero, &m).max_excess <= 0.0);
        // a half-arch ½ω(2t) on [0, 0.2] mirrored back down
        let f = SampledPeriodicFunction::from_fn(
            |t| {
                if t < 0.2 {
                    0.5 * m.eval(2.0 * t)
                } else if t < 0.4 {
                    0.5 * m.eval(2.0 * (0.4 - t))
                } else {
                    0.0
                }
            },
            512,
        )
        .unwrap();
        assert!(check_h_omega(&f, &m).is_member(1e-12));
        let steep = SampledPeriodicFunction::from_fn(|t| 10.0 * t.sin(), 256).unwrap();
        assert!(check_h_omega(&steep, &m).max_excess > 1.0);
    }

    #[test]
    fn rejects_non_concave_modulus() {
        let (cov, grid) = setup(0.5, 0.0, 40, 1);
        let m = Modulus::from_fn("square", |t| t * t, false);
        assert!(matches!(
            build_phi_star(&m, &cov, &grid, 256),
            Err(Error::Unsupported(_))
        ));
    }
}
