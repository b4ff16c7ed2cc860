//! Small-coupling expansion of the phase.
//!
//! With `|r(t)|² = 1 − R₂(t)δ² − R₃(t)δ³ + O(δ⁴)` and `φ(t) = φ₁(t)δ + O(δ²)`
//! the correction to `Φ₀ = π(1 − cosθ)` is
//!
//! `−cosθ sin²θ [δ² (Ω/4)∫R₂ + (δ³/24)(3R₂(τ)φ₁(τ) + φ₁(τ)³ + 6Ω∫R₃ − 6∫R₂ φ₁')]`.
//!
//! The coefficients can be extracted numerically from any bath sampler, or,
//! for the Ising ring in the thermodynamic limit, taken from closed forms
//! built on complete elliptic integrals.

pub mod elliptic;
pub mod quadrature;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bath::ising::{mode_energy, IsingBathParams};
use crate::error::{Error, Result};
use crate::gp::{central_derivative, simpson, unitary_geometric_phase, SystemParams};
use elliptic::agm_from_complement;
use quadrature::integrate;

pub use elliptic::{elliptic_e, elliptic_k};

/// Default δ step for numeric extraction, in the bath's coupling units.
pub const DEFAULT_STENCIL_STEP: f64 = 1e-4;

/// Absolute tolerance of every k-integral.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// Expansion coefficients sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionCoefficients {
    pub times: Vec<f64>,
    pub r2: Vec<f64>,
    pub r3: Vec<f64>,
    pub phi1: Vec<f64>,
}

/// Extracts `R₂`, `R₃`, `φ₁` by finite differences in δ at δ = 0.
///
/// `sampler(δ, t)` returns the decoherence factor. Even and odd parts of
/// `|r|²` are separated with the ±h, ±2h stencil, which cancels the next
/// order in each (`R₄` for `R₂`, `R₅` for `R₃`); the phase is unwrapped along
/// the grid for every δ before differencing.
pub fn extract_coefficients_numeric<F>(sampler: F, times: &[f64], h: f64) -> Result<ExpansionCoefficients>
where
    F: Fn(f64, f64) -> Complex64,
{
    if times.len() < 3 {
        return Err(Error::InvalidGrid("need at least three time samples".into()));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("stencil step must be positive, got {h}")));
    }
    let series = |d: f64| -> Result<(Vec<f64>, Vec<f64>)> {
        let vals: Vec<Complex64> = times.iter().map(|&t| sampler(d, t)).collect();
        let mag2 = vals.iter().map(|z| z.norm_sqr()).collect();
        let mut phase = Vec::with_capacity(vals.len());
        let mut acc = vals[0].arg();
        phase.push(acc);
        for w in vals.windows(2) {
            let step = (w[1] * w[0].conj()).arg();
            if step.abs() > PI / 2.0 {
                return Err(Error::UnwrapFailure {
                    jump: step.abs(),
                    samples: times.len() - 1,
                });
            }
            acc += step;
            phase.push(acc);
        }
        Ok((mag2, phase))
    };
    let (m_p1, p_p1) = series(h)?;
    let (m_m1, p_m1) = series(-h)?;
    let (m_p2, p_p2) = series(2.0 * h)?;
    let (m_m2, p_m2) = series(-2.0 * h)?;
    let n = times.len();
    let mut r2 = Vec::with_capacity(n);
    let mut r3 = Vec::with_capacity(n);
    let mut phi1 = Vec::with_capacity(n);
    for i in 0..n {
        let e1 = 0.5 * (m_p1[i] + m_m1[i]) - 1.0;
        let e2 = 0.5 * (m_p2[i] + m_m2[i]) - 1.0;
        let o1 = 0.5 * (m_p1[i] - m_m1[i]);
        let o2 = 0.5 * (m_p2[i] - m_m2[i]);
        r2.push(-(16.0 * e1 - e2) / (12.0 * h * h));
        r3.push(-(32.0 * o1 - o2) / (24.0 * h * h * h));
        phi1.push((8.0 * (p_p1[i] - p_m1[i]) - (p_p2[i] - p_m2[i])) / (12.0 * h));
    }
    let scale = r2.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if let Some((index, &value)) = r2.iter().enumerate().find(|(_, v)| **v < -1e-9 * scale) {
        return Err(Error::StencilConditioning { value, index });
    }
    Ok(ExpansionCoefficients { times: times.to_vec(), r2, r3, phi1 })
}

/// θ-independent integrals entering the expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionIntegrals {
    /// `∫₀^τ R₂ dt`.
    pub int_r2: f64,
    /// `∫₀^τ R₃ dt`.
    pub int_r3: f64,
    /// `∫₀^τ R₂ φ₁' dt`.
    pub int_r2_dphi1: f64,
    pub r2_tau: f64,
    pub phi1_tau: f64,
}

impl ExpansionIntegrals {
    pub fn from_coefficients(c: &ExpansionCoefficients, sys: &SystemParams) -> Result<Self> {
        let n = c.times.len() - 1;
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid("need an even number of intervals".into()));
        }
        let tau = sys.tau();
        if c.times[0] != 0.0 || (c.times[n] - tau).abs() > 1e-12 * tau {
            return Err(Error::InvalidGrid("coefficients must cover [0, tau]".into()));
        }
        let dt = tau / n as f64;
        let dphi = central_derivative(&c.phi1, dt);
        let prod: Vec<f64> = c.r2.iter().zip(&dphi).map(|(a, b)| a * b).collect();
        Ok(Self {
            int_r2: simpson(&c.r2, dt),
            int_r3: simpson(&c.r3, dt),
            int_r2_dphi1: simpson(&prod, dt),
            r2_tau: c.r2[n],
            phi1_tau: c.phi1[n],
        })
    }

    /// Bracketed `δ²` and `δ³` coefficients (before the θ prefactor).
    fn orders(&self, omega: f64) -> (f64, f64) {
        let second = omega / 4.0 * self.int_r2;
        let third = (3.0 * self.r2_tau * self.phi1_tau + self.phi1_tau.powi(3) + 6.0 * omega * self.int_r3
            - 6.0 * self.int_r2_dphi1)
            / 24.0;
        (second, third)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    Second,
    Third,
}

/// Perturbative phase at both truncation orders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxGp {
    pub phi_unitary: f64,
    pub correction_second: f64,
    pub correction_third: f64,
}

impl ApproxGp {
    pub fn correction(&self, order: Truncation) -> f64 {
        match order {
            Truncation::Second => self.correction_second,
            Truncation::Third => self.correction_third,
        }
    }

    pub fn phi(&self, order: Truncation) -> f64 {
        self.phi_unitary + self.correction(order)
    }
}

fn assemble(second: f64, third: f64, sys: &SystemParams, delta: f64) -> ApproxGp {
    let theta = sys.theta();
    let pre = -theta.cos() * theta.sin().powi(2);
    let c2 = pre * delta * delta * second;
    ApproxGp {
        phi_unitary: unitary_geometric_phase(theta),
        correction_second: c2,
        correction_third: c2 + pre * delta.powi(3) * third,
    }
}

/// The expansion evaluated with sampled coefficients.
pub fn gp_third_order(coeffs: &ExpansionCoefficients, sys: &SystemParams, delta: f64) -> Result<ApproxGp> {
    let ints = ExpansionIntegrals::from_coefficients(coeffs, sys)?;
    let (s, t) = ints.orders(sys.omega());
    Ok(assemble(s, t, sys, delta))
}

/// Per-mode second-order coefficient `16J⁴ sin²k sin²(ε_k t)/ε_k⁴`.
pub fn mode_r2(j: f64, lambda: f64, k: f64, t: f64) -> f64 {
    let e = mode_energy(j, lambda, k);
    16.0 * j.powi(4) * k.sin().powi(2) * (e * t).sin().powi(2) / e.powi(4)
}

/// Per-mode third-order coefficient
/// `128J⁶ (cos k − λ) sin²k sin(ε t)[sin(ε t) − ε t cos(ε t)]/ε⁶`.
pub fn mode_r3(j: f64, lambda: f64, k: f64, t: f64) -> f64 {
    let e = mode_energy(j, lambda, k);
    let (s, c) = (e * t).sin_cos();
    128.0 * j.powi(6) * (k.cos() - lambda) * k.sin().powi(2) * s * (s - e * t * c) / e.powi(6)
}

/// Per-mode first-order phase `4J² t (λ − cos k)/ε_k = t ∂ε_k/∂λ`.
pub fn mode_phi1(j: f64, lambda: f64, k: f64, t: f64) -> f64 {
    4.0 * j * j * t * (lambda - k.cos()) / mode_energy(j, lambda, k)
}

/// The commonly stated per-mode phase coefficient `(λ − cos k)/ε_k`, which lacks
/// the `4J² t` factor of [`mode_phi1`].
pub fn mode_phi1_as_stated(j: f64, lambda: f64, k: f64) -> f64 {
    (lambda - k.cos()) / mode_energy(j, lambda, k)
}

/// Thermodynamic-limit coefficients of the Ising expansion, `T = τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsingClosedForms {
    /// `R₂(T)`.
    pub f2: f64,
    /// `∫₀^T R₂ dt`.
    pub big_f2: f64,
    /// `∫₀^T R₃ dt`.
    pub big_f3: f64,
    /// `φ₁(t) = t·G₁`.
    pub g1: f64,
    pub period: f64,
}

fn k_panels(p: &IsingBathParams, period: f64) -> usize {
    let emax = 2.0 * p.j_coupling() * (1.0 + p.lambda().abs());
    let osc = (2.0 * emax * period / PI).ceil() as usize;
    (2 * osc).clamp(16, 4096)
}

fn k_integral<F: Fn(f64) -> f64>(p: &IsingBathParams, period: f64, f: F) -> Result<f64> {
    let n = p.n_spins() as f64;
    Ok(n / (2.0 * PI) * integrate(f, 0.0, PI, QUADRATURE_TOL, k_panels(p, period))?)
}

/// `f₂`, `F₂`, `F₃` by adaptive quadrature over `k ∈ (0, π)`; `G₁` from the
/// elliptic closed form.
pub fn ising_closed_forms(p: &IsingBathParams, sys: &SystemParams) -> Result<IsingClosedForms> {
    let (j, lam) = (p.j_coupling(), p.lambda());
    let t = sys.tau();
    let f2 = k_integral(p, t, |k| mode_r2(j, lam, k, t))?;
    let big_f2 = k_integral(p, t, |k| {
        let e = mode_energy(j, lam, k);
        let x = 2.0 * e * t;
        8.0 * t * j.powi(4) * k.sin().powi(2) / e.powi(4) * (1.0 - x.sin() / x)
    })?;
    let big_f3 = k_integral(p, t, |k| {
        let e = mode_energy(j, lam, k);
        let x = 2.0 * e * t;
        128.0 * j.powi(6) * (k.cos() - lam) * k.sin().powi(2) * (x * (2.0 + x.cos()) - 3.0 * x.sin())
            / (8.0 * e.powi(7))
    })?;
    Ok(IsingClosedForms {
        f2,
        big_f2,
        big_f3,
        g1: g1(p)?,
        period: t,
    })
}

/// `f₂` and `F₃` in their commonly stated form: `f₂` without the factor 16 and with
/// `sin(εT)` in place of `sin²(εT)`, `F₃` without the factor 128 and with
/// `(λ − cos k)` in place of `(cos k − λ)`. The latter sign belongs to a
/// shift `λ → λ − δ`; here the coupled branch sits at `λ + δ`.
/// `F₂` and `G₁` are returned unchanged.
pub fn ising_closed_forms_as_stated(p: &IsingBathParams, sys: &SystemParams) -> Result<IsingClosedForms> {
    let (j, lam) = (p.j_coupling(), p.lambda());
    let t = sys.tau();
    let c = ising_closed_forms(p, sys)?;
    let f2 = k_integral(p, t, |k| {
        let e = mode_energy(j, lam, k);
        k.sin().powi(2) * (e * t).sin() / e.powi(4)
    })?;
    Ok(IsingClosedForms {
        f2,
        big_f3: -c.big_f3 / 128.0,
        ..c
    })
}

/// `G₁ = (J N/πλ)[(λ+1)E(m) + (λ−1)K(m)]`, `m = 4λ/(1+λ)²`.
///
/// `G₁(1) = 2JN/π` by continuity. Small and negative fields use the defining
/// integral `(N/2π)∫ 4J²(λ − cos k)/ε_k dk`, where the closed form cancels.
pub fn g1(p: &IsingBathParams) -> Result<f64> {
    let (j, lam, n) = (p.j_coupling(), p.lambda(), p.n_spins() as f64);
    if lam == 1.0 {
        return Ok(2.0 * j * n / PI);
    }
    if lam < 0.05 {
        let v = integrate(|k| 4.0 * j * j * (lam - k.cos()) / mode_energy(j, lam, k), 0.0, PI, 1e-13, 8)?;
        return Ok(n / (2.0 * PI) * v);
    }
    // √(1 − m) = |1 − λ|/(1 + λ) exactly.
    let (kk, ee) = agm_from_complement((1.0 - lam).abs() / (1.0 + lam));
    Ok(j * n / (PI * lam) * ((lam + 1.0) * ee + (lam - 1.0) * kk))
}

/// Closed-form expansion for the Ising ring (one-sided shift δ = coupling).
pub fn gp_approx_ising(p: &IsingBathParams, sys: &SystemParams) -> Result<ApproxGp> {
    let c = ising_closed_forms(p, sys)?;
    Ok(assemble_ising(&c, sys, p.coupling()))
}

fn assemble_ising(c: &IsingClosedForms, sys: &SystemParams, delta: f64) -> ApproxGp {
    let omega = sys.omega();
    let t = c.period;
    let second = omega * c.big_f2 / 4.0;
    let third = (3.0 * t * c.f2 * c.g1 + t.powi(3) * c.g1.powi(3) + 6.0 * omega * c.big_f3
        - 6.0 * c.g1 * c.big_f2)
        / 24.0;
    assemble(second, third, sys, delta)
}

/// The expansion evaluated with the commonly stated `f₂`, `F₃`.
pub fn gp_approx_ising_as_stated(p: &IsingBathParams, sys: &SystemParams) -> Result<ApproxGp> {
    let c = ising_closed_forms_as_stated(p, sys)?;
    Ok(assemble_ising(&c, sys, p.coupling()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::ising::{decoherence_product, ising_trace, momenta};
    use crate::bath::two_level::{decoherence_factor_closed_form, decoherence_trace, TwoLevelBathParams};
    use crate::gp::{geometric_phase, uniform_grid};

    fn ising(lambda: f64) -> IsingBathParams {
        IsingBathParams::new(100, 1.0, lambda, 5e-5).unwrap()
    }

    #[test]
    fn g1_limits_and_direct_sum() {
        let crit = g1(&ising(1.0)).unwrap();
        assert!((crit - 200.0 / PI).abs() < 1e-12);
        let near = g1(&ising(1.0 + 1e-9)).unwrap();
        assert!((near - crit).abs() < 1e-6);
        assert!(g1(&ising(0.0)).unwrap().abs() < 1e-12);
        let big = IsingBathParams::new(10_000, 1.0, 1.0, 0.0).unwrap();
        let sum: f64 = momenta(10_000).iter().map(|&k| mode_phi1(1.0, 1.0, k, 1.0)).sum();
        assert!((sum - g1(&big).unwrap()).abs() < 1e-3 * sum);
        for lam in [0.5, 1.5, 0.03] {
            let sum: f64 = momenta(100).iter().map(|&k| mode_phi1(1.0, lam, k, 1.0)).sum();
            let g = g1(&ising(lam)).unwrap();
            assert!((sum - g).abs() < 1e-3 * g.abs(), "{lam}: {sum} vs {g}");
        }
        // Continuity across the quadrature/closed-form switch.
        let a = g1(&ising(0.05 - 1e-12)).unwrap();
        let b = g1(&ising(0.05)).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn g1_scales_with_j() {
        let p = IsingBathParams::new(100, 2.5, 0.7, 0.0).unwrap();
        assert!((g1(&p).unwrap() - 2.5 * g1(&ising(0.7)).unwrap()).abs() < 1e-11);
    }

    #[test]
    fn g1_slope_diverges_at_criticality() {
        let slope = |eps: f64| (g1(&ising(1.0 + eps)).unwrap() - g1(&ising(1.0)).unwrap()) / eps;
        let s: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5].iter().map(|&e| slope(e).abs()).collect();
        assert!(s.windows(2).all(|w| w[1] > w[0] + 1.0), "{s:?}");
    }

    #[test]
    fn f2_nonnegative() {
        let sys = SystemParams::new(1.0, PI / 4.0).unwrap();
        for lam in [0.1, 0.5, 0.9, 1.1, 1.7] {
            let c = ising_closed_forms(&ising(lam), &sys).unwrap();
            assert!(c.big_f2 >= 0.0 && c.f2 >= 0.0);
        }
    }

    #[test]
    fn closed_forms_match_discrete_sums_of_mode_coefficients() {
        let sys = SystemParams::new(2.0, PI / 4.0).unwrap();
        let p = ising(0.6);
        let c = ising_closed_forms(&p, &sys).unwrap();
        let t = sys.tau();
        let ks = momenta(100);
        let f2: f64 = ks.iter().map(|&k| mode_r2(1.0, 0.6, k, t)).sum();
        assert!((f2 - c.f2).abs() < 1e-6 * f2);
        // ∫R₃ dt by Simpson on the discrete sum.
        let grid = uniform_grid(t, 2000);
        let r3: Vec<f64> = grid.iter().map(|&s| ks.iter().map(|&k| mode_r3(1.0, 0.6, k, s)).sum()).collect();
        let i3 = simpson(&r3, t / 2000.0);
        assert!((i3 - c.big_f3).abs() < 1e-6 * c.big_f3.abs());
    }

    #[test]
    fn numeric_extraction_matches_mode_coefficients() {
        let sys = SystemParams::new(1.0, PI / 4.0).unwrap();
        let p = ising(0.5);
        let grid = uniform_grid(sys.tau(), 64);
        let sampler = |d: f64, t: f64| decoherence_product(&p.with_coupling(d), t);
        let c = extract_coefficients_numeric(sampler, &grid, DEFAULT_STENCIL_STEP).unwrap();
        let ks = momenta(100);
        for (i, &t) in grid.iter().enumerate().skip(1) {
            let r2: f64 = ks.iter().map(|&k| mode_r2(1.0, 0.5, k, t)).sum();
            let r3: f64 = ks.iter().map(|&k| mode_r3(1.0, 0.5, k, t)).sum();
            let ph: f64 = ks.iter().map(|&k| mode_phi1(1.0, 0.5, k, t)).sum();
            assert!((c.r2[i] - r2).abs() < 1e-5 * r2.abs().max(1e-3), "R2 at {t}");
            assert!((c.r3[i] - r3).abs() < 1e-3 * r3.abs().max(1.0), "R3 at {t}: {} vs {r3}", c.r3[i]);
            assert!((c.phi1[i] - ph).abs() < 1e-6 * ph.abs());
        }
        let slope = c.phi1[64] / sys.tau();
        let g = g1(&p).unwrap();
        assert!((slope - g).abs() < 1e-4 * g);
    }

    #[test]
    fn stated_variants_differ_by_documented_factors() {
        let sys = SystemParams::new(1.0, PI / 4.0).unwrap();
        let p = ising(0.4);
        let c = ising_closed_forms(&p, &sys).unwrap();
        let q = ising_closed_forms_as_stated(&p, &sys).unwrap();
        assert!((q.big_f3 * 128.0 + c.big_f3).abs() < 1e-12 * c.big_f3.abs());
        assert_eq!(q.big_f2, c.big_f2);
        assert!((q.f2 * 16.0 - c.f2).abs() > 1e-6 * c.f2);
        for k in [0.3, 1.2, 2.9] {
            assert!((mode_phi1(1.0, 0.4, k, 2.0) - 8.0 * mode_phi1_as_stated(1.0, 0.4, k)).abs() < 1e-14);
        }
    }

    #[test]
    fn trivial_limits() {
        let sys = SystemParams::new(1.0, PI / 3.0).unwrap();
        let a = gp_approx_ising(&ising(0.5).with_coupling(0.0), &sys).unwrap();
        assert_eq!(a.phi(Truncation::Third), unitary_geometric_phase(PI / 3.0));
        let eq = SystemParams::new(1.0, PI / 2.0).unwrap();
        let a = gp_approx_ising(&ising(0.5), &eq).unwrap();
        let off = gp_approx_ising(&ising(0.5), &sys).unwrap();
        // cos(π/2) rounds to 6e-17.
        assert!(a.correction_third.abs() < 1e-15 * off.correction_third.abs());
    }

    #[test]
    fn theta_dependence_factorizes() {
        let p = ising(0.7);
        let s1 = SystemParams::new(2.0, 0.6).unwrap();
        let s2 = SystemParams::new(2.0, 2.1).unwrap();
        let a = gp_approx_ising(&p, &s1).unwrap().correction_third;
        let b = gp_approx_ising(&p, &s2).unwrap().correction_third;
        let w = |th: f64| th.cos() * th.sin().powi(2);
        assert!((a / b - w(0.6) / w(2.1)).abs() < 1e-10);
    }

    #[test]
    fn third_order_tracks_exact_ising() {
        let sys = SystemParams::new(1.0, PI / 4.0).unwrap();
        let p = ising(0.5);
        let exact = geometric_phase(&ising_trace(&p, &sys, 4096).unwrap(), &sys).unwrap().correction;
        let approx = gp_approx_ising(&p, &sys).unwrap();
        assert!((approx.correction_third - exact).abs() < 0.05 * exact.abs());
        assert!((approx.correction_third - exact).abs() < (approx.correction_second - exact).abs());
    }

    fn two_level_setup() -> (TwoLevelBathParams, SystemParams, Vec<f64>) {
        let omega = 100.0 * PI;
        let p = TwoLevelBathParams::from_b_field(0.02 * omega, 0.05 * omega, 0.0).unwrap();
        let sys = SystemParams::new(omega, PI / 4.0).unwrap();
        let grid = uniform_grid(sys.tau(), 1024);
        (p, sys, grid)
    }

    #[test]
    fn two_level_short_time_gaussian() {
        let (p, sys, grid) = two_level_setup();
        let h = DEFAULT_STENCIL_STEP * sys.omega();
        let c = extract_coefficients_numeric(
            |d, t| decoherence_factor_closed_form(&p.with_coupling(d), t),
            &grid,
            h,
        )
        .unwrap();
        assert_eq!(c.r2[0], 0.0);
        assert!(c.r2.iter().all(|&v| v >= -1e-9 * 1.0f64.max(c.r2.iter().cloned().fold(0.0, f64::max))));
        let ratio = |i: usize| c.r2[i] / grid[i].powi(2);
        assert!((ratio(1) / ratio(2) - 1.0).abs() < 1e-2);
        // ZZ coupling is odd in δ, so |r|² has no δ³ term.
        assert!(c.r3.iter().all(|v| v.abs() < 1e-3));
    }

    #[test]
    fn stencil_converges_under_halving() {
        let (p, sys, grid) = two_level_setup();
        let h = DEFAULT_STENCIL_STEP * sys.omega();
        let f = |d: f64, t: f64| decoherence_factor_closed_form(&p.with_coupling(d), t);
        let a = extract_coefficients_numeric(f, &grid, h).unwrap();
        let b = extract_coefficients_numeric(f, &grid, 0.5 * h).unwrap();
        let n = grid.len() - 1;
        assert!((a.r2[n] - b.r2[n]).abs() < 1e-6 * a.r2[n].abs());
        assert!((a.phi1[n] - b.phi1[n]).abs() < 1e-6 * a.phi1[n].abs().max(1e-12));
    }

    #[test]
    fn bad_stencil_is_reported() {
        let grid = uniform_grid(1.0, 16);
        let f = |d: f64, t: f64| Complex64::from_polar((1.0 + d * d * t).min(2.0), 0.0);
        assert!(matches!(
            extract_coefficients_numeric(f, &grid, 1e-2),
            Err(Error::StencilConditioning { .. })
        ));
    }

    #[test]
    fn two_level_residual_is_fourth_order() {
        let (p, sys, grid) = two_level_setup();
        let omega = sys.omega();
        let c = extract_coefficients_numeric(
            |d, t| decoherence_factor_closed_form(&p.with_coupling(d), t),
            &grid,
            DEFAULT_STENCIL_STEP * omega,
        )
        .unwrap();
        let res: Vec<f64> = [0.02, 0.01, 0.005, 0.0025]
            .iter()
            .map(|&f| {
                let d = f * omega;
                let exact = geometric_phase(&decoherence_trace(&p.with_coupling(d), &sys, 1024).unwrap(), &sys)
                    .unwrap()
                    .correction;
                (gp_third_order(&c, &sys, d).unwrap().correction_third - exact).abs()
            })
            .collect();
        let slope = (res[0] / res[3]).log2() / 3.0;
        assert!((slope - 4.0).abs() < 0.3, "{res:?} slope {slope}");
    }
}
