//! Transverse-field Ising ring `H_E(λ) = −J Σ (Z_n Z_{n+1} + λ X_n)` as an
//! environment. The coupling shifts the transverse field, so the two
//! branches evolve under `H_E(λ)` and `H_E(λ+δ)` (one-sided) or
//! `H_E(λ∓δ)` (symmetric).
//!
//! The decoherence factor factorizes over the antiperiodic momenta
//! `k = (2m−1)π/N`, `m = 1..N/2`; each factor is a two-level problem with
//! energy `ε_k = 2J√(1 + λ² − 2λ cos k)` and Bogoliubov angle
//! `θ_k = atan2(sin k, λ − cos k)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::planar_branch_overlap;
use crate::error::{Error, Result};
use crate::gp::{build_trace, geometric_phase, DecoherenceTrace, SystemParams};
use crate::qmat::{eigh, eigh_2x2, expm_hermitian, pauli, ComplexMatrix};

/// Largest chain handled by [`BruteForceOracle`].
pub const MAX_ORACLE_SPINS: usize = 11;

/// Below this log-magnitude the product is reported as zero.
const UNDERFLOW_LOG: f64 = -700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftConvention {
    /// Branch fields `λ` and `λ + δ`.
    #[default]
    OneSided,
    /// Branch fields `λ − δ` and `λ + δ`.
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsingBathParams {
    n_spins: usize,
    j_coupling: f64,
    lambda: f64,
    coupling: f64,
    shift: ShiftConvention,
}

impl IsingBathParams {
    pub fn new(n_spins: usize, j_coupling: f64, lambda: f64, coupling: f64) -> Result<Self> {
        if n_spins < 2 || !n_spins.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "chain length must be even and >= 2, got {n_spins}"
            )));
        }
        if !(j_coupling > 0.0 && j_coupling.is_finite()) {
            return Err(Error::InvalidParameter(format!("J must be positive, got {j_coupling}")));
        }
        if !lambda.is_finite() || !coupling.is_finite() {
            return Err(Error::InvalidParameter("lambda and coupling must be finite".into()));
        }
        Ok(Self {
            n_spins,
            j_coupling,
            lambda,
            coupling,
            shift: ShiftConvention::OneSided,
        })
    }

    pub fn with_shift(mut self, shift: ShiftConvention) -> Self {
        self.shift = shift;
        self
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn j_coupling(&self) -> f64 {
        self.j_coupling
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn shift(&self) -> ShiftConvention {
        self.shift
    }

    /// Transverse fields of the `(−, +)` branches.
    pub fn branch_lambdas(&self) -> (f64, f64) {
        match self.shift {
            ShiftConvention::OneSided => (self.lambda, self.lambda + self.coupling),
            ShiftConvention::Symmetric => (self.lambda - self.coupling, self.lambda + self.coupling),
        }
    }
}

/// Positive antiperiodic momenta `(2m−1)π/N`.
pub fn momenta(n_spins: usize) -> Vec<f64> {
    (1..=n_spins / 2)
        .map(|m| (2 * m - 1) as f64 * PI / n_spins as f64)
        .collect()
}

/// `2J√(1 + λ² − 2λ cos k)`.
pub fn mode_energy(j: f64, lambda: f64, k: f64) -> f64 {
    // (λ − cos k)² + sin²k avoids cancellation near λ = cos k.
    2.0 * j * (lambda - k.cos()).hypot(k.sin())
}

/// Bogoliubov angle `atan2(sin k, λ − cos k)`.
pub fn bogoliubov_angle(lambda: f64, k: f64) -> f64 {
    k.sin().atan2(lambda - k.cos())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFactors {
    pub k: f64,
    pub eps_k: f64,
    pub eps_tilde_k: f64,
    /// Half the Bogoliubov-angle difference, `2α_k = θ_k(λ+δ) − θ_k(λ)`.
    pub alpha_k: f64,
    pub theta_k_lambda: f64,
    pub theta_k_lambda_shift: f64,
}

/// Mode data for the pair `(λ, λ+δ)`.
pub fn mode_factors(p: &IsingBathParams, k: f64) -> ModeFactors {
    pair_factors(p.j_coupling, p.lambda, p.lambda + p.coupling, k)
}

fn pair_factors(j: f64, lambda: f64, shifted: f64, k: f64) -> ModeFactors {
    let (s, c) = k.sin_cos();
    let delta = shifted - lambda;
    // Angle between (λ−cos k, sin k) and (λ̃−cos k, sin k), free of the
    // cancellation in θ̃ − θ for small δ.
    let two_alpha = (-delta * s).atan2((lambda - c) * (shifted - c) + s * s);
    ModeFactors {
        k,
        eps_k: mode_energy(j, lambda, k),
        eps_tilde_k: mode_energy(j, shifted, k),
        alpha_k: 0.5 * two_alpha,
        theta_k_lambda: bogoliubov_angle(lambda, k),
        theta_k_lambda_shift: bogoliubov_angle(shifted, k),
    }
}

/// `(ε̃ − ε)` without cancellation.
fn energy_shift(j: f64, mf: &ModeFactors, lambda: f64, shifted: f64) -> f64 {
    let d = shifted - lambda;
    4.0 * j * j * d * (shifted + lambda - 2.0 * mf.k.cos()) / (mf.eps_tilde_k + mf.eps_k)
}

/// Time-independent pieces of one mode's factor.
#[derive(Debug, Clone, Copy)]
struct ModeTerm {
    eps_k: f64,
    eps_tilde_k: f64,
    eps_shift: f64,
    sin_a_sq: f64,
    sin_2a_sq: f64,
    cos_2a: f64,
}

impl ModeTerm {
    fn new(mf: &ModeFactors, eps_shift: f64) -> Self {
        Self {
            eps_k: mf.eps_k,
            eps_tilde_k: mf.eps_tilde_k,
            eps_shift,
            sin_a_sq: mf.alpha_k.sin().powi(2),
            sin_2a_sq: (2.0 * mf.alpha_k).sin().powi(2),
            cos_2a: (2.0 * mf.alpha_k).cos(),
        }
    }

    /// `(ln R_k, φ_k − ε_k t)` for the factor
    /// `e^{-iε_k t}(cos ε̃_k t + i cos2α_k sin ε̃_k t)`, on the continuous
    /// branch starting at 0.
    fn log_terms(&self, t: f64) -> (f64, f64) {
        let x = self.eps_tilde_k * t;
        let n = (x / PI).round();
        let y = x - n * PI;
        let (sy, cy) = y.sin_cos();
        let c = self.cos_2a;
        let log_r = 0.5 * (-(sy * sy) * self.sin_2a_sq).ln_1p();
        let phase = if c >= 0.0 {
            self.eps_shift * t + (-2.0 * self.sin_a_sq * sy * cy).atan2(cy * cy + c * sy * sy)
        } else {
            // cos2α < 0 winds the other way: arg z_k ≈ −ε̃_k t.
            let ca = -c;
            -(self.eps_shift + 2.0 * self.eps_k) * t + ((1.0 - ca) * sy * cy).atan2(cy * cy + ca * sy * sy)
        };
        (log_r, phase)
    }
}

fn one_sided_terms(p: &IsingBathParams, ks: &[f64]) -> Vec<ModeTerm> {
    let (lm, lp) = p.branch_lambdas();
    let j = p.j_coupling;
    ks.iter()
        .map(|&k| {
            let mf = pair_factors(j, lm, lp, k);
            ModeTerm::new(&mf, energy_shift(j, &mf, lm, lp))
        })
        .collect()
}

fn sum_log_terms(terms: &[ModeTerm], t: f64) -> LogDecoherence {
    let (mut log_mag, mut phase) = (0.0, 0.0);
    for m in terms {
        let (lr, ph) = m.log_terms(t);
        log_mag += lr;
        phase += ph;
    }
    LogDecoherence {
        log_magnitude: log_mag,
        phase,
        underflow: log_mag < UNDERFLOW_LOG,
    }
}

/// `(R_k, φ_k)` with `R_k = √(cos²ε̃t + sin²ε̃t cos²2α)` and `φ_k` the
/// continuous argument of `cos ε̃t + i cos2α sin ε̃t` (so `φ_k ≈ ε̃_k t`).
pub fn mode_amplitude(mf: &ModeFactors, t: f64) -> (f64, f64) {
    let (log_r, offset) = ModeTerm::new(mf, mf.eps_tilde_k - mf.eps_k).log_terms(t);
    (log_r.exp(), offset + mf.eps_k * t)
}

/// Accumulated decoherence in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDecoherence {
    pub log_magnitude: f64,
    /// Continuous for the one-sided shift; a sum of principal arguments for
    /// the symmetric one.
    pub phase: f64,
    /// Set when `log_magnitude` fell below `−700`; `value()` is then zero.
    pub underflow: bool,
}

impl LogDecoherence {
    pub fn value(&self) -> Complex64 {
        if self.underflow {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(self.log_magnitude.exp(), self.phase)
        }
    }
}

/// Log-space product over the given momenta, summed in input order.
pub fn log_decoherence_modes(p: &IsingBathParams, t: f64, ks: &[f64]) -> LogDecoherence {
    match p.shift {
        ShiftConvention::OneSided => sum_log_terms(&one_sided_terms(p, ks), t),
        ShiftConvention::Symmetric => {
            let (lm, lp) = p.branch_lambdas();
            let (mut log_mag, mut phase) = (0.0, 0.0);
            for &k in ks {
                let z = symmetric_mode_factor(p.j_coupling, p.lambda, lm, lp, k, t);
                log_mag += z.norm().ln();
                phase += z.arg();
            }
            LogDecoherence {
                log_magnitude: log_mag,
                phase,
                underflow: log_mag < UNDERFLOW_LOG,
            }
        }
    }
}

fn mode_axis(lambda: f64, k: f64) -> [f64; 2] {
    let th = bogoliubov_angle(lambda, k);
    [th.sin(), th.cos()]
}

fn symmetric_mode_factor(j: f64, lambda: f64, lm: f64, lp: f64, k: f64, t: f64) -> Complex64 {
    let n0 = mode_axis(lambda, k);
    planar_branch_overlap(
        mode_energy(j, lm, k),
        mode_axis(lm, k),
        mode_energy(j, lp, k),
        mode_axis(lp, k),
        [-n0[0], -n0[1]],
        t,
    )
}

pub fn log_decoherence(p: &IsingBathParams, t: f64) -> LogDecoherence {
    log_decoherence_modes(p, t, &momenta(p.n_spins))
}

/// `r(t) = Π_k R_k e^{i(φ_k − ε_k t)}`.
pub fn decoherence_product(p: &IsingBathParams, t: f64) -> Complex64 {
    log_decoherence(p, t).value()
}

/// Decoherence factor over one system cycle.
pub fn ising_trace(p: &IsingBathParams, sys: &SystemParams, samples: usize) -> Result<DecoherenceTrace> {
    match p.shift {
        ShiftConvention::OneSided => {
            if samples < 2 || !samples.is_multiple_of(2) {
                return Err(Error::InvalidGrid(format!(
                    "need an even number of intervals, got {samples}"
                )));
            }
            let tau = sys.tau();
            let terms = one_sided_terms(p, &momenta(p.n_spins));
            let mut magnitude = Vec::with_capacity(samples + 1);
            let mut phase = Vec::with_capacity(samples + 1);
            for t in crate::gp::uniform_grid(tau, samples) {
                let l = sum_log_terms(&terms, t);
                magnitude.push(if l.underflow { 0.0 } else { l.log_magnitude.exp() });
                phase.push(l.phase);
            }
            DecoherenceTrace::from_polar(tau, magnitude, phase)
        }
        ShiftConvention::Symmetric => {
            let p = *p;
            build_trace(move |t| decoherence_product(&p, t), sys, samples)
        }
    }
}

/// Exact-pipeline correction `δΦ`: the phase of the coupled trace minus that
/// of the uncoupled one.
pub fn ising_gp_correction(p: &IsingBathParams, sys: &SystemParams, samples: usize) -> Result<f64> {
    let coupled = geometric_phase(&ising_trace(p, sys, samples)?, sys)?;
    let baseline = geometric_phase(&ising_trace(&p.with_coupling(0.0), sys, samples)?, sys)?;
    Ok(coupled.correction - baseline.correction)
}

/// Mode-space factor from dense 2×2 evolution: the mode Hamiltonian is
/// `ε_k (sinθ_k X + cosθ_k Z)`, the initial state its ground state.
pub fn mode_oracle(p: &IsingBathParams, k: f64, t: f64) -> Complex64 {
    let (lm, lp) = p.branch_lambdas();
    let j = p.j_coupling;
    let h = |lam: f64| {
        let th = bogoliubov_angle(lam, k);
        (&pauli::x().scale_real(th.sin()) + &pauli::z().scale_real(th.cos()))
            .scale_real(mode_energy(j, lam, k))
    };
    let (_, vecs) = eigh_2x2(&h(p.lambda)).expect("Hermitian");
    let g = &vecs[0];
    let um = expm_hermitian(&h(lm), t).expect("Hermitian");
    let up = expm_hermitian(&h(lp), t).expect("Hermitian");
    um.apply(g).inner(&up.apply(g))
}

/// Exact many-body reference for short chains.
///
/// The ground state of `H_E(λ)` is found by Lanczos iteration confined to the
/// even-parity (`Π X_n = +1`), translation-invariant sector, which is where the
/// antiperiodic mode product lives; branch evolution uses Taylor substeps of
/// the sparse Hamiltonian.
#[derive(Debug, Clone)]
pub struct BruteForceOracle {
    params: IsingBathParams,
    bonds: Vec<f64>,
    ground: Vec<Complex64>,
    ground_energy: f64,
}

impl BruteForceOracle {
    pub fn new(p: &IsingBathParams) -> Result<Self> {
        let n = p.n_spins;
        if n > MAX_ORACLE_SPINS {
            return Err(Error::DimensionTooLarge {
                n_spins: n,
                max: MAX_ORACLE_SPINS,
            });
        }
        let dim = 1usize << n;
        let bonds: Vec<f64> = (0..dim)
            .map(|idx| {
                (0..n)
                    .map(|s| {
                        let a = (idx >> s) & 1;
                        let b = (idx >> ((s + 1) % n)) & 1;
                        if a == b {
                            1.0
                        } else {
                            -1.0
                        }
                    })
                    .sum()
            })
            .collect();
        let mut oracle = Self {
            params: *p,
            bonds,
            ground: Vec::new(),
            ground_energy: 0.0,
        };
        let (e0, g) = oracle.lanczos_ground(p.lambda)?;
        oracle.ground_energy = e0;
        oracle.ground = g.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        Ok(oracle)
    }

    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }

    fn apply_real(&self, lambda: f64, v: &[f64], out: &mut [f64]) {
        let j = self.params.j_coupling;
        let n = self.params.n_spins;
        for (i, o) in out.iter_mut().enumerate() {
            let mut flip = 0.0;
            for s in 0..n {
                flip += v[i ^ (1 << s)];
            }
            *o = -j * (self.bonds[i] * v[i] + lambda * flip);
        }
    }

    fn apply_complex(&self, lambda: f64, v: &[Complex64], out: &mut [Complex64]) {
        let j = self.params.j_coupling;
        let n = self.params.n_spins;
        for (i, o) in out.iter_mut().enumerate() {
            let mut flip = Complex64::new(0.0, 0.0);
            for s in 0..n {
                flip += v[i ^ (1 << s)];
            }
            *o = (v[i] * self.bonds[i] + flip * lambda) * (-j);
        }
    }

    fn lanczos_ground(&self, lambda: f64) -> Result<(f64, Vec<f64>)> {
        let dim = self.bonds.len();
        let all = dim - 1;
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = self.params.j_coupling * self.params.n_spins as f64 * (1.0 + lambda.abs());
        let mut x = vec![1.0 / (dim as f64).sqrt(); dim];
        let mut hv = vec![0.0; dim];
        for _restart in 0..200 {
            let mut basis: Vec<Vec<f64>> = vec![x.clone()];
            let mut alpha = Vec::new();
            let mut beta: Vec<f64> = Vec::new();
            let max_m = dim.min(80);
            loop {
                let v = basis.last().expect("non-empty");
                self.apply_real(lambda, v, &mut hv);
                let a: f64 = hv.iter().zip(v).map(|(p, q)| p * q).sum();
                alpha.push(a);
                let mut w = hv.clone();
                for b in &basis {
                    let c: f64 = w.iter().zip(b).map(|(p, q)| p * q).sum();
                    w.iter_mut().zip(b).for_each(|(p, q)| *p -= c * q);
                }
                for b in &basis {
                    let c: f64 = w.iter().zip(b).map(|(p, q)| p * q).sum();
                    w.iter_mut().zip(b).for_each(|(p, q)| *p -= c * q);
                }
                // Keep the iteration in the even-parity sector.
                let w: Vec<f64> = (0..dim).map(|i| 0.5 * (w[i] + w[i ^ all])).collect();
                let bn = norm(&w);
                if basis.len() >= max_m || bn < 1e-12 * scale {
                    break;
                }
                beta.push(bn);
                basis.push(w.into_iter().map(|q| q / bn).collect());
            }
            let m = alpha.len();
            let mut t = ComplexMatrix::zeros(m);
            for i in 0..m {
                t[(i, i)] = Complex64::new(alpha[i], 0.0);
                if i + 1 < m {
                    t[(i, i + 1)] = Complex64::new(beta[i], 0.0);
                    t[(i + 1, i)] = Complex64::new(beta[i], 0.0);
                }
            }
            let (theta, coeffs) = if m == 1 {
                (alpha[0], vec![1.0])
            } else {
                let e = eigh(&t)?;
                let v = e.vector(0);
                let c: Vec<f64> = v.amplitudes().iter().map(|z| z.re).collect();
                (e.values[0], c)
            };
            let mut y = vec![0.0; dim];
            for (b, c) in basis.iter().zip(&coeffs) {
                y.iter_mut().zip(b).for_each(|(p, q)| *p += c * q);
            }
            let ny = norm(&y);
            y.iter_mut().for_each(|p| *p /= ny);
            self.apply_real(lambda, &y, &mut hv);
            let res = hv
                .iter()
                .zip(&y)
                .map(|(p, q)| (p - theta * q).powi(2))
                .sum::<f64>()
                .sqrt();
            if res < 1e-12 * scale {
                let e: f64 = hv.iter().zip(&y).map(|(p, q)| p * q).sum();
                return Ok((e, y));
            }
            x = y;
        }
        Err(Error::InvalidParameter(
            "Lanczos ground-state iteration did not converge".into(),
        ))
    }

    fn evolve(&self, lambda: f64, t: f64) -> Vec<Complex64> {
        let n = self.params.n_spins as f64;
        let bound = self.params.j_coupling * n * (1.0 + lambda.abs());
        let steps = ((bound * t.abs()) / 0.5).ceil().max(1.0) as usize;
        let dt = t / steps as f64;
        let mut psi = self.ground.clone();
        let mut term = vec![Complex64::new(0.0, 0.0); psi.len()];
        let mut next = term.clone();
        for _ in 0..steps {
            term.copy_from_slice(&psi);
            let mut acc = psi.clone();
            for order in 1..60 {
                self.apply_complex(lambda, &term, &mut next);
                let f = Complex64::new(0.0, -dt / order as f64);
                let mut size = 0.0f64;
                for (tm, nx) in term.iter_mut().zip(&next) {
                    *tm = nx * f;
                    size = size.max(tm.norm());
                }
                acc.iter_mut().zip(&term).for_each(|(a, b)| *a += b);
                if size < 1e-18 {
                    break;
                }
            }
            psi = acc;
        }
        psi
    }

    /// `⟨g|e^{+iH(λ₋)t} e^{−iH(λ₊)t}|g⟩`.
    pub fn evaluate(&self, t: f64) -> Complex64 {
        let (lm, lp) = self.params.branch_lambdas();
        let plus = self.evolve(lp, t);
        let minus = if lm == self.params.lambda {
            let ph = Complex64::from_polar(1.0, -self.ground_energy * t);
            self.ground.iter().map(|g| g * ph).collect()
        } else {
            self.evolve(lm, t)
        };
        minus
            .iter()
            .zip(&plus)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// One-shot [`BruteForceOracle`] evaluation.
pub fn brute_force_oracle(p: &IsingBathParams, t: f64) -> Result<Complex64> {
    Ok(BruteForceOracle::new(p)?.evaluate(t))
}
