//! Single-qubit environment with a tunable gap, `H_E = b Z + Δ X` with
//! `b = λ|λ|^{zν−1} Δ`.
//!
//! The gap is smallest at `λ = 0`, which plays the role of the critical point.

use num_complex::Complex64;
use rayon::prelude::*;

use super::planar_branch_overlap;
use crate::error::{Error, Result};
use crate::gp::{build_trace, geometric_phase, DecoherenceTrace, SystemParams};
use crate::qmat::{expm_hermitian, pauli, ComplexMatrix, StateVector};

/// How the system qubit couples to the environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingConvention {
    /// `δ Z_S Z_E`: the environment evolves under `H_E ± δ Z_E` for the two
    /// system pointer states.
    #[default]
    ZzTarget,
    /// `δ (I_S − Z_S) Z_E`: one branch evolves under `H_E`, the other under
    /// `H_E + 2δ Z_E`.
    Projector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelBathParams {
    delta_gap: f64,
    lambda: f64,
    znu: f64,
    coupling: f64,
    convention: CouplingConvention,
}

impl TwoLevelBathParams {
    pub fn new(delta_gap: f64, lambda: f64, znu: f64, coupling: f64) -> Result<Self> {
        if !(delta_gap > 0.0 && delta_gap.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gap must be positive and finite, got {delta_gap}"
            )));
        }
        if !(znu > 0.0 && znu.is_finite()) {
            return Err(Error::InvalidParameter(format!("znu must be positive, got {znu}")));
        }
        if !lambda.is_finite() || !coupling.is_finite() {
            return Err(Error::InvalidParameter("lambda and coupling must be finite".into()));
        }
        Ok(Self {
            delta_gap,
            lambda,
            znu,
            coupling,
            convention: CouplingConvention::ZzTarget,
        })
    }

    /// `zν = 1` parameters from the field `B` directly (`λ = B/Δ`).
    pub fn from_b_field(delta_gap: f64, b_field: f64, coupling: f64) -> Result<Self> {
        if delta_gap.is_nan() || delta_gap <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gap must be positive, got {delta_gap}"
            )));
        }
        Self::new(delta_gap, b_field / delta_gap, 1.0, coupling)
    }

    pub fn with_convention(mut self, convention: CouplingConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    /// Same gap and coupling, field moved to `B` (`zν` reset to 1).
    pub fn with_b_field(self, b_field: f64) -> Self {
        Self {
            lambda: b_field / self.delta_gap,
            znu: 1.0,
            ..self
        }
    }

    pub fn delta_gap(&self) -> f64 {
        self.delta_gap
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn znu(&self) -> f64 {
        self.znu
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn convention(&self) -> CouplingConvention {
        self.convention
    }

    /// `λ|λ|^{zν−1} Δ`.
    pub fn b_field(&self) -> f64 {
        if self.znu == 1.0 {
            self.lambda * self.delta_gap
        } else {
            self.lambda * self.lambda.abs().powf(self.znu - 1.0) * self.delta_gap
        }
    }

    /// Fields of the `(−, +)` branch Hamiltonians `b± Z + Δ X`.
    pub fn branch_fields(&self) -> (f64, f64) {
        let b = self.b_field();
        let d = self.coupling;
        match self.convention {
            CouplingConvention::ZzTarget => (b - d, b + d),
            CouplingConvention::Projector => (b, b + 2.0 * d),
        }
    }
}

fn field_hamiltonian(b: f64, delta_gap: f64) -> ComplexMatrix {
    &pauli::z().scale_real(b) + &pauli::x().scale_real(delta_gap)
}

/// `(ε₋, ε₊) = ∓√(b² + Δ²)`.
pub fn bath_eigenenergies(p: &TwoLevelBathParams) -> (f64, f64) {
    let e = p.b_field().hypot(p.delta_gap);
    (-e, e)
}

/// Mixing angle `α ∈ (0, π)` with `tan α = −Δ/b`.
pub fn mixing_angle(p: &TwoLevelBathParams) -> f64 {
    p.delta_gap.atan2(-p.b_field())
}

/// Ground state `cos(α/2)|0> − sin(α/2)|1>` of `b Z + Δ X`.
pub fn ground_state(p: &TwoLevelBathParams) -> StateVector {
    let (s, c) = (mixing_angle(p) / 2.0).sin_cos();
    StateVector::from_real(&[c, -s]).expect("unit vector by construction")
}

/// Branch overlap `⟨g|e^{+iH₋t} e^{-iH₊t}|g⟩` from dense 2×2 propagators.
///
/// Never reads the system state: the coupling commutes with `Z_S`.
pub fn decoherence_factor_oracle(p: &TwoLevelBathParams, t: f64) -> Complex64 {
    let g = ground_state(p);
    let (bm, bp) = p.branch_fields();
    let um = expm_hermitian(&field_hamiltonian(bm, p.delta_gap), t).expect("Hermitian by construction");
    let up = expm_hermitian(&field_hamiltonian(bp, p.delta_gap), t).expect("Hermitian by construction");
    um.apply(&g).inner(&up.apply(&g))
}

/// The same overlap in closed form (SU(2) product of the two branch
/// rotations). Agrees with [`decoherence_factor_oracle`] to rounding and is
/// what sweeps use.
pub fn decoherence_factor_closed_form(p: &TwoLevelBathParams, t: f64) -> Complex64 {
    let (bm, bp) = p.branch_fields();
    branch_overlap_from(p, bm, bp, t)
}

fn branch_overlap_from(p: &TwoLevelBathParams, bm: f64, bp: f64, t: f64) -> Complex64 {
    let d = p.delta_gap;
    let unit = |b: f64| {
        let e = b.hypot(d);
        (e, [d / e, b / e])
    };
    let (em, nm) = unit(bm);
    let (ep, np) = unit(bp);
    let (_, n0) = unit(p.b_field());
    planar_branch_overlap(em, nm, ep, np, [-n0[0], -n0[1]], t)
}

/// `λ`-slot shift that maps the stated formula onto the projector coupling:
/// the `+` branch field `b + 2δ` corresponds to `λ + 2δ/Δ` at `zν = 1`.
pub fn analytic_lambda_shift(p: &TwoLevelBathParams) -> f64 {
    2.0 * p.coupling / p.delta_gap
}

fn eps_minus_at(p: &TwoLevelBathParams, lambda: f64) -> f64 {
    -p.delta_gap * (1.0 + lambda.abs().powf(2.0 * p.znu)).sqrt()
}

/// The commonly stated closed expression, transcribed verbatim:
///
/// `r(t) = e^{iε₋(λ)t} [cos ε₋(λ+δ)t − i (ε₋²(λ+δ) − Δ²δ²)/(ε₋(λ)ε₋(λ+δ)) sin ε₋(λ+δ)t]`
///
/// with the shift `δ` read as the dimensionless [`analytic_lambda_shift`].
/// It reproduces the projector-coupling overlap only at `λ = 0`; see
/// [`decoherence_factor_analytic_corrected`].
pub fn decoherence_factor_analytic(p: &TwoLevelBathParams, t: f64) -> Complex64 {
    let dl = analytic_lambda_shift(p);
    let d2 = p.delta_gap * p.delta_gap;
    analytic_with_coefficient(p, t, |e_shift| e_shift * e_shift - d2 * dl * dl)
}

/// Printed expression with the coefficient numerator replaced by
/// `ε₋²(λ+δ) − Δ²δ(λ+δ)`, which equals `Δ² + b b₊` and makes the formula
/// exact for the projector coupling at `zν = 1`.
pub fn decoherence_factor_analytic_corrected(p: &TwoLevelBathParams, t: f64) -> Complex64 {
    let dl = analytic_lambda_shift(p);
    let d2 = p.delta_gap * p.delta_gap;
    let shifted = p.lambda + dl;
    analytic_with_coefficient(p, t, |e_shift| e_shift * e_shift - d2 * dl * shifted)
}

fn analytic_with_coefficient(
    p: &TwoLevelBathParams,
    t: f64,
    numerator: impl Fn(f64) -> f64,
) -> Complex64 {
    let e0 = eps_minus_at(p, p.lambda);
    let e1 = eps_minus_at(p, p.lambda + analytic_lambda_shift(p));
    let coef = numerator(e1) / (e0 * e1);
    let (s, c) = (e1 * t).sin_cos();
    Complex64::from_polar(1.0, e0 * t) * Complex64::new(c, -coef * s)
}

/// One row of the stated-formula comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormulaDiscrepancy {
    pub t: f64,
    pub oracle: Complex64,
    pub stated: Complex64,
    pub corrected: Complex64,
    pub stated_error: f64,
    pub corrected_error: f64,
}

/// Compares the stated and corrected expressions with the projector-coupling
/// oracle at the given times. Mismatches are data, not failures.
pub fn formula_discrepancy_report(p: &TwoLevelBathParams, times: &[f64]) -> Vec<FormulaDiscrepancy> {
    let proj = p.with_convention(CouplingConvention::Projector);
    times
        .iter()
        .map(|&t| {
            let oracle = decoherence_factor_oracle(&proj, t);
            let stated = decoherence_factor_analytic(p, t);
            let corrected = decoherence_factor_analytic_corrected(p, t);
            FormulaDiscrepancy {
                t,
                oracle,
                stated,
                corrected,
                stated_error: (stated - oracle).norm(),
                corrected_error: (corrected - oracle).norm(),
            }
        })
        .collect()
}

/// Decoherence factor of the bath sampled over one system cycle.
pub fn decoherence_trace(
    p: &TwoLevelBathParams,
    sys: &SystemParams,
    samples: usize,
) -> Result<DecoherenceTrace> {
    let p = *p;
    build_trace(move |t| decoherence_factor_closed_form(&p, t), sys, samples)
}

/// One point of a correction curve; failed points keep their error.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub b_field: f64,
    pub correction: Result<f64>,
}

/// `δΦ(B) = Φ[coupled] − Φ[δ = 0]` over a field sweep, in input order.
pub fn gp_correction_curve(
    base: &TwoLevelBathParams,
    b_grid: &[f64],
    sys: &SystemParams,
    samples: usize,
) -> Vec<CurvePoint> {
    b_grid
        .par_iter()
        .map(|&b| CurvePoint {
            b_field: b,
            correction: gp_correction(&base.with_b_field(b), sys, samples),
        })
        .collect()
}

/// Coupled minus uncoupled correction for one bath.
pub fn gp_correction(p: &TwoLevelBathParams, sys: &SystemParams, samples: usize) -> Result<f64> {
    let coupled = geometric_phase(&decoherence_trace(p, sys, samples)?, sys)?;
    let baseline = geometric_phase(&decoherence_trace(&p.with_coupling(0.0), sys, samples)?, sys)?;
    Ok(coupled.correction - baseline.correction)
}
