//! Geometric phase of a dephased qubit over one cycle.
//!
//! Two independent routes are provided:
//!
//! * [`geometric_phase`] evaluates the closed expression in terms of the
//!   decoherence factor `r(t) = |r| e^{i phi}`: an integral of
//!   `(Ω - dphi/dt) sin²(θ₊/2)` plus a quadrant-aware arctangent boundary term.
//! * [`gp_from_trajectory`] diagonalizes every reduced density matrix on the
//!   grid and parallel-transports the dominant eigenvector (discrete
//!   Bargmann product), keeping only the `+` branch.
//!
//! Cycle convention: over one period `τ = 2π/Ω` the coherence of the reduced
//! state rotates once, `ρ₀₁(t) = (sinθ/2) e^{-iΩt} r(t)`, so that the
//! unitary limit is `π(1 - cosθ)`. `phi` is the unwrapped argument of `r`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qmat::{eigh_2x2, ComplexMatrix, StateVector};

/// Smallest grid accepted by [`build_trace`] (intervals per cycle).
pub const MIN_SAMPLES: usize = 64;

/// Grid refinement stops once this many intervals are reached.
pub const MAX_SAMPLES: usize = 1 << 18;

/// Largest allowed phase increment between neighbouring samples before the
/// grid is refined.
const UNWRAP_STEP_LIMIT: f64 = PI / 2.0;

/// System-qubit parameters: angular frequency `omega` and Bloch polar angle
/// `theta` of the initial state `sin(θ/2)|0> + cos(θ/2)|1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    omega: f64,
    theta: f64,
}

impl SystemParams {
    pub fn new(omega: f64, theta: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "omega must be positive and finite, got {omega}"
            )));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in [0, pi], got {theta}"
            )));
        }
        Ok(Self { omega, theta })
    }

    #[inline]
    pub fn omega(&self) -> f64 {
        self.omega
    }

    #[inline]
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Cycle period `2π/Ω`.
    #[inline]
    pub fn tau(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::new(self.omega, theta)
    }
}

/// Decoherence factor sampled on a uniform grid over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceTrace {
    times: Vec<f64>,
    r_values: Vec<Complex64>,
    magnitude: Vec<f64>,
    phase_unwrapped: Vec<f64>,
}

impl DecoherenceTrace {
    /// Builds a trace from magnitude and an already continuous phase on the
    /// uniform grid `t_i = i·period/M`, `i = 0..=M`.
    pub fn from_polar(period: f64, magnitude: Vec<f64>, phase: Vec<f64>) -> Result<Self> {
        if magnitude.len() != phase.len() {
            return Err(Error::InvalidGrid(
                "magnitude and phase lengths differ".into(),
            ));
        }
        let samples = magnitude.len().saturating_sub(1);
        if samples < 2 || !samples.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "need an even number of intervals >= 2, got {samples}"
            )));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidGrid(format!("period {period} must be positive")));
        }
        let times = uniform_grid(period, samples);
        let r_values = magnitude
            .iter()
            .zip(&phase)
            .map(|(&m, &p)| Complex64::from_polar(m, p))
            .collect();
        let trace = Self {
            times,
            r_values,
            magnitude,
            phase_unwrapped: phase,
        };
        trace.validate()?;
        Ok(trace)
    }

    fn validate(&self) -> Result<()> {
        let r0 = Complex64::from_polar(self.magnitude[0], self.phase_unwrapped[0]);
        if (r0 - 1.0).norm() > 1e-9 || self.phase_unwrapped[0].abs() > 1e-9 {
            return Err(Error::InvalidInitialValue {
                value: format!("{r0}"),
            });
        }
        if let Some((i, m)) = self
            .magnitude
            .iter()
            .enumerate()
            .find(|(_, m)| !(**m >= 0.0 && **m <= 1.0 + 1e-9))
        {
            return Err(Error::InvalidParameter(format!(
                "|r| = {m} at sample {i} is outside [0, 1]"
            )));
        }
        if let Some(jump) = self
            .phase_unwrapped
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .find(|d| d.is_nan() || *d >= PI)
        {
            return Err(Error::UnwrapFailure {
                jump,
                samples: self.samples(),
            });
        }
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn r_values(&self) -> &[Complex64] {
        &self.r_values
    }

    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    pub fn phase_unwrapped(&self) -> &[f64] {
        &self.phase_unwrapped
    }

    /// Number of intervals `M`.
    pub fn samples(&self) -> usize {
        self.times.len() - 1
    }

    pub fn period(&self) -> f64 {
        *self.times.last().expect("non-empty grid")
    }

    pub fn dt(&self) -> f64 {
        self.period() / self.samples() as f64
    }

    pub fn final_phase(&self) -> f64 {
        *self.phase_unwrapped.last().expect("non-empty grid")
    }

    pub fn final_magnitude(&self) -> f64 {
        *self.magnitude.last().expect("non-empty grid")
    }
}

pub(crate) fn uniform_grid(period: f64, samples: usize) -> Vec<f64> {
    (0..=samples)
        .map(|i| {
            if i == samples {
                period
            } else {
                period * i as f64 / samples as f64
            }
        })
        .collect()
}

/// Samples `r(t)` on `samples` uniform intervals of `[0, τ]` and unwraps its
/// phase by nearest-branch continuation.
///
/// When a step between neighbours exceeds π/2 the grid is doubled, up to
/// [`MAX_SAMPLES`]. A jump that survives refinement (typically `r` passing
/// through zero) is reported as [`Error::UnwrapFailure`].
pub fn build_trace<F>(sampler: F, params: &SystemParams, samples: usize) -> Result<DecoherenceTrace>
where
    F: Fn(f64) -> Complex64,
{
    build_trace_capped(sampler, params, samples, MAX_SAMPLES)
}

/// [`build_trace`] with an explicit refinement cap.
pub fn build_trace_capped<F>(
    sampler: F,
    params: &SystemParams,
    samples: usize,
    max_samples: usize,
) -> Result<DecoherenceTrace>
where
    F: Fn(f64) -> Complex64,
{
    if samples < MIN_SAMPLES || !samples.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!(
            "need an even number of intervals >= {MIN_SAMPLES}, got {samples}"
        )));
    }
    let r0 = sampler(0.0);
    if (r0 - 1.0).norm() > 1e-9 {
        return Err(Error::InvalidInitialValue {
            value: format!("{r0}"),
        });
    }
    let period = params.tau();
    let mut m = samples;
    loop {
        let times = uniform_grid(period, m);
        let r_values: Vec<Complex64> = times.iter().map(|&t| sampler(t)).collect();
        match unwrap_phase(&r_values) {
            Ok(phase) => {
                let magnitude = r_values.iter().map(|z| z.norm()).collect();
                let trace = DecoherenceTrace {
                    times,
                    r_values,
                    magnitude,
                    phase_unwrapped: phase,
                };
                trace.validate()?;
                return Ok(trace);
            }
            Err(jump) if m * 2 <= max_samples => {
                let _ = jump;
                m *= 2;
            }
            Err(jump) => return Err(Error::UnwrapFailure { jump, samples: m }),
        }
    }
}

/// Continuous argument of a sampled complex curve, starting at `arg(z₀)`.
/// Returns the offending jump if a step exceeds the refinement limit or the
/// curve touches zero.
fn unwrap_phase(values: &[Complex64]) -> std::result::Result<Vec<f64>, f64> {
    let mut phase = Vec::with_capacity(values.len());
    let mut acc = values[0].arg();
    phase.push(acc);
    for w in values.windows(2) {
        if w[0].norm() < 1e-300 || w[1].norm() < 1e-300 {
            return Err(PI);
        }
        let step = (w[1] * w[0].conj()).arg();
        if step.abs() > UNWRAP_STEP_LIMIT {
            return Err(step.abs());
        }
        acc += step;
        phase.push(acc);
    }
    Ok(phase)
}

/// Dominant eigenvalue `ε₊ = ½(1 + √(cos²θ + |r|² sin²θ))` of the reduced
/// state.
pub fn eps_plus(r_abs: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    0.5 * (1.0 + (c * c + r_abs * r_abs * s * s).sqrt())
}

/// Half-angle `(cos(θ₊/2), sin(θ₊/2))` of the dominant eigenvector
/// `sin(θ₊/2)|0> + cos(θ₊/2) e^{iχ}|1>`.
pub fn bloch_plus_angle(r_abs: f64, theta: f64, eps_plus: f64) -> Result<(f64, f64)> {
    let half = (theta / 2.0).sin();
    // ε₊ − sin²(θ/2) = ½(√(cos²θ + |r|²sin²θ) + cosθ); this form avoids
    // cancellation when the caller's ε₊ came from `eps_plus`.
    let shifted = eps_plus - half * half;
    let num_cos = 2.0 * shifted;
    let num_sin = r_abs * theta.sin();
    let norm = num_sin.hypot(num_cos);
    if norm < 1e-14 {
        return Err(Error::DegenerateEigenvector);
    }
    Ok((num_cos / norm, num_sin / norm))
}

/// Stable variant used internally: computes `ε₊ − sin²(θ/2)` directly.
fn plus_half_angle(r_abs: f64, theta: f64) -> Result<(f64, f64)> {
    let (s, c) = theta.sin_cos();
    let shifted = 0.5 * ((c * c + r_abs * r_abs * s * s).sqrt() + c);
    let num_cos = 2.0 * shifted;
    let num_sin = r_abs * s;
    let norm = num_sin.hypot(num_cos);
    if norm < 1e-14 {
        return Err(Error::DegenerateEigenvector);
    }
    Ok((num_cos / norm, num_sin / norm))
}

/// Phase over one cycle and its decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpResult {
    /// Φ, not reduced modulo 2π.
    pub phi_total: f64,
    /// Closed-system reference `π(1 − cosθ)`.
    pub phi_unitary: f64,
    /// `Φ − Φ₀`, accumulated without cancellation against Φ₀.
    pub correction: f64,
    pub integral_part: f64,
    pub arctan_part: f64,
    pub eps_plus_final: f64,
}

/// `π(1 − cosθ)`.
pub fn unitary_geometric_phase(theta: f64) -> f64 {
    PI * (1.0 - theta.cos())
}

/// Closed-system dynamical phase `−π cosθ`.
pub fn dynamical_phase(params: &SystemParams) -> f64 {
    -PI * params.theta().cos()
}

/// Phase from the decoherence factor over exactly one period.
///
/// The integrand is split as `sin²(θ₊/2) = sin²(θ/2) + d(t)`; the
/// `sin²(θ/2)` part integrates in closed form to `Φ₀ − sin²(θ/2)·phi(τ)`, so
/// quadrature (composite Simpson) only sees the bath-induced deviation `d`.
/// `dphi/dt` uses second-order central differences, one-sided at the ends.
pub fn geometric_phase(trace: &DecoherenceTrace, params: &SystemParams) -> Result<GpResult> {
    let tau = params.tau();
    if (trace.period() - tau).abs() > 1e-12 * tau {
        return Err(Error::InvalidGrid(format!(
            "trace covers [0, {}] but the cycle period is {tau}",
            trace.period()
        )));
    }
    let theta = params.theta();
    let phi0 = unitary_geometric_phase(theta);
    let half_sin = (theta / 2.0).sin();
    let half_cos = (theta / 2.0).cos();
    let s2 = half_sin * half_sin;
    let final_eps = eps_plus(trace.final_magnitude(), theta);

    // Poles: sinθ = 0 removes every bath dependence from the reduced state.
    if theta.sin().abs() < 1e-15 {
        return Ok(GpResult {
            phi_total: phi0,
            phi_unitary: phi0,
            correction: 0.0,
            integral_part: phi0,
            arctan_part: 0.0,
            eps_plus_final: final_eps,
        });
    }

    let mut deviation = Vec::with_capacity(trace.times.len());
    let mut final_angle = (0.0, 0.0);
    for &m in &trace.magnitude {
        let (ch, sh) = plus_half_angle(m, theta)?;
        deviation.push(sin2_deviation(m, theta));
        final_angle = (ch, sh);
    }
    let dt = trace.dt();
    let dphi = central_derivative(&trace.phase_unwrapped, dt);
    let omega = params.omega();
    let integrand: Vec<f64> = deviation
        .iter()
        .zip(&dphi)
        .map(|(&d, &p)| (omega - p) * d)
        .collect();
    let phi_tau = trace.final_phase();
    let bath_integral = simpson(&integrand, dt) - s2 * phi_tau;

    let (ch, sh) = final_angle;
    let arctan_part = (phi_tau.sin() * sh * half_sin)
        .atan2(phi_tau.cos() * sh * half_sin + ch * half_cos);

    let integral_part = phi0 + bath_integral;
    Ok(GpResult {
        phi_total: integral_part + arctan_part,
        phi_unitary: phi0,
        correction: bath_integral + arctan_part,
        integral_part,
        arctan_part,
        eps_plus_final: final_eps,
    })
}

/// `sin²(θ₊/2) − sin²(θ/2)` without cancellation for `|r| → 1`.
///
/// With `L = √(cos²θ + |r|² sin²θ)` and `cosθ₊ = cosθ/L` the difference is
/// `−cosθ sin²θ (1 − |r|²) / (2L(L + 1))`.
fn sin2_deviation(r_abs: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let u = (1.0 - r_abs) * (1.0 + r_abs);
    let l = (c * c + r_abs * r_abs * s * s).sqrt();
    -c * s * s * u / (2.0 * l * (l + 1.0))
}

/// Derivative of uniformly sampled data: central differences in the
/// interior, second-order one-sided at both ends.
pub(crate) fn central_derivative(y: &[f64], dt: f64) -> Vec<f64> {
    let n = y.len();
    assert!(n >= 3, "need at least three samples to differentiate");
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * dt);
    for i in 1..n - 1 {
        d[i] = (y[i + 1] - y[i - 1]) / (2.0 * dt);
    }
    d[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * dt);
    d
}

/// Composite Simpson rule on an even number of uniform intervals.
pub(crate) fn simpson(y: &[f64], dt: f64) -> f64 {
    let n = y.len() - 1;
    assert!(n >= 2 && n.is_multiple_of(2), "Simpson needs an even number of intervals");
    let mut acc = y[0] + y[n];
    for (i, v) in y.iter().enumerate().take(n).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * dt / 3.0
}

/// Reduced qubit state under pure dephasing at time `t`:
/// populations `sin²(θ/2)`, `cos²(θ/2)` and coherence `(sinθ/2) e^{-iΩt} r`.
pub fn reduced_density(params: &SystemParams, t: f64, r: Complex64) -> ComplexMatrix {
    let theta = params.theta();
    let coh = 0.5 * theta.sin() * Complex64::from_polar(1.0, -params.omega() * t) * r;
    ComplexMatrix::from_2x2(
        Complex64::new((theta / 2.0).sin().powi(2), 0.0),
        coh,
        coh.conj(),
        Complex64::new((theta / 2.0).cos().powi(2), 0.0),
    )
}

/// Density-matrix trajectory corresponding to a decoherence trace.
pub fn density_trajectory(trace: &DecoherenceTrace, params: &SystemParams) -> Vec<ComplexMatrix> {
    trace
        .times
        .iter()
        .zip(&trace.r_values)
        .map(|(&t, &r)| reduced_density(params, t, r))
        .collect()
}

/// Phase of the discrete parallel-transport loop
/// `<k₀|k_M> Π_i <k_{i+1}|k_i>` through the given states.
///
/// The product is invariant under any rephasing of the individual vectors.
pub fn bargmann_phase(states: &[StateVector]) -> f64 {
    assert!(states.len() >= 2, "need at least two states");
    let mut acc = states[0].inner(&states[states.len() - 1]);
    for w in states.windows(2) {
        let ov = w[1].inner(&w[0]);
        acc *= ov / ov.norm().max(f64::MIN_POSITIVE);
        acc /= acc.norm().max(f64::MIN_POSITIVE);
    }
    acc.arg()
}

/// Phase from a sampled reduced-density trajectory covering one cycle.
///
/// Each `ρ(t_i)` is diagonalized, the `+` eigenvector is gauge-smoothed by
/// maximal overlap with its predecessor, and the discrete loop phase is
/// formed. The discrete loop differs from the continuum by `O(dt²)`, so when
/// the number of intervals is even the result is Richardson-extrapolated
/// against the every-other-sample loop. Returned in `(−π, π]`.
pub fn gp_from_trajectory(rho_t: &[ComplexMatrix]) -> Result<f64> {
    if rho_t.len() < 3 {
        return Err(Error::InvalidGrid("trajectory needs at least three samples".into()));
    }
    let mut states = Vec::with_capacity(rho_t.len());
    for (i, rho) in rho_t.iter().enumerate() {
        if rho.dim() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "trajectory entry {i} is {0}x{0}, expected 2x2",
                rho.dim()
            )));
        }
        if (rho.trace() - 1.0).norm() > 1e-10 {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace of entry {i} is {}",
                rho.trace()
            )));
        }
        let (vals, vecs) = eigh_2x2(rho)?;
        let gap = vals[1] - vals[0];
        if gap < 1e-8 {
            return Err(Error::EigenbranchCrossing { index: i, gap });
        }
        let [_, plus] = vecs;
        let plus = match states.last() {
            Some(prev) => smooth_gauge(prev, plus),
            None => plus,
        };
        states.push(plus);
    }
    let fine = bargmann_phase(&states);
    let intervals = states.len() - 1;
    if intervals % 2 != 0 || intervals < 4 {
        return Ok(fine);
    }
    let coarse_states: Vec<StateVector> = states.iter().step_by(2).cloned().collect();
    let coarse = bargmann_phase(&coarse_states);
    let diff = wrap_angle(fine - coarse);
    Ok(wrap_angle(fine + diff / 3.0))
}

fn smooth_gauge(prev: &StateVector, next: StateVector) -> StateVector {
    let ov = prev.inner(&next);
    if ov.norm() < 1e-300 {
        return next;
    }
    next.with_phase(-ov.arg())
}

/// Maps an angle to `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(theta: f64) -> SystemParams {
        SystemParams::new(100.0 * PI, theta).unwrap()
    }

    #[test]
    fn constant_sampler_has_flat_phase() {
        let tr = build_trace(|_| Complex64::new(1.0, 0.0), &sys(1.0), 128).unwrap();
        assert!(tr.phase_unwrapped().iter().all(|&p| p == 0.0));
        assert!(tr.magnitude().iter().all(|&m| m == 1.0));
        assert_eq!(tr.samples(), 128);
    }

    #[test]
    fn linear_phase_is_not_folded() {
        let p = sys(1.0);
        let w = 6.0 * PI / p.tau();
        let tr = build_trace(|t| Complex64::from_polar(1.0, -w * t), &p, 64).unwrap();
        assert!((tr.final_phase() + 6.0 * PI).abs() < 1e-9);
        let tr = build_trace(|t| Complex64::from_polar(1.0, w * t), &p, 64).unwrap();
        assert!((tr.final_phase() - 6.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn fast_phase_triggers_refinement() {
        let p = sys(1.0);
        // 0.75π per step on the initial grid, 0.375π after one doubling.
        let w = 48.0 * PI / p.tau();
        let tr = build_trace(|t| Complex64::from_polar(1.0, w * t), &p, 64).unwrap();
        assert_eq!(tr.samples(), 128);
        assert!((tr.final_phase() - 48.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn zero_crossing_is_an_unwrap_failure() {
        let p = sys(1.0);
        let tau = p.tau();
        // Passes exactly through zero at t = τ/2.
        let f = move |t: f64| Complex64::new((PI * t / tau).cos(), 0.0);
        let err = build_trace_capped(f, &p, 64, 1024).unwrap_err();
        assert!(matches!(err, Error::UnwrapFailure { .. }), "{err:?}");
    }

    #[test]
    fn bad_initial_value_and_grid() {
        let p = sys(1.0);
        assert!(matches!(
            build_trace(|_| Complex64::new(0.5, 0.0), &p, 64),
            Err(Error::InvalidInitialValue { .. })
        ));
        assert!(matches!(
            build_trace(|_| Complex64::new(1.0, 0.0), &p, 32),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn eps_plus_values() {
        assert!((eps_plus(1.0, 0.3) - 1.0).abs() < 1e-15);
        assert!((eps_plus(0.0, PI / 2.0) - 0.5).abs() < 1e-15);
        let expected = 0.5 * (1.0 + 0.625_f64.sqrt());
        assert!((eps_plus(0.5, PI / 4.0) - expected).abs() < 1e-15);
        assert!((expected - 0.895285).abs() < 1e-6);
    }

    #[test]
    fn bloch_angle_unitary_limit_and_degenerate() {
        for theta in [0.2, 1.0, 2.5] {
            let (c, s) = bloch_plus_angle(1.0, theta, eps_plus(1.0, theta)).unwrap();
            assert!((c - (theta / 2.0).cos()).abs() < 1e-12);
            assert!((s - (theta / 2.0).sin()).abs() < 1e-12);
        }
        assert_eq!(
            bloch_plus_angle(0.0, PI / 2.0, eps_plus(0.0, PI / 2.0)),
            Err(Error::DegenerateEigenvector)
        );
    }

    #[test]
    fn bloch_angle_matches_eigenvector() {
        let (theta, r) = (PI / 4.0, 0.5);
        let (c, s) = bloch_plus_angle(r, theta, eps_plus(r, theta)).unwrap();
        assert!((c * c + s * s - 1.0).abs() < 1e-12);
        let p = SystemParams::new(1.0, theta).unwrap();
        let rho = reduced_density(&p, 0.0, Complex64::new(r, 0.0));
        let (vals, vecs) = eigh_2x2(&rho).unwrap();
        assert!((vals[1] - eps_plus(r, theta)).abs() < 1e-12);
        let v = vecs[1].amplitudes();
        assert!((v[0].re - s).abs() < 1e-10);
        assert!((v[1].norm() - c).abs() < 1e-10);
    }

    #[test]
    fn unitary_limit() {
        for theta in [PI / 2.0, PI / 4.0, 2.0] {
            let p = sys(theta);
            let tr = build_trace(|_| Complex64::new(1.0, 0.0), &p, 64).unwrap();
            let gp = geometric_phase(&tr, &p).unwrap();
            assert!((gp.phi_total - unitary_geometric_phase(theta)).abs() < 1e-12);
            assert!(gp.correction.abs() < 1e-12);
            assert_eq!(gp.phi_total, gp.integral_part + gp.arctan_part);
        }
        let p = sys(PI / 4.0);
        let tr = build_trace(|_| Complex64::new(1.0, 0.0), &p, 64).unwrap();
        let gp = geometric_phase(&tr, &p).unwrap();
        assert!((gp.phi_total - 0.920151).abs() < 1e-6);
    }

    #[test]
    fn poles_return_reference() {
        let r = |t: f64| Complex64::from_polar((-t).exp(), 3.0 * t);
        for (theta, expected) in [(0.0, 0.0), (PI, 2.0 * PI)] {
            let p = sys(theta);
            let tr = build_trace(r, &p, 64).unwrap();
            let gp = geometric_phase(&tr, &p).unwrap();
            assert_eq!(gp.phi_total, expected);
            assert_eq!(gp.correction, 0.0);
        }
    }

    #[test]
    fn period_mismatch_rejected() {
        let tr = build_trace(|_| Complex64::new(1.0, 0.0), &sys(1.0), 64).unwrap();
        let other = SystemParams::new(3.0, 1.0).unwrap();
        assert!(matches!(geometric_phase(&tr, &other), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn dynamical_phase_values() {
        assert!(dynamical_phase(&sys(PI / 2.0)).abs() < 1e-15);
        assert!((dynamical_phase(&sys(0.0)) + PI).abs() < 1e-15);
        assert!((dynamical_phase(&sys(PI / 4.0)) + 2.221441).abs() < 1e-6);
    }

    #[test]
    fn trajectory_unitary_limit() {
        let p = SystemParams::new(2.0, PI / 3.0).unwrap();
        let tr = build_trace(|_| Complex64::new(1.0, 0.0), &p, 256).unwrap();
        let gp = gp_from_trajectory(&density_trajectory(&tr, &p)).unwrap();
        assert!((gp - PI / 2.0).abs() < 1e-6, "{gp}");
    }

    fn damped_trace(p: &SystemParams) -> DecoherenceTrace {
        let tau = p.tau();
        build_trace(
            move |t| {
                let x = t / tau;
                Complex64::from_polar(1.0 - 0.3 * (PI * x).sin().powi(2), 0.8 * (2.0 * PI * x).sin() + 0.5 * x)
            },
            p,
            2048,
        )
        .unwrap()
    }

    #[test]
    fn closed_form_matches_trajectory() {
        for theta in [0.4, PI / 4.0, 1.3, 2.2] {
            let p = SystemParams::new(3.0, theta).unwrap();
            let tr = damped_trace(&p);
            let a = geometric_phase(&tr, &p).unwrap().phi_total;
            let b = gp_from_trajectory(&density_trajectory(&tr, &p)).unwrap();
            assert!(wrap_angle(a - b).abs() < 1e-6, "theta {theta}: {a} vs {b}");
        }
    }

    #[test]
    fn time_reversal_negates_loop_phase() {
        let p = SystemParams::new(3.0, 0.9).unwrap();
        let rho = density_trajectory(&damped_trace(&p), &p);
        let fwd = gp_from_trajectory(&rho).unwrap();
        let rev: Vec<_> = rho.iter().rev().cloned().collect();
        let back = gp_from_trajectory(&rev).unwrap();
        assert!(wrap_angle(fwd + back).abs() < 1e-6);
    }

    #[test]
    fn trajectory_rejects_crossing() {
        let p = SystemParams::new(3.0, PI / 2.0).unwrap();
        let rho = vec![
            reduced_density(&p, 0.0, Complex64::new(1.0, 0.0)),
            reduced_density(&p, 0.1, Complex64::new(1e-10, 0.0)),
            reduced_density(&p, 0.2, Complex64::new(1.0, 0.0)),
        ];
        assert!(matches!(
            gp_from_trajectory(&rho),
            Err(Error::EigenbranchCrossing { index: 1, .. })
        ));
    }

    #[test]
    fn bargmann_gauge_invariance() {
        let p = SystemParams::new(3.0, 0.9).unwrap();
        let rho = density_trajectory(&damped_trace(&p), &p);
        let states: Vec<StateVector> = rho.iter().map(|r| eigh_2x2(r).unwrap().1[1].clone()).collect();
        let base = bargmann_phase(&states);
        let regauged: Vec<StateVector> = states
            .iter()
            .enumerate()
            .map(|(i, s)| s.with_phase(3.0 * (i as f64 * 0.01).sin() + 0.2 * i as f64))
            .collect();
        assert!(wrap_angle(bargmann_phase(&regauged) - base).abs() < 1e-8);
    }

    #[test]
    fn phase_bookkeeping_under_rephasing() {
        // r -> r e^{iχ(t)}: the closed form must move exactly as if the
        // unwrapped phase were shifted by χ, which we rebuild independently
        // from the polar data.
        let p = SystemParams::new(3.0, 1.1).unwrap();
        let tr = damped_trace(&p);
        let chi = |t: f64| 0.7 * (t * 2.0).sin();
        let shifted: Vec<f64> = tr
            .times()
            .iter()
            .zip(tr.phase_unwrapped())
            .map(|(&t, &ph)| ph + chi(t))
            .collect();
        let via_polar = DecoherenceTrace::from_polar(p.tau(), tr.magnitude().to_vec(), shifted).unwrap();
        let tau = p.tau();
        let m = tr.samples();
        let via_sampler = build_trace(
            |t| {
                let x = t / tau;
                Complex64::from_polar(1.0 - 0.3 * (PI * x).sin().powi(2), 0.8 * (2.0 * PI * x).sin() + 0.5 * x)
                    * Complex64::from_polar(1.0, chi(t))
            },
            &p,
            m,
        )
        .unwrap();
        let a = geometric_phase(&via_polar, &p).unwrap();
        let b = geometric_phase(&via_sampler, &p).unwrap();
        assert!((a.phi_total - b.phi_total).abs() < 1e-10);
        assert!((a.arctan_part - b.arctan_part).abs() < 1e-12);
        let base = geometric_phase(&tr, &p).unwrap();
        assert!((base.phi_total - a.phi_total).abs() > 1e-3);
    }

    #[test]
    fn simpson_and_derivative_exact_on_cubics() {
        let dt = 0.1;
        let y: Vec<f64> = (0..=10).map(|i| (i as f64 * dt).powi(3)).collect();
        assert!((simpson(&y, dt) - 0.25).abs() < 1e-14);
        let q: Vec<f64> = (0..=10).map(|i| (i as f64 * dt).powi(2)).collect();
        let d = central_derivative(&q, dt);
        for (i, v) in d.iter().enumerate() {
            assert!((v - 2.0 * i as f64 * dt).abs() < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn half_angle_is_normalized(r in 0.0..1.0f64, theta in 0.01..3.13f64) {
                let (c, s) = bloch_plus_angle(r.max(1e-3), theta, eps_plus(r.max(1e-3), theta)).unwrap();
                prop_assert!((c * c + s * s - 1.0).abs() < 1e-10);
                prop_assert!(s >= 0.0);
            }

            #[test]
            fn eps_plus_in_range(r in 0.0..1.0f64, theta in 0.0..PI) {
                let e = eps_plus(r, theta);
                prop_assert!((0.5..=1.0 + 1e-15).contains(&e));
            }
        }
    }
}
