//! One function per subcommand. Each resolves its parameters (flag, then
//! preset, then built-in default), validates all of them before any work
//! starts, and returns the echoed configuration with the result table.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde_json::{json, Value};

use gphase_core::bath::ising::{ising_gp_correction, ising_trace, IsingBathParams, ShiftConvention};
use gphase_core::bath::two_level::{
    decoherence_trace, gp_correction, CouplingConvention, TwoLevelBathParams,
};
use gphase_core::gp::{geometric_phase, DecoherenceTrace, SystemParams, MIN_SAMPLES};
use gphase_core::perturbative::{
    gp_approx_ising, gp_approx_ising_as_stated, ising_closed_forms, ising_closed_forms_as_stated,
};
use gphase_core::protocol::{
    correction_experiment, cycle_fidelity, pulse_decompositions_check, Decomposition, ProtocolParams,
    PINNED_TROTTER_STEPS,
};

use crate::args::*;
use crate::output::{Cell, Row, Table};
use crate::presets::Preset;
use crate::CliError;

pub struct Outcome {
    pub config: Value,
    pub table: Table,
}

fn pick<T: Clone>(flag: Option<T>, preset: Option<T>, default: T) -> T {
    flag.or(preset).unwrap_or(default)
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let m = (n - 1) as f64;
    (0..n).map(|i| (lo * (m - i as f64) + hi * i as f64) / m).collect()
}

fn check_samples(samples: usize) -> Result<usize, CliError> {
    if samples < MIN_SAMPLES || !samples.is_multiple_of(2) {
        return Err(invalid(format!("--samples must be even and >= {MIN_SAMPLES}, got {samples}")));
    }
    Ok(samples)
}

fn check_points(points: usize) -> Result<usize, CliError> {
    if points == 0 {
        return Err(invalid("--points must be >= 1"));
    }
    Ok(points)
}

fn finite(name: &str, v: f64) -> Result<f64, CliError> {
    if !v.is_finite() {
        return Err(invalid(format!("--{name} must be finite, got {v}")));
    }
    Ok(v)
}

fn system(a: &SystemArgs, p: &Preset, default_omega: f64) -> Result<(SystemParams, usize), CliError> {
    let omega = finite("omega", pick(a.omega, p.omega, default_omega))?;
    let theta = finite("theta", pick(a.theta, p.theta, PI / 4.0))?;
    let samples = check_samples(pick(a.samples, p.samples, 64))?;
    Ok((SystemParams::new(omega, theta).map_err(invalid)?, samples))
}

fn system_json(sys: &SystemParams, samples: usize) -> Value {
    json!({"omega": sys.omega(), "theta": sys.theta(), "samples": samples})
}

fn two_level(a: &TwoLevelArgs, p: &Preset, omega: f64) -> Result<(TwoLevelBathParams, Value), CliError> {
    let gap = finite("delta-gap", pick(a.delta_gap, p.delta_gap_over_omega.map(|r| r * omega), 0.02 * omega))?;
    let coupling = finite("coupling", pick(a.coupling, p.coupling_over_omega.map(|r| r * omega), 0.1 * omega))?;
    let convention = pick(a.convention, None, Convention::Zz);
    let conv = match convention {
        Convention::Zz => CouplingConvention::ZzTarget,
        Convention::Projector => CouplingConvention::Projector,
    };
    let (bath, field) = match a.lambda {
        Some(l) => {
            let znu = pick(a.znu, None, 1.0);
            let b = TwoLevelBathParams::new(gap, finite("lambda", l)?, finite("znu", znu)?, coupling).map_err(invalid)?;
            (b, json!({"lambda": l, "znu": znu}))
        }
        None => {
            let bf = finite("b-field", pick(a.b_field, None, 0.0))?;
            (TwoLevelBathParams::from_b_field(gap, bf, coupling).map_err(invalid)?, json!({"b_field": bf}))
        }
    };
    let bath = bath.with_convention(conv);
    let mut v = json!({"delta_gap": gap, "coupling": coupling, "convention": convention});
    v.as_object_mut().unwrap().extend(field.as_object().unwrap().clone());
    Ok((bath, v))
}

/// B grid: explicit flags, else the preset ratio sweep, else `fallback`.
fn field_grid(
    a: &FieldSweepArgs,
    p: &Preset,
    omega: f64,
    fallback: Option<(f64, f64, usize)>,
) -> Result<Option<Vec<f64>>, CliError> {
    let ratio = p.b_over_omega_sweep.or(fallback);
    let range = match (a.b_min, a.b_max, ratio) {
        (Some(lo), Some(hi), r) => Some((lo, hi, a.points.or(r.map(|r| r.2)).unwrap_or(21))),
        (_, _, Some((lo, hi, n))) => Some((lo * omega, hi * omega, a.points.unwrap_or(n))),
        _ => None,
    };
    match range {
        None if a.points.is_some() => Err(invalid("--points needs --b-min/--b-max or a preset")),
        None => Ok(None),
        Some((lo, hi, n)) => {
            finite("b-min", lo)?;
            finite("b-max", hi)?;
            Ok(Some(linspace(lo, hi, check_points(n)?)))
        }
    }
}

fn lambda_grid(a: &LambdaSweepArgs, p: &Preset) -> Result<Vec<f64>, CliError> {
    if let Some(l) = a.lambda {
        return Ok(vec![finite("lambda", l)?]);
    }
    let (lo, hi, n) = match (a.lambda_min, a.lambda_max, p.lambda_sweep) {
        (Some(lo), Some(hi), r) => (lo, hi, a.points.or(r.map(|r| r.2)).unwrap_or(80)),
        (_, _, Some((lo, hi, n))) => (lo, hi, a.points.unwrap_or(n)),
        _ => (0.0125, 1.9875, a.points.unwrap_or(80)),
    };
    finite("lambda-min", lo)?;
    finite("lambda-max", hi)?;
    Ok(linspace(lo, hi, check_points(n)?))
}

fn ising(a: &IsingArgs, p: &Preset, lambda: f64) -> Result<(IsingBathParams, Value), CliError> {
    let n = pick(a.n_spins, p.n_spins, 100);
    let j = finite("j", pick(a.j, p.j, 1.0))?;
    let coupling = finite("coupling", pick(a.coupling, p.ising_coupling.map(|d| d * j), 5e-5 * j))?;
    let shift = pick(a.shift, None, Shift::OneSided);
    let conv = match shift {
        Shift::OneSided => ShiftConvention::OneSided,
        Shift::Symmetric => ShiftConvention::Symmetric,
    };
    let bath = IsingBathParams::new(n, j, lambda, coupling).map_err(invalid)?.with_shift(conv);
    Ok((bath, json!({"n_spins": n, "j": j, "coupling": coupling, "shift": shift})))
}

fn omega_list(flag: Option<f64>, p: &Preset) -> Result<Vec<f64>, CliError> {
    let list = match flag {
        Some(w) => vec![w],
        None => p.omega_over_j.clone().unwrap_or_else(|| vec![1.0]),
    };
    for &w in &list {
        if !(w.is_finite() && w > 0.0) {
            return Err(invalid(format!("--omega-over-j must be positive, got {w}")));
        }
    }
    Ok(list)
}

fn config(experiment: &str, preset: &Preset, parameters: Value) -> Value {
    let preset = if preset.name.is_empty() { Value::Null } else { json!(preset.name) };
    json!({"experiment": experiment, "preset": preset, "parameters": parameters})
}

fn trace_table(trace: &DecoherenceTrace) -> Table {
    let mut t = Table::new(vec!["t", "r_re", "r_im", "r_abs", "phase_unwrapped"]);
    for (i, r) in trace.r_values().iter().enumerate() {
        t.rows.push(Row::ok(vec![
            trace.times()[i].into(),
            r.re.into(),
            r.im.into(),
            trace.magnitude()[i].into(),
            trace.phase_unwrapped()[i].into(),
        ]));
    }
    t
}

pub fn trace(a: &TraceArgs, p: &Preset) -> Result<Outcome, CliError> {
    match a.bath {
        BathKind::TwoLevel => {
            let (sys, samples) = system(&a.system, p, 100.0 * PI)?;
            let (bath, bj) = two_level(&a.two_level, p, sys.omega())?;
            let cfg = config("trace", p, json!({"bath": a.bath, "system": system_json(&sys, samples), "two_level": bj}));
            let trace = decoherence_trace(&bath, &sys, samples).map_err(|e| CliError::Runtime(e.to_string()))?;
            Ok(Outcome { config: cfg, table: trace_table(&trace) })
        }
        BathKind::Ising => {
            let j = pick(a.j, p.j, 1.0);
            let default_omega = p.omega_over_j.as_ref().and_then(|l| l.first()).map_or(j, |w| w * j);
            let (sys, samples) = system(&a.system, p, default_omega)?;
            let lambda = finite("lambda", pick(a.two_level.lambda, None, 0.5))?;
            let args = IsingArgs { n_spins: a.n_spins, j: a.j, coupling: a.two_level.coupling, shift: a.shift };
            let (bath, ij) = ising(&args, p, lambda)?;
            let cfg = config(
                "trace",
                p,
                json!({"bath": a.bath, "system": system_json(&sys, samples), "ising": ij, "lambda": lambda}),
            );
            let trace = ising_trace(&bath, &sys, samples).map_err(|e| CliError::Runtime(e.to_string()))?;
            Ok(Outcome { config: cfg, table: trace_table(&trace) })
        }
    }
}

pub fn gp_curve(a: &GpCurveArgs, p: &Preset) -> Result<Outcome, CliError> {
    let (sys, samples) = system(&a.system, p, 100.0 * PI)?;
    let (bath, bj) = two_level(&a.two_level, p, sys.omega())?;
    let grid = field_grid(&a.sweep, p, sys.omega(), None)?;
    let baths: Vec<TwoLevelBathParams> = match &grid {
        Some(g) => g.iter().map(|&b| bath.with_b_field(b)).collect(),
        None => vec![bath],
    };
    let cfg = config(
        "gp-curve",
        p,
        json!({"system": system_json(&sys, samples), "two_level": bj, "b_grid": grid}),
    );
    let mut table = Table::new(vec![
        "b_field",
        "b_over_omega",
        "phi_total",
        "phi_unitary",
        "correction",
        "integral_part",
        "arctan_part",
        "eps_plus_final",
        "dphi",
    ]);
    table.rows = baths
        .par_iter()
        .map(|bath| {
            let b = bath.b_field();
            let inputs = vec![b.into(), (b / sys.omega()).into()];
            let res = decoherence_trace(bath, &sys, samples)
                .and_then(|t| geometric_phase(&t, &sys))
                .and_then(|g| gp_correction(bath, &sys, samples).map(|d| (g, d)));
            match res {
                Ok((g, d)) => {
                    let mut c = inputs;
                    c.extend([
                        g.phi_total.into(),
                        g.phi_unitary.into(),
                        g.correction.into(),
                        g.integral_part.into(),
                        g.arctan_part.into(),
                        g.eps_plus_final.into(),
                        d.into(),
                    ]);
                    Row::ok(c)
                }
                Err(e) => Row::failed(inputs, 7, e.to_string()),
            }
        })
        .collect();
    Ok(Outcome { config: cfg, table })
}

pub fn ising_sweep(a: &IsingSweepArgs, p: &Preset) -> Result<Outcome, CliError> {
    let lambdas = lambda_grid(&a.lambdas, p)?;
    let omegas = omega_list(a.omega_over_j, p)?;
    let theta = finite("theta", pick(a.theta, p.theta, PI / 4.0))?;
    let samples = check_samples(pick(a.samples, p.samples, 2048))?;
    let (base, ij) = ising(&a.ising, p, lambdas[0])?;
    let j = base.j_coupling();
    let systems = omegas
        .iter()
        .map(|&w| SystemParams::new(w * j, theta).map_err(invalid))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = config(
        "ising-sweep",
        p,
        json!({"ising": ij, "omega_over_j": omegas, "theta": theta, "samples": samples, "lambda_grid": lambdas}),
    );
    let norm = base.n_spins() as f64 * base.coupling().powi(2);
    let points: Vec<(usize, f64)> = (0..omegas.len()).flat_map(|i| lambdas.iter().map(move |&l| (i, l))).collect();
    let mut table = Table::new(vec!["omega_over_j", "lambda", "dphi_exact_norm", "dphi_second_norm", "dphi_third_norm"]);
    table.rows = points
        .par_iter()
        .map(|&(i, l)| {
            let sys = &systems[i];
            let bath = base.with_lambda(l);
            let inputs = vec![omegas[i].into(), l.into()];
            let res = ising_gp_correction(&bath, sys, samples).and_then(|e| gp_approx_ising(&bath, sys).map(|a| (e, a)));
            match res {
                Ok((e, ap)) => Row::ok(vec![
                    omegas[i].into(),
                    l.into(),
                    (e / norm).into(),
                    (ap.correction_second / norm).into(),
                    (ap.correction_third / norm).into(),
                ]),
                Err(e) => Row::failed(inputs, 3, e.to_string()),
            }
        })
        .collect();
    Ok(Outcome { config: cfg, table })
}

pub fn ising_approx(a: &IsingApproxArgs, p: &Preset) -> Result<Outcome, CliError> {
    let lambdas = lambda_grid(&a.lambdas, p)?;
    let omegas = omega_list(a.omega_over_j, p)?;
    let theta = finite("theta", pick(a.theta, p.theta, PI / 4.0))?;
    let (base, ij) = ising(&a.ising, p, lambdas[0])?;
    let j = base.j_coupling();
    let systems = omegas
        .iter()
        .map(|&w| SystemParams::new(w * j, theta).map_err(invalid))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = config(
        "ising-approx",
        p,
        json!({"ising": ij, "omega_over_j": omegas, "theta": theta, "as_stated": a.as_stated, "lambda_grid": lambdas}),
    );
    let norm = base.n_spins() as f64 * base.coupling().powi(2);
    let points: Vec<(usize, f64)> = (0..omegas.len()).flat_map(|i| lambdas.iter().map(move |&l| (i, l))).collect();
    let mut table = Table::new(vec![
        "omega_over_j",
        "lambda",
        "f2",
        "big_f2",
        "big_f3",
        "g1",
        "dphi_second_norm",
        "dphi_third_norm",
    ]);
    table.rows = points
        .par_iter()
        .map(|&(i, l)| {
            let sys = &systems[i];
            let bath = base.with_lambda(l);
            let res = if a.as_stated {
                ising_closed_forms_as_stated(&bath, sys).and_then(|c| gp_approx_ising_as_stated(&bath, sys).map(|g| (c, g)))
            } else {
                ising_closed_forms(&bath, sys).and_then(|c| gp_approx_ising(&bath, sys).map(|g| (c, g)))
            };
            match res {
                Ok((c, g)) => Row::ok(vec![
                    omegas[i].into(),
                    l.into(),
                    c.f2.into(),
                    c.big_f2.into(),
                    c.big_f3.into(),
                    c.g1.into(),
                    (g.correction_second / norm).into(),
                    (g.correction_third / norm).into(),
                ]),
                Err(e) => Row::failed(vec![omegas[i].into(), l.into()], 6, e.to_string()),
            }
        })
        .collect();
    Ok(Outcome { config: cfg, table })
}

fn decomposition(d: DecompositionArg) -> Decomposition {
    match d {
        DecompositionArg::Exact => Decomposition::Exact,
        DecompositionArg::CoarseTrotter => Decomposition::CoarseTrotter,
        DecompositionArg::PulseLevel => Decomposition::PulseLevel,
    }
}

fn zz_only(bath: &TwoLevelBathParams) -> Result<(), CliError> {
    if bath.convention() != CouplingConvention::ZzTarget {
        return Err(invalid("the protocol simulates the Z_S Z_E coupling; use --convention zz"));
    }
    Ok(())
}

pub fn trotter_check(a: &TrotterArgs, p: &Preset) -> Result<Outcome, CliError> {
    let (sys, samples) = system(&a.system, p, 100.0 * PI)?;
    let (bath, bj) = two_level(&a.two_level, p, sys.omega())?;
    zz_only(&bath)?;
    let grid = field_grid(&a.sweep, p, sys.omega(), Some((-0.2, 0.2, 21)))?.expect("fallback range");
    let threshold = pick(a.threshold, p.threshold, 0.997);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(invalid(format!("--threshold must lie in [0, 1], got {threshold}")));
    }
    let max_steps = pick(a.max_steps, p.max_steps, 512);
    if max_steps == 0 {
        return Err(invalid("--max-steps must be >= 1"));
    }
    let base = ProtocolParams::new(sys, bath, 1, Decomposition::CoarseTrotter).map_err(invalid)?;
    let cfg = config(
        "trotter-check",
        p,
        json!({
            "system": system_json(&sys, samples),
            "two_level": bj,
            "b_grid": grid,
            "threshold": threshold,
            "max_steps": max_steps,
        }),
    );
    let pulse = pulse_decompositions_check();
    let pulse_residual = pulse.max_residual_environment.max(pulse.max_residual_system);
    let steps: Vec<usize> = std::iter::successors(Some(1usize), |n| n.checked_mul(2))
        .take_while(|&n| n <= max_steps)
        .collect();
    let mut table = Table::new(vec![
        "trotter_steps",
        "min_cycle_fidelity",
        "worst_b_over_omega",
        "meets_threshold",
        "pinned",
        "pulse_identity_residual",
    ]);
    table.rows = steps
        .par_iter()
        .map(|&n| {
            let q = base.with_trotter_steps(n).expect("n >= 1");
            let fids: Result<Vec<f64>, _> = grid
                .iter()
                .map(|&b| cycle_fidelity(&q.with_bath(q.bath().with_b_field(b))))
                .collect();
            match fids {
                Ok(f) => {
                    let (i, worst) = f
                        .iter()
                        .enumerate()
                        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
                    Row::ok(vec![
                        n.into(),
                        worst.into(),
                        (grid[i] / sys.omega()).into(),
                        (worst >= threshold).into(),
                        (n == PINNED_TROTTER_STEPS).into(),
                        pulse_residual.into(),
                    ])
                }
                Err(e) => Row::failed(vec![n.into()], 5, e.to_string()),
            }
        })
        .collect();
    Ok(Outcome { config: cfg, table })
}

pub fn correction(a: &CorrectionArgs, p: &Preset) -> Result<Outcome, CliError> {
    let (sys, samples) = system(&a.system, p, 100.0 * PI)?;
    let (bath, bj) = two_level(&a.two_level, p, sys.omega())?;
    zz_only(&bath)?;
    let grid = field_grid(&a.sweep, p, sys.omega(), Some((-0.2, 0.2, 21)))?.expect("fallback range");
    let d = pick(a.decomposition, p.decomposition, DecompositionArg::CoarseTrotter);
    let n = pick(a.trotter_steps, p.trotter_steps, PINNED_TROTTER_STEPS);
    let params = ProtocolParams::new(sys, bath, n, decomposition(d)).map_err(invalid)?;
    let cfg = config(
        "correction",
        p,
        json!({
            "system": system_json(&sys, samples),
            "two_level": bj,
            "b_grid": grid,
            "decomposition": d,
            "trotter_steps": n,
        }),
    );
    let mut table = Table::new(vec!["b_over_omega", "b_field", "dphi_protocol", "dphi_theory"]);
    table.rows = correction_experiment(&params, &grid, samples)
        .into_iter()
        .map(|pt| {
            let inputs = vec![(pt.b_field / sys.omega()).into(), pt.b_field.into()];
            match (pt.protocol, pt.theory) {
                (Ok(a), Ok(b)) => {
                    let mut c = inputs;
                    c.extend([Cell::Float(a), Cell::Float(b)]);
                    Row::ok(c)
                }
                (Err(e), _) | (_, Err(e)) => Row::failed(inputs, 2, e.to_string()),
            }
        })
        .collect();
    Ok(Outcome { config: cfg, table })
}

pub fn presets_table() -> Outcome {
    let mut table = Table::new(vec!["name", "description", "parameters"]);
    for pr in crate::presets::presets() {
        let params = serde_json::to_value(&pr).expect("serializable");
        let mut params = params.as_object().cloned().unwrap_or_default();
        params.remove("name");
        params.remove("description");
        table.rows.push(Row::ok(vec![
            Cell::Text(pr.name.into()),
            Cell::Text(pr.description.into()),
            Cell::Text(Value::Object(params).to_string()),
        ]));
    }
    Outcome {
        config: json!({"experiment": "presets", "preset": null, "parameters": {}}),
        table,
    }
}
