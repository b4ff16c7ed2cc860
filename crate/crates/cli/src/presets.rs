//! Named parameter sets. Two-level quantities are stored as ratios of Ω so
//! that overriding `--omega` rescales the whole experiment.

use std::f64::consts::PI;

use serde::Serialize;

use crate::args::{DecompositionArg, PresetName};
use gphase_core::protocol::PINNED_TROTTER_STEPS;

#[derive(Debug, Clone, Default, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_gap_over_omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_over_omega: Option<f64>,
    /// `(min, max, points)` for B/Ω.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_over_omega_sweep: Option<(f64, f64, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trotter_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_spins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    /// Ising coupling δ in units of J.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ising_coupling: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_over_j: Option<Vec<f64>>,
    /// `(min, max, points)` for λ.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_sweep: Option<(f64, f64, usize)>,
}

/// Every built-in preset, in a fixed order.
pub fn presets() -> Vec<Preset> {
    [PresetName::PaperFig1c, PresetName::PaperFigA, PresetName::TrotterClaim]
        .into_iter()
        .map(preset)
        .collect()
}

pub fn preset(name: PresetName) -> Preset {
    match name {
        // Ω = 100π is taken as an angular frequency (τ = 0.02).
        PresetName::PaperFig1c => Preset {
            name: "paper-fig1c",
            description: "two-level bath, theta = pi/4, B over [-0.2, 0.2] Omega",
            omega: Some(100.0 * PI),
            theta: Some(PI / 4.0),
            samples: Some(256),
            delta_gap_over_omega: Some(0.02),
            coupling_over_omega: Some(0.1),
            b_over_omega_sweep: Some((-0.2, 0.2, 21)),
            decomposition: Some(DecompositionArg::CoarseTrotter),
            trotter_steps: Some(PINNED_TROTTER_STEPS),
            ..Preset::default()
        },
        // 80 cell midpoints of [0, 2]: λ = 1 and λ = 0 are never sampled.
        PresetName::PaperFigA => Preset {
            name: "paper-figA",
            description: "Ising chain N = 100, delta = 5e-5 J, Omega/J in {1, 2, 5, 10}, lambda over (0, 2)",
            theta: Some(PI / 4.0),
            samples: Some(2048),
            n_spins: Some(100),
            j: Some(1.0),
            ising_coupling: Some(5e-5),
            omega_over_j: Some(vec![1.0, 2.0, 5.0, 10.0]),
            lambda_sweep: Some((0.0125, 1.9875, 80)),
            ..Preset::default()
        },
        PresetName::TrotterClaim => Preset {
            name: "trotter-claim",
            description: "cycle fidelity >= 0.997 for B over [-0.2, 0.2] Omega",
            omega: Some(100.0 * PI),
            theta: Some(PI / 4.0),
            samples: Some(64),
            delta_gap_over_omega: Some(0.02),
            coupling_over_omega: Some(0.1),
            b_over_omega_sweep: Some((-0.2, 0.2, 21)),
            decomposition: Some(DecompositionArg::CoarseTrotter),
            threshold: Some(0.997),
            max_steps: Some(512),
            ..Preset::default()
        },
    }
}
