//! Environment models and their decoherence factors.

pub mod ising;
pub mod two_level;

use num_complex::Complex64;

/// `⟨g| e^{+iH₋t} e^{-iH₊t} |g⟩` for two-level generators `H± = e± (n±·σ)`
/// and a state with Bloch vector `m`, all vectors lying in the x–z plane
/// (stored as `[x, z]`).
///
/// Uses `e^{-iHt} = cos(et) − i sin(et) n·σ`; the cross-product term is along
/// y and drops out against `m`.
pub(crate) fn planar_branch_overlap(
    e_minus: f64,
    n_minus: [f64; 2],
    e_plus: f64,
    n_plus: [f64; 2],
    m: [f64; 2],
    t: f64,
) -> Complex64 {
    let (sm, cm) = (e_minus * t).sin_cos();
    let (sp, cp) = (e_plus * t).sin_cos();
    let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
    Complex64::new(
        cm * cp + sm * sp * dot(n_minus, n_plus),
        sm * cp * dot(n_minus, m) - cm * sp * dot(n_plus, m),
    )
}
