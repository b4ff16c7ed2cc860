//! Dense complex linear algebra for qubit-sized problems.
//!
//! Matrices are square, row-major and small: 2×2 and 4×4 on the hot paths,
//! up to 2^11 for the many-body oracles. Hermitian exponentials go through a
//! real-eigenvalue decomposition (closed form for 2×2, cyclic Jacobi
//! otherwise) so propagators stay unitary to machine precision.
//!
//! Basis convention: `Z|0> = +|0>`, `Z|1> = -|1>`. Composite indices are
//! ordered `system ⊗ environment`, i.e. `index = i_sys * dim_env + i_env`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);
const CI: Complex64 = Complex64::new(0.0, 1.0);

/// Largest dimension accepted anywhere in the crate (11 qubits).
pub const MAX_DIM: usize = 1 << 11;

/// Tolerance used when a caller flags a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || !dim.is_power_of_two() || dim > MAX_DIM {
        return Err(Error::DimensionMismatch(format!(
            "dimension {dim} is not a power of two in [1, {MAX_DIM}]"
        )));
    }
    Ok(())
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C1;
        }
        m
    }

    /// Builds a matrix from row-major entries. Rejects non-finite values.
    pub fn from_row_major(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        check_dim(dim)?;
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(Self { dim, data })
    }

    /// Row-major 2×2 constructor used for Pauli-type literals.
    pub fn from_2x2(
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
    ) -> Self {
        Self {
            dim: 2,
            data: vec![a, b, c, d],
        }
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// `max |M_ij - M_ji^*|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() < tol
    }

    /// Entrywise max-norm `max |M_ij|`.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |A_ij - B_ij|`; panics on mismatched dimensions.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch in max_abs_diff");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |U^dag U - I|`.
    pub fn unitarity_residual(&self) -> f64 {
        let p = &self.adjoint() * self;
        p.max_abs_diff(&Self::identity(self.dim))
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        assert_eq!(self.dim, v.dim(), "dimension mismatch in apply");
        let n = self.dim;
        let amps = (0..n)
            .map(|i| {
                let row = &self.data[i * n..(i + 1) * n];
                row.iter().zip(&v.amps).map(|(a, b)| a * b).sum()
            })
            .collect();
        StateVector { amps }
    }

    /// `<u| M |v>`.
    pub fn expectation(&self, v: &StateVector) -> Complex64 {
        v.inner(&self.apply(v))
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix product");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C0 {
                    continue;
                }
                let rrow = &rhs.data[k * n..(k + 1) * n];
                let orow = &mut out.data[i * n..(i + 1) * n];
                for (o, b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix sum");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix difference");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Pauli and identity literals.
pub mod pauli {
    use super::*;

    pub fn i2() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_2x2(C0, C1, C1, C0)
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_2x2(C0, -CI, CI, C0)
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_2x2(C1, C0, C0, -C1)
    }
}

/// Normalized complex state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Accepts amplitudes that are already normalized to 1e-12.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let v = Self { amps };
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "state vector norm {norm} differs from 1"
            )));
        }
        Ok(v)
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter(
                "cannot normalize a zero or non-finite vector".into(),
            ));
        }
        Ok(Self {
            amps: amps.into_iter().map(|z| z / norm).collect(),
        })
    }

    /// Computational basis state `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amps = vec![C0; dim];
        amps[index] = C1;
        Self { amps }
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::normalized(amps.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in inner product");
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn kron(&self, other: &Self) -> Self {
        let amps = self
            .amps
            .iter()
            .flat_map(|&a| other.amps.iter().map(move |&b| a * b))
            .collect();
        Self { amps }
    }

    /// Density matrix `|psi><psi|`.
    pub fn projector(&self) -> ComplexMatrix {
        let n = self.dim();
        let mut m = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.amps[i] * self.amps[j].conj();
            }
        }
        m
    }

    /// Multiplies by a global phase `e^{i chi}`.
    pub fn with_phase(&self, chi: f64) -> Self {
        let p = Complex64::from_polar(1.0, chi);
        Self {
            amps: self.amps.iter().map(|&z| z * p).collect(),
        }
    }

    /// Fixes the global phase so the first component with magnitude above
    /// `1e-12` is real and positive.
    pub fn canonical_phase(mut self) -> Self {
        if let Some(z) = self.amps.iter().find(|z| z.norm() > 1e-12).copied() {
            let p = z.conj() / z.norm();
            for a in &mut self.amps {
                *a *= p;
            }
        }
        self
    }
}

/// Tensor product `A ⊗ B`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (na, nb) = (a.dim(), b.dim());
    let n = na * nb;
    check_dim(n)?;
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..na {
        for j in 0..na {
            let aij = a[(i, j)];
            for k in 0..nb {
                for l in 0..nb {
                    out[(i * nb + k, j * nb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Spectral decomposition `H = V diag(values) V^dag` with ascending values.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns.
    pub vectors: ComplexMatrix,
}

impl Eigh {
    pub fn vector(&self, k: usize) -> StateVector {
        StateVector {
            amps: self.vectors.column(k),
        }
    }

    /// `e^{-i H t}` from the stored decomposition.
    pub fn propagator(&self, t: f64) -> ComplexMatrix {
        let n = self.values.len();
        let phases: Vec<Complex64> = self
            .values
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -e * t))
            .collect();
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = C0;
                for k in 0..n {
                    acc += v[(i, k)] * phases[k] * v[(j, k)].conj();
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// `e^{-i H t} |psi>` without forming the propagator.
    pub fn evolve(&self, psi: &StateVector, t: f64) -> StateVector {
        let n = self.values.len();
        let v = &self.vectors;
        let mut coeff = vec![C0; n];
        for (k, c) in coeff.iter_mut().enumerate() {
            let mut acc = C0;
            for i in 0..n {
                acc += v[(i, k)].conj() * psi.amps[i];
            }
            *c = acc * Complex64::from_polar(1.0, -self.values[k] * t);
        }
        let amps = (0..n)
            .map(|i| (0..n).map(|k| v[(i, k)] * coeff[k]).sum())
            .collect();
        StateVector { amps }
    }
}

fn require_hermitian(h: &ComplexMatrix) -> Result<()> {
    let residual = h.hermiticity_residual();
    // Scale-aware: large-norm Hamiltonians (rad/s units) carry absolute
    // rounding proportional to their entries.
    let tol = HERMITIAN_TOL * h.max_norm().max(1.0);
    if residual >= tol {
        return Err(Error::NonHermitianInput { residual });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix.
///
/// 2×2 inputs use the closed form, larger ones cyclic complex Jacobi.
/// Eigenvectors carry the canonical phase (first nonzero component real and
/// positive).
pub fn eigh(h: &ComplexMatrix) -> Result<Eigh> {
    require_hermitian(h)?;
    if h.dim() == 2 {
        let (vals, vecs) = eigh_2x2_unchecked(h);
        let mut vectors = ComplexMatrix::zeros(2);
        for (k, v) in vecs.iter().enumerate() {
            for i in 0..2 {
                vectors[(i, k)] = v.amps[i];
            }
        }
        return Ok(Eigh {
            values: vals.to_vec(),
            vectors,
        });
    }
    Ok(jacobi_eigh(h))
}

/// Closed-form eigensystem of a 2×2 Hermitian matrix, ascending eigenvalues.
pub fn eigh_2x2(h: &ComplexMatrix) -> Result<([f64; 2], [StateVector; 2])> {
    if h.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "eigh_2x2 expects a 2x2 matrix, got {0}x{0}",
            h.dim()
        )));
    }
    require_hermitian(h)?;
    Ok(eigh_2x2_unchecked(h))
}

fn eigh_2x2_unchecked(h: &ComplexMatrix) -> ([f64; 2], [StateVector; 2]) {
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    // Average the off-diagonal pair so tiny anti-Hermitian noise is ignored.
    let b = 0.5 * (h[(0, 1)] + h[(1, 0)].conj());
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let radius = half.hypot(b.norm());
    let vals = [mean - radius, mean + radius];
    let scale = a.abs().max(d.abs()).max(b.norm());
    if b.norm() <= 1e-15 * scale.max(f64::MIN_POSITIVE) {
        // Diagonal (or degenerate): basis vectors, ordered by eigenvalue.
        let (lo, hi) = if a <= d { (0, 1) } else { (1, 0) };
        return (vals, [StateVector::basis(2, lo), StateVector::basis(2, hi)]);
    }
    let vec_for = |lambda: f64| {
        // (H - lambda) v = 0 has two equivalent null vectors; use the larger.
        let u = [b, Complex64::new(lambda - a, 0.0)];
        let w = [Complex64::new(lambda - d, 0.0), b.conj()];
        let nu = u[0].norm_sqr() + u[1].norm_sqr();
        let nw = w[0].norm_sqr() + w[1].norm_sqr();
        let pick = if nu >= nw { u } else { w };
        StateVector::normalized(pick.to_vec())
            .expect("nonzero null vector")
            .canonical_phase()
    };
    (vals, [vec_for(vals[0]), vec_for(vals[1])])
}

fn jacobi_eigh(h: &ComplexMatrix) -> Eigh {
    let n = h.dim();
    let mut a = h.clone();
    // Symmetrize to remove tiny anti-Hermitian noise.
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in i + 1..n {
            let z = 0.5 * (a[(i, j)] + a[(j, i)].conj());
            a[(i, j)] = z;
            a[(j, i)] = z.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let frob: f64 = a.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let tiny = 1e-15 * frob.max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= tiny {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let m = apq.norm();
                if m <= 1e-3 * tiny {
                    continue;
                }
                let phase = apq / m;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = 0.5 * (2.0 * m).atan2(aqq - app);
                let (s, c) = theta.sin_cos();
                // A <- A G with G = D R, D = diag(1, e^{-i phi}) on (p, q).
                let sp = phase.conj() * s;
                let cp = phase.conj() * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * sp;
                    a[(k, q)] = akp * s + akq * cp;
                }
                // A <- G^dag A.
                let sp_c = phase * s;
                let cp_c = phase * c;
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * sp_c;
                    a[(q, k)] = apk * s + aqk * cp_c;
                }
                a[(p, q)] = C0;
                a[(q, p)] = C0;
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * sp;
                    v[(k, q)] = vkp * s + vkq * cp;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        let sv = StateVector {
            amps: v.column(src),
        }
        .canonical_phase();
        for i in 0..n {
            vectors[(i, col)] = sv.amps[i];
        }
    }
    Eigh { values, vectors }
}

/// `U = e^{-i H t}` for Hermitian `H`.
pub fn expm_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time {t} is not finite")));
    }
    check_dim(h.dim())?;
    require_hermitian(h)?;
    if h.dim() == 2 {
        return Ok(expm_2x2(h, t));
    }
    Ok(jacobi_eigh(h).propagator(t))
}

/// `e^{-iHt}` for `H = a0 I + a·σ`: `e^{-i a0 t}[cos(|a|t) - i sin(|a|t) â·σ]`.
fn expm_2x2(h: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let a0 = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
    let az = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
    let off = 0.5 * (h[(0, 1)] + h[(1, 0)].conj());
    let (ax, ay) = (off.re, -off.im);
    let norm = (ax * ax + ay * ay + az * az).sqrt();
    let (s, c) = (norm * t).sin_cos();
    // sin(|a| t)/|a| stays finite as |a| -> 0.
    let sinc_t = if norm * t.abs() < 1e-8 {
        t * (1.0 - (norm * t).powi(2) / 6.0)
    } else {
        s / norm
    };
    let g = Complex64::from_polar(1.0, -a0 * t);
    let mi = -CI * sinc_t;
    let u00 = Complex64::new(c, 0.0) + mi * az;
    let u11 = Complex64::new(c, 0.0) - mi * az;
    let u01 = mi * Complex64::new(ax, -ay);
    let u10 = mi * Complex64::new(ax, ay);
    ComplexMatrix::from_2x2(u00 * g, u01 * g, u10 * g, u11 * g)
}

/// Traces out the environment qubit of a `system ⊗ environment` 4×4 state.
pub fn partial_trace_env(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "partial_trace_env expects 4x4, got {0}x{0}",
            rho.dim()
        )));
    }
    validate_density(rho, 1e-10)?;
    Ok(partial_trace_env_unchecked(rho))
}

pub(crate) fn partial_trace_env_unchecked(rho: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(2);
    for i in 0..2 {
        for j in 0..2 {
            out[(i, j)] = rho[(2 * i, 2 * j)] + rho[(2 * i + 1, 2 * j + 1)];
        }
    }
    out
}

/// Hermitian, unit trace and positive semidefinite within `tol`.
pub fn validate_density(rho: &ComplexMatrix, tol: f64) -> Result<()> {
    let herm = rho.hermiticity_residual();
    if herm > tol {
        return Err(Error::InvalidDensityMatrix(format!(
            "not Hermitian (residual {herm:e})"
        )));
    }
    let tr = rho.trace();
    if (tr - C1).norm() > tol {
        return Err(Error::InvalidDensityMatrix(format!(
            "trace {tr} differs from 1"
        )));
    }
    let min_eig = eigh(rho)
        .map_err(|e| Error::InvalidDensityMatrix(e.to_string()))?
        .values[0];
    if min_eig < -tol {
        return Err(Error::InvalidDensityMatrix(format!(
            "negative eigenvalue {min_eig:e}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = c(rng.gen_range(-1.0..1.0), 0.0);
            for j in i + 1..dim {
                let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    /// Scaling-and-squaring Taylor exponential of `-iHt`; independent of
    /// the eigendecomposition path.
    fn expm_taylor(h: &ComplexMatrix, t: f64) -> ComplexMatrix {
        let a = h.scale(c(0.0, -t));
        let norm = a.max_norm() * a.dim() as f64;
        let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
        let a = a.scale_real(0.5_f64.powi(squarings));
        let mut term = ComplexMatrix::identity(a.dim());
        let mut sum = term.clone();
        for k in 1..30 {
            term = (&term * &a).scale_real(1.0 / k as f64);
            sum = &sum + &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn zero_generator_gives_identity() {
        let u = expm_hermitian(&ComplexMatrix::zeros(4), 3.7).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn pauli_z_quarter_turn() {
        let u = expm_hermitian(&pauli::z(), PI / 2.0).unwrap();
        let expected =
            ComplexMatrix::from_diagonal(&[c(0.0, -1.0), c(0.0, 1.0)]);
        assert!(u.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn expm_matches_taylor_oracle() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for dim in [2, 4, 8] {
            for _ in 0..5 {
                let h = random_hermitian(dim, &mut rng);
                let u = expm_hermitian(&h, 0.37).unwrap();
                let o = expm_taylor(&h, 0.37);
                assert!(u.max_abs_diff(&o) < 1e-10, "dim {dim}");
                assert!(u.unitarity_residual() < 1e-12);
            }
        }
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        let mut m = pauli::x();
        m[(0, 1)] = c(2.0, 0.0);
        assert!(matches!(
            expm_hermitian(&m, 1.0),
            Err(Error::NonHermitianInput { .. })
        ));
        assert!(matches!(
            expm_hermitian(&ComplexMatrix::zeros(3), 1.0),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn kron_identities() {
        let i4 = kron(&pauli::i2(), &pauli::i2()).unwrap();
        assert_eq!(i4, ComplexMatrix::identity(4));
        let zz = kron(&pauli::z(), &pauli::z()).unwrap();
        assert_eq!(zz, ComplexMatrix::from_real_diagonal(&[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn kron_index_formula() {
        let (a, b) = (pauli::x(), pauli::z());
        let k = kron(&a, &b).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        assert_eq!(k[(i * 2 + p, j * 2 + q)], a[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
    }

    #[test]
    fn kron_rejects_oversized_product() {
        let big = ComplexMatrix::identity(MAX_DIM);
        assert!(matches!(
            kron(&big, &pauli::i2()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn partial_trace_product_and_bell() {
        let zero = StateVector::basis(2, 0);
        let rho = zero.kron(&zero).projector();
        let red = partial_trace_env(&rho).unwrap();
        assert_eq!(red, zero.projector());

        let bell = StateVector::from_real(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        let red = partial_trace_env(&bell.projector()).unwrap();
        assert!(red.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_recovers_dephased_coherence() {
        // Branch states with a known overlap r reproduce the dephased qubit.
        let theta: f64 = 0.9;
        let (omega, t) = (2.3, 0.41);
        let e0 = StateVector::from_real(&[0.6, 0.8]).unwrap();
        let e1 = StateVector::normalized(vec![c(0.3, 0.4), c(-0.5, 0.7)]).unwrap();
        let r = e1.inner(&e0);
        let s = (theta / 2.0).sin() * Complex64::from_polar(1.0, -omega * t);
        let co = (theta / 2.0).cos() * Complex64::from_polar(1.0, omega * t);
        let amps: Vec<Complex64> = e0
            .amplitudes()
            .iter()
            .map(|&a| s * a)
            .chain(e1.amplitudes().iter().map(|&a| co * a))
            .collect();
        let psi = StateVector::new(amps).unwrap();
        let red = partial_trace_env(&psi.projector()).unwrap();
        let expected = theta.sin() / 2.0 * Complex64::from_polar(1.0, -2.0 * omega * t) * r;
        assert!((red[(0, 1)] - expected).norm() < 1e-12);
        assert!((red[(0, 0)].re - (theta / 2.0).sin().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_states() {
        let mut rho = ComplexMatrix::identity(4).scale_real(0.5);
        assert!(matches!(
            partial_trace_env(&rho),
            Err(Error::InvalidDensityMatrix(_))
        ));
        rho = ComplexMatrix::from_real_diagonal(&[1.5, -0.5, 0.0, 0.0]);
        assert!(matches!(
            partial_trace_env(&rho),
            Err(Error::InvalidDensityMatrix(_))
        ));
    }

    #[test]
    fn eigh_2x2_cases() {
        let (vals, vecs) = eigh_2x2(&pauli::z()).unwrap();
        assert_eq!(vals, [-1.0, 1.0]);
        assert_eq!(vecs[0], StateVector::basis(2, 1));
        assert_eq!(vecs[1], StateVector::basis(2, 0));

        let (b, d) = (0.7, -1.3);
        let h = &pauli::z().scale_real(b) + &pauli::x().scale_real(d);
        let (vals, vecs) = eigh_2x2(&h).unwrap();
        let e = b.hypot(d);
        assert!((vals[0] + e).abs() < 1e-14 && (vals[1] - e).abs() < 1e-14);
        for k in 0..2 {
            let hv = h.apply(&vecs[k]);
            for i in 0..2 {
                assert!((hv.amplitudes()[i] - vals[k] * vecs[k].amplitudes()[i]).norm() < 1e-12);
            }
            assert!(vecs[k].amplitudes()[0].im == 0.0);
        }
        assert!(vecs[0].inner(&vecs[1]).norm() < 1e-14);

        let (vals, vecs) = eigh_2x2(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(vals, [1.0, 1.0]);
        assert!(vecs[0].inner(&vecs[1]).norm() < 1e-14);
    }

    #[test]
    fn jacobi_residuals() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for dim in [4, 16, 64] {
            let h = random_hermitian(dim, &mut rng);
            let e = eigh(&h).unwrap();
            for k in 0..dim {
                let v = e.vector(k);
                let hv = h.apply(&v);
                let res = hv
                    .amplitudes()
                    .iter()
                    .zip(v.amplitudes())
                    .map(|(a, b)| (a - e.values[k] * b).norm())
                    .fold(0.0, f64::max);
                assert!(res < 1e-11, "dim {dim} k {k} residual {res}");
            }
            assert!(e.vectors.unitarity_residual() < 1e-12);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn evolve_matches_propagator() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let h = random_hermitian(8, &mut rng);
        let e = eigh(&h).unwrap();
        let psi = StateVector::basis(8, 5);
        let a = e.evolve(&psi, 1.7);
        let b = e.propagator(1.7).apply(&psi);
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn hermitian4() -> impl Strategy<Value = ComplexMatrix> {
            proptest::collection::vec(-2.0..2.0f64, 16).prop_map(|x| {
                let mut m = ComplexMatrix::zeros(4);
                let mut it = x.into_iter();
                for i in 0..4 {
                    m[(i, i)] = c(it.next().unwrap(), 0.0);
                }
                for i in 0..4 {
                    for j in i + 1..4 {
                        let z = c(it.next().unwrap(), it.next().unwrap());
                        m[(i, j)] = z;
                        m[(j, i)] = z.conj();
                    }
                }
                m
            })
        }

        fn qubit_matrix() -> impl Strategy<Value = ComplexMatrix> {
            proptest::collection::vec(-1.0..1.0f64, 8).prop_map(|x| {
                ComplexMatrix::from_row_major(
                    2,
                    x.chunks(2).map(|p| c(p[0], p[1])).collect(),
                )
                .unwrap()
            })
        }

        proptest! {
            #[test]
            fn group_property(h in hermitian4(), s in -3.0..3.0f64, t in -3.0..3.0f64) {
                let lhs = expm_hermitian(&h, s + t).unwrap();
                let rhs = &expm_hermitian(&h, s).unwrap() * &expm_hermitian(&h, t).unwrap();
                prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
            }

            #[test]
            fn propagators_preserve_norm(h in hermitian4(), t in -10.0..10.0f64, idx in 0usize..4) {
                let u = expm_hermitian(&h, t).unwrap();
                let psi = u.apply(&StateVector::basis(4, idx));
                prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
            }

            #[test]
            fn partial_trace_of_product(a in qubit_matrix(), b in qubit_matrix()) {
                let k = kron(&a, &b).unwrap();
                let lhs = partial_trace_env_unchecked(&k);
                let rhs = a.scale(b.trace());
                prop_assert!(lhs.max_abs_diff(&rhs) < 1e-14);
            }
        }
    }
}
