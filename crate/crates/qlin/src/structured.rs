//! Constructors and predicates for the structured matrices of quantum
//! linear systems: the signature matrix `J`, the symplectic form `𝕁`, the
//! quadrature map `V`, doubled-up, Bogoliubov, symplectic and Hamiltonian
//! matrices.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;
pub type CVec = DVector<Complex64>;

/// Numerical equality policy: `x ≈ y` iff `|x−y| ≤ abs + rel·max(|x|,|y|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-10, rel: 1e-10 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        assert!(abs >= 0.0 && rel >= 0.0);
        Tolerance { abs, rel }
    }

    /// A uniform absolute tolerance (rel = 0).
    pub fn absolute(abs: f64) -> Self {
        Tolerance { abs, rel: 0.0 }
    }

    pub fn eq_scalar(&self, x: f64, y: f64) -> bool {
        (x - y).abs() <= self.abs + self.rel * x.abs().max(y.abs())
    }

    /// Whether a residual (already a deviation from zero) is acceptable.
    pub fn accepts(&self, residual: f64) -> bool {
        residual <= self.abs
    }
}

/// Outcome of a structural predicate: the verdict plus the max-abs deviation
/// from the exact structure.
#[derive(Debug, Clone, Copy)]
pub struct StructureCheck {
    pub ok: bool,
    pub residual: f64,
}

impl StructureCheck {
    fn from_residual(residual: f64, tol: &Tolerance) -> Self {
        StructureCheck { ok: tol.accepts(residual), residual }
    }
}

/// Max-abs entry of a complex matrix (0 for empty matrices).
pub fn max_abs(x: &CMat) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max-abs entry of a real matrix (0 for empty matrices).
pub fn max_abs_real(x: &RMat) -> f64 {
    x.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

pub fn to_complex(x: &RMat) -> CMat {
    x.map(|v| Complex64::new(v, 0.0))
}

/// Real part of a complex matrix, failing if any imaginary part exceeds
/// `guard`. Used to realify block products that must be real by structure.
pub fn try_real(x: &CMat, guard: f64) -> Result<RMat> {
    let max_im = x.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if max_im > guard {
        return Err(Error::ImaginaryResidue { residual: max_im });
    }
    Ok(x.map(|z| z.re))
}

/// `J_k = diag(I_k, −I_k)`.
pub fn make_j(k: usize) -> CMat {
    let mut j = CMat::zeros(2 * k, 2 * k);
    for i in 0..k {
        j[(i, i)] = Complex64::new(1.0, 0.0);
        j[(k + i, k + i)] = Complex64::new(-1.0, 0.0);
    }
    j
}

/// `𝕁_k = [[0, I_k], [−I_k, 0]]`.
pub fn make_symp_j(k: usize) -> CMat {
    to_complex(&make_symp_j_real(k))
}

/// Real-valued `𝕁_k`.
pub fn make_symp_j_real(k: usize) -> RMat {
    let mut j = RMat::zeros(2 * k, 2 * k);
    for i in 0..k {
        j[(i, k + i)] = 1.0;
        j[(k + i, i)] = -1.0;
    }
    j
}

/// Block-diagonal `diag(𝕁_{d1}, …, 𝕁_{dk})`.
pub fn blockwise_symp_j(dims: &[usize]) -> RMat {
    let total: usize = dims.iter().map(|d| 2 * d).sum();
    let mut j = RMat::zeros(total, total);
    let mut off = 0;
    for &d in dims {
        j.view_mut((off, off), (2 * d, 2 * d))
            .copy_from(&make_symp_j_real(d));
        off += 2 * d;
    }
    j
}

/// `V_k = (1/√2) [[I_k, I_k], [−iI_k, iI_k]]`, the unitary map from
/// annihilation/creation pairs to quadratures.
pub fn make_v(k: usize) -> CMat {
    let s = 1.0 / 2.0_f64.sqrt();
    let mut v = CMat::zeros(2 * k, 2 * k);
    for i in 0..k {
        v[(i, i)] = Complex64::new(s, 0.0);
        v[(i, k + i)] = Complex64::new(s, 0.0);
        v[(k + i, i)] = Complex64::new(0.0, -s);
        v[(k + i, k + i)] = Complex64::new(0.0, s);
    }
    v
}

fn even_halves(x: &CMat) -> Result<(usize, usize)> {
    if !x.nrows().is_multiple_of(2) || !x.ncols().is_multiple_of(2) {
        return Err(Error::OddDimension { rows: x.nrows(), cols: x.ncols() });
    }
    Ok((x.nrows() / 2, x.ncols() / 2))
}

/// The ♭-adjoint `X♭ = J_r X† J_k` of a `2k×2r` matrix.
pub fn flat_adjoint(x: &CMat) -> Result<CMat> {
    let (k, r) = even_halves(x)?;
    Ok(make_j(r) * x.adjoint() * make_j(k))
}

/// Whether `X` is doubled-up, i.e. of the form `Δ(U, V) = [[U, V], [V#, U#]]`.
pub fn is_doubled_up(x: &CMat, tol: &Tolerance) -> Result<StructureCheck> {
    let (k, r) = even_halves(x)?;
    let mut residual = 0.0_f64;
    for i in 0..k {
        for j in 0..2 * r {
            let upper = x[(i, j)];
            let jj = if j < r { j + r } else { j - r };
            let lower = x[(k + i, jj)];
            residual = residual.max((lower - upper.conj()).norm());
        }
    }
    Ok(StructureCheck::from_residual(residual, tol))
}

/// Whether `T` is Bogoliubov: doubled-up with `T T♭ = T♭ T = I`.
pub fn is_bogoliubov(t: &CMat, tol: &Tolerance) -> Result<StructureCheck> {
    if t.nrows() != t.ncols() {
        return Err(Error::NotSquare { rows: t.nrows(), cols: t.ncols() });
    }
    let du = is_doubled_up(t, tol)?;
    let flat = flat_adjoint(t)?;
    let eye = CMat::identity(t.nrows(), t.ncols());
    let r1 = max_abs(&(t * &flat - &eye));
    let r2 = max_abs(&(&flat * t - &eye));
    let residual = du.residual.max(r1).max(r2);
    Ok(StructureCheck::from_residual(residual, tol))
}

/// Whether `S` is symplectic: `S 𝕁 S† = S† 𝕁 S = 𝕁`.
pub fn is_symplectic(s: &CMat, tol: &Tolerance) -> Result<StructureCheck> {
    if s.nrows() != s.ncols() {
        return Err(Error::NotSquare { rows: s.nrows(), cols: s.ncols() });
    }
    let (k, _) = even_halves(s)?;
    let j = make_symp_j(k);
    let r1 = max_abs(&(s * &j * s.adjoint() - &j));
    let r2 = max_abs(&(s.adjoint() * &j * s - &j));
    Ok(StructureCheck::from_residual(r1.max(r2), tol))
}

/// Whether a real `P` maps the block-symplectic form of `source_dims` to the
/// one of `target_dims`: `P·diag(𝕁_{d1},…)·Pᵀ = diag(𝕁_{d1'},…)`.
pub fn is_blockwise_symplectic(
    p: &RMat,
    source_dims: &[usize],
    target_dims: &[usize],
    tol: &Tolerance,
) -> Result<StructureCheck> {
    let src: usize = source_dims.iter().map(|d| 2 * d).sum();
    let tgt: usize = target_dims.iter().map(|d| 2 * d).sum();
    if p.nrows() != tgt || p.ncols() != src {
        return Err(Error::ShapeMismatch {
            context: "blockwise symplectic check",
            expected: (tgt, src),
            got: (p.nrows(), p.ncols()),
        });
    }
    let lhs = p * blockwise_symp_j(source_dims) * p.transpose();
    let residual = max_abs_real(&(lhs - blockwise_symp_j(target_dims)));
    Ok(StructureCheck::from_residual(residual, tol))
}

/// Whether a real even-sized `N` is a Hamiltonian matrix, i.e. `𝕁_d N` is
/// symmetric. Such matrices have spectra closed under `λ ↦ −λ` and `λ ↦ λ*`.
pub fn is_hamiltonian_matrix(n: &RMat, tol: &Tolerance) -> Result<StructureCheck> {
    if n.nrows() != n.ncols() {
        return Err(Error::NotSquare { rows: n.nrows(), cols: n.ncols() });
    }
    if !n.nrows().is_multiple_of(2) {
        return Err(Error::OddDimension { rows: n.nrows(), cols: n.ncols() });
    }
    let jn = make_symp_j_real(n.nrows() / 2) * n;
    let residual = max_abs_real(&(&jn - jn.transpose()));
    Ok(StructureCheck::from_residual(residual, tol))
}
