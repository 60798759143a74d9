//! Physical-realizability checks in all three representations, and recovery
//! of the Hamiltonian matrix `Ω` from the annihilation-form drift `𝒜`.

use crate::model::{AnnihilationForm, KalmanForm, QuadratureSystem};
use crate::structured::{
    blockwise_symp_j, flat_adjoint, make_j, make_symp_j_real, max_abs, max_abs_real, to_complex,
    CMat, Tolerance,
};
use crate::{Error, Result};
use num_complex::Complex64;

/// Verdict of a physical-realizability check with per-constraint residuals.
#[derive(Debug, Clone)]
pub struct PrReport {
    pub passed: bool,
    /// Residual of the drift constraint (`𝒜+𝒜♭+ℬℬ♭` or its quadrature analogue).
    pub residual_constraint1: f64,
    /// Residual of the gain constraint (`ℬ+𝒞♭` or its quadrature analogue).
    pub residual_constraint2: f64,
    /// Named per-block residuals for the blockwise check.
    pub block_residuals: Vec<(String, f64)>,
}

impl PrReport {
    fn two(r1: f64, r2: f64, tol: &Tolerance) -> Self {
        PrReport {
            passed: tol.accepts(r1) && tol.accepts(r2),
            residual_constraint1: r1,
            residual_constraint2: r2,
            block_residuals: Vec::new(),
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.block_residuals
            .iter()
            .map(|(_, r)| *r)
            .fold(self.residual_constraint1.max(self.residual_constraint2), f64::max)
    }
}

/// Checks `𝒜 + 𝒜♭ + ℬℬ♭ = 0` and `ℬ = −𝒞♭`.
pub fn check_pr_annihilation(s: &AnnihilationForm, tol: &Tolerance) -> Result<PrReport> {
    let a_flat = flat_adjoint(&s.a)?;
    let b_flat = flat_adjoint(&s.b)?;
    let c_flat = flat_adjoint(&s.c)?;
    let r1 = max_abs(&(&s.a + a_flat + &s.b * b_flat));
    let r2 = max_abs(&(&s.b + c_flat));
    Ok(PrReport::two(r1, r2, tol))
}

/// Recovers `Ω = (i/2)(J_n 𝒜 − 𝒜† J_n)` from a physically realizable system.
/// The result is Hermitian and doubled-up.
pub fn recover_omega(s: &AnnihilationForm, tol: &Tolerance) -> Result<CMat> {
    let report = check_pr_annihilation(s, tol)?;
    if !report.passed {
        return Err(Error::PrViolation { residual: report.max_residual() });
    }
    let j = make_j(s.n);
    let half_i = Complex64::new(0.0, 0.5);
    Ok((&j * &s.a - s.a.adjoint() * &j) * half_i)
}

/// Builds `(𝒜, ℬ, 𝒞)` from the physical parameters `Ω` (Hermitian,
/// doubled-up) and `𝒞` (doubled-up): `ℬ = −𝒞♭`, `𝒜 = −iJΩ − 𝒞♭𝒞/2`.
pub fn build_annihilation(n: usize, m: usize, omega: &CMat, c: &CMat) -> Result<AnnihilationForm> {
    let c_flat = flat_adjoint(c)?;
    let b = -&c_flat;
    let a = make_j(n) * omega * Complex64::new(0.0, -1.0) - c_flat * c * Complex64::new(0.5, 0.0);
    AnnihilationForm::new(n, m, a, b, c.clone())
}

/// Checks the quadrature-form realizability conditions
/// `Ā𝕁̄ + 𝕁̄Āᵀ + B̄𝕁_m B̄ᵀ = 0` and `B̄ = 𝕁̄ C̄ᵀ 𝕁_m` with
/// `𝕁̄ = diag(𝕁_{n3}, 𝕁_{n1}, 𝕁_{n2})`.
pub fn check_pr_quadrature(
    q: &QuadratureSystem,
    dims: crate::model::BlockDims,
    tol: &Tolerance,
) -> Result<PrReport> {
    if dims.n() != q.n || dims.m != q.m {
        return Err(Error::ShapeMismatch {
            context: "quadrature PR dims",
            expected: (q.n, q.m),
            got: (dims.n(), dims.m),
        });
    }
    let jbar = blockwise_symp_j(&[dims.n3(), dims.n1, dims.n2]);
    let jm = make_symp_j_real(dims.m);
    let r1 = max_abs_real(&(&q.a * &jbar + &jbar * q.a.transpose() + &q.b * &jm * q.b.transpose()));
    let r2 = max_abs_real(&(&q.b - &jbar * q.c.transpose() * &jm));
    Ok(PrReport::two(r1, r2, tol))
}

/// Checks the eight blockwise realizability conditions of the Kalman form,
/// one residual per condition.
pub fn check_pr_blockwise(k: &KalmanForm, tol: &Tolerance) -> Result<PrReport> {
    k.validate()?;
    let d = &k.dims;
    let jm = make_symp_j_real(d.m);
    let jn1 = make_symp_j_real(d.n1);
    let jn2 = make_symp_j_real(d.n2);

    let residuals = vec![
        (
            "A_h22' = -A_h11".to_string(),
            max_abs_real(&(k.a_h22.transpose() + &k.a_h11)),
        ),
        (
            "-A_h12 + A_h12' + B_h Jm B_h' = 0".to_string(),
            max_abs_real(&(-&k.a_h12 + k.a_h12.transpose() + &k.b_h * &jm * k.b_h.transpose())),
        ),
        (
            "-A_12 + A_21' Jn1 + B_h Jm B_co' Jn1 = 0".to_string(),
            max_abs_real(
                &(-&k.a_12 + k.a_21.transpose() * &jn1 + &k.b_h * &jm * k.b_co.transpose() * &jn1),
            ),
        ),
        (
            "A_31' Jn2 = A_13".to_string(),
            max_abs_real(&(k.a_31.transpose() * &jn2 - &k.a_13)),
        ),
        (
            "Jn1 A_co + A_co' Jn1 - Jn1 B_co Jm B_co' Jn1 = 0".to_string(),
            max_abs_real(
                &(&jn1 * &k.a_co + k.a_co.transpose() * &jn1
                    - &jn1 * &k.b_co * &jm * k.b_co.transpose() * &jn1),
            ),
        ),
        (
            "Jn2 A_cbo + A_cbo' Jn2 = 0".to_string(),
            max_abs_real(&(&jn2 * &k.a_cbo + k.a_cbo.transpose() * &jn2)),
        ),
        (
            "B_h = C_h' Jm".to_string(),
            max_abs_real(&(&k.b_h - k.c_h.transpose() * &jm)),
        ),
        (
            "B_co = Jn1 C_co' Jm".to_string(),
            max_abs_real(&(&k.b_co - &jn1 * k.c_co.transpose() * &jm)),
        ),
    ];
    let passed = residuals.iter().all(|(_, r)| tol.accepts(*r));
    let worst = residuals.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    Ok(PrReport {
        passed,
        residual_constraint1: worst,
        residual_constraint2: worst,
        block_residuals: residuals,
    })
}

/// Converts an annihilation-form system to real quadratures via
/// `Ā = V 𝒜 V†`, `B̄ = V ℬ V†`, `C̄ = V 𝒞 V†` (all results are real).
pub fn annihilation_to_quadrature(s: &AnnihilationForm, guard: f64) -> Result<QuadratureSystem> {
    let vn = crate::structured::make_v(s.n);
    let vm = crate::structured::make_v(s.m);
    let a = crate::structured::try_real(&(&vn * &s.a * vn.adjoint()), guard)?;
    let b = crate::structured::try_real(&(&vn * &s.b * vm.adjoint()), guard)?;
    let c = crate::structured::try_real(&(&vm * &s.c * vn.adjoint()), guard)?;
    QuadratureSystem::new(s.n, s.m, a, b, c)
}

/// Complex-matrix version of the quadrature PR residuals; used for
/// cross-checks in mixed-representation code paths.
pub fn quadrature_residuals_complex(q: &QuadratureSystem, dims: crate::model::BlockDims) -> (f64, f64) {
    let jbar = to_complex(&blockwise_symp_j(&[dims.n3(), dims.n1, dims.n2]));
    let jm = to_complex(&make_symp_j_real(dims.m));
    let a = to_complex(&q.a);
    let b = to_complex(&q.b);
    let c = to_complex(&q.c);
    let r1 = max_abs(&(&a * &jbar + &jbar * a.transpose() + &b * &jm * b.transpose()));
    let r2 = max_abs(&(&b - &jbar * c.transpose() * &jm));
    (r1, r2)
}
