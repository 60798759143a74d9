//! The bijection between the Kalman block form and its physical parameters
//! `(H, Γ)`: realization from parameters, parameter extraction from a
//! realizable block form, and splitting of the coupling matrix into its
//! position/momentum columns.

use crate::model::{HGammaParams, KalmanForm};
use crate::realizability::check_pr_blockwise;
use crate::structured::{
    make_j, make_symp_j_real, make_v, to_complex, try_real, CMat, RMat, Tolerance,
};
use crate::{Error, Result};
use num_complex::Complex64;

/// Largest imaginary residue tolerated when a complex-valued construction
/// is known to be real in exact arithmetic. Exceeding it is a hard error.
pub const IMAG_GUARD: f64 = 1e-10;

fn half_i() -> Complex64 {
    Complex64::new(0.0, 0.5)
}

/// Builds the thirteen Kalman blocks from `(H, Γ)`.
///
/// Every block below is real in exact arithmetic; the complex intermediates
/// are collapsed under [`IMAG_GUARD`] and any larger imaginary residue is
/// reported as [`Error::ImaginaryResidue`].
pub fn build_from_hgamma(p: &HGammaParams) -> Result<KalmanForm> {
    let d = p.dims;
    let (n1, n2, n3, m) = (d.n1, d.n2, d.n3(), d.m);
    let jm = make_j(m);
    let vm = make_v(m);
    let jn1 = to_complex(&make_symp_j_real(n1));
    let jn2 = make_symp_j_real(n2);
    let symp_jm = to_complex(&make_symp_j_real(m));

    let gh = &p.gamma_h; // 2m × n3
    let gc = &p.gamma_co; // 2m × 2n1
    let gh_dag = gh.adjoint();
    let gc_dag = gc.adjoint();

    let a_h12 = try_real(
        &(to_complex(&p.h_h22) - &gh_dag * &jm * gh * half_i()),
        IMAG_GUARD,
    )?;
    let a_12 = try_real(
        &(to_complex(&p.h_12) - &gh_dag * &jm * gc * half_i()),
        IMAG_GUARD,
    )?;
    let a_co = try_real(
        &(&jn1 * to_complex(&p.h_co) - &jn1 * &gc_dag * &jm * gc * half_i()),
        IMAG_GUARD,
    )?;
    let a_21 = try_real(
        &(&jn1 * to_complex(&p.h_12.transpose()) - &jn1 * &gc_dag * &jm * gh * half_i()),
        IMAG_GUARD,
    )?;
    let b_h = try_real(&(&gh_dag * vm.adjoint() * &symp_jm), IMAG_GUARD)?;
    let b_co = try_real(&(&jn1 * &gc_dag * vm.adjoint() * &symp_jm), IMAG_GUARD)?;
    let c_h = try_real(&(&vm * gh), IMAG_GUARD)?;
    let c_co = try_real(&(&vm * gc), IMAG_GUARD)?;

    let k = KalmanForm {
        dims: d,
        a_h11: p.h_h12.transpose(),
        a_h12,
        a_h22: -&p.h_h12,
        a_12,
        a_13: p.h_13.clone(),
        a_21,
        a_31: &jn2 * p.h_13.transpose(),
        a_co,
        a_cbo: &jn2 * &p.h_cbo,
        b_h,
        b_co,
        c_h,
        c_co,
    };
    debug_assert_eq!(k.a_h11.nrows(), n3);
    k.validate()?;
    Ok(k)
}

/// Recovers `(H, Γ)` from a Kalman block form.
///
/// The form must satisfy the blockwise realizability conditions; the
/// recovered parameters are validated (symmetric Hamiltonian blocks,
/// conjugate-stacked coupling blocks) before being returned, so a
/// successful extraction round-trips through [`build_from_hgamma`].
pub fn extract_hgamma(k: &KalmanForm, tol: &Tolerance) -> Result<HGammaParams> {
    k.validate()?;
    let pr = check_pr_blockwise(k, tol)?;
    if !pr.passed {
        return Err(Error::PrViolation { residual: pr.max_residual() });
    }
    let d = k.dims;
    let (n1, m) = (d.n1, d.m);
    let jn1 = make_symp_j_real(n1);
    let jn2 = make_symp_j_real(d.n2);
    let symp_jm = make_symp_j_real(m);
    let vm_dag = make_v(m).adjoint();

    let h_h22 = &k.a_h12 - (&k.b_h * &symp_jm * k.b_h.transpose()).scale(0.5);
    let h_12 = &k.a_12 - (&k.b_h * &symp_jm * k.b_co.transpose() * &jn1).scale(0.5);
    let h_co =
        -(&jn1 * &k.a_co) + (&jn1 * &k.b_co * &symp_jm * k.b_co.transpose() * &jn1).scale(0.5);

    let p = HGammaParams {
        dims: d,
        h_h12: -k.a_h22.clone(),
        h_h22,
        h_12,
        h_13: k.a_13.clone(),
        h_co,
        h_cbo: -(&jn2 * &k.a_cbo),
        gamma_h: &vm_dag * to_complex(&k.c_h),
        gamma_co: &vm_dag * to_complex(&k.c_co),
    };
    p.validate(tol)?;
    Ok(p)
}

/// Splits the top `m` rows of the stacked coupling matrix `Γ_co` into the
/// columns acting on positions and on momenta: `Γ = [Γ_q, Γ_p]` with each
/// part `m × n1`.
pub fn split_gamma_co(gamma_co: &CMat, m: usize) -> Result<(CMat, CMat)> {
    if gamma_co.nrows() != 2 * m || !gamma_co.ncols().is_multiple_of(2) {
        return Err(Error::ShapeMismatch {
            context: "split of stacked coupling matrix",
            expected: (2 * m, gamma_co.ncols() & !1),
            got: (gamma_co.nrows(), gamma_co.ncols()),
        });
    }
    let n1 = gamma_co.ncols() / 2;
    let gq = gamma_co.view((0, 0), (m, n1)).clone_owned();
    let gp = gamma_co.view((0, n1), (m, n1)).clone_owned();
    Ok((gq, gp))
}

/// Real and imaginary parts of a complex matrix as real matrices.
pub fn re_im(m: &CMat) -> (RMat, RMat) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assemble, BlockDims};
    use crate::realizability::check_pr_quadrature;
    use crate::structured::max_abs_real;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Fully coupled single-mode system: `H = [[0,1],[1,0]]` on one co
    /// mode, coupling rows `(i, −i)` conjugate-stacked.
    fn single_co_mode() -> HGammaParams {
        let dims = BlockDims::new(1, 0, 0, 1);
        let mut p = HGammaParams::zeros(dims);
        p.h_co = RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        p.gamma_co = CMat::from_row_slice(
            2,
            2,
            &[c(0.0, 1.0), c(0.0, -1.0), c(0.0, -1.0), c(0.0, 1.0)],
        );
        p
    }

    #[test]
    fn single_mode_realization_matches_known_matrices() {
        let k = build_from_hgamma(&single_co_mode()).unwrap();
        let s2 = 2.0_f64.sqrt();
        let a_want = RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let b_want = RMat::from_row_slice(2, 2, &[s2, 0.0, s2, 0.0]);
        let c_want = RMat::from_row_slice(2, 2, &[0.0, 0.0, s2, -s2]);
        assert!(max_abs_real(&(&k.a_co - a_want)) < 1e-12);
        assert!(max_abs_real(&(&k.b_co - b_want)) < 1e-12);
        assert!(max_abs_real(&(&k.c_co - c_want)) < 1e-12);
    }

    #[test]
    fn realization_is_physically_realizable() {
        let tol = Tolerance::default();
        let mut rng = crate::random::rng_from_seed(21);
        for _ in 0..40 {
            let dims = crate::random::random_dims(&mut rng, 3, 2);
            let p = crate::random::random_hgamma(&mut rng, dims);
            let k = build_from_hgamma(&p).unwrap();
            let pr = check_pr_blockwise(&k, &tol).unwrap();
            assert!(pr.passed, "blockwise residual {}", pr.max_residual());
            let q = assemble(&k);
            let full = check_pr_quadrature(&q, dims, &tol).unwrap();
            assert!(full.passed, "full residual {}", full.max_residual());
        }
    }

    #[test]
    fn extraction_round_trips() {
        let tol = Tolerance::default();
        let mut rng = crate::random::rng_from_seed(22);
        for _ in 0..40 {
            let dims = crate::random::random_dims(&mut rng, 3, 2);
            let p = crate::random::random_hgamma(&mut rng, dims);
            let k = build_from_hgamma(&p).unwrap();
            let p2 = extract_hgamma(&k, &tol).unwrap();
            let err = max_abs_real(&(&p.h_h12 - &p2.h_h12))
                .max(max_abs_real(&(&p.h_h22 - &p2.h_h22)))
                .max(max_abs_real(&(&p.h_12 - &p2.h_12)))
                .max(max_abs_real(&(&p.h_13 - &p2.h_13)))
                .max(max_abs_real(&(&p.h_co - &p2.h_co)))
                .max(max_abs_real(&(&p.h_cbo - &p2.h_cbo)))
                .max(max_abs(&(&p.gamma_h - &p2.gamma_h)))
                .max(max_abs(&(&p.gamma_co - &p2.gamma_co)));
            assert!(err < 1e-9, "round-trip error {err}");
        }
    }

    use crate::structured::max_abs;

    #[test]
    fn extraction_rejects_unrealizable_forms() {
        let p = single_co_mode();
        let mut k = build_from_hgamma(&p).unwrap();
        k.b_co[(0, 0)] += 0.5;
        assert!(matches!(
            extract_hgamma(&k, &Tolerance::default()),
            Err(Error::PrViolation { .. })
        ));
    }

    #[test]
    fn gamma_split() {
        let p = single_co_mode();
        let (gq, gp) = split_gamma_co(&p.gamma_co, 1).unwrap();
        assert_eq!(gq[(0, 0)], c(0.0, 1.0));
        assert_eq!(gp[(0, 0)], c(0.0, -1.0));
        assert!(split_gamma_co(&p.gamma_co, 2).is_err());
    }
}
