//! Randomized algebraic properties of the structured-matrix layer,
//! exercised over proptest-generated inputs rather than fixed seeds.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qlin::structured::{
    flat_adjoint, is_bogoliubov, is_doubled_up, make_j, make_symp_j, make_v, max_abs, CMat,
    Tolerance,
};

fn complex_mat(rows: usize, cols: usize) -> impl Strategy<Value = CMat> {
    proptest::collection::vec(
        (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im)),
        rows * cols,
    )
    .prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

fn doubled(k: usize, r: usize) -> impl Strategy<Value = CMat> {
    (complex_mat(k, r), complex_mat(k, r)).prop_map(move |(u, v)| {
        let mut d = CMat::zeros(2 * k, 2 * r);
        d.view_mut((0, 0), (k, r)).copy_from(&u);
        d.view_mut((0, r), (k, r)).copy_from(&v);
        d.view_mut((k, 0), (k, r)).copy_from(&v.map(|z| z.conj()));
        d.view_mut((k, r), (k, r)).copy_from(&u.map(|z| z.conj()));
        d
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// ♭ is an involution and reverses products.
    #[test]
    fn flat_adjoint_algebra(x in complex_mat(4, 2), y in complex_mat(2, 6)) {
        let xff = flat_adjoint(&flat_adjoint(&x).unwrap()).unwrap();
        prop_assert!(max_abs(&(&xff - &x)) <= 16.0 * f64::EPSILON);
        let lhs = flat_adjoint(&(&x * &y)).unwrap();
        let rhs = flat_adjoint(&y).unwrap() * flat_adjoint(&x).unwrap();
        prop_assert!(max_abs(&(lhs - rhs)) <= 1e-12);
    }

    /// The two-block mirror structure is closed under products and ♭.
    #[test]
    fn doubled_up_closure(x in doubled(2, 2), y in doubled(2, 1)) {
        let tol = Tolerance::default();
        prop_assert!(is_doubled_up(&x, &tol).unwrap().ok);
        prop_assert!(is_doubled_up(&(&x * &y), &tol).unwrap().ok);
        prop_assert!(is_doubled_up(&flat_adjoint(&x).unwrap(), &tol).unwrap().ok);
    }

    /// The quadrature-exchange unitary conjugates J into the symplectic
    /// form: V (−iJ) V† = 𝕁 for every size.
    #[test]
    fn exchange_matrix_identity(k in 1usize..5) {
        let v = make_v(k);
        let lhs = &v * make_j(k) * Complex64::new(0.0, -1.0) * v.adjoint();
        prop_assert!(max_abs(&(lhs - make_symp_j(k))) <= 1e-14);
    }

    /// Squeezing-style transforms Δ(cosh r, sinh r e^{iφ}) preserve the
    /// commutation metric.
    #[test]
    fn squeeze_is_bogoliubov(r in -2.0f64..2.0, phi in 0.0f64..std::f64::consts::TAU) {
        let ch = Complex64::new(r.cosh(), 0.0);
        let sh = Complex64::from_polar(r.sinh(), phi);
        let t = CMat::from_row_slice(2, 2, &[ch, sh, sh.conj(), ch.conj()]);
        prop_assert!(is_bogoliubov(&t, &Tolerance::absolute(1e-9)).unwrap().ok);
    }
}
