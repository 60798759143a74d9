//! Seeded random generators for physically realizable systems. These are the
//! testing oracles: all draws parametrized by `(Ω, C±)` or `(H, Γ)` are
//! realizable by construction.

use crate::model::{AnnihilationForm, BlockDims, HGammaParams};
use crate::realizability::build_annihilation;
use crate::structured::{CMat, RMat};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform(rng: &mut impl Rng) -> f64 {
    rng.gen_range(-1.0..=1.0)
}

fn random_real(rng: &mut impl Rng, rows: usize, cols: usize) -> RMat {
    RMat::from_fn(rows, cols, |_, _| uniform(rng))
}

fn random_symmetric(rng: &mut impl Rng, k: usize) -> RMat {
    let m = random_real(rng, k, k);
    (&m + m.transpose()) * 0.5
}

fn random_complex(rng: &mut impl Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| Complex64::new(uniform(rng), uniform(rng)))
}

/// Stacks `top` over its entrywise conjugate.
pub fn stack_conjugate(top: &CMat) -> CMat {
    let mut g = CMat::zeros(2 * top.nrows(), top.ncols());
    g.view_mut((0, 0), (top.nrows(), top.ncols())).copy_from(top);
    g.view_mut((top.nrows(), 0), (top.nrows(), top.ncols()))
        .copy_from(&top.map(|z| z.conj()));
    g
}

/// A doubled-up matrix `Δ(U, V)` from its upper blocks.
pub fn doubled_up(u: &CMat, v: &CMat) -> CMat {
    let (k, r) = (u.nrows(), u.ncols());
    assert_eq!(v.nrows(), k);
    assert_eq!(v.ncols(), r);
    let mut d = CMat::zeros(2 * k, 2 * r);
    d.view_mut((0, 0), (k, r)).copy_from(u);
    d.view_mut((0, r), (k, r)).copy_from(v);
    d.view_mut((k, 0), (k, r)).copy_from(&v.map(|z| z.conj()));
    d.view_mut((k, r), (k, r)).copy_from(&u.map(|z| z.conj()));
    d
}

/// Random Hermitian doubled-up `Ω = Δ(Ω−, Ω+)` with `Ω−` Hermitian and `Ω+`
/// symmetric, entries i.i.d. uniform in `[−1, 1]` before symmetrization.
pub fn random_omega(rng: &mut impl Rng, n: usize) -> CMat {
    let raw_minus = random_complex(rng, n, n);
    let omega_minus = (&raw_minus + raw_minus.adjoint()) * Complex64::new(0.5, 0.0);
    let raw_plus = random_complex(rng, n, n);
    let omega_plus = (&raw_plus + raw_plus.transpose()) * Complex64::new(0.5, 0.0);
    doubled_up(&omega_minus, &omega_plus)
}

/// Random physically realizable annihilation-form system.
pub fn random_annihilation(rng: &mut impl Rng, n: usize, m: usize) -> (AnnihilationForm, CMat) {
    let omega = random_omega(rng, n);
    let c = doubled_up(&random_complex(rng, m, n), &random_complex(rng, m, n));
    let s = build_annihilation(n, m, &omega, &c).expect("construction is shape-safe");
    (s, omega)
}

/// Random passive system: `Ω+ = 0` and `C+ = 0`.
pub fn random_passive(rng: &mut impl Rng, n: usize, m: usize) -> AnnihilationForm {
    let raw = random_complex(rng, n, n);
    let omega_minus = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
    let omega = doubled_up(&omega_minus, &CMat::zeros(n, n));
    let c = doubled_up(&random_complex(rng, m, n), &CMat::zeros(m, n));
    build_annihilation(n, m, &omega, &c).expect("construction is shape-safe")
}

/// Random valid `(H, Γ)` parameters for the given block dimensions.
pub fn random_hgamma(rng: &mut impl Rng, dims: BlockDims) -> HGammaParams {
    let (n1, n2, n3, m) = (dims.n1, dims.n2, dims.n3(), dims.m);
    HGammaParams {
        dims,
        h_h12: random_real(rng, n3, n3),
        h_h22: random_symmetric(rng, n3),
        h_12: random_real(rng, n3, 2 * n1),
        h_13: random_real(rng, n3, 2 * n2),
        h_co: random_symmetric(rng, 2 * n1),
        h_cbo: random_symmetric(rng, 2 * n2),
        gamma_h: stack_conjugate(&random_complex(rng, m, n3)),
        gamma_co: stack_conjugate(&random_complex(rng, m, 2 * n1)),
    }
}

/// Random block dimensions with every mode count at most `max_modes` and
/// field count in `1..=max_fields`.
pub fn random_dims(rng: &mut impl Rng, max_modes: usize, max_fields: usize) -> BlockDims {
    loop {
        let n1 = rng.gen_range(0..=max_modes);
        let n2 = rng.gen_range(0..=max_modes);
        let n3 = rng.gen_range(0..=max_modes);
        if n1 + n2 + n3 == 0 {
            continue;
        }
        let m = rng.gen_range(1..=max_fields);
        return BlockDims::new(n1, n2, n3, m);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::realizability::check_pr_annihilation;
    use crate::structured::Tolerance;

    #[test]
    fn generator_output_is_realizable() {
        let mut rng = rng_from_seed(7);
        for _ in 0..20 {
            let n = rng.gen_range(1..=4);
            let m = rng.gen_range(1..=3);
            let (s, _) = random_annihilation(&mut rng, n, m);
            assert!(check_pr_annihilation(&s, &Tolerance::absolute(1e-9)).unwrap().passed);
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let (a, _) = random_annihilation(&mut rng_from_seed(42), 3, 2);
        let (b, _) = random_annihilation(&mut rng_from_seed(42), 3, 2);
        assert_eq!(a.a, b.a);
        assert_eq!(a.c, b.c);
    }

    #[test]
    fn random_hgamma_is_valid() {
        let mut rng = rng_from_seed(3);
        for _ in 0..20 {
            let dims = random_dims(&mut rng, 3, 2);
            let p = random_hgamma(&mut rng, dims);
            p.validate(&Tolerance::default()).unwrap();
        }
    }
}
