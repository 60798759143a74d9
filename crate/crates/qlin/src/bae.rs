//! Back-action evading (BAE) measurement certification: transfer-function
//! evaluation, Markov-parameter zero tests in both the realized state-space
//! coordinates and the `(H, Γ)` parameters, and the orthogonality/rank
//! criterion for the swap-Hamiltonian special case `H = [[0, I], [I, 0]]`.

use crate::analysis::{numerical_rank, realify, spectrum};
use crate::model::{HGammaParams, KalmanForm};
use crate::parameterization::{build_from_hgamma, split_gamma_co};
use crate::structured::{
    make_symp_j_real, max_abs, max_abs_real, to_complex, CMat, RMat, Tolerance,
};
use crate::{Error, Result};
use num_complex::Complex64;
use rand::Rng;

/// Resolvent conditioning guard for [`transfer_eval`].
pub const RESOLVENT_COND_CAP: f64 = 1e12;

/// Which transfer direction a BAE query concerns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `p_in → q_out` must vanish (a position measurement evades momentum
    /// back-action).
    PinToQout,
    /// `q_in → p_out` must vanish.
    QinToPout,
    Both,
}

/// Verdict of a BAE certification run.
#[derive(Debug, Clone)]
pub struct BaeReport {
    pub pin_to_qout_zero: bool,
    pub qin_to_pout_zero: bool,
    pub max_markov_residual_pq: f64,
    pub max_markov_residual_qp: f64,
    pub method: &'static str,
}

impl BaeReport {
    /// The verdict for the requested direction(s).
    pub fn verdict(&self, which: Direction) -> bool {
        match which {
            Direction::PinToQout => self.pin_to_qout_zero,
            Direction::QinToPout => self.qin_to_pout_zero,
            Direction::Both => self.pin_to_qout_zero && self.qin_to_pout_zero,
        }
    }
}

/// Splits the input columns of `B_co` and output rows of `C_co` into their
/// position and momentum halves, each of width/height `m`.
pub fn split_co_io(k: &KalmanForm) -> (RMat, RMat, RMat, RMat) {
    let (n1, m) = (k.dims.n1, k.dims.m);
    let b_q = k.b_co.view((0, 0), (2 * n1, m)).clone_owned();
    let b_p = k.b_co.view((0, m), (2 * n1, m)).clone_owned();
    let c_q = k.c_co.view((0, 0), (m, 2 * n1)).clone_owned();
    let c_p = k.c_co.view((m, 0), (m, 2 * n1)).clone_owned();
    (b_q, b_p, c_q, c_p)
}

/// Evaluates the transfer function `C (sI − A)^{-1} B` at one point.
pub fn transfer_eval(a: &RMat, b: &RMat, c: &RMat, s: Complex64) -> Result<CMat> {
    let d = a.nrows();
    if d == 0 {
        return Ok(CMat::zeros(c.nrows(), b.ncols()));
    }
    let resolvent_arg = CMat::identity(d, d) * s - to_complex(a);
    let svals = realify(&resolvent_arg).svd(false, false).singular_values;
    let smax = svals.iter().copied().fold(0.0, f64::max);
    let smin = svals.iter().copied().fold(f64::INFINITY, f64::min);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond > RESOLVENT_COND_CAP {
        return Err(Error::NearSingularResolvent { cond });
    }
    let solved = resolvent_arg
        .lu()
        .solve(&to_complex(b))
        .ok_or(Error::NearSingularResolvent { cond })?;
    Ok(to_complex(c) * solved)
}

/// Decides `C A^k B = 0` for `k = 0, …, horizon−1`; by Cayley–Hamilton,
/// `horizon = dim A` makes this equivalent to `C (sI−A)^{-1} B ≡ 0`.
/// Returns the verdict and the largest Markov-term magnitude seen.
///
/// Powers are renormalized per step so that an unstable `A` cannot
/// overflow; residuals are reported at true scale.
pub fn markov_zero_test(
    a: &RMat,
    b: &RMat,
    c: &RMat,
    horizon: usize,
    tol: &Tolerance,
) -> (bool, f64) {
    let mut power = b.clone();
    let mut scale = 1.0_f64;
    let mut residual = 0.0_f64;
    for k in 0..horizon {
        residual = residual.max(max_abs_real(&(c * &power)) * scale);
        if k + 1 < horizon {
            power = a * power;
            let mag = max_abs_real(&power);
            if mag > 1e8 {
                power /= mag;
                scale *= mag;
            }
        }
    }
    (tol.accepts(residual), residual)
}

/// Markov test of one BAE direction expressed directly on `(H_co, Γ_co)`:
/// the transfer `R (sI − 𝕁_{n1} H_co)^{-1} [R_pᵀ; −R_qᵀ]` with
/// `R = [R_q, R_p]` the real (direction `p→q`) or imaginary (direction
/// `q→p`) parts of the top coupling rows.
fn hgamma_direction_residual(p: &HGammaParams, pq: bool) -> Result<f64> {
    let (n1, m) = (p.dims.n1, p.dims.m);
    let (gq, gp) = split_gamma_co(&p.gamma_co, m)?;
    let part = |g: &CMat| -> RMat {
        if pq {
            g.map(|z| z.re)
        } else {
            g.map(|z| z.im)
        }
    };
    let (rq, rp) = (part(&gq), part(&gp));
    let mut c = RMat::zeros(m, 2 * n1);
    c.view_mut((0, 0), (m, n1)).copy_from(&rq);
    c.view_mut((0, n1), (m, n1)).copy_from(&rp);
    let mut b = RMat::zeros(2 * n1, m);
    b.view_mut((0, 0), (n1, m)).copy_from(&rp.transpose());
    b.view_mut((n1, 0), (n1, m)).copy_from(&(-rq.transpose()));
    let a = make_symp_j_real(n1) * &p.h_co;
    let (_, residual) = markov_zero_test(&a, &b, &c, 2 * n1, &Tolerance::default());
    Ok(residual)
}

/// Certifies both BAE directions from `(H, Γ)` and cross-checks each
/// verdict against the Markov test on the realized co subsystem
/// `(A_co, B_co, C_co)`. A disagreement between the two formulations is an
/// internal-consistency failure, not a negative verdict.
pub fn theorem_bae_check(p: &HGammaParams, tol: &Tolerance) -> Result<BaeReport> {
    p.validate(tol)?;
    let res_pq = hgamma_direction_residual(p, true)?;
    let res_qp = hgamma_direction_residual(p, false)?;
    let pq = tol.accepts(res_pq);
    let qp = tol.accepts(res_qp);

    let k = build_from_hgamma(p)?;
    let (b_q, b_p, c_q, c_p) = split_co_io(&k);
    let horizon = 2 * p.dims.n1;
    // direction p_in → q_out is carried by (A_co, B_co_p, C_co_q); the
    // realized matrices absorb a factor 2 relative to the parameter form,
    // which cancels in the zero verdict.
    let (pq_ss, res_pq_ss) = markov_zero_test(&k.a_co, &b_p, &c_q, horizon, tol);
    let (qp_ss, res_qp_ss) = markov_zero_test(&k.a_co, &b_q, &c_p, horizon, tol);
    if pq_ss != pq {
        return Err(Error::VerdictDisagreement {
            context: "p_in -> q_out zero test".into(),
            lhs: res_pq,
            rhs: res_pq_ss,
        });
    }
    if qp_ss != qp {
        return Err(Error::VerdictDisagreement {
            context: "q_in -> p_out zero test".into(),
            lhs: res_qp,
            rhs: res_qp_ss,
        });
    }
    Ok(BaeReport {
        pin_to_qout_zero: pq,
        qin_to_pout_zero: qp,
        max_markov_residual_pq: res_pq,
        max_markov_residual_qp: res_qp,
        method: "markov_on_JH",
    })
}

/// Verdict of the swap-Hamiltonian special-case criterion.
#[derive(Debug, Clone, Copy)]
pub struct CorollaryReport {
    pub pq_bae_and_co: bool,
    pub qp_bae_and_co: bool,
    pub rank_ok: bool,
    pub re_orth: bool,
    pub im_orth: bool,
}

/// Checks whether two real matrices are "orthogonal" in the symmetrized
/// sense: both `XYᵀ − YXᵀ = 0` and `XYᵀ + YXᵀ = 0`, i.e. `XYᵀ = 0`.
fn symmetrized_orth(x: &RMat, y: &RMat, tol: &Tolerance) -> bool {
    let prod = x * y.transpose();
    let swapped = y * x.transpose();
    tol.accepts(max_abs_real(&(&prod - swapped.transpose())))
        && tol.accepts(max_abs_real(&(&prod + swapped.transpose())))
}

/// The BAE-and-controllable-and-observable criterion for systems whose
/// Hamiltonian is the swap form `H = [[0, I_n], [I_n, 0]]` with coupling
/// `Γ = [Γ_q, Γ_p]`: direction `p→q` holds iff `Re Γ_q ⊥ Re Γ_p` and the
/// stacked matrix `[Γ̆; Γ̆ J_n]` has full rank `2n` (`Γ̆ = [Γ; Γ#]`);
/// direction `q→p` swaps real parts for imaginary parts.
pub fn corollary_bae_check(
    gamma_q: &CMat,
    gamma_p: &CMat,
    n: usize,
    tol: &Tolerance,
) -> Result<CorollaryReport> {
    let m = gamma_q.nrows();
    if gamma_p.nrows() != m || gamma_q.ncols() != n || gamma_p.ncols() != n {
        return Err(Error::ShapeMismatch {
            context: "coupling blocks of the swap-Hamiltonian criterion",
            expected: (m, n),
            got: (gamma_p.nrows(), gamma_p.ncols().max(gamma_q.ncols())),
        });
    }
    let re_orth = symmetrized_orth(&gamma_q.map(|z| z.re), &gamma_p.map(|z| z.re), tol);
    let im_orth = symmetrized_orth(&gamma_q.map(|z| z.im), &gamma_p.map(|z| z.im), tol);

    let mut gamma = CMat::zeros(m, 2 * n);
    gamma.view_mut((0, 0), (m, n)).copy_from(gamma_q);
    gamma.view_mut((0, n), (m, n)).copy_from(gamma_p);
    let breve = crate::random::stack_conjugate(&gamma);
    let jn = crate::structured::make_j(n); // diag(I_n, −I_n), size 2n
    let mut stack = CMat::zeros(4 * m, 2 * n);
    stack.view_mut((0, 0), (2 * m, 2 * n)).copy_from(&breve);
    stack
        .view_mut((2 * m, 0), (2 * m, 2 * n))
        .copy_from(&(&breve * &jn));
    let rank_ok = numerical_rank(&stack).0 == 2 * n;

    Ok(CorollaryReport {
        pq_bae_and_co: re_orth && rank_ok,
        qp_bae_and_co: im_orth && rank_ok,
        rank_ok,
        re_orth,
        im_orth,
    })
}

/// Builds the `(H, Γ)` parameters of the swap-Hamiltonian system so the
/// corollary instance can also be run through [`theorem_bae_check`].
pub fn swap_hamiltonian_params(gamma_q: &CMat, gamma_p: &CMat) -> Result<HGammaParams> {
    let (m, n) = (gamma_q.nrows(), gamma_q.ncols());
    if gamma_p.nrows() != m || gamma_p.ncols() != n {
        return Err(Error::ShapeMismatch {
            context: "swap-Hamiltonian coupling blocks",
            expected: (m, n),
            got: (gamma_p.nrows(), gamma_p.ncols()),
        });
    }
    let dims = crate::model::BlockDims::new(n, 0, 0, m);
    let mut p = HGammaParams::zeros(dims);
    let mut h = RMat::zeros(2 * n, 2 * n);
    h.view_mut((0, n), (n, n)).copy_from(&RMat::identity(n, n));
    h.view_mut((n, 0), (n, n)).copy_from(&RMat::identity(n, n));
    p.h_co = h;
    let mut gamma = CMat::zeros(m, 2 * n);
    gamma.view_mut((0, 0), (m, n)).copy_from(gamma_q);
    gamma.view_mut((0, n), (m, n)).copy_from(gamma_p);
    p.gamma_co = crate::random::stack_conjugate(&gamma);
    Ok(p)
}

/// Rank of the full observability stack of a pair `(A, C)` over `dim A`
/// powers; used for the rank identity of the swap-Hamiltonian criterion.
pub fn observability_stack_rank(a: &CMat, c: &CMat) -> usize {
    numerical_rank(&crate::analysis::controllability_matrix(
        &a.transpose(),
        &c.transpose(),
    ))
    .0
}

/// Independent cross-check of a "transfer function ≡ 0" claim: samples the
/// transfer function at `n_samples` points drawn on a circle of radius
/// `2(1 + ρ(A))` (outside the spectrum) and declares it zero iff every
/// sample is below tolerance. A test oracle, not the decision procedure.
pub fn rational_sample_oracle(
    a: &RMat,
    b: &RMat,
    c: &RMat,
    n_samples: usize,
    seed: u64,
    tol: &Tolerance,
) -> bool {
    let rho = spectrum(a).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let radius = 2.0 * (1.0 + rho);
    let mut rng = crate::random::rng_from_seed(seed);
    for _ in 0..n_samples {
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let s = Complex64::new(radius * theta.cos(), radius * theta.sin());
        match transfer_eval(a, b, c, s) {
            Ok(val) => {
                if !tol.accepts(max_abs(&val)) {
                    return false;
                }
            }
            // a conditioning rejection on the sampling circle is treated
            // as inconclusive for that sample
            Err(_) => continue,
        }
    }
    true
}

/// Names the block structure a BAE certification ignores. The theorem
/// speaks only about the fully coupled (co) block; callers surface this so
/// a verdict on a larger system is not over-read.
pub fn ignored_blocks(p: &HGammaParams) -> Vec<&'static str> {
    let mut out = Vec::new();
    if p.dims.n3() > 0 {
        out.push("h (controllable-xor-observable block)");
    }
    if p.dims.n2 > 0 {
        out.push("cbo (uncontrollable-unobservable block)");
    }
    out
}
