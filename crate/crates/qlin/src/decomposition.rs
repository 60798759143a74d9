//! Noiseless and invariant subsystem extraction: verifies that candidate
//! orthogonal, blockwise-symplectic coordinate changes split a system in
//! Kalman block coordinates into decoupled subsystems, assembles the full
//! concatenation certificate, and heuristically searches for suitable
//! transforms.
//!
//! Conventions: each sector (`co`, `c̄ō`, `h`) is stored with positions
//! before momenta, `x = (q_1..q_k, p_1..p_k)`. A split transform `P` maps a
//! sector to `(block 1, block 2)` where block 2 is the extracted subsystem
//! and block 1 stays in the mixed remainder.

use crate::model::{assemble, BlockDims, HGammaParams, KalmanForm};
use crate::parameterization::build_from_hgamma;
use crate::structured::{
    is_blockwise_symplectic, max_abs, max_abs_real, CMat, RMat, Tolerance,
};
use crate::{Error, Result};

/// Relative threshold classifying a coupling row as nonzero; scale-free in
/// the overall coupling magnitude.
pub const ROW_NONZERO_REL: f64 = 1e-10;

/// Default cap on the per-sector mode count accepted by the transform
/// search.
pub const SEARCH_MODE_CAP: usize = 4;

/// An extracted subsystem: its own physical parameters, the global field
/// channels it owns (top-half indices `< m`), and its realized block form.
#[derive(Debug, Clone)]
pub struct Subsystem {
    pub params: HGammaParams,
    pub channels: Vec<usize>,
    pub realization: KalmanForm,
}

impl Subsystem {
    fn empty() -> Self {
        let params = HGammaParams::zeros(BlockDims::new(0, 0, 0, 0));
        let realization = KalmanForm::zeros(params.dims);
        Subsystem { params, channels: Vec::new(), realization }
    }

    /// True when the subsystem carries no modes.
    pub fn is_empty(&self) -> bool {
        self.params.dims.n() == 0
    }
}

/// Outcome of the noiseless-subsystem check.
#[derive(Debug, Clone)]
pub struct NoiselessSplit {
    pub n4: usize,
    /// Remainder Hamiltonian block (modes staying in the mixed subsystem).
    pub h_cbo1: RMat,
    pub h_cbo2: RMat,
    /// Coupling of the h momenta to the remainder block.
    pub h_131: RMat,
    /// Generator of the isolated evolution, always of Hamiltonian-matrix
    /// form `𝕁 H`.
    pub generator: RMat,
    pub subsystem: Subsystem,
}

/// Outcome of the fully-coupled invariant-subsystem check.
#[derive(Debug, Clone)]
pub struct CoSplit {
    pub n5: usize,
    pub channels: Vec<usize>,
    pub h_co1: RMat,
    pub h_121: RMat,
    /// Coupling rows of the remainder block (all `2m` rows kept; rows owned
    /// by the subsystem are zero here).
    pub gamma_co1: CMat,
    /// Coupling rows of the subsystem, conjugate-stacked.
    pub gamma_hat: CMat,
    pub subsystem: Subsystem,
}

/// Outcome of the h-sector invariant-subsystem check.
#[derive(Debug, Clone)]
pub struct HSplit {
    pub n6: usize,
    pub channels: Vec<usize>,
    pub h_h1_12: RMat,
    pub h_h1_22: RMat,
    /// Rows of the transformed `H_12` owned by the remainder momenta.
    pub h_12_row: RMat,
    pub h_13_row: RMat,
    pub gamma_h1: CMat,
    pub gamma_hat: CMat,
    pub subsystem: Subsystem,
}

/// A complete decomposition certificate: the three transforms, the split
/// sizes, and the four extracted subsystems (any of which may be empty).
#[derive(Debug, Clone)]
pub struct DecompositionCertificate {
    pub p_cbo: RMat,
    pub p_co: RMat,
    pub p_h: RMat,
    pub n4: usize,
    pub n5: usize,
    pub n6: usize,
    pub g_cbo: Subsystem,
    pub g_co: Subsystem,
    pub g_h: Subsystem,
    pub g_m: Subsystem,
}

/// The candidate transforms fed into [`assemble_concatenation`].
#[derive(Debug, Clone)]
pub struct CandidateTransforms {
    pub p_cbo: RMat,
    pub n4: usize,
    pub p_co: RMat,
    pub n5: usize,
    pub p_h: RMat,
    pub n6: usize,
}

impl CandidateTransforms {
    /// Identity transforms with no extraction; always admissible.
    pub fn identity(dims: &BlockDims) -> Self {
        CandidateTransforms {
            p_cbo: RMat::identity(2 * dims.n2, 2 * dims.n2),
            n4: 0,
            p_co: RMat::identity(2 * dims.n1, 2 * dims.n1),
            n5: 0,
            p_h: RMat::identity(2 * dims.n3(), 2 * dims.n3()),
            n6: 0,
        }
    }
}

fn check_split_transform(
    name: &str,
    p: &RMat,
    modes: usize,
    extracted: usize,
    tol: &Tolerance,
) -> Result<()> {
    if p.nrows() != 2 * modes || p.ncols() != 2 * modes {
        return Err(Error::StructureViolation {
            what: format!("{name}: transform shape {}x{}", p.nrows(), p.ncols()),
            residual: f64::INFINITY,
        });
    }
    if extracted > modes {
        return Err(Error::StructureViolation {
            what: format!("{name}: extracted mode count {extracted} exceeds {modes}"),
            residual: f64::INFINITY,
        });
    }
    let ortho = max_abs_real(&(p * p.transpose() - RMat::identity(2 * modes, 2 * modes)));
    if !tol.accepts(ortho) {
        return Err(Error::StructureViolation {
            what: format!("{name}: orthogonality"),
            residual: ortho,
        });
    }
    let check = is_blockwise_symplectic(p, &[modes], &[modes - extracted, extracted], tol)?;
    if !check.ok {
        return Err(Error::StructureViolation {
            what: format!("{name}: blockwise commutation-relation preservation"),
            residual: check.residual,
        });
    }
    Ok(())
}

/// Maximum row magnitude used for nonzero-row classification, taken over
/// the full coupling data of the system so the threshold is scale-free.
fn coupling_scale(p: &HGammaParams) -> f64 {
    max_abs(&p.gamma_h).max(max_abs(&p.gamma_co)).max(1e-300)
}

fn nonzero_rows(m: &CMat, threshold: f64) -> Vec<usize> {
    (0..m.nrows())
        .filter(|&i| {
            (0..m.ncols()).any(|j| m[(i, j)].norm() > threshold)
        })
        .collect()
}

/// Checks a nonzero-row set is closed under conjugate pairing (`i` together
/// with `i + m`) and returns the sorted top-half channel indices.
fn paired_channels(rows: &[usize], m: usize) -> Result<Vec<usize>> {
    let mut channels = Vec::new();
    for &r in rows {
        let (top, partner) = if r < m { (r, r + m) } else { (r - m, r - m) };
        if !rows.contains(&partner) {
            return Err(Error::OddRowSet { rows: rows.to_vec() });
        }
        if r < m {
            channels.push(top);
        }
    }
    // the bottom half must not introduce channels missing from the top
    for &r in rows {
        if r >= m && !channels.contains(&(r - m)) {
            return Err(Error::OddRowSet { rows: rows.to_vec() });
        }
    }
    Ok(channels)
}

/// Selects the conjugate-stacked rows `channels ∪ (channels + m)` of a
/// coupling matrix.
fn select_rows(g: &CMat, channels: &[usize], m: usize) -> CMat {
    let mut out = CMat::zeros(2 * channels.len(), g.ncols());
    for (k, &c) in channels.iter().enumerate() {
        out.set_row(k, &g.row(c));
        out.set_row(channels.len() + k, &g.row(c + m));
    }
    out
}

fn block_offdiag_residual(t: &RMat, first: usize) -> f64 {
    let second = t.nrows() - first;
    max_abs_real(&t.view((0, first), (first, second)).clone_owned())
        .max(max_abs_real(&t.view((first, 0), (second, first)).clone_owned()))
}

/// Verifies that `P` isolates a noiseless subsystem of `n4` modes inside
/// the uncoupled (`c̄ō`) sector: the sector Hamiltonian block-diagonalizes
/// and the h-sector coupling `H_13` touches only the remainder block.
pub fn verify_noiseless(
    p: &HGammaParams,
    p_cbo: &RMat,
    n4: usize,
    tol: &Tolerance,
) -> Result<NoiselessSplit> {
    p.validate(tol)?;
    let n2 = p.dims.n2;
    check_split_transform("noiseless split", p_cbo, n2, n4, tol)?;
    let a = n2 - n4; // remainder modes

    let t = p_cbo * &p.h_cbo * p_cbo.transpose();
    let res_h = block_offdiag_residual(&t, 2 * a);
    if !tol.accepts(res_h) {
        return Err(Error::BlockCouplingResidual {
            condition: "uncoupled-sector Hamiltonian block-diagonalization".into(),
            residual: res_h,
        });
    }
    let h13t = &p.h_13 * p_cbo.transpose();
    let res_13 = max_abs_real(&h13t.view((0, 2 * a), (h13t.nrows(), 2 * n4)).clone_owned());
    if !tol.accepts(res_13) {
        return Err(Error::BlockCouplingResidual {
            condition: "h-to-uncoupled coupling must avoid the isolated block".into(),
            residual: res_13,
        });
    }

    let h_cbo1 = t.view((0, 0), (2 * a, 2 * a)).clone_owned();
    let h_cbo2 = t.view((2 * a, 2 * a), (2 * n4, 2 * n4)).clone_owned();
    let h_131 = h13t.view((0, 0), (h13t.nrows(), 2 * a)).clone_owned();

    let mut params = HGammaParams::zeros(BlockDims::new(0, n4, 0, 0));
    params.h_cbo = h_cbo2.clone();
    let realization = build_from_hgamma(&params)?;
    let generator = realization.a_cbo.clone();
    Ok(NoiselessSplit {
        n4,
        h_cbo1,
        h_cbo2,
        h_131,
        generator,
        subsystem: Subsystem { params, channels: Vec::new(), realization },
    })
}

/// Verifies that `P` isolates an invariant subsystem of `n5` modes inside
/// the fully coupled (`co`) sector. On success the extracted subsystem is
/// itself a physically realizable system over its own field channels.
pub fn verify_co_invariant(
    p: &HGammaParams,
    p_co: &RMat,
    n5: usize,
    tol: &Tolerance,
) -> Result<CoSplit> {
    p.validate(tol)?;
    let (n1, m) = (p.dims.n1, p.dims.m);
    check_split_transform("coupled-sector split", p_co, n1, n5, tol)?;
    let a = n1 - n5;

    let t = p_co * &p.h_co * p_co.transpose();
    let res_h = block_offdiag_residual(&t, 2 * a);
    if !tol.accepts(res_h) {
        return Err(Error::BlockCouplingResidual {
            condition: "coupled-sector Hamiltonian block-diagonalization".into(),
            residual: res_h,
        });
    }
    let h12t = &p.h_12 * p_co.transpose();
    let res_12 = max_abs_real(&h12t.view((0, 2 * a), (h12t.nrows(), 2 * n5)).clone_owned());
    if !tol.accepts(res_12) {
        return Err(Error::BlockCouplingResidual {
            condition: "h-to-coupled coupling must avoid the extracted block".into(),
            residual: res_12,
        });
    }
    let gt = &p.gamma_co * crate::structured::to_complex(&p_co.transpose());
    let gamma_co1 = gt.view((0, 0), (2 * m, 2 * a)).clone_owned();
    let gamma_co2 = gt.view((0, 2 * a), (2 * m, 2 * n5)).clone_owned();

    // row disjointness: a channel row may couple to the remainder group
    // (together with the h sector) or to the extracted block, not both
    let thr = ROW_NONZERO_REL * coupling_scale(p);
    let left_rows = {
        let mut combined = CMat::zeros(2 * m, p.gamma_h.ncols() + 2 * a);
        combined
            .view_mut((0, 0), (2 * m, p.gamma_h.ncols()))
            .copy_from(&p.gamma_h);
        combined
            .view_mut((0, p.gamma_h.ncols()), (2 * m, 2 * a))
            .copy_from(&gamma_co1);
        nonzero_rows(&combined, thr)
    };
    let right_rows = nonzero_rows(&gamma_co2, thr);
    if let Some(&bad) = left_rows.iter().find(|r| right_rows.contains(r)) {
        return Err(Error::BlockCouplingResidual {
            condition: format!(
                "row disjointness of the coupled-sector split (row {bad} drives both blocks)"
            ),
            residual: p.gamma_co.row(bad).iter().map(|z| z.norm()).fold(0.0, f64::max),
        });
    }
    let channels = paired_channels(&right_rows, m)?;
    let m1 = channels.len();
    let gamma_hat = select_rows(&gamma_co2, &channels, m);

    let h_co2 = t.view((2 * a, 2 * a), (2 * n5, 2 * n5)).clone_owned();
    let mut params = HGammaParams::zeros(BlockDims::new(n5, 0, 0, m1));
    params.h_co = h_co2;
    params.gamma_co = gamma_hat.clone();
    params.validate(tol)?;
    let realization = build_from_hgamma(&params)?;
    Ok(CoSplit {
        n5,
        channels: channels.clone(),
        h_co1: t.view((0, 0), (2 * a, 2 * a)).clone_owned(),
        h_121: h12t.view((0, 0), (h12t.nrows(), 2 * a)).clone_owned(),
        gamma_co1,
        gamma_hat,
        subsystem: Subsystem { params, channels, realization },
    })
}

/// Verifies that `P` isolates an invariant subsystem of `n6` modes inside
/// the h sector (the block that is controllable or observable but not
/// both). The sector Hamiltonian `[[0, H_h12], [H_h12ᵀ, H_h22]]` must
/// block-diagonalize with both zero corners preserved, the coupling must
/// stay momentum-only, and the cross couplings `H_12`, `H_13` must live on
/// the remainder momenta alone.
pub fn verify_h_invariant(
    p: &HGammaParams,
    p_h: &RMat,
    n6: usize,
    tol: &Tolerance,
) -> Result<HSplit> {
    p.validate(tol)?;
    let (n3, m) = (p.dims.n3(), p.dims.m);
    check_split_transform("h-sector split", p_h, n3, n6, tol)?;
    let a = n3 - n6;
    // coordinate groups after the transform: (q1, p1, q2, p2)
    let (q1, p1, q2, p2) = (0, a, 2 * a, 2 * a + n6);

    let mut full_h = RMat::zeros(2 * n3, 2 * n3);
    full_h.view_mut((0, n3), (n3, n3)).copy_from(&p.h_h12);
    full_h
        .view_mut((n3, 0), (n3, n3))
        .copy_from(&p.h_h12.transpose());
    full_h.view_mut((n3, n3), (n3, n3)).copy_from(&p.h_h22);
    let t = p_h * full_h * p_h.transpose();

    let res_cross = block_offdiag_residual(&t, 2 * a);
    let res_corners = max_abs_real(&t.view((q1, q1), (a, a)).clone_owned())
        .max(max_abs_real(&t.view((q2, q2), (n6, n6)).clone_owned()));
    let res = res_cross.max(res_corners);
    if !tol.accepts(res) {
        return Err(Error::BlockCouplingResidual {
            condition: "h-sector Hamiltonian block-diagonalization with zero corners".into(),
            residual: res,
        });
    }

    // coupling stays momentum-only in the new coordinates
    let mut g_full = CMat::zeros(2 * m, 2 * n3);
    g_full
        .view_mut((0, n3), (2 * m, n3))
        .copy_from(&p.gamma_h);
    let gt = &g_full * crate::structured::to_complex(&p_h.transpose());
    let res_q = max_abs(&gt.view((0, q1), (2 * m, a)).clone_owned())
        .max(max_abs(&gt.view((0, q2), (2 * m, n6)).clone_owned()));
    if !tol.accepts(res_q) {
        return Err(Error::BlockCouplingResidual {
            condition: "h-sector coupling must remain momentum-only".into(),
            residual: res_q,
        });
    }
    let gamma_h1 = gt.view((0, p1), (2 * m, a)).clone_owned();
    let gamma_h2 = gt.view((0, p2), (2 * m, n6)).clone_owned();

    // H_12, H_13 enter on the h momenta; in the new coordinates they must
    // live on the remainder momenta only
    let stack = |h: &RMat| -> RMat {
        let mut s = RMat::zeros(2 * n3, h.ncols());
        s.view_mut((n3, 0), (n3, h.ncols())).copy_from(h);
        p_h * s
    };
    let s12 = stack(&p.h_12);
    let s13 = stack(&p.h_13);
    let row_residual = |s: &RMat| -> f64 {
        max_abs_real(&s.view((q1, 0), (a, s.ncols())).clone_owned())
            .max(max_abs_real(&s.view((q2, 0), (n6, s.ncols())).clone_owned()))
            .max(max_abs_real(&s.view((p2, 0), (n6, s.ncols())).clone_owned()))
    };
    let res_rows = row_residual(&s12).max(row_residual(&s13));
    if !tol.accepts(res_rows) {
        return Err(Error::BlockCouplingResidual {
            condition: "cross couplings must enter on the remainder momenta only".into(),
            residual: res_rows,
        });
    }

    // row disjointness against the full coupled-sector coupling
    let thr = ROW_NONZERO_REL * coupling_scale(p);
    let left_rows = {
        let mut combined = CMat::zeros(2 * m, a + p.gamma_co.ncols());
        combined.view_mut((0, 0), (2 * m, a)).copy_from(&gamma_h1);
        combined
            .view_mut((0, a), (2 * m, p.gamma_co.ncols()))
            .copy_from(&p.gamma_co);
        nonzero_rows(&combined, thr)
    };
    let right_rows = nonzero_rows(&gamma_h2, thr);
    if let Some(&bad) = left_rows.iter().find(|r| right_rows.contains(r)) {
        return Err(Error::BlockCouplingResidual {
            condition: format!(
                "row disjointness of the h-sector split (row {bad} drives both blocks)"
            ),
            residual: gt.row(bad).iter().map(|z| z.norm()).fold(0.0, f64::max),
        });
    }
    let channels = paired_channels(&right_rows, m)?;
    let m2 = channels.len();
    let gamma_hat = select_rows(&gamma_h2, &channels, m);

    let mut params = HGammaParams::zeros(BlockDims::new(0, 0, n6, m2));
    params.h_h12 = t.view((q2, p2), (n6, n6)).clone_owned();
    params.h_h22 = t.view((p2, p2), (n6, n6)).clone_owned();
    params.gamma_h = gamma_hat.clone();
    params.validate(tol)?;
    let realization = build_from_hgamma(&params)?;
    Ok(HSplit {
        n6,
        channels: channels.clone(),
        h_h1_12: t.view((q1, p1), (a, a)).clone_owned(),
        h_h1_22: t.view((p1, p1), (a, a)).clone_owned(),
        h_12_row: s12.view((p1, 0), (a, s12.ncols())).clone_owned(),
        h_13_row: s13.view((p1, 0), (a, s13.ncols())).clone_owned(),
        gamma_h1,
        gamma_hat,
        subsystem: Subsystem { params, channels, realization },
    })
}

/// Runs all three split checks, verifies the joint coupling conditions, and
/// assembles the four-way concatenation certificate. The mixed remainder
/// subsystem absorbs every mode and channel not claimed by the three
/// extracted subsystems, so mode and channel counts are conserved.
pub fn assemble_concatenation(
    p: &HGammaParams,
    cand: &CandidateTransforms,
    tol: &Tolerance,
) -> Result<DecompositionCertificate> {
    let ns = verify_noiseless(p, &cand.p_cbo, cand.n4, tol)?;
    let cs = verify_co_invariant(p, &cand.p_co, cand.n5, tol)?;
    let hs = verify_h_invariant(p, &cand.p_h, cand.n6, tol)?;
    let d = p.dims;
    let m = d.m;

    // joint column patterns: after both transforms, the remainder momenta
    // couple only to the remainder blocks of the other sectors
    let h_m12_full = &hs.h_12_row * cand.p_co.transpose();
    let a_co = d.n1 - cand.n5;
    let res_12 = max_abs_real(
        &h_m12_full
            .view((0, 2 * a_co), (h_m12_full.nrows(), 2 * cand.n5))
            .clone_owned(),
    );
    let h_m13_full = &hs.h_13_row * cand.p_cbo.transpose();
    let a_cbo = d.n2 - cand.n4;
    let res_13 = max_abs_real(
        &h_m13_full
            .view((0, 2 * a_cbo), (h_m13_full.nrows(), 2 * cand.n4))
            .clone_owned(),
    );
    let res = res_12.max(res_13);
    if !tol.accepts(res) {
        return Err(Error::BlockCouplingResidual {
            condition: "remainder momenta must not couple to extracted blocks".into(),
            residual: res,
        });
    }

    // three-way row disjointness across [mixed | h-extracted | co-extracted]
    let thr = ROW_NONZERO_REL * coupling_scale(p);
    for r in 0..2 * m {
        let in_co = cs.channels.contains(&(r % m));
        let in_h = hs.channels.contains(&(r % m));
        let mixed_nonzero = (0..hs.gamma_h1.ncols()).any(|j| hs.gamma_h1[(r, j)].norm() > thr)
            || (0..cs.gamma_co1.ncols()).any(|j| cs.gamma_co1[(r, j)].norm() > thr);
        let claims = usize::from(in_co) + usize::from(in_h) + usize::from(mixed_nonzero);
        if claims > 1 {
            return Err(Error::BlockCouplingResidual {
                condition: format!("three-way channel-row disjointness (row {r})"),
                residual: f64::INFINITY,
            });
        }
    }

    // remaining channels (including fully uncoupled ones) go to the mixed
    // subsystem so that channel counts are conserved
    let channels_m: Vec<usize> = (0..m)
        .filter(|c| !cs.channels.contains(c) && !hs.channels.contains(c))
        .collect();
    let m3 = channels_m.len();
    let a_h = d.n3() - cand.n6;

    let mut params_m = HGammaParams::zeros(BlockDims::new(a_co, a_cbo, a_h, m3));
    params_m.h_h12 = hs.h_h1_12.clone();
    params_m.h_h22 = hs.h_h1_22.clone();
    params_m.h_12 = h_m12_full.view((0, 0), (a_h, 2 * a_co)).clone_owned();
    params_m.h_13 = h_m13_full.view((0, 0), (a_h, 2 * a_cbo)).clone_owned();
    params_m.h_co = cs.h_co1.clone();
    params_m.h_cbo = ns.h_cbo1.clone();
    params_m.gamma_h = select_rows(&hs.gamma_h1, &channels_m, m);
    params_m.gamma_co = select_rows(&cs.gamma_co1, &channels_m, m);
    params_m.validate(tol)?;
    let realization_m = build_from_hgamma(&params_m)?;

    Ok(DecompositionCertificate {
        p_cbo: cand.p_cbo.clone(),
        p_co: cand.p_co.clone(),
        p_h: cand.p_h.clone(),
        n4: cand.n4,
        n5: cand.n5,
        n6: cand.n6,
        g_cbo: if cand.n4 > 0 { ns.subsystem } else { Subsystem::empty() },
        g_co: if cand.n5 > 0 { cs.subsystem } else { Subsystem::empty() },
        g_h: if cand.n6 > 0 { hs.subsystem } else { Subsystem::empty() },
        g_m: Subsystem {
            params: params_m,
            channels: channels_m.clone(),
            realization: realization_m,
        },
    })
}

/// Scatter map from a subsystem's local state indices to global transformed
/// indices, and from local channels to global channels.
fn scatter(
    global_a: &mut RMat,
    global_b: &mut RMat,
    global_c: &mut RMat,
    sub: &Subsystem,
    state_map: &[usize],
    m: usize,
) {
    let q = assemble(&sub.realization);
    let ms = sub.channels.len();
    for (li, &gi) in state_map.iter().enumerate() {
        for (lj, &gj) in state_map.iter().enumerate() {
            global_a[(gi, gj)] += q.a[(li, lj)];
        }
        for (lc, &gc) in sub.channels.iter().enumerate() {
            global_b[(gi, gc)] += q.b[(li, lc)];
            global_b[(gi, gc + m)] += q.b[(li, lc + ms)];
            global_c[(gc, gi)] += q.c[(lc, li)];
            global_c[(gc + m, gi)] += q.c[(lc + ms, li)];
        }
    }
}

/// Re-embeds the four extracted subsystems with the certificate's
/// transforms and measures the worst-case entry deviation from the
/// original realization; a valid certificate reproduces it to numerical
/// precision.
pub fn reconstruction_residual(
    p: &HGammaParams,
    cert: &DecompositionCertificate,
) -> Result<f64> {
    let d = p.dims;
    let (n1, n2, n3, m, n) = (d.n1, d.n2, d.n3(), d.m, d.n());
    let full = assemble(&build_from_hgamma(p)?);

    // global transform Q = diag(P_h, P_co, P_cbo) in (q_h, p_h, x_co, x_cbo)
    let mut qmat = RMat::zeros(2 * n, 2 * n);
    qmat.view_mut((0, 0), (2 * n3, 2 * n3)).copy_from(&cert.p_h);
    qmat.view_mut((2 * n3, 2 * n3), (2 * n1, 2 * n1))
        .copy_from(&cert.p_co);
    qmat.view_mut((2 * n3 + 2 * n1, 2 * n3 + 2 * n1), (2 * n2, 2 * n2))
        .copy_from(&cert.p_cbo);
    let a_t = &qmat * &full.a * qmat.transpose();
    let b_t = &qmat * &full.b;
    let c_t = &full.c * qmat.transpose();

    // transformed coordinate layout: (q_h1, p_h1, q_h2, p_h2,
    //                                 x_co1, x_co2, x_cbo1, x_cbo2)
    let (a_h, a_co, a_cbo) = (n3 - cert.n6, n1 - cert.n5, n2 - cert.n4);
    let seg = |start: usize, len: usize| (start..start + len).collect::<Vec<_>>();
    let qh1 = seg(0, a_h);
    let ph1 = seg(a_h, a_h);
    let qh2 = seg(2 * a_h, cert.n6);
    let ph2 = seg(2 * a_h + cert.n6, cert.n6);
    let xco1 = seg(2 * n3, 2 * a_co);
    let xco2 = seg(2 * n3 + 2 * a_co, 2 * cert.n5);
    let xcbo1 = seg(2 * n3 + 2 * n1, 2 * a_cbo);
    let xcbo2 = seg(2 * n3 + 2 * n1 + 2 * a_cbo, 2 * cert.n4);

    let mut a_r = RMat::zeros(2 * n, 2 * n);
    let mut b_r = RMat::zeros(2 * n, 2 * m);
    let mut c_r = RMat::zeros(2 * m, 2 * n);
    let map_m: Vec<usize> = [&qh1[..], &ph1[..], &xco1[..], &xcbo1[..]].concat();
    scatter(&mut a_r, &mut b_r, &mut c_r, &cert.g_m, &map_m, m);
    let map_h: Vec<usize> = [&qh2[..], &ph2[..]].concat();
    scatter(&mut a_r, &mut b_r, &mut c_r, &cert.g_h, &map_h, m);
    scatter(&mut a_r, &mut b_r, &mut c_r, &cert.g_co, &xco2, m);
    scatter(&mut a_r, &mut b_r, &mut c_r, &cert.g_cbo, &xcbo2, m);

    Ok(max_abs_real(&(a_t - a_r))
        .max(max_abs_real(&(b_t - b_r)))
        .max(max_abs_real(&(c_t - c_r))))
}

// ---------------------------------------------------------------------
// heuristic transform search
// ---------------------------------------------------------------------

/// An orthogonal symplectic rotation acting identically on the position
/// and momentum halves of a `(q_1..q_k, p_1..p_k)` sector.
fn paired_rotation(k: usize, i: usize, j: usize, theta: f64) -> RMat {
    let mut g = RMat::identity(2 * k, 2 * k);
    let (c, s) = (theta.cos(), theta.sin());
    for base in [0, k] {
        g[(base + i, base + i)] = c;
        g[(base + i, base + j)] = s;
        g[(base + j, base + i)] = -s;
        g[(base + j, base + j)] = c;
    }
    g
}

/// Permutation regrouping a sector so that the modes in `part2` move to
/// the tail: new layout `(q[part1], p[part1], q[part2], p[part2])`.
fn regroup_permutation(k: usize, part2: &[usize]) -> RMat {
    let part1: Vec<usize> = (0..k).filter(|i| !part2.contains(i)).collect();
    let a = part1.len();
    let mut perm = RMat::zeros(2 * k, 2 * k);
    for (new_i, &old) in part1.iter().enumerate() {
        perm[(new_i, old)] = 1.0; // q of part1
        perm[(a + new_i, k + old)] = 1.0; // p of part1
    }
    for (new_i, &old) in part2.iter().enumerate() {
        perm[(2 * a + new_i, old)] = 1.0; // q of part2
        perm[(2 * a + part2.len() + new_i, k + old)] = 1.0; // p of part2
    }
    perm
}

/// Candidate rotation angles read off the sector data: pair-diagonalizing
/// angles of symmetric blocks and alignment angles of coupling rows, plus
/// the equal-weight mix.
fn candidate_angles(
    k: usize,
    i: usize,
    j: usize,
    sym_blocks: &[&RMat],
    coupling: &CMat,
) -> Vec<f64> {
    let mut angles = vec![0.0, std::f64::consts::FRAC_PI_4];
    for s in sym_blocks {
        for (bi, bj) in [(i, j), (k + i, k + j)] {
            if bj < s.ncols() && bi < s.nrows() {
                let off = s[(bi, bj)];
                let diag = s[(bi, bi)] - s[(bj, bj)];
                if off.abs() > 1e-12 || diag.abs() > 1e-12 {
                    angles.push(0.5 * off.mul_add(2.0, 0.0).atan2(diag));
                }
            }
        }
    }
    for r in 0..coupling.nrows() {
        for (ci, cj) in [(i, j), (k + i, k + j)] {
            if cj < coupling.ncols() {
                let (zi, zj) = (coupling[(r, ci)], coupling[(r, cj)]);
                for (x, y) in [(zi.re, zj.re), (zi.im, zj.im)] {
                    if x.abs() > 1e-12 || y.abs() > 1e-12 {
                        angles.push(y.atan2(x));
                    }
                }
            }
        }
    }
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    angles.truncate(16);
    angles
}

/// All subsets of `0..k` modes (including the full set, excluding the
/// empty set), in deterministic order.
fn mode_subsets(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << k) {
        out.push((0..k).filter(|i| mask & (1 << i) != 0).collect());
    }
    out
}

/// Deterministic encoding used to order and deduplicate certificates.
fn encode_transform(p: &RMat) -> Vec<i64> {
    p.iter().map(|x| (x * 1e9).round() as i64).collect()
}

fn sector_candidates<F>(
    k: usize,
    sym_blocks: &[&RMat],
    coupling: &CMat,
    admissible: F,
    budget: &mut usize,
) -> Vec<(RMat, usize)>
where
    F: Fn(&RMat, usize) -> bool,
{
    let mut out: Vec<(RMat, usize)> = vec![(RMat::identity(2 * k, 2 * k), 0)];
    if k == 0 {
        return out;
    }
    let mut rotations = vec![RMat::identity(2 * k, 2 * k)];
    for i in 0..k {
        for j in (i + 1)..k {
            for theta in candidate_angles(k, i, j, sym_blocks, coupling) {
                if theta.abs() > 1e-12 {
                    rotations.push(paired_rotation(k, i, j, theta));
                }
            }
        }
    }
    let mut seen: Vec<Vec<i64>> = Vec::new();
    for rot in &rotations {
        for part2 in mode_subsets(k) {
            if *budget == 0 {
                return out;
            }
            *budget -= 1;
            let p = regroup_permutation(k, &part2) * rot;
            let enc = encode_transform(&p);
            if seen.contains(&enc) {
                continue;
            }
            seen.push(enc);
            if admissible(&p, part2.len()) {
                out.push((p, part2.len()));
            }
        }
    }
    out
}

/// Heuristic, deterministic search for transforms exposing nontrivial
/// subsystems. Candidates combine data-derived paired rotations with mode
/// regroupings per sector, are filtered by the per-sector checks, and the
/// surviving combinations are certified by [`assemble_concatenation`].
/// Best-effort: an empty result does not prove indecomposability.
pub fn search_transforms(
    p: &HGammaParams,
    budget: usize,
    tol: &Tolerance,
) -> Result<Vec<DecompositionCertificate>> {
    let d = p.dims;
    for modes in [d.n1, d.n2, d.n3()] {
        if modes > SEARCH_MODE_CAP {
            return Err(Error::SearchCapExceeded(modes, SEARCH_MODE_CAP));
        }
    }
    let mut budget_left = budget.max(1);

    let co = sector_candidates(
        d.n1,
        &[&p.h_co],
        &p.gamma_co,
        |pm, n5| verify_co_invariant(p, pm, n5, tol).is_ok(),
        &mut budget_left,
    );
    let cbo = sector_candidates(
        d.n2,
        &[&p.h_cbo],
        &CMat::zeros(0, 2 * d.n2),
        |pm, n4| verify_noiseless(p, pm, n4, tol).is_ok(),
        &mut budget_left,
    );
    let h = {
        // the h sector's symmetric data lives in the stacked Hamiltonian
        let n3 = d.n3();
        let mut full_h = RMat::zeros(2 * n3, 2 * n3);
        full_h.view_mut((0, n3), (n3, n3)).copy_from(&p.h_h12);
        full_h
            .view_mut((n3, 0), (n3, n3))
            .copy_from(&p.h_h12.transpose());
        full_h.view_mut((n3, n3), (n3, n3)).copy_from(&p.h_h22);
        let mut g_full = CMat::zeros(2 * d.m, 2 * n3);
        g_full
            .view_mut((0, n3), (2 * d.m, n3))
            .copy_from(&p.gamma_h);
        sector_candidates(
            n3,
            &[&full_h],
            &g_full,
            |pm, n6| verify_h_invariant(p, pm, n6, tol).is_ok(),
            &mut budget_left,
        )
    };

    let mut combos = Vec::new();
    'outer: for (p_co, n5) in &co {
        for (p_cbo, n4) in &cbo {
            for (p_h, n6) in &h {
                if n4 + n5 + n6 == 0 {
                    continue;
                }
                if combos.len() >= budget_left.max(64) {
                    break 'outer;
                }
                combos.push(CandidateTransforms {
                    p_cbo: p_cbo.clone(),
                    n4: *n4,
                    p_co: p_co.clone(),
                    n5: *n5,
                    p_h: p_h.clone(),
                    n6: *n6,
                });
            }
        }
    }

    let results = crate::parallel::map_items(combos, |cand| {
        assemble_concatenation(p, &cand, tol).ok()
    });
    let mut certs: Vec<DecompositionCertificate> = results.into_iter().flatten().collect();
    certs.sort_by_key(|c| {
        (
            usize::MAX - (c.n4 + c.n5 + c.n6),
            encode_transform(&c.p_co),
            encode_transform(&c.p_cbo),
            encode_transform(&c.p_h),
        )
    });
    certs.dedup_by(|a, b| {
        a.n4 == b.n4
            && a.n5 == b.n5
            && a.n6 == b.n6
            && encode_transform(&a.p_co) == encode_transform(&b.p_co)
            && encode_transform(&a.p_cbo) == encode_transform(&b.p_cbo)
            && encode_transform(&a.p_h) == encode_transform(&b.p_h)
    });
    Ok(certs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::realizability::check_pr_blockwise;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Two uncoupled-sector modes with interleaved frequencies; the
    /// perfect-shuffle-style regrouping isolates each mode.
    #[test]
    fn noiseless_block_diagonal_instance() {
        let dims = BlockDims::new(0, 2, 1, 0);
        let mut p = HGammaParams::zeros(dims);
        // H_cbo = diag(h1, h2, h1, h2) in (q1, q2, p1, p2) coordinates
        p.h_cbo = RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 1.0, 2.0]));
        let tol = Tolerance::default();
        let perm = regroup_permutation(2, &[1]);
        let split = verify_noiseless(&p, &perm, 1, &tol).unwrap();
        assert_eq!(split.n4, 1);
        // generator is 𝕁 H with H = diag(2, 2)
        let want = RMat::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0]);
        assert!(max_abs_real(&(&split.generator - want)) < 1e-12);

        // dense H_13 fails the coupling pattern under the same regrouping
        let mut bad = p.clone();
        bad.h_13 = RMat::from_row_slice(1, 4, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            verify_noiseless(&bad, &perm, 1, &tol),
            Err(Error::BlockCouplingResidual { .. })
        ));

        // no uncoupled sector: vacuous success
        let empty = HGammaParams::zeros(BlockDims::new(1, 0, 0, 1));
        let split = verify_noiseless(&empty, &RMat::zeros(0, 0), 0, &tol).unwrap();
        assert!(split.subsystem.is_empty());
    }

    fn single_co_mode() -> HGammaParams {
        let mut p = HGammaParams::zeros(BlockDims::new(1, 0, 0, 1));
        p.h_co = RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        p.gamma_co = CMat::from_row_slice(
            2,
            2,
            &[c(0.0, 1.0), c(0.0, -1.0), c(0.0, -1.0), c(0.0, 1.0)],
        );
        p
    }

    #[test]
    fn fully_coupled_single_mode_trivial_split() {
        let p = single_co_mode();
        let tol = Tolerance::default();
        let id = RMat::identity(2, 2);
        // full extraction: the subsystem is the whole coupled sector
        let split = verify_co_invariant(&p, &id, 1, &tol).unwrap();
        assert_eq!(split.channels, vec![0]);
        assert!(max_abs_real(&(&split.subsystem.realization.a_co
            - &build_from_hgamma(&p).unwrap().a_co))
            < 1e-12);
        // the subsystem is physically realizable on its own
        let pr = check_pr_blockwise(&split.subsystem.realization, &tol).unwrap();
        assert!(pr.passed);
    }

    #[test]
    fn co_row_mixing_is_rejected() {
        // two coupled modes, one channel row touching both
        let mut p = HGammaParams::zeros(BlockDims::new(2, 0, 0, 1));
        p.gamma_co = crate::random::stack_conjugate(&CMat::from_row_slice(
            1,
            4,
            &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0)],
        ));
        let tol = Tolerance::default();
        let perm = regroup_permutation(2, &[1]);
        assert!(matches!(
            verify_co_invariant(&p, &perm, 1, &tol),
            Err(Error::BlockCouplingResidual { .. })
        ));
    }

    /// Hand-built two-h-mode instance: block-diagonal `H_h22` with disjoint
    /// coupling rows splits cleanly, while an `H_12` tying both h modes to
    /// the coupled sector blocks the split.
    #[test]
    fn h_invariant_split() {
        let mut p = HGammaParams::zeros(BlockDims::new(1, 0, 2, 2));
        p.h_h22 = RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        p.gamma_h = crate::random::stack_conjugate(&CMat::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)],
        ));
        let tol = Tolerance::default();
        let perm = regroup_permutation(2, &[1]);
        let split = verify_h_invariant(&p, &perm, 1, &tol).unwrap();
        assert_eq!(split.channels, vec![1]);
        assert!((split.subsystem.params.h_h22[(0, 0)] - 3.0).abs() < 1e-12);

        let mut bad = p.clone();
        bad.h_12 = RMat::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            verify_h_invariant(&bad, &perm, 1, &tol),
            Err(Error::BlockCouplingResidual { .. })
        ));

        // no h sector: vacuous
        let none = single_co_mode();
        let split = verify_h_invariant(&none, &RMat::zeros(0, 0), 0, &tol).unwrap();
        assert!(split.subsystem.is_empty());
    }

    #[test]
    fn trivial_certificate_is_whole_system_and_round_trips() {
        let mut rng = crate::random::rng_from_seed(31);
        for _ in 0..20 {
            let dims = crate::random::random_dims(&mut rng, 3, 2);
            let p = crate::random::random_hgamma(&mut rng, dims);
            let tol = Tolerance::default();
            let cert =
                assemble_concatenation(&p, &CandidateTransforms::identity(&dims), &tol).unwrap();
            assert!(cert.g_co.is_empty() && cert.g_h.is_empty() && cert.g_cbo.is_empty());
            assert_eq!(cert.g_m.params.dims.n(), dims.n());
            let res = reconstruction_residual(&p, &cert).unwrap();
            assert!(res < 1e-9, "round-trip residual {res}");
        }
    }

    /// Plant a decomposable instance: two independent coupled-sector modes
    /// with disjoint channels, shuffled by a known permutation. The search
    /// must recover a certificate splitting them.
    #[test]
    fn search_recovers_planted_split() {
        let mut p = HGammaParams::zeros(BlockDims::new(2, 0, 0, 2));
        p.h_co = RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 1.0, 2.0]));
        p.gamma_co = crate::random::stack_conjugate(&CMat::from_row_slice(
            2,
            4,
            &[
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 1.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, -1.0),
            ],
        ));
        let tol = Tolerance::default();
        let certs = search_transforms(&p, 10_000, &tol).unwrap();
        assert!(certs.iter().any(|c| c.n5 >= 1));
        for cert in certs.iter().take(5) {
            let res = reconstruction_residual(&p, cert).unwrap();
            assert!(res < 1e-9);
        }
    }

    #[test]
    fn search_cap_enforced() {
        let p = HGammaParams::zeros(BlockDims::new(5, 0, 0, 1));
        assert!(matches!(
            search_transforms(&p, 100, &Tolerance::default()),
            Err(Error::SearchCapExceeded(5, _))
        ));
    }

    #[test]
    fn fully_coupled_search_is_empty() {
        // single mode driven by and driving its only channel, generic H:
        // no nontrivial split of one mode exists besides full extraction,
        // which is fine; use a two-mode fully entangled instance instead
        let mut rng = crate::random::rng_from_seed(9);
        let p = crate::random::random_hgamma(&mut rng, BlockDims::new(1, 0, 1, 1));
        let tol = Tolerance::default();
        let certs = search_transforms(&p, 5_000, &tol).unwrap();
        // generic coupling between the h and coupled sectors forbids any
        // extraction
        assert!(certs.is_empty());
    }
}
