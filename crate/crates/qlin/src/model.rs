//! System representations: annihilation form, quadrature form, Kalman block
//! form, and the physical `(H, Γ)` parameters, together with block assembly
//! and disassembly.

use crate::structured::{is_doubled_up, max_abs, max_abs_real, CMat, RMat, Tolerance};
use crate::{Error, Result};

/// Mode counts of the Kalman block coordinates `(q_h, p_h, x_co, x_c̄ō)`.
///
/// `n1` counts controllable-and-observable modes, `n2` the uncontrollable
/// and unobservable ones, and `n3 = na + nb` the mixed pair whose `q_h`
/// half is controllable-only and whose `p_h` half is observable-only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockDims {
    pub n1: usize,
    pub n2: usize,
    pub na: usize,
    pub nb: usize,
    pub m: usize,
}

impl BlockDims {
    pub fn new(n1: usize, n2: usize, n3: usize, m: usize) -> Self {
        BlockDims { n1, n2, na: n3, nb: 0, m }
    }

    pub fn n3(&self) -> usize {
        self.na + self.nb
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n2 + self.n3()
    }

    /// Row offsets of the four state blocks `(q_h, p_h, x_co, x_c̄ō)`.
    pub fn offsets(&self) -> [usize; 4] {
        let n3 = self.n3();
        [0, n3, 2 * n3, 2 * n3 + 2 * self.n1]
    }
}

/// The annihilation-operator form `(𝒜, ℬ, 𝒞)` with `n` oscillators and `m`
/// input fields. All three matrices are doubled-up.
#[derive(Debug, Clone)]
pub struct AnnihilationForm {
    pub n: usize,
    pub m: usize,
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
}

impl AnnihilationForm {
    pub fn new(n: usize, m: usize, a: CMat, b: CMat, c: CMat) -> Result<Self> {
        check_shape("annihilation A", &a, 2 * n, 2 * n)?;
        check_shape("annihilation B", &b, 2 * n, 2 * m)?;
        check_shape("annihilation C", &c, 2 * m, 2 * n)?;
        for (name, mat) in [("A", &a), ("B", &b), ("C", &c)] {
            if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite(match name {
                    "A" => "annihilation A",
                    "B" => "annihilation B",
                    _ => "annihilation C",
                }));
            }
        }
        Ok(AnnihilationForm { n, m, a, b, c })
    }

    /// Max deviation of `(𝒜, ℬ, 𝒞)` from the doubled-up structure.
    pub fn doubled_up_residual(&self, tol: &Tolerance) -> Result<f64> {
        let mut r: f64 = 0.0;
        for mat in [&self.a, &self.b, &self.c] {
            if !mat.is_empty() {
                r = r.max(is_doubled_up(mat, tol)?.residual);
            }
        }
        Ok(r)
    }
}

/// A real quadrature-form system `(Ā, B̄, C̄)`, not necessarily in Kalman
/// block order.
#[derive(Debug, Clone)]
pub struct QuadratureSystem {
    pub n: usize,
    pub m: usize,
    pub a: RMat,
    pub b: RMat,
    pub c: RMat,
}

impl QuadratureSystem {
    pub fn new(n: usize, m: usize, a: RMat, b: RMat, c: RMat) -> Result<Self> {
        check_shape_real("quadrature A", &a, 2 * n, 2 * n)?;
        check_shape_real("quadrature B", &b, 2 * n, 2 * m)?;
        check_shape_real("quadrature C", &c, 2 * m, 2 * n)?;
        if [&a, &b, &c].iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("quadrature system"));
        }
        Ok(QuadratureSystem { n, m, a, b, c })
    }
}

/// The Kalman canonical block form: the thirteen real blocks of `(Ā, B̄, C̄)`
/// in the coordinates `(q_h, p_h, x_co, x_c̄ō)`.
#[derive(Debug, Clone)]
pub struct KalmanForm {
    pub dims: BlockDims,
    pub a_h11: RMat,
    pub a_h12: RMat,
    pub a_h22: RMat,
    pub a_12: RMat,
    pub a_13: RMat,
    pub a_21: RMat,
    pub a_31: RMat,
    pub a_co: RMat,
    pub a_cbo: RMat,
    pub b_h: RMat,
    pub b_co: RMat,
    pub c_h: RMat,
    pub c_co: RMat,
}

impl KalmanForm {
    pub fn validate(&self) -> Result<()> {
        let d = &self.dims;
        let (n1, n2, n3, m) = (d.n1, d.n2, d.n3(), d.m);
        check_shape_real("A_h11", &self.a_h11, n3, n3)?;
        check_shape_real("A_h12", &self.a_h12, n3, n3)?;
        check_shape_real("A_h22", &self.a_h22, n3, n3)?;
        check_shape_real("A_12", &self.a_12, n3, 2 * n1)?;
        check_shape_real("A_13", &self.a_13, n3, 2 * n2)?;
        check_shape_real("A_21", &self.a_21, 2 * n1, n3)?;
        check_shape_real("A_31", &self.a_31, 2 * n2, n3)?;
        check_shape_real("A_co", &self.a_co, 2 * n1, 2 * n1)?;
        check_shape_real("A_cbo", &self.a_cbo, 2 * n2, 2 * n2)?;
        check_shape_real("B_h", &self.b_h, n3, 2 * m)?;
        check_shape_real("B_co", &self.b_co, 2 * n1, 2 * m)?;
        check_shape_real("C_h", &self.c_h, 2 * m, n3)?;
        check_shape_real("C_co", &self.c_co, 2 * m, 2 * n1)?;
        Ok(())
    }

    /// All-zero Kalman form of the given dimensions.
    pub fn zeros(dims: BlockDims) -> Self {
        let (n1, n2, n3, m) = (dims.n1, dims.n2, dims.n3(), dims.m);
        KalmanForm {
            dims,
            a_h11: RMat::zeros(n3, n3),
            a_h12: RMat::zeros(n3, n3),
            a_h22: RMat::zeros(n3, n3),
            a_12: RMat::zeros(n3, 2 * n1),
            a_13: RMat::zeros(n3, 2 * n2),
            a_21: RMat::zeros(2 * n1, n3),
            a_31: RMat::zeros(2 * n2, n3),
            a_co: RMat::zeros(2 * n1, 2 * n1),
            a_cbo: RMat::zeros(2 * n2, 2 * n2),
            b_h: RMat::zeros(n3, 2 * m),
            b_co: RMat::zeros(2 * n1, 2 * m),
            c_h: RMat::zeros(2 * m, n3),
            c_co: RMat::zeros(2 * m, 2 * n1),
        }
    }
}

/// The physical parameters of the Kalman block form: the symmetric-block
/// Hamiltonian matrix `H` and the coupling blocks `Γ_h`, `Γ_co`.
#[derive(Debug, Clone)]
pub struct HGammaParams {
    pub dims: BlockDims,
    pub h_h12: RMat,
    pub h_h22: RMat,
    pub h_12: RMat,
    pub h_13: RMat,
    pub h_co: RMat,
    pub h_cbo: RMat,
    pub gamma_h: CMat,
    pub gamma_co: CMat,
}

impl HGammaParams {
    pub fn validate(&self, tol: &Tolerance) -> Result<()> {
        let d = &self.dims;
        let (n1, n2, n3, m) = (d.n1, d.n2, d.n3(), d.m);
        check_shape_real("H_h12", &self.h_h12, n3, n3)?;
        check_shape_real("H_h22", &self.h_h22, n3, n3)?;
        check_shape_real("H_12", &self.h_12, n3, 2 * n1)?;
        check_shape_real("H_13", &self.h_13, n3, 2 * n2)?;
        check_shape_real("H_co", &self.h_co, 2 * n1, 2 * n1)?;
        check_shape_real("H_cbo", &self.h_cbo, 2 * n2, 2 * n2)?;
        check_shape("Gamma_h", &self.gamma_h, 2 * m, n3)?;
        check_shape("Gamma_co", &self.gamma_co, 2 * m, 2 * n1)?;
        for (name, h) in [
            ("H_h22", &self.h_h22),
            ("H_co", &self.h_co),
            ("H_cbo", &self.h_cbo),
        ] {
            let r = max_abs_real(&(h - h.transpose()));
            if !tol.accepts(r) {
                return Err(Error::StructureViolation {
                    what: format!("symmetry of {name}"),
                    residual: r,
                });
            }
        }
        // Γ_co rows m+1..2m conjugate rows 1..m; Γ_h lower half conjugates
        // its upper half.
        let r_co = stacked_conjugate_residual(&self.gamma_co, m);
        if !tol.accepts(r_co) {
            return Err(Error::StructureViolation {
                what: "stacked-conjugate structure of Gamma_co".into(),
                residual: r_co,
            });
        }
        let r_h = stacked_conjugate_residual(&self.gamma_h, m);
        if !tol.accepts(r_h) {
            return Err(Error::StructureViolation {
                what: "stacked-conjugate structure of Gamma_h".into(),
                residual: r_h,
            });
        }
        Ok(())
    }

    /// All-zero parameters of the given dimensions.
    pub fn zeros(dims: BlockDims) -> Self {
        let (n1, n2, n3, m) = (dims.n1, dims.n2, dims.n3(), dims.m);
        HGammaParams {
            dims,
            h_h12: RMat::zeros(n3, n3),
            h_h22: RMat::zeros(n3, n3),
            h_12: RMat::zeros(n3, 2 * n1),
            h_13: RMat::zeros(n3, 2 * n2),
            h_co: RMat::zeros(2 * n1, 2 * n1),
            h_cbo: RMat::zeros(2 * n2, 2 * n2),
            gamma_h: CMat::zeros(2 * m, n3),
            gamma_co: CMat::zeros(2 * m, 2 * n1),
        }
    }

    /// The full `2n×2n` symmetric `H` in `(q_h, p_h, x_co, x_c̄ō)` order.
    pub fn full_h(&self) -> RMat {
        let d = &self.dims;
        let (n1, n2, n3) = (d.n1, d.n2, d.n3());
        let n = d.n();
        let mut h = RMat::zeros(2 * n, 2 * n);
        let [qh, ph, co, cbo] = d.offsets();
        h.view_mut((qh, ph), (n3, n3)).copy_from(&self.h_h12);
        h.view_mut((ph, qh), (n3, n3)).copy_from(&self.h_h12.transpose());
        h.view_mut((ph, ph), (n3, n3)).copy_from(&self.h_h22);
        h.view_mut((ph, co), (n3, 2 * n1)).copy_from(&self.h_12);
        h.view_mut((co, ph), (2 * n1, n3)).copy_from(&self.h_12.transpose());
        h.view_mut((ph, cbo), (n3, 2 * n2)).copy_from(&self.h_13);
        h.view_mut((cbo, ph), (2 * n2, n3)).copy_from(&self.h_13.transpose());
        h.view_mut((co, co), (2 * n1, 2 * n1)).copy_from(&self.h_co);
        h.view_mut((cbo, cbo), (2 * n2, 2 * n2)).copy_from(&self.h_cbo);
        h
    }
}

/// Max deviation of the lower `m` (or half) rows from the conjugate of the
/// upper rows.
pub fn stacked_conjugate_residual(g: &CMat, m: usize) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..m {
        for j in 0..g.ncols() {
            r = r.max((g[(m + i, j)] - g[(i, j)].conj()).norm());
        }
    }
    r
}

fn check_shape(context: &'static str, m: &CMat, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::ShapeMismatch {
            context,
            expected: (rows, cols),
            got: (m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

fn check_shape_real(context: &'static str, m: &RMat, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::ShapeMismatch {
            context,
            expected: (rows, cols),
            got: (m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

/// Assembles the full `(Ā, B̄, C̄)` from Kalman blocks, with the mandated
/// zero pattern by construction.
pub fn assemble(k: &KalmanForm) -> QuadratureSystem {
    let d = &k.dims;
    let (n1, n2, n3, m) = (d.n1, d.n2, d.n3(), d.m);
    let n = d.n();
    let [qh, ph, co, cbo] = d.offsets();

    let mut a = RMat::zeros(2 * n, 2 * n);
    a.view_mut((qh, qh), (n3, n3)).copy_from(&k.a_h11);
    a.view_mut((qh, ph), (n3, n3)).copy_from(&k.a_h12);
    a.view_mut((qh, co), (n3, 2 * n1)).copy_from(&k.a_12);
    a.view_mut((qh, cbo), (n3, 2 * n2)).copy_from(&k.a_13);
    a.view_mut((ph, ph), (n3, n3)).copy_from(&k.a_h22);
    a.view_mut((co, ph), (2 * n1, n3)).copy_from(&k.a_21);
    a.view_mut((co, co), (2 * n1, 2 * n1)).copy_from(&k.a_co);
    a.view_mut((cbo, ph), (2 * n2, n3)).copy_from(&k.a_31);
    a.view_mut((cbo, cbo), (2 * n2, 2 * n2)).copy_from(&k.a_cbo);

    let mut b = RMat::zeros(2 * n, 2 * m);
    b.view_mut((qh, 0), (n3, 2 * m)).copy_from(&k.b_h);
    b.view_mut((co, 0), (2 * n1, 2 * m)).copy_from(&k.b_co);

    let mut c = RMat::zeros(2 * m, 2 * n);
    c.view_mut((0, ph), (2 * m, n3)).copy_from(&k.c_h);
    c.view_mut((0, co), (2 * m, 2 * n1)).copy_from(&k.c_co);

    QuadratureSystem { n, m, a, b, c }
}

/// Extracts Kalman blocks from a quadrature system, failing with
/// `ZeroPatternViolation` if the system is not in Kalman block coordinates.
pub fn disassemble(q: &QuadratureSystem, dims: BlockDims, tol: &Tolerance) -> Result<KalmanForm> {
    if dims.n() != q.n || dims.m != q.m {
        return Err(Error::ShapeMismatch {
            context: "disassemble dims",
            expected: (q.n, q.m),
            got: (dims.n(), dims.m),
        });
    }
    let (n1, n2, n3, m) = (dims.n1, dims.n2, dims.n3(), dims.m);
    let [qh, ph, co, cbo] = dims.offsets();
    let sizes = [n3, n3, 2 * n1, 2 * n2];
    let offs = [qh, ph, co, cbo];

    // Mandated zero blocks of Ā in block indexing (row, col), 1-based:
    // (2,1),(2,3),(2,4),(3,1),(3,4),(4,1),(4,3).
    let zero_blocks = [(1, 0), (1, 2), (1, 3), (2, 0), (2, 3), (3, 0), (3, 2)];
    for (bi, bj) in zero_blocks {
        check_zero_block(&q.a, "A", offs[bi], offs[bj], sizes[bi], sizes[bj], tol)?;
    }
    // B̄ rows of p_h and x_c̄ō must vanish; C̄ columns of q_h and x_c̄ō must vanish.
    check_zero_block(&q.b, "B", ph, 0, n3, 2 * m, tol)?;
    check_zero_block(&q.b, "B", cbo, 0, 2 * n2, 2 * m, tol)?;
    check_zero_block(&q.c, "C", 0, qh, 2 * m, n3, tol)?;
    check_zero_block(&q.c, "C", 0, cbo, 2 * m, 2 * n2, tol)?;

    Ok(KalmanForm {
        dims,
        a_h11: q.a.view((qh, qh), (n3, n3)).into(),
        a_h12: q.a.view((qh, ph), (n3, n3)).into(),
        a_h22: q.a.view((ph, ph), (n3, n3)).into(),
        a_12: q.a.view((qh, co), (n3, 2 * n1)).into(),
        a_13: q.a.view((qh, cbo), (n3, 2 * n2)).into(),
        a_21: q.a.view((co, ph), (2 * n1, n3)).into(),
        a_31: q.a.view((cbo, ph), (2 * n2, n3)).into(),
        a_co: q.a.view((co, co), (2 * n1, 2 * n1)).into(),
        a_cbo: q.a.view((cbo, cbo), (2 * n2, 2 * n2)).into(),
        b_h: q.b.view((qh, 0), (n3, 2 * m)).into(),
        b_co: q.b.view((co, 0), (2 * n1, 2 * m)).into(),
        c_h: q.c.view((0, ph), (2 * m, n3)).into(),
        c_co: q.c.view((0, co), (2 * m, 2 * n1)).into(),
    })
}

fn check_zero_block(
    mat: &RMat,
    name: &'static str,
    row: usize,
    col: usize,
    rows: usize,
    cols: usize,
    tol: &Tolerance,
) -> Result<()> {
    for i in 0..rows {
        for j in 0..cols {
            let v = mat[(row + i, col + j)];
            if !tol.accepts(v.abs()) {
                return Err(Error::ZeroPatternViolation {
                    block: name,
                    row: row + i,
                    col: col + j,
                    value: v,
                });
            }
        }
    }
    Ok(())
}

/// One of the four on-disk model representations.
#[derive(Debug, Clone)]
pub enum Model {
    Annihilation(AnnihilationForm),
    Quadrature { system: QuadratureSystem, dims: Option<BlockDims> },
    Kalman(KalmanForm),
    HGamma(HGammaParams),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Annihilation(_) => "annihilation",
            Model::Quadrature { .. } => "quadrature",
            Model::Kalman(_) => "kalman",
            Model::HGamma(_) => "hgamma",
        }
    }
}

/// Max-abs difference between two quadrature systems.
pub fn system_distance(a: &QuadratureSystem, b: &QuadratureSystem) -> f64 {
    max_abs_real(&(&a.a - &b.a))
        .max(max_abs_real(&(&a.b - &b.b)))
        .max(max_abs_real(&(&a.c - &b.c)))
}

/// Max-abs difference between two complex matrices.
pub fn matrix_distance(a: &CMat, b: &CMat) -> f64 {
    max_abs(&(a - b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn example_counterexample() -> QuadratureSystem {
        // the controllable-and-observable system with poles ±1
        QuadratureSystem::new(
            1,
            1,
            RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            RMat::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 0.0]),
            RMat::from_row_slice(2, 2, &[0.0, 0.0, 2.0, -1.0]),
        )
        .unwrap()
    }

    #[test]
    fn assemble_pure_co() {
        let s2 = 2.0_f64.sqrt();
        let mut k = KalmanForm::zeros(BlockDims::new(1, 0, 0, 1));
        k.a_co = RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        k.b_co = RMat::from_row_slice(2, 2, &[s2, 0.0, s2, 0.0]);
        k.c_co = RMat::from_row_slice(2, 2, &[0.0, 0.0, s2, -s2]);
        let q = assemble(&k);
        assert_eq!(q.a, k.a_co);
        assert_eq!(q.b, k.b_co);
        assert_eq!(q.c, k.c_co);
    }

    #[test]
    fn assemble_empty_and_h_only() {
        let q = assemble(&KalmanForm::zeros(BlockDims::new(0, 0, 0, 0)));
        assert_eq!(q.a.nrows(), 0);

        let mut k = KalmanForm::zeros(BlockDims::new(0, 0, 1, 1));
        k.a_h11 = RMat::from_element(1, 1, 2.0);
        k.a_h12 = RMat::from_element(1, 1, 3.0);
        k.a_h22 = RMat::from_element(1, 1, -2.0);
        let q = assemble(&k);
        // Ā = [[A_h11, A_h12],[0, A_h22]]
        assert_eq!(q.a, RMat::from_row_slice(2, 2, &[2.0, 3.0, 0.0, -2.0]));
    }

    #[test]
    fn disassemble_round_trip() {
        let mut k = KalmanForm::zeros(BlockDims::new(1, 1, 1, 1));
        k.a_h11[(0, 0)] = 0.5;
        k.a_h12[(0, 0)] = -1.25;
        k.a_h22[(0, 0)] = -0.5;
        k.a_12[(0, 1)] = 2.0;
        k.a_21[(1, 0)] = 3.0;
        k.a_co = RMat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        k.a_cbo = RMat::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0]);
        k.b_h[(0, 1)] = 1.0;
        k.b_co[(0, 0)] = -1.0;
        k.c_h[(1, 0)] = 1.0;
        k.c_co[(0, 1)] = 4.0;
        let q = assemble(&k);
        let k2 = disassemble(&q, k.dims, &Tolerance::default()).unwrap();
        let q2 = assemble(&k2);
        assert_eq!(system_distance(&q, &q2), 0.0);
    }

    #[test]
    fn disassemble_rejects_wrong_block_claim() {
        // claiming the co-only counterexample has an h pair: its B violates
        // the p_h zero row
        let q = example_counterexample();
        let err = disassemble(&q, BlockDims::new(0, 0, 1, 1), &Tolerance::default());
        match err {
            Err(Error::ZeroPatternViolation { block, .. }) => assert_eq!(block, "B"),
            other => panic!("expected zero-pattern violation, got {other:?}"),
        }
    }

    #[test]
    fn disassemble_accepts_pure_co() {
        let q = example_counterexample();
        let k = disassemble(&q, BlockDims::new(1, 0, 0, 1), &Tolerance::default()).unwrap();
        assert_eq!(k.a_co, q.a);
    }

    #[test]
    fn hgamma_invariant_enforced() {
        let tol = Tolerance::default();
        let mut p = HGammaParams::zeros(BlockDims::new(1, 0, 0, 1));
        p.h_co = RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        p.gamma_co = CMat::from_row_slice(2, 2, &[
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
        ]);
        p.validate(&tol).unwrap();

        // break the stacked-conjugate structure
        p.gamma_co[(1, 0)] = Complex64::new(5.0, 0.0);
        assert!(matches!(p.validate(&tol), Err(Error::StructureViolation { .. })));

        // break symmetry of H_co
        let mut p2 = HGammaParams::zeros(BlockDims::new(1, 0, 0, 1));
        p2.h_co = RMat::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(matches!(p2.validate(&tol), Err(Error::StructureViolation { .. })));
    }
}
