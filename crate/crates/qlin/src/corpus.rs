//! Built-in example models with their expected verdicts, used by the
//! verification command and the acceptance suite. Each fixture ships as a
//! model document embedded at compile time; parameters can be overridden
//! at run time.

use crate::analysis::{co_report, spectrum_report, theorem_co_observability};
use crate::bae::theorem_bae_check;
use crate::decomposition::{assemble_concatenation, reconstruction_residual};
use crate::format::{parse_model, LoadedModel};
use crate::model::{
    assemble, disassemble, BlockDims, HGammaParams, KalmanForm, Model, QuadratureSystem,
};
use crate::parameterization::{build_from_hgamma, extract_hgamma};
use crate::realizability::check_pr_quadrature;
use crate::report::{ReportDocument, Section};
use crate::structured::Tolerance;
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Expected verdicts of a fixture; `None` marks outcomes the fixture does
/// not pin down.
#[derive(Debug, Clone)]
pub struct Expected {
    pub pr: bool,
    pub controllable: Option<bool>,
    pub observable: Option<bool>,
    pub hurwitz: Option<bool>,
    pub pq_bae: Option<bool>,
    pub qp_bae: Option<bool>,
    /// Nonempty subsystem tags of the shipped decomposition transform, in
    /// the fixed order `cbo, co, h, m`, joined with `+`.
    pub decomposition: Option<&'static str>,
    /// Real parts of an expected all-real pole set, sorted ascending.
    pub real_poles: Option<&'static [f64]>,
}

/// One embedded example model.
pub struct ExampleFixture {
    pub id: &'static str,
    pub document: &'static str,
    pub expected: Expected,
}

/// The embedded corpus.
pub fn list_examples() -> &'static [ExampleFixture] {
    &FIXTURES
}

/// Looks up a fixture by id.
pub fn get_example(id: &str) -> Result<&'static ExampleFixture> {
    FIXTURES
        .iter()
        .find(|f| f.id == id)
        .ok_or_else(|| Error::UnknownExample(id.to_string()))
}

static FIXTURES: [ExampleFixture; 5] = [
    ExampleFixture {
        id: "co-not-hurwitz",
        document: include_str!("../fixtures/co-not-hurwitz.json"),
        expected: Expected {
            pr: true,
            controllable: Some(true),
            observable: Some(true),
            hurwitz: Some(false),
            pq_bae: None,
            qp_bae: None,
            decomposition: None,
            real_poles: Some(&[-1.0, 1.0]),
        },
    },
    ExampleFixture {
        id: "single-mode-bae",
        document: include_str!("../fixtures/single-mode-bae.json"),
        expected: Expected {
            pr: true,
            controllable: Some(true),
            observable: Some(true),
            hurwitz: Some(false),
            pq_bae: Some(true),
            qp_bae: Some(false),
            decomposition: None,
            real_poles: Some(&[-1.0, 1.0]),
        },
    },
    ExampleFixture {
        id: "optomech-phase-shift",
        document: include_str!("../fixtures/optomech-phase-shift.json"),
        expected: Expected {
            pr: true,
            controllable: Some(false),
            observable: Some(false),
            hurwitz: Some(false),
            pq_bae: Some(false),
            qp_bae: Some(false),
            decomposition: Some("cbo+m"),
            real_poles: None,
        },
    },
    ExampleFixture {
        id: "optomech-bae",
        document: include_str!("../fixtures/optomech-bae.json"),
        expected: Expected {
            pr: true,
            controllable: Some(false),
            observable: Some(false),
            hurwitz: Some(false),
            pq_bae: Some(true),
            qp_bae: Some(true),
            decomposition: None,
            real_poles: None,
        },
    },
    ExampleFixture {
        id: "michelson",
        document: include_str!("../fixtures/michelson.json"),
        expected: Expected {
            pr: true,
            controllable: Some(true),
            observable: Some(true),
            hurwitz: Some(false),
            pq_bae: Some(true),
            qp_bae: Some(false),
            decomposition: Some("co+m"),
            real_poles: None,
        },
    },
];

/// All three coordinated representations of one loaded model, when the
/// model carries enough structure to reach them.
pub struct Realized {
    pub params: HGammaParams,
    pub kalman: KalmanForm,
    pub system: QuadratureSystem,
    pub dims: BlockDims,
}

/// Brings a loaded model into all representations; quadrature inputs need
/// declared block dimensions.
pub fn realize(model: &Model, tol: &Tolerance) -> Result<Realized> {
    match model {
        Model::HGamma(p) => {
            let kalman = build_from_hgamma(p)?;
            Ok(Realized {
                params: p.clone(),
                system: assemble(&kalman),
                dims: p.dims,
                kalman,
            })
        }
        Model::Kalman(k) => {
            let params = extract_hgamma(k, tol)?;
            Ok(Realized {
                params,
                system: assemble(k),
                dims: k.dims,
                kalman: k.clone(),
            })
        }
        Model::Quadrature { system, dims: Some(d) } => {
            let kalman = disassemble(system, *d, tol)?;
            let params = extract_hgamma(&kalman, tol)?;
            Ok(Realized { params, kalman, system: system.clone(), dims: *d })
        }
        Model::Quadrature { dims: None, .. } => Err(Error::Schema(
            "quadrature model requires block dims for structural analysis".into(),
        )),
        Model::Annihilation(s) => {
            let q = crate::realizability::annihilation_to_quadrature(s, 1e-10)?;
            Err(Error::Schema(format!(
                "annihilation model ({} modes) requires block dims; convert to quadrature first",
                q.n
            )))
        }
    }
}

/// Computed verdicts of one full analysis run.
#[derive(Debug, Clone)]
pub struct Computed {
    pub pr: bool,
    pub pr_residual: f64,
    pub controllable: bool,
    pub observable: bool,
    pub hurwitz: bool,
    pub quadruple_symmetric: bool,
    pub poles: Vec<num_complex::Complex64>,
    pub theorem_obsv: bool,
    pub pq_bae: Option<bool>,
    pub qp_bae: Option<bool>,
    pub decomposition: Option<String>,
    pub reconstruction_residual: Option<f64>,
}

/// Runs the full pipeline on a loaded model.
pub fn analyze(loaded: &LoadedModel, tol: &Tolerance) -> Result<Computed> {
    let r = realize(&loaded.model, tol)?;
    let pr = check_pr_quadrature(&r.system, r.dims, tol)?;
    let spec = spectrum_report(&r.system.a, tol);
    let co = co_report(&r.system.a, &r.system.b, &r.system.c);
    let theorem_obsv = theorem_co_observability(&r.params).full;

    let (pq_bae, qp_bae) = if r.dims.n1 > 0 {
        let rep = theorem_bae_check(&r.params, tol)?;
        (Some(rep.pin_to_qout_zero), Some(rep.qin_to_pout_zero))
    } else {
        (None, None)
    };

    let (decomposition, reconstruction) = match &loaded.transforms {
        None => (None, None),
        Some(cand) => {
            let cert = assemble_concatenation(&r.params, cand, tol)?;
            let mut tags = Vec::new();
            if !cert.g_cbo.is_empty() {
                tags.push("cbo");
            }
            if !cert.g_co.is_empty() {
                tags.push("co");
            }
            if !cert.g_h.is_empty() {
                tags.push("h");
            }
            if !cert.g_m.is_empty() {
                tags.push("m");
            }
            let res = reconstruction_residual(&r.params, &cert)?;
            (Some(tags.join("+")), Some(res))
        }
    };

    Ok(Computed {
        pr: pr.passed,
        pr_residual: pr.max_residual(),
        controllable: co.controllable,
        observable: co.observable,
        hurwitz: spec.hurwitz,
        quadruple_symmetric: spec.quadruple_symmetric,
        poles: spec.eigenvalues,
        theorem_obsv,
        pq_bae,
        qp_bae,
        decomposition,
        reconstruction_residual: reconstruction,
    })
}

/// Outcome of one example run: the report and the list of mismatches
/// between computed and expected verdicts (empty on pass).
pub struct ExampleRun {
    pub report: ReportDocument,
    pub diffs: Vec<String>,
}

/// Runs one example with optional parameter overrides and diffs the
/// outcome against the fixture's expectations. Deterministic given the
/// overrides.
pub fn run_example(id: &str, overrides: &BTreeMap<String, f64>) -> Result<ExampleRun> {
    let fixture = get_example(id)?;
    let tol = Tolerance::default();
    let loaded = parse_model(fixture.document, overrides)?;
    let computed = analyze(&loaded, &tol)?;
    let expected = &fixture.expected;

    let mut diffs = Vec::new();
    let mut check = |name: &str, want: Option<bool>, got: bool| {
        if let Some(w) = want {
            if w != got {
                diffs.push(format!("{name}: expected {w}, got {got}"));
            }
        }
    };
    check("physical realizability", Some(expected.pr), computed.pr);
    check("controllable", expected.controllable, computed.controllable);
    check("observable", expected.observable, computed.observable);
    check("hurwitz", expected.hurwitz, computed.hurwitz);
    check("bae p_in->q_out", expected.pq_bae, computed.pq_bae.unwrap_or(false));
    check("bae q_in->p_out", expected.qp_bae, computed.qp_bae.unwrap_or(false));
    if let Some(want) = expected.decomposition {
        let got = computed.decomposition.clone().unwrap_or_default();
        if want != got {
            diffs.push(format!("decomposition: expected {want}, got {got}"));
        }
    }
    if let Some(want) = expected.real_poles {
        let mut got: Vec<f64> = computed.poles.iter().map(|z| z.re).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let imag_ok = computed.poles.iter().all(|z| z.im.abs() < 1e-8);
        let match_ok = want.len() == got.len()
            && want.iter().zip(&got).all(|(w, g)| (w - g).abs() < 1e-8);
        if !(imag_ok && match_ok) {
            diffs.push(format!("poles: expected {want:?}, got {got:?}"));
        }
    }
    if let Some(res) = computed.reconstruction_residual {
        if res > 1e-9 {
            diffs.push(format!("decomposition round-trip residual {res:.3e}"));
        }
    }

    let mut report = ReportDocument::new(
        &format!("verify-example {id}"),
        fixture.document.as_bytes(),
        tol.abs,
    );
    report.push(
        Section::new("physical realizability", computed.pr)
            .with_residual(computed.pr_residual),
    );
    report.push(Section::new(
        "pole symmetry",
        computed.quadruple_symmetric,
    ));
    report.push(
        Section::new("expected verdicts reproduced", diffs.is_empty()).detail(
            "diffs",
            serde_json::json!(diffs),
        ),
    );
    Ok(ExampleRun { report, diffs })
}
