//! Command-line front end: loads model documents, runs the structural
//! analyses, and emits matching human-readable and machine-readable
//! reports. Exit codes: 0 all requested checks passed, 1 a check failed,
//! 2 unreadable or invalid input, 3 internal consistency failure.

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use qlin::analysis::{co_report, spectrum_report};
use qlin::bae::{
    corollary_bae_check, ignored_blocks, markov_zero_test, split_co_io, theorem_bae_check,
    BaeReport, Direction,
};
use qlin::corpus::{list_examples, realize, run_example};
use qlin::decomposition::{
    assemble_concatenation, reconstruction_residual, search_transforms, DecompositionCertificate,
};
use qlin::format::{save_model, LoadedModel};
use qlin::model::{assemble, system_distance, Model};
use qlin::realizability::{check_pr_annihilation, check_pr_blockwise, check_pr_quadrature};
use qlin::report::{ReportDocument, Section, EXIT_CHECK_FAILED, EXIT_INPUT_ERROR, EXIT_INTERNAL};
use qlin::structured::{max_abs_real, RMat, Tolerance};
use qlin::{Error, Result};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qlin", version, about = "Structural analysis of linear quantum systems")]
struct Cli {
    /// Numerical tolerance for all verdicts.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Seed for randomized cross-check oracles.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the machine-readable report to this path ("-" for stdout).
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Override a named scalar parameter, e.g. --param kappa=2 (repeatable).
    #[arg(long = "param", global = true, value_parser = parse_param)]
    params: Vec<(String, f64)>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the physical-realizability constraints of a model.
    CheckPr { path: PathBuf },
    /// Report poles, their symmetry pattern, stability, and
    /// controllability/observability.
    Spectrum { path: PathBuf },
    /// Convert between the canonical block realization and its (H, Γ)
    /// parameters, verifying the round trip.
    Kalman {
        path: PathBuf,
        /// Write the converted model to this path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Certify back-action-evading measurement directions.
    Bae {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = DirArg::Both)]
        direction: DirArg,
        #[arg(long, value_enum, default_value_t = MethodArg::Theorem)]
        method: MethodArg,
        /// Exit nonzero unless both directions hold.
        #[arg(long)]
        require_both: bool,
    },
    /// Verify shipped decomposition transforms, or search for transforms
    /// exposing noiseless / invariant subsystems.
    Decompose {
        path: PathBuf,
        /// Candidate budget for the transform search.
        #[arg(long, default_value_t = 64)]
        search_cap: usize,
    },
    /// Run the embedded example models against their expected verdicts.
    VerifyExamples {
        /// Run a single example instead of the whole corpus.
        #[arg(long)]
        id: Option<String>,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum DirArg {
    Pq,
    Qp,
    Both,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// Markov test on the coupled-sector parameters (the default).
    Theorem,
    /// Coupling-orthogonality criterion for swap-form Hamiltonians.
    Corollary,
    /// Markov test on the realized state-space blocks.
    Markov,
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.parse().map_err(|e| format!("bad value in `{s}`: {e}"))?;
    Ok((k.to_string(), v))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides: BTreeMap<String, f64> = cli.params.iter().cloned().collect();
    let tol = Tolerance::absolute(cli.tol);

    let outcome = run(&cli, &overrides, &tol);
    match outcome {
        Ok(report) => {
            print!("{}", report.to_text());
            if let Some(path) = &cli.json {
                if let Err(e) = emit_json(&report, path) {
                    eprintln!("qlin: cannot write report: {e}");
                    return ExitCode::from(EXIT_INPUT_ERROR as u8);
                }
            }
            ExitCode::from(report.exit_status as u8)
        }
        Err(e) => {
            eprintln!("qlin: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}

fn emit_json(report: &ReportDocument, path: &Path) -> std::io::Result<()> {
    let body = report.to_json();
    if path.as_os_str() == "-" {
        println!("{body}");
        Ok(())
    } else {
        std::fs::write(path, body)
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::VerdictDisagreement { .. } | Error::NonFinite(_) => EXIT_INTERNAL,
        Error::PrViolation { .. } => EXIT_CHECK_FAILED,
        _ => EXIT_INPUT_ERROR,
    }
}

fn run(cli: &Cli, overrides: &BTreeMap<String, f64>, tol: &Tolerance) -> Result<ReportDocument> {
    match &cli.command {
        Command::CheckPr { path } => cmd_check_pr(path, overrides, tol),
        Command::Spectrum { path } => cmd_spectrum(path, overrides, tol),
        Command::Kalman { path, output } => cmd_kalman(path, output.as_deref(), overrides, tol),
        Command::Bae { path, direction, method, require_both } => {
            cmd_bae(path, *direction, *method, *require_both, overrides, tol, cli.seed)
        }
        Command::Decompose { path, search_cap } => {
            cmd_decompose(path, *search_cap, overrides, tol)
        }
        Command::VerifyExamples { id } => cmd_verify_examples(id.as_deref(), overrides, tol),
    }
}

fn load(path: &Path, overrides: &BTreeMap<String, f64>) -> Result<(LoadedModel, Vec<u8>)> {
    let bytes = std::fs::read(path)?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Error::Format(format!("input is not UTF-8: {e}")))?;
    let loaded = qlin::format::parse_model(text, overrides)?;
    Ok((loaded, bytes))
}

fn cmd_check_pr(path: &Path, overrides: &BTreeMap<String, f64>, tol: &Tolerance) -> Result<ReportDocument> {
    let (loaded, bytes) = load(path, overrides)?;
    let mut report = ReportDocument::new("check-pr", &bytes, tol.abs);
    let pr = match &loaded.model {
        Model::Annihilation(s) => check_pr_annihilation(s, tol)?,
        Model::Quadrature { system, dims: Some(d) } => check_pr_quadrature(system, *d, tol)?,
        Model::Quadrature { dims: None, .. } => {
            return Err(Error::Schema(
                "quadrature model requires block dims for the realizability check".into(),
            ))
        }
        Model::Kalman(k) => check_pr_blockwise(k, tol)?,
        Model::HGamma(p) => {
            let k = qlin::parameterization::build_from_hgamma(p)?;
            check_pr_blockwise(&k, tol)?
        }
    };
    let mut section =
        Section::new("physical realizability", pr.passed).with_residual(pr.max_residual());
    for (name, r) in &pr.block_residuals {
        section = section.detail(name, serde_json::json!(format!("{r:.3e}")));
    }
    report.push(section);
    Ok(report)
}

fn complex_list(zs: &[Complex64]) -> serde_json::Value {
    let mut sorted: Vec<(f64, f64)> = zs.iter().map(|z| (z.re, z.im)).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    serde_json::json!(sorted)
}

fn cmd_spectrum(path: &Path, overrides: &BTreeMap<String, f64>, tol: &Tolerance) -> Result<ReportDocument> {
    let (loaded, bytes) = load(path, overrides)?;
    let mut report = ReportDocument::new("spectrum", &bytes, tol.abs);

    let system = match &loaded.model {
        Model::Annihilation(s) => qlin::realizability::annihilation_to_quadrature(s, 1e-10)?,
        Model::Quadrature { system, .. } => system.clone(),
        Model::Kalman(k) => assemble(k),
        Model::HGamma(p) => assemble(&qlin::parameterization::build_from_hgamma(p)?),
    };
    let spec = spectrum_report(&system.a, tol);
    let co = co_report(&system.a, &system.b, &system.c);

    report.push(
        Section::new("pole pattern symmetric under negation and conjugation", spec.quadruple_symmetric)
            .detail("eigenvalues", complex_list(&spec.eigenvalues)),
    );
    report.push(
        Section::new("dynamics summary", true)
            .detail("hurwitz", serde_json::json!(spec.hurwitz))
            .detail("controllable", serde_json::json!(co.controllable))
            .detail("observable", serde_json::json!(co.observable)),
    );
    Ok(report)
}

fn cmd_kalman(
    path: &Path,
    output: Option<&Path>,
    overrides: &BTreeMap<String, f64>,
    tol: &Tolerance,
) -> Result<ReportDocument> {
    let (loaded, bytes) = load(path, overrides)?;
    let mut report = ReportDocument::new("kalman", &bytes, tol.abs);

    let (converted, direction) = match &loaded.model {
        Model::HGamma(p) => {
            let k = qlin::parameterization::build_from_hgamma(p)?;
            (Model::Kalman(k), "parameters -> realization")
        }
        Model::Kalman(k) => {
            let p = qlin::parameterization::extract_hgamma(k, tol)?;
            (Model::HGamma(p), "realization -> parameters")
        }
        Model::Quadrature { system, dims: Some(d) } => {
            let k = qlin::model::disassemble(system, *d, tol)?;
            let p = qlin::parameterization::extract_hgamma(&k, tol)?;
            (Model::HGamma(p), "realization -> parameters")
        }
        Model::Quadrature { dims: None, .. } | Model::Annihilation(_) => {
            return Err(Error::Schema(
                "conversion requires canonical block dims; annihilation/undimensioned \
                 quadrature models are not accepted here"
                    .into(),
            ))
        }
    };

    // Round-trip check: realize both sides and compare state-space matrices.
    let realized = realize(&loaded.model, tol)?;
    let back = realize(&converted, tol)?;
    let residual = system_distance(&realized.system, &back.system);
    report.push(
        Section::new("conversion round trip", residual <= 1e-9)
            .with_residual(residual)
            .detail("direction", serde_json::json!(direction)),
    );

    if let Some(out) = output {
        save_model(out, &converted)?;
    }
    Ok(report)
}

fn bae_sections(rep: &BaeReport) -> (Section, Section) {
    (
        Section::new("back-action evasion p_in -> q_out", rep.pin_to_qout_zero)
            .with_residual(rep.max_markov_residual_pq)
            .detail("method", serde_json::json!(rep.method)),
        Section::new("back-action evasion q_in -> p_out", rep.qin_to_pout_zero)
            .with_residual(rep.max_markov_residual_qp)
            .detail("method", serde_json::json!(rep.method)),
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_bae(
    path: &Path,
    direction: DirArg,
    method: MethodArg,
    require_both: bool,
    overrides: &BTreeMap<String, f64>,
    tol: &Tolerance,
    _seed: u64,
) -> Result<ReportDocument> {
    let (loaded, bytes) = load(path, overrides)?;
    let mut report = ReportDocument::new("bae", &bytes, tol.abs);
    let realized = realize(&loaded.model, tol)?;
    let p = &realized.params;
    if p.dims.n1 == 0 {
        return Err(Error::Schema(
            "model has no coupled sector; there is nothing to measure".into(),
        ));
    }

    let rep = match method {
        MethodArg::Theorem => theorem_bae_check(p, tol)?,
        MethodArg::Markov => {
            let (b_q, b_p, c_q, c_p) = split_co_io(&realized.kalman);
            let horizon = 2 * p.dims.n1;
            let (pq, res_pq) = markov_zero_test(&realized.kalman.a_co, &b_p, &c_q, horizon, tol);
            let (qp, res_qp) = markov_zero_test(&realized.kalman.a_co, &b_q, &c_p, horizon, tol);
            BaeReport {
                pin_to_qout_zero: pq,
                qin_to_pout_zero: qp,
                max_markov_residual_pq: res_pq,
                max_markov_residual_qp: res_qp,
                method: "markov_on_realization",
            }
        }
        MethodArg::Corollary => {
            let n1 = p.dims.n1;
            let swap = {
                let mut s = RMat::zeros(2 * n1, 2 * n1);
                s.view_mut((0, n1), (n1, n1)).fill_with_identity();
                s.view_mut((n1, 0), (n1, n1)).fill_with_identity();
                s
            };
            let swap_res = max_abs_real(&(&p.h_co - &swap));
            if !tol.accepts(swap_res) {
                return Err(Error::Schema(format!(
                    "the orthogonality criterion needs the swap-form coupled-sector \
                     Hamiltonian; deviation {swap_res:.3e}"
                )));
            }
            let (gq, gp) = qlin::parameterization::split_gamma_co(&p.gamma_co, p.dims.m)?;
            let cor = corollary_bae_check(&gq, &gp, n1, tol)?;
            BaeReport {
                pin_to_qout_zero: cor.pq_bae_and_co,
                qin_to_pout_zero: cor.qp_bae_and_co,
                max_markov_residual_pq: if cor.pq_bae_and_co { 0.0 } else { f64::NAN },
                max_markov_residual_qp: if cor.qp_bae_and_co { 0.0 } else { f64::NAN },
                method: "coupling_orthogonality",
            }
        }
    };

    let ignored = ignored_blocks(p);
    let (mut s_pq, mut s_qp) = bae_sections(&rep);
    if !ignored.is_empty() {
        let note = serde_json::json!(ignored);
        s_pq = s_pq.detail("ignored_blocks", note.clone());
        s_qp = s_qp.detail("ignored_blocks", note);
    }
    match direction {
        DirArg::Pq => report.push(s_pq),
        DirArg::Qp => report.push(s_qp),
        DirArg::Both => {
            report.push(s_pq);
            report.push(s_qp);
        }
    }

    // The exit code gates on the requested certification, not on every
    // direction that was merely reported.
    let required = if require_both {
        rep.verdict(Direction::Both)
    } else {
        match direction {
            DirArg::Pq => rep.verdict(Direction::PinToQout),
            DirArg::Qp => rep.verdict(Direction::QinToPout),
            DirArg::Both => {
                rep.verdict(Direction::PinToQout) || rep.verdict(Direction::QinToPout)
            }
        }
    };
    report.passed = required;
    report.exit_status = if required { 0 } else { EXIT_CHECK_FAILED };
    Ok(report)
}

fn cert_section(name: &str, cert: &DecompositionCertificate, residual: f64) -> Section {
    let mut tags = Vec::new();
    for (tag, sub) in [
        ("cbo", &cert.g_cbo),
        ("co", &cert.g_co),
        ("h", &cert.g_h),
        ("m", &cert.g_m),
    ] {
        if !sub.is_empty() {
            tags.push(tag);
        }
    }
    Section::new(name, residual <= 1e-9)
        .with_residual(residual)
        .detail("subsystems", serde_json::json!(tags.join("+")))
        .detail("extracted_uncoupled_modes", serde_json::json!(cert.n4))
        .detail("extracted_coupled_modes", serde_json::json!(cert.n5))
        .detail("extracted_h_modes", serde_json::json!(cert.n6))
        .detail("coupled_subsystem_channels", serde_json::json!(cert.g_co.channels))
        .detail("h_subsystem_channels", serde_json::json!(cert.g_h.channels))
}

fn cmd_decompose(
    path: &Path,
    search_cap: usize,
    overrides: &BTreeMap<String, f64>,
    tol: &Tolerance,
) -> Result<ReportDocument> {
    let (loaded, bytes) = load(path, overrides)?;
    let mut report = ReportDocument::new("decompose", &bytes, tol.abs);
    let realized = realize(&loaded.model, tol)?;

    match &loaded.transforms {
        Some(cand) => {
            let cert = assemble_concatenation(&realized.params, cand, tol)?;
            let residual = reconstruction_residual(&realized.params, &cert)?;
            report.push(cert_section("shipped decomposition transforms", &cert, residual));
        }
        None => {
            let certs = search_transforms(&realized.params, search_cap, tol)?;
            match certs.first() {
                None => report.push(
                    Section::new("nontrivial decomposition found", false).detail(
                        "note",
                        serde_json::json!(
                            "best-effort search; absence is not a proof of indecomposability"
                        ),
                    ),
                ),
                Some(cert) => {
                    let residual = reconstruction_residual(&realized.params, cert)?;
                    report.push(cert_section("decomposition search", cert, residual));
                }
            }
        }
    }
    Ok(report)
}

fn cmd_verify_examples(
    id: Option<&str>,
    overrides: &BTreeMap<String, f64>,
    tol: &Tolerance,
) -> Result<ReportDocument> {
    match id {
        Some(id) => {
            let run = run_example(id, overrides)?;
            Ok(run.report)
        }
        None => {
            let mut digest_input = Vec::new();
            for f in list_examples() {
                digest_input.extend_from_slice(f.document.as_bytes());
            }
            let mut report = ReportDocument::new("verify-examples", &digest_input, tol.abs);
            for f in list_examples() {
                let run = run_example(f.id, overrides)?;
                report.push(
                    Section::new(f.id, run.diffs.is_empty())
                        .detail("diffs", serde_json::json!(run.diffs)),
                );
            }
            Ok(report)
        }
    }
}
