//! On-disk model format: a self-describing JSON document with a `kind`
//! tag, named matrix blocks, and optional named scalar parameters that may
//! appear in entries as arithmetic expressions (evaluated at load time).
//!
//! Real entries are numbers or expression strings; complex entries are
//! two-element `[re, im]` arrays of the same. The document may carry an
//! optional `transforms` section with candidate decomposition transforms.

use crate::decomposition::CandidateTransforms;
use crate::model::{AnnihilationForm, BlockDims, HGammaParams, KalmanForm, Model, QuadratureSystem};
use crate::structured::{CMat, RMat, Tolerance};
use crate::{Error, Result};
use num_complex::Complex64;
use serde_json::Value;
use std::collections::BTreeMap;

/// Version of the document schema written and accepted by this build.
pub const FORMAT_VERSION: u64 = 1;

/// A parsed model document.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model: Model,
    pub description: String,
    /// Scalar parameter bindings in effect after overrides.
    pub params: BTreeMap<String, f64>,
    /// Candidate decomposition transforms shipped with the model, if any.
    pub transforms: Option<CandidateTransforms>,
}

fn schema_err(field: &str) -> Error {
    Error::Schema(field.to_string())
}

fn get<'a>(obj: &'a Value, field: &str) -> Result<&'a Value> {
    obj.get(field).ok_or_else(|| schema_err(field))
}

fn get_usize(obj: &Value, field: &str) -> Result<usize> {
    get(obj, field)?
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| schema_err(field))
}

fn eval_scalar(v: &Value, params: &BTreeMap<String, f64>, field: &str) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| schema_err(field)),
        Value::String(expr) => {
            let mut ctx = meval::Context::new();
            for (k, val) in params {
                ctx.var(k.clone(), *val);
            }
            meval::eval_str_with_context(expr, &ctx)
                .map_err(|e| Error::Format(format!("in field `{field}`: {e}")))
        }
        _ => Err(schema_err(field)),
    }
}

fn real_matrix(
    v: &Value,
    params: &BTreeMap<String, f64>,
    field: &str,
) -> Result<RMat> {
    let rows = v.as_array().ok_or_else(|| schema_err(field))?;
    let nrows = rows.len();
    let ncols = rows
        .first()
        .and_then(|r| r.as_array())
        .map_or(0, |r| r.len());
    let mut out = RMat::zeros(nrows, ncols);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| schema_err(field))?;
        if row.len() != ncols {
            return Err(Error::Format(format!("ragged rows in field `{field}`")));
        }
        for (j, entry) in row.iter().enumerate() {
            out[(i, j)] = eval_scalar(entry, params, field)?;
        }
    }
    Ok(out)
}

fn complex_matrix(
    v: &Value,
    params: &BTreeMap<String, f64>,
    field: &str,
) -> Result<CMat> {
    let rows = v.as_array().ok_or_else(|| schema_err(field))?;
    let nrows = rows.len();
    let ncols = rows
        .first()
        .and_then(|r| r.as_array())
        .map_or(0, |r| r.len());
    let mut out = CMat::zeros(nrows, ncols);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| schema_err(field))?;
        if row.len() != ncols {
            return Err(Error::Format(format!("ragged rows in field `{field}`")));
        }
        for (j, entry) in row.iter().enumerate() {
            let pair = entry.as_array().ok_or_else(|| schema_err(field))?;
            if pair.len() != 2 {
                return Err(Error::Format(format!(
                    "complex entry in `{field}` must be a [re, im] pair"
                )));
            }
            out[(i, j)] = Complex64::new(
                eval_scalar(&pair[0], params, field)?,
                eval_scalar(&pair[1], params, field)?,
            );
        }
    }
    Ok(out)
}

fn real_block(
    blocks: &Value,
    params: &BTreeMap<String, f64>,
    field: &str,
    rows: usize,
    cols: usize,
) -> Result<RMat> {
    match blocks.get(field) {
        None => Ok(RMat::zeros(rows, cols)),
        Some(v) => {
            let m = real_matrix(v, params, field)?;
            // degenerate blocks serialize without column information
            if rows * cols == 0 && m.is_empty() {
                return Ok(RMat::zeros(rows, cols));
            }
            if m.nrows() != rows || m.ncols() != cols {
                return Err(Error::Format(format!(
                    "field `{field}` is {}x{}, expected {rows}x{cols}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            Ok(m)
        }
    }
}

fn complex_block(
    blocks: &Value,
    params: &BTreeMap<String, f64>,
    field: &str,
    rows: usize,
    cols: usize,
) -> Result<CMat> {
    match blocks.get(field) {
        None => Ok(CMat::zeros(rows, cols)),
        Some(v) => {
            let m = complex_matrix(v, params, field)?;
            // degenerate blocks serialize without column information
            if rows * cols == 0 && m.is_empty() {
                return Ok(CMat::zeros(rows, cols));
            }
            if m.nrows() != rows || m.ncols() != cols {
                return Err(Error::Format(format!(
                    "field `{field}` is {}x{}, expected {rows}x{cols}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            Ok(m)
        }
    }
}

fn parse_dims(doc: &Value) -> Result<BlockDims> {
    let dims = get(doc, "dims")?;
    Ok(BlockDims::new(
        get_usize(dims, "n1")?,
        get_usize(dims, "n2")?,
        get_usize(dims, "n3")?,
        get_usize(dims, "m")?,
    ))
}

/// Parses a model document from JSON text, applying scalar `overrides` on
/// top of the document's default parameter values.
pub fn parse_model(text: &str, overrides: &BTreeMap<String, f64>) -> Result<LoadedModel> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| Error::Format(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    let version = get_usize(&doc, "format_version")?;
    if version as u64 != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format_version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let kind = get(&doc, "kind")?
        .as_str()
        .ok_or_else(|| schema_err("kind"))?
        .to_string();
    let description = doc
        .get("description")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();

    let mut params: BTreeMap<String, f64> = BTreeMap::new();
    if let Some(p) = doc.get("params") {
        let obj = p.as_object().ok_or_else(|| schema_err("params"))?;
        for (k, v) in obj {
            params.insert(k.clone(), eval_scalar(v, &BTreeMap::new(), k)?);
        }
    }
    for (k, v) in overrides {
        if !params.contains_key(k) {
            return Err(Error::Schema(format!("unknown parameter `{k}`")));
        }
        params.insert(k.clone(), *v);
    }

    let tol = Tolerance::default();
    let model = match kind.as_str() {
        "hgamma" => {
            let dims = parse_dims(&doc)?;
            let (n1, n2, n3, m) = (dims.n1, dims.n2, dims.n3(), dims.m);
            let blocks = get(&doc, "blocks")?;
            let p = HGammaParams {
                dims,
                h_h12: real_block(blocks, &params, "h_h12", n3, n3)?,
                h_h22: real_block(blocks, &params, "h_h22", n3, n3)?,
                h_12: real_block(blocks, &params, "h_12", n3, 2 * n1)?,
                h_13: real_block(blocks, &params, "h_13", n3, 2 * n2)?,
                h_co: real_block(blocks, &params, "h_co", 2 * n1, 2 * n1)?,
                h_cbo: real_block(blocks, &params, "h_cbo", 2 * n2, 2 * n2)?,
                gamma_h: complex_block(blocks, &params, "gamma_h", 2 * m, n3)?,
                gamma_co: complex_block(blocks, &params, "gamma_co", 2 * m, 2 * n1)?,
            };
            p.validate(&tol)?;
            Model::HGamma(p)
        }
        "kalman" => {
            let dims = parse_dims(&doc)?;
            let (n1, n2, n3, m) = (dims.n1, dims.n2, dims.n3(), dims.m);
            let blocks = get(&doc, "blocks")?;
            let k = KalmanForm {
                dims,
                a_h11: real_block(blocks, &params, "a_h11", n3, n3)?,
                a_h12: real_block(blocks, &params, "a_h12", n3, n3)?,
                a_h22: real_block(blocks, &params, "a_h22", n3, n3)?,
                a_12: real_block(blocks, &params, "a_12", n3, 2 * n1)?,
                a_13: real_block(blocks, &params, "a_13", n3, 2 * n2)?,
                a_21: real_block(blocks, &params, "a_21", 2 * n1, n3)?,
                a_31: real_block(blocks, &params, "a_31", 2 * n2, n3)?,
                a_co: real_block(blocks, &params, "a_co", 2 * n1, 2 * n1)?,
                a_cbo: real_block(blocks, &params, "a_cbo", 2 * n2, 2 * n2)?,
                b_h: real_block(blocks, &params, "b_h", n3, 2 * m)?,
                b_co: real_block(blocks, &params, "b_co", 2 * n1, 2 * m)?,
                c_h: real_block(blocks, &params, "c_h", 2 * m, n3)?,
                c_co: real_block(blocks, &params, "c_co", 2 * m, 2 * n1)?,
            };
            k.validate()?;
            Model::Kalman(k)
        }
        "quadrature" => {
            let n = get_usize(&doc, "n")?;
            let m = get_usize(&doc, "m")?;
            let blocks = get(&doc, "blocks")?;
            let system = QuadratureSystem::new(
                n,
                m,
                real_block(blocks, &params, "a", 2 * n, 2 * n)?,
                real_block(blocks, &params, "b", 2 * n, 2 * m)?,
                real_block(blocks, &params, "c", 2 * m, 2 * n)?,
            )?;
            let dims = if doc.get("dims").is_some() {
                Some(parse_dims(&doc)?)
            } else {
                None
            };
            Model::Quadrature { system, dims }
        }
        "annihilation" => {
            let n = get_usize(&doc, "n")?;
            let m = get_usize(&doc, "m")?;
            let blocks = get(&doc, "blocks")?;
            let s = AnnihilationForm::new(
                n,
                m,
                complex_block(blocks, &params, "a", 2 * n, 2 * n)?,
                complex_block(blocks, &params, "b", 2 * n, 2 * m)?,
                complex_block(blocks, &params, "c", 2 * m, 2 * n)?,
            )?;
            Model::Annihilation(s)
        }
        other => return Err(Error::Schema(format!("kind `{other}`"))),
    };

    let transforms = match doc.get("transforms") {
        None => None,
        Some(t) => {
            let dims = match &model {
                Model::HGamma(p) => p.dims,
                Model::Kalman(k) => k.dims,
                Model::Quadrature { dims: Some(d), .. } => *d,
                _ => return Err(Error::Schema("transforms without block dims".into())),
            };
            let base = CandidateTransforms::identity(&dims);
            let opt_mat = |field: &str, default: &RMat| -> Result<RMat> {
                match t.get(field) {
                    None => Ok(default.clone()),
                    Some(v) => real_matrix(v, &params, field),
                }
            };
            Some(CandidateTransforms {
                p_cbo: opt_mat("p_cbo", &base.p_cbo)?,
                n4: t.get("n4").and_then(Value::as_u64).unwrap_or(0) as usize,
                p_co: opt_mat("p_co", &base.p_co)?,
                n5: t.get("n5").and_then(Value::as_u64).unwrap_or(0) as usize,
                p_h: opt_mat("p_h", &base.p_h)?,
                n6: t.get("n6").and_then(Value::as_u64).unwrap_or(0) as usize,
            })
        }
    };

    Ok(LoadedModel { model, description, params, transforms })
}

/// Loads a model document from disk.
pub fn load_model(path: &std::path::Path, overrides: &BTreeMap<String, f64>) -> Result<LoadedModel> {
    let text = std::fs::read_to_string(path)?;
    parse_model(&text, overrides)
}

fn real_to_value(m: &RMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json_num(m[(i, j)])).collect()))
            .collect(),
    )
}

fn complex_to_value(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| {
                            Value::Array(vec![json_num(m[(i, j)].re), json_num(m[(i, j)].im)])
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

fn json_num(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

fn dims_value(d: &BlockDims) -> Value {
    serde_json::json!({"n1": d.n1, "n2": d.n2, "n3": d.n3(), "m": d.m})
}

/// Serializes a model to the document schema (numeric payload only; any
/// parameter expressions present at load time are already substituted).
pub fn model_to_value(model: &Model) -> Value {
    let mut doc = serde_json::Map::new();
    doc.insert("format_version".into(), FORMAT_VERSION.into());
    doc.insert("kind".into(), model.kind().into());
    let mut blocks = serde_json::Map::new();
    match model {
        Model::HGamma(p) => {
            doc.insert("dims".into(), dims_value(&p.dims));
            blocks.insert("h_h12".into(), real_to_value(&p.h_h12));
            blocks.insert("h_h22".into(), real_to_value(&p.h_h22));
            blocks.insert("h_12".into(), real_to_value(&p.h_12));
            blocks.insert("h_13".into(), real_to_value(&p.h_13));
            blocks.insert("h_co".into(), real_to_value(&p.h_co));
            blocks.insert("h_cbo".into(), real_to_value(&p.h_cbo));
            blocks.insert("gamma_h".into(), complex_to_value(&p.gamma_h));
            blocks.insert("gamma_co".into(), complex_to_value(&p.gamma_co));
        }
        Model::Kalman(k) => {
            doc.insert("dims".into(), dims_value(&k.dims));
            blocks.insert("a_h11".into(), real_to_value(&k.a_h11));
            blocks.insert("a_h12".into(), real_to_value(&k.a_h12));
            blocks.insert("a_h22".into(), real_to_value(&k.a_h22));
            blocks.insert("a_12".into(), real_to_value(&k.a_12));
            blocks.insert("a_13".into(), real_to_value(&k.a_13));
            blocks.insert("a_21".into(), real_to_value(&k.a_21));
            blocks.insert("a_31".into(), real_to_value(&k.a_31));
            blocks.insert("a_co".into(), real_to_value(&k.a_co));
            blocks.insert("a_cbo".into(), real_to_value(&k.a_cbo));
            blocks.insert("b_h".into(), real_to_value(&k.b_h));
            blocks.insert("b_co".into(), real_to_value(&k.b_co));
            blocks.insert("c_h".into(), real_to_value(&k.c_h));
            blocks.insert("c_co".into(), real_to_value(&k.c_co));
        }
        Model::Quadrature { system, dims } => {
            doc.insert("n".into(), system.n.into());
            doc.insert("m".into(), system.m.into());
            if let Some(d) = dims {
                doc.insert("dims".into(), dims_value(d));
            }
            blocks.insert("a".into(), real_to_value(&system.a));
            blocks.insert("b".into(), real_to_value(&system.b));
            blocks.insert("c".into(), real_to_value(&system.c));
        }
        Model::Annihilation(s) => {
            doc.insert("n".into(), s.n.into());
            doc.insert("m".into(), s.m.into());
            blocks.insert("a".into(), complex_to_value(&s.a));
            blocks.insert("b".into(), complex_to_value(&s.b));
            blocks.insert("c".into(), complex_to_value(&s.c));
        }
    }
    doc.insert("blocks".into(), Value::Object(blocks));
    Value::Object(doc)
}

/// Writes a model document to disk.
pub fn save_model(path: &std::path::Path, model: &Model) -> Result<()> {
    let text = serde_json::to_string_pretty(&model_to_value(model))
        .map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::matrix_distance;
    use crate::structured::to_complex;

    #[test]
    fn hgamma_document_with_expressions() {
        let text = r#"{
            "format_version": 1,
            "kind": "hgamma",
            "params": {"kappa": 2.0},
            "dims": {"n1": 1, "n2": 0, "n3": 0, "m": 1},
            "blocks": {
                "h_co": [[0, 1], [1, 0]],
                "gamma_co": [
                    [[0, "sqrt(kappa/2)"], [0, "-sqrt(kappa/2)"]],
                    [[0, "-sqrt(kappa/2)"], [0, "sqrt(kappa/2)"]]
                ]
            }
        }"#;
        let loaded = parse_model(text, &BTreeMap::new()).unwrap();
        let Model::HGamma(p) = &loaded.model else { panic!("wrong kind") };
        assert!((p.gamma_co[(0, 0)].im - 1.0).abs() < 1e-15);

        // override substitutes before evaluation
        let mut ovr = BTreeMap::new();
        ovr.insert("kappa".to_string(), 8.0);
        let loaded = parse_model(text, &ovr).unwrap();
        let Model::HGamma(p) = &loaded.model else { panic!("wrong kind") };
        assert!((p.gamma_co[(0, 0)].im - 2.0).abs() < 1e-15);

        // unknown override is rejected
        let mut bad = BTreeMap::new();
        bad.insert("nope".to_string(), 1.0);
        assert!(matches!(
            parse_model(text, &bad),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn missing_dim_field_is_named() {
        let text = r#"{
            "format_version": 1,
            "kind": "hgamma",
            "dims": {"n2": 0, "n3": 0, "m": 1},
            "blocks": {}
        }"#;
        match parse_model(text, &BTreeMap::new()) {
            Err(Error::Schema(f)) => assert_eq!(f, "n1"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_document_reports_position() {
        match parse_model("{\"format_version\": 1,", &BTreeMap::new()) {
            Err(Error::Format(msg)) => assert!(msg.contains("line")),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_is_numerically_identical() {
        let mut rng = crate::random::rng_from_seed(41);
        let dims = crate::random::random_dims(&mut rng, 3, 2);
        let p = crate::random::random_hgamma(&mut rng, dims);
        let model = Model::HGamma(p.clone());
        let text = serde_json::to_string(&model_to_value(&model)).unwrap();
        let loaded = parse_model(&text, &BTreeMap::new()).unwrap();
        let Model::HGamma(q) = &loaded.model else { panic!("wrong kind") };
        assert_eq!(matrix_distance(&to_complex(&p.h_co), &to_complex(&q.h_co)), 0.0);
        assert_eq!(matrix_distance(&p.gamma_co, &q.gamma_co), 0.0);
    }

    #[test]
    fn invariant_violation_is_rejected_at_load() {
        let text = r#"{
            "format_version": 1,
            "kind": "hgamma",
            "dims": {"n1": 1, "n2": 0, "n3": 0, "m": 1},
            "blocks": {
                "h_co": [[0, 1], [2, 0]]
            }
        }"#;
        assert!(parse_model(text, &BTreeMap::new()).is_err());
    }
}
