//! JSON documents for function specs.
//!
//! ```json
//! { "p": 2, "precision": 3, "kind": "vdp", "B": [1, 2, 2, 2, 4, 4, 4, 4] }
//! ```
//!
//! Integers are written as JSON numbers when they fit in an `i64` and as
//! decimal strings otherwise; both forms are accepted on input.

use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bases::{MahlerTable, VdpTable};
use crate::model::{
    ConstructionForm, ConstructionParams, FunctionSpec, ModelError, SpecKind, ValueTable,
};
use crate::padic::{PadicTrunc, PrimeConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field `{path}`: {message}")]
    Field { path: String, message: String },
}

impl DocumentError {
    fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        DocumentError::Field {
            path: path.into(),
            message: message.into(),
        }
    }

    fn from_json(e: serde_json::Error) -> Self {
        DocumentError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

/// An arbitrary-size integer in a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecimalInt(pub BigInt);

impl From<u64> for DecimalInt {
    fn from(v: u64) -> Self {
        DecimalInt(BigInt::from(v))
    }
}

impl Serialize for DecimalInt {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.0.to_i64() {
            Some(v) => serializer.serialize_i64(v),
            None => serializer.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for DecimalInt {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct DecimalVisitor;

        impl Visitor<'_> for DecimalVisitor {
            type Value = DecimalInt;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer or a decimal string")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<DecimalInt, E> {
                Ok(DecimalInt(v.into()))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<DecimalInt, E> {
                Ok(DecimalInt(v.into()))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<DecimalInt, E> {
                let digits = v.strip_prefix('-').unwrap_or(v);
                if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(E::custom(format!("`{v}` is not a decimal integer")));
                }
                v.parse::<BigInt>()
                    .map(DecimalInt)
                    .map_err(|e| E::custom(e.to_string()))
            }
        }

        deserializer.deserialize_any(DecimalVisitor)
    }
}

/// Seed and algorithm behind a generated document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorInfo {
    pub algorithm: String,
    pub profile: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    p: u32,
    precision: u32,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coeffs: Option<Vec<DecimalInt>>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    b: Option<Vec<DecimalInt>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<Vec<DecimalInt>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<DecimalInt>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d: Option<DecimalInt>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epsilon: Option<DecimalInt>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    form: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g: Option<Box<RawDocument>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<GeneratorInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    report: Option<serde_json::Value>,
}

/// A parsed document: the spec plus optional provenance and report payloads.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecDocument {
    pub spec: FunctionSpec,
    pub generator: Option<GeneratorInfo>,
    pub report: Option<serde_json::Value>,
}

impl SpecDocument {
    pub fn new(spec: FunctionSpec) -> Self {
        Self {
            spec,
            generator: None,
            report: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        let raw: RawDocument = serde_json::from_str(text).map_err(DocumentError::from_json)?;
        let generator = raw.generator.clone();
        let report = raw.report.clone();
        let spec = spec_from_raw(&raw, "")?;
        Ok(Self {
            spec,
            generator,
            report,
        })
    }

    pub fn to_value(&self) -> serde_json::Value {
        let mut raw = spec_to_raw(&self.spec);
        raw.generator = self.generator.clone();
        raw.report = self.report.clone();
        serde_json::to_value(raw).expect("document serialisation is infallible")
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value())
            .expect("document serialisation is infallible");
        s.push('\n');
        s
    }
}

pub fn serialize(spec: &FunctionSpec) -> String {
    SpecDocument::new(spec.clone()).to_json()
}

pub fn deserialize(text: &str) -> Result<FunctionSpec, DocumentError> {
    SpecDocument::parse(text).map(|d| d.spec)
}

fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

fn residue_list(
    list: &[DecimalInt],
    cfg: PrimeConfig,
    path: &str,
) -> Result<Vec<u64>, DocumentError> {
    let modulus = cfg.pow(cfg.precision()).ok_or_else(|| {
        DocumentError::field(path, format!("p^N does not fit in 64 bits ({cfg})"))
    })?;
    if list.len() as u64 != modulus {
        return Err(DocumentError::field(
            path,
            format!("expected p^N = {modulus} entries, got {}", list.len()),
        ));
    }
    list.iter()
        .enumerate()
        .map(|(i, v)| match v.0.to_u64() {
            Some(x) if x < modulus => Ok(x),
            _ => Err(DocumentError::field(
                format!("{path}[{i}]"),
                format!("{} is not a residue in [0, {modulus})", v.0),
            )),
        })
        .collect()
}

fn required<'a, T>(value: &'a Option<T>, path: String, kind: &str) -> Result<&'a T, DocumentError> {
    value
        .as_ref()
        .ok_or_else(|| DocumentError::field(path, format!("required for kind `{kind}`")))
}

fn spec_from_raw(raw: &RawDocument, prefix: &str) -> Result<FunctionSpec, DocumentError> {
    if !crate::padic::is_prime(raw.p as u64) {
        return Err(DocumentError::field(
            join(prefix, "p"),
            format!("{} is not a prime", raw.p),
        ));
    }
    let cfg = PrimeConfig::new(raw.p, raw.precision)
        .map_err(|e| DocumentError::field(join(prefix, "precision"), e.to_string()))?;

    let allowed: &[&str] = match raw.kind.as_str() {
        "polynomial" => &["coeffs"],
        "vdp" => &["B"],
        "mahler" => &["a"],
        "value-table" => &["values"],
        "construction" => &["d", "epsilon", "form", "g"],
        other => {
            return Err(DocumentError::field(
                join(prefix, "kind"),
                format!("unknown kind `{other}`"),
            ))
        }
    };
    let present = [
        ("coeffs", raw.coeffs.is_some()),
        ("B", raw.b.is_some()),
        ("a", raw.a.is_some()),
        ("values", raw.values.is_some()),
        ("d", raw.d.is_some()),
        ("epsilon", raw.epsilon.is_some()),
        ("form", raw.form.is_some()),
        ("g", raw.g.is_some()),
    ];
    if let Some((name, _)) = present
        .iter()
        .find(|(name, set)| *set && !allowed.contains(name))
    {
        return Err(DocumentError::field(
            join(prefix, name),
            format!("not allowed for kind `{}`", raw.kind),
        ));
    }
    if !prefix.is_empty() && (raw.generator.is_some() || raw.report.is_some()) {
        return Err(DocumentError::field(
            prefix,
            "nested documents may not carry `generator` or `report`",
        ));
    }

    let model_err =
        |path: String| move |e: ModelError| DocumentError::field(path.clone(), e.to_string());
    let kind = raw.kind.as_str();
    match kind {
        "polynomial" => {
            let coeffs = required(&raw.coeffs, join(prefix, "coeffs"), kind)?;
            Ok(FunctionSpec::polynomial(
                cfg,
                coeffs.iter().map(|c| c.0.clone()).collect(),
            ))
        }
        "vdp" => {
            let path = join(prefix, "B");
            let list = residue_list(required(&raw.b, path.clone(), kind)?, cfg, &path)?;
            let table =
                VdpTable::new(cfg, list).map_err(|e| DocumentError::field(path, e.to_string()))?;
            Ok(FunctionSpec::vdp(table))
        }
        "mahler" => {
            let path = join(prefix, "a");
            let list = residue_list(required(&raw.a, path.clone(), kind)?, cfg, &path)?;
            let table = MahlerTable::new(cfg, list)
                .map_err(|e| DocumentError::field(path, e.to_string()))?;
            Ok(FunctionSpec::mahler(table))
        }
        "value-table" => {
            let path = join(prefix, "values");
            let list = residue_list(required(&raw.values, path.clone(), kind)?, cfg, &path)?;
            let table = ValueTable::new(cfg, list)
                .map_err(|e| DocumentError::field(path, e.to_string()))?;
            Ok(FunctionSpec::values(table))
        }
        _ => {
            let d = required(&raw.d, join(prefix, "d"), kind)?;
            let epsilon = required(&raw.epsilon, join(prefix, "epsilon"), kind)?;
            let form_name = required(&raw.form, join(prefix, "form"), kind)?;
            let form = ConstructionForm::from_name(form_name).ok_or_else(|| {
                DocumentError::field(
                    join(prefix, "form"),
                    format!("unknown construction form `{form_name}`"),
                )
            })?;
            let g_raw = required(&raw.g, join(prefix, "g"), kind)?;
            let g = spec_from_raw(g_raw, &join(prefix, "g"))?;
            let params = ConstructionParams {
                d: PadicTrunc::from_bigint(&d.0, cfg),
                epsilon: PadicTrunc::from_bigint(&epsilon.0, cfg),
                form,
            };
            let path = if prefix.is_empty() {
                "kind".to_string()
            } else {
                prefix.to_string()
            };
            FunctionSpec::new(
                cfg,
                SpecKind::Construction {
                    params,
                    g: Box::new(g),
                },
            )
            .map_err(model_err(path))
        }
    }
}

fn residues(list: &[u64]) -> Vec<DecimalInt> {
    list.iter().map(|&v| DecimalInt::from(v)).collect()
}

fn padic_int(x: &PadicTrunc) -> DecimalInt {
    DecimalInt(BigInt::from(x.to_biguint()))
}

fn spec_to_raw(spec: &FunctionSpec) -> RawDocument {
    let cfg = spec.cfg();
    let mut raw = RawDocument {
        p: cfg.p(),
        precision: cfg.precision(),
        kind: spec.kind().name().to_string(),
        coeffs: None,
        b: None,
        a: None,
        values: None,
        d: None,
        epsilon: None,
        form: None,
        g: None,
        generator: None,
        report: None,
    };
    match spec.kind() {
        SpecKind::Polynomial(c) => {
            raw.coeffs = Some(c.iter().map(|c| DecimalInt(c.clone())).collect())
        }
        SpecKind::Vdp(t) => raw.b = Some(residues(t.coeffs())),
        SpecKind::Mahler(t) => raw.a = Some(residues(t.coeffs())),
        SpecKind::Values(v) => raw.values = Some(residues(v.values())),
        SpecKind::Construction { params, g } => {
            raw.d = Some(padic_int(&params.d));
            raw.epsilon = Some(padic_int(&params.epsilon));
            raw.form = Some(params.form.name().to_string());
            raw.g = Some(Box::new(spec_to_raw(g)));
        }
    }
    raw
}
