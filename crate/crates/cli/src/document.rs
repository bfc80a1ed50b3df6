//! Chain specification files.
//!
//! ```json
//! {
//!   "version": 1,
//!   "stages": [
//!     { "tick": 0, "outcomes": { "x1": 1 } },
//!     { "tick": 1, "outcomes": { "y1": 0.2, "y2": "4/5" } }
//!   ],
//!   "kernels": [ { "from": ["x1"], "to": ["y1", "y2"], "rows": [[0.2, 0.8]] } ],
//!   "realized": ["x1", "y1"],
//!   "frame": { "anchor_stage": 1 }
//! }
//! ```
//!
//! Outcome order is declaration order. Kernel axes may be labeled, in which case
//! rows and columns are matched to stage outcomes by label; unlabeled kernels are
//! read positionally. Probabilities are JSON numbers, decimal strings or `"a/b"`.
//!
//! Loading only checks the file format. Chain invariants are left to
//! [`chronoinfo::events::validate_chain`] so that they surface as violations.

use std::fmt;
use std::path::Path;

use chronoinfo::{OperatorKernel, ProcessChain, TimeMoment, TimeMomentSet};
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    /// Syntax or shape errors; the message carries line and column.
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("{path}: field `{field}`: {message}")]
    Field {
        path: String,
        field: String,
        message: String,
    },
}

#[derive(Debug, Clone)]
pub struct Document {
    pub name: String,
    pub description: Option<String>,
    pub chain: ProcessChain,
    pub frame: Option<usize>,
}

pub fn load(path: &Path) -> Result<Document, LoadError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: shown.clone(),
        source,
    })?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| shown.clone());
    parse(&name, &text)
}

/// Parses a document; `name` is used in diagnostics and reports.
pub fn parse(name: &str, text: &str) -> Result<Document, LoadError> {
    let raw: RawDocument = serde_json::from_str(text).map_err(|e| LoadError::Format {
        path: name.to_string(),
        message: e.to_string(),
    })?;
    let field = |field: String, message: String| LoadError::Field {
        path: name.to_string(),
        field,
        message,
    };
    if raw.version != FORMAT_VERSION {
        return Err(field(
            "version".into(),
            format!("unsupported version {}, expected {FORMAT_VERSION}", raw.version),
        ));
    }

    let stages: Vec<TimeMomentSet> = raw
        .stages
        .into_iter()
        .map(|s| TimeMomentSet::unchecked(TimeMoment::new(s.tick), s.outcomes.0))
        .collect();

    let kernels = raw
        .kernels
        .into_iter()
        .enumerate()
        .map(|(i, k)| resolve_kernel(i, k, &stages).map_err(|(f, m)| field(f, m)))
        .collect::<Result<Vec<_>, _>>()?;

    let chain = ProcessChain::from_parts(stages, kernels, raw.realized)
        .with_artificial_variation(raw.artificial_variation);
    Ok(Document {
        name: name.to_string(),
        description: raw.description,
        chain,
        frame: raw.frame.map(|f| f.anchor_stage),
    })
}

fn resolve_kernel(
    i: usize,
    raw: RawKernel,
    stages: &[TimeMomentSet],
) -> Result<OperatorKernel, (String, String)> {
    let mut rows: Vec<Vec<f64>> = raw
        .rows
        .into_iter()
        .map(|r| r.into_iter().map(|p| p.0).collect())
        .collect();
    let (src, dst) = (stages.get(i), stages.get(i + 1));

    if let Some(from) = &raw.from {
        let at = format!("kernels[{i}].from");
        if from.len() != rows.len() {
            return Err((at, format!("{} labels for {} rows", from.len(), rows.len())));
        }
        if let Some(src) = src.filter(|s| s.len() == from.len()) {
            let order = match_labels(from, src, i).map_err(|m| (at, m))?;
            rows = order.iter().map(|&k| rows[k].clone()).collect();
        }
    }

    if let Some(to) = &raw.to {
        let at = format!("kernels[{i}].to");
        if let Some(r) = rows.iter().position(|r| r.len() != to.len()) {
            return Err((
                at,
                format!("{} labels but row {r} has {} entries", to.len(), rows[r].len()),
            ));
        }
        if let Some(dst) = dst.filter(|d| d.len() == to.len()) {
            let order = match_labels(to, dst, i + 1).map_err(|m| (at, m))?;
            rows = rows
                .into_iter()
                .map(|r| order.iter().map(|&k| r[k]).collect())
                .collect();
        }
    }

    let width = rows.first().map_or(0, Vec::len);
    let labels = match (dst, &raw.to) {
        (Some(d), _) if d.len() == width => d.labels().map(str::to_string).collect(),
        (_, Some(to)) => to.clone(),
        _ => (1..=width).map(|j| format!("y{j}")).collect(),
    };
    Ok(OperatorKernel::unchecked(rows, labels))
}

/// For each outcome of `stage`, its position among `given`.
fn match_labels(given: &[String], stage: &TimeMomentSet, index: usize) -> Result<Vec<usize>, String> {
    if let Some(g) = given.iter().find(|g| stage.index_of(g).is_none()) {
        return Err(format!("label `{g}` is not an outcome of stage {index}"));
    }
    stage
        .labels()
        .map(|l| {
            given
                .iter()
                .position(|g| g == l)
                .ok_or_else(|| format!("outcome `{l}` of stage {index} is not listed"))
        })
        .collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    version: u64,
    #[serde(default)]
    description: Option<String>,
    stages: Vec<RawStage>,
    #[serde(default)]
    kernels: Vec<RawKernel>,
    #[serde(default)]
    realized: Option<Vec<String>>,
    #[serde(default)]
    frame: Option<RawFrame>,
    #[serde(default)]
    artificial_variation: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStage {
    tick: u64,
    outcomes: Outcomes,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    #[serde(default)]
    from: Option<Vec<String>>,
    #[serde(default)]
    to: Option<Vec<String>>,
    rows: Vec<Vec<Probability>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    anchor_stage: usize,
}

/// Label/probability pairs in file order. Repeated labels are kept so that
/// validation can report them.
#[derive(Debug)]
struct Outcomes(Vec<(String, f64)>);

impl<'de> Deserialize<'de> for Outcomes {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct OutcomesVisitor;

        impl<'de> Visitor<'de> for OutcomesVisitor {
            type Value = Outcomes;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping outcome labels to probabilities")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Outcomes, A::Error> {
                let mut out = Vec::new();
                while let Some((label, p)) = map.next_entry::<String, Probability>()? {
                    out.push((label, p.0));
                }
                Ok(Outcomes(out))
            }
        }

        d.deserialize_map(OutcomesVisitor)
    }
}

#[derive(Debug, Clone, Copy)]
struct Probability(f64);

impl<'de> Deserialize<'de> for Probability {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        // Going through `Value` keeps this independent of how the JSON backend
        // represents numbers internally.
        match Value::deserialize(d)? {
            Value::Number(n) => n
                .as_f64()
                .map(Probability)
                .ok_or_else(|| de::Error::custom(format!("number {n} is out of range"))),
            Value::String(s) => parse_probability(&s).map(Probability).map_err(de::Error::custom),
            other => Err(de::Error::custom(format!(
                "expected a probability (number or \"a/b\" string), found {}",
                kind(&other)
            ))),
        }
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

/// `"0.25"` or `"1/4"`.
pub fn parse_probability(s: &str) -> Result<f64, String> {
    let bad = || format!("invalid probability \"{s}\"");
    let number = |t: &str| -> Result<f64, String> {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(bad)
    };
    match s.split_once('/') {
        Some((num, den)) => {
            let (num, den) = (number(num)?, number(den)?);
            if den == 0.0 {
                return Err(format!("zero denominator in \"{s}\""));
            }
            Ok(num / den)
        }
        None => number(s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chronoinfo::events::validate_chain;

    #[test]
    fn rational_strings() {
        assert_eq!(parse_probability("1/4").unwrap(), 0.25);
        assert_eq!(parse_probability(" 2 / 3 ").unwrap(), 2.0 / 3.0);
        assert_eq!(parse_probability("0.5").unwrap(), 0.5);
        assert!(parse_probability("1/0").is_err());
        assert!(parse_probability("half").is_err());
        assert!(parse_probability("inf").is_err());
    }

    #[test]
    fn outcome_order_is_file_order() {
        let doc = parse(
            "t",
            r#"{"version":1,"stages":[{"tick":3,"outcomes":{"b":"1/3","a":"2/3"}}]}"#,
        )
        .unwrap();
        let labels: Vec<_> = doc.chain.stages()[0].labels().collect();
        assert_eq!(labels, ["b", "a"]);
        assert!(validate_chain(&doc.chain).is_ok());
    }

    #[test]
    fn labeled_axes_are_reordered() {
        let doc = parse(
            "t",
            r#"{"version":1,
                "stages":[{"tick":0,"outcomes":{"x1":0.5,"x2":0.5}},
                          {"tick":1,"outcomes":{"y1":0.25,"y2":0.75}}],
                "kernels":[{"from":["x2","x1"],"to":["y2","y1"],"rows":[[1,0],[0.5,0.5]]}]}"#,
        )
        .unwrap();
        let k = &doc.chain.kernels()[0];
        assert_eq!(k.rows(), &[vec![0.5, 0.5], vec![0.0, 1.0]]);
        assert_eq!(k.target_labels(), ["y1", "y2"]);
        assert!(validate_chain(&doc.chain).is_ok());
    }

    #[test]
    fn repeated_labels_reach_validation() {
        let doc = parse(
            "t",
            r#"{"version":1,"stages":[{"tick":0,"outcomes":{"a":0.5,"a":0.5}}]}"#,
        )
        .unwrap();
        let report = validate_chain(&doc.chain);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == chronoinfo::ViolationKind::DuplicateLabel));
    }

    #[test]
    fn diagnostics_name_the_problem() {
        let err = parse("t", "{\"version\":1,\n\"stages\":[{\"tick\":0,\"outcome\":{}}]}")
            .unwrap_err()
            .to_string();
        assert!(err.contains("unknown field `outcome`") && err.contains("line 2"), "{err}");

        let err = parse("t", r#"{"version":2,"stages":[]}"#).unwrap_err().to_string();
        assert!(err.contains("field `version`"), "{err}");

        let err = parse(
            "t",
            r#"{"version":1,
                "stages":[{"tick":0,"outcomes":{"x":1}},{"tick":1,"outcomes":{"y":1}}],
                "kernels":[{"to":["q"],"rows":[[1]]}]}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("kernels[0].to") && err.contains("`q`"), "{err}");

        let err = parse("t", r#"{"version":1,"stages":[{"tick":0,"outcomes":{"x":true}}]}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("a boolean") && err.contains("line 1"), "{err}");
    }
}
