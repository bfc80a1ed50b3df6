use chronoinfo::events::validate_chain;
use chronoinfo::measures::{entropy, MeasureContext};
use chronoinfo::Violation;
use serde_json::{json, Value};

use crate::document::Document;
use crate::num;

pub struct StageSummary {
    pub index: usize,
    pub tick: u64,
    pub outcomes: usize,
    pub entropy_bits: f64,
}

pub struct ValidateReport {
    pub file: String,
    pub stages: Vec<StageSummary>,
    pub violations: Vec<Violation>,
}

impl ValidateReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        if self.is_ok() {
            out.push_str("OK\n");
            out.push_str(&format!("file: {}\n", self.file));
            for s in &self.stages {
                out.push_str(&format!(
                    "stage {} tick={} outcomes={} H={}\n",
                    s.index,
                    s.tick,
                    s.outcomes,
                    num::fixed(s.entropy_bits)
                ));
            }
        } else {
            out.push_str(&format!("INVALID: {} violation(s)\n", self.violations.len()));
            out.push_str(&format!("file: {}\n", self.file));
            for v in &self.violations {
                out.push_str(&format!(
                    "stage {} {} deviation={} {}\n",
                    v.stage,
                    v.kind,
                    v.deviation.map_or_else(|| "-".to_string(), num::fixed),
                    v.detail
                ));
            }
        }
        out
    }

    pub fn json(&self) -> Value {
        let mut doc = serde_json::Map::new();
        doc.insert("file".into(), json!(self.file));
        doc.insert("status".into(), json!(if self.is_ok() { "OK" } else { "INVALID" }));
        if self.is_ok() {
            let stages: Vec<Value> = self
                .stages
                .iter()
                .map(|s| {
                    json!({
                        "index": s.index,
                        "tick": s.tick,
                        "outcomes": s.outcomes,
                        "entropy_bits": num::json(s.entropy_bits),
                    })
                })
                .collect();
            doc.insert("stages".into(), Value::Array(stages));
        }
        doc.insert("violations".into(), violations_json(&self.violations));
        Value::Object(doc)
    }
}

pub fn violations_json(violations: &[Violation]) -> Value {
    violations
        .iter()
        .map(|v| {
            json!({
                "stage": v.stage,
                "kind": v.kind.name(),
                "deviation": v.deviation.map_or(Value::Null, num::json),
                "detail": v.detail,
            })
        })
        .collect()
}

pub fn validate(doc: &Document) -> ValidateReport {
    let report = validate_chain(&doc.chain);
    let stages = if report.is_ok() {
        let open = MeasureContext::unobserved();
        doc.chain
            .stages()
            .iter()
            .enumerate()
            .map(|(index, s)| StageSummary {
                index,
                tick: s.moment().tick(),
                outcomes: s.len(),
                entropy_bits: entropy(s, &open),
            })
            .collect()
    } else {
        Vec::new()
    };
    ValidateReport {
        file: doc.name.clone(),
        stages,
        violations: report.violations,
    }
}
