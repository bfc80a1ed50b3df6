use chronoinfo::blackhole::{conservation_check, conservation_without_extension, extend_with_blackhole};
use chronoinfo::frames::{
    entropy_increase_verdict, entropy_reduction_verdict, recall_entropy, LawVerdict, RecallForm,
};
use chronoinfo::oracle::{run_oracle, OracleConfig, OracleReport};
use chronoinfo::{Error, ProcessChain};
use serde_json::{json, Map, Value};

use crate::document::Document;
use crate::num;

/// Arity bound of random mode.
pub const RANDOM_ARITY_BOUND: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Holds,
    Fails,
    OutOfHypothesis,
}

impl Status {
    fn name(self) -> &'static str {
        match self {
            Status::Holds => "HOLDS",
            Status::Fails => "FAILS",
            Status::OutOfHypothesis => "OUT_OF_HYPOTHESIS",
        }
    }
}

pub struct LawRow {
    pub scope: String,
    pub law: &'static str,
    pub status: Status,
    pub equality: Option<bool>,
    pub values: Vec<(&'static str, f64)>,
    pub note: String,
}

impl LawRow {
    fn outside(scope: &str, law: &'static str, note: impl Into<String>) -> Self {
        LawRow {
            scope: scope.to_string(),
            law,
            status: Status::OutOfHypothesis,
            equality: None,
            values: Vec::new(),
            note: note.into(),
        }
    }

    fn checked(scope: &str, law: &'static str, holds: bool) -> Self {
        LawRow {
            scope: scope.to_string(),
            law,
            status: if holds { Status::Holds } else { Status::Fails },
            equality: None,
            values: Vec::new(),
            note: String::new(),
        }
    }
}

pub struct LawsReport {
    pub file: String,
    pub rows: Vec<LawRow>,
}

pub fn verify(doc: &Document) -> Result<LawsReport, Error> {
    let chain = &doc.chain;
    let mut rows = Vec::new();
    for i in 0..chain.kernels().len() {
        let scope = format!("segment {i}");
        let segment = segment(chain, i);
        let kernel = &chain.kernels()[i];
        let class = kernel.class();

        if kernel.is_deterministic() {
            let v = entropy_reduction_verdict(&segment)?;
            rows.push(verdict_row(&scope, "T1", &v));
            let mut eq = LawRow::checked(&scope, "T1.dec", v.decomposition.holds);
            eq.values = vec![
                ("H(X)", v.decomposition.lhs_bits),
                ("H(Y)+H(X|Y)", v.decomposition.rhs_bits),
                ("H(X|Y)", v.conditional_bits),
            ];
            rows.push(eq);
            rows.push(bijection_row(&scope, "Inf1.1", &v));
            rows.push(recall_row(&scope, &segment)?);
        } else {
            let note = format!("kernel is {class}, not deterministic");
            for law in ["T1", "T1.dec", "Inf1.1", "Inf1.2"] {
                rows.push(LawRow::outside(&scope, law, note.clone()));
            }
        }

        if kernel.is_refinement() {
            let v = entropy_increase_verdict(&segment)?;
            rows.push(verdict_row(&scope, "T2", &v));
            rows.push(bijection_row(&scope, "Inf2.1", &v));
            let mut dec = LawRow::checked(&scope, "Inf2.2", v.decomposition.holds);
            dec.values = vec![
                ("H(Y)", v.decomposition.lhs_bits),
                ("H(X)+H(Y|X)", v.decomposition.rhs_bits),
                ("H(Y|X)", v.conditional_bits),
            ];
            rows.push(dec);
        } else {
            let note = format!("kernel is {class}, not a refinement");
            for law in ["T2", "Inf2.1", "Inf2.2"] {
                rows.push(LawRow::outside(&scope, law, note.clone()));
            }
        }
    }

    if chain.realized().is_some() {
        let extended = extend_with_blackhole(chain)?;
        let c = conservation_check(&extended);
        let raw_end = match conservation_without_extension(chain) {
            Ok(r) => r.end_bits,
            Err(Error::ImpossibleRealization { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        let mut row = LawRow::checked("chain", "T3", c.conserved);
        row.values = vec![
            ("I(start)", c.start_bits),
            ("I(end)", c.end_bits),
            ("I(end)_unextended", raw_end),
        ];
        if c.extrapolated {
            row.note = "start stage is not a singleton".into();
        }
        rows.push(row);
    } else {
        rows.push(LawRow::outside("chain", "T3", "no realized path"));
    }

    Ok(LawsReport {
        file: doc.name.clone(),
        rows,
    })
}

/// Stages `i` and `i + 1` with kernel `i` as a chain of their own.
fn segment(chain: &ProcessChain, i: usize) -> ProcessChain {
    let realized = chain.realized().map(|r| r[i..=i + 1].to_vec());
    ProcessChain::from_parts(
        chain.stages()[i..=i + 1].to_vec(),
        vec![chain.kernels()[i].clone()],
        realized,
    )
    .with_artificial_variation(chain.artificial_variation())
}

fn verdict_row(scope: &str, law: &'static str, v: &LawVerdict) -> LawRow {
    let mut row = LawRow::checked(scope, law, v.holds);
    row.equality = Some(v.equality);
    row.values = vec![
        ("H(X)", v.rhs_bits),
        ("H(Y)", v.lhs_bits),
        ("framed_H(Y)", v.framed_lhs_bits),
        ("framed_H(X)", v.framed_rhs_bits),
    ];
    if v.equality {
        row.note = format!("equality: {}", v.equality_reason.name());
    }
    row
}

fn bijection_row(scope: &str, law: &'static str, v: &LawVerdict) -> LawRow {
    let mut row = LawRow::checked(scope, law, v.equality_matches_bijection());
    row.equality = Some(v.equality);
    row.note = format!("bijective={}", yes(v.bijective));
    row
}

fn recall_row(scope: &str, segment: &ProcessChain) -> Result<LawRow, Error> {
    let mut row = match recall_entropy(segment, RecallForm::Expected) {
        Ok(h) => {
            let mut row = LawRow::checked(scope, "Inf1.2", true);
            row.values.push(("H(X|Y)", h));
            row
        }
        Err(Error::IdentityViolation { gap, .. }) => {
            let mut row = LawRow::checked(scope, "Inf1.2", false);
            row.values.push(("gap", gap));
            row
        }
        Err(e) => return Err(e),
    };
    if segment.realized().is_some() {
        row.values
            .push(("H(X|Y=y)", recall_entropy(segment, RecallForm::Realized)?));
    }
    Ok(row)
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn flag(b: Option<bool>) -> &'static str {
    b.map_or("-", yes)
}

pub struct Counts {
    pub hold: usize,
    pub fail: usize,
    pub outside: usize,
}

impl LawsReport {
    pub fn counts(&self) -> Counts {
        let n = |s| self.rows.iter().filter(|r| r.status == s).count();
        Counts {
            hold: n(Status::Holds),
            fail: n(Status::Fails),
            outside: n(Status::OutOfHypothesis),
        }
    }

    pub fn passed(&self) -> bool {
        self.counts().fail == 0
    }

    pub fn text(&self) -> String {
        let mut o = format!("file: {}\n", self.file);
        o.push_str(&format!(
            "{:<10} {:<7} {:<18} {:<6} {:<8} {}\n",
            "scope", "law", "status", "holds", "equality", "values"
        ));
        for r in &self.rows {
            let holds = match r.status {
                Status::Holds => "yes",
                Status::Fails => "no",
                Status::OutOfHypothesis => "-",
            };
            let mut values: Vec<String> = r
                .values
                .iter()
                .map(|(k, v)| format!("{k}={}", num::fixed(*v)))
                .collect();
            if !r.note.is_empty() {
                values.push(format!("({})", r.note));
            }
            let line = format!(
                "{:<10} {:<7} {:<18} {:<6} {:<8} {}",
                r.scope,
                r.law,
                r.status.name(),
                holds,
                flag(r.equality),
                values.join(" ")
            );
            o.push_str(line.trim_end());
            o.push('\n');
        }
        let c = self.counts();
        o.push_str(&format!(
            "summary: rows={} hold={} fail={} out_of_hypothesis={} result={}\n",
            self.rows.len(),
            c.hold,
            c.fail,
            c.outside,
            if self.passed() { "PASS" } else { "FAIL" }
        ));
        o
    }

    pub fn json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let values: Map<String, Value> = r
                    .values
                    .iter()
                    .map(|(k, v)| (k.to_string(), num::json(*v)))
                    .collect();
                json!({
                    "scope": r.scope,
                    "law": r.law,
                    "status": r.status.name(),
                    "holds": match r.status {
                        Status::Holds => Value::Bool(true),
                        Status::Fails => Value::Bool(false),
                        Status::OutOfHypothesis => Value::Null,
                    },
                    "equality": r.equality,
                    "values": values,
                    "note": r.note,
                })
            })
            .collect();
        let c = self.counts();
        json!({
            "file": self.file,
            "rows": rows,
            "summary": {
                "rows": self.rows.len(),
                "hold": c.hold,
                "fail": c.fail,
                "out_of_hypothesis": c.outside,
                "result": if self.passed() { "PASS" } else { "FAIL" },
            },
        })
    }
}

pub struct RandomReport {
    pub seed: u64,
    pub report: OracleReport,
}

pub fn verify_random(trials: u64, seed: u64) -> RandomReport {
    RandomReport {
        seed,
        report: run_oracle(&OracleConfig::new(RANDOM_ARITY_BOUND, trials, seed)),
    }
}

impl RandomReport {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }

    pub fn text(&self) -> String {
        let r = &self.report;
        let mut o = format!(
            "random: trials={} seed={} arity_bound={}\n",
            r.trials, self.seed, RANDOM_ARITY_BOUND
        );
        o.push_str(&format!("T1 checked={} held={}\n", r.reduction_checked, r.reduction_held));
        o.push_str(&format!("T2 checked={} held={}\n", r.increase_checked, r.increase_held));
        o.push_str(&format!(
            "equalities={} bijections={} unresolved_equalities={}\n",
            r.equalities, r.bijections, r.unresolved_equalities
        ));
        o.push_str(&format!("T3 checked={} conserved={}\n", r.conservation_checked, r.conserved));
        o.push_str(&format!(
            "oracle max_divergence={} divergences={}\n",
            num::fixed(r.max_divergence),
            r.divergences.len()
        ));
        for d in r.divergences.iter().take(20) {
            o.push_str(&format!(
                "  divergence trial={} {} engine={} oracle={}\n",
                d.trial,
                d.quantity,
                num::fixed(d.engine),
                num::fixed(d.oracle)
            ));
        }
        for f in r.failures.iter().take(20) {
            o.push_str(&format!("  failure trial={} {} {}\n", f.trial, f.law, f.detail));
        }
        o.push_str(&format!(
            "summary: trials={} law_failures={} divergences={} result={}\n",
            r.trials,
            r.failures.len(),
            r.divergences.len(),
            if self.passed() { "PASS" } else { "FAIL" }
        ));
        o
    }

    pub fn json(&self) -> Value {
        let r = &self.report;
        let divergences: Vec<Value> = r
            .divergences
            .iter()
            .map(|d| {
                json!({
                    "trial": d.trial,
                    "quantity": d.quantity,
                    "engine": num::json(d.engine),
                    "oracle": num::json(d.oracle),
                })
            })
            .collect();
        let failures: Vec<Value> = r
            .failures
            .iter()
            .map(|f| json!({"trial": f.trial, "law": f.law, "detail": f.detail}))
            .collect();
        json!({
            "mode": "random",
            "trials": r.trials,
            "seed": self.seed,
            "arity_bound": RANDOM_ARITY_BOUND,
            "T1": {"checked": r.reduction_checked, "held": r.reduction_held},
            "T2": {"checked": r.increase_checked, "held": r.increase_held},
            "equalities": r.equalities,
            "bijections": r.bijections,
            "unresolved_equalities": r.unresolved_equalities,
            "T3": {"checked": r.conservation_checked, "conserved": r.conserved},
            "max_divergence": num::json(r.max_divergence),
            "divergences": divergences,
            "failures": failures,
            "result": if self.passed() { "PASS" } else { "FAIL" },
        })
    }
}
