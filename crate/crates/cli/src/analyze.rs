use std::fs;
use std::io;
use std::path::Path;

use chronoinfo::blackhole::{
    classify_realized, conservation_check, conservation_without_extension, extend_with_blackhole,
    BlackHoleEntry, ConservationReport, InformationVolume, RealizedTransition, VariationReport,
};
use chronoinfo::events::independence_report;
use chronoinfo::frames::{apply_frame, Renormalized, UnifiedTimeMeasure};
use chronoinfo::measures::{
    conditional_entropy, entropy, knowledge_step_profile, mutual_information_volume, Analytic,
    Direction, KnowledgeStatus, MeasureContext,
};
use chronoinfo::{Error, KernelClass, ObservationWindow, ProcessChain, TimeMoment};
use serde_json::{json, Map, Value};

use crate::document::Document;
use crate::num;

pub struct FrameInfo {
    pub anchor_stage: usize,
    pub anchor_tick: u64,
    pub window: String,
    /// Realized events were collapsed onto certainty.
    pub collapsed: bool,
}

pub struct OutcomeRow {
    pub label: String,
    pub probability: f64,
    pub framed_probability: f64,
    pub information: InformationVolume,
}

pub struct StageRow {
    pub index: usize,
    pub tick: u64,
    pub status: KnowledgeStatus,
    pub realized: Option<String>,
    pub entropy_bits: f64,
    pub declared_entropy_bits: f64,
    pub outcomes: Vec<OutcomeRow>,
}

pub struct EffectiveEntry {
    pub source: String,
    pub target: String,
    pub effective: f64,
    pub declared: f64,
}

pub struct TransitionRow {
    pub index: usize,
    pub class: KernelClass,
    pub independent: bool,
    pub forward_bits: f64,
    pub backward_bits: f64,
    pub mutual_information: Analytic<f64>,
    pub effective: Vec<EffectiveEntry>,
    pub renormalized: Vec<Renormalized>,
    pub variation: Option<VariationReport>,
}

pub struct BlackHoleSection {
    pub transitions: Vec<RealizedTransition>,
    pub ledger: Vec<BlackHoleEntry>,
    pub conservation: ConservationReport,
    /// `None` when some realized transition has probability zero, so that the
    /// unextended end volume is infinite.
    pub raw: Option<ConservationReport>,
}

/// A value sampled as the window anchor sweeps over the time axis.
pub struct Series {
    pub stage: usize,
    pub label: Option<String>,
    pub tick: u64,
    pub points: Vec<(u64, f64)>,
}

pub struct AnalyzeReport {
    pub file: String,
    pub description: Option<String>,
    pub threshold: f64,
    pub frame: Option<FrameInfo>,
    pub stages: Vec<StageRow>,
    pub transitions: Vec<TransitionRow>,
    pub black_hole: Option<BlackHoleSection>,
    pub step_effect: Vec<Series>,
    /// Gated entropy of every stage over the same sweep; written to plot files only.
    pub entropy_trajectory: Vec<Series>,
}

/// Runs the analysis on a chain already known to be valid. `anchor` must be a
/// stage index in range.
pub fn analyze(doc: &Document, anchor: Option<usize>, threshold: f64) -> Result<AnalyzeReport, Error> {
    let chain = &doc.chain;
    let frame = anchor
        .map(|a| {
            UnifiedTimeMeasure::at_stage(chain, a).map(|f| {
                if chain.realized().is_some() {
                    f
                } else {
                    f.without_renormalization()
                }
            })
        })
        .transpose()?;

    let (stages, effective_rows, renormalized) = match &frame {
        Some(f) => {
            let framed = apply_frame(chain, f)?;
            let stages = framed
                .stages
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let declared = &chain.stages()[i];
                    let known = s.status == KnowledgeStatus::Knowledge;
                    StageRow {
                        index: i,
                        tick: s.moment.tick(),
                        status: s.status,
                        realized: s.realized.clone(),
                        entropy_bits: s.entropy_bits,
                        declared_entropy_bits: entropy(declared, &MeasureContext::unobserved()),
                        outcomes: declared
                            .outcomes()
                            .iter()
                            .zip(&s.distribution)
                            .map(|(o, (_, q))| OutcomeRow {
                                label: o.label.clone(),
                                probability: o.probability,
                                framed_probability: *q,
                                information: if known {
                                    InformationVolume::Finite(0.0)
                                } else {
                                    InformationVolume::of_probability(*q)
                                },
                            })
                            .collect(),
                    }
                })
                .collect();
            (stages, framed.effective_rows, framed.renormalized)
        }
        None => {
            let open = MeasureContext::unobserved();
            let stages = chain
                .stages()
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let h = entropy(s, &open);
                    StageRow {
                        index: i,
                        tick: s.moment().tick(),
                        status: KnowledgeStatus::Uncertain,
                        realized: chain.realized_label(i).map(str::to_string),
                        entropy_bits: h,
                        declared_entropy_bits: h,
                        outcomes: s
                            .outcomes()
                            .iter()
                            .map(|o| OutcomeRow {
                                label: o.label.clone(),
                                probability: o.probability,
                                framed_probability: o.probability,
                                information: InformationVolume::of_probability(o.probability),
                            })
                            .collect(),
                    }
                })
                .collect();
            let rows = chain.kernels().iter().map(|k| k.rows().to_vec()).collect();
            (stages, rows, Vec::new())
        }
    };

    let variations = match chain.realized() {
        Some(_) => Some(classify_realized(chain, threshold)?),
        None => None,
    };

    let mut transitions = Vec::with_capacity(chain.kernels().len());
    for (i, kernel) in chain.kernels().iter().enumerate() {
        let x = &chain.stages()[i];
        let y = &chain.stages()[i + 1];
        let independence = independence_report(x, kernel)?;
        let mut effective = Vec::new();
        for (a, (row, declared)) in effective_rows[i].iter().zip(kernel.rows()).enumerate() {
            for (b, (&e, &d)) in row.iter().zip(declared).enumerate() {
                if e > 0.0 || d > 0.0 {
                    effective.push(EffectiveEntry {
                        source: x.outcomes()[a].label.clone(),
                        target: y.outcomes()[b].label.clone(),
                        effective: e,
                        declared: d,
                    });
                }
            }
        }
        transitions.push(TransitionRow {
            index: i,
            class: kernel.class(),
            independent: independence.independent(),
            forward_bits: conditional_entropy(x, kernel, Direction::Forward)?,
            backward_bits: conditional_entropy(x, kernel, Direction::Backward)?,
            mutual_information: mutual_information_volume(x, kernel)?,
            effective,
            renormalized: renormalized.iter().filter(|r| r.kernel == i).cloned().collect(),
            variation: variations.as_ref().map(|v| v[i]),
        });
    }

    let black_hole = match chain.realized() {
        Some(_) => {
            let extended = extend_with_blackhole(chain)?;
            let raw = match conservation_without_extension(chain) {
                Ok(r) => Some(r),
                Err(Error::ImpossibleRealization { .. }) => None,
                Err(e) => return Err(e),
            };
            Some(BlackHoleSection {
                transitions: extended.transitions().to_vec(),
                ledger: extended.ledger().to_vec(),
                conservation: conservation_check(&extended),
                raw,
            })
        }
        None => None,
    };

    let sweep = sweep(chain);
    let mut step_effect = Vec::new();
    let mut entropy_trajectory = Vec::new();
    for (i, stage) in chain.stages().iter().enumerate() {
        let moment = stage.moment();
        if let Some(label) = chain.realized_label(i) {
            let points = knowledge_step_profile(moment, &sweep)?
                .into_iter()
                .map(|(t, v)| (t.tick(), v))
                .collect();
            step_effect.push(Series {
                stage: i,
                label: Some(label.to_string()),
                tick: moment.tick(),
                points,
            });
        }
        let points = sweep
            .iter()
            .map(|&t| (t.tick(), entropy(stage, &MeasureContext::new(ObservationWindow::up_to(t)))))
            .collect();
        entropy_trajectory.push(Series {
            stage: i,
            label: None,
            tick: moment.tick(),
            points,
        });
    }

    Ok(AnalyzeReport {
        file: doc.name.clone(),
        description: doc.description.clone(),
        threshold,
        frame: frame.and_then(|f| {
            f.anchor_stage().map(|a| FrameInfo {
                anchor_stage: a,
                anchor_tick: f.window().anchor().tick(),
                window: f.window().to_string(),
                collapsed: f.renormalize(),
            })
        }),
        stages,
        transitions,
        black_hole,
        step_effect,
        entropy_trajectory,
    })
}

/// Anchors at which any knowledge gate of the chain can change: the tick before
/// the first stage, every stage tick and the tick after the last.
fn sweep(chain: &ProcessChain) -> Vec<TimeMoment> {
    let ticks: Vec<u64> = chain.stages().iter().map(|s| s.moment().tick()).collect();
    let mut out = Vec::with_capacity(ticks.len() + 2);
    if let Some(&first) = ticks.first() {
        if first > 0 {
            out.push(first - 1);
        }
    }
    out.extend(&ticks);
    if let Some(&last) = ticks.last() {
        out.push(last.saturating_add(1));
    }
    out.dedup();
    out.into_iter().map(TimeMoment::new).collect()
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

impl AnalyzeReport {
    pub fn text(&self) -> String {
        let mut o = String::new();
        o.push_str(&format!("file: {}\n", self.file));
        if let Some(d) = &self.description {
            o.push_str(&format!("description: {d}\n"));
        }
        match &self.frame {
            Some(f) => o.push_str(&format!(
                "frame: anchor_stage={} anchor_tick={} window={} collapsed={}\n",
                f.anchor_stage,
                f.anchor_tick,
                f.window,
                yes(f.collapsed)
            )),
            None => o.push_str("frame: none\n"),
        }
        o.push_str(&format!("threshold: {}\n", num::fixed(self.threshold)));

        for s in &self.stages {
            o.push_str(&format!(
                "stage {} tick={} status={} realized={} H={} H_declared={}\n",
                s.index,
                s.tick,
                s.status,
                s.realized.as_deref().unwrap_or("-"),
                num::fixed(s.entropy_bits),
                num::fixed(s.declared_entropy_bits)
            ));
            for e in &s.outcomes {
                o.push_str(&format!(
                    "  {} p={} p_framed={} I={}\n",
                    e.label,
                    num::fixed(e.probability),
                    num::fixed(e.framed_probability),
                    num::volume_text(e.information)
                ));
            }
        }

        for t in &self.transitions {
            o.push_str(&format!(
                "transition {} stage {} -> stage {} class={} independent={}\n",
                t.index,
                t.index,
                t.index + 1,
                t.class,
                yes(t.independent)
            ));
            o.push_str(&format!(
                "  H(Y|X)={} H(X|Y)={} I(X;Y)={} [{}]\n",
                num::fixed(t.forward_bits),
                num::fixed(t.backward_bits),
                num::fixed(t.mutual_information.value),
                Analytic::<f64>::TAG
            ));
            for e in &t.effective {
                o.push_str(&format!(
                    "  rho({}|{})={} declared={}\n",
                    e.target,
                    e.source,
                    num::fixed(e.effective),
                    num::fixed(e.declared)
                ));
            }
            for r in &t.renormalized {
                o.push_str(&format!(
                    "  renormalized {} -> {} from {} to 1.0000000\n",
                    r.source,
                    r.target,
                    num::fixed(r.original)
                ));
            }
            if let Some(v) = &t.variation {
                o.push_str(&format!(
                    "  variation={} alpha={} I={}\n",
                    v.class,
                    num::fixed(v.transition_probability),
                    num::volume_text(v.information_volume)
                ));
            }
        }

        if let Some(b) = &self.black_hole {
            o.push_str("black hole:\n");
            for t in &b.transitions {
                o.push_str(&format!(
                    "  transition {} {} -> {} alpha={} renormalized={} aggregate={}\n",
                    t.kernel,
                    t.source_label,
                    t.realized_label,
                    num::fixed(t.alpha),
                    num::fixed(t.renormalized),
                    num::fixed(t.aggregate)
                ));
            }
            for e in &b.ledger {
                o.push_str(&format!(
                    "  ledger stage={} {} -> {} rho={}\n",
                    e.stage_index,
                    e.source_label,
                    e.lost_label,
                    num::fixed(e.negative_probability)
                ));
            }
            let c = &b.conservation;
            o.push_str(&format!(
                "  conservation I(start)={} I(end)={} conserved={} extrapolated={}\n",
                num::fixed(c.start_bits),
                num::fixed(c.end_bits),
                yes(c.conserved),
                yes(c.extrapolated)
            ));
            match &b.raw {
                Some(r) => o.push_str(&format!(
                    "  without extension I(start)={} I(end)={} conserved={}\n",
                    num::fixed(r.start_bits),
                    num::fixed(r.end_bits),
                    yes(r.conserved)
                )),
                None => o.push_str(&format!(
                    "  without extension I(start)={} I(end)=inf conserved=no\n",
                    num::fixed(c.start_bits)
                )),
            }
        }

        for s in &self.step_effect {
            let points: Vec<String> = s
                .points
                .iter()
                .map(|(t, v)| format!("{t}:{}", num::fixed(*v)))
                .collect();
            o.push_str(&format!(
                "step effect stage={} event={} tick={} {}\n",
                s.stage,
                s.label.as_deref().unwrap_or("-"),
                s.tick,
                points.join(" ")
            ));
        }
        o
    }

    pub fn json(&self) -> Value {
        let mut doc = Map::new();
        doc.insert("file".into(), json!(self.file));
        doc.insert("description".into(), json!(self.description));
        doc.insert(
            "frame".into(),
            self.frame.as_ref().map_or(Value::Null, |f| {
                json!({
                    "anchor_stage": f.anchor_stage,
                    "anchor_tick": f.anchor_tick,
                    "window": f.window,
                    "collapsed": f.collapsed,
                })
            }),
        );
        doc.insert("threshold".into(), num::json(self.threshold));
        let stages: Vec<Value> = self
            .stages
            .iter()
            .map(|s| {
                let outcomes: Vec<Value> = s
                    .outcomes
                    .iter()
                    .map(|e| {
                        json!({
                            "label": e.label,
                            "probability": num::json(e.probability),
                            "framed_probability": num::json(e.framed_probability),
                            "information_bits": num::volume_json(e.information),
                        })
                    })
                    .collect();
                json!({
                    "index": s.index,
                    "tick": s.tick,
                    "status": s.status.name(),
                    "realized": s.realized,
                    "entropy_bits": num::json(s.entropy_bits),
                    "declared_entropy_bits": num::json(s.declared_entropy_bits),
                    "outcomes": outcomes,
                })
            })
            .collect();
        doc.insert("stages".into(), Value::Array(stages));

        let transitions: Vec<Value> = self
            .transitions
            .iter()
            .map(|t| {
                let effective: Vec<Value> = t
                    .effective
                    .iter()
                    .map(|e| {
                        json!({
                            "source": e.source,
                            "target": e.target,
                            "effective": num::json(e.effective),
                            "declared": num::json(e.declared),
                        })
                    })
                    .collect();
                let renormalized: Vec<Value> = t
                    .renormalized
                    .iter()
                    .map(|r| {
                        json!({
                            "source": r.source,
                            "target": r.target,
                            "original": num::json(r.original),
                            "effective": num::json(1.0),
                        })
                    })
                    .collect();
                json!({
                    "index": t.index,
                    "from_stage": t.index,
                    "to_stage": t.index + 1,
                    "class": t.class.name(),
                    "independent": t.independent,
                    "conditional_entropy_forward_bits": num::json(t.forward_bits),
                    "conditional_entropy_backward_bits": num::json(t.backward_bits),
                    "mutual_information": {
                        "bits": num::json(t.mutual_information.value),
                        "tag": Analytic::<f64>::TAG,
                    },
                    "effective": effective,
                    "renormalized": renormalized,
                    "variation": t.variation.as_ref().map_or(Value::Null, |v| json!({
                        "class": v.class.name(),
                        "alpha": num::json(v.transition_probability),
                        "information_bits": num::volume_json(v.information_volume),
                    })),
                })
            })
            .collect();
        doc.insert("transitions".into(), Value::Array(transitions));

        doc.insert(
            "black_hole".into(),
            self.black_hole.as_ref().map_or(Value::Null, |b| {
                let transitions: Vec<Value> = b
                    .transitions
                    .iter()
                    .map(|t| {
                        json!({
                            "kernel": t.kernel,
                            "source": t.source_label,
                            "realized": t.realized_label,
                            "alpha": num::json(t.alpha),
                            "renormalized": num::json(t.renormalized),
                            "aggregate": num::json(t.aggregate),
                        })
                    })
                    .collect();
                let ledger: Vec<Value> = b
                    .ledger
                    .iter()
                    .map(|e| {
                        json!({
                            "stage": e.stage_index,
                            "source": e.source_label,
                            "lost": e.lost_label,
                            "negative_probability": num::json(e.negative_probability),
                        })
                    })
                    .collect();
                let c = &b.conservation;
                let raw = match &b.raw {
                    Some(r) => json!({
                        "start_bits": num::json(r.start_bits),
                        "end_bits": num::json(r.end_bits),
                        "conserved": r.conserved,
                    }),
                    None => json!({
                        "start_bits": num::json(c.start_bits),
                        "end_bits": num::json(f64::INFINITY),
                        "conserved": false,
                    }),
                };
                json!({
                    "transitions": transitions,
                    "ledger": ledger,
                    "conservation": {
                        "start_bits": num::json(c.start_bits),
                        "end_bits": num::json(c.end_bits),
                        "conserved": c.conserved,
                        "extrapolated": c.extrapolated,
                    },
                    "without_extension": raw,
                })
            }),
        );

        let steps: Vec<Value> = self
            .step_effect
            .iter()
            .map(|s| {
                let points: Vec<Value> = s
                    .points
                    .iter()
                    .map(|(t, v)| json!({"anchor_tick": t, "value": num::json(*v)}))
                    .collect();
                json!({
                    "stage": s.stage,
                    "event": s.label,
                    "tick": s.tick,
                    "points": points,
                })
            })
            .collect();
        doc.insert("step_effect".into(), Value::Array(steps));
        Value::Object(doc)
    }

    /// Writes `step_stage{i}.csv` for each realized event and
    /// `entropy_stage{i}.csv` for each stage into `dir`.
    pub fn write_plots(&self, dir: &Path) -> io::Result<Vec<String>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let series = self
            .step_effect
            .iter()
            .map(|s| ("step", s))
            .chain(self.entropy_trajectory.iter().map(|s| ("entropy", s)));
        for (kind, s) in series {
            let name = format!("{kind}_stage{}.csv", s.stage);
            let mut body = String::from("anchor_tick,value\n");
            for (t, v) in &s.points {
                body.push_str(&format!("{t},{}\n", num::fixed(*v)));
            }
            fs::write(dir.join(&name), body)?;
            written.push(name);
        }
        Ok(written)
    }
}
