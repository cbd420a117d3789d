//! Text and JSON rendering of command results.

use std::fmt::Write as _;
use std::io::Write as _;

use boxprop::format::render;
use boxprop::{BcMode, BcReport, BoxRecord, FloatFormat, Interval64, Paving, PropagationStats, System64};
use clap::ValueEnum;
use serde::Serialize;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

pub trait Emit {
    fn text(&self, style: FloatFormat) -> String;
    fn json(&self, style: FloatFormat) -> String;

    fn emit(&self, format: Format, style: FloatFormat) {
        let body = match format {
            Format::Text => self.text(style),
            Format::Json => self.json(style) + "\n",
        };
        // a closed pipe downstream is not an error worth reporting
        let _ = std::io::stdout().lock().write_all(body.as_bytes());
    }
}

fn show(x: &Interval64, style: FloatFormat) -> String {
    if x.is_empty() {
        "empty".into()
    } else {
        format!("[{},{}]", render(x.lo(), style), render(x.hi(), style))
    }
}

#[derive(Serialize)]
struct Bounds {
    lo: String,
    hi: String,
}

/// `null` for the empty interval.
fn bounds(x: &Interval64, style: FloatFormat) -> Option<Bounds> {
    (!x.is_empty()).then(|| Bounds {
        lo: render(x.lo(), style),
        hi: render(x.hi(), style),
    })
}

#[derive(Serialize)]
struct NamedDomain {
    name: String,
    domain: Option<Bounds>,
}

fn named(names: &[String], domains: &[Interval64], style: FloatFormat) -> Vec<NamedDomain> {
    names
        .iter()
        .zip(domains)
        .map(|(n, d)| NamedDomain {
            name: n.clone(),
            domain: bounds(d, style),
        })
        .collect()
}

fn stats_block(out: &mut String, stats: &PropagationStats) {
    out.push_str("[stats]\n");
    out.push_str(&stats.to_key_values());
}

fn to_json<S: Serialize>(s: &S) -> String {
    serde_json::to_string_pretty(s).expect("serializable")
}

pub struct EvalRow {
    pub index: usize,
    pub expr: String,
    pub natural: Interval64,
    pub propagated: Interval64,
    pub activations: u64,
    pub constraints: usize,
}

pub struct EvalReport<'a> {
    pub variables: &'a System64,
    pub rows: Vec<EvalRow>,
    pub stats: Option<&'a PropagationStats>,
}

impl Emit for EvalReport<'_> {
    fn text(&self, style: FloatFormat) -> String {
        let mut out = String::from("variables:\n");
        for (n, d) in &self.variables.variables {
            let _ = writeln!(out, "  {n} in {}", show(d, style));
        }
        for r in &self.rows {
            let _ = writeln!(out, "g{}: {} <= 0", r.index, r.expr);
            let _ = writeln!(out, "  natural: {}", show(&r.natural, style));
            let _ = writeln!(out, "  propagated: {}", show(&r.propagated, style));
            let _ = writeln!(out, "  activations: {} of {} constraints", r.activations, r.constraints);
        }
        if let Some(s) = self.stats {
            stats_block(&mut out, s);
        }
        out
    }

    fn json(&self, style: FloatFormat) -> String {
        #[derive(Serialize)]
        struct Row {
            index: usize,
            expr: String,
            natural: Option<Bounds>,
            propagated: Option<Bounds>,
            activations: u64,
            constraints: usize,
        }
        #[derive(Serialize)]
        struct Out<'a> {
            command: &'static str,
            variables: Vec<NamedDomain>,
            expressions: Vec<Row>,
            #[serde(skip_serializing_if = "Option::is_none")]
            stats: Option<&'a PropagationStats>,
        }
        let names = self.variables.names();
        let domains: Vec<Interval64> = self.variables.variables.iter().map(|(_, d)| *d).collect();
        to_json(&Out {
            command: "eval",
            variables: named(&names, &domains, style),
            expressions: self
                .rows
                .iter()
                .map(|r| Row {
                    index: r.index,
                    expr: r.expr.clone(),
                    natural: bounds(&r.natural, style),
                    propagated: bounds(&r.propagated, style),
                    activations: r.activations,
                    constraints: r.constraints,
                })
                .collect(),
            stats: self.stats,
        })
    }
}

fn mode_name(m: BcMode) -> &'static str {
    match m {
        BcMode::Functional => "functional",
        BcMode::Relational => "relational",
    }
}

pub struct ConsistReport<'a> {
    pub system: &'a System64,
    pub mode: BcMode,
    pub selected: &'a BcReport<f64>,
    pub functional: &'a BcReport<f64>,
    pub relational: &'a BcReport<f64>,
    pub stats: bool,
}

impl Emit for ConsistReport<'_> {
    fn text(&self, style: FloatFormat) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "bc-mode: {}", mode_name(self.mode));
        let _ = writeln!(out, "outcome: {}", self.selected.outcome.as_str());
        let _ = writeln!(out, "rounds: {}", self.selected.rounds);
        out.push_str("variable\trelational\tfunctional\n");
        for (i, name) in self.system.names().iter().enumerate() {
            let _ = writeln!(
                out,
                "{name}\t{}\t{}",
                show(&self.relational.domains[i], style),
                show(&self.functional.domains[i], style)
            );
        }
        if self.stats {
            out.push_str("[stats]\n");
            let _ = writeln!(out, "trials={}", self.selected.trials);
            let _ = writeln!(out, "converged={}", self.selected.converged);
            if let Some(s) = &self.selected.stats {
                out.push_str(&s.to_key_values());
            }
        }
        out
    }

    fn json(&self, style: FloatFormat) -> String {
        #[derive(Serialize)]
        struct Side {
            outcome: &'static str,
            rounds: usize,
            domains: Vec<NamedDomain>,
        }
        #[derive(Serialize)]
        struct Extra<'a> {
            trials: u64,
            converged: bool,
            #[serde(skip_serializing_if = "Option::is_none")]
            propagation: Option<&'a PropagationStats>,
        }
        #[derive(Serialize)]
        struct Out<'a> {
            command: &'static str,
            bc_mode: &'static str,
            outcome: &'static str,
            domains: Vec<NamedDomain>,
            functional: Side,
            relational: Side,
            #[serde(skip_serializing_if = "Option::is_none")]
            stats: Option<Extra<'a>>,
        }
        let names = self.system.names();
        let side = |r: &BcReport<f64>| Side {
            outcome: r.outcome.as_str(),
            rounds: r.rounds,
            domains: named(&names, r.domains.as_slice(), style),
        };
        to_json(&Out {
            command: "consist",
            bc_mode: mode_name(self.mode),
            outcome: self.selected.outcome.as_str(),
            domains: named(&names, self.selected.domains.as_slice(), style),
            functional: side(self.functional),
            relational: side(self.relational),
            stats: self.stats.then_some(Extra {
                trials: self.selected.trials,
                converged: self.selected.converged,
                propagation: self.selected.stats.as_ref(),
            }),
        })
    }
}

pub struct SolveReport<'a> {
    pub system: &'a System64,
    pub mode: BcMode,
    pub paving: &'a Paving<f64>,
    pub stats: bool,
}

impl Emit for SolveReport<'_> {
    fn text(&self, style: FloatFormat) -> String {
        let p = self.paving;
        let mut out = String::new();
        let _ = writeln!(out, "bc-mode: {}", mode_name(self.mode));
        let _ = writeln!(out, "epsilon: {}", render(p.epsilon, style));
        let _ = writeln!(out, "complete: {}", p.is_complete());
        let _ = writeln!(out, "inner: {}", p.inner.len());
        let _ = writeln!(out, "boundary: {}", p.boundary.len());
        let _ = writeln!(out, "pending: {}", p.pending.len());
        let _ = writeln!(out, "inner_volume: {}", render(p.inner_volume(), style));
        let _ = writeln!(out, "boundary_volume: {}", render(p.boundary_volume(), style));
        if self.stats {
            out.push_str("[stats]\n");
            let _ = writeln!(out, "processed={}", p.processed);
            let _ = writeln!(out, "failed={}", p.failed);
        }
        out.push_str(&p.to_table(&self.system.names(), style));
        out
    }

    fn json(&self, style: FloatFormat) -> String {
        #[derive(Serialize)]
        struct Extra {
            processed: u64,
            failed: u64,
        }
        #[derive(Serialize)]
        struct Out {
            command: &'static str,
            bc_mode: &'static str,
            epsilon: String,
            complete: bool,
            inner: usize,
            boundary: usize,
            pending: usize,
            inner_volume: String,
            boundary_volume: String,
            boxes: Vec<BoxRecord>,
            #[serde(skip_serializing_if = "Option::is_none")]
            stats: Option<Extra>,
        }
        let p = self.paving;
        to_json(&Out {
            command: "solve",
            bc_mode: mode_name(self.mode),
            epsilon: render(p.epsilon, style),
            complete: p.is_complete(),
            inner: p.inner.len(),
            boundary: p.boundary.len(),
            pending: p.pending.len(),
            inner_volume: render(p.inner_volume(), style),
            boundary_volume: render(p.boundary_volume(), style),
            boxes: p.records(&self.system.names(), style),
            stats: self.stats.then_some(Extra {
                processed: p.processed,
                failed: p.failed,
            }),
        })
    }
}
