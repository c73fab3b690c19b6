//! Report types and their JSON / aligned-text renderings.
//!
//! JSON floats use shortest round-trip formatting, so re-parsing a report
//! gives back bit-identical values.

use std::fs;
use std::path::Path;

use clap::ValueEnum;
use risk_core::learners::LinearModel;
use risk_core::risks::Aux;
use risk_core::{ObjectiveSpec, RiskSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

pub trait Render: Serialize {
    fn text(&self) -> String;

    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("reports serialise");
                s.push('\n');
                s
            }
            Format::Text => self.text(),
        }
    }
}

pub fn write_output(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// `kind(k=v, ...)` from a tagged spec.
pub fn label<T: Serialize>(spec: &T, tag: &str) -> String {
    let v = serde_json::to_value(spec).expect("specs serialise");
    let serde_json::Value::Object(map) = v else {
        return v.to_string();
    };
    let kind = map.get(tag).and_then(|k| k.as_str()).unwrap_or("?").to_owned();
    let params: Vec<String> = map.iter().filter(|(k, _)| k.as_str() != tag).map(|(k, v)| format!("{k}={v}")).collect();
    if params.is_empty() {
        kind
    } else {
        format!("{kind}({})", params.join(", "))
    }
}

pub fn risk_label(spec: &RiskSpec) -> String {
    label(spec, "kind")
}

pub fn objective_label(spec: &ObjectiveSpec) -> String {
    label(spec, "kind")
}

/// Left-aligned first column, right-aligned numbers.
pub fn table(headers: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        parts.join("  ").trim_end().to_owned() + "\n"
    };
    let mut out = line(headers);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    out += &line(&rule);
    for r in rows {
        out += &line(r);
    }
    out
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_owned(), num)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub risk: RiskSpec,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

fn risk_rows_text(rows: &[RiskRow]) -> String {
    let body: Vec<Vec<String>> = rows.iter().map(|r| vec![risk_label(&r.risk), num(r.value), opt(r.theta)]).collect();
    table(&["risk".into(), "value".into(), "theta".into()], &body)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub grouped: bool,
    pub rows: Vec<RiskRow>,
}

impl Render for EvalReport {
    fn text(&self) -> String {
        format!("{} losses{}\n\n{}", self.n, if self.grouped { " (grouped)" } else { "" }, risk_rows_text(&self.rows))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub weights: Vec<f64>,
    pub bias: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux: Option<Aux>,
    pub config_hash: String,
}

impl ModelFile {
    pub fn model(&self) -> LinearModel {
        LinearModel { weights: self.weights.clone(), bias: self.bias }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config_hash: String,
    pub objective: ObjectiveSpec,
    pub model: LinearModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub final_objective: f64,
    pub trace: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub test: Vec<RiskRow>,
}

impl Render for TrainReport {
    fn text(&self) -> String {
        let mut s = format!("objective  {}\n", objective_label(&self.objective));
        s += &format!("config     {}\n", self.config_hash);
        s += &format!("weights    {:?}\n", self.model.weights);
        s += &format!("bias       {}\n", self.model.bias);
        if let Some(t) = self.theta {
            s += &format!("theta      {t}\n");
        }
        s += &format!("objective value after {} steps: {}\n", self.trace.len(), self.final_objective);
        s += &format!("train/test rows: {}/{}\n", self.n_train, self.n_test);
        if !self.test.is_empty() {
            s += "\nheld-out risks\n";
            s += &risk_rows_text(&self.test);
        }
        s
    }
}

/// Probability levels of the per-model test-loss summaries.
pub const SUMMARY_LEVELS: [f64; 6] = [0.1, 0.25, 0.5, 0.75, 0.9, 0.99];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSummary {
    pub mean: f64,
    pub max: f64,
    /// Test-loss quantiles at [`SUMMARY_LEVELS`].
    pub quantiles: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub config_hash: String,
    pub objectives: Vec<ObjectiveSpec>,
    pub risks: Vec<RiskSpec>,
    /// `matrix[i][j]` is risk `j` of the model trained on objective `i`.
    pub matrix: Vec<Vec<f64>>,
    pub models: Vec<LinearModel>,
    pub levels: Vec<f64>,
    pub summaries: Vec<LossSummary>,
}

impl Render for CompareReport {
    fn text(&self) -> String {
        let mut head = vec!["trained on \\ risk".to_owned()];
        head.extend(self.risks.iter().map(risk_label));
        let body: Vec<Vec<String>> = self
            .objectives
            .iter()
            .zip(&self.matrix)
            .map(|(o, row)| std::iter::once(objective_label(o)).chain(row.iter().map(|&x| num(x))).collect())
            .collect();
        let mut s = table(&head, &body);

        let mut head = vec!["test losses".to_owned(), "mean".to_owned()];
        head.extend(self.levels.iter().map(|l| format!("q{l}")));
        head.push("max".into());
        let body: Vec<Vec<String>> = self
            .objectives
            .iter()
            .zip(&self.summaries)
            .map(|(o, q)| {
                let mut r = vec![objective_label(o), num(q.mean)];
                r.extend(q.quantiles.iter().map(|&x| num(x)));
                r.push(num(q.max));
                r
            })
            .collect();
        s += "\n";
        s += &table(&head, &body);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoRow {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub entropic: f64,
    pub cvar_90: f64,
    /// `[min, max]` of the sample mean over the replicate seeds.
    pub mean_range: [f64; 2],
    /// `[min, max]` of the sample median over the replicate seeds.
    pub median_range: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoReport {
    pub preset: String,
    pub seed: u64,
    pub replicates: usize,
    pub rows: Vec<DemoRow>,
}

impl Render for DemoReport {
    fn text(&self) -> String {
        let head: Vec<String> =
            ["n", "mean", "median", "entropic(1)", "cvar(0.9)", "mean range", "median range"].map(String::from).into();
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    format!("{:.4}", r.mean),
                    num(r.median),
                    format!("{:.4}", r.entropic),
                    format!("{:.4}", r.cvar_90),
                    format!("{:.2} .. {:.2}", r.mean_range[0], r.mean_range[1]),
                    format!("{} .. {}", r.median_range[0], r.median_range[1]),
                ]
            })
            .collect();
        format!(
            "{} payouts, seed {}, ranges over {} seeds\n\n{}",
            self.preset,
            self.seed,
            self.replicates,
            table(&head, &body)
        )
    }
}
