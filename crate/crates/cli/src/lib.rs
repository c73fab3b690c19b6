//! `risktool`: evaluate risk profiles of loss files, train risk-aware linear
//! models and compare how the choice of training objective shows up under
//! different off-sample risks.
//!
//! Exit codes: 0 on success, 1 on numeric or solver failure, 2 on any input,
//! schema or validation problem.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod report;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use risk_core::Error as CoreError;

use crate::config::LoadedConfig;
use crate::error::{CliError, Result};
use crate::report::{write_output, Format, Render};

#[derive(Debug, Parser)]
#[command(name = "risktool", version, about = "Design, evaluate and compare off-sample risks of learners")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Evaluate risks of a loss file.
    Eval(Common),
    /// Train one model and evaluate held-out risks.
    Train(Common),
    /// Train one model per objective and tabulate every risk of every model.
    Compare(Common),
    /// Built-in walkthroughs (St. Petersburg payouts).
    Demo(Common),
}

fn required_config(c: &Common) -> Result<LoadedConfig> {
    match &c.config {
        Some(p) => LoadedConfig::load(p),
        None => Err(CliError::config("--config is required")),
    }
}

/// Where the model file goes: `model_out` from the config, else next to the
/// report as `<stem>.model.json`.
fn model_path(cfg: &LoadedConfig, out: Option<&Path>) -> Option<PathBuf> {
    cfg.config.model_out.clone().or_else(|| {
        out.map(|o| {
            let stem = o.file_stem().map_or_else(|| "report".into(), |s| s.to_string_lossy().into_owned());
            o.with_file_name(format!("{stem}.model.json"))
        })
    })
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Cmd::Eval(c) => {
            let cfg = required_config(c)?;
            write_output(&commands::cmd_eval(&cfg)?.render(c.format), c.out.as_deref())
        }
        Cmd::Train(c) => {
            let cfg = required_config(c)?;
            let (report, model) = commands::cmd_train(&cfg)?;
            if let Some(path) = model_path(&cfg, c.out.as_deref()) {
                let mut text = serde_json::to_string_pretty(&model).expect("model serialises");
                text.push('\n');
                write_output(&text, Some(&path))?;
            }
            write_output(&report.render(c.format), c.out.as_deref())
        }
        Cmd::Compare(c) => {
            let cfg = required_config(c)?;
            write_output(&commands::cmd_compare(&cfg)?.render(c.format), c.out.as_deref())
        }
        Cmd::Demo(c) => {
            let cfg = match &c.config {
                Some(p) => LoadedConfig::load(p)?,
                None => LoadedConfig::builtin_demo(),
            };
            write_output(&commands::cmd_demo(&cfg)?.render(c.format), c.out.as_deref())
        }
    }
}

/// Diagnostic printed on stderr before exiting with `e.exit_code()`.
pub fn describe(e: &CliError) -> String {
    let mut msg = format!("error: {e}");
    if let CliError::Numeric { source: CoreError::NonFiniteObjective { trace, .. }, .. } = e {
        let head: Vec<String> = trace.iter().take(10).map(|x| x.to_string()).collect();
        msg += &format!("\ntrace prefix ({} of {} steps): [{}]", head.len(), trace.len(), head.join(", "));
    }
    msg
}
