use risk_core::datagen::{sample, DistSpec};
use risk_core::learners::{dataset_losses, evaluate, train, Dataset, LinearModel, LossKind, TrainOutput};
use risk_core::risks::{empirical_groups, entropic, risk_eval, risk_eval_grouped, Aux, RiskResult};
use risk_core::{empirical_distribution, par, quantile, LossVector, ObjectiveSpec, RiskSpec};

use crate::config::{derive_seed, Command, LoadedConfig, Preset, SALT_DEMO};
use crate::error::{CliError, Result};
use crate::io::read_losses;
use crate::report::{
    risk_label, CompareReport, DemoReport, DemoRow, EvalReport, LossSummary, ModelFile, RiskRow, TrainReport,
    SUMMARY_LEVELS,
};

fn row(spec: &RiskSpec, r: RiskResult) -> RiskRow {
    RiskRow { risk: spec.clone(), value: r.value, theta: r.theta() }
}

fn risk_context(i: usize, spec: &RiskSpec) -> String {
    format!("risks[{i}] {}", risk_label(spec))
}

pub fn cmd_eval(cfg: &LoadedConfig) -> Result<EvalReport> {
    let c = &cfg.config;
    c.validate(Command::Eval)?;
    let file = read_losses(c.losses.as_deref().expect("validated"))?;
    let pooled = empirical_distribution(&file.losses);
    let groups = match file.groups {
        Some(_) => Some(empirical_groups(&file.tagged()).map_err(|e| CliError::invalid("losses", e))?),
        None => None,
    };
    let results = par::map_slice(&c.risks, |spec| match &groups {
        Some(g) => risk_eval_grouped(spec, &pooled, g),
        None => risk_eval(spec, &pooled),
    });
    let rows = c
        .risks
        .iter()
        .zip(results)
        .enumerate()
        .map(|(i, (spec, r))| r.map(|r| row(spec, r)).map_err(|e| CliError::from_core(risk_context(i, spec), e)))
        .collect::<Result<_>>()?;
    Ok(EvalReport { n: file.losses.len(), grouped: groups.is_some(), rows })
}

fn fit(cfg: &LoadedConfig, objective: &ObjectiveSpec, data: &Dataset) -> Result<TrainOutput> {
    let c = &cfg.config;
    let section = c.train.as_ref().expect("validated");
    let tc = section.with(objective.clone(), c.trainer_seed()?);
    tc.validate(data.len()).map_err(|e| CliError::invalid("train", e))?;
    train(&tc, data).map_err(|e| CliError::from_core("train", e))
}

fn test_rows(model: &LinearModel, test: &Dataset, kind: LossKind, risks: &[RiskSpec]) -> Result<Vec<RiskRow>> {
    risks
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            evaluate(model, test, kind, spec)
                .map(|r| row(spec, r))
                .map_err(|e| CliError::from_core(risk_context(i, spec), e))
        })
        .collect()
}

pub fn cmd_train(cfg: &LoadedConfig) -> Result<(TrainReport, ModelFile)> {
    let c = &cfg.config;
    c.validate(Command::Train)?;
    let (train_data, test_data) = c.datasets()?;
    let objective = c.objective.clone().expect("validated");
    let kind = c.train.as_ref().expect("validated").loss_kind;
    let out = fit(cfg, &objective, &train_data)?;
    let test = test_rows(&out.model, &test_data, kind, &c.risks)?;
    let model = ModelFile {
        weights: out.model.weights.clone(),
        bias: out.model.bias,
        aux: out.theta.map(Aux::Theta),
        config_hash: cfg.hash.clone(),
    };
    let report = TrainReport {
        config_hash: cfg.hash.clone(),
        objective,
        final_objective: *out.trace.last().expect("at least one step"),
        model: out.model,
        theta: out.theta,
        trace: out.trace,
        n_train: train_data.len(),
        n_test: test_data.len(),
        test,
    };
    Ok((report, model))
}

fn summarise(model: &LinearModel, test: &Dataset, kind: LossKind) -> Result<LossSummary> {
    let losses = dataset_losses(model, test, kind).map_err(|e| CliError::from_core("test losses", e))?;
    let v = LossVector::new(losses).map_err(|e| CliError::from_core("test losses", e))?;
    let d = empirical_distribution(&v);
    let quantiles = SUMMARY_LEVELS.iter().map(|&b| quantile(&d, b).expect("level in (0, 1)")).collect();
    Ok(LossSummary { mean: d.mean(), max: d.max(), quantiles })
}

pub fn cmd_compare(cfg: &LoadedConfig) -> Result<CompareReport> {
    let c = &cfg.config;
    c.validate(Command::Compare)?;
    let (train_data, test_data) = c.datasets()?;
    let kind = c.train.as_ref().expect("validated").loss_kind;
    let fits: Vec<Result<TrainOutput>> = par::map_slice(&c.objectives, |o| fit(cfg, o, &train_data));
    let mut matrix = Vec::new();
    let mut models = Vec::new();
    let mut summaries = Vec::new();
    for (i, f) in fits.into_iter().enumerate() {
        let out = f.map_err(|e| match e {
            CliError::Numeric { context, source } => {
                CliError::Numeric { context: format!("objectives[{i}] {context}"), source }
            }
            CliError::Invalid { context, source } => {
                CliError::Invalid { context: format!("objectives[{i}] {context}"), source }
            }
            other => other,
        })?;
        matrix.push(test_rows(&out.model, &test_data, kind, &c.risks)?.into_iter().map(|r| r.value).collect());
        summaries.push(summarise(&out.model, &test_data, kind)?);
        models.push(out.model);
    }
    Ok(CompareReport {
        config_hash: cfg.hash.clone(),
        objectives: c.objectives.clone(),
        risks: c.risks.clone(),
        matrix,
        models,
        levels: SUMMARY_LEVELS.to_vec(),
        summaries,
    })
}

struct PayoutStats {
    mean: f64,
    median: f64,
    entropic: f64,
    cvar_90: f64,
}

fn payout_stats(v: &LossVector) -> risk_core::Result<PayoutStats> {
    let d = empirical_distribution(v);
    Ok(PayoutStats {
        mean: v.mean(),
        median: quantile(&d, 0.5)?,
        entropic: entropic(&d, 1.0)?,
        cvar_90: risk_core::risks::cvar(&d, 0.9)?.value,
    })
}

fn range(xs: impl Iterator<Item = f64> + Clone) -> [f64; 2] {
    [xs.clone().fold(f64::INFINITY, f64::min), xs.fold(f64::NEG_INFINITY, f64::max)]
}

/// Seeds used by the demo: replicate 0 also provides the headline row.
pub fn demo_seeds(seed: u64, replicates: usize) -> Vec<u64> {
    let base = derive_seed(seed, SALT_DEMO);
    (0..replicates as u64).map(|r| derive_seed(base, r)).collect()
}

pub fn cmd_demo(cfg: &LoadedConfig) -> Result<DemoReport> {
    let c = &cfg.config;
    c.validate(Command::Demo)?;
    let demo = c.demo.clone().unwrap_or_default();
    let seed = c.seed()?;
    let spec = match demo.preset {
        Preset::Stpetersburg => DistSpec::Stpetersburg,
    };
    let seeds = demo_seeds(seed, demo.replicates);
    let mut rows = Vec::new();
    for &n in &demo.sizes {
        let stats: Vec<PayoutStats> = par::map_slice(&seeds, |&s| payout_stats(&sample(&spec, n, s)?))
            .into_iter()
            .collect::<risk_core::Result<_>>()
            .map_err(|e| CliError::from_core(format!("demo n = {n}"), e))?;
        let head = &stats[0];
        rows.push(DemoRow {
            n,
            mean: head.mean,
            median: head.median,
            entropic: head.entropic,
            cvar_90: head.cvar_90,
            mean_range: range(stats.iter().map(|s| s.mean)),
            median_range: range(stats.iter().map(|s| s.median)),
        });
    }
    Ok(DemoReport { preset: "stpetersburg".into(), seed, replicates: demo.replicates, rows })
}
