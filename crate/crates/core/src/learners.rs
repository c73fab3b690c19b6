//! Linear models, pointwise losses and seeded subgradient descent on any
//! [`ObjectiveSpec`].
//!
//! Parameters are laid out as `[w_1, ..., w_d, b]`. CVaR and OCE objectives
//! append a threshold `theta` and are trained jointly on
//! `theta + mean phi(l_i - theta)`; every other objective is trained through
//! its loss sensitivities from [`loss_weights`].

use serde::{Deserialize, Serialize};

use crate::distcore::{empirical_distribution, quantile, LossVector};
use crate::error::{Error, Result};
use crate::objectives::{eval_objective, loss_weights, ObjectiveSpec};
use crate::par;
use crate::risks::{self, fairness_risk, RiskResult, RiskSpec};
use crate::rng::StreamRng;
use crate::scalarfn::ScalarFunction;

/// Objective values above this abort training.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        Self { weights: vec![0.0; dim], bias: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `<w, x> + b`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }

    fn from_params(p: &[f64], dim: usize) -> Self {
        Self { weights: p[..dim].to_vec(), bias: p[dim] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub features: Vec<f64>,
    pub label: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<Row>,
    dim: usize,
}

impl Dataset {
    pub fn new(rows: Vec<Row>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::EmptyInput);
        };
        let dim = first.features.len();
        for r in &rows {
            if r.features.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.features.len() });
            }
            if let Some(&bad) = r.features.iter().chain(std::iter::once(&r.label)).find(|x| !x.is_finite()) {
                return Err(Error::NonFiniteValue(bad));
            }
        }
        Ok(Self { rows, dim })
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn check_binary_labels(&self) -> Result<()> {
        match self.rows.iter().find(|r| r.label != 1.0 && r.label != -1.0) {
            Some(r) => Err(Error::BadSpec(format!("classification losses need labels in {{-1, +1}}, got {}", r.label))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Squared,
    Logistic,
    Hinge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSchedule {
    Constant { a: f64 },
    InvSqrt { a: f64 },
}

impl StepSchedule {
    fn at(&self, t: usize) -> f64 {
        match *self {
            Self::Constant { a } => a,
            Self::InvSqrt { a } => a / (t as f64).sqrt(),
        }
    }

    fn base(&self) -> f64 {
        match *self {
            Self::Constant { a } | Self::InvSqrt { a } => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BatchMode {
    #[default]
    Full,
    Minibatch {
        m: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    Last,
    Best,
    #[default]
    UniformAverage,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub objective: ObjectiveSpec,
    pub loss_kind: LossKind,
    pub steps: usize,
    pub step_size: StepSchedule,
    pub seed: u64,
    #[serde(default)]
    pub batch: BatchMode,
    #[serde(default)]
    pub averaging: Averaging,
    /// When false the bias stays at zero.
    #[serde(default = "default_true")]
    pub fit_bias: bool,
}

impl TrainConfig {
    pub fn new(
        objective: ObjectiveSpec,
        loss_kind: LossKind,
        steps: usize,
        step_size: StepSchedule,
        seed: u64,
    ) -> Self {
        Self {
            objective,
            loss_kind,
            steps,
            step_size,
            seed,
            batch: BatchMode::Full,
            averaging: Averaging::UniformAverage,
            fit_bias: true,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::BadSpec("steps must be >= 1".into()));
        }
        let a = self.step_size.base();
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::BadSpec(format!("step_size.a = {a} must be > 0")));
        }
        let batch = match self.batch {
            BatchMode::Full => n,
            BatchMode::Minibatch { m } => {
                if m == 0 || m > n {
                    return Err(Error::BadSpec(format!("batch.m = {m} must lie in 1..={n}")));
                }
                m
            }
        };
        self.objective.validate_for(n)?;
        self.objective.validate_for(batch)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutput {
    pub model: LinearModel,
    pub trace: Vec<f64>,
    /// Threshold of the joint CVaR/OCE parameterisation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

fn check_dim(model: &LinearModel, row: &Row) -> Result<()> {
    if model.dim() == row.features.len() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: model.dim(), got: row.features.len() })
    }
}

// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn pointwise_loss(model: &LinearModel, row: &Row, kind: LossKind) -> Result<f64> {
    check_dim(model, row)?;
    let m = model.predict(&row.features);
    let y = row.label;
    Ok(match kind {
        LossKind::Squared => (m - y) * (m - y),
        LossKind::Logistic => softplus(-y * m),
        LossKind::Hinge => (1.0 - y * m).max(0.0),
    })
}

/// Gradient in `(w, b)`, length `dim + 1`. The hinge kink takes the right
/// derivative in the signed margin, which is zero.
pub fn pointwise_subgrad(model: &LinearModel, row: &Row, kind: LossKind) -> Result<Vec<f64>> {
    check_dim(model, row)?;
    let m = model.predict(&row.features);
    let y = row.label;
    let dm = match kind {
        LossKind::Squared => 2.0 * (m - y),
        LossKind::Logistic => -y * sigmoid(-y * m),
        LossKind::Hinge => {
            if y * m < 1.0 {
                -y
            } else {
                0.0
            }
        }
    };
    let mut g: Vec<f64> = row.features.iter().map(|x| dm * x).collect();
    g.push(dm);
    Ok(g)
}

/// Losses of `model` on every row, in row order.
pub fn dataset_losses(model: &LinearModel, data: &Dataset, kind: LossKind) -> Result<Vec<f64>> {
    par::map_slice_chunked(data.rows(), |r| pointwise_loss(model, r, kind)).into_iter().collect()
}

fn full_objective(spec: &ObjectiveSpec, model: &LinearModel, data: &Dataset, kind: LossKind) -> Result<f64> {
    let losses = dataset_losses(model, data, kind)?;
    match LossVector::new(losses) {
        Ok(v) => eval_objective(spec, &v),
        Err(_) => Ok(f64::INFINITY),
    }
}

// Disutility of the joint (w, theta) program, if the objective has one.
fn joint_phi(spec: &ObjectiveSpec) -> Option<ScalarFunction> {
    match spec {
        ObjectiveSpec::Cvar { beta } => Some(ScalarFunction::OceCvar { beta: *beta }),
        ObjectiveSpec::Oce { phi } => Some(phi.clone()),
        _ => None,
    }
}

fn draw_batch(rng: &mut StreamRng, n: usize, m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = i + rng.index(n - i);
        idx.swap(i, j);
    }
    idx.truncate(m);
    idx
}

/// Subgradient descent from the zero model.
///
/// `trace[t]` is the full-data objective of the iterate that the averaging
/// mode would return after step `t + 1`. Identical `(cfg, data)` give
/// bit-identical output.
pub fn train(cfg: &TrainConfig, data: &Dataset) -> Result<TrainOutput> {
    let n = data.len();
    cfg.validate(n)?;
    if cfg.loss_kind != LossKind::Squared {
        data.check_binary_labels()?;
    }
    let dim = data.dim();
    let phi = joint_phi(&cfg.objective);
    let n_params = dim + 1 + usize::from(phi.is_some());
    let mut params = vec![0.0; n_params];

    if let Some(phi) = &phi {
        let initial = LossVector::new(dataset_losses(&LinearModel::zeros(dim), data, cfg.loss_kind)?)?;
        let d = empirical_distribution(&initial);
        params[dim + 1] = match &cfg.objective {
            ObjectiveSpec::Cvar { beta } => quantile(&d, *beta)?,
            _ => risks::oce(&d, phi)?.theta().unwrap_or(0.0),
        };
    }

    let mut rng = StreamRng::new(cfg.seed, 0);
    let mut avg = params.clone();
    let mut best = params.clone();
    let mut best_value = f64::INFINITY;
    let mut trace = Vec::with_capacity(cfg.steps);

    for t in 1..=cfg.steps {
        let batch: Vec<usize> = match cfg.batch {
            BatchMode::Full => (0..n).collect(),
            BatchMode::Minibatch { m } => draw_batch(&mut rng, n, m),
        };
        let model = LinearModel::from_params(&params, dim);
        let rows: Vec<&Row> = batch.iter().map(|&i| &data.rows()[i]).collect();
        let evals: Vec<Result<(f64, Vec<f64>)>> = par::map_slice_chunked(&rows, |r| {
            Ok((pointwise_loss(&model, r, cfg.loss_kind)?, pointwise_subgrad(&model, r, cfg.loss_kind)?))
        });
        let mut losses = Vec::with_capacity(rows.len());
        let mut grads = Vec::with_capacity(rows.len());
        for e in evals {
            let (l, g) = e?;
            losses.push(l);
            grads.push(g);
        }
        let m = losses.len() as f64;

        let mut step = vec![0.0; n_params];
        let weights: Vec<f64> = match &phi {
            Some(phi) => {
                let theta = params[dim + 1];
                let c: Vec<f64> = losses.iter().map(|&l| phi.deriv(l - theta).map(|d| d / m)).collect::<Result<_>>()?;
                step[dim + 1] = 1.0 - c.iter().sum::<f64>();
                c
            }
            None => match LossVector::new(losses) {
                Ok(v) => loss_weights(&cfg.objective, &v)?,
                Err(_) => return Err(diverged(t, f64::INFINITY, trace)),
            },
        };
        for (c, g) in weights.iter().zip(&grads) {
            if *c == 0.0 {
                continue;
            }
            for (s, gj) in step[..=dim].iter_mut().zip(g) {
                *s += c * gj;
            }
        }
        if !cfg.fit_bias {
            step[dim] = 0.0;
        }
        let eta = cfg.step_size.at(t);
        for (p, s) in params.iter_mut().zip(&step) {
            *p -= eta * s;
        }
        let tf = t as f64;
        for (a, p) in avg.iter_mut().zip(&params) {
            *a += (p - *a) / tf;
        }

        let value = match cfg.averaging {
            Averaging::Last => {
                full_objective(&cfg.objective, &LinearModel::from_params(&params, dim), data, cfg.loss_kind)?
            }
            Averaging::UniformAverage => {
                full_objective(&cfg.objective, &LinearModel::from_params(&avg, dim), data, cfg.loss_kind)?
            }
            Averaging::Best => {
                let current =
                    full_objective(&cfg.objective, &LinearModel::from_params(&params, dim), data, cfg.loss_kind)?;
                if !current.is_finite() || current > DIVERGENCE_LIMIT {
                    return Err(diverged(t, current, trace));
                }
                if current < best_value {
                    best_value = current;
                    best.copy_from_slice(&params);
                }
                best_value
            }
        };
        if !value.is_finite() || value > DIVERGENCE_LIMIT {
            return Err(diverged(t, value, trace));
        }
        trace.push(value);
    }

    let chosen = match cfg.averaging {
        Averaging::Last => params,
        Averaging::Best => best,
        Averaging::UniformAverage => avg,
    };
    Ok(TrainOutput { model: LinearModel::from_params(&chosen, dim), trace, theta: phi.map(|_| chosen[dim + 1]) })
}

fn diverged(step: usize, value: f64, trace: Vec<f64>) -> Error {
    Error::NonFiniteObjective { step, value, trace }
}

/// Risk of the empirical test-loss distribution. The fairness risk groups
/// rows by their tag (untagged rows form one group).
pub fn evaluate(model: &LinearModel, test: &Dataset, kind: LossKind, spec: &RiskSpec) -> Result<RiskResult> {
    let losses = dataset_losses(model, test, kind)?;
    if let RiskSpec::FairnessMeanVar = spec {
        let tagged: Vec<(String, f64)> =
            test.rows().iter().zip(&losses).map(|(r, &l)| (r.group.clone().unwrap_or_default(), l)).collect();
        return fairness_risk(&risks::empirical_groups(&tagged)?).map(RiskResult::plain);
    }
    risks::risk_eval(spec, &empirical_distribution(&LossVector::new(losses)?))
}
