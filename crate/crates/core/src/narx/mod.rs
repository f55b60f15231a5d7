//! Adaptive process models: disturbance-extended, coupled NARX prediction with
//! per-criterion projections and a service-effort mapping.
//!
//! A model for module `n` predicts its next process output from lagged outputs,
//! effective actuations (commanded plus disturbance), the predecessor coupling
//! input and the cycle phase. Two networks are kept per model: the process net
//! maps the full regressor to the next output, the disturbance net estimates the
//! current actuation disturbance from the window of past observed disturbances.

mod mlp;
mod train;

pub use mlp::{DenseLayer, LayerGradient, Mlp, MlpGradient};
pub use train::{
    gradient_of_loss, one_step_mse, total_batch_loss, train, training_batch, NarxGradient,
    TrainConfig, TrainReport, TrainingBatch, TrainingPair,
};

use crate::model::{Criterion, CriteriaWeights, PerCriterion};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};

#[derive(Debug, thiserror::Error)]
pub enum NarxError {
    #[error("negative {criterion} service effort {value} at cycle {cycle}; check the criterion map")]
    NegativeEffort { criterion: Criterion, cycle: usize, value: f64 },
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("dataset does not match model: {0}")]
    DatasetMismatch(String),
}

/// Affine map from a criterion-projected output vector to a scalar effort:
/// `offset + sum(coefficients[i] * y[i])`. Empty coefficients mean all-zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AffineMap {
    #[serde(default)]
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub offset: f64,
}

impl AffineMap {
    pub fn apply(&self, y: &[f64]) -> f64 {
        debug_assert!(self.coefficients.is_empty() || self.coefficients.len() == y.len());
        self.offset
            + self
                .coefficients
                .iter()
                .zip(y)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }
}

/// Per-criterion projection: which output/actuation rows and lags are dropped
/// for this criterion, and the affine effort map over the retained outputs.
///
/// Lag indices are 0-based into the lag window: for outputs 0 means the most
/// recent previous cycle, for actuations 0 means the current cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CriterionSpec {
    #[serde(default)]
    pub drop_output_rows: Vec<usize>,
    #[serde(default)]
    pub drop_output_lags: Vec<usize>,
    #[serde(default)]
    pub drop_actuation_rows: Vec<usize>,
    #[serde(default)]
    pub drop_actuation_lags: Vec<usize>,
    #[serde(default)]
    pub map: AffineMap,
}

impl CriterionSpec {
    pub fn retained_outputs(&self, output_dim: usize) -> Vec<usize> {
        (0..output_dim)
            .filter(|i| !self.drop_output_rows.contains(i))
            .collect()
    }
}

fn default_hidden() -> Vec<usize> {
    vec![16]
}

fn default_horizon() -> usize {
    64
}

/// Training hyperparameters, declared per process model in the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSettings {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for TrainingSettings {
    fn default() -> Self {
        TrainingSettings { learning_rate: 0.05, epochs: 200, batch_size: 16 }
    }
}

/// Scenario-level declaration of a NARX process model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarxSpec {
    pub id: String,
    /// Number of process output channels.
    pub output_dim: usize,
    /// Number of actuation channels; must equal the operator's parameter count.
    pub actuation_dim: usize,
    /// Output lag horizon (>= 1).
    pub output_lag: usize,
    /// Actuation/disturbance lag horizon (>= 1).
    pub actuation_lag: usize,
    /// Width of the coupling input (the predecessor's output dimension); 0 disables coupling.
    #[serde(default)]
    pub coupling_dim: usize,
    /// Hidden layer widths; empty means a purely linear net.
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    /// Cycle count the phase input is normalized by.
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub criteria: PerCriterion<CriterionSpec>,
    #[serde(default)]
    pub training: TrainingSettings,
}

impl NarxSpec {
    /// Width of the process net input: lagged outputs, current + lagged
    /// actuations, coupling, and the phase input.
    pub fn process_input_width(&self) -> usize {
        self.output_dim * self.output_lag
            + self.actuation_dim * (self.actuation_lag + 1)
            + self.coupling_dim
            + 1
    }

    pub fn disturbance_input_width(&self) -> usize {
        self.actuation_dim * self.actuation_lag + 1
    }

    /// Invariant checks; returns (subpath, message) pairs for the validator.
    pub fn validate(&self, weights: &CriteriaWeights) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |p: &str, m: String| out.push((p.to_string(), m));
        if self.output_dim < 1 {
            push("output_dim", "must be >= 1".into());
        }
        if self.actuation_dim < 1 {
            push("actuation_dim", "must be >= 1".into());
        }
        if self.output_lag < 1 {
            push("output_lag", "must be >= 1".into());
        }
        if self.actuation_lag < 1 {
            push("actuation_lag", "must be >= 1".into());
        }
        if self.horizon < 1 {
            push("horizon", "must be >= 1".into());
        }
        if self.training.learning_rate <= 0.0 || !self.training.learning_rate.is_finite() {
            push("training.learning_rate", "must be positive and finite".into());
        }
        if self.training.batch_size < 1 {
            push("training.batch_size", "must be >= 1".into());
        }
        for z in Criterion::ALL {
            let c = self.criteria.get(z);
            let zp = |field: &str| format!("criteria.{z}.{field}");
            for &i in &c.drop_output_rows {
                if i >= self.output_dim {
                    out.push((zp("drop_output_rows"), format!("index {i} out of range")));
                }
            }
            for &i in &c.drop_output_lags {
                if i >= self.output_lag {
                    out.push((zp("drop_output_lags"), format!("index {i} out of range")));
                }
            }
            for &i in &c.drop_actuation_rows {
                if i >= self.actuation_dim {
                    out.push((zp("drop_actuation_rows"), format!("index {i} out of range")));
                }
            }
            for &i in &c.drop_actuation_lags {
                if i > self.actuation_lag {
                    out.push((zp("drop_actuation_lags"), format!("index {i} out of range")));
                }
            }
            let retained = self.retained_count(z);
            if retained == 0 && *weights.get(z) > 0.0 {
                out.push((
                    format!("criteria.{z}"),
                    format!("criterion {z} carries weight > 0 but retains no output components"),
                ));
            }
            if !c.map.coefficients.is_empty() && c.map.coefficients.len() != retained {
                out.push((
                    zp("map.coefficients"),
                    format!(
                        "expected {} coefficients (one per retained output), got {}",
                        retained,
                        c.map.coefficients.len()
                    ),
                ));
            }
            if c.map.coefficients.iter().any(|v| !v.is_finite()) || !c.map.offset.is_finite() {
                out.push((zp("map"), "map values must be finite".into()));
            }
            if c.map.offset < 0.0 {
                out.push((zp("map.offset"), "offset must be >= 0".into()));
            }
        }
        out
    }

    fn retained_count(&self, z: Criterion) -> usize {
        self.criteria.get(z).retained_outputs(self.output_dim).len()
    }
}

/// Per-channel input normalization, `(x - offset) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelNorm {
    pub offset: f64,
    pub scale: f64,
}

impl ChannelNorm {
    pub fn identity() -> Self {
        ChannelNorm { offset: 0.0, scale: 1.0 }
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.offset) / self.scale
    }
}

/// Input normalization constants, fitted once on the first training dataset and
/// then applied identically at training and inference time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub fitted: bool,
    pub output: Vec<ChannelNorm>,
    pub actuation: Vec<ChannelNorm>,
    pub coupling: Vec<ChannelNorm>,
}

impl Normalization {
    pub fn identity(spec: &NarxSpec) -> Self {
        Normalization {
            fitted: false,
            output: vec![ChannelNorm::identity(); spec.output_dim],
            actuation: vec![ChannelNorm::identity(); spec.actuation_dim],
            coupling: vec![ChannelNorm::identity(); spec.coupling_dim],
        }
    }
}

/// One recorded operating cycle of a module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub cycle: usize,
    pub commanded: Vec<f64>,
    pub disturbance: Vec<f64>,
    pub coupling: Vec<f64>,
    pub output: Vec<f64>,
}

/// Recorded operating data of one module, cycles strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingDataset {
    pub module: String,
    pub records: Vec<DatasetRecord>,
}

impl OperatingDataset {
    pub fn check(&self, spec: &NarxSpec) -> Result<(), NarxError> {
        let mut last = 0usize;
        for (i, r) in self.records.iter().enumerate() {
            if i > 0 && r.cycle <= last {
                return Err(NarxError::DatasetMismatch(format!(
                    "cycle indices must be strictly increasing (record {i})"
                )));
            }
            last = r.cycle;
            if r.commanded.len() != spec.actuation_dim
                || r.disturbance.len() != spec.actuation_dim
                || r.output.len() != spec.output_dim
                || r.coupling.len() != spec.coupling_dim
            {
                return Err(NarxError::DatasetMismatch(format!(
                    "record {i} dimensions do not match model `{}`",
                    spec.id
                )));
            }
        }
        Ok(())
    }
}

/// Ring of past process data: lagged outputs, lagged commanded actuations and
/// lagged observed disturbances, plus the current coupling input. Newest
/// entries first; zero-padded before start-up.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessHistory {
    outputs: VecDeque<Vec<f64>>,
    commanded: VecDeque<Vec<f64>>,
    disturbances: VecDeque<Vec<f64>>,
    coupling: Vec<f64>,
}

impl ProcessHistory {
    pub fn new(spec: &NarxSpec) -> Self {
        ProcessHistory {
            outputs: (0..spec.output_lag).map(|_| vec![0.0; spec.output_dim]).collect(),
            commanded: (0..spec.actuation_lag).map(|_| vec![0.0; spec.actuation_dim]).collect(),
            disturbances: (0..spec.actuation_lag).map(|_| vec![0.0; spec.actuation_dim]).collect(),
            coupling: vec![0.0; spec.coupling_dim],
        }
    }

    /// Lagged output, `lag` 0 = previous cycle.
    pub fn output(&self, lag: usize) -> &[f64] {
        &self.outputs[lag]
    }

    pub fn commanded(&self, lag: usize) -> &[f64] {
        &self.commanded[lag]
    }

    pub fn disturbance(&self, lag: usize) -> &[f64] {
        &self.disturbances[lag]
    }

    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    pub fn set_coupling(&mut self, w: Vec<f64>) {
        assert_eq!(w.len(), self.coupling.len(), "coupling width mismatch");
        self.coupling = w;
    }

    pub fn set_output(&mut self, lag: usize, value: Vec<f64>) {
        assert_eq!(value.len(), self.outputs[lag].len());
        self.outputs[lag] = value;
    }

    pub fn set_actuation(&mut self, lag: usize, commanded: Vec<f64>, disturbance: Vec<f64>) {
        assert_eq!(commanded.len(), self.commanded[lag].len());
        assert_eq!(disturbance.len(), self.disturbances[lag].len());
        self.commanded[lag] = commanded;
        self.disturbances[lag] = disturbance;
    }

    /// Shifts the rings forward one cycle with that cycle's realized values.
    pub fn advance(&mut self, output: Vec<f64>, commanded: Vec<f64>, disturbance: Vec<f64>) {
        assert_eq!(output.len(), self.outputs[0].len(), "output width mismatch");
        assert_eq!(commanded.len(), self.commanded[0].len(), "actuation width mismatch");
        assert_eq!(disturbance.len(), self.disturbances[0].len(), "disturbance width mismatch");
        self.outputs.push_front(output);
        self.outputs.pop_back();
        self.commanded.push_front(commanded);
        self.commanded.pop_back();
        self.disturbances.push_front(disturbance);
        self.disturbances.pop_back();
    }
}

/// Current and lagged effective actuations: commanded plus estimated
/// disturbance for the current cycle, commanded plus observed disturbance for
/// the lagged ones.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveActuation {
    pub current: Vec<f64>,
    pub lagged: Vec<Vec<f64>>,
}

pub fn effective_actuation(
    history: &ProcessHistory,
    commanded_now: &[f64],
    disturbance_estimate: &[f64],
) -> EffectiveActuation {
    assert_eq!(commanded_now.len(), disturbance_estimate.len(), "actuation width mismatch");
    let current = commanded_now
        .iter()
        .zip(disturbance_estimate)
        .map(|(u, d)| u + d)
        .collect();
    let lagged = (0..history.commanded.len())
        .map(|lag| {
            history
                .commanded(lag)
                .iter()
                .zip(history.disturbance(lag))
                .map(|(u, d)| u + d)
                .collect()
        })
        .collect();
    EffectiveActuation { current, lagged }
}

/// A materialized NARX model: declaration plus trained networks and
/// normalization constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarxModel {
    pub spec: NarxSpec,
    pub process_net: Mlp,
    pub disturbance_net: Mlp,
    pub normalization: Normalization,
    /// Training cycle counter, bumped by the model store on each adapt.
    pub version: u32,
}

impl NarxModel {
    /// Materializes a fresh model from its declaration, seeding both nets.
    pub fn new(spec: NarxSpec) -> Self {
        Self::with_seed(spec, None)
    }

    /// Materializes with an explicit seed override (used by the pipeline to
    /// derive independent weights per model instance).
    pub fn with_seed(spec: NarxSpec, seed: Option<u64>) -> Self {
        let seed = seed.unwrap_or(spec.seed);
        let mut f_sizes = vec![spec.process_input_width()];
        f_sizes.extend(&spec.hidden);
        f_sizes.push(spec.output_dim);
        let mut h_sizes = vec![spec.disturbance_input_width()];
        h_sizes.extend(&spec.hidden);
        h_sizes.push(spec.actuation_dim);
        let normalization = Normalization::identity(&spec);
        NarxModel {
            process_net: Mlp::new(&f_sizes, seed),
            disturbance_net: Mlp::new(&h_sizes, seed ^ 0x9e37_79b9_7f4a_7c15),
            spec,
            normalization,
            version: 0,
        }
    }

    /// Estimates the current actuation disturbance from the window of past
    /// observed disturbances and the cycle phase.
    pub fn estimate_disturbance(&self, history: &ProcessHistory, cycle: usize) -> Vec<f64> {
        let mut input = Vec::with_capacity(self.spec.disturbance_input_width());
        for lag in 0..self.spec.actuation_lag {
            input.extend_from_slice(history.disturbance(lag));
        }
        input.push(self.phase(cycle));
        self.disturbance_net.forward(&input)
    }

    /// One-step prediction: disturbance estimate, effective actuation, process
    /// net forward pass.
    pub fn predict(&self, history: &ProcessHistory, commanded: &[f64], cycle: usize) -> Vec<f64> {
        let estimate = self.estimate_disturbance(history, cycle);
        let actuation = effective_actuation(history, commanded, &estimate);
        let input = self.process_input(history, &actuation, cycle, None);
        self.process_net.forward(&input)
    }

    /// The criterion-projected predictor: reads only the retained rows and lags
    /// of the regressor and returns only the retained output components.
    pub fn project_criterion(&self, criterion: Criterion) -> CriterionView<'_> {
        CriterionView { model: self, criterion }
    }

    /// Sums the affine criterion map over a predicted per-cycle trajectory.
    /// An empty trajectory yields 0.
    pub fn service_effort(&self, criterion: Criterion, trajectory: &[Vec<f64>]) -> Result<f64, NarxError> {
        let map = &self.spec.criteria.get(criterion).map;
        let mut total = 0.0;
        for (i, y) in trajectory.iter().enumerate() {
            let effort = map.apply(y);
            if effort < 0.0 {
                return Err(NarxError::NegativeEffort {
                    criterion,
                    cycle: i + 1,
                    value: effort,
                });
            }
            total += effort;
        }
        Ok(total)
    }

    fn phase(&self, cycle: usize) -> f64 {
        cycle as f64 / self.spec.horizon as f64
    }

    /// Builds the process net input. With a criterion mask, dropped rows and
    /// lags are zeroed before normalization so the projected prediction cannot
    /// depend on them.
    fn process_input(
        &self,
        history: &ProcessHistory,
        actuation: &EffectiveActuation,
        cycle: usize,
        mask: Option<Criterion>,
    ) -> Vec<f64> {
        let spec = &self.spec;
        let drop = mask.map(|z| spec.criteria.get(z));
        let mut input = Vec::with_capacity(spec.process_input_width());
        for lag in 0..spec.output_lag {
            let lag_dropped = drop.is_some_and(|d| d.drop_output_lags.contains(&lag));
            for ch in 0..spec.output_dim {
                let dropped =
                    lag_dropped || drop.is_some_and(|d| d.drop_output_rows.contains(&ch));
                let raw = if dropped { 0.0 } else { history.output(lag)[ch] };
                input.push(self.normalization.output[ch].apply(raw));
            }
        }
        for lag in 0..=spec.actuation_lag {
            let source: &[f64] =
                if lag == 0 { &actuation.current } else { &actuation.lagged[lag - 1] };
            let lag_dropped = drop.is_some_and(|d| d.drop_actuation_lags.contains(&lag));
            for ch in 0..spec.actuation_dim {
                let dropped =
                    lag_dropped || drop.is_some_and(|d| d.drop_actuation_rows.contains(&ch));
                let raw = if dropped { 0.0 } else { source[ch] };
                input.push(self.normalization.actuation[ch].apply(raw));
            }
        }
        for ch in 0..spec.coupling_dim {
            input.push(self.normalization.coupling[ch].apply(history.coupling()[ch]));
        }
        input.push(self.phase(cycle));
        input
    }
}

/// Criterion-projected view of a model (Eq-style sub-matrix restriction
/// realized as input masking plus output selection).
#[derive(Debug, Clone, Copy)]
pub struct CriterionView<'a> {
    model: &'a NarxModel,
    criterion: Criterion,
}

impl CriterionView<'_> {
    pub fn criterion(&self) -> Criterion {
        self.criterion
    }

    pub fn retained_outputs(&self) -> Vec<usize> {
        self.model
            .spec
            .criteria
            .get(self.criterion)
            .retained_outputs(self.model.spec.output_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.retained_outputs().len()
    }

    /// Masked prediction restricted to the retained output components.
    pub fn predict(&self, history: &ProcessHistory, commanded: &[f64], cycle: usize) -> Vec<f64> {
        let estimate = self.model.estimate_disturbance(history, cycle);
        let actuation = effective_actuation(history, commanded, &estimate);
        let input = self.model.process_input(history, &actuation, cycle, Some(self.criterion));
        let full = self.model.process_net.forward(&input);
        self.retained_outputs().iter().map(|&i| full[i]).collect()
    }
}

/// Identifies the model instance serving one (module, configuration, operator)
/// triple of the system.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModelKey {
    pub module: String,
    pub configuration: String,
    pub operator: String,
}

impl ModelKey {
    pub fn new(module: &str, configuration: &str, operator: &str) -> Self {
        ModelKey {
            module: module.to_string(),
            configuration: configuration.to_string(),
            operator: operator.to_string(),
        }
    }

    /// File stem used by the model store.
    pub fn file_stem(&self) -> String {
        let clean = |s: &str| {
            s.chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
                .collect::<String>()
        };
        format!("{}__{}__{}", clean(&self.module), clean(&self.configuration), clean(&self.operator))
    }
}

impl std::fmt::Display for ModelKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}", self.module, self.configuration, self.operator)
    }
}

/// All materialized models of a run, keyed by their system triple.
#[derive(Debug, Clone, Default)]
pub struct ModelSet {
    pub models: BTreeMap<ModelKey, NarxModel>,
}

impl ModelSet {
    pub fn get(&self, key: &ModelKey) -> Option<&NarxModel> {
        self.models.get(key)
    }

    pub fn insert(&mut self, key: ModelKey, model: NarxModel) {
        self.models.insert(key, model);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(output_dim: usize, actuation_dim: usize) -> NarxSpec {
        NarxSpec {
            id: "test".into(),
            output_dim,
            actuation_dim,
            output_lag: 2,
            actuation_lag: 2,
            coupling_dim: 0,
            hidden: vec![6],
            horizon: 16,
            seed: 11,
            criteria: PerCriterion::default(),
            training: TrainingSettings::default(),
        }
    }

    #[test]
    fn zero_disturbance_net_estimates_zero() {
        let mut model = NarxModel::new(spec(1, 1));
        model.disturbance_net.zero_weights();
        let history = ProcessHistory::new(&model.spec);
        assert_eq!(model.estimate_disturbance(&history, 3), vec![0.0]);
    }

    #[test]
    fn disturbance_estimate_reduces_to_output_bias() {
        let mut model = NarxModel::new(spec(1, 1));
        model.disturbance_net.zero_weights();
        let last = model.disturbance_net.layers.len() - 1;
        model.disturbance_net.layers[last].biases = vec![0.75];
        let history = ProcessHistory::new(&model.spec);
        assert_eq!(model.estimate_disturbance(&history, 5), vec![0.75]);
    }

    #[test]
    fn disturbance_estimate_matches_explicit_loop_oracle() {
        let model = NarxModel::new(spec(1, 2));
        let mut history = ProcessHistory::new(&model.spec);
        history.set_actuation(0, vec![0.0, 0.0], vec![0.3, -0.1]);
        history.set_actuation(1, vec![0.0, 0.0], vec![0.05, 0.2]);
        let cycle = 4;

        // Independent forward pass over [d(k-1), d(k-2), phase].
        let input = [0.3, -0.1, 0.05, 0.2, cycle as f64 / 16.0];
        let mut x: Vec<f64> = input.to_vec();
        for (i, layer) in model.disturbance_net.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.out_dim];
            for r in 0..layer.out_dim {
                let mut s = layer.biases[r];
                for c in 0..layer.in_dim {
                    s += layer.weights[r * layer.in_dim + c] * x[c];
                }
                next[r] =
                    if i + 1 == model.disturbance_net.layers.len() { s } else { s.tanh() };
            }
            x = next;
        }

        let got = model.estimate_disturbance(&history, cycle);
        for (g, w) in got.iter().zip(&x) {
            assert!((g - w).abs() < 1e-15);
        }
    }

    #[test]
    fn effective_actuation_identity_when_no_disturbance() {
        let model = NarxModel::new(spec(1, 1));
        let mut history = ProcessHistory::new(&model.spec);
        history.set_actuation(0, vec![1.0], vec![0.0]);
        history.set_actuation(1, vec![2.0], vec![0.0]);
        let eff = effective_actuation(&history, &[3.0], &[0.0]);
        assert_eq!(eff.current, vec![3.0]);
        assert_eq!(eff.lagged, vec![vec![1.0], vec![2.0]]);
    }

    #[test]
    fn effective_actuation_adds_estimate() {
        let model = NarxModel::new(spec(1, 1));
        let history = ProcessHistory::new(&model.spec);
        let eff = effective_actuation(&history, &[1.0], &[0.25]);
        assert_eq!(eff.current, vec![1.25]);
    }

    #[test]
    fn effective_actuation_adds_observed_on_lags() {
        let model = NarxModel::new(spec(1, 1));
        let mut history = ProcessHistory::new(&model.spec);
        history.set_actuation(0, vec![2.0], vec![-0.5]);
        let eff = effective_actuation(&history, &[0.0], &[0.0]);
        assert_eq!(eff.lagged[0], vec![1.5]);
    }

    #[test]
    fn zero_process_net_predicts_output_bias() {
        let mut model = NarxModel::new(spec(2, 1));
        model.process_net.zero_weights();
        let last = model.process_net.layers.len() - 1;
        model.process_net.layers[last].biases = vec![1.5, -0.5];
        let mut history = ProcessHistory::new(&model.spec);
        history.set_output(0, vec![9.0, 9.0]);
        assert_eq!(model.predict(&history, &[4.0], 7), vec![1.5, -0.5]);
    }

    #[test]
    fn predict_matches_explicit_loop_oracle() {
        let mut model = NarxModel::new(spec(1, 1));
        // Zero disturbance path so the oracle input is fully known.
        model.disturbance_net.zero_weights();
        let mut history = ProcessHistory::new(&model.spec);
        history.set_output(0, vec![0.8]);
        history.set_output(1, vec![0.6]);
        history.set_actuation(0, vec![1.0], vec![0.0]);
        history.set_actuation(1, vec![0.5], vec![0.0]);
        let cycle = 3;
        let input = [0.8, 0.6, 2.0, 1.0, 0.5, cycle as f64 / 16.0];

        let mut x: Vec<f64> = input.to_vec();
        for (i, layer) in model.process_net.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.out_dim];
            for r in 0..layer.out_dim {
                let mut s = layer.biases[r];
                for c in 0..layer.in_dim {
                    s += layer.weights[r * layer.in_dim + c] * x[c];
                }
                next[r] = if i + 1 == model.process_net.layers.len() { s } else { s.tanh() };
            }
            x = next;
        }

        let got = model.predict(&history, &[2.0], cycle);
        for (g, w) in got.iter().zip(&x) {
            assert!((g - w).abs() < 1e-15);
        }
    }

    #[test]
    fn coupling_changes_prediction_iff_coupling_dim_set() {
        let mut s = spec(1, 1);
        s.coupling_dim = 1;
        let model = NarxModel::new(s);
        let mut history = ProcessHistory::new(&model.spec);
        let base = model.predict(&history, &[1.0], 2);
        history.set_coupling(vec![0.9]);
        let moved = model.predict(&history, &[1.0], 2);
        assert_ne!(base, moved);
    }

    #[test]
    fn empty_exclusion_projection_is_identity() {
        let model = NarxModel::new(spec(2, 1));
        let mut history = ProcessHistory::new(&model.spec);
        history.set_output(0, vec![0.4, -0.3]);
        let full = model.predict(&history, &[1.2], 5);
        let view = model.project_criterion(Criterion::Energy);
        assert_eq!(view.predict(&history, &[1.2], 5), full);
    }

    #[test]
    fn projection_selects_retained_rows() {
        let mut s = spec(2, 1);
        s.criteria.energy.drop_output_rows = vec![1];
        let model = NarxModel::new(s);
        let view = model.project_criterion(Criterion::Energy);
        assert_eq!(view.output_dim(), 1);
        assert_eq!(view.retained_outputs(), vec![0]);
        let history = ProcessHistory::new(&model.spec);
        assert_eq!(view.predict(&history, &[0.7], 1).len(), 1);
    }

    #[test]
    fn perturbing_dropped_entries_leaves_projection_unchanged() {
        let mut s = spec(2, 1);
        s.criteria.cost.drop_output_rows = vec![1];
        s.criteria.cost.drop_output_lags = vec![1];
        s.criteria.cost.drop_actuation_lags = vec![2];
        let model = NarxModel::new(s);
        let view = model.project_criterion(Criterion::Cost);

        let mut history = ProcessHistory::new(&model.spec);
        history.set_output(0, vec![0.5, 0.1]);
        history.set_output(1, vec![0.2, 0.3]);
        history.set_actuation(0, vec![1.0], vec![0.1]);
        history.set_actuation(1, vec![0.8], vec![0.2]);
        let base = view.predict(&history, &[1.5], 4);

        // Perturb dropped entries: row 1 everywhere, whole output lag 1, actuation lag 2.
        let mut perturbed = history.clone();
        perturbed.set_output(0, vec![0.5, 9.9]);
        perturbed.set_output(1, vec![7.7, -3.0]);
        perturbed.set_actuation(1, vec![5.5], vec![1.1]);
        assert_eq!(view.predict(&perturbed, &[1.5], 4), base);

        // Perturbing a retained entry changes the projection.
        let mut retained = history.clone();
        retained.set_output(0, vec![0.6, 0.1]);
        assert_ne!(view.predict(&retained, &[1.5], 4), base);
    }

    #[test]
    fn service_effort_sums_affine_map() {
        let mut s = spec(1, 1);
        s.criteria.energy.map = AffineMap { coefficients: vec![1.0], offset: 0.0 };
        let model = NarxModel::new(s);
        let traj = vec![vec![2.0], vec![2.0], vec![2.0]];
        assert_eq!(model.service_effort(Criterion::Energy, &traj).unwrap(), 6.0);
    }

    #[test]
    fn service_effort_empty_trajectory_is_zero() {
        let model = NarxModel::new(spec(1, 1));
        assert_eq!(model.service_effort(Criterion::Cost, &[]).unwrap(), 0.0);
    }

    #[test]
    fn service_effort_affine_example() {
        let mut s = spec(1, 1);
        s.criteria.cost.map = AffineMap { coefficients: vec![1.5], offset: 0.5 };
        let model = NarxModel::new(s);
        let traj = vec![vec![2.0], vec![4.0]];
        assert_eq!(model.service_effort(Criterion::Cost, &traj).unwrap(), 10.0);
    }

    #[test]
    fn negative_service_effort_is_an_error() {
        let mut s = spec(1, 1);
        s.criteria.energy.map = AffineMap { coefficients: vec![1.0], offset: 0.0 };
        let model = NarxModel::new(s);
        let err = model.service_effort(Criterion::Energy, &[vec![-1.0]]).unwrap_err();
        assert!(matches!(err, NarxError::NegativeEffort { .. }));
    }

    #[test]
    fn input_width_invariant() {
        let s = spec(3, 2);
        let model = NarxModel::new(s.clone());
        assert_eq!(
            model.process_net.input_dim(),
            s.output_dim * s.output_lag + s.actuation_dim * (s.actuation_lag + 1) + s.coupling_dim + 1
        );
    }
}
