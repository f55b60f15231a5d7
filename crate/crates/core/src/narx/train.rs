//! Training of the two NARX networks on recorded operating data.
//!
//! The disturbance net learns to predict the observed disturbance of a cycle
//! from the lagged disturbance window; the process net is trained with teacher
//! forcing on true lagged outputs and true effective actuations. Both minimize
//! mean squared one-step-ahead error by seeded minibatch gradient descent.

use super::mlp::{Mlp, MlpGradient};
use super::{effective_actuation, NarxError, NarxModel, OperatingDataset, ProcessHistory};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { learning_rate: 0.05, epochs: 200, batch_size: 16, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

/// Supervised pairs for both nets, one entry per dataset record.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingBatch {
    pub process: Vec<TrainingPair>,
    pub disturbance: Vec<TrainingPair>,
}

impl TrainingBatch {
    pub fn len(&self) -> usize {
        self.process.len()
    }

    pub fn is_empty(&self) -> bool {
        self.process.is_empty()
    }

    fn subset(&self, indices: &[usize]) -> TrainingBatch {
        TrainingBatch {
            process: indices.iter().map(|&i| self.process[i].clone()).collect(),
            disturbance: indices.iter().map(|&i| self.disturbance[i].clone()).collect(),
        }
    }
}

/// Gradient of the batch loss w.r.t. every weight and bias of both nets.
#[derive(Debug, Clone, PartialEq)]
pub struct NarxGradient {
    pub process: MlpGradient,
    pub disturbance: MlpGradient,
}

/// Fills a history from dataset rows before index `i` (zero-padded at the
/// start) so model inputs during training match the runtime contract.
fn history_at(model: &NarxModel, data: &OperatingDataset, i: usize) -> ProcessHistory {
    let spec = &model.spec;
    let mut history = ProcessHistory::new(spec);
    for lag in 0..spec.output_lag {
        if i > lag {
            history.set_output(lag, data.records[i - 1 - lag].output.clone());
        }
    }
    for lag in 0..spec.actuation_lag {
        if i > lag {
            let r = &data.records[i - 1 - lag];
            history.set_actuation(lag, r.commanded.clone(), r.disturbance.clone());
        }
    }
    if spec.coupling_dim > 0 {
        history.set_coupling(data.records[i].coupling.clone());
    }
    history
}

/// Builds the supervised pairs for every record of the dataset using the
/// model's current normalization constants.
pub fn training_batch(model: &NarxModel, data: &OperatingDataset) -> Result<TrainingBatch, NarxError> {
    data.check(&model.spec)?;
    let spec = &model.spec;
    let mut process = Vec::with_capacity(data.records.len());
    let mut disturbance = Vec::with_capacity(data.records.len());
    for (i, record) in data.records.iter().enumerate() {
        let history = history_at(model, data, i);

        // Teacher forcing: the current actuation uses the observed disturbance.
        let actuation = effective_actuation(&history, &record.commanded, &record.disturbance);
        let input = model.process_input(&history, &actuation, record.cycle, None);
        process.push(TrainingPair { input, target: record.output.clone() });

        let mut h_input = Vec::with_capacity(spec.disturbance_input_width());
        for lag in 0..spec.actuation_lag {
            h_input.extend_from_slice(history.disturbance(lag));
        }
        h_input.push(record.cycle as f64 / spec.horizon as f64);
        disturbance.push(TrainingPair { input: h_input, target: record.disturbance.clone() });
    }
    Ok(TrainingBatch { process, disturbance })
}

fn net_loss(net: &Mlp, pairs: &[TrainingPair]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for pair in pairs {
        let out = net.forward(&pair.input);
        total += out
            .iter()
            .zip(&pair.target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    total / pairs.len() as f64
}

/// Combined mean squared loss of both nets over the batch.
pub fn total_batch_loss(model: &NarxModel, batch: &TrainingBatch) -> f64 {
    net_loss(&model.process_net, &batch.process) + net_loss(&model.disturbance_net, &batch.disturbance)
}

fn net_gradient(net: &Mlp, pairs: &[TrainingPair]) -> MlpGradient {
    let mut grad = MlpGradient::zeros_like(net);
    if pairs.is_empty() {
        return grad;
    }
    for pair in pairs {
        let trace = net.forward_trace(&pair.input);
        let out = trace.last().unwrap();
        let d_out: Vec<f64> = out
            .iter()
            .zip(&pair.target)
            .map(|(a, b)| 2.0 * (a - b))
            .collect();
        net.backward(&trace, &d_out, &mut grad);
    }
    grad.scale(1.0 / pairs.len() as f64);
    grad
}

/// Analytic gradient of the mean squared loss over the batch, for both nets.
pub fn gradient_of_loss(model: &NarxModel, batch: &TrainingBatch) -> NarxGradient {
    assert!(!batch.is_empty(), "gradient of an empty batch is undefined");
    NarxGradient {
        process: net_gradient(&model.process_net, &batch.process),
        disturbance: net_gradient(&model.disturbance_net, &batch.disturbance),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Combined loss before training followed by one entry per epoch.
    pub loss_curve: Vec<f64>,
    pub initial_loss: f64,
    pub final_loss: f64,
}

fn fit_normalization(model: &mut NarxModel, data: &OperatingDataset) {
    let spec = &model.spec;
    let fit = |values: Vec<Vec<f64>>| -> Vec<super::ChannelNorm> {
        let dim = values.first().map_or(0, |v| v.len());
        (0..dim)
            .map(|ch| {
                let n = values.len() as f64;
                let mean = values.iter().map(|v| v[ch]).sum::<f64>() / n;
                let var = values.iter().map(|v| (v[ch] - mean).powi(2)).sum::<f64>() / n;
                super::ChannelNorm { offset: mean, scale: var.sqrt().max(1e-6) }
            })
            .collect()
    };
    model.normalization.output = fit(data.records.iter().map(|r| r.output.clone()).collect());
    // The process net sees effective actuations, so fit on commanded + observed.
    model.normalization.actuation = fit(
        data.records
            .iter()
            .map(|r| {
                r.commanded
                    .iter()
                    .zip(&r.disturbance)
                    .map(|(u, d)| u + d)
                    .collect()
            })
            .collect(),
    );
    if spec.coupling_dim > 0 {
        model.normalization.coupling =
            fit(data.records.iter().map(|r| r.coupling.clone()).collect());
    }
    model.normalization.fitted = true;
}

/// Trains both nets on the dataset. Deterministic given the seed; the returned
/// model carries, per net, the epoch parameters with the lowest full-dataset
/// loss, so the final training loss never exceeds the initial one.
pub fn train(
    model: &NarxModel,
    data: &OperatingDataset,
    config: &TrainConfig,
) -> Result<(NarxModel, TrainReport), NarxError> {
    let mut trained = model.clone();
    if !trained.normalization.fitted && !data.records.is_empty() {
        fit_normalization(&mut trained, data);
    }
    let batch = training_batch(&trained, data)?;
    if batch.is_empty() {
        return Ok((
            trained,
            TrainReport { loss_curve: vec![0.0], initial_loss: 0.0, final_loss: 0.0 },
        ));
    }

    let mut f_net = trained.process_net.clone();
    let mut h_net = trained.disturbance_net.clone();
    let initial_f = net_loss(&f_net, &batch.process);
    let initial_h = net_loss(&h_net, &batch.disturbance);
    let mut best_f = (initial_f, f_net.clone());
    let mut best_h = (initial_h, h_net.clone());
    let mut curve = vec![initial_f + initial_h];

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut indices: Vec<usize> = (0..batch.len()).collect();
    for epoch in 0..config.epochs {
        indices.shuffle(&mut rng);
        for chunk in indices.chunks(config.batch_size.max(1)) {
            let mini = batch.subset(chunk);
            let grad_f = net_gradient(&f_net, &mini.process);
            let grad_h = net_gradient(&h_net, &mini.disturbance);
            f_net.apply_gradient(&grad_f, config.learning_rate);
            h_net.apply_gradient(&grad_h, config.learning_rate);
        }
        let loss_f = net_loss(&f_net, &batch.process);
        let loss_h = net_loss(&h_net, &batch.disturbance);
        let total = loss_f + loss_h;
        if !total.is_finite() {
            return Err(NarxError::Diverged { epoch, loss: total });
        }
        curve.push(total);
        if loss_f < best_f.0 {
            best_f = (loss_f, f_net.clone());
        }
        if loss_h < best_h.0 {
            best_h = (loss_h, h_net.clone());
        }
    }

    trained.process_net = best_f.1;
    trained.disturbance_net = best_h.1;
    let final_loss = best_f.0 + best_h.0;
    let report = TrainReport {
        loss_curve: curve,
        initial_loss: initial_f + initial_h,
        final_loss,
    };
    Ok((trained, report))
}

/// Mean squared one-step-ahead prediction error over a dataset, using the full
/// runtime prediction path (lagged values observed, current disturbance
/// estimated by the disturbance net).
pub fn one_step_mse(model: &NarxModel, data: &OperatingDataset) -> f64 {
    if data.records.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for (i, record) in data.records.iter().enumerate() {
        let history = history_at(model, data, i);
        let predicted = model.predict(&history, &record.commanded, record.cycle);
        total += predicted
            .iter()
            .zip(&record.output)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    total / data.records.len() as f64
}
