//! Synthetic ground-truth process generator with anomaly injection.
//!
//! The plant realizes a known closed-form process (linear or low-order
//! polynomial in the actuation) plus a declared disturbance profile acting on
//! the actuation channels. It supplies operating datasets for model training
//! and serves as the reference the adaptive models are measured against.

use crate::narx::{DatasetRecord, OperatingDataset};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum PlantError {
    #[error("cycles must be >= 1")]
    EmptyRun,
    #[error("excitation schedule has {got} entries but {want} cycles were requested")]
    ScheduleLength { got: usize, want: usize },
    #[error("dataset io: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed dataset file: {0}")]
    Format(String),
}

/// Additive disturbance on the actuation channels, as a function of the cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DisturbanceProfile {
    #[default]
    None,
    Step {
        magnitude: f64,
        onset: usize,
    },
    Drift {
        rate: f64,
        onset: usize,
    },
    Periodic {
        amplitude: f64,
        period: f64,
        onset: usize,
    },
}

impl DisturbanceProfile {
    pub fn value(&self, cycle: usize) -> f64 {
        match *self {
            DisturbanceProfile::None => 0.0,
            DisturbanceProfile::Step { magnitude, onset } => {
                if cycle >= onset {
                    magnitude
                } else {
                    0.0
                }
            }
            DisturbanceProfile::Drift { rate, onset } => {
                if cycle >= onset {
                    rate * (cycle - onset + 1) as f64
                } else {
                    0.0
                }
            }
            DisturbanceProfile::Periodic { amplitude, period, onset } => {
                if cycle >= onset {
                    amplitude * (2.0 * std::f64::consts::PI * (cycle - onset) as f64 / period).sin()
                } else {
                    0.0
                }
            }
        }
    }
}

/// Closed-form true dynamics:
/// `y(k) = offset + sum_t A_t y(k-t) + sum_t B_t u_eff(k-t) + C w(k) + Q (u_eff(k))^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dynamics {
    pub output_dim: usize,
    pub actuation_dim: usize,
    #[serde(default)]
    pub coupling_dim: usize,
    /// Output lag matrices, each `output_dim x output_dim`.
    pub output_coeffs: Vec<Vec<Vec<f64>>>,
    /// Actuation matrices, index 0 applies to the current effective actuation.
    pub actuation_coeffs: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub coupling_coeffs: Option<Vec<Vec<f64>>>,
    /// Optional elementwise-squared actuation term.
    #[serde(default)]
    pub quadratic_coeffs: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub offset: Vec<f64>,
}

impl Dynamics {
    pub fn output_lag(&self) -> usize {
        self.output_coeffs.len()
    }

    pub fn actuation_lag(&self) -> usize {
        self.actuation_coeffs.len().saturating_sub(1)
    }

    fn evaluate(&self, outputs: &VecDeque<Vec<f64>>, actuations: &VecDeque<Vec<f64>>, coupling: &[f64]) -> Vec<f64> {
        let mut y = if self.offset.is_empty() {
            vec![0.0; self.output_dim]
        } else {
            self.offset.clone()
        };
        let mat_vec = |m: &Vec<Vec<f64>>, v: &[f64], acc: &mut Vec<f64>| {
            for (r, row) in m.iter().enumerate() {
                for (c, coeff) in row.iter().enumerate() {
                    acc[r] += coeff * v[c];
                }
            }
        };
        for (t, m) in self.output_coeffs.iter().enumerate() {
            mat_vec(m, &outputs[t], &mut y);
        }
        for (t, m) in self.actuation_coeffs.iter().enumerate() {
            mat_vec(m, &actuations[t], &mut y);
        }
        if let Some(c) = &self.coupling_coeffs {
            mat_vec(c, coupling, &mut y);
        }
        if let Some(q) = &self.quadratic_coeffs {
            let squared: Vec<f64> = actuations[0].iter().map(|v| v * v).collect();
            mat_vec(q, &squared, &mut y);
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    pub module: String,
    pub dynamics: Dynamics,
    #[serde(default)]
    pub disturbance: DisturbanceProfile,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Explicit lagged state of one plant instance.
#[derive(Debug, Clone)]
pub struct PlantState {
    outputs: VecDeque<Vec<f64>>,
    actuations: VecDeque<Vec<f64>>,
    rng: ChaCha8Rng,
}

impl PlantState {
    pub fn new(spec: &PlantSpec) -> Self {
        let d = &spec.dynamics;
        PlantState {
            outputs: (0..d.output_lag()).map(|_| vec![0.0; d.output_dim]).collect(),
            // Index 0 holds the current effective actuation once stepped.
            actuations: (0..d.actuation_coeffs.len())
                .map(|_| vec![0.0; d.actuation_dim])
                .collect(),
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
        }
    }
}

/// Advances the true dynamics one cycle. Returns the true output and the
/// realized disturbance on the actuation channels (what an anomaly detector
/// would have observed).
pub fn step_plant(
    spec: &PlantSpec,
    state: &mut PlantState,
    commanded: &[f64],
    coupling: &[f64],
    cycle: usize,
) -> (Vec<f64>, Vec<f64>) {
    let d = &spec.dynamics;
    assert_eq!(commanded.len(), d.actuation_dim, "actuation width mismatch");
    let disturbance = vec![spec.disturbance.value(cycle); d.actuation_dim];
    let effective: Vec<f64> = commanded
        .iter()
        .zip(&disturbance)
        .map(|(u, dv)| u + dv)
        .collect();

    // The current actuation occupies slot 0; lagged ones follow.
    state.actuations.push_front(effective);
    state.actuations.pop_back();

    let mut output = d.evaluate(&state.outputs, &state.actuations, coupling);
    if spec.noise_std > 0.0 {
        let normal = Normal::new(0.0, spec.noise_std).expect("validated noise std");
        for v in &mut output {
            *v += normal.sample(&mut state.rng);
        }
    }

    state.outputs.push_front(output.clone());
    state.outputs.pop_back();
    (output, disturbance)
}

/// How the commanded actuation is chosen per cycle when generating a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Excitation {
    /// Seeded uniform samples within per-channel bounds.
    UniformRandom { lo: Vec<f64>, hi: Vec<f64>, seed: u64 },
    /// Explicit schedule, one actuation vector per cycle.
    Schedule { values: Vec<Vec<f64>> },
}

/// Runs the plant over an excitation schedule and records every cycle.
/// Deterministic per seed; coupling inputs are zero.
pub fn generate_dataset(
    spec: &PlantSpec,
    excitation: &Excitation,
    cycles: usize,
) -> Result<OperatingDataset, PlantError> {
    if cycles < 1 {
        return Err(PlantError::EmptyRun);
    }
    if let Excitation::Schedule { values } = excitation {
        if values.len() != cycles {
            return Err(PlantError::ScheduleLength { got: values.len(), want: cycles });
        }
    }

    let mut rng = match excitation {
        Excitation::UniformRandom { seed, .. } => ChaCha8Rng::seed_from_u64(*seed),
        Excitation::Schedule { .. } => ChaCha8Rng::seed_from_u64(0),
    };
    let mut state = PlantState::new(spec);
    let coupling = vec![0.0; spec.dynamics.coupling_dim];
    let mut records = Vec::with_capacity(cycles);
    for k in 1..=cycles {
        let commanded = match excitation {
            Excitation::UniformRandom { lo, hi, .. } => lo
                .iter()
                .zip(hi)
                .map(|(&a, &b)| {
                    use rand::Rng;
                    if a == b {
                        a
                    } else {
                        rng.gen_range(a..=b)
                    }
                })
                .collect::<Vec<f64>>(),
            Excitation::Schedule { values } => values[k - 1].clone(),
        };
        let (output, disturbance) = step_plant(spec, &mut state, &commanded, &coupling, k);
        records.push(DatasetRecord {
            cycle: k,
            commanded,
            disturbance,
            coupling: coupling.clone(),
            output,
        });
    }
    Ok(OperatingDataset { module: spec.module.clone(), records })
}

/// Writes a dataset as CSV with the column contract
/// `k,u0..,du0..,w0..,y0..`.
pub fn write_dataset_csv(path: &Path, dataset: &OperatingDataset) -> Result<(), PlantError> {
    let first = dataset
        .records
        .first()
        .ok_or_else(|| PlantError::Format("dataset has no records".into()))?;
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["k".to_string()];
    header.extend((0..first.commanded.len()).map(|i| format!("u{i}")));
    header.extend((0..first.disturbance.len()).map(|i| format!("du{i}")));
    header.extend((0..first.coupling.len()).map(|i| format!("w{i}")));
    header.extend((0..first.output.len()).map(|i| format!("y{i}")));
    writer.write_record(&header)?;
    for r in &dataset.records {
        let mut row = vec![r.cycle.to_string()];
        for v in r.commanded.iter().chain(&r.disturbance).chain(&r.coupling).chain(&r.output) {
            row.push(format!("{v}"));
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a dataset written by [`write_dataset_csv`]; dimensions are inferred
/// from the header.
pub fn read_dataset_csv(path: &Path, module: &str) -> Result<OperatingDataset, PlantError> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    let count_prefix = |p: &str| {
        header
            .iter()
            .filter(|h| h.starts_with(p) && h[p.len()..].chars().all(|c| c.is_ascii_digit()))
            .count()
    };
    if header.get(0) != Some("k") {
        return Err(PlantError::Format("first column must be `k`".into()));
    }
    let (nu, ndu, nw, ny) =
        (count_prefix("u"), count_prefix("du"), count_prefix("w"), count_prefix("y"));
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let mut fields = row.iter();
        let cycle: usize = fields
            .next()
            .ok_or_else(|| PlantError::Format(format!("row {i} empty")))?
            .parse()
            .map_err(|e| PlantError::Format(format!("row {i} cycle: {e}")))?;
        let mut take = |n: usize| -> Result<Vec<f64>, PlantError> {
            (0..n)
                .map(|_| {
                    fields
                        .next()
                        .ok_or_else(|| PlantError::Format(format!("row {i} too short")))?
                        .parse::<f64>()
                        .map_err(|e| PlantError::Format(format!("row {i}: {e}")))
                })
                .collect()
        };
        let commanded = take(nu)?;
        let disturbance = take(ndu)?;
        let coupling = take(nw)?;
        let output = take(ny)?;
        records.push(DatasetRecord { cycle, commanded, disturbance, coupling, output });
    }
    Ok(OperatingDataset { module: module.to_string(), records })
}

/// Convenience spec for a scalar first-order linear plant
/// `y(k) = a y(k-1) + b u_eff(k)`.
pub fn scalar_linear_plant(module: &str, a: f64, b: f64) -> PlantSpec {
    PlantSpec {
        module: module.to_string(),
        dynamics: Dynamics {
            output_dim: 1,
            actuation_dim: 1,
            coupling_dim: 0,
            output_coeffs: vec![vec![vec![a]]],
            actuation_coeffs: vec![vec![vec![b]]],
            coupling_coeffs: None,
            quadratic_coeffs: None,
            offset: vec![],
        },
        disturbance: DisturbanceProfile::None,
        noise_std: 0.0,
        seed: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_disturbance_profile_is_zero_everywhere() {
        let p = DisturbanceProfile::None;
        assert!((1..50).all(|k| p.value(k) == 0.0));
    }

    #[test]
    fn step_profile_definition() {
        let p = DisturbanceProfile::Step { magnitude: 0.3, onset: 5 };
        for k in 1..5 {
            assert_eq!(p.value(k), 0.0);
        }
        for k in 5..20 {
            assert_eq!(p.value(k), 0.3);
        }
    }

    #[test]
    fn linear_plant_matches_closed_form_recursion() {
        let spec = scalar_linear_plant("m", 0.5, 1.0);
        let mut state = PlantState::new(&spec);
        // y(k) = 0.5 y(k-1) + u, y(0) = 0, u = 1: 1, 1.5, 1.75, ...
        let mut expected = 0.0;
        for k in 1..=8 {
            let (y, d) = step_plant(&spec, &mut state, &[1.0], &[], k);
            expected = 0.5 * expected + 1.0;
            assert!((y[0] - expected).abs() < 1e-12, "cycle {k}: {} vs {expected}", y[0]);
            assert_eq!(d, vec![0.0]);
        }
    }

    #[test]
    fn zero_cycles_rejected() {
        let spec = scalar_linear_plant("m", 0.5, 1.0);
        let ex = Excitation::UniformRandom { lo: vec![0.0], hi: vec![1.0], seed: 1 };
        assert!(matches!(generate_dataset(&spec, &ex, 0), Err(PlantError::EmptyRun)));
    }

    #[test]
    fn same_seed_same_dataset() {
        let mut spec = scalar_linear_plant("m", 0.3, 1.0);
        spec.noise_std = 0.05;
        spec.seed = 7;
        let ex = Excitation::UniformRandom { lo: vec![0.0], hi: vec![2.0], seed: 13 };
        let a = generate_dataset(&spec, &ex, 25).unwrap();
        let b = generate_dataset(&spec, &ex, 25).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn replay_reproduces_output_column_without_noise() {
        let mut spec = scalar_linear_plant("m", 0.4, 0.8);
        spec.disturbance = DisturbanceProfile::Step { magnitude: 0.2, onset: 3 };
        let ex = Excitation::UniformRandom { lo: vec![0.0], hi: vec![1.0], seed: 2 };
        let data = generate_dataset(&spec, &ex, 30).unwrap();

        let mut state = PlantState::new(&spec);
        for r in &data.records {
            let (y, d) = step_plant(&spec, &mut state, &r.commanded, &r.coupling, r.cycle);
            assert_eq!(y, r.output);
            assert_eq!(d, r.disturbance);
        }
    }

    #[test]
    fn disturbance_column_matches_profile() {
        let mut spec = scalar_linear_plant("m", 0.4, 0.8);
        spec.disturbance = DisturbanceProfile::Step { magnitude: 0.3, onset: 5 };
        let ex = Excitation::UniformRandom { lo: vec![0.0], hi: vec![1.0], seed: 2 };
        let data = generate_dataset(&spec, &ex, 10).unwrap();
        for r in &data.records {
            assert_eq!(r.disturbance[0], spec.disturbance.value(r.cycle));
        }
    }

    #[test]
    fn csv_round_trip() {
        let spec = scalar_linear_plant("m", 0.5, 1.0);
        let ex = Excitation::UniformRandom { lo: vec![0.0], hi: vec![1.0], seed: 4 };
        let data = generate_dataset(&spec, &ex, 12).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        write_dataset_csv(&path, &data).unwrap();
        let back = read_dataset_csv(&path, "m").unwrap();
        assert_eq!(back, data);
    }
}
