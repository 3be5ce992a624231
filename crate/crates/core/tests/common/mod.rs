#![allow(dead_code)]

pub mod oracle;

use std::path::Path;

use padam::harness::{DatasetSpec, ModelConfig, TrialConfig};
use padam::model::ModelKind;

/// Two well-separated Gaussian blobs, logistic regression, 60 epochs.
pub fn blobs_config(out: &Path, optimizer: &str) -> TrialConfig {
    TrialConfig {
        optimizer: optimizer.into(),
        model: ModelConfig {
            kind: ModelKind::Logreg,
            hidden_dim: None,
            ..ModelConfig::default()
        },
        dataset: DatasetSpec::Blobs {
            num_classes: 2,
            per_class: 500,
            dim: 2,
            separation: 10.0,
            seed: None,
        },
        epochs: Some(60),
        output_dir: out.to_owned(),
        ..TrialConfig::default()
    }
}

/// Two-moons with the default MLP.
pub fn moons_config(out: &Path, optimizer: &str, epochs: usize) -> TrialConfig {
    TrialConfig {
        optimizer: optimizer.into(),
        epochs: Some(epochs),
        output_dir: out.to_owned(),
        ..TrialConfig::default()
    }
}

/// metrics.csv with the wall-clock column cut off.
pub fn metrics_without_wall_time(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}
