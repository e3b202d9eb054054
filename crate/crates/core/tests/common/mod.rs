#![allow(dead_code)]

use kmanb::dataset::{Device, Scale};
use kmanb::pipeline::{Algorithm, DataSource, ExperimentConfig};
use serde_json::Value;

/// Zeroes both timing fields wherever they occur.
pub fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            for (key, value) in map.iter_mut() {
                if key == "train_seconds" || key == "test_seconds" {
                    *value = Value::from(0.0);
                } else {
                    strip_timing(value);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

/// A synthetic experiment scaled down to `fraction` of the device's rows.
pub fn small(device: Device, algorithm: Algorithm, seed: u64, fraction: f64) -> ExperimentConfig {
    ExperimentConfig {
        train: DataSource::Synth {
            scale: Scale::TrainTest,
            separation: 6.0,
            fraction: Some(fraction),
        },
        rf_trees: Some(10),
        ..ExperimentConfig::synthetic(device, algorithm, seed)
    }
}
