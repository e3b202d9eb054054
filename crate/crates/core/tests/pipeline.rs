mod common;

use std::io::Read;
use std::time::Duration;

use kmanb::dataset::{read_csv, synthesize, write_csv, ClassCounts, Device, Scale, Target};
use kmanb::pipeline::{prepare, run, run_baseline, run_kmanb, Algorithm, DataSource, ExperimentConfig};

use common::small;

#[test]
fn fridge_kmanb_meets_accuracy_with_seven_clusters() {
    let config = ExperimentConfig::synthetic(Device::Fridge, Algorithm::Kmanb, 42);
    let r = run(&config).unwrap();
    assert!(r.apr.accuracy >= 0.95, "{}", r.apr.accuracy);
    let clusters = r.clusters.unwrap();
    assert_eq!(clusters.k, 7);
    assert!(r.timing.train_seconds > 0.0);
    assert_eq!(r.train_instances + r.test_instances, 59_944);
}

#[test]
fn kmanb_not_below_nb_on_fridge() {
    let config = ExperimentConfig::synthetic(Device::Fridge, Algorithm::Kmanb, 42);
    let (train, test) = prepare(&config).unwrap();
    let kmanb = run_kmanb(&train, &test, &config).unwrap();
    let nb = run_baseline(Algorithm::Nb, &train, &test, &config).unwrap();
    assert!(kmanb.apr.accuracy >= nb.apr.accuracy, "{} < {}", kmanb.apr.accuracy, nb.apr.accuracy);
}

#[test]
fn single_round_single_cluster_kmanb_is_nb() {
    for (device, target) in [
        (Device::Fridge, Target::AttackType),
        (Device::Modbus, Target::AttackType),
        (Device::Weather, Target::Label),
    ] {
        // Date alone separates the classes; without it and with low
        // separation NB makes mistakes worth comparing.
        let config = ExperimentConfig {
            drop_top_feature: true,
            train: DataSource::Synth {
                scale: Scale::TrainTest,
                separation: 0.3,
                fraction: Some(0.1),
            },
            boost_rounds: 1,
            k_override: Some(1),
            target,
            ..ExperimentConfig::synthetic(device, Algorithm::Kmanb, 11)
        };
        let (train, test) = prepare(&config).unwrap();
        let kmanb = run_kmanb(&train, &test, &config).unwrap();
        let nb = run_baseline(Algorithm::Nb, &train, &test, &config).unwrap();
        assert_eq!(kmanb.predictions, nb.predictions, "{device}");
        assert!(nb.apr.accuracy < 1.0, "{device}: data too easy to be a useful check");
    }
}

#[test]
fn dropping_top_feature_keeps_fridge_accuracy() {
    let config = ExperimentConfig::synthetic(Device::Fridge, Algorithm::Kmanb, 42);
    let full = run(&config).unwrap();
    let dropped = run(&ExperimentConfig {
        drop_top_feature: true,
        ..config
    })
    .unwrap();
    assert!((full.apr.accuracy - dropped.apr.accuracy).abs() <= 0.02);
    let ranking = dropped.ranking.unwrap();
    assert_eq!(ranking.dropped, "date");
    assert_eq!(ranking.ranking.scores.len(), 4);
}

#[test]
fn identical_inputs_give_identical_results() {
    for alg in [Algorithm::Kmanb, Algorithm::Nb, Algorithm::Knn, Algorithm::Rf] {
        let config = small(Device::GpsTracker, alg, 9, 0.05);
        let mut a = run(&config).unwrap();
        let mut b = run(&config).unwrap();
        a.timing = Default::default();
        b.timing = Default::default();
        assert_eq!(a, b, "{alg:?}");
        assert_eq!(a.predictions, b.predictions);
    }
}

#[test]
fn separate_train_and_test_files() {
    let dir = tempfile::tempdir().unwrap();
    let profile = Device::Thermostat.profile();
    let counts = ClassCounts::table(Device::Thermostat, Scale::TrainTest);
    let train_path = dir.path().join("train.csv");
    let test_path = dir.path().join("test.csv");
    write_csv(&train_path, &synthesize(&profile, &counts, 1, 6.0).unwrap()).unwrap();
    write_csv(&test_path, &synthesize(&profile, &counts, 2, 6.0).unwrap()).unwrap();
    let config = ExperimentConfig {
        train: DataSource::Csv(train_path),
        test: Some(DataSource::Csv(test_path)),
        split: None,
        ..ExperimentConfig::synthetic(Device::Thermostat, Algorithm::Kmanb, 3)
    };
    let r = run(&config).unwrap();
    assert!(r.apr.accuracy >= 0.95);
    assert_eq!(r.train_instances, counts.total() as usize);
}

/// A reader that stalls on every call, standing in for a slow CSV source.
struct Slow<R>(R, Duration);

impl<R: Read> Read for Slow<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        std::thread::sleep(self.1);
        let n = buf.len().min(4096);
        self.0.read(&mut buf[..n])
    }
}

#[test]
fn timing_excludes_loading() {
    let profile = Device::Fridge.profile();
    let data = synthesize(&profile, &ClassCounts::table(Device::Fridge, Scale::TrainTest), 5, 6.0).unwrap();
    let data = data.subset(&(0..3000).collect::<Vec<_>>());
    let mut bytes = Vec::new();
    kmanb::dataset::write_csv_to(&mut bytes, &data).unwrap();
    let started = std::time::Instant::now();
    let loaded = read_csv(Slow(bytes.as_slice(), Duration::from_millis(5)), &profile).unwrap();
    let load_seconds = started.elapsed().as_secs_f64();
    assert!(load_seconds > 0.1);
    let config = ExperimentConfig::synthetic(Device::Fridge, Algorithm::Nb, 0);
    let r = run_baseline(Algorithm::Nb, &loaded, &loaded, &config).unwrap();
    assert!(r.timing.train_seconds + r.timing.test_seconds < load_seconds);
}
