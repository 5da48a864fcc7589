//! Shared fixtures for the hot-path benchmarks.

use driftsense_core::features::vectorize;
use driftsense_core::labeler::{generate_training_data, LabelParams, Window};
use driftsense_core::learners::LabeledSample;
use driftsense_core::pipeline::{PipelineConfig, StreamData};

/// One window of the default synthetic stream.
pub struct Fixture {
    pub cfg: PipelineConfig,
    pub window: Window,
    pub samples: Vec<LabeledSample>,
}

pub fn fixture(seed: u64) -> Fixture {
    let cfg = PipelineConfig {
        seed,
        n_windows: 1,
        synth_drift_windows: vec![],
        ..PipelineConfig::default()
    };
    let data = StreamData::synthetic(&cfg).expect("default stream generates");
    let (start, end) = cfg.window_bounds(0);
    let window = Window::slice(0, start, end, &data.posts, &data.events, cfg.label_max_dt).expect("valid bounds");
    let samples = generate_training_data(&window, &LabelParams::default(), end)
        .expect("closed window")
        .samples;
    Fixture { cfg, window, samples }
}

pub fn texts(f: &Fixture) -> Vec<&str> {
    f.window.posts.iter().map(|p| p.text.as_str()).collect()
}

pub fn features(f: &Fixture) -> Vec<driftsense_core::FeatureVector> {
    texts(f).into_iter().map(|t| vectorize(t, f.cfg.feature_dim)).collect()
}
