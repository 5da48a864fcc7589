use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::drift::{DetectorConfig, DetectorMode, Schedule, ScheduleKind};
use crate::ensemble::{EnsembleConfig, RelevancyQuery, Retrieval, Scheme};
use crate::features::DEFAULT_DIM;
use crate::geotime::{DAY, DEFAULT_MATCH_WINDOW, DEFAULT_MEMORY_TTL};
use crate::ingest::{SynthConfig, DEFAULT_START_TS, DEFAULT_WINDOW_SPAN};
use crate::labeler::{LabelParams, DEFAULT_EXCLUSION_WINDOW};
use crate::learners::{Hyper, LearnerKind};

/// Every tunable of the pipeline as one flat key/value table. Durations are
/// in seconds. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub n_windows: u32,
    pub start_ts: i64,
    pub window_span: i64,
    pub feature_dim: usize,

    pub learner_kinds: Vec<LearnerKind>,
    pub lr: f64,
    pub l2: f64,
    pub epochs: u32,
    pub update_lr: f64,
    pub update_epochs: u32,
    /// Tail fraction of each window's labeled data held out for validation.
    pub holdout: f64,

    pub ensemble_scheme: Scheme,
    pub ensemble_retrieval: Retrieval,
    pub ensemble_size: usize,
    pub ensemble_query: RelevancyQuery,
    pub expert_weights: BTreeMap<LearnerKind, f64>,

    pub schedule_kind: ScheduleKind,
    pub schedule_interval: i64,
    pub schedule_min_gap: i64,
    pub schedule_max_gap: i64,

    pub detector_mode: DetectorMode,
    pub detector_window: usize,
    pub detector_low_conf_lo: f64,
    pub detector_low_conf_hi: f64,
    pub detector_margin_tau: f64,
    pub detector_fraction: f64,
    pub detector_persistence: u64,

    pub label_max_dt: i64,
    pub label_radius: u32,
    pub label_exclusion: bool,
    pub label_exclusion_window: i64,

    pub group_min_posts: usize,
    pub group_radius: u32,
    pub group_span: i64,

    pub location_ttl: i64,
    pub gazetteer: Option<PathBuf>,
    pub posts_path: Option<PathBuf>,
    pub events_path: Option<PathBuf>,
    pub store_dir: Option<PathBuf>,

    pub synth_posts_per_window: u32,
    pub synth_positive_fraction: f64,
    pub synth_vocab_relevant: u32,
    pub synth_vocab_irrelevant: u32,
    pub synth_drift_windows: Vec<u32>,
    pub synth_swap_ratio: f64,
    pub synth_events_per_window: u32,
    pub synth_cells_universe: u32,
    pub synth_words_per_post: u32,
    pub synth_keyword_rate: f64,
    pub synth_negative_location_rate: f64,
    pub synth_sparse_positive_rate: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let hyper = Hyper::default();
        let schedule = Schedule::default();
        let det = DetectorConfig::default();
        let synth = SynthConfig::default();
        Self {
            seed: 1,
            n_windows: synth.n_windows,
            start_ts: DEFAULT_START_TS,
            window_span: DEFAULT_WINDOW_SPAN,
            feature_dim: DEFAULT_DIM,
            learner_kinds: vec![LearnerKind::Logreg, LearnerKind::Svm],
            lr: hyper.lr,
            l2: hyper.l2,
            epochs: hyper.epochs,
            update_lr: hyper.update_lr,
            update_epochs: hyper.update_epochs,
            holdout: 0.2,
            ensemble_scheme: Scheme::Unweighted,
            ensemble_retrieval: Retrieval::Recency,
            ensemble_size: 5,
            ensemble_query: RelevancyQuery::Post,
            expert_weights: BTreeMap::new(),
            schedule_kind: schedule.kind,
            schedule_interval: schedule.interval,
            schedule_min_gap: schedule.min_gap,
            schedule_max_gap: schedule.max_gap,
            detector_mode: det.mode,
            detector_window: det.window,
            detector_low_conf_lo: det.low_conf_lo,
            detector_low_conf_hi: det.low_conf_hi,
            detector_margin_tau: det.margin_tau,
            detector_fraction: det.fraction,
            detector_persistence: det.persistence,
            label_max_dt: DEFAULT_MATCH_WINDOW,
            label_radius: 0,
            label_exclusion: true,
            label_exclusion_window: DEFAULT_EXCLUSION_WINDOW,
            group_min_posts: 1,
            group_radius: 1,
            group_span: 3 * DAY,
            location_ttl: DEFAULT_MEMORY_TTL,
            gazetteer: None,
            posts_path: None,
            events_path: None,
            store_dir: None,
            synth_posts_per_window: synth.posts_per_window,
            synth_positive_fraction: synth.positive_fraction,
            synth_vocab_relevant: synth.vocab_relevant,
            synth_vocab_irrelevant: synth.vocab_irrelevant,
            synth_drift_windows: synth.drift_windows,
            synth_swap_ratio: synth.swap_ratio,
            synth_events_per_window: synth.events_per_window,
            synth_cells_universe: synth.cells_universe,
            synth_words_per_post: synth.words_per_post,
            synth_keyword_rate: synth.keyword_rate,
            synth_negative_location_rate: synth.negative_location_rate,
            synth_sparse_positive_rate: synth.sparse_positive_rate,
        }
    }
}

fn check(ok: bool, msg: &str) -> Result<(), PipelineError> {
    if ok {
        Ok(())
    } else {
        Err(PipelineError::Config(msg.to_owned()))
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            PipelineError::Config(m) => PipelineError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        check(self.n_windows >= 1, "n_windows must be at least 1")?;
        check(self.window_span > 0, "window_span must be positive")?;
        check(self.start_ts >= 0, "start_ts must be non-negative")?;
        check(
            (1..=1 << 24).contains(&self.feature_dim),
            "feature_dim must lie in [1, 2^24]",
        )?;
        check(!self.learner_kinds.is_empty(), "learner_kinds must not be empty")?;
        let mut kinds = self.learner_kinds.clone();
        kinds.sort();
        kinds.dedup();
        check(kinds.len() == self.learner_kinds.len(), "learner_kinds has duplicates")?;
        check(self.lr > 0.0 && self.update_lr > 0.0, "learning rates must be positive")?;
        check(self.l2 >= 0.0 && self.l2.is_finite(), "l2 must be non-negative")?;
        check(self.epochs >= 1, "epochs must be at least 1")?;
        check((0.0..1.0).contains(&self.holdout), "holdout must lie in [0, 1)")?;
        check(self.ensemble_size >= 1, "ensemble_size must be at least 1")?;
        if self.ensemble_scheme == Scheme::Expert {
            check(
                self.expert_weights.values().all(|w| *w >= 0.0 && w.is_finite())
                    && self.expert_weights.values().sum::<f64>() > 0.0,
                "expert_weights must be non-negative with a positive sum",
            )?;
            check(
                self.learner_kinds.iter().all(|k| self.expert_weights.contains_key(k)),
                "expert_weights must cover every learner kind",
            )?;
        }
        check(self.schedule_interval > 0, "schedule_interval must be positive")?;
        check(
            0 <= self.schedule_min_gap && self.schedule_min_gap <= self.schedule_max_gap,
            "schedule gaps must satisfy 0 <= min_gap <= max_gap",
        )?;
        check(self.detector_window >= 1, "detector_window must be at least 1")?;
        check(
            0.0 <= self.detector_low_conf_lo
                && self.detector_low_conf_lo < self.detector_low_conf_hi
                && self.detector_low_conf_hi <= 1.0,
            "detector confidence band must satisfy 0 <= lo < hi <= 1",
        )?;
        check(self.detector_margin_tau > 0.0, "detector_margin_tau must be positive")?;
        check(
            (0.0..1.0).contains(&self.detector_fraction),
            "detector_fraction must lie in [0, 1)",
        )?;
        check(self.label_max_dt >= 0, "label_max_dt must be non-negative")?;
        check(
            self.label_exclusion_window >= self.label_max_dt,
            "label_exclusion_window must be at least label_max_dt",
        )?;
        check(self.group_min_posts >= 1, "group_min_posts must be at least 1")?;
        check(self.group_span >= 0, "group_span must be non-negative")?;
        check(self.location_ttl >= 0, "location_ttl must be non-negative")?;
        self.synth()
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn hyper(&self) -> Hyper {
        Hyper {
            lr: self.lr,
            l2: self.l2,
            epochs: self.epochs,
            update_epochs: self.update_epochs,
            update_lr: self.update_lr,
            seed: self.seed,
        }
    }

    pub fn ensemble(&self) -> EnsembleConfig {
        EnsembleConfig {
            scheme: self.ensemble_scheme,
            retrieval: self.ensemble_retrieval,
            size: self.ensemble_size,
            query: self.ensemble_query,
            expert_weights: self.expert_weights.clone(),
        }
    }

    pub fn schedule(&self) -> Schedule {
        Schedule {
            kind: self.schedule_kind,
            interval: self.schedule_interval,
            min_gap: self.schedule_min_gap,
            max_gap: self.schedule_max_gap,
        }
    }

    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            mode: self.detector_mode,
            window: self.detector_window,
            low_conf_lo: self.detector_low_conf_lo,
            low_conf_hi: self.detector_low_conf_hi,
            margin_tau: self.detector_margin_tau,
            fraction: self.detector_fraction,
            persistence: self.detector_persistence,
        }
    }

    pub fn label_params(&self) -> LabelParams {
        LabelParams {
            max_dt: self.label_max_dt,
            radius: self.label_radius,
            exclusion: self.label_exclusion.then_some(self.label_exclusion_window),
            dim: self.feature_dim,
        }
    }

    pub fn grouping(&self) -> super::Grouping {
        super::Grouping {
            min_posts: self.group_min_posts,
            radius: self.group_radius,
            span: self.group_span,
        }
    }

    pub fn synth(&self) -> SynthConfig {
        SynthConfig {
            n_windows: self.n_windows,
            posts_per_window: self.synth_posts_per_window,
            positive_fraction: self.synth_positive_fraction,
            vocab_relevant: self.synth_vocab_relevant,
            vocab_irrelevant: self.synth_vocab_irrelevant,
            drift_windows: self.synth_drift_windows.clone(),
            swap_ratio: self.synth_swap_ratio,
            events_per_window: self.synth_events_per_window,
            cells_universe: self.synth_cells_universe,
            seed: self.seed,
            start_ts: self.start_ts,
            window_span: self.window_span,
            words_per_post: self.synth_words_per_post,
            keyword_rate: self.synth_keyword_rate,
            negative_location_rate: self.synth_negative_location_rate,
            sparse_positive_rate: self.synth_sparse_positive_rate,
        }
    }

    pub fn window_bounds(&self, w: u32) -> (i64, i64) {
        let start = self.start_ts + w as i64 * self.window_span;
        (start, start + self.window_span)
    }
}
