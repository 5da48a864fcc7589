//! Drift signals from the prediction stream and the update scheduler.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geotime::DAY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorMode {
    /// Fraction of scores inside the low-confidence band.
    Confidence,
    /// Fraction of margins closer than `margin_tau` to the hyperplane.
    Margin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub mode: DetectorMode,
    pub window: usize,
    pub low_conf_lo: f64,
    pub low_conf_hi: f64,
    pub margin_tau: f64,
    pub fraction: f64,
    pub persistence: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            mode: DetectorMode::Confidence,
            window: 500,
            low_conf_lo: 0.25,
            low_conf_hi: 0.75,
            margin_tau: 0.5,
            fraction: 0.3,
            persistence: 200,
        }
    }
}

/// Ring-buffer detector: once the buffer is full, every observation whose
/// windowed flagged fraction exceeds the threshold extends the drift run;
/// any other observation resets it. The detector fires when the run
/// reaches `persistence`.
#[derive(Debug, Clone)]
pub struct DriftDetector {
    cfg: DetectorConfig,
    buffer: VecDeque<bool>,
    flagged: usize,
    seen: u64,
    run_length: u64,
    fired_at: Option<u64>,
}

impl DriftDetector {
    pub fn new(cfg: DetectorConfig) -> Self {
        assert!(cfg.window > 0, "detector window must be positive");
        Self {
            cfg,
            buffer: VecDeque::with_capacity(cfg.window),
            flagged: 0,
            seen: 0,
            run_length: 0,
            fired_at: None,
        }
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    fn flags(&self, score: f64, margin: f64) -> bool {
        match self.cfg.mode {
            DetectorMode::Confidence => score > self.cfg.low_conf_lo && score < self.cfg.low_conf_hi,
            DetectorMode::Margin => margin.abs() < self.cfg.margin_tau,
        }
    }

    /// Feeds one prediction. Returns `true` on the observation that fires.
    pub fn observe(&mut self, score: f64, margin: f64) -> bool {
        let warmed_up = self.buffer.len() == self.cfg.window;
        let flag = self.flags(score, margin);
        if warmed_up && self.buffer.pop_front() == Some(true) {
            self.flagged -= 1;
        }
        self.buffer.push_back(flag);
        self.flagged += usize::from(flag);
        self.seen += 1;

        if warmed_up {
            if self.windowed_fraction() > self.cfg.fraction {
                self.run_length += 1;
            } else {
                self.run_length = 0;
            }
        }
        if self.fired_at.is_none() && self.run_length >= self.cfg.persistence {
            self.fired_at = Some(self.seen);
            return true;
        }
        false
    }

    pub fn windowed_fraction(&self) -> f64 {
        if self.buffer.is_empty() {
            0.0
        } else {
            self.flagged as f64 / self.buffer.len() as f64
        }
    }

    pub fn fired(&self) -> bool {
        self.fired_at.is_some()
    }

    /// Observation count (1-based) at which the detector fired.
    pub fn fired_at(&self) -> Option<u64> {
        self.fired_at
    }

    pub fn run_length(&self) -> u64 {
        self.run_length
    }

    pub fn observations(&self) -> u64 {
        self.seen
    }

    /// Clears all state after a classifier update.
    pub fn reset(&mut self) {
        *self = Self::new(self.cfg);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    User,
    Detector,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub interval: i64,
    pub min_gap: i64,
    pub max_gap: i64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            kind: ScheduleKind::User,
            interval: 30 * DAY,
            min_gap: 7 * DAY,
            max_gap: 60 * DAY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    None,
    UpdateNow,
}

pub fn next_action(schedule: &Schedule, now: i64, last_update: i64, detector_fired: bool) -> Action {
    let elapsed = now - last_update;
    let update = match schedule.kind {
        ScheduleKind::User => elapsed >= schedule.interval,
        ScheduleKind::Detector => detector_fired,
        ScheduleKind::Hybrid => (detector_fired && elapsed >= schedule.min_gap) || elapsed >= schedule.max_gap,
    };
    if update {
        Action::UpdateNow
    } else {
        Action::None
    }
}
