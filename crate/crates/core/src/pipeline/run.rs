use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::config::PipelineConfig;
use super::events::{compare_events, detect_events, DetectedEvent, EventComparison, LocatedPost};
use super::PipelineError;
use crate::drift::{next_action, Action, DriftDetector};
use crate::ensemble::{ensemble_predict, EnsembleConfig, RelevancyQuery, Retrieval};
use crate::features::{centroid, vectorize, Centroid, FeatureVector, SparseVector};
use crate::geotime::{GridCell, LocationMemory};
use crate::ingest::{
    generate_stream, posts_to_jsonl, read_events, read_gazetteer, read_posts, GroundTruthEvent, SocialPost,
};
use crate::labeler::{centroid_shift_report, generate_training_data, LabelStats, LabeledSet, Window};
use crate::learners::{evaluate, holdout_split, train, update, LabeledSample, LinearModel, Metrics};
use crate::registry::{sha256_hex, ClassifierRecord, Registry};

/// Input streams for a run. `truth` is present for synthetic data.
#[derive(Debug, Clone, Default)]
pub struct StreamData {
    pub posts: Vec<SocialPost>,
    pub events: Vec<GroundTruthEvent>,
    pub truth: Option<BTreeMap<String, u8>>,
    /// Location names that never expire from the live memory.
    pub gazetteer: Vec<String>,
}

impl StreamData {
    pub fn synthetic(cfg: &PipelineConfig) -> Result<Self, PipelineError> {
        let s = generate_stream(&cfg.synth())?;
        Ok(Self {
            posts: s.posts,
            events: s.events,
            truth: Some(s.truth),
            gazetteer: Vec::new(),
        })
    }

    /// Reads the configured post and event files, or generates the
    /// synthetic stream when neither path is set.
    pub fn load(cfg: &PipelineConfig) -> Result<Self, PipelineError> {
        let mut data = match (&cfg.posts_path, &cfg.events_path) {
            (None, None) => Self::synthetic(cfg)?,
            (Some(posts), Some(events)) => Self {
                posts: read_posts(posts)?.items,
                events: read_events(events)?.items,
                truth: None,
                gazetteer: Vec::new(),
            },
            _ => {
                return Err(PipelineError::Config(
                    "posts_path and events_path must be set together".into(),
                ))
            }
        };
        if let Some(path) = &cfg.gazetteer {
            data.gazetteer = read_gazetteer(path)?;
        }
        Ok(data)
    }

    /// SHA-256 of the posts as JSONL, identifying the stream an arm consumed.
    pub fn checksum(&self) -> String {
        sha256_hex(posts_to_jsonl(&self.posts).as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    /// Trains on window 0 only and never updates.
    Static,
    /// Follows the configured update schedule.
    Adaptive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowReport {
    pub window: u32,
    pub start: i64,
    pub end: i64,
    pub predictions: usize,
    pub predicted_relevant: usize,
    /// Against generator truth (synthetic streams only).
    pub metrics_truth: Option<Metrics>,
    /// Against the labeler's output for the same window.
    pub metrics_labels: Option<Metrics>,
    pub events: Vec<DetectedEvent>,
    pub label_stats: LabelStats,
    /// Timestamp of the post on which the detector fired, if it did.
    pub detector_fired_at: Option<i64>,
    pub updated: bool,
    /// Registry size after this window's update phase.
    pub registry_size: usize,
    /// Ids of every record that voted in this window.
    pub members: BTreeSet<u64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub arm: Arm,
    pub windows: Vec<WindowReport>,
    pub registry: Registry,
    pub centroid_shift: Vec<Option<f64>>,
    pub stream_sha256: String,
}

/// Predictions for one window's posts, made against a frozen registry.
#[derive(Debug, Clone)]
pub struct WindowPredictions {
    pub labels: Vec<u8>,
    pub scores: Vec<f64>,
    pub members: BTreeSet<u64>,
}

fn retrieve<'a>(
    registry: &'a Registry,
    cfg: &EnsembleConfig,
    query: &SparseVector,
    cached: &Option<Vec<&'a ClassifierRecord>>,
) -> Vec<&'a ClassifierRecord> {
    match cached {
        Some(members) => members.clone(),
        None => registry.relevant(query, cfg.size),
    }
}

/// Classifies `features` with an ensemble drawn from `registry`, feeding
/// each prediction to `observe` in order.
pub fn classify_window(
    registry: &Registry,
    cfg: &EnsembleConfig,
    features: &[FeatureVector],
    mut observe: impl FnMut(usize, f64, f64),
) -> Result<WindowPredictions, PipelineError> {
    if registry.is_empty() {
        return Err(PipelineError::Bootstrap(
            "the classifier store is empty; label and train an initial window before classifying".into(),
        ));
    }
    let cached: Option<Vec<&ClassifierRecord>> = match (cfg.retrieval, cfg.query) {
        (Retrieval::Recency, _) => Some(registry.recent(cfg.size)),
        (Retrieval::Relevancy, RelevancyQuery::Batch) => {
            let members = match centroid(features) {
                Ok(c) => registry.relevant(c.as_sparse(), cfg.size),
                Err(_) => registry.recent(cfg.size),
            };
            Some(members)
        }
        (Retrieval::Relevancy, RelevancyQuery::Post) => None,
    };
    let mut out = WindowPredictions {
        labels: Vec::with_capacity(features.len()),
        scores: Vec::with_capacity(features.len()),
        members: BTreeSet::new(),
    };
    for (i, x) in features.iter().enumerate() {
        let members = retrieve(registry, cfg, x.as_sparse(), &cached);
        out.members.extend(members.iter().map(|r| r.id));
        let p = ensemble_predict(x, &members, cfg)?;
        observe(i, p.mean_member_score(), p.mean_member_margin());
        out.labels.push(p.label);
        out.scores.push(p.score);
    }
    Ok(out)
}

/// Forward-only location resolution for live classification: event names
/// become known at the event's timestamp and expire after the memory TTL.
struct LiveLocator<'a> {
    memory: LocationMemory,
    cells: BTreeMap<String, GridCell>,
    events: Vec<&'a GroundTruthEvent>,
    next: usize,
}

impl<'a> LiveLocator<'a> {
    fn new(events: &'a [GroundTruthEvent], ttl: i64, gazetteer: &[String]) -> Self {
        let mut sorted: Vec<&GroundTruthEvent> = events.iter().collect();
        sorted.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
        let mut memory = LocationMemory::new(ttl);
        for name in gazetteer {
            memory.pin(name);
        }
        Self {
            memory,
            cells: BTreeMap::new(),
            events: sorted,
            next: 0,
        }
    }

    fn advance(&mut self, now: i64) {
        while let Some(e) = self.events.get(self.next) {
            if e.timestamp > now {
                break;
            }
            if let Ok(cell) = e.cell() {
                for name in &e.location_names {
                    if self.memory.remember(name, e.timestamp) {
                        self.cells.insert(name.trim().to_lowercase(), cell);
                    }
                }
            }
            self.next += 1;
        }
    }

    /// The cell of the lexicographically first known name in the post.
    fn locate(&mut self, post: &SocialPost) -> Option<GridCell> {
        self.advance(post.timestamp);
        let mut names: BTreeSet<String> = self
            .memory
            .match_locations(&post.text, post.timestamp)
            .into_iter()
            .collect();
        names.extend(
            post.locations
                .iter()
                .filter(|n| self.memory.contains(n.trim(), post.timestamp))
                .map(|n| n.trim().to_lowercase()),
        );
        names.iter().find_map(|n| self.cells.get(n).copied())
    }
}

fn validation_f1(model: &LinearModel, train_part: &[LabeledSample], val_part: &[LabeledSample]) -> f64 {
    let held = if val_part.is_empty() { train_part } else { val_part };
    evaluate(model, held).f1
}

fn training_key(samples: &[LabeledSample]) -> Result<Centroid, PipelineError> {
    Ok(centroid(samples.iter().map(|s| &s.features))?)
}

/// Generation + copy-update: one fresh model per configured kind, and an
/// updated copy of every stored model. Copies are stored first so the
/// fresh models are the newest records.
///
/// The last `holdout` fraction of `pending` is kept out of training and
/// scores every new model.
pub fn update_store(
    registry: &mut Registry,
    cfg: &PipelineConfig,
    pending: &[LabeledSample],
    window: u32,
    now: i64,
) -> Result<(), PipelineError> {
    let (train_part, val_part) = holdout_split(pending, cfg.holdout);
    let key = training_key(train_part)?;
    let hyper = cfg.hyper();

    let mut fresh = Vec::with_capacity(cfg.learner_kinds.len());
    for &kind in &cfg.learner_kinds {
        let mut model = train(train_part, kind, &hyper, window)?;
        let f1 = validation_f1(&model, train_part, val_part);
        model.record_validation(window, f1);
        fresh.push(model);
    }
    let mut copies = Vec::with_capacity(registry.len());
    for r in registry.records() {
        let mut model = update(&r.model, train_part, window)?;
        let f1 = validation_f1(&model, train_part, val_part);
        model.record_validation(window, f1);
        // The copy has seen both training sets: key it by their midpoint.
        copies.push((model, midpoint(r.key.as_sparse(), key.as_sparse())));
    }
    for (model, k) in copies {
        registry.put(model, k, window, now);
    }
    for model in fresh {
        registry.put(model, key.clone(), window, now);
    }
    Ok(())
}

fn midpoint(a: &SparseVector, b: &SparseVector) -> Centroid {
    let mut pairs: Vec<(u32, f64)> = a.entries().iter().map(|&(i, v)| (i, 0.5 * v)).collect();
    pairs.extend(b.entries().iter().map(|&(i, v)| (i, 0.5 * v)));
    Centroid::from_sparse(SparseVector::from_pairs(a.dim(), pairs))
}

/// Runs the windowed classify → label → update loop over `data`.
///
/// Window 0 only bootstraps the store. Every later window is classified
/// against the store as it stood when the window opened; labeling, training
/// and storing happen after the window's last prediction.
pub fn run_windowed(cfg: &PipelineConfig, data: &StreamData, arm: Arm) -> Result<RunOutcome, PipelineError> {
    cfg.validate()?;
    let mut posts: Vec<&SocialPost> = data.posts.iter().collect();
    posts.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
    let posts: Vec<SocialPost> = posts.into_iter().cloned().collect();

    let ens = cfg.ensemble();
    let schedule = cfg.schedule();
    let params = cfg.label_params();
    let grouping = cfg.grouping();
    let mut detector = DriftDetector::new(cfg.detector());
    let mut locator = LiveLocator::new(&data.events, cfg.location_ttl, &data.gazetteer);
    let mut registry = Registry::new();
    let mut pending: Vec<LabeledSample> = Vec::new();
    let mut last_update = 0i64;
    let mut reports = Vec::with_capacity(cfg.n_windows as usize);
    let mut sets: Vec<LabeledSet> = Vec::with_capacity(cfg.n_windows as usize);

    for w in 0..cfg.n_windows {
        let (start, end) = cfg.window_bounds(w);
        let window = Window::slice(w, start, end, &posts, &data.events, cfg.label_max_dt)?;
        let mut report = WindowReport {
            window: w,
            start,
            end,
            predictions: 0,
            predicted_relevant: 0,
            metrics_truth: None,
            metrics_labels: None,
            events: Vec::new(),
            label_stats: LabelStats::default(),
            detector_fired_at: None,
            updated: false,
            registry_size: 0,
            members: BTreeSet::new(),
        };

        // Classification phase: the registry is only read here.
        let mut predicted: BTreeMap<&str, u8> = BTreeMap::new();
        if w > 0 {
            let features: Vec<FeatureVector> = window
                .posts
                .iter()
                .map(|p| vectorize(&p.text, cfg.feature_dim))
                .collect();
            let mut fired_at = None;
            let preds = classify_window(&registry, &ens, &features, |i, score, margin| {
                if detector.observe(score, margin) {
                    fired_at = Some(window.posts[i].timestamp);
                }
            })?;
            report.detector_fired_at = fired_at;
            report.members = preds.members;
            report.predictions = preds.labels.len();
            report.predicted_relevant = preds.labels.iter().filter(|&&l| l == 1).count();

            let mut located = Vec::new();
            for (post, &label) in window.posts.iter().zip(&preds.labels) {
                predicted.insert(&post.id, label);
                let cell = locator.locate(post);
                if label == 1 {
                    if let Some(cell) = cell {
                        located.push(LocatedPost {
                            timestamp: post.timestamp,
                            post_id: post.id.clone(),
                            cell,
                        });
                    }
                }
            }
            report.events = detect_events(&located, &grouping);
            if let Some(truth) = &data.truth {
                report.metrics_truth =
                    Some(Metrics::from_pairs(window.posts.iter().filter_map(|p| {
                        truth.get(&p.id).map(|&t| (predicted[p.id.as_str()], t))
                    })));
            }
        }

        // Window close: label, then consult the schedule.
        let set = generate_training_data(&window, &params, end)?;
        report.label_stats = set.stats;
        if w > 0 {
            report.metrics_labels = Some(Metrics::from_pairs(
                set.records.iter().map(|r| (predicted[r.post_id.as_str()], r.label)),
            ));
        }
        pending.extend(set.samples.iter().cloned());
        sets.push(set);

        let do_update = if w == 0 {
            true
        } else {
            arm == Arm::Adaptive && next_action(&schedule, end, last_update, detector.fired()) == Action::UpdateNow
        };
        if do_update {
            match update_store(&mut registry, cfg, &pending, w, end) {
                Ok(()) => {
                    pending.clear();
                    detector.reset();
                    last_update = end;
                    report.updated = true;
                }
                Err(e) if w == 0 => {
                    return Err(PipelineError::Bootstrap(format!(
                        "window 0 must yield trainable labeled data: {e}"
                    )))
                }
                // Not enough labeled data yet: keep accumulating.
                Err(PipelineError::Learn(_)) | Err(PipelineError::Feature(_)) => {}
                Err(e) => return Err(e),
            }
        }
        report.registry_size = registry.len();
        reports.push(report);
    }

    Ok(RunOutcome {
        arm,
        windows: reports,
        registry,
        centroid_shift: centroid_shift_report(&sets),
        stream_sha256: data.checksum(),
    })
}

/// Per-window comparison of the static and adaptive arms.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub window: u32,
    pub static_metrics: Option<Metrics>,
    pub adaptive_metrics: Option<Metrics>,
    pub events: EventComparison,
    pub centroid_shift: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub stream_sha256: String,
    pub static_run: RunOutcome,
    pub adaptive_run: RunOutcome,
}

impl BenchReport {
    pub fn totals(&self) -> EventComparison {
        self.rows
            .iter()
            .fold(EventComparison::default(), |acc, r| EventComparison {
                events_static: acc.events_static + r.events.events_static,
                events_adaptive: acc.events_adaptive + r.events.events_adaptive,
                both: acc.both + r.events.both,
                static_only: acc.static_only + r.events.static_only,
                adaptive_only: acc.adaptive_only + r.events.adaptive_only,
            })
    }
}

fn metrics_of(report: &WindowReport) -> Option<Metrics> {
    report.metrics_truth.or(report.metrics_labels)
}

/// Runs both arms on the same stream and lines their windows up.
pub fn bench_on(cfg: &PipelineConfig, data: &StreamData) -> Result<BenchReport, PipelineError> {
    let static_run = run_windowed(cfg, data, Arm::Static)?;
    let adaptive_run = run_windowed(cfg, data, Arm::Adaptive)?;
    if static_run.stream_sha256 != adaptive_run.stream_sha256 {
        return Err(PipelineError::StreamMismatch);
    }
    let grouping = cfg.grouping();
    let rows = static_run
        .windows
        .iter()
        .zip(&adaptive_run.windows)
        .map(|(s, a)| BenchRow {
            window: s.window,
            static_metrics: metrics_of(s),
            adaptive_metrics: metrics_of(a),
            events: compare_events(&s.events, &a.events, &grouping),
            centroid_shift: adaptive_run.centroid_shift[s.window as usize],
        })
        .collect();
    Ok(BenchReport {
        rows,
        stream_sha256: static_run.stream_sha256.clone(),
        static_run,
        adaptive_run,
    })
}

/// Generates the configured synthetic stream and benchmarks it.
pub fn bench(cfg: &PipelineConfig) -> Result<BenchReport, PipelineError> {
    cfg.validate()?;
    bench_on(cfg, &StreamData::synthetic(cfg)?)
}
