//! Automated training data: retroactive space-time matching of a closed
//! window's posts against ground-truth events.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{centroid, cosine_distance, vectorize, DEFAULT_DIM};
use crate::geotime::{spatiotemporal_match, GridCell, LocationMemory, DAY, DEFAULT_MATCH_WINDOW};
use crate::ingest::{GroundTruthEvent, SocialPost};
use crate::learners::LabeledSample;

pub const DEFAULT_BIN_SPAN: i64 = 6 * DAY;
pub const DEFAULT_EXCLUSION_WINDOW: i64 = 7 * DAY;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("window ends at {end} but the clock is at {now}; only closed windows can be labeled")]
    Unclosed { end: i64, now: i64 },
    #[error("invalid window bounds [{start}, {end})")]
    Bounds { start: i64, end: i64 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Parse { path: String, line: usize, reason: String },
}

/// The stream data between two updates.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub index: u32,
    pub start: i64,
    pub end: i64,
    pub posts: Vec<SocialPost>,
    pub events: Vec<GroundTruthEvent>,
}

impl Window {
    /// Slices a window out of full streams: posts in `[start, end)` and
    /// events in `[start - margin, end + margin]` so that posts near the
    /// edges can still match.
    pub fn slice(
        index: u32,
        start: i64,
        end: i64,
        posts: &[SocialPost],
        events: &[GroundTruthEvent],
        margin: i64,
    ) -> Result<Self, LabelError> {
        if start >= end {
            return Err(LabelError::Bounds { start, end });
        }
        Ok(Self {
            index,
            start,
            end,
            posts: posts
                .iter()
                .filter(|p| p.timestamp >= start && p.timestamp < end)
                .cloned()
                .collect(),
            events: events
                .iter()
                .filter(|e| e.timestamp >= start - margin && e.timestamp <= end + margin)
                .cloned()
                .collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelParams {
    pub max_dt: i64,
    pub radius: u32,
    /// Name-matched posts farther than `max_dt` but within this many
    /// seconds of the event are dropped as ambiguous. `None` disables it.
    pub exclusion: Option<i64>,
    pub dim: usize,
}

impl Default for LabelParams {
    fn default() -> Self {
        Self {
            max_dt: DEFAULT_MATCH_WINDOW,
            radius: 0,
            exclusion: Some(DEFAULT_EXCLUSION_WINDOW),
            dim: DEFAULT_DIM,
        }
    }
}

/// Labeling outcome for one post.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Positive { cell: GridCell, event_id: String },
    Negative,
    Excluded,
}

impl Decision {
    pub fn label(&self) -> Option<u8> {
        match self {
            Decision::Positive { .. } => Some(1),
            Decision::Negative => Some(0),
            Decision::Excluded => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelStats {
    pub total_posts: u64,
    pub labeled: u64,
    pub positives: u64,
    pub negatives: u64,
    pub excluded: u64,
}

/// One line of the label export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub post_id: String,
    pub label: u8,
    pub window: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<GridCell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched_event_id: Option<String>,
}

/// Labeled samples of one window in post time order, with the matching
/// export records.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub window: u32,
    pub samples: Vec<LabeledSample>,
    pub records: Vec<LabelRecord>,
    pub stats: LabelStats,
}

/// Splits a window's posts into half-open bins of `bin_span` seconds.
pub fn bin_posts(window: &Window, bin_span: i64) -> Vec<Vec<&SocialPost>> {
    assert!(bin_span > 0, "bin span must be positive");
    let n = ((window.end - window.start) + bin_span - 1) / bin_span;
    let mut bins: Vec<Vec<&SocialPost>> = vec![Vec::new(); n.max(0) as usize];
    for p in &window.posts {
        if p.timestamp < window.start || p.timestamp >= window.end {
            continue;
        }
        bins[((p.timestamp - window.start) / bin_span) as usize].push(p);
    }
    bins
}

/// Decides every post of the window, in window order.
pub fn label_posts(window: &Window, params: &LabelParams) -> Vec<Decision> {
    // Retroactive memory: every event name is known for the whole window.
    let mut memory = LocationMemory::default();
    let mut owners: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let cells: Vec<Option<GridCell>> = window.events.iter().map(|e| e.cell().ok()).collect();
    for (i, e) in window.events.iter().enumerate() {
        for name in &e.location_names {
            memory.pin(name);
            let owned = owners.entry(name.trim().to_lowercase()).or_default();
            if owned.last() != Some(&i) {
                owned.push(i);
            }
        }
    }

    window
        .posts
        .iter()
        .map(|post| {
            let mut names: BTreeSet<String> = memory.match_locations(&post.text, post.timestamp).into_iter().collect();
            names.extend(post.locations.iter().map(|n| n.trim().to_lowercase()));

            let mut matched: BTreeSet<usize> = BTreeSet::new();
            for n in &names {
                if let Some(ids) = owners.get(n) {
                    matched.extend(ids);
                }
            }
            let post_cells: BTreeSet<GridCell> = matched.iter().filter_map(|&i| cells[i]).collect();

            for e in &window.events {
                if let Some(&cell) = post_cells
                    .iter()
                    .find(|&&c| spatiotemporal_match(c, post.timestamp, e, params.max_dt, params.radius))
                {
                    return Decision::Positive {
                        cell,
                        event_id: e.id.clone(),
                    };
                }
            }
            if let Some(band) = params.exclusion {
                let ambiguous = matched.iter().any(|&i| {
                    let dt = (post.timestamp - window.events[i].timestamp).abs();
                    dt > params.max_dt && dt <= band
                });
                if ambiguous {
                    return Decision::Excluded;
                }
            }
            Decision::Negative
        })
        .collect()
}

/// Labels a closed window and vectorizes its labeled posts.
pub fn generate_training_data(window: &Window, params: &LabelParams, now: i64) -> Result<LabeledSet, LabelError> {
    if window.end > now {
        return Err(LabelError::Unclosed { end: window.end, now });
    }
    let decisions = label_posts(window, params);
    let mut stats = LabelStats {
        total_posts: window.posts.len() as u64,
        ..LabelStats::default()
    };
    let mut rows: Vec<(&SocialPost, Decision)> = window.posts.iter().zip(decisions).collect();
    rows.sort_by(|a, b| (a.0.timestamp, &a.0.id).cmp(&(b.0.timestamp, &b.0.id)));

    let mut samples = Vec::new();
    let mut records = Vec::new();
    for (post, decision) in rows {
        let Some(label) = decision.label() else {
            stats.excluded += 1;
            continue;
        };
        if label == 1 {
            stats.positives += 1;
        } else {
            stats.negatives += 1;
        }
        let (cell, matched_event_id) = match decision {
            Decision::Positive { cell, event_id } => (Some(cell), Some(event_id)),
            _ => (None, None),
        };
        samples.push(LabeledSample {
            features: vectorize(&post.text, params.dim),
            label,
            timestamp: post.timestamp,
            post_id: post.id.clone(),
        });
        records.push(LabelRecord {
            post_id: post.id.clone(),
            label,
            window: window.index,
            cell,
            matched_event_id,
        });
    }
    stats.labeled = stats.positives + stats.negatives;
    Ok(LabeledSet {
        window: window.index,
        samples,
        records,
        stats,
    })
}

/// Cosine distance between the positive-class centroids of consecutive
/// sets; `None` for the first set or when either side has no positives.
pub fn centroid_shift_report(sets: &[LabeledSet]) -> Vec<Option<f64>> {
    let centroids: Vec<_> = sets
        .iter()
        .map(|s| centroid(s.samples.iter().filter(|x| x.label == 1).map(|x| &x.features)).ok())
        .collect();
    (0..sets.len())
        .map(|i| {
            if i == 0 {
                return None;
            }
            match (&centroids[i - 1], &centroids[i]) {
                (Some(a), Some(b)) => Some(cosine_distance(a.as_sparse(), b.as_sparse())),
                _ => None,
            }
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct StatsLine {
    stats: LabelStats,
}

/// JSONL export: one record per labeled post, then a `{"stats": ...}` line.
pub fn labels_to_jsonl(set: &LabeledSet) -> String {
    let mut out = String::new();
    for r in &set.records {
        out.push_str(&serde_json::to_string(r).expect("label record serializes"));
        out.push('\n');
    }
    out.push_str(&serde_json::to_string(&StatsLine { stats: set.stats }).expect("stats serialize"));
    out.push('\n');
    out
}

/// Reads an export written by [`labels_to_jsonl`].
pub fn read_labels(path: impl AsRef<Path>) -> Result<(Vec<LabelRecord>, Option<LabelStats>), LabelError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| LabelError::Io {
        path: shown.clone(),
        source,
    })?;
    let mut records = Vec::new();
    let mut stats = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| LabelError::Io {
            path: shown.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        if let Ok(s) = serde_json::from_str::<StatsLine>(&line) {
            stats = Some(s.stats);
            continue;
        }
        let rec: LabelRecord = serde_json::from_str(&line).map_err(|e| LabelError::Parse {
            path: shown.clone(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        if rec.label > 1 {
            return Err(LabelError::Parse {
                path: shown.clone(),
                line: i + 1,
                reason: format!("label {} is not 0 or 1", rec.label),
            });
        }
        records.push(rec);
    }
    Ok((records, stats))
}
