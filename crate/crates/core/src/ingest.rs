//! Post and ground-truth event records, their newline-delimited JSON files,
//! and a seeded synthetic stream generator with injected vocabulary drift.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geotime::{self, cell_center, cell_of, GeoError, GridCell, DAY};
use crate::rng::StreamRng;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("invalid synthetic stream config: {0}")]
    Config(String),
}

/// One social-sensor message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SocialPost {
    pub id: String,
    pub text: String,
    pub locations: Vec<String>,
    pub timestamp: i64,
    pub links: Vec<String>,
    pub author: String,
}

impl SocialPost {
    pub fn is_valid(&self) -> bool {
        !self.id.is_empty() && self.timestamp >= 0 && !self.text.trim().is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventSource {
    PhysicalSensor,
    News,
    Report,
    Synthetic,
}

/// A confirmed event from a trusted source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthEvent {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    pub timestamp: i64,
    pub location_names: Vec<String>,
    pub source: EventSource,
}

impl GroundTruthEvent {
    pub fn cell(&self) -> Result<GridCell, GeoError> {
        cell_of(self.lat, self.lon)
    }

    pub fn is_valid(&self) -> bool {
        !self.id.is_empty()
            && self.cell().is_ok()
            && !self.location_names.is_empty()
            && self.location_names.iter().all(|n| !n.trim().is_empty())
    }
}

/// Records read from a newline-delimited file plus the number of
/// malformed lines that were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadOutcome<T> {
    pub items: Vec<T>,
    pub skipped: usize,
}

fn read_jsonl<T, F>(path: &Path, valid: F) -> Result<ReadOutcome<T>, IngestError>
where
    T: for<'de> Deserialize<'de>,
    F: Fn(&T) -> bool,
{
    let file = File::open(path).map_err(|source| IngestError::Read {
        path: path.to_owned(),
        source,
    })?;
    let mut items = Vec::new();
    let mut skipped = 0;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|source| IngestError::Read {
            path: path.to_owned(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<T>(&line) {
            Ok(item) if valid(&item) => items.push(item),
            _ => skipped += 1,
        }
    }
    Ok(ReadOutcome { items, skipped })
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), IngestError> {
    let err = |source| IngestError::Write {
        path: path.to_owned(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(err)?);
    for item in items {
        let line = serde_json::to_string(item).expect("records serialize");
        writeln!(out, "{line}").map_err(err)?;
    }
    out.flush().map_err(err)
}

pub fn read_posts(path: impl AsRef<Path>) -> Result<ReadOutcome<SocialPost>, IngestError> {
    read_jsonl(path.as_ref(), SocialPost::is_valid)
}

pub fn read_events(path: impl AsRef<Path>) -> Result<ReadOutcome<GroundTruthEvent>, IngestError> {
    read_jsonl(path.as_ref(), GroundTruthEvent::is_valid)
}

pub fn write_posts(path: impl AsRef<Path>, posts: &[SocialPost]) -> Result<(), IngestError> {
    write_jsonl(path.as_ref(), posts)
}

pub fn write_events(path: impl AsRef<Path>, events: &[GroundTruthEvent]) -> Result<(), IngestError> {
    write_jsonl(path.as_ref(), events)
}

/// Serializes posts exactly as `write_posts` would, for checksumming.
pub fn posts_to_jsonl(posts: &[SocialPost]) -> String {
    let mut s = String::new();
    for p in posts {
        s.push_str(&serde_json::to_string(p).expect("posts serialize"));
        s.push('\n');
    }
    s
}

/// Optional gazetteer seed file: one location name per line.
pub fn read_gazetteer(path: impl AsRef<Path>) -> Result<Vec<String>, IngestError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Read {
        path: path.to_owned(),
        source,
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

/// Parameters of the synthetic drift stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_windows: u32,
    pub posts_per_window: u32,
    pub positive_fraction: f64,
    pub vocab_relevant: u32,
    pub vocab_irrelevant: u32,
    pub drift_windows: Vec<u32>,
    pub swap_ratio: f64,
    pub events_per_window: u32,
    pub cells_universe: u32,
    pub seed: u64,
    pub start_ts: i64,
    pub window_span: i64,
    /// Topic words drawn per post from the class vocabulary.
    pub words_per_post: u32,
    /// Probability that a post of either class carries the event keyword.
    pub keyword_rate: f64,
    /// Probability that a negative post names some far-away cell.
    pub negative_location_rate: f64,
    /// Probability that a positive post is short, carrying only half the
    /// usual number of topic words.
    pub sparse_positive_rate: f64,
}

/// 2014-01-01T00:00:00Z
pub const DEFAULT_START_TS: i64 = 1_388_534_400;
pub const DEFAULT_WINDOW_SPAN: i64 = 30 * DAY;

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_windows: 8,
            posts_per_window: 2000,
            positive_fraction: 0.3,
            vocab_relevant: 20,
            vocab_irrelevant: 200,
            drift_windows: vec![3, 6],
            swap_ratio: 0.5,
            events_per_window: 5,
            cells_universe: 200,
            seed: 1,
            start_ts: DEFAULT_START_TS,
            window_span: DEFAULT_WINDOW_SPAN,
            words_per_post: 12,
            keyword_rate: 0.8,
            negative_location_rate: 0.45,
            sparse_positive_rate: 0.1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: &str| Err(IngestError::Config(m.to_owned()));
        if self.n_windows == 0 || self.posts_per_window == 0 {
            return bad("n_windows and posts_per_window must be positive");
        }
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0) {
            return bad("positive_fraction must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.swap_ratio) {
            return bad("swap_ratio must lie in [0, 1]");
        }
        if let Some(w) = self.drift_windows.iter().find(|&&w| w >= self.n_windows) {
            return Err(IngestError::Config(format!(
                "drift window {w} outside [0, {})",
                self.n_windows
            )));
        }
        if self.vocab_relevant == 0 || self.vocab_irrelevant == 0 || self.words_per_post == 0 {
            return bad("vocabularies and words_per_post must be positive");
        }
        if self.events_per_window == 0 {
            return bad("events_per_window must be positive");
        }
        if self.cells_universe == 0 || self.cells_universe > 100_000 {
            return bad("cells_universe must lie in [1, 100000]");
        }
        if self.window_span <= 0 || self.start_ts < 0 {
            return bad("window_span must be positive and start_ts non-negative");
        }
        for p in [
            self.keyword_rate,
            self.negative_location_rate,
            self.sparse_positive_rate,
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad("rates must lie in [0, 1]");
            }
        }
        Ok(())
    }

    pub fn window_bounds(&self, w: u32) -> (i64, i64) {
        let start = self.start_ts + w as i64 * self.window_span;
        (start, start + self.window_span)
    }
}

/// Output of [`generate_stream`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthStream {
    pub posts: Vec<SocialPost>,
    pub events: Vec<GroundTruthEvent>,
    /// Generating class of every post (1 relevant, 0 irrelevant).
    pub truth: BTreeMap<String, u8>,
    /// Relevant vocabulary in force during each window.
    pub relevant_vocab: Vec<Vec<String>>,
}

const KEYWORDS: [&str; 3] = ["landslide", "mudslide", "rockslide"];
const FILLERS: [&str; 24] = [
    "today", "just", "news", "after", "near", "road", "people", "big", "again", "still", "this", "morning", "night",
    "heavy", "report", "week", "town", "area", "update", "live", "now", "here", "photos", "video",
];
const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
/// Minimum gap between a negative post naming a cell and any event there.
const NEGATIVE_LOCATION_GAP: i64 = 7 * DAY;
const NEGATIVE_LOCATION_TRIES: usize = 8;

/// Deterministic pseudo-word for a vocabulary id (three CV syllables).
fn pseudo_word(id: u32) -> String {
    let base = (CONSONANTS.len() * VOWELS.len()) as u32;
    let mut n = id;
    let mut w = String::with_capacity(6);
    for _ in 0..3 {
        let s = (n % base) as usize;
        n /= base;
        w.push(CONSONANTS[s / VOWELS.len()] as char);
        w.push(VOWELS[s % VOWELS.len()] as char);
    }
    if n > 0 {
        w.push_str(&n.to_string());
    }
    w
}

struct Vocab {
    next_id: u32,
    relevant: Vec<String>,
    irrelevant: Vec<String>,
}

impl Vocab {
    fn fresh(&mut self) -> String {
        let w = pseudo_word(self.next_id);
        self.next_id += 1;
        w
    }

    fn drift(&mut self, ratio: f64, rng: &mut StreamRng) {
        let k = (ratio * self.relevant.len() as f64).round() as usize;
        let mut idx: Vec<usize> = (0..self.relevant.len()).collect();
        rng.shuffle(&mut idx);
        let mut retire: Vec<usize> = idx.into_iter().take(k).collect();
        retire.sort_unstable();
        for i in retire {
            let fresh = self.fresh();
            let old = std::mem::replace(&mut self.relevant[i], fresh);
            self.irrelevant.push(old);
        }
    }
}

/// Generates posts, ground-truth events and the truth map for `cfg`.
///
/// Positives name the cell of an event from their own window and fall
/// within three days of it; negatives only name cells at least seven days
/// away from every event there. The output is a pure function of `cfg`.
pub fn generate_stream(cfg: &SynthConfig) -> Result<SynthStream, IngestError> {
    cfg.validate()?;
    let seed = cfg.seed;

    let mut cell_rng = StreamRng::derived(seed, 1);
    let mut universe: Vec<GridCell> = Vec::with_capacity(cfg.cells_universe as usize);
    let mut seen = BTreeSet::new();
    while universe.len() < cfg.cells_universe as usize {
        let cell = GridCell {
            row: cell_rng.below(geotime::GRID_ROWS as u64) as u32,
            col: cell_rng.below(geotime::GRID_COLS as u64) as u32,
        };
        if seen.insert(cell) {
            universe.push(cell);
        }
    }

    let mut event_rng = StreamRng::derived(seed, 2);
    let mut raw_events: Vec<(i64, GridCell, u32)> = Vec::new();
    for w in 0..cfg.n_windows {
        let (start, end) = cfg.window_bounds(w);
        for _ in 0..cfg.events_per_window {
            let cell = *event_rng.choose(&universe).expect("non-empty universe");
            raw_events.push((event_rng.between(start, end - 1), cell, w));
        }
    }
    raw_events.sort_by_key(|&(ts, cell, _)| (ts, cell));
    let events: Vec<GroundTruthEvent> = raw_events
        .iter()
        .enumerate()
        .map(|(i, &(ts, cell, _))| {
            let (lat, lon) = cell_center(cell);
            GroundTruthEvent {
                id: format!("e{i:05}"),
                lat,
                lon,
                timestamp: ts,
                location_names: vec![cell.synthetic_name()],
                source: EventSource::Synthetic,
            }
        })
        .collect();
    let mut events_by_cell: HashMap<GridCell, Vec<i64>> = HashMap::new();
    for &(ts, cell, _) in &raw_events {
        events_by_cell.entry(cell).or_default().push(ts);
    }

    let mut vocab = Vocab {
        next_id: 0,
        relevant: Vec::new(),
        irrelevant: Vec::new(),
    };
    for _ in 0..cfg.vocab_relevant {
        let w = vocab.fresh();
        vocab.relevant.push(w);
    }
    for _ in 0..cfg.vocab_irrelevant {
        let w = vocab.fresh();
        vocab.irrelevant.push(w);
    }

    let mut drift_rng = StreamRng::derived(seed, 3);
    let mut post_rng = StreamRng::derived(seed, 4);
    let mut relevant_vocab = Vec::with_capacity(cfg.n_windows as usize);
    let mut drafts: Vec<(i64, String, u8, String, Vec<String>)> = Vec::new();

    for w in 0..cfg.n_windows {
        if cfg.drift_windows.contains(&w) {
            vocab.drift(cfg.swap_ratio, &mut drift_rng);
        }
        relevant_vocab.push(vocab.relevant.clone());
        let (start, end) = cfg.window_bounds(w);
        let window_events: Vec<&(i64, GridCell, u32)> = raw_events.iter().filter(|e| e.2 == w).collect();

        for _ in 0..cfg.posts_per_window {
            let positive = post_rng.bernoulli(cfg.positive_fraction);
            let mut tokens: Vec<String> = Vec::new();
            let ts;
            let label;
            if positive {
                let &&(ets, cell, _) = post_rng.choose(&window_events).expect("events per window");
                let lo = start.max(ets - geotime::DEFAULT_MATCH_WINDOW);
                let hi = (end - 1).min(ets + geotime::DEFAULT_MATCH_WINDOW);
                ts = post_rng.between(lo, hi);
                let topical = if post_rng.bernoulli(cfg.sparse_positive_rate) {
                    cfg.words_per_post.div_ceil(2)
                } else {
                    cfg.words_per_post
                };
                for _ in 0..topical {
                    tokens.push(post_rng.choose(&vocab.relevant).unwrap().clone());
                }
                tokens.push(cell.synthetic_name());
                label = 1;
            } else {
                ts = post_rng.between(start, end - 1);
                for _ in 0..cfg.words_per_post {
                    tokens.push(post_rng.choose(&vocab.irrelevant).unwrap().clone());
                }
                if post_rng.bernoulli(cfg.negative_location_rate) {
                    for i_try in 0..NEGATIVE_LOCATION_TRIES {
                        // Name the current events' places, far from the events
                        // in time, so place names alone do not reveal the class.
                        let cell = if i_try + 1 < NEGATIVE_LOCATION_TRIES {
                            post_rng.choose(&window_events).unwrap().1
                        } else {
                            *post_rng.choose(&universe).unwrap()
                        };
                        let clear = events_by_cell
                            .get(&cell)
                            .is_none_or(|ts_list| ts_list.iter().all(|&e| (e - ts).abs() > NEGATIVE_LOCATION_GAP));
                        if clear {
                            tokens.push(cell.synthetic_name());
                            break;
                        }
                    }
                }
                label = 0;
            }
            if post_rng.bernoulli(cfg.keyword_rate) {
                tokens.push(post_rng.choose(&KEYWORDS).unwrap().to_string());
            }
            tokens.push(post_rng.choose(&FILLERS).unwrap().to_string());
            post_rng.shuffle(&mut tokens);
            let author = format!("u{:04}", post_rng.below(1000));
            let links = if post_rng.bernoulli(0.2) {
                vec![format!("https://example.org/s/{:08x}", post_rng.next_u64() as u32)]
            } else {
                Vec::new()
            };
            drafts.push((ts, tokens.join(" "), label, author, links));
        }
    }

    // Stable sort keeps generation order among equal timestamps.
    drafts.sort_by_key(|d| d.0);
    let mut truth = BTreeMap::new();
    let posts = drafts
        .into_iter()
        .enumerate()
        .map(|(i, (ts, text, label, author, links))| {
            let id = format!("p{i:07}");
            truth.insert(id.clone(), label);
            SocialPost {
                id,
                text,
                locations: Vec::new(),
                timestamp: ts,
                links,
                author,
            }
        })
        .collect();

    Ok(SynthStream {
        posts,
        events,
        truth,
        relevant_vocab,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_cfg(seed: u64) -> SynthConfig {
        SynthConfig {
            n_windows: 3,
            posts_per_window: 300,
            drift_windows: vec![1],
            seed,
            ..SynthConfig::default()
        }
    }

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn reads_one_post() {
        let f = write_lines(&[
            r#"{"id":"1","text":"Landslide in Sikkim","locations":["Sikkim"],"timestamp":5,"links":["http://x"],"author":"bob"}"#,
        ]);
        let out = read_posts(f.path()).unwrap();
        assert_eq!(out.skipped, 0);
        let p = &out.items[0];
        assert_eq!(p.locations, vec!["Sikkim"]);
        assert_eq!(p.links, vec!["http://x"]);
        assert_eq!((p.timestamp, p.author.as_str()), (5, "bob"));
    }

    #[test]
    fn empty_and_malformed_post_files() {
        let f = write_lines(&[]);
        assert_eq!(
            read_posts(f.path()).unwrap(),
            ReadOutcome {
                items: vec![],
                skipped: 0
            }
        );
        let f = write_lines(&[
            r#"{"id":"1","locations":[],"timestamp":5,"links":[],"author":"bob"}"#,
            r#"{"id":"2","text":"   ","locations":[],"timestamp":5,"links":[],"author":"bob"}"#,
            r#"{"id":"","text":"x","locations":[],"timestamp":5,"links":[],"author":"bob"}"#,
            r#"{"id":"3","text":"x","locations":[],"timestamp":-1,"links":[],"author":"bob"}"#,
            "not json",
        ]);
        let out = read_posts(f.path()).unwrap();
        assert!(out.items.is_empty());
        assert_eq!(out.skipped, 5);
    }

    #[test]
    fn event_validation() {
        let f = write_lines(&[
            r#"{"id":"a","lat":0,"lon":0,"timestamp":1,"location_names":["Quito"],"source":"news"}"#,
            r#"{"id":"b","lat":95,"lon":0,"timestamp":1,"location_names":["Quito"],"source":"news"}"#,
            r#"{"id":"c","lat":0,"lon":0,"timestamp":1,"location_names":[],"source":"news"}"#,
            r#"{"id":"d","lat":0,"lon":0,"timestamp":1,"location_names":["x"],"source":"rumour"}"#,
        ]);
        let out = read_events(f.path()).unwrap();
        assert_eq!(out.items.len(), 1);
        assert_eq!(out.items[0].id, "a");
        assert_eq!(out.skipped, 3);
    }

    #[test]
    fn missing_file_is_fatal() {
        assert!(matches!(
            read_posts("/nonexistent/posts.jsonl"),
            Err(IngestError::Read { .. })
        ));
    }

    #[test]
    fn post_keys_are_exact() {
        let p = SocialPost {
            id: "1".into(),
            text: "t".into(),
            locations: vec![],
            timestamp: 0,
            links: vec![],
            author: "a".into(),
        };
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"id":"1","text":"t","locations":[],"timestamp":0,"links":[],"author":"a"}"#
        );
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_stream(&small_cfg(9)).unwrap();
        let b = generate_stream(&small_cfg(9)).unwrap();
        assert_eq!(posts_to_jsonl(&a.posts), posts_to_jsonl(&b.posts));
        assert_eq!(a.events, b.events);
        let c = generate_stream(&small_cfg(10)).unwrap();
        assert_ne!(posts_to_jsonl(&a.posts), posts_to_jsonl(&c.posts));
    }

    #[test]
    fn no_drift_keeps_vocabulary() {
        let cfg = SynthConfig {
            swap_ratio: 0.0,
            ..small_cfg(3)
        };
        let s = generate_stream(&cfg).unwrap();
        assert!(s.relevant_vocab.windows(2).all(|w| w[0] == w[1]));

        let drifted = generate_stream(&small_cfg(3)).unwrap();
        let (before, after) = (&drifted.relevant_vocab[0], &drifted.relevant_vocab[1]);
        let kept = after.iter().filter(|w| before.contains(w)).count();
        assert_eq!(kept, before.len() / 2);
    }

    #[test]
    fn positive_count_is_binomial() {
        let cfg = SynthConfig {
            n_windows: 5,
            posts_per_window: 2000,
            positive_fraction: 0.3,
            drift_windows: vec![],
            seed: 77,
            ..SynthConfig::default()
        };
        let s = generate_stream(&cfg).unwrap();
        let n = s.posts.len() as f64;
        let pos = s.truth.values().filter(|&&l| l == 1).count() as f64;
        let sigma = (n * 0.3 * 0.7).sqrt();
        assert!((pos - n * 0.3).abs() <= 3.0 * sigma, "positives {pos}");
    }

    #[test]
    fn positives_sit_near_an_event_in_their_cell() {
        let s = generate_stream(&small_cfg(5)).unwrap();
        for p in &s.posts {
            let near = s
                .events
                .iter()
                .any(|e| p.text.contains(&e.location_names[0]) && (p.timestamp - e.timestamp).abs() <= 3 * DAY);
            if s.truth[&p.id] == 1 {
                assert!(near, "positive {} has no nearby event", p.id);
            } else {
                let too_close = s
                    .events
                    .iter()
                    .any(|e| p.text.contains(&e.location_names[0]) && (p.timestamp - e.timestamp).abs() <= 7 * DAY);
                assert!(!too_close, "negative {} names a live event cell", p.id);
            }
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for cfg in [
            SynthConfig {
                positive_fraction: 1.0,
                ..SynthConfig::default()
            },
            SynthConfig {
                swap_ratio: 1.5,
                ..SynthConfig::default()
            },
            SynthConfig {
                drift_windows: vec![8],
                ..SynthConfig::default()
            },
            SynthConfig {
                n_windows: 0,
                ..SynthConfig::default()
            },
        ] {
            assert!(generate_stream(&cfg).is_err());
        }
    }

    #[test]
    fn pseudo_words_are_distinct() {
        let words: BTreeSet<String> = (0..5000).map(pseudo_word).collect();
        assert_eq!(words.len(), 5000);
        assert!(words.iter().all(|w| w.chars().all(|c| c.is_ascii_alphanumeric())));
    }

    fn arb_post() -> impl Strategy<Value = SocialPost> {
        (
            "[a-z0-9]{1,8}",
            "[a-zA-Z ]{0,10}[a-z]{1,5}\\PC{0,10}",
            prop::collection::vec("\\PC{0,8}", 0..3),
            0i64..i64::MAX,
            prop::collection::vec("https://[a-z]{1,8}", 0..3),
            "\\PC{0,8}",
        )
            .prop_map(|(id, text, locations, timestamp, links, author)| SocialPost {
                id,
                text,
                locations,
                timestamp,
                links,
                author,
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn post_file_round_trip(posts in prop::collection::vec(arb_post(), 0..20)) {
            let f = tempfile::NamedTempFile::new().unwrap();
            write_posts(f.path(), &posts).unwrap();
            let back = read_posts(f.path()).unwrap();
            prop_assert_eq!(back.skipped, 0);
            prop_assert_eq!(back.items, posts);
        }
    }
}
