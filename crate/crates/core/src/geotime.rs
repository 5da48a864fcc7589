//! Global 2.5 arc-minute grid, short-term location memory, and the
//! space-time match rule between posts and ground-truth events.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::GroundTruthEvent;

/// Cells per degree (2.5 arc-minutes = 1/24 degree).
pub const CELLS_PER_DEGREE: f64 = 24.0;
pub const GRID_ROWS: u32 = 180 * 24;
pub const GRID_COLS: u32 = 360 * 24;

pub const DAY: i64 = 86_400;
pub const DEFAULT_MEMORY_TTL: i64 = 7 * DAY;
pub const DEFAULT_MATCH_WINDOW: i64 = 3 * DAY;
/// Shortest name the substring matcher will store.
pub const MIN_NAME_CHARS: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180)")]
    Longitude(f64),
    #[error("cell ({row}, {col}) outside the grid")]
    Cell { row: u32, col: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridCell {
    pub row: u32,
    pub col: u32,
}

impl GridCell {
    pub fn new(row: u32, col: u32) -> Result<Self, GeoError> {
        if row >= GRID_ROWS || col >= GRID_COLS {
            return Err(GeoError::Cell { row, col });
        }
        Ok(Self { row, col })
    }

    /// Chebyshev distance in cells. Columns wrap at the antimeridian.
    pub fn distance(&self, other: &GridCell) -> u32 {
        let dr = self.row.abs_diff(other.row);
        let dc = self.col.abs_diff(other.col);
        let dc = dc.min(GRID_COLS - dc);
        dr.max(dc)
    }

    /// Synthetic gazetteer name for this cell, e.g. `cell0123_0456`
    /// (zero-padded column then row, so no name is a substring of another).
    pub fn synthetic_name(&self) -> String {
        format!("cell{:04}_{:04}", self.col, self.row)
    }
}

impl fmt::Display for GridCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.row, self.col)
    }
}

pub fn cell_of(lat: f64, lon: f64) -> Result<GridCell, GeoError> {
    if !(-90.0..=90.0).contains(&lat) {
        return Err(GeoError::Latitude(lat));
    }
    if !(-180.0..180.0).contains(&lon) {
        return Err(GeoError::Longitude(lon));
    }
    let row = (((90.0 - lat) * CELLS_PER_DEGREE).floor() as u32).min(GRID_ROWS - 1);
    let col = (((lon + 180.0) * CELLS_PER_DEGREE).floor() as u32).min(GRID_COLS - 1);
    Ok(GridCell { row, col })
}

/// Center of a cell as `(lat, lon)`.
pub fn cell_center(cell: GridCell) -> (f64, f64) {
    let lat = 90.0 - (cell.row as f64 + 0.5) / CELLS_PER_DEGREE;
    let lon = -180.0 + (cell.col as f64 + 0.5) / CELLS_PER_DEGREE;
    (lat, lon)
}

/// True iff the post is within `max_dt` seconds of the event (inclusive)
/// and within `radius` cells of the event's cell.
pub fn spatiotemporal_match(
    post_cell: GridCell,
    post_ts: i64,
    event: &GroundTruthEvent,
    max_dt: i64,
    radius: u32,
) -> bool {
    if (post_ts - event.timestamp).abs() > max_dt {
        return false;
    }
    match event.cell() {
        Ok(cell) => post_cell.distance(&cell) <= radius,
        Err(_) => false,
    }
}

/// Short-term memory of location names for substring matching.
///
/// Names are stored lowercased. Entries older than `ttl` are never
/// returned. Pinned entries (gazetteer seeds) never expire.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationMemory {
    entries: BTreeMap<String, Option<i64>>,
    ttl: i64,
}

impl Default for LocationMemory {
    fn default() -> Self {
        Self::new(DEFAULT_MEMORY_TTL)
    }
}

impl LocationMemory {
    pub fn new(ttl: i64) -> Self {
        Self {
            entries: BTreeMap::new(),
            ttl,
        }
    }

    pub fn ttl(&self) -> i64 {
        self.ttl
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Stores `name` at time `now`, refreshing it if already present.
    /// Returns `false` when the name is too short to be stored.
    pub fn remember(&mut self, name: &str, now: i64) -> bool {
        let Some(key) = normalize_name(name) else {
            return false;
        };
        match self.entries.get_mut(&key) {
            Some(None) => {}
            Some(slot) => *slot = Some(now),
            None => {
                self.entries.insert(key, Some(now));
            }
        }
        true
    }

    /// Stores a name that never expires.
    pub fn pin(&mut self, name: &str) -> bool {
        let Some(key) = normalize_name(name) else {
            return false;
        };
        self.entries.insert(key, None);
        true
    }

    pub fn contains(&self, name: &str, now: i64) -> bool {
        self.entries
            .get(&name.to_lowercase())
            .is_some_and(|added| self.alive(*added, now))
    }

    /// Drops entries that have expired by `now`.
    pub fn prune(&mut self, now: i64) {
        let ttl = self.ttl;
        self.entries.retain(|_, added| added.is_none_or(|t| now - t <= ttl));
    }

    /// All unexpired names occurring case-insensitively in `text`, in
    /// lexicographic order.
    pub fn match_locations(&self, text: &str, now: i64) -> Vec<String> {
        if self.entries.is_empty() {
            return Vec::new();
        }
        let haystack = text.to_lowercase();
        self.entries
            .iter()
            .filter(|(_, added)| self.alive(**added, now))
            .filter(|(name, _)| haystack.contains(name.as_str()))
            .map(|(name, _)| name.clone())
            .collect()
    }

    fn alive(&self, added: Option<i64>, now: i64) -> bool {
        added.is_none_or(|t| now - t <= self.ttl)
    }
}

fn normalize_name(name: &str) -> Option<String> {
    let key = name.trim().to_lowercase();
    (key.chars().count() >= MIN_NAME_CHARS).then_some(key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::EventSource;
    use proptest::prelude::*;

    fn event_at(cell: GridCell, ts: i64) -> GroundTruthEvent {
        let (lat, lon) = cell_center(cell);
        GroundTruthEvent {
            id: "e".into(),
            lat,
            lon,
            timestamp: ts,
            location_names: vec![cell.synthetic_name()],
            source: EventSource::Synthetic,
        }
    }

    #[test]
    fn corner_and_origin_cells() {
        assert_eq!(cell_of(90.0, -180.0).unwrap(), GridCell { row: 0, col: 0 });
        assert_eq!(cell_of(0.0, 0.0).unwrap(), GridCell { row: 2160, col: 4320 });
        assert_eq!(cell_of(-90.0, 0.0).unwrap().row, 4319);
    }

    #[test]
    fn kathmandu_cell() {
        // floor(62.2828 * 24) = 1494, floor(265.324 * 24) = 6367
        assert_eq!(cell_of(27.7172, 85.3240).unwrap(), GridCell { row: 1494, col: 6367 });
    }

    #[test]
    fn out_of_range_coordinates() {
        assert_eq!(cell_of(90.5, 0.0), Err(GeoError::Latitude(90.5)));
        assert_eq!(cell_of(0.0, 180.0), Err(GeoError::Longitude(180.0)));
        assert!(cell_of(f64::NAN, 0.0).is_err());
        assert!(GridCell::new(GRID_ROWS, 0).is_err());
    }

    #[test]
    fn centers_of_opposite_corners() {
        let (lat, lon) = cell_center(GridCell { row: 0, col: 0 });
        assert!((lat - (90.0 - 1.0 / 48.0)).abs() < 1e-12);
        assert!((lon - (-180.0 + 1.0 / 48.0)).abs() < 1e-12);
        let (lat, lon) = cell_center(GridCell { row: 4319, col: 8639 });
        assert!((lat - (-90.0 + 1.0 / 48.0)).abs() < 1e-12);
        assert!((lon - (180.0 - 1.0 / 48.0)).abs() < 1e-12);
    }

    #[test]
    fn memory_ttl_and_refresh() {
        let mut mem = LocationMemory::default();
        assert!(mem.remember("Sikkim", 0));
        assert!(mem.contains("sikkim", 6 * DAY));
        assert!(mem.remember("SIKKIM", 6 * DAY));
        assert_eq!(mem.len(), 1);
        assert!(mem.contains("sikkim", 12 * DAY));
        assert!(!mem.contains("sikkim", 14 * DAY));
        assert!(!mem.remember("Goa", 0));
        assert!(!mem.remember("  ab ", 0));
    }

    #[test]
    fn substring_matching() {
        let mut mem = LocationMemory::default();
        mem.remember("Sikkim", 0);
        assert_eq!(
            mem.match_locations("Mudslide near SIKKIM border", 2 * DAY),
            vec!["sikkim".to_string()]
        );
        assert!(mem.match_locations("Mudslide near SIKKIM border", 10 * DAY).is_empty());
        assert!(LocationMemory::default().match_locations("anything", 0).is_empty());
    }

    #[test]
    fn matches_are_sorted_and_pins_never_expire() {
        let mut mem = LocationMemory::default();
        mem.remember("zurich", 0);
        mem.remember("bern", 0);
        mem.pin("Geneva");
        assert_eq!(
            mem.match_locations("geneva, zurich and bern", 0),
            vec!["bern", "geneva", "zurich"]
        );
        mem.prune(100 * DAY);
        assert_eq!(mem.match_locations("geneva, zurich", 100 * DAY), vec!["geneva"]);
    }

    #[test]
    fn match_window_is_inclusive() {
        let cell = GridCell { row: 100, col: 200 };
        let ev = event_at(cell, 10 * DAY);
        assert!(spatiotemporal_match(cell, 12 * DAY, &ev, 3 * DAY, 0));
        assert!(spatiotemporal_match(cell, 13 * DAY, &ev, 3 * DAY, 0));
        assert!(!spatiotemporal_match(cell, 13 * DAY + 1, &ev, 3 * DAY, 0));
        let next = GridCell { row: 101, col: 201 };
        assert!(!spatiotemporal_match(next, 10 * DAY, &ev, 3 * DAY, 0));
        assert!(spatiotemporal_match(next, 10 * DAY, &ev, 3 * DAY, 1));
    }

    #[test]
    fn column_distance_wraps() {
        let a = GridCell { row: 10, col: 0 };
        let b = GridCell {
            row: 10,
            col: GRID_COLS - 1,
        };
        assert_eq!(a.distance(&b), 1);
    }

    #[test]
    fn synthetic_names_do_not_nest() {
        let a = GridCell { row: 4, col: 12 }.synthetic_name();
        let b = GridCell { row: 45, col: 12 }.synthetic_name();
        assert_eq!(a, "cell0012_0004");
        assert!(!b.contains(&a) && !a.contains(&b));
    }

    proptest! {
        #[test]
        fn center_round_trips(row in 0..GRID_ROWS, col in 0..GRID_COLS) {
            let cell = GridCell { row, col };
            let (lat, lon) = cell_center(cell);
            prop_assert_eq!(cell_of(lat, lon).unwrap(), cell);
        }

        #[test]
        fn cell_of_is_total(lat in -90.0f64..=90.0, lon in -180.0f64..180.0) {
            let cell = cell_of(lat, lon).unwrap();
            prop_assert!(cell.row < GRID_ROWS && cell.col < GRID_COLS);
        }

        #[test]
        fn memory_only_shrinks(t1 in 0i64..30 * DAY, dt in 0i64..30 * DAY) {
            let mut mem = LocationMemory::default();
            for (i, name) in ["alpha", "bravo", "charlie", "delta"].iter().enumerate() {
                mem.remember(name, i as i64 * 3 * DAY);
            }
            let text = "alpha bravo charlie delta";
            let early = mem.match_locations(text, t1);
            let late = mem.match_locations(text, t1 + dt);
            prop_assert!(late.iter().all(|n| early.contains(n)));
        }

        #[test]
        fn match_symmetric_in_time(offset in 0i64..10 * DAY) {
            let cell = GridCell { row: 7, col: 7 };
            let ev = event_at(cell, 20 * DAY);
            prop_assert_eq!(
                spatiotemporal_match(cell, 20 * DAY + offset, &ev, 3 * DAY, 0),
                spatiotemporal_match(cell, 20 * DAY - offset, &ev, 3 * DAY, 0)
            );
        }
    }
}
