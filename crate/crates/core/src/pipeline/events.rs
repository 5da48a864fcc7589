use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geotime::{GridCell, DAY};

/// Single-linkage grouping parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grouping {
    pub min_posts: usize,
    pub radius: u32,
    pub span: i64,
}

impl Default for Grouping {
    fn default() -> Self {
        Self {
            min_posts: 1,
            radius: 1,
            span: 3 * DAY,
        }
    }
}

/// A post classified relevant whose location resolved to a cell.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LocatedPost {
    pub timestamp: i64,
    pub post_id: String,
    pub cell: GridCell,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectedEvent {
    pub cells: BTreeSet<GridCell>,
    pub start: i64,
    pub end: i64,
    pub post_ids: Vec<String>,
    pub post_count: usize,
    /// The cell holding most of the event's posts (lowest cell on ties).
    pub main_cell: GridCell,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Groups posts into events: two posts link when their cells are within
/// `radius` and their timestamps within `span`; connected components with
/// at least `min_posts` posts are events. The result does not depend on the
/// input order.
pub fn detect_events(posts: &[LocatedPost], g: &Grouping) -> Vec<DetectedEvent> {
    let mut sorted: Vec<&LocatedPost> = posts.iter().collect();
    sorted.sort();
    let n = sorted.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut lo = 0;
    for i in 0..n {
        while sorted[i].timestamp - sorted[lo].timestamp > g.span {
            lo += 1;
        }
        for j in lo..i {
            if sorted[i].cell.distance(&sorted[j].cell) <= g.radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<&LocatedPost>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(sorted[i]);
    }
    // Roots are the smallest member index, so iteration follows the earliest post.
    groups
        .into_values()
        .filter(|m| m.len() >= g.min_posts)
        .map(|members| {
            let mut counts: BTreeMap<GridCell, usize> = BTreeMap::new();
            for p in &members {
                *counts.entry(p.cell).or_default() += 1;
            }
            let main_cell = counts
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(c, _)| *c)
                .expect("non-empty group");
            DetectedEvent {
                cells: counts.keys().copied().collect(),
                start: members.first().unwrap().timestamp,
                end: members.last().unwrap().timestamp,
                post_ids: members.iter().map(|p| p.post_id.clone()).collect(),
                post_count: members.len(),
                main_cell,
            }
        })
        .collect()
}

/// True when the two events are plausibly the same physical event: some
/// pair of their cells is within `radius` and their time spans come within
/// `span` of each other.
pub fn same_event(a: &DetectedEvent, b: &DetectedEvent, g: &Grouping) -> bool {
    let close_in_time = a.start <= b.end + g.span && b.start <= a.end + g.span;
    close_in_time
        && a.cells
            .iter()
            .any(|c| b.cells.iter().any(|d| c.distance(d) <= g.radius))
}

/// Overlap between the static and adaptive arms' detections.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EventComparison {
    pub events_static: usize,
    pub events_adaptive: usize,
    /// Static events also found by the adaptive arm.
    pub both: usize,
    pub static_only: usize,
    pub adaptive_only: usize,
}

impl EventComparison {
    pub fn total(&self) -> usize {
        self.both + self.static_only + self.adaptive_only
    }

    pub fn fraction_both(&self) -> f64 {
        ratio(self.both, self.total())
    }

    pub fn fraction_adaptive_only(&self) -> f64 {
        ratio(self.adaptive_only, self.total())
    }

    /// Every static detection was also made by the adaptive arm.
    pub fn contained(&self) -> bool {
        self.static_only == 0
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn compare_events(
    static_events: &[DetectedEvent],
    adaptive_events: &[DetectedEvent],
    g: &Grouping,
) -> EventComparison {
    let both = static_events
        .iter()
        .filter(|s| adaptive_events.iter().any(|a| same_event(s, a, g)))
        .count();
    let adaptive_only = adaptive_events
        .iter()
        .filter(|a| !static_events.iter().any(|s| same_event(s, a, g)))
        .count();
    EventComparison {
        events_static: static_events.len(),
        events_adaptive: adaptive_events.len(),
        both,
        static_only: static_events.len() - both,
        adaptive_only,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;
    use proptest::prelude::*;

    fn lp(id: &str, ts: i64, row: u32, col: u32) -> LocatedPost {
        LocatedPost {
            timestamp: ts,
            post_id: id.into(),
            cell: GridCell { row, col },
        }
    }

    #[test]
    fn examples() {
        let g = Grouping::default();
        let three = [lp("a", 0, 5, 5), lp("b", DAY, 5, 5), lp("c", 2 * DAY, 5, 5)];
        let ev = detect_events(&three, &g);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].post_count, 3);
        assert_eq!((ev[0].start, ev[0].end), (0, 2 * DAY));

        let nine: Vec<_> = (0..9).map(|i| lp(&format!("p{i}"), i, 5, 5)).collect();
        assert!(detect_events(&nine, &Grouping { min_posts: 10, ..g }).is_empty());

        let two = [lp("a", 0, 5, 5), lp("b", 0, 5, 105), lp("c", 1, 6, 6)];
        assert_eq!(detect_events(&two, &g).len(), 2);
    }

    #[test]
    fn chains_link_transitively() {
        let g = Grouping::default();
        let chain: Vec<_> = (0..5)
            .map(|i| lp(&format!("p{i}"), i as i64 * 3 * DAY, 5, 5 + i))
            .collect();
        let ev = detect_events(&chain, &g);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].cells.len(), 5);
        let broken = [lp("a", 0, 5, 5), lp("b", 3 * DAY + 1, 5, 5)];
        assert_eq!(detect_events(&broken, &g).len(), 2);
    }

    #[test]
    fn comparison_counts() {
        let g = Grouping::default();
        let s = detect_events(&[lp("a", 0, 5, 5), lp("b", 0, 50, 50)], &g);
        let a = detect_events(&[lp("a", DAY, 5, 6), lp("z", 0, 90, 90)], &g);
        let c = compare_events(&s, &a, &g);
        assert_eq!((c.both, c.static_only, c.adaptive_only), (1, 1, 1));
        assert!(!c.contained());
        assert!((c.fraction_both() - 1.0 / 3.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn order_invariant(seed in any::<u64>()) {
            let mut rng = StreamRng::new(seed);
            let mut posts: Vec<_> = (0..60)
                .map(|i| lp(&format!("p{i:02}"), rng.between(0, 20 * DAY), 10 + rng.below(6) as u32, 10 + rng.below(6) as u32))
                .collect();
            let g = Grouping::default();
            let before = detect_events(&posts, &g);
            rng.shuffle(&mut posts);
            prop_assert_eq!(&before, &detect_events(&posts, &g));
            let total: usize = before.iter().map(|e| e.post_count).sum();
            prop_assert_eq!(total, posts.len());
            for e in &before {
                prop_assert_eq!(e.post_count, e.post_ids.len());
            }
        }
    }
}
