//! Plot-ready outputs: per-window CSV, GeoJSON of detected events and a
//! JSON summary of a bench run.

use std::fmt::Write as _;

use serde_json::{json, Value};

use super::config::PipelineConfig;
use super::events::DetectedEvent;
use super::run::{BenchReport, RunOutcome};
use crate::geotime::cell_center;
use crate::learners::Metrics;

pub const BENCH_CSV_HEADER: &str = "window,f1_static,f1_adaptive,precision_static,recall_static,\
precision_adaptive,recall_adaptive,events_static,events_adaptive,events_both,\
events_static_only,events_adaptive_only,fraction_both,fraction_adaptive_only,centroid_shift";

pub const RUN_CSV_HEADER: &str = "window,predictions,predicted_relevant,precision,recall,f1,\
label_precision,label_recall,label_f1,events,labeled,positives,negatives,excluded,\
detector_fired_at,updated,registry_size,centroid_shift";

fn num(x: f64) -> String {
    format!("{x:.6}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn prf(m: Option<Metrics>) -> [String; 3] {
    match m {
        Some(m) => [num(m.precision), num(m.recall), num(m.f1)],
        None => Default::default(),
    }
}

/// One row per window. Window 0 only bootstraps, so its prediction
/// columns are empty.
pub fn bench_csv(report: &BenchReport) -> String {
    let mut out = String::from(BENCH_CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        let [ps, rs, fs] = prf(r.static_metrics);
        let [pa, ra, fa] = prf(r.adaptive_metrics);
        let e = &r.events;
        let predicted = r.static_metrics.is_some();
        let count = |n: usize| if predicted { n.to_string() } else { String::new() };
        let frac = |x: f64| if predicted { num(x) } else { String::new() };
        writeln!(
            out,
            "{},{fs},{fa},{ps},{rs},{pa},{ra},{},{},{},{},{},{},{},{}",
            r.window,
            count(e.events_static),
            count(e.events_adaptive),
            count(e.both),
            count(e.static_only),
            count(e.adaptive_only),
            frac(e.fraction_both()),
            frac(e.fraction_adaptive_only()),
            opt_num(r.centroid_shift),
        )
        .unwrap();
    }
    out
}

pub fn run_csv(run: &RunOutcome) -> String {
    let mut out = String::from(RUN_CSV_HEADER);
    out.push('\n');
    for (w, shift) in run.windows.iter().zip(&run.centroid_shift) {
        let [p, r, f] = prf(w.metrics_truth.or(w.metrics_labels));
        let [lp, lr, lf] = prf(w.metrics_labels);
        let s = w.label_stats;
        writeln!(
            out,
            "{},{},{},{p},{r},{f},{lp},{lr},{lf},{},{},{},{},{},{},{},{},{}",
            w.window,
            w.predictions,
            w.predicted_relevant,
            w.events.len(),
            s.labeled,
            s.positives,
            s.negatives,
            s.excluded,
            w.detector_fired_at.map(|t| t.to_string()).unwrap_or_default(),
            w.updated,
            w.registry_size,
            opt_num(*shift),
        )
        .unwrap();
    }
    out
}

fn event_feature(arm: &str, window: u32, e: &DetectedEvent) -> Value {
    let (lat, lon) = cell_center(e.main_cell);
    json!({
        "type": "Feature",
        "geometry": { "type": "Point", "coordinates": [lon, lat] },
        "properties": {
            "arm": arm,
            "window": window,
            "post_count": e.post_count,
            "start": e.start,
            "end": e.end,
            "cells": e.cells.len(),
        }
    })
}

/// FeatureCollection of every run's detected events as cell-center points.
pub fn events_geojson(runs: &[&RunOutcome]) -> String {
    let features: Vec<Value> = runs
        .iter()
        .flat_map(|run| {
            let arm = serde_json::to_value(run.arm).unwrap();
            let arm = arm.as_str().unwrap().to_owned();
            run.windows
                .iter()
                .flat_map(move |w| {
                    let arm = arm.clone();
                    w.events.iter().map(move |e| event_feature(&arm, w.window, e))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let fc = json!({ "type": "FeatureCollection", "features": features });
    serde_json::to_string_pretty(&fc).unwrap() + "\n"
}

pub fn bench_summary(cfg: &PipelineConfig, report: &BenchReport) -> String {
    let totals = report.totals();
    let mean = |f: &dyn Fn(&super::run::BenchRow) -> Option<Metrics>| {
        let v: Vec<f64> = report.rows.iter().filter_map(|r| f(r).map(|m| m.f1)).collect();
        if v.is_empty() {
            None
        } else {
            Some(v.iter().sum::<f64>() / v.len() as f64)
        }
    };
    let v = json!({
        "seed": cfg.seed,
        "stream_sha256": report.stream_sha256,
        "windows": report.rows.len(),
        "mean_f1_static": mean(&|r| r.static_metrics),
        "mean_f1_adaptive": mean(&|r| r.adaptive_metrics),
        "events": {
            "static": totals.events_static,
            "adaptive": totals.events_adaptive,
            "both": totals.both,
            "static_only": totals.static_only,
            "adaptive_only": totals.adaptive_only,
            "fraction_both": totals.fraction_both(),
            "fraction_adaptive_only": totals.fraction_adaptive_only(),
            "static_contained_in_adaptive": totals.contained(),
        },
        "grouping": cfg.grouping(),
        "registry_size_static": report.static_run.registry.len(),
        "registry_size_adaptive": report.adaptive_run.registry.len(),
    });
    serde_json::to_string_pretty(&v).unwrap() + "\n"
}
