use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use driftsense_core::ensemble::{ensemble_predict, Retrieval};
use driftsense_core::features::vectorize;
use driftsense_core::ingest::{read_posts, write_events, write_posts};
use driftsense_core::labeler::{generate_training_data, labels_to_jsonl, read_labels, Window};
use driftsense_core::learners::LabeledSample;
use driftsense_core::pipeline::{
    bench_csv, bench_on, bench_summary, events_geojson, run_csv, run_windowed, update_store, Arm, PipelineConfig,
    PipelineError, StreamData,
};
use driftsense_core::registry::{Registry, MANIFEST_FILE};

/// Drift-adaptive event detection over social-sensor text streams.
#[derive(Debug, Parser)]
#[command(name = "driftsense", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Flat TOML config; unset keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the synthetic stream (posts, events, truth) to files.
    Generate,
    /// Label one closed window of the configured stream.
    Label {
        #[arg(long)]
        window: u32,
    },
    /// Train on label files and add the models to a store.
    Train {
        /// Label files written by `label`.
        #[arg(long, required = true)]
        labels: Vec<PathBuf>,
        /// Store directory; defaults to `store_dir`, then `<out>/store`.
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Run the adaptive windowed pipeline.
    Run,
    /// Compare the static and adaptive arms on the same stream.
    Bench,
    /// Classify a post file with a saved store.
    Detect {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        posts: PathBuf,
    },
}

fn load_config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

fn generate(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let data = StreamData::synthetic(cfg)?;
    write_posts(out.join("posts.jsonl"), &data.posts)?;
    write_events(out.join("events.jsonl"), &data.events)?;
    let mut truth = String::new();
    for (id, label) in data.truth.iter().flatten() {
        truth.push_str(&json!({ "post_id": id, "label": label }).to_string());
        truth.push('\n');
    }
    write(out, "truth.jsonl", &truth)?;
    write(out, "config.toml", &cfg.to_toml())?;
    println!(
        "generated {} posts and {} events into {}",
        data.posts.len(),
        data.events.len(),
        out.display()
    );
    Ok(())
}

fn label(cfg: &PipelineConfig, out: &Path, index: u32) -> Result<()> {
    if index >= cfg.n_windows {
        return Err(PipelineError::Config(format!(
            "window {index} is outside the configured {} windows",
            cfg.n_windows
        ))
        .into());
    }
    let data = StreamData::load(cfg)?;
    let (start, end) = cfg.window_bounds(index);
    let window = Window::slice(index, start, end, &data.posts, &data.events, cfg.label_max_dt)?;
    let set = generate_training_data(&window, &cfg.label_params(), end)?;
    let path = write(out, &format!("labels-w{index:03}.jsonl"), &labels_to_jsonl(&set))?;
    let s = set.stats;
    println!(
        "window {index}: {} posts, {} positive, {} negative, {} excluded -> {}",
        s.total_posts,
        s.positives,
        s.negatives,
        s.excluded,
        path.display()
    );
    Ok(())
}

fn train(cfg: &PipelineConfig, out: &Path, label_files: &[PathBuf], store: Option<PathBuf>) -> Result<()> {
    let data = StreamData::load(cfg)?;
    let posts: BTreeMap<&str, _> = data.posts.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut samples = Vec::new();
    let mut window = 0;
    for file in label_files {
        let (records, _) = read_labels(file)?;
        for r in records {
            let post = posts
                .get(r.post_id.as_str())
                .with_context(|| format!("{}: post {} is not in the configured stream", file.display(), r.post_id))?;
            window = window.max(r.window);
            samples.push(LabeledSample {
                features: vectorize(&post.text, cfg.feature_dim),
                label: r.label,
                timestamp: post.timestamp,
                post_id: r.post_id,
            });
        }
    }
    samples.sort_by(|a, b| (a.timestamp, &a.post_id).cmp(&(b.timestamp, &b.post_id)));

    let dir = store
        .or_else(|| cfg.store_dir.clone())
        .unwrap_or_else(|| out.join("store"));
    let mut registry = if dir.join(MANIFEST_FILE).exists() {
        Registry::load(&dir)?
    } else {
        Registry::new()
    };
    let before = registry.len();
    update_store(&mut registry, cfg, &samples, window, cfg.window_bounds(window).1)?;
    registry.save(&dir)?;
    println!(
        "trained on {} samples: store {} grew from {before} to {} models",
        samples.len(),
        dir.display(),
        registry.len()
    );
    Ok(())
}

fn run(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let data = StreamData::load(cfg)?;
    let outcome = run_windowed(cfg, &data, Arm::Adaptive)?;
    write(out, "run.csv", &run_csv(&outcome))?;
    write(out, "events.geojson", &events_geojson(&[&outcome]))?;
    outcome.registry.save(out.join("store"))?;
    let events: usize = outcome.windows.iter().map(|w| w.events.len()).sum();
    println!(
        "{} windows, {events} detected events, {} stored models -> {}",
        outcome.windows.len(),
        outcome.registry.len(),
        out.display()
    );
    Ok(())
}

fn bench(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let data = StreamData::load(cfg)?;
    let report = bench_on(cfg, &data)?;
    let csv = write(out, "bench.csv", &bench_csv(&report))?;
    write(
        out,
        "events.geojson",
        &events_geojson(&[&report.static_run, &report.adaptive_run]),
    )?;
    write(out, "summary.json", &bench_summary(cfg, &report))?;
    print!("{}", fs::read_to_string(&csv)?);
    Ok(())
}

fn detect(cfg: &PipelineConfig, out: &Path, store: &Path, posts_path: &Path) -> Result<()> {
    let registry = Registry::load(store)?;
    if registry.is_empty() {
        return Err(PipelineError::Bootstrap(format!("store {} holds no models", store.display())).into());
    }
    let posts = read_posts(posts_path)?;
    let ens = cfg.ensemble();
    let dim = registry.records()[0].model.dim();
    let mut lines = String::new();
    let mut relevant = 0;
    for post in &posts.items {
        let x = vectorize(&post.text, dim);
        let members = match ens.retrieval {
            Retrieval::Recency => registry.recent(ens.size),
            Retrieval::Relevancy => registry.relevant(x.as_sparse(), ens.size),
        };
        let p = ensemble_predict(&x, &members, &ens)?;
        relevant += usize::from(p.label);
        lines.push_str(&json!({ "post_id": post.id, "label": p.label, "score": p.score }).to_string());
        lines.push('\n');
    }
    let path = write(out, "predictions.jsonl", &lines)?;
    println!(
        "{} posts ({} skipped), {relevant} relevant -> {}",
        posts.items.len(),
        posts.skipped,
        path.display()
    );
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.common)?;
    let out = &cli.common.out;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    match cli.command {
        Command::Generate => generate(&cfg, out),
        Command::Label { window } => label(&cfg, out, window),
        Command::Train { labels, store } => train(&cfg, out, &labels, store),
        Command::Run => run(&cfg, out),
        Command::Bench => bench(&cfg, out),
        Command::Detect { store, posts } => detect(&cfg, out, &store, &posts),
    }
}

/// The error and its causes, skipping causes already spelled out.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !msg.contains(&c) {
            msg.push_str(": ");
            msg.push_str(&c);
        }
    }
    msg
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            let usage = e.downcast_ref::<PipelineError>().is_some_and(PipelineError::is_usage);
            ExitCode::from(if usage { 1 } else { 2 })
        }
    }
}
