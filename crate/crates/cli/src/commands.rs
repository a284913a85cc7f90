use std::fs;
use std::io::{self, Write};
use std::path::Path;

use naskws::config::{WeightSource, expand_sweep, parse_sweep_arg, sweep_axes, RunConfig};
use naskws::dataset::{evaluate_entry, load_entry, read_manifest, stream_format, ManifestEntry};
use naskws::event::{compute_stats, read_stream, write_stream, EventStream, Format};
use naskws::gnn::{Engine, ModelWeights};
use naskws::hw::{calibrate_cycle_model, latency_report, simulate, throughput_envelope, SimEvent};
use naskws::metrics::{event_rate_report, metric_report, read_eval_records, reduction_pct, write_eval_csv, EvalRecord};
use naskws::pipeline::{replay_edges, synthetic_load};
use naskws::{filter_stream, GraphBuilder};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::{AblateArgs, Cli, Command, EvalArgs, FilterArgs, InferArgs, OutputFormat, SimulateArgs, StatsArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] naskws::Error),
    #[error("{0}")]
    Usage(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => "config",
            CliError::Pool(_) => "internal",
        }
    }

    /// 1 other, 2 configuration, 3 i/o, 4 parse or schema, 5 invalid data.
    pub fn exit_code(&self) -> u8 {
        match self.kind() {
            "config" => 2,
            "io" => 3,
            "parse" | "schema" => 4,
            "validation" | "ordering" | "overflow" => 5,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": { "kind": self.kind(), "code": self.exit_code(), "message": self.to_string() } }).to_string()
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => at(p, RunConfig::from_path(p))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.model.seed = seed;
    }
    config.apply_overrides(&cli.overrides)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Pool(e.to_string()))?;

    pool.install(|| match &cli.command {
        Command::Stats(a) => cmd_stats(cli, &config, a),
        Command::Filter(a) => cmd_filter(cli, &config, a),
        Command::Infer(a) => cmd_infer(cli, &config, a),
        Command::Eval(a) => cmd_eval(cli, &config, a),
        Command::Simulate(a) => cmd_simulate(cli, &config, a),
        Command::Ablate(a) => cmd_ablate(cli, &config, a),
    })
}

/// Names the file in i/o errors.
fn at<T>(path: &Path, r: naskws::Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        naskws::Error::Io(io) => io::Error::new(io.kind(), format!("{}: {io}", path.display())).into(),
        other => other.into(),
    })
}

fn load_model(config: &RunConfig) -> Result<ModelWeights> {
    match &config.model.weights {
        WeightSource::File(p) => at(p, config.model.load()),
        WeightSource::Random => Ok(config.model.load()?),
    }
}

fn load(config: &RunConfig, path: &Path) -> Result<EventStream> {
    at(path, stream_format(config, path).and_then(|f| read_stream(path, f, config.sensor)))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
    text.push('\n');
    emit(None, &text)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => match io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
            other => other?,
        },
    }
    Ok(())
}

fn cmd_stats(cli: &Cli, config: &RunConfig, a: &StatsArgs) -> Result<()> {
    let streams: Vec<EventStream> = a.inputs.par_iter().map(|p| load(config, p)).collect::<Result<_>>()?;
    let filtered = if a.filtered {
        match config.filtration_params()? {
            Some(f) => Some(streams.par_iter().map(|s| filter_stream(s, &f)).collect::<naskws::Result<Vec<_>>>()?),
            None => Some(streams.clone()),
        }
    } else {
        None
    };
    let report = event_rate_report(&streams, filtered.as_deref(), config.io.window_us)?;
    match cli.format {
        OutputFormat::Json => print_json(&json!({ "config": config, "stats": report })),
        OutputFormat::Csv => {
            let stats = compute_stats(&streams, config.io.window_us)?;
            let mut s = String::from("channel,mean,std\n");
            for (c, (m, sd)) in stats.per_channel_mean.iter().zip(&stats.per_channel_std).enumerate() {
                s.push_str(&format!("{c},{m},{sd}\n"));
            }
            emit(None, &s)
        }
    }
}

fn cmd_filter(cli: &Cli, config: &RunConfig, a: &FilterArgs) -> Result<()> {
    let out_path = a
        .output
        .as_ref()
        .or(config.io.output.as_ref())
        .ok_or_else(|| CliError::Usage("filter needs -o or io.output".into()))?;
    let input = load(config, &a.input)?;
    let output = match config.filtration_params()? {
        Some(f) => filter_stream(&input, &f)?,
        None => input.clone(),
    };
    let out_format = match config.io.format.as_str() {
        "auto" => Format::from_path(out_path),
        other => other.parse()?,
    };
    at(out_path, write_stream(&output, out_path, out_format))?;
    let summary = json!({
        "config": config,
        "input": a.input,
        "output": out_path,
        "input_events": input.len(),
        "output_events": output.len(),
        "reduction_pct": reduction_pct(input.len() as u64, output.len() as u64),
    });
    match cli.format {
        OutputFormat::Json => print_json(&summary),
        OutputFormat::Csv => emit(
            None,
            &format!(
                "input_events,output_events,reduction_pct\n{},{},{}\n",
                input.len(),
                output.len(),
                summary["reduction_pct"].as_f64().map(|v| v.to_string()).unwrap_or_default()
            ),
        ),
    }
}

fn cmd_infer(cli: &Cli, config: &RunConfig, a: &InferArgs) -> Result<()> {
    let stream = load(config, &a.input)?;
    let weights = load_model(config)?;
    let channels = stream.config.channels() as usize;
    let mut engine = Engine::new(&weights, channels, config.graph, config.filtration_params()?)?;
    let preds = engine.run(&stream)?;

    if let Some(path) = &a.dump_graph {
        let mut b = GraphBuilder::new(channels, config.graph)?;
        let accepted = match config.filtration_params()? {
            Some(f) => filter_stream(&stream, &f)?,
            None => stream.clone(),
        };
        let mut lines = String::new();
        for ev in &accepted.events {
            lines.push_str(&b.insert_event(*ev)?.to_json_line());
            lines.push('\n');
        }
        fs::write(path, lines)?;
    }

    let text = match cli.format {
        OutputFormat::Json => preds.iter().map(|p| p.to_json_line() + "\n").collect::<String>(),
        OutputFormat::Csv => {
            let mut s = String::from("window,class,conf,logits\n");
            for p in &preds {
                let logits: Vec<String> = p.logits.iter().map(i32::to_string).collect();
                s.push_str(&format!("{},{},{},{}\n", p.window, p.class, p.conf, logits.join(";")));
            }
            s
        }
    };
    emit(a.output.as_deref().or(config.io.output.as_deref()), &text)?;
    eprintln!(
        "{}",
        json!({ "config": config, "input": a.input, "predictions": preds.len(), "counters": engine.counters() })
    );
    Ok(())
}

fn evaluate_all(entries: &[ManifestEntry], config: &RunConfig, weights: &ModelWeights) -> Result<Vec<EvalRecord>> {
    entries.par_iter().map(|e| at(&e.path, evaluate_entry(e, config, weights))).collect()
}

fn cmd_eval(cli: &Cli, config: &RunConfig, a: &EvalArgs) -> Result<()> {
    let records = match (&a.manifest, &a.records_in) {
        (_, Some(path)) => at(path, read_eval_records(path))?,
        (Some(manifest), None) => {
            let entries = at(manifest, read_manifest(manifest))?;
            let weights = load_model(config)?;
            evaluate_all(&entries, config, &weights)?
        }
        (None, None) => return Err(CliError::Usage("eval needs a manifest or --records-in".into())),
    };
    if let Some(out) = &a.records_out {
        fs::write(out, write_eval_csv(&records))?;
    }
    let report = metric_report(&records, &a.tolerances)?;
    match cli.format {
        OutputFormat::Json => print_json(&json!({ "config": config, "metrics": report })),
        OutputFormat::Csv => {
            let mut s = String::from("metric,value\n");
            s.push_str(&format!("n,{}\nacc,{}\nf1_macro,{}\n", report.n, report.acc, report.f1_macro));
            for (k, v) in &report.ts_acc {
                s.push_str(&format!("ts_acc_{k},{v}\n"));
            }
            emit(None, &s)
        }
    }
}

fn parse_edge_range(s: &str) -> Result<std::ops::RangeInclusive<u32>> {
    let bad = || CliError::Usage(format!("edge range {s:?} must look like LO..=HI or N"));
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (lo, hi.trim_start_matches('=')),
        None => (s, s),
    };
    let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
    let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok(lo..=hi)
}

fn cmd_simulate(cli: &Cli, config: &RunConfig, a: &SimulateArgs) -> Result<()> {
    let (load_desc, events): (serde_json::Value, Vec<SimEvent>) = match (&a.input, a.rate) {
        (Some(path), _) => {
            let stream = load(config, path)?;
            let filt = config.filtration_params()?;
            (json!({ "input": path }), replay_edges(&stream, config.graph, filt.as_ref())?)
        }
        (None, Some(rate)) => {
            let edges = parse_edge_range(&a.edges)?;
            let seed = cli.seed.unwrap_or(config.model.seed);
            (
                json!({ "synthetic": { "rate_eps": rate, "duration_us": a.duration_us, "edges": a.edges, "seed": seed } }),
                synthetic_load(seed, rate, a.duration_us, edges)?,
            )
        }
        (None, None) => return Err(CliError::Usage("simulate needs an input file or --rate".into())),
    };
    let hw = &config.hw;
    let trace = simulate(&events, hw)?;
    if let Some(path) = &a.trace {
        fs::write(path, trace.to_csv())?;
    }
    let report = latency_report(&trace);
    let max_edges = config.graph.max_degree() as u32;
    let envelope = throughput_envelope(hw, max_edges);
    let calibration = calibrate_cycle_model(hw.latency_us(0), hw.latency_us(max_edges.max(1)), max_edges.max(1), hw.clock_hz)?;
    match cli.format {
        OutputFormat::Json => print_json(&json!({
            "config": config,
            "load": load_desc,
            "calibration": calibration,
            "envelope": envelope,
            "latency": report,
        })),
        OutputFormat::Csv => emit(None, &trace.to_csv()),
    }
}

#[derive(Serialize)]
struct AblationRow {
    settings: std::collections::BTreeMap<String, String>,
    config: RunConfig,
    metrics: naskws::MetricReport,
    reduction_pct: Option<f64>,
    edges_per_event: Option<f64>,
}

fn cmd_ablate(cli: &Cli, config: &RunConfig, a: &AblateArgs) -> Result<()> {
    let mut axes = match &cli.config {
        Some(p) => sweep_axes(&at(p, fs::read_to_string(p).map_err(Into::into))?)?,
        None => Vec::new(),
    };
    for s in &a.sweeps {
        axes.push(parse_sweep_arg(s)?);
    }
    // command-line overrides hold across the sweep except on swept keys
    let points = expand_sweep(config, &axes)?;
    let entries = at(&a.manifest, read_manifest(&a.manifest))?;

    let rows: Vec<AblationRow> = points
        .par_iter()
        .map(|p| -> Result<AblationRow> {
            let cfg = &p.config;
            let weights = load_model(cfg)?;
            let streams: Vec<EventStream> = entries.iter().map(|e| at(&e.path, load_entry(e, cfg))).collect::<Result<_>>()?;
            let filt = cfg.filtration_params()?;
            let mut total = 0u64;
            let mut kept = 0u64;
            let mut edges = 0u64;
            for s in &streams {
                let replay = replay_edges(s, cfg.graph, filt.as_ref())?;
                total += s.len() as u64;
                kept += replay.len() as u64;
                edges += replay.iter().map(|e| e.edges as u64).sum::<u64>();
            }
            let records = evaluate_all(&entries, cfg, &weights)?;
            Ok(AblationRow {
                settings: p.settings.clone(),
                config: cfg.clone(),
                metrics: metric_report(&records, &a.tolerances)?,
                reduction_pct: reduction_pct(total, kept),
                edges_per_event: (kept > 0).then(|| edges as f64 / kept as f64),
            })
        })
        .collect::<Result<_>>()?;

    match cli.format {
        OutputFormat::Json => {
            let mut s = String::new();
            for r in &rows {
                s.push_str(&serde_json::to_string(r).map_err(|e| CliError::Usage(e.to_string()))?);
                s.push('\n');
            }
            emit(None, &s)
        }
        OutputFormat::Csv => {
            let keys: Vec<String> = axes.iter().map(|(k, _)| k.clone()).collect();
            let mut s = keys.join(",");
            s.push_str(if keys.is_empty() { "" } else { "," });
            s.push_str("acc,f1_macro,reduction_pct,edges_per_event\n");
            for r in &rows {
                for k in &keys {
                    s.push_str(&r.settings[k]);
                    s.push(',');
                }
                let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    r.metrics.acc,
                    r.metrics.f1_macro,
                    opt(r.reduction_pct),
                    opt(r.edges_per_event)
                ));
            }
            emit(None, &s)
        }
    }
}

