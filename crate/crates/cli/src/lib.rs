//! Command-line driver for `sequencer-core`.

pub mod error;
pub mod io;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use sequencer_core::fom::{select_best, EmbeddingCandidate};
use sequencer_core::outliers::{compute_residuals, flag_outliers, smooth_along_sequence, DEFAULT_WINDOW};
use sequencer_core::report::{format_view_table, rank_map, RunReport};
use sequencer_core::synth::{generate_pulse_dataset, shuffle_rows, PulseDatasetSpec};
use sequencer_core::{
    insert_with_weights, run, run_approx, ApproxConfig, Metric, MetricKind, ObjectSet64, SequencerConfig64,
    ViewWeights,
};

pub use error::{CliError, CliResult};
use io::{csv_matrix_bytes, index_lines, pgm_bytes, read_matrix, Artifacts};

#[derive(Debug, Parser)]
#[command(name = "sequencer", version, about = "Find the dominant one-dimensional trend in a set of objects")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Order the rows of a CSV or PGM matrix.
    Run(RunArgs),
    /// Generate test inputs.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Rank candidate 2-D embeddings by normalized elongation.
    Fom(FomArgs),
    /// Place one new object into an existing ordering.
    Insert(InsertArgs),
    /// Score rows of an ordered matrix against their running-median trend.
    Outliers(OutlierArgs),
    /// List the per-view orderings of a diagnostic run, most elongated first.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Input matrix, one object per row (.csv or .pgm).
    #[arg(long, short)]
    pub input: PathBuf,
    /// First CSV column holds object labels.
    #[arg(long)]
    pub labels: bool,
    #[arg(long, short, default_value = "sequencer-out")]
    pub out_dir: PathBuf,
    /// Comma-separated subset of L2, KL, EMD, energy.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<String>>,
    /// Deepest scale; defaults to segments of about 20 pixels.
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Shift each segment by its minimum before normalizing (allows negative data).
    #[arg(long)]
    pub offset: bool,
    /// Keep an ordering for every (metric, scale) view in the report.
    #[arg(long)]
    pub diagnostics: bool,
    /// Sequence a random subset, then insert the rest.
    #[arg(long)]
    pub approx: bool,
    #[arg(long, default_value_t = 100)]
    pub subset_size: usize,
    #[arg(long, default_value_t = 0.2)]
    pub anchor_fraction: f64,
    /// Defaults to one less than the initial anchor count.
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write each object's scaled sequence position.
    #[arg(long)]
    pub rank_map: bool,
    /// Also render the reordered matrix as a PGM image.
    #[arg(long)]
    pub pgm: bool,
    /// Also write the final spanning tree as an edge list.
    #[arg(long)]
    pub tree: bool,
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Drifting Gaussian pulses over a smooth random background, rows shuffled.
    Pulses {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// True sequence position of every output row.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        n_obj: usize,
        #[arg(long, default_value_t = 400)]
        n_pix: usize,
        #[arg(long, default_value_t = 4)]
        n_pulses: usize,
        /// Total pulse displacement across the sequence, in pixels.
        #[arg(long, default_value_t = 40.0)]
        drift: f64,
    },
    /// Shuffle the rows of an image or matrix.
    Shuffle {
        #[arg(long)]
        image: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; written as PGM when it ends in .pgm, CSV otherwise.
        #[arg(long)]
        out: PathBuf,
        /// Source row of every output row.
        #[arg(long)]
        perm: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct FomArgs {
    /// Directory of candidate CSV files (columns x, y); `<name>.label` may hold a label.
    #[arg(long)]
    pub candidates: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InsertArgs {
    /// The matrix the report was computed from.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long)]
    pub labels: bool,
    /// JSON report of the earlier run.
    #[arg(long)]
    pub report: PathBuf,
    /// CSV with the new object as its single row.
    #[arg(long)]
    pub object: PathBuf,
    /// Extended ordering; the new object gets the next free index.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OutlierArgs {
    /// Matrix whose rows are already in sequence order.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long)]
    pub labels: bool,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value_t = 5.0)]
    pub threshold: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also write the residual matrix.
    #[arg(long)]
    pub residuals: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
    /// Longest ordering prefix to print per view.
    #[arg(long, default_value_t = 20)]
    pub max_shown: usize,
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Synth(s) => cmd_synth(s),
        Command::Fom(a) => cmd_fom(&a),
        Command::Insert(a) => cmd_insert(&a),
        Command::Outliers(a) => cmd_outliers(&a),
        Command::Report(a) => cmd_report(&a),
    }
}

pub fn parse_metrics(names: &[String]) -> CliResult<Vec<Metric<f64>>> {
    names
        .iter()
        .map(|n| Ok(n.trim().parse::<MetricKind>()?.into()))
        .collect()
}

fn json_bytes(value: &impl Serialize) -> CliResult<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

fn read_report(path: &Path) -> CliResult<RunReport> {
    let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    let report: RunReport = serde_json::from_str(&text).map_err(|e| CliError::read(path, e))?;
    if report.schema != sequencer_core::report::SCHEMA_VERSION {
        return Err(CliError::Input(format!("{}: unsupported schema {}", path.display(), report.schema)));
    }
    Ok(report)
}

pub fn cmd_run(a: &RunArgs) -> CliResult<()> {
    let objects = read_matrix(&a.input, a.labels)?;
    let mut config = SequencerConfig64 {
        max_depth: a.max_depth,
        offset_mode: a.offset,
        diagnostics: a.diagnostics,
        ..SequencerConfig64::default()
    };
    if let Some(names) = &a.metrics {
        config.metrics = parse_metrics(names)?;
    }
    let approx = a.approx.then(|| {
        let mut c = ApproxConfig::new(a.subset_size, a.anchor_fraction, a.seed);
        if let Some(b) = a.batch_size {
            c.batch_size = b;
        }
        c
    });
    let result = match &approx {
        Some(c) => run_approx(&objects, c, &config)?,
        None => run(&objects, &config)?,
    };
    let report = RunReport::new(&result, &config, approx.as_ref(), objects.n_pix());
    let ordered = objects.reordered(&result.ordering)?;

    let dir = &a.out_dir;
    let mut out = Artifacts::default();
    out.add(dir.join("ordering.txt"), index_lines(&result.ordering));
    out.add(dir.join("report.json"), json_bytes(&report)?);
    out.add(dir.join("reordered.csv"), csv_matrix_bytes(&ordered)?);
    if a.pgm {
        out.add(dir.join("ordered.pgm"), pgm_bytes(&ordered));
    }
    if a.rank_map {
        let mut csv = String::from("object,rank\n");
        for (j, r) in rank_map(&result).iter().enumerate() {
            csv += &format!("{j},{r}\n");
        }
        out.add(dir.join("rank_map.csv"), csv.into_bytes());
    }
    if a.tree {
        out.add(dir.join("tree.txt"), result.combined_tree.to_edge_list().into_bytes());
    }
    let written: Vec<String> = out.paths().map(|p| p.display().to_string()).collect();
    out.commit()?;
    println!(
        "sequenced {} objects, elongation {:.4}, start {}",
        result.ordering.len(),
        result.eta_combined(),
        result.start_node
    );
    for w in written {
        println!("wrote {w}");
    }
    Ok(())
}

fn cmd_synth(cmd: SynthCommand) -> CliResult<()> {
    let mut out = Artifacts::default();
    match cmd {
        SynthCommand::Pulses { seed, out: path, truth, n_obj, n_pix, n_pulses, drift } => {
            let spec = PulseDatasetSpec { seed, n_obj, n_pix, n_pulses, drift, ..PulseDatasetSpec::default() };
            let data = generate_pulse_dataset::<f64>(&spec)?;
            out.add(&path, csv_matrix_bytes(&data.objects)?);
            if let Some(t) = truth {
                out.add(t, index_lines(&data.true_rank));
            }
        }
        SynthCommand::Shuffle { image, seed, out: path, perm } => {
            let set = read_matrix(&image, false)?;
            let (shuffled, p) = shuffle_rows(&set, seed)?;
            let is_pgm = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
            out.add(&path, if is_pgm { pgm_bytes(&shuffled) } else { csv_matrix_bytes(&shuffled)? });
            if let Some(pp) = perm {
                out.add(pp, index_lines(&p));
            }
        }
    }
    out.commit()
}

fn read_candidate(path: &Path) -> CliResult<EmbeddingCandidate<f64>> {
    let text = fs::read(path).map_err(|e| CliError::read(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_slice());
    let mut points = Vec::new();
    let mut dim = 0;
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::read(path, e))?;
        match rec.iter().map(str::parse::<f64>).collect::<Result<Vec<_>, _>>() {
            Ok(p) => {
                dim = p.len();
                points.extend(p);
            }
            Err(_) if line == 0 => {}
            Err(e) => return Err(CliError::read(path, format!("row {}: {e}", line + 1))),
        }
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let label = fs::read_to_string(path.with_extension("label"))
        .ok()
        .and_then(|l| l.lines().next().map(|s| s.trim().to_string()))
        .filter(|l| !l.is_empty())
        .unwrap_or_else(|| stem.to_string());
    EmbeddingCandidate::new(points, dim, label).map_err(|e| CliError::read(path, e))
}

fn cmd_fom(a: &FomArgs) -> CliResult<()> {
    let entries = fs::read_dir(&a.candidates).map_err(|e| CliError::read(&a.candidates, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    let candidates = files.iter().map(|p| read_candidate(p)).collect::<CliResult<Vec<_>>>()?;
    let sel = select_best(&candidates)?;
    let ranking: Vec<_> = sel
        .ranking
        .iter()
        .map(|(i, f)| {
            if let Some(w) = f.warning {
                eprintln!("warning: {}: {w}", candidates[*i].label);
            }
            json!({
                "label": candidates[*i].label,
                "file": files[*i].display().to_string(),
                "eta": f.eta,
                "eta_normalized": f.eta_normalized,
                "n": f.n,
                "warning": f.warning,
            })
        })
        .collect();
    for (r, row) in ranking.iter().enumerate() {
        println!("{:>3}  {:<24} {:.6}", r + 1, row["label"].as_str().unwrap_or(""), row["eta_normalized"]);
    }
    if let Some(path) = &a.report {
        let mut out = Artifacts::default();
        out.add(path, json_bytes(&json!({ "schema": 1, "best": sel.label, "ranking": ranking }))?);
        out.commit()?;
    }
    Ok(())
}

/// Pipeline settings recorded in a saved report.
pub fn config_from_report(report: &RunReport) -> CliResult<SequencerConfig64> {
    Ok(SequencerConfig64 {
        metrics: parse_metrics(&report.config.metrics)?,
        max_depth: Some(report.config.max_depth),
        offset_mode: report.config.offset_mode,
        ..SequencerConfig64::default()
    })
}

fn cmd_insert(a: &InsertArgs) -> CliResult<()> {
    let objects = read_matrix(&a.input, a.labels)?;
    let report = read_report(&a.report)?;
    let config = config_from_report(&report)?;
    let new = io::read_csv_matrix_rows(&a.object)?;
    let [row] = new.as_slice() else {
        return Err(CliError::Input(format!("{}: expected exactly one row", a.object.display())));
    };
    let (scales, segments) = report.view_weights::<f64>();
    let weights = ViewWeights { scales: &scales, segments: &segments };
    let ordering = insert_with_weights(&report.ordering, weights, &objects, row, &config)?;
    let mut out = Artifacts::default();
    out.add(&a.out, index_lines(&ordering));
    out.commit()?;
    let pos = ordering.iter().position(|&j| j == objects.n_obj()).unwrap_or_default();
    println!("inserted object {} at position {pos}", objects.n_obj());
    Ok(())
}

fn cmd_outliers(a: &OutlierArgs) -> CliResult<()> {
    let ordered: ObjectSet64 = read_matrix(&a.input, a.labels)?;
    let smoothed = smooth_along_sequence(&ordered, a.window)?;
    let mut rep = compute_residuals(&ordered, &smoothed)?;
    let flagged = flag_outliers(&mut rep, a.threshold)?;
    let name = |j: usize| ordered.labels().map_or_else(|| j.to_string(), |l| l[j].clone());
    for &j in &flagged {
        println!("flagged row {} score {:.6}", name(j), rep.scores[j]);
    }
    let mut out = Artifacts::default();
    if let Some(path) = &a.report {
        let flags: Vec<_> = rep
            .flagged
            .iter()
            .map(|&(j, s)| json!({ "row": j, "label": name(j), "score": s }))
            .collect();
        let doc = json!({
            "schema": 1,
            "window": a.window,
            "threshold": a.threshold,
            "scores": rep.scores,
            "flagged": flags,
            "end_position_correlation": rep.end_position_correlation(),
        });
        out.add(path, json_bytes(&doc)?);
    }
    if let Some(path) = &a.residuals {
        let res = ObjectSet64::from_flat(rep.n_obj, rep.n_pix, rep.residuals.clone(), None)?;
        out.add(path, csv_matrix_bytes(&res)?);
    }
    out.commit()
}

fn cmd_report(a: &ReportArgs) -> CliResult<()> {
    let report = read_report(&a.report)?;
    let rows = report.rank_views(a.top_k)?;
    print!("{}", format_view_table(&rows, a.max_shown));
    Ok(())
}
