use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use refmerge::config::Config;
use refmerge::corpus::{run_corpus, CorpusRequest};
use refmerge::detector::Detector;
use refmerge::error::{Error, Result};
use refmerge::git::History;
use refmerge::pipeline::{self, MineRequest, RecordsInput, RecordsSource};
use refmerge_core::effort::EffortMode;
use refmerge_core::graph::Validity;
use refmerge_core::refactoring::parse_refactoring_records;
use refmerge_core::report::select_groups;
use refmerge_core::rules::{mine_rules, Binning, Dataset, Scheme};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "refmerge", version, about = "Merge effort, refactorings and the rules between them")]
struct Cli {
    /// TOML file with [corpus], [detector], [effort] and [mining] sections.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// More logging (repeatable). RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select a study corpus from a repository snapshot.
    Corpus {
        /// Directory holding repos.jsonl or graphql.jsonl, and optionally valid_merges.json.
        #[arg(long, value_name = "DIR")]
        fixtures: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Query GitHub (token in GH_TOKEN) and record the answers into the fixture directory.
        #[arg(long)]
        fetch: bool,
        /// Local clones named owner__name, used to count valid merges.
        #[arg(long, value_name = "DIR")]
        clones: Option<PathBuf>,
    },
    /// Merge effort of every valid merge in a repository.
    Effort {
        #[arg(long, value_name = "PATH")]
        repo: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[command(flatten)]
        diff: DiffArgs,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Refactorings per branch of every valid merge.
    Refactorings {
        #[arg(long, value_name = "PATH")]
        repo: PathBuf,
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Mine association rules from a feature-row file.
    Rules {
        #[arg(long, value_name = "FILE")]
        rows: PathBuf,
        /// Discretization of b1, b2 and refactorings.
        #[arg(long, value_enum)]
        scheme: Bins,
        /// Discretization of effort.
        #[arg(long, value_enum, default_value = "binary")]
        effort_scheme: Bins,
        #[arg(long)]
        min_support: Option<f64>,
        #[arg(long)]
        min_confidence: Option<f64>,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Run every stage on one or more repositories.
    Mine {
        /// Repeat to pool several repositories.
        #[arg(long = "repo", value_name = "PATH", required = true)]
        repos: Vec<PathBuf>,
        #[command(flatten)]
        source: OptionalSourceArgs,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[command(flatten)]
        diff: DiffArgs,
        #[arg(long, value_name = "FILE")]
        store: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Figure groups from a store written by `mine`.
    Report {
        #[arg(long, value_name = "FILE")]
        store: PathBuf,
        /// all, RQ1, RQ2, RQ3 or a single group such as RQ2-parallel.
        #[arg(long, default_value = "all")]
        figures: String,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Write a small scripted corpus for trying the tool out.
    #[command(hide = true)]
    DemoCorpus {
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    MergeMinusBranches,
    Symmetric,
}

impl From<Mode> for EffortMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::MergeMinusBranches => EffortMode::MergeMinusBranches,
            Mode::Symmetric => EffortMode::Symmetric,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Bins {
    Binary,
    Magnitude,
}

impl From<Bins> for Binning {
    fn from(b: Bins) -> Self {
        match b {
            Bins::Binary => Binning::Binary,
            Bins::Magnitude => Binning::Magnitude,
        }
    }
}

#[derive(Args)]
struct DiffArgs {
    /// Leave file paths out of action identity.
    #[arg(long)]
    ignore_paths: bool,
    #[arg(long, value_name = "BYTES")]
    max_file_bytes: Option<u64>,
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false, args = ["records", "detect"])]
struct SourceArgs {
    /// Detector output, one JSON object per line.
    #[arg(long, value_name = "FILE")]
    records: Option<PathBuf>,
    /// Run the configured detector on every branch commit.
    #[arg(long)]
    detect: bool,
    #[command(flatten)]
    detector: DetectorArgs,
}

#[derive(Args)]
#[group(id = "optional_source", multiple = false, args = ["records", "detect"])]
struct OptionalSourceArgs {
    #[arg(long, value_name = "FILE")]
    records: Option<PathBuf>,
    #[arg(long)]
    detect: bool,
    #[command(flatten)]
    detector: DetectorArgs,
}

#[derive(Args)]
struct DetectorArgs {
    #[arg(long, value_name = "SECS")]
    timeout_secs: Option<u64>,
    /// Overrides detector.command, e.g. "RefactoringMiner -c {repo} {commit} -json".
    #[arg(long, value_name = "TEMPLATE")]
    detector_cmd: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
}

impl DetectorArgs {
    fn apply(&self, config: &mut Config) {
        if let Some(t) = self.timeout_secs {
            config.detector.timeout_secs = t;
        }
        if let Some(c) = &self.detector_cmd {
            config.detector.command = c.clone();
        }
        if let Some(w) = self.workers {
            config.detector.workers = w;
        }
    }
}

impl DiffArgs {
    fn apply(&self, config: &mut Config) {
        config.effort.ignore_paths |= self.ignore_paths;
        if let Some(m) = self.max_file_bytes {
            config.effort.max_file_bytes = m;
        }
    }
}

#[derive(Serialize)]
struct BranchCountRow<'a> {
    project: &'a str,
    merge_sha: refmerge_core::Sha,
    b1: u64,
    b2: u64,
    total: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = Config::load_or_default(cli.config.as_deref())?;
    match cli.command {
        Command::Corpus { fixtures, out, fetch, clones } => {
            let report = run_corpus(&CorpusRequest {
                config: &config.corpus,
                fixtures: &fixtures,
                fetch,
                clones: clones.as_deref(),
            })?;
            pipeline::write_json(&out, &report)?;
            eprintln!(
                "{} candidates, {} after search, {} after metadata, {} kept",
                report.candidates,
                report.after_search,
                report.after_metadata,
                report.kept.len()
            );
        }
        Command::Effort { repo, mode, diff, out } => {
            if let Some(m) = mode {
                config.effort.mode = m.into();
            }
            diff.apply(&mut config);
            config.validate()?;
            let history = History::open(&repo)?;
            let scenarios = history.enumerate_merges()?;
            let mut tallies = pipeline::ValidityTallies::default();
            let mut results = Vec::new();
            for s in &scenarios {
                tallies.record(s);
                if s.validity == Validity::Valid {
                    results.push(history.merge_effort(s, config.effort.mode, config.effort.diff_options())?);
                }
            }
            pipeline::write_jsonl(&out, &results)?;
            eprintln!("{} merges: {} valid, {} excluded", tallies.enumerated, tallies.valid, tallies.excluded());
        }
        Command::Refactorings { repo, source, out } => {
            source.detector.apply(&mut config);
            config.validate()?;
            let parsed;
            let detector;
            let src = if let Some(path) = &source.records {
                let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
                parsed = parse_refactoring_records(&bytes)?;
                report_rejections(&parsed);
                RecordsSource::Parsed(&parsed)
            } else {
                detector = make_detector(&config)?;
                RecordsSource::Detect { detector: &detector, workers: config.detector.workers }
            };
            let analysis = pipeline::analyze_repo(&repo, src, &config.effort, None)?;
            let rows: Vec<_> = analysis
                .rows
                .iter()
                .map(|r| BranchCountRow {
                    project: &r.project,
                    merge_sha: r.merge_sha,
                    b1: r.b1,
                    b2: r.b2,
                    total: r.refactorings,
                })
                .collect();
            pipeline::write_jsonl(&out, &rows)?;
            if !analysis.detector_logs.is_empty() {
                let d = &analysis.detector;
                eprintln!(
                    "detector: {} runs, {} ok, {} timed out, {} failed",
                    d.runs, d.ok, d.timeout, d.detector_error
                );
            }
        }
        Command::Rules { rows, scheme, effort_scheme, min_support, min_confidence, out } => {
            if let Some(s) = min_support {
                config.mining.min_support = s;
            }
            if let Some(c) = min_confidence {
                config.mining.min_confidence = c;
            }
            config.validate()?;
            let rows = pipeline::read_feature_rows(&rows)?;
            if rows.is_empty() {
                return Err(Error::Input("no feature rows to mine".into()));
            }
            let scheme = Scheme { refactorings: scheme.into(), effort: effort_scheme.into() };
            let dataset = Dataset::from_feature_rows(&rows, scheme)?;
            let table = mine_rules(&dataset, config.mining.min_support, config.mining.min_confidence)?;
            pipeline::write_rules_csv(&out, &table)?;
            eprintln!("{} rules from {} rows", table.rules.len(), rows.len());
        }
        Command::Mine { repos, source, mode, diff, store, out } => {
            if let Some(m) = mode {
                config.effort.mode = m.into();
            }
            diff.apply(&mut config);
            source.detector.apply(&mut config);
            let records = match (source.records, source.detect) {
                (Some(path), _) => RecordsInput::File(path),
                (None, true) => RecordsInput::Detect,
                (None, false) => RecordsInput::None,
            };
            let manifest = pipeline::run_mine(&MineRequest { repos, records, config, store, out })?;
            pipeline::summarize(&mut std::io::stderr(), &manifest).map_err(|e| Error::io("stderr", e))?;
        }
        Command::Report { store, figures, out } => {
            config.validate()?;
            let groups = select_groups(&figures)?;
            let summary = pipeline::run_report(&store, &groups, &config.mining, &out)?;
            eprintln!(
                "{} cells ({} below threshold) from {} rows",
                summary.figure_cells, summary.below_threshold_cells, summary.feature_rows
            );
        }
        Command::DemoCorpus { out } => {
            let (repos, records) = refmerge::fixture::build_demo_corpus(&out)?;
            for r in repos {
                println!("{}", r.display());
            }
            println!("{}", records.display());
        }
    }
    Ok(())
}

fn make_detector(config: &Config) -> Result<Detector> {
    Detector::from_template(&config.detector.command, Duration::from_secs(config.detector.timeout_secs))
}

fn report_rejections(parsed: &refmerge_core::refactoring::ParsedRecords) {
    if parsed.rejected.is_empty() {
        return;
    }
    eprintln!(
        "{} records accepted, {} rejected ({} outside the studied types)",
        parsed.records.len(),
        parsed.rejected.len(),
        parsed.out_of_taxonomy()
    );
    for r in &parsed.rejected {
        log::info!("rejected line {}: {:?}", r.line, r.reason);
    }
}
