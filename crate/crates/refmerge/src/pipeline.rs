//! Repositories in, feature rows, rule tables and figure groups out.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use refmerge_core::effort::{EffortMode, EffortResult};
use refmerge_core::graph::{BranchAttribution, MergeScenario, Validity};
use refmerge_core::refactoring::{
    count_branch_refactorings, DetectorRunLog, DetectorStatus, ParsedRecords, RefactoringRecord, RejectedLine,
};
use refmerge_core::report::{emit_figure_groups, CellStatus, FigureCell, FigureGroupId};
use refmerge_core::rules::{mine_rules, rule_direction, Dataset, Direction, MergeFeatureRow, RuleTable, Scheme};
use refmerge_core::Sha;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{hex_digest, Config, EffortConfig, MiningConfig};
use crate::detector::{Detector, DetectorOutput};
use crate::error::{Error, Result, ResultExt};
use crate::git::History;
use crate::store::{BranchLink, MergeRow, Store, StoreBatch, StoreCounts};

/// Where refactoring records come from.
#[derive(Clone, Copy)]
pub enum RecordsSource<'a> {
    None,
    Parsed(&'a ParsedRecords),
    Detect { detector: &'a Detector, workers: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityTallies {
    pub enumerated: u64,
    pub valid: u64,
    pub no_fast_forward: u64,
    pub octopus: u64,
    pub no_common_ancestor: u64,
    /// Valid merges whose base was picked among several candidates.
    pub criss_cross: u64,
}

impl ValidityTallies {
    pub fn record(&mut self, s: &MergeScenario) {
        self.enumerated += 1;
        match s.validity {
            Validity::Valid => self.valid += 1,
            Validity::NoFastForward => self.no_fast_forward += 1,
            Validity::Octopus => self.octopus += 1,
            Validity::NoCommonAncestor => self.no_common_ancestor += 1,
        }
        if s.validity == Validity::Valid && s.criss_cross {
            self.criss_cross += 1;
        }
    }

    pub fn merge(&mut self, o: &ValidityTallies) {
        self.enumerated += o.enumerated;
        self.valid += o.valid;
        self.no_fast_forward += o.no_fast_forward;
        self.octopus += o.octopus;
        self.no_common_ancestor += o.no_common_ancestor;
        self.criss_cross += o.criss_cross;
    }

    pub fn excluded(&self) -> u64 {
        self.no_fast_forward + self.octopus + self.no_common_ancestor
    }

    /// Every enumerated merge falls in exactly one class.
    pub fn is_conserved(&self) -> bool {
        self.valid + self.excluded() == self.enumerated
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorTallies {
    pub runs: u64,
    pub ok: u64,
    pub timeout: u64,
    pub detector_error: u64,
    pub cached: u64,
}

impl DetectorTallies {
    fn record(&mut self, log: &DetectorRunLog) {
        self.runs += 1;
        match log.status {
            DetectorStatus::Ok => self.ok += 1,
            DetectorStatus::Timeout => self.timeout += 1,
            DetectorStatus::DetectorError => self.detector_error += 1,
        }
    }

    fn merge(&mut self, o: &DetectorTallies) {
        self.runs += o.runs;
        self.ok += o.ok;
        self.timeout += o.timeout;
        self.detector_error += o.detector_error;
        self.cached += o.cached;
    }
}

/// Content-addressed stage outputs under one directory.
#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Cache {
        Cache { dir: dir.into() }
    }

    fn path(&self, stage: &str, key: &str) -> PathBuf {
        self.dir.join(stage).join(format!("{}.json", hex_digest(key.as_bytes())))
    }

    pub fn get<T: DeserializeOwned>(&self, stage: &str, key: &str) -> Option<T> {
        let bytes = std::fs::read(self.path(stage, key)).ok()?;
        match serde_json::from_slice(&bytes) {
            Ok(v) => Some(v),
            Err(e) => {
                warn!("ignoring unreadable cache entry for {stage}: {e}");
                None
            }
        }
    }

    pub fn put<T: Serialize>(&self, stage: &str, key: &str, value: &T) -> Result<()> {
        let path = self.path(stage, key);
        let dir = path.parent().expect("cache path has a parent");
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_vec(value).expect("cache value serializes"))
            .map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }
}

/// Everything learned about one repository.
#[derive(Debug, Clone)]
pub struct RepoAnalysis {
    pub project: String,
    pub path: PathBuf,
    pub head: Sha,
    pub scenarios: Vec<MergeScenario>,
    pub effort: Vec<EffortResult>,
    pub rows: Vec<MergeFeatureRow>,
    pub validity: ValidityTallies,
    /// Records whose commit belongs to this history.
    pub records_in_history: u64,
    pub detector: DetectorTallies,
    pub detector_logs: Vec<DetectorRunLog>,
    pub detector_rejected: u64,
    pub skipped_files: u64,
    pub batch: StoreBatch,
}

fn effort_key(project: &str, merge: &Sha, cfg: &EffortConfig) -> String {
    format!("effort\0{project}\0{merge}\0{}", serde_json::to_string(cfg).expect("config serializes"))
}

fn detector_key(detector: &Detector, commit: &Sha) -> String {
    format!("detector\0{}\0{}\0{commit}", detector.identity(), detector.timeout().as_secs())
}

fn effort_stage(
    history: &History,
    valid: &[&MergeScenario],
    cfg: &EffortConfig,
    cache: Option<&Cache>,
) -> Result<(Vec<EffortResult>, u64)> {
    let mut out = Vec::with_capacity(valid.len());
    let mut skipped = 0;
    for s in valid {
        let key = effort_key(history.project(), &s.merge.sha, cfg);
        if let Some(hit) = cache.and_then(|c| c.get::<EffortResult>("effort", &key)) {
            out.push(hit);
            continue;
        }
        let (breakdown, skipped_files) = history
            .effort_breakdown(s, cfg.diff_options())
            .context(|| format!("{} merge {}", history.project(), s.merge.sha))?;
        for f in &skipped_files {
            info!("{}: skipped {} ({:?}) around merge {}", history.project(), f.path, f.reason, s.merge.sha.short());
        }
        skipped += skipped_files.len() as u64;
        let result = EffortResult::from_breakdown(history.project(), s.merge.sha, &breakdown, cfg.mode);
        if let Some(c) = cache {
            c.put("effort", &key, &result)?;
        }
        out.push(result);
    }
    Ok((out, skipped))
}

struct RecordsOutcome {
    records: Vec<RefactoringRecord>,
    tallies: DetectorTallies,
    logs: Vec<DetectorRunLog>,
    rejected: u64,
}

fn records_stage(
    history: &History,
    needed: &BTreeSet<Sha>,
    source: RecordsSource<'_>,
    cache: Option<&Cache>,
) -> Result<RecordsOutcome> {
    let mut outcome =
        RecordsOutcome { records: Vec::new(), tallies: DetectorTallies::default(), logs: Vec::new(), rejected: 0 };
    match source {
        RecordsSource::None => {}
        RecordsSource::Parsed(parsed) => {
            outcome.records =
                parsed.records.iter().filter(|r| history.graph().get(&r.commit).is_some()).cloned().collect();
        }
        RecordsSource::Detect { detector, workers } => {
            let mut results: BTreeMap<Sha, DetectorOutput> = BTreeMap::new();
            let mut missing = Vec::new();
            for &commit in needed {
                match cache.and_then(|c| c.get::<CachedDetection>("detector", &detector_key(detector, &commit))) {
                    Some(hit) => {
                        outcome.tallies.cached += 1;
                        results.insert(commit, DetectorOutput { parsed: hit.parsed, log: hit.log });
                    }
                    None => missing.push(commit),
                }
            }
            for out in detector.run_many(history.path(), &missing, workers)? {
                if let Some(c) = cache {
                    let entry = CachedDetection { parsed: out.parsed.clone(), log: out.log.clone() };
                    c.put("detector", &detector_key(detector, &out.log.commit), &entry)?;
                }
                results.insert(out.log.commit, out);
            }
            for (commit, out) in results {
                outcome.tallies.record(&out.log);
                outcome.rejected += out.parsed.rejected.len() as u64;
                // a detector may report refactorings of other commits; keep
                // only the ones it was asked about
                outcome.records.extend(out.parsed.records.into_iter().filter(|r| r.commit == commit));
                outcome.logs.push(out.log);
            }
        }
    }
    Ok(outcome)
}

#[derive(Serialize, Deserialize)]
struct CachedDetection {
    parsed: ParsedRecords,
    log: DetectorRunLog,
}

/// Walks one repository through classification, effort, refactoring
/// attribution and row construction.
pub fn analyze_repo(
    path: &Path,
    source: RecordsSource<'_>,
    cfg: &EffortConfig,
    cache: Option<&Cache>,
) -> Result<RepoAnalysis> {
    let history = History::open(path)?;
    let project = history.project().to_string();
    let scenarios = history.enumerate_merges()?;
    let mut validity = ValidityTallies::default();
    scenarios.iter().for_each(|s| validity.record(s));

    let valid: Vec<&MergeScenario> = scenarios.iter().filter(|s| s.validity == Validity::Valid).collect();
    let attributions: Vec<BranchAttribution> = valid
        .iter()
        .map(|s| history.graph().attribute_branch_commits(s).context(|| format!("{project} merge {}", s.merge.sha)))
        .collect::<Result<_>>()?;
    let (effort, skipped_files) = effort_stage(&history, &valid, cfg, cache)?;

    let needed: BTreeSet<Sha> =
        attributions.iter().flat_map(|a| a.b1_commits.iter().chain(&a.b2_commits).copied()).collect();
    let records = records_stage(&history, &needed, source, cache)?;
    let mut by_commit: BTreeMap<Sha, Vec<&RefactoringRecord>> = BTreeMap::new();
    for r in &records.records {
        by_commit.entry(r.commit).or_default().push(r);
    }

    let mut rows = Vec::with_capacity(valid.len());
    let mut links = Vec::new();
    for (attr, e) in attributions.iter().zip(&effort) {
        let merge_sha = attr.scenario.merge.sha;
        let mut relevant = Vec::new();
        for (branch, set) in [(1u8, &attr.b1_commits), (2u8, &attr.b2_commits)] {
            for c in set {
                if let Some(rs) = by_commit.get(c) {
                    relevant.extend(rs.iter().copied());
                    links.push(BranchLink { merge_sha, commit_sha: *c, branch });
                }
            }
        }
        let counts = count_branch_refactorings(attr, relevant);
        let row = MergeFeatureRow::new(&project, merge_sha, counts.b1, counts.b2, e.effort);
        row.check()?;
        rows.push(row);
    }

    let effort_by_sha: BTreeMap<Sha, u64> = effort.iter().map(|e| (e.merge_sha, e.effort)).collect();
    let batch = StoreBatch {
        commits: history.graph().commits().cloned().collect(),
        merges: scenarios
            .iter()
            .map(|s| MergeRow::from_scenario(s, effort_by_sha.get(&s.merge.sha).map(|&e| (e, cfg.mode))))
            .collect(),
        refactorings: records.records.clone(),
        branch_links: links,
    };
    info!("{project}: {} merges, {} valid, {} rows", validity.enumerated, validity.valid, rows.len());
    Ok(RepoAnalysis {
        project,
        path: path.to_path_buf(),
        head: history.head(),
        scenarios,
        effort,
        rows,
        validity,
        records_in_history: records.records.len() as u64,
        detector: records.tallies,
        detector_logs: records.logs,
        detector_rejected: records.rejected,
        skipped_files,
        batch,
    })
}

/// One row per valid merge; excluded merges are only tallied.
pub fn build_feature_rows(
    path: &Path,
    source: RecordsSource<'_>,
    mode: EffortMode,
) -> Result<(Vec<MergeFeatureRow>, ValidityTallies)> {
    let cfg = EffortConfig { mode, ..EffortConfig::default() };
    let a = analyze_repo(path, source, &cfg, None)?;
    Ok((a.rows, a.validity))
}

/// Reads a feature-row file, one JSON object per line.
pub fn read_feature_rows(path: &Path) -> Result<Vec<MergeFeatureRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let row: MergeFeatureRow =
                serde_json::from_str(l).map_err(|e| Error::Input(format!("{} line {}: {e}", path.display(), i + 1)))?;
            row.check().map_err(|e| Error::Input(format!("{} line {}: {e}", path.display(), i + 1)))?;
            Ok(row)
        })
        .collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, &item).expect("record serializes");
        buf.push(b'\n');
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut buf = serde_json::to_vec_pretty(value).expect("value serializes");
    buf.push(b'\n');
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::io(path, std::io::Error::other(e.to_string()))
}

pub fn write_rules_csv(path: &Path, table: &RuleTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    w.write_record(["antecedent", "consequent", "t", "t_x", "t_y", "t_xy", "support", "confidence", "lift"])
        .map_err(csv_error(path))?;
    for r in &table.rules {
        w.write_record([
            refmerge_core::rules::format_conditions(&r.antecedent),
            refmerge_core::rules::format_conditions(&r.consequent),
            r.t.to_string(),
            r.t_x.to_string(),
            r.t_y.to_string(),
            r.t_xy.to_string(),
            r.support().to_string(),
            r.confidence().to_string(),
            r.lift().to_string(),
        ])
        .map_err(csv_error(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// A figure cell plus the confidence-based direction of its rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    #[serde(flatten)]
    pub cell: FigureCell,
    pub direction: Option<Direction>,
}

pub fn write_figures(dir: &Path, rows: &[FigureRow]) -> Result<()> {
    let path = dir.join("figures.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_error(&path))?;
    w.write_record([
        "group",
        "antecedent",
        "consequent",
        "status",
        "t",
        "t_x",
        "t_y",
        "t_xy",
        "support",
        "confidence",
        "lift",
        "direction",
    ])
    .map_err(csv_error(&path))?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in rows {
        let c = &r.cell;
        w.write_record([
            c.group.as_str().to_string(),
            c.antecedent.clone(),
            c.consequent.clone(),
            match c.status {
                CellStatus::Ok => "ok".into(),
                CellStatus::BelowThreshold => "below-threshold".into(),
            },
            c.t.to_string(),
            opt(c.t_x.map(|v| v.to_string())),
            opt(c.t_y.map(|v| v.to_string())),
            opt(c.t_xy.map(|v| v.to_string())),
            opt(c.support.map(|v| v.to_string())),
            opt(c.confidence.map(|v| v.to_string())),
            opt(c.lift.map(|v| v.to_string())),
            opt(r.direction.map(|d| {
                serde_json::to_value(d).expect("direction serializes").as_str().unwrap_or_default().to_string()
            })),
        ])
        .map_err(csv_error(&path))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_json(&dir.join("figures.json"), &rows)
}

/// Rule tables for the schemes behind `groups`, and the figure rows.
pub struct Mined {
    pub tables: BTreeMap<String, RuleTable>,
    pub figures: Vec<FigureRow>,
}

pub fn mine_groups(rows: &[MergeFeatureRow], groups: &[FigureGroupId], mining: &MiningConfig) -> Result<Mined> {
    let mut schemes: Vec<Scheme> = Vec::new();
    for g in groups {
        if !schemes.contains(&g.scheme()) {
            schemes.push(g.scheme());
        }
    }
    let mut tables = BTreeMap::new();
    let mut figures = Vec::new();
    for scheme in schemes {
        let dataset = Dataset::from_feature_rows(rows, scheme)?;
        let table = mine_rules(&dataset, mining.min_support, mining.min_confidence)?;
        let specs: Vec<_> = groups.iter().filter(|g| g.scheme() == scheme).map(|g| g.spec()).collect();
        for cell in emit_figure_groups(&table, &specs)? {
            let direction = match cell.status {
                CellStatus::Ok => {
                    let spec = specs.iter().find(|s| s.id == cell.group).expect("cell of a requested group");
                    let x = spec
                        .antecedents
                        .iter()
                        .find(|x| refmerge_core::rules::format_conditions(x) == cell.antecedent)
                        .expect("cell antecedent");
                    let y = spec
                        .consequents
                        .iter()
                        .find(|y| refmerge_core::rules::format_conditions(y) == cell.consequent)
                        .expect("cell consequent");
                    match (table.find(x, y), table.find(y, x)) {
                        (Some(f), Some(b)) => Some(rule_direction(f, b, mining.direction_ratio)?),
                        _ => None,
                    }
                }
                CellStatus::BelowThreshold => None,
            };
            figures.push(FigureRow { cell, direction });
        }
        tables.insert(scheme.name(), table);
    }
    // groups in canonical order regardless of scheme grouping
    figures.sort_by_key(|f| FigureGroupId::ALL.iter().position(|g| *g == f.cell.group));
    Ok(Mined { tables, figures })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoIdentity {
    pub project: String,
    pub path: String,
    pub head: Sha,
    pub validity: ValidityTallies,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordTallies {
    pub accepted: u64,
    pub rejected: u64,
    pub out_of_taxonomy: u64,
    pub in_analyzed_history: u64,
}

/// Inputs, thresholds and tallies of one `mine` run. Contains no timestamps
/// or output locations, so two runs over the same inputs write the same
/// manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub config: Config,
    pub repos: Vec<RepoIdentity>,
    pub records_source: String,
    pub detector: Option<String>,
    pub validity: ValidityTallies,
    pub records: RecordTallies,
    pub detector_runs: DetectorTallies,
    pub skipped_files: u64,
    pub feature_rows: u64,
    pub rows_with_effort: u64,
    pub rules: BTreeMap<String, u64>,
    pub figure_cells: u64,
    pub below_threshold_cells: u64,
    pub store: StoreCounts,
    pub notices: Vec<String>,
}

pub enum RecordsInput {
    None,
    File(PathBuf),
    Detect,
}

pub struct MineRequest {
    pub repos: Vec<PathBuf>,
    pub records: RecordsInput,
    pub config: Config,
    pub store: PathBuf,
    pub out: PathBuf,
}

/// The full `mine` stage chain. Results land in `out`; stage caches in
/// `out/cache`.
pub fn run_mine(req: &MineRequest) -> Result<RunManifest> {
    let cfg = &req.config;
    cfg.validate()?;
    std::fs::create_dir_all(&req.out).map_err(|e| Error::io(&req.out, e))?;
    let cache = Cache::new(req.out.join("cache"));

    let mut parsed_file = None;
    let mut records_source = "none".to_string();
    let mut detector = None;
    match &req.records {
        RecordsInput::None => {}
        RecordsInput::File(path) => {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            records_source = format!("file {} sha256:{}", path.display(), hex_digest(&bytes));
            let parsed = refmerge_core::refactoring::parse_refactoring_records(&bytes)
                .context(|| format!("reading {}", path.display()))?;
            parsed_file = Some(parsed);
        }
        RecordsInput::Detect => {
            let d = Detector::from_template(
                &cfg.detector.command,
                std::time::Duration::from_secs(cfg.detector.timeout_secs),
            )?;
            records_source = "detector".into();
            detector = Some(d);
        }
    }
    let source = match (&parsed_file, &detector) {
        (Some(p), _) => RecordsSource::Parsed(p),
        (_, Some(d)) => RecordsSource::Detect { detector: d, workers: cfg.detector.workers },
        _ => RecordsSource::None,
    };

    let mut analyses = Vec::new();
    for repo in &req.repos {
        analyses.push(analyze_repo(repo, source, &cfg.effort, Some(&cache))?);
    }

    let mut store = Store::open(&req.store)?;
    let mut store_counts = StoreCounts::default();
    for a in &analyses {
        store_counts = store.persist(&a.batch).context(|| format!("storing {}", a.project))?;
    }

    let mut rows: Vec<MergeFeatureRow> = analyses.iter().flat_map(|a| a.rows.iter().cloned()).collect();
    rows.sort_by(|a, b| (&a.project, a.merge_sha).cmp(&(&b.project, b.merge_sha)));
    let mut validity = ValidityTallies::default();
    let mut detector_runs = DetectorTallies::default();
    let mut records = RecordTallies::default();
    if let Some(p) = &parsed_file {
        records.accepted = p.records.len() as u64;
        records.rejected = p.rejected.len() as u64;
        records.out_of_taxonomy = p.out_of_taxonomy() as u64;
    }
    for a in &analyses {
        validity.merge(&a.validity);
        detector_runs.merge(&a.detector);
        records.in_analyzed_history += a.records_in_history;
        if parsed_file.is_none() {
            records.accepted += a.records_in_history;
            records.rejected += a.detector_rejected;
        }
    }
    debug_assert!(validity.is_conserved());

    let out = &req.out;
    write_jsonl(&out.join("scenarios.jsonl"), analyses.iter().flat_map(|a| &a.scenarios))?;
    write_jsonl(&out.join("effort.jsonl"), analyses.iter().flat_map(|a| &a.effort))?;
    write_jsonl(&out.join("feature_rows.jsonl"), &rows)?;
    if let Some(p) = &parsed_file {
        write_jsonl::<&RejectedLine>(&out.join("rejected_records.jsonl"), &p.rejected)?;
    }
    if detector.is_some() {
        write_jsonl(&out.join("detector_runs.jsonl"), analyses.iter().flat_map(|a| &a.detector_logs))?;
    }

    let mut notices = Vec::new();
    let mut rules = BTreeMap::new();
    let mut figures = Vec::new();
    if rows.is_empty() {
        let notice = "no valid merges: rule mining skipped".to_string();
        warn!("{notice}");
        notices.push(notice);
    } else {
        let mined = mine_groups(&rows, &FigureGroupId::ALL, &cfg.mining)?;
        for (name, table) in &mined.tables {
            write_rules_csv(&out.join(format!("rules-{name}.csv")), table)?;
            rules.insert(name.clone(), table.rules.len() as u64);
        }
        write_figures(out, &mined.figures)?;
        figures = mined.figures;
    }

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config_hash: cfg.hash(),
        config: cfg.clone(),
        repos: analyses
            .iter()
            .map(|a| RepoIdentity {
                project: a.project.clone(),
                path: a.path.display().to_string(),
                head: a.head,
                validity: a.validity,
            })
            .collect(),
        records_source,
        detector: detector.as_ref().map(|d| d.identity().to_string()),
        validity,
        records,
        detector_runs,
        skipped_files: analyses.iter().map(|a| a.skipped_files).sum(),
        feature_rows: rows.len() as u64,
        rows_with_effort: rows.iter().filter(|r| r.effort > 0).count() as u64,
        rules,
        figure_cells: figures.len() as u64,
        below_threshold_cells: figures.iter().filter(|f| f.cell.status == CellStatus::BelowThreshold).count() as u64,
        store: store_counts,
        notices,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub feature_rows: u64,
    pub groups: Vec<FigureGroupId>,
    pub rules: BTreeMap<String, u64>,
    pub figure_cells: u64,
    pub below_threshold_cells: u64,
}

/// Figure groups from the feature rows held in a store.
pub fn run_report(store: &Path, groups: &[FigureGroupId], mining: &MiningConfig, out: &Path) -> Result<ReportSummary> {
    if !store.is_file() {
        return Err(Error::Input(format!("store {} does not exist", store.display())));
    }
    let rows = Store::open(store)?.feature_rows()?;
    if rows.is_empty() {
        return Err(Error::Input(format!("store {} holds no valid merges", store.display())));
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mined = mine_groups(&rows, groups, mining)?;
    let mut rules = BTreeMap::new();
    for (name, table) in &mined.tables {
        write_rules_csv(&out.join(format!("rules-{name}.csv")), table)?;
        rules.insert(name.clone(), table.rules.len() as u64);
    }
    write_figures(out, &mined.figures)?;
    let summary = ReportSummary {
        feature_rows: rows.len() as u64,
        groups: groups.to_vec(),
        rules,
        figure_cells: mined.figures.len() as u64,
        below_threshold_cells: mined.figures.iter().filter(|f| f.cell.status == CellStatus::BelowThreshold).count()
            as u64,
    };
    write_json(&out.join("report.json"), &summary)?;
    Ok(summary)
}

/// Prints a one-line summary of each table to `w`.
pub fn summarize(w: &mut impl Write, manifest: &RunManifest) -> std::io::Result<()> {
    let v = &manifest.validity;
    writeln!(
        w,
        "{} merges: {} valid, {} no-fast-forward, {} octopus, {} without common ancestor",
        v.enumerated, v.valid, v.no_fast_forward, v.octopus, v.no_common_ancestor
    )?;
    writeln!(
        w,
        "{} feature rows ({} with effort), rules: {}",
        manifest.feature_rows,
        manifest.rows_with_effort,
        manifest.rules.iter().map(|(k, n)| format!("{k} {n}")).collect::<Vec<_>>().join(", ")
    )
}
