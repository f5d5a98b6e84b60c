//! Fact ingestion (native fact files and mapped CSV), JSON and TSV timeline
//! output, and the `run` pipeline behind the command-line tool.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::DateTime;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::lang::{parse_facts, parse_tes, SpecError, Tes};
use crate::model::{Dataset, End, EventFact, EventSet, Fact, Interval, Name, PredKind, Timepoint, Value};
use crate::repair::{recognize_timeline, timeline, Mode, Timeline, Timelines, DEFAULT_CAP};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{source}")]
    Spec { path: PathBuf, source: SpecError },
    #[error("{path}: mapping error: {message}")]
    Mapping { path: PathBuf, message: String },
    #[error("{path}: row {row}: no column {column}")]
    MissingColumn {
        path: PathBuf,
        row: usize,
        column: String,
    },
    #[error("{path}: row {row}: malformed timestamp `{value}`")]
    MalformedTimestamp {
        path: PathBuf,
        row: usize,
        value: String,
    },
    #[error("{path}: undeclared predicate {name}")]
    UndeclaredPredicate { path: PathBuf, name: String },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] Error),
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_tes(path: &Path) -> Result<Tes, IoError> {
    parse_tes(&read(path)?).map_err(|source| IoError::Spec {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimestampFormat {
    Epoch,
    Rfc3339,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Column {
    /// Zero-based position.
    Index(usize),
    Named(String),
}

/// How CSV rows become observation facts. Read from `key=value` lines:
/// `predicate=`, `columns=` (comma-separated 1-based positions or header
/// names), `timestamp_column=`, `timestamp_format=epoch|rfc3339` and
/// optionally `header=true|false`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvMapping {
    pub predicate: String,
    columns: Vec<Column>,
    timestamp_column: Column,
    pub timestamp_format: TimestampFormat,
    pub header: bool,
}

impl CsvMapping {
    pub fn parse(src: &str, path: &Path) -> Result<CsvMapping, IoError> {
        let err = |message: String| IoError::Mapping {
            path: path.to_path_buf(),
            message,
        };
        let mut kv = BTreeMap::new();
        for (no, line) in src.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("line {}: expected key=value", no + 1)))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let column = |s: &str| -> Result<Column, IoError> {
            match s.parse::<usize>() {
                Ok(0) => Err(err("column positions start at 1".into())),
                Ok(n) => Ok(Column::Index(n - 1)),
                Err(_) => Ok(Column::Named(s.to_string())),
            }
        };
        let get = |k: &str| kv.get(k).ok_or_else(|| err(format!("missing key `{k}`")));
        let predicate = get("predicate")?.clone();
        let columns = get("columns")?
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(column)
            .collect::<Result<Vec<_>, _>>()?;
        let timestamp_column = column(get("timestamp_column")?)?;
        let timestamp_format = match kv.get("timestamp_format").map(String::as_str) {
            None | Some("epoch") => TimestampFormat::Epoch,
            Some("rfc3339") => TimestampFormat::Rfc3339,
            Some(other) => return Err(err(format!("unknown timestamp_format `{other}`"))),
        };
        let header = match kv.get("header").map(String::as_str) {
            Some("true") => true,
            Some("false") => false,
            None => columns
                .iter()
                .chain([&timestamp_column])
                .any(|c| matches!(c, Column::Named(_))),
            Some(other) => return Err(err(format!("header must be true or false, got `{other}`"))),
        };
        if !header
            && columns
                .iter()
                .chain([&timestamp_column])
                .any(|c| matches!(c, Column::Named(_)))
        {
            return Err(err("named columns need header=true".into()));
        }
        for k in kv.keys() {
            if !["predicate", "columns", "timestamp_column", "timestamp_format", "header"].contains(&k.as_str()) {
                return Err(err(format!("unknown key `{k}`")));
            }
        }
        Ok(CsvMapping {
            predicate,
            columns,
            timestamp_column,
            timestamp_format,
            header,
        })
    }
}

fn cell_value(s: &str) -> Value {
    match s.parse::<u64>() {
        Ok(n) => Value::Nat(n),
        Err(_) => Value::sym(s),
    }
}

fn parse_timestamp(s: &str, format: TimestampFormat) -> Option<Timepoint> {
    match format {
        TimestampFormat::Epoch => s.trim().parse().ok(),
        TimestampFormat::Rfc3339 => DateTime::parse_from_rfc3339(s.trim())
            .ok()
            .and_then(|t| u64::try_from(t.timestamp()).ok()),
    }
}

/// Observation facts from CSV text under `map`.
pub fn csv_facts(text: &str, map: &CsvMapping, tes: &Tes, path: &Path) -> Result<Vec<Fact>, IoError> {
    let decl = tes
        .decl(&map.predicate)
        .filter(|d| d.kind == PredKind::Observation)
        .ok_or_else(|| IoError::UndeclaredPredicate {
            path: path.to_path_buf(),
            name: map.predicate.clone(),
        })?;
    if decl.arity != map.columns.len() {
        return Err(IoError::Mapping {
            path: path.to_path_buf(),
            message: format!(
                "{} has arity {}, mapping lists {} columns",
                decl.name,
                decl.arity,
                map.columns.len()
            ),
        });
    }
    let csv_err = |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(map.header)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = if map.header {
        Some(reader.headers().map_err(csv_err)?.clone())
    } else {
        None
    };
    let resolve = |c: &Column| -> Result<usize, IoError> {
        match c {
            Column::Index(i) => Ok(*i),
            Column::Named(n) => headers
                .as_ref()
                .and_then(|h| h.iter().position(|x| x == n))
                .ok_or_else(|| IoError::Mapping {
                    path: path.to_path_buf(),
                    message: format!("no column named `{n}`"),
                }),
        }
    };
    let cols = map.columns.iter().map(resolve).collect::<Result<Vec<_>, _>>()?;
    let ts = resolve(&map.timestamp_column)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = i + 1 + usize::from(map.header);
        let cell = |c: usize| {
            record.get(c).ok_or_else(|| IoError::MissingColumn {
                path: path.to_path_buf(),
                row,
                column: (c + 1).to_string(),
            })
        };
        let args = cols.iter().map(|&c| cell(c).map(cell_value)).collect::<Result<_, _>>()?;
        let raw = cell(ts)?;
        let time = parse_timestamp(raw, map.timestamp_format).ok_or_else(|| IoError::MalformedTimestamp {
            path: path.to_path_buf(),
            row,
            value: raw.to_string(),
        })?;
        out.push(Fact::Observation {
            pred: decl.name.clone(),
            args,
            time,
        });
    }
    Ok(out)
}

/// One input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSource {
    Facts(PathBuf),
    Csv { path: PathBuf, map: PathBuf },
}

pub fn ingest(sources: &[DataSource], tes: &Tes) -> Result<Dataset, IoError> {
    let mut d = Dataset::new();
    for src in sources {
        let facts = match src {
            DataSource::Facts(path) => parse_facts(&read(path)?, tes).map_err(|source| IoError::Spec {
                path: path.clone(),
                source,
            })?,
            DataSource::Csv { path, map } => {
                let mapping = CsvMapping::parse(&read(map)?, map)?;
                csv_facts(&read(path)?, &mapping, tes, path)?
            }
        };
        for f in facts {
            d.insert(f).expect("ingested facts are atemporal or observations");
        }
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonValue {
    Nat(u64),
    Sym(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonEnd {
    At(u64),
    Star(Star),
}

/// The string `"*"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Star;

impl Serialize for Star {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("*")
    }
}

impl<'de> Deserialize<'de> for Star {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "*" {
            Ok(Star)
        } else {
            Err(serde::de::Error::custom(format!("expected \"*\", got {s:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonInterval {
    pub start: u64,
    pub end: JsonEnd,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamped_end: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonFact {
    pub pred: String,
    pub args: Vec<JsonValue>,
    pub interval: JsonInterval,
    pub level: u32,
}

impl JsonFact {
    pub fn from_fact(f: &EventFact, now: Option<Timepoint>) -> Self {
        let end = match f.interval.end() {
            End::At(t) => JsonEnd::At(t),
            End::Ongoing => JsonEnd::Star(Star),
        };
        let clamped_end = match (f.interval.end(), now) {
            (End::Ongoing, Some(n)) => Some(n + 1),
            _ => None,
        };
        JsonFact {
            pred: f.pred.to_string(),
            args: f
                .args
                .iter()
                .map(|v| match v {
                    Value::Nat(n) => JsonValue::Nat(*n),
                    Value::Sym(s) => JsonValue::Sym(s.to_string()),
                    other => JsonValue::Sym(other.to_string()),
                })
                .collect(),
            interval: JsonInterval {
                start: f.interval.start(),
                end,
                clamped_end,
            },
            level: f.level,
        }
    }

    pub fn to_fact(&self) -> Result<EventFact, String> {
        let end = match self.interval.end {
            JsonEnd::At(t) => End::At(t),
            JsonEnd::Star(_) => End::Ongoing,
        };
        let interval = Interval::new(self.interval.start, end).map_err(|e| e.to_string())?;
        if self.level == 0 {
            return Err(format!("{}: confidence levels start at 1", self.pred));
        }
        Ok(EventFact {
            pred: Name::new(&self.pred),
            args: self
                .args
                .iter()
                .map(|a| match a {
                    JsonValue::Nat(n) => Value::Nat(*n),
                    JsonValue::Sym(s) => Value::sym(s),
                })
                .collect(),
            interval,
            level: self.level,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonModel {
    pub simple: Vec<JsonFact>,
    pub meta: Vec<JsonFact>,
}

impl JsonModel {
    pub fn from_timeline(t: &Timeline, now: Option<Timepoint>) -> Self {
        let conv = |s: &EventSet| s.iter().map(|f| JsonFact::from_fact(f, now)).collect();
        JsonModel {
            simple: conv(&t.simple),
            meta: conv(&t.meta),
        }
    }

    pub fn to_sets(&self) -> Result<(EventSet, EventSet), String> {
        let conv = |v: &[JsonFact]| v.iter().map(JsonFact::to_fact).collect::<Result<EventSet, _>>();
        Ok((conv(&self.simple)?, conv(&self.meta)?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonPartition {
    pub models: Vec<JsonModel>,
    pub exhaustive: bool,
}

/// Output document of a timeline run. Exactly one of `models` and
/// `partitions` is present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonRun {
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub models: Option<Vec<JsonModel>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partitions: Option<BTreeMap<String, JsonPartition>>,
    pub exhaustive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonCheck {
    pub recognized: bool,
}

/// Parses a timeline from JSON: a single model object, or a run document
/// holding exactly one model.
pub fn parse_timeline_json(text: &str) -> Result<EventSet, String> {
    let model = match serde_json::from_str::<JsonModel>(text) {
        Ok(m) => m,
        Err(_) => {
            let run: JsonRun = serde_json::from_str(text).map_err(|e| e.to_string())?;
            match run.models.as_deref() {
                Some([m]) => m.clone(),
                _ => return Err("expected a document with exactly one model".into()),
            }
        }
    };
    let (simple, meta) = model.to_sets()?;
    Ok(simple.union(&meta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Timeline(Mode),
    Check,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Tsv,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub rules_path: PathBuf,
    pub data: Vec<DataSource>,
    pub mode: RunMode,
    pub check_target_path: Option<PathBuf>,
    /// Kind of timeline the check target is tested against.
    pub check_kind: Mode,
    pub now: Option<Timepoint>,
    pub max_models: Option<usize>,
    pub cap: usize,
    pub partition_by: Option<usize>,
    pub output_format: OutputFormat,
}

impl RunConfig {
    pub fn new(rules_path: impl Into<PathBuf>, data: Vec<DataSource>, mode: RunMode) -> Self {
        RunConfig {
            rules_path: rules_path.into(),
            data,
            mode,
            check_target_path: None,
            check_kind: Mode::Consistent,
            now: None,
            max_models: None,
            cap: DEFAULT_CAP,
            partition_by: None,
            output_format: OutputFormat::Json,
        }
    }

    fn validate(&self) -> Result<(), IoError> {
        if self.data.is_empty() {
            return Err(IoError::Config("at least one data file is required".into()));
        }
        match (self.mode, &self.check_target_path) {
            (RunMode::Check, None) => Err(IoError::Config("check mode needs a target timeline".into())),
            (RunMode::Timeline(_), Some(_)) => {
                Err(IoError::Config("a check target is only valid in check mode".into()))
            }
            (RunMode::Check, Some(_)) if self.partition_by.is_some() => {
                Err(IoError::Config("check mode does not support partitioning".into()))
            }
            _ => Ok(()),
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CAP: i32 = 2;
pub const EXIT_NOT_RECOGNIZED: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Splits observations by the argument at `pos`; atemporal facts and
/// observations too short to have that argument go to every partition.
pub fn partition(d: &Dataset, pos: usize) -> BTreeMap<String, Dataset> {
    let mut shared = Vec::new();
    let mut parts: BTreeMap<String, Vec<Fact>> = BTreeMap::new();
    for f in d.facts() {
        match f {
            Fact::Observation { args, .. } if pos < args.len() => {
                parts.entry(args[pos].to_string()).or_default().push(f.clone())
            }
            _ => shared.push(f.clone()),
        }
    }
    parts
        .into_iter()
        .map(|(k, mut v)| {
            v.extend(shared.iter().cloned());
            (k, v.into_iter().collect())
        })
        .collect()
}

fn render_tsv(parts: &BTreeMap<Option<String>, (Timelines, usize)>, now: Option<Timepoint>) -> String {
    let mut out = String::from("entity\tmodel\tkind\tpred\targs\tstart\tend\tlevel\n");
    for (entity, (tl, limit)) in parts {
        for (i, t) in tl.timelines.iter().take(*limit).enumerate() {
            for (kind, set) in [("simple", &t.simple), ("meta", &t.meta)] {
                for f in set.iter() {
                    let args: Vec<String> = f.args.iter().map(Value::to_string).collect();
                    let end = match (f.interval.end(), now) {
                        (End::Ongoing, Some(n)) => format!("*({})", n + 1),
                        (e, _) => e.to_string(),
                    };
                    let _ = writeln!(
                        out,
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                        entity.as_deref().unwrap_or("-"),
                        i,
                        kind,
                        f.pred,
                        args.join(","),
                        f.interval.start(),
                        end,
                        f.level
                    );
                }
            }
        }
    }
    out
}

fn json_models(tl: &Timelines, limit: usize, now: Option<Timepoint>) -> Vec<JsonModel> {
    tl.timelines
        .iter()
        .take(limit)
        .map(|t| JsonModel::from_timeline(t, now))
        .collect()
}

fn run_inner(cfg: &RunConfig) -> Result<(i32, String), IoError> {
    cfg.validate()?;
    let tes = load_tes(&cfg.rules_path)?;
    let d = ingest(&cfg.data, &tes)?;
    let mode = match cfg.mode {
        RunMode::Check => {
            let path = cfg.check_target_path.as_ref().expect("validated");
            let target = parse_timeline_json(&read(path)?).map_err(|message| IoError::Config(format!(
                "{}: {message}",
                path.display()
            )))?;
            let recognized = recognize_timeline(&target, &d, &tes, cfg.check_kind, cfg.cap)?;
            let doc = serde_json::to_string_pretty(&JsonCheck { recognized }).expect("serializable");
            let code = if recognized { EXIT_OK } else { EXIT_NOT_RECOGNIZED };
            return Ok((code, doc + "\n"));
        }
        RunMode::Timeline(m) => m,
    };
    let limit = cfg.max_models.unwrap_or(usize::MAX);
    let inputs: Vec<(Option<String>, Dataset)> = match cfg.partition_by {
        None => vec![(None, d)],
        Some(pos) => partition(&d, pos).into_iter().map(|(k, v)| (Some(k), v)).collect(),
    };
    let results: Vec<(Option<String>, Timelines)> = inputs
        .into_par_iter()
        .map(|(k, part)| Ok((k, timeline(&part, &tes, mode, cfg.cap)?)))
        .collect::<Result<_, Error>>()?;
    let exhaustive = results.iter().all(|(_, t)| t.exhaustive);
    let code = if exhaustive { EXIT_OK } else { EXIT_CAP };
    let text = match cfg.output_format {
        OutputFormat::Tsv => {
            let parts = results.into_iter().map(|(k, t)| (k, (t, limit))).collect();
            render_tsv(&parts, cfg.now)
        }
        OutputFormat::Json => {
            let doc = if cfg.partition_by.is_some() {
                let partitions = results
                    .iter()
                    .map(|(k, t)| {
                        let k = k.clone().expect("partitioned");
                        let p = JsonPartition {
                            models: json_models(t, limit, cfg.now),
                            exhaustive: t.exhaustive,
                        };
                        (k, p)
                    })
                    .collect();
                JsonRun {
                    mode: mode.name().into(),
                    models: None,
                    partitions: Some(partitions),
                    exhaustive,
                }
            } else {
                JsonRun {
                    mode: mode.name().into(),
                    models: Some(json_models(&results[0].1, limit, cfg.now)),
                    partitions: None,
                    exhaustive,
                }
            };
            serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
        }
    };
    Ok((code, text))
}

/// Runs the configured pipeline. Errors go to `stderr` with exit code 1,
/// or 2 when the enumeration cap was hit.
pub fn run(cfg: &RunConfig) -> RunOutput {
    match run_inner(cfg) {
        Ok((code, stdout)) => RunOutput {
            code,
            stdout,
            stderr: String::new(),
        },
        Err(e) => {
            let code = match e {
                IoError::Engine(Error::CapExceeded { .. }) => EXIT_CAP,
                _ => EXIT_ERROR,
            };
            RunOutput {
                code,
                stdout: String::new(),
                stderr: format!("error: {e}\n"),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tes() -> Tes {
        parse_tes("decl observation Adm/2.\ndecl atemporal Tki/1.").unwrap()
    }

    #[test]
    fn csv_rows_with_rfc3339_timestamps() {
        let map = CsvMapping::parse(
            "predicate=Adm\ncolumns=1,2\ntimestamp_column=3\ntimestamp_format=rfc3339\n",
            Path::new("m"),
        )
        .unwrap();
        let facts = csv_facts("p1,amox,2021-03-01T00:00:00Z\n", &map, &tes(), Path::new("x.csv")).unwrap();
        assert_eq!(
            facts,
            vec![Fact::Observation {
                pred: Name::new("Adm"),
                args: vec![Value::sym("p1"), Value::sym("amox")],
                time: 1_614_556_800,
            }]
        );
    }

    #[test]
    fn csv_named_columns_and_epoch() {
        let map = CsvMapping::parse(
            "predicate=Adm\ncolumns=patient, drug\ntimestamp_column=ts\n",
            Path::new("m"),
        )
        .unwrap();
        assert!(map.header);
        let text = "ts,drug,patient\n5,amox,p1\n7,cef,p2\n";
        let facts = csv_facts(text, &map, &tes(), Path::new("x.csv")).unwrap();
        assert_eq!(facts.len(), 2);
        assert_eq!(facts[1].args(), &[Value::sym("p2"), Value::sym("cef")]);
    }

    #[test]
    fn csv_errors() {
        let map = |s: &str| CsvMapping::parse(s, Path::new("m"));
        let bad = map("predicate=Nope\ncolumns=1,2\ntimestamp_column=3").unwrap();
        assert!(matches!(
            csv_facts("a,b,1\n", &bad, &tes(), Path::new("x")),
            Err(IoError::UndeclaredPredicate { .. })
        ));
        let m = map("predicate=Adm\ncolumns=1,2\ntimestamp_column=3").unwrap();
        assert!(matches!(
            csv_facts("a,b,yesterday\n", &m, &tes(), Path::new("x")),
            Err(IoError::MalformedTimestamp { row: 1, .. })
        ));
        assert!(matches!(
            csv_facts("a,b\n", &m, &tes(), Path::new("x")),
            Err(IoError::MissingColumn { .. })
        ));
        assert!(map("predicate=Adm\ncolumns=1\n").is_err());
        assert!(map("predicate=Adm\ncolumns=a\ntimestamp_column=3\nheader=false").is_err());
        assert!(map("predicate=Adm\ncolumns=1\ntimestamp_column=3\nbogus=1").is_err());
    }

    #[test]
    fn json_round_trip() {
        let facts = [
            EventFact::new("E", vec![Value::sym("p1"), Value::Nat(3)], Interval::closed(1, 4), 2),
            EventFact::new("E", vec![Value::sym("5")], Interval::ongoing(9), 1),
        ];
        for f in &facts {
            let j = JsonFact::from_fact(f, Some(11));
            let text = serde_json::to_string(&j).unwrap();
            let back: JsonFact = serde_json::from_str(&text).unwrap();
            assert_eq!(back.to_fact().unwrap(), *f);
        }
        let j = serde_json::to_value(JsonFact::from_fact(&facts[1], Some(11))).unwrap();
        assert_eq!(j["interval"]["end"], "*");
        assert_eq!(j["interval"]["clamped_end"], 12);
        assert_eq!(j["args"][0], "5");
        let j = serde_json::to_value(JsonFact::from_fact(&facts[0], Some(11))).unwrap();
        assert!(j["interval"].get("clamped_end").is_none());
    }

    #[test]
    fn partitions_share_atemporal_facts() {
        let t = tes();
        let d: Dataset = parse_facts(
            "obs Adm(p1, amox, 1).\nobs Adm(p2, amox, 2).\natemporal Tki(cer).",
            &t,
        )
        .unwrap()
        .into_iter()
        .collect();
        let parts = partition(&d, 0);
        assert_eq!(parts.keys().collect::<Vec<_>>(), ["p1", "p2"]);
        assert!(parts.values().all(|p| p.len() == 2 && !p.by_pred("Tki").is_empty()));
    }
}
