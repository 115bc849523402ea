//! Run configuration files, result rows and CSV/JSON output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytics::Rational;
use crate::error::{Error, Result};
use crate::montecarlo::{EstimateReport, EventKind, ExperimentSpec, SweepGrid};
use crate::torus::{Configuration, TorusShape, Vertex};

/// Plain decimal with 17 significant digits; `NaN`, `inf` and `-inf` otherwise.
pub fn fmt_decimal(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.16e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut out = String::new();
    if x < 0.0 {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits);
    } else {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            out.push_str(&digits);
            out.extend(std::iter::repeat_n('0', int_len - digits.len()));
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    }
    out
}

/// Output encoding.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, Hash)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i128),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv_text(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_decimal(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Int(v) => serde_json::json!(*v as i64),
            // same 17 digits as the CSV; non-finite values become strings
            Cell::Float(v) => fmt_decimal(*v)
                .parse::<serde_json::Number>()
                .map_or_else(|_| serde_json::Value::String(fmt_decimal(*v)), serde_json::Value::Number),
            Cell::Text(s) => serde_json::Value::String(s.clone()),
            Cell::Bool(b) => serde_json::Value::Bool(*b),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&Rational> for Cell {
    fn from(v: &Rational) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// A rectangular result table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv_text)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Array of objects keyed by column name.
    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: serde_json::Map<String, serde_json::Value> =
                    self.header.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&rows).expect("json");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Write `contents` to `path`, or to stdout when `path` is `None`.
pub fn emit(contents: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, contents).map_err(|source| Error::Io { path: p.to_path_buf(), source }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source })
        }
    }
}

/// Column order of [`ResultRow`] output.
pub const RESULT_COLUMNS: [&str; 14] = [
    "d", "n", "theta", "alpha", "a", "p", "event", "replicas", "successes", "p_hat", "ci_low", "ci_high", "seed",
    "mean_rounds",
];

/// One estimated event of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRow {
    pub d: usize,
    pub n: usize,
    pub theta: usize,
    pub alpha: Option<Rational>,
    pub a: Option<f64>,
    pub p: f64,
    pub event: EventKind,
    pub replicas: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub mean_rounds: Option<f64>,
}

impl ResultRow {
    pub fn from_report(report: &EstimateReport) -> Vec<ResultRow> {
        report
            .estimates
            .iter()
            .map(|e| ResultRow {
                d: report.shape.d(),
                n: report.shape.n(),
                theta: report.shape.theta(),
                alpha: report.alpha.clone(),
                a: report.a,
                p: report.p,
                event: e.event,
                replicas: e.replicas,
                successes: e.successes,
                p_hat: e.p_hat,
                ci_low: e.ci_low,
                ci_high: e.ci_high,
                seed: report.seed,
                mean_rounds: report.mean_rounds,
            })
            .collect()
    }

    pub fn cells(&self) -> Vec<Cell> {
        vec![
            self.d.into(),
            self.n.into(),
            self.theta.into(),
            self.alpha.as_ref().into(),
            self.a.into(),
            self.p.into(),
            self.event.as_str().into(),
            self.replicas.into(),
            self.successes.into(),
            self.p_hat.into(),
            self.ci_low.into(),
            self.ci_high.into(),
            self.seed.into(),
            self.mean_rounds.into(),
        ]
    }
}

pub fn result_table(rows: &[ResultRow]) -> Table {
    let mut t = Table::new(&RESULT_COLUMNS);
    for r in rows {
        t.push(r.cells());
    }
    t
}

pub fn write_results(rows: &[ResultRow], path: &Path, format: Format) -> Result<()> {
    emit(&result_table(rows).render(format), Some(path))
}

pub fn parse_result_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::domain(format!("bad result header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != RESULT_COLUMNS {
        return Err(Error::domain(format!("unexpected result columns {header:?}")));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::domain(format!("bad result row: {e}"))))
        .collect()
}

/// Initial configuration read by `detect`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub d: usize,
    pub n: usize,
    pub theta: usize,
    /// 1-based coordinates of the initially open vertices.
    pub open: Vec<Vec<usize>>,
}

impl ConfigFile {
    pub fn to_configuration(&self) -> Result<Configuration> {
        let shape = TorusShape::new(self.d, self.n, self.theta)?;
        let vs: Vec<Vertex> = self.open.iter().map(|c| Vertex(c.clone())).collect();
        Configuration::from_vertices(shape, &vs)
    }

    pub fn from_configuration(config: &Configuration) -> Self {
        let s = config.shape();
        ConfigFile {
            d: s.d(),
            n: s.n(),
            theta: s.theta(),
            open: config.open_vertices().into_iter().map(|v| v.0).collect(),
        }
    }
}

/// Which closed forms `limits` evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitMode {
    #[serde(rename = "2d")]
    TwoD,
    /// Closed form and decomposition side by side.
    #[serde(rename = "3d")]
    ThreeD,
    /// The five decomposition terms.
    #[serde(rename = "good")]
    Good,
    #[serde(rename = "poisson")]
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsQuery {
    pub mode: LimitMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<usize>,
    pub a: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentsMode {
    #[default]
    Table,
    Epl,
    Figure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsQuery {
    pub d: usize,
    pub theta: Vec<usize>,
    #[serde(default)]
    pub mode: ExponentsMode,
    /// β-curve abscissae for the figure mode.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectQuery {
    pub input: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleQuery {
    pub d: usize,
    pub n: usize,
    pub theta: usize,
    pub p: f64,
    #[serde(default = "default_event")]
    pub event: EventKind,
    #[serde(default = "default_oracle_replicas")]
    pub replicas: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "crate::montecarlo::default_ci_level")]
    pub ci_level: f64,
    /// Random instances for the engine-equivalence battery.
    #[serde(default = "default_engine_instances")]
    pub engine_instances: u64,
}

fn default_event() -> EventKind {
    EventKind::Spanned
}

fn default_oracle_replicas() -> u64 {
    100_000
}

fn default_engine_instances() -> u64 {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepQuery {
    pub base: ExperimentSpec,
    pub grid: SweepGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricsQuery {
    pub n: usize,
    pub a: f64,
    pub replicas: u64,
    #[serde(default)]
    pub seed: u64,
}

/// The work a configuration file asks for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    Simulate(ExperimentSpec),
    Sweep(SweepQuery),
    Limits(LimitsQuery),
    Exponents(ExponentsQuery),
    Detect(DetectQuery),
    Oracle(OracleQuery),
    Empirics(EmpiricsQuery),
}

/// A complete batch run: one task plus where and how to write its output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub verbosity: u8,
    pub task: Task,
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Parse a run configuration; `.json` files are JSON, everything else TOML.
pub fn parse_config(text: &str, path: &Path) -> Result<RunConfig> {
    if is_json(path) {
        serde_json::from_str(text).map_err(|e| Error::Config { path: path.to_path_buf(), message: e.to_string() })
    } else {
        toml::from_str(text).map_err(|e| Error::Config { path: path.to_path_buf(), message: e.to_string() })
    }
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_config(&text, path)
}

pub fn render_config(config: &RunConfig, path: &Path) -> Result<String> {
    if is_json(path) {
        let mut s = serde_json::to_string_pretty(config).map_err(|e| Error::domain(e.to_string()))?;
        s.push('\n');
        Ok(s)
    } else {
        toml::to_string(config).map_err(|e| Error::domain(e.to_string()))
    }
}

pub fn write_config(config: &RunConfig, path: &Path) -> Result<()> {
    emit(&render_config(config, path)?, Some(path))
}

pub fn read_config_file(path: &Path) -> Result<ConfigFile> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|e| Error::Config { path: path.to_path_buf(), message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::Scaling;

    #[test]
    fn decimals_have_seventeen_digits() {
        assert_eq!(fmt_decimal(1.0 - (-1.0f64).exp()), "0.63212055882855767");
        assert_eq!(fmt_decimal(0.5), "0.50000000000000000");
        assert_eq!(fmt_decimal(1.0), "1.0000000000000000");
        assert_eq!(fmt_decimal(-2.5e-3), "-0.0025000000000000001");
        assert_eq!(fmt_decimal(123456.0), "123456.00000000000");
        assert_eq!(fmt_decimal(1e20), "100000000000000000000");
        assert_eq!(fmt_decimal(0.0), "0");
        assert_eq!(fmt_decimal(f64::NAN), "NaN");
        for x in [0.1, 1.0 / 3.0, 2e-9, 6.02e23, 0.9999999999999999] {
            assert_eq!(fmt_decimal(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = result_table(&[]);
        assert_eq!(t.to_csv(), format!("{}\n", RESULT_COLUMNS.join(",")));
        assert_eq!(t.to_json(), "[]\n");
    }

    fn sample_row() -> ResultRow {
        ResultRow {
            d: 3,
            n: 150,
            theta: 3,
            alpha: Some(Rational::from_integer(2)),
            a: Some(2.0),
            p: 2.0 / 22500.0,
            event: EventKind::Spanned,
            replicas: 1000,
            successes: 987,
            p_hat: 0.987,
            ci_low: 0.97,
            ci_high: 0.99,
            seed: 42,
            mean_rounds: None,
        }
    }

    #[test]
    fn result_rows_round_trip_through_csv() {
        let rows = vec![sample_row(), ResultRow { alpha: None, a: None, mean_rounds: Some(3.25), ..sample_row() }];
        let csv = result_table(&rows).to_csv();
        assert!(csv.ends_with('\n'));
        assert!(csv.contains(",2/1,"));
        assert_eq!(parse_result_csv(&csv).unwrap(), rows);
    }

    #[test]
    fn json_mirrors_field_names() {
        let json = result_table(&[sample_row()]).to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let obj = v[0].as_object().unwrap();
        for col in RESULT_COLUMNS {
            assert!(obj.contains_key(col), "{col}");
        }
        assert_eq!(obj["alpha"], "2/1");
        let back: ResultRow = serde_json::from_value(v[0].clone()).unwrap();
        assert_eq!(back, sample_row());
    }

    fn sample_config() -> RunConfig {
        RunConfig {
            output: Some(PathBuf::from("out.csv")),
            format: Format::Csv,
            verbosity: 1,
            task: Task::Simulate(ExperimentSpec::new(
                TorusShape::new(3, 50, 3).unwrap(),
                Scaling::Power { a: 2.0, alpha: Rational::from_integer(2) },
                vec![EventKind::Spanned, EventKind::Good],
                100,
                9,
            )),
        }
    }

    #[test]
    fn run_config_round_trips() {
        let cfg = sample_config();
        for name in ["run.toml", "run.json"] {
            let path = Path::new(name);
            let text = render_config(&cfg, path).unwrap();
            assert_eq!(parse_config(&text, path).unwrap(), cfg, "{text}");
        }
    }

    #[test]
    fn unknown_fields_are_rejected_with_a_line() {
        let text = "format = \"csv\"\nbogus = 1\n[task.limits]\nmode = \"2d\"\ntheta = 3\na = [1.0]\n";
        let err = parse_config(text, Path::new("x.toml")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus") && msg.contains("line 2"), "{msg}");
        let err = parse_config("{\"task\": {\"limits\": {\"mode\": \"2d\", \"a\": [1], \"x\": 2}}}", Path::new("x.json"))
            .unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn config_file_round_trip() {
        let f = ConfigFile { d: 3, n: 4, theta: 3, open: vec![vec![2, 1, 1], vec![1, 3, 1]] };
        let c = f.to_configuration().unwrap();
        assert_eq!(ConfigFile::from_configuration(&c), f);
        let bad = ConfigFile { open: vec![vec![5, 1, 1]], ..f };
        assert!(bad.to_configuration().is_err());
    }
}
