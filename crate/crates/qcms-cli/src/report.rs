//! Output plumbing: versioned JSON reports and CSV tables, written with a
//! fixed field order and fixed float formatting so reruns are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use qcms::metrics::CertifiedValue;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Run(String),
}

impl From<qcms::Error> for CliError {
    fn from(e: qcms::Error) -> Self {
        match e {
            qcms::Error::Config(m) => CliError::Config(m),
            other => CliError::Run(other.to_string()),
        }
    }
}

#[derive(Serialize)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckLine {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        CheckLine { name: name.into(), pass, detail: detail.into() }
    }
}

/// One row of a convergence table.
#[derive(Serialize)]
pub struct TableRow {
    pub level: usize,
    pub quantity: String,
    pub lower: f64,
    pub upper: f64,
    /// A separately certified analytic bound when one applies ("" -> NaN is
    /// avoided by serializing an Option).
    pub certified_bound: Option<f64>,
    pub seed: u64,
}

impl TableRow {
    pub fn from_value(level: usize, v: &CertifiedValue, certified: Option<f64>) -> Self {
        TableRow {
            level,
            quantity: v.quantity.clone(),
            lower: v.lower,
            upper: v.upper,
            certified_bound: certified,
            seed: v.seed,
        }
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.17e}")
}

/// Writes the standard CSV layout: level,quantity,lower,upper,certified_bound,seed.
pub fn write_csv(path: &Path, rows: &[TableRow]) -> Result<(), CliError> {
    let mut out = String::from("level,quantity,lower,upper,certified_bound,seed\n");
    for r in rows {
        let cb = r.certified_bound.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.level,
            r.quantity,
            fmt_f64(r.lower),
            fmt_f64(r.upper),
            cb,
            r.seed
        );
    }
    fs::write(path, out).map_err(|e| CliError::Run(format!("writing {path:?}: {e}")))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Run(format!("serializing report: {e}")))?;
    body.push('\n');
    fs::write(path, body).map_err(|e| CliError::Run(format!("writing {path:?}: {e}")))
}

pub fn ensure_out_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Run(format!("creating {path:?}: {e}")))
}

pub fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let body = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("reading {path:?}: {e}")))?;
    serde_json::from_str(&body).map_err(|e| CliError::Config(format!("parsing {path:?}: {e}")))
}

pub fn print_summary(name: &str, checks: &[CheckLine]) -> bool {
    let mut all = true;
    for chk in checks {
        let status = if chk.pass { "PASS" } else { "FAIL" };
        println!("[{status}] {name}: {} — {}", chk.name, chk.detail);
        all &= chk.pass;
    }
    all
}
