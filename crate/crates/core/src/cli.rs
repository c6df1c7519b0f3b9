//! Command-line front end.
//!
//! Exit codes: 0 when every requested route or check agrees, 1 on a
//! mathematical disagreement, 2 on bad input.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use crate::affine::{bkp_to_kp, parse_affine_b, write_coord_records, AffineB};
use crate::fock::oracle_npoint;
use crate::npoint::{bkp_npoint_embedded_with, bkp_npoint_wangyang_with, Truncation};
use crate::rational::format_rational;
use crate::table::NPointTable;
use crate::verify::{self, CheckOutcome, DEFAULT_SEED};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_DISAGREE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "bkp-npoint", version, about = "Exact BKP n-point functions from affine coordinates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate derivatives of log tau at the origin.
    Npoint(NpointArgs),
    /// Run verification checks on seeded random instances.
    Verify(VerifyArgs),
    /// Convert BKP coordinates to KP coordinates.
    Convert(ConvertArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Formula {
    Wangyang,
    Embedded,
    Oracle,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckName {
    Equivalence,
    Oracle,
    Square,
    Relation,
    State,
    Lemma,
    Trivial,
    Worked,
    Certification,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Full,
}

#[derive(Debug, Args)]
pub struct NpointArgs {
    /// Coordinate file: JSON list of [n, m, "p/q"] records.
    #[arg(long)]
    pub coords: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=8))]
    pub n: u32,
    #[arg(long, alias = "weight")]
    pub max_weight: u32,
    #[arg(long, value_enum, default_value_t = Formula::All)]
    pub formula: Formula,
    /// Grade slack used to truncate the kernel expansions.
    #[arg(long)]
    pub window_cap: Option<i64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, conflicts_with = "suite", required_unless_present = "suite")]
    pub check: Option<CheckName>,
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Number of random instances (defaults depend on the check).
    #[arg(long)]
    pub instances: Option<usize>,
    /// Arity for the table checks; all of 1..=3 when omitted.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=8))]
    pub n: Option<u32>,
    /// Number of pairs for the lemma check; all of 1..=3 when omitted.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=4))]
    pub k: Option<u32>,
    /// Weight bound, or the Fock cutoff for the state check.
    #[arg(long, alias = "weight")]
    pub max_weight: Option<u32>,
    /// Box depth for the relation check, grade depth for the lemma check.
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub coords: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn read_coords(path: &Path) -> Result<AffineB, CliError> {
    let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    parse_affine_b(&text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Runs a parsed command and returns the exit code.
pub fn run(cli: Cli) -> u8 {
    let result = match cli.command {
        Command::Npoint(a) => cmd_npoint(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Convert(a) => cmd_convert(&a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_INPUT
    })
}

fn table_json(formula: &str, t: &NPointTable) -> Value {
    let entries: Vec<Value> = t
        .entries()
        .map(|(idx, v)| json!({ "indices": idx, "value": format_rational(v) }))
        .collect();
    json!({ "formula": formula, "entries": entries })
}

/// Agreement of all tables with the first one, as a JSON report.
pub fn npoint_report(n: usize, max_weight: u32, tables: &[(&str, NPointTable)]) -> (Value, u8) {
    let mut mismatch = Value::Null;
    if let Some((base_name, base)) = tables.first() {
        for (name, t) in &tables[1..] {
            if let Some((idx, a, b)) = base.first_difference(t) {
                mismatch = json!({
                    "routes": [base_name, name],
                    "indices": idx,
                    "values": [format_rational(&a), format_rational(&b)],
                });
                break;
            }
        }
    }
    let agree = mismatch.is_null();
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "npoint",
        "n": n,
        "max_weight": max_weight,
        "tables": tables.iter().map(|(name, t)| table_json(name, t)).collect::<Vec<_>>(),
        "agree": agree,
        "first_difference": mismatch,
    });
    (report, if agree { EXIT_PASS } else { EXIT_DISAGREE })
}

fn tables_csv(tables: &[(&str, NPointTable)]) -> String {
    let mut out = String::from("formula,indices,value\n");
    for (name, t) in tables {
        for (idx, v) in t.entries() {
            let joined: Vec<String> = idx.iter().map(u32::to_string).collect();
            out.push_str(&format!("{name},{},{}\n", joined.join(":"), format_rational(v)));
        }
    }
    out
}

fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

pub fn cmd_npoint(a: &NpointArgs) -> Result<u8, CliError> {
    let b = read_coords(&a.coords)?;
    let n = a.n as usize;
    if a.max_weight < a.n {
        return Err(input(format!("max weight {} is below n = {}", a.max_weight, a.n)));
    }
    let trunc = Truncation {
        slack: a.window_cap,
        scale: 1,
    };
    let routes: &[&str] = match a.formula {
        Formula::Wangyang => &["wangyang"],
        Formula::Embedded => &["embedded"],
        Formula::Oracle => &["oracle"],
        Formula::All => &["wangyang", "embedded", "oracle"],
    };
    let mut tables = Vec::new();
    for &route in routes {
        let t = match route {
            "wangyang" => bkp_npoint_wangyang_with(&b, n, a.max_weight, trunc).map_err(input)?,
            "embedded" => bkp_npoint_embedded_with(&b, n, a.max_weight, trunc).map_err(input)?,
            _ => oracle_npoint(&b, n, a.max_weight).map_err(input)?,
        };
        tables.push((route, t));
    }
    let (report, code) = npoint_report(n, a.max_weight, &tables);
    let text = match a.format {
        Format::Json => to_pretty(&report),
        Format::Csv => tables_csv(&tables),
    };
    emit(a.out.as_deref(), &text)?;
    if code == EXIT_DISAGREE {
        eprintln!("routes disagree: {}", report["first_difference"]);
    }
    Ok(code)
}

fn ns(a: &VerifyArgs) -> Vec<usize> {
    match a.n {
        Some(n) => vec![n as usize],
        None => vec![1, 2, 3],
    }
}

pub fn run_check(a: &VerifyArgs, check: CheckName) -> Vec<CheckOutcome> {
    let s = a.seed;
    let count = |d: usize| a.instances.unwrap_or(d);
    let weight = |d: u32| a.max_weight.unwrap_or(d);
    match check {
        CheckName::Equivalence => vec![verify::equivalence(s, count(10), &ns(a), weight(9))],
        CheckName::Oracle => vec![verify::oracle(s, count(10), &ns(a), weight(7))],
        CheckName::Square => vec![verify::square(s, count(5), weight(8))],
        CheckName::Relation => vec![verify::relation(s, count(20), a.depth.unwrap_or(8))],
        CheckName::State => vec![verify::state(s, count(5), weight(8) as i64)],
        CheckName::Lemma => {
            let depth = a.depth.unwrap_or(6) as i64;
            match a.k {
                Some(k) => vec![verify::lemma(s, count(20), &[k as usize], depth)],
                None => vec![verify::lemma(s, count(20), &[1, 2, 3], depth)],
            }
        }
        CheckName::Trivial => vec![verify::trivial(&ns(a), weight(9))],
        CheckName::Worked => vec![verify::worked_value()],
        CheckName::Certification => vec![verify::certification(s, count(5), &ns(a), weight(7))],
    }
}

pub fn verify_report(seed: u64, checks: &[CheckOutcome]) -> (Value, u8) {
    let passed = checks.iter().all(|c| c.passed);
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "verify",
        "seed": seed,
        "checks": checks,
        "passed": passed,
    });
    (report, if passed { EXIT_PASS } else { EXIT_DISAGREE })
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<u8, CliError> {
    let checks = match (a.suite, a.check) {
        (Some(Suite::Full), _) => verify::full_suite(a.seed),
        (None, Some(c)) => run_check(a, c),
        (None, None) => return Err(input("one of --check or --suite is required")),
    };
    let (report, code) = verify_report(a.seed, &checks);
    emit(a.out.as_deref(), &to_pretty(&report))?;
    for c in checks.iter().filter(|c| !c.passed) {
        eprintln!("{} failed: {}", c.name, c.detail.as_deref().unwrap_or(""));
    }
    Ok(code)
}

pub fn cmd_convert(a: &ConvertArgs) -> Result<u8, CliError> {
    let b = read_coords(&a.coords)?;
    let kp = bkp_to_kp(&b);
    emit(a.out.as_deref(), &write_coord_records(kp.entries()))?;
    Ok(EXIT_PASS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn corrupted_table_is_reported() {
        let t = NPointTable::from_fn(1, 5, |idx| int(idx[0] as i64));
        let mut bad = t.clone();
        bad.set(&[3], int(0));
        let (report, code) = npoint_report(1, 5, &[("wangyang", t.clone()), ("embedded", bad)]);
        assert_eq!(code, EXIT_DISAGREE);
        assert_eq!(report["agree"], json!(false));
        assert_eq!(report["first_difference"]["indices"], json!([3]));
        assert_eq!(report["first_difference"]["values"], json!(["3", "0"]));
        let (report, code) = npoint_report(1, 5, &[("wangyang", t.clone()), ("oracle", t)]);
        assert_eq!(code, EXIT_PASS);
        assert_eq!(report["first_difference"], Value::Null);
        assert_eq!(report["schema_version"], json!(SCHEMA_VERSION));
    }

    #[test]
    fn csv_view() {
        let t = NPointTable::from_fn(2, 4, |_| int(-1));
        let csv = tables_csv(&[("oracle", t)]);
        assert_eq!(csv, "formula,indices,value\noracle,1:1,-1\noracle,1:3,-1\noracle,3:1,-1\n");
    }

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from([
            "bkp-npoint", "npoint", "--coords", "c.json", "--n", "2", "--weight", "7", "--formula", "embedded",
        ])
        .unwrap();
        match cli.command {
            Command::Npoint(a) => {
                assert_eq!((a.n, a.max_weight, a.formula), (2, 7, Formula::Embedded));
                assert_eq!(a.format, Format::Json);
            }
            _ => panic!("wrong subcommand"),
        }
        assert!(Cli::try_parse_from(["bkp-npoint", "verify"]).is_err());
        assert!(Cli::try_parse_from(["bkp-npoint", "verify", "--check", "lemma", "--suite", "full"]).is_err());
        assert!(Cli::try_parse_from(["bkp-npoint", "npoint", "--coords", "c", "--n", "0", "--max-weight", "3"]).is_err());
    }
}
