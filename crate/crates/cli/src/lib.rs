//! Command implementations behind the `compc` binary. Every command writes
//! line-delimited JSON records and returns a process exit code.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use compc::adversary::Strategy;
use compc::audit::{parse_grid, run_case};
use compc::gf::{FMatrix, Field};
use compc::mpc::recovery_threshold;
use compc::net::{ProtocolError, Transcript};
use compc::scenario::{run_scenario, Protocol, Scenario};

pub const EXIT_OK: i32 = 0;
/// The run finished but the master output differs from direct evaluation.
pub const EXIT_INCORRECT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ABORT: i32 = 3;
pub const EXIT_LEAK: i32 = 4;

/// Largest worker count the sweep simulates; bigger rows only report the
/// formula.
pub const SWEEP_SIMULATION_LIMIT: usize = 13;

const MAX_SWEEP_VALUE: usize = 10_000;

#[derive(Parser, Debug)]
#[command(
    name = "compc",
    version,
    about = "Coded multiparty matrix multiplication simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one scenario file.
    Run(RunArgs),
    /// Sweep (m, t, strategy) at the recovery threshold.
    Sweep(GridArgs),
    /// Run privacy audits.
    Audit(GridArgs),
    /// Time the standard multiplication program.
    Bench(GridArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub prime: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Strategy assigned to the last t workers, replacing the file's list.
    #[arg(long)]
    pub strategy: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Directory receiving transcript.jsonl and summary.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GridArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub grid: Option<String>,
    /// Seeds per sweep cell, Monte-Carlo samples, or bench repetitions.
    #[arg(long)]
    pub samples: Option<usize>,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Parses arguments, sizes the thread pool from `COMPC_THREADS` and
/// dispatches.
pub fn main_with(args: impl IntoIterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = std::env::var("COMPC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Run(a) => cmd_run(&a, &mut stdout),
        Command::Sweep(a) => cmd_sweep(&a, &mut stdout),
        Command::Audit(a) => cmd_audit(&a, &mut stdout),
        Command::Bench(a) => cmd_bench(&a, &mut stdout),
    }
}

fn fail(code: i32, msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    code
}

fn write_lines(out: Option<&Path>, stdout: &mut dyn Write, lines: &[Value]) -> Result<(), String> {
    let mut text = String::new();
    for l in lines {
        text += &l.to_string();
        text.push('\n');
    }
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

impl Overrides {
    pub fn apply(&self, s: &mut Scenario) -> Result<(), String> {
        if let Some(n) = self.n {
            s.n = n;
        }
        if let Some(t) = self.t {
            s.t = t;
        }
        if let Some(m) = self.m {
            s.m = m;
        }
        if let Some(p) = self.prime {
            s.prime = p;
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(name) = &self.strategy {
            let strategy = parse_strategy(name)?;
            s.adversaries = (s.n.saturating_sub(s.t) + 1..=s.n)
                .map(|p| (p, strategy))
                .collect();
        }
        s.validate().map_err(|e| e.msg)
    }
}

/// SHA-256 over the shape and entries of a matrix.
pub fn matrix_digest(m: &FMatrix) -> String {
    let mut h = Sha256::new();
    h.update((m.rows() as u64).to_le_bytes());
    h.update((m.cols() as u64).to_le_bytes());
    for v in m.data() {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Summary record of one run plus its exit code.
pub fn summarize(s: &Scenario, tr: &Transcript) -> (Value, i32) {
    let expected = s.expected().ok();
    let mut all = Sha256::new();
    let (outputs, correct, abort, code) = match &tr.outcome {
        Ok(outs) => {
            let list: Vec<Value> = outs
                .iter()
                .map(|(reg, m)| {
                    let d = matrix_digest(m);
                    all.update(reg.as_bytes());
                    all.update(d.as_bytes());
                    json!({"register": reg, "digest": d})
                })
                .collect();
            let correct = expected.as_ref() == Some(outs);
            (
                list,
                correct,
                Value::Null,
                if correct { EXIT_OK } else { EXIT_INCORRECT },
            )
        }
        Err(e) => {
            let code = match e {
                ProtocolError::ParameterViolation(_) => EXIT_CONFIG,
                _ => EXIT_ABORT,
            };
            (Vec::new(), false, Value::String(e.to_string()), code)
        }
    };
    let elims: Vec<Value> = tr
        .records
        .iter()
        .filter_map(|r| match r {
            compc::net::Record::Elimination {
                party,
                reason,
                phase,
            } => Some(json!({"party": party, "reason": reason.name(), "phase": phase})),
            _ => None,
        })
        .collect();
    let summary = json!({
        "n": s.n,
        "t": s.t,
        "m": s.m,
        "prime": s.prime,
        "seed": s.seed,
        "protocol": s.protocol.name(),
        "adversaries": s.adversaries.iter().map(|(p, st)| json!({"party": p, "strategy": st.name()})).collect::<Vec<_>>(),
        "outputs": outputs,
        "master_output_digest": if tr.outcome.is_ok() { Value::String(hex::encode(all.finalize())) } else { Value::Null },
        "eliminations": elims,
        "correct": correct,
        "abort": abort,
    });
    (summary, code)
}

pub fn cmd_run(args: &RunArgs, stdout: &mut dyn Write) -> i32 {
    let text = match fs::read_to_string(&args.scenario) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_CONFIG, format!("{}: {e}", args.scenario.display())),
    };
    let mut s = match Scenario::parse(&text) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_CONFIG, format!("{}: {e}", args.scenario.display())),
    };
    if let Err(e) = args.overrides.apply(&mut s) {
        return fail(EXIT_CONFIG, e);
    }
    let tr = run_scenario(&s);
    let (summary, code) = summarize(&s, &tr);
    let res = match &args.out {
        Some(dir) => fs::create_dir_all(dir)
            .and_then(|_| fs::write(dir.join("transcript.jsonl"), tr.to_lines()))
            .and_then(|_| fs::write(dir.join("summary.json"), format!("{summary}\n")))
            .map_err(|e| format!("{}: {e}", dir.display())),
        None => writeln!(stdout, "{summary}").map_err(|e| e.to_string()),
    };
    if let Err(e) = res {
        return fail(EXIT_CONFIG, e);
    }
    if let Value::String(reason) = &summary["abort"] {
        eprintln!("aborted: {reason}");
    }
    code
}

/// Inclusive range `a..b`, a single value, or a comma list.
fn parse_values(v: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a
                .trim()
                .parse()
                .map_err(|_| format!("bad range {part:?}"))?;
            let b: usize = b
                .trim()
                .parse()
                .map_err(|_| format!("bad range {part:?}"))?;
            if b < a || b - a > 1000 {
                return Err(format!("bad range {part:?}"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| format!("bad value {part:?}"))?);
        }
    }
    if out.iter().any(|&v| v > MAX_SWEEP_VALUE) {
        return Err(format!("values above {MAX_SWEEP_VALUE} in {v:?}"));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepGrid {
    pub ms: Vec<usize>,
    pub ts: Vec<usize>,
    pub strategies: Vec<Strategy>,
}

/// Parses `m=1..2;t=0..2;strategy=all`. Missing keys default to m=1..2,
/// t=1..2 and every strategy.
pub fn parse_sweep_grid(grid: &str) -> Result<SweepGrid, String> {
    let mut g = SweepGrid {
        ms: vec![1, 2],
        ts: vec![1, 2],
        strategies: Strategy::ALL.to_vec(),
    };
    for item in grid.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got {item:?}"))?;
        match k.trim() {
            "m" => g.ms = parse_values(v)?,
            "t" => g.ts = parse_values(v)?,
            "strategy" => {
                g.strategies = if v.trim() == "all" {
                    Strategy::ALL.to_vec()
                } else {
                    v.split(',')
                        .map(|s| parse_strategy(s.trim()))
                        .collect::<Result<_, _>>()?
                }
            }
            other => return Err(format!("unknown grid key {other:?}")),
        }
    }
    if g.ms.contains(&0) {
        return Err("m must be positive".into());
    }
    if g.strategies.is_empty() {
        return Err("empty strategy list".into());
    }
    Ok(g)
}

struct Cell {
    m: usize,
    t: usize,
    strategy: Option<Strategy>,
}

fn sweep_cell(cell: &Cell, seeds: usize, base_seed: u64, prime: u64) -> Value {
    let (m, t) = (cell.m, cell.t);
    let formula = recovery_threshold(m, t);
    let protocol = if t == 0 {
        Protocol::SemiHonest
    } else {
        Protocol::Malicious
    };
    let n = protocol.min_workers(m, t);
    let strategy = cell
        .strategy
        .map_or(Value::Null, |s| Value::String(s.name().into()));
    let mut row = json!({
        "m": m,
        "t": t,
        "n": n,
        "formula": formula,
        "strategy": strategy,
        "protocol": protocol.name(),
    });
    if n > SWEEP_SIMULATION_LIMIT {
        row["simulated"] = json!(false);
        return row;
    }
    let start = Instant::now();
    let mut correct = 0;
    let mut elims = 0;
    let mut honest_elims = 0;
    for k in 0..seeds {
        let mut s = Scenario::standard(n, t, m, prime, base_seed.wrapping_add(k as u64), protocol);
        if let Some(st) = cell.strategy {
            s.adversaries = (n - t + 1..=n).map(|p| (p, st)).collect();
        }
        if s.validate().is_err() {
            continue;
        }
        let tr = run_scenario(&s);
        if tr.outcome.as_ref().ok() == s.expected().ok().as_ref() {
            correct += 1;
        }
        for (p, _) in tr.eliminations() {
            elims += 1;
            if !s.adversaries.contains_key(&p) {
                honest_elims += 1;
            }
        }
    }
    row["simulated"] = json!(true);
    row["runs"] = json!(seeds);
    row["correct"] = json!(correct == seeds);
    row["correct_runs"] = json!(correct);
    row["eliminations"] = json!(elims);
    row["honest_eliminations"] = json!(honest_elims);
    row["wall_ms"] = json!(start.elapsed().as_millis() as u64);
    row
}

pub fn sweep_rows(grid: &SweepGrid, seeds: usize, base_seed: u64, prime: u64) -> Vec<Value> {
    let mut cells = Vec::new();
    for &m in &grid.ms {
        for &t in &grid.ts {
            if t == 0 {
                cells.push(Cell {
                    m,
                    t,
                    strategy: None,
                });
            } else {
                cells.extend(grid.strategies.iter().map(|&s| Cell {
                    m,
                    t,
                    strategy: Some(s),
                }));
            }
        }
    }
    cells
        .par_iter()
        .map(|c| sweep_cell(c, seeds, base_seed, prime))
        .collect()
}

pub fn cmd_sweep(args: &GridArgs, stdout: &mut dyn Write) -> i32 {
    let grid = match parse_sweep_grid(args.grid.as_deref().unwrap_or("")) {
        Ok(g) => g,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let prime = args.overrides.prime.unwrap_or(Field::DEFAULT_PRIME);
    if Field::new(prime).is_err() {
        return fail(EXIT_CONFIG, format!("{prime} is not a usable prime"));
    }
    let rows = sweep_rows(
        &grid,
        args.samples.unwrap_or(1).max(1),
        args.overrides.seed.unwrap_or(0),
        prime,
    );
    if let Err(e) = write_lines(args.out.as_deref(), stdout, &rows) {
        return fail(EXIT_CONFIG, e);
    }
    let bad = rows
        .iter()
        .any(|r| r["simulated"] == json!(true) && r["correct"] != json!(true));
    if bad {
        EXIT_INCORRECT
    } else {
        EXIT_OK
    }
}

pub fn cmd_audit(args: &GridArgs, stdout: &mut dyn Write) -> i32 {
    let cases = match &args.grid {
        Some(g) => parse_grid(g),
        None => parse_grid("all"),
    };
    let cases = match cases {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let samples = args.samples.unwrap_or(10_000);
    let seed = args.overrides.seed.unwrap_or(0);
    let mut lines = Vec::new();
    let mut leak = false;
    for case in &cases {
        match run_case(case, samples, seed) {
            Ok(found) => {
                for l in found {
                    leak |= l.leaks();
                    lines.push(l.to_json());
                }
            }
            Err(e) => return fail(EXIT_ABORT, format!("audit {case}: {e}")),
        }
    }
    if let Err(e) = write_lines(args.out.as_deref(), stdout, &lines) {
        return fail(EXIT_CONFIG, e);
    }
    if leak {
        EXIT_LEAK
    } else {
        EXIT_OK
    }
}

pub fn cmd_bench(args: &GridArgs, stdout: &mut dyn Write) -> i32 {
    let o = &args.overrides;
    let (m, t) = (o.m.unwrap_or(2), o.t.unwrap_or(1));
    let protocol = if t == 0 {
        Protocol::SemiHonest
    } else {
        Protocol::Malicious
    };
    let n = o.n.unwrap_or_else(|| protocol.min_workers(m, t));
    let mut s = Scenario::standard(
        n,
        t,
        m,
        o.prime.unwrap_or(Field::DEFAULT_PRIME),
        o.seed.unwrap_or(0),
        protocol,
    );
    if let Some(name) = &o.strategy {
        match parse_strategy(name) {
            Ok(st) => s.adversaries = (n.saturating_sub(t) + 1..=n).map(|p| (p, st)).collect(),
            Err(e) => return fail(EXIT_CONFIG, e),
        }
    }
    if let Err(e) = s.validate() {
        return fail(EXIT_CONFIG, e.msg);
    }
    let reps = args.samples.unwrap_or(5).max(1);
    let mut times = Vec::with_capacity(reps);
    let mut correct = true;
    for k in 0..reps {
        s.seed = o.seed.unwrap_or(0).wrapping_add(k as u64);
        let start = Instant::now();
        let tr = run_scenario(&s);
        times.push(start.elapsed().as_secs_f64() * 1e3);
        correct &= tr.outcome.ok() == s.expected().ok();
    }
    let mean = times.iter().sum::<f64>() / reps as f64;
    let row = json!({
        "m": m, "t": t, "n": n, "z": s.z,
        "protocol": protocol.name(),
        "runs": reps,
        "mean_ms": mean,
        "min_ms": times.iter().copied().fold(f64::INFINITY, f64::min),
        "max_ms": times.iter().copied().fold(0.0, f64::max),
        "correct": correct,
    });
    if let Err(e) = write_lines(args.out.as_deref(), stdout, &[row]) {
        return fail(EXIT_CONFIG, e);
    }
    if correct {
        EXIT_OK
    } else {
        EXIT_INCORRECT
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_grid_syntax() {
        let g = parse_sweep_grid("m=1..3;t=0,2;strategy=silent,FalseComplainer").unwrap();
        assert_eq!(g.ms, vec![1, 2, 3]);
        assert_eq!(g.ts, vec![0, 2]);
        assert_eq!(
            g.strategies,
            vec![Strategy::Silent, Strategy::FalseComplainer]
        );
        assert!(parse_sweep_grid("m=0").is_err());
        assert!(parse_sweep_grid("q=1").is_err());
    }

    #[test]
    fn large_rows_are_formula_only() {
        let g = parse_sweep_grid("m=20;t=20;strategy=silent").unwrap();
        let rows = sweep_rows(&g, 1, 0, Field::DEFAULT_PRIME);
        assert_eq!(rows[0]["n"], json!(99));
        assert_eq!(rows[0]["simulated"], json!(false));
    }
}
