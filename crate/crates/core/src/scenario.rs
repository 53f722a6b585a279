//! Scenario files: parameters, adversaries, inputs and a straight-line
//! program, plus the driver that runs one on the simulated network.
//!
//! ```text
//! [params]
//! n = 6
//! t = 1
//! m = 2
//! prime = 2147483647
//! seed = 7
//! z = 4
//! protocol = malicious
//!
//! [adversaries]
//! 6 = CorruptProductPoly
//!
//! [inputs]
//! A = random
//! B = 1 2 3 4; 5 6 7 8; 1 1 1 1; 0 0 0 1
//!
//! [program]
//! SHARE A direct -> a
//! SHARE B reverse -> b
//! MUL a b -> c
//! REVEAL c
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::adversary::Strategy;
use crate::coins::{derive_rng, Coins, Randomness, SeededCoins};
use crate::gf::{is_prime, FMatrix, Field};
use crate::mpc::{direct_eval, recovery_threshold, run_program, semi_honest_threshold, ProgramOp};
use crate::net::{NetParams, Network, Record, Transcript};
use crate::sharing::{Direction, PartyId};
use crate::subroutines::Mode;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct ScenarioError {
    /// 1-based; 0 for whole-file checks.
    pub line: usize,
    pub msg: String,
}

fn err(line: usize, msg: impl Into<String>) -> ScenarioError {
    ScenarioError {
        line,
        msg: msg.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    Malicious,
    SemiHonest,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Malicious => "malicious",
            Protocol::SemiHonest => "semi-honest",
        }
    }

    pub fn mode(self) -> Mode {
        match self {
            Protocol::Malicious => Mode::Robust,
            Protocol::SemiHonest => Mode::Plain,
        }
    }

    /// Smallest worker count the protocol is specified for.
    pub fn min_workers(self, m: usize, t: usize) -> usize {
        match self {
            Protocol::Malicious => recovery_threshold(m, t),
            Protocol::SemiHonest => semi_honest_threshold(m, t),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InputSpec {
    Random,
    Rows(Vec<Vec<u64>>),
}

pub const MAX_PARTIES: usize = 4096;
pub const MAX_DIM: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub n: usize,
    pub t: usize,
    pub m: usize,
    pub prime: u64,
    pub seed: u64,
    pub z: usize,
    pub protocol: Protocol,
    /// Skip the worker-count check (used to probe below the threshold).
    pub sub_threshold: bool,
    pub adversaries: BTreeMap<PartyId, Strategy>,
    pub inputs: Vec<(String, InputSpec)>,
    pub program: Vec<ProgramOp>,
}

impl Scenario {
    /// Shares `A` directly and `B` in reverse, multiplies and reveals.
    pub fn standard(
        n: usize,
        t: usize,
        m: usize,
        prime: u64,
        seed: u64,
        protocol: Protocol,
    ) -> Self {
        let op = |s: &str| parse_op(s, 0).expect("well-formed");
        Scenario {
            n,
            t,
            m,
            prime,
            seed,
            z: 2 * m,
            protocol,
            sub_threshold: false,
            adversaries: BTreeMap::new(),
            inputs: vec![
                ("A".into(), InputSpec::Random),
                ("B".into(), InputSpec::Random),
            ],
            program: vec![
                op("SHARE A direct -> a"),
                op("SHARE B reverse -> b"),
                op("MUL a b -> c"),
                op("REVEAL c"),
            ],
        }
    }

    pub fn field(&self) -> Field {
        Field::new(self.prime).expect("validated prime")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.n == 0 || self.m == 0 {
            return Err(err(0, "n and m must be positive"));
        }
        if self.prime < 2 || !is_prime(self.prime) {
            return Err(err(0, format!("{} is not prime", self.prime)));
        }
        if self.prime <= self.n as u64 {
            return Err(err(
                0,
                format!("prime {} must exceed n = {}", self.prime, self.n),
            ));
        }
        if self.prime > 1 << 62 {
            return Err(err(0, "prime must stay below 2^62"));
        }
        if self.n > MAX_PARTIES || self.t > self.n {
            return Err(err(0, format!("need t <= n <= {MAX_PARTIES}")));
        }
        if self.z > MAX_DIM {
            return Err(err(0, format!("z must not exceed {MAX_DIM}")));
        }
        if self.z == 0 || !self.z.is_multiple_of(self.m) {
            return Err(err(
                0,
                format!(
                    "z = {} must be a positive multiple of m = {}",
                    self.z, self.m
                ),
            ));
        }
        if self.adversaries.len() > self.t {
            return Err(err(
                0,
                format!(
                    "{} adversaries exceed t = {}",
                    self.adversaries.len(),
                    self.t
                ),
            ));
        }
        if let Some(p) = self.adversaries.keys().find(|&&p| p == 0 || p > self.n) {
            return Err(err(0, format!("adversary id {p} outside 1..={}", self.n)));
        }
        let need = self.protocol.min_workers(self.m, self.t);
        if !self.sub_threshold && self.n < need {
            return Err(err(
                0,
                format!(
                    "{} protocol needs n >= {need}, got {}",
                    self.protocol.name(),
                    self.n
                ),
            ));
        }
        for (name, spec) in &self.inputs {
            if let InputSpec::Rows(rows) = spec {
                let cols = rows.first().map_or(0, Vec::len);
                if cols == 0 || cols % self.m != 0 || rows.iter().any(|r| r.len() != cols) {
                    return Err(err(
                        0,
                        format!(
                            "input {name} must be rectangular with a multiple of {} columns",
                            self.m
                        ),
                    ));
                }
                if rows.iter().flatten().any(|&v| v >= self.prime) {
                    return Err(err(
                        0,
                        format!("input {name} has entries outside the field"),
                    ));
                }
            }
        }
        self.type_check()
    }

    fn type_check(&self) -> Result<(), ScenarioError> {
        let mut dirs: HashMap<&str, Direction> = HashMap::new();
        let get = |dirs: &HashMap<&str, Direction>, r: &str, i: usize| {
            dirs.get(r)
                .copied()
                .ok_or_else(|| err(0, format!("op {i}: register {r} is undefined")))
        };
        for (i, op) in self.program.iter().enumerate() {
            match op {
                ProgramOp::Share { input, dir, out } => {
                    if !self.inputs.iter().any(|(n, _)| n == input) {
                        return Err(err(0, format!("op {i}: unknown input {input}")));
                    }
                    dirs.insert(out, *dir);
                }
                ProgramOp::Mul { lhs, rhs, out } => {
                    if get(&dirs, lhs, i)? != Direction::Direct
                        || get(&dirs, rhs, i)? != Direction::Reverse
                    {
                        return Err(err(
                            0,
                            format!("op {i}: MUL needs a direct left and a reverse right operand"),
                        ));
                    }
                    dirs.insert(out, Direction::Direct);
                }
                ProgramOp::Add { lhs, rhs, out } => {
                    let d = get(&dirs, lhs, i)?;
                    if get(&dirs, rhs, i)? != d {
                        return Err(err(0, format!("op {i}: ADD operands differ in direction")));
                    }
                    dirs.insert(out, d);
                }
                ProgramOp::Transpose { arg, out } => {
                    if get(&dirs, arg, i)? != Direction::Direct {
                        return Err(err(0, format!("op {i}: TRANSPOSE needs a direct share")));
                    }
                    dirs.insert(out, Direction::Direct);
                }
                ProgramOp::DirectToReverse { arg, out } => {
                    if get(&dirs, arg, i)? != Direction::Direct {
                        return Err(err(0, format!("op {i}: D2R needs a direct share")));
                    }
                    dirs.insert(out, Direction::Reverse);
                }
                ProgramOp::ReverseToDirect { arg, out } => {
                    if get(&dirs, arg, i)? != Direction::Reverse {
                        return Err(err(0, format!("op {i}: R2D needs a reverse share")));
                    }
                    dirs.insert(out, Direction::Direct);
                }
                ProgramOp::Reveal { arg } => {
                    get(&dirs, arg, i)?;
                }
            }
        }
        Ok(())
    }

    /// Concrete input matrices; random ones come from the run seed.
    pub fn input_matrices(&self) -> Vec<(String, FMatrix)> {
        let field = self.field();
        self.inputs
            .iter()
            .map(|(name, spec)| {
                let x = match spec {
                    InputSpec::Random => {
                        let mut rng = derive_rng(self.seed, &format!("input/{name}"));
                        rng.matrix(field, self.z, self.z)
                    }
                    InputSpec::Rows(rows) => {
                        FMatrix::from_rows(field, rows).expect("validated shape")
                    }
                };
                (name.clone(), x)
            })
            .collect()
    }

    /// Outputs computed in the clear.
    pub fn expected(&self) -> Result<Vec<(String, FMatrix)>, String> {
        direct_eval(&self.program, &self.input_matrices())
    }

    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        let mut section = String::new();
        let mut params: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut adversaries = BTreeMap::new();
        let mut inputs: Vec<(String, InputSpec)> = Vec::new();
        let mut program = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(ln, "unterminated section header"))?;
                if !["params", "adversaries", "inputs", "program"].contains(&name) {
                    return Err(err(ln, format!("unknown section [{name}]")));
                }
                section = name.to_string();
                continue;
            }
            if section == "program" {
                program.push(parse_op(line, ln)?);
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(ln, "expected key = value"))?;
            let (k, v) = (k.trim(), v.trim());
            match section.as_str() {
                "params" => {
                    if params.insert(k.to_string(), (ln, v.to_string())).is_some() {
                        return Err(err(ln, format!("duplicate parameter {k}")));
                    }
                }
                "adversaries" => {
                    let id: PartyId = k
                        .parse()
                        .map_err(|_| err(ln, format!("bad party id {k:?}")))?;
                    let s: Strategy = v.parse().map_err(|e: String| err(ln, e))?;
                    if adversaries.insert(id, s).is_some() {
                        return Err(err(ln, format!("party {id} listed twice")));
                    }
                }
                "inputs" => {
                    if !is_ident(k) {
                        return Err(err(ln, format!("bad input name {k:?}")));
                    }
                    if inputs.iter().any(|(n, _)| n == k) {
                        return Err(err(ln, format!("input {k} defined twice")));
                    }
                    inputs.push((k.to_string(), parse_input(v, ln)?));
                }
                _ => return Err(err(ln, "content outside a section")),
            }
        }

        let mut take = |key: &str| params.remove(key);
        let num = |e: Option<(usize, String)>, key: &str| -> Result<Option<u64>, ScenarioError> {
            e.map(|(ln, v)| {
                v.parse::<u64>()
                    .map_err(|_| err(ln, format!("{key} must be an unsigned integer")))
            })
            .transpose()
        };
        let need =
            |v: Option<u64>, key: &str| v.ok_or_else(|| err(0, format!("missing parameter {key}")));
        let small = |v: u64, key: &str| -> Result<usize, ScenarioError> {
            if v > 1 << 20 {
                Err(err(0, format!("{key} = {v} is too large")))
            } else {
                Ok(v as usize)
            }
        };
        let n = small(need(num(take("n"), "n")?, "n")?, "n")?;
        let t = small(need(num(take("t"), "t")?, "t")?, "t")?;
        let m = small(need(num(take("m"), "m")?, "m")?, "m")?;
        let prime = num(take("prime"), "prime")?.unwrap_or(Field::DEFAULT_PRIME);
        let seed = num(take("seed"), "seed")?.unwrap_or(0);
        let z = match num(take("z"), "z")? {
            Some(z) => small(z, "z")?,
            None => 2 * m,
        };
        let protocol = match take("protocol") {
            None => Protocol::Malicious,
            Some((_, v)) if v == "malicious" => Protocol::Malicious,
            Some((_, v)) if v == "semi-honest" => Protocol::SemiHonest,
            Some((ln, v)) => return Err(err(ln, format!("unknown protocol {v:?}"))),
        };
        let sub_threshold = match take("sub_threshold") {
            None => false,
            Some((ln, v)) => v
                .parse::<bool>()
                .map_err(|_| err(ln, "sub_threshold must be true or false"))?,
        };
        if let Some((key, (ln, _))) = params.into_iter().next() {
            return Err(err(ln, format!("unknown parameter {key}")));
        }
        let s = Scenario {
            n,
            t,
            m,
            prime,
            seed,
            z,
            protocol,
            sub_threshold,
            adversaries,
            inputs,
            program,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("[params]\n");
        out += &format!(
            "n = {}\nt = {}\nm = {}\nprime = {}\nseed = {}\nz = {}\nprotocol = {}\n",
            self.n,
            self.t,
            self.m,
            self.prime,
            self.seed,
            self.z,
            self.protocol.name()
        );
        if self.sub_threshold {
            out += "sub_threshold = true\n";
        }
        out += "\n[adversaries]\n";
        for (p, s) in &self.adversaries {
            out += &format!("{p} = {s}\n");
        }
        out += "\n[inputs]\n";
        for (name, spec) in &self.inputs {
            match spec {
                InputSpec::Random => out += &format!("{name} = random\n"),
                InputSpec::Rows(rows) => {
                    let rows: Vec<String> = rows
                        .iter()
                        .map(|r| r.iter().map(u64::to_string).collect::<Vec<_>>().join(" "))
                        .collect();
                    out += &format!("{name} = {}\n", rows.join("; "));
                }
            }
        }
        out += "\n[program]\n";
        for op in &self.program {
            out += &format!("{}\n", OpText(op));
        }
        out
    }
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_input(v: &str, ln: usize) -> Result<InputSpec, ScenarioError> {
    if v == "random" {
        return Ok(InputSpec::Random);
    }
    let rows = v
        .split(';')
        .map(|row| {
            row.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|x| {
                    x.parse::<u64>()
                        .map_err(|_| err(ln, format!("bad matrix entry {x:?}")))
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    if rows.is_empty() || rows[0].is_empty() {
        return Err(err(ln, "empty matrix"));
    }
    Ok(InputSpec::Rows(rows))
}

fn parse_op(line: &str, ln: usize) -> Result<ProgramOp, ScenarioError> {
    let (lhs, out) = match line.split_once("->") {
        Some((l, r)) => (l.trim(), Some(r.trim())),
        None => (line, None),
    };
    let words: Vec<&str> = lhs.split_whitespace().collect();
    let reg = |s: &str| -> Result<String, ScenarioError> {
        if is_ident(s) {
            Ok(s.to_string())
        } else {
            Err(err(ln, format!("bad register name {s:?}")))
        }
    };
    let out = |need: bool| -> Result<String, ScenarioError> {
        match (out, need) {
            (Some(o), true) => reg(o),
            (None, false) => Ok(String::new()),
            (Some(_), false) => Err(err(ln, "REVEAL takes no destination")),
            (None, true) => Err(err(ln, "missing '-> destination'")),
        }
    };
    let arity = |k: usize| {
        if words.len() == k + 1 {
            Ok(())
        } else {
            Err(err(ln, format!("{} takes {k} operand(s)", words[0])))
        }
    };
    let op = words.first().copied().unwrap_or("");
    Ok(match op.to_ascii_uppercase().as_str() {
        "SHARE" => {
            arity(2)?;
            let dir = match words[2] {
                "direct" => Direction::Direct,
                "reverse" => Direction::Reverse,
                d => return Err(err(ln, format!("unknown direction {d:?}"))),
            };
            ProgramOp::Share {
                input: reg(words[1])?,
                dir,
                out: out(true)?,
            }
        }
        "MUL" | "ADD" => {
            arity(2)?;
            let (lhs, rhs, o) = (reg(words[1])?, reg(words[2])?, out(true)?);
            if op.eq_ignore_ascii_case("MUL") {
                ProgramOp::Mul { lhs, rhs, out: o }
            } else {
                ProgramOp::Add { lhs, rhs, out: o }
            }
        }
        "TRANSPOSE" | "D2R" | "R2D" => {
            arity(1)?;
            let (arg, o) = (reg(words[1])?, out(true)?);
            match op.to_ascii_uppercase().as_str() {
                "TRANSPOSE" => ProgramOp::Transpose { arg, out: o },
                "D2R" => ProgramOp::DirectToReverse { arg, out: o },
                _ => ProgramOp::ReverseToDirect { arg, out: o },
            }
        }
        "REVEAL" => {
            arity(1)?;
            out(false)?;
            ProgramOp::Reveal {
                arg: reg(words[1])?,
            }
        }
        _ => return Err(err(ln, format!("unknown operation {op:?}"))),
    })
}

struct OpText<'a>(&'a ProgramOp);

impl fmt::Display for OpText<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            ProgramOp::Share { input, dir, out } => write!(f, "SHARE {input} {dir} -> {out}"),
            ProgramOp::Mul { lhs, rhs, out } => write!(f, "MUL {lhs} {rhs} -> {out}"),
            ProgramOp::Add { lhs, rhs, out } => write!(f, "ADD {lhs} {rhs} -> {out}"),
            ProgramOp::Transpose { arg, out } => write!(f, "TRANSPOSE {arg} -> {out}"),
            ProgramOp::DirectToReverse { arg, out } => write!(f, "D2R {arg} -> {out}"),
            ProgramOp::ReverseToDirect { arg, out } => write!(f, "R2D {arg} -> {out}"),
            ProgramOp::Reveal { arg } => write!(f, "REVEAL {arg}"),
        }
    }
}

/// Runs a validated scenario with coins derived from its seed.
pub fn run_scenario(s: &Scenario) -> Transcript {
    run_scenario_with(s, Box::new(SeededCoins::new(s.seed)), false)
}

/// Runs a scenario with an explicit randomness source. `leaky_sources`
/// makes input owners share without masking.
pub fn run_scenario_with(s: &Scenario, coins: Box<dyn Coins>, leaky_sources: bool) -> Transcript {
    let params = NetParams {
        field: s.field(),
        n: s.n,
        t: s.t,
        m: s.m,
    };
    let mut net = Network::new(params, s.adversaries.clone(), coins, s.seed);
    net.leaky_sources = leaky_sources;
    net.record(Record::Header {
        prime: s.prime,
        n: s.n,
        t: s.t,
        m: s.m,
        seed: s.seed,
    });
    let outcome = run_program(&mut net, s.protocol.mode(), &s.program, &s.input_matrices());
    if let Err(e) = &outcome {
        net.record(Record::Abort {
            reason: e.to_string(),
        });
    }
    Transcript {
        records: net.into_records(),
        outcome,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "
[params]
n = 6
t = 1
m = 2
prime = 101
seed = 3

[adversaries]
6 = silent

[inputs]
A = random
B = 1 2 3 4; 5 6 7 8; 1 1 1 1; 0 0 0 1

[program]
SHARE A direct -> a
SHARE B reverse -> b
MUL a b -> c
REVEAL c
";

    #[test]
    fn parse_and_print_round_trip() {
        let s = Scenario::parse(SAMPLE).unwrap();
        assert_eq!(s.z, 4);
        assert_eq!(s.adversaries[&6], Strategy::Silent);
        assert_eq!(Scenario::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = Scenario::parse("[params]\nn = x\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = Scenario::parse("[program]\nFOO a\n").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn type_check_rejects_wrong_directions() {
        let bad = SAMPLE.replace("MUL a b", "MUL b a");
        assert!(Scenario::parse(&bad).unwrap_err().msg.contains("MUL"));
    }

    #[test]
    fn runs_correctly_against_one_adversary() {
        for strat in [
            "silent",
            "CorruptProductPoly",
            "WrongSubshareConstant",
            "BadGapCoefficient",
        ] {
            let s = Scenario::parse(&SAMPLE.replace("silent", strat)).unwrap();
            let tr = run_scenario(&s);
            assert_eq!(
                tr.outcome.as_ref().unwrap(),
                &s.expected().unwrap(),
                "{strat}"
            );
        }
    }

    #[test]
    fn threshold_is_enforced() {
        let bad = SAMPLE
            .replace("n = 6", "n = 5")
            .replace("6 = silent", "5 = silent");
        assert!(Scenario::parse(&bad).is_err());
        let ok = bad.replace("seed = 3", "seed = 3\nsub_threshold = true");
        assert!(Scenario::parse(&ok).is_ok());
    }
}
