//! Command-line harness. Exit status 0 on success, 1 when a check fails or a
//! budget cuts a computation short (the report then carries
//! `"partial": true`), 2 on input errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::io;
use crate::learner::{pac_experiment, ConceptMode, LearnerConfig};
use crate::packing::{fiber_cover_search, greedy_packing, verify_certificate, ExprBudget};
use crate::rational::{self, Rational};
use crate::regularity::{
    decomposition_from_net, slice_net, slicewise_packing_search, slicewise_vck,
    verify_decomposition, verify_slicewise_certificate, VerifyMode,
};
use crate::relation::{ProductDomain, ProductMeasure};
use crate::vcdim::{sauer_shelah_check_with, vck_dimension, SauerOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vck", version, about = "Higher-arity VC dimension toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// VC_k dimension of a family.
    Dim(DimArgs),
    /// Trace-count check against the Zarankiewicz bound on every m-box.
    Sauer(SauerArgs),
    /// Greedy packing, or fiber covers when a budget is given.
    Pack(PackArgs),
    /// Seeded learning experiment.
    Learn(LearnArgs),
    /// Slice-wise dimension, slice nets and decomposition checks.
    Regularity(RegularityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    AlmostAll,
    All,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    #[arg(long)]
    pub budget_terms: Option<usize>,
    #[arg(long)]
    pub budget_fibers: Option<usize>,
    #[arg(long)]
    pub budget_centers: Option<usize>,
    #[arg(long)]
    pub fiber_arity_cap: Option<usize>,
    #[arg(long)]
    pub center_fibers: Option<bool>,
    #[arg(long)]
    pub max_candidates: Option<u64>,
}

impl BudgetArgs {
    fn given(&self) -> bool {
        self.budget_terms.is_some()
            || self.budget_fibers.is_some()
            || self.budget_centers.is_some()
            || self.fiber_arity_cap.is_some()
            || self.center_fibers.is_some()
            || self.max_candidates.is_some()
    }

    fn resolve(&self, k: usize) -> ExprBudget {
        let mut b = ExprBudget::for_arity(k);
        if let Some(v) = self.budget_terms {
            b.max_dnf_terms = v;
        }
        if let Some(v) = self.budget_fibers {
            b.max_fibers = v;
        }
        if let Some(v) = self.budget_centers {
            b.max_centers_used = v;
        }
        if let Some(v) = self.fiber_arity_cap {
            b.fiber_arity_cap = v;
        }
        if let Some(v) = self.center_fibers {
            b.center_fibers = v;
        }
        if let Some(v) = self.max_candidates {
            b.max_candidates = v;
        }
        b
    }
}

#[derive(Debug, Args)]
pub struct DimArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SauerArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PackArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub measure: Option<PathBuf>,
    #[arg(long, value_parser = parse_rational)]
    pub epsilon: Rational,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub measure: Option<PathBuf>,
    #[arg(long, value_parser = parse_rational)]
    pub epsilon: Rational,
    #[arg(long, value_parser = parse_rational)]
    pub delta: Rational,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    /// Anchors per amplification block.
    #[arg(long, default_value_t = 2)]
    pub n1: usize,
    #[arg(long, value_parser = parse_rational)]
    pub rho_hat: Option<Rational>,
    /// Run on this many seeded concepts instead of every member.
    #[arg(long)]
    pub concepts: Option<usize>,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Debug, Args)]
pub struct RegularityArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub measure: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, value_parser = parse_rational)]
    pub epsilon: Rational,
    #[arg(long, value_enum, default_value_t = Mode::All)]
    pub mode: Mode,
    /// A decomposition to verify instead of the one induced by the slice net.
    #[arg(long)]
    pub decomposition: Option<PathBuf>,
    /// Run the slice-wise packing search with this many anchors.
    #[arg(long)]
    pub anchors: Option<usize>,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

fn parse_rational(s: &str) -> std::result::Result<Rational, String> {
    rational::parse(s).map_err(|e| e.to_string())
}

/// A finished report: its JSON body, the rows of its CSV projection, and
/// its exit status.
pub struct Report {
    pub body: Value,
    pub rows: Vec<Value>,
    pub status: i32,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn measure_for(path: Option<&Path>, domain: &ProductDomain) -> Result<ProductMeasure> {
    match path {
        Some(p) => io::read_measure(p, domain),
        None => Ok(ProductMeasure::uniform(domain)),
    }
}

fn partial(command: &str, config: Value, err: &Error) -> Report {
    let lower_bound = match err {
        Error::BudgetExceeded { lower_bound, .. } => *lower_bound,
        _ => None,
    };
    Report {
        body: json!({
            "command": command,
            "config": config,
            "partial": true,
            "error": err.to_string(),
            "lower_bound": lower_bound,
        }),
        rows: Vec::new(),
        status: EXIT_CHECK_FAILED,
    }
}

/// Budget exhaustion becomes a partial report; other errors propagate.
fn or_partial<T>(
    r: Result<T>,
    command: &str,
    config: &Value,
) -> Result<std::result::Result<T, Report>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e @ Error::BudgetExceeded { .. }) => Ok(Err(partial(command, config.clone(), &e))),
        Err(e) => Err(e),
    }
}

macro_rules! try_partial {
    ($e:expr, $cmd:expr, $cfg:expr) => {
        match or_partial($e, $cmd, &$cfg)? {
            Ok(v) => v,
            Err(report) => return Ok(report),
        }
    };
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn run_dim(a: &DimArgs) -> Result<Report> {
    let family = io::read_family(&a.common.input)?;
    let config = json!({
        "input": path_str(&a.common.input),
        "sizes": family.domain().sizes(),
        "members": family.len(),
    });
    let r = try_partial!(vck_dimension(&family), "dim", config);
    let row = json!({ "vck": r.dimension, "witness": r.witness });
    Ok(Report {
        body: json!({
            "command": "dim",
            "config": config,
            "vck": r.dimension,
            "witness": r.witness,
        }),
        rows: vec![row],
        status: EXIT_OK,
    })
}

fn run_sauer(a: &SauerArgs) -> Result<Report> {
    let family = io::read_family(&a.common.input)?;
    let config = json!({
        "input": path_str(&a.common.input),
        "sizes": family.domain().sizes(),
        "members": family.len(),
        "m": a.m,
        "d": a.d,
        "seed": a.seed,
    });
    let opts = SauerOptions {
        seed: a.seed,
        ..SauerOptions::default()
    };
    let r = try_partial!(
        sauer_shelah_check_with(&family, a.m, a.d, &opts),
        "sauer",
        config
    );
    let mut body = to_value(&r);
    body["command"] = json!("sauer");
    body["config"] = config;
    Ok(Report {
        rows: r.rows.iter().map(to_value).collect(),
        status: if r.pass { EXIT_OK } else { EXIT_CHECK_FAILED },
        body,
    })
}

fn run_pack(a: &PackArgs) -> Result<Report> {
    let family = io::read_family(&a.common.input)?;
    let mu = measure_for(a.measure.as_deref(), family.domain())?;
    let k = family.arity();
    let use_fibers = a.budget.given();
    let budget = a.budget.resolve(k);
    let config = json!({
        "input": path_str(&a.common.input),
        "measure": a.measure.as_deref().map(path_str),
        "sizes": family.domain().sizes(),
        "members": family.len(),
        "epsilon": rational::format(&a.epsilon),
        "search": if use_fibers { "fiber_cover" } else { "greedy" },
        "budget": if use_fibers { to_value(&budget) } else { Value::Null },
    });
    let greedy = greedy_packing(&family, &mu, &a.epsilon)?;
    let cert = if use_fibers {
        try_partial!(
            fiber_cover_search(&family, &mu, &a.epsilon, &greedy.centers, &budget),
            "pack",
            config
        )
    } else {
        greedy
    };
    let verified = verify_certificate(&cert, &family, &mu)?;
    let failures = cert.failures();
    let mut body = to_value(&cert);
    body["command"] = json!("pack");
    body["config"] = config;
    body["verified"] = json!(verified);
    body["partial"] = json!(failures > 0);
    Ok(Report {
        rows: cert.witnesses.iter().map(to_value).collect(),
        status: if verified && failures == 0 {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        },
        body,
    })
}

fn run_learn(a: &LearnArgs) -> Result<Report> {
    let family = io::read_family(&a.common.input)?;
    let mu = measure_for(a.measure.as_deref(), family.domain())?;
    let config = LearnerConfig {
        epsilon: a.epsilon.clone(),
        delta: a.delta.clone(),
        n1: a.n1,
        budget: a.budget.resolve(family.arity()),
        seed: a.seed,
        rho_hat: a.rho_hat.clone(),
        ..LearnerConfig::default()
    };
    let mode = match a.concepts {
        Some(n) => ConceptMode::Sampled(n),
        None => ConceptMode::AllMembers,
    };
    let input_config = json!({
        "input": path_str(&a.common.input),
        "measure": a.measure.as_deref().map(path_str),
        "sizes": family.domain().sizes(),
        "members": family.len(),
        "concepts": mode,
    });
    let r = try_partial!(
        pac_experiment(&family, &mu, &config, a.trials, mode),
        "learn",
        input_config
    );
    let pass = r.passes();
    let mut body = to_value(&r);
    body["command"] = json!("learn");
    body["input"] = input_config;
    body["worst_rate"] = json!(rational::format(&r.worst_rate()));
    body["pass"] = json!(pass);
    Ok(Report {
        rows: r.concepts.iter().map(to_value).collect(),
        status: if pass { EXIT_OK } else { EXIT_CHECK_FAILED },
        body,
    })
}

fn run_regularity(a: &RegularityArgs) -> Result<Report> {
    let relation = io::read_relation(&a.common.input)?;
    let domain = relation.domain().clone();
    let mu = measure_for(a.measure.as_deref(), &domain)?;
    let k = a.k;
    let mode = match a.mode {
        Mode::All => VerifyMode::All,
        Mode::AlmostAll => VerifyMode::AlmostAll,
    };
    let budget = a.budget.resolve(k.max(1));
    let config = json!({
        "input": path_str(&a.common.input),
        "measure": a.measure.as_deref().map(path_str),
        "decomposition": a.decomposition.as_deref().map(path_str),
        "sizes": domain.sizes(),
        "k": k,
        "epsilon": rational::format(&a.epsilon),
        "mode": mode,
        "anchors": a.anchors,
        "budget": a.anchors.map(|_| to_value(&budget)),
    });
    let slicewise = try_partial!(slicewise_vck(&relation, k), "regularity", config);
    let head_mu = mu.marginal(&(0..=k).collect::<Vec<_>>())?;
    let net = slice_net(&relation, k, &head_mu, &a.epsilon)?;
    let dec = match &a.decomposition {
        Some(p) => Some(io::read_decomposition(p)?),
        None if domain.arity() == 3 && k == 1 => Some(decomposition_from_net(&relation, &net)?),
        None => None,
    };
    let verification = dec
        .as_ref()
        .map(|d| verify_decomposition(&relation, d, &mu, &a.epsilon, mode))
        .transpose()?;
    let packing = match a.anchors {
        Some(n) => {
            let cert = try_partial!(
                slicewise_packing_search(&relation, &mu, k, &a.epsilon, &budget, n),
                "regularity",
                config
            );
            let verified = verify_slicewise_certificate(&relation, &mu, &cert)?;
            Some((cert, verified))
        }
        None => None,
    };
    let mut pass = verification.as_ref().is_none_or(|v| v.pass);
    let mut incomplete = false;
    if let Some((cert, verified)) = &packing {
        pass &= *verified;
        incomplete = cert.failures() > 0;
    }
    let rows = match &verification {
        Some(v) => v.rows.iter().map(to_value).collect(),
        None => slicewise.per_fixing.iter().map(to_value).collect(),
    };
    let body = json!({
        "command": "regularity",
        "config": config,
        "slicewise": slicewise,
        "net": net,
        "decomposition": dec,
        "verification": verification,
        "packing": packing.as_ref().map(|(c, v)| json!({ "certificate": c, "verified": v })),
        "partial": incomplete,
        "pass": pass,
    });
    Ok(Report {
        body,
        rows,
        status: if pass && !incomplete {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        },
    })
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Dim(a) => &a.common,
        Command::Sauer(a) => &a.common,
        Command::Pack(a) => &a.common,
        Command::Learn(a) => &a.common,
        Command::Regularity(a) => &a.common,
    }
}

pub fn execute(cmd: &Command) -> Result<Report> {
    match cmd {
        Command::Dim(a) => run_dim(a),
        Command::Sauer(a) => run_sauer(a),
        Command::Pack(a) => run_pack(a),
        Command::Learn(a) => run_learn(a),
        Command::Regularity(a) => run_regularity(a),
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Flat projection of JSON rows: one column per key, nested values as JSON
/// text.
pub fn to_csv(rows: &[Value]) -> Result<String> {
    let mut headers: Vec<String> = Vec::new();
    for r in rows {
        if let Value::Object(m) = r {
            for k in m.keys() {
                if !headers.contains(k) {
                    headers.push(k.clone());
                }
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidParameter(format!("csv: {e}"));
    if !headers.is_empty() {
        w.write_record(&headers).map_err(csv_err)?;
    }
    for r in rows {
        let record: Vec<String> = headers.iter().map(|h| cell(&r[h.as_str()])).collect();
        w.write_record(&record).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render(report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.body).expect("json values serialize");
            s.push('\n');
            Ok(s)
        }
        Format::Csv => to_csv(&report.rows),
    }
}

/// Parses arguments, runs the command and writes the report. Returns the
/// exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let c = common(&cli.command);
    let result = execute(&cli.command).and_then(|r| Ok((render(&r, c.format)?, r.status)));
    match result {
        Ok((text, status)) => {
            let written = match &c.output {
                Some(p) => std::fs::write(p, text.as_bytes()),
                None => std::io::stdout().lock().write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("error: cannot write report: {e}");
                return EXIT_INPUT;
            }
            status
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_projection() {
        let rows = vec![json!({"a": 1, "b": "x"}), json!({"a": 2, "c": [1, 2]})];
        assert_eq!(to_csv(&rows).unwrap(), "a,b,c\n1,x,\n2,,\"[1,2]\"\n");
        assert_eq!(to_csv(&[]).unwrap(), "");
    }

    #[test]
    fn missing_input_is_an_input_error() {
        let status = run(["vck", "dim", "--input", "/nonexistent/family.json"]);
        assert_eq!(status, EXIT_INPUT);
    }

    #[test]
    fn bad_rational_flag_is_an_input_error() {
        let status = run(["vck", "pack", "--input", "x.json", "--epsilon", "one/two"]);
        assert_eq!(status, EXIT_INPUT);
    }
}
