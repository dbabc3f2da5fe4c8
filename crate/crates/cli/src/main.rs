//! `recres`: construct and check recurrences `xₙ = a₁xₙ₋₁ + xₙ₋₂` attaining a
//! prescribed number of residues.
//!
//! Exit codes: 0 ok, 1 verification mismatch, 2 impossible request,
//! 3 budget exhausted, 4 bad arguments.

use std::ops::RangeInclusive;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use rayon::prelude::*;
use serde_json::json;

use recres::constructor::{construct, Certificate, ConstructionPath};
use recres::fractional::{verify_limit_points, LimitReport};
use recres::intmath::{FactorConfig, DEFAULT_BUDGET, DEFAULT_SEED};
use recres::lehmer::{high_from_report, lehmer_term, primitive_divisors, HighPrimitive};
use recres::quadring::{ord_alpha_beta, split_type, RingParams};
use recres::recurrence::{orbit_stats, RecurrenceInstance};
use recres::Error;

/// `println!` that exits quietly when stdout is closed (e.g. piped to `head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        if writeln!(std::io::stdout(), $($arg)*).is_err() {
            std::process::exit(0);
        }
    }};
}

const EXIT_MISMATCH: u8 = 1;
const EXIT_IMPOSSIBLE: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_USAGE: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "recres",
    version,
    about = "Recurrences xₙ = a₁xₙ₋₁ + xₙ₋₂ with a prescribed number of residues"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Print JSON instead of a table.
    #[arg(long, global = true)]
    json: bool,
    /// Iteration budget for Pollard rho.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
    /// Seed for randomized factoring.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

impl Common {
    fn factor_config(&self) -> FactorConfig {
        FactorConfig {
            budget: self.budget,
            seed: self.seed,
            ..FactorConfig::default()
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a certificate attaining exactly n residues.
    Construct {
        #[arg(long, allow_hyphen_values = true)]
        a1: i64,
        #[arg(long)]
        n: u64,
        /// Require every residue to be nonzero.
        #[arg(long)]
        nonzero: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate (x₀, x₁) modulo m.
    Verify {
        #[arg(long, allow_hyphen_values = true)]
        a1: i64,
        #[arg(long, allow_hyphen_values = true)]
        x0: BigInt,
        #[arg(long, allow_hyphen_values = true)]
        x1: BigInt,
        #[arg(long)]
        m: BigInt,
        #[command(flatten)]
        common: Common,
    },
    /// Construct and re-verify every (a₁, n) cell of a grid.
    Sweep {
        /// `lo..hi` (inclusive) or a single value.
        #[arg(long, allow_hyphen_values = true, default_value = "-5..5")]
        a1: Span,
        #[arg(long, default_value = "1..60")]
        n: Span,
        #[arg(long)]
        nonzero: bool,
        #[command(flatten)]
        common: Common,
    },
    /// The Lehmer term ℓₙ.
    Lehmer {
        #[arg(long, allow_hyphen_values = true)]
        a1: i64,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Primitive divisors of ℓₙ.
    Primdiv {
        #[arg(long, allow_hyphen_values = true)]
        a1: i64,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Orders of α, β and α² modulo a prime ideal above p^v.
    Order {
        #[arg(long, allow_hyphen_values = true)]
        a1: i64,
        #[arg(long)]
        p: BigInt,
        #[arg(long, default_value_t = 1)]
        v: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Limit points of {ξαⁿ} for ξ built from a k-residue certificate.
    Frac {
        #[arg(long)]
        a1: i64,
        #[arg(long)]
        k: u64,
        /// Horizon.
        #[arg(long = "N", default_value_t = 300)]
        horizon: u64,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        #[command(flatten)]
        common: Common,
    },
}

/// An inclusive integer range given as `lo..hi` or a single value.
#[derive(Debug, Clone)]
struct Span(RangeInclusive<i64>);

impl FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| t.trim().parse::<i64>().map_err(|e| format!("{t:?}: {e}"));
        let (lo, hi) = match s.split_once("..") {
            Some((lo, hi)) => (parse(lo)?, parse(hi.trim_start_matches('='))?),
            None => {
                let v = parse(s)?;
                (v, v)
            }
        };
        if lo > hi {
            return Err(format!("empty range {s}"));
        }
        Ok(Span(lo..=hi))
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) | Error::Precondition(_) => EXIT_USAGE,
            Error::Unrepresentable { .. } | Error::ImpossibleNonzero { .. } => EXIT_IMPOSSIBLE,
            Error::BudgetExceeded { .. } => EXIT_BUDGET,
            Error::VerificationMismatch(_) | Error::Internal(_) => EXIT_MISMATCH,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type Outcome = Result<(), Failure>;

fn print_json(v: &impl serde::Serialize) {
    out!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn path_summary(path: &ConstructionPath) -> String {
    match path {
        ConstructionPath::Reversed { inner } => format!("reversed {}", path_summary(inner)),
        other => serde_json::to_value(other).expect("serializable")["tag"]
            .as_str()
            .unwrap_or("?")
            .to_string(),
    }
}

fn print_certificate(c: &Certificate) {
    out!("a1        {}", c.a1);
    out!("target    {}", c.target);
    out!("x0, x1    {}, {}", c.x0, c.x1);
    out!("m         {}", c.m);
    out!("tau       {}", c.tau);
    out!("residues  {{{}}}", join(&c.residues));
    out!("nonzero   {}", c.nonzero);
    out!("path      {}", path_summary(&c.path));
    out!("verified  {}", c.verified);
}

fn cmd_construct(a1: i64, n: u64, nonzero: bool, common: &Common) -> Outcome {
    let cert = construct(a1, n, nonzero, &common.factor_config())?;
    if common.json {
        print_json(&cert);
    } else {
        print_certificate(&cert);
    }
    Ok(())
}

fn cmd_verify(a1: i64, x0: BigInt, x1: BigInt, m: BigInt, common: &Common) -> Outcome {
    let s = orbit_stats(&RecurrenceInstance::new(a1, x0, x1), &m, &[])?;
    if common.json {
        print_json(&json!({
            "m": s.m.to_string(),
            "tau": s.tau,
            "rho": s.rho,
            "residues": s.residues.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            "nonzero": s.nonzero,
        }));
    } else {
        out!("tau       {}", s.tau);
        out!("rho       {}", s.rho);
        out!("residues  {{{}}}", join(&s.residues));
        out!("nonzero   {}", s.nonzero);
    }
    Ok(())
}

fn cmd_sweep(a1s: &Span, ns: &Span, nonzero: bool, common: &Common) -> Outcome {
    if *ns.0.start() < 1 {
        return Err(usage("n must be at least 1"));
    }
    let cfg = common.factor_config();
    let cells: Vec<(i64, u64)> = a1s
        .0
        .clone()
        .flat_map(|a1| ns.0.clone().map(move |n| (a1, n as u64)))
        .collect();
    let rows: Vec<(i64, u64, Result<Certificate, Error>)> = cells
        .par_iter()
        .map(|&(a1, n)| {
            let result = construct(a1, n, nonzero, &cfg).and_then(|c| c.verify().map(|_| c));
            (a1, n, result)
        })
        .collect();
    let mut worst = 0u8;
    let mut json_rows = Vec::new();
    if !common.json {
        out!(
            "{:>4} {:>4}  {:<10} {:>12} {:>8}  path",
            "a1",
            "n",
            "status",
            "m",
            "tau"
        );
    }
    for (a1, n, result) in &rows {
        let (status, code) = match result {
            Ok(_) => ("ok", 0),
            Err(Error::Unrepresentable { .. } | Error::ImpossibleNonzero { .. }) => {
                ("impossible", 0)
            }
            Err(Error::BudgetExceeded { .. }) => ("budget", EXIT_BUDGET),
            Err(_) => ("FAILED", EXIT_MISMATCH),
        };
        if code == EXIT_MISMATCH || (code == EXIT_BUDGET && worst != EXIT_MISMATCH) {
            worst = code;
        }
        if common.json {
            json_rows.push(match result {
                Ok(c) => json!({"a1": a1, "n": n, "status": status, "certificate": c}),
                Err(e) => json!({"a1": a1, "n": n, "status": status, "error": e.to_string()}),
            });
        } else {
            match result {
                Ok(c) => out!(
                    "{a1:>4} {n:>4}  {status:<10} {:>12} {:>8}  {}",
                    c.m.to_string(),
                    c.tau,
                    path_summary(&c.path)
                ),
                Err(e) => out!("{a1:>4} {n:>4}  {status:<10} {:>12} {:>8}  {e}", "-", "-"),
            }
        }
    }
    let ok = rows.iter().filter(|r| r.2.is_ok()).count();
    if common.json {
        print_json(&json!({"cells": rows.len(), "ok": ok, "rows": json_rows}));
    } else {
        out!("{ok} of {} cells constructed and verified", rows.len());
    }
    match worst {
        0 => Ok(()),
        code => Err(Failure {
            code,
            message: "sweep had failures".into(),
        }),
    }
}

fn cmd_lehmer(a1: i64, n: u64, common: &Common) -> Outcome {
    let l = lehmer_term(RingParams::new(a1)?, n)?;
    if common.json {
        print_json(&json!({"a1": a1, "n": n, "lehmer": l.to_string()}));
    } else {
        out!("{l}");
    }
    Ok(())
}

fn cmd_primdiv(a1: i64, n: u64, common: &Common) -> Outcome {
    let report = primitive_divisors(RingParams::new(a1)?, n, &common.factor_config())?;
    let high = high_from_report(&report);
    let primitive: Vec<String> = report
        .primitive
        .iter()
        .map(|(p, e)| {
            if *e == 1 {
                p.to_string()
            } else {
                format!("{p}^{e}")
            }
        })
        .collect();
    let odd: Vec<String> = report.odd_primitive().map(|(p, _)| p.to_string()).collect();
    let high_text = match &high {
        HighPrimitive::Found { p, e } => format!("{p}^{e}"),
        HighPrimitive::None => "none".into(),
        HighPrimitive::Unknown => "unknown".into(),
    };
    if common.json {
        print_json(&json!({
            "a1": a1,
            "n": n,
            "phi_n": report.phi_n.to_string(),
            "primitive": report.primitive.iter().map(|(p, e)| json!({"p": p.to_string(), "e": e})).collect::<Vec<_>>(),
            "residual": report.residual.to_string(),
            "unfactored": report.unfactored.to_string(),
            "complete": report.complete,
            "high": high_text,
        }));
    } else {
        out!("phi_n       {}", report.phi_n);
        out!(
            "primitive   {}",
            if primitive.is_empty() {
                "none".into()
            } else {
                join(&primitive)
            }
        );
        out!(
            "odd         {}",
            if odd.is_empty() {
                "none".into()
            } else {
                join(&odd)
            }
        );
        out!("high        {high_text}");
        out!("residual    {}", report.residual);
        if !report.complete {
            out!("unfactored  {}", report.unfactored);
        }
    }
    if !report.complete && matches!(high, HighPrimitive::Unknown) {
        return Err(Error::BudgetExceeded {
            index: Some(n),
            detail: format!("φ_{n} not fully factored"),
        }
        .into());
    }
    Ok(())
}

fn cmd_order(a1: i64, p: BigInt, v: u32, common: &Common) -> Outcome {
    if v == 0 {
        return Err(usage("v must be at least 1"));
    }
    let params = RingParams::new(a1)?;
    let kind = split_type(params, &p)?;
    let t = ord_alpha_beta(params, &p, v, &common.factor_config())?;
    let kind_text = serde_json::to_value(kind).expect("serializable");
    if common.json {
        print_json(&json!({
            "a1": a1,
            "p": p.to_string(),
            "v": v,
            "kind": kind_text,
            "alpha": t.alpha.to_string(),
            "beta": t.beta.to_string(),
            "alpha2": t.alpha2.to_string(),
            "root": t.alpha_root.as_ref().map(|r| r.to_string()),
        }));
    } else {
        out!("kind      {}", kind_text.as_str().unwrap_or("?"));
        if let Some(r) = &t.alpha_root {
            out!("root      {r}");
        }
        out!("ord α     {}", t.alpha);
        out!("ord β     {}", t.beta);
        out!("ord α²    {}", t.alpha2);
    }
    Ok(())
}

fn print_limit_report(r: &LimitReport) {
    out!("xi          {}", r.xi);
    out!("k           {}", r.k);
    out!("limits      {{{}}}", join(&r.predicted));
    out!("n0          {}", r.n0.map_or("-".into(), |n| n.to_string()));
    out!("tau         {}", r.tau);
    for c in &r.clusters {
        let dev = num_traits::ToPrimitive::to_f64(&c.max_deviation).unwrap_or(f64::NAN);
        out!(
            "  {:>12}  visits {:>4}  max deviation {:.3e}",
            c.value.to_string(),
            c.count,
            dev
        );
    }
    let verdict = if r.pass {
        "pass"
    } else if r.inconclusive {
        "inconclusive"
    } else {
        "fail"
    };
    out!("result      {verdict}");
}

fn cmd_frac(a1: i64, k: u64, horizon: u64, eps: f64, common: &Common) -> Outcome {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(usage(format!("--eps must lie in (0, 1), got {eps}")));
    }
    if a1 < 1 {
        return Err(usage(format!("frac needs a1 >= 1, got {a1}")));
    }
    let cert = construct(a1, k, true, &common.factor_config())?;
    let report = verify_limit_points(&cert, horizon, eps)?;
    if common.json {
        print_json(&json!({"certificate": cert, "report": report}));
    } else {
        print_limit_report(&report);
    }
    if report.pass {
        Ok(())
    } else if report.inconclusive {
        Err(usage(format!(
            "horizon {horizon} too short for a conclusive check"
        )))
    } else {
        Err(Failure {
            code: EXIT_MISMATCH,
            message: "limit points do not match the prediction".into(),
        })
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Construct {
            a1,
            n,
            nonzero,
            common,
        } => cmd_construct(a1, n, nonzero, &common),
        Command::Verify {
            a1,
            x0,
            x1,
            m,
            common,
        } => cmd_verify(a1, x0, x1, m, &common),
        Command::Sweep {
            a1,
            n,
            nonzero,
            common,
        } => cmd_sweep(&a1, &n, nonzero, &common),
        Command::Lehmer { a1, n, common } => cmd_lehmer(a1, n, &common),
        Command::Primdiv { a1, n, common } => cmd_primdiv(a1, n, &common),
        Command::Order { a1, p, v, common } => cmd_order(a1, p, v, &common),
        Command::Frac {
            a1,
            k,
            horizon,
            eps,
            common,
        } => cmd_frac(a1, k, horizon, eps, &common),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
