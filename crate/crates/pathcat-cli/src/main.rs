mod failure;
mod verify;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use pathcat::boundary::{partition_q, CylinderExpr, Oracle, DEFAULT_BUDGET};
use pathcat::bratteli::{
    self, chain_effros_shen, chain_from_k, dictionary_cuts, equivalent, equivalent_at, verify_ab,
    BratteliDiagram,
};
use pathcat::cf_order::{
    collapse, connecting_matrix, is_positive_cone, k0_push, k_sequence_from_sigma, sigma_stream,
    theta_stream, CfStream, OrderedZ2Element,
};
use pathcat::finite_cat::{builtin, truncation, CategoryFile, FiniteCategory};
use pathcat::measure::{a0_bounds, measure_table};
use pathcat::{KSequence, Path};

use failure::Failure;

const MAX_LEVELS: u32 = 1000;
const MAX_BUDGET: usize = 10_000_000;
const DEFAULT_SEED: u64 = 2024;
const BUDGET_ENV: &str = "PATHCAT_BUDGET";

#[derive(Parser)]
#[command(
    name = "pathcat",
    version,
    about = "Exact computations for the category of paths Λ(k)"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// The sequence (k_i) and the continued fraction of θ.
    Kseq(Common),
    /// Connecting matrices, collapse factors, unit class and sample positivity decisions.
    Ktheory {
        #[command(flatten)]
        common: Common,
        /// Number of random ℤ² vectors to classify.
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
    /// The (a_i, b_i) table with bounds for a₀.
    Measure(Common),
    /// Build Q_n or A_n ∪ B_n and verify it on a symbolic-point oracle.
    Partition {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = PartitionKind::Q)]
        kind: PartitionKind,
        #[arg(long, default_value_t = 2)]
        n: u32,
    },
    /// Both Bratteli chains and the equivalence verdict.
    Bratteli(Common),
    /// Generalized cycles of a finite category.
    Cycles {
        #[arg(long, conflicts_with_all = ["file", "truncation"])]
        builtin: Option<String>,
        /// Category in JSON form.
        #[arg(long, conflicts_with = "truncation")]
        file: Option<PathBuf>,
        /// Truncate Λ(k) at this path length.
        #[arg(long)]
        truncation: Option<u32>,
        /// Vertices kept by --truncation.
        #[arg(long, default_value_t = 3)]
        vertices: u32,
        #[command(flatten)]
        k: KArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// The property suite; exit code 0 iff every check passes.
    Verify(Common),
}

#[derive(Args, Clone)]
struct KArgs {
    /// σ in the grammar "c0;c1,c2,(p1,…,pm)", e.g. "1;(2)".
    #[arg(long, conflicts_with = "k")]
    sigma: Option<String>,
    /// k₁ for a sequence derived from σ.
    #[arg(long, default_value_t = 0)]
    k1: u32,
    /// Explicit k as "k1,k2,(p1,…,pm)", e.g. "3,0,(1)".
    #[arg(long)]
    k: Option<String>,
}

#[derive(Args, Clone)]
struct Common {
    #[command(flatten)]
    k: KArgs,
    #[arg(long, default_value_t = 10)]
    levels: u32,
    /// Oracle resolution; defaults depend on the subcommand.
    #[arg(long)]
    resolution: Option<u32>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Point and path budget; PATHCAT_BUDGET overrides it.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PartitionKind {
    Q,
    Ab,
}

/// Validated configuration shared by the k-dependent subcommands.
struct RunConfig {
    k: KSequence,
    sigma: Option<CfStream>,
    levels: u32,
    resolution: Option<u32>,
    format: Format,
    budget: usize,
    seed: u64,
}

impl KArgs {
    fn resolve(&self) -> Result<(KSequence, Option<CfStream>), Failure> {
        match (&self.sigma, &self.k) {
            (Some(s), None) => {
                let sigma: CfStream = s
                    .parse()
                    .map_err(|e| Failure::Usage(format!("--sigma: {e}")))?;
                let k = k_sequence_from_sigma(&sigma, self.k1)
                    .map_err(|e| Failure::Usage(format!("--sigma: {e}")))?;
                Ok((k, Some(sigma)))
            }
            (None, Some(k)) => Ok((
                k.parse().map_err(|e| Failure::Usage(format!("--k: {e}")))?,
                None,
            )),
            _ => Err(Failure::Usage("give exactly one of --sigma and --k".into())),
        }
    }
}

fn budget_from(flag: usize) -> Result<usize, Failure> {
    let budget = match std::env::var(BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{BUDGET_ENV}={v:?} is not a number")))?,
        Err(_) => flag,
    };
    if budget > MAX_BUDGET {
        return Err(Failure::Usage(format!(
            "budget {budget} exceeds {MAX_BUDGET}"
        )));
    }
    Ok(budget)
}

impl Common {
    fn config(&self) -> Result<RunConfig, Failure> {
        let (k, sigma) = self.k.resolve()?;
        if self.levels > MAX_LEVELS {
            return Err(Failure::Usage(format!(
                "--levels must be at most {MAX_LEVELS}"
            )));
        }
        Ok(RunConfig {
            k,
            sigma,
            levels: self.levels,
            resolution: self.resolution,
            format: self.format,
            budget: budget_from(self.budget)?,
            seed: self.seed,
        })
    }
}

fn no_dot(cfg: &RunConfig, cmd: &str) -> Result<(), Failure> {
    if cfg.format == Format::Dot {
        return Err(Failure::Usage(format!("{cmd} has no DOT output")));
    }
    Ok(())
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize") + "\n"
}

fn list(v: &[u32]) -> String {
    v.iter().map(u32::to_string).collect::<Vec<_>>().join(", ")
}

fn cf_text(c: &[u32]) -> String {
    match c.split_first() {
        Some((h, rest)) => format!("[{h}; {}, …]", list(rest)),
        None => "[]".into(),
    }
}

fn kseq(cfg: &RunConfig) -> Result<String, Failure> {
    no_dot(cfg, "kseq")?;
    let n = cfg.levels as usize;
    let ks = cfg.k.values(cfg.levels);
    let theta = theta_stream(&cfg.k);
    let raw = theta.coeffs(2 * n + 1);
    let coeffs = bratteli::simple_coeffs(&theta, n);
    let approx = theta.approx(60);
    if cfg.format == Format::Json {
        return Ok(pretty(&json!({
            "k": ks,
            "k_rule": cfg.k.to_string(),
            "sigma": cfg.sigma.as_ref().map(|s| s.to_string()),
            "theta": coeffs,
            "theta_unnormalized": raw,
            "theta_approx": approx,
        })));
    }
    let mut out = format!("{}, …\n", list(&ks));
    if let Some(s) = &cfg.sigma {
        let _ = writeln!(out, "σ = {s}");
    }
    let _ = writeln!(out, "k = {}", cfg.k);
    let _ = writeln!(
        out,
        "θ = {} = {} ({approx:.12})",
        cf_text(&raw),
        cf_text(&coeffs)
    );
    Ok(out)
}

fn ktheory(cfg: &RunConfig, samples: usize) -> Result<String, Failure> {
    no_dot(cfg, "ktheory")?;
    let k = &cfg.k;
    let mut mats = Vec::new();
    for i in 0..cfg.levels as i64 {
        mats.push(connecting_matrix(i, k)?);
    }
    let steps: Vec<_> = collapse(k, cfg.levels as usize)?
        .into_iter()
        .take_while(|s| s.to_level <= cfg.levels.max(2))
        .collect();
    let unit = k0_push(&OrderedZ2Element::unit(), 1, k)?;
    let sigma = sigma_stream(k);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut decisions = Vec::new();
    for _ in 0..samples {
        let (m, n): (i64, i64) = (rng.random_range(-20..=20), rng.random_range(-20..=20));
        let pos = is_positive_cone(&m.into(), &n.into(), &sigma)?;
        decisions.push((m, n, pos));
    }
    let broken: Vec<_> = steps.iter().filter(|s| !s.holds()).collect();
    let out = if cfg.format == Format::Json {
        pretty(&json!({
            "connecting": mats.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
            "collapse": steps.iter().map(|s| json!({
                "from_level": s.from_level,
                "to_level": s.to_level,
                "c_even": s.c_even,
                "c_odd": s.c_odd,
                "product": s.product.to_string(),
                "holds": s.holds(),
            })).collect::<Vec<_>>(),
            "unit_class": [unit.m.to_string(), unit.n.to_string()],
            "sigma": sigma.to_string(),
            "positivity": decisions.iter().map(|(m, n, p)| json!({"m": m, "n": n, "positive": p})).collect::<Vec<_>>(),
        }))
    } else {
        let mut out = String::new();
        for (i, m) in mats.iter().enumerate() {
            let _ = writeln!(out, "B_{i} = {m}");
        }
        for s in &steps {
            let _ = writeln!(
                out,
                "levels {}→{}: product {} = M({})·M({}) {}",
                s.from_level,
                s.to_level,
                s.product,
                s.c_odd,
                s.c_even,
                if s.holds() { "ok" } else { "FAILS" }
            );
        }
        let _ = writeln!(out, "[1]₀ at level 1 = ({}, {})", unit.m, unit.n);
        let _ = writeln!(out, "positive cone at level 1: σm + n ≥ 0, σ = {sigma}");
        for (m, n, p) in &decisions {
            let _ = writeln!(
                out,
                "  ({m}, {n}): {}",
                if *p { "positive" } else { "not positive" }
            );
        }
        out
    };
    if !broken.is_empty() {
        print!("{out}");
        return Err(Failure::Verify(format!(
            "{} collapse groups fail",
            broken.len()
        )));
    }
    Ok(out)
}

fn measure(cfg: &RunConfig) -> Result<String, Failure> {
    no_dot(cfg, "measure")?;
    let rows = measure_table(&cfg.k, cfg.levels);
    let (lo, hi) = a0_bounds(&cfg.k, cfg.levels.max(1));
    if cfg.format == Format::Json {
        return Ok(pretty(&json!({
            "rows": rows,
            "a0_bounds": [lo.to_string(), hi.to_string()],
        })));
    }
    let mut out = String::from("i\ta_i\tb_i\n");
    for r in &rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t({:.10}, {:.10})",
            r.i, r.a, r.b, r.a_float, r.b_float
        );
    }
    let f = |x: &num_rational::BigRational| x.to_f64().unwrap_or(f64::NAN);
    let _ = writeln!(out, "a₀ ∈ [{lo}, {hi}] ({:.12}, {:.12})", f(&lo), f(&hi));
    Ok(out)
}

fn partition(cfg: &RunConfig, kind: PartitionKind, n: u32) -> Result<String, Failure> {
    no_dot(cfg, "partition")?;
    let k = &cfg.k;
    let (value, ok) = match kind {
        PartitionKind::Ab => {
            let r = verify_ab(n, k, cfg.budget)?;
            let ok = r.ok();
            (serde_json::to_value(&r).expect("report serializes"), ok)
        }
        PartitionKind::Q => {
            let q = partition_q(n, k);
            let mut targets = Vec::new();
            for nu in Path::all_up_to(1, n, k) {
                for lam in Path::all_of_length(nu.source(), 1, k) {
                    targets.push(CylinderExpr::z_minus(nu.clone(), &lam)?);
                }
                targets.push(CylinderExpr::z(nu));
            }
            let d = cfg.resolution.unwrap_or(3 * n + 4);
            let focus = q.paths().chain(targets.iter().flat_map(|t| t.paths()));
            let oracle = Oracle::focused(1, focus, d, k, cfg.budget)?;
            let report = oracle.verify_partition(&q)?;
            let mut unrefined = Vec::new();
            for t in &targets {
                if !oracle.refines(&q, t)? {
                    unrefined.push(t.to_string());
                }
            }
            let ok = report.ok() && unrefined.is_empty();
            (
                json!({
                    "label": report.label,
                    "cells": q.cells.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                    "resolution": d,
                    "points": oracle.points().len(),
                    "partition": report.ok(),
                    "targets": targets.len(),
                    "unrefined": unrefined,
                }),
                ok,
            )
        }
    };
    let out = if cfg.format == Format::Json {
        pretty(&value)
    } else {
        let mut out = String::new();
        if let Some(obj) = value.as_object() {
            for (key, v) in obj {
                let shown = match v {
                    serde_json::Value::Array(a) if a.len() > 6 => format!("[{} entries]", a.len()),
                    other => other.to_string(),
                };
                let _ = writeln!(out, "{key}: {shown}");
            }
        }
        let _ = writeln!(out, "verdict: {}", if ok { "verified" } else { "FAILED" });
        out
    };
    if !ok {
        print!("{out}");
        return Err(Failure::Verify("partition check failed".into()));
    }
    Ok(out)
}

fn named_dot(d: &BratteliDiagram, name: &str) -> String {
    bratteli::emit(d, bratteli::Format::Dot).replacen(
        "digraph bratteli",
        &format!("digraph {name}"),
        1,
    )
}

fn bratteli_cmd(cfg: &RunConfig) -> Result<String, Failure> {
    let levels = cfg.levels as usize;
    let d1 = chain_from_k(&cfg.k, levels);
    let d2 = chain_effros_shen(&theta_stream(&cfg.k), levels);
    let (c1, c2) = dictionary_cuts(&cfg.k, levels, levels)?;
    let at_cuts = c1.len() >= 2 && equivalent_at(&d1, &c1, &d2, &c2)?;
    let verdict = equivalent(&d1, &d2) && at_cuts;
    let out = match cfg.format {
        Format::Dot => format!(
            "{}{}// equivalent: {verdict}\n",
            named_dot(&d1, "chain_from_k"),
            named_dot(&d2, "chain_effros_shen")
        ),
        Format::Json => pretty(&json!({
            "chain_from_k": serde_json::to_value(&d1).expect("diagram serializes"),
            "chain_effros_shen": serde_json::to_value(&d2).expect("diagram serializes"),
            "cuts": [c1, c2],
            "equivalent": verdict,
        })),
        Format::Text => {
            let dims = |d: &BratteliDiagram| {
                d.levels
                    .iter()
                    .map(|l| {
                        format!(
                            "({})",
                            l.iter()
                                .map(|x| x.to_string())
                                .collect::<Vec<_>>()
                                .join(",")
                        )
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            format!(
                "chain_from_k:      {}\nchain_effros_shen: {}\ncuts: {:?} ↔ {:?}\nequivalent: {verdict}\n",
                dims(&d1),
                dims(&d2),
                c1,
                c2
            )
        }
    };
    if !verdict {
        print!("{out}");
        return Err(Failure::Verify("the chains are not equivalent".into()));
    }
    Ok(out)
}

fn cycles(
    builtin_name: Option<&str>,
    file: Option<&PathBuf>,
    trunc: Option<u32>,
    vertices: u32,
    k: &KArgs,
    format: Format,
) -> Result<String, Failure> {
    if format == Format::Dot {
        return Err(Failure::Usage("cycles has no DOT output".into()));
    }
    let cat = match (builtin_name, file, trunc) {
        (Some(name), None, None) => builtin(name)
            .ok_or_else(|| Failure::Usage(format!("unknown built-in category {name:?}")))?,
        (None, Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            let file: CategoryFile = serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            FiniteCategory::from_file(&file).map_err(|e| Failure::Usage(e.to_string()))?
        }
        (None, None, Some(len)) => truncation(&k.resolve()?.0, len, vertices),
        _ => {
            return Err(Failure::Usage(
                "give one of --builtin, --file and --truncation".into(),
            ))
        }
    };
    let report = cat.validate();
    let found = if report.valid() {
        cat.generalized_cycles()
    } else {
        Vec::new()
    };
    let out = if format == Format::Json {
        pretty(&json!({ "validation": report, "cycles": found }))
    } else {
        let mut out = String::new();
        for c in &found {
            let _ = writeln!(out, "{c}");
        }
        if found.is_empty() && report.valid() {
            out.push_str("no generalized cycles\n");
        }
        for v in &report.violations {
            let _ = writeln!(out, "violation: {v:?}");
        }
        out
    };
    if !report.valid() {
        print!("{out}");
        return Err(Failure::Verify(format!(
            "not a category of paths: {} violations",
            report.violations.len()
        )));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<String, Failure> {
    match cli.cmd {
        Command::Kseq(c) => kseq(&c.config()?),
        Command::Ktheory { common, samples } => ktheory(&common.config()?, samples),
        Command::Measure(c) => measure(&c.config()?),
        Command::Partition { common, kind, n } => partition(&common.config()?, kind, n),
        Command::Bratteli(c) => bratteli_cmd(&c.config()?),
        Command::Cycles {
            builtin,
            file,
            truncation,
            vertices,
            k,
            format,
        } => cycles(
            builtin.as_deref(),
            file.as_ref(),
            truncation,
            vertices,
            &k,
            format,
        ),
        Command::Verify(c) => verify::run(&c.config()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("pathcat: {f}");
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kargs(sigma: Option<&str>, k1: u32, k: Option<&str>) -> KArgs {
        KArgs {
            sigma: sigma.map(str::to_string),
            k1,
            k: k.map(str::to_string),
        }
    }

    #[test]
    fn k_from_sigma_or_explicit() {
        let (k, sigma) = kargs(Some("1;(2)"), 0, None).resolve().unwrap();
        assert_eq!(k.values(6), vec![0, 1, 0, 2, 0, 2]);
        assert!(sigma.is_some());
        let (k, sigma) = kargs(None, 0, Some("3,0,(1)")).resolve().unwrap();
        assert_eq!(k.values(4), vec![3, 0, 1, 1]);
        assert!(sigma.is_none());
        assert_eq!(kargs(None, 0, None).resolve().unwrap_err().code(), 2);
        assert_eq!(
            kargs(Some("1;(1)"), 0, Some("(1)"))
                .resolve()
                .unwrap_err()
                .code(),
            2
        );
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn text_helpers() {
        assert_eq!(list(&[1, 2, 3]), "1, 2, 3");
        assert_eq!(cf_text(&[0, 2, 1]), "[0; 2, 1, …]");
    }
}
