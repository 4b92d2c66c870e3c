//! One function per subcommand. Each returns an [`Artifact`] and never
//! writes; rendering and I/O happen in the caller after everything succeeded.
//!
//! Parallel loops only ever map over an indexed range and collect in order,
//! so results do not depend on the worker count.

use std::path::{Path, PathBuf};

use alignbounds_core::bestofn::{
    bestofn_exact, bestofn_kl, catalog_reports, f_bound_closed, f_bound_generic, renyi_bound_closed,
};
use alignbounds_core::continuous::exp_order_stat_law;
use alignbounds_core::dist::{pushforward, Policy};
use alignbounds_core::divergence::{f_div, renyi, renyi_continuous, FGenerator};
use alignbounds_core::goodhart::{beta_row, bon_transfer_bound, n_row, rl_transfer_check, CurveRow, RewardPair};
use alignbounds_core::tilt::{solve_lambda_weighted, tilt, WeightedPrompt};
use alignbounds_core::transport::{
    bounded_reward_bound, certify_finite, min_subgauss_sigma2, transport_bound, HighProbSetup, TailCertificate,
};
use alignbounds_core::{
    BoundReport, DivergenceKind, Error as CoreError, Exponential, FiniteDist, RewardMap, RngSeed, TailModel,
    TiltedPolicy,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::args::{Command, ControlSpec, Format, PolicySpec, Sigma2, TailSpec};
use crate::error::{CliError, CliResult};
use crate::instance::{Instance, InstanceFile, Inputs};
use crate::output::{num, Cell, Table};

/// Absolute agreement required between closed forms and quadrature, Rényi rows included.
pub const CATALOG_TOLERANCE: f64 = 1e-8;

/// Everything a command produces, before rendering.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub default_format: Format,
    pub table: Table,
    /// Always an object; `meta` is added when rendering.
    pub json: Map<String, Value>,
    /// Extra `key=value` pairs for the CSV trailer and the JSON `meta`.
    pub extra: Vec<(String, String)>,
    /// A secondary JSON document and where to put it.
    pub side: Option<(PathBuf, Map<String, Value>)>,
}

impl Artifact {
    fn new(default_format: Format, table: Table, json: Value) -> Self {
        let Value::Object(json) = json else {
            unreachable!("artifacts are JSON objects")
        };
        Artifact {
            default_format,
            table,
            json,
            extra: Vec::new(),
            side: None,
        }
    }
}

/// Instance files a command reads.
pub fn input_paths(command: &Command) -> Vec<&Path> {
    match command {
        Command::Div { p, q, .. } => vec![p.as_path(), q.as_path()],
        Command::Bon { dist, .. }
        | Command::Tilt { dist, .. }
        | Command::Transport { dist, .. }
        | Command::Goodhart { dist, .. } => vec![dist.as_path()],
        Command::Highprob { dist, .. } => dist.iter().map(PathBuf::as_path).collect(),
        Command::Table1 { .. } => Vec::new(),
    }
}

pub fn run(command: &Command, inputs: &Inputs, seed: u64) -> CliResult<Artifact> {
    match command {
        Command::Div { p, q, kind, alpha } => div(inputs, p, q, kind, *alpha),
        Command::Bon {
            dist,
            n,
            all_bounds,
            sweep,
            alphas,
        } => {
            let ns = match (n, sweep) {
                (Some(n), _) => vec![*n],
                (None, Some(r)) => r.values(),
                (None, None) => return Err(CliError::config("one of --n or --sweep is required")),
            };
            bon(inputs, dist, &ns, *all_bounds, alphas)
        }
        Command::Tilt { dist, beta, delta } => tilt_cmd(inputs, dist, *beta, *delta),
        Command::Transport { dist, policy, tail } => transport(inputs, dist, *policy, *tail),
        Command::Highprob {
            dist,
            beta,
            m,
            t0,
            trials,
            sigma2,
        } => highprob(inputs, dist.as_deref(), *beta, *m, *t0, *trials, *sigma2, seed),
        Command::Goodhart {
            dist,
            control,
            sigma2,
            reports,
        } => goodhart(inputs, dist, *control, *sigma2, reports.clone()),
        Command::Table1 { sweep, alphas } => table1(&sweep.values(), alphas),
    }
}

fn law_json(dist: &FiniteDist) -> Value {
    json!({
        "support": dist.support(),
        "probs": dist.probs().iter().map(|&p| num(p)).collect::<Vec<_>>(),
    })
}

fn report_json(r: &BoundReport) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("name".into(), Value::from(r.name.clone()));
    m.insert("n".into(), Value::from(r.n));
    m.insert("bound_value".into(), num(r.bound_value));
    m.insert("achieved_value".into(), num(r.achieved_value));
    m.insert("slack".into(), num(r.slack));
    m.insert("holds".into(), Value::from(r.holds()));
    m
}

fn single(inputs: &Inputs, path: &Path, command: &str) -> CliResult<Instance> {
    inputs.load(path)?.single(command)
}

fn div(inputs: &Inputs, p: &Path, q: &Path, kind: &str, alpha: Option<f64>) -> CliResult<Artifact> {
    let kind = DivergenceKind::parse(kind, alpha).map_err(|e| CliError::config(e.to_string()))?;
    if alpha.is_some() && !matches!(kind, DivergenceKind::Renyi(_)) {
        return Err(CliError::config("--alpha only applies to --kind renyi"));
    }
    let (p, q) = (single(inputs, p, "div")?, single(inputs, q, "div")?);
    let value = match &kind {
        DivergenceKind::F(name) => f_div(&p.dist, &q.dist, &FGenerator::by_name(name)?)?,
        DivergenceKind::Renyi(a) => renyi(&p.dist, &q.dist, *a)?,
    };
    let mut table = Table::new(["kind", "value", "exact"]);
    table.push(vec![
        Cell::Text(value.kind.to_string()),
        Cell::Num(value.value),
        Cell::Bool(value.exact),
    ]);
    let json = json!({
        "kind": value.kind.to_string(),
        "value": num(value.value),
        "exact": value.exact,
    });
    Ok(Artifact::new(Format::Json, table, json))
}

fn bon(inputs: &Inputs, path: &Path, ns: &[u64], all_bounds: bool, alphas: &[f64]) -> CliResult<Artifact> {
    let inst = single(inputs, path, "bon")?;
    let reward = inst.reward()?;
    let per_n = ns
        .par_iter()
        .map(|&n| {
            if all_bounds {
                catalog_reports(&bestofn_exact(&inst.dist, reward, n)?, alphas)
            } else {
                Ok(vec![bestofn_kl(&inst.dist, reward, n)?])
            }
        })
        .collect::<Result<Vec<_>, CoreError>>()?;
    let mut table = Table::new(["n", "divergence_name", "achieved", "bound", "slack"]);
    let mut reports = Vec::new();
    for r in per_n.iter().flatten() {
        table.push(vec![
            Cell::Int(r.n),
            Cell::Text(r.name.clone()),
            Cell::Num(r.achieved_value),
            Cell::Num(r.bound_value),
            Cell::Num(r.slack),
        ]);
        reports.push(Value::Object(report_json(r)));
    }
    Ok(Artifact::new(Format::Csv, table, json!({ "reports": reports })))
}

struct TiltedPrompt {
    weight: f64,
    policy: TiltedPolicy,
}

fn tilt_cmd(inputs: &Inputs, path: &Path, beta: Option<f64>, delta: Option<f64>) -> CliResult<Artifact> {
    let prompts: Vec<(f64, Instance)> = match inputs.load(path)? {
        InstanceFile::Single(i) => vec![(1.0, i)],
        InstanceFile::Prompts(ps) => ps,
    };
    let multi = prompts.len() > 1;
    let rewards = prompts
        .iter()
        .map(|(_, i)| i.reward())
        .collect::<CliResult<Vec<&RewardMap>>>()?;
    let mut out = Map::new();
    let beta = match (beta, delta) {
        (Some(b), None) => b,
        (None, Some(d)) => {
            let weighted: Vec<WeightedPrompt<'_>> = prompts
                .iter()
                .zip(&rewards)
                .map(|((w, i), r)| WeightedPrompt {
                    weight: *w,
                    base: &i.dist,
                    reward: r,
                })
                .collect();
            let solved = solve_lambda_weighted(&weighted, d)?;
            out.insert("delta".into(), num(d));
            out.insert("lambda".into(), num(solved.lambda));
            out.insert("residual".into(), num(solved.residual));
            out.insert("iterations".into(), Value::from(solved.iterations));
            solved.beta
        }
        _ => return Err(CliError::config("exactly one of --beta or --delta is required")),
    };
    let tilted = prompts
        .iter()
        .zip(&rewards)
        .map(|((w, i), r)| {
            Ok(TiltedPrompt {
                weight: *w,
                policy: tilt(&i.dist, r, beta)?,
            })
        })
        .collect::<Result<Vec<_>, CoreError>>()?;
    let kl: f64 = tilted.iter().map(|t| t.weight * t.policy.kl()).sum();
    let improvement: f64 = tilted.iter().map(|t| t.weight * t.policy.improvement()).sum();
    out.insert("beta".into(), num(beta));
    out.entry("lambda").or_insert_with(|| num(1.0 / beta));
    out.insert("kl".into(), num(kl));
    out.insert("improvement".into(), num(improvement));
    if multi {
        let per: Vec<Value> = tilted
            .iter()
            .map(|t| {
                json!({
                    "weight": num(t.weight),
                    "kl": num(t.policy.kl()),
                    "improvement": num(t.policy.improvement()),
                    "law": law_json(t.policy.law()),
                })
            })
            .collect();
        out.insert("prompts".into(), Value::from(per));
    } else {
        out.insert("law".into(), law_json(tilted[0].policy.law()));
    }

    let mut table = Table::new(["prompt", "symbol", "base_prob", "tilted_prob", "reward"]);
    for (k, t) in tilted.iter().enumerate() {
        let base = t.policy.base();
        for i in 0..base.len() {
            table.push(vec![
                Cell::Int(k as u64),
                Cell::Text(base.support()[i].clone()),
                Cell::Num(base.probs()[i]),
                Cell::Num(t.policy.law().probs()[i]),
                Cell::Num(t.policy.reward().values()[i]),
            ]);
        }
    }
    Ok(Artifact::new(Format::Json, table, Value::Object(out)))
}

fn model_json(model: &TailModel, cert: &TailCertificate) -> Value {
    let (kind, variance, scale) = match *model {
        TailModel::SubGaussian { variance } => ("subgauss", variance, None),
        TailModel::SubGamma { variance, scale } => ("subgamma", variance, Some(scale)),
    };
    json!({
        "model": kind,
        "variance": num(variance),
        "scale": scale.map(num),
        "max_violation": num(cert.max_violation),
        "passed": cert.passed,
        "grid_points": cert.grid.len(),
        "skipped": cert.skipped,
    })
}

fn transport(inputs: &Inputs, path: &Path, policy: PolicySpec, tail: TailSpec) -> CliResult<Artifact> {
    let inst = single(inputs, path, "transport")?;
    let reward = inst.reward()?;
    let (policy, n): (Box<dyn Policy>, u64) = match policy {
        PolicySpec::Tilt(beta) => (Box::new(tilt(&inst.dist, reward, beta)?), 0),
        PolicySpec::BestOf(n) => (Box::new(bestofn_exact(&inst.dist, reward, n)?), n),
    };
    let law = pushforward(&inst.dist, reward)?;
    let model = match tail {
        TailSpec::Auto => TailModel::sub_gaussian(min_subgauss_sigma2(&law))?,
        TailSpec::SubGaussian(v) => TailModel::sub_gaussian(v)?,
        TailSpec::SubGamma(v, c) => TailModel::sub_gamma(v, c)?,
    };
    let cert = certify_finite(&law, model);
    if !cert.passed {
        return Err(CoreError::TailHypothesis(format!(
            "reference reward law violates the {tail} envelope by {}",
            cert.max_violation
        ))
        .into());
    }
    let kl = policy.kl_to_base();
    let name = match model {
        TailModel::SubGaussian { .. } => "transport_subgauss",
        TailModel::SubGamma { .. } => "transport_subgamma",
    };
    let report = BoundReport::new(name, n, transport_bound(kl, model)?, policy.improvement());
    let cap = policy.kl_cap();
    let mut out = report_json(&report);
    out.insert("kl".into(), num(kl));
    out.insert("kl_cap".into(), num(cap));
    out.insert("cap_bound".into(), num(transport_bound(cap, model)?));
    out.insert("bounded_reward_bound".into(), num(bounded_reward_bound(kl, reward.sup_norm())));
    out.insert("tail".into(), model_json(&model, &cert));

    let mut table = Table::new(["name", "n", "achieved", "bound", "slack", "holds", "kl", "variance"]);
    table.push(vec![
        Cell::Text(report.name.clone()),
        Cell::Int(n),
        Cell::Num(report.achieved_value),
        Cell::Num(report.bound_value),
        Cell::Num(report.slack),
        Cell::Bool(report.holds()),
        Cell::Num(kl),
        Cell::Num(model.variance()),
    ]);
    Ok(Artifact::new(Format::Json, table, Value::Object(out)))
}

fn uniform_binary() -> Instance {
    let bytes = br#"{"support": ["0", "1"], "probs": [0.5, 0.5], "reward": [0.0, 1.0]}"#;
    match crate::instance::parse_instance("uniform binary", bytes) {
        Ok(InstanceFile::Single(i)) => i,
        _ => unreachable!("built-in instance is valid"),
    }
}

fn resolve_sigma2(sigma2: Sigma2, base: &FiniteDist, reward: &RewardMap) -> CliResult<f64> {
    Ok(match sigma2 {
        Sigma2::Auto => min_subgauss_sigma2(&pushforward(base, reward)?),
        Sigma2::Fixed(v) => v,
    })
}

#[allow(clippy::too_many_arguments)]
fn highprob(
    inputs: &Inputs,
    path: Option<&Path>,
    beta: f64,
    m: usize,
    t0: f64,
    trials: u64,
    sigma2: Sigma2,
    seed: u64,
) -> CliResult<Artifact> {
    let inst = match path {
        Some(p) => single(inputs, p, "highprob")?,
        None => uniform_binary(),
    };
    if trials == 0 {
        return Err(CliError::config("--trials must be at least 1"));
    }
    let reward = inst.reward()?;
    let variance = resolve_sigma2(sigma2, &inst.dist, reward)?;
    let setup = HighProbSetup::new(&inst.dist, reward, beta, m, t0, variance)?;
    let seed = RngSeed(seed);
    let violations = (0..trials)
        .into_par_iter()
        .filter(|&k| setup.trial_violates(seed, k))
        .count() as u64;
    let outcome = setup.summarize(violations, trials);
    let json = json!({
        "beta": num(beta),
        "m": m,
        "t0": num(t0),
        "trials": trials,
        "variance_ref": num(variance),
        "kl": num(setup.kl),
        "renyi": num(setup.renyi),
        "threshold": num(setup.threshold),
        "violations": violations,
        "empirical_rate": num(outcome.empirical_rate),
        "theoretical_rate": num(outcome.theoretical_rate),
        "standard_error": num(outcome.standard_error),
        "within_bound": outcome.within_bound,
    });
    let mut table = Table::new([
        "trials",
        "violations",
        "empirical_rate",
        "theoretical_rate",
        "standard_error",
        "within_bound",
    ]);
    table.push(vec![
        Cell::Int(trials),
        Cell::Int(violations),
        Cell::Num(outcome.empirical_rate),
        Cell::Num(outcome.theoretical_rate),
        Cell::Num(outcome.standard_error),
        Cell::Bool(outcome.within_bound),
    ]);
    Ok(Artifact::new(Format::Json, table, json))
}

fn curve_json(row: &CurveRow) -> Value {
    json!({
        "control": num(row.control),
        "kl": num(row.kl),
        "proxy_improvement": num(row.proxy_improvement),
        "golden_improvement": num(row.golden_improvement),
        "proxy_bound": num(row.proxy_bound),
        "golden_bound": num(row.golden_bound),
    })
}

fn goodhart(
    inputs: &Inputs,
    path: &Path,
    control: ControlSpec,
    sigma2: Sigma2,
    reports_path: Option<PathBuf>,
) -> CliResult<Artifact> {
    let inst = single(inputs, path, "goodhart")?;
    let pair: RewardPair = inst.pair()?;
    let base = &inst.dist;
    let variance = resolve_sigma2(sigma2, base, pair.proxy())?;
    let cert = certify_finite(&pushforward(base, pair.proxy())?, TailModel::sub_gaussian(variance)?);
    if !cert.passed {
        return Err(CoreError::TailHypothesis(format!(
            "proxy reward law is not sub-Gaussian with variance {variance}"
        ))
        .into());
    }
    let (axis, rows, reports) = match control {
        ControlSpec::Beta { start, stop, count } => {
            let betas = ControlSpec::betas(start, stop, count);
            let rows = betas
                .par_iter()
                .map(|&b| beta_row(base, &pair, b, variance))
                .collect::<Result<Vec<_>, CoreError>>()?;
            // The transfer inequality is stated for positive beta only.
            let reports = betas
                .par_iter()
                .filter(|&&b| b > 0.0)
                .map(|&b| {
                    rl_transfer_check(base, &pair, b).map(|t| {
                        let mut m = report_json(&t.report);
                        m.insert("control".into(), num(b));
                        m
                    })
                })
                .collect::<Result<Vec<_>, CoreError>>()?;
            ("beta", rows, reports)
        }
        ControlSpec::N(range) => {
            let ns = range.values();
            let rows = ns
                .par_iter()
                .map(|&n| n_row(base, &pair, n, variance))
                .collect::<Result<Vec<_>, CoreError>>()?;
            let reports = ns
                .par_iter()
                .map(|&n| {
                    bon_transfer_bound(base, &pair, n, variance).map(|r| {
                        let mut m = report_json(&r);
                        m.insert("control".into(), num(n as f64));
                        m
                    })
                })
                .collect::<Result<Vec<_>, CoreError>>()?;
            ("n", rows, reports)
        }
    };

    let mut table = Table::new([
        axis,
        "kl",
        "proxy_improvement",
        "golden_improvement",
        "proxy_bound",
        "golden_bound",
    ]);
    for r in &rows {
        let control = if axis == "n" { Cell::Int(r.control as u64) } else { Cell::Num(r.control) };
        table.push(vec![
            control,
            Cell::Num(r.kl),
            Cell::Num(r.proxy_improvement),
            Cell::Num(r.golden_improvement),
            Cell::Num(r.proxy_bound),
            Cell::Num(r.golden_bound),
        ]);
    }
    let report_doc = json!({
        "control": axis,
        "variance_ref": num(variance),
        "eps": num(pair.eps()),
        "synthetic": true,
        "reports": reports.into_iter().map(Value::Object).collect::<Vec<_>>(),
    });
    let Value::Object(report_doc) = report_doc else { unreachable!() };
    let mut primary = report_doc.clone();
    primary.insert("rows".into(), rows.iter().map(curve_json).collect());
    let mut artifact = Artifact::new(Format::Csv, table, Value::Object(primary));
    artifact.extra.push(("synthetic".into(), "true".into()));
    artifact.side = reports_path.map(|p| (p, report_doc));
    Ok(artifact)
}

/// One catalog row at one `n`.
#[derive(Debug, Clone, Copy)]
enum CatalogRow {
    F(usize),
    Renyi(f64),
}

fn table1(ns: &[u64], alphas: &[f64]) -> CliResult<Artifact> {
    let generators = FGenerator::catalog();
    let kinds: Vec<CatalogRow> = (0..generators.len())
        .map(CatalogRow::F)
        .chain(alphas.iter().map(|&a| CatalogRow::Renyi(a)))
        .collect();
    let jobs: Vec<(u64, CatalogRow)> = ns
        .iter()
        .flat_map(|&n| kinds.iter().map(move |&k| (n, k)))
        .collect();
    let unit = Exponential::unit();
    let rows = jobs
        .par_iter()
        .map(|&(n, kind)| -> Result<(u64, String, f64, f64, f64), CoreError> {
            Ok(match kind {
                CatalogRow::F(i) => {
                    let gen = &generators[i];
                    let closed = f_bound_closed(gen.name(), n)?;
                    (n, gen.name().to_string(), closed, f_bound_generic(gen, n)?, CATALOG_TOLERANCE)
                }
                CatalogRow::Renyi(alpha) => {
                    let closed = renyi_bound_closed(alpha, n)?;
                    let quad = renyi_continuous(&exp_order_stat_law(n)?, &unit, alpha)?.value;
                    (n, format!("renyi_{alpha}"), closed, quad, CATALOG_TOLERANCE)
                }
            })
        })
        .collect::<Result<Vec<_>, CoreError>>()?;

    let mut table = Table::new(["n", "divergence", "closed_form", "quadrature", "abs_diff", "tolerance"]);
    let mut json_rows = Vec::new();
    let mut worst: Option<String> = None;
    for (n, name, closed, quad, tol) in rows {
        let diff = (closed - quad).abs();
        if !(diff <= tol) && worst.is_none() {
            worst = Some(format!("{name} at n={n}: closed {closed} vs quadrature {quad}"));
        }
        table.push(vec![
            Cell::Int(n),
            Cell::Text(name.clone()),
            Cell::Num(closed),
            Cell::Num(quad),
            Cell::Num(diff),
            Cell::Num(tol),
        ]);
        json_rows.push(json!({
            "n": n,
            "divergence": name,
            "closed_form": num(closed),
            "quadrature": num(quad),
            "abs_diff": num(diff),
            "tolerance": num(tol),
        }));
    }
    if let Some(msg) = worst {
        return Err(CliError::CrossCheck(format!("catalog cross-check failed: {msg}")));
    }
    Ok(Artifact::new(Format::Csv, table, json!({ "rows": json_rows })))
}
