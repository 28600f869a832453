//! One function per subcommand. Each resolves its options against the
//! defaults, runs, and returns the report plus an optional contract failure.

use std::fmt::Display;
use std::path::Path;
use std::sync::Arc;

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use circlab::bootstrap::{self, AdviceLearner, BootstrapConfig, LinearInstance};
use circlab::circuits::{counting_report, hardness_experiment, SearchLimits, SizeTable};
use circlab::games::{self, rational_string, SolveMode};
use circlab::generator::NwFamily;
use circlab::learnkit::{self, learner_to_distinguisher, random_monotone_dnf, MonotoneDnfLearner};
use circlab::natural::{self, PropertySpec};
use circlab::reconstruct::{self, Distinguisher, ReconstructConfig, ReconstructParams};
use circlab::{rng, Basis, MembershipOracle, TruthTable};

use crate::report::{Report, Table};
use crate::{CliError, Globals};

pub type Outcome = (Report, Option<String>);

fn usage(e: impl Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn structural(e: impl Display) -> CliError {
    CliError::Structural(e.to_string())
}

fn basis(name: &str) -> Result<Basis, CliError> {
    Basis::parse(name).map_err(|e| CliError::Usage(format!("invalid basis {name:?}: {e}")))
}

fn f(x: f64) -> String {
    format!("{x:.6}")
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct McspArgs {
    /// Arity, 1..=4.
    #[arg(long)]
    pub n: Option<usize>,
    /// Gate basis: aon, xaon, ac0, acc<m>, tc0, or a custom `GATE+GATE:fanin` string.
    #[arg(long)]
    pub basis: Option<String>,
    /// Largest size searched.
    #[arg(long)]
    pub budget: Option<usize>,
}

pub fn mcsp(a: &McspArgs, g: &Globals) -> Result<Outcome, CliError> {
    let n = a.n.unwrap_or(2);
    let b = basis(a.basis.as_deref().unwrap_or("aon"))?;
    let budget = a.budget.unwrap_or(8);
    let resolved = json!({ "n": n, "basis": b.name(), "budget": budget });
    let sizes = SizeTable::compute(n, &b, budget, SearchLimits::default()).map_err(usage)?;
    let mut table = Table::new(&["table_hex", "table_bits", "min_size"]);
    let mut maxhard: Option<(u64, usize)> = None;
    for t in 0..1u64 << (1 << n) {
        let tt = TruthTable::from_u64(n, t).map_err(structural)?;
        let s = sizes.min_size_of(t);
        if let Some(s) = s {
            if maxhard.map_or(true, |(_, m)| s > m) {
                maxhard = Some((t, s));
            }
        }
        table.push(vec![tt.to_hex(), tt.to_bit_string(), s.map_or(String::new(), |s| s.to_string())]);
    }
    let counts: Vec<Value> = (0..=budget).map(|s| json!({ "s": s, "count": sizes.count(s) })).collect();
    let mut report = Report::new("mcsp", &resolved, g.seed, table);
    report.results = json!({
        "complete": sizes.complete(),
        "counts": counts,
        "search_steps": sizes.steps(),
        "maxhard": if sizes.complete() {
            maxhard.map(|(t, s)| json!({ "table": TruthTable::from_u64(n, t).map(|x| x.to_hex()).unwrap_or_default(), "size": s }))
        } else {
            None
        },
    });
    Ok((report, None))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct CountingArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub basis: Option<String>,
    /// Size bounds, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Also measure how many random functions of this arity are approximable.
    #[arg(long)]
    pub hardness_n: Option<usize>,
    #[arg(long)]
    pub hardness_s: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Random circuits per trial when the exhaustive route is unavailable.
    #[arg(long)]
    pub samples: Option<usize>,
}

pub fn counting(a: &CountingArgs, g: &Globals) -> Result<Outcome, CliError> {
    let n = a.n.unwrap_or(2);
    let b = basis(a.basis.as_deref().unwrap_or("aon"))?;
    let sizes = a.sizes.clone().unwrap_or_else(|| (2..=8).collect());
    let resolved = json!({
        "n": n, "basis": b.name(), "sizes": sizes, "hardness_n": a.hardness_n,
        "hardness_s": a.hardness_s.unwrap_or(4), "delta": a.delta.unwrap_or(0.25),
        "trials": a.trials.unwrap_or(200), "samples": a.samples.unwrap_or(2000),
    });
    let rows = counting_report(n, &b, &sizes).map_err(usage)?;
    let mut table = Table::new(&["n", "s", "count", "log2_count", "log2_bound", "within_bound", "monotone"]);
    for r in &rows {
        table.push(vec![
            r.n.to_string(),
            r.s.to_string(),
            r.count.to_string(),
            f(r.log2_count),
            f(r.log2_bound),
            r.within_bound.to_string(),
            r.monotone.to_string(),
        ]);
    }
    let mut report = Report::new("counting", &resolved, g.seed, table);
    let hardness = match a.hardness_n {
        Some(hn) => {
            let mut r = rng::from_seed(report.derive_seed("hardness", 0));
            let h = hardness_experiment(
                hn,
                a.hardness_s.unwrap_or(4),
                a.delta.unwrap_or(0.25),
                a.trials.unwrap_or(200),
                &b,
                a.samples.unwrap_or(2000),
                &mut r,
            )
            .map_err(usage)?;
            serde_json::to_value(h)?
        }
        None => Value::Null,
    };
    report.results = json!({ "rows": rows, "hardness": hardness });
    Ok((report, None))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct NwArgs {
    /// Base function as hex, most significant digit first.
    #[arg(long)]
    pub base_hex: Option<String>,
    #[arg(long)]
    pub base_n: Option<usize>,
    /// Output tables have 2^ell entries.
    #[arg(long)]
    pub ell: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
}

pub fn nw(a: &NwArgs, g: &Globals) -> Result<Outcome, CliError> {
    let base_n = a.base_n.unwrap_or(3);
    let hex = a.base_hex.clone().unwrap_or_else(|| "e8".into());
    let ell = a.ell.unwrap_or(3);
    let samples = a.samples.unwrap_or(16);
    let resolved = json!({ "base_n": base_n, "base_hex": hex, "ell": ell, "samples": samples });
    let base = TruthTable::from_hex(base_n, &hex).map_err(usage)?;
    let fam = NwFamily::with_default_design(base, ell).map_err(usage)?;
    let mut report = Report::new("nw", &resolved, g.seed, Table::new(&["index", "output_hex", "ones"]));
    let batch = fam.sample_batch(report.derive_seed("nw-batch", 0), samples);
    for (i, t) in batch.iter().enumerate() {
        report.table.push(vec![i.to_string(), t.to_hex(), t.count_ones().to_string()]);
    }
    let d = fam.design();
    report.results = json!({
        "design": { "d": d.d, "k": d.k, "r": d.r, "sets": d.m(), "max_intersection": d.max_intersection() },
        "seed_len": fam.seed_len(),
        "output_len": fam.output_len(),
        "mean_ones": batch.iter().map(|t| t.count_ones() as f64).sum::<f64>() / samples.max(1) as f64,
    });
    Ok((report, None))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct LearnArgs {
    /// `distinguish` (learner as distinguisher) or `reconstruct`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub terms: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    /// Exponent in the sample count n^(5k) and threshold 1/2 + n^(-2k).
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub sample_cap: Option<u64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub ell: Option<usize>,
    /// Size threshold of the MCSP distinguisher.
    #[arg(long)]
    pub s0: Option<usize>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub basis: Option<String>,
}

pub fn learn(a: &LearnArgs, g: &Globals) -> Result<Outcome, CliError> {
    match a.mode.as_deref().unwrap_or("distinguish") {
        "distinguish" => learn_distinguish(a, g),
        "reconstruct" => learn_reconstruct(a, g),
        other => Err(CliError::Usage(format!("unknown learn mode {other:?}"))),
    }
}

fn learn_distinguish(a: &LearnArgs, g: &Globals) -> Result<Outcome, CliError> {
    let n = a.n.unwrap_or(10);
    let trials = a.trials.unwrap_or(100);
    let terms = a.terms.unwrap_or(3);
    let width = a.width.unwrap_or(3);
    let k = a.k.unwrap_or(1);
    let cap = a.sample_cap.unwrap_or(1 << 20);
    let resolved = json!({ "mode": "distinguish", "n": n, "trials": trials, "terms": terms, "width": width, "k": k, "sample_cap": cap });
    let dist = learner_to_distinguisher(Arc::new(MonotoneDnfLearner::default()), k).with_sample_cap(cap);
    let table = Table::new(&["trial", "source", "output", "estimate", "learner_failed", "queries"]);
    let mut report = Report::new("learn", &resolved, g.seed, table);
    let mut counts = [0u64; 2];
    for (src, source) in ["member", "random"].into_iter().enumerate() {
        let mut r = rng::from_seed(report.derive_seed(&format!("learn-{source}"), 0));
        for trial in 0..trials {
            let target = if src == 0 {
                random_monotone_dnf(n, terms, width, &mut r)
            } else {
                TruthTable::sample(n, &mut r).map_err(usage)?
            };
            let v = dist.decide(&mut MembershipOracle::from_table(target), &mut r);
            counts[src] += u64::from(v.output == src as u8);
            report.table.push(vec![
                trial.to_string(),
                source.into(),
                v.output.to_string(),
                v.estimate.map_or(String::new(), f),
                v.learner_failed.to_string(),
                v.queries.to_string(),
            ]);
        }
    }
    report.results = json!({
        "members_verdict_0": counts[0],
        "random_verdict_1": counts[1],
        "trials": trials,
    });
    Ok((report, None))
}

fn learn_reconstruct(a: &LearnArgs, g: &Globals) -> Result<Outcome, CliError> {
    let runs = a.trials.unwrap_or(1);
    let gamma = a.gamma.unwrap_or(0.1);
    let ell = a.ell.unwrap_or(3);
    let s0 = a.s0.unwrap_or(3);
    let t = a.t.unwrap_or(1);
    let b = basis(a.basis.as_deref().unwrap_or("aon"))?;
    let resolved = json!({ "mode": "reconstruct", "target": "reference-dnf", "runs": runs, "gamma": gamma, "ell": ell, "s0": s0, "t": t, "basis": b.name() });
    let target = reconstruct::reference_dnf();
    let params = ReconstructParams::new(target.n(), t, ell, gamma).map_err(usage)?;
    let config = ReconstructConfig::default();
    let table = Table::new(&["run", "success", "error", "delta0", "position", "gap_estimate", "queries", "distinguisher_calls"]);
    let mut report = Report::new("learn", &resolved, g.seed, table);
    let mut failure = None;
    let mut details = Vec::new();
    for run in 0..runs {
        let d = Distinguisher::mcsp_threshold(ell, &b, s0).map_err(usage)?;
        let mut r = rng::from_seed(report.derive_seed("reconstruct", run));
        match reconstruct::reconstruct_full(&d, &target, &params, &config, None, &mut r) {
            Ok((_, rep)) => {
                report.table.push(vec![
                    run.to_string(),
                    rep.success.to_string(),
                    f(rep.error),
                    f(rep.delta0),
                    rep.position.to_string(),
                    f(rep.gap_estimate),
                    rep.queries.to_string(),
                    rep.distinguisher_calls.to_string(),
                ]);
                if !rep.success {
                    failure.get_or_insert(format!("run {run}: error {:.4} above gamma", rep.error));
                }
                details.push(serde_json::to_value(rep)?);
            }
            Err(e) if e.is_contract_failure() => {
                report.table.push(vec![run.to_string(), "false".into(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new()]);
                failure.get_or_insert(format!("run {run}: {e}"));
                details.push(json!({ "error": e.to_string() }));
            }
            Err(e) => return Err(usage(e)),
        }
    }
    report.results = json!({ "runs": details });
    Ok((report, failure))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct CompressArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub functions: Option<usize>,
    #[arg(long)]
    pub terms: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    /// `exact` or `average`.
    #[arg(long)]
    pub mode: Option<String>,
}

pub fn compress(a: &CompressArgs, g: &Globals) -> Result<Outcome, CliError> {
    let n = a.n.unwrap_or(10);
    let count = a.functions.unwrap_or(20);
    let terms = a.terms.unwrap_or(3);
    let width = a.width.unwrap_or(3);
    let mode = a.mode.clone().unwrap_or_else(|| "exact".into());
    if mode != "exact" && mode != "average" {
        return Err(CliError::Usage(format!("unknown compress mode {mode:?}")));
    }
    let resolved = json!({ "n": n, "functions": count, "terms": terms, "width": width, "mode": mode });
    let table = Table::new(&["index", "accepted", "size", "hypothesis_size", "disagreements", "error", "reason"]);
    let mut report = Report::new("compress", &resolved, g.seed, table);
    let mut r = rng::from_seed(report.derive_seed("compress", 0));
    let learner = MonotoneDnfLearner::default();
    let mut accepted = 0;
    for i in 0..count {
        let target = random_monotone_dnf(n, terms, width, &mut r);
        let out = if mode == "exact" {
            learnkit::compress_exact(&target, &learner, &mut r)
        } else {
            learnkit::compress_average(&target, &learner, &mut r)
        };
        match out {
            Ok(o) => {
                accepted += 1;
                let error = match o.exactness {
                    learnkit::Exactness::Exact => 0.0,
                    learnkit::Exactness::Average { error } => error,
                };
                report.table.push(vec![
                    i.to_string(),
                    "true".into(),
                    o.size.to_string(),
                    o.hypothesis_size.to_string(),
                    o.disagreements.to_string(),
                    f(error),
                    String::new(),
                ]);
            }
            Err(e) if e.is_reject() => {
                report.table.push(vec![i.to_string(), "false".into(), String::new(), String::new(), String::new(), String::new(), e.to_string()]);
            }
            Err(e) => return Err(structural(e)),
        }
    }
    report.results = json!({ "accepted": accepted, "functions": count });
    Ok((report, None))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct NaturalArgs {
    /// `mcsp`, `zero-error`, or `nonzero`.
    #[arg(long)]
    pub property: Option<String>,
    #[arg(long)]
    pub basis: Option<String>,
    /// Accept tables whose minimum size exceeds this.
    #[arg(long)]
    pub s0: Option<usize>,
    /// Unknown answers per 16 random strings (zero-error property).
    #[arg(long)]
    pub unknown: Option<u64>,
    /// `none`, `amplify`, `derandomize`, or `scale-down`.
    #[arg(long)]
    pub transform: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Arities to report, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub arity: Option<Vec<usize>>,
    #[arg(long)]
    pub samples: Option<u64>,
}

pub fn natural(a: &NaturalArgs, g: &Globals) -> Result<Outcome, CliError> {
    let property = a.property.clone().unwrap_or_else(|| "mcsp".into());
    let b = basis(a.basis.as_deref().unwrap_or("aon"))?;
    let s0 = a.s0.unwrap_or(2);
    let unknown = a.unknown.unwrap_or(5);
    let transform = a.transform.clone().unwrap_or_else(|| "none".into());
    let k = a.k.unwrap_or(1);
    let eps = a.eps.unwrap_or(1.0 / 3.0);
    let default_arity = match transform.as_str() {
        "amplify" => 3,
        "derandomize" => 6,
        "scale-down" => 8,
        _ => 2,
    };
    let arities = a.arity.clone().unwrap_or_else(|| vec![default_arity]);
    let samples = a.samples.unwrap_or(10_000);
    let resolved = json!({
        "property": property, "basis": b.name(), "s0": s0, "unknown": unknown, "transform": transform,
        "k": k, "eps": eps, "arity": arities, "samples": samples,
    });
    let base: PropertySpec = match property.as_str() {
        "mcsp" => natural::mcsp_above(&b, s0, 3).map_err(usage)?,
        "zero-error" => natural::zero_error_mcsp(&b, s0, 3, unknown).map_err(usage)?,
        "nonzero" => natural::nonzero(),
        other => return Err(CliError::Usage(format!("unknown property {other:?}"))),
    };
    let p = match transform.as_str() {
        "none" => base,
        "amplify" => natural::density_amplify(&base),
        "derandomize" => natural::derandomize_zero_error(&base, k).map_err(usage)?,
        "scale-down" => natural::scale_down(&base, eps).map_err(usage)?,
        other => return Err(CliError::Usage(format!("unknown transform {other:?}"))),
    };
    let table = Table::new(&["property", "arity", "accepted", "total", "density", "exact", "usefulness_violations"]);
    let mut report = Report::new("natural", &resolved, g.seed, table);
    let mut rows = Vec::new();
    for &n in &arities {
        let mut r = rng::from_seed(report.derive_seed("natural", n as u64));
        let row = natural::density_report(&p, n, samples, &mut r).map_err(usage)?;
        report.table.push(vec![
            row.property.clone(),
            n.to_string(),
            row.accepted.to_string(),
            row.total.to_string(),
            f(row.density),
            row.exact.to_string(),
            row.usefulness_violations.map_or(String::new(), |v| v.to_string()),
        ]);
        rows.push(serde_json::to_value(row)?);
    }
    report.results = json!({ "rows": rows });
    Ok((report, None))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct GameArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub basis: Option<String>,
    /// Row class: tables with circuits of at most this size (default: all tables).
    #[arg(long)]
    pub size: Option<usize>,
    /// Query points per non-adaptive probe.
    #[arg(long)]
    pub queries: Option<usize>,
    /// `exact` or `mwu`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Resampling budget for small-support strategies.
    #[arg(long)]
    pub budget: Option<u32>,
    /// Run the twenty-matrix bench instead of a single game.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub bench: Option<bool>,
}

pub fn game(a: &GameArgs, g: &Globals) -> Result<Outcome, CliError> {
    let delta = a.delta.unwrap_or(0.2);
    let budget = a.budget.unwrap_or(8);
    if a.bench.unwrap_or(false) {
        return game_bench(delta, budget, g);
    }
    let n = a.n.unwrap_or(2);
    let b = basis(a.basis.as_deref().unwrap_or("aon"))?;
    let q = a.queries.unwrap_or(1);
    let mode = a.mode.clone().unwrap_or_else(|| "exact".into());
    let resolved = json!({ "n": n, "basis": b.name(), "size": a.size, "queries": q, "mode": mode, "delta": delta, "budget": budget });
    let rows = match a.size {
        Some(s) => games::class_rows(n, &b, s).map_err(usage)?,
        None if n <= 3 => (0..1u64 << (1 << n))
            .map(|v| TruthTable::from_u64(n, v))
            .collect::<Result<_, _>>()
            .map_err(usage)?,
        None => return Err(CliError::Usage("--size is required above arity 3".into())),
    };
    if q == 0 || q > (1 << n) || q > 4 {
        return Err(CliError::Usage(format!("queries must be in 1..=min(4, 2^n), got {q}")));
    }
    let m = games::build_matrix(rows, games::all_nonadaptive_probes(n, q), n).map_err(usage)?;
    let solve_mode = match mode.as_str() {
        "exact" => SolveMode::Exact,
        "mwu" => SolveMode::Mwu { delta },
        other => return Err(CliError::Usage(format!("unknown mode {other:?}"))),
    };
    let sol = games::game_value(&m, solve_mode).map_err(usage)?;
    let table = Table::new(&["row", "table_hex", "weight"]);
    let mut report = Report::new("game", &resolved, g.seed, table);
    for (i, w) in sol.row.dense(m.num_rows()).iter().enumerate() {
        report.table.push(vec![i.to_string(), m.rows[i].to_hex(), rational_string(w)]);
    }
    let small = if sol.exact {
        let mut r = rng::from_seed(report.derive_seed("small-support", 0));
        match games::small_support(&m, &sol, delta, budget, &mut r) {
            Ok(s) => {
                let sampler = games::strategy_to_sampler(&s.row).map_err(structural)?;
                json!({
                    "k_row": s.k_row, "k_col": s.k_col,
                    "row_value": rational_string(&s.row_value), "col_value": rational_string(&s.col_value),
                    "row_attempts": s.row_attempts, "col_attempts": s.col_attempts,
                    "row_support": s.row.support_size(), "col_support": s.col.support_size(),
                    "sampler": sampler.to_json(&m.rows),
                })
            }
            Err(e) => json!({ "error": e.to_string() }),
        }
    } else {
        Value::Null
    };
    report.results = json!({
        "rows": m.num_rows(),
        "cols": m.num_cols(),
        "solution": sol.to_json(),
        "small_support": small,
    });
    Ok((report, None))
}

fn game_bench(delta: f64, budget: u32, g: &Globals) -> Result<Outcome, CliError> {
    let resolved = json!({ "bench": true, "delta": delta, "budget": budget });
    let table = Table::new(&["name", "rows", "cols", "value", "primal_equals_dual", "first_try", "sampler_tv"]);
    let mut report = Report::new("game", &resolved, g.seed, table);
    let bench = games::game_bench(report.derive_seed("game-bench", 0)).map_err(structural)?;
    let mut first = 0;
    for (i, (name, m)) in bench.iter().enumerate() {
        let sol = games::game_value(m, SolveMode::Exact).map_err(structural)?;
        let mut r = rng::from_seed(report.derive_seed("small-support", i as u64));
        let (first_try, tv) = match games::small_support(m, &sol, delta, budget, &mut r) {
            Ok(s) => {
                let tv = games::strategy_to_sampler(&s.row).map_err(structural)?.total_variation();
                (s.first_try(), rational_string(&tv))
            }
            Err(_) => (false, String::new()),
        };
        first += usize::from(first_try);
        report.table.push(vec![
            name.clone(),
            m.num_rows().to_string(),
            m.num_cols().to_string(),
            rational_string(&sol.value),
            (sol.row_value == sol.col_value).to_string(),
            first_try.to_string(),
            tv,
        ]);
    }
    report.results = json!({ "matrices": bench.len(), "first_try": first });
    Ok((report, None))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct BootstrapArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// `advice` (one advice bit, corrupted) or `perfect`.
    #[arg(long)]
    pub learner: Option<String>,
    #[arg(long)]
    pub corruption: Option<f64>,
    /// `parity` or a path to a JSON instance `{"family": "linear", "mask": [...]}`.
    #[arg(long)]
    pub instance: Option<String>,
    #[arg(long)]
    pub t_cap: Option<u64>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub trials: Option<u64>,
}

pub fn bootstrap(a: &BootstrapArgs, g: &Globals) -> Result<Outcome, CliError> {
    let n = a.n.unwrap_or(10);
    let learner_name = a.learner.clone().unwrap_or_else(|| "advice".into());
    let corruption = a.corruption.unwrap_or(0.01);
    let instance_name = a.instance.clone().unwrap_or_else(|| "parity".into());
    let trials = a.trials.unwrap_or(1);
    let defaults = BootstrapConfig::default();
    let config = BootstrapConfig {
        t_cap: a.t_cap.unwrap_or(defaults.t_cap),
        repetitions: a.repetitions,
        ..defaults
    };
    let instance = if instance_name == "parity" {
        bootstrap::parity_instance(n)
    } else {
        let text = std::fs::read_to_string(Path::new(&instance_name))
            .map_err(|e| CliError::Usage(format!("cannot read instance {instance_name}: {e}")))?;
        let v: Value = serde_json::from_str(&text).map_err(usage)?;
        LinearInstance::from_json(&v).map_err(usage)?
    };
    let learner: Box<dyn AdviceLearner> = match learner_name.as_str() {
        "advice" => Box::new(bootstrap::ParityAdviceLearner { corruption }),
        "perfect" => Box::new(bootstrap::PerfectParityLearner),
        other => return Err(CliError::Usage(format!("unknown learner {other:?}"))),
    };
    let resolved = json!({
        "n": n, "learner": learner_name, "corruption": corruption, "instance": instance,
        "t_cap": config.t_cap, "repetitions": config.repetitions, "trials": trials,
    });
    let table = Table::new(&[
        "trial", "arity", "selected_advice", "selected_agreement", "candidates", "samples", "repetitions", "errors",
    ]);
    let mut report = Report::new("bootstrap", &resolved, g.seed, table);
    let mut failure = None;
    let mut exact = 0;
    for trial in 0..trials {
        let seed = report.derive_seed("bootstrap", trial);
        match bootstrap::bootstrap_linear(learner.as_ref(), &instance, n, &config, seed) {
            Ok(out) => {
                for ph in &out.phases {
                    let cands = ph
                        .candidates
                        .iter()
                        .map(|c| format!("{}:{:.4}", c.advice, c.agreement))
                        .collect::<Vec<_>>()
                        .join(";");
                    report.table.push(vec![
                        trial.to_string(),
                        ph.arity.to_string(),
                        ph.selected_advice.to_string(),
                        f(ph.selected_agreement),
                        cands,
                        ph.samples.to_string(),
                        ph.repetitions.to_string(),
                        ph.errors.map_or(String::new(), |e| e.to_string()),
                    ]);
                }
                let final_errors = out.phases.last().and_then(|p| p.errors).unwrap_or(0);
                if final_errors == 0 {
                    exact += 1;
                } else {
                    failure.get_or_insert(format!("trial {trial}: {final_errors} errors at arity {n}"));
                }
            }
            Err(e) if e.is_contract_failure() => {
                failure.get_or_insert(format!("trial {trial}: {e}"));
            }
            Err(e) => return Err(usage(e)),
        }
    }
    report.results = json!({ "trials": trials, "exact": exact });
    Ok((report, failure))
}
