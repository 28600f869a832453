//! Acceptance suite: one pass/fail line per criterion, then a rerun of every
//! criterion under the same master seed to check byte-identical reports.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use circlab::bootstrap::{bootstrap_linear, parity_instance, BootstrapConfig, ParityAdviceLearner};
use circlab::circuits::{
    counting_log2_bound, enumerate_functions, exact_mcsp, hardness_experiment, maxhard_tt, SearchLimits, SizeTable,
};
use circlab::games::{self, rational_string, SolveMode};
use circlab::generator::NwFamily;
use circlab::learnkit::{compress_exact, learner_to_distinguisher, random_monotone_dnf, MonotoneDnfLearner};
use circlab::natural::{self, count_accepted};
use circlab::reconstruct::{self, Distinguisher, ReconstructConfig, ReconstructParams};
use circlab::{rng, Basis, MembershipOracle, TruthTable};

const MASTER_SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    summary: String,
    report: Value,
}

type Runner = fn(u64) -> Outcome;

fn counting(_seed: u64) -> Outcome {
    let basis = Basis::aon();
    let mut rows = Vec::new();
    let mut pass = true;
    for n in [2usize, 3] {
        let mut prev = 0usize;
        for s in 2..=8 {
            let count = enumerate_functions(n, &basis, s).expect("enumeration").len();
            let within = (count as f64).log2() <= counting_log2_bound(s);
            let monotone = count >= prev;
            pass &= within && monotone;
            prev = count;
            rows.push(json!({ "n": n, "s": s, "count": count, "within_bound": within, "monotone": monotone }));
        }
    }
    let last = rows.last().cloned().unwrap_or_default();
    Outcome {
        pass,
        summary: format!("counts within 2^(50 s log s) and monotone; n=3 s=8 count {}", last["count"]),
        report: json!({ "rows": rows }),
    }
}

fn random_hardness(seed: u64) -> Outcome {
    let mut r = rng::derive(seed, "hardness", 0);
    let rep = hardness_experiment(12, 4, 0.25, 200, &Basis::aon(), 2000, &mut r).expect("experiment");
    let fraction = rep.hits as f64 / rep.trials as f64;
    Outcome {
        pass: rep.hits == 0 && rep.trials == 200,
        summary: format!("approximable fraction {fraction} over {} functions ({})", rep.trials, rep.method),
        report: serde_json::to_value(rep).expect("serializable"),
    }
}

fn learner_distinguisher(seed: u64) -> Outcome {
    let dist = learner_to_distinguisher(Arc::new(MonotoneDnfLearner::default()), 1);
    let mut members = 0;
    let mut random = 0;
    let mut r = rng::derive(seed, "learner-members", 0);
    for _ in 0..100 {
        let f = random_monotone_dnf(10, 3, 3, &mut r);
        members += u32::from(dist.decide(&mut MembershipOracle::from_table(f), &mut r).output == 0);
    }
    let mut r = rng::derive(seed, "learner-random", 0);
    for _ in 0..100 {
        let f = TruthTable::sample(10, &mut r).expect("arity");
        random += u32::from(dist.decide(&mut MembershipOracle::from_table(f), &mut r).output == 1);
    }
    Outcome {
        pass: members >= 90 && random >= 90,
        summary: format!("members -> 0 in {members}/100, random -> 1 in {random}/100"),
        report: json!({ "members_verdict_0": members, "random_verdict_1": random }),
    }
}

fn flagship(seed: u64) -> Outcome {
    let f = reconstruct::reference_dnf();
    let basis = Basis::aon();
    let params = ReconstructParams::new(16, 1, 3, 0.1).expect("params");
    let config = ReconstructConfig::default();
    let hybrids = (1usize << params.ell) as f64;
    // the generator's gap, measured apart from the reconstruction
    let fam = NwFamily::new(f.clone(), params.design.clone(), params.ell).expect("family");
    let probe = Distinguisher::mcsp_threshold(3, &basis, 3).expect("distinguisher");
    let gap = reconstruct::distinguishing_gap_sampled(&probe, &fam, 20_000, &mut rng::derive(seed, "flagship-gap", 0))
        .expect("gap")
        .gap;
    let mut successes = 0;
    let mut delta_ok = true;
    let mut runs = Vec::new();
    for run in 0..10 {
        let d = Distinguisher::mcsp_threshold(3, &basis, 3).expect("distinguisher");
        let mut r = rng::derive(seed, "flagship", run);
        match reconstruct::reconstruct_full(&d, &f, &params, &config, None, &mut r) {
            Ok((_, rep)) => {
                if rep.success && rep.error_exact {
                    successes += 1;
                    let floor = gap.max(rep.gap_estimate) / (4.0 * hybrids) - 0.05;
                    delta_ok &= rep.delta0 >= floor;
                }
                runs.push(json!({
                    "error": rep.error, "delta0": rep.delta0, "gap_estimate": rep.gap_estimate,
                    "position": rep.position, "queries": rep.queries, "success": rep.success,
                }));
            }
            Err(e) => runs.push(json!({ "failure": e.to_string() })),
        }
    }
    Outcome {
        pass: successes >= 8 && delta_ok,
        summary: format!("{successes}/10 runs within gamma=0.1; delta0 floor held: {delta_ok}; sampled gap {gap:.3}"),
        report: json!({ "gap": gap, "runs": runs }),
    }
}

fn compression(seed: u64) -> Outcome {
    let learner = MonotoneDnfLearner::default();
    let mut r = rng::derive(seed, "compress", 0);
    let mut accepted = 0;
    let mut sound = true;
    let mut rows = Vec::new();
    for _ in 0..20 {
        let f = random_monotone_dnf(10, 3, 3, &mut r);
        match compress_exact(&f, &learner, &mut r) {
            Ok(out) => {
                accepted += 1;
                let exact = out.circuit.evaluate_all().expect("evaluates") == f;
                let small = out.size as f64 <= 1024.0 / 100.0 + out.hypothesis_size as f64;
                sound &= exact && small;
                rows.push(json!({ "size": out.size, "hypothesis_size": out.hypothesis_size, "exact": exact }));
            }
            Err(e) => rows.push(json!({ "rejected": e.to_string() })),
        }
    }
    Outcome {
        pass: accepted >= 18 && sound,
        summary: format!("accepted {accepted}/20, every output exact and within size: {sound}"),
        report: json!({ "rows": rows }),
    }
}

fn natural_transforms(seed: u64) -> Outcome {
    let basis = Basis::aon();
    // amplification: full sweep of arity-3 tables for several base densities
    let mut amp_ok = true;
    let mut amp = Vec::new();
    for s0 in 0..=6 {
        let p = natural::mcsp_above(&basis, s0, 3).expect("property");
        let a = count_accepted(&p, 2).expect("sweep");
        let got = count_accepted(&natural::density_amplify(&p), 3).expect("sweep");
        amp_ok &= got == 256 - (16 - a) * (16 - a);
        amp.push(json!({ "s0": s0, "base": a, "amplified": got }));
    }
    // scale-down: the prefix table of a uniform table is uniform
    let mut r = rng::derive(seed, "scale-down", 0);
    let m = natural::scaled_arity(8, 1.0 / 3.0);
    let mut counts = vec![0u64; 1 << (1 << m)];
    for _ in 0..10_000 {
        let y = TruthTable::sample(8, &mut r).expect("arity");
        counts[y.restrict_prefix_zero(8 - m).expect("prefix").as_u64().expect("small") as usize] += 1;
    }
    let p_value = circlab::stats::chi_square_uniform_p(&counts);
    // derandomization: no table whose x-block is easy is ever accepted
    let mut derand_bad = 0u64;
    let mut derand_checked = 0u64;
    let mut r = rng::derive(seed, "derandomize", 0);
    for (n, s0) in [(2usize, 2usize), (3, 3)] {
        let n_prime = 2 * n + 1;
        let p = natural::zero_error_mcsp(&basis, s0, 3, 5).expect("property");
        let d = natural::derandomize_zero_error(&p, 1).expect("transform");
        let easy = SizeTable::compute(n, &basis, s0, SearchLimits::default()).expect("table").raw_functions(s0);
        let x_len = 1u64 << n;
        let z_len = 1u64 << n;
        for &x in &easy {
            for z in 0..1u64 << z_len {
                let w: u64 = rand::Rng::gen(&mut r);
                let y = TruthTable::from_fn(n_prime, |i| {
                    if i < x_len {
                        (x >> i) & 1 == 1
                    } else if i < x_len + z_len {
                        (z >> (i - x_len)) & 1 == 1
                    } else {
                        (w >> ((i - x_len - z_len) % 64)) & 1 == 1
                    }
                })
                .expect("arity");
                derand_checked += 1;
                derand_bad += u64::from(d.accepts(&y).expect("decides"));
            }
        }
    }
    Outcome {
        pass: amp_ok && p_value > 0.01 && derand_bad == 0,
        summary: format!(
            "amplification exact: {amp_ok}; scale-down chi-square p={p_value:.3}; derandomized accepts {derand_bad} of {derand_checked} easy x-blocks"
        ),
        report: json!({ "amplify": amp, "chi_square_p": p_value, "derandomize_checked": derand_checked, "derandomize_accepted": derand_bad }),
    }
}

fn game(seed: u64) -> Outcome {
    let bench = games::game_bench(rng::derive_seed(seed, "game-bench", 0)).expect("bench");
    let delta = 0.2;
    let mut duality = true;
    let mut first = 0;
    let mut tv_ok = true;
    let mut rows = Vec::new();
    let tv_bound = num_rational::BigRational::new(1.into(), 1024.into());
    for (i, (name, m)) in bench.iter().enumerate() {
        let sol = games::game_value(m, SolveMode::Exact).expect("exact value");
        duality &= sol.row_value == sol.col_value && sol.value == sol.row_value;
        let mut r = rng::derive(seed, "small-support", i as u64);
        let (first_try, tv) = match games::small_support(m, &sol, delta, 16, &mut r) {
            Ok(s) => {
                let tv = games::strategy_to_sampler(&s.row).expect("sampler").total_variation();
                (s.first_try(), Some(tv))
            }
            Err(_) => (false, None),
        };
        first += usize::from(first_try);
        tv_ok &= tv.as_ref().is_some_and(|t| *t <= tv_bound);
        rows.push(json!({
            "name": name, "rows": m.num_rows(), "cols": m.num_cols(), "value": rational_string(&sol.value),
            "first_try": first_try, "tv": tv.map(|t| rational_string(&t)),
        }));
    }
    let pass = bench.len() == 20 && duality && first * 10 >= 9 * bench.len() && tv_ok;
    Outcome {
        pass,
        summary: format!(
            "{} matrices; primal = dual: {duality}; first-try small support {first}/{}; sampler TV <= 2^-10: {tv_ok}",
            bench.len(),
            bench.len()
        ),
        report: json!({ "rows": rows }),
    }
}

fn bootstrap(seed: u64) -> Outcome {
    let inst = parity_instance(10);
    let reference = inst.reference(10).expect("table");
    let learner = ParityAdviceLearner { corruption: 0.01 };
    let config = BootstrapConfig::default();
    let mut exact = 0;
    let mut failures = Vec::new();
    for trial in 0..100 {
        let s = rng::derive_seed(seed, "bootstrap", trial);
        match bootstrap_linear(&learner, &inst, 10, &config, s) {
            Ok(out) if out.decider.table(10) == Some(&reference) => exact += 1,
            Ok(_) => failures.push(json!({ "trial": trial, "reason": "inexact" })),
            Err(e) => failures.push(json!({ "trial": trial, "reason": e.to_string() })),
        }
    }
    Outcome {
        pass: exact >= 99,
        summary: format!("decider exact on all 2^10 inputs in {exact}/100 trials"),
        report: json!({ "exact": exact, "failures": failures }),
    }
}

fn maxhard(_seed: u64) -> Outcome {
    let basis = Basis::aon();
    let (table, size) = maxhard_tt(2, &basis).expect("maxhard");
    let (again, size_again) = maxhard_tt(2, &basis).expect("maxhard");
    // every table's size from a separate per-table search
    let sizes: Vec<usize> = (0..16)
        .map(|v| exact_mcsp(&TruthTable::from_u64(2, v).expect("arity"), &basis).expect("search").0)
        .collect();
    let dominates = sizes.iter().all(|&s| s <= size);
    let matches = sizes[table.as_u64().expect("small") as usize] == size;
    Outcome {
        pass: dominates && matches && table == again && size == size_again,
        summary: format!("maxhard_tt(2) = {} of size {size}; dominates all 16: {dominates}", table.to_hex()),
        report: json!({ "table": table.to_hex(), "size": size, "sizes": sizes }),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, Runner, Duration); 9] = [
        ("counting bound", counting, Duration::from_secs(120)),
        ("random hardness", random_hardness, Duration::from_secs(300)),
        ("learner to distinguisher", learner_distinguisher, Duration::from_secs(300)),
        ("flagship reconstruction", flagship, Duration::from_secs(900)),
        ("compression", compression, Duration::from_secs(300)),
        ("natural transforms", natural_transforms, Duration::from_secs(120)),
        ("game", game, Duration::from_secs(300)),
        ("bootstrap", bootstrap, Duration::from_secs(600)),
        ("maxhard", maxhard, Duration::from_secs(60)),
    ];
    let mut all = true;
    let mut reports = Vec::new();
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run(MASTER_SEED);
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed < *limit;
        all &= pass;
        println!(
            "criterion {}: {} [{name}] {} ({:.1}s, limit {}s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            out.summary,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
        reports.push(serde_json::to_string(&out.report).expect("serializable"));
    }
    let mismatched: Vec<usize> = criteria
        .iter()
        .zip(&reports)
        .enumerate()
        .filter(|(_, ((_, run, _), first))| serde_json::to_string(&run(MASTER_SEED).report).expect("serializable") != **first)
        .map(|(i, _)| i + 1)
        .collect();
    let repro = mismatched.is_empty();
    all &= repro;
    println!(
        "criterion 10: {} [reproducibility] reports byte-identical on rerun for {}/9 criteria{}",
        if repro { "PASS" } else { "FAIL" },
        9 - mismatched.len(),
        if repro { String::new() } else { format!(", differing: {mismatched:?}") }
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
