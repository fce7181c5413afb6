//! End-to-end acceptance checks, one test per criterion. Each prints a single
//! `criterion N: PASS|FAIL` line straight to stdout so it shows up even when
//! libtest captures output.

use std::collections::BTreeSet;
use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use num::{BigInt, ToPrimitive, Zero};
use treematch::eval::{brute_force_max, first_moment_bound, overlap, random_permutation_overlaps};
use treematch::graph::{sample_er, GraphSample};
use treematch::harness::{self, RunConfig};
use treematch::matcher::{self, tuple_priority, MatchConfig, MatchState, MatchTriple, TuplePriority};
use treematch::rational::{ratio, Rational};
use treematch::tree::{
    design, verify_balanced_exhaustive, verify_balanced_structural, Condition, TreeTemplate, Verdict,
};

fn report(criterion: u32, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {criterion}: {verdict} ({detail})");
    let _ = out.flush();
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn dense_overlap(g: &GraphSample, h: &GraphSample, pi: &[u32]) -> usize {
    let n = g.n();
    let mut count = 0;
    for i in 1..=n {
        for j in i + 1..=n {
            let (a, b) = (pi[i - 1] as usize, pi[j - 1] as usize);
            if g.edge_test(i, j).unwrap() && h.edge_test(a, b).unwrap() {
                count += 1;
            }
        }
    }
    count
}

#[test]
fn criterion_1_tree_design() {
    let start = Instant::now();
    let d = design(0.75, 0.3, 10).unwrap();
    let t = &d.tree;
    let k = d.params.k as usize;
    let counts_ok = t.zeta() == k * d.params.ell as usize + t.chi() - 1 && t.xi() == t.zeta() - t.chi() + 1;
    let designed_ok = verify_balanced_exhaustive(t, &d.params.alpha_eta).unwrap() == Verdict::Balanced
        && d.verified.exhaustive == Some(true);

    // the four-child instance from the worked example
    let four = TreeTemplate::build(&[4], 1, 10).unwrap();
    let four_counts = (four.chi(), four.zeta(), four.xi()) == (5, 8, 4);
    let four_ok = verify_balanced_exhaustive(&four, &ratio(17, 20)).unwrap() == Verdict::Balanced;

    let elapsed = start.elapsed();
    report(
        1,
        counts_ok && designed_ok && four_counts && four_ok && elapsed < Duration::from_secs(10),
        &format!(
            "design {:?} chi={} zeta={} xi={} alpha_eta={} mode={:?}; [4] chi=5 zeta=8 xi=4 balanced at 17/20; {:.2?}",
            t.beta_terms(),
            t.chi(),
            t.zeta(),
            t.xi(),
            d.params.alpha_eta,
            d.mode,
            elapsed
        ),
    );
}

#[test]
fn criterion_2_verifier_cross_check() {
    let mut agreed = 0;
    let mut disagreements = Vec::new();
    for a100 in (55..=95).step_by(5) {
        for e100 in [10, 20, 25, 30, 40, 50] {
            let (a, e) = (a100 as f64 / 100.0, e100 as f64 / 100.0);
            let Ok(d) = design(a, e, 10) else { continue };
            let ex = verify_balanced_exhaustive(&d.tree, &d.params.alpha_eta).unwrap().is_balanced();
            let st = verify_balanced_structural(&d.tree, &d.params.alpha_eta).unwrap().is_balanced();
            if ex == st {
                agreed += 1;
            } else {
                disagreements.push((a, e));
            }
        }
    }

    let negatives: [(&[u32], Rational, Condition); 3] = [
        (&[1], ratio(3, 5), Condition::LeafCover),
        (&[4], ratio(3, 5), Condition::LeafCover),
        (&[4], ratio(37, 50), Condition::SubtreeMargin),
    ];
    let mut negatives_ok = true;
    for (terms, a, want) in &negatives {
        let t = TreeTemplate::build(terms, 1, 10).unwrap();
        let ex = verify_balanced_exhaustive(&t, a).unwrap();
        let st = verify_balanced_structural(&t, a).unwrap();
        let witnessed = match &ex {
            Verdict::Violated { condition, witness } => condition == want && witness.validate(&t).is_ok(),
            Verdict::Balanced => false,
        };
        negatives_ok &= witnessed && !st.is_balanced();
    }
    report(
        2,
        disagreements.is_empty() && agreed > 0 && negatives_ok,
        &format!("{agreed} designed trees agree, disagreements {disagreements:?}; 3 negatives witnessed: {negatives_ok}"),
    );
}

#[test]
fn criterion_3_small_instance_sandwich() {
    let tree = TreeTemplate::build(&[2], 1, 10).unwrap();
    let mut ok = true;
    let mut total_greedy = 0;
    let mut total_best = 0;
    for seed in 0..100u64 {
        let g = sample_er(7, 0.3, seed).unwrap();
        let h = sample_er(7, 0.3, seed + 10_000).unwrap();
        let cfg = MatchConfig { eta: ratio(2, 7), kappa0: 100, embed_cap: matcher::DEFAULT_EMBED_CAP, seed };
        let out = matcher::run_greedy(&g, &h, &tree, cfg).unwrap();
        let greedy = overlap(&g, &h, &out.permutation).unwrap();
        let (best_pi, best) = brute_force_max(&g, &h).unwrap();
        ok &= greedy == dense_overlap(&g, &h, &out.permutation);
        ok &= best == dense_overlap(&g, &h, &best_pi);
        ok &= greedy <= best;
        total_greedy += greedy;
        total_best += best;
    }
    report(3, ok, &format!("100 instances at n=7: greedy total {total_greedy} <= optimum total {total_best}"));
}

#[test]
fn criterion_4_mean_overlap_oracle() {
    let start = Instant::now();
    let (n, p) = (100usize, 0.05f64);
    let g = sample_er(n, p, 404).unwrap();
    let h = sample_er(n, p, 405).unwrap();
    let samples = random_permutation_overlaps(&g, &h, 1000, 7).unwrap();
    let elapsed = start.elapsed();
    let k = samples.len() as f64;
    let mean = samples.iter().sum::<usize>() as f64 / k;
    let var = samples.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let pairs = (n * (n - 1) / 2) as f64;
    let expected = pairs * p * p;
    // graph-to-graph spread of |E(G)||E(H)|/N plus the permutation noise of the mean
    let sigma = (2.0 * pairs * p.powi(3) * (1.0 - p) + (p * (1.0 - p)).powi(2) + var / k).sqrt();
    let ok = (mean - expected).abs() <= 3.0 * sigma && elapsed < Duration::from_secs(5);
    report(
        4,
        ok,
        &format!("mean {mean:.3} vs {expected:.3}, sigma {sigma:.3}, {elapsed:.2?}"),
    );
}

fn ln_big(x: &BigInt) -> f64 {
    let shift = x.bits().saturating_sub(60);
    let top = (x >> shift as usize).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln 10! + ln P[Bin(45, 1/4) >= t]` from exact integers.
fn exact_bound_n10(t: u64) -> f64 {
    let trials = 45u64;
    if t > trials {
        return f64::NEG_INFINITY;
    }
    let mut binom = BigInt::from(1);
    let mut tail = BigInt::zero();
    for i in 0..=trials {
        if i >= t {
            tail += &binom * BigInt::from(3).pow((trials - i) as u32);
        }
        binom = binom * BigInt::from(trials - i) / BigInt::from(i + 1);
    }
    ln_big(&(tail * BigInt::from(3_628_800u64))) - 2.0 * trials as f64 * std::f64::consts::LN_2
}

#[test]
fn criterion_5_first_moment_bound() {
    let mut worst = 0.0f64;
    let mut previous = f64::INFINITY;
    let mut decreasing = true;
    for tenth in 1..=45u64 {
        let rho = tenth as f64 / 10.0;
        let got = first_moment_bound(10, 0.5, rho).unwrap();
        let want = exact_bound_n10(tenth);
        worst = worst.max(((got - want) / want).abs());
        decreasing &= got < previous;
        previous = got;
    }
    // rho = 5 asks for 50 common edges out of 45 pairs: the tail is exactly zero
    let at_five = first_moment_bound(10, 0.5, 5.0).unwrap();
    let zero_tail = at_five == f64::NEG_INFINITY && exact_bound_n10(50) == f64::NEG_INFINITY;
    report(
        5,
        worst < 1e-12 && decreasing && zero_tail,
        &format!("max relative error {worst:.2e} over rho in 0.1..4.5, strictly decreasing {decreasing}, rho=5 gives -inf"),
    );
}

#[test]
fn criterion_6_certificate_exactness() {
    let mut runs = 0;
    let mut ok = true;
    let mut largest = 0;
    for (alpha, epsilon, ns) in [(0.85, 0.25, &[500usize, 2000, 5000][..]), (0.75, 0.3, &[1000usize][..])] {
        for &n in ns {
            for seed in [1u64, 2] {
                let mut cfg = RunConfig::new(n, alpha, epsilon, seed);
                cfg.baselines = false;
                let r = harness::run_experiment(&cfg).unwrap();
                ok &= r.certificate.ok && r.certificate.violations.is_empty();
                ok &= r.overlap.value >= r.tree.design.zeta * r.digest.successes;
                ok &= r.overlap.per_step_certified == r.tree.design.zeta * r.digest.successes;
                runs += 1;
                largest = largest.max(n);
            }
        }
    }
    report(6, ok, &format!("{runs} runs up to n={largest}, zero violations"));
}

#[test]
fn criterion_7_desk_scale_trend() {
    let ns = [500usize, 1000, 2000, 4000];
    let seeds: Vec<u64> = (1..=5).collect();
    let base = RunConfig::new(0, 0.85, 0.25, 0);
    let rows = harness::sweep(&harness::sweep_configs(&base, &ns, &seeds)).unwrap();
    assert!(rows.iter().all(|r| r.error.is_empty()), "{rows:?}");
    let mut means = Vec::new();
    let mut beats = true;
    let mut slowest = 0;
    for &n in &ns {
        let at_n: Vec<_> = rows.iter().filter(|r| r.n == n).collect();
        let k = at_n.len() as f64;
        let ratio = at_n.iter().map(|r| r.ratio.unwrap()).sum::<f64>() / k;
        let random = at_n.iter().map(|r| r.random_mean.unwrap() / n as f64).sum::<f64>() / k;
        beats &= ratio > random;
        if n == 4000 {
            slowest = at_n.iter().map(|r| r.wallclock_ms).max().unwrap();
        }
        means.push((n, ratio, random));
    }
    let non_decreasing = means.windows(2).all(|w| w[1].1 >= w[0].1);
    let detail = means
        .iter()
        .map(|(n, r, b)| format!("n={n}: {r:.4} vs random {b:.4}"))
        .collect::<Vec<_>>()
        .join("; ");
    report(
        7,
        non_decreasing && beats && slowest < 600_000,
        &format!("{detail}; slowest n=4000 run {slowest} ms"),
    );
}

#[test]
fn criterion_8_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for name in ["a.json", "b.json"] {
        let path = dir.path().join(name);
        let output = Command::new(env!("CARGO_BIN_EXE_treematch"))
            .args(["run", "--n", "800", "--seed", "42", "--alpha", "0.85", "--epsilon", "0.25", "--out"])
            .arg(&path)
            .env_remove(harness::OUT_DIR_ENV)
            .output()
            .unwrap();
        assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        outputs.push((v["permutation"].to_string(), v["trace"].to_string()));
    }
    let same = outputs[0] == outputs[1];
    report(
        8,
        same,
        &format!("two runs at n=800 seed 42: permutation and trace bytes identical ({} trace bytes)", outputs[0].1.len()),
    );
}

/// The chosen triple of one step by brute force: every source tuple of the
/// tree rooted at `u`, leaf tuples in priority order, and for each one every
/// internal target tuple over the free vertices.
fn literal_step(g: &GraphSample, h: &GraphSample, tree: &TreeTemplate, s: &MatchState, u: usize) -> Option<MatchTriple> {
    let n = g.n();
    let size = tree.vertex_count();
    let chi = tree.chi();
    let seed = s.config().seed;
    let pool: BTreeSet<usize> = s.leaf_pool().into_iter().collect();
    let edges: Vec<(usize, usize)> = tree.edges().collect();
    let holds = |graph: &GraphSample, full: &[usize]| edges.iter().all(|&(a, b)| graph.edge_test(full[a - 1], full[b - 1]).unwrap());

    let mut sources: Vec<(TuplePriority, Vec<usize>, Vec<usize>)> = Vec::new();
    let mut tuple = vec![0usize; size];
    tuple[0] = u;
    let mut stack = vec![(1usize, 1usize)];
    // odometer over positions 1..size, each ranging over 1..=n
    while let Some((pos, v)) = stack.pop() {
        if pos == size {
            if holds(g, &tuple) {
                let l = tuple[chi..].to_vec();
                sources.push((tuple_priority(seed, &l).unwrap(), l, tuple[..chi].to_vec()));
            }
            continue;
        }
        if v > n {
            continue;
        }
        stack.push((pos, v + 1));
        let allowed = !tuple[..pos].contains(&v) && if pos < chi { !s.is_matched_source(v) } else { pool.contains(&v) };
        if allowed {
            tuple[pos] = v;
            stack.push((pos + 1, 1));
        }
    }
    sources.sort();

    let free: Vec<usize> = (1..=n).filter(|&v| s.is_free_target(v)).collect();
    let mut tried = BTreeSet::new();
    for (_, l, q) in sources {
        if !tried.insert(l.clone()) {
            continue;
        }
        let images: Vec<usize> = l.iter().map(|&v| s.image(v).unwrap()).collect();
        let mut best: Option<TuplePriority> = None;
        let mut idx = vec![0usize; chi];
        'scan: loop {
            let cand: Vec<usize> = idx.iter().map(|&i| free[i]).collect();
            let distinct = cand.iter().collect::<BTreeSet<_>>().len() == chi;
            if distinct {
                let full: Vec<usize> = cand.iter().chain(&images).copied().collect();
                if holds(h, &full) {
                    let p = tuple_priority(seed, &cand).unwrap();
                    if best.as_ref().is_none_or(|b| &p < b) {
                        best = Some(p);
                    }
                }
            }
            for d in (0..chi).rev() {
                idx[d] += 1;
                if idx[d] < free.len() {
                    continue 'scan;
                }
                idx[d] = 0;
            }
            break;
        }
        if let Some(b) = best {
            let to32 = |v: &[usize]| v.iter().map(|&x| x as u32).collect::<Vec<u32>>();
            return Some(MatchTriple { l: to32(&l), q: to32(&q), q_prime: b.coords.clone() });
        }
    }
    None
}

#[test]
fn criterion_9_algorithm_fidelity() {
    let mut instances = 0;
    let mut steps = 0;
    let mut successes = 0;
    let mut mismatches = Vec::new();
    for i in 0..20u64 {
        let n = 15 + (i as usize % 11);
        let terms: &[u32] = if i % 2 == 0 { &[2] } else { &[1] };
        let tree = TreeTemplate::build(terms, 1, 10).unwrap();
        let p = if i % 3 == 0 { 0.5 } else { 0.35 };
        let g = sample_er(n, p, 900 + i).unwrap();
        let h = sample_er(n, p, 1900 + i).unwrap();
        let kappa0 = if i % 4 == 1 { 2 } else { 50 };
        let cfg = MatchConfig { eta: ratio(1, 5), kappa0, embed_cap: matcher::DEFAULT_EMBED_CAP, seed: 77 + i };
        let mut s = MatchState::new(n, &tree, cfg).unwrap();
        while s.active() {
            let u = (1..=n).find(|&v| !s.is_matched_source(v)).unwrap();
            let want = literal_step(&g, &h, &tree, &s, u);
            let rec = s.step(&g, &h).unwrap();
            steps += 1;
            successes += rec.success as usize;
            if rec.u_s as usize != u || rec.mt != want || rec.success != want.is_some() {
                mismatches.push((i, rec.s));
            }
        }
        instances += 1;
    }
    report(
        9,
        mismatches.is_empty() && successes > 0,
        &format!("{instances} instances, {steps} steps ({successes} successes), mismatches {mismatches:?}"),
    );
}
