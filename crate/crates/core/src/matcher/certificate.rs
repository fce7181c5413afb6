//! Independent recheck of a finished run against both graphs.

use serde::Serialize;

use super::{GreedyOutcome, MatchTriple};
use crate::eval::overlap;
use crate::graph::GraphSample;
use crate::tree::TreeTemplate;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CertificateReport {
    pub successes: usize,
    /// `zeta * successes`
    pub certified: usize,
    pub overlap: usize,
    pub violations: Vec<String>,
}

impl CertificateReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty() && self.overlap >= self.certified
    }
}

/// Replays the trace from the identity seed and checks every matching triple:
/// tree edges present in both graphs, `Q` rooted at the pivot, `L` drawn from
/// matched sources under the usage cap, `Q` and `Q'` unmatched at the time,
/// and `pi(Q) = Q'`. Also checks that the permutation is a bijection and the
/// overlap reaches `zeta` per success.
pub fn verify_certificates(
    g: &GraphSample,
    h: &GraphSample,
    tree: &TreeTemplate,
    kappa0: u64,
    outcome: &GreedyOutcome,
) -> CertificateReport {
    let n = g.n();
    let mut violations = Vec::new();
    let perm = &outcome.permutation;

    let mut seen = vec![false; n];
    let bijective = perm.len() == n
        && perm.iter().all(|&t| {
            let ok = t >= 1 && t as usize <= n && !seen[t as usize - 1];
            if ok {
                seen[t as usize - 1] = true;
            }
            ok
        });
    if !bijective {
        violations.push("permutation is not a bijection of 1..=n".to_string());
        return CertificateReport { successes: 0, certified: 0, overlap: 0, violations };
    }

    let mut src_matched = vec![false; n];
    let mut dst_used = vec![false; n];
    for v in 0..outcome.seeded.min(n) {
        src_matched[v] = true;
        dst_used[v] = true;
        if perm[v] as usize != v + 1 {
            violations.push(format!("seed vertex {} not mapped to itself", v + 1));
        }
    }
    let mut usage = vec![0u64; n];
    let mut successes = 0;
    for rec in &outcome.trace {
        let u = rec.u_s as usize;
        if !(1..=n).contains(&u) {
            violations.push(format!("step {}: pivot {u} out of range", rec.s));
            continue;
        }
        if src_matched[u - 1] || src_matched[..u - 1].iter().any(|m| !m) {
            violations.push(format!("step {}: pivot {u} is not the smallest unmatched source", rec.s));
        }
        if rec.failed > rec.explored || rec.explored > rec.cand_size {
            violations.push(format!("step {}: counters out of order", rec.s));
        }
        match (&rec.mt, rec.success) {
            (Some(mt), true) => {
                successes += 1;
                check_triple(g, h, tree, kappa0, rec.s, u, mt, perm, &src_matched, &dst_used, &usage, &mut violations);
                for &v in &mt.q {
                    src_matched[v as usize - 1] = true;
                }
                for &v in &mt.q_prime {
                    dst_used[v as usize - 1] = true;
                }
                for &v in mt.l.iter().chain(&mt.q) {
                    usage[v as usize - 1] += 1;
                }
            }
            (None, false) => {
                let first_free = dst_used.iter().position(|d| !d);
                if first_free != Some(perm[u - 1] as usize - 1) {
                    violations.push(format!("step {}: failed pivot not sent to the smallest free target", rec.s));
                }
                src_matched[u - 1] = true;
                dst_used[perm[u - 1] as usize - 1] = true;
            }
            _ => violations.push(format!("step {}: success flag disagrees with triple", rec.s)),
        }
    }
    if usage.iter().any(|&c| c > kappa0) {
        violations.push("usage cap exceeded".to_string());
    }
    let certified = tree.zeta() * successes;
    let value = overlap(g, h, perm).unwrap_or(0);
    if value < certified {
        violations.push(format!("overlap {value} below certified {certified}"));
    }
    CertificateReport { successes, certified, overlap: value, violations }
}

#[allow(clippy::too_many_arguments)]
fn check_triple(
    g: &GraphSample,
    h: &GraphSample,
    tree: &TreeTemplate,
    kappa0: u64,
    s: usize,
    u: usize,
    mt: &MatchTriple,
    perm: &[u32],
    src_matched: &[bool],
    dst_used: &[bool],
    usage: &[u64],
    violations: &mut Vec<String>,
) {
    let n = g.n();
    let in_range = |v: &u32| *v >= 1 && *v as usize <= n;
    if mt.q.len() != tree.chi() || mt.q_prime.len() != tree.chi() || mt.l.len() != tree.xi() {
        violations.push(format!("step {s}: tuple lengths do not match the tree"));
        return;
    }
    if !mt.q.iter().chain(&mt.l).chain(&mt.q_prime).all(in_range) {
        violations.push(format!("step {s}: coordinate out of range"));
        return;
    }
    if mt.q[0] as usize != u {
        violations.push(format!("step {s}: Q does not start at the pivot"));
    }
    let mut src: Vec<u32> = mt.q.iter().chain(&mt.l).copied().collect();
    src.sort_unstable();
    let mut dst: Vec<u32> = mt.q_prime.clone();
    dst.sort_unstable();
    if src.windows(2).any(|w| w[0] == w[1]) || dst.windows(2).any(|w| w[0] == w[1]) {
        violations.push(format!("step {s}: repeated coordinate"));
    }
    for &v in &mt.q {
        if src_matched[v as usize - 1] {
            violations.push(format!("step {s}: internal vertex {v} already matched"));
        }
    }
    for &v in &mt.q_prime {
        if dst_used[v as usize - 1] {
            violations.push(format!("step {s}: target {v} already used"));
        }
    }
    for &v in &mt.l {
        if !src_matched[v as usize - 1] || usage[v as usize - 1] >= kappa0 {
            violations.push(format!("step {s}: leaf {v} outside the filtered matched set"));
        }
    }
    for (&a, &b) in mt.q.iter().zip(&mt.q_prime) {
        if perm[a as usize - 1] != b {
            violations.push(format!("step {s}: pi({a}) != {b}"));
        }
    }
    // label t (1-based) -> source vertex and target vertex
    let src_at = |t: usize| if t <= tree.chi() { mt.q[t - 1] } else { mt.l[t - tree.chi() - 1] };
    let dst_at = |t: usize| {
        if t <= tree.chi() {
            mt.q_prime[t - 1]
        } else {
            perm[mt.l[t - tree.chi() - 1] as usize - 1]
        }
    };
    for (a, b) in tree.edges() {
        if !g.edge_test(src_at(a) as usize, src_at(b) as usize).unwrap_or(false) {
            violations.push(format!("step {s}: tree edge ({a},{b}) missing in the first graph"));
        }
        if !h.edge_test(dst_at(a) as usize, dst_at(b) as usize).unwrap_or(false) {
            violations.push(format!("step {s}: tree edge ({a},{b}) missing in the second graph"));
        }
    }
}
