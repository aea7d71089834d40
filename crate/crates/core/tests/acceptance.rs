//! Acceptance gate. Runs every criterion, prints one line each and exits
//! nonzero if any fails. Runtime targets count towards the verdict.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use itertools::Itertools;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qgt_core::balanced::{decode_balanced, encode_balanced, BalancedId};
use qgt_core::bench::{run_grid, to_csv, GridPoint};
use qgt_core::bounds::{counting_check, find_unjammed_violation, verify_uniqueness};
use qgt_core::builder::{build_code, build_code_large, build_code_multiset, BuildMode, GroupTestingCode};
use qgt_core::decoder::decode;
use qgt_core::disperser::{verify_dispersion, CheckMode, Disperser, SeededDisperser};
use qgt_core::exhaustive::{subsets_up_to, DEFAULT_BUDGET};
use qgt_core::model::{feedback_vector, HiddenMultiset};
use qgt_core::random_code::{build_verified_random_code, draw_random_code, retry_claims, ClaimMode};
use qgt_core::sketch::{GraphSketch, StreamSketch};
use qgt_core::strong_selector::{build_ssui_auto, max_cooccurrence, verify_ssui};
use qgt_core::sui::{build_sui, verify_sui, SuiConfig};

/// Documented bound on `m / lower_bound` over the scaling grid.
const RATIO_BOUND: f64 = 1300.0;

/// Name, check and runtime target in seconds.
type Criterion = (&'static str, fn() -> Verdict, Option<u64>);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn roundtrips(code: &GroupTestingCode, k: &HiddenMultiset) -> bool {
    let fv = feedback_vector(code.queries(), k, code.alpha());
    decode(code, &fv).as_ref() == Ok(k)
}

/// `(n, k, alpha)` of the plain grid, with repeated alphas dropped.
fn plain_grid() -> Vec<(usize, usize, u64)> {
    let mut out = Vec::new();
    for n in [8, 16, 32] {
        for k in [1, 2, 3] {
            let alphas: BTreeSet<u64> = [2, 3, k as u64].into();
            out.extend(alphas.into_iter().map(|a| (n, k, a)));
        }
    }
    out
}

fn criterion_1() -> Verdict {
    let (mut sets, mut failures, mut first) = (0usize, 0usize, None);
    for (n, k, alpha) in plain_grid() {
        let code = match build_code(n, k, alpha) {
            Ok(c) => c,
            Err(e) => return verdict(false, format!("build_code({n}, {k}, {alpha}): {e}")),
        };
        for set in subsets_up_to(n, k) {
            sets += 1;
            if !roundtrips(&code, &HiddenMultiset::from_set(set.iter().copied())) {
                failures += 1;
                first.get_or_insert((n, k, alpha, set));
            }
        }
    }
    let mut detail = format!("{} grid points, {sets} sets, {failures} failures", plain_grid().len());
    if let Some(f) = first {
        detail += &format!(", first {f:?}");
    }
    verdict(failures == 0, detail)
}

fn criterion_2() -> Verdict {
    let (n, k, alpha) = (32, 8, 2);
    let code = match build_code_large(n, k, alpha) {
        Ok(c) => c,
        Err(e) => return verdict(false, e.to_string()),
    };
    let mut failures = 0;
    let exhaustive = subsets_up_to(n, 3)
        .filter(|s| !roundtrips(&code, &HiddenMultiset::from_set(s.iter().copied())))
        .count();
    failures += exhaustive;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10_000 {
        let size = rng.gen_range(0..=k);
        let set = HiddenMultiset::from_set(sample(&mut rng, n, size).iter().map(|i| i + 1));
        if !roundtrips(&code, &set) {
            failures += 1;
        }
    }
    verdict(
        failures == 0,
        format!("m = {}, all |K| <= 3 plus 10^4 random |K| <= 8, {failures} failures", code.len()),
    )
}

fn criterion_3() -> Verdict {
    let (n, k) = (16, 4);
    let code = match build_code_multiset(n, k) {
        Ok(c) => c,
        Err(e) => return verdict(false, e.to_string()),
    };
    let (mut checked, mut failures) = (0, 0);
    for total in 0..=k {
        for items in (1..=n).combinations_with_replacement(total) {
            let set = HiddenMultiset::from_counts(items.into_iter().map(|v| (v, 1)));
            checked += 1;
            if !roundtrips(&code, &set) {
                failures += 1;
            }
        }
    }
    verdict(
        failures == 0,
        format!("m = {}, {checked} multisets, {failures} failures", code.len()),
    )
}

fn criterion_4() -> Verdict {
    let (n, ell, kappa, alpha) = (16, 2, 4, 2);
    let fam = match build_ssui_auto(n, ell, kappa, alpha) {
        Ok(f) => f,
        Err(e) => return verdict(false, e.to_string()),
    };
    let ok = match verify_ssui(&fam.queries, n, ell, kappa, alpha, DEFAULT_BUDGET) {
        Ok(ok) => ok,
        Err(e) => return verdict(false, e.to_string()),
    };
    let co = max_cooccurrence(&fam.queries, n);
    let d = fam.rs.degree as usize;
    verdict(
        ok && co <= d,
        format!(
            "q = {}, d = {d}, c = {}, {} queries, oracle {}, max co-occurrence {co}",
            fam.rs.q,
            fam.rs.c,
            fam.queries.len(),
            if ok { "pass" } else { "FAIL" }
        ),
    )
}

fn criterion_5() -> Verdict {
    let (n, ell, eps, kappa, alpha) = (32, 4, 0.25, 4, 4);
    let cfg = SuiConfig::default();
    let fam = match build_sui(n, ell, eps, kappa, alpha, &cfg) {
        Ok(f) => f,
        Err(e) => return verdict(false, e.to_string()),
    };
    let report = match verify_sui(&fam.queries, n, ell, eps, kappa, alpha, DEFAULT_BUDGET) {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    // The disperser the configuration prescribes, whether or not the family
    // ended up composed from it.
    let built = match fam.disperser.clone().map(Ok).unwrap_or_else(|| {
        let params = cfg.disperser_params(ell, eps)?;
        SeededDisperser {
            params,
            check: CheckMode::Exhaustive {
                budget: DEFAULT_BUDGET,
            },
        }
        .construct(n)
    }) {
        Ok(d) => d,
        Err(e) => return verdict(false, format!("disperser: {e}")),
    };
    let ell_star = cfg.disperser_params(ell, eps).map(|p| p.ell_star).unwrap_or(1);
    let dispersion = verify_dispersion(
        &built.graph,
        ell_star,
        eps,
        CheckMode::Exhaustive {
            budget: DEFAULT_BUDGET,
        },
    );
    let dispersion_ok = dispersion.as_ref().is_ok_and(|&ok| ok);
    verdict(
        report.max_unselected == 0 && report.pass() && dispersion_ok,
        format!(
            "{:?}, max unselected {} (< {}), disperser |W| = {} seed {} after {} attempt(s), dispersion {}",
            fam.provenance,
            report.max_unselected,
            report.threshold,
            built.graph.right(),
            built.seed,
            built.attempts,
            match dispersion {
                Ok(true) => "pass".to_string(),
                Ok(false) => "FAIL".to_string(),
                Err(e) => e.to_string(),
            }
        ),
    )
}

fn criterion_6() -> Verdict {
    let mut problems = Vec::new();
    for (n, k, alpha) in plain_grid() {
        let code = match build_code(n, k, alpha) {
            Ok(c) => c,
            Err(e) => return verdict(false, e.to_string()),
        };
        let q = code.queries();
        match verify_uniqueness(q, n, k, alpha, DEFAULT_BUDGET) {
            Ok(true) => {}
            other => problems.push(format!("({n},{k},{alpha}) uniqueness {other:?}")),
        }
        match find_unjammed_violation(q, n, k, alpha, DEFAULT_BUDGET) {
            Ok(None) => {}
            other => problems.push(format!("({n},{k},{alpha}) claim A {other:?}")),
        }
        if !counting_check(code.len(), n, k, alpha) {
            problems.push(format!("({n},{k},{alpha}) counting"));
        }
    }
    let detail = if problems.is_empty() {
        format!("{} codes: uniqueness, claim A and counting all hold", plain_grid().len())
    } else {
        problems.join("; ")
    };
    verdict(problems.is_empty(), detail)
}

/// At this size `t1 + t2 > n`, so the constructor returns Round-Robin.
/// The drawn code is verified as well so that the claims are exercised on
/// random queries.
fn criterion_7() -> Verdict {
    let (n, k, alpha) = (32, 3, 8);
    let mode = ClaimMode::Exhaustive {
        budget: DEFAULT_BUDGET,
    };
    let built = build_verified_random_code(n, k, alpha, 0, mode, 16);
    let drawn = retry_claims(0, mode, 16, |seed| draw_random_code(n, k, alpha, seed));
    let (built, drawn) = match (built, drawn) {
        (Ok(b), Ok(d)) => (b, d),
        (b, d) => return verdict(false, format!("built {:?}, drawn {:?}", b.err(), d.err())),
    };
    let unique_built = verify_uniqueness(&built.code.queries, n, k, alpha, DEFAULT_BUDGET);
    let unique_drawn = verify_uniqueness(&drawn.code.queries, n, k, alpha, DEFAULT_BUDGET);
    verdict(
        built.report.pass() && drawn.report.pass() && unique_built == Ok(true) && unique_drawn == Ok(true),
        format!(
            "built: m = {}, fallback {}, {} attempt(s), uniqueness {:?}; drawn: m = {}, {} attempt(s) (seed {}), uniqueness {:?}",
            built.code.queries.len(),
            built.code.is_fallback(),
            built.attempts,
            unique_built,
            drawn.code.queries.len(),
            drawn.attempts,
            drawn.code.params.seed,
            unique_drawn
        ),
    )
}

fn criterion_8() -> Verdict {
    let n = 1024;
    let mut points = Vec::new();
    for k in [4usize, 8, 16, 32] {
        let alphas: BTreeSet<u64> = [2, 4, k.isqrt() as u64, k as u64].into();
        points.extend(alphas.into_iter().map(|alpha| GridPoint {
            n,
            k,
            alpha,
            mode: BuildMode::Auto,
        }));
    }
    let rows = match run_grid(&points) {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    print!("{}", to_csv(&rows, true));
    let monotone = rows
        .windows(2)
        .filter(|w| w[0].k == w[1].k)
        .all(|w| w[1].m <= w[0].m);
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    verdict(
        monotone && max_ratio <= RATIO_BOUND,
        format!(
            "{} rows, m nonincreasing in alpha: {monotone}, max ratio {max_ratio:.1} (bound {RATIO_BOUND})",
            rows.len()
        ),
    )
}

fn criterion_9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (n, cap) = (64, 6);
    let mut sketch = match StreamSketch::with_capacity(n, cap) {
        Ok(s) => s,
        Err(e) => return verdict(false, e.to_string()),
    };
    let bound = sketch.code().occurrence_max();
    let mut shadow = HiddenMultiset::new();
    let mut failures = Vec::new();
    for i in 0..1000 {
        let insert = shadow.total() == 0 || (shadow.total() < cap as u64 && rng.gen_bool(0.55));
        let cost = if insert {
            let v = rng.gen_range(1..=n);
            shadow.add(v, 1);
            sketch.insert(v)
        } else {
            let present: Vec<usize> = shadow.elements().collect();
            let v = present[rng.gen_range(0..present.len())];
            shadow.remove_one(v);
            sketch.delete(v)
        };
        match cost {
            Ok(c) if c <= bound => {}
            other => failures.push(format!("stream op {i}: cost {other:?}, bound {bound}")),
        }
        if sketch.reconstruct().as_ref() != Ok(&shadow) {
            failures.push(format!("stream op {i}: reconstruct mismatch"));
        }
    }

    let (nodes, max_degree) = (12, 3);
    let mut graph = match GraphSketch::new(nodes, max_degree) {
        Ok(g) => g,
        Err(e) => return verdict(false, e.to_string()),
    };
    let gbound = graph.sketch().code().occurrence_max();
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let degree = |edges: &BTreeSet<(usize, usize)>, x: usize| {
        edges.iter().filter(|&&(u, v)| u == x || v == x).count()
    };
    for i in 0..1000 {
        let u = rng.gen_range(1..=nodes);
        let v = rng.gen_range(1..=nodes);
        if u == v {
            continue;
        }
        let e = (u.min(v), u.max(v));
        let cost = if edges.contains(&e) {
            edges.remove(&e);
            graph.delete_edge(u, v)
        } else if degree(&edges, u) < max_degree && degree(&edges, v) < max_degree {
            edges.insert(e);
            graph.insert_edge(u, v)
        } else {
            continue;
        };
        match cost {
            Ok(c) if c <= gbound => {}
            other => failures.push(format!("graph op {i}: cost {other:?}, bound {gbound}")),
        }
        let expect: Vec<(usize, usize)> = edges.iter().copied().collect();
        if graph.reconstruct().as_ref() != Ok(&expect) {
            failures.push(format!("graph op {i}: reconstruct mismatch"));
        }
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("stream bound {bound}, graph bound {gbound}, all reconstructions exact")
        } else {
            format!("{} failures, first: {}", failures.len(), failures[0])
        },
    )
}

fn msb_first(id: &BalancedId) -> Vec<i64> {
    (1..=id.width()).rev().map(|p| i64::from(id.bit(p))).collect()
}

fn criterion_10() -> Verdict {
    let mut failures = 0usize;
    let mut checked = 0usize;
    for b in 2..=10 {
        let n = 1usize << b;
        let ids: Vec<BalancedId> = match (1..=n).map(|v| encode_balanced(v, n)).collect() {
            Ok(ids) => ids,
            Err(_) => return verdict(false, format!("encode failed at n = {n}")),
        };
        let words: BTreeSet<u64> = ids.iter().map(BalancedId::bits).collect();
        if words.len() != n {
            failures += 1;
        }
        let vecs: Vec<Vec<i64>> = ids.iter().map(msb_first).collect();
        for (i, bits) in vecs.iter().enumerate() {
            if decode_balanced(bits, n) != Some(i + 1) || ids[i].popcount() as usize != b {
                failures += 1;
            }
            for other in &vecs[i + 1..] {
                checked += 1;
                let sum: Vec<i64> = bits.iter().zip(other).map(|(x, y)| x + y).collect();
                if decode_balanced(&sum, n).is_some() {
                    failures += 1;
                }
            }
        }
    }
    verdict(
        failures == 0,
        format!("n = 4..1024, {checked} superposed pairs, {failures} failures"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("exhaustive roundtrip, plain", criterion_1, Some(60)),
        ("exhaustive roundtrip, large-k", criterion_2, Some(120)),
        ("multiset roundtrip", criterion_3, Some(120)),
        ("SSuI oracle", criterion_4, Some(30)),
        ("SuI oracle", criterion_5, Some(120)),
        ("uniqueness and claim A", criterion_6, None),
        ("random-code claims", criterion_7, Some(120)),
        ("scaling report", criterion_8, None),
        ("streaming and graph sketches", criterion_9, None),
        ("balanced identifiers", criterion_10, Some(5)),
    ];
    let mut all = true;
    for (i, (name, run, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= Duration::from_secs(l));
        let pass = v.pass && in_time;
        all &= pass;
        let target = limit.map_or(String::new(), |l| format!(" / {l}s"));
        println!(
            "criterion {:>2} {}: {name}: {} [{:.2}s{target}]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
