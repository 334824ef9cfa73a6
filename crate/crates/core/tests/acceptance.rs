//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines show up in `cargo test` output; exits nonzero if any fails.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mutalg::components::{is_component_map, is_isomorphism, mated_pairs_fixture, ComponentMap};
use mutalg::harness::{run_suite, CorpusSpec, Suite, SuiteReport};
use mutalg::structure::{generate_random, GeneratorConfig, RelationSpec};
use mutalg::{ma_profile, ElemId, Relation};

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn laws_clean(r: &SuiteReport, prefix: &str) -> (usize, usize) {
    r.laws
        .iter()
        .filter(|(law, _)| law.starts_with(prefix))
        .fold((0, 0), |(c, f), (_, n)| (c + n.checked, f + n.failed))
}

fn show_failures(r: &SuiteReport, prefix: &str) {
    for f in r
        .failures
        .iter()
        .filter(|f| f.law.starts_with(prefix))
        .take(3)
    {
        eprintln!("    case {} [{}]: {}", f.case, f.law, f.message);
        for line in f.repro.structure.lines() {
            eprintln!("      | {line}");
        }
    }
}

fn ma_spec(seed: u64, count: usize) -> CorpusSpec {
    CorpusSpec {
        universe: (1, 8),
        signature: vec![
            RelationSpec::dense("R", 2, 0.3),
            RelationSpec::dense("T", 3, 0.12),
            RelationSpec::dense("Q", 4, 0.04),
            RelationSpec::bounded("B", 2, 0.3, 2),
        ],
        ..CorpusSpec::new(seed, count)
    }
}

/// Largest fiber over all proper splits and over singleton splits, counted
/// directly.
fn fiber_maxima(r: &Relation) -> (usize, usize) {
    let n = r.arity();
    let (mut all, mut single) = (0, 0);
    for mask in 1u32..(1 << n) - 1 {
        let mut counts: HashMap<Vec<ElemId>, usize> = HashMap::new();
        for t in r.iter() {
            let key: Vec<ElemId> = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| t[i])
                .collect();
            *counts.entry(key).or_default() += 1;
        }
        let m = counts.values().copied().max().unwrap_or(0);
        all = all.max(m);
        if mask.count_ones() == 1 {
            single = single.max(m);
        }
    }
    (all, single)
}

fn singleton_reduction() -> Outcome {
    let mut failures = 0;
    let mut by_arity = [0usize; 5];
    for seed in 0..1000u64 {
        let arity = 2 + (seed % 3) as usize;
        let spec = if seed % 2 == 0 {
            RelationSpec::dense("R", arity, [0.5, 0.2, 0.05][arity - 2])
        } else {
            RelationSpec::bounded(
                "R",
                arity,
                [0.5, 0.2, 0.05][arity - 2],
                1 + (seed % 4) as usize,
            )
        };
        let cfg = GeneratorConfig {
            seed,
            universe_size: 1 + (seed % 8) as usize,
            base_size: 0,
            relations: vec![spec],
        };
        let s = generate_random(&cfg).unwrap();
        let r = s.relation("R").unwrap();
        let (all, single) = fiber_maxima(r);
        let k = ma_profile(r).uniform_k;
        by_arity[arity] += 1;
        if !(k == all && all == single) {
            failures += 1;
            eprintln!(
                "    seed {seed}: uniform K {k}, all splits {all}, singleton splits {single}"
            );
        }
    }
    outcome(
        failures == 0,
        format!(
            "1000 relations (arity 2/3/4: {}/{}/{}), {failures} failures",
            by_arity[2], by_arity[3], by_arity[4]
        ),
    )
}

fn closure_rules() -> Outcome {
    let r = run_suite(&ma_spec(2, 250), Suite::MaLaws).unwrap();
    let laws = [
        "permute",
        "project",
        "substitute",
        "subset",
        "strengthen",
        "conjoin",
        "count-expand",
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for law in laws {
        let c = r.laws.get(law).copied().unwrap_or_default();
        ok &= c.checked >= 500 && c.failed == 0;
        parts.push(format!("{law} {}/{}", c.checked - c.failed, c.checked));
        show_failures(&r, law);
    }
    outcome(ok, parts.join(", "))
}

fn rewrite_report() -> (SuiteReport, Duration) {
    let start = Instant::now();
    let r = run_suite(&CorpusSpec::new(3, 300), Suite::RewriteSoundness).unwrap();
    (r, start.elapsed())
}

fn counting_identities(r: &SuiteReport) -> Outcome {
    let (checked, failed) = laws_clean(r, "counting-identity");
    show_failures(r, "counting-identity");
    outcome(
        checked >= r.cases && failed == 0,
        format!(
            "{checked} identity checks over {} cases, {failed} failures",
            r.cases
        ),
    )
}

fn inclusion_exclusion(r: &SuiteReport) -> Outcome {
    let (checked, failed) = laws_clean(r, "inclusion-exclusion");
    show_failures(r, "inclusion-exclusion");
    outcome(
        r.cases >= 300 && checked == 12 * r.cases && failed == 0,
        format!(
            "{checked} (k <= 3, r <= 3) checks over {} cases, {failed} failures",
            r.cases
        ),
    )
}

fn elimination(r: &SuiteReport) -> Outcome {
    let (checked, failed) = laws_clean(r, "elimination");
    let (shape, bad_shape) = laws_clean(r, "ma-star-shape");
    show_failures(r, "elimination");
    let branch = |b: &str| r.totals.get(&format!("branch.{b}")).copied().unwrap_or(0);
    let fallback = branch("algebraic") + branch("nonalgebraic");
    let ok = checked >= 200
        && failed == 0
        && bad_shape == 0
        && branch("cofinite") > 0
        && branch("counting") > 0
        && fallback > 0;
    outcome(
        ok,
        format!(
            "{checked} rewrites ({shape} shape-checked), {failed} failures; branches: cofinite {}, one-variable {fallback}, counting {}, positive {}; {} structure checks",
            branch("cofinite"),
            branch("counting"),
            branch("positive"),
            r.totals.get("elimination.structures_checked").copied().unwrap_or(0),
        ),
    )
}

fn dichotomy(r: &SuiteReport) -> Outcome {
    let (checked, failed) = laws_clean(r, "unary-dichotomy");
    show_failures(r, "unary-dichotomy");
    let get = |k: &str| r.totals.get(k).copied().unwrap_or(0);
    outcome(
        checked > 0 && failed == 0,
        format!(
            "{checked} structure checks ({} positive, {} negative, {} unclassifiable forms), {failed} failures",
            get("dichotomy.positive"),
            get("dichotomy.negative"),
            get("dichotomy.unclassifiable")
        ),
    )
}

fn greedy_bound() -> Outcome {
    let r = run_suite(&CorpusSpec::new(7, 250), Suite::FcpLaws).unwrap();
    let (checked, failed) = laws_clean(&r, "greedy-bound");
    show_failures(&r, "greedy");
    let inconsistent = r.totals.get("inconsistent_families").copied().unwrap_or(0);
    outcome(
        inconsistent >= 500 && failed == 0 && r.passed,
        format!(
            "{inconsistent} inconsistent families, {checked} checked, {failed} violations; largest subfamily {}, size = K in {}, size = K+1 in {}",
            r.maxima.get("greedy_size").copied().unwrap_or(0),
            r.totals.get("greedy_size_equals_k").copied().unwrap_or(0),
            r.totals.get("greedy_size_equals_k_plus_one").copied().unwrap_or(0)
        ),
    )
}

fn component_theorem() -> Outcome {
    let r = run_suite(&CorpusSpec::new(8, 300), Suite::ComponentLaws).unwrap();
    let (fwd, fwd_failed) = laws_clean(&r, "component-map-implies-isomorphism");
    let (back, back_failed) = laws_clean(&r, "isomorphism-implies-component-map");
    show_failures(&r, "");
    outcome(
        r.cases >= 300 && fwd > 0 && back > 0 && r.passed,
        format!(
            "{} structures; forward {fwd} checked, {fwd_failed} failed; converse {back} checked, {back_failed} failed",
            r.cases
        ),
    )
}

fn mated_pairs() -> Outcome {
    let mut verdicts = Vec::new();
    let mut ok = true;
    for m in [2, 3, 5] {
        let (s, d, flip) = mated_pairs_fixture(m).unwrap();
        let id = ComponentMap::identity(s.size());
        let got = [
            is_component_map(&flip, &s, &d, &s, &d).unwrap(),
            is_isomorphism(&flip, &s, &s).unwrap(),
            is_component_map(&id, &s, &d, &s, &d).unwrap(),
            is_isomorphism(&id, &s, &s).unwrap(),
        ];
        ok &= got == [true, false, true, true];
        verdicts.push(format!("m={m} flip cm={} iso={}", got[0], got[1]));
    }
    outcome(ok, verdicts.join("; "))
}

fn evaluator_diff() -> Outcome {
    let spec = CorpusSpec {
        universe: (1, 5),
        formula_depth: 4,
        ..CorpusSpec::new(10, 1000)
    };
    let r = run_suite(&spec, Suite::EvaluatorDiff).unwrap();
    let (checked, failed) = laws_clean(&r, "evaluators-agree");
    show_failures(&r, "evaluators-agree");
    outcome(
        checked == 1000 && failed == 0,
        format!("{checked} (structure, formula) pairs, {failed} discrepancies"),
    )
}

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let o = f();
    (o, start.elapsed())
}

fn main() -> ExitCode {
    let mut all = true;
    let mut line =
        |n: usize, name: &str, (o, took): (Outcome, Duration), limit: Option<Duration>| {
            let in_time = limit.is_none_or(|l| took <= l);
            let ok = o.ok && in_time;
            all &= ok;
            let limit = limit.map_or(String::new(), |l| format!(" (limit {:?})", l));
            println!(
                "criterion {n:>2} {}: {name}: {} [{:.2?}{limit}]",
                if ok { "PASS" } else { "FAIL" },
                o.detail,
                took
            );
        };
    let secs = Duration::from_secs;
    line(
        1,
        "singleton reduction",
        timed(singleton_reduction),
        Some(secs(30)),
    );
    line(
        2,
        "closure-rule soundness",
        timed(closure_rules),
        Some(secs(120)),
    );
    let (rewrite, took) = rewrite_report();
    line(
        3,
        "counting identities",
        (counting_identities(&rewrite), took),
        Some(secs(120)),
    );
    line(
        4,
        "inclusion-exclusion",
        (inclusion_exclusion(&rewrite), took),
        None,
    );
    line(
        5,
        "existential elimination",
        (elimination(&rewrite), took),
        Some(secs(300)),
    );
    line(6, "unary dichotomy", (dichotomy(&rewrite), took), None);
    line(7, "greedy bound", timed(greedy_bound), None);
    line(8, "component theorem", timed(component_theorem), None);
    line(
        9,
        "mated-pairs regression",
        timed(mated_pairs),
        Some(secs(1)),
    );
    line(10, "evaluator differential", timed(evaluator_diff), None);
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
