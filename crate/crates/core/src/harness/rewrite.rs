//! Rewrite soundness. Counting identities and the inclusion–exclusion forms
//! are checked by evaluation; so is existential elimination. The unary
//! bound read off a rewritten form is checked last.

use std::collections::BTreeMap;

use itertools::Itertools;
use rand::seq::IndexedRandom;
use rand::Rng;

use super::{case_rng, random_structure, shrink_structure, CaseLog, CorpusSpec, HarnessError};
use crate::formula::random::{random_formula, FormulaShape};
use crate::formula::{evaluate, Cmp, Formula};
use crate::rewrite::{
    at_least_count_dnf, at_most_count_dnf, certificate_violations, classify_unary, count_expand,
    eliminate_exists, exact_count_dnf, to_dnf, verify_rewrite, Asserted, CertifiedFormula,
    Certifier, Derivable, MAStarForm, Side,
};
use crate::structure::{ElemId, Structure};

/// Structures every elimination is verified on, sized to clear typical thresholds.
pub(super) fn verify_corpus(spec: &CorpusSpec) -> Result<Vec<Structure>, HarnessError> {
    let (lo, hi) = spec.verify_universe;
    let m = spec.verify_structures;
    (0..m)
        .map(|j| {
            let n = if m > 1 {
                lo + (hi - lo) * j / (m - 1)
            } else {
                hi
            };
            let mut rng = case_rng(spec.seed, j, 99);
            random_structure(&mut rng, spec, (n, n), 0).map_err(HarnessError::from)
        })
        .collect()
}

fn same<'a>(
    a: &'a Formula,
    b: &'a Formula,
    ctx: &'a [String],
) -> impl Fn(&Structure) -> Result<(), String> + 'a {
    move |t: &Structure| {
        let (l, r) = (evaluate(t, a, ctx), evaluate(t, b, ctx));
        match (l, r) {
            (Ok(l), Ok(r)) if l == r => Ok(()),
            (Ok(l), Ok(r)) => Err(format!(
                "`{a}` has {} tuples, `{b}` has {}",
                l.len(),
                r.len()
            )),
            // a parameter removed by shrinking
            (Err(_), _) | (_, Err(_)) => Ok(()),
        }
    }
}

fn vars(names: &[&str]) -> Vec<String> {
    names.iter().map(|v| v.to_string()).collect()
}

fn counting_identities<R: Rng>(rng: &mut R, spec: &CorpusSpec, s: &Structure, log: &mut CaseLog) {
    let shape = FormulaShape {
        max_depth: 2,
        quantifiers: false,
        counting: false,
        param_rate: 0.1,
    };
    let ctx = vars(&["x", "y"]);
    let outer = vars(&["y"]);
    let xs = vars(&["x"]);
    let phi = random_formula(rng, &spec.signature_pairs(), &ctx, s.universe(), &shape);
    let at_least = |r: usize| Formula::count(Cmp::AtLeast, r, xs.clone(), phi.clone());
    let Ok(cert) = CertifiedFormula::measured(s, phi.clone(), ctx.clone()) else {
        return;
    };
    for r in 0..=3 {
        let expanded = count_expand(&cert, &xs, r).expect("one variable remains");
        let pairs = [
            ("count-expand", at_least(r), expanded.formula().clone()),
            (
                "exactly-split",
                Formula::count(Cmp::Exactly, r, xs.clone(), phi.clone()),
                Formula::And(vec![at_least(r), Formula::not(at_least(r + 1))]),
            ),
            (
                "at-most-split",
                Formula::count(Cmp::AtMost, r, xs.clone(), phi.clone()),
                Formula::not(at_least(r + 1)),
            ),
        ];
        for (name, a, b) in pairs {
            log.check(
                &format!("counting-identity.{name}"),
                s,
                Some((&a, &outer)),
                same(&a, &b, &outer),
            );
        }
    }
    let extra = [
        (
            "exists",
            Formula::exists(xs.clone(), phi.clone()),
            at_least(1),
        ),
        (
            "forall",
            Formula::forall(xs.clone(), phi.clone()),
            Formula::not(Formula::exists(xs.clone(), Formula::not(phi.clone()))),
        ),
        ("at-least-zero", at_least(0), Formula::True),
    ];
    for (name, a, b) in extra {
        log.check(
            &format!("counting-identity.{name}"),
            s,
            Some((&a, &outer)),
            same(&a, &b, &outer),
        );
    }
}

fn inclusion_exclusion<R: Rng>(rng: &mut R, s: &Structure, log: &mut CaseLog) {
    let rels: Vec<(String, usize)> = s
        .relations()
        .map(|(n, r)| (n.to_string(), r.arity()))
        .collect();
    let others = ["y", "z"];
    let parts: Vec<Formula> = (0..3)
        .map(|_| {
            let (name, arity) = rels.choose(rng).unwrap();
            let mut args = vec!["x".to_string()];
            args.extend((1..*arity).map(|_| others.choose(rng).unwrap().to_string()));
            let k = rng.random_range(0..*arity);
            args.swap(0, k);
            Formula::atom(name.as_str(), &args)
        })
        .collect();
    for k in 1..=3 {
        let body = Formula::or(parts[..k].to_vec());
        for r in 0..=3 {
            let run = |t: &Structure| -> Result<(), String> {
                let certs: Vec<CertifiedFormula> = parts[..k]
                    .iter()
                    .map(|p| CertifiedFormula::measured(t, p.clone(), p.free_vars()))
                    .collect::<Result<_, _>>()
                    .map_err(|e| e.to_string())?;
                let forms = [
                    (Cmp::Exactly, exact_count_dnf(&certs, "x", r)),
                    (Cmp::AtMost, at_most_count_dnf(&certs, "x", r)),
                    (Cmp::AtLeast, at_least_count_dnf(&certs, "x", r)),
                ];
                for (cmp, form) in forms {
                    let form = form.map_err(|e| e.to_string())?;
                    let direct = Formula::count(cmp, r, vec!["x".into()], body.clone());
                    let want = evaluate(t, &direct, &form.ctx).map_err(|e| e.to_string())?;
                    let got = form.evaluate(t).map_err(|e| e.to_string())?;
                    if want != got {
                        return Err(format!(
                            "{direct}: normal form gives {} tuples, direct {}",
                            got.len(),
                            want.len()
                        ));
                    }
                }
                Ok(())
            };
            log.check("inclusion-exclusion", s, Some((&body, &[])), run);
        }
    }
}

/// A random disjunction of conjunctions of literals over `ctx`, biased
/// towards mentioning `z`.
fn random_dnf<R: Rng>(rng: &mut R, rels: &[(String, usize)], ctx: &[String]) -> Formula {
    let disjuncts = (0..rng.random_range(1..=3))
        .map(|_| {
            let lits = (0..rng.random_range(1..=3))
                .map(|_| {
                    let (name, arity) = rels.choose(rng).unwrap();
                    let mut args: Vec<String> = (0..*arity)
                        .map(|_| ctx.choose(rng).unwrap().clone())
                        .collect();
                    if rng.random_bool(0.7) {
                        let i = rng.random_range(0..*arity);
                        args[i] = "z".into();
                    }
                    let atom = Formula::atom(name.as_str(), &args);
                    if rng.random_bool(0.45) {
                        Formula::not(atom)
                    } else {
                        atom
                    }
                })
                .collect();
            Formula::and(lits)
        })
        .collect();
    Formula::or(disjuncts)
}

/// Per-`ȳ` count of the classified side, checked against `k`.
fn dichotomy_holds(form: &MAStarForm, t: &Structure, side: Side, k: usize) -> Result<(), String> {
    let rel = form.evaluate(t).map_err(|e| e.to_string())?;
    let px = form.ctx.iter().position(|v| v == "x").unwrap();
    let mut counts: BTreeMap<Vec<ElemId>, usize> = BTreeMap::new();
    for tuple in rel.iter() {
        let mut y = tuple.clone();
        y.remove(px);
        *counts.entry(y).or_default() += 1;
    }
    let n = t.size();
    let width = form.ctx.len() - 1;
    let ys: Vec<Vec<ElemId>> = if width == 0 {
        vec![Vec::new()]
    } else {
        (0..width)
            .map(|_| 0..t.size() as ElemId)
            .multi_cartesian_product()
            .collect()
    };
    for y in ys {
        let pos = counts.get(&y).copied().unwrap_or(0);
        let count = match side {
            Side::Positive => pos,
            Side::Negative => n - pos,
        };
        if count >= k {
            let names: Vec<&str> = t.names_of(&y).collect();
            return Err(format!(
                "{side:?} side has {count} >= {k} solutions at ({})",
                names.join(", ")
            ));
        }
    }
    Ok(())
}

fn elimination<R: Rng>(
    rng: &mut R,
    spec: &CorpusSpec,
    index: usize,
    s: &Structure,
    corpus: &[Structure],
    log: &mut CaseLog,
) {
    let bounded = spec.bounded();
    let mut rels: Vec<(String, usize)> = bounded.iter().map(|(n, a, _)| (n.clone(), *a)).collect();
    rels.extend(
        spec.signature
            .iter()
            .filter(|r| r.arity == 1)
            .map(|r| (r.name.clone(), 1)),
    );
    if !bounded.iter().any(|(_, a, _)| *a >= 2) {
        log.add("elimination.no_bounded_relation", 1);
        return;
    }
    let ctx = if rng.random_bool(0.5) {
        vars(&["x", "y", "z"])
    } else {
        vars(&["x", "z"])
    };
    let psi = if index.is_multiple_of(2) {
        random_dnf(rng, &rels, &ctx)
    } else {
        let shape = FormulaShape {
            max_depth: 3,
            quantifiers: false,
            counting: false,
            param_rate: 0.05,
        };
        random_formula(rng, &rels, &ctx, s.universe(), &shape)
    };
    let asserted = Asserted::relations(bounded.iter().map(|(n, _, k)| (n.clone(), *k)));
    let certifier: [&dyn Certifier; 2] = [&asserted, &Derivable];
    let form = match to_dnf(&psi, &ctx, &certifier) {
        Ok(f) => f,
        Err(_) => {
            log.add("elimination.uncertified", 1);
            return;
        }
    };
    let out = match eliminate_exists(&form, "z", Some(s)) {
        Ok(o) => o,
        Err(e) => {
            log.fail("elimination", e.to_string(), s, Some((&psi, &ctx)), None);
            return;
        }
    };
    let before = Formula::exists(vec!["z".into()], psi.clone());
    log.tally("ma-star-shape", out.check_shape().is_ok());
    log.tally("replay", out.literals().all(|l| l.cert.replay().is_ok()));
    for b in &out.branches {
        log.add(
            &format!("branch.{}", format!("{:?}", b.branch).to_lowercase()),
            1,
        );
    }
    log.max("threshold", out.size_threshold);

    let mut all: Vec<Structure> = corpus.to_vec();
    all.push(s.clone());
    let report = verify_rewrite(&before, &out, &all);
    log.add("elimination.structures_checked", report.checked);
    log.add("elimination.structures_skipped", report.skipped.len());
    if report.passed {
        log.tally("elimination", true);
    } else {
        let (at, message) = match (
            report.counterexamples.first(),
            report.derived_violations().next(),
        ) {
            (Some(c), _) => (
                c.structure,
                format!(
                    "differs at ({}) and {} more",
                    c.tuple.join(", "),
                    c.differing - 1
                ),
            ),
            (None, Some(v)) => (
                v.structure,
                format!(
                    "`{}` claims K={} but measures {}",
                    v.formula, v.claimed, v.measured
                ),
            ),
            (None, None) => unreachable!("a failed report has a witness"),
        };
        let small = shrink_structure(&all[at], true, |t| {
            !verify_rewrite(&before, &out, std::slice::from_ref(t)).passed
        });
        let octx = out.ctx.clone();
        log.fail(
            "elimination",
            message,
            &small,
            Some((&before, &octx)),
            Some(format!("rewritten: {out}")),
        );
    }

    if !out.ctx.iter().any(|v| v == "x") {
        return;
    }
    let class = match classify_unary(&out, "x") {
        Ok(c) => c,
        Err(_) => {
            log.add("dichotomy.unclassifiable", 1);
            return;
        }
    };
    log.add(&format!("dichotomy.{:?}", class.side).to_lowercase(), 1);
    let nodes: Vec<CertifiedFormula> = out.literals().flat_map(|l| l.cert.nodes()).collect();
    for (j, t) in all.iter().enumerate() {
        let respects = certificate_violations(t, j, &nodes).is_ok_and(|v| v.is_empty())
            && out.assumptions.iter().all(|a| a.holds(t));
        if !respects {
            continue;
        }
        let run = |u: &Structure| {
            let respects = certificate_violations(u, j, &nodes).is_ok_and(|v| v.is_empty())
                && out.assumptions.iter().all(|a| a.holds(u));
            if respects {
                dichotomy_holds(&out, u, class.side, class.k)
            } else {
                Ok(())
            }
        };
        let f = out.to_formula();
        log.check("unary-dichotomy", t, Some((&f, &out.ctx)), run);
    }
}

pub(super) fn run_case(
    spec: &CorpusSpec,
    index: usize,
    corpus: &[Structure],
    log: &mut CaseLog,
) -> Result<(), HarnessError> {
    let mut rng = case_rng(spec.seed, index, 2);
    let s = random_structure(&mut rng, spec, spec.universe, 0)?;
    counting_identities(&mut rng, spec, &s, log);
    inclusion_exclusion(&mut rng, &s, log);
    elimination(&mut rng, spec, index, &s, corpus, log);
    Ok(())
}
