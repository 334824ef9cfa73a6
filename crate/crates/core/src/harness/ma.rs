//! Fiber laws: singleton reduction, and each closure rule's bound measured
//! on the structure it was derived for.

use std::collections::HashMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::{case_rng, random_structure, CaseLog, CorpusSpec, HarnessError};
use crate::formula::random::{random_formula, FormulaShape};
use crate::formula::Formula;
use crate::ma::ma_profile;
use crate::rewrite::{self, CertifiedFormula};
use crate::structure::{ElemId, Relation, Structure};

/// Largest fiber over every proper split, and over the singleton splits only,
/// by direct counting.
pub(crate) fn fiber_oracle(r: &Relation) -> (usize, usize) {
    let n = r.arity();
    let (mut all, mut single) = (0, 0);
    for mask in 1..(1u32 << n) - 1 {
        let mut counts: HashMap<Vec<ElemId>, usize> = HashMap::new();
        for t in r.iter() {
            let key = (0..n)
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

fn vars(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Measures `derived` on `s` against its claimed bound.
fn admitted(
    law: &str,
    derived: &CertifiedFormula,
    s: &Structure,
) -> Result<(usize, usize), String> {
    let p = derived.profile(s).map_err(|e| e.to_string())?;
    if derived.bound().admits(&p) {
        Ok((derived.bound().k, p.uniform_k))
    } else {
        Err(format!(
            "{law}: `{}` claims {} but measures K={}",
            derived.formula(),
            derived.bound(),
            p.uniform_k
        ))
    }
}

pub(super) fn run_case(
    spec: &CorpusSpec,
    index: usize,
    log: &mut CaseLog,
) -> Result<(), HarnessError> {
    let mut rng = case_rng(spec.seed, index, 1);
    let s = random_structure(&mut rng, spec, spec.universe, 0)?;
    let names: Vec<(String, usize)> = s
        .relations()
        .map(|(n, r)| (n.to_string(), r.arity()))
        .collect();
    let shape = FormulaShape {
        max_depth: 2,
        quantifiers: false,
        counting: false,
        param_rate: 0.1,
    };
    for (name, arity) in names.iter().cloned() {
        if arity < 2 {
            continue;
        }
        log.add("relations", 1);
        log.check("singleton-reduction", &s, None, |t| {
            let r = t.relation(&name).unwrap();
            let (all, single) = fiber_oracle(r);
            let k = ma_profile(r).uniform_k;
            compare_oracle(k, all, single)
        });
        let atom = Formula::atom(name.as_str(), &vars("v", arity));
        let ctx = vars("v", arity);
        let measured = |t: &Structure| {
            CertifiedFormula::measured(t, atom.clone(), ctx.clone()).map_err(|e| e.to_string())
        };

        let mut order = ctx.clone();
        order.shuffle(&mut rng);
        let run_permute = |t: &Structure| {
            let p = measured(t)?;
            let d = rewrite::permute(&p, order.clone()).map_err(|e| e.to_string())?;
            let got = admitted("permute", &d, t)?;
            let before = p.profile(t).map_err(|e| e.to_string())?.uniform_k;
            if before != got.1 {
                return Err(format!("permuting changed K from {before} to {}", got.1));
            }
            Ok(got)
        };
        tight(log, "permute", run_permute(&s));
        log.check("permute", &s, Some((&atom, &ctx)), |t| {
            run_permute(t).map(drop)
        });

        let cut = rng.random_range(1..arity);
        let mut hidden = ctx.clone();
        hidden.shuffle(&mut rng);
        hidden.truncate(cut);
        let run_project = |t: &Structure| {
            let d = rewrite::project(&measured(t)?, hidden.clone()).map_err(|e| e.to_string())?;
            admitted("project", &d, t)
        };
        tight(log, "project", run_project(&s));
        log.check("project", &s, Some((&atom, &ctx)), |t| {
            run_project(t).map(drop)
        });

        let var = ctx.choose(&mut rng).unwrap().clone();
        let element = s.universe().choose(&mut rng).unwrap().clone();
        let run_substitute = |t: &Structure| {
            if t.element_id(&element).is_none() {
                return Ok((0, 0));
            }
            let d =
                rewrite::substitute(&measured(t)?, &var, &element).map_err(|e| e.to_string())?;
            admitted("substitute", &d, t)
        };
        tight(log, "substitute", run_substitute(&s));
        log.check("substitute", &s, Some((&atom, &ctx)), |t| {
            run_substitute(t).map(drop)
        });

        let with = random_formula(&mut rng, &names, &ctx, s.universe(), &shape);
        let run_strengthen = |t: &Structure| {
            if with.params().iter().any(|e| t.element_id(e).is_none()) {
                return Ok((0, 0));
            }
            let d = rewrite::strengthen(&measured(t)?, with.clone()).map_err(|e| e.to_string())?;
            admitted("strengthen", &d, t)
        };
        tight(log, "strengthen", run_strengthen(&s));
        log.check("strengthen", &s, Some((&with, &ctx)), |t| {
            run_strengthen(t).map(drop)
        });

        let keep_rate: f64 = rng.random_range(0.2..0.9);
        let kept: Vec<Vec<ElemId>> = s
            .relation(&name)
            .unwrap()
            .iter()
            .filter(|_| rng.random_bool(keep_rate))
            .cloned()
            .collect();
        log.check("subset", &s, None, |t| {
            let full = t.relation(&name).unwrap();
            let sub =
                Relation::from_tuples(arity, kept.iter().filter(|u| full.contains(u)).cloned())
                    .map_err(|e| e.to_string())?;
            let (a, b) = (ma_profile(&sub).uniform_k, ma_profile(full).uniform_k);
            if a <= b {
                Ok(())
            } else {
                Err(format!(
                    "a subset measures K={a} above the whole relation's K={b}"
                ))
            }
        });

        let (other, other_arity) = names.choose(&mut rng).unwrap().clone();
        let left = Formula::atom(
            name.as_str(),
            &[vec!["x".to_string()], vars("a", arity - 1)].concat(),
        );
        let right = Formula::atom(
            other.as_str(),
            &[vec!["x".to_string()], vars("b", other_arity - 1)].concat(),
        );
        let both = Formula::And(vec![left.clone(), right.clone()]);
        let run_conjoin = |t: &Structure| {
            let cert = |f: &Formula| {
                CertifiedFormula::measured(t, f.clone(), f.free_vars()).map_err(|e| e.to_string())
            };
            let d = rewrite::conjoin_shared(&[cert(&left)?, cert(&right)?], "x")
                .map_err(|e| e.to_string())?;
            admitted("conjoin", &d, t)
        };
        tight(log, "conjoin", run_conjoin(&s));
        log.check("conjoin", &s, Some((&both, &[])), |t| {
            run_conjoin(t).map(drop)
        });

        let r = rng.random_range(1..=3);
        let cut = rng.random_range(1..arity);
        let mut counted = ctx.clone();
        counted.shuffle(&mut rng);
        counted.truncate(cut);
        let run_expand = |t: &Structure| {
            let d = rewrite::count_expand(&measured(t)?, &counted, r).map_err(|e| e.to_string())?;
            admitted("count-expand", &d, t)
        };
        tight(log, "count-expand", run_expand(&s));
        log.check("count-expand", &s, Some((&atom, &ctx)), |t| {
            run_expand(t).map(drop)
        });
    }
    Ok(())
}

fn tight(log: &mut CaseLog, law: &str, res: Result<(usize, usize), String>) {
    if let Ok((claimed, got)) = res {
        log.max(&format!("{law}.claimed"), claimed);
        log.max(&format!("{law}.measured"), got);
    }
}

fn compare_oracle(k: usize, all: usize, single: usize) -> Result<(), String> {
    if k == all && all == single {
        Ok(())
    } else {
        Err(format!(
            "uniform K {k}, all-partition oracle {all}, singleton oracle {single}"
        ))
    }
}
