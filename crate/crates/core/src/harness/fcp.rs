//! The greedy subfamily bound, checked against exhaustive search.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::{case_rng, random_structure, CaseLog, CorpusSpec, HarnessError};
use crate::fcp::{
    consistency_threshold, family_consistent, greedy_subfamily, minimal_inconsistent_size, Greedy,
    ParameterFamily, Threshold,
};
use crate::formula::Formula;
use crate::structure::{ElemId, Structure};

const FAMILIES_PER_CASE: usize = 4;
const FAMILY_SIZE: usize = 8;

fn rank(t: Threshold) -> usize {
    match t {
        Threshold::All => usize::MAX,
        Threshold::Upto(k) => k,
    }
}

pub(super) fn run_case(
    spec: &CorpusSpec,
    index: usize,
    log: &mut CaseLog,
) -> Result<(), HarnessError> {
    let mut rng = case_rng(spec.seed, index, 3);
    let s = random_structure(&mut rng, spec, spec.universe, 0)?;
    let rels: Vec<(String, usize)> = s
        .relations()
        .filter(|(_, r)| r.arity() >= 2)
        .map(|(n, r)| (n.to_string(), r.arity()))
        .collect();
    if rels.is_empty() {
        return Ok(());
    }
    for _ in 0..FAMILIES_PER_CASE {
        let (name, arity) = rels.choose(&mut rng).unwrap().clone();
        let nx = if arity >= 3 && rng.random_bool(0.3) {
            2
        } else {
            1
        };
        let x: Vec<String> = (0..nx).map(|i| format!("x{i}")).collect();
        let y: Vec<String> = (0..arity - nx).map(|i| format!("y{i}")).collect();
        let mut phi = Formula::atom(name.as_str(), &[x.clone(), y.clone()].concat());
        if rng.random_bool(0.3) {
            let (other, oa) = rels.choose(&mut rng).unwrap().clone();
            let args: Vec<String> = (0..oa)
                .map(|i| if i == 0 { x[0].clone() } else { y[0].clone() })
                .collect();
            phi = Formula::And(vec![phi, Formula::atom(other.as_str(), &args)]);
        }
        let params: Vec<Vec<ElemId>> = (0..=FAMILY_SIZE)
            .map(|_| {
                (0..y.len())
                    .map(|_| rng.random_range(0..s.size()) as ElemId)
                    .collect()
            })
            .collect();
        check_family(&s, &phi, &x, &y, params, log);
    }
    Ok(())
}

fn check_family(
    s: &Structure,
    phi: &Formula,
    x: &[String],
    y: &[String],
    params: Vec<Vec<ElemId>>,
    log: &mut CaseLog,
) {
    let extra = params[FAMILY_SIZE].clone();
    let build =
        |ps: Vec<Vec<ElemId>>| ParameterFamily::new(s, phi.clone(), x.to_vec(), y.to_vec(), ps);
    let fam = match build(params[..FAMILY_SIZE].to_vec()) {
        Ok(f) => f,
        Err(e) => {
            log.fail("family", e.to_string(), s, None, None);
            return;
        }
    };
    let k = fam.max_fiber() + 1;
    let all: Vec<usize> = (0..fam.len()).collect();
    let whole = family_consistent(&fam, &all).unwrap();
    let note = || {
        let rows: Vec<String> = fam
            .params()
            .iter()
            .map(|c| s.names_of(c).collect::<Vec<_>>().join(" "))
            .collect();
        Some(format!(
            "phi = {phi}, x = ({}), K = {k}, params: {}",
            x.join(", "),
            rows.join(" / ")
        ))
    };
    let minimal = minimal_inconsistent_size(&fam).unwrap();
    match greedy_subfamily(&fam, k) {
        Ok(Greedy::Consistent) => log.tally("greedy-consistent", whole),
        Ok(Greedy::Inconsistent(sub)) => {
            log.add("inconsistent_families", 1);
            log.max("greedy_size", sub.len());
            log.max("k_plus_one", k + 1);
            if sub.len() == k + 1 {
                log.add("greedy_size_equals_k_plus_one", 1);
            }
            if sub.len() == k {
                log.add("greedy_size_equals_k", 1);
            }
            let inconsistent = !family_consistent(&fam, &sub).unwrap();
            let bounded = sub.len() <= k + 1;
            let min = minimal.unwrap_or(usize::MAX);
            let sound = !whole && inconsistent && bounded && min <= sub.len() && min <= k + 1;
            if sound {
                log.tally("greedy-bound", true);
            } else {
                let msg = format!(
                    "greedy returned {sub:?} (inconsistent: {inconsistent}); brute-force minimum {minimal:?}; K + 1 = {}",
                    k + 1
                );
                log.fail("greedy-bound", msg, s, None, note());
            }
        }
        Err(e) => log.fail("greedy-bound", e.to_string(), s, None, note()),
    }
    let Ok((t8, _)) = consistency_threshold(&fam) else {
        return;
    };
    let mut more = fam.params().to_vec();
    more.push(extra);
    if let Ok(bigger) = build(more) {
        if let Ok((t9, _)) = consistency_threshold(&bigger) {
            log.tally("threshold-monotone", rank(t9) <= rank(t8));
        }
    }
}
