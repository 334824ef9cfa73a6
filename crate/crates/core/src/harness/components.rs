//! Component maps against isomorphisms, with every relation designated.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::{case_rng, random_structure, CaseLog, CorpusSpec, HarnessError};
use crate::components::{
    decompose, fixes_base, is_component_map, is_isomorphism, serialize_map, ComponentMap,
};
use crate::structure::{ElemId, Relation, Structure};

/// The image of `s` under `f`, with `toggle` then flipped in or out.
fn image(s: &Structure, f: &ComponentMap, toggle: Option<&(String, Vec<ElemId>)>) -> Structure {
    let mut t = Structure::new(s.universe().iter().cloned())
        .and_then(|t| t.with_base_ids(s.base().clone()))
        .expect("same universe");
    for (name, r) in s.relations() {
        let mut mapped = Relation::from_tuples(
            r.arity(),
            r.iter().map(|u| u.iter().map(|&e| f.apply(e)).collect()),
        )
        .expect("a bijection keeps tuples in range");
        if let Some((tn, tup)) = toggle {
            if tn == name {
                if mapped.contains(tup) {
                    mapped.retain(|u| u != tup);
                } else {
                    mapped.insert(tup.clone()).unwrap();
                }
            }
        }
        t = t.with_relation(name, mapped).unwrap();
    }
    t
}

/// Several disjoint copies of one small random gadget, so that swapping copies
/// gives component maps that are not the identity.
fn gadget_structure<R: Rng>(rng: &mut R, spec: &CorpusSpec) -> Result<Structure, HarnessError> {
    let copies = rng.random_range(2..=3);
    let mut g = random_structure(rng, spec, (2, 3), 0)?;
    let base_size = rng.random_range(0..=1);
    let total = base_size + copies * g.size();
    let names: Vec<String> = (0..total).map(|i| format!("e{i}")).collect();
    let mut s = Structure::new(names)?.with_base_ids((0..base_size as ElemId).collect())?;
    let rels: Vec<(String, Relation)> = g
        .relations()
        .map(|(n, r)| (n.to_string(), r.clone()))
        .collect();
    for (name, r) in rels {
        let mut out = Relation::new(r.arity());
        for c in 0..copies {
            let off = (base_size + c * g.size()) as ElemId;
            for t in r.iter() {
                out.insert(t.iter().map(|e| e + off).collect()).unwrap();
            }
        }
        s = s.with_relation(name, out)?;
    }
    g = s;
    Ok(g)
}

fn run_pair(s1: &Structure, s2: &Structure, f: &ComponentMap, kind: &str, log: &mut CaseLog) {
    let all1: Vec<&str> = s1.relations().map(|(n, _)| n).collect();
    let (Ok(d1), Ok(d2)) = (decompose(s1, &all1), decompose(s2, &all1)) else {
        log.fail(
            "decompose",
            "designated relations missing".into(),
            s1,
            None,
            None,
        );
        return;
    };
    let cm = is_component_map(f, s1, &d1, s2, &d2).unwrap();
    let iso = is_isomorphism(f, s1, s2).unwrap();
    let fixes = fixes_base(f, s1, s2);
    log.add(&format!("maps.{kind}"), 1);
    log.add(&format!("component_map.{cm}"), 1);
    log.add(&format!("isomorphism.{iso}"), 1);
    let note = || {
        Some(format!(
            "second structure:\n{}map:\n{}",
            crate::serialize_structure(s2),
            serialize_map(f, s1, s2)
        ))
    };
    if cm {
        if iso {
            log.tally("component-map-implies-isomorphism", true);
        } else {
            log.fail(
                "component-map-implies-isomorphism",
                format!("{kind} map"),
                s1,
                None,
                note(),
            );
        }
    }
    if iso && fixes {
        if cm {
            log.tally("isomorphism-implies-component-map", true);
        } else {
            log.fail(
                "isomorphism-implies-component-map",
                format!("{kind} map"),
                s1,
                None,
                note(),
            );
        }
    }
    for c in d1.components() {
        let keep: BTreeSet<ElemId> = s1.base().union(c).copied().collect();
        let ok = s1
            .restrict(&keep)
            .ok()
            .and_then(|sub| decompose(&sub, &all1).ok())
            .is_some_and(|d| d.components().len() == 1 && d.components()[0].len() == c.len());
        log.tally("decompose-idempotent", ok);
    }
}

pub(super) fn run_case(
    spec: &CorpusSpec,
    index: usize,
    log: &mut CaseLog,
) -> Result<(), HarnessError> {
    let mut rng = case_rng(spec.seed, index, 4);
    let s = if index.is_multiple_of(2) {
        gadget_structure(&mut rng, spec)?
    } else {
        let base = rng.random_range(0..=2);
        random_structure(&mut rng, spec, spec.universe, base)?
    };
    let n = s.size();
    let movable: Vec<ElemId> = (0..n as ElemId).filter(|e| !s.base().contains(e)).collect();

    // a base-fixing permutation, onto the image structure: an isomorphism
    let mut shuffled = movable.clone();
    shuffled.shuffle(&mut rng);
    let mut img: Vec<ElemId> = (0..n as ElemId).collect();
    for (&a, &b) in movable.iter().zip(&shuffled) {
        img[a as usize] = b;
    }
    let pi = ComponentMap::new(img).unwrap();
    run_pair(&s, &image(&s, &pi, None), &pi, "isomorphic-image", log);

    // the same map onto a perturbed image
    let rels: Vec<(String, usize)> = s
        .relations()
        .map(|(n, r)| (n.to_string(), r.arity()))
        .collect();
    let (name, arity) = rels.choose(&mut rng).unwrap().clone();
    let tup: Vec<ElemId> = (0..arity)
        .map(|_| rng.random_range(0..n) as ElemId)
        .collect();
    let toggle = (name, tup);
    run_pair(
        &s,
        &image(&s, &pi, Some(&toggle)),
        &pi,
        "perturbed-image",
        log,
    );

    // a permutation onto the structure itself
    run_pair(&s, &s, &pi, "self", log);

    // a full permutation, possibly moving the base
    let mut any: Vec<ElemId> = (0..n as ElemId).collect();
    any.shuffle(&mut rng);
    let sigma = ComponentMap::new(any).unwrap();
    run_pair(&s, &image(&s, &sigma, None), &sigma, "base-moving", log);
    Ok(())
}
