//! Components over a base: connected pieces of the tuple-incidence graph of
//! the designated relations, and maps that respect them.

use std::collections::{BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ma::ma_profile;
use crate::structure::{ElemId, Relation, Structure, StructureError};

/// Relations with uniform bound at most this are designated by default.
pub const DEFAULT_DESIGNATION_K: usize = 4;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ComponentError {
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("signatures differ")]
    SignatureMismatch,
    #[error("map is not total: {0}")]
    NotTotal(String),
    #[error("map is not a bijection: {0}")]
    NotBijective(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("example fixture needs m >= 2, got {0}")]
    FixtureSize(usize),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Computed,
    Designated,
}

/// Base plus disjoint nonempty components covering the rest of the universe.
/// Components are kept sorted by their least element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentDecomposition {
    base: BTreeSet<ElemId>,
    components: Vec<BTreeSet<ElemId>>,
    owner: Vec<Option<usize>>,
    provenance: Provenance,
}

impl ComponentDecomposition {
    /// Checks coverage and disjointness.
    pub fn new(
        size: usize,
        base: BTreeSet<ElemId>,
        mut components: Vec<BTreeSet<ElemId>>,
        provenance: Provenance,
    ) -> Result<Self, ComponentError> {
        let bad = |m: String| Err(ComponentError::InvalidDecomposition(m));
        if components.iter().any(BTreeSet::is_empty) {
            return bad("empty component".into());
        }
        components.sort_by_key(|c| *c.first().unwrap());
        let mut owner = vec![None; size];
        for &b in &base {
            if b as usize >= size {
                return bad(format!("base element #{b} out of range"));
            }
        }
        for (i, c) in components.iter().enumerate() {
            for &e in c {
                if e as usize >= size {
                    return bad(format!("element #{e} out of range"));
                }
                if base.contains(&e) {
                    return bad(format!("element #{e} is in the base and a component"));
                }
                if owner[e as usize].replace(i).is_some() {
                    return bad(format!("element #{e} is in two components"));
                }
            }
        }
        if let Some(e) = (0..size).find(|&e| owner[e].is_none() && !base.contains(&(e as ElemId))) {
            return bad(format!("element #{e} is in no component"));
        }
        Ok(ComponentDecomposition {
            base,
            components,
            owner,
            provenance,
        })
    }

    pub fn base(&self) -> &BTreeSet<ElemId> {
        &self.base
    }

    pub fn components(&self) -> &[BTreeSet<ElemId>] {
        &self.components
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Index of the component holding `e`; `None` for base elements.
    pub fn component_of(&self, e: ElemId) -> Option<usize> {
        self.owner.get(e as usize).copied().flatten()
    }
}

/// Relations whose uniform bound is at most `max_k`, in name order.
pub fn default_designation(s: &Structure, max_k: usize) -> Vec<String> {
    s.relations()
        .filter(|(_, r)| ma_profile(r).uniform_k <= max_k)
        .map(|(n, _)| n.to_string())
        .collect()
}

/// Connected components of the graph on non-base elements that joins two
/// elements whenever they occur in a common tuple of a designated relation.
pub fn decompose<S: AsRef<str>>(
    s: &Structure,
    designated: &[S],
) -> Result<ComponentDecomposition, ComponentError> {
    let mut adj: Vec<BTreeSet<ElemId>> = vec![BTreeSet::new(); s.size()];
    for name in designated {
        let rel = s
            .relation(name.as_ref())
            .ok_or_else(|| ComponentError::UnknownRelation(name.as_ref().into()))?;
        for t in rel.iter() {
            let free: Vec<ElemId> = t
                .iter()
                .copied()
                .filter(|e| !s.base().contains(e))
                .collect();
            for w in free.windows(2) {
                adj[w[0] as usize].insert(w[1]);
                adj[w[1] as usize].insert(w[0]);
            }
        }
    }
    let mut seen = vec![false; s.size()];
    let mut components = Vec::new();
    for start in s.elements() {
        if seen[start as usize] || s.base().contains(&start) {
            continue;
        }
        seen[start as usize] = true;
        let mut comp = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(e) = queue.pop_front() {
            for &n in &adj[e as usize] {
                if !std::mem::replace(&mut seen[n as usize], true) {
                    comp.insert(n);
                    queue.push_back(n);
                }
            }
        }
        components.push(comp);
    }
    ComponentDecomposition::new(s.size(), s.base().clone(), components, Provenance::Computed)
}

/// A bijection from one universe onto another, by element id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentMap {
    image: Vec<ElemId>,
}

impl ComponentMap {
    /// `image[e]` is the target of `e`; must be a permutation of `0..len`.
    pub fn new(image: Vec<ElemId>) -> Result<Self, ComponentError> {
        let mut hit = vec![false; image.len()];
        for (e, &t) in image.iter().enumerate() {
            if t as usize >= image.len() {
                return Err(ComponentError::NotBijective(format!(
                    "#{e} maps outside the target"
                )));
            }
            if std::mem::replace(&mut hit[t as usize], true) {
                return Err(ComponentError::NotBijective(format!("#{t} is hit twice")));
            }
        }
        Ok(ComponentMap { image })
    }

    pub fn identity(size: usize) -> Self {
        ComponentMap {
            image: (0..size as ElemId).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn apply(&self, e: ElemId) -> ElemId {
        self.image[e as usize]
    }

    pub fn image(&self) -> &[ElemId] {
        &self.image
    }

    fn map_tuple(&self, t: &[ElemId]) -> Vec<ElemId> {
        t.iter().map(|&e| self.apply(e)).collect()
    }
}

fn check_pair(f: &ComponentMap, s1: &Structure, s2: &Structure) -> Result<(), ComponentError> {
    if s1.signature() != s2.signature() {
        return Err(ComponentError::SignatureMismatch);
    }
    if f.len() != s1.size() || s1.size() != s2.size() {
        return Err(ComponentError::NotTotal(format!(
            "map has {} entries for universes of {} and {}",
            f.len(),
            s1.size(),
            s2.size()
        )));
    }
    Ok(())
}

/// Membership preserved both ways for every tuple inside `dom`.
fn preserves_on(
    f: &ComponentMap,
    s1: &Structure,
    s2: &Structure,
    dom: Option<&BTreeSet<ElemId>>,
) -> bool {
    let inside = |t: &[ElemId], d: &Option<BTreeSet<ElemId>>| {
        d.as_ref().is_none_or(|d| t.iter().all(|e| d.contains(e)))
    };
    let image: Option<BTreeSet<ElemId>> = dom.map(|d| d.iter().map(|&e| f.apply(e)).collect());
    let dom = dom.cloned();
    let mut inverse = vec![0; f.len()];
    for (e, &t) in f.image.iter().enumerate() {
        inverse[t as usize] = e as ElemId;
    }
    let inverse = ComponentMap { image: inverse };
    s1.relations().all(|(name, r1): (&str, &Relation)| {
        let r2 = s2.relation(name).expect("signatures match");
        r1.iter()
            .filter(|t| inside(t, &dom))
            .all(|t| r2.contains(&f.map_tuple(t)))
            && r2
                .iter()
                .filter(|t| inside(t, &image))
                .all(|t| r1.contains(&inverse.map_tuple(t)))
    })
}

/// Whether `f` maps the base of `s1` onto the base of `s2` by name.
pub fn fixes_base(f: &ComponentMap, s1: &Structure, s2: &Structure) -> bool {
    let image: BTreeSet<ElemId> = s1.base().iter().map(|&b| f.apply(b)).collect();
    image == *s2.base()
        && s1
            .base()
            .iter()
            .all(|&b| s1.element_name(b) == s2.element_name(f.apply(b)))
}

/// `f` fixes the base, carries each component of `d1` onto a component of
/// `d2`, and is a partial isomorphism on base plus each single component.
pub fn is_component_map(
    f: &ComponentMap,
    s1: &Structure,
    d1: &ComponentDecomposition,
    s2: &Structure,
    d2: &ComponentDecomposition,
) -> Result<bool, ComponentError> {
    check_pair(f, s1, s2)?;
    if d1.owner.len() != s1.size() || d2.owner.len() != s2.size() {
        return Err(ComponentError::InvalidDecomposition(
            "decomposition does not match its structure".into(),
        ));
    }
    if !fixes_base(f, s1, s2) || d1.base != *s1.base() || d2.base != *s2.base() {
        return Ok(false);
    }
    let onto = d1.components.iter().all(|c| {
        let image: BTreeSet<ElemId> = c.iter().map(|&e| f.apply(e)).collect();
        d2.component_of(*image.first().unwrap())
            .is_some_and(|j| d2.components[j] == image)
    });
    if !onto {
        return Ok(false);
    }
    Ok(d1.components.par_iter().all(|c| {
        let dom: BTreeSet<ElemId> = d1.base.union(c).copied().collect();
        preserves_on(f, s1, s2, Some(&dom))
    }))
}

/// `f` preserves every relation in both directions.
pub fn is_isomorphism(
    f: &ComponentMap,
    s1: &Structure,
    s2: &Structure,
) -> Result<bool, ComponentError> {
    check_pair(f, s1, s2)?;
    Ok(preserves_on(f, s1, s2, None))
}

/// Lines `a -> b`; blank lines and `#` comments skipped. Every element of
/// `s1` must appear exactly once on the left.
pub fn parse_map(
    text: &str,
    s1: &Structure,
    s2: &Structure,
) -> Result<ComponentMap, ComponentError> {
    let mut image: Vec<Option<ElemId>> = vec![None; s1.size()];
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |message: &str| ComponentError::Syntax {
            line: n + 1,
            message: message.into(),
        };
        let (a, b) = line
            .split_once("->")
            .ok_or_else(|| syntax("expected `a -> b`"))?;
        let (a, b) = (a.trim(), b.trim());
        let ea = s1
            .element_id(a)
            .ok_or_else(|| ComponentError::UnknownElement(a.into()))?;
        let eb = s2
            .element_id(b)
            .ok_or_else(|| ComponentError::UnknownElement(b.into()))?;
        if image[ea as usize].replace(eb).is_some() {
            return Err(syntax(&format!("`{a}` is mapped twice")));
        }
    }
    if let Some(e) = image.iter().position(Option::is_none) {
        return Err(ComponentError::NotTotal(format!(
            "`{}` has no image",
            s1.element_name(e as ElemId)
        )));
    }
    if s1.size() != s2.size() {
        return Err(ComponentError::NotBijective(
            "universes differ in size".into(),
        ));
    }
    ComponentMap::new(image.into_iter().map(Option::unwrap).collect())
}

pub fn serialize_map(f: &ComponentMap, s1: &Structure, s2: &Structure) -> String {
    f.image
        .iter()
        .enumerate()
        .map(|(e, &t)| {
            format!(
                "{} -> {}\n",
                s1.element_name(e as ElemId),
                s2.element_name(t)
            )
        })
        .collect()
}

/// A `base <names>` line (names optional), then one component per line.
/// The base must agree with the structure's.
pub fn parse_decomposition(
    text: &str,
    s: &Structure,
) -> Result<ComponentDecomposition, ComponentError> {
    let mut base = None;
    let mut components = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace().peekable();
        let is_base = words.peek() == Some(&"base");
        if is_base {
            words.next();
        } else if base.is_none() {
            return Err(ComponentError::Syntax {
                line: n + 1,
                message: "expected a `base` line first".into(),
            });
        }
        let set = words
            .map(|w| {
                s.element_id(w)
                    .ok_or_else(|| ComponentError::UnknownElement(w.into()))
            })
            .collect::<Result<BTreeSet<_>, _>>()?;
        if is_base {
            if base.replace(set).is_some() {
                return Err(ComponentError::Syntax {
                    line: n + 1,
                    message: "second `base` line".into(),
                });
            }
        } else {
            components.push(set);
        }
    }
    let base = base.ok_or_else(|| ComponentError::Syntax {
        line: 0,
        message: "missing `base` line".into(),
    })?;
    if base != *s.base() {
        return Err(ComponentError::InvalidDecomposition(
            "base differs from the structure's base".into(),
        ));
    }
    ComponentDecomposition::new(s.size(), base, components, Provenance::Designated)
}

pub fn serialize_decomposition(d: &ComponentDecomposition, s: &Structure) -> String {
    let names = |set: &BTreeSet<ElemId>| {
        set.iter()
            .map(|&e| s.element_name(e))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = format!("base {}", names(&d.base)).trim_end().to_string();
    out.push('\n');
    for c in &d.components {
        out.push_str(&names(c));
        out.push('\n');
    }
    out
}

/// Two `E`-classes `a_i` and `b_i`, `R` the mating `a_i ~ b_i` (both
/// directions), and `S(x,y,z,w)` for distinct elements with `R(x,y)`,
/// `R(z,w)`, `E(x,z)`. The decomposition is the mated pairs over an empty
/// base and the map swaps `a_0` and `b_0`.
pub fn mated_pairs_fixture(
    m: usize,
) -> Result<(Structure, ComponentDecomposition, ComponentMap), ComponentError> {
    if m < 2 {
        return Err(ComponentError::FixtureSize(m));
    }
    let a: Vec<String> = (0..m).map(|i| format!("a{i}")).collect();
    let b: Vec<String> = (0..m).map(|i| format!("b{i}")).collect();
    let mut e = Vec::new();
    for class in [&a, &b] {
        for x in class.iter() {
            for y in class.iter() {
                e.push(vec![x.clone(), y.clone()]);
            }
        }
    }
    let mut r = Vec::new();
    for i in 0..m {
        r.push(vec![a[i].clone(), b[i].clone()]);
        r.push(vec![b[i].clone(), a[i].clone()]);
    }
    let mut sq = Vec::new();
    for p in &r {
        for q in &r {
            let distinct: BTreeSet<&String> = [&p[0], &p[1], &q[0], &q[1]].into_iter().collect();
            let same_class = a.contains(&p[0]) == a.contains(&q[0]);
            if distinct.len() == 4 && same_class {
                sq.push(vec![p[0].clone(), p[1].clone(), q[0].clone(), q[1].clone()]);
            }
        }
    }
    let s = Structure::new(a.iter().chain(&b).cloned())?
        .with_named_tuples("E", 2, &e)?
        .with_named_tuples("R", 2, &r)?
        .with_named_tuples("S", 4, &sq)?;
    let id = |n: &str| s.element_id(n).unwrap();
    let pairs = (0..m)
        .map(|i| BTreeSet::from([id(&a[i]), id(&b[i])]))
        .collect();
    let d = ComponentDecomposition::new(s.size(), BTreeSet::new(), pairs, Provenance::Designated)?;
    let mut image: Vec<ElemId> = (0..s.size() as ElemId).collect();
    image.swap(id(&a[0]) as usize, id(&b[0]) as usize);
    let f = ComponentMap::new(image)?;
    Ok((s, d, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::parse_structure;

    fn matching() -> Structure {
        parse_structure("universe a b c d e f\nrel R 2\na b\nc d\ne f\nrel P 1\na\n").unwrap()
    }

    fn names(s: &Structure, d: &ComponentDecomposition) -> Vec<Vec<String>> {
        d.components()
            .iter()
            .map(|c| c.iter().map(|&e| s.element_name(e).to_string()).collect())
            .collect()
    }

    #[test]
    fn singletons_without_designation() {
        let s = matching();
        let d = decompose::<&str>(&s, &[]).unwrap();
        assert_eq!(d.components().len(), 6);
        assert_eq!(d.provenance(), Provenance::Computed);
    }

    #[test]
    fn matching_gives_pairs() {
        let s = matching();
        let d = decompose(&s, &["R", "P"]).unwrap();
        assert_eq!(names(&s, &d), [["a", "b"], ["c", "d"], ["e", "f"]]);
        assert!(matches!(
            decompose(&s, &["Q"]),
            Err(ComponentError::UnknownRelation(_))
        ));
    }

    #[test]
    fn base_cuts_connections() {
        let s = parse_structure("universe m a b\nbase m\nrel R 3\na m b\n").unwrap();
        let d = decompose(&s, &["R"]).unwrap();
        assert_eq!(names(&s, &d), [["a", "b"]]);
        let s = parse_structure("universe m a b\nbase m\nrel R 2\na m\nm b\n").unwrap();
        assert_eq!(decompose(&s, &["R"]).unwrap().components().len(), 2);
    }

    #[test]
    fn default_designation_skips_dense_relations() {
        let s = parse_structure(
            "universe a b c d e f\nrel R 2\na b\nrel T 2\na a\na b\na c\na d\na e\na f\n",
        )
        .unwrap();
        assert_eq!(default_designation(&s, DEFAULT_DESIGNATION_K), ["R"]);
    }

    #[test]
    fn swapping_components() {
        let s = matching();
        let d = decompose(&s, &["R"]).unwrap();
        let id = ComponentMap::identity(6);
        assert!(is_component_map(&id, &s, &d, &s, &d).unwrap());
        assert!(is_isomorphism(&id, &s, &s).unwrap());
        // c d <-> e f keeps R and P
        let f = ComponentMap::new(vec![0, 1, 4, 5, 2, 3]).unwrap();
        assert!(is_component_map(&f, &s, &d, &s, &d).unwrap());
        assert!(is_isomorphism(&f, &s, &s).unwrap());
        // a b <-> c d moves P
        let g = ComponentMap::new(vec![2, 3, 0, 1, 4, 5]).unwrap();
        assert!(!is_component_map(&g, &s, &d, &s, &d).unwrap());
        assert!(!is_isomorphism(&g, &s, &s).unwrap());
    }

    #[test]
    fn moving_the_base_fails() {
        let s = parse_structure("universe m n a\nbase m n\n").unwrap();
        let d = decompose::<&str>(&s, &[]).unwrap();
        let f = ComponentMap::new(vec![1, 0, 2]).unwrap();
        assert!(!is_component_map(&f, &s, &d, &s, &d).unwrap());
        assert!(is_isomorphism(&f, &s, &s).unwrap());
    }

    #[test]
    fn mated_pairs() {
        for m in [2, 3, 5] {
            let (s, d, f) = mated_pairs_fixture(m).unwrap();
            assert_eq!(s.size(), 2 * m);
            assert!(is_component_map(&f, &s, &d, &s, &d).unwrap());
            assert!(!is_isomorphism(&f, &s, &s).unwrap());
            let id = ComponentMap::identity(s.size());
            assert!(is_component_map(&id, &s, &d, &s, &d).unwrap());
            assert!(is_isomorphism(&id, &s, &s).unwrap());
        }
        // the broken tuple
        let (s, _, f) = mated_pairs_fixture(2).unwrap();
        let t: Vec<ElemId> = ["a0", "b0", "a1", "b1"]
            .iter()
            .map(|n| s.element_id(n).unwrap())
            .collect();
        let st = s.relation("S").unwrap();
        assert!(st.contains(&t));
        assert!(!st.contains(&f.map_tuple(&t)));
        assert!(matches!(
            mated_pairs_fixture(1),
            Err(ComponentError::FixtureSize(1))
        ));
    }

    #[test]
    fn file_formats_roundtrip() {
        let (s, d, f) = mated_pairs_fixture(3).unwrap();
        let text = serialize_map(&f, &s, &s);
        assert!(text.starts_with("a0 -> b0\n"));
        assert_eq!(parse_map(&text, &s, &s).unwrap(), f);
        let dt = serialize_decomposition(&d, &s);
        assert_eq!(dt, "base\na0 b0\na1 b1\na2 b2\n");
        assert_eq!(parse_decomposition(&dt, &s).unwrap(), d);
    }

    #[test]
    fn bad_inputs() {
        let s = matching();
        assert!(matches!(
            parse_map("a -> b\n", &s, &s),
            Err(ComponentError::NotTotal(_))
        ));
        let twice = "a -> a\nb -> a\nc -> c\nd -> d\ne -> e\nf -> f\n";
        assert!(matches!(
            parse_map(twice, &s, &s),
            Err(ComponentError::NotBijective(_))
        ));
        assert!(matches!(
            parse_decomposition("a b\n", &s),
            Err(ComponentError::Syntax { .. })
        ));
        assert!(matches!(
            parse_decomposition("base\na b\nb c\nd\ne f\n", &s),
            Err(ComponentError::InvalidDecomposition(_))
        ));
        let other = parse_structure("universe a b c d e f\nrel R 3\n").unwrap();
        let id = ComponentMap::identity(6);
        assert_eq!(
            is_isomorphism(&id, &s, &other),
            Err(ComponentError::SignatureMismatch)
        );
    }

    #[test]
    fn restricting_to_a_component_is_idempotent() {
        let s = parse_structure("universe m a b c d\nbase m\nrel R 3\na m b\nb c c\nrel P 1\nd\n")
            .unwrap();
        let d = decompose(&s, &["R", "P"]).unwrap();
        for c in d.components() {
            let keep: BTreeSet<ElemId> = s.base().union(c).copied().collect();
            let sub = s.restrict(&keep).unwrap();
            assert_eq!(decompose(&sub, &["R", "P"]).unwrap().components().len(), 1);
        }
    }
}
