//! Small inconsistent subfamilies of parameter instances, read on one finite
//! structure: a family is consistent when some x̄-tuple satisfies every instance.

use std::collections::{BTreeSet, HashMap};

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::formula::{evaluate, EvalError, Formula, Term};
use crate::structure::{ElemId, Structure};

/// Exhaustive subset search refuses families larger than this.
pub const EXHAUSTIVE_LIMIT: usize = 20;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum FcpError {
    #[error("index {index} out of range for a family of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("hypothesis fails: parameters ({}) have {count} solutions, K = {k}", params.join(", "))]
    HypothesisViolated {
        params: Vec<String>,
        count: usize,
        k: usize,
    },
    #[error("family of {size} exceeds the exhaustive search limit {limit}")]
    GuardExceeded { size: usize, limit: usize },
    #[error("line {line}: expected {expected} elements, found {found}")]
    ParamLength {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: unknown element `{name}`")]
    UnknownElement { line: usize, name: String },
    #[error("invalid partition: {0}")]
    Partition(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Instances `φ(x̄, c̄_i)` of one partitioned formula on one structure.
#[derive(Clone, Debug)]
pub struct ParameterFamily<'s> {
    structure: &'s Structure,
    phi: Formula,
    x: Vec<String>,
    y: Vec<String>,
    params: Vec<Vec<ElemId>>,
    /// Solution sets, one per parameter tuple.
    solutions: Vec<BTreeSet<Vec<ElemId>>>,
    /// Largest solution count over every ȳ-tuple of the structure.
    max_fiber: usize,
    witness: Vec<ElemId>,
}

impl<'s> ParameterFamily<'s> {
    pub fn new(
        structure: &'s Structure,
        phi: Formula,
        x: Vec<String>,
        y: Vec<String>,
        params: Vec<Vec<ElemId>>,
    ) -> Result<Self, FcpError> {
        if x.is_empty() {
            return Err(FcpError::Partition("x̄ is empty".into()));
        }
        if let Some(v) = x.iter().find(|v| y.contains(v)) {
            return Err(FcpError::Partition(format!("`{v}` is in both x̄ and ȳ")));
        }
        let ctx: Vec<String> = x.iter().chain(&y).cloned().collect();
        if let Some(v) = phi.free_vars().into_iter().find(|v| !ctx.contains(v)) {
            return Err(FcpError::Partition(format!(
                "free variable `{v}` is in neither x̄ nor ȳ"
            )));
        }
        for (i, c) in params.iter().enumerate() {
            if c.len() != y.len() {
                return Err(FcpError::ParamLength {
                    line: i + 1,
                    expected: y.len(),
                    found: c.len(),
                });
            }
            if let Some(&e) = c.iter().find(|&&e| e as usize >= structure.size()) {
                return Err(FcpError::UnknownElement {
                    line: i + 1,
                    name: format!("#{e}"),
                });
            }
        }
        let rel = evaluate(structure, &phi, &ctx)?;
        let mut by_y: HashMap<Vec<ElemId>, BTreeSet<Vec<ElemId>>> = HashMap::new();
        for t in rel.iter() {
            let (xs, ys) = t.split_at(x.len());
            by_y.entry(ys.to_vec()).or_default().insert(xs.to_vec());
        }
        let (witness, max_fiber) = by_y
            .iter()
            .map(|(ys, xs)| (ys.clone(), xs.len()))
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .unwrap_or_default();
        let solutions = params
            .iter()
            .map(|c| by_y.get(c).cloned().unwrap_or_default())
            .collect();
        Ok(ParameterFamily {
            structure,
            phi,
            x,
            y,
            params,
            solutions,
            max_fiber,
            witness,
        })
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn phi(&self) -> &Formula {
        &self.phi
    }

    pub fn x(&self) -> &[String] {
        &self.x
    }

    pub fn y(&self) -> &[String] {
        &self.y
    }

    pub fn params(&self) -> &[Vec<ElemId>] {
        &self.params
    }

    pub fn solutions(&self, i: usize) -> &BTreeSet<Vec<ElemId>> {
        &self.solutions[i]
    }

    /// The instance `φ(x̄, c̄_i)` with parameters written as `@name`.
    pub fn instance(&self, i: usize) -> Formula {
        let mut f = self.phi.clone();
        for (v, &e) in self.y.iter().zip(&self.params[i]) {
            f = f.substitute(v, self.structure.element_name(e));
        }
        f
    }

    /// Largest number of x̄-solutions of any ȳ-tuple in the structure.
    pub fn max_fiber(&self) -> usize {
        self.max_fiber
    }

    fn check(&self, subset: &[usize]) -> Result<(), FcpError> {
        match subset.iter().find(|&&i| i >= self.len()) {
            Some(&index) => Err(FcpError::IndexOutOfRange {
                index,
                len: self.len(),
            }),
            None => Ok(()),
        }
    }

    fn jointly_satisfiable(&self, subset: &[usize]) -> bool {
        let Some((&first, rest)) = subset.split_first() else {
            return true;
        };
        self.solutions[first]
            .iter()
            .any(|t| rest.iter().all(|&i| self.solutions[i].contains(t)))
    }
}

/// Whether some x̄-tuple satisfies every instance in `subset`.
pub fn family_consistent(fam: &ParameterFamily, subset: &[usize]) -> Result<bool, FcpError> {
    fam.check(subset)?;
    Ok(fam.jointly_satisfiable(subset))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result", content = "indices", rename_all = "snake_case")]
pub enum Greedy {
    Consistent,
    Inconsistent(Vec<usize>),
}

/// The greedy chain: start at index 0 and keep adding the lowest index whose
/// instance shrinks the current solution set, until it is empty.
///
/// Requires fewer than `k` solutions for every ȳ-tuple of the structure; the
/// chain then has at most `k` members.
pub fn greedy_subfamily(fam: &ParameterFamily, k: usize) -> Result<Greedy, FcpError> {
    if fam.max_fiber >= k {
        return Err(FcpError::HypothesisViolated {
            params: fam
                .structure
                .names_of(&fam.witness)
                .map(str::to_string)
                .collect(),
            count: fam.max_fiber,
            k,
        });
    }
    let all: Vec<usize> = (0..fam.len()).collect();
    if fam.jointly_satisfiable(&all) {
        return Ok(Greedy::Consistent);
    }
    let mut chain = vec![0];
    let mut current = fam.solutions[0].clone();
    while !current.is_empty() {
        let next = (0..fam.len())
            .find(|&i| !chain.contains(&i) && current.iter().any(|t| !fam.solutions[i].contains(t)))
            .expect("an inconsistent family always has a shrinking instance");
        current.retain(|t| fam.solutions[next].contains(t));
        chain.push(next);
    }
    Ok(Greedy::Inconsistent(chain))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    /// Every subfamily, the whole family included, is consistent.
    All,
    /// Every subfamily of this size is consistent, some one larger is not.
    Upto(usize),
}

/// Size of the smallest inconsistent subfamily, by exhaustive search over
/// subsets in increasing size.
pub fn minimal_inconsistent_size(fam: &ParameterFamily) -> Result<Option<usize>, FcpError> {
    if fam.len() > EXHAUSTIVE_LIMIT {
        return Err(FcpError::GuardExceeded {
            size: fam.len(),
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    for size in 1..=fam.len() {
        let found = (0..fam.len())
            .combinations(size)
            .par_bridge()
            .any(|s| !fam.jointly_satisfiable(&s));
        if found {
            return Ok(Some(size));
        }
    }
    Ok(None)
}

/// The largest `k` such that every `k`-element subfamily is consistent, with
/// whole-family consistency.
pub fn consistency_threshold(fam: &ParameterFamily) -> Result<(Threshold, bool), FcpError> {
    Ok(match minimal_inconsistent_size(fam)? {
        None => (Threshold::All, true),
        Some(m) => (Threshold::Upto(m - 1), false),
    })
}

/// Parameter tuples, one per line as whitespace-separated element names.
/// Blank lines and `#` comments are skipped.
pub fn parse_params(text: &str, s: &Structure, arity: usize) -> Result<Vec<Vec<ElemId>>, FcpError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let names: Vec<&str> = line.split_whitespace().collect();
        if names.len() != arity {
            return Err(FcpError::ParamLength {
                line: n + 1,
                expected: arity,
                found: names.len(),
            });
        }
        let tuple = names
            .iter()
            .map(|name| {
                s.element_id(name).ok_or_else(|| FcpError::UnknownElement {
                    line: n + 1,
                    name: name.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(tuple);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DemoRow {
    pub i: usize,
    pub family_size: usize,
    pub k_star: Threshold,
    pub whole_consistent: bool,
}

/// Disjoint classes `D_1, …, D_m` of an equivalence relation `E`, `|D_i| = i + 1`,
/// and a unary `P` with `|P ∩ D_i| = i`.
pub fn fcp_demo_structure(m: usize) -> Structure {
    let mut names = Vec::new();
    let mut classes = Vec::new();
    for i in 1..=m {
        let class: Vec<String> = (0..=i).map(|j| format!("d{i}_{j}")).collect();
        names.extend(class.iter().cloned());
        classes.push(class);
    }
    let mut e = Vec::new();
    let mut p = Vec::new();
    for class in &classes {
        for a in class {
            for b in class {
                e.push(vec![a.clone(), b.clone()]);
            }
        }
        p.extend(class[1..].iter().map(|a| vec![a.clone()]));
    }
    Structure::new(names)
        .and_then(|s| s.with_named_tuples("E", 2, &e))
        .and_then(|s| s.with_named_tuples("P", 1, &p))
        .expect("demo structure is well formed")
}

/// For each class `D_i`, the family `{P(x) ∧ E(x, d_i) ∧ x ≠ a : a ∈ P ∩ D_i}`:
/// jointly unsatisfiable while every `i − 1` members are satisfiable, so the
/// threshold grows with `i`.
pub fn fcp_demo(m: usize) -> Result<(Structure, Vec<DemoRow>), FcpError> {
    let s = fcp_demo_structure(m);
    let phi = Formula::And(vec![
        Formula::atom("P", &["x"]),
        Formula::atom("E", &["x", "y"]),
        Formula::not(Formula::Eq(Term::var("x"), Term::var("z"))),
    ]);
    let mut rows = Vec::new();
    for i in 1..=m {
        let rep = s.element_id(&format!("d{i}_0")).unwrap();
        let params = (1..=i)
            .map(|j| vec![rep, s.element_id(&format!("d{i}_{j}")).unwrap()])
            .collect();
        let fam = ParameterFamily::new(
            &s,
            phi.clone(),
            vec!["x".into()],
            vec!["y".into(), "z".into()],
            params,
        )?;
        let (k_star, whole_consistent) = consistency_threshold(&fam)?;
        rows.push(DemoRow {
            i,
            family_size: fam.len(),
            k_star,
            whole_consistent,
        });
    }
    Ok((s, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::structure::parse_structure;

    fn cycle5() -> Structure {
        parse_structure("universe a b c d e\nrel R 2\na b\nb c\nc d\nd e\ne a\n").unwrap()
    }

    fn family<'s>(s: &'s Structure, text: &str, y: &[&str], params: &str) -> ParameterFamily<'s> {
        let (phi, _) = parse_formula(text).unwrap();
        let y: Vec<String> = y.iter().map(|v| v.to_string()).collect();
        let ps = parse_params(params, s, y.len()).unwrap();
        let free = phi.free_vars();
        let x = free.into_iter().filter(|v| !y.contains(v)).collect();
        ParameterFamily::new(s, phi, x, y, ps).unwrap()
    }

    #[test]
    fn consistency_of_subsets() {
        let s = cycle5();
        let fam = family(&s, "R(x, y)", &["y"], "b\nc\n");
        assert!(family_consistent(&fam, &[]).unwrap());
        assert!(family_consistent(&fam, &[0]).unwrap());
        assert!(!family_consistent(&fam, &[0, 1]).unwrap());
        assert_eq!(
            family_consistent(&fam, &[2]),
            Err(FcpError::IndexOutOfRange { index: 2, len: 2 })
        );
    }

    #[test]
    fn greedy_on_a_bijection() {
        let s = cycle5();
        let fam = family(&s, "R(x, y)", &["y"], "a\nb\nc\nd\ne\n");
        assert_eq!(
            greedy_subfamily(&fam, 2).unwrap(),
            Greedy::Inconsistent(vec![0, 1])
        );
        assert_eq!(minimal_inconsistent_size(&fam).unwrap(), Some(2));
        assert_eq!(
            consistency_threshold(&fam).unwrap(),
            (Threshold::Upto(1), false)
        );
        assert!(matches!(
            greedy_subfamily(&fam, 1),
            Err(FcpError::HypothesisViolated { .. })
        ));
    }

    #[test]
    fn consistent_family() {
        let s = cycle5();
        let fam = family(&s, "R(x, y) | x = x", &["y"], "a\nb\n");
        assert_eq!(consistency_threshold(&fam).unwrap(), (Threshold::All, true));
        let bounded = family(&s, "R(x, y)", &["y"], "b\nb\n");
        assert_eq!(greedy_subfamily(&bounded, 2).unwrap(), Greedy::Consistent);
    }

    #[test]
    fn sunflower_pairs_consistent_triple_not() {
        // three sets {a,b}, {b,c}, {a,c}: pairwise meet, no common point
        let s = parse_structure("universe a b c p q r\nrel M 2\na p\nb p\nb q\nc q\na r\nc r\n")
            .unwrap();
        let fam = family(&s, "M(x, y)", &["y"], "p\nq\nr\n");
        assert_eq!(
            consistency_threshold(&fam).unwrap(),
            (Threshold::Upto(2), false)
        );
        let g = greedy_subfamily(&fam, 3).unwrap();
        assert_eq!(g, Greedy::Inconsistent(vec![0, 1, 2]));
    }

    #[test]
    fn demo_threshold_grows() {
        let (_, rows) = fcp_demo(4).unwrap();
        let ks: Vec<Threshold> = rows.iter().map(|r| r.k_star).collect();
        assert_eq!(
            ks,
            [
                Threshold::Upto(0),
                Threshold::Upto(1),
                Threshold::Upto(2),
                Threshold::Upto(3)
            ]
        );
        assert!(rows.iter().all(|r| !r.whole_consistent));
    }

    #[test]
    fn params_file_errors() {
        let s = cycle5();
        assert!(matches!(
            parse_params("a b\n", &s, 1),
            Err(FcpError::ParamLength { line: 1, .. })
        ));
        assert!(matches!(
            parse_params("# c\n\nzz\n", &s, 1),
            Err(FcpError::UnknownElement { line: 3, .. })
        ));
    }

    #[test]
    fn guard() {
        let s = cycle5();
        let params = "a\n".repeat(EXHAUSTIVE_LIMIT + 1);
        let fam = family(&s, "R(x, y)", &["y"], &params);
        assert!(matches!(
            consistency_threshold(&fam),
            Err(FcpError::GuardExceeded { .. })
        ));
    }
}
