//! Finite relational structures.
//!
//! Elements are referred to by dense ids ([`ElemId`]) in universe order; names
//! are kept only for I/O. Relations are sets of tuples stored in sorted order,
//! so two structures built from the same data compare equal regardless of the
//! order tuples were inserted in.

mod generate;
mod text;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

pub(crate) use generate::generate_with;
pub use generate::{generate_random, GeneratorConfig, RelationSpec};
pub use text::{parse_structure, serialize_structure};

/// Index of an element in its structure's universe.
pub type ElemId = u32;

/// A tuple of elements.
pub type Tuple = Vec<ElemId>;

const KEYWORDS: [&str; 3] = ["universe", "base", "rel"];

#[derive(Error, Debug, Clone, PartialEq)]
pub enum StructureError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{}unknown element `{name}`", line_prefix(*.line))]
    UnknownElement { line: Option<usize>, name: String },
    #[error("{}relation `{relation}` has arity {expected}, got a tuple of length {found}", line_prefix(*.line))]
    ArityMismatch {
        line: Option<usize>,
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate relation `{0}`")]
    DuplicateRelation(String),
    #[error("duplicate element `{0}`")]
    DuplicateElement(String),
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("universe must contain at least one element")]
    EmptyUniverse,
    #[error(
        "relation `{relation}`: target K = 0 cannot hold a nonempty relation (density {density})"
    )]
    InfeasibleTargetK { relation: String, density: f64 },
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
}

fn line_prefix(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

/// Checks the `[A-Za-z_][A-Za-z0-9_]*` name rule shared by elements and relations.
pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A set of equal-length tuples.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Relation {
    arity: usize,
    tuples: BTreeSet<Tuple>,
}

impl Relation {
    pub fn new(arity: usize) -> Self {
        Relation {
            arity,
            tuples: BTreeSet::new(),
        }
    }

    /// The 0-ary relation denoting a truth value: `{()}` for true, `∅` for false.
    pub fn truth(value: bool) -> Self {
        let mut r = Relation::new(0);
        if value {
            r.tuples.insert(Vec::new());
        }
        r
    }

    pub fn from_tuples<I>(arity: usize, tuples: I) -> Result<Self, StructureError>
    where
        I: IntoIterator<Item = Tuple>,
    {
        let mut r = Relation::new(arity);
        for t in tuples {
            r.insert(t)?;
        }
        Ok(r)
    }

    /// Inserts a tuple, returning whether it was new.
    pub fn insert(&mut self, t: Tuple) -> Result<bool, StructureError> {
        if t.len() != self.arity {
            return Err(StructureError::ArityMismatch {
                line: None,
                relation: String::new(),
                expected: self.arity,
                found: t.len(),
            });
        }
        Ok(self.tuples.insert(t))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, t: &[ElemId]) -> bool {
        self.tuples.contains(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tuple> + '_ {
        self.tuples.iter()
    }

    pub fn tuples(&self) -> &BTreeSet<Tuple> {
        &self.tuples
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.arity == other.arity && self.tuples.is_subset(&other.tuples)
    }

    /// Reorders columns: column `i` of the result is column `order[i]` of `self`.
    ///
    /// Panics if `order` is not a permutation of `0..arity`.
    pub fn permute(&self, order: &[usize]) -> Relation {
        assert_eq!(
            order.len(),
            self.arity,
            "permutation length must equal arity"
        );
        let mut seen = vec![false; self.arity];
        for &c in order {
            assert!(!std::mem::replace(&mut seen[c], true), "not a permutation");
        }
        self.select(order)
    }

    /// Projection onto the listed columns (in the listed order).
    pub fn project(&self, columns: &[usize]) -> Relation {
        self.select(columns)
    }

    fn select(&self, columns: &[usize]) -> Relation {
        Relation {
            arity: columns.len(),
            tuples: self
                .tuples
                .iter()
                .map(|t| columns.iter().map(|&c| t[c]).collect())
                .collect(),
        }
    }

    /// Tuples whose coordinate `column` equals `value`, with that column removed.
    pub fn fix_column(&self, column: usize, value: ElemId) -> Relation {
        Relation {
            arity: self.arity - 1,
            tuples: self
                .tuples
                .iter()
                .filter(|t| t[column] == value)
                .map(|t| {
                    let mut t = t.clone();
                    t.remove(column);
                    t
                })
                .collect(),
        }
    }

    pub fn retain(&mut self, keep: impl FnMut(&Tuple) -> bool) {
        self.tuples.retain(keep);
    }
}

impl FromIterator<Tuple> for Relation {
    /// Collects tuples, taking the arity from the first one (0 for an empty iterator).
    ///
    /// Panics on tuples of mixed lengths.
    fn from_iter<I: IntoIterator<Item = Tuple>>(iter: I) -> Self {
        let tuples: BTreeSet<Tuple> = iter.into_iter().collect();
        let arity = tuples.iter().next().map_or(0, Vec::len);
        assert!(
            tuples.iter().all(|t| t.len() == arity),
            "mixed tuple lengths"
        );
        Relation { arity, tuples }
    }
}

/// Named elements with named relations over them. Some elements may be marked as base.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Structure {
    universe: Vec<String>,
    index: HashMap<String, ElemId>,
    base: BTreeSet<ElemId>,
    relations: BTreeMap<String, Relation>,
}

impl Structure {
    pub fn new<S: Into<String>>(
        universe: impl IntoIterator<Item = S>,
    ) -> Result<Self, StructureError> {
        let universe: Vec<String> = universe.into_iter().map(Into::into).collect();
        if universe.is_empty() {
            return Err(StructureError::EmptyUniverse);
        }
        let mut index = HashMap::with_capacity(universe.len());
        for (i, name) in universe.iter().enumerate() {
            if !is_valid_name(name) || KEYWORDS.contains(&name.as_str()) {
                return Err(StructureError::InvalidName(name.clone()));
            }
            if index.insert(name.clone(), i as ElemId).is_some() {
                return Err(StructureError::DuplicateElement(name.clone()));
            }
        }
        Ok(Structure {
            universe,
            index,
            base: BTreeSet::new(),
            relations: BTreeMap::new(),
        })
    }

    pub fn with_base<S: AsRef<str>>(
        mut self,
        names: impl IntoIterator<Item = S>,
    ) -> Result<Self, StructureError> {
        let mut base = BTreeSet::new();
        for n in names {
            base.insert(self.require(n.as_ref())?);
        }
        self.base = base;
        Ok(self)
    }

    pub fn with_base_ids(mut self, base: BTreeSet<ElemId>) -> Result<Self, StructureError> {
        if let Some(&bad) = base.iter().find(|&&e| e as usize >= self.size()) {
            return Err(StructureError::UnknownElement {
                line: None,
                name: format!("#{bad}"),
            });
        }
        self.base = base;
        Ok(self)
    }

    /// Adds a relation; fails on a duplicate name or out-of-range element ids.
    pub fn with_relation(
        mut self,
        name: impl Into<String>,
        relation: Relation,
    ) -> Result<Self, StructureError> {
        self.add_relation(name.into(), relation)?;
        Ok(self)
    }

    /// Adds a relation from element names.
    pub fn with_named_tuples<S: AsRef<str>>(
        self,
        name: impl Into<String>,
        arity: usize,
        tuples: &[Vec<S>],
    ) -> Result<Self, StructureError> {
        let name = name.into();
        let mut rel = Relation::new(arity);
        for t in tuples {
            if t.len() != arity {
                return Err(StructureError::ArityMismatch {
                    line: None,
                    relation: name,
                    expected: arity,
                    found: t.len(),
                });
            }
            let ids = t
                .iter()
                .map(|n| self.require(n.as_ref()))
                .collect::<Result<Tuple, _>>()?;
            rel.insert(ids)?;
        }
        self.with_relation(name, rel)
    }

    fn add_relation(&mut self, name: String, relation: Relation) -> Result<(), StructureError> {
        if !is_valid_name(&name) {
            return Err(StructureError::InvalidName(name));
        }
        if relation.arity() == 0 {
            return Err(StructureError::InvalidConfig(format!(
                "relation `{name}` must have positive arity"
            )));
        }
        if self.relations.contains_key(&name) {
            return Err(StructureError::DuplicateRelation(name));
        }
        let size = self.size();
        if let Some(&bad) = relation.iter().flatten().find(|&&e| e as usize >= size) {
            return Err(StructureError::UnknownElement {
                line: None,
                name: format!("#{bad}"),
            });
        }
        self.relations.insert(name, relation);
        Ok(())
    }

    /// Replaces an existing relation's tuples (same arity), used by the shrinker.
    pub fn replace_relation(&self, name: &str, relation: Relation) -> Result<Self, StructureError> {
        let old = self.relations.get(name).ok_or_else(|| {
            StructureError::InvalidConfig(format!("no relation `{name}` to replace"))
        })?;
        if old.arity() != relation.arity() {
            return Err(StructureError::ArityMismatch {
                line: None,
                relation: name.to_string(),
                expected: old.arity(),
                found: relation.arity(),
            });
        }
        let mut s = self.clone();
        s.relations.remove(name);
        s.add_relation(name.to_string(), relation)?;
        Ok(s)
    }

    fn require(&self, name: &str) -> Result<ElemId, StructureError> {
        self.element_id(name)
            .ok_or_else(|| StructureError::UnknownElement {
                line: None,
                name: name.to_string(),
            })
    }

    pub fn size(&self) -> usize {
        self.universe.len()
    }

    pub fn elements(&self) -> impl Iterator<Item = ElemId> {
        0..self.universe.len() as ElemId
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn element_name(&self, id: ElemId) -> &str {
        &self.universe[id as usize]
    }

    pub fn element_id(&self, name: &str) -> Option<ElemId> {
        self.index.get(name).copied()
    }

    pub fn base(&self) -> &BTreeSet<ElemId> {
        &self.base
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &Relation)> + '_ {
        self.relations.iter().map(|(n, r)| (n.as_str(), r))
    }

    /// Relation names and arities.
    pub fn signature(&self) -> BTreeMap<String, usize> {
        self.relations
            .iter()
            .map(|(n, r)| (n.clone(), r.arity()))
            .collect()
    }

    pub fn names_of<'a>(&'a self, t: &'a [ElemId]) -> impl Iterator<Item = &'a str> + 'a {
        t.iter().map(move |&e| self.element_name(e))
    }

    /// The induced substructure on `keep` (which must be nonempty), with
    /// elements renumbered in universe order.
    pub fn restrict(&self, keep: &BTreeSet<ElemId>) -> Result<Structure, StructureError> {
        let remap: HashMap<ElemId, ElemId> = keep
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new as ElemId))
            .collect();
        let mut s = Structure::new(keep.iter().map(|&e| self.universe[e as usize].clone()))?;
        s.base = self
            .base
            .iter()
            .filter_map(|e| remap.get(e).copied())
            .collect();
        for (name, rel) in &self.relations {
            let tuples = rel
                .iter()
                .filter(|t| t.iter().all(|e| remap.contains_key(e)))
                .map(|t| t.iter().map(|e| remap[e]).collect());
            s.relations
                .insert(name.clone(), Relation::from_tuples(rel.arity(), tuples)?);
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_follow_identifier_rule() {
        assert!(is_valid_name("a_1"));
        assert!(is_valid_name("_x"));
        assert!(!is_valid_name("1a"));
        assert!(!is_valid_name(""));
        assert!(!is_valid_name("a-b"));
    }

    #[test]
    fn rejects_duplicate_elements_and_keywords() {
        assert_eq!(
            Structure::new(["a", "a"]),
            Err(StructureError::DuplicateElement("a".into()))
        );
        assert!(matches!(
            Structure::new(["rel"]),
            Err(StructureError::InvalidName(_))
        ));
        assert_eq!(
            Structure::new(Vec::<String>::new()),
            Err(StructureError::EmptyUniverse)
        );
    }

    #[test]
    fn relation_rejects_wrong_length() {
        let mut r = Relation::new(2);
        assert!(r.insert(vec![0]).is_err());
        assert!(r.insert(vec![0, 1]).unwrap());
        assert!(!r.insert(vec![0, 1]).unwrap());
    }

    #[test]
    fn rejects_out_of_range_tuple() {
        let s = Structure::new(["a"]).unwrap();
        let r = Relation::from_tuples(1, [vec![3]]).unwrap();
        assert!(matches!(
            s.with_relation("P", r),
            Err(StructureError::UnknownElement { .. })
        ));
    }

    #[test]
    fn restrict_renumbers() {
        let s = Structure::new(["a", "b", "c"])
            .unwrap()
            .with_named_tuples("R", 2, &[vec!["a", "c"], vec!["a", "b"]])
            .unwrap()
            .with_base(["c"])
            .unwrap();
        let keep: BTreeSet<ElemId> = [0, 2].into();
        let r = s.restrict(&keep).unwrap();
        assert_eq!(r.universe(), ["a", "c"]);
        assert_eq!(r.relation("R").unwrap().tuples(), &[vec![0, 1]].into());
        assert_eq!(r.base(), &[1].into());
    }

    #[test]
    fn permute_and_project() {
        let r = Relation::from_tuples(3, [vec![0, 1, 2], vec![2, 1, 0]]).unwrap();
        let p = r.permute(&[2, 0, 1]);
        assert!(p.contains(&[2, 0, 1]));
        assert!(p.contains(&[0, 2, 1]));
        assert_eq!(r.project(&[1]).len(), 1);
    }
}
