//! Disjunctive normal forms over certified literals.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::cert::CertifiedFormula;
use super::RewriteError;
use crate::formula::{evaluate, Formula};
use crate::structure::{Relation, Structure};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Literal {
    pub positive: bool,
    pub cert: CertifiedFormula,
}

impl Literal {
    pub fn pos(cert: CertifiedFormula) -> Literal {
        Literal {
            positive: true,
            cert,
        }
    }

    pub fn neg(cert: CertifiedFormula) -> Literal {
        Literal {
            positive: false,
            cert,
        }
    }

    pub fn negated(&self) -> Literal {
        Literal {
            positive: !self.positive,
            cert: self.cert.clone(),
        }
    }

    pub fn mentions(&self, x: &str) -> bool {
        self.cert.ctx().iter().any(|v| v == x)
    }

    pub fn to_formula(&self) -> Formula {
        if self.positive {
            self.cert.formula().clone()
        } else {
            Formula::not(self.cert.formula().clone())
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.cert)
        } else {
            write!(f, "!({})", self.cert)
        }
    }
}

/// A structure-dependent fact a rewrite relied on. Verification only checks
/// equivalence on structures where every assumption holds.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Assumption {
    /// Every solution of `formula(var)` is among `elements`.
    SolutionsWithin {
        formula: Formula,
        var: String,
        elements: Vec<String>,
    },
    /// `formula(var)` has at least `min` solutions.
    MinSolutions {
        formula: Formula,
        var: String,
        min: usize,
    },
}

impl Assumption {
    pub fn holds(&self, s: &Structure) -> bool {
        let (formula, var) = match self {
            Assumption::SolutionsWithin { formula, var, .. }
            | Assumption::MinSolutions { formula, var, .. } => (formula, var),
        };
        let Ok(solutions) = evaluate(s, formula, std::slice::from_ref(var)) else {
            return false;
        };
        match self {
            Assumption::SolutionsWithin { elements, .. } => {
                let allowed: Option<BTreeSet<u32>> =
                    elements.iter().map(|e| s.element_id(e)).collect();
                allowed.is_some_and(|allowed| solutions.iter().all(|t| allowed.contains(&t[0])))
            }
            Assumption::MinSolutions { min, .. } => solutions.len() >= *min,
        }
    }
}

/// Which case of existential elimination handled a disjunct.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// No literal mentions the variable.
    Untouched,
    /// Only negative literals mention it: true on large enough structures.
    Cofinite,
    /// One-variable `β` with finitely many solutions on the reference structure.
    Algebraic,
    /// One-variable `β` with more solutions than the negatives can exclude.
    NonAlgebraic,
    /// `β` and no negatives: `∃^{≥1} x β`.
    Positive,
    /// The counting disjunction over `r ≤ K`.
    Counting,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub var: String,
    pub disjunct: usize,
    pub branch: Branch,
    /// Size of the solution set on the reference structure, when one was consulted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_solutions: Option<usize>,
}

/// A disjunction of conjunctions of certified literals over `ctx`.
///
/// Equivalence with the source formula is claimed only on structures with more
/// than `size_threshold` elements that satisfy every assumption.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MAStarForm {
    pub ctx: Vec<String>,
    pub disjuncts: Vec<Vec<Literal>>,
    pub size_threshold: usize,
    #[serde(default)]
    pub assumptions: Vec<Assumption>,
    #[serde(default)]
    pub branches: Vec<BranchRecord>,
}

fn union(a: &[String], b: &[String]) -> Vec<String> {
    let mut out = a.to_vec();
    for v in b {
        if !out.contains(v) {
            out.push(v.clone());
        }
    }
    out
}

/// Removes repeated literals; `None` if the conjunction holds a literal and its negation.
fn tidy(lits: Vec<Literal>) -> Option<Vec<Literal>> {
    let mut out: Vec<Literal> = Vec::with_capacity(lits.len());
    for l in lits {
        if let Some(prev) = out.iter().find(|p| p.cert.formula() == l.cert.formula()) {
            if prev.positive != l.positive {
                return None;
            }
            continue;
        }
        out.push(l);
    }
    Some(out)
}

impl MAStarForm {
    pub fn falsum(ctx: Vec<String>) -> MAStarForm {
        MAStarForm {
            ctx,
            disjuncts: Vec::new(),
            size_threshold: 0,
            assumptions: Vec::new(),
            branches: Vec::new(),
        }
    }

    pub fn verum(ctx: Vec<String>) -> MAStarForm {
        MAStarForm {
            disjuncts: vec![Vec::new()],
            ..MAStarForm::falsum(ctx)
        }
    }

    /// The single conjunction of `lits`.
    pub fn conjunction(ctx: Vec<String>, lits: Vec<Literal>) -> MAStarForm {
        let mut ctx = ctx;
        for l in &lits {
            ctx = union(&ctx, l.cert.ctx());
        }
        MAStarForm {
            disjuncts: tidy(lits).into_iter().collect(),
            ..MAStarForm::falsum(ctx)
        }
    }

    pub fn literal(lit: Literal) -> MAStarForm {
        MAStarForm::conjunction(Vec::new(), vec![lit])
    }

    fn merge_meta(&mut self, other: &MAStarForm) {
        self.size_threshold = self.size_threshold.max(other.size_threshold);
        for a in &other.assumptions {
            if !self.assumptions.contains(a) {
                self.assumptions.push(a.clone());
            }
        }
        self.branches.extend(other.branches.iter().cloned());
    }

    pub fn or(mut self, other: MAStarForm) -> MAStarForm {
        self.ctx = union(&self.ctx, &other.ctx);
        self.merge_meta(&other);
        for d in other.disjuncts {
            if !self.disjuncts.contains(&d) {
                self.disjuncts.push(d);
            }
        }
        self
    }

    pub fn and(self, other: MAStarForm) -> MAStarForm {
        let mut out = MAStarForm {
            ctx: union(&self.ctx, &other.ctx),
            disjuncts: Vec::new(),
            ..self.clone()
        };
        out.merge_meta(&other);
        for a in &self.disjuncts {
            for b in &other.disjuncts {
                if let Some(d) = tidy(a.iter().chain(b).cloned().collect()) {
                    if !out.disjuncts.contains(&d) {
                        out.disjuncts.push(d);
                    }
                }
            }
        }
        out
    }

    /// De Morgan: a conjunction of disjunctions of negated literals, redistributed.
    pub fn not(&self) -> MAStarForm {
        let mut out = MAStarForm::verum(self.ctx.clone());
        out.merge_meta(self);
        for d in &self.disjuncts {
            let mut clause = MAStarForm::falsum(self.ctx.clone());
            for l in d {
                clause = clause.or(MAStarForm::conjunction(self.ctx.clone(), vec![l.negated()]));
            }
            out = out.and(clause);
        }
        out
    }

    /// Replaces the context by `ctx`, which must contain the current one.
    pub fn with_ctx(mut self, ctx: Vec<String>) -> MAStarForm {
        debug_assert!(self.ctx.iter().all(|v| ctx.contains(v)));
        self.ctx = ctx;
        self
    }

    pub fn with_threshold(mut self, n: usize) -> MAStarForm {
        self.size_threshold = self.size_threshold.max(n);
        self
    }

    pub fn literals(&self) -> impl Iterator<Item = &Literal> + '_ {
        self.disjuncts.iter().flatten()
    }

    pub fn to_formula(&self) -> Formula {
        Formula::or(
            self.disjuncts
                .iter()
                .map(|d| Formula::and(d.iter().map(Literal::to_formula).collect()))
                .collect(),
        )
    }

    pub fn evaluate(&self, s: &Structure) -> Result<Relation, RewriteError> {
        Ok(evaluate(s, &self.to_formula(), &self.ctx)?)
    }

    /// Checks the normal-form shape: literal contexts lie inside `ctx` and
    /// every literal's formula is covered by its own certificate context.
    pub fn check_shape(&self) -> Result<(), RewriteError> {
        for l in self.literals() {
            if let Some(v) = l.cert.ctx().iter().find(|v| !self.ctx.contains(v)) {
                return Err(RewriteError::FreeVarOutsideCtx(v.clone()));
            }
            if let Some(v) = l
                .cert
                .formula()
                .free_vars()
                .into_iter()
                .find(|v| !l.cert.ctx().contains(v))
            {
                return Err(RewriteError::FreeVarOutsideCtx(v));
            }
        }
        Ok(())
    }
}

impl fmt::Display for MAStarForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.disjuncts.is_empty() {
            return f.write_str("false");
        }
        for (i, d) in self.disjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str("\n  | ")?;
            }
            if d.is_empty() {
                f.write_str("true")?;
            }
            for (j, l) in d.iter().enumerate() {
                if j > 0 {
                    f.write_str(" & ")?;
                }
                write!(f, "{l}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::structure::parse_structure;

    fn lit(text: &str) -> Literal {
        let (f, ctx) = parse_formula(text).unwrap();
        Literal::pos(CertifiedFormula::asserted(f, ctx, 1).unwrap())
    }

    #[test]
    fn complementary_conjuncts_vanish() {
        let a = MAStarForm::literal(lit("R(x, y)"));
        let not_a = a.not();
        assert!(a.clone().and(not_a.clone()).disjuncts.is_empty());
        assert_eq!(a.clone().or(not_a).disjuncts.len(), 2);
        assert_eq!(a.clone().and(a.clone()), a);
    }

    #[test]
    fn negation_is_complement() {
        let s = parse_structure("universe a b c\nrel R 2\na b\nb c\nrel S 2\nc c\n").unwrap();
        let f = MAStarForm::literal(lit("R(x, y)"))
            .and(MAStarForm::literal(lit("S(y, x)")).not())
            .or(MAStarForm::literal(lit("S(x, y)")));
        let g = f.not();
        let all = f.evaluate(&s).unwrap().len() + g.evaluate(&s).unwrap().len();
        assert_eq!(all, 9);
        assert!(f.clone().and(g.clone()).evaluate(&s).unwrap().is_empty());
    }

    #[test]
    fn assumptions() {
        let s = parse_structure("universe a b c\nrel P 1\na\nb\n").unwrap();
        let (p, _) = parse_formula("P(x)").unwrap();
        let within = |els: &[&str]| Assumption::SolutionsWithin {
            formula: p.clone(),
            var: "x".into(),
            elements: els.iter().map(|e| e.to_string()).collect(),
        };
        assert!(within(&["a", "b"]).holds(&s));
        assert!(!within(&["a"]).holds(&s));
        assert!(!within(&["a", "b", "zz"]).holds(&s));
        let min = |m| Assumption::MinSolutions {
            formula: p.clone(),
            var: "x".into(),
            min: m,
        };
        assert!(min(2).holds(&s));
        assert!(!min(3).holds(&s));
    }
}
