//! First-order formulas with counting quantifiers over finite structures.
//!
//! Two independent evaluators are provided: [`evaluate`] computes denotations
//! bottom-up as relations, [`evaluate_naive`] enumerates assignments. Everything
//! downstream is checked against them.

mod ast;
mod eval;
mod naive;
mod parse;
pub mod random;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::structure::Structure;

pub use ast::{Cmp, Formula, Term};
pub use eval::{evaluate, formula_ma_profile, holds};
pub use naive::evaluate_naive;
pub use parse::{parse_formula, ParseError};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{relation}` has arity {expected} but is applied to {found} arguments")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown parameter element `@{0}`")]
    UnknownParameter(String),
    #[error("free variable `{0}` is missing from the variable context")]
    MissingFreeVar(String),
    #[error("variable `{0}` is listed twice")]
    DuplicateVar(String),
}

/// Whether `name` can be printed and parsed back as a variable: an identifier
/// other than the quantifier letters and the truth constants.
pub fn is_valid_var(name: &str) -> bool {
    crate::structure::is_valid_name(name) && !matches!(name, "E" | "A" | "true" | "false")
}

/// Validates `f` against the structure's signature and the variable context.
pub(crate) fn check_formula(s: &Structure, f: &Formula, ctx: &[String]) -> Result<(), EvalError> {
    let mut seen = BTreeSet::new();
    for v in ctx {
        if !seen.insert(v) {
            return Err(EvalError::DuplicateVar(v.clone()));
        }
    }
    for v in f.free_vars() {
        if !seen.contains(&v) {
            return Err(EvalError::MissingFreeVar(v));
        }
    }
    for (name, n) in f.relations() {
        let rel = s
            .relation(&name)
            .ok_or_else(|| EvalError::UnknownRelation(name.clone()))?;
        if rel.arity() != n {
            return Err(EvalError::ArityMismatch {
                relation: name,
                expected: rel.arity(),
                found: n,
            });
        }
    }
    for p in f.params() {
        if s.element_id(&p).is_none() {
            return Err(EvalError::UnknownParameter(p));
        }
    }
    let mut dup = None;
    f.visit(&mut |g| {
        if let Formula::Exists { vars, .. }
        | Formula::Forall { vars, .. }
        | Formula::Count { vars, .. } = g
        {
            let distinct: BTreeSet<&String> = vars.iter().collect();
            if distinct.len() != vars.len() && dup.is_none() {
                dup = vars
                    .iter()
                    .find(|v| vars.iter().filter(|w| w == v).count() > 1)
                    .cloned();
            }
        }
    });
    match dup {
        Some(v) => Err(EvalError::DuplicateVar(v)),
        None => Ok(()),
    }
}
