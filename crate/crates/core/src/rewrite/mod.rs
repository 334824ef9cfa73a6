//! Certified rewriting into boolean combinations of mutually algebraic formulas.
//!
//! Certificates are claims: leaf bounds are asserted or measured, derived
//! bounds follow from the closure rules, and [`verify_rewrite`] re-checks
//! all of them on concrete structures.

mod cert;
mod classify;
mod count;
mod dnf;
mod eliminate;
mod star;
mod verify;

use thiserror::Error;

use crate::formula::EvalError;

pub use cert::{
    conjoin_shared, count_at_least, count_expand, negate_unary, permute, project, rename,
    strengthen, substitute, AxiomSource, Bound, CertifiedFormula, Rule,
};
pub use classify::{classify_unary, Classification, Side};
pub use count::{at_least_count_dnf, at_most_count_dnf, exact_count_dnf};
pub use dnf::{to_dnf, Asserted, Certifier, Derivable, Measured, Skeleton};
pub use eliminate::{eliminate_exists, rewrite_formula};
pub use star::{Assumption, Branch, BranchRecord, Literal, MAStarForm};
pub use verify::{
    certificate_violations, verify_rewrite, CertificateViolation, Counterexample, Skip, SkipReason,
    VerifyReport,
};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum RewriteError {
    #[error("variable `{var}` is not free in `{formula}`")]
    SharedVarMissing { var: String, formula: String },
    #[error("at least one part is required")]
    EmptyParts,
    #[error("counting needs at least one bound variable")]
    EmptyCountVars,
    #[error("variable `{0}` is not in the context")]
    NotInCtx(String),
    #[error("free variable `{0}` is outside the context")]
    FreeVarOutsideCtx(String),
    #[error("not mutually algebraic: {0}")]
    NotMutuallyAlgebraic(String),
    #[error("`{0}` has more than one free variable")]
    NotUnary(String),
    #[error("`{0}` is not certified in every structure")]
    NotDerivable(String),
    #[error("no certificate for literal `{0}`")]
    UncertifiedLiteral(String),
    #[error("quantifier outside a certified literal: `{0}`")]
    QuantifierNotCertified(String),
    #[error("`{0}` has one free variable; deciding it needs a reference structure")]
    NeedsReference(String),
    #[error("the form mixes bounded and unbounded disjuncts; neither side is bounded")]
    Unclassifiable,
    #[error("invalid rule application: {0}")]
    InvalidRule(String),
    #[error("replaying `{rule}` gave {found}, trace says {expected}")]
    ReplayMismatch {
        rule: String,
        expected: String,
        found: String,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}
