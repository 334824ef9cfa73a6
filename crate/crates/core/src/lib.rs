//! Mutual algebraicity on finite relational structures.
//!
//! The crate measures fiber bounds of relations ([`ma`]), evaluates
//! first-order formulas with counting quantifiers ([`formula`]), rewrites
//! formulas into certified quantifier-free form ([`rewrite`]), checks the
//! finite consistency property for parameter families ([`fcp`]) and computes
//! component decompositions ([`components`]). [`harness`] ties them together
//! into randomized law checks.

pub mod components;
pub mod fcp;
pub mod formula;
pub mod harness;
pub mod ma;
pub mod rewrite;
pub mod structure;

pub use components::{
    decompose, is_component_map, is_isomorphism, ComponentDecomposition, ComponentMap,
};
pub use fcp::{consistency_threshold, family_consistent, greedy_subfamily, ParameterFamily};
pub use formula::{evaluate, evaluate_naive, parse_formula, Cmp, Formula, Term};
pub use harness::{run_suite, CorpusSpec, Suite, SuiteReport};
pub use ma::{fiber_bound, is_k_ma, ma_profile, proper_partitions, MaProfile, PartitionKey};
pub use rewrite::{eliminate_exists, verify_rewrite, CertifiedFormula, MAStarForm};
pub use structure::{parse_structure, serialize_structure, ElemId, Relation, Structure, Tuple};
