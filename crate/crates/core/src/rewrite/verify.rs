//! Semantic check of a rewrite against the evaluator, structure by structure.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::cert::CertifiedFormula;
use super::star::MAStarForm;
use crate::formula::{evaluate, Formula};
use crate::ma::MaProfile;
use crate::structure::Structure;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum SkipReason {
    BelowThreshold { size: usize },
    AxiomViolated,
    AssumptionFailed,
    EvalError { message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Skip {
    pub structure: usize,
    #[serde(flatten)]
    pub reason: SkipReason,
}

/// A structure where the two sides disagree; `tuple` is the first differing
/// tuple in sorted order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub structure: usize,
    pub tuple: Vec<String>,
    pub before: bool,
    pub after: bool,
    pub differing: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateViolation {
    pub structure: usize,
    pub formula: String,
    pub ctx: Vec<String>,
    pub rule: String,
    pub claimed: usize,
    pub measured: usize,
    pub axiom: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub threshold: usize,
    pub cases: usize,
    pub checked: usize,
    pub skipped: Vec<Skip>,
    pub counterexamples: Vec<Counterexample>,
    /// Axiom violations make a structure skipped; derived ones are failures.
    pub certificate_violations: Vec<CertificateViolation>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn derived_violations(&self) -> impl Iterator<Item = &CertificateViolation> + '_ {
        self.certificate_violations.iter().filter(|v| !v.axiom)
    }
}

enum Outcome {
    Skipped(SkipReason, Vec<CertificateViolation>),
    Checked(Option<Counterexample>, Vec<CertificateViolation>),
}

/// Measures every certificate in `certs` on `s` (each distinct formula once)
/// and returns the violations, axioms and derived nodes alike.
pub fn certificate_violations(
    s: &Structure,
    index: usize,
    certs: &[CertifiedFormula],
) -> Result<Vec<CertificateViolation>, String> {
    let mut profiles: HashMap<(&Formula, &[String]), MaProfile> = HashMap::new();
    let mut out = Vec::new();
    for c in certs {
        let key = (c.formula(), c.ctx());
        if let std::collections::hash_map::Entry::Vacant(e) = profiles.entry(key) {
            let p = c.profile(s).map_err(|e| e.to_string())?;
            e.insert(p);
        }
        let p = &profiles[&key];
        if !c.bound().admits(p) {
            out.push(CertificateViolation {
                structure: index,
                formula: c.formula().to_string(),
                ctx: c.ctx().to_vec(),
                rule: c.rule().name().into(),
                claimed: c.bound().k,
                measured: p.uniform_k,
                axiom: c.is_axiom(),
            });
        }
    }
    Ok(out)
}

fn all_nodes(after: &MAStarForm) -> Vec<CertifiedFormula> {
    let mut nodes: Vec<CertifiedFormula> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for l in after.literals() {
        for n in l.cert.nodes() {
            if seen.insert((
                n.formula().clone(),
                n.ctx().to_vec(),
                n.bound(),
                n.is_axiom(),
            )) {
                nodes.push(n);
            }
        }
    }
    nodes
}

fn check_one(
    before: &Formula,
    after: &MAStarForm,
    nodes: &[CertifiedFormula],
    s: &Structure,
    index: usize,
) -> Outcome {
    if s.size() <= after.size_threshold {
        return Outcome::Skipped(SkipReason::BelowThreshold { size: s.size() }, Vec::new());
    }
    let eval_error =
        |message: String| Outcome::Skipped(SkipReason::EvalError { message }, Vec::new());
    let (axioms, derived): (Vec<CertifiedFormula>, Vec<CertifiedFormula>) =
        nodes.iter().cloned().partition(|n| n.is_axiom());
    let axiom_violations = match certificate_violations(s, index, &axioms) {
        Ok(v) => v,
        Err(e) => return eval_error(e),
    };
    if !axiom_violations.is_empty() {
        return Outcome::Skipped(SkipReason::AxiomViolated, axiom_violations);
    }
    if !after.assumptions.iter().all(|a| a.holds(s)) {
        return Outcome::Skipped(SkipReason::AssumptionFailed, Vec::new());
    }
    let violations = match certificate_violations(s, index, &derived) {
        Ok(v) => v,
        Err(e) => return eval_error(e),
    };
    let lhs = match evaluate(s, before, &after.ctx) {
        Ok(r) => r,
        Err(e) => return eval_error(e.to_string()),
    };
    let rhs = match after.evaluate(s) {
        Ok(r) => r,
        Err(e) => return eval_error(e.to_string()),
    };
    let mut diff = lhs.tuples().symmetric_difference(rhs.tuples());
    let counterexample = diff.next().map(|t| Counterexample {
        structure: index,
        tuple: s.names_of(t).map(str::to_string).collect(),
        before: lhs.contains(t),
        after: rhs.contains(t),
        differing: 1 + diff.count(),
    });
    Outcome::Checked(counterexample, violations)
}

/// Compares `before` and `after` on every corpus structure above the
/// threshold whose axioms and assumptions hold, and re-measures every derived
/// certificate there. Structures are checked in parallel; the report is in
/// corpus order.
pub fn verify_rewrite(before: &Formula, after: &MAStarForm, corpus: &[Structure]) -> VerifyReport {
    let nodes = all_nodes(after);
    let outcomes: Vec<Outcome> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, s)| check_one(before, after, &nodes, s, i))
        .collect();
    let mut report = VerifyReport {
        threshold: after.size_threshold,
        cases: corpus.len(),
        ..VerifyReport::default()
    };
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Outcome::Skipped(reason, v) => {
                report.skipped.push(Skip {
                    structure: i,
                    reason,
                });
                report.certificate_violations.extend(v);
            }
            Outcome::Checked(c, v) => {
                report.checked += 1;
                report.counterexamples.extend(c);
                report.certificate_violations.extend(v);
            }
        }
    }
    report.passed =
        report.counterexamples.is_empty() && report.derived_violations().next().is_none();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::rewrite::dnf::{to_dnf, Asserted};
    use crate::rewrite::eliminate::eliminate_exists;
    use crate::structure::parse_structure;

    fn corpus() -> Vec<Structure> {
        vec![
            parse_structure("universe a b c\nrel R 2\na b\nb c\nc a\nrel S 2\na c\nb a\nc b\n")
                .unwrap(),
            parse_structure("universe a b c d\nrel R 2\na b\na c\nrel S 2\nd d\n").unwrap(),
            parse_structure("universe a\nrel R 2\nrel S 2\na a\n").unwrap(),
        ]
    }

    #[test]
    fn identity_rewrite_passes() {
        let (f, ctx) = parse_formula("R(x, y) & !S(y, x) | S(x, y)").unwrap();
        let form = to_dnf(&f, &ctx, &Asserted::relations([("R", 2), ("S", 1)])).unwrap();
        let report = verify_rewrite(&f, &form, &corpus());
        assert!(report.passed);
        assert_eq!(report.checked, 3);
        assert!(report.certificate_violations.is_empty());
    }

    #[test]
    fn understated_bound_is_flagged() {
        let (f, ctx) = parse_formula("R(x, y)").unwrap();
        let form = to_dnf(&f, &ctx, &Asserted::relations([("R", 1)])).unwrap();
        let report = verify_rewrite(&f, &form, &corpus());
        let v = &report.certificate_violations;
        assert_eq!(v.len(), 1);
        assert_eq!(
            (v[0].structure, v[0].claimed, v[0].measured, v[0].axiom),
            (1, 1, 2, true)
        );
        assert_eq!(report.skipped[0].reason, SkipReason::AxiomViolated);
        assert_eq!(report.checked, 2);
    }

    #[test]
    fn wrong_rewrite_is_caught() {
        let (f, ctx) = parse_formula("R(x, y)").unwrap();
        let (g, _) = parse_formula("S(x, y)").unwrap();
        let form = to_dnf(&g, &ctx, &Asserted::relations([("S", 1)])).unwrap();
        let report = verify_rewrite(&f, &form, &corpus());
        assert!(!report.passed);
        assert_eq!(report.counterexamples[0].structure, 0);
        assert_eq!(report.counterexamples[0].tuple, ["a", "b"]);
    }

    #[test]
    fn elimination_report_is_json() {
        let (f, ctx) = parse_formula("!R(x, y)").unwrap();
        let form = to_dnf(&f, &ctx, &Asserted::relations([("R", 2)])).unwrap();
        let out = eliminate_exists(&form, "x", None).unwrap();
        let (before, _) = parse_formula("E x. !R(x, y)").unwrap();
        let report = verify_rewrite(&before, &out, &corpus());
        assert!(report.passed);
        assert_eq!(report.threshold, 3);
        let json = serde_json::to_value(&report).unwrap();
        for key in [
            "threshold",
            "counterexamples",
            "certificate_violations",
            "checked",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert_eq!(json["skipped"][0]["reason"], "below_threshold");
    }
}
