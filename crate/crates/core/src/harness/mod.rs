//! Seeded corpora and the law suites run over them.
//!
//! A [`CorpusSpec`] expands deterministically into cases. Each suite checks
//! one family of laws case by case (in parallel, aggregated by case index)
//! and reports counts with tightness statistics. A failure comes with a
//! shrunk reproduction.

mod components;
mod evaluator;
mod fcp;
mod ma;
mod rewrite;
mod shrink;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::random::{random_formula, FormulaShape};
use crate::formula::Formula;
use crate::structure::{
    generate_with, serialize_structure, RelationSpec, Structure, StructureError,
};

pub use shrink::shrink_structure;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum HarnessError {
    #[error("unknown suite `{name}`; valid suites: {}", Suite::ALL.map(|s| s.name()).join(", "))]
    UnknownSuite { name: String },
    #[error("invalid corpus spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

fn default_universe() -> (usize, usize) {
    (2, 6)
}

fn default_signature() -> Vec<RelationSpec> {
    vec![
        RelationSpec::dense("P", 1, 0.4),
        RelationSpec::bounded("R", 2, 0.3, 2),
        RelationSpec::dense("S", 2, 0.3),
        RelationSpec::bounded("T", 3, 0.1, 2),
    ]
}

fn default_depth() -> usize {
    3
}

fn default_verify_universe() -> (usize, usize) {
    (4, 12)
}

fn default_verify_structures() -> usize {
    6
}

/// Everything a suite run depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub seed: u64,
    pub count: usize,
    /// Inclusive range of universe sizes.
    #[serde(default = "default_universe")]
    pub universe: (usize, usize),
    /// Relations of every generated structure; `target_k` bounds a relation.
    #[serde(default = "default_signature")]
    pub signature: Vec<RelationSpec>,
    #[serde(default = "default_depth")]
    pub formula_depth: usize,
    /// Sizes of the structures that rewrites are verified on.
    #[serde(default = "default_verify_universe")]
    pub verify_universe: (usize, usize),
    #[serde(default = "default_verify_structures")]
    pub verify_structures: usize,
}

impl CorpusSpec {
    pub fn new(seed: u64, count: usize) -> Self {
        CorpusSpec {
            seed,
            count,
            universe: default_universe(),
            signature: default_signature(),
            formula_depth: default_depth(),
            verify_universe: default_verify_universe(),
            verify_structures: default_verify_structures(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::InvalidSpec(m.into()));
        let (lo, hi) = self.universe;
        if lo == 0 || lo > hi {
            return bad("universe range must satisfy 1 <= min <= max");
        }
        let (vlo, vhi) = self.verify_universe;
        if vlo == 0 || vlo > vhi {
            return bad("verify_universe range must satisfy 1 <= min <= max");
        }
        if self.signature.is_empty() {
            return bad("signature is empty");
        }
        if let Some(r) = self.signature.iter().find(|r| r.arity == 0 || r.arity > 4) {
            return Err(HarnessError::InvalidSpec(format!(
                "relation `{}` needs arity 1..=4",
                r.name
            )));
        }
        if self
            .signature
            .iter()
            .any(|r| !(0.0..=1.0).contains(&r.density))
        {
            return bad("densities must lie in [0, 1]");
        }
        Ok(())
    }

    pub(crate) fn signature_pairs(&self) -> Vec<(String, usize)> {
        self.signature
            .iter()
            .map(|r| (r.name.clone(), r.arity))
            .collect()
    }

    /// The relations with a target bound, with that bound.
    pub(crate) fn bounded(&self) -> Vec<(String, usize, usize)> {
        self.signature
            .iter()
            .filter_map(|r| r.target_k.map(|k| (r.name.clone(), r.arity, k)))
            .collect()
    }
}

/// A per-case generator, independent of how many cases run before it.
pub(crate) fn case_rng(seed: u64, index: usize, salt: u64) -> ChaCha8Rng {
    let mixed = seed
        ^ (index as u64)
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ salt.wrapping_mul(0xD1B5_4A32_D192_ED03);
    ChaCha8Rng::seed_from_u64(mixed)
}

pub(crate) fn random_structure<R: Rng>(
    rng: &mut R,
    spec: &CorpusSpec,
    sizes: (usize, usize),
    base: usize,
) -> Result<Structure, StructureError> {
    let n = rng.random_range(sizes.0..=sizes.1);
    generate_with(rng, n, base.min(n - 1), &spec.signature)
}

/// One generated case.
#[derive(Clone, Debug)]
pub struct Case {
    pub index: usize,
    pub structure: Structure,
    pub formula: Formula,
    pub ctx: Vec<String>,
}

/// The spec's cases, in order. Formulas have free variables among `x, y`.
pub fn expand(spec: &CorpusSpec) -> Result<Vec<Case>, HarnessError> {
    spec.validate()?;
    let sig = spec.signature_pairs();
    let ctx = vec!["x".to_string(), "y".to_string()];
    let shape = FormulaShape {
        max_depth: spec.formula_depth,
        ..FormulaShape::default()
    };
    (0..spec.count)
        .map(|index| {
            let mut rng = case_rng(spec.seed, index, 0);
            let structure = random_structure(&mut rng, spec, spec.universe, 0)?;
            let formula = random_formula(&mut rng, &sig, &ctx, structure.universe(), &shape);
            Ok(Case {
                index,
                structure,
                formula,
                ctx: ctx.clone(),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    MaLaws,
    RewriteSoundness,
    FcpLaws,
    ComponentLaws,
    EvaluatorDiff,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::MaLaws,
        Suite::RewriteSoundness,
        Suite::FcpLaws,
        Suite::ComponentLaws,
        Suite::EvaluatorDiff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::MaLaws => "ma-laws",
            Suite::RewriteSoundness => "rewrite-soundness",
            Suite::FcpLaws => "fcp-laws",
            Suite::ComponentLaws => "component-laws",
            Suite::EvaluatorDiff => "evaluator-diff",
        }
    }
}

impl FromStr for Suite {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| HarnessError::UnknownSuite { name: s.into() })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What is needed to replay a failure by hand.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Repro {
    pub structure: String,
    pub formula: Option<String>,
    pub ctx: Vec<String>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub case: usize,
    pub law: String,
    pub message: String,
    pub repro: Repro,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LawCount {
    pub checked: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub cases: usize,
    pub laws: BTreeMap<String, LawCount>,
    /// Summed counters, such as cases per rewrite branch.
    pub totals: BTreeMap<String, usize>,
    /// Largest observed values, such as measured against claimed bounds.
    pub maxima: BTreeMap<String, usize>,
    pub failures: Vec<Failure>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn checked(&self, law: &str) -> usize {
        self.laws.get(law).map_or(0, |c| c.checked)
    }

    pub fn failed(&self) -> usize {
        self.laws.values().map(|c| c.failed).sum()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        writeln!(
            f,
            "suite {} (seed {}, {} cases): {verdict}",
            self.suite, self.seed, self.cases
        )?;
        for (law, c) in &self.laws {
            writeln!(f, "  {law}: {} checked, {} failed", c.checked, c.failed)?;
        }
        for (k, v) in &self.totals {
            writeln!(f, "  total {k}: {v}")?;
        }
        for (k, v) in &self.maxima {
            writeln!(f, "  max {k}: {v}")?;
        }
        for fail in &self.failures {
            writeln!(
                f,
                "  failure in case {} [{}]: {}",
                fail.case, fail.law, fail.message
            )?;
            if let Some(formula) = &fail.repro.formula {
                writeln!(
                    f,
                    "    formula: {formula}  over ({})",
                    fail.repro.ctx.join(", ")
                )?;
            }
            if let Some(note) = &fail.repro.note {
                writeln!(f, "    note: {note}")?;
            }
            for line in fail.repro.structure.lines() {
                writeln!(f, "    | {line}")?;
            }
        }
        Ok(())
    }
}

/// Results of one case; merged into the report in case order.
#[derive(Default)]
pub(crate) struct CaseLog {
    index: usize,
    laws: BTreeMap<String, LawCount>,
    totals: BTreeMap<String, usize>,
    maxima: BTreeMap<String, usize>,
    failures: Vec<Failure>,
}

impl CaseLog {
    pub(crate) fn new(index: usize) -> Self {
        CaseLog {
            index,
            ..CaseLog::default()
        }
    }

    pub(crate) fn tally(&mut self, law: &str, ok: bool) {
        let c = self.laws.entry(law.into()).or_default();
        c.checked += 1;
        c.failed += usize::from(!ok);
    }

    pub(crate) fn add(&mut self, key: &str, n: usize) {
        *self.totals.entry(key.into()).or_default() += n;
    }

    pub(crate) fn max(&mut self, key: &str, n: usize) {
        let m = self.maxima.entry(key.into()).or_default();
        *m = (*m).max(n);
    }

    /// Runs `law` on `s`; on failure shrinks `s` while it keeps failing and
    /// records the reproduction.
    pub(crate) fn check(
        &mut self,
        law: &str,
        s: &Structure,
        formula: Option<(&Formula, &[String])>,
        run: impl Fn(&Structure) -> Result<(), String>,
    ) -> bool {
        match run(s) {
            Ok(()) => {
                self.tally(law, true);
                true
            }
            Err(_) => {
                let small = shrink_structure(s, true, |t| run(t).is_err());
                let message = run(&small).err().unwrap_or_default();
                self.fail(law, message, &small, formula, None);
                false
            }
        }
    }

    /// Records a failure whose reproduction the caller has already built.
    pub(crate) fn fail(
        &mut self,
        law: &str,
        message: String,
        s: &Structure,
        formula: Option<(&Formula, &[String])>,
        note: Option<String>,
    ) {
        self.tally(law, false);
        self.failures.push(Failure {
            case: self.index,
            law: law.into(),
            message,
            repro: Repro {
                structure: serialize_structure(s),
                formula: formula.map(|(f, _)| f.to_string()),
                ctx: formula.map(|(_, c)| c.to_vec()).unwrap_or_default(),
                note,
            },
        });
    }
}

fn collect(suite: Suite, spec: &CorpusSpec, logs: Vec<CaseLog>) -> SuiteReport {
    let mut report = SuiteReport {
        suite,
        seed: spec.seed,
        cases: logs.len(),
        laws: BTreeMap::new(),
        totals: BTreeMap::new(),
        maxima: BTreeMap::new(),
        failures: Vec::new(),
        passed: true,
    };
    for log in logs {
        for (law, c) in log.laws {
            let e = report.laws.entry(law).or_default();
            e.checked += c.checked;
            e.failed += c.failed;
        }
        for (k, v) in log.totals {
            *report.totals.entry(k).or_default() += v;
        }
        for (k, v) in log.maxima {
            let m = report.maxima.entry(k).or_default();
            *m = (*m).max(v);
        }
        report.failures.extend(log.failures);
    }
    report.passed = report.failures.is_empty() && report.failed() == 0;
    report
}

/// Runs every case of `suite` over the corpus of `spec`.
pub fn run_suite(spec: &CorpusSpec, suite: Suite) -> Result<SuiteReport, HarnessError> {
    spec.validate()?;
    let shared = match suite {
        Suite::RewriteSoundness => Some(rewrite::verify_corpus(spec)?),
        _ => None,
    };
    let logs = (0..spec.count)
        .into_par_iter()
        .map(|i| {
            let mut log = CaseLog::new(i);
            let res = match suite {
                Suite::MaLaws => ma::run_case(spec, i, &mut log),
                Suite::RewriteSoundness => {
                    rewrite::run_case(spec, i, shared.as_deref().unwrap(), &mut log)
                }
                Suite::FcpLaws => fcp::run_case(spec, i, &mut log),
                Suite::ComponentLaws => components::run_case(spec, i, &mut log),
                Suite::EvaluatorDiff => evaluator::run_case(spec, i, &mut log),
            };
            res.map(|()| log)
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(collect(suite, spec, logs))
}

/// Parses a suite name, then runs it.
pub fn run_suite_named(spec: &CorpusSpec, name: &str) -> Result<SuiteReport, HarnessError> {
    run_suite(spec, name.parse()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expansion_is_deterministic() {
        let spec = CorpusSpec::new(7, 20);
        let a = expand(&spec).unwrap();
        let b = expand(&spec).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.structure, y.structure);
            assert_eq!(x.formula, y.formula);
        }
        let c = expand(&CorpusSpec::new(8, 20)).unwrap();
        assert!(a.iter().zip(&c).any(|(x, y)| x.formula != y.formula));
        assert!(a
            .iter()
            .all(|case| (2..=6).contains(&case.structure.size())));
    }

    #[test]
    fn spec_defaults_from_json() {
        let spec: CorpusSpec = serde_json::from_str(r#"{"seed": 3, "count": 5}"#).unwrap();
        assert_eq!(spec, CorpusSpec::new(3, 5));
        assert!(
            serde_json::from_str::<CorpusSpec>(r#"{"seed": 3, "count": 5, "cuont": 1}"#).is_err()
        );
        let mut bad = spec.clone();
        bad.universe = (4, 2);
        assert!(matches!(bad.validate(), Err(HarnessError::InvalidSpec(_))));
    }

    #[test]
    fn suite_names() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        let err = "rewrite-soudness".parse::<Suite>().unwrap_err();
        assert!(err.to_string().contains("rewrite-soundness, fcp-laws"));
    }

    #[test]
    fn reports_repeat_exactly() {
        let spec = CorpusSpec::new(11, 12);
        for suite in Suite::ALL {
            let a = run_suite(&spec, suite).unwrap();
            let b = run_suite(&spec, suite).unwrap();
            assert_eq!(
                serde_json::to_string(&a).unwrap(),
                serde_json::to_string(&b).unwrap()
            );
            assert!(a.passed, "{a}");
        }
    }
}
