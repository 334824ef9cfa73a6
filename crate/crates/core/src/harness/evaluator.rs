//! Bottom-up evaluation against the all-assignments oracle.

use super::{case_rng, random_structure, CaseLog, CorpusSpec, HarnessError};
use crate::formula::random::{random_formula, FormulaShape};
use crate::formula::{evaluate, evaluate_naive};

pub(super) fn run_case(
    spec: &CorpusSpec,
    index: usize,
    log: &mut CaseLog,
) -> Result<(), HarnessError> {
    let mut rng = case_rng(spec.seed, index, 0);
    let s = random_structure(&mut rng, spec, spec.universe, 0)?;
    let ctx = vec!["x".to_string(), "y".to_string()];
    let shape = FormulaShape {
        max_depth: spec.formula_depth,
        ..FormulaShape::default()
    };
    let f = random_formula(
        &mut rng,
        &spec.signature_pairs(),
        &ctx,
        s.universe(),
        &shape,
    );
    log.max("formula_depth", f.depth());
    log.check("evaluators-agree", &s, Some((&f, &ctx)), |t| {
        // a shrunk structure may lose a parameter element; that is not a discrepancy
        match (evaluate(t, &f, &ctx), evaluate_naive(t, &f, &ctx)) {
            (Ok(a), Ok(b)) if a == b => Ok(()),
            (Ok(a), Ok(b)) => Err(format!(
                "bottom-up gives {} tuples, naive gives {}",
                a.len(),
                b.len()
            )),
            (Err(a), Err(b)) if a == b => Ok(()),
            (a, b) => Err(format!("bottom-up {:?}, naive {:?}", a.err(), b.err())),
        }
    });
    Ok(())
}
