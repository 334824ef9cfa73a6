//! Elimination of one existential quantifier from a certified normal form.

use super::cert::{conjoin_shared, count_at_least, negate_unary, substitute};
use super::count::{at_most_count_dnf, exact_count_dnf};
use super::dnf::{certify_leaf, Certifier, Skeleton};
use super::star::{Assumption, Branch, BranchRecord, Literal, MAStarForm};
use super::RewriteError;
use crate::formula::{evaluate, Formula};
use crate::structure::Structure;

/// `∃x input` as a normal form over the remaining variables.
///
/// Each disjunct `⋀β_i ∧ ⋀¬γ_j` is handled on its own. Literals without `x`
/// are kept. Negative one-variable literals `¬γ(x)` are moved to the positive
/// side first, so every remaining `γ_j` has a nonempty `ȳ_j`. Then:
///
/// * no positive literal: the negatives exclude at most `ΣK_j` values of `x`,
///   so the disjunct is true once the universe is larger; the threshold is raised
///   to `ΣK_j + 1`;
/// * positives merged into `β` and no negatives: `∃^{≥1} x β`;
/// * `β(x)` alone: decided on `reference`, recording the solutions it relied on;
/// * otherwise `⋁_{1≤r≤K} (∃^{=r}x β ∧ ∃^{<r}x ⋁_j (β ∧ γ_j))`.
pub fn eliminate_exists(
    input: &MAStarForm,
    x: &str,
    reference: Option<&Structure>,
) -> Result<MAStarForm, RewriteError> {
    if !input.ctx.iter().any(|v| v == x) {
        return Err(RewriteError::NotInCtx(x.into()));
    }
    let ctx: Vec<String> = input.ctx.iter().filter(|v| *v != x).cloned().collect();
    let mut out = MAStarForm {
        disjuncts: Vec::new(),
        ctx: ctx.clone(),
        ..input.clone()
    };
    for (i, d) in input.disjuncts.iter().enumerate() {
        let (part, record) = eliminate_disjunct(d, x, &ctx, reference)?;
        out = out.or(part);
        out.branches.push(BranchRecord {
            var: x.into(),
            disjunct: i,
            ..record
        });
    }
    Ok(out.with_ctx(ctx))
}

fn record(branch: Branch, reference_solutions: Option<usize>) -> BranchRecord {
    BranchRecord {
        var: String::new(),
        disjunct: 0,
        branch,
        reference_solutions,
    }
}

fn eliminate_disjunct(
    lits: &[Literal],
    x: &str,
    ctx: &[String],
    reference: Option<&Structure>,
) -> Result<(MAStarForm, BranchRecord), RewriteError> {
    let (inside, outside): (Vec<&Literal>, Vec<&Literal>) =
        lits.iter().partition(|l| l.mentions(x));
    let outside = MAStarForm::conjunction(ctx.to_vec(), outside.into_iter().cloned().collect());
    if inside.is_empty() {
        return Ok((outside, record(Branch::Untouched, None)));
    }
    let mut betas = Vec::new();
    let mut gammas = Vec::new();
    for l in inside {
        match (l.positive, l.cert.ctx().len()) {
            (true, _) => betas.push(l.cert.clone()),
            (false, 1) => betas.push(negate_unary(&l.cert)?),
            (false, _) => gammas.push(l.cert.clone()),
        }
    }
    let budget: usize = gammas
        .iter()
        .fold(0usize, |acc, g| acc.saturating_add(g.bound().k));
    if betas.is_empty() {
        let form = outside.with_threshold(budget.saturating_add(1));
        return Ok((form, record(Branch::Cofinite, None)));
    }
    let xs = [x.to_string()];
    let beta = conjoin_shared(&betas, x)?;
    if gammas.is_empty() {
        let theta = count_at_least(&beta, &xs, 1)?;
        return Ok((
            outside.and(MAStarForm::literal(Literal::pos(theta))),
            record(Branch::Positive, None),
        ));
    }
    if beta.ctx().len() == 1 {
        let s =
            reference.ok_or_else(|| RewriteError::NeedsReference(beta.formula().to_string()))?;
        let solutions: Vec<String> = evaluate(s, beta.formula(), &xs)?
            .iter()
            .map(|t| s.element_name(t[0]).to_string())
            .collect();
        let n = solutions.len();
        if n > budget {
            let min = budget.saturating_add(1);
            let mut form = outside.with_threshold(min);
            form.assumptions.push(Assumption::MinSolutions {
                formula: beta.formula().clone(),
                var: x.into(),
                min,
            });
            return Ok((form, record(Branch::NonAlgebraic, Some(n))));
        }
        let mut alternatives = MAStarForm::falsum(ctx.to_vec());
        for m in &solutions {
            let mut conj = vec![Literal::pos(substitute(&beta, x, m)?)];
            for g in &gammas {
                conj.push(Literal::neg(substitute(g, x, m)?));
            }
            alternatives = alternatives.or(MAStarForm::conjunction(ctx.to_vec(), conj));
        }
        alternatives.assumptions.push(Assumption::SolutionsWithin {
            formula: beta.formula().clone(),
            var: x.into(),
            elements: solutions,
        });
        return Ok((
            outside.and(alternatives),
            record(Branch::Algebraic, Some(n)),
        ));
    }
    let thetas = gammas
        .iter()
        .map(|g| conjoin_shared(&[beta.clone(), g.clone()], x))
        .collect::<Result<Vec<_>, _>>()?;
    let mut counted = MAStarForm::falsum(ctx.to_vec());
    for r in 1..=beta.bound().k {
        let exactly = exact_count_dnf(std::slice::from_ref(&beta), x, r)?;
        let fewer = at_most_count_dnf(&thetas, x, r - 1)?;
        counted = counted.or(exactly.and(fewer));
    }
    Ok((outside.and(counted), record(Branch::Counting, None)))
}

/// Rewrites `f` over `ctx` into a normal form, eliminating nested `∃` (and `∀`
/// as `¬∃¬`) from the inside out. Leaves that are not plain boolean structure
/// are certified by `certifier` first; quantifiers it cannot certify are
/// eliminated, other leaves are errors.
pub fn rewrite_formula(
    f: &Formula,
    ctx: &[String],
    certifier: &dyn Certifier,
    reference: Option<&Structure>,
) -> Result<MAStarForm, RewriteError> {
    if let Some(v) = f.free_vars().into_iter().find(|v| !ctx.contains(v)) {
        return Err(RewriteError::FreeVarOutsideCtx(v));
    }
    let mut meta = MAStarForm::verum(ctx.to_vec());
    let skeleton = build(f, certifier, reference, &mut meta)?;
    let form = skeleton.to_dnf(ctx);
    Ok(meta.and(form).with_ctx(ctx.to_vec()))
}

fn build(
    f: &Formula,
    certifier: &dyn Certifier,
    reference: Option<&Structure>,
    meta: &mut MAStarForm,
) -> Result<Skeleton, RewriteError> {
    let recurse = |g: &Formula, meta: &mut MAStarForm| build(g, certifier, reference, meta);
    Ok(match f {
        Formula::True => Skeleton::Const(true),
        Formula::False => Skeleton::Const(false),
        Formula::Eq(a, b) if a == b => Skeleton::Const(true),
        Formula::Not(g) => Skeleton::Not(Box::new(recurse(g, meta)?)),
        Formula::And(gs) => Skeleton::And(
            gs.iter()
                .map(|g| recurse(g, meta))
                .collect::<Result<_, _>>()?,
        ),
        Formula::Or(gs) => Skeleton::Or(
            gs.iter()
                .map(|g| recurse(g, meta))
                .collect::<Result<_, _>>()?,
        ),
        Formula::Exists { vars, body } | Formula::Forall { vars, body } => {
            if let Some(c) = certifier.certify(f, &f.free_vars()) {
                return Ok(Skeleton::Lit(c));
            }
            let universal = matches!(f, Formula::Forall { .. });
            let mut inner_ctx = f.free_vars();
            inner_ctx.extend(vars.iter().cloned());
            let body = if universal {
                Formula::not((**body).clone())
            } else {
                (**body).clone()
            };
            let mut form = rewrite_formula(&body, &inner_ctx, certifier, reference)?;
            for v in vars.iter().rev() {
                form = eliminate_exists(&form, v, reference)?;
            }
            // keep side conditions, use only the boolean shape here
            let mut side = form.clone();
            side.disjuncts = vec![Vec::new()];
            side.ctx = Vec::new();
            *meta = std::mem::replace(meta, MAStarForm::falsum(Vec::new())).and(side);
            let shape = Skeleton::from_form(&form);
            if universal {
                Skeleton::Not(Box::new(shape))
            } else {
                shape
            }
        }
        leaf => Skeleton::Lit(certify_leaf(leaf, certifier)?),
    })
}
