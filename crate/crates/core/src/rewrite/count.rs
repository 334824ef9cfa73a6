//! Exact counts of a disjunction as boolean combinations of `∃^{≥r}` literals,
//! by induction on the number of disjuncts with inclusion–exclusion.

use super::cert::{conjoin_shared, count_at_least, CertifiedFormula};
use super::star::{Literal, MAStarForm};
use super::RewriteError;

fn outer_ctx(parts: &[CertifiedFormula], x: &str) -> Result<Vec<String>, RewriteError> {
    if parts.is_empty() {
        return Err(RewriteError::EmptyParts);
    }
    let mut ctx: Vec<String> = Vec::new();
    for p in parts {
        if !p.ctx().iter().any(|v| v == x) {
            return Err(RewriteError::SharedVarMissing {
                var: x.into(),
                formula: p.formula().to_string(),
            });
        }
        for v in p.ctx() {
            if v != x && !ctx.contains(v) {
                ctx.push(v.clone());
            }
        }
    }
    Ok(ctx)
}

/// `∃^{=s} x ⋁ parts` for every `s ≤ max`.
#[allow(clippy::needless_range_loop)]
fn exact_upto(
    parts: &[CertifiedFormula],
    x: &str,
    max: usize,
) -> Result<Vec<MAStarForm>, RewriteError> {
    let xs = [x.to_string()];
    let ctx = outer_ctx(parts, x)?;
    if let [phi] = parts {
        let theta = (1..=max + 1)
            .map(|r| count_at_least(phi, &xs, r).map(Literal::pos))
            .collect::<Result<Vec<_>, _>>()?;
        // exactly s: at least s and not at least s+1
        return Ok((0..=max)
            .map(|s| {
                let mut lits = vec![theta[s].negated()];
                if s > 0 {
                    lits.insert(0, theta[s - 1].clone());
                }
                MAStarForm::conjunction(ctx.clone(), lits)
            })
            .collect());
    }
    let (last, init) = parts.split_last().unwrap();
    let psi = exact_upto(init, x, max)?;
    let phi = exact_upto(std::slice::from_ref(last), x, max)?;
    let deltas = init
        .iter()
        .map(|p| conjoin_shared(&[p.clone(), last.clone()], x))
        .collect::<Result<Vec<_>, _>>()?;
    let delta = exact_upto(&deltas, x, max)?;
    let mut out = Vec::with_capacity(max + 1);
    for s in 0..=max {
        let mut form = MAStarForm::falsum(ctx.clone());
        for a in 0..=s {
            for b in 0..=s {
                // |ψ ∨ φ| = |ψ| + |φ| − |ψ ∧ φ|, and the overlap is at most min(a, b)
                let Some(c) = (a + b).checked_sub(s) else {
                    continue;
                };
                if c > a.min(b) {
                    continue;
                }
                form = form.or(psi[a].clone().and(phi[b].clone()).and(delta[c].clone()));
            }
        }
        out.push(form.with_ctx(ctx.clone()));
    }
    Ok(out)
}

/// `∃^{=r} x ⋁_i parts[i]` as a normal form over certified literals. Every
/// part must have `x` in its context.
pub fn exact_count_dnf(
    parts: &[CertifiedFormula],
    x: &str,
    r: usize,
) -> Result<MAStarForm, RewriteError> {
    Ok(exact_upto(parts, x, r)?.pop().unwrap())
}

/// `∃^{≤r} x ⋁ parts` as `⋁_{s ≤ r} ∃^{=s}`.
pub fn at_most_count_dnf(
    parts: &[CertifiedFormula],
    x: &str,
    r: usize,
) -> Result<MAStarForm, RewriteError> {
    let ctx = outer_ctx(parts, x)?;
    Ok(exact_upto(parts, x, r)?
        .into_iter()
        .fold(MAStarForm::falsum(ctx.clone()), MAStarForm::or)
        .with_ctx(ctx))
}

/// `∃^{≥t} x ⋁ parts` for every `t ≤ max`, without negating a normal form:
/// `|ψ ∨ φ| ≥ t` iff `|φ| ≥ t`, or `|φ| = b < t`, `|ψ ∧ φ| = c` and `|ψ| ≥ t − b + c`.
fn at_least_upto(
    parts: &[CertifiedFormula],
    x: &str,
    max: usize,
) -> Result<Vec<MAStarForm>, RewriteError> {
    let xs = [x.to_string()];
    let ctx = outer_ctx(parts, x)?;
    if let [phi] = parts {
        return (0..=max)
            .map(|t| match t {
                0 => Ok(MAStarForm::verum(ctx.clone())),
                t => Ok(
                    MAStarForm::literal(Literal::pos(count_at_least(phi, &xs, t)?))
                        .with_ctx(ctx.clone()),
                ),
            })
            .collect();
    }
    let (last, init) = parts.split_last().unwrap();
    let psi = at_least_upto(init, x, max)?;
    let phi_exact = exact_upto(std::slice::from_ref(last), x, max)?;
    let phi_at_least = at_least_upto(std::slice::from_ref(last), x, max)?;
    let deltas = init
        .iter()
        .map(|p| conjoin_shared(&[p.clone(), last.clone()], x))
        .collect::<Result<Vec<_>, _>>()?;
    let delta = exact_upto(&deltas, x, max)?;
    let mut out = Vec::with_capacity(max + 1);
    for t in 0..=max {
        let mut form = phi_at_least[t].clone();
        for b in 0..t {
            for c in 0..=b {
                form = form.or(phi_exact[b]
                    .clone()
                    .and(delta[c].clone())
                    .and(psi[t - b + c].clone()));
            }
        }
        out.push(form.with_ctx(ctx.clone()));
    }
    Ok(out)
}

/// `∃^{≥r} x ⋁ parts` as a normal form over certified literals.
pub fn at_least_count_dnf(
    parts: &[CertifiedFormula],
    x: &str,
    r: usize,
) -> Result<MAStarForm, RewriteError> {
    Ok(at_least_upto(parts, x, r)?.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{evaluate, parse_formula, Cmp, Formula};
    use crate::structure::{parse_structure, Structure};

    fn cert(text: &str, k: usize) -> CertifiedFormula {
        let (f, ctx) = parse_formula(text).unwrap();
        CertifiedFormula::asserted(f, ctx, k).unwrap()
    }

    fn direct(
        s: &Structure,
        parts: &[CertifiedFormula],
        cmp: Cmp,
        r: usize,
        ctx: &[String],
    ) -> crate::Relation {
        let body = Formula::or(parts.iter().map(|p| p.formula().clone()).collect());
        evaluate(s, &Formula::count(cmp, r, vec!["x".into()], body), ctx).unwrap()
    }

    fn fixture() -> Structure {
        parse_structure(
            "universe a b c d\nrel R 2\na b\nb c\nc a\nd d\nrel S 2\na c\nb a\nc b\nd a\nrel T 2\na a\nb b\nc a\n",
        )
        .unwrap()
    }

    #[test]
    fn single_part_is_a_boolean_combination() {
        let r = cert("R(x, y)", 1);
        let f = exact_count_dnf(std::slice::from_ref(&r), "x", 1).unwrap();
        let texts: Vec<String> = f.literals().map(|l| l.cert.formula().to_string()).collect();
        assert_eq!(texts, ["E>=1 x. R(x, y)", "E>=2 x. R(x, y)"]);
        let s = fixture();
        assert_eq!(
            f.evaluate(&s).unwrap(),
            direct(&s, &[r], Cmp::Exactly, 1, &f.ctx)
        );
    }

    #[test]
    fn inclusion_exclusion_matches_direct_count() {
        let s = fixture();
        let parts = [cert("R(x, y)", 1), cert("S(x, z)", 2), cert("T(x, y)", 2)];
        for k in 1..=3 {
            for r in 0..=3 {
                let p = &parts[..k];
                let e = exact_count_dnf(p, "x", r).unwrap();
                assert_eq!(
                    e.evaluate(&s).unwrap(),
                    direct(&s, p, Cmp::Exactly, r, &e.ctx),
                    "k={k} r={r}"
                );
                let m = at_most_count_dnf(p, "x", r).unwrap();
                assert_eq!(
                    m.evaluate(&s).unwrap(),
                    direct(&s, p, Cmp::AtMost, r, &m.ctx)
                );
                let l = at_least_count_dnf(p, "x", r).unwrap();
                assert_eq!(
                    l.evaluate(&s).unwrap(),
                    direct(&s, p, Cmp::AtLeast, r, &l.ctx)
                );
            }
        }
    }

    #[test]
    fn zero_count_is_emptiness() {
        let s = fixture();
        let parts = [cert("R(x, y)", 1), cert("S(x, y)", 1)];
        let e = exact_count_dnf(&parts, "x", 0).unwrap();
        let (none, _) = parse_formula("!E x. R(x, y) | S(x, y)").unwrap();
        assert_eq!(
            e.evaluate(&s).unwrap(),
            evaluate(&s, &none, &e.ctx).unwrap()
        );
    }

    #[test]
    fn more_than_the_universe_is_empty() {
        let s = fixture();
        let parts = [cert("R(x, y)", 1), cert("S(x, y)", 1)];
        assert!(exact_count_dnf(&parts, "x", 5)
            .unwrap()
            .evaluate(&s)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn parts_must_share_x() {
        assert!(matches!(
            exact_count_dnf(&[cert("R(x, y)", 1), cert("S(z, y)", 1)], "x", 1),
            Err(RewriteError::SharedVarMissing { .. })
        ));
    }
}
