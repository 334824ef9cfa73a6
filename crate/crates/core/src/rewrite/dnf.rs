//! Boolean skeletons over certified leaves and their disjunctive normal form.

use std::collections::BTreeMap;

use super::cert::{AxiomSource, CertifiedFormula};
use super::star::{Literal, MAStarForm};
use super::RewriteError;
use crate::formula::{formula_ma_profile, Formula};
use crate::structure::Structure;

/// Supplies certificates for the leaves of a boolean skeleton.
pub trait Certifier {
    /// A certificate for `f` over `ctx`, or `None` if this certifier has no claim.
    fn certify(&self, f: &Formula, ctx: &[String]) -> Option<CertifiedFormula>;
}

/// Certifies what holds everywhere: one-variable formulas and `u = v`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Derivable;

impl Certifier for Derivable {
    fn certify(&self, f: &Formula, ctx: &[String]) -> Option<CertifiedFormula> {
        CertifiedFormula::derivable(f.clone(), ctx.to_vec()).ok()
    }
}

/// User-asserted bounds, per relation symbol or per exact formula.
///
/// A bound for relation `R` covers every atom `R(t̄)`: permuting, repeating or
/// fixing arguments never enlarges a fiber.
#[derive(Clone, Debug, Default)]
pub struct Asserted {
    pub relations: BTreeMap<String, usize>,
    pub formulas: Vec<(Formula, usize)>,
}

impl Asserted {
    pub fn relations<S: Into<String>>(bounds: impl IntoIterator<Item = (S, usize)>) -> Self {
        Asserted {
            relations: bounds.into_iter().map(|(r, k)| (r.into(), k)).collect(),
            formulas: Vec::new(),
        }
    }
}

impl Certifier for Asserted {
    fn certify(&self, f: &Formula, ctx: &[String]) -> Option<CertifiedFormula> {
        let k = match f {
            Formula::Atom { relation, .. } => self.relations.get(relation).copied(),
            _ => None,
        }
        .or_else(|| self.formulas.iter().find(|(g, _)| g == f).map(|&(_, k)| k))?;
        CertifiedFormula::axiom(f.clone(), ctx.to_vec(), k, AxiomSource::Asserted).ok()
    }
}

/// Measures atoms on a designated structure.
#[derive(Clone, Copy, Debug)]
pub struct Measured<'a>(pub &'a Structure);

impl Certifier for Measured<'_> {
    fn certify(&self, f: &Formula, ctx: &[String]) -> Option<CertifiedFormula> {
        if !matches!(f, Formula::Atom { .. }) {
            return None;
        }
        let k = formula_ma_profile(self.0, f, ctx).ok()?.uniform_k;
        CertifiedFormula::axiom(f.clone(), ctx.to_vec(), k, AxiomSource::Measured).ok()
    }
}

/// Tries each certifier in order.
impl Certifier for [&dyn Certifier] {
    fn certify(&self, f: &Formula, ctx: &[String]) -> Option<CertifiedFormula> {
        self.iter().find_map(|c| c.certify(f, ctx))
    }
}

impl Certifier for Vec<&dyn Certifier> {
    fn certify(&self, f: &Formula, ctx: &[String]) -> Option<CertifiedFormula> {
        self.as_slice().certify(f, ctx)
    }
}

impl<const N: usize> Certifier for [&dyn Certifier; N] {
    fn certify(&self, f: &Formula, ctx: &[String]) -> Option<CertifiedFormula> {
        self.as_slice().certify(f, ctx)
    }
}

/// Boolean combination of certified literals.
#[derive(Clone, Debug, PartialEq)]
pub enum Skeleton {
    Const(bool),
    Lit(CertifiedFormula),
    Not(Box<Skeleton>),
    And(Vec<Skeleton>),
    Or(Vec<Skeleton>),
}

impl Skeleton {
    /// Splits `f` at its boolean connectives and certifies each leaf. `t = t`
    /// becomes `true`.
    pub fn from_formula(f: &Formula, certifier: &dyn Certifier) -> Result<Skeleton, RewriteError> {
        Ok(match f {
            Formula::True => Skeleton::Const(true),
            Formula::False => Skeleton::Const(false),
            Formula::Eq(a, b) if a == b => Skeleton::Const(true),
            Formula::Not(g) => Skeleton::Not(Box::new(Skeleton::from_formula(g, certifier)?)),
            Formula::And(gs) => Skeleton::And(
                gs.iter()
                    .map(|g| Skeleton::from_formula(g, certifier))
                    .collect::<Result<_, _>>()?,
            ),
            Formula::Or(gs) => Skeleton::Or(
                gs.iter()
                    .map(|g| Skeleton::from_formula(g, certifier))
                    .collect::<Result<_, _>>()?,
            ),
            leaf => Skeleton::Lit(certify_leaf(leaf, certifier)?),
        })
    }

    pub fn from_form(form: &MAStarForm) -> Skeleton {
        Skeleton::Or(
            form.disjuncts
                .iter()
                .map(|d| {
                    Skeleton::And(
                        d.iter()
                            .map(|l| {
                                let lit = Skeleton::Lit(l.cert.clone());
                                if l.positive {
                                    lit
                                } else {
                                    Skeleton::Not(Box::new(lit))
                                }
                            })
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    fn dnf(&self, positive: bool, ctx: &[String]) -> MAStarForm {
        match (self, positive) {
            (Skeleton::Const(b), _) => {
                if *b == positive {
                    MAStarForm::verum(ctx.to_vec())
                } else {
                    MAStarForm::falsum(ctx.to_vec())
                }
            }
            (Skeleton::Lit(c), _) => MAStarForm::conjunction(
                ctx.to_vec(),
                vec![Literal {
                    positive,
                    cert: c.clone(),
                }],
            ),
            (Skeleton::Not(g), _) => g.dnf(!positive, ctx),
            (Skeleton::And(gs), true) | (Skeleton::Or(gs), false) => {
                gs.iter().fold(MAStarForm::verum(ctx.to_vec()), |acc, g| {
                    acc.and(g.dnf(positive, ctx))
                })
            }
            (Skeleton::Or(gs), true) | (Skeleton::And(gs), false) => {
                gs.iter().fold(MAStarForm::falsum(ctx.to_vec()), |acc, g| {
                    acc.or(g.dnf(positive, ctx))
                })
            }
        }
    }

    /// Negation normal form pushed through distribution.
    pub fn to_dnf(&self, ctx: &[String]) -> MAStarForm {
        self.dnf(true, ctx)
    }
}

pub(crate) fn certify_leaf(
    leaf: &Formula,
    certifier: &dyn Certifier,
) -> Result<CertifiedFormula, RewriteError> {
    let ctx = leaf.free_vars();
    if let Some(c) = certifier.certify(leaf, &ctx) {
        return Ok(c);
    }
    if let Some(c) = Derivable.certify(leaf, &ctx) {
        return Ok(c);
    }
    match leaf {
        Formula::Exists { .. } | Formula::Forall { .. } | Formula::Count { .. } => {
            Err(RewriteError::QuantifierNotCertified(leaf.to_string()))
        }
        _ => Err(RewriteError::UncertifiedLiteral(leaf.to_string())),
    }
}

/// Disjunctive normal form of `f` over `ctx`, with every leaf certified.
pub fn to_dnf(
    f: &Formula,
    ctx: &[String],
    certifier: &dyn Certifier,
) -> Result<MAStarForm, RewriteError> {
    if let Some(v) = f.free_vars().into_iter().find(|v| !ctx.contains(v)) {
        return Err(RewriteError::FreeVarOutsideCtx(v));
    }
    Ok(Skeleton::from_formula(f, certifier)?.to_dnf(ctx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{evaluate, parse_formula};
    use crate::structure::parse_structure;

    fn shape(form: &MAStarForm) -> Vec<Vec<String>> {
        form.disjuncts
            .iter()
            .map(|d| {
                d.iter()
                    .map(|l| format!("{}{}", if l.positive { "" } else { "!" }, l.cert.formula()))
                    .collect()
            })
            .collect()
    }

    fn all_k1() -> Asserted {
        Asserted::relations([("A", 1), ("B", 1), ("C", 1)])
    }

    #[test]
    fn distribution() {
        let (f, ctx) = parse_formula("(A(x, y) | B(x, y)) & C(x, y)").unwrap();
        let d = to_dnf(&f, &ctx, &all_k1()).unwrap();
        assert_eq!(shape(&d), [["A(x, y)", "C(x, y)"], ["B(x, y)", "C(x, y)"]]);
    }

    #[test]
    fn de_morgan() {
        let (f, ctx) = parse_formula("!(A(x, y) & B(x, y))").unwrap();
        let d = to_dnf(&f, &ctx, &all_k1()).unwrap();
        assert_eq!(shape(&d), [["!A(x, y)"], ["!B(x, y)"]]);
    }

    #[test]
    fn reflexive_equality_is_true() {
        let (f, ctx) = parse_formula("x = x").unwrap();
        let d = to_dnf(&f, &ctx, &Derivable).unwrap();
        assert_eq!(d.disjuncts, vec![Vec::new()]);
    }

    #[test]
    fn quantifiers_need_certificates() {
        let (f, ctx) = parse_formula("E z. A(x, z) & B(z, y)").unwrap();
        assert!(matches!(
            to_dnf(&f, &ctx, &all_k1()),
            Err(RewriteError::QuantifierNotCertified(_))
        ));
        let (g, ctx) = parse_formula("D(x, y)").unwrap();
        assert!(matches!(
            to_dnf(&g, &ctx, &all_k1()),
            Err(RewriteError::UncertifiedLiteral(_))
        ));
        // one free variable: certified without help
        let (h, ctx) = parse_formula("E z. A(x, z)").unwrap();
        assert!(to_dnf(&h, &ctx, &all_k1()).is_ok());
    }

    #[test]
    fn measured_certifier() {
        let s = parse_structure("universe a b c\nrel A 2\na b\na c\n").unwrap();
        let (f, ctx) = parse_formula("A(x, y) | !A(y, x)").unwrap();
        let d = to_dnf(&f, &ctx, &Measured(&s)).unwrap();
        assert!(d.literals().all(|l| l.cert.bound().k == 2));
        assert_eq!(d.evaluate(&s).unwrap(), evaluate(&s, &f, &ctx).unwrap());
    }
}
