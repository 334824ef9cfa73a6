//! Certified formulas and the closure rules that derive new ones.
//!
//! A [`CertifiedFormula`] is a node of a derivation tree. Each node stores a
//! formula over a variable context with its claimed bound, plus the rule that
//! produced it from its premises. Every rule goes through [`derive`], so rebuilding a tree
//! from its leaves ([`CertifiedFormula::replay`]) runs exactly the code that
//! built it.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::RewriteError;
use crate::formula::{formula_ma_profile, is_valid_var, Cmp, Formula, Term};
use crate::ma::MaProfile;
use crate::structure::{is_valid_name, Structure};

/// Claimed uniform fiber bound. Formulas in at most one variable carry no
/// constraint and are marked `vacuous` (with `k = 0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bound {
    pub k: usize,
    pub vacuous: bool,
}

impl Bound {
    /// The bound `k` for a context of `width` variables.
    pub fn of(k: usize, width: usize) -> Bound {
        if width <= 1 {
            Bound {
                k: 0,
                vacuous: true,
            }
        } else {
            Bound { k, vacuous: false }
        }
    }

    /// Contribution to a product bound: vacuous bounds count as 1.
    pub fn factor(self) -> usize {
        if self.vacuous {
            1
        } else {
            self.k
        }
    }

    pub fn admits(self, profile: &MaProfile) -> bool {
        self.vacuous || profile.respects(self.k)
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.vacuous {
            f.write_str("vacuous")
        } else {
            write!(f, "K={}", self.k)
        }
    }
}

/// Where an axiom's bound comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomSource {
    /// Claimed by the user.
    Asserted,
    /// Measured on a designated structure.
    Measured,
    /// True in every structure: one free variable, or `u = v`.
    Derivable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    Axiom {
        source: AxiomSource,
    },
    /// Injective renaming of context variables.
    Rename {
        map: BTreeMap<String, String>,
    },
    /// Reordering of the context.
    Permute {
        order: Vec<String>,
    },
    /// `∃ vars φ`.
    Project {
        vars: Vec<String>,
    },
    /// `φ(…, @element, …)`.
    Substitute {
        var: String,
        element: String,
    },
    /// `φ ∧ with`, which entails `φ`.
    Strengthen {
        with: Formula,
    },
    /// Conjunction of premises sharing `shared`; bound is the product.
    ConjoinShared {
        shared: String,
    },
    /// `¬φ` for `φ` in at most one variable.
    NegateUnary,
    /// `∃x̄_0…x̄_{r-1}(⋀ φ(x̄_i, ȳ) ∧ ⋀ x̄_i ≠ x̄_j)`; bound `K^r`.
    CountExpand {
        vars: Vec<String>,
        r: usize,
    },
    /// `∃^{≥r} x̄ φ`, certified like its expansion.
    CountAtLeast {
        vars: Vec<String>,
        r: usize,
    },
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Axiom { .. } => "axiom",
            Rule::Rename { .. } => "rename",
            Rule::Permute { .. } => "permute",
            Rule::Project { .. } => "project",
            Rule::Substitute { .. } => "substitute",
            Rule::Strengthen { .. } => "strengthen",
            Rule::ConjoinShared { .. } => "conjoin_shared",
            Rule::NegateUnary => "negate_unary",
            Rule::CountExpand { .. } => "count_expand",
            Rule::CountAtLeast { .. } => "count_at_least",
        }
    }
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct Node {
    formula: Formula,
    ctx: Vec<String>,
    bound: Bound,
    #[serde(flatten)]
    rule: Rule,
    #[serde(default)]
    premises: Vec<CertifiedFormula>,
}

/// A formula over an explicit variable context with a claimed bound and the
/// derivation of that claim.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CertifiedFormula(Arc<Node>);

fn check_ctx(formula: &Formula, ctx: &[String]) -> Result<(), RewriteError> {
    let mut seen = HashSet::new();
    for v in ctx {
        if !is_valid_var(v) {
            return Err(RewriteError::InvalidRule(format!(
                "`{v}` is not a variable name"
            )));
        }
        if !seen.insert(v) {
            return Err(RewriteError::InvalidRule(format!(
                "variable `{v}` is listed twice"
            )));
        }
    }
    match formula.free_vars().into_iter().find(|v| !seen.contains(v)) {
        Some(v) => Err(RewriteError::FreeVarOutsideCtx(v)),
        None => Ok(()),
    }
}

fn bound_vars(f: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    f.visit(&mut |g| {
        if let Formula::Exists { vars, .. }
        | Formula::Forall { vars, .. }
        | Formula::Count { vars, .. } = g
        {
            out.extend(vars.iter().cloned());
        }
    });
    out
}

/// First name of the form `base`, `base_1`, `base_2`, … not in `taken`.
fn fresh(base: &str, taken: &mut BTreeSet<String>) -> String {
    let mut name = base.to_string();
    let mut i = 0;
    while taken.contains(&name) {
        i += 1;
        name = format!("{base}_{i}");
    }
    taken.insert(name.clone());
    name
}

fn single(rule: &Rule, premises: &[CertifiedFormula]) -> Result<CertifiedFormula, RewriteError> {
    match premises {
        [p] => Ok(p.clone()),
        _ => Err(RewriteError::InvalidRule(format!(
            "{} takes one premise, got {}",
            rule.name(),
            premises.len()
        ))),
    }
}

/// Splits `ctx` into the counted variables and the rest, validating `vars`.
fn split_counted(p: &CertifiedFormula, vars: &[String]) -> Result<Vec<String>, RewriteError> {
    if vars.is_empty() {
        return Err(RewriteError::EmptyCountVars);
    }
    let distinct: BTreeSet<&String> = vars.iter().collect();
    if distinct.len() != vars.len() {
        return Err(RewriteError::InvalidRule("counted variables repeat".into()));
    }
    if let Some(v) = vars.iter().find(|v| !p.ctx().contains(v)) {
        return Err(RewriteError::NotInCtx(v.clone()));
    }
    Ok(p.ctx()
        .iter()
        .filter(|v| !vars.contains(v))
        .cloned()
        .collect())
}

/// Bound of `∃^{≥r} x̄ φ` over the remaining variables `rest`.
fn count_bound(p: &CertifiedFormula, rest: &[String], r: usize) -> Result<Bound, RewriteError> {
    if r == 0 && rest.len() >= 2 {
        // always true: every fiber is the whole universe
        return Err(RewriteError::NotMutuallyAlgebraic(format!(
            "E>=0 over {} free variables",
            rest.len()
        )));
    }
    let k = p.bound().factor();
    let kr = k.checked_pow(r as u32).unwrap_or(usize::MAX);
    Ok(Bound::of(kr, rest.len()))
}

/// What a non-axiom rule produces: the new formula over its context, with a bound.
fn derive(
    rule: &Rule,
    premises: &[CertifiedFormula],
) -> Result<(Formula, Vec<String>, Bound), RewriteError> {
    match rule {
        Rule::Axiom { .. } => Err(RewriteError::InvalidRule(
            "axioms have no premises to derive from".into(),
        )),
        Rule::Rename { map } => {
            let p = single(rule, premises)?;
            if let Some(v) = map.keys().find(|v| !p.ctx().contains(v)) {
                return Err(RewriteError::NotInCtx(v.clone()));
            }
            let ctx: Vec<String> = p
                .ctx()
                .iter()
                .map(|v| map.get(v).unwrap_or(v).clone())
                .collect();
            let bound_inside = bound_vars(p.formula());
            if let Some(v) = map
                .values()
                .find(|v| bound_inside.contains(*v) || !is_valid_var(v))
            {
                return Err(RewriteError::InvalidRule(format!("cannot rename to `{v}`")));
            }
            let formula = p
                .formula()
                .rename_free(&map.iter().map(|(a, b)| (a.clone(), b.clone())).collect());
            check_ctx(&formula, &ctx)?;
            Ok((formula, ctx, p.bound()))
        }
        Rule::Permute { order } => {
            let p = single(rule, premises)?;
            let mut a = order.clone();
            let mut b = p.ctx().to_vec();
            a.sort();
            b.sort();
            if a != b {
                return Err(RewriteError::InvalidRule(
                    "permute needs a reordering of the context".into(),
                ));
            }
            Ok((p.formula().clone(), order.clone(), p.bound()))
        }
        Rule::Project { vars } => {
            let p = single(rule, premises)?;
            let rest = split_counted(&p, vars)?;
            let bound = Bound::of(p.bound().factor(), rest.len());
            Ok((
                Formula::exists(vars.clone(), p.formula().clone()),
                rest,
                bound,
            ))
        }
        Rule::Substitute { var, element } => {
            let p = single(rule, premises)?;
            if !is_valid_name(element) {
                return Err(RewriteError::InvalidRule(format!(
                    "`{element}` is not an element name"
                )));
            }
            let rest = split_counted(&p, std::slice::from_ref(var))?;
            let bound = Bound::of(p.bound().factor(), rest.len());
            Ok((p.formula().substitute(var, element), rest, bound))
        }
        Rule::Strengthen { with } => {
            let p = single(rule, premises)?;
            check_ctx(with, p.ctx())?;
            let formula = Formula::And(vec![p.formula().clone(), with.clone()]);
            Ok((formula, p.ctx().to_vec(), p.bound()))
        }
        Rule::ConjoinShared { shared } => {
            if premises.is_empty() {
                return Err(RewriteError::EmptyParts);
            }
            if let Some(p) = premises.iter().find(|p| !p.ctx().contains(shared)) {
                return Err(RewriteError::SharedVarMissing {
                    var: shared.clone(),
                    formula: p.formula().to_string(),
                });
            }
            if let [p] = premises {
                return Ok((p.formula().clone(), p.ctx().to_vec(), p.bound()));
            }
            let mut ctx: Vec<String> = Vec::new();
            for v in premises.iter().flat_map(|p| p.ctx()) {
                if !ctx.contains(v) {
                    ctx.push(v.clone());
                }
            }
            let k = premises
                .iter()
                .fold(1usize, |acc, p| acc.saturating_mul(p.bound().factor()));
            let formula = Formula::And(premises.iter().map(|p| p.formula().clone()).collect());
            let bound = Bound::of(k, ctx.len());
            Ok((formula, ctx, bound))
        }
        Rule::NegateUnary => {
            let p = single(rule, premises)?;
            if p.ctx().len() > 1 {
                return Err(RewriteError::NotUnary(p.formula().to_string()));
            }
            Ok((
                Formula::not(p.formula().clone()),
                p.ctx().to_vec(),
                Bound::of(0, p.ctx().len()),
            ))
        }
        Rule::CountExpand { vars, r } => {
            let p = single(rule, premises)?;
            let rest = split_counted(&p, vars)?;
            let bound = count_bound(&p, &rest, *r)?;
            let formula = match *r {
                0 => Formula::True,
                1 => Formula::exists(vars.clone(), p.formula().clone()),
                r => {
                    let mut taken: BTreeSet<String> = p.formula().all_vars();
                    taken.extend(p.ctx().iter().cloned());
                    let copies: Vec<Vec<String>> = (0..r)
                        .map(|i| {
                            vars.iter()
                                .map(|v| fresh(&format!("{v}{i}"), &mut taken))
                                .collect()
                        })
                        .collect();
                    let mut parts: Vec<Formula> = copies
                        .iter()
                        .map(|copy| {
                            let map = vars.iter().cloned().zip(copy.iter().cloned()).collect();
                            p.formula().rename_free(&map)
                        })
                        .collect();
                    for i in 0..r {
                        for j in i + 1..r {
                            parts.push(Formula::tuples_differ(&copies[i], &copies[j]));
                        }
                    }
                    Formula::exists(copies.concat(), Formula::And(parts))
                }
            };
            Ok((formula, rest, bound))
        }
        Rule::CountAtLeast { vars, r } => {
            let p = single(rule, premises)?;
            let rest = split_counted(&p, vars)?;
            let bound = count_bound(&p, &rest, *r)?;
            Ok((
                Formula::count(Cmp::AtLeast, *r, vars.clone(), p.formula().clone()),
                rest,
                bound,
            ))
        }
    }
}

impl CertifiedFormula {
    fn apply(rule: Rule, premises: Vec<CertifiedFormula>) -> Result<Self, RewriteError> {
        let (formula, ctx, bound) = derive(&rule, &premises)?;
        Ok(CertifiedFormula(Arc::new(Node {
            formula,
            ctx,
            bound,
            rule,
            premises,
        })))
    }

    /// A leaf claiming bound `k` for `formula` over `ctx`.
    pub fn axiom(
        formula: Formula,
        ctx: Vec<String>,
        k: usize,
        source: AxiomSource,
    ) -> Result<Self, RewriteError> {
        check_ctx(&formula, &ctx)?;
        let bound = Bound::of(k, ctx.len());
        Ok(CertifiedFormula(Arc::new(Node {
            formula,
            ctx,
            bound,
            rule: Rule::Axiom { source },
            premises: Vec::new(),
        })))
    }

    pub fn asserted(formula: Formula, ctx: Vec<String>, k: usize) -> Result<Self, RewriteError> {
        Self::axiom(formula, ctx, k, AxiomSource::Asserted)
    }

    /// A leaf whose bound is the uniform K of `formula` on `s`.
    pub fn measured(
        s: &Structure,
        formula: Formula,
        ctx: Vec<String>,
    ) -> Result<Self, RewriteError> {
        let profile = formula_ma_profile(s, &formula, &ctx)?;
        Self::axiom(formula, ctx, profile.uniform_k, AxiomSource::Measured)
    }

    /// Leaves that hold in every structure: one-variable formulas and `u = v`.
    pub fn derivable(formula: Formula, ctx: Vec<String>) -> Result<Self, RewriteError> {
        check_ctx(&formula, &ctx)?;
        if ctx.len() <= 1 {
            return Self::axiom(formula, ctx, 0, AxiomSource::Derivable);
        }
        if let Formula::Eq(Term::Var(u), Term::Var(v)) = &formula {
            if u != v && ctx.len() == 2 {
                return Self::axiom(formula, ctx, 1, AxiomSource::Derivable);
            }
        }
        Err(RewriteError::NotDerivable(formula.to_string()))
    }

    pub fn formula(&self) -> &Formula {
        &self.0.formula
    }

    pub fn ctx(&self) -> &[String] {
        &self.0.ctx
    }

    pub fn bound(&self) -> Bound {
        self.0.bound
    }

    pub fn rule(&self) -> &Rule {
        &self.0.rule
    }

    pub fn premises(&self) -> &[CertifiedFormula] {
        &self.0.premises
    }

    pub fn is_axiom(&self) -> bool {
        matches!(self.0.rule, Rule::Axiom { .. })
    }

    /// All nodes of the derivation, premises before conclusions, shared
    /// subtrees listed once.
    pub fn nodes(&self) -> Vec<CertifiedFormula> {
        fn go(
            c: &CertifiedFormula,
            seen: &mut HashSet<*const Node>,
            out: &mut Vec<CertifiedFormula>,
        ) {
            if !seen.insert(Arc::as_ptr(&c.0)) {
                return;
            }
            for p in c.premises() {
                go(p, seen, out);
            }
            out.push(c.clone());
        }
        let mut out = Vec::new();
        go(self, &mut HashSet::new(), &mut out);
        out
    }

    pub fn axioms(&self) -> Vec<CertifiedFormula> {
        self.nodes().into_iter().filter(|c| c.is_axiom()).collect()
    }

    /// Rebuilds the derivation from its axioms by re-running every rule, and
    /// fails unless the result matches `self` exactly.
    pub fn replay(&self) -> Result<CertifiedFormula, RewriteError> {
        let rebuilt = match &self.0.rule {
            Rule::Axiom { source } => Self::axiom(
                self.formula().clone(),
                self.ctx().to_vec(),
                self.bound().k,
                *source,
            )?,
            rule => {
                let premises = self
                    .premises()
                    .iter()
                    .map(|p| p.replay())
                    .collect::<Result<Vec<_>, _>>()?;
                Self::apply(rule.clone(), premises)?
            }
        };
        if &rebuilt != self {
            return Err(RewriteError::ReplayMismatch {
                rule: self.rule().name().into(),
                expected: format!(
                    "{} over {:?} with {}",
                    self.formula(),
                    self.ctx(),
                    self.bound()
                ),
                found: format!(
                    "{} over {:?} with {}",
                    rebuilt.formula(),
                    rebuilt.ctx(),
                    rebuilt.bound()
                ),
            });
        }
        Ok(rebuilt)
    }

    /// Measured profile of the formula on `s`.
    pub fn profile(&self, s: &Structure) -> Result<MaProfile, RewriteError> {
        Ok(formula_ma_profile(s, self.formula(), self.ctx())?)
    }

    /// Whether the claimed bound holds on `s`.
    pub fn holds_on(&self, s: &Structure) -> Result<bool, RewriteError> {
        Ok(self.bound().admits(&self.profile(s)?))
    }
}

impl fmt::Display for CertifiedFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.bound(), self.formula())
    }
}

pub fn rename(
    p: &CertifiedFormula,
    map: BTreeMap<String, String>,
) -> Result<CertifiedFormula, RewriteError> {
    CertifiedFormula::apply(Rule::Rename { map }, vec![p.clone()])
}

pub fn permute(p: &CertifiedFormula, order: Vec<String>) -> Result<CertifiedFormula, RewriteError> {
    CertifiedFormula::apply(Rule::Permute { order }, vec![p.clone()])
}

pub fn project(p: &CertifiedFormula, vars: Vec<String>) -> Result<CertifiedFormula, RewriteError> {
    CertifiedFormula::apply(Rule::Project { vars }, vec![p.clone()])
}

pub fn substitute(
    p: &CertifiedFormula,
    var: &str,
    element: &str,
) -> Result<CertifiedFormula, RewriteError> {
    let rule = Rule::Substitute {
        var: var.into(),
        element: element.into(),
    };
    CertifiedFormula::apply(rule, vec![p.clone()])
}

pub fn strengthen(p: &CertifiedFormula, with: Formula) -> Result<CertifiedFormula, RewriteError> {
    CertifiedFormula::apply(Rule::Strengthen { with }, vec![p.clone()])
}

/// Conjunction of parts that all have `x` in their context. The bound is the
/// product of the parts' bounds, vacuous parts counting as 1. One part is
/// returned unchanged.
pub fn conjoin_shared(
    parts: &[CertifiedFormula],
    x: &str,
) -> Result<CertifiedFormula, RewriteError> {
    if let [p] = parts {
        if p.ctx().iter().any(|v| v == x) {
            return Ok(p.clone());
        }
    }
    CertifiedFormula::apply(Rule::ConjoinShared { shared: x.into() }, parts.to_vec())
}

pub fn negate_unary(p: &CertifiedFormula) -> Result<CertifiedFormula, RewriteError> {
    CertifiedFormula::apply(Rule::NegateUnary, vec![p.clone()])
}

/// The displayed expansion of `∃^{≥r} x̄ φ` with `r` fresh copies of `x̄`.
pub fn count_expand(
    p: &CertifiedFormula,
    vars: &[String],
    r: usize,
) -> Result<CertifiedFormula, RewriteError> {
    CertifiedFormula::apply(
        Rule::CountExpand {
            vars: vars.to_vec(),
            r,
        },
        vec![p.clone()],
    )
}

/// `∃^{≥r} x̄ φ` written with the counting quantifier.
pub fn count_at_least(
    p: &CertifiedFormula,
    vars: &[String],
    r: usize,
) -> Result<CertifiedFormula, RewriteError> {
    CertifiedFormula::apply(
        Rule::CountAtLeast {
            vars: vars.to_vec(),
            r,
        },
        vec![p.clone()],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{evaluate, parse_formula};
    use crate::structure::parse_structure;

    fn v(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn atom(text: &str, k: usize) -> CertifiedFormula {
        let (f, ctx) = parse_formula(text).unwrap();
        CertifiedFormula::asserted(f, ctx, k).unwrap()
    }

    fn cycle() -> Structure {
        parse_structure("universe a b c\nrel R 2\na b\nb c\nc a\nrel S 2\na c\nb a\nc b\n").unwrap()
    }

    #[test]
    fn conjoin_bijections_stays_one() {
        let c = conjoin_shared(&[atom("R(x, y)", 1), atom("S(x, z)", 1)], "x").unwrap();
        assert_eq!(
            c.bound(),
            Bound {
                k: 1,
                vacuous: false
            }
        );
        assert_eq!(c.ctx(), v(&["x", "y", "z"]));
        assert!(c.holds_on(&cycle()).unwrap());
    }

    #[test]
    fn conjoin_products_and_identity() {
        let c = conjoin_shared(
            &[atom("R(x, y)", 2), atom("S(z, x)", 3), atom("P(x)", 0)],
            "x",
        )
        .unwrap();
        assert_eq!(c.bound().k, 6);
        let one = atom("R(x, y)", 2);
        assert_eq!(
            conjoin_shared(std::slice::from_ref(&one), "x").unwrap(),
            one
        );
        assert!(matches!(
            conjoin_shared(&[atom("R(x, y)", 1), atom("S(y, z)", 1)], "x"),
            Err(RewriteError::SharedVarMissing { .. })
        ));
    }

    #[test]
    fn count_expand_small_cases() {
        let r = atom("R(x, y)", 2);
        let zero = count_expand(&r, &v(&["x"]), 0).unwrap();
        assert_eq!(zero.formula(), &Formula::True);
        assert!(zero.bound().vacuous);
        let one = count_expand(&r, &v(&["x"]), 1).unwrap();
        assert_eq!(one.formula().to_string(), "E x. R(x, y)");
        let ternary = atom("T(x, y, z)", 2);
        assert!(matches!(
            count_expand(&ternary, &v(&["x"]), 0),
            Err(RewriteError::NotMutuallyAlgebraic(_))
        ));
        let two = count_expand(&ternary, &v(&["x"]), 2).unwrap();
        assert_eq!(two.bound().k, 4);
        assert_eq!(two.ctx(), v(&["y", "z"]));
        assert!(matches!(
            count_expand(&ternary, &[], 1),
            Err(RewriteError::EmptyCountVars)
        ));
    }

    #[test]
    fn expansion_agrees_with_counting_quantifier() {
        let s =
            parse_structure("universe a b c d\nrel E 2\na b\na c\nb c\nd a\nd b\nd c\n").unwrap();
        let e = atom("E(x, y)", 3);
        for r in 1..4 {
            let expanded = count_expand(&e, &v(&["x"]), r).unwrap();
            let compact = count_at_least(&e, &v(&["x"]), r).unwrap();
            assert_eq!(
                evaluate(&s, expanded.formula(), &v(&["y"])).unwrap(),
                evaluate(&s, compact.formula(), &v(&["y"])).unwrap()
            );
        }
    }

    #[test]
    fn copies_avoid_existing_names() {
        let (f, _) = parse_formula("E x0. R(x, y) & R(x0, y)").unwrap();
        let p = CertifiedFormula::asserted(f, v(&["x", "y"]), 2).unwrap();
        let e = count_expand(&p, &v(&["x"]), 2).unwrap();
        let text = e.formula().to_string();
        assert!(text.starts_with("E x0_1 x1."), "{text}");
    }

    #[test]
    fn closure_rules() {
        let r = atom("R(x, y)", 2);
        let p = permute(&r, v(&["y", "x"])).unwrap();
        assert_eq!(p.bound(), r.bound());
        let n = rename(&r, [("x".to_string(), "u".to_string())].into()).unwrap();
        assert_eq!(n.formula().to_string(), "R(u, y)");
        assert!(project(&r, v(&["y"])).unwrap().bound().vacuous);
        assert_eq!(
            substitute(&r, "x", "a").unwrap().formula().to_string(),
            "R(@a, y)"
        );
        let (w, _) = parse_formula("!x = y").unwrap();
        assert_eq!(strengthen(&r, w).unwrap().bound().k, 2);
        assert!(negate_unary(&r).is_err());
        let u = negate_unary(&atom("P(x)", 0)).unwrap();
        assert!(u.bound().vacuous);
    }

    #[test]
    fn derivable_leaves() {
        let (eq, ctx) = parse_formula("x = y").unwrap();
        assert_eq!(CertifiedFormula::derivable(eq, ctx).unwrap().bound().k, 1);
        let (r, ctx) = parse_formula("R(x, y)").unwrap();
        assert!(matches!(
            CertifiedFormula::derivable(r, ctx),
            Err(RewriteError::NotDerivable(_))
        ));
    }

    #[test]
    fn replay_survives_json() {
        let r = atom("R(x, y)", 2);
        let c = conjoin_shared(&[r.clone(), atom("S(x, z)", 1)], "x").unwrap();
        let e = count_expand(&c, &v(&["x"]), 2).unwrap();
        let top = count_at_least(&permute(&e, v(&["z", "y"])).unwrap(), &v(&["z"]), 1).unwrap();
        let json = serde_json::to_string(&top).unwrap();
        let back: CertifiedFormula = serde_json::from_str(&json).unwrap();
        assert_eq!(back, top);
        assert_eq!(back.replay().unwrap(), top);
        assert!(json.contains("\"rule\":\"count_at_least\""));
    }

    #[test]
    fn tampered_trace_is_rejected() {
        let c = conjoin_shared(&[atom("R(x, y)", 2), atom("S(x, z)", 3)], "x").unwrap();
        let json = serde_json::to_string(&c)
            .unwrap()
            .replace("\"k\":6", "\"k\":5");
        let bad: CertifiedFormula = serde_json::from_str(&json).unwrap();
        assert!(matches!(
            bad.replay(),
            Err(RewriteError::ReplayMismatch { .. })
        ));
    }
}
