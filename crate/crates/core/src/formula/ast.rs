use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A variable or a named element of the structure (`@name` in the surface syntax).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Param(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn param(name: impl Into<String>) -> Self {
        Term::Param(name.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Param(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Param(p) => write!(f, "@{p}"),
        }
    }
}

/// Comparison of a counting quantifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cmp {
    AtLeast,
    AtMost,
    Exactly,
}

impl Cmp {
    pub fn holds(self, count: u64, threshold: u64) -> bool {
        match self {
            Cmp::AtLeast => count >= threshold,
            Cmp::AtMost => count <= threshold,
            Cmp::Exactly => count == threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::AtLeast => ">=",
            Cmp::AtMost => "<=",
            Cmp::Exactly => "=",
        }
    }
}

/// First-order formulas with counting quantifiers.
///
/// `Count { cmp, threshold, vars, body }` holds when the number of distinct
/// `vars`-tuples satisfying `body` compares to `threshold` by `cmp`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom {
        relation: String,
        args: Vec<Term>,
    },
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists {
        vars: Vec<String>,
        body: Box<Formula>,
    },
    Forall {
        vars: Vec<String>,
        body: Box<Formula>,
    },
    Count {
        cmp: Cmp,
        threshold: usize,
        vars: Vec<String>,
        body: Box<Formula>,
    },
}

impl Formula {
    pub fn atom<S: AsRef<str>>(relation: impl Into<String>, vars: &[S]) -> Self {
        Formula::Atom {
            relation: relation.into(),
            args: vars.iter().map(|v| Term::var(v.as_ref())).collect(),
        }
    }

    pub fn eq(a: Term, b: Term) -> Self {
        Formula::Eq(a, b)
    }

    /// Negation; double negations are kept as written.
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    /// Conjunction; the empty conjunction is `True` and singletons are unwrapped.
    pub fn and(mut parts: Vec<Formula>) -> Self {
        match parts.len() {
            0 => Formula::True,
            1 => parts.pop().unwrap(),
            _ => Formula::And(parts),
        }
    }

    /// Disjunction; the empty disjunction is `False` and singletons are unwrapped.
    pub fn or(mut parts: Vec<Formula>) -> Self {
        match parts.len() {
            0 => Formula::False,
            1 => parts.pop().unwrap(),
            _ => Formula::Or(parts),
        }
    }

    pub fn exists(vars: Vec<String>, body: Formula) -> Self {
        if vars.is_empty() {
            body
        } else {
            Formula::Exists {
                vars,
                body: Box::new(body),
            }
        }
    }

    pub fn forall(vars: Vec<String>, body: Formula) -> Self {
        if vars.is_empty() {
            body
        } else {
            Formula::Forall {
                vars,
                body: Box::new(body),
            }
        }
    }

    pub fn count(cmp: Cmp, threshold: usize, vars: Vec<String>, body: Formula) -> Self {
        Formula::Count {
            cmp,
            threshold,
            vars,
            body: Box::new(body),
        }
    }

    /// `¬(ū = v̄)`: the tuples differ in at least one coordinate.
    pub fn tuples_differ(a: &[String], b: &[String]) -> Self {
        assert_eq!(a.len(), b.len());
        Formula::or(
            a.iter()
                .zip(b)
                .map(|(u, v)| Formula::not(Formula::Eq(Term::var(u), Term::var(v))))
                .collect(),
        )
    }

    /// Free variables, in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut bound = Vec::new();
        self.collect_free(&mut bound, &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a str>, out: &mut Vec<String>) {
        let note = |t: &Term, bound: &Vec<&str>, out: &mut Vec<String>| {
            if let Term::Var(v) = t {
                if !bound.contains(&v.as_str()) && !out.contains(v) {
                    out.push(v.clone());
                }
            }
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom { args, .. } => args.iter().for_each(|t| note(t, bound, out)),
            Formula::Eq(a, b) => {
                note(a, bound, out);
                note(b, bound, out);
            }
            Formula::Not(g) => g.collect_free(bound, out),
            Formula::And(gs) | Formula::Or(gs) => {
                gs.iter().for_each(|g| g.collect_free(bound, out))
            }
            Formula::Exists { vars, body }
            | Formula::Forall { vars, body }
            | Formula::Count { vars, body, .. } => {
                let depth = bound.len();
                bound.extend(vars.iter().map(String::as_str));
                body.collect_free(bound, out);
                bound.truncate(depth);
            }
        }
    }

    /// Every variable name appearing anywhere, free or bound.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::Atom { args, .. } => {
                out.extend(args.iter().filter_map(|t| t.as_var().map(str::to_string)))
            }
            Formula::Eq(a, b) => out.extend(
                [a, b]
                    .into_iter()
                    .filter_map(|t| t.as_var().map(str::to_string)),
            ),
            Formula::Exists { vars, .. }
            | Formula::Forall { vars, .. }
            | Formula::Count { vars, .. } => out.extend(vars.iter().cloned()),
            _ => {}
        });
        out
    }

    /// Element names referenced with `@`.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut take = |t: &Term| {
            if let Term::Param(p) = t {
                out.insert(p.clone());
            }
        };
        self.visit(&mut |f| match f {
            Formula::Atom { args, .. } => args.iter().for_each(&mut take),
            Formula::Eq(a, b) => {
                take(a);
                take(b);
            }
            _ => {}
        });
        out
    }

    /// Relation names with the number of arguments they are applied to.
    pub fn relations(&self) -> BTreeSet<(String, usize)> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Atom { relation, args } = f {
                out.insert((relation.clone(), args.len()));
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        f(self);
        match self {
            Formula::Not(g) => g.visit(f),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.visit(f)),
            Formula::Exists { body, .. }
            | Formula::Forall { body, .. }
            | Formula::Count { body, .. } => body.visit(f),
            _ => {}
        }
    }

    /// Quantifier and connective nesting depth (atoms have depth 0).
    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom { .. } | Formula::Eq(..) => 0,
            Formula::Not(g) => 1 + g.depth(),
            Formula::And(gs) | Formula::Or(gs) => {
                1 + gs.iter().map(Formula::depth).max().unwrap_or(0)
            }
            Formula::Exists { body, .. }
            | Formula::Forall { body, .. }
            | Formula::Count { body, .. } => 1 + body.depth(),
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        let mut qf = true;
        self.visit(&mut |f| {
            if matches!(
                f,
                Formula::Exists { .. } | Formula::Forall { .. } | Formula::Count { .. }
            ) {
                qf = false;
            }
        });
        qf
    }

    /// Renames free occurrences of variables. New names must not be bound
    /// anywhere inside `self`; callers pick fresh names.
    pub fn rename_free(&self, map: &HashMap<String, String>) -> Formula {
        self.map_free_terms(&mut |v| map.get(v).map(|n| Term::Var(n.clone())))
    }

    /// Replaces free occurrences of `var` by the element `element`.
    pub fn substitute(&self, var: &str, element: &str) -> Formula {
        self.map_free_terms(&mut |v| (v == var).then(|| Term::param(element)))
    }

    fn map_free_terms(&self, replace: &mut impl FnMut(&str) -> Option<Term>) -> Formula {
        fn go(
            f: &Formula,
            bound: &mut Vec<String>,
            replace: &mut impl FnMut(&str) -> Option<Term>,
        ) -> Formula {
            let mut term = |t: &Term, bound: &Vec<String>| match t {
                Term::Var(v) if !bound.contains(v) => replace(v).unwrap_or_else(|| t.clone()),
                _ => t.clone(),
            };
            match f {
                Formula::True | Formula::False => f.clone(),
                Formula::Atom { relation, args } => Formula::Atom {
                    relation: relation.clone(),
                    args: args.iter().map(|t| term(t, bound)).collect(),
                },
                Formula::Eq(a, b) => Formula::Eq(term(a, bound), term(b, bound)),
                Formula::Not(g) => Formula::Not(Box::new(go(g, bound, replace))),
                Formula::And(gs) => {
                    Formula::And(gs.iter().map(|g| go(g, bound, replace)).collect())
                }
                Formula::Or(gs) => Formula::Or(gs.iter().map(|g| go(g, bound, replace)).collect()),
                Formula::Exists { vars, body } => {
                    let body = scoped(vars, body, bound, replace);
                    Formula::Exists {
                        vars: vars.clone(),
                        body: Box::new(body),
                    }
                }
                Formula::Forall { vars, body } => {
                    let body = scoped(vars, body, bound, replace);
                    Formula::Forall {
                        vars: vars.clone(),
                        body: Box::new(body),
                    }
                }
                Formula::Count {
                    cmp,
                    threshold,
                    vars,
                    body,
                } => {
                    let body = scoped(vars, body, bound, replace);
                    Formula::Count {
                        cmp: *cmp,
                        threshold: *threshold,
                        vars: vars.clone(),
                        body: Box::new(body),
                    }
                }
            }
        }
        fn scoped(
            vars: &[String],
            body: &Formula,
            bound: &mut Vec<String>,
            replace: &mut impl FnMut(&str) -> Option<Term>,
        ) -> Formula {
            let depth = bound.len();
            bound.extend(vars.iter().cloned());
            let out = go(body, bound, replace);
            bound.truncate(depth);
            out
        }
        go(self, &mut Vec::new(), replace)
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Exists { .. } | Formula::Forall { .. } | Formula::Count { .. } => 0,
            Formula::Or(_) => 1,
            Formula::And(_) => 2,
            _ => 3,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            f.write_str("(")?;
            self.write_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom { relation, args } => {
                write!(f, "{relation}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::Not(g) => {
                f.write_str("!")?;
                g.write_at(f, 3)
            }
            Formula::And(gs) => write_joined(f, gs, " & ", 3),
            Formula::Or(gs) => write_joined(f, gs, " | ", 2),
            Formula::Exists { vars, body } => {
                write!(f, "E {}. ", vars.join(" "))?;
                body.write_at(f, 0)
            }
            Formula::Forall { vars, body } => {
                write!(f, "A {}. ", vars.join(" "))?;
                body.write_at(f, 0)
            }
            Formula::Count {
                cmp,
                threshold,
                vars,
                body,
            } => {
                write!(f, "E{}{} {}. ", cmp.symbol(), threshold, vars.join(" "))?;
                body.write_at(f, 0)
            }
        }
    }
}

fn write_joined(f: &mut fmt::Formatter<'_>, gs: &[Formula], sep: &str, min: u8) -> fmt::Result {
    if gs.is_empty() {
        return f.write_str(if sep.contains('&') { "true" } else { "false" });
    }
    for (i, g) in gs.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        g.write_at(f, min)?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        super::parse_formula(&text)
            .map(|(f, _)| f)
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_vars_in_order() {
        let f = Formula::and(vec![
            Formula::atom("R", &["y", "x"]),
            Formula::exists(vec!["z".into()], Formula::atom("S", &["z", "w"])),
        ]);
        assert_eq!(f.free_vars(), ["y", "x", "w"]);
        assert_eq!(f.all_vars().len(), 4);
    }

    #[test]
    fn rename_respects_binders() {
        let f = Formula::and(vec![
            Formula::atom("R", &["x", "y"]),
            Formula::exists(vec!["x".into()], Formula::atom("S", &["x", "y"])),
        ]);
        let map = HashMap::from([("x".to_string(), "u".to_string())]);
        assert_eq!(f.rename_free(&map).to_string(), "R(u, y) & (E x. S(x, y))");
        assert_eq!(
            f.substitute("y", "a").to_string(),
            "R(x, @a) & (E x. S(x, @a))"
        );
    }

    #[test]
    fn smart_constructors() {
        assert_eq!(Formula::and(vec![]), Formula::True);
        assert_eq!(Formula::or(vec![]), Formula::False);
        let r = Formula::atom("R", &["x"]);
        assert_eq!(Formula::and(vec![r.clone()]), r);
        assert_eq!(Formula::exists(vec![], r.clone()), r);
    }

    #[test]
    fn display_parenthesizes() {
        let f = Formula::Or(vec![
            Formula::And(vec![Formula::atom("A", &["x"]), Formula::atom("B", &["x"])]),
            Formula::not(Formula::count(
                Cmp::AtLeast,
                2,
                vec!["y".into()],
                Formula::atom("R", &["x", "y"]),
            )),
        ]);
        assert_eq!(f.to_string(), "A(x) & B(x) | !(E>=2 y. R(x, y))");
    }
}
