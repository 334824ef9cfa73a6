//! Seeded random formulas for differential testing.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::ast::{Cmp, Formula, Term};

/// Shape knobs for [`random_formula`].
#[derive(Clone, Debug)]
pub struct FormulaShape {
    pub max_depth: usize,
    pub quantifiers: bool,
    pub counting: bool,
    /// Probability that an atom argument is an element parameter.
    pub param_rate: f64,
}

impl Default for FormulaShape {
    fn default() -> Self {
        FormulaShape {
            max_depth: 4,
            quantifiers: true,
            counting: true,
            param_rate: 0.1,
        }
    }
}

struct Gen<'a, R> {
    rng: &'a mut R,
    signature: &'a [(String, usize)],
    elements: &'a [String],
    shape: &'a FormulaShape,
    fresh: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn term(&mut self, scope: &[String]) -> Term {
        if scope.is_empty()
            || (!self.elements.is_empty() && self.rng.random_bool(self.shape.param_rate))
        {
            Term::Param(
                self.elements
                    .choose(self.rng)
                    .expect("elements are nonempty")
                    .clone(),
            )
        } else {
            Term::Var(scope.choose(self.rng).unwrap().clone())
        }
    }

    fn leaf(&mut self, scope: &[String]) -> Formula {
        if self.signature.is_empty() || self.rng.random_bool(0.15) {
            return Formula::Eq(self.term(scope), self.term(scope));
        }
        let (name, arity) = self.signature.choose(self.rng).unwrap().clone();
        Formula::Atom {
            relation: name,
            args: (0..arity).map(|_| self.term(scope)).collect(),
        }
    }

    fn binder(&mut self) -> Vec<String> {
        let k = if self.rng.random_bool(0.75) { 1 } else { 2 };
        (0..k)
            .map(|_| {
                self.fresh += 1;
                format!("q{}", self.fresh)
            })
            .collect()
    }

    fn formula(&mut self, scope: &mut Vec<String>, depth: usize) -> Formula {
        if depth == 0 || self.rng.random_bool(0.25) {
            return self.leaf(scope);
        }
        let kinds = if !self.shape.quantifiers {
            3
        } else if self.shape.counting {
            6
        } else {
            5
        };
        match self.rng.random_range(0..kinds) {
            0 => Formula::not(self.formula(scope, depth - 1)),
            1 | 2 => {
                let n = self.rng.random_range(2..=3);
                let parts = (0..n).map(|_| self.formula(scope, depth - 1)).collect();
                if self.rng.random_bool(0.5) {
                    Formula::And(parts)
                } else {
                    Formula::Or(parts)
                }
            }
            k => {
                let vars = self.binder();
                let depth0 = scope.len();
                scope.extend(vars.iter().cloned());
                let body = self.formula(scope, depth - 1);
                scope.truncate(depth0);
                match k {
                    3 => Formula::exists(vars, body),
                    4 => Formula::forall(vars, body),
                    _ => {
                        let cmp = *[Cmp::AtLeast, Cmp::AtMost, Cmp::Exactly]
                            .choose(self.rng)
                            .unwrap();
                        Formula::count(cmp, self.rng.random_range(0..=3), vars, body)
                    }
                }
            }
        }
    }
}

/// A random formula whose free variables are among `free`, with depth at most
/// `shape.max_depth`. Bound variables are named `q1, q2, …` and never shadow.
///
/// `elements` supplies parameter names; with no free variables it must be nonempty.
pub fn random_formula<R: Rng>(
    rng: &mut R,
    signature: &[(String, usize)],
    free: &[String],
    elements: &[String],
    shape: &FormulaShape,
) -> Formula {
    let mut g = Gen {
        rng,
        signature,
        elements,
        shape,
        fresh: 0,
    };
    let mut scope = free.to_vec();
    g.formula(&mut scope, shape.max_depth)
}
