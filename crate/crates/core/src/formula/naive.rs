//! Reference semantics by brute force: enumerate every assignment of the
//! context variables and decide satisfaction recursively, looping over the
//! universe at each quantifier. Nothing is cached. Used as the oracle for
//! [`super::evaluate`].

use super::ast::{Formula, Term};
use super::{check_formula, EvalError};
use crate::structure::{ElemId, Relation, Structure};

struct Env<'a> {
    s: &'a Structure,
    stack: Vec<(&'a str, ElemId)>,
}

impl<'a> Env<'a> {
    fn value(&self, t: &Term) -> ElemId {
        match t {
            Term::Var(v) => self
                .stack
                .iter()
                .rev()
                .find(|(name, _)| name == v)
                .map(|&(_, e)| e)
                .expect("free variables are checked before evaluation"),
            Term::Param(p) => self.s.element_id(p).expect("parameters are checked"),
        }
    }

    fn sat(&mut self, f: &'a Formula) -> bool {
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom { relation, args } => {
                let t: Vec<ElemId> = args.iter().map(|a| self.value(a)).collect();
                self.s.relation(relation).is_some_and(|r| r.contains(&t))
            }
            Formula::Eq(a, b) => self.value(a) == self.value(b),
            Formula::Not(g) => !self.sat(g),
            Formula::And(gs) => gs.iter().all(|g| self.sat(g)),
            Formula::Or(gs) => gs.iter().any(|g| self.sat(g)),
            Formula::Exists { vars, body } => self.witnesses(vars, body, Some(1)) >= 1,
            Formula::Forall { vars, body } => {
                let total = (self.s.size() as u64).pow(vars.len() as u32);
                self.witnesses(vars, body, None) == total
            }
            Formula::Count {
                cmp,
                threshold,
                vars,
                body,
            } => cmp.holds(self.witnesses(vars, body, None), *threshold as u64),
        }
    }

    /// Number of assignments to `vars` satisfying `body`, stopping at `limit`.
    fn witnesses(&mut self, vars: &'a [String], body: &'a Formula, limit: Option<u64>) -> u64 {
        let n = self.s.size() as ElemId;
        let base = self.stack.len();
        self.stack.extend(vars.iter().map(|v| (v.as_str(), 0)));
        let mut count = 0;
        loop {
            if self.sat(body) {
                count += 1;
                if limit == Some(count) {
                    break;
                }
            }
            // odometer over the bound variables
            let mut i = self.stack.len();
            loop {
                if i == base {
                    self.stack.truncate(base);
                    return count;
                }
                i -= 1;
                self.stack[i].1 += 1;
                if self.stack[i].1 < n {
                    break;
                }
                self.stack[i].1 = 0;
            }
        }
        self.stack.truncate(base);
        count
    }
}

/// Same contract as [`super::evaluate`], computed by exhaustive enumeration.
pub fn evaluate_naive(s: &Structure, f: &Formula, ctx: &[String]) -> Result<Relation, EvalError> {
    check_formula(s, f, ctx)?;
    let n = s.size() as u64;
    let mut out = Relation::new(ctx.len());
    for mut code in 0..n.pow(ctx.len() as u32) {
        let mut t = vec![0; ctx.len()];
        for slot in t.iter_mut().rev() {
            *slot = (code % n) as ElemId;
            code /= n;
        }
        let mut env = Env {
            s,
            stack: ctx
                .iter()
                .map(String::as_str)
                .zip(t.iter().copied())
                .collect(),
        };
        if env.sat(f) {
            out.insert(t).expect("tuple has ctx length");
        }
    }
    Ok(out)
}
