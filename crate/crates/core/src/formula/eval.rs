//! Bottom-up evaluation: every subformula is turned into the set of
//! assignments to its own free variables, once.

use std::collections::{HashMap, HashSet};

use super::ast::{Cmp, Formula, Term};
use super::{check_formula, EvalError};
use crate::ma::{ma_profile, MaProfile};
use crate::structure::{ElemId, Relation, Structure};

/// Satisfying assignments of a subformula, columns in sorted variable order.
#[derive(Debug, Clone)]
struct Table {
    vars: Vec<String>,
    rows: HashSet<Vec<ElemId>>,
}

impl Table {
    fn constant(value: bool) -> Table {
        let mut rows = HashSet::new();
        if value {
            rows.insert(Vec::new());
        }
        Table {
            vars: Vec::new(),
            rows,
        }
    }
}

fn all_assignments(width: usize, size: usize) -> impl Iterator<Item = Vec<ElemId>> {
    let total = (size as u64)
        .checked_pow(width as u32)
        .expect("assignment space too large");
    (0..total).map(move |mut code| {
        let mut row = vec![0; width];
        for slot in row.iter_mut().rev() {
            *slot = (code % size as u64) as ElemId;
            code /= size as u64;
        }
        row
    })
}

fn sorted_union(a: &[String], b: &[String]) -> Vec<String> {
    let mut out: Vec<String> = a.iter().chain(b).cloned().collect();
    out.sort();
    out.dedup();
    out
}

struct Evaluator<'s> {
    s: &'s Structure,
}

impl Evaluator<'_> {
    fn n(&self) -> usize {
        self.s.size()
    }

    fn param(&self, name: &str) -> ElemId {
        self.s
            .element_id(name)
            .expect("parameters are checked before evaluation")
    }

    fn eval(&self, f: &Formula) -> Table {
        match f {
            Formula::True => Table::constant(true),
            Formula::False => Table::constant(false),
            Formula::Atom { relation, args } => self.atom(relation, args),
            Formula::Eq(a, b) => self.equality(a, b),
            Formula::Not(g) => self.complement(self.eval(g)),
            Formula::And(gs) => {
                let mut tables: Vec<Table> = gs.iter().map(|g| self.eval(g)).collect();
                // smallest first keeps intermediate joins small
                tables.sort_by_key(|t| t.rows.len());
                let mut acc = Table::constant(true);
                for t in tables {
                    if acc.rows.is_empty() {
                        break;
                    }
                    acc = self.join(&acc, &t);
                }
                if acc.rows.is_empty() {
                    let vars = gs
                        .iter()
                        .fold(Vec::new(), |v, g| sorted_union(&v, &table_vars(g)));
                    return Table {
                        vars,
                        rows: HashSet::new(),
                    };
                }
                acc
            }
            Formula::Or(gs) => {
                let tables: Vec<Table> = gs.iter().map(|g| self.eval(g)).collect();
                let vars = tables
                    .iter()
                    .fold(Vec::new(), |v, t| sorted_union(&v, &t.vars));
                let mut rows = HashSet::new();
                for t in tables {
                    rows.extend(self.extend(t, &vars).rows);
                }
                Table { vars, rows }
            }
            Formula::Exists { vars, body } => self.project_out(self.eval(body), vars),
            Formula::Forall { vars, body } => {
                let inner = self.complement(self.eval(body));
                self.complement(self.project_out(inner, vars))
            }
            Formula::Count {
                cmp,
                threshold,
                vars,
                body,
            } => self.count(*cmp, *threshold as u64, vars, self.eval(body)),
        }
    }

    fn atom(&self, relation: &str, args: &[Term]) -> Table {
        let rel = self
            .s
            .relation(relation)
            .expect("relations are checked before evaluation");
        let mut vars: Vec<String> = args
            .iter()
            .filter_map(|t| t.as_var().map(str::to_string))
            .collect();
        vars.sort();
        vars.dedup();
        let slot: HashMap<&str, usize> = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let fixed: Vec<Option<ElemId>> = args
            .iter()
            .map(|t| match t {
                Term::Param(p) => Some(self.param(p)),
                Term::Var(_) => None,
            })
            .collect();
        let mut rows = HashSet::new();
        'tuples: for t in rel.iter() {
            let mut row: Vec<Option<ElemId>> = vec![None; vars.len()];
            for (i, (arg, &e)) in args.iter().zip(t).enumerate() {
                match arg {
                    Term::Param(_) => {
                        if fixed[i] != Some(e) {
                            continue 'tuples;
                        }
                    }
                    Term::Var(v) => {
                        let cell = &mut row[slot[v.as_str()]];
                        match cell {
                            Some(prev) if *prev != e => continue 'tuples,
                            _ => *cell = Some(e),
                        }
                    }
                }
            }
            rows.insert(
                row.into_iter()
                    .map(|c| c.expect("every variable occurs"))
                    .collect(),
            );
        }
        Table { vars, rows }
    }

    fn equality(&self, a: &Term, b: &Term) -> Table {
        match (a, b) {
            (Term::Var(u), Term::Var(v)) if u == v => Table {
                vars: vec![u.clone()],
                rows: self.s.elements().map(|e| vec![e]).collect(),
            },
            (Term::Var(u), Term::Var(v)) => Table {
                vars: sorted_union(std::slice::from_ref(u), std::slice::from_ref(v)),
                rows: self.s.elements().map(|e| vec![e, e]).collect(),
            },
            (Term::Var(v), Term::Param(p)) | (Term::Param(p), Term::Var(v)) => Table {
                vars: vec![v.clone()],
                rows: [vec![self.param(p)]].into(),
            },
            (Term::Param(p), Term::Param(q)) => Table::constant(self.param(p) == self.param(q)),
        }
    }

    fn complement(&self, t: Table) -> Table {
        let rows = all_assignments(t.vars.len(), self.n())
            .filter(|r| !t.rows.contains(r))
            .collect();
        Table { vars: t.vars, rows }
    }

    /// Cylindrification onto a superset of the table's variables.
    fn extend(&self, t: Table, vars: &[String]) -> Table {
        if t.vars == vars {
            return t;
        }
        let source: Vec<Option<usize>> = vars
            .iter()
            .map(|v| t.vars.iter().position(|w| w == v))
            .collect();
        let missing = source.iter().filter(|s| s.is_none()).count();
        let fill: Vec<Vec<ElemId>> = all_assignments(missing, self.n()).collect();
        let mut rows = HashSet::with_capacity(t.rows.len() * fill.len());
        for row in &t.rows {
            for extra in &fill {
                let mut extra = extra.iter();
                rows.insert(
                    source
                        .iter()
                        .map(|s| match s {
                            Some(i) => row[*i],
                            None => *extra.next().unwrap(),
                        })
                        .collect(),
                );
            }
        }
        Table {
            vars: vars.to_vec(),
            rows,
        }
    }

    fn join(&self, a: &Table, b: &Table) -> Table {
        let vars = sorted_union(&a.vars, &b.vars);
        let shared: Vec<(usize, usize)> = a
            .vars
            .iter()
            .enumerate()
            .filter_map(|(i, v)| b.vars.iter().position(|w| w == v).map(|j| (i, j)))
            .collect();
        // column of each output variable: Ok(i) from `a`, Err(j) from `b`
        let layout: Vec<Result<usize, usize>> = vars
            .iter()
            .map(|v| match a.vars.iter().position(|w| w == v) {
                Some(i) => Ok(i),
                None => Err(b.vars.iter().position(|w| w == v).unwrap()),
            })
            .collect();
        let mut index: HashMap<Vec<ElemId>, Vec<&Vec<ElemId>>> = HashMap::new();
        for row in &b.rows {
            index
                .entry(shared.iter().map(|&(_, j)| row[j]).collect())
                .or_default()
                .push(row);
        }
        let mut rows = HashSet::new();
        for ra in &a.rows {
            let key: Vec<ElemId> = shared.iter().map(|&(i, _)| ra[i]).collect();
            if let Some(matches) = index.get(&key) {
                for rb in matches {
                    rows.insert(
                        layout
                            .iter()
                            .map(|c| match c {
                                Ok(i) => ra[*i],
                                Err(j) => rb[*j],
                            })
                            .collect(),
                    );
                }
            }
        }
        Table { vars, rows }
    }

    fn project_out(&self, t: Table, remove: &[String]) -> Table {
        let keep: Vec<usize> = (0..t.vars.len())
            .filter(|&i| !remove.contains(&t.vars[i]))
            .collect();
        if keep.len() == t.vars.len() {
            return t;
        }
        Table {
            vars: keep.iter().map(|&i| t.vars[i].clone()).collect(),
            rows: t
                .rows
                .iter()
                .map(|r| keep.iter().map(|&i| r[i]).collect())
                .collect(),
        }
    }

    fn count(&self, cmp: Cmp, threshold: u64, bound: &[String], body: Table) -> Table {
        let absent = bound.iter().filter(|v| !body.vars.contains(v)).count();
        let multiplier = (self.n() as u64).saturating_pow(absent as u32);
        let outer: Vec<usize> = (0..body.vars.len())
            .filter(|&i| !bound.contains(&body.vars[i]))
            .collect();
        let vars: Vec<String> = outer.iter().map(|&i| body.vars[i].clone()).collect();
        let mut counts: HashMap<Vec<ElemId>, u64> = HashMap::new();
        for row in &body.rows {
            *counts
                .entry(outer.iter().map(|&i| row[i]).collect())
                .or_default() += 1;
        }
        let rows = if cmp.holds(0, threshold) {
            all_assignments(vars.len(), self.n())
                .filter(|r| {
                    let c = counts
                        .get(r)
                        .copied()
                        .unwrap_or(0)
                        .saturating_mul(multiplier);
                    cmp.holds(c, threshold)
                })
                .collect()
        } else {
            counts
                .into_iter()
                .filter(|(_, c)| cmp.holds(c.saturating_mul(multiplier), threshold))
                .map(|(r, _)| r)
                .collect()
        };
        Table { vars, rows }
    }
}

fn table_vars(f: &Formula) -> Vec<String> {
    let mut v = f.free_vars();
    v.sort();
    v
}

/// The set of `ctx`-tuples satisfying `f` in `s`.
///
/// `ctx` fixes the column order and must contain every free variable of `f`;
/// it may list extra (dummy) variables. A sentence with empty `ctx` evaluates
/// to the 0-ary relation `{()}` or `∅`.
pub fn evaluate(s: &Structure, f: &Formula, ctx: &[String]) -> Result<Relation, EvalError> {
    check_formula(s, f, ctx)?;
    let ev = Evaluator { s };
    let table = ev.extend(ev.eval(f), &{
        let mut v = ctx.to_vec();
        v.sort();
        v
    });
    let order: Vec<usize> = ctx
        .iter()
        .map(|v| table.vars.iter().position(|w| w == v).unwrap())
        .collect();
    let tuples = table
        .rows
        .iter()
        .map(|r| order.iter().map(|&i| r[i]).collect());
    Ok(Relation::from_tuples(ctx.len(), tuples).expect("rows have ctx length"))
}

/// Truth value of a sentence.
pub fn holds(s: &Structure, f: &Formula) -> Result<bool, EvalError> {
    Ok(!evaluate(s, f, &[])?.is_empty())
}

/// Fiber profile of the denotation of `f` over `ctx`.
pub fn formula_ma_profile(
    s: &Structure,
    f: &Formula,
    ctx: &[String],
) -> Result<MaProfile, EvalError> {
    Ok(ma_profile(&evaluate(s, f, ctx)?))
}
