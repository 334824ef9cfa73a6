//! Syntactic bound on the solution count of a one-variable normal form.

use serde::Serialize;

use super::star::MAStarForm;
use super::RewriteError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Fewer than `k` values of `x` satisfy the form, for every `ȳ`.
    Positive,
    /// Fewer than `k` values of `x` satisfy its negation, for every `ȳ`.
    Negative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub side: Side,
    pub k: usize,
}

/// Reads a bound off the literal certificates.
///
/// Positive side: every disjunct has a positive literal in `x` and some other
/// variable; a disjunct then has at most the smallest such bound many
/// solutions, and `k` is the sum over disjuncts plus one.
///
/// Negative side: some disjunct has only negative literals, each in `x` and
/// some other variable; the negation of the form implies the disjunction of
/// those `γ_j`, so `k = ΣK_j + 1`. The empty disjunct (`true`) gives `k = 1`.
///
/// Forms mixing both kinds of disjunct have neither guarantee and are
/// reported as [`RewriteError::Unclassifiable`].
pub fn classify_unary(form: &MAStarForm, x: &str) -> Result<Classification, RewriteError> {
    if !form.ctx.iter().any(|v| v == x) && !form.disjuncts.is_empty() {
        return Err(RewriteError::NotInCtx(x.into()));
    }
    let bounding = |positive: bool, l: &super::star::Literal| {
        l.positive == positive && l.mentions(x) && !l.cert.bound().vacuous
    };
    let per_disjunct: Option<Vec<usize>> = form
        .disjuncts
        .iter()
        .map(|d| {
            d.iter()
                .filter(|l| bounding(true, l))
                .map(|l| l.cert.bound().k)
                .min()
        })
        .collect();
    if let Some(mins) = per_disjunct {
        let k = mins
            .iter()
            .fold(0usize, |acc, &m| acc.saturating_add(m))
            .saturating_add(1);
        return Ok(Classification {
            side: Side::Positive,
            k,
        });
    }
    let negative = form
        .disjuncts
        .iter()
        .filter(|d| d.iter().all(|l| bounding(false, l)))
        .map(|d| {
            d.iter()
                .fold(0usize, |acc, l| acc.saturating_add(l.cert.bound().k))
                .saturating_add(1)
        })
        .min();
    match negative {
        Some(k) => Ok(Classification {
            side: Side::Negative,
            k,
        }),
        None => Err(RewriteError::Unclassifiable),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::rewrite::dnf::{to_dnf, Asserted};

    fn classify(text: &str, k: usize) -> Result<Classification, RewriteError> {
        let (f, ctx) = parse_formula(text).unwrap();
        let form = to_dnf(
            &f,
            &ctx,
            &Asserted::relations([("R", k), ("S", k), ("P", 0)]),
        )
        .unwrap();
        classify_unary(&form, "x")
    }

    #[test]
    fn spec_examples() {
        assert_eq!(
            classify("R(x, y)", 2).unwrap(),
            Classification {
                side: Side::Positive,
                k: 3
            }
        );
        assert_eq!(
            classify("!R(x, y)", 2).unwrap(),
            Classification {
                side: Side::Negative,
                k: 3
            }
        );
        assert_eq!(
            classify("x = x", 2).unwrap(),
            Classification {
                side: Side::Negative,
                k: 1
            }
        );
    }

    #[test]
    fn sums_and_minima() {
        let c = classify("R(x, y) & S(x, y) | R(y, x)", 2).unwrap();
        assert_eq!(
            c,
            Classification {
                side: Side::Positive,
                k: 5
            }
        );
        let c = classify("!R(x, y) & !S(x, y) | P(y)", 1).unwrap();
        assert_eq!(
            c,
            Classification {
                side: Side::Negative,
                k: 3
            }
        );
    }

    #[test]
    fn mixed_forms_are_rejected() {
        assert!(matches!(
            classify("R(x, y) | !S(x, y) & P(y)", 1),
            Err(RewriteError::Unclassifiable)
        ));
        assert!(matches!(
            classify("P(x)", 1),
            Err(RewriteError::Unclassifiable)
        ));
    }
}
