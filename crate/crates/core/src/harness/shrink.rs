//! Greedy single-pass shrinking of failing structures.

use std::collections::BTreeSet;

use crate::structure::{ElemId, Relation, Structure};

/// Drops tuples one at a time, then elements one at a time, keeping each drop
/// while `fails` still holds. With `elements = false` the universe is kept
/// (for callers that refer to elements by id).
pub fn shrink_structure(
    s: &Structure,
    elements: bool,
    fails: impl Fn(&Structure) -> bool,
) -> Structure {
    let mut cur = s.clone();
    let names: Vec<String> = cur.relations().map(|(n, _)| n.to_string()).collect();
    for name in &names {
        let tuples: Vec<Vec<ElemId>> = cur.relation(name).unwrap().iter().cloned().collect();
        for t in tuples {
            let rel = cur.relation(name).unwrap();
            let mut smaller: Relation = rel.clone();
            smaller.retain(|u| *u != t);
            if let Ok(next) = cur.replace_relation(name, smaller) {
                if fails(&next) {
                    cur = next;
                }
            }
        }
    }
    if elements {
        // by name, since ids shift after each removal
        let universe: Vec<String> = cur.universe().to_vec();
        for name in universe.iter().rev() {
            if cur.size() == 1 {
                break;
            }
            let Some(id) = cur.element_id(name) else {
                continue;
            };
            let keep: BTreeSet<ElemId> = cur.elements().filter(|&e| e != id).collect();
            if let Ok(next) = cur.restrict(&keep) {
                if fails(&next) {
                    cur = next;
                }
            }
        }
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::parse_structure;

    #[test]
    fn keeps_only_what_fails() {
        let s =
            parse_structure("universe a b c d\nrel R 2\na b\nb c\nc d\nrel P 1\na\nd\n").unwrap();
        // fails while some R-tuple starts at b
        let fails = |t: &Structure| {
            t.element_id("b")
                .is_some_and(|b| t.relation("R").unwrap().iter().any(|u| u[0] == b))
        };
        let small = shrink_structure(&s, true, fails);
        assert_eq!(small.universe(), ["b", "c"]);
        assert_eq!(small.relation("R").unwrap().len(), 1);
        assert!(small.relation("P").unwrap().is_empty());
        let tuples_only = shrink_structure(&s, false, fails);
        assert_eq!(tuples_only.size(), 4);
        assert_eq!(tuples_only.relation("R").unwrap().len(), 1);
    }
}
