//! The line-oriented structure file format.
//!
//! ```text
//! # comment
//! universe a b c
//! base c
//! rel R 2
//! a b
//! b a
//! ```

use std::fmt::Write as _;

use super::{is_valid_name, Relation, Structure, StructureError, Tuple};

fn syntax(line: usize, message: impl Into<String>) -> StructureError {
    StructureError::Syntax {
        line,
        message: message.into(),
    }
}

struct OpenRelation {
    name: String,
    line: usize,
    relation: Relation,
}

pub fn parse_structure(text: &str) -> Result<Structure, StructureError> {
    let mut structure: Option<Structure> = None;
    let mut base_seen = false;
    let mut open: Option<OpenRelation> = None;

    let close = |s: Structure, open: Option<OpenRelation>| -> Result<Structure, StructureError> {
        match open {
            Some(o) => s.with_relation(o.name, o.relation).map_err(|e| match e {
                StructureError::DuplicateRelation(n) => StructureError::DuplicateRelation(n),
                other => syntax(o.line, other.to_string()),
            }),
            None => Ok(s),
        }
    };

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let words: Vec<&str> = content.split_whitespace().collect();
        let Some(&head) = words.first() else { continue };

        match head {
            "universe" => {
                if structure.is_some() {
                    return Err(syntax(line, "`universe` may appear only once"));
                }
                if words.len() < 2 {
                    return Err(syntax(line, "`universe` needs at least one element"));
                }
                structure = Some(
                    Structure::new(words[1..].iter().copied())
                        .map_err(|e| syntax(line, e.to_string()))?,
                );
            }
            "base" | "rel" => {
                let Some(s) = structure.take() else {
                    return Err(syntax(line, "the first directive must be `universe`"));
                };
                let s = close(s, open.take())?;
                if head == "base" {
                    if base_seen {
                        return Err(syntax(line, "`base` may appear at most once"));
                    }
                    base_seen = true;
                    let s = s
                        .with_base(words[1..].iter().copied())
                        .map_err(|e| match e {
                            StructureError::UnknownElement { name, .. } => {
                                StructureError::UnknownElement {
                                    line: Some(line),
                                    name,
                                }
                            }
                            other => other,
                        })?;
                    structure = Some(s);
                } else {
                    if words.len() != 3 {
                        return Err(syntax(line, "expected `rel <name> <arity>`"));
                    }
                    let name = words[1];
                    if !is_valid_name(name) {
                        return Err(syntax(line, format!("invalid relation name `{name}`")));
                    }
                    if s.relation(name).is_some() {
                        return Err(StructureError::DuplicateRelation(name.to_string()));
                    }
                    let arity: usize = words[2]
                        .parse()
                        .map_err(|_| syntax(line, format!("invalid arity `{}`", words[2])))?;
                    if arity == 0 {
                        return Err(syntax(line, "arity must be positive"));
                    }
                    open = Some(OpenRelation {
                        name: name.to_string(),
                        line,
                        relation: Relation::new(arity),
                    });
                    structure = Some(s);
                }
            }
            _ => {
                let Some(s) = structure.as_ref() else {
                    return Err(syntax(line, "the first directive must be `universe`"));
                };
                let Some(o) = open.as_mut() else {
                    return Err(syntax(line, "tuple line outside of a `rel` block"));
                };
                if words.len() != o.relation.arity() {
                    return Err(StructureError::ArityMismatch {
                        line: Some(line),
                        relation: o.name.clone(),
                        expected: o.relation.arity(),
                        found: words.len(),
                    });
                }
                let tuple = words
                    .iter()
                    .map(|w| {
                        s.element_id(w)
                            .ok_or_else(|| StructureError::UnknownElement {
                                line: Some(line),
                                name: w.to_string(),
                            })
                    })
                    .collect::<Result<Tuple, _>>()?;
                if !o.relation.insert(tuple)? {
                    return Err(syntax(line, format!("duplicate tuple in `{}`", o.name)));
                }
            }
        }
    }

    let s = structure.ok_or_else(|| syntax(1, "missing `universe` directive"))?;
    close(s, open)
}

pub fn serialize_structure(s: &Structure) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "universe {}", s.universe().join(" "));
    if !s.base().is_empty() {
        let names: Vec<&str> = s.base().iter().map(|&e| s.element_name(e)).collect();
        let _ = writeln!(out, "base {}", names.join(" "));
    }
    for (name, rel) in s.relations() {
        let _ = writeln!(out, "rel {name} {}", rel.arity());
        for t in rel.iter() {
            let names: Vec<&str> = s.names_of(t).collect();
            let _ = writeln!(out, "{}", names.join(" "));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_binary_relation() {
        let s = parse_structure("universe a b\nrel R 2\na b\nb a").unwrap();
        assert_eq!(s.size(), 2);
        let r = s.relation("R").unwrap();
        assert_eq!(r.tuples(), &[vec![0, 1], vec![1, 0]].into());
    }

    #[test]
    fn parses_unary_relation() {
        let s = parse_structure("universe a\nrel P 1\na").unwrap();
        assert_eq!(s.size(), 1);
        assert_eq!(s.relation("P").unwrap().tuples(), &[vec![0]].into());
    }

    #[test]
    fn arity_mismatch_reports_line() {
        let err = parse_structure("universe a\nrel R 2\na").unwrap_err();
        assert_eq!(
            err,
            StructureError::ArityMismatch {
                line: Some(3),
                relation: "R".into(),
                expected: 2,
                found: 1
            }
        );
    }

    #[test]
    fn other_errors() {
        assert!(matches!(
            parse_structure("universe a\nrel R 1\nb"),
            Err(StructureError::UnknownElement { line: Some(3), .. })
        ));
        assert_eq!(
            parse_structure("universe a\nrel R 1\nrel R 1"),
            Err(StructureError::DuplicateRelation("R".into()))
        );
        assert!(matches!(
            parse_structure("rel R 1\n"),
            Err(StructureError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_structure("universe a\nbase a\nbase a"),
            Err(StructureError::Syntax { line: 3, .. })
        ));
        assert!(matches!(
            parse_structure("universe a\nrel R 1\na\na"),
            Err(StructureError::Syntax { line: 4, .. })
        ));
        assert!(matches!(
            parse_structure("universe a\na"),
            Err(StructureError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_structure("universe a\nrel R 0"),
            Err(StructureError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn comments_and_blank_lines() {
        let s = parse_structure("# header\n\nuniverse a b # two\nrel R 1 # unary\n\na # first\n")
            .unwrap();
        assert_eq!(s.relation("R").unwrap().len(), 1);
    }

    #[test]
    fn empty_relation_serializes_header_only() {
        let s = parse_structure("universe a b\nrel R 2\n").unwrap();
        let text = serialize_structure(&s);
        assert!(text.contains("rel R 2\n"));
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn base_directive_round_trips() {
        let s = parse_structure("universe a b c\nbase b\nrel R 2\na b\n").unwrap();
        let text = serialize_structure(&s);
        assert!(text.contains("base b"));
        assert_eq!(parse_structure(&text).unwrap(), s);
    }
}
