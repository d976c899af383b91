//! Lowering from the syntax tree to the executable core form.
//!
//! Each quantified implication becomes one rule or constraint per body
//! disjunct; property macros expand to their defining rules/constraints.
//! Item ids are `<fact-id>#<index>` with the index counting the items a
//! fact produced, so ids are stable across runs.

use std::collections::BTreeSet;

use crate::dsl::ast::*;
use crate::dsl::core::*;
use crate::span::SourceSpan;
use crate::SpecError;

/// Lower a parsed specification. All problems are collected; the core form
/// is returned only for a clean input.
pub fn desugar(ast: &SpecAst) -> Result<CoreSpec, Vec<SpecError>> {
    let mut errors = Vec::new();

    let sigs: Vec<SigInfo> = ast
        .sigs
        .iter()
        .map(|s| SigInfo {
            name: s.name.clone(),
            parent: s.parent.as_ref().map(|(p, _)| p.clone()),
            is_abstract: s.is_abstract,
            location: s.location,
            span: s.span.clone(),
        })
        .collect();
    let sig_names: BTreeSet<&str> = sigs.iter().map(|s| s.name.as_str()).collect();

    let mut relations = Vec::new();
    for sig in &ast.sigs {
        for field in &sig.fields {
            relations.push(RelationSig {
                name: field.name.clone(),
                domain: sig.name.clone(),
                range: field.target.clone(),
                span: field.span.clone(),
            });
        }
    }

    let mut rules = Vec::new();
    let mut constraints = Vec::new();
    for fact in &ast.facts {
        let base = fact.id();
        let mut index = 0usize;
        for formula in &fact.formulas {
            let items = match formula {
                Formula::Quantified(q) => {
                    lower_quantified(&relations, &sig_names, &base, &mut index, q, &mut errors)
                }
                Formula::Macro(m) => expand_macro(&relations, &base, &mut index, m, &mut errors),
            };
            for item in items.unwrap_or_default() {
                match item {
                    CoreItem::Rule(rule) => rules.push(rule),
                    CoreItem::Constraint(c) => constraints.push(c),
                }
            }
        }
    }

    if errors.is_empty() {
        Ok(CoreSpec {
            sigs,
            relations,
            rules,
            constraints,
        })
    } else {
        Err(errors)
    }
}

fn find_relation<'a>(relations: &'a [RelationSig], name: &str) -> Option<&'a RelationSig> {
    relations.iter().find(|r| r.name == name)
}

enum CoreItem {
    Rule(Rule),
    Constraint(Constraint),
}

fn lower_quantified(
    relations: &[RelationSig],
    sig_names: &BTreeSet<&str>,
    base: &str,
    index: &mut usize,
    q: &QuantifiedFormula,
    errors: &mut Vec<SpecError>,
) -> Option<Vec<CoreItem>> {
    let before = errors.len();

    for var in &q.vars {
        if !sig_names.contains(var.sig.as_str()) {
            errors.push(SpecError::UnknownSig {
                name: var.sig.clone(),
                span: q.span.clone(),
            });
        }
    }
    let bound: BTreeSet<&str> = q.vars.iter().map(|v| v.name.as_str()).collect();

    for disjunct in &q.body {
        for atom in disjunct {
            if atom.negated {
                errors.push(SpecError::NegatedBodyAtom {
                    span: atom.span.clone(),
                });
            }
            match &atom.kind {
                AtomKind::Membership { src, dst, relation } => {
                    check_bound(&bound, src, &atom.span, errors);
                    check_bound(&bound, dst, &atom.span, errors);
                    if find_relation(relations, relation).is_none() {
                        errors.push(SpecError::UnknownRelation {
                            name: relation.clone(),
                            span: atom.span.clone(),
                        });
                    }
                }
                AtomKind::TypeTest { var, sig } => {
                    check_bound(&bound, var, &atom.span, errors);
                    if !sig_names.contains(sig.as_str()) {
                        errors.push(SpecError::UnknownSig {
                            name: sig.clone(),
                            span: atom.span.clone(),
                        });
                    }
                }
            }
        }
    }

    if q.head.len() != 1 {
        errors.push(SpecError::NonHornHead {
            detail: "a formula must conclude a single atom".to_string(),
            span: q.span.clone(),
        });
    }
    let head = q.head.first()?;
    match &head.kind {
        HeadKind::Membership {
            src, dst, relation, ..
        } => {
            check_bound(&bound, src, &head.span, errors);
            check_bound(&bound, dst, &head.span, errors);
            if find_relation(relations, relation).is_none() {
                errors.push(SpecError::UnknownRelation {
                    name: relation.clone(),
                    span: head.span.clone(),
                });
            }
        }
        HeadKind::Equal { left, right } => {
            check_bound(&bound, left, &head.span, errors);
            check_bound(&bound, right, &head.span, errors);
        }
        HeadKind::Deny => {}
    }

    if errors.len() > before || q.head.len() != 1 {
        return None;
    }

    let mut items = Vec::new();
    for disjunct in &q.body {
        let id = format!("{base}#{index}");
        *index += 1;
        let body: Vec<BodyAtom> = disjunct
            .iter()
            .map(|atom| match &atom.kind {
                AtomKind::Membership { src, dst, relation } => BodyAtom::Membership {
                    src: src.clone(),
                    dst: dst.clone(),
                    relation: relation.clone(),
                },
                AtomKind::TypeTest { var, sig } => BodyAtom::TypeTest {
                    var: var.clone(),
                    sig: sig.clone(),
                },
            })
            .collect();
        let vars = q.vars.clone();
        match &head.kind {
            HeadKind::Membership {
                src,
                dst,
                relation,
                negated,
            } => {
                if *negated {
                    items.push(CoreItem::Constraint(Constraint {
                        id,
                        vars,
                        body,
                        head: ConstraintHead::Forbid {
                            src: src.clone(),
                            dst: dst.clone(),
                            relation: relation.clone(),
                        },
                        span: q.span.clone(),
                    }));
                } else {
                    items.push(CoreItem::Rule(Rule {
                        id,
                        vars,
                        body,
                        head: DeriveHead {
                            src: src.clone(),
                            dst: dst.clone(),
                            relation: relation.clone(),
                        },
                        span: q.span.clone(),
                    }));
                }
            }
            HeadKind::Equal { left, right } => {
                items.push(CoreItem::Constraint(Constraint {
                    id,
                    vars,
                    body,
                    head: ConstraintHead::MustEqual {
                        left: left.clone(),
                        right: right.clone(),
                    },
                    span: q.span.clone(),
                }));
            }
            HeadKind::Deny => {
                items.push(CoreItem::Constraint(Constraint {
                    id,
                    vars,
                    body,
                    head: ConstraintHead::Deny,
                    span: q.span.clone(),
                }));
            }
        }
    }
    Some(items)
}

fn check_bound(
    bound: &BTreeSet<&str>,
    name: &str,
    span: &SourceSpan,
    errors: &mut Vec<SpecError>,
) {
    if !bound.contains(name) {
        errors.push(SpecError::UnboundVariable {
            name: name.to_string(),
            span: span.clone(),
        });
    }
}

fn expand_macro(
    relations: &[RelationSig],
    base: &str,
    index: &mut usize,
    m: &MacroFormula,
    errors: &mut Vec<SpecError>,
) -> Option<Vec<CoreItem>> {
    let mut resolved = Vec::new();
    for name in &m.relations {
        match find_relation(relations, name) {
            Some(rel) => resolved.push(rel.clone()),
            None => {
                errors.push(SpecError::UnknownRelation {
                    name: name.clone(),
                    span: m.span.clone(),
                });
                return None;
            }
        }
    }
    let rel = &resolved[0];
    let span = m.span.clone();

    let var = |name: &str, sig: &str| TypedVar {
        name: name.to_string(),
        sig: sig.to_string(),
    };
    let member = |src: &str, dst: &str, relation: &str| BodyAtom::Membership {
        src: src.to_string(),
        dst: dst.to_string(),
        relation: relation.to_string(),
    };
    let mut next_id = || {
        let id = format!("{base}#{index}");
        *index += 1;
        id
    };

    let items = match m.kind {
        MacroKind::Irreflexive => vec![CoreItem::Constraint(Constraint {
            id: next_id(),
            vars: vec![var("a", &rel.domain)],
            body: vec![member("a", "a", &rel.name)],
            head: ConstraintHead::Deny,
            span,
        })],
        MacroKind::Antisymmetric => vec![CoreItem::Constraint(Constraint {
            id: next_id(),
            vars: vec![var("a", &rel.domain), var("b", &rel.range)],
            body: vec![member("a", "b", &rel.name), member("b", "a", &rel.name)],
            head: ConstraintHead::MustEqual {
                left: "a".to_string(),
                right: "b".to_string(),
            },
            span,
        })],
        MacroKind::Symmetric => vec![CoreItem::Rule(Rule {
            id: next_id(),
            vars: vec![var("a", &rel.domain), var("b", &rel.range)],
            body: vec![member("a", "b", &rel.name)],
            head: DeriveHead {
                src: "b".to_string(),
                dst: "a".to_string(),
                relation: rel.name.clone(),
            },
            span,
        })],
        MacroKind::Transitive => vec![CoreItem::Rule(Rule {
            id: next_id(),
            vars: vec![
                var("a", &rel.domain),
                var("b", &rel.range),
                var("c", &rel.range),
            ],
            body: vec![member("a", "b", &rel.name), member("b", "c", &rel.name)],
            head: DeriveHead {
                src: "a".to_string(),
                dst: "c".to_string(),
                relation: rel.name.clone(),
            },
            span,
        })],
        MacroKind::Reflexive => vec![CoreItem::Rule(Rule {
            id: next_id(),
            vars: vec![var("a", &rel.domain)],
            body: vec![BodyAtom::TypeTest {
                var: "a".to_string(),
                sig: rel.domain.clone(),
            }],
            head: DeriveHead {
                src: "a".to_string(),
                dst: "a".to_string(),
                relation: rel.name.clone(),
            },
            span,
        })],
        MacroKind::Injective => vec![CoreItem::Constraint(Constraint {
            id: next_id(),
            vars: vec![
                var("a", &rel.domain),
                var("b", &rel.range),
                var("c", &rel.domain),
            ],
            body: vec![member("a", "b", &rel.name), member("c", "b", &rel.name)],
            head: ConstraintHead::MustEqual {
                left: "a".to_string(),
                right: "c".to_string(),
            },
            span,
        })],
        MacroKind::Functional => vec![CoreItem::Constraint(Constraint {
            id: next_id(),
            vars: vec![
                var("a", &rel.domain),
                var("b", &rel.range),
                var("c", &rel.range),
            ],
            body: vec![member("a", "b", &rel.name), member("a", "c", &rel.name)],
            head: ConstraintHead::MustEqual {
                left: "b".to_string(),
                right: "c".to_string(),
            },
            span,
        })],
        MacroKind::Excludes => {
            let other = &resolved[1];
            vec![
                CoreItem::Constraint(Constraint {
                    id: next_id(),
                    vars: vec![var("a", &rel.domain), var("b", &rel.range)],
                    body: vec![member("a", "b", &rel.name), member("a", "b", &other.name)],
                    head: ConstraintHead::Deny,
                    span: span.clone(),
                }),
                CoreItem::Constraint(Constraint {
                    id: next_id(),
                    vars: vec![var("a", &rel.domain), var("b", &rel.range)],
                    body: vec![member("a", "b", &rel.name), member("b", "a", &other.name)],
                    head: ConstraintHead::Deny,
                    span,
                }),
            ]
        }
    };
    Some(items)
}
