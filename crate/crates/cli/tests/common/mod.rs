#![allow(dead_code)] // each test target uses a different slice of this module

//! Shared test machinery: a naive reference evaluator, seeded random and
//! large-scale case generators, and format validators.

pub mod dot;
pub mod schema;

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use tracereason::dsl::core::{BodyAtom, CoreSpec};
use tracereason::model::{Fact, TraceModel};
use tracereason::typecheck::TypeHierarchy;

// ---------------------------------------------------------------------------
// Naive reference closure
// ---------------------------------------------------------------------------

/// Reference least-fixpoint evaluator, deliberately independent of the
/// engine: every round re-evaluates every rule against the full fact set
/// with plain scans over string facts, no deltas and no indexes, until
/// nothing new appears. Semantics mirror the engine's contract: variables
/// range over locations of their sig (subtype-closed), type tests consult
/// the hierarchy, and derived heads are kept only when their endpoints fit
/// the head relation's signature.
pub fn naive_closure(model: &TraceModel, core: &CoreSpec, h: &TypeHierarchy) -> BTreeSet<Fact> {
    let mut facts: BTreeSet<Fact> = model.tuples.iter().map(|t| t.fact()).collect();
    loop {
        let mut new_facts: Vec<Fact> = Vec::new();
        for rule in &core.rules {
            for binding in rule_bindings(&rule.vars, &rule.body, &facts, model, h) {
                let src = binding[&rule.head.src].clone();
                let dst = binding[&rule.head.dst].clone();
                if head_conforms(&rule.head.relation, &src, &dst, model, h) {
                    let fact = Fact::new(rule.head.relation.clone(), src, dst);
                    if !facts.contains(&fact) {
                        new_facts.push(fact);
                    }
                }
            }
        }
        let before = facts.len();
        facts.extend(new_facts);
        if facts.len() == before {
            return facts;
        }
    }
}

fn head_conforms(
    relation: &str,
    src: &str,
    dst: &str,
    model: &TraceModel,
    h: &TypeHierarchy,
) -> bool {
    let Some(info) = h.relation(relation) else {
        return false;
    };
    let fits = |id: &str, sig: &str| {
        model
            .location(id)
            .map(|l| h.is_subtype(&l.sig_type, sig).unwrap_or(false))
            .unwrap_or(false)
    };
    fits(src, &info.domain) && fits(dst, &info.range)
}

fn var_admits(
    vars: &[tracereason::dsl::ast::TypedVar],
    name: &str,
    loc: &str,
    model: &TraceModel,
    h: &TypeHierarchy,
) -> bool {
    let Some(var) = vars.iter().find(|v| v.name == name) else {
        return false;
    };
    model
        .location(loc)
        .map(|l| h.is_subtype(&l.sig_type, &var.sig).unwrap_or(false))
        .unwrap_or(false)
}

fn rule_bindings(
    vars: &[tracereason::dsl::ast::TypedVar],
    body: &[BodyAtom],
    facts: &BTreeSet<Fact>,
    model: &TraceModel,
    h: &TypeHierarchy,
) -> Vec<BTreeMap<String, String>> {
    let mut bindings: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
    for atom in body {
        let mut extended = Vec::new();
        match atom {
            BodyAtom::Membership { src, dst, relation } => {
                for binding in &bindings {
                    for fact in facts.iter().filter(|f| &f.relation == relation) {
                        let src_ok = match binding.get(src) {
                            Some(bound) => *bound == fact.source,
                            None => var_admits(vars, src, &fact.source, model, h),
                        };
                        let dst_ok = match binding.get(dst) {
                            Some(bound) => *bound == fact.target,
                            None => var_admits(vars, dst, &fact.target, model, h),
                        };
                        // both endpoints of one atom may name the same var
                        if src == dst && fact.source != fact.target {
                            continue;
                        }
                        if src_ok && dst_ok {
                            let mut next = binding.clone();
                            next.insert(src.clone(), fact.source.clone());
                            next.insert(dst.clone(), fact.target.clone());
                            extended.push(next);
                        }
                    }
                }
            }
            BodyAtom::TypeTest { var, sig } => {
                for binding in &bindings {
                    match binding.get(var) {
                        Some(bound) => {
                            let ok = model
                                .location(bound)
                                .map(|l| h.is_subtype(&l.sig_type, sig).unwrap_or(false))
                                .unwrap_or(false);
                            if ok {
                                extended.push(binding.clone());
                            }
                        }
                        None => {
                            for location in &model.locations {
                                if h.is_subtype(&location.sig_type, sig).unwrap_or(false)
                                    && var_admits(vars, var, &location.id, model, h)
                                {
                                    let mut next = binding.clone();
                                    next.insert(var.clone(), location.id.clone());
                                    extended.push(next);
                                }
                            }
                        }
                    }
                }
            }
        }
        bindings = extended;
        if bindings.is_empty() {
            return bindings;
        }
    }
    // quantified variables not mentioned in the body range over their sig
    for var in vars {
        let mut extended = Vec::new();
        for binding in &bindings {
            if binding.contains_key(&var.name) {
                extended.push(binding.clone());
                continue;
            }
            for location in &model.locations {
                if h.is_subtype(&location.sig_type, &var.sig).unwrap_or(false) {
                    let mut next = binding.clone();
                    next.insert(var.name.clone(), location.id.clone());
                    extended.push(next);
                }
            }
        }
        bindings = extended;
    }
    bindings
}

// ---------------------------------------------------------------------------
// Derivation replay
// ---------------------------------------------------------------------------

/// Check that every recorded derivation is a valid instance of its rule:
/// the premises unify with the body's membership atoms in order, the
/// conclusion unifies with the head, bound variables respect their sigs
/// and the type-test atoms, and the conclusion fits the head relation's
/// signature.
pub fn replay_derivations(
    derivations: &tracereason::engine::DerivationGraph,
    core: &CoreSpec,
    model: &TraceModel,
    h: &TypeHierarchy,
) {
    for derivation in derivations.iter() {
        let rule = core
            .rules
            .iter()
            .find(|r| r.id == derivation.rule_id)
            .unwrap_or_else(|| panic!("derivation names unknown rule {}", derivation.rule_id));

        let mut bound: BTreeMap<String, String> = BTreeMap::new();
        let bind = |var: &str, loc: &str, bound: &mut BTreeMap<String, String>| -> bool {
            match bound.get(var) {
                Some(existing) => existing == loc,
                None => {
                    bound.insert(var.to_string(), loc.to_string());
                    true
                }
            }
        };

        let memberships: Vec<_> = rule
            .body
            .iter()
            .filter_map(|a| match a {
                BodyAtom::Membership { src, dst, relation } => Some((src, dst, relation)),
                BodyAtom::TypeTest { .. } => None,
            })
            .collect();
        assert_eq!(
            memberships.len(),
            derivation.premises.len(),
            "premise count must match rule {} body",
            rule.id
        );
        for ((src, dst, relation), premise) in memberships.iter().zip(&derivation.premises) {
            assert_eq!(
                **relation, premise.relation,
                "premise relation mismatch in {}",
                rule.id
            );
            assert!(bind(src, &premise.source, &mut bound), "premise source clash");
            assert!(bind(dst, &premise.target, &mut bound), "premise target clash");
        }
        assert_eq!(rule.head.relation, derivation.conclusion.relation);
        assert!(
            bind(&rule.head.src, &derivation.conclusion.source, &mut bound),
            "conclusion source clash in {}",
            rule.id
        );
        assert!(
            bind(&rule.head.dst, &derivation.conclusion.target, &mut bound),
            "conclusion target clash in {}",
            rule.id
        );

        // type tests and variable sigs hold for every bound variable
        for atom in &rule.body {
            if let BodyAtom::TypeTest { var, sig } = atom {
                if let Some(loc) = bound.get(var) {
                    let sig_of = &model.location(loc).expect("location exists").sig_type;
                    assert!(
                        h.is_subtype(sig_of, sig).unwrap_or(false),
                        "type test {var} in {sig} fails in {}",
                        rule.id
                    );
                }
            }
        }
        for var in &rule.vars {
            if let Some(loc) = bound.get(&var.name) {
                let sig_of = &model.location(loc).expect("location exists").sig_type;
                assert!(
                    h.is_subtype(sig_of, &var.sig).unwrap_or(false),
                    "variable {} violates its sig in {}",
                    var.name,
                    rule.id
                );
            }
        }
        assert!(
            head_conforms(
                &derivation.conclusion.relation,
                &derivation.conclusion.source,
                &derivation.conclusion.target,
                model,
                h
            ),
            "conclusion {} violates the head signature",
            derivation.conclusion
        );
    }
}

// ---------------------------------------------------------------------------
// Random cases (seeded)
// ---------------------------------------------------------------------------

pub struct GeneratedCase {
    pub spec_text: String,
    pub model_text: String,
}

/// A small random specification plus a well-typed model for it. Relations
/// all live on one root sig with two concrete children, so any tuple over
/// the generated locations type-checks.
pub fn random_case(rng: &mut ChaCha8Rng) -> GeneratedCase {
    let relation_count = rng.gen_range(1..=4usize);
    let relations: Vec<String> = (0..relation_count).map(|i| format!("r{i}")).collect();

    let mut spec = String::new();
    spec.push_str("abstract sig Item {\n");
    for (i, rel) in relations.iter().enumerate() {
        let comma = if i + 1 < relations.len() { "," } else { "" };
        spec.push_str(&format!("  {rel}: set Item{comma}\n"));
    }
    spec.push_str("}\nsig Node extends Item {}\nsig Leaf extends Item {}\n");

    let rule_count = rng.gen_range(0..=6usize);
    for index in 0..rule_count {
        let pick = |rng: &mut ChaCha8Rng| relations[rng.gen_range(0..relations.len())].clone();
        let formula = match rng.gen_range(0..5u8) {
            0 => format!("transitive[{}]", pick(rng)),
            1 => format!("symmetric[{}]", pick(rng)),
            2 => format!("reflexive[{}]", pick(rng)),
            3 => {
                let (a, b, c) = (pick(rng), pick(rng), pick(rng));
                format!(
                    "all a, b, c: Item | a->b in {a} and b->c in {b} implies a->c in {c}"
                )
            }
            _ => {
                let (a, b) = (pick(rng), pick(rng));
                format!("all a, b: Item | a->b in {a} implies b->a in {b}")
            }
        };
        spec.push_str(&format!("fact F{index} {{ {formula} }}\n"));
    }
    // sometimes a couple of constraints, so random models also exercise
    // violation reporting and diagnosis
    let constraint_count = rng.gen_range(0..=2usize);
    for index in 0..constraint_count {
        let pick = |rng: &mut ChaCha8Rng| relations[rng.gen_range(0..relations.len())].clone();
        let formula = match rng.gen_range(0..3u8) {
            0 => format!("irreflexive[{}]", pick(rng)),
            1 => format!("antisymmetric[{}]", pick(rng)),
            _ => format!("excludes[{}, {}]", pick(rng), pick(rng)),
        };
        spec.push_str(&format!("fact C{index} {{ {formula} }}\n"));
    }

    let location_count = rng.gen_range(1..=15usize);
    let mut model = String::from("model generated\n");
    for i in 0..location_count {
        let sig = if rng.gen_bool(0.5) { "Node" } else { "Leaf" };
        model.push_str(&format!("location l{i:02} : {sig} {{ resource = \"gen\" }}\n"));
    }
    let tuple_count = rng.gen_range(0..=25usize);
    let mut seen = BTreeSet::new();
    for _ in 0..tuple_count {
        let rel = relations[rng.gen_range(0..relations.len())].clone();
        let src = rng.gen_range(0..location_count);
        let dst = rng.gen_range(0..location_count);
        if seen.insert((rel.clone(), src, dst)) {
            model.push_str(&format!("trace {rel} (l{src:02} -> l{dst:02})\n"));
        }
    }

    GeneratedCase {
        spec_text: spec,
        model_text: model,
    }
}

/// Deterministic case at industrial scale: 7 trace types, 11 facts,
/// 125 locations in five layers, 138 given tuples, no violations.
pub fn scale_case() -> GeneratedCase {
    let spec = "\
abstract sig Item {
  depends: set Item,
  refines: set Item,
  groups: set Item,
  verifies: set Item,
  conflicts: set Item,
  mirrors: set Item,
  covers: set Item
}
sig Node extends Item {}

fact DependsTransitive { transitive[depends] }
fact GroupsTransitive { transitive[groups] }
fact RefinementCarriesDependencies {
  all a, b, c: Item | a->b in refines and b->c in depends implies a->c in depends
}
fact DependenciesReachGroupedParts {
  all a, b, c: Item | a->b in depends and b->c in groups implies a->c in depends
}
fact ConflictPropagation {
  all a, b, c: Item | (a->b in depends or a->b in refines) and b->c in conflicts implies a->c in conflicts
}
fact MirrorsSymmetric { symmetric[mirrors] }
fact VerificationCoversGroupedParts {
  all a, b, c: Item | a->b in verifies and b->c in groups implies a->c in verifies
}
fact DependsIrreflexive { irreflexive[depends] }
fact RefinesAntisymmetric { antisymmetric[refines] }
fact GroupsInjective { injective[groups] }
fact NoDependencyOnConflict { excludes[depends, conflicts] }
"
    .to_string();

    let mut model = String::from("model scale\n");
    for i in 0..125 {
        model.push_str(&format!("location n{i:03} : Node {{ resource = \"gen\" }}\n"));
    }
    let mut tuples: Vec<(String, usize, usize)> = Vec::new();
    // layer 0: a dependency chain over n000..n024
    for i in 0..24 {
        tuples.push(("depends".into(), i, i + 1));
    }
    // layer 1: a second chain over n025..n038
    for i in 25..38 {
        tuples.push(("depends".into(), i, i + 1));
    }
    // each layer-1 element refines its layer-0 counterpart
    for i in 0..25 {
        tuples.push(("refines".into(), 25 + i, i));
    }
    // layer 2: five grouping stars, each root grouping four parts
    for star in 0..5 {
        let root = 50 + star * 5;
        for child in 1..5 {
            tuples.push(("groups".into(), root, root + child));
        }
    }
    // layer 3 verifies the layer-2 roots and parts
    for i in 0..25 {
        tuples.push(("verifies".into(), 75 + i, 50 + i));
    }
    // layer 4: coverage links, a few conflicts, two mirrored pairs
    for i in 0..25 {
        tuples.push(("covers".into(), 100 + i, 75 + i));
    }
    for pair in 0..4 {
        tuples.push(("conflicts".into(), 100 + 2 * pair, 101 + 2 * pair));
    }
    tuples.push(("mirrors".into(), 110, 111));
    tuples.push(("mirrors".into(), 112, 113));
    assert_eq!(tuples.len(), 138);
    for (rel, src, dst) in tuples {
        model.push_str(&format!("trace {rel} (n{src:03} -> n{dst:03})\n"));
    }

    GeneratedCase {
        spec_text: spec,
        model_text: model,
    }
}
