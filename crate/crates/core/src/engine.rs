//! Inference and consistency analysis.
//!
//! `infer` computes the least fixpoint of the specification's rules over
//! the model's given tuples plus type facts, using semi-naive evaluation
//! (each round joins only against tuples that were new in the previous
//! round). `check_consistency` evaluates every constraint body over the
//! resulting closure. `diagnose` explains one violation as a subset-minimal
//! set of given tuples, by deletion: walk the given tuples in canonical
//! order and drop each one whose removal leaves the violation derivable.
//!
//! Everything here is a pure function of (model, core spec, hierarchy) and
//! produces canonically ordered output: facts by (relation, source,
//! target), rules by declaration order, violations by (constraint id,
//! binding). Two runs on the same inputs yield identical values.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use thiserror::Error;

use crate::dsl::core::{BodyAtom, Constraint, ConstraintHead, CoreSpec, Rule};
use crate::model::{Fact, Provenance, TraceModel, TraceTuple};
use crate::typecheck::{check_model, TypeError, TypeHierarchy};

/// Why an inferred tuple holds: the rule that produced it and the tuples
/// that matched its body, in body-atom order. The recorded derivation is
/// the first one found under canonical evaluation order (round, then rule
/// declaration order, then premise order); other derivations may exist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub conclusion: Fact,
    pub rule_id: String,
    pub premises: Vec<Fact>,
}

/// One derivation per inferred tuple, keyed by conclusion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DerivationGraph {
    map: BTreeMap<Fact, Derivation>,
}

impl DerivationGraph {
    pub fn get(&self, fact: &Fact) -> Option<&Derivation> {
        self.map.get(fact)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Derivation> {
        self.map.values()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// A derived head tuple that was dropped because its endpoints do not fit
/// the head relation's signature.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GuardWarning {
    pub rule_id: String,
    pub fact: Fact,
    pub detail: String,
}

/// Output of [`infer`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inference {
    /// Newly derived tuples, canonical order, disjoint from the model's.
    pub inferred: BTreeSet<Fact>,
    pub derivations: DerivationGraph,
    pub warnings: Vec<GuardWarning>,
    /// Fixpoint rounds taken; bounded by |relations| × |locations|².
    pub rounds: usize,
}

/// A constraint body match that signals an inconsistency.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub constraint_id: String,
    /// Variable binding in quantifier order.
    pub binding: Vec<(String, String)>,
    /// Tuples matching the constraint body, plus the forbidden tuple for
    /// `Forbid` constraints.
    pub involved: Vec<Fact>,
}

/// A violation together with a subset-minimal set of given tuples from
/// which it is derivable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnosis {
    pub violation: Violation,
    pub support: Vec<TraceTuple>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Stats {
    pub assigned: usize,
    pub inferred: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisResult {
    /// Inferred tuples with `inferred` provenance, canonical order.
    pub inferred: Vec<TraceTuple>,
    pub derivations: DerivationGraph,
    pub violations: Vec<Violation>,
    pub diagnoses: Vec<Diagnosis>,
    pub warnings: Vec<GuardWarning>,
    pub stats: Stats,
}

impl AnalysisResult {
    pub fn inferred_facts(&self) -> BTreeSet<Fact> {
        self.inferred.iter().map(|t| t.fact()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("model is not well-typed against the specification")]
    IllTyped(Vec<TypeError>),
    #[error("violation `{0}` is not reproducible from the given model")]
    StaleViolation(String),
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
}

// ---------------------------------------------------------------------------
// Interned evaluation universe
// ---------------------------------------------------------------------------

/// Locations and relations interned to dense indexes. Both index spaces
/// are assigned in sorted order, so index comparison is lexicographic
/// comparison of the underlying names.
struct Universe {
    locations: Vec<String>,
    loc_of: HashMap<String, u32>,
    relations: Vec<String>,
    rel_of: HashMap<String, u32>,
    /// sig name → sorted indexes of locations whose type is a subtype.
    members: HashMap<String, Vec<u32>>,
    member_sets: HashMap<String, HashSet<u32>>,
}

type Tuple = (u32, u32, u32);

impl Universe {
    fn build(model: &TraceModel, h: &TypeHierarchy) -> Universe {
        let mut locations: Vec<String> = model.locations.iter().map(|l| l.id.clone()).collect();
        locations.sort();
        let loc_of: HashMap<String, u32> = locations
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        let relations: Vec<String> = h.relations().map(|(name, _)| name.to_string()).collect();
        let rel_of: HashMap<String, u32> = relations
            .iter()
            .enumerate()
            .map(|(i, name)| (name.clone(), i as u32))
            .collect();

        let mut members: HashMap<String, Vec<u32>> = HashMap::new();
        let mut member_sets: HashMap<String, HashSet<u32>> = HashMap::new();
        for sig in h.sig_names() {
            let mut list = Vec::new();
            for (index, id) in locations.iter().enumerate() {
                let loc = model.location(id).expect("interned location exists");
                if h.is_subtype(&loc.sig_type, sig).unwrap_or(false) {
                    list.push(index as u32);
                }
            }
            member_sets.insert(sig.to_string(), list.iter().copied().collect());
            members.insert(sig.to_string(), list);
        }

        Universe {
            locations,
            loc_of,
            relations,
            rel_of,
            members,
            member_sets,
        }
    }

    fn intern_fact(&self, relation: &str, source: &str, target: &str) -> Option<Tuple> {
        Some((
            *self.rel_of.get(relation)?,
            *self.loc_of.get(source)?,
            *self.loc_of.get(target)?,
        ))
    }

    fn extern_fact(&self, tuple: Tuple) -> Fact {
        Fact {
            relation: self.relations[tuple.0 as usize].clone(),
            source: self.locations[tuple.1 as usize].clone(),
            target: self.locations[tuple.2 as usize].clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// Tuple store with adjacency indexes
// ---------------------------------------------------------------------------

#[derive(Default)]
struct TupleStore {
    all: HashSet<Tuple>,
    by_rel: Vec<Vec<(u32, u32)>>,
    by_rel_src: Vec<HashMap<u32, Vec<u32>>>,
    by_rel_dst: Vec<HashMap<u32, Vec<u32>>>,
}

impl TupleStore {
    fn new(relation_count: usize) -> TupleStore {
        TupleStore {
            all: HashSet::new(),
            by_rel: vec![Vec::new(); relation_count],
            by_rel_src: vec![HashMap::new(); relation_count],
            by_rel_dst: vec![HashMap::new(); relation_count],
        }
    }

    fn insert(&mut self, tuple: Tuple) -> bool {
        if !self.all.insert(tuple) {
            return false;
        }
        let (rel, src, dst) = tuple;
        self.by_rel[rel as usize].push((src, dst));
        self.by_rel_src[rel as usize].entry(src).or_default().push(dst);
        self.by_rel_dst[rel as usize].entry(dst).or_default().push(src);
        true
    }

    fn contains(&self, tuple: &Tuple) -> bool {
        self.all.contains(tuple)
    }
}

// ---------------------------------------------------------------------------
// Compiled rules/constraints and the body matcher
// ---------------------------------------------------------------------------

enum CompiledAtom {
    /// (relation, source var index, target var index)
    Membership(u32, usize, usize),
    /// (var index, sig whose member set must contain the binding)
    TypeTest(usize, String),
}

struct CompiledBody {
    /// Per variable: the sig constraining it.
    var_sigs: Vec<String>,
    atoms: Vec<CompiledAtom>,
    /// Number of membership atoms, for delta positioning.
    membership_count: usize,
}

fn compile_body(vars: &[crate::dsl::ast::TypedVar], body: &[BodyAtom], u: &Universe) -> Option<CompiledBody> {
    let var_index: HashMap<&str, usize> = vars
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect();
    let mut atoms = Vec::new();
    let mut membership_count = 0;
    for atom in body {
        match atom {
            BodyAtom::Membership { src, dst, relation } => {
                let rel = *u.rel_of.get(relation)?;
                atoms.push(CompiledAtom::Membership(
                    rel,
                    *var_index.get(src.as_str())?,
                    *var_index.get(dst.as_str())?,
                ));
                membership_count += 1;
            }
            BodyAtom::TypeTest { var, sig } => {
                atoms.push(CompiledAtom::TypeTest(*var_index.get(var.as_str())?, sig.clone()));
            }
        }
    }
    Some(CompiledBody {
        var_sigs: vars.iter().map(|v| v.sig.clone()).collect(),
        atoms,
        membership_count,
    })
}

/// Enumerate all bindings of `body` against `store`. With `delta`, the
/// membership atom at that position ranges over the delta tuples instead of
/// the full store. The callback receives the binding and the membership
/// premises in body-atom order.
fn enumerate_matches(
    body: &CompiledBody,
    u: &Universe,
    store: &TupleStore,
    delta: Option<(usize, &[Tuple])>,
    callback: &mut dyn FnMut(&[u32], &[Tuple]),
) {
    let mut binding: Vec<Option<u32>> = vec![None; body.var_sigs.len()];
    let mut premises: Vec<Tuple> = Vec::with_capacity(body.membership_count);
    descend(body, u, store, delta, 0, 0, &mut binding, &mut premises, callback);
}

#[allow(clippy::too_many_arguments)]
fn descend(
    body: &CompiledBody,
    u: &Universe,
    store: &TupleStore,
    delta: Option<(usize, &[Tuple])>,
    atom_index: usize,
    membership_index: usize,
    binding: &mut Vec<Option<u32>>,
    premises: &mut Vec<Tuple>,
    callback: &mut dyn FnMut(&[u32], &[Tuple]),
) {
    if atom_index == body.atoms.len() {
        finish_unbound(body, u, 0, binding, premises, callback);
        return;
    }
    match &body.atoms[atom_index] {
        CompiledAtom::Membership(rel, src_var, dst_var) => {
            let rel = *rel;
            let (src_var, dst_var) = (*src_var, *dst_var);

            if let Some((delta_pos, delta_tuples)) = delta {
                if delta_pos == membership_index {
                    for &(r, s, d) in delta_tuples {
                        if r == rel {
                            extend_membership(
                                body, u, store, delta, atom_index, membership_index,
                                rel, src_var, dst_var, s, d, binding, premises, callback,
                            );
                        }
                    }
                    return;
                }
            }
            match (binding[src_var], binding[dst_var]) {
                (Some(s), Some(d)) => {
                    if store.contains(&(rel, s, d)) {
                        extend_membership(
                            body, u, store, delta, atom_index, membership_index,
                            rel, src_var, dst_var, s, d, binding, premises, callback,
                        );
                    }
                }
                (Some(s), None) => {
                    if let Some(dsts) = store.by_rel_src[rel as usize].get(&s) {
                        for &d in dsts {
                            extend_membership(
                                body, u, store, delta, atom_index, membership_index,
                                rel, src_var, dst_var, s, d, binding, premises, callback,
                            );
                        }
                    }
                }
                (None, Some(d)) => {
                    if let Some(srcs) = store.by_rel_dst[rel as usize].get(&d) {
                        for &s in srcs {
                            extend_membership(
                                body, u, store, delta, atom_index, membership_index,
                                rel, src_var, dst_var, s, d, binding, premises, callback,
                            );
                        }
                    }
                }
                (None, None) => {
                    for &(s, d) in &store.by_rel[rel as usize] {
                        extend_membership(
                            body, u, store, delta, atom_index, membership_index,
                            rel, src_var, dst_var, s, d, binding, premises, callback,
                        );
                    }
                }
            }
        }
        CompiledAtom::TypeTest(var, sig) => match binding[*var] {
            Some(loc) => {
                if u.member_sets.get(sig).map(|m| m.contains(&loc)).unwrap_or(false) {
                    descend(
                        body,
                        u,
                        store,
                        delta,
                        atom_index + 1,
                        membership_index,
                        binding,
                        premises,
                        callback,
                    );
                }
            }
            None => {
                let Some(candidates) = u.members.get(sig) else {
                    return;
                };
                for &loc in candidates {
                    let saved = binding[*var];
                    if bind(u, body, *var, loc, binding) {
                        descend(
                            body,
                            u,
                            store,
                            delta,
                            atom_index + 1,
                            membership_index,
                            binding,
                            premises,
                            callback,
                        );
                    }
                    binding[*var] = saved;
                }
            }
        },
    }
}

/// Bind both endpoints of a membership atom and recurse; restores the
/// binding and premise stack on the way out.
#[allow(clippy::too_many_arguments)]
fn extend_membership(
    body: &CompiledBody,
    u: &Universe,
    store: &TupleStore,
    delta: Option<(usize, &[Tuple])>,
    atom_index: usize,
    membership_index: usize,
    rel: u32,
    src_var: usize,
    dst_var: usize,
    src: u32,
    dst: u32,
    binding: &mut Vec<Option<u32>>,
    premises: &mut Vec<Tuple>,
    callback: &mut dyn FnMut(&[u32], &[Tuple]),
) {
    let saved_src = binding[src_var];
    let saved_dst = binding[dst_var];
    if bind(u, body, src_var, src, binding) && bind(u, body, dst_var, dst, binding) {
        premises.push((rel, src, dst));
        descend(
            body,
            u,
            store,
            delta,
            atom_index + 1,
            membership_index + 1,
            binding,
            premises,
            callback,
        );
        premises.pop();
    }
    binding[src_var] = saved_src;
    binding[dst_var] = saved_dst;
}

/// Enumerate any variables not bound by the atoms over their sig members.
fn finish_unbound(
    body: &CompiledBody,
    u: &Universe,
    var: usize,
    binding: &mut Vec<Option<u32>>,
    premises: &[Tuple],
    callback: &mut dyn FnMut(&[u32], &[Tuple]),
) {
    if var == binding.len() {
        let bound: Vec<u32> = binding.iter().map(|b| b.expect("all vars bound")).collect();
        callback(&bound, premises);
        return;
    }
    if binding[var].is_some() {
        finish_unbound(body, u, var + 1, binding, premises, callback);
        return;
    }
    let Some(candidates) = u.members.get(&body.var_sigs[var]) else {
        return;
    };
    for &loc in candidates {
        binding[var] = Some(loc);
        finish_unbound(body, u, var + 1, binding, premises, callback);
        binding[var] = None;
    }
}

/// Bind `var` to `loc`, enforcing consistency with an existing binding and
/// the variable's sig.
fn bind(u: &Universe, body: &CompiledBody, var: usize, loc: u32, binding: &mut [Option<u32>]) -> bool {
    match binding[var] {
        Some(existing) => existing == loc,
        None => {
            let sig = &body.var_sigs[var];
            let ok = u
                .member_sets
                .get(sig)
                .map(|m| m.contains(&loc))
                .unwrap_or(false);
            if ok {
                binding[var] = Some(loc);
            }
            ok
        }
    }
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

struct CompiledRule<'a> {
    index: usize,
    rule: &'a Rule,
    body: CompiledBody,
    head: (u32, usize, usize),
}

/// Compute the least fixpoint of `core.rules` over the model's tuples plus
/// type facts. Assumes `check_model(model, h)` is clean; see [`analyze`].
pub fn infer(model: &TraceModel, core: &CoreSpec, h: &TypeHierarchy) -> Inference {
    let u = Universe::build(model, h);
    let mut store = TupleStore::new(u.relations.len());

    let mut given: Vec<Tuple> = model
        .tuples
        .iter()
        .filter_map(|t| u.intern_fact(&t.relation, &t.source, &t.target))
        .collect();
    given.sort();
    given.dedup();
    for tuple in &given {
        store.insert(*tuple);
    }

    let rules: Vec<CompiledRule> = core
        .rules
        .iter()
        .enumerate()
        .filter_map(|(index, rule)| {
            let body = compile_body(&rule.vars, &rule.body, &u)?;
            let var_index: HashMap<&str, usize> = rule
                .vars
                .iter()
                .enumerate()
                .map(|(i, v)| (v.name.as_str(), i))
                .collect();
            let head = (
                *u.rel_of.get(rule.head.relation.as_str())?,
                *var_index.get(rule.head.src.as_str())?,
                *var_index.get(rule.head.dst.as_str())?,
            );
            Some(CompiledRule {
                index,
                rule,
                body,
                head,
            })
        })
        .collect();

    // Per-relation head guards: the head tuple is kept only when its
    // endpoints conform to the relation's signature.
    let guards: Vec<(&HashSet<u32>, &HashSet<u32>)> = u
        .relations
        .iter()
        .map(|name| {
            let info = h.relation(name).expect("relation interned from hierarchy");
            (
                u.member_sets.get(&info.domain).expect("domain sig exists"),
                u.member_sets.get(&info.range).expect("range sig exists"),
            )
        })
        .collect();

    let mut derivations: BTreeMap<Tuple, (usize, Vec<Tuple>)> = BTreeMap::new();
    let mut warnings: BTreeSet<GuardWarning> = BTreeSet::new();
    let mut delta: Vec<Tuple> = Vec::new();
    let mut rounds = 0usize;
    let capacity = u.relations.len() * u.locations.len() * u.locations.len();

    loop {
        let mut candidates: BTreeMap<Tuple, (usize, Vec<Tuple>)> = BTreeMap::new();
        for compiled in &rules {
            let deltas: Vec<Option<(usize, &[Tuple])>> = if rounds == 0 {
                // First round evaluates every rule in full.
                vec![None]
            } else if compiled.body.membership_count == 0 {
                // Type-fact-only bodies never produce anything new after
                // the first round.
                continue;
            } else {
                (0..compiled.body.membership_count)
                    .map(|p| Some((p, delta.as_slice())))
                    .collect()
            };
            for delta_spec in deltas {
                let (head_rel, head_src, head_dst) = compiled.head;
                let guard = &guards[head_rel as usize];
                enumerate_matches(
                    &compiled.body,
                    &u,
                    &store,
                    delta_spec,
                    &mut |binding, premises| {
                        let src = binding[head_src];
                        let dst = binding[head_dst];
                        let tuple = (head_rel, src, dst);
                        if store.contains(&tuple) {
                            return;
                        }
                        if !guard.0.contains(&src) || !guard.1.contains(&dst) {
                            warnings.insert(GuardWarning {
                                rule_id: compiled.rule.id.clone(),
                                fact: u.extern_fact(tuple),
                                detail: "derived tuple skipped: endpoints do not fit the \
                                         relation signature"
                                    .to_string(),
                            });
                            return;
                        }
                        let candidate = (compiled.index, premises.to_vec());
                        candidates
                            .entry(tuple)
                            .and_modify(|existing| {
                                if candidate < *existing {
                                    *existing = candidate.clone();
                                }
                            })
                            .or_insert(candidate);
                    },
                );
            }
        }

        rounds += 1;
        if candidates.is_empty() {
            break;
        }
        delta = candidates.keys().copied().collect();
        for (tuple, derivation) in candidates {
            store.insert(tuple);
            derivations.entry(tuple).or_insert(derivation);
        }
        debug_assert!(rounds <= capacity + 1, "fixpoint exceeded tuple capacity");
    }

    let given_set: HashSet<Tuple> = given.iter().copied().collect();
    let mut inferred: BTreeSet<Fact> = BTreeSet::new();
    let mut graph = DerivationGraph::default();
    let mut sorted: Vec<Tuple> = store.all.iter().copied().collect();
    sorted.sort();
    for tuple in sorted {
        if given_set.contains(&tuple) {
            continue;
        }
        let fact = u.extern_fact(tuple);
        let (rule_index, premises) = derivations
            .get(&tuple)
            .expect("every inferred tuple has a derivation");
        graph.map.insert(
            fact.clone(),
            Derivation {
                conclusion: fact.clone(),
                rule_id: core.rules[*rule_index].id.clone(),
                premises: premises.iter().map(|p| u.extern_fact(*p)).collect(),
            },
        );
        inferred.insert(fact);
    }

    Inference {
        inferred,
        derivations: graph,
        warnings: warnings.into_iter().collect(),
        rounds,
    }
}

// ---------------------------------------------------------------------------
// Consistency
// ---------------------------------------------------------------------------

/// Evaluate every constraint over `closure` (the given tuples plus the
/// inferred ones). Violations come back sorted by (constraint id, binding).
pub fn check_consistency(
    model: &TraceModel,
    core: &CoreSpec,
    h: &TypeHierarchy,
    closure: &BTreeSet<Fact>,
) -> Vec<Violation> {
    let u = Universe::build(model, h);
    let mut store = TupleStore::new(u.relations.len());
    let mut interned: Vec<Tuple> = closure
        .iter()
        .filter_map(|f| u.intern_fact(&f.relation, &f.source, &f.target))
        .collect();
    interned.sort();
    for tuple in interned {
        store.insert(tuple);
    }

    let mut violations = Vec::new();
    for constraint in &core.constraints {
        check_one_constraint(constraint, &u, &store, &mut violations);
    }
    violations.sort();
    violations.dedup();
    violations
}

fn check_one_constraint(
    constraint: &Constraint,
    u: &Universe,
    store: &TupleStore,
    out: &mut Vec<Violation>,
) {
    let Some(body) = compile_body(&constraint.vars, &constraint.body, u) else {
        return;
    };
    let var_index: HashMap<&str, usize> = constraint
        .vars
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect();

    enumerate_matches(&body, u, store, None, &mut |binding, premises| {
        let mut involved: Vec<Fact> = premises.iter().map(|p| u.extern_fact(*p)).collect();
        let violated = match &constraint.head {
            ConstraintHead::Deny => true,
            ConstraintHead::Forbid { src, dst, relation } => {
                let Some(&rel) = u.rel_of.get(relation.as_str()) else {
                    return;
                };
                let (Some(&s), Some(&d)) = (var_index.get(src.as_str()), var_index.get(dst.as_str()))
                else {
                    return;
                };
                let forbidden = (rel, binding[s], binding[d]);
                if store.contains(&forbidden) {
                    involved.push(u.extern_fact(forbidden));
                    true
                } else {
                    false
                }
            }
            ConstraintHead::MustEqual { left, right } => {
                let (Some(&l), Some(&r)) =
                    (var_index.get(left.as_str()), var_index.get(right.as_str()))
                else {
                    return;
                };
                binding[l] != binding[r]
            }
        };
        if violated {
            involved.sort();
            involved.dedup();
            out.push(Violation {
                constraint_id: constraint.id.clone(),
                binding: constraint
                    .vars
                    .iter()
                    .zip(binding)
                    .map(|(v, loc)| (v.name.clone(), u.locations[*loc as usize].clone()))
                    .collect(),
                involved,
            });
        }
    });
}

// ---------------------------------------------------------------------------
// Diagnosis
// ---------------------------------------------------------------------------

/// Shrink the given tuples to a subset-minimal support for `violation`.
///
/// Seeds with the full given set, then walks it in canonical order dropping
/// every tuple whose removal keeps the violation derivable (re-running
/// inference and the single constraint each probe). The result is
/// deterministic. Each kept tuple was tested against a superset of the
/// final support; rules are monotone, so it stays necessary for the
/// support itself. The support therefore reproduces the violation on its
/// own and contains no droppable element. When the violation has a single
/// minimal cause this is exactly the set whose members each resolve the
/// violation when deleted from the model; with several independent causes
/// the support is one of them (the canonically last to survive deletion).
pub fn diagnose(
    model: &TraceModel,
    core: &CoreSpec,
    h: &TypeHierarchy,
    violation: &Violation,
) -> Result<Diagnosis, EngineError> {
    let Some(constraint) = core.constraints.iter().find(|c| c.id == violation.constraint_id)
    else {
        return Err(EngineError::StaleViolation(violation.constraint_id.clone()));
    };

    let reproduces = |tuples: &[TraceTuple]| -> bool {
        let candidate = TraceModel {
            name: model.name.clone(),
            locations: model.locations.clone(),
            tuples: tuples.to_vec(),
        };
        let inference = infer(&candidate, core, h);
        let mut closure: BTreeSet<Fact> = candidate.tuples.iter().map(|t| t.fact()).collect();
        closure.extend(inference.inferred);

        let u = Universe::build(&candidate, h);
        let mut store = TupleStore::new(u.relations.len());
        let mut interned: Vec<Tuple> = closure
            .iter()
            .filter_map(|f| u.intern_fact(&f.relation, &f.source, &f.target))
            .collect();
        interned.sort();
        for tuple in interned {
            store.insert(tuple);
        }
        let mut found = Vec::new();
        check_one_constraint(constraint, &u, &store, &mut found);
        found
            .iter()
            .any(|v| v.constraint_id == violation.constraint_id && v.binding == violation.binding)
    };

    let mut support: Vec<TraceTuple> = model.tuples.clone();
    support.sort_by_key(|t| t.fact());
    if !reproduces(&support) {
        return Err(EngineError::StaleViolation(violation.constraint_id.clone()));
    }

    let mut index = 0;
    while index < support.len() {
        let mut probe = support.clone();
        probe.remove(index);
        if reproduces(&probe) {
            support = probe;
        } else {
            index += 1;
        }
    }

    Ok(Diagnosis {
        violation: violation.clone(),
        support,
    })
}

// ---------------------------------------------------------------------------
// Full analysis and slicing
// ---------------------------------------------------------------------------

/// Type-check, infer, check consistency, and diagnose every violation.
pub fn analyze(
    model: &TraceModel,
    core: &CoreSpec,
    h: &TypeHierarchy,
) -> Result<AnalysisResult, EngineError> {
    let type_errors = check_model(model, h);
    if !type_errors.is_empty() {
        return Err(EngineError::IllTyped(type_errors));
    }

    let inference = infer(model, core, h);
    let mut closure: BTreeSet<Fact> = model.tuples.iter().map(|t| t.fact()).collect();
    closure.extend(inference.inferred.iter().cloned());
    let violations = check_consistency(model, core, h, &closure);
    let diagnoses = violations
        .iter()
        .map(|v| diagnose(model, core, h, v).expect("violation from this very closure"))
        .collect();

    let stats = Stats {
        assigned: model.tuples.len(),
        inferred: inference.inferred.len(),
        violations: violations.len(),
    };
    Ok(AnalysisResult {
        inferred: inference
            .inferred
            .iter()
            .map(|f| TraceTuple::new(&f.relation, &f.source, &f.target, Provenance::Inferred))
            .collect(),
        derivations: inference.derivations,
        violations,
        diagnoses,
        warnings: inference.warnings,
        stats,
    })
}

/// The closure restricted to one location: every tuple with `loc` as an
/// endpoint, plus the derivations backing the premise trees of the inferred
/// ones (followed transitively).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slice {
    pub location: String,
    pub tuples: Vec<TraceTuple>,
    pub derivations: DerivationGraph,
}

pub fn slice_location(
    result: &AnalysisResult,
    model: &TraceModel,
    loc: &str,
) -> Result<Slice, EngineError> {
    if model.location(loc).is_none() {
        return Err(EngineError::UnknownLocation(loc.to_string()));
    }

    let mut tuples: Vec<TraceTuple> = model
        .tuples
        .iter()
        .chain(result.inferred.iter())
        .filter(|t| t.source == loc || t.target == loc)
        .cloned()
        .collect();
    tuples.sort_by_key(|t| t.fact());

    let mut derivations = DerivationGraph::default();
    let mut queue: Vec<Fact> = tuples.iter().map(|t| t.fact()).collect();
    while let Some(fact) = queue.pop() {
        if let Some(derivation) = result.derivations.get(&fact) {
            if derivations.map.insert(fact, derivation.clone()).is_none() {
                queue.extend(derivation.premises.iter().cloned());
            }
        }
    }

    Ok(Slice {
        location: loc.to_string(),
        tuples,
        derivations,
    })
}
