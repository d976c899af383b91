//! Syntax tree for the specification language.
//!
//! The tree stores declarations in source order together with their spans.
//! Implication bodies are kept in disjunctive normal form: a body is a list
//! of disjuncts, each disjunct a list of atoms that are understood
//! conjunctively. The parser performs the flattening, so `(p or q) and r`
//! arrives here as `[[p, r], [q, r]]`.

use std::fmt;

use crate::span::SourceSpan;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpecAst {
    pub sigs: Vec<SigDecl>,
    pub facts: Vec<FactDecl>,
}

/// How a child signature was attached to its parent. `in` subsets are
/// typed exactly like `extends` children; the distinction is kept only so
/// the printer can reproduce the source form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParentKind {
    Extends,
    Subset,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigDecl {
    pub name: String,
    pub is_abstract: bool,
    pub parent: Option<(String, ParentKind)>,
    pub fields: Vec<FieldDecl>,
    pub location: Option<LocationKind>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub target: String,
    pub span: SourceSpan,
}

/// Payload schema class a signature's locations must follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LocationKind {
    Text,
    Code,
    Model,
}

impl LocationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LocationKind::Text => "text",
            LocationKind::Code => "code",
            LocationKind::Model => "model",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "text" => Some(LocationKind::Text),
            "code" => Some(LocationKind::Code),
            "model" => Some(LocationKind::Model),
            _ => None,
        }
    }
}

impl fmt::Display for LocationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactDecl {
    pub name: Option<String>,
    pub formulas: Vec<Formula>,
    pub span: SourceSpan,
}

impl FactDecl {
    /// Stable identifier used as the prefix of rule/constraint ids.
    /// Unnamed facts are keyed by the line they start on.
    pub fn id(&self) -> String {
        match &self.name {
            Some(name) => name.clone(),
            None => format!("fact@{}", self.span.line),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Quantified(QuantifiedFormula),
    Macro(MacroFormula),
}

impl Formula {
    pub fn span(&self) -> &SourceSpan {
        match self {
            Formula::Quantified(q) => &q.span,
            Formula::Macro(m) => &m.span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantifiedFormula {
    pub vars: Vec<TypedVar>,
    /// Disjunctive normal form: outer = disjuncts, inner = conjuncts.
    pub body: Vec<Vec<AtomAst>>,
    /// Head disjuncts. A well-formed formula has exactly one; more survive
    /// parsing so desugaring can reject them with a span.
    pub head: Vec<HeadAtomAst>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedVar {
    pub name: String,
    pub sig: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomAst {
    pub kind: AtomKind,
    /// `x -> y not in R` forms; rejected during desugaring.
    pub negated: bool,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AtomKind {
    /// `x -> y in R`
    Membership {
        src: String,
        dst: String,
        relation: String,
    },
    /// `x in S`
    TypeTest { var: String, sig: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadAtomAst {
    pub kind: HeadKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HeadKind {
    /// `x -> y in R` derives a tuple; with `negated` it forbids one.
    Membership {
        src: String,
        dst: String,
        relation: String,
        negated: bool,
    },
    /// `x = y`
    Equal { left: String, right: String },
    /// `none`: any body match is itself a violation.
    Deny,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacroKind {
    Irreflexive,
    Antisymmetric,
    Symmetric,
    Transitive,
    Reflexive,
    Injective,
    Functional,
    Excludes,
}

impl MacroKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MacroKind::Irreflexive => "irreflexive",
            MacroKind::Antisymmetric => "antisymmetric",
            MacroKind::Symmetric => "symmetric",
            MacroKind::Transitive => "transitive",
            MacroKind::Reflexive => "reflexive",
            MacroKind::Injective => "injective",
            MacroKind::Functional => "functional",
            MacroKind::Excludes => "excludes",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "irreflexive" => Some(MacroKind::Irreflexive),
            "antisymmetric" => Some(MacroKind::Antisymmetric),
            "symmetric" => Some(MacroKind::Symmetric),
            "transitive" => Some(MacroKind::Transitive),
            "reflexive" => Some(MacroKind::Reflexive),
            "injective" => Some(MacroKind::Injective),
            "functional" => Some(MacroKind::Functional),
            "excludes" => Some(MacroKind::Excludes),
            _ => None,
        }
    }

    /// Number of relation arguments the macro takes.
    pub fn arity(self) -> usize {
        match self {
            MacroKind::Excludes => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MacroFormula {
    pub kind: MacroKind,
    pub relations: Vec<String>,
    pub span: SourceSpan,
}

impl SpecAst {
    /// Replaces every span with a synthetic placeholder. Used to compare
    /// trees that came from different source layouts.
    pub fn strip_spans(&mut self) {
        for sig in &mut self.sigs {
            sig.span = SourceSpan::synthetic();
            for field in &mut sig.fields {
                field.span = SourceSpan::synthetic();
            }
        }
        for fact in &mut self.facts {
            fact.span = SourceSpan::synthetic();
            for formula in &mut fact.formulas {
                match formula {
                    Formula::Quantified(q) => {
                        q.span = SourceSpan::synthetic();
                        for disjunct in &mut q.body {
                            for atom in disjunct {
                                atom.span = SourceSpan::synthetic();
                            }
                        }
                        for head in &mut q.head {
                            head.span = SourceSpan::synthetic();
                        }
                    }
                    Formula::Macro(m) => m.span = SourceSpan::synthetic(),
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Pretty printing. The output re-parses to a structurally equal tree; `and`
// binds tighter than `or`, so DNF bodies print without parentheses.
// ---------------------------------------------------------------------------

impl fmt::Display for SpecAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for sig in &self.sigs {
            if !first {
                writeln!(f)?;
            }
            first = false;
            write!(f, "{sig}")?;
        }
        for fact in &self.facts {
            if !first {
                writeln!(f)?;
            }
            first = false;
            write!(f, "{fact}")?;
        }
        Ok(())
    }
}

impl fmt::Display for SigDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_abstract {
            write!(f, "abstract ")?;
        }
        write!(f, "sig {}", self.name)?;
        if let Some((parent, kind)) = &self.parent {
            let keyword = match kind {
                ParentKind::Extends => "extends",
                ParentKind::Subset => "in",
            };
            write!(f, " {keyword} {parent}")?;
        }
        if self.fields.is_empty() {
            write!(f, " {{}}")?;
        } else {
            writeln!(f, " {{")?;
            for (i, field) in self.fields.iter().enumerate() {
                let sep = if i + 1 < self.fields.len() { "," } else { "" };
                writeln!(f, "  {}: set {}{sep}", field.name, field.target)?;
            }
            write!(f, "}}")?;
        }
        if let Some(kind) = self.location {
            write!(f, " @location({kind})")?;
        }
        writeln!(f)
    }
}

impl fmt::Display for FactDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fact")?;
        if let Some(name) = &self.name {
            write!(f, " {name}")?;
        }
        writeln!(f, " {{")?;
        for formula in &self.formulas {
            writeln!(f, "  {formula}")?;
        }
        writeln!(f, "}}")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Quantified(q) => write!(f, "{q}"),
            Formula::Macro(m) => write!(f, "{m}"),
        }
    }
}

impl fmt::Display for QuantifiedFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "all ")?;
        // Group consecutive variables of the same sig: `all a, b, c: T |`.
        let mut i = 0;
        while i < self.vars.len() {
            let mut j = i;
            while j + 1 < self.vars.len() && self.vars[j + 1].sig == self.vars[i].sig {
                j += 1;
            }
            if i > 0 {
                write!(f, ", ")?;
            }
            let names: Vec<&str> = self.vars[i..=j].iter().map(|v| v.name.as_str()).collect();
            write!(f, "{}: {}", names.join(", "), self.vars[i].sig)?;
            i = j + 1;
        }
        write!(f, " | ")?;
        for (i, disjunct) in self.body.iter().enumerate() {
            if i > 0 {
                write!(f, " or ")?;
            }
            for (j, atom) in disjunct.iter().enumerate() {
                if j > 0 {
                    write!(f, " and ")?;
                }
                write!(f, "{atom}")?;
            }
        }
        write!(f, " implies ")?;
        for (i, head) in self.head.iter().enumerate() {
            if i > 0 {
                write!(f, " or ")?;
            }
            write!(f, "{head}")?;
        }
        Ok(())
    }
}

impl fmt::Display for AtomAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let not = if self.negated { "not " } else { "" };
        match &self.kind {
            AtomKind::Membership { src, dst, relation } => {
                write!(f, "{src}->{dst} {not}in {relation}")
            }
            AtomKind::TypeTest { var, sig } => write!(f, "{var} {not}in {sig}"),
        }
    }
}

impl fmt::Display for HeadAtomAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            HeadKind::Membership {
                src,
                dst,
                relation,
                negated,
            } => {
                let not = if *negated { "not " } else { "" };
                write!(f, "{src}->{dst} {not}in {relation}")
            }
            HeadKind::Equal { left, right } => write!(f, "{left} = {right}"),
            HeadKind::Deny => write!(f, "none"),
        }
    }
}

impl fmt::Display for MacroFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.kind.as_str(), self.relations.join(", "))
    }
}
