//! Recursive descent parser for `.tarski` specification files.
//!
//! Parsing is total: every failure is collected as a [`ParseError`] with a
//! span, and the parser resynchronizes at the next top-level declaration so
//! one mistake does not hide the rest of the file.

use crate::dsl::ast::*;
use crate::dsl::lexer::{lex, Token, TokenKind};
use crate::span::SourceSpan;
use crate::ParseError;

/// Parse a specification. Returns the AST only when the input had no
/// lexical or syntactic errors.
pub fn parse_spec(text: &str, file_name: &str) -> Result<SpecAst, Vec<ParseError>> {
    let (tokens, mut errors) = lex(text, file_name);
    let mut parser = Parser {
        tokens,
        pos: 0,
        file: file_name.to_string(),
        errors: Vec::new(),
    };
    let ast = parser.parse_spec();
    errors.append(&mut parser.errors);
    if errors.is_empty() {
        Ok(ast)
    } else {
        Err(errors)
    }
}

pub(crate) struct Parser {
    pub(crate) tokens: Vec<Token>,
    pub(crate) pos: usize,
    pub(crate) file: String,
    pub(crate) errors: Vec<ParseError>,
}

impl Parser {
    fn parse_spec(&mut self) -> SpecAst {
        let mut ast = SpecAst::default();
        while !self.at_end() {
            match self.peek_ident() {
                Some("abstract") | Some("sig") => {
                    if let Some(sig) = self.parse_sig() {
                        ast.sigs.push(sig);
                    } else {
                        self.recover_to_decl();
                    }
                }
                Some("fact") => {
                    if let Some(fact) = self.parse_fact() {
                        ast.facts.push(fact);
                    } else {
                        self.recover_to_decl();
                    }
                }
                _ => {
                    let span = self.current_span();
                    self.error(
                        format!(
                            "expected `sig` or `fact`, found {}",
                            self.describe_current()
                        ),
                        span,
                    );
                    self.advance();
                    self.recover_to_decl();
                }
            }
        }
        ast
    }

    fn parse_sig(&mut self) -> Option<SigDecl> {
        let start = self.current_span();
        let is_abstract = self.eat_keyword("abstract");
        self.expect_keyword("sig")?;
        let name = self.expect_ident("signature name")?;

        let parent = if self.eat_keyword("extends") {
            Some((self.expect_ident("parent signature name")?, ParentKind::Extends))
        } else if self.peek_ident() == Some("in") {
            self.advance();
            Some((self.expect_ident("parent signature name")?, ParentKind::Subset))
        } else {
            None
        };

        let open = self.current_span();
        self.expect_token(TokenKind::LBrace, "`{`")?;
        let mut fields = Vec::new();
        loop {
            if self.eat_token(&TokenKind::RBrace) {
                break;
            }
            if self.at_end() {
                self.error("unterminated signature block", open);
                return None;
            }
            let field_span = self.current_span();
            let field_name = self.expect_ident("field name")?;
            self.expect_token(TokenKind::Colon, "`:`")?;
            if !self.eat_keyword("set") {
                // Only binary `set` fields exist in this language; anything
                // else (`one`, `lone`, a bare sig) is rejected here.
                let span = self.current_span();
                self.error(
                    format!(
                        "expected `set` (only `set`-multiplicity binary fields are supported), \
                         found {}",
                        self.describe_current()
                    ),
                    span,
                );
                return None;
            }
            let target = self.expect_ident("field target signature")?;
            fields.push(FieldDecl {
                name: field_name,
                target,
                span: field_span,
            });
            // Field separator comma is optional before `}`.
            self.eat_token(&TokenKind::Comma);
        }

        let location = if self.eat_token(&TokenKind::At) {
            let kw = self.expect_ident("`location`")?;
            if kw != "location" {
                let span = self.prev_span();
                self.error(format!("expected `location` after `@`, found `{kw}`"), span);
                return None;
            }
            self.expect_token(TokenKind::LParen, "`(`")?;
            let kind_name = self.expect_ident("location kind")?;
            let kind = match LocationKind::parse(&kind_name) {
                Some(kind) => kind,
                None => {
                    let span = self.prev_span();
                    self.error(
                        format!(
                            "unknown location kind `{kind_name}` (expected `text`, `code` or \
                             `model`)"
                        ),
                        span,
                    );
                    return None;
                }
            };
            self.expect_token(TokenKind::RParen, "`)`")?;
            Some(kind)
        } else {
            None
        };

        Some(SigDecl {
            name,
            is_abstract,
            parent,
            fields,
            location,
            span: start,
        })
    }

    fn parse_fact(&mut self) -> Option<FactDecl> {
        let start = self.current_span();
        self.expect_keyword("fact")?;
        let name = match self.peek() {
            Some(TokenKind::Ident(_)) => Some(self.expect_ident("fact name")?),
            _ => None,
        };
        let open = self.current_span();
        self.expect_token(TokenKind::LBrace, "`{`")?;
        let mut formulas = Vec::new();
        loop {
            if self.eat_token(&TokenKind::RBrace) {
                break;
            }
            if self.at_end() {
                self.error("unterminated fact block", open);
                return None;
            }
            formulas.push(self.parse_formula()?);
        }
        Some(FactDecl {
            name,
            formulas,
            span: start,
        })
    }

    fn parse_formula(&mut self) -> Option<Formula> {
        let span = self.current_span();
        match self.peek_ident() {
            Some("all") => self.parse_quantified(span).map(Formula::Quantified),
            Some("some") | Some("no") | Some("one") | Some("lone") => {
                self.error(
                    format!(
                        "only universal quantification is supported, found `{}`",
                        self.peek_ident().unwrap_or_default()
                    ),
                    span,
                );
                None
            }
            Some(word) => match MacroKind::parse(word) {
                Some(kind) => {
                    self.advance();
                    self.parse_macro(kind, span).map(Formula::Macro)
                }
                None => {
                    self.error(
                        format!("expected a formula (`all ...` or a property macro), found `{word}`"),
                        span,
                    );
                    None
                }
            },
            None => {
                self.error(
                    format!("expected a formula, found {}", self.describe_current()),
                    span,
                );
                None
            }
        }
    }

    fn parse_macro(&mut self, kind: MacroKind, span: SourceSpan) -> Option<MacroFormula> {
        self.expect_token(TokenKind::LBracket, "`[`")?;
        let mut relations = vec![self.expect_ident("relation name")?];
        while self.eat_token(&TokenKind::Comma) {
            relations.push(self.expect_ident("relation name")?);
        }
        self.expect_token(TokenKind::RBracket, "`]`")?;
        if relations.len() != kind.arity() {
            self.error(
                format!(
                    "`{}` takes {} relation{}, found {}",
                    kind.as_str(),
                    kind.arity(),
                    if kind.arity() == 1 { "" } else { "s" },
                    relations.len()
                ),
                span,
            );
            return None;
        }
        Some(MacroFormula {
            kind,
            relations,
            span,
        })
    }

    fn parse_quantified(&mut self, span: SourceSpan) -> Option<QuantifiedFormula> {
        self.expect_keyword("all")?;
        let mut vars = Vec::new();
        loop {
            let mut names = vec![self.expect_ident("variable name")?];
            while self.eat_token(&TokenKind::Comma) {
                names.push(self.expect_ident("variable name")?);
            }
            self.expect_token(TokenKind::Colon, "`:`")?;
            let sig = self.expect_ident("signature name")?;
            for name in names {
                vars.push(TypedVar {
                    name,
                    sig: sig.clone(),
                });
            }
            if !self.eat_token(&TokenKind::Comma) {
                break;
            }
        }
        self.expect_token(TokenKind::Pipe, "`|`")?;
        let body = self.parse_or()?;
        self.expect_keyword("implies")?;
        let mut head = vec![self.parse_head_atom()?];
        while self.peek_ident() == Some("or") || self.peek_ident() == Some("and") {
            self.advance();
            head.push(self.parse_head_atom()?);
        }
        Some(QuantifiedFormula {
            vars,
            body,
            head,
            span,
        })
    }

    /// Body expressions flatten straight into DNF: `or` concatenates
    /// disjunct lists, `and` distributes by cross product.
    fn parse_or(&mut self) -> Option<Vec<Vec<AtomAst>>> {
        let mut disjuncts = self.parse_and()?;
        while self.peek_ident() == Some("or") {
            self.advance();
            disjuncts.extend(self.parse_and()?);
        }
        Some(disjuncts)
    }

    fn parse_and(&mut self) -> Option<Vec<Vec<AtomAst>>> {
        let mut acc = self.parse_primary()?;
        while self.peek_ident() == Some("and") {
            self.advance();
            let rhs = self.parse_primary()?;
            let mut product = Vec::with_capacity(acc.len() * rhs.len());
            for left in &acc {
                for right in &rhs {
                    let mut conj = left.clone();
                    conj.extend(right.iter().cloned());
                    product.push(conj);
                }
            }
            acc = product;
        }
        Some(acc)
    }

    fn parse_primary(&mut self) -> Option<Vec<Vec<AtomAst>>> {
        if self.eat_token(&TokenKind::LParen) {
            let inner = self.parse_or()?;
            self.expect_token(TokenKind::RParen, "`)`")?;
            Some(inner)
        } else {
            let atom = self.parse_atom()?;
            Some(vec![vec![atom]])
        }
    }

    fn parse_atom(&mut self) -> Option<AtomAst> {
        let span = self.current_span();
        let first = self.expect_ident("variable name")?;
        if self.eat_token(&TokenKind::Arrow) {
            let second = self.expect_ident("variable name")?;
            let negated = self.eat_keyword("not");
            self.expect_keyword("in")?;
            let relation = self.expect_ident("relation name")?;
            Some(AtomAst {
                kind: AtomKind::Membership {
                    src: first,
                    dst: second,
                    relation,
                },
                negated,
                span,
            })
        } else {
            let negated = self.eat_keyword("not");
            self.expect_keyword("in")?;
            let sig = self.expect_ident("signature name")?;
            Some(AtomAst {
                kind: AtomKind::TypeTest { var: first, sig },
                negated,
                span,
            })
        }
    }

    fn parse_head_atom(&mut self) -> Option<HeadAtomAst> {
        let span = self.current_span();
        if self.eat_keyword("none") {
            return Some(HeadAtomAst {
                kind: HeadKind::Deny,
                span,
            });
        }
        let first = self.expect_ident("variable name")?;
        if self.eat_token(&TokenKind::Equals) {
            let right = self.expect_ident("variable name")?;
            return Some(HeadAtomAst {
                kind: HeadKind::Equal { left: first, right },
                span,
            });
        }
        self.expect_token(TokenKind::Arrow, "`->` or `=`")?;
        let second = self.expect_ident("variable name")?;
        let negated = self.eat_keyword("not");
        self.expect_keyword("in")?;
        let relation = self.expect_ident("relation name")?;
        Some(HeadAtomAst {
            kind: HeadKind::Membership {
                src: first,
                dst: second,
                relation,
                negated,
            },
            span,
        })
    }

    /// Skip tokens until the next plausible declaration start.
    fn recover_to_decl(&mut self) {
        while !self.at_end() {
            if matches!(self.peek_ident(), Some("sig") | Some("abstract") | Some("fact")) {
                return;
            }
            self.advance();
        }
    }

    // -- token helpers ------------------------------------------------------

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    pub(crate) fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    pub(crate) fn peek_ident(&self) -> Option<&str> {
        match self.peek() {
            Some(TokenKind::Ident(s)) => Some(s.as_str()),
            _ => None,
        }
    }

    pub(crate) fn advance(&mut self) {
        self.pos += 1;
    }

    pub(crate) fn current_span(&self) -> SourceSpan {
        match self.tokens.get(self.pos) {
            Some(t) => t.span.clone(),
            None => self.eof_span(),
        }
    }

    pub(crate) fn prev_span(&self) -> SourceSpan {
        match self.tokens.get(self.pos.saturating_sub(1)) {
            Some(t) => t.span.clone(),
            None => self.eof_span(),
        }
    }

    fn eof_span(&self) -> SourceSpan {
        match self.tokens.last() {
            Some(t) => {
                let mut span = t.span.clone();
                span.column += span.length;
                span.length = 0;
                span
            }
            None => SourceSpan::new(&self.file, 1, 1, 0),
        }
    }

    pub(crate) fn describe_current(&self) -> String {
        match self.peek() {
            Some(kind) => kind.describe(),
            None => "end of input".to_string(),
        }
    }

    pub(crate) fn error(&mut self, message: impl Into<String>, span: SourceSpan) {
        self.errors.push(ParseError::new(message, span));
    }

    pub(crate) fn eat_keyword(&mut self, word: &str) -> bool {
        if self.peek_ident() == Some(word) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_keyword(&mut self, word: &str) -> Option<()> {
        if self.eat_keyword(word) {
            Some(())
        } else {
            let span = self.current_span();
            self.error(
                format!("expected `{word}`, found {}", self.describe_current()),
                span,
            );
            None
        }
    }

    pub(crate) fn eat_token(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_token(&mut self, kind: TokenKind, what: &str) -> Option<()> {
        if self.eat_token(&kind) {
            Some(())
        } else {
            let span = self.current_span();
            self.error(
                format!("expected {what}, found {}", self.describe_current()),
                span,
            );
            None
        }
    }

    pub(crate) fn expect_ident(&mut self, what: &str) -> Option<String> {
        match self.peek() {
            Some(TokenKind::Ident(s)) => {
                let s = s.clone();
                self.advance();
                Some(s)
            }
            _ => {
                let span = self.current_span();
                self.error(
                    format!("expected {what}, found {}", self.describe_current()),
                    span,
                );
                None
            }
        }
    }
}
