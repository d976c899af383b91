//! Tokenizer shared by the specification and trace-model parsers.
//!
//! Keywords are not reserved here; parsers match identifier text in
//! context. Lexing is total: bad input produces error tokens in the error
//! list and scanning continues.

use crate::span::SourceSpan;
use crate::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(u64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    Comma,
    Pipe,
    Arrow,
    Equals,
    At,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("`{s}`"),
            TokenKind::Int(n) => format!("`{n}`"),
            TokenKind::Str(_) => "string literal".to_string(),
            TokenKind::LBrace => "`{`".to_string(),
            TokenKind::RBrace => "`}`".to_string(),
            TokenKind::LParen => "`(`".to_string(),
            TokenKind::RParen => "`)`".to_string(),
            TokenKind::LBracket => "`[`".to_string(),
            TokenKind::RBracket => "`]`".to_string(),
            TokenKind::Colon => "`:`".to_string(),
            TokenKind::Comma => "`,`".to_string(),
            TokenKind::Pipe => "`|`".to_string(),
            TokenKind::Arrow => "`->`".to_string(),
            TokenKind::Equals => "`=`".to_string(),
            TokenKind::At => "`@`".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    column: u32,
    file: &'a str,
}

/// Tokenize `text`. Returns all tokens that could be recognized plus any
/// lexical errors; both may be non-empty at once.
pub fn lex(text: &str, file: &str) -> (Vec<Token>, Vec<ParseError>) {
    let mut lexer = Lexer {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
        file,
    };
    let mut tokens = Vec::new();
    let mut errors = Vec::new();

    while let Some(c) = lexer.peek() {
        let (line, column) = (lexer.line, lexer.column);
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                lexer.bump();
            }
            '/' if lexer.peek_at(1) == Some('/') => {
                while let Some(c) = lexer.peek() {
                    if c == '\n' {
                        break;
                    }
                    lexer.bump();
                }
            }
            '/' if lexer.peek_at(1) == Some('*') => {
                lexer.bump();
                lexer.bump();
                let mut closed = false;
                while let Some(c) = lexer.peek() {
                    if c == '*' && lexer.peek_at(1) == Some('/') {
                        lexer.bump();
                        lexer.bump();
                        closed = true;
                        break;
                    }
                    lexer.bump();
                }
                if !closed {
                    errors.push(ParseError::new(
                        "unterminated block comment",
                        lexer.span_at(line, column, 2),
                    ));
                }
            }
            '"' => {
                lexer.bump();
                let mut value = String::new();
                let mut closed = false;
                while let Some(c) = lexer.peek() {
                    match c {
                        '"' => {
                            lexer.bump();
                            closed = true;
                            break;
                        }
                        '\n' => break,
                        '\\' => {
                            lexer.bump();
                            match lexer.peek() {
                                Some('"') => value.push('"'),
                                Some('\\') => value.push('\\'),
                                Some('n') => value.push('\n'),
                                Some(other) => {
                                    value.push('\\');
                                    value.push(other);
                                }
                                None => break,
                            }
                            lexer.bump();
                        }
                        other => {
                            value.push(other);
                            lexer.bump();
                        }
                    }
                }
                let length = (value.chars().count() + 2) as u32;
                if closed {
                    tokens.push(Token {
                        kind: TokenKind::Str(value),
                        span: lexer.span_at(line, column, length),
                    });
                } else {
                    errors.push(ParseError::new(
                        "unterminated string literal",
                        lexer.span_at(line, column, 1),
                    ));
                }
            }
            c if c.is_ascii_digit() => {
                let mut text = String::new();
                while let Some(c) = lexer.peek() {
                    if c.is_ascii_digit() {
                        text.push(c);
                        lexer.bump();
                    } else {
                        break;
                    }
                }
                let span = lexer.span_at(line, column, text.chars().count() as u32);
                match text.parse::<u64>() {
                    Ok(n) => tokens.push(Token {
                        kind: TokenKind::Int(n),
                        span,
                    }),
                    Err(_) => errors.push(ParseError::new("integer literal out of range", span)),
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut text = String::new();
                while let Some(c) = lexer.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        text.push(c);
                        lexer.bump();
                    } else {
                        break;
                    }
                }
                let span = lexer.span_at(line, column, text.chars().count() as u32);
                tokens.push(Token {
                    kind: TokenKind::Ident(text),
                    span,
                });
            }
            '-' if lexer.peek_at(1) == Some('>') => {
                lexer.bump();
                lexer.bump();
                tokens.push(Token {
                    kind: TokenKind::Arrow,
                    span: lexer.span_at(line, column, 2),
                });
            }
            _ => {
                let kind = match c {
                    '{' => Some(TokenKind::LBrace),
                    '}' => Some(TokenKind::RBrace),
                    '(' => Some(TokenKind::LParen),
                    ')' => Some(TokenKind::RParen),
                    '[' => Some(TokenKind::LBracket),
                    ']' => Some(TokenKind::RBracket),
                    ':' => Some(TokenKind::Colon),
                    ',' => Some(TokenKind::Comma),
                    '|' => Some(TokenKind::Pipe),
                    '=' => Some(TokenKind::Equals),
                    '@' => Some(TokenKind::At),
                    _ => None,
                };
                lexer.bump();
                match kind {
                    Some(kind) => tokens.push(Token {
                        kind,
                        span: lexer.span_at(line, column, 1),
                    }),
                    None => errors.push(ParseError::new(
                        format!("unexpected character `{c}`"),
                        lexer.span_at(line, column, 1),
                    )),
                }
            }
        }
    }

    (tokens, errors)
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) {
        if let Some(c) = self.peek() {
            self.pos += 1;
            if c == '\n' {
                self.line += 1;
                self.column = 1;
            } else {
                self.column += 1;
            }
        }
    }

    fn span_at(&self, line: u32, column: u32, length: u32) -> SourceSpan {
        SourceSpan::new(self.file, line, column, length)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_declaration_tokens() {
        let (tokens, errors) = lex("sig R { f: set T } // note", "t.tarski");
        assert!(errors.is_empty());
        let kinds: Vec<_> = tokens.iter().map(|t| t.kind.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                TokenKind::Ident("sig".into()),
                TokenKind::Ident("R".into()),
                TokenKind::LBrace,
                TokenKind::Ident("f".into()),
                TokenKind::Colon,
                TokenKind::Ident("set".into()),
                TokenKind::Ident("T".into()),
                TokenKind::RBrace,
            ]
        );
    }

    #[test]
    fn reports_bad_character_with_position() {
        let (_, errors) = lex("sig A {}\n  $", "t.tarski");
        assert_eq!(errors.len(), 1);
        assert_eq!(errors[0].span.line, 2);
        assert_eq!(errors[0].span.column, 3);
    }

    #[test]
    fn arrow_and_block_comment() {
        let (tokens, errors) = lex("/* x\ny */ a -> b", "t");
        assert!(errors.is_empty());
        assert_eq!(tokens.len(), 3);
        assert_eq!(tokens[1].kind, TokenKind::Arrow);
        assert_eq!(tokens[2].span.line, 2);
    }

    #[test]
    fn unterminated_block_comment_is_an_error() {
        let (_, errors) = lex("/* never closed", "t");
        assert_eq!(errors.len(), 1);
        assert!(errors[0].to_string().contains("unterminated block comment"));
    }
}
