//! A small DOT grammar checker used to validate exported graphs. It
//! accepts the directed-graph subset of the language: node statements,
//! edge chains, attribute lists, and `name=value` graph attributes.

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Id(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semicolon,
    Comma,
    Equals,
    Arrow,
}

fn tokenize(text: &str) -> Result<Vec<Token>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '{' => {
                tokens.push(Token::LBrace);
                i += 1;
            }
            '}' => {
                tokens.push(Token::RBrace);
                i += 1;
            }
            '[' => {
                tokens.push(Token::LBracket);
                i += 1;
            }
            ']' => {
                tokens.push(Token::RBracket);
                i += 1;
            }
            ';' => {
                tokens.push(Token::Semicolon);
                i += 1;
            }
            ',' => {
                tokens.push(Token::Comma);
                i += 1;
            }
            '=' => {
                tokens.push(Token::Equals);
                i += 1;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                tokens.push(Token::Arrow);
                i += 2;
            }
            '"' => {
                i += 1;
                let mut value = String::new();
                loop {
                    match chars.get(i) {
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            if let Some(escaped) = chars.get(i + 1) {
                                value.push(*escaped);
                                i += 2;
                            } else {
                                return Err("dangling escape in string".into());
                            }
                        }
                        Some(other) => {
                            value.push(*other);
                            i += 1;
                        }
                        None => return Err("unterminated quoted id".into()),
                    }
                }
                tokens.push(Token::Id(value));
            }
            c if c.is_alphanumeric() || c == '_' || c == '.' => {
                let mut value = String::new();
                while let Some(&c) = chars.get(i) {
                    if c.is_alphanumeric() || c == '_' || c == '.' {
                        value.push(c);
                        i += 1;
                    } else {
                        break;
                    }
                }
                tokens.push(Token::Id(value));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(tokens)
}

/// Check that `text` is a syntactically valid directed DOT graph.
pub fn check_dot(text: &str) -> Result<(), String> {
    let tokens = tokenize(text)?;
    let mut pos = 0;

    let expect_id = |tokens: &[Token], pos: &mut usize| -> Result<String, String> {
        match tokens.get(*pos) {
            Some(Token::Id(id)) => {
                *pos += 1;
                Ok(id.clone())
            }
            other => Err(format!("expected id, found {other:?}")),
        }
    };

    match tokens.get(pos) {
        Some(Token::Id(kw)) if kw == "digraph" => pos += 1,
        other => return Err(format!("expected `digraph`, found {other:?}")),
    }
    if matches!(tokens.get(pos), Some(Token::Id(_))) {
        pos += 1;
    }
    if tokens.get(pos) != Some(&Token::LBrace) {
        return Err("expected `{` after graph name".into());
    }
    pos += 1;

    // statement list
    loop {
        match tokens.get(pos) {
            Some(Token::RBrace) => {
                pos += 1;
                break;
            }
            Some(Token::Id(_)) => {
                expect_id(&tokens, &mut pos)?;
                if tokens.get(pos) == Some(&Token::Equals) {
                    // graph attribute: id = id
                    pos += 1;
                    expect_id(&tokens, &mut pos)?;
                } else {
                    // node or edge statement
                    while tokens.get(pos) == Some(&Token::Arrow) {
                        pos += 1;
                        expect_id(&tokens, &mut pos)?;
                    }
                    if tokens.get(pos) == Some(&Token::LBracket) {
                        pos += 1;
                        loop {
                            match tokens.get(pos) {
                                Some(Token::RBracket) => {
                                    pos += 1;
                                    break;
                                }
                                Some(Token::Id(_)) => {
                                    expect_id(&tokens, &mut pos)?;
                                    if tokens.get(pos) != Some(&Token::Equals) {
                                        return Err("expected `=` in attribute".into());
                                    }
                                    pos += 1;
                                    expect_id(&tokens, &mut pos)?;
                                    if matches!(
                                        tokens.get(pos),
                                        Some(Token::Comma) | Some(Token::Semicolon)
                                    ) {
                                        pos += 1;
                                    }
                                }
                                other => {
                                    return Err(format!(
                                        "expected attribute or `]`, found {other:?}"
                                    ))
                                }
                            }
                        }
                    }
                }
                if tokens.get(pos) == Some(&Token::Semicolon) {
                    pos += 1;
                }
            }
            other => return Err(format!("expected statement or `}}`, found {other:?}")),
        }
    }

    if pos != tokens.len() {
        return Err("trailing content after closing `}`".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_typical_graphs() {
        check_dot("digraph \"m\" {\n rankdir=LR;\n \"a\" [label=\"a\"];\n \"a\" -> \"b\" [style=solid, color=red];\n}\n")
            .unwrap();
        check_dot("digraph {}").unwrap();
    }

    #[test]
    fn rejects_malformed_graphs() {
        assert!(check_dot("graph { a -- b }").is_err());
        assert!(check_dot("digraph { a -> }").is_err());
        assert!(check_dot("digraph { a [x] }").is_err());
    }
}
