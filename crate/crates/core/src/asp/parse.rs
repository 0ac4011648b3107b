use super::{AspProgram, Extra, Fact, Predicate, Term};
use crate::behaviour::Tenths;
use crate::error::{Error, Result};
use crate::token::normalize_token;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Neck,
    Other(char),
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    comments: Vec<(usize, String)>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.char_indices().peekable(),
            src,
            line: 1,
            comments: Vec::new(),
        }
    }

    fn next(&mut self) -> Option<(usize, Tok)> {
        loop {
            let (i, c) = self.chars.next()?;
            match c {
                '\n' => self.line += 1,
                c if c.is_whitespace() => {}
                '%' => {
                    let start = i + 1;
                    let mut end = self.src.len();
                    while let Some(&(j, c)) = self.chars.peek() {
                        if c == '\n' {
                            end = j;
                            break;
                        }
                        self.chars.next();
                    }
                    self.comments.push((self.line, self.src[start..end].trim().to_string()));
                }
                '(' => return Some((self.line, Tok::LParen)),
                ')' => return Some((self.line, Tok::RParen)),
                ',' => return Some((self.line, Tok::Comma)),
                '.' => return Some((self.line, Tok::Dot)),
                ':' if matches!(self.chars.peek(), Some((_, '-'))) => {
                    self.chars.next();
                    return Some((self.line, Tok::Neck));
                }
                c if c.is_ascii_digit() => {
                    let mut s = c.to_string();
                    while let Some(&(_, d)) = self.chars.peek() {
                        if d.is_ascii_digit() {
                            s.push(d);
                            self.chars.next();
                        } else {
                            break;
                        }
                    }
                    // a dot followed by a digit is a decimal point, not a terminator
                    let mut ahead = self.chars.clone();
                    if let (Some((_, '.')), Some((_, d))) = (ahead.next(), ahead.next()) {
                        if d.is_ascii_digit() {
                            self.chars.next();
                            s.push('.');
                            while let Some(&(_, d)) = self.chars.peek() {
                                if d.is_ascii_digit() {
                                    s.push(d);
                                    self.chars.next();
                                } else {
                                    break;
                                }
                            }
                        }
                    }
                    return Some((self.line, Tok::Number(s)));
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut s = c.to_string();
                    while let Some(&(_, d)) = self.chars.peek() {
                        if d.is_alphanumeric() || d == '_' || d == '-' {
                            s.push(d);
                            self.chars.next();
                        } else {
                            break;
                        }
                    }
                    return Some((self.line, Tok::Ident(s)));
                }
                other => return Some((self.line, Tok::Other(other))),
            }
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) | Tok::Number(s) => format!("`{s}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Dot => "`.`".into(),
        Tok::Neck => "`:-`".into(),
        Tok::Other(c) => format!("`{c}`"),
    }
}

fn term_of(line: usize, tok: Tok) -> Result<Term> {
    match tok {
        Tok::Ident(s) => {
            if s.starts_with(|c: char| c.is_uppercase() || c == '_') {
                return Err(Error::parse(line, format!("variable `{s}` in a ground fact")));
            }
            Ok(Term::Sym(normalize_token(&s)))
        }
        Tok::Number(s) => {
            if s.contains('.') {
                let v: f64 = s.parse().map_err(|_| Error::parse(line, format!("bad number `{s}`")))?;
                Ok(Term::Dec(Tenths::from_f64(v)))
            } else {
                s.parse()
                    .map(Term::Int)
                    .map_err(|_| Error::parse(line, format!("bad integer `{s}`")))
            }
        }
        other => Err(Error::parse(line, format!("expected a term, found {}", describe(&other)))),
    }
}

fn render(tokens: &[(usize, Tok)]) -> String {
    let mut out = String::new();
    for (_, t) in tokens {
        match t {
            Tok::Ident(s) | Tok::Number(s) => out.push_str(s),
            Tok::LParen => out.push('('),
            Tok::RParen => out.push(')'),
            Tok::Comma => out.push_str(", "),
            Tok::Dot => out.push('.'),
            Tok::Neck => out.push_str(" :- "),
            Tok::Other(c) => out.push(*c),
        }
    }
    out
}

fn parse_fact(tokens: Vec<(usize, Tok)>) -> Result<(String, Vec<Term>)> {
    let line = tokens[0].0;
    let mut it = tokens.into_iter();
    let name = match it.next() {
        Some((_, Tok::Ident(s))) => normalize_token(&s),
        Some((l, other)) => return Err(Error::parse(l, format!("unexpected {}", describe(&other)))),
        None => unreachable!("statements are nonempty"),
    };
    let mut args = Vec::new();
    match it.next() {
        None => return Ok((name, args)),
        Some((_, Tok::LParen)) => {}
        Some((l, other)) => return Err(Error::parse(l, format!("expected `(` or `.`, found {}", describe(&other)))),
    }
    loop {
        let (l, t) = it.next().ok_or_else(|| Error::parse(line, "unexpected end of fact"))?;
        args.push(term_of(l, t)?);
        match it.next() {
            Some((_, Tok::Comma)) => continue,
            Some((_, Tok::RParen)) => break,
            Some((l, other)) => return Err(Error::parse(l, format!("expected `,` or `)`, found {}", describe(&other)))),
            None => return Err(Error::parse(line, "missing `)`")),
        }
    }
    if let Some((l, other)) = it.next() {
        return Err(Error::parse(l, format!("unexpected {} after fact", describe(&other))));
    }
    Ok((name, args))
}

/// Parse program text. See the module docs for the accepted format.
pub fn parse_program(text: &str) -> Result<AspProgram> {
    let mut lx = Lexer::new(text);
    let mut program = AspProgram::default();

    let mut statement: Vec<(usize, Tok)> = Vec::new();
    let mut depth = 0i32;
    while let Some((line, tok)) = lx.next() {
        match tok {
            Tok::LParen => depth += 1,
            Tok::RParen => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::parse(line, "unbalanced `)`"));
                }
            }
            Tok::Dot if depth == 0 => {
                if statement.is_empty() {
                    return Err(Error::parse(line, "empty statement"));
                }
                let stmt = std::mem::take(&mut statement);
                let first = stmt[0].0;
                if stmt.iter().any(|(_, t)| *t == Tok::Neck) {
                    program.extras.push(Extra {
                        line: first,
                        text: format!("{}.", render(&stmt)),
                    });
                    continue;
                }
                let (name, args) = parse_fact(stmt)?;
                match Predicate::from_name(&name) {
                    Some(p) => {
                        let fact = Fact::new(p, args).map_err(|m| Error::parse(first, m))?;
                        if p.is_background() {
                            program.background.push(fact);
                        } else {
                            program.facts.push(fact);
                        }
                    }
                    None => {
                        let text = if args.is_empty() {
                            format!("{name}.")
                        } else {
                            format!(
                                "{name}({}).",
                                args.iter().map(Term::to_string).collect::<Vec<_>>().join(", ")
                            )
                        };
                        program.extras.push(Extra { line: first, text });
                    }
                }
                continue;
            }
            _ => {}
        }
        statement.push((line, tok));
    }
    if let Some((line, _)) = statement.first() {
        return Err(Error::parse(*line, "unterminated statement (missing `.`)"));
    }

    for (_, c) in &lx.comments {
        if let Some((key, value)) = c.split_once(':') {
            let value = value.trim();
            match key.trim() {
                "clip" => program.clip_id = value.to_string(),
                "action" => program.action = Some(normalize_token(value)),
                "labels" => {
                    program.adverb_labels = value.split_whitespace().map(normalize_token).collect()
                }
                _ => {}
            }
        }
    }
    Ok(program)
}
