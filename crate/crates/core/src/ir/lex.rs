use super::parse::{ParseError, ParseErrorKind};
use super::{Direction, Var};
use crate::rational::{parse_rational, Rational};

#[derive(Debug, Clone, PartialEq)]
pub(super) enum Tok {
    Number(Rational),
    Var(Var),
    Keyword(Direction),
    Plus,
    Minus,
    LParen,
    RParen,
    Le,
    Ge,
    Semi,
}

impl Tok {
    pub(super) fn describe(&self) -> String {
        match self {
            Tok::Number(_) => "number".into(),
            Tok::Var(v) => format!("variable '{v}'"),
            Tok::Keyword(d) => format!("'{}'", d.keyword()),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Le => "'<='".into(),
            Tok::Ge => "'>='".into(),
            Tok::Semi => "';'".into(),
        }
    }
}

/// A token and its 1-based character column.
#[derive(Debug, Clone, PartialEq)]
pub(super) struct Spanned {
    pub tok: Tok,
    pub column: usize,
}

pub(super) fn tokenize(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        let err = |kind| Err(ParseError { kind, column });
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ';' => Some(Tok::Semi),
            '≤' => Some(Tok::Le),
            '≥' => Some(Tok::Ge),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned { tok, column });
            i += 1;
            continue;
        }
        match c {
            c if c.is_whitespace() => i += 1,
            '<' | '>' => {
                if chars.get(i + 1) == Some(&'=') {
                    let tok = if c == '<' { Tok::Le } else { Tok::Ge };
                    out.push(Spanned { tok, column });
                    i += 2;
                } else {
                    return err(ParseErrorKind::StrictInequality);
                }
            }
            '=' => return err(ParseErrorKind::Equality),
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let mut integral = true;
                if i < chars.len() && chars[i] == '.' {
                    integral = false;
                    i += 1;
                    let frac_start = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i == frac_start {
                        return err(ParseErrorKind::BadNumber(chars[start..i].iter().collect()));
                    }
                }
                if integral && i + 1 < chars.len() && chars[i] == '/' && chars[i + 1].is_ascii_digit() {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                match parse_rational(&text) {
                    Some(value) => out.push(Spanned { tok: Tok::Number(value), column }),
                    None => return err(ParseErrorKind::BadNumber(text)),
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                match word.to_lowercase().as_str() {
                    "maximize" => out.push(Spanned { tok: Tok::Keyword(Direction::Max), column }),
                    "minimize" => out.push(Spanned { tok: Tok::Keyword(Direction::Min), column }),
                    _ => {
                        // Juxtaposed aliases such as `xy` lex as separate factors.
                        let vars: Option<Vec<Var>> = word.chars().map(Var::from_char).collect();
                        match vars {
                            Some(vars) => {
                                for (k, v) in vars.into_iter().enumerate() {
                                    out.push(Spanned { tok: Tok::Var(v), column: column + k });
                                }
                            }
                            None => return err(ParseErrorKind::UnknownVariable(word)),
                        }
                    }
                }
            }
            other => return err(ParseErrorKind::UnexpectedChar(other)),
        }
    }
    Ok(out)
}
