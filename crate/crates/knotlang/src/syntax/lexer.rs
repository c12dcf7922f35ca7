//! Tokenizer shared by the source and target parsers.

use num_bigint::BigUint;

use super::ast::Span;
use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    // keywords
    Lam,
    New,
    Let,
    In,
    Pack,
    Unpack,
    Exists,
    As,
    UnitVal, // "unit"
    Proj1,
    Proj2,
    NatTy,  // "Nat"
    UnitTy, // "Unit"
    RefTy,  // "Ref"
    TypeKw, // "Type"
    // literals and names
    Ident(String),
    NatLit(BigUint),
    // punctuation
    Colon,
    Dot,
    Comma,
    Lt,
    Gt,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Bang,
    Semi,
    Arrow,   // ->
    ColonEq, // :=
    Eq,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Lam => "'lam'".into(),
            Tok::New => "'new'".into(),
            Tok::Let => "'let'".into(),
            Tok::In => "'in'".into(),
            Tok::Pack => "'pack'".into(),
            Tok::Unpack => "'unpack'".into(),
            Tok::Exists => "'exists'".into(),
            Tok::As => "'as'".into(),
            Tok::UnitVal => "'unit'".into(),
            Tok::Proj1 => "'proj1'".into(),
            Tok::Proj2 => "'proj2'".into(),
            Tok::NatTy => "'Nat'".into(),
            Tok::UnitTy => "'Unit'".into(),
            Tok::RefTy => "'Ref'".into(),
            Tok::TypeKw => "'Type'".into(),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::NatLit(n) => format!("literal '{n}'"),
            Tok::Colon => "':'".into(),
            Tok::Dot => "'.'".into(),
            Tok::Comma => "','".into(),
            Tok::Lt => "'<'".into(),
            Tok::Gt => "'>'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Bang => "'!'".into(),
            Tok::Semi => "';'".into(),
            Tok::Arrow => "'->'".into(),
            Tok::ColonEq => "':='".into(),
            Tok::Eq => "'='".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn lex(input: &str) -> Result<Vec<Token>, ParseError> {
    let mut toks = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = input.chars().peekable();

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if let Some(c) = c {
                if c == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let span = Span::new(line, col);
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '-' => {
                bump!();
                match chars.peek() {
                    Some('-') => {
                        // line comment
                        while let Some(&c) = chars.peek() {
                            if c == '\n' {
                                break;
                            }
                            bump!();
                        }
                    }
                    Some('>') => {
                        bump!();
                        toks.push(Token { tok: Tok::Arrow, span });
                    }
                    _ => {
                        return Err(ParseError::at(span, vec!["'->' or comment".into()], "'-'".into()));
                    }
                }
            }
            ':' => {
                bump!();
                if chars.peek() == Some(&'=') {
                    bump!();
                    toks.push(Token { tok: Tok::ColonEq, span });
                } else {
                    toks.push(Token { tok: Tok::Colon, span });
                }
            }
            '.' => {
                bump!();
                toks.push(Token { tok: Tok::Dot, span });
            }
            ',' => {
                bump!();
                toks.push(Token { tok: Tok::Comma, span });
            }
            '<' => {
                bump!();
                toks.push(Token { tok: Tok::Lt, span });
            }
            '>' => {
                bump!();
                toks.push(Token { tok: Tok::Gt, span });
            }
            '(' => {
                bump!();
                toks.push(Token { tok: Tok::LParen, span });
            }
            ')' => {
                bump!();
                toks.push(Token { tok: Tok::RParen, span });
            }
            '[' => {
                bump!();
                toks.push(Token { tok: Tok::LBracket, span });
            }
            ']' => {
                bump!();
                toks.push(Token { tok: Tok::RBracket, span });
            }
            '!' => {
                bump!();
                toks.push(Token { tok: Tok::Bang, span });
            }
            ';' => {
                bump!();
                toks.push(Token { tok: Tok::Semi, span });
            }
            '=' => {
                bump!();
                toks.push(Token { tok: Tok::Eq, span });
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                let n: BigUint = s.parse().expect("digits");
                toks.push(Token { tok: Tok::NatLit(n), span });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                        s.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                let tok = match s.as_str() {
                    "lam" => Tok::Lam,
                    "new" => Tok::New,
                    "let" => Tok::Let,
                    "in" => Tok::In,
                    "pack" => Tok::Pack,
                    "unpack" => Tok::Unpack,
                    "exists" => Tok::Exists,
                    "as" => Tok::As,
                    "unit" => Tok::UnitVal,
                    "proj1" => Tok::Proj1,
                    "proj2" => Tok::Proj2,
                    "Nat" => Tok::NatTy,
                    "Unit" => Tok::UnitTy,
                    "Ref" => Tok::RefTy,
                    "Type" => Tok::TypeKw,
                    _ => {
                        // only the two projections exist; proj3 and friends
                        // are malformed keywords, not identifiers
                        if let Some(rest) = s.strip_prefix("proj") {
                            if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
                                return Err(ParseError::at(
                                    span,
                                    vec!["'proj1'".into(), "'proj2'".into()],
                                    format!("'{s}'"),
                                ));
                            }
                        }
                        Tok::Ident(s)
                    }
                };
                toks.push(Token { tok, span });
            }
            other => {
                return Err(ParseError::at(
                    span,
                    vec!["token".into()],
                    format!("'{other}'"),
                ));
            }
        }
    }
    Ok(toks)
}
