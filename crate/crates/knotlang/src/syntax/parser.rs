//! Recursive-descent parsers for the source and target grammars.

use num_traits::ToPrimitive;

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::ParseError;

pub fn parse_source(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_target(text: &str) -> Result<TargetTerm, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.tterm()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_type(text: &str) -> Result<Type, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_target_type(text: &str) -> Result<TargetType, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.ttype()?;
    p.expect_eof()?;
    Ok(t)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: Span,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        let toks = lex(text)?;
        let end = toks
            .last()
            .map(|t| t.span)
            .unwrap_or_else(|| Span::new(1, 1));
        Ok(Parser { toks, pos: 0, end })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_span(&self) -> Span {
        self.toks.get(self.pos).map(|t| t.span).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn found_desc(&self) -> String {
        match self.peek() {
            Some(t) => t.describe(),
            None => "end of input".into(),
        }
    }

    fn err(&self, expected: &[&str]) -> ParseError {
        ParseError::at(
            self.peek_span(),
            expected.iter().map(|s| s.to_string()).collect(),
            self.found_desc(),
        )
    }

    fn expect(&mut self, tok: Tok) -> Result<Span, ParseError> {
        if self.peek() == Some(&tok) {
            Ok(self.bump().unwrap().span)
        } else {
            Err(self.err(&[&tok.describe()]))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Span), ParseError> {
        match self.peek() {
            Some(Tok::Ident(_)) => {
                let t = self.bump().unwrap();
                match t.tok {
                    Tok::Ident(s) => Ok((s, t.span)),
                    _ => unreachable!(),
                }
            }
            _ => Err(self.err(&["identifier"])),
        }
    }

    fn expect_level(&mut self) -> Result<u32, ParseError> {
        match self.peek() {
            Some(Tok::NatLit(_)) => {
                let t = self.bump().unwrap();
                match t.tok {
                    Tok::NatLit(n) => n.to_u32().ok_or_else(|| {
                        ParseError::at(t.span, vec!["small level".into()], format!("'{n}'"))
                    }),
                    _ => unreachable!(),
                }
            }
            _ => Err(self.err(&["level literal"])),
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        if self.peek().is_none() {
            Ok(())
        } else {
            Err(self.err(&["end of input"]))
        }
    }

    // ---- source terms ----

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some(Tok::Lam) => {
                let span = self.bump().unwrap().span;
                let level = if self.peek() == Some(&Tok::LBracket) {
                    self.bump();
                    let l = self.expect_level()?;
                    self.expect(Tok::RBracket)?;
                    Some(l)
                } else {
                    None
                };
                let (param, _) = self.expect_ident()?;
                self.expect(Tok::Colon)?;
                let param_ty = self.ty()?;
                self.expect(Tok::Dot)?;
                let body = self.term()?;
                Ok(Term::new(
                    TermKind::Lam {
                        param,
                        param_ty,
                        level,
                        body: Box::new(body),
                    },
                    span,
                ))
            }
            Some(Tok::Let) => {
                let span = self.bump().unwrap().span;
                let (name, _) = self.expect_ident()?;
                self.expect(Tok::Eq)?;
                let bound = self.term()?;
                self.expect(Tok::In)?;
                let body = self.term()?;
                Ok(Term::new(
                    TermKind::Let {
                        name,
                        bound: Box::new(bound),
                        body: Box::new(body),
                    },
                    span,
                ))
            }
            _ => {
                let first = self.assign()?;
                if self.peek() == Some(&Tok::Semi) {
                    let span = self.bump().unwrap().span;
                    let rest = self.term()?;
                    Ok(Term::new(
                        TermKind::Seq(Box::new(first), Box::new(rest)),
                        span,
                    ))
                } else {
                    Ok(first)
                }
            }
        }
    }

    fn assign(&mut self) -> Result<Term, ParseError> {
        let lhs = self.app()?;
        if self.peek() == Some(&Tok::ColonEq) {
            let span = self.bump().unwrap().span;
            let rhs = self.app()?;
            Ok(Term::new(
                TermKind::Assign(Box::new(lhs), Box::new(rhs)),
                span,
            ))
        } else {
            Ok(lhs)
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Some(
                Tok::Ident(_)
                    | Tok::NatLit(_)
                    | Tok::UnitVal
                    | Tok::New
                    | Tok::Bang
                    | Tok::Lt
                    | Tok::Proj1
                    | Tok::Proj2
                    | Tok::LParen
            )
        )
    }

    fn app(&mut self) -> Result<Term, ParseError> {
        let mut t = self.atom()?;
        while self.starts_atom() {
            let arg = self.atom()?;
            let span = t.span;
            t = Term::new(TermKind::App(Box::new(t), Box::new(arg)), span);
        }
        Ok(t)
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        let span = self.peek_span();
        match self.peek() {
            Some(Tok::Ident(_)) => {
                let (name, span) = self.expect_ident()?;
                Ok(Term::new(TermKind::Var(name), span))
            }
            Some(Tok::NatLit(_)) => {
                let t = self.bump().unwrap();
                match t.tok {
                    Tok::NatLit(n) => Ok(Term::new(TermKind::Nat(n), t.span)),
                    _ => unreachable!(),
                }
            }
            Some(Tok::UnitVal) => {
                self.bump();
                Ok(Term::new(TermKind::Unit, span))
            }
            Some(Tok::New) => {
                self.bump();
                let e = self.atom()?;
                Ok(Term::new(TermKind::New(Box::new(e)), span))
            }
            Some(Tok::Bang) => {
                self.bump();
                let e = self.atom()?;
                Ok(Term::new(TermKind::Deref(Box::new(e)), span))
            }
            Some(Tok::Proj1) | Some(Tok::Proj2) => {
                let idx = if self.peek() == Some(&Tok::Proj1) {
                    ProjIdx::Fst
                } else {
                    ProjIdx::Snd
                };
                self.bump();
                let e = self.atom()?;
                Ok(Term::new(TermKind::Proj(idx, Box::new(e)), span))
            }
            Some(Tok::Lt) => {
                self.bump();
                let a = self.term()?;
                self.expect(Tok::Comma)?;
                let b = self.term()?;
                self.expect(Tok::Gt)?;
                Ok(Term::new(TermKind::Pair(Box::new(a), Box::new(b)), span))
            }
            Some(Tok::LParen) => {
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => Err(self.err(&["term"])),
        }
    }

    // ---- source types ----

    fn ty(&mut self) -> Result<Type, ParseError> {
        let dom = self.btype()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.bump();
            let level = if self.peek() == Some(&Tok::LBracket) {
                self.bump();
                let l = self.expect_level()?;
                self.expect(Tok::RBracket)?;
                Some(l)
            } else {
                None
            };
            let cod = self.ty()?;
            Ok(Type::arrow(dom, cod, level))
        } else {
            Ok(dom)
        }
    }

    fn btype(&mut self) -> Result<Type, ParseError> {
        match self.peek() {
            Some(Tok::NatTy) => {
                self.bump();
                Ok(Type::Nat)
            }
            Some(Tok::UnitTy) => {
                self.bump();
                Ok(Type::Unit)
            }
            Some(Tok::RefTy) => {
                self.bump();
                Ok(Type::reft(self.btype()?))
            }
            Some(Tok::Lt) => {
                self.bump();
                let l = self.ty()?;
                self.product_sep()?;
                let r = self.ty()?;
                self.expect(Tok::Gt)?;
                Ok(Type::product(l, r))
            }
            Some(Tok::LParen) => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => Err(self.err(&["type"])),
        }
    }

    fn product_sep(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == "x" => {
                self.bump();
                Ok(())
            }
            _ => Err(self.err(&["'x'"])),
        }
    }

    // ---- target terms ----

    fn tterm(&mut self) -> Result<TargetTerm, ParseError> {
        match self.peek() {
            Some(Tok::Lam) => {
                let span = self.bump().unwrap().span;
                let mut params = Vec::new();
                loop {
                    let (name, _) = self.expect_ident()?;
                    self.expect(Tok::Colon)?;
                    let t = self.ttype()?;
                    self.expect(Tok::Dot)?;
                    params.push((name, t));
                    if self.peek() == Some(&Tok::Lam) {
                        self.bump();
                    } else {
                        break;
                    }
                }
                let body = self.tterm()?;
                Ok(TargetTerm::new(
                    TargetTermKind::CodeLam {
                        params,
                        body: Box::new(body),
                    },
                    span,
                ))
            }
            Some(Tok::Let) => {
                let span = self.bump().unwrap().span;
                let (name, _) = self.expect_ident()?;
                self.expect(Tok::Eq)?;
                let bound = self.tterm()?;
                self.expect(Tok::In)?;
                let body = self.tterm()?;
                Ok(TargetTerm::new(
                    TargetTermKind::Let {
                        name,
                        bound: Box::new(bound),
                        body: Box::new(body),
                    },
                    span,
                ))
            }
            Some(Tok::Unpack) => self.unpack(),
            _ => {
                let first = self.tassign()?;
                if self.peek() == Some(&Tok::Semi) {
                    let span = self.bump().unwrap().span;
                    let rest = self.tterm()?;
                    Ok(TargetTerm::new(
                        TargetTermKind::Seq(Box::new(first), Box::new(rest)),
                        span,
                    ))
                } else {
                    Ok(first)
                }
            }
        }
    }

    fn unpack(&mut self) -> Result<TargetTerm, ParseError> {
        let span = self.expect(Tok::Unpack)?;
        self.expect(Tok::Lt)?;
        let (ty_var, _) = self.expect_ident()?;
        self.expect(Tok::Comma)?;
        let (val_var, _) = self.expect_ident()?;
        self.expect(Tok::Gt)?;
        self.expect(Tok::Eq)?;
        let package = self.tterm()?;
        self.expect(Tok::In)?;
        let body = self.tterm()?;
        Ok(TargetTerm::new(
            TargetTermKind::Unpack {
                ty_var,
                val_var,
                package: Box::new(package),
                body: Box::new(body),
            },
            span,
        ))
    }

    fn tassign(&mut self) -> Result<TargetTerm, ParseError> {
        let lhs = self.tapp()?;
        if self.peek() == Some(&Tok::ColonEq) {
            let span = self.bump().unwrap().span;
            let rhs = self.tapp()?;
            Ok(TargetTerm::new(
                TargetTermKind::Assign(Box::new(lhs), Box::new(rhs)),
                span,
            ))
        } else {
            Ok(lhs)
        }
    }

    fn starts_tatom(&self) -> bool {
        self.starts_atom() || matches!(self.peek(), Some(Tok::Pack | Tok::Unpack))
    }

    fn tapp(&mut self) -> Result<TargetTerm, ParseError> {
        let mut t = self.tatom()?;
        while self.starts_tatom() {
            let arg = self.tatom()?;
            let span = t.span;
            t = TargetTerm::new(TargetTermKind::App(Box::new(t), Box::new(arg)), span);
        }
        Ok(t)
    }

    fn tatom(&mut self) -> Result<TargetTerm, ParseError> {
        let span = self.peek_span();
        match self.peek() {
            Some(Tok::Ident(_)) => {
                let (name, span) = self.expect_ident()?;
                Ok(TargetTerm::new(TargetTermKind::Var(name), span))
            }
            Some(Tok::NatLit(_)) => {
                let t = self.bump().unwrap();
                match t.tok {
                    Tok::NatLit(n) => Ok(TargetTerm::new(TargetTermKind::Nat(n), t.span)),
                    _ => unreachable!(),
                }
            }
            Some(Tok::UnitVal) => {
                self.bump();
                Ok(TargetTerm::new(TargetTermKind::Unit, span))
            }
            Some(Tok::New) => {
                self.bump();
                let e = self.tatom()?;
                Ok(TargetTerm::new(TargetTermKind::New(Box::new(e)), span))
            }
            Some(Tok::Bang) => {
                self.bump();
                let e = self.tatom()?;
                Ok(TargetTerm::new(TargetTermKind::Deref(Box::new(e)), span))
            }
            Some(Tok::Proj1) | Some(Tok::Proj2) => {
                let idx = if self.peek() == Some(&Tok::Proj1) {
                    ProjIdx::Fst
                } else {
                    ProjIdx::Snd
                };
                self.bump();
                let e = self.tatom()?;
                Ok(TargetTerm::new(TargetTermKind::Proj(idx, Box::new(e)), span))
            }
            Some(Tok::Lt) => {
                self.bump();
                let a = self.tterm()?;
                self.expect(Tok::Comma)?;
                let b = self.tterm()?;
                self.expect(Tok::Gt)?;
                Ok(TargetTerm::new(
                    TargetTermKind::Pair(Box::new(a), Box::new(b)),
                    span,
                ))
            }
            Some(Tok::LParen) => {
                self.bump();
                let t = self.tterm()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Some(Tok::Pack) => {
                self.bump();
                self.expect(Tok::Lt)?;
                let witness = self.ttype()?;
                self.expect(Tok::Comma)?;
                let payload = self.tterm()?;
                self.expect(Tok::Gt)?;
                self.expect(Tok::As)?;
                let annot = self.ttype()?;
                Ok(TargetTerm::new(
                    TargetTermKind::Pack {
                        witness,
                        payload: Box::new(payload),
                        annot,
                    },
                    span,
                ))
            }
            Some(Tok::Unpack) => self.unpack(),
            _ => Err(self.err(&["term"])),
        }
    }

    // ---- target types ----

    fn ttype(&mut self) -> Result<TargetType, ParseError> {
        if self.peek() == Some(&Tok::Exists) {
            self.bump();
            let (var, _) = self.expect_ident()?;
            self.expect(Tok::Colon)?;
            self.expect(Tok::TypeKw)?;
            let level = self.expect_level()?;
            self.expect(Tok::Dot)?;
            let body = self.ttype()?;
            return Ok(TargetType::exists(var, level, body));
        }
        let dom = self.tbtype()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.bump();
            let cod = self.ttype()?;
            Ok(TargetType::arrow(dom, cod))
        } else {
            Ok(dom)
        }
    }

    fn tbtype(&mut self) -> Result<TargetType, ParseError> {
        match self.peek() {
            Some(Tok::NatTy) => {
                self.bump();
                Ok(TargetType::Nat)
            }
            Some(Tok::UnitTy) => {
                self.bump();
                Ok(TargetType::Unit)
            }
            Some(Tok::RefTy) => {
                self.bump();
                Ok(TargetType::reft(self.tbtype()?))
            }
            Some(Tok::Ident(_)) => {
                let (name, _) = self.expect_ident()?;
                Ok(TargetType::Var(name))
            }
            Some(Tok::Lt) => {
                self.bump();
                let l = self.ttype()?;
                self.product_sep()?;
                let r = self.ttype()?;
                self.expect(Tok::Gt)?;
                Ok(TargetType::product(l, r))
            }
            Some(Tok::LParen) => {
                self.bump();
                let t = self.ttype()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => Err(self.err(&["type"])),
        }
    }
}
