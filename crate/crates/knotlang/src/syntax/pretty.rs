//! Precedence-aware printers. The round-trip law parse(pretty(t)) == t is
//! what pins the exact output; golden files are rendered through these.

use std::fmt::Write;

use super::ast::*;

const TERM: u8 = 0;
const ASSIGN: u8 = 1;
const APP: u8 = 2;
const ATOM: u8 = 3;

pub fn pretty_term(t: &Term) -> String {
    let mut s = String::new();
    term(t, TERM, &mut s);
    s
}

pub fn pretty_type(t: &Type) -> String {
    let mut s = String::new();
    ty(t, false, &mut s);
    s
}

pub fn pretty_target_term(t: &TargetTerm) -> String {
    let mut s = String::new();
    tterm(t, TERM, &mut s);
    s
}

pub fn pretty_target_type(t: &TargetType) -> String {
    let mut s = String::new();
    tty(t, false, &mut s);
    s
}

fn paren(needed: bool, out: &mut String, body: impl FnOnce(&mut String)) {
    if needed {
        out.push('(');
        body(out);
        out.push(')');
    } else {
        body(out);
    }
}

fn term(t: &Term, prec: u8, out: &mut String) {
    match &t.kind {
        TermKind::Var(x) => out.push_str(x),
        TermKind::Nat(n) => {
            let _ = write!(out, "{n}");
        }
        TermKind::Unit => out.push_str("unit"),
        TermKind::Lam {
            param,
            param_ty,
            level,
            body,
        } => paren(prec > TERM, out, |out| {
            out.push_str("lam");
            if let Some(l) = level {
                let _ = write!(out, "[{l}]");
            }
            let _ = write!(out, " {param} : ");
            ty(param_ty, false, out);
            out.push_str(" . ");
            term(body, TERM, out);
        }),
        TermKind::Let { name, bound, body } => paren(prec > TERM, out, |out| {
            let _ = write!(out, "let {name} = ");
            term(bound, TERM, out);
            out.push_str(" in ");
            term(body, TERM, out);
        }),
        TermKind::Seq(a, b) => paren(prec > TERM, out, |out| {
            term(a, ASSIGN, out);
            out.push_str(" ; ");
            term(b, TERM, out);
        }),
        TermKind::Assign(a, b) => paren(prec > ASSIGN, out, |out| {
            term(a, APP, out);
            out.push_str(" := ");
            term(b, APP, out);
        }),
        TermKind::App(f, a) => paren(prec > APP, out, |out| {
            term(f, APP, out);
            out.push(' ');
            term(a, ATOM, out);
        }),
        TermKind::New(e) => {
            out.push_str("new ");
            term(e, ATOM, out);
        }
        TermKind::Deref(e) => {
            out.push('!');
            term(e, ATOM, out);
        }
        TermKind::Proj(i, e) => {
            let _ = write!(out, "proj{} ", i.number());
            term(e, ATOM, out);
        }
        TermKind::Pair(a, b) => {
            out.push('<');
            term(a, TERM, out);
            out.push_str(", ");
            term(b, TERM, out);
            out.push('>');
        }
    }
}

fn ty(t: &Type, btype_pos: bool, out: &mut String) {
    match t {
        Type::Nat => out.push_str("Nat"),
        Type::Unit => out.push_str("Unit"),
        Type::Arrow { dom, cod, level } => paren(btype_pos, out, |out| {
            ty(dom, true, out);
            match level {
                Some(l) => {
                    let _ = write!(out, " ->[{l}] ");
                }
                None => out.push_str(" -> "),
            }
            ty(cod, false, out);
        }),
        Type::Ref(c) => {
            out.push_str("Ref ");
            ty(c, true, out);
        }
        Type::Product(l, r) => {
            out.push('<');
            ty(l, false, out);
            out.push_str(" x ");
            ty(r, false, out);
            out.push('>');
        }
    }
}

fn tterm(t: &TargetTerm, prec: u8, out: &mut String) {
    match &t.kind {
        TargetTermKind::Var(x) => out.push_str(x),
        TargetTermKind::Nat(n) => {
            let _ = write!(out, "{n}");
        }
        TargetTermKind::Unit => out.push_str("unit"),
        TargetTermKind::CodeLam { params, body } => paren(prec > TERM, out, |out| {
            for (p, t) in params {
                let _ = write!(out, "lam {p} : ");
                tty(t, false, out);
                out.push_str(" . ");
            }
            // a code-lambda body that is itself a code-lambda must be
            // parenthesized or the parser would fold it into the param list
            let wrap = matches!(body.kind, TargetTermKind::CodeLam { .. });
            if wrap {
                out.push('(');
            }
            tterm(body, TERM, out);
            if wrap {
                out.push(')');
            }
        }),
        TargetTermKind::Let { name, bound, body } => paren(prec > TERM, out, |out| {
            let _ = write!(out, "let {name} = ");
            tterm(bound, TERM, out);
            out.push_str(" in ");
            tterm(body, TERM, out);
        }),
        TargetTermKind::Seq(a, b) => paren(prec > TERM, out, |out| {
            tterm(a, ASSIGN, out);
            out.push_str(" ; ");
            tterm(b, TERM, out);
        }),
        TargetTermKind::Assign(a, b) => paren(prec > ASSIGN, out, |out| {
            tterm(a, APP, out);
            out.push_str(" := ");
            tterm(b, APP, out);
        }),
        TargetTermKind::App(f, a) => paren(prec > APP, out, |out| {
            tterm(f, APP, out);
            out.push(' ');
            tterm(a, ATOM, out);
        }),
        TargetTermKind::New(e) => {
            out.push_str("new ");
            tterm(e, ATOM, out);
        }
        TargetTermKind::Deref(e) => {
            out.push('!');
            tterm(e, ATOM, out);
        }
        TargetTermKind::Proj(i, e) => {
            let _ = write!(out, "proj{} ", i.number());
            tterm(e, ATOM, out);
        }
        TargetTermKind::Pair(a, b) => {
            out.push('<');
            tterm(a, TERM, out);
            out.push_str(", ");
            tterm(b, TERM, out);
            out.push('>');
        }
        TargetTermKind::Pack {
            witness,
            payload,
            annot,
        } => paren(prec > TERM, out, |out| {
            out.push_str("pack <");
            tty(witness, false, out);
            out.push_str(", ");
            tterm(payload, TERM, out);
            out.push_str("> as ");
            tty(annot, false, out);
        }),
        TargetTermKind::Unpack {
            ty_var,
            val_var,
            package,
            body,
        } => paren(prec > TERM, out, |out| {
            let _ = write!(out, "unpack <{ty_var}, {val_var}> = ");
            tterm(package, TERM, out);
            out.push_str(" in ");
            tterm(body, TERM, out);
        }),
    }
}

fn tty(t: &TargetType, btype_pos: bool, out: &mut String) {
    match t {
        TargetType::Nat => out.push_str("Nat"),
        TargetType::Unit => out.push_str("Unit"),
        TargetType::Var(a) => out.push_str(a),
        TargetType::Arrow(dom, cod) => paren(btype_pos, out, |out| {
            tty(dom, true, out);
            out.push_str(" -> ");
            tty(cod, false, out);
        }),
        TargetType::Ref(c) => {
            out.push_str("Ref ");
            tty(c, true, out);
        }
        TargetType::Product(l, r) => {
            out.push('<');
            tty(l, false, out);
            out.push_str(" x ");
            tty(r, false, out);
            out.push('>');
        }
        TargetType::Exists { var, level, body } => paren(btype_pos, out, |out| {
            let _ = write!(out, "exists {var} : Type {level} . ");
            tty(body, false, out);
        }),
    }
}
