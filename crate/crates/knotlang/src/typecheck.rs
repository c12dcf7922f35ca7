//! Source-language type checker under three disciplines: UNRESTRICTED (plain
//! STLC with references), FULL-GROUND (lambdas may only capture full-ground
//! variables), and SORTED (lambdas carry the universe level of their
//! environment, and Ref bumps levels).

use std::fmt;
use std::str::FromStr;

use crate::context::TypingContext;
use crate::derive::Derivation;
use crate::sorts::{is_full_ground, sort_of_source_with, SortError, SortRules};
use crate::syntax::{pretty_term, pretty_type, Span, Term, TermKind, Type};

pub type SrcCtx = TypingContext<Type>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Unrestricted,
    FullGround,
    Sorted,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Unrestricted, Mode::FullGround, Mode::Sorted];
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Unrestricted => write!(f, "unrestricted"),
            Mode::FullGround => write!(f, "full-ground"),
            Mode::Sorted => write!(f, "sorted"),
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unrestricted" => Ok(Mode::Unrestricted),
            "full-ground" => Ok(Mode::FullGround),
            "sorted" => Ok(Mode::Sorted),
            other => Err(format!(
                "unknown mode '{other}' (expected unrestricted, full-ground, or sorted)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeErrorKind {
    Mismatch,
    UnboundVariable,
    NonFullGroundCapture,
    SortMismatch,
    UnannotatedArrow,
    NotAFunction,
    NotARef,
    NotAProduct,
    ClosednessViolation,
}

impl fmt::Display for TypeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TypeErrorKind::Mismatch => "Mismatch",
            TypeErrorKind::UnboundVariable => "UnboundVariable",
            TypeErrorKind::NonFullGroundCapture => "NonFullGroundCapture",
            TypeErrorKind::SortMismatch => "SortMismatch",
            TypeErrorKind::UnannotatedArrow => "UnannotatedArrow",
            TypeErrorKind::NotAFunction => "NotAFunction",
            TypeErrorKind::NotARef => "NotARef",
            TypeErrorKind::NotAProduct => "NotAProduct",
            TypeErrorKind::ClosednessViolation => "ClosednessViolation",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub span: Span,
    pub expected: String,
    pub found: String,
    /// Pretty form of the offending subterm.
    pub subterm: String,
}

impl TypeError {
    pub fn new(
        kind: TypeErrorKind,
        span: Span,
        expected: impl Into<String>,
        found: impl Into<String>,
        subterm: impl Into<String>,
    ) -> Self {
        TypeError {
            kind,
            span,
            expected: expected.into(),
            found: found.into(),
            subterm: subterm.into(),
        }
    }

    /// Stable rendering: `<line>:<col>: <KIND>: expected <T1>, found <T2>`.
    /// The CLI prefixes the file name.
    pub fn render(&self) -> String {
        format!(
            "{}:{}: {}: expected {}, found {}",
            self.span.line, self.span.col, self.kind, self.expected, self.found
        )
    }
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl std::error::Error for TypeError {}

/// Result of a successful check, including the derivation and any
/// level-defaulting warnings emitted in SORTED mode.
#[derive(Debug, Clone)]
pub struct Report {
    pub ty: Type,
    pub derivation: Derivation,
    pub warnings: Vec<String>,
}

pub fn typecheck_source(ctx: &SrcCtx, e: &Term, mode: Mode) -> Result<Type, TypeError> {
    typecheck_source_with(ctx, e, mode, &SortRules::default())
}

pub fn typecheck_source_with(
    ctx: &SrcCtx,
    e: &Term,
    mode: Mode,
    rules: &SortRules,
) -> Result<Type, TypeError> {
    check_report(ctx, e, mode, rules).map(|r| r.ty)
}

/// Full derivation tree for a successful check.
pub fn explain(ctx: &SrcCtx, e: &Term, mode: Mode) -> Result<Derivation, TypeError> {
    check_report(ctx, e, mode, &SortRules::default()).map(|r| r.derivation)
}

pub fn check_report(
    ctx: &SrcCtx,
    e: &Term,
    mode: Mode,
    rules: &SortRules,
) -> Result<Report, TypeError> {
    let mut checker = Checker {
        mode,
        rules: *rules,
        warnings: Vec::new(),
    };
    let mut ctx = checker.normalize_ctx(ctx);
    let (ty, derivation) = checker.check(&mut ctx, e)?;
    Ok(Report {
        ty,
        derivation,
        warnings: checker.warnings,
    })
}

/// How two types compare under a mode's notion of equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cmp {
    Equal,
    /// Same erasure, but some arrow level differs. Only SORTED distinguishes
    /// this from Equal; it reports it as SortMismatch.
    LevelOnly,
    Different,
}

fn compare(a: &Type, b: &Type) -> Cmp {
    match (a, b) {
        (Type::Nat, Type::Nat) | (Type::Unit, Type::Unit) => Cmp::Equal,
        (Type::Ref(x), Type::Ref(y)) => compare(x, y),
        (Type::Product(l1, r1), Type::Product(l2, r2)) => join(compare(l1, l2), compare(r1, r2)),
        (
            Type::Arrow {
                dom: d1,
                cod: c1,
                level: l1,
            },
            Type::Arrow {
                dom: d2,
                cod: c2,
                level: l2,
            },
        ) => {
            let structural = join(compare(d1, d2), compare(c1, c2));
            if structural == Cmp::Different {
                Cmp::Different
            } else if l1 != l2 {
                Cmp::LevelOnly
            } else {
                structural
            }
        }
        _ => Cmp::Different,
    }
}

fn join(a: Cmp, b: Cmp) -> Cmp {
    use Cmp::*;
    match (a, b) {
        (Different, _) | (_, Different) => Different,
        (LevelOnly, _) | (_, LevelOnly) => LevelOnly,
        _ => Equal,
    }
}

pub(crate) fn types_agree(a: &Type, b: &Type, mode: Mode) -> bool {
    match compare(a, b) {
        Cmp::Equal => true,
        Cmp::LevelOnly => mode != Mode::Sorted,
        Cmp::Different => false,
    }
}

struct Checker {
    mode: Mode,
    rules: SortRules,
    warnings: Vec<String>,
}

impl Checker {
    fn normalize_ctx(&mut self, ctx: &SrcCtx) -> SrcCtx {
        if self.mode != Mode::Sorted {
            return ctx.clone();
        }
        let mut out = SrcCtx::new();
        for entry in ctx.entries() {
            match entry {
                crate::context::CtxEntry::Term(n, t) => {
                    out.push_term(n.clone(), self.normalize(t));
                }
                crate::context::CtxEntry::TyVar(n, l) => out.push_ty_var(n.clone(), *l),
            }
        }
        out
    }

    /// In SORTED mode, written types get unannotated arrows defaulted to
    /// level 0, with a warning.
    fn normalize(&mut self, t: &Type) -> Type {
        if self.mode != Mode::Sorted {
            return t.clone();
        }
        let (t2, defaulted) = t.default_levels();
        if defaulted {
            self.warnings.push(format!(
                "unannotated arrow in {} defaulted to level 0",
                pretty_type(t)
            ));
        }
        t2
    }

    fn sort_of(&self, ctx: &SrcCtx, t: &Type, span: Span) -> Result<u32, TypeError> {
        sort_of_source_with(ctx, t, &self.rules).map_err(|e| match e {
            SortError::UnannotatedArrow(t) => TypeError::new(
                TypeErrorKind::UnannotatedArrow,
                span,
                "level-annotated arrow",
                pretty_type(&t),
                "",
            ),
            SortError::UnboundTypeVar(a) => TypeError::new(
                TypeErrorKind::UnboundVariable,
                span,
                "bound type variable",
                a,
                "",
            ),
        })
    }

    fn node(
        &self,
        ctx: &SrcCtx,
        rule: &str,
        e: &Term,
        ty: &Type,
        children: Vec<Derivation>,
    ) -> Derivation {
        let sort = if self.mode == Mode::Sorted {
            sort_of_source_with(ctx, ty, &self.rules).ok()
        } else {
            None
        };
        Derivation {
            rule: rule.to_string(),
            ctx: ctx.render(),
            term: Some(pretty_term(e)),
            ty: pretty_type(ty),
            sort,
            children,
        }
    }

    fn mismatch(&self, span: Span, expected: &Type, found: &Type, subterm: &Term) -> TypeError {
        let kind = if self.mode == Mode::Sorted && compare(expected, found) == Cmp::LevelOnly {
            TypeErrorKind::SortMismatch
        } else {
            TypeErrorKind::Mismatch
        };
        TypeError::new(
            kind,
            span,
            pretty_type(expected),
            pretty_type(found),
            pretty_term(subterm),
        )
    }

    fn check(&mut self, ctx: &mut SrcCtx, e: &Term) -> Result<(Type, Derivation), TypeError> {
        match &e.kind {
            TermKind::Var(x) => match ctx.lookup_term(x) {
                Some(t) => {
                    let t = t.clone();
                    let d = self.node(ctx, "Var", e, &t, vec![]);
                    Ok((t, d))
                }
                None => Err(TypeError::new(
                    TypeErrorKind::UnboundVariable,
                    e.span,
                    "bound variable",
                    x.clone(),
                    pretty_term(e),
                )),
            },
            TermKind::Nat(_) => {
                let d = self.node(ctx, "Nat", e, &Type::Nat, vec![]);
                Ok((Type::Nat, d))
            }
            TermKind::Unit => {
                let d = self.node(ctx, "Unit", e, &Type::Unit, vec![]);
                Ok((Type::Unit, d))
            }
            TermKind::Lam {
                param,
                param_ty,
                level,
                body,
            } => {
                let pty = self.normalize(param_ty);
                // environment restriction, per mode
                let fvs = e.free_vars();
                let mut env_level: u32 = 0;
                for v in &fvs {
                    let Some(vty) = ctx.lookup_term(v) else {
                        continue; // body check reports the unbound variable
                    };
                    match self.mode {
                        Mode::FullGround => {
                            if !is_full_ground(vty) {
                                return Err(TypeError::new(
                                    TypeErrorKind::NonFullGroundCapture,
                                    e.span,
                                    format!("full-ground type for captured variable {v}"),
                                    pretty_type(vty),
                                    pretty_term(e),
                                ));
                            }
                        }
                        Mode::Sorted => {
                            let vty = vty.clone();
                            env_level = env_level.max(self.sort_of(ctx, &vty, e.span)?);
                        }
                        Mode::Unrestricted => {}
                    }
                }
                if self.mode == Mode::Sorted {
                    if let Some(k) = level {
                        if *k != env_level {
                            return Err(TypeError::new(
                                TypeErrorKind::SortMismatch,
                                e.span,
                                format!("lambda at level {env_level} (max over its environment)"),
                                format!("annotation [{k}]"),
                                pretty_term(e),
                            ));
                        }
                    }
                }
                ctx.push_term(param.clone(), pty.clone());
                let (body_ty, body_d) = self.check(ctx, body)?;
                ctx.pop();
                let arrow_level = (self.mode == Mode::Sorted).then_some(env_level);
                let ty = Type::arrow(pty, body_ty, arrow_level);
                let d = self.node(ctx, "Lam", e, &ty, vec![body_d]);
                Ok((ty, d))
            }
            TermKind::App(f, a) => {
                let (fty, fd) = self.check(ctx, f)?;
                let (aty, ad) = self.check(ctx, a)?;
                match &fty {
                    Type::Arrow { dom, cod, .. } => {
                        if !types_agree(dom, &aty, self.mode) {
                            return Err(self.mismatch(a.span, dom, &aty, a));
                        }
                        let ty = (**cod).clone();
                        let d = self.node(ctx, "App", e, &ty, vec![fd, ad]);
                        Ok((ty, d))
                    }
                    _ => Err(TypeError::new(
                        TypeErrorKind::NotAFunction,
                        f.span,
                        "function type",
                        pretty_type(&fty),
                        pretty_term(f),
                    )),
                }
            }
            TermKind::New(inner) => {
                let (t, d0) = self.check(ctx, inner)?;
                let ty = Type::reft(t);
                let d = self.node(ctx, "New", e, &ty, vec![d0]);
                Ok((ty, d))
            }
            TermKind::Deref(inner) => {
                let (t, d0) = self.check(ctx, inner)?;
                match t {
                    Type::Ref(content) => {
                        let ty = *content;
                        let d = self.node(ctx, "Deref", e, &ty, vec![d0]);
                        Ok((ty, d))
                    }
                    other => Err(TypeError::new(
                        TypeErrorKind::NotARef,
                        inner.span,
                        "reference type",
                        pretty_type(&other),
                        pretty_term(inner),
                    )),
                }
            }
            TermKind::Assign(r, v) => {
                let (rty, rd) = self.check(ctx, r)?;
                let (vty, vd) = self.check(ctx, v)?;
                match &rty {
                    Type::Ref(content) => {
                        if !types_agree(content, &vty, self.mode) {
                            return Err(self.mismatch(e.span, content, &vty, e));
                        }
                        let d = self.node(ctx, "Assign", e, &Type::Unit, vec![rd, vd]);
                        Ok((Type::Unit, d))
                    }
                    _ => Err(TypeError::new(
                        TypeErrorKind::NotARef,
                        r.span,
                        "reference type",
                        pretty_type(&rty),
                        pretty_term(r),
                    )),
                }
            }
            TermKind::Seq(a, b) => {
                let (aty, ad) = self.check(ctx, a)?;
                if !types_agree(&aty, &Type::Unit, self.mode) {
                    return Err(self.mismatch(a.span, &Type::Unit, &aty, a));
                }
                let (bty, bd) = self.check(ctx, b)?;
                let d = self.node(ctx, "Seq", e, &bty, vec![ad, bd]);
                Ok((bty, d))
            }
            TermKind::Let { name, bound, body } => {
                let (bty, bd) = self.check(ctx, bound)?;
                ctx.push_term(name.clone(), bty);
                let (ty, body_d) = self.check(ctx, body)?;
                ctx.pop();
                let d = self.node(ctx, "Let", e, &ty, vec![bd, body_d]);
                Ok((ty, d))
            }
            TermKind::Pair(a, b) => {
                let (aty, ad) = self.check(ctx, a)?;
                let (bty, bd) = self.check(ctx, b)?;
                let ty = Type::product(aty, bty);
                let d = self.node(ctx, "Pair", e, &ty, vec![ad, bd]);
                Ok((ty, d))
            }
            TermKind::Proj(idx, inner) => {
                let (t, d0) = self.check(ctx, inner)?;
                match t {
                    Type::Product(l, r) => {
                        let ty = match idx {
                            crate::syntax::ProjIdx::Fst => *l,
                            crate::syntax::ProjIdx::Snd => *r,
                        };
                        let rule = format!("Proj{}", idx.number());
                        let sort = if self.mode == Mode::Sorted {
                            sort_of_source_with(ctx, &ty, &self.rules).ok()
                        } else {
                            None
                        };
                        let d = Derivation {
                            rule,
                            ctx: ctx.render(),
                            term: Some(pretty_term(e)),
                            ty: pretty_type(&ty),
                            sort,
                            children: vec![d0],
                        };
                        Ok((ty, d))
                    }
                    other => Err(TypeError::new(
                        TypeErrorKind::NotAProduct,
                        inner.span,
                        "product type",
                        pretty_type(&other),
                        pretty_term(inner),
                    )),
                }
            }
        }
    }
}
