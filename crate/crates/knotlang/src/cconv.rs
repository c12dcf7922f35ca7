//! Typed closure conversion to the explicit-closure target language, and the
//! target type checker with the mode-specific pack rules.
//!
//! Closures become `pack <env-type, <code, env-tuple>> as exists a : Type j .
//! <(t1 -> a -> t2) x a>`; applications open the package with unpack and call
//! the code with the original argument and the environment.

use std::collections::BTreeSet;

use crate::context::{CtxEntry, TypingContext};
use crate::derive::Derivation;
use crate::sorts::{is_full_ground_target, sort_derivation_target, sort_of_target_with, SortError, SortRules};
use crate::syntax::{
    pretty_target_term, pretty_target_type, ProjIdx, Span, TargetTerm, TargetTermKind, TargetType,
    Term, TermKind, Type,
};
use crate::typecheck::{Mode, SrcCtx, TypeError, TypeErrorKind};

pub type TgtCtx = TypingContext<TargetType>;

/// Capture-avoiding substitution of `witness` for the type variable `var`.
pub fn subst_type(body: &TargetType, witness: &TargetType, var: &str) -> TargetType {
    match body {
        TargetType::Var(a) if a == var => witness.clone(),
        TargetType::Var(_) | TargetType::Nat | TargetType::Unit => body.clone(),
        TargetType::Arrow(d, c) => {
            TargetType::arrow(subst_type(d, witness, var), subst_type(c, witness, var))
        }
        TargetType::Product(l, r) => {
            TargetType::product(subst_type(l, witness, var), subst_type(r, witness, var))
        }
        TargetType::Ref(c) => TargetType::reft(subst_type(c, witness, var)),
        TargetType::Exists {
            var: v,
            level,
            body: b,
        } => {
            if v == var {
                // shadowing blocks the substitution
                body.clone()
            } else if witness.free_ty_vars().contains(v) {
                // rename the binder away from the witness's free variables
                let mut avoid = witness.free_ty_vars();
                avoid.extend(b.free_ty_vars());
                avoid.insert(var.to_string());
                let fresh = fresh_name(v, &avoid);
                let renamed = subst_type(b, &TargetType::Var(fresh.clone()), v);
                TargetType::Exists {
                    var: fresh,
                    level: *level,
                    body: Box::new(subst_type(&renamed, witness, var)),
                }
            } else {
                TargetType::Exists {
                    var: v.clone(),
                    level: *level,
                    body: Box::new(subst_type(b, witness, var)),
                }
            }
        }
    }
}

fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    if !avoid.contains(base) {
        return base.to_string();
    }
    let mut i = 1u32;
    loop {
        let cand = format!("{base}{i}");
        if !avoid.contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

/// Source-to-target type translation. Arrows become existential closure
/// types; in UNRESTRICTED and FULL-GROUND modes the (vestigial) existential
/// level is fixed to 0.
pub fn convert_type(t: &Type, mode: Mode) -> Result<TargetType, TypeError> {
    match t {
        Type::Nat => Ok(TargetType::Nat),
        Type::Unit => Ok(TargetType::Unit),
        Type::Ref(c) => Ok(TargetType::reft(convert_type(c, mode)?)),
        Type::Product(l, r) => Ok(TargetType::product(
            convert_type(l, mode)?,
            convert_type(r, mode)?,
        )),
        Type::Arrow { dom, cod, level } => {
            let j = match mode {
                Mode::Sorted => level.ok_or_else(|| {
                    TypeError::new(
                        TypeErrorKind::UnannotatedArrow,
                        Span::default(),
                        "level-annotated arrow",
                        crate::syntax::pretty_type(t),
                        "",
                    )
                })?,
                _ => 0,
            };
            let d = convert_type(dom, mode)?;
            let c = convert_type(cod, mode)?;
            let alpha = TargetType::Var("a".into());
            Ok(TargetType::exists(
                "a",
                j,
                TargetType::product(
                    TargetType::arrow(d, TargetType::arrow(alpha.clone(), c)),
                    alpha,
                ),
            ))
        }
    }
}

/// Closure layout for one lambda: its captured variables in lexicographic
/// order, the Unit-terminated environment type, and the environment level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureLayout {
    pub captured: Vec<(String, Type)>,
    pub env_type: TargetType,
    pub env_level: u32,
}

/// Closure-convert a source term that typechecks under `mode` in `ctx`.
pub fn closure_convert(ctx: &SrcCtx, e: &Term, mode: Mode) -> Result<TargetTerm, TypeError> {
    closure_convert_with(ctx, e, mode, &SortRules::default())
}

pub fn closure_convert_with(
    ctx: &SrcCtx,
    e: &Term,
    mode: Mode,
    rules: &SortRules,
) -> Result<TargetTerm, TypeError> {
    let mut cc = Converter {
        mode,
        rules: *rules,
        layouts: Vec::new(),
    };
    let mut ctx = normalize_src_ctx(ctx, mode);
    cc.convert(&mut ctx, e).map(|(t, _)| t)
}

/// Like `closure_convert`, additionally reporting the layout of every
/// converted lambda in conversion order.
pub fn closure_convert_layouts(
    ctx: &SrcCtx,
    e: &Term,
    mode: Mode,
) -> Result<(TargetTerm, Vec<ClosureLayout>), TypeError> {
    let mut cc = Converter {
        mode,
        rules: SortRules::default(),
        layouts: Vec::new(),
    };
    let mut ctx = normalize_src_ctx(ctx, mode);
    let (t, _) = cc.convert(&mut ctx, e)?;
    Ok((t, cc.layouts))
}

/// Translate a whole source context for target checking.
pub fn convert_ctx(ctx: &SrcCtx, mode: Mode) -> Result<TgtCtx, TypeError> {
    let ctx = normalize_src_ctx(ctx, mode);
    let mut out = TgtCtx::new();
    for entry in ctx.entries() {
        match entry {
            CtxEntry::Term(n, t) => out.push_term(n.clone(), convert_type(t, mode)?),
            CtxEntry::TyVar(n, l) => out.push_ty_var(n.clone(), *l),
        }
    }
    Ok(out)
}

fn normalize_src_ctx(ctx: &SrcCtx, mode: Mode) -> SrcCtx {
    if mode != Mode::Sorted {
        return ctx.clone();
    }
    let mut out = SrcCtx::new();
    for entry in ctx.entries() {
        match entry {
            CtxEntry::Term(n, t) => out.push_term(n.clone(), t.default_levels().0),
            CtxEntry::TyVar(n, l) => out.push_ty_var(n.clone(), *l),
        }
    }
    out
}

struct Converter {
    mode: Mode,
    rules: SortRules,
    layouts: Vec<ClosureLayout>,
}

impl Converter {
    /// Type-directed conversion; mirrors the source checker's type
    /// computation so each lambda knows its environment types and level.
    fn convert(&mut self, ctx: &mut SrcCtx, e: &Term) -> Result<(TargetTerm, Type), TypeError> {
        match &e.kind {
            TermKind::Var(x) => {
                let ty = ctx
                    .lookup_term(x)
                    .cloned()
                    .ok_or_else(|| unbound(e.span, x))?;
                Ok((TargetTerm::var(x.clone()), ty))
            }
            TermKind::Nat(n) => Ok((TargetTerm::mk(TargetTermKind::Nat(n.clone())), Type::Nat)),
            TermKind::Unit => Ok((TargetTerm::mk(TargetTermKind::Unit), Type::Unit)),
            TermKind::Lam {
                param,
                param_ty,
                body,
                ..
            } => {
                let pty = if self.mode == Mode::Sorted {
                    param_ty.default_levels().0
                } else {
                    param_ty.clone()
                };
                let captured: Vec<(String, Type)> = e
                    .free_vars()
                    .into_iter()
                    .filter_map(|v| ctx.lookup_term(&v).cloned().map(|t| (v, t)))
                    .collect();
                let env_level = if self.mode == Mode::Sorted {
                    let mut j = 0;
                    for (_, t) in &captured {
                        j = j.max(sort_of_target_err(ctx, t, &self.rules, e.span)?);
                    }
                    j
                } else {
                    0
                };

                ctx.push_term(param.clone(), pty.clone());
                let (body_t, body_ty) = self.convert(ctx, body)?;
                ctx.pop();

                let arrow_level = (self.mode == Mode::Sorted).then_some(env_level);
                let src_arrow = Type::arrow(pty.clone(), body_ty, arrow_level);
                let annot = convert_type(&src_arrow, self.mode)?;

                // Unit-terminated, right-nested environment
                let mut env_type = TargetType::Unit;
                for (_, t) in captured.iter().rev() {
                    env_type = TargetType::product(convert_type(t, self.mode)?, env_type);
                }
                self.layouts.push(ClosureLayout {
                    captured: captured.clone(),
                    env_type: env_type.clone(),
                    env_level,
                });

                let mut avoid: BTreeSet<String> =
                    captured.iter().map(|(n, _)| n.clone()).collect();
                avoid.insert(param.clone());
                let env_name = fresh_name("env", &avoid);

                // rebind each captured variable from the environment parameter
                let mut code_body = body_t;
                let mut path = TargetTerm::var(env_name.clone());
                let mut projections = Vec::new();
                for (name, _) in &captured {
                    projections.push((
                        name.clone(),
                        TargetTerm::mk(TargetTermKind::Proj(
                            ProjIdx::Fst,
                            Box::new(path.clone()),
                        )),
                    ));
                    path = TargetTerm::mk(TargetTermKind::Proj(ProjIdx::Snd, Box::new(path)));
                }
                for (name, proj) in projections.into_iter().rev() {
                    code_body = TargetTerm::mk(TargetTermKind::Let {
                        name,
                        bound: Box::new(proj),
                        body: Box::new(code_body),
                    });
                }
                let code = TargetTerm::mk(TargetTermKind::CodeLam {
                    params: vec![
                        (param.clone(), convert_type(&pty, self.mode)?),
                        (env_name, env_type.clone()),
                    ],
                    body: Box::new(code_body),
                });

                let mut env_tuple = TargetTerm::mk(TargetTermKind::Unit);
                for (name, _) in captured.iter().rev() {
                    env_tuple = TargetTerm::mk(TargetTermKind::Pair(
                        Box::new(TargetTerm::var(name.clone())),
                        Box::new(env_tuple),
                    ));
                }

                let packed = TargetTerm::new(
                    TargetTermKind::Pack {
                        witness: env_type,
                        payload: Box::new(TargetTerm::mk(TargetTermKind::Pair(
                            Box::new(code),
                            Box::new(env_tuple),
                        ))),
                        annot,
                    },
                    e.span,
                );
                Ok((packed, src_arrow))
            }
            TermKind::App(f, a) => {
                let (ft, fty) = self.convert(ctx, f)?;
                let (at, aty) = self.convert(ctx, a)?;
                let cod = match &fty {
                    Type::Arrow { cod, .. } => (**cod).clone(),
                    other => {
                        return Err(TypeError::new(
                            TypeErrorKind::NotAFunction,
                            f.span,
                            "function type",
                            crate::syntax::pretty_type(other),
                            "",
                        ))
                    }
                };
                let _ = aty;
                let mut avoid = ft.free_vars();
                avoid.extend(at.free_vars());
                let p = fresh_name("p", &avoid);
                let pv = TargetTerm::var(p.clone());
                let call = TargetTerm::mk(TargetTermKind::App(
                    Box::new(TargetTerm::mk(TargetTermKind::App(
                        Box::new(TargetTerm::mk(TargetTermKind::Proj(
                            ProjIdx::Fst,
                            Box::new(pv.clone()),
                        ))),
                        Box::new(at),
                    ))),
                    Box::new(TargetTerm::mk(TargetTermKind::Proj(
                        ProjIdx::Snd,
                        Box::new(pv),
                    ))),
                ));
                let unpacked = TargetTerm::new(
                    TargetTermKind::Unpack {
                        ty_var: "a".into(),
                        val_var: p,
                        package: Box::new(ft),
                        body: Box::new(call),
                    },
                    e.span,
                );
                Ok((unpacked, cod))
            }
            TermKind::New(inner) => {
                let (t, ty) = self.convert(ctx, inner)?;
                Ok((
                    TargetTerm::new(TargetTermKind::New(Box::new(t)), e.span),
                    Type::reft(ty),
                ))
            }
            TermKind::Deref(inner) => {
                let (t, ty) = self.convert(ctx, inner)?;
                let content = match ty {
                    Type::Ref(c) => *c,
                    other => {
                        return Err(TypeError::new(
                            TypeErrorKind::NotARef,
                            inner.span,
                            "reference type",
                            crate::syntax::pretty_type(&other),
                            "",
                        ))
                    }
                };
                Ok((
                    TargetTerm::new(TargetTermKind::Deref(Box::new(t)), e.span),
                    content,
                ))
            }
            TermKind::Assign(r, v) => {
                let (rt, _) = self.convert(ctx, r)?;
                let (vt, _) = self.convert(ctx, v)?;
                Ok((
                    TargetTerm::new(TargetTermKind::Assign(Box::new(rt), Box::new(vt)), e.span),
                    Type::Unit,
                ))
            }
            TermKind::Seq(a, b) => {
                let (at, _) = self.convert(ctx, a)?;
                let (bt, bty) = self.convert(ctx, b)?;
                Ok((
                    TargetTerm::new(TargetTermKind::Seq(Box::new(at), Box::new(bt)), e.span),
                    bty,
                ))
            }
            TermKind::Let { name, bound, body } => {
                let (bt, bty) = self.convert(ctx, bound)?;
                ctx.push_term(name.clone(), bty);
                let (bodyt, ty) = self.convert(ctx, body)?;
                ctx.pop();
                Ok((
                    TargetTerm::new(
                        TargetTermKind::Let {
                            name: name.clone(),
                            bound: Box::new(bt),
                            body: Box::new(bodyt),
                        },
                        e.span,
                    ),
                    ty,
                ))
            }
            TermKind::Pair(a, b) => {
                let (at, aty) = self.convert(ctx, a)?;
                let (bt, bty) = self.convert(ctx, b)?;
                Ok((
                    TargetTerm::new(TargetTermKind::Pair(Box::new(at), Box::new(bt)), e.span),
                    Type::product(aty, bty),
                ))
            }
            TermKind::Proj(idx, inner) => {
                let (t, ty) = self.convert(ctx, inner)?;
                let ty = match (idx, ty) {
                    (ProjIdx::Fst, Type::Product(l, _)) => *l,
                    (ProjIdx::Snd, Type::Product(_, r)) => *r,
                    (_, other) => {
                        return Err(TypeError::new(
                            TypeErrorKind::NotAProduct,
                            inner.span,
                            "product type",
                            crate::syntax::pretty_type(&other),
                            "",
                        ))
                    }
                };
                Ok((
                    TargetTerm::new(TargetTermKind::Proj(*idx, Box::new(t)), e.span),
                    ty,
                ))
            }
        }
    }
}

fn unbound(span: Span, name: &str) -> TypeError {
    TypeError::new(
        TypeErrorKind::UnboundVariable,
        span,
        "bound variable",
        name,
        name,
    )
}

fn sort_of_target_err<T>(
    ctx: &TypingContext<T>,
    t: &Type,
    rules: &SortRules,
    span: Span,
) -> Result<u32, TypeError> {
    crate::sorts::sort_of_source_with(ctx, t, rules).map_err(|e| match e {
        SortError::UnannotatedArrow(t) => TypeError::new(
            TypeErrorKind::UnannotatedArrow,
            span,
            "level-annotated arrow",
            crate::syntax::pretty_type(&t),
            "",
        ),
        SortError::UnboundTypeVar(a) => {
            TypeError::new(TypeErrorKind::UnboundVariable, span, "bound type variable", a, "")
        }
    })
}

// ---------------------------------------------------------------------------
// target type checker
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cmp {
    Equal,
    LevelOnly,
    Different,
}

fn join(a: Cmp, b: Cmp) -> Cmp {
    use Cmp::*;
    match (a, b) {
        (Different, _) | (_, Different) => Different,
        (LevelOnly, _) | (_, LevelOnly) => LevelOnly,
        _ => Equal,
    }
}

/// Alpha-aware structural comparison; `LevelOnly` means the types differ only
/// in existential sort annotations.
fn tcompare(a: &TargetType, b: &TargetType, pairs: &mut Vec<(String, String)>) -> Cmp {
    match (a, b) {
        (TargetType::Nat, TargetType::Nat) | (TargetType::Unit, TargetType::Unit) => Cmp::Equal,
        (TargetType::Var(x), TargetType::Var(y)) => {
            for (l, r) in pairs.iter().rev() {
                if l == x || r == y {
                    return if l == x && r == y {
                        Cmp::Equal
                    } else {
                        Cmp::Different
                    };
                }
            }
            if x == y {
                Cmp::Equal
            } else {
                Cmp::Different
            }
        }
        (TargetType::Arrow(d1, c1), TargetType::Arrow(d2, c2)) => {
            join(tcompare(d1, d2, pairs), tcompare(c1, c2, pairs))
        }
        (TargetType::Product(l1, r1), TargetType::Product(l2, r2)) => {
            join(tcompare(l1, l2, pairs), tcompare(r1, r2, pairs))
        }
        (TargetType::Ref(x), TargetType::Ref(y)) => tcompare(x, y, pairs),
        (
            TargetType::Exists {
                var: v1,
                level: j1,
                body: b1,
            },
            TargetType::Exists {
                var: v2,
                level: j2,
                body: b2,
            },
        ) => {
            pairs.push((v1.clone(), v2.clone()));
            let body = tcompare(b1, b2, pairs);
            pairs.pop();
            if body == Cmp::Different {
                Cmp::Different
            } else if j1 != j2 {
                Cmp::LevelOnly
            } else {
                body
            }
        }
        _ => Cmp::Different,
    }
}

pub(crate) fn target_types_agree(a: &TargetType, b: &TargetType, mode: Mode) -> bool {
    match tcompare(a, b, &mut Vec::new()) {
        Cmp::Equal => true,
        Cmp::LevelOnly => mode != Mode::Sorted,
        Cmp::Different => false,
    }
}

pub fn typecheck_target(ctx: &TgtCtx, e: &TargetTerm, mode: Mode) -> Result<TargetType, TypeError> {
    typecheck_target_with(ctx, e, mode, &SortRules::default())
}

pub fn typecheck_target_with(
    ctx: &TgtCtx,
    e: &TargetTerm,
    mode: Mode,
    rules: &SortRules,
) -> Result<TargetType, TypeError> {
    let mut c = TargetChecker { mode, rules: *rules };
    let mut ctx = ctx.clone();
    c.check(&mut ctx, e).map(|(t, _)| t)
}

pub fn explain_target(ctx: &TgtCtx, e: &TargetTerm, mode: Mode) -> Result<Derivation, TypeError> {
    let mut c = TargetChecker {
        mode,
        rules: SortRules::default(),
    };
    let mut ctx = ctx.clone();
    c.check(&mut ctx, e).map(|(_, d)| d)
}

struct TargetChecker {
    mode: Mode,
    rules: SortRules,
}

impl TargetChecker {
    fn node(
        &self,
        ctx: &TgtCtx,
        rule: &str,
        e: &TargetTerm,
        ty: &TargetType,
        children: Vec<Derivation>,
    ) -> Derivation {
        let sort = if self.mode == Mode::Sorted {
            sort_of_target_with(ctx, ty, &self.rules).ok()
        } else {
            None
        };
        Derivation {
            rule: rule.to_string(),
            ctx: ctx.render(),
            term: Some(pretty_target_term(e)),
            ty: pretty_target_type(ty),
            sort,
            children,
        }
    }

    fn mismatch(
        &self,
        span: Span,
        expected: &TargetType,
        found: &TargetType,
        subterm: &TargetTerm,
    ) -> TypeError {
        let kind = if self.mode == Mode::Sorted
            && tcompare(expected, found, &mut Vec::new()) == Cmp::LevelOnly
        {
            TypeErrorKind::SortMismatch
        } else {
            TypeErrorKind::Mismatch
        };
        TypeError::new(
            kind,
            span,
            pretty_target_type(expected),
            pretty_target_type(found),
            pretty_target_term(subterm),
        )
    }

    fn check(
        &mut self,
        ctx: &mut TgtCtx,
        e: &TargetTerm,
    ) -> Result<(TargetType, Derivation), TypeError> {
        match &e.kind {
            TargetTermKind::Var(x) => match ctx.lookup_term(x) {
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
                    pretty_target_term(e),
                )),
            },
            TargetTermKind::Nat(_) => {
                let d = self.node(ctx, "Nat", e, &TargetType::Nat, vec![]);
                Ok((TargetType::Nat, d))
            }
            TargetTermKind::Unit => {
                let d = self.node(ctx, "Unit", e, &TargetType::Unit, vec![]);
                Ok((TargetType::Unit, d))
            }
            TargetTermKind::CodeLam { params, body } => {
                // closedness: code may reference only its own parameters
                for v in e.free_vars() {
                    if ctx.lookup_term(&v).is_some() {
                        return Err(TypeError::new(
                            TypeErrorKind::ClosednessViolation,
                            e.span,
                            "code referencing only its parameters",
                            format!("outer variable {v}"),
                            pretty_target_term(e),
                        ));
                    } else {
                        return Err(TypeError::new(
                            TypeErrorKind::UnboundVariable,
                            e.span,
                            "bound variable",
                            v,
                            pretty_target_term(e),
                        ));
                    }
                }
                let mut inner = TgtCtx::new();
                for entry in ctx.entries() {
                    if let CtxEntry::TyVar(n, l) = entry {
                        inner.push_ty_var(n.clone(), *l);
                    }
                }
                for (p, t) in params {
                    inner.push_term(p.clone(), t.clone());
                }
                let (body_ty, body_d) = self.check(&mut inner, body)?;
                let mut ty = body_ty;
                for (_, t) in params.iter().rev() {
                    ty = TargetType::arrow(t.clone(), ty);
                }
                let d = self.node(ctx, "Code", e, &ty, vec![body_d]);
                Ok((ty, d))
            }
            TargetTermKind::App(f, a) => {
                let (fty, fd) = self.check(ctx, f)?;
                let (aty, ad) = self.check(ctx, a)?;
                match &fty {
                    TargetType::Arrow(dom, cod) => {
                        if !target_types_agree(dom, &aty, self.mode) {
                            return Err(self.mismatch(a.span, dom, &aty, a));
                        }
                        let ty = (**cod).clone();
                        let d = self.node(ctx, "App", e, &ty, vec![fd, ad]);
                        Ok((ty, d))
                    }
                    _ => Err(TypeError::new(
                        TypeErrorKind::NotAFunction,
                        f.span,
                        "code type",
                        pretty_target_type(&fty),
                        pretty_target_term(f),
                    )),
                }
            }
            TargetTermKind::Pack {
                witness,
                payload,
                annot,
            } => {
                let TargetType::Exists { var, level, body } = annot else {
                    return Err(TypeError::new(
                        TypeErrorKind::Mismatch,
                        e.span,
                        "existential annotation on pack",
                        pretty_target_type(annot),
                        pretty_target_term(e),
                    ));
                };
                let mut children = Vec::new();
                match self.mode {
                    Mode::FullGround => {
                        if !is_full_ground_target(witness) {
                            return Err(TypeError::new(
                                TypeErrorKind::NonFullGroundCapture,
                                e.span,
                                "full-ground witness type",
                                pretty_target_type(witness),
                                pretty_target_term(e),
                            ));
                        }
                    }
                    Mode::Sorted => {
                        let (j, sort_d) = sort_derivation_target(ctx, witness, &self.rules)
                            .map_err(|err| sort_err(err, e.span))?;
                        if j != *level {
                            return Err(TypeError::new(
                                TypeErrorKind::SortMismatch,
                                e.span,
                                format!("witness of sort Type {level}"),
                                format!("{} :: Type {j}", pretty_target_type(witness)),
                                pretty_target_term(e),
                            ));
                        }
                        children.push(sort_d);
                    }
                    Mode::Unrestricted => {}
                }
                let expected = subst_type(body, witness, var);
                let (pty, pd) = self.check(ctx, payload)?;
                if !target_types_agree(&expected, &pty, self.mode) {
                    return Err(self.mismatch(payload.span, &expected, &pty, payload));
                }
                children.push(pd);
                let d = self.node(ctx, "Pack", e, annot, children);
                Ok((annot.clone(), d))
            }
            TargetTermKind::Unpack {
                ty_var,
                val_var,
                package,
                body,
            } => {
                let (pkg_ty, pkg_d) = self.check(ctx, package)?;
                let TargetType::Exists { var, level, body: inner } = &pkg_ty else {
                    return Err(TypeError::new(
                        TypeErrorKind::Mismatch,
                        package.span,
                        "existential type",
                        pretty_target_type(&pkg_ty),
                        pretty_target_term(package),
                    ));
                };
                let opened = subst_type(inner, &TargetType::Var(ty_var.clone()), var);
                ctx.push_ty_var(ty_var.clone(), *level);
                ctx.push_term(val_var.clone(), opened);
                let result = self.check(ctx, body);
                ctx.pop();
                ctx.pop();
                let (bty, bd) = result?;
                if bty.free_ty_vars().contains(ty_var) {
                    return Err(TypeError::new(
                        TypeErrorKind::Mismatch,
                        e.span,
                        format!("result type not mentioning {ty_var}"),
                        pretty_target_type(&bty),
                        pretty_target_term(e),
                    ));
                }
                let d = self.node(ctx, "Unpack", e, &bty, vec![pkg_d, bd]);
                Ok((bty, d))
            }
            TargetTermKind::New(inner) => {
                let (t, d0) = self.check(ctx, inner)?;
                let ty = TargetType::reft(t);
                let d = self.node(ctx, "New", e, &ty, vec![d0]);
                Ok((ty, d))
            }
            TargetTermKind::Deref(inner) => {
                let (t, d0) = self.check(ctx, inner)?;
                match t {
                    TargetType::Ref(content) => {
                        let ty = *content;
                        let d = self.node(ctx, "Deref", e, &ty, vec![d0]);
                        Ok((ty, d))
                    }
                    other => Err(TypeError::new(
                        TypeErrorKind::NotARef,
                        inner.span,
                        "reference type",
                        pretty_target_type(&other),
                        pretty_target_term(inner),
                    )),
                }
            }
            TargetTermKind::Assign(r, v) => {
                let (rty, rd) = self.check(ctx, r)?;
                let (vty, vd) = self.check(ctx, v)?;
                match &rty {
                    TargetType::Ref(content) => {
                        if !target_types_agree(content, &vty, self.mode) {
                            return Err(self.mismatch(e.span, content, &vty, e));
                        }
                        let d = self.node(ctx, "Assign", e, &TargetType::Unit, vec![rd, vd]);
                        Ok((TargetType::Unit, d))
                    }
                    _ => Err(TypeError::new(
                        TypeErrorKind::NotARef,
                        r.span,
                        "reference type",
                        pretty_target_type(&rty),
                        pretty_target_term(r),
                    )),
                }
            }
            TargetTermKind::Seq(a, b) => {
                let (aty, ad) = self.check(ctx, a)?;
                if !target_types_agree(&aty, &TargetType::Unit, self.mode) {
                    return Err(self.mismatch(a.span, &TargetType::Unit, &aty, a));
                }
                let (bty, bd) = self.check(ctx, b)?;
                let d = self.node(ctx, "Seq", e, &bty, vec![ad, bd]);
                Ok((bty, d))
            }
            TargetTermKind::Let { name, bound, body } => {
                let (bty, bd) = self.check(ctx, bound)?;
                ctx.push_term(name.clone(), bty);
                let result = self.check(ctx, body);
                ctx.pop();
                let (ty, body_d) = result?;
                let d = self.node(ctx, "Let", e, &ty, vec![bd, body_d]);
                Ok((ty, d))
            }
            TargetTermKind::Pair(a, b) => {
                let (aty, ad) = self.check(ctx, a)?;
                let (bty, bd) = self.check(ctx, b)?;
                let ty = TargetType::product(aty, bty);
                let d = self.node(ctx, "Pair", e, &ty, vec![ad, bd]);
                Ok((ty, d))
            }
            TargetTermKind::Proj(idx, inner) => {
                let (t, d0) = self.check(ctx, inner)?;
                match t {
                    TargetType::Product(l, r) => {
                        let ty = match idx {
                            ProjIdx::Fst => *l,
                            ProjIdx::Snd => *r,
                        };
                        let d = self.node(ctx, &format!("Proj{}", idx.number()), e, &ty, vec![d0]);
                        Ok((ty, d))
                    }
                    other => Err(TypeError::new(
                        TypeErrorKind::NotAProduct,
                        inner.span,
                        "product type",
                        pretty_target_type(&other),
                        pretty_target_term(inner),
                    )),
                }
            }
        }
    }
}

fn sort_err(e: SortError, span: Span) -> TypeError {
    match e {
        SortError::UnannotatedArrow(t) => TypeError::new(
            TypeErrorKind::UnannotatedArrow,
            span,
            "level-annotated arrow",
            crate::syntax::pretty_type(&t),
            "",
        ),
        SortError::UnboundTypeVar(a) => TypeError::new(
            TypeErrorKind::UnboundVariable,
            span,
            "bound type variable",
            a,
            "",
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{eval_source, eval_target, Outcome, Value};
    use crate::syntax::{parse_source, parse_target_type, parse_type, pretty_target_term};

    #[test]
    fn arrows_become_existential_closure_types() {
        let t = parse_type("Nat ->[1] Nat").unwrap();
        let got = convert_type(&t, Mode::Sorted).unwrap();
        let want =
            parse_target_type("exists a : Type 1 . <Nat -> a -> Nat x a>").unwrap();
        assert_eq!(got, want);
        // non-sorted modes put every environment at level 0
        let t = parse_type("Nat -> Nat").unwrap();
        let got = convert_type(&t, Mode::Unrestricted).unwrap();
        let want =
            parse_target_type("exists a : Type 0 . <Nat -> a -> Nat x a>").unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn conversion_preserves_types_on_the_corpus() {
        for (name, src) in crate::corpus::ALL {
            let e = parse_source(src).unwrap();
            for mode in Mode::ALL {
                let Ok(ty) = crate::typecheck::typecheck_source(&SrcCtx::new(), &e, mode) else {
                    continue;
                };
                let target = closure_convert(&SrcCtx::new(), &e, mode).expect(name);
                let tty = typecheck_target(&TgtCtx::new(), &target, mode).expect(name);
                assert_eq!(tty, convert_type(&ty, mode).unwrap(), "{name} {mode}");
            }
        }
    }

    #[test]
    fn converted_programs_round_trip_through_the_target_printer() {
        for (name, src) in crate::corpus::ALL {
            let e = parse_source(src).unwrap();
            let target = closure_convert(&SrcCtx::new(), &e, Mode::Unrestricted).unwrap();
            let printed = pretty_target_term(&target);
            assert_eq!(
                crate::syntax::parse_target(&printed).unwrap(),
                target,
                "{name} via {printed}"
            );
        }
    }

    #[test]
    fn converted_closures_record_their_captures() {
        let mut ctx = SrcCtx::new();
        ctx.push_term("r", parse_type("Ref Nat").unwrap());
        ctx.push_term("n", parse_type("Nat").unwrap());
        let e = parse_source("lam x : Nat . n").unwrap();
        let (_, layouts) = closure_convert_layouts(&ctx, &e, Mode::Sorted).unwrap();
        assert_eq!(layouts.len(), 1);
        // only n is captured, and a Nat environment sits at level 0
        let names: Vec<&str> = layouts[0].captured.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, vec!["n"]);
        assert_eq!(layouts[0].env_level, 0);
    }

    #[test]
    fn environments_list_captures_in_name_order() {
        let mut ctx = SrcCtx::new();
        ctx.push_term("b", parse_type("Nat").unwrap());
        ctx.push_term("a", parse_type("Nat").unwrap());
        let e = parse_source("lam x : Nat . <a, b>").unwrap();
        let (_, layouts) = closure_convert_layouts(&ctx, &e, Mode::Sorted).unwrap();
        let names: Vec<&str> = layouts[0].captured.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, vec!["a", "b"]);
    }

    #[test]
    fn substitution_avoids_capturing_existential_binders() {
        let body = parse_target_type("exists a : Type 0 . <a x b>").unwrap();
        let witness = parse_target_type("a").unwrap();
        let out = subst_type(&body, &witness, "b");
        // the binder must be renamed so the free `a` stays free
        match out {
            TargetType::Exists { var, body, .. } => {
                assert_ne!(var, "a");
                assert_eq!(
                    *body,
                    TargetType::Product(
                        Box::new(TargetType::Var(var)),
                        Box::new(TargetType::Var("a".into()))
                    )
                );
            }
            other => panic!("expected existential, got {other:?}"),
        }
    }

    #[test]
    fn unpack_results_may_not_mention_the_opened_variable() {
        // unpack yielding proj2 p : a would leak the abstract type
        let e = crate::syntax::parse_target(
            "unpack <a, p> = pack <Nat, <lam x : Nat . lam env : Nat . x, 7>> as \
             exists b : Type 0 . <Nat -> b -> Nat x b> in proj2 p",
        )
        .unwrap();
        let err = typecheck_target(&TgtCtx::new(), &e, Mode::Unrestricted).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::Mismatch);
    }

    #[test]
    fn code_must_be_closed() {
        let e = crate::syntax::parse_target(
            "unpack <a, p> = pack <Nat, <lam x : Nat . lam env : Nat . y, 7>> as \
             exists b : Type 0 . <Nat -> b -> Nat x b> in 0",
        )
        .unwrap();
        // y is unbound anywhere, so it is an unbound variable
        let err = typecheck_target(&TgtCtx::new(), &e, Mode::Unrestricted).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::UnboundVariable);
        // a variable bound outside the code block is a closedness violation
        let e = crate::syntax::parse_target(
            "unpack <a, p> = pack <Nat, <lam x : Nat . lam env : Nat . x, 7>> as \
             exists b : Type 0 . <Nat -> b -> Nat x b> in \
             pack <Nat, <lam z : Nat . lam env : Nat . proj1 p z z, 7>> as \
             exists c : Type 0 . <Nat -> c -> Nat x c>",
        )
        .unwrap();
        let err = typecheck_target(&TgtCtx::new(), &e, Mode::Unrestricted).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::ClosednessViolation);
    }

    #[test]
    fn pack_witnesses_respect_the_active_discipline() {
        // a witness containing an existential is not full-ground
        let e = crate::syntax::parse_target(
            "pack <exists b : Type 0 . <Nat -> b -> Nat x b>, \
             <lam x : Nat . lam env : exists b : Type 0 . <Nat -> b -> Nat x b> . x, \
             pack <Unit, <lam y : Nat . lam env : Unit . y, unit>> as \
             exists b : Type 0 . <Nat -> b -> Nat x b>>> as \
             exists c : Type 0 . <Nat -> c -> Nat x c>",
        )
        .unwrap();
        assert!(typecheck_target(&TgtCtx::new(), &e, Mode::Unrestricted).is_ok());
        let err = typecheck_target(&TgtCtx::new(), &e, Mode::FullGround).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::NonFullGroundCapture);
        // sorted: the witness's sort must equal the annotation's level
        let err = typecheck_target(&TgtCtx::new(), &e, Mode::Sorted);
        assert!(err.is_ok(), "witness sort 0 matches Type 0: {err:?}");
    }

    #[test]
    fn compiled_code_computes_the_same_answers() {
        for (src, want) in [
            ("(lam x : Nat . x) 41", 41u64),
            ("let r = new 5 in r := 9; !r", 9),
            ("proj2 <1, (lam x : Nat . x) 2>", 2),
            ("let f = (let n = 3 in lam x : Nat . n) in f 0", 3),
        ] {
            let e = parse_source(src).unwrap();
            let target = closure_convert(&SrcCtx::new(), &e, Mode::Unrestricted).unwrap();
            match (eval_source(&e, 1000), eval_target(&target, 4000)) {
                (
                    Outcome::Result { value: Value::Num(a), .. },
                    Outcome::Result { value: Value::Num(b), .. },
                ) => {
                    assert_eq!(a, want.into(), "{src}");
                    assert_eq!(b, want.into(), "{src}");
                }
                other => panic!("{src}: {other:?}"),
            }
        }
    }
}
