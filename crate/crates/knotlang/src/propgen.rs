//! Type-directed generation of random well-typed source programs, plus a
//! greedy shrinker. Generation is seeded and deterministic; a candidate that
//! fails its mode's check is regenerated up to a bounded attempt count, then
//! replaced by a literal.
//!
//! Production weights favor refs and lambdas (each at least a quarter of
//! type choices) so store-interaction bugs surface.

use rand_chacha::ChaCha8Rng;
use rand::{Rng, SeedableRng};

use crate::sorts::{is_full_ground, sort_of_source};
use crate::syntax::{Term, TermKind, Type};
use crate::typecheck::{typecheck_source, types_agree, Mode, SrcCtx};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    pub max_depth: u32,
    pub max_allocs: u32,
    pub mode: Mode,
    /// Bound on Ref nesting in generated types (SORTED level cap).
    pub level_cap: u32,
}

impl GenConfig {
    pub fn new(seed: u64, mode: Mode) -> Self {
        GenConfig {
            seed,
            max_depth: 8,
            max_allocs: 8,
            mode,
            level_cap: 3,
        }
    }
}

const MAX_ATTEMPTS: u32 = 100;

/// Generate a closed term that typechecks under `cfg.mode`.
pub fn generate(cfg: &GenConfig) -> Term {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..MAX_ATTEMPTS {
        let mut gen = Gen {
            rng: &mut rng,
            cfg,
            allocs: 0,
        };
        let goal = gen.gen_type(cfg.max_depth.min(3), cfg.level_cap);
        let mut ctx = SrcCtx::new();
        let candidate = gen.gen_term(&mut ctx, &goal, cfg.max_depth);
        if typecheck_source(&SrcCtx::new(), &candidate, cfg.mode).is_ok() {
            return candidate;
        }
    }
    Term::nat(0)
}

/// Generate a random type with every arrow annotated; used by the sort-law
/// property suites.
pub fn generate_annotated_type(seed: u64, max_depth: u32, level_cap: u32) -> Type {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gen_annotated_type(&mut rng, max_depth, level_cap)
}

fn gen_annotated_type(rng: &mut ChaCha8Rng, depth: u32, level_cap: u32) -> Type {
    if depth == 0 {
        return if rng.gen_bool(0.5) { Type::Nat } else { Type::Unit };
    }
    match rng.gen_range(0..100) {
        0..=19 => Type::Nat,
        20..=29 => Type::Unit,
        30..=54 => Type::arrow(
            gen_annotated_type(rng, depth - 1, level_cap),
            gen_annotated_type(rng, depth - 1, level_cap),
            Some(rng.gen_range(0..=level_cap)),
        ),
        55..=79 => Type::reft(gen_annotated_type(rng, depth - 1, level_cap)),
        _ => Type::product(
            gen_annotated_type(rng, depth - 1, level_cap),
            gen_annotated_type(rng, depth - 1, level_cap),
        ),
    }
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    cfg: &'a GenConfig,
    allocs: u32,
}

fn ref_depth(t: &Type) -> u32 {
    match t {
        Type::Nat | Type::Unit => 0,
        Type::Arrow { dom, cod, .. } => ref_depth(dom).max(ref_depth(cod)),
        Type::Product(l, r) => ref_depth(l).max(ref_depth(r)),
        Type::Ref(c) => 1 + ref_depth(c),
    }
}

impl Gen<'_> {
    /// Goal types carry no arrow annotations (levels are inferred) and keep
    /// Ref nesting within the level cap.
    fn gen_type(&mut self, depth: u32, ref_budget: u32) -> Type {
        if depth == 0 {
            return if self.rng.gen_bool(0.7) {
                Type::Nat
            } else {
                Type::Unit
            };
        }
        match self.rng.gen_range(0..100) {
            0..=19 => Type::Nat,
            20..=29 => Type::Unit,
            30..=54 => Type::arrow(
                self.gen_type(depth - 1, ref_budget),
                self.gen_type(depth - 1, ref_budget),
                None,
            ),
            55..=79 if ref_budget > 0 => {
                Type::reft(self.gen_type(depth - 1, ref_budget - 1))
            }
            55..=79 => Type::Nat,
            _ => Type::product(
                self.gen_type(depth - 1, ref_budget),
                self.gen_type(depth - 1, ref_budget),
            ),
        }
    }

    /// Smallest closed inhabitant of a type.
    fn minimal(&mut self, goal: &Type) -> Term {
        match goal {
            Type::Nat => Term::nat(self.rng.gen_range(0..10)),
            Type::Unit => Term::unit(),
            Type::Ref(c) => {
                self.allocs += 1;
                let inner = self.minimal(c);
                Term::mk(TermKind::New(Box::new(inner)))
            }
            Type::Product(l, r) => {
                let a = self.minimal(l);
                let b = self.minimal(r);
                Term::mk(TermKind::Pair(Box::new(a), Box::new(b)))
            }
            Type::Arrow { dom, cod, .. } => {
                let body = self.minimal(cod);
                Term::lam(self.fresh_param(), (**dom).clone(), body)
            }
        }
    }

    fn fresh_param(&mut self) -> String {
        format!("x{}", self.rng.gen_range(0..10000))
    }

    fn usable_vars(&self, ctx: &SrcCtx, goal: &Type) -> Vec<String> {
        let mut out = Vec::new();
        for entry in ctx.entries() {
            if let crate::context::CtxEntry::Term(n, t) = entry {
                if types_agree(t, goal, self.cfg.mode) && !out.contains(n) {
                    out.push(n.clone());
                }
            }
        }
        out
    }

    /// Context a lambda body may use: FULL-GROUND filters to full-ground
    /// variables; a level-0 requirement filters to level-0 variables.
    fn body_ctx(&self, ctx: &SrcCtx, require_level0: bool) -> SrcCtx {
        let mut out = SrcCtx::new();
        for entry in ctx.entries() {
            if let crate::context::CtxEntry::Term(n, t) = entry {
                let keep = match self.cfg.mode {
                    Mode::FullGround => is_full_ground(t),
                    Mode::Sorted if require_level0 => {
                        sort_of_source(ctx, &t.default_levels().0).map(|s| s == 0).unwrap_or(false)
                    }
                    _ => true,
                };
                if keep {
                    out.push_term(n.clone(), t.clone());
                }
            }
        }
        out
    }

    fn gen_term(&mut self, ctx: &mut SrcCtx, goal: &Type, depth: u32) -> Term {
        let vars = self.usable_vars(ctx, goal);
        if depth == 0 {
            if !vars.is_empty() && self.rng.gen_bool(0.5) {
                let i = self.rng.gen_range(0..vars.len());
                return Term::var(vars[i].clone());
            }
            return self.minimal(goal);
        }

        // occasionally wrap in a binding or sequencing form
        match self.rng.gen_range(0..100) {
            0..=14 => return self.gen_let(ctx, goal, depth),
            15..=24 => return self.gen_seq(ctx, goal, depth),
            25..=34 if depth >= 2 => return self.gen_app(ctx, goal, depth),
            35..=39 if ref_depth(goal) < self.cfg.level_cap => {
                return self.gen_deref(ctx, goal, depth)
            }
            40..=44 => return self.gen_proj(ctx, goal, depth),
            45..=54 if !vars.is_empty() => {
                let i = self.rng.gen_range(0..vars.len());
                return Term::var(vars[i].clone());
            }
            _ => {}
        }

        // introduction form for the goal
        match goal {
            Type::Nat => {
                if !vars.is_empty() && self.rng.gen_bool(0.4) {
                    let i = self.rng.gen_range(0..vars.len());
                    Term::var(vars[i].clone())
                } else {
                    Term::nat(self.rng.gen_range(0..100))
                }
            }
            Type::Unit => {
                // an assignment to a reference in scope, when available
                let refs: Vec<(String, Type)> = ctx
                    .entries()
                    .iter()
                    .filter_map(|e| match e {
                        crate::context::CtxEntry::Term(n, Type::Ref(c)) => {
                            Some((n.clone(), (**c).clone()))
                        }
                        _ => None,
                    })
                    .collect();
                if !refs.is_empty() && self.rng.gen_bool(0.6) {
                    let i = self.rng.gen_range(0..refs.len());
                    let (name, content) = refs[i].clone();
                    let value = self.gen_term(ctx, &content, depth - 1);
                    Term::mk(TermKind::Assign(
                        Box::new(Term::var(name)),
                        Box::new(value),
                    ))
                } else {
                    Term::unit()
                }
            }
            Type::Ref(content) => {
                if self.allocs >= self.cfg.max_allocs {
                    let content = (**content).clone();
                    let init = self.minimal(&content);
                    self.allocs += 1;
                    return Term::mk(TermKind::New(Box::new(init)));
                }
                self.allocs += 1;
                let init = self.gen_term(ctx, content, depth - 1);
                Term::mk(TermKind::New(Box::new(init)))
            }
            Type::Product(l, r) => {
                let a = self.gen_term(ctx, l, depth - 1);
                let b = self.gen_term(ctx, r, depth - 1);
                Term::mk(TermKind::Pair(Box::new(a), Box::new(b)))
            }
            Type::Arrow { dom, cod, level } => {
                let require_level0 =
                    self.cfg.mode == Mode::Sorted && matches!(level, Some(0));
                let mut body_ctx = self.body_ctx(ctx, require_level0);
                let param = self.fresh_param();
                body_ctx.push_term(param.clone(), (**dom).clone());
                let body = self.gen_term(&mut body_ctx, cod, depth - 1);
                Term::lam(param, (**dom).clone(), body)
            }
        }
    }

    fn gen_let(&mut self, ctx: &mut SrcCtx, goal: &Type, depth: u32) -> Term {
        let bound_ty = self.gen_type(2, self.cfg.level_cap);
        let bound = self.gen_term(ctx, &bound_ty, depth - 1);
        // record the checker's view of the bound term's type so later
        // variable picks agree on levels
        let actual = typecheck_source(ctx, &bound, self.cfg.mode).unwrap_or(bound_ty);
        let name = self.fresh_param();
        ctx.push_term(name.clone(), actual);
        let body = self.gen_term(ctx, goal, depth - 1);
        ctx.pop();
        Term::mk(TermKind::Let {
            name,
            bound: Box::new(bound),
            body: Box::new(body),
        })
    }

    fn gen_seq(&mut self, ctx: &mut SrcCtx, goal: &Type, depth: u32) -> Term {
        let first = self.gen_term(ctx, &Type::Unit, depth - 1);
        let second = self.gen_term(ctx, goal, depth - 1);
        Term::mk(TermKind::Seq(Box::new(first), Box::new(second)))
    }

    fn gen_app(&mut self, ctx: &mut SrcCtx, goal: &Type, depth: u32) -> Term {
        // prefer a function variable whose codomain matches the goal
        let funs: Vec<(String, Type)> = ctx
            .entries()
            .iter()
            .filter_map(|e| match e {
                crate::context::CtxEntry::Term(n, t @ Type::Arrow { cod, .. })
                    if types_agree(cod, goal, self.cfg.mode) =>
                {
                    Some((n.clone(), t.clone()))
                }
                _ => None,
            })
            .collect();
        if !funs.is_empty() && self.rng.gen_bool(0.5) {
            let i = self.rng.gen_range(0..funs.len());
            let (name, fty) = funs[i].clone();
            if let Type::Arrow { dom, .. } = fty {
                let arg = self.gen_term(ctx, &dom, depth - 1);
                return Term::app(Term::var(name), arg);
            }
        }
        let arg_ty = self.gen_type(2, self.cfg.level_cap);
        let fun_ty = Type::arrow(arg_ty.clone(), goal.clone(), None);
        let fun = self.gen_term(ctx, &fun_ty, depth - 1);
        let arg = self.gen_term(ctx, &arg_ty, depth - 1);
        Term::app(fun, arg)
    }

    fn gen_deref(&mut self, ctx: &mut SrcCtx, goal: &Type, depth: u32) -> Term {
        let ref_ty = Type::reft(goal.clone());
        let refs = self.usable_vars(ctx, &ref_ty);
        let r = if !refs.is_empty() && self.rng.gen_bool(0.7) {
            let i = self.rng.gen_range(0..refs.len());
            Term::var(refs[i].clone())
        } else {
            self.gen_term(ctx, &ref_ty, depth - 1)
        };
        Term::mk(TermKind::Deref(Box::new(r)))
    }

    fn gen_proj(&mut self, ctx: &mut SrcCtx, goal: &Type, depth: u32) -> Term {
        let filler = self.gen_type(1, self.cfg.level_cap);
        let pair = self.gen_term(
            ctx,
            &Type::product(goal.clone(), filler),
            depth - 1,
        );
        Term::mk(TermKind::Proj(crate::syntax::ProjIdx::Fst, Box::new(pair)))
    }
}

/// Greedily shrink a failing term: repeatedly replace some node by one of
/// its children or by a literal, keeping the failure, until no single-node
/// simplification still fails.
pub fn shrink(e: &Term, failing: &dyn Fn(&Term) -> bool) -> Term {
    debug_assert!(failing(e));
    let mut current = e.clone();
    loop {
        let mut advanced = false;
        for candidate in simplifications(&current) {
            if failing(&candidate) {
                current = candidate;
                advanced = true;
                break;
            }
        }
        if !advanced {
            return current;
        }
    }
}

/// All terms obtainable by one single-node simplification anywhere in `e`.
fn simplifications(e: &Term) -> Vec<Term> {
    let mut out = Vec::new();
    // replace the root by one of its children
    for c in children(e) {
        out.push(c.clone());
    }
    // replace the root by a leaf
    if !matches!(e.kind, TermKind::Nat(_) | TermKind::Unit) {
        out.push(Term::nat(0));
        out.push(Term::unit());
    }
    // recurse: simplify one child, keep the rest
    for (i, child) in children(e).into_iter().enumerate() {
        for s in simplifications(child) {
            out.push(replace_child(e, i, s));
        }
    }
    out
}

fn children(e: &Term) -> Vec<&Term> {
    match &e.kind {
        TermKind::Var(_) | TermKind::Nat(_) | TermKind::Unit => vec![],
        TermKind::Lam { body, .. } => vec![body],
        TermKind::New(a) | TermKind::Deref(a) | TermKind::Proj(_, a) => vec![a],
        TermKind::App(a, b)
        | TermKind::Assign(a, b)
        | TermKind::Seq(a, b)
        | TermKind::Pair(a, b) => vec![a, b],
        TermKind::Let { bound, body, .. } => vec![bound, body],
    }
}

fn replace_child(e: &Term, index: usize, new_child: Term) -> Term {
    let kind = match &e.kind {
        TermKind::Lam {
            param,
            param_ty,
            level,
            body: _,
        } => TermKind::Lam {
            param: param.clone(),
            param_ty: param_ty.clone(),
            level: *level,
            body: Box::new(new_child),
        },
        TermKind::New(_) => TermKind::New(Box::new(new_child)),
        TermKind::Deref(_) => TermKind::Deref(Box::new(new_child)),
        TermKind::Proj(i, _) => TermKind::Proj(*i, Box::new(new_child)),
        TermKind::App(a, b) => {
            if index == 0 {
                TermKind::App(Box::new(new_child), b.clone())
            } else {
                TermKind::App(a.clone(), Box::new(new_child))
            }
        }
        TermKind::Assign(a, b) => {
            if index == 0 {
                TermKind::Assign(Box::new(new_child), b.clone())
            } else {
                TermKind::Assign(a.clone(), Box::new(new_child))
            }
        }
        TermKind::Seq(a, b) => {
            if index == 0 {
                TermKind::Seq(Box::new(new_child), b.clone())
            } else {
                TermKind::Seq(a.clone(), Box::new(new_child))
            }
        }
        TermKind::Pair(a, b) => {
            if index == 0 {
                TermKind::Pair(Box::new(new_child), b.clone())
            } else {
                TermKind::Pair(a.clone(), Box::new(new_child))
            }
        }
        TermKind::Let { name, bound, body } => {
            if index == 0 {
                TermKind::Let {
                    name: name.clone(),
                    bound: Box::new(new_child),
                    body: body.clone(),
                }
            } else {
                TermKind::Let {
                    name: name.clone(),
                    bound: bound.clone(),
                    body: Box::new(new_child),
                }
            }
        }
        leaf => leaf.clone(),
    };
    Term::mk(kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_source, pretty_term};

    #[test]
    fn generation_is_deterministic_per_seed() {
        for mode in Mode::ALL {
            let cfg = GenConfig::new(7, mode);
            assert_eq!(generate(&cfg), generate(&cfg));
        }
        assert_ne!(
            generate(&GenConfig::new(1, Mode::Sorted)),
            generate(&GenConfig::new(2, Mode::Sorted))
        );
    }

    #[test]
    fn generated_programs_pass_their_own_mode() {
        for mode in Mode::ALL {
            for seed in 0..100 {
                let e = generate(&GenConfig::new(seed, mode));
                assert!(
                    typecheck_source(&SrcCtx::new(), &e, mode).is_ok(),
                    "{mode} seed {seed}: {}",
                    pretty_term(&e)
                );
            }
        }
    }

    #[test]
    fn generated_types_stay_within_the_ref_cap() {
        fn ref_nesting(t: &Type) -> u32 {
            match t {
                Type::Nat | Type::Unit => 0,
                Type::Arrow { dom, cod, .. } => ref_nesting(dom).max(ref_nesting(cod)),
                Type::Product(l, r) => ref_nesting(l).max(ref_nesting(r)),
                Type::Ref(c) => 1 + ref_nesting(c),
            }
        }
        fn scan(e: &Term, cap: u32) {
            if let TermKind::Lam { param_ty, .. } = &e.kind {
                assert!(ref_nesting(param_ty) <= cap, "{param_ty:?}");
            }
            for c in children(e) {
                scan(c, cap);
            }
        }
        for seed in 0..200 {
            let cfg = GenConfig::new(seed, Mode::Sorted);
            scan(&generate(&cfg), cfg.level_cap);
        }
    }

    #[test]
    fn shrinking_drops_an_irrelevant_binding() {
        let e = parse_source("let waste = new <0, unit> in 5 6").unwrap();
        // the failure: applying a number is ill-typed in every mode
        let ill_typed = |t: &Term| {
            typecheck_source(&SrcCtx::new(), t, Mode::Unrestricted).is_err()
                && !matches!(t.kind, TermKind::Var(_))
        };
        let small = shrink(&e, &ill_typed);
        assert_eq!(small, parse_source("5 6").unwrap());
    }

    #[test]
    fn shrinking_reaches_a_fixpoint_of_the_predicate() {
        for seed in 0..20 {
            let e = generate(&GenConfig::new(seed, Mode::Unrestricted));
            let big = |t: &Term| pretty_term(t).len() >= 3;
            if !big(&e) {
                continue;
            }
            let small = shrink(&e, &big);
            assert!(big(&small));
            for c in simplifications(&small) {
                assert!(!big(&c) || c == small || pretty_term(&c).len() >= pretty_term(&small).len());
            }
        }
    }
}
