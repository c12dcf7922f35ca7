//! The universe-sort engine: full-ground classification and Type_j level
//! assignment, including the rule that a Ref lives one level above its
//! content.

use std::fmt;

use crate::context::TypingContext;
use crate::derive::Derivation;
use crate::syntax::{pretty_target_type, pretty_type, TargetType, Type};

/// A sort: the full-ground classification or a universe level Type_j.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sort {
    FullGround,
    Level(u32),
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::FullGround => write!(f, "fg"),
            Sort::Level(j) => write!(f, "Type {j}"),
        }
    }
}

/// Knobs for the sort engine. `ref_bump: false` is a testing hook that turns
/// off the level increment on Ref; it is never reachable from the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SortRules {
    pub ref_bump: bool,
}

impl Default for SortRules {
    fn default() -> Self {
        SortRules { ref_bump: true }
    }
}

impl SortRules {
    pub fn without_ref_bump() -> Self {
        SortRules { ref_bump: false }
    }

    fn bump(&self, level: u32) -> u32 {
        if self.ref_bump {
            level + 1
        } else {
            level
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SortError {
    /// A level was demanded of an arrow that carries no annotation.
    UnannotatedArrow(Type),
    UnboundTypeVar(String),
}

impl fmt::Display for SortError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SortError::UnannotatedArrow(t) => {
                write!(f, "unannotated arrow under sort query: {}", pretty_type(t))
            }
            SortError::UnboundTypeVar(a) => write!(f, "unbound type variable {a}"),
        }
    }
}

impl std::error::Error for SortError {}

/// True iff the type is generated by g ::= Nat | Unit | <g x g> | Ref g.
pub fn is_full_ground(t: &Type) -> bool {
    match t {
        Type::Nat | Type::Unit => true,
        Type::Ref(c) => is_full_ground(c),
        Type::Product(l, r) => is_full_ground(l) && is_full_ground(r),
        Type::Arrow { .. } => false,
    }
}

/// Full-ground predicate over target types; existentials, code arrows, and
/// type variables are not ground.
pub fn is_full_ground_target(t: &TargetType) -> bool {
    match t {
        TargetType::Nat | TargetType::Unit => true,
        TargetType::Ref(c) => is_full_ground_target(c),
        TargetType::Product(l, r) => is_full_ground_target(l) && is_full_ground_target(r),
        TargetType::Arrow(..) | TargetType::Exists { .. } | TargetType::Var(_) => false,
    }
}

pub fn sort_of_source<T>(ctx: &TypingContext<T>, t: &Type) -> Result<u32, SortError> {
    sort_of_source_with(ctx, t, &SortRules::default())
}

pub fn sort_of_source_with<T>(
    _ctx: &TypingContext<T>,
    t: &Type,
    rules: &SortRules,
) -> Result<u32, SortError> {
    match t {
        Type::Nat | Type::Unit => Ok(0),
        Type::Product(l, r) => Ok(sort_of_source_with(_ctx, l, rules)?
            .max(sort_of_source_with(_ctx, r, rules)?)),
        Type::Ref(c) => Ok(rules.bump(sort_of_source_with(_ctx, c, rules)?)),
        Type::Arrow { level: Some(j), .. } => Ok(*j),
        Type::Arrow { level: None, .. } => Err(SortError::UnannotatedArrow(t.clone())),
    }
}

pub fn sort_of_target(
    ctx: &TypingContext<TargetType>,
    t: &TargetType,
) -> Result<u32, SortError> {
    sort_of_target_with(ctx, t, &SortRules::default())
}

pub fn sort_of_target_with(
    ctx: &TypingContext<TargetType>,
    t: &TargetType,
    rules: &SortRules,
) -> Result<u32, SortError> {
    sort_target(ctx, t, rules, &mut Vec::new())
}

fn sort_target(
    ctx: &TypingContext<TargetType>,
    t: &TargetType,
    rules: &SortRules,
    scope: &mut Vec<(String, u32)>,
) -> Result<u32, SortError> {
    match t {
        TargetType::Nat | TargetType::Unit => Ok(0),
        // closed code carries no environment: max over zero free variables
        TargetType::Arrow(..) => Ok(0),
        TargetType::Product(l, r) => {
            Ok(sort_target(ctx, l, rules, scope)?.max(sort_target(ctx, r, rules, scope)?))
        }
        TargetType::Ref(c) => Ok(rules.bump(sort_target(ctx, c, rules, scope)?)),
        TargetType::Var(a) => scope
            .iter()
            .rev()
            .find(|(n, _)| n == a)
            .map(|(_, l)| *l)
            .or_else(|| ctx.lookup_ty_var(a))
            .ok_or_else(|| SortError::UnboundTypeVar(a.clone())),
        TargetType::Exists { var, level, body } => {
            scope.push((var.clone(), *level));
            let k = sort_target(ctx, body, rules, scope)?;
            scope.pop();
            Ok(k)
        }
    }
}

/// Sort derivation over a target type, for derivation-tree display. The
/// returned tree's root judgment is `ctx |- t :: Type j`.
pub fn sort_derivation_target(
    ctx: &TypingContext<TargetType>,
    t: &TargetType,
    rules: &SortRules,
) -> Result<(u32, Derivation), SortError> {
    sort_deriv(ctx, t, rules, &mut Vec::new())
}

fn sort_deriv(
    ctx: &TypingContext<TargetType>,
    t: &TargetType,
    rules: &SortRules,
    scope: &mut Vec<(String, u32)>,
) -> Result<(u32, Derivation), SortError> {
    let node = |rule: &str, level: u32, children: Vec<Derivation>, scope: &[(String, u32)]| {
        let mut ctx_s = ctx.render();
        for (n, l) in scope {
            if ctx_s == "." {
                ctx_s = format!("{n} : Type {l}");
            } else {
                ctx_s.push_str(&format!(", {n} : Type {l}"));
            }
        }
        Derivation {
            rule: rule.to_string(),
            ctx: ctx_s,
            term: None,
            ty: pretty_target_type(t),
            sort: Some(level),
            children,
        }
    };
    match t {
        TargetType::Nat => Ok((0, node("Sort-Nat", 0, vec![], scope))),
        TargetType::Unit => Ok((0, node("Sort-Unit", 0, vec![], scope))),
        TargetType::Arrow(..) => Ok((0, node("Sort-Code", 0, vec![], scope))),
        TargetType::Product(l, r) => {
            let (jl, dl) = sort_deriv(ctx, l, rules, scope)?;
            let (jr, dr) = sort_deriv(ctx, r, rules, scope)?;
            let j = jl.max(jr);
            Ok((j, node("Sort-Prod", j, vec![dl, dr], scope)))
        }
        TargetType::Ref(c) => {
            let (jc, dc) = sort_deriv(ctx, c, rules, scope)?;
            let j = rules.bump(jc);
            Ok((j, node("Sort-Ref", j, vec![dc], scope)))
        }
        TargetType::Var(a) => {
            let j = scope
                .iter()
                .rev()
                .find(|(n, _)| n == a)
                .map(|(_, l)| *l)
                .or_else(|| ctx.lookup_ty_var(a))
                .ok_or_else(|| SortError::UnboundTypeVar(a.clone()))?;
            Ok((j, node("Sort-Var", j, vec![], scope)))
        }
        TargetType::Exists { var, level, body } => {
            scope.push((var.clone(), *level));
            let (k, db) = sort_deriv(ctx, body, rules, scope)?;
            scope.pop();
            Ok((k, node("Sort-Exists", k, vec![db], scope)))
        }
    }
}
