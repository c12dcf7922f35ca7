//! Abstract syntax for the source language and the closure-converted target.

use std::collections::BTreeSet;

use num_bigint::BigUint;

/// Position of a token in the input, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

/// Projection index for binary tuples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjIdx {
    Fst,
    Snd,
}

impl ProjIdx {
    pub fn number(self) -> u8 {
        match self {
            ProjIdx::Fst => 1,
            ProjIdx::Snd => 2,
        }
    }
}

/// A source term. Equality ignores spans.
#[derive(Debug, Clone)]
pub struct Term {
    pub kind: TermKind,
    pub span: Span,
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Term {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermKind {
    Var(String),
    Nat(BigUint),
    Lam {
        param: String,
        param_ty: Type,
        level: Option<u32>,
        body: Box<Term>,
    },
    App(Box<Term>, Box<Term>),
    New(Box<Term>),
    Deref(Box<Term>),
    Assign(Box<Term>, Box<Term>),
    Seq(Box<Term>, Box<Term>),
    Let {
        name: String,
        bound: Box<Term>,
        body: Box<Term>,
    },
    Pair(Box<Term>, Box<Term>),
    Proj(ProjIdx, Box<Term>),
    Unit,
}

impl Term {
    pub fn new(kind: TermKind, span: Span) -> Self {
        Term { kind, span }
    }

    /// Constructor with a dummy span, for programmatic term building.
    pub fn mk(kind: TermKind) -> Self {
        Term {
            kind,
            span: Span::default(),
        }
    }

    pub fn var(name: impl Into<String>) -> Self {
        Term::mk(TermKind::Var(name.into()))
    }

    pub fn nat(n: u64) -> Self {
        Term::mk(TermKind::Nat(BigUint::from(n)))
    }

    pub fn unit() -> Self {
        Term::mk(TermKind::Unit)
    }

    pub fn lam(param: impl Into<String>, param_ty: Type, body: Term) -> Self {
        Term::mk(TermKind::Lam {
            param: param.into(),
            param_ty,
            level: None,
            body: Box::new(body),
        })
    }

    pub fn app(fun: Term, arg: Term) -> Self {
        Term::mk(TermKind::App(Box::new(fun), Box::new(arg)))
    }

    /// Free variables, lexicographically ordered.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut acc = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut acc);
        acc
    }

    fn collect_free(&self, bound: &mut Vec<String>, acc: &mut BTreeSet<String>) {
        match &self.kind {
            TermKind::Var(x) => {
                if !bound.iter().any(|b| b == x) {
                    acc.insert(x.clone());
                }
            }
            TermKind::Nat(_) | TermKind::Unit => {}
            TermKind::Lam { param, body, .. } => {
                bound.push(param.clone());
                body.collect_free(bound, acc);
                bound.pop();
            }
            TermKind::Let { name, bound: b, body } => {
                b.collect_free(bound, acc);
                bound.push(name.clone());
                body.collect_free(bound, acc);
                bound.pop();
            }
            TermKind::App(a, b)
            | TermKind::Assign(a, b)
            | TermKind::Seq(a, b)
            | TermKind::Pair(a, b) => {
                a.collect_free(bound, acc);
                b.collect_free(bound, acc);
            }
            TermKind::New(e) | TermKind::Deref(e) | TermKind::Proj(_, e) => {
                e.collect_free(bound, acc);
            }
        }
    }
}

/// A source type. Arrows carry an optional universe level annotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Type {
    Nat,
    Unit,
    Arrow {
        dom: Box<Type>,
        cod: Box<Type>,
        level: Option<u32>,
    },
    Ref(Box<Type>),
    Product(Box<Type>, Box<Type>),
}

impl Type {
    pub fn arrow(dom: Type, cod: Type, level: Option<u32>) -> Self {
        Type::Arrow {
            dom: Box::new(dom),
            cod: Box::new(cod),
            level,
        }
    }

    pub fn reft(content: Type) -> Self {
        Type::Ref(Box::new(content))
    }

    pub fn product(l: Type, r: Type) -> Self {
        Type::Product(Box::new(l), Box::new(r))
    }

    /// Copy of this type with every arrow level annotation removed.
    pub fn erase_levels(&self) -> Type {
        match self {
            Type::Nat => Type::Nat,
            Type::Unit => Type::Unit,
            Type::Arrow { dom, cod, .. } => Type::arrow(dom.erase_levels(), cod.erase_levels(), None),
            Type::Ref(t) => Type::reft(t.erase_levels()),
            Type::Product(l, r) => Type::product(l.erase_levels(), r.erase_levels()),
        }
    }

    /// Copy with unannotated arrows defaulted to level 0. Returns whether any
    /// defaulting happened, so callers can warn.
    pub fn default_levels(&self) -> (Type, bool) {
        match self {
            Type::Nat => (Type::Nat, false),
            Type::Unit => (Type::Unit, false),
            Type::Arrow { dom, cod, level } => {
                let (d, wd) = dom.default_levels();
                let (c, wc) = cod.default_levels();
                let defaulted = level.is_none();
                (Type::arrow(d, c, Some(level.unwrap_or(0))), defaulted || wd || wc)
            }
            Type::Ref(t) => {
                let (t, w) = t.default_levels();
                (Type::reft(t), w)
            }
            Type::Product(l, r) => {
                let (l, wl) = l.default_levels();
                let (r, wr) = r.default_levels();
                (Type::product(l, r), wl || wr)
            }
        }
    }
}

/// A target term. Equality ignores spans.
#[derive(Debug, Clone)]
pub struct TargetTerm {
    pub kind: TargetTermKind,
    pub span: Span,
}

impl PartialEq for TargetTerm {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for TargetTerm {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetTermKind {
    Var(String),
    Nat(BigUint),
    Unit,
    /// Closed procedure code. A unary code lambda subsumes a closed source
    /// lambda, so the target has no separate lambda form.
    CodeLam {
        params: Vec<(String, TargetType)>,
        body: Box<TargetTerm>,
    },
    App(Box<TargetTerm>, Box<TargetTerm>),
    New(Box<TargetTerm>),
    Deref(Box<TargetTerm>),
    Assign(Box<TargetTerm>, Box<TargetTerm>),
    Seq(Box<TargetTerm>, Box<TargetTerm>),
    Let {
        name: String,
        bound: Box<TargetTerm>,
        body: Box<TargetTerm>,
    },
    Pair(Box<TargetTerm>, Box<TargetTerm>),
    Proj(ProjIdx, Box<TargetTerm>),
    Pack {
        witness: TargetType,
        payload: Box<TargetTerm>,
        annot: TargetType,
    },
    Unpack {
        ty_var: String,
        val_var: String,
        package: Box<TargetTerm>,
        body: Box<TargetTerm>,
    },
}

impl TargetTerm {
    pub fn new(kind: TargetTermKind, span: Span) -> Self {
        TargetTerm { kind, span }
    }

    pub fn mk(kind: TargetTermKind) -> Self {
        TargetTerm {
            kind,
            span: Span::default(),
        }
    }

    pub fn var(name: impl Into<String>) -> Self {
        TargetTerm::mk(TargetTermKind::Var(name.into()))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut acc = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut acc);
        acc
    }

    fn collect_free(&self, bound: &mut Vec<String>, acc: &mut BTreeSet<String>) {
        match &self.kind {
            TargetTermKind::Var(x) => {
                if !bound.iter().any(|b| b == x) {
                    acc.insert(x.clone());
                }
            }
            TargetTermKind::Nat(_) | TargetTermKind::Unit => {}
            TargetTermKind::CodeLam { params, body } => {
                let n = params.len();
                for (p, _) in params {
                    bound.push(p.clone());
                }
                body.collect_free(bound, acc);
                for _ in 0..n {
                    bound.pop();
                }
            }
            TargetTermKind::Let { name, bound: b, body } => {
                b.collect_free(bound, acc);
                bound.push(name.clone());
                body.collect_free(bound, acc);
                bound.pop();
            }
            TargetTermKind::Unpack {
                val_var,
                package,
                body,
                ..
            } => {
                package.collect_free(bound, acc);
                bound.push(val_var.clone());
                body.collect_free(bound, acc);
                bound.pop();
            }
            TargetTermKind::Pack { payload, .. } => payload.collect_free(bound, acc),
            TargetTermKind::App(a, b)
            | TargetTermKind::Assign(a, b)
            | TargetTermKind::Seq(a, b)
            | TargetTermKind::Pair(a, b) => {
                a.collect_free(bound, acc);
                b.collect_free(bound, acc);
            }
            TargetTermKind::New(e) | TargetTermKind::Deref(e) | TargetTermKind::Proj(_, e) => {
                e.collect_free(bound, acc);
            }
        }
    }
}

/// A target type. Arrows are closed code types and carry no level; the level
/// lives on the existential binder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetType {
    Nat,
    Unit,
    Arrow(Box<TargetType>, Box<TargetType>),
    Ref(Box<TargetType>),
    Product(Box<TargetType>, Box<TargetType>),
    Exists {
        var: String,
        level: u32,
        body: Box<TargetType>,
    },
    Var(String),
}

impl TargetType {
    pub fn arrow(dom: TargetType, cod: TargetType) -> Self {
        TargetType::Arrow(Box::new(dom), Box::new(cod))
    }

    pub fn reft(content: TargetType) -> Self {
        TargetType::Ref(Box::new(content))
    }

    pub fn product(l: TargetType, r: TargetType) -> Self {
        TargetType::Product(Box::new(l), Box::new(r))
    }

    pub fn exists(var: impl Into<String>, level: u32, body: TargetType) -> Self {
        TargetType::Exists {
            var: var.into(),
            level,
            body: Box::new(body),
        }
    }

    /// Free type variables.
    pub fn free_ty_vars(&self) -> BTreeSet<String> {
        let mut acc = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut acc);
        acc
    }

    fn collect_free(&self, bound: &mut Vec<String>, acc: &mut BTreeSet<String>) {
        match self {
            TargetType::Var(a) => {
                if !bound.iter().any(|b| b == a) {
                    acc.insert(a.clone());
                }
            }
            TargetType::Nat | TargetType::Unit => {}
            TargetType::Arrow(a, b) | TargetType::Product(a, b) => {
                a.collect_free(bound, acc);
                b.collect_free(bound, acc);
            }
            TargetType::Ref(t) => t.collect_free(bound, acc),
            TargetType::Exists { var, body, .. } => {
                bound.push(var.clone());
                body.collect_free(bound, acc);
                bound.pop();
            }
        }
    }
}
