//! A simply typed lambda calculus with mutable references, checked under
//! three selectable disciplines, plus a typed closure-conversion compiler
//! to an explicit-closure target language and fuel-bounded evaluators for
//! both languages.
//!
//! The motivating program is Landin's knot: backpatching a reference with a
//! closure that calls through that same reference. Under the unrestricted
//! discipline it typechecks and diverges; the full-ground discipline rejects
//! the closure for capturing a reference of non-ground type; the sorted
//! discipline rejects the backpatch itself with a level mismatch.

pub mod cconv;
pub mod context;
pub mod derive;
pub mod eval;
pub mod propgen;
pub mod sorts;
pub mod suite;
pub mod syntax;
pub mod typecheck;

/// The bundled example programs, embedded so tests and the demo do not
/// depend on a working directory.
pub mod corpus {
    pub const KNOT: &str = include_str!("../../../corpus/knot.src");
    pub const KNOT_NOBACKPATCH: &str =
        include_str!("../../../corpus/knot_nobackpatch.src");
    pub const KNOT_ETA: &str = include_str!("../../../corpus/knot_eta.src");
    pub const KNOT_LET: &str = include_str!("../../../corpus/knot_let.src");
    pub const KNOT_PAIR: &str = include_str!("../../../corpus/knot_pair.src");
    pub const ID: &str = include_str!("../../../corpus/id.src");
    pub const FIVE: &str = include_str!("../../../corpus/five.src");

    /// Name/source pairs for every bundled program.
    pub const ALL: &[(&str, &str)] = &[
        ("knot", KNOT),
        ("knot_nobackpatch", KNOT_NOBACKPATCH),
        ("knot_eta", KNOT_ETA),
        ("knot_let", KNOT_LET),
        ("knot_pair", KNOT_PAIR),
        ("id", ID),
        ("five", FIVE),
    ];

    /// The knot variants that every discipline must agree on: accepted and
    /// divergent unrestricted, rejected otherwise.
    pub const KNOT_VARIANTS: &[(&str, &str)] = &[
        ("knot", KNOT),
        ("knot_eta", KNOT_ETA),
        ("knot_let", KNOT_LET),
        ("knot_pair", KNOT_PAIR),
    ];
}

pub use cconv::{
    closure_convert, closure_convert_layouts, convert_ctx, convert_type, explain_target,
    subst_type, typecheck_target, ClosureLayout, TgtCtx,
};
pub use context::{CtxEntry, TypingContext};
pub use derive::Derivation;
pub use eval::{
    eval_source, eval_target, trace_source, trace_target, Outcome, StepRecord, Store, Value,
};
pub use propgen::{generate, generate_annotated_type, shrink, GenConfig};
pub use sorts::{
    is_full_ground, is_full_ground_target, sort_of_source, sort_of_target, Sort, SortError,
    SortRules,
};
pub use suite::{run_program_suite, run_program_suite_seq, run_type_suite, run_type_suite_seq,
    SuiteFailure, SuiteReport};
pub use syntax::{
    parse_source, parse_target, parse_target_type, parse_type, pretty_target_term,
    pretty_target_type, pretty_term, pretty_type, ParseError, ProjIdx, Span, TargetTerm,
    TargetTermKind, TargetType, Term, TermKind, Type,
};
pub use typecheck::{
    check_report, explain, typecheck_source, Mode, Report, SrcCtx, TypeError, TypeErrorKind,
};
