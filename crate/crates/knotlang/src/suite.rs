//! Batch property suites over ranges of generator seeds. Each seed is
//! independent, so the batch runs data-parallel by default (the `parallel`
//! feature, on by default, pulls in rayon); sequential variants are always
//! available and the parallel entry points fall back to them when the
//! feature is off.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::cconv::{closure_convert, convert_type, typecheck_target, TgtCtx};
use crate::eval::{eval_source, eval_target, Outcome, Value};
use crate::propgen::{generate, generate_annotated_type, GenConfig};
use crate::sorts::{sort_of_source, sort_of_target};
use crate::syntax::{parse_source, pretty_term};
use crate::typecheck::{typecheck_source, Mode, SrcCtx};

pub const SOURCE_FUEL: u64 = 1000;
/// Closure conversion introduces at most a constant factor of extra costed
/// steps per source step, so the target gets a fixed multiple of the fuel.
pub const TARGET_FUEL_FACTOR: u64 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteFailure {
    pub seed: u64,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SuiteReport {
    pub total: usize,
    pub failures: Vec<SuiteFailure>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn collect(total: usize, mut failures: Vec<SuiteFailure>) -> Self {
        failures.sort_by_key(|f| f.seed);
        SuiteReport { total, failures }
    }
}

/// Per-seed pipeline check: generate, round-trip through the printer,
/// typecheck, closure-convert, typecheck the target against the converted
/// type, check sort preservation, and compare evaluation results.
fn check_program(mode: Mode, seed: u64) -> Option<SuiteFailure> {
    let fail = |detail: String| Some(SuiteFailure { seed, detail });
    let e = generate(&GenConfig::new(seed, mode));

    let printed = pretty_term(&e);
    match parse_source(&printed) {
        Ok(back) if back == e => {}
        Ok(_) => return fail(format!("round-trip changed the term: {printed}")),
        Err(err) => return fail(format!("round-trip parse failed: {err} in {printed}")),
    }

    let ty = match typecheck_source(&SrcCtx::new(), &e, mode) {
        Ok(t) => t,
        Err(err) => return fail(format!("generated term fails its own mode: {}", err.render())),
    };

    let target = match closure_convert(&SrcCtx::new(), &e, mode) {
        Ok(t) => t,
        Err(err) => return fail(format!("closure conversion failed: {}", err.render())),
    };
    let tty = match typecheck_target(&TgtCtx::new(), &target, mode) {
        Ok(t) => t,
        Err(err) => return fail(format!("converted program ill-typed: {}", err.render())),
    };
    match convert_type(&ty, mode) {
        Ok(expected) if expected == tty => {}
        Ok(expected) => {
            return fail(format!(
                "target type {tty} differs from converted source type {expected}"
            ))
        }
        Err(err) => return fail(format!("type conversion failed: {}", err.render())),
    }

    if mode == Mode::Sorted {
        let src_sort = sort_of_source(&SrcCtx::new(), &ty);
        let tgt_sort = sort_of_target(&TgtCtx::new(), &tty);
        if src_sort.as_ref().ok() != tgt_sort.as_ref().ok() {
            return fail(format!(
                "sort changed under conversion: {src_sort:?} vs {tgt_sort:?}"
            ));
        }
    }

    let src_out = eval_source(&e, SOURCE_FUEL);
    let tgt_out = eval_target(&target, SOURCE_FUEL * TARGET_FUEL_FACTOR);
    match (&src_out, &tgt_out) {
        (Outcome::Result { value: a, .. }, Outcome::Result { value: b, .. }) => {
            if !observably_equal(a, b) {
                return fail(format!("evaluation disagrees: source {a}, target {b}"));
            }
        }
        (Outcome::Result { .. }, other) => {
            return fail(format!("source converges but target does not: {other:?}"))
        }
        (Outcome::Stuck { description }, _) => {
            return fail(format!("well-typed source got stuck: {description}"))
        }
        (Outcome::FuelExhausted { .. }, _) => {}
    }
    None
}

/// Ground observables must match exactly; function-like values on either
/// side (closures vs packed code) count as equal.
fn observably_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Num(x), Value::Num(y)) => x == y,
        (Value::Unit, Value::Unit) => true,
        (Value::Loc(x), Value::Loc(y)) => x == y,
        (Value::Tuple(a1, a2), Value::Tuple(b1, b2)) => {
            observably_equal(a1, b1) && observably_equal(a2, b2)
        }
        (Value::Closure { .. }, Value::Package { .. })
        | (Value::Closure { .. }, Value::Code { .. }) => true,
        _ => false,
    }
}

/// Level laws over random fully annotated types: a Ref sits one level above
/// its content, and a product sits at the max of its components.
fn check_type(seed: u64) -> Option<SuiteFailure> {
    let t = generate_annotated_type(seed, 5, 3);
    let ctx = SrcCtx::new();
    let base = match sort_of_source(&ctx, &t) {
        Ok(j) => j,
        Err(err) => {
            return Some(SuiteFailure {
                seed,
                detail: format!("annotated type has no sort: {err}"),
            })
        }
    };
    let bumped = sort_of_source(&ctx, &crate::syntax::Type::reft(t.clone()));
    if bumped != Ok(base + 1) {
        return Some(SuiteFailure {
            seed,
            detail: format!("Ref level not bumped: {base} -> {bumped:?}"),
        });
    }
    let u = generate_annotated_type(seed.wrapping_add(0x9e3779b9), 5, 3);
    let other = sort_of_source(&ctx, &u).ok()?;
    let prod = sort_of_source(&ctx, &crate::syntax::Type::product(t, u));
    if prod != Ok(base.max(other)) {
        return Some(SuiteFailure {
            seed,
            detail: format!("product level not max: {base}, {other} -> {prod:?}"),
        });
    }
    None
}

pub fn run_program_suite_seq(mode: Mode, seeds: Range<u64>) -> SuiteReport {
    let total = seeds.clone().count();
    let failures = seeds.filter_map(|s| check_program(mode, s)).collect();
    SuiteReport::collect(total, failures)
}

pub fn run_type_suite_seq(seeds: Range<u64>) -> SuiteReport {
    let total = seeds.clone().count();
    let failures = seeds.filter_map(check_type).collect();
    SuiteReport::collect(total, failures)
}

#[cfg(feature = "parallel")]
pub fn run_program_suite(mode: Mode, seeds: Range<u64>) -> SuiteReport {
    let total = seeds.clone().count();
    let failures = seeds
        .into_par_iter()
        .filter_map(|s| check_program(mode, s))
        .collect();
    SuiteReport::collect(total, failures)
}

#[cfg(not(feature = "parallel"))]
pub fn run_program_suite(mode: Mode, seeds: Range<u64>) -> SuiteReport {
    run_program_suite_seq(mode, seeds)
}

#[cfg(feature = "parallel")]
pub fn run_type_suite(seeds: Range<u64>) -> SuiteReport {
    let total = seeds.clone().count();
    let failures = seeds.into_par_iter().filter_map(check_type).collect();
    SuiteReport::collect(total, failures)
}

#[cfg(not(feature = "parallel"))]
pub fn run_type_suite(seeds: Range<u64>) -> SuiteReport {
    run_type_suite_seq(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        for mode in Mode::ALL {
            let par = run_program_suite(mode, 0..50);
            let seq = run_program_suite_seq(mode, 0..50);
            assert_eq!(par, seq);
        }
        assert_eq!(run_type_suite(0..200), run_type_suite_seq(0..200));
    }
}
