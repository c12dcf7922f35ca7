//! Fuel-bounded big-step evaluators for source and target, with a mutable
//! append-only store. Divergence surfaces as `FuelExhausted`.
//!
//! Step accounting: beta, deref, assignment, allocation, projection, and let
//! each consume one fuel unit (unpack counts as a let). Everything else is
//! free, so step counts are stable.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;

use crate::syntax::{
    pretty_target_term, pretty_term, ProjIdx, TargetTerm, TargetTermKind, TargetType, Term,
    TermKind,
};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(BigUint),
    Unit,
    Loc(usize),
    Closure {
        param: String,
        body: Term,
        env: Env,
    },
    Tuple(Box<Value>, Box<Value>),
    Package {
        witness: TargetType,
        payload: Box<Value>,
    },
    /// Code value, possibly partially applied.
    Code {
        params: Vec<(String, TargetType)>,
        body: TargetTerm,
        applied: Vec<Value>,
    },
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(n) => write!(f, "{n}"),
            Value::Unit => write!(f, "unit"),
            Value::Loc(i) => write!(f, "loc {i}"),
            Value::Closure { .. } => write!(f, "<closure>"),
            Value::Tuple(a, b) => write!(f, "<{a}, {b}>"),
            Value::Package { .. } => write!(f, "<package>"),
            Value::Code { .. } => write!(f, "<code>"),
        }
    }
}

pub type Env = HashMap<String, Value>;

/// Append-only store; locations are never reclaimed during a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Store(Vec<Value>);

impl Store {
    pub fn alloc(&mut self, v: Value) -> usize {
        self.0.push(v);
        self.0.len() - 1
    }

    pub fn get(&self, loc: usize) -> Option<&Value> {
        self.0.get(loc)
    }

    pub fn set(&mut self, loc: usize, v: Value) {
        self.0[loc] = v;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Result {
        value: Value,
        store: Store,
        steps: u64,
    },
    FuelExhausted {
        steps: u64,
    },
    Stuck {
        description: String,
    },
}

impl Outcome {
    pub fn result_value(&self) -> Option<&Value> {
        match self {
            Outcome::Result { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn is_fuel_exhausted(&self) -> bool {
        matches!(self, Outcome::FuelExhausted { .. })
    }

    pub fn is_stuck(&self) -> bool {
        matches!(self, Outcome::Stuck { .. })
    }
}

/// One recorded evaluation step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub index: u64,
    pub rule: &'static str,
    pub store_size: usize,
    pub touched: Vec<usize>,
}

impl StepRecord {
    /// Tab-separated: step index, rule name, store size, touched locations.
    pub fn render(&self) -> String {
        let locs = self
            .touched
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(",");
        format!("{}\t{}\t{}\t{}", self.index, self.rule, self.store_size, locs)
    }
}

pub fn eval_source(e: &Term, fuel: u64) -> Outcome {
    run_machine(fuel, 0, |m| m.eval_src(&Env::new(), e)).0
}

pub fn eval_target(e: &TargetTerm, fuel: u64) -> Outcome {
    run_machine(fuel, 0, |m| m.eval_tgt(&Env::new(), e)).0
}

/// Evaluate and return the first `limit` step records alongside the outcome.
pub fn trace_source(e: &Term, fuel: u64, limit: usize) -> (Outcome, Vec<StepRecord>) {
    run_machine(fuel, limit, |m| m.eval_src(&Env::new(), e))
}

pub fn trace_target(e: &TargetTerm, fuel: u64, limit: usize) -> (Outcome, Vec<StepRecord>) {
    run_machine(fuel, limit, |m| m.eval_tgt(&Env::new(), e))
}

enum Halt {
    Fuel,
    Stuck(String),
}

struct Machine {
    fuel_total: u64,
    fuel_left: u64,
    store: Store,
    trace_limit: usize,
    trace: Vec<StepRecord>,
}

// Divergent programs recurse deeply before exhausting fuel; the evaluator
// gets its own stack so that shows up as FuelExhausted, not a crash.
// Large enough for ~100k recursive frames in unoptimized builds: divergent
// programs must reach fuel exhaustion, not the guard page. Committed lazily.
const EVAL_STACK_BYTES: usize = 4 << 30;

fn run_machine<F>(fuel: u64, limit: usize, f: F) -> (Outcome, Vec<StepRecord>)
where
    F: FnOnce(&mut Machine) -> Result<Value, Halt> + Send,
{
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(EVAL_STACK_BYTES)
            .spawn_scoped(s, move || {
                let mut m = Machine {
                    fuel_total: fuel,
                    fuel_left: fuel,
                    store: Store::default(),
                    trace_limit: limit,
                    trace: Vec::new(),
                };
                let outcome = match f(&mut m) {
                    Ok(value) => Outcome::Result {
                        value,
                        store: m.store,
                        steps: m.fuel_total - m.fuel_left,
                    },
                    Err(Halt::Fuel) => Outcome::FuelExhausted {
                        steps: m.fuel_total,
                    },
                    Err(Halt::Stuck(description)) => Outcome::Stuck { description },
                };
                (outcome, m.trace)
            })
            .expect("spawn evaluator thread")
            .join()
            .expect("evaluator thread panicked")
    })
}

impl Machine {
    fn step(&mut self, rule: &'static str, touched: &[usize]) -> Result<(), Halt> {
        if self.fuel_left == 0 {
            return Err(Halt::Fuel);
        }
        self.fuel_left -= 1;
        if self.trace.len() < self.trace_limit {
            self.trace.push(StepRecord {
                index: self.fuel_total - self.fuel_left,
                rule,
                store_size: self.store.len(),
                touched: touched.to_vec(),
            });
        }
        Ok(())
    }

    fn eval_src(&mut self, env: &Env, e: &Term) -> Result<Value, Halt> {
        match &e.kind {
            TermKind::Var(x) => env.get(x).cloned().ok_or_else(|| {
                Halt::Stuck(format!("unbound variable at runtime: {x}"))
            }),
            TermKind::Nat(n) => Ok(Value::Num(n.clone())),
            TermKind::Unit => Ok(Value::Unit),
            TermKind::Lam { param, body, .. } => Ok(Value::Closure {
                param: param.clone(),
                body: (**body).clone(),
                env: env.clone(),
            }),
            TermKind::App(f, a) => {
                let fv = self.eval_src(env, f)?;
                let av = self.eval_src(env, a)?;
                match fv {
                    Value::Closure {
                        param,
                        body,
                        env: captured,
                    } => {
                        self.step("beta", &[])?;
                        let mut env2 = captured;
                        env2.insert(param, av);
                        self.eval_src(&env2, &body)
                    }
                    other => Err(Halt::Stuck(format!(
                        "applying a non-function {other} in {}",
                        pretty_term(e)
                    ))),
                }
            }
            TermKind::New(inner) => {
                let v = self.eval_src(env, inner)?;
                let loc = self.store.alloc(v);
                self.step("alloc", &[loc])?;
                Ok(Value::Loc(loc))
            }
            TermKind::Deref(inner) => {
                let v = self.eval_src(env, inner)?;
                match v {
                    Value::Loc(loc) => {
                        self.step("deref", &[loc])?;
                        self.store
                            .get(loc)
                            .cloned()
                            .ok_or_else(|| Halt::Stuck(format!("dangling location {loc}")))
                    }
                    other => Err(Halt::Stuck(format!(
                        "dereferencing a non-location {other} in {}",
                        pretty_term(e)
                    ))),
                }
            }
            TermKind::Assign(r, v) => {
                let rv = self.eval_src(env, r)?;
                let vv = self.eval_src(env, v)?;
                match rv {
                    Value::Loc(loc) => {
                        self.step("assign", &[loc])?;
                        self.store.set(loc, vv);
                        Ok(Value::Unit)
                    }
                    other => Err(Halt::Stuck(format!(
                        "assigning to a non-location {other} in {}",
                        pretty_term(e)
                    ))),
                }
            }
            TermKind::Seq(a, b) => {
                self.eval_src(env, a)?;
                self.eval_src(env, b)
            }
            TermKind::Let { name, bound, body } => {
                let bv = self.eval_src(env, bound)?;
                self.step("let", &[])?;
                let mut env2 = env.clone();
                env2.insert(name.clone(), bv);
                self.eval_src(&env2, body)
            }
            TermKind::Pair(a, b) => {
                let av = self.eval_src(env, a)?;
                let bv = self.eval_src(env, b)?;
                Ok(Value::Tuple(Box::new(av), Box::new(bv)))
            }
            TermKind::Proj(idx, inner) => {
                let v = self.eval_src(env, inner)?;
                match v {
                    Value::Tuple(a, b) => {
                        self.step("proj", &[])?;
                        Ok(match idx {
                            ProjIdx::Fst => *a,
                            ProjIdx::Snd => *b,
                        })
                    }
                    other => Err(Halt::Stuck(format!(
                        "projecting from a non-tuple {other} in {}",
                        pretty_term(e)
                    ))),
                }
            }
        }
    }

    fn eval_tgt(&mut self, env: &Env, e: &TargetTerm) -> Result<Value, Halt> {
        match &e.kind {
            TargetTermKind::Var(x) => env.get(x).cloned().ok_or_else(|| {
                Halt::Stuck(format!("unbound variable at runtime: {x}"))
            }),
            TargetTermKind::Nat(n) => Ok(Value::Num(n.clone())),
            TargetTermKind::Unit => Ok(Value::Unit),
            TargetTermKind::CodeLam { params, body } => Ok(Value::Code {
                params: params.clone(),
                body: (**body).clone(),
                applied: Vec::new(),
            }),
            TargetTermKind::App(f, a) => {
                let fv = self.eval_tgt(env, f)?;
                let av = self.eval_tgt(env, a)?;
                match fv {
                    Value::Code {
                        params,
                        body,
                        mut applied,
                    } => {
                        self.step("beta", &[])?;
                        applied.push(av);
                        if applied.len() == params.len() {
                            let mut env2 = Env::new();
                            for ((p, _), v) in params.iter().zip(applied) {
                                env2.insert(p.clone(), v);
                            }
                            self.eval_tgt(&env2, &body)
                        } else {
                            Ok(Value::Code {
                                params,
                                body,
                                applied,
                            })
                        }
                    }
                    other => Err(Halt::Stuck(format!(
                        "applying a non-code value {other} in {}",
                        pretty_target_term(e)
                    ))),
                }
            }
            TargetTermKind::Pack { witness, payload, .. } => {
                let v = self.eval_tgt(env, payload)?;
                Ok(Value::Package {
                    witness: witness.clone(),
                    payload: Box::new(v),
                })
            }
            TargetTermKind::Unpack {
                val_var,
                package,
                body,
                ..
            } => {
                let pv = self.eval_tgt(env, package)?;
                match pv {
                    Value::Package { payload, .. } => {
                        self.step("unpack", &[])?;
                        let mut env2 = env.clone();
                        env2.insert(val_var.clone(), *payload);
                        self.eval_tgt(&env2, body)
                    }
                    other => Err(Halt::Stuck(format!(
                        "unpacking a non-package {other} in {}",
                        pretty_target_term(e)
                    ))),
                }
            }
            TargetTermKind::New(inner) => {
                let v = self.eval_tgt(env, inner)?;
                let loc = self.store.alloc(v);
                self.step("alloc", &[loc])?;
                Ok(Value::Loc(loc))
            }
            TargetTermKind::Deref(inner) => {
                let v = self.eval_tgt(env, inner)?;
                match v {
                    Value::Loc(loc) => {
                        self.step("deref", &[loc])?;
                        self.store
                            .get(loc)
                            .cloned()
                            .ok_or_else(|| Halt::Stuck(format!("dangling location {loc}")))
                    }
                    other => Err(Halt::Stuck(format!(
                        "dereferencing a non-location {other} in {}",
                        pretty_target_term(e)
                    ))),
                }
            }
            TargetTermKind::Assign(r, v) => {
                let rv = self.eval_tgt(env, r)?;
                let vv = self.eval_tgt(env, v)?;
                match rv {
                    Value::Loc(loc) => {
                        self.step("assign", &[loc])?;
                        self.store.set(loc, vv);
                        Ok(Value::Unit)
                    }
                    other => Err(Halt::Stuck(format!(
                        "assigning to a non-location {other} in {}",
                        pretty_target_term(e)
                    ))),
                }
            }
            TargetTermKind::Seq(a, b) => {
                self.eval_tgt(env, a)?;
                self.eval_tgt(env, b)
            }
            TargetTermKind::Let { name, bound, body } => {
                let bv = self.eval_tgt(env, bound)?;
                self.step("let", &[])?;
                let mut env2 = env.clone();
                env2.insert(name.clone(), bv);
                self.eval_tgt(&env2, body)
            }
            TargetTermKind::Pair(a, b) => {
                let av = self.eval_tgt(env, a)?;
                let bv = self.eval_tgt(env, b)?;
                Ok(Value::Tuple(Box::new(av), Box::new(bv)))
            }
            TargetTermKind::Proj(idx, inner) => {
                let v = self.eval_tgt(env, inner)?;
                match v {
                    Value::Tuple(a, b) => {
                        self.step("proj", &[])?;
                        Ok(match idx {
                            ProjIdx::Fst => *a,
                            ProjIdx::Snd => *b,
                        })
                    }
                    other => Err(Halt::Stuck(format!(
                        "projecting from a non-tuple {other} in {}",
                        pretty_target_term(e)
                    ))),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cconv::closure_convert;
    use crate::syntax::parse_source;
    use crate::typecheck::{Mode, SrcCtx};

    fn num(n: u64) -> Value {
        Value::Num(n.into())
    }

    #[test]
    fn literals_cost_nothing() {
        match eval_source(&parse_source(crate::corpus::FIVE).unwrap(), 0) {
            Outcome::Result { value, steps, .. } => {
                assert_eq!(value, num(5));
                assert_eq!(steps, 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn untied_knot_takes_seven_steps() {
        let e = parse_source(crate::corpus::KNOT_NOBACKPATCH).unwrap();
        match eval_source(&e, 100) {
            Outcome::Result { value, store, steps } => {
                assert_eq!(value, num(0));
                assert_eq!(steps, 7);
                assert_eq!(store.len(), 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn the_knot_diverges_in_source_and_target() {
        let e = parse_source(crate::corpus::KNOT).unwrap();
        assert!(eval_source(&e, 10_000).is_fuel_exhausted());
        let t = closure_convert(&SrcCtx::new(), &e, Mode::Unrestricted).unwrap();
        assert!(eval_target(&t, 40_000).is_fuel_exhausted());
    }

    #[test]
    fn assignment_updates_the_store_in_place() {
        let e = parse_source("let r = new 1 in r := 2; !r").unwrap();
        match eval_source(&e, 100) {
            Outcome::Result { value, store, .. } => {
                assert_eq!(value, num(2));
                assert_eq!(store.len(), 1);
                assert_eq!(store.get(0), Some(&num(2)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fuel_boundary_is_exact() {
        // seven costed steps succeed with exactly seven units
        let e = parse_source(crate::corpus::KNOT_NOBACKPATCH).unwrap();
        assert!(matches!(eval_source(&e, 7), Outcome::Result { .. }));
        assert!(eval_source(&e, 6).is_fuel_exhausted());
    }

    #[test]
    fn ill_typed_programs_can_get_stuck() {
        let e = parse_source("5 6").unwrap();
        assert!(eval_source(&e, 10).is_stuck());
        let e = parse_source("!5").unwrap();
        assert!(eval_source(&e, 10).is_stuck());
    }

    #[test]
    fn traces_record_rules_and_touched_locations() {
        let e = parse_source("let r = new 1 in r := 2; !r").unwrap();
        let (out, steps) = trace_source(&e, 100, 10);
        assert!(matches!(out, Outcome::Result { .. }));
        let rules: Vec<&str> = steps.iter().map(|s| s.rule).collect();
        assert_eq!(rules, vec!["alloc", "let", "assign", "deref"]);
        // the assignment and the deref both touch location 0
        assert_eq!(steps[2].touched, vec![0]);
        assert_eq!(steps[3].touched, vec![0]);
        assert!(steps[0].render().starts_with("1\talloc\t1"));
    }

    #[test]
    fn trace_limit_truncates_the_record_not_the_run() {
        let e = parse_source(crate::corpus::KNOT_NOBACKPATCH).unwrap();
        let (out, steps) = trace_source(&e, 100, 3);
        assert!(matches!(out, Outcome::Result { .. }));
        assert_eq!(steps.len(), 3);
    }

    #[test]
    fn closures_capture_their_environment_at_definition_time() {
        let e = parse_source(
            "let n = (lam x : Nat . x) 4 in let f = lam y : Nat . n in f 0",
        )
        .unwrap();
        match eval_source(&e, 100) {
            Outcome::Result { value, .. } => assert_eq!(value, num(4)),
            other => panic!("{other:?}"),
        }
    }
}
