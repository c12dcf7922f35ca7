//! Pins every bundled program's verdict, per discipline, to its golden file,
//! plus the two derivation-tree goldens.

use knotlang::cconv::{closure_convert, convert_ctx, explain_target, TgtCtx};
use knotlang::corpus;
use knotlang::syntax::{parse_source, parse_type};
use knotlang::typecheck::{typecheck_source, Mode, SrcCtx};

fn golden(name: &str) -> String {
    let path = format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

#[test]
fn every_program_matches_its_golden_verdict_in_every_mode() {
    for (name, src) in corpus::ALL {
        let e = parse_source(src).unwrap_or_else(|err| panic!("{name}: {err}"));
        for mode in Mode::ALL {
            let got = match typecheck_source(&SrcCtx::new(), &e, mode) {
                Ok(t) => format!("OK {t}"),
                Err(err) => err.render(),
            };
            let want = golden(&format!("{name}.{mode}.expected"));
            assert_eq!(got, want.trim_end(), "{name} under {mode}");
        }
    }
}

#[test]
fn converted_identity_derivation_matches_golden() {
    let id = parse_source(corpus::ID).unwrap();
    let tid = closure_convert(&SrcCtx::new(), &id, Mode::Sorted).unwrap();
    let d = explain_target(&TgtCtx::new(), &tid, Mode::Sorted).unwrap();
    assert_eq!(
        d.render().trim_end(),
        golden("id.derivation.golden").trim_end()
    );
}

#[test]
fn converted_knot_closure_derivation_matches_golden() {
    let f = parse_source("lam x : Nat . (!r) x").unwrap();
    let mut ctx = SrcCtx::new();
    ctx.push_term("r", parse_type("Ref (Nat ->[0] Nat)").unwrap());
    let tf = closure_convert(&ctx, &f, Mode::Sorted).unwrap();
    let tctx = convert_ctx(&ctx, Mode::Sorted).unwrap();
    let d = explain_target(&tctx, &tf, Mode::Sorted).unwrap();
    assert_eq!(
        d.render().trim_end(),
        golden("f.derivation.golden").trim_end()
    );
}
