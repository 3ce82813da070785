//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero on failure.
//!
//! `POLYMOR_SLOW=1` (or `--include-ignored`) adds the full-scale variants;
//! `POLYMOR_VERBOSE=1` lists every sub-check.

mod chafee;
mod common;
mod fhn;
mod hygiene;
mod interpolation;
mod loewner_eq;
mod parametric;
mod tensor;

use std::thread;
use std::time::{Duration, Instant};

use common::Check;

struct Outcome {
    id: &'static str,
    name: &'static str,
    checks: Vec<Check>,
    elapsed: Duration,
}

fn timed(id: &'static str, name: &'static str, f: impl FnOnce() -> Vec<Check>) -> Outcome {
    let start = Instant::now();
    let checks = f();
    Outcome {
        id,
        name,
        checks,
        elapsed: start.elapsed(),
    }
}

fn report(o: &Outcome, verbose: bool) -> bool {
    let pass = !o.checks.is_empty() && o.checks.iter().all(|k| k.pass);
    let tightest = o
        .checks
        .iter()
        .filter(|k| k.margin.is_some_and(|m| m.is_finite()))
        .max_by(|a, b| a.margin.partial_cmp(&b.margin).unwrap())
        .map(|k| format!(", tightest: {} {}", k.label, k.detail))
        .unwrap_or_default();
    println!(
        "{} criterion {} {} [{:.1}s]: {} checks{}",
        if pass { "PASS" } else { "FAIL" },
        o.id,
        o.name,
        o.elapsed.as_secs_f64(),
        o.checks.len(),
        tightest
    );
    for k in &o.checks {
        if verbose || !k.pass {
            println!("    {} {}: {}", if k.pass { "ok" } else { "FAILED" }, k.label, k.detail);
        }
    }
    pass
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let flag = |name: &str| std::env::var(name).is_ok_and(|v| !v.is_empty() && v != "0");
    let slow = flag("POLYMOR_SLOW") || args.iter().any(|a| a == "--include-ignored" || a == "--ignored");
    let verbose = flag("POLYMOR_VERBOSE");

    // Cheap suites first so their runtime limits are measured unloaded.
    let mut outcomes = vec![
        timed("1", "interpolation conditions", interpolation::run),
        timed("2", "Loewner equivalence", loewner_eq::run),
        timed("3", "tensor identities", tensor::run),
    ];

    let (mut heavy, cur_setup) = thread::scope(|s| {
        let c4 = s.spawn(|| timed("4", "Chafee regression", chafee::regression));
        let c5 = s.spawn(move || timed("5", "cubic vs QB dominance", || chafee::dominance(slow)));
        let c6 = s.spawn(|| timed("6", "FitzHugh-Nagumo reproduction", fhn::run));
        let c7 = s.spawn(|| timed("7", "parametric reproduction", parametric::run));
        let c8 = s.spawn(|| {
            let start = Instant::now();
            let (checks, setup) = chafee::cur_accuracy();
            (checks, setup, start.elapsed())
        });
        let c9 = s.spawn(|| timed("9", "numerical hygiene", hygiene::run));
        let (c8_checks, setup, c8_time) = c8.join().unwrap();
        let mut heavy: Vec<Outcome> = [c4, c5, c6, c7].into_iter().map(|h| h.join().unwrap()).collect();
        heavy.push(Outcome {
            id: "8",
            name: "CUR hyper-reduction",
            checks: c8_checks,
            elapsed: c8_time,
        });
        heavy.push(c9.join().unwrap());
        (heavy, setup)
    });
    if let Some(setup) = cur_setup {
        let start = Instant::now();
        let speed = chafee::cur_speed(&setup);
        let c8 = heavy.iter_mut().find(|o| o.id == "8").unwrap();
        c8.checks.push(speed);
        c8.elapsed += start.elapsed();
    }
    heavy.sort_by_key(|o| o.id);
    outcomes.extend(heavy);

    let passed = outcomes.iter().filter(|o| report(o, verbose)).count();
    println!("{passed} of {} criteria passed", outcomes.len());
    if passed < outcomes.len() {
        std::process::exit(1);
    }
}
