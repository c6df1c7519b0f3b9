//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::Instant;

use bkp_npoint::verify::{self, CheckOutcome, DEFAULT_SEED};

struct Criterion {
    id: u32,
    title: &'static str,
    run: fn(u64) -> Vec<CheckOutcome>,
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        title: "closed formulas agree, 10 instances, n<=3, weight<=9",
        run: |s| vec![verify::equivalence(s, 10, &[1, 2, 3], 9)],
    },
    Criterion {
        id: 2,
        title: "closed formulas match the fermionic oracle, n<=3, weight<=7",
        run: |s| vec![verify::oracle(s, 10, &[1, 2, 3], 7)],
    },
    Criterion {
        id: 3,
        title: "KP tau on odd times equals squared BKP tau, weight<=8, 5 instances",
        run: |s| vec![verify::square(s, 5, 8)],
    },
    Criterion {
        id: 4,
        title: "generating-series relation, depth 8, 20 instances",
        run: |s| vec![verify::relation(s, 20, 8)],
    },
    Criterion {
        id: 5,
        title: "converted and doubled states agree, cutoff 8, 5 instances",
        run: |s| vec![verify::state(s, 5, 8)],
    },
    Criterion {
        id: 6,
        title: "cyclic sign-sum identity, k<=3 on 20 specs and k=4 on 3",
        run: |s| vec![verify::lemma(s, 20, &[1, 2, 3], 6), verify::lemma(s, 3, &[4], 6)],
    },
    Criterion {
        id: 7,
        title: "zero coordinates give zero tables, n<=4",
        run: |_| vec![verify::trivial(&[1, 2, 3, 4], 9)],
    },
    Criterion {
        id: 8,
        title: "a[1,0]=1 gives -1 at t_1 and 0 at t_3 by all routes",
        run: |_| vec![verify::worked_value()],
    },
    Criterion {
        id: 9,
        title: "tables stable under doubled slack and oracle cutoff +2",
        run: |s| vec![verify::certification(s, 10, &[1, 2, 3], 7)],
    },
];

fn main() -> ExitCode {
    let seed = DEFAULT_SEED;
    let mut failed = 0;
    for c in CRITERIA {
        let start = Instant::now();
        let outcomes = (c.run)(seed);
        let secs = start.elapsed().as_secs_f64();
        let passed = outcomes.iter().all(|o| o.passed);
        let cases: usize = outcomes.iter().map(|o| o.cases).sum();
        let verdict = if passed { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {}: {} ({cases} cases, {secs:.1}s)", c.id, c.title);
        for o in outcomes.iter().filter(|o| !o.passed) {
            println!("    {}: {}", o.name, o.detail.as_deref().unwrap_or("failed"));
        }
        if !passed {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
