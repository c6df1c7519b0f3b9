//! Named verification checks over seeded instances, shared by the CLI and the
//! acceptance suite.

use std::collections::BTreeMap;
use std::fmt::Display;

use rayon::prelude::*;
use serde::Serialize;

use crate::affine::{check_relation_gskpbkp, validate_b, AffineB};
use crate::fock::{check_square_relation, check_state_equality, oracle_npoint, oracle_npoint_with_cutoff};
use crate::lemma::check_lemma;
use crate::npoint::{
    bkp_npoint_embedded, bkp_npoint_embedded_with, bkp_npoint_wangyang, bkp_npoint_wangyang_with,
    compare_formulas_with, Truncation,
};
use crate::random::{affine_instances, series_pair_instances};
use crate::rational::int;
use crate::table::NPointTable;

pub const DEFAULT_SEED: u64 = 7;

/// Bounds for the random BKP coordinates.
pub const AFFINE_SUPPORT: u32 = 4;
pub const AFFINE_HEIGHT: i64 = 9;
/// Bounds for the random lemma series.
pub const PAIR_SUPPORT: u32 = 3;
pub const PAIR_HEIGHT: i64 = 9;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub passed: bool,
    /// Number of instance/arity cases that were run.
    pub cases: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckOutcome {
    fn new(name: &str, params: &[(&str, &dyn Display)]) -> Self {
        CheckOutcome {
            name: name.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            passed: true,
            cases: 0,
            detail: None,
        }
    }

    /// Folds per-case results in order; the first failure is kept as the detail.
    fn collect(mut self, results: Vec<Result<(), String>>) -> Self {
        self.cases = results.len();
        if let Some(e) = results.into_iter().find_map(Result::err) {
            self.passed = false;
            self.detail = Some(e);
        }
        self
    }
}

fn cases<T: Sync, C: Send + Sync + Copy>(
    instances: &[T],
    arities: &[C],
    run: impl Fn(usize, &T, C) -> Result<(), String> + Sync,
) -> Vec<Result<(), String>> {
    let jobs: Vec<(usize, C)> = (0..instances.len())
        .flat_map(|i| arities.iter().map(move |&c| (i, c)))
        .collect();
    jobs.into_par_iter().map(|(i, c)| run(i, &instances[i], c)).collect()
}

fn table_diff(label: &str, a: &NPointTable, b: &NPointTable) -> Result<(), String> {
    match a.first_difference(b) {
        None => Ok(()),
        Some((idx, x, y)) => Err(format!("{label}: first difference at {idx:?}: {x} vs {y}")),
    }
}

fn affine(seed: u64, count: usize) -> Vec<AffineB> {
    affine_instances(seed, count, AFFINE_SUPPORT, AFFINE_HEIGHT)
}

/// Both BKP formulas agree entrywise, and their raw series agree after the
/// `z_1 ... z_n` shift.
pub fn equivalence(seed: u64, count: usize, ns: &[usize], max_weight: u32) -> CheckOutcome {
    let out = CheckOutcome::new(
        "equivalence",
        &[("seed", &seed), ("instances", &count), ("n", &format!("{ns:?}")), ("max_weight", &max_weight)],
    );
    let bs = affine(seed, count);
    out.collect(cases(&bs, ns, |i, b, n| {
        let cmp = compare_formulas_with(b, n, max_weight, Truncation::default())
            .map_err(|e| format!("instance {i}, n={n}: {e}"))?;
        if let Some((idx, x, y)) = cmp.table_difference {
            return Err(format!("instance {i}, n={n}: tables differ at {idx:?}: {x} vs {y}"));
        }
        if let Some((e, x, y)) = cmp.series_difference {
            return Err(format!("instance {i}, n={n}: raw series differ at {e:?}: {x} vs {y}"));
        }
        Ok(())
    }))
}

/// Both closed formulas against the fermionic oracle.
pub fn oracle(seed: u64, count: usize, ns: &[usize], max_weight: u32) -> CheckOutcome {
    let out = CheckOutcome::new(
        "oracle",
        &[("seed", &seed), ("instances", &count), ("n", &format!("{ns:?}")), ("max_weight", &max_weight)],
    );
    let bs = affine(seed, count);
    out.collect(cases(&bs, ns, |i, b, n| {
        let ctx = |e: &dyn Display| format!("instance {i}, n={n}: {e}");
        let o = oracle_npoint(b, n, max_weight).map_err(|e| ctx(&e))?;
        let wy = bkp_npoint_wangyang(b, n, max_weight).map_err(|e| ctx(&e))?;
        let emb = bkp_npoint_embedded(b, n, max_weight).map_err(|e| ctx(&e))?;
        table_diff(&format!("instance {i}, n={n}, wangyang vs oracle"), &wy, &o)?;
        table_diff(&format!("instance {i}, n={n}, embedded vs oracle"), &emb, &o)
    }))
}

pub fn square(seed: u64, count: usize, max_weight: u32) -> CheckOutcome {
    let out = CheckOutcome::new(
        "square",
        &[("seed", &seed), ("instances", &count), ("max_weight", &max_weight)],
    );
    let bs = affine(seed, count);
    out.collect(cases(&bs, &[()], |i, b, ()| {
        let r = check_square_relation(b, max_weight).map_err(|e| format!("instance {i}: {e}"))?;
        if r.holds {
            Ok(())
        } else {
            Err(format!("instance {i}: {}", r.detail.unwrap_or_default()))
        }
    }))
}

pub fn relation(seed: u64, count: usize, depth: u32) -> CheckOutcome {
    let out = CheckOutcome::new(
        "relation",
        &[("seed", &seed), ("instances", &count), ("depth", &depth)],
    );
    let bs = affine(seed, count);
    out.collect(cases(&bs, &[()], |i, b, ()| {
        let r = check_relation_gskpbkp(b, depth).map_err(|e| format!("instance {i}: {e}"))?;
        match r.first_difference {
            None if r.holds => Ok(()),
            None => Err(format!("instance {i}: relation failed")),
            Some((e, x, y)) => Err(format!("instance {i}: differs at {e:?}: {x} vs {y}")),
        }
    }))
}

pub fn state(seed: u64, count: usize, cutoff: i64) -> CheckOutcome {
    let out = CheckOutcome::new(
        "state",
        &[("seed", &seed), ("instances", &count), ("cutoff", &cutoff)],
    );
    let bs = affine(seed, count);
    out.collect(cases(&bs, &[()], |i, b, ()| {
        let r = check_state_equality(b, cutoff).map_err(|e| format!("instance {i}: {e}"))?;
        if r.holds {
            Ok(())
        } else {
            Err(format!("instance {i}: {}", r.detail.unwrap_or_default()))
        }
    }))
}

pub fn lemma(seed: u64, count: usize, ks: &[usize], depth: i64) -> CheckOutcome {
    let out = CheckOutcome::new(
        "lemma",
        &[("seed", &seed), ("instances", &count), ("k", &format!("{ks:?}")), ("depth", &depth)],
    );
    let specs = series_pair_instances(seed, count, PAIR_SUPPORT, PAIR_HEIGHT);
    out.collect(cases(&specs, ks, |i, spec, k| {
        let r = check_lemma(k, spec, depth).map_err(|e| format!("instance {i}, k={k}: {e}"))?;
        match r.first_difference {
            None => Ok(()),
            Some((e, x, y)) => Err(format!("instance {i}, k={k}: sides differ at {e:?}: {x} vs {y}")),
        }
    }))
}

/// Zero coordinates give zero tables by every route.
pub fn trivial(ns: &[usize], max_weight: u32) -> CheckOutcome {
    let out = CheckOutcome::new("trivial", &[("n", &format!("{ns:?}")), ("max_weight", &max_weight)]);
    let empty = [AffineB::empty()];
    out.collect(cases(&empty, ns, |_, b, n| {
        let ctx = |e: &dyn Display| format!("n={n}: {e}");
        let tables = [
            ("wangyang", bkp_npoint_wangyang(b, n, max_weight).map_err(|e| ctx(&e))?),
            ("embedded", bkp_npoint_embedded(b, n, max_weight).map_err(|e| ctx(&e))?),
            ("oracle", oracle_npoint(b, n, max_weight).map_err(|e| ctx(&e))?),
        ];
        match tables.iter().find(|(_, t)| !t.is_zero()) {
            None => Ok(()),
            Some((name, _)) => Err(format!("n={n}: {name} table is not zero")),
        }
    }))
}

type Route = fn(&AffineB) -> Result<NPointTable, String>;

/// `a_{1,0} = 1` gives `dF/dt_1 = -1` and `dF/dt_3 = 0` by all three routes.
pub fn worked_value() -> CheckOutcome {
    let out = CheckOutcome::new("worked_value", &[("coords", &"a[1,0]=1")]);
    let b = validate_b([(1, 0, int(1))]).expect("valid coordinates");
    let routes: [(&str, Route); 3] = [
        ("wangyang", |b| bkp_npoint_wangyang(b, 1, 3).map_err(|e| e.to_string())),
        ("embedded", |b| bkp_npoint_embedded(b, 1, 3).map_err(|e| e.to_string())),
        ("oracle", |b| oracle_npoint(b, 1, 3).map_err(|e| e.to_string())),
    ];
    out.collect(cases(&routes, &[()], |_, (name, route), ()| {
        let t = route(&b).map_err(|e| format!("{name}: {e}"))?;
        let (v1, v3) = (t.get(&[1]).cloned(), t.get(&[3]).cloned());
        if v1 == Some(int(-1)) && v3 == Some(int(0)) {
            Ok(())
        } else {
            Err(format!("{name}: got t_1 -> {v1:?}, t_3 -> {v3:?}"))
        }
    }))
}

/// Tables are unchanged when the truncation slack is doubled and when the
/// oracle state is built two degrees further.
pub fn certification(seed: u64, count: usize, ns: &[usize], max_weight: u32) -> CheckOutcome {
    let out = CheckOutcome::new(
        "certification",
        &[("seed", &seed), ("instances", &count), ("n", &format!("{ns:?}")), ("max_weight", &max_weight)],
    );
    let bs = affine(seed, count);
    out.collect(cases(&bs, ns, |i, b, n| {
        let ctx = |e: &dyn Display| format!("instance {i}, n={n}: {e}");
        let base = Truncation::default();
        let wide = base.doubled();
        let wy = bkp_npoint_wangyang_with(b, n, max_weight, base).map_err(|e| ctx(&e))?;
        let wy2 = bkp_npoint_wangyang_with(b, n, max_weight, wide).map_err(|e| ctx(&e))?;
        table_diff(&format!("instance {i}, n={n}, wangyang doubled slack"), &wy, &wy2)?;
        let emb = bkp_npoint_embedded_with(b, n, max_weight, base).map_err(|e| ctx(&e))?;
        let emb2 = bkp_npoint_embedded_with(b, n, max_weight, wide).map_err(|e| ctx(&e))?;
        table_diff(&format!("instance {i}, n={n}, embedded doubled slack"), &emb, &emb2)?;
        let o = oracle_npoint(b, n, max_weight).map_err(|e| ctx(&e))?;
        let o2 = oracle_npoint_with_cutoff(b, n, max_weight, max_weight as i64 + 2).map_err(|e| ctx(&e))?;
        table_diff(&format!("instance {i}, n={n}, oracle cutoff +2"), &o, &o2)
    }))
}

/// The full suite at the default sizes.
pub fn full_suite(seed: u64) -> Vec<CheckOutcome> {
    vec![
        equivalence(seed, 10, &[1, 2, 3], 9),
        oracle(seed, 10, &[1, 2, 3], 7),
        square(seed, 5, 8),
        relation(seed, 20, 8),
        state(seed, 5, 8),
        lemma(seed, 20, &[1, 2, 3], 6),
        lemma(seed, 3, &[4], 6),
        trivial(&[1, 2, 3, 4], 9),
        worked_value(),
        certification(seed, 5, &[1, 2, 3], 7),
    ]
}
