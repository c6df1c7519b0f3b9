//! Closed-form connected n-point functions.
//!
//! Three cycle-sum formulas are evaluated here: the KP formula in KP affine
//! coordinates, the BKP formula obtained through the KP embedding (`embedded`),
//! and the BKP formula with neutral-fermion kernels (`wangyang`).
//!
//! Each formula is a sum over n-cycles and sign vectors of products of two-variable
//! series. Variable `z_k` gets rank `k`, every kernel is expanded with the
//! lower-rank variable dominant, and products are cut by grade. The cut for a
//! partial product is the highest target grade minus the grade lower bounds of the
//! factors still to come, so every coefficient that can reach a target is kept and
//! the precision bookkeeping in [`crate::series`] certifies the result.

use itertools::Itertools;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::affine::{
    bkp_to_kp, series_a_bkp, series_a_hat_bkp, series_a_hat_kp, series_a_kp, AffineB, AffineKP,
};
use crate::rational::{int, rat, Rational};
use crate::series::{expand_kernel, ExpVec, KernelKind, LaurentSeries, SeriesError, Window, MAX_VARS};
use crate::table::NPointTable;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NPointError {
    #[error("n must be between 1 and {MAX_VARS}, got {0}")]
    BadArity(usize),
    #[error("the KP formula needs n >= 2")]
    KpArity,
    #[error("insufficient window: certified up to grade {certified}, need {needed}")]
    InsufficientWindow { certified: i64, needed: i64 },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// A single n-cycle on `0..n`, stored as its successor map.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CycleSuccessor {
    succ: Vec<usize>,
}

impl CycleSuccessor {
    pub fn succ(&self, p: usize) -> usize {
        self.succ[p]
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    /// Consecutive pairs `(v, succ(v))` starting from vertex 0.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.succ.len());
        let mut p = 0;
        for _ in 0..self.succ.len() {
            out.push((p, self.succ[p]));
            p = self.succ[p];
        }
        out
    }

    /// Visiting order starting from vertex 0.
    pub fn order(&self) -> Vec<usize> {
        self.edges().into_iter().map(|(p, _)| p).collect()
    }
}

/// All `(n-1)!` cycles on `0..n`, one per visiting order that starts at 0.
pub fn enumerate_cycles(n: usize) -> Vec<CycleSuccessor> {
    assert!(n >= 1);
    (1..n)
        .permutations(n - 1)
        .map(|rest| {
            let mut order = vec![0];
            order.extend(rest);
            let mut succ = vec![0; n];
            for k in 0..n {
                succ[order[k]] = order[(k + 1) % n];
            }
            CycleSuccessor { succ }
        })
        .collect()
}

fn sign_vectors(len: usize) -> Vec<Vec<i32>> {
    (0..1u32 << len)
        .map(|mask| (0..len).map(|k| if mask >> k & 1 == 1 { -1 } else { 1 }).collect())
        .collect()
}

/// Grade slack used for truncation, plus the certification multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truncation {
    /// Explicit grade slack; `None` derives it from the coordinates.
    pub slack: Option<i64>,
    /// Multiplies the slack (2 for the certification rerun).
    pub scale: i64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { slack: None, scale: 1 }
    }
}

impl Truncation {
    pub fn doubled(self) -> Self {
        Truncation {
            scale: self.scale * 2,
            ..self
        }
    }

    fn slack(&self, derived: i64) -> i64 {
        self.slack.unwrap_or(derived) * self.scale
    }
}

/// One summand of a cycle sum: `coeff * prod(factors)`.
pub(crate) struct Summand {
    pub(crate) coeff: Rational,
    pub(crate) factors: Vec<LaurentSeries>,
}

fn ranks(n: usize) -> Vec<i32> {
    (1..=n as i32).collect()
}

/// Largest grade among the target monomials `prod z_k^{-i_k - shift}`.
fn target_grade(n: usize, shift: i64) -> i64 {
    -(1..=n as i64).map(|k| k * (1 + shift)).sum::<i64>()
}

/// Adds `coeff * prod(factors)` into `total`, keeping only what can reach grade
/// `target`. The last multiplication writes straight into `total`.
fn add_product(total: &mut LaurentSeries, summand: &Summand, target: i64) -> Result<(), SeriesError> {
    let window = total.window().clone();
    let mut bounds = Vec::with_capacity(summand.factors.len());
    for f in &summand.factors {
        match f.grade_lower_bound() {
            Some(b) => bounds.push(b),
            // a certified zero factor kills the product
            None => return Ok(()),
        }
    }
    let total_bound: i64 = bounds.iter().sum();
    let last = summand.factors.len() - 1;
    let mut acc = LaurentSeries::constant(summand.coeff.clone(), &window);
    for (k, f) in summand.factors.iter().enumerate() {
        let rest: i64 = bounds[k + 1..].iter().sum();
        let trimmed;
        let f = if total_bound <= target {
            // terms of f above this grade cannot reach the target
            trimmed = f.truncate_grade(target - total_bound + bounds[k]);
            &trimmed
        } else {
            f
        };
        if k == last {
            total.add_product_assign(&acc, f, Some(target - rest))?;
        } else {
            acc = acc.mul_capped(f, Some(target - rest))?;
        }
    }
    Ok(())
}

pub(crate) fn sum_products(
    summands: Vec<Summand>,
    target: i64,
    window: &Window,
) -> Result<LaurentSeries, SeriesError> {
    summands
        .into_par_iter()
        .try_fold(
            || LaurentSeries::zero(window),
            |mut total, s| {
                add_product(&mut total, &s, target)?;
                Ok(total)
            },
        )
        .try_reduce(
            || LaurentSeries::zero(window),
            |mut a, b| {
                a.add_assign(&b)?;
                Ok(a)
            },
        )
}

fn certify(series: &LaurentSeries, needed: i64) -> Result<(), NPointError> {
    if let Some(g) = series.certified_grade() {
        if g < needed {
            return Err(NPointError::InsufficientWindow { certified: g, needed });
        }
    }
    Ok(())
}

fn check_arity(n: usize) -> Result<(), NPointError> {
    if n == 0 || n > MAX_VARS {
        return Err(NPointError::BadArity(n));
    }
    Ok(())
}

/// Grade slack that covers every factor's lowest-grade term: each variable of rank
/// `r` appears in two factors, with exponents no lower than `-depth`.
fn derived_slack(n: usize, depth: i64) -> i64 {
    let n = n as i64;
    depth * n * (n + 1) + 2 * n
}

/// Coefficient of the δ-term and the embedded prefactor `(-1)^{n-1} / 2^{n+1}`.
fn embedded_prefactor(n: usize) -> Rational {
    let sign = if n % 2 == 1 { 1 } else { -1 };
    rat(sign, 1i64 << (n + 1))
}

fn kp_summands(
    kp: &AffineKP,
    n: usize,
    signs: &[Vec<i32>],
    coeff: &Rational,
    window: &Window,
) -> Result<Vec<Summand>, SeriesError> {
    let mut out = Vec::new();
    for cycle in enumerate_cycles(n) {
        for eps in signs {
            if n == 2 {
                // pure kernel part of the 2-cycle: 1/(u-v) * 1/(v-u) = -1/(u-v)^2
                let (e1, e2) = (eps[0], eps[1]);
                let sq = expand_kernel(KernelKind::InvDiffSq, 0, 1, e1, e2, window)?;
                let k12 = expand_kernel(KernelKind::InvDiff, 0, 1, e1, e2, window)?;
                let k21 = expand_kernel(KernelKind::InvDiff, 1, 0, e2, e1, window)?;
                let a12 = series_a_kp(kp, 0, 1, e1, e2, window);
                let a21 = series_a_kp(kp, 1, 0, e2, e1, window);
                out.push(Summand { coeff: -coeff.clone(), factors: vec![sq] });
                out.push(Summand { coeff: coeff.clone(), factors: vec![k12, a21.clone()] });
                out.push(Summand { coeff: coeff.clone(), factors: vec![a12.clone(), k21] });
                out.push(Summand { coeff: coeff.clone(), factors: vec![a12, a21] });
                continue;
            }
            let factors = cycle
                .edges()
                .into_iter()
                .map(|(p, q)| series_a_hat_kp(kp, p, q, eps[p], eps[q], window))
                .collect::<Result<Vec<_>, _>>()?;
            out.push(Summand { coeff: coeff.clone(), factors });
        }
    }
    Ok(out)
}

/// Direct product of the 2-cycle without splitting off the kernel square.
pub fn kp_two_cycle_direct(kp: &AffineKP, e1: i32, e2: i32, window: &Window) -> Result<LaurentSeries, SeriesError> {
    let f = series_a_hat_kp(kp, 0, 1, e1, e2, window)?;
    let g = series_a_hat_kp(kp, 1, 0, e2, e1, window)?;
    f.mul(&g)
}

/// Raw KP series `sum d^n F^KP z^{-i-1}` over all positive indices.
pub fn kp_npoint(
    kp: &AffineKP,
    n: usize,
    truncation: Truncation,
) -> Result<LaurentSeries, NPointError> {
    check_arity(n)?;
    if n < 2 {
        return Err(NPointError::KpArity);
    }
    let target = target_grade(n, 1);
    let slack = truncation.slack(derived_slack(n, kp.max_index() as i64 + 1));
    let window = Window::graded(ranks(n), target + slack);
    let sign = if n % 2 == 1 { int(1) } else { int(-1) };
    let summands = kp_summands(kp, n, &[vec![1; n]], &sign, &window)?;
    let mut series = sum_products(summands, target, &window)?;
    if n == 2 {
        let delta = expand_kernel(KernelKind::InvDiffSq, 0, 1, 1, 1, &window)?;
        series = series.sub(&delta)?;
    }
    certify(&series, target)?;
    Ok(series)
}

/// Value of `d^n F^KP / dt_{i_1} ... dt_{i_n}` read from [`kp_npoint`].
pub fn kp_coefficient(series: &LaurentSeries, indices: &[u32]) -> Result<Rational, SeriesError> {
    let e: Vec<i32> = indices.iter().map(|&i| -(i as i32) - 1).collect();
    series.coefficient(&ExpVec::new(&e))
}

/// Raw embedded series `sum_{odd} d^n F^BKP prod z_k^{-i_k-1}`.
pub fn bkp_embedded_series(
    b: &AffineB,
    n: usize,
    truncation: Truncation,
) -> Result<LaurentSeries, NPointError> {
    check_arity(n)?;
    let kp = bkp_to_kp(b);
    let target = target_grade(n, 1);
    let slack = truncation.slack(derived_slack(n, kp.max_index() as i64 + 1));
    let window = Window::graded(ranks(n), target + slack);
    let prefactor = embedded_prefactor(n);
    let signs = sign_vectors(n);
    let mut series = if n == 1 {
        let mut s = LaurentSeries::zero(&window);
        for eps in &signs {
            s.add_scaled_assign(&series_a_kp(&kp, 0, 0, eps[0], eps[0], &window), &prefactor)?;
        }
        s
    } else {
        sum_products(kp_summands(&kp, n, &signs, &prefactor, &window)?, target, &window)?
    };
    if n == 2 {
        let delta = expand_kernel(KernelKind::KpDelta, 0, 1, 1, 1, &window)?;
        series = series.sub(&delta)?;
    }
    certify(&series, target)?;
    Ok(series)
}

/// `ξ(ε_p z_p, -ε_q z_q)` for one edge of a cycle.
fn xi(b: &AffineB, p: usize, q: usize, eps: &[i32], window: &Window) -> Result<LaurentSeries, SeriesError> {
    use std::cmp::Ordering;
    match p.cmp(&q) {
        Ordering::Less => series_a_hat_bkp(b, p, q, eps[p], -eps[q], window),
        Ordering::Equal => Ok(series_a_bkp(b, p, p, eps[p], -eps[p], window)),
        Ordering::Greater => Ok(series_a_hat_bkp(b, q, p, -eps[q], eps[p], window)?.neg()),
    }
}

/// Raw Wang–Yang series `sum_{odd} d^n F^BKP prod z_k^{-i_k}`.
pub fn bkp_wangyang_series(
    b: &AffineB,
    n: usize,
    truncation: Truncation,
) -> Result<LaurentSeries, NPointError> {
    check_arity(n)?;
    let target = target_grade(n, 0);
    let slack = truncation.slack(derived_slack(n, b.max_index() as i64));
    let window = Window::graded(ranks(n), target + slack);
    let mut summands = Vec::new();
    for cycle in enumerate_cycles(n) {
        for tail in sign_vectors(n - 1) {
            let mut eps = vec![1];
            eps.extend(tail);
            // (-ε_2 ⋯ ε_n), with the empty product read as 1
            let coeff = -int(eps.iter().map(|&e| e as i64).product());
            let factors = cycle
                .edges()
                .into_iter()
                .map(|(p, q)| xi(b, p, q, &eps, &window))
                .collect::<Result<Vec<_>, _>>()?;
            summands.push(Summand { coeff, factors });
        }
    }
    let mut series = sum_products(summands, target, &window)?;
    if n == 2 {
        let delta = expand_kernel(KernelKind::BkpDelta, 0, 1, 1, 1, &window)?;
        series = series.sub(&delta)?;
    }
    certify(&series, target)?;
    Ok(series)
}

fn table_from_series(series: &LaurentSeries, n: usize, max_weight: u32, shift: i32) -> Result<NPointTable, NPointError> {
    NPointTable::try_from_fn(n, max_weight, |idx| {
        let e: Vec<i32> = idx.iter().map(|&i| -(i as i32) - shift).collect();
        series.coefficient(&ExpVec::new(&e)).map_err(NPointError::from)
    })
}

/// Derivative table from the embedded formula.
pub fn bkp_npoint_embedded(b: &AffineB, n: usize, max_weight: u32) -> Result<NPointTable, NPointError> {
    bkp_npoint_embedded_with(b, n, max_weight, Truncation::default())
}

pub fn bkp_npoint_embedded_with(
    b: &AffineB,
    n: usize,
    max_weight: u32,
    truncation: Truncation,
) -> Result<NPointTable, NPointError> {
    let series = bkp_embedded_series(b, n, truncation)?;
    table_from_series(&series, n, max_weight, 1)
}

/// Derivative table from the Wang–Yang formula.
pub fn bkp_npoint_wangyang(b: &AffineB, n: usize, max_weight: u32) -> Result<NPointTable, NPointError> {
    bkp_npoint_wangyang_with(b, n, max_weight, Truncation::default())
}

pub fn bkp_npoint_wangyang_with(
    b: &AffineB,
    n: usize,
    max_weight: u32,
    truncation: Truncation,
) -> Result<NPointTable, NPointError> {
    let series = bkp_wangyang_series(b, n, truncation)?;
    table_from_series(&series, n, max_weight, 0)
}

/// Result of comparing the two BKP formulas.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormulaComparison {
    pub wangyang: NPointTable,
    pub embedded: NPointTable,
    /// First table entry where the formulas disagree.
    pub table_difference: Option<(Vec<u32>, Rational, Rational)>,
    /// First certified monomial where the Wang–Yang series differs from
    /// `z_1 ⋯ z_n` times the embedded series.
    pub series_difference: Option<(Vec<i32>, Rational, Rational)>,
    /// Number of monomials covered by the raw-series comparison.
    pub series_compared: usize,
}

impl FormulaComparison {
    pub fn agree(&self) -> bool {
        self.table_difference.is_none() && self.series_difference.is_none()
    }
}

pub fn compare_formulas(b: &AffineB, n: usize, max_weight: u32) -> Result<FormulaComparison, NPointError> {
    compare_formulas_with(b, n, max_weight, Truncation::default())
}

pub fn compare_formulas_with(
    b: &AffineB,
    n: usize,
    max_weight: u32,
    truncation: Truncation,
) -> Result<FormulaComparison, NPointError> {
    let wy = bkp_wangyang_series(b, n, truncation)?;
    let emb = bkp_embedded_series(b, n, truncation)?;
    let wangyang = table_from_series(&wy, n, max_weight, 0)?;
    let embedded = table_from_series(&emb, n, max_weight, 1)?;
    let shifted = emb.mul_monomial(&vec![1; n], &Rational::one());
    let limit = match (wy.certified_grade(), shifted.certified_grade()) {
        (Some(a), Some(b)) => a.min(b),
        (a, b) => a.or(b).unwrap_or(i64::MAX),
    };
    let series_compared = wy
        .terms()
        .chain(shifted.terms())
        .filter(|(e, _)| wy.window().grade(e) <= limit)
        .count();
    let series_difference = wy
        .first_difference(&shifted, limit)
        .map(|(e, a, b)| (e.as_slice().to_vec(), a, b));
    Ok(FormulaComparison {
        table_difference: wangyang.first_difference(&embedded),
        wangyang,
        embedded,
        series_difference,
        series_compared,
    })
}

/// Monomials of a raw series that are certified, nonzero and not of the form
/// `prod z_k^{-i_k - shift}` with every `i_k` odd and positive.
pub fn stray_monomials(series: &LaurentSeries, shift: i32) -> Vec<ExpVec> {
    series
        .terms()
        .filter(|(e, c)| !c.is_zero() && series.is_certified(e))
        .filter(|(e, _)| {
            !e.as_slice().iter().all(|&x| {
                let i = -x - shift;
                i >= 1 && i % 2 == 1
            })
        })
        .map(|(e, _)| *e)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::validate_b;

    fn b10() -> AffineB {
        validate_b([(1, 0, int(1))]).unwrap()
    }

    #[test]
    fn cycles() {
        assert_eq!(enumerate_cycles(1), vec![CycleSuccessor { succ: vec![0] }]);
        assert_eq!(enumerate_cycles(2), vec![CycleSuccessor { succ: vec![1, 0] }]);
        let c3 = enumerate_cycles(3);
        assert_eq!(c3.len(), 2);
        assert_eq!(c3[0].order(), vec![0, 1, 2]);
        assert_eq!(c3[1].order(), vec![0, 2, 1]);
        assert_eq!(enumerate_cycles(5).len(), 24);
        for c in enumerate_cycles(4) {
            let mut seen = c.order();
            seen.sort();
            assert_eq!(seen, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn one_point_values() {
        let emb = bkp_npoint_embedded(&b10(), 1, 5).unwrap();
        let wy = bkp_npoint_wangyang(&b10(), 1, 5).unwrap();
        for t in [&emb, &wy] {
            assert_eq!(t.get(&[1]), Some(&int(-1)));
            assert_eq!(t.get(&[3]), Some(&int(0)));
            assert_eq!(t.get(&[5]), Some(&int(0)));
        }
        let raw = bkp_wangyang_series(&b10(), 1, Truncation::default()).unwrap();
        assert_eq!(raw.coefficient(&ExpVec::new(&[-1])).unwrap(), int(-1));
        let raw = bkp_embedded_series(&b10(), 1, Truncation::default()).unwrap();
        assert_eq!(raw.coefficient(&ExpVec::new(&[-2])).unwrap(), int(-1));
    }

    #[test]
    fn trivial_tau_is_zero() {
        let e = AffineB::empty();
        for n in 1..=4 {
            assert!(bkp_npoint_embedded(&e, n, 9).unwrap().is_zero(), "embedded n={n}");
            assert!(bkp_npoint_wangyang(&e, n, 9).unwrap().is_zero(), "wangyang n={n}");
        }
        let kp = AffineKP::default();
        for n in 2..=3 {
            let s = kp_npoint(&kp, n, Truncation::default()).unwrap();
            let g = s.certified_grade().unwrap();
            assert!(s.terms().all(|(e, _)| s.window().grade(e) > g), "kp n={n}");
        }
    }

    #[test]
    fn regularized_two_cycle_matches_direct_product() {
        let kp = bkp_to_kp(&validate_b([(2, 1, rat(3, 2)), (1, 0, int(-1))]).unwrap());
        let w = Window::graded(vec![1, 2], 16);
        for (e1, e2) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let direct = kp_two_cycle_direct(&kp, e1, e2, &w).unwrap();
            let split = sum_products(kp_summands(&kp, 2, &[vec![e1, e2]], &int(1), &w).unwrap(), -6, &w).unwrap();
            let g = direct.certified_grade().unwrap().min(split.certified_grade().unwrap());
            assert!(g >= -6, "certified {g}");
            assert!(direct.first_difference(&split, g).is_none());
        }
    }

    #[test]
    fn small_instance_agrees() {
        let b = validate_b([(2, 0, rat(1, 3)), (3, 1, int(-2)), (1, 0, rat(5, 4))]).unwrap();
        for n in 1..=3 {
            let cmp = compare_formulas(&b, n, 7).unwrap();
            assert!(cmp.agree(), "n={n}: {:?} {:?}", cmp.table_difference, cmp.series_difference);
            assert!(cmp.wangyang.is_symmetric());
        }
    }

    #[test]
    fn wangyang_series_is_odd_in_first_variable() {
        let b = validate_b([(2, 1, int(1)), (1, 0, rat(-1, 2))]).unwrap();
        let s = bkp_wangyang_series(&b, 2, Truncation::default()).unwrap();
        let g = s.certified_grade().unwrap();
        assert!(s.first_difference(&s.substitute_sign(0, -1).neg(), g).is_none());
        assert!(stray_monomials(&s, 0).is_empty());
        let e = bkp_embedded_series(&b, 2, Truncation::default()).unwrap();
        assert!(stray_monomials(&e, 1).is_empty());
    }

    #[test]
    fn too_small_slack_is_reported() {
        let b = validate_b([(4, 3, int(1))]).unwrap();
        let t = Truncation { slack: Some(0), scale: 1 };
        assert!(matches!(
            bkp_npoint_embedded_with(&b, 3, 9, t),
            Err(NPointError::InsufficientWindow { .. }) | Err(NPointError::Series(SeriesError::InsufficientTruncation(_)))
        ));
    }

    #[test]
    fn matches_fock_oracle() {
        let b = validate_b([(2, 1, rat(-2, 3)), (1, 0, int(1)), (3, 0, rat(1, 2))]).unwrap();
        for n in 1..=3 {
            let oracle = crate::fock::oracle_npoint(&b, n, 7).unwrap();
            let wy = bkp_npoint_wangyang(&b, n, 7).unwrap();
            let emb = bkp_npoint_embedded(&b, n, 7).unwrap();
            assert_eq!(wy.first_difference(&oracle), None, "wangyang n={n}");
            assert_eq!(emb.first_difference(&oracle), None, "embedded n={n}");
        }
    }

    #[test]
    fn kp_formula_matches_kp_free_energy() {
        let kp = bkp_to_kp(&validate_b([(2, 0, int(1)), (1, 0, rat(1, 2))]).unwrap());
        let f = crate::fock::kp_free_energy(&kp, 6).unwrap();
        for n in 2..=3 {
            let s = kp_npoint(&kp, n, Truncation::default()).unwrap();
            let mut idx = vec![1u32; n];
            loop {
                if idx.iter().sum::<u32>() <= 6 {
                    let got = kp_coefficient(&s, &idx).unwrap();
                    assert_eq!(got, crate::fock::derivative_at(&f, &idx), "{idx:?}");
                }
                let mut k = 0;
                while k < n && idx[k] == 5 {
                    idx[k] = 1;
                    k += 1;
                }
                if k == n {
                    break;
                }
                idx[k] += 1;
            }
        }
    }

    #[test]
    fn doubled_slack_reproduces_tables() {
        let b = validate_b([(4, 1, rat(7, 9)), (2, 0, int(-1))]).unwrap();
        for n in 1..=3 {
            let base = Truncation::default();
            assert_eq!(
                bkp_npoint_wangyang_with(&b, n, 9, base).unwrap(),
                bkp_npoint_wangyang_with(&b, n, 9, base.doubled()).unwrap()
            );
            assert_eq!(
                bkp_npoint_embedded_with(&b, n, 9, base).unwrap(),
                bkp_npoint_embedded_with(&b, n, 9, base.doubled()).unwrap()
            );
        }
    }
}
