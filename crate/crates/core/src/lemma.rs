//! Exact verification of the cyclic sign-sum identity between the `f` and `g`
//! two-variable series, and of its instance built from BKP affine coordinates.
//!
//! Variables come in pairs `x_i, y_i` (`i = 0..k`), stored at positions `2i` and
//! `2i + 1`. Both members of a pair share rank `i + 1`, so every ratio kernel is
//! expanded with the lower-index argument dominant, and a ratio between two
//! arguments of the same index is taken to be zero.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::affine::AffineB;
use crate::npoint::{enumerate_cycles, sum_products, Summand};
use crate::rational::{int, Rational};
use crate::series::{
    expand_kernel, ExpVec, KernelKind, LaurentSeries, RatioNumerator, SeriesError, Window,
};

/// Largest supported `k`; `2k` variables must fit in a series.
pub const MAX_K: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LemmaError {
    #[error("k must be between 1 and {MAX_K}, got {0}")]
    BadK(usize),
    #[error("s[{0},{1}] is not on the strict triangle of positive indices")]
    BadSIndex(u32, u32),
    #[error("s[{0},{1}] conflicts with its antisymmetric partner")]
    AntisymmetryConflict(u32, u32),
    #[error("t must not have a constant term")]
    ConstantTerm,
    #[error("insufficient window: certified up to grade {certified}, need {needed}")]
    InsufficientWindow { certified: i64, needed: i64 },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// `s(x, y) = sum_{m<n} s_{m,n} (x^-m y^-n - x^-n y^-m)` and `t(x) = sum_m t_m x^-m`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeriesPairSpec {
    s: BTreeMap<(u32, u32), Rational>,
    t: BTreeMap<u32, Rational>,
}

impl SeriesPairSpec {
    /// Accepts `s` entries from either triangle; `(n, m)` with `n > m` is stored as
    /// `-s` at `(m, n)`.
    pub fn new<S, T>(s: S, t: T) -> Result<Self, LemmaError>
    where
        S: IntoIterator<Item = (u32, u32, Rational)>,
        T: IntoIterator<Item = (u32, Rational)>,
    {
        let mut out = SeriesPairSpec::default();
        for (m, n, v) in s {
            if m == 0 || n == 0 || m == n {
                if v.is_zero() {
                    continue;
                }
                return Err(LemmaError::BadSIndex(m, n));
            }
            let (key, v) = if m < n { ((m, n), v) } else { ((n, m), -v) };
            if let Some(prev) = out.s.get(&key) {
                if *prev != v {
                    return Err(LemmaError::AntisymmetryConflict(key.0, key.1));
                }
            }
            if !v.is_zero() {
                out.s.insert(key, v);
            }
        }
        for (m, v) in t {
            if m == 0 {
                if v.is_zero() {
                    continue;
                }
                return Err(LemmaError::ConstantTerm);
            }
            if !v.is_zero() {
                *out.t.entry(m).or_insert_with(Rational::zero) += v;
            }
        }
        out.t.retain(|_, v| !v.is_zero());
        Ok(out)
    }

    pub fn s_entries(&self) -> impl Iterator<Item = (u32, u32, &Rational)> {
        self.s.iter().map(|(&(m, n), v)| (m, n, v))
    }

    pub fn t_entries(&self) -> impl Iterator<Item = (u32, &Rational)> {
        self.t.iter().map(|(&m, v)| (m, v))
    }

    pub fn is_zero(&self) -> bool {
        self.s.is_empty() && self.t.is_empty()
    }

    /// Largest exponent magnitude in `s` or `t`.
    pub fn support(&self) -> u32 {
        let s = self.s.keys().map(|&(_, n)| n).max().unwrap_or(0);
        let t = self.t.keys().copied().max().unwrap_or(0);
        s.max(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flavor {
    X,
    Y,
}

/// One of `x_index` or `y_index`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VarRef {
    pub index: usize,
    pub flavor: Flavor,
}

impl VarRef {
    pub fn x(index: usize) -> Self {
        VarRef { index, flavor: Flavor::X }
    }

    pub fn y(index: usize) -> Self {
        VarRef { index, flavor: Flavor::Y }
    }

    /// The partner variable when `eps == -1`, itself when `eps == 1`.
    pub fn select(self, eps: i32) -> Self {
        if eps == 1 {
            return self;
        }
        let flavor = match self.flavor {
            Flavor::X => Flavor::Y,
            Flavor::Y => Flavor::X,
        };
        VarRef { flavor, ..self }
    }

    pub fn position(self) -> usize {
        2 * self.index + usize::from(self.flavor == Flavor::Y)
    }
}

/// Graded window for `k` pairs; both members of pair `i` get rank `i + 1`.
pub fn pair_window(k: usize, cap: i64) -> Window {
    let ranks = (1..=k as i32).flat_map(|r| [r, r]).collect();
    Window::graded(ranks, cap)
}

fn mono(window: &Window, entries: &[(VarRef, i32)]) -> ExpVec {
    let mut e = ExpVec::zeros(window.n_vars());
    for &(v, x) in entries {
        e.bump(v.position(), x);
    }
    e
}

fn eval_s(spec: &SeriesPairSpec, a: VarRef, b: VarRef, window: &Window) -> LaurentSeries {
    let terms = spec.s.iter().flat_map(|(&(m, n), v)| {
        let (m, n) = (m as i32, n as i32);
        [
            (mono(window, &[(a, -m), (b, -n)]), v.clone()),
            (mono(window, &[(a, -n), (b, -m)]), -v.clone()),
        ]
    });
    LaurentSeries::from_terms(window, terms)
}

fn eval_t(spec: &SeriesPairSpec, a: VarRef, window: &Window) -> LaurentSeries {
    let terms = spec
        .t
        .iter()
        .map(|(&m, v)| (mono(window, &[(a, -(m as i32))]), v.clone()));
    LaurentSeries::from_terms(window, terms)
}

fn ratio(kind: RatioNumerator, a: VarRef, b: VarRef, window: &Window) -> Result<LaurentSeries, SeriesError> {
    if a.index == b.index {
        return Ok(LaurentSeries::zero(window));
    }
    expand_kernel(KernelKind::LemmaRatio(kind), a.position(), b.position(), 1, 1, window)
}

/// `f(a, b) = 2 s(a, b) + 2 t(a) - 2 t(b) + (a - b) / (a + b)`.
pub fn eval_f(spec: &SeriesPairSpec, a: VarRef, b: VarRef, window: &Window) -> Result<LaurentSeries, SeriesError> {
    let two = int(2);
    let mut out = ratio(RatioNumerator::Difference, a, b, window)?;
    out.add_scaled_assign(&eval_s(spec, a, b, window), &two)?;
    out.add_scaled_assign(&eval_t(spec, a, window), &two)?;
    out.add_scaled_assign(&eval_t(spec, b, window), &-two)?;
    Ok(out)
}

/// `g(a, b) = s(a, b) + 2 t(a) (1 - t(b)) - b / (a + b)`.
pub fn eval_g(spec: &SeriesPairSpec, a: VarRef, b: VarRef, window: &Window) -> Result<LaurentSeries, SeriesError> {
    let ta = eval_t(spec, a, window);
    let tb = eval_t(spec, b, window);
    let one_minus = LaurentSeries::constant(Rational::one(), window).sub(&tb)?;
    let mut out = eval_s(spec, a, b, window);
    out.add_scaled_assign(&ta.mul(&one_minus)?, &int(2))?;
    out.add_scaled_assign(&ratio(RatioNumerator::Second, a, b, window)?, &-Rational::one())?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Lhs,
    Rhs,
}

/// Grade cap for building the factors of one side. Polynomial parts have negative
/// grade and kernel parts nonnegative grade, so a first build at cap
/// `max(target, 0)` already shows each factor's true lowest grade; factor `j` of a
/// product then needs terms up to `target` minus the other factors' lowest grades.
fn plan(side: Side, k: usize, spec: &SeriesPairSpec, target: i64) -> Result<Window, SeriesError> {
    let probe = pair_window(k, target.max(0));
    let mut cap = target;
    for s in side_summands(side, k, spec, &probe, false)? {
        let bounds: Vec<i64> = s.factors.iter().filter_map(|f| f.grade_lower_bound()).collect();
        if bounds.len() < s.factors.len() {
            continue;
        }
        let total: i64 = bounds.iter().sum();
        let widest = bounds.iter().max().copied().unwrap_or(0);
        cap = cap.max(target - total + widest);
    }
    Ok(pair_window(k, cap))
}

/// Products of one side, one per cycle and sign vector; with `all_signs` false only
/// the all-plus sign vector is kept.
fn side_summands(
    side: Side,
    k: usize,
    spec: &SeriesPairSpec,
    window: &Window,
    all_signs: bool,
) -> Result<Vec<Summand>, SeriesError> {
    let weight = match side {
        Side::Lhs => int(1),
        Side::Rhs => int(1 << k),
    };
    let mut out = Vec::new();
    for cycle in enumerate_cycles(k) {
        let masks = if all_signs { 1u32 << k } else { 1 };
        for mask in 0..masks {
            let eps: Vec<i32> = (0..k).map(|p| if mask >> p & 1 == 1 { -1 } else { 1 }).collect();
            let sign: i32 = eps.iter().product();
            let factors = cycle
                .edges()
                .into_iter()
                .map(|(p, q)| {
                    let a = VarRef::y(p).select(eps[p]);
                    let b = VarRef::x(q).select(eps[q]);
                    match side {
                        Side::Lhs => eval_f(spec, a, b, window),
                        Side::Rhs => eval_g(spec, a, b, window),
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            out.push(Summand {
                coeff: &weight * int(sign as i64),
                factors,
            });
        }
    }
    Ok(out)
}

/// `sum_eps (prod eps) F(eps)` from the all-plus term `F`: flipping `eps_p` swaps
/// `x_p` and `y_p`, which share a rank, so the sign sum is `prod_p (1 - swap_p)`.
fn antisymmetrize(series: LaurentSeries, k: usize) -> Result<LaurentSeries, SeriesError> {
    let window = series.window().clone();
    let mut out = series;
    for p in 0..k {
        let targets: Vec<(usize, i32)> = (0..2 * k)
            .map(|v| match v {
                v if v == 2 * p => (2 * p + 1, 1),
                v if v == 2 * p + 1 => (2 * p, 1),
                v => (v, 1),
            })
            .collect();
        let swapped = out.substitute_vars(&targets, &window);
        out = out.sub(&swapped)?;
    }
    Ok(out)
}

fn checked_side(
    side: Side,
    k: usize,
    spec: &SeriesPairSpec,
    target: i64,
    enumerate_signs: bool,
) -> Result<LaurentSeries, LemmaError> {
    if k == 0 || k > MAX_K {
        return Err(LemmaError::BadK(k));
    }
    let window = plan(side, k, spec, target)?;
    let summands = side_summands(side, k, spec, &window, enumerate_signs)?;
    let mut series = sum_products(summands, target, &window)?;
    if !enumerate_signs {
        series = antisymmetrize(series, k)?;
    }
    if let Some(g) = series.certified_grade() {
        if g < target {
            return Err(LemmaError::InsufficientWindow { certified: g, needed: target });
        }
    }
    Ok(series)
}

/// One side of the identity, certified up to grade `target`.
pub fn lemma_side(side: Side, k: usize, spec: &SeriesPairSpec, target: i64) -> Result<LaurentSeries, LemmaError> {
    checked_side(side, k, spec, target, false)
}

/// Same as [`lemma_side`], multiplying out every sign vector separately.
pub fn lemma_side_enumerated(
    side: Side,
    k: usize,
    spec: &SeriesPairSpec,
    target: i64,
) -> Result<LaurentSeries, LemmaError> {
    checked_side(side, k, spec, target, true)
}

/// Outcome of a lemma check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LemmaReport {
    pub holds: bool,
    pub compared: usize,
    pub first_difference: Option<(Vec<i32>, Rational, Rational)>,
}

fn compare(lhs: &LaurentSeries, rhs: &LaurentSeries, target: i64) -> LemmaReport {
    let w = lhs.window();
    let mut keys: Vec<&ExpVec> = lhs
        .terms()
        .chain(rhs.terms())
        .map(|(e, _)| e)
        .filter(|e| w.grade(e) <= target)
        .collect();
    keys.sort();
    keys.dedup();
    let first_difference = lhs
        .first_difference(rhs, target)
        .map(|(e, a, b)| (e.as_slice().to_vec(), a, b));
    LemmaReport {
        holds: first_difference.is_none(),
        compared: keys.len(),
        first_difference,
    }
}

/// Compares both sides coefficientwise on every monomial of grade at most `depth`.
pub fn check_lemma(k: usize, spec: &SeriesPairSpec, depth: i64) -> Result<LemmaReport, LemmaError> {
    let lhs = lemma_side(Side::Lhs, k, spec, depth)?;
    let rhs = lemma_side(Side::Rhs, k, spec, depth)?;
    Ok(compare(&lhs, &rhs, depth))
}

/// Same comparison after setting `x_i = z_i` and `y_i = -z_i`.
pub fn check_lemma_substituted(k: usize, spec: &SeriesPairSpec, depth: i64) -> Result<LemmaReport, LemmaError> {
    let lhs = lemma_side(Side::Lhs, k, spec, depth)?;
    let rhs = lemma_side(Side::Rhs, k, spec, depth)?;
    let cap = lhs.window().grade_cap();
    let zw = Window::graded((1..=k as i32).collect(), cap.unwrap_or(depth));
    let targets: Vec<(usize, i32)> = (0..k).flat_map(|i| [(i, 1), (i, -1)]).collect();
    let lz = lhs.substitute_vars(&targets, &zw);
    let rz = rhs.substitute_vars(&targets, &zw);
    Ok(compare(&lz, &rz, depth))
}

/// The `(s, t)` pair attached to BKP coordinates: `s_{m,n} = 2 a_{m,n}` for
/// `1 <= m < n` and `t_m = a_{m,0}`.
pub fn instantiate_from_affine(b: &AffineB) -> SeriesPairSpec {
    let s = b
        .entries()
        .filter(|&(m, n, _)| m >= 1 && m < n)
        .map(|(m, n, v)| (m, n, int(2) * v));
    let t = b
        .entries()
        .filter(|&(m, n, _)| m >= 1 && n == 0)
        .map(|(m, _, v)| (m, v.clone()));
    SeriesPairSpec::new(s, t).expect("affine coordinates give a valid pair")
}
