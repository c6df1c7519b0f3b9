//! Truncated multivariate Laurent series over exact rationals.
//!
//! A [`LaurentSeries`] is a sparse map from exponent vectors to [`Rational`]
//! coefficients, living inside a [`Window`]. The window is a per-variable box of
//! allowed exponents together with an optional cap on the *grade*
//! `sum_k rank_k * e_k`. Ranks order the expansion region: a variable of lower rank
//! dominates (`|z_a| > |z_b|` when `rank_a < rank_b`), which is the region every
//! directional kernel in [`kernel`] is expanded in. Along that region every kernel
//! tail has strictly increasing grade, so a grade cap turns each infinite expansion
//! into a finite one while keeping a precise account of which coefficients are
//! still exact (see [`Precision`]).

pub mod kernel;

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::rational::Rational;

pub use kernel::{expand_kernel, expand_kernel_directed, KernelKind, RatioNumerator};

/// Largest number of variables a series may carry.
pub const MAX_VARS: usize = 8;

/// Sentinel bounds for an unbounded box side.
pub const NO_LOWER: i32 = i32::MIN / 4;
pub const NO_UPPER: i32 = i32::MAX / 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("variable count mismatch: {left} vs {right}")]
    VariableCountMismatch { left: usize, right: usize },
    #[error("windows use different variable ranks")]
    RankMismatch,
    #[error("at most {MAX_VARS} variables are supported, got {0}")]
    TooManyVariables(usize),
    #[error("divergent pairing: factors expand variables {0} and {1} in opposite regions")]
    DivergentPairing(usize, usize),
    #[error("kernel {0} has no convention when both arguments share a rank")]
    DiagonalKernel(&'static str),
    #[error("exponent vector {0} lies outside the window")]
    OutsideWindow(ExpVec),
    #[error("insufficient truncation: coefficient of {0} is not certified exact")]
    InsufficientTruncation(ExpVec),
    #[error("kernel expansion is unbounded in this window")]
    UnboundedExpansion,
}

/// Exponents of `z_1 .. z_n` for a single monomial.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExpVec {
    len: u8,
    exps: [i32; MAX_VARS],
}

impl ExpVec {
    pub fn new(exps: &[i32]) -> Self {
        assert!(exps.len() <= MAX_VARS, "too many variables");
        let mut out = [0; MAX_VARS];
        out[..exps.len()].copy_from_slice(exps);
        ExpVec {
            len: exps.len() as u8,
            exps: out,
        }
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_VARS, "too many variables");
        ExpVec {
            len: n as u8,
            exps: [0; MAX_VARS],
        }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, var: usize) -> i32 {
        self.as_slice()[var]
    }

    pub fn set(&mut self, var: usize, value: i32) {
        assert!(var < self.len());
        self.exps[var] = value;
    }

    pub fn bump(&mut self, var: usize, delta: i32) {
        assert!(var < self.len());
        self.exps[var] += delta;
    }

    pub fn as_slice(&self) -> &[i32] {
        &self.exps[..self.len()]
    }

    pub fn plus(&self, other: &ExpVec) -> ExpVec {
        debug_assert_eq!(self.len, other.len);
        let mut out = *self;
        for k in 0..self.len() {
            out.exps[k] += other.exps[k];
        }
        out
    }
}

impl fmt::Debug for ExpVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for ExpVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.as_slice().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Allowed exponent region of a series.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    lo: Vec<i32>,
    hi: Vec<i32>,
    ranks: Vec<i32>,
    grade_cap: Option<i64>,
}

impl Window {
    /// Box window with default ranks `1..=n` and no grade cap.
    pub fn boxed(lo: Vec<i32>, hi: Vec<i32>) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(lo.len() <= MAX_VARS, "too many variables");
        let n = lo.len();
        Window {
            lo,
            hi,
            ranks: (1..=n as i32).collect(),
            grade_cap: None,
        }
    }

    /// Same bounds `[lo, hi]` for every one of `n` variables.
    pub fn uniform(n: usize, lo: i32, hi: i32) -> Self {
        Window::boxed(vec![lo; n], vec![hi; n])
    }

    /// Unbounded box with a grade cap; `ranks[k]` is the weight of variable `k`.
    pub fn graded(ranks: Vec<i32>, cap: i64) -> Self {
        assert!(ranks.len() <= MAX_VARS, "too many variables");
        let n = ranks.len();
        Window {
            lo: vec![NO_LOWER; n],
            hi: vec![NO_UPPER; n],
            ranks,
            grade_cap: Some(cap),
        }
    }

    pub fn with_ranks(mut self, ranks: Vec<i32>) -> Self {
        assert_eq!(ranks.len(), self.lo.len());
        self.ranks = ranks;
        self
    }

    pub fn with_grade_cap(mut self, cap: Option<i64>) -> Self {
        self.grade_cap = cap;
        self
    }

    pub fn n_vars(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self, var: usize) -> i32 {
        self.lo[var]
    }

    pub fn hi(&self, var: usize) -> i32 {
        self.hi[var]
    }

    pub fn rank(&self, var: usize) -> i32 {
        self.ranks[var]
    }

    pub fn ranks(&self) -> &[i32] {
        &self.ranks
    }

    pub fn grade_cap(&self) -> Option<i64> {
        self.grade_cap
    }

    pub fn grade(&self, e: &ExpVec) -> i64 {
        e.as_slice()
            .iter()
            .zip(&self.ranks)
            .map(|(&x, &r)| x as i64 * r as i64)
            .sum()
    }

    pub fn in_box(&self, e: &ExpVec) -> bool {
        e.as_slice()
            .iter()
            .enumerate()
            .all(|(k, &x)| self.lo[k] <= x && x <= self.hi[k])
    }

    pub fn contains(&self, e: &ExpVec) -> bool {
        self.in_box(e) && self.grade_cap.is_none_or(|cap| self.grade(e) <= cap)
    }

    /// Intersection of two windows over the same ranks.
    pub fn intersect(&self, other: &Window) -> Result<Window, SeriesError> {
        if self.n_vars() != other.n_vars() {
            return Err(SeriesError::VariableCountMismatch {
                left: self.n_vars(),
                right: other.n_vars(),
            });
        }
        if self.ranks != other.ranks {
            return Err(SeriesError::RankMismatch);
        }
        if self == other {
            return Ok(self.clone());
        }
        let grade_cap = match (self.grade_cap, other.grade_cap) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Ok(Window {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| *a.max(b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| *a.min(b)).collect(),
            ranks: self.ranks.clone(),
            grade_cap,
        })
    }
}

/// Which coefficients of a truncated series are known to be exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    /// Nothing was ever discarded.
    Exact,
    /// Every coefficient of grade `<= g` inside the box is exact.
    UpToGrade(i64),
    /// A box truncation fed into a product; nothing is certified.
    Unknown,
}

impl Precision {
    fn min(self, other: Precision) -> Precision {
        use Precision::*;
        match (self, other) {
            (Unknown, _) | (_, Unknown) => Unknown,
            (Exact, p) | (p, Exact) => p,
            (UpToGrade(a), UpToGrade(b)) => UpToGrade(a.min(b)),
        }
    }

    fn cap_at(self, g: i64) -> Precision {
        self.min(Precision::UpToGrade(g))
    }
}

struct ProductMeta {
    directions: BTreeMap<(u8, u8), u8>,
    precision: Precision,
    truncated: bool,
    box_tail_dropped: bool,
}

const DOM_LOW: u8 = 1;
const DOM_HIGH: u8 = 2;

fn merge_direction_maps(
    mine: &BTreeMap<(u8, u8), u8>,
    theirs: &BTreeMap<(u8, u8), u8>,
    check: bool,
) -> Result<BTreeMap<(u8, u8), u8>, SeriesError> {
    let mut out = mine.clone();
    for (&pair, &bits) in theirs {
        let have = mine.get(&pair).copied().unwrap_or(0);
        if check
            && ((have & DOM_LOW != 0 && bits & DOM_HIGH != 0) || (have & DOM_HIGH != 0 && bits & DOM_LOW != 0))
        {
            return Err(SeriesError::DivergentPairing(pair.0 as usize, pair.1 as usize));
        }
        *out.entry(pair).or_insert(0) |= bits;
    }
    Ok(out)
}

/// Truncated multivariate Laurent series with exact rational coefficients.
#[derive(Clone, Debug)]
pub struct LaurentSeries {
    window: Window,
    terms: BTreeMap<ExpVec, Rational>,
    precision: Precision,
    truncated: bool,
    box_tail_dropped: bool,
    // unordered variable pair (a < b) -> which variable some kernel factor expanded as dominant
    directions: BTreeMap<(u8, u8), u8>,
}

impl PartialEq for LaurentSeries {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl LaurentSeries {
    pub fn zero(window: &Window) -> Self {
        LaurentSeries {
            window: window.clone(),
            terms: BTreeMap::new(),
            precision: Precision::Exact,
            truncated: false,
            box_tail_dropped: false,
            directions: BTreeMap::new(),
        }
    }

    pub fn constant(value: Rational, window: &Window) -> Self {
        let mut s = LaurentSeries::zero(window);
        let e = ExpVec::zeros(window.n_vars());
        if window.contains(&e) {
            s.insert_add(e, value);
        } else if !value.is_zero() {
            s.truncated = true;
            s.precision = s.precision.cap_at(-1);
        }
        s
    }

    /// Single-term series `coeff * z^exps`; zero coefficients give the zero series.
    pub fn monomial(window: &Window, exps: &[i32], coeff: Rational) -> Result<Self, SeriesError> {
        if exps.len() != window.n_vars() {
            return Err(SeriesError::VariableCountMismatch {
                left: exps.len(),
                right: window.n_vars(),
            });
        }
        let e = ExpVec::new(exps);
        if !window.contains(&e) {
            return Err(SeriesError::OutsideWindow(e));
        }
        let mut s = LaurentSeries::zero(window);
        s.insert_add(e, coeff);
        Ok(s)
    }

    /// Builds a series from raw terms; terms outside the window are dropped and flagged.
    pub fn from_terms<I>(window: &Window, terms: I) -> Self
    where
        I: IntoIterator<Item = (ExpVec, Rational)>,
    {
        let mut s = LaurentSeries::zero(window);
        for (e, c) in terms {
            assert_eq!(e.len(), window.n_vars());
            if window.contains(&e) {
                s.insert_add(e, c);
            } else if !c.is_zero() {
                s.note_dropped(&e);
            }
        }
        s
    }

    fn note_dropped(&mut self, e: &ExpVec) {
        self.truncated = true;
        if self.window.in_box(e) {
            let g = self.window.grade(e);
            self.precision = self.precision.cap_at(g - 1);
        } else {
            self.box_tail_dropped = true;
        }
    }

    fn insert_add(&mut self, e: ExpVec, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn n_vars(&self) -> usize {
        self.window.n_vars()
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// True when any term was ever discarded by the window.
    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExpVec, &Rational)> {
        self.terms.iter()
    }

    /// Smallest grade among stored terms.
    pub fn min_grade(&self) -> Option<i64> {
        self.terms.keys().map(|e| self.window.grade(e)).min()
    }

    /// A lower bound on the grade of every term of the untruncated series.
    /// `None` means the series is (certified) zero.
    pub fn grade_lower_bound(&self) -> Option<i64> {
        let stored = self.min_grade();
        match self.precision {
            Precision::Exact => stored,
            Precision::UpToGrade(g) => Some(stored.map_or(g + 1, |m| m.min(g + 1))),
            Precision::Unknown => Some(i64::MIN / 4),
        }
    }

    /// Whether the coefficient at `e` is certified exact.
    pub fn is_certified(&self, e: &ExpVec) -> bool {
        if !self.window.in_box(e) {
            return false;
        }
        match self.precision {
            Precision::Exact => true,
            Precision::UpToGrade(g) => self.window.grade(e) <= g,
            Precision::Unknown => false,
        }
    }

    /// Certified coefficient at `e`.
    pub fn coefficient(&self, e: &ExpVec) -> Result<Rational, SeriesError> {
        if e.len() != self.n_vars() {
            return Err(SeriesError::VariableCountMismatch {
                left: e.len(),
                right: self.n_vars(),
            });
        }
        if !self.window.in_box(e) {
            return Err(SeriesError::OutsideWindow(*e));
        }
        if !self.is_certified(e) {
            return Err(SeriesError::InsufficientTruncation(*e));
        }
        Ok(self.coeff_or_zero(e))
    }

    /// Stored coefficient (zero when absent), with no exactness check.
    pub fn coeff_or_zero(&self, e: &ExpVec) -> Rational {
        self.terms.get(e).cloned().unwrap_or_else(Rational::zero)
    }

    fn check_compatible(&self, other: &LaurentSeries) -> Result<Window, SeriesError> {
        self.window.intersect(&other.window)
    }

    fn merge_directions(&self, other: &LaurentSeries, check: bool) -> Result<BTreeMap<(u8, u8), u8>, SeriesError> {
        merge_direction_maps(&self.directions, &other.directions, check)
    }

    pub fn add(&self, other: &LaurentSeries) -> Result<LaurentSeries, SeriesError> {
        self.combine(other, &Rational::one())
    }

    pub fn sub(&self, other: &LaurentSeries) -> Result<LaurentSeries, SeriesError> {
        self.combine(other, &-Rational::one())
    }

    /// In-place `self += other`; both must share a window.
    pub fn add_assign(&mut self, other: &LaurentSeries) -> Result<(), SeriesError> {
        self.add_scaled_assign(other, &Rational::one())
    }

    pub fn add_scaled_assign(&mut self, other: &LaurentSeries, factor: &Rational) -> Result<(), SeriesError> {
        if self.window != other.window {
            *self = self.combine(other, factor)?;
            return Ok(());
        }
        self.directions = self.merge_directions(other, false)?;
        self.precision = self.precision.min(other.precision);
        self.truncated |= other.truncated;
        self.box_tail_dropped |= other.box_tail_dropped;
        for (e, c) in &other.terms {
            self.insert_add(*e, c * factor);
        }
        Ok(())
    }

    fn combine(&self, other: &LaurentSeries, factor: &Rational) -> Result<LaurentSeries, SeriesError> {
        let window = self.check_compatible(other)?;
        let mut out = LaurentSeries::zero(&window);
        out.directions = self.merge_directions(other, false)?;
        out.precision = self.precision.min(other.precision);
        out.truncated = self.truncated || other.truncated;
        out.box_tail_dropped = self.box_tail_dropped || other.box_tail_dropped;
        for (e, c) in &self.terms {
            if window.contains(e) {
                out.insert_add(*e, c.clone());
            } else {
                out.note_dropped(e);
            }
        }
        for (e, c) in &other.terms {
            if window.contains(e) {
                out.insert_add(*e, c * factor);
            } else {
                out.note_dropped(e);
            }
        }
        Ok(out)
    }

    pub fn neg(&self) -> LaurentSeries {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, factor: &Rational) -> LaurentSeries {
        let mut out = self.clone();
        if factor.is_zero() {
            out.terms.clear();
        } else {
            for c in out.terms.values_mut() {
                *c *= factor;
            }
        }
        out
    }

    /// Cauchy product truncated to the common window.
    ///
    /// Fails with [`SeriesError::DivergentPairing`] when the two factors expand the
    /// same variable pair in opposite regions.
    pub fn mul(&self, other: &LaurentSeries) -> Result<LaurentSeries, SeriesError> {
        self.mul_capped(other, None)
    }

    /// Product with an extra grade cap on top of the window's own cap.
    pub fn mul_capped(&self, other: &LaurentSeries, cap: Option<i64>) -> Result<LaurentSeries, SeriesError> {
        let window = self.check_compatible(other)?;
        let mut out = LaurentSeries::zero(&window);
        let meta = self.product_into(other, &window, cap, &mut out.terms)?;
        out.apply_meta(meta);
        Ok(out)
    }

    /// In-place `self += a * b`, with the product capped at grade `cap`.
    ///
    /// Equivalent to `self.add_assign(&a.mul_capped(b, cap)?)` without building the
    /// intermediate product.
    pub fn add_product_assign(
        &mut self,
        a: &LaurentSeries,
        b: &LaurentSeries,
        cap: Option<i64>,
    ) -> Result<(), SeriesError> {
        let window = a.check_compatible(b)?;
        if window != self.window {
            let p = a.mul_capped(b, cap)?;
            return self.add_assign(&p);
        }
        let meta = a.product_into(b, &window, cap, &mut self.terms)?;
        self.directions = merge_direction_maps(&self.directions, &meta.directions, false)?;
        self.precision = self.precision.min(meta.precision);
        self.truncated |= meta.truncated;
        self.box_tail_dropped |= meta.box_tail_dropped;
        Ok(())
    }

    fn apply_meta(&mut self, meta: ProductMeta) {
        self.directions = meta.directions;
        self.precision = meta.precision;
        self.truncated = meta.truncated;
        self.box_tail_dropped = meta.box_tail_dropped;
    }

    /// Adds the capped product into `sink` and reports its bookkeeping.
    fn product_into(
        &self,
        other: &LaurentSeries,
        window: &Window,
        cap: Option<i64>,
        sink: &mut BTreeMap<ExpVec, Rational>,
    ) -> Result<ProductMeta, SeriesError> {
        let directions = self.merge_directions(other, true)?;
        let mut truncated = self.truncated || other.truncated;
        let mut box_tail_dropped = false;

        // Exactness of the product from the valuation bounds of the factors.
        let mut precision = if self.box_tail_dropped || other.box_tail_dropped {
            Precision::Unknown
        } else {
            let mut p = Precision::Exact;
            if let (Precision::UpToGrade(ea), Some(mb)) = (self.precision, other.grade_lower_bound()) {
                p = p.cap_at(ea + mb);
            }
            if let (Precision::UpToGrade(eb), Some(ma)) = (other.precision, self.grade_lower_bound()) {
                p = p.cap_at(eb + ma);
            }
            if matches!(self.precision, Precision::Unknown) || matches!(other.precision, Precision::Unknown) {
                p = Precision::Unknown;
            }
            p
        };

        // Iterate the right factor in grade order so the grade cap can prune early.
        let mut right: Vec<(i64, &ExpVec, &Rational)> = other
            .terms
            .iter()
            .map(|(e, c)| (window.grade(e), e, c))
            .collect();
        right.sort_by_key(|t| t.0);
        let cap = match (window.grade_cap(), cap) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let mut dropped_grade: Option<i64> = None;
        for (ea, ca) in &self.terms {
            let ga = window.grade(ea);
            for &(gb, eb, cb) in &right {
                if let Some(cap) = cap {
                    if ga + gb > cap {
                        dropped_grade = Some(dropped_grade.map_or(ga + gb, |d: i64| d.min(ga + gb)));
                        break;
                    }
                }
                let e = ea.plus(eb);
                if !window.in_box(&e) {
                    box_tail_dropped = true;
                    continue;
                }
                let prod = ca * cb;
                match sink.entry(e) {
                    std::collections::btree_map::Entry::Vacant(v) => {
                        v.insert(prod);
                    }
                    std::collections::btree_map::Entry::Occupied(mut o) => {
                        *o.get_mut() += prod;
                        if o.get().is_zero() {
                            o.remove();
                        }
                    }
                }
            }
        }
        if let Some(g) = dropped_grade {
            truncated = true;
            precision = precision.cap_at(g - 1);
        }
        if box_tail_dropped {
            truncated = true;
        }
        Ok(ProductMeta {
            directions,
            precision,
            truncated,
            box_tail_dropped,
        })
    }

    /// Drops every term of grade above `cap`; precision is capped accordingly.
    pub fn truncate_grade(&self, cap: i64) -> LaurentSeries {
        let mut out = self.clone();
        let before = out.terms.len();
        out.terms.retain(|e, _| self.window.grade(e) <= cap);
        if out.terms.len() < before {
            out.truncated = true;
            out.precision = out.precision.cap_at(cap);
        }
        out
    }

    /// Multiplies by `coeff * z^exps`.
    pub fn mul_monomial(&self, exps: &[i32], coeff: &Rational) -> LaurentSeries {
        assert_eq!(exps.len(), self.n_vars());
        let shift = ExpVec::new(exps);
        let dg = self.window.grade(&shift);
        let mut out = LaurentSeries::zero(&self.window);
        out.directions = self.directions.clone();
        out.truncated = self.truncated;
        out.box_tail_dropped = self.box_tail_dropped;
        out.precision = match self.precision {
            Precision::UpToGrade(g) => Precision::UpToGrade(g + dg),
            p => p,
        };
        for (e, c) in &self.terms {
            let moved = e.plus(&shift);
            if self.window.contains(&moved) {
                out.insert_add(moved, c * coeff);
            } else {
                out.note_dropped(&moved);
            }
        }
        out
    }

    /// Replaces `z_var` by `sign * z_var`.
    pub fn substitute_sign(&self, var: usize, sign: i32) -> LaurentSeries {
        assert!(sign == 1 || sign == -1);
        let mut out = self.clone();
        if sign == -1 {
            for (e, c) in out.terms.iter_mut() {
                if e.get(var).rem_euclid(2) == 1 {
                    *c = -c.clone();
                }
            }
        }
        out
    }

    /// Maps every variable `k` to `sign_k * z_{target_k}` in a (usually smaller) space.
    ///
    /// Precision survives only if each variable keeps its rank.
    pub fn substitute_vars(&self, targets: &[(usize, i32)], window: &Window) -> LaurentSeries {
        assert_eq!(targets.len(), self.n_vars());
        let rank_preserving = targets
            .iter()
            .enumerate()
            .all(|(k, &(t, _))| self.window.rank(k) == window.rank(t));
        let mut out = LaurentSeries::zero(window);
        out.truncated = self.truncated;
        out.box_tail_dropped = self.box_tail_dropped;
        out.precision = if rank_preserving {
            self.precision
        } else if self.precision == Precision::Exact {
            Precision::Exact
        } else {
            Precision::Unknown
        };
        for (e, c) in &self.terms {
            let mut image = ExpVec::zeros(window.n_vars());
            let mut negate = false;
            for (k, &(t, sign)) in targets.iter().enumerate() {
                let x = e.get(k);
                image.bump(t, x);
                if sign == -1 && x.rem_euclid(2) == 1 {
                    negate = !negate;
                }
            }
            let value = if negate { -c.clone() } else { c.clone() };
            if window.contains(&image) {
                out.insert_add(image, value);
            } else {
                out.note_dropped(&image);
            }
        }
        out
    }

    /// Re-homes the series into `window` (same ranks), dropping what falls outside.
    pub fn restrict(&self, window: &Window) -> Result<LaurentSeries, SeriesError> {
        let w = self.window.intersect(window)?;
        let mut out = LaurentSeries::zero(&w);
        out.directions = self.directions.clone();
        out.precision = self.precision;
        out.truncated = self.truncated;
        out.box_tail_dropped = self.box_tail_dropped;
        for (e, c) in &self.terms {
            if w.contains(e) {
                out.insert_add(*e, c.clone());
            } else {
                out.note_dropped(e);
            }
        }
        Ok(out)
    }

    /// Compares certified coefficients of two series on every stored monomial whose
    /// grade does not exceed `max_grade`. Returns the first mismatch.
    pub fn first_difference(
        &self,
        other: &LaurentSeries,
        max_grade: i64,
    ) -> Option<(ExpVec, Rational, Rational)> {
        let mut keys: Vec<&ExpVec> = self.terms.keys().chain(other.terms.keys()).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .filter(|e| self.window.grade(e) <= max_grade)
            .map(|e| (*e, self.coeff_or_zero(e), other.coeff_or_zero(e)))
            .find(|(_, a, b)| a != b)
    }

    /// Largest grade up to which every coefficient is certified, if bounded.
    pub fn certified_grade(&self) -> Option<i64> {
        match self.precision {
            Precision::Exact => None,
            Precision::UpToGrade(g) => Some(g),
            Precision::Unknown => Some(i64::MIN),
        }
    }

    pub(crate) fn mark_direction(&mut self, a: usize, b: usize, dominant: usize) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let bit = if dominant == lo { DOM_LOW } else { DOM_HIGH };
        *self.directions.entry((lo as u8, hi as u8)).or_insert(0) |= bit;
    }

    pub(crate) fn push_term(&mut self, e: ExpVec, c: Rational) {
        if self.window.contains(&e) {
            self.insert_add(e, c);
        } else if !c.is_zero() {
            self.note_dropped(&e);
        }
    }
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({})", crate::rational::format_rational(c))?;
            for (k, x) in e.as_slice().iter().enumerate() {
                if *x != 0 {
                    write!(f, "*z{}^{}", k + 1, x)?;
                }
            }
        }
        Ok(())
    }
}
