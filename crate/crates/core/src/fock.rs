//! Brute-force semi-infinite wedge model used as ground truth.
//!
//! Half-integers are stored doubled, so `-1/2` is `-1` and `3/2` is `3`. A basis
//! state `z^{a_1} ^ z^{a_2} ^ ...` is recorded by its bubbles (occupied negative
//! positions) and holes (empty positive positions). Charged states are allowed:
//! the neutral-fermion realization mixes charge sectors.
//!
//! Every operator here is homogeneous for the degree
//! `sum(-bubbles) + sum(holes) - charge / 2` (in undoubled units), which is the
//! energy on charge zero. Bogoliubov states are built degree by degree and cut at
//! a requested degree; the Hamiltonians only lower degree, so vacuum coefficients
//! of weight up to the cutoff are exact.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::affine::{bkp_to_kp, AffineB, AffineKP};
use crate::rational::{int, rat, Rational};
use crate::table::NPointTable;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FockError {
    #[error("generator term {0} does not raise the degree")]
    NonRaisingGenerator(String),
    #[error("time series has constant term {0}, expected 1")]
    BadConstantTerm(String),
    #[error("half-integer index {0} (doubled) is not odd")]
    EvenDoubledIndex(i32),
}

/// A wedge basis state, half-integers doubled.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FockBasisState {
    bubbles: Vec<i32>,
    holes: Vec<i32>,
}

impl fmt::Debug for FockBasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|b{:?} h{:?}>", self.bubbles, self.holes)
    }
}

impl FockBasisState {
    pub fn vacuum() -> Self {
        FockBasisState::default()
    }

    /// Builds a state from doubled bubble (negative odd) and hole (positive odd) positions.
    pub fn new(mut bubbles: Vec<i32>, mut holes: Vec<i32>) -> Result<Self, FockError> {
        for &p in bubbles.iter().chain(&holes) {
            if p.rem_euclid(2) != 1 {
                return Err(FockError::EvenDoubledIndex(p));
            }
        }
        assert!(bubbles.iter().all(|&b| b < 0) && holes.iter().all(|&h| h > 0));
        bubbles.sort_unstable();
        bubbles.dedup();
        holes.sort_unstable();
        holes.dedup();
        Ok(FockBasisState { bubbles, holes })
    }

    pub fn bubbles(&self) -> &[i32] {
        &self.bubbles
    }

    pub fn holes(&self) -> &[i32] {
        &self.holes
    }

    pub fn charge(&self) -> i64 {
        self.bubbles.len() as i64 - self.holes.len() as i64
    }

    /// `sum(-bubbles) + sum(holes)` in undoubled units, times two.
    pub fn doubled_energy(&self) -> i64 {
        self.bubbles.iter().map(|&b| -b as i64).sum::<i64>() + self.holes.iter().map(|&h| h as i64).sum::<i64>()
    }

    pub fn degree(&self) -> i64 {
        (self.doubled_energy() - self.charge()) / 2
    }

    /// Largest |position| among bubbles and holes (doubled), 0 for the vacuum.
    pub fn reach(&self) -> i32 {
        self.bubbles
            .iter()
            .map(|b| -b)
            .chain(self.holes.iter().copied())
            .max()
            .unwrap_or(0)
    }

    pub fn is_occupied(&self, p: i32) -> bool {
        if p < 0 {
            self.bubbles.binary_search(&p).is_ok()
        } else {
            self.holes.binary_search(&p).is_err()
        }
    }

    /// Number of occupied positions strictly below `p`.
    fn occupied_below(&self, p: i32) -> usize {
        let below = |v: &[i32]| v.partition_point(|&x| x < p);
        if p < 0 {
            below(&self.bubbles)
        } else {
            self.bubbles.len() + ((p - 1) / 2) as usize - below(&self.holes)
        }
    }

    fn fill(&mut self, p: i32) {
        if p < 0 {
            let at = self.bubbles.partition_point(|&x| x < p);
            self.bubbles.insert(at, p);
        } else {
            let at = self.holes.binary_search(&p).expect("filling an empty position");
            self.holes.remove(at);
        }
    }

    fn empty(&mut self, p: i32) {
        if p < 0 {
            let at = self.bubbles.binary_search(&p).expect("emptying an occupied position");
            self.bubbles.remove(at);
        } else {
            let at = self.holes.partition_point(|&x| x < p);
            self.holes.insert(at, p);
        }
    }
}

/// A single charged fermion, index doubled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fermion {
    /// `psi_r`: wedge `z^r` in front.
    Psi(i32),
    /// `psi*_r`: remove `z^{-r}`.
    PsiStar(i32),
}

impl Fermion {
    /// Change of the doubled degree caused by this operator.
    fn doubled_shift(self) -> i64 {
        match self {
            Fermion::Psi(r) => -(r as i64) - 1,
            Fermion::PsiStar(s) => -(s as i64) + 1,
        }
    }

    /// Applies the operator to a basis state, returning the sign and the image.
    pub fn apply(self, state: &FockBasisState) -> Option<(bool, FockBasisState)> {
        match self {
            Fermion::Psi(r) => {
                if state.is_occupied(r) {
                    return None;
                }
                let negative = state.occupied_below(r) % 2 == 1;
                let mut out = state.clone();
                out.fill(r);
                Some((negative, out))
            }
            Fermion::PsiStar(s) => {
                let p = -s;
                if !state.is_occupied(p) {
                    return None;
                }
                let negative = state.occupied_below(p) % 2 == 1;
                let mut out = state.clone();
                out.empty(p);
                Some((negative, out))
            }
        }
    }
}

/// Finite rational combination of basis states, cut at a degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockVector {
    terms: BTreeMap<FockBasisState, Rational>,
    cutoff: i64,
    truncated: bool,
}

impl FockVector {
    pub fn zero(cutoff: i64) -> Self {
        FockVector {
            terms: BTreeMap::new(),
            cutoff,
            truncated: false,
        }
    }

    pub fn vacuum(cutoff: i64) -> Self {
        let mut v = FockVector::zero(cutoff);
        v.add_term(FockBasisState::vacuum(), Rational::one());
        v
    }

    pub fn basis(state: FockBasisState, cutoff: i64) -> Self {
        let mut v = FockVector::zero(cutoff);
        v.add_term(state, Rational::one());
        v
    }

    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    /// Whether a component above the cutoff was ever dropped.
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

    pub fn terms(&self) -> impl Iterator<Item = (&FockBasisState, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, state: &FockBasisState) -> Rational {
        self.terms.get(state).cloned().unwrap_or_else(Rational::zero)
    }

    /// `<0|v>`.
    pub fn vacuum_coefficient(&self) -> Rational {
        self.coefficient(&FockBasisState::vacuum())
    }

    pub fn add_term(&mut self, state: FockBasisState, c: Rational) {
        if c.is_zero() {
            return;
        }
        if state.degree() > self.cutoff {
            self.truncated = true;
            return;
        }
        match self.terms.entry(state) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &FockVector, factor: &Rational) {
        self.truncated |= other.truncated;
        for (s, c) in &other.terms {
            self.add_term(s.clone(), c * factor);
        }
    }

    /// Keeps only components of degree at most `max_degree`.
    pub fn retain_degree(&mut self, max_degree: i64) {
        self.terms.retain(|s, _| s.degree() <= max_degree);
    }

    /// Same vector restricted to a lower cutoff.
    pub fn with_cutoff(&self, cutoff: i64) -> FockVector {
        let mut out = FockVector::zero(cutoff);
        out.truncated = self.truncated;
        for (s, c) in &self.terms {
            out.add_term(s.clone(), c.clone());
        }
        out
    }

    fn reach(&self) -> i32 {
        self.terms.keys().map(FockBasisState::reach).max().unwrap_or(0)
    }

    /// Applies `psi_r`.
    pub fn apply_psi(&self, r: i32) -> FockVector {
        self.apply_string(&Rational::one(), &[Fermion::Psi(r)])
    }

    /// Applies `psi*_r`.
    pub fn apply_psi_star(&self, r: i32) -> FockVector {
        self.apply_string(&Rational::one(), &[Fermion::PsiStar(r)])
    }

    /// Applies `coeff * ops[0] ops[1] ...` (rightmost first).
    pub fn apply_string(&self, coeff: &Rational, ops: &[Fermion]) -> FockVector {
        let mut out = FockVector::zero(self.cutoff);
        out.truncated = self.truncated;
        self.accumulate_string(coeff, ops, &mut out);
        out
    }

    fn accumulate_string(&self, coeff: &Rational, ops: &[Fermion], out: &mut FockVector) {
        'states: for (state, c) in &self.terms {
            let mut cur = state.clone();
            let mut negative = false;
            for op in ops.iter().rev() {
                match op.apply(&cur) {
                    Some((neg, next)) => {
                        negative ^= neg;
                        cur = next;
                    }
                    None => continue 'states,
                }
            }
            let v = c * coeff;
            out.add_term(cur, if negative { -v } else { v });
        }
    }
}

/// A quadratic fermion operator with a rational coefficient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticOp {
    pub kind: QuadKind,
    pub coeff: Rational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadKind {
    /// `psi_r psi*_s`, indices doubled.
    PsiPsiStar(i32, i32),
    /// `phi_m phi_n`.
    PhiPhi(i64, i64),
    /// `phihat_m phihat_n`, the image of `phi_m phi_n` under `phi -> phihat`.
    HatPhiHatPhi(i64, i64),
    /// KP Hamiltonian `H_k = sum_r psi_{-r} psi*_{r+k}`, `k >= 1`.
    HKp(i64),
    /// Neutral Hamiltonian `H^B_k = 1/2 sum_i (-1)^{i-1} phi_i phi_{-i-k}`, `k >= 1`.
    HB(i64),
}

impl QuadraticOp {
    pub fn new(kind: QuadKind, coeff: Rational) -> Self {
        QuadraticOp { kind, coeff }
    }

    /// Degree change of every term of the operator.
    pub fn degree_shift(&self) -> i64 {
        match self.kind {
            QuadKind::PsiPsiStar(r, s) => {
                (Fermion::Psi(r).doubled_shift() + Fermion::PsiStar(s).doubled_shift()) / 2
            }
            QuadKind::PhiPhi(m, n) | QuadKind::HatPhiHatPhi(m, n) => m + n,
            QuadKind::HKp(k) | QuadKind::HB(k) => -k,
        }
    }

    /// Fermion strings `(coeff, [left, right])` making up the operator on states
    /// whose bubbles and holes lie within `reach` (doubled).
    fn strings(&self, reach: i32) -> Vec<(Rational, [Fermion; 2])> {
        let c = &self.coeff;
        match self.kind {
            QuadKind::PsiPsiStar(r, s) => vec![(c.clone(), [Fermion::Psi(r), Fermion::PsiStar(s)])],
            QuadKind::PhiPhi(m, n) => phi_pair(m, n, false)
                .into_iter()
                .map(|(k, ops)| (c * k, ops))
                .collect(),
            QuadKind::HatPhiHatPhi(m, n) => phi_pair(m, n, true)
                .into_iter()
                .map(|(k, ops)| (c * k, ops))
                .collect(),
            QuadKind::HKp(k) => {
                assert!(k >= 1, "only positive flows are implemented");
                // psi_{-r} psi*_{r+k} moves an occupied position p = -r-k up to p+k
                let k2 = 2 * k as i32;
                let mut out = Vec::new();
                let mut p = -reach - 2;
                while p <= reach + 2 {
                    out.push((c.clone(), [Fermion::Psi(p + k2), Fermion::PsiStar(-p)]));
                    p += 2;
                }
                out
            }
            QuadKind::HB(k) => {
                assert!(k >= 1, "only positive flows are implemented");
                let bound = (reach as i64 + 1) / 2 + k + 2;
                let mut out = Vec::new();
                for i in -bound..=bound {
                    let sign = if (i - 1).rem_euclid(2) == 0 { rat(1, 2) } else { rat(-1, 2) };
                    for (w, ops) in phi_pair(i, -i - k, false) {
                        out.push((c * &sign * w, ops));
                    }
                }
                out
            }
        }
    }
}

/// Components of `phi_m` (or `phihat_m` without its `i`) as `(sign, fermion)`.
fn phi_parts(m: i64, hat: bool) -> [(i64, Fermion); 2] {
    let parity = if m.rem_euclid(2) == 0 { 1 } else { -1 };
    let star = if hat { -parity } else { parity };
    [
        (1, Fermion::Psi((-2 * m - 1) as i32)),
        (star, Fermion::PsiStar((-2 * m + 1) as i32)),
    ]
}

/// `phi_m phi_n` (or `phihat_m phihat_n`) as four fermion strings; the `1/sqrt 2`
/// factors combine to `1/2`, and for the hatted pair the two `i` give `-1`.
fn phi_pair(m: i64, n: i64, hat: bool) -> Vec<(Rational, [Fermion; 2])> {
    let overall = if hat { rat(-1, 2) } else { rat(1, 2) };
    let mut out = Vec::with_capacity(4);
    for (sa, a) in phi_parts(m, hat) {
        for (sb, b) in phi_parts(n, hat) {
            out.push((&overall * int(sa * sb), [a, b]));
        }
    }
    out
}

/// Applies a quadratic operator exactly; components above the cutoff are dropped.
pub fn apply_quadratic(op: &QuadraticOp, v: &FockVector) -> FockVector {
    let mut out = FockVector::zero(v.cutoff);
    out.truncated = v.truncated;
    for (c, ops) in op.strings(v.reach()) {
        v.accumulate_string(&c, &ops, &mut out);
    }
    out
}

fn apply_sum(ops: &[QuadraticOp], v: &FockVector) -> FockVector {
    let mut out = FockVector::zero(v.cutoff);
    out.truncated = v.truncated;
    let reach = v.reach();
    for op in ops {
        for (c, f) in op.strings(reach) {
            v.accumulate_string(&c, &f, &mut out);
        }
    }
    out
}

/// `exp(G)|0>` cut at `cutoff`, for a generator `G` whose terms all raise the degree.
pub fn exp_bilinear_vacuum(generator: &[QuadraticOp], cutoff: i64) -> Result<FockVector, FockError> {
    for op in generator {
        if op.degree_shift() < 1 {
            return Err(FockError::NonRaisingGenerator(format!("{:?}", op.kind)));
        }
    }
    let mut total = FockVector::vacuum(cutoff);
    let mut term = FockVector::vacuum(cutoff);
    let mut k = 1i64;
    while !term.is_zero() {
        term = apply_sum(generator, &term);
        let inv = rat(1, k);
        for c in term.terms.values_mut() {
            *c *= &inv;
        }
        total.add_scaled(&term, &Rational::one());
        k += 1;
    }
    Ok(total)
}

/// `A^BKP = sum a_{n,m} phi_m phi_n`.
pub fn bkp_generator(b: &AffineB) -> Vec<QuadraticOp> {
    b.entries()
        .map(|(n, m, v)| QuadraticOp::new(QuadKind::PhiPhi(m as i64, n as i64), v.clone()))
        .collect()
}

/// `A^BKP + kappa(A^BKP)`, with `kappa(phi_m) = phihat_m`.
pub fn doubled_generator(b: &AffineB) -> Vec<QuadraticOp> {
    let mut out = bkp_generator(b);
    out.extend(
        b.entries()
            .map(|(n, m, v)| QuadraticOp::new(QuadKind::HatPhiHatPhi(m as i64, n as i64), v.clone())),
    );
    out
}

/// `A = sum a^KP_{n,m} psi_{-m-1/2} psi*_{-n-1/2}`.
pub fn kp_generator(kp: &AffineKP) -> Vec<QuadraticOp> {
    kp.entries()
        .map(|(n, m, v)| {
            QuadraticOp::new(
                QuadKind::PsiPsiStar(-2 * m as i32 - 1, -2 * n as i32 - 1),
                v.clone(),
            )
        })
        .collect()
}

/// A truncated power series in the times, monomials as sorted index multisets.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TimeSeries {
    terms: BTreeMap<Vec<u32>, Rational>,
    max_weight: u32,
}

fn weight(mono: &[u32]) -> u32 {
    mono.iter().sum()
}

impl TimeSeries {
    pub fn new(max_weight: u32) -> Self {
        TimeSeries {
            terms: BTreeMap::new(),
            max_weight,
        }
    }

    pub fn max_weight(&self) -> u32 {
        self.max_weight
    }

    pub fn insert(&mut self, mut mono: Vec<u32>, c: Rational) {
        mono.sort_unstable();
        if weight(&mono) > self.max_weight || c.is_zero() {
            return;
        }
        let slot = self.terms.entry(mono.clone()).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&mono);
        }
    }

    pub fn coefficient(&self, mono: &[u32]) -> Rational {
        let mut key = mono.to_vec();
        key.sort_unstable();
        self.terms.get(&key).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &Rational)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn mul(&self, other: &TimeSeries) -> TimeSeries {
        let cap = self.max_weight.min(other.max_weight);
        let mut out = TimeSeries::new(cap);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if weight(a) + weight(b) > cap {
                    continue;
                }
                let mut m = a.clone();
                m.extend_from_slice(b);
                out.insert(m, ca * cb);
            }
        }
        out
    }

    /// Keeps monomials built only from the given time indices.
    pub fn restrict_to(&self, allowed: impl Fn(u32) -> bool) -> TimeSeries {
        let mut out = TimeSeries::new(self.max_weight);
        for (k, v) in &self.terms {
            if k.iter().all(|&i| allowed(i)) {
                out.insert(k.clone(), v.clone());
            }
        }
        out
    }

    /// Formal logarithm of a series with constant term 1.
    pub fn log(&self) -> Result<TimeSeries, FockError> {
        let c0 = self.coefficient(&[]);
        if !c0.is_one() {
            return Err(FockError::BadConstantTerm(crate::rational::format_rational(&c0)));
        }
        let mut u = self.clone();
        u.terms.remove(&Vec::new());
        let mut out = TimeSeries::new(self.max_weight);
        let mut power = u.clone();
        for k in 1..=self.max_weight.max(1) as i64 {
            if power.terms.is_empty() {
                break;
            }
            let sign = if k % 2 == 1 { rat(1, k) } else { rat(-1, k) };
            for (m, c) in &power.terms {
                out.insert(m.clone(), c * &sign);
            }
            power = power.mul(&u);
        }
        Ok(out)
    }
}

/// Which Hamiltonians drive the flows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flows {
    Kp,
    Bkp,
}

/// Coefficients of `<0| exp(sum t_i H_i) |v>` over the given times, up to `max_weight`.
pub fn tau_coefficients(state: &FockVector, flows: Flows, times: &[u32], max_weight: u32) -> TimeSeries {
    let mut out = TimeSeries::new(max_weight);
    let mut times = times.to_vec();
    times.sort_unstable();
    times.dedup();
    let mut start = state.clone();
    start.retain_degree(max_weight as i64);
    let mut mono = Vec::new();
    walk(&start, flows, &times, 0, max_weight as i64, &mut mono, &Rational::one(), 0, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn walk(
    v: &FockVector,
    flows: Flows,
    times: &[u32],
    from: usize,
    budget: i64,
    mono: &mut Vec<u32>,
    inv_fact: &Rational,
    run: i64,
    out: &mut TimeSeries,
) {
    let c = v.vacuum_coefficient();
    if !c.is_zero() {
        out.insert(mono.clone(), c * inv_fact);
    }
    for (pos, &t) in times.iter().enumerate().skip(from) {
        let t = t as i64;
        if t > budget {
            break;
        }
        let kind = match flows {
            Flows::Kp => QuadKind::HKp(t),
            Flows::Bkp => QuadKind::HB(t),
        };
        let mut next = apply_quadratic(&QuadraticOp::new(kind, Rational::one()), v);
        next.retain_degree(budget - t);
        if next.is_zero() {
            continue;
        }
        let repeat = if mono.last() == Some(&(t as u32)) { run + 1 } else { 1 };
        mono.push(t as u32);
        let f = inv_fact * rat(1, repeat);
        walk(&next, flows, times, pos, budget - t, mono, &f, repeat, out);
        mono.pop();
    }
}

/// `d^n F / dt_{i_1}...dt_{i_n}` at the origin, read off the coefficients of `F`.
pub fn derivative_at(f: &TimeSeries, indices: &[u32]) -> Rational {
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    let mut mult = int(1);
    let mut run = 0i64;
    for (k, i) in sorted.iter().enumerate() {
        run = if k > 0 && sorted[k - 1] == *i { run + 1 } else { 1 };
        mult *= int(run);
    }
    f.coefficient(&sorted) * mult
}

/// Table of `d^n F / dt_{i_1}...dt_{i_n}` at the origin over odd indices.
pub fn npoint_from_f(f: &TimeSeries, n: usize, max_weight: u32) -> NPointTable {
    NPointTable::from_fn(n, max_weight, |idx| derivative_at(f, idx))
}

fn odd_times(max_weight: u32) -> Vec<u32> {
    (1..=max_weight).filter(|i| i % 2 == 1).collect()
}

/// `tau^BKP` coefficients over the odd times.
pub fn bkp_tau(b: &AffineB, max_weight: u32) -> Result<TimeSeries, FockError> {
    let state = exp_bilinear_vacuum(&bkp_generator(b), max_weight as i64)?;
    Ok(tau_coefficients(&state, Flows::Bkp, &odd_times(max_weight), max_weight))
}

/// Oracle table of the BKP connected n-point function.
pub fn oracle_npoint(b: &AffineB, n: usize, max_weight: u32) -> Result<NPointTable, FockError> {
    oracle_npoint_with_cutoff(b, n, max_weight, max_weight as i64)
}

/// Same as [`oracle_npoint`], building the state up to degree `cutoff`.
pub fn oracle_npoint_with_cutoff(
    b: &AffineB,
    n: usize,
    max_weight: u32,
    cutoff: i64,
) -> Result<NPointTable, FockError> {
    let state = exp_bilinear_vacuum(&bkp_generator(b), cutoff)?;
    let f = tau_coefficients(&state, Flows::Bkp, &odd_times(max_weight), max_weight).log()?;
    Ok(npoint_from_f(&f, n, max_weight))
}

/// `F^KP = log tau^KP` over all times up to `max_weight`.
pub fn kp_free_energy(kp: &AffineKP, max_weight: u32) -> Result<TimeSeries, FockError> {
    let state = exp_bilinear_vacuum(&kp_generator(kp), max_weight as i64)?;
    let times: Vec<u32> = (1..=max_weight).collect();
    tau_coefficients(&state, Flows::Kp, &times, max_weight).log()
}

/// Outcome of an oracle check, with the first mismatch if any.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleReport {
    pub holds: bool,
    pub compared: usize,
    pub detail: Option<String>,
}

/// `tau^KP(t_1, 0, t_3, 0, ...)` on the doubled generator against `(tau^BKP)^2`.
pub fn check_square_relation(b: &AffineB, max_weight: u32) -> Result<OracleReport, FockError> {
    let cutoff = max_weight as i64;
    let odd = odd_times(max_weight);
    let kp_state = exp_bilinear_vacuum(&doubled_generator(b), cutoff)?;
    let lhs = tau_coefficients(&kp_state, Flows::Kp, &odd, max_weight);
    let tau_b = bkp_tau(b, max_weight)?;
    let rhs = tau_b.mul(&tau_b);
    let mut keys: Vec<&[u32]> = lhs.terms().chain(rhs.terms()).map(|(k, _)| k).collect();
    keys.sort();
    keys.dedup();
    let detail = keys.iter().find_map(|k| {
        let (a, c) = (lhs.coefficient(k), rhs.coefficient(k));
        (a != c).then(|| format!("monomial {k:?}: KP side {a}, squared BKP side {c}"))
    });
    Ok(OracleReport {
        holds: detail.is_none(),
        compared: keys.len(),
        detail,
    })
}

/// Compares `exp(A^KP)|0>`, built from the converted coordinates, with
/// `exp(A^BKP + kappa(A^BKP))|0>` as vectors up to `cutoff`.
pub fn check_state_equality(b: &AffineB, cutoff: i64) -> Result<OracleReport, FockError> {
    let kp = bkp_to_kp(b);
    let lhs = exp_bilinear_vacuum(&kp_generator(&kp), cutoff)?;
    let rhs = exp_bilinear_vacuum(&doubled_generator(b), cutoff)?;
    let mut states: Vec<&FockBasisState> = lhs.terms.keys().chain(rhs.terms.keys()).collect();
    states.sort();
    states.dedup();
    let detail = states.iter().find_map(|s| {
        let (a, c) = (lhs.coefficient(s), rhs.coefficient(s));
        (a != c).then(|| format!("state {s:?}: converted {a}, doubled {c}"))
    });
    Ok(OracleReport {
        holds: detail.is_none(),
        compared: states.len(),
        detail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::validate_b;

    fn states_up_to(max_degree: i64) -> Vec<FockBasisState> {
        // all states with bubbles/holes in a small range and degree <= max_degree
        let positions: Vec<i32> = (0..=max_degree as i32).map(|k| 2 * k + 1).collect();
        let mut out = Vec::new();
        let n = positions.len();
        for bmask in 0u32..(1 << n) {
            for hmask in 0u32..(1 << n) {
                let bubbles = (0..n).filter(|i| bmask >> i & 1 == 1).map(|i| -positions[i]).collect();
                let holes = (0..n).filter(|i| hmask >> i & 1 == 1).map(|i| positions[i]).collect();
                let s = FockBasisState::new(bubbles, holes).unwrap();
                if s.degree() <= max_degree && s.degree() >= 0 {
                    out.push(s);
                }
            }
        }
        out
    }

    #[test]
    fn psi_examples() {
        let vac = FockVector::vacuum(10);
        let v = vac.apply_psi(-1);
        let s = FockBasisState::new(vec![-1], vec![]).unwrap();
        assert_eq!(v.coefficient(&s), int(1));
        assert!(vac.apply_psi_star(1).is_zero());
        assert_eq!(v.apply_psi_star(1), FockVector::vacuum(10));
        // psi*_{-1/2} removes z^{1/2}, past the new bubble
        let hole = FockBasisState::new(vec![-1], vec![1]).unwrap();
        assert_eq!(v.apply_psi_star(-1).coefficient(&hole), int(-1));
    }

    #[test]
    fn anticommutators() {
        for s in states_up_to(4) {
            let v = FockVector::basis(s.clone(), 40);
            for r in (-9..=9).step_by(2) {
                for t in (-9..=9).step_by(2) {
                    let mut sum = v.apply_string(&Rational::one(), &[Fermion::Psi(r), Fermion::PsiStar(t)]);
                    sum.add_scaled(&v.apply_string(&Rational::one(), &[Fermion::PsiStar(t), Fermion::Psi(r)]), &Rational::one());
                    let expect = if r + t == 0 { v.clone() } else { FockVector::zero(40) };
                    assert_eq!(sum, expect, "r={r} t={t} on {s:?}");
                    let mut pp = v.apply_string(&Rational::one(), &[Fermion::Psi(r), Fermion::Psi(t)]);
                    pp.add_scaled(&v.apply_string(&Rational::one(), &[Fermion::Psi(t), Fermion::Psi(r)]), &Rational::one());
                    assert!(pp.is_zero());
                }
            }
        }
    }

    #[test]
    fn neutral_anticommutators() {
        for s in states_up_to(3) {
            let v = FockVector::basis(s, 40);
            for m in -3i64..=3 {
                for n in -3i64..=3 {
                    let mut sum = apply_quadratic(&QuadraticOp::new(QuadKind::PhiPhi(m, n), int(1)), &v);
                    sum.add_scaled(&apply_quadratic(&QuadraticOp::new(QuadKind::PhiPhi(n, m), int(1)), &v), &Rational::one());
                    let mut expect = FockVector::zero(40);
                    if m + n == 0 {
                        expect.add_scaled(&v, &if m % 2 == 0 { int(1) } else { int(-1) });
                    }
                    assert_eq!(sum, expect);
                }
            }
        }
    }

    #[test]
    fn degree_bookkeeping() {
        for s in states_up_to(3) {
            let d = s.degree();
            let v = FockVector::basis(s, 40);
            for (kind, shift) in [
                (QuadKind::PhiPhi(0, 1), 1),
                (QuadKind::PhiPhi(2, 1), 3),
                (QuadKind::HatPhiHatPhi(1, 3), 4),
                (QuadKind::HKp(1), -1),
                (QuadKind::HKp(2), -2),
                (QuadKind::HB(1), -1),
                (QuadKind::HB(3), -3),
            ] {
                let out = apply_quadratic(&QuadraticOp::new(kind, int(1)), &v);
                assert!(out.terms().all(|(t, _)| t.degree() == d + shift), "{kind:?}");
            }
        }
    }

    #[test]
    fn phi_pair_on_vacuum() {
        let v = apply_quadratic(&QuadraticOp::new(QuadKind::PhiPhi(0, 1), int(1)), &FockVector::vacuum(10));
        assert_eq!(v.len(), 2);
        let charged = FockBasisState::new(vec![-3, -1], vec![]).unwrap();
        let neutral = FockBasisState::new(vec![-1], vec![1]).unwrap();
        assert_eq!(v.coefficient(&charged), rat(-1, 2));
        assert_eq!(v.coefficient(&neutral), rat(-1, 2));
        assert!(v.terms().all(|(s, _)| s.degree() == 1));
        let h = apply_quadratic(&QuadraticOp::new(QuadKind::HB(1), int(1)), &v);
        assert_eq!(h.vacuum_coefficient(), rat(-1, 2));
        assert!(apply_quadratic(&QuadraticOp::new(QuadKind::HKp(1), int(1)), &FockVector::vacuum(10)).is_zero());
    }

    #[test]
    fn exponential_needs_raising_terms() {
        assert_eq!(exp_bilinear_vacuum(&[], 6).unwrap(), FockVector::vacuum(6));
        let bad = QuadraticOp::new(QuadKind::HKp(1), int(1));
        assert!(matches!(exp_bilinear_vacuum(&[bad], 6), Err(FockError::NonRaisingGenerator(_))));
        let gen = [QuadraticOp::new(QuadKind::PhiPhi(0, 1), int(2))];
        let v = exp_bilinear_vacuum(&gen, 6).unwrap();
        // (phi_0 phi_1)^2 = 0, so the series stops after the linear term
        assert_eq!(v.vacuum_coefficient(), int(1));
        assert_eq!(v.len(), 3);
        assert!(v.terms().all(|(s, _)| s.degree() <= 1));
        let tau = tau_coefficients(&v, Flows::Bkp, &[1, 3, 5], 6);
        assert_eq!(tau.coefficient(&[1]), int(-1));
        assert_eq!(tau.terms().count(), 2);
    }

    #[test]
    fn kp_first_coefficient() {
        let kp = AffineKP::from_entries([(0, 0, rat(3, 5))]);
        let state = exp_bilinear_vacuum(&kp_generator(&kp), 4).unwrap();
        let tau = tau_coefficients(&state, Flows::Kp, &[1, 2, 3, 4], 4);
        assert_eq!(tau.coefficient(&[]), int(1));
        assert_eq!(tau.coefficient(&[1]), rat(3, 5));
    }

    #[test]
    fn one_point_value() {
        let b = validate_b([(1, 0, int(1))]).unwrap();
        let tau = bkp_tau(&b, 4).unwrap();
        assert_eq!(tau.coefficient(&[1]), int(-1));
        let table = oracle_npoint(&b, 1, 5).unwrap();
        assert_eq!(table.get(&[1]), Some(&int(-1)));
        assert_eq!(table.get(&[3]), Some(&int(0)));
    }

    #[test]
    fn log_of_exponential() {
        let mut s = TimeSeries::new(4);
        s.insert(vec![], int(1));
        s.insert(vec![1], int(-1));
        s.insert(vec![1, 1], rat(1, 2));
        let f = s.log().unwrap();
        assert_eq!(f.coefficient(&[1]), int(-1));
        assert_eq!(f.coefficient(&[1, 1]), int(0));
        let mut bad = TimeSeries::new(2);
        bad.insert(vec![], int(2));
        assert!(bad.log().is_err());
        assert!(TimeSeries::new(3).log().is_err());
    }

    #[test]
    fn mixed_derivative_factor() {
        let mut f = TimeSeries::new(6);
        f.insert(vec![1, 3], rat(2, 3));
        f.insert(vec![1, 1], rat(5, 2));
        let t = npoint_from_f(&f, 2, 6);
        assert_eq!(t.get(&[1, 3]), Some(&rat(2, 3)));
        assert_eq!(t.get(&[3, 1]), Some(&rat(2, 3)));
        assert_eq!(t.get(&[1, 1]), Some(&int(5)));
    }

    #[test]
    fn square_and_state_examples() {
        let e = AffineB::empty();
        assert!(check_square_relation(&e, 6).unwrap().holds);
        assert!(check_state_equality(&e, 6).unwrap().holds);
        let b = validate_b([(1, 0, int(1))]).unwrap();
        let r = check_square_relation(&b, 6).unwrap();
        assert!(r.holds, "{:?}", r.detail);
        let r = check_state_equality(&b, 8).unwrap();
        assert!(r.holds, "{:?}", r.detail);
    }
}
