//! Directional expansions of the rational kernels.
//!
//! Every kernel is a rational function of `u = sign_i * z_i` and `v = sign_j * z_j`,
//! expanded in the region where the variable of lower rank dominates.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{ExpVec, LaurentSeries, SeriesError, Window};
use crate::rational::{rat, Rational};

/// Numerator of the ratio kernels, with `b = u` and `a = v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RatioNumerator {
    /// `a / (b + a)`
    Second,
    /// `(b - a) / (b + a)`
    Difference,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// `1 / (u - v)`
    InvDiff,
    /// `1 / (u - v)^2`
    InvDiffSq,
    /// `1 / (u + v)^m`
    InvSum(u32),
    /// `-v / (u + v)`, i.e. `sum_{k>=1} (-1)^k u^-k v^k` when `u` dominates
    GeomTail,
    /// `(u^2 + v^2) / (2 (u^2 - v^2)^2)`
    KpDelta,
    /// `u v (u^2 + v^2) / (2 (u^2 - v^2)^2)`
    BkpDelta,
    /// Ratio kernels; zero when both variables share a rank.
    LemmaRatio(RatioNumerator),
}

impl KernelKind {
    fn name(self) -> &'static str {
        match self {
            KernelKind::InvDiff => "InvDiff",
            KernelKind::InvDiffSq => "InvDiffSq",
            KernelKind::InvSum(_) => "InvSum",
            KernelKind::GeomTail => "GeomTail",
            KernelKind::KpDelta => "KpDelta",
            KernelKind::BkpDelta => "BkpDelta",
            KernelKind::LemmaRatio(_) => "LemmaRatio",
        }
    }
}

/// Expansion of `kind(sign_i z_i, sign_j z_j)` with the lower-rank variable dominant.
pub fn expand_kernel(
    kind: KernelKind,
    var_i: usize,
    var_j: usize,
    sign_i: i32,
    sign_j: i32,
    window: &Window,
) -> Result<LaurentSeries, SeriesError> {
    check_vars(var_i, var_j, window)?;
    let (ri, rj) = (window.rank(var_i), window.rank(var_j));
    if ri == rj {
        return match kind {
            KernelKind::LemmaRatio(_) => Ok(LaurentSeries::zero(window)),
            _ => Err(SeriesError::DiagonalKernel(kind.name())),
        };
    }
    let dominant = if ri < rj { var_i } else { var_j };
    expand_kernel_directed(kind, var_i, var_j, sign_i, sign_j, dominant, window)
}

/// Expansion with an explicitly chosen dominant variable.
///
/// Choosing the higher-rank variable gives the opposite region; such series carry
/// the opposite direction marker, and multiplying them against the standard ones
/// is refused by [`LaurentSeries::mul`].
pub fn expand_kernel_directed(
    kind: KernelKind,
    var_i: usize,
    var_j: usize,
    sign_i: i32,
    sign_j: i32,
    dominant: usize,
    window: &Window,
) -> Result<LaurentSeries, SeriesError> {
    check_vars(var_i, var_j, window)?;
    assert!(sign_i == 1 || sign_j == 1 || sign_i == -1 || sign_j == -1);
    assert!(dominant == var_i || dominant == var_j);
    if var_i == var_j {
        return match kind {
            KernelKind::LemmaRatio(_) => Ok(LaurentSeries::zero(window)),
            _ => Err(SeriesError::DiagonalKernel(kind.name())),
        };
    }
    let mut out = LaurentSeries::zero(window);
    out.mark_direction(var_i, var_j, dominant);
    let other = if dominant == var_i { var_j } else { var_i };
    let (s_d, s_o) = if dominant == var_i {
        (sign_i, sign_j)
    } else {
        (sign_j, sign_i)
    };
    let stream = Stream {
        window,
        dominant,
        other,
    };
    match kind {
        KernelKind::KpDelta | KernelKind::BkpDelta => {
            // sum_n (2n+1)/2 z_d^{-2n-2} z_o^{2n}, times u v for the BKP variant
            let (shift, sign) = if kind == KernelKind::BkpDelta {
                (1, sign_i * sign_j)
            } else {
                (0, 1)
            };
            stream.run(&mut out, |n| {
                let n = n as i64;
                let c = rat(sign as i64 * (2 * n + 1), 2);
                (shift - 2 - 2 * n as i32, shift + 2 * n as i32, c)
            }, 2)?;
        }
        _ => {
            let (numer, sigma, m) = rational_form(kind);
            // (c_d z_d + c_o z_o)^{-m} with c_u = sign_i, c_v = sigma * sign_j
            let (c_d, c_o) = if dominant == var_i {
                (s_d, sigma * s_o)
            } else {
                (sigma * s_d, s_o)
            };
            for &(a, b, ref coeff) in &numer {
                // numerator monomial coeff * u^a v^b
                let (e_d, e_o) = if dominant == var_i { (a, b) } else { (b, a) };
                let num_sign = pow_sign(sign_i, a) * pow_sign(sign_j, b);
                let base = coeff * Rational::from_integer(BigInt::from(num_sign));
                let m = m as i64;
                stream.run(&mut out, |k| {
                    let k = k as i64;
                    // binom(-m, k) = (-1)^k binom(m+k-1, k)
                    let b = binom(m + k - 1, k) * pow_sign(c_d, (m + k) as i32) * pow_sign(c_o, k as i32)
                        * if k % 2 == 0 { 1 } else { -1 };
                    (
                        e_d - m as i32 - k as i32,
                        e_o + k as i32,
                        &base * Rational::from_integer(b),
                    )
                }, 1)?;
            }
        }
    }
    Ok(out)
}

fn check_vars(var_i: usize, var_j: usize, window: &Window) -> Result<(), SeriesError> {
    let n = window.n_vars();
    if var_i >= n || var_j >= n {
        return Err(SeriesError::VariableCountMismatch {
            left: var_i.max(var_j) + 1,
            right: n,
        });
    }
    Ok(())
}

fn pow_sign(sign: i32, exp: i32) -> i32 {
    if sign == -1 && exp.rem_euclid(2) == 1 {
        -1
    } else {
        1
    }
}

fn binom(n: i64, k: i64) -> BigInt {
    let mut acc = BigInt::one();
    for t in 0..k {
        acc = acc * BigInt::from(n - t) / BigInt::from(t + 1);
    }
    acc
}

/// `numerator(u, v) / (u + sigma v)^m`, numerator as `(deg_u, deg_v, coeff)` terms.
fn rational_form(kind: KernelKind) -> (Vec<(i32, i32, Rational)>, i32, u32) {
    let one = Rational::one;
    match kind {
        KernelKind::InvDiff => (vec![(0, 0, one())], -1, 1),
        KernelKind::InvDiffSq => (vec![(0, 0, one())], -1, 2),
        KernelKind::InvSum(m) => (vec![(0, 0, one())], 1, m),
        KernelKind::GeomTail => (vec![(0, 1, -one())], 1, 1),
        KernelKind::LemmaRatio(RatioNumerator::Second) => (vec![(0, 1, one())], 1, 1),
        KernelKind::LemmaRatio(RatioNumerator::Difference) => {
            (vec![(1, 0, one()), (0, 1, -one())], 1, 1)
        }
        KernelKind::KpDelta | KernelKind::BkpDelta => unreachable!("handled directly"),
    }
}

struct Stream<'a> {
    window: &'a Window,
    dominant: usize,
    other: usize,
}

impl Stream<'_> {
    /// Pushes `term(k)` for `k = 0, 1, ...` until the window cuts the stream.
    /// Each step moves the exponents by `-step` on the dominant variable and
    /// `+step` on the other one.
    fn run<F>(&self, out: &mut LaurentSeries, term: F, step: i32) -> Result<(), SeriesError>
    where
        F: Fn(usize) -> (i32, i32, Rational),
    {
        let w = self.window;
        let dg = (w.rank(self.other) - w.rank(self.dominant)) as i64 * step as i64;
        let box_bounded = w.lo(self.dominant) > super::NO_LOWER || w.hi(self.other) < super::NO_UPPER;
        let grade_bounded = w.grade_cap().is_some() && dg > 0;
        if !box_bounded && !grade_bounded {
            return Err(SeriesError::UnboundedExpansion);
        }
        let n = w.n_vars();
        for k in 0.. {
            let (ed, eo, c) = term(k);
            let mut e = ExpVec::zeros(n);
            e.set(self.dominant, ed);
            e.set(self.other, eo);
            let past_box = ed < w.lo(self.dominant) || eo > w.hi(self.other);
            let past_grade = grade_bounded && w.grade(&e) > w.grade_cap().unwrap_or(i64::MAX);
            if c.is_zero() && !(past_box || past_grade) {
                continue;
            }
            out.push_term(e, c);
            if past_box || past_grade {
                break;
            }
        }
        Ok(())
    }
}
