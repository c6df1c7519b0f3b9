//! Affine coordinates in the BKP and KP senses and their generating series.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde_json::Value;
use thiserror::Error;

use crate::rational::{format_rational, int, parse_rational, rat, sign_power, Rational};
use crate::series::{expand_kernel, KernelKind, LaurentSeries, SeriesError, Window};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AffineError {
    #[error("nonzero diagonal entry a[{0},{0}]")]
    NonzeroDiagonal(u32),
    #[error("antisymmetry conflict between a[{0},{1}] and a[{1},{0}]")]
    AntisymmetryConflict(u32, u32),
    #[error("entry a[{0},{1}] given twice with different values")]
    DuplicateEntry(u32, u32),
    #[error("coordinate file: {0}")]
    Format(String),
}

/// Antisymmetric BKP affine coordinates `a_{n,m} = -a_{m,n}`, stored in full.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AffineB {
    entries: BTreeMap<(u32, u32), Rational>,
}

/// KP affine coordinates `a^KP_{m,n}`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AffineKP {
    entries: BTreeMap<(u32, u32), Rational>,
}

/// Builds an [`AffineB`] from either triangle, completing it antisymmetrically.
pub fn validate_b<I>(raw: I) -> Result<AffineB, AffineError>
where
    I: IntoIterator<Item = (u32, u32, Rational)>,
{
    let mut given: BTreeMap<(u32, u32), Rational> = BTreeMap::new();
    for (n, m, v) in raw {
        if n == m {
            if !v.is_zero() {
                return Err(AffineError::NonzeroDiagonal(n));
            }
            continue;
        }
        if let Some(prev) = given.get(&(n, m)) {
            if *prev != v {
                return Err(AffineError::DuplicateEntry(n, m));
            }
        }
        given.insert((n, m), v);
    }
    let mut entries = BTreeMap::new();
    for (&(n, m), v) in &given {
        if let Some(mirror) = given.get(&(m, n)) {
            if *mirror != -v.clone() {
                return Err(AffineError::AntisymmetryConflict(n.min(m), n.max(m)));
            }
        }
        if !v.is_zero() {
            entries.insert((n, m), v.clone());
            entries.insert((m, n), -v.clone());
        }
    }
    Ok(AffineB { entries })
}

impl AffineB {
    pub fn empty() -> Self {
        AffineB::default()
    }

    pub fn get(&self, n: u32, m: u32) -> Rational {
        self.entries.get(&(n, m)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest index carrying a nonzero entry (0 for the empty matrix).
    pub fn max_index(&self) -> u32 {
        self.entries.keys().map(|&(n, m)| n.max(m)).max().unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, u32, &Rational)> {
        self.entries.iter().map(|(&(n, m), v)| (n, m, v))
    }

    /// Entries of the upper triangle `n > m`, one per antisymmetric pair.
    pub fn triangle(&self) -> impl Iterator<Item = (u32, u32, &Rational)> {
        self.entries().filter(|(n, m, _)| n > m)
    }

    /// Largest height among the entries.
    pub fn height(&self) -> num_bigint::BigInt {
        self.entries
            .values()
            .map(crate::rational::height)
            .max()
            .unwrap_or_else(num_bigint::BigInt::zero)
    }
}

impl AffineKP {
    pub fn from_entries<I>(raw: I) -> Self
    where
        I: IntoIterator<Item = (u32, u32, Rational)>,
    {
        let mut entries = BTreeMap::new();
        for (m, n, v) in raw {
            let slot: &mut Rational = entries.entry((m, n)).or_insert_with(Rational::zero);
            *slot += v;
        }
        entries.retain(|_, v: &mut Rational| !v.is_zero());
        AffineKP { entries }
    }

    pub fn get(&self, m: u32, n: u32) -> Rational {
        self.entries.get(&(m, n)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> u32 {
        self.entries.keys().map(|&(m, n)| m.max(n)).max().unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, u32, &Rational)> {
        self.entries.iter().map(|(&(m, n), v)| (m, n, v))
    }
}

/// KP coordinates of the square of a BKP tau-function.
pub fn bkp_to_kp(b: &AffineB) -> AffineKP {
    let top = b.max_index();
    let mut raw = Vec::new();
    for m in 0..top {
        let head = b.get(m + 1, 0);
        let sign = sign_power(m as i64 + 1) * int(2);
        if !head.is_zero() {
            raw.push((m, 0, &sign * &head));
        }
        for n in 1..=top {
            let v = b.get(m + 1, n) + &head * b.get(0, n);
            if !v.is_zero() {
                raw.push((m, n, &sign * v));
            }
        }
    }
    AffineKP::from_entries(raw)
}

fn exps_for(window: &Window, var_w: usize, ew: i32, var_z: usize, ez: i32) -> Vec<i32> {
    let mut e = vec![0; window.n_vars()];
    e[var_w] += ew;
    e[var_z] += ez;
    e
}

fn signed(c: Rational, sign: i32, exp: i32) -> Rational {
    if sign == -1 && exp.rem_euclid(2) == 1 {
        -c
    } else {
        c
    }
}

/// `A^KP(s_w z_w, s_z z_z) = sum a^KP_{m,n} w^{-m-1} z^{-n-1}`; `var_w == var_z` is allowed.
pub fn series_a_kp(
    kp: &AffineKP,
    var_w: usize,
    var_z: usize,
    sign_w: i32,
    sign_z: i32,
    window: &Window,
) -> LaurentSeries {
    let terms = kp.entries().map(|(m, n, v)| {
        let (ew, ez) = (-(m as i32) - 1, -(n as i32) - 1);
        let c = signed(signed(v.clone(), sign_w, ew), sign_z, ez);
        (exps_for(window, var_w, ew, var_z, ez), c)
    });
    collect(window, terms)
}

/// Coefficient of `w^{-n} z^{-m}` in `A^BKP(w, z)`.
pub fn a_bkp_coefficient(b: &AffineB, n: u32, m: u32) -> Rational {
    let a = b.get(n, m);
    if a.is_zero() {
        return a;
    }
    let weight = match (n >= 1, m >= 1) {
        (true, true) => Rational::one(),
        (true, false) | (false, true) => rat(1, 2),
        (false, false) => Rational::zero(),
    };
    sign_power((m + n + 1) as i64) * a * weight
}

/// `A^BKP(s_w z_w, s_z z_z)`; `var_w == var_z` is allowed.
pub fn series_a_bkp(
    b: &AffineB,
    var_w: usize,
    var_z: usize,
    sign_w: i32,
    sign_z: i32,
    window: &Window,
) -> LaurentSeries {
    let terms = b.entries().map(|(n, m, _)| {
        let (ew, ez) = (-(n as i32), -(m as i32));
        let c = signed(signed(a_bkp_coefficient(b, n, m), sign_w, ew), sign_z, ez);
        (exps_for(window, var_w, ew, var_z, ez), c)
    });
    collect(window, terms)
}

fn collect<I>(window: &Window, terms: I) -> LaurentSeries
where
    I: Iterator<Item = (Vec<i32>, Rational)>,
{
    LaurentSeries::from_terms(
        window,
        terms.map(|(e, c)| (crate::series::ExpVec::new(&e), c)),
    )
}

/// `Â^KP(s_i z_i, s_j z_j)`: the `1/(u - v)` kernel plus `A^KP`, kernel omitted when `i == j`.
pub fn series_a_hat_kp(
    kp: &AffineKP,
    i: usize,
    j: usize,
    sign_i: i32,
    sign_j: i32,
    window: &Window,
) -> Result<LaurentSeries, SeriesError> {
    let a = series_a_kp(kp, i, j, sign_i, sign_j, window);
    if i == j {
        return Ok(a);
    }
    let kernel = expand_kernel(KernelKind::InvDiff, i, j, sign_i, sign_j, window)?;
    kernel.add(&a)
}

/// `Â^BKP(s_i z_i, s_j z_j) = A^BKP - 1/4 - (1/2) sum_{k>=1} (-1)^k u^-k v^k`.
pub fn series_a_hat_bkp(
    b: &AffineB,
    i: usize,
    j: usize,
    sign_i: i32,
    sign_j: i32,
    window: &Window,
) -> Result<LaurentSeries, SeriesError> {
    let a = series_a_bkp(b, i, j, sign_i, sign_j, window);
    let tail = expand_kernel(KernelKind::GeomTail, i, j, sign_i, sign_j, window)?;
    let quarter = LaurentSeries::constant(rat(1, 4), window);
    let mut out = a.sub(&quarter)?;
    out.add_scaled_assign(&tail, &rat(-1, 2))?;
    Ok(out)
}

/// Outcome of comparing `A^BKP(w,z)` with `(z A^KP(w,-z) - w A^KP(z,-w)) / 4`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationReport {
    pub holds: bool,
    pub first_difference: Option<(Vec<i32>, Rational, Rational)>,
    pub terms_compared: usize,
}

/// Checks the generating-series relation between `A^BKP` and `A^KP` on the box
/// `[-depth, depth]^2`.
pub fn check_relation_gskpbkp(b: &AffineB, depth: u32) -> Result<RelationReport, SeriesError> {
    let d = depth as i32;
    let window = Window::uniform(2, -d, d);
    // one step wider, so the shift by z or w does not lose boundary terms
    let wide = Window::uniform(2, -d - 1, d);
    let lhs = series_a_bkp(b, 0, 1, 1, 1, &window);
    let kp = bkp_to_kp(b);
    let first = series_a_kp(&kp, 0, 1, 1, -1, &wide).mul_monomial(&[0, 1], &Rational::one());
    let second = series_a_kp(&kp, 1, 0, 1, -1, &wide).mul_monomial(&[1, 0], &Rational::one());
    let rhs = first.sub(&second)?.scale(&rat(1, 4)).restrict(&window)?;
    let mut keys: Vec<_> = lhs.terms().chain(rhs.terms()).map(|(e, _)| *e).collect();
    keys.sort();
    keys.dedup();
    let terms_compared = keys.len();
    let first_difference = keys
        .into_iter()
        .map(|e| (e, lhs.coeff_or_zero(&e), rhs.coeff_or_zero(&e)))
        .find(|(_, a, b)| a != b)
        .map(|(e, a, b)| (e.as_slice().to_vec(), a, b));
    Ok(RelationReport {
        holds: first_difference.is_none(),
        first_difference,
        terms_compared,
    })
}

fn format_err(msg: impl Into<String>) -> AffineError {
    AffineError::Format(msg.into())
}

/// Parses a coordinate file: a JSON list of `[n, m, "p/q"]` records.
pub fn parse_coord_records(text: &str) -> Result<Vec<(u32, u32, Rational)>, AffineError> {
    let value: Value = serde_json::from_str(text).map_err(|e| format_err(e.to_string()))?;
    let list = value
        .as_array()
        .ok_or_else(|| format_err("expected a list of [n, m, \"p/q\"] records"))?;
    let mut out = Vec::with_capacity(list.len());
    for (idx, rec) in list.iter().enumerate() {
        let fields = rec
            .as_array()
            .filter(|f| f.len() == 3)
            .ok_or_else(|| format_err(format!("record {idx} is not a 3-element list")))?;
        let index = |v: &Value| {
            v.as_u64()
                .and_then(|x| u32::try_from(x).ok())
                .ok_or_else(|| format_err(format!("record {idx} has a bad index")))
        };
        let n = index(&fields[0])?;
        let m = index(&fields[1])?;
        let value = match &fields[2] {
            Value::String(s) => parse_rational(s).map_err(|e| format_err(format!("record {idx}: {e}")))?,
            Value::Number(num) if num.is_i64() => int(num.as_i64().unwrap_or_default()),
            _ => return Err(format_err(format!("record {idx}: value must be a \"p/q\" string"))),
        };
        out.push((n, m, value));
    }
    Ok(out)
}

pub fn parse_affine_b(text: &str) -> Result<AffineB, AffineError> {
    validate_b(parse_coord_records(text)?)
}

/// Serializes records as a JSON list, one record per line.
pub fn write_coord_records<'a, I>(records: I) -> String
where
    I: IntoIterator<Item = (u32, u32, &'a Rational)>,
{
    let lines: Vec<String> = records
        .into_iter()
        .map(|(n, m, v)| {
            serde_json::to_string(&serde_json::json!([n, m, format_rational(v)]))
                .expect("records serialize")
        })
        .collect();
    if lines.is_empty() {
        "[]\n".to_string()
    } else {
        format!("[\n  {}\n]\n", lines.join(",\n  "))
    }
}
