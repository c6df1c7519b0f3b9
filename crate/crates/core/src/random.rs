//! Seeded random instances for the verification suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::affine::{validate_b, AffineB};
use crate::lemma::SeriesPairSpec;
use crate::rational::{rat, Rational};

/// Nonzero rational with numerator and denominator magnitudes at most `height`.
pub fn random_rational(rng: &mut impl Rng, height: i64) -> Rational {
    let p = rng.gen_range(1..=height) * if rng.gen_bool(0.5) { 1 } else { -1 };
    let q = rng.gen_range(1..=height);
    rat(p, q)
}

/// BKP coordinates on indices `0..=support`, each strict-triangle entry present
/// with probability 1/2.
pub fn random_affine_b(rng: &mut impl Rng, support: u32, height: i64) -> AffineB {
    let mut raw = Vec::new();
    for n in 1..=support {
        for m in 0..n {
            if rng.gen_bool(0.5) {
                raw.push((n, m, random_rational(rng, height)));
            }
        }
    }
    validate_b(raw).expect("strict triangle is always valid")
}

pub fn random_series_pair(rng: &mut impl Rng, support: u32, height: i64) -> SeriesPairSpec {
    let mut s = Vec::new();
    for m in 1..=support {
        for n in m + 1..=support {
            if rng.gen_bool(0.5) {
                s.push((m, n, random_rational(rng, height)));
            }
        }
    }
    let mut t = Vec::new();
    for m in 1..=support {
        if rng.gen_bool(0.5) {
            t.push((m, random_rational(rng, height)));
        }
    }
    SeriesPairSpec::new(s, t).expect("strict triangle is always valid")
}

/// `count` instances from `seed`; instance `i` depends only on `(seed, i)`.
pub fn affine_instances(seed: u64, count: usize, support: u32, height: i64) -> Vec<AffineB> {
    (0..count)
        .map(|i| random_affine_b(&mut instance_rng(seed, i), support, height))
        .collect()
}

pub fn series_pair_instances(seed: u64, count: usize, support: u32, height: i64) -> Vec<SeriesPairSpec> {
    (0..count)
        .map(|i| random_series_pair(&mut instance_rng(seed, i), support, height))
        .collect()
}

fn instance_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_bounded() {
        let a = affine_instances(7, 5, 4, 9);
        assert_eq!(a, affine_instances(7, 5, 4, 9));
        assert_eq!(a[..3], affine_instances(7, 3, 4, 9)[..]);
        assert_ne!(a, affine_instances(8, 5, 4, 9));
        for b in &a {
            assert!(b.max_index() <= 4);
            for (_, _, v) in b.entries() {
                assert!(v.numer().magnitude() <= &9u32.into() && v.denom() <= &9.into());
            }
        }
        let s = series_pair_instances(3, 4, 3, 9);
        assert!(s.iter().all(|p| p.support() <= 3));
        assert!(s.iter().any(|p| !p.is_zero()));
    }
}
