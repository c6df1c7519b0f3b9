use proptest::prelude::*;

use bkp_npoint::affine::{check_relation_gskpbkp, validate_b, AffineB};
use bkp_npoint::lemma::{eval_f, eval_g, SeriesPairSpec, VarRef, pair_window};
use bkp_npoint::npoint::{bkp_wangyang_series, compare_formulas, Truncation};
use bkp_npoint::rational::{format_rational, parse_rational, rat, Rational};
use bkp_npoint::series::{ExpVec, LaurentSeries, Window};

fn rational() -> impl Strategy<Value = Rational> {
    (-9i64..=9, 1i64..=9).prop_map(|(p, q)| rat(p, q))
}

fn affine_b(support: u32) -> impl Strategy<Value = AffineB> {
    prop::collection::vec((1..=support, 0..support, rational()), 0..5).prop_map(|raw| {
        let raw = raw.into_iter().filter(|(n, m, _)| m < n);
        // keep the first value per slot
        let mut seen = std::collections::BTreeMap::new();
        for (n, m, v) in raw {
            seen.entry((n, m)).or_insert(v);
        }
        validate_b(seen.into_iter().map(|((n, m), v)| (n, m, v))).unwrap()
    })
}

fn series_pair() -> impl Strategy<Value = SeriesPairSpec> {
    (
        prop::collection::vec((1u32..=3, 1u32..=3, rational()), 0..4),
        prop::collection::vec((1u32..=3, rational()), 0..3),
    )
        .prop_map(|(s, t)| {
            let mut slots = std::collections::BTreeMap::new();
            for (m, n, v) in s.into_iter().filter(|(m, n, _)| m < n) {
                slots.entry((m, n)).or_insert(v);
            }
            SeriesPairSpec::new(slots.into_iter().map(|((m, n), v)| (m, n, v)), t).unwrap()
        })
}

/// Polynomial in two variables with exponents in [-3, 3].
fn series(window: Window) -> impl Strategy<Value = LaurentSeries> {
    prop::collection::vec(((-3i32..=3, -3i32..=3), rational()), 0..6).prop_map(move |terms| {
        LaurentSeries::from_terms(&window, terms.into_iter().map(|((a, b), c)| (ExpVec::new(&[a, b]), c)))
    })
}

fn ring_window() -> Window {
    Window::uniform(2, -12, 12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rational_text_roundtrip(p in -1000i64..1000, q in 1i64..1000) {
        let r = rat(p, q);
        prop_assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
    }

    #[test]
    fn ring_laws(a in series(ring_window()), b in series(ring_window()), c in series(ring_window())) {
        let ab = a.mul(&b).unwrap();
        prop_assert_eq!(ab.first_difference(&b.mul(&a).unwrap(), i64::MAX), None);
        let left = ab.mul(&c).unwrap();
        let right = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert_eq!(left.first_difference(&right, i64::MAX), None);
        let dist = a.mul(&b.add(&c).unwrap()).unwrap();
        let split = ab.add(&a.mul(&c).unwrap()).unwrap();
        prop_assert_eq!(dist.first_difference(&split, i64::MAX), None);
        prop_assert!(a.sub(&a).unwrap().is_zero());
    }

    #[test]
    fn generating_series_relation(b in affine_b(4)) {
        let r = check_relation_gskpbkp(&b, 6).unwrap();
        prop_assert!(r.holds, "{:?}", r.first_difference);
    }

    #[test]
    fn f_antisymmetry_and_split(spec in series_pair(), i in 0usize..3, j in 0usize..3, fi in any::<bool>(), fj in any::<bool>()) {
        let w = pair_window(3, 6);
        let pick = |idx, y: bool| if y { VarRef::y(idx) } else { VarRef::x(idx) };
        let (a, b) = (pick(i, fi), pick(j, fj));
        prop_assume!(a != b);
        let fab = eval_f(&spec, a, b, &w).unwrap();
        let fba = eval_f(&spec, b, a, &w).unwrap();
        prop_assert_eq!(fab.first_difference(&fba.neg(), 6), None);
        let g = eval_g(&spec, a, b, &w).unwrap().sub(&eval_g(&spec, b, a, &w).unwrap()).unwrap();
        prop_assert_eq!(fab.first_difference(&g, 6), None);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn formulas_agree_and_are_symmetric(b in affine_b(3), n in 1usize..=3) {
        let cmp = compare_formulas(&b, n, 7).unwrap();
        prop_assert!(cmp.agree(), "{:?} {:?}", cmp.table_difference, cmp.series_difference);
        prop_assert!(cmp.wangyang.is_symmetric());
    }

    #[test]
    fn wangyang_series_is_odd_in_first_variable(b in affine_b(3), n in 1usize..=3) {
        let s = bkp_wangyang_series(&b, n, Truncation::default()).unwrap();
        let g = s.certified_grade().unwrap_or(i64::MAX);
        prop_assert_eq!(s.first_difference(&s.substitute_sign(0, -1).neg(), g), None);
    }
}
