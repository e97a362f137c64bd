//! Property tests: duality, monotonicity in the coupling, translation
//! covariance and independence of the enumeration order.

use percolab::connectivity::{box_to_box, crosses, dual_crosses, Direction};
use percolab::events::{delta, detect_switch, has_mixed_pivotal};
use percolab::field::{Bonds, CoupledField};
use percolab::geometry::{Edge, Rect, Site};
use percolab::oracle::{enumerate_edges, reference_crossing, Predicate, TrinaryWeights};
use proptest::prelude::*;

/// A configuration seen through a translation: edge `e` here is edge
/// `e - by` of the inner configuration.
struct Shifted<'a, B: Bonds> {
    inner: &'a B,
    by: Site,
}

impl<B: Bonds> Bonds for Shifted<'_, B> {
    fn open(&self, e: Edge) -> bool {
        self.inner.open(e.translate(Site::new(-self.by.x, -self.by.y)))
    }
}

fn rect() -> impl Strategy<Value = Rect> {
    (-5i32..5, -5i32..5, 0i32..9, 0i32..9).prop_map(|(x, y, w, h)| Rect::new(x, x + w, y, y + h).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn exactly_one_of_primal_and_dual_crossing(r in rect(), p in 0.0f64..=1.0, seed: u64, stream in 0u64..1000) {
        let c = CoupledField::new(seed, stream).at(p);
        prop_assert!(crosses(&c, &r, Direction::LeftRight) ^ dual_crosses(&c, &r, Direction::TopBottom));
        prop_assert!(crosses(&c, &r, Direction::TopBottom) ^ dual_crosses(&c, &r, Direction::LeftRight));
    }

    #[test]
    fn crossing_is_monotone_in_p(r in rect(), p in 0.0f64..=1.0, dp in 0.0f64..=0.5, seed: u64) {
        let f = CoupledField::new(seed, 0);
        let q = (p + dp).min(1.0);
        prop_assert!(!crosses(&f.at(p), &r, Direction::LeftRight) || crosses(&f.at(q), &r, Direction::LeftRight));
    }

    #[test]
    fn delta_is_monotone_in_upper_parameter(n in 1i32..6, p in 0.3f64..0.7, g1 in 0.0f64..0.2, g2 in 0.0f64..0.2, seed: u64) {
        let f = CoupledField::new(seed, 1);
        let (lo, a, b) = (f.at(p), f.at(p + g1), f.at(p + g1 + g2));
        prop_assert!(!delta(&lo, &a, n) || delta(&lo, &b, n));
    }

    #[test]
    fn detectors_commute_with_translation(dx in -20i32..20, dy in -20i32..20, seed: u64, p in 0.4f64..0.6) {
        let by = Site::new(dx, dy);
        let f = CoupledField::new(seed, 2);
        let (lo, hi) = (f.at(p), f.at(p + 0.1));
        let (slo, shi) = (Shifted { inner: &lo, by }, Shifted { inner: &hi, by });
        let x = Site::new(1, -2);
        prop_assert_eq!(has_mixed_pivotal(&lo, &hi, 2, x), has_mixed_pivotal(&slo, &shi, 2, x.translate(by)));
        prop_assert_eq!(
            detect_switch(&lo, x, 2).unwrap().is_switch,
            detect_switch(&slo, x.translate(by), 2).unwrap().is_switch
        );
        prop_assert_eq!(box_to_box(&lo, x, 2, 6), box_to_box(&slo, x.translate(by), 2, 6));
    }

    #[test]
    fn enumeration_ignores_edge_order(
        order in Just(Rect::new(0, 2, 0, 1).unwrap().edges()).prop_shuffle(),
        p in 0.05f64..0.95,
        dq in 0.0f64..0.05,
    ) {
        let r = Rect::new(0, 2, 0, 1).unwrap();
        let w = TrinaryWeights::new(p, p + dq).unwrap();
        let pred = Predicate::lower_increasing(|lo| reference_crossing(&r, |e| lo.open(e)));
        let base = enumerate_edges(&r.edges(), &w, &pred, 20).unwrap().value;
        let shuffled = enumerate_edges(&order, &w, &pred, 20).unwrap().value;
        prop_assert!((base - shuffled).abs() < 1e-12);
    }
}
