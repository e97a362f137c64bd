//! Fast detectors against exhaustive path searches on small windows.

use percolab::events::{mixed_pivotal, mixed_pivotal_edges, mixed_three_arm_unchecked};
use percolab::field::CoupledField;
use percolab::geometry::Site;
use percolab::oracle::{disjoint_arm_search, mixed_pivotal_by_path_pairs, path_pair_search};

const PAIRS: [(f64, f64); 3] = [(0.3, 0.5), (0.45, 0.55), (0.5, 0.7)];

#[test]
fn mixed_pivotal_matches_path_pairs_at_scale_one() {
    let mut hits = 0;
    for (i, (p, q)) in PAIRS.into_iter().enumerate() {
        for k in 0..2_000u64 {
            let f = CoupledField::new(100 + i as u64, k);
            let (lo, hi) = (f.at(p), f.at(q));
            let fast = mixed_pivotal(&lo, &hi, 1, Site::ORIGIN).unwrap().occurred;
            assert_eq!(fast, mixed_pivotal_by_path_pairs(&lo, &hi, 1, Site::ORIGIN).unwrap(), "({p},{q}) stream {k}");
            hits += fast as u32;
        }
    }
    assert!(hits > 0);
}

#[test]
fn mixed_pivotal_matches_path_pairs_at_scale_two() {
    let c = Site::new(-2, 5);
    let mut hits = 0;
    for (i, (p, q)) in PAIRS.into_iter().enumerate() {
        for k in 0..300u64 {
            let f = CoupledField::new(200 + i as u64, k);
            let (lo, hi) = (f.at(p), f.at(q));
            let fast = mixed_pivotal(&lo, &hi, 2, c).unwrap().occurred;
            assert_eq!(fast, mixed_pivotal_by_path_pairs(&lo, &hi, 2, c).unwrap(), "({p},{q}) stream {k}");
            hits += fast as u32;
        }
    }
    assert!(hits > 0);
}

#[test]
fn pivotal_edges_each_have_a_path_pair() {
    for k in 0..500u64 {
        let f = CoupledField::new(300, k);
        let (lo, hi) = (f.at(0.45), f.at(0.55));
        for e in mixed_pivotal_edges(&lo, &hi, 1, Site::ORIGIN) {
            assert!(path_pair_search(&lo, &hi, 1, Site::ORIGIN, e).unwrap(), "stream {k} edge {e:?}");
        }
    }
}

#[test]
fn three_arms_match_disjoint_search() {
    let cases = [(Site::new(6, 0), 1, 3, 3), (Site::new(6, 2), 2, 4, 3), (Site::new(8, -8), 1, 4, 4)];
    let mut hits = 0;
    for (i, (p, q)) in PAIRS.into_iter().enumerate() {
        for &(x, r, big_r, n) in &cases {
            for k in 0..400u64 {
                let f = CoupledField::new(400 + i as u64, k);
                let (lo, hi) = (f.at(p), f.at(q));
                let fast = mixed_three_arm_unchecked(&lo, &hi, x, r, big_r, n).occurred;
                let exact = disjoint_arm_search(&lo, &hi, x, r, big_r, n).unwrap();
                assert_eq!(fast, exact, "({p},{q}) x={x:?} r={r} R={big_r} stream {k}");
                hits += fast as u32;
            }
        }
    }
    assert!(hits > 0);
}
