//! Extremal crossings checked against an independent characterization: the
//! region on the extremal side of the extremal crossing is everything not
//! reachable from the opposite side without entering the dual cluster of the
//! extremal side.

use std::collections::{HashSet, VecDeque};

use percolab::connectivity::{extremal_crossing, lowest_crossing, Direction, PathTrace, Side};
use percolab::field::{Bonds, CoupledField, EdgeSet, Union};
use percolab::geometry::{CrossDomain, Edge, Rect, Site};
use proptest::prelude::*;

type Face = (i32, i32);

fn faces(r: &Rect) -> Vec<Face> {
    let mut v = Vec::new();
    for j in r.y_min..r.y_max {
        for i in r.x_min..r.x_max {
            v.push((i, j));
        }
    }
    v
}

/// Interior moves between faces, with the edge crossed.
fn moves(r: &Rect, f: Face) -> Vec<(Face, Edge)> {
    let (i, j) = f;
    let mut v = Vec::new();
    if i + 1 < r.x_max {
        v.push(((i + 1, j), Edge::north(i + 1, j)));
    }
    if i > r.x_min {
        v.push(((i - 1, j), Edge::north(i, j)));
    }
    if j + 1 < r.y_max {
        v.push(((i, j + 1), Edge::east(i, j + 1)));
    }
    if j > r.y_min {
        v.push(((i, j - 1), Edge::east(i, j)));
    }
    v
}

/// Boundary edges through which faces are entered from the exterior on `side`.
fn entries(r: &Rect, side: Side) -> Vec<(Face, Edge)> {
    match side {
        Side::RightMost => (r.y_min..r.y_max).map(|j| ((r.x_max - 1, j), Edge::north(r.x_max, j))).collect(),
        Side::LeftMost => (r.y_min..r.y_max).map(|j| ((r.x_min, j), Edge::north(r.x_min, j))).collect(),
        Side::BottomMost => (r.x_min..r.x_max).map(|i| ((i, r.y_min), Edge::east(i, r.y_min))).collect(),
        Side::TopMost => (r.x_min..r.x_max).map(|i| ((i, r.y_max - 1), Edge::east(i, r.y_max))).collect(),
    }
}

fn opposite(side: Side) -> Side {
    match side {
        Side::RightMost => Side::LeftMost,
        Side::LeftMost => Side::RightMost,
        Side::BottomMost => Side::TopMost,
        Side::TopMost => Side::BottomMost,
    }
}

fn flood(r: &Rect, side: Side, can_cross: impl Fn(Edge) -> bool, face_ok: impl Fn(Face) -> bool) -> HashSet<Face> {
    let mut seen = HashSet::new();
    let mut q = VecDeque::new();
    for (f, e) in entries(r, side) {
        if can_cross(e) && face_ok(f) && seen.insert(f) {
            q.push_back(f);
        }
    }
    while let Some(f) = q.pop_front() {
        for (g, e) in moves(r, f) {
            if can_cross(e) && face_ok(g) && seen.insert(g) {
                q.push_back(g);
            }
        }
    }
    seen
}

/// Faces on the extremal side of the extremal crossing, or None if there is
/// no crossing.
fn expected_side_region<B: Bonds>(bonds: &B, r: &Rect, side: Side) -> Option<HashSet<Face>> {
    let dual_cluster = flood(r, side, |e| !bonds.open(e), |_| true);
    let far = opposite(side);
    // a dual path from the extremal side to the far side blocks every crossing
    let blocked = entries(r, far).iter().any(|(f, e)| dual_cluster.contains(f) && !bonds.open(*e));
    if blocked {
        return None;
    }
    let far_region = flood(r, far, |_| true, |f| !dual_cluster.contains(&f));
    Some(faces(r).into_iter().filter(|f| !far_region.contains(f)).collect())
}

fn path_side_region(path: &PathTrace, r: &Rect, side: Side) -> HashSet<Face> {
    let on_path: HashSet<Edge> = path.edges().into_iter().collect();
    flood(r, side, |e| !on_path.contains(&e), |_| true)
}

fn direction(side: Side) -> Direction {
    match side {
        Side::RightMost | Side::LeftMost => Direction::TopBottom,
        _ => Direction::LeftRight,
    }
}

fn check(seed: u64, p: f64, r: Rect, side: Side) -> Result<(), TestCaseError> {
    let c = EdgeSet::capture(r, &CoupledField::new(seed, 0).at(p));
    let found = extremal_crossing(&c, &r, side, direction(side)).unwrap();
    let expected = expected_side_region(&c, &r, side);
    prop_assert_eq!(found.is_some(), expected.is_some());
    let (Some(path), Some(expected)) = (found, expected) else {
        return Ok(());
    };
    prop_assert!(path.verify(&c));
    prop_assert_eq!(path_side_region(&path, &r, side), expected.clone());

    // opening every edge strictly on the far side leaves the path unchanged
    let on_path: HashSet<Edge> = path.edges().into_iter().collect();
    let ext: HashSet<Edge> = entries(&r, side).into_iter().map(|(_, e)| e).collect();
    let mut extra = EdgeSet::empty(r);
    for e in r.edges() {
        if on_path.contains(&e) || ext.contains(&e) {
            continue;
        }
        let adjacent: Vec<Face> = faces(&r)
            .into_iter()
            .filter(|f| {
                let (i, j) = *f;
                [Edge::east(i, j), Edge::east(i, j + 1), Edge::north(i, j), Edge::north(i + 1, j)].contains(&e)
            })
            .collect();
        if adjacent.iter().all(|f| !expected.contains(f)) {
            extra.set(e, true);
        }
    }
    let opened = EdgeSet::capture(r, &Union(&c, &extra));
    let again = extremal_crossing(&opened, &r, side, direction(side)).unwrap().unwrap();
    prop_assert_eq!(again, path);
    Ok(())
}

fn any_side() -> impl Strategy<Value = Side> {
    prop_oneof![Just(Side::RightMost), Just(Side::LeftMost), Just(Side::BottomMost), Just(Side::TopMost)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3000))]

    #[test]
    fn extremal_crossing_matches_fill(
        seed in any::<u64>(),
        p in 0.35f64..0.75,
        w in 1i32..7,
        h in 1i32..7,
        side in any_side(),
    ) {
        check(seed, p, Rect::new(-2, w - 2, 1, h + 1).unwrap(), side)?;
    }
}

#[test]
fn extremal_crossing_many_samples() {
    let r = Rect::new(0, 5, 0, 8).unwrap();
    for k in 0..2500u64 {
        for side in [Side::RightMost, Side::LeftMost, Side::BottomMost, Side::TopMost] {
            check(k, 0.5, r, side).unwrap();
        }
    }
}

#[test]
fn lowest_crossing_of_cross_domain_is_stable() {
    let c = CrossDomain::new(2);
    let b = c.bounding();
    for k in 0..3000u64 {
        let w = EdgeSet::capture(b, &CoupledField::new(k, 1).at(0.55));
        let Some(path) = lowest_crossing(&w, &c) else { continue };
        assert!(path.verify(&w));
        let left: HashSet<Site> = c.left_side().into_iter().collect();
        let right: HashSet<Site> = c.right_side().into_iter().collect();
        assert!(left.contains(&path.first()) && right.contains(&path.last()));
        // open every edge of C whose both endpoints are strictly above the
        // path's vertices in their column
        let max_y = |x: i32| path.sites.iter().filter(|s| s.x == x).map(|s| s.y).max();
        let mut extra = EdgeSet::empty(b);
        for e in b.edges() {
            let (u, v) = e.endpoints();
            if !(c.contains(u) && c.contains(v)) {
                continue;
            }
            let above = |s: Site| max_y(s.x).is_some_and(|m| s.y > m + 1);
            if above(u) && above(v) {
                extra.set(e, true);
            }
        }
        let opened = EdgeSet::capture(b, &Union(&w, &extra));
        assert_eq!(lowest_crossing(&opened, &c).unwrap(), path, "sample {k}");
    }
}
