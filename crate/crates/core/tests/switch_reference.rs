//! The switch detector against a plainly coded reference: sides of the
//! extremal crossings by ray parity, connectors by breadth-first search.

use std::collections::{HashSet, VecDeque};

use percolab::connectivity::{extremal_crossing, Direction, PathTrace, Side};
use percolab::events::detect_switch;
use percolab::field::{Bonds, CoupledField};
use percolab::geometry::{Edge, Rect, Site, Step};

/// Faces are named by their lower-left corner.
type Face = Site;

/// Number of vertical edges of `path` in face row `fy` at or left of `fx`.
fn crossings_left(path: &PathTrace, f: Face) -> usize {
    path.edges().iter().filter(|e| *e == &Edge::north(e.base.x, f.y) && e.base.x <= f.x).count()
}

fn crossings_right(path: &PathTrace, f: Face) -> usize {
    path.edges().iter().filter(|e| *e == &Edge::north(e.base.x, f.y) && e.base.x > f.x).count()
}

fn between(gl: &PathTrace, gr: &PathTrace, f: Face) -> bool {
    crossings_left(gl, f) % 2 == 1 && crossings_right(gr, f) % 2 == 1
}

/// The two faces sharing edge `e`.
fn faces_of(e: Edge) -> [Face; 2] {
    if e == Edge::east(e.base.x, e.base.y) {
        [Site::new(e.base.x, e.base.y), Site::new(e.base.x, e.base.y - 1)]
    } else {
        [Site::new(e.base.x, e.base.y), Site::new(e.base.x - 1, e.base.y)]
    }
}

/// The edge between face `f` and its neighbour in direction `st`.
fn shared(f: Face, st: Step) -> Edge {
    match st {
        Step::E => Edge::north(f.x + 1, f.y),
        Step::W => Edge::north(f.x, f.y),
        Step::N => Edge::east(f.x, f.y + 1),
        Step::S => Edge::east(f.x, f.y),
    }
}

fn connector<B: Bonds>(bonds: &B, bx: &Rect, gl: &PathTrace, gr: &PathTrace, rows: (i32, i32)) -> bool {
    let ok = |f: Face| f.y >= rows.0 && f.y <= rows.1 && between(gl, gr, f);
    let sources: Vec<Face> = gl.edges().into_iter().flat_map(faces_of).filter(|f| ok(*f)).collect();
    let targets: HashSet<Face> = gr.edges().into_iter().flat_map(faces_of).filter(|f| ok(*f)).collect();
    let mut seen: HashSet<Face> = sources.iter().copied().collect();
    let mut queue: VecDeque<Face> = sources.into_iter().collect();
    while let Some(f) = queue.pop_front() {
        if targets.contains(&f) {
            return true;
        }
        for st in Step::ALL {
            let e = shared(f, st);
            let inside = bx.contains(e.base) && bx.contains(e.head());
            let g = f.step(st);
            if inside && !bonds.open(e) && ok(g) && seen.insert(g) {
                queue.push_back(g);
            }
        }
    }
    false
}

fn reference_switch<B: Bonds>(bonds: &B, x: Site, n: i32) -> bool {
    let n2 = 2 * n;
    let right = Rect { x_min: x.x + n, x_max: x.x + n2, y_min: x.y - n2, y_max: x.y + n2 };
    let left = Rect { x_min: x.x - n2, x_max: x.x - n, y_min: x.y - n2, y_max: x.y + n2 };
    let bx = Rect { x_min: x.x - n2, x_max: x.x + n2, y_min: x.y - n2, y_max: x.y + n2 };
    let gr = extremal_crossing(bonds, &right, Side::RightMost, Direction::TopBottom).unwrap();
    let gl = extremal_crossing(bonds, &left, Side::LeftMost, Direction::TopBottom).unwrap();
    let (Some(gr), Some(gl)) = (gr, gl) else { return false };
    connector(bonds, &bx, &gl, &gr, (x.y - n2, x.y - n - 1)) && connector(bonds, &bx, &gl, &gr, (x.y + n, x.y + n2 - 1))
}

#[test]
fn detector_matches_reference() {
    let x = Site::new(3, -1);
    for (p, samples) in [(0.5, 100_000u64), (0.45, 20_000), (0.55, 20_000)] {
        let mut hits = 0;
        for k in 0..samples {
            let c = CoupledField::new(41, k).at(p);
            let fast = detect_switch(&c, x, 2).unwrap().is_switch;
            assert_eq!(fast, reference_switch(&c, x, 2), "p={p} stream {k}");
            hits += fast as u32;
        }
        assert!(hits > 0, "no switch at p={p}");
    }
}

#[test]
fn detector_matches_reference_at_scale_one() {
    let mut hits = 0;
    for k in 0..50_000u64 {
        let c = CoupledField::new(42, k).at(0.5);
        let fast = detect_switch(&c, Site::ORIGIN, 1).unwrap().is_switch;
        assert_eq!(fast, reference_switch(&c, Site::ORIGIN, 1), "stream {k}");
        hits += fast as u32;
    }
    assert!(hits > 0);
}
