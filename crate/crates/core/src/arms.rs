//! Search for several arms at once under pairwise constraints.
//!
//! Each arm is a path on its own [`Grid`] from a source set to a target set.
//! Two kinds of constraints link arms: same-lattice arms may be required to
//! be vertex-disjoint, and a primal arm and a dual arm may be forbidden from
//! crossing (using an edge and its dual). The search finds each arm
//! separately, steering it away from resources held by the others; when a
//! conflict remains it branches on which of the two arms gives up the
//! contested vertex or edge. Every branch only removes options that some
//! valid solution must also avoid in one of the two children, so the search
//! is exact.

use std::collections::{HashSet, VecDeque};

use crate::connectivity::{Grid, Lattice};
use crate::geometry::{DualEdge, DualSite, Edge, Site, Step};

/// One requested arm.
pub struct ArmSpec<'a> {
    pub grid: &'a dyn Grid,
    pub lattice: Lattice,
    pub sources: Vec<Site>,
    pub target: &'a dyn Fn(Site) -> bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constraint {
    /// Arms `i` and `j` share no vertex.
    VertexDisjoint(usize, usize),
    /// Arm `i` never uses the primal partner of an edge crossed by arm `j`.
    NoCross(usize, usize),
}

/// The primal edge behind one step of an arm.
#[inline]
pub fn step_edge(lattice: Lattice, s: Site, step: Step) -> Edge {
    match lattice {
        Lattice::Primal => Edge::from_step(s, step),
        Lattice::Dual => DualEdge::from_step(DualSite::new(s.x, s.y), step).primal(),
    }
}

#[derive(Clone, Default)]
struct Forbidden {
    vertices: HashSet<Site>,
    edges: HashSet<Edge>,
}

struct Held {
    vertices: HashSet<Site>,
    edges: HashSet<Edge>,
}

impl Held {
    fn of(lattice: Lattice, path: &[Site]) -> Self {
        let vertices = path.iter().copied().collect();
        let edges = path
            .windows(2)
            .map(|w| {
                let step = Step::ALL.into_iter().find(|st| w[0].step(*st) == w[1]).expect("adjacent");
                step_edge(lattice, w[0], step)
            })
            .collect();
        Held { vertices, edges }
    }
}

/// Arm paths, one per spec, if all constraints can be met simultaneously.
pub fn find_arms(arms: &[ArmSpec], constraints: &[Constraint]) -> Option<Vec<Vec<Site>>> {
    let mut stats = SearchStats::default();
    find_arms_with_stats(arms, constraints, &mut stats)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SearchStats {
    pub nodes: u64,
}

pub fn find_arms_with_stats(
    arms: &[ArmSpec],
    constraints: &[Constraint],
    stats: &mut SearchStats,
) -> Option<Vec<Vec<Site>>> {
    let forbidden = vec![Forbidden::default(); arms.len()];
    solve(arms, constraints, forbidden, stats)
}

fn partners(constraints: &[Constraint], i: usize) -> (Vec<usize>, Vec<usize>) {
    let (mut vert, mut edge) = (Vec::new(), Vec::new());
    for c in constraints {
        match *c {
            Constraint::VertexDisjoint(a, b) if a == i => vert.push(b),
            Constraint::VertexDisjoint(a, b) if b == i => vert.push(a),
            Constraint::NoCross(a, b) if a == i => edge.push(b),
            Constraint::NoCross(a, b) if b == i => edge.push(a),
            _ => {}
        }
    }
    (vert, edge)
}

fn solve(
    arms: &[ArmSpec],
    constraints: &[Constraint],
    forbidden: Vec<Forbidden>,
    stats: &mut SearchStats,
) -> Option<Vec<Vec<Site>>> {
    stats.nodes += 1;
    let k = arms.len();
    let mut paths: Vec<Option<Vec<Site>>> = vec![None; k];
    let mut held: Vec<Option<Held>> = (0..k).map(|_| None).collect();
    // two rounds: the second lets early arms dodge the later ones
    for _round in 0..2 {
        for i in 0..k {
            let (vp, ep) = partners(constraints, i);
            let pen_v: Vec<&HashSet<Site>> = vp.iter().filter_map(|j| held[*j].as_ref().map(|h| &h.vertices)).collect();
            let pen_e: Vec<&HashSet<Edge>> = ep.iter().filter_map(|j| held[*j].as_ref().map(|h| &h.edges)).collect();
            let p = cheapest_arm(&arms[i], &forbidden[i], &pen_v, &pen_e)?;
            held[i] = Some(Held::of(arms[i].lattice, &p));
            paths[i] = Some(p);
        }
    }
    let held: Vec<Held> = held.into_iter().map(|h| h.expect("every arm placed")).collect();
    for c in constraints {
        match *c {
            Constraint::VertexDisjoint(i, j) => {
                if let Some(v) = paths[i].as_ref().unwrap().iter().find(|v| held[j].vertices.contains(v)) {
                    let v = *v;
                    for side in [i, j] {
                        let mut f = forbidden.clone();
                        f[side].vertices.insert(v);
                        if let Some(sol) = solve(arms, constraints, f, stats) {
                            return Some(sol);
                        }
                    }
                    return None;
                }
            }
            Constraint::NoCross(i, j) => {
                let mut shared: Vec<&Edge> = held[i].edges.iter().filter(|e| held[j].edges.contains(e)).collect();
                shared.sort();
                if let Some(e) = shared.first() {
                    let e = **e;
                    for side in [i, j] {
                        let mut f = forbidden.clone();
                        f[side].edges.insert(e);
                        if let Some(sol) = solve(arms, constraints, f, stats) {
                            return Some(sol);
                        }
                    }
                    return None;
                }
            }
        }
    }
    Some(paths.into_iter().map(|p| p.unwrap()).collect())
}

/// 0-1 BFS: steps onto penalized vertices or edges cost one.
fn cheapest_arm(
    arm: &ArmSpec,
    forbidden: &Forbidden,
    pen_v: &[&HashSet<Site>],
    pen_e: &[&HashSet<Edge>],
) -> Option<Vec<Site>> {
    let g = arm.grid;
    let b = g.bounds();
    let n = b.num_sites();
    let mut dist = vec![u32::MAX; n];
    let mut parent = vec![u32::MAX; n];
    let mut dq = VecDeque::new();
    let vcost = |v: Site| pen_v.iter().filter(|s| s.contains(&v)).count() as u32;
    for &s in &arm.sources {
        if !g.inside(s) || forbidden.vertices.contains(&s) {
            continue;
        }
        let i = b.site_index(s);
        let d = vcost(s);
        if d < dist[i] {
            dist[i] = d;
            if d == 0 {
                dq.push_front(s);
            } else {
                dq.push_back(s);
            }
        }
    }
    let mut done = vec![false; n];
    while let Some(s) = dq.pop_front() {
        let i = b.site_index(s);
        if done[i] {
            continue;
        }
        done[i] = true;
        if (arm.target)(s) {
            let w = b.width() as usize + 1;
            let mut path = vec![s];
            let mut k = parent[i];
            while k != u32::MAX {
                let ku = k as usize;
                path.push(Site::new(b.x_min + (ku % w) as i32, b.y_min + (ku / w) as i32));
                k = parent[ku];
            }
            path.reverse();
            return Some(path);
        }
        for step in Step::ALL {
            if !g.passable(s, step) {
                continue;
            }
            let t = s.step(step);
            if forbidden.vertices.contains(&t) {
                continue;
            }
            let e = step_edge(arm.lattice, s, step);
            if forbidden.edges.contains(&e) {
                continue;
            }
            let j = b.site_index(t);
            if done[j] {
                continue;
            }
            let c = vcost(t) + pen_e.iter().filter(|h| h.contains(&e)).count() as u32;
            let nd = dist[i] + c;
            if nd < dist[j] {
                dist[j] = nd;
                parent[j] = i as u32;
                if c == 0 {
                    dq.push_front(t);
                } else {
                    dq.push_back(t);
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectivity::{DualGrid, Mask, PrimalGrid};
    use crate::field::{Constant, EdgeSet};
    use crate::geometry::Rect;

    #[test]
    fn two_disjoint_columns() {
        let r = Rect::new(0, 3, 0, 4).unwrap();
        let mask = Mask::rect(r);
        // only columns x = 0 and x = 2 open
        let mut c = EdgeSet::empty(r);
        for y in 0..4 {
            c.set(Edge::north(0, y), true);
            c.set(Edge::north(2, y), true);
        }
        c.set(Edge::east(0, 0), true);
        c.set(Edge::east(1, 0), true);
        let g = PrimalGrid { bonds: &c, mask: &mask };
        let top = |s: Site| s.y == 4;
        let arms = [
            ArmSpec { grid: &g, lattice: Lattice::Primal, sources: r.bottom_row(), target: &top },
            ArmSpec { grid: &g, lattice: Lattice::Primal, sources: r.bottom_row(), target: &top },
        ];
        let sol = find_arms(&arms, &[Constraint::VertexDisjoint(0, 1)]).unwrap();
        let a: HashSet<Site> = sol[0].iter().copied().collect();
        assert!(sol[1].iter().all(|v| !a.contains(v)));
        let three = [
            ArmSpec { grid: &g, lattice: Lattice::Primal, sources: r.bottom_row(), target: &top },
            ArmSpec { grid: &g, lattice: Lattice::Primal, sources: r.bottom_row(), target: &top },
            ArmSpec { grid: &g, lattice: Lattice::Primal, sources: r.bottom_row(), target: &top },
        ];
        let cons = [Constraint::VertexDisjoint(0, 1), Constraint::VertexDisjoint(0, 2), Constraint::VertexDisjoint(1, 2)];
        assert!(find_arms(&three, &cons).is_none());
    }

    #[test]
    fn primal_and_dual_cannot_cross() {
        // all-open primal and all-open dual (different configurations) in a
        // square: a left-right primal arm and a bottom-top dual arm must cross
        let r = Rect::new(0, 3, 0, 3).unwrap();
        let mask = Mask::rect(r);
        let g = PrimalGrid { bonds: &Constant(true), mask: &mask };
        let d = DualGrid { bonds: &Constant(false), mask: &mask };
        let right = |s: Site| s.x == 3;
        let top = |s: Site| s.y == 3;
        let arms = [
            ArmSpec { grid: &g, lattice: Lattice::Primal, sources: r.left_column(), target: &right },
            ArmSpec {
                grid: &d,
                lattice: Lattice::Dual,
                sources: (0..3).map(|x| Site::new(x, -1)).collect(),
                target: &top,
            },
        ];
        assert!(find_arms(&arms, &[]).is_some());
        assert!(find_arms(&arms, &[Constraint::NoCross(0, 1)]).is_none());
    }
}
