//! Connectivity on the primal and dual lattices inside masks: cluster
//! labels, set-to-set connections with witnesses, rectangle crossings and
//! extremal crossings.
//!
//! Dual conventions: a dual edge may be used iff its primal partner has both
//! endpoints in the primal mask. The dual top-bottom crossing of
//! `[a, b] x [c, d]` joins the face row centred at `c - 1/2` to the face row
//! centred at `d + 1/2`; the dual left-right crossing joins the face columns
//! centred at `a - 1/2` and `b + 1/2`. With these rules "primal left-right
//! crossing xor dual top-bottom crossing" holds for every configuration.

use std::collections::VecDeque;

use serde::Serialize;

use crate::field::Bonds;
use crate::geometry::{CrossDomain, DualEdge, DualSite, Edge, LatticeBox, Rect, Region, Site, Step};
use crate::unionfind::UnionFind;
use crate::Error;

/// A set of primal vertices that paths must stay in.
#[derive(Clone, Debug)]
pub struct Mask {
    bound: Rect,
    cells: Option<Vec<bool>>,
}

impl Mask {
    pub fn rect(r: Rect) -> Self {
        Mask { bound: r, cells: None }
    }

    pub fn from_fn(bound: Rect, f: impl Fn(Site) -> bool) -> Self {
        Mask { bound, cells: Some(bound.sites().map(f).collect()) }
    }

    pub fn region(r: &Region) -> Self {
        match r {
            Region::Cross(c) => {
                let c = *c;
                Mask::from_fn(c.bounding(), move |s| c.contains(s))
            }
            _ => Mask::rect(r.bounding()),
        }
    }

    pub fn bound(&self) -> Rect {
        self.bound
    }

    #[inline]
    pub fn contains(&self, s: Site) -> bool {
        self.bound.contains(s)
            && match &self.cells {
                None => true,
                Some(c) => c[self.bound.site_index(s)],
            }
    }

    #[inline]
    pub fn contains_edge(&self, e: Edge) -> bool {
        self.contains(e.base) && self.contains(e.head())
    }
}

/// A 4-neighbour graph embedded in Z^2: either the primal lattice or the dual
/// lattice with faces addressed by their lower-left corner.
pub trait Grid {
    /// Every vertex that can be inside lies in this rectangle.
    fn bounds(&self) -> Rect;
    fn inside(&self, s: Site) -> bool;
    /// Whether the step from `s` is an open edge to an inside vertex.
    /// Only called with `s` inside.
    fn passable(&self, s: Site, step: Step) -> bool;
}

/// `w` restricted to a mask.
pub struct PrimalGrid<'a, B: ?Sized> {
    pub bonds: &'a B,
    pub mask: &'a Mask,
}

impl<B: Bonds + ?Sized> Grid for PrimalGrid<'_, B> {
    fn bounds(&self) -> Rect {
        self.mask.bound
    }

    fn inside(&self, s: Site) -> bool {
        self.mask.contains(s)
    }

    #[inline]
    fn passable(&self, s: Site, step: Step) -> bool {
        self.mask.contains(s.step(step)) && self.bonds.open(Edge::from_step(s, step))
    }
}

/// `w*` restricted to dual edges whose primal partner lies in the mask.
pub struct DualGrid<'a, B: ?Sized> {
    pub bonds: &'a B,
    pub mask: &'a Mask,
}

impl<B: Bonds + ?Sized> Grid for DualGrid<'_, B> {
    fn bounds(&self) -> Rect {
        let b = self.mask.bound;
        Rect { x_min: b.x_min - 1, x_max: b.x_max, y_min: b.y_min - 1, y_max: b.y_max }
    }

    fn inside(&self, s: Site) -> bool {
        self.bounds().contains(s)
    }

    #[inline]
    fn passable(&self, s: Site, step: Step) -> bool {
        let e = DualEdge::from_step(DualSite::new(s.x, s.y), step).primal();
        self.mask.contains_edge(e) && !self.bonds.open(e)
    }
}

/// A grid with extra vertex and edge restrictions.
pub struct Restricted<G, V, E> {
    pub inner: G,
    pub vertex_ok: V,
    pub step_ok: E,
}

impl<G: Grid, V: Fn(Site) -> bool, E: Fn(Site, Step) -> bool> Grid for Restricted<G, V, E> {
    fn bounds(&self) -> Rect {
        self.inner.bounds()
    }

    fn inside(&self, s: Site) -> bool {
        self.inner.inside(s) && (self.vertex_ok)(s)
    }

    fn passable(&self, s: Site, step: Step) -> bool {
        let t = s.step(step);
        self.inner.passable(s, step) && (self.vertex_ok)(t) && (self.step_ok)(s, step)
    }
}

/// Dense boolean set over a rectangle.
#[derive(Clone, Debug)]
pub struct SiteSet {
    rect: Rect,
    bits: Vec<bool>,
}

impl SiteSet {
    pub fn new(rect: Rect) -> Self {
        SiteSet { rect, bits: vec![false; rect.num_sites()] }
    }

    pub fn from_sites(rect: Rect, sites: &[Site]) -> Self {
        let mut s = SiteSet::new(rect);
        for x in sites {
            s.insert(*x);
        }
        s
    }

    #[inline]
    pub fn contains(&self, s: Site) -> bool {
        self.rect.contains(s) && self.bits[self.rect.site_index(s)]
    }

    /// Returns true if newly inserted. Sites outside the rectangle are ignored.
    #[inline]
    pub fn insert(&mut self, s: Site) -> bool {
        if !self.rect.contains(s) {
            return false;
        }
        let i = self.rect.site_index(s);
        !std::mem::replace(&mut self.bits[i], true)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    pub fn iter(&self) -> impl Iterator<Item = Site> + '_ {
        self.rect.sites().zip(self.bits.iter()).filter(|(_, b)| **b).map(|(s, _)| s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Lattice {
    Primal,
    Dual,
}

/// A simple path on one lattice. Dual vertices are stored as the lower-left
/// corner of their face.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathTrace {
    pub lattice: Lattice,
    pub sites: Vec<Site>,
}

impl PathTrace {
    pub fn primal(sites: Vec<Site>) -> Self {
        PathTrace { lattice: Lattice::Primal, sites }
    }

    pub fn dual(sites: Vec<Site>) -> Self {
        PathTrace { lattice: Lattice::Dual, sites }
    }

    pub fn len(&self) -> usize {
        self.sites.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.sites.len() < 2
    }

    pub fn first(&self) -> Site {
        self.sites[0]
    }

    pub fn last(&self) -> Site {
        self.sites[self.sites.len() - 1]
    }

    /// The primal edges traversed, or crossed for a dual path.
    pub fn edges(&self) -> Vec<Edge> {
        self.sites
            .windows(2)
            .filter_map(|w| {
                let e = Edge::between(w[0], w[1])?;
                Some(match self.lattice {
                    Lattice::Primal => e,
                    Lattice::Dual => DualEdge { base: DualSite::new(e.base.x, e.base.y), dir: e.dir }.primal(),
                })
            })
            .collect()
    }

    /// Consecutive vertices adjacent, no repeated vertex, every edge open in
    /// the witnessing configuration (dual-open for dual paths).
    pub fn verify<B: Bonds + ?Sized>(&self, bonds: &B) -> bool {
        if self.sites.is_empty() {
            return false;
        }
        let mut seen = std::collections::HashSet::new();
        if !self.sites.iter().all(|s| seen.insert(*s)) {
            return false;
        }
        if self.sites.windows(2).any(|w| w[0].dist(w[1]) != 1 || (w[0].x != w[1].x && w[0].y != w[1].y)) {
            return false;
        }
        self.edges().into_iter().all(|e| match self.lattice {
            Lattice::Primal => bonds.open(e),
            Lattice::Dual => !bonds.open(e),
        })
    }

    /// Coordinates in the plane: dual vertices sit at half-integers.
    pub fn coordinates(&self) -> Vec<[f64; 2]> {
        let off = if self.lattice == Lattice::Dual { 0.5 } else { 0.0 };
        self.sites.iter().map(|s| [s.x as f64 + off, s.y as f64 + off]).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "kind": self.lattice, "vertices": self.coordinates() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Direction {
    LeftRight,
    TopBottom,
}

/// Which extremal crossing to extract.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    RightMost,
    LeftMost,
    BottomMost,
    TopMost,
}

/// Turn preference for boundary-hugging searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hand {
    /// Clockwise turns first.
    Right,
    /// Counter-clockwise turns first.
    Left,
}

/// Multi-source BFS; returns the reached set.
pub fn reach<G: Grid>(g: &G, sources: &[Site]) -> SiteSet {
    let mut seen = SiteSet::new(g.bounds());
    let mut queue = VecDeque::new();
    for &s in sources {
        if g.inside(s) && seen.insert(s) {
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        for step in Step::ALL {
            if g.passable(s, step) {
                let t = s.step(step);
                if seen.insert(t) {
                    queue.push_back(t);
                }
            }
        }
    }
    seen
}

/// Whether some source reaches a target, with early exit.
pub fn reaches<G: Grid>(g: &G, sources: &[Site], is_target: impl Fn(Site) -> bool) -> bool {
    path_between(g, sources, is_target, false).is_some()
}

/// Shortest path from a source to a target, or just an existence flag if
/// `want_path` is false (the returned path is then empty).
pub fn path_between<G: Grid>(
    g: &G,
    sources: &[Site],
    is_target: impl Fn(Site) -> bool,
    want_path: bool,
) -> Option<Vec<Site>> {
    let b = g.bounds();
    let mut parent: Vec<u32> = vec![u32::MAX; b.num_sites()];
    let root = u32::MAX - 1;
    // depth-first order is faster to terminate when targets are far; BFS
    // gives shorter witnesses, which is what we want when asked for a path
    let mut stack: VecDeque<Site> = VecDeque::new();
    for &s in sources {
        if !g.inside(s) {
            continue;
        }
        let i = b.site_index(s);
        if parent[i] != u32::MAX {
            continue;
        }
        parent[i] = root;
        if is_target(s) {
            return Some(if want_path { vec![s] } else { Vec::new() });
        }
        stack.push_back(s);
    }
    while let Some(s) = if want_path { stack.pop_front() } else { stack.pop_back() } {
        for step in Step::ALL {
            if !g.passable(s, step) {
                continue;
            }
            let t = s.step(step);
            let j = b.site_index(t);
            if parent[j] != u32::MAX {
                continue;
            }
            parent[j] = b.site_index(s) as u32;
            if is_target(t) {
                if !want_path {
                    return Some(Vec::new());
                }
                let w = b.width() as usize + 1;
                let mut path = vec![t];
                let mut k = parent[j];
                while k != root {
                    let k_us = k as usize;
                    path.push(Site::new(b.x_min + (k_us % w) as i32, b.y_min + (k_us / w) as i32));
                    k = parent[k_us];
                }
                path.reverse();
                return Some(path);
            }
            stack.push_back(t);
        }
    }
    None
}

/// Whether an open path inside `mask` joins `a` to `b`.
pub fn connected<B: Bonds + ?Sized>(bonds: &B, a: &[Site], b: &[Site], mask: &Mask) -> bool {
    let targets = SiteSet::from_sites(mask.bound, b);
    let g = PrimalGrid { bonds, mask };
    reaches(&g, a, |s| targets.contains(s))
}

/// As [`connected`], returning a witness path.
pub fn connecting_path<B: Bonds + ?Sized>(bonds: &B, a: &[Site], b: &[Site], mask: &Mask) -> Option<PathTrace> {
    let targets = SiteSet::from_sites(mask.bound, b);
    let g = PrimalGrid { bonds, mask };
    path_between(&g, a, |s| targets.contains(s), true).map(PathTrace::primal)
}

/// Cluster labels of `w` restricted to a mask.
#[derive(Clone, Debug)]
pub struct ClusterLabeling {
    rect: Rect,
    labels: Vec<u32>,
}

impl ClusterLabeling {
    const OUTSIDE: u32 = u32::MAX;

    pub fn new<G: Grid>(g: &G) -> Self {
        let rect = g.bounds();
        let mut uf = UnionFind::new(rect.num_sites());
        for s in rect.sites() {
            if !g.inside(s) {
                continue;
            }
            for step in [Step::E, Step::N] {
                if g.passable(s, step) {
                    uf.merge(rect.site_index(s), rect.site_index(s.step(step)));
                }
            }
        }
        let labels = rect
            .sites()
            .map(|s| if g.inside(s) { uf.find(rect.site_index(s)) as u32 } else { Self::OUTSIDE })
            .collect();
        ClusterLabeling { rect, labels }
    }

    pub fn primal<B: Bonds + ?Sized>(bonds: &B, mask: &Mask) -> Self {
        Self::new(&PrimalGrid { bonds, mask })
    }

    pub fn dual<B: Bonds + ?Sized>(bonds: &B, mask: &Mask) -> Self {
        Self::new(&DualGrid { bonds, mask })
    }

    pub fn label(&self, s: Site) -> Option<u32> {
        if !self.rect.contains(s) {
            return None;
        }
        let l = self.labels[self.rect.site_index(s)];
        (l != Self::OUTSIDE).then_some(l)
    }

    pub fn same(&self, a: Site, b: Site) -> bool {
        matches!((self.label(a), self.label(b)), (Some(x), Some(y)) if x == y)
    }

    /// Labels of every cluster meeting `sites`, sorted.
    pub fn labels_of(&self, sites: &[Site]) -> Vec<u32> {
        let mut v: Vec<u32> = sites.iter().filter_map(|s| self.label(*s)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn touches(&self, sites: &[Site], labels: &[u32]) -> bool {
        sites.iter().filter_map(|s| self.label(*s)).any(|l| labels.binary_search(&l).is_ok())
    }
}

fn crossing_ends(r: &Rect, dir: Direction) -> (Vec<Site>, impl Fn(Site) -> bool) {
    let r = *r;
    match dir {
        Direction::LeftRight => (r.left_column(), Box::new(move |s: Site| s.x == r.x_max) as Box<dyn Fn(Site) -> bool>),
        Direction::TopBottom => (r.bottom_row(), Box::new(move |s: Site| s.y == r.y_max) as Box<dyn Fn(Site) -> bool>),
    }
}

/// Primal crossing of `r` in `w` inside `r`.
pub fn crosses<B: Bonds + ?Sized>(bonds: &B, r: &Rect, dir: Direction) -> bool {
    let mask = Mask::rect(*r);
    let (src, tgt) = crossing_ends(r, dir);
    reaches(&PrimalGrid { bonds, mask: &mask }, &src, tgt)
}

pub fn crossing_path<B: Bonds + ?Sized>(bonds: &B, r: &Rect, dir: Direction) -> Option<PathTrace> {
    let mask = Mask::rect(*r);
    let (src, tgt) = crossing_ends(r, dir);
    path_between(&PrimalGrid { bonds, mask: &mask }, &src, tgt, true).map(PathTrace::primal)
}

fn dual_crossing_ends(r: &Rect, dir: Direction) -> (Vec<Site>, impl Fn(Site) -> bool) {
    let r = *r;
    match dir {
        Direction::TopBottom => (
            (r.x_min..r.x_max).map(|x| Site::new(x, r.y_min - 1)).collect(),
            Box::new(move |s: Site| s.y == r.y_max) as Box<dyn Fn(Site) -> bool>,
        ),
        Direction::LeftRight => (
            (r.y_min..r.y_max).map(|y| Site::new(r.x_min - 1, y)).collect(),
            Box::new(move |s: Site| s.x == r.x_max) as Box<dyn Fn(Site) -> bool>,
        ),
    }
}

/// Dual crossing of `r` in `w*`; see the module docs for the conventions.
pub fn dual_crosses<B: Bonds + ?Sized>(bonds: &B, r: &Rect, dir: Direction) -> bool {
    let mask = Mask::rect(*r);
    let (src, tgt) = dual_crossing_ends(r, dir);
    reaches(&DualGrid { bonds, mask: &mask }, &src, tgt)
}

pub fn dual_crossing_path<B: Bonds + ?Sized>(bonds: &B, r: &Rect, dir: Direction) -> Option<PathTrace> {
    let mask = Mask::rect(*r);
    let (src, tgt) = dual_crossing_ends(r, dir);
    path_between(&DualGrid { bonds, mask: &mask }, &src, tgt, true).map(PathTrace::dual)
}

/// Depth-first search that always tries the most clockwise (or most
/// counter-clockwise) continuation first, with a global visited set. Sources
/// are tried in the given order. The path found is trimmed so that it meets
/// the sources only at its start and the targets only at its end.
///
/// Started from the extremal end of the source arc, this returns the
/// crossing that hugs the `hand` side of the domain.
pub fn extremal_search<G: Grid>(
    g: &G,
    sources: &[Site],
    is_target: impl Fn(Site) -> bool,
    heading: Step,
    hand: Hand,
) -> Option<Vec<Site>> {
    let b = g.bounds();
    let mut visited = SiteSet::new(b);
    let is_source = SiteSet::from_sites(b, sources);
    let order = |h: Step| -> [Step; 4] {
        match hand {
            Hand::Right => [h.cw(), h, h.ccw(), h.reverse()],
            Hand::Left => [h.ccw(), h, h.cw(), h.reverse()],
        }
    };
    // stack frames: (site, heading on arrival, next option index)
    let mut stack: Vec<(Site, Step, u8)> = Vec::new();
    for &s in sources {
        if !g.inside(s) || !visited.insert(s) {
            continue;
        }
        if is_target(s) {
            return Some(vec![s]);
        }
        stack.push((s, heading, 0));
        while let Some(&(site, h, k)) = stack.last() {
            // only the source frame may turn back
            let limit = if stack.len() == 1 { 4 } else { 3 };
            if k as usize >= limit {
                stack.pop();
                continue;
            }
            let depth = stack.len() - 1;
            stack[depth].2 += 1;
            let step = order(h)[k as usize];
            if !g.passable(site, step) {
                continue;
            }
            let t = site.step(step);
            if !visited.insert(t) {
                continue;
            }
            if is_target(t) {
                let mut path: Vec<Site> = stack.iter().map(|f| f.0).collect();
                path.push(t);
                let start = path.iter().rposition(|v| is_source.contains(*v)).unwrap_or(0);
                return Some(path.split_off(start));
            }
            stack.push((t, step, 0));
        }
    }
    None
}

/// Extremal crossing of `r`. Vertical crossings (bottom to top) come in
/// right-most and left-most flavours, horizontal ones (left to right) in
/// bottom-most and top-most.
pub fn extremal_crossing<B: Bonds + ?Sized>(
    bonds: &B,
    r: &Rect,
    side: Side,
    dir: Direction,
) -> Result<Option<PathTrace>, Error> {
    let mask = Mask::rect(*r);
    let g = PrimalGrid { bonds, mask: &mask };
    let r = *r;
    let found = match (side, dir) {
        (Side::RightMost, Direction::TopBottom) => {
            let src: Vec<Site> = r.bottom_row().into_iter().rev().collect();
            extremal_search(&g, &src, |s| s.y == r.y_max, Step::N, Hand::Right)
        }
        (Side::LeftMost, Direction::TopBottom) => {
            extremal_search(&g, &r.bottom_row(), |s| s.y == r.y_max, Step::N, Hand::Left)
        }
        (Side::BottomMost, Direction::LeftRight) => {
            extremal_search(&g, &r.left_column(), |s| s.x == r.x_max, Step::E, Hand::Right)
        }
        (Side::TopMost, Direction::LeftRight) => {
            let src: Vec<Site> = r.left_column().into_iter().rev().collect();
            extremal_search(&g, &src, |s| s.x == r.x_max, Step::E, Hand::Left)
        }
        _ => {
            return Err(Error::InvalidParameter(format!("{side:?} is not a side of a {dir:?} crossing")));
        }
    };
    Ok(found.map(PathTrace::primal))
}

/// Lowest path of `w` inside the cross domain from its left side to its
/// right side.
pub fn lowest_crossing<B: Bonds + ?Sized>(bonds: &B, c: &CrossDomain) -> Option<PathTrace> {
    let mask = Mask::region(&Region::Cross(*c));
    let g = PrimalGrid { bonds, mask: &mask };
    let right = SiteSet::from_sites(c.bounding(), &c.right_side());
    extremal_search(&g, &c.left_side(), |s| right.contains(s), Step::E, Hand::Right).map(PathTrace::primal)
}

/// `Lambda_n <-> dLambda_N` inside `Lambda_N`, with early exit.
pub fn box_to_box<B: Bonds + ?Sized>(bonds: &B, center: Site, n: i32, big_n: i32) -> bool {
    let outer = LatticeBox::new(center, big_n);
    let mask = Mask::rect(outer.rect());
    let inner = LatticeBox::new(center, n).boundary();
    reaches(&PrimalGrid { bonds, mask: &mask }, &inner, |s| outer.on_boundary(s))
}

/// Largest `k <= big_n` with `0 <-> dLambda_k` inside `Lambda_big_n`.
pub fn arm_radius<B: Bonds + ?Sized>(bonds: &B, big_n: i32) -> i32 {
    let mask = Mask::rect(LatticeBox::at_origin(big_n).rect());
    let g = PrimalGrid { bonds, mask: &mask };
    // outward-first depth-first search that stops at the outer boundary
    let b = g.bounds();
    let mut seen = SiteSet::new(b);
    let mut stack = vec![Site::ORIGIN];
    seen.insert(Site::ORIGIN);
    let mut best = 0;
    while let Some(s) = stack.pop() {
        let d = s.dist(Site::ORIGIN);
        best = best.max(d);
        if best == big_n {
            break;
        }
        // push inward steps first so outward ones are popped first
        let mut steps = Step::ALL;
        steps.sort_by_key(|st| s.step(*st).dist(Site::ORIGIN));
        for st in steps {
            if g.passable(s, st) {
                let t = s.step(st);
                if seen.insert(t) {
                    stack.push(t);
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Constant, CoupledField, EdgeSet};

    fn unit() -> Rect {
        Rect::new(0, 1, 0, 1).unwrap()
    }

    #[test]
    fn extremes() {
        let b5 = LatticeBox::at_origin(5);
        let mask = Mask::rect(b5.rect());
        assert!(connected(&Constant(true), &[Site::ORIGIN], &b5.boundary(), &mask));
        assert!(!connected(&Constant(false), &[Site::ORIGIN], &b5.boundary(), &mask));
        assert!(!connected(&Constant(true), &[], &b5.boundary(), &mask));
        let r = Rect::new(0, 5, 0, 3).unwrap();
        assert!(crosses(&Constant(true), &r, Direction::LeftRight));
        assert!(dual_crosses(&Constant(false), &r, Direction::LeftRight));
        assert!(dual_crosses(&Constant(false), &r, Direction::TopBottom));
        assert!(!dual_crosses(&Constant(true), &r, Direction::TopBottom));
    }

    #[test]
    fn one_step_arm_enumerated() {
        // P[0 <-> dLambda_1] = 1 - (1-p)^4
        let r = LatticeBox::at_origin(1).rect();
        let mask = Mask::rect(r);
        let edges = r.edges();
        let mut hits = 0u32;
        for m in 0..1u64 << edges.len() {
            let c = EdgeSet::from_mask(r, &edges, m);
            if connected(&c, &[Site::ORIGIN], &LatticeBox::at_origin(1).boundary(), &mask) {
                hits += 1;
            }
        }
        assert_eq!(hits as f64 / 4096.0, 15.0 / 16.0);
    }

    #[test]
    fn unit_square_crossing_enumerated() {
        let edges = unit().edges();
        let hits = (0..16u64)
            .filter(|m| crosses(&EdgeSet::from_mask(unit(), &edges, *m), &unit(), Direction::LeftRight))
            .count();
        assert_eq!(hits, 12);
    }

    #[test]
    fn duality_exhaustive_small() {
        for r in [Rect::new(0, 2, 0, 1).unwrap(), Rect::new(0, 1, 0, 2).unwrap(), unit()] {
            let edges = r.edges();
            let mut hits = 0;
            for m in 0..1u64 << edges.len() {
                let c = EdgeSet::from_mask(r, &edges, m);
                let lr = crosses(&c, &r, Direction::LeftRight);
                assert!(lr ^ dual_crosses(&c, &r, Direction::TopBottom));
                let tb = crosses(&c, &r, Direction::TopBottom);
                assert!(tb ^ dual_crosses(&c, &r, Direction::LeftRight));
                hits += lr as u32;
            }
            if r.width() == 2 {
                assert_eq!(hits * 2, 1 << edges.len());
            }
        }
    }

    #[test]
    fn witnesses_are_valid() {
        let r = Rect::new(0, 9, 0, 6).unwrap();
        for k in 0..200 {
            let c = CoupledField::new(3, k).at(0.5);
            if let Some(p) = crossing_path(&c, &r, Direction::LeftRight) {
                assert!(p.verify(&c));
                assert_eq!(p.first().x, 0);
                assert_eq!(p.last().x, 9);
            } else {
                let d = dual_crossing_path(&c, &r, Direction::TopBottom).unwrap();
                assert!(d.verify(&c));
                assert_eq!(d.first().y, -1);
                assert_eq!(d.last().y, 6);
            }
        }
    }

    #[test]
    fn labeling_matches_connected() {
        let r = Rect::new(-4, 4, -3, 3).unwrap();
        let mask = Mask::rect(r);
        for k in 0..50 {
            let c = CoupledField::new(9, k).at(0.5);
            let lab = ClusterLabeling::primal(&c, &mask);
            for (i, a) in r.sites().enumerate().step_by(7) {
                for b in r.sites().skip(i % 5).step_by(11) {
                    assert_eq!(lab.same(a, b), connected(&c, &[a], &[b], &mask));
                }
            }
        }
    }

    #[test]
    fn extremal_all_open() {
        let r = Rect::new(0, 3, 0, 3).unwrap();
        let p = extremal_crossing(&Constant(true), &r, Side::RightMost, Direction::TopBottom).unwrap().unwrap();
        assert_eq!(p.sites, (0..=3).map(|y| Site::new(3, y)).collect::<Vec<_>>());
        let p = extremal_crossing(&Constant(true), &r, Side::LeftMost, Direction::TopBottom).unwrap().unwrap();
        assert!(p.sites.iter().all(|s| s.x == 0));
        let p = extremal_crossing(&Constant(true), &r, Side::BottomMost, Direction::LeftRight).unwrap().unwrap();
        assert!(p.sites.iter().all(|s| s.y == 0));
        let p = extremal_crossing(&Constant(true), &r, Side::TopMost, Direction::LeftRight).unwrap().unwrap();
        assert!(p.sites.iter().all(|s| s.y == 3));
        assert!(extremal_crossing(&Constant(false), &r, Side::TopMost, Direction::LeftRight).unwrap().is_none());
        assert!(extremal_crossing(&Constant(true), &r, Side::TopMost, Direction::TopBottom).is_err());
    }

    #[test]
    fn lowest_cross_all_open() {
        let c = CrossDomain::new(2);
        let p = lowest_crossing(&Constant(true), &c).unwrap();
        assert!(p.verify(&Constant(true)));
        assert_eq!(p.first(), Site::new(-2, -4));
        assert!(lowest_crossing(&Constant(false), &c).is_none());
    }

    #[test]
    fn arm_radius_matches_box_to_box() {
        for k in 0..100 {
            let c = CoupledField::new(2, k).at(0.5);
            let r = arm_radius(&c, 12);
            for n in [1, 3, 6, 12] {
                assert_eq!(r >= n, box_to_box(&c, Site::ORIGIN, 0, n), "sample {k} radius {r} n {n}");
            }
        }
    }
}
