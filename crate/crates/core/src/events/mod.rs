//! Event detectors on single configurations and coupled pairs.
//!
//! Detectors that involve two parameters take the lower configuration `lo`
//! (`w_p`) and the upper one `hi` (`w_p'`) as separate [`Bonds`] so that the
//! same code runs on sampled fields and on enumerated configurations. The
//! caller guarantees `lo <= hi` edge-wise.

mod switch;
mod three_arm;

pub use switch::{
    count_closed_pivotal_switches, count_closed_pivotal_switches_slow, detect_switch, extremal_dual_connector,
    is_pivotal_switch, switch_open, SwitchRecord, SwitchRegion,
};
pub use three_arm::{bad_event, mixed_three_arm, mixed_three_arm_unchecked, EtaLadder};

use crate::arms::{find_arms, ArmSpec, Constraint};
use crate::connectivity::{
    box_to_box, crossing_path, dual_crossing_path, path_between, ClusterLabeling, Direction, DualGrid, Lattice,
    Mask, PathTrace, PrimalGrid, Restricted,
};
use crate::field::{Bonds, Configuration, CoupledField};
use crate::geometry::{dual_of, Edge, LatticeBox, Rect, Site, Step};
use crate::{check_params, Error};

/// `(w_p, w_p')` read off one field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoupledPair {
    pub field: CoupledField,
    pub p: f64,
    pub p_prime: f64,
}

impl CoupledPair {
    pub fn new(field: CoupledField, p: f64, p_prime: f64) -> Result<Self, Error> {
        check_params(p, p_prime)?;
        Ok(CoupledPair { field, p, p_prime })
    }

    pub fn lower(&self) -> Configuration {
        self.field.at(self.p)
    }

    pub fn upper(&self) -> Configuration {
        self.field.at(self.p_prime)
    }
}

/// Whether an event occurred, with witness paths when it did.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EventOutcome {
    pub occurred: bool,
    pub witnesses: Vec<PathTrace>,
}

impl EventOutcome {
    pub fn no() -> Self {
        EventOutcome::default()
    }

    pub fn yes(witnesses: Vec<PathTrace>) -> Self {
        EventOutcome { occurred: true, witnesses }
    }
}

fn require_scale(n: i32) -> Result<(), Error> {
    if n < 1 {
        return Err(Error::InvalidParameter(format!("scale must be at least 1, got {n}")));
    }
    Ok(())
}

/// `w_p'` crosses `H_n` left to right and `w_p` does not cross `V_n`.
pub fn delta_event<L: Bonds + ?Sized, H: Bonds + ?Sized>(lo: &L, hi: &H, n: i32) -> Result<EventOutcome, Error> {
    require_scale(n)?;
    let Some(primal) = crossing_path(hi, &Rect::horizontal(n), Direction::LeftRight) else {
        return Ok(EventOutcome::no());
    };
    match dual_crossing_path(lo, &Rect::vertical(n), Direction::TopBottom) {
        Some(dual) => Ok(EventOutcome::yes(vec![primal, dual])),
        None => Ok(EventOutcome::no()),
    }
}

/// Boolean form of [`delta_event`] without witnesses.
pub fn delta<L: Bonds + ?Sized, H: Bonds + ?Sized>(lo: &L, hi: &H, n: i32) -> bool {
    use crate::connectivity::crosses;
    crosses(hi, &Rect::horizontal(n), Direction::LeftRight) && !crosses(lo, &Rect::vertical(n), Direction::LeftRight)
}

/// `Lambda_n <-> dLambda_N`; with `n = 0` this is the one-arm event of `theta_N`.
pub fn one_arm<B: Bonds + ?Sized>(bonds: &B, n: i32, big_n: i32) -> Result<bool, Error> {
    if n < 0 || n >= big_n {
        return Err(Error::InvalidParameter(format!("one-arm needs 0 <= n < N, got n={n}, N={big_n}")));
    }
    Ok(box_to_box(bonds, Site::ORIGIN, n, big_n))
}

/// A mixed pivotal edge with its two crossing paths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixedPivotal {
    pub edge: Edge,
    pub primal: PathTrace,
    pub dual: PathTrace,
}

/// The window of a mixed-pivotal search and its boundary targets.
struct Window {
    center: Site,
    n: i32,
    mask: Mask,
}

impl Window {
    fn new(center: Site, n: i32) -> Self {
        Window { center, n, mask: Mask::rect(LatticeBox::new(center, 2 * n).rect()) }
    }

    fn on_boundary(&self, s: Site) -> bool {
        s.dist(self.center) == 2 * self.n
    }

    /// Dual vertices just outside the window.
    fn on_ring(&self, f: Site) -> bool {
        let (dx, dy) = (f.x - self.center.x, f.y - self.center.y);
        let m = 2 * self.n;
        (dx == -m - 1 || dx == m || dy == -m - 1 || dy == m) && (-m - 1..=m).contains(&dx) && (-m - 1..=m).contains(&dy)
    }

    fn ring(&self) -> Vec<Site> {
        let m = 2 * self.n;
        let c = self.center;
        let mut v = Vec::new();
        for j in -m - 1..=m {
            for i in -m - 1..=m {
                let f = Site::new(c.x + i, c.y + j);
                if self.on_ring(f) {
                    v.push(f);
                }
            }
        }
        v
    }

    fn candidates(&self) -> Vec<Edge> {
        LatticeBox::new(self.center, self.n).rect().edges()
    }
}

/// Labelings shared by every candidate edge of one window.
struct PivotalScan<'a, L: ?Sized, H: ?Sized> {
    lo: &'a L,
    hi: &'a H,
    win: Window,
    hi_primal: ClusterLabeling,
    hi_boundary: Vec<u32>,
    lo_dual: ClusterLabeling,
    lo_ring: Vec<u32>,
    lo_primal: ClusterLabeling,
    lo_boundary: Vec<u32>,
    hi_dual: ClusterLabeling,
    hi_ring: Vec<u32>,
}

impl<'a, L: Bonds + ?Sized, H: Bonds + ?Sized> PivotalScan<'a, L, H> {
    fn new(lo: &'a L, hi: &'a H, center: Site, n: i32) -> Self {
        let win = Window::new(center, n);
        let boundary = LatticeBox::new(center, 2 * n).boundary();
        let ring = win.ring();
        let hi_primal = ClusterLabeling::primal(hi, &win.mask);
        let lo_dual = ClusterLabeling::dual(lo, &win.mask);
        let lo_primal = ClusterLabeling::primal(lo, &win.mask);
        let hi_dual = ClusterLabeling::dual(hi, &win.mask);
        PivotalScan {
            lo,
            hi,
            hi_boundary: hi_primal.labels_of(&boundary),
            lo_ring: lo_dual.labels_of(&ring),
            lo_boundary: lo_primal.labels_of(&boundary),
            hi_ring: hi_dual.labels_of(&ring),
            hi_primal,
            lo_dual,
            lo_primal,
            hi_dual,
            win,
        }
    }

    fn faces(e: Edge) -> (Site, Site) {
        let d = dual_of(e);
        let (a, b) = (d.base, d.head());
        (Site::new(a.x, a.y), Site::new(b.x, b.y))
    }

    /// Exact test at one edge. `want_witness` asks for the two paths.
    fn test(&self, e: Edge, want_witness: bool) -> Option<MixedPivotal> {
        if self.lo.open(e) || !self.hi.open(e) {
            return None;
        }
        let (u, v) = e.endpoints();
        let (f1, f2) = Self::faces(e);
        let touches = |lab: &ClusterLabeling, labels: &[u32], s: Site| lab.touches(&[s], labels);
        // necessary: both sides reach the boundary with every mixed edge on their side
        if !touches(&self.hi_primal, &self.hi_boundary, u) || !touches(&self.lo_dual, &self.lo_ring, f1) {
            return None;
        }
        let win = &self.win;
        let not_e = |s: Site, st: Step| Edge::from_step(s, st) != e;
        let not_e_dual = |s: Site, st: Step| crate::arms::step_edge(Lattice::Dual, s, st) != e;
        let all = |_: Site| true;
        let on_boundary = |s: Site| win.on_boundary(s);
        let on_ring = |f: Site| win.on_ring(f);

        // sufficient: arms without any mixed edge cannot conflict
        let easy = touches(&self.lo_primal, &self.lo_boundary, u)
            && touches(&self.lo_primal, &self.lo_boundary, v)
            && touches(&self.hi_dual, &self.hi_ring, f1)
            && touches(&self.hi_dual, &self.hi_ring, f2);
        if easy && !want_witness {
            return Some(MixedPivotal { edge: e, primal: PathTrace::primal(vec![]), dual: PathTrace::dual(vec![]) });
        }
        let arms_found = if easy {
            let pg = PrimalGrid { bonds: self.lo, mask: &win.mask };
            let dg = DualGrid { bonds: self.hi, mask: &win.mask };
            let a = path_between(&pg, &[u], on_boundary, true);
            let b = path_between(&pg, &[v], on_boundary, true);
            let c = path_between(&dg, &[f1], on_ring, true);
            let d = path_between(&dg, &[f2], on_ring, true);
            Some(vec![a?, b?, c?, d?])
        } else {
            let pg = Restricted { inner: PrimalGrid { bonds: self.hi, mask: &win.mask }, vertex_ok: all, step_ok: not_e };
            let dg = Restricted { inner: DualGrid { bonds: self.lo, mask: &win.mask }, vertex_ok: all, step_ok: not_e_dual };
            let arms = [
                ArmSpec { grid: &pg, lattice: Lattice::Primal, sources: vec![u], target: &on_boundary },
                ArmSpec { grid: &pg, lattice: Lattice::Primal, sources: vec![v], target: &on_boundary },
                ArmSpec { grid: &dg, lattice: Lattice::Dual, sources: vec![f1], target: &on_ring },
                ArmSpec { grid: &dg, lattice: Lattice::Dual, sources: vec![f2], target: &on_ring },
            ];
            let cons = [
                Constraint::NoCross(0, 2),
                Constraint::NoCross(0, 3),
                Constraint::NoCross(1, 2),
                Constraint::NoCross(1, 3),
            ];
            find_arms(&arms, &cons)
        };
        let arms = arms_found?;
        Some(MixedPivotal { edge: e, primal: join(&arms[0], &arms[1]), dual: join_dual(&arms[2], &arms[3]) })
    }
}

/// Two arms glued at their sources into one simple path. Arms found
/// separately may share vertices; the shortcut keeps the result simple.
fn glue(a: &[Site], b: &[Site]) -> Vec<Site> {
    let mut path: Vec<Site> = a.iter().rev().copied().collect();
    path.extend_from_slice(b);
    loop_erase(path)
}

fn loop_erase(path: Vec<Site>) -> Vec<Site> {
    let mut out: Vec<Site> = Vec::with_capacity(path.len());
    for s in path {
        if let Some(k) = out.iter().position(|t| *t == s) {
            out.truncate(k + 1);
        } else {
            out.push(s);
        }
    }
    out
}

fn join(a: &[Site], b: &[Site]) -> PathTrace {
    PathTrace::primal(glue(a, b))
}

fn join_dual(a: &[Site], b: &[Site]) -> PathTrace {
    PathTrace::dual(glue(a, b))
}

/// Mixed pivotal at scale `n` in the window `Lambda_2n(center)`: an edge of
/// `Lambda_n(center)` carrying a `w_p'` path and a `w_p*` path, both from the
/// window boundary to itself, meeting only at the edge's midpoint. The dual
/// path ends on the faces just outside the window.
pub fn mixed_pivotal<L: Bonds + ?Sized, H: Bonds + ?Sized>(
    lo: &L,
    hi: &H,
    n: i32,
    center: Site,
) -> Result<EventOutcome, Error> {
    require_scale(n)?;
    Ok(match find_mixed_pivotal(lo, hi, n, center, true) {
        Some(m) => EventOutcome::yes(vec![m.primal, m.dual]),
        None => EventOutcome::no(),
    })
}

/// Boolean form of [`mixed_pivotal`].
pub fn has_mixed_pivotal<L: Bonds + ?Sized, H: Bonds + ?Sized>(lo: &L, hi: &H, n: i32, center: Site) -> bool {
    find_mixed_pivotal(lo, hi, n, center, false).is_some()
}

/// The first mixed pivotal in edge order, if any.
pub fn find_mixed_pivotal<L: Bonds + ?Sized, H: Bonds + ?Sized>(
    lo: &L,
    hi: &H,
    n: i32,
    center: Site,
    want_witness: bool,
) -> Option<MixedPivotal> {
    let win = Window::new(center, n);
    let cands: Vec<Edge> = win.candidates().into_iter().filter(|e| !lo.open(*e) && hi.open(*e)).collect();
    if cands.is_empty() {
        return None;
    }
    let scan = PivotalScan::new(lo, hi, center, n);
    cands.into_iter().find_map(|e| scan.test(e, want_witness))
}

/// Every mixed pivotal edge of the window, for differential testing.
pub fn mixed_pivotal_edges<L: Bonds + ?Sized, H: Bonds + ?Sized>(lo: &L, hi: &H, n: i32, center: Site) -> Vec<Edge> {
    let scan = PivotalScan::new(lo, hi, center, n);
    scan.win.candidates().into_iter().filter(|e| scan.test(*e, false).is_some()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Constant, EdgeSet};

    #[test]
    fn delta_extremes() {
        let f = CoupledField::new(1, 0);
        for k in 0..50 {
            let f = CoupledField::new(1, k);
            assert!(!delta(&f.at(0.5), &f.at(0.5), 3));
        }
        assert!(delta(&f.at(0.0), &f.at(1.0), 2));
        assert!(delta_event(&f.at(0.0), &f.at(1.0), 2).unwrap().occurred);
        assert!(delta_event(&f.at(0.0), &f.at(1.0), 0).is_err());
    }

    #[test]
    fn mixed_pivotal_extremes() {
        for n in 1..4 {
            let out = mixed_pivotal(&Constant(false), &Constant(true), n, Site::ORIGIN).unwrap();
            assert!(out.occurred);
            assert!(out.witnesses[0].verify(&Constant(true)));
            assert!(out.witnesses[1].verify(&Constant(false)));
            assert!(!has_mixed_pivotal(&Constant(true), &Constant(true), n, Site::ORIGIN));
            assert!(!has_mixed_pivotal(&Constant(false), &Constant(false), n, Site::ORIGIN));
        }
    }

    #[test]
    fn single_mixed_edge_on_a_line() {
        // primal line y = 0 open at p' with the central edge mixed; dual
        // column through it open at p
        let r = LatticeBox::at_origin(2).rect();
        let mut lo = EdgeSet::empty(r);
        let mut hi = EdgeSet::empty(r);
        for x in -2..2 {
            hi.set(Edge::east(x, 0), true);
            if x != 0 {
                lo.set(Edge::east(x, 0), true);
            }
        }
        assert!(has_mixed_pivotal(&lo, &hi, 1, Site::ORIGIN));
        assert_eq!(mixed_pivotal_edges(&lo, &hi, 1, Site::ORIGIN), vec![Edge::east(0, 0)]);
        // walling in the face above the edge at p kills it
        for e in [Edge::north(0, 0), Edge::north(1, 0), Edge::east(0, 1)] {
            lo.set(e, true);
            hi.set(e, true);
        }
        assert!(!has_mixed_pivotal(&lo, &hi, 1, Site::ORIGIN));
    }

    #[test]
    fn delta_implies_mixed_pivotal_on_samples() {
        for k in 0..3000 {
            let f = CoupledField::new(17, k);
            let (lo, hi) = (f.at(0.45), f.at(0.6));
            if delta(&lo, &hi, 2) {
                assert!(has_mixed_pivotal(&lo, &hi, 2, Site::ORIGIN), "sample {k}");
            }
        }
    }

    #[test]
    fn witnesses_meet_only_at_the_edge() {
        for k in 0..300 {
            let f = CoupledField::new(5, k);
            let (lo, hi) = (f.at(0.4), f.at(0.65));
            if let Some(m) = find_mixed_pivotal(&lo, &hi, 2, Site::ORIGIN, true) {
                assert!(m.primal.verify(&hi));
                assert!(m.dual.verify(&lo));
                let pe: std::collections::HashSet<Edge> = m.primal.edges().into_iter().collect();
                let shared: Vec<Edge> = m.dual.edges().into_iter().filter(|e| pe.contains(e)).collect();
                assert_eq!(shared, vec![m.edge]);
            }
        }
    }
}
