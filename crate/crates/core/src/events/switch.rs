//! Switches: two extremal primal vertical crossings flanking a box, joined at
//! the bottom and at the top by extremal dual connectors.
//!
//! Regions are computed on the doubled lattice, where sites, edge midpoints
//! and face centres are all integer points. A path is a chain of unit
//! segments through the points it visits; the plane is cut along those
//! segments, and a region is a connected set of unit squares.

use std::collections::VecDeque;

use crate::connectivity::{
    extremal_crossing, extremal_search, path_between, ClusterLabeling, Direction, DualGrid, Hand, Mask, PathTrace,
    PrimalGrid, Restricted, Side,
};
use crate::field::Bonds;
use crate::geometry::{dual_of, switch_grid, Edge, LatticeBox, Point2, Rect, Site, Step};
use crate::Error;

/// Unit squares of a doubled-lattice rectangle, with walls along path
/// segments.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Plane {
    x0: i64,
    y0: i64,
    /// Points per row and per column.
    w: i64,
    h: i64,
    /// Segment from `(i, j)` to `(i + 1, j)`.
    h_wall: Vec<bool>,
    /// Segment from `(i, j)` to `(i, j + 1)`.
    v_wall: Vec<bool>,
    /// Squares by lower-left corner.
    reached: Vec<bool>,
}

impl Plane {
    /// The doubled image of `r`.
    fn over(r: &Rect) -> Self {
        let (x0, y0) = (2 * r.x_min as i64, 2 * r.y_min as i64);
        let (w, h) = (2 * r.width() as i64 + 1, 2 * r.height() as i64 + 1);
        let n = (w * h) as usize;
        Plane { x0, y0, w, h, h_wall: vec![false; n], v_wall: vec![false; n], reached: vec![false; n] }
    }

    fn point_index(&self, p: Point2) -> Option<usize> {
        let (i, j) = (p.x - self.x0, p.y - self.y0);
        ((0..self.w).contains(&i) && (0..self.h).contains(&j)).then_some((j * self.w + i) as usize)
    }

    fn square_index(&self, p: Point2) -> Option<usize> {
        let (i, j) = (p.x - self.x0, p.y - self.y0);
        ((0..self.w - 1).contains(&i) && (0..self.h - 1).contains(&j)).then_some((j * self.w + i) as usize)
    }

    /// Cuts the plane along the unit segment `a`-`b`.
    fn wall(&mut self, a: Point2, b: Point2) {
        let lo = Point2::new(a.x.min(b.x), a.y.min(b.y));
        let Some(i) = self.point_index(lo) else { return };
        if a.y == b.y {
            self.h_wall[i] = true;
        } else {
            self.v_wall[i] = true;
        }
    }

    fn wall_chain(&mut self, points: &[Point2]) {
        for w in points.windows(2) {
            self.wall(w[0], w[1]);
        }
    }

    fn cut_primal(&mut self, path: &PathTrace) {
        let mut pts = Vec::with_capacity(2 * path.len());
        for (k, s) in path.sites.iter().enumerate() {
            if k > 0 {
                pts.push(Edge::between(path.sites[k - 1], *s).expect("adjacent").midpoint());
            }
            pts.push(s.point());
        }
        self.wall_chain(&pts);
    }

    /// Cuts along a dual path, sealing its ends to the primal edges they
    /// touch.
    fn cut_dual(&mut self, path: &PathTrace, first: Edge, last: Edge) {
        let mut pts = vec![first.midpoint()];
        for (k, f) in path.sites.iter().enumerate() {
            if k > 0 {
                pts.push(path.edges()[k - 1].midpoint());
            }
            pts.push(face_point(*f));
        }
        pts.push(last.midpoint());
        self.wall_chain(&pts);
    }

    /// Fills the squares connected to the ones around `start`.
    fn flood(&mut self, start: Point2) {
        let Some(i) = self.square_index(start) else { return };
        self.reached[i] = true;
        let mut q = VecDeque::from([start]);
        while let Some(p) = q.pop_front() {
            let pi = self.point_index(p).expect("square corner");
            // the four sides: bottom, top, left, right
            let right = Point2::new(p.x + 1, p.y);
            let up = Point2::new(p.x, p.y + 1);
            let moves = [
                (Point2::new(p.x, p.y - 1), self.h_wall[pi]),
                (up, self.point_index(up).is_none_or(|k| self.h_wall[k])),
                (Point2::new(p.x - 1, p.y), self.v_wall[pi]),
                (right, self.point_index(right).is_none_or(|k| self.v_wall[k])),
            ];
            for (t, walled) in moves {
                if walled {
                    continue;
                }
                if let Some(k) = self.square_index(t) {
                    if !self.reached[k] {
                        self.reached[k] = true;
                        q.push_back(t);
                    }
                }
            }
        }
    }

    /// Whether `p` is a corner of a reached square.
    fn touches(&self, p: Point2) -> bool {
        [(0, 0), (-1, 0), (0, -1), (-1, -1)]
            .iter()
            .any(|(dx, dy)| self.square_index(Point2::new(p.x + dx, p.y + dy)).is_some_and(|k| self.reached[k]))
    }

    /// Whether a wall ends at `p`.
    fn on_wall(&self, p: Point2) -> bool {
        let left = Point2::new(p.x - 1, p.y);
        let down = Point2::new(p.x, p.y - 1);
        let at = |q: Point2, walls: &[bool]| self.point_index(q).is_some_and(|k| walls[k]);
        at(p, &self.h_wall) || at(left, &self.h_wall) || at(p, &self.v_wall) || at(down, &self.v_wall)
    }

    /// Reached and not on a cut.
    fn inside(&self, p: Point2) -> bool {
        self.touches(p) && !self.on_wall(p)
    }
}

fn face_point(f: Site) -> Point2 {
    Point2::new(2 * f.x as i64 + 1, 2 * f.y as i64 + 1)
}

/// The region `Q_x` enclosed by the four paths of a switch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchRegion {
    plane: Plane,
}

impl SwitchRegion {
    /// Whether a doubled-lattice point lies strictly inside.
    pub fn interior(&self, p: Point2) -> bool {
        self.plane.inside(p)
    }

    /// Whether a point lies inside or on the enclosing curves.
    pub fn closed(&self, p: Point2) -> bool {
        self.plane.touches(p)
    }

    pub fn contains_edge(&self, e: Edge) -> bool {
        self.closed(e.midpoint())
    }

    /// Edges whose midpoint lies in the closed region.
    pub fn edges(&self) -> Vec<Edge> {
        let r = Rect {
            x_min: (self.plane.x0 / 2) as i32,
            x_max: ((self.plane.x0 + self.plane.w - 1) / 2) as i32,
            y_min: (self.plane.y0 / 2) as i32,
            y_max: ((self.plane.y0 + self.plane.h - 1) / 2) as i32,
        };
        r.edges().into_iter().filter(|e| self.contains_edge(*e)).collect()
    }
}

/// The four extremal paths around `x` and the region they enclose.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchRecord {
    pub x: Site,
    pub n: i32,
    pub gamma_r: Option<PathTrace>,
    pub gamma_l: Option<PathTrace>,
    pub gamma_star_b: Option<PathTrace>,
    pub gamma_star_t: Option<PathTrace>,
    pub region: Option<SwitchRegion>,
    pub is_switch: bool,
    pub is_pivotal: bool,
    pub p_open: bool,
    pub p_prime_open: bool,
}

impl SwitchRecord {
    fn none(x: Site, n: i32) -> Self {
        SwitchRecord {
            x,
            n,
            gamma_r: None,
            gamma_l: None,
            gamma_star_b: None,
            gamma_star_t: None,
            region: None,
            is_switch: false,
            is_pivotal: false,
            p_open: false,
            p_prime_open: false,
        }
    }

    /// Edges of `Q_x`, empty unless this is a switch.
    pub fn q_edges(&self) -> Vec<Edge> {
        self.region.as_ref().map(|r| r.edges()).unwrap_or_default()
    }

    /// Fills the pivotal and open flags for the pair `lo <= hi`.
    pub fn classify<L: Bonds + ?Sized, H: Bonds + ?Sized>(mut self, lo: &L, hi: &H, big_n: i32) -> Self {
        if !self.is_switch {
            return self;
        }
        self.is_pivotal = pivotal(lo, &self, big_n);
        self.p_open = open_in(&self, lo);
        self.p_prime_open = open_in(&self, hi);
        self
    }
}

/// An edge of `path` on the boundary of face `f`.
fn touching(f: Site, path: &PathTrace) -> Edge {
    let sides = [Edge::east(f.x, f.y), Edge::east(f.x, f.y + 1), Edge::north(f.x, f.y), Edge::north(f.x + 1, f.y)];
    path.edges().into_iter().find(|e| sides.contains(e)).expect("connector ends touch the crossings")
}

/// Faces sharing a side with an edge of `path`, in path order, deduplicated.
fn faces_along(path: &PathTrace) -> Vec<Site> {
    let mut out: Vec<Site> = Vec::new();
    for e in path.edges() {
        let d = dual_of(e);
        for f in [d.base, d.head()] {
            let s = Site::new(f.x, f.y);
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    out
}

/// Extremal `w*` path between the two flanking crossings of a switch box,
/// within face rows `rows` and inside the region between the crossings.
/// `Side::BottomMost` and `Side::TopMost` are the two flavours.
pub fn extremal_dual_connector<B: Bonds + ?Sized>(
    bonds: &B,
    bx: &LatticeBox,
    between: (&PathTrace, &PathTrace),
    side: Side,
) -> Result<Option<PathTrace>, Error> {
    let (left, right) = between;
    let r = bx.rect();
    let valid = |p: &PathTrace, strip: Rect| {
        !p.is_empty()
            && p.sites.iter().all(|s| strip.contains(*s))
            && p.first().y == r.y_min
            && p.last().y == r.y_max
            && p.edges().len() + 1 == p.len()
    };
    let (c, n2) = (bx.center, bx.radius);
    let n = n2 / 2;
    let left_strip = Rect { x_min: c.x - n2, x_max: c.x - n, y_min: c.y - n2, y_max: c.y + n2 };
    let right_strip = Rect { x_min: c.x + n, x_max: c.x + n2, y_min: c.y - n2, y_max: c.y + n2 };
    if n2 % 2 != 0 || !valid(left, left_strip) || !valid(right, right_strip) {
        return Err(Error::InvalidParameter("invalid switch strips".into()));
    }
    let mut between_plane = Plane::over(&r);
    between_plane.cut_primal(left);
    between_plane.cut_primal(right);
    between_plane.flood(c.point());
    let rows = match side {
        Side::BottomMost => c.y - n2..=c.y - n - 1,
        Side::TopMost => c.y + n..=c.y + n2 - 1,
        _ => return Err(Error::InvalidParameter(format!("{side:?} is not a connector side"))),
    };
    Ok(connector(bonds, &r, &between_plane, left, right, rows, side))
}

fn connector<B: Bonds + ?Sized>(
    bonds: &B,
    r: &Rect,
    between: &Plane,
    left: &PathTrace,
    right: &PathTrace,
    rows: std::ops::RangeInclusive<i32>,
    side: Side,
) -> Option<PathTrace> {
    let mask = Mask::rect(*r);
    let ok = |f: Site| rows.contains(&f.y) && between.inside(face_point(f));
    let g = Restricted { inner: DualGrid { bonds, mask: &mask }, vertex_ok: ok, step_ok: |_, _| true };
    let mut sources: Vec<Site> = faces_along(left).into_iter().filter(|f| ok(*f)).collect();
    let hand = match side {
        Side::TopMost => {
            sources.reverse();
            Hand::Left
        }
        _ => Hand::Right,
    };
    let targets = faces_along(right);
    extremal_search(&g, &sources, |f| targets.contains(&f), Step::E, hand).map(PathTrace::dual)
}

/// The four extremal paths of `w_p` around `x` at scale `n`.
pub fn detect_switch<B: Bonds + ?Sized>(bonds: &B, x: Site, n: i32) -> Result<SwitchRecord, Error> {
    if n < 1 {
        return Err(Error::InvalidParameter(format!("switch scale must be at least 1, got {n}")));
    }
    let bx = LatticeBox::new(x, 2 * n);
    let r = bx.rect();
    let n2 = 2 * n;
    let right_strip = Rect { x_min: x.x + n, x_max: x.x + n2, y_min: x.y - n2, y_max: x.y + n2 };
    let left_strip = Rect { x_min: x.x - n2, x_max: x.x - n, y_min: x.y - n2, y_max: x.y + n2 };
    let mut rec = SwitchRecord::none(x, n);
    let gr = extremal_crossing(bonds, &right_strip, Side::RightMost, Direction::TopBottom)?;
    let gl = extremal_crossing(bonds, &left_strip, Side::LeftMost, Direction::TopBottom)?;
    let (gr, gl) = match (gr, gl) {
        (Some(gr), Some(gl)) => (gr, gl),
        (gr, gl) => {
            rec.gamma_r = gr;
            rec.gamma_l = gl;
            return Ok(rec);
        }
    };
    let mut between = Plane::over(&r);
    between.cut_primal(&gl);
    between.cut_primal(&gr);
    between.flood(x.point());
    let gb = connector(bonds, &r, &between, &gl, &gr, x.y - n2..=x.y - n - 1, Side::BottomMost);
    let gt = connector(bonds, &r, &between, &gl, &gr, x.y + n..=x.y + n2 - 1, Side::TopMost);
    rec.gamma_r = Some(gr);
    rec.gamma_l = Some(gl);
    let (gb, gt) = match (gb, gt) {
        (Some(gb), Some(gt)) => (gb, gt),
        (gb, gt) => {
            rec.gamma_star_b = gb;
            rec.gamma_star_t = gt;
            return Ok(rec);
        }
    };
    let mut q = Plane::over(&r);
    let (gl, gr) = (rec.gamma_l.as_ref().unwrap(), rec.gamma_r.as_ref().unwrap());
    q.cut_primal(gl);
    q.cut_primal(gr);
    q.cut_dual(&gb, touching(gb.first(), gl), touching(gb.last(), gr));
    q.cut_dual(&gt, touching(gt.first(), gl), touching(gt.last(), gr));
    q.flood(x.point());
    rec.gamma_star_b = Some(gb);
    rec.gamma_star_t = Some(gt);
    rec.region = Some(SwitchRegion { plane: q });
    rec.is_switch = true;
    Ok(rec)
}

fn open_in<B: Bonds + ?Sized>(rec: &SwitchRecord, bonds: &B) -> bool {
    let (Some(region), Some(gl), Some(gr)) = (&rec.region, &rec.gamma_l, &rec.gamma_r) else {
        return false;
    };
    let mask = Mask::rect(LatticeBox::new(rec.x, 2 * rec.n).rect());
    let g = Restricted {
        inner: PrimalGrid { bonds, mask: &mask },
        vertex_ok: |_| true,
        step_ok: |s: Site, st: Step| region.contains_edge(Edge::from_step(s, st)),
    };
    let targets = SiteSet::from(gr);
    path_between(&g, &gl.sites, |s| targets.contains(s), false).is_some()
}

/// Whether the two primal sides of a switch are joined by open edges of `Q_x`.
pub fn switch_open<B: Bonds + ?Sized>(rec: &SwitchRecord, bonds: &B) -> Result<bool, Error> {
    if !rec.is_switch {
        return Err(Error::InvalidParameter("not a switch".into()));
    }
    Ok(open_in(rec, bonds))
}

struct SiteSet(std::collections::HashSet<Site>);

impl SiteSet {
    fn from(p: &PathTrace) -> Self {
        SiteSet(p.sites.iter().copied().collect())
    }

    fn contains(&self, s: Site) -> bool {
        self.0.contains(&s)
    }
}

/// The connections to the sides of `H_N` and `V_N`, avoiding the interior of
/// `Q_x`.
fn pivotal<B: Bonds + ?Sized>(bonds: &B, rec: &SwitchRecord, big_n: i32) -> bool {
    let (Some(region), Some(gl), Some(gr), Some(gb), Some(gt)) =
        (&rec.region, &rec.gamma_l, &rec.gamma_r, &rec.gamma_star_b, &rec.gamma_star_t)
    else {
        return false;
    };
    primal_side(bonds, region, gl, big_n, -2 * big_n)
        && primal_side(bonds, region, gr, big_n, 2 * big_n)
        && dual_side(bonds, region, gt, big_n, 2 * big_n)
        && dual_side(bonds, region, gb, big_n, -2 * big_n - 1)
}

fn primal_side<B: Bonds + ?Sized>(bonds: &B, region: &SwitchRegion, from: &PathTrace, big_n: i32, x: i32) -> bool {
    let mask = Mask::rect(Rect::horizontal(big_n));
    let g = Restricted {
        inner: PrimalGrid { bonds, mask: &mask },
        vertex_ok: |_| true,
        step_ok: |s: Site, st: Step| !region.interior(Edge::from_step(s, st).midpoint()),
    };
    path_between(&g, &from.sites, |s| s.x == x, false).is_some()
}

fn dual_side<B: Bonds + ?Sized>(bonds: &B, region: &SwitchRegion, from: &PathTrace, big_n: i32, row: i32) -> bool {
    let mask = Mask::rect(Rect::vertical(big_n));
    let g = Restricted {
        inner: DualGrid { bonds, mask: &mask },
        vertex_ok: |_| true,
        step_ok: |f: Site, st: Step| {
            !region.interior(crate::arms::step_edge(crate::connectivity::Lattice::Dual, f, st).midpoint())
        },
    };
    path_between(&g, &from.sites, |f| f.y == row, false).is_some()
}

/// Switch at `x` whose sides reach the four sides of `H_N` and `V_N` outside
/// `Q_x`.
pub fn is_pivotal_switch<B: Bonds + ?Sized>(bonds: &B, x: Site, n: i32, big_n: i32) -> Result<bool, Error> {
    if !switch_grid(n, big_n)?.contains(&x) {
        return Err(Error::InvalidParameter(format!("{x:?} is not on the switch grid")));
    }
    let rec = detect_switch(bonds, x, n)?;
    Ok(rec.is_switch && pivotal(bonds, &rec, big_n))
}

/// `X`, the number of `p`-closed pivotal switches on the grid, one switch at
/// a time. Reference for [`count_closed_pivotal_switches`].
pub fn count_closed_pivotal_switches_slow<B: Bonds + ?Sized>(bonds: &B, n: i32, big_n: i32) -> Result<u64, Error> {
    let mut count = 0;
    for x in switch_grid(n, big_n)? {
        let rec = detect_switch(bonds, x, n)?;
        if rec.is_switch && !open_in(&rec, bonds) && pivotal(bonds, &rec, big_n) {
            count += 1;
        }
    }
    Ok(count)
}

/// Cluster labels of `w_p` on `H_N` and of `w_p*` on `V_N`, with the labels
/// touching each target side.
struct SideLabels {
    primal: ClusterLabeling,
    left: Vec<u32>,
    right: Vec<u32>,
    dual: ClusterLabeling,
    top: Vec<u32>,
    bottom: Vec<u32>,
}

impl SideLabels {
    fn new<B: Bonds + ?Sized>(bonds: &B, big_n: i32) -> Self {
        let h = Rect::horizontal(big_n);
        let v = Rect::vertical(big_n);
        let primal = ClusterLabeling::primal(bonds, &Mask::rect(h));
        let dual = ClusterLabeling::dual(bonds, &Mask::rect(v));
        let row = |y: i32| (v.x_min - 1..=v.x_max).map(|x| Site::new(x, y)).collect::<Vec<_>>();
        SideLabels {
            left: primal.labels_of(&h.left_column()),
            right: primal.labels_of(&h.right_column()),
            top: dual.labels_of(&row(v.y_max)),
            bottom: dual.labels_of(&row(v.y_min - 1)),
            primal,
            dual,
        }
    }
}

/// `X`, the number of `p`-closed pivotal switches on the grid.
///
/// For a closed switch a primal path from one side of the switch through
/// `Q_x` can only come back out through the same side, so excluding `Q_x`
/// does not change primal reachability and global labels decide it. Dual
/// paths may cross `Q_x` from one connector to the other, so the dual test
/// is filtered by labels and then run exactly.
pub fn count_closed_pivotal_switches<B: Bonds + ?Sized>(bonds: &B, n: i32, big_n: i32) -> Result<u64, Error> {
    let grid = switch_grid(n, big_n)?;
    let mut labels: Option<SideLabels> = None;
    let mut count = 0;
    for x in grid {
        let rec = detect_switch(bonds, x, n)?;
        if !rec.is_switch || open_in(&rec, bonds) {
            continue;
        }
        let l = labels.get_or_insert_with(|| SideLabels::new(bonds, big_n));
        let (gl, gr) = (rec.gamma_l.as_ref().unwrap(), rec.gamma_r.as_ref().unwrap());
        let (gb, gt) = (rec.gamma_star_b.as_ref().unwrap(), rec.gamma_star_t.as_ref().unwrap());
        if !(l.primal.touches(&gl.sites, &l.left) && l.primal.touches(&gr.sites, &l.right)) {
            continue;
        }
        if !(l.dual.touches(&gt.sites, &l.top) && l.dual.touches(&gb.sites, &l.bottom)) {
            continue;
        }
        let region = rec.region.as_ref().unwrap();
        if dual_side(bonds, region, gt, big_n, 2 * big_n) && dual_side(bonds, region, gb, big_n, -2 * big_n - 1) {
            count += 1;
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectivity::crosses;
    use crate::field::{Constant, CoupledField};

    #[test]
    fn extremes_are_not_switches() {
        for n in 1..4 {
            assert!(!detect_switch(&Constant(true), Site::ORIGIN, n).unwrap().is_switch);
            assert!(!detect_switch(&Constant(false), Site::ORIGIN, n).unwrap().is_switch);
        }
        assert_eq!(count_closed_pivotal_switches(&Constant(true), 1, 16).unwrap(), 0);
        assert!(count_closed_pivotal_switches(&Constant(true), 2, 16).is_err());
    }

    #[test]
    fn records_are_consistent() {
        let mut seen = 0;
        for k in 0..4000 {
            let c = CoupledField::new(3, k).at(0.5);
            let rec = detect_switch(&c, Site::new(1, -2), 2).unwrap();
            if !rec.is_switch {
                assert!(rec.q_edges().is_empty());
                continue;
            }
            seen += 1;
            for p in [&rec.gamma_l, &rec.gamma_r] {
                assert!(p.as_ref().unwrap().verify(&c));
            }
            for p in [&rec.gamma_star_b, &rec.gamma_star_t] {
                assert!(p.as_ref().unwrap().verify(&c));
            }
            let q = rec.q_edges();
            assert!(!q.is_empty());
            // the centre's edges are always inside
            assert!(q.contains(&Edge::east(1, -2)));
            // every dual connector edge lies on the closed region
            for p in [&rec.gamma_star_b, &rec.gamma_star_t] {
                for e in p.as_ref().unwrap().edges() {
                    assert!(rec.region.as_ref().unwrap().contains_edge(e), "sample {k}");
                }
            }
            assert!(switch_open(&rec, &Constant(true)).unwrap());
            assert!(!switch_open(&rec, &Constant(false)).unwrap());
        }
        assert!(seen > 0);
    }

    #[test]
    fn closed_pivotal_switches_block_vertical_crossings() {
        for k in 0..3000 {
            let c = CoupledField::new(11, k).at(0.5);
            let fast = count_closed_pivotal_switches(&c, 1, 16).unwrap();
            let slow = count_closed_pivotal_switches_slow(&c, 1, 16).unwrap();
            assert_eq!(fast, slow, "sample {k}");
            if fast > 0 {
                assert!(!crosses(&c, &Rect::vertical(16), Direction::LeftRight));
            }
        }
    }

    #[test]
    fn connector_rejects_bad_strips() {
        let bx = LatticeBox::new(Site::ORIGIN, 4);
        let p = PathTrace::primal(vec![Site::new(0, 0)]);
        assert!(extremal_dual_connector(&Constant(false), &bx, (&p, &p), Side::BottomMost).is_err());
    }
}
