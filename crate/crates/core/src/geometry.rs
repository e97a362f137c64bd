//! Square-lattice geometry: sites, edges, the dual lattice, boxes, rectangles
//! and the cross-shaped domain.
//!
//! Dual vertices are faces of Z^2. A [`DualSite`] `(i, j)` is the face whose
//! lower-left corner is the primal site `(i, j)`, i.e. the point
//! `(i + 1/2, j + 1/2)`. Points of either lattice, and edge midpoints, are
//! addressed in doubled coordinates ([`Point2`]) so that no fractional
//! arithmetic is ever needed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// A vertex of Z^2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const ORIGIN: Site = Site { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        Site { x, y }
    }

    pub fn step(self, dir: Step) -> Site {
        let (dx, dy) = dir.delta();
        Site::new(self.x + dx, self.y + dy)
    }

    /// l-infinity distance.
    pub fn dist(self, other: Site) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn translate(self, by: Site) -> Site {
        Site::new(self.x + by.x, self.y + by.y)
    }

    pub fn point(self) -> Point2 {
        Point2::new(2 * self.x as i64, 2 * self.y as i64)
    }
}

/// Canonical orientation of an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dir {
    East,
    North,
}

/// One of the four unit steps of the lattice, in counter-clockwise order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Step {
    E,
    N,
    W,
    S,
}

impl Step {
    pub const ALL: [Step; 4] = [Step::E, Step::N, Step::W, Step::S];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Step::E => (1, 0),
            Step::N => (0, 1),
            Step::W => (-1, 0),
            Step::S => (0, -1),
        }
    }

    pub fn ccw(self) -> Step {
        match self {
            Step::E => Step::N,
            Step::N => Step::W,
            Step::W => Step::S,
            Step::S => Step::E,
        }
    }

    pub fn cw(self) -> Step {
        match self {
            Step::E => Step::S,
            Step::S => Step::W,
            Step::W => Step::N,
            Step::N => Step::E,
        }
    }

    pub fn reverse(self) -> Step {
        self.ccw().ccw()
    }
}

/// An edge of Z^2 in canonical form: `base` and `base + e_x` (East) or
/// `base + e_y` (North).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub base: Site,
    pub dir: Dir,
}

impl Edge {
    pub const fn east(x: i32, y: i32) -> Self {
        Edge { base: Site::new(x, y), dir: Dir::East }
    }

    pub const fn north(x: i32, y: i32) -> Self {
        Edge { base: Site::new(x, y), dir: Dir::North }
    }

    pub fn head(self) -> Site {
        match self.dir {
            Dir::East => Site::new(self.base.x + 1, self.base.y),
            Dir::North => Site::new(self.base.x, self.base.y + 1),
        }
    }

    pub fn endpoints(self) -> (Site, Site) {
        (self.base, self.head())
    }

    /// The edge joining `a` to its neighbour in direction `step`.
    pub fn from_step(a: Site, step: Step) -> Edge {
        match step {
            Step::E => Edge::east(a.x, a.y),
            Step::N => Edge::north(a.x, a.y),
            Step::W => Edge::east(a.x - 1, a.y),
            Step::S => Edge::north(a.x, a.y - 1),
        }
    }

    /// Canonical edge between two nearest neighbours.
    pub fn between(a: Site, b: Site) -> Option<Edge> {
        match (b.x - a.x, b.y - a.y) {
            (1, 0) => Some(Edge::east(a.x, a.y)),
            (-1, 0) => Some(Edge::east(b.x, b.y)),
            (0, 1) => Some(Edge::north(a.x, a.y)),
            (0, -1) => Some(Edge::north(b.x, b.y)),
            _ => None,
        }
    }

    pub fn midpoint(self) -> Point2 {
        let (x, y) = (2 * self.base.x as i64, 2 * self.base.y as i64);
        match self.dir {
            Dir::East => Point2::new(x + 1, y),
            Dir::North => Point2::new(x, y + 1),
        }
    }

    /// The dual edge crossing this edge at its midpoint.
    pub fn dual(self) -> DualEdge {
        dual_of(self)
    }

    pub fn translate(self, by: Site) -> Edge {
        Edge { base: self.base.translate(by), dir: self.dir }
    }
}

/// A dual vertex: the face with lower-left corner `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DualSite {
    pub x: i32,
    pub y: i32,
}

impl DualSite {
    pub const fn new(x: i32, y: i32) -> Self {
        DualSite { x, y }
    }

    pub fn step(self, dir: Step) -> DualSite {
        let (dx, dy) = dir.delta();
        DualSite::new(self.x + dx, self.y + dy)
    }

    pub fn point(self) -> Point2 {
        Point2::new(2 * self.x as i64 + 1, 2 * self.y as i64 + 1)
    }

    /// Doubled l-infinity distance from the centre of the face to a site.
    pub fn dist2(self, s: Site) -> i64 {
        let p = self.point();
        (p.x - 2 * s.x as i64).abs().max((p.y - 2 * s.y as i64).abs())
    }
}

/// An edge of the dual lattice, in the same canonical form as [`Edge`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DualEdge {
    pub base: DualSite,
    pub dir: Dir,
}

impl DualEdge {
    pub fn from_step(a: DualSite, step: Step) -> DualEdge {
        let (x, y) = (a.x, a.y);
        match step {
            Step::E => DualEdge { base: DualSite::new(x, y), dir: Dir::East },
            Step::N => DualEdge { base: DualSite::new(x, y), dir: Dir::North },
            Step::W => DualEdge { base: DualSite::new(x - 1, y), dir: Dir::East },
            Step::S => DualEdge { base: DualSite::new(x, y - 1), dir: Dir::North },
        }
    }

    pub fn head(self) -> DualSite {
        match self.dir {
            Dir::East => DualSite::new(self.base.x + 1, self.base.y),
            Dir::North => DualSite::new(self.base.x, self.base.y + 1),
        }
    }

    /// The primal edge this dual edge crosses.
    pub fn primal(self) -> Edge {
        let DualSite { x, y } = self.base;
        match self.dir {
            Dir::East => Edge::north(x + 1, y),
            Dir::North => Edge::east(x, y + 1),
        }
    }

    /// Same as [`DualEdge::primal`]: the dual of a dual edge is the original edge.
    pub fn dual(self) -> Edge {
        self.primal()
    }

    pub fn midpoint(self) -> Point2 {
        self.primal().midpoint()
    }
}

/// The dual edge crossing `e` at its midpoint.
pub fn dual_of(e: Edge) -> DualEdge {
    let Site { x, y } = e.base;
    match e.dir {
        Dir::East => DualEdge { base: DualSite::new(x, y - 1), dir: Dir::North },
        Dir::North => DualEdge { base: DualSite::new(x - 1, y), dir: Dir::East },
    }
}

/// A point of the doubled lattice: primal sites are (even, even), faces are
/// (odd, odd), edge midpoints are mixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point2 {
    pub x: i64,
    pub y: i64,
}

impl Point2 {
    pub const fn new(x: i64, y: i64) -> Self {
        Point2 { x, y }
    }
}

/// Axis-parallel rectangle of vertices `[x_min, x_max] x [y_min, y_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: i32,
    pub x_max: i32,
    pub y_min: i32,
    pub y_max: i32,
}

impl Rect {
    pub fn new(x_min: i32, x_max: i32, y_min: i32, y_max: i32) -> Result<Self, Error> {
        if x_min > x_max || y_min > y_max {
            return Err(Error::EmptyRegion);
        }
        Ok(Rect { x_min, x_max, y_min, y_max })
    }

    /// `H_n = [-2n, 2n] x [-n, n]`.
    pub fn horizontal(n: i32) -> Rect {
        Rect { x_min: -2 * n, x_max: 2 * n, y_min: -n, y_max: n }
    }

    /// `V_n = [-n, n] x [-2n, 2n]`.
    pub fn vertical(n: i32) -> Rect {
        Rect { x_min: -n, x_max: n, y_min: -2 * n, y_max: 2 * n }
    }

    pub fn width(&self) -> i32 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> i32 {
        self.y_max - self.y_min
    }

    pub fn num_sites(&self) -> usize {
        (self.width() as usize + 1) * (self.height() as usize + 1)
    }

    pub fn contains(&self, s: Site) -> bool {
        s.x >= self.x_min && s.x <= self.x_max && s.y >= self.y_min && s.y <= self.y_max
    }

    pub fn contains_edge(&self, e: Edge) -> bool {
        self.contains(e.base) && self.contains(e.head())
    }

    pub fn translate(&self, by: Site) -> Rect {
        Rect {
            x_min: self.x_min + by.x,
            x_max: self.x_max + by.x,
            y_min: self.y_min + by.y,
            y_max: self.y_max + by.y,
        }
    }

    /// Smallest rectangle containing both.
    pub fn hull(&self, other: &Rect) -> Rect {
        Rect {
            x_min: self.x_min.min(other.x_min),
            x_max: self.x_max.max(other.x_max),
            y_min: self.y_min.min(other.y_min),
            y_max: self.y_max.max(other.y_max),
        }
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.x_min <= other.x_min
            && self.x_max >= other.x_max
            && self.y_min <= other.y_min
            && self.y_max >= other.y_max
    }

    /// Dense index of a site, row-major.
    pub fn site_index(&self, s: Site) -> usize {
        let w = self.width() as usize + 1;
        (s.y - self.y_min) as usize * w + (s.x - self.x_min) as usize
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (self.y_min..=self.y_max).flat_map(move |y| (self.x_min..=self.x_max).map(move |x| Site::new(x, y)))
    }

    pub fn left_column(&self) -> Vec<Site> {
        (self.y_min..=self.y_max).map(|y| Site::new(self.x_min, y)).collect()
    }

    pub fn right_column(&self) -> Vec<Site> {
        (self.y_min..=self.y_max).map(|y| Site::new(self.x_max, y)).collect()
    }

    pub fn bottom_row(&self) -> Vec<Site> {
        (self.x_min..=self.x_max).map(|x| Site::new(x, self.y_min)).collect()
    }

    pub fn top_row(&self) -> Vec<Site> {
        (self.x_min..=self.x_max).map(|x| Site::new(x, self.y_max)).collect()
    }

    /// Every edge with both endpoints inside, row-major by base, East before North.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(2 * self.num_sites());
        for y in self.y_min..=self.y_max {
            for x in self.x_min..=self.x_max {
                if x < self.x_max {
                    out.push(Edge::east(x, y));
                }
                if y < self.y_max {
                    out.push(Edge::north(x, y));
                }
            }
        }
        out
    }

    pub fn num_edges(&self) -> usize {
        let (w, h) = (self.width() as usize, self.height() as usize);
        w * (h + 1) + h * (w + 1)
    }
}

/// The box `Lambda_n(center) = center + [-n, n]^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeBox {
    pub center: Site,
    pub radius: i32,
}

impl LatticeBox {
    pub fn new(center: Site, radius: i32) -> Self {
        LatticeBox { center, radius }
    }

    pub fn at_origin(radius: i32) -> Self {
        LatticeBox { center: Site::ORIGIN, radius }
    }

    pub fn rect(&self) -> Rect {
        let (c, n) = (self.center, self.radius);
        Rect { x_min: c.x - n, x_max: c.x + n, y_min: c.y - n, y_max: c.y + n }
    }

    pub fn contains(&self, s: Site) -> bool {
        s.dist(self.center) <= self.radius
    }

    /// `dLambda_n = Lambda_n \ Lambda_{n-1}`; for `n = 0` the centre itself.
    pub fn boundary(&self) -> Vec<Site> {
        let n = self.radius;
        if n == 0 {
            return vec![self.center];
        }
        let c = self.center;
        let mut out = Vec::with_capacity(8 * n as usize);
        // counter-clockwise from the bottom-left corner
        for x in -n..n {
            out.push(Site::new(c.x + x, c.y - n));
        }
        for y in -n..n {
            out.push(Site::new(c.x + n, c.y + y));
        }
        for x in (-n + 1..=n).rev() {
            out.push(Site::new(c.x + x, c.y + n));
        }
        for y in (-n + 1..=n).rev() {
            out.push(Site::new(c.x - n, c.y + y));
        }
        out
    }

    pub fn on_boundary(&self, s: Site) -> bool {
        s.dist(self.center) == self.radius
    }
}

/// The cross-shaped domain `C = H_N u V_N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CrossDomain {
    pub scale: i32,
}

impl CrossDomain {
    pub fn new(scale: i32) -> Self {
        CrossDomain { scale }
    }

    pub fn horizontal(&self) -> Rect {
        Rect::horizontal(self.scale)
    }

    pub fn vertical(&self) -> Rect {
        Rect::vertical(self.scale)
    }

    pub fn bounding(&self) -> Rect {
        let n = 2 * self.scale;
        Rect { x_min: -n, x_max: n, y_min: -n, y_max: n }
    }

    pub fn contains(&self, s: Site) -> bool {
        self.horizontal().contains(s) || self.vertical().contains(s)
    }

    /// Left side: the five boundary segments with `x <= -N`, listed from the
    /// bottom end `(-N, -2N)` to the top end `(-N, 2N)`.
    pub fn left_side(&self) -> Vec<Site> {
        let n = self.scale;
        let mut out = Vec::new();
        for y in -2 * n..-n {
            out.push(Site::new(-n, y));
        }
        for x in (-2 * n..=-n).rev() {
            out.push(Site::new(x, -n));
        }
        for y in -n + 1..n {
            out.push(Site::new(-2 * n, y));
        }
        for x in -2 * n..=-n {
            out.push(Site::new(x, n));
        }
        for y in n + 1..=2 * n {
            out.push(Site::new(-n, y));
        }
        out
    }

    /// Mirror image of [`CrossDomain::left_side`], from bottom to top.
    pub fn right_side(&self) -> Vec<Site> {
        self.left_side().into_iter().map(|s| Site::new(-s.x, s.y)).collect()
    }
}

/// Anything edges can be drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Box(LatticeBox),
    Rect(Rect),
    Cross(CrossDomain),
}

impl Region {
    pub fn bounding(&self) -> Rect {
        match self {
            Region::Box(b) => b.rect(),
            Region::Rect(r) => *r,
            Region::Cross(c) => c.bounding(),
        }
    }

    pub fn contains(&self, s: Site) -> bool {
        match self {
            Region::Box(b) => b.contains(s),
            Region::Rect(r) => r.contains(s),
            Region::Cross(c) => c.contains(s),
        }
    }

    pub fn contains_edge(&self, e: Edge) -> bool {
        self.contains(e.base) && self.contains(e.head())
    }
}

/// Every edge with both endpoints in the region, row-major by base, East
/// before North.
pub fn edges_in(region: &Region) -> Vec<Edge> {
    let bound = region.bounding();
    match region {
        Region::Cross(_) => bound.edges().into_iter().filter(|e| region.contains_edge(*e)).collect(),
        _ => bound.edges(),
    }
}

/// `S = (8n + 1) Z^2 n Lambda_{N/2}`, the centres of disjoint switch boxes.
pub fn switch_grid(n: i32, big_n: i32) -> Result<Vec<Site>, Error> {
    if n < 1 || 16 * n > big_n {
        return Err(Error::ScaleRatio { n, big_n });
    }
    let step = 8 * n + 1;
    let half = big_n / 2;
    let k = half / step;
    let mut out = Vec::new();
    for j in -k..=k {
        for i in -k..=k {
            out.push(Site::new(i * step, j * step));
        }
    }
    Ok(out)
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Box(b) if b.center == Site::ORIGIN => write!(f, "box:{}", b.radius),
            Region::Box(b) => write!(f, "box:{}@{},{}", b.radius, b.center.x, b.center.y),
            Region::Rect(r) => write!(f, "rect:{},{},{},{}", r.x_min, r.x_max, r.y_min, r.y_max),
            Region::Cross(c) => write!(f, "cross:{}", c.scale),
        }
    }
}

impl FromStr for Region {
    type Err = Error;

    /// `box:<n>`, `box:<n>@<x>,<y>`, `rect:<xmin>,<xmax>,<ymin>,<ymax>`,
    /// `H:<n>`, `V:<n>`, `cross:<N>`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::RegionSyntax(s.to_string());
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let ints = |t: &str| -> Result<Vec<i32>, Error> {
            t.split(',').map(|v| v.trim().parse::<i32>().map_err(|_| bad())).collect()
        };
        let single = |t: &str| -> Result<i32, Error> {
            let v = t.trim().parse::<i32>().map_err(|_| bad())?;
            if v < 0 {
                return Err(bad());
            }
            Ok(v)
        };
        match kind {
            "box" => {
                if let Some((n, c)) = rest.split_once('@') {
                    let c = ints(c)?;
                    if c.len() != 2 {
                        return Err(bad());
                    }
                    Ok(Region::Box(LatticeBox::new(Site::new(c[0], c[1]), single(n)?)))
                } else {
                    Ok(Region::Box(LatticeBox::at_origin(single(rest)?)))
                }
            }
            "rect" => {
                let v = ints(rest)?;
                if v.len() != 4 {
                    return Err(bad());
                }
                Ok(Region::Rect(Rect::new(v[0], v[1], v[2], v[3])?))
            }
            "H" => Ok(Region::Rect(Rect::horizontal(single(rest)?))),
            "V" => Ok(Region::Rect(Rect::vertical(single(rest)?))),
            "cross" => Ok(Region::Cross(CrossDomain::new(single(rest)?))),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_counts() {
        assert!(edges_in(&Region::Box(LatticeBox::at_origin(0))).is_empty());
        let unit = edges_in(&Region::Rect(Rect::new(0, 1, 0, 1).unwrap()));
        assert_eq!(unit.len(), 4);
        assert_eq!(unit.iter().filter(|e| e.dir == Dir::East).count(), 2);
        assert_eq!(edges_in(&Region::Box(LatticeBox::at_origin(1))).len(), 12);
        let r = Rect::new(-3, 4, 2, 9).unwrap();
        assert_eq!(r.edges().len(), r.num_edges());
    }

    #[test]
    fn edges_are_ordered_and_stable() {
        let r = Region::Rect(Rect::new(0, 1, 0, 1).unwrap());
        let e = edges_in(&r);
        assert_eq!(e, vec![Edge::east(0, 0), Edge::north(0, 0), Edge::north(1, 0), Edge::east(0, 1)]);
        assert_eq!(e, edges_in(&r));
    }

    #[test]
    fn dual_edges_cross_at_midpoint() {
        let d = dual_of(Edge::east(0, 0));
        assert_eq!(d, DualEdge { base: DualSite::new(0, -1), dir: Dir::North });
        // centre (1/2, -1/2)
        assert_eq!(d.base.point(), Point2::new(1, -1));
        let d = dual_of(Edge::north(0, 0));
        assert_eq!(d, DualEdge { base: DualSite::new(-1, 0), dir: Dir::East });
        assert_eq!(d.base.point(), Point2::new(-1, 1));
        for e in Rect::new(-2, 2, -2, 2).unwrap().edges() {
            let d = dual_of(e);
            assert_eq!(d.midpoint(), e.midpoint());
            assert_eq!(d.dual(), e);
            let (a, b) = (d.base.point(), d.head().point());
            assert_eq!(Point2::new((a.x + b.x) / 2, (a.y + b.y) / 2), e.midpoint());
        }
    }

    #[test]
    fn boundary_sizes() {
        for n in 1..7 {
            let b = LatticeBox::at_origin(n);
            let bd = b.boundary();
            assert_eq!(bd.len(), 8 * n as usize);
            assert!(bd.iter().all(|s| b.on_boundary(*s)));
            assert_eq!(b.rect().num_sites(), ((2 * n + 1) * (2 * n + 1)) as usize);
        }
    }

    #[test]
    fn switch_grid_examples() {
        assert_eq!(switch_grid(1, 16).unwrap(), vec![Site::ORIGIN]);
        assert_eq!(switch_grid(1, 32).unwrap().len(), 9);
        assert_eq!(switch_grid(4, 64).unwrap(), vec![Site::ORIGIN]);
        assert!(matches!(switch_grid(2, 31), Err(Error::ScaleRatio { .. })));
    }

    #[test]
    fn switch_boxes_disjoint_and_inside() {
        for (n, big) in [(1, 16), (1, 32), (2, 64), (4, 256), (3, 100)] {
            let s = switch_grid(n, big).unwrap();
            let outer = LatticeBox::at_origin(big).rect();
            for (i, a) in s.iter().enumerate() {
                let ra = LatticeBox::new(*a, 2 * n).rect();
                assert!(outer.contains_rect(&ra));
                for b in &s[i + 1..] {
                    assert!(a.dist(*b) > 4 * n);
                }
            }
        }
    }

    #[test]
    fn cross_sides() {
        let c = CrossDomain::new(3);
        let l = c.left_side();
        assert_eq!(l.first(), Some(&Site::new(-3, -6)));
        assert_eq!(l.last(), Some(&Site::new(-3, 6)));
        assert!(l.iter().all(|s| c.contains(*s)));
        for w in l.windows(2) {
            assert_eq!(w[0].dist(w[1]), 1);
        }
        assert!(c.right_side().iter().all(|s| s.x >= 3));
    }

    #[test]
    fn region_syntax() {
        for s in ["box:4", "box:2@3,-1", "rect:0,4,0,3", "cross:8"] {
            let r: Region = s.parse().unwrap();
            assert_eq!(r.to_string(), s);
        }
        assert_eq!("H:2".parse::<Region>().unwrap(), Region::Rect(Rect::horizontal(2)));
        assert!("rect:3,1,0,0".parse::<Region>().is_err());
        assert!("disc:3".parse::<Region>().is_err());
    }
}
