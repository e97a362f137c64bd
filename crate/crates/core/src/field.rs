//! The coupled uniform field and the configurations read off it.
//!
//! Labels are produced by a counter-based hash of `(seed, stream, edge)`, so
//! any edge of the infinite lattice can be queried without materializing a
//! region, and the label of a given edge never depends on which region or in
//! which order it was looked at.

use crate::geometry::{Dir, DualEdge, Edge, Rect};

/// Read access to an edge configuration. Dual edges are open exactly when
/// their primal partner is closed.
pub trait Bonds {
    fn open(&self, e: Edge) -> bool;

    fn dual_open(&self, d: DualEdge) -> bool {
        !self.open(d.primal())
    }
}

impl<B: Bonds + ?Sized> Bonds for &B {
    fn open(&self, e: Edge) -> bool {
        (**self).open(e)
    }
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The uniform labels `U(e)` of one sample. `stream` separates independent
/// samples drawn from the same seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CoupledField {
    pub seed: u64,
    pub stream: u64,
}

impl CoupledField {
    pub fn new(seed: u64, stream: u64) -> Self {
        CoupledField { seed, stream }
    }

    /// 53-bit label in `(0, 1]`.
    #[inline]
    pub fn uniform(&self, e: Edge) -> f64 {
        let key = ((e.base.x as u32 as u64) << 32) | (e.base.y as u32 as u64);
        let d = match e.dir {
            Dir::East => 0x9e37_79b9_7f4a_7c15u64,
            Dir::North => 0x3c6e_f372_fe94_f82au64,
        };
        let h = mix(mix(mix(self.seed ^ 0x5851_f42d_4c95_7f2d).wrapping_add(self.stream) ^ d).wrapping_add(key));
        ((h >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn at(&self, p: f64) -> Configuration {
        Configuration { field: *self, p }
    }

    /// Smallest parameter at which `e` is open: its label.
    pub fn first_opening(&self, e: Edge) -> f64 {
        self.uniform(e)
    }

    /// Status of `e` in the pair `(w_p, w_p')`.
    pub fn state(&self, e: Edge, p: f64, p_prime: f64) -> EdgeState {
        EdgeState::classify(self.uniform(e), p, p_prime)
    }
}

/// `w_p`: edges with label at most `p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Configuration {
    pub field: CoupledField,
    pub p: f64,
}

impl Bonds for Configuration {
    #[inline]
    fn open(&self, e: Edge) -> bool {
        self.field.uniform(e) <= self.p
    }
}

/// Status of an edge under the coupled pair `p <= p'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeState {
    /// Open in both.
    Open,
    /// Closed in `w_p`, open in `w_p'`.
    Mixed,
    /// Closed in both.
    Closed,
}

impl EdgeState {
    pub fn classify(u: f64, p: f64, p_prime: f64) -> EdgeState {
        if u <= p {
            EdgeState::Open
        } else if u <= p_prime {
            EdgeState::Mixed
        } else {
            EdgeState::Closed
        }
    }
}

/// An explicit configuration on the edges of a rectangle; edges outside are
/// closed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSet {
    rect: Rect,
    bits: Vec<bool>,
}

impl EdgeSet {
    pub fn empty(rect: Rect) -> Self {
        EdgeSet { rect, bits: vec![false; 2 * rect.num_sites()] }
    }

    /// Snapshot of any configuration restricted to `rect`.
    pub fn capture<B: Bonds>(rect: Rect, bonds: &B) -> Self {
        let mut s = EdgeSet::empty(rect);
        for e in rect.edges() {
            if bonds.open(e) {
                s.set(e, true);
            }
        }
        s
    }

    /// Opens exactly the edges of `edges` whose bit in `mask` is set.
    pub fn from_mask(rect: Rect, edges: &[Edge], mask: u64) -> Self {
        let mut s = EdgeSet::empty(rect);
        for (i, e) in edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s.set(*e, true);
            }
        }
        s
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    fn index(&self, e: Edge) -> Option<usize> {
        if !self.rect.contains_edge(e) {
            return None;
        }
        Some(2 * self.rect.site_index(e.base) + (e.dir == Dir::North) as usize)
    }

    pub fn set(&mut self, e: Edge, open: bool) {
        if let Some(i) = self.index(e) {
            self.bits[i] = open;
        }
    }

    pub fn count_open(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

impl Bonds for EdgeSet {
    #[inline]
    fn open(&self, e: Edge) -> bool {
        self.index(e).is_some_and(|i| self.bits[i])
    }
}

/// Configuration with every edge in the given state: handy in tests.
#[derive(Clone, Copy, Debug)]
pub struct Constant(pub bool);

impl Bonds for Constant {
    fn open(&self, _: Edge) -> bool {
        self.0
    }
}

/// Edge-wise union of two configurations, used for modification arguments.
pub struct Union<A, B>(pub A, pub B);

impl<A: Bonds, B: Bonds> Bonds for Union<A, B> {
    fn open(&self, e: Edge) -> bool {
        self.0.open(e) || self.1.open(e)
    }
}
