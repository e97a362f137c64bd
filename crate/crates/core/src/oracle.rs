//! Exact answers on tiny instances.
//!
//! Probabilities come from enumerating every coupled state of the edges of a
//! region. Each edge is closed in both configurations, open only in the
//! upper one, or open in both, with weights `1 - p'`, `p' - p` and `p`. The
//! enumeration only counts states by how many edges fall in each class, so
//! the counts are exact integers independent of the enumeration order, and
//! the probability is a polynomial in the three weights evaluated once at
//! the end. Subtrees on which a monotone predicate is already decided are
//! counted in closed form.
//!
//! The path searches are exhaustive over simple paths and serve as ground
//! truth for the arm detectors.

use serde::Serialize;

use crate::field::Bonds;
use crate::geometry::{dual_of, edges_in, DualSite, Edge, LatticeBox, Rect, Region, Site, Step};
use crate::{check_params, Error};

/// Edge cap for plain enumeration.
pub const EDGE_CAP: usize = 20;

/// Per-edge weights of the coupled law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrinaryWeights {
    pub p: f64,
    pub p_prime: f64,
}

impl TrinaryWeights {
    pub fn new(p: f64, p_prime: f64) -> Result<Self, Error> {
        check_params(p, p_prime)?;
        Ok(TrinaryWeights { p, p_prime })
    }

    /// Closed in both, open only in the upper, open in both.
    pub fn weights(&self) -> [f64; 3] {
        [1.0 - self.p_prime, self.p_prime - self.p, self.p]
    }

    /// Integer weights over `2^k` when both parameters are dyadic.
    fn dyadic(&self) -> Option<(u32, [u128; 3])> {
        (0..=16u32).find_map(|k| {
            let scale = (1u64 << k) as f64;
            let (a, b) = (self.p * scale, self.p_prime * scale);
            (a.fract() == 0.0 && b.fract() == 0.0).then(|| {
                let (a, b) = (a as u128, b as u128);
                (k, [(1u128 << k) - b, b - a, a])
            })
        })
    }
}

/// An enumerated probability.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactProbability {
    pub value: f64,
    /// `numerator / 2^denominator_log2`, when the weights are dyadic and the
    /// sum fits in 128 bits.
    pub numerator: Option<u128>,
    pub denominator_log2: Option<u32>,
    /// Bound on the floating-point error of `value`.
    pub error_bound: f64,
    pub edges: usize,
    pub states_visited: u64,
}

/// How a predicate responds to opening edges of one configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Monotone {
    Increasing,
    Decreasing,
    /// Does not depend on this configuration.
    Ignored,
    /// No pruning possible.
    Unknown,
}

/// An event of the coupled pair `(lower, upper)`.
pub struct Predicate<'a> {
    pub holds: Box<dyn Fn(&dyn Bonds, &dyn Bonds) -> bool + Sync + 'a>,
    pub lower: Monotone,
    pub upper: Monotone,
}

impl<'a> Predicate<'a> {
    pub fn new(
        lower: Monotone,
        upper: Monotone,
        holds: impl Fn(&dyn Bonds, &dyn Bonds) -> bool + Sync + 'a,
    ) -> Self {
        Predicate { holds: Box::new(holds), lower, upper }
    }

    /// An increasing event of the lower configuration alone.
    pub fn lower_increasing(f: impl Fn(&dyn Bonds) -> bool + Sync + 'a) -> Self {
        Self::new(Monotone::Increasing, Monotone::Ignored, move |lo, _| f(lo))
    }
}

/// Bit positions of the enumerated edges inside a rectangle.
struct Slots {
    rect: Rect,
    pos: Vec<u8>,
}

const NO_SLOT: u8 = u8::MAX;

impl Slots {
    fn new(edges: &[Edge]) -> Self {
        let rect = edges.iter().fold(None::<Rect>, |acc, e| {
            let (a, b) = e.endpoints();
            let r = Rect { x_min: a.x.min(b.x), x_max: a.x.max(b.x), y_min: a.y.min(b.y), y_max: a.y.max(b.y) };
            Some(acc.map_or(r, |acc| acc.hull(&r)))
        });
        let rect = rect.unwrap_or(Rect { x_min: 0, x_max: 0, y_min: 0, y_max: 0 });
        let mut pos = vec![NO_SLOT; 2 * rect.num_sites()];
        for (i, e) in edges.iter().enumerate() {
            pos[Self::index(&rect, *e)] = i as u8;
        }
        Slots { rect, pos }
    }

    fn index(rect: &Rect, e: Edge) -> usize {
        2 * rect.site_index(e.base) + (e.dir == crate::geometry::Dir::North) as usize
    }
}

/// Enumerated edges read off a bit mask; every other edge is closed.
struct Masked<'a> {
    slots: &'a Slots,
    mask: u64,
}

impl Bonds for Masked<'_> {
    #[inline]
    fn open(&self, e: Edge) -> bool {
        if !self.slots.rect.contains_edge(e) {
            return false;
        }
        let k = self.slots.pos[Slots::index(&self.slots.rect, e)];
        k != NO_SLOT && self.mask >> k & 1 == 1
    }
}

/// Number of states with `a` edges closed in both and `b` mixed, by `(a, b)`.
#[derive(Clone, Debug, PartialEq)]
struct Counts {
    m: usize,
    table: Vec<u64>,
    visited: u64,
}

impl Counts {
    fn new(m: usize) -> Self {
        Counts { m, table: vec![0; (m + 1) * (m + 1)], visited: 0 }
    }

    fn add(&mut self, a: usize, b: usize, n: u64) {
        self.table[a * (self.m + 1) + b] += n;
    }

    fn merge(&mut self, other: &Counts) {
        for (x, y) in self.table.iter_mut().zip(&other.table) {
            *x += y;
        }
        self.visited += other.visited;
    }
}

fn binomials(m: usize) -> Vec<Vec<u64>> {
    let mut c = vec![vec![0u64; m + 1]; m + 1];
    for n in 0..=m {
        c[n][0] = 1;
        for k in 1..=n {
            c[n][k] = c[n - 1][k - 1] + if k <= n - 1 { c[n - 1][k] } else { 0 };
        }
    }
    c
}

struct Enumeration<'a> {
    slots: Slots,
    m: usize,
    pred: &'a Predicate<'a>,
    /// Allowed classes per edge: 3 for coupled, 2 (closed, open) for a
    /// single configuration.
    trinary: bool,
    binom: Vec<Vec<u64>>,
}

impl Enumeration<'_> {
    fn eval(&self, lo: u64, hi: u64) -> bool {
        (self.pred.holds)(&Masked { slots: &self.slots, mask: lo }, &Masked { slots: &self.slots, mask: hi })
    }

    /// Predicate value if every completion of the first `i` edges agrees.
    fn decided(&self, i: usize, lo: u64, hi: u64) -> Option<bool> {
        let free = if i >= 64 { 0 } else { (!0u64 << i) & mask_of(self.m) };
        let extreme = |dir: Monotone, up: bool| match dir {
            Monotone::Increasing => Some(if up { free } else { 0 }),
            Monotone::Decreasing => Some(if up { 0 } else { free }),
            Monotone::Ignored => Some(0),
            Monotone::Unknown => None,
        };
        let (lo_up, lo_down) = (extreme(self.pred.lower, true)?, extreme(self.pred.lower, false)?);
        let (hi_up, hi_down) = (extreme(self.pred.upper, true)?, extreme(self.pred.upper, false)?);
        let top = self.eval(lo | lo_up, hi | hi_up);
        let bottom = self.eval(lo | lo_down, hi | hi_down);
        (top == bottom).then_some(top)
    }

    /// Adds every completion of a prefix with `i` edges and class counts
    /// `(a, b)`.
    fn add_completions(&self, counts: &mut Counts, i: usize, a: usize, b: usize) {
        let r = self.m - i;
        if !self.trinary {
            for a2 in 0..=r {
                counts.add(a + a2, b, self.binom[r][a2]);
            }
            return;
        }
        for a2 in 0..=r {
            for b2 in 0..=r - a2 {
                counts.add(a + a2, b + b2, self.binom[r][a2] * self.binom[r - a2][b2]);
            }
        }
    }

    fn walk(&self, counts: &mut Counts, i: usize, lo: u64, hi: u64, a: usize, b: usize) {
        counts.visited += 1;
        if i == self.m {
            if self.eval(lo, hi) {
                counts.add(a, b, 1);
            }
            return;
        }
        if i + 1 < self.m {
            match self.decided(i, lo, hi) {
                Some(true) => return self.add_completions(counts, i, a, b),
                Some(false) => return,
                None => {}
            }
        }
        let bit = 1u64 << i;
        self.walk(counts, i + 1, lo, hi, a + 1, b);
        if self.trinary {
            self.walk(counts, i + 1, lo, hi | bit, a, b + 1);
        }
        self.walk(counts, i + 1, lo | bit, hi | bit, a, b);
    }

    fn run(&self) -> Counts {
        // split on the first two edges; counts merge exactly in any order
        let depth = self.m.min(2);
        let classes: &[u8] = if self.trinary { &[0, 1, 2] } else { &[0, 2] };
        let mut prefixes = vec![(0u64, 0u64, 0usize, 0usize)];
        for i in 0..depth {
            let bit = 1u64 << i;
            prefixes = prefixes
                .into_iter()
                .flat_map(|(lo, hi, a, b)| {
                    classes.iter().map(move |c| match c {
                        0 => (lo, hi, a + 1, b),
                        1 => (lo, hi | bit, a, b + 1),
                        _ => (lo | bit, hi | bit, a, b),
                    })
                })
                .collect();
        }
        let one = |&(lo, hi, a, b): &(u64, u64, usize, usize)| {
            let mut c = Counts::new(self.m);
            self.walk(&mut c, depth, lo, hi, a, b);
            c
        };
        #[cfg(feature = "parallel")]
        let parts: Vec<Counts> = {
            use rayon::prelude::*;
            prefixes.par_iter().map(one).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let parts: Vec<Counts> = prefixes.iter().map(one).collect();
        let mut total = Counts::new(self.m);
        for p in &parts {
            total.merge(p);
        }
        total
    }
}

fn mask_of(m: usize) -> u64 {
    if m >= 64 {
        !0
    } else {
        (1u64 << m) - 1
    }
}

/// Neumaier summation.
#[derive(Default)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    fn value(&self) -> f64 {
        self.s + self.c
    }
}

fn evaluate(counts: &Counts, w: &TrinaryWeights) -> ExactProbability {
    let m = counts.m;
    let [w0, w1, w2] = w.weights();
    let mut sum = Sum::default();
    let mut terms = 0u64;
    for a in 0..=m {
        for b in 0..=m - a {
            let n = counts.table[a * (m + 1) + b];
            if n == 0 {
                continue;
            }
            terms += 1;
            sum.add(n as f64 * w0.powi(a as i32) * w1.powi(b as i32) * w2.powi((m - a - b) as i32));
        }
    }
    let mut out = ExactProbability {
        value: sum.value().clamp(0.0, 1.0),
        numerator: None,
        denominator_log2: None,
        error_bound: (terms as f64 + 2.0 * m as f64 + 2.0) * f64::EPSILON,
        edges: m,
        states_visited: counts.visited,
    };
    if let Some((k, wi)) = w.dyadic() {
        if let Some(num) = exact_numerator(counts, wi) {
            let den = k * m as u32;
            if den < 128 {
                out.numerator = Some(num);
                out.denominator_log2 = Some(den);
                out.value = num as f64 / (den as f64).exp2();
                out.error_bound = f64::EPSILON;
            }
        }
    }
    out
}

fn exact_numerator(counts: &Counts, wi: [u128; 3]) -> Option<u128> {
    let m = counts.m;
    let mut total: u128 = 0;
    for a in 0..=m {
        for b in 0..=m - a {
            let n = counts.table[a * (m + 1) + b] as u128;
            if n == 0 {
                continue;
            }
            let term = n
                .checked_mul(wi[0].checked_pow(a as u32)?)?
                .checked_mul(wi[1].checked_pow(b as u32)?)?
                .checked_mul(wi[2].checked_pow((m - a - b) as u32)?)?;
            total = total.checked_add(term)?;
        }
    }
    Some(total)
}

/// Exact probability of a coupled event over every state of `edges`,
/// refusing more than `cap` edges.
pub fn enumerate_edges(
    edges: &[Edge],
    weights: &TrinaryWeights,
    pred: &Predicate,
    cap: usize,
) -> Result<ExactProbability, Error> {
    if edges.len() > cap.min(63) {
        return Err(Error::TooLarge { edges: edges.len(), limit: cap.min(63) });
    }
    let m = edges.len();
    let trinary = weights.p != weights.p_prime;
    let e = Enumeration { slots: Slots::new(edges), m, pred, trinary, binom: binomials(m) };
    Ok(evaluate(&e.run(), weights))
}

/// Exact probability of a coupled event on the edges of `region`.
pub fn enumerate_probability(
    region: &Region,
    weights: &TrinaryWeights,
    pred: &Predicate,
) -> Result<ExactProbability, Error> {
    enumerate_edges(&edges_in(region), weights, pred, EDGE_CAP)
}

/// Exact probability of an event of one configuration at `p`, enumerating
/// the two states of each edge.
pub fn enumerate_single(
    edges: &[Edge],
    p: f64,
    event: &(dyn Fn(&dyn Bonds) -> bool + Sync),
    monotone: Monotone,
    cap: usize,
) -> Result<ExactProbability, Error> {
    let pred = Predicate::new(monotone, Monotone::Ignored, |lo, _| event(lo));
    enumerate_edges(edges, &TrinaryWeights::new(p, p)?, &pred, cap)
}

/// Exact probability of a named event: `crossing` and `one-arm` of the lower
/// configuration, or `delta` on a cross domain.
pub fn exact_event(name: &str, region: &Region, weights: &TrinaryWeights) -> Result<ExactProbability, Error> {
    let edges = edges_in(region);
    match name {
        "crossing" => {
            let region = *region;
            let pred = Predicate::lower_increasing(move |lo| region_crossed(lo, &region));
            enumerate_edges(&edges, weights, &pred, EDGE_CAP)
        }
        "one-arm" => {
            let Region::Box(b) = *region else {
                return Err(Error::InvalidParameter("one-arm needs a box region".into()));
            };
            let pred = Predicate::lower_increasing(move |lo| {
                crate::connectivity::box_to_box(lo, b.center, 0, b.radius)
            });
            enumerate_edges(&edges, weights, &pred, EDGE_CAP)
        }
        "delta" => {
            let Region::Cross(c) = *region else {
                return Err(Error::InvalidParameter("delta needs a cross region".into()));
            };
            let n = c.scale;
            if n == 1 {
                let (value, calls) = delta_one_by_detector(weights);
                return Ok(ExactProbability {
                    value,
                    numerator: None,
                    denominator_log2: None,
                    error_bound: 1e3 * f64::EPSILON,
                    edges: edges.len(),
                    states_visited: calls,
                });
            }
            let pred = Predicate::new(Monotone::Decreasing, Monotone::Increasing, move |lo, hi| {
                crate::events::delta(lo, hi, n)
            });
            enumerate_edges(&edges, weights, &pred, EDGE_CAP)
        }
        other => Err(Error::UnknownEvent(other.to_string())),
    }
}

/// Left-right crossing of a region: of its rectangle, or of the cross
/// domain from its left side to its right side.
pub fn region_crossed<B: Bonds + ?Sized>(bonds: &B, region: &Region) -> bool {
    use crate::connectivity::{crosses, reaches, Direction, Mask, PrimalGrid, SiteSet};
    match region {
        Region::Cross(c) => {
            let mask = Mask::region(region);
            let right = SiteSet::from_sites(c.bounding(), &c.right_side());
            reaches(&PrimalGrid { bonds, mask: &mask }, &c.left_side(), |s| right.contains(s))
        }
        _ => crosses(bonds, &region.bounding(), Direction::LeftRight),
    }
}

/// Left-right crossing of `r` by brute union-find over `open`, sharing no
/// code with the detectors.
pub fn reference_crossing(r: &Rect, open: impl Fn(Edge) -> bool) -> bool {
    let w = (r.x_max - r.x_min + 1) as usize;
    let h = (r.y_max - r.y_min + 1) as usize;
    let id = |x: i32, y: i32| (y - r.y_min) as usize * w + (x - r.x_min) as usize;
    let mut parent: Vec<usize> = (0..w * h).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for y in r.y_min..=r.y_max {
        for x in r.x_min..=r.x_max {
            if x < r.x_max && open(Edge::east(x, y)) {
                let (a, b) = (root(&mut parent, id(x, y)), root(&mut parent, id(x + 1, y)));
                parent[a] = b;
            }
            if y < r.y_max && open(Edge::north(x, y)) {
                let (a, b) = (root(&mut parent, id(x, y)), root(&mut parent, id(x, y + 1)));
                parent[a] = b;
            }
        }
    }
    let left: Vec<usize> = (r.y_min..=r.y_max).map(|y| root(&mut parent, id(r.x_min, y))).collect();
    (r.y_min..=r.y_max).any(|y| {
        let k = root(&mut parent, id(r.x_max, y));
        left.contains(&k)
    })
}

/// `Delta_1(p, p')` with crossings decided by [`reference_crossing`],
/// independent of the event detectors.
pub fn delta_one_factored(weights: &TrinaryWeights) -> f64 {
    let (h, v) = (Rect::horizontal(1), Rect::vertical(1));
    factored_delta_one(
        weights,
        &|hi: &dyn Bonds| reference_crossing(&h, |e| hi.open(e)),
        &|lo: &dyn Bonds| !reference_crossing(&v, |e| lo.open(e)),
    )
    .0
}

/// `Delta_1(p, p')` from the Δ detector over every coupled state of the
/// cross domain, with the number of detector calls.
pub fn delta_one_by_detector(weights: &TrinaryWeights) -> (f64, u64) {
    use crate::field::Constant;
    // with the other configuration at its extreme, the detector reduces to
    // one of its two factors
    factored_delta_one(
        weights,
        &|hi: &dyn Bonds| crate::events::delta(&Constant(false), hi, 1),
        &|lo: &dyn Bonds| crate::events::delta(lo, &Constant(true), 1),
    )
}

/// `Delta_1 = P[upper(w_p') and lower(w_p)]` where `upper` reads only edges
/// of `H_1` and `lower` only edges of `V_1`. Given the states of the edges
/// the two rectangles share, the factors depend on disjoint edges and are
/// independent; each is tabulated over the shared states.
fn factored_delta_one(
    weights: &TrinaryWeights,
    upper: &(dyn Fn(&dyn Bonds) -> bool + Sync),
    lower: &(dyn Fn(&dyn Bonds) -> bool + Sync),
) -> (f64, u64) {
    let (h, v) = (Rect::horizontal(1), Rect::vertical(1));
    let shared: Vec<Edge> = h.edges().into_iter().filter(|e| v.contains_edge(*e)).collect();
    let h_only: Vec<Edge> = h.edges().into_iter().filter(|e| !v.contains_edge(*e)).collect();
    let v_only: Vec<Edge> = v.edges().into_iter().filter(|e| !h.contains_edge(*e)).collect();
    let s = shared.len();
    // P(event | shared edges) with the remaining edges at `p`
    let conditional = |own: &[Edge], p: f64, event: &(dyn Fn(&dyn Bonds) -> bool + Sync), shared_mask: u64| {
        let all: Vec<Edge> = shared.iter().chain(own).copied().collect();
        let slots = Slots::new(&all);
        let mut sum = Sum::default();
        for m in 0..1u64 << own.len() {
            if event(&Masked { slots: &slots, mask: shared_mask | m << s }) {
                let k = m.count_ones() as i32;
                sum.add(p.powi(k) * (1.0 - p).powi(own.len() as i32 - k));
            }
        }
        sum.value()
    };
    let table = |own: &[Edge], p: f64, event: &(dyn Fn(&dyn Bonds) -> bool + Sync)| -> Vec<f64> {
        let one = |m: u64| conditional(own, p, event, m);
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..1u64 << s).into_par_iter().map(one).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..1u64 << s).map(one).collect()
        }
    };
    let ph = table(&h_only, weights.p_prime, upper);
    let pv = table(&v_only, weights.p, lower);
    let calls = (1u64 << s) * ((1u64 << h_only.len()) + (1u64 << v_only.len()));
    let [w0, w1, w2] = weights.weights();
    let mut sum = Sum::default();
    let mut digits = vec![0u8; s];
    loop {
        let (mut lo, mut hi, mut w) = (0u64, 0u64, 1.0);
        for (i, d) in digits.iter().enumerate() {
            match d {
                0 => w *= w0,
                1 => {
                    w *= w1;
                    hi |= 1 << i;
                }
                _ => {
                    w *= w2;
                    lo |= 1 << i;
                    hi |= 1 << i;
                }
            }
        }
        if w > 0.0 {
            sum.add(w * ph[hi as usize] * pv[lo as usize]);
        }
        let Some(i) = digits.iter().position(|d| *d < 2) else { break };
        for d in &mut digits[..i] {
            *d = 0;
        }
        digits[i] += 1;
    }
    (sum.value(), calls)
}

/// A 4-neighbour walk on the primal or dual lattice: each usable step and
/// the primal edge it uses or crosses.
struct Walk<'a> {
    step: Box<dyn Fn(Site, Step) -> Option<Edge> + 'a>,
}

impl<'a> Walk<'a> {
    fn primal(inside: impl Fn(Site) -> bool + 'a, open: impl Fn(Edge) -> bool + 'a) -> Self {
        Walk {
            step: Box::new(move |s, st| {
                let e = Edge::from_step(s, st);
                let (a, b) = e.endpoints();
                (inside(a) && inside(b) && open(e)).then_some(e)
            }),
        }
    }

    /// Faces addressed by their lower-left corner; a dual step crosses the
    /// primal edge between the two faces, which must lie inside and be
    /// closed.
    fn dual(inside: impl Fn(Site) -> bool + 'a, closed: impl Fn(Edge) -> bool + 'a) -> Self {
        Walk {
            step: Box::new(move |f, st| {
                let e = crossed(f, st);
                let (a, b) = e.endpoints();
                (inside(a) && inside(b) && closed(e)).then_some(e)
            }),
        }
    }

    fn next(&self, s: Site, st: Step) -> Option<(Site, Edge)> {
        (self.step)(s, st).map(|e| (s.step(st), e))
    }

    /// Whether some source reaches a target without the `banned` edges.
    fn reaches(&self, sources: &[Site], target: &dyn Fn(Site) -> bool, banned: &[Edge]) -> bool {
        let mut seen: std::collections::HashSet<Site> = sources.iter().copied().collect();
        let mut stack: Vec<Site> = sources.to_vec();
        while let Some(s) = stack.pop() {
            if target(s) {
                return true;
            }
            for st in Step::ALL {
                if let Some((t, e)) = self.next(s, st) {
                    if !banned.contains(&e) && seen.insert(t) {
                        stack.push(t);
                    }
                }
            }
        }
        false
    }
}

/// The primal edge crossed by a dual step from face `f`.
fn crossed(f: Site, st: Step) -> Edge {
    let g = f.step(st);
    // the shared side of two faces, from their lower-left corners
    match st {
        Step::E => Edge::north(g.x, g.y),
        Step::W => Edge::north(f.x, f.y),
        Step::N => Edge::east(g.x, g.y),
        Step::S => Edge::east(f.x, f.y),
    }
}

/// Outcome of a visit to a path prefix.
enum Visit {
    /// Keep extending the prefix.
    Extend,
    /// Abandon the prefix.
    Prune,
    /// Stop the whole search with success.
    Found,
}

/// Depth-first enumeration of simple paths from `sources` that end at their
/// first target and avoid `avoid`. `visit` sees every prefix with the edges
/// it uses; at a target it decides success.
fn simple_paths(
    walk: &Walk,
    sources: &[Site],
    is_source: &dyn Fn(Site) -> bool,
    is_target: &dyn Fn(Site) -> bool,
    avoid: &std::collections::HashSet<Site>,
    visit: &mut dyn FnMut(&[Site], &[Edge], bool) -> Visit,
) -> bool {
    fn go(
        walk: &Walk,
        is_source: &dyn Fn(Site) -> bool,
        is_target: &dyn Fn(Site) -> bool,
        avoid: &std::collections::HashSet<Site>,
        path: &mut Vec<Site>,
        edges: &mut Vec<Edge>,
        visit: &mut dyn FnMut(&[Site], &[Edge], bool) -> Visit,
    ) -> bool {
        let s = *path.last().expect("nonempty");
        let at_target = is_target(s);
        match visit(path, edges, at_target) {
            Visit::Found => return true,
            Visit::Prune => return false,
            Visit::Extend if at_target => return false,
            Visit::Extend => {}
        }
        for st in Step::ALL {
            let Some((t, e)) = walk.next(s, st) else { continue };
            // touch the sources only at the start
            if avoid.contains(&t) || path.contains(&t) || is_source(t) {
                continue;
            }
            path.push(t);
            edges.push(e);
            let found = go(walk, is_source, is_target, avoid, path, edges, visit);
            path.pop();
            edges.pop();
            if found {
                return true;
            }
        }
        false
    }
    for &s in sources {
        if avoid.contains(&s) {
            continue;
        }
        let mut path = vec![s];
        let mut edges = Vec::new();
        if go(walk, is_source, is_target, avoid, &mut path, &mut edges, visit) {
            return true;
        }
    }
    false
}

/// Monotone memo for "the dual side still works with these edges banned".
struct BanMemo<'a> {
    test: Box<dyn Fn(&[Edge]) -> bool + 'a>,
    known: std::collections::HashMap<Vec<Edge>, bool>,
}

impl<'a> BanMemo<'a> {
    fn new(test: impl Fn(&[Edge]) -> bool + 'a) -> Self {
        BanMemo { test: Box::new(test), known: Default::default() }
    }

    fn ok(&mut self, banned: &[Edge]) -> bool {
        let mut key = banned.to_vec();
        key.sort();
        key.dedup();
        if let Some(v) = self.known.get(&key) {
            return *v;
        }
        let v = (self.test)(&key);
        self.known.insert(key, v);
        v
    }
}

/// Exhaustive search for a `w_p'` path and a `w_p*` path through `e` and
/// its dual, both from the boundary of `Lambda_2n(center)` to itself, whose
/// curves meet only at the midpoint of `e`. The dual path ends on the faces
/// just outside the window.
pub fn path_pair_search<L: Bonds + ?Sized, H: Bonds + ?Sized>(
    lo: &L,
    hi: &H,
    n: i32,
    center: Site,
    e: Edge,
) -> Result<bool, Error> {
    if !(1..=2).contains(&n) {
        return Err(Error::InvalidParameter(format!("path-pair search needs n in 1..=2, got {n}")));
    }
    if lo.open(e) || !hi.open(e) {
        return Ok(false);
    }
    let m = 2 * n;
    let inside = |s: Site| s.dist(center) <= m;
    let on_boundary = |s: Site| s.dist(center) == m;
    if !inside(e.base) || !inside(e.head()) {
        return Ok(false);
    }
    let (u, v) = e.endpoints();
    let primal = Walk::primal(inside, |g| g != e && hi.open(g));
    let dual = Walk::dual(inside, |g| g != e && !lo.open(g));
    let d = dual_of(e);
    let (f1, f2) = (Site::new(d.base.x, d.base.y), Site::new(d.head().x, d.head().y));
    let on_ring = |f: Site| DualSite::new(f.x, f.y).dist2(center) == 2 * m as i64 + 1;
    // mixed edges of the primal path are the only ones the dual could cross
    let mut memo = BanMemo::new(|banned| {
        dual.reaches(&[f1], &on_ring, banned) && dual.reaches(&[f2], &on_ring, banned)
    });
    if !memo.ok(&[]) {
        return Ok(false);
    }
    let mixed = |g: &Edge| !lo.open(*g);
    let no_source = |_: Site| false;
    let avoid_v: std::collections::HashSet<Site> = [v].into_iter().collect();
    let found = simple_paths(&primal, &[u], &|s| s == u, &on_boundary, &avoid_v, &mut |path_u, edges_u, done_u| {
        let banned_u: Vec<Edge> = edges_u.iter().filter(|g| mixed(g)).copied().collect();
        if edges_u.last().is_some_and(mixed) && !memo.ok(&banned_u) {
            return Visit::Prune;
        }
        if !done_u {
            return Visit::Extend;
        }
        let used: std::collections::HashSet<Site> = path_u.iter().copied().collect();
        let found_v = simple_paths(&primal, &[v], &no_source, &on_boundary, &used, &mut |_, edges_v, done_v| {
            let mut banned = banned_u.clone();
            banned.extend(edges_v.iter().filter(|g| mixed(g)));
            if edges_v.last().is_some_and(mixed) && !memo.ok(&banned) {
                return Visit::Prune;
            }
            if done_v && memo.ok(&banned) {
                Visit::Found
            } else {
                Visit::Extend
            }
        });
        if found_v {
            Visit::Found
        } else {
            Visit::Prune
        }
    });
    Ok(found)
}

/// Mixed pivotal at scale `n` decided by [`path_pair_search`] over every
/// edge of `Lambda_n(center)`.
pub fn mixed_pivotal_by_path_pairs<L: Bonds + ?Sized, H: Bonds + ?Sized>(
    lo: &L,
    hi: &H,
    n: i32,
    center: Site,
) -> Result<bool, Error> {
    for e in LatticeBox::new(center, n).rect().edges() {
        if path_pair_search(lo, hi, n, center, e)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Exhaustive search for three disjoint arms across the annulus
/// `r <= |y - x| <= R` inside `Lambda_2n`, of types `(w_p, w_p*, w_p')` or
/// `(w_p', w_p'*, w_p*)`. Same-lattice arms share no vertex; a primal and a
/// dual arm never cross.
pub fn disjoint_arm_search<L: Bonds + ?Sized, H: Bonds + ?Sized>(
    lo: &L,
    hi: &H,
    x: Site,
    r: i32,
    big_r: i32,
    n: i32,
) -> Result<bool, Error> {
    if !(1..=2).contains(&r) || big_r > 4 || r >= big_r {
        return Err(Error::TooLarge { edges: (2 * big_r as usize + 1).pow(2) * 2, limit: 2 * 81 });
    }
    let inside = |s: Site| (r..=big_r).contains(&s.dist(x)) && s.dist(Site::ORIGIN) <= 2 * n;
    let inner = |s: Site| s.dist(x) == r;
    let outer = |s: Site| s.dist(x) == big_r;
    let inner_face = |f: Site| DualSite::new(f.x, f.y).dist2(x) == 2 * r as i64 - 1;
    let outer_face = |f: Site| DualSite::new(f.x, f.y).dist2(x) == 2 * big_r as i64 + 1;
    let sites: Vec<Site> = LatticeBox::new(x, big_r).rect().sites().filter(|s| inside(*s)).collect();
    let faces: Vec<Site> = {
        let b = LatticeBox::new(x, big_r).rect();
        (b.y_min - 1..=b.y_max)
            .flat_map(|j| (b.x_min - 1..=b.x_max).map(move |i| Site::new(i, j)))
            .filter(|f| inner_face(*f))
            .collect()
    };
    let starts: Vec<Site> = sites.iter().copied().filter(|s| inner(*s)).collect();
    let mixed = |g: &Edge| hi.open(*g) && !lo.open(*g);
    let none = std::collections::HashSet::new();

    // (w_p, w_p*, w_p'): two primal arms, then a w_p* arm crossing neither
    let lo_p = Walk::primal(inside, |g| lo.open(g));
    let hi_p = Walk::primal(inside, |g| hi.open(g));
    let lo_d = Walk::dual(inside, |g| !lo.open(g));
    let hi_d = Walk::dual(inside, |g| !hi.open(g));
    let case_one = {
        let mut memo = BanMemo::new(|banned| lo_d.reaches(&faces, &outer_face, banned));
        memo.ok(&[])
            && simple_paths(&lo_p, &starts, &inner, &outer, &none, &mut |a, _, done| {
                if !done {
                    return Visit::Extend;
                }
                let used: std::collections::HashSet<Site> = a.iter().copied().collect();
                let found = simple_paths(&hi_p, &starts, &inner, &outer, &used, &mut |_, edges, done| {
                    let banned: Vec<Edge> = edges.iter().filter(|g| mixed(g)).copied().collect();
                    if edges.last().is_some_and(mixed) && !memo.ok(&banned) {
                        return Visit::Prune;
                    }
                    if done && memo.ok(&banned) {
                        Visit::Found
                    } else {
                        Visit::Extend
                    }
                });
                if found {
                    Visit::Found
                } else {
                    Visit::Prune
                }
            })
    };
    if case_one {
        return Ok(true);
    }
    // (w_p', w_p'*, w_p*): two dual arms, then a w_p' arm crossing neither
    let mut memo = BanMemo::new(|banned| hi_p.reaches(&starts, &outer, banned));
    let case_two = memo.ok(&[])
        && simple_paths(&hi_d, &faces, &inner_face, &outer_face, &none, &mut |b, _, done| {
            if !done {
                return Visit::Extend;
            }
            let used: std::collections::HashSet<Site> = b.iter().copied().collect();
            let found = simple_paths(&lo_d, &faces, &inner_face, &outer_face, &used, &mut |_, edges, done| {
                let banned: Vec<Edge> = edges.iter().filter(|g| mixed(g)).copied().collect();
                if edges.last().is_some_and(mixed) && !memo.ok(&banned) {
                    return Visit::Prune;
                }
                if done && memo.ok(&banned) {
                    Visit::Found
                } else {
                    Visit::Extend
                }
            });
            if found {
                Visit::Found
            } else {
                Visit::Prune
            }
        });
    Ok(case_two)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectivity::box_to_box;
    use crate::field::CoupledField;

    fn crossing(r: Rect, w: TrinaryWeights) -> ExactProbability {
        exact_event("crossing", &Region::Rect(r), &w).unwrap()
    }

    #[test]
    fn closed_forms() {
        let sq = Rect::new(0, 1, 0, 1).unwrap();
        for p in [0.1, 0.37, 0.5, 0.9] {
            let got = crossing(sq, TrinaryWeights::new(p, p).unwrap()).value;
            assert!((got - (1.0 - (1.0 - p) * (1.0 - p))).abs() < 1e-12);
        }
        let half = crossing(Rect::new(0, 2, 0, 1).unwrap(), TrinaryWeights::new(0.5, 0.5).unwrap());
        let d = half.denominator_log2.unwrap();
        assert_eq!(half.numerator, Some(1u128 << (d - 1)));
        assert!((half.value - 0.5).abs() < 1e-15);
        let arm = exact_event("one-arm", &Region::Box(LatticeBox::at_origin(1)), &TrinaryWeights::new(0.5, 0.5).unwrap()).unwrap();
        assert_eq!(arm.value, 15.0 / 16.0);
    }

    #[test]
    fn marginals_and_order() {
        let r = Rect::new(0, 2, 0, 2).unwrap();
        let edges = edges_in(&Region::Rect(r));
        assert!(edges.len() <= EDGE_CAP);
        let w = TrinaryWeights::new(0.3, 0.7).unwrap();
        let on_lo = Predicate::lower_increasing(|lo| reference_crossing(&r, |e| lo.open(e)));
        let on_hi = Predicate::new(Monotone::Ignored, Monotone::Increasing, |_, hi| reference_crossing(&r, |e| hi.open(e)));
        let single = |p| enumerate_single(&edges, p, &|b| reference_crossing(&r, |e| b.open(e)), Monotone::Unknown, EDGE_CAP).unwrap().value;
        let lo = enumerate_edges(&edges, &w, &on_lo, EDGE_CAP).unwrap().value;
        let hi = enumerate_edges(&edges, &w, &on_hi, EDGE_CAP).unwrap().value;
        assert!((lo - single(0.3)).abs() < 1e-12);
        assert!((hi - single(0.7)).abs() < 1e-12);
        let mut rev = edges.clone();
        rev.reverse();
        let back = enumerate_edges(&rev, &w, &on_lo, EDGE_CAP).unwrap().value;
        assert!((back - lo).abs() < 1e-12);
        // unpruned and pruned agree
        let blind = Predicate::new(Monotone::Unknown, Monotone::Unknown, |lo, _| reference_crossing(&r, |e| lo.open(e)));
        assert!((enumerate_edges(&edges, &w, &blind, EDGE_CAP).unwrap().value - lo).abs() < 1e-12);
    }

    #[test]
    fn monotone_in_p() {
        let r = Rect::new(0, 3, 0, 2).unwrap();
        let mut last = 0.0;
        for k in 0..=10 {
            let p = k as f64 / 10.0;
            let v = crossing(r, TrinaryWeights::new(p, p).unwrap()).value;
            assert!(v + 1e-12 >= last);
            last = v;
        }
        assert!((last - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refuses_large_regions() {
        let w = TrinaryWeights::new(0.5, 0.5).unwrap();
        let big = Region::Rect(Rect::new(0, 5, 0, 5).unwrap());
        assert!(matches!(exact_event("crossing", &big, &w), Err(Error::TooLarge { .. })));
        assert!(matches!(exact_event("nope", &big, &w), Err(Error::UnknownEvent(_))));
    }

    #[test]
    fn delta_one_agrees_both_ways() {
        let w = TrinaryWeights::new(0.4, 0.6).unwrap();
        let a = delta_one_factored(&w);
        let (b, _) = delta_one_by_detector(&w);
        assert!((a - b).abs() < 1e-12);
        assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn searches_reject_large_inputs() {
        let f = CoupledField::new(1, 0).at(0.5);
        assert!(path_pair_search(&f, &f, 3, Site::ORIGIN, Edge::east(0, 0)).is_err());
        assert!(disjoint_arm_search(&f, &f, Site::new(6, 0), 1, 5, 3).is_err());
        assert!(box_to_box(&crate::field::Constant(true), Site::ORIGIN, 0, 1));
    }
}
