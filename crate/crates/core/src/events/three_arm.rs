//! Mixed three-arm events in annuli centred on the boundary of `Lambda_2n`,
//! and the bad event built from them along a ladder of scales.

use crate::arms::{find_arms, ArmSpec, Constraint};
use crate::connectivity::{path_between, DualGrid, Lattice, Mask, PathTrace, PrimalGrid};
use crate::field::Bonds;
use crate::geometry::{DualSite, LatticeBox, Rect, Site};
use crate::Error;

use super::EventOutcome;

/// Scales `eta_1 < ... < eta_k <= 1`, with the rung `i` annulus running
/// from `kappa * eta_i * n` to `eta_{i+1} * n / kappa`.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaLadder {
    etas: Vec<f64>,
    kappa: f64,
}

impl EtaLadder {
    /// Ladder with successive ratios above 100 and `kappa = 10`.
    pub fn new(etas: Vec<f64>) -> Result<Self, Error> {
        Self::check(&etas, 100.0)?;
        Ok(EtaLadder { etas, kappa: 10.0 })
    }

    /// Any increasing ladder, with `kappa = 1` so that annuli stay
    /// non-degenerate at small ratios.
    pub fn relaxed(etas: Vec<f64>) -> Result<Self, Error> {
        Self::check(&etas, 1.0)?;
        Ok(EtaLadder { etas, kappa: 1.0 })
    }

    /// Two rungs, `1/128` and `1`: the largest ladder usable at desk scale.
    pub fn practical() -> Self {
        EtaLadder { etas: vec![1.0 / 128.0, 1.0], kappa: 1.0 }
    }

    fn check(etas: &[f64], min_ratio: f64) -> Result<(), Error> {
        if etas.len() < 2 {
            return Err(Error::InvalidParameter("a ladder needs at least two rungs".into()));
        }
        if !(etas[0] > 0.0) || etas[etas.len() - 1] > 1.0 {
            return Err(Error::InvalidParameter("ladder must lie in (0, 1]".into()));
        }
        for w in etas.windows(2) {
            if !(w[1] / w[0] > min_ratio) {
                return Err(Error::InvalidParameter(format!(
                    "ladder ratio {} is not above {min_ratio}",
                    w[1] / w[0]
                )));
            }
        }
        Ok(())
    }

    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Smallest `n` allowed, `1 / eta_1` rounded up.
    pub fn floor(&self) -> i32 {
        (1.0 / self.etas[0]).ceil() as i32
    }

    /// The annuli `(r, R)` at scale `n`, integer parts taken.
    pub fn annuli(&self, n: i32) -> Vec<(i32, i32)> {
        self.etas
            .windows(2)
            .map(|w| ((self.kappa * w[0] * n as f64).floor() as i32, (w[1] * n as f64 / self.kappa).floor() as i32))
            .collect()
    }
}

/// The annulus `Lambda_R(x) \ Lambda_r(x)` (closed at both radii) inside
/// `Lambda_2n`.
struct Annulus {
    x: Site,
    r: i32,
    big_r: i32,
    mask: Mask,
}

impl Annulus {
    fn new(x: Site, r: i32, big_r: i32, n: i32) -> Option<Self> {
        let outer = LatticeBox::new(x, big_r).rect();
        let window = LatticeBox::at_origin(2 * n).rect();
        let bound = Rect {
            x_min: outer.x_min.max(window.x_min),
            x_max: outer.x_max.min(window.x_max),
            y_min: outer.y_min.max(window.y_min),
            y_max: outer.y_max.min(window.y_max),
        };
        if bound.x_min > bound.x_max || bound.y_min > bound.y_max {
            return None;
        }
        let mask = Mask::from_fn(bound, |s| s.dist(x) >= r);
        Some(Annulus { x, r, big_r, mask })
    }

    fn inner(&self) -> Vec<Site> {
        self.mask.bound().sites().filter(|s| s.dist(self.x) == self.r).collect()
    }

    fn on_outer(&self, s: Site) -> bool {
        s.dist(self.x) == self.big_r
    }

    /// Faces whose centre is at distance `r - 1/2`.
    fn inner_faces(&self) -> Vec<Site> {
        let b = self.mask.bound();
        let mut v = Vec::new();
        for y in b.y_min - 1..=b.y_max {
            for x in b.x_min - 1..=b.x_max {
                if DualSite::new(x, y).dist2(self.x) == 2 * self.r as i64 - 1 {
                    v.push(Site::new(x, y));
                }
            }
        }
        v
    }

    fn on_outer_face(&self, f: Site) -> bool {
        DualSite::new(f.x, f.y).dist2(self.x) == 2 * self.big_r as i64 + 1
    }
}

/// Mixed three-arm event at `x` between radii `r` and `R`. Either arms of
/// types `(w_p, w_p*, w_p')` or of types `(w_p', w_p'*, w_p*)`, pairwise
/// disjoint.
pub fn mixed_three_arm<L: Bonds + ?Sized, H: Bonds + ?Sized>(
    lo: &L,
    hi: &H,
    x: Site,
    r: i32,
    big_r: i32,
    n: i32,
) -> Result<EventOutcome, Error> {
    if r < 1 || 2 * r > big_r || big_r > n {
        return Err(Error::InvalidParameter(format!("degenerate annulus: r={r}, R={big_r}, n={n}")));
    }
    if x.dist(Site::ORIGIN) != 2 * n {
        return Err(Error::InvalidParameter(format!("{x:?} is not on the boundary of the box of radius {}", 2 * n)));
    }
    Ok(mixed_three_arm_unchecked(lo, hi, x, r, big_r, n))
}

/// [`mixed_three_arm`] for any `1 <= r < R`, without the range checks.
pub fn mixed_three_arm_unchecked<L: Bonds + ?Sized, H: Bonds + ?Sized>(
    lo: &L,
    hi: &H,
    x: Site,
    r: i32,
    big_r: i32,
    n: i32,
) -> EventOutcome {
    let Some(a) = Annulus::new(x, r, big_r, n) else { return EventOutcome::no() };
    let inner = a.inner();
    let inner_faces = a.inner_faces();
    let on_outer = |s: Site| a.on_outer(s);
    let on_outer_face = |f: Site| a.on_outer_face(f);
    let lo_p = PrimalGrid { bonds: lo, mask: &a.mask };
    let hi_p = PrimalGrid { bonds: hi, mask: &a.mask };
    let lo_d = DualGrid { bonds: lo, mask: &a.mask };
    let hi_d = DualGrid { bonds: hi, mask: &a.mask };
    // both cases need a w_p' arm and a w_p* arm
    if path_between(&hi_p, &inner, on_outer, false).is_none()
        || path_between(&lo_d, &inner_faces, on_outer_face, false).is_none()
    {
        return EventOutcome::no();
    }
    let primal = |g| ArmSpec { grid: g, lattice: Lattice::Primal, sources: inner.clone(), target: &on_outer };
    let dual = |g| ArmSpec { grid: g, lattice: Lattice::Dual, sources: inner_faces.clone(), target: &on_outer_face };
    let cases = [
        (
            [primal(&lo_p), dual(&lo_d), primal(&hi_p)],
            [Constraint::VertexDisjoint(0, 2), Constraint::NoCross(2, 1), Constraint::NoCross(0, 1)],
        ),
        (
            [primal(&hi_p), dual(&hi_d), dual(&lo_d)],
            [Constraint::NoCross(0, 2), Constraint::VertexDisjoint(1, 2), Constraint::NoCross(0, 1)],
        ),
    ];
    for (arms, cons) in cases {
        if let Some(paths) = find_arms(&arms, &cons) {
            let traces = arms
                .iter()
                .zip(paths)
                .map(|(s, p)| match s.lattice {
                    Lattice::Primal => PathTrace::primal(p),
                    Lattice::Dual => PathTrace::dual(p),
                })
                .collect();
            return EventOutcome::yes(traces);
        }
    }
    EventOutcome::no()
}

/// Some mixed three-arm event at a site of `dLambda_2n` in one of the
/// ladder's annuli. Rungs whose annulus is empty after integer parts
/// (`r >= R`) contribute nothing.
pub fn bad_event<L: Bonds + ?Sized, H: Bonds + ?Sized>(
    lo: &L,
    hi: &H,
    n: i32,
    ladder: &EtaLadder,
) -> Result<EventOutcome, Error> {
    if n < ladder.floor() {
        return Err(Error::InvalidParameter(format!("below ladder floor: n={n} < {}", ladder.floor())));
    }
    let boundary = LatticeBox::at_origin(2 * n).boundary();
    for (r, big_r) in ladder.annuli(n) {
        if r < 1 || r >= big_r {
            continue;
        }
        for &x in &boundary {
            let out = mixed_three_arm_unchecked(lo, hi, x, r, big_r, n);
            if out.occurred {
                return Ok(out);
            }
        }
    }
    Ok(EventOutcome::no())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Constant, CoupledField};

    #[test]
    fn extremes() {
        let x = Site::new(6, 1);
        let (t, f) = (Constant(true), Constant(false));
        assert!(!mixed_three_arm(&t, &t, x, 1, 3, 3).unwrap().occurred);
        assert!(!mixed_three_arm(&f, &t, x, 1, 3, 3).unwrap().occurred);
        assert!(mixed_three_arm(&f, &t, x, 2, 3, 3).is_err());
        assert!(mixed_three_arm(&f, &t, Site::new(5, 1), 1, 3, 3).is_err());
        let ladder = EtaLadder::practical();
        assert!(bad_event(&t, &t, 64, &ladder).is_err());
        assert!(!bad_event(&t, &t, 128, &ladder).unwrap().occurred);
    }

    #[test]
    fn ladders() {
        assert!(EtaLadder::new(vec![1e-4, 0.5]).is_ok());
        assert!(EtaLadder::new(vec![0.01, 0.5]).is_err());
        assert!(EtaLadder::relaxed(vec![0.25, 0.5, 1.0]).is_ok());
        assert!(EtaLadder::relaxed(vec![0.5, 0.25]).is_err());
        assert_eq!(EtaLadder::practical().annuli(128), vec![(1, 128)]);
    }

    #[test]
    fn witnesses_are_valid() {
        let mut hits = 0;
        for k in 0..400 {
            let fld = CoupledField::new(9, k);
            let (lo, hi) = (fld.at(0.45), fld.at(0.6));
            let out = mixed_three_arm(&lo, &hi, Site::new(2, 6), 1, 3, 3).unwrap();
            if !out.occurred {
                continue;
            }
            hits += 1;
            let w = &out.witnesses;
            assert_eq!(w.len(), 3);
            let ok_lo = w[0].verify(&lo) && w[1].verify(&lo) && w[2].verify(&hi);
            let ok_hi = w[0].verify(&hi) && w[1].verify(&hi) && w[2].verify(&lo);
            assert!(ok_lo || ok_hi);
        }
        assert!(hits > 0);
    }
}
