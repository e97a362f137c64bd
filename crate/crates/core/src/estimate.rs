//! Monte Carlo estimators with Wilson intervals.
//!
//! Sample `k` of a run with seed `s` is the field `CoupledField::new(s, k)`,
//! so every estimate is a function of `(seed, parameters, samples)` alone.
//! Aggregation is by exact integer counts or by order-preserving collection,
//! which keeps results bit-identical across thread counts.

use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::connectivity::{arm_radius, crossing_path, crosses, Direction, PathTrace};
use crate::events::{self, EtaLadder, EventOutcome};
use crate::field::{Bonds, CoupledField};
use crate::geometry::{LatticeBox, Rect, Region, Site};
use crate::oracle::region_crossed;
use crate::{check_params, Error};

/// Normal quantile for two-sided 95% intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Largest proxy scale for the infinite-volume density.
pub const M_MAX: i32 = 512;

/// A success frequency with its 95% Wilson interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub event: String,
    pub params: Value,
    pub trials: u64,
    pub successes: u64,
    pub point: f64,
    pub ci95: [f64; 2],
    pub seed: u64,
    pub wall_ms: u64,
}

impl Estimate {
    pub fn new(event: &str, params: Value, successes: u64, trials: u64, seed: u64, wall_ms: u64) -> Self {
        let point = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
        let ci95 = wilson(successes, trials);
        Estimate { event: event.to_string(), params, trials, successes, point, ci95, seed, wall_ms }
    }

    /// Normal-approximation standard error of the point estimate.
    pub fn sigma(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        (self.point * (1.0 - self.point) / self.trials as f64).sqrt()
    }

    pub fn width(&self) -> f64 {
        self.ci95[1] - self.ci95[0]
    }
}

/// Wilson score interval at 95%, clamped to `[0, 1]`. Empty runs give the
/// whole unit interval.
pub fn wilson(successes: u64, trials: u64) -> [f64; 2] {
    if trials == 0 {
        return [0.0, 1.0];
    }
    let n = trials as f64;
    let q = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (q + z2 / (2.0 * n)) / denom;
    let half = Z95 * (q * (1.0 - q) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let mut lo = (centre - half).max(0.0);
    let mut hi = (centre + half).min(1.0);
    // exact endpoints at the boundary counts
    if successes == 0 {
        lo = 0.0;
    }
    if successes == trials {
        hi = 1.0;
    }
    [lo.min(q), hi.max(q)]
}

/// Sample mean of a nonnegative count with a normal 95% interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub event: String,
    pub params: Value,
    pub trials: u64,
    pub mean: f64,
    pub stderr: f64,
    pub ci95: [f64; 2],
    pub max: u64,
    pub seed: u64,
    pub wall_ms: u64,
}

impl MeanEstimate {
    pub fn from_counts(event: &str, params: Value, counts: &[u64], seed: u64, wall_ms: u64) -> Self {
        let k = counts.len() as f64;
        let mean = if counts.is_empty() { 0.0 } else { counts.iter().map(|&c| c as f64).sum::<f64>() / k };
        let var = if counts.len() < 2 {
            0.0
        } else {
            counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (k - 1.0)
        };
        let stderr = if counts.is_empty() { 0.0 } else { (var / k).sqrt() };
        MeanEstimate {
            event: event.to_string(),
            params,
            trials: counts.len() as u64,
            mean,
            stderr,
            ci95: [(mean - Z95 * stderr).max(0.0), mean + Z95 * stderr],
            max: counts.iter().copied().max().unwrap_or(0),
            seed,
            wall_ms,
        }
    }
}

/// `f(k)` for every stream `k < samples`, in stream order.
pub fn map_samples<T: Send>(samples: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..samples).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..samples).map(f).collect()
    }
}

/// Number of streams `k < samples` on which `f` holds.
pub fn count_samples(samples: u64, f: impl Fn(u64) -> bool + Sync + Send) -> u64 {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..samples).into_par_iter().filter(|&k| f(k)).count() as u64
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..samples).filter(|&k| f(k)).count() as u64
    }
}

fn elapsed_ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

fn check_samples(samples: u64) -> Result<(), Error> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    Ok(())
}

/// A named event with its geometry, evaluated on the pair `(w_p, w_p')`.
#[derive(Clone, Debug, PartialEq)]
pub enum EventSpec {
    /// Left-right crossing of a region by `w_p`.
    Crossing(Region),
    Delta { n: i32 },
    MixedPivotal { n: i32, center: Site },
    Switch { x: Site, n: i32 },
    PivotalSwitch { x: Site, n: i32, big_n: i32 },
    /// At least one `p`-closed pivotal switch.
    SwitchCount { n: i32, big_n: i32 },
    OneArm { center: Site, n: i32, big_n: i32 },
    MixedThreeArm { x: Site, r: i32, big_r: i32, n: i32 },
    BadEvent { n: i32, ladder: EtaLadder },
}

/// Extra scales for [`EventSpec::from_cli`] that a region cannot carry.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventScales {
    pub n: Option<i32>,
    pub big_n: Option<i32>,
    pub r: Option<i32>,
    pub ladder: Option<EtaLadder>,
}

impl EventSpec {
    /// Builds an event from its CLI name and region. Scales come from the
    /// region where possible: `cross:<N>` for `delta` and `switch-count`,
    /// `box:<n>@<x>,<y>` for the pivotal and switch events, `box:<N>@..`
    /// for `one-arm` and `box:<R>@<x>` for `mixed-three-arm`.
    pub fn from_cli(name: &str, region: &Region, scales: &EventScales) -> Result<Self, Error> {
        let need = |v: Option<i32>, what: &str| {
            v.ok_or_else(|| Error::InvalidParameter(format!("event `{name}` needs --{what}")))
        };
        let boxed = || match region {
            Region::Box(b) => Ok(*b),
            _ => Err(Error::InvalidParameter(format!("event `{name}` needs a box:<n>@<x>,<y> region"))),
        };
        let cross = || match region {
            Region::Cross(c) => Ok(c.scale),
            _ => Err(Error::InvalidParameter(format!("event `{name}` needs a cross:<N> region"))),
        };
        Ok(match name {
            "crossing" => EventSpec::Crossing(*region),
            "delta" => EventSpec::Delta { n: cross()? },
            "mixed-pivotal" => {
                let b = boxed()?;
                EventSpec::MixedPivotal { n: b.radius, center: b.center }
            }
            "switch" => {
                let b = boxed()?;
                EventSpec::Switch { x: b.center, n: b.radius }
            }
            "pivotal-switch" => {
                let b = boxed()?;
                EventSpec::PivotalSwitch { x: b.center, n: b.radius, big_n: need(scales.big_n, "big-n")? }
            }
            "switch-count" => EventSpec::SwitchCount { n: need(scales.n, "n")?, big_n: cross()? },
            "one-arm" => {
                let b = boxed()?;
                EventSpec::OneArm { center: b.center, n: scales.n.unwrap_or(0), big_n: b.radius }
            }
            "mixed-three-arm" => {
                let b = boxed()?;
                EventSpec::MixedThreeArm { x: b.center, r: need(scales.r, "r")?, big_r: b.radius, n: need(scales.n, "n")? }
            }
            "bad-event" => {
                let n = match region {
                    Region::Box(b) => b.radius,
                    _ => need(scales.n, "n")?,
                };
                EventSpec::BadEvent { n, ladder: scales.ladder.clone().unwrap_or_else(EtaLadder::practical) }
            }
            other => return Err(Error::UnknownEvent(other.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            EventSpec::Crossing(_) => "crossing",
            EventSpec::Delta { .. } => "delta",
            EventSpec::MixedPivotal { .. } => "mixed-pivotal",
            EventSpec::Switch { .. } => "switch",
            EventSpec::PivotalSwitch { .. } => "pivotal-switch",
            EventSpec::SwitchCount { .. } => "switch-count",
            EventSpec::OneArm { .. } => "one-arm",
            EventSpec::MixedThreeArm { .. } => "mixed-three-arm",
            EventSpec::BadEvent { .. } => "bad-event",
        }
    }

    /// The geometric parameters as JSON.
    pub fn params(&self) -> Value {
        match self {
            EventSpec::Crossing(r) => json!({ "region": r.to_string() }),
            EventSpec::Delta { n } => json!({ "n": n }),
            EventSpec::MixedPivotal { n, center } => json!({ "n": n, "center": [center.x, center.y] }),
            EventSpec::Switch { x, n } => json!({ "x": [x.x, x.y], "n": n }),
            EventSpec::PivotalSwitch { x, n, big_n } => json!({ "x": [x.x, x.y], "n": n, "N": big_n }),
            EventSpec::SwitchCount { n, big_n } => json!({ "n": n, "N": big_n }),
            EventSpec::OneArm { center, n, big_n } => json!({ "center": [center.x, center.y], "n": n, "N": big_n }),
            EventSpec::MixedThreeArm { x, r, big_r, n } => json!({ "x": [x.x, x.y], "r": r, "R": big_r, "n": n }),
            EventSpec::BadEvent { n, ladder } => json!({ "n": n, "etas": ladder.etas(), "kappa": ladder.kappa() }),
        }
    }

    /// Rejects malformed geometry once, before sampling.
    pub fn validate(&self) -> Result<(), Error> {
        let lo = crate::field::Constant(false);
        self.outcome(&lo, &lo, false).map(|_| ())
    }

    /// Whether the event occurs, without witnesses.
    pub fn occurs<L: Bonds + ?Sized, H: Bonds + ?Sized>(&self, lo: &L, hi: &H) -> Result<bool, Error> {
        Ok(match self {
            EventSpec::Crossing(r) => region_crossed(lo, r),
            EventSpec::Delta { n } => events::delta_event(lo, hi, *n)?.occurred,
            EventSpec::MixedPivotal { n, center } => events::has_mixed_pivotal(lo, hi, *n, *center),
            EventSpec::SwitchCount { n, big_n } => events::count_closed_pivotal_switches(lo, *n, *big_n)? > 0,
            EventSpec::OneArm { center, n, big_n } => {
                if *center == Site::ORIGIN {
                    events::one_arm(lo, *n, *big_n)?
                } else {
                    self.outcome(lo, hi, false)?.occurred
                }
            }
            _ => self.outcome(lo, hi, false)?.occurred,
        })
    }

    /// The outcome with witness paths when asked for.
    pub fn outcome<L: Bonds + ?Sized, H: Bonds + ?Sized>(
        &self,
        lo: &L,
        hi: &H,
        want_witness: bool,
    ) -> Result<EventOutcome, Error> {
        let flag = |b: bool| if b { EventOutcome::yes(Vec::new()) } else { EventOutcome::no() };
        match self {
            EventSpec::Crossing(r) => {
                if !want_witness {
                    return Ok(flag(region_crossed(lo, r)));
                }
                match r {
                    Region::Cross(_) => Ok(flag(region_crossed(lo, r))),
                    _ => Ok(match crossing_path(lo, &r.bounding(), Direction::LeftRight) {
                        Some(p) => EventOutcome::yes(vec![p]),
                        None => EventOutcome::no(),
                    }),
                }
            }
            EventSpec::Delta { n } => {
                let out = events::delta_event(lo, hi, *n)?;
                Ok(if want_witness { out } else { flag(out.occurred) })
            }
            EventSpec::MixedPivotal { n, center } => {
                if want_witness {
                    events::mixed_pivotal(lo, hi, *n, *center)
                } else {
                    Ok(flag(events::has_mixed_pivotal(lo, hi, *n, *center)))
                }
            }
            EventSpec::Switch { x, n } => {
                let rec = events::detect_switch(lo, *x, *n)?;
                Ok(if rec.is_switch { EventOutcome::yes(switch_paths(&rec)) } else { EventOutcome::no() })
            }
            EventSpec::PivotalSwitch { x, n, big_n } => {
                if !events::is_pivotal_switch(lo, *x, *n, *big_n)? {
                    return Ok(EventOutcome::no());
                }
                Ok(EventOutcome::yes(switch_paths(&events::detect_switch(lo, *x, *n)?)))
            }
            EventSpec::SwitchCount { n, big_n } => Ok(flag(events::count_closed_pivotal_switches(lo, *n, *big_n)? > 0)),
            EventSpec::OneArm { center, n, big_n } => {
                if *n < 0 || n >= big_n {
                    return Err(Error::InvalidParameter(format!("one-arm needs 0 <= n < N, got n={n}, N={big_n}")));
                }
                let outer = LatticeBox::new(*center, *big_n);
                let inner = LatticeBox::new(*center, *n);
                let sources = if *n == 0 { vec![*center] } else { inner.boundary() };
                let mask = crate::connectivity::Mask::rect(outer.rect());
                let g = crate::connectivity::PrimalGrid { bonds: lo, mask: &mask };
                let found = crate::connectivity::path_between(&g, &sources, |s| outer.on_boundary(s), want_witness);
                Ok(match found {
                    Some(p) if want_witness => EventOutcome::yes(vec![PathTrace::primal(p)]),
                    Some(_) => EventOutcome::yes(Vec::new()),
                    None => EventOutcome::no(),
                })
            }
            EventSpec::MixedThreeArm { x, r, big_r, n } => events::mixed_three_arm(lo, hi, *x, *r, *big_r, *n),
            EventSpec::BadEvent { n, ladder } => events::bad_event(lo, hi, *n, ladder),
        }
    }
}

fn switch_paths(rec: &events::SwitchRecord) -> Vec<PathTrace> {
    [&rec.gamma_l, &rec.gamma_r, &rec.gamma_star_b, &rec.gamma_star_t]
        .into_iter()
        .filter_map(|p| p.clone())
        .collect()
}

fn pair_params(spec_params: Value, p: f64, p_prime: f64) -> Value {
    let mut v = spec_params;
    if let Value::Object(m) = &mut v {
        m.insert("p".into(), json!(p));
        m.insert("p_prime".into(), json!(p_prime));
    }
    v
}

/// Frequency of an event over streams `0..samples`.
pub fn mc_estimate(spec: &EventSpec, p: f64, p_prime: f64, samples: u64, seed: u64) -> Result<Estimate, Error> {
    check_params(p, p_prime)?;
    check_samples(samples)?;
    spec.validate()?;
    let t = Instant::now();
    let hits = count_samples(samples, |k| {
        let f = CoupledField::new(seed, k);
        // geometry was validated above
        spec.occurs(&f.at(p), &f.at(p_prime)).unwrap_or(false)
    });
    Ok(Estimate::new(spec.name(), pair_params(spec.params(), p, p_prime), hits, samples, seed, elapsed_ms(t)))
}

/// `theta_N(p)`, the probability that the origin reaches `dLambda_N`.
pub fn estimate_theta(p: f64, big_n: i32, samples: u64, seed: u64) -> Result<Estimate, Error> {
    estimate_theta_nn(p, 0, big_n, samples, seed)
}

/// `theta_{n,N}(p)`, the probability that `Lambda_n` reaches `dLambda_N`.
pub fn estimate_theta_nn(p: f64, n: i32, big_n: i32, samples: u64, seed: u64) -> Result<Estimate, Error> {
    check_params(p, p)?;
    check_samples(samples)?;
    if n < 0 || n >= big_n {
        return Err(Error::InvalidParameter(format!("need 0 <= n < N, got n={n}, N={big_n}")));
    }
    let t = Instant::now();
    let hits = count_samples(samples, |k| {
        let c = CoupledField::new(seed, k).at(p);
        if n == 0 {
            arm_radius(&c, big_n) == big_n
        } else {
            crate::connectivity::box_to_box(&c, Site::ORIGIN, n, big_n)
        }
    });
    Ok(Estimate::new("one-arm", json!({ "p": p, "n": n, "N": big_n }), hits, samples, seed, elapsed_ms(t)))
}

/// `theta_N(p)` for every `N` in `scales` from one set of samples: each
/// sample runs one arm search to the largest scale.
pub fn theta_profile(p: f64, scales: &[i32], samples: u64, seed: u64) -> Result<Vec<Estimate>, Error> {
    check_params(p, p)?;
    check_samples(samples)?;
    let Some(&top) = scales.iter().max() else { return Ok(Vec::new()) };
    if scales.iter().any(|&s| s < 1) {
        return Err(Error::InvalidParameter("scales must be positive".into()));
    }
    let t = Instant::now();
    let radii = map_samples(samples, |k| arm_radius(&CoupledField::new(seed, k).at(p), top));
    let ms = elapsed_ms(t);
    Ok(scales
        .iter()
        .map(|&s| {
            let hits = radii.iter().filter(|&&r| r >= s).count() as u64;
            Estimate::new("one-arm", json!({ "p": p, "n": 0, "N": s }), hits, samples, seed, ms)
        })
        .collect())
}

/// How the correlation length is read off.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum XiMethod {
    /// Smallest dyadic `L` at which the dual easy-way crossing probability
    /// of `[0,L] x [0,2L]` falls to the threshold.
    DualCrossing,
    /// Smallest dyadic `L` at which `theta_L - theta_M` falls below the
    /// threshold times `theta_1 - theta_M`, with `M = M_MAX`.
    ThetaDiff,
}

/// A correlation-length estimate. `l_hat` is `None` when censored at
/// `l_max`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XiEstimate {
    pub p: f64,
    #[serde(serialize_with = "censored")]
    pub l_hat: Option<i32>,
    pub threshold: f64,
    pub l_max: i32,
    pub method: XiMethod,
    /// The swept scales and their estimates.
    pub sweep: Vec<(i32, Estimate)>,
}

fn censored<S: serde::Serializer>(v: &Option<i32>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(l) => s.serialize_i32(*l),
        None => s.serialize_str("censored"),
    }
}

impl XiEstimate {
    /// `l_hat`, or `l_max` when censored.
    pub fn scale(&self) -> i32 {
        self.l_hat.unwrap_or(self.l_max)
    }

    pub fn is_censored(&self) -> bool {
        self.l_hat.is_none()
    }
}

fn dyadic_up_to(l_max: i32) -> Vec<i32> {
    std::iter::successors(Some(1i32), |l| l.checked_mul(2)).take_while(|&l| l <= l_max).collect()
}

/// Correlation length at `p >= 1/2` by the dual easy-way crossing rule.
pub fn estimate_xi(p: f64, threshold: f64, l_max: i32, samples: u64, seed: u64) -> Result<XiEstimate, Error> {
    estimate_xi_with(XiMethod::DualCrossing, p, threshold, l_max, samples, seed)
}

pub fn estimate_xi_with(
    method: XiMethod,
    p: f64,
    threshold: f64,
    l_max: i32,
    samples: u64,
    seed: u64,
) -> Result<XiEstimate, Error> {
    check_params(p, p)?;
    check_samples(samples)?;
    if p < 0.5 {
        return Err(Error::InvalidParameter(format!("correlation length needs p >= 1/2, got {p}")));
    }
    if l_max < 1 {
        return Err(Error::InvalidParameter("L_max must be positive".into()));
    }
    let mut sweep = Vec::new();
    let mut l_hat = None;
    match method {
        XiMethod::DualCrossing => {
            // w_{1-p} has the law of the dual configuration of w_p
            let q = 1.0 - p;
            for l in dyadic_up_to(l_max) {
                let t = Instant::now();
                let r = Rect { x_min: 0, x_max: l, y_min: 0, y_max: 2 * l };
                let hits = count_samples(samples, |k| crosses(&CoupledField::new(seed, k).at(q), &r, Direction::LeftRight));
                let e = Estimate::new("dual-easy-crossing", json!({ "p": p, "L": l }), hits, samples, seed, elapsed_ms(t));
                let done = e.point <= threshold;
                sweep.push((l, e));
                if done {
                    l_hat = Some(l);
                    break;
                }
            }
        }
        XiMethod::ThetaDiff => {
            let mut scales = dyadic_up_to(l_max);
            scales.push(M_MAX.max(2 * l_max));
            let prof = theta_profile(p, &scales, samples, seed)?;
            let limit = prof.last().map(|e| e.point).unwrap_or(0.0);
            let first = prof.first().map(|e| e.point).unwrap_or(1.0);
            let span = (first - limit).max(f64::MIN_POSITIVE);
            for (l, e) in scales.iter().zip(prof.iter()).take(scales.len() - 1) {
                sweep.push((*l, e.clone()));
                if l_hat.is_none() && (e.point - limit) / span <= threshold {
                    l_hat = Some(*l);
                }
            }
        }
    }
    Ok(XiEstimate { p, l_hat, threshold, l_max, method, sweep })
}

/// Proxy for `theta(p)`: `theta_M(p)` with `M = min(8 xi(p), M_MAX)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaInfEstimate {
    pub estimate: Estimate,
    pub proxy_scale: i32,
    pub proxy_truncated: bool,
    pub xi: XiEstimate,
}

pub fn estimate_theta_inf(p: f64, samples: u64, seed: u64) -> Result<ThetaInfEstimate, Error> {
    estimate_theta_inf_with(XiMethod::DualCrossing, p, samples, seed)
}

pub fn estimate_theta_inf_with(method: XiMethod, p: f64, samples: u64, seed: u64) -> Result<ThetaInfEstimate, Error> {
    if p <= 0.5 {
        return Err(Error::InvalidParameter(format!("theta proxy needs p > 1/2, got {p}")));
    }
    let xi = estimate_xi_with(method, p, (-1.0f64).exp(), M_MAX / 8, samples, seed)?;
    let (m, truncated) = match xi.l_hat {
        Some(l) if 8 * l <= M_MAX => (8 * l, false),
        _ => (M_MAX, true),
    };
    let estimate = estimate_theta(p, m, samples, seed)?;
    Ok(ThetaInfEstimate { estimate, proxy_scale: m, proxy_truncated: truncated, xi })
}

/// Mean number `X` of `p`-closed pivotal switches on the grid at scales
/// `(n, N)`.
pub fn estimate_ex(p: f64, n: i32, big_n: i32, samples: u64, seed: u64) -> Result<MeanEstimate, Error> {
    check_params(p, p)?;
    check_samples(samples)?;
    crate::geometry::switch_grid(n, big_n)?;
    let t = Instant::now();
    let counts = map_samples(samples, |k| {
        events::count_closed_pivotal_switches(&CoupledField::new(seed, k).at(p), n, big_n).unwrap_or(0)
    });
    Ok(MeanEstimate::from_counts("switch-count", json!({ "p": p, "n": n, "N": big_n }), &counts, seed, elapsed_ms(t)))
}

/// Weighted least-squares fit of `log estimate` against `log N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub points: usize,
}

/// Fits `log point = intercept + slope log N`. Needs at least four points,
/// each with a 95% interval narrower than a third of its value. Weights are
/// inverse variances of `log point`; exact points get equal weights.
pub fn fit_exponent(points: &[(i32, Estimate)]) -> Result<ExponentFit, Error> {
    if points.len() < 4 {
        return Err(Error::InvalidParameter("insufficient precision: need at least 4 points".into()));
    }
    for (n, e) in points {
        if *n < 1 || !(e.point > 0.0) || !(e.width() < e.point / 3.0) {
            return Err(Error::InvalidParameter(format!("insufficient precision at N={n}")));
        }
    }
    let xs: Vec<f64> = points.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| e.point.ln()).collect();
    let sig: Vec<f64> = points.iter().map(|(_, e)| e.width() / (2.0 * Z95) / e.point).collect();
    let ws: Vec<f64> = if sig.iter().all(|&s| s > 0.0) { sig.iter().map(|s| 1.0 / (s * s)).collect() } else { vec![1.0; points.len()] };
    Ok(weighted_line(&xs, &ys, &ws))
}

fn weighted_line(xs: &[f64], ys: &[f64], ws: &[f64]) -> ExponentFit {
    let sw: f64 = ws.iter().sum();
    let mx = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ys.iter().zip(ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(ws).map(|(x, w)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).zip(ws).map(|((x, y), w)| w * (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let k = xs.len() as f64;
    let rss: f64 = xs.iter().zip(ys).zip(ws).map(|((x, y), w)| w * (y - intercept - slope * x).powi(2)).sum();
    let stderr = if k > 2.0 { (rss / (k - 2.0) / sxx).sqrt() } else { 0.0 };
    ExponentFit { slope, intercept, stderr, points: xs.len() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(q: f64) -> Estimate {
        let trials = 1_000_000_000u64;
        let mut e = Estimate::new("synthetic", json!({}), (q * trials as f64).round() as u64, trials, 0, 0);
        e.point = q;
        e
    }

    #[test]
    fn wilson_edges() {
        assert_eq!(wilson(0, 0), [0.0, 1.0]);
        let [lo, hi] = wilson(0, 10);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.35);
        let [lo, hi] = wilson(10, 10);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.65);
        let [lo, hi] = wilson(50, 100);
        assert!((lo + hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wilson_coverage() {
        // 1000 Bernoulli problems with known q, drawn from the hashed field
        let mut covered = 0;
        for j in 0..1000u64 {
            let f = CoupledField::new(99, j);
            let q = f.uniform(crate::geometry::Edge::east(-1, -1));
            let trials = 200u64;
            let hits = (0..trials).filter(|&t| f.uniform(crate::geometry::Edge::east(t as i32, 0)) <= q).count() as u64;
            let [lo, hi] = wilson(hits, trials);
            if lo <= q && q <= hi {
                covered += 1;
            }
        }
        assert!(covered >= 930, "coverage {covered}/1000");
    }

    #[test]
    fn unit_square_crossing() {
        let spec = EventSpec::Crossing(Region::Rect(Rect::new(0, 1, 0, 1).unwrap()));
        let e = mc_estimate(&spec, 0.5, 0.5, 100_000, 3).unwrap();
        assert!((e.point - 0.75).abs() < 3.0 * e.sigma());
        let one = mc_estimate(&spec, 1.0, 1.0, 500, 3).unwrap();
        assert_eq!(one.point, 1.0);
        assert!(mc_estimate(&spec, 0.5, 0.5, 0, 3).is_err());
    }

    #[test]
    fn theta_values() {
        let e = estimate_theta(0.5, 1, 100_000, 5).unwrap();
        assert!((e.point - 15.0 / 16.0).abs() < 3.0 * e.sigma());
        assert_eq!(estimate_theta(1.0, 64, 50, 5).unwrap().point, 1.0);
        let prof = theta_profile(0.5, &[4, 8, 16, 32], 20_000, 5).unwrap();
        for w in prof.windows(2) {
            assert!(w[1].point <= w[0].point);
        }
        // the profile and the direct estimate agree sample by sample
        assert_eq!(prof[1].successes, estimate_theta(0.5, 8, 20_000, 5).unwrap().successes);
        assert!(estimate_theta_nn(0.5, 4, 4, 10, 5).is_err());
    }

    #[test]
    fn xi_extremes() {
        let one = estimate_xi(1.0, (-1.0f64).exp(), 64, 200, 1).unwrap();
        assert_eq!(one.l_hat, Some(1));
        let crit = estimate_xi(0.5, (-1.0f64).exp(), 32, 2000, 1).unwrap();
        assert!(crit.is_censored());
        assert!(estimate_xi(0.4, 0.3, 8, 10, 1).is_err());
        let json = serde_json::to_value(&crit).unwrap();
        assert_eq!(json["l_hat"], "censored");
    }

    #[test]
    fn ex_at_p_one_is_zero() {
        let e = estimate_ex(1.0, 1, 16, 20, 1).unwrap();
        assert_eq!(e.mean, 0.0);
        assert!(estimate_ex(0.5, 2, 16, 20, 1).is_err());
    }

    #[test]
    fn exact_power_law_fit() {
        let pts: Vec<(i32, Estimate)> = [16, 32, 64, 128, 256].iter().map(|&n| (n, synthetic((n as f64).powf(-0.1)))).collect();
        let mut exact = pts.clone();
        for (_, e) in exact.iter_mut() {
            e.ci95 = [e.point, e.point];
        }
        let fit = fit_exponent(&exact).unwrap();
        assert!((fit.slope + 0.1).abs() < 1e-12);
        let noisy: Vec<(i32, Estimate)> = pts
            .iter()
            .enumerate()
            .map(|(i, (n, _))| {
                let noise = 1.0 + 0.01 * [1.0, -1.0, 0.5, -0.5, 1.0][i];
                (*n, synthetic((*n as f64).powf(-5.0 / 48.0) * noise))
            })
            .collect();
        let fit = fit_exponent(&noisy).unwrap();
        assert!((fit.slope + 5.0 / 48.0).abs() < 0.02);
        assert!(fit_exponent(&noisy[..3]).is_err());
        let mut wide = noisy.clone();
        wide[0].1.ci95 = [0.0, 1.0];
        assert!(fit_exponent(&wide).is_err());
    }

    #[test]
    fn cli_events() {
        let scales = EventScales { n: Some(1), big_n: Some(16), r: Some(1), ladder: None };
        let parse = |name: &str, r: &str| EventSpec::from_cli(name, &r.parse().unwrap(), &scales);
        assert_eq!(parse("delta", "cross:2").unwrap(), EventSpec::Delta { n: 2 });
        assert!(parse("delta", "box:2").is_err());
        assert!(parse("nope", "box:2").is_err());
        assert_eq!(parse("one-arm", "box:8").unwrap(), EventSpec::OneArm { center: Site::ORIGIN, n: 1, big_n: 8 });
        let three = EventScales { n: Some(3), ..scales.clone() };
        let arm = |r: &str| EventSpec::from_cli("mixed-three-arm", &r.parse().unwrap(), &three).unwrap();
        assert!(arm("box:3@6,1").validate().is_ok());
        assert!(arm("box:3@5,1").validate().is_err());
        for name in ["crossing", "mixed-pivotal", "switch", "pivotal-switch", "bad-event"] {
            let spec = parse(name, "box:1").unwrap();
            assert_eq!(spec.name(), name);
        }
        assert!(parse("switch-count", "cross:16").unwrap().validate().is_ok());
    }

    #[test]
    fn same_streams_give_same_counts() {
        let spec = EventSpec::Delta { n: 4 };
        let a = mc_estimate(&spec, 0.5, 0.55, 3000, 11).unwrap();
        let b = mc_estimate(&spec, 0.5, 0.55, 3000, 11).unwrap();
        assert_eq!(a.successes, b.successes);
        let e = mc_estimate(&EventSpec::MixedPivotal { n: 4, center: Site::ORIGIN }, 0.5, 0.55, 3000, 11).unwrap();
        assert!(a.successes <= e.successes);
    }
}
