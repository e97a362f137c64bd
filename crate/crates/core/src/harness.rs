//! Scripted numerical checks with pass, fail or inconclusive verdicts.
//!
//! Every check is a pure function of its [`Settings`]; reports carry the
//! measured quantities with their intervals so that unknown constants are
//! reported rather than assumed. A verdict is inconclusive exactly when an
//! interval straddles the decision boundary.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::connectivity::{box_to_box, crosses, dual_crosses, Direction};
use crate::estimate::{
    self, count_samples, estimate_theta, estimate_theta_inf_with, estimate_xi_with, map_samples, theta_profile,
    Estimate, XiMethod,
};
use crate::events;
use crate::field::{Bonds, CoupledField};
use crate::geometry::{CrossDomain, Edge, LatticeBox, Rect, Region, Site};
use crate::oracle::{self, Monotone, Predicate, TrinaryWeights};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// A measured quantity, with a 95% interval when it is random.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci95: Option<[f64; 2]>,
}

impl Measurement {
    pub fn exact(name: impl Into<String>, value: f64) -> Self {
        Measurement { name: name.into(), value, ci95: None }
    }

    pub fn with_ci(name: impl Into<String>, value: f64, ci95: [f64; 2]) -> Self {
        Measurement { name: name.into(), value, ci95: Some(ci95) }
    }

    pub fn estimate(name: impl Into<String>, e: &Estimate) -> Self {
        Self::with_ci(name, e.point, e.ci95)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub params: Value,
    pub measured: Vec<Measurement>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
    pub runtime_ms: u64,
}

/// One point of a sweep, for CSV export.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub check: String,
    pub series: String,
    pub x: f64,
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub seed: u64,
    /// Multiplier on the default sample counts. Counts fixed by a check's
    /// own statement are never scaled below.
    pub budget: f64,
    pub xi_method: XiMethod,
}

impl Settings {
    /// Default sample counts.
    pub fn full(seed: u64) -> Self {
        Settings { seed, budget: 1.0, xi_method: XiMethod::DualCrossing }
    }

    /// A tenth of the default sample counts.
    pub fn quick(seed: u64) -> Self {
        Settings { budget: 0.1, ..Self::full(seed) }
    }

    /// Default count for events at scale `n`, scaled by the budget and kept
    /// at least `floor`.
    fn samples(&self, n: i32, floor: u64) -> u64 {
        let base = if n <= 64 {
            100_000.0
        } else if n <= 256 {
            20_000.0
        } else {
            5_000.0
        };
        ((base * self.budget) as u64).max(floor).max(100)
    }
}

type Runner = fn(&Settings, &mut Recorder) -> Result<Verdict, Error>;

/// A named check.
pub struct Check {
    pub name: &'static str,
    pub about: &'static str,
    run: Runner,
}

/// Every check, in the order `verify all` runs them.
pub const CHECKS: &[Check] = &[
    Check { name: "oracle-equivalence", about: "detectors match exact enumeration on tiny regions", run: oracle_equivalence },
    Check { name: "pivotal-oracle", about: "mixed pivotal and three-arm detectors match exhaustive path search", run: pivotal_oracle },
    Check { name: "duality", about: "primal/dual crossing exclusion and the self-dual rectangle", run: duality },
    Check { name: "coupling", about: "monotone coupling, vanishing delta at p = p', delta implies mixed pivotal", run: coupling },
    Check { name: "stability", about: "theta_N(p) / theta_N(1/2) bounded below the correlation length", run: stability },
    Check { name: "delta-sandwich", about: "P[mixed pivotal at n] / delta at 4n stays in a constant band", run: delta_sandwich },
    Check { name: "recursion", about: "delta_N >= 1 - E[(1 - delta_n)^X]", run: recursion },
    Check { name: "switch-growth", about: "E[X] grows with N and stays below (N/n)^2", run: switch_growth },
    Check { name: "delta-growth", about: "delta_N / min(delta_n, (n/N)^2) non-decreasing in N", run: delta_growth },
    Check { name: "box-crossing", about: "square crossings at 1/2 stay in [0.4, 0.6]", run: box_crossing },
    Check { name: "quasi-multiplicativity", about: "theta_{n,k} theta_{k,N} / theta_{n,N} bounded and stable", run: quasi_multiplicativity },
    Check { name: "one-arm-exponent", about: "fitted slope of log theta_N(1/2) in [-0.16, -0.07]", run: one_arm_exponent },
    Check { name: "scaling-relation", about: "theta(p) / theta_xi(p)(1/2) within a factor-3 band", run: scaling_relation },
    Check { name: "connected-to-infinity", about: "P[box of radius xi reaches radius 8 xi] >= 0.2", run: connected_to_infinity },
    Check { name: "rsw", about: "implied RSW exponent bounded and stable at 1/2", run: rsw },
];

/// Collects measurements, notes and sweep rows of a running check.
pub struct Recorder {
    check: &'static str,
    params: Value,
    measured: Vec<Measurement>,
    notes: Vec<String>,
    rows: Vec<SweepRow>,
}

impl Recorder {
    fn param(&mut self, key: &str, v: Value) {
        if let Value::Object(m) = &mut self.params {
            m.insert(key.into(), v);
        }
    }

    fn measure(&mut self, m: Measurement) {
        self.measured.push(m);
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn row(&mut self, series: impl Into<String>, x: f64, point: f64, ci: [f64; 2]) {
        self.rows.push(SweepRow { check: self.check.into(), series: series.into(), x, point, lo: ci[0], hi: ci[1] });
    }

    fn row_estimate(&mut self, series: impl Into<String>, x: f64, e: &Estimate) {
        self.row(series, x, e.point, e.ci95);
    }
}

pub fn find_check(name: &str) -> Result<&'static Check, Error> {
    CHECKS.iter().find(|c| c.name == name).ok_or_else(|| Error::UnknownCheck(name.to_string()))
}

/// Runs one check. Errors inside a check become a failing report.
pub fn run_check(check: &Check, settings: &Settings) -> (CheckReport, Vec<SweepRow>) {
    let t = Instant::now();
    let mut rec = Recorder {
        check: check.name,
        params: json!({ "seed": settings.seed, "budget": settings.budget }),
        measured: Vec::new(),
        notes: Vec::new(),
        rows: Vec::new(),
    };
    let verdict = match (check.run)(settings, &mut rec) {
        Ok(v) => v,
        Err(e) => {
            rec.note(format!("error: {e}"));
            Verdict::Fail
        }
    };
    let report = CheckReport {
        check: check.name.to_string(),
        params: rec.params,
        measured: rec.measured,
        verdict,
        notes: rec.notes,
        runtime_ms: t.elapsed().as_millis() as u64,
    };
    (report, rec.rows)
}

/// Runs every check in order.
pub fn verify_all(settings: &Settings) -> (Vec<CheckReport>, Vec<SweepRow>) {
    verify_each(settings, |_| {})
}

/// [`verify_all`] with a callback after each report.
pub fn verify_each(settings: &Settings, mut done: impl FnMut(&CheckReport)) -> (Vec<CheckReport>, Vec<SweepRow>) {
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for c in CHECKS {
        let (r, mut w) = run_check(c, settings);
        done(&r);
        reports.push(r);
        rows.append(&mut w);
    }
    (reports, rows)
}

pub fn any_failed(reports: &[CheckReport]) -> bool {
    reports.iter().any(|r| r.verdict == Verdict::Fail)
}

pub fn reports_json(reports: &[CheckReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}

/// The report JSON without wall-clock fields, for byte comparison.
pub fn reports_json_timeless(reports: &[CheckReport]) -> String {
    let mut v = serde_json::to_value(reports).expect("reports serialize");
    strip_keys(&mut v, &["runtime_ms", "wall_ms"]);
    serde_json::to_string_pretty(&v).expect("reports serialize")
}

fn strip_keys(v: &mut Value, keys: &[&str]) {
    match v {
        Value::Object(m) => {
            for k in keys {
                m.remove(*k);
            }
            m.values_mut().for_each(|x| strip_keys(x, keys));
        }
        Value::Array(a) => a.iter_mut().for_each(|x| strip_keys(x, keys)),
        _ => {}
    }
}

/// A fixed-width summary with one line per report.
pub fn summary_table(reports: &[CheckReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<24} {:<13} {:>10}  first measurement", "check", "verdict", "ms");
    for r in reports {
        let first = r
            .measured
            .first()
            .map(|m| match m.ci95 {
                Some([lo, hi]) => format!("{} = {:.4} [{:.4}, {:.4}]", m.name, m.value, lo, hi),
                None => format!("{} = {:.6}", m.name, m.value),
            })
            .unwrap_or_default();
        let verdict = format!("{:?}", r.verdict).to_lowercase();
        let _ = writeln!(s, "{:<24} {:<13} {:>10}  {}", r.check, verdict, r.runtime_ms, first);
    }
    s
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("check,series,x,point,lo,hi\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.check, r.series, r.x, r.point, r.lo, r.hi);
    }
    s
}

/// A ratio of estimates with the interval from their endpoints.
#[derive(Clone, Copy, Debug)]
struct Ratio {
    value: f64,
    ci: [f64; 2],
}

fn ratio(a: &Estimate, b: &Estimate) -> Ratio {
    let div = |x: f64, y: f64| if y > 0.0 { x / y } else { f64::INFINITY };
    Ratio { value: div(a.point, b.point), ci: [div(a.ci95[0], b.ci95[1]), div(a.ci95[1], b.ci95[0])] }
}

/// Least and greatest possible `max/min` spread of a set of ratios given
/// their intervals.
fn spread(rs: &[Ratio]) -> (f64, f64) {
    let max_lo = rs.iter().map(|r| r.ci[0]).fold(0.0, f64::max);
    let min_hi = rs.iter().map(|r| r.ci[1]).fold(f64::INFINITY, f64::min);
    let max_hi = rs.iter().map(|r| r.ci[1]).fold(0.0, f64::max);
    let min_lo = rs.iter().map(|r| r.ci[0]).fold(f64::INFINITY, f64::min);
    let least = if min_hi > 0.0 { (max_lo / min_hi).max(1.0) } else { f64::INFINITY };
    let most = if min_lo > 0.0 { max_hi / min_lo } else { f64::INFINITY };
    (least, most)
}

/// Pass when the worst case is below `limit`, fail when even the best case
/// reaches it.
fn below(best: f64, worst: f64, limit: f64) -> Verdict {
    if worst < limit {
        Verdict::Pass
    } else if best >= limit {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

fn combine(vs: &[Verdict]) -> Verdict {
    if vs.contains(&Verdict::Fail) {
        Verdict::Fail
    } else if vs.contains(&Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    }
}

fn dyadic(from: i32, to: i32) -> Vec<i32> {
    std::iter::successors(Some(from), |n| Some(n * 2)).take_while(|&n| n <= to).collect()
}

fn estimate_of(name: &str, hits: u64, samples: u64, seed: u64, params: Value) -> Estimate {
    Estimate::new(name, params, hits, samples, seed, 0)
}

fn xi(settings: &Settings, p: f64, l_max: i32) -> Result<estimate::XiEstimate, Error> {
    let samples = settings.samples(l_max, 10_000);
    estimate_xi_with(settings.xi_method, p, (-1.0f64).exp(), l_max, samples, settings.seed)
}

fn oracle_equivalence(_: &Settings, rec: &mut Recorder) -> Result<Verdict, Error> {
    const TOL: f64 = 1e-12;
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    let mut compare = |rec: &mut Recorder, what: String, detector: f64, reference: f64| {
        let d = (detector - reference).abs();
        worst = worst.max(d);
        if !(d < TOL) {
            bad += 1;
            rec.note(format!("{what}: detector {detector} vs reference {reference}"));
        }
    };
    let rects = [(1, 1), (2, 1), (2, 2), (3, 2)];
    for (w, h) in rects {
        let r = Rect::new(0, w, 0, h)?;
        let edges = crate::geometry::edges_in(&Region::Rect(r));
        for p in [0.3, 0.5, 0.7] {
            let tw = TrinaryWeights::new(p, p)?;
            let det = oracle::exact_event("crossing", &Region::Rect(r), &tw)?.value;
            let pred = Predicate::new(Monotone::Unknown, Monotone::Ignored, move |lo, _| {
                oracle::reference_crossing(&r, |e| lo.open(e))
            });
            let reference = oracle::enumerate_edges(&edges, &tw, &pred, oracle::EDGE_CAP)?.value;
            compare(rec, format!("crossing {r:?} at {p}"), det, reference);
        }
    }
    for p in [0.3, 0.5, 0.7] {
        let det = oracle::exact_event("one-arm", &Region::Box(LatticeBox::at_origin(1)), &TrinaryWeights::new(p, p)?)?.value;
        compare(rec, format!("one-arm box:1 at {p}"), det, 1.0 - (1.0 - p).powi(4));
    }
    for (p, q) in [(0.4, 0.6), (0.5, 0.55)] {
        let tw = TrinaryWeights::new(p, q)?;
        let det = oracle::exact_event("delta", &Region::Cross(CrossDomain::new(1)), &tw)?.value;
        let reference = oracle::delta_one_factored(&tw);
        rec.measure(Measurement::exact(format!("delta_1({p}, {q})"), det));
        compare(rec, format!("delta cross:1 at ({p}, {q})"), det, reference);
    }
    let same = oracle::exact_event("delta", &Region::Cross(CrossDomain::new(1)), &TrinaryWeights::new(0.5, 0.5)?)?.value;
    compare(rec, "delta cross:1 at p = p'".into(), same, 0.0);
    rec.measured.insert(0, Measurement::exact("max |detector - reference|", worst));
    rec.param("tolerance", json!(TOL));
    Ok(if bad == 0 { Verdict::Pass } else { Verdict::Fail })
}

fn pivotal_oracle(settings: &Settings, rec: &mut Recorder) -> Result<Verdict, Error> {
    let (p, q) = (0.45, 0.6);
    let seed = settings.seed;
    let mut verdicts = Vec::new();
    for (n, samples) in [(1, 100_000u64), (2, 10_000)] {
        let out = map_samples(samples, |k| {
            let f = CoupledField::new(seed, k);
            let (lo, hi) = (f.at(p), f.at(q));
            let det = events::has_mixed_pivotal(&lo, &hi, n, Site::ORIGIN);
            let exact = oracle::mixed_pivotal_by_path_pairs(&lo, &hi, n, Site::ORIGIN).unwrap_or(!det);
            (det, det != exact)
        });
        let hits = out.iter().filter(|o| o.0).count();
        let bad = out.iter().filter(|o| o.1).count();
        rec.measure(Measurement::exact(format!("mixed-pivotal n={n} disagreements"), bad as f64));
        rec.measure(Measurement::exact(format!("mixed-pivotal n={n} occurrences"), hits as f64));
        verdicts.push(if bad == 0 { Verdict::Pass } else { Verdict::Fail });
    }
    let samples = 100_000u64;
    let x = Site::new(6, 1);
    let out = map_samples(samples, |k| {
        let f = CoupledField::new(seed, k);
        let (lo, hi) = (f.at(p), f.at(q));
        let det = events::mixed_three_arm(&lo, &hi, x, 1, 3, 3).map(|o| o.occurred).unwrap_or(false);
        let exact = oracle::disjoint_arm_search(&lo, &hi, x, 1, 3, 3).unwrap_or(!det);
        (det, det != exact)
    });
    let bad = out.iter().filter(|o| o.1).count();
    rec.measure(Measurement::exact("three-arm r=1 R=3 n=3 disagreements", bad as f64));
    rec.measure(Measurement::exact("three-arm occurrences", out.iter().filter(|o| o.0).count() as f64));
    verdicts.push(if bad == 0 { Verdict::Pass } else { Verdict::Fail });
    rec.param("p", json!(p));
    rec.param("p_prime", json!(q));
    Ok(combine(&verdicts))
}

fn duality(settings: &Settings, rec: &mut Recorder) -> Result<Verdict, Error> {
    let seed = settings.seed;
    let r = Rect::new(0, 8, 0, 5)?;
    let samples = 100_000u64;
    let bad = count_samples(samples, |k| {
        let f = CoupledField::new(seed, k);
        // vary p across samples through a label far from the rectangle
        let c = f.at(f.uniform(Edge::east(-100, -100)));
        crosses(&c, &r, Direction::LeftRight) == dual_crosses(&c, &r, Direction::TopBottom)
    });
    rec.measure(Measurement::exact("xor violations on [0,8]x[0,5]", bad as f64));
    let mut verdicts = vec![if bad == 0 { Verdict::Pass } else { Verdict::Fail }];
    let half = oracle::exact_event("crossing", &Region::Rect(Rect::new(0, 2, 0, 1)?), &TrinaryWeights::new(0.5, 0.5)?)?;
    let exact_half = matches!((half.numerator, half.denominator_log2), (Some(num), Some(d)) if d >= 1 && num == 1u128 << (d - 1));
    rec.measure(Measurement::exact("enumerated P[crossing of [0,2]x[0,1]]", half.value));
    verdicts.push(if exact_half { Verdict::Pass } else { Verdict::Fail });
    for n in [4, 8, 16] {
        let r = Rect::new(0, n + 1, 0, n)?;
        let hits = count_samples(samples, |k| crosses(&CoupledField::new(seed, k).at(0.5), &r, Direction::LeftRight));
        let e = estimate_of("crossing", hits, samples, seed, json!({ "n": n }));
        let z = (e.point - 0.5).abs() / (0.25 / samples as f64).sqrt();
        rec.measure(Measurement::estimate(format!("self-dual n={n}"), &e));
        rec.row_estimate("self-dual", n as f64, &e);
        verdicts.push(if z <= 3.0 { Verdict::Pass } else { Verdict::Fail });
    }
    Ok(combine(&verdicts))
}

fn coupling(settings: &Settings, rec: &mut Recorder) -> Result<Verdict, Error> {
    let seed = settings.seed;
    let edges = LatticeBox::at_origin(8).rect().edges();
    let order = count_samples(10_000, |k| {
        let f = CoupledField::new(seed, k);
        let (a, b) = (f.uniform(Edge::east(-100, 0)), f.uniform(Edge::east(100, 0)));
        let (lo, hi) = (f.at(a.min(b)), f.at(a.max(b)));
        edges.iter().any(|&e| lo.open(e) && !hi.open(e))
    });
    rec.measure(Measurement::exact("order violations over 10^4 fields", order as f64));
    let n = 4;
    let same = count_samples(10_000, |k| {
        let c = CoupledField::new(seed, k).at(0.5);
        events::delta(&c, &c, n)
    });
    rec.measure(Measurement::exact("delta_4(1/2, 1/2) occurrences", same as f64));
    let (p, q) = (0.5, 0.55);
    let out = map_samples(100_000, |k| {
        let f = CoupledField::new(seed, k);
        let (lo, hi) = (f.at(p), f.at(q));
        let d = events::delta(&lo, &hi, n);
        (d, d && !events::has_mixed_pivotal(&lo, &hi, n, Site::ORIGIN))
    });
    let violations = out.iter().filter(|o| o.1).count();
    rec.measure(Measurement::exact("delta => mixed pivotal violations over 10^5", violations as f64));
    rec.measure(Measurement::exact("delta_4(1/2, 0.55) occurrences", out.iter().filter(|o| o.0).count() as f64));
    Ok(if order == 0 && same == 0 && violations == 0 { Verdict::Pass } else { Verdict::Fail })
}

fn stability(settings: &Settings, rec: &mut Recorder) -> Result<Verdict, Error> {
    let seed = settings.seed;
    let mut verdicts = Vec::new();
    let mut worst: f64 = 0.0;
    for p in [0.53, 0.55] {
        let x = xi(settings, p, 128)?;
        let top = x.scale().min(128);
        let scales = dyadic(1, top);
        let samples = settings.samples(top, 20_000);
        let at_p = theta_profile(p, &scales, samples, seed)?;
        let at_half = theta_profile(0.5, &scales, samples, seed)?;
        rec.measure(Measurement::exact(format!("xi({p})"), x.scale() as f64));
        for ((n, a), b) in scales.iter().zip(&at_p).zip(&at_half) {
            let r = ratio(a, b);
            worst = worst.max(r.value);
            rec.row(format!("ratio p={p}"), *n as f64, r.value, r.ci);
            let lower_ok = r.value >= 1.0 - (r.ci[1] - r.ci[0]);
            let v = if !lower_ok { Verdict::Fail } else { below(r.ci[0], r.ci[1], 4.0 + f64::EPSILON) };
            if v != Verdict::Pass {
                rec.note(format!("p={p} N={n}: ratio {:.4} [{:.4}, {:.4}]", r.value, r.ci[0], r.ci[1]));
            }
            verdicts.push(v);
        }
    }
    rec.measured.insert(0, Measurement::exact("measured C = max ratio", worst));
    Ok(combine(&verdicts))
}

fn delta_sandwich(settings: &Settings, rec: &mut Recorder) -> Result<Verdict, Error> {
    let (p, q) = (0.5, 0.55);
    let seed = settings.seed;
    let x = xi(settings, q, 128)?;
    rec.measure(Measurement::exact(format!("xi({q})"), x.scale() as f64));
    let mut ratios = Vec::new();
    let mut violations = 0;
    for n in [4, 8, 16] {
        if n > x.scale() {
            rec.note(format!("n={n} exceeds xi({q}) = {}; skipped", x.scale()));
            continue;
        }
        let samples = settings.samples(4 * n, 10_000);
        let out = map_samples(samples, |k| {
            let f = CoupledField::new(seed, k);
            let (lo, hi) = (f.at(p), f.at(q));
            let small = events::delta(&lo, &hi, n);
            let mixed = events::has_mixed_pivotal(&lo, &hi, n, Site::ORIGIN);
            (small && !mixed, mixed, events::delta(&lo, &hi, 4 * n))
        });
        violations += out.iter().filter(|o| o.0).count();
        let mixed = estimate_of("mixed-pivotal", out.iter().filter(|o| o.1).count() as u64, samples, seed, json!({ "n": n }));
        let big = estimate_of("delta", out.iter().filter(|o| o.2).count() as u64, samples, seed, json!({ "n": 4 * n }));
        let r = ratio(&mixed, &big);
        rec.measure(Measurement::estimate(format!("P[mixed pivotal n={n}]"), &mixed));
        rec.measure(Measurement::estimate(format!("delta_{}", 4 * n), &big));
        rec.measure(Measurement::with_ci(format!("ratio n={n}"), r.value, r.ci));
        rec.row("ratio", n as f64, r.value, r.ci);
        ratios.push(r);
    }
    rec.measure(Measurement::exact("delta_n => mixed pivotal violations", violations as f64));
    if violations > 0 {
        return Ok(Verdict::Fail);
    }
    if ratios.len() < 2 {
        return Ok(Verdict::Inconclusive);
    }
    let (least, most) = spread(&ratios);
    rec.measured.insert(0, Measurement::with_ci("ratio spread max/min", {
        let v: Vec<f64> = ratios.iter().map(|r| r.value).collect();
        v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min)
    }, [least, most]));
    Ok(below(least, most, 3.0))
}

fn recursion(settings: &Settings, rec: &mut Recorder) -> Result<Verdict, Error> {
    let (p, q) = (0.5, 0.52);
    let seed = settings.seed;
    let mut verdicts = Vec::new();
    for (n, big_n) in [(4, 64), (8, 128)] {
        let small_samples = settings.samples(n, 10_000);
        let small_hits = count_samples(small_samples, |k| {
            let f = CoupledField::new(seed, k);
            events::delta(&f.at(p), &f.at(q), n)
        });
        let d_n = estimate_of("delta", small_hits, small_samples, seed, json!({ "n": n }));
        // an independent stream block for the large scale
        let big_seed = seed ^ 0x5eed_0000_0000_0001;
        let samples = settings.samples(big_n, 2_000);
        let out = map_samples(samples, |k| {
            let f = CoupledField::new(big_seed, k);
            let lo = f.at(p);
            let x = events::count_closed_pivotal_switches(&lo, n, big_n).unwrap_or(0);
            (events::delta(&lo, &f.at(q), big_n), x)
        });
        let d_big = estimate_of("delta", out.iter().filter(|o| o.0).count() as u64, samples, big_seed, json!({ "n": big_n }));
        let base = 1.0 - d_n.point;
        let terms: Vec<f64> = out.iter().map(|o| base.powi(o.1 as i32)).collect();
        let k = terms.len() as f64;
        let avg = terms.iter().sum::<f64>() / k;
        let var = terms.iter().map(|t| (t - avg).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
        // sensitivity of the average to the estimated delta_n
        let slope = out.iter().map(|o| o.1 as f64 * base.powi(o.1 as i32 - 1).max(0.0)).sum::<f64>() / k;
        let sigma = (d_big.sigma().powi(2) + var / k + (slope * d_n.sigma()).powi(2)).sqrt();
        let bound = 1.0 - avg;
        let xs_nonzero = out.iter().filter(|o| o.1 > 0).count();
        rec.measure(Measurement::estimate(format!("delta_{big_n}"), &d_big));
        rec.measure(Measurement::estimate(format!("delta_{n}"), &d_n));
        rec.measure(Measurement::exact(format!("1 - avg (1 - delta_{n})^X at N={big_n}"), bound));
        rec.measure(Measurement::exact(format!("combined sigma N={big_n}"), sigma));
        rec.measure(Measurement::exact(format!("samples with X > 0 at N={big_n}"), xs_nonzero as f64));
        verdicts.push(if d_big.point >= bound - 3.0 * sigma { Verdict::Pass } else { Verdict::Fail });
    }
    rec.param("p", json!(p));
    rec.param("p_prime", json!(q));
    Ok(combine(&verdicts))
}

fn switch_growth(settings: &Settings, rec: &mut Recorder) -> Result<Verdict, Error> {
    let (p, n) = (0.5, 4);
    let mut means = Vec::new();
    let mut within = true;
    for big_n in [64, 128, 256] {
        let samples = settings.samples(big_n, 2_000);
        let e = estimate::estimate_ex(p, n, big_n, samples, settings.seed)?;
        let cap = ((big_n / n) as u64).pow(2);
        within &= e.max <= cap;
        rec.measure(Measurement::with_ci(format!("E[X] N={big_n}"), e.mean, e.ci95));
        rec.measure(Measurement::exact(format!("max X N={big_n} (cap {cap})"), e.max as f64));
        rec.row("E[X]", big_n as f64, e.mean, e.ci95);
        means.push(e);
    }
    if !within {
        return Ok(Verdict::Fail);
    }
    let strictly = means.windows(2).all(|w| w[1].mean > w[0].mean);
    let separated = means.windows(2).all(|w| w[1].ci95[0] > w[0].ci95[1]);
    if means.iter().all(|m| m.max == 0) {
        rec.note("no p-closed pivotal switch observed at any N; growth cannot be shown at this scale");
    }
    Ok(if strictly && separated {
        Verdict::Pass
    } else if strictly {
        Verdict::Inconclusive
    } else {
        Verdict::Fail
    })
}

fn delta_growth(settings: &Settings, rec: &mut Recorder) -> Result<Verdict, Error> {
    let (p, q, n) = (0.5, 0.52, 4);
    let seed = settings.seed;
    let small_samples = settings.samples(n, 10_000);
    let small = count_samples(small_samples, |k| {
        let f = CoupledField::new(seed, k);
        events::delta(&f.at(p), &f.at(q), n)
    });
    let d_n = estimate_of("delta", small, small_samples, seed, json!({ "n": n }));
    rec.measure(Measurement::estimate(format!("delta_{n}"), &d_n));
    let mut ratios = Vec::new();
    for big_n in [64, 128] {
        let samples = settings.samples(big_n, 2_000);
        let hits = count_samples(samples, |k| {
            let f = CoupledField::new(seed, k);
            events::delta(&f.at(p), &f.at(q), big_n)
        });
        let d = estimate_of("delta", hits, samples, seed, json!({ "n": big_n }));
        let floor = (n as f64 / big_n as f64).powi(2);
        let m = |x: f64| x.min(floor);
        let r = Ratio {
            value: d.point / m(d_n.point),
            ci: [d.ci95[0] / m(d_n.ci95[1]), if m(d_n.ci95[0]) > 0.0 { d.ci95[1] / m(d_n.ci95[0]) } else { f64::INFINITY }],
        };
        rec.measure(Measurement::estimate(format!("delta_{big_n}"), &d));
        rec.measure(Measurement::with_ci(format!("ratio N={big_n}"), r.value, r.ci));
        rec.row("ratio", big_n as f64, r.value, r.ci);
        ratios.push(r);
    }
    if p == q {
        return Ok(Verdict::Inconclusive);
    }
    Ok(if ratios.windows(2).all(|w| w[1].ci[0] >= w[0].ci[1]) {
        Verdict::Pass
    } else if ratios.windows(2).any(|w| w[1].ci[1] < w[0].ci[0]) {
        Verdict::Fail
    } else if ratios.windows(2).all(|w| w[1].value >= w[0].value) {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    })
}

fn box_crossing(settings: &Settings, rec: &mut Recorder) -> Result<Verdict, Error> {
    let seed = settings.seed;
    let mut verdicts = Vec::new();
    for n in dyadic(8, 128) {
        let samples = settings.samples(n, 2_000);
        let square = Rect::new(0, n, 0, n)?;
        let easy = Rect::new(0, n, 0, 2 * n)?;
        let hard = Rect::new(0, 2 * n, 0, n)?;
        let out = map_samples(samples, |k| {
            let c = CoupledField::new(seed, k).at(0.5);
            let h = crosses(&c, &hard, Direction::LeftRight);
            let e = crosses(&c, &easy, Direction::LeftRight);
            (crosses(&c, &square, Direction::LeftRight), e, h, h && !e)
        });
        let count = |f: fn(&(bool, bool, bool, bool)) -> bool| out.iter().filter(|o| f(o)).count() as u64;
        let sq = estimate_of("crossing", count(|o| o.0), samples, seed, json!({ "n": n }));
        let easy_e = estimate_of("crossing", count(|o| o.1), samples, seed, json!({ "n": n }));
        let hard_e = estimate_of("crossing", count(|o| o.2), samples, seed, json!({ "n": n }));
        let inclusion = count(|o| o.3);
        rec.measure(Measurement::estimate(format!("square n={n}"), &sq));
        rec.row_estimate("square", n as f64, &sq);
        rec.row_estimate("easy", n as f64, &easy_e);
        rec.row_estimate("hard", n as f64, &hard_e);
        let v = if sq.ci95[0] >= 0.4 && sq.ci95[1] <= 0.6 {
            Verdict::Pass
        } else if sq.ci95[1] < 0.4 || sq.ci95[0] > 0.6 {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        };
        verdicts.push(v);
        if inclusion > 0 || easy_e.point <= hard_e.point {
            rec.note(format!("n={n}: easy {} hard {} inclusion violations {inclusion}", easy_e.point, hard_e.point));
            verdicts.push(Verdict::Fail);
        }
    }
    Ok(combine(&verdicts))
}

fn quasi_multiplicativity(settings: &Settings, rec: &mut Recorder) -> Result<Verdict, Error> {
    let seed = settings.seed;
    let theta = |n: i32, big_n: i32| -> Estimate {
        let samples = settings.samples(big_n, 2_000);
        let hits = count_samples(samples, |k| box_to_box(&CoupledField::new(seed, k).at(0.5), Site::ORIGIN, n, big_n));
        estimate_of("one-arm", hits, samples, seed, json!({ "n": n, "N": big_n }))
    };
    let mut ratios = Vec::new();
    let mut verdicts = Vec::new();
    for (n, k, big_n) in [(1, 8, 64), (2, 16, 128), (4, 32, 128)] {
        let (a, b, c) = (theta(n, k), theta(k, big_n), theta(n, big_n));
        // product of the two factors, with the interval of the product
        let prod = Estimate { point: a.point * b.point, ci95: [a.ci95[0] * b.ci95[0], a.ci95[1] * b.ci95[1]], ..a.clone() };
        let r = ratio(&prod, &c);
        rec.measure(Measurement::with_ci(format!("C at ({n},{k},{big_n})"), r.value, r.ci));
        rec.row("C", big_n as f64 / n as f64, r.value, r.ci);
        if r.value < 1.0 - (r.ci[1] - r.ci[0]) {
            rec.note(format!("left inequality fails at ({n},{k},{big_n})"));
            verdicts.push(Verdict::Fail);
        }
        verdicts.push(below(r.ci[0], r.ci[1], 10.0));
        ratios.push(r);
    }
    let (least, most) = spread(&ratios);
    rec.measure(Measurement::with_ci("C spread max/min", most.min(f64::MAX), [least, most]));
    verdicts.push(below(least, most, 2.0));
    Ok(combine(&verdicts))
}

fn one_arm_exponent(settings: &Settings, rec: &mut Recorder) -> Result<Verdict, Error> {
    let scales = dyadic(16, 512);
    let samples = settings.samples(64, 10_000);
    let prof = theta_profile(0.5, &scales, samples, settings.seed)?;
    let pts: Vec<(i32, Estimate)> = scales.iter().copied().zip(prof).collect();
    for (n, e) in &pts {
        rec.row_estimate("theta_N(1/2)", *n as f64, e);
    }
    let fit = estimate::fit_exponent(&pts)?;
    let band = (-0.16, -0.07);
    let (lo, hi) = (fit.slope - 2.0 * fit.stderr, fit.slope + 2.0 * fit.stderr);
    rec.measure(Measurement::with_ci("slope", fit.slope, [lo, hi]));
    rec.measure(Measurement::exact("stderr", fit.stderr));
    rec.param("samples", json!(samples));
    Ok(if lo >= band.0 && hi <= band.1 {
        Verdict::Pass
    } else if fit.slope < band.0 || fit.slope > band.1 {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    })
}

fn scaling_relation(settings: &Settings, rec: &mut Recorder) -> Result<Verdict, Error> {
    let mut ratios = Vec::new();
    for p in [0.53, 0.55, 0.6] {
        let samples = settings.samples(256, 5_000);
        let inf = estimate_theta_inf_with(settings.xi_method, p, samples, settings.seed)?;
        if inf.xi.is_censored() {
            rec.note(format!("p={p}: xi censored; skipped"));
            continue;
        }
        let l = inf.xi.scale();
        let crit = estimate_theta(0.5, l, settings.samples(l, 10_000), settings.seed)?;
        let r = ratio(&inf.estimate, &crit);
        rec.measure(Measurement::with_ci(format!("ratio p={p} (xi={l}, M={})", inf.proxy_scale), r.value, r.ci));
        rec.row("ratio", p, r.value, r.ci);
        ratios.push(r);
    }
    if ratios.len() < 2 {
        return Ok(Verdict::Inconclusive);
    }
    let (least, most) = spread(&ratios);
    rec.measured.insert(0, Measurement::with_ci("ratio spread max/min", most, [least, most]));
    Ok(below(least, most, 3.0))
}

fn connected_to_infinity(settings: &Settings, rec: &mut Recorder) -> Result<Verdict, Error> {
    let seed = settings.seed;
    let mut verdicts = Vec::new();
    for p in [0.53, 0.55, 0.6] {
        let x = xi(settings, p, 64)?;
        let l = x.scale();
        let samples = settings.samples(8 * l, 2_000);
        let hits = count_samples(samples, |k| box_to_box(&CoupledField::new(seed, k).at(p), Site::ORIGIN, l, 8 * l));
        let e = estimate_of("one-arm", hits, samples, seed, json!({ "p": p, "n": l, "N": 8 * l }));
        rec.measure(Measurement::estimate(format!("p={p} (xi={l})"), &e));
        rec.row_estimate("P[box reaches 8 xi]", p, &e);
        verdicts.push(if e.ci95[0] >= 0.2 {
            Verdict::Pass
        } else if e.ci95[1] < 0.2 {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        });
    }
    Ok(combine(&verdicts))
}

fn rsw(settings: &Settings, rec: &mut Recorder) -> Result<Verdict, Error> {
    let seed = settings.seed;
    let mut exps = Vec::new();
    let mut verdicts = Vec::new();
    for n in [16, 32, 64] {
        let samples = settings.samples(2 * n, 2_000);
        let square = Rect::new(0, n, 0, n)?;
        let long = Rect::new(0, 2 * n, 0, n)?;
        let out = map_samples(samples, |k| {
            let c = CoupledField::new(seed, k).at(0.5);
            (crosses(&c, &square, Direction::LeftRight), crosses(&c, &long, Direction::LeftRight))
        });
        let s = estimate_of("crossing", out.iter().filter(|o| o.0).count() as u64, samples, seed, json!({ "n": n }));
        let l = estimate_of("crossing", out.iter().filter(|o| o.1).count() as u64, samples, seed, json!({ "n": n }));
        let expo = |a: f64, b: f64| if b > 0.0 && b < 1.0 && a > 0.0 { a.ln() / b.ln() } else { f64::INFINITY };
        let r = Ratio { value: expo(l.point, s.point), ci: [expo(l.ci95[1], s.ci95[0]), expo(l.ci95[0], s.ci95[1])] };
        rec.measure(Measurement::with_ci(format!("exponent n={n}"), r.value, r.ci));
        rec.row("exponent", n as f64, r.value, r.ci);
        verdicts.push(below(r.ci[0], r.ci[1], 10.0));
        exps.push(r);
    }
    let (least, most) = spread(&exps);
    rec.measure(Measurement::with_ci("exponent spread max/min", most, [least, most]));
    verdicts.push(below(least, most, 2.0));
    Ok(combine(&verdicts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique() {
        let mut names: Vec<&str> = CHECKS.iter().map(|c| c.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), CHECKS.len());
        assert!(find_check("nope").is_err());
    }

    #[test]
    fn spread_and_verdicts() {
        let r = |v: f64, lo: f64, hi: f64| Ratio { value: v, ci: [lo, hi] };
        let (least, most) = spread(&[r(1.0, 0.9, 1.1), r(2.0, 1.8, 2.2)]);
        assert!((least - 1.8 / 1.1).abs() < 1e-12 && (most - 2.2 / 0.9).abs() < 1e-12);
        assert_eq!(below(least, most, 3.0), Verdict::Pass);
        assert_eq!(below(least, most, 2.0), Verdict::Inconclusive);
        assert_eq!(below(least, most, 1.5), Verdict::Fail);
        assert_eq!(combine(&[Verdict::Pass, Verdict::Inconclusive]), Verdict::Inconclusive);
    }

    #[test]
    fn reports_without_time_are_stable() {
        let s = Settings::quick(3);
        let (a, _) = run_check(find_check("coupling").unwrap(), &s);
        let (b, _) = run_check(find_check("coupling").unwrap(), &s);
        assert_eq!(a.verdict, Verdict::Pass);
        assert_eq!(reports_json_timeless(&[a.clone()]), reports_json_timeless(&[b]));
        assert!(!reports_json_timeless(&[a.clone()]).contains("runtime_ms"));
        assert!(summary_table(&[a]).contains("coupling"));
    }
}
