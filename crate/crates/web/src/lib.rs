//! Browser bindings: draw a sample, trace a crossing curve, enumerate an
//! exact crossing probability. Every function returns a JSON string.

use percolab::connectivity::{crossing_path, Direction};
use percolab::estimate::{count_samples, wilson};
use percolab::field::{Bonds, CoupledField};
use percolab::geometry::{Rect, Region};
use percolab::oracle::{exact_event, TrinaryWeights};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn fail(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn square(n: u32) -> Result<Rect, JsValue> {
    let n = i32::try_from(n).map_err(fail)?;
    Rect::new(0, n, 0, n).map_err(fail)
}

/// Open edges of one sample on `[0,n]^2` at parameter `p`, and a
/// left-right open path if there is one.
#[wasm_bindgen]
pub fn sample(n: u32, p: f64, seed: u64, stream: u64) -> Result<String, JsValue> {
    percolab::check_params(p, p).map_err(fail)?;
    let r = square(n)?;
    let c = CoupledField::new(seed, stream).at(p);
    let open: Vec<[i32; 4]> = r
        .edges()
        .into_iter()
        .filter(|e| c.open(*e))
        .map(|e| [e.base.x, e.base.y, e.head().x, e.head().y])
        .collect();
    let path = crossing_path(&c, &r, Direction::LeftRight).map(|t| t.to_json());
    Ok(json!({ "n": n, "p": p, "open": open, "crossing": path }).to_string())
}

/// Monte Carlo left-right crossing frequency of `[0,n]^2` at each of
/// `p_values`, with Wilson 95% intervals.
#[wasm_bindgen]
pub fn crossing_curve(n: u32, p_values: Vec<f64>, samples: u32, seed: u64) -> Result<String, JsValue> {
    let r = square(n)?;
    if samples == 0 {
        return Err(fail("samples must be positive"));
    }
    let mut rows = Vec::with_capacity(p_values.len());
    for p in p_values {
        percolab::check_params(p, p).map_err(fail)?;
        let hits = count_samples(samples.into(), |k| crossing_path(&CoupledField::new(seed, k).at(p), &r, Direction::LeftRight).is_some());
        rows.push(json!({ "p": p, "point": hits as f64 / samples as f64, "ci95": wilson(hits, samples.into()) }));
    }
    Ok(json!({ "n": n, "samples": samples, "points": rows }).to_string())
}

/// Exact left-right crossing probability of `[0,w]x[0,h]`, for rectangles
/// of at most twenty edges.
#[wasm_bindgen]
pub fn exact_crossing(w: u32, h: u32, p: f64) -> Result<String, JsValue> {
    let r = Rect::new(0, i32::try_from(w).map_err(fail)?, 0, i32::try_from(h).map_err(fail)?).map_err(fail)?;
    let weights = TrinaryWeights::new(p, p).map_err(fail)?;
    let e = exact_event("crossing", &Region::Rect(r), &weights).map_err(fail)?;
    Ok(json!({ "w": w, "h": h, "p": p, "exact_probability": e.value, "edges": e.edges, "states_visited": e.states_visited }).to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> serde_json::Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn sample_lists_open_edges_and_path() {
        let v = parse(&sample(6, 1.0, 1, 0).unwrap());
        assert_eq!(v["open"].as_array().unwrap().len(), 2 * 6 * 7);
        assert!(v["crossing"].is_object());
        assert!(parse(&sample(6, 0.0, 1, 0).unwrap())["crossing"].is_null());
    }

    #[test]
    fn self_dual_square_is_exactly_half() {
        let v = parse(&exact_crossing(2, 1, 0.5).unwrap());
        assert_eq!(v["exact_probability"], 0.5);
    }

    #[test]
    fn curve_is_ordered_and_bounded() {
        let v = parse(&crossing_curve(8, vec![0.3, 0.5, 0.7], 2000, 3).unwrap());
        let pts: Vec<f64> = v["points"].as_array().unwrap().iter().map(|r| r["point"].as_f64().unwrap()).collect();
        assert!(pts[0] < pts[1] && pts[1] < pts[2]);
        assert!(pts.iter().all(|x| (0.0..=1.0).contains(x)));
    }
}
