//! Browser bindings: three small studies that run entirely client-side.
//!
//! Each operation has a plain Rust function returning JSON, and a thin
//! `#[wasm_bindgen]` wrapper that turns errors into JS exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use eventjet::dynamics::{ClosedLoop, DynamicsModel, ModelConfig};
use eventjet::eventmap::{Direction, EventExpr, EventSpec};
use eventjet::harness::{Problem, TRIGGER_TIME};
use eventjet::polyalg::{AnalyticFn, TPoly};
use eventjet::uncert::{ch_radius, propagate_moments, ratio_radius, MomentOrder, Restriction};

fn system(cfg: ModelConfig) -> Result<ClosedLoop, String> {
    let model = DynamicsModel::new(cfg).map_err(|e| e.to_string())?;
    ClosedLoop::new(model, None, &[]).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct TriggerTime {
    t_nom: f64,
    /// Coefficients of `T(δ)` in powers of δ.
    computed: Vec<f64>,
    /// Coefficients of `ln(1 + δ/x0)`.
    exact: Vec<f64>,
    max_error: f64,
}

/// Trigger-time polynomial of `ẋ = −x` from `x0 + δ` down to `level`.
pub fn decay_trigger_time(x0: f64, level: f64, order: usize) -> Result<String, String> {
    if !(x0 > level && level > 0.0) {
        return Err(format!("need x0 > level > 0, got x0 = {x0}, level = {level}"));
    }
    let spec = EventSpec::expr(EventExpr::state_minus(0, level)).with_direction(Direction::Falling);
    let t_max = 2.0 * (x0 / level).ln() + 1.0;
    let problem = Problem::new(system(ModelConfig::Decay { rate: 1.0 })?, vec![x0], spec, t_max, vec![0], vec![(0.0, 0.0)])
        .map_err(|e| e.to_string())?;
    let ett = problem.ett(order).map_err(|e| e.to_string())?;
    let computed: Vec<f64> = (0..=order as u32).map(|n| ett.trigger_time.coeff(&[n])).collect();
    let exact: Vec<f64> = (0..=order as i32)
        .map(|n| match n {
            0 => 0.0,
            _ => (-1f64).powi(n + 1) / (n as f64 * x0.powi(n)),
        })
        .collect();
    let max_error = computed.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(serde_json::to_string(&TriggerTime {
        t_nom: ett.t_nom,
        computed,
        exact,
        max_error,
    })
    .expect("serializable"))
}

#[derive(Serialize)]
struct SweepRow {
    order: usize,
    mean: [f64; 2],
    std: [f64; 2],
    radius: Option<f64>,
}

/// Mean and standard deviation of `x` and the trigger time at the event
/// `w = 1/2` of `ẋ = −x³, ẇ = x²`, for `x0 = 1 ± half_width` uniform.
pub fn cubic_order_sweep(half_width: f64, max_order: usize) -> Result<String, String> {
    if !(half_width > 0.0 && half_width < 1.0) {
        return Err(format!("half-width must lie in (0, 1), got {half_width}"));
    }
    let spec = EventSpec::expr(EventExpr::state_minus(1, 0.5)).with_direction(Direction::Rising);
    let problem = Problem::new(
        system(ModelConfig::Cubic)?,
        vec![1.0, 0.0],
        spec,
        50.0,
        vec![0],
        vec![(-half_width, half_width)],
    )
    .map_err(|e| e.to_string())?;
    let t_index = problem
        .output_names()
        .iter()
        .position(|n| n == TRIGGER_TIME)
        .expect("trigger time is an output");
    let mut rows = Vec::new();
    for order in 1..=max_order {
        let map = problem.event_map(order).and_then(|m| Ok(m.select(&[0, t_index])?)).map_err(|e| e.to_string())?;
        let m = propagate_moments(&map, &problem.bx, MomentOrder::Covariance).map_err(|e| e.to_string())?;
        let cov = m.covariance.as_ref().expect("covariance requested");
        let radius = map
            .components()
            .iter()
            .filter_map(|p| ch_radius(p, Restriction::Variable(0)).ok()?.headline)
            .reduce(f64::min);
        rows.push(SweepRow {
            order,
            mean: [m.mean[0], m.mean[1]],
            std: [cov[0][0].sqrt(), cov[1][1].sqrt()],
            radius,
        });
    }
    Ok(serde_json::to_string(&rows).expect("serializable"))
}

#[derive(Serialize)]
struct SeriesRadius {
    ch: Vec<Option<f64>>,
    ratio: Vec<Option<f64>>,
}

/// Per-order Cauchy–Hadamard and ratio-test radii of the Taylor series of
/// an elementary function about `a0`.
pub fn series_radii(function: &str, a0: f64, order: usize) -> Result<String, String> {
    let f = match function {
        "sin" => AnalyticFn::Sin,
        "exp" => AnalyticFn::Exp,
        "log" => AnalyticFn::Log,
        "recip" => AnalyticFn::Recip,
        "tanh" => AnalyticFn::Tanh,
        "sigmoid" => AnalyticFn::Sigmoid,
        other => return Err(format!("unknown function `{other}`")),
    };
    let x = TPoly::seeded(a0, 0, 1, order).map_err(|e| e.to_string())?;
    let p = x.apply(f).map_err(|e| e.to_string())?;
    let ch = ch_radius(&p, Restriction::Full).map_err(|e| e.to_string())?;
    let ratio = ratio_radius(&p, Restriction::Full).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&SeriesRadius {
        ch: ch.values,
        ratio: ratio.values,
    })
    .expect("serializable"))
}

#[wasm_bindgen(js_name = decayTriggerTime)]
pub fn decay_trigger_time_js(x0: f64, level: f64, order: usize) -> Result<String, JsError> {
    decay_trigger_time(x0, level, order).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = cubicOrderSweep)]
pub fn cubic_order_sweep_js(half_width: f64, max_order: usize) -> Result<String, JsError> {
    cubic_order_sweep(half_width, max_order).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = seriesRadii)]
pub fn series_radii_js(function: &str, a0: f64, order: usize) -> Result<String, JsError> {
    series_radii(function, a0, order).map_err(|e| JsError::new(&e))
}
