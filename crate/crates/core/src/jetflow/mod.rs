//! Trajectory integration and jet transport of the closed-loop flow.

mod dop853;
mod tableau;

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::dynamics::{ClosedLoop, DynError};
use crate::eventmap::{EventError, EventSpec};
use crate::polyalg::{Algebra, PolyError, TPoly, TaylorMap, VarLabel};

use dop853::{drive, Flow};

#[derive(Debug, Error)]
pub enum JetError {
    #[error("step size collapsed to {h:e} at t = {t}")]
    StepCollapse { t: f64, h: f64 },
    #[error("step budget of {steps} exhausted at t = {t}")]
    StepBudget { t: f64, steps: usize },
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
    #[error("invalid expansion request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Dyn(#[from] DynError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("event evaluation: {0}")]
    Event(Box<EventError>),
}

impl From<EventError> for JetError {
    fn from(e: EventError) -> Self {
        JetError::Event(Box::new(e))
    }
}

/// Integrator settings, all in scaled units.
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Weight of first-order jet coefficients in the error norm (0 = nominal only).
    pub first_order_weight: f64,
    pub max_steps: usize,
    pub h_max: f64,
    pub h_init: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-12,
            atol: 1e-12,
            first_order_weight: 0.1,
            max_steps: 200_000,
            h_max: f64::INFINITY,
            h_init: None,
        }
    }
}

impl Tolerances {
    pub fn with_rtol(rtol: f64) -> Self {
        Tolerances {
            rtol,
            atol: rtol,
            ..Tolerances::default()
        }
    }

    pub fn validate(&self) -> Result<(), JetError> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(JetError::InvalidTolerance(format!(
                "rtol = {}, atol = {} must be positive",
                self.rtol, self.atol
            )));
        }
        if !(self.h_max > 0.0) || self.max_steps == 0 {
            return Err(JetError::InvalidTolerance(
                "h_max and max_steps must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Where a scalar integration stops.
#[derive(Clone, Copy, Debug)]
pub enum Stop<'a> {
    Time(f64),
    /// First crossing of the event in its requested direction, or `t_max`.
    Event { spec: &'a EventSpec, t_max: f64 },
}

/// Accepted steps of a scalar integration, with enough information to
/// re-step to any time inside a segment.
#[derive(Clone, Debug)]
pub struct Trajectory {
    system: Arc<ClosedLoop>,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
    stats: StepStats,
    crossed: bool,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    /// `f(y)` at every sample.
    pub fn derivatives(&self) -> &[Vec<f64>] {
        &self.derivs
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    pub fn system(&self) -> &ClosedLoop {
        &self.system
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().unwrap()
    }

    /// True when an event stop ended the run on a bracketing step.
    pub fn crossed(&self) -> bool {
        self.crossed
    }

    /// Index of the segment `[t_i, t_{i+1}]` containing `t`.
    pub fn segment_of(&self, t: f64) -> Option<usize> {
        let n = self.times.len();
        if n < 2 {
            return None;
        }
        let fwd = self.times[n - 1] >= self.times[0];
        let key = |x: f64| if fwd { x } else { -x };
        let kt = key(t);
        if kt < key(self.times[0]) || kt > key(self.times[n - 1]) {
            return None;
        }
        let i = self.times.partition_point(|&ti| key(ti) <= kt);
        Some(i.saturating_sub(1).min(n - 2))
    }

    /// State at `t` by one uncontrolled step from the segment start.
    pub fn dense(&self, t: f64) -> Result<Vec<f64>, JetError> {
        let i = self.segment_of(t).ok_or_else(|| {
            JetError::InvalidRequest(format!("time {t} is outside the trajectory"))
        })?;
        self.dense_in(i, t)
    }

    pub(crate) fn dense_in(&self, i: usize, t: f64) -> Result<Vec<f64>, JetError> {
        let sys = &self.system;
        let f = |y: &[f64]| sys.rhs(y);
        Ok(dop853::restep(&f, &self.states[i], &self.derivs[i], t - self.times[i])?)
    }

    /// CSV with time and state in physical units.
    pub fn to_csv(&self) -> String {
        let labels = self.system.labels();
        let tu = self.system.model().scaling().time;
        let mut out = String::from("t");
        for l in &labels {
            out.push(',');
            out.push_str(&l.name);
        }
        out.push('\n');
        for (t, y) in self.times.iter().zip(&self.states) {
            write!(out, "{}", t * tu).unwrap();
            for (v, l) in y.iter().zip(&labels) {
                write!(out, ",{}", v * l.scale).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Adaptive scalar integration of the closed loop from `y0` (scaled,
/// including free parameters) at `t0`.
pub fn integrate(
    system: &ClosedLoop,
    y0: &[f64],
    t0: f64,
    stop: Stop<'_>,
    tol: &Tolerances,
) -> Result<Trajectory, JetError> {
    tol.validate()?;
    if y0.len() != system.dim() {
        return Err(DynError::DimensionMismatch {
            expected: system.dim(),
            found: y0.len(),
        }
        .into());
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(JetError::InvalidRequest("initial state is not finite".into()));
    }
    let sys = Arc::new(system.clone());
    let f = |y: &[f64]| sys.rhs(y);
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut derivs = Vec::new();
    let mut crossed = false;
    let (t_end, spec) = match stop {
        Stop::Time(t) => (t, None),
        Stop::Event { spec, t_max } => (t_max, Some(spec)),
    };
    let mut prev_e: Option<f64> = None;
    let (_, _, stats) = drive(&f, t0, y0.to_vec(), t_end, tol, |t, y, k| {
        times.push(t);
        states.push(y.to_vec());
        derivs.push(k.to_vec());
        if let Some(spec) = spec {
            let e = spec.value(y)?;
            if let Some(p) = prev_e {
                if spec.direction().admits(p, e) {
                    crossed = true;
                    return Ok(Flow::Stop);
                }
            }
            prev_e = Some(e);
        }
        Ok(Flow::Continue)
    })?;
    Ok(Trajectory {
        system: sys,
        times,
        states,
        derivs,
        stats,
        crossed,
    })
}

/// Integrates a vector of jets from `t0` to `t_end`.
pub fn integrate_jets<A: Algebra>(
    system: &ClosedLoop,
    y0: Vec<A>,
    t0: f64,
    t_end: f64,
    tol: &Tolerances,
) -> Result<(Vec<A>, StepStats), JetError> {
    tol.validate()?;
    let f = |y: &[A]| system.rhs(y);
    let (_, y, stats) = drive(&f, t0, y0, t_end, tol, |_, _, _| Ok(Flow::Continue))?;
    Ok((y, stats))
}

/// Taylor map of the flow in the perturbation of selected initial states
/// (and optionally the final time, as the last variable).
#[derive(Clone, Debug)]
pub struct FlowExpansion {
    pub map: TaylorMap,
    /// Nominal final time (scaled).
    pub t_nom: f64,
    /// Indices of the perturbed integrated-state components.
    pub expand_vars: Vec<usize>,
    pub with_time: bool,
    pub stats: StepStats,
}

impl FlowExpansion {
    pub fn order(&self) -> usize {
        self.map.order()
    }

    /// Number of initial-condition/parameter variables (excluding time).
    pub fn n_perturbations(&self) -> usize {
        self.expand_vars.len()
    }
}

fn seed_jets(
    y0: &[f64],
    expand_vars: &[usize],
    nvars: usize,
    order: usize,
) -> Result<Vec<TPoly>, JetError> {
    if order == 0 {
        return Err(JetError::InvalidRequest("order must be at least 1".into()));
    }
    if expand_vars.is_empty() {
        return Err(JetError::InvalidRequest("no expansion variables".into()));
    }
    for (i, &v) in expand_vars.iter().enumerate() {
        if v >= y0.len() || expand_vars[..i].contains(&v) {
            return Err(JetError::InvalidRequest(format!(
                "expansion variable index {v} is invalid or repeated"
            )));
        }
    }
    y0.iter()
        .enumerate()
        .map(|(i, &c)| match expand_vars.iter().position(|&v| v == i) {
            Some(j) => TPoly::seeded(c, j, nvars, order),
            None => TPoly::constant(c, nvars, order),
        })
        .collect::<Result<_, _>>()
        .map_err(Into::into)
}

fn var_labels(system: &ClosedLoop, expand_vars: &[usize], time: bool) -> Vec<VarLabel> {
    let labels = system.labels();
    let mut v: Vec<VarLabel> = expand_vars
        .iter()
        .map(|&i| VarLabel::new(format!("d{}", labels[i].name), labels[i].scale))
        .collect();
    if time {
        v.push(VarLabel::new("dt", system.model().scaling().time));
    }
    v
}

fn build_map(
    system: &ClosedLoop,
    comps: Vec<TPoly>,
    expand_vars: &[usize],
    time: bool,
) -> Result<TaylorMap, JetError> {
    let labels = system.labels();
    Ok(TaylorMap::with_components(
        comps,
        var_labels(system, expand_vars, time),
        labels.iter().map(|l| l.name.clone()).collect(),
        labels.iter().map(|l| l.scale).collect(),
    )?)
}

/// Order-`order` map of `y(t_end)` in the perturbations of `expand_vars`,
/// starting from `y0` at time 0.
pub fn expand_flow(
    system: &ClosedLoop,
    y0: &[f64],
    expand_vars: &[usize],
    order: usize,
    t_end: f64,
    tol: &Tolerances,
) -> Result<FlowExpansion, JetError> {
    let n = expand_vars.len();
    let jets = seed_jets(y0, expand_vars, n, order)?;
    let (y, stats) = integrate_jets(system, jets, 0.0, t_end, tol)?;
    Ok(FlowExpansion {
        map: build_map(system, y, expand_vars, false)?,
        t_nom: t_end,
        expand_vars: expand_vars.to_vec(),
        with_time: false,
        stats,
    })
}

/// Like [`expand_flow`], with the final-time perturbation `δt` as the last
/// variable: the map is `y(t_nom + δt)` about `(y0, t_nom)`.
///
/// The `δt` dependence is obtained after integration by Picard iteration
/// `Y ← X + ∫₀^δt f(Y)`, exact to the truncation order after `order`
/// sweeps (the system is autonomous).
pub fn expand_flow_with_time(
    system: &ClosedLoop,
    y0: &[f64],
    expand_vars: &[usize],
    order: usize,
    t_nom: f64,
    tol: &Tolerances,
) -> Result<FlowExpansion, JetError> {
    let n = expand_vars.len() + 1;
    let jets = seed_jets(y0, expand_vars, n, order)?;
    let (x, stats) = integrate_jets(system, jets, 0.0, t_nom, tol)?;
    let t_var = n - 1;
    let mut y = x.clone();
    for _ in 0..order {
        let f = system.rhs(&y)?;
        y = x
            .iter()
            .zip(&f)
            .map(|(xi, fi)| Ok(xi + &fi.antiderivative(t_var)?))
            .collect::<Result<Vec<_>, PolyError>>()?;
    }
    Ok(FlowExpansion {
        map: build_map(system, y, expand_vars, true)?,
        t_nom,
        expand_vars: expand_vars.to_vec(),
        with_time: true,
        stats,
    })
}

#[cfg(test)]
mod tests;
