//! Event manifolds, crossing detection and the trigger-time inversion that
//! turns a time-expanded flow into the map of the state at the event.

mod expr;
mod fit;
mod mesh;

pub use expr::EventExpr;
pub use fit::{fit_event_net, FitConfig, FitReport};
pub use mesh::{MeshError, TriangleMesh};

use thiserror::Error;

use crate::dynamics::DynError;
use crate::jetflow::{FlowExpansion, JetError, Trajectory};
use crate::netpoly::{NetError, PolicyNet};
use crate::polyalg::{Algebra, PolyError, TPoly, TaylorMap};

#[derive(Debug, Error)]
pub enum EventError {
    #[error("event needs state index {index} but the state has {len} components")]
    Dimension { index: usize, len: usize },
    #[error("neural event must have one output, found {0}")]
    NeuralOutputs(usize),
    #[error("neural event takes {found} inputs; expected 3 (position) or {state} (state)")]
    NeuralInputs { found: usize, state: usize },
    #[error("event not crossed on [{t0}, {t1}]")]
    Missed { t0: f64, t1: f64 },
    #[error("grazing contact at t = {t} (event rate {rate:e})")]
    Grazing { t: f64, rate: f64 },
    #[error("transversality violated: |dE/dt| = {rate:e} < {eps:e}")]
    Transversality { rate: f64, eps: f64 },
    #[error("trigger-time iteration did not converge (residual {residual:e})")]
    NonConvergent { residual: f64 },
    #[error("flow expansion has no time variable")]
    NoTimeVariable,
    #[error("trigger-time polynomial has {found} variables; the flow has {expected} perturbations")]
    LabelMismatch { expected: usize, found: usize },
    #[error("{samples} samples is fewer than the {required} required (10 per parameter)")]
    InsufficientSamples { samples: usize, required: usize },
    #[error("event-net fit diverged at iteration {iteration} (seed {seed}, learning rate {learning_rate})")]
    Diverged {
        seed: u64,
        learning_rate: f64,
        iteration: usize,
    },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Dyn(#[from] DynError),
    #[error(transparent)]
    Jet(Box<JetError>),
}

impl From<JetError> for EventError {
    fn from(e: JetError) -> Self {
        EventError::Jet(Box::new(e))
    }
}

/// Which sign changes of the event value count as crossings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Any,
    Rising,
    Falling,
}

impl Direction {
    /// True if moving from value `prev` to `cur` is a crossing.
    pub fn admits(self, prev: f64, cur: f64) -> bool {
        let rising = prev < 0.0 && cur >= 0.0;
        let falling = prev > 0.0 && cur <= 0.0;
        match self {
            Direction::Any => rising || falling,
            Direction::Rising => rising,
            Direction::Falling => falling,
        }
    }
}

#[derive(Clone, Debug)]
pub enum EventKind {
    /// `|p − center|² − radius²`
    Sphere { center: [f64; 3], radius: f64 },
    /// `n·p − offset`
    Plane { normal: [f64; 3], offset: f64 },
    /// Scalar network of the position (3 inputs) or of the whole state.
    Neural(Box<PolicyNet>),
    /// Expression over the whole state vector.
    Expr(EventExpr),
}

pub const DEFAULT_TRANSVERSAL_EPS: f64 = 1e-8;

/// An event manifold `e(y) = 0` with crossing and refinement settings.
#[derive(Clone, Debug)]
pub struct EventSpec {
    kind: EventKind,
    position: [usize; 3],
    direction: Direction,
    refine_tol: f64,
    transversal_eps: f64,
    graze_tol: f64,
}

impl EventSpec {
    pub fn new(kind: EventKind) -> Result<EventSpec, EventError> {
        if let EventKind::Neural(net) = &kind {
            if net.output_dim() != 1 {
                return Err(EventError::NeuralOutputs(net.output_dim()));
            }
        }
        Ok(EventSpec {
            kind,
            position: [0, 1, 2],
            direction: Direction::Any,
            refine_tol: 1e-15,
            transversal_eps: DEFAULT_TRANSVERSAL_EPS,
            graze_tol: 1e-10,
        })
    }

    pub fn sphere(center: [f64; 3], radius: f64) -> EventSpec {
        EventSpec::new(EventKind::Sphere { center, radius }).expect("analytic kind")
    }

    pub fn plane(normal: [f64; 3], offset: f64) -> EventSpec {
        EventSpec::new(EventKind::Plane { normal, offset }).expect("analytic kind")
    }

    pub fn neural(net: PolicyNet) -> Result<EventSpec, EventError> {
        EventSpec::new(EventKind::Neural(Box::new(net)))
    }

    pub fn expr(e: EventExpr) -> EventSpec {
        EventSpec::new(EventKind::Expr(e)).expect("analytic kind")
    }

    pub fn with_direction(mut self, d: Direction) -> Self {
        self.direction = d;
        self
    }

    /// State indices holding the position used by sphere, plane and
    /// position-input neural events.
    pub fn with_position(mut self, idx: [usize; 3]) -> Self {
        self.position = idx;
        self
    }

    /// Relative tolerance on `|e|` for root refinement.
    pub fn with_refine_tol(mut self, tol: f64) -> Self {
        self.refine_tol = tol;
        self
    }

    pub fn with_transversal_eps(mut self, eps: f64) -> Self {
        self.transversal_eps = eps;
        self
    }

    /// Largest `|e|` at a local extremum that is reported as grazing.
    pub fn with_graze_tol(mut self, tol: f64) -> Self {
        self.graze_tol = tol;
        self
    }

    pub fn kind(&self) -> &EventKind {
        &self.kind
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn position(&self) -> [usize; 3] {
        self.position
    }

    pub fn transversal_eps(&self) -> f64 {
        self.transversal_eps
    }

    fn pos<'a, A>(&self, y: &'a [A]) -> Result<[&'a A; 3], EventError> {
        let get = |i: usize| {
            y.get(i).ok_or(EventError::Dimension {
                index: i,
                len: y.len(),
            })
        };
        Ok([get(self.position[0])?, get(self.position[1])?, get(self.position[2])?])
    }

    /// Event value over scalars or jets.
    pub fn value<A: Algebra>(&self, y: &[A]) -> Result<A, EventError> {
        match &self.kind {
            EventKind::Sphere { center, radius } => {
                let p = self.pos(y)?;
                let mut acc = p[0].lift(-radius * radius);
                for (pi, ci) in p.iter().zip(center) {
                    let d = pi.add_scalar(-ci);
                    acc = acc.add_ref(&d.square());
                }
                Ok(acc)
            }
            EventKind::Plane { normal, offset } => {
                let p = self.pos(y)?;
                let mut acc = p[0].lift(-offset);
                for (pi, ni) in p.iter().zip(normal) {
                    acc.axpy(*ni, pi);
                }
                Ok(acc)
            }
            EventKind::Neural(net) => {
                let out = if net.input_dim() == 3 {
                    let p = self.pos(y)?;
                    net.eval(&[p[0].clone(), p[1].clone(), p[2].clone()])?
                } else if net.input_dim() == y.len() {
                    net.eval(y)?
                } else {
                    return Err(EventError::NeuralInputs {
                        found: net.input_dim(),
                        state: y.len(),
                    });
                };
                Ok(out.into_iter().next().expect("one output"))
            }
            EventKind::Expr(e) => e.eval(y),
        }
    }

    /// Event value and its time derivative along `ẏ = f`.
    pub fn value_and_rate(&self, y: &[f64], f: &[f64]) -> Result<(f64, f64), EventError> {
        let jets = y
            .iter()
            .zip(f)
            .map(|(&yi, &fi)| Ok(TPoly::variable(0, 1, 1)?.scale(fi).add_scalar(yi)))
            .collect::<Result<Vec<_>, PolyError>>()?;
        let e = self.value(&jets)?;
        Ok((e.constant_term(), e.coeff(&[1])))
    }
}

/// A refined event crossing on a trajectory.
#[derive(Clone, Debug)]
pub struct Crossing {
    pub t: f64,
    pub state: Vec<f64>,
    /// `de/dt` at the crossing.
    pub rate: f64,
}

/// Illinois-modified regula falsi for a sign change of `g` on `[a, b]`.
fn illinois<G>(g: G, mut a: f64, mut b: f64, mut ga: f64, mut gb: f64, tol: f64) -> Result<f64, EventError>
where
    G: Fn(f64) -> Result<f64, EventError>,
{
    let scale = ga.abs().max(gb.abs());
    let mut side = 0i8;
    for _ in 0..200 {
        if gb == 0.0 {
            return Ok(b);
        }
        if ga == 0.0 {
            return Ok(a);
        }
        let c = (a * gb - b * ga) / (gb - ga);
        let c = if c.is_finite() && (c - a) * (c - b) < 0.0 {
            c
        } else {
            0.5 * (a + b)
        };
        let gc = g(c)?;
        if gc.abs() <= tol * scale || (b - a).abs() <= 4.0 * f64::EPSILON * c.abs().max(1.0) {
            return Ok(c);
        }
        if (gc < 0.0) == (gb < 0.0) {
            b = c;
            gb = gc;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            ga = gc;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(if ga.abs() < gb.abs() { a } else { b })
}

/// Finds the first crossing of `spec` along `traj` and refines it on the
/// re-stepped dense output.
///
/// Without a sign change, local extrema of the event value (sign changes
/// of its rate) that come within the grazing tolerance of zero are
/// reported as grazing rather than missed.
pub fn detect(traj: &Trajectory, spec: &EventSpec) -> Result<Crossing, EventError> {
    let sys = traj.system();
    let ts = traj.times();
    let ys = traj.states();
    let ks = traj.derivatives();
    let er: Vec<(f64, f64)> = ys
        .iter()
        .zip(ks)
        .map(|(y, k)| spec.value_and_rate(y, k))
        .collect::<Result<_, _>>()?;
    let n = ts.len();
    let value_at = |i: usize, t: f64| -> Result<f64, EventError> {
        let y = traj.dense_in(i, t)?;
        spec.value(&y)
    };
    for i in 0..n.saturating_sub(1) {
        let (e0, e1) = (er[i].0, er[i + 1].0);
        if spec.direction.admits(e0, e1) {
            let t = illinois(|t| value_at(i, t), ts[i], ts[i + 1], e0, e1, spec.refine_tol)?;
            let state = traj.dense_in(i, t)?;
            let f = sys.rhs(&state)?;
            let (_, rate) = spec.value_and_rate(&state, &f)?;
            if rate.abs() < spec.transversal_eps {
                return Err(EventError::Grazing { t, rate });
            }
            return Ok(Crossing { t, state, rate });
        }
    }
    // no crossing: look for a near-tangency at a local extremum
    let rate_at = |i: usize, t: f64| -> Result<f64, EventError> {
        let y = traj.dense_in(i, t)?;
        let f = sys.rhs(&y)?;
        Ok(spec.value_and_rate(&y, &f)?.1)
    };
    for i in 0..n.saturating_sub(1) {
        let (r0, r1) = (er[i].1, er[i + 1].1);
        if Direction::Any.admits(r0, r1) {
            let t = illinois(|t| rate_at(i, t), ts[i], ts[i + 1], r0, r1, 1e-15)?;
            let e = value_at(i, t)?;
            if e.abs() <= spec.graze_tol {
                return Err(EventError::Grazing { t, rate: rate_at(i, t)? });
            }
        }
    }
    Err(EventError::Missed {
        t0: ts[0],
        t1: ts[n - 1],
    })
}

/// Event value composed with the flow map, `E(δz, δt) = e(φ(δz, δt))`.
pub fn event_of_flow(flow: &FlowExpansion, spec: &EventSpec) -> Result<TPoly, EventError> {
    spec.value(flow.map.components())
}

/// Solves `E(δz, T(δz)) = 0` for the trigger-time shift polynomial by
/// formal Newton iteration. `T` lives in the perturbation variables only.
pub fn invert_trigger_time(flow: &FlowExpansion, spec: &EventSpec) -> Result<TPoly, EventError> {
    if !flow.with_time {
        return Err(EventError::NoTimeVariable);
    }
    let e = event_of_flow(flow, spec)?;
    let n = e.nvars();
    let k = e.order();
    let e_t = e.derivative(n - 1)?;
    let rate = e_t.constant_term();
    if !(rate.abs() >= spec.transversal_eps) {
        return Err(EventError::Transversality {
            rate: rate.abs(),
            eps: spec.transversal_eps,
        });
    }
    let mut t = TPoly::zero(n - 1, k)?;
    // each sweep doubles the number of correct orders
    let sweeps = (usize::BITS - k.leading_zeros()) as usize + 2;
    for _ in 0..sweeps {
        let num = e.substitute_last(&t)?;
        let den = e_t.substitute_last(&t)?;
        t = &t - &(&num * &den.recip()?);
    }
    let residual = e.substitute_last(&t)?.max_abs();
    let scale = e.max_abs().max(f64::MIN_POSITIVE);
    if !(residual <= 1e-8 * scale) {
        return Err(EventError::NonConvergent { residual });
    }
    Ok(t)
}

/// State at the event as a polynomial in the initial perturbations.
#[derive(Clone, Debug)]
pub struct EventTransitionMap {
    pub map: TaylorMap,
    /// Trigger-time shift `T(δz)` relative to `t_nom`.
    pub trigger_time: TPoly,
    pub t_nom: f64,
    /// `∂E/∂δt` at the nominal crossing, when the event was known.
    pub rate: Option<f64>,
}

impl EventTransitionMap {
    /// Largest coefficient of `e(ETT(δz))`; zero to truncation order when
    /// the event is satisfied identically.
    pub fn event_residual(&self, spec: &EventSpec) -> Result<f64, EventError> {
        Ok(spec.value(self.map.components())?.max_abs())
    }
}

/// Substitutes the trigger-time polynomial into the time-expanded flow.
pub fn event_transition_map(flow: &FlowExpansion, t: &TPoly) -> Result<EventTransitionMap, EventError> {
    if !flow.with_time {
        return Err(EventError::NoTimeVariable);
    }
    let np = flow.map.nvars() - 1;
    if t.nvars() != np || t.order() != flow.map.order() {
        return Err(EventError::LabelMismatch {
            expected: np,
            found: t.nvars(),
        });
    }
    let comps = flow
        .map
        .components()
        .iter()
        .map(|c| c.substitute_last(t))
        .collect::<Result<Vec<_>, _>>()?;
    let map = TaylorMap::with_components(
        comps,
        flow.map.var_labels()[..np].to_vec(),
        flow.map.component_names().to_vec(),
        flow.map.component_scales().to_vec(),
    )?;
    Ok(EventTransitionMap {
        map,
        trigger_time: t.clone(),
        t_nom: flow.t_nom,
        rate: None,
    })
}

/// Inversion plus substitution in one call, recording the event rate.
pub fn build_ett(flow: &FlowExpansion, spec: &EventSpec) -> Result<EventTransitionMap, EventError> {
    let t = invert_trigger_time(flow, spec)?;
    let mut ett = event_transition_map(flow, &t)?;
    let e = event_of_flow(flow, spec)?;
    ett.rate = Some(e.derivative(e.nvars() - 1)?.constant_term());
    Ok(ett)
}
