//! Benchmark closed-loop dynamics, generic over the algebra, plus small
//! analytically solvable systems used as oracles.
//!
//! Everything inside the integrator runs in scaled units. A
//! [`DynamicsModel`] owns the physical parameters and the scaling; a
//! [`ClosedLoop`] adds the policy and the parameters that are carried as
//! extra (constant) states so they can be perturbed.

mod drone;
mod lander;
mod transfer;
pub(crate) mod vec3;

pub use drone::{
    attitude, drone_kinematic_terms, force_moment, rhs_drone, rotor_rate, DroneCoeffs,
    DroneParams, KinematicTerms, RotorUnits, DEFAULT_GIMBAL_EPS,
};
pub use lander::{rhs_lander, LanderParams};
pub use transfer::{rhs_transfer, TransferParams, AU, MU_SUN};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netpoly::{normalize_direction, NetError, OutputWiring, PolicyNet, DEFAULT_DIRECTION_EPS};
use crate::polyalg::{Algebra, PolyError, VarLabel};

#[derive(Debug, Error)]
pub enum DynError {
    #[error("position radius is zero at the nominal state")]
    ZeroRadius,
    #[error("mass {0} is not positive at the nominal state")]
    NonPositiveMass(f64),
    #[error("Euler-angle singularity: cos(theta) = {cos_theta:e}")]
    GimbalLock { cos_theta: f64 },
    #[error("parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("model {0} needs a policy network")]
    MissingPolicy(&'static str),
    #[error("policy wiring {found:?} does not drive model {model}")]
    WiringMismatch {
        model: &'static str,
        found: OutputWiring,
    },
    #[error("expected {expected} values, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("model {model} has no parameter {name:?}")]
    UnknownParameter { model: &'static str, name: String },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<(), DynError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(DynError::InvalidParameter {
            name,
            value,
            reason: "must be positive",
        })
    }
}

pub(crate) fn nonnegative(name: &'static str, value: f64) -> Result<(), DynError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(DynError::InvalidParameter {
            name,
            value,
            reason: "must be non-negative",
        })
    }
}

/// Which system to integrate, with its physical parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Transfer(TransferParams),
    Lander(LanderParams),
    Drone(DroneParams),
    /// `ẋ = −rate·x`
    Decay { rate: f64 },
    /// `ẋ = A x + b`
    Linear { a: Vec<Vec<f64>>, b: Vec<f64> },
    /// `ẋ = −x³, ẇ = x²`
    Cubic,
}

/// Optional replacements for the default length/time/mass units.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingOverride {
    pub length: Option<f64>,
    pub time: Option<f64>,
    pub mass: Option<f64>,
}

/// Physical size of one scaled unit.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaling {
    pub length: f64,
    pub time: f64,
    pub mass: f64,
    /// Per state component.
    pub state_units: Vec<f64>,
}

impl Scaling {
    pub fn to_scaled(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.state_units).map(|(v, u)| v / u).collect()
    }

    pub fn to_physical(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.state_units).map(|(v, u)| v * u).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Scaled {
    Transfer {
        mu: f64,
        omega: f64,
        gamma: f64,
    },
    Lander {
        mu: f64,
        omega: f64,
        c1: f64,
        isp: f64,
        g0: f64,
    },
    Drone(DroneCoeffs),
    Decay {
        rate: f64,
    },
    Linear {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    Cubic,
}

/// A validated model with its scaling and scaled parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsModel {
    config: ModelConfig,
    scaling: Scaling,
    scaled: Scaled,
    gimbal_eps: f64,
    direction_eps: f64,
}

impl DynamicsModel {
    pub fn new(config: ModelConfig) -> Result<Self, DynError> {
        DynamicsModel::with_scaling(config, &ScalingOverride::default())
    }

    pub fn with_scaling(config: ModelConfig, ov: &ScalingOverride) -> Result<Self, DynError> {
        let (scaling, scaled) = match &config {
            ModelConfig::Transfer(p) => {
                p.validate()?;
                let l = ov.length.unwrap_or(p.radius);
                let t = ov.time.unwrap_or(1.0 / p.frame_rate());
                let v = l / t;
                (
                    Scaling {
                        length: l,
                        time: t,
                        mass: 1.0,
                        state_units: vec![l, l, l, v, v, v],
                    },
                    Scaled::Transfer {
                        mu: p.mu * t * t / (l * l * l),
                        omega: p.frame_rate() * t,
                        gamma: p.gamma * t * t / l,
                    },
                )
            }
            ModelConfig::Lander(p) => {
                p.validate()?;
                let l = ov.length.unwrap_or(p.length_unit);
                let t = ov.time.unwrap_or(l * (l / p.mu).sqrt());
                let m = ov.mass.unwrap_or(p.m0);
                let v = l / t;
                (
                    Scaling {
                        length: l,
                        time: t,
                        mass: m,
                        state_units: vec![l, l, l, v, v, v, m],
                    },
                    Scaled::Lander {
                        mu: p.mu * t * t / (l * l * l),
                        omega: p.omega * t,
                        c1: p.c1 * t * t / (m * l),
                        isp: p.isp / t,
                        g0: p.g0 * t * t / l,
                    },
                )
            }
            ModelConfig::Drone(p) => {
                p.validate()?;
                let rs = p.rotor_scaled();
                let mut units = vec![1.0; 12];
                units.extend([rs.unit; 4]);
                (
                    Scaling {
                        length: 1.0,
                        time: 1.0,
                        mass: 1.0,
                        state_units: units,
                    },
                    Scaled::Drone(rs.p),
                )
            }
            ModelConfig::Decay { rate } => {
                if !rate.is_finite() {
                    return Err(DynError::InvalidParameter {
                        name: "decay.rate",
                        value: *rate,
                        reason: "must be finite",
                    });
                }
                (unit_scaling(1), Scaled::Decay { rate: *rate })
            }
            ModelConfig::Linear { a, b } => {
                let n = b.len();
                if n == 0 || a.len() != n || a.iter().any(|row| row.len() != n) {
                    return Err(DynError::DimensionMismatch {
                        expected: n * n,
                        found: a.iter().map(Vec::len).sum(),
                    });
                }
                (
                    unit_scaling(n),
                    Scaled::Linear {
                        a: a.clone(),
                        b: b.clone(),
                    },
                )
            }
            ModelConfig::Cubic => (unit_scaling(2), Scaled::Cubic),
        };
        Ok(DynamicsModel {
            config,
            scaling,
            scaled,
            gimbal_eps: DEFAULT_GIMBAL_EPS,
            direction_eps: DEFAULT_DIRECTION_EPS,
        })
    }

    pub fn name(&self) -> &'static str {
        match self.config {
            ModelConfig::Transfer(_) => "transfer",
            ModelConfig::Lander(_) => "lander",
            ModelConfig::Drone(_) => "drone",
            ModelConfig::Decay { .. } => "decay",
            ModelConfig::Linear { .. } => "linear",
            ModelConfig::Cubic => "cubic",
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn scaling(&self) -> &Scaling {
        &self.scaling
    }

    pub fn state_dim(&self) -> usize {
        self.scaling.state_units.len()
    }

    pub fn state_names(&self) -> Vec<String> {
        let fixed: &[&str] = match self.config {
            ModelConfig::Transfer(_) => &["x", "y", "z", "vx", "vy", "vz"],
            ModelConfig::Lander(_) => &["x", "y", "z", "vx", "vy", "vz", "m"],
            ModelConfig::Drone(_) => &[
                "x", "y", "z", "vx", "vy", "vz", "phi", "theta", "psi", "p", "q", "r", "w1", "w2",
                "w3", "w4",
            ],
            ModelConfig::Decay { .. } => &["x"],
            ModelConfig::Cubic => &["x", "w"],
            ModelConfig::Linear { .. } => &[],
        };
        if fixed.is_empty() {
            (0..self.state_dim()).map(|i| format!("x{i}")).collect()
        } else {
            fixed.iter().map(|s| s.to_string()).collect()
        }
    }

    /// Parameters that may be carried as perturbable constant states.
    pub fn param_names(&self) -> &'static [&'static str] {
        match self.config {
            ModelConfig::Transfer(_) => &["gamma"],
            ModelConfig::Lander(_) => &["c1", "isp"],
            ModelConfig::Decay { .. } => &["rate"],
            _ => &[],
        }
    }

    /// Scaled nominal value and physical unit of parameter `i`.
    pub fn param_value(&self, i: usize) -> (f64, f64) {
        let s = &self.scaling;
        match (&self.scaled, i) {
            (Scaled::Transfer { gamma, .. }, 0) => (*gamma, s.length / (s.time * s.time)),
            (Scaled::Lander { c1, .. }, 0) => (*c1, s.mass * s.length / (s.time * s.time)),
            (Scaled::Lander { isp, .. }, 1) => (*isp, s.time),
            (Scaled::Decay { rate }, 0) => (*rate, 1.0 / s.time),
            _ => panic!("parameter index {i} out of range for {}", self.name()),
        }
    }

    pub fn param_index(&self, name: &str) -> Result<usize, DynError> {
        self.param_names()
            .iter()
            .position(|p| *p == name)
            .ok_or_else(|| DynError::UnknownParameter {
                model: self.name(),
                name: name.to_string(),
            })
    }

    /// Policy wiring that drives this model, if it takes a policy.
    pub fn expected_wiring(&self) -> Option<OutputWiring> {
        match self.config {
            ModelConfig::Transfer(_) => Some(OutputWiring::Transfer),
            ModelConfig::Lander(_) => Some(OutputWiring::Lander),
            ModelConfig::Drone(_) => Some(OutputWiring::Drone),
            _ => None,
        }
    }

    pub fn gimbal_eps(&self) -> f64 {
        self.gimbal_eps
    }

    pub fn set_gimbal_eps(&mut self, eps: f64) {
        self.gimbal_eps = eps;
    }

    pub fn set_direction_eps(&mut self, eps: f64) {
        self.direction_eps = eps;
    }

    /// Scaled drone coefficients, if this is the drone.
    pub fn drone_coeffs(&self) -> Option<&DroneCoeffs> {
        match &self.scaled {
            Scaled::Drone(c) => Some(c),
            _ => None,
        }
    }

    /// Model right-hand side for given controls; `params` holds the values of
    /// every entry of [`param_names`](Self::param_names).
    pub fn rhs_with_controls<A: Algebra>(
        &self,
        x: &[A],
        controls: &[A],
        params: &[A],
    ) -> Result<Vec<A>, DynError> {
        match &self.scaled {
            Scaled::Transfer { mu, omega, .. } => {
                let dir = [controls[0].clone(), controls[1].clone(), controls[2].clone()];
                rhs_transfer(x, &dir, *mu, *omega, &params[0])
            }
            Scaled::Lander {
                mu, omega, g0, ..
            } => {
                let dir = [controls[1].clone(), controls[2].clone(), controls[3].clone()];
                rhs_lander(x, &dir, &controls[0], *mu, *omega, &params[0], &params[1], *g0)
            }
            Scaled::Drone(c) => rhs_drone(x, controls, c, self.gimbal_eps),
            Scaled::Decay { .. } => Ok(vec![params[0].mul_ref(&x[0]).neg()]),
            Scaled::Linear { a, b } => Ok(a
                .iter()
                .zip(b)
                .map(|(row, &bi)| {
                    let mut acc = x[0].lift(bi);
                    for (aij, xj) in row.iter().zip(x) {
                        acc.axpy(*aij, xj);
                    }
                    acc
                })
                .collect()),
            Scaled::Cubic => {
                let x2 = x[0].square();
                Ok(vec![x2.mul_ref(&x[0]).neg(), x2])
            }
        }
    }

    /// Maps raw policy outputs to the controls the model consumes.
    pub fn wire_controls<A: Algebra>(&self, out: &[A]) -> Result<Vec<A>, DynError> {
        match self.config {
            ModelConfig::Transfer(_) => {
                let d = normalize_direction(
                    &[out[0].clone(), out[1].clone(), out[2].clone()],
                    self.direction_eps,
                )?;
                Ok(d.to_vec())
            }
            ModelConfig::Lander(_) => {
                let d = normalize_direction(
                    &[out[1].clone(), out[2].clone(), out[3].clone()],
                    self.direction_eps,
                )?;
                let mut v = vec![out[0].clone()];
                v.extend(d);
                Ok(v)
            }
            _ => Ok(out.to_vec()),
        }
    }
}

fn unit_scaling(n: usize) -> Scaling {
    Scaling {
        length: 1.0,
        time: 1.0,
        mass: 1.0,
        state_units: vec![1.0; n],
    }
}

/// A model, its policy and the parameters carried as extra states.
///
/// The integrated state is `[x (scaled); q_free (scaled)]`, where every
/// free parameter has zero time derivative.
#[derive(Clone, Debug)]
pub struct ClosedLoop {
    model: DynamicsModel,
    policy: Option<PolicyNet>,
    free_params: Vec<usize>,
}

impl ClosedLoop {
    pub fn new(
        model: DynamicsModel,
        policy: Option<PolicyNet>,
        free_params: &[&str],
    ) -> Result<Self, DynError> {
        match (model.expected_wiring(), &policy) {
            (Some(_), None) => return Err(DynError::MissingPolicy(model.name())),
            (Some(w), Some(p)) => {
                if p.output_wiring() != w && p.output_wiring() != OutputWiring::None {
                    return Err(DynError::WiringMismatch {
                        model: model.name(),
                        found: p.output_wiring(),
                    });
                }
                let outputs = if w == OutputWiring::Transfer { 3 } else { 4 };
                if p.output_dim() != outputs {
                    return Err(DynError::DimensionMismatch {
                        expected: outputs,
                        found: p.output_dim(),
                    });
                }
                if p.input_dim() != model.state_dim() {
                    return Err(DynError::DimensionMismatch {
                        expected: model.state_dim(),
                        found: p.input_dim(),
                    });
                }
            }
            _ => {}
        }
        let free_params = free_params
            .iter()
            .map(|n| model.param_index(n))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ClosedLoop {
            model,
            policy,
            free_params,
        })
    }

    pub fn model(&self) -> &DynamicsModel {
        &self.model
    }

    pub fn policy(&self) -> Option<&PolicyNet> {
        self.policy.as_ref()
    }

    /// Dimension of the integrated state.
    pub fn dim(&self) -> usize {
        self.model.state_dim() + self.free_params.len()
    }

    /// Names of the integrated state components.
    pub fn labels(&self) -> Vec<VarLabel> {
        let mut v: Vec<VarLabel> = self
            .model
            .state_names()
            .into_iter()
            .zip(&self.model.scaling.state_units)
            .map(|(n, &u)| VarLabel::new(n, u))
            .collect();
        for &i in &self.free_params {
            let (_, unit) = self.model.param_value(i);
            v.push(VarLabel::new(self.model.param_names()[i], unit));
        }
        v
    }

    /// Scaled integrated state from a physical model state.
    pub fn augment(&self, x_physical: &[f64]) -> Result<Vec<f64>, DynError> {
        if x_physical.len() != self.model.state_dim() {
            return Err(DynError::DimensionMismatch {
                expected: self.model.state_dim(),
                found: x_physical.len(),
            });
        }
        let mut y = self.model.scaling.to_scaled(x_physical);
        y.extend(self.free_params.iter().map(|&i| self.model.param_value(i).0));
        Ok(y)
    }

    /// Physical values of an integrated state.
    pub fn to_physical(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(self.labels())
            .map(|(v, l)| v * l.scale)
            .collect()
    }

    /// Autonomous right-hand side in scaled units.
    pub fn rhs<A: Algebra>(&self, y: &[A]) -> Result<Vec<A>, DynError> {
        let n = self.model.state_dim();
        if y.len() != self.dim() {
            return Err(DynError::DimensionMismatch {
                expected: self.dim(),
                found: y.len(),
            });
        }
        let x = &y[..n];
        let names = self.model.param_names();
        let params: Vec<A> = (0..names.len())
            .map(|i| match self.free_params.iter().position(|&f| f == i) {
                Some(k) => y[n + k].clone(),
                None => y[0].lift(self.model.param_value(i).0),
            })
            .collect();
        let controls = match &self.policy {
            Some(p) if self.model.expected_wiring().is_some() => {
                let out = p.eval(x)?;
                self.model.wire_controls(&out)?
            }
            _ => Vec::new(),
        };
        let mut dy = self.model.rhs_with_controls(x, &controls, &params)?;
        dy.extend((0..self.free_params.len()).map(|_| y[0].lift(0.0)));
        Ok(dy)
    }
}

#[cfg(test)]
mod tests;
