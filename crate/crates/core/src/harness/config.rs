use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::problem::{Filter, Problem};
use super::HarnessError;
use crate::dynamics::{
    ClosedLoop, DynamicsModel, LanderParams, ModelConfig, ScalingOverride, TransferParams,
};
use crate::eventmap::{Direction, EventExpr, EventSpec, FitConfig};
use crate::jetflow::{integrate, Stop, Tolerances};
use crate::netpoly::{Activation, LayerActivation, OutputWiring, PolicyNet};
use crate::uncert::{MomentOrder, Predicate};

/// Where the policy network comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PolicyConfig {
    /// Weight file in the network JSON schema.
    File { path: PathBuf },
    /// Randomly initialised SIREN with the model's output head.
    Siren {
        hidden: Vec<usize>,
        #[serde(default = "one")]
        w0: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Constant outputs.
    Stub { values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

/// Event manifold in physical units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EventConfig {
    Sphere {
        center: [f64; 3],
        radius: f64,
        #[serde(default)]
        direction: Direction,
    },
    Plane {
        normal: [f64; 3],
        offset: f64,
        #[serde(default)]
        direction: Direction,
    },
    /// Expression over the physical state.
    Expr {
        expr: EventExpr,
        #[serde(default)]
        direction: Direction,
    },
    /// Scalar network of the physical position (or full physical state).
    Neural {
        path: PathBuf,
        #[serde(default)]
        direction: Direction,
    },
    /// Plane through the nominal position at `at_time` seconds,
    /// perpendicular to the nominal velocity there (crossed forwards).
    Section { at_time: f64 },
}

/// One perturbed state component with physical bounds, either `lo`/`hi`
/// or a symmetric `half_width`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxVar {
    pub name: String,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub half_width: Option<f64>,
}

impl BoxVar {
    fn bounds(&self) -> Result<(f64, f64), HarnessError> {
        match (self.lo, self.hi, self.half_width) {
            (Some(a), Some(b), None) => Ok((a, b)),
            (None, None, Some(h)) => Ok((-h, h)),
            _ => Err(HarnessError::Config(format!(
                "box entry `{}` needs either lo and hi or half_width",
                self.name
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub components: Vec<String>,
    pub predicate: Predicate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequirementConfig {
    pub components: Vec<String>,
    pub predicate: Predicate,
    #[serde(default = "default_requirement_samples")]
    pub samples: usize,
}

fn default_requirement_samples() -> usize {
    100_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Physical initial state; defaults to the model's reference state.
    pub x0: Option<Vec<f64>>,
    /// Model parameters carried as perturbable states.
    pub free_params: Vec<String>,
    pub order: usize,
    /// Orders compared by the sweep study.
    pub orders: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    /// Integration horizon in seconds.
    pub t_max: Option<f64>,
    pub rtol: f64,
    /// Outputs used by moments and comparisons; all outputs when empty.
    pub components: Vec<String>,
    /// Highest central moment (2 means covariance only).
    pub moment_order: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            x0: None,
            free_params: Vec::new(),
            order: 4,
            orders: vec![1, 2, 3, 4],
            samples: 20_000,
            seed: 1,
            t_max: None,
            rtol: 1e-12,
            components: Vec::new(),
            moment_order: 2,
        }
    }
}

/// A study configuration: model, policy, event, perturbation box and run
/// settings, all in physical units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelConfig,
    #[serde(default)]
    pub scaling: ScalingOverride,
    pub policy: Option<PolicyConfig>,
    pub event: EventConfig,
    #[serde(rename = "box")]
    pub bx: Vec<BoxVar>,
    #[serde(default)]
    pub run: RunConfig,
    pub filter: Option<FilterConfig>,
    pub requirement: Option<RequirementConfig>,
    pub fit: Option<FitConfig>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Config {
    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Config, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg = if is_json {
            Config::from_json(&text)?
        } else {
            Config::from_toml(&text)?
        };
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Config, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Config, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn moment_order(&self) -> Result<MomentOrder, HarnessError> {
        match self.run.moment_order {
            1 => Ok(MomentOrder::Mean),
            2 => Ok(MomentOrder::Covariance),
            m @ 3..=4 => Ok(MomentOrder::Central(m)),
            m => Err(HarnessError::Config(format!("moment_order must be 1..=4, got {m}"))),
        }
    }

    pub fn system(&self) -> Result<ClosedLoop, HarnessError> {
        let model = DynamicsModel::with_scaling(self.model.clone(), &self.scaling)?;
        let policy = match (&self.policy, model.expected_wiring()) {
            (None, _) => None,
            (Some(_), None) => {
                return Err(HarnessError::Config(format!(
                    "model {} takes no policy",
                    model.name()
                )))
            }
            (Some(p), Some(wiring)) => Some(self.policy_net(p, wiring, model.state_dim())?),
        };
        let free: Vec<&str> = self.run.free_params.iter().map(String::as_str).collect();
        Ok(ClosedLoop::new(model, policy, &free)?)
    }

    fn policy_net(
        &self,
        p: &PolicyConfig,
        wiring: OutputWiring,
        inputs: usize,
    ) -> Result<PolicyNet, HarnessError> {
        let outputs = if wiring == OutputWiring::Transfer { 3 } else { 4 };
        Ok(match p {
            PolicyConfig::File { path } => PolicyNet::load(&self.resolve(path))?,
            PolicyConfig::Stub { values } => PolicyNet::constant_stub(inputs, values, wiring)?,
            PolicyConfig::Siren { hidden, w0, seed } => {
                let mut dims = vec![inputs];
                dims.extend(hidden);
                dims.push(outputs);
                PolicyNet::random_siren(&dims, *w0, policy_head(wiring), wiring, *seed)?
            }
        })
    }

    /// Physical nominal initial state of the model.
    fn x0(&self) -> Result<Vec<f64>, HarnessError> {
        if let Some(x) = &self.run.x0 {
            return Ok(x.clone());
        }
        match &self.model {
            ModelConfig::Transfer(_) => Ok(TransferParams::reference_initial_state().to_vec()),
            ModelConfig::Lander(_) => Ok(LanderParams::reference_initial_state().to_vec()),
            _ => Err(HarnessError::Config("run.x0 is required for this model".into())),
        }
    }

    fn event(&self, system: &ClosedLoop, y0: &[f64], tol: &Tolerances) -> Result<EventSpec, HarnessError> {
        let units: Vec<f64> = system.labels().iter().map(|l| l.scale).collect();
        let len = *units.first().ok_or_else(|| HarnessError::Config("empty state".into()))?;
        let needs_position = !matches!(self.event, EventConfig::Expr { .. });
        if needs_position && (units.len() < 3 || units[1] != len || units[2] != len) {
            return Err(HarnessError::Config(
                "sphere, plane, neural and section events need a 3-D position in the first three states"
                    .into(),
            ));
        }
        Ok(match &self.event {
            EventConfig::Sphere {
                center,
                radius,
                direction,
            } => EventSpec::sphere(center.map(|c| c / len), radius / len).with_direction(*direction),
            EventConfig::Plane {
                normal,
                offset,
                direction,
            } => EventSpec::plane(*normal, offset / len).with_direction(*direction),
            EventConfig::Expr { expr, direction } => {
                EventSpec::expr(expr.in_scaled_units(&units)?).with_direction(*direction)
            }
            EventConfig::Neural { path, direction } => {
                let net = PolicyNet::load(&self.resolve(path))?;
                let scale_in = |u: &[f64]| -> Result<PolicyNet, HarnessError> {
                    let shift = net.input_shift().iter().zip(u).map(|(s, u)| s / u).collect();
                    let scale = net.input_scale().iter().zip(u).map(|(s, u)| s * u).collect();
                    Ok(net.clone().with_input_scaling(shift, scale)?)
                };
                let scaled = if net.input_dim() == 3 {
                    scale_in(&units[..3])?
                } else {
                    scale_in(&units)?
                };
                EventSpec::neural(scaled)?.with_direction(*direction)
            }
            EventConfig::Section { at_time } => {
                if units.len() < 6 || units[3..6].iter().any(|&u| u != units[3]) {
                    return Err(HarnessError::Config(
                        "section events need velocity in states 3..6".into(),
                    ));
                }
                let t = at_time / system.model().scaling().time;
                let traj = integrate(system, y0, 0.0, Stop::Time(t), tol)?;
                let y = traj.final_state();
                let normal = [y[3], y[4], y[5]];
                let offset = normal[0] * y[0] + normal[1] * y[1] + normal[2] * y[2];
                EventSpec::plane(normal, offset).with_direction(Direction::Rising)
            }
        })
    }

    /// Output index by name (states, then the trigger time).
    pub fn output_index(problem: &Problem, name: &str) -> Result<usize, HarnessError> {
        problem
            .output_names()
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| HarnessError::Config(format!("unknown output `{name}`")))
    }

    pub fn components(&self, problem: &Problem) -> Result<Vec<usize>, HarnessError> {
        if self.run.components.is_empty() {
            Ok((0..problem.output_names().len()).collect())
        } else {
            self.run
                .components
                .iter()
                .map(|n| Config::output_index(problem, n))
                .collect()
        }
    }

    /// Builds the scaled problem.
    pub fn problem(&self) -> Result<Problem, HarnessError> {
        let system = self.system()?;
        let y0 = system.augment(&self.x0()?)?;
        let tol = Tolerances::with_rtol(self.run.rtol);
        tol.validate()?;
        let spec = self.event(&system, &y0, &tol)?;
        let time = system.model().scaling().time;
        let t_max = match (self.run.t_max, &self.event) {
            (Some(t), _) => t / time,
            (None, EventConfig::Section { at_time }) => 2.0 * at_time / time,
            (None, _) => return Err(HarnessError::Config("run.t_max is required".into())),
        };
        let labels = system.labels();
        let mut perturbed = Vec::with_capacity(self.bx.len());
        let mut bounds = Vec::with_capacity(self.bx.len());
        for v in &self.bx {
            let i = labels
                .iter()
                .position(|l| l.name == v.name)
                .ok_or_else(|| HarnessError::Config(format!("box variable `{}` is not a state", v.name)))?;
            let (a, b) = v.bounds()?;
            perturbed.push(i);
            bounds.push((a / labels[i].scale, b / labels[i].scale));
        }
        let mut problem = Problem::new(system, y0, spec, t_max, perturbed, bounds)?.with_tolerances(tol);
        if let Some(f) = &self.filter {
            let components = f
                .components
                .iter()
                .map(|n| Config::output_index(&problem, n))
                .collect::<Result<Vec<_>, _>>()?;
            problem = problem.with_filter(Filter {
                components,
                predicate: f.predicate.clone(),
            });
        }
        Ok(problem)
    }
}

/// Output head matching a model's wiring: a sigmoid throttle next to
/// linear direction outputs for the lander, sigmoid rotor commands for the
/// drone, linear direction outputs for the transfer.
pub(crate) fn policy_head(wiring: OutputWiring) -> LayerActivation {
    match wiring {
        OutputWiring::Lander => LayerActivation::PerNeuron(vec![
            Activation::Sigmoid,
            Activation::Linear,
            Activation::Linear,
            Activation::Linear,
        ]),
        OutputWiring::Drone => LayerActivation::Uniform(Activation::Sigmoid),
        _ => LayerActivation::Uniform(Activation::Linear),
    }
}
