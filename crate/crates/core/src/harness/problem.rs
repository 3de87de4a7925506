use crate::dynamics::ClosedLoop;
use crate::eventmap::{build_ett, detect, Crossing, EventError, EventSpec, EventTransitionMap};
use crate::jetflow::{expand_flow_with_time, integrate, Stop, Tolerances, Trajectory};
use crate::polyalg::TaylorMap;
use crate::uncert::{Predicate, UniformBox};

use super::HarnessError;

/// Name of the trigger-time component appended to event maps and samples.
pub const TRIGGER_TIME: &str = "t_event";

/// Post-hoc acceptance test on the physical state at the crossing (for
/// example a gate window or a touchdown speed limit).
#[derive(Clone, Debug, PartialEq)]
pub struct Filter {
    pub components: Vec<usize>,
    pub predicate: Predicate,
}

impl Filter {
    pub fn accepts(&self, physical: &[f64]) -> bool {
        let x: Vec<f64> = self.components.iter().map(|&i| physical[i]).collect();
        self.predicate.holds(&x)
    }
}

/// A closed-loop system, a nominal initial state, an event and a box of
/// initial perturbations: everything one uncertainty study needs.
/// All quantities are scaled.
#[derive(Clone, Debug)]
pub struct Problem {
    pub system: ClosedLoop,
    pub y0: Vec<f64>,
    pub spec: EventSpec,
    pub t_max: f64,
    /// Perturbed components of the integrated state.
    pub perturbed: Vec<usize>,
    /// Perturbation box, one variable per entry of `perturbed`.
    pub bx: UniformBox,
    pub tol: Tolerances,
    pub filter: Option<Filter>,
}

impl Problem {
    /// Builds a problem with a box given as scaled bounds per perturbed
    /// component. Box labels follow the flow map's variable names.
    pub fn new(
        system: ClosedLoop,
        y0: Vec<f64>,
        spec: EventSpec,
        t_max: f64,
        perturbed: Vec<usize>,
        bounds: Vec<(f64, f64)>,
    ) -> Result<Problem, HarnessError> {
        if y0.len() != system.dim() {
            return Err(HarnessError::Config(format!(
                "initial state has {} entries, the system has {}",
                y0.len(),
                system.dim()
            )));
        }
        if perturbed.len() != bounds.len() {
            return Err(HarnessError::Config(format!(
                "{} perturbed components but {} bounds",
                perturbed.len(),
                bounds.len()
            )));
        }
        let labels = system.labels();
        let names = perturbed
            .iter()
            .map(|&i| {
                labels
                    .get(i)
                    .map(|l| format!("d{}", l.name))
                    .ok_or_else(|| HarnessError::Config(format!("state index {i} out of range")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let bx = UniformBox::new(bounds, names)?;
        Ok(Problem {
            system,
            y0,
            spec,
            t_max,
            perturbed,
            bx,
            tol: Tolerances::default(),
            filter: None,
        })
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_filter(mut self, filter: Filter) -> Self {
        self.filter = Some(filter);
        self
    }

    /// Same problem with the box replaced by scaled `bounds`.
    pub fn with_bounds(&self, bounds: Vec<(f64, f64)>) -> Result<Problem, HarnessError> {
        let mut p = self.clone();
        p.bx = UniformBox::new(bounds, self.bx.labels().to_vec())?;
        Ok(p)
    }

    /// Output names: the integrated state followed by the trigger time.
    pub fn output_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.system.labels().into_iter().map(|l| l.name).collect();
        v.push(TRIGGER_TIME.to_string());
        v
    }

    /// Physical unit of each output.
    pub fn output_scales(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.system.labels().into_iter().map(|l| l.scale).collect();
        v.push(self.system.model().scaling().time);
        v
    }

    /// Integrates from `y0 + δ` (δ on the perturbed components) until the
    /// event or `t_max`.
    pub fn trajectory(&self, delta: &[f64]) -> Result<Trajectory, HarnessError> {
        let mut y = self.y0.clone();
        for (&i, d) in self.perturbed.iter().zip(delta) {
            y[i] += d;
        }
        Ok(integrate(
            &self.system,
            &y,
            0.0,
            Stop::Event {
                spec: &self.spec,
                t_max: self.t_max,
            },
            &self.tol,
        )?)
    }

    /// The refined crossing for a perturbation.
    pub fn crossing(&self, delta: &[f64]) -> Result<Crossing, HarnessError> {
        let traj = self.trajectory(delta)?;
        Ok(detect(&traj, &self.spec)?)
    }

    /// Nominal crossing; a miss or graze is reported as a nominal miss.
    pub fn nominal(&self) -> Result<Crossing, HarnessError> {
        let zero = vec![0.0; self.perturbed.len()];
        match self.crossing(&zero) {
            Err(HarnessError::Event(e @ (EventError::Missed { .. } | EventError::Grazing { .. }))) => {
                Err(HarnessError::NominalMiss(e.to_string()))
            }
            other => other,
        }
    }

    /// Event transition map of order `order` about the nominal crossing.
    pub fn ett(&self, order: usize) -> Result<EventTransitionMap, HarnessError> {
        let c = self.nominal()?;
        let flow = expand_flow_with_time(&self.system, &self.y0, &self.perturbed, order, c.t, &self.tol)?;
        Ok(build_ett(&flow, &self.spec)?)
    }

    /// The event map with the absolute trigger time `t_nom + T(δz)`
    /// appended as a last component.
    pub fn event_map(&self, order: usize) -> Result<TaylorMap, HarnessError> {
        let ett = self.ett(order)?;
        let mut map = ett.map;
        let t = ett.trigger_time.add_scalar(ett.t_nom);
        map.push(TRIGGER_TIME, self.system.model().scaling().time, t)?;
        Ok(map)
    }
}
