use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use super::mc::{empirical_moments, frobenius_rel_error, mc_to_event, StatusCounts};
use super::problem::Problem;
use super::HarnessError;
use crate::uncert::{propagate_moments, MomentOrder};

#[derive(Clone, Debug, Serialize)]
pub struct StudyRow {
    pub order: usize,
    /// Frobenius relative error of the propagated covariance against the
    /// Monte Carlo covariance.
    pub covariance_rel_error: f64,
    /// Largest mean difference in units of the Monte Carlo standard error.
    pub mean_z_score: f64,
    pub expand_seconds: f64,
    pub moments_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepStudy {
    pub components: Vec<String>,
    pub seed: u64,
    pub n_mc: usize,
    pub counts: StatusCounts,
    pub mc_seconds: f64,
    pub rows: Vec<StudyRow>,
}

impl SweepStudy {
    /// Deterministic table (runtimes are left out so identical inputs give
    /// identical bytes).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("order,covariance_rel_error,mean_z_score,hits,n\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{:e},{:e},{},{}",
                r.order, r.covariance_rel_error, r.mean_z_score, self.counts.hit, self.n_mc
            )
            .unwrap();
        }
        out
    }

    /// Runtimes per order, separate from the deterministic table.
    pub fn timings_csv(&self) -> String {
        let mut out = String::from("order,expand_seconds,moments_seconds,mc_seconds\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{}",
                r.order, r.expand_seconds, r.moments_seconds, self.mc_seconds
            )
            .unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable study")
    }

    pub fn error_at(&self, order: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.order == order)
            .map(|r| r.covariance_rel_error)
    }
}

/// Compares moments propagated through the event map at each order with
/// one fixed-seed Monte Carlo baseline. `components` index the problem's
/// outputs (state followed by trigger time).
pub fn order_sweep_study(
    problem: &Problem,
    orders: &[usize],
    n_mc: usize,
    seed: u64,
    components: &[usize],
) -> Result<SweepStudy, HarnessError> {
    if orders.is_empty() || components.is_empty() {
        return Err(HarnessError::Config("sweep needs orders and components".into()));
    }
    let clock = Instant::now();
    let mc = mc_to_event(problem, n_mc, seed)?;
    let mc_seconds = clock.elapsed().as_secs_f64();
    let reference = empirical_moments(&mc, components)?;
    let ref_cov = reference.covariance_matrix().expect("empirical covariance");
    let hits = mc.counts().hit as f64;
    let mut rows = Vec::with_capacity(orders.len());
    for &order in orders {
        let clock = Instant::now();
        let map = problem.event_map(order)?.select(components)?;
        let expand_seconds = clock.elapsed().as_secs_f64();
        let clock = Instant::now();
        let m = propagate_moments(&map, &problem.bx, MomentOrder::Covariance)?;
        let moments_seconds = clock.elapsed().as_secs_f64();
        let cov = m.covariance_matrix().expect("covariance requested");
        let mean_z_score = (0..components.len())
            .map(|i| {
                let se = (ref_cov[(i, i)] / hits).sqrt();
                let d = (m.mean[i] - reference.mean[i]).abs();
                if se > 0.0 {
                    d / se
                } else if d == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max);
        rows.push(StudyRow {
            order,
            covariance_rel_error: frobenius_rel_error(&cov, &ref_cov)?,
            mean_z_score,
            expand_seconds,
            moments_seconds,
        });
    }
    Ok(SweepStudy {
        components: reference.labels,
        seed,
        n_mc,
        counts: mc.counts(),
        mc_seconds,
        rows,
    })
}
