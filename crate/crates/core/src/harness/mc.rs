use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::problem::Problem;
use super::HarnessError;
use crate::eventmap::EventError;
use crate::uncert::{MomentSet, UniformBox};

/// Uniform samples of `bx`. Sample `i` is drawn from stream `i` of a
/// generator keyed by `seed`, so any partitioning of the work yields the
/// same vectors.
pub fn sample_box(bx: &UniformBox, n: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..n).map(|i| sample_one(bx, i, seed)).collect()
}

fn sample_one(bx: &UniformBox, i: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    bx.bounds()
        .iter()
        .map(|&(a, b)| {
            let u: f64 = rng.random();
            a + (b - a) * u
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleStatus {
    Hit,
    Missed,
    Failed,
    Filtered,
}

impl SampleStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleStatus::Hit => "hit",
            SampleStatus::Missed => "missed",
            SampleStatus::Failed => "failed",
            SampleStatus::Filtered => "filtered",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct McSample {
    pub perturbation: Vec<f64>,
    pub status: SampleStatus,
    /// Scaled state at the crossing followed by the scaled trigger time;
    /// present for hits and filtered samples.
    pub output: Option<Vec<f64>>,
    pub note: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StatusCounts {
    pub hit: usize,
    pub missed: usize,
    pub failed: usize,
    pub filtered: usize,
}

impl StatusCounts {
    pub fn total(&self) -> usize {
        self.hit + self.missed + self.failed + self.filtered
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct McResult {
    pub seed: u64,
    pub var_labels: Vec<String>,
    pub output_names: Vec<String>,
    pub output_scales: Vec<f64>,
    pub samples: Vec<McSample>,
}

impl McResult {
    pub fn counts(&self) -> StatusCounts {
        let mut c = StatusCounts::default();
        for s in &self.samples {
            match s.status {
                SampleStatus::Hit => c.hit += 1,
                SampleStatus::Missed => c.missed += 1,
                SampleStatus::Failed => c.failed += 1,
                SampleStatus::Filtered => c.filtered += 1,
            }
        }
        c
    }

    pub fn hits(&self) -> impl Iterator<Item = &[f64]> {
        self.samples
            .iter()
            .filter(|s| s.status == SampleStatus::Hit)
            .filter_map(|s| s.output.as_deref())
    }

    /// One row per sample: index, status, perturbations and physical outputs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,status");
        for l in &self.var_labels {
            write!(out, ",{l}").unwrap();
        }
        for l in &self.output_names {
            write!(out, ",{l}").unwrap();
        }
        out.push('\n');
        for (i, s) in self.samples.iter().enumerate() {
            write!(out, "{i},{}", s.status.as_str()).unwrap();
            for d in &s.perturbation {
                write!(out, ",{d}").unwrap();
            }
            match &s.output {
                Some(v) => {
                    for (x, u) in v.iter().zip(&self.output_scales) {
                        write!(out, ",{}", x * u).unwrap();
                    }
                }
                None => out.push_str(&",".repeat(self.output_names.len())),
            }
            out.push('\n');
        }
        out
    }
}

/// Integrates every sampled perturbation of `problem` to the event.
/// Misses and integration failures are recorded, not raised; the nominal
/// trajectory must hit.
pub fn mc_to_event(problem: &Problem, n: usize, seed: u64) -> Result<McResult, HarnessError> {
    if n == 0 {
        return Err(HarnessError::Config("Monte Carlo needs at least one sample".into()));
    }
    problem.nominal()?;
    let scales = problem.output_scales();
    let samples: Vec<McSample> = (0..n)
        .into_par_iter()
        .map(|i| run_sample(problem, &scales, sample_one(&problem.bx, i, seed)))
        .collect();
    Ok(McResult {
        seed,
        var_labels: problem.bx.labels().to_vec(),
        output_names: problem.output_names(),
        output_scales: scales,
        samples,
    })
}

fn run_sample(problem: &Problem, scales: &[f64], delta: Vec<f64>) -> McSample {
    let (status, output, note) = match problem.crossing(&delta) {
        Ok(c) => {
            let mut out = c.state;
            out.push(c.t);
            let pass = problem.filter.as_ref().is_none_or(|f| {
                let physical: Vec<f64> = out.iter().zip(scales).map(|(v, u)| v * u).collect();
                f.accepts(&physical)
            });
            let status = if pass {
                SampleStatus::Hit
            } else {
                SampleStatus::Filtered
            };
            (status, Some(out), None)
        }
        Err(HarnessError::Event(e @ (EventError::Missed { .. } | EventError::Grazing { .. }))) => {
            (SampleStatus::Missed, None, Some(e.to_string()))
        }
        Err(e) => (SampleStatus::Failed, None, Some(e.to_string())),
    };
    McSample {
        perturbation: delta,
        status,
        output,
        note,
    }
}

/// Sample mean and unbiased covariance of the selected outputs over hit
/// samples, in sample-index order.
pub fn empirical_moments(result: &McResult, components: &[usize]) -> Result<MomentSet, HarnessError> {
    let width = result.output_names.len();
    if let Some(&bad) = components.iter().find(|&&c| c >= width) {
        return Err(HarnessError::Config(format!("output component {bad} out of range")));
    }
    let rows: Vec<Vec<f64>> = result
        .hits()
        .map(|o| components.iter().map(|&c| o[c]).collect())
        .collect();
    if rows.len() < 2 {
        return Err(HarnessError::InsufficientSamples {
            hits: rows.len(),
            required: 2,
        });
    }
    let d = components.len();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in &rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = vec![vec![0.0; d]; d];
    for r in &rows {
        for i in 0..d {
            let di = r[i] - mean[i];
            for j in i..d {
                cov[i][j] += di * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= n - 1.0;
            cov[j][i] = cov[i][j];
        }
    }
    Ok(MomentSet {
        labels: components.iter().map(|&c| result.output_names[c].clone()).collect(),
        scales: components.iter().map(|&c| result.output_scales[c]).collect(),
        mean,
        covariance: Some(cov),
        central: None,
        map_order: 0,
        clamped: false,
        warnings: Vec::new(),
    })
}

/// `‖A − B‖_F / ‖B‖_F`.
pub fn frobenius_rel_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64, HarnessError> {
    if a.shape() != b.shape() {
        return Err(HarnessError::Shape(a.nrows(), a.ncols(), b.nrows(), b.ncols()));
    }
    let nb = b.norm();
    if nb == 0.0 {
        return Err(HarnessError::ZeroReference);
    }
    Ok((a - b).norm() / nb)
}
