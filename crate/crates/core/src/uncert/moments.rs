use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::Serialize;

use super::radius::{ch_radius, Restriction};
use super::UncertError;
use crate::polyalg::{TPoly, TaylorMap};

/// `E[Xⁿ]` for `X ~ U[a, b]`: `(b^{n+1} − a^{n+1}) / ((n+1)(b − a))`.
pub fn uniform_raw_moment(a: f64, b: f64, n: u32) -> Result<f64, UncertError> {
    if !(a < b) {
        return Err(UncertError::EmptyInterval { a, b });
    }
    Ok(raw_moment_unchecked(a, b, n))
}

fn raw_moment_unchecked(a: f64, b: f64, n: u32) -> f64 {
    if a == b {
        return a.powi(n as i32);
    }
    // Σ_{i=0..n} a^i b^{n−i} / (n+1) avoids cancellation for narrow intervals
    if a.abs().max(b.abs()) <= 4.0 * (b - a) {
        let m = n as i32 + 1;
        (b.powi(m) - a.powi(m)) / ((n as f64 + 1.0) * (b - a))
    } else {
        let s: f64 = (0..=n)
            .map(|i| a.powi(i as i32) * b.powi((n - i) as i32))
            .sum();
        s / (n as f64 + 1.0)
    }
}

/// Per-variable raw moments of independent perturbations.
pub trait RawMoments {
    fn dim(&self) -> usize;
    fn raw_moment(&self, var: usize, n: u32) -> f64;
}

/// Independent uniform perturbations `δzᵢ ~ U[aᵢ, bᵢ]`, in the map's scaled
/// variable units. A variable with `aᵢ = bᵢ` is held fixed at that value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformBox {
    bounds: Vec<(f64, f64)>,
    labels: Vec<String>,
}

impl UniformBox {
    pub fn new(bounds: Vec<(f64, f64)>, labels: Vec<String>) -> Result<Self, UncertError> {
        if bounds.len() != labels.len() {
            return Err(UncertError::Dimension {
                expected: bounds.len(),
                found: labels.len(),
            });
        }
        for (var, &(a, b)) in bounds.iter().enumerate() {
            if !(a <= b) || !a.is_finite() || !b.is_finite() {
                return Err(UncertError::Bounds { var, a, b });
            }
        }
        Ok(UniformBox { bounds, labels })
    }

    /// Symmetric box `±half_widths` labelled like the map's variables.
    pub fn symmetric(map: &TaylorMap, half_widths: &[f64]) -> Result<Self, UncertError> {
        Self::new(
            half_widths.iter().map(|&h| (-h, h)).collect(),
            map.var_labels().iter().map(|l| l.name.clone()).collect(),
        )
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    /// Same box with every bound multiplied by `s`.
    pub fn scaled(&self, s: f64) -> UniformBox {
        UniformBox {
            bounds: self.bounds.iter().map(|&(a, b)| (a * s, b * s)).collect(),
            labels: self.labels.clone(),
        }
    }
}

impl RawMoments for UniformBox {
    fn dim(&self) -> usize {
        self.bounds.len()
    }

    fn raw_moment(&self, var: usize, n: u32) -> f64 {
        let (a, b) = self.bounds[var];
        raw_moment_unchecked(a, b, n)
    }
}

/// `E[δz^α] = Πᵢ E[δzᵢ^{αᵢ}]` by independence.
pub fn expected_monomial(bx: &UniformBox, alpha: &[u32]) -> Result<f64, UncertError> {
    if alpha.len() != bx.len() {
        return Err(UncertError::Dimension {
            expected: bx.len(),
            found: alpha.len(),
        });
    }
    Ok(alpha
        .iter()
        .enumerate()
        .map(|(i, &e)| bx.raw_moment(i, e))
        .product())
}

/// What [`propagate_moments`] computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentOrder {
    Mean,
    Covariance,
    /// Covariance plus per-component central moments of orders 3..=m (m ≤ 4).
    Central(usize),
}

/// Moments of the map output in scaled units, with the unit of each
/// component for de-scaling.
#[derive(Clone, Debug, Serialize)]
pub struct MomentSet {
    pub labels: Vec<String>,
    pub scales: Vec<f64>,
    pub mean: Vec<f64>,
    /// Row-major `n × n`, if computed.
    pub covariance: Option<Vec<Vec<f64>>>,
    /// `central[i][m − 3]` is the m-th central moment of component i.
    pub central: Option<Vec<Vec<f64>>>,
    pub map_order: usize,
    /// True if tiny negative variances were clamped to zero.
    pub clamped: bool,
    pub warnings: Vec<String>,
}

impl MomentSet {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn covariance_matrix(&self) -> Option<DMatrix<f64>> {
        let c = self.covariance.as_ref()?;
        let n = c.len();
        Some(DMatrix::from_fn(n, n, |i, j| c[i][j]))
    }

    pub fn mean_physical(&self) -> Vec<f64> {
        self.mean.iter().zip(&self.scales).map(|(m, s)| m * s).collect()
    }

    pub fn covariance_physical(&self) -> Option<DMatrix<f64>> {
        let c = self.covariance_matrix()?;
        let s = &self.scales;
        Some(DMatrix::from_fn(c.nrows(), c.ncols(), |i, j| c[(i, j)] * s[i] * s[j]))
    }

    /// Restriction to the given components.
    pub fn select(&self, idx: &[usize]) -> Result<MomentSet, UncertError> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.dim()) {
            return Err(UncertError::Component(bad));
        }
        Ok(MomentSet {
            labels: idx.iter().map(|&i| self.labels[i].clone()).collect(),
            scales: idx.iter().map(|&i| self.scales[i]).collect(),
            mean: idx.iter().map(|&i| self.mean[i]).collect(),
            covariance: self
                .covariance
                .as_ref()
                .map(|c| idx.iter().map(|&i| idx.iter().map(|&j| c[i][j]).collect()).collect()),
            central: self
                .central
                .as_ref()
                .map(|c| idx.iter().map(|&i| c[i].clone()).collect()),
            map_order: self.map_order,
            clamped: self.clamped,
            warnings: self.warnings.clone(),
        })
    }

    /// Physical-unit table: `kind,row,col,value` for mean and covariance.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,row,col,value\n");
        for (l, m) in self.labels.iter().zip(self.mean_physical()) {
            writeln!(out, "mean,{l},,{m}").unwrap();
        }
        if let Some(c) = self.covariance_physical() {
            for i in 0..c.nrows() {
                for j in 0..c.ncols() {
                    writeln!(out, "cov,{},{},{}", self.labels[i], self.labels[j], c[(i, j)]).unwrap();
                }
            }
        }
        if let Some(cm) = &self.central {
            for (i, row) in cm.iter().enumerate() {
                for (k, v) in row.iter().enumerate() {
                    let m = k + 3;
                    let phys = v * self.scales[i].powi(m as i32);
                    writeln!(out, "central{m},{},,{phys}", self.labels[i]).unwrap();
                }
            }
        }
        out
    }

    /// JSON with scaled and physical values plus metadata.
    pub fn to_json(&self) -> String {
        let phys_cov = self.covariance_physical().map(|c| {
            (0..c.nrows())
                .map(|i| (0..c.ncols()).map(|j| c[(i, j)]).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        });
        serde_json::to_string_pretty(&serde_json::json!({
            "scaled": self,
            "physical": {
                "mean": self.mean_physical(),
                "covariance": phys_cov,
            },
        }))
        .expect("serializable moments")
    }
}

type Terms = Vec<(Vec<u32>, f64)>;

fn terms_of(p: &TPoly) -> Terms {
    p.terms()
        .filter(|(_, c)| *c != 0.0)
        .map(|(a, c)| (a.exponents().to_vec(), c))
        .collect()
}

/// Raw moment table `table[var][n]`, `n ≤ max_n`.
struct MomentTable(Vec<Vec<f64>>);

impl MomentTable {
    fn new(src: &dyn RawMoments, max_n: u32) -> Self {
        MomentTable(
            (0..src.dim())
                .map(|v| (0..=max_n).map(|n| src.raw_moment(v, n)).collect())
                .collect(),
        )
    }

    fn expect(&self, alpha: &[u32]) -> f64 {
        alpha
            .iter()
            .enumerate()
            .map(|(v, &e)| self.0[v][e as usize])
            .product()
    }

    fn expect_sum(&self, t: &Terms) -> f64 {
        t.iter().map(|(a, c)| c * self.expect(a)).sum()
    }

    /// `E[p·q]` from pairwise term products, exact for polynomials.
    fn expect_product(&self, p: &Terms, q: &Terms, scratch: &mut Vec<u32>) -> f64 {
        let mut s = 0.0;
        for (a, ca) in p {
            for (b, cb) in q {
                scratch.clear();
                scratch.extend(a.iter().zip(b).map(|(x, y)| x + y));
                s += ca * cb * self.expect(scratch);
            }
        }
        s
    }
}

/// Exact sparse product (no truncation).
fn multiply(p: &Terms, q: &Terms) -> Terms {
    let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    for (a, ca) in p {
        for (b, cb) in q {
            let e: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
            *acc.entry(e).or_insert(0.0) += ca * cb;
        }
    }
    acc.into_iter().filter(|(_, c)| *c != 0.0).collect()
}

/// Moments of `map(δz)` for independent perturbations with the given raw
/// moments. Expectations of polynomials are exact, so covariance and
/// central moments use untruncated products.
pub fn propagate_with(
    map: &TaylorMap,
    src: &dyn RawMoments,
    up_to: MomentOrder,
) -> Result<MomentSet, UncertError> {
    if src.dim() != map.nvars() {
        return Err(UncertError::Dimension {
            expected: map.nvars(),
            found: src.dim(),
        });
    }
    let m = match up_to {
        MomentOrder::Mean => 1,
        MomentOrder::Covariance => 2,
        MomentOrder::Central(m) if (2..=4).contains(&m) => m,
        MomentOrder::Central(m) => return Err(UncertError::MomentOrder(m)),
    };
    let k = map.order() as u32;
    let table = MomentTable::new(src, k * m as u32);
    let terms: Vec<Terms> = map.components().iter().map(terms_of).collect();
    let mean: Vec<f64> = terms.iter().map(|t| table.expect_sum(t)).collect();
    let n = terms.len();
    let mut clamped = false;
    let mut covariance = None;
    if m >= 2 {
        let mut c = vec![vec![0.0; n]; n];
        let mut scratch = Vec::new();
        for i in 0..n {
            for j in i..n {
                let v = table.expect_product(&terms[i], &terms[j], &mut scratch) - mean[i] * mean[j];
                c[i][j] = v;
                c[j][i] = v;
            }
            let tol = 1e-12 * mean[i].abs().max(1.0).powi(2);
            if c[i][i] < 0.0 && c[i][i] >= -tol {
                c[i][i] = 0.0;
                clamped = true;
            }
        }
        covariance = Some(c);
    }
    let mut central = None;
    if m >= 3 {
        let mut out = Vec::with_capacity(n);
        let mut scratch = Vec::new();
        for (i, t) in terms.iter().enumerate() {
            let mut q = t.clone();
            let zero = vec![0u32; map.nvars()];
            match q.iter_mut().find(|(a, _)| *a == zero) {
                Some((_, c)) => *c -= mean[i],
                None => q.push((zero, -mean[i])),
            }
            let q2 = multiply(&q, &q);
            let mut row = vec![table.expect_product(&q2, &q, &mut scratch)];
            if m >= 4 {
                row.push(table.expect_product(&q2, &q2, &mut scratch));
            }
            out.push(row);
        }
        central = Some(out);
    }
    Ok(MomentSet {
        labels: map.component_names().to_vec(),
        scales: map.component_scales().to_vec(),
        mean,
        covariance,
        central,
        map_order: map.order(),
        clamped,
        warnings: Vec::new(),
    })
}

/// [`propagate_with`] for a uniform box whose labels must match the map's
/// variables. Warns when the box reaches beyond the per-variable
/// Cauchy–Hadamard radius of some component.
pub fn propagate_moments(
    map: &TaylorMap,
    bx: &UniformBox,
    up_to: MomentOrder,
) -> Result<MomentSet, UncertError> {
    if bx.len() != map.nvars() {
        return Err(UncertError::Dimension {
            expected: map.nvars(),
            found: bx.len(),
        });
    }
    for (i, (l, b)) in map.var_labels().iter().zip(bx.labels()).enumerate() {
        if l.name != *b {
            return Err(UncertError::LabelMismatch {
                index: i,
                expected: l.name.clone(),
                found: b.clone(),
            });
        }
    }
    let mut set = propagate_with(map, bx, up_to)?;
    for (v, &(a, b)) in bx.bounds().iter().enumerate() {
        let reach = a.abs().max(b.abs());
        let radius = map
            .components()
            .iter()
            .filter_map(|p| ch_radius(p, Restriction::Variable(v)).ok())
            .filter_map(|r| r.headline)
            .fold(f64::INFINITY, f64::min);
        if reach > radius {
            set.warnings.push(format!(
                "box extends to {reach:e} along `{}`, beyond the estimated radius {radius:e}",
                bx.labels()[v]
            ));
        }
    }
    if set.clamped {
        set.warnings
            .push("tiny negative variances were clamped to zero".to_string());
    }
    Ok(set)
}
