use std::fmt;
use std::fmt::Write as _;

use serde::Serialize;

use super::UncertError;
use crate::polyalg::{factorial, TPoly, TaylorMap};

/// Which coefficients enter a radius estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Restriction {
    /// All multi-indices.
    Full,
    /// Only powers of one variable.
    Variable(usize),
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Restriction::Full => f.write_str("the full expansion"),
            Restriction::Variable(i) => write!(f, "variable {i}"),
        }
    }
}

/// Per-order radius values `r_k` (`None` where the slice is zero or the
/// ratio is undefined) and the headline value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusEstimate {
    pub restriction: Restriction,
    /// `values[k - 1]` is `r_k`.
    pub values: Vec<Option<f64>>,
    /// `r_K` at the largest nonzero order `K ≥ 2`; `None` means unbounded
    /// (nothing above degree 1).
    pub headline: Option<f64>,
}

impl RadiusEstimate {
    pub fn order(&self) -> usize {
        self.values.len()
    }

    pub fn headline_or_inf(&self) -> f64 {
        self.headline.unwrap_or(f64::INFINITY)
    }

    /// The estimate as if the polynomial had been truncated at order `k`.
    pub fn truncated(&self, k: usize) -> RadiusEstimate {
        let values = self.values[..k.min(self.values.len())].to_vec();
        RadiusEstimate {
            restriction: self.restriction,
            headline: headline(&values),
            values,
        }
    }

    fn scaled(mut self, s: f64) -> RadiusEstimate {
        for v in self.values.iter_mut().flatten() {
            *v *= s;
        }
        if let Some(h) = self.headline.as_mut() {
            *h *= s;
        }
        self
    }
}

fn headline(values: &[Option<f64>]) -> Option<f64> {
    values
        .iter()
        .enumerate()
        .rev()
        .find(|(k, v)| k + 1 >= 2 && v.is_some())
        .and_then(|(_, v)| *v)
}

/// Largest admissible `|a_α|·w(α)` in each degree slice `1..=K`.
fn slice_maxima<W>(p: &TPoly, r: Restriction, weight: W) -> Vec<f64>
where
    W: Fn(&[u32], usize) -> f64,
{
    let mut m = vec![0.0; p.order()];
    for (alpha, c) in p.terms() {
        let k = alpha.degree() as usize;
        if k == 0 || c == 0.0 {
            continue;
        }
        if let Restriction::Variable(i) = r {
            if !alpha.is_supported_on(i) {
                continue;
            }
        }
        let v = c.abs() * weight(alpha.exponents(), k);
        if v > m[k - 1] {
            m[k - 1] = v;
        }
    }
    m
}

fn check_restriction(p: &TPoly, r: Restriction) -> Result<(), UncertError> {
    match r {
        Restriction::Variable(i) if i >= p.nvars() => Err(UncertError::Dimension {
            expected: p.nvars(),
            found: i + 1,
        }),
        _ => Ok(()),
    }
}

/// Cauchy–Hadamard estimate
/// `r_k = 1 / max_{|α|=k} |a_α (α!/k!)^{1/2}|^{1/k}`.
pub fn ch_radius(p: &TPoly, r: Restriction) -> Result<RadiusEstimate, UncertError> {
    check_restriction(p, r)?;
    let m = slice_maxima(p, r, |alpha, k| {
        let af: f64 = alpha.iter().map(|&e| factorial(e)).product();
        (af / factorial(k as u32)).sqrt()
    });
    if m.iter().all(|&v| v == 0.0) {
        return Err(UncertError::NoCoefficients(r.to_string()));
    }
    let values: Vec<Option<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, &v)| (v > 0.0).then(|| v.powf(-1.0 / (i + 1) as f64)))
        .collect();
    Ok(RadiusEstimate {
        restriction: r,
        headline: headline(&values),
        values,
    })
}

/// Ratio-test estimate `r_k = (‖slice_j‖_∞ / ‖slice_k‖_∞)^{1/(k−j)}`,
/// where `j < k` is the previous nonzero slice (the constant term counts).
/// Zero slices are reported as gaps.
pub fn ratio_radius(p: &TPoly, r: Restriction) -> Result<RadiusEstimate, UncertError> {
    check_restriction(p, r)?;
    let m = slice_maxima(p, r, |_, _| 1.0);
    let mut prev = (p.constant_term() != 0.0).then(|| (0usize, p.constant_term().abs()));
    let mut values = Vec::with_capacity(m.len());
    for (i, &mk) in m.iter().enumerate() {
        let k = i + 1;
        if mk == 0.0 {
            values.push(None);
            continue;
        }
        values.push(prev.map(|(j, mj)| (mj / mk).powf(1.0 / (k - j) as f64)));
        prev = Some((k, mk));
    }
    if values.iter().all(Option::is_none) {
        return Err(UncertError::TooFewSlices);
    }
    Ok(RadiusEstimate {
        restriction: r,
        headline: headline(&values),
        values,
    })
}

/// Radius sequence of one map component along one perturbation variable,
/// in physical units of that variable.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub component: String,
    pub variable: String,
    pub estimate: RadiusEstimate,
    /// Headline value after truncating at each order `1..=K`.
    pub headline_by_order: Vec<Option<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusSweep {
    pub order: usize,
    pub rows: Vec<SweepRow>,
}

impl RadiusSweep {
    /// Long-format table: one line per (component, variable, order).
    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "inf".to_string(), |x| x.to_string());
        let mut out = String::from("component,variable,order,r_k,headline\n");
        for row in &self.rows {
            for k in 1..=self.order {
                let rk = row.estimate.values[k - 1].map_or_else(String::new, |x| x.to_string());
                writeln!(
                    out,
                    "{},{},{k},{rk},{}",
                    row.component,
                    row.variable,
                    cell(row.headline_by_order[k - 1])
                )
                .unwrap();
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable sweep")
    }

    /// Smallest headline radius per variable over all components.
    pub fn min_by_variable(&self) -> Vec<(String, Option<f64>)> {
        let mut out: Vec<(String, Option<f64>)> = Vec::new();
        for row in &self.rows {
            let h = row.estimate.headline;
            match out.iter_mut().find(|(n, _)| *n == row.variable) {
                Some((_, cur)) => {
                    *cur = match (*cur, h) {
                        (Some(a), Some(b)) => Some(a.min(b)),
                        (a, b) => a.or(b),
                    }
                }
                None => out.push((row.variable.clone(), h)),
            }
        }
        out
    }
}

/// Cauchy–Hadamard radius of every component along every perturbation
/// variable, for truncation orders `1..=max_order`.
pub fn per_state_radius_sweep(map: &TaylorMap, max_order: usize) -> Result<RadiusSweep, UncertError> {
    if map.order() < max_order || max_order == 0 {
        return Err(UncertError::SweepOrder {
            map: map.order(),
            requested: max_order,
        });
    }
    let mut rows = Vec::new();
    for (c, p) in map.components().iter().enumerate() {
        for (v, label) in map.var_labels().iter().enumerate() {
            let est = match ch_radius(p, Restriction::Variable(v)) {
                Ok(e) => e.truncated(max_order).scaled(label.scale),
                // a component independent of this variable: unbounded
                Err(UncertError::NoCoefficients(_)) => RadiusEstimate {
                    restriction: Restriction::Variable(v),
                    values: vec![None; max_order],
                    headline: None,
                },
                Err(e) => return Err(e),
            };
            let headline_by_order = (1..=max_order).map(|k| est.truncated(k).headline).collect();
            rows.push(SweepRow {
                component: map.component_names()[c].clone(),
                variable: label.name.clone(),
                estimate: est,
                headline_by_order,
            });
        }
    }
    Ok(RadiusSweep {
        order: max_order,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::VarLabel;

    fn univariate(c: impl Fn(u32) -> f64, k: usize) -> TPoly {
        TPoly::from_terms(1, k, (0..=k as u32).map(|n| (vec![n], c(n)))).unwrap()
    }

    #[test]
    fn geometric_series() {
        let ones = ch_radius(&univariate(|_| 1.0, 8), Restriction::Full).unwrap();
        assert!(ones.values.iter().all(|v| *v == Some(1.0)));
        assert_eq!(ones.headline, Some(1.0));
        let twos = ch_radius(&univariate(|n| 2f64.powi(n as i32), 8), Restriction::Full).unwrap();
        for v in &twos.values {
            assert!((v.unwrap() - 0.5).abs() < 1e-15);
        }
        let ratio = ratio_radius(&univariate(|n| 2f64.powi(n as i32), 8), Restriction::Full).unwrap();
        assert!(ratio.values.iter().all(|v| *v == Some(0.5)));
    }

    #[test]
    fn exp_series_radius() {
        let p = univariate(|n| 1.0 / factorial(n as u32), 8);
        let r = ch_radius(&p, Restriction::Full).unwrap();
        assert!((r.headline.unwrap() - 40320f64.powf(0.125)).abs() < 1e-12);
        assert!((r.headline.unwrap() - 3.7644).abs() < 1e-3);
    }

    #[test]
    fn zero_slices_are_gaps() {
        // 1/(1 − x²)
        let p = univariate(|n| if n % 2 == 0 { 1.0 } else { 0.0 }, 8);
        let ch = ch_radius(&p, Restriction::Full).unwrap();
        assert_eq!(ch.values[0], None);
        assert_eq!(ch.values[1], Some(1.0));
        let ratio = ratio_radius(&p, Restriction::Full).unwrap();
        for (i, v) in ratio.values.iter().enumerate() {
            // odd orders are gaps, even orders compare with the slice two below
            assert_eq!(*v, if i % 2 == 0 { None } else { Some(1.0) }, "order {}", i + 1);
        }
        let lone = univariate(|n| if n == 3 { 1.0 } else { 0.0 }, 8);
        assert!(matches!(ratio_radius(&lone, Restriction::Full), Err(UncertError::TooFewSlices)));
        let zero = TPoly::constant(3.0, 1, 4).unwrap();
        assert!(matches!(ch_radius(&zero, Restriction::Full), Err(UncertError::NoCoefficients(_))));
        assert!(matches!(ratio_radius(&zero, Restriction::Full), Err(UncertError::TooFewSlices)));
    }

    #[test]
    fn multivariate_weights_and_restriction() {
        // (x + y)²: weights (α!/2!)^{1/2} are 1, 1/√2, 1, so the mixed term
        // 2·xy dominates with √2 and r₂ = 2^{-1/4}
        let p = TPoly::from_terms(2, 2, [(vec![2, 0], 1.0), (vec![1, 1], 2.0), (vec![0, 2], 1.0)]).unwrap();
        let full = ch_radius(&p, Restriction::Full).unwrap();
        assert!((full.values[1].unwrap() - 2f64.powf(-0.25)).abs() < 1e-15);
        let y = ch_radius(&p, Restriction::Variable(1)).unwrap();
        assert_eq!(y.values[1], Some(1.0));
        assert!(ch_radius(&p, Restriction::Variable(2)).is_err());
    }

    #[test]
    fn scale_covariance() {
        // p(x) with x = s·u gives coefficients a_n sⁿ, so the u-radius is r/s
        let s = 3.0f64;
        let p = univariate(|n| 1.0 / (n as f64 + 1.0), 6);
        let q = univariate(|n| s.powi(n as i32) / (n as f64 + 1.0), 6);
        let rp = ch_radius(&p, Restriction::Variable(0)).unwrap();
        let rq = ch_radius(&q, Restriction::Variable(0)).unwrap();
        for (a, b) in rp.values.iter().zip(&rq.values) {
            assert!((a.unwrap() / s - b.unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_sweep_is_unbounded() {
        let comps = vec![TPoly::variable(0, 2, 3).unwrap(), TPoly::variable(1, 2, 3).unwrap()];
        let map = TaylorMap::new(comps, vec![VarLabel::new("a", 2.0), VarLabel::new("b", 1.0)]).unwrap();
        let sweep = per_state_radius_sweep(&map, 3).unwrap();
        assert_eq!(sweep.rows.len(), 4);
        assert!(sweep.rows.iter().all(|r| r.estimate.headline.is_none()));
        // the degree-1 value is still reported, in physical units
        assert_eq!(sweep.rows[0].estimate.values[0], Some(2.0));
        assert!(per_state_radius_sweep(&map, 4).is_err());
        let csv = sweep.to_csv();
        assert!(csv.starts_with("component,variable,order,r_k,headline\n"));
        assert_eq!(csv.lines().count(), 1 + 4 * 3);
    }

    #[test]
    fn log_series_radius_tends_to_two() {
        // ln(1 + δ/2)
        let p = univariate(
            |n| if n == 0 { 0.0 } else { (-1f64).powi(n as i32 + 1) / (n as f64 * 2f64.powi(n as i32)) },
            8,
        );
        let r = ch_radius(&p, Restriction::Variable(0)).unwrap();
        for (k, v) in r.values.iter().enumerate() {
            let k = (k + 1) as f64;
            assert!((v.unwrap() - 2.0 * k.powf(1.0 / k)).abs() < 1e-12);
        }
    }
}
