//! Univariate Taylor coefficients `c_n = f⁽ⁿ⁾(a₀)/n!` of the elementary
//! functions, used to compose `f` with a polynomial argument.
//!
//! `c_0` is always produced by the scalar function in [`scalar`] so that the
//! constant term of `f(a)` matches the scalar evaluation bit-for-bit.

use super::PolyError;

/// Elementary functions that can be applied to a truncated polynomial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyticFn {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Recip,
    Pow(f64),
    Tanh,
    Sigmoid,
    Softplus,
}

impl AnalyticFn {
    pub fn name(&self) -> &'static str {
        match self {
            AnalyticFn::Sin => "sin",
            AnalyticFn::Cos => "cos",
            AnalyticFn::Exp => "exp",
            AnalyticFn::Log => "log",
            AnalyticFn::Sqrt => "sqrt",
            AnalyticFn::Recip => "recip",
            AnalyticFn::Pow(_) => "pow",
            AnalyticFn::Tanh => "tanh",
            AnalyticFn::Sigmoid => "sigmoid",
            AnalyticFn::Softplus => "softplus",
        }
    }

    /// Checks that `a0` lies in the domain where the series exists.
    pub fn check_domain(&self, a0: f64) -> Result<(), PolyError> {
        let ok = match self {
            AnalyticFn::Log | AnalyticFn::Sqrt => a0 > 0.0,
            AnalyticFn::Recip => a0 != 0.0,
            AnalyticFn::Pow(p) => a0 > 0.0 || (a0 != 0.0 && p.fract() == 0.0),
            _ => true,
        };
        if ok && a0.is_finite() {
            Ok(())
        } else {
            Err(PolyError::Domain {
                function: self.name(),
                value: a0,
            })
        }
    }

    /// Scalar evaluation, shared with the `f64` algebra.
    // kept out of line so the jet constant term and the scalar value use
    // the same libm call (inlined next to sin_cos it may be fused)
    #[inline(never)]
    pub fn eval(&self, a: f64) -> f64 {
        match *self {
            AnalyticFn::Sin => a.sin(),
            AnalyticFn::Cos => a.cos(),
            AnalyticFn::Exp => a.exp(),
            AnalyticFn::Log => a.ln(),
            AnalyticFn::Sqrt => a.sqrt(),
            AnalyticFn::Recip => 1.0 / a,
            AnalyticFn::Pow(p) => {
                if p.fract() == 0.0 && p.abs() < 1024.0 {
                    a.powi(p as i32)
                } else {
                    a.powf(p)
                }
            }
            AnalyticFn::Tanh => a.tanh(),
            AnalyticFn::Sigmoid => scalar::sigmoid(a),
            AnalyticFn::Softplus => scalar::softplus(a),
        }
    }

    /// Coefficients `c_0..=c_order` of `f(a0 + x)`.
    pub fn coefficients(&self, a0: f64, order: usize) -> Result<Vec<f64>, PolyError> {
        self.check_domain(a0)?;
        let mut c = vec![0.0; order + 1];
        c[0] = self.eval(a0);
        match *self {
            AnalyticFn::Sin | AnalyticFn::Cos => {
                let (s, co) = a0.sin_cos();
                // derivative cycle starting at sin: s, c, -s, -c
                let cycle = match self {
                    AnalyticFn::Sin => [s, co, -s, -co],
                    _ => [co, -s, -co, s],
                };
                let mut inv_fact = 1.0;
                for (n, cn) in c.iter_mut().enumerate().skip(1) {
                    inv_fact /= n as f64;
                    *cn = cycle[n % 4] * inv_fact;
                }
            }
            AnalyticFn::Exp => {
                for n in 1..=order {
                    c[n] = c[n - 1] / n as f64;
                }
            }
            AnalyticFn::Log => {
                let mut p = 1.0;
                for (n, cn) in c.iter_mut().enumerate().skip(1) {
                    p /= a0;
                    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                    *cn = sign * p / n as f64;
                }
            }
            AnalyticFn::Recip => {
                for n in 1..=order {
                    c[n] = -c[n - 1] / a0;
                }
            }
            AnalyticFn::Sqrt => binomial_series(&mut c, 0.5, a0),
            AnalyticFn::Pow(p) => binomial_series(&mut c, p, a0),
            AnalyticFn::Tanh => {
                // tanh' = 1 - tanh²
                for n in 1..=order {
                    let sq: f64 = (0..n).map(|j| c[j] * c[n - 1 - j]).sum();
                    let one = if n == 1 { 1.0 } else { 0.0 };
                    c[n] = (one - sq) / n as f64;
                }
            }
            AnalyticFn::Sigmoid => {
                // σ' = σ - σ²
                for n in 1..=order {
                    let sq: f64 = (0..n).map(|j| c[j] * c[n - 1 - j]).sum();
                    c[n] = (c[n - 1] - sq) / n as f64;
                }
            }
            AnalyticFn::Softplus => {
                // softplus' = σ
                let s = AnalyticFn::Sigmoid.coefficients(a0, order.saturating_sub(1))?;
                for n in 1..=order {
                    c[n] = s[n - 1] / n as f64;
                }
            }
        }
        Ok(c)
    }
}

/// `(a0 + x)^p = c_0 Σ binom(p, n) (x/a0)^n`, with `c_0` already set.
fn binomial_series(c: &mut [f64], p: f64, a0: f64) {
    for n in 1..c.len() {
        c[n] = c[n - 1] * (p - (n - 1) as f64) / (n as f64 * a0);
    }
}

/// Numerically stable scalar forms.
pub mod scalar {
    pub fn sigmoid(a: f64) -> f64 {
        if a >= 0.0 {
            1.0 / (1.0 + (-a).exp())
        } else {
            let e = a.exp();
            e / (1.0 + e)
        }
    }

    pub fn softplus(a: f64) -> f64 {
        a.max(0.0) + (-a.abs()).exp().ln_1p()
    }
}
