use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use super::layout::{layout, Layout, MultiIndex};
use super::series::AnalyticFn;
use super::PolyError;

/// Truncated multivariate Taylor polynomial with `f64` coefficients.
///
/// Coefficients are stored densely in the graded order of the shared
/// layout; absent monomials are zero. Operator impls (`+`, `*`, …) panic
/// on mismatched `(nvars, order)`; the `checked_*` methods return errors.
#[derive(Clone)]
pub struct TPoly {
    layout: Arc<Layout>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for TPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TPoly(n={}, k={}; ", self.nvars(), self.order())?;
        let mut first = true;
        for (alpha, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c:e}·{alpha:?}")?;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

impl PartialEq for TPoly {
    fn eq(&self, other: &Self) -> bool {
        self.same_shape(other) && self.coeffs == other.coeffs
    }
}

impl TPoly {
    pub fn zero(nvars: usize, order: usize) -> Result<TPoly, PolyError> {
        check_order(order)?;
        let layout = layout(nvars, order)?;
        let coeffs = vec![0.0; layout.len()];
        Ok(TPoly { layout, coeffs })
    }

    pub fn constant(c: f64, nvars: usize, order: usize) -> Result<TPoly, PolyError> {
        let mut p = TPoly::zero(nvars, order)?;
        p.coeffs[0] = c;
        Ok(p)
    }

    /// The coordinate polynomial `x_i`.
    pub fn variable(i: usize, nvars: usize, order: usize) -> Result<TPoly, PolyError> {
        if i >= nvars {
            return Err(PolyError::VariableOutOfRange { index: i, nvars });
        }
        let mut p = TPoly::zero(nvars, order)?;
        p.coeffs[1 + i] = 1.0;
        Ok(p)
    }

    /// `c + x_i`, the usual seed of a perturbation variable.
    pub fn seeded(c: f64, i: usize, nvars: usize, order: usize) -> Result<TPoly, PolyError> {
        let mut p = TPoly::variable(i, nvars, order)?;
        p.coeffs[0] = c;
        Ok(p)
    }

    /// Builds a polynomial from explicit terms; repeated indices accumulate.
    pub fn from_terms<I, A>(nvars: usize, order: usize, terms: I) -> Result<TPoly, PolyError>
    where
        I: IntoIterator<Item = (A, f64)>,
        A: Into<MultiIndex>,
    {
        let mut p = TPoly::zero(nvars, order)?;
        for (alpha, c) in terms {
            let alpha: MultiIndex = alpha.into();
            if alpha.nvars() != nvars {
                return Err(PolyError::ArityMismatch {
                    expected: nvars,
                    found: alpha.nvars(),
                });
            }
            if alpha.degree() as usize > order {
                return Err(PolyError::DegreeOutOfRange {
                    degree: alpha.degree() as usize,
                    order,
                });
            }
            let i = p.layout.find_u32(alpha.exponents()).expect("index within order");
            p.coeffs[i] += c;
        }
        Ok(p)
    }

    /// Same shape as `self`, constant value `c`.
    pub fn lift(&self, c: f64) -> TPoly {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = c;
        TPoly {
            layout: self.layout.clone(),
            coeffs,
        }
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars()
    }

    pub fn order(&self) -> usize {
        self.layout.order()
    }

    pub fn same_shape(&self, other: &TPoly) -> bool {
        Arc::ptr_eq(&self.layout, &other.layout)
    }

    pub fn constant_term(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn set_constant_term(&mut self, c: f64) {
        self.coeffs[0] = c;
    }

    /// Coefficient `a_α`; zero for indices beyond the truncation order.
    pub fn coeff(&self, alpha: &[u32]) -> f64 {
        self.layout
            .find_u32(alpha)
            .map(|i| self.coeffs[i])
            .unwrap_or(0.0)
    }

    /// Raw dense coefficients in canonical graded order.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn monomial(&self, i: usize) -> MultiIndex {
        MultiIndex::new(self.layout.exps(i).iter().map(|&e| e as u32).collect())
    }

    /// Nonzero terms in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(i, &c)| (self.monomial(i), c))
    }

    /// All stored coefficients with `|α| = k`, in canonical order.
    pub fn degree_slice(&self, k: usize) -> Result<Vec<(MultiIndex, f64)>, PolyError> {
        if k > self.order() {
            return Err(PolyError::DegreeOutOfRange {
                degree: k,
                order: self.order(),
            });
        }
        Ok(self
            .layout
            .degree_range(k)
            .filter(|&i| self.coeffs[i] != 0.0)
            .map(|i| (self.monomial(i), self.coeffs[i]))
            .collect())
    }

    /// Largest coefficient magnitude over the monomials of degree `k`.
    pub fn degree_max_abs(&self, k: usize) -> f64 {
        if k > self.order() {
            return 0.0;
        }
        self.layout
            .degree_range(k)
            .map(|i| self.coeffs[i].abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Highest degree carrying a nonzero coefficient (0 for constants and zero).
    pub fn effective_degree(&self) -> usize {
        (0..=self.order())
            .rev()
            .find(|&d| self.layout.degree_range(d).any(|i| self.coeffs[i] != 0.0))
            .unwrap_or(0)
    }

    fn check_shape(&self, other: &TPoly) -> Result<(), PolyError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(PolyError::ShapeMismatch {
                left: (self.nvars(), self.order()),
                right: (other.nvars(), other.order()),
            })
        }
    }

    pub fn checked_add(&self, other: &TPoly) -> Result<TPoly, PolyError> {
        self.check_shape(other)?;
        let mut out = self.clone();
        out.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a += b);
        Ok(out)
    }

    pub fn checked_sub(&self, other: &TPoly) -> Result<TPoly, PolyError> {
        self.check_shape(other)?;
        let mut out = self.clone();
        out.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a -= b);
        Ok(out)
    }

    /// Truncated product.
    pub fn checked_mul(&self, other: &TPoly) -> Result<TPoly, PolyError> {
        self.check_shape(other)?;
        let mut out = vec![0.0; self.coeffs.len()];
        let table = self.layout.mul_table();
        for (i, &ai) in self.coeffs.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            let row = &table[i];
            for (&t, &bj) in row.iter().zip(&other.coeffs[..row.len()]) {
                out[t as usize] += ai * bj;
            }
        }
        Ok(TPoly {
            layout: self.layout.clone(),
            coeffs: out,
        })
    }

    pub fn scale(&self, s: f64) -> TPoly {
        TPoly {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> TPoly {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// `self += alpha · x`
    pub fn axpy(&mut self, alpha: f64, x: &TPoly) {
        assert!(self.same_shape(x), "TPoly shape mismatch in axpy");
        self.coeffs
            .iter_mut()
            .zip(&x.coeffs)
            .for_each(|(a, b)| *a += alpha * b);
    }

    /// Order-k expansion of `f ∘ self` about the constant term.
    pub fn apply(&self, f: AnalyticFn) -> Result<TPoly, PolyError> {
        let a0 = self.coeffs[0];
        let c = f.coefficients(a0, self.order())?;
        Ok(self.compose_series(&c))
    }

    /// Horner evaluation of `Σ c_n (self - a0)^n`.
    pub(crate) fn compose_series(&self, c: &[f64]) -> TPoly {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let k = c.len() - 1;
        let mut acc = self.lift(c[k]);
        for n in (0..k).rev() {
            acc = &acc * &h;
            acc.coeffs[0] += c[n];
        }
        acc
    }

    pub fn sin(&self) -> TPoly {
        self.apply(AnalyticFn::Sin).expect("sin is entire")
    }

    pub fn cos(&self) -> TPoly {
        self.apply(AnalyticFn::Cos).expect("cos is entire")
    }

    pub fn exp(&self) -> TPoly {
        self.apply(AnalyticFn::Exp).expect("exp is entire")
    }

    pub fn recip(&self) -> Result<TPoly, PolyError> {
        self.apply(AnalyticFn::Recip)
    }

    pub fn sqrt(&self) -> Result<TPoly, PolyError> {
        self.apply(AnalyticFn::Sqrt)
    }

    /// `self^n` by repeated squaring (no domain restriction).
    pub fn powi(&self, n: u32) -> TPoly {
        let mut result = self.lift(1.0);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Evaluates `Σ a_α · point^α`.
    pub fn eval(&self, point: &[f64]) -> Result<f64, PolyError> {
        if point.len() != self.nvars() {
            return Err(PolyError::ArityMismatch {
                expected: self.nvars(),
                found: point.len(),
            });
        }
        let n = self.nvars();
        let k = self.order();
        // powers[v][e] = point[v]^e
        let powers: Vec<Vec<f64>> = point
            .iter()
            .map(|&x| {
                let mut p = Vec::with_capacity(k + 1);
                let mut acc = 1.0;
                for _ in 0..=k {
                    p.push(acc);
                    acc *= x;
                }
                p
            })
            .collect();
        let mut sum = 0.0;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let e = self.layout.exps(i);
            let mut m = c;
            for v in 0..n {
                m *= powers[v][e[v] as usize];
            }
            sum += m;
        }
        Ok(sum)
    }

    /// Partial derivative `∂/∂x_var`; the top-degree slice of the result is zero.
    pub fn derivative(&self, var: usize) -> Result<TPoly, PolyError> {
        if var >= self.nvars() {
            return Err(PolyError::VariableOutOfRange {
                index: var,
                nvars: self.nvars(),
            });
        }
        let mut out = self.lift(0.0);
        let mut scratch: Vec<u8> = vec![0; self.nvars()];
        for (i, &c) in self.coeffs.iter().enumerate() {
            let e = self.layout.exps(i);
            if c == 0.0 || e[var] == 0 {
                continue;
            }
            scratch.copy_from_slice(e);
            scratch[var] -= 1;
            let j = self.layout.find(&scratch).expect("lower monomial exists");
            out.coeffs[j] += c * e[var] as f64;
        }
        Ok(out)
    }

    /// Antiderivative in `x_var` vanishing at `x_var = 0`, truncated at the order.
    pub fn antiderivative(&self, var: usize) -> Result<TPoly, PolyError> {
        if var >= self.nvars() {
            return Err(PolyError::VariableOutOfRange {
                index: var,
                nvars: self.nvars(),
            });
        }
        let mut out = self.lift(0.0);
        let mut scratch: Vec<u8> = vec![0; self.nvars()];
        let k = self.order();
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 || self.layout.degree(i) == k {
                continue;
            }
            scratch.copy_from_slice(self.layout.exps(i));
            scratch[var] += 1;
            let j = self.layout.find(&scratch).expect("higher monomial exists");
            out.coeffs[j] += c / scratch[var] as f64;
        }
        Ok(out)
    }

    /// Drops every term of degree above `order` and re-expresses in the smaller layout.
    pub fn truncate(&self, order: usize) -> Result<TPoly, PolyError> {
        if order > self.order() {
            return Err(PolyError::DegreeOutOfRange {
                degree: order,
                order: self.order(),
            });
        }
        check_order(order)?;
        let target = layout(self.nvars(), order)?;
        let n = target.len();
        Ok(TPoly {
            layout: target,
            coeffs: self.coeffs[..n].to_vec(),
        })
    }

    /// Re-expresses the polynomial in `new_nvars ≥ nvars` variables; the
    /// original variables keep their indices.
    pub fn extend_vars(&self, new_nvars: usize) -> Result<TPoly, PolyError> {
        if new_nvars < self.nvars() {
            return Err(PolyError::ArityMismatch {
                expected: self.nvars(),
                found: new_nvars,
            });
        }
        let mut out = TPoly::zero(new_nvars, self.order())?;
        let mut scratch = vec![0u8; new_nvars];
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            scratch[..self.nvars()].copy_from_slice(self.layout.exps(i));
            let j = out.layout.find(&scratch).expect("embedded monomial");
            out.coeffs[j] = c;
        }
        Ok(out)
    }

    /// Splits by the exponent of the last variable: `self = Σ_m P_m(x') x_last^m`,
    /// with each `P_m` expressed in the first `nvars - 1` variables.
    fn split_last(&self) -> Result<Vec<TPoly>, PolyError> {
        let n = self.nvars();
        let k = self.order();
        let mut parts: Vec<TPoly> = (0..=k)
            .map(|_| TPoly::zero(n - 1, k))
            .collect::<Result<_, _>>()?;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let e = self.layout.exps(i);
            let m = e[n - 1] as usize;
            let j = parts[m].layout.find(&e[..n - 1]).expect("projected monomial");
            parts[m].coeffs[j] = c;
        }
        Ok(parts)
    }

    /// Substitutes a polynomial in the first `nvars - 1` variables for the
    /// last variable: `self(x', t(x'))`, by Horner in `t`.
    pub fn substitute_last(&self, t: &TPoly) -> Result<TPoly, PolyError> {
        let n = self.nvars();
        if n < 2 || t.nvars() != n - 1 || t.order() != self.order() {
            return Err(PolyError::ArityMismatch {
                expected: n.saturating_sub(1),
                found: t.nvars(),
            });
        }
        let parts = self.split_last()?;
        let mut acc = parts[self.order()].clone();
        for m in (0..self.order()).rev() {
            acc = &(&acc * t) + &parts[m];
        }
        Ok(acc)
    }

    /// Order-k truncation of `self(inner₁, …, innerₙ)`.
    pub fn compose(&self, inner: &[TPoly]) -> Result<TPoly, PolyError> {
        if inner.len() != self.nvars() {
            return Err(PolyError::ArityMismatch {
                expected: self.nvars(),
                found: inner.len(),
            });
        }
        let first = &inner[0];
        for p in inner {
            first.check_shape(p)?;
        }
        // monomial values built along a parent chain α = parent(α) + e_v
        let n = self.nvars();
        let mut values: Vec<Option<TPoly>> = vec![None; self.coeffs.len()];
        values[0] = Some(first.lift(1.0));
        let mut result = first.lift(0.0);
        let mut scratch = vec![0u8; n];
        let needed = self.needed_monomials();
        for i in 0..self.coeffs.len() {
            if !needed[i] {
                continue;
            }
            if i > 0 {
                let e = self.layout.exps(i);
                let v = e.iter().rposition(|&x| x > 0).expect("nonzero index");
                scratch.copy_from_slice(e);
                scratch[v] -= 1;
                let parent = self.layout.find(&scratch).expect("parent monomial");
                let pv = values[parent].as_ref().expect("parent computed first");
                values[i] = Some(pv * &inner[v]);
            }
            if self.coeffs[i] != 0.0 {
                result.axpy(self.coeffs[i], values[i].as_ref().unwrap());
            }
        }
        Ok(result)
    }

    /// Marks the nonzero monomials and every ancestor on their parent chain.
    fn needed_monomials(&self) -> Vec<bool> {
        let n = self.nvars();
        let mut needed = vec![false; self.coeffs.len()];
        let mut scratch = vec![0u8; n];
        for i in (0..self.coeffs.len()).rev() {
            if self.coeffs[i] != 0.0 || needed[i] {
                needed[i] = true;
                if i > 0 {
                    let e = self.layout.exps(i);
                    let v = e.iter().rposition(|&x| x > 0).unwrap();
                    scratch.copy_from_slice(e);
                    scratch[v] -= 1;
                    needed[self.layout.find(&scratch).unwrap()] = true;
                }
            }
        }
        needed[0] = true;
        needed
    }
}

fn check_order(order: usize) -> Result<(), PolyError> {
    if order == 0 {
        Err(PolyError::InvalidOrder(order))
    } else {
        Ok(())
    }
}

impl<'a> Add<&'a TPoly> for &'a TPoly {
    type Output = TPoly;
    fn add(self, rhs: &'a TPoly) -> TPoly {
        self.checked_add(rhs).expect("TPoly shape mismatch")
    }
}

impl<'a> Sub<&'a TPoly> for &'a TPoly {
    type Output = TPoly;
    fn sub(self, rhs: &'a TPoly) -> TPoly {
        self.checked_sub(rhs).expect("TPoly shape mismatch")
    }
}

impl<'a> Mul<&'a TPoly> for &'a TPoly {
    type Output = TPoly;
    fn mul(self, rhs: &'a TPoly) -> TPoly {
        self.checked_mul(rhs).expect("TPoly shape mismatch")
    }
}

impl Add for TPoly {
    type Output = TPoly;
    fn add(mut self, rhs: TPoly) -> TPoly {
        self += &rhs;
        self
    }
}

impl Sub for TPoly {
    type Output = TPoly;
    fn sub(mut self, rhs: TPoly) -> TPoly {
        self -= &rhs;
        self
    }
}

impl Mul for TPoly {
    type Output = TPoly;
    fn mul(self, rhs: TPoly) -> TPoly {
        &self * &rhs
    }
}

impl AddAssign<&TPoly> for TPoly {
    fn add_assign(&mut self, rhs: &TPoly) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&TPoly> for TPoly {
    fn sub_assign(&mut self, rhs: &TPoly) {
        self.axpy(-1.0, rhs);
    }
}

impl Neg for TPoly {
    type Output = TPoly;
    fn neg(mut self) -> TPoly {
        self.coeffs.iter_mut().for_each(|c| *c = -*c);
        self
    }
}

impl Add<f64> for TPoly {
    type Output = TPoly;
    fn add(mut self, rhs: f64) -> TPoly {
        self.coeffs[0] += rhs;
        self
    }
}

impl Sub<f64> for TPoly {
    type Output = TPoly;
    fn sub(mut self, rhs: f64) -> TPoly {
        self.coeffs[0] -= rhs;
        self
    }
}

impl Mul<f64> for TPoly {
    type Output = TPoly;
    fn mul(mut self, rhs: f64) -> TPoly {
        self.coeffs.iter_mut().for_each(|c| *c *= rhs);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn constructors() {
        let c = TPoly::constant(3.0, 2, 4).unwrap();
        assert_eq!(c.terms().collect::<Vec<_>>(), vec![(mi(&[0, 0]), 3.0)]);
        let x = TPoly::variable(0, 2, 4).unwrap();
        assert_eq!(x.terms().collect::<Vec<_>>(), vec![(mi(&[1, 0]), 1.0)]);
        assert!(TPoly::variable(2, 2, 4).is_err());
        assert!(TPoly::zero(2, 0).is_err());
    }

    #[test]
    fn truncated_products() {
        let x = TPoly::variable(0, 1, 2).unwrap();
        let p = (x.clone() + 1.0) * (-x + 1.0);
        assert_eq!(p.coefficients(), &[1.0, 0.0, -1.0]);

        let x1 = TPoly::variable(0, 1, 1).unwrap();
        assert_eq!((&x1 * &x1).max_abs(), 0.0);

        let x = TPoly::variable(0, 2, 2).unwrap();
        let y = TPoly::variable(1, 2, 2).unwrap();
        let s = (&x + &y) + 1.0;
        let sq = &s * &s;
        // 1, x, y, x², xy, y²
        assert_eq!(sq.coefficients(), &[1.0, 2.0, 2.0, 1.0, 2.0, 1.0]);
    }

    #[test]
    fn mismatched_shapes_are_errors() {
        let a = TPoly::variable(0, 2, 2).unwrap();
        let b = TPoly::variable(0, 2, 3).unwrap();
        assert!(a.checked_add(&b).is_err());
        assert!(a.checked_mul(&b).is_err());
    }

    #[test]
    fn analytic_examples() {
        let x = TPoly::variable(0, 1, 3).unwrap();
        let s = x.sin();
        assert_relative_eq!(s.coeff(&[1]), 1.0);
        assert_relative_eq!(s.coeff(&[3]), -1.0 / 6.0);
        assert_eq!(s.coeff(&[2]), 0.0);
        let r = (x.clone() + 1.0).recip().unwrap();
        assert_eq!(r.coefficients(), &[1.0, -1.0, 1.0, -1.0]);
        let g = x.apply(AnalyticFn::Sigmoid).unwrap();
        assert_eq!(g.coefficients(), &[0.5, 0.25, 0.0, -1.0 / 48.0]);
        assert!(x.apply(AnalyticFn::Log).is_err());
    }

    #[test]
    fn compose_examples() {
        let x = TPoly::variable(0, 2, 2).unwrap();
        let y = TPoly::variable(1, 2, 2).unwrap();
        let outer = TPoly::from_terms(1, 2, [(mi(&[2]), 1.0)]).unwrap();
        let r = outer.compose(&[&x + &y]).unwrap();
        assert_eq!(r.coefficients(), &[0.0, 0.0, 0.0, 1.0, 2.0, 1.0]);

        let outer = TPoly::from_terms(2, 2, [(mi(&[0, 0]), 5.0), (mi(&[1, 1]), 2.0)]).unwrap();
        let z = x.lift(0.0);
        assert_eq!(outer.compose(&[z.clone(), z]).unwrap().coefficients()[0], 5.0);

        let d = TPoly::variable(0, 1, 2).unwrap();
        let t = d.scale(0.5) - (&d * &d).scale(0.125);
        let outer = TPoly::from_terms(1, 2, [(mi(&[0]), 1.0), (mi(&[1]), 1.0), (mi(&[2]), 1.0)])
            .unwrap();
        let r = outer.compose(&[t]).unwrap();
        assert_eq!(r.coefficients(), &[1.0, 0.5, 0.125]);
    }

    #[test]
    fn eval_and_slices() {
        let x = TPoly::variable(0, 1, 2).unwrap();
        let p = -(&x * &x) + 1.0;
        assert_eq!(p.eval(&[0.0]).unwrap(), 1.0);
        assert_eq!(p.eval(&[0.5]).unwrap(), 0.75);
        assert!(p.eval(&[0.5, 1.0]).is_err());

        let q = TPoly::from_terms(1, 2, [(mi(&[0]), 1.0), (mi(&[1]), 2.0), (mi(&[2]), 3.0)])
            .unwrap();
        assert_eq!(q.degree_slice(1).unwrap(), vec![(mi(&[1]), 2.0)]);
        assert_eq!(q.degree_slice(0).unwrap(), vec![(mi(&[0]), 1.0)]);
        assert!(q.degree_slice(3).is_err());

        let ones = TPoly::from_terms(
            3,
            2,
            (0..10).map(|i| (TPoly::zero(3, 2).unwrap().monomial(i), 1.0)),
        )
        .unwrap();
        assert_eq!(ones.degree_slice(2).unwrap().len(), 6);
    }

    #[test]
    fn calculus_and_substitution() {
        let x = TPoly::variable(0, 2, 3).unwrap();
        let t = TPoly::variable(1, 2, 3).unwrap();
        // f = x·t + t²
        let f = &(&x * &t) + &(&t * &t);
        let ft = f.derivative(1).unwrap();
        assert_eq!(ft.coeff(&[1, 0]), 1.0);
        assert_eq!(ft.coeff(&[0, 1]), 2.0);
        let back = ft.antiderivative(1).unwrap();
        assert_eq!(back, f);

        // substitute t = 2x (as a one-variable polynomial)
        let u = TPoly::variable(0, 1, 3).unwrap().scale(2.0);
        let g = f.substitute_last(&u).unwrap();
        assert_eq!(g.coefficients(), &[0.0, 0.0, 6.0, 0.0]);
    }

    #[test]
    fn truncate_and_extend() {
        let x = TPoly::variable(0, 1, 4).unwrap();
        let e = x.exp();
        let e2 = e.truncate(2).unwrap();
        assert_eq!(e2.coefficients(), &[1.0, 1.0, 0.5]);
        let ext = e2.extend_vars(2).unwrap();
        assert_eq!(ext.coeff(&[2, 0]), 0.5);
        assert_eq!(ext.coeff(&[0, 1]), 0.0);
    }
}
