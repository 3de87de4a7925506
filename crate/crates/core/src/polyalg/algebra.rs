//! The operation set shared by plain scalars and truncated polynomials, so
//! that network evaluation, dynamics and event functions are written once.

use super::series::AnalyticFn;
use super::{PolyError, TPoly};

pub trait Algebra: Clone + Send + Sync + std::fmt::Debug {
    /// Value at zero perturbation.
    fn constant_part(&self) -> f64;
    /// A constant of the same algebra (same shape for polynomials).
    fn lift(&self, c: f64) -> Self;
    fn add_ref(&self, other: &Self) -> Self;
    fn sub_ref(&self, other: &Self) -> Self;
    fn mul_ref(&self, other: &Self) -> Self;
    fn scale(&self, s: f64) -> Self;
    fn add_scalar(&self, s: f64) -> Self;
    fn neg(&self) -> Self {
        self.scale(-1.0)
    }
    /// `self += a·x`
    fn axpy(&mut self, a: f64, x: &Self);
    fn apply(&self, f: AnalyticFn) -> Result<Self, PolyError>;
    /// True when both values can be combined (always for scalars).
    fn same_algebra(&self, other: &Self) -> bool;
    /// Pushes the entries step-size control looks at: the value for
    /// scalars; the constant term and, when `first_order` is set, the
    /// first-order coefficients for jets.
    fn error_view(&self, first_order: bool, out: &mut Vec<f64>);

    fn sin(&self) -> Self {
        self.apply(AnalyticFn::Sin).expect("sin is entire")
    }
    fn cos(&self) -> Self {
        self.apply(AnalyticFn::Cos).expect("cos is entire")
    }
    fn exp(&self) -> Self {
        self.apply(AnalyticFn::Exp).expect("exp is entire")
    }
    fn tanh(&self) -> Self {
        self.apply(AnalyticFn::Tanh).expect("tanh is entire")
    }
    fn sigmoid(&self) -> Self {
        self.apply(AnalyticFn::Sigmoid).expect("sigmoid is entire")
    }
    fn softplus(&self) -> Self {
        self.apply(AnalyticFn::Softplus).expect("softplus is entire")
    }
    fn ln(&self) -> Result<Self, PolyError> {
        self.apply(AnalyticFn::Log)
    }
    fn sqrt(&self) -> Result<Self, PolyError> {
        self.apply(AnalyticFn::Sqrt)
    }
    fn recip(&self) -> Result<Self, PolyError> {
        self.apply(AnalyticFn::Recip)
    }
    fn powf(&self, p: f64) -> Result<Self, PolyError> {
        self.apply(AnalyticFn::Pow(p))
    }
    fn square(&self) -> Self {
        self.mul_ref(self)
    }
    fn div_ref(&self, other: &Self) -> Result<Self, PolyError> {
        Ok(self.mul_ref(&other.recip()?))
    }
}

impl Algebra for f64 {
    fn constant_part(&self) -> f64 {
        *self
    }
    fn lift(&self, c: f64) -> f64 {
        c
    }
    fn add_ref(&self, other: &f64) -> f64 {
        self + other
    }
    fn sub_ref(&self, other: &f64) -> f64 {
        self - other
    }
    fn mul_ref(&self, other: &f64) -> f64 {
        self * other
    }
    fn scale(&self, s: f64) -> f64 {
        self * s
    }
    fn add_scalar(&self, s: f64) -> f64 {
        self + s
    }
    fn neg(&self) -> f64 {
        -self
    }
    fn axpy(&mut self, a: f64, x: &f64) {
        *self += a * x;
    }
    fn apply(&self, f: AnalyticFn) -> Result<f64, PolyError> {
        f.check_domain(*self)?;
        Ok(f.eval(*self))
    }
    fn same_algebra(&self, _other: &f64) -> bool {
        true
    }
    fn error_view(&self, _first_order: bool, out: &mut Vec<f64>) {
        out.push(*self);
    }
    fn div_ref(&self, other: &f64) -> Result<f64, PolyError> {
        if *other == 0.0 {
            return Err(PolyError::Domain {
                function: "recip",
                value: 0.0,
            });
        }
        Ok(self / other)
    }
}

impl Algebra for TPoly {
    fn constant_part(&self) -> f64 {
        self.constant_term()
    }
    fn lift(&self, c: f64) -> TPoly {
        TPoly::lift(self, c)
    }
    fn add_ref(&self, other: &TPoly) -> TPoly {
        self + other
    }
    fn sub_ref(&self, other: &TPoly) -> TPoly {
        self - other
    }
    fn mul_ref(&self, other: &TPoly) -> TPoly {
        self * other
    }
    fn scale(&self, s: f64) -> TPoly {
        TPoly::scale(self, s)
    }
    fn add_scalar(&self, s: f64) -> TPoly {
        TPoly::add_scalar(self, s)
    }
    fn axpy(&mut self, a: f64, x: &TPoly) {
        TPoly::axpy(self, a, x)
    }
    fn apply(&self, f: AnalyticFn) -> Result<TPoly, PolyError> {
        TPoly::apply(self, f)
    }
    fn same_algebra(&self, other: &TPoly) -> bool {
        self.same_shape(other)
    }
    fn error_view(&self, first_order: bool, out: &mut Vec<f64>) {
        let c = self.coefficients();
        if first_order {
            out.extend_from_slice(&c[..=self.nvars().min(c.len() - 1)]);
        } else {
            out.push(c[0]);
        }
    }
}
