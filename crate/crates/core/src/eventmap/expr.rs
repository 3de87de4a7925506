use serde::{Deserialize, Serialize};

use super::EventError;
use crate::polyalg::Algebra;

/// A small expression tree over the state vector, evaluated over any
/// algebra. Serialized externally tagged, e.g.
/// `{"add": [{"state": 0}, {"const": -1.0}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventExpr {
    Const(f64),
    State(usize),
    Add(Vec<EventExpr>),
    Mul(Vec<EventExpr>),
    Neg(Box<EventExpr>),
    Square(Box<EventExpr>),
    Sin(Box<EventExpr>),
    Cos(Box<EventExpr>),
    Exp(Box<EventExpr>),
}

impl EventExpr {
    /// `state[i] − c`
    pub fn state_minus(i: usize, c: f64) -> EventExpr {
        EventExpr::Add(vec![EventExpr::State(i), EventExpr::Const(-c)])
    }

    /// The same expression written for physical states, evaluated on scaled
    /// ones: every `state[i]` becomes `units[i]·state[i]`.
    pub fn in_scaled_units(&self, units: &[f64]) -> Result<EventExpr, EventError> {
        let rec = |e: &EventExpr| e.in_scaled_units(units);
        let boxed = |e: &EventExpr| rec(e).map(Box::new);
        Ok(match self {
            EventExpr::Const(c) => EventExpr::Const(*c),
            EventExpr::State(i) => {
                let u = *units.get(*i).ok_or(EventError::Dimension {
                    index: *i,
                    len: units.len(),
                })?;
                if u == 1.0 {
                    EventExpr::State(*i)
                } else {
                    EventExpr::Mul(vec![EventExpr::Const(u), EventExpr::State(*i)])
                }
            }
            EventExpr::Add(v) => EventExpr::Add(v.iter().map(rec).collect::<Result<_, _>>()?),
            EventExpr::Mul(v) => EventExpr::Mul(v.iter().map(rec).collect::<Result<_, _>>()?),
            EventExpr::Neg(e) => EventExpr::Neg(boxed(e)?),
            EventExpr::Square(e) => EventExpr::Square(boxed(e)?),
            EventExpr::Sin(e) => EventExpr::Sin(boxed(e)?),
            EventExpr::Cos(e) => EventExpr::Cos(boxed(e)?),
            EventExpr::Exp(e) => EventExpr::Exp(boxed(e)?),
        })
    }

    pub fn eval<A: Algebra>(&self, y: &[A]) -> Result<A, EventError> {
        let first = y.first().ok_or(EventError::Dimension { index: 0, len: 0 })?;
        self.eval_with(y, first)
    }

    fn eval_with<A: Algebra>(&self, y: &[A], like: &A) -> Result<A, EventError> {
        Ok(match self {
            EventExpr::Const(c) => like.lift(*c),
            EventExpr::State(i) => y
                .get(*i)
                .cloned()
                .ok_or(EventError::Dimension {
                    index: *i,
                    len: y.len(),
                })?,
            EventExpr::Add(v) => {
                let mut acc = like.lift(0.0);
                for e in v {
                    acc = acc.add_ref(&e.eval_with(y, like)?);
                }
                acc
            }
            EventExpr::Mul(v) => {
                let mut acc = like.lift(1.0);
                for e in v {
                    acc = acc.mul_ref(&e.eval_with(y, like)?);
                }
                acc
            }
            EventExpr::Neg(e) => e.eval_with(y, like)?.neg(),
            EventExpr::Square(e) => e.eval_with(y, like)?.square(),
            EventExpr::Sin(e) => e.eval_with(y, like)?.sin(),
            EventExpr::Cos(e) => e.eval_with(y, like)?.cos(),
            EventExpr::Exp(e) => e.eval_with(y, like)?.exp(),
        })
    }
}
