//! Powered descent to an asteroid in its body-fixed rotating frame.

use serde::{Deserialize, Serialize};

use super::DynError;
use crate::polyalg::Algebra;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LanderParams {
    /// Gravitational parameter of the asteroid (m³/s²).
    pub mu: f64,
    /// Spin rate of the asteroid (rad/s).
    pub omega: f64,
    /// Maximum thrust (N).
    pub c1: f64,
    /// Specific impulse (s).
    pub isp: f64,
    /// Standard gravity used with `isp` (m/s²).
    pub g0: f64,
    /// Reference (initial) mass used as the mass unit (kg).
    pub m0: f64,
    /// Length unit (m).
    pub length_unit: f64,
}

impl Default for LanderParams {
    fn default() -> Self {
        LanderParams {
            mu: 1530348199.0,
            omega: 0.00041596,
            c1: 80.0,
            isp: 600.0,
            g0: 9.8,
            m0: 353.0,
            length_unit: 100e3,
        }
    }
}

impl LanderParams {
    /// Reference initial state `[r (m), v (m/s), m (kg)]`.
    pub fn reference_initial_state() -> [f64; 7] {
        [180e3, -4.8e3, 0.0, 25.0, -25.0, 20.0, 353.0]
    }

    /// Mass flow at full throttle (kg/s, negative).
    pub fn full_throttle_mass_rate(&self) -> f64 {
        -self.c1 / (self.isp * self.g0)
    }

    pub fn validate(&self) -> Result<(), DynError> {
        super::positive("lander.mu", self.mu)?;
        super::nonnegative("lander.omega", self.omega)?;
        super::positive("lander.c1", self.c1)?;
        super::positive("lander.isp", self.isp)?;
        super::positive("lander.g0", self.g0)?;
        super::positive("lander.m0", self.m0)?;
        super::positive("lander.length_unit", self.length_unit)
    }
}

/// Right-hand side `[ṙ, v̇, ṁ]` for throttle `u` and unit direction `dir`.
#[allow(clippy::too_many_arguments)]
pub fn rhs_lander<A: Algebra>(
    s: &[A],
    dir: &[A; 3],
    u: &A,
    mu: f64,
    omega: f64,
    c1: &A,
    isp: &A,
    g0: f64,
) -> Result<Vec<A>, DynError> {
    let (x, y, z) = (&s[0], &s[1], &s[2]);
    let (vx, vy, vz) = (&s[3], &s[4], &s[5]);
    let m = &s[6];
    if !(m.constant_part() > 0.0) {
        return Err(DynError::NonPositiveMass(m.constant_part()));
    }
    let r2 = x.square().add_ref(&y.square()).add_ref(&z.square());
    if !(r2.constant_part() > 0.0) {
        return Err(DynError::ZeroRadius);
    }
    let k = r2.powf(-1.5)?.scale(mu);
    let thrust = u.mul_ref(c1).mul_ref(&m.recip()?);
    let w2 = omega * omega;
    let ax = k
        .mul_ref(x)
        .neg()
        .add_ref(&vy.scale(2.0 * omega))
        .add_ref(&x.scale(w2))
        .add_ref(&thrust.mul_ref(&dir[0]));
    let ay = k
        .mul_ref(y)
        .neg()
        .sub_ref(&vx.scale(2.0 * omega))
        .add_ref(&y.scale(w2))
        .add_ref(&thrust.mul_ref(&dir[1]));
    let az = k.mul_ref(z).neg().add_ref(&thrust.mul_ref(&dir[2]));
    let mdot = u.mul_ref(c1).mul_ref(&isp.scale(g0).recip()?).neg();
    Ok(vec![vx.clone(), vy.clone(), vz.clone(), ax, ay, az, mdot])
}
