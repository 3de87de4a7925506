//! Low-thrust transfer in a frame rotating with the target body.

use serde::{Deserialize, Serialize};

use super::DynError;
use crate::polyalg::Algebra;

/// Astronomical unit in metres.
pub const AU: f64 = 1.495978707e11;
/// Heliocentric gravitational parameter (m³/s²).
pub const MU_SUN: f64 = 1.32712440018e20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferParams {
    /// Gravitational parameter of the central body (m³/s²).
    pub mu: f64,
    /// Radius of the target body's circular orbit (m).
    pub radius: f64,
    /// Thrust acceleration magnitude (m/s²).
    pub gamma: f64,
    /// Sphere-of-influence radius bounding the event (m).
    pub r_soi: f64,
}

impl Default for TransferParams {
    fn default() -> Self {
        TransferParams {
            mu: MU_SUN,
            radius: 1.3 * AU,
            gamma: 1e-4,
            r_soi: 924_000e3,
        }
    }
}

impl TransferParams {
    /// Frame rate `√(μ/R³)`.
    pub fn frame_rate(&self) -> f64 {
        (self.mu / self.radius.powi(3)).sqrt()
    }

    /// Reference initial state `[r (m), v (m/s)]`.
    pub fn reference_initial_state() -> [f64; 6] {
        [
            -1.1874388 * AU,
            -3.0578396 * AU,
            0.3569406 * AU,
            -48.17e3,
            18.30e3,
            0.64e3,
        ]
    }

    pub fn validate(&self) -> Result<(), DynError> {
        super::positive("transfer.mu", self.mu)?;
        super::positive("transfer.radius", self.radius)?;
        super::nonnegative("transfer.gamma", self.gamma)?;
        super::positive("transfer.r_soi", self.r_soi)
    }
}

/// Right-hand side `[ṙ, v̇]` for a unit thrust direction `dir`, in whatever
/// consistent units `mu`, `omega` and `gamma` are given in.
pub fn rhs_transfer<A: Algebra>(
    s: &[A],
    dir: &[A; 3],
    mu: f64,
    omega: f64,
    gamma: &A,
) -> Result<Vec<A>, DynError> {
    let (x, y, z) = (&s[0], &s[1], &s[2]);
    let (vx, vy, vz) = (&s[3], &s[4], &s[5]);
    let r2 = x.square().add_ref(&y.square()).add_ref(&z.square());
    if !(r2.constant_part() > 0.0) {
        return Err(DynError::ZeroRadius);
    }
    let k = r2.powf(-1.5)?.scale(mu);
    let w2 = omega * omega;
    let ax = k
        .mul_ref(x)
        .neg()
        .add_ref(&vy.scale(2.0 * omega))
        .add_ref(&x.scale(w2))
        .add_ref(&gamma.mul_ref(&dir[0]));
    let ay = k
        .mul_ref(y)
        .neg()
        .sub_ref(&vx.scale(2.0 * omega))
        .add_ref(&y.scale(w2))
        .add_ref(&gamma.mul_ref(&dir[1]));
    let az = k.mul_ref(z).neg().add_ref(&gamma.mul_ref(&dir[2]));
    Ok(vec![vx.clone(), vy.clone(), vz.clone(), ax, ay, az])
}
