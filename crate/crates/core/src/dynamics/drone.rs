//! Quadrotor with Euler-angle attitude, rotor lag and an aerodynamic
//! force/moment model.

use serde::{Deserialize, Serialize};

use super::vec3::{mat_t_vec, mat_vec};
use super::DynError;
use crate::polyalg::Algebra;

/// Smallest `|cos θ|` accepted at the nominal state.
pub const DEFAULT_GIMBAL_EPS: f64 = 1e-6;

const RPM: f64 = std::f64::consts::PI / 30.0;

/// Model coefficients. There are no defaults for the force, moment,
/// inertia and lag coefficients: they must come from configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroneParams {
    #[serde(default = "default_g")]
    pub g: f64,
    pub ix: f64,
    pub iy: f64,
    pub iz: f64,
    #[serde(default = "default_omega_min_rpm")]
    pub omega_min_rpm: f64,
    #[serde(default = "default_omega_max_rpm")]
    pub omega_max_rpm: f64,
    pub tau: f64,
    pub k_x: f64,
    pub k_y: f64,
    pub k_omega: f64,
    pub k_z: f64,
    pub k_h: f64,
    pub k_p: f64,
    pub k_pv: f64,
    pub k_q: f64,
    pub k_qv: f64,
    pub k_r1: f64,
    pub k_r2: f64,
    pub k_rr: f64,
}

fn default_g() -> f64 {
    9.81
}

fn default_omega_min_rpm() -> f64 {
    3000.0
}

fn default_omega_max_rpm() -> f64 {
    12000.0
}

impl DroneParams {
    pub fn omega_min(&self) -> f64 {
        self.omega_min_rpm * RPM
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max_rpm * RPM
    }

    pub fn validate(&self) -> Result<(), DynError> {
        for (name, v) in [
            ("drone.g", self.g),
            ("drone.ix", self.ix),
            ("drone.iy", self.iy),
            ("drone.iz", self.iz),
            ("drone.tau", self.tau),
            ("drone.omega_min_rpm", self.omega_min_rpm),
        ] {
            super::positive(name, v)?;
        }
        for (name, v) in [
            ("drone.k_x", self.k_x),
            ("drone.k_y", self.k_y),
            ("drone.k_omega", self.k_omega),
            ("drone.k_z", self.k_z),
            ("drone.k_h", self.k_h),
            ("drone.k_p", self.k_p),
            ("drone.k_pv", self.k_pv),
            ("drone.k_q", self.k_q),
            ("drone.k_qv", self.k_qv),
            ("drone.k_r1", self.k_r1),
            ("drone.k_r2", self.k_r2),
            ("drone.k_rr", self.k_rr),
        ] {
            if !v.is_finite() {
                return Err(DynError::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be finite",
                });
            }
        }
        if !(self.omega_max_rpm > self.omega_min_rpm) {
            return Err(DynError::InvalidParameter {
                name: "drone.omega_max_rpm",
                value: self.omega_max_rpm,
                reason: "must exceed omega_min_rpm",
            });
        }
        Ok(())
    }

    /// Coefficients for rotor rates measured in units of `omega_max`
    /// (so the rotor states are O(1)); every other quantity stays SI.
    pub fn rotor_scaled(&self) -> RotorUnits {
        let w = self.omega_max();
        RotorUnits {
            unit: w,
            p: DroneCoeffs {
                g: self.g,
                inertia: [self.ix, self.iy, self.iz],
                omega_min: self.omega_min() / w,
                omega_max: 1.0,
                tau: self.tau,
                k_x: self.k_x * w,
                k_y: self.k_y * w,
                k_omega: self.k_omega * w * w,
                k_z: self.k_z * w,
                k_h: self.k_h,
                k_p: self.k_p * w * w,
                k_pv: self.k_pv,
                k_q: self.k_q * w * w,
                k_qv: self.k_qv,
                k_r1: self.k_r1 * w,
                k_r2: self.k_r2 * w,
                k_rr: self.k_rr,
            },
        }
    }

    /// Coefficients with rotor rates in rad/s.
    pub fn si(&self) -> DroneCoeffs {
        DroneCoeffs {
            g: self.g,
            inertia: [self.ix, self.iy, self.iz],
            omega_min: self.omega_min(),
            omega_max: self.omega_max(),
            tau: self.tau,
            k_x: self.k_x,
            k_y: self.k_y,
            k_omega: self.k_omega,
            k_z: self.k_z,
            k_h: self.k_h,
            k_p: self.k_p,
            k_pv: self.k_pv,
            k_q: self.k_q,
            k_qv: self.k_qv,
            k_r1: self.k_r1,
            k_r2: self.k_r2,
            k_rr: self.k_rr,
        }
    }
}

/// Rotor-scaled coefficient set and the rotor rate unit (rad/s).
#[derive(Clone, Debug, PartialEq)]
pub struct RotorUnits {
    pub unit: f64,
    pub p: DroneCoeffs,
}

/// Coefficients in the units the right-hand side is evaluated in.
#[derive(Clone, Debug, PartialEq)]
pub struct DroneCoeffs {
    pub g: f64,
    pub inertia: [f64; 3],
    pub omega_min: f64,
    pub omega_max: f64,
    pub tau: f64,
    pub k_x: f64,
    pub k_y: f64,
    pub k_omega: f64,
    pub k_z: f64,
    pub k_h: f64,
    pub k_p: f64,
    pub k_pv: f64,
    pub k_q: f64,
    pub k_qv: f64,
    pub k_r1: f64,
    pub k_r2: f64,
    pub k_rr: f64,
}

/// Attitude matrices and body-frame force and moment.
#[derive(Clone, Debug)]
pub struct KinematicTerms<A> {
    /// Body-to-world rotation.
    pub r: [[A; 3]; 3],
    /// Body rates to Euler-angle rates.
    pub q: [[A; 3]; 3],
    pub force: [A; 3],
    pub moment: [A; 3],
}

/// Rotation, rate transform, force and moment for Euler angles `lambda`,
/// body velocity `v_body`, rotor rates and their derivatives, and body rates.
pub fn drone_kinematic_terms<A: Algebra>(
    lambda: &[A],
    v_body: &[A],
    rotors: &[A],
    rotor_rates: &[A],
    body_rates: &[A],
    c: &DroneCoeffs,
    gimbal_eps: f64,
) -> Result<KinematicTerms<A>, DynError> {
    let (r, q) = attitude(lambda, gimbal_eps)?;
    let (force, moment) = force_moment(v_body, rotors, rotor_rates, body_rates, c);
    Ok(KinematicTerms {
        r,
        q,
        force,
        moment,
    })
}

type Mat3<A> = [[A; 3]; 3];

/// Body-to-world rotation `R(λ)` and Euler-rate transform `Q(λ)`.
pub fn attitude<A: Algebra>(lambda: &[A], gimbal_eps: f64) -> Result<(Mat3<A>, Mat3<A>), DynError> {
    let (phi, theta, psi) = (&lambda[0], &lambda[1], &lambda[2]);
    let (sf, cf) = (phi.sin(), phi.cos());
    let (st, ct) = (theta.sin(), theta.cos());
    let (sp, cp) = (psi.sin(), psi.cos());
    if !(ct.constant_part().abs() >= gimbal_eps) {
        return Err(DynError::GimbalLock {
            cos_theta: ct.constant_part(),
        });
    }
    let sec = ct.recip()?;
    let tan = st.mul_ref(&sec);
    let zero = phi.lift(0.0);
    let one = phi.lift(1.0);

    let r = [
        [
            ct.mul_ref(&cp),
            cf.mul_ref(&sp).neg().add_ref(&sf.mul_ref(&st).mul_ref(&cp)),
            sf.mul_ref(&sp).add_ref(&cf.mul_ref(&st).mul_ref(&cp)),
        ],
        [
            ct.mul_ref(&sp),
            cf.mul_ref(&cp).add_ref(&sf.mul_ref(&st).mul_ref(&sp)),
            sf.mul_ref(&cp).neg().add_ref(&cf.mul_ref(&st).mul_ref(&sp)),
        ],
        [st.neg(), sf.mul_ref(&ct), cf.mul_ref(&ct)],
    ];
    let q = [
        [one, sf.mul_ref(&tan), cf.mul_ref(&tan)],
        [zero.clone(), cf.clone(), sf.neg()],
        [zero, sf.mul_ref(&sec), cf.mul_ref(&sec)],
    ];
    Ok((r, q))
}

/// Body-frame specific force and moment.
pub fn force_moment<A: Algebra>(
    v_body: &[A],
    rotors: &[A],
    rotor_rates: &[A],
    body_rates: &[A],
    c: &DroneCoeffs,
) -> ([A; 3], [A; 3]) {
    let sum_w = rotors[0]
        .add_ref(&rotors[1])
        .add_ref(&rotors[2])
        .add_ref(&rotors[3]);
    let sq: Vec<A> = rotors.iter().map(Algebra::square).collect();
    let sum_sq = sq[0].add_ref(&sq[1]).add_ref(&sq[2]).add_ref(&sq[3]);
    let (vbx, vby, vbz) = (&v_body[0], &v_body[1], &v_body[2]);

    let fx = vbx.mul_ref(&sum_w).scale(-c.k_x);
    let fy = vby.mul_ref(&sum_w).scale(-c.k_y);
    let fz = sum_sq
        .scale(-c.k_omega)
        .sub_ref(&vbz.mul_ref(&sum_w).scale(c.k_z))
        .sub_ref(&vbx.square().add_ref(&vby.square()).scale(c.k_h));

    let mx = sq[0]
        .sub_ref(&sq[1])
        .sub_ref(&sq[2])
        .add_ref(&sq[3])
        .scale(c.k_p)
        .add_ref(&vby.scale(c.k_pv));
    let my = sq[0]
        .add_ref(&sq[1])
        .sub_ref(&sq[2])
        .sub_ref(&sq[3])
        .scale(c.k_q)
        .add_ref(&vbx.scale(c.k_qv));
    let alt = |v: &[A]| v[1].sub_ref(&v[0]).sub_ref(&v[2]).add_ref(&v[3]);
    let mz = alt(rotors)
        .scale(c.k_r1)
        .add_ref(&alt(rotor_rates).scale(c.k_r2))
        .sub_ref(&body_rates[2].scale(c.k_rr));

    ([fx, fy, fz], [mx, my, mz])
}

/// Rotor lag `ω̇ = ((ω_max − ω_min)u + ω_min − ω)/τ`.
pub fn rotor_rate<A: Algebra>(omega: &A, u: &A, c: &DroneCoeffs) -> A {
    u.scale(c.omega_max - c.omega_min)
        .add_scalar(c.omega_min)
        .sub_ref(omega)
        .scale(1.0 / c.tau)
}

/// Right-hand side of the 16-state model `[p, v, λ, Ω, ω]` for rotor commands `u`.
pub fn rhs_drone<A: Algebra>(
    s: &[A],
    u: &[A],
    c: &DroneCoeffs,
    gimbal_eps: f64,
) -> Result<Vec<A>, DynError> {
    let v = &s[3..6];
    let lambda = &s[6..9];
    let body = &s[9..12];
    let rotors = &s[12..16];
    let wdot: Vec<A> = rotors
        .iter()
        .zip(u)
        .map(|(w, ui)| rotor_rate(w, ui, c))
        .collect();

    let (rot, qmat) = attitude(lambda, gimbal_eps)?;
    let v_body = mat_t_vec(&rot, v);
    let (force, moment) = force_moment(&v_body, rotors, &wdot, body, c);

    let rf = mat_vec(&rot, &force);
    let lam_dot = mat_vec(&qmat, body);
    let [ix, iy, iz] = c.inertia;
    let (p, q, r) = (&body[0], &body[1], &body[2]);
    let pdot = q
        .mul_ref(r)
        .scale(iy - iz)
        .add_ref(&moment[0])
        .scale(1.0 / ix);
    let qdot = r
        .mul_ref(p)
        .scale(iz - ix)
        .add_ref(&moment[1])
        .scale(1.0 / iy);
    let rdot = p
        .mul_ref(q)
        .scale(ix - iy)
        .add_ref(&moment[2])
        .scale(1.0 / iz);

    let mut out = Vec::with_capacity(16);
    out.extend(v.iter().cloned());
    out.push(rf[0].clone());
    out.push(rf[1].clone());
    out.push(rf[2].add_scalar(c.g));
    out.extend(lam_dot);
    out.extend([pdot, qdot, rdot]);
    out.extend(wdot);
    Ok(out)
}
