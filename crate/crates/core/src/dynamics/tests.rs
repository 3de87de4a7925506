use approx::assert_relative_eq;
use nalgebra::{Matrix3, Rotation3, Vector3};

use super::*;
use crate::netpoly::{Activation, LayerActivation};
use crate::polyalg::TPoly;

pub(crate) fn drone_fixture() -> DroneParams {
    toml::from_str(
        r#"
        ix = 0.0009
        iy = 0.0012
        iz = 0.002
        tau = 0.06
        k_x = 5e-5
        k_y = 5e-5
        k_omega = 4e-6
        k_z = 5e-5
        k_h = 0.05
        k_p = 3e-8
        k_pv = 1e-4
        k_q = 3e-8
        k_qv = 1e-4
        k_r1 = 1e-6
        k_r2 = 1e-7
        k_rr = 1e-3
        "#,
    )
    .unwrap()
}

#[test]
fn transfer_equilibrium_and_thrust_magnitude() {
    let p = TransferParams::default();
    let w = p.frame_rate();
    let s = [p.radius, 0.0, 0.0, 0.0, 0.0, 0.0];
    let d = rhs_transfer(&s, &[1.0, 0.0, 0.0], p.mu, w, &0.0).unwrap();
    for v in &d[3..] {
        assert!(v.abs() < 1e-18, "{v}");
    }
    let dir = [0.6, 0.0, 0.8];
    let d = rhs_transfer(&s, &dir, p.mu, w, &p.gamma).unwrap();
    let a = (d[3] * d[3] + d[4] * d[4] + d[5] * d[5]).sqrt();
    assert_relative_eq!(a, 1e-4, max_relative = 1e-6);
}

fn transfer_oracle(s: &[f64], i: &[f64], mu: f64, w: f64, g: f64) -> [f64; 6] {
    let r = Vector3::new(s[0], s[1], s[2]);
    let v = Vector3::new(s[3], s[4], s[5]);
    let om = Vector3::new(0.0, 0.0, w);
    let grav = -mu / r.norm().powi(3) * r;
    let acc = grav - 2.0 * om.cross(&v) - om.cross(&om.cross(&r)) + g * Vector3::new(i[0], i[1], i[2]);
    [v[0], v[1], v[2], acc[0], acc[1], acc[2]]
}

#[test]
fn transfer_matches_vector_oracle() {
    let s = [0.9, -0.3, 0.05, 0.1, 0.8, -0.02];
    let i = [0.48, 0.6, 0.64];
    let got = rhs_transfer(&s, &i, 1.0, 1.0, &0.03).unwrap();
    let want = transfer_oracle(&s, &i, 1.0, 1.0, 0.03);
    for (a, b) in got.iter().zip(want) {
        assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn lander_mass_flow() {
    let p = LanderParams::default();
    let s = [1e5, 2e4, 0.0, 0.0, 0.0, 0.0, 353.0];
    let dir = [1.0, 0.0, 0.0];
    let d = rhs_lander(&s, &dir, &1.0, p.mu, p.omega, &p.c1, &p.isp, p.g0).unwrap();
    assert_relative_eq!(d[6], -80.0 / (600.0 * 9.8), max_relative = 1e-15);
    assert_relative_eq!(d[6], -1.3605e-2, max_relative = 1e-4);
    let d0 = rhs_lander(&s, &dir, &0.0, p.mu, p.omega, &p.c1, &p.isp, p.g0).unwrap();
    assert_eq!(d0[6], 0.0);
    let grav_only = transfer_oracle(&s, &dir, p.mu, p.omega, 0.0);
    for k in 3..6 {
        assert_relative_eq!(d0[k], grav_only[k], max_relative = 1e-14);
    }
    assert!(rhs_lander(
        &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        &dir,
        &1.0,
        1.0,
        0.0,
        &1.0,
        &1.0,
        1.0
    )
    .is_err());
}

#[test]
fn drone_attitude_identity_and_moment_signs() {
    let c = drone_fixture().si();
    let z = [0.0; 3];
    let w = [800.0; 4];
    let k = drone_kinematic_terms(&z, &z, &w, &[5.0; 4], &[0.1, 0.2, 0.3], &c, 1e-6).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let e = if i == j { 1.0 } else { 0.0 };
            assert_eq!(k.r[i][j], e);
            assert_eq!(k.q[i][j], e);
        }
    }
    assert_eq!(k.moment[0], 0.0);
    assert_eq!(k.moment[1], 0.0);
    assert_relative_eq!(k.moment[2], -c.k_rr * 0.3);
    let k = drone_kinematic_terms(&z, &[2.0, 0.0, 0.0], &w, &[0.0; 4], &z, &c, 1e-6).unwrap();
    assert!(k.force[0] < 0.0);
    let tilt = [0.0, std::f64::consts::FRAC_PI_2, 0.0];
    assert!(matches!(
        drone_kinematic_terms(&tilt, &z, &w, &[0.0; 4], &z, &c, 1e-6),
        Err(DynError::GimbalLock { .. })
    ));
}

#[test]
fn drone_hover_fixed_point() {
    let p = drone_fixture();
    let c = p.si();
    let steady = (c.omega_max - c.omega_min) * 0.5 + c.omega_min;
    assert_relative_eq!(steady * 30.0 / std::f64::consts::PI, 7500.0, max_relative = 1e-14);
    let mut s = [0.0; 16];
    s[12..].fill(steady);
    let d = rhs_drone(&s, &[0.5; 4], &c, 1e-6).unwrap();
    for k in 6..9 {
        assert_eq!(d[k], 0.0);
    }
    for k in 12..16 {
        assert_eq!(d[k], 0.0);
    }
}

fn drone_oracle(s: &[f64], u: &[f64], c: &DroneCoeffs) -> Vec<f64> {
    let v = Vector3::new(s[3], s[4], s[5]);
    let (phi, th, psi) = (s[6], s[7], s[8]);
    let om = Vector3::new(s[9], s[10], s[11]);
    let w = &s[12..16];
    let r = Rotation3::from_euler_angles(phi, th, psi).into_inner();
    let vb = r.transpose() * v;
    let wd: Vec<f64> = (0..4)
        .map(|i| ((c.omega_max - c.omega_min) * u[i] + c.omega_min - w[i]) / c.tau)
        .collect();
    let sw: f64 = w.iter().sum();
    let f = Vector3::new(
        -c.k_x * vb[0] * sw,
        -c.k_y * vb[1] * sw,
        -c.k_omega * w.iter().map(|x| x * x).sum::<f64>()
            - c.k_z * vb[2] * sw
            - c.k_h * (vb[0] * vb[0] + vb[1] * vb[1]),
    );
    let w2: Vec<f64> = w.iter().map(|x| x * x).collect();
    let m = Vector3::new(
        c.k_p * (w2[0] - w2[1] - w2[2] + w2[3]) + c.k_pv * vb[1],
        c.k_q * (w2[0] + w2[1] - w2[2] - w2[3]) + c.k_qv * vb[0],
        c.k_r1 * (-w[0] + w[1] - w[2] + w[3]) + c.k_r2 * (-wd[0] + wd[1] - wd[2] + wd[3])
            - c.k_rr * om[2],
    );
    let inertia = Matrix3::from_diagonal(&Vector3::from(c.inertia));
    let omdot = inertia.try_inverse().unwrap() * (-om.cross(&(inertia * om)) + m);
    let acc = Vector3::new(0.0, 0.0, c.g) + r * f;
    let (sf, cf, tt, ct) = (phi.sin(), phi.cos(), th.tan(), th.cos());
    let q = Matrix3::new(1.0, sf * tt, cf * tt, 0.0, cf, -sf, 0.0, sf / ct, cf / ct);
    let ld = q * om;
    let mut out = vec![v[0], v[1], v[2], acc[0], acc[1], acc[2], ld[0], ld[1], ld[2]];
    out.extend(omdot.iter());
    out.extend(wd);
    out
}

#[test]
fn drone_matches_independent_oracle() {
    let c = drone_fixture().rotor_scaled().p;
    let s = [
        -1.0, 0.2, -0.1, 3.0, -0.5, 0.3, 0.2, -0.15, 0.7, 0.4, -0.3, 0.2, 0.6, 0.65, 0.62, 0.7,
    ];
    let u = [0.3, 0.55, 0.8, 0.45];
    let got = rhs_drone(&s, &u, &c, 1e-6).unwrap();
    let want = drone_oracle(&s, &u, &c);
    for (k, (a, b)) in got.iter().zip(&want).enumerate() {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{k}: {a} vs {b}");
    }
}

#[test]
fn drone_requires_coefficients() {
    let r: Result<ModelConfig, _> = toml::from_str("kind = \"drone\"\n");
    assert!(r.is_err());
    let t: ModelConfig = toml::from_str("kind = \"transfer\"\n").unwrap();
    assert_eq!(t, ModelConfig::Transfer(TransferParams::default()));
}

#[test]
fn stub_policy_transfer_pure_thrust() {
    let model = DynamicsModel::new(ModelConfig::Transfer(TransferParams::default())).unwrap();
    let stub = PolicyNet::constant_stub(6, &[1.0, 0.0, 0.0], OutputWiring::Transfer).unwrap();
    let cl = ClosedLoop::new(model, Some(stub), &[]).unwrap();
    let p = TransferParams::default();
    let y = cl.augment(&[p.radius, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
    let d = cl.rhs(&y).unwrap();
    let gamma_s = cl.model().param_value(0).0;
    assert_relative_eq!(d[3], gamma_s, max_relative = 1e-12);
    assert!(d[4].abs() < 1e-15 && d[5].abs() < 1e-15);
    assert!(d[..3].iter().all(|v| *v == 0.0));
}

fn lander_loop(free: &[&str]) -> ClosedLoop {
    let model = DynamicsModel::new(ModelConfig::Lander(LanderParams::default())).unwrap();
    let head = LayerActivation::PerNeuron(vec![
        Activation::Sigmoid,
        Activation::Linear,
        Activation::Linear,
        Activation::Linear,
    ]);
    let net = PolicyNet::random_siren(&[7, 8, 8, 4], 1.0, head, OutputWiring::Lander, 5).unwrap();
    ClosedLoop::new(model, Some(net), free).unwrap()
}

#[test]
fn constant_jets_reproduce_scalar_closed_loop() {
    let cl = lander_loop(&["c1"]);
    let y = cl.augment(&LanderParams::reference_initial_state()).unwrap();
    let s = cl.rhs(&y).unwrap();
    let j: Vec<TPoly> = y.iter().map(|&v| TPoly::constant(v, 2, 3).unwrap()).collect();
    let p = cl.rhs(&j).unwrap();
    for (a, b) in s.iter().zip(&p) {
        assert_eq!(*a, b.constant_term());
    }
}

#[test]
fn first_order_jets_match_central_differences() {
    let cl = lander_loop(&["c1", "isp"]);
    let y = cl.augment(&LanderParams::reference_initial_state()).unwrap();
    let n = y.len();
    let jets: Vec<TPoly> = y
        .iter()
        .enumerate()
        .map(|(i, &v)| TPoly::seeded(v, i, n, 1).unwrap())
        .collect();
    let d = cl.rhs(&jets).unwrap();
    let h = 1e-6;
    for j in 0..n {
        let mut yp = y.clone();
        let mut ym = y.clone();
        yp[j] += h;
        ym[j] -= h;
        let fp = cl.rhs(&yp).unwrap();
        let fm = cl.rhs(&ym).unwrap();
        for i in 0..n {
            let mut alpha = vec![0u32; n];
            alpha[j] = 1;
            let jac = d[i].coeff(&alpha);
            let fd = (fp[i] - fm[i]) / (2.0 * h);
            let scale = jac.abs().max(1e-3);
            assert!((jac - fd).abs() / scale < 1e-6, "({i},{j}): {jac} vs {fd}");
        }
    }
}

#[test]
fn closed_loop_validates_policy() {
    let model = DynamicsModel::new(ModelConfig::Transfer(TransferParams::default())).unwrap();
    assert!(matches!(
        ClosedLoop::new(model.clone(), None, &[]),
        Err(DynError::MissingPolicy(_))
    ));
    let stub = PolicyNet::constant_stub(6, &[1.0, 0.0, 0.0], OutputWiring::Transfer).unwrap();
    assert!(ClosedLoop::new(model, Some(stub), &["mass"]).is_err());
}
