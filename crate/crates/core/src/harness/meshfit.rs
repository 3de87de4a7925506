use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::HarnessError;
use crate::eventmap::TriangleMesh;

/// Labelled points `(p, ‖p‖ − r)` uniformly distributed in the shell
/// `inner·r ≤ ‖p‖ ≤ outer·r`.
pub fn sphere_event_samples(
    radius: f64,
    n: usize,
    inner: f64,
    outer: f64,
    seed: u64,
) -> Vec<([f64; 3], f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = ((inner * radius).powi(3), (outer * radius).powi(3));
    (0..n)
        .map(|_| {
            // uniform direction, radius with density ∝ ρ²
            let dir: Vector3<f64> = loop {
                let v = Vector3::<f64>::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                let n2 = v.norm_squared();
                if n2 > 1e-6 && n2 <= 1.0 {
                    break v / n2.sqrt();
                }
            };
            let rho = rng.random_range(lo..=hi).cbrt();
            let p = dir * rho;
            ([p.x, p.y, p.z], rho - radius)
        })
        .collect()
}

/// Labelled points `(p, signed_boundary_value(p, altitude))` with
/// `|label| ≤ band`, drawn by rejection from the mesh bounding box grown
/// by `altitude + band`.
pub fn mesh_event_samples(
    mesh: &TriangleMesh,
    altitude: f64,
    n: usize,
    band: f64,
    seed: u64,
) -> Result<Vec<([f64; 3], f64)>, HarnessError> {
    if !(band > 0.0) {
        return Err(HarnessError::Config(format!("sampling band must be positive, got {band}")));
    }
    let (lo, hi) = mesh.bounds();
    let grow = altitude.max(0.0) + band;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let budget = 1000 * n.max(1);
    for _ in 0..budget {
        if out.len() == n {
            break;
        }
        let p: [f64; 3] = std::array::from_fn(|i| rng.random_range(lo[i] - grow..=hi[i] + grow));
        let v = mesh.signed_boundary_value(p, altitude)?;
        if v.abs() <= band {
            out.push((p, v));
        }
    }
    if out.len() < n {
        return Err(HarnessError::Config(format!(
            "only {} of {n} samples fell within the band after {budget} draws",
            out.len()
        )));
    }
    Ok(out)
}
