//! Explicit Dormand–Prince 8(5,3) stepping over any [`Algebra`].
//!
//! Step-size control follows Hairer's DOP853. For jets, the error norm sees
//! the constant term and (weighted) first-order coefficients only, so that
//! high-degree coefficients cannot stall the stepper.

use super::tableau::*;
use super::{JetError, StepStats, Tolerances};
use crate::dynamics::DynError;
use crate::polyalg::Algebra;

const SAFE: f64 = 0.9;
const FACC1: f64 = 1.0 / 0.333;
const FACC2: f64 = 1.0 / 6.0;
const EXPO1: f64 = 1.0 / 8.0;

pub(crate) struct RawStep<A> {
    pub y_new: Vec<A>,
    /// Fifth-order error estimate.
    pub e5: Vec<A>,
    /// Third-order error estimate.
    pub e3: Vec<A>,
}

/// `y + h Σ c_j k_j`
fn comb<A: Algebra>(y: &[A], h: f64, terms: &[(f64, &[A])]) -> Vec<A> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            o.axpy(h * c, ki);
        }
    }
    out
}

/// `Σ c_j k_j`
fn lin<A: Algebra>(like: &[A], terms: &[(f64, &[A])]) -> Vec<A> {
    let zero: Vec<A> = like.iter().map(|v| v.lift(0.0)).collect();
    comb(&zero, 1.0, terms)
}

/// One DOP853 step of size `h` from `y` with `k1 = f(y)`.
pub(crate) fn step<A, F>(f: &F, y: &[A], k1: &[A], h: f64) -> Result<RawStep<A>, DynError>
where
    A: Algebra,
    F: Fn(&[A]) -> Result<Vec<A>, DynError>,
{
    let k2 = f(&comb(y, h, &[(A21, k1)]))?;
    let k3 = f(&comb(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f(&comb(y, h, &[(A41, k1), (A43, &k3)]))?;
    let k5 = f(&comb(y, h, &[(A51, k1), (A53, &k3), (A54, &k4)]))?;
    let k6 = f(&comb(y, h, &[(A61, k1), (A64, &k4), (A65, &k5)]))?;
    let k7 = f(&comb(
        y,
        h,
        &[(A71, k1), (A74, &k4), (A75, &k5), (A76, &k6)],
    ))?;
    let k8 = f(&comb(
        y,
        h,
        &[(A81, k1), (A84, &k4), (A85, &k5), (A86, &k6), (A87, &k7)],
    ))?;
    let k9 = f(&comb(
        y,
        h,
        &[
            (A91, k1),
            (A94, &k4),
            (A95, &k5),
            (A96, &k6),
            (A97, &k7),
            (A98, &k8),
        ],
    ))?;
    let k10 = f(&comb(
        y,
        h,
        &[
            (A101, k1),
            (A104, &k4),
            (A105, &k5),
            (A106, &k6),
            (A107, &k7),
            (A108, &k8),
            (A109, &k9),
        ],
    ))?;
    let k11 = f(&comb(
        y,
        h,
        &[
            (A111, k1),
            (A114, &k4),
            (A115, &k5),
            (A116, &k6),
            (A117, &k7),
            (A118, &k8),
            (A119, &k9),
            (A1110, &k10),
        ],
    ))?;
    let k12 = f(&comb(
        y,
        h,
        &[
            (A121, k1),
            (A124, &k4),
            (A125, &k5),
            (A126, &k6),
            (A127, &k7),
            (A128, &k8),
            (A129, &k9),
            (A1210, &k10),
            (A1211, &k11),
        ],
    ))?;
    let inc = lin(
        y,
        &[
            (B1, k1),
            (B6, &k6),
            (B7, &k7),
            (B8, &k8),
            (B9, &k9),
            (B10, &k10),
            (B11, &k11),
            (B12, &k12),
        ],
    );
    let y_new = comb(y, h, &[(1.0, &inc)]);
    let e3 = comb(&inc, 1.0, &[(-BHH1, k1), (-BHH2, &k9), (-BHH3, &k12)]);
    let e5 = lin(
        y,
        &[
            (ER1, k1),
            (ER6, &k6),
            (ER7, &k7),
            (ER8, &k8),
            (ER9, &k9),
            (ER10, &k10),
            (ER11, &k11),
            (ER12, &k12),
        ],
    );
    Ok(RawStep { y_new, e5, e3 })
}

/// Scaled error of a step (accept when ≤ 1).
pub(crate) fn error_norm<A: Algebra>(
    y: &[A],
    s: &RawStep<A>,
    h: f64,
    tol: &Tolerances,
) -> f64 {
    let first = tol.first_order_weight > 0.0;
    let (mut vy, mut vn, mut v5, mut v3) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (mut err, mut err2, mut n) = (0.0, 0.0, 0usize);
    for i in 0..y.len() {
        vy.clear();
        vn.clear();
        v5.clear();
        v3.clear();
        y[i].error_view(first, &mut vy);
        s.y_new[i].error_view(first, &mut vn);
        s.e5[i].error_view(first, &mut v5);
        s.e3[i].error_view(first, &mut v3);
        for j in 0..vy.len() {
            let w = if j == 0 { 1.0 } else { tol.first_order_weight };
            let sk = tol.atol + tol.rtol * vy[j].abs().max(vn[j].abs());
            err += (w * v5[j] / sk).powi(2);
            err2 += (w * v3[j] / sk).powi(2);
            n += 1;
        }
    }
    let mut deno = err + 0.01 * err2;
    if deno <= 0.0 {
        deno = 1.0;
    }
    h.abs() * err * (1.0 / (n as f64 * deno)).sqrt()
}

fn all_finite<A: Algebra>(y: &[A]) -> bool {
    let mut v = Vec::new();
    y.iter().all(|a| {
        v.clear();
        a.error_view(true, &mut v);
        v.iter().all(|x| x.is_finite())
    })
}

/// Initial step guess (Hairer's `hinit`) on the error-view entries.
fn initial_step<A, F>(f: &F, y: &[A], k1: &[A], dir: f64, tol: &Tolerances) -> Result<f64, DynError>
where
    A: Algebra,
    F: Fn(&[A]) -> Result<Vec<A>, DynError>,
{
    let norm = |v: &[A], r: &[A]| {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        let mut s = 0.0;
        let mut n = 0usize;
        for (x, ry) in v.iter().zip(r) {
            a.clear();
            b.clear();
            x.error_view(false, &mut a);
            ry.error_view(false, &mut b);
            let sk = tol.atol + tol.rtol * b[0].abs();
            s += (a[0] / sk).powi(2);
            n += 1;
        }
        (s / n as f64).sqrt()
    };
    let dnf = norm(k1, y);
    let dny = norm(y, y);
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        0.01 * dny / dnf
    };
    h = h.min(tol.h_max);
    let y1 = comb(y, dir * h, &[(1.0, k1)]);
    let k2 = f(&y1)?;
    let diff: Vec<A> = k2.iter().zip(k1).map(|(a, b)| a.sub_ref(b)).collect();
    let der2 = norm(&diff, y) / h;
    let der12 = der2.max(dnf);
    let h1 = if der12 <= 1e-15 {
        (1e-6f64).max(h.abs() * 1e-3)
    } else {
        (0.01 / der12).powf(1.0 / 8.0)
    };
    Ok((100.0 * h).min(h1).min(tol.h_max))
}

/// What the per-step callback wants next.
pub(crate) enum Flow {
    Continue,
    Stop,
}

/// Adaptive integration from `t0` to `t_end` (either direction). The
/// callback sees the initial point and every accepted step as
/// `(t, y, f(y))` and may stop the run early.
pub(crate) fn drive<A, F, G>(
    f: &F,
    t0: f64,
    y0: Vec<A>,
    t_end: f64,
    tol: &Tolerances,
    mut on_step: G,
) -> Result<(f64, Vec<A>, StepStats), JetError>
where
    A: Algebra,
    F: Fn(&[A]) -> Result<Vec<A>, DynError>,
    G: FnMut(f64, &[A], &[A]) -> Result<Flow, JetError>,
{
    let mut stats = StepStats::default();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(&y)?;
    stats.evaluations += 1;
    if let Flow::Stop = on_step(t, &y, &k1)? {
        return Ok((t, y, stats));
    }
    let span = t_end - t0;
    if span == 0.0 {
        return Ok((t, y, stats));
    }
    let dir = span.signum();
    let tol = Tolerances {
        h_max: tol.h_max.min(span.abs()),
        ..tol.clone()
    };
    let mut h = match tol.h_init {
        Some(h) => h.min(tol.h_max),
        None => initial_step(f, &y, &k1, dir, &tol)?,
    };
    stats.evaluations += 1;
    let mut last_rejected = false;
    loop {
        if stats.accepted + stats.rejected >= tol.max_steps {
            return Err(JetError::StepBudget { t, steps: tol.max_steps });
        }
        let remaining = (t_end - t).abs();
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        if h <= 1e-14 * t.abs().max(1.0) && !last {
            return Err(JetError::StepCollapse { t, h });
        }
        let hs = dir * h;
        let raw = match step(f, &y, &k1, hs) {
            Ok(s) => s,
            // a stage left the model's domain: treat as a rejected step
            Err(e) => {
                stats.rejected += 1;
                last_rejected = true;
                h *= 0.25;
                if h <= 1e-14 * t.abs().max(1.0) {
                    return Err(e.into());
                }
                continue;
            }
        };
        stats.evaluations += 11;
        let err = error_norm(&y, &raw, hs, &tol);
        let fac11 = err.powf(EXPO1);
        if err <= 1.0 && err.is_finite() && all_finite(&raw.y_new) {
            let k_new = f(&raw.y_new)?;
            stats.evaluations += 1;
            stats.accepted += 1;
            t = if last { t_end } else { t + hs };
            y = raw.y_new;
            k1 = k_new;
            if let Flow::Stop = on_step(t, &y, &k1)? {
                return Ok((t, y, stats));
            }
            if last {
                return Ok((t, y, stats));
            }
            let fac = (fac11 / SAFE).clamp(FACC2, FACC1);
            let mut hnew = h / fac;
            if last_rejected {
                hnew = hnew.min(h);
            }
            h = hnew.min(tol.h_max);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            last_rejected = true;
            let shrink = if err.is_finite() {
                FACC1.min(fac11 / SAFE)
            } else {
                FACC1
            };
            h /= shrink.max(1.0 + 1e-3);
        }
    }
}

/// A single uncontrolled step of size `h` (used for dense output).
pub(crate) fn restep<F>(f: &F, y: &[f64], k1: &[f64], h: f64) -> Result<Vec<f64>, DynError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, DynError>,
{
    if h == 0.0 {
        return Ok(y.to_vec());
    }
    Ok(step(f, y, k1, h)?.y_new)
}
