//! Numerical maximization of `F` over the angles.
//!
//! A uniform-angle grid gives the starting point; coordinate ascent with a
//! bracketed golden-section search per angle refines it. Each coordinate slice of
//! `F` is a sum of two concave functions on `[0, π/2]` for the resources handled
//! here, so the per-coordinate search is global.

use serde::Serialize;

use super::{BellEvaluation, Provenance};
use crate::error::{Error, Result};
use crate::independence::IndependenceCertificate;
use crate::network::NetworkTopology;
use crate::quantum::AngleModel;

/// Grid points on `[0, π/2]` for the uniform-angle scan.
pub const DEFAULT_GRID: usize = 64;

const SWEEP_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 500;
const COORD_SAMPLES: usize = 32;

/// Result of [`optimize_angles`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Optimized {
    pub evaluation: BellEvaluation,
    pub angles: Vec<f64>,
    pub sweeps: usize,
}

fn objective(model: &AngleModel, theta: &[f64]) -> f64 {
    let (i, j) = model.ij(theta);
    super::f_value(i, j, model.k())
}

/// Golden-section maximum of `f` on `[lo, hi]`.
fn golden(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-12 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = (lo + hi) / 2.0;
    (x, f(x))
}

/// Best value of `F` over one coordinate, others held fixed.
fn coordinate_max(model: &AngleModel, theta: &mut [f64], idx: usize, current: f64) -> f64 {
    let hi = std::f64::consts::FRAC_PI_2;
    let step = hi / COORD_SAMPLES as f64;
    let mut probe = theta.to_vec();
    let mut eval = |t: f64| {
        probe[idx] = t;
        objective(model, &probe)
    };
    let mut best_s = 0;
    let mut best_v = f64::NEG_INFINITY;
    for s in 0..=COORD_SAMPLES {
        let v = eval(s as f64 * step);
        if v > best_v {
            best_v = v;
            best_s = s;
        }
    }
    let lo = best_s.saturating_sub(1) as f64 * step;
    let up = ((best_s + 1).min(COORD_SAMPLES)) as f64 * step;
    let (x, v) = golden(&mut eval, lo, up);
    let (x, v) = if v >= best_v { (x, v) } else { (best_s as f64 * step, best_v) };
    if v > current {
        theta[idx] = x;
        v
    } else {
        current
    }
}

/// Maximizes `F` over `θ ∈ [0, π/2]^k` on the factorized path.
///
/// `grid` uniform angles are scanned first; ties keep the lowest angle vector.
pub fn optimize_angles(net: &NetworkTopology, cert: &IndependenceCertificate, grid: usize) -> Result<Optimized> {
    if grid < 2 {
        return Err(Error::Invalid("angle grid needs at least 2 points".into()));
    }
    let model = AngleModel::new(net, cert)?;
    let k = model.k();
    let hi = std::f64::consts::FRAC_PI_2;
    let mut theta = vec![0.0; k];
    let mut best = objective(&model, &theta);
    for g in 1..grid {
        let t = hi * g as f64 / (grid - 1) as f64;
        let cand = vec![t; k];
        let v = objective(&model, &cand);
        if v > best {
            best = v;
            theta = cand;
        }
    }
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let start = best;
        for idx in 0..k {
            best = coordinate_max(&model, &mut theta, idx, best);
        }
        if best - start < SWEEP_TOL {
            break;
        }
    }
    let (i, j) = model.ij(&theta);
    let evaluation = BellEvaluation::new(i, j, k, Provenance::Factorized, Some(theta.clone()))?;
    Ok(Optimized { evaluation, angles: theta, sweeps })
}
