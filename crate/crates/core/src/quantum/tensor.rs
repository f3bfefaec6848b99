//! Correlators on the full tensor-product state.

use super::linalg::c;
use super::observables::{MeasurementAngles, ObservableSet};
use super::state::{build_state, expectation, LocalFactor};
use crate::error::{Error, Result};
use crate::independence::IndependenceCertificate;
use crate::network::NetworkTopology;

/// `(I, J)` on the global state.
///
/// By linearity `I = <⊗_i (A_{i,0} + A_{i,1})/2 ⊗ B_0>` and
/// `J = <⊗_i (A_{i,0} − A_{i,1})/2 ⊗ B_1>`, so each functional takes one trace;
/// [`tensor_ij_by_settings`] sums the `2^k` correlators explicitly instead.
pub fn tensor_ij(
    net: &NetworkTopology,
    cert: &IndependenceCertificate,
    angles: &MeasurementAngles,
    dim_cap: usize,
) -> Result<(f64, f64)> {
    if cert.k() == 0 {
        return Err(Error::Precondition("certificate has no independent party".into()));
    }
    let state = build_state(net, dim_cap)?;
    let obs = ObservableSet::new(net, cert, angles)?;
    let half = c(0.5);
    let combine = |sign: f64, y: usize| -> Vec<LocalFactor> {
        obs.a
            .iter()
            .map(|[a0, a1]| LocalFactor {
                slots: a0.slots.clone(),
                op: (&a0.op + &a1.op * c(sign)) * half,
            })
            .chain(obs.b[y].all().cloned())
            .collect()
    };
    let i_val = expectation(&state, &combine(1.0, 0))?;
    let j_val = expectation(&state, &combine(-1.0, 1))?;
    Ok((i_val, j_val))
}

/// `(I, J)` by summing `2^k` full correlators for each functional.
pub fn tensor_ij_by_settings(
    net: &NetworkTopology,
    cert: &IndependenceCertificate,
    angles: &MeasurementAngles,
    dim_cap: usize,
) -> Result<(f64, f64)> {
    let k = cert.k();
    if k == 0 {
        return Err(Error::Precondition("certificate has no independent party".into()));
    }
    if k > 20 {
        return Err(Error::ResourceLimit(format!("2^{k} setting combinations")));
    }
    let state = build_state(net, dim_cap)?;
    let obs = ObservableSet::new(net, cert, angles)?;
    let mut i_val = 0.0;
    let mut j_val = 0.0;
    for x in 0u32..(1 << k) {
        let a: Vec<LocalFactor> = (0..k)
            .map(|i| obs.a[i][((x >> (k - 1 - i)) & 1) as usize].clone())
            .collect();
        let with = |y: usize| -> Vec<LocalFactor> { a.iter().cloned().chain(obs.b[y].all().cloned()).collect() };
        i_val += expectation(&state, &with(0))?;
        let sign = if x.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        j_val += sign * expectation(&state, &with(1))?;
    }
    let norm = (1u64 << k) as f64;
    Ok((i_val / norm, j_val / norm))
}
