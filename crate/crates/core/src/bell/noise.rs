//! Noise thresholds for Werner and Pauli-coefficient resources.

use serde::Serialize;

use super::kth_root_abs;
use crate::error::{Error, Result};
use crate::independence::IndependenceCertificate;
use crate::network::{NetworkTopology, Resource};
use crate::quantum::AngleModel;

/// Visibility thresholds for a network of Werner states.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VisibilityBound {
    /// `1 / (1 + Π c^(2/k))^(k/2)`: the product of visibilities at which the
    /// optimal `F` reaches 1 when every source enters `I` with its visibility.
    pub product_bound: f64,
    /// `1 / sqrt(1 + c_j²)` per source, in source order.
    pub per_state_bounds: Vec<f64>,
    pub k_used: usize,
    /// Common visibility `v` at which the optimal `F` of the constructed
    /// observables equals 1. Sources whose particles all carry identities in `I`
    /// do not lose visibility there, so `v^m` can sit below `product_bound`.
    pub uniform_threshold: f64,
}

/// Critical visibilities for Werner-state networks.
pub fn critical_visibility(net: &NetworkTopology, cert: &IndependenceCertificate) -> Result<VisibilityBound> {
    let mut c = Vec::with_capacity(net.n_sources());
    for s in net.sources() {
        let Resource::Werner(w) = &s.resource else {
            return Err(Error::Precondition(format!(
                "source '{}' is {}, visibility bounds need Werner states",
                s.id,
                s.resource.kind_name()
            )));
        };
        let (a, b) = w.base.amplitudes();
        c.push(2.0 * a * b);
    }
    let k = cert.k();
    if k == 0 {
        return Err(Error::Precondition("certificate has no independent party".into()));
    }
    let p = c.iter().product::<f64>();
    let product_bound = (1.0 + kth_root_abs(p, k).powi(2)).powf(-(k as f64) / 2.0);
    let per_state_bounds = c.iter().map(|c| 1.0 / (1.0 + c * c).sqrt()).collect();

    // the optimal F is nondecreasing in a common visibility
    let max_f = |v: f64| -> Result<f64> {
        let scaled = net.with_resources(|_, r| match r {
            Resource::Werner(w) => {
                let mut w = w.clone();
                w.visibility = v;
                Resource::Werner(w)
            }
            other => other.clone(),
        })?;
        let model = AngleModel::new(&scaled, cert)?;
        let z = kth_root_abs(model.p.iter().product::<f64>() * model.rest_i, k);
        let x = kth_root_abs(model.r.iter().product::<f64>() * model.rest_j, k);
        Ok(z.hypot(x))
    };
    let uniform_threshold = if max_f(1.0)? <= 1.0 {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if max_f(mid)? > 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    Ok(VisibilityBound { product_bound, per_state_bounds, k_used: k, uniform_threshold })
}

/// Sufficient condition for violation with Pauli-coefficient resources.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoisyCondition {
    /// `Π |w_{x…x}|^(2/k) + Π |w_{z…z}|^(2/k)` over all sources.
    pub lhs: f64,
    pub margin: f64,
    pub satisfied: bool,
    /// Every `x…x` and `z…z` coefficient is at least `√2/2`. This implies the
    /// main condition only when there are no more sources than independent parties.
    pub all_above_half_sqrt2: bool,
    /// Exact optimum of `F` for the constructed observables.
    pub optimal_f: f64,
}

/// Checks `Π |w_{x…x}|^(2/k) + Π |w_{z…z}|^(2/k) > 1` on an all-Pauli network.
pub fn noisy_sufficient(net: &NetworkTopology, cert: &IndependenceCertificate) -> Result<NoisyCondition> {
    let k = cert.k();
    if k == 0 {
        return Err(Error::Precondition("certificate has no independent party".into()));
    }
    let mut px = 1.0;
    let mut pz = 1.0;
    let mut simple = true;
    for s in net.sources() {
        let Resource::Pauli(p) = &s.resource else {
            return Err(Error::Precondition(format!(
                "source '{}' is {}, the condition needs Pauli-coefficient states",
                s.id,
                s.resource.kind_name()
            )));
        };
        for letter in ['x', 'z'] {
            let key = letter.to_string().repeat(p.arity);
            let Some(&w) = p.coefficients.get(&key) else {
                return Err(Error::Invalid(format!("source '{}' lacks coefficient '{key}'", s.id)));
            };
            simple &= w >= std::f64::consts::FRAC_1_SQRT_2;
            if letter == 'x' {
                px *= w;
            } else {
                pz *= w;
            }
        }
    }
    let lhs = kth_root_abs(px, k).powi(2) + kth_root_abs(pz, k).powi(2);
    let model = AngleModel::new(net, cert)?;
    let z = kth_root_abs(model.p.iter().product::<f64>() * model.rest_i, k);
    let x = kth_root_abs(model.r.iter().product::<f64>() * model.rest_j, k);
    Ok(NoisyCondition {
        lhs,
        margin: lhs - 1.0,
        satisfied: lhs > 1.0,
        all_above_half_sqrt2: simple,
        optimal_f: z.hypot(x),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{optimize_angles, DEFAULT_GRID};
    use crate::independence::kmax_exact;
    use crate::network::{gallery, Epr, PauliState, Werner, WernerBase};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn werner(c: f64, v: f64) -> Resource {
        let a = ((1.0 + (1.0 - c * c).sqrt()) / 2.0).sqrt();
        Resource::Werner(Werner { base: WernerBase::Epr(Epr { a, b: c / (2.0 * a) }), visibility: v })
    }

    fn bell_diagonal(c: f64) -> Resource {
        let mut m = BTreeMap::new();
        m.insert("xx".to_string(), c);
        m.insert("zz".to_string(), c);
        m.insert("yy".to_string(), -c);
        Resource::Pauli(PauliState { arity: 2, coefficients: m })
    }

    fn net(name: &str, r: Resource) -> (NetworkTopology, IndependenceCertificate) {
        let n = gallery(name).unwrap().with_resources(|_, _| r.clone()).unwrap();
        let cert = kmax_exact(&n, 20).unwrap();
        (n, cert)
    }

    #[test]
    fn bilocal_half() {
        let (n, cert) = net("chain(3)", werner(1.0, 1.0));
        let vb = critical_visibility(&n, &cert).unwrap();
        assert_eq!(vb.product_bound, 0.5);
        assert_eq!(vb.k_used, 2);
        assert!((vb.uniform_threshold - FRAC_1_SQRT_2).abs() < 1e-12);
        for b in &vb.per_state_bounds {
            assert!((b - FRAC_1_SQRT_2).abs() < 1e-15);
        }
    }

    #[test]
    fn four_parties_quarter() {
        let (n, cert) = net("chain(7)", werner(1.0, 1.0));
        assert_eq!(cert.k(), 4);
        let vb = critical_visibility(&n, &cert).unwrap();
        assert!((vb.product_bound - 0.25).abs() < 1e-15);
    }

    #[test]
    fn uniform_threshold_matches_product_bound_without_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let c = rng.random_range(0.1..=1.0);
            let (n, cert) = net("chain(3)", werner(c, 1.0));
            let vb = critical_visibility(&n, &cert).unwrap();
            let m = n.n_sources() as i32;
            assert!((vb.uniform_threshold.powi(m) - vb.product_bound).abs() < 1e-9);
            let at = n
                .with_resources(|_, _| werner(c, vb.product_bound.powf(1.0 / m as f64)))
                .unwrap();
            let opt = optimize_angles(&at, &cert, DEFAULT_GRID).unwrap();
            assert!((opt.evaluation.f - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn identity_sources_keep_their_visibility() {
        // chain(5): the middle independent party holds two particles, one carries
        // an identity in I, so I loses fewer visibility factors than J
        let (n, cert) = net("chain(5)", werner(1.0, 1.0));
        let vb = critical_visibility(&n, &cert).unwrap();
        assert!(vb.uniform_threshold.powi(n.n_sources() as i32) <= vb.product_bound + 1e-12);
    }

    #[test]
    fn product_bound_dominates_per_state_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 3..=8 {
            for _ in 0..20 {
                let base = gallery(&format!("chain({n})")).unwrap();
                let nn = base.with_resources(|_, _| werner(rng.random_range(1e-6..=1.0), 1.0)).unwrap();
                let cert = kmax_exact(&nn, 20).unwrap();
                let vb = critical_visibility(&nn, &cert).unwrap();
                let per: f64 = vb.per_state_bounds.iter().product();
                assert!(vb.product_bound >= per - 1e-15);
                assert!(vb.product_bound > 0.0 && vb.product_bound <= 1.0);
            }
        }
    }

    #[test]
    fn rejects_pure_states() {
        let (n, cert) = net("chain(3)", crate::network::epr_max());
        assert!(matches!(critical_visibility(&n, &cert), Err(Error::Precondition(_))));
        assert!(matches!(noisy_sufficient(&n, &cert), Err(Error::Precondition(_))));
    }

    #[test]
    fn pauli_examples() {
        let (n, cert) = net("chain(3)", bell_diagonal(1.0));
        let r = noisy_sufficient(&n, &cert).unwrap();
        assert!(r.satisfied && (r.margin - 1.0).abs() < 1e-15);
        assert!((r.optimal_f - SQRT_2).abs() < 1e-12);

        let (n, cert) = net("chain(3)", bell_diagonal(0.72));
        let r = noisy_sufficient(&n, &cert).unwrap();
        assert!(r.satisfied && r.all_above_half_sqrt2);
        assert!(r.optimal_f > 1.0);

        let (n, cert) = net("chain(3)", bell_diagonal(0.5));
        let r = noisy_sufficient(&n, &cert).unwrap();
        assert!(!r.satisfied);
        assert!((r.lhs - 0.5).abs() < 1e-15);
        assert!(r.optimal_f <= 1.0);
    }

    #[test]
    fn missing_coefficient() {
        let mut m = BTreeMap::new();
        m.insert("xx".to_string(), 0.5);
        let (n, cert) = net("chain(3)", Resource::Pauli(PauliState { arity: 2, coefficients: m }));
        assert!(matches!(noisy_sufficient(&n, &cert), Err(Error::Invalid(_))));
    }
}
