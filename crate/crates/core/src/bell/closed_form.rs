//! Analytic maxima and witnessing angles.
//!
//! Without tail levels on the independent parties, `I = Z Π cos θ_i` and
//! `J = X Π sin θ_i`, and the maximum of `F` over all angle vectors is
//! `sqrt(|Z|^(2/k) + |X|^(2/k))`, reached at uniform angles. With tails only an
//! achievable value at uniform angles is known in closed form.

use serde::Serialize;

use super::{evaluate, optimize_angles, BellEvaluation, EvalMode};
use crate::error::{Error, Result};
use crate::independence::IndependenceCertificate;
use crate::network::{NetworkTopology, Resource};
use crate::quantum::{AngleModel, MeasurementAngles, PartitionIndex};

/// Resource classes with different analytic treatment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResourceFamily {
    /// Pure EPR, GHZ and Schmidt-block states.
    Pure,
    /// Werner states mixed with pure states without tails.
    Werner,
    /// Pauli-coefficient states (with any pure or Werner states, no tails).
    Pauli,
    /// Tail-carrying states mixed with noisy ones.
    Unsupported,
}

impl ResourceFamily {
    pub fn detect(net: &NetworkTopology) -> Self {
        let res = || net.sources().iter().map(|s| &s.resource);
        let has_tail = res().any(|r| matches!(r, Resource::Schmidt(s) if s.tail_weights.iter().any(|&t| t != 0.0)));
        let has_pauli = res().any(|r| matches!(r, Resource::Pauli(_)));
        let has_werner = res().any(|r| matches!(r, Resource::Werner(_)));
        match (has_tail, has_pauli, has_werner) {
            (_, false, false) => ResourceFamily::Pure,
            (true, _, _) => ResourceFamily::Unsupported,
            (false, true, _) => ResourceFamily::Pauli,
            (false, false, true) => ResourceFamily::Werner,
        }
    }
}

/// Per-party and leftover products of pure-state parameters.
///
/// `c = 2ab` for two-particle states and `ĉ = 2âb̂` for GHZ states. For party `i`,
/// `α_i = γ_i = Π (a² + b²)` and `β_i = Π c` over its two-particle states, and
/// `δ_i = β_i Π ĉ` includes its GHZ states. `α = γ` and `β` are the same products
/// over the two-particle states no independent party touches, `δ = β Π ĉ` over
/// untouched GHZ states.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedFormParams {
    pub c: Vec<f64>,
    pub c_hat: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_i: Vec<f64>,
    pub beta_i: Vec<f64>,
    pub gamma: f64,
    pub delta: f64,
    pub gamma_i: Vec<f64>,
    pub delta_i: Vec<f64>,
    pub alpha0: f64,
    pub beta0: f64,
    pub gamma0: f64,
    pub delta0: f64,
    /// `<B_1>` restricted to untouched states: `(1 − α + β) Π ĉ`.
    pub rest_x: f64,
}

fn pure_params(r: &Resource) -> Option<(f64, f64)> {
    match r {
        Resource::Epr(e) => Some((e.a * e.a + e.b * e.b, 2.0 * e.a * e.b)),
        Resource::Schmidt(s) => Some((s.a * s.a + s.b * s.b, 2.0 * s.a * s.b)),
        Resource::Ghz(g) => Some((1.0, 2.0 * g.a_hat * g.b_hat)),
        _ => None,
    }
}

impl ClosedFormParams {
    pub fn new(net: &NetworkTopology, cert: &IndependenceCertificate) -> Result<Self> {
        let mut block = Vec::with_capacity(net.n_sources());
        let mut cc = Vec::with_capacity(net.n_sources());
        for s in net.sources() {
            let Some((w, c)) = pure_params(&s.resource) else {
                return Err(Error::Precondition(format!(
                    "source '{}' is {}, closed-form parameters need pure states",
                    s.id,
                    s.resource.kind_name()
                )));
            };
            block.push(w);
            cc.push(c);
        }
        if cert.k() == 0 {
            return Err(Error::Precondition("certificate has no independent party".into()));
        }
        let part = PartitionIndex::new(net, cert)?;
        let prod = |v: &[f64], idx: &[usize]| idx.iter().map(|&s| v[s]).product::<f64>();
        let alpha_i: Vec<f64> = part.blocks.iter().map(|b| prod(&block, &b.bipartite)).collect();
        let beta_i: Vec<f64> = part.blocks.iter().map(|b| prod(&cc, &b.bipartite)).collect();
        let delta_i: Vec<f64> = part
            .blocks
            .iter()
            .zip(&beta_i)
            .map(|(b, beta)| beta * prod(&cc, &b.multipartite))
            .collect();
        let alpha = prod(&block, &part.unshared_bipartite);
        let beta = prod(&cc, &part.unshared_bipartite);
        let c_hat_rest = prod(&cc, &part.unshared_multipartite);
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let sources = net.sources();
        Ok(Self {
            c: (0..sources.len()).filter(|&s| sources[s].resource.is_bipartite()).map(|s| cc[s]).collect(),
            c_hat: (0..sources.len()).filter(|&s| !sources[s].resource.is_bipartite()).map(|s| cc[s]).collect(),
            alpha,
            beta,
            gamma: alpha,
            delta: beta * c_hat_rest,
            alpha0: max(&alpha_i),
            beta0: min(&beta_i),
            gamma0: max(&alpha_i),
            delta0: min(&delta_i),
            gamma_i: alpha_i.clone(),
            alpha_i,
            beta_i,
            delta_i,
            rest_x: (1.0 - alpha + beta) * c_hat_rest,
        })
    }

    /// `sqrt(γ0² + δ0² R²) − γ0 + 1` with `R` = [`Self::rest_x`].
    pub fn achievable_bound(&self) -> f64 {
        (self.gamma0.powi(2) + (self.delta0 * self.rest_x).powi(2)).sqrt() - self.gamma0 + 1.0
    }

    /// Uniform angle with `cos θ = γ0 / sqrt(γ0² + δ0² R²)`.
    pub fn achievable_angle(&self) -> f64 {
        (self.delta0 * self.rest_x).atan2(self.gamma0)
    }
}

/// Whether a closed-form value is the global maximum or a value reached at the
/// returned angles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedFormKind {
    Maximum,
    AchievableBound,
}

/// Result of [`closed_form_max`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedForm {
    pub value: f64,
    pub angles: Vec<f64>,
    pub kind: ClosedFormKind,
    pub family: ResourceFamily,
    /// Exact `F` at [`Self::angles`]; at least `value`.
    pub evaluated: f64,
}

/// `sqrt(z² + x²)` with `z = |Z|^(1/k)`, `x = |X|^(1/k)` and the uniform angle
/// attaining it.
fn separable_max(model: &AngleModel) -> (f64, f64) {
    let k = model.k();
    let z = super::kth_root_abs(model.p.iter().product::<f64>() * model.rest_i, k);
    let x = super::kth_root_abs(model.r.iter().product::<f64>() * model.rest_j, k);
    (z.hypot(x), x.atan2(z))
}

fn uniform(theta: f64, k: usize) -> Result<MeasurementAngles> {
    MeasurementAngles::uniform(theta.clamp(0.0, std::f64::consts::FRAC_PI_2), k)
}

/// Analytic optimum of `F` and its witnessing angles.
///
/// Pure and Werner families without tails give the exact maximum. Pure states
/// with tails on an independent party give the achievable bound
/// `sqrt(γ0² + δ0²(1 − α + β)² Π ĉ²) − γ0 + 1`.
pub fn closed_form_max(net: &NetworkTopology, cert: &IndependenceCertificate) -> Result<ClosedForm> {
    let family = ResourceFamily::detect(net);
    if matches!(family, ResourceFamily::Pauli | ResourceFamily::Unsupported) {
        return Err(Error::Precondition(format!(
            "no closed form for the {} resource family",
            match family {
                ResourceFamily::Pauli => "Pauli-coefficient",
                _ => "mixed tail and noisy",
            }
        )));
    }
    let model = AngleModel::new(net, cert)?;
    let k = model.k();
    let (value, theta, kind) = if model.is_separable() {
        let (v, t) = separable_max(&model);
        (v, t, ClosedFormKind::Maximum)
    } else {
        let params = ClosedFormParams::new(net, cert)?;
        (params.achievable_bound(), params.achievable_angle(), ClosedFormKind::AchievableBound)
    };
    let angles = uniform(theta, k)?;
    let (i, j) = model.ij(angles.as_slice());
    Ok(ClosedForm {
        value,
        angles: angles.as_slice().to_vec(),
        kind,
        family,
        evaluated: super::f_value(i, j, k),
    })
}

/// Angles used when the caller gives none: the analytic optimum where one is
/// known, otherwise the numerical optimum.
pub fn default_angles(net: &NetworkTopology, cert: &IndependenceCertificate) -> Result<MeasurementAngles> {
    let model = AngleModel::new(net, cert)?;
    if model.is_separable() {
        return uniform(separable_max(&model).1, model.k());
    }
    match ResourceFamily::detect(net) {
        ResourceFamily::Pure => uniform(ClosedFormParams::new(net, cert)?.achievable_angle(), model.k()),
        _ => MeasurementAngles::new(optimize_angles(net, cert, super::DEFAULT_GRID)?.angles),
    }
}

/// Result of [`small_theta_strategy`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmallTheta {
    pub evaluation: BellEvaluation,
    /// `2 δ0 (1 − α + β) Π ĉ`.
    pub threshold: f64,
    pub violated: bool,
}

/// Evaluates `F` at a small uniform angle `θ` below `2 δ0 R`.
pub fn small_theta_strategy(
    net: &NetworkTopology,
    cert: &IndependenceCertificate,
    theta: f64,
) -> Result<SmallTheta> {
    let params = ClosedFormParams::new(net, cert)?;
    let threshold = 2.0 * params.delta0 * params.rest_x;
    if params.rest_x <= 0.0 {
        return Err(Error::Precondition(format!(
            "untouched states give <B_1> = 0 (threshold {threshold})"
        )));
    }
    if !(0.0..threshold).contains(&theta) {
        return Err(Error::Precondition(format!(
            "θ = {theta} must lie in [0, {threshold})"
        )));
    }
    let angles = uniform(theta, cert.k())?;
    let evaluation = evaluate(net, cert, &angles, EvalMode::Factorized)?;
    let violated = evaluation.f > 1.0;
    Ok(SmallTheta { evaluation, threshold, violated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{Classification, DEFAULT_GRID};
    use crate::independence::kmax_exact;
    use crate::network::{gallery, Epr, Ghz, Schmidt, Werner, WernerBase};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    fn epr(a: f64) -> Resource {
        Resource::Epr(Epr { a, b: (1.0 - a * a).sqrt() })
    }

    fn with_all(name: &str, r: Resource) -> NetworkTopology {
        gallery(name).unwrap().with_resources(|_, _| r.clone()).unwrap()
    }

    fn brute_force(model: &AngleModel) -> f64 {
        // uniform scan; the maximum over uniform angles is a lower bound of the global one
        (0..=20000)
            .map(|s| {
                let t = s as f64 / 20000.0 * std::f64::consts::FRAC_PI_2;
                let (i, j) = model.ij(&vec![t; model.k()]);
                crate::bell::f_value(i, j, model.k())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn chain3_maximally_entangled() {
        let net = gallery("chain(3)").unwrap();
        let cert = kmax_exact(&net, 20).unwrap();
        let cf = closed_form_max(&net, &cert).unwrap();
        assert_eq!(cf.kind, ClosedFormKind::Maximum);
        assert!((cf.value - SQRT_2).abs() < 1e-12);
        for t in &cf.angles {
            assert!((t - FRAC_PI_4).abs() < 1e-12);
        }
    }

    #[test]
    fn chain3_partially_entangled() {
        let net = with_all("chain(3)", Resource::Epr(Epr { a: 0.8, b: 0.6 }));
        let cert = kmax_exact(&net, 20).unwrap();
        let cf = closed_form_max(&net, &cert).unwrap();
        let expect = (1.0f64 + 0.96 * 0.96).sqrt();
        assert!((cf.value - expect).abs() < 1e-12);
        assert!((cf.value - 1.38622).abs() < 1e-5);
        assert!((cf.evaluated - cf.value).abs() < 1e-12);
        let model = AngleModel::new(&net, &cert).unwrap();
        assert!(brute_force(&model) <= cf.value + 1e-12);
    }

    #[test]
    fn butterfly_default_angles_saturate() {
        let net = gallery("butterfly").unwrap();
        let cert = kmax_exact(&net, 20).unwrap();
        let th = default_angles(&net, &cert).unwrap();
        let e = evaluate(&net, &cert, &th, EvalMode::Factorized).unwrap();
        assert!((e.f - SQRT_2).abs() < 1e-12);
        assert_eq!(e.classification, Classification::Maximal);
    }

    #[test]
    fn vanishing_entanglement_gives_one() {
        let net = gallery("tri-ghz").unwrap();
        let net = net
            .with_resources(|_, r| match r {
                Resource::Ghz(g) => Resource::Ghz(Ghz { a_hat: 1.0, b_hat: 0.0, arity: g.arity }),
                other => other.clone(),
            })
            .unwrap();
        let cert = kmax_exact(&net, 20).unwrap();
        let cf = closed_form_max(&net, &cert).unwrap();
        assert!((cf.value - 1.0).abs() < 1e-12);

        let tails = gallery("chain(3)")
            .unwrap()
            .with_resources(|s, _| {
                if s == 0 {
                    Resource::Schmidt(Schmidt { a: 0.6, b: 0.0, tail_weights: vec![0.8] })
                } else {
                    epr(0.8)
                }
            })
            .unwrap();
        let cert = kmax_exact(&tails, 20).unwrap();
        let cf = closed_form_max(&tails, &cert).unwrap();
        assert_eq!(cf.kind, ClosedFormKind::AchievableBound);
        assert!((cf.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tail_bound_is_achieved_and_below_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for name in ["chain(3)", "chain(5)", "hybrid-multiloop(3)", "butterfly"] {
            let base = gallery(name).unwrap();
            for _ in 0..20 {
                let net = base
                    .with_resources(|_, r| {
                        if r.is_bipartite() {
                            let v = [rng.random_range(0.1..1.0), rng.random_range(0.1..1.0), rng.random_range(0.0..0.8f64)];
                            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                            Resource::Schmidt(Schmidt { a: v[0] / n, b: v[1] / n, tail_weights: vec![v[2] / n] })
                        } else {
                            let a: f64 = rng.random_range(0.3..1.0);
                            Resource::Ghz(Ghz { a_hat: a, b_hat: (1.0 - a * a).sqrt(), arity: r.arity() })
                        }
                    })
                    .unwrap();
                let cert = kmax_exact(&net, 20).unwrap();
                let p = ClosedFormParams::new(&net, &cert).unwrap();
                assert!(p.delta <= p.gamma + 1e-15);
                for i in 0..cert.k() {
                    assert!(0.0 <= p.beta_i[i] && p.beta_i[i] <= p.alpha_i[i] + 1e-15 && p.alpha_i[i] <= 1.0 + 1e-12);
                    assert!(0.0 <= p.delta_i[i] && p.delta_i[i] <= p.gamma_i[i] + 1e-15);
                }
                let cf = closed_form_max(&net, &cert).unwrap();
                assert!(cf.evaluated >= cf.value - 1e-12, "{name}: {} < {}", cf.evaluated, cf.value);
                let opt = optimize_angles(&net, &cert, DEFAULT_GRID).unwrap();
                assert!(opt.evaluation.f >= cf.value - 1e-9);
                assert!(opt.evaluation.f <= SQRT_2 + 1e-9);
            }
        }
    }

    #[test]
    fn exact_maximum_dominates_random_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = gallery("hybrid-star(4)").unwrap();
        for _ in 0..20 {
            let net = base
                .with_resources(|_, r| {
                    let a: f64 = rng.random_range(0.5..1.0);
                    let b = (1.0 - a * a).sqrt();
                    let pure = if r.is_bipartite() { WernerBase::Epr(Epr { a, b }) } else {
                        WernerBase::Ghz(Ghz { a_hat: a, b_hat: b, arity: r.arity() })
                    };
                    Resource::Werner(Werner { base: pure, visibility: rng.random_range(0.5..=1.0) })
                })
                .unwrap();
            let cert = kmax_exact(&net, 20).unwrap();
            let cf = closed_form_max(&net, &cert).unwrap();
            assert_eq!(cf.family, ResourceFamily::Werner);
            assert!((cf.evaluated - cf.value).abs() < 1e-12);
            let model = AngleModel::new(&net, &cert).unwrap();
            for _ in 0..50 {
                let th: Vec<f64> = (0..cert.k()).map(|_| rng.random_range(0.0..std::f64::consts::FRAC_PI_2)).collect();
                let (i, j) = model.ij(&th);
                assert!(crate::bell::f_value(i, j, cert.k()) <= cf.value + 1e-12);
            }
        }
    }

    #[test]
    fn monotone_in_entanglement() {
        let grid: Vec<f64> = (0..=20).map(|s| s as f64 / 20.0).collect();
        let net0 = gallery("chain(4)").unwrap();
        let cert = kmax_exact(&net0, 20).unwrap();
        let c_to_epr = |c: f64| {
            // a² = (1 + sqrt(1 − c²)) / 2 gives 2ab = c
            let a = ((1.0 + (1.0 - c * c).sqrt()) / 2.0).sqrt();
            Resource::Epr(Epr { a, b: c / (2.0 * a) })
        };
        for &c1 in &grid {
            for w in grid.windows(2) {
                let value = |c2: f64| {
                    let net = net0.with_resources(|s, _| c_to_epr(if s == 1 { c2 } else { c1 })).unwrap();
                    closed_form_max(&net, &cert).unwrap().value
                };
                assert!(value(w[1]) >= value(w[0]) - 1e-12);
            }
        }
    }

    #[test]
    fn pauli_has_no_closed_form() {
        let mut coeffs = std::collections::BTreeMap::new();
        coeffs.insert("xx".to_string(), 0.7);
        coeffs.insert("zz".to_string(), 0.7);
        coeffs.insert("yy".to_string(), -0.7);
        let net = with_all("chain(3)", Resource::Pauli(crate::network::PauliState { arity: 2, coefficients: coeffs }));
        let cert = kmax_exact(&net, 20).unwrap();
        assert!(matches!(closed_form_max(&net, &cert), Err(Error::Precondition(_))));
        let th = default_angles(&net, &cert).unwrap();
        assert!((th.as_slice()[0] - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn small_theta_examples() {
        let net = with_all("chain(3)", Resource::Epr(Epr { a: 0.8, b: 0.6 }));
        let cert = kmax_exact(&net, 20).unwrap();
        let probe = small_theta_strategy(&net, &cert, 0.0).unwrap();
        assert!((probe.evaluation.f - 1.0).abs() < 1e-15);
        assert!(!probe.violated);
        assert!((probe.threshold - 2.0 * 0.96).abs() < 1e-12);
        let half = small_theta_strategy(&net, &cert, probe.threshold / 2.0).unwrap();
        assert!(half.violated && half.evaluation.f > 1.0);
        let err = small_theta_strategy(&net, &cert, probe.threshold + 0.01).unwrap_err();
        assert!(err.to_string().contains(&probe.threshold.to_string()));

        let product = with_all("chain(3)", Resource::Epr(Epr { a: 1.0, b: 0.0 }));
        assert!(matches!(small_theta_strategy(&product, &cert, 0.01), Err(Error::Precondition(_))));

        let max = gallery("chain(3)").unwrap();
        let s = small_theta_strategy(&max, &cert, 0.5).unwrap();
        assert!(s.violated);
        assert!((s.threshold - 2.0).abs() < 1e-12);
    }
}
