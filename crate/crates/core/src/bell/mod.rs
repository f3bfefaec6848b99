//! The nonlinear functional `F = |I|^(1/k) + |J|^(1/k)` and its analysis.
//!
//! Every `k`-local classical model obeys `F ≤ 1`; the observables built in
//! [`crate::quantum`] never exceed `F = √2`.

mod closed_form;
mod noise;
mod optimize;

pub use closed_form::{
    closed_form_max, default_angles, small_theta_strategy, ClosedForm, ClosedFormKind,
    ClosedFormParams, ResourceFamily, SmallTheta,
};
pub use noise::{critical_visibility, noisy_sufficient, NoisyCondition, VisibilityBound};
pub use optimize::{optimize_angles, Optimized, DEFAULT_GRID};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::independence::IndependenceCertificate;
use crate::network::NetworkTopology;
use crate::quantum::{factorized_ij, tensor_ij, MeasurementAngles, DEFAULT_DIM_CAP};

/// Tolerance used when classifying `F` against the bounds 1 and √2.
pub const CLASSIFY_EPS: f64 = 1e-6;

/// Where `F` sits relative to the classical and quantum bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// `F ≤ 1 + ε`.
    NoViolation,
    /// `1 + ε < F < √2 − ε`.
    Violation,
    /// `|F − √2| ≤ ε`.
    Maximal,
    /// `F > √2 + ε`; never produced by the quantum engine.
    ExceedsQuantumBound,
}

impl Classification {
    pub fn of(f: f64, eps: f64) -> Self {
        let s2 = std::f64::consts::SQRT_2;
        if (f - s2).abs() <= eps {
            Classification::Maximal
        } else if f <= 1.0 + eps {
            Classification::NoViolation
        } else if f < s2 {
            Classification::Violation
        } else {
            Classification::ExceedsQuantumBound
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Classification::NoViolation => "no-violation",
            Classification::Violation => "violation",
            Classification::Maximal => "maximal",
            Classification::ExceedsQuantumBound => "exceeds-quantum-bound",
        }
    }
}

/// How `I` and `J` were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    Factorized,
    FullTensor,
    Lhv,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed-form",
            Provenance::Factorized => "factorized",
            Provenance::FullTensor => "full-tensor",
            Provenance::Lhv => "lhv",
        }
    }
}

/// One value of the functional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellEvaluation {
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub k: usize,
    #[serde(rename = "F")]
    pub f: f64,
    pub classification: Classification,
    pub provenance: Provenance,
    /// Angles of the independent parties, when the value comes from observables.
    pub angles: Option<Vec<f64>>,
}

impl BellEvaluation {
    pub fn new(i: f64, j: f64, k: usize, provenance: Provenance, angles: Option<Vec<f64>>) -> Result<Self> {
        if k < 1 {
            return Err(Error::Invalid("k must be at least 1".into()));
        }
        if !i.is_finite() || !j.is_finite() {
            return Err(Error::Numerical(format!("non-finite correlators I={i}, J={j}")));
        }
        let f = f_value(i, j, k);
        Ok(Self {
            i,
            j,
            k,
            f,
            classification: Classification::of(f, CLASSIFY_EPS),
            provenance,
            angles,
        })
    }

    /// Whether `F` breaks the classical bound.
    pub fn violates(&self) -> bool {
        matches!(
            self.classification,
            Classification::Violation | Classification::Maximal | Classification::ExceedsQuantumBound
        )
    }
}

/// `|x|^(1/k)` as `exp(ln|x| / k)`, with 0 mapped to 0.
pub fn kth_root_abs(x: f64, k: usize) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        (x.abs().ln() / k as f64).exp()
    }
}

/// `|I|^(1/k) + |J|^(1/k)`.
pub fn f_value(i: f64, j: f64, k: usize) -> f64 {
    kth_root_abs(i, k) + kth_root_abs(j, k)
}

/// Wraps caller-supplied `I`, `J` (tagged closed-form).
pub fn bell_value(i: f64, j: f64, k: usize) -> Result<BellEvaluation> {
    BellEvaluation::new(i, j, k, Provenance::ClosedForm, None)
}

/// Which engine computes the quantum correlators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    Factorized,
    FullTensor,
}

/// Quantum `F` at the given angles.
pub fn evaluate(
    net: &NetworkTopology,
    cert: &IndependenceCertificate,
    angles: &MeasurementAngles,
    mode: EvalMode,
) -> Result<BellEvaluation> {
    evaluate_with_cap(net, cert, angles, mode, DEFAULT_DIM_CAP)
}

/// [`evaluate`] with an explicit dimension cap for the full-tensor path.
pub fn evaluate_with_cap(
    net: &NetworkTopology,
    cert: &IndependenceCertificate,
    angles: &MeasurementAngles,
    mode: EvalMode,
    dim_cap: usize,
) -> Result<BellEvaluation> {
    let ((i, j), provenance) = match mode {
        EvalMode::Factorized => (factorized_ij(net, cert, angles)?, Provenance::Factorized),
        EvalMode::FullTensor => (tensor_ij(net, cert, angles, dim_cap)?, Provenance::FullTensor),
    };
    BellEvaluation::new(i, j, cert.k(), provenance, Some(angles.as_slice().to_vec()))
}

/// Checks `(Π sin θ_i)^(1/n) ≤ sin(mean θ)` within 1e-12 for `θ ∈ [0, π]^n`.
pub fn sine_mean_check(theta: &[f64]) -> Result<bool> {
    if theta.is_empty() {
        return Err(Error::Invalid("empty angle list".into()));
    }
    if let Some(t) = theta.iter().find(|t| !(0.0..=std::f64::consts::PI).contains(*t)) {
        return Err(Error::Invalid(format!("angle {t} outside [0, π]")));
    }
    let n = theta.len();
    let lhs = kth_root_abs(theta.iter().map(|t| t.sin()).product(), n);
    let mean = theta.iter().sum::<f64>() / n as f64;
    Ok(lhs <= mean.sin() + 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::independence::kmax_exact;
    use crate::network::{gallery, Epr, Resource, Werner, WernerBase};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

    #[test]
    fn bell_value_examples() {
        let e = bell_value(0.5, 0.5, 2).unwrap();
        assert!((e.f - SQRT_2).abs() < 1e-15);
        assert_eq!(e.classification, Classification::Maximal);

        let e = bell_value(1.0, 0.0, 3).unwrap();
        assert_eq!(e.f, 1.0);
        assert_eq!(e.classification, Classification::NoViolation);

        let e = bell_value(0.6, 0.3, 2).unwrap();
        let expect = 0.6f64.sqrt() + 0.3f64.sqrt();
        assert!((e.f - expect).abs() < 1e-15);
        assert!((e.f - 1.3224).abs() < 1e-4);
        assert_eq!(e.classification, Classification::Violation);

        assert!(bell_value(0.1, 0.1, 0).is_err());
        assert_eq!(bell_value(0.0, 0.0, 4).unwrap().f, 0.0);
        assert_eq!(bell_value(-1.0, 1.0, 2).unwrap().classification, Classification::ExceedsQuantumBound);
    }

    #[test]
    fn classification_boundaries() {
        assert_eq!(Classification::of(1.0 + 1e-7, 1e-6), Classification::NoViolation);
        assert_eq!(Classification::of(1.0 + 1e-5, 1e-6), Classification::Violation);
        assert_eq!(Classification::of(SQRT_2 - 1e-7, 1e-6), Classification::Maximal);
        assert_eq!(Classification::of(SQRT_2 + 1e-7, 1e-6), Classification::Maximal);
        assert_eq!(Classification::of(SQRT_2 + 1e-5, 1e-6), Classification::ExceedsQuantumBound);
    }

    #[test]
    fn json_field_names() {
        let e = bell_value(0.5, 0.5, 2).unwrap();
        let v = serde_json::to_value(&e).unwrap();
        for key in ["I", "J", "k", "F", "classification", "provenance", "angles"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["classification"], "maximal");
        assert_eq!(v["provenance"], "closed-form");
        let back: BellEvaluation = serde_json::from_value(v).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn chain3_epr_saturates_on_both_paths() {
        let net = gallery("chain(3)").unwrap();
        let cert = kmax_exact(&net, 20).unwrap();
        let th = MeasurementAngles::uniform(FRAC_PI_4, 2).unwrap();
        for mode in [EvalMode::Factorized, EvalMode::FullTensor] {
            let e = evaluate(&net, &cert, &th, mode).unwrap();
            assert!((e.f - SQRT_2).abs() < 1e-9, "{mode:?}: {}", e.f);
            assert_eq!(e.classification, Classification::Maximal);
        }
    }

    #[test]
    fn product_states_never_violate() {
        let net = gallery("chain(3)")
            .unwrap()
            .with_resources(|_, _| Resource::Epr(Epr { a: 1.0, b: 0.0 }))
            .unwrap();
        let cert = kmax_exact(&net, 20).unwrap();
        for t in [0.0, 0.3, FRAC_PI_4, 1.2, FRAC_PI_2] {
            let e = evaluate(&net, &cert, &MeasurementAngles::uniform(t, 2).unwrap(), EvalMode::Factorized).unwrap();
            assert_eq!(e.j, 0.0);
            assert!(e.f <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn sine_mean_examples() {
        assert!(sine_mean_check(&[PI / 3.0, PI / 3.0]).unwrap());
        let lhs = (PI / 3.0).sin();
        assert!((lhs - (PI / 3.0).sin()).abs() < 1e-12);
        assert!(sine_mean_check(&[0.0, FRAC_PI_2]).unwrap());
        assert!(sine_mean_check(&[-0.1]).is_err());
        assert!(sine_mean_check(&[4.0]).is_err());
        assert!(sine_mean_check(&[]).is_err());
    }

    fn werner_chain(n: usize, v: f64) -> NetworkTopology {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        gallery(&format!("chain({n})"))
            .unwrap()
            .with_resources(|_, _| {
                Resource::Werner(Werner { base: WernerBase::Epr(Epr { a: h, b: h }), visibility: v })
            })
            .unwrap()
    }

    proptest! {
        #[test]
        fn sine_mean_random(theta in prop::collection::vec(0.0..PI, 1..7)) {
            prop_assert!(sine_mean_check(&theta).unwrap());
        }

        #[test]
        fn sine_mean_equality(t in 0.0..PI, n in 1usize..7) {
            let theta = vec![t; n];
            let lhs = kth_root_abs(theta.iter().map(|x| x.sin()).product(), n);
            prop_assert!((lhs - t.sin()).abs() < 1e-12);
        }

        #[test]
        fn recomputed_f_matches(i in -1.0..1.0f64, j in -1.0..1.0f64, k in 1usize..8) {
            let e = bell_value(i, j, k).unwrap();
            prop_assert_eq!(e.f, f_value(e.i, e.j, e.k));
            prop_assert_eq!(e.classification, Classification::of(e.f, CLASSIFY_EPS));
        }

        #[test]
        fn werner_chain_never_exceeds_tsirelson(
            n in 3usize..7,
            v in 0.0..=1.0f64,
            theta in prop::collection::vec(0.0..=FRAC_PI_2, 4),
        ) {
            let net = werner_chain(n, v);
            let cert = kmax_exact(&net, 20).unwrap();
            let th = MeasurementAngles::new(theta[..cert.k()].to_vec()).unwrap();
            let e = evaluate(&net, &cert, &th, EvalMode::Factorized).unwrap();
            prop_assert!(e.f <= SQRT_2 + 1e-9);
        }
    }
}
