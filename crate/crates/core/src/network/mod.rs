//! Multi-source networks: parties, sources and the particle each party receives.

mod format;
mod gallery;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use format::{parse_network, serialize_network};
pub use gallery::{gallery, gallery_catalog, GalleryEntry};

/// Exact-normalization tolerance on the sum of squared amplitudes.
pub const NORM_TOL: f64 = 1e-9;
/// Inputs within this distance of unit norm are rescaled; beyond it they are rejected.
pub const RENORM_TOL: f64 = 1e-6;
/// Largest arity accepted for a Pauli-coefficient state (its density matrix is built densely).
pub const MAX_PAULI_ARITY: usize = 10;

/// Generalized EPR pair `a|00> + b|11>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Epr {
    pub a: f64,
    pub b: f64,
}

/// Bipartite state `a|00> + b|11> + Σ t_l |l+2, l+2>`.
///
/// Only the total tail mass matters for the observables built here, so the state is
/// realized on qutrits with a single extra level carrying `sqrt(Σ t_l²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schmidt {
    pub a: f64,
    pub b: f64,
    #[serde(rename = "tailWeights")]
    pub tail_weights: Vec<f64>,
}

/// Generalized GHZ state `â|0…0> + b̂|1…1>` on `arity ≥ 3` qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ghz {
    #[serde(rename = "aHat")]
    pub a_hat: f64,
    #[serde(rename = "bHat")]
    pub b_hat: f64,
    pub arity: usize,
}

/// Pure state underlying a Werner mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WernerBase {
    Epr(Epr),
    Ghz(Ghz),
}

/// `v |ψ><ψ| + (1 - v) I / d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Werner {
    pub base: WernerBase,
    pub visibility: f64,
}

/// `ρ = 2^-s Σ w_P σ_P` with `P` ranging over strings in `{1,x,y,z}^s`.
///
/// Missing strings have coefficient 0, except the all-identity string which is 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PauliState {
    pub arity: usize,
    pub coefficients: BTreeMap<String, f64>,
}

/// Quantum state emitted by one source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Resource {
    Epr(Epr),
    Schmidt(Schmidt),
    Ghz(Ghz),
    Werner(Werner),
    Pauli(PauliState),
}

/// Maximally entangled EPR pair.
pub fn epr_max() -> Resource {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Resource::Epr(Epr { a: h, b: h })
}

/// Maximally entangled GHZ state on `arity` qubits.
pub fn ghz_max(arity: usize) -> Resource {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Resource::Ghz(Ghz {
        a_hat: h,
        b_hat: h,
        arity,
    })
}

impl WernerBase {
    pub fn arity(&self) -> usize {
        match self {
            WernerBase::Epr(_) => 2,
            WernerBase::Ghz(g) => g.arity,
        }
    }

    /// The two Schmidt amplitudes of the base state.
    pub fn amplitudes(&self) -> (f64, f64) {
        match self {
            WernerBase::Epr(e) => (e.a, e.b),
            WernerBase::Ghz(g) => (g.a_hat, g.b_hat),
        }
    }
}

impl Resource {
    /// Number of particles the source emits.
    pub fn arity(&self) -> usize {
        match self {
            Resource::Epr(_) | Resource::Schmidt(_) => 2,
            Resource::Ghz(g) => g.arity,
            Resource::Werner(w) => w.base.arity(),
            Resource::Pauli(p) => p.arity,
        }
    }

    pub fn is_bipartite(&self) -> bool {
        self.arity() == 2
    }

    /// Local Hilbert dimension of each particle.
    pub fn local_dim(&self) -> usize {
        match self {
            Resource::Schmidt(_) => 3,
            _ => 2,
        }
    }

    /// Whether the state is pure (and represented by a vector).
    pub fn is_pure(&self) -> bool {
        matches!(
            self,
            Resource::Epr(_) | Resource::Schmidt(_) | Resource::Ghz(_)
        )
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Resource::Epr(_) => "epr",
            Resource::Schmidt(_) => "schmidt",
            Resource::Ghz(_) => "ghz",
            Resource::Werner(_) => "werner",
            Resource::Pauli(_) => "pauli",
        }
    }
}

/// One source: the resource it emits and the party receiving each particle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Source {
    pub id: String,
    pub resource: Resource,
    pub recipients: Vec<String>,
}

/// A validated network.
///
/// Construct with [`NetworkTopology::new`], [`parse_network`] or [`gallery`]; all
/// three run the same validation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetworkTopology {
    parties: Vec<String>,
    sources: Vec<Source>,
}

/// Location of one particle in the global tensor product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Particle {
    pub source: usize,
    /// Position within the source's recipient list.
    pub position: usize,
    pub party: usize,
    pub dim: usize,
}

impl NetworkTopology {
    /// Validates and normalizes the topology.
    pub fn new(parties: Vec<String>, mut sources: Vec<Source>) -> Result<Self> {
        if parties.len() < 2 {
            return invalid(format!(
                "a network needs at least 2 parties, got {}",
                parties.len()
            ));
        }
        if sources.is_empty() {
            return invalid("a network needs at least 1 source");
        }
        let mut seen = HashSet::new();
        for p in &parties {
            if p.is_empty() {
                return invalid("party identifiers must be non-empty");
            }
            if !seen.insert(p.as_str()) {
                return invalid(format!("duplicate party identifier '{p}'"));
            }
        }
        let mut seen_src = HashSet::new();
        let mut received = vec![false; parties.len()];
        for s in &mut sources {
            if s.id.is_empty() {
                return invalid("source identifiers must be non-empty");
            }
            if !seen_src.insert(s.id.clone()) {
                return invalid(format!("duplicate source identifier '{}'", s.id));
            }
            normalize_resource(&mut s.resource).map_err(|e| match e {
                Error::Invalid(m) => Error::Invalid(format!("source '{}': {m}", s.id)),
                other => other,
            })?;
            let arity = s.resource.arity();
            if s.recipients.len() != arity {
                return invalid(format!(
                    "source '{}': {} recipients listed but the {} resource has {} particles",
                    s.id,
                    s.recipients.len(),
                    s.resource.kind_name(),
                    arity
                ));
            }
            let mut local = HashSet::new();
            for r in &s.recipients {
                let Some(idx) = parties.iter().position(|p| p == r) else {
                    return invalid(format!(
                        "source '{}': recipient '{r}' is not a declared party",
                        s.id
                    ));
                };
                if !local.insert(idx) {
                    return invalid(format!(
                        "source '{}': party '{r}' receives more than one particle of the same source",
                        s.id
                    ));
                }
                received[idx] = true;
            }
        }
        if let Some(i) = received.iter().position(|r| !r) {
            return invalid(format!("party '{}' receives no particle", parties[i]));
        }
        Ok(Self { parties, sources })
    }

    pub fn parties(&self) -> &[String] {
        &self.parties
    }

    pub fn sources(&self) -> &[Source] {
        &self.sources
    }

    pub fn n_parties(&self) -> usize {
        self.parties.len()
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn party_index(&self, id: &str) -> Option<usize> {
        self.parties.iter().position(|p| p == id)
    }

    /// Recipients of source `s` as party indices.
    pub fn recipients(&self, s: usize) -> Vec<usize> {
        self.sources[s]
            .recipients
            .iter()
            .map(|r| self.party_index(r).expect("validated recipient"))
            .collect()
    }

    /// Sources delivering a particle to each party, ascending.
    pub fn party_sources(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.parties.len()];
        for s in 0..self.sources.len() {
            for p in self.recipients(s) {
                out[p].push(s);
            }
        }
        out
    }

    /// Particles in tensor order: source declaration order, then recipient order.
    pub fn particles(&self) -> Vec<Particle> {
        let mut out = Vec::new();
        for (s, src) in self.sources.iter().enumerate() {
            let dim = src.resource.local_dim();
            for (position, p) in self.recipients(s).into_iter().enumerate() {
                out.push(Particle {
                    source: s,
                    position,
                    party: p,
                    dim,
                });
            }
        }
        out
    }

    /// Index of the first particle of each source in tensor order.
    pub fn source_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.sources.len());
        let mut acc = 0;
        for s in &self.sources {
            off.push(acc);
            acc += s.resource.arity();
        }
        off
    }

    /// Total Hilbert-space dimension, saturating at `usize::MAX`.
    pub fn total_dim(&self) -> usize {
        self.particles()
            .iter()
            .fold(1usize, |acc, p| acc.saturating_mul(p.dim))
    }

    /// Same topology with every source's resource replaced by `f(source index, resource)`.
    pub fn with_resources(&self, mut f: impl FnMut(usize, &Resource) -> Resource) -> Result<Self> {
        let sources = self
            .sources
            .iter()
            .enumerate()
            .map(|(i, s)| Source {
                id: s.id.clone(),
                resource: f(i, &s.resource),
                recipients: s.recipients.clone(),
            })
            .collect();
        Self::new(self.parties.clone(), sources)
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return invalid(format!("amplitude {name} = {v} must be finite and non-negative"));
    }
    Ok(())
}

/// Returns the scale factor to apply to the amplitudes, or an error if too far from 1.
fn norm_scale(norm2: f64, what: &str) -> Result<f64> {
    let dev = (norm2 - 1.0).abs();
    if dev <= NORM_TOL {
        Ok(1.0)
    } else if dev <= RENORM_TOL {
        Ok(1.0 / norm2.sqrt())
    } else {
        invalid(format!(
            "normalization: {what} = {norm2} deviates from 1 by more than {RENORM_TOL}"
        ))
    }
}

fn normalize_epr(e: &mut Epr) -> Result<()> {
    check_nonneg("a", e.a)?;
    check_nonneg("b", e.b)?;
    let k = norm_scale(e.a * e.a + e.b * e.b, "a² + b²")?;
    e.a *= k;
    e.b *= k;
    Ok(())
}

fn normalize_ghz(g: &mut Ghz) -> Result<()> {
    if g.arity < 3 {
        return invalid(format!("GHZ arity must be at least 3, got {}", g.arity));
    }
    check_nonneg("aHat", g.a_hat)?;
    check_nonneg("bHat", g.b_hat)?;
    let k = norm_scale(g.a_hat * g.a_hat + g.b_hat * g.b_hat, "â² + b̂²")?;
    g.a_hat *= k;
    g.b_hat *= k;
    Ok(())
}

fn normalize_resource(r: &mut Resource) -> Result<()> {
    match r {
        Resource::Epr(e) => normalize_epr(e),
        Resource::Ghz(g) => normalize_ghz(g),
        Resource::Schmidt(s) => {
            check_nonneg("a", s.a)?;
            check_nonneg("b", s.b)?;
            for &t in &s.tail_weights {
                check_nonneg("tail weight", t)?;
            }
            let tail: f64 = s.tail_weights.iter().map(|t| t * t).sum();
            let k = norm_scale(s.a * s.a + s.b * s.b + tail, "a² + b² + Σ tail²")?;
            s.a *= k;
            s.b *= k;
            s.tail_weights.iter_mut().for_each(|t| *t *= k);
            Ok(())
        }
        Resource::Werner(w) => {
            if !(0.0..=1.0).contains(&w.visibility) {
                return invalid(format!(
                    "Werner visibility {} outside [0, 1]",
                    w.visibility
                ));
            }
            match &mut w.base {
                WernerBase::Epr(e) => normalize_epr(e),
                WernerBase::Ghz(g) => normalize_ghz(g),
            }
        }
        Resource::Pauli(p) => validate_pauli(p),
    }
}

fn validate_pauli(p: &PauliState) -> Result<()> {
    if p.arity < 2 {
        return invalid(format!("Pauli state arity must be at least 2, got {}", p.arity));
    }
    if p.arity > MAX_PAULI_ARITY {
        return Err(Error::ResourceLimit(format!(
            "Pauli state arity {} exceeds the supported maximum {MAX_PAULI_ARITY}",
            p.arity
        )));
    }
    for (key, &v) in &p.coefficients {
        if key.chars().count() != p.arity || !key.chars().all(|c| "1xyz".contains(c)) {
            return invalid(format!(
                "Pauli index '{key}' must be a string of length {} over 1,x,y,z",
                p.arity
            ));
        }
        if !v.is_finite() {
            return invalid(format!("Pauli coefficient '{key}' is not finite"));
        }
    }
    let id = "1".repeat(p.arity);
    if let Some(&v) = p.coefficients.get(&id) {
        if (v - 1.0).abs() > NORM_TOL {
            return invalid(format!(
                "Pauli coefficient of the identity '{id}' must be 1, got {v}"
            ));
        }
    }
    crate::quantum::check_pauli_psd(p)
}

impl PauliState {
    /// Coefficient of a Pauli string; the identity string is always 1.
    pub fn coefficient(&self, key: &str) -> f64 {
        if key.chars().all(|c| c == '1') {
            return 1.0;
        }
        self.coefficients.get(key).copied().unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src(id: &str, r: Resource, to: &[&str]) -> Source {
        Source {
            id: id.into(),
            resource: r,
            recipients: to.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn parties(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("A{i}")).collect()
    }

    #[test]
    fn rejects_isolated_party() {
        let e = NetworkTopology::new(parties(3), vec![src("S1", epr_max(), &["A1", "A2"])]);
        assert!(matches!(e, Err(Error::Invalid(m)) if m.contains("A3")));
    }

    #[test]
    fn rejects_arity_mismatch() {
        let e = NetworkTopology::new(parties(3), vec![src("S1", ghz_max(3), &["A1", "A2"])]);
        assert!(e.is_err());
    }

    #[test]
    fn rejects_repeated_recipient() {
        let e = NetworkTopology::new(parties(2), vec![src("S1", epr_max(), &["A1", "A1"])]);
        assert!(e.is_err());
    }

    #[test]
    fn renormalizes_only_close_inputs() {
        let near = Resource::Epr(Epr { a: 0.6, b: 0.8 + 2e-7 });
        let net = NetworkTopology::new(parties(2), vec![src("S1", near, &["A1", "A2"])]).unwrap();
        let Resource::Epr(e) = &net.sources()[0].resource else { unreachable!() };
        assert!((e.a * e.a + e.b * e.b - 1.0).abs() < 1e-15);

        let far = Resource::Epr(Epr { a: 0.9f64.sqrt(), b: 0.0 });
        let err = NetworkTopology::new(parties(2), vec![src("S1", far, &["A1", "A2"])]);
        assert!(matches!(err, Err(Error::Invalid(m)) if m.contains("normalization")));
    }

    #[test]
    fn ghz_arity_two_rejected() {
        let r = Resource::Ghz(Ghz { a_hat: 0.6, b_hat: 0.8, arity: 2 });
        assert!(NetworkTopology::new(parties(2), vec![src("S1", r, &["A1", "A2"])]).is_err());
    }

    #[test]
    fn particle_order_follows_sources_then_recipients() {
        let net = NetworkTopology::new(
            parties(3),
            vec![
                src("S1", epr_max(), &["A2", "A1"]),
                src("S2", epr_max(), &["A2", "A3"]),
            ],
        )
        .unwrap();
        let parts: Vec<usize> = net.particles().iter().map(|p| p.party).collect();
        assert_eq!(parts, vec![1, 0, 1, 2]);
        assert_eq!(net.source_offsets(), vec![0, 2]);
        assert_eq!(net.party_sources(), vec![vec![0], vec![0, 1], vec![1]]);
    }

    #[test]
    fn pauli_identity_must_be_one() {
        let mut c = BTreeMap::new();
        c.insert("11".to_string(), 0.5);
        let r = Resource::Pauli(PauliState { arity: 2, coefficients: c });
        assert!(NetworkTopology::new(parties(2), vec![src("S1", r, &["A1", "A2"])]).is_err());
    }
}
