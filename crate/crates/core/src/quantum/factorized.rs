//! Correlators from per-resource scalars.
//!
//! The global state is a product over sources and every observable is a product of
//! per-source pieces, so each correlator is a product of single-source expectation
//! values. These are computed here in closed form for every resource kind.

use super::observables::{MeasurementAngles, PartitionIndex};
use crate::error::{Error, Result};
use crate::independence::IndependenceCertificate;
use crate::network::{NetworkTopology, Resource, WernerBase};

/// Single-source numbers entering the correlators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceFactors {
    /// Expectation of the source's `σz`-pattern (restricted to the `{0,1}` block
    /// for tail-carrying states).
    pub z: f64,
    /// Expectation of `σx` on every particle (restricted likewise).
    pub x: f64,
    /// Weight of the `{0,1}` block; 1 unless the state carries a tail.
    pub block: f64,
}

/// `a² + (−1)^w b²` for a two-term Schmidt state and a `σz`-string of weight `w`.
fn two_term_z(a: f64, b: f64, weight: usize) -> f64 {
    a * a + if weight % 2 == 0 { b * b } else { -b * b }
}

/// Factors of `resource` for the given `σz`-pattern (`true` = `σz`, `false` = identity).
pub fn source_factors(resource: &Resource, pattern: &[bool]) -> SourceFactors {
    let weight = pattern.iter().filter(|&&z| z).count();
    match resource {
        Resource::Epr(e) => SourceFactors { z: two_term_z(e.a, e.b, weight), x: 2.0 * e.a * e.b, block: 1.0 },
        Resource::Ghz(g) => SourceFactors {
            z: two_term_z(g.a_hat, g.b_hat, weight),
            x: 2.0 * g.a_hat * g.b_hat,
            block: 1.0,
        },
        Resource::Schmidt(s) => {
            let w = s.a * s.a + s.b * s.b;
            SourceFactors { z: two_term_z(s.a, s.b, weight), x: 2.0 * s.a * s.b, block: w }
        }
        Resource::Werner(wr) => {
            let (a, b) = wr.base.amplitudes();
            let v = wr.visibility;
            let noise_z = if weight == 0 { 1.0 } else { 0.0 };
            let x = match wr.base {
                WernerBase::Epr(_) | WernerBase::Ghz(_) => 2.0 * a * b,
            };
            SourceFactors { z: v * two_term_z(a, b, weight) + (1.0 - v) * noise_z, x: v * x, block: 1.0 }
        }
        Resource::Pauli(p) => {
            let zkey: String = pattern.iter().map(|&z| if z { 'z' } else { '1' }).collect();
            let xkey = "x".repeat(p.arity);
            SourceFactors { z: p.coefficient(&zkey), x: p.coefficient(&xkey), block: 1.0 }
        }
    }
}

/// Per-party and leftover contributions, `I = Π I_i · I_r`, `J = Π J_i · J_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct Contributions {
    pub party_i: Vec<f64>,
    pub party_j: Vec<f64>,
    pub rest_i: f64,
    pub rest_j: f64,
}

impl Contributions {
    pub fn i(&self) -> f64 {
        self.party_i.iter().product::<f64>() * self.rest_i
    }

    pub fn j(&self) -> f64 {
        self.party_j.iter().product::<f64>() * self.rest_j
    }
}

/// Per-party and leftover contributions to `I` and `J` at the given angles.
pub fn contributions(
    net: &NetworkTopology,
    part: &PartitionIndex,
    angles: &MeasurementAngles,
) -> Result<Contributions> {
    if angles.len() != part.k() {
        return Err(Error::Invalid(format!(
            "{} angles given for {} independent parties",
            angles.len(),
            part.k()
        )));
    }
    let f = |s: usize| source_factors(&net.sources()[s].resource, &part.z_pattern(s));
    let tail_mass = |sources: &[usize]| 1.0 - sources.iter().map(|&s| f(s).block).product::<f64>();
    let prod = |sources: &[usize], g: &dyn Fn(SourceFactors) -> f64| sources.iter().map(|&s| g(f(s))).product::<f64>();

    let mut party_i = Vec::with_capacity(part.k());
    let mut party_j = Vec::with_capacity(part.k());
    for (block, &theta) in part.blocks.iter().zip(angles.as_slice()) {
        let tail = tail_mass(&block.bipartite);
        let zb = prod(&block.bipartite, &|v| v.z);
        let xb = prod(&block.bipartite, &|v| v.x);
        let zm = prod(&block.multipartite, &|v| v.z);
        let xm = prod(&block.multipartite, &|v| v.x);
        party_i.push((theta.cos() * zb + tail) * zm);
        party_j.push(theta.sin() * xb * xm);
    }
    let tail = tail_mass(&part.unshared_bipartite);
    let rest_i = (prod(&part.unshared_bipartite, &|v| v.z) + tail) * prod(&part.unshared_multipartite, &|v| v.z);
    let rest_j = (prod(&part.unshared_bipartite, &|v| v.x) + tail) * prod(&part.unshared_multipartite, &|v| v.x);
    Ok(Contributions { party_i, party_j, rest_i, rest_j })
}

/// `I` and `J` as explicit functions of the angles:
/// `I = Π_i (p_i cos θ_i + q_i) · rest_i` and `J = Π_i r_i sin θ_i · rest_j`.
///
/// `q_i` is nonzero only when party `i` shares tail-carrying states.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleModel {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub rest_i: f64,
    pub rest_j: f64,
}

impl AngleModel {
    pub fn new(net: &NetworkTopology, cert: &IndependenceCertificate) -> Result<Self> {
        if cert.k() == 0 {
            return Err(Error::Precondition("certificate has no independent party".into()));
        }
        let part = PartitionIndex::new(net, cert)?;
        let k = part.k();
        let at0 = contributions(net, &part, &MeasurementAngles::uniform(0.0, k)?)?;
        let at90 = contributions(net, &part, &MeasurementAngles::uniform(std::f64::consts::FRAC_PI_2, k)?)?;
        Ok(Self {
            p: at0.party_i.iter().zip(&at90.party_i).map(|(a, b)| a - b).collect(),
            q: at90.party_i.clone(),
            r: at90.party_j.clone(),
            rest_i: at0.rest_i,
            rest_j: at0.rest_j,
        })
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    pub fn ij(&self, theta: &[f64]) -> (f64, f64) {
        let i = self
            .p
            .iter()
            .zip(&self.q)
            .zip(theta)
            .map(|((p, q), t)| p * t.cos() + q)
            .product::<f64>()
            * self.rest_i;
        let j = self.r.iter().zip(theta).map(|(r, t)| r * t.sin()).product::<f64>() * self.rest_j;
        (i, j)
    }

    /// Whether `I` is proportional to `Π cos θ_i` (no tail contribution).
    pub fn is_separable(&self) -> bool {
        self.q.iter().all(|&q| q.abs() < 1e-15)
    }
}

/// `(I, J)` from per-resource factors.
pub fn factorized_ij(
    net: &NetworkTopology,
    cert: &IndependenceCertificate,
    angles: &MeasurementAngles,
) -> Result<(f64, f64)> {
    if cert.k() == 0 {
        return Err(Error::Precondition("certificate has no independent party".into()));
    }
    let part = PartitionIndex::new(net, cert)?;
    let c = contributions(net, &part, angles)?;
    Ok((c.i(), c.j()))
}
