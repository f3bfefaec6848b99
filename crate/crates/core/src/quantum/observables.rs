//! Dichotomic observables for the independent parties `A_i` and the rest `B`.
//!
//! Each independent party measures `cos θ Z + (−1)^x sin θ X` on its particles,
//! where `X` is `σx` on every particle and `Z` is `σz` on every particle except one
//! identity when the party holds an even number of particles (so that `Z` and `X`
//! anticommute). `B` measures `σz`-strings for `y = 0` and `σx`-strings for `y = 1`;
//! its `σz`-strings are chosen per source so that the total number of `σz` on that
//! source is even and otherwise as large as possible.
//!
//! Schmidt-block resources carry an extra level (tail). Observables on a group of
//! bipartite particles containing such a level act on the `{0,1}` block as above
//! and on the tail sector as the identity on the bipartite particles, tensored with
//! the party's GHZ `σz`-string.

use nalgebra::DMatrix;

use super::linalg::{c, kron_all, pauli, DenseOperator};
use super::state::LocalFactor;
use crate::error::{Error, Result};
use crate::independence::IndependenceCertificate;
use crate::network::NetworkTopology;

/// Measurement angles of the independent parties, in certificate order.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementAngles(Vec<f64>);

impl MeasurementAngles {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        let hi = std::f64::consts::FRAC_PI_2;
        for &t in &theta {
            if !(0.0..=hi + 1e-12).contains(&t) {
                return Err(Error::Invalid(format!("angle {t} outside [0, π/2]")));
            }
        }
        Ok(Self(theta.into_iter().map(|t| t.min(hi)).collect()))
    }

    pub fn uniform(theta: f64, k: usize) -> Result<Self> {
        Self::new(vec![theta; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Particle bookkeeping for one independent party.
#[derive(Clone, Debug, PartialEq)]
pub struct PartyBlock {
    pub party: usize,
    /// Bipartite sources shared with `B` (`ℓ_i` of them), ascending.
    pub bipartite: Vec<usize>,
    /// Multipartite sources shared with `B` (`ℓ̂_i` of them), ascending.
    pub multipartite: Vec<usize>,
    /// The party's particle slots, ascending.
    pub slots: Vec<usize>,
    /// Source whose particle gets the identity in the `Z`-string (even `K_i` only).
    pub identity_source: Option<usize>,
    /// `t_i`: bipartite sources of parties up to and including this one.
    pub t: usize,
    /// `t̂_i`: multipartite sources of parties up to and including this one.
    pub t_hat: usize,
    /// `N_i`: particles held by `B` on this party's multipartite sources.
    pub n_b: usize,
}

impl PartyBlock {
    pub fn ell(&self) -> usize {
        self.bipartite.len()
    }

    pub fn ell_hat(&self) -> usize {
        self.multipartite.len()
    }

    /// `L_i`: multipartite particles held by the party (one per source).
    pub fn l(&self) -> usize {
        self.multipartite.len()
    }

    /// `K_i = ℓ_i + L_i`.
    pub fn k_particles(&self) -> usize {
        self.slots.len()
    }
}

/// Partition of the network's sources between independent parties and `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionIndex {
    pub blocks: Vec<PartyBlock>,
    /// Bipartite sources not touching any independent party.
    pub unshared_bipartite: Vec<usize>,
    /// Multipartite sources not touching any independent party.
    pub unshared_multipartite: Vec<usize>,
    /// `N`: particles on unshared multipartite sources.
    pub n_unshared: usize,
    /// Independent party receiving each source, if any.
    owner: Vec<Option<usize>>,
    offsets: Vec<usize>,
    recipients: Vec<Vec<usize>>,
    dims: Vec<usize>,
}

impl PartitionIndex {
    pub fn new(net: &NetworkTopology, cert: &IndependenceCertificate) -> Result<Self> {
        let sets = net.party_sources();
        let mut owner = vec![None; net.n_sources()];
        for &p in &cert.parties {
            if p >= net.n_parties() {
                return Err(Error::Invalid(format!("certificate party {p} out of range")));
            }
            for &s in &sets[p] {
                if owner[s].is_some() {
                    return Err(Error::Invalid(format!(
                        "source '{}' reaches two certified parties",
                        net.sources()[s].id
                    )));
                }
                owner[s] = Some(p);
            }
        }
        let offsets = net.source_offsets();
        let recipients: Vec<Vec<usize>> = (0..net.n_sources()).map(|s| net.recipients(s)).collect();
        let mut blocks = Vec::new();
        let (mut t, mut t_hat) = (0, 0);
        for &p in &cert.parties {
            let mut bip = Vec::new();
            let mut multi = Vec::new();
            let mut slots = Vec::new();
            let mut n_b = 0;
            for &s in &sets[p] {
                let pos = recipients[s].iter().position(|&q| q == p).unwrap();
                slots.push(offsets[s] + pos);
                if net.sources()[s].resource.is_bipartite() {
                    bip.push(s);
                } else {
                    multi.push(s);
                    n_b += recipients[s].len() - 1;
                }
            }
            t += bip.len();
            t_hat += multi.len();
            let identity_source = if slots.len() % 2 == 0 {
                bip.last().or(multi.last()).copied()
            } else {
                None
            };
            blocks.push(PartyBlock {
                party: p,
                bipartite: bip,
                multipartite: multi,
                slots,
                identity_source,
                t,
                t_hat,
                n_b,
            });
        }
        let mut unshared_bipartite = Vec::new();
        let mut unshared_multipartite = Vec::new();
        let mut n_unshared = 0;
        for s in 0..net.n_sources() {
            if owner[s].is_none() {
                if net.sources()[s].resource.is_bipartite() {
                    unshared_bipartite.push(s);
                } else {
                    unshared_multipartite.push(s);
                    n_unshared += recipients[s].len();
                }
            }
        }
        Ok(Self {
            blocks,
            unshared_bipartite,
            unshared_multipartite,
            n_unshared,
            owner,
            offsets,
            recipients,
            dims: net.sources().iter().map(|s| s.resource.local_dim()).collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn owner(&self, source: usize) -> Option<usize> {
        self.owner[source]
    }

    fn block_of(&self, party: usize) -> &PartyBlock {
        self.blocks.iter().find(|b| b.party == party).unwrap()
    }

    /// `σz` (true) or identity (false) on each particle of `source`, recipient order,
    /// in the `y = 0` setting. Positions held by an independent party describe its
    /// `Z`-string.
    pub fn z_pattern(&self, source: usize) -> Vec<bool> {
        let rec = &self.recipients[source];
        let mut pat = vec![true; rec.len()];
        match self.owner[source] {
            Some(p) => {
                let a_pos = rec.iter().position(|&q| q == p).unwrap();
                let a_z = self.block_of(p).identity_source != Some(source);
                pat[a_pos] = a_z;
                let b_count = rec.len() - 1;
                if (b_count + a_z as usize) % 2 == 1 {
                    let last_b = (0..rec.len()).rev().find(|&i| i != a_pos).unwrap();
                    pat[last_b] = false;
                }
            }
            None => {
                if rec.len() % 2 == 1 {
                    *pat.last_mut().unwrap() = false;
                }
            }
        }
        pat
    }

    fn slot(&self, source: usize, position: usize) -> usize {
        self.offsets[source] + position
    }

    fn has_tail(&self, source: usize) -> bool {
        self.dims[source] == 3
    }
}

/// Embeds a qubit operator on `dims.len()` slots into the space where some slots are
/// qutrits: the `{0,1}^n` block carries `m`, every index with a level-2 digit is
/// mapped to itself with sign `tail_sign(digits)`.
/// Largest dimension of a single dense local operator.
pub const MAX_LOCAL_DIM: usize = 1 << 10;

fn embed(
    m: &DenseOperator,
    dims: &[usize],
    tail_sign: impl Fn(&[usize]) -> f64,
) -> Result<DenseOperator> {
    let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    let total = match total {
        Some(t) if t <= MAX_LOCAL_DIM => t,
        _ => {
            return Err(Error::ResourceLimit(format!(
                "local operator on {} slots exceeds dimension {MAX_LOCAL_DIM}",
                dims.len()
            )))
        }
    };
    if dims.iter().all(|&d| d == 2) {
        return Ok(m.clone());
    }
    let digits = |mut g: usize| {
        let mut d = vec![0; dims.len()];
        for i in (0..dims.len()).rev() {
            d[i] = g % dims[i];
            g /= dims[i];
        }
        d
    };
    let binary = |d: &[usize]| d.iter().fold(0usize, |acc, &x| acc * 2 + x);
    let all_digits: Vec<Vec<usize>> = (0..total).map(digits).collect();
    let mut out = DMatrix::from_element(total, total, c(0.0));
    for (i, di) in all_digits.iter().enumerate() {
        if di.iter().any(|&x| x == 2) {
            out[(i, i)] = c(tail_sign(di));
            continue;
        }
        for (j, dj) in all_digits.iter().enumerate() {
            if dj.iter().all(|&x| x < 2) {
                out[(i, j)] = m[(binary(di), binary(dj))];
            }
        }
    }
    Ok(out)
}

/// `A_{x}` for the independent party of `block`.
pub fn build_a(
    net: &NetworkTopology,
    part: &PartitionIndex,
    block: &PartyBlock,
    x: u8,
    theta: f64,
) -> Result<LocalFactor> {
    if x > 1 {
        return Err(Error::Invalid(format!("setting {x} is not a bit")));
    }
    let mut sources: Vec<usize> = block.bipartite.iter().chain(&block.multipartite).copied().collect();
    sources.sort_unstable();
    if sources.len() != block.slots.len() {
        return Err(Error::Invalid("partition inconsistent with the party's slots".into()));
    }
    let z_ops: Vec<DenseOperator> = sources
        .iter()
        .map(|&s| pauli(if block.identity_source == Some(s) { '1' } else { 'z' }))
        .collect();
    let x_ops: Vec<DenseOperator> = sources.iter().map(|_| pauli('x')).collect();
    let sign = if x == 0 { 1.0 } else { -1.0 };
    let m = kron_all(&z_ops) * c(theta.cos()) + kron_all(&x_ops) * c(sign * theta.sin());
    let dims: Vec<usize> = sources.iter().map(|&s| part.dims[s]).collect();
    let multipartite: Vec<bool> = sources
        .iter()
        .map(|&s| !net.sources()[s].resource.is_bipartite())
        .collect();
    let z_on: Vec<bool> = sources.iter().map(|&s| block.identity_source != Some(s)).collect();
    let op = embed(&m, &dims, |d| {
        let flips = (0..d.len())
            .filter(|&i| multipartite[i] && z_on[i] && d[i] == 1)
            .count();
        if flips % 2 == 0 { 1.0 } else { -1.0 }
    })?;
    Ok(LocalFactor {
        slots: block.slots.clone(),
        op,
    })
}

/// One factor per slot or, for groups holding a tail level, one joint factor.
fn group_factors(
    part: &PartitionIndex,
    entries: &[(usize, usize, char)],
    joint: bool,
) -> Result<Vec<LocalFactor>> {
    if entries.is_empty() {
        return Ok(Vec::new());
    }
    if !joint {
        return Ok(entries
            .iter()
            .map(|&(s, pos, ch)| LocalFactor {
                slots: vec![part.slot(s, pos)],
                op: pauli(ch),
            })
            .collect());
    }
    let ops: Vec<DenseOperator> = entries.iter().map(|&(_, _, ch)| pauli(ch)).collect();
    let dims: Vec<usize> = entries.iter().map(|&(s, _, _)| part.dims[s]).collect();
    Ok(vec![LocalFactor {
        slots: entries.iter().map(|&(s, pos, _)| part.slot(s, pos)).collect(),
        op: embed(&kron_all(&ops), &dims, |_| 1.0)?,
    }])
}

/// `B`'s operators for setting `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct BOperators {
    /// `B_{i,y}` for each independent party, in certificate order.
    pub per_party: Vec<Vec<LocalFactor>>,
    /// `B_{r,y}` on sources shared with no independent party; empty means the scalar 1.
    pub rest: Vec<LocalFactor>,
}

impl BOperators {
    pub fn all(&self) -> impl Iterator<Item = &LocalFactor> {
        self.per_party.iter().flatten().chain(&self.rest)
    }
}

/// `B_{i,y}` and `B_{r,y}`.
pub fn build_b(part: &PartitionIndex, y: u8) -> Result<BOperators> {
    if y > 1 {
        return Err(Error::Invalid(format!("setting {y} is not a bit")));
    }
    let label = |s: usize, pos: usize| -> char {
        if y == 1 {
            'x'
        } else if part.z_pattern(s)[pos] {
            'z'
        } else {
            '1'
        }
    };
    let b_positions = |s: usize| -> Vec<usize> {
        let owner = part.owner[s];
        (0..part.recipients[s].len())
            .filter(|&i| Some(part.recipients[s][i]) != owner)
            .collect()
    };
    let mut per_party = Vec::new();
    for block in &part.blocks {
        let bip: Vec<(usize, usize, char)> = block
            .bipartite
            .iter()
            .flat_map(|&s| b_positions(s).into_iter().map(move |p| (s, p)))
            .map(|(s, p)| (s, p, label(s, p)))
            .collect();
        let joint = block.bipartite.iter().any(|&s| part.has_tail(s));
        let mut factors = group_factors(part, &bip, joint)?;
        for &s in &block.multipartite {
            let e: Vec<(usize, usize, char)> =
                b_positions(s).into_iter().map(|p| (s, p, label(s, p))).collect();
            factors.extend(group_factors(part, &e, false)?);
        }
        per_party.push(factors);
    }
    let bip: Vec<(usize, usize, char)> = part
        .unshared_bipartite
        .iter()
        .flat_map(|&s| (0..2).map(move |p| (s, p)))
        .map(|(s, p)| (s, p, label(s, p)))
        .collect();
    let joint = part.unshared_bipartite.iter().any(|&s| part.has_tail(s));
    let mut rest = group_factors(part, &bip, joint)?;
    for &s in &part.unshared_multipartite {
        let e: Vec<(usize, usize, char)> = (0..part.recipients[s].len())
            .map(|p| (s, p, label(s, p)))
            .collect();
        rest.extend(group_factors(part, &e, false)?);
    }
    Ok(BOperators { per_party, rest })
}

/// Every operator needed for the Bell functionals.
#[derive(Clone, Debug)]
pub struct ObservableSet {
    pub partition: PartitionIndex,
    pub angles: MeasurementAngles,
    /// `[A_0, A_1]` per independent party, in certificate order.
    pub a: Vec<[LocalFactor; 2]>,
    /// `B` for `y = 0` and `y = 1`.
    pub b: [BOperators; 2],
}

impl ObservableSet {
    pub fn new(
        net: &NetworkTopology,
        cert: &IndependenceCertificate,
        angles: &MeasurementAngles,
    ) -> Result<Self> {
        let partition = PartitionIndex::new(net, cert)?;
        if angles.len() != partition.k() {
            return Err(Error::Invalid(format!(
                "{} angles given for {} independent parties",
                angles.len(),
                partition.k()
            )));
        }
        let a = partition
            .blocks
            .iter()
            .zip(angles.as_slice())
            .map(|(b, &t)| Ok([build_a(net, &partition, b, 0, t)?, build_a(net, &partition, b, 1, t)?]))
            .collect::<Result<Vec<_>>>()?;
        let b = [build_b(&partition, 0)?, build_b(&partition, 1)?];
        Ok(Self {
            partition,
            angles: angles.clone(),
            a,
            b,
        })
    }

    /// All distinct operators, for algebraic checks.
    pub fn operators(&self) -> Vec<&DenseOperator> {
        self.a
            .iter()
            .flat_map(|pair| pair.iter().map(|f| &f.op))
            .chain(self.b.iter().flat_map(|b| b.all().map(|f| &f.op)))
            .collect()
    }
}
