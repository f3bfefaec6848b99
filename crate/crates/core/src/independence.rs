//! Independent parties: parties whose source sets are pairwise disjoint.
//!
//! A party receiving `ℓ` particles is split into `ℓ` right vertices, one per
//! particle, each adjacent only to the source that sent it. Sources form the left
//! side. In a matching each source covers at most one right vertex, so any party
//! whose right vertices are all matched owns its sources exclusively, and all such
//! parties are mutually independent.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::NetworkTopology;

/// Default number of rotated vertex orders tried before falling back to subset search.
pub const DEFAULT_RETRIES: usize = 32;
/// Default party-count limit for [`kmax_exact`].
pub const DEFAULT_KMAX_LIMIT: usize = 20;

/// Right vertex: one particle received by one party.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RightVertex {
    pub party: usize,
    /// Index among the party's received particles.
    pub local: usize,
    pub source: usize,
}

/// Sources versus single-particle parties.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteDecomposition {
    pub n_sources: usize,
    /// Numbered by party, then by source.
    pub right: Vec<RightVertex>,
    /// Right vertices of each source, ascending.
    pub adjacency: Vec<Vec<usize>>,
    /// First right vertex of each party.
    pub party_offset: Vec<usize>,
    /// Number of particles received by each party.
    pub party_degree: Vec<usize>,
}

impl BipartiteDecomposition {
    pub fn n_right(&self) -> usize {
        self.right.len()
    }

    /// All `(source, right)` edges in ascending order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .right
            .iter()
            .enumerate()
            .map(|(r, v)| (v.source, r))
            .collect();
        e.sort_unstable();
        e
    }

    pub fn has_edge(&self, s: usize, r: usize) -> bool {
        self.right.get(r).is_some_and(|v| v.source == s)
    }
}

/// Builds the bipartite graph of sources against single-particle parties.
pub fn decompose(net: &NetworkTopology) -> BipartiteDecomposition {
    let party_sources = net.party_sources();
    let mut right = Vec::new();
    let mut party_offset = Vec::with_capacity(party_sources.len());
    let mut party_degree = Vec::with_capacity(party_sources.len());
    let mut adjacency = vec![Vec::new(); net.n_sources()];
    for (p, srcs) in party_sources.iter().enumerate() {
        party_offset.push(right.len());
        party_degree.push(srcs.len());
        for (local, &s) in srcs.iter().enumerate() {
            adjacency[s].push(right.len());
            right.push(RightVertex {
                party: p,
                local,
                source: s,
            });
        }
    }
    BipartiteDecomposition {
        n_sources: net.n_sources(),
        right,
        adjacency,
        party_offset,
        party_degree,
    }
}

/// A set of `(source, right vertex)` edges, sorted by source.
pub type Matching = Vec<(usize, usize)>;

/// Maximum matching by Hopcroft–Karp with ascending-index tie-breaking.
pub fn hopcroft_karp(g: &BipartiteDecomposition) -> Matching {
    let left: Vec<usize> = (0..g.n_sources).collect();
    let rank: Vec<usize> = (0..g.n_right()).collect();
    hopcroft_karp_ordered(g, &left, &rank)
}

/// Hopcroft–Karp where left vertices are processed in `left_order` and each
/// adjacency list is scanned by increasing `right_rank`.
pub fn hopcroft_karp_ordered(
    g: &BipartiteDecomposition,
    left_order: &[usize],
    right_rank: &[usize],
) -> Matching {
    let adj: Vec<Vec<usize>> = g
        .adjacency
        .iter()
        .map(|a| {
            let mut a = a.clone();
            a.sort_by_key(|&r| right_rank[r]);
            a
        })
        .collect();
    let nl = g.n_sources;
    let mut mate_l: Vec<Option<usize>> = vec![None; nl];
    let mut mate_r: Vec<Option<usize>> = vec![None; g.n_right()];
    let mut dist = vec![usize::MAX; nl];

    loop {
        // Layered BFS from all free left vertices.
        let mut queue = VecDeque::new();
        for &u in left_order {
            if mate_l[u].is_none() {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &r in &adj[u] {
                match mate_r[r] {
                    None => found = true,
                    Some(w) if dist[w] == usize::MAX => {
                        dist[w] = dist[u] + 1;
                        queue.push_back(w);
                    }
                    _ => {}
                }
            }
        }
        if !found {
            break;
        }
        let mut it = vec![0usize; nl];
        for &u in left_order {
            if mate_l[u].is_none() {
                augment(u, &adj, &mut mate_l, &mut mate_r, &mut dist, &mut it);
            }
        }
    }

    let mut m: Matching = mate_l
        .iter()
        .enumerate()
        .filter_map(|(s, r)| r.map(|r| (s, r)))
        .collect();
    m.sort_unstable();
    m
}

fn augment(
    u: usize,
    adj: &[Vec<usize>],
    mate_l: &mut [Option<usize>],
    mate_r: &mut [Option<usize>],
    dist: &mut [usize],
    it: &mut [usize],
) -> bool {
    while it[u] < adj[u].len() {
        let r = adj[u][it[u]];
        it[u] += 1;
        let ok = match mate_r[r] {
            None => true,
            Some(w) => dist[w] == dist[u] + 1 && augment(w, adj, mate_l, mate_r, dist, it),
        };
        if ok {
            mate_l[u] = Some(r);
            mate_r[r] = Some(u);
            return true;
        }
    }
    dist[u] = usize::MAX;
    false
}

/// How a certificate was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertMethod {
    Matching,
    Exhaustive,
    SubsetSearch,
}

/// `k` mutually independent parties and the matching witnessing it.
#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceCertificate {
    /// Party indices, ascending.
    pub parties: Vec<usize>,
    pub matching: Matching,
    pub method: CertMethod,
}

impl IndependenceCertificate {
    pub fn k(&self) -> usize {
        self.parties.len()
    }

    /// Whether `p` is one of the independent parties.
    pub fn contains(&self, p: usize) -> bool {
        self.parties.binary_search(&p).is_ok()
    }

    /// Checks the certificate against the topology.
    pub fn verify(&self, net: &NetworkTopology) -> Result<()> {
        let g = decompose(net);
        let mut used_r = FixedBitSet::with_capacity(g.n_right());
        let mut used_s = FixedBitSet::with_capacity(g.n_sources);
        for &(s, r) in &self.matching {
            if !g.has_edge(s, r) {
                return Err(Error::Invalid(format!("({s}, R{}) is not an edge", r + 1)));
            }
            if used_s.put(s) || used_r.put(r) {
                return Err(Error::Invalid("matching edges share a vertex".into()));
            }
        }
        let sets = net.party_sources();
        for (i, &p) in self.parties.iter().enumerate() {
            if p >= net.n_parties() {
                return Err(Error::Invalid(format!("party index {p} out of range")));
            }
            let lo = g.party_offset[p];
            if (lo..lo + g.party_degree[p]).any(|r| !used_r.contains(r)) {
                return Err(Error::Invalid(format!(
                    "party '{}' is not completely matched",
                    net.parties()[p]
                )));
            }
            for &q in &self.parties[i + 1..] {
                if sets[p].iter().any(|s| sets[q].contains(s)) {
                    return Err(Error::Invalid(format!(
                        "parties '{}' and '{}' share a source",
                        net.parties()[p],
                        net.parties()[q]
                    )));
                }
            }
        }
        if self.parties.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("party list must be strictly ascending".into()));
        }
        Ok(())
    }

    /// JSON form `{k, parties, matching, method}` with party names, source ids and
    /// 1-based right-vertex names `R<j>`.
    pub fn to_json(&self, net: &NetworkTopology) -> CertificateJson {
        CertificateJson {
            k: self.k(),
            parties: self
                .parties
                .iter()
                .map(|&p| net.parties()[p].clone())
                .collect(),
            matching: self
                .matching
                .iter()
                .map(|&(s, r)| [net.sources()[s].id.clone(), format!("R{}", r + 1)])
                .collect(),
            method: self.method,
        }
    }

    /// Inverse of [`IndependenceCertificate::to_json`].
    pub fn from_json(net: &NetworkTopology, j: &CertificateJson) -> Result<Self> {
        let mut parties = j
            .parties
            .iter()
            .map(|p| {
                net.party_index(p)
                    .ok_or_else(|| Error::Invalid(format!("unknown party '{p}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        parties.sort_unstable();
        let mut matching = j
            .matching
            .iter()
            .map(|[s, r]| {
                let si = net
                    .sources()
                    .iter()
                    .position(|x| &x.id == s)
                    .ok_or_else(|| Error::Invalid(format!("unknown source '{s}'")))?;
                let ri = r
                    .strip_prefix('R')
                    .and_then(|x| x.parse::<usize>().ok())
                    .filter(|&x| x >= 1)
                    .ok_or_else(|| Error::Invalid(format!("bad right vertex '{r}'")))?;
                Ok((si, ri - 1))
            })
            .collect::<Result<Matching>>()?;
        matching.sort_unstable();
        let cert = Self {
            parties,
            matching,
            method: j.method,
        };
        if cert.k() != j.k {
            return Err(Error::Invalid(format!(
                "k = {} but {} parties listed",
                j.k,
                cert.k()
            )));
        }
        cert.verify(net)?;
        Ok(cert)
    }
}

/// Serialized certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateJson {
    pub k: usize,
    pub parties: Vec<String>,
    pub matching: Vec<[String; 2]>,
    pub method: CertMethod,
}

/// Parties all of whose right vertices are covered by `matching`.
pub fn certify_independence(
    net: &NetworkTopology,
    matching: &[(usize, usize)],
) -> Result<IndependenceCertificate> {
    let g = decompose(net);
    let mut covered = FixedBitSet::with_capacity(g.n_right());
    let mut used_s = FixedBitSet::with_capacity(g.n_sources);
    for &(s, r) in matching {
        if !g.has_edge(s, r) {
            return Err(Error::Invalid(format!(
                "matching edge (source {s}, R{}) is not in the graph",
                r + 1
            )));
        }
        if used_s.put(s) || covered.put(r) {
            return Err(Error::Invalid("matching edges share a vertex".into()));
        }
    }
    let parties = (0..net.n_parties())
        .filter(|&p| {
            let lo = g.party_offset[p];
            (lo..lo + g.party_degree[p]).all(|r| covered.contains(r))
        })
        .collect();
    let mut m = matching.to_vec();
    m.sort_unstable();
    Ok(IndependenceCertificate {
        parties,
        matching: m,
        method: CertMethod::Matching,
    })
}

/// Matching that covers exactly the right vertices of `parties`.
fn witness(g: &BipartiteDecomposition, parties: &[usize]) -> Matching {
    let mut m: Matching = parties
        .iter()
        .flat_map(|&p| {
            let lo = g.party_offset[p];
            (lo..lo + g.party_degree[p]).map(|r| (g.right[r].source, r))
        })
        .collect();
    m.sort_unstable();
    m
}

/// Party-by-party source-intersection matrix.
fn conflicts(net: &NetworkTopology) -> Vec<FixedBitSet> {
    let n = net.n_parties();
    let sets = net.party_sources();
    let mut c = vec![FixedBitSet::with_capacity(n); n];
    for s in 0..net.n_sources() {
        let r = net.recipients(s);
        for &p in &r {
            for &q in &r {
                if p != q {
                    c[p].insert(q);
                }
            }
        }
    }
    debug_assert_eq!(sets.len(), n);
    c
}

/// Lexicographically first `k`-subset of pairwise independent parties, extending `chosen`.
fn first_subset(
    conf: &[FixedBitSet],
    start: usize,
    k: usize,
    chosen: &mut Vec<usize>,
    blocked: &FixedBitSet,
) -> bool {
    if chosen.len() == k {
        return true;
    }
    let n = conf.len();
    for p in start..n {
        if n - p < k - chosen.len() {
            return false;
        }
        if blocked.contains(p) {
            continue;
        }
        chosen.push(p);
        let mut next = blocked.clone();
        next.union_with(&conf[p]);
        if first_subset(conf, p + 1, k, chosen, &next) {
            return true;
        }
        chosen.pop();
    }
    false
}

/// First `k`-subset (lexicographic) with pairwise disjoint source sets.
pub fn subset_search(net: &NetworkTopology, k: usize) -> Result<Option<IndependenceCertificate>> {
    if k < 2 || k > net.n_parties() {
        return Err(Error::Precondition(format!(
            "subset search needs 2 <= k <= n = {}, got k = {k}",
            net.n_parties()
        )));
    }
    let conf = conflicts(net);
    let mut chosen = Vec::new();
    let blocked = FixedBitSet::with_capacity(net.n_parties());
    if !first_subset(&conf, 0, k, &mut chosen, &blocked) {
        return Ok(None);
    }
    let g = decompose(net);
    Ok(Some(IndependenceCertificate {
        matching: witness(&g, &chosen),
        parties: chosen,
        method: CertMethod::SubsetSearch,
    }))
}

/// Maximum number of independent parties by exhaustive search, largest size first.
pub fn kmax_exact(net: &NetworkTopology, limit: usize) -> Result<IndependenceCertificate> {
    let n = net.n_parties();
    if n > limit {
        return Err(Error::ResourceLimit(format!(
            "exhaustive k_max search limited to {limit} parties, network has {n}"
        )));
    }
    let conf = conflicts(net);
    let blocked = FixedBitSet::with_capacity(n);
    let g = decompose(net);
    for k in (1..=n).rev() {
        let mut chosen = Vec::new();
        if first_subset(&conf, 0, k, &mut chosen, &blocked) {
            return Ok(IndependenceCertificate {
                matching: witness(&g, &chosen),
                parties: chosen,
                method: CertMethod::Exhaustive,
            });
        }
    }
    unreachable!("a single party is always independent")
}

/// Matching pipeline: Hopcroft–Karp, then up to `retries` rotated vertex orders
/// while fewer than two parties are certified, then subset search for `k = 2`.
///
/// Returns the best certificate found; its `k` may still be below 2.
pub fn construct_certificate(
    net: &NetworkTopology,
    retries: usize,
) -> Result<IndependenceCertificate> {
    let g = decompose(net);
    let mut best = certify_independence(net, &hopcroft_karp(&g))?;
    let nl = g.n_sources;
    let nr = g.n_right();
    for r in 1..retries.max(1) {
        if best.k() >= 2 {
            return Ok(best);
        }
        let left: Vec<usize> = (0..nl).map(|i| (i + r) % nl).collect();
        let rank: Vec<usize> = (0..nr).map(|i| (i + nr - r % nr) % nr).collect();
        let cert = certify_independence(net, &hopcroft_karp_ordered(&g, &left, &rank))?;
        if cert.k() > best.k() {
            best = cert;
        }
    }
    if best.k() >= 2 {
        return Ok(best);
    }
    if net.n_parties() >= 2 {
        if let Some(c) = subset_search(net, 2)? {
            return Ok(c);
        }
    }
    Ok(best)
}

/// Certificate used for evaluation: exact `k_max` when the network is small enough,
/// otherwise the matching pipeline.
pub fn best_certificate(net: &NetworkTopology, retries: usize) -> Result<IndependenceCertificate> {
    if net.n_parties() <= DEFAULT_KMAX_LIMIT {
        kmax_exact(net, DEFAULT_KMAX_LIMIT)
    } else {
        construct_certificate(net, retries)
    }
}
