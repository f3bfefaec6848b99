//! Classical oracle: `k`-local hidden variable models with independent sources.
//!
//! Source `j` emits `λ_j ∈ {0, …, d−1}` with distribution `μ_j`; party `p` outputs
//! `a_p = f_p(x_p, λ_p)` where `λ_p` collects the values of its sources. Every such
//! model obeys `|I|^(1/k) + |J|^(1/k) ≤ 1`, and [`max_classical_f`] searches for the
//! largest classical value to confirm it numerically.
//!
//! Index conventions: the global hidden state is `Σ_j λ_j d^j`; a party's local
//! index is `Σ_t λ_{s_t} d^t` over its sources `s_0 < s_1 < …`; its response table
//! is indexed by `x · d^ℓ + local`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::bell::{BellEvaluation, Provenance};
use crate::error::{Error, Result};
use crate::independence::IndependenceCertificate;
use crate::network::NetworkTopology;

/// Default number of strategy-measure pairs evaluated by [`max_classical_f`].
pub const DEFAULT_BUDGET: u64 = 10_000_000;
/// Largest number of joint hidden states handled.
pub const MAX_HIDDEN_STATES: usize = 1 << 22;

const GRID_STEPS: usize = 10;
const REFINE_STEP: f64 = 0.01;
const CHUNK: u64 = 4096;
const SEED: u64 = 0x6e65_7462_656c_6c00;

/// Alphabet size and per-source distributions of the hidden states.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HiddenStateModel {
    pub alphabet: usize,
    /// One probability vector per source; `None` means uniform.
    pub distributions: Option<Vec<Vec<f64>>>,
}

impl HiddenStateModel {
    pub fn uniform(alphabet: usize) -> Self {
        Self { alphabet, distributions: None }
    }

    pub fn new(alphabet: usize, distributions: Vec<Vec<f64>>) -> Result<Self> {
        for (j, mu) in distributions.iter().enumerate() {
            if mu.len() != alphabet {
                return Err(Error::Invalid(format!(
                    "distribution {j} has {} entries, alphabet size is {alphabet}",
                    mu.len()
                )));
            }
            if mu.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::Invalid(format!("distribution {j} has a negative entry")));
            }
            let total: f64 = mu.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Invalid(format!("distribution {j} sums to {total}")));
            }
        }
        Ok(Self { alphabet, distributions: Some(distributions) })
    }

    fn source_distribution(&self, j: usize) -> Vec<f64> {
        match &self.distributions {
            Some(d) => d[j].clone(),
            None => vec![1.0 / self.alphabet as f64; self.alphabet],
        }
    }
}

/// Deterministic responses of every party.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalStrategy {
    /// `tables[p][x · d^ℓ + local] ∈ {0, 1}`.
    pub tables: Vec<Vec<u8>>,
    /// Setting used in `I` by each party outside the certificate.
    pub settings_i: Vec<u8>,
    /// Setting used in `J` by each party outside the certificate.
    pub settings_j: Vec<u8>,
}

/// Hidden-state layout shared by the evaluation routines.
struct Layout {
    d: usize,
    m: usize,
    n_states: usize,
    /// `local[p][λ]`: party `p`'s local index for global state `λ`.
    local: Vec<Vec<usize>>,
    /// `d^ℓ_p`.
    local_size: Vec<usize>,
    independent: Vec<bool>,
}

impl Layout {
    fn new(net: &NetworkTopology, cert: &IndependenceCertificate, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Invalid("alphabet size must be positive".into()));
        }
        cert.verify(net)?;
        let m = net.n_sources();
        let n_states = (0..m).try_fold(1usize, |acc, _| acc.checked_mul(d).filter(|&v| v <= MAX_HIDDEN_STATES));
        let Some(n_states) = n_states else {
            return Err(Error::ResourceLimit(format!(
                "{d}^{m} joint hidden states exceed {MAX_HIDDEN_STATES}"
            )));
        };
        let sets = net.party_sources();
        let mut local = Vec::with_capacity(net.n_parties());
        let mut local_size = Vec::with_capacity(net.n_parties());
        for srcs in &sets {
            let size = d.pow(srcs.len() as u32);
            local_size.push(size);
            local.push(
                (0..n_states)
                    .map(|lam| {
                        srcs.iter().rev().fold(0, |acc, &s| acc * d + (lam / d.pow(s as u32)) % d)
                    })
                    .collect(),
            );
        }
        let independent = (0..net.n_parties()).map(|p| cert.contains(p)).collect();
        Ok(Self { d, m, n_states, local, local_size, independent })
    }

    /// Joint weights `Π_j μ_j(λ_j)`.
    fn weights(&self, mus: &[Vec<f64>]) -> Vec<f64> {
        (0..self.n_states)
            .map(|mut lam| {
                let mut w = 1.0;
                for mu in mus {
                    w *= mu[lam % self.d];
                    lam /= self.d;
                }
                w
            })
            .collect()
    }
}

/// `(I, J)` of a classical model by direct summation over settings and hidden states.
pub fn classical_ij(
    net: &NetworkTopology,
    cert: &IndependenceCertificate,
    model: &HiddenStateModel,
    strategy: &LocalStrategy,
) -> Result<(f64, f64)> {
    let lay = Layout::new(net, cert, model.alphabet)?;
    let n = net.n_parties();
    if strategy.tables.len() != n || strategy.settings_i.len() != n || strategy.settings_j.len() != n {
        return Err(Error::Invalid(format!("strategy must cover all {n} parties")));
    }
    for p in 0..n {
        if strategy.tables[p].len() != 2 * lay.local_size[p] {
            return Err(Error::Invalid(format!(
                "table of party '{}' has {} entries, expected {}",
                net.parties()[p],
                strategy.tables[p].len(),
                2 * lay.local_size[p]
            )));
        }
        if strategy.settings_i[p] > 1 || strategy.settings_j[p] > 1 {
            return Err(Error::Invalid("settings must be 0 or 1".into()));
        }
    }
    if let Some(d) = &model.distributions {
        if d.len() != lay.m {
            return Err(Error::Invalid(format!("{} distributions for {} sources", d.len(), lay.m)));
        }
    }
    let k = cert.k();
    if k > 20 {
        return Err(Error::ResourceLimit(format!("2^{k} setting combinations")));
    }
    let mus: Vec<Vec<f64>> = (0..lay.m).map(|j| model.source_distribution(j)).collect();
    let w = lay.weights(&mus);
    let mut i_val = 0.0;
    let mut j_val = 0.0;
    for x in 0u32..(1 << k) {
        let xs: Vec<usize> = (0..k).map(|b| ((x >> b) & 1) as usize).collect();
        let parity = if x.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        for (lam, &wl) in w.iter().enumerate() {
            if wl == 0.0 {
                continue;
            }
            let out = |p: usize, setting: usize| strategy.tables[p][setting * lay.local_size[p] + lay.local[p][lam]];
            let mut sum_i = 0u32;
            let mut sum_j = 0u32;
            for p in 0..n {
                match cert.parties.iter().position(|&q| q == p) {
                    Some(pos) => {
                        let a = out(p, xs[pos]) as u32;
                        sum_i += a;
                        sum_j += a;
                    }
                    None => {
                        sum_i += out(p, strategy.settings_i[p] as usize) as u32;
                        sum_j += out(p, strategy.settings_j[p] as usize) as u32;
                    }
                }
            }
            let sign = |s: u32| if s % 2 == 0 { 1.0 } else { -1.0 };
            i_val += wl * sign(sum_i);
            j_val += wl * parity * sign(sum_j);
        }
    }
    let norm = f64::from(1u32 << k);
    Ok((i_val / norm, j_val / norm))
}

/// Best model found by [`max_classical_f`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LhvWitness {
    pub strategy: LocalStrategy,
    pub model: HiddenStateModel,
}

/// Result of [`max_classical_f`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LhvReport {
    pub evaluation: BellEvaluation,
    /// Whether every deterministic strategy was enumerated.
    pub exhaustive: bool,
    /// Strategy-measure pairs evaluated.
    pub evaluated: u64,
    pub witness: LhvWitness,
}

/// Per-party response signs entering `I` and `J` for every local hidden state.
///
/// Certified parties contribute `((−1)^{f(0,·)} ± (−1)^{f(1,·)}) / 2`; the others
/// use setting 0 in `I` and setting 1 in `J`, which loses no generality because the
/// two rows of their table are independent.
#[derive(Clone, Debug)]
struct PartyResponse {
    g_i: Vec<i8>,
    g_j: Vec<i8>,
}

fn party_response(table: &[u8], size: usize, independent: bool) -> PartyResponse {
    let sign = |b: u8| if b == 0 { 1i8 } else { -1i8 };
    let (g_i, g_j) = (0..size)
        .map(|l| {
            let (s0, s1) = (sign(table[l]), sign(table[size + l]));
            if independent {
                ((s0 + s1) / 2, (s0 - s1) / 2)
            } else {
                (s0, s1)
            }
        })
        .unzip();
    PartyResponse { g_i, g_j }
}

fn table_from_bits(bits: u64, len: usize) -> Vec<u8> {
    (0..len).map(|b| ((bits >> b) & 1) as u8).collect()
}

fn strategy_from_tables(tables: Vec<Vec<u8>>) -> LocalStrategy {
    let n = tables.len();
    LocalStrategy { tables, settings_i: vec![0; n], settings_j: vec![1; n] }
}

/// `I(λ)` and `J(λ)` for every global hidden state.
fn joint_signs(lay: &Layout, parts: &[&PartyResponse]) -> (Vec<i8>, Vec<i8>) {
    (0..lay.n_states)
        .map(|lam| {
            parts.iter().enumerate().fold((1i8, 1i8), |(a, b), (p, r)| {
                let l = lay.local[p][lam];
                (a * r.g_i[l], b * r.g_j[l])
            })
        })
        .unzip()
}

fn f_of(iv: &[i8], jv: &[i8], w: &[f64], k: usize) -> (f64, f64, f64) {
    let (mut i, mut j) = (0.0, 0.0);
    for ((&a, &b), &wl) in iv.iter().zip(jv).zip(w) {
        i += wl * f64::from(a);
        j += wl * f64::from(b);
    }
    (crate::bell::f_value(i, j, k), i, j)
}

/// Points of the probability simplex on `{0, 1/steps, …, 1}`, lexicographic.
fn simplex_grid(d: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(d: usize, left: usize, steps: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == d {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / steps as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(d, left - c, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, steps, steps, &mut Vec::new(), &mut out);
    out
}

fn point_mass(d: usize, v: usize) -> Vec<f64> {
    let mut mu = vec![0.0; d];
    mu[v] = 1.0;
    mu
}

/// Product measure number `idx` of the per-source grid, source 0 fastest.
fn grid_measure(grid: &[Vec<f64>], m: usize, mut idx: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|_| {
            let g = grid[idx % grid.len()].clone();
            idx /= grid.len();
            g
        })
        .collect()
}

#[derive(Clone, Debug)]
struct Candidate {
    f: f64,
    i: f64,
    j: f64,
    /// Ordering key for ties: lower wins.
    order: (u64, u64),
    tables: Vec<Vec<u8>>,
    mus: Vec<Vec<f64>>,
}

fn better(a: Candidate, b: Candidate) -> Candidate {
    if b.f > a.f || (b.f == a.f && b.order < a.order) {
        b
    } else {
        a
    }
}

/// Moves probability mass between pairs of values in steps of 0.01 while `F` improves.
fn refine(iv: &[i8], jv: &[i8], lay: &Layout, k: usize, best: &mut Candidate) -> u64 {
    let mut evals = 0u64;
    for _ in 0..200 {
        let mut improved = false;
        for s in 0..lay.m {
            for from in 0..lay.d {
                for to in 0..lay.d {
                    if from == to {
                        continue;
                    }
                    for step in 1..=10 {
                        let delta = REFINE_STEP * step as f64;
                        if best.mus[s][from] < delta - 1e-15 {
                            break;
                        }
                        let mut mus = best.mus.clone();
                        mus[s][from] = (mus[s][from] - delta).max(0.0);
                        mus[s][to] += delta;
                        let (f, i, j) = f_of(iv, jv, &lay.weights(&mus), k);
                        evals += 1;
                        if f > best.f + 1e-15 {
                            best.f = f;
                            best.i = i;
                            best.j = j;
                            best.mus = mus;
                            improved = true;
                        }
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    evals
}

/// Largest classical `F` found over deterministic strategies and product measures.
///
/// When `strategies × d^m ≤ budget` every deterministic strategy is enumerated
/// and each distinct pair of sign patterns is scored on all deterministic hidden
/// states and a product grid of source distributions (step 0.1), with a local
/// refinement (step 0.01) around the best point. Otherwise `budget` random
/// strategies are drawn, each paired with a deterministic, grid or Dirichlet(1)
/// measure. The search is deterministic for a given input.
pub fn max_classical_f(
    net: &NetworkTopology,
    cert: &IndependenceCertificate,
    d: usize,
    budget: u64,
) -> Result<LhvReport> {
    let k = cert.k();
    if k == 0 {
        return Err(Error::Precondition("certificate has no independent party".into()));
    }
    let lay = Layout::new(net, cert, d)?;
    let bits: Vec<usize> = lay.local_size.iter().map(|s| 2 * s).collect();
    let total_bits: usize = bits.iter().sum();
    let strategies = if total_bits < 63 && bits.iter().all(|&b| b < 64) { Some(1u64 << total_bits) } else { None };
    let exhaustive = strategies.is_some_and(|s| s.saturating_mul(lay.n_states as u64) <= budget);
    let (best, evaluated) = if exhaustive {
        search_exhaustive(&lay, &bits, k, budget)
    } else {
        search_sampled(&lay, &bits, k, budget)
    };
    let model = HiddenStateModel::new(d, best.mus.clone())?;
    let strategy = strategy_from_tables(best.tables.clone());
    let evaluation = BellEvaluation::new(best.i, best.j, k, Provenance::Lhv, None)?;
    Ok(LhvReport { evaluation, exhaustive, evaluated, witness: LhvWitness { strategy, model } })
}

fn search_exhaustive(lay: &Layout, bits: &[usize], k: usize, budget: u64) -> (Candidate, u64) {
    let n = bits.len();
    let responses: Vec<Vec<PartyResponse>> = (0..n)
        .map(|p| {
            (0..1u64 << bits[p])
                .map(|t| party_response(&table_from_bits(t, bits[p]), lay.local_size[p], lay.independent[p]))
                .collect()
        })
        .collect();
    // distinct sign patterns, first strategy in lexicographic order kept
    let mut seen: HashMap<(Vec<i8>, Vec<i8>), ()> = HashMap::new();
    let mut unique: Vec<(Vec<i8>, Vec<i8>, Vec<u64>)> = Vec::new();
    let mut choice = vec![0u64; n];
    loop {
        let parts: Vec<&PartyResponse> = (0..n).map(|p| &responses[p][choice[p] as usize]).collect();
        let (iv, jv) = joint_signs(lay, &parts);
        if seen.insert((iv.clone(), jv.clone()), ()).is_none() {
            unique.push((iv, jv, choice.clone()));
        }
        // last party varies fastest: lexicographic in (table_0, table_1, …)
        let mut p = n;
        loop {
            if p == 0 {
                break;
            }
            p -= 1;
            choice[p] += 1;
            if choice[p] < 1u64 << bits[p] {
                break;
            }
            choice[p] = 0;
        }
        if choice.iter().all(|&c| c == 0) {
            break;
        }
    }
    let mut evaluated = (unique.len() * lay.n_states) as u64;

    let grid = simplex_grid(lay.d, GRID_STEPS);
    let grid_total = grid.len().checked_pow(lay.m as u32).unwrap_or(usize::MAX);
    let per_pair = ((budget / unique.len().max(1) as u64) as usize).clamp(1, grid_total);
    let stride = grid_total.div_ceil(per_pair);
    let measures: Vec<Vec<Vec<f64>>> = (0..lay.n_states)
        .map(|lam| (0..lay.m).map(|j| point_mass(lay.d, (lam / lay.d.pow(j as u32)) % lay.d)).collect())
        .chain((0..grid_total).step_by(stride).map(|g| grid_measure(&grid, lay.m, g)))
        .collect();
    let weights: Vec<Vec<f64>> = measures.iter().map(|mu| lay.weights(mu)).collect();
    evaluated += (unique.len() * (measures.len() - lay.n_states)) as u64;

    let mk = |u: usize, mi: usize| {
        let (iv, jv, ch) = &unique[u];
        let (f, i, j) = f_of(iv, jv, &weights[mi], k);
        Candidate {
            f,
            i,
            j,
            order: (u as u64, mi as u64),
            tables: (0..n).map(|p| table_from_bits(ch[p], bits[p])).collect(),
            mus: measures[mi].clone(),
        }
    };
    let mut best = (0..unique.len())
        .into_par_iter()
        .map(|u| {
            let (iv, jv, _) = &unique[u];
            let mut top = (f64::NEG_INFINITY, 0usize);
            for (mi, w) in weights.iter().enumerate() {
                let f = f_of(iv, jv, w, k).0;
                if f > top.0 {
                    top = (f, mi);
                }
            }
            mk(u, top.1)
        })
        .reduce_with(better)
        .expect("at least one strategy");
    let u = best.order.0 as usize;
    evaluated += refine(&unique[u].0, &unique[u].1, lay, k, &mut best);
    (best, evaluated)
}

fn search_sampled(lay: &Layout, bits: &[usize], k: usize, budget: u64) -> (Candidate, u64) {
    let n = bits.len();
    let grid = simplex_grid(lay.d, GRID_STEPS);
    let chunks = budget.div_ceil(CHUNK).max(1);
    let best = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ c.wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let count = CHUNK.min(budget.saturating_sub(c * CHUNK)).max(1);
            let mut top: Option<Candidate> = None;
            for s in 0..count {
                let tables: Vec<Vec<u8>> =
                    (0..n).map(|p| (0..bits[p]).map(|_| rng.random::<bool>() as u8).collect()).collect();
                let mus: Vec<Vec<f64>> = match rng.random_range(0..3) {
                    0 => (0..lay.m).map(|_| point_mass(lay.d, rng.random_range(0..lay.d))).collect(),
                    1 => (0..lay.m).map(|_| grid[rng.random_range(0..grid.len())].clone()).collect(),
                    _ => (0..lay.m)
                        .map(|_| {
                            let e: Vec<f64> = (0..lay.d).map(|_| rng.sample::<f64, _>(Exp1)).collect();
                            let t: f64 = e.iter().sum();
                            e.into_iter().map(|x| x / t).collect()
                        })
                        .collect(),
                };
                let parts: Vec<PartyResponse> =
                    (0..n).map(|p| party_response(&tables[p], lay.local_size[p], lay.independent[p])).collect();
                let refs: Vec<&PartyResponse> = parts.iter().collect();
                let (iv, jv) = joint_signs(lay, &refs);
                let (f, i, j) = f_of(&iv, &jv, &lay.weights(&mus), k);
                let cand = Candidate { f, i, j, order: (c, s), tables, mus };
                top = Some(match top {
                    Some(t) => better(t, cand),
                    None => cand,
                });
            }
            top.expect("chunk is nonempty")
        })
        .reduce_with(better)
        .expect("at least one chunk");
    (best, budget.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::independence::kmax_exact;
    use crate::network::gallery;
    use proptest::prelude::*;

    fn setup(name: &str) -> (NetworkTopology, IndependenceCertificate) {
        let net = gallery(name).unwrap();
        let cert = kmax_exact(&net, 20).unwrap();
        (net, cert)
    }

    fn constant(net: &NetworkTopology, d: usize, f: impl Fn(usize, usize, usize) -> u8) -> LocalStrategy {
        let sets = net.party_sources();
        let tables = (0..net.n_parties())
            .map(|p| {
                let size = d.pow(sets[p].len() as u32);
                (0..2 * size).map(|t| f(p, t / size, t % size)).collect()
            })
            .collect();
        strategy_from_tables(tables)
    }

    #[test]
    fn all_zero_outputs() {
        let (net, cert) = setup("chain(3)");
        let s = constant(&net, 2, |_, _, _| 0);
        let (i, j) = classical_ij(&net, &cert, &HiddenStateModel::uniform(2), &s).unwrap();
        assert_eq!((i, j), (1.0, 0.0));
    }

    #[test]
    fn parity_of_received_values() {
        let (net, cert) = setup("chain(3)");
        // binary alphabet: local index bits are the received values
        let s = constant(&net, 2, |_, _, l| (l.count_ones() % 2) as u8);
        let (i, j) = classical_ij(&net, &cert, &HiddenStateModel::uniform(2), &s).unwrap();
        assert!((i - 1.0).abs() < 1e-15 && j.abs() < 1e-15);
    }

    #[test]
    fn boundary_strategies() {
        let (net, cert) = setup("chain(3)");
        let s = constant(&net, 2, |p, x, _| if cert.contains(p) { x as u8 } else { 0 });
        let (i, j) = classical_ij(&net, &cert, &HiddenStateModel::uniform(2), &s).unwrap();
        assert_eq!((i, j), (0.0, 1.0));
        assert_eq!(crate::bell::f_value(i, j, 2), 1.0);
    }

    #[test]
    fn arity_mismatch() {
        let (net, cert) = setup("chain(3)");
        let mut s = constant(&net, 2, |_, _, _| 0);
        s.tables[1].pop();
        assert!(classical_ij(&net, &cert, &HiddenStateModel::uniform(2), &s).is_err());
        assert!(HiddenStateModel::new(2, vec![vec![0.5, 0.6]]).is_err());
        assert!(HiddenStateModel::new(2, vec![vec![0.5]]).is_err());
    }

    #[test]
    fn simplex_grid_size() {
        assert_eq!(simplex_grid(2, 10).len(), 11);
        assert_eq!(simplex_grid(3, 10).len(), 66);
        for p in simplex_grid(3, 10) {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bilocal_exhaustive_reaches_one() {
        let (net, cert) = setup("chain(3)");
        let r = max_classical_f(&net, &cert, 2, DEFAULT_BUDGET).unwrap();
        assert!(r.exhaustive);
        assert!((r.evaluation.f - 1.0).abs() < 1e-9, "{}", r.evaluation.f);
        let (i, j) = classical_ij(&net, &cert, &r.witness.model, &r.witness.strategy).unwrap();
        assert!((i - r.evaluation.i).abs() < 1e-12 && (j - r.evaluation.j).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_and_bounded() {
        let (net, cert) = setup("chain(4)");
        let a = max_classical_f(&net, &cert, 2, 20_000).unwrap();
        let b = max_classical_f(&net, &cert, 2, 20_000).unwrap();
        assert!(!a.exhaustive);
        assert_eq!(a, b);
        assert!(a.evaluation.f <= 1.0 + 1e-9);
        let (i, j) = classical_ij(&net, &cert, &a.witness.model, &a.witness.strategy).unwrap();
        assert!((i - a.evaluation.i).abs() < 1e-12 && (j - a.evaluation.j).abs() < 1e-12);
    }

    #[test]
    fn single_party_certificate_is_linear() {
        let net = gallery("triangle").unwrap();
        let cert = kmax_exact(&net, 20).unwrap();
        assert_eq!(cert.k(), 1);
        let r = max_classical_f(&net, &cert, 2, 100_000).unwrap();
        assert!(r.evaluation.i.abs() + r.evaluation.j.abs() <= 1.0 + 1e-9);
    }

    fn arb_model(m: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(0.01..1.0f64, d), m).prop_map(|v| {
            v.into_iter()
                .map(|mu| {
                    let t: f64 = mu.iter().sum();
                    mu.into_iter().map(|x| x / t).collect()
                })
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sign_route_matches_direct_sum(
            seed in any::<u64>(),
            mus in arb_model(3, 3),
            si in prop::collection::vec(0u8..2, 4),
            sj in prop::collection::vec(0u8..2, 4),
        ) {
            let (net, cert) = setup("chain(4)");
            let lay = Layout::new(&net, &cert, 3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tables: Vec<Vec<u8>> =
                lay.local_size.iter().map(|&s| (0..2 * s).map(|_| rng.random::<bool>() as u8).collect()).collect();
            let model = HiddenStateModel::new(3, mus.clone()).unwrap();
            // direct sum with settings 0/1 for the others equals the sign route
            let s = strategy_from_tables(tables.clone());
            let (i, j) = classical_ij(&net, &cert, &model, &s).unwrap();
            let parts: Vec<PartyResponse> =
                (0..4).map(|p| party_response(&tables[p], lay.local_size[p], lay.independent[p])).collect();
            let refs: Vec<&PartyResponse> = parts.iter().collect();
            let (iv, jv) = joint_signs(&lay, &refs);
            let (_, i2, j2) = f_of(&iv, &jv, &lay.weights(&mus), cert.k());
            prop_assert!((i - i2).abs() < 1e-12 && (j - j2).abs() < 1e-12);
            // any settings stay classical
            let s = LocalStrategy { tables, settings_i: si, settings_j: sj };
            let (i, j) = classical_ij(&net, &cert, &model, &s).unwrap();
            prop_assert!(crate::bell::f_value(i, j, cert.k()) <= 1.0 + 1e-12);
        }

        #[test]
        fn multilinear_in_each_source(
            seed in any::<u64>(),
            mus in arb_model(2, 2),
            other in arb_model(1, 2),
            t in 0.0..=1.0f64,
            src in 0usize..2,
        ) {
            let (net, cert) = setup("chain(3)");
            let lay = Layout::new(&net, &cert, 2).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tables: Vec<Vec<u8>> =
                lay.local_size.iter().map(|&s| (0..2 * s).map(|_| rng.random::<bool>() as u8).collect()).collect();
            let s = strategy_from_tables(tables);
            let mut alt = mus.clone();
            alt[src] = other[0].clone();
            let mut mix = mus.clone();
            mix[src] = mus[src].iter().zip(&other[0]).map(|(a, b)| t * a + (1.0 - t) * b).collect();
            let renorm: f64 = mix[src].iter().sum();
            mix[src].iter_mut().for_each(|x| *x /= renorm);
            let ij = |m: Vec<Vec<f64>>| classical_ij(&net, &cert, &HiddenStateModel::new(2, m).unwrap(), &s).unwrap();
            let (a, b, c) = (ij(mus), ij(alt), ij(mix));
            prop_assert!((c.0 - (t * a.0 + (1.0 - t) * b.0)).abs() < 1e-12);
            prop_assert!((c.1 - (t * a.1 + (1.0 - t) * b.1)).abs() < 1e-12);
        }
    }
}
