//! Global resource states and expectation values of slot-addressed product operators.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::linalg::{c, hermitian_eigenvalues, kron_all, kron_vec, pauli, DenseOperator, StateVector, C64};
use crate::error::{Error, Result};
use crate::network::{NetworkTopology, PauliState, Resource, WernerBase};

/// Default cap on the total Hilbert-space dimension for full-tensor evaluation.
pub const DEFAULT_DIM_CAP: usize = 1 << 12;
/// Tolerance for the imaginary part of an expectation value.
pub const IMAG_TOL: f64 = 1e-9;

/// Pure or mixed state on the network's particles in tensor order.
#[derive(Clone, Debug)]
pub struct QuantumState {
    pub repr: StateRepr,
    pub particle_dims: Vec<usize>,
    /// Receiving party of each particle.
    pub particle_owner: Vec<usize>,
}

#[derive(Clone, Debug)]
pub enum StateRepr {
    Pure(StateVector),
    Mixed(DenseOperator),
}

/// Operator acting on a subset of particle slots.
///
/// The first listed slot is the most significant digit of the operator's index.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalFactor {
    pub slots: Vec<usize>,
    pub op: DenseOperator,
}

fn pure_vector(r: &Resource) -> Option<StateVector> {
    match r {
        Resource::Epr(e) => Some(DVector::from_vec(vec![c(e.a), c(0.0), c(0.0), c(e.b)])),
        Resource::Schmidt(s) => {
            let tail = s.tail_weights.iter().map(|t| t * t).sum::<f64>().sqrt();
            let mut v = DVector::from_element(9, c(0.0));
            v[0] = c(s.a);
            v[4] = c(s.b);
            v[8] = c(tail);
            Some(v)
        }
        Resource::Ghz(g) => Some(ghz_vector(g.a_hat, g.b_hat, g.arity)),
        _ => None,
    }
}

fn ghz_vector(a: f64, b: f64, arity: usize) -> StateVector {
    let n = 1 << arity;
    let mut v = DVector::from_element(n, c(0.0));
    v[0] = c(a);
    v[n - 1] = c(b);
    v
}

/// Density matrix of a Pauli-coefficient state.
pub fn pauli_density(p: &PauliState) -> DenseOperator {
    let d = 1usize << p.arity;
    let mut rho = DMatrix::from_element(d, d, c(0.0));
    let id = "1".repeat(p.arity);
    rho += DMatrix::<C64>::identity(d, d);
    for (key, &w) in &p.coefficients {
        if *key == id || w == 0.0 {
            continue;
        }
        let ops: Vec<DenseOperator> = key.chars().map(pauli).collect();
        rho += kron_all(&ops) * c(w);
    }
    rho / c(d as f64)
}

/// Rejects Pauli-coefficient states whose density matrix has a negative eigenvalue.
pub fn check_pauli_psd(p: &PauliState) -> Result<()> {
    let ev = hermitian_eigenvalues(&pauli_density(p));
    let min = ev[0];
    if min < -IMAG_TOL {
        return Err(Error::Invalid(format!(
            "Pauli coefficient state is not positive semidefinite (minimum eigenvalue {min:.6e})"
        )));
    }
    Ok(())
}

fn density(r: &Resource) -> DenseOperator {
    if let Some(v) = pure_vector(r) {
        return &v * v.adjoint();
    }
    match r {
        Resource::Werner(w) => {
            let (a, b) = w.base.amplitudes();
            let s = w.base.arity();
            let psi = match &w.base {
                WernerBase::Epr(_) => ghz_vector(a, b, 2),
                WernerBase::Ghz(_) => ghz_vector(a, b, s),
            };
            let d = 1usize << s;
            (&psi * psi.adjoint()) * c(w.visibility)
                + DMatrix::<C64>::identity(d, d) * c((1.0 - w.visibility) / d as f64)
        }
        Resource::Pauli(p) => pauli_density(p),
        _ => unreachable!("pure kinds handled above"),
    }
}

/// Tensor product of all source states in declaration order.
pub fn build_state(net: &NetworkTopology, dim_cap: usize) -> Result<QuantumState> {
    let dim = net.total_dim();
    if dim > dim_cap {
        return Err(Error::ResourceLimit(format!(
            "total Hilbert-space dimension {dim} exceeds the cap {dim_cap}"
        )));
    }
    let particles = net.particles();
    let particle_dims = particles.iter().map(|p| p.dim).collect();
    let particle_owner = particles.iter().map(|p| p.party).collect();
    let resources: Vec<&Resource> = net.sources().iter().map(|s| &s.resource).collect();
    let repr = if resources.iter().all(|r| r.is_pure()) {
        let vs: Vec<StateVector> = resources.iter().map(|r| pure_vector(r).unwrap()).collect();
        StateRepr::Pure(kron_vec(&vs))
    } else {
        let ms: Vec<DenseOperator> = resources.iter().map(|r| density(r)).collect();
        StateRepr::Mixed(kron_all(&ms))
    };
    Ok(QuantumState {
        repr,
        particle_dims,
        particle_owner,
    })
}

impl QuantumState {
    pub fn dim(&self) -> usize {
        self.particle_dims.iter().product()
    }

    /// Density matrix (the projector for pure states).
    pub fn density(&self) -> DenseOperator {
        match &self.repr {
            StateRepr::Pure(v) => v * v.adjoint(),
            StateRepr::Mixed(m) => m.clone(),
        }
    }

    /// Checks normalization, hermiticity and positivity within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        match &self.repr {
            StateRepr::Pure(v) => {
                let n = v.norm();
                if (n - 1.0).abs() > tol {
                    return Err(Error::Numerical(format!("state norm {n} differs from 1")));
                }
            }
            StateRepr::Mixed(m) => {
                let tr = m.trace();
                if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
                    return Err(Error::Numerical(format!("trace {tr} differs from 1")));
                }
                let h = super::linalg::hermiticity_error(m);
                if h > tol {
                    return Err(Error::Numerical(format!("density not Hermitian ({h:e})")));
                }
                let min = hermitian_eigenvalues(m)[0];
                if min < -tol {
                    return Err(Error::Numerical(format!("negative eigenvalue {min:e}")));
                }
            }
        }
        Ok(())
    }
}

/// Precomputed index map and sparse rows for applying one factor.
struct Plan {
    /// Global offsets of each local basis state relative to a base index.
    offsets: Vec<usize>,
    /// Global indices whose digits on the factor's slots are all zero.
    bases: Vec<usize>,
    /// Nonzero entries `(column, value)` of each row of the operator.
    rows: Vec<Vec<(usize, C64)>>,
}

fn plan(dims: &[usize], f: &LocalFactor) -> Plan {
    let n = dims.len();
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let total: usize = dims.iter().product();
    let mut offsets = vec![0usize];
    for &s in &f.slots {
        let st = strides[s];
        offsets = offsets
            .iter()
            .flat_map(|&o| (0..dims[s]).map(move |d| o + d * st))
            .collect();
    }
    let bases = (0..total)
        .filter(|&g| f.slots.iter().all(|&s| (g / strides[s]) % dims[s] == 0))
        .collect();
    let rows = (0..f.op.nrows())
        .map(|r| {
            (0..f.op.ncols())
                .filter_map(|l| {
                    let m = f.op[(r, l)];
                    (m.re != 0.0 || m.im != 0.0).then_some((l, m))
                })
                .collect()
        })
        .collect();
    Plan { offsets, bases, rows }
}

fn apply(plan: &Plan, v: &mut [C64], buf: &mut Vec<C64>) {
    let d = plan.offsets.len();
    buf.resize(d, c(0.0));
    for &b in &plan.bases {
        for (l, &o) in plan.offsets.iter().enumerate() {
            buf[l] = v[b + o];
        }
        for (row, &o) in plan.rows.iter().zip(&plan.offsets) {
            v[b + o] = row.iter().map(|&(l, m)| m * buf[l]).sum();
        }
    }
}

fn is_identity(m: &DenseOperator) -> bool {
    m.iter().enumerate().all(|(idx, z)| {
        let (r, col) = (idx % m.nrows(), idx / m.nrows());
        *z == if r == col { c(1.0) } else { c(0.0) }
    })
}

fn check_factors(state: &QuantumState, factors: &[LocalFactor]) -> Result<()> {
    let n = state.particle_dims.len();
    let mut seen = vec![false; n];
    for f in factors {
        let mut d = 1;
        for &s in &f.slots {
            if s >= n || seen[s] {
                return Err(Error::Invalid(format!(
                    "operator slots must partition the {n} particles (slot {s} repeated or out of range)"
                )));
            }
            seen[s] = true;
            d *= state.particle_dims[s];
        }
        if f.op.nrows() != d || f.op.ncols() != d {
            return Err(Error::Invalid(format!(
                "operator of size {}×{} on slots {:?} of dimension {d}",
                f.op.nrows(),
                f.op.ncols(),
                f.slots
            )));
        }
    }
    if let Some(s) = seen.iter().position(|x| !x) {
        return Err(Error::Invalid(format!("particle slot {s} has no operator")));
    }
    Ok(())
}

/// `Tr(O ρ)` for `O` the tensor product of `factors`, which must cover every slot once.
pub fn expectation(state: &QuantumState, factors: &[LocalFactor]) -> Result<f64> {
    check_factors(state, factors)?;
    let plans: Vec<Plan> = factors
        .iter()
        .filter(|f| !is_identity(&f.op))
        .map(|f| plan(&state.particle_dims, f))
        .collect();
    let transform = |col: &mut [C64]| {
        let mut buf = Vec::new();
        for p in &plans {
            apply(p, col, &mut buf);
        }
    };
    let value: C64 = match &state.repr {
        StateRepr::Pure(v) => {
            let mut w: Vec<C64> = v.iter().copied().collect();
            transform(&mut w);
            v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum()
        }
        StateRepr::Mixed(rho) => {
            let dim = rho.nrows();
            let diag: Vec<C64> = (0..dim)
                .into_par_iter()
                .map(|j| {
                    let mut col: Vec<C64> = rho.column(j).iter().copied().collect();
                    transform(&mut col);
                    col[j]
                })
                .collect();
            diag.iter().sum()
        }
    };
    if value.im.abs() > IMAG_TOL {
        return Err(Error::Numerical(format!(
            "expectation has imaginary part {:e}",
            value.im
        )));
    }
    Ok(value.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{epr_max, gallery, Epr, NetworkTopology, Source, Werner};
    use std::collections::BTreeMap;

    fn single(r: Resource) -> NetworkTopology {
        let n = r.arity();
        NetworkTopology::new(
            (0..n).map(|i| format!("P{i}")).collect(),
            vec![Source {
                id: "S".into(),
                recipients: (0..n).map(|i| format!("P{i}")).collect(),
                resource: r,
            }],
        )
        .unwrap()
    }

    fn f(slot: usize, ch: char) -> LocalFactor {
        LocalFactor { slots: vec![slot], op: pauli(ch) }
    }

    #[test]
    fn two_bell_pairs() {
        let st = build_state(&gallery("chain(3)").unwrap(), DEFAULT_DIM_CAP).unwrap();
        let StateRepr::Pure(v) = &st.repr else { panic!() };
        for (i, z) in v.iter().enumerate() {
            let want = if [0, 3, 12, 15].contains(&i) { 0.5 } else { 0.0 };
            assert!((z.re - want).abs() < 1e-15 && z.im == 0.0);
        }
        st.validate(1e-9).unwrap();
    }

    #[test]
    fn epr_correlators() {
        let (a, b) = (0.8, 0.6);
        let st = build_state(&single(Resource::Epr(Epr { a, b })), 64).unwrap();
        let e = |p: char, q: char| expectation(&st, &[f(0, p), f(1, q)]).unwrap();
        assert!((e('z', 'z') - 1.0).abs() < 1e-12);
        assert!((e('x', 'x') - 2.0 * a * b).abs() < 1e-12);
        assert!(e('z', 'x').abs() < 1e-12);
        let bell = build_state(&single(epr_max()), 64).unwrap();
        assert!((expectation(&bell, &[f(0, 'z'), f(1, 'z')]).unwrap() - 1.0).abs() < 1e-12);
        assert!(expectation(&bell, &[f(0, 'z'), f(1, 'x')]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn werner_full_visibility_is_pure_projector() {
        let base = WernerBase::Epr(Epr { a: 0.8, b: 0.6 });
        let w = build_state(&single(Resource::Werner(Werner { base, visibility: 1.0 })), 64).unwrap();
        let p = build_state(&single(Resource::Epr(Epr { a: 0.8, b: 0.6 })), 64).unwrap();
        assert!((w.density() - p.density()).iter().all(|z| z.norm() < 1e-15));
        w.validate(1e-9).unwrap();
    }

    #[test]
    fn pauli_without_yy_is_not_psd() {
        let mut coefficients = BTreeMap::new();
        coefficients.insert("11".into(), 1.0);
        coefficients.insert("zz".into(), 1.0);
        coefficients.insert("xx".into(), 1.0);
        let p = PauliState { arity: 2, coefficients };
        assert!(check_pauli_psd(&p).is_err());
        let ev = hermitian_eigenvalues(&pauli_density(&p));
        assert!((ev[0] + 0.25).abs() < 1e-12);
        let mut q = p.clone();
        q.coefficients.insert("yy".into(), -1.0);
        check_pauli_psd(&q).unwrap();
    }

    #[test]
    fn pauli_coefficients_are_expectations() {
        let mut coefficients = BTreeMap::new();
        for (k, v) in [("zz", 0.5), ("xx", 0.4), ("yy", -0.3), ("z1", 0.1)] {
            coefficients.insert(k.to_string(), v);
        }
        let st = build_state(&single(Resource::Pauli(PauliState { arity: 2, coefficients })), 64).unwrap();
        st.validate(1e-9).unwrap();
        for (p, q, want) in [('z', 'z', 0.5), ('x', 'x', 0.4), ('y', 'y', -0.3), ('z', '1', 0.1), ('x', 'z', 0.0)] {
            let e = expectation(&st, &[f(0, p), f(1, q)]).unwrap();
            assert!((e - want).abs() < 1e-12, "{p}{q}: {e}");
        }
    }

    #[test]
    fn cap_and_slot_checks() {
        let net = gallery("cycle(7)").unwrap();
        assert!(matches!(build_state(&net, DEFAULT_DIM_CAP), Err(Error::ResourceLimit(_))));
        let st = build_state(&single(epr_max()), 64).unwrap();
        assert!(expectation(&st, &[f(0, 'z')]).is_err());
        assert!(expectation(&st, &[f(0, 'z'), f(0, 'z')]).is_err());
        let joint = LocalFactor { slots: vec![1, 0], op: kron_all([&pauli('x'), &pauli('z')]) };
        let e = expectation(&st, &[joint]).unwrap();
        assert!(e.abs() < 1e-12);
    }

    #[test]
    fn slot_order_is_respected() {
        // |01> on two qubits: Z on slot 0 gives +1, on slot 1 gives -1.
        let mut v = DVector::from_element(4, c(0.0));
        v[1] = c(1.0);
        let st = QuantumState { repr: StateRepr::Pure(v), particle_dims: vec![2, 2], particle_owner: vec![0, 1] };
        let zi = LocalFactor { slots: vec![0, 1], op: kron_all([&pauli('z'), &pauli('1')]) };
        let iz = LocalFactor { slots: vec![1, 0], op: kron_all([&pauli('z'), &pauli('1')]) };
        assert_eq!(expectation(&st, &[zi]).unwrap(), 1.0);
        assert_eq!(expectation(&st, &[iz]).unwrap(), -1.0);
    }

    #[test]
    fn linear_in_density() {
        let net = gallery("chain(3)").unwrap();
        let a = build_state(&net, 64).unwrap();
        let werner = net
            .with_resources(|_, r| match r {
                Resource::Epr(e) => Resource::Werner(Werner { base: WernerBase::Epr(e.clone()), visibility: 0.3 }),
                r => r.clone(),
            })
            .unwrap();
        let b = build_state(&werner, 64).unwrap();
        let ops = [f(0, 'x'), f(1, 'x'), f(2, 'z'), f(3, 'z')];
        for t in [0.0, 0.25, 0.7, 1.0] {
            let mix = QuantumState {
                repr: StateRepr::Mixed(a.density() * c(t) + b.density() * c(1.0 - t)),
                ..a.clone()
            };
            let lhs = expectation(&mix, &ops).unwrap();
            let rhs = t * expectation(&a, &ops).unwrap() + (1.0 - t) * expectation(&b, &ops).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
