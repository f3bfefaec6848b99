//! Small dense complex linear algebra helpers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
/// Dense complex operator.
pub type DenseOperator = DMatrix<C64>;
pub type StateVector = DVector<C64>;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Single-qubit Pauli matrix for `'1'`, `'x'`, `'y'` or `'z'`.
pub fn pauli(ch: char) -> DenseOperator {
    let (o, l, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    let e = match ch {
        '1' => [l, o, o, l],
        'x' => [o, l, l, o],
        'y' => [o, -i, i, o],
        'z' => [l, o, o, -l],
        _ => panic!("not a Pauli label: {ch}"),
    };
    DMatrix::from_row_slice(2, 2, &e)
}

/// Kronecker product of a list of operators (the 1×1 identity when empty).
pub fn kron_all<'a>(ms: impl IntoIterator<Item = &'a DenseOperator>) -> DenseOperator {
    ms.into_iter()
        .fold(DMatrix::identity(1, 1), |acc, m| acc.kronecker(m))
}

pub fn kron_vec<'a>(vs: impl IntoIterator<Item = &'a StateVector>) -> StateVector {
    vs.into_iter()
        .fold(DVector::from_element(1, c(1.0)), |acc, v| acc.kronecker(v))
}

/// Largest entry of `|M† - M|`.
pub fn hermiticity_error(m: &DenseOperator) -> f64 {
    (m.adjoint() - m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entry of `|M² - I|`.
pub fn involution_error(m: &DenseOperator) -> f64 {
    let n = m.nrows();
    (m * m - DMatrix::<C64>::identity(n, n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DenseOperator) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paulis_anticommute_and_square_to_one() {
        for a in ['x', 'y', 'z'] {
            assert!(involution_error(&pauli(a)) < 1e-15);
            for b in ['x', 'y', 'z'] {
                if a != b {
                    let ac = pauli(a) * pauli(b) + pauli(b) * pauli(a);
                    assert!(ac.iter().all(|z| z.norm() < 1e-15));
                }
            }
        }
    }

    #[test]
    fn eigenvalues_of_pauli_product() {
        let zz = kron_all([&pauli('z'), &pauli('z')]);
        assert_eq!(hermitian_eigenvalues(&zz), vec![-1.0, -1.0, 1.0, 1.0]);
        let y = pauli('y');
        let ev = hermitian_eigenvalues(&y);
        assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
    }
}
