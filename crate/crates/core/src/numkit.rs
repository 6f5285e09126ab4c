//! Dense symmetric linear algebra for the small moment systems of local
//! polynomial fitting.
//!
//! Matrices here have dimension equal to the number of multi-indices of
//! degree at most `l`, so a handful to a few dozen rows. Everything is plain
//! `f64` in row-major storage; no attempt is made at blocking or pivoting
//! strategies beyond what a symmetric positive definite solve needs.

use thiserror::Error;

/// Pivot threshold below which the symmetric factorization is declared
/// singular.
pub const PIVOT_TOL: f64 = 1e-12;

/// Off-diagonal Frobenius norm at which Jacobi sweeps stop.
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("matrix is singular: pivot {pivot:e} at row {row} is below {tol:e}", tol = PIVOT_TOL)]
    Singular { row: usize, pivot: f64 },
    #[error("dimension mismatch: matrix is {matrix}x{matrix}, vector has {vector} entries")]
    DimensionMismatch { matrix: usize, vector: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("matrix dimension must be at least 1")]
    Empty,
}

/// Square symmetric matrix in row-major storage.
///
/// Symmetry is exact: every constructor either mirrors the upper triangle or
/// rejects asymmetric input.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "SymMatrix dimension must be at least 1");
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = v;
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle
    /// (`i <= j`) and mirrored.
    pub fn from_upper<F: FnMut(usize, usize) -> f64>(dim: usize, mut f: F) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// Builds a matrix from full rows, rejecting anything not exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(NumError::Empty);
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(NumError::DimensionMismatch {
                    matrix: dim,
                    vector: r.len(),
                });
            }
            for j in 0..i {
                if r[j] != rows[j][i] {
                    return Err(NumError::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self {
            dim,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)` (once when `i == j`).
    #[inline]
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] += v;
        if i != j {
            self.data[j * self.dim + i] += v;
        }
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|v| *v *= c);
    }

    /// Returns `self + c I`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i] += c;
        }
        m
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                self.data[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Quadratic form `wᵀ A w`.
    pub fn quad_form(&self, w: &[f64]) -> f64 {
        self.mul_vec(w).iter().zip(w).map(|(a, b)| a * b).sum()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }
}

/// Solves `A x = b` for symmetric positive definite `A` by Cholesky
/// factorization.
///
/// A pivot (squared diagonal of the factor) at or below [`PIVOT_TOL`] is
/// reported as [`NumError::Singular`]. Since every Cholesky pivot is bounded
/// below by the smallest eigenvalue, success is guaranteed whenever
/// `min_eigenvalue(a) > PIVOT_TOL`.
pub fn solve_sym(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>, NumError> {
    let n = a.dim;
    if b.len() != n {
        return Err(NumError::DimensionMismatch {
            matrix: n,
            vector: b.len(),
        });
    }
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut pivot = a.get(j, j);
        for k in 0..j {
            pivot -= l[j * n + k] * l[j * n + k];
        }
        if !(pivot > PIVOT_TOL) {
            return Err(NumError::Singular { row: j, pivot });
        }
        let ljj = pivot.sqrt();
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }
    // forward: L y = b
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    // backward: Lᵀ x = y
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Ok(x)
}

/// All eigenvalues of a symmetric matrix, ascending, via cyclic Jacobi
/// rotations.
pub fn eigenvalues(a: &SymMatrix) -> Vec<f64> {
    let n = a.dim;
    let mut m = a.data.clone();
    let scale = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tol = JACOBI_TOL * scale.max(1.0);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &SymMatrix) -> f64 {
    eigenvalues(a)[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
        SymMatrix::from_upper(n, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
        let g: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        SymMatrix::from_upper(n, |i, j| {
            (0..n).map(|k| g[k * n + i] * g[k * n + j]).sum::<f64>()
                + if i == j { 1.0 } else { 0.0 }
        })
    }

    #[test]
    fn solve_identity_and_diagonal() {
        assert_eq!(
            solve_sym(&SymMatrix::identity(2), &[3.0, 7.0]).unwrap(),
            vec![3.0, 7.0]
        );
        let x = solve_sym(&SymMatrix::diagonal(&[2.0, 4.0]), &[2.0, 4.0]).unwrap();
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-15), "{x:?}");
    }

    #[test]
    fn solve_random_spd_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a = random_spd(&mut rng, 4);
            let b: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
            let x = solve_sym(&a, &b).unwrap();
            let r = a.mul_vec(&x);
            let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let res = r
                .iter()
                .zip(&b)
                .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
            assert!(res <= 1e-9 * (1.0 + bmax), "residual {res}");
        }
    }

    #[test]
    fn singular_and_mismatch_errors() {
        let a = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(
            solve_sym(&a, &[1.0, 2.0]),
            Err(NumError::Singular { row: 1, .. })
        ));
        assert!(matches!(
            solve_sym(&SymMatrix::zeros(2), &[0.0, 0.0]),
            Err(NumError::Singular { row: 0, .. })
        ));
        assert!(matches!(
            solve_sym(&SymMatrix::identity(2), &[1.0]),
            Err(NumError::DimensionMismatch {
                matrix: 2,
                vector: 1
            })
        ));
        assert!(matches!(
            SymMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 1.0]]),
            Err(NumError::NotSymmetric { row: 1, col: 0 })
        ));
    }

    #[test]
    fn eigen_examples() {
        assert!((min_eigenvalue(&SymMatrix::identity(3)) - 1.0).abs() < 1e-12);
        assert!((min_eigenvalue(&SymMatrix::diagonal(&[5.0, 2.0, 7.0])) - 2.0).abs() < 1e-12);
        // λ² − 4λ + 3 = (λ − 1)(λ − 3)
        let a = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let ev = eigenvalues(&a);
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_match_trace_and_frobenius() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [1, 3, 8, 20] {
            let a = random_sym(&mut rng, n);
            let ev = eigenvalues(&a);
            let trace: f64 = (0..n).map(|i| a.get(i, i)).sum();
            let frob: f64 = a.rows().iter().flatten().map(|v| v * v).sum();
            assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-9);
            assert!((ev.iter().map(|v| v * v).sum::<f64>() - frob).abs() < 1e-9);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        fn sym_strategy() -> impl Strategy<Value = SymMatrix> {
            (1usize..7).prop_flat_map(|n| {
                proptest::collection::vec(-3.0f64..3.0, n * n)
                    .prop_map(move |v| SymMatrix::from_upper(n, |i, j| v[i * n + j]))
            })
        }

        proptest! {
            #[test]
            fn rayleigh_quotient_bounds_min_eigenvalue(a in sym_strategy(), seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut w: Vec<f64> = (0..a.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                w.iter_mut().for_each(|v| *v /= norm);
                prop_assert!(min_eigenvalue(&a) <= a.quad_form(&w) + 1e-7);
            }

            #[test]
            fn shift_moves_min_eigenvalue(a in sym_strategy(), c in -1.0f64..1.0) {
                prop_assert!((min_eigenvalue(&a.shifted(c)) - min_eigenvalue(&a) - c).abs() <= 1e-7);
            }

            #[test]
            fn solver_agrees_with_spectrum(a in sym_strategy(), c in -1.0f64..2.0) {
                let a = a.shifted(c);
                let lam = min_eigenvalue(&a);
                let b = vec![1.0; a.dim()];
                match solve_sym(&a, &b) {
                    Ok(_) => {}
                    Err(NumError::Singular { .. }) => prop_assert!(lam < 1e-6),
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                }
                if lam > 1e-6 {
                    prop_assert!(solve_sym(&a, &b).is_ok());
                }
            }
        }
    }
}
