//! Banded and periodic linear solvers used by the grid discretizations.

use crate::{Error, Result};

/// Solves a tridiagonal system with the Thomas algorithm.
///
/// `lower[i]` multiplies `x[i-1]` in row `i` (entry 0 unused), `upper[i]`
/// multiplies `x[i+1]` (last entry unused).
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(Error::Mismatch("tridiagonal band lengths differ".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::Singular("zero pivot in Thomas sweep".into()));
    }
    c[0] = upper[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == 0.0 {
            return Err(Error::Singular("zero pivot in Thomas sweep".into()));
        }
        c[i] = upper[i] / beta;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / beta;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

/// LU factors of a periodic (cyclic) tridiagonal matrix, reusable across
/// right-hand sides.
///
/// Row `i` reads `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1]` with
/// indices taken modulo `n`. The two corner entries are removed by a rank-one
/// Sherman–Morrison correction.
#[derive(Debug, Clone)]
pub struct CyclicTridiagonal {
    // Thomas factors of the corner-free matrix A' = A - u v^T.
    c: Vec<f64>,
    inv_beta: Vec<f64>,
    lower: Vec<f64>,
    // Solution of A' z = u and the scalars of the correction.
    z: Vec<f64>,
    corner_last: f64,
    denom: f64,
}

impl CyclicTridiagonal {
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        if lower.len() != n || upper.len() != n {
            return Err(Error::Mismatch("cyclic band lengths differ".into()));
        }
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "cyclic tridiagonal systems need at least 3 unknowns, got {n}"
            )));
        }
        let alpha = upper[n - 1]; // A[n-1][0]
        let beta_corner = lower[0]; // A[0][n-1]
        let gamma = -diag[0];
        let mut d = diag.to_vec();
        d[0] -= gamma;
        d[n - 1] -= alpha * beta_corner / gamma;

        let mut c = vec![0.0; n];
        let mut inv_beta = vec![0.0; n];
        let mut b = d[0];
        if b == 0.0 {
            return Err(Error::Singular("zero pivot in cyclic factorization".into()));
        }
        inv_beta[0] = 1.0 / b;
        c[0] = upper[0] * inv_beta[0];
        for i in 1..n {
            b = d[i] - lower[i] * c[i - 1];
            if b == 0.0 {
                return Err(Error::Singular("zero pivot in cyclic factorization".into()));
            }
            inv_beta[i] = 1.0 / b;
            c[i] = upper[i] * inv_beta[i];
        }
        let mut fact = Self { c, inv_beta, lower: lower.to_vec(), z: Vec::new(), corner_last: 0.0, denom: 0.0 };
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = alpha;
        fact.thomas_in_place(&mut u);
        // v = (1, 0, ..., 0, beta_corner / gamma)
        let vz = u[0] + beta_corner / gamma * u[n - 1];
        fact.denom = 1.0 + vz;
        if fact.denom == 0.0 {
            return Err(Error::Singular("Sherman–Morrison denominator vanished".into()));
        }
        fact.z = u;
        fact.corner_last = beta_corner / gamma;
        Ok(fact)
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    fn thomas_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        x[0] *= self.inv_beta[0];
        for i in 1..n {
            x[i] = (x[i] - self.lower[i] * x[i - 1]) * self.inv_beta[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.c[i] * x[i + 1];
        }
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        debug_assert_eq!(n, self.len());
        self.thomas_in_place(rhs);
        let vy = rhs[0] + self.corner_last * rhs[n - 1];
        let factor = vy / self.denom;
        for (x, z) in rhs.iter_mut().zip(&self.z) {
            *x -= factor * z;
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Periodic second difference `(x[j+1] - 2 x[j] + x[j-1]) / h^2`, `h = 1/n`.
pub fn periodic_laplacian(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let inv_h2 = (n * n) as f64;
    (0..n)
        .map(|j| {
            let l = x[(j + n - 1) % n];
            let r = x[(j + 1) % n];
            (r - 2.0 * x[j] + l) * inv_h2
        })
        .collect()
}

/// Forward difference `(x[j+1] - x[j]) / h` on the periodic grid.
pub fn forward_difference(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let inv_h = n as f64;
    (0..n).map(|j| (x[(j + 1) % n] - x[j]) * inv_h).collect()
}

/// Solves a dense square system by LU with partial pivoting.
pub fn solve_dense(matrix: nalgebra::DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let b = nalgebra::DVector::from_column_slice(rhs);
    matrix
        .lu()
        .solve(&b)
        .map(|x| x.iter().copied().collect())
        .ok_or_else(|| Error::Singular("dense LU solve failed".into()))
}

pub fn l2_norm(x: &[f64]) -> f64 {
    let h = 1.0 / x.len() as f64;
    (x.iter().map(|v| v * v).sum::<f64>() * h).sqrt()
}

pub fn l1_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64
}

pub fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_cyclic_apply(lower: &[f64], diag: &[f64], upper: &[f64], x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n).map(|i| lower[i] * x[(i + n - 1) % n] + diag[i] * x[i] + upper[i] * x[(i + 1) % n]).collect()
    }

    #[test]
    fn thomas_matches_known_solution() {
        let lower = [0.0, -1.0, -1.0, -1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let upper = [-1.0, -1.0, -1.0, 0.0];
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let rhs: Vec<f64> = (0..4)
            .map(|i| {
                let mut s = diag[i] * x_true[i];
                if i > 0 {
                    s += lower[i] * x_true[i - 1];
                }
                if i < 3 {
                    s += upper[i] * x_true[i + 1];
                }
                s
            })
            .collect();
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        for (a, b) in x.iter().zip(x_true) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn cyclic_solver_inverts_random_dominant_systems() {
        let n = 17;
        let lower: Vec<f64> = (0..n).map(|i| -0.3 - 0.01 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| -0.7 + 0.02 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + 0.1 * (i as f64).sin()).collect();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).cos()).collect();
        let rhs = dense_cyclic_apply(&lower, &diag, &upper, &x_true);
        let fact = CyclicTridiagonal::new(&lower, &diag, &upper).unwrap();
        let x = fact.solve(&rhs);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn implicit_heat_step_preserves_constants() {
        let n = 32;
        let r = 0.5 * 1e-3 * (n * n) as f64;
        let fact = CyclicTridiagonal::new(&vec![-r; n], &vec![1.0 + 2.0 * r; n], &vec![-r; n]).unwrap();
        let x = fact.solve(&vec![0.3; n]);
        assert!(x.iter().all(|v| (v - 0.3).abs() < 1e-15));
    }

    #[test]
    fn laplacian_of_cosine_is_close_to_analytic() {
        let n = 256;
        let x: Vec<f64> = (0..n).map(|j| (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos()).collect();
        let lap = periodic_laplacian(&x);
        let k2 = (2.0 * std::f64::consts::PI).powi(2);
        for (l, v) in lap.iter().zip(&x) {
            assert!((l + k2 * v).abs() < 1e-2);
        }
    }
}
