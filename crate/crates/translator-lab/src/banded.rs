//! Banded LU factorization with partial pivoting.
//!
//! The Newton linearization couples each interior node to its 9-point
//! stencil neighbours, so with lexicographic unknown ordering the matrix
//! has bandwidth ns-1 on both sides. A direct banded factorization is
//! deterministic and fast at desk scale (grids up to 257^2).

use crate::error::{Error, Result};

/// Column-major banded storage in LAPACK general-band layout: entry
/// (i, j) lives at working row i - j + kl + ku of column j. The extra
/// `kl` upper rows hold the fill produced by row pivoting.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    rows: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zero(n: usize, kl: usize, ku: usize) -> BandedMatrix {
        let rows = 2 * kl + ku + 1;
        BandedMatrix { n, kl, ku, rows, data: vec![0.0; rows * n] }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + self.kl + self.ku >= j && j + self.kl >= i, "({i},{j}) outside band");
        j * self.rows + (i + self.kl + self.ku - j)
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j);
        self.data[k] = v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.slot(i, j)]
    }

    /// In-place LU with partial pivoting; fails on a (near-)singular pivot.
    pub fn factor(mut self) -> Result<BandedLu> {
        let (n, kl) = (self.n, self.kl);
        let kw = self.kl + self.ku; // working upper bandwidth after pivoting
        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            let i_max = (j + kl).min(n - 1);
            // pivot search in column j
            let mut p = j;
            let mut best = self.get(j, j).abs();
            for i in (j + 1)..=i_max {
                let v = self.get(i, j).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 1e-300) || !best.is_finite() {
                return Err(Error::LinearSolve(format!(
                    "singular pivot at column {j} (|pivot| = {best:.3e})"
                )));
            }
            ipiv[j] = p;
            let c_max = (j + kw).min(n - 1);
            if p != j {
                for c in j..=c_max {
                    let a = self.get(j, c);
                    let b = self.get(p, c);
                    self.set(j, c, b);
                    self.set(p, c, a);
                }
            }
            let piv = self.get(j, j);
            for i in (j + 1)..=i_max {
                let m = self.get(i, j) / piv;
                self.set(i, j, m);
                if m != 0.0 {
                    for c in (j + 1)..=c_max {
                        let v = self.get(i, c) - m * self.get(j, c);
                        self.set(i, c, v);
                    }
                }
            }
        }
        Ok(BandedLu { mat: self, ipiv })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    mat: BandedMatrix,
    ipiv: Vec<usize>,
}

impl BandedLu {
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.mat.n;
        if b.len() != n {
            return Err(Error::Input(format!("rhs length {} != n {}", b.len(), n)));
        }
        let kl = self.mat.kl;
        let kw = self.mat.kl + self.mat.ku;
        let mut x = b.to_vec();
        // forward elimination with the recorded row swaps
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                x.swap(j, p);
            }
            let xj = x[j];
            if xj != 0.0 {
                let i_max = (j + kl).min(n - 1);
                for i in (j + 1)..=i_max {
                    x[i] -= self.mat.get(i, j) * xj;
                }
            }
        }
        // back substitution
        for j in (0..n).rev() {
            x[j] /= self.mat.get(j, j);
            let xj = x[j];
            if xj != 0.0 {
                let i_min = j.saturating_sub(kw);
                for i in i_min..j {
                    x[i] -= self.mat.get(i, j) * xj;
                }
            }
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Naive dense Gaussian elimination with partial pivoting (test oracle).
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for j in 0..n {
            let p = (j..n).max_by(|&x, &y| a[x][j].abs().total_cmp(&a[y][j].abs())).unwrap();
            a.swap(j, p);
            b.swap(j, p);
            for i in (j + 1)..n {
                let m = a[i][j] / a[j][j];
                for c in j..n {
                    a[i][c] -= m * a[j][c];
                }
                b[i] -= m * b[j];
            }
        }
        for j in (0..n).rev() {
            b[j] /= a[j][j];
            for i in 0..j {
                b[i] -= a[i][j] * b[j];
            }
        }
        b
    }

    #[test]
    fn tridiagonal_poisson_solves_exactly() {
        // -u'' = 2 with u(0)=u(1)=0 on 5 interior nodes: u = x(1-x)
        let n = 5;
        let h = 1.0 / 6.0;
        let mut m = BandedMatrix::zero(n, 1, 1);
        for i in 0..n {
            m.set(i, i, 2.0 / (h * h));
            if i > 0 {
                m.set(i, i - 1, -1.0 / (h * h));
            }
            if i < n - 1 {
                m.set(i, i + 1, -1.0 / (h * h));
            }
        }
        let lu = m.factor().unwrap();
        let x = lu.solve(&vec![2.0; n]).unwrap();
        for (k, xi) in x.iter().enumerate() {
            let t = (k + 1) as f64 * h;
            assert!((xi - t * (1.0 - t)).abs() < 1e-12);
        }
    }

    #[test]
    fn random_banded_systems_match_dense_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for &(n, kl, ku) in &[(12usize, 3usize, 2usize), (30, 5, 5), (9, 8, 8)] {
            let mut band = BandedMatrix::zero(n, kl, ku);
            let mut dense = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    if i <= j + kl && j <= i + ku {
                        let v: f64 = rng.gen_range(-1.0..1.0);
                        let v = if i == j { v + 3.0 } else { v };
                        band.set(i, j, v);
                        dense[i][j] = v;
                    }
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let x = band.factor().unwrap().solve(&b).unwrap();
            let y = dense_solve(dense, b);
            for (xi, yi) in x.iter().zip(&y) {
                assert!((xi - yi).abs() < 1e-10, "banded {xi} vs dense {yi}");
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0, 1], [1, 0]] requires a row swap
        let mut m = BandedMatrix::zero(2, 1, 1);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        let x = m.factor().unwrap().solve(&[2.0, 3.0]).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_reports_linear_solve_error() {
        let mut m = BandedMatrix::zero(3, 1, 1);
        m.set(0, 0, 1.0);
        m.set(1, 1, 1.0);
        // last row/column all zero -> singular
        assert!(matches!(m.factor(), Err(Error::LinearSolve(_))));
    }
}
