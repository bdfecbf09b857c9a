//! Fixed 5×5 dense linear algebra: enough for determinants, solves and
//! numeric rank of the bracket matrices.

use alloc::vec::Vec;
use core::ops::Index;

pub type Vec5 = [f64; 5];

/// Row-major 5×5 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat5(pub [[f64; 5]; 5]);

impl Mat5 {
    pub const IDENTITY: Mat5 = Mat5([
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.0],
    ]);

    pub fn from_columns(cols: &[Vec5; 5]) -> Mat5 {
        Mat5(core::array::from_fn(|i| {
            core::array::from_fn(|j| cols[j][i])
        }))
    }

    pub fn column(&self, j: usize) -> Vec5 {
        core::array::from_fn(|i| self.0[i][j])
    }

    pub fn columns(&self) -> [Vec5; 5] {
        core::array::from_fn(|j| self.column(j))
    }

    pub fn mul_vec(&self, v: &Vec5) -> Vec5 {
        core::array::from_fn(|i| (0..5).map(|j| self.0[i][j] * v[j]).sum())
    }

    pub fn determinant(&self) -> f64 {
        match Lu::factor(self) {
            Some(lu) => lu.determinant(),
            None => 0.0,
        }
    }

    /// Solves `self · x = b`; `None` when a pivot vanishes exactly.
    pub fn solve(&self, b: &Vec5) -> Option<Vec5> {
        Lu::factor(self).map(|lu| lu.solve(b))
    }

    pub fn inverse(&self) -> Option<Mat5> {
        let lu = Lu::factor(self)?;
        let cols: [Vec5; 5] = core::array::from_fn(|j| {
            let mut e = [0.0; 5];
            e[j] = 1.0;
            lu.solve(&e)
        });
        Some(Mat5::from_columns(&cols))
    }
}

impl Index<(usize, usize)> for Mat5 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

/// LU factorization with partial pivoting.
struct Lu {
    a: [[f64; 5]; 5],
    perm: [usize; 5],
    sign: f64,
}

impl Lu {
    fn factor(m: &Mat5) -> Option<Lu> {
        let mut a = m.0;
        let mut perm = [0, 1, 2, 3, 4];
        let mut sign = 1.0;
        for k in 0..5 {
            let p = (k..5)
                .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
                .unwrap_or(k);
            if a[p][k] == 0.0 {
                return None;
            }
            if p != k {
                a.swap(p, k);
                perm.swap(p, k);
                sign = -sign;
            }
            for i in k + 1..5 {
                let f = a[i][k] / a[k][k];
                a[i][k] = f;
                for j in k + 1..5 {
                    a[i][j] -= f * a[k][j];
                }
            }
        }
        Some(Lu { a, perm, sign })
    }

    fn determinant(&self) -> f64 {
        (0..5).fold(self.sign, |acc, i| acc * self.a[i][i])
    }

    fn solve(&self, b: &Vec5) -> Vec5 {
        let mut y: Vec5 = core::array::from_fn(|i| b[self.perm[i]]);
        for i in 0..5 {
            for j in 0..i {
                y[i] -= self.a[i][j] * y[j];
            }
        }
        for i in (0..5).rev() {
            for j in i + 1..5 {
                y[i] -= self.a[i][j] * y[j];
            }
            y[i] /= self.a[i][i];
        }
        y
    }
}

/// Numeric rank of the span of `cols` by Gaussian elimination with complete
/// pivoting. A pivot counts when it exceeds `rel_tol` times the largest
/// entry of the input.
pub fn rank(cols: &[Vec5], rel_tol: f64) -> usize {
    if cols.is_empty() {
        return 0;
    }
    let mut a: Vec<Vec5> = cols.to_vec();
    let scale = a
        .iter()
        .flat_map(|c| c.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let tol = rel_tol * scale;
    let n = a.len();
    let mut rows: [usize; 5] = [0, 1, 2, 3, 4];
    let mut r = 0;
    while r < 5 && r < n {
        // complete pivot over remaining rows and columns
        let mut best = (r, r, 0.0);
        for (cj, col) in a.iter().enumerate().skip(r) {
            for &ri in rows.iter().skip(r) {
                if col[ri].abs() > best.2 {
                    best = (cj, ri, col[ri].abs());
                }
            }
        }
        if best.2 <= tol {
            break;
        }
        a.swap(r, best.0);
        let pos = rows.iter().position(|&x| x == best.1).unwrap_or(r);
        rows.swap(r, pos);
        let pr = rows[r];
        let pivot = a[r];
        for col in a.iter_mut().skip(r + 1) {
            let f = col[pr] / pivot[pr];
            for i in 0..5 {
                col[i] -= f * pivot[i];
            }
        }
        r += 1;
    }
    r
}

pub fn norm(v: &Vec5) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

pub fn sub(a: &Vec5, b: &Vec5) -> Vec5 {
    core::array::from_fn(|i| a[i] - b[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Mat5 {
        Mat5([
            [2.0, 1.0, 0.0, 0.0, 3.0],
            [1.0, -1.0, 4.0, 0.0, 0.0],
            [0.0, 2.0, 1.0, 5.0, 0.0],
            [1.0, 0.0, 0.0, 1.0, -2.0],
            [0.0, 0.0, 3.0, 1.0, 1.0],
        ])
    }

    #[test]
    fn identity_determinant() {
        assert_eq!(Mat5::IDENTITY.determinant(), 1.0);
    }

    #[test]
    fn permutation_flips_sign() {
        let mut m = Mat5::IDENTITY;
        m.0.swap(0, 3);
        assert_eq!(m.determinant(), -1.0);
    }

    #[test]
    fn solve_round_trip() {
        let m = sample();
        let x = [1.0, -2.0, 0.5, 3.0, -1.5];
        let b = m.mul_vec(&x);
        let y = m.solve(&b).unwrap();
        for i in 0..5 {
            assert!((x[i] - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let m = sample();
        let inv = m.inverse().unwrap();
        for j in 0..5 {
            let c = m.mul_vec(&inv.column(j));
            for i in 0..5 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((c[i] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_has_zero_determinant_and_no_solve() {
        let mut m = sample();
        m.0[4] = m.0[0];
        assert!(m.determinant().abs() < 1e-12);
        let z = Mat5([[0.0; 5]; 5]);
        assert!(z.solve(&[1.0; 5]).is_none());
    }

    #[test]
    fn rank_of_dependent_columns() {
        let a = [1.0, 2.0, 0.0, 0.0, 0.0];
        let b = [0.0, 1.0, 1.0, 0.0, 0.0];
        let c = [1.0, 3.0, 1.0, 0.0, 0.0];
        assert_eq!(rank(&[a, b, c], 1e-8), 2);
        assert_eq!(rank(&[a, b, c, [0.0, 0.0, 0.0, 0.0, 1e-3]], 1e-8), 3);
        assert_eq!(rank(&[], 1e-8), 0);
        assert_eq!(rank(&[[0.0; 5]], 1e-8), 0);
        assert_eq!(rank(&sample().columns(), 1e-8), 5);
    }
}
