//! Householder QR and triangular solves.

use super::matrix::{dot, Matrix};
use crate::error::{Error, Result};

/// Compact Householder factorization of a tall matrix.
///
/// Column `k` below the diagonal holds the reflector `v_k` scaled so its
/// leading entry is an implicit 1; `tau[k]` is the matching `2 / vᵀv`.
/// The upper triangle holds R before the sign normalization recorded in `flip`.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    qr: Matrix,
    tau: Vec<f64>,
    flip: Vec<f64>,
}

impl HouseholderQr {
    pub fn new(a: &Matrix) -> Result<Self> {
        let (m, n) = a.shape();
        if m < n {
            return Err(Error::shape("qr_thin", format!("rows >= cols ({n})"), format!("{m} rows")));
        }
        let mut qr = a.clone();
        let mut tau = vec![0.0; n];
        let mut flip = vec![1.0; n];
        for k in 0..n {
            let (head, tail) = qr.as_mut_slice().split_at_mut((k + 1) * m);
            let col = &mut head[k * m + k..(k + 1) * m];
            let alpha = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if alpha == 0.0 {
                continue;
            }
            let x0 = col[0];
            let s = if x0 >= 0.0 { 1.0 } else { -1.0 };
            let v0 = x0 + s * alpha;
            for v in col[1..].iter_mut() {
                *v /= v0;
            }
            let vnorm_sq = 1.0 + col[1..].iter().map(|v| v * v).sum::<f64>();
            let t = 2.0 / vnorm_sq;
            tau[k] = t;
            col[0] = -s * alpha;
            if col[0] < 0.0 {
                flip[k] = -1.0;
            }
            let v_tail = &col[1..];
            for j in 0..(n - k - 1) {
                let cj = &mut tail[j * m + k..(j + 1) * m];
                let w = cj[0] + dot(v_tail, &cj[1..]);
                let tw = t * w;
                cj[0] -= tw;
                for (c, v) in cj[1..].iter_mut().zip(v_tail) {
                    *c -= tw * v;
                }
            }
        }
        let f = HouseholderQr { qr, tau, flip };
        f.check_rank()?;
        Ok(f)
    }

    fn check_rank(&self) -> Result<()> {
        let (m, n) = self.qr.shape();
        let mut max_r = 0.0_f64;
        for j in 0..n {
            for i in 0..=j {
                max_r = max_r.max(self.qr[(i, j)].abs());
            }
        }
        let tol = f64::EPSILON * m.max(n) as f64 * max_r;
        for k in 0..n {
            let pivot = self.qr[(k, k)].abs();
            if pivot <= tol || !pivot.is_finite() {
                return Err(Error::Singular { column: k, pivot });
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.qr.rows()
    }

    pub fn cols(&self) -> usize {
        self.qr.cols()
    }

    /// Upper-triangular factor with nonnegative diagonal.
    pub fn r(&self) -> Matrix {
        let n = self.cols();
        Matrix::from_fn(n, n, |i, j| if i <= j { self.flip[i] * self.qr[(i, j)] } else { 0.0 })
    }

    /// Apply `H_k` (rows k..) to a full-length vector.
    fn reflect(&self, k: usize, y: &mut [f64]) {
        let m = self.rows();
        let t = self.tau[k];
        if t == 0.0 {
            return;
        }
        let v_tail = &self.qr.col(k)[k + 1..m];
        let w = y[k] + dot(v_tail, &y[k + 1..]);
        let tw = t * w;
        y[k] -= tw;
        for (c, v) in y[k + 1..].iter_mut().zip(v_tail) {
            *c -= tw * v;
        }
    }

    /// Thin orthonormal factor Q (rows × cols) such that `Q R = A`.
    pub fn q(&self) -> Matrix {
        let (m, n) = self.qr.shape();
        let mut q = Matrix::eye(m, n);
        for k in (0..n).rev() {
            for j in k..n {
                self.reflect(k, q.col_mut(j));
            }
        }
        for j in 0..n {
            if self.flip[j] < 0.0 {
                for v in q.col_mut(j) {
                    *v = -*v;
                }
            }
        }
        q
    }

    /// First `cols` entries of `Qᵀ y` for the thin Q returned by [`HouseholderQr::q`].
    pub fn apply_qt(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows() {
            return Err(Error::shape("apply_qt", format!("length {}", self.rows()), format!("length {}", y.len())));
        }
        let mut w = y.to_vec();
        for k in 0..self.cols() {
            self.reflect(k, &mut w);
        }
        w.truncate(self.cols());
        for (v, f) in w.iter_mut().zip(&self.flip) {
            *v *= f;
        }
        Ok(w)
    }

    /// Least-squares solution of `min ‖A x − y‖`.
    pub fn solve_ls(&self, y: &[f64]) -> Result<Vec<f64>> {
        let c = self.apply_qt(y)?;
        solve_upper(&self.r(), &c)
    }
}

/// Thin QR with `R_kk ≥ 0`.
pub fn qr_thin(a: &Matrix) -> Result<(Matrix, Matrix)> {
    let f = HouseholderQr::new(a)?;
    Ok((f.q(), f.r()))
}

fn check_triangular(r: &Matrix, v: &[f64], op: &'static str) -> Result<()> {
    let n = r.rows();
    if r.cols() != n {
        return Err(Error::shape(op, "square R", format!("{}x{}", r.rows(), r.cols())));
    }
    if v.len() != n {
        return Err(Error::shape(op, format!("vector of length {n}"), format!("length {}", v.len())));
    }
    let tol = f64::EPSILON * n as f64 * r.max_abs();
    for k in 0..n {
        let p = r[(k, k)].abs();
        if p <= tol || !p.is_finite() {
            return Err(Error::Singular { column: k, pivot: p });
        }
    }
    Ok(())
}

/// Solve `R x = b` for upper-triangular R.
pub fn solve_upper(r: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    check_triangular(r, b, "solve_upper")?;
    Ok(back_substitute(r, b))
}

/// Solve `Rᵀ x = b` for upper-triangular R.
pub fn solve_upper_transpose(r: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    check_triangular(r, b, "solve_upper_transpose")?;
    Ok(forward_substitute_t(r, b))
}

fn back_substitute(r: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = r.rows();
    let mut x = b.to_vec();
    for k in (0..n).rev() {
        x[k] /= r[(k, k)];
        let xk = x[k];
        let col = &r.col(k)[..k];
        for (xi, rik) in x[..k].iter_mut().zip(col) {
            *xi -= rik * xk;
        }
    }
    x
}

fn forward_substitute_t(r: &Matrix, b: &[f64]) -> Vec<f64> {
    // Row k of Rᵀ is column k of R, which is contiguous.
    let n = r.rows();
    let mut x = b.to_vec();
    for k in 0..n {
        let col = &r.col(k)[..k];
        let s = dot(col, &x[..k]);
        x[k] = (x[k] - s) / r[(k, k)];
    }
    x
}

/// Solve `RᵀR w = v` with one forward and one backward substitution.
pub fn tri_solve_pair(r: &Matrix, v: &[f64]) -> Result<Vec<f64>> {
    check_triangular(r, v, "tri_solve_pair")?;
    Ok(back_substitute(r, &forward_substitute_t(r, v)))
}
