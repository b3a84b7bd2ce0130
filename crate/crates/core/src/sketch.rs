//! Sketching operators.
//!
//! The SRHT is built as `S_i = sqrt(n_pad / m_i) · B_i · H · D · P` where
//! `P` permutes rows, `D` flips signs, `H` is the orthonormal Walsh–Hadamard
//! matrix and `B_i` keeps the first `m_i` rows of a fixed random row order.
//! One transform of the data therefore serves every nested size.

use std::fmt;
use std::str::FromStr;

use crate::dense::{axpy, fwht_normalized_in_place, matmul_tn, symmetric_spectral_norm, Matrix};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SketchKind {
    Srht,
    CountSketch,
    Gaussian,
}

impl fmt::Display for SketchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SketchKind::Srht => "srht",
            SketchKind::CountSketch => "countsketch",
            SketchKind::Gaussian => "gaussian",
        })
    }
}

impl FromStr for SketchKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "srht" => Ok(SketchKind::Srht),
            "countsketch" | "cs" | "count-sketch" => Ok(SketchKind::CountSketch),
            "gaussian" => Ok(SketchKind::Gaussian),
            other => Err(Error::Config(format!("unknown sketch kind '{other}' (srht|countsketch|gaussian)"))),
        }
    }
}

/// Seeded description of a nested SRHT family.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchPlan {
    pub n: usize,
    pub n_padded: usize,
    pub sign_flips: Vec<f64>,
    pub perm: Vec<usize>,
    pub row_order: Vec<usize>,
    pub sizes: Vec<usize>,
    pub seed: u64,
}

pub fn build_srht_plan(n: usize, sizes: &[usize], rng: &Rng) -> Result<SketchPlan> {
    if n == 0 {
        return Err(Error::Config("cannot sketch an empty matrix".into()));
    }
    if sizes.is_empty() {
        return Err(Error::Config("SRHT plan needs at least one sketch size".into()));
    }
    if sizes[0] == 0 {
        return Err(Error::Config("sketch sizes must be positive".into()));
    }
    if let Some(w) = sizes.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "sketch sizes must be strictly increasing ({} followed by {})",
            w[0], w[1]
        )));
    }
    let n_padded = n.next_power_of_two();
    let m_max = *sizes.last().unwrap();
    if m_max > n_padded {
        return Err(Error::Config(format!(
            "largest sketch size {m_max} exceeds padded row count {n_padded}"
        )));
    }
    let mut signs = rng.fork("srht-signs");
    let sign_flips = (0..n_padded).map(|_| signs.sign()).collect();
    let perm = rng.fork("srht-perm").permutation(n_padded);
    let row_order = rng.fork("srht-rows").permutation(n_padded);
    Ok(SketchPlan {
        n,
        n_padded,
        sign_flips,
        perm,
        row_order,
        sizes: sizes.to_vec(),
        seed: rng.seed(),
    })
}

impl SketchPlan {
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    /// Row indices (into the transformed data) retained by sketch `i` (1-based).
    pub fn rows_for(&self, i: usize) -> Result<&[usize]> {
        if i == 0 || i > self.k() {
            return Err(Error::OutOfRange { index: i, len: self.k() });
        }
        Ok(&self.row_order[..self.sizes[i - 1]])
    }

    pub fn scale_for(&self, i: usize) -> f64 {
        (self.n_padded as f64 / self.sizes[i - 1] as f64).sqrt()
    }

    /// `n_pad · d · log2(n_pad)` additions for the column-wise transforms.
    pub fn transform_flops(&self, d: usize) -> u64 {
        (self.n_padded * d * self.n_padded.trailing_zeros() as usize) as u64
    }

    fn hdp_column(&self, src: &[f64], dst: &mut [f64]) {
        for (k, out) in dst.iter_mut().enumerate() {
            let j = self.perm[k];
            let v = if j < src.len() { src[j] } else { 0.0 };
            *out = self.sign_flips[k] * v;
        }
        fwht_normalized_in_place(dst).expect("padded length is a power of two");
    }

    /// `H D P` applied to the zero-padded columns of `x`.
    pub fn apply_hdp(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.n {
            return Err(Error::shape("apply_hdp", format!("{} rows", self.n), format!("{} rows", x.rows())));
        }
        let mut out = Matrix::zeros(self.n_padded, x.cols());
        for j in 0..x.cols() {
            self.hdp_column(x.col(j), out.col_mut(j));
        }
        Ok(out)
    }

    pub fn apply_hdp_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n {
            return Err(Error::shape("apply_hdp", format!("length {}", self.n), format!("length {}", y.len())));
        }
        let mut out = vec![0.0; self.n_padded];
        self.hdp_column(y, &mut out);
        Ok(out)
    }
}

/// Transformed data `(HDP X, HDP Y)` plus the nested sampling needed to cut views.
#[derive(Debug, Clone)]
pub struct SketchedDataset {
    pub sx0: Matrix,
    pub sy0: Vec<f64>,
    plan_rows: Vec<usize>,
    sizes: Vec<usize>,
    n_padded: usize,
}

pub fn apply_srht_full(plan: &SketchPlan, x: &Matrix, y: &[f64]) -> Result<SketchedDataset> {
    let sx0 = plan.apply_hdp(x)?;
    let sy0 = plan.apply_hdp_vec(y)?;
    let m_max = *plan.sizes.last().unwrap();
    Ok(SketchedDataset {
        sx0,
        sy0,
        plan_rows: plan.row_order[..m_max].to_vec(),
        sizes: plan.sizes.clone(),
        n_padded: plan.n_padded,
    })
}

impl SketchedDataset {
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn rows_for(&self, i: usize) -> Result<&[usize]> {
        if i == 0 || i > self.k() {
            return Err(Error::OutOfRange { index: i, len: self.k() });
        }
        Ok(&self.plan_rows[..self.sizes[i - 1]])
    }

    /// `(S_i X, S_i Y)` for the 1-based sketch index `i`, as a scaled gather.
    pub fn extract_view(&self, i: usize) -> Result<(Matrix, Vec<f64>)> {
        let rows = self.rows_for(i)?;
        let scale = (self.n_padded as f64 / rows.len() as f64).sqrt();
        let a = self.sx0.gather_rows(rows, scale);
        let b = rows.iter().map(|&r| scale * self.sy0[r]).collect();
        Ok((a, b))
    }
}

/// SRHT sketch of a single size `m`.
pub fn srht_apply(m: usize, x: &Matrix, y: &[f64], rng: &Rng) -> Result<(Matrix, Vec<f64>)> {
    let plan = build_srht_plan(x.rows(), &[m], rng)?;
    apply_srht_full(&plan, x, y)?.extract_view(1)
}

/// Sparse sketch: each input row goes to one bucket with a random sign.
#[derive(Debug, Clone, PartialEq)]
pub struct CountSketch {
    m: usize,
    buckets: Vec<usize>,
    signs: Vec<f64>,
}

impl CountSketch {
    pub fn random(n: usize, m: usize, rng: &Rng) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("CountSketch size must be at least 1".into()));
        }
        let mut r = rng.fork("countsketch");
        let mut buckets = Vec::with_capacity(n);
        let mut signs = Vec::with_capacity(n);
        for _ in 0..n {
            buckets.push(r.below(m));
            signs.push(r.sign());
        }
        Ok(CountSketch { m, buckets, signs })
    }

    /// Explicit hash and sign assignment.
    pub fn from_parts(m: usize, buckets: Vec<usize>, signs: Vec<f64>) -> Result<Self> {
        if buckets.len() != signs.len() {
            return Err(Error::shape("CountSketch::from_parts", format!("{} signs", buckets.len()), format!("{} signs", signs.len())));
        }
        if m == 0 || buckets.iter().any(|&b| b >= m) {
            return Err(Error::Config(format!("bucket index out of range 0..{m}")));
        }
        if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::Config("CountSketch signs must be ±1".into()));
        }
        Ok(CountSketch { m, buckets, signs })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.buckets.len()
    }

    pub fn apply_matrix(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.n() {
            return Err(Error::shape("countsketch_apply", format!("{} rows", self.n()), format!("{} rows", x.rows())));
        }
        let mut out = Matrix::zeros(self.m, x.cols());
        for c in 0..x.cols() {
            let src = x.col(c);
            let dst = out.col_mut(c);
            for ((&b, &s), &v) in self.buckets.iter().zip(&self.signs).zip(src) {
                dst[b] += s * v;
            }
        }
        Ok(out)
    }

    pub fn apply_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n() {
            return Err(Error::shape("countsketch_apply", format!("length {}", self.n()), format!("length {}", y.len())));
        }
        let mut out = vec![0.0; self.m];
        for ((&b, &s), &v) in self.buckets.iter().zip(&self.signs).zip(y) {
            out[b] += s * v;
        }
        Ok(out)
    }

    /// Dense `m × n` realization.
    pub fn to_dense(&self) -> Matrix {
        let mut s = Matrix::zeros(self.m, self.n());
        for (j, (&b, &sg)) in self.buckets.iter().zip(&self.signs).enumerate() {
            s[(b, j)] = sg;
        }
        s
    }
}

pub fn countsketch_apply(m: usize, x: &Matrix, y: &[f64], rng: &Rng) -> Result<(Matrix, Vec<f64>)> {
    let cs = CountSketch::random(x.rows(), m, rng)?;
    Ok((cs.apply_matrix(x)?, cs.apply_vec(y)?))
}

/// Dense Gaussian sketch with entries `N(0, 1/m)`, generated column by column.
pub fn gaussian_matrix(m: usize, n: usize, rng: &Rng) -> Matrix {
    let mut r = rng.fork("gaussian");
    let sd = 1.0 / (m as f64).sqrt();
    let mut s = Matrix::zeros(m, n);
    r.fill_gaussian(s.as_mut_slice(), sd);
    s
}

/// `(S X, S Y)` for the Gaussian sketch of [`gaussian_matrix`], streamed so
/// `S` is never held in memory. Cost `O(m n d)`; intended for testing.
pub fn gaussian_apply(m: usize, x: &Matrix, y: &[f64], rng: &Rng) -> Result<(Matrix, Vec<f64>)> {
    if m == 0 {
        return Err(Error::Config("Gaussian sketch size must be at least 1".into()));
    }
    let n = x.rows();
    if y.len() != n {
        return Err(Error::shape("gaussian_apply", format!("length {n}"), format!("length {}", y.len())));
    }
    let mut r = rng.fork("gaussian");
    let sd = 1.0 / (m as f64).sqrt();
    let mut g = vec![0.0; m];
    let mut sx = Matrix::zeros(m, x.cols());
    let mut sy = vec![0.0; m];
    for j in 0..n {
        r.fill_gaussian(&mut g, sd);
        for c in 0..x.cols() {
            let v = x[(j, c)];
            if v != 0.0 {
                axpy(v, &g, sx.col_mut(c));
            }
        }
        axpy(y[j], &g, &mut sy);
    }
    Ok((sx, sy))
}

/// Sketch `(x, y)` to `m` rows with the requested operator.
pub fn sketch_once(kind: SketchKind, m: usize, x: &Matrix, y: &[f64], rng: &Rng) -> Result<(Matrix, Vec<f64>)> {
    match kind {
        SketchKind::Srht => srht_apply(m, x, y, rng),
        SketchKind::CountSketch => countsketch_apply(m, x, y, rng),
        SketchKind::Gaussian => gaussian_apply(m, x, y, rng),
    }
}

/// `‖(SU)ᵀ(SU) − I‖₂` for column-orthonormal `U`.
pub fn embedding_epsilon(u: &Matrix, sketched_u: &Matrix) -> Result<f64> {
    let d = u.cols();
    if sketched_u.cols() != d {
        return Err(Error::shape("embedding_epsilon", format!("{d} columns"), format!("{} columns", sketched_u.cols())));
    }
    let mut g = matmul_tn(u, u)?;
    for i in 0..d {
        g[(i, i)] -= 1.0;
    }
    let orth = symmetric_spectral_norm(&g)?;
    if orth > 1e-8 {
        return Err(Error::Precondition(format!(
            "U is not column-orthonormal (‖UᵀU − I‖ = {orth:e})"
        )));
    }
    let mut h = matmul_tn(sketched_u, sketched_u)?;
    for i in 0..d {
        h[(i, i)] -= 1.0;
    }
    symmetric_spectral_norm(&h)
}
