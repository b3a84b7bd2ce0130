//! Fixed Hessian sketch `Ĥ = (ŜX)ᵀ(ŜX)`, kept as the R factor of `ŜX`.

use crate::dense::{tri_solve_pair, HouseholderQr, Matrix};
use crate::error::{Error, Result};
use crate::flops::FlopCounter;
use crate::rng::Rng;
use crate::sketch::{apply_srht_full, build_srht_plan};

#[derive(Debug, Clone)]
pub struct HessianSketch {
    pub r: usize,
    r_factor: Matrix,
    pub flops_build: u64,
}

impl HessianSketch {
    /// Factor an already-sketched matrix `ŜX`.
    pub fn from_sketched(sx: &Matrix) -> Result<Self> {
        let (r, d) = sx.shape();
        let qr = HouseholderQr::new(sx).map_err(|e| match e {
            Error::Singular { column, pivot } => Error::Singular { column, pivot },
            Error::DimensionMismatch { .. } => Error::Config(format!(
                "Hessian sketch size r = {r} is smaller than d = {d}; increase r"
            )),
            other => other,
        })?;
        Ok(HessianSketch {
            r,
            r_factor: qr.r(),
            flops_build: qr_flops(r, d),
        })
    }

    /// Use a given upper-triangular factor directly.
    pub fn from_r(r_factor: Matrix) -> Result<Self> {
        if r_factor.rows() != r_factor.cols() {
            return Err(Error::shape("HessianSketch::from_r", "square R", format!("{:?}", r_factor.shape())));
        }
        Ok(HessianSketch {
            r: r_factor.rows(),
            r_factor,
            flops_build: 0,
        })
    }

    pub fn d(&self) -> usize {
        self.r_factor.cols()
    }

    pub fn r_factor(&self) -> &Matrix {
        &self.r_factor
    }

    /// `Ĥ⁻¹ v` through `RᵀR w = v`; charges `2d²` flops.
    pub fn apply_inv(&self, v: &[f64], flops: &mut FlopCounter) -> Result<Vec<f64>> {
        let w = tri_solve_pair(&self.r_factor, v)?;
        flops.add(apply_inv_flops(self.d()));
        Ok(w)
    }
}

pub fn apply_inv_flops(d: usize) -> u64 {
    2 * (d as u64) * (d as u64)
}

fn qr_flops(r: usize, d: usize) -> u64 {
    let (r, d) = (r as u64, d as u64);
    2 * r * d * d - 2 * d * d * d / 3
}

/// Draw an SRHT `Ŝ` with `r` rows from its own stream and factor `ŜX`.
pub fn build_hessian_sketch(x: &Matrix, r: usize, rng: &Rng) -> Result<HessianSketch> {
    let d = x.cols();
    if r < d {
        return Err(Error::Config(format!("Hessian sketch size r = {r} must be at least d = {d}")));
    }
    let stream = rng.fork("hessian");
    let plan = build_srht_plan(x.rows(), &[r], &stream)?;
    let zeros = vec![0.0; x.rows()];
    let ds = apply_srht_full(&plan, x, &zeros)?;
    let (sx, _) = ds.extract_view(1)?;
    let mut h = HessianSketch::from_sketched(&sx).map_err(|e| match e {
        Error::Singular { .. } => Error::Config(format!(
            "sketched Hessian is rank deficient at r = {r}; increase r"
        )),
        other => other,
    })?;
    h.flops_build += plan.transform_flops(d);
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{matmul_tn, matvec};

    #[test]
    fn identity_sketch_gives_identity_r() {
        let x = Matrix::eye(10, 3);
        let h = HessianSketch::from_sketched(&x).unwrap();
        assert!(h.r_factor().sub(&Matrix::identity(3)).unwrap().max_abs() < 1e-15);
        let mut f = FlopCounter::default();
        let v = vec![1.0, 2.0, 3.0];
        assert_eq!(h.apply_inv(&v, &mut f).unwrap(), v);
        assert_eq!(f.get(), 18);
    }

    #[test]
    fn scalar_case() {
        let h = HessianSketch::from_sketched(&Matrix::from_rows(&[vec![2.0]]).unwrap()).unwrap();
        let mut f = FlopCounter::default();
        assert_eq!(h.apply_inv(&[8.0], &mut f).unwrap(), vec![2.0]);
    }

    #[test]
    fn round_trip_through_gram() {
        let mut rng = Rng::new(4);
        let sx = Matrix::from_fn(40, 5, |_, _| rng.gaussian());
        let h = HessianSketch::from_sketched(&sx).unwrap();
        let gram = matmul_tn(&sx, &sx).unwrap();
        let w: Vec<f64> = (0..5).map(|_| rng.gaussian()).collect();
        let v = matvec(&gram, &w).unwrap();
        let back = h.apply_inv(&v, &mut FlopCounter::default()).unwrap();
        for (a, b) in w.iter().zip(&back) {
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
        }
    }

    #[test]
    fn too_small_r_is_config_error() {
        let x = Matrix::eye(16, 4);
        assert!(matches!(build_hessian_sketch(&x, 3, &Rng::new(1)), Err(Error::Config(_))));
    }
}
