//! Synthetic linear models `Y = Xβ + ζ` with a prescribed condition number.

use std::io::{Read, Write};

use crate::dense::{matmul, matvec, norm2_sq, qr_thin, sub_vec, HouseholderQr, Matrix};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Ground-truth regression instance.
///
/// The noise vector is not stored; [`LinearModel::noise`] regenerates it
/// from its seed, or recovers it as `Y − Xβ` for models built from data.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub x: Matrix,
    pub beta_true: Vec<f64>,
    pub noise_sigma2: f64,
    pub y: Vec<f64>,
    pub kappa: f64,
    pub seed: u64,
    noise_seed: Option<u64>,
}

fn noise_vector(noise_seed: u64, n: usize, sigma2: f64) -> Vec<f64> {
    let mut rng = Rng::new(noise_seed);
    let mut z = vec![0.0; n];
    rng.fill_gaussian(&mut z, sigma2.sqrt());
    z
}

/// Singular values log-spaced from 1 to `kappa`.
pub fn log_spaced_spectrum(d: usize, kappa: f64) -> Vec<f64> {
    if d == 1 {
        return vec![1.0];
    }
    (0..d).map(|j| kappa.powf(j as f64 / (d - 1) as f64)).collect()
}

/// Draw a model with `X = U diag(s) Vᵀ`, U and V Haar-orthonormal.
pub fn gen_model(n: usize, d: usize, kappa: f64, sigma2: f64, rng: &Rng) -> Result<LinearModel> {
    if d == 0 {
        return Err(Error::Config("d must be at least 1".into()));
    }
    if n < d {
        return Err(Error::Config(format!(
            "only overdetermined systems are supported (n = {n} < d = {d})"
        )));
    }
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(Error::Config(format!("condition number must be >= 1, got {kappa}")));
    }
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::Config(format!("noise variance must be >= 0, got {sigma2}")));
    }

    let mut left = rng.fork("design-left");
    let g = Matrix::from_fn(n, d, |_, _| left.gaussian());
    let (mut u, _) = qr_thin(&g)?;
    let mut right = rng.fork("design-right");
    let h = Matrix::from_fn(d, d, |_, _| right.gaussian());
    let (v, _) = qr_thin(&h)?;

    for (j, s) in log_spaced_spectrum(d, kappa).into_iter().enumerate() {
        for e in u.col_mut(j) {
            *e *= s;
        }
    }
    let x = matmul(&u, &v.transpose())?;

    let mut beta_rng = rng.fork("beta");
    let beta_true: Vec<f64> = (0..d).map(|_| beta_rng.gaussian()).collect();

    let noise_seed = rng.fork("noise").seed();
    let mut y = matvec(&x, &beta_true)?;
    if sigma2 > 0.0 {
        for (yi, zi) in y.iter_mut().zip(noise_vector(noise_seed, n, sigma2)) {
            *yi += zi;
        }
    }

    Ok(LinearModel {
        x,
        beta_true,
        noise_sigma2: sigma2,
        y,
        kappa,
        seed: rng.seed(),
        noise_seed: Some(noise_seed),
    })
}

impl LinearModel {
    /// Assemble a model from explicit data; the noise is taken as `Y − Xβ`.
    pub fn from_parts(x: Matrix, beta_true: Vec<f64>, y: Vec<f64>, sigma2: f64, kappa: f64) -> Result<Self> {
        if beta_true.len() != x.cols() || y.len() != x.rows() {
            return Err(Error::shape(
                "LinearModel::from_parts",
                format!("beta of length {} and y of length {}", x.cols(), x.rows()),
                format!("beta of length {} and y of length {}", beta_true.len(), y.len()),
            ));
        }
        Ok(LinearModel {
            x,
            beta_true,
            noise_sigma2: sigma2,
            y,
            kappa,
            seed: 0,
            noise_seed: None,
        })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    /// The noise vector ζ = Y − Xβ.
    pub fn noise(&self) -> Vec<f64> {
        match self.noise_seed {
            Some(_) if self.noise_sigma2 == 0.0 => vec![0.0; self.n()],
            Some(seed) => noise_vector(seed, self.n(), self.noise_sigma2),
            None => {
                let xb = matvec(&self.x, &self.beta_true).expect("shapes validated at construction");
                sub_vec(&self.y, &xb)
            }
        }
    }

    /// Same design and β with a fresh noise draw.
    pub fn redraw_noise(&self, rng: &Rng) -> LinearModel {
        let noise_seed = rng.seed();
        let mut y = matvec(&self.x, &self.beta_true).expect("shapes validated at construction");
        if self.noise_sigma2 > 0.0 {
            for (yi, zi) in y.iter_mut().zip(noise_vector(noise_seed, self.n(), self.noise_sigma2)) {
                *yi += zi;
            }
        }
        LinearModel {
            x: self.x.clone(),
            beta_true: self.beta_true.clone(),
            noise_sigma2: self.noise_sigma2,
            y,
            kappa: self.kappa,
            seed: self.seed,
            noise_seed: Some(noise_seed),
        }
    }

    const MAGIC: [u8; 8] = *b"SLSEMODL";
    const VERSION: u64 = 1;

    /// Flat little-endian dump: 7 header fields, then X (column-major), β, Y.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&Self::MAGIC)?;
        for v in [Self::VERSION, self.n() as u64, self.d() as u64] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.noise_sigma2.to_le_bytes())?;
        w.write_all(&self.kappa.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        for v in self.x.as_slice().iter().chain(&self.beta_true).chain(&self.y) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut buf).map_err(|e| Error::Format(e.to_string()))?;
            Ok(buf)
        };
        if next(&mut r)? != Self::MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u64::from_le_bytes(next(&mut r)?);
        if version != Self::VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n = u64::from_le_bytes(next(&mut r)?) as usize;
        let d = u64::from_le_bytes(next(&mut r)?) as usize;
        let sigma2 = f64::from_le_bytes(next(&mut r)?);
        let kappa = f64::from_le_bytes(next(&mut r)?);
        let seed = u64::from_le_bytes(next(&mut r)?);
        let mut read_vec = |len: usize| -> Result<Vec<f64>> {
            (0..len).map(|_| Ok(f64::from_le_bytes(next(&mut r)?))).collect()
        };
        let x = Matrix::from_col_major(n, d, read_vec(n * d)?)?;
        let beta_true = read_vec(d)?;
        let y = read_vec(n)?;
        let mut m = LinearModel::from_parts(x, beta_true, y, sigma2, kappa)?;
        m.seed = seed;
        Ok(m)
    }
}

/// Exact OLS estimator via thin QR of X.
pub fn ols_solve(model: &LinearModel) -> Result<Vec<f64>> {
    ols_solve_xy(&model.x, &model.y)
}

pub fn ols_solve_xy(x: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    HouseholderQr::new(x)?.solve_ls(y)
}

/// Prediction error `‖X(b − β)‖²`.
pub fn pred_error(model: &LinearModel, b: &[f64]) -> Result<f64> {
    if b.len() != model.d() {
        return Err(Error::shape("pred_error", format!("length {}", model.d()), format!("length {}", b.len())));
    }
    let diff = sub_vec(b, &model.beta_true);
    Ok(norm2_sq(&matvec(&model.x, &diff)?))
}
