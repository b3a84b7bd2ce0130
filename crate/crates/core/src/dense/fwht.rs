//! Fast Walsh–Hadamard transform.

use crate::error::{Error, Result};

/// Unnormalized in-place butterfly, `n log2 n` additions/subtractions.
///
/// Natural (Sylvester) ordering: the result is `H_n x` with
/// `H_{2k} = [[H_k, H_k], [H_k, −H_k]]`.
pub fn fwht_in_place(x: &mut [f64]) -> Result<()> {
    let n = x.len();
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo {
            len: n,
            padded: n.next_power_of_two(),
        });
    }
    let mut h = 1;
    while h < n {
        for block in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        h *= 2;
    }
    Ok(())
}

/// Orthonormal transform in place: butterfly followed by one `n^{-1/2}` pass.
pub fn fwht_normalized_in_place(x: &mut [f64]) -> Result<()> {
    fwht_in_place(x)?;
    let s = 1.0 / (x.len() as f64).sqrt();
    for v in x.iter_mut() {
        *v *= s;
    }
    Ok(())
}

/// `H x` for the orthonormal Walsh–Hadamard matrix `H`.
pub fn fwht_normalized(x: &[f64]) -> Result<Vec<f64>> {
    let mut y = x.to_vec();
    fwht_normalized_in_place(&mut y)?;
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rng;

    #[test]
    fn first_column() {
        let y = fwht_normalized(&[1.0, 0.0]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((y[0] - s).abs() < 1e-15 && (y[1] - s).abs() < 1e-15);
    }

    #[test]
    fn constant_vector() {
        assert_eq!(fwht_normalized(&[1.0; 4]).unwrap(), vec![2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn involution() {
        let mut rng = Rng::new(4);
        let x: Vec<f64> = (0..256).map(|_| rng.gaussian()).collect();
        let y = fwht_normalized(&fwht_normalized(&x).unwrap()).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert_eq!(
            fwht_normalized(&[1.0; 6]).unwrap_err(),
            Error::NotPowerOfTwo { len: 6, padded: 8 }
        );
    }
}
