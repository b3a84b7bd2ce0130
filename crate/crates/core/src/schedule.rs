//! Sketch-size schedules, iteration-count lower bounds and closed-form flop budgets.

use crate::error::{Error, Result};
use crate::flops::mihs_iteration_flops;

/// Orientation of the precision ratio between consecutive subproblems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RatioOrientation {
    /// `sqrt((m_i − d) / (m_{i−1} − d))`, always ≥ 1 for growing sizes.
    #[default]
    Growing,
    /// `sqrt((m_{i−1} − d) / (m_i − d))`, the reciprocal.
    Shrinking,
}

/// Rule for the per-subproblem iteration counts `a_i`.
#[derive(Debug, Clone, PartialEq)]
pub enum ARule {
    Constant(usize),
    List(Vec<usize>),
    /// Smallest integers satisfying the lower bounds; `init_ratio` is the
    /// measured `‖X(β₀ − β̃¹)‖ / ‖X(β̃¹ − β)‖` needed for `a_1`.
    LowerBound {
        omega: f64,
        init_ratio: f64,
        orientation: RatioOrientation,
    },
}

/// Ceiling that ignores roundoff just above an integer (log₃27 = 3.0000000000000004).
fn ceil_tolerant(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Doubling sizes from `m1_mult · d` (rounded up to a power of two) to `n_padded / 2`.
pub fn default_sizes(n_padded: usize, d: usize) -> Result<Vec<usize>> {
    doubling_sizes(n_padded, d, 8)
}

pub fn doubling_sizes(n_padded: usize, d: usize, m1_mult: usize) -> Result<Vec<usize>> {
    if !n_padded.is_power_of_two() {
        return Err(Error::Config(format!("padded row count {n_padded} is not a power of two")));
    }
    if d == 0 || m1_mult == 0 {
        return Err(Error::Config("d and the m_1 multiplier must be positive".into()));
    }
    let m1 = (m1_mult * d).next_power_of_two();
    let mk = n_padded / 2;
    if m1 > mk {
        return Err(Error::Config(format!(
            "first sketch size {m1} (= {m1_mult}d rounded up) exceeds N/2 = {mk}; use a smaller d or a larger N"
        )));
    }
    let mut sizes = vec![m1];
    while *sizes.last().unwrap() < mk {
        let next = sizes.last().unwrap() * 2;
        sizes.push(next);
    }
    Ok(sizes)
}

/// Ratio `r(i−1, i)` for the 1-based subproblem index `i ≥ 2`.
pub fn precision_ratio(i: usize, sizes: &[usize], d: usize, orientation: RatioOrientation) -> Result<f64> {
    if i < 2 || i > sizes.len() {
        return Err(Error::OutOfRange { index: i, len: sizes.len() });
    }
    let (prev, cur) = (sizes[i - 2], sizes[i - 1]);
    if prev <= d || cur <= d {
        return Err(Error::Config(format!(
            "precision ratio undefined: sketch sizes {prev}, {cur} must exceed d = {d}"
        )));
    }
    let growing = ((cur - d) as f64 / (prev - d) as f64).sqrt();
    Ok(match orientation {
        RatioOrientation::Growing => growing,
        RatioOrientation::Shrinking => 1.0 / growing,
    })
}

/// `log₃[((1+ω) r(i−1,i) + 1) / ω]` before rounding.
pub fn a_lower_bound_real(i: usize, sizes: &[usize], d: usize, omega: f64, orientation: RatioOrientation) -> Result<f64> {
    check_omega(omega)?;
    let r = precision_ratio(i, sizes, d, orientation)?;
    Ok((((1.0 + omega) * r + 1.0) / omega).log(3.0))
}

pub fn a_lower_bound(i: usize, sizes: &[usize], d: usize, omega: f64, orientation: RatioOrientation) -> Result<usize> {
    Ok(ceil_tolerant(a_lower_bound_real(i, sizes, d, omega, orientation)?).max(1))
}

/// `ceil(log₃(init_ratio / ω))`, at least 1.
pub fn a1_lower_bound(init_ratio: f64, omega: f64) -> usize {
    if !(init_ratio > 0.0 && omega > 0.0) {
        return 1;
    }
    ceil_tolerant((init_ratio / omega).log(3.0)).max(1)
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::Config(format!("tolerance ω must lie in (0, 1], got {omega}")));
    }
    Ok(())
}

/// Per-stage flop counts for one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FlopBudget {
    pub init: u64,
    pub stage1: u64,
    pub stage2: u64,
}

impl FlopBudget {
    pub fn total(&self) -> u64 {
        self.init + self.stage1 + self.stage2
    }
}

/// Closed-form flops: transform `n_pad·d·log2(n_pad)`, stage 1
/// `Σ a_i[(4d+1)m_i + 2d² + 5d]`, stage 2 `t2[(4d+1)n + 2d² + 5d]`.
///
/// No subproblems means no transform, so `init` is zero for an empty schedule.
pub fn flop_budget(n: usize, d: usize, sizes: &[usize], a: &[usize], t2: usize) -> FlopBudget {
    let init = if sizes.is_empty() {
        0
    } else {
        let np = n.next_power_of_two();
        (np * d * np.trailing_zeros() as usize) as u64
    };
    let stage1 = sizes
        .iter()
        .zip(a)
        .map(|(&m, &ai)| ai as u64 * mihs_iteration_flops(m, d))
        .sum();
    let stage2 = t2 as u64 * mihs_iteration_flops(n, d);
    FlopBudget { init, stage1, stage2 }
}

/// Resolved sizes and iteration counts for stage 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub sizes: Vec<usize>,
    pub a: Vec<usize>,
    pub omega: Option<f64>,
}

impl Schedule {
    pub fn empty() -> Self {
        Schedule {
            sizes: Vec::new(),
            a: Vec::new(),
            omega: None,
        }
    }

    pub fn resolve(sizes: Vec<usize>, rule: &ARule, d: usize) -> Result<Self> {
        let k = sizes.len();
        let (a, omega) = match rule {
            ARule::Constant(c) => (vec![*c; k], None),
            ARule::List(list) => {
                if list.len() == 1 {
                    (vec![list[0]; k], None)
                } else if list.len() == k {
                    (list.clone(), None)
                } else {
                    return Err(Error::Config(format!(
                        "{} iteration counts given for {k} sketched subproblems",
                        list.len()
                    )));
                }
            }
            ARule::LowerBound {
                omega,
                init_ratio,
                orientation,
            } => {
                check_omega(*omega)?;
                let mut a = Vec::with_capacity(k);
                if k > 0 {
                    a.push(a1_lower_bound(*init_ratio, *omega));
                }
                for i in 2..=k {
                    a.push(a_lower_bound(i, &sizes, d, *omega, *orientation)?);
                }
                (a, Some(*omega))
            }
        };
        Ok(Schedule { sizes, a, omega })
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    /// `T† = Σ a_i`.
    pub fn t_dagger(&self) -> usize {
        self.a.iter().sum()
    }

    pub fn budget(&self, n: usize, d: usize, t2: usize) -> FlopBudget {
        flop_budget(n, d, &self.sizes, &self.a, t2)
    }
}

/// Whether `1 < init_ratio < 1 + (1+ω)/√2` holds for the measured ratio.
pub fn stagewise_condition_holds(init_ratio: f64, omega: f64) -> bool {
    init_ratio > 1.0 && init_ratio < 1.0 + (1.0 + omega) / std::f64::consts::SQRT_2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sizes_examples() {
        assert_eq!(default_sizes(1 << 10, 8).unwrap(), vec![64, 128, 256, 512]);
        assert_eq!(default_sizes(1 << 7, 8).unwrap(), vec![64]);
        assert!(matches!(default_sizes(1 << 6, 8), Err(Error::Config(_))));
        assert!(default_sizes(1000, 8).is_err());
        let s = default_sizes(1 << 16, 5).unwrap();
        assert_eq!(s[0], 64);
        assert!(s.windows(2).all(|w| w[1] == 2 * w[0]));
    }

    #[test]
    fn ratio_one_bound() {
        // m_i = m_{i−1} and d ≪ m gives r = 1: log₃(2.5 / 0.5) = log₃ 5 ≈ 1.465.
        let sizes = [1 << 20, 1 << 20];
        let b = a_lower_bound_real(2, &sizes, 1, 0.5, RatioOrientation::Growing).unwrap();
        assert!((b - 5f64.log(3.0)).abs() < 1e-9);
        assert_eq!(a_lower_bound(2, &sizes, 1, 0.5, RatioOrientation::Growing).unwrap(), 2);
    }

    #[test]
    fn sqrt_two_bound() {
        let sizes = [1 << 20, 1 << 21];
        let b = a_lower_bound_real(2, &sizes, 1, 1.0 / 16.0, RatioOrientation::Growing).unwrap();
        assert!((b - 3.36).abs() < 0.01, "{b}");
        assert_eq!(a_lower_bound(2, &sizes, 1, 1.0 / 16.0, RatioOrientation::Growing).unwrap(), 4);
    }

    #[test]
    fn undefined_ratio() {
        assert!(matches!(
            a_lower_bound(2, &[8, 16], 8, 0.5, RatioOrientation::Growing),
            Err(Error::Config(_))
        ));
        assert!(a_lower_bound(1, &[8, 16], 2, 0.5, RatioOrientation::Growing).is_err());
    }

    #[test]
    fn a1_examples() {
        assert_eq!(a1_lower_bound(1.0, 1.0), 1);
        assert_eq!(a1_lower_bound(27.0, 1.0), 3);
        assert_eq!(a1_lower_bound(2.4, 1.0 / 16.0), 4);
    }

    #[test]
    fn budget_examples() {
        assert_eq!(flop_budget(4, 2, &[4], &[1], 0).stage1, 54);
        assert_eq!(flop_budget(8, 2, &[], &[], 1).stage2, 90);
        let empty = flop_budget(8, 2, &[], &[], 0);
        assert_eq!((empty.stage1, empty.stage2, empty.init), (0, 0, 0));
        assert_eq!(flop_budget(6, 3, &[4], &[1], 0).init, 8 * 3 * 3);
    }

    #[test]
    fn resolve_rules() {
        let s = Schedule::resolve(vec![64, 128, 256], &ARule::Constant(2), 8).unwrap();
        assert_eq!(s.a, vec![2, 2, 2]);
        assert_eq!(s.t_dagger(), 6);
        assert!(Schedule::resolve(vec![64, 128], &ARule::List(vec![1, 2, 3]), 8).is_err());
        let t = Schedule::resolve(
            vec![64, 128, 256],
            &ARule::LowerBound {
                omega: 0.5,
                init_ratio: 27.0,
                orientation: RatioOrientation::Growing,
            },
            8,
        )
        .unwrap();
        assert_eq!(t.a[0], a1_lower_bound(27.0, 0.5));
        assert_eq!(t.a.len(), 3);
    }
}
