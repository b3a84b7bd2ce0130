//! Floating-point operation accounting.

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct FlopCounter(u64);

impl FlopCounter {
    pub fn new(start: u64) -> Self {
        FlopCounter(start)
    }

    #[inline]
    pub fn add(&mut self, n: u64) {
        self.0 += n;
    }

    pub fn get(&self) -> u64 {
        self.0
    }
}

/// One momentum step against `rows` data rows: `(4d+1)·rows + 2d² + 5d`.
pub fn mihs_iteration_flops(rows: usize, d: usize) -> u64 {
    let (rows, d) = (rows as u64, d as u64);
    (4 * d + 1) * rows + 2 * d * d + 5 * d
}

/// One preconditioned CG step on the normal equations: `(4d+1)·n + 2d² + 10d`.
pub fn pcg_iteration_flops(n: usize, d: usize) -> u64 {
    let (n, d) = (n as u64, d as u64);
    (4 * d + 1) * n + 2 * d * d + 10 * d
}
