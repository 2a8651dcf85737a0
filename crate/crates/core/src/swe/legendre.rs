//! Fully normalized associated Legendre functions of `cos θ`.
//!
//! `P̄_n^m` is scaled so that `∫_{-1}^{1} (P̄_n^m)² dx = 1`, without the
//! Condon–Shortley phase. Alongside `P̄` the table carries `P̄/sin θ` (for
//! `m ≥ 1`) and `dP̄/dθ`, both evaluated without dividing by `sin θ`, so the
//! poles come out as the analytic limits.

/// Values of `P̄_n^m(cos θ)`, `P̄_n^m / sin θ` and `dP̄_n^m/dθ` for
/// `0 ≤ m ≤ n ≤ n_max`.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    n_max: usize,
    p: Vec<f64>,
    p_over_sin: Vec<f64>,
    dp_dtheta: Vec<f64>,
}

fn slot(n: usize, m: usize) -> usize {
    n * (n + 1) / 2 + m
}

impl LegendreTable {
    pub fn new(n_max: usize, theta: f64) -> Self {
        let (s, x) = theta.sin_cos();
        let size = slot(n_max, n_max) + 1;
        let mut p = vec![0.0; size];
        let mut u = vec![0.0; size];
        let mut dp = vec![0.0; size];

        // sectoral seeds P̄_m^m, carried as (P̄_m^m, P̄_m^m / s)
        let mut pmm = std::f64::consts::FRAC_1_SQRT_2;
        for m in 0..=n_max {
            if m > 0 {
                let f = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
                u[slot(m, m)] = f * pmm;
                pmm *= f * s;
            }
            p[slot(m, m)] = pmm;
            if m + 1 <= n_max {
                let f = ((2 * m + 3) as f64).sqrt() * x;
                p[slot(m + 1, m)] = f * p[slot(m, m)];
                u[slot(m + 1, m)] = f * u[slot(m, m)];
            }
            for n in (m + 2)..=n_max {
                let a = coeff(n, m);
                let a_prev = coeff(n - 1, m);
                p[slot(n, m)] = a * (x * p[slot(n - 1, m)] - p[slot(n - 2, m)] / a_prev);
                u[slot(n, m)] = a * (x * u[slot(n - 1, m)] - u[slot(n - 2, m)] / a_prev);
            }
        }

        for n in 1..=n_max {
            dp[slot(n, 0)] = -((n * (n + 1)) as f64).sqrt() * p[slot(n, 1)];
            for m in 1..=n {
                let lower = if n > m {
                    let c = ((2 * n + 1) as f64 / (2 * n - 1) as f64 * ((n * n - m * m) as f64)).sqrt();
                    c * u[slot(n - 1, m)]
                } else {
                    0.0
                };
                dp[slot(n, m)] = n as f64 * x * u[slot(n, m)] - lower;
            }
        }

        Self {
            n_max,
            p,
            p_over_sin: u,
            dp_dtheta: dp,
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn p(&self, n: usize, m: usize) -> f64 {
        self.p[slot(n, m)]
    }

    /// `P̄_n^m / sin θ`; only meaningful for `m ≥ 1` (zero for `m = 0`).
    pub fn p_over_sin(&self, n: usize, m: usize) -> f64 {
        self.p_over_sin[slot(n, m)]
    }

    pub fn dp_dtheta(&self, n: usize, m: usize) -> f64 {
        self.dp_dtheta[slot(n, m)]
    }
}

fn coeff(n: usize, m: usize) -> f64 {
    let n2 = (n * n) as f64;
    ((4.0 * n2 - 1.0) / (n2 - (m * m) as f64)).sqrt()
}
