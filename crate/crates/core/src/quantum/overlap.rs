//! Matrix elements `<m| D(beta) |n>` of the displacement operator for real `beta`.

/// Table of `<m| D(beta) |n>` for `0 <= m, n <= n_max`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementTable {
    size: usize,
    beta: f64,
    values: Vec<f64>,
}

impl DisplacementTable {
    /// Closed form for `m >= n`:
    /// `sqrt(n!/m!) beta^(m-n) exp(-beta^2/2) L_n^(m-n)(beta^2)`,
    /// with the prefactor evaluated in logarithms. The upper triangle follows
    /// from `<m|D(beta)|n> = (-1)^(n-m) <n|D(beta)|m>` for real `beta`.
    pub fn new(beta: f64, n_max: u32) -> Self {
        let size = n_max as usize + 1;
        let mut ln_fact = vec![0.0f64; size];
        for k in 1..size {
            ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
        }
        let x = beta * beta;
        let mut values = vec![0.0; size * size];
        for m in 0..size {
            for n in 0..=m {
                let a = (m - n) as f64;
                let lag = laguerre(n, a, x);
                let v = if beta == 0.0 {
                    if m == n { 1.0 } else { 0.0 }
                } else {
                    let ln_pre = 0.5 * (ln_fact[n] - ln_fact[m]) + a * beta.abs().ln() - 0.5 * x;
                    let sign = if beta < 0.0 && (m - n) % 2 == 1 { -1.0 } else { 1.0 };
                    sign * ln_pre.exp() * lag
                };
                values[m * size + n] = v;
                if m != n {
                    values[n * size + m] = if (m - n) % 2 == 1 { -v } else { v };
                }
            }
        }
        Self { size, beta, values }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `<m| D(beta) |n>`.
    pub fn get(&self, m: u32, n: u32) -> f64 {
        self.values[m as usize * self.size + n as usize]
    }

    /// `<m| D(-beta) |n> = (-1)^(m-n) <m| D(beta) |n>`.
    pub fn get_negated(&self, m: u32, n: u32) -> f64 {
        let v = self.get(m, n);
        if (m + n) % 2 == 1 { -v } else { v }
    }
}

/// Generalized Laguerre polynomial `L_n^(a)(x)` by the three-term recurrence in `n`.
fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}
