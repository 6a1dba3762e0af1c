//! Test-only oracles, kept independent of the library's numerical paths.

#![allow(dead_code)]

use mvcheb::Matrix;

/// Gauss-Jordan inverse with partial pivoting.
pub fn gauss_jordan_inverse(a: &Matrix) -> Matrix {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        inv.swap(col, piv);
        let p = m[col][col];
        for j in 0..n {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..n {
            if i != col {
                let f = m[i][col];
                if f != 0.0 {
                    for j in 0..n {
                        m[i][j] -= f * m[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    let flat: Vec<f64> = inv.into_iter().flatten().collect();
    Matrix::from_row_major(n, n, flat).unwrap()
}

/// `(x − μ)' A (x − μ)` by plain loops.
pub fn quadratic(a: &Matrix, mu: &[f64], x: &[f64]) -> f64 {
    let n = mu.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += (x[i] - mu[i]) * a[(i, j)] * (x[j] - mu[j]);
        }
    }
    s
}

/// Γ(n/2) for integer `n ≥ 1`, by the half-integer recurrence from Γ(1) = 1, Γ(1/2) = √π.
pub fn gamma_half(n: usize) -> f64 {
    let mut g = if n.is_multiple_of(2) {
        1.0
    } else {
        std::f64::consts::PI.sqrt()
    };
    let mut s = if n.is_multiple_of(2) { 1.0 } else { 0.5 };
    while s < n as f64 / 2.0 {
        g *= s;
        s += 1.0;
    }
    g
}

/// `Pr(χ²_n < x)` by composite Simpson after substituting `t = u²`, which
/// turns the integrand into the smooth `2u^{n−1}e^{−u²/2} / (2^{n/2} Γ(n/2))`.
/// Panels double until two successive estimates agree to 1e-13.
pub fn chi2_cdf_simpson(n: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let norm = 2f64.powf(n as f64 / 2.0) * gamma_half(n);
    let f = |u: f64| 2.0 * u.powi(n as i32 - 1) * (-u * u / 2.0).exp() / norm;
    let b = x.sqrt();
    let simpson = |panels: usize| {
        let h = b / panels as f64;
        let mut s = f(0.0) + f(b);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0
    };
    let mut panels = 64;
    let mut prev = simpson(panels);
    loop {
        panels *= 2;
        let cur = simpson(panels);
        if (cur - prev).abs() < 1e-13 || panels > 1 << 22 {
            return cur;
        }
        prev = cur;
    }
}

/// `erf` by its Maclaurin series; adequate for |x| ≤ 3.
pub fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= -x * x / k;
        let add = term / (2.0 * k + 1.0);
        sum += add;
        if add.abs() < 1e-18 {
            break;
        }
    }
    2.0 / std::f64::consts::PI.sqrt() * sum
}

/// Small deterministic generator for building random test inputs.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6_364_136_223_846_793_005)
            .wrapping_add(1_442_695_040_888_963_407);
        let mut z = self.0;
        z = (z ^ (z >> 33)).wrapping_mul(0xff51_afd7_ed55_8ccd);
        z ^ (z >> 33)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * ((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
    }

    pub fn range(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        lo + (self.next_u64() % (hi_inclusive - lo + 1) as u64) as usize
    }
}
