//! Independent oracles shared by the integration suites. Everything here is
//! coded from the mathematical definitions, without touching the library's
//! computation paths: dense matrix least squares, dense covariance products,
//! and a quadrature/bisection normal quantile.

// Each test target compiles this module separately and uses its own subset.
#![allow(dead_code)]

/// Gaussian weight with the 5h truncation, written out locally.
pub fn weight(d: f64, h: f64) -> f64 {
    let u = d / h;
    if u.abs() > 5.0 {
        0.0
    } else {
        (-0.5 * u * u).exp()
    }
}

/// Dense weighted least squares over all n design rows; 2x2 solve by
/// Gaussian elimination with partial pivoting. Returns (level, slope).
pub fn dense_wls_fit(values: &[f64], i0: usize, h: f64) -> (f64, f64) {
    let mut a = [[0.0f64; 2]; 2];
    let mut b = [0.0f64; 2];
    for (i, y) in values.iter().enumerate() {
        let d = i as f64 - i0 as f64;
        let w = weight(d, h);
        let row = [1.0, d];
        for p in 0..2 {
            for q in 0..2 {
                a[p][q] += w * row[p] * row[q];
            }
            b[p] += w * row[p] * y;
        }
    }
    solve2(a, b)
}

fn solve2(mut a: [[f64; 2]; 2], mut b: [f64; 2]) -> (f64, f64) {
    if a[1][0].abs() > a[0][0].abs() {
        a.swap(0, 1);
        b.swap(0, 1);
    }
    let f = a[1][0] / a[0][0];
    let x1 = (b[1] - f * b[0]) / (a[1][1] - f * a[0][1]);
    let x0 = (b[0] - a[0][1] * x1) / a[0][0];
    (x0, x1)
}

fn inv2(a: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ]
}

/// Slope variance from the dense n x n covariance product
/// (X'WX)^-1 (X' Sigma X) (X'WX)^-1 with Sigma_ij = gamma(|i-j|) w_i w_j.
pub fn dense_sandwich_slope_var(n: usize, i0: usize, h: f64, gamma: &[f64]) -> f64 {
    let w: Vec<f64> = (0..n).map(|i| weight(i as f64 - i0 as f64, h)).collect();
    let d: Vec<f64> = (0..n).map(|i| i as f64 - i0 as f64).collect();
    let mut a = [[0.0f64; 2]; 2];
    for i in 0..n {
        let row = [1.0, d[i]];
        for p in 0..2 {
            for q in 0..2 {
                a[p][q] += w[i] * row[p] * row[q];
            }
        }
    }
    let ainv = inv2(a);
    let mut bmat = [[0.0f64; 2]; 2];
    for i in 0..n {
        for j in 0..n {
            let lag = i.abs_diff(j);
            let g = if lag < gamma.len() { gamma[lag] } else { 0.0 };
            let sig = g * w[i] * w[j];
            let ri = [1.0, d[i]];
            let rj = [1.0, d[j]];
            for p in 0..2 {
                for q in 0..2 {
                    bmat[p][q] += ri[p] * sig * rj[q];
                }
            }
        }
    }
    let mut v = 0.0;
    for p in 0..2 {
        for q in 0..2 {
            v += ainv[1][p] * bmat[p][q] * ainv[q][1];
        }
    }
    v
}

/// Independent-errors slope variance gamma0 * [(X'WX)^-1 X'W^2X (X'WX)^-1]_11.
pub fn independent_slope_var(n: usize, i0: usize, h: f64, gamma0: f64) -> f64 {
    let w: Vec<f64> = (0..n).map(|i| weight(i as f64 - i0 as f64, h)).collect();
    let d: Vec<f64> = (0..n).map(|i| i as f64 - i0 as f64).collect();
    let mut a = [[0.0f64; 2]; 2];
    let mut w2 = [[0.0f64; 2]; 2];
    for i in 0..n {
        let row = [1.0, d[i]];
        for p in 0..2 {
            for q in 0..2 {
                a[p][q] += w[i] * row[p] * row[q];
                w2[p][q] += w[i] * w[i] * row[p] * row[q];
            }
        }
    }
    let ainv = inv2(a);
    let mut v = 0.0;
    for p in 0..2 {
        for q in 0..2 {
            v += ainv[1][p] * w2[p][q] * ainv[q][1];
        }
    }
    gamma0 * v
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(order);
    let n = order as f64;
    for k in 0..order {
        // Chebyshev-flavored starting guess.
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n + 0.5)).cos();
        for _ in 0..100 {
            // Evaluate P_n and P_n' at x via the three-term recurrence.
            let mut p0 = 1.0f64;
            let mut p1 = x;
            for j in 2..=order {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let mut p0 = 1.0f64;
        let mut p1 = x;
        for j in 2..=order {
            let jf = j as f64;
            let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n * (x * p1 - p0) / (x * x - 1.0);
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn gl64() -> &'static [(f64, f64)] {
    static NODES: std::sync::OnceLock<Vec<(f64, f64)>> = std::sync::OnceLock::new();
    NODES.get_or_init(|| gauss_legendre(64))
}

/// Standard normal CDF by 64-node Gauss-Legendre quadrature of the density
/// from 0 to x; exact to machine precision for |x| <= 10.
pub fn oracle_normal_cdf(x: f64) -> f64 {
    let nodes = gl64();
    let (a, b) = (0.0, x);
    let c = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (t, w) in nodes {
        let u = mid + c * t;
        acc += w * (-0.5 * u * u).exp();
    }
    0.5 + acc * c / (2.0 * std::f64::consts::PI).sqrt()
}

/// Quantile of the simultaneous interval, oracle route:
/// Phi^-1((1 + (1-alpha)^(1/l))/2) with the quadrature quantile.
pub fn oracle_quantile_q(l: f64, alpha: f64) -> f64 {
    oracle_normal_quantile(0.5 * (1.0 + (1.0 - alpha).powf(1.0 / l)))
}

/// Quantile by bisection against the quadrature CDF.
pub fn oracle_normal_quantile(p: f64) -> f64 {
    let mut lo = -12.0;
    let mut hi = 12.0;
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if oracle_normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Effective sample size written out locally.
pub fn oracle_ess(n: usize, i0: usize, h: f64) -> f64 {
    (0..n).map(|i| weight(i as f64 - i0 as f64, h)).sum()
}
