//! Small numerical building blocks shared by the curve evaluators.

use std::sync::OnceLock;

/// Real dilogarithm Li2(z) for z in (-1, 1).
///
/// Series summation for |z| <= 0.5, the standard reflection
/// Li2(z) = pi^2/6 - ln(z) ln(1-z) - Li2(1-z) for z in (0.5, 1).
/// Accurate to ~1 ulp over the range the curve code uses (z = lr * q^n
/// with lr in (0,1), q in (0,1]).
pub fn dilog(z: f64) -> f64 {
    debug_assert!(z > -1.0 && z < 1.0, "dilog argument out of range: {z}");
    if z == 0.0 {
        return 0.0;
    }
    if z > 0.5 {
        let pi2_6 = std::f64::consts::PI * std::f64::consts::PI / 6.0;
        return pi2_6 - z.ln() * (1.0 - z).ln() - dilog(1.0 - z);
    }
    // |z| <= 0.5: term ratio <= 0.5, so ~60 terms reach 1e-18.
    let mut sum = 0.0;
    let mut zk = z;
    for k in 1..200u32 {
        let term = zk / ((k * k) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-30) {
            break;
        }
        zk *= z;
    }
    sum
}

/// Integral of the power-law unit cost c0 * (u / x0)^b for u in [lo, hi].
///
/// Evaluated as c0 * x0 * r_lo^beta * expm1(beta * ln(hi/lo)) / beta with
/// beta = b + 1, which stays accurate through beta -> 0 (the b = -1 /
/// LR = 50 % case degenerates to a logarithm).
pub fn power_integral(c0: f64, x0: f64, b: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo > 0.0 && hi >= lo && x0 > 0.0);
    if hi == lo {
        return 0.0;
    }
    let beta = b + 1.0;
    let log_span = (hi / lo).ln();
    let scale = c0 * x0 * (beta * (lo / x0).ln()).exp();
    if beta == 0.0 {
        scale * log_span
    } else {
        scale * (beta * log_span).exp_m1() / beta
    }
}

/// Nodes and weights of n-point Gauss-Legendre quadrature on [-1, 1].
///
/// Computed by Newton iteration on the Legendre recurrence; cached because the
/// diminishing-curve integrator requests the same order repeatedly.
pub fn gauss_legendre(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    assert_eq!(n, GL_ORDER, "only the shared fixed order is cached");
    CACHE.get_or_init(|| compute_gauss_legendre(GL_ORDER))
}

/// Fixed order used by the curve integrators: high enough that one panel per
/// doubling of a smooth integrand is exact to double precision.
pub const GL_ORDER: usize = 24;

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th root (descending order).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence: p_k(x), derivative from the standard identity.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// ∫ f over [a, b] with one fixed-order Gauss-Legendre panel.
pub fn gl_panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (nodes, weights) = gauss_legendre(GL_ORDER);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (t, w) in nodes.iter().zip(weights) {
        acc += w * f(mid + half * t);
    }
    acc * half
}
