//! Gauss-Legendre rules and product rules on the Bloch sphere and ball.

use std::f64::consts::PI;

use nalgebra::Vector3;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// `P_n(z)` and `P_n'(z)` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Product rule for the uniform average over the unit sphere: Gauss-Legendre
/// in `cos(theta)` and the trapezoid rule in `phi`. Weights sum to one.
pub fn sphere_rule(n_theta: usize, n_phi: usize) -> Vec<(Vector3<f64>, f64)> {
    let (x, w) = gauss_legendre(n_theta);
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for (&c, &wc) in x.iter().zip(&w) {
        let s = (1.0 - c * c).sqrt();
        for k in 0..n_phi {
            let phi = 2.0 * PI * (k as f64 + 0.5) / n_phi as f64;
            out.push((Vector3::new(s * phi.cos(), s * phi.sin(), c), wc / (2.0 * n_phi as f64)));
        }
    }
    out
}

/// Uniform (volume) average over the closed unit ball: radial Gauss-Legendre
/// with weight `3 r^2` times [`sphere_rule`].
pub fn ball_rule(n_r: usize, n_theta: usize, n_phi: usize) -> Vec<(Vector3<f64>, f64)> {
    let (x, w) = gauss_legendre(n_r);
    let sphere = sphere_rule(n_theta, n_phi);
    let mut out = Vec::with_capacity(n_r * sphere.len());
    for (&t, &wt) in x.iter().zip(&w) {
        let r = 0.5 * (t + 1.0);
        let wr = 0.5 * wt * 3.0 * r * r;
        for (v, wv) in &sphere {
            out.push((v * r, wr * wv));
        }
    }
    out
}
