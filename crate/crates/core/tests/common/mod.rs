//! Independent reference computations for the integration tests.
#![allow(dead_code)]

use nalgebra::{Complex, Matrix2, Matrix4, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

pub type C = Complex<f64>;

/// Shells of the brute-force mesh; radial spacing is `1 / MESH_SHELLS`.
pub const MESH_SHELLS: usize = 62;
pub const MESH_SPACING: f64 = 1.0 / MESH_SHELLS as f64;

/// About 10^6 points filling the closed unit ball: the centre plus
/// Fibonacci spirals on spheres of radius `k h`, with `round(4 pi k^2)`
/// points on shell `k` so that neighbours are about `h` apart everywhere.
pub fn fibonacci_ball_mesh() -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut pts = vec![Vector3::zeros()];
    for k in 1..=MESH_SHELLS {
        let r = k as f64 * MESH_SPACING;
        let n = (4.0 * std::f64::consts::PI * (k * k) as f64).round() as usize;
        for i in 0..n {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            pts.push(Vector3::new(rho * phi.cos(), rho * phi.sin(), z) * r);
        }
    }
    pts
}

pub fn pauli() -> [Matrix2<C>; 3] {
    let (o, i) = (C::new(0.0, 0.0), C::new(0.0, 1.0));
    let one = C::new(1.0, 0.0);
    [
        Matrix2::new(o, one, one, o),
        Matrix2::new(o, -i, i, o),
        Matrix2::new(one, o, o, -one),
    ]
}

/// `(1 + v.sigma) / 2` built from the Pauli matrices.
pub fn qubit_operator(v: &Vector3<f64>) -> Matrix2<C> {
    let s = pauli();
    let mut m = Matrix2::identity();
    for k in 0..3 {
        m += s[k] * C::new(v[k], 0.0);
    }
    m * C::new(0.5, 0.0)
}

/// Born probabilities `Tr(rho P_j)` with `P_j = (1 + a_j.sigma) / 4`.
pub fn born_probabilities(s: &Vector3<f64>, a: &[Vector3<f64>; 4]) -> [f64; 4] {
    let rho = qubit_operator(s);
    a.map(|aj| (rho * qubit_operator(&aj) * C::new(0.5, 0.0)).trace().re)
}

pub fn log_likelihood(counts: &[u64; 4], p: &[f64; 4]) -> f64 {
    counts
        .iter()
        .zip(p)
        .filter(|(n, _)| **n > 0)
        .map(|(n, p)| *n as f64 * p.ln())
        .sum()
}

/// Mesh point with the largest log-likelihood, and that value.
pub fn brute_force_ml(mesh_logp: &[[f64; 4]], mesh: &[Vector3<f64>], counts: &[u64; 4]) -> (Vector3<f64>, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, lp) in mesh_logp.iter().enumerate() {
        let mut v = 0.0;
        for j in 0..4 {
            if counts[j] > 0 {
                v += counts[j] as f64 * lp[j];
            }
        }
        if v > best.1 {
            best = (i, v);
        }
    }
    (mesh[best.0], best.1)
}

pub fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
        let n: f64 = v.norm();
        if n > 1e-9 {
            return v / n;
        }
    }
}

/// Random two-qubit density matrix `G G^dag / Tr` with complex Gaussian `G`.
pub fn random_two_qubit<R: Rng + ?Sized>(rng: &mut R) -> Matrix4<C> {
    let g = Matrix4::from_fn(|_, _| C::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let m = g * g.adjoint();
    let tr = m.trace();
    m / tr
}

/// Rotation by `angle` about the unit `axis` (Rodrigues).
pub fn rodrigues(axis: &Vector3<f64>, angle: f64) -> nalgebra::Matrix3<f64> {
    let k = axis.normalize();
    let kx = nalgebra::Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    nalgebra::Matrix3::identity() + kx * angle.sin() + kx * kx * (1.0 - angle.cos())
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Standard error of the mean.
pub fn sem(x: &[f64]) -> f64 {
    let m = mean(x);
    let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0);
    (var / x.len() as f64).sqrt()
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}
