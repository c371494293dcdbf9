//! Log-likelihoods whose clicks may come from different frames.
//!
//! A click on a detector with unit vector `b` has probability
//! `(1 + b.s) / 4`, so any record of clicks reduces to the weighted sum
//! `f(s) = sum_i w_i ln(1 + b_i.s)` up to the constant `-W ln 4`.
//! `f` is concave, which the maximizers below rely on.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::bloch::{tangent_basis, TetraFrame};
use crate::clicks::ClickCounts;

#[derive(Debug, Clone, Default)]
pub struct ClickLikelihood {
    terms: Vec<(Vector3<f64>, f64)>,
    weight: f64,
}

/// Result of a constrained maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub s: Vector3<f64>,
    /// `f(s)` without the `-W ln 4` constant.
    pub value: f64,
    /// Multiplier `mu` of the `|s|^2 <= 1` constraint (`grad f = 2 mu s`).
    pub multiplier: f64,
    pub on_boundary: bool,
}

const MAX_NEWTON: usize = 200;

impl ClickLikelihood {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: &ClickCounts, frame: &TetraFrame) -> Self {
        let mut l = Self::new();
        for j in 0..4 {
            l.push(*frame.vector(j), counts.n[j] as f64);
        }
        l
    }

    /// Adds `weight` clicks on the detector with unit vector `b`.
    pub fn push(&mut self, b: Vector3<f64>, weight: f64) {
        if weight > 0.0 {
            self.terms.push((b, weight));
            self.weight += weight;
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.weight
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `sum w ln(1 + b.s)`; `-inf` outside the domain.
    pub fn value(&self, s: &Vector3<f64>) -> f64 {
        let mut f = 0.0;
        for (b, w) in &self.terms {
            let x = 1.0 + b.dot(s);
            if x <= 0.0 {
                return f64::NEG_INFINITY;
            }
            f += w * x.ln();
        }
        f
    }

    /// Full log-likelihood including the `1/4` normalization.
    pub fn log_likelihood(&self, s: &Vector3<f64>) -> f64 {
        self.value(s) - self.weight * 4f64.ln()
    }

    pub fn gradient(&self, s: &Vector3<f64>) -> Vector3<f64> {
        self.terms
            .iter()
            .map(|(b, w)| b * (w / (1.0 + b.dot(s))))
            .sum()
    }

    fn derivatives(&self, s: &Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
        let mut g = Vector3::zeros();
        let mut h = Matrix3::zeros();
        for (b, w) in &self.terms {
            let inv = 1.0 / (1.0 + b.dot(s));
            g += b * (w * inv);
            h -= (b * b.transpose()) * (w * inv * inv);
        }
        (g, h)
    }

    /// Maximizer of `f(s) - mu |s|^2` by damped Newton from `start`.
    fn penalized_max(&self, mu: f64, start: Vector3<f64>) -> Vector3<f64> {
        let obj = |s: &Vector3<f64>| self.value(s) - mu * s.norm_squared();
        let scale = self.weight.max(1.0);
        let ridge = 1e-13 * scale;
        let mut s = start;
        let mut fs = obj(&s);
        for _ in 0..MAX_NEWTON {
            let (g, h) = self.derivatives(&s);
            let g = g - s * (2.0 * mu);
            if g.norm() <= 1e-13 * scale {
                break;
            }
            let neg_h = -h + Matrix3::identity() * (2.0 * mu + ridge);
            let d = neg_h
                .cholesky()
                .map(|c| c.solve(&g))
                .unwrap_or_else(|| g / scale);
            if d.norm() < 1e-12 * (1.0 + s.norm()) {
                let trial = s + d;
                let ft = obj(&trial);
                if ft.is_finite() && ft >= fs {
                    s = trial;
                }
                break;
            }
            let slope = g.dot(&d);
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..80 {
                let trial = s + d * t;
                let ft = obj(&trial);
                if ft.is_finite() && ft >= fs + 1e-4 * t * slope {
                    s = trial;
                    fs = ft;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved || (d * t).norm() < 1e-16 * (1.0 + s.norm()) {
                break;
            }
        }
        s
    }

    /// Maximum of `f` over the closed Bloch ball.
    ///
    /// The unconstrained problem is regularized with `mu |s|^2`; the
    /// multiplier is bisected (in log scale) until the regularized maximizer
    /// reaches the sphere. When the likelihood is flat along some direction
    /// (ties) this selects the shortest maximizer.
    pub fn maximize_in_ball(&self) -> Maximum {
        let scale = self.weight.max(1.0);
        let mu_lo = 1e-10 * scale;
        let s_lo = self.penalized_max(mu_lo, Vector3::zeros());
        if s_lo.norm() <= 1.0 {
            // Polish without the regularizer, staying inside the ball.
            let polished = self.penalized_max(0.0, s_lo);
            let s = if polished.norm() <= 1.0 && self.value(&polished) >= self.value(&s_lo) {
                polished
            } else {
                s_lo
            };
            return Maximum { s, value: self.value(&s), multiplier: 0.0, on_boundary: false };
        }
        let mut mu_hi = scale;
        let mut s_hi = self.penalized_max(mu_hi, Vector3::zeros());
        while s_hi.norm() > 1.0 {
            mu_hi *= 4.0;
            s_hi = self.penalized_max(mu_hi, s_hi);
        }
        let (mut lo, mut hi) = (mu_lo.ln(), mu_hi.ln());
        let mut s = s_hi;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            s = self.penalized_max(mid.exp(), s);
            if (s.norm() - 1.0).abs() < 1e-9 || hi - lo < 1e-14 {
                break;
            }
            if s.norm() > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let polished = self.sphere_newton(s.normalize());
        let s = polished.map(|(s, _)| s).unwrap_or_else(|| s.normalize());
        let g = self.gradient(&s);
        Maximum {
            s,
            value: self.value(&s),
            multiplier: 0.5 * s.dot(&g),
            on_boundary: true,
        }
    }

    /// Riemannian Newton ascent on the unit sphere from `start`.
    ///
    /// Returns `None` if `start` lies outside the likelihood's domain.
    pub fn sphere_newton(&self, start: Vector3<f64>) -> Option<(Vector3<f64>, f64)> {
        self.sphere_newton_steps(start, MAX_NEWTON)
    }

    /// [`Self::sphere_newton`] with at most `max_steps` iterations.
    pub fn sphere_newton_steps(&self, start: Vector3<f64>, max_steps: usize) -> Option<(Vector3<f64>, f64)> {
        let mut s = start.normalize();
        let mut fs = self.value(&s);
        if !fs.is_finite() {
            return None;
        }
        let scale = self.weight.max(1.0);
        for _ in 0..max_steps {
            let (g, h) = self.derivatives(&s);
            let (e1, e2) = tangent_basis(&s);
            let r = Vector2::new(e1.dot(&g), e2.dot(&g));
            if r.norm() <= 1e-13 * scale {
                break;
            }
            let radial = s.dot(&g);
            let hr = Matrix2::new(
                e1.dot(&(h * e1)) - radial,
                e1.dot(&(h * e2)),
                e2.dot(&(h * e1)),
                e2.dot(&(h * e2)) - radial,
            );
            let newton = if hr.determinant() > 0.0 && hr.trace() < 0.0 {
                hr.try_inverse().map(|inv| -(inv * r))
            } else {
                None
            };
            if let Some(d) = newton.filter(|d| d.norm() < 1e-10) {
                // Converged; the line search below would only see roundoff.
                let trial = (s + e1 * d.x + e2 * d.y).normalize();
                let ft = self.value(&trial);
                if ft >= fs {
                    s = trial;
                    fs = ft;
                }
                break;
            }
            let mut d = newton.unwrap_or_else(|| r / (hr.abs().max() + radial.abs() + scale));
            let len = d.norm();
            if len > 0.5 {
                d *= 0.5 / len;
            }
            let slope = r.dot(&d);
            let dir = e1 * d.x + e2 * d.y;
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..80 {
                let trial = (s + dir * t).normalize();
                let ft = self.value(&trial);
                if ft.is_finite() && ft >= fs + 1e-4 * t * slope {
                    s = trial;
                    fs = ft;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved || (dir * t).norm() < 1e-16 {
                break;
            }
        }
        Some((s, fs))
    }

    /// Best of several sphere ascents.
    pub fn maximize_on_sphere(&self, starts: &[Vector3<f64>]) -> Option<(Vector3<f64>, f64)> {
        starts
            .iter()
            .filter(|v| v.norm() > 0.0)
            .filter_map(|v| self.sphere_newton(*v))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Deterministic starting directions: the mean click direction, the
    /// six coordinate directions and the eight cube diagonals.
    pub fn standard_starts(&self) -> Vec<Vector3<f64>> {
        let mut starts = Vec::with_capacity(15);
        let mean: Vector3<f64> = self.terms.iter().map(|(b, w)| b * *w).sum();
        if mean.norm() > 1e-12 * self.weight.max(1.0) {
            starts.push(mean.normalize());
        }
        for axis in 0..3 {
            for sign in [1.0, -1.0] {
                let mut v = Vector3::zeros();
                v[axis] = sign;
                starts.push(v);
            }
        }
        for x in [1.0, -1.0] {
            for y in [1.0, -1.0] {
                for z in [1.0, -1.0] {
                    starts.push(Vector3::new(x, y, z).normalize());
                }
            }
        }
        starts
    }
}
