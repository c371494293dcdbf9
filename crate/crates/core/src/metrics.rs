//! Distances, fidelities, Fisher information and the large-N error
//! predictions used as reference curves.

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::bloch::{outcome_probabilities, PauliVector, Probabilities4, SixFrame, TetraFrame, API_TOL, C64};
use crate::error::{Result, TomoError};

/// Below this `kappa^2` the orientation counts as anti-aligned.
pub const KAPPA_SQ_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distances {
    pub trace: f64,
    pub hilbert_schmidt: f64,
}

/// Trace-class and Hilbert-Schmidt distances, both evaluated from the
/// density matrices.
pub fn distances(rho1: &PauliVector, rho2: &PauliVector) -> Distances {
    let d = rho1.density_matrix() - rho2.density_matrix();
    // d is Hermitian and traceless: eigenvalues +-sqrt(-det d).
    let det = (d[(0, 0)] * d[(1, 1)] - d[(0, 1)] * d[(1, 0)]).re;
    let lambda = (-det).max(0.0).sqrt();
    let trace = lambda;
    let hs_sq: f64 = d.iter().map(|z| z.norm_sqr()).sum();
    // Normalized so that both distances equal |S - s| / 2 for qubits.
    Distances { trace, hilbert_schmidt: (0.5 * hs_sq).sqrt() }
}

/// `|S - s| / 2`.
pub fn pauli_distance(rho1: &PauliVector, rho2: &PauliVector) -> f64 {
    0.5 * (rho1.vector() - rho2.vector()).norm()
}

/// `tr |sqrt(rho1) sqrt(rho2)|` in closed form.
pub fn uhlmann_fidelity(rho1: &PauliVector, rho2: &PauliVector) -> f64 {
    let (a, b) = (rho1.vector(), rho2.vector());
    let dot = a.dot(b);
    let radical = ((a + b).norm_squared() - a.cross(b).norm_squared()).max(0.0).sqrt();
    let big = (1.0 + dot + radical).max(0.0);
    // 1 + dot - radical, without the cancellation near pure states.
    let small = if big > 0.0 {
        ((1.0 - a.norm_squared()) * (1.0 - b.norm_squared())).max(0.0) / big
    } else {
        0.0
    };
    let u = 0.5 * big.sqrt() + 0.5 * small.sqrt();
    u.clamp(0.0, 1.0)
}

/// `U^2 = (1 + s.S) / 2` for two pure states.
pub fn pure_fidelity(s: &Vector3<f64>, estimate: &Vector3<f64>) -> f64 {
    0.5 * (1.0 + s.dot(estimate))
}

/// `kappa^2 = 2 sum p^3 - 2 (sum p^2)^2`.
pub fn kappa_squared(p: &Probabilities4) -> f64 {
    let p = p.values();
    let s2: f64 = p.iter().map(|x| x * x).sum();
    let s3: f64 = p.iter().map(|x| x * x * x).sum();
    (2.0 * s3 - 2.0 * s2 * s2).max(0.0)
}

/// Mean of `sum nu_j^2` over multinomial data of size `n`.
pub fn mean_sum_nu_squared(s_sq: f64, n: f64) -> f64 {
    1.0 / 3.0 - (1.0 - s_sq) / 12.0 + (9.0 - s_sq) / (12.0 * n)
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Large-N probability that the relative frequencies violate the purity bound.
pub fn violation_probability(state: &PauliVector, frame: &TetraFrame, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(TomoError::Domain("violation probability needs N >= 1".into()));
    }
    if n < 100 {
        log::warn!("violation probability is a large-N approximation; N = {n}");
    }
    let kappa_sq = kappa_squared(&outcome_probabilities(state, frame));
    if kappa_sq < KAPPA_SQ_EPS {
        return Err(TomoError::KappaZero);
    }
    let nf = n as f64;
    let excess = mean_sum_nu_squared(state.norm().powi(2), nf) - 1.0 / 3.0;
    Ok(0.5 + 0.5 * erf(nf.sqrt() / (2.0 * kappa_sq.sqrt()) * excess))
}

/// Fisher information of `n` tetrahedron clicks about the Pauli vector.
pub fn fisher_information(state: &PauliVector, frame: &TetraFrame, n: u64) -> Result<Matrix3<f64>> {
    let p = outcome_probabilities(state, frame);
    let grads: Vec<Vector3<f64>> = frame.vectors().iter().map(|a| a / 4.0).collect();
    fisher_from_parts(p.values(), &grads, n as f64)
}

fn fisher_from_parts(p: &[f64], grads: &[Vector3<f64>], n: f64) -> Result<Matrix3<f64>> {
    let mut m = Matrix3::zeros();
    for (pj, g) in p.iter().zip(grads) {
        if *pj <= 1e-15 {
            return Err(TomoError::SingularInformation);
        }
        m += g * g.transpose() * (n / pj);
    }
    Ok(m)
}

/// `Sp(I^{-1})`, the Cramer-Rao bound on the mean squared error of `s`.
pub fn fisher_bound(info: &Matrix3<f64>) -> Result<f64> {
    info.try_inverse().map(|inv| inv.trace()).ok_or(TomoError::SingularInformation)
}

/// Four-outcome POVM `Pi_j = (alpha_j + beta_j . sigma) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralPovm {
    pub alpha: [f64; 4],
    pub beta: [Vector3<f64>; 4],
}

impl GeneralPovm {
    pub fn tetrahedron(frame: &TetraFrame) -> Self {
        GeneralPovm { alpha: [0.5; 4], beta: frame.vectors().map(|a| a / 2.0) }
    }

    /// Rank-one POVM with elements proportional to the projectors on the
    /// unit vectors `m`; weights follow from completeness.
    pub fn rank_one(m: &[Vector3<f64>; 4]) -> Result<Self> {
        // sum alpha_j m_j = 0, sum alpha_j = 2.
        let mut a = nalgebra::Matrix4::zeros();
        for (j, mj) in m.iter().enumerate() {
            a[(0, j)] = mj.x;
            a[(1, j)] = mj.y;
            a[(2, j)] = mj.z;
            a[(3, j)] = 1.0;
        }
        let rhs = nalgebra::Vector4::new(0.0, 0.0, 0.0, 2.0);
        let alpha = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| TomoError::InvalidFrame("vectors do not span a POVM".into()))?;
        if alpha.iter().any(|&x| x < 0.0) {
            return Err(TomoError::InvalidFrame("negative POVM weight".into()));
        }
        let alpha = [alpha[0], alpha[1], alpha[2], alpha[3]];
        let beta = [0, 1, 2, 3].map(|j| m[j].normalize() * alpha[j]);
        Ok(GeneralPovm { alpha, beta })
    }

    pub fn probabilities(&self, s: &Vector3<f64>) -> [f64; 4] {
        [0, 1, 2, 3].map(|j| 0.5 * (self.alpha[j] + self.beta[j].dot(s)))
    }

    pub fn element(&self, j: usize) -> Matrix2<C64> {
        let b = &self.beta[j];
        let a = self.alpha[j];
        Matrix2::new(
            C64::new(0.5 * (a + b.z), 0.0),
            C64::new(0.5 * b.x, -0.5 * b.y),
            C64::new(0.5 * b.x, 0.5 * b.y),
            C64::new(0.5 * (a - b.z), 0.0),
        )
    }

    pub fn fisher_information(&self, s: &Vector3<f64>, n: u64) -> Result<Matrix3<f64>> {
        let grads = self.beta.map(|b| b / 2.0);
        fisher_from_parts(&self.probabilities(s), &grads, n as f64)
    }
}

/// Dyadic `K = 9 sum_jk a_j (delta_jk p_j - p_j p_k) a_k`; the large-N
/// covariance of the unconstrained estimator is `K / N`.
pub fn covariance_dyadic(state: &PauliVector, frame: &TetraFrame) -> Matrix3<f64> {
    let p = outcome_probabilities(state, frame);
    let mut k = Matrix3::zeros();
    let mut mean = Vector3::zeros();
    for (j, a) in frame.vectors().iter().enumerate() {
        k += a * a.transpose() * (9.0 * p[j]);
        mean += a * (3.0 * p[j]);
    }
    k - mean * mean.transpose()
}

/// `kappa^2` for `s = +-s a_j` (`parallel` selects the upper sign).
pub fn kappa_squared_axis(s: f64, parallel: bool) -> f64 {
    if parallel {
        (1.0 + s) * (3.0 - s) * s * s / 72.0
    } else {
        (1.0 - s) * (3.0 + s) * s * s / 72.0
    }
}

/// `kappa^2` at the saddle orientations `s (a_j + a_k) sqrt(3)/2`.
pub fn kappa_squared_saddle(s: f64) -> f64 {
    (3.0 - s * s) * s * s / 72.0
}

/// Large-N mean Uhlmann fidelity for a mixed state.
pub fn mean_uhlmann(s_sq: f64, kappa_sq: f64, n: f64) -> Result<f64> {
    if s_sq >= 1.0 {
        return Err(TomoError::Domain("mean Uhlmann fidelity needs a mixed state".into()));
    }
    Ok(1.0 - (9.0 - s_sq) / (8.0 * n) - 9.0 * kappa_sq / (n * (1.0 - s_sq)))
}

/// As [`mean_uhlmann`] for `s = -s a_j`.
pub fn mean_uhlmann_antialigned(s: f64, n: f64) -> f64 {
    1.0 - (3.0 + s) * (3.0 + 2.0 * s) / (8.0 * n * (1.0 + s))
}

/// Large-N `1 - F` for pure states estimated on the sphere with a fixed,
/// not anti-aligned frame.
pub fn pure_error_generic(p: &Probabilities4, n: f64) -> Result<f64> {
    let kappa_sq = kappa_squared(p);
    if kappa_sq < KAPPA_SQ_EPS {
        return Err(TomoError::KappaZero);
    }
    let s4: f64 = p.values().iter().map(|x| x.powi(4)).sum();
    Ok(4.0 / n - 2.0 * (27.0 * s4 - 1.0) / (9.0 * n * kappa_sq))
}

/// Upper bound on the mean fidelity of any joint measurement of `n` copies.
pub fn quantum_limit_fidelity(n: f64) -> f64 {
    (n + 1.0) / (n + 2.0)
}

pub fn quantum_limit_error(n: f64) -> f64 {
    1.0 / (n + 2.0)
}

/// Shortest estimated Pauli vector compatible with `delta` clicks in the
/// detector anti-aligned to the preliminary estimate.
pub fn smin_premeasure(n: f64, delta: f64) -> f64 {
    1.0 - 4.0 * delta / n
}

/// Whether the six-outcome frame has an axis along `s` (a privileged state).
fn six_privileged(state: &PauliVector, frame: &SixFrame) -> bool {
    state.is_pure()
        && (0..3).any(|xi| (frame.axis(xi).dot(state.vector()).abs() - 1.0).abs() <= API_TOL)
}

/// Closed-form predictions for `n` clicks on `state`. Fields whose formula
/// does not apply to the configuration are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PredictionSet {
    /// Mean `|S - s|^2`, frequencies inside the ball.
    pub msd_generic: Option<f64>,
    /// Mean `|S - s|^2` for a pure state opposite a tetrahedron vector.
    pub msd_antialigned: Option<f64>,
    pub msd_six: Option<f64>,
    pub msd_six_privileged: Option<f64>,
    /// `Sp(I_F^{-1})`.
    pub d_opt: Option<f64>,
    pub mean_uhlmann: Option<f64>,
    pub mean_uhlmann_anti: Option<f64>,
    pub err_pure_parallel: Option<f64>,
    pub err_pure_antiparallel: Option<f64>,
    pub err_pure_generic: Option<f64>,
    pub err_pure_limit_kappa0: Option<f64>,
    /// Optimal joint-measurement fidelity `(N+1)/(N+2)`.
    pub quantum_limit: Option<f64>,
    /// Evaluated for one click in the anti-aligned detector.
    pub smin_premeasure: Option<f64>,
}

pub fn predictions(state: &PauliVector, frame: &TetraFrame, n: u64) -> Result<PredictionSet> {
    if n == 0 {
        return Err(TomoError::Domain("predictions need N >= 1".into()));
    }
    let nf = n as f64;
    let s = state.norm();
    let s_sq = s * s;
    let p = outcome_probabilities(state, frame);
    let kappa_sq = kappa_squared(&p);
    let anti = frame.antialigned_index(state, API_TOL).is_some();
    let pure = state.is_pure();
    let dir_anti = s > 0.0
        && frame
            .vectors()
            .iter()
            .any(|a| (a.dot(state.vector()) / s + 1.0).abs() <= API_TOL);
    let privileged = six_privileged(state, &SixFrame::standard());

    let d_opt = fisher_information(state, frame, n).ok().and_then(|i| fisher_bound(&i).ok());
    Ok(PredictionSet {
        msd_generic: (!anti).then(|| (9.0 - s_sq) / nf),
        msd_antialigned: anti.then(|| 2.0 / nf),
        msd_six: (!privileged).then(|| (9.0 - 3.0 * s_sq) / nf),
        msd_six_privileged: privileged.then(|| 8.0 / (3.0 * nf)),
        d_opt,
        mean_uhlmann: mean_uhlmann(s_sq, kappa_sq, nf).ok(),
        mean_uhlmann_anti: (dir_anti && !pure).then(|| mean_uhlmann_antialigned(s, nf)),
        err_pure_parallel: Some(1.0 / nf),
        err_pure_antiparallel: Some(1.0 / (2.0 * nf)),
        err_pure_generic: if pure { pure_error_generic(&p, nf).ok() } else { None },
        err_pure_limit_kappa0: Some(4.0 / (3.0 * nf)),
        quantum_limit: Some(quantum_limit_fidelity(nf)),
        smin_premeasure: Some(smin_premeasure(nf, 1.0)),
    })
}
