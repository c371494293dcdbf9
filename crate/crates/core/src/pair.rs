//! Two-qubit tomography with one tetrahedron device per qubit, and
//! calibration of the relative orientation of the two devices with singlets.
//!
//! States are held as real Pauli coefficients,
//! `rho = 1/4 sum_{mu nu} t[mu][nu] sigma_mu (x) sigma_nu` with `t[0][0] = 1`;
//! the dense 4x4 matrix is derived on demand.

use nalgebra::{Matrix2, Matrix3, Matrix4, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bloch::{PauliVector, TetraFrame, C64};
use crate::clicks::draw_outcome;
use crate::error::{Result, TomoError};

pub const POSITIVITY_TOL: f64 = 1e-9;

fn pauli(mu: usize) -> Matrix2<C64> {
    let (o, i, z) = (C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0));
    match mu {
        0 => Matrix2::new(o, z, z, o),
        1 => Matrix2::new(z, o, o, z),
        2 => Matrix2::new(z, -i, i, z),
        _ => Matrix2::new(o, z, z, -o),
    }
}

fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitState {
    /// Pauli coefficients, rows for the first qubit.
    pub t: [[f64; 4]; 4],
}

impl TwoQubitState {
    /// Accepts any Hermitian coefficient set with unit trace; positivity is
    /// checked separately.
    pub fn from_coefficients(t: [[f64; 4]; 4]) -> Result<Self> {
        if (t[0][0] - 1.0).abs() > 1e-12 || t.iter().flatten().any(|x| !x.is_finite()) {
            return Err(TomoError::InvalidProbabilities(format!("trace coefficient {}", t[0][0])));
        }
        Ok(TwoQubitState { t })
    }

    pub fn from_matrix(m: &Matrix4<C64>) -> Result<Self> {
        if (m - m.adjoint()).norm() > 1e-12 {
            return Err(TomoError::Domain("matrix is not Hermitian".into()));
        }
        let mut t = [[0.0; 4]; 4];
        for (mu, row) in t.iter_mut().enumerate() {
            for (nu, x) in row.iter_mut().enumerate() {
                *x = (kron(&pauli(mu), &pauli(nu)) * m).trace().re;
            }
        }
        Self::from_coefficients(t)
    }

    pub fn product(a: &PauliVector, b: &PauliVector) -> Self {
        let ea = [1.0, a.vector().x, a.vector().y, a.vector().z];
        let eb = [1.0, b.vector().x, b.vector().y, b.vector().z];
        TwoQubitState { t: ea.map(|x| eb.map(|y| x * y)) }
    }

    /// `(1 - sigma.sigma) / 4`.
    pub fn singlet() -> Self {
        let mut t = [[0.0; 4]; 4];
        t[0][0] = 1.0;
        for (k, row) in t.iter_mut().enumerate().skip(1) {
            row[k] = -1.0;
        }
        TwoQubitState { t }
    }

    pub fn matrix(&self) -> Matrix4<C64> {
        let mut m = Matrix4::zeros();
        for mu in 0..4 {
            for nu in 0..4 {
                if self.t[mu][nu] != 0.0 {
                    m += kron(&pauli(mu), &pauli(nu)) * C64::new(self.t[mu][nu] / 4.0, 0.0);
                }
            }
        }
        m
    }

    pub fn reduced_first(&self) -> Vector3<f64> {
        Vector3::new(self.t[1][0], self.t[2][0], self.t[3][0])
    }

    pub fn reduced_second(&self) -> Vector3<f64> {
        Vector3::new(self.t[0][1], self.t[0][2], self.t[0][3])
    }

    /// Correlation block `t_{xi zeta}`.
    pub fn correlations(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.t[r + 1][c + 1])
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_physical(&self) -> bool {
        self.min_eigenvalue() >= -POSITIVITY_TOL
    }
}

/// `q[j][k]`: probability that the first device fires `j` and the second `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointProbabilities {
    pub q: [[f64; 4]; 4],
}

impl JointProbabilities {
    pub fn new(q: [[f64; 4]; 4]) -> Result<Self> {
        let sum: f64 = q.iter().flatten().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(TomoError::InvalidProbabilities(format!("joint probabilities sum to {sum}")));
        }
        if q.iter().flatten().any(|&x| !(x >= -1e-12)) {
            return Err(TomoError::InvalidProbabilities("negative joint probability".into()));
        }
        Ok(JointProbabilities { q })
    }

    pub fn row_major(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for (i, x) in self.q.iter().flatten().enumerate() {
            out[i] = *x;
        }
        out
    }

    pub fn from_row_major(v: &[f64]) -> Result<Self> {
        if v.len() != 16 {
            return Err(TomoError::InvalidProbabilities(format!("expected 16 values, got {}", v.len())));
        }
        let mut q = [[0.0; 4]; 4];
        for (i, x) in v.iter().enumerate() {
            q[i / 4][i % 4] = *x;
        }
        Self::new(q)
    }

    pub fn first_marginal(&self) -> [f64; 4] {
        self.q.map(|row| row.iter().sum())
    }

    pub fn second_marginal(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|k| self.q.iter().map(|row| row[k]).sum())
    }
}

fn extended(frame: &TetraFrame, scale: f64) -> [[f64; 4]; 4] {
    frame.vectors().map(|a| [1.0, scale * a.x, scale * a.y, scale * a.z])
}

pub fn joint_probabilities(
    rho: &TwoQubitState,
    frame_a: &TetraFrame,
    frame_b: &TetraFrame,
) -> Result<JointProbabilities> {
    let min = rho.min_eigenvalue();
    if min < -POSITIVITY_TOL {
        return Err(TomoError::NotPositive { min_eigenvalue: min });
    }
    let (ea, eb) = (extended(frame_a, 1.0), extended(frame_b, 1.0));
    let mut q = [[0.0; 4]; 4];
    for j in 0..4 {
        for k in 0..4 {
            let mut acc = 0.0;
            for mu in 0..4 {
                for nu in 0..4 {
                    acc += rho.t[mu][nu] * ea[j][mu] * eb[k][nu];
                }
            }
            q[j][k] = (acc / 16.0).max(0.0);
        }
    }
    Ok(JointProbabilities { q })
}

/// Linear inversion `rho = sum_jk (6 P_j - 1) (x) (6 Q_k - 1) q_jk`.
///
/// Noisy data can give a non-positive result; it is returned as is (check
/// [`TwoQubitState::is_physical`]).
pub fn reconstruct_two_qubit(
    q: &JointProbabilities,
    frame_a: &TetraFrame,
    frame_b: &TetraFrame,
) -> Result<TwoQubitState> {
    let sum: f64 = q.q.iter().flatten().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(TomoError::InvalidProbabilities(format!("joint probabilities sum to {sum}")));
    }
    let (ea, eb) = (extended(frame_a, 3.0), extended(frame_b, 3.0));
    let mut t = [[0.0; 4]; 4];
    for (mu, row) in t.iter_mut().enumerate() {
        for (nu, x) in row.iter_mut().enumerate() {
            for j in 0..4 {
                for k in 0..4 {
                    *x += q.q[j][k] * ea[j][mu] * eb[k][nu];
                }
            }
        }
    }
    t[0][0] = 1.0;
    let state = TwoQubitState { t };
    let min = state.min_eigenvalue();
    if min < -POSITIVITY_TOL {
        log::warn!("reconstructed two-qubit state is not positive (eigenvalue {min:e})");
    }
    Ok(state)
}

/// Orthogonal dyadic with `b_k = O a_k`, from singlet statistics:
/// `O = -9 sum_jk a_j q_jk a_k^T`.
pub fn orientation_dyadic(q: &JointProbabilities, frame_a: &TetraFrame) -> Matrix3<f64> {
    let mut o = Matrix3::zeros();
    for j in 0..4 {
        for k in 0..4 {
            o += frame_a.vector(j) * frame_a.vector(k).transpose() * q.q[j][k];
        }
    }
    let o = o * -9.0;
    let defect = (o * o.transpose() - Matrix3::identity()).abs().max();
    if defect > 1e-3 {
        log::warn!("orientation dyadic deviates from orthogonality by {defect:e}");
    }
    o
}

/// [`orientation_dyadic`] projected onto the nearest orthogonal matrix
/// (polar decomposition), for estimated `q`.
pub fn calibrate_orientation(q: &JointProbabilities, frame_a: &TetraFrame) -> Result<Matrix3<f64>> {
    let o = orientation_dyadic(q, frame_a);
    let svd = o.svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => Ok(u * v_t),
        _ => Err(TomoError::Domain("SVD of the orientation dyadic failed".into())),
    }
}

/// Joint click counts from `n` pairs.
pub fn sample_pairs<R: Rng + ?Sized>(q: &JointProbabilities, n: u64, rng: &mut R) -> [[u64; 4]; 4] {
    let flat = q.row_major();
    let mut counts = [[0u64; 4]; 4];
    for _ in 0..n {
        let i = draw_outcome(&flat, rng);
        counts[i / 4][i % 4] += 1;
    }
    counts
}

pub fn frequencies(counts: &[[u64; 4]; 4]) -> Result<JointProbabilities> {
    let total: u64 = counts.iter().flatten().sum();
    if total == 0 {
        return Err(TomoError::EmptyData);
    }
    Ok(JointProbabilities { q: counts.map(|row| row.map(|c| c as f64 / total as f64)) })
}
