//! Three-qubit gate network that realises the tetrahedron measurement on
//! one qubit with two ancillas.
//!
//! Basis states are `|q_A q_B q>` with index `4 q_A + 2 q_B + q`. The
//! ancillas are prepared in `|00>/sqrt2 + (|01> + |10> + |11>)/sqrt6`, then
//! control `sigma_z` (ancilla A) and `sigma_x` (ancilla B) on the qubit; the
//! phase gate `|11> -> i|11>` on the ancillas turns the product branch into
//! `sigma_y`. Hadamards on both ancillas and a computational-basis readout
//! finish the measurement.

use nalgebra::{Matrix2, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::bloch::{PauliVector, C64};
use crate::error::{Result, TomoError};

pub type StateVector3 = SVector<C64, 8>;
pub type Unitary3 = SMatrix<C64, 8, 8>;

/// Conditional states are not defined below this outcome probability.
pub const POST_STATE_MIN_PROB: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wire {
    /// First ancilla (most significant bit).
    A,
    /// Second ancilla.
    B,
    /// Qubit being measured.
    Q,
}

impl Wire {
    fn bit(self) -> usize {
        match self {
            Wire::A => 4,
            Wire::B => 2,
            Wire::Q => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GateSpec {
    GeneralizedHadamard { phi: f64, target: Wire },
    ControlledGeneralizedHadamard { phi: f64, control: Wire, target: Wire },
    /// `|11> -> i|11>` on the two ancillas.
    ControlledPhase,
    /// Generalized Hadamard with `phi = pi/4`.
    Hadamard { target: Wire },
}

/// `[[cos phi, sin phi], [sin phi, -cos phi]]`.
pub fn generalized_hadamard(phi: f64) -> Matrix2<C64> {
    let (s, c) = phi.sin_cos();
    Matrix2::new(C64::new(c, 0.0), C64::new(s, 0.0), C64::new(s, 0.0), C64::new(-c, 0.0))
}

impl GateSpec {
    pub fn matrix(&self) -> Unitary3 {
        let mut u = Unitary3::zeros();
        for col in 0..8 {
            let mut e = StateVector3::zeros();
            e[col] = C64::new(1.0, 0.0);
            u.set_column(col, &self.apply(&e));
        }
        u
    }

    pub fn apply(&self, psi: &StateVector3) -> StateVector3 {
        match *self {
            GateSpec::GeneralizedHadamard { phi, target } => {
                apply_single(psi, &generalized_hadamard(phi), target, None)
            }
            GateSpec::Hadamard { target } => {
                apply_single(psi, &generalized_hadamard(std::f64::consts::FRAC_PI_4), target, None)
            }
            GateSpec::ControlledGeneralizedHadamard { phi, control, target } => {
                apply_single(psi, &generalized_hadamard(phi), target, Some(control))
            }
            GateSpec::ControlledPhase => {
                let mut out = *psi;
                for idx in 0..8 {
                    if idx & 6 == 6 {
                        out[idx] *= C64::new(0.0, 1.0);
                    }
                }
                out
            }
        }
    }

    pub fn is_hadamard_type(&self) -> bool {
        !matches!(self, GateSpec::ControlledPhase)
    }
}

fn apply_single(psi: &StateVector3, g: &Matrix2<C64>, target: Wire, control: Option<Wire>) -> StateVector3 {
    let t = target.bit();
    let mut out = *psi;
    for idx in 0..8 {
        if idx & t != 0 {
            continue;
        }
        if let Some(c) = control {
            if idx & c.bit() == 0 {
                continue;
            }
        }
        let (i0, i1) = (idx, idx | t);
        let (a0, a1) = (psi[i0], psi[i1]);
        out[i0] = g[(0, 0)] * a0 + g[(0, 1)] * a1;
        out[i1] = g[(1, 0)] * a0 + g[(1, 1)] * a1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreparationAngles {
    pub alpha: f64,
    pub beta: f64,
}

/// `sin 2 alpha = (sqrt3 - 1)/3`, `tan 2 beta = sqrt3 + 1`.
pub fn preparation_angles() -> PreparationAngles {
    let r3 = 3f64.sqrt();
    PreparationAngles {
        alpha: ((r3 - 1.0) / 3.0).asin() / 2.0,
        beta: (r3 + 1.0).atan() / 2.0,
    }
}

/// Ancilla preparation: four gates acting on `|00>`.
pub fn preparation_stage() -> Vec<GateSpec> {
    let PreparationAngles { alpha, beta } = preparation_angles();
    vec![
        GateSpec::GeneralizedHadamard { phi: alpha, target: Wire::A },
        GateSpec::ControlledGeneralizedHadamard {
            phi: std::f64::consts::FRAC_PI_2,
            control: Wire::A,
            target: Wire::B,
        },
        GateSpec::GeneralizedHadamard { phi: beta, target: Wire::A },
        GateSpec::GeneralizedHadamard { phi: beta, target: Wire::B },
    ]
}

/// The full nine-gate network in application order.
pub fn build_network() -> Vec<GateSpec> {
    let mut gates = preparation_stage();
    gates.extend([
        GateSpec::ControlledGeneralizedHadamard { phi: 0.0, control: Wire::A, target: Wire::Q },
        GateSpec::ControlledGeneralizedHadamard {
            phi: std::f64::consts::FRAC_PI_2,
            control: Wire::B,
            target: Wire::Q,
        },
        GateSpec::ControlledPhase,
        GateSpec::Hadamard { target: Wire::A },
        GateSpec::Hadamard { target: Wire::B },
    ]);
    gates
}

pub fn network_unitary(gates: &[GateSpec]) -> Unitary3 {
    gates.iter().fold(Unitary3::identity(), |acc, g| g.matrix() * acc)
}

pub fn run_gates(gates: &[GateSpec], psi: &StateVector3) -> StateVector3 {
    gates.iter().fold(*psi, |acc, g| g.apply(&acc))
}

/// Ancilla amplitudes after the preparation stage, ordered `00, 01, 10, 11`.
pub fn ancilla_amplitudes() -> [C64; 4] {
    let mut psi = StateVector3::zeros();
    psi[0] = C64::new(1.0, 0.0);
    let out = run_gates(&preparation_stage(), &psi);
    [out[0], out[2], out[4], out[6]]
}

/// Ancilla readout `00, 01, 10, 11` corresponds to tetrahedron outcomes
/// `1, 4, 2, 3` (zero based: 0, 3, 1, 2).
pub const READOUT_TO_OUTCOME: [usize; 4] = [0, 3, 1, 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkOutput {
    /// Readout probabilities for `00, 01, 10, 11`.
    pub readout: [f64; 4],
    /// The same, relabelled as tetrahedron outcomes `p_1 .. p_4`.
    pub probabilities: [f64; 4],
    /// Conditional state of the qubit for each tetrahedron outcome; `None`
    /// when the outcome is (numerically) impossible.
    pub post_states: [Option<PauliVector>; 4],
}

impl NetworkOutput {
    pub fn post_state(&self, outcome: usize) -> Result<PauliVector> {
        self.post_states[outcome].ok_or(TomoError::UndefinedPostState {
            outcome,
            prob: self.probabilities[outcome],
        })
    }
}

fn qubit_ket(dir: &Vector3<f64>) -> [C64; 2] {
    let theta = dir.z.clamp(-1.0, 1.0).acos();
    let phi = dir.y.atan2(dir.x);
    [
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    ]
}

/// Unnormalized readout weights and Pauli vectors of the conditional qubit
/// for a pure input along `dir`.
fn run_pure(gates: &[GateSpec], dir: &Vector3<f64>) -> [(f64, Vector3<f64>); 4] {
    let ket = qubit_ket(dir);
    let mut psi = StateVector3::zeros();
    psi[0] = ket[0];
    psi[1] = ket[1];
    let out = run_gates(gates, &psi);
    [0usize, 1, 2, 3].map(|m| {
        let (c0, c1) = (out[2 * m], out[2 * m + 1]);
        let p = c0.norm_sqr() + c1.norm_sqr();
        // <sigma> of the unnormalized conditional ket.
        let cross = c0.conj() * c1;
        let r = Vector3::new(2.0 * cross.re, 2.0 * cross.im, c0.norm_sqr() - c1.norm_sqr());
        (p, r)
    })
}

/// Runs the network on a qubit state. Mixed inputs are the mixture of the
/// runs on the two eigenstates.
pub fn run_network(input: &PauliVector) -> NetworkOutput {
    run_network_with(&build_network(), input)
}

pub fn run_network_with(gates: &[GateSpec], input: &PauliVector) -> NetworkOutput {
    let s = input.norm();
    let dir = if s > 0.0 { input.vector() / s } else { Vector3::z() };
    let branches = [((1.0 + s) / 2.0, dir), ((1.0 - s) / 2.0, -dir)];
    let mut readout = [0.0; 4];
    let mut moments = [Vector3::zeros(); 4];
    for (w, d) in branches {
        if w == 0.0 {
            continue;
        }
        for (m, (p, r)) in run_pure(gates, &d).into_iter().enumerate() {
            readout[m] += w * p;
            moments[m] += r * w;
        }
    }
    let mut probabilities = [0.0; 4];
    let mut post_states = [None; 4];
    for m in 0..4 {
        let j = READOUT_TO_OUTCOME[m];
        probabilities[j] = readout[m];
        if readout[m] > POST_STATE_MIN_PROB {
            post_states[j] = Some(PauliVector::from_vector_unchecked(moments[m] / readout[m]));
        }
    }
    NetworkOutput { readout, probabilities, post_states }
}
