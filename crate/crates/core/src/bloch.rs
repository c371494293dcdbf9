//! Qubit states, measurement frames and Born-rule probabilities.
//!
//! A qubit state is written `rho = (1 + s.sigma) / 2` with the Pauli vector
//! `s` in the closed unit ball. The four-outcome measurement is built from a
//! quartet of unit vectors `a_j` with `a_j.a_k = -1/3` for `j != k`; outcome
//! `j` has probability `(1 + a_j.s) / 4`. Every quartet used here is an
//! orthogonal transform of the cube-corner reference quartet.

use nalgebra::{Complex, Matrix2, Matrix3, Rotation3, Unit, UnitQuaternion, Vector3, Vector4};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};

/// Tolerance for accumulated rounding inside the crate.
pub const INTERNAL_TOL: f64 = 1e-12;
/// Tolerance applied to values handed in by callers.
pub const API_TOL: f64 = 1e-9;

pub type C64 = Complex<f64>;

/// Pauli vector of a qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct PauliVector(Vector3<f64>);

impl PauliVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::from_vector(Vector3::new(x, y, z))
    }

    pub fn from_vector(v: Vector3<f64>) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || norm > 1.0 + API_TOL {
            return Err(TomoError::NonPhysicalState { norm });
        }
        Ok(PauliVector(v))
    }

    /// Wraps a vector that is already known to be physical up to rounding.
    pub(crate) fn from_vector_unchecked(v: Vector3<f64>) -> Self {
        PauliVector(v)
    }

    pub fn zero() -> Self {
        PauliVector(Vector3::zeros())
    }

    /// Pure state pointing along `direction` (normalized here).
    pub fn pure(direction: Vector3<f64>) -> Result<Self> {
        let n = direction.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(TomoError::Domain("pure state needs a non-zero direction".into()));
        }
        Ok(PauliVector(direction / n))
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_pure(&self) -> bool {
        (self.norm() - 1.0).abs() <= INTERNAL_TOL
    }

    pub fn dot(&self, other: &PauliVector) -> f64 {
        self.0.dot(&other.0)
    }

    /// Dense 2x2 statistical operator in the `sigma_z` eigenbasis.
    pub fn density_matrix(&self) -> Matrix2<C64> {
        let [x, y, z] = [self.0.x, self.0.y, self.0.z];
        Matrix2::new(
            C64::new((1.0 + z) / 2.0, 0.0),
            C64::new(x / 2.0, -y / 2.0),
            C64::new(x / 2.0, y / 2.0),
            C64::new((1.0 - z) / 2.0, 0.0),
        )
    }
}

impl TryFrom<[f64; 3]> for PauliVector {
    type Error = TomoError;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        PauliVector::new(v[0], v[1], v[2])
    }
}

impl From<PauliVector> for [f64; 3] {
    fn from(p: PauliVector) -> [f64; 3] {
        [p.0.x, p.0.y, p.0.z]
    }
}

/// The cube-corner reference quartet.
pub fn reference_quartet() -> [Vector3<f64>; 4] {
    let c = 1.0 / 3f64.sqrt();
    [
        Vector3::new(c, c, c),
        Vector3::new(c, -c, -c),
        Vector3::new(-c, c, -c),
        Vector3::new(-c, -c, c),
    ]
}

fn check_orthogonal(m: &Matrix3<f64>, tol: f64) -> Result<()> {
    let defect = (m * m.transpose() - Matrix3::identity()).abs().max();
    if !defect.is_finite() || defect > tol {
        return Err(TomoError::InvalidFrame(format!(
            "matrix is not orthogonal (defect {defect:e})"
        )));
    }
    Ok(())
}

/// Measurement quartet `a_j = R a_j^ref` for an orthogonal `R`.
///
/// `R` may be improper; the inverted quartet `-a_j` (same labels) is the
/// reference transformed by `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 9]", into = "[f64; 9]")]
pub struct TetraFrame {
    rotation: Matrix3<f64>,
    vectors: [Vector3<f64>; 4],
}

impl Default for TetraFrame {
    fn default() -> Self {
        Self::reference()
    }
}

impl TetraFrame {
    pub fn reference() -> Self {
        TetraFrame {
            rotation: Matrix3::identity(),
            vectors: reference_quartet(),
        }
    }

    pub fn from_rotation(rotation: Matrix3<f64>) -> Result<Self> {
        check_orthogonal(&rotation, API_TOL)?;
        Ok(Self::from_rotation_unchecked(rotation))
    }

    fn from_rotation_unchecked(rotation: Matrix3<f64>) -> Self {
        let r = reference_quartet();
        TetraFrame {
            rotation,
            vectors: [rotation * r[0], rotation * r[1], rotation * r[2], rotation * r[3]],
        }
    }

    /// Row-major 3x3 matrix.
    pub fn from_row_major(m: [f64; 9]) -> Result<Self> {
        Self::from_rotation(Matrix3::from_row_slice(&m))
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn vectors(&self) -> &[Vector3<f64>; 4] {
        &self.vectors
    }

    pub fn vector(&self, j: usize) -> &Vector3<f64> {
        &self.vectors[j]
    }

    /// Applies `m` after the current orientation.
    pub fn transformed(&self, m: &Matrix3<f64>) -> Self {
        Self::from_rotation_unchecked(m * self.rotation)
    }

    /// Same labels, every vector reversed.
    pub fn inverted(&self) -> Self {
        Self::from_rotation_unchecked(-self.rotation)
    }

    /// Frame obtained by the smallest rotation that takes vector
    /// `designated` onto `direction`.
    pub fn aligned(&self, designated: usize, direction: &Vector3<f64>) -> Result<Self> {
        let r = minimal_rotation(&self.vectors[designated], direction)?;
        Ok(self.transformed(&r))
    }

    /// Largest deviation from the Gram, null-sum and completeness relations.
    pub fn gram_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..4 {
            for k in 0..4 {
                let want = if j == k { 1.0 } else { -1.0 / 3.0 };
                worst = worst.max((self.vectors[j].dot(&self.vectors[k]) - want).abs());
            }
        }
        let sum: Vector3<f64> = self.vectors.iter().sum();
        worst = worst.max(sum.abs().max());
        let completeness: Matrix3<f64> =
            self.vectors.iter().map(|a| a * a.transpose()).sum::<Matrix3<f64>>() * 0.75;
        worst = worst.max((completeness - Matrix3::identity()).abs().max());
        let orth = (self.rotation * self.rotation.transpose() - Matrix3::identity()).abs().max();
        worst.max(orth)
    }

    /// Index of the quartet vector pointing opposite to `s`, if any does
    /// within `tol` (in the cosine).
    pub fn antialigned_index(&self, s: &PauliVector, tol: f64) -> Option<usize> {
        let n = s.norm();
        if n == 0.0 {
            return None;
        }
        (0..4).find(|&j| (self.vectors[j].dot(s.vector()) / n + 1.0).abs() <= tol)
    }
}

impl TryFrom<[f64; 9]> for TetraFrame {
    type Error = TomoError;

    fn try_from(m: [f64; 9]) -> Result<Self> {
        TetraFrame::from_row_major(m)
    }
}

impl From<TetraFrame> for [f64; 9] {
    fn from(f: TetraFrame) -> [f64; 9] {
        let r = f.rotation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)],
            r[(1, 0)], r[(1, 1)], r[(1, 2)],
            r[(2, 0)], r[(2, 1)], r[(2, 2)],
        ]
    }
}

/// Axes of the six-outcome device: columns of an orthogonal matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 9]", into = "[f64; 9]")]
pub struct SixFrame {
    axes: Matrix3<f64>,
}

impl Default for SixFrame {
    fn default() -> Self {
        Self::standard()
    }
}

impl SixFrame {
    pub fn standard() -> Self {
        SixFrame { axes: Matrix3::identity() }
    }

    pub fn from_rotation(rotation: Matrix3<f64>) -> Result<Self> {
        check_orthogonal(&rotation, API_TOL)?;
        Ok(SixFrame { axes: rotation })
    }

    /// Unit vector of axis `xi` (0 = x, 1 = y, 2 = z).
    pub fn axis(&self, xi: usize) -> Vector3<f64> {
        self.axes.column(xi).into_owned()
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.axes
    }

    /// Components of `v` along the three axes.
    pub fn local(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.axes.transpose() * v
    }

    pub fn global(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.axes * local
    }
}

impl TryFrom<[f64; 9]> for SixFrame {
    type Error = TomoError;

    fn try_from(m: [f64; 9]) -> Result<Self> {
        SixFrame::from_rotation(Matrix3::from_row_slice(&m))
    }
}

impl From<SixFrame> for [f64; 9] {
    fn from(f: SixFrame) -> [f64; 9] {
        let r = f.axes;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)],
            r[(1, 0)], r[(1, 1)], r[(1, 2)],
            r[(2, 0)], r[(2, 1)], r[(2, 2)],
        ]
    }
}

/// Physical outcome probabilities of a four-outcome tetrahedron measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Probabilities4([f64; 4]);

impl Probabilities4 {
    /// Validates unit sum, the `[0, 1/2]` range and `1/4 <= sum p^2 <= 1/3`.
    pub fn new(p: [f64; 4]) -> Result<Self> {
        let sum: f64 = p.iter().sum();
        if !sum.is_finite() || (sum - 1.0).abs() > API_TOL {
            return Err(TomoError::InvalidProbabilities(format!("sum is {sum}, not 1")));
        }
        if let Some(x) = p.iter().find(|&&x| !(-API_TOL..=0.5 + API_TOL).contains(&x)) {
            return Err(TomoError::InvalidProbabilities(format!(
                "{x} is outside [0, 1/2]"
            )));
        }
        let sq: f64 = p.iter().map(|x| x * x).sum();
        if sq > 1.0 / 3.0 + API_TOL {
            return Err(TomoError::InvalidProbabilities(format!(
                "sum of squares {sq} exceeds 1/3"
            )));
        }
        Ok(Probabilities4(p))
    }

    pub fn values(&self) -> &[f64; 4] {
        &self.0
    }

    pub fn sum_squares(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }
}

impl TryFrom<[f64; 4]> for Probabilities4 {
    type Error = TomoError;

    fn try_from(p: [f64; 4]) -> Result<Self> {
        Probabilities4::new(p)
    }
}

impl From<Probabilities4> for [f64; 4] {
    fn from(p: Probabilities4) -> [f64; 4] {
        p.0
    }
}

impl std::ops::Index<usize> for Probabilities4 {
    type Output = f64;

    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

/// `p_j = (1 + a_j.s) / 4`.
pub fn outcome_probabilities(state: &PauliVector, frame: &TetraFrame) -> Probabilities4 {
    let p = frame.vectors.map(|a| (1.0 + a.dot(state.vector())) / 4.0);
    Probabilities4(p)
}

/// `p_{xi +-} = (1 +- s_xi) / 6`, ordered `x+, x-, y+, y-, z+, z-`.
pub fn six_state_probabilities(state: &PauliVector, frame: &SixFrame) -> [f64; 6] {
    let local = frame.local(state.vector());
    let mut p = [0.0; 6];
    for xi in 0..3 {
        p[2 * xi] = (1.0 + local[xi]) / 6.0;
        p[2 * xi + 1] = (1.0 - local[xi]) / 6.0;
    }
    p
}

/// Linear inversion `s = 3 sum_j p_j a_j`.
pub fn reconstruct_pauli(p: &Probabilities4, frame: &TetraFrame) -> PauliVector {
    let s: Vector3<f64> = (0..4).map(|j| frame.vectors[j] * (3.0 * p.0[j])).sum();
    PauliVector(s)
}

/// Rotation by `angle` about `axis` (right-handed), composed after the
/// frame's current orientation.
pub fn rotate_frame(frame: &TetraFrame, axis: &Vector3<f64>, angle: f64) -> Result<TetraFrame> {
    let r = axis_angle(axis, angle)?;
    Ok(frame.transformed(&r))
}

/// Rodrigues rotation matrix.
pub fn axis_angle(axis: &Vector3<f64>, angle: f64) -> Result<Matrix3<f64>> {
    let n = axis.norm();
    if n < INTERNAL_TOL || !n.is_finite() {
        return Err(TomoError::ZeroAxis);
    }
    let u = Unit::new_unchecked(axis / n);
    Ok(Rotation3::from_axis_angle(&u, angle).into_inner())
}

/// Smallest rotation taking direction `from` onto direction `to`.
pub fn minimal_rotation(from: &Vector3<f64>, to: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let (nf, nt) = (from.norm(), to.norm());
    if nf < INTERNAL_TOL || nt < INTERNAL_TOL {
        return Err(TomoError::ZeroAxis);
    }
    let (f, t) = (from / nf, to / nt);
    let cross = f.cross(&t);
    let cos = f.dot(&t).clamp(-1.0, 1.0);
    let sin = cross.norm();
    if sin < 1e-15 {
        if cos > 0.0 {
            return Ok(Matrix3::identity());
        }
        // Half turn about any axis perpendicular to `from`.
        return axis_angle(&any_perpendicular(&f), std::f64::consts::PI);
    }
    axis_angle(&(cross / sin), sin.atan2(cos))
}

/// Some unit vector orthogonal to `v`.
pub fn any_perpendicular(v: &Vector3<f64>) -> Vector3<f64> {
    let trial = if v.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let p = trial - v * (v.dot(&trial) / v.norm_squared());
    p.normalize()
}

/// Orthonormal pair spanning the plane orthogonal to unit `v`.
pub fn tangent_basis(v: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let e1 = any_perpendicular(v);
    let e2 = v.cross(&e1).normalize();
    (e1, e2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    /// Uniform on the Bloch sphere.
    Pure,
    /// Uniform in the volume of the Bloch ball.
    Ball,
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let n: f64 = v.norm();
        if n > 1e-300 {
            return v / n;
        }
    }
}

/// Random state: uniform on the sphere (`Pure`) or in the ball volume (`Ball`).
pub fn random_state<R: Rng + ?Sized>(kind: StateKind, rng: &mut R) -> PauliVector {
    let dir = random_unit_vector(rng);
    match kind {
        StateKind::Pure => PauliVector(dir),
        StateKind::Ball => {
            let u: f64 = rng.random();
            PauliVector(dir * u.cbrt())
        }
    }
}

/// Haar-random rotation (normalized Gaussian quaternion).
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    let q = Vector4::new(
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
    );
    let q = UnitQuaternion::from_quaternion(nalgebra::Quaternion::from(q));
    q.to_rotation_matrix().into_inner()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn reference_frame_is_a_tetrahedron() {
        assert!(TetraFrame::reference().gram_defect() < 1e-15);
    }

    #[test]
    fn maximally_mixed_gives_quarter() {
        let p = outcome_probabilities(&PauliVector::zero(), &TetraFrame::reference());
        for j in 0..4 {
            assert!(close(p[j], 0.25, 1e-15));
        }
    }

    #[test]
    fn antialigned_state_has_one_dark_detector() {
        let f = TetraFrame::reference();
        let s = PauliVector::from_vector(-f.vector(3)).unwrap();
        let p = outcome_probabilities(&s, &f);
        for j in 0..3 {
            assert!(close(p[j], 1.0 / 3.0, 1e-15));
        }
        assert!(close(p[3], 0.0, 1e-15));
        let back = reconstruct_pauli(&Probabilities4::new([1. / 3., 1. / 3., 1. / 3., 0.]).unwrap(), &f);
        assert!((back.vector() + f.vector(3)).norm() < 1e-15);
    }

    #[test]
    fn aligned_state_probabilities() {
        // a_1.a_1 = 1 and a_1.a_k = -1/3 give (1/2, 1/6, 1/6, 1/6).
        let f = TetraFrame::reference();
        let s = PauliVector::from_vector(*f.vector(0)).unwrap();
        let p = outcome_probabilities(&s, &f);
        let want = [0.5, 1. / 6., 1. / 6., 1. / 6.];
        for j in 0..4 {
            assert!(close(p[j], want[j], 1e-15));
        }
        let back = reconstruct_pauli(&p, &f);
        assert!((back.vector() - f.vector(0)).norm() < 1e-15);
        assert!(close(back.norm(), 1.0, 1e-15));
    }

    #[test]
    fn uniform_probabilities_invert_to_zero() {
        let p = Probabilities4::new([0.25; 4]).unwrap();
        assert!(reconstruct_pauli(&p, &TetraFrame::reference()).norm() < 1e-15);
    }

    #[test]
    fn six_state_examples() {
        let f = SixFrame::standard();
        let p = six_state_probabilities(&PauliVector::zero(), &f);
        assert!(p.iter().all(|&x| close(x, 1. / 6., 1e-15)));

        let p = six_state_probabilities(&PauliVector::new(0., 0., 1.).unwrap(), &f);
        assert_eq!(p[4], 1. / 3.);
        assert_eq!(p[5], 0.0);
        assert!(p[..4].iter().all(|&x| close(x, 1. / 6., 1e-15)));

        let p = six_state_probabilities(&PauliVector::new(1., 0., 0.).unwrap(), &f);
        assert_eq!(p[0], 1. / 3.);
        assert_eq!(p[1], 0.0);
        assert!(p[2..].iter().all(|&x| close(x, 1. / 6., 1e-15)));
    }

    #[test]
    fn rejects_states_outside_the_ball() {
        assert!(matches!(
            PauliVector::new(1.0, 0.1, 0.0),
            Err(TomoError::NonPhysicalState { .. })
        ));
        assert!(PauliVector::new(1.0 + 1e-10, 0.0, 0.0).is_ok());
    }

    #[test]
    fn rejects_bad_probabilities() {
        assert!(Probabilities4::new([0.5, 0.5, 0.0, 0.1]).is_err());
        assert!(Probabilities4::new([0.6, 0.2, 0.1, 0.1]).is_err());
        assert!(Probabilities4::new([0.5, 0.3, 0.1, 0.1]).is_err()); // sum p^2 = 0.36
    }

    #[test]
    fn rotation_examples() {
        let f = TetraFrame::reference();
        let same = rotate_frame(&f, &Vector3::z(), 0.0).unwrap();
        assert!((same.rotation() - f.rotation()).abs().max() < 1e-15);
        let full = rotate_frame(&f, &Vector3::new(1., 2., 3.), 2.0 * std::f64::consts::PI).unwrap();
        for j in 0..4 {
            assert!((full.vector(j) - f.vector(j)).norm() < 1e-12);
        }
        // Rodrigues: axis a_1 x z, angle between a_1 and z.
        let a1 = *f.vector(0);
        let axis = a1.cross(&Vector3::z());
        let angle = a1.dot(&Vector3::z()).acos();
        let g = rotate_frame(&f, &axis, angle).unwrap();
        assert!(close(g.vector(0).dot(&Vector3::z()), 1.0, 1e-12));
        assert!(g.gram_defect() < 1e-12);
        assert!(matches!(rotate_frame(&f, &Vector3::zeros(), 1.0), Err(TomoError::ZeroAxis)));
    }

    #[test]
    fn minimal_rotation_handles_antiparallel() {
        let v = Vector3::new(0.3, -0.2, 0.9).normalize();
        let r = minimal_rotation(&v, &(-v)).unwrap();
        assert!((r * v + v).norm() < 1e-12);
        let r = minimal_rotation(&v, &v).unwrap();
        assert!((r - Matrix3::identity()).abs().max() < 1e-15);
    }

    #[test]
    fn inverted_frame_flips_every_vector() {
        let f = TetraFrame::reference().inverted();
        let r = reference_quartet();
        for j in 0..4 {
            assert!((f.vector(j) + r[j]).norm() < 1e-15);
        }
        assert!(f.gram_defect() < 1e-15);
    }

    #[test]
    fn pure_draws_are_normalized() {
        let mut rng = rng::seeded(7);
        for _ in 0..1000 {
            assert!((random_state(StateKind::Pure, &mut rng).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn serde_shapes() {
        let s = PauliVector::new(0.1, -0.2, 0.3).unwrap();
        assert_eq!(serde_json::to_string(&s).unwrap(), "[0.1,-0.2,0.3]");
        assert!(serde_json::from_str::<PauliVector>("[1.0, 1.0, 0.0]").is_err());
        let f = TetraFrame::reference();
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(text, "[1.0,0.0,0.0,0.0,1.0,0.0,0.0,0.0,1.0]");
        let back: TetraFrame = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<TetraFrame>("[1,0,0,0,2,0,0,0,1]").is_err());
    }
}
