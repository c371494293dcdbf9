//! Synthetic detector clicks.
//!
//! Each detected qubit is an independent categorical draw (inverse CDF of
//! one uniform variate), so a run of `N` clicks is a multinomial sample.

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bloch::{
    axis_angle, outcome_probabilities, six_state_probabilities, tangent_basis, PauliVector,
    SixFrame, TetraFrame,
};
use crate::error::{Result, TomoError};
use crate::rng;

/// Tallies of a four-detector run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickCounts {
    pub n: [u64; 4],
    #[serde(rename = "N")]
    pub total: u64,
    pub seed: Option<u64>,
}

impl ClickCounts {
    pub fn new(n: [u64; 4]) -> Self {
        ClickCounts { n, total: n.iter().sum(), seed: None }
    }

    /// Relative frequencies `nu_j = n_j / N`.
    pub fn frequencies(&self) -> Result<[f64; 4]> {
        if self.total == 0 {
            return Err(TomoError::EmptyData);
        }
        let total = self.total as f64;
        Ok(self.n.map(|x| x as f64 / total))
    }

    pub fn is_consistent(&self) -> bool {
        self.n.iter().sum::<u64>() == self.total
    }
}

/// Tallies of a six-detector run, ordered `x+, x-, y+, y-, z+, z-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SixCounts {
    pub n: [u64; 6],
    #[serde(rename = "N")]
    pub total: u64,
    pub seed: Option<u64>,
}

impl SixCounts {
    pub fn new(n: [u64; 6]) -> Self {
        SixCounts { n, total: n.iter().sum(), seed: None }
    }

    pub fn pair(&self, xi: usize) -> (u64, u64) {
        (self.n[2 * xi], self.n[2 * xi + 1])
    }
}

/// Ordered detector indices (zero based) of a run.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClickSequence {
    pub outcomes: Vec<u8>,
}

impl ClickSequence {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn tally(&self) -> ClickCounts {
        let mut n = [0u64; 4];
        for &o in &self.outcomes {
            n[o as usize] += 1;
        }
        ClickCounts::new(n)
    }
}

/// One categorical draw from `p` by inverse CDF.
#[inline]
pub fn draw_outcome<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let last = p.len() - 1;
    for (j, &pj) in p.iter().enumerate().take(last) {
        acc += pj;
        if u < acc {
            return j;
        }
    }
    // Rounding can leave `acc` a hair below 1; never hand out a zero-probability
    // outcome for it.
    (0..=last).rev().find(|&j| p[j] > 0.0).unwrap_or(last)
}

pub fn sample_sequence<R: Rng + ?Sized>(
    state: &PauliVector,
    frame: &TetraFrame,
    n: u64,
    rng: &mut R,
) -> ClickSequence {
    let p = *outcome_probabilities(state, frame).values();
    let outcomes = (0..n).map(|_| draw_outcome(&p, rng) as u8).collect();
    ClickSequence { outcomes }
}

/// Multinomial counts from `n` clicks.
pub fn sample_clicks<R: Rng + ?Sized>(
    state: &PauliVector,
    frame: &TetraFrame,
    n: u64,
    rng: &mut R,
) -> ClickCounts {
    let p = *outcome_probabilities(state, frame).values();
    let mut counts = [0u64; 4];
    for _ in 0..n {
        counts[draw_outcome(&p, rng)] += 1;
    }
    ClickCounts::new(counts)
}

/// As [`sample_clicks`] with a fresh generator; the seed is recorded.
pub fn simulate_clicks(state: &PauliVector, frame: &TetraFrame, n: u64, seed: u64) -> ClickCounts {
    let mut r = rng::seeded(seed);
    let mut c = sample_clicks(state, frame, n, &mut r);
    c.seed = Some(seed);
    c
}

pub fn sample_six<R: Rng + ?Sized>(
    state: &PauliVector,
    frame: &SixFrame,
    n: u64,
    rng: &mut R,
) -> SixCounts {
    let p = six_state_probabilities(state, frame);
    let mut counts = [0u64; 6];
    for _ in 0..n {
        counts[draw_outcome(&p, rng)] += 1;
    }
    SixCounts::new(counts)
}

/// Tilts the frame so that vector `designated` moves by exactly `angle`
/// radians, in a uniformly random azimuthal direction.
pub fn misalign<R: Rng + ?Sized>(
    frame: &TetraFrame,
    designated: usize,
    angle: f64,
    rng: &mut R,
) -> Result<TetraFrame> {
    if angle < 0.0 || !angle.is_finite() {
        return Err(TomoError::Domain(format!("misalignment angle {angle} must be >= 0")));
    }
    let a = frame.vector(designated);
    let (e1, e2) = tangent_basis(a);
    let phi = rng.random::<f64>() * std::f64::consts::TAU;
    let axis: Vector3<f64> = e1 * phi.cos() + e2 * phi.sin();
    Ok(frame.transformed(&axis_angle(&axis, angle)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::Probabilities4;

    #[test]
    fn zero_clicks() {
        let mut r = rng::seeded(1);
        let c = sample_clicks(&PauliVector::zero(), &TetraFrame::reference(), 0, &mut r);
        assert_eq!(c.n, [0; 4]);
        assert_eq!(c.total, 0);
        let c = sample_six(&PauliVector::zero(), &SixFrame::standard(), 0, &mut r);
        assert_eq!(c.n, [0; 6]);
    }

    #[test]
    fn dark_detectors_never_fire() {
        let f = TetraFrame::reference();
        let mut r = rng::seeded(2);
        let anti = PauliVector::from_vector(-f.vector(3)).unwrap();
        for _ in 0..50 {
            assert_eq!(sample_clicks(&anti, &f, 1000, &mut r).n[3], 0);
        }
        let up = PauliVector::new(0.0, 0.0, 1.0).unwrap();
        for _ in 0..50 {
            assert_eq!(sample_six(&up, &SixFrame::standard(), 1000, &mut r).n[5], 0);
        }
    }

    #[test]
    fn aligned_state_fires_all_detectors_with_positive_probability() {
        let f = TetraFrame::reference();
        let s = PauliVector::from_vector(*f.vector(0)).unwrap();
        let c = simulate_clicks(&s, &f, 600, 3);
        assert!(c.n.iter().all(|&x| x > 0));
        assert_eq!(c.seed, Some(3));
    }

    #[test]
    fn same_seed_same_counts() {
        let f = TetraFrame::reference();
        let s = PauliVector::new(0.2, 0.5, -0.1).unwrap();
        assert_eq!(simulate_clicks(&s, &f, 5000, 42), simulate_clicks(&s, &f, 5000, 42));
        assert_ne!(simulate_clicks(&s, &f, 5000, 42).n, simulate_clicks(&s, &f, 5000, 43).n);
    }

    #[test]
    fn sequence_tally_matches_counts() {
        let f = TetraFrame::reference();
        let s = PauliVector::new(0.3, 0.0, 0.4).unwrap();
        let mut r1 = rng::seeded(9);
        let mut r2 = rng::seeded(9);
        let seq = sample_sequence(&s, &f, 777, &mut r1);
        let c = sample_clicks(&s, &f, 777, &mut r2);
        assert_eq!(seq.len(), 777);
        assert_eq!(seq.tally().n, c.n);
    }

    #[test]
    fn frequencies_converge_within_five_sigma() {
        let f = TetraFrame::reference();
        for (s, seed) in [(PauliVector::zero(), 11u64), (PauliVector::new(0.1, -0.6, 0.5).unwrap(), 12)] {
            let p: Probabilities4 = outcome_probabilities(&s, &f);
            for n in [10_000u64, 1_000_000] {
                let c = simulate_clicks(&s, &f, n, seed);
                for j in 0..4 {
                    let sigma = (p[j] * (1.0 - p[j]) / n as f64).sqrt();
                    let nu = c.n[j] as f64 / n as f64;
                    assert!((nu - p[j]).abs() < 5.0 * sigma, "j={j} N={n} nu={nu} p={}", p[j]);
                }
            }
        }
    }

    #[test]
    fn six_state_frequencies_within_five_sigma() {
        let n = 1_000_000u64;
        let mut r = rng::seeded(5);
        let c = sample_six(&PauliVector::zero(), &SixFrame::standard(), n, &mut r);
        let sigma = ((1.0 / 6.0) * (5.0 / 6.0) / n as f64).sqrt();
        for &k in &c.n {
            assert!((k as f64 / n as f64 - 1.0 / 6.0).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn misalignment_moves_designated_vector_by_angle() {
        let f = TetraFrame::reference();
        let mut r = rng::seeded(4);
        let same = misalign(&f, 0, 0.0, &mut r).unwrap();
        assert!((same.rotation() - f.rotation()).abs().max() < 1e-15);
        for theta in [1e-4, 0.01, 0.3, 1.2, 3.0] {
            let g = misalign(&f, 0, theta, &mut r).unwrap();
            let moved = g.vector(0).dot(f.vector(0)).clamp(-1.0, 1.0).acos();
            assert!((moved - theta).abs() < 1e-10, "{moved} vs {theta}");
            assert!(g.gram_defect() < 1e-12);
        }
        assert!(misalign(&f, 0, -0.1, &mut r).is_err());
    }

    #[test]
    fn counts_json_shape() {
        let c = ClickCounts { n: [1, 2, 3, 4], total: 10, seed: Some(7) };
        assert_eq!(serde_json::to_string(&c).unwrap(), r#"{"n":[1,2,3,4],"N":10,"seed":7}"#);
    }
}
