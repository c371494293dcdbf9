//! Maximum-likelihood state reconstruction from click counts.
//!
//! For the tetrahedron device the likelihood is maximized over the outcome
//! probabilities with two Lagrange multipliers, one for unit sum and one
//! (`3 N mu`) for the purity bound `sum p^2 <= 1/3`. When the relative
//! frequencies already satisfy the bound they are the estimate; otherwise
//! `mu` is the root in `(0, 2]` of
//!
//! ```text
//! mu + 2 - 1/2 sum_j sqrt((1 - mu)^2 + 12 mu nu_j) = 0
//! ```
//!
//! and the fitted probabilities solve `nu_j / p_j = lambda + 3 mu p_j` with
//! `lambda = 1 - mu`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::bloch::{outcome_probabilities, six_state_probabilities, PauliVector, SixFrame, TetraFrame};
use crate::clicks::{ClickCounts, SixCounts};
use crate::error::{Result, TomoError};
use crate::likelihood::ClickLikelihood;

/// Data with `sum nu^2` this close to `1/3` count as satisfying the bound.
pub const CRITICAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Interior,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMode {
    /// Relative frequencies when they are physical, the sphere otherwise.
    #[default]
    Auto,
    /// Always return a pure state (the source is known to be pure).
    ForceBoundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    #[serde(rename = "S")]
    pub s: PauliVector,
    pub ptilde: Vec<f64>,
    pub mu: f64,
    pub branch: Branch,
    pub loglik: f64,
    /// Set when every pure state fits equally well and a fixed one was chosen.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

/// `S = 3 sum_j nu_j a_j`; may leave the Bloch ball.
pub fn naive_estimator(counts: &ClickCounts, frame: &TetraFrame) -> Result<Vector3<f64>> {
    let nu = counts.frequencies()?;
    Ok((0..4).map(|j| frame.vector(j) * (3.0 * nu[j])).sum())
}

/// Whether `sum nu_j^2 <= 1/3`, i.e. the frequencies are physical.
pub fn check_inequality(counts: &ClickCounts) -> Result<bool> {
    let nu = counts.frequencies()?;
    Ok(sum_sq(&nu) <= 1.0 / 3.0 + CRITICAL_TOL)
}

fn sum_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// One term of the rescaled root equation (the sum of which vanishes at
/// the relevant multiplier), written without cancellation for `lambda < 0`.
fn root_term(mu: f64, nu: f64) -> f64 {
    let lambda = 1.0 - mu;
    let rad = (lambda * lambda + 12.0 * mu * nu).sqrt();
    if lambda >= 0.0 {
        let denom = lambda + 6.0 * mu * nu + rad;
        if denom == 0.0 {
            0.0
        } else {
            (3.0 * nu - 1.0) * nu / denom
        }
    } else {
        (3.0 * nu - 1.0) / (6.0 * mu * (1.0 + 2.0 / (rad - lambda)))
    }
}

fn root_sum(mu: f64, nu: &[f64; 4]) -> f64 {
    nu.iter().map(|&n| root_term(mu, n)).sum()
}

/// Residual of the unscaled multiplier equation.
pub fn mu_residual(mu: f64, nu: &[f64; 4]) -> f64 {
    let lambda = 1.0 - mu;
    mu + 2.0 - 0.5 * nu.iter().map(|&n| (lambda * lambda + 12.0 * mu * n).sqrt()).sum::<f64>()
}

/// Lagrange multiplier of the purity constraint for frequencies that
/// violate it. Bisection on `(1e-14, 2]`.
pub fn solve_mu(nu: &[f64; 4]) -> Result<f64> {
    let sum: f64 = nu.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || nu.iter().any(|&x| x < 0.0) {
        return Err(TomoError::InvalidProbabilities(format!("frequencies sum to {sum}")));
    }
    if sum_sq(nu) <= 1.0 / 3.0 {
        return Err(TomoError::Domain(
            "frequencies satisfy the purity bound; the multiplier is zero".into(),
        ));
    }
    let (mut lo, mut hi) = (1e-14, 2.0);
    if root_sum(lo, nu) <= 0.0 {
        return Err(TomoError::NoRoot("no sign change near mu = 0".into()));
    }
    let mu = if root_sum(hi, nu) >= 0.0 {
        hi
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if root_sum(mid, nu) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let res = mu_residual(mu, nu);
    if !res.is_finite() || res.abs() > 1e-12 {
        return Err(TomoError::NoRoot(format!("residual {res:e} at mu = {mu}")));
    }
    Ok(mu)
}

/// Fitted probabilities for a given multiplier (positive root of
/// `3 mu p^2 + lambda p - nu = 0`).
pub fn ptilde_from_mu(nu: &[f64; 4], mu: f64) -> [f64; 4] {
    let lambda = 1.0 - mu;
    nu.map(|n| {
        let rad = (lambda * lambda + 12.0 * mu * n).sqrt();
        if lambda > 0.0 {
            2.0 * n / (lambda + rad)
        } else {
            (rad - lambda) / (6.0 * mu)
        }
    })
}

fn loglik(n: &[u64], p: &[f64]) -> Result<f64> {
    let mut l = 0.0;
    for (j, (&k, &pj)) in n.iter().zip(p).enumerate() {
        if k > 0 {
            if pj <= 0.0 {
                return Err(TomoError::AllZeroProb { outcome: j });
            }
            l += k as f64 * pj.ln();
        }
    }
    Ok(l)
}

fn pauli_from_ptilde(p: &[f64; 4], frame: &TetraFrame) -> Vector3<f64> {
    (0..4).map(|j| frame.vector(j) * (3.0 * p[j])).sum()
}

/// Maximum-likelihood estimate for the tetrahedron device.
pub fn ml_estimate_four(counts: &ClickCounts, frame: &TetraFrame, mode: FitMode) -> Result<Estimate> {
    let nu = counts.frequencies()?;
    let sq = sum_sq(&nu);
    let physical = sq <= 1.0 / 3.0 + CRITICAL_TOL;

    if physical && mode == FitMode::Auto {
        let s = pauli_from_ptilde(&nu, frame);
        return Ok(Estimate {
            s: PauliVector::from_vector_unchecked(s),
            ptilde: nu.to_vec(),
            mu: 0.0,
            branch: Branch::Interior,
            loglik: loglik(&counts.n, &nu)?,
            degenerate: false,
        });
    }

    if !physical {
        let mu = solve_mu(&nu)?;
        let p = ptilde_from_mu(&nu, mu);
        let s = pauli_from_ptilde(&p, frame);
        return Ok(Estimate {
            s: PauliVector::from_vector_unchecked(s),
            ptilde: p.to_vec(),
            mu,
            branch: Branch::Boundary,
            loglik: loglik(&counts.n, &p)?,
            degenerate: false,
        });
    }

    // Forced onto the sphere with physical frequencies. Uniform frequencies
    // give a four-fold tie: the sphere maximum sits at every a_j.
    let uniform = nu.iter().all(|&x| (x - 0.25).abs() <= CRITICAL_TOL);
    let s = if uniform {
        *frame.vector(0)
    } else {
        let lik = ClickLikelihood::from_counts(counts, frame);
        let mut starts = vec![pauli_from_ptilde(&nu, frame)];
        starts.extend(lik.standard_starts());
        lik.maximize_on_sphere(&starts)
            .ok_or_else(|| TomoError::NoRoot("no feasible start on the sphere".into()))?
            .0
    };
    let s = PauliVector::from_vector_unchecked(s);
    let p = *outcome_probabilities(&s, frame).values();
    // Multiplier from the stationarity condition nu/p - 1 = mu (3p - 1).
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..4 {
        if p[j] > 0.0 {
            let x = 3.0 * p[j] - 1.0;
            num += x * (nu[j] / p[j] - 1.0);
            den += x * x;
        }
    }
    Ok(Estimate {
        s,
        ptilde: p.to_vec(),
        mu: if den > 0.0 { num / den } else { 0.0 },
        branch: Branch::Boundary,
        loglik: loglik(&counts.n, &p)?,
        degenerate: uniform,
    })
}

/// Maximizer of `n+ ln(1+s) + n- ln(1-s) - mu s^2` over `[-1, 1]`.
fn axis_component(np: f64, nm: f64, mu: f64) -> f64 {
    let h = |s: f64| np / (1.0 + s) - nm / (1.0 - s) - 2.0 * mu * s;
    if np == 0.0 && -nm / 2.0 + 2.0 * mu <= 0.0 {
        return -1.0;
    }
    if nm == 0.0 && np / 2.0 - 2.0 * mu >= 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Maximum-likelihood estimate for the six-outcome device.
///
/// The ratio estimator is returned when it is physical. Otherwise the
/// likelihood is maximized on the sphere: for a trial multiplier each
/// component solves a one-dimensional concave problem, and the multiplier
/// is bisected until the vector has unit length.
pub fn ml_estimate_six(counts: &SixCounts, frame: &SixFrame) -> Result<Estimate> {
    const AXES: [char; 3] = ['x', 'y', 'z'];
    let mut pairs = [(0.0, 0.0); 3];
    for (xi, pair) in pairs.iter_mut().enumerate() {
        let (np, nm) = counts.pair(xi);
        if np + nm == 0 {
            return Err(TomoError::EmptyAxis { axis: AXES[xi] });
        }
        *pair = (np as f64, nm as f64);
    }
    let ratio = Vector3::from_fn(|xi, _| {
        let (np, nm) = pairs[xi];
        (np - nm) / (np + nm)
    });

    let (local, mu, branch) = if ratio.norm() <= 1.0 + CRITICAL_TOL {
        (ratio, 0.0, Branch::Interior)
    } else {
        let comp = |mu: f64| Vector3::from_fn(|xi, _| axis_component(pairs[xi].0, pairs[xi].1, mu));
        let total = counts.total as f64;
        let (mut lo, mut hi) = (0.0, total.max(1.0));
        while comp(hi).norm() > 1.0 {
            hi *= 2.0;
        }
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if comp(mid).norm() > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mu = 0.5 * (lo + hi);
        (comp(mu).normalize(), mu, Branch::Boundary)
    };
    let s = PauliVector::from_vector_unchecked(frame.global(&local));
    let p = six_state_probabilities(&s, frame);
    Ok(Estimate {
        s,
        ptilde: p.to_vec(),
        mu,
        branch,
        loglik: loglik(&counts.n, &p)?,
        degenerate: false,
    })
}
