//! Closed-form PAC quantities for a finite hypothesis class under random
//! classification noise, plus the single-run certification level and the
//! primitive random-learning baseline.
//!
//! Sample counts are rounded up. Exponentials are evaluated in the log
//! domain, since exponents such as `M_H ln q` routinely reach -1e3.

use serde::{Deserialize, Serialize};

use crate::error::{check_half_open, check_range, Error, Result};

/// Accuracy/confidence goal `(epsilon*, delta*)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningTarget {
    pub epsilon_star: f64,
    pub delta_star: f64,
}

impl LearningTarget {
    pub fn new(epsilon_star: f64, delta_star: f64) -> Result<Self> {
        check_half_open("epsilon_star", epsilon_star)?;
        check_range(
            "delta_star",
            delta_star,
            delta_star > 0.0 && delta_star <= 1.0,
            "(0, 1]",
        )?;
        Ok(Self {
            epsilon_star,
            delta_star,
        })
    }
}

/// Cardinality of a finite hypothesis class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCapacity {
    pub h_size: u64,
}

impl ClassCapacity {
    pub fn new(h_size: u64) -> Result<Self> {
        if h_size == 0 {
            return Err(Error::Domain {
                name: "h_size",
                value: 0.0,
                expected: ">= 1",
            });
        }
        Ok(Self { h_size })
    }

    fn ln_two_h(self) -> f64 {
        (2.0 * self.h_size as f64).ln()
    }
}

/// Run length and worst admissible noise rate the learner commits to before
/// seeing any data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaltingDesign {
    pub target: LearningTarget,
    pub m_h: u64,
    pub eta_c: f64,
}

impl HaltingDesign {
    pub fn new(target: LearningTarget, m_h: u64, eta_c: f64) -> Result<Self> {
        if m_h == 0 {
            return Err(Error::Domain {
                name: "m_h",
                value: 0.0,
                expected: ">= 1",
            });
        }
        check_half_open("eta_c", eta_c)?;
        Ok(Self { target, m_h, eta_c })
    }

    /// Whether `m_h` reaches the minimal memory for the target at `eta_c`.
    pub fn has_integrity(&self) -> bool {
        match min_memory(self.target, self.eta_c) {
            Ok(min) => self.m_h >= min,
            Err(_) => false,
        }
    }
}

/// Geometric-success baseline with rate `xi = -ln(1 - q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrlBaseline {
    pub xi: f64,
}

impl PrlBaseline {
    pub fn new(xi: f64) -> Result<Self> {
        check_range("xi", xi, xi > 0.0 && xi.is_finite(), "(0, inf)")?;
        Ok(Self { xi })
    }

    /// Baseline built from a per-trial success probability `q`.
    pub fn from_trial_success(q: f64) -> Result<Self> {
        check_range("q", q, q > 0.0 && q < 1.0, "(0, 1)")?;
        Self::new(-(-q).ln_1p())
    }

    /// Largest rate still dominated by the exponential-rate surrogate:
    /// `xi = gamma(epsilon, eta)`.
    pub fn calibrated(epsilon: f64, eta: f64) -> Result<Self> {
        Self::new(rate_gamma(epsilon, eta))
    }
}

/// `gamma(epsilon, eta) = epsilon^2 (1 - 2 eta)^2 / 2`.
pub fn rate_gamma(epsilon: f64, eta: f64) -> f64 {
    let margin = 1.0 - 2.0 * eta;
    0.5 * epsilon * epsilon * margin * margin
}

/// Ceiling that ignores representation noise just above an integer.
pub(crate) fn ceil_count(x: f64) -> u64 {
    if x <= 0.0 {
        return 0;
    }
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as u64
    } else {
        x.ceil() as u64
    }
}

fn require_positive_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "epsilon_star",
            value: epsilon,
            expected: "(0, 1/2) for a finite sample bound",
        })
    }
}

/// Noiseless realizable bound `ceil(ln(|H| / delta*) / epsilon*)`.
pub fn sample_bound_noiseless(target: LearningTarget, cap: ClassCapacity) -> Result<u64> {
    require_positive_epsilon(target.epsilon_star)?;
    let log_term = (cap.h_size as f64 / target.delta_star).ln();
    Ok(ceil_count(log_term / target.epsilon_star))
}

/// RCN bound `ceil(2 / (epsilon*^2 (1 - 2 eta)^2) * ln(2 |H| / delta*))`.
pub fn sample_bound_rcn(target: LearningTarget, cap: ClassCapacity, eta: f64) -> Result<u64> {
    check_half_open("eta", eta)?;
    require_positive_epsilon(target.epsilon_star)?;
    let log_term = cap.ln_two_h() - target.delta_star.ln();
    Ok(ceil_count(log_term / rate_gamma(target.epsilon_star, eta)))
}

/// Smallest certifiable failure probability at sample size `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaMin {
    /// `2 |H| exp(-gamma m)`; may exceed 1 for small `m`.
    pub raw: f64,
    /// `raw` clamped to `[0, 1]`.
    pub clamped: f64,
}

pub fn delta_min(m: u64, epsilon: f64, eta: f64, cap: ClassCapacity) -> Result<DeltaMin> {
    check_half_open("epsilon", epsilon)?;
    check_half_open("eta", eta)?;
    let raw = (cap.ln_two_h() - rate_gamma(epsilon, eta) * m as f64).exp();
    Ok(DeltaMin {
        raw,
        clamped: raw.clamp(0.0, 1.0),
    })
}

/// Exponential-rate surrogate `1 - exp(-gamma m)`.
pub fn p_bl(m: u64, epsilon: f64, eta: f64) -> Result<f64> {
    check_half_open("epsilon", epsilon)?;
    check_half_open("eta", eta)?;
    Ok(-(-rate_gamma(epsilon, eta) * m as f64).exp_m1())
}

/// Primitive random-learning success by time `m`: `1 - exp(-xi m)`.
pub fn p_prl(m: u64, baseline: PrlBaseline) -> f64 {
    -(-baseline.xi * m as f64).exp_m1()
}

/// Single validation pass probability `1 - eta - (1 - 2 eta) epsilon`,
/// evaluated as `(1 - epsilon)(1 - eta) + epsilon eta`.
pub fn q_obs(epsilon: f64, eta: f64) -> Result<f64> {
    check_range(
        "epsilon",
        epsilon,
        (0.0..=0.5).contains(&epsilon),
        "[0, 1/2]",
    )?;
    check_half_open("eta", eta)?;
    Ok((1.0 - epsilon) * (1.0 - eta) + epsilon * eta)
}

/// Probability that a hypothesis at the risk boundary passes `m_h`
/// consecutive validations: `q_obs(epsilon*, eta)^m_h`.
pub fn delta_cert(target: LearningTarget, eta: f64, m_h: u64) -> Result<f64> {
    if m_h == 0 {
        return Err(Error::Domain {
            name: "m_h",
            value: 0.0,
            expected: ">= 1",
        });
    }
    let q = q_obs(target.epsilon_star, eta)?;
    Ok((m_h as f64 * q.ln()).exp())
}

/// Smallest run length whose certification level meets `delta*` at the
/// critical noise rate.
pub fn min_memory(target: LearningTarget, eta_c: f64) -> Result<u64> {
    let q = q_obs(target.epsilon_star, eta_c)?;
    if q >= 1.0 {
        if target.delta_star >= 1.0 {
            return Ok(1);
        }
        return Err(Error::Degenerate(format!(
            "q_obs(epsilon* = {}, eta_c = {}) = 1, no finite run length reaches delta* = {}",
            target.epsilon_star, eta_c, target.delta_star
        )));
    }
    let neg_ln_q = -q.ln();
    let estimate = (-target.delta_star.ln() / neg_ln_q).ceil().max(1.0) as u64;
    // Nudge off any rounding at the boundary so the returned value is the
    // first one with q^M <= delta*.
    let level = |m: u64| (m as f64 * q.ln()).exp();
    let mut m = estimate;
    while level(m) > target.delta_star {
        m += 1;
    }
    while m > 1 && level(m - 1) <= target.delta_star {
        m -= 1;
    }
    Ok(m)
}

/// Small-parameter approximation `ln(1/delta*) / ((1 - 2 eta_c) epsilon* + eta_c)`.
pub fn min_memory_scaling(target: LearningTarget, eta_c: f64) -> f64 {
    -target.delta_star.ln() / ((1.0 - 2.0 * eta_c) * target.epsilon_star + eta_c)
}
