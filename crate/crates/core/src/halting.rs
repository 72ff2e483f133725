//! Run-of-successes statistics for the halting rule "stop after `M_H`
//! consecutive validation successes".

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, check_range, Error, Result};

fn require_run_length(m_h: u64) -> Result<()> {
    if m_h == 0 {
        Err(Error::Domain {
            name: "m_h",
            value: 0.0,
            expected: ">= 1",
        })
    } else {
        Ok(())
    }
}

/// Expected number of trials until the first run of `m_h` successes,
/// `(1 - q^M) / ((1 - q) q^M)`.
pub fn run_length_mean(q: f64, m_h: u64) -> Result<f64> {
    check_range("q", q, q > 0.0 && q < 1.0, "(0, 1)")?;
    require_run_length(m_h)?;
    // (q^-M - 1) / (1 - q), stable for large M.
    Ok((-(m_h as f64) * q.ln()).exp_m1() / (1.0 - q))
}

/// Disjoint-block lower bound on halting within `m_cert` trials:
/// `1 - (1 - q^M)^floor(m_cert / M)`.
pub fn halting_prob_block(q: f64, m_h: u64, m_cert: u64) -> Result<f64> {
    check_probability("q", q)?;
    require_run_length(m_h)?;
    let blocks = m_cert / m_h;
    if blocks == 0 || q == 0.0 {
        return Ok(0.0);
    }
    let block_success = match i32::try_from(m_h) {
        Ok(m) => q.powi(m),
        Err(_) => (m_h as f64 * q.ln()).exp(),
    };
    if block_success >= 1.0 {
        return Ok(1.0);
    }
    Ok(-(blocks as f64 * (-block_success).ln_1p()).exp_m1())
}

/// Distribution over the current streak length after `t` trials, restricted
/// to paths that have not yet halted, plus the halted mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreakState {
    /// `streak_probs[k]` = P(streak = k and not halted), `k < M_H`.
    pub streak_probs: Vec<f64>,
    /// P(halted by trial `t`).
    pub halted_mass: f64,
    pub t: u64,
}

/// Above this run length the per-step mass sum uses compensated summation.
const COMPENSATED_SUM_THRESHOLD: usize = 64;

impl StreakState {
    pub fn new(m_h: u64) -> Result<Self> {
        require_run_length(m_h)?;
        let mut streak_probs = vec![0.0; m_h as usize];
        streak_probs[0] = 1.0;
        Ok(Self {
            streak_probs,
            halted_mass: 0.0,
            t: 0,
        })
    }

    fn live_mass(&self) -> f64 {
        if self.streak_probs.len() > COMPENSATED_SUM_THRESHOLD {
            neumaier_sum(&self.streak_probs)
        } else {
            self.streak_probs.iter().sum()
        }
    }

    /// Advance by one trial with success probability `q`.
    pub fn step(&mut self, q: f64) {
        let live = self.live_mass();
        let last = *self.streak_probs.last().expect("run length >= 1");
        self.halted_mass += q * last;
        let len = self.streak_probs.len();
        for k in (1..len).rev() {
            self.streak_probs[k] = q * self.streak_probs[k - 1];
        }
        self.streak_probs[0] = (1.0 - q) * live;
        self.t += 1;
    }

    /// P(halted by trial `t`). Past one half it is taken as the complement
    /// of the live mass, which is accurate near 1 where the running halted
    /// sum is not.
    pub fn halting_prob(&self) -> f64 {
        let p = if self.halted_mass > 0.5 {
            1.0 - self.live_mass()
        } else {
            self.halted_mass
        };
        p.clamp(0.0, 1.0)
    }

    /// `sum(streak_probs) + halted_mass`; equals 1 up to rounding.
    pub fn total_mass(&self) -> f64 {
        self.live_mass() + self.halted_mass
    }
}

fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Exact probability of observing a run of `m_h` successes within `m_cert`
/// i.i.d. trials, by dynamic programming over the streak length.
///
/// `O(m_h)` memory and `O(m_h * m_cert)` time.
pub fn halting_prob_exact(q: f64, m_h: u64, m_cert: u64) -> Result<f64> {
    check_probability("q", q)?;
    let mut state = StreakState::new(m_h)?;
    for _ in 0..m_cert {
        state.step(q);
    }
    Ok(state.halting_prob())
}

/// The `(t, Q_t)` series for `t = 0 ..= m_cert`.
pub fn halting_trace(q: f64, m_h: u64, m_cert: u64) -> Result<Vec<(u64, f64)>> {
    check_probability("q", q)?;
    let mut state = StreakState::new(m_h)?;
    let mut trace = Vec::with_capacity(m_cert as usize + 1);
    trace.push((0, 0.0));
    for _ in 0..m_cert {
        state.step(q);
        trace.push((state.t, state.halting_prob()));
    }
    Ok(trace)
}

/// Live consecutive-success counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreakTracker {
    pub current_run: u64,
    pub m_h: u64,
    pub trials_consumed: u64,
    pub halted: bool,
}

impl StreakTracker {
    pub fn new(m_h: u64) -> Result<Self> {
        require_run_length(m_h)?;
        Ok(Self {
            current_run: 0,
            m_h,
            trials_consumed: 0,
            halted: false,
        })
    }

    /// Feed one validation outcome. Returns whether the tracker has halted.
    pub fn record(&mut self, success: bool) -> Result<bool> {
        if self.halted {
            return Err(Error::TrackerHalted {
                trials: self.trials_consumed,
            });
        }
        self.trials_consumed += 1;
        if success {
            self.current_run += 1;
            if self.current_run >= self.m_h {
                self.halted = true;
            }
        } else {
            self.current_run = 0;
        }
        Ok(self.halted)
    }
}
