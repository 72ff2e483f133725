//! Two-phase sample budgets: `m = m_train + m_cert`.
//!
//! The failure budget `delta*` is split as `alpha delta*` for training and
//! `(1 - alpha) delta*` for certification. With
//! `A = 2 / (epsilon*^2 (1 - 2 eta_c)^2)` and `B = M_H / s0`,
//! `s0 = -ln(1 - q0^M_H)`, the continuous budget
//!
//! ```text
//! m_lb(alpha) = A ln(2|H| / (alpha delta*)) + B ln(1 / ((1 - alpha) delta*))
//! ```
//!
//! is strictly convex in `alpha` with minimizer `A / (A + B)`.

use serde::{Deserialize, Serialize};

use crate::bounds::{ceil_count, delta_min, q_obs, rate_gamma, ClassCapacity, HaltingDesign};
use crate::error::{check_half_open, check_range, Error, Result};
use crate::halting::halting_prob_exact;

/// Sift efficiency of symmetric BB84 basis choice.
pub const SYMMETRIC_SIFT_EFFICIENCY: f64 = 0.5;

/// Which training certificate sets `m_train`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surrogate {
    /// Finite-class ERM bound with the `ln 2|H|` capacity term.
    #[default]
    FiniteClass,
    /// Capacity-free exponential-rate surrogate `1 - exp(-gamma m)`.
    ExpRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetInputs {
    pub design: HaltingDesign,
    pub cap: ClassCapacity,
    pub surrogate: Surrogate,
    /// Expected fraction of raw channel uses that survive sifting.
    pub kappa: f64,
}

impl BudgetInputs {
    pub fn new(
        design: HaltingDesign,
        cap: ClassCapacity,
        surrogate: Surrogate,
        kappa: f64,
    ) -> Result<Self> {
        check_kappa(kappa)?;
        Ok(Self {
            design,
            cap,
            surrogate,
            kappa,
        })
    }

    /// Worst admissible single-validation pass probability `q0`.
    pub fn q0(&self) -> f64 {
        let t = self.design.target;
        q_obs(t.epsilon_star, self.design.eta_c).expect("design invariants bound q_obs inputs")
    }

    fn block_success(&self) -> f64 {
        (self.design.m_h as f64 * self.q0().ln()).exp()
    }

    /// Block-decay rate `s0 = -ln(1 - q0^M_H)`.
    pub fn s0(&self) -> f64 {
        -(-self.block_success()).ln_1p()
    }

    /// Coefficient of `ln(1/alpha)` in the training budget.
    pub fn coef_a(&self) -> f64 {
        // 2 / (eps^2 (1 - 2 eta)^2) and 1/gamma* coincide; the surrogates
        // differ only in the capacity term.
        let t = self.design.target;
        1.0 / rate_gamma(t.epsilon_star, self.design.eta_c)
    }

    /// Coefficient of `ln(1/(1 - alpha))` in the certification budget.
    pub fn coef_b(&self) -> f64 {
        self.design.m_h as f64 / self.s0()
    }

    /// `ln` of the training-bound argument at split `alpha`.
    fn train_log(&self, alpha: f64) -> f64 {
        let delta = self.design.target.delta_star;
        let base = -(alpha * delta).ln();
        match self.surrogate {
            Surrogate::FiniteClass => base + (2.0 * self.cap.h_size as f64).ln(),
            Surrogate::ExpRate => base,
        }
    }

    fn cert_log(&self, alpha: f64) -> f64 {
        -((1.0 - alpha) * self.design.target.delta_star).ln()
    }

    /// Un-ceiled `m_lb(alpha)`.
    pub fn continuous_budget(&self, alpha: f64) -> f64 {
        self.coef_a() * self.train_log(alpha) + self.coef_b() * self.cert_log(alpha)
    }
}

fn check_kappa(kappa: f64) -> Result<f64> {
    check_range("kappa", kappa, kappa > 0.0 && kappa <= 1.0, "(0, 1]")
}

fn check_alpha(alpha: f64) -> Result<f64> {
    check_range("alpha", alpha, alpha > 0.0 && alpha < 1.0, "(0, 1)")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    /// `delta* - q0^M_H`; negative when infeasible.
    pub margin: f64,
    /// `q0^M_H`, the single-block p-value at the critical noise rate.
    pub block_p: f64,
}

pub fn feasibility(inputs: &BudgetInputs) -> Feasibility {
    let block_p = inputs.block_success();
    let delta = inputs.design.target.delta_star;
    Feasibility {
        feasible: block_p <= delta,
        margin: delta - block_p,
        block_p,
    }
}

fn require_feasible(inputs: &BudgetInputs) -> Result<()> {
    let f = feasibility(inputs);
    if f.feasible && inputs.s0().is_finite() {
        Ok(())
    } else {
        Err(Error::Infeasible {
            block_p: f.block_p,
            delta_star: inputs.design.target.delta_star,
            margin: f.margin,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetPlan {
    pub alpha: f64,
    pub m_train: u64,
    pub n_cert_blocks: u64,
    pub m_cert: u64,
    pub m_total: u64,
    pub kappa: f64,
    pub m_raw: u64,
    pub q0: f64,
    pub s0: f64,
    pub coef_a: f64,
    pub coef_b: f64,
}

/// Budgets at a fixed split `alpha`, each phase ceiled independently.
pub fn budget_at(inputs: &BudgetInputs, alpha: f64) -> Result<BudgetPlan> {
    check_alpha(alpha)?;
    check_kappa(inputs.kappa)?;
    require_feasible(inputs)?;
    let coef_a = inputs.coef_a();
    let s0 = inputs.s0();
    let m_train = ceil_count(coef_a * inputs.train_log(alpha));
    let n_cert_blocks = ceil_count(inputs.cert_log(alpha) / s0);
    let m_cert = n_cert_blocks * inputs.design.m_h;
    let m_total = m_train + m_cert;
    Ok(BudgetPlan {
        alpha,
        m_train,
        n_cert_blocks,
        m_cert,
        m_total,
        kappa: inputs.kappa,
        m_raw: raw_rescale(m_total, inputs.kappa)?,
        q0: inputs.q0(),
        s0,
        coef_a,
        coef_b: inputs.coef_b(),
    })
}

/// Minimizer `A / (A + B)` of the continuous budget.
pub fn alpha_star(inputs: &BudgetInputs) -> Result<f64> {
    require_feasible(inputs)?;
    let a = inputs.coef_a();
    let b = inputs.coef_b();
    Ok(a / (a + b))
}

/// Continuous optimum of `m_lb`, before ceilings.
pub fn continuous_optimum(inputs: &BudgetInputs) -> Result<f64> {
    require_feasible(inputs)?;
    let a = inputs.coef_a();
    let b = inputs.coef_b();
    let delta = inputs.design.target.delta_star;
    let train = match inputs.surrogate {
        Surrogate::FiniteClass => a * (2.0 * inputs.cap.h_size as f64 / delta).ln(),
        Surrogate::ExpRate => a * (1.0 / delta).ln(),
    };
    Ok(train + b * (1.0 / delta).ln() + a * (b / a).ln_1p() + b * (a / b).ln_1p())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizedBudget {
    pub plan: BudgetPlan,
    pub continuous_optimum: f64,
}

/// Plan at the optimal split. The ceiled total stays within `M_H + 2` of the
/// continuous optimum.
pub fn budget_opt(inputs: &BudgetInputs) -> Result<OptimizedBudget> {
    let plan = budget_at(inputs, alpha_star(inputs)?)?;
    let continuous_optimum = continuous_optimum(inputs)?;
    debug_assert!(
        (plan.m_total as f64 - continuous_optimum).abs() <= (inputs.design.m_h + 2) as f64,
        "ceiling slack exceeded: {} vs {}",
        plan.m_total,
        continuous_optimum
    );
    Ok(OptimizedBudget {
        plan,
        continuous_optimum,
    })
}

/// Plans on the grid `alpha = i / (points + 1)`, `i = 1 ..= points`.
pub fn sweep_alpha(inputs: &BudgetInputs, points: usize) -> Result<Vec<BudgetPlan>> {
    (1..=points)
        .map(|i| budget_at(inputs, i as f64 / (points + 1) as f64))
        .collect()
}

/// Certification budget from the looser `-ln(1 - x) >= x` inequality:
/// `M_H ceil(q0^-M_H ln(1 / ((1 - alpha) delta*)))`.
pub fn loose_cert_budget(inputs: &BudgetInputs, alpha: f64) -> Result<u64> {
    check_alpha(alpha)?;
    require_feasible(inputs)?;
    let blocks = ceil_count(inputs.cert_log(alpha) / inputs.block_success());
    Ok(blocks * inputs.design.m_h)
}

fn training_failure(inputs: &BudgetInputs, eta: f64, m_train: u64) -> Result<f64> {
    let t = inputs.design.target;
    match inputs.surrogate {
        Surrogate::FiniteClass => Ok(delta_min(m_train, t.epsilon_star, eta, inputs.cap)?.raw),
        Surrogate::ExpRate => Ok((-rate_gamma(t.epsilon_star, eta) * m_train as f64).exp()),
    }
}

/// Union-bound certificate on the learning probability with the disjoint
/// block bound for the certification phase, clamped to `[0, 1]`.
pub fn two_phase_lower_bound(
    inputs: &BudgetInputs,
    eta_actual: f64,
    m_train: u64,
    m_cert: u64,
) -> Result<f64> {
    check_half_open("eta_actual", eta_actual)?;
    let t = inputs.design.target;
    let train_fail = training_failure(inputs, eta_actual, m_train)?;
    let q = q_obs(t.epsilon_star, eta_actual)?;
    let m_h = inputs.design.m_h;
    let block_miss = if m_cert / m_h == 0 {
        1.0
    } else {
        let qm = (m_h as f64 * q.ln()).exp();
        ((m_cert / m_h) as f64 * (-qm).ln_1p()).exp()
    };
    Ok((1.0 - train_fail - block_miss).clamp(0.0, 1.0))
}

/// As [`two_phase_lower_bound`] with the exact halting probability in place
/// of the block bound.
pub fn two_phase_lower_bound_exact(
    inputs: &BudgetInputs,
    eta_actual: f64,
    m_train: u64,
    m_cert: u64,
) -> Result<f64> {
    check_half_open("eta_actual", eta_actual)?;
    let t = inputs.design.target;
    let train_fail = training_failure(inputs, eta_actual, m_train)?;
    let q = q_obs(t.epsilon_star, eta_actual)?;
    let halt = halting_prob_exact(q, inputs.design.m_h, m_cert)?;
    Ok((halt - train_fail).clamp(0.0, 1.0))
}

/// Raw channel uses needed for `m_sifted` usable samples: `ceil(m / kappa)`.
pub fn raw_rescale(m_sifted: u64, kappa: f64) -> Result<u64> {
    check_kappa(kappa)?;
    Ok(ceil_count(m_sifted as f64 / kappa))
}
