//! Monte Carlo estimation of the learning probability and the four-gate
//! acceptance decision.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{min_memory, p_prl, HaltingDesign, PrlBaseline};
use crate::budget::BudgetPlan;
use crate::channels::ChannelSpec;
use crate::error::{check_range, Error, Result};
use crate::learner::{run_protocol, HypothesisClass, InputDistribution, RunRecord};
use crate::rng::stream_rng;

const BISECTION_STEPS: usize = 200;

/// `ln(i!)` for `i = 0 ..= n`.
fn ln_factorials(n: u64) -> Vec<f64> {
    let mut table = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0_f64;
    table.push(acc);
    for i in 1..=n {
        acc += (i as f64).ln();
        table.push(acc);
    }
    table
}

/// `ln P(X >= k)` for `X ~ Binomial(n, p)`, `0 < p < 1`.
fn ln_upper_tail(k: u64, n: u64, p: f64, ln_fact: &[f64]) -> f64 {
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let ln_n = ln_fact[n as usize];
    let terms: Vec<f64> = (k..=n)
        .map(|i| {
            let i_us = i as usize;
            ln_n - ln_fact[i_us] - ln_fact[(n - i) as usize] + i as f64 * lp + (n - i) as f64 * lq
        })
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// One-sided Clopper-Pearson lower confidence bound for a binomial success
/// probability after `k` successes in `n` trials.
pub fn clopper_pearson_lower(k: u64, n: u64, conf: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain {
            name: "n",
            value: 0.0,
            expected: ">= 1",
        });
    }
    if k > n {
        return Err(Error::Domain {
            name: "k",
            value: k as f64,
            expected: "<= n",
        });
    }
    check_range("conf", conf, conf > 0.0 && conf < 1.0, "(0, 1)")?;
    let alpha = 1.0 - conf;
    if k == 0 {
        return Ok(0.0);
    }
    if k == n {
        return Ok(alpha.powf(1.0 / n as f64));
    }
    let ln_fact = ln_factorials(n);
    let target = alpha.ln();
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ln_upper_tail(k, n, mid, &ln_fact) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub replicas: u64,
    pub successes: u64,
    pub point_estimate: f64,
    pub lower_bound: f64,
    pub conf: f64,
}

impl MonteCarloSummary {
    pub fn from_counts(successes: u64, replicas: u64, conf: f64) -> Result<Self> {
        let lower_bound = clopper_pearson_lower(successes, replicas, conf)?;
        let point_estimate = successes as f64 / replicas as f64;
        Ok(Self {
            replicas,
            successes,
            point_estimate,
            lower_bound: lower_bound.min(point_estimate),
            conf,
        })
    }
}

/// Everything a single protocol replica needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub class: HypothesisClass,
    pub dist: InputDistribution,
    pub channel: ChannelSpec,
    pub plan: BudgetPlan,
    pub design: HaltingDesign,
}

/// Run `f` once per replica, in parallel. Replica `i` draws from stream `i`
/// of `seed`, so the output does not depend on the thread count.
pub fn replicate<T, F>(replicas: u64, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    (0..replicas)
        .into_par_iter()
        .map(|i| f(i, &mut stream_rng(seed, i)))
        .collect()
}

pub fn run_replicas(scenario: &Scenario, replicas: u64, seed: u64) -> Result<Vec<RunRecord>> {
    replicate(replicas, seed, |_, rng| {
        run_protocol(
            &scenario.class,
            &scenario.dist,
            &scenario.channel,
            &scenario.plan,
            &scenario.design,
            rng,
        )
    })
}

/// Fraction of replicas that halt with risk at most `epsilon*`, with its
/// Clopper-Pearson lower bound.
pub fn estimate_pl(
    scenario: &Scenario,
    replicas: u64,
    conf: f64,
    seed: u64,
) -> Result<MonteCarloSummary> {
    if replicas == 0 {
        return Err(Error::Domain {
            name: "replicas",
            value: 0.0,
            expected: ">= 1",
        });
    }
    let runs = run_replicas(scenario, replicas, seed)?;
    let successes = runs.iter().filter(|r| r.success).count() as u64;
    MonteCarloSummary::from_counts(successes, replicas, conf)
}

/// Source of the learning-probability value fed to the reliability and
/// baseline gates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum PlEvidence {
    Empirical(MonteCarloSummary),
    Analytic { value: f64 },
}

impl PlEvidence {
    /// The value the gates compare: the lower confidence bound for
    /// simulated evidence, the bound itself for analytic evidence.
    pub fn operative(&self) -> f64 {
        match self {
            PlEvidence::Empirical(s) => s.lower_bound,
            PlEvidence::Analytic { value } => *value,
        }
    }

    pub fn source_name(&self) -> &'static str {
        match self {
            PlEvidence::Empirical(_) => "empirical",
            PlEvidence::Analytic { .. } => "analytic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionReport {
    pub gate_admissibility: bool,
    pub gate_integrity: bool,
    pub gate_reliability: bool,
    pub gate_baseline: bool,
    pub accepted: bool,
    pub measured_eta: f64,
    pub eta_c: f64,
    pub epsilon_star: f64,
    pub delta_star: f64,
    pub m_h: u64,
    /// `None` when no finite run length certifies the target.
    pub m_h_min: Option<u64>,
    pub m_total: u64,
    pub p_l_used: f64,
    pub p_prl: f64,
    pub xi: f64,
    pub evidence: PlEvidence,
}

/// Apply the admissibility, integrity, reliability and baseline gates.
pub fn decide(
    design: &HaltingDesign,
    plan: &BudgetPlan,
    measured_eta: f64,
    evidence: PlEvidence,
    baseline: PrlBaseline,
) -> DecisionReport {
    let m_h_min = min_memory(design.target, design.eta_c).ok();
    let p_l = evidence.operative();
    let prl = p_prl(plan.m_total, baseline);
    let gate_admissibility = measured_eta <= design.eta_c;
    let gate_integrity = m_h_min.is_some_and(|min| design.m_h >= min);
    let gate_reliability = p_l >= 1.0 - design.target.delta_star;
    let gate_baseline = p_l > prl;
    DecisionReport {
        gate_admissibility,
        gate_integrity,
        gate_reliability,
        gate_baseline,
        accepted: gate_admissibility && gate_integrity && gate_reliability && gate_baseline,
        measured_eta,
        eta_c: design.eta_c,
        epsilon_star: design.target.epsilon_star,
        delta_star: design.target.delta_star,
        m_h: design.m_h,
        m_h_min,
        m_total: plan.m_total,
        p_l_used: p_l,
        p_prl: prl,
        xi: baseline.xi,
        evidence,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    /// Declare the channel noise above `eta_c`; wrong with probability at
    /// most `level` when the budget was planned for the design.
    RejectPath {
        level: f64,
        budget: u64,
    },
    NoEvidence,
}

/// A run that never halted within its planned budget rejects
/// `eta <= eta_c`. A halted run says nothing either way.
pub fn reject_on_no_halt(design: &HaltingDesign, plan: &BudgetPlan, run: &RunRecord) -> Verdict {
    if run.halted {
        Verdict::NoEvidence
    } else {
        Verdict::RejectPath {
            level: design.target.delta_star,
            budget: plan.m_total,
        }
    }
}
