//! Finite-class ERM learner with run-based certification.
//!
//! Inputs are `n`-bit strings encoded as integers in `0 .. 2^n`; hypotheses
//! are truth tables over that domain. A protocol run trains by empirical risk
//! minimization on `m_train` noisy labels, then feeds fresh validation
//! outcomes for the returned hypothesis into a [`StreakTracker`] until it
//! halts or `m_cert` trials are spent.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::HaltingDesign;
use crate::budget::{raw_rescale, BudgetPlan};
use crate::channels::ChannelSpec;
use crate::error::{Error, Result};
use crate::halting::StreakTracker;

/// Largest supported input width.
pub const MAX_DOMAIN_BITS: u32 = 16;

/// Extra raw uses provisioned on top of `ceil(m / kappa)` for sifted paths.
pub const RAW_HEADROOM: f64 = 1.05;

/// Truth tables over `{0,1}^n`, one of which is the target concept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisClass {
    pub domain_bits: u32,
    pub hypotheses: Vec<Vec<bool>>,
    pub concept_index: usize,
}

impl HypothesisClass {
    pub fn new(domain_bits: u32, hypotheses: Vec<Vec<bool>>, concept_index: usize) -> Result<Self> {
        if domain_bits == 0 || domain_bits > MAX_DOMAIN_BITS {
            return Err(Error::Domain {
                name: "domain_bits",
                value: domain_bits as f64,
                expected: "1 ..= 16",
            });
        }
        if hypotheses.is_empty() {
            return Err(Error::Config {
                field: "hypotheses".into(),
                message: "class must contain at least one hypothesis".into(),
            });
        }
        let size = 1usize << domain_bits;
        if let Some(bad) = hypotheses.iter().position(|h| h.len() != size) {
            return Err(Error::Config {
                field: format!("hypotheses[{bad}]"),
                message: format!("truth table must have {size} entries"),
            });
        }
        if concept_index >= hypotheses.len() {
            return Err(Error::Index {
                what: "concept",
                index: concept_index,
                len: hypotheses.len(),
            });
        }
        Ok(Self {
            domain_bits,
            hypotheses,
            concept_index,
        })
    }

    /// Sixteen functions on four input bits: the literals `x_i`, their
    /// negations, the six pairwise parities `x_i ^ x_j`, and the two
    /// constants. `concept_index` selects the target among them.
    pub fn desk_instance(concept_index: usize) -> Result<Self> {
        const N: u32 = 4;
        let table = |f: &dyn Fn(usize) -> bool| (0..1usize << N).map(f).collect::<Vec<_>>();
        let bit = |x: usize, i: usize| (x >> i) & 1 == 1;
        let mut hypotheses = Vec::with_capacity(16);
        for i in 0..N as usize {
            hypotheses.push(table(&|x| bit(x, i)));
        }
        for i in 0..N as usize {
            hypotheses.push(table(&|x| !bit(x, i)));
        }
        for i in 0..N as usize {
            for j in i + 1..N as usize {
                hypotheses.push(table(&|x| bit(x, i) ^ bit(x, j)));
            }
        }
        hypotheses.push(table(&|_| false));
        hypotheses.push(table(&|_| true));
        Self::new(N, hypotheses, concept_index)
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn domain_size(&self) -> usize {
        1usize << self.domain_bits
    }

    pub fn concept(&self) -> &[bool] {
        &self.hypotheses[self.concept_index]
    }

    fn hypothesis(&self, h: usize) -> Result<&[bool]> {
        self.hypotheses
            .get(h)
            .map(Vec::as_slice)
            .ok_or(Error::Index {
                what: "hypothesis",
                index: h,
                len: self.hypotheses.len(),
            })
    }
}

/// Probability weights over the input domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputDistribution {
    pub weights: Vec<f64>,
    #[serde(skip)]
    sampler: Option<WeightedIndex<f64>>,
}

impl PartialEq for InputDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights
    }
}

impl InputDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config {
                field: "weights".into(),
                message: "weights must be finite and nonnegative".into(),
            });
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config {
                field: "weights".into(),
                message: format!("weights sum to {total}, expected 1"),
            });
        }
        let sampler = WeightedIndex::new(&weights).map_err(|e| Error::Config {
            field: "weights".into(),
            message: e.to_string(),
        })?;
        Ok(Self {
            weights,
            sampler: Some(sampler),
        })
    }

    pub fn uniform(domain_bits: u32) -> Result<Self> {
        let size = 1usize << domain_bits.min(MAX_DOMAIN_BITS);
        Self::new(vec![1.0 / size as f64; size])
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.sampler {
            Some(s) => s.sample(rng),
            None => WeightedIndex::new(&self.weights)
                .expect("validated weights")
                .sample(rng),
        }
    }

    fn check_domain(&self, class: &HypothesisClass) -> Result<()> {
        if self.weights.len() != class.domain_size() {
            return Err(Error::Config {
                field: "weights".into(),
                message: format!(
                    "distribution has {} points, class domain has {}",
                    self.weights.len(),
                    class.domain_size()
                ),
            });
        }
        Ok(())
    }
}

/// Exact population risk `sum_x w(x) [h(x) != c(x)]`.
pub fn population_risk(h: usize, class: &HypothesisClass, dist: &InputDistribution) -> Result<f64> {
    dist.check_domain(class)?;
    let table = class.hypothesis(h)?;
    Ok(table
        .iter()
        .zip(class.concept())
        .zip(&dist.weights)
        .filter(|((a, b), _)| a != b)
        .map(|(_, w)| w)
        .sum::<f64>()
        .clamp(0.0, 1.0))
}

/// Raw channel uses provisioned for `m` usable samples.
pub fn raw_provision(channel: &ChannelSpec, m: u64) -> Result<u64> {
    match channel {
        ChannelSpec::Rcn { .. } => Ok(m),
        ChannelSpec::Bb84 { .. } => {
            let base = raw_rescale(m, channel.sift_efficiency())?;
            Ok((base as f64 * RAW_HEADROOM).ceil() as u64)
        }
    }
}

/// Draws labelled examples through a channel until `needed` usable samples
/// have arrived, calling `visit(x, noisy_label)` for each. Returns the number
/// of usable samples delivered, stopping early when `visit` returns false.
fn stream_samples<R, F>(
    class: &HypothesisClass,
    dist: &InputDistribution,
    channel: &ChannelSpec,
    needed: u64,
    rng: &mut R,
    mut visit: F,
) -> Result<u64>
where
    R: Rng + ?Sized,
    F: FnMut(usize, bool) -> bool,
{
    let provision = raw_provision(channel, needed)?;
    let concept = class.concept();
    let mut delivered = 0u64;
    let mut raw = 0u64;
    while delivered < needed {
        if raw == provision {
            return Err(Error::InsufficientSifted {
                needed,
                obtained: delivered,
                raw_uses: provision,
            });
        }
        raw += 1;
        let x = dist.sample(rng);
        if let Some(y) = channel.transmit(concept[x], rng) {
            delivered += 1;
            if !visit(x, y) {
                break;
            }
        }
    }
    Ok(delivered)
}

/// Empirical risk minimizer over the class on `m_train` fresh noisy samples.
/// Ties go to the lowest index.
pub fn erm_train<R: Rng + ?Sized>(
    class: &HypothesisClass,
    dist: &InputDistribution,
    channel: &ChannelSpec,
    m_train: u64,
    rng: &mut R,
) -> Result<usize> {
    dist.check_domain(class)?;
    channel.validate()?;
    // label_counts[x][y]: occurrences of input x with observed label y.
    let mut label_counts = vec![[0u64; 2]; class.domain_size()];
    stream_samples(class, dist, channel, m_train, rng, |x, y| {
        label_counts[x][y as usize] += 1;
        true
    })?;
    let mut best = (u64::MAX, 0usize);
    for (index, table) in class.hypotheses.iter().enumerate() {
        let mismatches: u64 = table
            .iter()
            .zip(&label_counts)
            .map(|(&hx, counts)| counts[!hx as usize])
            .sum();
        if mismatches < best.0 {
            best = (mismatches, index);
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificationOutcome {
    pub halted: bool,
    pub trials: u64,
}

/// Run the consecutive-success validation test for hypothesis `h` on fresh
/// noisy samples, stopping at the first run of `m_h` passes or after
/// `m_cert` trials.
pub fn certify<R: Rng + ?Sized>(
    h: usize,
    class: &HypothesisClass,
    dist: &InputDistribution,
    channel: &ChannelSpec,
    m_h: u64,
    m_cert: u64,
    rng: &mut R,
) -> Result<CertificationOutcome> {
    dist.check_domain(class)?;
    channel.validate()?;
    let table = class.hypothesis(h)?;
    let mut tracker = StreakTracker::new(m_h)?;
    let mut step_error = None;
    stream_samples(class, dist, channel, m_cert, rng, |x, y| {
        match tracker.record(table[x] == y) {
            Ok(halted) => !halted,
            Err(e) => {
                step_error = Some(e);
                false
            }
        }
    })?;
    if let Some(e) = step_error {
        return Err(e);
    }
    Ok(CertificationOutcome {
        halted: tracker.halted,
        trials: tracker.trials_consumed,
    })
}

/// Outcome of one train-then-certify protocol execution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub halted: bool,
    pub trials_used_train: u64,
    pub trials_used_cert: u64,
    pub returned_hypothesis: usize,
    pub true_risk: f64,
    /// Halted with population risk at most `epsilon*`.
    pub success: bool,
    /// The provisioned raw uses ran out before a phase received its samples.
    pub sift_shortfall: bool,
}

/// Train on `plan.m_train` samples, then certify with `plan.m_cert` trials.
///
/// Running out of provisioned raw uses on a sifted path ends the run without
/// a halt: the channel budget is spent, so the run counts as a failure and
/// `sift_shortfall` is set. [`erm_train`] and [`certify`] themselves report
/// the shortfall as [`Error::InsufficientSifted`].
pub fn run_protocol<R: Rng + ?Sized>(
    class: &HypothesisClass,
    dist: &InputDistribution,
    channel: &ChannelSpec,
    plan: &BudgetPlan,
    design: &HaltingDesign,
    rng: &mut R,
) -> Result<RunRecord> {
    let shortfall = |obtained: u64, h: usize, trials_train: u64| -> Result<RunRecord> {
        Ok(RunRecord {
            halted: false,
            trials_used_train: trials_train,
            trials_used_cert: obtained,
            returned_hypothesis: h,
            true_risk: population_risk(h, class, dist)?,
            success: false,
            sift_shortfall: true,
        })
    };
    let h = match erm_train(class, dist, channel, plan.m_train, rng) {
        Ok(h) => h,
        Err(Error::InsufficientSifted { obtained, .. }) => return shortfall(0, 0, obtained),
        Err(e) => return Err(e),
    };
    let cert = match certify(h, class, dist, channel, design.m_h, plan.m_cert, rng) {
        Ok(c) => c,
        Err(Error::InsufficientSifted { obtained, .. }) => {
            return shortfall(obtained, h, plan.m_train)
        }
        Err(e) => return Err(e),
    };
    let true_risk = population_risk(h, class, dist)?;
    Ok(RunRecord {
        halted: cert.halted,
        trials_used_train: plan.m_train,
        trials_used_cert: cert.trials,
        returned_hypothesis: h,
        true_risk,
        success: cert.halted && true_risk <= design.target.epsilon_star,
        sift_shortfall: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn desk_instance_shape() {
        let class = HypothesisClass::desk_instance(0).unwrap();
        assert_eq!(class.len(), 16);
        assert_eq!(class.domain_size(), 16);
        // All sixteen tables are distinct.
        for i in 0..16 {
            for j in i + 1..16 {
                assert_ne!(class.hypotheses[i], class.hypotheses[j]);
            }
        }
        assert!(HypothesisClass::desk_instance(16).is_err());
    }

    #[test]
    fn class_validation() {
        assert!(HypothesisClass::new(2, vec![], 0).is_err());
        assert!(HypothesisClass::new(2, vec![vec![true; 3]], 0).is_err());
        assert!(HypothesisClass::new(17, vec![vec![true; 4]], 0).is_err());
        assert!(HypothesisClass::new(2, vec![vec![true; 4]], 1).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(InputDistribution::new(vec![0.5, 0.4]).is_err());
        assert!(InputDistribution::new(vec![1.5, -0.5]).is_err());
        assert!(InputDistribution::new(vec![0.25; 4]).is_ok());
    }

    #[test]
    fn risk_by_counting() {
        let class = HypothesisClass::desk_instance(0).unwrap();
        let dist = InputDistribution::uniform(4).unwrap();
        assert_eq!(population_risk(0, &class, &dist).unwrap(), 0.0);
        // index 4 is the negation of x_0
        assert_eq!(population_risk(4, &class, &dist).unwrap(), 1.0);
        for h in [1, 2, 3, 5, 8, 14, 15] {
            assert_eq!(population_risk(h, &class, &dist).unwrap(), 0.5);
        }
        assert!(population_risk(99, &class, &dist).is_err());

        let concept: Vec<bool> = (0..16).map(|x| x % 3 == 0).collect();
        for k in 0..=16 {
            let mut h = concept.clone();
            for v in h.iter_mut().take(k) {
                *v = !*v;
            }
            let class = HypothesisClass::new(4, vec![concept.clone(), h], 0).unwrap();
            assert_eq!(population_risk(1, &class, &dist).unwrap(), k as f64 / 16.0);
        }
    }

    #[test]
    fn erm_without_samples_picks_first() {
        let class = HypothesisClass::desk_instance(7).unwrap();
        let dist = InputDistribution::uniform(4).unwrap();
        let ch = ChannelSpec::rcn(0.2).unwrap();
        assert_eq!(
            erm_train(&class, &dist, &ch, 0, &mut stream_rng(1, 0)).unwrap(),
            0
        );
    }

    #[test]
    fn erm_recovers_concept_through_noise() {
        let class = HypothesisClass::desk_instance(9).unwrap();
        let dist = InputDistribution::uniform(4).unwrap();
        let ch = ChannelSpec::rcn(0.11).unwrap();
        let h = erm_train(&class, &dist, &ch, 2000, &mut stream_rng(2, 0)).unwrap();
        assert_eq!(h, 9);
        let ch = ChannelSpec::bb84(0.02, 0.0).unwrap();
        let h = erm_train(&class, &dist, &ch, 2000, &mut stream_rng(3, 0)).unwrap();
        assert_eq!(h, 9);
    }

    #[test]
    fn perfect_certification_halts_at_run_length() {
        let class = HypothesisClass::desk_instance(0).unwrap();
        let dist = InputDistribution::uniform(4).unwrap();
        let ch = ChannelSpec::rcn(0.0).unwrap();
        let out = certify(0, &class, &dist, &ch, 15, 1000, &mut stream_rng(4, 0)).unwrap();
        assert_eq!(
            out,
            CertificationOutcome {
                halted: true,
                trials: 15
            }
        );
        let out = certify(0, &class, &dist, &ch, 15, 0, &mut stream_rng(4, 0)).unwrap();
        assert_eq!(
            out,
            CertificationOutcome {
                halted: false,
                trials: 0
            }
        );
    }

    #[test]
    fn zero_budget_run_fails() {
        let class = HypothesisClass::desk_instance(0).unwrap();
        let dist = InputDistribution::uniform(4).unwrap();
        let ch = ChannelSpec::rcn(0.0).unwrap();
        let target = crate::bounds::LearningTarget::new(0.1, 0.05).unwrap();
        let design = HaltingDesign::new(target, 5, 0.0).unwrap();
        let plan = BudgetPlan {
            alpha: 0.5,
            m_train: 0,
            n_cert_blocks: 0,
            m_cert: 0,
            m_total: 0,
            kappa: 1.0,
            m_raw: 0,
            q0: 0.9,
            s0: 1.0,
            coef_a: 1.0,
            coef_b: 1.0,
        };
        let rec = run_protocol(&class, &dist, &ch, &plan, &design, &mut stream_rng(5, 0)).unwrap();
        assert!(!rec.success);
        assert!(!rec.halted);
    }

    #[test]
    fn provisioning() {
        let bb = ChannelSpec::bb84(0.0, 0.0).unwrap();
        assert_eq!(raw_provision(&bb, 100).unwrap(), 210);
        assert_eq!(
            raw_provision(&ChannelSpec::rcn(0.1).unwrap(), 100).unwrap(),
            100
        );
    }
}
