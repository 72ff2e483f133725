use secure_pac::bounds::{q_obs, HaltingDesign, LearningTarget};
use secure_pac::channels::ChannelSpec;
use secure_pac::halting::halting_prob_exact;
use secure_pac::learner::{certify, HypothesisClass, InputDistribution};
use secure_pac::stats::{estimate_pl, replicate, Scenario};
use secure_pac::BudgetPlan;

fn plan(m_train: u64, m_cert: u64) -> BudgetPlan {
    BudgetPlan {
        alpha: 0.5,
        m_train,
        n_cert_blocks: 0,
        m_cert,
        m_total: m_train + m_cert,
        kappa: 1.0,
        m_raw: m_train + m_cert,
        q0: 0.8,
        s0: 0.1,
        coef_a: 1.0,
        coef_b: 1.0,
    }
}

fn sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn learning_probability_grows_with_budget() {
    let design = HaltingDesign::new(LearningTarget::new(0.1, 0.05).unwrap(), 8, 0.2).unwrap();
    let scenario = |m: u64| Scenario {
        class: HypothesisClass::desk_instance(5).unwrap(),
        dist: InputDistribution::uniform(4).unwrap(),
        channel: ChannelSpec::rcn(0.2).unwrap(),
        plan: plan(m, m),
        design,
    };
    let n = 3000;
    let mut prev: Option<f64> = None;
    for m in [10u64, 20, 40, 80] {
        let s = estimate_pl(&scenario(m), n, 0.95, 31).unwrap();
        if let Some(p) = prev {
            assert!(
                s.point_estimate >= p - 3.0 * sigma(p.max(0.01), n),
                "m={m}: {} < {p}",
                s.point_estimate
            );
        }
        prev = Some(s.point_estimate);
    }
    assert!(prev.unwrap() > 0.9);
}

#[test]
fn bb84_certification_matches_dp() {
    // Flawed hypothesis with risk 1/4 on a two-bit domain.
    let concept = vec![true, false, false, true];
    let flawed = vec![false, false, false, true];
    let class = HypothesisClass::new(2, vec![flawed, concept], 1).unwrap();
    let dist = InputDistribution::uniform(2).unwrap();
    let (p, f) = (0.02, 0.4);
    let channel = ChannelSpec::bb84(p, f).unwrap();
    let noise = channel.expected_error_rate();
    let q = q_obs(0.25, noise).unwrap();
    let (m_h, m_cert, n) = (4u64, 30u64, 20_000u64);
    // A generous trial budget keeps the raw provision far from binding;
    // halting within `m_cert` trials is read off the halting time.
    let halts = replicate(n, 77, |_, rng| {
        let out = certify(0, &class, &dist, &channel, m_h, 1000, rng)?;
        Ok(out.halted && out.trials <= m_cert)
    })
    .unwrap();
    let rate = halts.iter().filter(|&&h| h).count() as f64 / n as f64;
    let exact = halting_prob_exact(q, m_h, m_cert).unwrap();
    assert!(
        (rate - exact).abs() <= 3.0 * sigma(exact, n),
        "{rate} vs {exact}"
    );
}

#[test]
fn seeds_separate_and_repeat() {
    let design = HaltingDesign::new(LearningTarget::new(0.1, 0.05).unwrap(), 6, 0.1).unwrap();
    let scenario = Scenario {
        class: HypothesisClass::desk_instance(2).unwrap(),
        dist: InputDistribution::uniform(4).unwrap(),
        channel: ChannelSpec::bb84(0.05, 0.0).unwrap(),
        plan: plan(15, 12),
        design,
    };
    let a = estimate_pl(&scenario, 500, 0.9, 1).unwrap();
    assert_eq!(a, estimate_pl(&scenario, 500, 0.9, 1).unwrap());
    let b = estimate_pl(&scenario, 500, 0.9, 2).unwrap();
    assert_ne!(a.successes, b.successes);
}
