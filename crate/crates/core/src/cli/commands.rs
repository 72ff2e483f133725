use std::path::Path;

use serde::Serialize;

use crate::bounds::min_memory;
use crate::budget::{
    alpha_star, budget_at, budget_opt, feasibility, sweep_alpha, two_phase_lower_bound, BudgetPlan,
    Feasibility, Surrogate,
};
use crate::channels::{measure_error_rate, ChannelSpec};
use crate::error::Error;
use crate::halting::{halting_prob_block, halting_prob_exact, halting_trace, run_length_mean};
use crate::holevo::{eta_c, threshold_curve, HolevoProfile, ThresholdVariant};
use crate::learner::{HypothesisClass, InputDistribution};
use crate::rng::{stream_rng, MEASUREMENT_STREAM};
use crate::stats::{decide, run_replicas, DecisionReport, MonteCarloSummary, PlEvidence, Scenario};

use super::config::{RunConfig, Setup};
use super::output::{csv_table, emit, to_field_csv, to_json};
use super::{Cli, CliError, Command, DesignArgs, Format, EXIT_OK, EXIT_REJECTED};

fn design_args(command: &Command) -> Option<&DesignArgs> {
    match command {
        Command::Threshold { .. } => None,
        Command::Plan { design, .. }
        | Command::Halting { design, .. }
        | Command::Qber { design, .. }
        | Command::Simulate { design }
        | Command::Decide { design, .. } => Some(design),
    }
}

/// Defaults, then the config file, then flags.
fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(replicas) = cli.replicas {
        config.replicas = replicas;
    }
    if let Some(output) = &cli.output {
        config.output_path = Some(output.clone());
    }
    if let Some(d) = design_args(&cli.command) {
        apply_design_args(&mut config, d);
    }
    Ok(config)
}

fn apply_design_args(config: &mut RunConfig, d: &DesignArgs) {
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut config.epsilon_star, d.epsilon_star);
    set(&mut config.delta_star, d.delta_star);
    set(&mut config.kappa, d.kappa);
    set(&mut config.alpha, d.alpha);
    if let Some(m_h) = d.m_h {
        config.m_h = m_h;
    }
    if let Some(v) = d.variant {
        config.threshold_variant = v;
    }
    if d.eta_c.is_some() {
        config.eta_c = d.eta_c;
    }
    if let Some(h) = d.h_size {
        config.h_size = h;
    }
    if d.xi.is_some() {
        config.xi = d.xi;
    }
    if let Some(eta) = d.eta {
        config.channel = ChannelSpec::Rcn { eta };
    }
    if d.intrinsic_flip.is_some() || d.eavesdrop_fraction.is_some() {
        let (p0, f0) = match config.channel {
            ChannelSpec::Bb84 {
                intrinsic_flip,
                eavesdrop_fraction,
            } => (intrinsic_flip, eavesdrop_fraction),
            ChannelSpec::Rcn { .. } => (0.0, 0.0),
        };
        config.channel = ChannelSpec::Bb84 {
            intrinsic_flip: d.intrinsic_flip.unwrap_or(p0),
            eavesdrop_fraction: d.eavesdrop_fraction.unwrap_or(f0),
        };
    }
}

pub(super) fn run(cli: &Cli) -> Result<i32, CliError> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Threshold { variant, grid_step } => cmd_threshold(
            cli,
            variant.unwrap_or(config.threshold_variant),
            *grid_step,
            &config,
        ),
        Command::Plan { sweep_alpha, .. } => cmd_plan(cli, config.validate()?, *sweep_alpha),
        Command::Halting {
            q, m_cert, trace, ..
        } => cmd_halting(cli, config.validate()?, *q, *m_cert, *trace),
        Command::Qber {
            uses,
            holdout_fraction,
            ..
        } => {
            let mut config = config;
            if let Some(u) = uses {
                config.measurement_uses = *u;
            }
            if let Some(h) = holdout_fraction {
                config.holdout_fraction = *h;
            }
            cmd_qber(cli, config.validate()?)
        }
        Command::Simulate { .. } => cmd_simulate(cli, config.validate()?),
        Command::Decide {
            measured_eta,
            successes,
            p_l,
            ..
        } => cmd_decide(cli, config.validate()?, *measured_eta, *successes, *p_l),
    }
}

/// Minimal run length for the configured target, for infeasibility messages.
pub(super) fn infeasibility_hint(cli: &Cli) -> Option<String> {
    let config = load_config(cli).ok()?;
    let eta = config.resolved_eta_c();
    let target = crate::bounds::LearningTarget::new(config.epsilon_star, config.delta_star).ok()?;
    let min = min_memory(target, eta).ok()?;
    Some(format!(
        "m_h = {} is below the minimal run length {min} for epsilon* = {}, delta* = {}, eta_c = {eta:.10}",
        config.m_h, config.epsilon_star, config.delta_star
    ))
}

fn output_path(setup_config: &RunConfig) -> Option<&Path> {
    setup_config.output_path.as_deref()
}

fn render<T: Serialize>(value: &T, format: Format) -> String {
    match format {
        Format::Json => to_json(value),
        Format::Csv => to_field_csv(value),
    }
}

#[derive(Serialize)]
struct ThresholdReport<'a> {
    variant: ThresholdVariant,
    eta_c: f64,
    grid_step: f64,
    curve: &'a [HolevoProfile],
}

fn cmd_threshold(
    cli: &Cli,
    variant: ThresholdVariant,
    grid_step: f64,
    config: &RunConfig,
) -> Result<i32, CliError> {
    let curve = threshold_curve(variant, grid_step)?;
    let root = eta_c(variant);
    let text = match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_table(
            &["eta", "legit_info", "eve_chi", "gap", "admissible"],
            curve.iter().map(|p| {
                vec![
                    p.eta.to_string(),
                    p.legit_info.to_string(),
                    p.eve_chi.to_string(),
                    p.gap.to_string(),
                    p.admissible.to_string(),
                ]
            }),
        ),
        Format::Json => to_json(&ThresholdReport {
            variant,
            eta_c: root,
            grid_step,
            curve: &curve,
        }),
    };
    let path = output_path(config);
    emit(&text, path)?;
    let line = format!("eta_c ({}) = {root:.10}", variant.name());
    if path.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct DesignEcho {
    epsilon_star: f64,
    delta_star: f64,
    m_h: u64,
    eta_c: f64,
    threshold_variant: ThresholdVariant,
    h_size: u64,
    surrogate: Surrogate,
    kappa: f64,
}

impl DesignEcho {
    fn of(setup: &Setup) -> Self {
        Self {
            epsilon_star: setup.target.epsilon_star,
            delta_star: setup.target.delta_star,
            m_h: setup.design.m_h,
            eta_c: setup.design.eta_c,
            threshold_variant: setup.config.threshold_variant,
            h_size: setup.capacity.h_size,
            surrogate: setup.inputs.surrogate,
            kappa: setup.inputs.kappa,
        }
    }
}

#[derive(Serialize)]
struct PlanReport {
    design: DesignEcho,
    m_h_min: Option<u64>,
    feasibility: Feasibility,
    alpha_star: f64,
    continuous_optimum: f64,
    plan: BudgetPlan,
    optimized: BudgetPlan,
}

fn cmd_plan(cli: &Cli, setup: Setup, sweep: Option<usize>) -> Result<i32, CliError> {
    let inputs = &setup.inputs;
    let path = output_path(&setup.config);
    if let Some(points) = sweep {
        if points == 0 {
            return Err(CliError::Usage(
                "--sweep-alpha needs at least one point".into(),
            ));
        }
        let plans = sweep_alpha(inputs, points)?;
        let text = match cli.format.unwrap_or(Format::Csv) {
            Format::Json => to_json(&plans),
            Format::Csv => csv_table(
                &[
                    "alpha",
                    "m_train",
                    "n_cert_blocks",
                    "m_cert",
                    "m_total",
                    "m_raw",
                    "continuous_budget",
                ],
                plans.iter().map(|p| {
                    vec![
                        p.alpha.to_string(),
                        p.m_train.to_string(),
                        p.n_cert_blocks.to_string(),
                        p.m_cert.to_string(),
                        p.m_total.to_string(),
                        p.m_raw.to_string(),
                        inputs.continuous_budget(p.alpha).to_string(),
                    ]
                }),
            ),
        };
        emit(&text, path)?;
        return Ok(EXIT_OK);
    }
    let plan = budget_at(inputs, setup.config.alpha)?;
    let opt = budget_opt(inputs)?;
    let report = PlanReport {
        design: DesignEcho::of(&setup),
        m_h_min: min_memory(setup.target, setup.design.eta_c).ok(),
        feasibility: feasibility(inputs),
        alpha_star: alpha_star(inputs)?,
        continuous_optimum: opt.continuous_optimum,
        plan,
        optimized: opt.plan,
    };
    emit(&render(&report, cli.format.unwrap_or(Format::Json)), path)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct HaltingReport {
    q: f64,
    m_h: u64,
    m_cert: u64,
    exact: f64,
    block_bound: f64,
    /// Absent for `q` of 0 or 1.
    mean_trials: Option<f64>,
}

fn cmd_halting(
    cli: &Cli,
    setup: Setup,
    q: Option<f64>,
    m_cert: Option<u64>,
    trace: bool,
) -> Result<i32, CliError> {
    let q = q.unwrap_or_else(|| setup.inputs.q0());
    let m_h = setup.design.m_h;
    let m_cert = match m_cert {
        Some(m) => m,
        None => budget_at(&setup.inputs, setup.config.alpha)?.m_cert,
    };
    let path = output_path(&setup.config);
    if trace {
        let series = halting_trace(q, m_h, m_cert)?;
        let text = match cli.format.unwrap_or(Format::Csv) {
            Format::Csv => csv_table(
                &["t", "halting_prob"],
                series
                    .iter()
                    .map(|(t, p)| vec![t.to_string(), p.to_string()]),
            ),
            Format::Json => to_json(&series),
        };
        emit(&text, path)?;
        return Ok(EXIT_OK);
    }
    let report = HaltingReport {
        q,
        m_h,
        m_cert,
        exact: halting_prob_exact(q, m_h, m_cert)?,
        block_bound: halting_prob_block(q, m_h, m_cert)?,
        mean_trials: run_length_mean(q, m_h).ok(),
    };
    emit(&render(&report, cli.format.unwrap_or(Format::Json)), path)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct QberReport {
    channel: ChannelSpec,
    seed: u64,
    raw_uses: u64,
    sifted: usize,
    sift_fraction: f64,
    holdout_size: usize,
    qber: f64,
    expected_qber: f64,
    eta_c: f64,
    admissible: bool,
}

fn measure(setup: &Setup) -> Result<(f64, usize, usize), CliError> {
    let c = &setup.config;
    let mut rng = stream_rng(c.seed, MEASUREMENT_STREAM);
    let est = measure_error_rate(&c.channel, c.measurement_uses, c.holdout_fraction, &mut rng)?;
    Ok((
        est.qber,
        est.holdout_size,
        est.holdout_size + est.released.len(),
    ))
}

fn cmd_qber(cli: &Cli, setup: Setup) -> Result<i32, CliError> {
    let (qber, holdout_size, sifted) = measure(&setup)?;
    let c = &setup.config;
    let report = QberReport {
        channel: c.channel,
        seed: c.seed,
        raw_uses: c.measurement_uses,
        sifted,
        sift_fraction: sifted as f64 / c.measurement_uses as f64,
        holdout_size,
        qber,
        expected_qber: c.channel.expected_error_rate(),
        eta_c: setup.design.eta_c,
        admissible: qber <= setup.design.eta_c,
    };
    emit(
        &render(&report, cli.format.unwrap_or(Format::Json)),
        output_path(c),
    )?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SimulationReport {
    design: DesignEcho,
    channel: ChannelSpec,
    seed: u64,
    concept_index: usize,
    measured_eta: f64,
    /// Disclosed sifted bits behind `measured_eta`; absent for RCN, whose
    /// rate is known.
    measurement_holdout: Option<usize>,
    plan: BudgetPlan,
    halted_replicas: u64,
    sift_shortfalls: u64,
    report: DecisionReport,
}

fn cmd_simulate(cli: &Cli, setup: Setup) -> Result<i32, CliError> {
    let c = &setup.config;
    let class = HypothesisClass::desk_instance(c.concept_index).map_err(|e| Error::Config {
        field: "concept_index".into(),
        message: e.to_string(),
    })?;
    if setup.capacity.h_size != class.len() as u64 {
        return Err(Error::Config {
            field: "h_size".into(),
            message: format!("the simulated class has {} hypotheses", class.len()),
        }
        .into());
    }
    let plan = budget_at(&setup.inputs, c.alpha)?;
    let (measured_eta, measurement_holdout) = match c.channel {
        ChannelSpec::Rcn { eta } => (eta, None),
        ChannelSpec::Bb84 { .. } => {
            let (qber, holdout, _) = measure(&setup)?;
            (qber, Some(holdout))
        }
    };
    let scenario = Scenario {
        dist: InputDistribution::uniform(class.domain_bits)?,
        class,
        channel: c.channel,
        plan,
        design: setup.design,
    };
    let runs = run_replicas(&scenario, c.replicas, c.seed)?;
    let successes = runs.iter().filter(|r| r.success).count() as u64;
    let summary = MonteCarloSummary::from_counts(successes, c.replicas, c.conf)?;
    let report = decide(
        &setup.design,
        &plan,
        measured_eta,
        PlEvidence::Empirical(summary),
        setup.baseline,
    );
    let code = if report.accepted {
        EXIT_OK
    } else {
        EXIT_REJECTED
    };
    let out = SimulationReport {
        design: DesignEcho::of(&setup),
        channel: c.channel,
        seed: c.seed,
        concept_index: c.concept_index,
        measured_eta,
        measurement_holdout,
        plan,
        halted_replicas: runs.iter().filter(|r| r.halted).count() as u64,
        sift_shortfalls: runs.iter().filter(|r| r.sift_shortfall).count() as u64,
        report,
    };
    emit(
        &render(&out, cli.format.unwrap_or(Format::Json)),
        output_path(c),
    )?;
    Ok(code)
}

#[derive(Serialize)]
struct DecideReport {
    design: DesignEcho,
    plan: BudgetPlan,
    report: DecisionReport,
}

fn cmd_decide(
    cli: &Cli,
    setup: Setup,
    measured_eta: Option<f64>,
    successes: Option<u64>,
    p_l: Option<f64>,
) -> Result<i32, CliError> {
    let c = &setup.config;
    let plan = budget_at(&setup.inputs, c.alpha)?;
    let measured_eta = measured_eta.unwrap_or_else(|| c.channel.expected_error_rate());
    if !(0.0..=1.0).contains(&measured_eta) {
        return Err(CliError::Usage(format!(
            "--measured-eta {measured_eta} is outside [0, 1]"
        )));
    }
    let evidence = match (successes, p_l) {
        (Some(k), _) => {
            PlEvidence::Empirical(MonteCarloSummary::from_counts(k, c.replicas, c.conf)?)
        }
        (None, Some(v)) => {
            if !(0.0..=1.0).contains(&v) {
                return Err(CliError::Usage(format!("--p-l {v} is outside [0, 1]")));
            }
            PlEvidence::Analytic { value: v }
        }
        (None, None) => PlEvidence::Analytic {
            value: two_phase_lower_bound(&setup.inputs, measured_eta, plan.m_train, plan.m_cert)?,
        },
    };
    let report = decide(&setup.design, &plan, measured_eta, evidence, setup.baseline);
    let code = if report.accepted {
        EXIT_OK
    } else {
        EXIT_REJECTED
    };
    let out = DecideReport {
        design: DesignEcho::of(&setup),
        plan,
        report,
    };
    emit(
        &render(&out, cli.format.unwrap_or(Format::Json)),
        output_path(c),
    )?;
    Ok(code)
}
