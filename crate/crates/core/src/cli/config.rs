//! JSON run configuration and its validated form.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{ClassCapacity, HaltingDesign, LearningTarget, PrlBaseline};
use crate::budget::{BudgetInputs, Surrogate, SYMMETRIC_SIFT_EFFICIENCY};
use crate::channels::{ChannelSpec, DEFAULT_HOLDOUT_FRACTION};
use crate::error::Error;
use crate::holevo::{eta_c, ThresholdVariant};

use super::CliError;

pub const DEFAULT_SEED: u64 = 20_240_611;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub epsilon_star: f64,
    pub delta_star: f64,
    pub m_h: u64,
    /// Critical noise rate; the threshold root of `threshold_variant` when
    /// absent.
    pub eta_c: Option<f64>,
    pub threshold_variant: ThresholdVariant,
    pub h_size: u64,
    pub channel: ChannelSpec,
    pub surrogate: Surrogate,
    pub kappa: f64,
    pub alpha: f64,
    /// PRL rate; `gamma(epsilon*, eta_c)` when absent.
    pub xi: Option<f64>,
    pub replicas: u64,
    pub conf: f64,
    pub seed: u64,
    pub concept_index: usize,
    pub holdout_fraction: f64,
    pub measurement_uses: u64,
    pub output_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            epsilon_star: 0.1,
            delta_star: 0.05,
            m_h: 15,
            eta_c: None,
            threshold_variant: ThresholdVariant::Standard,
            h_size: 16,
            channel: ChannelSpec::Rcn { eta: 0.11 },
            surrogate: Surrogate::FiniteClass,
            kappa: SYMMETRIC_SIFT_EFFICIENCY,
            alpha: 0.5,
            xi: None,
            replicas: 2000,
            conf: 0.95,
            seed: DEFAULT_SEED,
            concept_index: 0,
            holdout_fraction: DEFAULT_HOLDOUT_FRACTION,
            measurement_uses: 100_000,
            output_path: None,
        }
    }
}

/// A configuration whose every field passed its component checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub config: RunConfig,
    pub target: LearningTarget,
    pub design: HaltingDesign,
    pub capacity: ClassCapacity,
    pub inputs: BudgetInputs,
    pub baseline: PrlBaseline,
}

fn field(name: &str) -> impl Fn(Error) -> CliError + '_ {
    move |e| {
        let message = match e {
            Error::Domain {
                value, expected, ..
            } => format!("{value} is outside {expected}"),
            other => other.to_string(),
        };
        CliError::Core(Error::Config {
            field: name.to_string(),
            message,
        })
    }
}

fn invalid(name: &str, message: impl Into<String>) -> CliError {
    CliError::Core(Error::Config {
        field: name.to_string(),
        message: message.into(),
    })
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| CliError::ConfigParse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn resolved_eta_c(&self) -> f64 {
        self.eta_c.unwrap_or_else(|| eta_c(self.threshold_variant))
    }

    pub fn validate(self) -> Result<Setup, CliError> {
        LearningTarget::new(self.epsilon_star, 0.5).map_err(field("epsilon_star"))?;
        let target =
            LearningTarget::new(self.epsilon_star, self.delta_star).map_err(field("delta_star"))?;
        let eta_c = self.resolved_eta_c();
        let design = HaltingDesign::new(target, self.m_h, eta_c).map_err(|e| match e {
            Error::Domain { name: "m_h", .. } => field("m_h")(e),
            other => field("eta_c")(other),
        })?;
        let capacity = ClassCapacity::new(self.h_size).map_err(field("h_size"))?;
        self.channel.validate().map_err(field("channel"))?;
        let inputs = BudgetInputs::new(design, capacity, self.surrogate, self.kappa)
            .map_err(field("kappa"))?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid(
                "alpha",
                format!("{} is outside (0, 1)", self.alpha),
            ));
        }
        let baseline = match self.xi {
            Some(xi) => PrlBaseline::new(xi).map_err(field("xi"))?,
            None => PrlBaseline::calibrated(target.epsilon_star, eta_c).map_err(field("xi"))?,
        };
        if self.replicas == 0 {
            return Err(invalid("replicas", "must be at least 1"));
        }
        if !(self.conf > 0.0 && self.conf < 1.0) {
            return Err(invalid("conf", format!("{} is outside (0, 1)", self.conf)));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction <= 1.0) {
            return Err(invalid(
                "holdout_fraction",
                format!("{} is outside (0, 1]", self.holdout_fraction),
            ));
        }
        if self.measurement_uses == 0 {
            return Err(invalid("measurement_uses", "must be at least 1"));
        }
        Ok(Setup {
            config: self,
            target,
            design,
            capacity,
            inputs,
            baseline,
        })
    }
}
