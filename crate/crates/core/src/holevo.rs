//! Binary-entropy information quantities for a BB84-like qubit data path.
//!
//! The learner's mutual information about a transmitted label over a channel
//! with bit-error rate `eta` is `1 - h(eta)`. An eavesdropper's Holevo
//! information is bounded by a variant-dependent expression, and the gap
//! between the two decides whether the path is admissible. The threshold
//! `eta_c` is the unique zero of the gap on `(0, 1/2)`.
//!
//! All quantities are in bits.

use serde::{Deserialize, Serialize};

use crate::error::{check_half_open, check_probability, Result};

/// Which eavesdropper bound the gap is evaluated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdVariant {
    /// `chi = h(eta)`, so `D(eta) = 1 - 2 h(eta)`. Root near 0.110028, the
    /// usual one-way-reconciliation BB84 threshold.
    #[default]
    Standard,
    /// `chi = h(eta) - h(1/2 + sqrt(eta (1 - eta)))`, giving
    /// `D(eta) = 1 - 2 h(eta) + h(1/2 + sqrt(eta (1 - eta)))`.
    /// `D(0) = 2` and the root sits near 0.204.
    Corrected,
}

impl ThresholdVariant {
    pub const ALL: [ThresholdVariant; 2] =
        [ThresholdVariant::Standard, ThresholdVariant::Corrected];

    pub fn name(self) -> &'static str {
        match self {
            ThresholdVariant::Standard => "standard",
            ThresholdVariant::Corrected => "corrected",
        }
    }
}

/// Information budget of a channel at a given error rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolevoProfile {
    pub eta: f64,
    /// `I(label; learner) = 1 - h(eta)`.
    pub legit_info: f64,
    /// Upper bound on the eavesdropper's Holevo information.
    pub eve_chi: f64,
    /// `legit_info - eve_chi`.
    pub gap: f64,
    pub admissible: bool,
}

/// Shannon entropy of a Bernoulli(`p`) variable in bits, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    check_probability("p", p)?;
    Ok(entropy_unchecked(p))
}

fn entropy_unchecked(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - p;
    (-(p * p.log2()) - q * q.log2()).clamp(0.0, 1.0)
}

fn eve_chi(eta: f64, variant: ThresholdVariant) -> f64 {
    let h = entropy_unchecked(eta);
    match variant {
        ThresholdVariant::Standard => h,
        ThresholdVariant::Corrected => {
            let g = 0.5 + (eta * (1.0 - eta)).sqrt();
            h - entropy_unchecked(g.min(1.0))
        }
    }
}

/// Gap proxy `D(eta)` for `eta` in `[0, 1/2]`. The endpoint 1/2 is accepted
/// so that the bracket for root finding is closed.
fn gap_unchecked(eta: f64, variant: ThresholdVariant) -> f64 {
    1.0 - entropy_unchecked(eta) - eve_chi(eta, variant)
}

/// Gap proxy `D(eta)` for the given variant.
pub fn holevo_gap(eta: f64, variant: ThresholdVariant) -> Result<f64> {
    check_half_open("eta", eta)?;
    Ok(gap_unchecked(eta, variant))
}

pub fn holevo_profile(eta: f64, variant: ThresholdVariant) -> Result<HolevoProfile> {
    check_half_open("eta", eta)?;
    let legit_info = 1.0 - entropy_unchecked(eta);
    let eve_chi = eve_chi(eta, variant);
    Ok(HolevoProfile {
        eta,
        legit_info,
        eve_chi,
        gap: legit_info - eve_chi,
        admissible: eta < eta_c(variant),
    })
}

const ROOT_TOLERANCE: f64 = 1e-9;
const ROOT_MAX_ITERATIONS: usize = 200;

/// Admissibility threshold: the zero of `D` on `(0, 1/2)`.
///
/// Plain bisection. `D(0) > 0 > D(1/2)` for both variants and `D` is
/// strictly decreasing, so the bracket always holds a single root.
pub fn eta_c(variant: ThresholdVariant) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    for _ in 0..ROOT_MAX_ITERATIONS {
        if hi - lo <= ROOT_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if gap_unchecked(mid, variant) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Profiles on the grid `eta = i * step` for `i = 0 .. floor(0.5 / step)`.
pub fn threshold_curve(variant: ThresholdVariant, step: f64) -> Result<Vec<HolevoProfile>> {
    crate::error::check_range("grid_step", step, step > 0.0 && step < 0.1, "(0, 0.1)")?;
    let rows = grid_rows(step);
    let threshold = eta_c(variant);
    Ok((0..rows)
        .map(|i| {
            let eta = i as f64 * step;
            let legit_info = 1.0 - entropy_unchecked(eta);
            let chi = eve_chi(eta, variant);
            HolevoProfile {
                eta,
                legit_info,
                eve_chi: chi,
                gap: legit_info - chi,
                admissible: eta < threshold,
            }
        })
        .collect())
}

/// `floor(0.5 / step)`, robust to representation error in `step`.
pub(crate) fn grid_rows(step: f64) -> usize {
    let ratio = 0.5 / step;
    let nearest = ratio.round();
    if (ratio - nearest).abs() < 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        ratio.floor() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values below were produced with 40-digit mpmath evaluation of
    // the defining formulas.

    #[test]
    fn entropy_fixed_points() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.11).unwrap() - 0.499_915_958_164_528).abs() < 1e-12);
    }

    #[test]
    fn entropy_rejects_out_of_range() {
        assert!(binary_entropy(-0.01).is_err());
        assert!(binary_entropy(1.01).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn noiseless_profile() {
        let p = holevo_profile(0.0, ThresholdVariant::Standard).unwrap();
        assert_eq!(p.gap, 1.0);
        assert_eq!(p.legit_info, 1.0);
        assert!(p.admissible);
    }

    #[test]
    fn standard_gap_near_threshold() {
        let p = holevo_profile(0.11, ThresholdVariant::Standard).unwrap();
        assert!((p.gap - 1.680_836_709_44e-4).abs() < 1e-12);
        // 0.11 sits just below the root.
        assert!(p.admissible);
    }

    #[test]
    fn corrected_gap_at_quarter() {
        let p = holevo_profile(0.25, ThresholdVariant::Corrected).unwrap();
        assert!((p.gap - (-0.267_977_346_252_996)).abs() < 1e-10);
        assert!(!p.admissible);
    }

    #[test]
    fn corrected_gap_at_zero_is_two() {
        assert_eq!(holevo_gap(0.0, ThresholdVariant::Corrected).unwrap(), 2.0);
    }

    #[test]
    fn profile_rejects_half() {
        assert!(holevo_profile(0.5, ThresholdVariant::Standard).is_err());
    }

    #[test]
    fn thresholds() {
        let std = eta_c(ThresholdVariant::Standard);
        assert!((std - 0.110_027_864_438_36).abs() < 1e-9);
        let cor = eta_c(ThresholdVariant::Corrected);
        assert!((cor - 0.203_968_253_220_86).abs() < 1e-9);
        for v in ThresholdVariant::ALL {
            let r = eta_c(v);
            assert!(r > 0.0 && r < 0.5);
        }
    }

    #[test]
    fn corrected_gap_brackets() {
        assert!(
            (holevo_gap(0.20, ThresholdVariant::Corrected).unwrap() - 0.025_139_403_8).abs() < 1e-9
        );
        assert!(
            (holevo_gap(0.21, ThresholdVariant::Corrected).unwrap() + 0.037_574_161_0).abs() < 1e-9
        );
    }

    #[test]
    fn curve_row_count() {
        for step in [0.01, 0.001, 0.03, 0.05, 0.0999] {
            let curve = threshold_curve(ThresholdVariant::Standard, step).unwrap();
            assert_eq!(
                curve.len(),
                (0.5_f64 / step + 1e-9).floor() as usize,
                "step {step}"
            );
            assert!(curve.last().unwrap().eta < 0.5);
        }
        assert!(threshold_curve(ThresholdVariant::Standard, 0.1).is_err());
        assert!(threshold_curve(ThresholdVariant::Standard, 0.0).is_err());
    }

    #[test]
    fn gap_strictly_decreasing_on_grid() {
        for v in ThresholdVariant::ALL {
            let mut prev = f64::INFINITY;
            for i in 1..=499 {
                let d = holevo_gap(i as f64 / 1000.0, v).unwrap();
                assert!(d < prev, "{v:?} at {i}");
                prev = d;
            }
        }
    }

    #[test]
    fn gap_sign_matches_threshold() {
        for v in ThresholdVariant::ALL {
            let root = eta_c(v);
            for i in 1..=499 {
                let eta = i as f64 / 1000.0;
                if (eta - root).abs() < 1e-6 {
                    continue;
                }
                let p = holevo_profile(eta, v).unwrap();
                assert_eq!(p.gap > 0.0, p.admissible, "{v:?} at {eta}");
                assert_eq!(p.gap > 0.0, root > eta);
            }
        }
    }
}
