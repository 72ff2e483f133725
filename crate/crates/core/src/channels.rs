//! Simulated label data paths.
//!
//! * RCN: each label bit is XOR-flipped independently with probability `eta`.
//! * BB84: each label is encoded on one of the four BB84 states. An
//!   eavesdropper intercepts a fraction of the qubits, measures each in a
//!   random basis and resends what it saw; the channel then flips the carried
//!   bit with probability `intrinsic_flip`; the receiver measures in a random
//!   basis. Only uses whose sender and receiver bases agree are kept.
//!
//! Qubits are tracked as (basis, bit) pairs. Measuring in the preparation
//! basis returns the bit; measuring in the other basis returns a uniform bit.
//! That is the full projective-measurement table for these four states.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::budget::SYMMETRIC_SIFT_EFFICIENCY;
use crate::error::{check_half_open, check_probability, check_range, Error, Result};
use crate::rng::stream_rng;

/// Default share of sifted bits disclosed for QBER estimation.
pub const DEFAULT_HOLDOUT_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelSpec {
    Rcn {
        eta: f64,
    },
    Bb84 {
        intrinsic_flip: f64,
        eavesdrop_fraction: f64,
    },
}

impl ChannelSpec {
    pub fn rcn(eta: f64) -> Result<Self> {
        check_half_open("eta", eta)?;
        Ok(ChannelSpec::Rcn { eta })
    }

    pub fn bb84(intrinsic_flip: f64, eavesdrop_fraction: f64) -> Result<Self> {
        check_probability("intrinsic_flip", intrinsic_flip)?;
        check_probability("eavesdrop_fraction", eavesdrop_fraction)?;
        Ok(ChannelSpec::Bb84 {
            intrinsic_flip,
            eavesdrop_fraction,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ChannelSpec::Rcn { eta } => ChannelSpec::rcn(eta).map(|_| ()),
            ChannelSpec::Bb84 {
                intrinsic_flip,
                eavesdrop_fraction,
            } => ChannelSpec::bb84(intrinsic_flip, eavesdrop_fraction).map(|_| ()),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ChannelSpec::Rcn { .. } => "rcn",
            ChannelSpec::Bb84 { .. } => "bb84",
        }
    }

    /// Expected fraction of raw uses that yield a usable label.
    pub fn sift_efficiency(&self) -> f64 {
        match self {
            ChannelSpec::Rcn { .. } => 1.0,
            ChannelSpec::Bb84 { .. } => SYMMETRIC_SIFT_EFFICIENCY,
        }
    }

    /// Label error rate seen after sifting. For BB84 with intercept-resend:
    /// `p + f (1 - 2p) / 4`.
    pub fn expected_error_rate(&self) -> f64 {
        match *self {
            ChannelSpec::Rcn { eta } => eta,
            ChannelSpec::Bb84 {
                intrinsic_flip: p,
                eavesdrop_fraction: f,
            } => p + f * (1.0 - 2.0 * p) / 4.0,
        }
    }

    /// Send one label bit. `None` means the use was discarded by sifting.
    pub fn transmit<R: Rng + ?Sized>(&self, bit: bool, rng: &mut R) -> Option<bool> {
        match *self {
            ChannelSpec::Rcn { eta } => Some(bit ^ rng.random_bool(eta)),
            ChannelSpec::Bb84 {
                intrinsic_flip,
                eavesdrop_fraction,
            } => transmit_qubit(bit, intrinsic_flip, eavesdrop_fraction, rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Basis {
    Z,
    X,
}

impl Basis {
    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random_bool(0.5) {
            Basis::X
        } else {
            Basis::Z
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Qubit {
    basis: Basis,
    bit: bool,
}

impl Qubit {
    fn measure<R: Rng + ?Sized>(self, basis: Basis, rng: &mut R) -> bool {
        if basis == self.basis {
            self.bit
        } else {
            rng.random_bool(0.5)
        }
    }
}

fn transmit_qubit<R: Rng + ?Sized>(
    bit: bool,
    flip: f64,
    intercept: f64,
    rng: &mut R,
) -> Option<bool> {
    let sender = Basis::random(rng);
    let mut qubit = Qubit { basis: sender, bit };
    if rng.random_bool(intercept) {
        let eve = Basis::random(rng);
        let seen = qubit.measure(eve, rng);
        qubit = Qubit {
            basis: eve,
            bit: seen,
        };
    }
    if rng.random_bool(flip) {
        qubit.bit = !qubit.bit;
    }
    let receiver = Basis::random(rng);
    let outcome = qubit.measure(receiver, rng);
    (receiver == sender).then_some(outcome)
}

/// Flip each bit independently with probability `eta`.
pub fn rcn_corrupt_with<R: Rng + ?Sized>(
    clean: &[bool],
    eta: f64,
    rng: &mut R,
) -> Result<Vec<bool>> {
    check_half_open("eta", eta)?;
    Ok(clean.iter().map(|&b| b ^ rng.random_bool(eta)).collect())
}

/// [`rcn_corrupt_with`] on a fresh stream keyed by `seed`.
pub fn rcn_corrupt(clean: &[bool], eta: f64, seed: u64) -> Result<Vec<bool>> {
    rcn_corrupt_with(clean, eta, &mut stream_rng(seed, 0))
}

/// Labels that survived basis sifting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiftedBatch {
    pub labels_sent: Vec<bool>,
    pub labels_received: Vec<bool>,
    /// Raw-use index of each sifted label.
    pub kept: Vec<usize>,
    pub raw_uses: u64,
    pub sift_fraction: f64,
    pub qber_estimate: f64,
}

impl SiftedBatch {
    pub fn len(&self) -> usize {
        self.labels_sent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels_sent.is_empty()
    }

    pub fn mismatches(&self) -> usize {
        self.labels_sent
            .iter()
            .zip(&self.labels_received)
            .filter(|(a, b)| a != b)
            .count()
    }
}

pub fn bb84_transmit_with<R: Rng + ?Sized>(
    clean: &[bool],
    spec: &ChannelSpec,
    rng: &mut R,
) -> Result<SiftedBatch> {
    if !matches!(spec, ChannelSpec::Bb84 { .. }) {
        return Err(Error::ChannelMismatch {
            expected: "bb84",
            found: spec.kind_name(),
        });
    }
    spec.validate()?;
    let mut labels_sent = Vec::with_capacity(clean.len() / 2 + 1);
    let mut labels_received = Vec::with_capacity(clean.len() / 2 + 1);
    let mut kept = Vec::with_capacity(clean.len() / 2 + 1);
    for (i, &bit) in clean.iter().enumerate() {
        if let Some(received) = spec.transmit(bit, rng) {
            labels_sent.push(bit);
            labels_received.push(received);
            kept.push(i);
        }
    }
    let raw_uses = clean.len() as u64;
    let mut batch = SiftedBatch {
        labels_sent,
        labels_received,
        kept,
        raw_uses,
        sift_fraction: 0.0,
        qber_estimate: 0.0,
    };
    if raw_uses > 0 {
        batch.sift_fraction = batch.len() as f64 / raw_uses as f64;
    }
    if !batch.is_empty() {
        batch.qber_estimate = batch.mismatches() as f64 / batch.len() as f64;
    }
    Ok(batch)
}

/// [`bb84_transmit_with`] on a fresh stream keyed by `seed`.
pub fn bb84_transmit(clean: &[bool], spec: &ChannelSpec, seed: u64) -> Result<SiftedBatch> {
    bb84_transmit_with(clean, spec, &mut stream_rng(seed, 0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QberEstimate {
    pub qber: f64,
    pub holdout_size: usize,
    /// Batch positions not disclosed, in increasing order; free for learning.
    pub released: Vec<usize>,
}

/// Disclose a random `holdout_fraction` of the sifted bits and report their
/// mismatch rate.
pub fn estimate_qber_with<R: Rng + ?Sized>(
    batch: &SiftedBatch,
    holdout_fraction: f64,
    rng: &mut R,
) -> Result<QberEstimate> {
    check_range(
        "holdout_fraction",
        holdout_fraction,
        holdout_fraction > 0.0 && holdout_fraction <= 1.0,
        "(0, 1]",
    )?;
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n = batch.len();
    let holdout_size = ((holdout_fraction * n as f64).round() as usize).clamp(1, n);
    let mut disclosed = vec![false; n];
    for i in sample(rng, n, holdout_size) {
        disclosed[i] = true;
    }
    let mut errors = 0usize;
    let mut released = Vec::with_capacity(n - holdout_size);
    for (i, &shown) in disclosed.iter().enumerate() {
        if shown {
            errors += (batch.labels_sent[i] != batch.labels_received[i]) as usize;
        } else {
            released.push(i);
        }
    }
    Ok(QberEstimate {
        qber: errors as f64 / holdout_size as f64,
        holdout_size,
        released,
    })
}

pub fn estimate_qber(
    batch: &SiftedBatch,
    holdout_fraction: f64,
    seed: u64,
) -> Result<QberEstimate> {
    estimate_qber_with(batch, holdout_fraction, &mut stream_rng(seed, 0))
}

/// Operational noise rate of a channel: send `uses` random bits and compare
/// a disclosed holdout. For BB84 this is the measured QBER on sifted bits.
pub fn measure_error_rate<R: Rng + ?Sized>(
    spec: &ChannelSpec,
    uses: u64,
    holdout_fraction: f64,
    rng: &mut R,
) -> Result<QberEstimate> {
    spec.validate()?;
    let clean: Vec<bool> = (0..uses).map(|_| rng.random_bool(0.5)).collect();
    let batch = match spec {
        ChannelSpec::Bb84 { .. } => bb84_transmit_with(&clean, spec, rng)?,
        ChannelSpec::Rcn { eta } => {
            let received = rcn_corrupt_with(&clean, *eta, rng)?;
            SiftedBatch {
                kept: (0..clean.len()).collect(),
                raw_uses: uses,
                sift_fraction: 1.0,
                qber_estimate: 0.0,
                labels_sent: clean,
                labels_received: received,
            }
        }
    };
    estimate_qber_with(&batch, holdout_fraction, rng)
}
