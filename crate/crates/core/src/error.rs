use thiserror::Error;

/// Errors raised by the planning, simulation and decision routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("certification is impossible: {0}")]
    Degenerate(String),

    #[error(
        "infeasible design: q0^M_H = {block_p:.6} exceeds delta* = {delta_star} (margin {margin:.6})"
    )]
    Infeasible {
        block_p: f64,
        delta_star: f64,
        margin: f64,
    },

    #[error("expected a {expected} channel, got {found}")]
    ChannelMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("insufficient sifted samples: needed {needed}, obtained {obtained} from {raw_uses} raw uses")]
    InsufficientSifted {
        needed: u64,
        obtained: u64,
        raw_uses: u64,
    },

    #[error("{what} index {index} out of range (len {len})")]
    Index {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("sifted batch is empty")]
    EmptyBatch,

    #[error("streak tracker already halted after {trials} trials")]
    TrackerHalted { trials: u64 },

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<f64> {
    if ok && !value.is_nan() {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            expected,
        })
    }
}

/// `value` in the closed unit interval.
pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    check_range(name, value, (0.0..=1.0).contains(&value), "[0, 1]")
}

/// `value` in [0, 1/2).
pub(crate) fn check_half_open(name: &'static str, value: f64) -> Result<f64> {
    check_range(name, value, (0.0..0.5).contains(&value), "[0, 1/2)")
}
