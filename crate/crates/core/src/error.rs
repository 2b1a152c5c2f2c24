use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("argument outside function domain: {0}")]
    Domain(String),

    #[error("overflow evaluating y_{order}({x})")]
    Overflow { order: usize, x: f64 },

    #[error("non-finite partial-wave result at mode {mode}, {freq_hz} Hz: {detail}")]
    Numerical {
        mode: usize,
        freq_hz: f64,
        detail: String,
    },

    #[error("no echo above threshold inside the {gate_start_s:.4}-{gate_end_s:.4} s gate")]
    NoDetection { gate_start_s: f64, gate_end_s: f64 },

    #[error(
        "pulse spectrum is more than 40 dB below peak on {fraction:.1}% of the {low_hz}-{high_hz} Hz band"
    )]
    IllConditionedBand {
        low_hz: f64,
        high_hz: f64,
        fraction: f64,
    },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
