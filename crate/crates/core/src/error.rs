use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("duplicate timestamp {ts}")]
    DuplicateTimestamp { ts: i64 },
    #[error("timestamps not strictly increasing at bar {index}")]
    UnorderedTimestamps { index: usize },
    #[error("non-positive close at bar {index}")]
    NonPositivePrice { index: usize },
    #[error("tick size must be positive")]
    BadTickSize,
    #[error("slippage must be at least 1 bp")]
    BadSlippage,

    #[error("split boundaries must satisfy b1 < b2")]
    BadBoundaries,
    #[error("split boundary {ts} lies before the first bar")]
    BoundaryOutOfRange { ts: i64 },
    #[error("sample split produced an empty part")]
    EmptyPart,

    #[error("hurst exponent {0} outside (0, 1)")]
    BadHurst(f64),
    #[error("sigma must be positive")]
    BadSigma,
    #[error("mean regime length must be at least 1")]
    BadRegimeLength,
    #[error("start price must be positive")]
    BadStartPrice,

    #[error("window {window} out of range for series of length {len}")]
    WindowOutOfRange { window: usize, len: usize },
    #[error("moving-average pair requires 1 <= t1 < t2 (got {t1}, {t2})")]
    BadPair { t1: usize, t2: usize },
    #[error("delta T {0} outside (0, 1)")]
    DeltaOutOfRange(f64),
    #[error("series has zero deviation in every window")]
    DegenerateSeries,
    #[error("series of length {len} is shorter than the required {needed}")]
    SeriesTooShort { needed: usize, len: usize },

    #[error("invalid strategy parameters: {0}")]
    BadParams(&'static str),
    #[error("indicators undefined at bar {index}")]
    IndicatorUndefined { index: usize },

    #[error("sharpe ratio needs at least {needed} trading days, got {days}")]
    SpanTooShort { days: usize, needed: usize },
    #[error("empty trade ledger")]
    EmptyLedger,

    #[error("invalid distortion: {0}")]
    BadDistortion(&'static str),
    #[error("stress suite is empty")]
    EmptySuite,
    #[error("need at least 2 defined sharpe values, got {0}")]
    TooFewDefined(usize),

    #[error("search space contains no valid parameter set")]
    EmptySpace,
    #[error("evaluation budget must be at least 1")]
    ZeroBudget,
}
