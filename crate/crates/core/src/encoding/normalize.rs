use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::ColumnStats;
use crate::error::{Error, Result};

pub const DEFAULT_ASINH_WIDTH: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Linear,
    Log,
    Asinh,
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(NormKind::Linear),
            "log" => Ok(NormKind::Log),
            "asinh" => Ok(NormKind::Asinh),
            other => Err(Error::Config(format!(
                "unknown normalizer `{other}` (expected linear, log or asinh)"
            ))),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::Linear => "linear",
            NormKind::Log => "log",
            NormKind::Asinh => "asinh",
        })
    }
}

/// Monotone map from a data domain onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Normalizer {
    kind: NormKind,
    v_min: f64,
    v_max: f64,
    /// Linear width of the asinh transform; 1 for other kinds.
    width: f64,
    #[serde(skip)]
    lo: f64,
    #[serde(skip)]
    span: f64,
}

impl Normalizer {
    pub fn new(kind: NormKind, v_min: f64, v_max: f64) -> Result<Self> {
        Self::with_width(kind, v_min, v_max, DEFAULT_ASINH_WIDTH)
    }

    pub fn linear(v_min: f64, v_max: f64) -> Result<Self> {
        Self::new(NormKind::Linear, v_min, v_max)
    }

    pub fn log(v_min: f64, v_max: f64) -> Result<Self> {
        Self::new(NormKind::Log, v_min, v_max)
    }

    pub fn asinh(v_min: f64, v_max: f64, width: f64) -> Result<Self> {
        Self::with_width(NormKind::Asinh, v_min, v_max, width)
    }

    pub fn with_width(kind: NormKind, v_min: f64, v_max: f64, width: f64) -> Result<Self> {
        if !v_min.is_finite() || !v_max.is_finite() {
            return Err(Error::Config(format!(
                "normalizer domain ({v_min}, {v_max}) is not finite"
            )));
        }
        if !(v_min < v_max) {
            return Err(Error::Config(format!(
                "normalizer domain needs v_min < v_max, got ({v_min}, {v_max})"
            )));
        }
        if kind == NormKind::Log && v_min <= 0.0 {
            return Err(Error::Config(format!(
                "log normalizer needs a positive domain, got v_min = {v_min}"
            )));
        }
        if kind == NormKind::Asinh && !(width > 0.0 && width.is_finite()) {
            return Err(Error::Config(format!(
                "asinh linear width must be positive, got {width}"
            )));
        }
        let width = if kind == NormKind::Asinh { width } else { 1.0 };
        let mut n = Normalizer {
            kind,
            v_min,
            v_max,
            width,
            lo: 0.0,
            span: 1.0,
        };
        n.lo = n.transform(v_min);
        n.span = n.transform(v_max) - n.lo;
        if !(n.span > 0.0 && n.span.is_finite()) {
            return Err(Error::Config(format!(
                "normalizer domain ({v_min}, {v_max}) collapses under {kind}"
            )));
        }
        Ok(n)
    }

    /// Domain from column statistics. Log domains start at the smallest
    /// positive value. A single-valued column is widened so the domain is
    /// non-degenerate.
    pub fn from_stats(kind: NormKind, stats: &ColumnStats) -> Result<Self> {
        let (mut lo, mut hi) = (stats.min, stats.max);
        if kind == NormKind::Log {
            lo = stats.min_positive.ok_or_else(|| {
                Error::Config("log normalizer needs at least one positive value".into())
            })?;
        }
        if lo >= hi {
            if kind == NormKind::Log {
                lo /= 2.0;
                hi = lo * 4.0;
            } else {
                lo -= 0.5;
                hi += 0.5;
            }
        }
        Self::new(kind, lo, hi)
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.v_min, self.v_max)
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    fn transform(&self, v: f64) -> f64 {
        match self.kind {
            NormKind::Linear => v,
            NormKind::Log => v.ln(),
            NormKind::Asinh => (v / self.width).asinh(),
        }
    }

    /// Maps `v` into `[0, 1]`, clamping values outside the domain. Log
    /// normalizers send non-positive values to 0.
    pub fn normalize(&self, v: f64) -> f64 {
        if v.is_nan() || (self.kind == NormKind::Log && v <= 0.0) {
            return 0.0;
        }
        ((self.transform(v) - self.lo) / self.span).clamp(0.0, 1.0)
    }
}
