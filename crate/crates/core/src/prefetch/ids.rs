use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

pub const IP_STRIDE_TABLE: usize = 256;
pub const IP_STRIDE_THRESHOLD: u8 = 2;
pub const IP_STRIDE_DEGREE: usize = 2;
pub const STREAM_WINDOW: usize = 16;
pub const STREAM_DEGREE: usize = 2;

/// L1D prefetcher selection.
///
/// String forms: `none`, `next_line`, `ip_stride[:table:threshold:degree]`,
/// `stream[:window:degree]`. Parameters left out take the defaults above,
/// and the canonical form omits them when they are the defaults.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DataPrefetcherId {
    None,
    NextLine,
    IpStride {
        table_size: usize,
        confidence_threshold: u8,
        degree: usize,
    },
    Stream {
        detect_window: usize,
        degree: usize,
    },
}

impl DataPrefetcherId {
    pub fn ip_stride_default() -> Self {
        DataPrefetcherId::IpStride {
            table_size: IP_STRIDE_TABLE,
            confidence_threshold: IP_STRIDE_THRESHOLD,
            degree: IP_STRIDE_DEGREE,
        }
    }

    pub fn stream_default() -> Self {
        DataPrefetcherId::Stream {
            detect_window: STREAM_WINDOW,
            degree: STREAM_DEGREE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DataPrefetcherId::IpStride {
                table_size,
                confidence_threshold,
                degree,
            } => {
                if !table_size.is_power_of_two() {
                    return Err(Error::validation(format!(
                        "ip_stride table_size must be a power of two, got {table_size}"
                    )));
                }
                if !(1..=3).contains(&confidence_threshold) {
                    return Err(Error::validation(format!(
                        "ip_stride confidence_threshold must lie in [1, 3], got {confidence_threshold}"
                    )));
                }
                if degree == 0 {
                    return Err(Error::validation("ip_stride degree must be at least 1"));
                }
            }
            DataPrefetcherId::Stream {
                detect_window,
                degree,
            } => {
                if detect_window < 2 {
                    return Err(Error::validation("stream detect_window must be at least 2"));
                }
                if degree == 0 {
                    return Err(Error::validation("stream degree must be at least 1"));
                }
            }
            DataPrefetcherId::None | DataPrefetcherId::NextLine => {}
        }
        Ok(())
    }
}

impl fmt::Display for DataPrefetcherId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DataPrefetcherId::None => f.write_str("none"),
            DataPrefetcherId::NextLine => f.write_str("next_line"),
            id @ DataPrefetcherId::IpStride {
                table_size,
                confidence_threshold,
                degree,
            } => {
                if id == Self::ip_stride_default() {
                    f.write_str("ip_stride")
                } else {
                    write!(f, "ip_stride:{table_size}:{confidence_threshold}:{degree}")
                }
            }
            id @ DataPrefetcherId::Stream {
                detect_window,
                degree,
            } => {
                if id == Self::stream_default() {
                    f.write_str("stream")
                } else {
                    write!(f, "stream:{detect_window}:{degree}")
                }
            }
        }
    }
}

fn params<const N: usize>(s: &str, rest: &str) -> Result<[usize; N]> {
    let parts: Vec<&str> = rest.split(':').collect();
    let bad = || Error::validation(format!("malformed prefetcher id '{s}'"));
    if parts.len() != N {
        return Err(bad());
    }
    let mut out = [0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| bad())?;
    }
    Ok(out)
}

impl FromStr for DataPrefetcherId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (s, None),
        };
        let id = match (name, rest) {
            ("none", None) => DataPrefetcherId::None,
            ("next_line", None) => DataPrefetcherId::NextLine,
            ("ip_stride", None) => Self::ip_stride_default(),
            ("ip_stride", Some(r)) => {
                let [table_size, threshold, degree] = params::<3>(s, r)?;
                DataPrefetcherId::IpStride {
                    table_size,
                    confidence_threshold: u8::try_from(threshold).unwrap_or(u8::MAX),
                    degree,
                }
            }
            ("stream", None) => Self::stream_default(),
            ("stream", Some(r)) => {
                let [detect_window, degree] = params::<2>(s, r)?;
                DataPrefetcherId::Stream {
                    detect_window,
                    degree,
                }
            }
            _ => return Err(Error::validation(format!("unknown L1D prefetcher '{s}'"))),
        };
        id.validate()?;
        Ok(id)
    }
}

/// L1I prefetcher selection: `i_next_line` or `i_next_2_line`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InstrPrefetcherId {
    NextLine,
    Next2Line,
}

impl fmt::Display for InstrPrefetcherId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstrPrefetcherId::NextLine => "i_next_line",
            InstrPrefetcherId::Next2Line => "i_next_2_line",
        })
    }
}

impl FromStr for InstrPrefetcherId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "i_next_line" => Ok(InstrPrefetcherId::NextLine),
            "i_next_2_line" => Ok(InstrPrefetcherId::Next2Line),
            _ => Err(Error::validation(format!("unknown L1I prefetcher '{s}'"))),
        }
    }
}
