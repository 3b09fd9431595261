use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{BoxMode, ShiftMethod};
use crate::arch::Architecture;
use crate::error::{Error, Result};

/// Local fix applied inside a tile before giving up on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerMethod {
    #[default]
    HardwareShift,
    InteractionShift,
}

impl InnerMethod {
    pub fn shift(self, arch: &Architecture) -> ShiftMethod {
        match self {
            InnerMethod::HardwareShift => ShiftMethod::Hardware,
            InnerMethod::InteractionShift => ShiftMethod::Interaction { d: arch.d_max() },
        }
    }
}

impl fmt::Display for InnerMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InnerMethod::HardwareShift => "hardware-shift",
            InnerMethod::InteractionShift => "interaction-shift",
        })
    }
}

impl FromStr for InnerMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hardware-shift" => Ok(InnerMethod::HardwareShift),
            "interaction-shift" => Ok(InnerMethod::InteractionShift),
            other => Err(Error::InvalidStrategy(format!("unknown inner method '{other}'"))),
        }
    }
}

/// How to respond when a shot loses an atom the circuit relies on.
///
/// Written as `name[:arg...]`, e.g. `reroute:3`, `relocate:loose:0.4:interaction-shift`
/// or `partial-parallel:tight:2`; omitted arguments take their defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// Reload the whole array on every relevant loss.
    ReloadAlways,
    /// Compile again from scratch around the lost atoms.
    Recompile,
    HardwareShift,
    InteractionShift,
    /// Compile at a reduced range, keeping the rest in reserve for rerouting.
    /// `None` means one less than the hardware range.
    RerouteSmallerD { d_eff: Option<f64> },
    /// Confine the circuit to a tile and move to a fresh tile once local
    /// fixes stop working or the estimate drops below `threshold` times its
    /// fresh value.
    RelocateTiles { mode: BoxMode, threshold: f64, inner: InnerMethod },
    /// As many disjoint copies as fit, each recovering by interaction shift
    /// over the whole array.
    FullParallel { mode: BoxMode },
    /// A fixed number of copies, each relocating within the tile plan.
    PartialParallel { mode: BoxMode, instances: usize },
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

impl Strategy {
    /// Every strategy, with default arguments, in presentation order.
    pub const ALL: [Strategy; 8] = [
        Strategy::ReloadAlways,
        Strategy::Recompile,
        Strategy::HardwareShift,
        Strategy::InteractionShift,
        Strategy::RerouteSmallerD { d_eff: None },
        Strategy::RelocateTiles {
            mode: BoxMode::Loose,
            threshold: DEFAULT_THRESHOLD,
            inner: InnerMethod::HardwareShift,
        },
        Strategy::FullParallel { mode: BoxMode::Loose },
        Strategy::PartialParallel {
            mode: BoxMode::Loose,
            instances: 2,
        },
    ];

    /// Range the circuit is compiled against.
    pub fn compile_range(&self, arch: &Architecture) -> f64 {
        match self {
            Strategy::RerouteSmallerD { d_eff } => d_eff.unwrap_or(arch.d_max() - 1.0),
            _ => arch.d_max(),
        }
    }

    pub fn validate(&self, arch: &Architecture) -> Result<()> {
        match *self {
            Strategy::RerouteSmallerD { .. } => {
                let d = self.compile_range(arch);
                if !(d > 0.0 && d <= arch.d_max()) {
                    return Err(Error::InvalidStrategy(format!(
                        "reroute range {d} must be in (0, {}]",
                        arch.d_max()
                    )));
                }
            }
            Strategy::RelocateTiles { threshold, .. } => {
                if !(0.0..=1.0).contains(&threshold) {
                    return Err(Error::InvalidStrategy(format!(
                        "threshold {threshold} must be in [0, 1]"
                    )));
                }
            }
            Strategy::PartialParallel { instances: 0, .. } => {
                return Err(Error::InvalidStrategy("need at least one instance".into()));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn is_parallel(&self) -> bool {
        matches!(self, Strategy::FullParallel { .. } | Strategy::PartialParallel { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::ReloadAlways => "reload",
            Strategy::Recompile => "recompile",
            Strategy::HardwareShift => "hardware-shift",
            Strategy::InteractionShift => "interaction-shift",
            Strategy::RerouteSmallerD { .. } => "reroute",
            Strategy::RelocateTiles { .. } => "relocate",
            Strategy::FullParallel { .. } => "full-parallel",
            Strategy::PartialParallel { .. } => "partial-parallel",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())?;
        match self {
            Strategy::RerouteSmallerD { d_eff: Some(d) } => write!(f, ":{d}"),
            Strategy::RelocateTiles { mode, threshold, inner } => write!(f, ":{mode}:{threshold}:{inner}"),
            Strategy::FullParallel { mode } => write!(f, ":{mode}"),
            Strategy::PartialParallel { mode, instances } => write!(f, ":{mode}:{instances}"),
            _ => Ok(()),
        }
    }
}

fn arg<T: FromStr>(args: &[&str], i: usize, what: &str) -> Result<Option<T>> {
    match args.get(i) {
        None => Ok(None),
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidStrategy(format!("bad {what} '{raw}'"))),
    }
}

fn mode_arg(args: &[&str], i: usize) -> Result<BoxMode> {
    match args.get(i) {
        None => Ok(BoxMode::default()),
        Some(raw) => raw.parse(),
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let mut name = parts.next().unwrap_or_default();
        let mut args: Vec<&str> = parts.collect();
        if let Some(mode) = name.strip_prefix("relocate-") {
            name = "relocate";
            args.insert(0, mode);
        }
        let max_args = match name {
            "reload" | "recompile" | "hardware-shift" | "interaction-shift" => 0,
            "reroute" | "full-parallel" => 1,
            "partial-parallel" => 2,
            "relocate" => 3,
            other => return Err(Error::InvalidStrategy(format!("unknown strategy '{other}'"))),
        };
        if args.len() > max_args {
            return Err(Error::InvalidStrategy(format!("too many arguments in '{s}'")));
        }
        Ok(match name {
            "reload" => Strategy::ReloadAlways,
            "recompile" => Strategy::Recompile,
            "hardware-shift" => Strategy::HardwareShift,
            "interaction-shift" => Strategy::InteractionShift,
            "reroute" => Strategy::RerouteSmallerD {
                d_eff: arg(&args, 0, "range")?,
            },
            "relocate" => Strategy::RelocateTiles {
                mode: mode_arg(&args, 0)?,
                threshold: arg(&args, 1, "threshold")?.unwrap_or(DEFAULT_THRESHOLD),
                inner: match args.get(2) {
                    None => InnerMethod::default(),
                    Some(raw) => raw.parse()?,
                },
            },
            "full-parallel" => Strategy::FullParallel { mode: mode_arg(&args, 0)? },
            _ => Strategy::PartialParallel {
                mode: mode_arg(&args, 0)?,
                instances: arg(&args, 1, "instance count")?.unwrap_or(2),
            },
        })
    }
}

impl Serialize for Strategy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Strategy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}
