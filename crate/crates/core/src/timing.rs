use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::circuits::GateKind;

/// Per-gate execution times. These are modelling knobs, not measured values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateDurations {
    #[serde(with = "micros")]
    pub one_qubit: Duration,
    #[serde(with = "micros")]
    pub two_qubit: Duration,
    #[serde(with = "micros")]
    pub three_qubit: Duration,
    /// A SWAP is three back-to-back CX gates.
    #[serde(with = "micros")]
    pub swap: Duration,
}

impl Default for GateDurations {
    fn default() -> Self {
        let two = Duration::from_micros(3);
        Self {
            one_qubit: Duration::from_micros(2),
            two_qubit: two,
            three_qubit: Duration::from_micros(5),
            swap: two * 3,
        }
    }
}

impl GateDurations {
    pub fn of(&self, kind: GateKind) -> Duration {
        match (kind, kind.arity()) {
            (GateKind::Swap, _) => self.swap,
            (_, 1) => self.one_qubit,
            (_, 2) => self.two_qubit,
            _ => self.three_qubit,
        }
    }
}

/// Wall-clock costs of the shot loop around the circuit itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingModel {
    /// Imaging after every shot to find lost atoms.
    #[serde(with = "millis")]
    pub fluorescence: Duration,
    /// Re-trapping the whole array.
    #[serde(with = "millis")]
    pub reload: Duration,
    /// Lookup-table read.
    #[serde(with = "nanos")]
    pub read: Duration,
    /// Lookup-table write.
    #[serde(with = "nanos")]
    pub write: Duration,
    pub gates: GateDurations,
}

impl Default for TimingModel {
    fn default() -> Self {
        Self {
            fluorescence: Duration::from_millis(6),
            reload: Duration::from_millis(320),
            read: Duration::from_nanos(40),
            write: Duration::from_nanos(45),
            gates: GateDurations::default(),
        }
    }
}

impl TimingModel {
    /// Lookup-table time for a recovery that did `reads` reads and `writes` writes.
    pub fn table_cost(&self, reads: u64, writes: u64) -> Duration {
        scale(self.read, reads) + scale(self.write, writes)
    }
}

pub(crate) fn scale(d: Duration, n: u64) -> Duration {
    Duration::from_nanos((d.as_nanos() as u64).saturating_mul(n))
}

/// Durations in a config are plain numbers of some unit, rounded to whole
/// nanoseconds.
macro_rules! unit_serde {
    ($name:ident, $nanos_per_unit:expr) => {
        mod $name {
            use serde::{de::Error, Deserialize, Deserializer, Serializer};
            use std::time::Duration;

            pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_f64(d.as_nanos() as f64 / $nanos_per_unit)
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
                let v = f64::deserialize(d)?;
                let nanos = (v * $nanos_per_unit).round();
                if !(nanos >= 0.0 && nanos < u64::MAX as f64) {
                    return Err(D::Error::custom(format!("invalid duration {v}")));
                }
                Ok(Duration::from_nanos(nanos as u64))
            }
        }
    };
}

unit_serde!(micros, 1e3);
unit_serde!(millis, 1e6);
unit_serde!(nanos, 1.0);
