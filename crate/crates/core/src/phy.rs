//! Modulation and coding table, adaptive MCS selection and rate arithmetic
//! for the 5 MHz OFDM profile.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhyError {
    #[error("invalid coding rate {0:?}: expected a fraction p/q with 0 < p/q < 1")]
    CodingRate(String),
    #[error("unknown modulation {0:?}")]
    Modulation(String),
    #[error("unknown MCS {0:?}")]
    UnknownMcs(String),
    #[error("MCS {mcs}: {reason}")]
    Profile { mcs: String, reason: String },
    #[error("MCS table is empty")]
    EmptyTable,
    #[error("MCS table not sorted at entry {index} ({mcs}): {reason}")]
    Unsorted {
        index: usize,
        mcs: String,
        reason: &'static str,
    },
    #[error("frame duration must be positive, got {0} ms")]
    FrameDuration(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "QPSK")]
    Qpsk,
    #[serde(rename = "16QAM")]
    Qam16,
    #[serde(rename = "64QAM")]
    Qam64,
}

impl Modulation {
    /// Raw (uncoded) bits carried per constellation symbol.
    pub fn raw_bits(self) -> u32 {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Qpsk => "QPSK",
            Modulation::Qam16 => "16QAM",
            Modulation::Qam64 => "64QAM",
        })
    }
}

impl FromStr for Modulation {
    type Err = PhyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().replace(' ', "").as_str() {
            "QPSK" => Ok(Modulation::Qpsk),
            "16QAM" | "QAM16" => Ok(Modulation::Qam16),
            "64QAM" | "QAM64" => Ok(Modulation::Qam64),
            _ => Err(PhyError::Modulation(s.to_string())),
        }
    }
}

/// Forward error correction code rate, kept as an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CodingRate(Ratio<u32>);

impl CodingRate {
    pub const HALF: CodingRate = CodingRate(Ratio::new_raw(1, 2));
    pub const TWO_THIRDS: CodingRate = CodingRate(Ratio::new_raw(2, 3));
    pub const THREE_QUARTERS: CodingRate = CodingRate(Ratio::new_raw(3, 4));

    pub fn new(numer: u32, denom: u32) -> Result<Self, PhyError> {
        if denom == 0 || numer == 0 || numer >= denom {
            return Err(PhyError::CodingRate(format!("{numer}/{denom}")));
        }
        Ok(CodingRate(Ratio::new(numer, denom)))
    }

    pub fn ratio(self) -> Ratio<u32> {
        self.0
    }

    pub fn to_scalar<T: Scalar>(self) -> T {
        T::lit(f64::from(*self.0.numer())) / T::lit(f64::from(*self.0.denom()))
    }
}

impl fmt::Display for CodingRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for CodingRate {
    type Err = PhyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PhyError::CodingRate(s.to_string());
        let (n, d) = s.trim().split_once('/').ok_or_else(bad)?;
        let n = n.trim().parse().map_err(|_| bad())?;
        let d = d.trim().parse().map_err(|_| bad())?;
        CodingRate::new(n, d).map_err(|_| bad())
    }
}

impl TryFrom<String> for CodingRate {
    type Error = PhyError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<CodingRate> for String {
    fn from(rate: CodingRate) -> String {
        rate.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "DL")]
    Downlink,
    #[serde(rename = "UL")]
    Uplink,
}

/// One row of the MCS table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsProfile<T = f64> {
    pub modulation: Modulation,
    pub coding_rate: CodingRate,
    /// Information bits per symbol.
    pub bits_per_symbol: T,
    pub min_sinr_db: T,
    pub dl_rate_mbps: T,
    pub ul_rate_mbps: T,
}

impl<T: Scalar> McsProfile<T> {
    fn row(modulation: Modulation, rate: CodingRate, bits: f64, sinr: f64, dl: f64, ul: f64) -> Self {
        McsProfile {
            modulation,
            coding_rate: rate,
            bits_per_symbol: T::lit(bits),
            min_sinr_db: T::lit(sinr),
            dl_rate_mbps: T::lit(dl),
            ul_rate_mbps: T::lit(ul),
        }
    }

    /// Display name such as `16QAM-3/4`.
    pub fn name(&self) -> String {
        format!("{}-{}", self.modulation, self.coding_rate)
    }

    /// Peak rate in whole bits per second.
    pub fn rate_bps(&self, direction: Direction) -> T {
        let mbps = match direction {
            Direction::Downlink => self.dl_rate_mbps,
            Direction::Uplink => self.ul_rate_mbps,
        };
        (mbps * T::lit(1.0e6)).round()
    }

    /// Seconds needed to send `payload_bytes`.
    pub fn tx_time(&self, payload_bytes: u64, direction: Direction) -> T {
        T::lit(8.0 * payload_bytes as f64) / self.rate_bps(direction)
    }

    /// Bits that fit into one MAC frame of `frame_duration_ms`.
    pub fn frame_capacity_bits(&self, frame_duration_ms: T, direction: Direction) -> Result<u64, PhyError> {
        if !(frame_duration_ms > T::zero()) {
            return Err(PhyError::FrameDuration(frame_duration_ms.as_f64()));
        }
        let bits = (self.rate_bps(direction) * frame_duration_ms / T::lit(1000.0)).floor();
        Ok(bits.to_u64().unwrap_or(0))
    }

    pub fn validate(&self) -> Result<(), PhyError> {
        let fail = |reason: &str| PhyError::Profile {
            mcs: self.name(),
            reason: reason.to_string(),
        };
        let r = self.coding_rate.ratio();
        if *r.numer() == 0 || r.numer() >= r.denom() {
            return Err(fail("coding rate must lie in (0, 1)"));
        }
        if !(self.bits_per_symbol > T::zero()) {
            return Err(fail("bits_per_symbol must be positive"));
        }
        if !(self.ul_rate_mbps > T::zero()) {
            return Err(fail("ul_rate_mbps must be positive"));
        }
        if !(self.dl_rate_mbps > self.ul_rate_mbps) {
            return Err(fail("dl_rate_mbps must exceed ul_rate_mbps"));
        }
        if !self.min_sinr_db.is_finite() {
            return Err(fail("min_sinr_db must be finite"));
        }
        Ok(())
    }
}

impl<T: Scalar> fmt::Display for McsProfile<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// DL Mbps per information bit/symbol of the reference row (QPSK 1/2, 5 MHz).
pub const DL_MBPS_PER_BIT: f64 = 3.17;
/// UL Mbps per information bit/symbol of the reference row (QPSK 1/2, 5 MHz).
pub const UL_MBPS_PER_BIT: f64 = 2.28;

/// The seven-entry mobile WiMAX table for a 5 MHz channel.
///
/// 64QAM 3/4 carries 4.5 information bits per symbol (6 × 3/4); its rates are
/// 4.5 × the QPSK 1/2 rates.
pub fn default_mcs_table<T: Scalar>() -> Vec<McsProfile<T>> {
    use CodingRate as R;
    use Modulation::*;
    vec![
        McsProfile::row(Qpsk, R::HALF, 1.0, 5.0, 3.17, 2.28),
        McsProfile::row(Qpsk, R::THREE_QUARTERS, 1.5, 8.0, 4.75, 3.43),
        McsProfile::row(Qam16, R::HALF, 2.0, 10.5, 6.34, 4.57),
        McsProfile::row(Qam16, R::THREE_QUARTERS, 3.0, 14.0, 9.5, 6.85),
        McsProfile::row(Qam64, R::HALF, 3.0, 16.0, 9.5, 6.85),
        McsProfile::row(Qam64, R::TWO_THIRDS, 4.0, 18.0, 12.6, 9.14),
        McsProfile::row(Qam64, R::THREE_QUARTERS, 4.5, 20.0, 14.26, 10.28),
    ]
}

/// Checks the table ordering: `min_sinr_db` strictly increasing and
/// `dl_rate_mbps` non-decreasing.
pub fn validate_table<T: Scalar>(table: &[McsProfile<T>]) -> Result<(), PhyError> {
    if table.is_empty() {
        return Err(PhyError::EmptyTable);
    }
    for mcs in table {
        mcs.validate()?;
    }
    for (index, pair) in table.windows(2).enumerate() {
        let (prev, next) = (&pair[0], &pair[1]);
        if !(next.min_sinr_db > prev.min_sinr_db) {
            return Err(PhyError::Unsorted {
                index: index + 1,
                mcs: next.name(),
                reason: "min_sinr_db must be strictly increasing",
            });
        }
        if next.dl_rate_mbps < prev.dl_rate_mbps {
            return Err(PhyError::Unsorted {
                index: index + 1,
                mcs: next.name(),
                reason: "dl_rate_mbps must not decrease",
            });
        }
    }
    Ok(())
}

/// Highest-rate profile usable at `sinr_db`; `None` means link outage.
///
/// The threshold is inclusive. Among equal DL rates the profile with the
/// higher threshold wins, i.e. the last eligible entry of the sorted table.
pub fn select_mcs<T: Scalar>(table: &[McsProfile<T>], sinr_db: T) -> Option<&McsProfile<T>> {
    table.iter().take_while(|m| m.min_sinr_db <= sinr_db).last()
}

/// Looks up a profile by its display name (`QPSK-1/2`, `64QAM-3/4`, ...).
pub fn find_mcs<'a, T: Scalar>(table: &'a [McsProfile<T>], name: &str) -> Result<&'a McsProfile<T>, PhyError> {
    let wanted = name.replace(' ', "").to_ascii_uppercase();
    table
        .iter()
        .find(|m| m.name().to_ascii_uppercase() == wanted)
        .ok_or_else(|| PhyError::UnknownMcs(name.to_string()))
}

/// Channel and framing parameters plus the MCS table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhyProfile<T = f64> {
    pub channel_bandwidth_mhz: T,
    pub frame_duration_ms: T,
    pub mcs_table: Vec<McsProfile<T>>,
}

impl<T: Scalar> Default for PhyProfile<T> {
    fn default() -> Self {
        PhyProfile {
            channel_bandwidth_mhz: T::lit(5.0),
            frame_duration_ms: T::lit(5.0),
            mcs_table: default_mcs_table(),
        }
    }
}

impl<T: Scalar> PhyProfile<T> {
    pub fn validate(&self) -> Result<(), PhyError> {
        if !(self.frame_duration_ms > T::zero()) {
            return Err(PhyError::FrameDuration(self.frame_duration_ms.as_f64()));
        }
        validate_table(&self.mcs_table)?;
        // Rates scale with the channel width relative to the 5 MHz reference.
        let scale = self.channel_bandwidth_mhz / T::lit(5.0);
        for mcs in &self.mcs_table {
            let expected = T::lit(DL_MBPS_PER_BIT) * mcs.bits_per_symbol * scale;
            if ((mcs.dl_rate_mbps - expected) / expected).abs() > T::lit(0.01) {
                return Err(PhyError::Profile {
                    mcs: mcs.name(),
                    reason: format!(
                        "dl_rate_mbps {} deviates more than 1% from {} x bits_per_symbol",
                        mcs.dl_rate_mbps,
                        T::lit(DL_MBPS_PER_BIT) * scale
                    ),
                });
            }
        }
        Ok(())
    }
}
