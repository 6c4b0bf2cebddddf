//! Path loss, noise floor and SINR for the base-station to subscriber link.
//!
//! Four models are supported: free space, Erceg suburban fixed, the
//! outdoor-to-indoor/pedestrian model and the vehicular model. Distances are
//! taken in meters at the API boundary; models defined in kilometers convert
//! internally. Frequencies are in MHz.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{to_db, Scalar};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

/// Reference distance of the Erceg model, meters.
pub const ERCEG_REFERENCE_DISTANCE_M: f64 = 100.0;

/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagationError {
    #[error("{quantity} = {value} is outside the valid domain ({expected})")]
    Domain {
        quantity: &'static str,
        value: f64,
        expected: &'static str,
    },
}

fn domain<T: Scalar>(quantity: &'static str, value: T, expected: &'static str) -> PropagationError {
    PropagationError::Domain {
        quantity,
        value: value.as_f64(),
        expected,
    }
}

fn require<T: Scalar>(
    ok: bool,
    quantity: &'static str,
    value: T,
    expected: &'static str,
) -> Result<(), PropagationError> {
    if ok {
        Ok(())
    } else {
        Err(domain(quantity, value, expected))
    }
}

/// Propagation model and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[serde(bound(deserialize = "T: Deserialize<'de> + Default"))]
pub enum PathLossModel<T = f64> {
    FreeSpace {
        /// Transmit antenna gain, linear.
        g_tx: T,
        /// Receive antenna gain, linear.
        g_rx: T,
        /// System loss factor `L >= 1`, linear.
        sys_loss: T,
    },
    ErcegSuburban {
        /// Path-loss exponent.
        gamma: T,
        /// Frequency correction, dB.
        x_f: T,
        /// Receive antenna height correction, dB.
        x_h: T,
        /// Shadowing term, dB.
        #[serde(default)]
        shadow_s: T,
        /// When set, `shadow_s` is replaced by a seeded normal draw with this
        /// standard deviation at scenario start.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shadow_sigma_db: Option<T>,
    },
    PedestrianOutdoorIndoor,
    Vehicular {
        /// Base-station antenna height, meters.
        bs_antenna_height_m: T,
    },
}

impl<T: Scalar> PathLossModel<T> {
    pub fn free_space() -> Self {
        PathLossModel::FreeSpace {
            g_tx: T::one(),
            g_rx: T::one(),
            sys_loss: T::one(),
        }
    }

    /// Erceg terrain category A (hilly, heavy tree density) at `freq_mhz`
    /// with a 2 m receive antenna.
    pub fn erceg_hilly(freq_mhz: T) -> Self {
        PathLossModel::ErcegSuburban {
            gamma: T::lit(4.8),
            x_f: T::lit(6.0) * (freq_mhz / T::lit(2000.0)).log10(),
            x_h: T::zero(),
            shadow_s: T::zero(),
            shadow_sigma_db: None,
        }
    }

    pub fn vehicular() -> Self {
        PathLossModel::Vehicular {
            bs_antenna_height_m: T::lit(15.0),
        }
    }

    /// Short lowercase identifier used in reports and matrix rows.
    pub fn name(&self) -> &'static str {
        match self {
            PathLossModel::FreeSpace { .. } => "free_space",
            PathLossModel::ErcegSuburban { .. } => "erceg_suburban",
            PathLossModel::PedestrianOutdoorIndoor => "pedestrian",
            PathLossModel::Vehicular { .. } => "vehicular",
        }
    }

    pub fn validate(&self) -> Result<(), PropagationError> {
        match *self {
            PathLossModel::FreeSpace { g_tx, g_rx, sys_loss } => {
                require(g_tx > T::zero(), "g_tx", g_tx, "> 0")?;
                require(g_rx > T::zero(), "g_rx", g_rx, "> 0")?;
                require(sys_loss >= T::one(), "sys_loss", sys_loss, ">= 1")
            }
            PathLossModel::ErcegSuburban {
                gamma,
                x_f,
                x_h,
                shadow_s,
                shadow_sigma_db,
            } => {
                require(gamma > T::zero(), "gamma", gamma, "> 0")?;
                require(x_f.is_finite(), "x_f", x_f, "finite")?;
                require(x_h.is_finite(), "x_h", x_h, "finite")?;
                require(shadow_s.is_finite(), "shadow_s", shadow_s, "finite")?;
                if let Some(sigma) = shadow_sigma_db {
                    require(sigma >= T::zero(), "shadow_sigma_db", sigma, ">= 0")?;
                }
                Ok(())
            }
            PathLossModel::PedestrianOutdoorIndoor => Ok(()),
            PathLossModel::Vehicular { bs_antenna_height_m: h } => require(
                h > T::zero() && h < T::lit(250.0),
                "bs_antenna_height_m",
                h,
                "in (0, 250)",
            ),
        }
    }

    /// Path loss in dB at `distance_m` for a carrier at `freq_mhz`.
    pub fn path_loss_db(&self, distance_m: T, freq_mhz: T) -> Result<T, PropagationError> {
        require(freq_mhz > T::zero(), "freq_mhz", freq_mhz, "> 0")?;
        match *self {
            PathLossModel::FreeSpace { g_tx, g_rx, sys_loss } => {
                let rx = free_space_rx_power(T::one(), g_tx, g_rx, distance_m, sys_loss)?;
                Ok(-to_db(rx))
            }
            PathLossModel::ErcegSuburban {
                gamma,
                x_f,
                x_h,
                shadow_s,
                ..
            } => erceg_path_loss(
                distance_m,
                freq_mhz,
                ErcegParams {
                    gamma,
                    x_f,
                    x_h,
                    shadow_s,
                },
            ),
            PathLossModel::PedestrianOutdoorIndoor => pedestrian_path_loss(distance_m / T::lit(1000.0), freq_mhz),
            PathLossModel::Vehicular { bs_antenna_height_m } => {
                vehicular_path_loss(distance_m / T::lit(1000.0), freq_mhz, bs_antenna_height_m)
            }
        }
    }

    /// Smallest distance in meters for which the model is defined.
    pub fn min_distance_m(&self) -> T {
        match self {
            PathLossModel::ErcegSuburban { .. } => T::lit(ERCEG_REFERENCE_DISTANCE_M),
            _ => T::zero(),
        }
    }
}

/// Deterministic Erceg parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErcegParams<T = f64> {
    pub gamma: T,
    pub x_f: T,
    pub x_h: T,
    pub shadow_s: T,
}

/// Link budget of the downlink.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Deserialize<'de> + Default"))]
pub struct LinkBudget<T = f64> {
    pub tx_power_dbm: T,
    pub carrier_freq_mhz: T,
    pub bandwidth_hz: T,
    pub noise_figure_db: T,
    pub model: PathLossModel<T>,
}

impl<T: Scalar> LinkBudget<T> {
    /// 3.5 GHz carrier, 5 MHz channel, 20 dBm transmitter, 7 dB noise figure.
    pub fn with_model(model: PathLossModel<T>) -> Self {
        LinkBudget {
            tx_power_dbm: T::lit(20.0),
            carrier_freq_mhz: T::lit(3500.0),
            bandwidth_hz: T::lit(5.0e6),
            noise_figure_db: T::lit(7.0),
            model,
        }
    }

    pub fn validate(&self) -> Result<(), PropagationError> {
        require(
            self.carrier_freq_mhz > T::zero(),
            "carrier_freq_mhz",
            self.carrier_freq_mhz,
            "> 0",
        )?;
        require(self.bandwidth_hz > T::zero(), "bandwidth_hz", self.bandwidth_hz, "> 0")?;
        require(
            self.noise_figure_db >= T::zero(),
            "noise_figure_db",
            self.noise_figure_db,
            ">= 0",
        )?;
        require(
            self.tx_power_dbm.is_finite(),
            "tx_power_dbm",
            self.tx_power_dbm,
            "finite",
        )?;
        self.model.validate()
    }

    pub fn noise_floor_dbm(&self) -> Result<T, PropagationError> {
        noise_floor_dbm(self.bandwidth_hz, self.noise_figure_db)
    }
}

impl<T: Scalar> Default for LinkBudget<T> {
    fn default() -> Self {
        Self::with_model(PathLossModel::free_space())
    }
}

/// Received power in watts under the free-space model
/// `P_rx = P_tx·G_tx·G_rx / ((4π)²·r²·L)`.
pub fn free_space_rx_power<T: Scalar>(
    tx_power_w: T,
    g_tx: T,
    g_rx: T,
    r_m: T,
    sys_loss: T,
) -> Result<T, PropagationError> {
    require(r_m > T::zero(), "r_m", r_m, "> 0")?;
    require(g_tx > T::zero(), "g_tx", g_tx, "> 0")?;
    require(g_rx > T::zero(), "g_rx", g_rx, "> 0")?;
    require(sys_loss >= T::one(), "sys_loss", sys_loss, ">= 1")?;
    require(tx_power_w >= T::zero(), "tx_power_w", tx_power_w, ">= 0")?;
    let four_pi = T::lit(4.0) * T::PI();
    Ok(tx_power_w * g_tx * g_rx / (four_pi * four_pi * r_m * r_m * sys_loss))
}

/// Erceg suburban path loss in dB. The intercept is the free-space loss over
/// the 100 m reference distance at the carrier wavelength.
pub fn erceg_path_loss<T: Scalar>(d_m: T, freq_mhz: T, params: ErcegParams<T>) -> Result<T, PropagationError> {
    let d0 = T::lit(ERCEG_REFERENCE_DISTANCE_M);
    require(d_m >= d0, "d_m", d_m, ">= 100 m")?;
    require(freq_mhz > T::zero(), "freq_mhz", freq_mhz, "> 0")?;
    let wavelength = T::lit(SPEED_OF_LIGHT_M_S) / (freq_mhz * T::lit(1.0e6));
    let intercept = T::lit(20.0) * (T::lit(4.0) * T::PI() * d0 / wavelength).log10();
    Ok(intercept + T::lit(10.0) * params.gamma * (d_m / d0).log10() + params.x_f + params.x_h + params.shadow_s)
}

/// `40·log10(R) + 30·log10(f) + 49`, R in km, f in MHz.
pub fn pedestrian_path_loss<T: Scalar>(r_km: T, freq_mhz: T) -> Result<T, PropagationError> {
    require(r_km > T::zero(), "r_km", r_km, "> 0")?;
    require(freq_mhz > T::zero(), "freq_mhz", freq_mhz, "> 0")?;
    Ok(T::lit(40.0) * r_km.log10() + T::lit(30.0) * freq_mhz.log10() + T::lit(49.0))
}

/// `40(1 − 4·10⁻³·Δh)·log10(R) − 18·log10(Δh) + 21·log10(f) + 80`.
///
/// The frequency term carries a positive sign so that attenuation grows with
/// frequency.
pub fn vehicular_path_loss<T: Scalar>(r_km: T, freq_mhz: T, bs_height_m: T) -> Result<T, PropagationError> {
    require(r_km > T::zero(), "r_km", r_km, "> 0")?;
    require(freq_mhz > T::zero(), "freq_mhz", freq_mhz, "> 0")?;
    require(
        bs_height_m > T::zero() && bs_height_m < T::lit(250.0),
        "bs_height_m",
        bs_height_m,
        "in (0, 250)",
    )?;
    let slope = T::lit(40.0) * (T::one() - T::lit(4.0e-3) * bs_height_m);
    Ok(slope * r_km.log10() - T::lit(18.0) * bs_height_m.log10() + T::lit(21.0) * freq_mhz.log10() + T::lit(80.0))
}

/// Thermal noise floor `−174 + 10·log10(BW) + NF` in dBm.
pub fn noise_floor_dbm<T: Scalar>(bandwidth_hz: T, noise_figure_db: T) -> Result<T, PropagationError> {
    require(bandwidth_hz > T::zero(), "bandwidth_hz", bandwidth_hz, "> 0")?;
    Ok(T::lit(THERMAL_NOISE_DBM_PER_HZ) + to_db(bandwidth_hz) + noise_figure_db)
}

/// SINR in dB at `distance_m`. No interference term.
pub fn compute_sinr<T: Scalar>(budget: &LinkBudget<T>, distance_m: T) -> Result<T, PropagationError> {
    let loss = budget.model.path_loss_db(distance_m, budget.carrier_freq_mhz)?;
    Ok(budget.tx_power_dbm - loss - budget.noise_floor_dbm()?)
}
