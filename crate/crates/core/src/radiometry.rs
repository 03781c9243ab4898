//! Photodetector voltage to optical power conversion.
//!
//! The amplified detector produces `V = P R(lambda) G / 2` into a 50 ohm
//! termination, where the transimpedance gain is `G = G_0 10^(G_amp / 20)`.
//! `G_0 = 750 V/A` follows from matching the linear conversion to the
//! rounded dB form `10 log10(V) - 0.5 G_amp - 21.76`:
//! `10 log10(2 / (0.4 * 750)) = -21.7609`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Offset of the rounded dB conversion, in dB.
pub const DB_CONVERSION_OFFSET: f64 = 21.76;

/// Agreement between the linear and rounded-dB conversions for the default detector.
pub const DB_PATH_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorProfile {
    pub responsivity_a_per_w: f64,
    pub base_transimpedance_v_per_a: f64,
    pub gain_setting_db: f64,
    pub adc_lsb_v: f64,
    pub adc_max_v: f64,
    pub signal_range_v: [f64; 2],
}

impl Default for DetectorProfile {
    fn default() -> Self {
        Self {
            responsivity_a_per_w: 0.4,
            base_transimpedance_v_per_a: 750.0,
            gain_setting_db: 0.0,
            adc_lsb_v: 366e-6,
            adc_max_v: 12.0,
            signal_range_v: [0.0, 5.0],
        }
    }
}

impl DetectorProfile {
    pub fn with_gain(gain_setting_db: f64) -> Result<Self> {
        let profile = Self {
            gain_setting_db,
            ..Self::default()
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.responsivity_a_per_w > 0.0) {
            return Err(Error::domain("responsivity must be > 0", self.responsivity_a_per_w));
        }
        if !(self.base_transimpedance_v_per_a > 0.0) {
            return Err(Error::domain(
                "base transimpedance must be > 0",
                self.base_transimpedance_v_per_a,
            ));
        }
        if !(0.0..=70.0).contains(&self.gain_setting_db) {
            return Err(Error::domain(
                "gain setting must lie in [0, 70] dB",
                self.gain_setting_db,
            ));
        }
        if !(self.adc_lsb_v > 0.0) {
            return Err(Error::domain("ADC LSB must be > 0", self.adc_lsb_v));
        }
        if !(self.adc_max_v > 0.0) {
            return Err(Error::domain("ADC full scale must be > 0", self.adc_max_v));
        }
        let [lo, hi] = self.signal_range_v;
        if !(lo >= 0.0 && hi > lo) {
            return Err(Error::config(format!("signal range [{lo}, {hi}] V is invalid")));
        }
        Ok(())
    }

    /// Parses a `key = value` profile; missing keys keep their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let profile: Self = toml::from_str(text)?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Highest voltage the acquisition chain reports before clipping.
    pub fn clip_voltage(&self) -> f64 {
        self.signal_range_v[1].min(self.adc_max_v)
    }
}

/// Transimpedance gain `G_0 10^(G_amp / 20)` in V/A.
pub fn transimpedance_gain(profile: &DetectorProfile) -> f64 {
    profile.base_transimpedance_v_per_a * 10f64.powf(profile.gain_setting_db / 20.0)
}

/// Optical power in watts for a detector output voltage.
pub fn voltage_to_power_w(profile: &DetectorProfile, v_out: f64) -> Result<f64> {
    if !(v_out >= 0.0) {
        return Err(Error::NegativeVoltage(v_out));
    }
    Ok(2.0 * v_out / (profile.responsivity_a_per_w * transimpedance_gain(profile)))
}

/// Optical power in dBW from the rounded conversion `10 log10(V) - 0.5 G_amp - 21.76`.
pub fn voltage_to_power_dbw(profile: &DetectorProfile, v_out: f64) -> Result<f64> {
    if !(v_out > 0.0) {
        return Err(Error::NonPositiveVoltage(v_out));
    }
    Ok(10.0 * v_out.log10() - 0.5 * profile.gain_setting_db - DB_CONVERSION_OFFSET)
}

/// Optical power in dBW through the exact linear conversion.
pub fn voltage_to_power_dbw_exact(profile: &DetectorProfile, v_out: f64) -> Result<f64> {
    if !(v_out > 0.0) {
        return Err(Error::NonPositiveVoltage(v_out));
    }
    Ok(crate::model::to_db(voltage_to_power_w(profile, v_out)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoltageReading {
    pub volts: f64,
    pub saturated: bool,
}

/// Inverse of [`voltage_to_power_w`], clipped at the top of the signal range.
pub fn power_to_voltage(profile: &DetectorProfile, p_in_w: f64) -> Result<VoltageReading> {
    if !(p_in_w >= 0.0) {
        return Err(Error::domain("optical power must be >= 0", p_in_w));
    }
    let volts = p_in_w * profile.responsivity_a_per_w * transimpedance_gain(profile) / 2.0;
    let clip = profile.clip_voltage();
    Ok(if volts > clip {
        VoltageReading {
            volts: clip,
            saturated: true,
        }
    } else {
        VoltageReading {
            volts,
            saturated: false,
        }
    })
}

/// Rounds to the nearest ADC code.
pub fn quantize(profile: &DetectorProfile, v: f64) -> f64 {
    (v / profile.adc_lsb_v).round() * profile.adc_lsb_v
}
