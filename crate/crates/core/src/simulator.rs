//! Synthetic pass-by and static measurements from known channel parameters.
//!
//! Noise is Gaussian in dB on the signal. Ambient light adds in linear watts
//! as a constant plus Gaussian fluctuation. The generator is ChaCha20 seeded
//! with `seed_from_u64`; every sample consumes exactly two standard normal
//! draws (signal, ambient) whether or not they are used, so scenarios that
//! differ only in noise levels share one noise realisation.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{fit, FitConfig};
use crate::model::{from_db, peak_range, received_power_passby, to_db, ChannelParams, PassGeometry, Preset};
use crate::radiometry::{power_to_voltage, quantize, DetectorProfile};
use crate::trace::{map_to_distance, RawTrace, Unit};

pub const RNG_ALGORITHM: &str = "ChaCha20";

/// Approach speed of the measured pass-by, 20 mph.
pub const PASSBY_SPEED_MPS: f64 = 8.9408;
pub const PASSBY_DURATION_S: f64 = 10.0;
pub const SAMPLE_RATE_HZ: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGeometry {
    pub lateral_offset_m: f64,
    pub speed_mps: f64,
    /// Defaults to the analytic peak range `w sqrt((n + 1) / gamma)`.
    #[serde(default)]
    pub peak_range_m: Option<f64>,
    /// Defaults to the sample time that leaves the last sample just short of `R = 0`.
    #[serde(default)]
    pub peak_time_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Emission {
    #[default]
    PowerDbw,
    Voltage {
        profile: DetectorProfile,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub params: ChannelParams,
    pub geometry: ScenarioGeometry,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub noise_sigma_db: f64,
    #[serde(default)]
    pub ambient_power_dbw: Option<f64>,
    #[serde(default)]
    pub ambient_sigma_w: f64,
    pub seed: u64,
    /// Quantization and clipping of emitted voltages.
    pub adc_effects: bool,
    #[serde(default)]
    pub emission: Emission,
}

impl ScenarioConfig {
    /// Night pass-by: `w = 2 m`, 20 mph, 10 s at 100 Hz, noiseless.
    pub fn night_passby() -> Self {
        Self {
            params: ChannelParams::preset(Preset::Night),
            geometry: ScenarioGeometry {
                lateral_offset_m: 2.0,
                speed_mps: PASSBY_SPEED_MPS,
                peak_range_m: None,
                peak_time_s: None,
            },
            duration_s: PASSBY_DURATION_S,
            sample_rate_hz: SAMPLE_RATE_HZ,
            noise_sigma_db: 0.0,
            ambient_power_dbw: None,
            ambient_sigma_w: 0.0,
            seed: 0,
            adc_effects: true,
            emission: Emission::PowerDbw,
        }
    }

    pub fn sample_count(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::domain("duration must be > 0", self.duration_s));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::domain("sample rate must be > 0", self.sample_rate_hz));
        }
        if !(self.noise_sigma_db >= 0.0) {
            return Err(Error::domain("noise sigma must be >= 0", self.noise_sigma_db));
        }
        if !(self.ambient_sigma_w >= 0.0) {
            return Err(Error::domain("ambient sigma must be >= 0", self.ambient_sigma_w));
        }
        if let Some(a) = self.ambient_power_dbw {
            if !a.is_finite() {
                return Err(Error::domain("ambient power must be finite", a));
            }
        }
        if !(self.geometry.lateral_offset_m > 0.0) {
            return Err(Error::domain(
                "pass-by needs a lateral offset > 0",
                self.geometry.lateral_offset_m,
            ));
        }
        if self.sample_count() < 2 {
            return Err(Error::config("scenario yields fewer than 2 samples"));
        }
        if let Emission::Voltage { profile } = &self.emission {
            profile.validate()?;
        }
        Ok(())
    }

    /// Resolves the peak reference and returns the pass geometry together
    /// with the index of the peak sample (which may fall outside the trace
    /// when the peak time was given explicitly).
    pub fn resolve_geometry(&self) -> Result<(PassGeometry, i64)> {
        let g = &self.geometry;
        let peak_range_m = match g.peak_range_m {
            Some(r) => r,
            None => peak_range(&self.params, g.lateral_offset_m)?,
        };
        let n = self.sample_count() as i64;
        let (peak_time_s, peak_index) = match g.peak_time_s {
            Some(t) => (t, (t * self.sample_rate_hz).round() as i64),
            None => {
                let step = g.speed_mps / self.sample_rate_hz;
                let after = ((peak_range_m / step).ceil() as i64 - 1).max(0);
                let index = n - 1 - after;
                (index as f64 / self.sample_rate_hz, index)
            }
        };
        let geometry = PassGeometry::new(g.lateral_offset_m, g.speed_mps, peak_range_m, peak_time_s)?;
        Ok((geometry, peak_index))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetadata {
    pub rng: String,
    pub seed: u64,
    pub config: ScenarioConfig,
    pub geometry: PassGeometry,
    pub peak_index: Option<usize>,
    pub peak_distance_m: f64,
    pub peak_signal_dbw: f64,
    pub sample_count: usize,
    pub saturated_samples: usize,
}

impl ScenarioMetadata {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub trace: RawTrace,
    pub metadata: ScenarioMetadata,
}

/// Generates a constant-speed approach sampled at `t_i = i / rate`.
pub fn synthesize_passby(config: &ScenarioConfig) -> Result<Synthesis> {
    config.validate()?;
    let (geometry, peak_index) = config.resolve_geometry()?;
    let n = config.sample_count();
    let w = geometry.lateral_offset_m;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let ambient_w = config.ambient_power_dbw.map(from_db);
    let mut values = Vec::with_capacity(n);
    let mut saturated = 0;
    for i in 0..n {
        let t = i as f64 / config.sample_rate_hz;
        let range_m = geometry.time_to_range(t);
        if !(range_m > 0.0) {
            return Err(Error::config(format!(
                "sample {i} at t = {t} s lies at range {range_m} m, at or past the detector"
            )));
        }
        let signal_noise: f64 = StandardNormal.sample(&mut rng);
        let ambient_noise: f64 = StandardNormal.sample(&mut rng);
        let mut power_dbw = received_power_passby(&config.params, w, geometry.distance(range_m))?
            + config.noise_sigma_db * signal_noise;
        if let Some(ambient) = ambient_w {
            let total = from_db(power_dbw) + ambient + config.ambient_sigma_w * ambient_noise;
            power_dbw = to_db(total.max(f64::MIN_POSITIVE));
        }
        values.push(match &config.emission {
            Emission::PowerDbw => power_dbw,
            Emission::Voltage { profile } => {
                let reading = power_to_voltage(profile, from_db(power_dbw))?;
                if reading.saturated {
                    saturated += 1;
                }
                if config.adc_effects {
                    quantize(profile, reading.volts)
                } else {
                    reading.volts
                }
            }
        });
    }
    let unit = match config.emission {
        Emission::PowerDbw => Unit::PowerDbw,
        Emission::Voltage { .. } => Unit::Voltage,
    };
    let trace = RawTrace::from_uniform(0.0, config.sample_rate_hz, values, unit)?
        .with_metadata("rng", RNG_ALGORITHM)
        .with_metadata("seed", config.seed)
        .with_metadata("lateral_offset_m", w)
        .with_metadata("speed_mps", geometry.speed_mps);
    let peak_distance_m = geometry.distance(geometry.peak_range_m);
    let metadata = ScenarioMetadata {
        rng: RNG_ALGORITHM.to_owned(),
        seed: config.seed,
        config: *config,
        geometry,
        peak_index: usize::try_from(peak_index).ok().filter(|&i| i < n),
        peak_distance_m,
        peak_signal_dbw: received_power_passby(&config.params, w, peak_distance_m)?,
        sample_count: n,
        saturated_samples: saturated,
    };
    Ok(Synthesis { trace, metadata })
}

/// Constant-distance measurements, `samples_per_point` at 100 Hz for each distance.
pub fn synthesize_static(
    params: &ChannelParams,
    lateral_offset_m: f64,
    distances_m: &[f64],
    samples_per_point: usize,
    noise_sigma_db: f64,
    seed: u64,
) -> Result<Vec<(f64, RawTrace)>> {
    if samples_per_point == 0 {
        return Err(Error::config("samples_per_point must be >= 1"));
    }
    if !(noise_sigma_db >= 0.0) {
        return Err(Error::domain("noise sigma must be >= 0", noise_sigma_db));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    distances_m
        .iter()
        .map(|&d| {
            let model = received_power_passby(params, lateral_offset_m, d)?;
            let values = (0..samples_per_point)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    model + noise_sigma_db * z
                })
                .collect();
            let trace = RawTrace::from_uniform(0.0, SAMPLE_RATE_HZ, values, Unit::PowerDbw)?
                .with_metadata("rng", RNG_ALGORITHM)
                .with_metadata("seed", seed)
                .with_metadata("distance_m", d);
            Ok((d, trace))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbientStudyConfig {
    pub base: ScenarioConfig,
    /// Ambient level relative to the peak signal power, in dB; `None` is no ambient.
    pub offsets_db: Vec<Option<f64>>,
    /// Ambient fluctuation as a fraction of the ambient linear power.
    pub relative_fluctuation: f64,
    pub fit: FitConfig,
}

impl AmbientStudyConfig {
    /// Grid `{none, -10, 0, +10, +30}` dB on the noisy night pass-by.
    pub fn daylight_flattening(seed: u64) -> Self {
        Self {
            base: ScenarioConfig {
                noise_sigma_db: 0.5,
                seed,
                ..ScenarioConfig::night_passby()
            },
            offsets_db: vec![None, Some(-10.0), Some(0.0), Some(10.0), Some(30.0)],
            relative_fluctuation: 0.05,
            fit: FitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbientStudyRow {
    pub ambient_offset_db: Option<f64>,
    pub ambient_dbw: Option<f64>,
    pub gamma_hat: f64,
    pub k_db_hat: f64,
    pub rmse_db: f64,
}

/// Synthesizes, transforms and fits the pass-by at each ambient level.
///
/// Every cell uses the base seed and the scenario's own peak time for alignment.
pub fn ambient_floor_study(study: &AmbientStudyConfig) -> Result<Vec<AmbientStudyRow>> {
    if study.offsets_db.is_empty() {
        return Err(Error::config("ambient grid is empty"));
    }
    if !(study.relative_fluctuation >= 0.0) {
        return Err(Error::domain(
            "relative fluctuation must be >= 0",
            study.relative_fluctuation,
        ));
    }
    let base = ScenarioConfig {
        emission: Emission::PowerDbw,
        ambient_power_dbw: None,
        ambient_sigma_w: 0.0,
        ..study.base
    };
    base.validate()?;
    let (geometry, _) = base.resolve_geometry()?;
    let peak_signal_dbw = received_power_passby(
        &base.params,
        geometry.lateral_offset_m,
        geometry.distance(geometry.peak_range_m),
    )?;
    study
        .offsets_db
        .iter()
        .map(|&offset| {
            let ambient_dbw = offset.map(|o| peak_signal_dbw + o);
            let config = ScenarioConfig {
                ambient_power_dbw: ambient_dbw,
                ambient_sigma_w: ambient_dbw.map_or(0.0, |a| study.relative_fluctuation * from_db(a)),
                ..base
            };
            let synthesis = synthesize_passby(&config)?;
            let (distance_trace, _, _) = map_to_distance(&synthesis.trace, &synthesis.metadata.geometry)?;
            let report = fit(&distance_trace, &study.fit)?;
            Ok(AmbientStudyRow {
                ambient_offset_db: offset,
                ambient_dbw,
                gamma_hat: report.gamma_hat,
                k_db_hat: report.k_db_hat,
                rmse_db: report.rmse_db,
            })
        })
        .collect()
}
