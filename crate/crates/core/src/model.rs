//! Closed-form Lambertian and simplified log-distance models for a
//! headlamp-to-photodetector link.
//!
//! Powers are in dBW unless a function name says otherwise. Angles are in
//! radians. The simplified model is
//!
//! ```text
//! P_dB(D) = K_dB - gamma * 10 log10(D) + 5 (n + 1) log10(1 - w^2 / D^2)
//! ```
//!
//! where the last term ([`near_field_correction`]) vanishes in the far
//! regime `w^2 / D^2 <= epsilon`.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default far-regime threshold on `w^2 / D^2` (D >= 10 w).
pub const DEFAULT_FAR_EPSILON: f64 = 0.01;

/// Tolerance for [`ChannelParams::check_consistency`].
pub const ORDER_CONSISTENCY_TOL: f64 = 1e-9;

/// Linear watts to dBW.
pub fn to_db(watts: f64) -> f64 {
    10.0 * watts.log10()
}

/// dBW to linear watts.
pub fn from_db(dbw: f64) -> f64 {
    10f64.powf(dbw / 10.0)
}

/// Lambertian order `n = -ln 2 / ln cos(half_angle)`.
pub fn lambertian_order(half_angle_rad: f64) -> Result<f64> {
    if !(half_angle_rad > 0.0 && half_angle_rad < FRAC_PI_2) {
        return Err(Error::domain("half-power angle must lie in (0, pi/2)", half_angle_rad));
    }
    Ok(-LN_2 / half_angle_rad.cos().ln())
}

/// Half-power semi-angle for a given Lambertian order (inverse of [`lambertian_order`]).
pub fn half_angle_for_order(order: f64) -> Result<f64> {
    if !(order > 0.0 && order.is_finite()) {
        return Err(Error::domain("Lambertian order must be finite and > 0", order));
    }
    Ok(0.5f64.powf(1.0 / order).acos())
}

/// Incidence angle `atan2(w, R)` for lateral offset `w` and range `R`.
pub fn incidence_angle(lateral_offset_m: f64, range_m: f64) -> Result<f64> {
    if lateral_offset_m < 0.0 || !lateral_offset_m.is_finite() {
        return Err(Error::domain(
            "lateral offset must be finite and >= 0",
            lateral_offset_m,
        ));
    }
    if range_m < 0.0 || !range_m.is_finite() {
        return Err(Error::domain("range must be finite and >= 0", range_m));
    }
    if lateral_offset_m == 0.0 && range_m == 0.0 {
        return Err(Error::DegenerateGeometry);
    }
    Ok(lateral_offset_m.atan2(range_m))
}

/// Near-field term `5 (n + 1) log10(1 - w^2 / D^2)` for a raw order `n >= 0`.
///
/// [`near_field_correction`] is the same term taken from a [`ChannelParams`].
pub fn near_field_gain_db(order: f64, lateral_offset_m: f64, distance_m: f64) -> Result<f64> {
    if !(order >= 0.0) {
        return Err(Error::domain("Lambertian order must be >= 0", order));
    }
    if !(lateral_offset_m >= 0.0) {
        return Err(Error::domain("lateral offset must be >= 0", lateral_offset_m));
    }
    if !(distance_m > lateral_offset_m) {
        return Err(Error::domain("distance must exceed the lateral offset", distance_m));
    }
    let ratio = lateral_offset_m / distance_m;
    // ln_1p keeps precision for small w/D
    Ok(5.0 * (order + 1.0) * (-ratio * ratio).ln_1p() / std::f64::consts::LN_10)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Far,
    Near,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Far => f.write_str("far"),
            Regime::Near => f.write_str("near"),
        }
    }
}

/// Far iff `w^2 / D^2 <= epsilon` (closed boundary).
pub fn classify_regime(lateral_offset_m: f64, distance_m: f64, epsilon: f64) -> Result<Regime> {
    if !(distance_m > 0.0) {
        return Err(Error::domain("distance must be > 0", distance_m));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain("epsilon must lie in (0, 1)", epsilon));
    }
    if !(lateral_offset_m >= 0.0) {
        return Err(Error::domain("lateral offset must be >= 0", lateral_offset_m));
    }
    Ok(
        if lateral_offset_m * lateral_offset_m <= epsilon * distance_m * distance_m {
            Regime::Far
        } else {
            Regime::Near
        },
    )
}

/// Smallest distance that still classifies as far: `w / sqrt(epsilon)`.
pub fn regime_boundary(lateral_offset_m: f64, epsilon: f64) -> f64 {
    lateral_offset_m / epsilon.sqrt()
}

/// Transmitter and detector quantities of the full Lambertian model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambertianSource {
    pub tx_power_w: f64,
    pub detector_area_m2: f64,
    pub half_angle_rad: f64,
}

impl LambertianSource {
    pub fn new(tx_power_w: f64, detector_area_m2: f64, half_angle_rad: f64) -> Result<Self> {
        if !(tx_power_w > 0.0) {
            return Err(Error::domain("transmit power must be > 0", tx_power_w));
        }
        if !(detector_area_m2 > 0.0) {
            return Err(Error::domain("detector area must be > 0", detector_area_m2));
        }
        lambertian_order(half_angle_rad)?;
        Ok(Self {
            tx_power_w,
            detector_area_m2,
            half_angle_rad,
        })
    }

    pub fn order(&self) -> Result<f64> {
        lambertian_order(self.half_angle_rad)
    }

    /// Linear model constant `K = (n + 1) A_R P_t / (2 pi)`.
    pub fn k_linear(&self) -> Result<f64> {
        let n = self.order()?;
        Ok((n + 1.0) * self.detector_area_m2 * self.tx_power_w / (2.0 * PI))
    }

    pub fn k_db(&self) -> Result<f64> {
        Ok(to_db(self.k_linear()?))
    }
}

/// Received power in watts from the generalized Lambertian model with
/// separate irradiance and incidence angles.
pub fn received_power_lambertian(
    source: &LambertianSource,
    gamma: f64,
    distance_m: f64,
    irradiance_rad: f64,
    incidence_rad: f64,
) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::domain("distance must be > 0", distance_m));
    }
    if !(0.0..FRAC_PI_2).contains(&irradiance_rad) {
        return Err(Error::domain("irradiance angle must lie in [0, pi/2)", irradiance_rad));
    }
    if !(incidence_rad >= 0.0) {
        return Err(Error::domain("incidence angle must be >= 0", incidence_rad));
    }
    if incidence_rad >= source.half_angle_rad {
        return Err(Error::OutOfFieldOfView {
            incidence_rad,
            half_angle_rad: source.half_angle_rad,
        });
    }
    let n = source.order()?;
    Ok(source.k_linear()? * distance_m.powf(-gamma) * irradiance_rad.cos().powf(n) * incidence_rad.cos())
}

/// Simplified channel: `(K_dB, gamma)` plus the Lambertian order used by the
/// cosine terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub k_db: f64,
    pub gamma: f64,
    pub lambertian_order: f64,
    pub half_angle_rad: f64,
}

impl ChannelParams {
    /// Builds from a Lambertian order; the half-angle is derived from it.
    pub fn with_order(k_db: f64, gamma: f64, lambertian_order: f64) -> Result<Self> {
        check_finite("K_dB", k_db)?;
        check_finite("gamma", gamma)?;
        let half_angle_rad = half_angle_for_order(lambertian_order)?;
        Ok(Self {
            k_db,
            gamma,
            lambertian_order,
            half_angle_rad,
        })
    }

    /// Builds from a half-power semi-angle; the order is derived from it.
    pub fn with_half_angle(k_db: f64, gamma: f64, half_angle_rad: f64) -> Result<Self> {
        check_finite("K_dB", k_db)?;
        check_finite("gamma", gamma)?;
        Ok(Self {
            k_db,
            gamma,
            lambertian_order: lambertian_order(half_angle_rad)?,
            half_angle_rad,
        })
    }

    /// Builds `K_dB` from transmitter power, detector area and source order.
    pub fn from_source(source: &LambertianSource, gamma: f64) -> Result<Self> {
        Self::with_half_angle(source.k_db()?, gamma, source.half_angle_rad)
    }

    /// `|n - n(half_angle)|`.
    pub fn order_mismatch(&self) -> Result<f64> {
        Ok((self.lambertian_order - lambertian_order(self.half_angle_rad)?).abs())
    }

    /// Fails if the stored order and half-angle disagree by more than 1e-9.
    pub fn check_consistency(&self) -> Result<()> {
        let mismatch = self.order_mismatch()?;
        if mismatch > ORDER_CONSISTENCY_TOL {
            return Err(Error::config(format!(
                "Lambertian order {} inconsistent with half-angle {} rad (mismatch {mismatch:e})",
                self.lambertian_order, self.half_angle_rad
            )));
        }
        Ok(())
    }

    /// Difference between the stored `K_dB` and the one implied by `source`.
    pub fn k_db_mismatch(&self, source: &LambertianSource) -> Result<f64> {
        Ok(self.k_db - source.k_db()?)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    /// Far-branch line `K_dB - gamma * 10 log10(D)`.
    pub fn far_field_power(&self, distance_m: f64) -> Result<f64> {
        if !(distance_m > 0.0) {
            return Err(Error::domain("distance must be > 0", distance_m));
        }
        Ok(self.k_db - self.gamma * 10.0 * distance_m.log10())
    }

    pub fn preset(preset: Preset) -> Self {
        let (k_db, gamma) = preset.values();
        Self::with_order(k_db, gamma, 1.0).expect("preset values are valid")
    }
}

fn check_finite(what: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(what, value))
    }
}

/// Received power (dBW) for aligned transmitter and receiver (irradiance = incidence).
pub fn received_power_aligned(params: &ChannelParams, distance_m: f64, incidence_rad: f64) -> Result<f64> {
    if !(0.0..FRAC_PI_2).contains(&incidence_rad) {
        return Err(Error::domain("incidence angle must lie in [0, pi/2)", incidence_rad));
    }
    let far = params.far_field_power(distance_m)?;
    Ok(far + 10.0 * (params.lambertian_order + 1.0) * incidence_rad.cos().log10())
}

/// `G_dB = 5 (n + 1) log10(1 - w^2 / D^2)`; always <= 0.
pub fn near_field_correction(params: &ChannelParams, lateral_offset_m: f64, distance_m: f64) -> Result<f64> {
    near_field_gain_db(params.lambertian_order, lateral_offset_m, distance_m)
}

/// Received power (dBW) during a pass-by at lateral offset `w`.
pub fn received_power_passby(params: &ChannelParams, lateral_offset_m: f64, distance_m: f64) -> Result<f64> {
    let correction = near_field_correction(params, lateral_offset_m, distance_m)?;
    Ok(params.far_field_power(distance_m)? + correction)
}

/// Distance maximizing [`received_power_passby`]: `w sqrt(1 + (n + 1) / gamma)`.
pub fn peak_distance(params: &ChannelParams, lateral_offset_m: f64) -> Result<f64> {
    if !(params.gamma > 0.0) {
        return Err(Error::UndefinedPeak { gamma: params.gamma });
    }
    if !(lateral_offset_m > 0.0 && lateral_offset_m.is_finite()) {
        return Err(Error::domain(
            "lateral offset must be > 0 for a pass-by peak",
            lateral_offset_m,
        ));
    }
    Ok(lateral_offset_m * (1.0 + (params.lambertian_order + 1.0) / params.gamma).sqrt())
}

/// Range at which the pass-by peak occurs: `w sqrt((n + 1) / gamma)`.
pub fn peak_range(params: &ChannelParams, lateral_offset_m: f64) -> Result<f64> {
    peak_distance(params, lateral_offset_m)?;
    Ok(lateral_offset_m * ((params.lambertian_order + 1.0) / params.gamma).sqrt())
}

/// Straight-line pass-by of a vehicle at constant speed and lateral offset.
///
/// The range `R` shrinks as the vehicle approaches; the peak reference
/// `(peak_time_s, peak_range_m)` anchors time to range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassGeometry {
    pub lateral_offset_m: f64,
    pub speed_mps: f64,
    pub peak_range_m: f64,
    pub peak_time_s: f64,
}

impl PassGeometry {
    pub fn new(lateral_offset_m: f64, speed_mps: f64, peak_range_m: f64, peak_time_s: f64) -> Result<Self> {
        if !(lateral_offset_m >= 0.0 && lateral_offset_m.is_finite()) {
            return Err(Error::domain(
                "lateral offset must be finite and >= 0",
                lateral_offset_m,
            ));
        }
        if !(speed_mps > 0.0 && speed_mps.is_finite()) {
            return Err(Error::domain("speed must be finite and > 0", speed_mps));
        }
        if !(peak_range_m >= 0.0 && peak_range_m.is_finite()) {
            return Err(Error::domain("peak range must be finite and >= 0", peak_range_m));
        }
        check_finite("peak time", peak_time_s)?;
        Ok(Self {
            lateral_offset_m,
            speed_mps,
            peak_range_m,
            peak_time_s,
        })
    }

    /// `R_i = R_peak + V (T_peak - t_i)`.
    pub fn time_to_range(&self, t_s: f64) -> f64 {
        self.peak_range_m + self.speed_mps * (self.peak_time_s - t_s)
    }

    pub fn range_to_time(&self, range_m: f64) -> f64 {
        self.peak_time_s - (range_m - self.peak_range_m) / self.speed_mps
    }

    /// `D = sqrt(R^2 + w^2)`.
    pub fn distance(&self, range_m: f64) -> f64 {
        range_m.hypot(self.lateral_offset_m)
    }

    pub fn incidence(&self, range_m: f64) -> Result<f64> {
        incidence_angle(self.lateral_offset_m, range_m)
    }
}

/// Range of a sample at time `t_s` for the given pass-by.
pub fn time_to_range(geometry: &PassGeometry, t_s: f64) -> f64 {
    geometry.time_to_range(t_s)
}

/// Named parameter sets measured for the headlamp link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Night pass-by fit.
    Night,
    /// Sunny-daylight pass-by fit.
    Daylight,
    /// Linear-region expression drawn with the night plot.
    NightFig4,
    /// Linear-region expression drawn with the daylight plot.
    DaylightFig5,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Night, Preset::Daylight, Preset::NightFig4, Preset::DaylightFig5];

    /// `(K_dB, gamma)`.
    pub fn values(self) -> (f64, f64) {
        match self {
            Preset::Night => (-35.2680, 0.9707),
            Preset::Daylight => (-32.6335, 0.0175),
            Preset::NightFig4 => (-32.84, 1.173),
            Preset::DaylightFig5 => (-32.63, -0.01793),
        }
    }

    /// Default dB-domain measurement noise for simulations of this environment.
    pub fn default_noise_db(self) -> f64 {
        match self {
            Preset::Night | Preset::NightFig4 => 0.5,
            Preset::Daylight | Preset::DaylightFig5 => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Night => "night",
            Preset::Daylight => "daylight",
            Preset::NightFig4 => "night-fig4",
            Preset::DaylightFig5 => "daylight-fig5",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::config(format!("unknown preset '{s}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

    fn night() -> ChannelParams {
        ChannelParams::preset(Preset::Night)
    }

    #[test]
    fn order_at_sixty_degrees_is_one() {
        assert!((lambertian_order(FRAC_PI_3).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn order_at_thirty_degrees() {
        // mpmath, 30 digits
        let expected = 4.818_841_679_306_418;
        assert!((lambertian_order(FRAC_PI_6).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn order_tends_to_zero_near_right_angle() {
        let n = lambertian_order(FRAC_PI_2 - 1e-9).unwrap();
        assert!(n > 0.0 && n < 0.04);
        assert!(lambertian_order(FRAC_PI_2).is_err());
        assert!(lambertian_order(0.0).is_err());
        assert!(lambertian_order(-0.1).is_err());
    }

    #[test]
    fn half_angle_inverts_order() {
        for &phi in &[0.1, 0.5, FRAC_PI_6, FRAC_PI_3, 1.4] {
            let n = lambertian_order(phi).unwrap();
            assert!((half_angle_for_order(n).unwrap() - phi).abs() < 1e-12);
        }
    }

    #[test]
    fn incidence_examples() {
        assert_eq!(incidence_angle(0.0, 10.0).unwrap(), 0.0);
        assert!((incidence_angle(5.0, 5.0).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert!((incidence_angle(1.0, 3f64.sqrt()).unwrap() - FRAC_PI_6).abs() < 1e-15);
        assert!(matches!(incidence_angle(0.0, 0.0), Err(Error::DegenerateGeometry)));
    }

    #[test]
    fn lambertian_substitution() {
        // A_R * P_t = 2 pi, n = 1, gamma = 2, D = 1, on-axis
        let src = LambertianSource::new(2.0 * PI, 1.0, FRAC_PI_3).unwrap();
        let p = received_power_lambertian(&src, 2.0, 1.0, 0.0, 0.0).unwrap();
        assert!((p - 2.0).abs() < 1e-12);
        let p2 = received_power_lambertian(&src, 2.0, 2.0, 0.0, 0.0).unwrap();
        assert!((p2 / p - 0.25).abs() < 1e-12);
    }

    #[test]
    fn lambertian_rejects_outside_fov() {
        let src = LambertianSource::new(20.0, 1e-5, FRAC_PI_6).unwrap();
        assert!(matches!(
            received_power_lambertian(&src, 2.0, 5.0, 0.0, FRAC_PI_6),
            Err(Error::OutOfFieldOfView { .. })
        ));
        assert!(received_power_lambertian(&src, 2.0, 0.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn lambertian_matches_aligned_when_angles_equal() {
        let src = LambertianSource::new(20.0, 10e-6, FRAC_PI_3).unwrap();
        let params = ChannelParams::from_source(&src, 1.7).unwrap();
        for &theta in &[0.0, 0.2, 0.7, 1.0] {
            let watts = received_power_lambertian(&src, 1.7, 7.5, theta, theta).unwrap();
            let dbw = received_power_aligned(&params, 7.5, theta).unwrap();
            assert!((to_db(watts) - dbw).abs() < 1e-9);
        }
    }

    #[test]
    fn aligned_night_at_ten_metres() {
        let p = received_power_aligned(&night(), 10.0, 0.0).unwrap();
        assert!((p - (-44.9750)).abs() < 1e-9);
        assert_eq!(received_power_aligned(&night(), 1.0, 0.0).unwrap(), night().k_db);
        assert!(received_power_aligned(&night(), 1.0, FRAC_PI_2).is_err());
    }

    #[test]
    fn near_field_examples() {
        let p = ChannelParams::with_order(0.0, 1.0, 1.0).unwrap();
        assert_eq!(near_field_correction(&p, 0.0, 3.0).unwrap(), 0.0);
        // 10 log10(0.5), 10 log10(0.99)
        let half = near_field_correction(&p, 1.0, 2f64.sqrt()).unwrap();
        assert!((half - (-3.010_299_956_639_812)).abs() < 1e-9);
        let small = near_field_correction(&p, 1.0, 10.0).unwrap();
        assert!((small - (-0.043_648_054_024_500_85)).abs() < 1e-12);
        assert!(near_field_correction(&p, 2.0, 2.0).is_err());
        assert!(near_field_correction(&p, 3.0, 2.0).is_err());
    }

    #[test]
    fn passby_night_example() {
        // -35.2680 - 0.9707 * 10 log10(20) + 10 log10(0.99), mpmath
        let p = received_power_passby(&night(), 2.0, 20.0).unwrap();
        assert!((p - (-47.940_746_221_934_77)).abs() < 1e-9);
    }

    #[test]
    fn passby_reduces_to_far_line_on_axis() {
        let p = night();
        for &d in &[0.5, 1.0, 12.0, 80.0] {
            assert_eq!(
                received_power_passby(&p, 0.0, d).unwrap(),
                p.far_field_power(d).unwrap()
            );
        }
    }

    #[test]
    fn passby_matches_aligned_geometry() {
        let p = ChannelParams::with_order(-30.0, 2.1, 3.3).unwrap();
        let w: f64 = 2.5;
        for &r in &[0.3f64, 1.0, 4.0, 40.0] {
            let d = r.hypot(w);
            let theta = incidence_angle(w, r).unwrap();
            let a = received_power_aligned(&p, d, theta).unwrap();
            let b = received_power_passby(&p, w, d).unwrap();
            assert!((a - b).abs() < 1e-9, "r={r}: {a} vs {b}");
        }
    }

    #[test]
    fn passby_matches_lambertian_from_source() {
        let src = LambertianSource::new(20.0, 10e-6, FRAC_PI_3).unwrap();
        let gamma = 0.9707;
        let params = ChannelParams::from_source(&src, gamma).unwrap();
        let w = 2.0;
        for &r in &[4.0f64, 8.0, 15.0] {
            let d = r.hypot(w);
            let theta = incidence_angle(w, r).unwrap();
            let watts = received_power_lambertian(&src, gamma, d, theta, theta).unwrap();
            let dbw = received_power_passby(&params, w, d).unwrap();
            assert!((to_db(watts) - dbw).abs() < 1e-9);
        }
        assert!(params.k_db_mismatch(&src).unwrap().abs() < 1e-12);
    }

    #[test]
    fn regime_examples() {
        assert_eq!(classify_regime(1.0, 100.0, 0.01).unwrap(), Regime::Far);
        assert_eq!(classify_regime(5.0, 10.0, 0.01).unwrap(), Regime::Near);
        // 0.25^2 = 0.0625 exactly representable
        assert_eq!(classify_regime(0.25, 1.0, 0.0625).unwrap(), Regime::Far);
        assert!(classify_regime(1.0, 0.0, 0.01).is_err());
        assert!(classify_regime(1.0, 10.0, 1.0).is_err());
    }

    #[test]
    fn peak_distance_examples() {
        let p = ChannelParams::with_order(0.0, 1.0, 1.0).unwrap();
        assert!((peak_distance(&p, 1.0).unwrap() - 3f64.sqrt()).abs() < 1e-12);
        assert!((peak_distance(&p, 2.0).unwrap() - 2.0 * peak_distance(&p, 1.0).unwrap()).abs() < 1e-12);
        // closed form via mpmath; 1e-5 m grid argmax agrees (3.49878)
        assert!((peak_distance(&night(), 2.0).unwrap() - 3.498_781_962_921_540_5).abs() < 1e-12);
        let day = ChannelParams::preset(Preset::DaylightFig5);
        assert!(matches!(peak_distance(&day, 1.0), Err(Error::UndefinedPeak { .. })));
        assert!(peak_distance(&night(), 0.0).is_err());
    }

    #[test]
    fn peak_range_consistent_with_distance() {
        let p = night();
        let d = peak_distance(&p, 2.0).unwrap();
        let r = peak_range(&p, 2.0).unwrap();
        assert!((r * r + 4.0 - d * d).abs() < 1e-12);
    }

    #[test]
    fn consistency_check_reports_mismatch() {
        let mut p = ChannelParams::with_half_angle(-30.0, 1.0, FRAC_PI_6).unwrap();
        assert!(p.check_consistency().is_ok());
        p.lambertian_order += 1e-6;
        assert!(p.check_consistency().is_err());
    }

    #[test]
    fn geometry_maps_time_to_range() {
        let g = PassGeometry::new(2.0, 8.9408, 5.0, 3.0).unwrap();
        assert_eq!(g.time_to_range(3.0), 5.0);
        assert!((g.time_to_range(2.0) - 13.9408).abs() < 1e-12);
        let step = g.time_to_range(1.00) - g.time_to_range(1.01);
        assert!((step - 0.089408).abs() < 1e-12);
        assert!((g.range_to_time(g.time_to_range(0.37)) - 0.37).abs() < 1e-12);
        assert!(g.distance(0.0) == 2.0);
        assert!(PassGeometry::new(2.0, -1.0, 5.0, 0.0).is_err());
        assert!(PassGeometry::new(-2.0, 1.0, 5.0, 0.0).is_err());
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("dusk".parse::<Preset>().is_err());
    }
}
