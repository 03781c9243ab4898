//! Ordinary least squares estimation of `(K_dB, gamma)` on the log-distance line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{near_field_gain_db, regime_boundary, ChannelParams, DEFAULT_FAR_EPSILON};
use crate::trace::{is_degenerate, DistanceTrace};

/// Offset applied to the assumed order for the sensitivity re-fits.
pub const ORDER_SENSITIVITY_STEP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub epsilon: f64,
    pub use_correction: bool,
    pub min_points: usize,
    pub assumed_order_n: f64,
    /// Keep only points at or beyond this distance, instead of the epsilon
    /// far-regime test.
    #[serde(default)]
    pub min_distance_m: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_FAR_EPSILON,
            use_correction: false,
            min_points: 10,
            assumed_order_n: 1.0,
            min_distance_m: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::domain("epsilon must lie in (0, 1)", self.epsilon));
        }
        if self.min_points < 2 {
            return Err(Error::config(format!(
                "min_points must be >= 2, got {}",
                self.min_points
            )));
        }
        if !(self.assumed_order_n >= 0.0 && self.assumed_order_n.is_finite()) {
            return Err(Error::domain(
                "assumed Lambertian order must be >= 0",
                self.assumed_order_n,
            ));
        }
        if let Some(d) = self.min_distance_m {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::domain("minimum distance must be >= 0", d));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderSensitivity {
    pub order_low: f64,
    pub order_high: f64,
    pub gamma_delta_low: f64,
    pub gamma_delta_high: f64,
    pub k_db_delta_low: f64,
    pub k_db_delta_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub k_db_hat: f64,
    pub gamma_hat: f64,
    pub rmse_db: f64,
    pub r_squared: f64,
    pub n_used: usize,
    pub n_dropped_near: usize,
    pub n_dropped_degenerate: usize,
    pub regime_boundary_m: f64,
    pub lateral_offset_m: f64,
    pub config: FitConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_sensitivity: Option<OrderSensitivity>,
}

impl FitReport {
    pub fn model(&self) -> FittedModel {
        FittedModel {
            k_db: self.k_db_hat,
            gamma: self.gamma_hat,
            order_n: self.config.assumed_order_n,
            use_correction: self.config.use_correction,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Straight-line fit `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub rmse: f64,
    pub r_squared: f64,
}

/// Least squares line through `(x, y)` using centered sums.
pub fn ols_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::config("x and y differ in length"));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            available: x.len(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateDesign);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let r = yi - (intercept + slope * xi);
        ss_res += r * r;
        ss_tot += (yi - my) * (yi - my);
    }
    Ok(LineFit {
        intercept,
        slope,
        rmse: (ss_res / n).sqrt(),
        r_squared: r_squared(ss_res, ss_tot),
    })
}

fn r_squared(ss_res: f64, ss_tot: f64) -> f64 {
    if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    }
}

struct Selection {
    x: Vec<f64>,
    y: Vec<f64>,
    dropped_near: usize,
    dropped_degenerate: usize,
}

fn select(trace: &DistanceTrace, config: &FitConfig, correction_order: Option<f64>) -> Result<Selection> {
    let w = trace.lateral_offset_m();
    let mut sel = Selection {
        x: Vec::with_capacity(trace.len()),
        y: Vec::with_capacity(trace.len()),
        dropped_near: 0,
        dropped_degenerate: 0,
    };
    for p in trace.points() {
        let d = p.distance_m;
        if is_degenerate(w, d) {
            sel.dropped_degenerate += 1;
            continue;
        }
        let keep = match (config.min_distance_m, correction_order) {
            (Some(min_d), _) => d >= min_d,
            (None, Some(_)) => true,
            (None, None) => w * w <= config.epsilon * d * d,
        };
        if !keep {
            sel.dropped_near += 1;
            continue;
        }
        let correction = match correction_order {
            Some(order) => near_field_gain_db(order, w, d)?,
            None => 0.0,
        };
        sel.x.push(10.0 * d.log10());
        sel.y.push(p.power_dbw - correction);
    }
    if sel.x.len() < config.min_points {
        return Err(Error::InsufficientPoints {
            needed: config.min_points,
            available: sel.x.len(),
        });
    }
    Ok(sel)
}

fn run_fit(trace: &DistanceTrace, config: &FitConfig, correction_order: Option<f64>) -> Result<FitReport> {
    config.validate()?;
    let sel = select(trace, config, correction_order)?;
    let line = ols_line(&sel.x, &sel.y)?;
    let w = trace.lateral_offset_m();
    Ok(FitReport {
        k_db_hat: line.intercept,
        gamma_hat: -line.slope,
        rmse_db: line.rmse,
        r_squared: line.r_squared,
        n_used: sel.x.len(),
        n_dropped_near: sel.dropped_near,
        n_dropped_degenerate: sel.dropped_degenerate,
        regime_boundary_m: config
            .min_distance_m
            .unwrap_or_else(|| regime_boundary(w, config.epsilon)),
        lateral_offset_m: w,
        config: *config,
        order_sensitivity: None,
    })
}

/// Plain log-linear fit over the far-regime points.
pub fn fit_log_linear(trace: &DistanceTrace, config: &FitConfig) -> Result<FitReport> {
    let config = FitConfig {
        use_correction: false,
        ..*config
    };
    run_fit(trace, &config, None)
}

/// Fit after removing the near-field term for the assumed order; uses
/// near-regime points too.
pub fn fit_with_correction(trace: &DistanceTrace, config: &FitConfig) -> Result<FitReport> {
    let config = FitConfig {
        use_correction: true,
        ..*config
    };
    let n = config.assumed_order_n;
    let mut report = run_fit(trace, &config, Some(n))?;
    let order_low = (n - ORDER_SENSITIVITY_STEP).max(0.0);
    let order_high = n + ORDER_SENSITIVITY_STEP;
    let low = run_fit(trace, &config, Some(order_low))?;
    let high = run_fit(trace, &config, Some(order_high))?;
    report.order_sensitivity = Some(OrderSensitivity {
        order_low,
        order_high,
        gamma_delta_low: low.gamma_hat - report.gamma_hat,
        gamma_delta_high: high.gamma_hat - report.gamma_hat,
        k_db_delta_low: low.k_db_hat - report.k_db_hat,
        k_db_delta_high: high.k_db_hat - report.k_db_hat,
    });
    Ok(report)
}

/// Dispatches on `config.use_correction`.
pub fn fit(trace: &DistanceTrace, config: &FitConfig) -> Result<FitReport> {
    if config.use_correction {
        fit_with_correction(trace, config)
    } else {
        fit_log_linear(trace, config)
    }
}

/// Parameters needed to predict power from a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub k_db: f64,
    pub gamma: f64,
    pub order_n: f64,
    pub use_correction: bool,
}

impl FittedModel {
    pub fn from_params(params: &ChannelParams, use_correction: bool) -> Self {
        Self {
            k_db: params.k_db,
            gamma: params.gamma,
            order_n: params.lambertian_order,
            use_correction,
        }
    }

    /// Predicted dBW at distance `D`; the near-field term is applied only
    /// when the model uses correction.
    pub fn predict(&self, lateral_offset_m: f64, distance_m: f64) -> Result<f64> {
        if !(distance_m > 0.0) {
            return Err(Error::domain("distance must be > 0", distance_m));
        }
        let line = self.k_db - self.gamma * 10.0 * distance_m.log10();
        if self.use_correction && lateral_offset_m > 0.0 {
            Ok(line + near_field_gain_db(self.order_n, lateral_offset_m, distance_m)?)
        } else {
            Ok(line)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub distance_m: f64,
    pub observed_dbw: f64,
    pub predicted_dbw: f64,
    pub residual_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub n_points: usize,
    pub n_skipped_degenerate: usize,
    pub mean_residual_db: f64,
    pub rmse_db: f64,
    pub max_abs_residual_db: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub residuals: Vec<Residual>,
    pub summary: ResidualSummary,
}

/// Residuals `observed - predicted` for every non-degenerate point of `trace`.
pub fn evaluate_fit(model: &FittedModel, trace: &DistanceTrace) -> Result<Evaluation> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let w = trace.lateral_offset_m();
    let mut residuals = Vec::with_capacity(trace.len());
    let mut skipped = 0;
    for p in trace.points() {
        if model.use_correction && is_degenerate(w, p.distance_m) {
            skipped += 1;
            continue;
        }
        let predicted_dbw = model.predict(w, p.distance_m)?;
        residuals.push(Residual {
            distance_m: p.distance_m,
            observed_dbw: p.power_dbw,
            predicted_dbw,
            residual_db: p.power_dbw - predicted_dbw,
        });
    }
    if residuals.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let n = residuals.len() as f64;
    let mean_obs = residuals.iter().map(|r| r.observed_dbw).sum::<f64>() / n;
    let ss_res: f64 = residuals.iter().map(|r| r.residual_db * r.residual_db).sum();
    let ss_tot: f64 = residuals.iter().map(|r| (r.observed_dbw - mean_obs).powi(2)).sum();
    let summary = ResidualSummary {
        n_points: residuals.len(),
        n_skipped_degenerate: skipped,
        mean_residual_db: residuals.iter().map(|r| r.residual_db).sum::<f64>() / n,
        rmse_db: (ss_res / n).sqrt(),
        max_abs_residual_db: residuals.iter().map(|r| r.residual_db.abs()).fold(0.0, f64::max),
        r_squared: r_squared(ss_res, ss_tot),
    };
    Ok(Evaluation { residuals, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{received_power_passby, Preset};

    fn line_trace(d_db: &[f64], p: &[f64]) -> DistanceTrace {
        let d: Vec<f64> = d_db.iter().map(|x| 10f64.powf(x / 10.0)).collect();
        DistanceTrace::from_distances(0.0, &d, p).unwrap()
    }

    fn cfg(min_points: usize) -> FitConfig {
        FitConfig {
            min_points,
            ..FitConfig::default()
        }
    }

    #[test]
    fn two_point_line() {
        let r = fit_log_linear(&line_trace(&[10.0, 20.0], &[-45.0, -55.0]), &cfg(2)).unwrap();
        assert!((r.gamma_hat - 1.0).abs() < 1e-12);
        assert!((r.k_db_hat + 35.0).abs() < 1e-12);
        assert!(r.rmse_db < 1e-12);
        assert_eq!(r.n_used, 2);
    }

    #[test]
    fn insufficient_and_degenerate() {
        let t = line_trace(&[10.0, 20.0], &[-45.0, -55.0]);
        assert!(matches!(
            fit_log_linear(&t, &cfg(10)),
            Err(Error::InsufficientPoints {
                needed: 10,
                available: 2
            })
        ));
        let same = DistanceTrace::from_distances(0.0, &[5.0, 5.0, 5.0], &[-40.0, -41.0, -42.0]).unwrap();
        assert!(matches!(fit_log_linear(&same, &cfg(2)), Err(Error::DegenerateDesign)));
    }

    #[test]
    fn far_filter_counts_near_points() {
        let p = ChannelParams::preset(Preset::Night);
        let w = 2.0;
        let d: Vec<f64> = (0..60).map(|i| 3.0 + i as f64).collect();
        let pw: Vec<f64> = d.iter().map(|&x| received_power_passby(&p, w, x).unwrap()).collect();
        let t = DistanceTrace::from_distances(w, &d, &pw).unwrap();
        let r = fit_log_linear(&t, &FitConfig::default()).unwrap();
        // far iff D >= 20
        assert_eq!(r.n_dropped_near, 17);
        assert_eq!(r.n_used, 43);
        assert!((r.regime_boundary_m - 20.0).abs() < 1e-12);
        let m = fit_log_linear(
            &t,
            &FitConfig {
                min_distance_m: Some(10.0),
                ..FitConfig::default()
            },
        )
        .unwrap();
        assert_eq!(m.n_used, 53);
        assert_eq!(m.regime_boundary_m, 10.0);
    }

    #[test]
    fn correction_on_axis_equals_plain() {
        let p = ChannelParams::preset(Preset::Night);
        let d: Vec<f64> = (1..40).map(|i| i as f64 * 1.7).collect();
        let pw: Vec<f64> = d
            .iter()
            .enumerate()
            .map(|(i, &x)| p.far_field_power(x).unwrap() + (i as f64 * 0.7).sin())
            .collect();
        let t = DistanceTrace::from_distances(0.0, &d, &pw).unwrap();
        let a = fit_log_linear(&t, &FitConfig::default()).unwrap();
        let b = fit_with_correction(&t, &FitConfig::default()).unwrap();
        assert!((a.k_db_hat - b.k_db_hat).abs() < 1e-12);
        assert!((a.gamma_hat - b.gamma_hat).abs() < 1e-12);
        assert!((a.rmse_db - b.rmse_db).abs() < 1e-12);
        assert_eq!(a.n_used, b.n_used);
        assert!(b.config.use_correction && !a.config.use_correction);
        let s = b.order_sensitivity.unwrap();
        assert_eq!(s.gamma_delta_low, 0.0);
        assert_eq!(s.order_low, 0.5);
    }

    #[test]
    fn evaluate_constant_offset() {
        let p = ChannelParams::preset(Preset::Night);
        let d: Vec<f64> = (0..30).map(|i| 5.0 + 2.0 * i as f64).collect();
        let pw: Vec<f64> = d.iter().map(|&x| p.far_field_power(x).unwrap()).collect();
        let t = DistanceTrace::from_distances(0.0, &d, &pw).unwrap();
        let model = FittedModel::from_params(&p, false);
        let own = evaluate_fit(&model, &t).unwrap();
        assert!(own.summary.max_abs_residual_db <= 1e-9);
        let shifted = evaluate_fit(&model, &t.shifted(3.0)).unwrap();
        assert!((shifted.summary.mean_residual_db - 3.0).abs() < 1e-12);
        assert!((shifted.summary.rmse_db - 3.0).abs() < 1e-12);
    }

    #[test]
    fn report_json_round_trip() {
        let r = fit_log_linear(&line_trace(&[10.0, 12.0, 20.0], &[-45.0, -47.5, -55.0]), &cfg(2)).unwrap();
        let back = FitReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        for key in [
            "k_db_hat",
            "gamma_hat",
            "rmse_db",
            "r_squared",
            "n_used",
            "n_dropped_near",
            "n_dropped_degenerate",
            "regime_boundary_m",
            "config",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let t = line_trace(&[10.0, 20.0], &[-45.0, -55.0]);
        for bad in [
            FitConfig { epsilon: 0.0, ..cfg(2) },
            FitConfig { epsilon: 1.0, ..cfg(2) },
            FitConfig {
                min_points: 1,
                ..cfg(2)
            },
            FitConfig {
                assumed_order_n: -1.0,
                ..cfg(2)
            },
        ] {
            assert!(fit(&t, &bad).is_err());
        }
    }
}
