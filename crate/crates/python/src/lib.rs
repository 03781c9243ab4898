//! Python bindings for the `vlc_pathloss` crate.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use vlc_pathloss::fitting::{fit, FitConfig, FitReport as CoreFitReport};
use vlc_pathloss::model::{self, Preset};
use vlc_pathloss::radiometry::{self, DetectorProfile};
use vlc_pathloss::simulator::{synthesize_passby, ScenarioConfig, ScenarioGeometry};
use vlc_pathloss::trace::{
    transform_to_distance, DistanceTrace as CoreDistanceTrace, PeakAlignment, RawTrace, TransformConfig, Unit,
};

fn py_err(e: vlc_pathloss::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "ChannelParams", module = "vlcpl", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyChannelParams {
    inner: model::ChannelParams,
}

#[pymethods]
impl PyChannelParams {
    #[new]
    #[pyo3(signature = (k_db, gamma, n = 1.0))]
    fn new(k_db: f64, gamma: f64, n: f64) -> PyResult<Self> {
        let inner = model::ChannelParams::with_order(k_db, gamma, n).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// One of `night`, `daylight`, `night-fig4`, `daylight-fig5`.
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        let preset: Preset = name.parse().map_err(|e: vlc_pathloss::Error| py_err(e))?;
        Ok(Self {
            inner: model::ChannelParams::preset(preset),
        })
    }

    #[getter]
    fn k_db(&self) -> f64 {
        self.inner.k_db
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn n(&self) -> f64 {
        self.inner.lambertian_order
    }

    #[getter]
    fn half_angle_rad(&self) -> f64 {
        self.inner.half_angle_rad
    }

    fn far_field_power(&self, distance_m: f64) -> PyResult<f64> {
        self.inner.far_field_power(distance_m).map_err(py_err)
    }

    fn passby_power(&self, lateral_offset_m: f64, distance_m: f64) -> PyResult<f64> {
        model::received_power_passby(&self.inner, lateral_offset_m, distance_m).map_err(py_err)
    }

    fn peak_distance(&self, lateral_offset_m: f64) -> PyResult<f64> {
        model::peak_distance(&self.inner, lateral_offset_m).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "ChannelParams(k_db={}, gamma={}, n={})",
            self.inner.k_db, self.inner.gamma, self.inner.lambertian_order
        )
    }
}

#[pyclass(name = "FitReport", module = "vlcpl", frozen, skip_from_py_object)]
struct PyFitReport {
    inner: CoreFitReport,
}

#[pymethods]
impl PyFitReport {
    #[getter]
    fn k_db_hat(&self) -> f64 {
        self.inner.k_db_hat
    }

    #[getter]
    fn gamma_hat(&self) -> f64 {
        self.inner.gamma_hat
    }

    #[getter]
    fn rmse_db(&self) -> f64 {
        self.inner.rmse_db
    }

    #[getter]
    fn r_squared(&self) -> f64 {
        self.inner.r_squared
    }

    #[getter]
    fn n_used(&self) -> usize {
        self.inner.n_used
    }

    #[getter]
    fn n_dropped_near(&self) -> usize {
        self.inner.n_dropped_near
    }

    #[getter]
    fn regime_boundary_m(&self) -> f64 {
        self.inner.regime_boundary_m
    }

    fn predict(&self, lateral_offset_m: f64, distance_m: f64) -> PyResult<f64> {
        self.inner.model().predict(lateral_offset_m, distance_m).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "FitReport(k_db_hat={}, gamma_hat={}, rmse_db={}, n_used={})",
            self.inner.k_db_hat, self.inner.gamma_hat, self.inner.rmse_db, self.inner.n_used
        )
    }
}

#[pyfunction]
fn lambertian_order(half_angle_rad: f64) -> PyResult<f64> {
    model::lambertian_order(half_angle_rad).map_err(py_err)
}

#[pyfunction]
fn near_field_gain_db(n: f64, lateral_offset_m: f64, distance_m: f64) -> PyResult<f64> {
    model::near_field_gain_db(n, lateral_offset_m, distance_m).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (v_out, gain_db, exact = false))]
fn voltage_to_power_dbw(v_out: f64, gain_db: f64, exact: bool) -> PyResult<f64> {
    let profile = DetectorProfile::with_gain(gain_db).map_err(py_err)?;
    if exact {
        radiometry::voltage_to_power_dbw_exact(&profile, v_out).map_err(py_err)
    } else {
        radiometry::voltage_to_power_dbw(&profile, v_out).map_err(py_err)
    }
}

/// Synthesizes a pass-by power trace. Returns `(times, powers_dbw, metadata_json)`.
#[pyfunction]
#[pyo3(signature = (params, lateral_offset_m = 2.0, speed_mps = 8.9408, duration_s = 10.0, sample_rate_hz = 100.0, noise_sigma_db = 0.0, seed = 0, ambient_power_dbw = None))]
#[allow(clippy::too_many_arguments)]
fn simulate_passby(
    params: &PyChannelParams,
    lateral_offset_m: f64,
    speed_mps: f64,
    duration_s: f64,
    sample_rate_hz: f64,
    noise_sigma_db: f64,
    seed: u64,
    ambient_power_dbw: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<f64>, String)> {
    let config = ScenarioConfig {
        params: params.inner,
        geometry: ScenarioGeometry {
            lateral_offset_m,
            speed_mps,
            peak_range_m: None,
            peak_time_s: None,
        },
        duration_s,
        sample_rate_hz,
        noise_sigma_db,
        ambient_power_dbw,
        seed,
        ..ScenarioConfig::night_passby()
    };
    let s = synthesize_passby(&config).map_err(py_err)?;
    let meta = s.metadata.to_json().map_err(py_err)?;
    Ok((s.trace.times().to_vec(), s.trace.values().to_vec(), meta))
}

/// Maps a power trace to distance. Returns `(ranges, distances, powers_dbw)`.
#[pyfunction]
#[pyo3(signature = (times, powers_dbw, lateral_offset_m, speed_mps, peak_range_m, peak_time_s = None, smooth_window = 5))]
fn transform(
    times: Vec<f64>,
    powers_dbw: Vec<f64>,
    lateral_offset_m: f64,
    speed_mps: f64,
    peak_range_m: f64,
    peak_time_s: Option<f64>,
    smooth_window: usize,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let trace = RawTrace::new(times, powers_dbw, Unit::PowerDbw).map_err(py_err)?;
    let alignment = match peak_time_s {
        Some(peak_time_s) => PeakAlignment::Known { peak_time_s },
        None => PeakAlignment::Detect { smooth_window },
    };
    let config = TransformConfig {
        lateral_offset_m,
        speed_mps,
        peak_range_m,
        alignment,
    };
    let out = transform_to_distance(&trace, &config).map_err(py_err)?;
    let pts = out.trace.points();
    Ok((
        pts.iter().map(|p| p.range_m).collect(),
        pts.iter().map(|p| p.distance_m).collect(),
        pts.iter().map(|p| p.power_dbw).collect(),
    ))
}

/// Fits `(K_dB, gamma)` to distance-indexed powers.
#[pyfunction(name = "fit")]
#[pyo3(signature = (distances_m, powers_dbw, lateral_offset_m, correction = false, epsilon = 0.01, n = 1.0, min_points = 10, min_distance_m = None))]
#[allow(clippy::too_many_arguments)]
fn fit_trace(
    distances_m: Vec<f64>,
    powers_dbw: Vec<f64>,
    lateral_offset_m: f64,
    correction: bool,
    epsilon: f64,
    n: f64,
    min_points: usize,
    min_distance_m: Option<f64>,
) -> PyResult<PyFitReport> {
    let trace = CoreDistanceTrace::from_distances(lateral_offset_m, &distances_m, &powers_dbw).map_err(py_err)?;
    let config = FitConfig {
        epsilon,
        use_correction: correction,
        min_points,
        assumed_order_n: n,
        min_distance_m,
    };
    Ok(PyFitReport {
        inner: fit(&trace, &config).map_err(py_err)?,
    })
}

#[pymodule]
fn vlcpl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChannelParams>()?;
    m.add_class::<PyFitReport>()?;
    m.add_function(wrap_pyfunction!(lambertian_order, m)?)?;
    m.add_function(wrap_pyfunction!(near_field_gain_db, m)?)?;
    m.add_function(wrap_pyfunction!(voltage_to_power_dbw, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_passby, m)?)?;
    m.add_function(wrap_pyfunction!(transform, m)?)?;
    m.add_function(wrap_pyfunction!(fit_trace, m)?)?;
    Ok(())
}
