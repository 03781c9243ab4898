//! Raw and distance-indexed traces, the pass-by time-to-distance transform
//! and static-point averaging.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{from_db, to_db, PassGeometry};

/// Largest allowed deviation of a sample interval from the mean interval.
pub const TIMESTAMP_TOLERANCE_S: f64 = 1e-9;

/// Default centered moving-average window for peak detection, in samples.
pub const DEFAULT_SMOOTH_WINDOW: usize = 5;

/// Samples with `w^2 / D^2` at or above `1 - DEGENERATE_MARGIN` are dropped.
pub const DEGENERATE_MARGIN: f64 = 1e-12;

/// Unit of the value column, named after its CSV header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    #[serde(rename = "voltage_v")]
    Voltage,
    #[serde(rename = "power_dbw")]
    PowerDbw,
}

impl Unit {
    pub fn column(self) -> &'static str {
        match self {
            Unit::Voltage => "voltage_v",
            Unit::PowerDbw => "power_dbw",
        }
    }

    fn from_column(name: &str) -> Option<Self> {
        match name {
            "voltage_v" => Some(Unit::Voltage),
            "power_dbw" => Some(Unit::PowerDbw),
            _ => None,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

/// Uniformly sampled time series of detector voltages or received powers.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTrace {
    sample_rate_hz: f64,
    times: Vec<f64>,
    values: Vec<f64>,
    unit: Unit,
    pub metadata: BTreeMap<String, String>,
}

impl RawTrace {
    /// Builds from explicit timestamps; the rate is inferred from them.
    pub fn new(times: Vec<f64>, values: Vec<f64>, unit: Unit) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::config(format!(
                "{} timestamps but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::TooShort {
                len: times.len(),
                min: 2,
            });
        }
        check_values(&values)?;
        let span = times[times.len() - 1] - times[0];
        let step = span / (times.len() - 1) as f64;
        for (i, pair) in times.windows(2).enumerate() {
            let dt = pair[1] - pair[0];
            if !(dt > 0.0) || !((dt - step).abs() <= TIMESTAMP_TOLERANCE_S) {
                return Err(Error::NonUniformTimestamps { index: i + 1 });
            }
        }
        Ok(Self {
            sample_rate_hz: 1.0 / step,
            times,
            values,
            unit,
            metadata: BTreeMap::new(),
        })
    }

    /// Builds a trace sampled at `t_i = start + i / rate`. A single sample is allowed.
    pub fn from_uniform(start_s: f64, sample_rate_hz: f64, values: Vec<f64>, unit: Unit) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::domain("sample rate must be finite and > 0", sample_rate_hz));
        }
        if !start_s.is_finite() {
            return Err(Error::domain("start time must be finite", start_s));
        }
        if values.is_empty() {
            return Err(Error::EmptyTrace);
        }
        check_values(&values)?;
        let times = (0..values.len()).map(|i| start_s + i as f64 / sample_rate_hz).collect();
        Ok(Self {
            sample_rate_hz,
            times,
            values,
            unit,
            metadata: BTreeMap::new(),
        })
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    pub fn require_unit(&self, expected: Unit) -> Result<()> {
        if self.unit == expected {
            Ok(())
        } else {
            Err(Error::UnitMismatch {
                expected,
                found: self.unit,
            })
        }
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["time_s", self.unit.column()]).map_err(csv_io)?;
        for (t, v) in self.samples() {
            out.write_record([t.to_string(), v.to_string()]).map_err(csv_io)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(&v) => Err(Error::domain("trace values must be finite", v)),
        None => Ok(()),
    }
}

fn csv_io(err: csv::Error) -> Error {
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Parse {
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

fn csv_parse(err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        csv::ErrorKind::UnequalLengths { len, expected_len, .. } => Error::Parse {
            line,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        csv::ErrorKind::Utf8 { err, .. } => Error::Parse {
            line,
            message: err.to_string(),
        },
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

type NumericRows = Vec<(u64, Vec<f64>)>;

/// Reads the header and numeric rows of a CSV file. Returns the header and
/// `(line, row)` pairs.
fn read_numeric_csv<R: Read>(reader: R) -> Result<(Vec<String>, NumericRows)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(csv_parse)?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_parse)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    message: format!("'{field}': {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line, row));
    }
    Ok((header, rows))
}

/// Rows of a raw trace file without the uniformity checks of [`RawTrace`].
#[derive(Debug, Clone, PartialEq)]
pub struct RawRows {
    pub unit: Unit,
    pub rows: Vec<(f64, f64)>,
}

pub fn read_raw_rows<R: Read>(reader: R) -> Result<RawRows> {
    let (header, rows) = read_numeric_csv(reader)?;
    let unit = match header.as_slice() {
        [t, v] if t == "time_s" => Unit::from_column(v),
        _ => None,
    }
    .ok_or_else(|| Error::Parse {
        line: 1,
        message: format!(
            "expected header 'time_s,voltage_v' or 'time_s,power_dbw', found '{}'",
            header.join(",")
        ),
    })?;
    let rows = rows.into_iter().map(|(_, r)| (r[0], r[1])).collect();
    Ok(RawRows { unit, rows })
}

pub fn read_trace_csv<R: Read>(reader: R) -> Result<RawTrace> {
    let RawRows { unit, rows } = read_raw_rows(reader)?;
    let (times, values) = rows.into_iter().unzip();
    RawTrace::new(times, values, unit)
}

pub fn load_trace_csv(path: impl AsRef<Path>) -> Result<RawTrace> {
    read_trace_csv(std::fs::File::open(path)?)
}

/// Index into `values` of the maximum of its centered moving average.
///
/// The window is truncated at the edges. Ties resolve to the earliest index.
pub fn smoothed_argmax(values: &[f64], smooth_window: usize) -> Result<usize> {
    if values.is_empty() {
        return Err(Error::EmptyTrace);
    }
    if smooth_window == 0 || smooth_window.is_multiple_of(2) || smooth_window > values.len() {
        return Err(Error::InvalidWindow {
            window: smooth_window,
            len: values.len(),
        });
    }
    let half = smooth_window / 2;
    let smoothed = moving_average(values, half);
    let mut best = 0;
    for (i, &v) in smoothed.iter().enumerate() {
        if v > smoothed[best] {
            best = i;
        }
    }
    Ok(best)
}

fn moving_average(values: &[f64], half: usize) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub time_s: f64,
}

/// Locates the received-power peak of a pass-by.
pub fn detect_peak(trace: &RawTrace, smooth_window: usize) -> Result<Peak> {
    let index = smoothed_argmax(trace.values(), smooth_window)?;
    Ok(Peak {
        index,
        time_s: trace.times()[index],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistancePoint {
    pub range_m: f64,
    pub distance_m: f64,
    pub power_dbw: f64,
}

/// Received power indexed by distance, ordered by increasing distance.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTrace {
    lateral_offset_m: f64,
    points: Vec<DistancePoint>,
}

impl DistanceTrace {
    /// Validates `D = sqrt(R^2 + w^2)` for every point and sorts by distance.
    pub fn new(lateral_offset_m: f64, mut points: Vec<DistancePoint>) -> Result<Self> {
        if !(lateral_offset_m >= 0.0 && lateral_offset_m.is_finite()) {
            return Err(Error::domain(
                "lateral offset must be finite and >= 0",
                lateral_offset_m,
            ));
        }
        for p in &points {
            if !(p.range_m >= 0.0) || !p.power_dbw.is_finite() {
                return Err(Error::config(format!("invalid distance point {p:?}")));
            }
            let expected = p.range_m.hypot(lateral_offset_m);
            if !((p.distance_m - expected).abs() <= 1e-9 * expected.max(1.0)) {
                return Err(Error::config(format!(
                    "distance {} inconsistent with range {} and offset {lateral_offset_m}",
                    p.distance_m, p.range_m
                )));
            }
        }
        points.sort_by(|a, b| a.distance_m.total_cmp(&b.distance_m));
        Ok(Self {
            lateral_offset_m,
            points,
        })
    }

    /// Builds from distances; ranges are derived as `sqrt(D^2 - w^2)`.
    pub fn from_distances(lateral_offset_m: f64, distances_m: &[f64], powers_dbw: &[f64]) -> Result<Self> {
        if distances_m.len() != powers_dbw.len() {
            return Err(Error::config("distances and powers differ in length"));
        }
        let points = distances_m
            .iter()
            .zip(powers_dbw)
            .map(|(&d, &p)| {
                if !(d >= lateral_offset_m) {
                    return Err(Error::domain("distance must be >= lateral offset", d));
                }
                Ok(DistancePoint {
                    range_m: ((d - lateral_offset_m) * (d + lateral_offset_m)).sqrt(),
                    distance_m: d,
                    power_dbw: p,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(lateral_offset_m, points)
    }

    pub fn lateral_offset_m(&self) -> f64 {
        self.lateral_offset_m
    }

    pub fn points(&self) -> &[DistancePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same points with every power shifted by `offset_db`.
    pub fn shifted(&self, offset_db: f64) -> Self {
        let points = self
            .points
            .iter()
            .map(|p| DistancePoint {
                power_dbw: p.power_dbw + offset_db,
                ..*p
            })
            .collect();
        Self {
            lateral_offset_m: self.lateral_offset_m,
            points,
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["range_m", "distance_m", "power_dbw"])
            .map_err(csv_io)?;
        for p in &self.points {
            out.write_record([p.range_m.to_string(), p.distance_m.to_string(), p.power_dbw.to_string()])
                .map_err(csv_io)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Reads a `range_m,distance_m,power_dbw` file.
///
/// Without an explicit offset, `w` is recovered as the mean of `sqrt(D^2 - R^2)`.
pub fn read_distance_csv<R: Read>(reader: R, lateral_offset_m: Option<f64>) -> Result<DistanceTrace> {
    let (header, rows) = read_numeric_csv(reader)?;
    if header != ["range_m", "distance_m", "power_dbw"] {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header 'range_m,distance_m,power_dbw', found '{}'",
                header.join(",")
            ),
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let points: Vec<DistancePoint> = rows
        .into_iter()
        .map(|(_, r)| DistancePoint {
            range_m: r[0],
            distance_m: r[1],
            power_dbw: r[2],
        })
        .collect();
    let w = match lateral_offset_m {
        Some(w) => w,
        None => {
            let sum: f64 = points
                .iter()
                .map(|p| {
                    ((p.distance_m - p.range_m) * (p.distance_m + p.range_m))
                        .max(0.0)
                        .sqrt()
                })
                .sum();
            sum / points.len() as f64
        }
    };
    DistanceTrace::new(w, points)
}

pub fn load_distance_csv(path: impl AsRef<Path>, lateral_offset_m: Option<f64>) -> Result<DistanceTrace> {
    read_distance_csv(std::fs::File::open(path)?, lateral_offset_m)
}

/// How the peak time used by the range mapping is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PeakAlignment {
    /// Smoothed-maximum detection on the trace itself.
    Detect { smooth_window: usize },
    /// A peak time known from elsewhere (e.g. simulation ground truth).
    Known { peak_time_s: f64 },
}

impl Default for PeakAlignment {
    fn default() -> Self {
        PeakAlignment::Detect {
            smooth_window: DEFAULT_SMOOTH_WINDOW,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformConfig {
    pub lateral_offset_m: f64,
    pub speed_mps: f64,
    pub peak_range_m: f64,
    pub alignment: PeakAlignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSummary {
    pub geometry: PassGeometry,
    pub alignment: PeakAlignment,
    /// Index of the peak sample when detected.
    pub peak_index: Option<usize>,
    pub peak_time_s: f64,
    pub n_input: usize,
    pub n_kept: usize,
    pub n_dropped_behind: usize,
    pub n_dropped_degenerate: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformOutput {
    pub trace: DistanceTrace,
    pub summary: TransformSummary,
}

/// Maps each sample through `R_i = R_peak + V (T_peak - t_i)` and
/// `D_i = sqrt(R_i^2 + w^2)`, using the geometry's peak time as given.
///
/// Samples with `R_i < 0` or a degenerate `w / D` are dropped and counted.
pub fn map_to_distance(trace: &RawTrace, geometry: &PassGeometry) -> Result<(DistanceTrace, usize, usize)> {
    trace.require_unit(Unit::PowerDbw)?;
    let w = geometry.lateral_offset_m;
    let mut behind = 0;
    let mut degenerate = 0;
    let mut points = Vec::with_capacity(trace.len());
    for (t, power_dbw) in trace.samples() {
        let range_m = geometry.time_to_range(t);
        if range_m < 0.0 {
            behind += 1;
            continue;
        }
        let distance_m = geometry.distance(range_m);
        if is_degenerate(w, distance_m) {
            degenerate += 1;
            continue;
        }
        points.push(DistancePoint {
            range_m,
            distance_m,
            power_dbw,
        });
    }
    if points.is_empty() {
        return Err(Error::AllSamplesDropped { behind, degenerate });
    }
    Ok((DistanceTrace::new(w, points)?, behind, degenerate))
}

pub(crate) fn is_degenerate(lateral_offset_m: f64, distance_m: f64) -> bool {
    if !(distance_m > 0.0) {
        return true;
    }
    let ratio = lateral_offset_m / distance_m;
    ratio * ratio >= 1.0 - DEGENERATE_MARGIN
}

/// Peak alignment followed by the time-to-distance mapping.
pub fn transform_to_distance(trace: &RawTrace, config: &TransformConfig) -> Result<TransformOutput> {
    trace.require_unit(Unit::PowerDbw)?;
    let (peak_index, peak_time_s) = match config.alignment {
        PeakAlignment::Detect { smooth_window } => {
            let peak = detect_peak(trace, smooth_window)?;
            (Some(peak.index), peak.time_s)
        }
        PeakAlignment::Known { peak_time_s } => (None, peak_time_s),
    };
    let geometry = PassGeometry::new(
        config.lateral_offset_m,
        config.speed_mps,
        config.peak_range_m,
        peak_time_s,
    )?;
    let (distance_trace, behind, degenerate) = map_to_distance(trace, &geometry)?;
    let summary = TransformSummary {
        geometry,
        alignment: config.alignment,
        peak_index,
        peak_time_s,
        n_input: trace.len(),
        n_kept: distance_trace.len(),
        n_dropped_behind: behind,
        n_dropped_degenerate: degenerate,
    };
    Ok(TransformOutput {
        trace: distance_trace,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AveragingDomain {
    /// Mean of linear watts, reported in dBW.
    #[default]
    Linear,
    /// Mean of the dBW values.
    Decibel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticPoint {
    pub distance_m: f64,
    pub mean_power_dbw: f64,
    pub sample_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticPointSet {
    pub points: Vec<StaticPoint>,
}

impl StaticPointSet {
    /// Distance trace for fitting, at lateral offset `w`.
    pub fn to_distance_trace(&self, lateral_offset_m: f64) -> Result<DistanceTrace> {
        let d: Vec<f64> = self.points.iter().map(|p| p.distance_m).collect();
        let p: Vec<f64> = self.points.iter().map(|p| p.mean_power_dbw).collect();
        DistanceTrace::from_distances(lateral_offset_m, &d, &p)
    }
}

/// Averages each static measurement point.
pub fn average_static_points(traces: &[(f64, RawTrace)], domain: AveragingDomain) -> Result<StaticPointSet> {
    let mut points = Vec::with_capacity(traces.len());
    for (distance_m, trace) in traces {
        trace.require_unit(Unit::PowerDbw)?;
        if trace.is_empty() {
            return Err(Error::EmptyTrace);
        }
        if !(*distance_m > 0.0) {
            return Err(Error::domain("static distance must be > 0", *distance_m));
        }
        if points.iter().any(|p: &StaticPoint| p.distance_m == *distance_m) {
            return Err(Error::config(format!("duplicate static distance {distance_m}")));
        }
        let count = trace.len() as f64;
        let mean_power_dbw = match domain {
            AveragingDomain::Linear => to_db(trace.values().iter().map(|&v| from_db(v)).sum::<f64>() / count),
            AveragingDomain::Decibel => trace.values().iter().sum::<f64>() / count,
        };
        points.push(StaticPoint {
            distance_m: *distance_m,
            mean_power_dbw,
            sample_count: trace.len(),
        });
    }
    Ok(StaticPointSet { points })
}
