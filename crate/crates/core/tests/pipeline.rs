use vlc_pathloss::fitting::{evaluate_fit, fit_log_linear, fit_with_correction, FitConfig, FittedModel};
use vlc_pathloss::model::{ChannelParams, Preset};
use vlc_pathloss::simulator::{
    ambient_floor_study, synthesize_passby, synthesize_static, AmbientStudyConfig, ScenarioConfig,
};
use vlc_pathloss::trace::{
    average_static_points, detect_peak, transform_to_distance, AveragingDomain, DistanceTrace, PeakAlignment,
    TransformConfig, DEFAULT_SMOOTH_WINDOW,
};

fn transform(s: &vlc_pathloss::simulator::Synthesis, alignment: PeakAlignment) -> DistanceTrace {
    let g = s.metadata.geometry;
    let config = TransformConfig {
        lateral_offset_m: g.lateral_offset_m,
        speed_mps: g.speed_mps,
        peak_range_m: g.peak_range_m,
        alignment,
    };
    transform_to_distance(&s.trace, &config).unwrap().trace
}

#[test]
fn default_window_finds_exact_noiseless_peak() {
    for w in [1.0, 2.0, 3.0] {
        let mut cfg = ScenarioConfig::night_passby();
        cfg.geometry.lateral_offset_m = w;
        let s = synthesize_passby(&cfg).unwrap();
        let peak = detect_peak(&s.trace, DEFAULT_SMOOTH_WINDOW).unwrap();
        assert_eq!(Some(peak.index), s.metadata.peak_index, "w = {w}");
    }
}

#[test]
fn plain_fit_is_exact_on_far_branch_data() {
    let params = ChannelParams::preset(Preset::Night);
    let d: Vec<f64> = (0..200).map(|i| 1.0 + 0.4 * i as f64).collect();
    let p: Vec<f64> = d.iter().map(|&d| params.far_field_power(d).unwrap()).collect();
    let trace = DistanceTrace::from_distances(0.0, &d, &p).unwrap();
    let r = fit_log_linear(&trace, &FitConfig::default()).unwrap();
    assert!((r.gamma_hat - params.gamma).abs() <= 1e-6);
    assert!((r.k_db_hat - params.k_db).abs() <= 1e-6);
    assert_eq!(r.n_dropped_near, 0);
}

#[test]
fn correction_beats_plain_fit_on_noisy_passby() {
    let cfg = ScenarioConfig {
        noise_sigma_db: 0.5,
        seed: 21,
        ..ScenarioConfig::night_passby()
    };
    let s = synthesize_passby(&cfg).unwrap();
    let trace = transform(
        &s,
        PeakAlignment::Known {
            peak_time_s: s.metadata.geometry.peak_time_s,
        },
    );
    let all = FitConfig {
        min_distance_m: Some(0.0),
        ..FitConfig::default()
    };
    let plain = fit_log_linear(&trace, &all).unwrap();
    let corrected = fit_with_correction(&trace, &FitConfig::default()).unwrap();
    let gamma = cfg.params.gamma;
    assert!((corrected.gamma_hat - gamma).abs() < (plain.gamma_hat - gamma).abs());
    let sens = corrected.order_sensitivity.unwrap();
    assert_eq!(sens.order_low, 0.5);
    assert_eq!(sens.order_high, 1.5);
}

#[test]
fn wrong_preset_scores_worse() {
    let cfg = ScenarioConfig {
        noise_sigma_db: 0.5,
        seed: 22,
        ..ScenarioConfig::night_passby()
    };
    let s = synthesize_passby(&cfg).unwrap();
    let trace = transform(&s, PeakAlignment::default());
    let night = evaluate_fit(
        &FittedModel::from_params(&ChannelParams::preset(Preset::Night), true),
        &trace,
    )
    .unwrap();
    let day = evaluate_fit(
        &FittedModel::from_params(&ChannelParams::preset(Preset::Daylight), true),
        &trace,
    )
    .unwrap();
    assert!(night.summary.rmse_db < day.summary.rmse_db);
    assert!(night.summary.mean_residual_db.abs() < 0.1);
}

#[test]
fn daylight_flattening_holds_across_seeds() {
    for seed in 100..110 {
        let rows = ambient_floor_study(&AmbientStudyConfig::daylight_flattening(seed)).unwrap();
        let gammas: Vec<f64> = rows.iter().map(|r| r.gamma_hat).collect();
        assert!(gammas.windows(2).all(|g| g[1] <= g[0]), "seed {seed}: {gammas:?}");
        assert!(gammas[4].abs() <= 0.1, "seed {seed}: {gammas:?}");
        assert!(rows[0].ambient_dbw.is_none());
    }
}

#[test]
fn static_averaging_domains_differ_by_noise_bias() {
    let params = ChannelParams::preset(Preset::Night);
    let traces = synthesize_static(&params, 0.0, &[8.0, 10.0, 12.0], 2000, 1.0, 3).unwrap();
    let lin = average_static_points(&traces, AveragingDomain::Linear).unwrap();
    let db = average_static_points(&traces, AveragingDomain::Decibel).unwrap();
    // linear averaging of log-normal noise sits about sigma^2 ln10 / 20 dB higher
    let expected = std::f64::consts::LN_10 / 20.0;
    for (a, b) in lin.points.iter().zip(&db.points) {
        let gap = a.mean_power_dbw - b.mean_power_dbw;
        assert!((gap - expected).abs() < 0.03, "gap {gap}");
        assert_eq!(a.sample_count, 2000);
    }
}

#[test]
fn ambient_flattens_late_trace() {
    let base = ScenarioConfig::night_passby();
    let s = synthesize_passby(&ScenarioConfig {
        ambient_power_dbw: Some(-20.0),
        ..base
    })
    .unwrap();
    let (min, max) = s
        .trace
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    assert!(max - min < 0.2, "spread {}", max - min);
}
