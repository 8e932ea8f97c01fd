// SPDX-License-Identifier: Apache-2.0
use proptest::prelude::*;
use stacksim::builders::{build_column, Architecture, CellConfig};
use stacksim::power::{
    compare_architectures, compare_leakage, config_fingerprint, measure_architecture, measure_hold_power,
    PowerError,
};
use stacksim::sim::{dc_operating_point, SolverConfig, Waveform};

const HOLD: f64 = 1e-6;

fn solver() -> SolverConfig {
    SolverConfig::default().with_timing(1e-9, HOLD)
}

/// Quiescent supply power straight from the DC operating point.
fn dc_power(arch: Architecture) -> f64 {
    let cfg = CellConfig::default();
    let (mut net, sig) = build_column(arch, &cfg, 1).unwrap();
    net.directives.ic = sig.initial_state(&sig.default_pattern());
    let op = dc_operating_point(&net, &SolverConfig::default()).unwrap();
    sig.supplies
        .iter()
        .map(|s| s.volts * op.source_current(&s.source).unwrap().abs())
        .sum()
}

#[test]
fn transient_hold_matches_dc_operating_point() {
    for arch in [Architecture::Conventional, Architecture::Proposed] {
        let (p, _) = measure_architecture(arch, &CellConfig::default(), 1, &solver(), HOLD).unwrap();
        let dc = dc_power(arch);
        let rel = (p.leakage_power_w - dc).abs() / dc;
        assert!(rel < 0.01, "{}: tran {:e} dc {dc:e}", arch.name(), p.leakage_power_w);
        assert!(p.retained());
    }
}

#[test]
fn frozen_leakage_values() {
    let report = compare_leakage(&CellConfig::default(), 1, &solver(), HOLD).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() / b < 0.005;
    assert!(close(report.conventional.leakage_power_w, 4.9187e-10), "{:e}", report.conventional.leakage_power_w);
    assert!(close(report.proposed.leakage_power_w, 4.657e-10), "{:e}", report.proposed.leakage_power_w);
    assert!(report.ratio > 1.0);
    assert!((report.savings_percent - 100.0 * (1.0 - 1.0 / report.ratio)).abs() < 1e-12);
}

#[test]
fn window_placement_barely_matters() {
    let (_, w) = measure_architecture(Architecture::Conventional, &CellConfig::default(), 1, &solver(), HOLD).unwrap();
    let a = measure_hold_power(&w, "i(vdd)", 1.2, (0.2e-6, 1.0e-6)).unwrap().power;
    let b = measure_hold_power(&w, "i(vdd)", 1.2, (0.4e-6, 0.9e-6)).unwrap().power;
    assert!((a - b).abs() / a < 0.01, "{a:e} vs {b:e}");
}

#[test]
fn per_bit_power_independent_of_column_size() {
    let one = compare_leakage(&CellConfig::default(), 1, &solver(), HOLD).unwrap();
    let two = compare_leakage(&CellConfig::default(), 2, &solver(), HOLD).unwrap();
    assert_eq!(two.conventional.stored_bits, 4);
    assert!((one.ratio - two.ratio).abs() / one.ratio < 0.02, "{} vs {}", one.ratio, two.ratio);
}

#[test]
fn mismatched_configs_refuse_to_compare() {
    let cell = CellConfig::default();
    let (a, _) = measure_architecture(Architecture::Conventional, &cell, 1, &solver(), HOLD).unwrap();
    let (b, _) = measure_architecture(Architecture::Proposed, &cell, 1, &solver(), 0.5e-6).unwrap();
    assert!(matches!(compare_architectures(a, b), Err(PowerError::FingerprintMismatch(..))));
}

#[test]
fn report_is_deterministic() {
    let a = compare_leakage(&CellConfig::default(), 1, &solver(), HOLD).unwrap();
    let b = compare_leakage(&CellConfig::default(), 1, &solver(), HOLD).unwrap();
    assert_eq!(a, b);
}

#[test]
fn invalid_hold_time() {
    let r = measure_architecture(Architecture::Proposed, &CellConfig::default(), 1, &solver(), -1.0);
    assert!(matches!(r, Err(PowerError::HoldTime)));
}

#[test]
fn fingerprint_tracks_inputs() {
    let cell = CellConfig::default();
    let s = SolverConfig::default();
    assert_eq!(config_fingerprint(&cell, &s, 1e-6), config_fingerprint(&cell, &s, 1e-6));
    assert_ne!(config_fingerprint(&cell, &s, 1e-6), config_fingerprint(&cell, &s, 2e-6));
    let hot = CellConfig { vdd: 1.0, ..cell.clone() };
    assert_ne!(config_fingerprint(&cell, &s, 1e-6), config_fingerprint(&hot, &s, 1e-6));
}

#[test]
fn ramp_current_averages_to_midpoint() {
    let mut w = Waveform::new(vec!["i(v)".into()]);
    for k in 0..=100 {
        w.push(k as f64 * 1e-9, &[-(k as f64) * 1e-12]);
    }
    let hp = measure_hold_power(&w, "i(v)", 2.0, (0.0, 100e-9)).unwrap();
    assert!((hp.mean_current - 50e-12).abs() < 1e-24);
    assert!((hp.power - 100e-12).abs() < 1e-24);
}

proptest! {
    #[test]
    fn power_scales_with_supply_and_current(i in 1e-12f64..1e-6, v in 0.5f64..3.0, sign in any::<bool>()) {
        let mut w = Waveform::new(vec!["i(v)".into()]);
        let s = if sign { 1.0 } else { -1.0 };
        for k in 0..=50 {
            w.push(k as f64 * 1e-9, &[s * i]);
        }
        let hp = measure_hold_power(&w, "i(v)", v, (5e-9, 45e-9)).unwrap();
        prop_assert!((hp.power - v * i).abs() <= 1e-12 * v * i);
        prop_assert!(hp.mean_current >= 0.0);
    }
}
