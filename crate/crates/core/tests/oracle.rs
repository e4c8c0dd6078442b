use tvfilter::design::{order3_design, Design};
use tvfilter::harmonic::{Mode, ModulationSpec};
use tvfilter::metrics::db;
use tvfilter::network::BandpassSpec;
use tvfilter::oracle::{compare, snap_frequency, transient_sparams, TransientConfig};
use tvfilter::solve::static_sparams;
use tvfilter::synthesis::chebyshev_inline;
use tvfilter::{CouplingMatrix, Error, Port};

fn chain(n: usize, fm: f64, index: f64, step: f64) -> Design {
    let matrix = if n == 1 {
        CouplingMatrix::inline(&[1.0, 1.0], &[0.0]).unwrap()
    } else {
        chebyshev_inline(n, 20.0).unwrap()
    };
    Design::new(
        matrix,
        BandpassSpec::new(1e9, 0.05).unwrap(),
        ModulationSpec::progressive(fm, index, step, n, 2 * n + 1).unwrap(),
        Mode::Rigorous,
    )
    .unwrap()
}

#[test]
fn unmodulated_pair_matches_static_solve() {
    let d = chain(2, 50e6, 0.0, 0.0);
    let elems = d.elements().unwrap();
    let cfg = TransientConfig::default();
    for i in 0..11 {
        let f = 0.95e9 + i as f64 * 0.01e9;
        let t = transient_sparams(&elems, &d.modulation, f, Port::P1, &cfg).unwrap();
        let s = static_sparams(&elems, t.freq_hz).unwrap();
        let r = 20.0 * t.reflected_at(0).log10();
        let x = 20.0 * t.transmitted_at(0).log10();
        assert!((r - db(s.s11)).abs() < 0.05, "S11 at {f}: {r} vs {}", db(s.s11));
        assert!((x - db(s.s21)).abs() < 0.05, "S21 at {f}: {x} vs {}", db(s.s21));
    }
}

#[test]
fn order3_agrees_with_rigorous_solve() {
    let d = order3_design();
    let bw = d.bandpass.bandwidth_hz();
    let freqs: Vec<f64> = (0..3).map(|i| 975e6 + (i as f64 - 1.0) * 0.3 * bw).collect();
    for row in compare(&d, &freqs, &TransientConfig::default()).unwrap() {
        assert!(row.transmission_delta_db() < 0.2, "{row:?}");
    }
}

#[test]
fn single_resonator_stays_reciprocal() {
    let d = chain(1, 30e6, 0.08, 0.0);
    let elems = d.elements().unwrap();
    let cfg = TransientConfig::default();
    for f in [0.98e9, 1.0e9, 1.02e9] {
        let a = transient_sparams(&elems, &d.modulation, f, Port::P1, &cfg).unwrap();
        let b = transient_sparams(&elems, &d.modulation, f, Port::P2, &cfg).unwrap();
        let (x, y) = (20.0 * a.transmitted_at(0).log10(), 20.0 * b.transmitted_at(0).log10());
        assert!((x - y).abs() < 0.05, "{x} vs {y}");
    }
}

#[test]
fn halving_the_time_step_changes_little() {
    let d = order3_design();
    let elems = d.elements().unwrap();
    let coarse = TransientConfig::default();
    let fine = TransientConfig {
        samples_per_period: 2 * coarse.samples_per_period,
        ..coarse.clone()
    };
    let a = transient_sparams(&elems, &d.modulation, 975e6, Port::P1, &coarse).unwrap();
    let b = transient_sparams(&elems, &d.modulation, 975e6, Port::P1, &fine).unwrap();
    for k in -1..=1 {
        let da = 20.0 * (a.transmitted_at(k) / b.transmitted_at(k)).log10();
        assert!(da.abs() < 0.02, "k={k}: {da}");
    }
}

#[test]
fn snapping_is_reported() {
    let d = order3_design();
    let elems = d.elements().unwrap();
    let cfg = TransientConfig::default();
    let want = 975.123_456e6;
    let t = transient_sparams(&elems, &d.modulation, want, Port::P1, &cfg).unwrap();
    let snapped = snap_frequency(want, d.modulation.fm, cfg.beat_cycles);
    assert_eq!(t.freq_hz, snapped);
    assert_eq!(t.snap_error_hz(), snapped - want);
    assert!(t.snap_error_hz().abs() <= 0.5 * d.modulation.fm / cfg.beat_cycles as f64);
}

#[test]
fn unsettled_runs_fail() {
    let d = order3_design();
    let elems = d.elements().unwrap();
    let cfg = TransientConfig {
        max_windows: 3,
        tolerance: 1e-15,
        ..TransientConfig::default()
    };
    let err = transient_sparams(&elems, &d.modulation, 975e6, Port::P1, &cfg).unwrap_err();
    assert!(matches!(err, Error::NotSettled { .. }), "{err}");
}

#[test]
fn unsupported_circuits_are_rejected() {
    let d = chain(5, 30e6, 0.05, 0.5);
    let elems = d.elements().unwrap();
    let err = transient_sparams(&elems, &d.modulation, 1e9, Port::P1, &TransientConfig::default()).unwrap_err();
    assert!(err.is_config());
}
