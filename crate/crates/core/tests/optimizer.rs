use tvfilter::design::{order3_design, order4_design};
use tvfilter::metrics::{FilterMetrics, MetricsSpec};
use tvfilter::optimize::{evaluate, optimize_modulation, Objective, OptimizeSpec};
use tvfilter::solve::sweep;

fn deg(x: f64) -> f64 {
    x.to_radians()
}

#[test]
fn order3_search_meets_targets() {
    let d = order3_design();
    let mut spec = OptimizeSpec::new([18e6, 28e6], [0.03, 0.07], [deg(20.0), deg(60.0)]);
    spec.min_return_loss_db = 9.0;
    spec.max_insertion_loss_db = 3.0;
    let r = optimize_modulation(&d, &spec).unwrap();
    assert!(r.feasible(), "{:?}", r.violations);
    assert!(r.best.d0_db >= 14.0, "D0 {}", r.best.d0_db);
    assert!(r.best.worst_insertion_loss_db <= 3.0);
    assert!(r.evaluations > spec.grid_steps.pow(3));
    assert!((18e6..=28e6).contains(&r.best.fm));
}

#[test]
fn order4_search_meets_bandwidth_target() {
    let d = order4_design();
    let mut spec = OptimizeSpec::new([15e6, 24e6], [0.05, 0.09], [deg(30.0), deg(70.0)]);
    spec.min_return_loss_db = 10.0;
    spec.max_insertion_loss_db = 3.6;
    spec.objective = Objective::DirectivityBandwidth { level_db: 13.0 };
    let r = optimize_modulation(&d, &spec).unwrap();
    assert!(r.feasible(), "{:?}", r.violations);
    let b = &r.best;
    let tuned = d.with_progressive(b.fm, b.index, b.phase_step).unwrap();
    let s = sweep(&tuned, &tuned.default_grid()).unwrap();
    let m = FilterMetrics::compute(
        &s,
        tuned.bandpass.f0,
        &MetricsSpec {
            directivity_level_db: Some(13.0),
            bridge_db: 0.0,
            ..MetricsSpec::default()
        },
    );
    assert!(m.d_bandwidth_hz() >= 20e6, "band {}", m.d_bandwidth_hz());
}

#[test]
fn no_modulation_gives_no_directivity() {
    let d = order3_design();
    let spec = OptimizeSpec::new([18e6, 28e6], [0.0, 0.0], [deg(20.0), deg(60.0)]);
    let r = optimize_modulation(&d, &spec).unwrap();
    assert!(r.best.d0_db.abs() < 1e-9);
    assert!(r.best.objective.abs() < 1e-9);
}

#[test]
fn published_operating_points() {
    let spec = OptimizeSpec::new([1e6, 1e8], [0.0, 0.1], [0.0, 1.5]);
    let d3 = order3_design();
    let e = evaluate(&d3, &spec, 22.8e6, 0.05, deg(35.0)).unwrap();
    assert!((e.d0_db - 14.5).abs() <= 1.0, "order 3 D0 {}", e.d0_db);
    let d4 = order4_design();
    let e = evaluate(&d4, &spec, 19e6, 0.076, deg(48.0)).unwrap();
    assert!(e.d0_db >= 12.7, "order 4 D0 {}", e.d0_db);
}

#[test]
fn lower_modulation_frequency_trades_band_for_peak() {
    // Each operating point is judged at its own quoted directivity level.
    let d = order4_design();
    let at = |fm: f64, level: f64| {
        let t = d.with_progressive(fm, 0.076, deg(48.0)).unwrap();
        let s = sweep(&t, &t.default_grid()).unwrap();
        let spec = MetricsSpec {
            directivity_level_db: Some(level),
            ..MetricsSpec::default()
        };
        FilterMetrics::compute(&s, t.bandpass.f0, &spec)
    };
    let (a, b) = (at(19e6, 13.7), at(18e6, 33.1));
    assert!(b.d0_db > a.d0_db + 10.0, "{} vs {}", b.d0_db, a.d0_db);
    assert!(b.d_bandwidth_hz() < 0.5 * a.d_bandwidth_hz(), "{} vs {}", b.d_bandwidth_hz(), a.d_bandwidth_hz());
}

#[test]
fn bad_boxes_are_rejected() {
    let d = order3_design();
    let spec = OptimizeSpec::new([28e6, 18e6], [0.03, 0.07], [0.0, 1.0]);
    assert!(optimize_modulation(&d, &spec).unwrap_err().is_config());
    let spec = OptimizeSpec::new([-1.0, 18e6], [0.03, 0.07], [0.0, 1.0]);
    assert!(optimize_modulation(&d, &spec).is_err());
}
