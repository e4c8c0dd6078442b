//! Figures of merit computed from sweep results.

use num_complex::Complex64;

use crate::design::Design;
use crate::error::{Error, Result};
use crate::solve::{sweep, Port, SParamSet, SParams, SweepGrid};

/// Floor applied to magnitudes before taking logarithms in comparisons.
pub const DB_FLOOR: f64 = -200.0;

/// Default convergence threshold in dB.
pub const CONVERGENCE_THRESHOLD_DB: f64 = 0.1;

pub fn db(x: Complex64) -> f64 {
    20.0 * x.norm().log10()
}

fn db_floored(x: Complex64) -> f64 {
    db(x).max(DB_FLOOR)
}

/// `|S21|^2 / |S12|^2` in dB; `+inf` when `S12` vanishes.
pub fn directivity_of(s: &SParams) -> f64 {
    let (fwd, bwd) = (s.s21.norm(), s.s12.norm());
    if bwd == 0.0 {
        if fwd == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        10.0 * (fwd * fwd / (bwd * bwd)).log10()
    }
}

/// Directivity at the grid point nearest to `freq_hz`.
pub fn directivity(s: &SParamSet, freq_hz: f64) -> f64 {
    directivity_of(&s.fundamental(s.nearest_index(freq_hz)))
}

/// Criterion tested by [`bandwidth_at_level`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// `|S11| <= -level`.
    ReturnLoss,
    /// `D >= level`.
    Directivity,
}

impl Criterion {
    /// Signed distance to the level; non-negative where the criterion holds.
    fn margin(self, s: &SParams, level_db: f64) -> f64 {
        match self {
            Criterion::ReturnLoss => -db(s.s11) - level_db,
            Criterion::Directivity => directivity_of(s) - level_db,
        }
    }
}

/// Edges of a band in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lower_hz: f64,
    pub upper_hz: f64,
}

impl Band {
    pub fn width(&self) -> f64 {
        self.upper_hz - self.lower_hz
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.lower_hz && f <= self.upper_hz
    }
}

fn crossing(f: &[f64], m: &[f64], a: usize, b: usize) -> f64 {
    let (ma, mb) = (m[a], m[b]);
    if !(ma.is_finite() && mb.is_finite()) || ma == mb {
        return if ma >= 0.0 { f[a] } else { f[b] };
    }
    f[a] + (f[b] - f[a]) * (0.0 - ma) / (mb - ma)
}

/// Band around `center_hz` where `criterion` holds at `level_db`.
///
/// The search region is the contiguous run of grid points around the center
/// where the criterion holds at the level relaxed by `bridge_db`; the band
/// edges are the outermost crossings of the strict level inside that run,
/// linearly interpolated. With `bridge_db = 0` this is the plain contiguous
/// band. Ripples that dip less than `bridge_db` below the level therefore do
/// not split the band.
pub fn band_at_level(
    s: &SParamSet,
    center_hz: f64,
    level_db: f64,
    criterion: Criterion,
    bridge_db: f64,
) -> Option<Band> {
    if s.is_empty() {
        return None;
    }
    let f = s.frequencies();
    let m: Vec<f64> = (0..s.len())
        .map(|i| criterion.margin(&s.fundamental(i), level_db))
        .collect();
    let relaxed = |i: usize| m[i] >= -bridge_db.max(0.0);
    let c = s.nearest_index(center_hz);
    if !relaxed(c) {
        return None;
    }
    let (mut a, mut b) = (c, c);
    while a > 0 && relaxed(a - 1) {
        a -= 1;
    }
    while b + 1 < m.len() && relaxed(b + 1) {
        b += 1;
    }
    let p = (a..=b).find(|&i| m[i] >= 0.0)?;
    let q = (a..=b).rev().find(|&i| m[i] >= 0.0)?;
    let lower = if p == 0 { f[0] } else { crossing(&f, &m, p - 1, p) };
    let upper = if q + 1 == m.len() {
        f[q]
    } else {
        crossing(&f, &m, q + 1, q)
    };
    Some(Band {
        lower_hz: lower,
        upper_hz: upper,
    })
}

/// Width of [`band_at_level`], zero when the criterion never holds near the center.
pub fn bandwidth_at_level(
    s: &SParamSet,
    center_hz: f64,
    level_db: f64,
    criterion: Criterion,
    bridge_db: f64,
) -> f64 {
    band_at_level(s, center_hz, level_db, criterion, bridge_db).map_or(0.0, |b| b.width())
}

/// One of the four fundamental S-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    S11,
    S21,
    S12,
    S22,
}

impl Param {
    pub const ALL: [Param; 4] = [Param::S11, Param::S21, Param::S12, Param::S22];

    pub fn of(self, s: &SParams) -> Complex64 {
        match self {
            Param::S11 => s.s11,
            Param::S21 => s.s21,
            Param::S12 => s.s12,
            Param::S22 => s.s22,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Param::S11 => "S11",
            Param::S21 => "S21",
            Param::S12 => "S12",
            Param::S22 => "S22",
        }
    }
}

/// Largest dB-magnitude difference between two sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxDelta {
    pub delta_db: f64,
    pub freq_hz: f64,
    pub param: Param,
}

/// Compare fundamental magnitudes of two sweeps on the same grid, optionally
/// restricted to `band`.
pub fn max_delta_db(
    a: &SParamSet,
    b: &SParamSet,
    params: &[Param],
    band: Option<Band>,
) -> Result<MaxDelta> {
    if a.len() != b.len() || a.frequencies() != b.frequencies() {
        return Err(Error::invalid("sweeps must share the same frequency grid"));
    }
    let mut worst = MaxDelta {
        delta_db: 0.0,
        freq_hz: f64::NAN,
        param: params.first().copied().unwrap_or(Param::S21),
    };
    for i in 0..a.len() {
        let f = a.points()[i].freq_hz;
        if band.is_some_and(|bd| !bd.contains(f)) {
            continue;
        }
        let (sa, sb) = (a.fundamental(i), b.fundamental(i));
        for &p in params {
            let d = (db_floored(p.of(&sa)) - db_floored(p.of(&sb))).abs();
            if d > worst.delta_db || worst.freq_hz.is_nan() {
                worst = MaxDelta {
                    delta_db: d,
                    freq_hz: f,
                    param: p,
                };
            }
        }
    }
    Ok(worst)
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStep {
    pub from_harmonics: usize,
    pub to_harmonics: usize,
    pub max: MaxDelta,
    pub converged: bool,
}

/// Compare sweeps at successive harmonic counts.
pub fn convergence_study(
    design: &Design,
    grid: &SweepGrid,
    harmonics: &[usize],
    threshold_db: f64,
) -> Result<Vec<ConvergenceStep>> {
    if harmonics.len() < 2 {
        return Err(Error::invalid("a convergence study needs at least two harmonic counts"));
    }
    if harmonics.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("harmonic counts must be strictly ascending"));
    }
    let sweeps = harmonics
        .iter()
        .map(|&h| sweep(&design.with_harmonics(h)?, grid))
        .collect::<Result<Vec<_>>>()?;
    sweeps
        .windows(2)
        .zip(harmonics.windows(2))
        .map(|(s, h)| {
            let max = max_delta_db(&s[0], &s[1], &Param::ALL, None)?;
            Ok(ConvergenceStep {
                from_harmonics: h[0],
                to_harmonics: h[1],
                max,
                converged: max.delta_db < threshold_db,
            })
        })
        .collect()
}

/// Harmonic count `2 (N - 1) + 1` suggested for an order-`N` filter.
pub fn rule_harmonics(order: usize) -> usize {
    2 * order.saturating_sub(1) + 1
}

/// Fraction of unit incident power leaving `port` at harmonic `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicPower {
    pub excite: Port,
    pub port: Port,
    pub k: i32,
    pub power: f64,
}

/// Power emitted at every port and harmonic for both excitations.
pub fn harmonic_power_budget(s: &SParamSet, freq_hz: f64) -> Vec<HarmonicPower> {
    let i = s.nearest_index(freq_hz);
    let mut out = Vec::new();
    for excite in [Port::P1, Port::P2] {
        for port in [Port::P1, Port::P2] {
            for k in -s.k_max()..=s.k_max() {
                out.push(HarmonicPower {
                    excite,
                    port,
                    k,
                    power: s.at(i, k).get(port, excite).norm_sqr(),
                });
            }
        }
    }
    out
}

/// Levels used when reducing a sweep to [`FilterMetrics`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsSpec {
    /// Return-loss level defining the passband, in dB.
    pub return_loss_level_db: f64,
    /// Optional directivity level for a directivity-referenced band.
    pub directivity_level_db: Option<f64>,
    /// Ripple tolerance for band detection, see [`band_at_level`].
    pub bridge_db: f64,
}

impl Default for MetricsSpec {
    fn default() -> Self {
        Self {
            return_loss_level_db: 11.0,
            directivity_level_db: None,
            bridge_db: 0.5,
        }
    }
}

impl MetricsSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.return_loss_level_db > 0.0 && self.return_loss_level_db.is_finite()) {
            return Err(Error::invalid("return loss level must be positive"));
        }
        if self.directivity_level_db.is_some_and(|d| !d.is_finite()) {
            return Err(Error::invalid("directivity level must be finite"));
        }
        if !(self.bridge_db >= 0.0 && self.bridge_db.is_finite()) {
            return Err(Error::invalid("bridge must be a non-negative number of dB"));
        }
        Ok(())
    }
}

/// Scalar summary of one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterMetrics {
    pub f0_hz: f64,
    pub d0_db: f64,
    /// Forward insertion loss at `f0`.
    pub il_forward_center_db: f64,
    /// Worst forward insertion loss inside the return-loss band.
    pub il_forward_max_db: f64,
    pub il_backward_center_db: f64,
    pub rl_level_db: f64,
    pub rl_band: Option<Band>,
    /// Smallest directivity inside the return-loss band.
    pub d_min_passband_db: f64,
    pub d_level_db: Option<f64>,
    pub d_band: Option<Band>,
}

impl FilterMetrics {
    pub fn compute(s: &SParamSet, f0_hz: f64, spec: &MetricsSpec) -> Self {
        let c = s.fundamental(s.nearest_index(f0_hz));
        let rl_band = band_at_level(
            s,
            f0_hz,
            spec.return_loss_level_db,
            Criterion::ReturnLoss,
            spec.bridge_db,
        );
        let mut il_max = f64::NAN;
        let mut d_min = f64::NAN;
        if let Some(band) = rl_band {
            for i in 0..s.len() {
                if band.contains(s.points()[i].freq_hz) {
                    let p = s.fundamental(i);
                    il_max = il_max.max(-db(p.s21));
                    d_min = d_min.min(directivity_of(&p));
                }
            }
        }
        let d_band = spec.directivity_level_db.and_then(|level| {
            band_at_level(s, f0_hz, level, Criterion::Directivity, spec.bridge_db)
        });
        Self {
            f0_hz,
            d0_db: directivity_of(&c),
            il_forward_center_db: -db(c.s21),
            il_forward_max_db: il_max,
            il_backward_center_db: -db(c.s12),
            rl_level_db: spec.return_loss_level_db,
            rl_band,
            d_min_passband_db: d_min,
            d_level_db: spec.directivity_level_db,
            d_band,
        }
    }

    pub fn rl_bandwidth_hz(&self) -> f64 {
        self.rl_band.map_or(0.0, |b| b.width())
    }

    pub fn d_bandwidth_hz(&self) -> f64 {
        self.d_band.map_or(0.0, |b| b.width())
    }

    /// `(key, value)` pairs in report order.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        let band = |b: Option<Band>| b.map_or((f64::NAN, f64::NAN), |b| (b.lower_hz, b.upper_hz));
        let (rl_lo, rl_hi) = band(self.rl_band);
        let (d_lo, d_hi) = band(self.d_band);
        vec![
            ("f0_Hz", self.f0_hz),
            ("D0_dB", self.d0_db),
            ("D_min_passband_dB", self.d_min_passband_db),
            ("IL_forward_center_dB", self.il_forward_center_db),
            ("IL_forward_max_dB", self.il_forward_max_db),
            ("IL_backward_center_dB", self.il_backward_center_db),
            ("RL_level_dB", self.rl_level_db),
            ("BW_at_RL_Hz", self.rl_bandwidth_hz()),
            ("BW_at_RL_lower_Hz", rl_lo),
            ("BW_at_RL_upper_Hz", rl_hi),
            ("D_level_dB", self.d_level_db.unwrap_or(f64::NAN)),
            ("BW_at_D_Hz", self.d_bandwidth_hz()),
            ("BW_at_D_lower_Hz", d_lo),
            ("BW_at_D_upper_Hz", d_hi),
        ]
    }

    /// Flat `key=value` report, one entry per line.
    pub fn report(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve::SweepPoint;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Synthetic sweep where only S11 varies, given in dB.
    fn s11_sweep(freqs: &[f64], s11_db: &[f64]) -> SParamSet {
        let points = freqs
            .iter()
            .zip(s11_db)
            .map(|(&f, &d)| SweepPoint {
                freq_hz: f,
                harmonics: vec![SParams {
                    s11: c(10f64.powf(d / 20.0)),
                    s21: c(0.5),
                    s12: c(0.5),
                    s22: c(0.0),
                }],
            })
            .collect();
        SParamSet::new(0, points)
    }

    #[test]
    fn directivity_values() {
        let s = SParams {
            s21: c(0.5),
            s12: c(0.5),
            ..Default::default()
        };
        assert_eq!(directivity_of(&s), 0.0);
        let s = SParams {
            s21: c(1.0),
            s12: c(0.1),
            ..Default::default()
        };
        assert!((directivity_of(&s) - 20.0).abs() < 1e-12);
        let swapped = SParams {
            s21: s.s12,
            s12: s.s21,
            ..s
        };
        assert_eq!(directivity_of(&swapped), -directivity_of(&s));
        let s = SParams {
            s21: c(1.0),
            ..Default::default()
        };
        assert_eq!(directivity_of(&s), f64::INFINITY);
    }

    #[test]
    fn flat_response_spans_everything() {
        let f: Vec<f64> = (0..11).map(|i| 100.0 + i as f64).collect();
        let s = s11_sweep(&f, &[-20.0; 11]);
        assert_eq!(bandwidth_at_level(&s, 105.0, 11.0, Criterion::ReturnLoss, 0.0), 10.0);
    }

    #[test]
    fn interpolated_edges() {
        let f: Vec<f64> = (0..5).map(|i| i as f64).collect();
        // margin at level 10: -5, +5, +10, +5, -5
        let s = s11_sweep(&f, &[-5.0, -15.0, -20.0, -15.0, -5.0]);
        let band = band_at_level(&s, 2.0, 10.0, Criterion::ReturnLoss, 0.0).unwrap();
        assert!((band.lower_hz - 0.5).abs() < 1e-12);
        assert!((band.upper_hz - 3.5).abs() < 1e-12);
    }

    #[test]
    fn shallow_ripple_is_bridged() {
        let f: Vec<f64> = (0..7).map(|i| i as f64).collect();
        let s = s11_sweep(&f, &[-5.0, -15.0, -9.8, -20.0, -15.0, -15.0, -5.0]);
        let strict = bandwidth_at_level(&s, 3.0, 10.0, Criterion::ReturnLoss, 0.0);
        let bridged = bandwidth_at_level(&s, 3.0, 10.0, Criterion::ReturnLoss, 0.5);
        assert!(strict < bridged);
        assert!((bridged - 5.0).abs() < 1e-12);
        // A deeper dip still splits the band.
        let s = s11_sweep(&f, &[-5.0, -15.0, -8.0, -20.0, -15.0, -15.0, -5.0]);
        assert_eq!(
            bandwidth_at_level(&s, 3.0, 10.0, Criterion::ReturnLoss, 0.5),
            bandwidth_at_level(&s, 3.0, 10.0, Criterion::ReturnLoss, 0.0)
        );
    }

    #[test]
    fn unsatisfied_center_gives_zero() {
        let f: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let s = s11_sweep(&f, &[-20.0, -20.0, -3.0, -20.0, -20.0]);
        assert_eq!(bandwidth_at_level(&s, 2.0, 10.0, Criterion::ReturnLoss, 0.5), 0.0);
    }

    #[test]
    fn unmodulated_budget_has_no_harmonics() {
        let points = vec![SweepPoint {
            freq_hz: 1.0,
            harmonics: vec![SParams::default(), SParams { s21: c(1.0), s12: c(1.0), ..Default::default() }, SParams::default()],
        }];
        let s = SParamSet::new(1, points);
        for h in harmonic_power_budget(&s, 1.0) {
            if h.k != 0 {
                assert_eq!(h.power, 0.0);
            }
        }
    }
}
