//! Transient time-domain reference for small in-line networks.
//!
//! The jJ inverters of the nodal model cannot be built from real elements.
//! With `d_{i+1} = j d_i` along the chain, `D Y D*` replaces every pair
//! `(jJ, jJ)` by a gyrator `(J, -J)` and leaves the diagonal untouched, so the
//! gyrator network has the same node-voltage magnitudes at every harmonic,
//! and identical port voltages when `|d| = 1` at the ports. Only magnitudes
//! are compared.
//!
//! Resonator states are the charge `q_u = C_u(t) v_u` and the inductor current.
//! Port nodes have no storage and are solved algebraically. Integration is
//! fixed-step RK4 over windows of `M / fm`, with the drive frequency snapped
//! to a multiple of `fm / M` so that every harmonic completes an integer
//! number of cycles per window; harmonics are read by single-bin projection.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::design::Design;
use crate::error::{Error, Result};
use crate::harmonic::{Mode, ModulationSpec};
use crate::metrics::db;
use crate::network::BandpassElements;
use crate::solve::{sparams_at, Port};

/// Largest order the oracle accepts.
pub const MAX_ORDER: usize = 4;

/// Integration and steady-state settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientConfig {
    /// Time steps per period of `f + (K + 2) fm`.
    pub samples_per_period: usize,
    /// Windows `M / fm` integrated before the first comparison.
    pub settle_windows: usize,
    pub max_windows: usize,
    /// Modulation periods per window.
    pub beat_cycles: usize,
    /// Largest window-to-window change of any projected wave accepted as settled.
    pub tolerance: f64,
    /// Harmonics `-K..=K` reported.
    pub k_max: i32,
}

impl Default for TransientConfig {
    fn default() -> Self {
        Self {
            samples_per_period: 128,
            settle_windows: 2,
            max_windows: 60,
            beat_cycles: 10,
            tolerance: 1e-7,
            k_max: 2,
        }
    }
}

impl TransientConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_period < 50 {
            return Err(Error::invalid(format!(
                "at least 50 samples per period are required, got {}",
                self.samples_per_period
            )));
        }
        if self.beat_cycles == 0 || self.max_windows <= self.settle_windows {
            return Err(Error::invalid("need beat_cycles >= 1 and max_windows > settle_windows"));
        }
        if !(self.tolerance > 0.0) || self.k_max < 0 {
            return Err(Error::invalid("tolerance must be positive and k_max non-negative"));
        }
        Ok(())
    }
}

/// Nearest multiple of `fm / beat_cycles`.
pub fn snap_frequency(freq_hz: f64, fm: f64, beat_cycles: usize) -> f64 {
    let step = fm / beat_cycles as f64;
    (freq_hz / step).round().max(1.0) * step
}

/// Wave magnitudes from one transient run, indexed by `k + K`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientResult {
    pub requested_hz: f64,
    /// Drive frequency actually simulated.
    pub freq_hz: f64,
    pub excite: Port,
    pub k_max: i32,
    /// `|S_aa^(k)|`.
    pub reflected: Vec<f64>,
    /// `|S_ba^(k)|`.
    pub transmitted: Vec<f64>,
    pub windows: usize,
    /// Final window-to-window change.
    pub change: f64,
}

impl TransientResult {
    pub fn snap_error_hz(&self) -> f64 {
        self.freq_hz - self.requested_hz
    }

    pub fn reflected_at(&self, k: i32) -> f64 {
        self.reflected[(k + self.k_max) as usize]
    }

    pub fn transmitted_at(&self, k: i32) -> f64 {
        self.transmitted[(k + self.k_max) as usize]
    }
}

struct Circuit {
    n: usize,
    cp: f64,
    lp: f64,
    g_loss: f64,
    g_port: [f64; 2],
    /// Gyrator conductances, `gyr[i][j] = -gyr[j][i]`.
    gyr: Vec<Vec<f64>>,
    index: f64,
    phases: Vec<f64>,
    wm: f64,
    w: f64,
    excite: Port,
}

impl Circuit {
    fn cap(&self, u: usize, t: f64) -> f64 {
        self.cp * (1.0 + self.index * (self.wm * t + self.phases[u]).cos())
    }

    /// Node voltages `[P1, 1..=N, P2]` from the charges at time `t`.
    fn voltages(&self, q: &[f64], t: f64, v: &mut [f64]) {
        let n = self.n;
        for u in 0..n {
            v[u + 1] = q[u] / self.cap(u, t);
        }
        let source = (self.w * t).cos();
        for (slot, node) in [(0, 0), (1, n + 1)] {
            let drive = if (slot == 0) == (self.excite == Port::P1) { source } else { 0.0 };
            let coupled: f64 = (1..=n).map(|j| self.gyr[node][j] * v[j]).sum();
            v[node] = (drive - coupled) / self.g_port[slot];
        }
    }

    /// `d/dt` of `[q_1..q_N, iL_1..iL_N]`.
    fn derivative(&self, x: &[f64], t: f64, v: &mut [f64], dx: &mut [f64]) {
        let n = self.n;
        self.voltages(&x[..n], t, v);
        for u in 0..n {
            let node = u + 1;
            let net: f64 = (0..n + 2).map(|j| self.gyr[node][j] * v[j]).sum();
            dx[u] = -(x[n + u] + self.g_loss * v[node] + net);
            dx[n + u] = v[node] / self.lp;
        }
    }
}

fn build_circuit(
    elems: &BandpassElements,
    modulation: &ModulationSpec,
    freq_hz: f64,
    excite: Port,
) -> Result<Circuit> {
    let n = elems.order();
    if n > MAX_ORDER {
        return Err(Error::invalid(format!(
            "the transient oracle handles at most {MAX_ORDER} resonators, got {n}"
        )));
    }
    if modulation.phases.len() != n {
        return Err(Error::invalid("one modulation phase per resonator is required"));
    }
    if elems.susceptances.iter().any(|&b| b != 0.0) {
        return Err(Error::invalid(
            "the transient oracle needs synchronously tuned resonators",
        ));
    }
    let nodes = n + 2;
    let mut gyr = vec![vec![0.0; nodes]; nodes];
    for (i, j, jv) in elems.inverter_list() {
        if j != i + 1 {
            return Err(Error::invalid(format!(
                "the transient oracle needs an in-line network, found coupling ({i}, {j})"
            )));
        }
        gyr[i][j] = jv;
        gyr[j][i] = -jv;
    }
    Ok(Circuit {
        n,
        cp: elems.cp,
        lp: elems.lp,
        g_loss: elems.loss_conductance,
        g_port: elems.port_conductance,
        gyr,
        index: modulation.index,
        phases: modulation.phases.clone(),
        wm: modulation.omega_m(),
        w: 2.0 * PI * freq_hz,
        excite,
    })
}

/// Simulate the network driven by a unit cosine current at `excite` and
/// return port-wave magnitudes at `f + k fm`.
pub fn transient_sparams(
    elems: &BandpassElements,
    modulation: &ModulationSpec,
    freq_hz: f64,
    excite: Port,
    config: &TransientConfig,
) -> Result<TransientResult> {
    config.validate()?;
    if !(freq_hz > 0.0 && freq_hz.is_finite()) {
        return Err(Error::invalid(format!("drive frequency must be positive, got {freq_hz}")));
    }
    let fm = modulation.fm;
    let f = snap_frequency(freq_hz, fm, config.beat_cycles);
    let kmax = config.k_max;
    if f - kmax as f64 * fm <= 0.0 {
        return Err(Error::SpectralSingularity {
            freq_hz: f,
            harmonic: -kmax,
            shifted_hz: f - kmax as f64 * fm,
        });
    }
    let circuit = build_circuit(elems, modulation, f, excite)?;
    let n = circuit.n;

    let period = config.beat_cycles as f64 / fm;
    let f_max = f + (kmax + 2) as f64 * fm;
    let steps = (period * f_max * config.samples_per_period as f64).ceil() as usize;
    let h = period / steps as f64;

    let nk = (2 * kmax + 1) as usize;
    // Per-step rotation for each harmonic, refreshed exactly at every window start.
    let rot: Vec<Complex64> = (-kmax..=kmax)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * (f + k as f64 * fm) * h))
        .collect();

    let mut x = vec![0.0; 2 * n];
    let mut v = vec![0.0; n + 2];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; 2 * n], vec![0.0; 2 * n], vec![0.0; 2 * n], vec![0.0; 2 * n]);
    let mut tmp = vec![0.0; 2 * n];
    let (na, nb) = (excite.node(n + 2), excite.other().node(n + 2));
    let mut previous: Option<Vec<Complex64>> = None;
    let mut change = f64::INFINITY;

    for window in 0..config.max_windows {
        let record = window >= config.settle_windows;
        let mut acc = vec![Complex64::new(0.0, 0.0); 2 * nk];
        let mut phasor = vec![Complex64::new(1.0, 0.0); nk];
        for step in 0..steps {
            // Source and modulation are T-periodic, so local window time suffices.
            let t = step as f64 * h;
            if record {
                circuit.voltages(&x[..n], t, &mut v);
                for i in 0..nk {
                    acc[i] += v[na] * phasor[i];
                    acc[nk + i] += v[nb] * phasor[i];
                    phasor[i] *= rot[i];
                }
            }
            circuit.derivative(&x, t, &mut v, &mut k1);
            for i in 0..2 * n {
                tmp[i] = x[i] + 0.5 * h * k1[i];
            }
            circuit.derivative(&tmp, t + 0.5 * h, &mut v, &mut k2);
            for i in 0..2 * n {
                tmp[i] = x[i] + 0.5 * h * k2[i];
            }
            circuit.derivative(&tmp, t + 0.5 * h, &mut v, &mut k3);
            for i in 0..2 * n {
                tmp[i] = x[i] + h * k3[i];
            }
            circuit.derivative(&tmp, t + h, &mut v, &mut k4);
            for i in 0..2 * n {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        if !record {
            continue;
        }
        // X_k = (2 / T) * sum v e^{-j w_k t} h
        let scale = 2.0 / steps as f64;
        let waves: Vec<Complex64> = acc.iter().map(|a| a * scale).collect();
        if let Some(prev) = &previous {
            change = waves
                .iter()
                .zip(prev)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            if change <= config.tolerance {
                let [g1, g2] = elems.port_conductance;
                let (ga, gb) = match excite {
                    Port::P1 => (g1, g2),
                    Port::P2 => (g2, g1),
                };
                let reflected = (0..nk)
                    .map(|i| {
                        let mut s = 2.0 * ga * waves[i];
                        if i as i32 == kmax {
                            s -= 1.0;
                        }
                        s.norm()
                    })
                    .collect();
                let transmitted = (0..nk)
                    .map(|i| (2.0 * (ga * gb).sqrt() * waves[nk + i]).norm())
                    .collect();
                return Ok(TransientResult {
                    requested_hz: freq_hz,
                    freq_hz: f,
                    excite,
                    k_max: kmax,
                    reflected,
                    transmitted,
                    windows: window + 1,
                    change,
                });
            }
        }
        previous = Some(waves);
    }
    Err(Error::NotSettled {
        freq_hz: f,
        change,
        windows: config.max_windows,
    })
}

/// Harmonic count of the frequency-domain reference in [`compare`].
pub const REFERENCE_HARMONICS: usize = 15;

/// Transient and frequency-domain fundamental magnitudes at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub requested_hz: f64,
    pub freq_hz: f64,
    /// `[S11, S21, S12, S22]` in dB from the harmonic-balance solve.
    pub reference_db: [f64; 4],
    /// Same from the transient run.
    pub transient_db: [f64; 4],
}

impl OracleRow {
    pub fn delta_db(&self) -> [f64; 4] {
        let mut d = [0.0; 4];
        for i in 0..4 {
            d[i] = (self.transient_db[i] - self.reference_db[i]).abs();
        }
        d
    }

    /// Largest of the transmission deltas `|S21|`, `|S12|`.
    pub fn transmission_delta_db(&self) -> f64 {
        let d = self.delta_db();
        d[1].max(d[2])
    }
}

/// Run the oracle for both excitations at each frequency and compare with a
/// rigorous solve at [`REFERENCE_HARMONICS`] harmonics.
pub fn compare(design: &Design, freqs: &[f64], config: &TransientConfig) -> Result<Vec<OracleRow>> {
    let elems = design.elements()?;
    let reference = design
        .with_mode(Mode::Rigorous)
        .with_harmonics(REFERENCE_HARMONICS.max(design.modulation.harmonics))?;
    freqs
        .par_iter()
        .map(|&req| {
            let fwd = transient_sparams(&elems, &design.modulation, req, Port::P1, config)?;
            let bwd = transient_sparams(&elems, &design.modulation, req, Port::P2, config)?;
            let f = fwd.freq_hz;
            let sys = crate::harmonic::assemble_modulated(
                &elems,
                &reference.modulation,
                2.0 * PI * f,
                Mode::Rigorous,
            )?;
            let s = sparams_at(&sys)?[reference.modulation.k_max() as usize];
            let to_db = |m: f64| 20.0 * m.log10();
            Ok(OracleRow {
                requested_hz: req,
                freq_hz: f,
                reference_db: [db(s.s11), db(s.s21), db(s.s12), db(s.s22)],
                transient_db: [
                    to_db(fwd.reflected_at(0)),
                    to_db(fwd.transmitted_at(0)),
                    to_db(bwd.transmitted_at(0)),
                    to_db(bwd.reflected_at(0)),
                ],
            })
        })
        .collect()
}
