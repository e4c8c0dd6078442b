//! Multi-harmonic block system for resonators with sinusoidally modulated
//! capacitors, `C_p(t) = C_p [1 + dm cos(w_m t + phi_u)]`.
//!
//! Unknowns are ordered node-major: node `i` (ports included) owns the rows
//! `i * Nhar .. (i + 1) * Nhar`, one per harmonic `k = -K ..= K`.
//!
//! Two resonator models are available:
//!
//! * [`Mode::Rigorous`] evaluates every harmonic resonator at its shifted
//!   frequency `w + k w_m` and couples adjacent harmonics with
//!   `j D (w + k w_m)` above and `j E (w + k w_m)` below the diagonal, where
//!   `D = (dm Cp / 2) e^{-j phi}` and `E = (dm Cp / 2) e^{+j phi}`.
//! * [`Mode::CmApprox`] replaces each harmonic resonator by the static one plus
//!   a frequency-invariant susceptance `B_k = 2 k w_m Cp`, and couples harmonics
//!   `k - 1` and `k` through the frequency-invariant non-reciprocal inverters
//!   evaluated at `w0`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::network::{BandpassElements, BandpassSpec};

/// Resonator model used when assembling the harmonic system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    Rigorous,
    #[default]
    CmApprox,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Rigorous => "rigorous",
            Mode::CmApprox => "cm",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rigorous" => Ok(Mode::Rigorous),
            "cm" | "cm_approx" | "approx" => Ok(Mode::CmApprox),
            other => Err(Error::Config(format!(
                "unknown mode `{other}` (expected `rigorous` or `cm`)"
            ))),
        }
    }
}

/// Modulation applied to every resonator capacitor.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationSpec {
    /// Modulation frequency in Hz.
    pub fm: f64,
    /// Modulation index, `0 <= dm < 1`.
    pub index: f64,
    /// Initial phase of each resonator in radians.
    pub phases: Vec<f64>,
    /// Number of harmonics kept, odd.
    pub harmonics: usize,
}

impl ModulationSpec {
    pub fn new(fm: f64, index: f64, phases: Vec<f64>, harmonics: usize) -> Result<Self> {
        if !(fm > 0.0 && fm.is_finite()) {
            return Err(Error::invalid(format!("modulation frequency must be positive, got {fm}")));
        }
        if !(0.0..1.0).contains(&index) {
            return Err(Error::invalid(format!(
                "modulation index must satisfy 0 <= dm < 1, got {index}"
            )));
        }
        if harmonics == 0 || harmonics % 2 == 0 {
            return Err(Error::invalid(format!(
                "number of harmonics must be odd and positive, got {harmonics}"
            )));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("modulation phases must be finite"));
        }
        Ok(Self {
            fm,
            index,
            phases,
            harmonics,
        })
    }

    /// Progressive phasing `phi_u = (u - 1) * phase_step` over `order` resonators.
    pub fn progressive(
        fm: f64,
        index: f64,
        phase_step: f64,
        order: usize,
        harmonics: usize,
    ) -> Result<Self> {
        let phases = (0..order).map(|u| u as f64 * phase_step).collect();
        Self::new(fm, index, phases, harmonics)
    }

    /// Highest harmonic order `K = (Nhar - 1) / 2`.
    pub fn k_max(&self) -> i32 {
        (self.harmonics as i32 - 1) / 2
    }

    pub fn omega_m(&self) -> f64 {
        2.0 * PI * self.fm
    }

    pub fn harmonic_range(&self) -> std::ops::RangeInclusive<i32> {
        -self.k_max()..=self.k_max()
    }

    /// Same modulation with a different harmonic count.
    pub fn with_harmonics(&self, harmonics: usize) -> Result<Self> {
        Self::new(self.fm, self.index, self.phases.clone(), harmonics)
    }

    pub fn with_index(&self, index: f64) -> Result<Self> {
        Self::new(self.fm, index, self.phases.clone(), self.harmonics)
    }
}

/// Assembled `(N+2) Nhar` square admittance system.
#[derive(Debug, Clone)]
pub struct HarmonicSystem {
    matrix: ComplexMatrix,
    nodes: usize,
    harmonics: usize,
    omega: f64,
    mode: Mode,
    port_conductance: [f64; 2],
}

impl HarmonicSystem {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.dim()
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn harmonics(&self) -> usize {
        self.harmonics
    }

    pub fn k_max(&self) -> i32 {
        (self.harmonics as i32 - 1) / 2
    }

    /// Angular sweep frequency the system was assembled at.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn freq_hz(&self) -> f64 {
        self.omega / (2.0 * PI)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn port_conductance(&self) -> [f64; 2] {
        self.port_conductance
    }

    #[cfg(test)]
    pub(crate) fn with_matrix(mut self, matrix: ComplexMatrix) -> Self {
        self.matrix = matrix;
        self
    }

    /// Row of unknown `V_{node, k}`.
    #[inline]
    pub fn index(&self, node: usize, k: i32) -> usize {
        debug_assert!(node < self.nodes && k.abs() <= self.k_max());
        node * self.harmonics + (k + self.k_max()) as usize
    }
}

/// Frequency-invariant susceptance `2 k w_m C / (w0 FB)` of harmonic resonator `k`.
pub fn harmonic_susceptance(k: i32, fm: f64, spec: &BandpassSpec) -> f64 {
    2.0 * k as f64 * 2.0 * PI * fm * spec.lowpass_capacitance
        / (spec.omega0() * spec.fractional_bandwidth)
}

/// Direction of a non-reciprocal harmonic coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// From harmonic `k - 1` to harmonic `k`.
    Up,
    /// From harmonic `k` to harmonic `k - 1`.
    Down,
}

/// Frequency-invariant inverter between harmonics `k - 1` and `k` of resonator `u`.
///
/// `Up` is `(dm / 2) C / (w0 FB) e^{-j phi_u} (w0 + k w_m)` and `Down` is the
/// same with `e^{+j phi_u}` and `(w0 + (k - 1) w_m)`.
pub fn nonreciprocal_inverter_lowpass(
    u: usize,
    k: i32,
    direction: Direction,
    spec: &BandpassSpec,
    modulation: &ModulationSpec,
) -> Complex64 {
    let w0 = spec.omega0();
    let scale =
        0.5 * modulation.index * spec.lowpass_capacitance / (w0 * spec.fractional_bandwidth);
    lowpass_inverter(scale, modulation.phases[u - 1], k, direction, w0, modulation.omega_m())
}

fn lowpass_inverter(
    scale: f64,
    phase: f64,
    k: i32,
    direction: Direction,
    w0: f64,
    wm: f64,
) -> Complex64 {
    match direction {
        Direction::Up => Complex64::from_polar(scale * (w0 + k as f64 * wm), -phase),
        Direction::Down => Complex64::from_polar(scale * (w0 + (k - 1) as f64 * wm), phase),
    }
}

/// Assemble the block admittance matrix at angular frequency `omega`.
pub fn assemble_modulated(
    elems: &BandpassElements,
    modulation: &ModulationSpec,
    omega: f64,
    mode: Mode,
) -> Result<HarmonicSystem> {
    let n = elems.order();
    if modulation.phases.len() != n {
        return Err(Error::invalid(format!(
            "{} modulation phases given for {n} resonators",
            modulation.phases.len()
        )));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::invalid(format!(
            "angular frequency must be positive, got {omega}"
        )));
    }
    let nodes = elems.nodes();
    let nh = modulation.harmonics;
    let kmax = modulation.k_max();
    let wm = modulation.omega_m();
    if mode == Mode::Rigorous {
        let shifted = omega - kmax as f64 * wm;
        if shifted <= 0.0 {
            return Err(Error::SpectralSingularity {
                freq_hz: omega / (2.0 * PI),
                harmonic: -kmax,
                shifted_hz: shifted / (2.0 * PI),
            });
        }
    }

    let mut system = HarmonicSystem {
        matrix: ComplexMatrix::zeros(nodes * nh),
        nodes,
        harmonics: nh,
        omega,
        mode,
        port_conductance: elems.port_conductance,
    };
    let j = Complex64::new(0.0, 1.0);

    for k in -kmax..=kmax {
        for (node, g) in [(0, elems.port_conductance[0]), (nodes - 1, elems.port_conductance[1])] {
            let r = system.index(node, k);
            system.matrix.set(r, r, Complex64::new(g, 0.0));
        }
        for &(a, b, jv) in &elems.inverter_list() {
            let (ra, rb) = (system.index(a, k), system.index(b, k));
            system.matrix.set(ra, rb, j * jv);
            system.matrix.set(rb, ra, j * jv);
        }
    }

    let half = 0.5 * modulation.index * elems.cp;
    for u in 1..=n {
        let phase = modulation.phases[u - 1];
        let fixed = Complex64::new(elems.loss_conductance, elems.susceptances[u - 1]);
        match mode {
            Mode::Rigorous => {
                let d = Complex64::from_polar(half, -phase);
                let e = Complex64::from_polar(half, phase);
                for k in -kmax..=kmax {
                    let wk = omega + k as f64 * wm;
                    let r = system.index(u, k);
                    system.matrix.set(r, r, elems.lc_admittance(wk) + fixed);
                    if k < kmax {
                        system.matrix.set(r, r + 1, j * d * wk);
                    }
                    if k > -kmax {
                        system.matrix.set(r, r - 1, j * e * wk);
                    }
                }
            }
            Mode::CmApprox => {
                let lc = elems.lc_admittance(omega);
                for k in -kmax..=kmax {
                    let r = system.index(u, k);
                    let b_hat = 2.0 * k as f64 * wm * elems.cp;
                    system
                        .matrix
                        .set(r, r, lc + fixed + Complex64::new(0.0, b_hat));
                    if k > -kmax {
                        let up = lowpass_inverter(half, phase, k, Direction::Up, elems.omega0, wm);
                        let down =
                            lowpass_inverter(half, phase, k, Direction::Down, elems.omega0, wm);
                        system.matrix.set(r - 1, r, j * up);
                        system.matrix.set(r, r - 1, j * down);
                    }
                }
            }
        }
    }
    Ok(system)
}
