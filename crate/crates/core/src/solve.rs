//! Linear solves and S-parameter extraction over a frequency sweep.
//!
//! Each port is a Norton source in parallel with its conductance. With a unit
//! current injected at port `a` on the fundamental, the waves are
//!
//! ```text
//! S_aa          = 2 G_a V_{a,0} - 1
//! S_aa^(k != 0) = 2 G_a V_{a,k}
//! S_ba^(k)      = 2 sqrt(G_a G_b) V_{b,k}
//! ```

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::design::Design;
use crate::error::{Error, Result};
use crate::harmonic::{assemble_modulated, HarmonicSystem};
use crate::linalg::LuFactors;
use crate::network::{assemble_static, BandpassElements};

/// Systems whose condition estimate exceeds this are reported as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Excitation / observation port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Port {
    P1,
    P2,
}

impl Port {
    pub fn other(self) -> Port {
        match self {
            Port::P1 => Port::P2,
            Port::P2 => Port::P1,
        }
    }

    /// Node index of the port in a network with `nodes` nodes.
    pub fn node(self, nodes: usize) -> usize {
        match self {
            Port::P1 => 0,
            Port::P2 => nodes - 1,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Port::P1 => 1,
            Port::P2 => 2,
        }
    }

    fn slot(self) -> usize {
        self.number() as usize - 1
    }
}

/// Linearly spaced frequency grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub f_start: f64,
    pub f_stop: f64,
    pub points: usize,
}

impl SweepGrid {
    pub fn new(f_start: f64, f_stop: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::invalid(format!("a sweep needs at least 2 points, got {points}")));
        }
        if !(f_start > 0.0 && f_stop > f_start && f_stop.is_finite()) {
            return Err(Error::invalid(format!(
                "sweep range must satisfy 0 < f_start < f_stop, got [{f_start}, {f_stop}]"
            )));
        }
        Ok(Self {
            f_start,
            f_stop,
            points,
        })
    }

    /// `points` samples over `span_factor` passband widths centered on `f0`.
    pub fn around(f0: f64, bandwidth_hz: f64, span_factor: f64, points: usize) -> Result<Self> {
        let half = 0.5 * span_factor * bandwidth_hz;
        Self::new(f0 - half, f0 + half, points)
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let step = (self.f_stop - self.f_start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.f_stop
                } else {
                    self.f_start + i as f64 * step
                }
            })
            .collect()
    }
}

/// Four port-to-port coefficients for one harmonic.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SParams {
    pub s11: Complex64,
    pub s21: Complex64,
    pub s12: Complex64,
    pub s22: Complex64,
}

impl SParams {
    pub fn as_array(&self) -> [Complex64; 4] {
        [self.s11, self.s21, self.s12, self.s22]
    }

    /// `S_ba`, output port first as in the usual notation.
    pub fn get(&self, b: Port, a: Port) -> Complex64 {
        match (b, a) {
            (Port::P1, Port::P1) => self.s11,
            (Port::P2, Port::P1) => self.s21,
            (Port::P1, Port::P2) => self.s12,
            (Port::P2, Port::P2) => self.s22,
        }
    }
}

/// Waves leaving both ports for one excitation, indexed by `k + K`.
#[derive(Debug, Clone, PartialEq)]
pub struct PortWaves {
    pub excite: Port,
    /// `S_aa^(k)`.
    pub reflected: Vec<Complex64>,
    /// `S_ba^(k)`, `b` the opposite port.
    pub transmitted: Vec<Complex64>,
}

/// Response at one sweep frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub freq_hz: f64,
    /// `harmonics[k + K]`.
    pub harmonics: Vec<SParams>,
}

/// Sweep results for every frequency, port pair and harmonic.
#[derive(Debug, Clone, PartialEq)]
pub struct SParamSet {
    k_max: i32,
    points: Vec<SweepPoint>,
}

impl SParamSet {
    pub fn new(k_max: i32, points: Vec<SweepPoint>) -> Self {
        Self { k_max, points }
    }

    pub fn k_max(&self) -> i32 {
        self.k_max
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[SweepPoint] {
        &self.points
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.freq_hz).collect()
    }

    pub fn fundamental(&self, i: usize) -> SParams {
        self.at(i, 0)
    }

    pub fn at(&self, i: usize, k: i32) -> SParams {
        self.points[i].harmonics[(k + self.k_max) as usize]
    }

    /// Grid index closest to `freq_hz`.
    pub fn nearest_index(&self, freq_hz: f64) -> usize {
        self.points
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1.freq_hz - freq_hz)
                    .abs()
                    .total_cmp(&(b.1.freq_hz - freq_hz).abs())
            })
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// CSV header: `f_Hz` then `S<b><a>_k<k>_re`, `..._im` for every harmonic.
    pub fn csv_header(&self) -> Vec<String> {
        let mut cols = vec!["f_Hz".to_string()];
        for k in -self.k_max..=self.k_max {
            for name in ["S11", "S21", "S12", "S22"] {
                cols.push(format!("{name}_k{k}_re"));
                cols.push(format!("{name}_k{k}_im"));
            }
        }
        cols
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidInput(format!("csv write failed: {e}"));
        w.write_record(self.csv_header()).map_err(io)?;
        for p in &self.points {
            let mut row = Vec::with_capacity(1 + 8 * p.harmonics.len());
            row.push(p.freq_hz.to_string());
            for s in &p.harmonics {
                for v in s.as_array() {
                    row.push(v.re.to_string());
                    row.push(v.im.to_string());
                }
            }
            w.write_record(&row).map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidInput(format!("csv write failed: {e}")))?;
        Ok(())
    }
}

fn factor_checked(system: &HarmonicSystem) -> Result<LuFactors> {
    let freq_hz = system.freq_hz();
    let lu = system.matrix().lu().ok_or(Error::Singular {
        freq_hz,
        condition: f64::INFINITY,
    })?;
    let condition = lu.condition_estimate();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Singular { freq_hz, condition });
    }
    Ok(lu)
}

fn unit_excitation(system: &HarmonicSystem, excite: Port) -> Vec<Complex64> {
    let mut rhs = vec![Complex64::new(0.0, 0.0); system.size()];
    rhs[system.index(excite.node(system.nodes()), 0)] = Complex64::new(1.0, 0.0);
    rhs
}

/// Nodal voltages for a unit current injected at `(excite, k = 0)`.
pub fn solve_at(system: &HarmonicSystem, excite: Port) -> Result<Vec<Complex64>> {
    let lu = factor_checked(system)?;
    Ok(lu.solve(&unit_excitation(system, excite)))
}

/// Convert nodal voltages from [`solve_at`] into outgoing waves.
pub fn extract_sparams(v: &[Complex64], system: &HarmonicSystem, excite: Port) -> PortWaves {
    let g = system.port_conductance();
    let a = excite;
    let b = excite.other();
    let (ga, gb) = (g[a.slot()], g[b.slot()]);
    let (na, nb) = (a.node(system.nodes()), b.node(system.nodes()));
    let kmax = system.k_max();
    let mut reflected = Vec::with_capacity(system.harmonics());
    let mut transmitted = Vec::with_capacity(system.harmonics());
    for k in -kmax..=kmax {
        let mut s_aa = 2.0 * ga * v[system.index(na, k)];
        if k == 0 {
            s_aa -= 1.0;
        }
        reflected.push(s_aa);
        transmitted.push(2.0 * (ga * gb).sqrt() * v[system.index(nb, k)]);
    }
    PortWaves {
        excite,
        reflected,
        transmitted,
    }
}

/// Solve one assembled system for both excitations.
pub fn sparams_at(system: &HarmonicSystem) -> Result<Vec<SParams>> {
    let lu = factor_checked(system)?;
    let fwd = extract_sparams(&lu.solve(&unit_excitation(system, Port::P1)), system, Port::P1);
    let bwd = extract_sparams(&lu.solve(&unit_excitation(system, Port::P2)), system, Port::P2);
    Ok((0..system.harmonics())
        .map(|i| SParams {
            s11: fwd.reflected[i],
            s21: fwd.transmitted[i],
            s12: bwd.transmitted[i],
            s22: bwd.reflected[i],
        })
        .collect())
}

/// Unmodulated response computed from the static `(N+2)` system.
pub fn static_sparams(elems: &BandpassElements, freq_hz: f64) -> Result<SParams> {
    let y = assemble_static(elems, 2.0 * PI * freq_hz)?;
    let lu = y.lu().ok_or(Error::Singular {
        freq_hz,
        condition: f64::INFINITY,
    })?;
    let n = elems.nodes();
    let [g1, g2] = elems.port_conductance;
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    rhs[0] = Complex64::new(1.0, 0.0);
    let v1 = lu.solve(&rhs);
    rhs[0] = Complex64::new(0.0, 0.0);
    rhs[n - 1] = Complex64::new(1.0, 0.0);
    let v2 = lu.solve(&rhs);
    let t = 2.0 * (g1 * g2).sqrt();
    Ok(SParams {
        s11: 2.0 * g1 * v1[0] - 1.0,
        s21: t * v1[n - 1],
        s12: t * v2[0],
        s22: 2.0 * g2 * v2[n - 1] - 1.0,
    })
}

/// Sweep a design over `grid`. Points are solved in parallel and returned in grid order.
pub fn sweep(design: &Design, grid: &SweepGrid) -> Result<SParamSet> {
    let elems = design.elements()?;
    let points = grid
        .frequencies()
        .into_par_iter()
        .map(|f| {
            let system =
                assemble_modulated(&elems, &design.modulation, 2.0 * PI * f, design.mode)?;
            Ok(SweepPoint {
                freq_hz: f,
                harmonics: sparams_at(&system)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SParamSet::new(design.modulation.k_max(), points))
}

/// Fundamental response of a design at a single frequency.
pub fn response_at(design: &Design, freq_hz: f64) -> Result<SParams> {
    let elems = design.elements()?;
    let system = assemble_modulated(&elems, &design.modulation, 2.0 * PI * freq_hz, design.mode)?;
    let all = sparams_at(&system)?;
    Ok(all[design.modulation.k_max() as usize])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::{Mode, ModulationSpec};
    use crate::network::{scale, BandpassSpec};
    use crate::synthesis::CouplingMatrix;

    #[test]
    fn disconnected_network_reflects_everything() {
        let m = CouplingMatrix::new(&vec![vec![0.0; 5]; 5]).unwrap();
        let spec = BandpassSpec::new(1e9, 0.05).unwrap();
        let elems = scale(&m, &spec);
        let modulation = ModulationSpec::new(1e7, 0.0, vec![0.0; 3], 1).unwrap();
        // Off resonance so the isolated resonators are not singular.
        let system =
            assemble_modulated(&elems, &modulation, 2.0 * PI * 1.01e9, Mode::CmApprox).unwrap();
        let v = solve_at(&system, Port::P1).unwrap();
        assert!((v[0] - 1.0).norm() < 1e-15);
        for x in &v[1..] {
            assert_eq!(x.norm(), 0.0);
        }
        let waves = extract_sparams(&v, &system, Port::P1);
        assert!((waves.reflected[0] - 1.0).norm() < 1e-15);
        assert_eq!(waves.transmitted[0].norm(), 0.0);
    }

    #[test]
    fn matched_port_has_no_reflection() {
        // One resonator at resonance, unit couplings: V_P1 = 1 / (2 G).
        let m = CouplingMatrix::inline(&[1.0, 1.0], &[0.0]).unwrap();
        let spec = BandpassSpec::new(1e9, 0.05).unwrap();
        let elems = scale(&m, &spec);
        let modulation = ModulationSpec::new(1e7, 0.0, vec![0.0], 1).unwrap();
        let system =
            assemble_modulated(&elems, &modulation, spec.omega0(), Mode::CmApprox).unwrap();
        let v = solve_at(&system, Port::P1).unwrap();
        assert!((v[0] - 0.5).norm() < 1e-12);
        let waves = extract_sparams(&v, &system, Port::P1);
        assert!(waves.reflected[0].norm() < 1e-12);
        assert!((waves.transmitted[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_system_reports_frequency() {
        // Isolated resonators at exact resonance: zero rows.
        let m = CouplingMatrix::new(&vec![vec![0.0; 4]; 4]).unwrap();
        let spec = BandpassSpec::new(1e9, 0.05).unwrap();
        let elems = scale(&m, &spec);
        let modulation = ModulationSpec::new(1e7, 0.0, vec![0.0; 2], 1).unwrap();
        let mut system =
            assemble_modulated(&elems, &modulation, spec.omega0(), Mode::CmApprox).unwrap();
        // Force an exact zero pivot regardless of rounding in w Cp - 1 / (w Lp).
        let mut mat = system.matrix().clone();
        mat.set(1, 1, Complex64::new(0.0, 0.0));
        system = system.with_matrix(mat);
        match solve_at(&system, Port::P1) {
            Err(Error::Singular { freq_hz, .. }) => assert!((freq_hz - 1e9).abs() < 1e-3),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn grid_endpoints_exact() {
        let g = SweepGrid::new(900e6, 1050e6, 401).unwrap();
        let f = g.frequencies();
        assert_eq!(f.len(), 401);
        assert_eq!(f[0], 900e6);
        assert_eq!(f[400], 1050e6);
        assert!(SweepGrid::new(1e9, 1e9, 10).is_err());
        assert!(SweepGrid::new(1e9, 2e9, 1).is_err());
    }
}
