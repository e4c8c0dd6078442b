//! Bandpass scaling of the normalized prototype and the static nodal system.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::synthesis::CouplingMatrix;

/// Center frequency, bandwidth and terminations of the bandpass filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandpassSpec {
    /// Center frequency in Hz.
    pub f0: f64,
    /// Fractional bandwidth `(w_c2 - w_c1) / w0`.
    pub fractional_bandwidth: f64,
    /// Lowpass scaling capacitance in farads.
    pub lowpass_capacitance: f64,
    /// Port conductances `[G_P1, G_P2]` in siemens.
    pub port_conductance: [f64; 2],
}

impl BandpassSpec {
    /// Normalized spec: `C = 1 F` and unit port conductances.
    pub fn new(f0: f64, fractional_bandwidth: f64) -> Result<Self> {
        Self {
            f0,
            fractional_bandwidth,
            lowpass_capacitance: 1.0,
            port_conductance: [1.0, 1.0],
        }
        .validated()
    }

    pub fn with_capacitance(mut self, c: f64) -> Result<Self> {
        self.lowpass_capacitance = c;
        self.validated()
    }

    pub fn with_ports(mut self, g_p1: f64, g_p2: f64) -> Result<Self> {
        self.port_conductance = [g_p1, g_p2];
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.f0) {
            return Err(Error::invalid(format!("f0 must be positive, got {}", self.f0)));
        }
        if !(self.fractional_bandwidth > 0.0 && self.fractional_bandwidth < 1.0) {
            return Err(Error::invalid(format!(
                "fractional bandwidth must lie in (0, 1), got {}",
                self.fractional_bandwidth
            )));
        }
        if !ok(self.lowpass_capacitance) {
            return Err(Error::invalid("lowpass capacitance must be positive"));
        }
        if !self.port_conductance.iter().all(|&g| ok(g)) {
            return Err(Error::invalid("port conductances must be positive"));
        }
        Ok(self)
    }

    pub fn omega0(&self) -> f64 {
        2.0 * PI * self.f0
    }

    /// Absolute bandwidth `FB * f0` in Hz.
    pub fn bandwidth_hz(&self) -> f64 {
        self.fractional_bandwidth * self.f0
    }
}

/// Physical element values of the bandpass network.
#[derive(Debug, Clone, PartialEq)]
pub struct BandpassElements {
    order: usize,
    pub omega0: f64,
    pub fractional_bandwidth: f64,
    pub lowpass_capacitance: f64,
    /// Resonator capacitance in farads.
    pub cp: f64,
    /// Resonator inductance in henries.
    pub lp: f64,
    /// Admittance inverters in siemens, `(N+2)^2` row-major with zero diagonal.
    inverters: Vec<f64>,
    /// Frequency-invariant susceptances `B_1 ..= B_N` in siemens.
    pub susceptances: Vec<f64>,
    pub port_conductance: [f64; 2],
    /// Parallel loss conductance added to every resonator (zero when lossless).
    pub loss_conductance: f64,
}

impl BandpassElements {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of nodes, ports included.
    pub fn nodes(&self) -> usize {
        self.order + 2
    }

    /// Inverter `J[i][j]` between nodes `i` and `j`.
    #[inline]
    pub fn inverter(&self, i: usize, j: usize) -> f64 {
        self.inverters[i * self.nodes() + j]
    }

    /// Nonzero inverters as `(i, j, J)` with `i < j`.
    pub fn inverter_list(&self) -> Vec<(usize, usize, f64)> {
        let n = self.nodes();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.inverter(i, j);
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// `(G_P1, G_P2)` lookup by port node index, `None` for resonators.
    pub fn port_conductance_of(&self, node: usize) -> Option<f64> {
        if node == 0 {
            Some(self.port_conductance[0])
        } else if node == self.order + 1 {
            Some(self.port_conductance[1])
        } else {
            None
        }
    }

    /// `j w Cp + 1 / (j w Lp)`, the unmodulated LC admittance.
    pub fn lc_admittance(&self, omega: f64) -> Complex64 {
        Complex64::new(0.0, omega * self.cp - 1.0 / (omega * self.lp))
    }

    /// Static resonator admittance `Y_p^(u)` including detuning and loss.
    pub fn resonator_admittance(&self, u: usize, omega: f64) -> Complex64 {
        self.lc_admittance(omega)
            + Complex64::new(self.loss_conductance, self.susceptances[u - 1])
    }
}

/// Scale a normalized coupling matrix to bandpass element values.
///
/// Every coupling is multiplied by `sqrt(s_i s_j)` with `s = G_P` for ports
/// and `s = C` for resonators. This reproduces `J_P1,1 = M sqrt(G_P1 C)` and
/// `J_u,u+1 = M C` and extends the same rule to cross couplings.
pub fn scale(m: &CouplingMatrix, spec: &BandpassSpec) -> BandpassElements {
    let n = m.order();
    let size = m.size();
    let c = spec.lowpass_capacitance;
    let w0 = spec.omega0();
    let fb = spec.fractional_bandwidth;
    let weight = |i: usize| -> f64 {
        if i == 0 {
            spec.port_conductance[0].sqrt()
        } else if i == size - 1 {
            spec.port_conductance[1].sqrt()
        } else {
            c.sqrt()
        }
    };
    let mut inverters = vec![0.0; size * size];
    for i in 0..size {
        for j in 0..size {
            if i != j {
                inverters[i * size + j] = m.get(i, j) * weight(i) * weight(j);
            }
        }
    }
    BandpassElements {
        order: n,
        omega0: w0,
        fractional_bandwidth: fb,
        lowpass_capacitance: c,
        cp: c / (w0 * fb),
        lp: fb / (w0 * c),
        inverters,
        susceptances: (1..=n).map(|u| m.get(u, u) * c).collect(),
        port_conductance: spec.port_conductance,
        loss_conductance: 0.0,
    }
}

/// Nodal admittance matrix `G + Y_inv + Y_p` of the unmodulated network.
pub fn assemble_static(elems: &BandpassElements, omega: f64) -> Result<ComplexMatrix> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::invalid(format!(
            "angular frequency must be positive, got {omega}"
        )));
    }
    let size = elems.nodes();
    let mut y = ComplexMatrix::zeros(size);
    y.set(0, 0, Complex64::new(elems.port_conductance[0], 0.0));
    y.set(size - 1, size - 1, Complex64::new(elems.port_conductance[1], 0.0));
    for u in 1..=elems.order() {
        y.set(u, u, elems.resonator_admittance(u, omega));
    }
    for (i, j, jv) in elems.inverter_list() {
        y.set(i, j, Complex64::new(0.0, jv));
        y.set(j, i, Complex64::new(0.0, jv));
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::chebyshev_inline;

    fn m3() -> CouplingMatrix {
        CouplingMatrix::inline(&[0.8894, 0.8294, 0.8294, 0.8894], &[0.0; 3]).unwrap()
    }

    #[test]
    fn resonator_capacitance_for_order_three() {
        let spec = BandpassSpec::new(975e6, 0.048).unwrap();
        let e = scale(&m3(), &spec);
        let expected = 1.0 / (2.0 * PI * 975e6 * 0.048);
        assert!((e.cp - expected).abs() / expected < 1e-12);
        assert!((e.cp - 3.401e-9).abs() < 1e-12);
        let w0 = spec.omega0();
        assert!((w0 * w0 * e.lp * e.cp - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_scaling_reproduces_normalized_couplings() {
        let spec = BandpassSpec::new(1e9, 0.05).unwrap();
        let e = scale(&m3(), &spec);
        assert_eq!(e.inverter(0, 1), 0.8894);
        assert_eq!(e.inverter(1, 2), 0.8294);
        assert_eq!(e.inverter(3, 4), 0.8894);
    }

    #[test]
    fn physical_port_scaling() {
        let spec = BandpassSpec::new(1e9, 0.05)
            .unwrap()
            .with_ports(0.02, 0.02)
            .unwrap()
            .with_capacitance(2.0)
            .unwrap();
        let e = scale(&m3(), &spec);
        assert!((e.inverter(0, 1) - 0.8894 * (0.02f64 * 2.0).sqrt()).abs() < 1e-15);
        assert!((e.inverter(1, 2) - 0.8294 * 2.0).abs() < 1e-15);
    }

    #[test]
    fn static_matrix_structure() {
        let spec = BandpassSpec::new(975e6, 0.048).unwrap();
        let e = scale(&m3(), &spec);
        let y = assemble_static(&e, spec.omega0()).unwrap();
        for u in 1..=3 {
            assert!(y.get(u, u).norm() < 1e-6, "resonance at w0");
        }
        for r in 0..5 {
            for c in 0..5 {
                let tridiagonal = (r as isize - c as isize).abs() <= 1;
                if !tridiagonal {
                    assert_eq!(y.get(r, c).norm(), 0.0);
                }
            }
        }
        assert_eq!(y.max_abs_diff(&y.transpose()), 0.0);
    }

    #[test]
    fn zero_frequency_rejected() {
        let spec = BandpassSpec::new(975e6, 0.048).unwrap();
        let e = scale(&chebyshev_inline(3, 13.0).unwrap(), &spec);
        assert!(assemble_static(&e, 0.0).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(BandpassSpec::new(-1.0, 0.1).is_err());
        assert!(BandpassSpec::new(1e9, 1.0).is_err());
        assert!(BandpassSpec::new(1e9, 0.0).is_err());
        assert!(BandpassSpec::new(1e9, 0.1).unwrap().with_ports(0.0, 1.0).is_err());
    }
}
