//! Resonator loss and parasitic cross couplings.

use crate::error::{Error, Result};
use crate::network::BandpassElements;
use crate::synthesis::CouplingMatrix;

/// A parasitic coupling `M[i][j] = M[j][i] = value` in normalized units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parasitic {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

impl Parasitic {
    pub fn new(i: usize, j: usize, value: f64) -> Self {
        Self { i, j, value }
    }
}

/// Non-idealities layered on top of the designed network.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImpairmentSpec {
    /// Unloaded quality factor of every resonator.
    pub unloaded_q: Option<f64>,
    pub parasitics: Vec<Parasitic>,
}

impl ImpairmentSpec {
    pub fn is_empty(&self) -> bool {
        self.unloaded_q.is_none() && self.parasitics.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(q) = self.unloaded_q {
            if !(q > 0.0) {
                return Err(Error::invalid(format!("unloaded Q must be positive, got {q}")));
            }
        }
        Ok(())
    }
}

/// Add a parallel conductance `w0 Cp / Qu` to every resonator.
pub fn apply_loss(elems: &BandpassElements, unloaded_q: f64) -> Result<BandpassElements> {
    if !(unloaded_q > 0.0) {
        return Err(Error::invalid(format!(
            "unloaded Q must be positive, got {unloaded_q}"
        )));
    }
    let mut out = elems.clone();
    out.loss_conductance = if unloaded_q.is_infinite() {
        0.0
    } else {
        elems.omega0 * elems.cp / unloaded_q
    };
    Ok(out)
}

/// Insert parasitic couplings symmetrically.
///
/// Only entries that are zero in the design and lie off the main line
/// (`|i - j| >= 2`) may be set: parasitics add paths, they do not retune
/// existing ones.
pub fn apply_parasitics(m: &CouplingMatrix, extra: &[Parasitic]) -> Result<CouplingMatrix> {
    let size = m.size();
    let mut out = m.clone();
    for p in extra {
        if p.i >= size || p.j >= size {
            return Err(Error::invalid(format!(
                "parasitic ({}, {}) outside a {size}x{size} matrix",
                p.i, p.j
            )));
        }
        if p.i == p.j {
            return Err(Error::invalid(format!(
                "parasitic ({}, {}) is a self coupling",
                p.i, p.j
            )));
        }
        if p.i.abs_diff(p.j) < 2 || m.get(p.i, p.j) != 0.0 {
            return Err(Error::invalid(format!(
                "parasitic ({}, {}) would overwrite an in-line coupling",
                p.i, p.j
            )));
        }
        if !p.value.is_finite() {
            return Err(Error::invalid("parasitic coupling must be finite"));
        }
        out = out.with_symmetric_entry(p.i, p.j, p.value);
    }
    Ok(out)
}
