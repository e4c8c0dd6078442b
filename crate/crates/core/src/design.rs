//! Complete filter designs and the plain-text design file format.
//!
//! A design file is TOML. Frequencies are numbers in Hz or strings with a
//! unit suffix (`"975 MHz"`), angles are in degrees.
//!
//! ```toml
//! mode = "cm"
//!
//! [prototype]
//! order = 3
//! return_loss_db = 13.0
//!
//! [bandpass]
//! f0 = "975 MHz"
//! fractional_bandwidth = 0.048
//!
//! [modulation]
//! fm = "22.8 MHz"
//! index = 0.05
//! phase_step_deg = 35.0
//! harmonics = 7
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::{Mode, ModulationSpec};
use crate::impairments::{apply_loss, apply_parasitics, ImpairmentSpec, Parasitic};
use crate::metrics::MetricsSpec;
use crate::network::{scale, BandpassElements, BandpassSpec};
use crate::optimize::{Objective, OptimizeSpec};
use crate::solve::SweepGrid;
use crate::synthesis::{chebyshev_inline, load_matrix, CouplingMatrix};

/// Default number of sweep points.
pub const DEFAULT_POINTS: usize = 401;
/// Default sweep span in passband widths.
pub const DEFAULT_SPAN: f64 = 3.0;

/// Everything needed to sweep one filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    /// Designed prototype, before parasitics.
    pub matrix: CouplingMatrix,
    pub bandpass: BandpassSpec,
    pub modulation: ModulationSpec,
    pub mode: Mode,
    pub impairments: ImpairmentSpec,
}

impl Design {
    pub fn new(
        matrix: CouplingMatrix,
        bandpass: BandpassSpec,
        modulation: ModulationSpec,
        mode: Mode,
    ) -> Result<Self> {
        if modulation.phases.len() != matrix.order() {
            return Err(Error::invalid(format!(
                "{} modulation phases given for {} resonators",
                modulation.phases.len(),
                matrix.order()
            )));
        }
        Ok(Self {
            matrix,
            bandpass,
            modulation,
            mode,
            impairments: ImpairmentSpec::default(),
        })
    }

    pub fn with_impairments(mut self, impairments: ImpairmentSpec) -> Result<Self> {
        impairments.validate()?;
        apply_parasitics(&self.matrix, &impairments.parasitics)?;
        self.impairments = impairments;
        Ok(self)
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        Self {
            mode,
            ..self.clone()
        }
    }

    pub fn with_harmonics(&self, harmonics: usize) -> Result<Self> {
        Ok(Self {
            modulation: self.modulation.with_harmonics(harmonics)?,
            ..self.clone()
        })
    }

    pub fn with_modulation(&self, modulation: ModulationSpec) -> Result<Self> {
        Design::new(self.matrix.clone(), self.bandpass, modulation, self.mode)?
            .with_impairments(self.impairments.clone())
    }

    /// Same design with progressive phasing `phi_u = (u - 1) * phase_step`.
    pub fn with_progressive(&self, fm: f64, index: f64, phase_step: f64) -> Result<Self> {
        self.with_modulation(ModulationSpec::progressive(
            fm,
            index,
            phase_step,
            self.matrix.order(),
            self.modulation.harmonics,
        )?)
    }

    pub fn order(&self) -> usize {
        self.matrix.order()
    }

    /// Prototype with parasitic couplings inserted.
    pub fn effective_matrix(&self) -> Result<CouplingMatrix> {
        apply_parasitics(&self.matrix, &self.impairments.parasitics)
    }

    /// Bandpass element values including loss and parasitics.
    pub fn elements(&self) -> Result<BandpassElements> {
        let elems = scale(&self.effective_matrix()?, &self.bandpass);
        match self.impairments.unloaded_q {
            Some(q) => apply_loss(&elems, q),
            None => Ok(elems),
        }
    }

    /// 401 points over three passband widths around `f0`.
    pub fn default_grid(&self) -> SweepGrid {
        self.grid(DEFAULT_POINTS)
    }

    pub fn grid(&self, points: usize) -> SweepGrid {
        SweepGrid::around(
            self.bandpass.f0,
            self.bandpass.bandwidth_hz(),
            DEFAULT_SPAN,
            points.max(2),
        )
        .expect("a validated bandpass spec always yields a valid grid")
    }
}

/// Third-order example: 975 MHz, 4.8 % bandwidth, 13 dB return loss.
pub fn order3_design() -> Design {
    let m = CouplingMatrix::inline(&[0.8894, 0.8294, 0.8294, 0.8894], &[0.0; 3])
        .expect("static matrix is valid");
    let bp = BandpassSpec::new(975e6, 0.048).expect("static spec is valid");
    let modulation = ModulationSpec::progressive(22.8e6, 0.05, 35f64.to_radians(), 3, 7)
        .expect("static modulation is valid");
    Design::new(m, bp, modulation, Mode::CmApprox).expect("static design is valid")
}

/// Fourth-order example: 890 MHz, 6.5 % bandwidth, 18.5 dB return loss.
pub fn order4_design() -> Design {
    let m = CouplingMatrix::inline(&[0.997, 0.873, 0.68, 0.873, 0.997], &[0.0; 4])
        .expect("static matrix is valid");
    let bp = BandpassSpec::new(890e6, 0.065).expect("static spec is valid");
    let modulation = ModulationSpec::progressive(19e6, 0.076, 48f64.to_radians(), 4, 9)
        .expect("static modulation is valid");
    Design::new(m, bp, modulation, Mode::CmApprox).expect("static design is valid")
}

/// Parse a frequency such as `975e6`, `"975 MHz"` or `"0.975GHz"`.
pub fn parse_frequency(text: &str) -> Result<f64> {
    let t = text.trim();
    let split = t
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let scale = match unit.trim() {
        "" | "Hz" | "hz" => 1.0,
        "kHz" | "khz" => 1e3,
        "MHz" | "mhz" => 1e6,
        "GHz" | "ghz" => 1e9,
        other => {
            return Err(Error::Config(format!(
                "unknown frequency unit '{other}' in '{text}' (use Hz, kHz, MHz or GHz)"
            )))
        }
    };
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse frequency '{text}'")))?;
    let hz = value * scale;
    if !hz.is_finite() {
        return Err(Error::Config(format!("frequency '{text}' is not finite")));
    }
    Ok(hz)
}

/// Frequency as written in a design file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Frequency {
    Hz(f64),
    Text(String),
}

impl Frequency {
    pub fn hz(&self) -> Result<f64> {
        match self {
            Frequency::Hz(v) => Ok(*v),
            Frequency::Text(s) => parse_frequency(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrototypeSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_loss_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandpassSection {
    pub f0: Frequency,
    pub fractional_bandwidth: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacitance: Option<f64>,
    /// `[G_P1, G_P2]` in siemens.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub port_conductance: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationSection {
    pub fm: Frequency,
    pub index: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_step_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases_deg: Option<Vec<f64>>,
    pub harmonics: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub start: Frequency,
    pub stop: Frequency,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    DEFAULT_POINTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParasiticEntry {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpairmentsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unloaded_q: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parasitics: Vec<ParasiticEntry>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_loss_level_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directivity_level_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bridge_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub fm: [Frequency; 2],
    pub index: [f64; 2],
    pub phase_step_deg: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_return_loss_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_insertion_loss_db: Option<f64>,
    /// `"center_directivity"` or `"directivity_bandwidth"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<String>,
    /// Directivity level for the bandwidth objective.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

/// Parsed design file, kept in file units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFile {
    /// `"cm"` or `"rigorous"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    pub prototype: PrototypeSection,
    pub bandpass: BandpassSection,
    pub modulation: ModulationSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impairments: Option<ImpairmentsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeSection>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl DesignFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().replace('\n', " ");
            match e.span() {
                Some(span) => Error::Config(format!("line {}: {}", line_of(text, span.start), msg.trim())),
                None => Error::Config(msg.trim().to_string()),
            }
        })
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Same file with every frequency written as a plain number of Hz.
    pub fn normalized(&self) -> Result<Self> {
        let hz = |f: &Frequency| f.hz().map(Frequency::Hz);
        let mut out = self.clone();
        out.bandpass.f0 = hz(&self.bandpass.f0)?;
        out.modulation.fm = hz(&self.modulation.fm)?;
        if let Some(g) = &mut out.grid {
            g.start = hz(&g.start)?;
            g.stop = hz(&g.stop)?;
        }
        if let Some(o) = &mut out.optimize {
            o.fm = [hz(&o.fm[0])?, hz(&o.fm[1])?];
        }
        Ok(out)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize design: {e}")))
    }

    pub fn mode(&self) -> Result<Mode> {
        match &self.mode {
            None => Ok(Mode::default()),
            Some(s) => s.parse(),
        }
    }

    pub fn matrix(&self) -> Result<CouplingMatrix> {
        let p = &self.prototype;
        match (&p.matrix, p.return_loss_db) {
            (Some(rows), None) => {
                let m = load_matrix(rows).map_err(|e| Error::Config(format!("prototype.matrix: {e}")))?;
                if let Some(n) = p.order {
                    if n != m.order() {
                        return Err(Error::Config(format!(
                            "prototype.order = {n} but the matrix holds {} resonators",
                            m.order()
                        )));
                    }
                }
                Ok(m)
            }
            (None, Some(rl)) => {
                let n = p.order.ok_or_else(|| {
                    Error::Config("prototype.order is required with return_loss_db".into())
                })?;
                chebyshev_inline(n, rl).map_err(|e| Error::Config(format!("prototype: {e}")))
            }
            _ => Err(Error::Config(
                "prototype needs exactly one of `matrix` or `return_loss_db`".into(),
            )),
        }
    }

    pub fn design(&self) -> Result<Design> {
        let cfg = |section: &'static str| move |e: Error| Error::Config(format!("{section}: {e}"));
        let matrix = self.matrix()?;
        let n = matrix.order();

        let b = &self.bandpass;
        let mut bp = BandpassSpec::new(b.f0.hz()?, b.fractional_bandwidth).map_err(cfg("bandpass"))?;
        if let Some(c) = b.capacitance {
            bp = bp.with_capacitance(c).map_err(cfg("bandpass"))?;
        }
        if let Some([g1, g2]) = b.port_conductance {
            bp = bp.with_ports(g1, g2).map_err(cfg("bandpass"))?;
        }

        let m = &self.modulation;
        let phases: Vec<f64> = match (m.phase_step_deg, &m.phases_deg) {
            (Some(step), None) => (0..n).map(|u| (u as f64 * step).to_radians()).collect(),
            (None, Some(list)) => list.iter().map(|p| p.to_radians()).collect(),
            _ => {
                return Err(Error::Config(
                    "modulation needs exactly one of `phase_step_deg` or `phases_deg`".into(),
                ))
            }
        };
        let modulation = ModulationSpec::new(m.fm.hz()?, m.index, phases, m.harmonics)
            .map_err(cfg("modulation"))?;

        let mut impairments = ImpairmentSpec::default();
        if let Some(imp) = &self.impairments {
            impairments.unloaded_q = imp.unloaded_q;
            impairments.parasitics = imp
                .parasitics
                .iter()
                .map(|p| Parasitic::new(p.i, p.j, p.value))
                .collect();
        }
        Design::new(matrix, bp, modulation, self.mode()?)
            .and_then(|d| d.with_impairments(impairments))
            .map_err(|e| match e {
                Error::Config(_) => e,
                other => Error::Config(other.to_string()),
            })
    }

    /// Sweep grid from the `[grid]` section, or the default around `f0`.
    pub fn grid(&self, design: &Design) -> Result<SweepGrid> {
        match &self.grid {
            None => Ok(design.default_grid()),
            Some(g) => SweepGrid::new(g.start.hz()?, g.stop.hz()?, g.points)
                .map_err(|e| Error::Config(format!("grid: {e}"))),
        }
    }

    pub fn metrics_spec(&self) -> Result<MetricsSpec> {
        let mut spec = MetricsSpec::default();
        if let Some(m) = &self.metrics {
            if let Some(v) = m.return_loss_level_db {
                spec.return_loss_level_db = v;
            }
            if let Some(v) = m.directivity_level_db {
                spec.directivity_level_db = Some(v);
            }
            if let Some(v) = m.bridge_db {
                spec.bridge_db = v;
            }
        }
        spec.validate().map_err(|e| Error::Config(format!("metrics: {e}")))?;
        Ok(spec)
    }

    pub fn optimize_spec(&self) -> Result<Option<OptimizeSpec>> {
        let Some(o) = &self.optimize else {
            return Ok(None);
        };
        let mut spec = OptimizeSpec::new(
            [o.fm[0].hz()?, o.fm[1].hz()?],
            o.index,
            [o.phase_step_deg[0].to_radians(), o.phase_step_deg[1].to_radians()],
        );
        if let Some(v) = o.min_return_loss_db {
            spec.min_return_loss_db = v;
        }
        if let Some(v) = o.max_insertion_loss_db {
            spec.max_insertion_loss_db = v;
        }
        spec.objective = match (o.objective.as_deref(), o.level_db) {
            (None | Some("center_directivity"), None) => Objective::CenterDirectivity,
            (Some("directivity_bandwidth"), Some(level_db)) => {
                Objective::DirectivityBandwidth { level_db }
            }
            (Some("directivity_bandwidth"), None) => {
                return Err(Error::Config(
                    "optimize: directivity_bandwidth needs level_db".into(),
                ))
            }
            (None | Some("center_directivity"), Some(_)) => {
                return Err(Error::Config(
                    "optimize: level_db only applies to directivity_bandwidth".into(),
                ))
            }
            (Some(other), _) => {
                return Err(Error::Config(format!(
                    "optimize: unknown objective '{other}' (use center_directivity or directivity_bandwidth)"
                )))
            }
        };
        if let Some(v) = o.grid_steps {
            spec.grid_steps = v;
        }
        if let Some(v) = o.max_iterations {
            spec.max_iterations = v;
        }
        if let Some(v) = o.penalty_weight {
            spec.penalty_weight = v;
        }
        if let Some(v) = o.points {
            spec.points = v;
        }
        spec.validate().map_err(|e| Error::Config(format!("optimize: {e}")))?;
        Ok(Some(spec))
    }
}
