//! Coupling-matrix analysis of non-reciprocal bandpass filters built from
//! time-modulated resonators.
//!
//! ```
//! use tvfilter::{design::order3_design, metrics, solve};
//!
//! let d = order3_design();
//! let s = solve::sweep(&d, &d.grid(41)).unwrap();
//! assert!(metrics::directivity(&s, 975e6) > 10.0);
//! ```

pub mod design;
pub mod error;
pub mod harmonic;
pub mod impairments;
pub mod linalg;
pub mod metrics;
pub mod network;
pub mod optimize;
pub mod oracle;
pub mod solve;
pub mod synthesis;

pub use design::{Design, DesignFile};
pub use error::{Error, Result};
pub use harmonic::{Mode, ModulationSpec};
pub use network::BandpassSpec;
pub use solve::{Port, SParamSet, SParams, SweepGrid};
pub use synthesis::CouplingMatrix;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/design-files.md")]
    mod design_files {}
    #[doc = include_str!("../../../book/src/sweeping.md")]
    mod sweeping {}
    #[doc = include_str!("../../../book/src/modulation.md")]
    mod modulation {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/impairments.md")]
    mod impairments {}
    #[doc = include_str!("../../../book/src/optimize.md")]
    mod optimize {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
}
