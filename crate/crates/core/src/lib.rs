//! Non-Hermitian two-leg ladder models: dense complex linear algebra,
//! lattice geometry of mismatched chains, Hamiltonian builders, band
//! structures, PT-breaking thresholds and time evolution.

pub mod dynamics;
pub mod hamiltonian;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod spectra;

pub use dynamics::{ClusterRegime, RegimeTag, SiteColumns, Trajectory};
pub use hamiltonian::{ModelParams, SiteIndex, SiteMap};
pub use lattice::{CouplingTable, MoireSpec, Region, RegionLabels};
pub use linalg::{ComplexMatrix, ComplexVector, EigenDecomposition, LinalgError, C64};
pub use spectra::{Dispersion, GammaC, ModelTag, PhaseDiagramGrid, PhaseGridSpec, ScanOptions};
