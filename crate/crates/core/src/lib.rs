//! Modelling toolkit for waveguide-integrated superconducting nanowire
//! single-photon detectors: cross-section geometry and materials, a
//! full-vector finite-difference mode solver, detector figures of merit,
//! Fabry-Perot coupling extraction and design sweeps.

// Negated comparisons reject NaN inputs; stencil loops index several arrays.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod constants;
pub mod design;
pub mod detector;
pub mod error;
pub mod fabry_perot;
pub mod geometry;
pub mod grid;
pub mod materials;
pub mod mode;
pub mod seed;

pub use design::{maximize_alpha, run_sweep, Evaluator, ModeSolverEvaluator, Parameter, ParameterRange, SweepSpec};
pub use detector::{absorptance, efficiency_chain, DetectorModel, EfficiencyBudget};
pub use error::{Error, ErrorClass, Result};
pub use fabry_perot::{extract_coupling, fp_transmission, CouplingResult, FringeData};
pub use geometry::{CrossSection, ReferenceDesign};
pub use grid::{rasterize, PermittivityGrid, ResolutionPolicy};
pub use materials::{Material, MaterialLibrary};
pub use mode::{solve_cross_section, ModeSelector, ModeSolution, Polarization, SolverConfig};
pub use seed::derive_seed;
