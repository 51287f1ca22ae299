//! Sparse generalized exponential random graph models.
//!
//! The crate covers homomorphism densities of small motifs in weighted graphs,
//! the planar variational problems `phi` and `psi` that describe upper tails
//! and free energies, edge-F models and their clique/hub phase transition,
//! naive mean-field solvers at finite `n`, a Glauber sampler with exact small-`n`
//! enumeration and clique-hub detection, and brute-force checks of Finner's
//! inequality and its stability.

pub mod bitgraph;
pub mod edge_f;
pub mod ergm;
pub mod error;
pub mod finner;
pub mod hamiltonian;
pub mod hom;
pub mod indep;
pub mod motif;
pub mod nmf;
pub mod numeric;
pub mod optimize;
pub mod planar;
pub mod structure;
pub mod weights;

pub use bitgraph::BitGraph;
pub use edge_f::{edge_f_solve, monotone_selection_check, EdgeFModel, EdgeFReport, Phase};
pub use ergm::{
    exact_enumerate, glauber_step, run_experiment, ErgmChain, ErgmModel, ExactDistribution,
    ExperimentConfig,
};
pub use error::{Error, Result};
pub use finner::{
    finner_integral, genholder_stability_check, holder_stability_check, recover_factors,
    remark_hb1_check, FactorRecovery, ProductInstance,
};
pub use hamiltonian::{psi_solve, HamiltonianSpec, HamiltonianTerm, PsiSolution};
pub use hom::{hom_count, hom_density, hom_density_delta, HomAlgorithm, MotifCounter};
pub use indep::IndepPoly;
pub use motif::{rate, Motif, MotifFamily, MotifJson, MotifRef, SimpleGraph};
pub use nmf::{
    entropy, nmf_solve, phi_np_solve, stability_probe, CliqueHub, NmfProblem, NmfSolution,
    PhiNpProblem, PhiNpSolution, SolverOptions,
};
pub use planar::{phi_solve, t_planar, PlanarPoint, PlanarProblem, PlanarSolution};
pub use structure::{detect_structure, spectral_distance, DetectOptions, StructureReport, Witness};
pub use weights::{BlockTable, WeightTable, WeightTableJson};
