//! Markov chain sampling, compensated jump increments and Monte Carlo
//! eigenfunction paths.

mod eigenfunction;
mod increments;
mod markov;

pub use eigenfunction::{
    residual_report, simulate_eigenfunction, simulate_path, EigenfunctionPath, Handoff, PathResiduals, ResidualReport,
    Simulation, SimulationOptions, SimulationPlan,
};
pub use increments::{compensated_increments, compensator, CompensatedJumpIncrements};
pub use markov::{path_rng, sample_chain, MarkovChainPath};
