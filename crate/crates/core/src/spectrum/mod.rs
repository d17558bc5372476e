//! Eigenvalue location: the first eigenvalue of the multi-dimensional family by
//! bisection on its blow-up time, and the one-dimensional sequence through
//! alternating blow-up chains.

pub mod assumptions;
pub mod chain;
pub mod growth;
pub mod multidim;
pub mod record;

pub use assumptions::{check_h5, no_eigenvalue_below_rho_b, H5Report, NoSpectrumReport};
pub use chain::{blowup_chain_1d, eigenvalue_1d, eigenvalues_1d, one_dim_preconditions, BlowUpChain, SpectrumOptions};
pub use growth::{fit_power_law, growth_order_fit, GrowthFit};
pub use multidim::{bracket_first_eigenvalue, first_eigenvalue_multidim, kernel, scaled_blow_up_time, MultiDimOptions};
pub use record::{chain_schedule, split_schedule, ChainLink, EigenvalueRecord, GainSchedule, ScheduleInterval, ScheduledSegment};
