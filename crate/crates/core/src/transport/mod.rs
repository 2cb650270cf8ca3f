//! Wasserstein distances, the shared-noise coupling between the network and
//! its limit, and the bounds and estimates built on it.

mod chaos;
mod coupling;
mod dkr;
mod potentials;
mod wasserstein;

pub use chaos::{
    chaos_covariance, max_scale_exponent, ChaosReport, ChaosSpec, CountFunctional, Mollifier, Positions,
};
pub use coupling::{
    b_term_bound, coupled_replications, coupling_gap, estimate_coupling, mean_se, simulate_coupled_pair,
    sup_count_gap, CoupledPair, CouplingReport,
};
pub use dkr::{
    dkr_dictionary_lower_estimate, dkr_upper_bound, truncated_l2_gap, Dictionary, DkrBound, Functional,
    LowerEstimate, Sample, DICTIONARY_VERSION,
};
pub use potentials::{compare_potentials, PotentialDiscrepancy};
pub use wasserstein::{optimal_plan, wasserstein_discrete, DiscreteMeasure, TransportPlan};
