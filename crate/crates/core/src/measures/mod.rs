//! Markov measures, finite-range potentials and their equilibrium states,
//! pushforwards along one-block codes, and entropy estimators.
//!
//! All logarithms are natural; entropies are in nats per symbol.

mod estimate;
pub(crate) use estimate::bootstrap_mean;
mod markov;
mod perron;
mod potential;
mod pushforward;

pub use estimate::{
    bound_bad, bound_good, empirical_entropy, entropy_profile, hp, lz76_entropy, relative_entropy_estimate,
    EntropyEstimate, EntropyOptions, Method,
};
pub use markov::MarkovMeasure;
pub use potential::{equilibrium_state, integral, pressure_value, EquilibriumState, Potential};
pub use pushforward::{conditional_sample, PushforwardMeasure};
