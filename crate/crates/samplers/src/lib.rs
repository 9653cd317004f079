//! Floating-point simulation of coupled Metropolis-Hastings chains on finite
//! spaces and on R^d.

pub mod algorithm1;
pub mod coupling;
pub mod density;
pub mod error;
pub mod finite;
pub mod marginal;
pub mod proposal;
pub mod rng;
pub mod simulate;
pub mod split;
pub mod stats;
pub mod target;

pub use coupling::{coupled_step, AcceptanceCoupling, CouplingSpec, ProposalCoupling, StepRecord};
pub use error::{Result, SamplerError};
pub use proposal::{mh_step, MhStep, Proposal};
pub use simulate::{simulate_meetings, ContinuousCoupling, CoupledChain, MeetingSummary};
pub use target::Target;
