//! Online decision rules.
//!
//! A [`Policy`] only ever sees noisy contexts and [`ObservedRound`]s; the true
//! context and the true parameters stay with the environment and the
//! evaluation code.

mod meb;
mod ts;
mod ucb;

pub use meb::MebState;
pub use ts::TsState;
pub use ucb::UcbState;

use nalgebra::DVector;
use rand::RngCore;

use crate::domain::{ObservedRound, PolicyDistribution};
use crate::error::Result;

pub trait Policy: Send {
    fn name(&self) -> &str;

    fn num_actions(&self) -> usize;

    /// Action distribution for the next round given its noisy context.
    fn decide(&self, noisy_context: &DVector<f64>, rng: &mut dyn RngCore) -> Result<PolicyDistribution>;

    /// Absorbs the outcome of the round just played.
    fn update(&mut self, round: &ObservedRound) -> Result<()>;

    /// Current parameter estimates, when the policy keeps any.
    fn theta_hat(&self) -> Option<Vec<DVector<f64>>> {
        None
    }

    /// Number of model refreshes that hit an ill-conditioned design.
    fn singular_fallbacks(&self) -> usize {
        0
    }
}

pub(crate) fn check_dim(expected: usize, found: usize, round: usize) -> Result<()> {
    if expected != found {
        return Err(crate::error::MebError::DimensionMismatch {
            round,
            expected,
            found,
        });
    }
    Ok(())
}
