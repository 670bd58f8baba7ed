use thiserror::Error;

use crate::procurement::ProcurementResult;

pub type Result<T, E = PdlcError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PdlcError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no cooling required: raw packet count {raw:.6} is not positive")]
    NoCoolingNeeded { raw: f64 },

    #[error("comfort band boundary {boundary:.4} reaches the {which} equilibrium {equilibrium:.4}")]
    BandOutsideEquilibria {
        which: &'static str,
        boundary: f64,
        equilibrium: f64,
    },

    #[error(
        "no feasible packet length: smallest tested delta {smallest_delta:.6} s still violates a band by {max_violation:.6} C"
    )]
    NoFeasibleDelta {
        smallest_delta: f64,
        max_violation: f64,
    },

    #[error("population {0} exceeds the supported maximum of 1e6 appliances")]
    PopulationTooLarge(usize),

    #[error("welfare samples are not convex: second difference {second_diff:.3e} at m = {at}")]
    NonConvexWelfare { at: usize, second_diff: f64 },

    #[error("stochastic approximation did not converge after {outer} outer iterations")]
    NotConverged {
        outer: usize,
        result: Box<ProcurementResult>,
    },
}

pub(crate) fn check(cond: bool, name: &'static str, reason: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(PdlcError::InvalidParameter {
            name,
            reason: reason.into(),
        })
    }
}

pub(crate) fn finite(value: f64, name: &'static str) -> Result<f64> {
    check(value.is_finite(), name, format!("must be finite, got {value}"))?;
    Ok(value)
}
