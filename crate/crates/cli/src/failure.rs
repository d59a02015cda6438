//! Exit-code classification: 1 for numeric failures, 2 for bad input.

use dnastore::bounds::BoundsError;
use dnastore::optimize::OptimizeError;
use dnastore::reliability::ReliabilityError;
use dnastore::sim::SimError;
use dnastore::symmetry::SymmetryError;
use dnastore::{ChannelError, InfoError};

#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Numeric(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numeric(_) => 1,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Numeric(e) => e,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Failure::Input(anyhow::anyhow!(msg.into()))
    }
}

fn info_numeric(e: &InfoError) -> bool {
    matches!(e, InfoError::NoConvergence { .. } | InfoError::DegenerateDenominator { .. })
}

fn optimize_numeric(e: &OptimizeError) -> bool {
    matches!(e, OptimizeError::NonFiniteObjective(_))
}

fn bounds_numeric(e: &BoundsError) -> bool {
    match e {
        BoundsError::NoFixedPointInRange { .. } => true,
        BoundsError::Info(i) => info_numeric(i),
        BoundsError::Optimize(o) => optimize_numeric(o),
        _ => false,
    }
}

fn reliability_numeric(e: &ReliabilityError) -> bool {
    match e {
        ReliabilityError::DegenerateConditional { .. } => true,
        ReliabilityError::Bounds(b) => bounds_numeric(b),
        ReliabilityError::Info(i) => info_numeric(i),
        ReliabilityError::Optimize(o) => optimize_numeric(o),
        _ => false,
    }
}

fn sim_numeric(e: &SimError) -> bool {
    match e {
        SimError::Info(i) => info_numeric(i),
        SimError::Bounds(b) => bounds_numeric(b),
        SimError::Reliability(r) => reliability_numeric(r),
        _ => false,
    }
}

fn classify<E>(e: E, numeric: bool) -> Failure
where
    E: std::error::Error + Send + Sync + 'static,
{
    if numeric {
        Failure::Numeric(e.into())
    } else {
        Failure::Input(e.into())
    }
}

impl From<BoundsError> for Failure {
    fn from(e: BoundsError) -> Self {
        let n = bounds_numeric(&e);
        classify(e, n)
    }
}

impl From<ReliabilityError> for Failure {
    fn from(e: ReliabilityError) -> Self {
        let n = reliability_numeric(&e);
        classify(e, n)
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let n = sim_numeric(&e);
        classify(e, n)
    }
}

impl From<InfoError> for Failure {
    fn from(e: InfoError) -> Self {
        let n = info_numeric(&e);
        classify(e, n)
    }
}

impl From<ChannelError> for Failure {
    fn from(e: ChannelError) -> Self {
        classify(e, false)
    }
}

// An exhausted search budget leaves the question undecided rather than the
// input wrong.
impl From<SymmetryError> for Failure {
    fn from(e: SymmetryError) -> Self {
        let n = matches!(e, SymmetryError::SearchBudgetExceeded { .. });
        classify(e, n)
    }
}
