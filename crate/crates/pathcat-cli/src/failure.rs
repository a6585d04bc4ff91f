use std::fmt;

use pathcat::boundary::BoundaryError;
use pathcat::bratteli::BratteliError;
use pathcat::cf_order::CfError;
use pathcat::groupoid::GroupoidError;
use pathcat::measure::MeasureError;
use pathcat::PathError;

#[derive(Debug)]
pub enum Failure {
    /// Bad flags or input; exit 2.
    Usage(String),
    /// A check came out false; exit 1.
    Verify(String),
    /// A budget was exhausted; exit 3.
    Resource(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Verify(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Resource(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Verify(m) => write!(f, "verification failed: {m}"),
            Failure::Resource(m) => write!(f, "resource limit: {m}"),
        }
    }
}

impl From<PathError> for Failure {
    fn from(e: PathError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<BoundaryError> for Failure {
    fn from(e: BoundaryError) -> Self {
        match e {
            BoundaryError::ResourceLimit(_) => Failure::Resource(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<CfError> for Failure {
    fn from(e: CfError) -> Self {
        match e {
            CfError::Undecided(_) | CfError::LevelOverflow(_) => Failure::Resource(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<BratteliError> for Failure {
    fn from(e: BratteliError) -> Self {
        match e {
            BratteliError::ResourceLimit(_) => Failure::Resource(e.to_string()),
            BratteliError::Boundary(b) => b.into(),
            BratteliError::Cf(c) => c.into(),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<MeasureError> for Failure {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::Boundary(b) => b.into(),
            MeasureError::Cf(c) => c.into(),
            MeasureError::NegativeMeasure { .. } | MeasureError::NotRefined(_) => {
                Failure::Verify(e.to_string())
            }
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<GroupoidError> for Failure {
    fn from(e: GroupoidError) -> Self {
        match e {
            GroupoidError::ResourceLimit(_) => Failure::Resource(e.to_string()),
            GroupoidError::Boundary(b) => b.into(),
            other => Failure::Usage(other.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::from(BoundaryError::ResourceLimit(5)).code(), 3);
        assert_eq!(Failure::from(GroupoidError::ResourceLimit(5)).code(), 3);
        assert_eq!(
            Failure::from(BratteliError::Boundary(BoundaryError::ResourceLimit(1))).code(),
            3
        );
        assert_eq!(Failure::from(CfError::Undecided(10)).code(), 3);
        assert_eq!(Failure::from(CfError::Parse("x".into())).code(), 2);
        assert_eq!(Failure::from(PathError::NotAPrefix).code(), 2);
        assert_eq!(
            Failure::from(MeasureError::NotRefined("E".into())).code(),
            1
        );
    }
}
