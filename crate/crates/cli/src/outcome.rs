use std::fmt;
use std::process::ExitCode;

use translator_core::families::FamilyError;
use translator_core::global::GlobalError;
use translator_core::mesh::MeshError;
use translator_core::phaseplane::PhaseError;
use translator_core::profile::ProfileError;
use translator_core::singular::SingularError;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok = 0,
    VerifyFailed = 1,
    NoSolution = 2,
    Inconclusive = 3,
    Usage = 4,
    Runtime = 5,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        ExitCode::from(s as u8)
    }
}

#[derive(Debug)]
pub struct Failure {
    pub status: Status,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            status: Status::Usage,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Failure {
            status: Status::Runtime,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ProfileError> for Failure {
    fn from(e: ProfileError) -> Self {
        let status = match &e {
            ProfileError::NoSolution(_) | ProfileError::Singular(SingularError::NoSolution(_)) => Status::NoSolution,
            ProfileError::Inconclusive(_) => Status::Inconclusive,
            ProfileError::BadTolerance(_) => Status::Usage,
            ProfileError::Singular(SingularError::BadEpsilon { .. } | SingularError::GridTooCoarse(_)) => Status::Usage,
            _ => Status::Runtime,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

impl From<SingularError> for Failure {
    fn from(e: SingularError) -> Self {
        ProfileError::from(e).into()
    }
}

impl From<PhaseError> for Failure {
    fn from(e: PhaseError) -> Self {
        match e {
            PhaseError::Profile(p) => p.into(),
            PhaseError::BadRectangle => Failure::usage(e.to_string()),
            other => Failure::runtime(other.to_string()),
        }
    }
}

impl From<FamilyError> for Failure {
    fn from(e: FamilyError) -> Self {
        match e {
            FamilyError::Geom(_) => Failure::runtime(e.to_string()),
            other => Failure::usage(other.to_string()),
        }
    }
}

impl From<MeshError> for Failure {
    fn from(e: MeshError) -> Self {
        match e {
            MeshError::TooFewSteps(_) | MeshError::BadResolution(_) => Failure::usage(e.to_string()),
            other => Failure::runtime(other.to_string()),
        }
    }
}

impl From<GlobalError> for Failure {
    fn from(e: GlobalError) -> Self {
        Failure::runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::runtime(format!("I/O error: {e}"))
    }
}
