use std::fmt;

use voxcade::cascade::CascadeError;
use voxcade::datasets::DatasetError;
use voxcade::mesh_voxel::MeshError;
use voxcade::models::ModelError;
use voxcade::nn::NnError;
use voxcade::sdf_field::SdfError;

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, values or input data: exit 2.
    Input(String),
    /// File system trouble: exit 3.
    Io(String),
    /// A bug or broken invariant: exit 1.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Input(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io(m) => CliError::Io(m),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::Io(e) => CliError::Io(e.to_string()),
            NnError::ShapeMismatch(_) | NnError::BatchTooSmall(_) | NnError::NoForwardCache => {
                CliError::Internal(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Nn(e) => e.into(),
            ModelError::Dataset(e) => e.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<CascadeError> for CliError {
    fn from(e: CascadeError) -> Self {
        match e {
            CascadeError::Model(e) => e.into(),
            CascadeError::Dataset(e) => e.into(),
            CascadeError::Nn(e) => e.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SdfError> for CliError {
    fn from(e: SdfError) -> Self {
        match e {
            SdfError::Io(m) => CliError::Io(m),
            other => CliError::Input(other.to_string()),
        }
    }
}
