use empathd_core::Error as CoreError;
use empathd_wire::WireError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("runtime failure: {0}")]
    Runtime(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Wire(#[from] WireError),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl From<empathd_appsim::Error> for Error {
    fn from(e: empathd_appsim::Error) -> Self {
        match e {
            empathd_appsim::Error::Config(m) => Error::Config(m),
        }
    }
}

impl Error {
    /// Process exit status: 2 for bad input, 3 for everything that went
    /// wrong while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Core(CoreError::Config(_) | CoreError::Format { .. }) => 2,
            Error::Core(CoreError::Json(_)) => 2,
            _ => 3,
        }
    }
}
