//! Error taxonomy shared by every module in the crate.
//!
//! Errors carry the module they originated in so that callers (in
//! particular the CLI) can report a precise source and map the failure
//! onto a stable process exit code:
//!
//! * [`Error::Invalid`] - the caller handed us an ill-formed request
//!   (bad shape, negative temperature, unknown observable, ...).
//! * [`Error::Numeric`] - the request was well-formed but the numbers
//!   refused to cooperate (singular mapping, inconsistent correlators).
//! * [`Error::Capacity`] - the request exceeds a hard resource cap.
//! * [`Error::Io`] - filesystem trouble while reading or writing.

use std::fmt;
use thiserror::Error;

/// The module an error originated in. Rendered into every message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Module {
    Spinchain,
    Trotter,
    Lattice,
    Mc,
    Entanglement,
    Cli,
}

impl Module {
    /// Stable identifier used in error messages and diagnostics.
    pub fn name(self) -> &'static str {
        match self {
            Module::Spinchain => "spinchain_exact",
            Module::Trotter => "trotter_map",
            Module::Lattice => "lattice_eval",
            Module::Mc => "mc_sampler",
            Module::Entanglement => "entanglement",
            Module::Cli => "bridge_cli",
        }
    }
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// Ill-formed input: the request can never succeed as stated.
    #[error("{module}: invalid input: {message}")]
    Invalid { module: Module, message: String },

    /// Well-formed input on which the numerics break down.
    #[error("{module}: numeric failure: {message}")]
    Numeric { module: Module, message: String },

    /// A hard resource cap was exceeded.
    #[error("{module}: capacity exceeded: {message}")]
    Capacity { module: Module, message: String },

    /// Underlying I/O failure.
    #[error("{module}: io error: {source}")]
    Io {
        module: Module,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(module: Module, message: impl Into<String>) -> Self {
        Error::Invalid { module, message: message.into() }
    }

    pub fn numeric(module: Module, message: impl Into<String>) -> Self {
        Error::Numeric { module, message: message.into() }
    }

    pub fn capacity(module: Module, message: impl Into<String>) -> Self {
        Error::Capacity { module, message: message.into() }
    }

    pub fn io(module: Module, source: std::io::Error) -> Self {
        Error::Io { module, source }
    }

    /// Module the error originated in.
    pub fn module(&self) -> Module {
        match self {
            Error::Invalid { module, .. }
            | Error::Numeric { module, .. }
            | Error::Capacity { module, .. }
            | Error::Io { module, .. } => *module,
        }
    }

    /// Process exit code this error maps to: 2 for validation, 3 for
    /// numeric trouble or exceeded caps, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid { .. } => 2,
            Error::Numeric { .. } | Error::Capacity { .. } => 3,
            Error::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn messages_name_the_originating_module() {
        let e = Error::invalid(Module::Spinchain, "sites must be >= 2");
        assert!(e.to_string().starts_with("spinchain_exact:"), "{e}");
        let e = Error::numeric(Module::Trotter, "mapping is singular");
        assert!(e.to_string().contains("trotter_map"), "{e}");
        let e = Error::capacity(Module::Lattice, "26 spins > cap 24");
        assert!(e.to_string().contains("lattice_eval"), "{e}");
    }

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(Error::invalid(Module::Cli, "x").exit_code(), 2);
        assert_eq!(Error::numeric(Module::Entanglement, "x").exit_code(), 3);
        assert_eq!(Error::capacity(Module::Lattice, "x").exit_code(), 3);
        let io = Error::io(
            Module::Cli,
            std::io::Error::new(std::io::ErrorKind::NotFound, "gone"),
        );
        assert_eq!(io.exit_code(), 4);
    }
}
