//! Built-in environments and their organizational packages.

mod chain;
pub mod drone_net;
mod matrix;
pub mod piston_chain;
pub mod predator_prey;

pub use chain::{ChainConfig, ChainEnv, CHAIN_LEFT, CHAIN_RIGHT};
pub use drone_net::{DroneNetConfig, DroneNetEnv, ScriptedDefender};
pub use matrix::{MatrixConfig, MatrixEnv, MATRIX_OBS};
pub use piston_chain::{PistonChainConfig, PistonChainEnv, PistonStaircase};
pub use predator_prey::{PredatorPreyConfig, PredatorPreyEnv, ScriptedPack};

use alloc::string::String;

/// Invalid environment configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    message: String,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        ConfigError {
            message: message.into(),
        }
    }
}

impl core::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.message)
    }
}

impl core::error::Error for ConfigError {}
