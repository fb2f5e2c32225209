//! Library half of the `geocount` command-line tool.

pub mod battery;
pub mod cache;
pub mod commands;
pub mod config;
pub mod error;

pub use error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}
