//! A miniature interactive remote rendering system: a thin client submits
//! single-character interactions over TCP, a server rotates a cube scene,
//! renders it in software, and streams the encoded frame back tagged with
//! the interaction's GUID so the client can stop the matching stopwatch.

pub mod client;
pub mod codec;
pub mod protocol;
pub mod scene;
pub mod server;
pub mod session;

pub use client::{Client, CompletedInteraction};
pub use codec::FrameCodec;
pub use protocol::{Guid, Interaction, MessageKind, NetworkMessage, ProtocolError};
pub use scene::ServerSceneState;
pub use server::{IrrServer, ServerConfig};
pub use session::{run_session, SessionConfig, SessionReport};

use thiserror::Error;

/// Default TCP port for the testbed server.
pub const DEFAULT_PORT: u16 = 7667;

#[derive(Debug, Error)]
pub enum TestbedError {
    #[error("protocol error: {0}")]
    Protocol(#[from] ProtocolError),
    #[error("frame codec error: {0}")]
    Codec(#[from] codec::CodecError),
    #[error("invalid interaction {0:?}: expected 'a' or 'd'")]
    InvalidInteraction(char),
    #[error("session i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("session timed out after {0:.1} s without progress; partial results returned")]
    Timeout(f64),
}
