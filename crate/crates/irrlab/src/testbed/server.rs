//! The testbed server: a single-threaded request loop that applies each
//! interaction to the scene, renders, encodes, and returns the frame under
//! the request's GUID. The response path runs through the latency injector,
//! so a configured delay is added without reordering responses.

use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::sim::{LatencySimulator, SimulatorMode};
use crate::testbed::codec::FrameCodec;
use crate::testbed::protocol::{
    read_message, write_message, MessageKind, NetworkMessage, ProtocolError,
};
use crate::testbed::scene::ServerSceneState;
use crate::testbed::{TestbedError, DEFAULT_PORT};
use crate::timing::precise_sleep;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub bind_addr: String,
    pub width: u32,
    pub height: u32,
    pub rotation_step: f64,
    pub codec: FrameCodec,
    pub response_delay: Duration,
    pub mode: SimulatorMode,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind_addr: format!("127.0.0.1:{DEFAULT_PORT}"),
            width: 256,
            height: 256,
            rotation_step: 5.0,
            codec: FrameCodec::Raw,
            response_delay: Duration::ZERO,
            mode: SimulatorMode::Asynchronous,
        }
    }
}

/// A bound testbed server. Handles one client connection at a time.
pub struct IrrServer {
    listener: TcpListener,
    config: ServerConfig,
}

impl IrrServer {
    pub fn bind(config: ServerConfig) -> std::io::Result<Self> {
        let listener = TcpListener::bind(&config.bind_addr)?;
        Ok(Self { listener, config })
    }

    /// The actual bound address (useful when binding port 0).
    pub fn local_addr(&self) -> std::io::Result<std::net::SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts one connection and serves it until the client sends the
    /// shutdown interaction or disconnects. Returns the number of frame
    /// responses produced.
    pub fn serve_one(&self) -> Result<u64, TestbedError> {
        let (stream, _) = self.listener.accept()?;
        self.serve_connection(stream)
    }

    /// Accepts and serves connections until a session ends with an error.
    pub fn serve_forever(&self) -> Result<(), TestbedError> {
        loop {
            self.serve_one()?;
        }
    }

    fn serve_connection(&self, stream: TcpStream) -> Result<u64, TestbedError> {
        stream.set_nodelay(true)?;
        let mut reader = stream.try_clone()?;
        let writer = Arc::new(Mutex::new(stream));

        let mut scene =
            ServerSceneState::new(self.config.width, self.config.height, self.config.rotation_step);
        let codec = self.config.codec;
        let delay = self.config.response_delay;

        // Responses are admitted to the injector in request order; the
        // injector's release gate keeps them in that order on the wire even
        // though each delay runs concurrently.
        let simulator: LatencySimulator<NetworkMessage> = LatencySimulator::new();
        {
            let writer = Arc::clone(&writer);
            simulator.on_message_ready(move |result| {
                let mut w = writer.lock().unwrap();
                // A send failure here means the client vanished; the read
                // side of the loop will observe the closed socket.
                let _ = write_message(&mut *w, &result.message);
            });
        }

        let mut responses = 0u64;
        loop {
            let request = match read_message(&mut reader) {
                Ok(m) => m,
                Err(ProtocolError::ConnectionClosed) => break,
                Err(e) => {
                    simulator.shutdown();
                    return Err(e.into());
                }
            };
            match request.kind {
                MessageKind::Interaction => {
                    let response = handle_interaction(&mut scene, codec, &request)?;
                    match self.config.mode {
                        SimulatorMode::Asynchronous => {
                            // Ignore a post-shutdown rejection: only possible
                            // if a request trails the shutdown message.
                            let _ = simulator.delay(response, delay);
                        }
                        SimulatorMode::Synchronous => {
                            precise_sleep(delay);
                            let mut w = writer.lock().unwrap();
                            write_message(&mut *w, &response)?;
                        }
                    }
                    responses += 1;
                }
                MessageKind::Shutdown => {
                    // Flush every in-flight response, then echo the shutdown
                    // and end the session.
                    simulator.shutdown();
                    let mut w = writer.lock().unwrap();
                    write_message(&mut *w, &NetworkMessage::shutdown(request.id))?;
                    break;
                }
                MessageKind::FrameResult => {
                    simulator.shutdown();
                    return Err(ProtocolError::UnknownKind(MessageKind::FrameResult as u8).into());
                }
            }
        }
        simulator.shutdown();
        Ok(responses)
    }
}

/// Applies the request's interaction to the scene, renders the new frame
/// and builds the response message carrying the same GUID.
pub fn handle_interaction(
    scene: &mut ServerSceneState,
    codec: FrameCodec,
    request: &NetworkMessage,
) -> Result<NetworkMessage, TestbedError> {
    scene.apply_interaction(request.interaction.as_char())?;
    let frame = codec.encode(&scene.render())?;
    Ok(NetworkMessage::frame_result(request.interaction, request.id, frame))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testbed::protocol::{Guid, Interaction};

    #[test]
    fn response_echoes_the_request_guid_and_rotates_the_scene() {
        let mut scene = ServerSceneState::new(64, 64, 5.0);
        let request = NetworkMessage::request(Interaction::RotateRight, Guid::random());
        let response = handle_interaction(&mut scene, FrameCodec::Raw, &request).unwrap();
        assert_eq!(scene.angle_degrees(), 5.0);
        assert_eq!(response.id, request.id);
        assert_eq!(response.kind, MessageKind::FrameResult);
        assert!(!response.frame.is_empty());
    }

    #[test]
    fn opposite_interactions_return_to_an_identical_frame() {
        let mut scene = ServerSceneState::new(64, 64, 5.0);
        let r1 = handle_interaction(
            &mut scene,
            FrameCodec::Raw,
            &NetworkMessage::request(Interaction::RotateLeft, Guid::random()),
        )
        .unwrap();
        handle_interaction(
            &mut scene,
            FrameCodec::Raw,
            &NetworkMessage::request(Interaction::RotateRight, Guid::random()),
        )
        .unwrap();
        let r3 = handle_interaction(
            &mut scene,
            FrameCodec::Raw,
            &NetworkMessage::request(Interaction::RotateLeft, Guid::random()),
        )
        .unwrap();
        assert_eq!(r1.frame, r3.frame);
    }
}
