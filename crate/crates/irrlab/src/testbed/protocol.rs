//! Wire format for client/server messages.
//!
//! Each TCP message is a 4-byte big-endian payload length followed by the
//! payload:
//!
//! ```text
//! [kind u8] [guid 16 bytes] [interaction u8 (ASCII)] [frame_len u32 BE] [frame bytes]
//! ```
//!
//! Kinds: 0 = interaction (client→server, empty frame), 1 = frame result
//! (server→client), 2 = shutdown. The smallest payload is 22 bytes.

use std::fmt;
use std::io::{Read, Write};

use thiserror::Error;

/// Fixed payload overhead: kind + guid + interaction + frame length.
pub const HEADER_LEN: usize = 1 + 16 + 1 + 4;

/// Upper bound on an encoded frame; decodes beyond this are rejected rather
/// than trusted to allocate.
const MAX_FRAME_LEN: u32 = 64 * 1024 * 1024;

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("unknown message kind byte {0:#04x}")]
    UnknownKind(u8),
    #[error("unknown interaction byte {0:#04x}")]
    UnknownInteraction(u8),
    #[error("truncated message: needed {needed} bytes, had {had}")]
    Truncated { needed: usize, had: usize },
    #[error("{0} trailing bytes after frame payload")]
    TrailingBytes(usize),
    #[error("frame length {0} exceeds the {MAX_FRAME_LEN}-byte limit")]
    FrameTooLarge(u32),
    #[error("connection closed")]
    ConnectionClosed,
    #[error("i/o error reading message: {0}")]
    Io(String),
}

/// 16 cryptographically random bytes identifying one interaction for the
/// lifetime of a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Guid(pub [u8; 16]);

impl Guid {
    pub fn random() -> Self {
        Guid(rand::random())
    }

    pub const ZERO: Guid = Guid([0; 16]);
}

impl fmt::Display for Guid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

/// The three interactions the testbed understands: rotate left, rotate
/// right, shut down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interaction {
    RotateLeft,
    RotateRight,
    Shutdown,
}

impl Interaction {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'a' => Some(Interaction::RotateLeft),
            'd' => Some(Interaction::RotateRight),
            'q' => Some(Interaction::Shutdown),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Interaction::RotateLeft => 'a',
            Interaction::RotateRight => 'd',
            Interaction::Shutdown => 'q',
        }
    }

    fn from_byte(b: u8) -> Result<Self, ProtocolError> {
        Interaction::from_char(b as char).ok_or(ProtocolError::UnknownInteraction(b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    Interaction = 0,
    FrameResult = 1,
    Shutdown = 2,
}

impl MessageKind {
    fn from_byte(b: u8) -> Result<Self, ProtocolError> {
        match b {
            0 => Ok(MessageKind::Interaction),
            1 => Ok(MessageKind::FrameResult),
            2 => Ok(MessageKind::Shutdown),
            other => Err(ProtocolError::UnknownKind(other)),
        }
    }
}

/// The unit exchanged between client and server. `message_number` is
/// simulator bookkeeping only and is never serialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkMessage {
    pub kind: MessageKind,
    pub id: Guid,
    pub interaction: Interaction,
    pub frame: Vec<u8>,
    pub message_number: u64,
}

impl NetworkMessage {
    /// A client→server interaction request; the frame travels empty.
    pub fn request(interaction: Interaction, id: Guid) -> Self {
        Self {
            kind: MessageKind::Interaction,
            id,
            interaction,
            frame: Vec::new(),
            message_number: 0,
        }
    }

    /// A server→client result carrying the rendered frame and echoing the
    /// GUID of the request that caused it.
    pub fn frame_result(interaction: Interaction, id: Guid, frame: Vec<u8>) -> Self {
        Self {
            kind: MessageKind::FrameResult,
            id,
            interaction,
            frame,
            message_number: 0,
        }
    }

    pub fn shutdown(id: Guid) -> Self {
        Self {
            kind: MessageKind::Shutdown,
            id,
            interaction: Interaction::Shutdown,
            frame: Vec::new(),
            message_number: 0,
        }
    }
}

/// Serializes a message payload (without the outer length prefix).
pub fn encode_message(m: &NetworkMessage) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + m.frame.len());
    out.push(m.kind as u8);
    out.extend_from_slice(&m.id.0);
    out.push(m.interaction.as_char() as u8);
    out.extend_from_slice(&(m.frame.len() as u32).to_be_bytes());
    out.extend_from_slice(&m.frame);
    out
}

/// Parses a message payload produced by [`encode_message`]. Bit-exact round
/// trip; rejects unknown kind/interaction bytes, truncation and trailing
/// garbage.
pub fn decode_message(bytes: &[u8]) -> Result<NetworkMessage, ProtocolError> {
    if bytes.len() < HEADER_LEN {
        return Err(ProtocolError::Truncated {
            needed: HEADER_LEN,
            had: bytes.len(),
        });
    }
    let kind = MessageKind::from_byte(bytes[0])?;
    let mut guid = [0u8; 16];
    guid.copy_from_slice(&bytes[1..17]);
    let interaction = Interaction::from_byte(bytes[17])?;
    let frame_len = u32::from_be_bytes([bytes[18], bytes[19], bytes[20], bytes[21]]);
    if frame_len > MAX_FRAME_LEN {
        return Err(ProtocolError::FrameTooLarge(frame_len));
    }
    let expected = HEADER_LEN + frame_len as usize;
    if bytes.len() < expected {
        return Err(ProtocolError::Truncated {
            needed: expected,
            had: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(ProtocolError::TrailingBytes(bytes.len() - expected));
    }
    Ok(NetworkMessage {
        kind,
        id: Guid(guid),
        interaction,
        frame: bytes[HEADER_LEN..].to_vec(),
        message_number: 0,
    })
}

/// Writes one length-prefixed message to the stream.
pub fn write_message<W: Write>(w: &mut W, m: &NetworkMessage) -> std::io::Result<()> {
    let payload = encode_message(m);
    w.write_all(&(payload.len() as u32).to_be_bytes())?;
    w.write_all(&payload)?;
    w.flush()
}

/// Reads one length-prefixed message from the stream. A clean EOF before
/// the length prefix maps to [`ProtocolError::ConnectionClosed`].
pub fn read_message<R: Read>(r: &mut R) -> Result<NetworkMessage, ProtocolError> {
    let mut len_buf = [0u8; 4];
    match r.read_exact(&mut len_buf) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
            return Err(ProtocolError::ConnectionClosed)
        }
        Err(e) => return Err(ProtocolError::Io(e.to_string())),
    }
    let len = u32::from_be_bytes(len_buf);
    if len > MAX_FRAME_LEN + HEADER_LEN as u32 {
        return Err(ProtocolError::FrameTooLarge(len));
    }
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            ProtocolError::Truncated {
                needed: len as usize,
                had: 0,
            }
        } else {
            ProtocolError::Io(e.to_string())
        }
    })?;
    decode_message(&payload)
}
