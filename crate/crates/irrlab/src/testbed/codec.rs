//! Frame codecs for the testbed's server→client image payloads.
//!
//! The default codec is a lossless raw container, so decode(encode(p)) is
//! the identity and latency numbers are never confounded by compression
//! artefacts. A JPEG codec (quality 75) is available where smaller frames
//! matter; it preserves dimensions only.

use std::io::Cursor;

use thiserror::Error;

use crate::frame::PixelBuffer;

/// Raw container header: magic byte, width u32 BE, height u32 BE.
const RAW_MAGIC: u8 = 0x52;
const RAW_HEADER: usize = 1 + 4 + 4;

const JPEG_QUALITY: u8 = 75;

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("raw frame too short: {0} bytes")]
    TooShort(usize),
    #[error("bad raw frame magic {0:#04x}")]
    BadMagic(u8),
    #[error("raw frame size mismatch: header says {expected} pixel bytes, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("jpeg codec error: {0}")]
    Jpeg(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrameCodec {
    #[default]
    Raw,
    Jpeg,
}

impl FrameCodec {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "raw" => Some(FrameCodec::Raw),
            "jpeg" | "jpg" => Some(FrameCodec::Jpeg),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FrameCodec::Raw => "raw",
            FrameCodec::Jpeg => "jpeg",
        }
    }

    pub fn encode(self, frame: &PixelBuffer) -> Result<Vec<u8>, CodecError> {
        match self {
            FrameCodec::Raw => {
                let mut out = Vec::with_capacity(RAW_HEADER + frame.data().len());
                out.push(RAW_MAGIC);
                out.extend_from_slice(&frame.width().to_be_bytes());
                out.extend_from_slice(&frame.height().to_be_bytes());
                out.extend_from_slice(frame.data());
                Ok(out)
            }
            FrameCodec::Jpeg => {
                let mut out = Cursor::new(Vec::new());
                let encoder =
                    image::codecs::jpeg::JpegEncoder::new_with_quality(&mut out, JPEG_QUALITY);
                image::ImageEncoder::write_image(
                    encoder,
                    frame.data(),
                    frame.width(),
                    frame.height(),
                    image::ExtendedColorType::Rgb8,
                )
                .map_err(|e| CodecError::Jpeg(e.to_string()))?;
                Ok(out.into_inner())
            }
        }
    }

    pub fn decode(self, bytes: &[u8]) -> Result<PixelBuffer, CodecError> {
        match self {
            FrameCodec::Raw => {
                if bytes.len() < RAW_HEADER {
                    return Err(CodecError::TooShort(bytes.len()));
                }
                if bytes[0] != RAW_MAGIC {
                    return Err(CodecError::BadMagic(bytes[0]));
                }
                let width = u32::from_be_bytes([bytes[1], bytes[2], bytes[3], bytes[4]]);
                let height = u32::from_be_bytes([bytes[5], bytes[6], bytes[7], bytes[8]]);
                let expected = (width as usize)
                    .checked_mul(height as usize)
                    .and_then(|n| n.checked_mul(3))
                    .ok_or(CodecError::SizeMismatch {
                        expected: usize::MAX,
                        actual: bytes.len() - RAW_HEADER,
                    })?;
                let actual = bytes.len() - RAW_HEADER;
                if expected != actual {
                    return Err(CodecError::SizeMismatch { expected, actual });
                }
                Ok(PixelBuffer::from_raw(width, height, bytes[RAW_HEADER..].to_vec())
                    .expect("length checked above"))
            }
            FrameCodec::Jpeg => {
                let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Jpeg)
                    .map_err(|e| CodecError::Jpeg(e.to_string()))?
                    .to_rgb8();
                let (width, height) = img.dimensions();
                Ok(PixelBuffer::from_raw(width, height, img.into_raw())
                    .expect("rgb8 image has matching length"))
            }
        }
    }
}
