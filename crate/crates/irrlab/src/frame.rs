//! Pixel buffers and regions shared by the renderer, the codecs and the
//! observer tool.

use std::sync::{Arc, Mutex};

/// A packed RGB8 pixel grid, row-major, three bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PixelBuffer {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl PixelBuffer {
    /// Creates a black buffer of the given dimensions.
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0; (width as usize) * (height as usize) * 3],
        }
    }

    /// Creates a buffer filled with a single color.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity((width as usize) * (height as usize) * 3);
        for _ in 0..(width as usize) * (height as usize) {
            data.extend_from_slice(&rgb);
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Wraps raw RGB8 bytes. Returns `None` when the byte count does not
    /// match `width * height * 3`.
    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Option<Self> {
        if data.len() != (width as usize) * (height as usize) * 3 {
            return None;
        }
        Some(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = ((y as usize) * (self.width as usize) + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = ((y as usize) * (self.width as usize) + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Copies out a rectangular region. Returns `None` when the region does
    /// not fit inside this buffer.
    pub fn crop(&self, region: Region) -> Option<PixelBuffer> {
        if region.x + region.width > self.width || region.y + region.height > self.height {
            return None;
        }
        let mut out = Vec::with_capacity((region.width as usize) * (region.height as usize) * 3);
        for row in region.y..region.y + region.height {
            let start = ((row as usize) * (self.width as usize) + region.x as usize) * 3;
            let end = start + (region.width as usize) * 3;
            out.extend_from_slice(&self.data[start..end]);
        }
        Some(PixelBuffer {
            width: region.width,
            height: region.height,
            data: out,
        })
    }
}

/// A rectangular region of interest inside a larger frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Region {
    pub fn new(x: u32, y: u32, width: u32, height: u32) -> Self {
        Self {
            x,
            y,
            width,
            height,
        }
    }

    /// A `side`×`side` region centred inside a `width`×`height` frame.
    pub fn centered(width: u32, height: u32, side: u32) -> Self {
        let side = side.min(width).min(height);
        Self {
            x: (width - side) / 2,
            y: (height - side) / 2,
            width: side,
            height: side,
        }
    }
}

/// The latest decoded frame published by a display path, shareable between
/// the publisher (the testbed client) and observers (the measurement tool).
#[derive(Debug, Clone)]
pub struct SharedSurface {
    inner: Arc<Mutex<PixelBuffer>>,
}

impl SharedSurface {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            inner: Arc::new(Mutex::new(PixelBuffer::new(width, height))),
        }
    }

    /// Replaces the published frame.
    pub fn publish(&self, frame: PixelBuffer) {
        *self.inner.lock().unwrap() = frame;
    }

    /// Snapshot of the most recently published frame.
    pub fn snapshot(&self) -> PixelBuffer {
        self.inner.lock().unwrap().clone()
    }

    /// Snapshot of a region of the most recently published frame.
    pub fn snapshot_region(&self, region: Region) -> Option<PixelBuffer> {
        self.inner.lock().unwrap().crop(region)
    }
}
