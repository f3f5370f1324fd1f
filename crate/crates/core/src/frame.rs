use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::DEFAULT_MM_PER_PX;

/// A top-down camera frame: row-major RGB8 pixels plus the ground scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
    mm_per_px: f64,
}

impl Frame {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>, mm_per_px: f64) -> Result<Self, Error> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidFrame(format!("empty frame {width}x{height}")));
        }
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(Error::InvalidFrame(format!(
                "pixel buffer has {} bytes, {width}x{height} needs {expected}",
                pixels.len()
            )));
        }
        if !(mm_per_px > 0.0 && mm_per_px.is_finite()) {
            return Err(Error::InvalidFrame(format!("mm_per_px must be positive, got {mm_per_px}")));
        }
        Ok(Self { width, height, pixels, mm_per_px })
    }

    /// A frame filled with one color at the default scale.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, Error> {
        let n = width as usize * height as usize;
        let mut pixels = vec![0u8; n * 3];
        for px in pixels.chunks_exact_mut(3) {
            px.copy_from_slice(&rgb);
        }
        Self::new(width, height, pixels, DEFAULT_MM_PER_PX)
    }

    pub fn with_scale(mut self, mm_per_px: f64) -> Result<Self, Error> {
        if !(mm_per_px > 0.0 && mm_per_px.is_finite()) {
            return Err(Error::InvalidFrame(format!("mm_per_px must be positive, got {mm_per_px}")));
        }
        self.mm_per_px = mm_per_px;
        Ok(self)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn mm_per_px(&self) -> f64 {
        self.mm_per_px
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Paints the inclusive rectangle `[x0, x1] x [y0, y1]`, clipped to the frame.
    pub fn fill_rect(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, rgb: [u8; 3]) {
        let xa = x0.max(0);
        let ya = y0.max(0);
        let xb = x1.min(self.width as i64 - 1);
        let yb = y1.min(self.height as i64 - 1);
        for y in ya..=yb {
            for x in xa..=xb {
                self.set_pixel(x as u32, y as u32, rgb);
            }
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x <= (self.width - 1) as f64 && y <= (self.height - 1) as f64
    }
}
