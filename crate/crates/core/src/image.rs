//! RGB images and superpixel label maps.

use std::path::Path;

use crate::error::{Error, Result};
use crate::pnm;

/// An RGB image with channels in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if pixels.len() != width * height {
            return Err(Error::invalid(format!(
                "pixel count {} does not match {width}x{height}",
                pixels.len()
            )));
        }
        if let Some(i) = pixels
            .iter()
            .position(|px| px.iter().any(|c| !(0.0..=1.0).contains(c)))
        {
            return Err(Error::invalid(format!(
                "pixel {i} has a channel outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image from 8-bit samples scaled as `v / 255`.
    pub fn from_rgb8(width: usize, height: usize, data: &[[u8; 3]]) -> Result<Self> {
        let pixels = data
            .iter()
            .map(|px| px.map(|v| f64::from(v) / 255.0))
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn read_ppm(path: impl AsRef<Path>) -> Result<Self> {
        let raw = pnm::read_ppm(path)?;
        Self::from_rgb8(raw.width, raw.height, &raw.data)
    }

    pub fn decode_ppm(bytes: &[u8]) -> Result<Self> {
        let raw = pnm::decode_ppm(bytes)?;
        Self::from_rgb8(raw.width, raw.height, &raw.data)
    }

    /// Channels quantized to 8 bits with rounding.
    pub fn to_rgb8(&self) -> Vec<[u8; 3]> {
        self.pixels.iter().map(|px| px.map(quantize)).collect()
    }

    pub fn write_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        pnm::write_ppm(path, self.width, self.height, &self.to_rgb8())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }
}

pub(crate) fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Superpixel decomposition: each pixel carries an id in `0..S`, every id
/// occurs, and each id's pixels are 4-connected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpixelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: usize,
}

impl SuperpixelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::invalid(format!(
                "label count {} does not match {width}x{height}",
                labels.len()
            )));
        }
        let count = labels.iter().max().map_or(0, |&m| m as usize + 1);
        let mut sizes = vec![0usize; count];
        for &l in &labels {
            sizes[l as usize] += 1;
        }
        if let Some(missing) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::invalid(format!(
                "superpixel ids are not contiguous: id {missing} is unused"
            )));
        }
        let map = Self {
            width,
            height,
            labels,
            count,
        };
        let components = connected_components(width, height, &map.labels);
        if components.count != count {
            // some label spans several components; report the first one
            let mut first_comp = vec![u32::MAX; count];
            for (i, &c) in components.labels.iter().enumerate() {
                let l = map.labels[i] as usize;
                if first_comp[l] == u32::MAX {
                    first_comp[l] = c;
                } else if first_comp[l] != c {
                    return Err(Error::invalid(format!(
                        "superpixel {l} is not 4-connected"
                    )));
                }
            }
        }
        Ok(map)
    }

    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self> {
        let raw = pnm::read_pgm(path)?;
        Self::new(
            raw.width,
            raw.height,
            raw.data.into_iter().map(u32::from).collect(),
        )
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        pnm::write_pgm16(path, self.width, self.height, &self.labels_u16()?)
    }

    pub fn encode_pgm(&self) -> Result<Vec<u8>> {
        Ok(pnm::encode_pgm16(self.width, self.height, &self.labels_u16()?))
    }

    fn labels_u16(&self) -> Result<Vec<u16>> {
        if self.count > usize::from(u16::MAX) + 1 {
            return Err(Error::invalid(format!(
                "{} superpixels do not fit a 16-bit PGM",
                self.count
            )));
        }
        Ok(self.labels.iter().map(|&l| l as u16).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Number of superpixels `S`.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Pixel count of every superpixel.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    pub fn check_matches(&self, image: &Image) -> Result<()> {
        if self.width != image.width() || self.height != image.height() {
            return Err(Error::invalid(format!(
                "superpixel map is {}x{} but image is {}x{}",
                self.width,
                self.height,
                image.width(),
                image.height()
            )));
        }
        Ok(())
    }
}

pub(crate) struct Components {
    pub labels: Vec<u32>,
    pub count: usize,
}

/// 4-connected components of equal-label pixels, numbered in row-major
/// order of first appearance.
pub(crate) fn connected_components(width: usize, height: usize, labels: &[u32]) -> Components {
    let mut comp = vec![u32::MAX; labels.len()];
    let mut count = 0u32;
    let mut stack = Vec::new();
    for start in 0..labels.len() {
        if comp[start] != u32::MAX {
            continue;
        }
        let label = labels[start];
        comp[start] = count;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % width, i / width);
            let mut visit = |j: usize| {
                if comp[j] == u32::MAX && labels[j] == label {
                    comp[j] = count;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < width {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - width);
            }
            if y + 1 < height {
                visit(i + width);
            }
        }
        count += 1;
    }
    Components {
        labels: comp,
        count: count as usize,
    }
}
