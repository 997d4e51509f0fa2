//! Small in-memory image containers used for renders, masks, and depth maps.

use serde::{Deserialize, Serialize};

/// Row-major RGB image with channels in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<[f32; 3]>,
}

impl RgbImage {
    pub fn filled(width: u32, height: u32, value: [f32; 3]) -> Self {
        Self { width, height, data: vec![value; (width * height) as usize] }
    }

    #[inline]
    pub fn index(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        (y * self.width + x) as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [f32; 3] {
        self.data[self.index(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: [f32; 3]) {
        let i = self.index(x, y);
        self.data[i] = value;
    }

    /// Area-average downsample by an integer factor. Width and height must be
    /// divisible by the factor.
    pub fn downsample(&self, factor: u32) -> Self {
        assert!(factor >= 1 && self.width % factor == 0 && self.height % factor == 0);
        let (w, h) = (self.width / factor, self.height / factor);
        let mut out = Self::filled(w, h, [0.0; 3]);
        let norm = 1.0 / (factor * factor) as f64;
        for oy in 0..h {
            for ox in 0..w {
                let mut acc = [0.0f64; 3];
                for sy in 0..factor {
                    for sx in 0..factor {
                        let px = self.get(ox * factor + sx, oy * factor + sy);
                        for c in 0..3 {
                            acc[c] += px[c] as f64;
                        }
                    }
                }
                out.set(ox, oy, [(acc[0] * norm) as f32, (acc[1] * norm) as f32, (acc[2] * norm) as f32]);
            }
        }
        out
    }

    /// 8-bit PNG bytes (sRGB-less, straight quantization).
    pub fn to_png(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        let mut raw = Vec::with_capacity(self.data.len() * 3);
        for px in &self.data {
            for c in px {
                raw.push((c.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
        let img = image::RgbImage::from_raw(self.width, self.height, raw).expect("size matches buffer");
        image::DynamicImage::ImageRgb8(img)
            .write_to(&mut std::io::Cursor::new(&mut buf), image::ImageFormat::Png)
            .expect("png encoding into memory cannot fail");
        buf
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self, image::ImageError> {
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?.into_rgb8();
        let (width, height) = (img.width(), img.height());
        let data = img
            .pixels()
            .map(|p| [p.0[0] as f32 / 255.0, p.0[1] as f32 / 255.0, p.0[2] as f32 / 255.0])
            .collect();
        Ok(Self { width, height, data })
    }
}

/// Row-major single-channel f32 image (masks, depth maps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl ScalarImage {
    pub fn filled(width: u32, height: u32, value: f32) -> Self {
        Self { width, height, data: vec![value; (width * height) as usize] }
    }

    #[inline]
    pub fn index(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        (y * self.width + x) as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.data[self.index(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: f32) {
        let i = self.index(x, y);
        self.data[i] = value;
    }

    pub fn downsample(&self, factor: u32) -> Self {
        assert!(factor >= 1 && self.width % factor == 0 && self.height % factor == 0);
        let (w, h) = (self.width / factor, self.height / factor);
        let mut out = Self::filled(w, h, 0.0);
        let norm = 1.0 / (factor * factor) as f64;
        for oy in 0..h {
            for ox in 0..w {
                let mut acc = 0.0f64;
                for sy in 0..factor {
                    for sx in 0..factor {
                        acc += self.get(ox * factor + sx, oy * factor + sy) as f64;
                    }
                }
                out.set(ox, oy, (acc * norm) as f32);
            }
        }
        out
    }
}

/// Per-pixel integer labels (object ids); 0 is background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u32>,
}

impl IdImage {
    pub fn filled(width: u32, height: u32, value: u32) -> Self {
        Self { width, height, data: vec![value; (width * height) as usize] }
    }

    #[inline]
    pub fn index(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        (y * self.width + x) as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.data[self.index(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: u32) {
        let i = self.index(x, y);
        self.data[i] = value;
    }
}
