//! Binary line images.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::views::ViewDirection;
use crate::error::{Error, Result};

/// Binary raster where 1 marks a line pixel. Row-major, row 0 at the top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    #[serde(skip)]
    pub view: Option<ViewDirection>,
    #[serde(skip)]
    pub part: Option<String>,
}

/// Inclusive pixel bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl PixelRect {
    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }
    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

impl LineImage {
    pub fn blank(width: usize, height: usize) -> LineImage {
        LineImage {
            width,
            height,
            pixels: vec![0; width * height],
            view: None,
            part: None,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.pixels[y * self.width + x] != 0
    }

    /// Out-of-range coordinates read as background.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.pixels[y as usize * self.width + x as usize] != 0
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.pixels[y * self.width + x] = on as u8;
    }

    pub fn ink_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p != 0).count()
    }

    pub fn is_blank(&self) -> bool {
        self.pixels.iter().all(|&p| p == 0)
    }

    pub fn ink_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pixels
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    pub fn ink_bounds(&self) -> Option<PixelRect> {
        let mut it = self.ink_pixels();
        let (x, y) = it.next()?;
        let mut r = PixelRect {
            x0: x,
            y0: y,
            x1: x,
            y1: y,
        };
        for (x, y) in it {
            r.x0 = r.x0.min(x);
            r.x1 = r.x1.max(x);
            r.y0 = r.y0.min(y);
            r.y1 = r.y1.max(y);
        }
        Some(r)
    }

    /// 8-connected components of ink, each as a pixel list.
    pub fn connected_components(&self) -> Vec<Vec<(usize, usize)>> {
        let mut label = vec![false; self.pixels.len()];
        let mut out = Vec::new();
        for start in 0..self.pixels.len() {
            if self.pixels[start] == 0 || label[start] {
                continue;
            }
            label[start] = true;
            let mut stack = vec![start];
            let mut comp = Vec::new();
            while let Some(i) = stack.pop() {
                let (x, y) = ((i % self.width) as isize, (i / self.width) as isize);
                comp.push((x as usize, y as usize));
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if self.get_signed(nx, ny) {
                            let j = ny as usize * self.width + nx as usize;
                            if !label[j] {
                                label[j] = true;
                                stack.push(j);
                            }
                        }
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// One-pixel square dilation.
    pub fn dilated(&self) -> LineImage {
        let mut out = LineImage::blank(self.width, self.height);
        for (x, y) in self.ink_pixels() {
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if nx >= 0
                        && ny >= 0
                        && (nx as usize) < self.width
                        && (ny as usize) < self.height
                    {
                        out.set(nx as usize, ny as usize, true);
                    }
                }
            }
        }
        out
    }

    /// True when some 2×2 block is entirely ink.
    pub fn has_thick_block(&self) -> bool {
        (0..self.height.saturating_sub(1)).any(|y| {
            (0..self.width.saturating_sub(1)).any(|x| {
                self.get(x, y) && self.get(x + 1, y) && self.get(x, y + 1) && self.get(x + 1, y + 1)
            })
        })
    }

    /// Nearest-neighbor resampling of the source rectangle (x, y, w, h in
    /// source pixels, may extend past the border) into a `width`×`height`
    /// image.
    pub fn resample(&self, src: (f64, f64, f64, f64), width: usize, height: usize) -> LineImage {
        let (sx, sy, sw, sh) = src;
        let mut out = LineImage::blank(width, height);
        // Forward-map ink so thin lines survive downsampling, then fill
        // upsampling gaps by also sampling backward.
        let fx = width as f64 / sw;
        let fy = height as f64 / sh;
        for (x, y) in self.ink_pixels() {
            let tx = ((x as f64 + 0.5 - sx) * fx).floor();
            let ty = ((y as f64 + 0.5 - sy) * fy).floor();
            if tx >= 0.0 && ty >= 0.0 && (tx as usize) < width && (ty as usize) < height {
                out.set(tx as usize, ty as usize, true);
            }
        }
        if fx > 1.0 || fy > 1.0 {
            for ty in 0..height {
                for tx in 0..width {
                    let x = (sx + (tx as f64 + 0.5) / fx).floor();
                    let y = (sy + (ty as f64 + 0.5) / fy).floor();
                    if self.get_signed(x as isize, y as isize) {
                        out.set(tx, ty, true);
                    }
                }
            }
        }
        out
    }

    /// Encodes as a 1-bit grayscale PNG with black lines on white.
    pub fn to_png(&self) -> Vec<u8> {
        let gray: Vec<u8> = self
            .pixels
            .iter()
            .map(|&p| if p != 0 { 0 } else { 255 })
            .collect();
        encode_gray_png(&gray, self.width, self.height, true)
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_png()).map_err(|e| Error::io(path, e))
    }

    /// Decodes a PNG (any bit depth / color type) as a line image: pixels
    /// darker than mid-gray are ink.
    pub fn from_png(bytes: &[u8]) -> std::result::Result<LineImage, String> {
        let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
        decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
        let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
        let mut buf = vec![0; reader.output_buffer_size().ok_or("image too large")?];
        let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
        let channels = info.color_type.samples();
        let (w, h) = (info.width as usize, info.height as usize);
        let mut img = LineImage::blank(w, h);
        for y in 0..h {
            for x in 0..w {
                let px = &buf[y * info.line_size + x * channels..][..channels];
                let lum = match channels {
                    1 | 2 => px[0] as u32,
                    _ => (px[0] as u32 * 3 + px[1] as u32 * 6 + px[2] as u32) / 10,
                };
                let alpha = if channels == 2 || channels == 4 {
                    px[channels - 1]
                } else {
                    255
                };
                img.set(x, y, alpha > 127 && lum < 128);
            }
        }
        Ok(img)
    }
}

/// PNG encoding of an 8-bit gray buffer; `one_bit` packs values ≥128 as 1.
pub fn encode_gray_png(gray: &[u8], width: usize, height: usize, one_bit: bool) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(png::ColorType::Grayscale);
        if one_bit {
            enc.set_depth(png::BitDepth::One);
        } else {
            enc.set_depth(png::BitDepth::Eight);
        }
        let mut writer = enc.write_header().expect("png header");
        if one_bit {
            let stride = width.div_ceil(8);
            let mut packed = vec![0u8; stride * height];
            for y in 0..height {
                for x in 0..width {
                    if gray[y * width + x] >= 128 {
                        packed[y * stride + x / 8] |= 0x80 >> (x % 8);
                    }
                }
            }
            writer.write_image_data(&packed).expect("png data");
        } else {
            writer.write_image_data(gray).expect("png data");
        }
    }
    out
}
