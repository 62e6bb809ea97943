//! 8-bit RGB frames: container, area-average down-sampling, and file I/O.

use std::path::Path;

use crate::error::{Error, Result};

/// Interleaved 3×8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl Image {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Input("image dimensions must be positive".into()));
        }
        let expected = 3 * width as usize * height as usize;
        if data.len() != expected {
            return Err(Error::Input(format!(
                "pixel data length {} does not match 3*{}*{} = {}",
                data.len(),
                width,
                height,
                expected
            )));
        }
        Ok(Image {
            width,
            height,
            data,
        })
    }

    /// Image filled with a single color.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(3 * width as usize * height as usize);
        for _ in 0..width as usize * height as usize {
            data.extend_from_slice(&rgb);
        }
        Image::new(width, height, data)
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

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn put_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Fill an axis-aligned rectangle, clipped to the image.
    pub fn fill_rect(&mut self, x: u32, y: u32, w: u32, h: u32, rgb: [u8; 3]) {
        let x1 = (x + w).min(self.width);
        let y1 = (y + h).min(self.height);
        for py in y.min(self.height)..y1 {
            for px in x.min(self.width)..x1 {
                self.put_pixel(px, py, rgb);
            }
        }
    }

    pub fn mean_value(&self) -> f64 {
        let sum: u64 = self.data.iter().map(|&v| v as u64).sum();
        sum as f64 / self.data.len() as f64
    }
}

/// Area-average down-sampling by a linear rate in (0, 1].
///
/// Output dimensions are `ceil(w·r) × ceil(h·r)`. Each output pixel averages
/// the input region it covers, with exact fractional edge weights accumulated
/// in f64. `r = 1` returns an identical copy.
pub fn downsample_image(img: &Image, r: f64) -> Result<Image> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Parameter(format!(
            "down-sampling rate {r} outside (0, 1]"
        )));
    }
    if r == 1.0 {
        return Ok(img.clone());
    }
    let out_w = (img.width as f64 * r).ceil() as u32;
    let out_h = (img.height as f64 * r).ceil() as u32;
    let scale_x = img.width as f64 / out_w as f64;
    let scale_y = img.height as f64 / out_h as f64;

    let mut data = Vec::with_capacity(3 * out_w as usize * out_h as usize);
    for oy in 0..out_h {
        let y0 = oy as f64 * scale_y;
        let y1 = (oy as f64 + 1.0) * scale_y;
        for ox in 0..out_w {
            let x0 = ox as f64 * scale_x;
            let x1 = (ox as f64 + 1.0) * scale_x;
            let mut acc = [0.0f64; 3];
            let mut weight = 0.0f64;
            let iy0 = y0.floor() as u32;
            let iy1 = (y1.ceil() as u32).min(img.height);
            let ix0 = x0.floor() as u32;
            let ix1 = (x1.ceil() as u32).min(img.width);
            for iy in iy0..iy1 {
                let wy = (y1.min(iy as f64 + 1.0) - y0.max(iy as f64)).max(0.0);
                if wy == 0.0 {
                    continue;
                }
                for ix in ix0..ix1 {
                    let wx = (x1.min(ix as f64 + 1.0) - x0.max(ix as f64)).max(0.0);
                    if wx == 0.0 {
                        continue;
                    }
                    let p = img.pixel(ix, iy);
                    let w = wx * wy;
                    acc[0] += p[0] as f64 * w;
                    acc[1] += p[1] as f64 * w;
                    acc[2] += p[2] as f64 * w;
                    weight += w;
                }
            }
            for ch in acc {
                data.push((ch / weight).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Image::new(out_w, out_h, data)
}

/// Load a frame from disk; PPM (P6) and PNG are accepted.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let dyn_img = image::open(path)
        .map_err(|e| Error::Format(format!("cannot read image {}: {e}", path.display())))?;
    let rgb = dyn_img.to_rgb8();
    Image::new(rgb.width(), rgb.height(), rgb.into_raw())
}

/// Save a frame; the format is chosen from the extension (`.ppm` / `.png`).
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let buf: image::RgbImage =
        image::ImageBuffer::from_raw(img.width, img.height, img.data.clone())
            .expect("image invariant guarantees buffer size");
    buf.save(path)
        .map_err(|e| Error::Format(format!("cannot write image {}: {e}", path.display())))
}
