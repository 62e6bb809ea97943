//! Dense C×H×W tensors and their binary file format.
//!
//! The on-disk layout is fixed so that round-trips are bit-exact: an 8-byte
//! magic `ROITNSR1`, three little-endian `u32` dims (channels, height, width),
//! then `C·H·W` little-endian IEEE-754 binary32 values in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 8] = b"ROITNSR1";

/// Row-major C×H×W tensor of finite `f32` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        let expected = channels * height * width;
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "tensor data length {} does not match {}x{}x{} = {}",
                data.len(),
                channels,
                height,
                width,
                expected
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("tensor contains non-finite value {v}")));
        }
        Ok(Tensor {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Tensor {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    /// Tensor filled from a seeded generator, values uniform in [-1, 1).
    pub fn seeded_random(channels: usize, height: usize, width: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..channels * height * width)
            .map(|_| rng.gen_range(-1.0f32..1.0))
            .collect();
        Tensor {
            channels,
            height,
            width,
            data,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn channel(&self, c: usize) -> &[f32] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }

    /// Copy of the sub-tensor covering rows `y0..y0+h`, cols `x0..x0+w`
    /// of every channel.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Tensor> {
        if x0 + w > self.width || y0 + h > self.height || w == 0 || h == 0 {
            return Err(Error::Range(format!(
                "crop {}x{}+{}+{} outside tensor {}x{}",
                w, h, x0, y0, self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(self.channels * h * w);
        for c in 0..self.channels {
            let plane = self.channel(c);
            for y in y0..y0 + h {
                let row = &plane[y * self.width + x0..y * self.width + x0 + w];
                data.extend_from_slice(row);
            }
        }
        Ok(Tensor {
            channels: self.channels,
            height: h,
            width: w,
            data,
        })
    }
}

/// Spatial feature map produced by the extractor; `stride` is the number of
/// frame pixels covered by one feature cell on both axes.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub tensor: Tensor,
    pub stride: u32,
}

impl FeatureMap {
    pub fn new(tensor: Tensor, stride: u32) -> Result<Self> {
        if stride == 0 {
            return Err(Error::Parameter("feature stride must be >= 1".into()));
        }
        Ok(FeatureMap { tensor, stride })
    }
}

pub fn save_tensor(t: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_tensor(t, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);
    read_tensor(&mut r)
}

pub fn write_tensor(t: &Tensor, w: &mut impl Write) -> Result<()> {
    w.write_all(TENSOR_MAGIC)?;
    for dim in [t.channels, t.height, t.width] {
        let dim = u32::try_from(dim)
            .map_err(|_| Error::Format(format!("dimension {dim} exceeds u32")))?;
        w.write_all(&dim.to_le_bytes())?;
    }
    for v in &t.data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_tensor(r: &mut impl Read) -> Result<Tensor> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("tensor file shorter than magic".into()))?;
    if &magic != TENSOR_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            magic, TENSOR_MAGIC
        )));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        let mut buf = [0u8; 4];
        r.read_exact(&mut buf)
            .map_err(|_| Error::Format("tensor file truncated in header".into()))?;
        *d = u32::from_le_bytes(buf) as usize;
    }
    let [channels, height, width] = dims;
    let count = channels
        .checked_mul(height)
        .and_then(|n| n.checked_mul(width))
        .ok_or_else(|| Error::Format("tensor dimensions overflow".into()))?;
    let mut data = Vec::with_capacity(count);
    let mut buf = [0u8; 4];
    for i in 0..count {
        r.read_exact(&mut buf).map_err(|_| {
            Error::Format(format!("tensor payload truncated at element {i} of {count}"))
        })?;
        let v = f32::from_le_bytes(buf);
        if !v.is_finite() {
            return Err(Error::Format(format!(
                "non-finite payload value {v} at element {i}"
            )));
        }
        data.push(v);
    }
    // Trailing bytes mean the header and payload disagree.
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::Format("trailing bytes after tensor payload".into()));
    }
    Ok(Tensor {
        channels,
        height,
        width,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip_bytes(t: &Tensor) -> Vec<u8> {
        let mut buf = Vec::new();
        write_tensor(t, &mut buf).unwrap();
        buf
    }

    #[test]
    fn roundtrip_zeros() {
        let t = Tensor::zeros(2, 3, 4);
        let bytes = roundtrip_bytes(&t);
        let back = read_tensor(&mut bytes.as_slice()).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn roundtrip_seeded_random_is_bit_exact() {
        for seed in 0..1000u64 {
            let t = Tensor::seeded_random(3, 5, 7, seed);
            let bytes = roundtrip_bytes(&t);
            let back = read_tensor(&mut bytes.as_slice()).unwrap();
            let bytes2 = roundtrip_bytes(&back);
            assert_eq!(bytes, bytes2, "serialized bytes differ for seed {seed}");
        }
    }

    #[test]
    fn roundtrip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tnsr");
        let t = Tensor::seeded_random(4, 6, 5, 42);
        save_tensor(&t, &path).unwrap();
        let back = load_tensor(&path).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn truncated_payload_is_format_error() {
        let t = Tensor::seeded_random(2, 2, 2, 1);
        let mut bytes = roundtrip_bytes(&t);
        bytes.truncate(bytes.len() - 3);
        match read_tensor(&mut bytes.as_slice()) {
            Err(Error::Format(msg)) => assert!(msg.contains("truncated"), "{msg}"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_is_format_error() {
        let t = Tensor::zeros(1, 1, 1);
        let mut bytes = roundtrip_bytes(&t);
        bytes[0] = b'X';
        assert!(matches!(
            read_tensor(&mut bytes.as_slice()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn non_finite_payload_is_format_error() {
        let t = Tensor::zeros(1, 1, 2);
        let mut bytes = roundtrip_bytes(&t);
        let nan = f32::NAN.to_le_bytes();
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&nan);
        assert!(matches!(
            read_tensor(&mut bytes.as_slice()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let t = Tensor::zeros(1, 1, 1);
        let mut bytes = roundtrip_bytes(&t);
        bytes.push(0);
        assert!(matches!(
            read_tensor(&mut bytes.as_slice()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn shape_mismatch_rejected_at_construction() {
        assert!(matches!(
            Tensor::new(2, 2, 2, vec![0.0; 7]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            Tensor::new(1, 1, 1, vec![f32::INFINITY]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn crop_copies_subtensor() {
        let data: Vec<f32> = (0..16).map(|v| v as f32).collect();
        let t = Tensor::new(1, 4, 4, data).unwrap();
        let c = t.crop(0, 0, 2, 2).unwrap();
        assert_eq!(c.data(), &[0.0, 1.0, 4.0, 5.0]);
        assert!(t.crop(3, 3, 2, 2).is_err());
        // Full crop is the identity.
        assert_eq!(t.crop(0, 0, 4, 4).unwrap(), t);
    }
}
