//! Deterministic convolutional feature extractor.
//!
//! A fixed stack of three 3×3 convolutions (strides 4, 4, 2 — total 32) with
//! replicate padding and ReLU, weights drawn once from a seeded generator.
//! It reproduces the shape and locality behavior of a small CNN backbone
//! while staying fully deterministic: the same pixels, seed, and config
//! always produce the same feature map.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Image;
use crate::tensor::{FeatureMap, Tensor};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractorConfig {
    /// Output channel count of the final layer.
    pub channels: usize,
    /// Frame pixels per feature cell; fixed by the layer strides.
    pub stride: u32,
    /// Seed for the weight generator.
    pub seed: u64,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig {
            channels: 64,
            stride: 32,
            seed: 0,
        }
    }
}

const LAYER_STRIDES: [usize; 3] = [4, 4, 2];
const HIDDEN_CHANNELS: [usize; 2] = [8, 16];

struct ConvLayer {
    in_channels: usize,
    out_channels: usize,
    stride: usize,
    /// Weights indexed [out][in][ky*3+kx].
    weights: Vec<f32>,
}

impl ConvLayer {
    fn seeded(in_channels: usize, out_channels: usize, stride: usize, rng: &mut ChaCha8Rng) -> Self {
        let fan_in = (in_channels * 9) as f32;
        let bound = (6.0 / fan_in).sqrt();
        let weights = (0..out_channels * in_channels * 9)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        ConvLayer {
            in_channels,
            out_channels,
            stride,
            weights,
        }
    }

    /// 3×3 convolution with replicate padding, stride `self.stride`, ReLU.
    fn forward(&self, input: &Tensor) -> Tensor {
        let in_h = input.height();
        let in_w = input.width();
        let out_h = in_h.div_ceil(self.stride);
        let out_w = in_w.div_ceil(self.stride);
        let mut data = vec![0.0f32; self.out_channels * out_h * out_w];

        for oc in 0..self.out_channels {
            let w_base = oc * self.in_channels * 9;
            for oy in 0..out_h {
                for ox in 0..out_w {
                    let cy = (oy * self.stride) as isize;
                    let cx = (ox * self.stride) as isize;
                    let mut acc = 0.0f32;
                    for ic in 0..self.in_channels {
                        let plane = input.channel(ic);
                        let w = &self.weights[w_base + ic * 9..w_base + ic * 9 + 9];
                        for ky in 0..3isize {
                            let sy = (cy + ky - 1).clamp(0, in_h as isize - 1) as usize;
                            let row = &plane[sy * in_w..(sy + 1) * in_w];
                            for kx in 0..3isize {
                                let sx = (cx + kx - 1).clamp(0, in_w as isize - 1) as usize;
                                acc += w[(ky * 3 + kx) as usize] * row[sx];
                            }
                        }
                    }
                    data[(oc * out_h + oy) * out_w + ox] = acc.max(0.0);
                }
            }
        }
        Tensor::new(self.out_channels, out_h, out_w, data).expect("conv output shape is consistent")
    }
}

/// The seeded extractor; construct once, reuse across frames.
pub struct FeatureExtractor {
    config: ExtractorConfig,
    layers: Vec<ConvLayer>,
}

impl FeatureExtractor {
    pub fn new(config: ExtractorConfig) -> Result<Self> {
        if config.channels == 0 {
            return Err(Error::Parameter("extractor channels must be >= 1".into()));
        }
        let expected: usize = LAYER_STRIDES.iter().product();
        if config.stride as usize != expected {
            return Err(Error::Parameter(format!(
                "extractor stride {} not supported; layer strides fix it at {expected}",
                config.stride
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let channel_plan = [3, HIDDEN_CHANNELS[0], HIDDEN_CHANNELS[1], config.channels];
        let layers = (0..3)
            .map(|i| {
                ConvLayer::seeded(
                    channel_plan[i],
                    channel_plan[i + 1],
                    LAYER_STRIDES[i],
                    &mut rng,
                )
            })
            .collect();
        Ok(FeatureExtractor { config, layers })
    }

    pub fn config(&self) -> &ExtractorConfig {
        &self.config
    }

    /// Extract features from a frame. Output spatial dims are
    /// `ceil(H/stride) × ceil(W/stride)`.
    pub fn extract(&self, img: &Image) -> Result<FeatureMap> {
        if img.width() < self.config.stride || img.height() < self.config.stride {
            return Err(Error::Input(format!(
                "image {}x{} smaller than extractor stride {}",
                img.width(),
                img.height(),
                self.config.stride
            )));
        }
        let mut t = image_to_tensor(img);
        for layer in &self.layers {
            t = layer.forward(&t);
        }
        FeatureMap::new(t, self.config.stride)
    }
}

/// One-call form: builds a default-config extractor with the given seed.
pub fn extract_features(img: &Image, extractor_seed: u64) -> Result<FeatureMap> {
    let extractor = FeatureExtractor::new(ExtractorConfig {
        seed: extractor_seed,
        ..ExtractorConfig::default()
    })?;
    extractor.extract(img)
}

/// RGB pixels scaled to [0, 1] as a 3×H×W tensor.
fn image_to_tensor(img: &Image) -> Tensor {
    let w = img.width() as usize;
    let h = img.height() as usize;
    let mut data = vec![0.0f32; 3 * h * w];
    let src = img.data();
    for y in 0..h {
        for x in 0..w {
            let i = 3 * (y * w + x);
            for c in 0..3 {
                data[(c * h + y) * w + x] = src[i + c] as f32 / 255.0;
            }
        }
    }
    Tensor::new(3, h, w, data).expect("image invariant guarantees shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_gives_spatially_constant_channels() {
        let img = Image::filled(96, 64, [128, 128, 128]).unwrap();
        let fm = extract_features(&img, 7).unwrap();
        let t = &fm.tensor;
        for c in 0..t.channels() {
            let plane = t.channel(c);
            let first = plane[0];
            assert!(
                plane.iter().all(|&v| v == first),
                "channel {c} not constant"
            );
        }
    }

    #[test]
    fn deterministic_for_same_image_and_seed() {
        let mut img = Image::filled(128, 96, [40, 40, 40]).unwrap();
        img.fill_rect(30, 20, 40, 30, [220, 210, 200]);
        let a = extract_features(&img, 11).unwrap();
        let b = extract_features(&img, 11).unwrap();
        assert_eq!(a, b);
        let c = extract_features(&img, 12).unwrap();
        assert_ne!(a, c, "different seeds should change the weights");
    }

    #[test]
    fn output_dims_are_ceil_of_stride_division() {
        // 960x540 at stride 32: ceil(540/32) x ceil(960/32) = 17 x 30.
        let img = Image::filled(960, 540, [10, 10, 10]).unwrap();
        let fm = extract_features(&img, 3).unwrap();
        assert_eq!((fm.tensor.height(), fm.tensor.width()), (17, 30));
        assert_eq!(fm.tensor.channels(), 64);
        assert_eq!(fm.stride, 32);
    }

    #[test]
    fn four_k_frame_maps_to_68_by_120_cells() {
        let img = Image::filled(3840, 2160, [10, 10, 10]).unwrap();
        let fm = extract_features(&img, 3).unwrap();
        assert_eq!((fm.tensor.height(), fm.tensor.width()), (68, 120));
    }

    #[test]
    fn image_smaller_than_stride_is_input_error() {
        let img = Image::filled(16, 16, [0, 0, 0]).unwrap();
        assert!(matches!(extract_features(&img, 0), Err(Error::Input(_))));
    }

    #[test]
    fn bright_region_raises_local_activation_energy() {
        let mut img = Image::filled(256, 256, [25, 25, 25]).unwrap();
        img.fill_rect(140, 150, 80, 70, [235, 235, 235]);
        let fm = extract_features(&img, 5).unwrap();
        let t = &fm.tensor;
        let energy = |y: usize, x: usize| -> f32 { (0..t.channels()).map(|c| t.get(c, y, x)).sum() };
        // Cell covering the blob center vs a far background cell.
        let hot = energy(5, 5);
        let cold = energy(1, 1);
        assert!(
            hot > cold * 2.0,
            "blob energy {hot} should dominate background {cold}"
        );
    }
}
