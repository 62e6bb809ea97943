//! Class activation maps: per-pixel weighted sums of feature channels.
//!
//! Given a feature map and a K×C weight matrix, the activation of class `i`
//! at cell `(x, y)` is the channel-weighted sum `Σ_c w[i][c] · F[c][y][x]`.
//! Maps for several target classes are aggregated per pixel and min-max
//! normalized so that one heat threshold works across crops.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::partition::PartId;
use crate::tensor::{self, FeatureMap, Tensor};

/// K×C matrix of per-class channel weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights {
    classes: usize,
    channels: usize,
    /// Row-major [class][channel].
    data: Vec<f32>,
}

impl ClassWeights {
    pub fn new(classes: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != classes * channels {
            return Err(Error::Shape(format!(
                "weight matrix length {} does not match {classes}x{channels}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("class weights must be finite".into()));
        }
        Ok(ClassWeights {
            classes,
            channels,
            data,
        })
    }

    /// Seeded random weights for tests and synthetic scenarios. With
    /// `positive` the values are uniform in [0, 1), turning the aggregate
    /// map into an activation-energy detector; otherwise uniform in [-1, 1).
    pub fn seeded(classes: usize, channels: usize, seed: u64, positive: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..classes * channels)
            .map(|_| {
                if positive {
                    rng.gen_range(0.0f32..1.0)
                } else {
                    rng.gen_range(-1.0f32..1.0)
                }
            })
            .collect();
        ClassWeights {
            classes,
            channels,
            data,
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn row(&self, class: usize) -> &[f32] {
        &self.data[class * self.channels..(class + 1) * self.channels]
    }

    /// Weights are stored on disk in the tensor format with shape (K, C, 1).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let t = tensor::load_tensor(path)?;
        if t.width() != 1 {
            return Err(Error::Format(format!(
                "class-weight tensor must have shape (K, C, 1), got width {}",
                t.width()
            )));
        }
        ClassWeights::new(t.channels(), t.height(), t.data().to_vec())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let t = Tensor::new(self.classes, self.channels, 1, self.data.clone())?;
        tensor::save_tensor(&t, path)
    }
}

/// Which class an activation map belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CamClass {
    Class(u32),
    Aggregate,
}

/// Per-cell activation values over one feature crop.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f32>,
    pub class: CamClass,
    pub part: PartId,
}

impl ActivationMap {
    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f32 {
        self.values[y * self.width + x]
    }
}

/// How multi-class maps are combined per pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateMode {
    #[default]
    Max,
    Sum,
}

/// Spatial mean of each channel; sums are accumulated in f64.
pub fn global_pool(f: &FeatureMap) -> Result<Vec<f32>> {
    let t = &f.tensor;
    if t.is_empty() {
        return Err(Error::Input("cannot pool an empty feature map".into()));
    }
    let cells = (t.height() * t.width()) as f64;
    Ok((0..t.channels())
        .map(|c| {
            let sum: f64 = t.channel(c).iter().map(|&v| v as f64).sum();
            (sum / cells) as f32
        })
        .collect())
}

/// Activation map of one class over one feature crop.
///
/// The per-cell accumulation runs over channels in ascending order in f32,
/// so cropping the feature map before or after this call yields bit-identical
/// values.
pub fn compute_cam(
    f: &FeatureMap,
    w: &ClassWeights,
    class: usize,
    part: PartId,
) -> Result<ActivationMap> {
    let t = &f.tensor;
    if w.channels() != t.channels() {
        return Err(Error::Shape(format!(
            "weight channels {} do not match feature channels {}",
            w.channels(),
            t.channels()
        )));
    }
    if class >= w.classes() {
        return Err(Error::Range(format!(
            "class {class} out of range (K = {})",
            w.classes()
        )));
    }
    let row = w.row(class);
    let cells = t.height() * t.width();
    let mut values = vec![0.0f32; cells];
    for (c, &wc) in row.iter().enumerate() {
        let plane = t.channel(c);
        for (v, &fv) in values.iter_mut().zip(plane.iter()) {
            *v += wc * fv;
        }
    }
    Ok(ActivationMap {
        height: t.height(),
        width: t.width(),
        values,
        class: CamClass::Class(class as u32),
        part,
    })
}

/// Per-pixel combination of same-shape maps over the target-class set.
pub fn aggregate_classes(maps: &[ActivationMap], mode: AggregateMode) -> Result<ActivationMap> {
    let first = maps
        .first()
        .ok_or_else(|| Error::Input("aggregate needs at least one map".into()))?;
    if maps
        .iter()
        .any(|m| m.height != first.height || m.width != first.width)
    {
        return Err(Error::Shape("activation maps differ in shape".into()));
    }
    let mut values = first.values.clone();
    for m in &maps[1..] {
        for (acc, &v) in values.iter_mut().zip(m.values.iter()) {
            match mode {
                AggregateMode::Max => *acc = acc.max(v),
                AggregateMode::Sum => *acc += v,
            }
        }
    }
    Ok(ActivationMap {
        height: first.height,
        width: first.width,
        values,
        class: if maps.len() == 1 {
            first.class
        } else {
            CamClass::Aggregate
        },
        part: first.part,
    })
}

/// Min-max normalization to [0, 1]; a constant map becomes all zeros.
pub fn normalize_map(m: &ActivationMap) -> ActivationMap {
    let mut min = f32::INFINITY;
    let mut max = f32::NEG_INFINITY;
    for &v in &m.values {
        min = min.min(v);
        max = max.max(v);
    }
    let values = if max > min {
        let span = max - min;
        m.values.iter().map(|&v| (v - min) / span).collect()
    } else {
        vec![0.0; m.values.len()]
    };
    ActivationMap {
        height: m.height,
        width: m.width,
        values,
        class: m.class,
        part: m.part,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_from(values: Vec<f32>, h: usize, w: usize) -> ActivationMap {
        ActivationMap {
            height: h,
            width: w,
            values,
            class: CamClass::Class(0),
            part: PartId::P3,
        }
    }

    #[test]
    fn pool_of_constant_map_is_the_constant() {
        let t = Tensor::new(2, 3, 3, vec![3.5; 18]).unwrap();
        let f = FeatureMap::new(t, 32).unwrap();
        let pooled = global_pool(&f).unwrap();
        assert_eq!(pooled, vec![3.5, 3.5]);
    }

    #[test]
    fn pool_is_arithmetic_mean() {
        let t = Tensor::new(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let f = FeatureMap::new(t, 32).unwrap();
        assert_eq!(global_pool(&f).unwrap(), vec![2.5]);
    }

    #[test]
    fn pool_matches_reference_summation() {
        for seed in 0..20u64 {
            let t = Tensor::seeded_random(6, 9, 11, seed);
            let f = FeatureMap::new(t, 32).unwrap();
            let pooled = global_pool(&f).unwrap();
            for (c, &p) in pooled.iter().enumerate() {
                let mut sum = 0.0f64;
                for y in 0..9 {
                    for x in 0..11 {
                        sum += f.tensor.get(c, y, x) as f64;
                    }
                }
                let reference = sum / 99.0;
                assert!((p as f64 - reference).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn pool_of_empty_map_is_input_error() {
        let t = Tensor::zeros(0, 0, 0);
        let f = FeatureMap::new(t, 32).unwrap();
        assert!(matches!(global_pool(&f), Err(Error::Input(_))));
    }

    #[test]
    fn cam_of_linear_feature_is_linear() {
        // One channel, w = 2, F(x, y) = x + y on a 2x2 grid.
        let t = Tensor::new(1, 2, 2, vec![0.0, 1.0, 1.0, 2.0]).unwrap();
        let f = FeatureMap::new(t, 32).unwrap();
        let w = ClassWeights::new(1, 1, vec![2.0]).unwrap();
        let m = compute_cam(&f, &w, 0, PartId::P3).unwrap();
        assert_eq!(m.values, vec![0.0, 2.0, 2.0, 4.0]);
    }

    #[test]
    fn zero_weights_give_zero_map() {
        let t = Tensor::seeded_random(4, 3, 3, 9);
        let f = FeatureMap::new(t, 32).unwrap();
        let w = ClassWeights::new(2, 4, vec![0.0; 8]).unwrap();
        let m = compute_cam(&f, &w, 1, PartId::P3).unwrap();
        assert!(m.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cam_matches_per_pixel_dot_product_oracle() {
        for seed in 0..20u64 {
            let t = Tensor::seeded_random(8, 5, 6, seed);
            let f = FeatureMap::new(t, 32).unwrap();
            let w = ClassWeights::seeded(3, 8, seed + 1000, false);
            for class in 0..3 {
                let m = compute_cam(&f, &w, class, PartId::P4).unwrap();
                for y in 0..5 {
                    for x in 0..6 {
                        let mut dot = 0.0f64;
                        for c in 0..8 {
                            dot += w.row(class)[c] as f64 * f.tensor.get(c, y, x) as f64;
                        }
                        assert!(
                            (m.get(y, x) as f64 - dot).abs() < 1e-5,
                            "mismatch at ({y},{x}) seed {seed}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn cam_channel_mismatch_is_shape_error() {
        let t = Tensor::zeros(4, 2, 2);
        let f = FeatureMap::new(t, 32).unwrap();
        let w = ClassWeights::new(1, 3, vec![0.0; 3]).unwrap();
        assert!(matches!(
            compute_cam(&f, &w, 0, PartId::P3),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn cam_is_linear_in_features() {
        let a = Tensor::seeded_random(4, 6, 6, 1);
        let b = Tensor::seeded_random(4, 6, 6, 2);
        let w = ClassWeights::seeded(1, 4, 3, false);
        let (alpha, beta) = (0.7f32, -1.3f32);
        let combo_data: Vec<f32> = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| alpha * x + beta * y)
            .collect();
        let combo = Tensor::new(4, 6, 6, combo_data).unwrap();
        let m_combo = compute_cam(&FeatureMap::new(combo, 32).unwrap(), &w, 0, PartId::P3).unwrap();
        let m_a = compute_cam(&FeatureMap::new(a, 32).unwrap(), &w, 0, PartId::P3).unwrap();
        let m_b = compute_cam(&FeatureMap::new(b, 32).unwrap(), &w, 0, PartId::P3).unwrap();
        for i in 0..m_combo.values.len() {
            let expect = alpha * m_a.values[i] + beta * m_b.values[i];
            let got = m_combo.values[i];
            let scale = expect.abs().max(1.0);
            assert!(
                (got - expect).abs() / scale < 1e-4,
                "linearity violated at {i}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn aggregate_single_map_is_identity() {
        let m = map_from(vec![1.0, 5.0], 1, 2);
        let out = aggregate_classes(std::slice::from_ref(&m), AggregateMode::Max).unwrap();
        assert_eq!(out.values, m.values);
        assert_eq!(out.class, m.class);
    }

    #[test]
    fn aggregate_max_takes_union_of_hot_pixels() {
        let a = map_from(vec![1.0, 5.0], 1, 2);
        let b = map_from(vec![4.0, 2.0], 1, 2);
        let out = aggregate_classes(&[a, b], AggregateMode::Max).unwrap();
        assert_eq!(out.values, vec![4.0, 5.0]);
        assert_eq!(out.class, CamClass::Aggregate);

        let hot_a = map_from(vec![9.0, 0.0, 0.0, 0.0], 2, 2);
        let hot_b = map_from(vec![0.0, 0.0, 0.0, 9.0], 2, 2);
        let union = aggregate_classes(&[hot_a, hot_b], AggregateMode::Max).unwrap();
        assert_eq!(union.values, vec![9.0, 0.0, 0.0, 9.0]);
    }

    #[test]
    fn aggregate_dim_mismatch_is_shape_error() {
        let a = map_from(vec![0.0; 4], 2, 2);
        let b = map_from(vec![0.0; 6], 2, 3);
        assert!(matches!(
            aggregate_classes(&[a, b], AggregateMode::Max),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn normalize_spans_unit_interval() {
        let m = map_from(vec![0.0, 10.0], 1, 2);
        let n = normalize_map(&m);
        assert_eq!(n.values, vec![0.0, 1.0]);
    }

    #[test]
    fn normalize_constant_map_is_all_zeros() {
        let m = map_from(vec![7.25; 9], 3, 3);
        let n = normalize_map(&m);
        assert!(n.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normalize_is_invariant_under_positive_affine_transform() {
        for seed in 0..100u64 {
            let t = Tensor::seeded_random(1, 8, 8, seed);
            let m = map_from(t.data().to_vec(), 8, 8);
            let shifted = map_from(m.values.iter().map(|&v| 3.0 * v + 7.0).collect(), 8, 8);
            let n1 = normalize_map(&m);
            let n2 = normalize_map(&shifted);
            for (a, b) in n1.values.iter().zip(n2.values.iter()) {
                // f32 rounding of the affine input leaves sub-1e-5 residue.
                assert!((a - b).abs() < 1e-5, "seed {seed}: {a} vs {b}");
                assert!((0.0..=1.0).contains(a));
            }
        }
    }
}
