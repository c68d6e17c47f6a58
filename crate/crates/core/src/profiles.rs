//! Cost profiles: per-layer, per-worker timing tables plus the model and
//! network descriptions every other module consumes.
//!
//! Times are seconds. Forward and backward times are per sample; update
//! times are per layer and independent of the batch. Sizes are bytes.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of one activation, gradient or weight element on the wire.
pub const ELEMENT_BYTES: u64 = 4;

/// Backward pass cost relative to forward when profiles are synthesized.
pub const BACKWARD_FACTOR: f64 = 2.0;

/// Physical worker in the device-edge-cloud hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Worker {
    Device,
    Edge,
    Cloud,
}

impl Worker {
    pub const ALL: [Worker; 3] = [Worker::Device, Worker::Edge, Worker::Cloud];

    pub fn index(self) -> usize {
        match self {
            Worker::Device => 0,
            Worker::Edge => 1,
            Worker::Cloud => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Worker::Device => "device",
            Worker::Edge => "edge",
            Worker::Cloud => "cloud",
        }
    }
}

impl fmt::Display for Worker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Worker {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "device" | "d" => Ok(Worker::Device),
            "edge" | "e" => Ok(Worker::Edge),
            "cloud" | "c" => Ok(Worker::Cloud),
            other => Err(Error::invalid(
                "worker",
                format!("unknown worker `{other}` (expected device, edge or cloud)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    Dense,
    Pool,
    Activation,
}

impl LayerKind {
    pub fn has_params(self) -> bool {
        matches!(self, LayerKind::Conv | LayerKind::Dense)
    }
}

/// Spatial feature map `height x width x channels`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureMap {
    pub height: u64,
    pub width: u64,
    pub channels: u64,
}

impl FeatureMap {
    pub fn new(height: u64, width: u64, channels: u64) -> Self {
        Self { height, width, channels }
    }

    pub fn elems(&self) -> u64 {
        self.height * self.width * self.channels
    }
}

/// Geometry of a 2-D convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub kernel: (u64, u64),
    pub out_channels: u64,
    pub stride: u64,
    pub padding: u64,
    /// Channel groups; 1 for an ordinary convolution.
    pub groups: u64,
}

impl ConvGeometry {
    pub fn new(kernel: u64, out_channels: u64, stride: u64, padding: u64) -> Self {
        Self { kernel: (kernel, kernel), out_channels, stride, padding, groups: 1 }
    }

    pub fn grouped(mut self, groups: u64) -> Self {
        self.groups = groups;
        self
    }

    pub fn output(&self, input: FeatureMap) -> FeatureMap {
        let (kh, kw) = self.kernel;
        FeatureMap {
            height: (input.height + 2 * self.padding - kh) / self.stride + 1,
            width: (input.width + 2 * self.padding - kw) / self.stride + 1,
            channels: self.out_channels,
        }
    }
}

/// Parameters of a dense layer: weights plus one bias per output.
pub fn dense_param_count(fan_in: u64, fan_out: u64) -> u64 {
    (fan_in + 1) * fan_out
}

/// Parameters of a convolution with `c_in` input channels seen by each filter.
pub fn conv_param_count(kernel_h: u64, kernel_w: u64, c_in: u64, c_out: u64) -> u64 {
    (kernel_h * kernel_w * c_in + 1) * c_out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    /// 1-based position in the chain.
    pub index: usize,
    pub kind: LayerKind,
    pub input_elems: u64,
    pub output_elems: u64,
    /// Floating-point operations for one sample's forward pass.
    pub flops_forward: f64,
    pub param_count: u64,
}

impl LayerSpec {
    pub fn dense(index: usize, fan_in: u64, fan_out: u64) -> Self {
        Self {
            index,
            kind: LayerKind::Dense,
            input_elems: fan_in,
            output_elems: fan_out,
            flops_forward: 2.0 * fan_in as f64 * fan_out as f64,
            param_count: dense_param_count(fan_in, fan_out),
        }
    }

    /// Convolution layer; returns the spec and the output map.
    pub fn conv(index: usize, input: FeatureMap, geometry: ConvGeometry) -> (Self, FeatureMap) {
        let out = geometry.output(input);
        let (kh, kw) = geometry.kernel;
        let c_in = input.channels / geometry.groups;
        let macs = kh * kw * c_in * out.elems();
        let layer = Self {
            index,
            kind: LayerKind::Conv,
            input_elems: input.elems(),
            output_elems: out.elems(),
            flops_forward: 2.0 * macs as f64,
            param_count: conv_param_count(kh, kw, c_in, geometry.out_channels),
        };
        (layer, out)
    }

    /// Max/average pooling with a square window.
    pub fn pool(index: usize, input: FeatureMap, window: u64, stride: u64) -> (Self, FeatureMap) {
        let out = pooled(input, window, stride);
        let layer = Self {
            index,
            kind: LayerKind::Pool,
            input_elems: input.elems(),
            output_elems: out.elems(),
            flops_forward: (out.elems() * window * window) as f64,
            param_count: 0,
        };
        (layer, out)
    }

    pub fn activation(index: usize, elems: u64) -> Self {
        Self {
            index,
            kind: LayerKind::Activation,
            input_elems: elems,
            output_elems: elems,
            flops_forward: elems as f64,
            param_count: 0,
        }
    }

    /// Folds a trailing pooling stage into this layer: the output shrinks to
    /// the pooled map and the pooling work is charged to this layer.
    pub fn with_pool(mut self, map: FeatureMap, window: u64, stride: u64) -> (Self, FeatureMap) {
        let out = pooled(map, window, stride);
        self.output_elems = out.elems();
        self.flops_forward += (out.elems() * window * window) as f64;
        (self, out)
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str| format!("layers[{}].{name}", self.index);
        if self.index == 0 {
            return Err(Error::invalid("layers.index", "layer indices are 1-based"));
        }
        if !(self.flops_forward.is_finite() && self.flops_forward >= 0.0) {
            return Err(Error::invalid(field("flops_forward"), "must be finite and >= 0"));
        }
        match (self.kind.has_params(), self.param_count > 0) {
            (true, false) => Err(Error::invalid(
                field("param_count"),
                "conv and dense layers need at least one parameter",
            )),
            (false, true) => Err(Error::invalid(
                field("param_count"),
                "pool and activation layers have no parameters",
            )),
            _ => Ok(()),
        }
    }
}

fn pooled(input: FeatureMap, window: u64, stride: u64) -> FeatureMap {
    FeatureMap {
        height: (input.height - window) / stride + 1,
        width: (input.width - window) / stride + 1,
        channels: input.channels,
    }
}

/// MP_i: number of trainable parameters of a layer.
pub fn param_count(layer: &LayerSpec) -> u64 {
    layer.param_count
}

/// MO_i: bytes of forward output per sample.
pub fn output_bytes(layer: &LayerSpec) -> u64 {
    ELEMENT_BYTES * layer.output_elems
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    /// Q: bytes of one raw input sample as sent by the device.
    pub sample_bytes: u64,
    pub layers: Vec<LayerSpec>,
}

impl ModelSpec {
    pub fn new(name: impl Into<String>, sample_bytes: u64, layers: Vec<LayerSpec>) -> Result<Self> {
        let model = Self { name: name.into(), sample_bytes, layers };
        model.validate()?;
        Ok(model)
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn total_params(&self) -> u64 {
        self.layers.iter().map(param_count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::invalid("model.layers", "at least one layer is required"));
        }
        if self.sample_bytes == 0 {
            return Err(Error::invalid("model.sample_bytes", "must be > 0"));
        }
        for (pos, layer) in self.layers.iter().enumerate() {
            if layer.index != pos + 1 {
                return Err(Error::invalid(
                    "model.layers",
                    format!("layer at position {} has index {}; indices must be 1..N", pos + 1, layer.index),
                ));
            }
            layer.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkerSpec {
    pub id: Worker,
    /// Floating-point operations per second.
    pub compute_rate: f64,
    /// Parameter updates per second.
    pub update_rate: f64,
}

impl WorkerSpec {
    pub fn new(id: Worker, compute_rate: f64, update_rate: f64) -> Self {
        Self { id, compute_rate, update_rate }
    }
}

/// Bandwidths of the two physical links, in bits per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub bw_device_edge: f64,
    pub bw_edge_cloud: f64,
}

impl NetworkSpec {
    pub fn new(bw_device_edge: f64, bw_edge_cloud: f64) -> Result<Self> {
        let net = Self { bw_device_edge, bw_edge_cloud };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, bw) in [("bw_device_edge", self.bw_device_edge), ("bw_edge_cloud", self.bw_edge_cloud)] {
            if !(bw > 0.0) || bw.is_nan() {
                return Err(Error::invalid(name, format!("bandwidth must be > 0, got {bw}")));
            }
        }
        Ok(())
    }
}

/// Per-layer times of one worker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkerTimes {
    pub forward: Vec<f64>,
    pub backward: Vec<f64>,
    pub update: Vec<f64>,
}

/// Profiled (or synthesized) costs for one model on the three workers.
#[derive(Debug, Clone, PartialEq)]
pub struct CostProfile {
    model: ModelSpec,
    times: [WorkerTimes; 3],
    param_count: Vec<u64>,
    output_bytes: Vec<u64>,
}

impl CostProfile {
    /// `times` is indexed by [`Worker::index`].
    pub fn new(model: ModelSpec, times: [WorkerTimes; 3]) -> Result<Self> {
        model.validate()?;
        let n = model.n_layers();
        for worker in Worker::ALL {
            let t = &times[worker.index()];
            for (kind, row) in [("forward", &t.forward), ("backward", &t.backward), ("update", &t.update)] {
                let field = format!("times.{worker}.{kind}");
                if row.len() != n {
                    return Err(Error::Dimension { field, expected: n, found: row.len() });
                }
                if let Some(pos) = row.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::invalid(
                        format!("{field}[{pos}]"),
                        format!("time must be finite and >= 0, got {}", row[pos]),
                    ));
                }
            }
        }
        let param_count = model.layers.iter().map(param_count).collect();
        let output_bytes = model.layers.iter().map(output_bytes).collect();
        Ok(Self { model, times, param_count, output_bytes })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn n_layers(&self) -> usize {
        self.model.n_layers()
    }

    pub fn sample_bytes(&self) -> u64 {
        self.model.sample_bytes
    }

    pub fn times(&self, worker: Worker) -> &WorkerTimes {
        &self.times[worker.index()]
    }

    /// L^f for 1-based `layer`.
    pub fn forward_time(&self, worker: Worker, layer: usize) -> f64 {
        self.times(worker).forward[layer - 1]
    }

    pub fn backward_time(&self, worker: Worker, layer: usize) -> f64 {
        self.times(worker).backward[layer - 1]
    }

    pub fn update_time(&self, worker: Worker, layer: usize) -> f64 {
        self.times(worker).update[layer - 1]
    }

    /// MP_i per layer, 0-based.
    pub fn param_counts(&self) -> &[u64] {
        &self.param_count
    }

    /// MO_i per layer, 0-based.
    pub fn output_bytes(&self) -> &[u64] {
        &self.output_bytes
    }

    /// Copy of this profile with `worker`'s forward and backward times divided
    /// by `factor`, i.e. its compute rate multiplied by `factor`.
    pub fn with_compute_speedup(&self, worker: Worker, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::invalid("edge_core_scale", format!("multiplier must be > 0, got {factor}")));
        }
        let mut scaled = self.clone();
        let t = &mut scaled.times[worker.index()];
        for v in t.forward.iter_mut().chain(t.backward.iter_mut()) {
            *v /= factor;
        }
        Ok(scaled)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ProfileFile {
            model: self.model.clone(),
            times: Worker::ALL
                .iter()
                .map(|w| (w.name().to_string(), self.times[w.index()].clone()))
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProfileFile = serde_json::from_str(text)?;
        if file.times.len() != 3 {
            return Err(Error::Dimension { field: "times".into(), expected: 3, found: file.times.len() });
        }
        let mut slots: [Option<WorkerTimes>; 3] = [None, None, None];
        for (key, times) in file.times {
            let worker: Worker = key.parse().map_err(|_| {
                Error::invalid(format!("times.{key}"), "expected one of device, edge, cloud")
            })?;
            slots[worker.index()] = Some(times);
        }
        let [Some(d), Some(e), Some(c)] = slots else {
            return Err(Error::invalid("times", "each of device, edge, cloud must appear exactly once"));
        };
        CostProfile::new(file.model, [d, e, c])
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    model: ModelSpec,
    times: BTreeMap<String, WorkerTimes>,
}

/// Fills a cost profile from FLOP counts and worker rates.
pub fn synthesize_profile(model: &ModelSpec, workers: &[WorkerSpec]) -> Result<CostProfile> {
    let mut by_id: [Option<WorkerSpec>; 3] = [None, None, None];
    for spec in workers {
        let slot = &mut by_id[spec.id.index()];
        if slot.is_some() {
            return Err(Error::invalid("workers", format!("duplicate worker `{}`", spec.id)));
        }
        if !(spec.compute_rate > 0.0 && spec.compute_rate.is_finite()) {
            return Err(Error::invalid(format!("{}.compute_rate", spec.id), "must be > 0"));
        }
        if !(spec.update_rate > 0.0 && spec.update_rate.is_finite()) {
            return Err(Error::invalid(format!("{}.update_rate", spec.id), "must be > 0"));
        }
        *slot = Some(*spec);
    }
    let times = Worker::ALL.map(|w| {
        by_id[w.index()].map(|spec| {
            let forward: Vec<f64> =
                model.layers.iter().map(|l| l.flops_forward / spec.compute_rate).collect();
            WorkerTimes {
                backward: forward.iter().map(|f| BACKWARD_FACTOR * f).collect(),
                forward,
                update: model.layers.iter().map(|l| param_count(l) as f64 / spec.update_rate).collect(),
            }
        })
    });
    let [Some(d), Some(e), Some(c)] = times else {
        return Err(Error::invalid("workers", "device, edge and cloud must all be described"));
    };
    CostProfile::new(model.clone(), [d, e, c])
}

pub fn load_profile(path: impl AsRef<Path>) -> Result<CostProfile> {
    CostProfile::from_json(&std::fs::read_to_string(path)?)
}

pub fn save_profile(profile: &CostProfile, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, profile.to_json()?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch;

    #[test]
    fn param_counts_follow_layer_formulas() {
        assert_eq!(param_count(&LayerSpec::dense(1, 4, 3)), 15);
        let (pool, _) = LayerSpec::pool(2, FeatureMap::new(28, 28, 6), 2, 2);
        assert_eq!(param_count(&pool), 0);
        let (conv, out) = LayerSpec::conv(1, FeatureMap::new(32, 32, 3), ConvGeometry::new(5, 6, 1, 0));
        assert_eq!(param_count(&conv), 456);
        assert_eq!(out, FeatureMap::new(28, 28, 6));
    }

    #[test]
    fn output_bytes_uses_four_byte_elements() {
        let mut layer = LayerSpec::activation(1, 0);
        assert_eq!(output_bytes(&layer), 0);
        layer.output_elems = 1024;
        layer.input_elems = 1024;
        assert_eq!(output_bytes(&layer), 4096);
        let (conv1, _) = LayerSpec::conv(1, FeatureMap::new(32, 32, 3), ConvGeometry::new(5, 6, 1, 0));
        assert_eq!(output_bytes(&conv1), 18816);
    }

    #[test]
    fn synthesized_times_divide_flops_by_rate() {
        let model = ModelSpec::new("one", 16, vec![LayerSpec { flops_forward: 2e6, ..LayerSpec::dense(1, 4, 4) }]).unwrap();
        let workers = Worker::ALL.map(|w| WorkerSpec::new(w, 1e9, 1e9));
        let p = synthesize_profile(&model, &workers).unwrap();
        assert_eq!(p.forward_time(Worker::Device, 1), 2e-3);
        assert_eq!(p.backward_time(Worker::Device, 1), 4e-3);
        assert_eq!(p.times(Worker::Device), p.times(Worker::Cloud));
        assert_eq!(p.times(Worker::Edge), p.times(Worker::Cloud));
    }

    #[test]
    fn synthesis_rejects_zero_rate_and_missing_worker() {
        let model = arch::t3();
        let mut workers = arch::t3_workers();
        workers[1].compute_rate = 0.0;
        assert!(matches!(synthesize_profile(&model, &workers), Err(Error::Invalid { .. })));
        let workers = arch::t3_workers();
        assert!(synthesize_profile(&model, &workers[..2]).is_err());
    }

    #[test]
    fn model_validation_catches_bad_layers() {
        let mut layers = vec![LayerSpec::dense(1, 2, 2), LayerSpec::dense(3, 2, 2)];
        assert!(ModelSpec::new("gap", 8, layers.clone()).is_err());
        layers[1].index = 2;
        assert!(ModelSpec::new("ok", 8, layers.clone()).is_ok());
        assert!(ModelSpec::new("empty", 8, vec![]).is_err());
        assert!(ModelSpec::new("q", 0, layers.clone()).is_err());
        layers[0].param_count = 0;
        assert!(ModelSpec::new("noparams", 8, layers).is_err());
        let mut act = LayerSpec::activation(1, 4);
        act.param_count = 3;
        assert!(act.validate().is_err());
    }

    #[test]
    fn network_rejects_nonpositive_bandwidth() {
        assert!(NetworkSpec::new(5e6, 0.0).is_err());
        assert!(NetworkSpec::new(-1.0, 3e6).is_err());
        assert!(NetworkSpec::new(f64::NAN, 3e6).is_err());
        assert!(NetworkSpec::new(5e6, 3e6).is_ok());
    }

    #[test]
    fn speedup_scales_compute_only() {
        let p = arch::t3_profile();
        let fast = p.with_compute_speedup(Worker::Edge, 2.0).unwrap();
        assert_eq!(fast.forward_time(Worker::Edge, 2), p.forward_time(Worker::Edge, 2) / 2.0);
        assert_eq!(fast.update_time(Worker::Edge, 2), p.update_time(Worker::Edge, 2));
        assert_eq!(fast.times(Worker::Cloud), p.times(Worker::Cloud));
        assert!(p.with_compute_speedup(Worker::Edge, 0.0).is_err());
    }
}
