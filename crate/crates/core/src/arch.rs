//! Built-in architectures and worker presets used by the CLI and tests.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::profiles::{
    synthesize_profile, ConvGeometry, CostProfile, FeatureMap, LayerKind, LayerSpec, ModelSpec,
    Worker, WorkerSpec,
};

/// CIFAR-10 image, 32x32x3 bytes.
pub const CIFAR_SAMPLE_BYTES: u64 = 32 * 32 * 3;
/// tiny-ImageNet image, 64x64x3 bytes.
pub const TINY_IMAGENET_SAMPLE_BYTES: u64 = 64 * 64 * 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    T3,
    LeNet5,
    AlexNet,
}

impl Arch {
    pub const KNOWN: [&'static str; 3] = ["t3", "lenet5", "alexnet"];

    pub fn model(self) -> ModelSpec {
        match self {
            Arch::T3 => t3(),
            Arch::LeNet5 => lenet5(),
            Arch::AlexNet => alexnet(),
        }
    }

    pub fn workers(self) -> [WorkerSpec; 3] {
        match self {
            Arch::T3 => t3_workers(),
            Arch::LeNet5 | Arch::AlexNet => hierarchy_workers(),
        }
    }

    pub fn profile(self) -> CostProfile {
        synthesize_profile(&self.model(), &self.workers()).expect("built-in architecture is valid")
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arch::T3 => "t3",
            Arch::LeNet5 => "lenet5",
            Arch::AlexNet => "alexnet",
        })
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t3" => Ok(Arch::T3),
            "lenet5" | "lenet-5" | "lenet" => Ok(Arch::LeNet5),
            "alexnet" => Ok(Arch::AlexNet),
            other => Err(Error::invalid(
                "arch",
                format!("unknown architecture `{other}`; known: {}", Arch::KNOWN.join(", ")),
            )),
        }
    }
}

/// Three-layer test model with hand-checkable numbers.
pub fn t3() -> ModelSpec {
    let flops = [2e6, 4e6, 8e6];
    let params = [1000, 2000, 8000];
    let outputs = [1024, 512, 10];
    let inputs = [CIFAR_SAMPLE_BYTES / 4, 1024, 512];
    let kinds = [LayerKind::Conv, LayerKind::Dense, LayerKind::Dense];
    let layers = (0..3)
        .map(|i| LayerSpec {
            index: i + 1,
            kind: kinds[i],
            input_elems: inputs[i],
            output_elems: outputs[i],
            flops_forward: flops[i],
            param_count: params[i],
        })
        .collect();
    ModelSpec::new("t3", CIFAR_SAMPLE_BYTES, layers).expect("t3 is valid")
}

pub fn t3_workers() -> [WorkerSpec; 3] {
    [
        WorkerSpec::new(Worker::Device, 1e9, 1e9),
        WorkerSpec::new(Worker::Edge, 2e9, 2e9),
        WorkerSpec::new(Worker::Cloud, 2e10, 2e10),
    ]
}

pub fn t3_profile() -> CostProfile {
    Arch::T3.profile()
}

/// Device / edge / cloud rates with the cloud one order of magnitude above
/// the edge.
pub fn hierarchy_workers() -> [WorkerSpec; 3] {
    [
        WorkerSpec::new(Worker::Device, 2e10, 2e10),
        WorkerSpec::new(Worker::Edge, 4e10, 4e10),
        WorkerSpec::new(Worker::Cloud, 4e11, 4e11),
    ]
}

/// LeNet-5 on 32x32x3 inputs: C1, S2, C3, S4, F5, F6, output.
pub fn lenet5() -> ModelSpec {
    let input = FeatureMap::new(32, 32, 3);
    let (c1, m) = LayerSpec::conv(1, input, ConvGeometry::new(5, 6, 1, 0));
    let (s2, m) = LayerSpec::pool(2, m, 2, 2);
    let (c3, m) = LayerSpec::conv(3, m, ConvGeometry::new(5, 16, 1, 0));
    let (s4, m) = LayerSpec::pool(4, m, 2, 2);
    let layers = vec![
        c1,
        s2,
        c3,
        s4,
        LayerSpec::dense(5, m.elems(), 120),
        LayerSpec::dense(6, 120, 84),
        LayerSpec::dense(7, 84, 10),
    ];
    ModelSpec::new("lenet5", CIFAR_SAMPLE_BYTES, layers).expect("lenet5 is valid")
}

/// AlexNet as its 8 trainable layers on 227x227x3 inputs. Each max-pool is
/// folded into the convolution before it, so a layer's output is the pooled
/// map. The device ships raw tiny-ImageNet samples; rescaling to the input
/// geometry happens on the receiving worker.
pub fn alexnet() -> ModelSpec {
    let input = FeatureMap::new(227, 227, 3);
    let (c1, m) = LayerSpec::conv(1, input, ConvGeometry::new(11, 96, 4, 0));
    let (c1, m) = c1.with_pool(m, 3, 2);
    let (c2, m) = LayerSpec::conv(2, m, ConvGeometry::new(5, 256, 1, 2).grouped(2));
    let (c2, m) = c2.with_pool(m, 3, 2);
    let (c3, m) = LayerSpec::conv(3, m, ConvGeometry::new(3, 384, 1, 1));
    let (c4, m) = LayerSpec::conv(4, m, ConvGeometry::new(3, 384, 1, 1).grouped(2));
    let (c5, m) = LayerSpec::conv(5, m, ConvGeometry::new(3, 256, 1, 1).grouped(2));
    let (c5, m) = c5.with_pool(m, 3, 2);
    let layers = vec![
        c1,
        c2,
        c3,
        c4,
        c5,
        LayerSpec::dense(6, m.elems(), 4096),
        LayerSpec::dense(7, 4096, 4096),
        LayerSpec::dense(8, 4096, 1000),
    ];
    ModelSpec::new("alexnet", TINY_IMAGENET_SAMPLE_BYTES, layers).expect("alexnet is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::output_bytes;

    #[test]
    fn lenet5_conv1_output_is_18816_bytes() {
        let m = lenet5();
        assert_eq!(m.n_layers(), 7);
        assert_eq!(output_bytes(&m.layers[0]), 18816);
        assert_eq!(m.layers[4].input_elems, 400);
    }

    #[test]
    fn alexnet_has_eight_layers_and_about_61m_params() {
        let m = alexnet();
        assert_eq!(m.n_layers(), 8);
        // 34944 + 307456 + 885120 + 663936 + 442624 + 37752832 + 16781312 + 4097000
        assert_eq!(m.total_params(), 60_965_224);
        assert_eq!(m.layers[5].input_elems, 9216);
    }

    #[test]
    fn unknown_arch_lists_known_names() {
        let err = "vgg".parse::<Arch>().unwrap_err().to_string();
        for name in Arch::KNOWN {
            assert!(err.contains(name), "{err}");
        }
    }
}
