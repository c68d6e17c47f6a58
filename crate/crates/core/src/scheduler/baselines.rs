//! Comparison schedules: single-worker training, two-tier layer splits,
//! the device/edge/cloud layer chain, and a compressed edge-cloud split.
//!
//! All of them are costed by the same phase-barrier latency model as the
//! hybrid policies. Two-tier splits are P1 points: the front worker takes
//! the `l` role with `m_l = k` and every sample, the back worker is `o`.

use std::fmt;

use crate::error::{Error, Result};
use crate::latency::{transfer_time, LatencyModel, Policy, RoleMapping};
use crate::profiles::{CostProfile, NetworkSpec, Worker, ELEMENT_BYTES};

/// A baseline's decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// A point of the hybrid search space.
    Hybrid(Policy),
    /// Hybrid policy whose split transfers are quantized to `c_bits` bits.
    Compressed { policy: Policy, c_bits: u32 },
    /// Layers `1..=k1` on the device, `k1+1..=k2` on the edge, the rest on
    /// the cloud, every sample following the chain.
    Chain { k1: usize, k2: usize, batch: usize },
}

impl Schedule {
    pub fn policy(&self) -> Option<&Policy> {
        match self {
            Schedule::Hybrid(p) | Schedule::Compressed { policy: p, .. } => Some(p),
            Schedule::Chain { .. } => None,
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Hybrid(p) => write!(f, "{p}"),
            Schedule::Compressed { policy, c_bits } => write!(f, "{policy} c={c_bits}"),
            Schedule::Chain { k1, k2, batch } => write!(f, "chain device..{k1} edge..{k2} cloud B={batch}"),
        }
    }
}

fn check(net: &NetworkSpec, batch: usize) -> Result<()> {
    net.validate()?;
    if batch == 0 {
        return Err(Error::Policy("batch size must be >= 1".into()));
    }
    Ok(())
}

/// Every sample shipped to `worker`, which trains the whole model.
pub fn baseline_all_on(worker: Worker, profile: &CostProfile, net: &NetworkSpec, batch: usize) -> Result<(Policy, f64)> {
    check(net, batch)?;
    let policy = Policy::single(worker, batch);
    Ok((policy, LatencyModel::new(profile, net).evaluate(&policy).t_total))
}

/// Split at `k`: `front` runs layers `1..=k`, `back` the rest. `k = 0` and
/// `k = N` degenerate to single-worker training.
pub fn two_tier_policy(front: Worker, back: Worker, k: usize, n_layers: usize, batch: usize) -> Policy {
    if k == 0 {
        Policy::single(back, batch)
    } else if k >= n_layers {
        Policy::single(front, batch)
    } else {
        let third = Worker::ALL.into_iter().find(|w| *w != front && *w != back).expect("three workers");
        Policy {
            mapping: RoleMapping { o: back, s: third, l: front },
            m_s: 0,
            m_l: k,
            b_o: 0,
            b_s: 0,
            b_l: batch,
        }
    }
}

fn best_split(model: &LatencyModel<'_>, front: Worker, back: Worker, batch: usize) -> (Policy, f64) {
    let n = model.n_layers();
    let mut best: Option<(Policy, f64)> = None;
    for k in 0..=n {
        let policy = two_tier_policy(front, back, k, n, batch);
        let t = model.evaluate(&policy).t_total;
        if best.is_none_or(|(_, b)| t < b) {
            best = Some((policy, t));
        }
    }
    best.expect("k = 0 always exists")
}

/// Best single split between `front` and `back` (JointDNN when the pair is
/// (device, cloud)).
pub fn baseline_two_tier(
    front: Worker,
    back: Worker,
    profile: &CostProfile,
    net: &NetworkSpec,
    batch: usize,
) -> Result<(Policy, f64)> {
    check(net, batch)?;
    if front == back {
        return Err(Error::invalid("split_worker_pair", "front and back workers must differ"));
    }
    Ok(best_split(&LatencyModel::new(profile, net), front, back, batch))
}

pub fn baseline_jointdnn(profile: &CostProfile, net: &NetworkSpec, batch: usize) -> Result<(Policy, f64)> {
    baseline_two_tier(Worker::Device, Worker::Cloud, profile, net, batch)
}

/// Iteration time of the device -> edge -> cloud layer chain.
///
/// The last non-empty stage owns the loss and updates the full model, as
/// `o` does; every earlier stage pushes gradients for its own layers to it
/// and pulls weights back.
pub fn chain_time(model: &LatencyModel<'_>, k1: usize, k2: usize, batch: usize) -> f64 {
    let n = model.n_layers();
    let net = model.net();
    let b = batch as f64;
    let stages: Vec<(Worker, usize, usize)> = [(Worker::Device, 0, k1), (Worker::Edge, k1, k2), (Worker::Cloud, k2, n)]
        .into_iter()
        .filter(|(_, lo, hi)| hi > lo)
        .collect();
    let (first, _, _) = stages[0];
    let (last, _, _) = *stages.last().expect("k1 <= k2 <= N leaves a stage");
    let sample_bytes = model.profile().sample_bytes() as f64;

    let mut forward = transfer_time(b * sample_bytes, crate::latency::path_bandwidth(Worker::Device, first, net));
    let mut backward = 0.0;
    for (w, lo, hi) in &stages {
        forward += b * model.forward_range(*w, *lo, *hi);
        backward += b * model.backward_range(*w, *lo, *hi);
    }
    for pair in stages.windows(2) {
        let (from, _, hi) = pair[0];
        let (to, _, _) = pair[1];
        let handoff = transfer_time(b * model.output_bytes_at(hi) as f64, crate::latency::path_bandwidth(from, to, net));
        forward += handoff;
        backward += handoff;
    }
    let mut update = model.update_range(last, 0, n);
    let mut exchange: f64 = 0.0;
    for &(w, lo, hi) in &stages[..stages.len() - 1] {
        update = update.max(model.update_range(w, lo, hi));
        let params = model.params_upto(hi) - model.params_upto(lo);
        let bw = crate::latency::path_bandwidth(w, last, net);
        exchange = exchange.max(transfer_time(2.0 * (ELEMENT_BYTES * params) as f64, bw));
    }
    forward + backward + update + exchange
}

/// JointDNN extended to three tiers: the best of the three two-tier pairs and
/// every device/edge/cloud chain.
pub fn baseline_jointdnn_plus(profile: &CostProfile, net: &NetworkSpec, batch: usize) -> Result<(Schedule, f64)> {
    check(net, batch)?;
    let model = LatencyModel::new(profile, net);
    let mut best: Option<(Schedule, f64)> = None;
    let mut offer = |s: Schedule, t: f64| {
        if best.is_none_or(|(_, b)| t < b) {
            best = Some((s, t));
        }
    };
    for (front, back) in [(Worker::Device, Worker::Edge), (Worker::Device, Worker::Cloud), (Worker::Edge, Worker::Cloud)] {
        let (p, t) = best_split(&model, front, back, batch);
        offer(Schedule::Hybrid(p), t);
    }
    let n = model.n_layers();
    for k1 in 0..=n {
        for k2 in k1..=n {
            offer(Schedule::Chain { k1, k2, batch }, chain_time(&model, k1, k2, batch));
        }
    }
    Ok(best.expect("candidates exist"))
}

/// Edge/cloud split whose activation and gradient transfers across the split
/// are quantized to `c_bits` bits per element (JALAD).
pub fn baseline_compressed_split(
    profile: &CostProfile,
    net: &NetworkSpec,
    batch: usize,
    c_bits: u32,
) -> Result<(Schedule, f64)> {
    check(net, batch)?;
    if !(1..=32).contains(&c_bits) {
        return Err(Error::invalid("jalad_c_bits", format!("must be in 1..=32, got {c_bits}")));
    }
    let model = LatencyModel::new(profile, net).with_activation_scale(c_bits as f64 / 32.0);
    let (policy, t) = best_split(&model, Worker::Edge, Worker::Cloud, batch);
    Ok((Schedule::Compressed { policy, c_bits }, t))
}
