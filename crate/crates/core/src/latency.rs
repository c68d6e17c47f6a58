//! Closed-form per-iteration training time of a hybrid-parallel policy.
//!
//! Three roles share the work. `o` trains the whole chain on `b_o` samples,
//! `s` trains layers `1..=m_s` on `b_s` samples and `l` trains `1..=m_l` on
//! `b_l` samples, handing activations to `o` at the split and receiving the
//! intermediate gradient back. Forward and backward are each split into three
//! barrier-separated stages (layers `1..=m_s`, `m_s+1..=m_l`, `m_l+1..=N`);
//! the weight update is a compute max plus a gradient/weight exchange max.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::{CostProfile, NetworkSpec, Worker, ELEMENT_BYTES};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pass {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    O,
    S,
    L,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::O, Role::S, Role::L];

    pub fn name(self) -> &'static str {
        match self {
            Role::O => "o",
            Role::S => "s",
            Role::L => "l",
        }
    }
}

/// Seconds to move `data_bytes` over a link of `bandwidth` bits per second.
pub fn comm_time(data_bytes: f64, bandwidth: f64) -> Result<f64> {
    if !(bandwidth > 0.0) {
        return Err(Error::invalid("bandwidth", format!("must be > 0, got {bandwidth}")));
    }
    if !(data_bytes >= 0.0) {
        return Err(Error::invalid("data_bytes", format!("must be >= 0, got {data_bytes}")));
    }
    Ok(transfer_time(data_bytes, bandwidth))
}

/// Unchecked [`comm_time`]; an infinite bandwidth yields zero.
pub(crate) fn transfer_time(data_bytes: f64, bandwidth: f64) -> f64 {
    8.0 * data_bytes / bandwidth
}

/// Effective bandwidth between two workers. Device-cloud traffic crosses both
/// links and runs at the slower one; a worker talking to itself is free.
pub fn path_bandwidth(a: Worker, b: Worker, net: &NetworkSpec) -> f64 {
    use Worker::*;
    match (a, b) {
        _ if a == b => f64::INFINITY,
        (Device, Edge) | (Edge, Device) => net.bw_device_edge,
        (Edge, Cloud) | (Cloud, Edge) => net.bw_edge_cloud,
        (Device, Cloud) | (Cloud, Device) => net.bw_device_edge.min(net.bw_edge_cloud),
        _ => unreachable!(),
    }
}

/// `samples * sum(L_{worker,i})` over the 1-based inclusive range
/// `first..=last`. `first == last + 1` denotes an empty range.
pub fn compute_time(
    profile: &CostProfile,
    worker: Worker,
    first: usize,
    last: usize,
    samples: usize,
    pass: Pass,
) -> Result<f64> {
    let n = profile.n_layers();
    if first == 0 || last > n || first > last + 1 {
        return Err(Error::LayerRange { from: first, to: last, n_layers: n });
    }
    let times = profile.times(worker);
    let row = match pass {
        Pass::Forward => &times.forward,
        Pass::Backward => &times.backward,
    };
    Ok(samples as f64 * row[first - 1..last].iter().fold(0.0, |acc, t| acc + t))
}

/// Assignment of the three roles to physical workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoleMapping {
    pub o: Worker,
    pub s: Worker,
    pub l: Worker,
}

impl RoleMapping {
    /// The six permutations, lexicographic in (o, s, l) over
    /// (device, edge, cloud).
    pub const ALL: [RoleMapping; 6] = {
        use Worker::*;
        [
            RoleMapping { o: Device, s: Edge, l: Cloud },
            RoleMapping { o: Device, s: Cloud, l: Edge },
            RoleMapping { o: Edge, s: Device, l: Cloud },
            RoleMapping { o: Edge, s: Cloud, l: Device },
            RoleMapping { o: Cloud, s: Device, l: Edge },
            RoleMapping { o: Cloud, s: Edge, l: Device },
        ]
    };

    pub fn new(o: Worker, s: Worker, l: Worker) -> Result<Self> {
        let mapping = Self { o, s, l };
        mapping.validate()?;
        Ok(mapping)
    }

    /// First mapping (in [`RoleMapping::ALL`] order) with `o` as the full-model worker.
    pub fn with_o(o: Worker) -> Self {
        *Self::ALL.iter().find(|m| m.o == o).expect("every worker heads two mappings")
    }

    pub fn validate(&self) -> Result<()> {
        if self.o == self.s || self.o == self.l || self.s == self.l {
            return Err(Error::Policy(format!(
                "role mapping {self} is not a permutation of device, edge, cloud"
            )));
        }
        Ok(())
    }

    pub fn worker(&self, role: Role) -> Worker {
        match role {
            Role::O => self.o,
            Role::S => self.s,
            Role::L => self.l,
        }
    }

    pub fn role_of(&self, worker: Worker) -> Role {
        if worker == self.o {
            Role::O
        } else if worker == self.s {
            Role::S
        } else {
            Role::L
        }
    }
}

impl fmt::Display for RoleMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "o={};s={};l={}", self.o, self.s, self.l)
    }
}

impl FromStr for RoleMapping {
    type Err = Error;

    /// Parses `o=cloud;s=device;l=edge` (`,` also accepted as separator).
    fn from_str(text: &str) -> Result<Self> {
        let mut slots = [None; 3];
        for part in text.split([';', ',']).filter(|p| !p.trim().is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid("mapping", format!("expected role=worker, got `{part}`")))?;
            let slot = match key.trim() {
                "o" => 0,
                "s" => 1,
                "l" => 2,
                other => return Err(Error::invalid("mapping", format!("unknown role `{other}`"))),
            };
            slots[slot] = Some(value.parse::<Worker>()?);
        }
        match slots {
            [Some(o), Some(s), Some(l)] => RoleMapping::new(o, s, l),
            _ => Err(Error::invalid("mapping", "all of o, s and l must be given")),
        }
    }
}

/// A complete scheduling decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Policy {
    pub mapping: RoleMapping,
    pub m_s: usize,
    pub m_l: usize,
    pub b_o: usize,
    pub b_s: usize,
    pub b_l: usize,
}

impl Policy {
    /// Everything on `worker`, no helpers.
    pub fn single(worker: Worker, batch: usize) -> Self {
        Self { mapping: RoleMapping::with_o(worker), m_s: 0, m_l: 0, b_o: batch, b_s: 0, b_l: 0 }
    }

    pub fn batch(&self) -> usize {
        self.b_o + self.b_s + self.b_l
    }

    pub fn samples(&self, role: Role) -> usize {
        match role {
            Role::O => self.b_o,
            Role::S => self.b_s,
            Role::L => self.b_l,
        }
    }

    /// Number of leading layers the role trains.
    pub fn layers(&self, role: Role, n_layers: usize) -> usize {
        match role {
            Role::O => n_layers,
            Role::S => self.m_s,
            Role::L => self.m_l,
        }
    }

    pub fn validate(&self, n_layers: usize) -> Result<()> {
        self.mapping.validate()?;
        if self.m_s > self.m_l {
            return Err(Error::Policy(format!("m_s ({}) must not exceed m_l ({})", self.m_s, self.m_l)));
        }
        if self.m_l > n_layers {
            return Err(Error::Policy(format!("m_l ({}) exceeds the layer count N ({n_layers})", self.m_l)));
        }
        if self.batch() == 0 {
            return Err(Error::Policy("batch b_o + b_s + b_l must be >= 1".into()));
        }
        if self.m_s == 0 && self.b_s > 0 {
            return Err(Error::Policy(format!("b_s ({}) must be 0 when m_s = 0 (b_s <= m_s*B)", self.b_s)));
        }
        if self.m_l == 0 && self.b_l > 0 {
            return Err(Error::Policy(format!("b_l ({}) must be 0 when m_l = 0 (b_l <= m_l*B)", self.b_l)));
        }
        Ok(())
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} m_s={} m_l={} b=({}, {}, {})",
            self.mapping, self.m_s, self.m_l, self.b_o, self.b_s, self.b_l
        )
    }
}

/// Phase-by-phase modeled time of one iteration, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LatencyBreakdown {
    pub t_input_o: f64,
    pub t_input_s: f64,
    pub t_input_l: f64,
    pub t_fwd1: f64,
    pub t_fwd2: f64,
    pub t_fwd3: f64,
    pub t_bwd1: f64,
    pub t_bwd2: f64,
    pub t_bwd3: f64,
    pub t_update: f64,
    pub t_total: f64,
}

impl LatencyBreakdown {
    /// Sum of the phase terms in the fixed order fwd1..3, bwd1..3, update.
    pub fn phase_sum(&self) -> f64 {
        self.t_fwd1 + self.t_fwd2 + self.t_fwd3 + self.t_bwd1 + self.t_bwd2 + self.t_bwd3 + self.t_update
    }
}

/// Closed-form iteration time of `policy`.
pub fn total_time(policy: &Policy, profile: &CostProfile, net: &NetworkSpec) -> Result<LatencyBreakdown> {
    net.validate()?;
    policy.validate(profile.n_layers())?;
    Ok(LatencyModel::new(profile, net).evaluate(policy))
}

/// Weight-update phase time of `policy`.
pub fn update_phase_time(policy: &Policy, profile: &CostProfile, net: &NetworkSpec) -> Result<f64> {
    net.validate()?;
    policy.validate(profile.n_layers())?;
    Ok(LatencyModel::new(profile, net).split(policy.mapping, policy.m_s, policy.m_l).update)
}

const FWD: usize = 0;
const BWD: usize = 1;
const UPD: usize = 2;

/// Latency evaluator with precomputed layer-range sums.
///
/// Range sums are accumulated left to right, so every entry equals the naive
/// sum over the same layers bit for bit.
#[derive(Debug, Clone)]
pub struct LatencyModel<'a> {
    profile: &'a CostProfile,
    net: NetworkSpec,
    n: usize,
    /// `sums[worker][kind][lo * (n + 1) + hi]` = sum over layers `lo+1..=hi`.
    sums: [[Vec<f64>; 3]; 3],
    /// Prefix sums of parameter counts (exact integers).
    params_prefix: Vec<u64>,
    activation_scale: f64,
}

impl<'a> LatencyModel<'a> {
    pub fn new(profile: &'a CostProfile, net: &NetworkSpec) -> Self {
        let n = profile.n_layers();
        let sums = Worker::ALL.map(|w| {
            let t = profile.times(w);
            [&t.forward, &t.backward, &t.update].map(|row| range_sums(row))
        });
        let mut params_prefix = vec![0u64; n + 1];
        for (i, mp) in profile.param_counts().iter().enumerate() {
            params_prefix[i + 1] = params_prefix[i] + mp;
        }
        Self { profile, net: *net, n, sums, params_prefix, activation_scale: 1.0 }
    }

    /// Scales every activation handoff and intermediate-gradient transfer
    /// between a helper and `o` (weights and raw inputs are unaffected).
    pub fn with_activation_scale(mut self, scale: f64) -> Self {
        self.activation_scale = scale;
        self
    }

    pub fn profile(&self) -> &CostProfile {
        self.profile
    }

    pub fn net(&self) -> &NetworkSpec {
        &self.net
    }

    pub fn n_layers(&self) -> usize {
        self.n
    }

    /// Per-sample time of `worker` over layers `lo+1..=hi` (0 if empty).
    pub(crate) fn range(&self, worker: Worker, kind: usize, lo: usize, hi: usize) -> f64 {
        if hi <= lo {
            0.0
        } else {
            self.sums[worker.index()][kind][lo * (self.n + 1) + hi]
        }
    }

    pub fn forward_range(&self, worker: Worker, lo: usize, hi: usize) -> f64 {
        self.range(worker, FWD, lo, hi)
    }

    pub fn backward_range(&self, worker: Worker, lo: usize, hi: usize) -> f64 {
        self.range(worker, BWD, lo, hi)
    }

    pub fn update_range(&self, worker: Worker, lo: usize, hi: usize) -> f64 {
        self.range(worker, UPD, lo, hi)
    }

    /// Sum of MP_i over the first `m` layers.
    pub fn params_upto(&self, m: usize) -> u64 {
        self.params_prefix[m]
    }

    /// MO of layer `m` (0 for `m == 0`).
    pub fn output_bytes_at(&self, m: usize) -> u64 {
        if m == 0 {
            0
        } else {
            self.profile.output_bytes()[m - 1]
        }
    }

    /// Round-trip gradient push plus weight pull for the first `m` layers.
    pub fn weight_exchange_time(&self, m: usize, bandwidth: f64) -> f64 {
        if m == 0 {
            0.0
        } else {
            transfer_time(2.0 * (ELEMENT_BYTES * self.params_upto(m)) as f64, bandwidth)
        }
    }

    /// Allocation-independent costs for one (mapping, m_s, m_l) triple.
    pub fn split(&self, mapping: RoleMapping, m_s: usize, m_l: usize) -> SplitCosts {
        let n = self.n;
        let (o, s, l) = (mapping.o, mapping.s, mapping.l);
        let bw_os = path_bandwidth(o, s, &self.net);
        let bw_ol = path_bandwidth(o, l, &self.net);
        let update_compute = self
            .update_range(o, 0, n)
            .max(self.update_range(s, 0, m_s))
            .max(self.update_range(l, 0, m_l));
        let exchange = self.weight_exchange_time(m_s, bw_os).max(self.weight_exchange_time(m_l, bw_ol));
        let q = self.profile.sample_bytes() as f64;
        SplitCosts {
            sample_bytes: q,
            bw_in: [o, s, l].map(|w| path_bandwidth(Worker::Device, w, &self.net)),
            bw_os,
            bw_ol,
            handoff_s: self.output_bytes_at(m_s) as f64 * self.activation_scale,
            handoff_l: self.output_bytes_at(m_l) as f64 * self.activation_scale,
            fwd1: [self.range(o, FWD, 0, m_s), self.range(s, FWD, 0, m_s), self.range(l, FWD, 0, m_s)],
            fwd2: [self.range(o, FWD, m_s, m_l), self.range(l, FWD, m_s, m_l)],
            fwd3: self.range(o, FWD, m_l, n),
            bwd1: [self.range(o, BWD, 0, m_s), self.range(s, BWD, 0, m_s), self.range(l, BWD, 0, m_s)],
            bwd2: [self.range(o, BWD, m_s, m_l), self.range(l, BWD, m_s, m_l)],
            bwd3: self.range(o, BWD, m_l, n),
            update: update_compute + exchange,
        }
    }

    /// Unvalidated evaluation; callers check the policy first.
    pub fn evaluate(&self, policy: &Policy) -> LatencyBreakdown {
        self.split(policy.mapping, policy.m_s, policy.m_l).evaluate(policy.b_o, policy.b_s, policy.b_l)
    }
}

fn range_sums(row: &[f64]) -> Vec<f64> {
    let n = row.len();
    let mut table = vec![0.0; (n + 1) * (n + 1)];
    for lo in 0..n {
        let mut acc = 0.0;
        for hi in lo + 1..=n {
            acc += row[hi - 1];
            table[lo * (n + 1) + hi] = acc;
        }
    }
    table
}

/// Costs of a fixed (mapping, m_s, m_l); evaluating an allocation is O(1).
#[derive(Debug, Clone, Copy)]
pub struct SplitCosts {
    sample_bytes: f64,
    /// Device-to-role bandwidth for (o, s, l).
    bw_in: [f64; 3],
    bw_os: f64,
    bw_ol: f64,
    /// Bytes per sample crossing the s / l split.
    handoff_s: f64,
    handoff_l: f64,
    /// Per-sample range sums: stage 1 for (o, s, l), stage 2 for (o, l), stage 3 for o.
    fwd1: [f64; 3],
    fwd2: [f64; 2],
    fwd3: f64,
    bwd1: [f64; 3],
    bwd2: [f64; 2],
    bwd3: f64,
    update: f64,
}

impl SplitCosts {
    pub fn update_time(&self) -> f64 {
        self.update
    }

    pub fn evaluate(&self, b_o: usize, b_s: usize, b_l: usize) -> LatencyBreakdown {
        self.evaluate_real(b_o as f64, b_s as f64, b_l as f64)
    }

    pub fn total(&self, b_o: usize, b_s: usize, b_l: usize) -> f64 {
        self.evaluate(b_o, b_s, b_l).t_total
    }

    /// Same formula over fractional sample counts (continuous relaxation).
    pub fn evaluate_real(&self, bo: f64, bs: f64, bl: f64) -> LatencyBreakdown {
        let batch = bo + bs + bl;
        let t_input_o = transfer_time(bo * self.sample_bytes, self.bw_in[0]);
        let t_input_s = transfer_time(bs * self.sample_bytes, self.bw_in[1]);
        let t_input_l = transfer_time(bl * self.sample_bytes, self.bw_in[2]);
        // Activation handoff at the split; the intermediate gradient coming
        // back has the same size.
        let t_s_out = transfer_time(bs * self.handoff_s, self.bw_os);
        let t_l_out = transfer_time(bl * self.handoff_l, self.bw_ol);

        let t_fwd1 = (t_input_o + bo * self.fwd1[0])
            .max(t_input_s + bs * self.fwd1[1] + t_s_out)
            .max(t_input_l + bl * self.fwd1[2]);
        let t_fwd2 = ((bo + bs) * self.fwd2[0]).max(bl * self.fwd2[1] + t_l_out);
        let t_fwd3 = batch * self.fwd3;
        let t_bwd1 = (bo * self.bwd1[0]).max(bs * self.bwd1[1] + t_s_out).max(bl * self.bwd1[2]);
        let t_bwd2 = ((bo + bs) * self.bwd2[0]).max(bl * self.bwd2[1] + t_l_out);
        let t_bwd3 = batch * self.bwd3;

        let mut out = LatencyBreakdown {
            t_input_o,
            t_input_s,
            t_input_l,
            t_fwd1,
            t_fwd2,
            t_fwd3,
            t_bwd1,
            t_bwd2,
            t_bwd3,
            t_update: self.update,
            t_total: 0.0,
        };
        out.t_total = out.phase_sum();
        out
    }

}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch;

    fn net(de: f64, ec: f64) -> NetworkSpec {
        NetworkSpec::new(de, ec).unwrap()
    }

    #[test]
    fn comm_time_examples() {
        assert_eq!(comm_time(0.0, 5e6).unwrap(), 0.0);
        assert_eq!(comm_time(625.0, 5e6).unwrap(), 1e-3);
        let t = comm_time(4.0 * 2048.0, 3e6).unwrap();
        assert!((t - 8.0 * 4.0 * 2048.0 / 3e6).abs() < 1e-18);
        assert!((t - 0.021845333333333333).abs() < 1e-15);
        assert!(comm_time(10.0, 0.0).is_err());
        assert!(comm_time(10.0, -3.0).is_err());
    }

    #[test]
    fn path_bandwidth_rules() {
        let n = net(5e6, 3e6);
        assert_eq!(path_bandwidth(Worker::Device, Worker::Edge, &n), 5e6);
        assert_eq!(path_bandwidth(Worker::Cloud, Worker::Edge, &n), 3e6);
        assert_eq!(path_bandwidth(Worker::Device, Worker::Cloud, &n), 3e6);
        let same = path_bandwidth(Worker::Edge, Worker::Edge, &n);
        assert_eq!(transfer_time(1e9, same), 0.0);
    }

    #[test]
    fn compute_time_examples() {
        let p = arch::t3_profile();
        assert_eq!(compute_time(&p, Worker::Edge, 1, 3, 0, Pass::Forward).unwrap(), 0.0);
        assert_eq!(
            compute_time(&p, Worker::Cloud, 2, 2, 1, Pass::Backward).unwrap(),
            p.backward_time(Worker::Cloud, 2)
        );
        let t = compute_time(&p, Worker::Device, 1, 3, 4, Pass::Forward).unwrap();
        assert!((t - 0.056).abs() < 1e-15);
        // empty range
        assert_eq!(compute_time(&p, Worker::Device, 3, 2, 4, Pass::Forward).unwrap(), 0.0);
        assert!(compute_time(&p, Worker::Device, 1, 4, 1, Pass::Forward).is_err());
        assert!(compute_time(&p, Worker::Device, 0, 1, 1, Pass::Forward).is_err());
    }

    #[test]
    fn range_sums_match_naive_sums_bitwise() {
        let p = arch::Arch::AlexNet.profile();
        let model = LatencyModel::new(&p, &net(5e6, 3e6));
        let n = p.n_layers();
        for w in Worker::ALL {
            for lo in 0..=n {
                for hi in lo + 1..=n {
                    let naive: f64 = p.times(w).forward[lo..hi].iter().sum();
                    assert_eq!(model.forward_range(w, lo, hi).to_bits(), naive.to_bits());
                }
            }
        }
    }

    fn golden_policy() -> Policy {
        Policy {
            mapping: RoleMapping::new(Worker::Cloud, Worker::Device, Worker::Edge).unwrap(),
            m_s: 1,
            m_l: 2,
            b_o: 4,
            b_s: 2,
            b_l: 2,
        }
    }

    #[test]
    fn golden_breakdown() {
        let p = arch::t3_profile();
        let b = total_time(&golden_policy(), &p, &net(5e6, 3e6)).unwrap();
        let close = |a: f64, e: f64| assert!((a - e).abs() <= 1e-12 * e.abs().max(1e-12), "{a} vs {e}");
        close(b.t_input_o, 0.032768);
        assert_eq!(b.t_input_s, 0.0);
        close(b.t_input_l, 0.0098304);
        close(b.t_fwd1, 0.033168);
        close(b.t_fwd2, 0.014922666666666667);
        close(b.t_fwd3, 0.0032);
        close(b.t_bwd1, 0.029845333333333335);
        close(b.t_bwd2, 0.018922666666666667);
        close(b.t_bwd3, 0.0064);
        close(b.t_update, 0.0640015);
        close(b.t_total, 0.17046016666666666);
        assert_eq!(b.t_total.to_bits(), b.phase_sum().to_bits());
        let u = update_phase_time(&golden_policy(), &p, &net(5e6, 3e6)).unwrap();
        assert_eq!(u, b.t_update);
    }

    #[test]
    fn total_time_rejects_bad_inputs() {
        let p = arch::t3_profile();
        let bad_net = NetworkSpec { bw_device_edge: 0.0, bw_edge_cloud: 1.0 };
        assert!(total_time(&golden_policy(), &p, &bad_net).is_err());
        let bad = Policy { m_l: 4, ..golden_policy() };
        assert!(total_time(&bad, &p, &net(5e6, 3e6)).is_err());
    }

    #[test]
    fn mapping_order_and_parse() {
        assert_eq!(RoleMapping::ALL[0].to_string(), "o=device;s=edge;l=cloud");
        assert_eq!(RoleMapping::ALL[5].to_string(), "o=cloud;s=edge;l=device");
        for m in RoleMapping::ALL {
            assert_eq!(m.to_string().parse::<RoleMapping>().unwrap(), m);
        }
        assert!("o=cloud;s=cloud;l=edge".parse::<RoleMapping>().is_err());
        assert!("o=cloud;s=edge".parse::<RoleMapping>().is_err());
    }

    #[test]
    fn policy_validation_names_constraint() {
        let p = Policy { mapping: RoleMapping::ALL[0], m_s: 2, m_l: 1, b_o: 1, b_s: 0, b_l: 0 };
        assert!(p.validate(3).unwrap_err().to_string().contains("m_s"));
        let p = Policy { m_s: 0, m_l: 4, ..p };
        assert!(p.validate(3).unwrap_err().to_string().contains("N"));
        let p = Policy { m_s: 0, m_l: 1, b_s: 1, ..p };
        assert!(p.validate(3).unwrap_err().to_string().contains("b_s"));
        let p = Policy { m_s: 0, m_l: 0, b_s: 0, b_l: 2, ..p };
        assert!(p.validate(3).unwrap_err().to_string().contains("b_l"));
        let p = Policy { b_o: 0, b_l: 0, ..p };
        assert!(p.validate(3).is_err());
    }
}
