//! Scenario configs, the bandwidth / edge-scale grid, and result rows.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::arch::Arch;
use crate::error::{Error, Result};
use crate::format::sig9;
use crate::latency::Policy;
use crate::profiles::{load_profile, CostProfile, NetworkSpec, Worker};
use crate::scheduler::{
    baseline_all_on, baseline_compressed_split, baseline_jointdnn, baseline_jointdnn_plus, baseline_two_tier,
    optimize, InnerSolver, Schedule, DEFAULT_BATCH,
};
use crate::simulator::simulate_iteration;

pub const RESULT_HEADER: [&str; 15] = [
    "method",
    "bw_de",
    "bw_ec",
    "edge_scale",
    "B",
    "mapping",
    "m_s",
    "m_l",
    "b_o",
    "b_s",
    "b_l",
    "t_total_model",
    "t_total_sim",
    "speedup_vs_all_cloud",
    "speedup_vs_all_edge",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Hiertrain,
    AllEdge,
    AllCloud,
    AllDevice,
    Jointdnn,
    JointdnnPlus,
    Jalad,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Hiertrain,
        Method::AllEdge,
        Method::AllCloud,
        Method::AllDevice,
        Method::Jointdnn,
        Method::JointdnnPlus,
        Method::Jalad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Hiertrain => "hiertrain",
            Method::AllEdge => "all_edge",
            Method::AllCloud => "all_cloud",
            Method::AllDevice => "all_device",
            Method::Jointdnn => "jointdnn",
            Method::JointdnnPlus => "jointdnn_plus",
            Method::Jalad => "jalad",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let known: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
            Error::invalid("methods", format!("unknown method `{s}`; known: {}", known.join(", ")))
        })
    }
}

/// Edge-cloud bandwidths 1.5, 2.0, ..., 5.0 Mbps.
pub fn default_bw_edge_cloud() -> Vec<f64> {
    (3..=10).map(|k| k as f64 * 0.5e6).collect()
}

pub fn default_bw_device_edge() -> Vec<f64> {
    vec![5e6]
}

fn scalar_or_list<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_batch() -> usize {
    DEFAULT_BATCH
}

fn default_c_bits() -> u32 {
    8
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Profile file; exclusive with `arch`.
    #[serde(default)]
    pub profile: Option<PathBuf>,
    #[serde(default)]
    pub arch: Option<String>,
    #[serde(default = "default_bw_device_edge", deserialize_with = "scalar_or_list")]
    pub bw_device_edge: Vec<f64>,
    #[serde(default = "default_bw_edge_cloud", deserialize_with = "scalar_or_list")]
    pub bw_edge_cloud: Vec<f64>,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_c_bits")]
    pub jalad_c_bits: u32,
    #[serde(default)]
    pub inner_solver: InnerSolver,
    /// Edge compute multipliers; `None` means `[1.0]`.
    #[serde(default)]
    pub edge_core_scale: Option<Vec<f64>>,
    /// Replay hybrid policies in the simulator to fill `t_total_sim`.
    #[serde(default = "default_true")]
    pub simulate: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            profile: None,
            arch: None,
            bw_device_edge: default_bw_device_edge(),
            bw_edge_cloud: default_bw_edge_cloud(),
            batch: DEFAULT_BATCH,
            methods: default_methods(),
            jalad_c_bits: default_c_bits(),
            inner_solver: InnerSolver::Exact,
            edge_core_scale: None,
            simulate: true,
        }
    }
}

impl ScenarioConfig {
    pub fn for_arch(arch: Arch) -> Self {
        Self { arch: Some(arch.to_string()), ..Self::default() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        Ok(config)
    }

    pub fn edge_scales(&self) -> Vec<f64> {
        self.edge_core_scale.clone().unwrap_or_else(|| vec![1.0])
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.profile, &self.arch) {
            (Some(_), Some(_)) => return Err(Error::invalid("profile", "give either profile or arch, not both")),
            (None, None) => return Err(Error::invalid("profile", "one of profile or arch is required")),
            (None, Some(a)) => {
                a.parse::<Arch>()?;
            }
            (Some(_), None) => {}
        }
        for (field, list) in [("bw_device_edge", &self.bw_device_edge), ("bw_edge_cloud", &self.bw_edge_cloud)] {
            if list.is_empty() {
                return Err(Error::invalid(field, "sweep list must be nonempty"));
            }
            if let Some(bad) = list.iter().find(|&&b| !(b > 0.0 && b.is_finite())) {
                return Err(Error::invalid(field, format!("bandwidth must be > 0, got {bad}")));
            }
        }
        if self.batch == 0 {
            return Err(Error::invalid("batch", "must be >= 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("methods", "must name at least one method"));
        }
        if !(1..=32).contains(&self.jalad_c_bits) {
            return Err(Error::invalid("jalad_c_bits", format!("must be in 1..=32, got {}", self.jalad_c_bits)));
        }
        if let Some(scales) = &self.edge_core_scale {
            if scales.is_empty() {
                return Err(Error::invalid("edge_core_scale", "sweep list must be nonempty"));
            }
            if let Some(bad) = scales.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
                return Err(Error::invalid("edge_core_scale", format!("multiplier must be > 0, got {bad}")));
            }
        }
        Ok(())
    }

    pub fn load_profile(&self) -> Result<CostProfile> {
        match (&self.profile, &self.arch) {
            (Some(path), None) => load_profile(path),
            (None, Some(arch)) => Ok(arch.parse::<Arch>()?.profile()),
            _ => {
                self.validate()?;
                unreachable!("validate rejects every other combination")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub bw_de: f64,
    pub bw_ec: f64,
    pub edge_scale: f64,
    pub batch: usize,
    pub mapping: String,
    pub m_s: usize,
    pub m_l: usize,
    pub b_o: usize,
    pub b_s: usize,
    pub b_l: usize,
    pub t_total_model: f64,
    pub t_total_sim: Option<f64>,
    pub speedup_vs_all_cloud: f64,
    pub speedup_vs_all_edge: f64,
}

impl ResultRow {
    pub fn fields(&self) -> Vec<String> {
        vec![
            self.method.name().to_string(),
            sig9(self.bw_de),
            sig9(self.bw_ec),
            sig9(self.edge_scale),
            self.batch.to_string(),
            self.mapping.clone(),
            self.m_s.to_string(),
            self.m_l.to_string(),
            self.b_o.to_string(),
            self.b_s.to_string(),
            self.b_l.to_string(),
            sig9(self.t_total_model),
            self.t_total_sim.map_or(String::new(), sig9),
            sig9(self.speedup_vs_all_cloud),
            sig9(self.speedup_vs_all_edge),
        ]
    }

    /// Relative model/simulation gap, when simulated.
    pub fn sim_discrepancy(&self) -> Option<f64> {
        self.t_total_sim.map(|s| (s - self.t_total_model).abs() / self.t_total_model)
    }
}

pub fn write_rows_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_HEADER).map_err(csv_error)?;
    for row in rows {
        w.write_record(row.fields()).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid("csv", format!("{other:?}")),
    }
}

/// One method's decision and modeled time at a grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodOutcome {
    pub method: Method,
    pub schedule: Schedule,
    pub time: f64,
}

/// Runs `method` on one scenario point.
pub fn run_method(
    method: Method,
    profile: &CostProfile,
    net: &NetworkSpec,
    batch: usize,
    config: &ScenarioConfig,
) -> Result<MethodOutcome> {
    let hybrid = |(p, t): (Policy, f64)| (Schedule::Hybrid(p), t);
    let (schedule, time) = match method {
        Method::Hiertrain => {
            let r = optimize(profile, net, batch, config.inner_solver)?;
            (Schedule::Hybrid(r.best), r.best_time)
        }
        Method::AllEdge => hybrid(baseline_all_on(Worker::Edge, profile, net, batch)?),
        Method::AllCloud => hybrid(baseline_all_on(Worker::Cloud, profile, net, batch)?),
        Method::AllDevice => hybrid(baseline_all_on(Worker::Device, profile, net, batch)?),
        Method::Jointdnn => hybrid(baseline_jointdnn(profile, net, batch)?),
        Method::JointdnnPlus => baseline_jointdnn_plus(profile, net, batch)?,
        Method::Jalad => baseline_compressed_split(profile, net, batch, config.jalad_c_bits)?,
    };
    Ok(MethodOutcome { method, schedule, time })
}

/// Uncompressed edge/cloud split, the reference JALAD is compared against.
pub fn edge_cloud_split(profile: &CostProfile, net: &NetworkSpec, batch: usize) -> Result<f64> {
    Ok(baseline_two_tier(Worker::Edge, Worker::Cloud, profile, net, batch)?.1)
}

fn row_for(
    outcome: &MethodOutcome,
    profile: &CostProfile,
    net: &NetworkSpec,
    edge_scale: f64,
    batch: usize,
    baselines: (f64, f64),
    simulate: bool,
) -> Result<ResultRow> {
    let (mapping, m_s, m_l, b_o, b_s, b_l) = match outcome.schedule {
        Schedule::Hybrid(p) | Schedule::Compressed { policy: p, .. } => {
            (p.mapping.to_string(), p.m_s, p.m_l, p.b_o, p.b_s, p.b_l)
        }
        Schedule::Chain { k1, k2, batch } => ("chain=device>edge>cloud".to_string(), k1, k2, batch, 0, 0),
    };
    let t_total_sim = match (simulate, outcome.schedule) {
        (true, Schedule::Hybrid(p)) => Some(simulate_iteration(&p, profile, net)?.makespan),
        _ => None,
    };
    Ok(ResultRow {
        method: outcome.method,
        bw_de: net.bw_device_edge,
        bw_ec: net.bw_edge_cloud,
        edge_scale,
        batch,
        mapping,
        m_s,
        m_l,
        b_o,
        b_s,
        b_l,
        t_total_model: outcome.time,
        t_total_sim,
        speedup_vs_all_cloud: baselines.0 / outcome.time,
        speedup_vs_all_edge: baselines.1 / outcome.time,
    })
}

/// Evaluates every method at every (bw_de, bw_ec, edge_scale) point. Rows are
/// ordered by method (config order), then bw_de, bw_ec and edge_scale.
pub fn run_grid(config: &ScenarioConfig, profile: &CostProfile) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let mut points = Vec::new();
    for &de in &config.bw_device_edge {
        for &ec in &config.bw_edge_cloud {
            for &scale in &config.edge_scales() {
                points.push((de, ec, scale));
            }
        }
    }
    let batch = config.batch;
    let per_point: Vec<Vec<ResultRow>> = points
        .par_iter()
        .map(|&(de, ec, scale)| {
            let net = NetworkSpec::new(de, ec)?;
            let profile = profile.with_compute_speedup(Worker::Edge, scale)?;
            let cloud = baseline_all_on(Worker::Cloud, &profile, &net, batch)?.1;
            let edge = baseline_all_on(Worker::Edge, &profile, &net, batch)?.1;
            config
                .methods
                .iter()
                .map(|&m| {
                    let outcome = run_method(m, &profile, &net, batch, config)?;
                    row_for(&outcome, &profile, &net, scale, batch, (cloud, edge), config.simulate)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(points.len() * config.methods.len());
    for k in 0..config.methods.len() {
        rows.extend(per_point.iter().map(|r| r[k].clone()));
    }
    Ok(rows)
}
