//! Discrete-event replay of one training iteration.
//!
//! Every stage is a set of independent lanes, one per role, each a sequence
//! of transfers and computations. A stage ends when its slowest lane ends and
//! the next stage starts there. Stages, in execution order: inputs plus
//! layers `1..=m_s` forward, `m_s+1..=m_l` forward, `m_l+1..=N` forward, then
//! the same three ranges backward in reverse, the gradient/weight exchange,
//! and the local weight updates.

use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::experiment::csv_error;
use crate::format::sig9;
use crate::latency::{path_bandwidth, transfer_time, LatencyModel, Policy};
use crate::profiles::{CostProfile, NetworkSpec, Worker, ELEMENT_BYTES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Transfer,
    Compute,
    Barrier,
}

/// Trace phase. Declaration order is the sort order of exported rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Input,
    Fwd1,
    Fwd2,
    Fwd3,
    Bwd1,
    Bwd2,
    Bwd3,
    GradPush,
    WeightPull,
    Update,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Input => "input",
            Phase::Fwd1 => "fwd1",
            Phase::Fwd2 => "fwd2",
            Phase::Fwd3 => "fwd3",
            Phase::Bwd1 => "bwd1",
            Phase::Bwd2 => "bwd2",
            Phase::Bwd3 => "bwd3",
            Phase::GradPush => "gradpush",
            Phase::WeightPull => "weightpull",
            Phase::Update => "update",
        }
    }

    /// Barrier-separated stage, in execution order.
    pub fn stage(self) -> usize {
        match self {
            Phase::Input | Phase::Fwd1 => 0,
            Phase::Fwd2 => 1,
            Phase::Fwd3 => 2,
            Phase::Bwd3 => 3,
            Phase::Bwd2 => 4,
            Phase::Bwd1 => 5,
            Phase::GradPush | Phase::WeightPull => 6,
            Phase::Update => 7,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub kind: EventKind,
    /// Sender of a transfer, or the worker running a computation. `None` for
    /// barriers, which involve every participant of the stage.
    pub src: Option<Worker>,
    pub dst: Option<Worker>,
    pub phase: Phase,
    pub start: f64,
    pub duration: f64,
    pub payload_bytes: u64,
    /// 1-based inclusive layer range.
    pub layers: Option<(usize, usize)>,
    pub samples: usize,
}

impl Event {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EventTrace {
    pub events: Vec<Event>,
    pub makespan: f64,
}

impl EventTrace {
    /// No event of a stage starts before every event of the previous
    /// non-empty stage has ended.
    pub fn barriers_hold(&self) -> bool {
        let mut last_end = [f64::NEG_INFINITY; 8];
        let mut first_start = [f64::INFINITY; 8];
        for e in self.events.iter().filter(|e| e.kind != EventKind::Barrier) {
            let s = e.phase.stage();
            last_end[s] = last_end[s].max(e.end());
            first_start[s] = first_start[s].min(e.start);
        }
        let mut done = 0.0f64;
        for s in 0..8 {
            if first_start[s] < done {
                return false;
            }
            done = done.max(last_end[s]);
        }
        true
    }

    pub fn bytes(&self, phase: Phase, src: Worker) -> u64 {
        self.events
            .iter()
            .filter(|e| e.phase == phase && e.src == Some(src) && e.kind == EventKind::Transfer)
            .map(|e| e.payload_bytes)
            .sum()
    }
}

struct Step {
    kind: EventKind,
    src: Worker,
    dst: Worker,
    phase: Phase,
    duration: f64,
    payload_bytes: u64,
    layers: Option<(usize, usize)>,
    samples: usize,
}

struct Replay<'a> {
    model: LatencyModel<'a>,
    clock: f64,
    events: Vec<Event>,
}

impl Replay<'_> {
    fn bandwidth(&self, a: Worker, b: Worker) -> f64 {
        path_bandwidth(a, b, self.model.net())
    }

    /// Transfer step, omitted when nothing moves or both ends coincide.
    fn transfer(&self, phase: Phase, src: Worker, dst: Worker, payload_bytes: u64, samples: usize, layers: Option<(usize, usize)>) -> Option<Step> {
        (payload_bytes > 0 && src != dst).then(|| Step {
            kind: EventKind::Transfer,
            src,
            dst,
            phase,
            duration: transfer_time(payload_bytes as f64, self.bandwidth(src, dst)),
            payload_bytes,
            layers,
            samples,
        })
    }

    /// Forward/backward compute over layers `lo+1..=hi` on `samples`.
    fn compute(&self, phase: Phase, worker: Worker, lo: usize, hi: usize, samples: usize, backward: bool) -> Option<Step> {
        (samples > 0 && hi > lo).then(|| {
            let per_sample = if backward {
                self.model.backward_range(worker, lo, hi)
            } else {
                self.model.forward_range(worker, lo, hi)
            };
            Step {
                kind: EventKind::Compute,
                src: worker,
                dst: worker,
                phase,
                duration: samples as f64 * per_sample,
                payload_bytes: 0,
                layers: Some((lo + 1, hi)),
                samples,
            }
        })
    }

    fn update(&self, worker: Worker, layers: usize) -> Option<Step> {
        (layers > 0).then(|| Step {
            kind: EventKind::Compute,
            src: worker,
            dst: worker,
            phase: Phase::Update,
            duration: self.model.update_range(worker, 0, layers),
            payload_bytes: 0,
            layers: Some((1, layers)),
            samples: 0,
        })
    }

    /// Runs the lanes from the current clock and advances it to the barrier.
    fn stage(&mut self, lanes: Vec<Vec<Option<Step>>>) {
        let start = self.clock;
        let mut end = start;
        let mut workers = Vec::new();
        let mut closing_phase = None;
        for lane in lanes {
            let mut t = start;
            for step in lane.into_iter().flatten() {
                for w in [step.src, step.dst] {
                    if !workers.contains(&w) {
                        workers.push(w);
                    }
                }
                closing_phase = Some(step.phase);
                self.events.push(Event {
                    kind: step.kind,
                    src: Some(step.src),
                    dst: Some(step.dst),
                    phase: step.phase,
                    start: t,
                    duration: step.duration,
                    payload_bytes: step.payload_bytes,
                    layers: step.layers,
                    samples: step.samples,
                });
                t += step.duration;
            }
            end = end.max(t);
        }
        if let (true, Some(phase)) = (workers.len() > 1, closing_phase) {
            self.events.push(Event {
                kind: EventKind::Barrier,
                src: None,
                dst: None,
                phase,
                start: end,
                duration: 0.0,
                payload_bytes: 0,
                layers: None,
                samples: 0,
            });
        }
        self.clock = end;
    }
}

/// Replays one iteration of `policy` and returns its event trace.
pub fn simulate_iteration(policy: &Policy, profile: &CostProfile, net: &NetworkSpec) -> Result<EventTrace> {
    net.validate()?;
    let n = profile.n_layers();
    policy.validate(n)?;
    let Policy { mapping, m_s, m_l, b_o, b_s, b_l } = *policy;
    let (o, s, l) = (mapping.o, mapping.s, mapping.l);
    let batch = policy.batch();
    let q = profile.sample_bytes();
    let mut sim = Replay { model: LatencyModel::new(profile, net), clock: 0.0, events: Vec::new() };
    let handoff_s = b_s as u64 * sim.model.output_bytes_at(m_s);
    let handoff_l = b_l as u64 * sim.model.output_bytes_at(m_l);
    let dev = Worker::Device;

    let lanes = vec![
        vec![
            sim.transfer(Phase::Input, dev, o, b_o as u64 * q, b_o, None),
            sim.compute(Phase::Fwd1, o, 0, m_s, b_o, false),
        ],
        vec![
            sim.transfer(Phase::Input, dev, s, b_s as u64 * q, b_s, None),
            sim.compute(Phase::Fwd1, s, 0, m_s, b_s, false),
            sim.transfer(Phase::Fwd1, s, o, handoff_s, b_s, Some((m_s, m_s))),
        ],
        vec![
            sim.transfer(Phase::Input, dev, l, b_l as u64 * q, b_l, None),
            sim.compute(Phase::Fwd1, l, 0, m_s, b_l, false),
        ],
    ];
    sim.stage(lanes);

    let lanes = vec![
        vec![sim.compute(Phase::Fwd2, o, m_s, m_l, b_o + b_s, false)],
        vec![
            sim.compute(Phase::Fwd2, l, m_s, m_l, b_l, false),
            sim.transfer(Phase::Fwd2, l, o, handoff_l, b_l, Some((m_l, m_l))),
        ],
    ];
    sim.stage(lanes);

    let lanes = vec![vec![sim.compute(Phase::Fwd3, o, m_l, n, batch, false)]];
    sim.stage(lanes);
    let lanes = vec![vec![sim.compute(Phase::Bwd3, o, m_l, n, batch, true)]];
    sim.stage(lanes);

    // Backward hands the gradient at layer m+1's input back to the helper.
    let lanes = vec![
        vec![sim.compute(Phase::Bwd2, o, m_s, m_l, b_o + b_s, true)],
        vec![
            sim.transfer(Phase::Bwd2, o, l, handoff_l, b_l, Some((m_l + 1, m_l + 1))),
            sim.compute(Phase::Bwd2, l, m_s, m_l, b_l, true),
        ],
    ];
    sim.stage(lanes);

    let lanes = vec![
        vec![sim.compute(Phase::Bwd1, o, 0, m_s, b_o, true)],
        vec![
            sim.transfer(Phase::Bwd1, o, s, handoff_s, b_s, Some((m_s + 1, m_s + 1))),
            sim.compute(Phase::Bwd1, s, 0, m_s, b_s, true),
        ],
        vec![sim.compute(Phase::Bwd1, l, 0, m_s, b_l, true)],
    ];
    sim.stage(lanes);

    let exchange = |sim: &Replay, helper: Worker, m: usize| {
        let bytes = ELEMENT_BYTES * sim.model.params_upto(m);
        let layers = (m > 0).then_some((1, m));
        vec![
            sim.transfer(Phase::GradPush, helper, o, bytes, 0, layers),
            sim.transfer(Phase::WeightPull, o, helper, bytes, 0, layers),
        ]
    };
    let lanes = vec![exchange(&sim, s, m_s), exchange(&sim, l, m_l)];
    sim.stage(lanes);

    let lanes = vec![vec![sim.update(o, n)], vec![sim.update(s, m_s)], vec![sim.update(l, m_l)]];
    sim.stage(lanes);

    let mut events = sim.events;
    events.sort_by(|a, b| a.start.total_cmp(&b.start));
    Ok(EventTrace { events, makespan: sim.clock })
}

/// Exported trace row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub phase: Phase,
    pub kind: EventKind,
    pub src: String,
    pub dst: String,
    pub start_s: f64,
    pub duration_s: f64,
    pub payload_bytes: u64,
    pub layers: String,
    pub samples: usize,
}

pub const TRACE_HEADER: [&str; 9] =
    ["phase", "kind", "src", "dst", "start_s", "duration_s", "payload_bytes", "layers", "samples"];

impl TraceRow {
    pub fn fields(&self) -> [String; 9] {
        [
            self.phase.name().to_string(),
            match self.kind {
                EventKind::Transfer => "transfer",
                EventKind::Compute => "compute",
                EventKind::Barrier => "barrier",
            }
            .to_string(),
            self.src.clone(),
            self.dst.clone(),
            sig9(self.start_s),
            sig9(self.duration_s),
            self.payload_bytes.to_string(),
            self.layers.clone(),
            self.samples.to_string(),
        ]
    }
}

/// One row per event, ordered by start time then phase.
pub fn trace_to_rows(trace: &EventTrace) -> Vec<TraceRow> {
    let name = |w: Option<Worker>| w.map_or("*".to_string(), |w| w.name().to_string());
    let mut rows: Vec<TraceRow> = trace
        .events
        .iter()
        .map(|e| TraceRow {
            phase: e.phase,
            kind: e.kind,
            src: name(e.src),
            dst: name(e.dst),
            start_s: e.start,
            duration_s: e.duration,
            payload_bytes: e.payload_bytes,
            layers: e.layers.map_or(String::new(), |(a, b)| format!("{a}-{b}")),
            samples: e.samples,
        })
        .collect();
    rows.sort_by(|a, b| a.start_s.total_cmp(&b.start_s).then(a.phase.cmp(&b.phase)));
    rows
}

pub fn write_trace_csv<W: Write>(trace: &EventTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER).map_err(csv_error)?;
    for row in trace_to_rows(trace) {
        w.write_record(row.fields()).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch;
    use crate::latency::{total_time, RoleMapping};
    use Worker::*;

    fn net() -> NetworkSpec {
        NetworkSpec::new(5e6, 3e6).unwrap()
    }

    fn golden() -> Policy {
        Policy { mapping: RoleMapping::new(Cloud, Device, Edge).unwrap(), m_s: 1, m_l: 2, b_o: 4, b_s: 2, b_l: 2 }
    }

    #[test]
    fn single_device_trace_is_compute_only() {
        let p = arch::t3_profile();
        let policy = Policy::single(Device, 8);
        let trace = simulate_iteration(&policy, &p, &net()).unwrap();
        assert_eq!(trace.events.len(), 3);
        assert!(trace.events.iter().all(|e| e.kind == EventKind::Compute && e.src == Some(Device)));
        assert_eq!(trace.events.last().unwrap().phase, Phase::Update);
        let model = total_time(&policy, &p, &net()).unwrap().t_total;
        assert!((trace.makespan - model).abs() <= 1e-12 * model);
    }

    #[test]
    fn golden_trace_matches_model() {
        let p = arch::t3_profile();
        let trace = simulate_iteration(&golden(), &p, &net()).unwrap();
        let model = total_time(&golden(), &p, &net()).unwrap();
        assert!((trace.makespan - 0.17046016666666666).abs() <= 1e-9 * model.t_total);
        assert!((trace.makespan - model.t_total).abs() <= 1e-9 * model.t_total);
        assert!(trace.barriers_hold());
    }

    #[test]
    fn golden_trace_event_count() {
        // Stage 1: o input+fwd, s fwd+handoff (device needs no input), l input+fwd, barrier = 7
        // Stage 2: o fwd, l fwd+handoff, barrier = 4
        // Stage 3, 4: o fwd / o bwd = 2
        // Stage 5: o bwd, l grad+bwd, barrier = 4
        // Stage 6: o bwd, s grad+bwd, l bwd, barrier = 5
        // Exchange: push+pull for s and l, barrier = 5
        // Update: o, s, l, barrier = 4
        let p = arch::t3_profile();
        let trace = simulate_iteration(&golden(), &p, &net()).unwrap();
        let rows = trace_to_rows(&trace);
        assert_eq!(rows.len(), 7 + 4 + 2 + 4 + 5 + 5 + 4);
        assert_eq!(rows.iter().filter(|r| r.kind == EventKind::Barrier).count(), 6);
    }

    #[test]
    fn transfers_obey_bandwidth_identity() {
        let p = arch::t3_profile();
        let trace = simulate_iteration(&golden(), &p, &net()).unwrap();
        for e in trace.events.iter().filter(|e| e.kind == EventKind::Transfer) {
            let bw = path_bandwidth(e.src.unwrap(), e.dst.unwrap(), &net());
            let bits = 8.0 * e.payload_bytes as f64;
            assert!((e.duration * bw - bits).abs() <= 1e-9 * bits);
        }
    }

    #[test]
    fn rows_are_sorted_and_formatted() {
        assert!(trace_to_rows(&EventTrace::default()).is_empty());
        let p = arch::t3_profile();
        let trace = simulate_iteration(&golden(), &p, &net()).unwrap();
        let rows = trace_to_rows(&trace);
        assert!(rows.windows(2).all(|w| w[0].start_s <= w[1].start_s));
        let compute = rows.iter().find(|r| r.kind == EventKind::Compute).unwrap();
        assert_eq!(compute.payload_bytes, 0);
        let fields = compute.fields();
        assert_eq!(fields.len(), TRACE_HEADER.len());
    }

    #[test]
    fn invalid_policy_is_rejected() {
        let p = arch::t3_profile();
        let bad = Policy { m_s: 3, m_l: 2, ..golden() };
        assert!(simulate_iteration(&bad, &p, &net()).is_err());
    }
}
