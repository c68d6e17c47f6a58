//! Policy search: every role mapping, every split pair `m_s <= m_l`, and a
//! sample allocation per split, keeping the fastest.

use std::cell::Cell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latency::{LatencyModel, Policy, RoleMapping, SplitCosts};
use crate::profiles::{CostProfile, NetworkSpec};

pub mod baselines;

pub use baselines::{
    baseline_all_on, baseline_compressed_split, baseline_jointdnn, baseline_jointdnn_plus,
    baseline_two_tier, chain_time, Schedule,
};

/// Default batch size.
pub const DEFAULT_BATCH: usize = 128;

/// Default relative tolerance of the continuous allocation search.
pub const DEFAULT_RELAX_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InnerSolver {
    /// Enumerate every integer allocation.
    #[default]
    Exact,
    /// Minimize the continuous relaxation, then round.
    RelaxRound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationSolution {
    pub b_o: usize,
    pub b_s: usize,
    pub b_l: usize,
    /// Modeled iteration time of the allocation, seconds.
    pub objective: f64,
    /// Objective evaluations spent finding it.
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingBest {
    pub mapping: RoleMapping,
    pub policy: Policy,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchStats {
    /// (mapping, m_s, m_l) triples visited.
    pub triples: usize,
    /// Objective evaluations across all inner solves.
    pub inner_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleResult {
    pub best: Policy,
    pub best_time: f64,
    /// One entry per mapping, in [`RoleMapping::ALL`] order.
    pub per_mapping_best: Vec<MappingBest>,
    pub search_stats: SearchStats,
}

fn check_split(m_s: usize, m_l: usize, n: usize, batch: usize) -> Result<()> {
    if m_s > m_l || m_l > n {
        return Err(Error::Policy(format!("split requires 0 <= m_s <= m_l <= N, got m_s={m_s} m_l={m_l} N={n}")));
    }
    if batch == 0 {
        return Err(Error::Policy("batch size must be >= 1".into()));
    }
    Ok(())
}

/// Exact integer minimization of the allocation for a fixed split.
///
/// Ties go to the larger `b_o`, then the larger `b_s`.
pub fn solve_inner_exact(
    mapping: RoleMapping,
    m_s: usize,
    m_l: usize,
    profile: &CostProfile,
    net: &NetworkSpec,
    batch: usize,
) -> Result<AllocationSolution> {
    net.validate()?;
    mapping.validate()?;
    check_split(m_s, m_l, profile.n_layers(), batch)?;
    let model = LatencyModel::new(profile, net);
    Ok(exact_allocation(&model.split(mapping, m_s, m_l), m_s, m_l, batch))
}

pub(crate) fn exact_allocation(costs: &SplitCosts, m_s: usize, m_l: usize, batch: usize) -> AllocationSolution {
    let mut best = AllocationSolution { b_o: batch, b_s: 0, b_l: 0, objective: f64::INFINITY, evaluations: 0 };
    let mut evaluations = 0;
    for b_o in (0..=batch).rev() {
        let rest = batch - b_o;
        let b_s_max = if m_s == 0 { 0 } else { rest };
        for b_s in (0..=b_s_max).rev() {
            let b_l = rest - b_s;
            if m_l == 0 && b_l > 0 {
                continue;
            }
            evaluations += 1;
            let t = costs.total(b_o, b_s, b_l);
            if t < best.objective {
                best = AllocationSolution { b_o, b_s, b_l, objective: t, evaluations: 0 };
            }
        }
    }
    best.evaluations = evaluations;
    best
}

/// Continuous relaxation of the allocation problem, rounded to integers.
///
/// The relaxed objective is convex and piecewise linear over the simplex
/// `b_o + b_s + b_l = B`; it is minimized by nested golden-section search
/// until the bracket is narrower than `tol * B` samples. The returned
/// objective is the exact model time of the rounded allocation.
pub fn solve_inner_relax_round(
    mapping: RoleMapping,
    m_s: usize,
    m_l: usize,
    profile: &CostProfile,
    net: &NetworkSpec,
    batch: usize,
    tol: f64,
) -> Result<AllocationSolution> {
    net.validate()?;
    mapping.validate()?;
    check_split(m_s, m_l, profile.n_layers(), batch)?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "relaxation tolerance must be > 0"));
    }
    let model = LatencyModel::new(profile, net);
    relaxed_allocation(&model.split(mapping, m_s, m_l), m_s, m_l, batch, tol)
}

pub(crate) fn relaxed_allocation(
    costs: &SplitCosts,
    m_s: usize,
    m_l: usize,
    batch: usize,
    tol: f64,
) -> Result<AllocationSolution> {
    let total = batch as f64;
    let width = tol * total;
    let evaluations = Cell::new(0usize);
    let objective = |bs: f64, bl: f64| {
        evaluations.set(evaluations.get() + 1);
        costs.evaluate_real((total - bs - bl).max(0.0), bs, bl).t_total
    };
    // g(b_s) = min over b_l; partial minimization keeps convexity.
    let inner = |bs: f64| -> (f64, f64) {
        if m_l == 0 {
            (objective(bs, 0.0), 0.0)
        } else {
            golden_min(0.0, (total - bs).max(0.0), width, |bl| objective(bs, bl))
        }
    };
    let bs = if m_s == 0 { 0.0 } else { golden_min(0.0, total, width, |bs| inner(bs).0).1 };
    let bl = inner(bs).1;
    let bo = (total - bs - bl).max(0.0);
    let rounded = round_allocation([bo, bs, bl], batch)?;
    let [b_o, b_s, b_l] = rounded.counts;
    Ok(AllocationSolution { b_o, b_s, b_l, objective: costs.total(b_o, b_s, b_l), evaluations: evaluations.get() + 1 })
}

/// Golden-section search for the minimum of a convex function on `[lo, hi]`.
/// Returns `(value, argmin)` of the best point probed, endpoints included.
fn golden_min(lo: f64, hi: f64, width: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut best = (f(lo), lo);
    if hi <= lo {
        return best;
    }
    let f_hi = f(hi);
    if f_hi < best.0 {
        best = (f_hi, hi);
    }
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    loop {
        for (v, x) in [(f1, x1), (f2, x2)] {
            if v < best.0 {
                best = (v, x);
            }
        }
        if b - a <= width {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    best
}

/// Integer allocation produced by [`round_allocation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rounded {
    /// (b_o, b_s, b_l).
    pub counts: [usize; 3],
    /// Rounding steps taken: 0 if already integral, else 1 or 2.
    pub steps: usize,
}

const SUM_TOLERANCE: f64 = 1e-9;

/// Rounds a fractional allocation summing to `batch` to integers with the
/// same sum. Everything is floored, then the `k` components with the
/// largest fractional parts gain one sample, with `k` the remaining deficit
/// (never more than two). Equal fractions are served in (o, s, l) order.
pub fn round_allocation(b_real: [f64; 3], batch: usize) -> Result<Rounded> {
    if b_real.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
        return Err(Error::invalid("b_real", format!("components must be finite and >= 0, got {b_real:?}")));
    }
    let sum: f64 = b_real.iter().sum();
    if (sum - batch as f64).abs() > SUM_TOLERANCE * (batch as f64).max(1.0) {
        return Err(Error::invalid("b_real", format!("components sum to {sum}, expected {batch}")));
    }
    // Snap values sitting within rounding noise of an integer.
    let snapped = b_real.map(|b| {
        let r = b.round();
        if (b - r).abs() <= SUM_TOLERANCE {
            r
        } else {
            b
        }
    });
    let floors = snapped.map(|b| b.floor());
    let fracs = [0, 1, 2].map(|j| snapped[j] - floors[j]);
    let mut counts = floors.map(|f| f as usize);
    let floor_sum: usize = counts.iter().sum();
    let deficit = batch.saturating_sub(floor_sum).min(2);

    let mut order = [0usize, 1, 2];
    // stable: equal fractions keep (o, s, l) order
    order.sort_by(|&a, &b| fracs[b].partial_cmp(&fracs[a]).expect("finite fractions"));
    for &j in order.iter().take(deficit) {
        counts[j] += 1;
    }
    debug_assert_eq!(counts.iter().sum::<usize>(), batch);
    Ok(Rounded { counts, steps: deficit })
}

/// Searches all mappings and splits; the inner problem is solved by `inner`.
pub fn optimize(profile: &CostProfile, net: &NetworkSpec, batch: usize, inner: InnerSolver) -> Result<ScheduleResult> {
    optimize_with_tol(profile, net, batch, inner, DEFAULT_RELAX_TOL)
}

pub fn optimize_with_tol(
    profile: &CostProfile,
    net: &NetworkSpec,
    batch: usize,
    inner: InnerSolver,
    tol: f64,
) -> Result<ScheduleResult> {
    net.validate()?;
    if batch == 0 {
        return Err(Error::Policy("batch size must be >= 1".into()));
    }
    let model = LatencyModel::new(profile, net);
    let n = profile.n_layers();

    let per_mapping: Vec<(MappingBest, SearchStats)> = RoleMapping::ALL
        .par_iter()
        .map(|&mapping| -> Result<(MappingBest, SearchStats)> {
            let mut stats = SearchStats::default();
            let mut best: Option<MappingBest> = None;
            for m_s in 0..=n {
                for m_l in m_s..=n {
                    let costs = model.split(mapping, m_s, m_l);
                    let sol = match inner {
                        InnerSolver::Exact => exact_allocation(&costs, m_s, m_l, batch),
                        InnerSolver::RelaxRound => relaxed_allocation(&costs, m_s, m_l, batch, tol)?,
                    };
                    stats.triples += 1;
                    stats.inner_evaluations += sol.evaluations;
                    if best.is_none_or(|b| sol.objective < b.time) {
                        let policy = Policy { mapping, m_s, m_l, b_o: sol.b_o, b_s: sol.b_s, b_l: sol.b_l };
                        best = Some(MappingBest { mapping, policy, time: sol.objective });
                    }
                }
            }
            Ok((best.expect("at least the m_s = m_l = 0 split"), stats))
        })
        .collect::<Result<_>>()?;

    let mut stats = SearchStats::default();
    let mut overall: Option<MappingBest> = None;
    for (candidate, s) in &per_mapping {
        stats.triples += s.triples;
        stats.inner_evaluations += s.inner_evaluations;
        if overall.is_none_or(|b| candidate.time < b.time) {
            overall = Some(*candidate);
        }
    }
    let overall = overall.expect("six mappings");
    Ok(ScheduleResult {
        best: overall.policy,
        best_time: overall.time,
        per_mapping_best: per_mapping.into_iter().map(|(b, _)| b).collect(),
        search_stats: stats,
    })
}
