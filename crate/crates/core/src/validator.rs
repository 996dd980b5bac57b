//! Independent feasibility oracle.
//!
//! Checks are implemented directly on the instance — never through the
//! disjunctive graph — so they can serve as the reference for the solver:
//! single-train consistency (windows and completion gaps), periodic
//! capacity by folding occupation intervals onto the period circle,
//! unavailability patterns, and the average-utilization cap. A guarded
//! brute-force optimizer enumerates grid schedules for small instances.
//!
//! The occupation interval of plan position `j` on each of its resources is
//! `[σ_j, σ_{j+1} + ε)`: half-open with the ε tail, which makes the no-swap
//! rule observable in the profile.

use std::collections::BTreeMap;

use crate::instance::{
    compute_derived, Instance, ResourceIdx, TrainIdx, TrainStatus, UnavailabilityWindow,
};
use crate::time::{format_minutes, Ticks};

/// A concrete schedule of one train: chosen plan and a start time per plan
/// position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainSchedule {
    pub train: TrainIdx,
    pub plan: usize,
    pub starts: Vec<Ticks>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Stable check identifier ("arrival-window", "capacity", ...).
    pub check: &'static str,
    pub entity: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct Verdict {
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, check: &'static str, entity: String, detail: String) {
        self.violations.push(Violation { check, entity, detail });
    }
}

/// Verifies one train's schedule against its own constraints: arrival and
/// departure windows, and `λ ≤ gap ≤ λ + γ` between consecutive operations.
pub fn check_single(schedule: &TrainSchedule, instance: &Instance) -> Verdict {
    let mut verdict = Verdict::default();
    let train = &instance.trains[schedule.train.0];
    let plan = &train.plans[schedule.plan];
    let entity = format!("{}/{}", train.id, plan.id);
    if schedule.starts.len() != plan.sequence.len() {
        verdict.push(
            "schedule-shape",
            entity,
            format!(
                "schedule has {} start times for {} operations",
                schedule.starts.len(),
                plan.sequence.len()
            ),
        );
        return verdict;
    }
    let first = schedule.starts[0];
    if !train.arrival.contains(first) {
        verdict.push(
            "arrival-window",
            entity.clone(),
            format!(
                "arrival at {} outside [{}, {}]",
                format_minutes(first),
                format_minutes(train.arrival.lo),
                format_minutes(train.arrival.hi)
            ),
        );
    }
    let last = *schedule.starts.last().unwrap();
    if !train.departure.contains(last) {
        verdict.push(
            "departure-window",
            entity.clone(),
            format!(
                "departure at {} outside [{}, {}]",
                format_minutes(last),
                format_minutes(train.departure.lo),
                format_minutes(train.departure.hi)
            ),
        );
    }
    for j in 0..plan.sequence.len() - 1 {
        let op = instance.operation(plan.sequence[j]);
        let gap = schedule.starts[j + 1] - schedule.starts[j];
        if gap < op.duration {
            verdict.push(
                "minimum-completion",
                entity.clone(),
                format!(
                    "gap {} after `{}` is below its duration {}",
                    format_minutes(gap),
                    op.id,
                    format_minutes(op.duration)
                ),
            );
        }
        if let Some(wait) = op.max_wait {
            if gap > op.duration + wait {
                verdict.push(
                    "maximum-wait",
                    entity.clone(),
                    format!(
                        "gap {} after `{}` exceeds duration+wait {}",
                        format_minutes(gap),
                        op.id,
                        format_minutes(op.duration + wait)
                    ),
                );
            }
        }
    }
    verdict
}

/// Occupation intervals `[σ_j, σ_{j+1} + ε)` of one schedule, per resource.
pub fn occupation_intervals(
    schedule: &TrainSchedule,
    instance: &Instance,
) -> Vec<(ResourceIdx, Ticks, Ticks)> {
    let train = &instance.trains[schedule.train.0];
    let plan = &train.plans[schedule.plan];
    let mut out = Vec::new();
    for j in 0..plan.sequence.len().saturating_sub(1) {
        let op = instance.operation(plan.sequence[j]);
        for &s in &op.resources {
            out.push((s, schedule.starts[j], schedule.starts[j + 1] + instance.epsilon));
        }
    }
    out
}

/// Total occupation time per resource with consecutive acquisitions merged:
/// per maximal run of plan positions requiring `s`, the span from the run's
/// first start to the start after the run, plus ε. Matches the minimum
/// occupation accounting of the model's utilization rows.
pub fn occupation_totals(
    schedule: &TrainSchedule,
    instance: &Instance,
) -> BTreeMap<ResourceIdx, Ticks> {
    let train = &instance.trains[schedule.train.0];
    let plan = &train.plans[schedule.plan];
    let mut totals: BTreeMap<ResourceIdx, Ticks> = BTreeMap::new();
    let n = plan.sequence.len();
    for j in 0..n.saturating_sub(1) {
        let op = instance.operation(plan.sequence[j]);
        for &s in &op.resources {
            let run_start = j == 0
                || !instance
                    .operation(plan.sequence[j - 1])
                    .resources
                    .contains(&s);
            let span = schedule.starts[j + 1] - schedule.starts[j];
            let add = if run_start { span + instance.epsilon } else { span };
            *totals.entry(s).or_insert(0) += add;
        }
    }
    totals
}

/// Step function over `[0, horizon)` counting concurrent users.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyProfile {
    pub resource: ResourceIdx,
    pub capacity: u32,
    /// Disjoint, ordered `[start, end)` steps covering the horizon.
    pub steps: Vec<(Ticks, Ticks, u32)>,
    /// Integral of the profile (equals the total folded occupation time).
    pub total_occupation: Ticks,
    pub horizon: Ticks,
}

impl OccupancyProfile {
    pub fn max_count(&self) -> u32 {
        self.steps.iter().map(|s| s.2).max().unwrap_or(0)
    }

    /// Average utilization as a fraction of `capacity · horizon`.
    pub fn average_fraction(&self) -> f64 {
        if self.horizon == 0 || self.capacity == 0 {
            return 0.0;
        }
        self.total_occupation as f64 / (self.capacity as i64 * self.horizon) as f64
    }

    /// Fraction of the horizon at (or above) full capacity.
    pub fn saturated_fraction(&self) -> f64 {
        if self.horizon == 0 {
            return 0.0;
        }
        let saturated: Ticks = self
            .steps
            .iter()
            .filter(|s| s.2 >= self.capacity)
            .map(|s| s.1 - s.0)
            .sum();
        saturated as f64 / self.horizon as f64
    }
}

/// Folds intervals modulo `period` (splitting at the wrap point; an
/// interval of length `m·τ + r` contributes `m` everywhere plus the `r`
/// remainder arc) and sweeps the circle into a step function.
pub fn folded_profile(intervals: &[(Ticks, Ticks)], period: Ticks) -> Vec<(Ticks, Ticks, u32)> {
    let mut base = 0i64;
    let mut events: BTreeMap<Ticks, i64> = BTreeMap::new();
    events.entry(0).or_insert(0);
    events.entry(period).or_insert(0);
    for &(start, end) in intervals {
        if end <= start {
            continue;
        }
        let len = end - start;
        base += len / period;
        let rem = len % period;
        if rem == 0 {
            continue;
        }
        let s = start.rem_euclid(period);
        let e = s + rem;
        if e <= period {
            *events.entry(s).or_insert(0) += 1;
            *events.entry(e).or_insert(0) -= 1;
        } else {
            *events.entry(s).or_insert(0) += 1;
            *events.entry(period).or_insert(0) -= 1;
            *events.entry(0).or_insert(0) += 1;
            *events.entry(e - period).or_insert(0) -= 1;
        }
    }
    sweep(events, base, period)
}

/// Line sweep without folding; the horizon runs to `horizon_end`.
pub fn line_profile(intervals: &[(Ticks, Ticks)], horizon_end: Ticks) -> Vec<(Ticks, Ticks, u32)> {
    let mut events: BTreeMap<Ticks, i64> = BTreeMap::new();
    events.entry(0).or_insert(0);
    events.entry(horizon_end).or_insert(0);
    for &(start, end) in intervals {
        if end <= start {
            continue;
        }
        *events.entry(start.max(0)).or_insert(0) += 1;
        *events.entry(end.min(horizon_end)).or_insert(0) -= 1;
    }
    sweep(events, 0, horizon_end)
}

fn sweep(events: BTreeMap<Ticks, i64>, base: i64, end: Ticks) -> Vec<(Ticks, Ticks, u32)> {
    let mut steps = Vec::new();
    let mut count = base;
    let mut prev: Option<Ticks> = None;
    for (&t, &delta) in &events {
        if let Some(p) = prev {
            if t > p && p < end {
                steps.push((p, t.min(end), count as u32));
            }
        }
        count += delta;
        prev = Some(t);
    }
    // Merge equal neighbours for a canonical representation.
    let mut merged: Vec<(Ticks, Ticks, u32)> = Vec::new();
    for s in steps {
        match merged.last_mut() {
            Some(last) if last.2 == s.2 && last.1 == s.0 => last.1 = s.1,
            _ => merged.push(s),
        }
    }
    merged
}

pub fn profile_max(steps: &[(Ticks, Ticks, u32)]) -> u32 {
    steps.iter().map(|s| s.2).max().unwrap_or(0)
}

/// Maximum concurrent count when replicas `0..periods` of every interval
/// are unrolled on the line. With `periods = 2k` this equals the folded
/// maximum exactly; it exists as an independent cross-check of the folding.
pub fn unrolled_max(intervals: &[(Ticks, Ticks)], period: Ticks, periods: u32) -> u32 {
    let mut unrolled = Vec::with_capacity(intervals.len() * periods as usize);
    for rep in 0..periods as i64 {
        for &(s, e) in intervals {
            unrolled.push((s + rep * period, e + rep * period));
        }
    }
    let end = unrolled.iter().map(|i| i.1).max().unwrap_or(0);
    profile_max(&line_profile(&unrolled, end))
}

/// Result of the periodic (or plain, when no period is set) set-level check:
/// capacity at every instant, unavailability patterns, utilization cap.
pub struct PeriodicReport {
    pub verdict: Verdict,
    pub profiles: Vec<OccupancyProfile>,
}

pub fn check_periodic(schedules: &[TrainSchedule], instance: &Instance) -> PeriodicReport {
    let mut verdict = Verdict::default();
    let mut profiles = Vec::new();

    let mut by_resource: BTreeMap<ResourceIdx, Vec<(Ticks, Ticks)>> = BTreeMap::new();
    let mut horizon_end: Ticks = 1;
    for ts in schedules {
        for (s, start, end) in occupation_intervals(ts, instance) {
            horizon_end = horizon_end.max(end);
            by_resource.entry(s).or_default().push((start, end));
        }
    }

    for (ri, resource) in instance.resources.iter().enumerate() {
        let idx = ResourceIdx(ri);
        let empty = Vec::new();
        let intervals = by_resource.get(&idx).unwrap_or(&empty);
        let (steps, horizon) = match instance.period {
            Some(tau) => (folded_profile(intervals, tau), tau),
            None => (line_profile(intervals, horizon_end), horizon_end),
        };
        let total: Ticks = steps.iter().map(|s| (s.1 - s.0) * s.2 as Ticks).sum();
        for &(from, to, count) in &steps {
            if count > resource.capacity {
                verdict.push(
                    "capacity",
                    resource.id.clone(),
                    format!(
                        "{count} concurrent users in [{}, {}) exceed capacity {}",
                        format_minutes(from),
                        format_minutes(to),
                        resource.capacity
                    ),
                );
            }
        }
        profiles.push(OccupancyProfile {
            resource: idx,
            capacity: resource.capacity,
            steps,
            total_occupation: total,
            horizon,
        });
    }

    for ts in schedules {
        check_unavailability(ts, instance, &mut verdict);
    }

    // Average-utilization cap (periodic instances only: the budget is per
    // period).
    if let Some(tau) = instance.period {
        let mut totals: BTreeMap<ResourceIdx, Ticks> = BTreeMap::new();
        for ts in schedules {
            for (s, g) in occupation_totals(ts, instance) {
                *totals.entry(s).or_insert(0) += g;
            }
        }
        for (s, g) in totals {
            let resource = instance.resource(s);
            let budget = instance.utilization_cap_permille as i64 * resource.capacity as i64 * tau;
            if 1000 * g > budget {
                verdict.push(
                    "utilization-cap",
                    resource.id.clone(),
                    format!(
                        "total occupation {} min exceeds {}‰ of capacity·period ({} min)",
                        format_minutes(g),
                        instance.utilization_cap_permille,
                        format_minutes(budget / 1000)
                    ),
                );
            }
        }
    }

    PeriodicReport { verdict, profiles }
}

/// The three admissible placements against an unavailability window
/// repetition `[h, h′)`: completed before `h`, started at or after `h′`,
/// or interrupted — started before `h`, still working at `h` under λ alone,
/// with the successor delayed by at least `λ + (h′ − h)`.
fn check_unavailability(ts: &TrainSchedule, instance: &Instance, verdict: &mut Verdict) {
    let train = &instance.trains[ts.train.0];
    let plan = &train.plans[ts.plan];
    for j in 0..plan.sequence.len().saturating_sub(1) {
        let op = instance.operation(plan.sequence[j]);
        let start = ts.starts[j];
        let next = ts.starts[j + 1];
        for &s in &op.resources {
            let resource = instance.resource(s);
            for w in &resource.unavailability {
                for (h, h_end) in window_repetitions(*w, instance.period, next) {
                    if next <= h || start >= h_end {
                        continue;
                    }
                    let straddles = start < h && start + op.duration > h && next >= start + op.duration + w.len();
                    if !straddles {
                        verdict.push(
                            "unavailability",
                            format!("{}/{}", train.id, op.id),
                            format!(
                                "occupies `{}` during its unavailability [{}, {}) without a valid interruption pattern",
                                resource.id,
                                format_minutes(h),
                                format_minutes(h_end)
                            ),
                        );
                    }
                }
            }
        }
    }
}

/// Window repetitions `[h + iτ, h′ + iτ)` intersecting `[0, until)`.
fn window_repetitions(
    w: UnavailabilityWindow,
    period: Option<Ticks>,
    until: Ticks,
) -> Vec<(Ticks, Ticks)> {
    match period {
        None => vec![(w.start, w.end)],
        Some(tau) => {
            let mut reps = Vec::new();
            let mut i = -1i64;
            while w.end + i * tau <= 0 {
                i += 1;
            }
            while w.start + i * tau < until {
                reps.push((w.start + i * tau, w.end + i * tau));
                i += 1;
            }
            reps
        }
    }
}

/// Runs `check_single` for every schedule, then the set-level checks.
pub fn validate_solution(schedules: &[TrainSchedule], instance: &Instance) -> PeriodicReport {
    let mut verdict = Verdict::default();
    for ts in schedules {
        verdict.violations.extend(check_single(ts, instance).violations);
    }
    let mut report = check_periodic(schedules, instance);
    let mut all = verdict.violations;
    all.extend(std::mem::take(&mut report.verdict.violations));
    report.verdict.violations = all;
    report
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("instance too large for the brute-force oracle: {detail}")]
pub struct OracleGuard {
    pub detail: String,
}

#[derive(Debug, Clone)]
pub enum BruteForceOutcome {
    /// Maximum number of candidates servable, with one witness schedule.
    Optimum {
        objective: u32,
        witness: Vec<TrainSchedule>,
    },
    /// The fixed trains alone admit no feasible set of schedules.
    FixedInfeasible,
}

/// Exhaustive reference optimizer: enumerates candidate subsets, plan
/// choices and grid-aligned start times, checking feasibility through the
/// validator. Guarded to small instances.
pub fn brute_force_optimum(
    instance: &Instance,
    grid: Ticks,
) -> Result<BruteForceOutcome, OracleGuard> {
    if instance.trains.len() > 4 {
        return Err(OracleGuard {
            detail: format!("{} trains (max 4)", instance.trains.len()),
        });
    }
    if instance.trains.iter().any(|t| t.plans.len() > 2) {
        return Err(OracleGuard {
            detail: "a train has more than 2 plans".into(),
        });
    }
    let derived = compute_derived(instance);
    let horizon_points = (derived.max_departure + grid - 1) / grid.max(1);
    if grid <= 0 || horizon_points > 200 {
        return Err(OracleGuard {
            detail: format!("{horizon_points} grid points (max 200)"),
        });
    }

    // Per-train feasible (plan, starts) alternatives, pre-filtered by the
    // single-train checks and the unavailability patterns.
    let mut options: Vec<Vec<TrainSchedule>> = Vec::new();
    for (ti, _) in instance.trains.iter().enumerate() {
        let mut schedules = Vec::new();
        enumerate_train_schedules(instance, TrainIdx(ti), grid, &mut schedules)?;
        schedules.retain(|ts| {
            let mut v = Verdict::default();
            check_unavailability(ts, instance, &mut v);
            v.pass()
        });
        options.push(schedules);
    }

    // Fixed trains first so fixed-set infeasibility surfaces at the root.
    let mut order: Vec<usize> = (0..instance.trains.len()).collect();
    order.sort_by_key(|&t| (instance.trains[t].status == TrainStatus::Candidate, t));

    let mut best: Option<(u32, Vec<TrainSchedule>)> = None;
    let mut chosen: Vec<TrainSchedule> = Vec::new();
    search_combos(instance, &order, &options, 0, &mut chosen, &mut best);

    match best {
        None => Ok(BruteForceOutcome::FixedInfeasible),
        Some((objective, witness)) => Ok(BruteForceOutcome::Optimum { objective, witness }),
    }
}

fn enumerate_train_schedules(
    instance: &Instance,
    train: TrainIdx,
    grid: Ticks,
    out: &mut Vec<TrainSchedule>,
) -> Result<(), OracleGuard> {
    let t = &instance.trains[train.0];
    for (pi, plan) in t.plans.iter().enumerate() {
        let n = plan.sequence.len();
        // Remaining minimum duration from each position to the end.
        let mut rem = vec![0; n];
        for j in (0..n - 1).rev() {
            rem[j] = rem[j + 1] + instance.operation(plan.sequence[j]).duration;
        }
        let mut starts = Vec::with_capacity(n);
        fill_positions(instance, t, plan, pi, train, grid, &rem, &mut starts, out)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn fill_positions(
    instance: &Instance,
    t: &crate::instance::TrainService,
    plan: &crate::instance::Plan,
    plan_idx: usize,
    train: TrainIdx,
    grid: Ticks,
    rem: &[Ticks],
    starts: &mut Vec<Ticks>,
    out: &mut Vec<TrainSchedule>,
) -> Result<(), OracleGuard> {
    let j = starts.len();
    let n = plan.sequence.len();
    if j == n {
        out.push(TrainSchedule {
            train,
            plan: plan_idx,
            starts: starts.clone(),
        });
        if out.len() > 500_000 {
            return Err(OracleGuard {
                detail: "schedule enumeration exceeded 500000 alternatives".into(),
            });
        }
        return Ok(());
    }
    let (lo, hi) = if j == 0 {
        (t.arrival.lo, t.arrival.hi)
    } else {
        let prev_op = instance.operation(plan.sequence[j - 1]);
        let lo = starts[j - 1] + prev_op.duration;
        let hi = match prev_op.max_wait {
            Some(w) => lo + w,
            None => t.departure.hi,
        };
        (lo, hi)
    };
    // Clip so the remaining chain still fits the departure window.
    let hi = hi.min(t.departure.hi - rem[j]);
    let (lo, hi) = if j == n - 1 {
        (lo.max(t.departure.lo), hi.min(t.departure.hi))
    } else {
        (lo, hi)
    };
    let mut s = lo.div_euclid(grid) * grid;
    if s < lo {
        s += grid;
    }
    while s <= hi {
        starts.push(s);
        fill_positions(instance, t, plan, plan_idx, train, grid, rem, starts, out)?;
        starts.pop();
        s += grid;
    }
    Ok(())
}

fn search_combos(
    instance: &Instance,
    order: &[usize],
    options: &[Vec<TrainSchedule>],
    depth: usize,
    chosen: &mut Vec<TrainSchedule>,
    best: &mut Option<(u32, Vec<TrainSchedule>)>,
) {
    if depth == order.len() {
        let report = check_periodic(chosen, instance);
        if report.verdict.pass() {
            let served = chosen
                .iter()
                .filter(|ts| instance.trains[ts.train.0].status == TrainStatus::Candidate)
                .count() as u32;
            if best.as_ref().map_or(true, |(b, _)| served > *b) {
                *best = Some((served, chosen.clone()));
            }
        }
        return;
    }
    // Bound: even serving every remaining candidate cannot beat the best.
    if let Some((b, _)) = best {
        let served_so_far = chosen
            .iter()
            .filter(|ts| instance.trains[ts.train.0].status == TrainStatus::Candidate)
            .count() as u32;
        let remaining = order[depth..]
            .iter()
            .filter(|&&t| instance.trains[t].status == TrainStatus::Candidate)
            .count() as u32;
        if served_so_far + remaining <= *b {
            return;
        }
    }
    let ti = order[depth];
    for ts in &options[ti] {
        chosen.push(ts.clone());
        // Partial capacity pruning: adding schedules only grows counts.
        if partial_capacity_ok(chosen, instance) {
            search_combos(instance, order, options, depth + 1, chosen, best);
        }
        chosen.pop();
    }
    if instance.trains[ti].status == TrainStatus::Candidate {
        search_combos(instance, order, options, depth + 1, chosen, best);
    }
}

fn partial_capacity_ok(chosen: &[TrainSchedule], instance: &Instance) -> bool {
    let mut by_resource: BTreeMap<ResourceIdx, Vec<(Ticks, Ticks)>> = BTreeMap::new();
    let mut horizon: Ticks = 1;
    for ts in chosen {
        for (s, a, b) in occupation_intervals(ts, instance) {
            horizon = horizon.max(b);
            by_resource.entry(s).or_default().push((a, b));
        }
    }
    for (s, intervals) in by_resource {
        let cap = instance.resource(s).capacity;
        let max = match instance.period {
            Some(tau) => profile_max(&folded_profile(&intervals, tau)),
            None => profile_max(&line_profile(&intervals, horizon)),
        };
        if max > cap {
            return false;
        }
    }
    true
}
