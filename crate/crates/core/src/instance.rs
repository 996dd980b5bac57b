//! Domain model: yards, operations, plans, train services; instance
//! validation and derived quantities.
//!
//! An [`Instance`] is immutable after construction ([`Instance::new`]
//! validates every invariant and reports each violation with a field path).
//! [`compute_derived`] is a pure function of the instance: makespan,
//! replica count, minimum stays and minimum occupation times.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use crate::time::{format_minutes, Ticks};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResourceIdx(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpIdx(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrainIdx(pub usize);

/// A resource unavailability window `[start, end)` on the period axis.
///
/// A window that crosses the period boundary (e.g. 23:00–05:00 with a 24 h
/// period) is kept unsplit with `end > period`; its periodic repetitions
/// (including the one starting in the previous period) are generated where
/// the window is consumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnavailabilityWindow {
    pub start: Ticks,
    pub end: Ticks,
}

impl UnavailabilityWindow {
    pub fn len(&self) -> Ticks {
        self.end - self.start
    }
}

#[derive(Debug, Clone)]
pub struct Resource {
    pub id: String,
    /// Capacity `u_s >= 1`: number of simultaneous users.
    pub capacity: u32,
    /// Whether this resource counts toward the yard track total `b`.
    pub counts_as_track: bool,
    pub unavailability: Vec<UnavailabilityWindow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Arrival,
    Departure,
    Internal,
}

#[derive(Debug, Clone)]
pub struct Operation {
    pub id: String,
    /// Resources exploited while the operation (and the wait after it) runs.
    pub resources: Vec<ResourceIdx>,
    /// Completion time λ.
    pub duration: Ticks,
    /// Maximum wait γ after completion before the next operation starts;
    /// `None` means unbounded.
    pub max_wait: Option<Ticks>,
    pub kind: OpKind,
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub id: String,
    /// Ordered operation sequence, arrival first, departure last.
    pub sequence: Vec<OpIdx>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainStatus {
    /// Part of the current timetable; must be served, degenerate windows.
    Fixed,
    /// Candidate additional service; may be skipped.
    Candidate,
}

/// A closed time window `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeWindow {
    pub lo: Ticks,
    pub hi: Ticks,
}

impl TimeWindow {
    pub fn singleton(t: Ticks) -> Self {
        TimeWindow { lo: t, hi: t }
    }

    pub fn width(&self) -> Ticks {
        self.hi - self.lo
    }

    pub fn contains(&self, t: Ticks) -> bool {
        self.lo <= t && t <= self.hi
    }
}

#[derive(Debug, Clone)]
pub struct TrainService {
    pub id: String,
    pub status: TrainStatus,
    pub plans: Vec<Plan>,
    pub arrival: TimeWindow,
    pub departure: TimeWindow,
}

/// A validated yard saturation instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub resources: Vec<Resource>,
    pub operations: Vec<Operation>,
    pub trains: Vec<TrainService>,
    /// Period τ; `None` for the plain (non-periodic) problem.
    pub period: Option<Ticks>,
    /// No-swap margin ε (ticks), strictly positive and below every positive
    /// operation duration.
    pub epsilon: Ticks,
    /// Average-utilization cap per resource, in permille of `u_s · τ`
    /// (850 = the default 85% rule).
    pub utilization_cap_permille: u32,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum InstanceError {
    #[error("{path}: unknown {kind} id `{id}`")]
    DanglingId {
        path: String,
        kind: &'static str,
        id: String,
    },
    #[error("{path}: duplicate {kind} id `{id}`")]
    DuplicateId {
        path: String,
        kind: &'static str,
        id: String,
    },
    #[error("{path}: window inverted or empty ({lo} > {hi} minutes)")]
    WindowInversion { path: String, lo: String, hi: String },
    #[error("{path}: fixed train has a non-degenerate window")]
    FixedTrainWindow { path: String },
    #[error("{path}: {detail}")]
    SchemaViolation { path: String, detail: String },
}

/// All validation failures of one instance, each with its field path.
#[derive(Debug, Clone)]
pub struct InstanceErrors(pub Vec<InstanceError>);

impl fmt::Display for InstanceErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for InstanceErrors {}

impl Instance {
    /// Validates and constructs an instance. Every violated invariant is
    /// reported; the instance is returned only if all checks pass.
    pub fn new(
        resources: Vec<Resource>,
        operations: Vec<Operation>,
        trains: Vec<TrainService>,
        period: Option<Ticks>,
        epsilon: Ticks,
        utilization_cap_permille: u32,
    ) -> Result<Instance, InstanceErrors> {
        let instance = Instance {
            resources,
            operations,
            trains,
            period,
            epsilon,
            utilization_cap_permille,
        };
        let errors = instance.validate();
        if errors.is_empty() {
            Ok(instance)
        } else {
            Err(InstanceErrors(errors))
        }
    }

    pub fn is_periodic(&self) -> bool {
        self.period.is_some()
    }

    /// Total number of tracks `b`: capacity-weighted sum over resources
    /// flagged `counts_as_track`.
    pub fn track_count(&self) -> u64 {
        self.resources
            .iter()
            .filter(|r| r.counts_as_track)
            .map(|r| r.capacity as u64)
            .sum()
    }

    pub fn fixed_count(&self) -> usize {
        self.trains
            .iter()
            .filter(|t| t.status == TrainStatus::Fixed)
            .count()
    }

    pub fn operation(&self, op: OpIdx) -> &Operation {
        &self.operations[op.0]
    }

    pub fn resource(&self, r: ResourceIdx) -> &Resource {
        &self.resources[r.0]
    }

    fn validate(&self) -> Vec<InstanceError> {
        let mut errs = Vec::new();
        let schema = |errs: &mut Vec<InstanceError>, path: String, detail: String| {
            errs.push(InstanceError::SchemaViolation { path, detail });
        };

        let mut seen = HashSet::new();
        for r in &self.resources {
            if !seen.insert(r.id.clone()) {
                errs.push(InstanceError::DuplicateId {
                    path: format!("resources[{}]", r.id),
                    kind: "resource",
                    id: r.id.clone(),
                });
            }
        }
        let mut seen = HashSet::new();
        for op in &self.operations {
            if !seen.insert(op.id.clone()) {
                errs.push(InstanceError::DuplicateId {
                    path: format!("operations[{}]", op.id),
                    kind: "operation",
                    id: op.id.clone(),
                });
            }
        }
        let mut seen = HashSet::new();
        for t in &self.trains {
            if !seen.insert(t.id.clone()) {
                errs.push(InstanceError::DuplicateId {
                    path: format!("trains[{}]", t.id),
                    kind: "train",
                    id: t.id.clone(),
                });
            }
        }

        if let Some(tau) = self.period {
            if tau <= 0 {
                schema(
                    &mut errs,
                    "period_minutes".into(),
                    "period must be positive".into(),
                );
            }
        }
        if self.epsilon <= 0 {
            schema(
                &mut errs,
                "epsilon_minutes".into(),
                "epsilon must be positive".into(),
            );
        }
        let min_positive_duration = self
            .operations
            .iter()
            .map(|op| op.duration)
            .filter(|&d| d > 0)
            .min();
        if let Some(min_dur) = min_positive_duration {
            if self.epsilon >= min_dur {
                schema(
                    &mut errs,
                    "epsilon_minutes".into(),
                    format!(
                        "epsilon ({} min) must be below the smallest positive operation duration ({} min)",
                        format_minutes(self.epsilon),
                        format_minutes(min_dur)
                    ),
                );
            }
        }
        if self.utilization_cap_permille == 0 || self.utilization_cap_permille > 1000 {
            schema(
                &mut errs,
                "utilization_cap".into(),
                "utilization cap must be in (0, 1]".into(),
            );
        }

        for (ri, r) in self.resources.iter().enumerate() {
            let path = format!("resources[{}]", r.id);
            if r.capacity == 0 {
                schema(&mut errs, format!("{path}.capacity"), "capacity must be >= 1".into());
            }
            for (wi, w) in r.unavailability.iter().enumerate() {
                let wpath = format!("{path}.unavailable[{wi}]");
                if w.start >= w.end {
                    errs.push(InstanceError::WindowInversion {
                        path: wpath.clone(),
                        lo: format_minutes(w.start),
                        hi: format_minutes(w.end),
                    });
                    continue;
                }
                if w.start < 0 {
                    schema(&mut errs, wpath.clone(), "window start must be >= 0".into());
                }
                if let Some(tau) = self.period {
                    if w.start >= tau {
                        schema(
                            &mut errs,
                            wpath.clone(),
                            "window start must lie within one period".into(),
                        );
                    }
                    if w.len() >= tau {
                        schema(
                            &mut errs,
                            wpath.clone(),
                            "window must not cover the whole period".into(),
                        );
                    }
                }
            }
            // Pairwise disjoint on the period circle.
            if let Some(tau) = self.period {
                let mut segments: Vec<(Ticks, Ticks)> = Vec::new();
                for w in &r.unavailability {
                    if w.start >= w.end {
                        continue;
                    }
                    if w.end <= tau {
                        segments.push((w.start, w.end));
                    } else {
                        segments.push((w.start, tau));
                        segments.push((0, w.end - tau));
                    }
                }
                segments.sort();
                for pair in segments.windows(2) {
                    if pair[1].0 < pair[0].1 {
                        schema(
                            &mut errs,
                            format!("{path}.unavailable"),
                            "unavailability windows overlap".into(),
                        );
                        break;
                    }
                }
            } else {
                let mut segments: Vec<(Ticks, Ticks)> =
                    r.unavailability.iter().map(|w| (w.start, w.end)).collect();
                segments.sort();
                for pair in segments.windows(2) {
                    if pair[1].0 < pair[0].1 {
                        schema(
                            &mut errs,
                            format!("{path}.unavailable"),
                            "unavailability windows overlap".into(),
                        );
                        break;
                    }
                }
            }
            let _ = ri;
        }

        for op in &self.operations {
            let path = format!("operations[{}]", op.id);
            for r in &op.resources {
                if r.0 >= self.resources.len() {
                    errs.push(InstanceError::DanglingId {
                        path: format!("{path}.resources"),
                        kind: "resource",
                        id: format!("#{}", r.0),
                    });
                }
            }
            if op.duration < 0 {
                schema(&mut errs, format!("{path}.duration_minutes"), "duration must be >= 0".into());
            }
            if let Some(w) = op.max_wait {
                if w < 0 {
                    schema(&mut errs, format!("{path}.max_wait_minutes"), "max wait must be >= 0".into());
                }
            }
            if matches!(op.kind, OpKind::Arrival | OpKind::Departure) {
                if !op.resources.is_empty() || op.duration != 0 || op.max_wait != Some(0) {
                    schema(
                        &mut errs,
                        path.clone(),
                        "arrival/departure operations must have no resources and zero duration and wait"
                            .into(),
                    );
                }
            }
        }

        for t in &self.trains {
            let tpath = format!("trains[{}]", t.id);
            if t.plans.is_empty() {
                schema(&mut errs, format!("{tpath}.plans"), "train has no plans".into());
            }
            let mut plan_ids = HashSet::new();
            for p in &t.plans {
                let ppath = format!("{tpath}.plans[{}]", p.id);
                if !plan_ids.insert(p.id.clone()) {
                    errs.push(InstanceError::DuplicateId {
                        path: ppath.clone(),
                        kind: "plan",
                        id: p.id.clone(),
                    });
                }
                if p.sequence.len() < 2 {
                    schema(
                        &mut errs,
                        format!("{ppath}.sequence"),
                        "plan must contain at least arrival and departure".into(),
                    );
                    continue;
                }
                let mut dangling = false;
                for (j, op) in p.sequence.iter().enumerate() {
                    if op.0 >= self.operations.len() {
                        errs.push(InstanceError::DanglingId {
                            path: format!("{ppath}.sequence[{j}]"),
                            kind: "operation",
                            id: format!("#{}", op.0),
                        });
                        dangling = true;
                    }
                }
                if dangling {
                    continue;
                }
                let first = self.operation(p.sequence[0]).kind;
                let last = self.operation(*p.sequence.last().unwrap()).kind;
                if first != OpKind::Arrival {
                    schema(
                        &mut errs,
                        format!("{ppath}.sequence[0]"),
                        "plan must start with an arrival operation".into(),
                    );
                }
                if last != OpKind::Departure {
                    schema(
                        &mut errs,
                        format!("{ppath}.sequence[last]"),
                        "plan must end with a departure operation".into(),
                    );
                }
                for (j, op) in p.sequence[1..p.sequence.len() - 1].iter().enumerate() {
                    if self.operation(*op).kind != OpKind::Internal {
                        schema(
                            &mut errs,
                            format!("{ppath}.sequence[{}]", j + 1),
                            "interior operations must be internal".into(),
                        );
                    }
                }
            }
            // All plans of one train share the arrival and departure
            // operations; the window arcs attach to those two nodes.
            let firsts: HashSet<OpIdx> = t
                .plans
                .iter()
                .filter_map(|p| p.sequence.first().copied())
                .collect();
            let lasts: HashSet<OpIdx> = t
                .plans
                .iter()
                .filter_map(|p| p.sequence.last().copied())
                .collect();
            if firsts.len() > 1 || lasts.len() > 1 {
                schema(
                    &mut errs,
                    format!("{tpath}.plans"),
                    "all plans of a train must share the same arrival and departure operations"
                        .into(),
                );
            }
            if t.arrival.lo > t.arrival.hi {
                errs.push(InstanceError::WindowInversion {
                    path: format!("{tpath}.arrival_window"),
                    lo: format_minutes(t.arrival.lo),
                    hi: format_minutes(t.arrival.hi),
                });
            }
            if t.departure.lo > t.departure.hi {
                errs.push(InstanceError::WindowInversion {
                    path: format!("{tpath}.departure_window"),
                    lo: format_minutes(t.departure.lo),
                    hi: format_minutes(t.departure.hi),
                });
            }
            if t.arrival.hi > t.departure.lo {
                schema(
                    &mut errs,
                    format!("{tpath}"),
                    "arrival window must precede departure window".into(),
                );
            }
            if t.arrival.lo < 0 {
                schema(&mut errs, format!("{tpath}.arrival_window"), "times must be >= 0".into());
            }
            if t.status == TrainStatus::Fixed
                && (t.arrival.lo != t.arrival.hi || t.departure.lo != t.departure.hi)
            {
                errs.push(InstanceError::FixedTrainWindow {
                    path: format!("{tpath}"),
                });
            }
        }

        errs
    }
}

/// Minimum occupation data of one plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanOccupation {
    /// μ_s^{t,p}: sum of durations of the plan's operations requiring `s`,
    /// plus ε per acquisition run.
    pub occupation: BTreeMap<ResourceIdx, Ticks>,
    /// β_s^p: number of maximal consecutive runs of operations requiring `s`.
    pub acquisition_runs: BTreeMap<ResourceIdx, u32>,
}

/// Quantities derived from a valid instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedQuantities {
    /// ζ: span from the earliest possible arrival to the latest possible
    /// departure over all trains.
    pub makespan: Ticks,
    /// k = ⌈ζ/τ⌉ (at least 1): replicas that can interact across periods.
    pub replica_count: u32,
    /// ρ̲_t = q̲_t − ā_t per train.
    pub min_stay: Vec<Ticks>,
    /// Per train, per plan.
    pub per_plan: Vec<Vec<PlanOccupation>>,
    /// μ_s^t = min over plans of μ_s^{t,p} (0 when some plan avoids `s`).
    pub min_occupation: Vec<BTreeMap<ResourceIdx, Ticks>>,
    pub min_arrival: Ticks,
    pub max_departure: Ticks,
}

impl DerivedQuantities {
    /// Replica indices that interval-based machinery must cover: `k`, plus
    /// one when ζ is an exact multiple of τ (the ε tail of an occupation
    /// spanning the whole makespan then pokes into replica k+1).
    pub fn covering_replicas(&self, instance: &Instance) -> u32 {
        match instance.period {
            None => 1,
            Some(tau) => {
                if self.makespan > 0 && self.makespan % tau == 0 {
                    self.replica_count + 1
                } else {
                    self.replica_count
                }
            }
        }
    }
}

/// Computes makespan, replica count, minimum stays and occupations.
/// Deterministic and total on valid instances.
pub fn compute_derived(instance: &Instance) -> DerivedQuantities {
    let min_arrival = instance.trains.iter().map(|t| t.arrival.lo).min().unwrap_or(0);
    let max_departure = instance
        .trains
        .iter()
        .map(|t| t.departure.hi)
        .max()
        .unwrap_or(0);
    let makespan = if instance.trains.is_empty() {
        0
    } else {
        max_departure - min_arrival
    };
    let replica_count = match instance.period {
        Some(tau) if makespan > 0 => ((makespan + tau - 1) / tau).max(1) as u32,
        _ => 1,
    };

    let mut min_stay = Vec::with_capacity(instance.trains.len());
    let mut per_plan = Vec::with_capacity(instance.trains.len());
    let mut min_occupation = Vec::with_capacity(instance.trains.len());
    for t in &instance.trains {
        min_stay.push(t.departure.lo - t.arrival.hi);
        let mut plans = Vec::with_capacity(t.plans.len());
        for p in &t.plans {
            let mut occupation: BTreeMap<ResourceIdx, Ticks> = BTreeMap::new();
            let mut runs: BTreeMap<ResourceIdx, u32> = BTreeMap::new();
            for (j, op) in p.sequence.iter().enumerate() {
                let op = instance.operation(*op);
                for &s in &op.resources {
                    *occupation.entry(s).or_insert(0) += op.duration;
                    let continues_run = j > 0
                        && instance
                            .operation(p.sequence[j - 1])
                            .resources
                            .contains(&s);
                    if !continues_run {
                        *runs.entry(s).or_insert(0) += 1;
                    }
                }
            }
            for (s, count) in &runs {
                *occupation.get_mut(s).unwrap() += instance.epsilon * *count as Ticks;
            }
            plans.push(PlanOccupation {
                occupation,
                acquisition_runs: runs,
            });
        }
        // μ_s^t: min over plans; a plan that never touches s contributes 0.
        let mut touched: HashMap<ResourceIdx, Ticks> = HashMap::new();
        for po in &plans {
            for (&s, &mu) in &po.occupation {
                touched.entry(s).or_insert(mu);
            }
        }
        let mut mins: BTreeMap<ResourceIdx, Ticks> = BTreeMap::new();
        for (&s, _) in &touched {
            let mu = plans
                .iter()
                .map(|po| po.occupation.get(&s).copied().unwrap_or(0))
                .min()
                .unwrap_or(0);
            mins.insert(s, mu);
        }
        min_occupation.push(mins);
        per_plan.push(plans);
    }

    DerivedQuantities {
        makespan,
        replica_count,
        min_stay,
        per_plan,
        min_occupation,
        min_arrival,
        max_departure,
    }
}
