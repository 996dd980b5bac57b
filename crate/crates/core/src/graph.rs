//! The disjunctive graph: nodes for operations of (shrunk) per-train plan
//! DAGs, plus an origin node; length-weighted arcs encoding every temporal
//! constraint.
//!
//! Every arc `(tail, head)` with length `l` models `σ(head) ≥ σ(tail) + l`
//! when active. Negative lengths encode upper bounds (window arcs back to
//! the origin, backward arcs for maximum waits).
//!
//! Plans of one train that share a prefix or infix share nodes: a node is
//! identified by (train, operation, occurrence-within-plan), so two plans
//! `(α,u1,u2,u3,u5,δ)` and `(α,u1,u2,u4,u5,δ)` produce 7 nodes and 7
//! forward arcs rather than 12. Plans whose relative operation order cannot
//! be embedded in one acyclic DAG are rejected.
//!
//! Conflict tuples (one decidable disjunction between an operation and a
//! replica of a conflicting operation) are materialized separately by
//! [`build_conflict_tuples`], so the base graph stays immutable while the
//! solver grows its conflict pool lazily.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::instance::{
    DerivedQuantities, Instance, OpIdx, OpKind, ResourceIdx, TrainIdx, TrainStatus,
    UnavailabilityWindow,
};
use crate::time::{format_minutes, Ticks};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeIdx(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArcIdx(pub usize);

/// The origin node `o`, start of the time horizon; `σ(o) = 0`.
pub const ORIGIN: NodeIdx = NodeIdx(0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArcKind {
    StrictForward,
    StrictBackward,
    ArrivalWindow,
    DepartureWindow,
    AvailBefore,
    AvailAfter,
    AvailDuring,
}

impl ArcKind {
    pub fn label(self) -> &'static str {
        match self {
            ArcKind::StrictForward => "strict-forward",
            ArcKind::StrictBackward => "strict-backward",
            ArcKind::ArrivalWindow => "arrival-window",
            ArcKind::DepartureWindow => "departure-window",
            ArcKind::AvailBefore => "avail-before",
            ArcKind::AvailAfter => "avail-after",
            ArcKind::AvailDuring => "avail-during",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Node {
    /// Owning train; `None` only for the origin.
    pub owner: Option<TrainIdx>,
    pub op: Option<OpIdx>,
    /// How many times the operation occurred earlier in the same plan.
    pub occurrence: u32,
    /// Plan positions (within the owner train) containing this node.
    pub plans: BTreeSet<usize>,
}

#[derive(Debug, Clone)]
pub struct Arc {
    pub tail: NodeIdx,
    pub head: NodeIdx,
    pub length: Ticks,
    pub kind: ArcKind,
    /// For strict arcs: plan positions the arc belongs to.
    pub plans: BTreeSet<usize>,
    /// For unavailability arcs: the window repetition index `i`.
    pub avail_period: Option<i64>,
}

/// Per-train window arc handles (arrival lower/upper, departure lower/upper).
#[derive(Debug, Clone, Copy)]
pub struct WindowArcs {
    pub arrival_lo: ArcIdx,
    pub arrival_hi: ArcIdx,
    pub departure_lo: ArcIdx,
    pub departure_hi: ArcIdx,
}

impl WindowArcs {
    pub fn all(&self) -> [ArcIdx; 4] {
        [self.arrival_lo, self.arrival_hi, self.departure_lo, self.departure_hi]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvailChoice {
    Before,
    After,
    During,
}

/// Unavailability arcs for one (node, window) combination, per repetition.
#[derive(Debug, Clone)]
pub struct AvailGroup {
    pub node: NodeIdx,
    pub resource: ResourceIdx,
    pub window: UnavailabilityWindow,
    /// First repetition index (0 for windows that wrap the period start).
    pub first_period: i64,
    pub period_count: u32,
    /// `before[p][j]`: arc (Σ(u)[j], o) for repetition `first_period + p`.
    pub before: Vec<Vec<ArcIdx>>,
    /// `after[p]`: arc (o, u) for repetition `first_period + p`.
    pub after: Vec<ArcIdx>,
    /// `during[j]`: arc (u, Σ(u)[j]); shared across repetitions.
    pub during: Vec<ArcIdx>,
}

/// Time bounds `[lb, ub]` on a node's start time, valid whenever the node is
/// active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeBounds {
    pub lb: Ticks,
    pub ub: Ticks,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum GraphError {
    #[error("train `{train}`: plans impose contradictory operation orders; no acyclic per-train DAG exists")]
    PlanOrderConflict { train: String },
    #[error("operation `{op}` on resource `{resource}`: {detail}")]
    UnavailabilityAssumption {
        op: String,
        resource: String,
        detail: String,
    },
    #[error("fixed train `{train}` is infeasible: node for operation `{op}` has empty time bounds")]
    FixedTrainInfeasible { train: String, op: String },
}

#[derive(Debug, Clone)]
pub struct DisjunctiveGraph {
    pub nodes: Vec<Node>,
    pub arcs: Vec<Arc>,
    /// Nodes of each train, in creation order.
    pub train_nodes: Vec<Vec<NodeIdx>>,
    pub arrival_node: Vec<NodeIdx>,
    pub departure_node: Vec<NodeIdx>,
    pub window_arcs: Vec<WindowArcs>,
    /// Node path of each plan: `plan_paths[train][plan]`.
    pub plan_paths: Vec<Vec<Vec<NodeIdx>>>,
    /// Strict arcs of each plan: `plan_arcs[train][plan]`.
    pub plan_arcs: Vec<Vec<Vec<ArcIdx>>>,
    /// Σ(u): successors over strict-forward arcs, with the arc that realizes
    /// each, sorted by successor index.
    pub successors: Vec<Vec<(NodeIdx, ArcIdx)>>,
    /// Topological order of each train's DAG (forward arcs).
    pub topo_order: Vec<Vec<NodeIdx>>,
    pub avail_groups: Vec<AvailGroup>,
}

impl DisjunctiveGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_resources<'a>(&self, instance: &'a Instance, n: NodeIdx) -> &'a [ResourceIdx] {
        match self.nodes[n.0].op {
            Some(op) => &instance.operation(op).resources,
            None => &[],
        }
    }

    /// Successor of `n` along plan `plan` of its owner, if any.
    pub fn successor_in_plan(&self, n: NodeIdx, plan: usize) -> Option<NodeIdx> {
        let train = self.nodes[n.0].owner?;
        let path = &self.plan_paths[train.0][plan];
        let pos = path.iter().position(|&x| x == n)?;
        path.get(pos + 1).copied()
    }

    /// Plain-text edge list for diffing across runs.
    pub fn dump(&self, instance: &Instance) -> String {
        let mut out = String::new();
        for (i, n) in self.nodes.iter().enumerate() {
            match (n.owner, n.op) {
                (Some(t), Some(op)) => {
                    let plans: Vec<&str> = n
                        .plans
                        .iter()
                        .map(|&p| instance.trains[t.0].plans[p].id.as_str())
                        .collect();
                    out.push_str(&format!(
                        "node {i} train={} op={} occ={} plans={}\n",
                        instance.trains[t.0].id,
                        instance.operation(op).id,
                        n.occurrence,
                        plans.join(",")
                    ));
                }
                _ => out.push_str(&format!("node {i} origin\n")),
            }
        }
        for a in &self.arcs {
            out.push_str(&format!(
                "arc {} {} -> {} len={}",
                a.kind.label(),
                a.tail.0,
                a.head.0,
                a.length
            ));
            if let Some(p) = a.avail_period {
                out.push_str(&format!(" period={p}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Builds nodes, strict arcs (forward λ, backward −(λ+γ) where γ is finite)
/// and the four window arcs per train. Unavailability arcs are added
/// separately by [`build_unavailability_arcs`].
pub fn build_graph(instance: &Instance) -> Result<DisjunctiveGraph, GraphError> {
    let mut nodes = vec![Node {
        owner: None,
        op: None,
        occurrence: 0,
        plans: BTreeSet::new(),
    }];
    let mut arcs: Vec<Arc> = Vec::new();
    let mut train_nodes = Vec::new();
    let mut arrival_node = Vec::new();
    let mut departure_node = Vec::new();
    let mut window_arcs = Vec::new();
    let mut plan_paths = Vec::new();
    let mut plan_arcs = Vec::new();
    let mut topo_order = Vec::new();

    for (ti, train) in instance.trains.iter().enumerate() {
        let train_idx = TrainIdx(ti);
        let mut local: HashMap<(OpIdx, u32), NodeIdx> = HashMap::new();
        let mut my_nodes: Vec<NodeIdx> = Vec::new();
        let mut my_paths: Vec<Vec<NodeIdx>> = Vec::new();
        let mut arc_of: HashMap<(NodeIdx, NodeIdx, ArcKind), ArcIdx> = HashMap::new();
        let mut my_plan_arcs: Vec<Vec<ArcIdx>> = Vec::new();

        for (pi, plan) in train.plans.iter().enumerate() {
            let mut occurrence: HashMap<OpIdx, u32> = HashMap::new();
            let mut path = Vec::with_capacity(plan.sequence.len());
            for &op in &plan.sequence {
                let occ = occurrence.entry(op).or_insert(0);
                let key = (op, *occ);
                *occ += 1;
                let node = *local.entry(key).or_insert_with(|| {
                    let idx = NodeIdx(nodes.len());
                    nodes.push(Node {
                        owner: Some(train_idx),
                        op: Some(op),
                        occurrence: key.1,
                        plans: BTreeSet::new(),
                    });
                    my_nodes.push(idx);
                    idx
                });
                nodes[node.0].plans.insert(pi);
                path.push(node);
            }
            let mut this_plan_arcs = Vec::new();
            for w in path.windows(2) {
                let (tail, head) = (w[0], w[1]);
                let tail_op = instance.operation(nodes[tail.0].op.unwrap());
                let fwd = *arc_of.entry((tail, head, ArcKind::StrictForward)).or_insert_with(|| {
                    let idx = ArcIdx(arcs.len());
                    arcs.push(Arc {
                        tail,
                        head,
                        length: tail_op.duration,
                        kind: ArcKind::StrictForward,
                        plans: BTreeSet::new(),
                        avail_period: None,
                    });
                    idx
                });
                arcs[fwd.0].plans.insert(pi);
                this_plan_arcs.push(fwd);
                if let Some(gamma) = tail_op.max_wait {
                    let bwd = *arc_of
                        .entry((head, tail, ArcKind::StrictBackward))
                        .or_insert_with(|| {
                            let idx = ArcIdx(arcs.len());
                            arcs.push(Arc {
                                tail: head,
                                head: tail,
                                length: -(tail_op.duration + gamma),
                                kind: ArcKind::StrictBackward,
                                plans: BTreeSet::new(),
                                avail_period: None,
                            });
                            idx
                        });
                    arcs[bwd.0].plans.insert(pi);
                    this_plan_arcs.push(bwd);
                }
            }
            my_paths.push(path);
            my_plan_arcs.push(this_plan_arcs);
        }

        // Topological order over the train's forward arcs; rejects plans
        // whose orders contradict each other.
        let order = train_topo_order(&nodes, &arcs, &my_nodes).ok_or_else(|| {
            GraphError::PlanOrderConflict {
                train: train.id.clone(),
            }
        })?;

        let arr = my_paths[0][0];
        let dep = *my_paths[0].last().unwrap();
        let mut push_window = |tail: NodeIdx, head: NodeIdx, length: Ticks, kind: ArcKind| {
            let idx = ArcIdx(arcs.len());
            arcs.push(Arc {
                tail,
                head,
                length,
                kind,
                plans: BTreeSet::new(),
                avail_period: None,
            });
            idx
        };
        let wa = WindowArcs {
            arrival_lo: push_window(ORIGIN, arr, train.arrival.lo, ArcKind::ArrivalWindow),
            arrival_hi: push_window(arr, ORIGIN, -train.arrival.hi, ArcKind::ArrivalWindow),
            departure_lo: push_window(ORIGIN, dep, train.departure.lo, ArcKind::DepartureWindow),
            departure_hi: push_window(dep, ORIGIN, -train.departure.hi, ArcKind::DepartureWindow),
        };

        train_nodes.push(my_nodes);
        arrival_node.push(arr);
        departure_node.push(dep);
        window_arcs.push(wa);
        plan_paths.push(my_paths);
        plan_arcs.push(my_plan_arcs);
        topo_order.push(order);
    }

    let mut successors: Vec<Vec<(NodeIdx, ArcIdx)>> = vec![Vec::new(); nodes.len()];
    for (ai, a) in arcs.iter().enumerate() {
        if a.kind == ArcKind::StrictForward {
            successors[a.tail.0].push((a.head, ArcIdx(ai)));
        }
    }
    for s in &mut successors {
        s.sort();
    }

    Ok(DisjunctiveGraph {
        nodes,
        arcs,
        train_nodes,
        arrival_node,
        departure_node,
        window_arcs,
        plan_paths,
        plan_arcs,
        successors,
        topo_order,
        avail_groups: Vec::new(),
    })
}

fn train_topo_order(
    nodes: &[Node],
    arcs: &[Arc],
    members: &[NodeIdx],
) -> Option<Vec<NodeIdx>> {
    let set: BTreeSet<NodeIdx> = members.iter().copied().collect();
    let mut indegree: BTreeMap<NodeIdx, usize> = members.iter().map(|&n| (n, 0)).collect();
    let mut out: BTreeMap<NodeIdx, Vec<NodeIdx>> = BTreeMap::new();
    for a in arcs {
        if a.kind == ArcKind::StrictForward && set.contains(&a.tail) && set.contains(&a.head) {
            out.entry(a.tail).or_default().push(a.head);
            *indegree.get_mut(&a.head).unwrap() += 1;
        }
    }
    let mut ready: Vec<NodeIdx> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&n, _)| n)
        .collect();
    ready.sort();
    let mut order = Vec::with_capacity(members.len());
    let mut queue = std::collections::VecDeque::from(ready);
    while let Some(n) = queue.pop_front() {
        order.push(n);
        if let Some(heads) = out.get(&n) {
            for &h in heads {
                let d = indegree.get_mut(&h).unwrap();
                *d -= 1;
                if *d == 0 {
                    queue.push_back(h);
                }
            }
        }
    }
    let _ = nodes;
    if order.len() == members.len() {
        Some(order)
    } else {
        None
    }
}

/// An unordered pair of nodes whose operations share at least one resource.
/// `u == v` marks a self conflict: the node against its own later replicas
/// (relevant only when the replica count exceeds one).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictPair {
    pub u: NodeIdx,
    pub v: NodeIdx,
    pub shared_resources: Vec<ResourceIdx>,
}

/// All unordered node pairs with intersecting resource sets, including pairs
/// within the same train and self pairs.
pub fn enumerate_conflicts(graph: &DisjunctiveGraph, instance: &Instance) -> Vec<ConflictPair> {
    let with_resources: Vec<(NodeIdx, &[ResourceIdx])> = (1..graph.nodes.len())
        .map(NodeIdx)
        .map(|n| (n, graph.node_resources(instance, n)))
        .filter(|(_, rs)| !rs.is_empty())
        .collect();
    let mut pairs = Vec::new();
    for (i, &(u, ru)) in with_resources.iter().enumerate() {
        for &(v, rv) in &with_resources[i..] {
            let shared: Vec<ResourceIdx> =
                ru.iter().copied().filter(|r| rv.contains(r)).collect();
            if !shared.is_empty() {
                pairs.push(ConflictPair {
                    u,
                    v,
                    shared_resources: shared,
                });
            }
        }
    }
    pairs
}

/// Which periodic arc-length convention to apply.
///
/// `Derived` follows the difference-constraint semantics of the scheduling
/// arcs directly: precedence of `u` over `v^i` is the arc `(u′, v)` with
/// length `ε − (i−1)τ`. `PaperLiteral` flips the sign of every `(i−1)τ`
/// offset, matching the literature formulation verbatim; the two conventions
/// describe the same relation set with tuple labels mirrored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignConvention {
    #[default]
    Derived,
    PaperLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConflictRole {
    /// `(u′, v)`: active when the first-replica side precedes.
    PrecedenceFirst,
    /// `(v′, u)`: active when the shifted side precedes.
    PrecedenceShifted,
    /// `(u, v′)`: active when the pair meets.
    MeetingAtShifted,
    /// `(v, u′)`: active when the pair meets.
    MeetingAtFirst,
}

#[derive(Debug, Clone)]
pub struct ConflictArc {
    pub tail: NodeIdx,
    pub head: NodeIdx,
    pub length: Ticks,
    pub tuple: usize,
    pub role: ConflictRole,
    /// The Σ-member this arc is keyed on (the successor whose strict arc
    /// must be active for this arc to activate).
    pub successor: NodeIdx,
}

/// One decidable disjunction: the relation between the base replica of
/// `first` and the `replica`-th replica of `shifted`.
#[derive(Debug, Clone)]
pub struct ConflictTuple {
    pub pair: usize,
    pub first: NodeIdx,
    pub shifted: NodeIdx,
    /// Replica index `i ≥ 1`; the shifted side lives `(i−1)·τ` later.
    pub replica: u32,
    pub precedence_first: Vec<usize>,
    pub precedence_shifted: Vec<usize>,
    pub meeting: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct ConflictSet {
    pub pairs: Vec<ConflictPair>,
    pub tuples: Vec<ConflictTuple>,
    pub arcs: Vec<ConflictArc>,
    /// (first, shifted, replica) → tuple index.
    pub index: BTreeMap<(NodeIdx, NodeIdx, u32), usize>,
}

impl ConflictSet {
    /// Tuple deciding the relation between replica `i` of `a` and replica
    /// `j` of `b`; `None` for the degenerate same-replica self pair.
    pub fn tuple_for(&self, a: NodeIdx, i: u32, b: NodeIdx, j: u32) -> Option<usize> {
        let key = tuple_key(a, i, b, j)?;
        self.index.get(&key).copied()
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        for a in &self.arcs {
            let kind = match a.role {
                ConflictRole::PrecedenceFirst | ConflictRole::PrecedenceShifted => {
                    "conflict-precedence"
                }
                _ => "conflict-meeting",
            };
            out.push_str(&format!(
                "arc {kind} {} -> {} len={} tuple={}\n",
                a.tail.0, a.head.0, a.length, a.tuple
            ));
        }
        out
    }
}

/// Canonical tuple key for a pair of replicas: the earlier replica anchors
/// as `first`; a conflict between replica `i` of `a` and replica `j` of `b`
/// (`i < j`) is the conflict between the base replica of `a` and replica
/// `j − (i−1)` of `b`.
pub fn tuple_key(a: NodeIdx, i: u32, b: NodeIdx, j: u32) -> Option<(NodeIdx, NodeIdx, u32)> {
    if a == b && i == j {
        return None;
    }
    Some(if i == j {
        (a.min(b), a.max(b), 1)
    } else if i < j {
        (a, b, j - i + 1)
    } else {
        (b, a, i - j + 1)
    })
}

/// Materializes conflict tuples and their arcs for the given pairs:
/// `(u, v^i)` for `i = 1..k` and `(v, u^i)` for `i = 2..k` per proper pair,
/// `(u, u^i)` for `i = 2..k` per self pair.
pub fn build_conflict_tuples(
    graph: &DisjunctiveGraph,
    pairs: &[ConflictPair],
    replicas: u32,
    period: Option<Ticks>,
    epsilon: Ticks,
    convention: SignConvention,
) -> ConflictSet {
    let tau = period.unwrap_or(0);
    let mut set = ConflictSet {
        pairs: pairs.to_vec(),
        ..Default::default()
    };
    for (pi, pair) in pairs.iter().enumerate() {
        for i in 1..=replicas {
            if i == 1 && pair.u == pair.v {
                continue;
            }
            add_tuple(&mut set, graph, pi, pair.u, pair.v, i, tau, epsilon, convention);
            if i >= 2 && pair.u != pair.v {
                add_tuple(&mut set, graph, pi, pair.v, pair.u, i, tau, epsilon, convention);
            }
        }
    }
    set
}

#[allow(clippy::too_many_arguments)]
fn add_tuple(
    set: &mut ConflictSet,
    graph: &DisjunctiveGraph,
    pair: usize,
    first: NodeIdx,
    shifted: NodeIdx,
    replica: u32,
    tau: Ticks,
    epsilon: Ticks,
    convention: SignConvention,
) {
    let raw = (replica as Ticks - 1) * tau;
    let offset = match convention {
        SignConvention::Derived => raw,
        SignConvention::PaperLiteral => -raw,
    };
    let ti = set.tuples.len();
    let mut tuple = ConflictTuple {
        pair,
        first,
        shifted,
        replica,
        precedence_first: Vec::new(),
        precedence_shifted: Vec::new(),
        meeting: Vec::new(),
    };
    for &(succ, _) in &graph.successors[first.0] {
        tuple.precedence_first.push(set.arcs.len());
        set.arcs.push(ConflictArc {
            tail: succ,
            head: shifted,
            length: epsilon - offset,
            tuple: ti,
            role: ConflictRole::PrecedenceFirst,
            successor: succ,
        });
    }
    for &(succ, _) in &graph.successors[shifted.0] {
        tuple.precedence_shifted.push(set.arcs.len());
        set.arcs.push(ConflictArc {
            tail: succ,
            head: first,
            length: epsilon + offset,
            tuple: ti,
            role: ConflictRole::PrecedenceShifted,
            successor: succ,
        });
    }
    for &(succ, _) in &graph.successors[shifted.0] {
        tuple.meeting.push(set.arcs.len());
        set.arcs.push(ConflictArc {
            tail: first,
            head: succ,
            length: -epsilon - offset,
            tuple: ti,
            role: ConflictRole::MeetingAtShifted,
            successor: succ,
        });
    }
    for &(succ, _) in &graph.successors[first.0] {
        tuple.meeting.push(set.arcs.len());
        set.arcs.push(ConflictArc {
            tail: shifted,
            head: succ,
            length: -epsilon + offset,
            tuple: ti,
            role: ConflictRole::MeetingAtFirst,
            successor: succ,
        });
    }
    set.index.insert((first, shifted, replica), ti);
    set.tuples.push(tuple);
}

/// Adds unavailability arcs for every node requiring a resource with
/// windows, per window repetition covering the schedule horizon: before
/// arcs `(v, o)` of length `−(h + (i−1)τ)`, an after arc `(o, u)` of length
/// `h′ + (i−1)τ`, and during arcs `(u, v)` of length `λ_u + (h′ − h)`
/// shared across repetitions.
pub fn build_unavailability_arcs(
    graph: &mut DisjunctiveGraph,
    instance: &Instance,
    derived: &DerivedQuantities,
) -> Result<(), GraphError> {
    check_interruption_assumption(graph, instance)?;

    let horizon_end = derived.max_departure + instance.epsilon;
    let mut groups = Vec::new();
    for n in 1..graph.nodes.len() {
        let node = NodeIdx(n);
        let op_idx = graph.nodes[n].op.unwrap();
        let op = instance.operation(op_idx).clone();
        for &res in &op.resources {
            for &window in &instance.resource(res).unavailability {
                let (first_period, count) = match instance.period {
                    Some(tau) => repetition_range(window, tau, horizon_end),
                    None => (1, 1),
                };
                if count == 0 {
                    continue;
                }
                let tau = instance.period.unwrap_or(0);
                let succs: Vec<NodeIdx> =
                    graph.successors[n].iter().map(|&(s, _)| s).collect();
                let mut before = Vec::with_capacity(count as usize);
                let mut after = Vec::with_capacity(count as usize);
                for p in 0..count as i64 {
                    let i = first_period + p;
                    let shift = (i - 1) * tau;
                    let mut row = Vec::with_capacity(succs.len());
                    for &v in &succs {
                        row.push(push_avail_arc(
                            graph,
                            v,
                            ORIGIN,
                            -(window.start + shift),
                            ArcKind::AvailBefore,
                            i,
                        ));
                    }
                    before.push(row);
                    after.push(push_avail_arc(
                        graph,
                        ORIGIN,
                        node,
                        window.end + shift,
                        ArcKind::AvailAfter,
                        i,
                    ));
                }
                let mut during = Vec::with_capacity(succs.len());
                for &v in &succs {
                    during.push(push_avail_arc(
                        graph,
                        node,
                        v,
                        op.duration + window.len(),
                        ArcKind::AvailDuring,
                        first_period,
                    ));
                }
                groups.push(AvailGroup {
                    node,
                    resource: res,
                    window,
                    first_period,
                    period_count: count,
                    before,
                    after,
                    during,
                });
            }
        }
    }
    graph.avail_groups = groups;
    Ok(())
}

fn push_avail_arc(
    graph: &mut DisjunctiveGraph,
    tail: NodeIdx,
    head: NodeIdx,
    length: Ticks,
    kind: ArcKind,
    period: i64,
) -> ArcIdx {
    let idx = ArcIdx(graph.arcs.len());
    graph.arcs.push(Arc {
        tail,
        head,
        length,
        kind,
        plans: BTreeSet::new(),
        avail_period: Some(period),
    });
    idx
}

/// Window repetitions `[h + (i−1)τ, h′ + (i−1)τ)` intersecting
/// `[0, horizon_end)`. Wrapped windows (`h′ > τ`) get their `i = 0`
/// repetition, whose tail pokes into the first period.
fn repetition_range(window: UnavailabilityWindow, tau: Ticks, horizon_end: Ticks) -> (i64, u32) {
    let mut first = 1i64;
    while window.end + (first - 2) * tau > 0 {
        first -= 1;
    }
    let mut count = 0u32;
    let mut i = first;
    while window.start + (i - 1) * tau < horizon_end {
        count += 1;
        i += 1;
    }
    (first, count)
}

/// The one-interruption-per-period assumption: an operation's work must fit
/// between consecutive unavailability windows of its resources, else the
/// three-way before/after/during model cannot represent it.
fn check_interruption_assumption(
    graph: &DisjunctiveGraph,
    instance: &Instance,
) -> Result<(), GraphError> {
    let mut checked: BTreeSet<OpIdx> = BTreeSet::new();
    for n in 1..graph.nodes.len() {
        let op_idx = graph.nodes[n].op.unwrap();
        if !checked.insert(op_idx) {
            continue;
        }
        let op = instance.operation(op_idx);
        // Merge the windows of all resources of this operation into circle
        // (or line) segments, then check work length against the gaps.
        let mut segments: Vec<(Ticks, Ticks)> = Vec::new();
        let mut worst_resource = None;
        for &res in &op.resources {
            for w in &instance.resource(res).unavailability {
                segments.push((w.start, w.end));
                worst_resource.get_or_insert(res);
            }
        }
        if segments.is_empty() {
            continue;
        }
        segments.sort();
        // Windows of different resources may overlap on the period circle;
        // unroll three periods so cyclic adjacency merges correctly.
        let gaps: Vec<Ticks> = match instance.period {
            Some(tau) => {
                let mut unrolled: Vec<(Ticks, Ticks)> = Vec::new();
                for rep in 0..3 {
                    for &(s, e) in &segments {
                        unrolled.push((s + rep * tau, e + rep * tau));
                    }
                }
                unrolled.sort();
                let merged = merge_segments(&unrolled);
                let mut g = Vec::new();
                for pair in merged.windows(2) {
                    if pair[0].1 >= tau && pair[0].1 < 2 * tau {
                        g.push(pair[1].0 - pair[0].1);
                    }
                }
                if merged.len() == 1 && merged[0].1 - merged[0].0 >= 3 * tau {
                    g.push(0);
                }
                g
            }
            None => merge_segments(&segments)
                .windows(2)
                .map(|p| p[1].0 - p[0].1)
                .collect(),
        };
        if let Some(&min_gap) = gaps.iter().min() {
            if op.duration > min_gap {
                let res = worst_resource.unwrap();
                return Err(GraphError::UnavailabilityAssumption {
                    op: op.id.clone(),
                    resource: instance.resource(res).id.clone(),
                    detail: format!(
                        "duration {} min cannot complete between unavailability windows (gap {} min); more than one interruption would be needed",
                        format_minutes(op.duration),
                        format_minutes(min_gap)
                    ),
                });
            }
        }
    }
    Ok(())
}

fn merge_segments(sorted: &[(Ticks, Ticks)]) -> Vec<(Ticks, Ticks)> {
    let mut merged: Vec<(Ticks, Ticks)> = Vec::new();
    for &(s, e) in sorted {
        match merged.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    merged
}

/// Per-node `[lb, ub]` from window clipping tightened by forward/backward
/// propagation of λ and λ+γ along the plan DAGs. Fails when a node present
/// in every plan of a fixed train ends with empty bounds.
pub fn compute_node_bounds(
    graph: &DisjunctiveGraph,
    instance: &Instance,
) -> Result<Vec<NodeBounds>, GraphError> {
    let mut bounds = vec![NodeBounds { lb: 0, ub: 0 }; graph.nodes.len()];
    for (ti, train) in instance.trains.iter().enumerate() {
        let order = &graph.topo_order[ti];
        let pos: HashMap<NodeIdx, usize> =
            order.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let n = order.len();
        // Forward from the arrival node: shortest (λ) and longest (λ+γ).
        let mut fwd_min = vec![Ticks::MAX; n];
        let mut fwd_max: Vec<Option<Ticks>> = vec![Some(Ticks::MIN); n];
        let arr = graph.arrival_node[ti];
        fwd_min[pos[&arr]] = 0;
        fwd_max[pos[&arr]] = Some(0);
        for &u in order.iter() {
            let pu = pos[&u];
            if fwd_min[pu] == Ticks::MAX {
                continue;
            }
            let op = instance.operation(graph.nodes[u.0].op.unwrap());
            for &(v, _) in &graph.successors[u.0] {
                let pv = pos[&v];
                fwd_min[pv] = fwd_min[pv].min(fwd_min[pu] + op.duration);
                let step = op.max_wait.map(|g| op.duration + g);
                fwd_max[pv] = match (fwd_max[pv], fwd_max[pu], step) {
                    (None, _, _) | (_, None, _) | (_, _, None) => None,
                    (Some(cur), Some(base), Some(step)) => Some(cur.max(base + step)),
                };
            }
        }
        // Backward to the departure node.
        let mut bwd_min = vec![Ticks::MAX; n];
        let mut bwd_max: Vec<Option<Ticks>> = vec![Some(Ticks::MIN); n];
        let dep = graph.departure_node[ti];
        bwd_min[pos[&dep]] = 0;
        bwd_max[pos[&dep]] = Some(0);
        for &u in order.iter().rev() {
            let pu = pos[&u];
            let op = instance.operation(graph.nodes[u.0].op.unwrap());
            for &(v, _) in &graph.successors[u.0] {
                let pv = pos[&v];
                if bwd_min[pv] == Ticks::MAX {
                    continue;
                }
                bwd_min[pu] = bwd_min[pu].min(op.duration + bwd_min[pv]);
                let step = op.max_wait.map(|g| op.duration + g);
                bwd_max[pu] = match (bwd_max[pu], bwd_max[pv], step) {
                    (None, _, _) | (_, None, _) | (_, _, None) => None,
                    (Some(cur), Some(base), Some(step)) => Some(cur.max(base + step)),
                };
            }
        }
        for &u in order {
            let p = pos[&u];
            let mut lb = train.arrival.lo + if fwd_min[p] == Ticks::MAX { 0 } else { fwd_min[p] };
            if let Some(back) = bwd_max[p] {
                if back != Ticks::MIN {
                    lb = lb.max(train.departure.lo - back);
                }
            }
            let mut ub = train.departure.hi - if bwd_min[p] == Ticks::MAX { 0 } else { bwd_min[p] };
            if let Some(fm) = fwd_max[p] {
                if fm != Ticks::MIN {
                    ub = ub.min(train.arrival.hi + fm);
                }
            }
            bounds[u.0] = NodeBounds { lb, ub };
            if lb > ub
                && train.status == TrainStatus::Fixed
                && graph.nodes[u.0].plans.len() == train.plans.len()
            {
                return Err(GraphError::FixedTrainInfeasible {
                    train: train.id.clone(),
                    op: instance.operation(graph.nodes[u.0].op.unwrap()).id.clone(),
                });
            }
        }
    }
    Ok(bounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Operation, Plan, Resource, TimeWindow, TrainService};
    use crate::time::ticks_from_whole_minutes as min;

    fn marker(id: &str, kind: OpKind) -> Operation {
        Operation {
            id: id.into(),
            resources: vec![],
            duration: 0,
            max_wait: Some(0),
            kind,
        }
    }

    fn internal(id: &str, res: Vec<usize>, dur: Ticks, wait: Option<Ticks>) -> Operation {
        Operation {
            id: id.into(),
            resources: res.into_iter().map(ResourceIdx).collect(),
            duration: dur,
            max_wait: wait,
            kind: OpKind::Internal,
        }
    }

    fn resource(id: &str, cap: u32) -> Resource {
        Resource {
            id: id.into(),
            capacity: cap,
            counts_as_track: false,
            unavailability: vec![],
        }
    }

    #[test]
    fn strict_arcs_for_a_five_operation_plan() {
        // γ finite only for p(2): 4 forward arcs, 1 backward arc, 2+2
        // window arcs.
        let inst = Instance::new(
            vec![resource("s", 1)],
            vec![
                marker("arr", OpKind::Arrival),
                internal("m1", vec![0], min(10), None),
                internal("m2", vec![0], min(10), Some(min(5))),
                internal("m3", vec![0], min(10), None),
                marker("dep", OpKind::Departure),
            ],
            vec![TrainService {
                id: "t".into(),
                status: TrainStatus::Candidate,
                plans: vec![Plan {
                    id: "p".into(),
                    sequence: (0..5).map(OpIdx).collect(),
                }],
                arrival: TimeWindow { lo: 0, hi: min(60) },
                departure: TimeWindow { lo: min(60), hi: min(200) },
            }],
            Some(min(1440)),
            1,
            1000,
        )
        .unwrap();
        let g = build_graph(&inst).unwrap();
        let fwd = g.arcs.iter().filter(|a| a.kind == ArcKind::StrictForward).count();
        let arr_w = g.arcs.iter().filter(|a| a.kind == ArcKind::ArrivalWindow).count();
        let dep_w = g.arcs.iter().filter(|a| a.kind == ArcKind::DepartureWindow).count();
        assert_eq!((fwd, arr_w, dep_w), (4, 2, 2));
        // Unbounded γ omits the backward arc; m2's finite wait yields one of
        // length −(λ+γ), and the arrival's zero wait pins its follower.
        let bwd: Vec<&Arc> = g
            .arcs
            .iter()
            .filter(|a| a.kind == ArcKind::StrictBackward)
            .collect();
        assert_eq!(bwd.len(), 2);
        assert!(bwd.iter().any(|a| a.length == -(min(10) + min(5))));
        assert!(bwd.iter().any(|a| a.length == 0));
    }

    fn two_plan_instance() -> Instance {
        // p1 = (α,u1,u2,u3,u5,δ), p2 = (α,u1,u2,u4,u5,δ).
        Instance::new(
            vec![resource("s", 2)],
            vec![
                marker("arr", OpKind::Arrival),
                internal("u1", vec![0], min(5), None),
                internal("u2", vec![0], min(5), None),
                internal("u3", vec![0], min(5), None),
                internal("u4", vec![0], min(5), None),
                internal("u5", vec![0], min(5), None),
                marker("dep", OpKind::Departure),
            ],
            vec![TrainService {
                id: "t".into(),
                status: TrainStatus::Candidate,
                plans: vec![
                    Plan {
                        id: "p1".into(),
                        sequence: vec![OpIdx(0), OpIdx(1), OpIdx(2), OpIdx(3), OpIdx(5), OpIdx(6)],
                    },
                    Plan {
                        id: "p2".into(),
                        sequence: vec![OpIdx(0), OpIdx(1), OpIdx(2), OpIdx(4), OpIdx(5), OpIdx(6)],
                    },
                ],
                arrival: TimeWindow { lo: 0, hi: min(60) },
                departure: TimeWindow { lo: min(60), hi: min(300) },
            }],
            Some(min(1440)),
            1,
            1000,
        )
        .unwrap()
    }

    #[test]
    fn shared_prefix_plans_shrink() {
        // 7 shared-or-branching forward arcs over 7 nodes, not 12.
        let g = build_graph(&two_plan_instance()).unwrap();
        assert_eq!(g.nodes.len(), 1 + 7);
        let fwd = g.arcs.iter().filter(|a| a.kind == ArcKind::StrictForward).count();
        assert_eq!(fwd, 7);
        // u2 branches: Σ(u2) = {u3, u4}.
        let u2 = g.plan_paths[0][0][2];
        assert_eq!(g.successors[u2.0].len(), 2);
    }

    #[test]
    fn contradictory_plan_orders_are_rejected() {
        let mut inst = two_plan_instance();
        // p2 now visits u3 before u2 while p1 visits u2 before u3.
        inst.trains[0].plans[1].sequence =
            vec![OpIdx(0), OpIdx(1), OpIdx(3), OpIdx(2), OpIdx(5), OpIdx(6)];
        let err = build_graph(&inst).unwrap_err();
        assert!(matches!(err, GraphError::PlanOrderConflict { .. }));
    }

    #[test]
    fn conflicts_include_same_train_and_self_pairs() {
        let inst = two_plan_instance();
        let g = build_graph(&inst).unwrap();
        let pairs = enumerate_conflicts(&g, &inst);
        // 5 internal nodes all on resource s: C(5,2) proper pairs + 5 self.
        assert_eq!(pairs.len(), 10 + 5);
        assert!(pairs.iter().any(|p| p.u == p.v));
        let distinct_same_train = pairs.iter().filter(|p| p.u != p.v).count();
        assert_eq!(distinct_same_train, 10);
    }

    #[test]
    fn disjoint_footprints_have_no_conflicts() {
        let mut inst = two_plan_instance();
        inst.resources.push(resource("s2", 1));
        inst.operations[3].resources = vec![ResourceIdx(1)];
        let g = build_graph(&inst).unwrap();
        let pairs = enumerate_conflicts(&g, &inst);
        assert!(pairs
            .iter()
            .all(|p| !(p.shared_resources.is_empty())));
        // u3 (on s2) conflicts only with itself.
        let u3 = g.plan_paths[0][0][3];
        let u3_pairs: Vec<_> = pairs.iter().filter(|p| p.u == u3 || p.v == u3).collect();
        assert_eq!(u3_pairs.len(), 1);
        assert_eq!(u3_pairs[0].u, u3_pairs[0].v);
    }

    #[test]
    fn k1_tuple_has_four_epsilon_arcs() {
        // k = 1, single-successor nodes → exactly 4 arcs with lengths
        // +ε, +ε, −ε, −ε.
        let inst = Instance::new(
            vec![resource("s", 1)],
            vec![
                marker("arr", OpKind::Arrival),
                internal("m", vec![0], min(10), None),
                marker("dep", OpKind::Departure),
            ],
            vec![
                TrainService {
                    id: "a".into(),
                    status: TrainStatus::Candidate,
                    plans: vec![Plan { id: "p".into(), sequence: vec![OpIdx(0), OpIdx(1), OpIdx(2)] }],
                    arrival: TimeWindow { lo: 0, hi: min(30) },
                    departure: TimeWindow { lo: min(30), hi: min(100) },
                },
                TrainService {
                    id: "b".into(),
                    status: TrainStatus::Candidate,
                    plans: vec![Plan { id: "p".into(), sequence: vec![OpIdx(0), OpIdx(1), OpIdx(2)] }],
                    arrival: TimeWindow { lo: 0, hi: min(30) },
                    departure: TimeWindow { lo: min(30), hi: min(100) },
                },
            ],
            Some(min(1440)),
            1,
            1000,
        )
        .unwrap();
        let g = build_graph(&inst).unwrap();
        let pairs = enumerate_conflicts(&g, &inst);
        let proper: Vec<ConflictPair> =
            pairs.iter().filter(|p| p.u != p.v).cloned().collect();
        assert_eq!(proper.len(), 1);
        let set = build_conflict_tuples(&g, &proper, 1, inst.period, inst.epsilon, SignConvention::Derived);
        assert_eq!(set.tuples.len(), 1);
        assert_eq!(set.arcs.len(), 4);
        let mut lens: Vec<Ticks> = set.arcs.iter().map(|a| a.length).collect();
        lens.sort();
        assert_eq!(lens, vec![-1, -1, 1, 1]);
    }

    #[test]
    fn k2_pair_yields_three_tuples() {
        let inst = two_plan_instance();
        let g = build_graph(&inst).unwrap();
        let u = g.plan_paths[0][0][1];
        let v = g.plan_paths[0][0][2];
        let pair = ConflictPair { u, v, shared_resources: vec![ResourceIdx(0)] };
        let set = build_conflict_tuples(&g, &[pair], 2, inst.period, inst.epsilon, SignConvention::Derived);
        assert_eq!(set.tuples.len(), 3);
        let keys: Vec<(NodeIdx, NodeIdx, u32)> =
            set.tuples.iter().map(|t| (t.first, t.shifted, t.replica)).collect();
        assert_eq!(keys, vec![(u, v, 1), (u, v, 2), (v, u, 2)]);
    }

    #[test]
    fn tuple_arc_counts_follow_successor_sets() {
        // Per tuple: |Σ(u)| + |Σ(v)| precedence arcs and as many meeting arcs.
        let inst = two_plan_instance();
        let g = build_graph(&inst).unwrap();
        let pairs = enumerate_conflicts(&g, &inst);
        let set = build_conflict_tuples(&g, &pairs, 2, inst.period, inst.epsilon, SignConvention::Derived);
        for t in &set.tuples {
            let su = g.successors[t.first.0].len();
            let sv = g.successors[t.shifted.0].len();
            assert_eq!(t.precedence_first.len(), su);
            assert_eq!(t.precedence_shifted.len(), sv);
            assert_eq!(t.meeting.len(), su + sv);
        }
        // Proper pairs carry 2k−1 tuples, self pairs k−1.
        for (pi, p) in set.pairs.iter().enumerate() {
            let count = set.tuples.iter().filter(|t| t.pair == pi).count();
            if p.u == p.v {
                assert_eq!(count, 1);
            } else {
                assert_eq!(count, 3);
            }
        }
    }

    #[test]
    fn replica_conflict_reduces_to_first_replica_anchor() {
        // Replica 2 of t against replica 3 of t′ → anchored at t's base
        // replica with index j−(i−1) = 2.
        let a = NodeIdx(3);
        let b = NodeIdx(7);
        assert_eq!(tuple_key(a, 2, b, 3), Some((a, b, 2)));
        assert_eq!(tuple_key(a, 3, b, 2), Some((b, a, 2)));
        assert_eq!(tuple_key(a, 2, a, 2), None);
        assert_eq!(tuple_key(b, 1, a, 1), Some((a, b, 1)));
    }

    #[test]
    fn periodic_offsets_follow_the_derived_convention() {
        let inst = two_plan_instance();
        let g = build_graph(&inst).unwrap();
        let u = g.plan_paths[0][0][1];
        let v = g.plan_paths[0][0][2];
        let pair = ConflictPair { u, v, shared_resources: vec![ResourceIdx(0)] };
        let tau = inst.period.unwrap();
        let eps = inst.epsilon;
        let set = build_conflict_tuples(&g, std::slice::from_ref(&pair), 2, inst.period, eps, SignConvention::Derived);
        let t2 = &set.tuples[set.index[&(u, v, 2)]];
        let pf = &set.arcs[t2.precedence_first[0]];
        assert_eq!(pf.length, eps - tau);
        let ps = &set.arcs[t2.precedence_shifted[0]];
        assert_eq!(ps.length, eps + tau);
        // Paper-literal flips the periodic offset sign.
        let lit = build_conflict_tuples(&g, std::slice::from_ref(&pair), 2, inst.period, eps, SignConvention::PaperLiteral);
        let t2 = &lit.tuples[lit.index[&(u, v, 2)]];
        assert_eq!(lit.arcs[t2.precedence_first[0]].length, eps + tau);
        assert_eq!(lit.arcs[t2.precedence_shifted[0]].length, eps - tau);
    }

    fn night_shift_instance(k_span: Ticks) -> Instance {
        Instance::new(
            vec![Resource {
                id: "rs".into(),
                capacity: 1,
                counts_as_track: false,
                unavailability: vec![UnavailabilityWindow {
                    start: min(1380),
                    end: min(1740),
                }],
            }],
            vec![
                marker("arr", OpKind::Arrival),
                internal("work", vec![0], min(120), None),
                marker("dep", OpKind::Departure),
            ],
            vec![TrainService {
                id: "t".into(),
                status: TrainStatus::Candidate,
                plans: vec![Plan { id: "p".into(), sequence: vec![OpIdx(0), OpIdx(1), OpIdx(2)] }],
                arrival: TimeWindow { lo: 0, hi: min(600) },
                departure: TimeWindow { lo: min(600), hi: k_span },
            }],
            Some(min(1440)),
            1,
            1000,
        )
        .unwrap()
    }

    #[test]
    fn night_shift_arcs_cover_the_wrapped_window() {
        // Reach-stacker shift 23:00–05:00 next day, k = 1, single successor:
        // the i = 1 repetition carries (v,o) length −1380 min, (o,u) length
        // 1740 min, (u,v) length λ + 360 min; the i = 0 repetition covers
        // the 00:00–05:00 stretch of the first period.
        let inst = night_shift_instance(min(1400));
        let derived = compute_derived_for(&inst);
        assert_eq!(derived.replica_count, 1);
        let mut g = build_graph(&inst).unwrap();
        build_unavailability_arcs(&mut g, &inst, &derived).unwrap();
        assert_eq!(g.avail_groups.len(), 1);
        let grp = &g.avail_groups[0];
        assert_eq!(grp.first_period, 0);
        assert_eq!(grp.period_count, 2);
        let i1 = (1 - grp.first_period) as usize;
        assert_eq!(g.arcs[grp.before[i1][0].0].length, -min(1380));
        assert_eq!(g.arcs[grp.after[i1].0].length, min(1740));
        assert_eq!(g.arcs[grp.during[0].0].length, min(120) + min(360));
        // i = 0: after-arc at 05:00 of the first period.
        assert_eq!(g.arcs[grp.after[0].0].length, min(300));
    }

    #[test]
    fn unaffected_operations_get_no_avail_arcs() {
        let mut inst = night_shift_instance(min(1400));
        inst.resources[0].unavailability.clear();
        inst.resources.push(Resource {
            id: "other".into(),
            capacity: 1,
            counts_as_track: false,
            unavailability: vec![UnavailabilityWindow { start: 0, end: min(60) }],
        });
        let derived = compute_derived_for(&inst);
        let mut g = build_graph(&inst).unwrap();
        build_unavailability_arcs(&mut g, &inst, &derived).unwrap();
        assert!(g.avail_groups.is_empty());
    }

    #[test]
    fn avail_arc_counts_scale_with_replicas() {
        // k = 2 → before/after arc counts double, with (i−1)τ offsets.
        let inst = night_shift_instance(min(2860));
        let derived = compute_derived_for(&inst);
        assert_eq!(derived.replica_count, 2);
        let mut g = build_graph(&inst).unwrap();
        build_unavailability_arcs(&mut g, &inst, &derived).unwrap();
        let grp = &g.avail_groups[0];
        assert_eq!(grp.period_count, 3); // i = 0, 1, 2
        let i2 = (2 - grp.first_period) as usize;
        assert_eq!(g.arcs[grp.before[i2][0].0].length, -(min(1380) + min(1440)));
        assert_eq!(g.arcs[grp.after[i2].0].length, min(1740) + min(1440));
        assert_eq!(grp.during.len(), 1);
    }

    #[test]
    fn double_interruption_is_rejected() {
        let mut inst = night_shift_instance(min(1400));
        // Work longer than the gap between window repetitions (1080 min).
        inst.operations[1].duration = min(1100);
        inst.epsilon = 1;
        let derived = compute_derived_for(&inst);
        let mut g = build_graph(&inst).unwrap();
        let err = build_unavailability_arcs(&mut g, &inst, &derived).unwrap_err();
        assert!(matches!(err, GraphError::UnavailabilityAssumption { .. }));
    }

    fn compute_derived_for(inst: &Instance) -> DerivedQuantities {
        crate::instance::compute_derived(inst)
    }

    #[test]
    fn bounds_clip_to_windows() {
        let inst = two_plan_instance();
        let g = build_graph(&inst).unwrap();
        let b = compute_node_bounds(&g, &inst).unwrap();
        for &n in &g.train_nodes[0] {
            assert!(b[n.0].lb >= inst.trains[0].arrival.lo);
            assert!(b[n.0].ub <= inst.trains[0].departure.hi);
        }
        assert_eq!(b[ORIGIN.0], NodeBounds { lb: 0, ub: 0 });
    }

    #[test]
    fn zero_wait_after_arrival_pins_the_second_operation() {
        // γ_α = 0 → the operation after arrival starts at the arrival
        // instant: lb = a̲ and ub = ā.
        let inst = two_plan_instance();
        let g = build_graph(&inst).unwrap();
        let b = compute_node_bounds(&g, &inst).unwrap();
        let u1 = g.plan_paths[0][0][1];
        assert_eq!(b[u1.0].lb, inst.trains[0].arrival.lo);
        assert_eq!(b[u1.0].ub, inst.trains[0].arrival.hi);
    }

    #[test]
    fn forward_duration_chain_tightens_lower_bounds() {
        // Chain with λ = (0, 30, 45): lb of the third node is a̲ + 30.
        let inst = Instance::new(
            vec![resource("s", 1)],
            vec![
                marker("arr", OpKind::Arrival),
                internal("m1", vec![0], min(30), None),
                internal("m2", vec![0], min(45), None),
                marker("dep", OpKind::Departure),
            ],
            vec![TrainService {
                id: "t".into(),
                status: TrainStatus::Candidate,
                plans: vec![Plan { id: "p".into(), sequence: vec![OpIdx(0), OpIdx(1), OpIdx(2), OpIdx(3)] }],
                arrival: TimeWindow { lo: min(100), hi: min(160) },
                departure: TimeWindow { lo: min(200), hi: min(400) },
            }],
            Some(min(1440)),
            1,
            1000,
        )
        .unwrap();
        let g = build_graph(&inst).unwrap();
        let b = compute_node_bounds(&g, &inst).unwrap();
        let third = g.plan_paths[0][0][2];
        assert_eq!(b[third.0].lb, min(100) + min(30));
    }

    #[test]
    fn infeasible_fixed_train_is_reported() {
        let inst = Instance::new(
            vec![resource("s", 1)],
            vec![
                marker("arr", OpKind::Arrival),
                internal("m", vec![0], min(120), None),
                marker("dep", OpKind::Departure),
            ],
            vec![TrainService {
                id: "t".into(),
                status: TrainStatus::Fixed,
                plans: vec![Plan { id: "p".into(), sequence: vec![OpIdx(0), OpIdx(1), OpIdx(2)] }],
                arrival: TimeWindow::singleton(min(100)),
                // Departs before the work can complete.
                departure: TimeWindow::singleton(min(150)),
            }],
            Some(min(1440)),
            1,
            1000,
        )
        .unwrap();
        let g = build_graph(&inst).unwrap();
        let err = compute_node_bounds(&g, &inst).unwrap_err();
        assert!(matches!(err, GraphError::FixedTrainInfeasible { .. }));
    }

    #[test]
    fn rebuilding_the_graph_is_identical() {
        let inst = two_plan_instance();
        let g1 = build_graph(&inst).unwrap();
        let g2 = build_graph(&inst).unwrap();
        assert_eq!(g1.dump(&inst), g2.dump(&inst));
    }
}
