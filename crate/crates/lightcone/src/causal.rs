//! Happened-before machinery over simulation events.
//!
//! The graph has three edge sources, mirroring the classic construction:
//! program order at each exchange (rule 1), message edges from each emission
//! to its SIP arrival (rule 2), and transitive closure on queries (rule 3).
//! SIP arrivals are events at the SIP and are program-ordered among themselves
//! by arrival time — that ordering *is* the arrival-order convention, made
//! explicit as graph structure.
//!
//! Every message edge is validated against the light cone at construction:
//! `receive.t − send.t ≥ |Δx|/c`. A graph that builds is therefore isomorphic
//! to a causal set in Minkowski spacetime, and no sub-luminal frame change can
//! reorder any of its edges — which is what [`CausalGraph::consistency_check`]
//! verifies by brute force.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::sip::ArrivalRecord;
use crate::quotes::QuoteUpdate;
use crate::spacetime::{boost_event, light_time_us, LorentzBoost, SpacetimeEvent, Vec3};

/// Process name assigned to SIP arrival events.
pub const SIP_PROCESS: &str = "sip";

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum CausalError {
    #[error("event id `{0}` not in graph")]
    UnknownId(String),
    #[error(
        "superluminal message edge {from}->{to}: Δt = {dt_us} µs but light needs {light_us} µs"
    )]
    SuperluminalEdge { from: String, to: String, dt_us: f64, light_us: f64 },
    #[error("cycle detected involving event `{0}`")]
    CycleDetected(String),
    #[error("duplicate event id `{0}` in graph construction")]
    DuplicateId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Program,
    Message,
}

impl std::fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EdgeKind::Program => write!(f, "program"),
            EdgeKind::Message => write!(f, "message"),
        }
    }
}

/// Immutable happened-before graph over emission and arrival events.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalGraph {
    ids: Vec<String>,
    index: BTreeMap<String, usize>,
    events: Vec<SpacetimeEvent>,
    process: Vec<String>,
    adj: Vec<Vec<usize>>,
    edges: Vec<(usize, usize, EdgeKind)>,
}

/// One frame-change order violation found by [`CausalGraph::consistency_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderViolation {
    pub from: String,
    pub to: String,
    pub boost_beta: f64,
    pub t_prime_from: f64,
    pub t_prime_to: f64,
}

/// Result of checking every edge against every supplied boost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub edges_checked: usize,
    pub boosts_checked: usize,
    pub violations: Vec<OrderViolation>,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Build the happened-before graph for delivered quotes.
///
/// Events: one per quote emission (the quote's own event id) plus one per SIP
/// arrival (id `{quote id}@sip`, at `sip_position`). Message edges respect the
/// light cone or construction fails — a superluminal edge means the delivery
/// pipeline upstream is broken.
pub fn build_causal_graph(
    quotes: &[QuoteUpdate],
    arrivals: &[ArrivalRecord],
    sip_position: Vec3,
) -> Result<CausalGraph, CausalError> {
    let mut ids = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut events = Vec::new();
    let mut process = Vec::new();

    let mut add = |id: String, event: SpacetimeEvent, proc: String| -> Result<usize, CausalError> {
        if index.contains_key(&id) {
            return Err(CausalError::DuplicateId(id));
        }
        let idx = ids.len();
        index.insert(id.clone(), idx);
        ids.push(id);
        events.push(event);
        process.push(proc);
        Ok(idx)
    };

    // Emission events, program-ordered per exchange.
    let mut per_exchange: BTreeMap<&str, Vec<(f64, usize)>> = BTreeMap::new();
    for q in quotes {
        let idx = add(q.event.id.clone(), q.event.clone(), q.exchange_id.clone())?;
        per_exchange
            .entry(q.exchange_id.as_str())
            .or_default()
            .push((q.event.t_us, idx));
    }

    // Arrival events at the SIP, program-ordered by arrival (deliver's order).
    let mut arrival_indices = Vec::new();
    for a in arrivals {
        let id = format!("{}@sip", a.quote.event.id);
        let event = SpacetimeEvent {
            id: id.clone(),
            position: sip_position,
            t_us: a.arrival_time_us,
        };
        let idx = add(id, event, SIP_PROCESS.to_string())?;
        arrival_indices.push((a.quote.event.id.clone(), idx));
    }

    let mut adj = vec![Vec::new(); ids.len()];
    let mut edges = Vec::new();
    let mut push_edge = |adj: &mut Vec<Vec<usize>>, from: usize, to: usize, kind: EdgeKind| {
        adj[from].push(to);
        edges.push((from, to, kind));
    };

    for chain in per_exchange.values_mut() {
        chain.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in chain.windows(2) {
            push_edge(&mut adj, pair[0].1, pair[1].1, EdgeKind::Program);
        }
    }
    for pair in arrival_indices.windows(2) {
        push_edge(&mut adj, pair[0].1, pair[1].1, EdgeKind::Program);
    }

    // Message edges: emission -> its own arrival, light-cone checked.
    for (emit_id, arrival_idx) in &arrival_indices {
        let emit_idx = *index
            .get(emit_id)
            .ok_or_else(|| CausalError::UnknownId(emit_id.clone()))?;
        let send = &events[emit_idx];
        let recv = &events[*arrival_idx];
        let dt = recv.t_us - send.t_us;
        let light = light_time_us((recv.position - send.position).norm());
        if dt < light * (1.0 - 1e-12) {
            return Err(CausalError::SuperluminalEdge {
                from: send.id.clone(),
                to: recv.id.clone(),
                dt_us: dt,
                light_us: light,
            });
        }
        push_edge(&mut adj, emit_idx, *arrival_idx, EdgeKind::Message);
    }

    let graph = CausalGraph { ids, index, events, process, adj, edges };
    debug_assert!(graph.topological_order().is_ok());
    Ok(graph)
}

impl CausalGraph {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn event_ids(&self) -> impl Iterator<Item = &str> {
        self.ids.iter().map(String::as_str)
    }

    pub fn event(&self, id: &str) -> Result<&SpacetimeEvent, CausalError> {
        let idx = self.resolve(id)?;
        Ok(&self.events[idx])
    }

    pub fn process_of(&self, id: &str) -> Result<&str, CausalError> {
        let idx = self.resolve(id)?;
        Ok(&self.process[idx])
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, EdgeKind)> {
        self.edges
            .iter()
            .map(|&(f, t, k)| (self.ids[f].as_str(), self.ids[t].as_str(), k))
    }

    fn resolve(&self, id: &str) -> Result<usize, CausalError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| CausalError::UnknownId(id.to_string()))
    }

    /// True iff `b` is reachable from `a` through program and message edges.
    /// Irreflexive: an event does not happen before itself.
    pub fn happened_before(&self, a: &str, b: &str) -> Result<bool, CausalError> {
        let start = self.resolve(a)?;
        let goal = self.resolve(b)?;
        if start == goal {
            return Ok(false);
        }
        let mut seen = vec![false; self.ids.len()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(n) = stack.pop() {
            for &next in &self.adj[n] {
                if next == goal {
                    return Ok(true);
                }
                if !seen[next] {
                    seen[next] = true;
                    stack.push(next);
                }
            }
        }
        Ok(false)
    }

    /// True iff neither event happened before the other.
    pub fn concurrent(&self, a: &str, b: &str) -> Result<bool, CausalError> {
        if a == b {
            // Degenerate case; an event is never concurrent with itself.
            self.resolve(a)?;
            return Ok(false);
        }
        Ok(!self.happened_before(a, b)? && !self.happened_before(b, a)?)
    }

    fn topological_order(&self) -> Result<Vec<usize>, CausalError> {
        let mut indegree = vec![0usize; self.ids.len()];
        for &(_, to, _) in &self.edges {
            indegree[to] += 1;
        }
        let mut ready: Vec<usize> =
            (0..self.ids.len()).filter(|&i| indegree[i] == 0).collect();
        ready.reverse();
        let mut order = Vec::with_capacity(self.ids.len());
        while let Some(n) = ready.pop() {
            order.push(n);
            for &next in &self.adj[n] {
                indegree[next] -= 1;
                if indegree[next] == 0 {
                    ready.push(next);
                }
            }
        }
        if order.len() != self.ids.len() {
            let stuck = (0..self.ids.len())
                .find(|&i| indegree[i] > 0)
                .map(|i| self.ids[i].clone())
                .unwrap_or_default();
            return Err(CausalError::CycleDetected(stuck));
        }
        Ok(order)
    }

    /// Assign logical clocks: `C(e) = 1 + max C(predecessors)`.
    ///
    /// Satisfies the clock condition (`a → b ⟹ C(a) < C(b)`); the converse is
    /// intentionally not implied. Deterministic for any graph.
    pub fn lamport_clocks(&self) -> Result<BTreeMap<String, u64>, CausalError> {
        let order = self.topological_order()?;
        let mut clock = vec![1u64; self.ids.len()];
        for &n in &order {
            for &next in &self.adj[n] {
                clock[next] = clock[next].max(clock[n] + 1);
            }
        }
        Ok(self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), clock[i]))
            .collect())
    }

    /// Check that no supplied frame change reorders any edge.
    ///
    /// Edges between distinct spacetime points require strictly preserved
    /// order (`t'_from < t'_to`); an edge joining coincident points (same
    /// position, same time — possible only between exactly tied SIP arrivals)
    /// transforms to coincident points in every frame and passes vacuously.
    pub fn consistency_check(&self, boosts: &[LorentzBoost]) -> ConsistencyReport {
        let mut violations = Vec::new();
        for boost in boosts {
            for &(from, to, _) in &self.edges {
                let a = &self.events[from];
                let b = &self.events[to];
                if a.t_us == b.t_us && a.position == b.position {
                    continue;
                }
                let ta = boost_event(boost, a).t_us;
                let tb = boost_event(boost, b).t_us;
                if ta >= tb {
                    violations.push(OrderViolation {
                        from: self.ids[from].clone(),
                        to: self.ids[to].clone(),
                        boost_beta: boost.beta(),
                        t_prime_from: ta,
                        t_prime_to: tb,
                    });
                }
            }
        }
        ConsistencyReport {
            edges_checked: self.edges.len(),
            boosts_checked: boosts.len(),
            violations,
        }
    }

    /// Edge-list export: one `from_id,to_id,kind` line per edge.
    pub fn export_edge_list(&self) -> String {
        let mut out = String::new();
        for (from, to, kind) in self.edges() {
            out.push_str(from);
            out.push(',');
            out.push_str(to);
            out.push(',');
            out.push_str(&kind.to_string());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quotes::{order_flip_fixture, order_flip_network, QuoteUpdate, Side};
    use crate::sip::deliver;
    use crate::spacetime::Vec3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn fixture_graph() -> CausalGraph {
        let quotes = order_flip_fixture();
        let network = order_flip_network();
        let arrivals = deliver(&quotes, &network).unwrap();
        build_causal_graph(&quotes, &arrivals, network.sip_position()).unwrap()
    }

    #[test]
    fn fixture_graph_shape() {
        let g = fixture_graph();
        assert_eq!(g.len(), 4);
        let message_edges =
            g.edges().filter(|(_, _, k)| *k == EdgeKind::Message).count();
        let program_edges =
            g.edges().filter(|(_, _, k)| *k == EdgeKind::Program).count();
        assert_eq!(message_edges, 2);
        assert_eq!(program_edges, 1, "one program edge between the two SIP arrivals");
        assert_eq!(g.process_of("alpha@sip").unwrap(), SIP_PROCESS);
    }

    #[test]
    fn empty_input_empty_graph() {
        let g = build_causal_graph(&[], &[], Vec3::ZERO).unwrap();
        assert!(g.is_empty());
        assert_eq!(g.edge_count(), 0);
        assert!(g.lamport_clocks().unwrap().is_empty());
    }

    #[test]
    fn single_quote_two_events_one_edge() {
        let network = order_flip_network();
        let quotes: Vec<QuoteUpdate> =
            order_flip_fixture().into_iter().filter(|q| q.event.id == "beta").collect();
        let arrivals = deliver(&quotes, &network).unwrap();
        let g = build_causal_graph(&quotes, &arrivals, network.sip_position()).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn emission_happens_before_own_arrival() {
        let g = fixture_graph();
        assert!(g.happened_before("alpha", "alpha@sip").unwrap());
        assert!(!g.happened_before("alpha@sip", "alpha").unwrap());
    }

    #[test]
    fn spacelike_emissions_unordered_and_concurrent() {
        let g = fixture_graph();
        assert!(!g.happened_before("alpha", "beta").unwrap());
        assert!(!g.happened_before("beta", "alpha").unwrap());
        assert!(g.concurrent("alpha", "beta").unwrap());
    }

    #[test]
    fn happened_before_is_irreflexive() {
        let g = fixture_graph();
        assert!(!g.happened_before("alpha", "alpha").unwrap());
        assert!(!g.concurrent("alpha", "alpha").unwrap());
    }

    #[test]
    fn event_not_concurrent_with_own_arrival() {
        let g = fixture_graph();
        assert!(!g.concurrent("beta", "beta@sip").unwrap());
    }

    #[test]
    fn successive_same_exchange_emissions_ordered() {
        let network = order_flip_network();
        let node_a = network.node("A").unwrap().clone();
        let q = |id: &str, t| QuoteUpdate {
            event: crate::spacetime::SpacetimeEvent {
                id: id.into(),
                position: node_a.position,
                t_us: t,
            },
            exchange_id: "A".into(),
            side: Side::Bid,
            price_ticks: 10,
            size: 1,
        };
        let quotes = vec![q("a0", 0.0), q("a1", 5.0)];
        let arrivals = deliver(&quotes, &network).unwrap();
        let g = build_causal_graph(&quotes, &arrivals, network.sip_position()).unwrap();
        assert!(g.happened_before("a0", "a1").unwrap());
        assert!(!g.concurrent("a0", "a1").unwrap());
    }

    #[test]
    fn unknown_id_is_an_error() {
        let g = fixture_graph();
        assert!(matches!(
            g.happened_before("alpha", "nope"),
            Err(CausalError::UnknownId(_))
        ));
    }

    #[test]
    fn lamport_clock_condition_on_fixture() {
        let g = fixture_graph();
        let clocks = g.lamport_clocks().unwrap();
        assert!(clocks["alpha"] < clocks["alpha@sip"]);
        assert!(clocks["beta"] < clocks["beta@sip"]);
        // SIP program order: alpha arrives first.
        assert!(clocks["alpha@sip"] < clocks["beta@sip"]);
    }

    #[test]
    fn lamport_clocks_increase_along_chains() {
        let network = order_flip_network();
        let node_a = network.node("A").unwrap().clone();
        let q = |id: &str, t| QuoteUpdate {
            event: crate::spacetime::SpacetimeEvent {
                id: id.into(),
                position: node_a.position,
                t_us: t,
            },
            exchange_id: "A".into(),
            side: Side::Bid,
            price_ticks: 10,
            size: 1,
        };
        let quotes = vec![q("a0", 0.0), q("a1", 5.0), q("a2", 9.0)];
        let arrivals = deliver(&quotes, &network).unwrap();
        let g = build_causal_graph(&quotes, &arrivals, network.sip_position()).unwrap();
        let clocks = g.lamport_clocks().unwrap();
        assert!(clocks["a0"] < clocks["a1"]);
        assert!(clocks["a1"] < clocks["a2"]);
    }

    #[test]
    fn superluminal_edge_rejected_at_construction() {
        let network = order_flip_network();
        let quotes = order_flip_fixture();
        let mut arrivals = deliver(&quotes, &network).unwrap();
        // Claim beta (43 km away) arrived only 10 µs after emission.
        for a in &mut arrivals {
            if a.quote.event.id == "beta" {
                a.arrival_time_us = a.quote.event.t_us + 10.0;
            }
        }
        arrivals.sort_by(|a, b| a.arrival_time_us.total_cmp(&b.arrival_time_us));
        let err =
            build_causal_graph(&quotes, &arrivals, network.sip_position()).unwrap_err();
        assert!(matches!(err, CausalError::SuperluminalEdge { .. }), "{err}");
    }

    #[test]
    fn consistency_under_random_boosts() {
        let g = fixture_graph();
        let mut rng = ChaCha12Rng::seed_from_u64(2024);
        let mut boosts = Vec::new();
        for _ in 0..100 {
            let beta: f64 = rng.gen_range(0.0..0.99);
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let phi: f64 = rng.gen_range(-1.5..1.5);
            let c = crate::spacetime::SPEED_OF_LIGHT_KM_PER_US;
            boosts.push(
                LorentzBoost::new(Vec3::new(
                    beta * c * phi.cos() * theta.cos(),
                    beta * c * phi.cos() * theta.sin(),
                    beta * c * phi.sin(),
                ))
                .unwrap(),
            );
        }
        let report = g.consistency_check(&boosts);
        assert!(report.is_consistent(), "violations: {:?}", report.violations);
        assert_eq!(report.boosts_checked, 100);

        // Empty boost list passes trivially.
        assert!(g.consistency_check(&[]).is_consistent());
    }

    #[test]
    fn edge_list_export_format() {
        let g = fixture_graph();
        let text = g.export_edge_list();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines.contains(&"alpha,alpha@sip,message"));
        assert!(lines.contains(&"beta,beta@sip,message"));
        assert!(lines.contains(&"alpha@sip,beta@sip,program"));
    }
}
