//! Shared generators for the integration suites: random networks, random
//! scenarios, random boosts, and a reachability oracle.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use lightcone::causal::CausalGraph;
use lightcone::network::{DistanceModel, ExchangeNode, Network, SipPlacement};
use lightcone::quotes::{generate_stream, sort_by_emission, QuoteUpdate, StreamSpec};
use lightcone::spacetime::{LorentzBoost, Vec3, SPEED_OF_LIGHT_KM_PER_US};

pub const C: f64 = SPEED_OF_LIGHT_KM_PER_US;

pub fn random_boost(rng: &mut ChaCha12Rng, max_beta: f64) -> LorentzBoost {
    let beta: f64 = rng.gen_range(0.0..max_beta);
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let phi: f64 = rng.gen_range(-1.5..1.5f64);
    LorentzBoost::new(Vec3::new(
        beta * C * phi.cos() * theta.cos(),
        beta * C * phi.cos() * theta.sin(),
        beta * C * phi.sin(),
    ))
    .expect("beta < 1")
}

/// A random exchange network: 2–4 nodes scattered over the globe, SIP at the
/// first node, implicit fiber feed links.
pub fn random_network(rng: &mut ChaCha12Rng) -> Network {
    let n = rng.gen_range(2..=4usize);
    let mut nodes = Vec::new();
    for k in 0..n {
        let lat = rng.gen_range(-60.0..60.0);
        let lon = rng.gen_range(-179.0..179.0);
        nodes.push(
            ExchangeNode::new(format!("E{k}"), format!("Exchange {k}"), lat, lon, 0.0)
                .expect("valid coordinates"),
        );
    }
    Network::new(
        nodes,
        Vec::new(),
        SipPlacement::Node("E0".into()),
        DistanceModel::Chord,
        true,
    )
    .expect("valid network")
}

/// Random quote streams over a random network.
pub fn random_scenario(rng: &mut ChaCha12Rng) -> (Vec<QuoteUpdate>, Network) {
    let network = random_network(rng);
    let mut quotes = Vec::new();
    for node in network.nodes() {
        let spec = StreamSpec::unbounded(
            node.id.clone(),
            rng.gen(),
            rng.gen_range(100.0..1000.0),
            rng.gen_range(20_000.0..100_000.0),
            rng.gen_range(2..8),
            10_000,
            rng.gen_range(1..4),
        );
        quotes.extend(generate_stream(&spec, node).expect("valid spec"));
    }
    sort_by_emission(&mut quotes);
    (quotes, network)
}

/// Full reachability closure of a causal graph, keyed by event id index.
pub struct Reachability {
    ids: Vec<String>,
    reach: Vec<Vec<bool>>,
}

impl Reachability {
    pub fn of(graph: &CausalGraph) -> Self {
        let ids: Vec<String> = graph.event_ids().map(str::to_string).collect();
        let index: std::collections::BTreeMap<&str, usize> =
            ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for (from, to, _) in graph.edges() {
            adj[index[from]].push(index[to]);
        }
        let mut reach = vec![vec![false; ids.len()]; ids.len()];
        for (start, row) in reach.iter_mut().enumerate() {
            let mut stack = vec![start];
            while let Some(node) = stack.pop() {
                for &next in &adj[node] {
                    if !row[next] {
                        row[next] = true;
                        stack.push(next);
                    }
                }
            }
        }
        Reachability { ids, reach }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn reaches(&self, from: usize, to: usize) -> bool {
        self.reach[from][to]
    }
}
