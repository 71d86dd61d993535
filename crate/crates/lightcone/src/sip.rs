//! Delivery of quote streams to the SIP and best-bid/offer consolidation under
//! pluggable simultaneity conventions.
//!
//! The consolidated best bid/offer is `(max_i b_i(t), min_i a_i(t))` over the
//! quotes "current" at time `t` — but *current* is not a physical fact for
//! spacelike-separated updates. Each [`Convention`] is one way of deciding it:
//!
//! - `ArrivalOrder`: current when it reaches the SIP position (what a real
//!   consolidator computes — a fact about the SIP's input buffer, not the
//!   market).
//! - `LabFrameEmission`: current at its lab-frame emission time (the
//!   omniscient-observer book).
//! - `BoostedFrameEmission`: current at its emission time in a boosted frame;
//!   the series is expressed in that frame's time coordinate.
//! - `UncertaintyInterval`: timestamps carry `±ε`; instead of one answer the
//!   consolidation reports every answer consistent with the uncertainty
//!   ([`consolidate_interval`]).
//!
//! Quotes never expire: a quote is superseded only by a newer quote from the
//! same exchange and side. Ties in the max/min resolve to the lowest exchange
//! id — a documented, deliberately arbitrary choice; the arbitrariness is the
//! point.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::network::{Network, NetworkError};
use crate::quotes::{validate_quotes, QuoteError, QuoteUpdate, Side};
use crate::spacetime::{
    boost_event, classify, IntervalClass, LorentzBoost, DEFAULT_CLASSIFY_EPSILON_KM2,
};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum SipError {
    #[error(transparent)]
    Quote(#[from] QuoteError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// A quote as registered at the SIP: emission plus propagation delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalRecord {
    pub quote: QuoteUpdate,
    pub arrival_time_us: f64,
    pub delay_us: f64,
}

/// A rule assigning a total order to quote events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Convention {
    ArrivalOrder,
    LabFrameEmission,
    BoostedFrameEmission { boost: LorentzBoost },
    UncertaintyInterval { epsilon_clock_us: f64 },
}

impl Convention {
    pub fn name(&self) -> &'static str {
        match self {
            Convention::ArrivalOrder => "arrival_order",
            Convention::LabFrameEmission => "lab_frame",
            Convention::BoostedFrameEmission { .. } => "boosted_frame",
            Convention::UncertaintyInterval { .. } => "uncertainty_interval",
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Convention::ArrivalOrder => {
                "current = received at the SIP position by time t (arrival order)".into()
            }
            Convention::LabFrameEmission => {
                "current = emitted by lab-frame coordinate time t".into()
            }
            Convention::BoostedFrameEmission { boost } => format!(
                "current = emitted by time t' in the frame moving at {:.6} c",
                boost.beta()
            ),
            Convention::UncertaintyInterval { epsilon_clock_us } => format!(
                "current = emitted by time t, timestamps trusted only to ±{epsilon_clock_us} µs"
            ),
        }
    }

    /// The time coordinate this convention assigns to a delivered quote.
    fn effective_time(&self, arrival: &ArrivalRecord) -> f64 {
        match self {
            Convention::ArrivalOrder => arrival.arrival_time_us,
            Convention::LabFrameEmission => arrival.quote.event.t_us,
            Convention::BoostedFrameEmission { boost } => {
                boost_event(boost, &arrival.quote.event).t_us
            }
            // Interval centers; the spread is handled by consolidate_interval.
            Convention::UncertaintyInterval { .. } => arrival.quote.event.t_us,
        }
    }
}

/// One side's winner: price and the exchange quoting it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BookTop {
    pub price_ticks: i64,
    pub exchange_id: String,
}

/// Consolidated state at one step of the series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbboSample {
    pub t_us: f64,
    pub best_bid: Option<BookTop>,
    pub best_ask: Option<BookTop>,
    /// Best bid strictly above best ask — the stale-quote state that
    /// latency races exploit. Flagged, never clamped.
    pub crossed: bool,
}

/// A step function of consolidated best bid/offer: one sample per change,
/// sample times strictly increasing in the convention's time coordinate.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NbboSeries {
    pub samples: Vec<NbboSample>,
}

impl NbboSeries {
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// The state prevailing at time `t` (the last sample at or before `t`).
    pub fn state_at(&self, t_us: f64) -> (Option<&BookTop>, Option<&BookTop>) {
        let mut bid = None;
        let mut ask = None;
        for s in &self.samples {
            if s.t_us > t_us {
                break;
            }
            bid = s.best_bid.as_ref();
            ask = s.best_ask.as_ref();
        }
        (bid, ask)
    }

    /// The sequence of (bid, ask) states with times stripped — what two frames
    /// can be compared on when their time coordinates differ.
    pub fn update_sequence(&self) -> Vec<(Option<BookTop>, Option<BookTop>)> {
        self.samples
            .iter()
            .map(|s| (s.best_bid.clone(), s.best_ask.clone()))
            .collect()
    }
}

/// Possible consolidated answers at one instant under timestamp uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSample {
    pub t_us: f64,
    pub possible_best_bids: BTreeSet<(i64, String)>,
    pub possible_best_asks: BTreeSet<(i64, String)>,
}

/// Interval-valued consolidation: at each step, the set of best bids/asks
/// consistent with every event-time assignment inside the uncertainty windows.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IntervalNbbo {
    pub samples: Vec<IntervalSample>,
}

/// Deliver quotes to the SIP over the network.
///
/// Each quote's delay is its exchange's SIP-path propagation delay (the jitter
/// draw index is the quote's per-exchange ordinal). Output is sorted by
/// arrival time, ties broken by exchange id then event id.
pub fn deliver(quotes: &[QuoteUpdate], network: &Network) -> Result<Vec<ArrivalRecord>, SipError> {
    validate_quotes(quotes, network)?;
    let mut ordinals: BTreeMap<&str, u64> = BTreeMap::new();
    let mut arrivals = Vec::with_capacity(quotes.len());
    for quote in quotes {
        let ordinal = ordinals.entry(quote.exchange_id.as_str()).or_insert(0);
        let delay_us = network.sip_delay_us(&quote.exchange_id, *ordinal)?;
        *ordinal += 1;
        arrivals.push(ArrivalRecord {
            arrival_time_us: quote.event.t_us + delay_us,
            delay_us,
            quote: quote.clone(),
        });
    }
    arrivals.sort_by(|a, b| {
        a.arrival_time_us
            .total_cmp(&b.arrival_time_us)
            .then_with(|| a.quote.exchange_id.cmp(&b.quote.exchange_id))
            .then_with(|| a.quote.event.id.cmp(&b.quote.event.id))
    });
    Ok(arrivals)
}

fn better_bid(candidate: &BookTop, incumbent: &BookTop) -> bool {
    candidate.price_ticks > incumbent.price_ticks
        || (candidate.price_ticks == incumbent.price_ticks
            && candidate.exchange_id < incumbent.exchange_id)
}

fn better_ask(candidate: &BookTop, incumbent: &BookTop) -> bool {
    candidate.price_ticks < incumbent.price_ticks
        || (candidate.price_ticks == incumbent.price_ticks
            && candidate.exchange_id < incumbent.exchange_id)
}

fn best_of(live: &BTreeMap<(String, Side), i64>, side: Side) -> Option<BookTop> {
    let mut best: Option<BookTop> = None;
    for ((exchange_id, s), price) in live {
        if *s != side {
            continue;
        }
        let candidate = BookTop { price_ticks: *price, exchange_id: exchange_id.clone() };
        let take = match &best {
            None => true,
            Some(incumbent) => match side {
                Side::Bid => better_bid(&candidate, incumbent),
                Side::Ask => better_ask(&candidate, incumbent),
            },
        };
        if take {
            best = Some(candidate);
        }
    }
    best
}

/// Consolidate delivered quotes into a best-bid/offer step series under the
/// given convention.
///
/// Each quote becomes current at its convention time; the newest quote per
/// (exchange, side) supersedes its predecessor. Quotes sharing one convention
/// time are applied together and produce a single sample. A sample is emitted
/// only when the consolidated state changes.
///
/// `UncertaintyInterval` consolidates at the interval centers (identical
/// timing to `LabFrameEmission`); use [`consolidate_interval`] for the
/// set-valued answer.
pub fn consolidate(arrivals: &[ArrivalRecord], convention: &Convention) -> NbboSeries {
    let mut timed: Vec<(f64, &ArrivalRecord)> = arrivals
        .iter()
        .map(|a| (convention.effective_time(a), a))
        .collect();
    timed.sort_by(|x, y| {
        x.0.total_cmp(&y.0)
            .then_with(|| x.1.quote.exchange_id.cmp(&y.1.quote.exchange_id))
            .then_with(|| x.1.quote.event.id.cmp(&y.1.quote.event.id))
    });

    let mut live: BTreeMap<(String, Side), i64> = BTreeMap::new();
    let mut series = NbboSeries::default();
    let mut i = 0;
    while i < timed.len() {
        let t = timed[i].0;
        while i < timed.len() && timed[i].0 == t {
            let q = &timed[i].1.quote;
            live.insert((q.exchange_id.clone(), q.side), q.price_ticks);
            i += 1;
        }
        let best_bid = best_of(&live, Side::Bid);
        let best_ask = best_of(&live, Side::Ask);
        let crossed = matches!(
            (&best_bid, &best_ask),
            (Some(b), Some(a)) if b.price_ticks > a.price_ticks
        );
        let changed = match series.samples.last() {
            None => true,
            Some(prev) => prev.best_bid != best_bid || prev.best_ask != best_ask,
        };
        if changed {
            series.samples.push(NbboSample { t_us: t, best_bid, best_ask, crossed });
        }
    }
    series
}

/// Consolidate under the interval-of-uncertainty convention: every quote's
/// effective time is `[t − ε, t + ε]`.
///
/// At each instant the report holds every best bid/ask achievable by some
/// assignment of true times within the windows (per-exchange emission order is
/// known and respected — uncertainty never reorders one exchange's own
/// quotes). Outside overlap windows the sets are singletons equal to the
/// lab-frame answer; with ε = 0 they are singletons everywhere.
pub fn consolidate_interval(arrivals: &[ArrivalRecord], epsilon_clock_us: f64) -> IntervalNbbo {
    debug_assert!(epsilon_clock_us >= 0.0);

    // Per-exchange quote chains in emission order.
    let mut chains: BTreeMap<&str, Vec<&QuoteUpdate>> = BTreeMap::new();
    for a in arrivals {
        chains.entry(a.quote.exchange_id.as_str()).or_default().push(&a.quote);
    }
    for chain in chains.values_mut() {
        chain.sort_by(|a, b| a.event.t_us.total_cmp(&b.event.t_us));
    }

    let mut boundaries: Vec<f64> = arrivals
        .iter()
        .flat_map(|a| {
            [a.quote.event.t_us - epsilon_clock_us, a.quote.event.t_us + epsilon_clock_us]
        })
        .collect();
    boundaries.sort_by(f64::total_cmp);
    boundaries.dedup();

    let mut out = IntervalNbbo::default();
    for &t in &boundaries {
        let mut bids = BTreeSet::new();
        let mut asks = BTreeSet::new();

        // Per exchange: quotes with t_q + ε <= t are definitely live; quotes
        // whose window contains t may or may not be. A realization picks a
        // prefix length per exchange between those two marks.
        let per_exchange: Vec<(&str, usize, usize)> = chains
            .iter()
            .map(|(ex, chain)| {
                let definite =
                    chain.iter().take_while(|q| q.event.t_us + epsilon_clock_us <= t).count();
                let possible = chain
                    .iter()
                    .take_while(|q| q.event.t_us - epsilon_clock_us <= t)
                    .count();
                (*ex, definite, possible)
            })
            .collect();

        let mut choice: Vec<usize> = per_exchange.iter().map(|(_, d, _)| *d).collect();
        loop {
            let mut live_bid: Option<BookTop> = None;
            let mut live_ask: Option<BookTop> = None;
            for (idx, (ex, _, _)) in per_exchange.iter().enumerate() {
                let chain = &chains[ex];
                let mut newest: BTreeMap<Side, i64> = BTreeMap::new();
                for q in chain.iter().take(choice[idx]) {
                    newest.insert(q.side, q.price_ticks);
                }
                for (side, price) in newest {
                    let candidate = BookTop { price_ticks: price, exchange_id: ex.to_string() };
                    match side {
                        Side::Bid => {
                            if live_bid.as_ref().is_none_or(|b| better_bid(&candidate, b)) {
                                live_bid = Some(candidate);
                            }
                        }
                        Side::Ask => {
                            if live_ask.as_ref().is_none_or(|a| better_ask(&candidate, a)) {
                                live_ask = Some(candidate);
                            }
                        }
                    }
                }
            }
            if let Some(b) = live_bid {
                bids.insert((b.price_ticks, b.exchange_id));
            }
            if let Some(a) = live_ask {
                asks.insert((a.price_ticks, a.exchange_id));
            }

            // Advance the mixed-radix choice vector.
            let mut k = 0;
            loop {
                if k == choice.len() {
                    break;
                }
                if choice[k] < per_exchange[k].2 {
                    choice[k] += 1;
                    break;
                }
                choice[k] = per_exchange[k].1;
                k += 1;
            }
            if k == choice.len() {
                break;
            }
        }

        let changed = match out.samples.last() {
            None => true,
            Some(prev) => prev.possible_best_bids != bids || prev.possible_best_asks != asks,
        };
        if changed {
            out.samples.push(IntervalSample {
                t_us: t,
                possible_best_bids: bids,
                possible_best_asks: asks,
            });
        }
    }
    out
}

/// Report on the engineered-simultaneity conditions for a quote set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsReport {
    /// True when some pair of quotes from distinct exchanges is
    /// spacelike-separated — temporal comparison of such events is required.
    pub es1: bool,
    /// A witnessing pair of event ids when `es1` holds.
    pub witness: Option<(String, String)>,
    /// The convention the SIP imposes (always in force: arrival order at its
    /// own position).
    pub es2: String,
}

/// Check ES1 (spacelike comparison required) and echo ES2 (the arrival-order
/// convention in force at the SIP).
pub fn es_conditions(quotes: &[QuoteUpdate], network: &Network) -> EsReport {
    let mut ordered: Vec<&QuoteUpdate> = quotes.iter().collect();
    ordered.sort_by(|a, b| {
        a.event
            .t_us
            .total_cmp(&b.event.t_us)
            .then_with(|| a.event.id.cmp(&b.event.id))
    });
    let mut witness = None;
    'outer: for (i, a) in ordered.iter().enumerate() {
        for b in ordered.iter().skip(i + 1) {
            if a.exchange_id == b.exchange_id {
                continue;
            }
            if classify(&a.event, &b.event, DEFAULT_CLASSIFY_EPSILON_KM2)
                == IntervalClass::Spacelike
            {
                witness = Some((a.event.id.clone(), b.event.id.clone()));
                break 'outer;
            }
        }
    }
    let sip = network.sip_position();
    EsReport {
        es1: witness.is_some(),
        witness,
        es2: format!(
            "order of arrival at the SIP position ({:.3}, {:.3}, {:.3}) km",
            sip.x, sip.y, sip.z
        ),
    }
}
