//! Quantitative comparison of simultaneity conventions and the latency-race
//! analysis they expose.
//!
//! [`nbbo_divergence`] measures where two consolidated series disagree;
//! [`frame_flip_witness`] packages the constructive frame-flip for a spacelike
//! quote pair; [`detect_races`] finds stale-quote episodes and scores them
//! under a direct-feed vs consolidated-feed latency model.

use serde::{Deserialize, Serialize};

use crate::network::{JitterSpec, Network};
use crate::quotes::QuoteUpdate;
use crate::sip::{deliver, consolidate, ArrivalRecord, BookTop, Convention, NbboSeries, SipError};
use crate::spacetime::{flip_boost, LorentzBoost, SpacetimeError};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
    #[error(transparent)]
    Sip(#[from] SipError),
    #[error("feed model invalid: {0}")]
    InvalidFeedModel(String),
}

/// A maximal span on which two series report different consolidated state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementWindow {
    pub start_us: f64,
    pub end_us: f64,
    pub s1_bid: Option<BookTop>,
    pub s1_ask: Option<BookTop>,
    pub s2_bid: Option<BookTop>,
    pub s2_ask: Option<BookTop>,
}

/// Where and how much two consolidated series disagree over a horizon.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub total_time_us: f64,
    pub windows: Vec<DisagreementWindow>,
    pub disagreement_fraction: f64,
}

impl DivergenceReport {
    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

fn sides_disagree(a: Option<&BookTop>, b: Option<&BookTop>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x != y,
        // One convention silent, the other not: an empty book is the absence
        // of an answer, not a different answer.
        _ => false,
    }
}

/// Compare two step series field-by-field (price and venue) over [0, horizon].
///
/// A window is a disagreement when, on some side, both series report a quote
/// and the quotes differ. Windows are disjoint, content-constant, and merged
/// when contiguous with identical content; the fraction is their total length
/// over the horizon.
pub fn nbbo_divergence(s1: &NbboSeries, s2: &NbboSeries, horizon_us: f64) -> DivergenceReport {
    debug_assert!(horizon_us >= 0.0);
    let mut breakpoints: Vec<f64> = s1
        .samples
        .iter()
        .chain(s2.samples.iter())
        .map(|s| s.t_us)
        .filter(|t| *t > 0.0 && *t < horizon_us)
        .collect();
    breakpoints.push(0.0);
    breakpoints.push(horizon_us);
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();

    let mut windows: Vec<DisagreementWindow> = Vec::new();
    for span in breakpoints.windows(2) {
        let (t0, t1) = (span[0], span[1]);
        if t1 <= t0 {
            continue;
        }
        let (b1, a1) = s1.state_at(t0);
        let (b2, a2) = s2.state_at(t0);
        if !sides_disagree(b1, b2) && !sides_disagree(a1, a2) {
            continue;
        }
        let same_content = |w: &DisagreementWindow| {
            w.s1_bid.as_ref() == b1
                && w.s1_ask.as_ref() == a1
                && w.s2_bid.as_ref() == b2
                && w.s2_ask.as_ref() == a2
        };
        match windows.last_mut() {
            Some(last) if last.end_us == t0 && same_content(last) => last.end_us = t1,
            _ => windows.push(DisagreementWindow {
                start_us: t0,
                end_us: t1,
                s1_bid: b1.cloned(),
                s1_ask: a1.cloned(),
                s2_bid: b2.cloned(),
                s2_ask: a2.cloned(),
            }),
        }
    }

    let disagreement: f64 = windows.iter().map(|w| w.end_us - w.start_us).sum();
    DivergenceReport {
        total_time_us: horizon_us,
        disagreement_fraction: if horizon_us > 0.0 { disagreement / horizon_us } else { 0.0 },
        windows,
    }
}

/// The constructive frame-dependence witness for one spacelike quote pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub frame_s: NbboSeries,
    pub frame_s_prime: NbboSeries,
    pub boost: LorentzBoost,
    pub divergence: DivergenceReport,
}

/// Deliver a spacelike pair, consolidate it in the lab frame and in the
/// order-flipping frame, and report where the two books disagree.
///
/// Fails with `NotSpacelike` when the pair has absolute order — then every
/// frame agrees and no witness exists.
pub fn frame_flip_witness(
    a: &QuoteUpdate,
    b: &QuoteUpdate,
    network: &Network,
) -> Result<WitnessReport, AnalysisError> {
    let boost = flip_boost(&a.event, &b.event, 0.01)?;
    let mut quotes = vec![a.clone(), b.clone()];
    crate::quotes::sort_by_emission(&mut quotes);
    let arrivals = deliver(&quotes, network)?;
    let frame_s = consolidate(&arrivals, &Convention::LabFrameEmission);
    let frame_s_prime =
        consolidate(&arrivals, &Convention::BoostedFrameEmission { boost });
    let horizon = frame_s
        .samples
        .iter()
        .chain(frame_s_prime.samples.iter())
        .map(|s| s.t_us)
        .fold(0.0f64, f64::max);
    let divergence = nbbo_divergence(&frame_s, &frame_s_prime, horizon);
    Ok(WitnessReport { frame_s, frame_s_prime, boost, divergence })
}

/// Latency model for the race analysis: direct-feed delay, consolidated-feed
/// delay, and the fast participant's reaction time, all µs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedModel {
    pub delta_direct_us: f64,
    pub delta_sip_us: f64,
    pub reaction_us: f64,
    /// Extra per-race reaction delay; turns the deterministic winner rule
    /// into a noisy one.
    pub reaction_jitter: Option<JitterSpec>,
}

impl FeedModel {
    pub fn new(
        delta_direct_us: f64,
        delta_sip_us: f64,
        reaction_us: f64,
    ) -> Result<Self, AnalysisError> {
        if !(delta_direct_us >= 0.0 && delta_sip_us >= 0.0 && reaction_us >= 0.0) {
            return Err(AnalysisError::InvalidFeedModel("all delays must be >= 0".into()));
        }
        if delta_direct_us >= delta_sip_us {
            return Err(AnalysisError::InvalidFeedModel(format!(
                "delta_direct ({delta_direct_us} µs) must be below delta_sip \
                 ({delta_sip_us} µs), else no race is possible"
            )));
        }
        Ok(FeedModel { delta_direct_us, delta_sip_us, reaction_us, reaction_jitter: None })
    }

    pub fn with_reaction_jitter(mut self, jitter: JitterSpec) -> Self {
        self.reaction_jitter = Some(jitter);
        self
    }

    /// The structural race window: how long a fast participant can act on a
    /// quote before consolidated-feed users see it, µs.
    pub fn window_us(&self) -> f64 {
        self.delta_sip_us - self.delta_direct_us - self.reaction_us
    }

    /// Consolidated-to-direct latency ratio.
    pub fn feed_ratio(&self) -> f64 {
        self.delta_sip_us / self.delta_direct_us
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaceWinner {
    Fast,
    Slow,
}

/// One stale-quote episode: a trigger quote prices through a resting quote at
/// another exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceEvent {
    pub trigger: QuoteUpdate,
    pub stale_quote: QuoteUpdate,
    /// `delta_sip − delta_direct − reaction`, µs. Positive for every recorded
    /// race; when the expression is non-positive no race is recordable.
    pub window_us: f64,
    pub winner: RaceWinner,
    /// Price improvement × min(sizes), ticks·shares.
    pub profit_ticks: i64,
}

/// Detect latency-arbitrage races on a delivered stream.
///
/// A race is recorded when a quote at exchange E prices through the live
/// resting quote at another exchange (trigger bid above resting ask, or
/// trigger ask below resting bid) while the structural window
/// `delta_sip − delta_direct − reaction` is positive. Without reaction jitter
/// the fast side always wins; with jitter the fast side wins when its drawn
/// extra reaction still fits inside the window.
pub fn detect_races(arrivals: &[ArrivalRecord], feeds: &FeedModel) -> Vec<RaceEvent> {
    let window = feeds.window_us();
    if window <= 0.0 {
        return Vec::new();
    }

    // Work in emission order; a quote is live for races strictly after its
    // emission instant.
    let mut quotes: Vec<&QuoteUpdate> = arrivals.iter().map(|a| &a.quote).collect();
    quotes.sort_by(|a, b| {
        a.event
            .t_us
            .total_cmp(&b.event.t_us)
            .then_with(|| a.exchange_id.cmp(&b.exchange_id))
            .then_with(|| a.event.id.cmp(&b.event.id))
    });

    let mut live: std::collections::BTreeMap<(String, crate::quotes::Side), &QuoteUpdate> =
        Default::default();
    let mut races = Vec::new();
    let mut draw_index = 0u64;
    let mut i = 0;
    while i < quotes.len() {
        let t = quotes[i].event.t_us;
        let group_start = i;
        while i < quotes.len() && quotes[i].event.t_us == t {
            i += 1;
        }
        // Triggers in this instant race against state from strictly before it.
        for trigger in &quotes[group_start..i] {
            for ((exchange, side), resting) in &live {
                if *exchange == trigger.exchange_id {
                    continue;
                }
                use crate::quotes::Side;
                let improvement = match (trigger.side, side) {
                    (Side::Bid, Side::Ask) => trigger.price_ticks - resting.price_ticks,
                    (Side::Ask, Side::Bid) => resting.price_ticks - trigger.price_ticks,
                    _ => continue,
                };
                if improvement <= 0 {
                    continue;
                }
                let winner = match &feeds.reaction_jitter {
                    None => RaceWinner::Fast,
                    Some(jitter) => {
                        let extra = jitter.draw_us(draw_index);
                        if extra < window {
                            RaceWinner::Fast
                        } else {
                            RaceWinner::Slow
                        }
                    }
                };
                draw_index += 1;
                races.push(RaceEvent {
                    trigger: (*trigger).clone(),
                    stale_quote: (*resting).clone(),
                    window_us: window,
                    winner,
                    profit_ticks: improvement * trigger.size.min(resting.size),
                });
            }
        }
        for q in &quotes[group_start..i] {
            live.insert((q.exchange_id.clone(), q.side), q);
        }
    }
    races
}

/// Aggregate race statistics over a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceSummary {
    pub race_count: usize,
    pub races_per_minute_per_security: f64,
    pub fast_win_fraction: f64,
    pub total_profit_ticks: i64,
}

/// Straightforward deterministic aggregation of a race list.
pub fn race_summary(races: &[RaceEvent], duration_us: f64, n_securities: u64) -> RaceSummary {
    debug_assert!(duration_us > 0.0);
    debug_assert!(n_securities > 0);
    let minutes = duration_us / 60.0e6;
    let fast = races.iter().filter(|r| r.winner == RaceWinner::Fast).count();
    RaceSummary {
        race_count: races.len(),
        races_per_minute_per_security: if minutes > 0.0 && n_securities > 0 {
            races.len() as f64 / minutes / n_securities as f64
        } else {
            0.0
        },
        fast_win_fraction: if races.is_empty() {
            0.0
        } else {
            fast as f64 / races.len() as f64
        },
        total_profit_ticks: races.iter().map(|r| r.profit_ticks).sum(),
    }
}
