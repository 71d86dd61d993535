//! Scenario execution and deterministic report emission.
//!
//! Every f64 is written with Rust's shortest round-trip formatting and every
//! map is ordered, so a run's output bytes are a pure function of the
//! effective config. The manifest records the config hash and a sha256 per
//! output file; equal manifests mean byte-identical runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    detect_races, race_summary, RaceEvent, RaceSummary,
};
use crate::causal::build_causal_graph;
use crate::config::{hex_sha256, ResolvedScenario};
use crate::error::Error;
use crate::quotes::{generate_stream, load_scenario, sort_by_emission, QuoteUpdate};
use crate::sip::{
    consolidate, consolidate_interval, deliver, es_conditions, ArrivalRecord, Convention,
    EsReport, IntervalNbbo, NbboSeries,
};
use crate::spacetime::{
    classify, flip_boost, interval_squared, light_time_us, medium_time_us, ordering_in_frame,
    FrameOrdering, IntervalClass, LorentzBoost, DEFAULT_CLASSIFY_EPSILON_KM2,
    DEFAULT_ORDERING_TOLERANCE_US,
};
use crate::network::effective_distance;

/// Fallback feed latencies for the timescale chart when a scenario defines no
/// feed model: direct ~20 µs, consolidated ~1128 µs.
const DEFAULT_DIRECT_FEED_US: f64 = 20.0;
const DEFAULT_SIP_FEED_US: f64 = 1128.0;

/// Assemble the full quote list for a scenario: synthetic streams, then
/// scripted event files, truncated to the horizon and sorted by emission.
pub fn assemble_quotes(scenario: &ResolvedScenario) -> Result<Vec<QuoteUpdate>, Error> {
    let mut quotes = Vec::new();
    for spec in &scenario.streams {
        let node = scenario.network.node(&spec.exchange_id)?;
        quotes.extend(generate_stream(spec, node)?);
    }
    for path in &scenario.event_files {
        quotes.extend(load_scenario(path, &scenario.network)?);
    }
    quotes.retain(|q| q.event.t_us <= scenario.config.horizon_us);
    sort_by_emission(&mut quotes);
    crate::quotes::validate_quotes(&quotes, &scenario.network)?;
    Ok(quotes)
}

/// Everything a scenario run produces in memory.
#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub quotes: Vec<QuoteUpdate>,
    pub arrivals: Vec<ArrivalRecord>,
    /// One series per point convention, in config order (index, convention,
    /// series).
    pub series: Vec<(usize, Convention, NbboSeries)>,
    /// Interval-valued output for each uncertainty convention.
    pub intervals: Vec<(usize, f64, IntervalNbbo)>,
    pub es: EsReport,
}

pub fn run_simulation(scenario: &ResolvedScenario) -> Result<SimulationResult, Error> {
    let quotes = assemble_quotes(scenario)?;
    let arrivals = deliver(&quotes, &scenario.network)?;
    let mut series = Vec::new();
    let mut intervals = Vec::new();
    for (i, convention) in scenario.conventions.iter().enumerate() {
        match convention {
            Convention::UncertaintyInterval { epsilon_clock_us } => {
                intervals.push((i, *epsilon_clock_us, consolidate_interval(&arrivals, *epsilon_clock_us)));
            }
            other => {
                series.push((i, other.clone(), consolidate(&arrivals, other)));
            }
        }
    }
    let es = es_conditions(&quotes, &scenario.network);
    Ok(SimulationResult { quotes, arrivals, series, intervals, es })
}

/// Reproducibility record written alongside every simulate run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_sha256: String,
    pub tool_version: String,
    /// sha256 per output file, keyed by file name.
    pub outputs: BTreeMap<String, String>,
}

struct OutputDir {
    dir: PathBuf,
    checksums: BTreeMap<String, String>,
}

impl OutputDir {
    fn create(dir: &Path) -> Result<Self, Error> {
        std::fs::create_dir_all(dir)?;
        Ok(OutputDir { dir: dir.to_path_buf(), checksums: BTreeMap::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), Error> {
        std::fs::write(self.dir.join(name), contents)?;
        self.checksums.insert(name.to_string(), hex_sha256(contents.as_bytes()));
        Ok(())
    }

    fn finish(mut self, config_sha256: String) -> Result<RunManifest, Error> {
        let manifest = RunManifest {
            config_sha256,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: std::mem::take(&mut self.checksums),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(self.dir.join("manifest.json"), text)?;
        Ok(manifest)
    }
}

fn fmt_opt_top(top: &Option<crate::sip::BookTop>) -> (String, String) {
    match top {
        Some(t) => (t.price_ticks.to_string(), t.exchange_id.clone()),
        None => (String::new(), String::new()),
    }
}

pub fn nbbo_csv(series: &NbboSeries) -> String {
    let mut out = String::from("t_us,bid_ticks,bid_venue,ask_ticks,ask_venue,crossed\n");
    for s in &series.samples {
        let (bid, bid_venue) = fmt_opt_top(&s.best_bid);
        let (ask, ask_venue) = fmt_opt_top(&s.best_ask);
        writeln!(out, "{},{},{},{},{},{}", s.t_us, bid, bid_venue, ask, ask_venue, s.crossed)
            .expect("string write");
    }
    out
}

pub fn interval_csv(interval: &IntervalNbbo) -> String {
    let join = |set: &std::collections::BTreeSet<(i64, String)>| {
        set.iter()
            .map(|(p, v)| format!("{p}@{v}"))
            .collect::<Vec<_>>()
            .join("|")
    };
    let mut out = String::from("t_us,possible_bids,possible_asks\n");
    for s in &interval.samples {
        writeln!(out, "{},{},{}", s.t_us, join(&s.possible_best_bids), join(&s.possible_best_asks))
            .expect("string write");
    }
    out
}

pub fn arrivals_csv(arrivals: &[ArrivalRecord]) -> String {
    let mut out =
        String::from("event_id,exchange_id,side,price_ticks,size,t_emit_us,delay_us,t_arrival_us\n");
    for a in arrivals {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            a.quote.event.id,
            a.quote.exchange_id,
            a.quote.side,
            a.quote.price_ticks,
            a.quote.size,
            a.quote.event.t_us,
            a.delay_us,
            a.arrival_time_us
        )
        .expect("string write");
    }
    out
}

pub fn races_csv(races: &[RaceEvent]) -> String {
    let mut out = String::from(
        "trigger_id,trigger_exchange,stale_id,stale_exchange,trigger_t_us,window_us,winner,profit_ticks\n",
    );
    for r in races {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.trigger.event.id,
            r.trigger.exchange_id,
            r.stale_quote.event.id,
            r.stale_quote.exchange_id,
            r.trigger.event.t_us,
            r.window_us,
            match r.winner {
                crate::analysis::RaceWinner::Fast => "fast",
                crate::analysis::RaceWinner::Slow => "slow",
            },
            r.profit_ticks
        )
        .expect("string write");
    }
    out
}

fn series_file_name(index: usize, convention: &Convention) -> String {
    format!("nbbo_{index:02}_{}.csv", convention.name())
}

/// Run a scenario and write all output files; returns the manifest.
///
/// Output files, in write order: `arrivals.csv`, one `nbbo_*.csv` or
/// `interval_*.csv` per configured convention, `causal_edges.csv`,
/// `es_report.json`, and finally `manifest.json`.
pub fn simulate_to_dir(scenario: &ResolvedScenario) -> Result<RunManifest, Error> {
    let result = run_simulation(scenario)?;
    let mut out = OutputDir::create(&scenario.out_dir)?;

    out.write("arrivals.csv", &arrivals_csv(&result.arrivals))?;
    for (index, convention, series) in &result.series {
        out.write(&series_file_name(*index, convention), &nbbo_csv(series))?;
    }
    for (index, eps, interval) in &result.intervals {
        out.write(
            &format!("interval_{index:02}_uncertainty_{eps}us.csv"),
            &interval_csv(interval),
        )?;
    }
    let graph =
        build_causal_graph(&result.quotes, &result.arrivals, scenario.network.sip_position())?;
    out.write("causal_edges.csv", &graph.export_edge_list())?;
    let mut es_json = serde_json::to_string_pretty(&result.es).expect("report serializes");
    es_json.push('\n');
    out.write("es_report.json", &es_json)?;
    out.finish(scenario.config_hash())
}

/// One row of the latency-budget table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkBudgetRow {
    pub pair: String,
    pub distance_km: f64,
    pub light_time_us: f64,
    pub fiber_time_us: f64,
}

/// Latency-budget and timescale tables for a scenario's network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkReport {
    pub links: Vec<LinkBudgetRow>,
    pub sip_feed_us: f64,
    pub direct_feed_us: f64,
}

pub fn network_report(scenario: &ResolvedScenario) -> Result<NetworkReport, Error> {
    let mut links = Vec::new();
    for link in scenario.network.links() {
        let from = scenario.network.node(&link.from)?;
        let to = scenario.network.node(&link.to)?;
        let distance = effective_distance(link, &scenario.network)?;
        links.push(LinkBudgetRow {
            pair: format!("{}-{}", from.name, to.name),
            distance_km: distance,
            light_time_us: light_time_us(distance),
            fiber_time_us: medium_time_us(distance, 1.5),
        });
    }
    let (direct, sip) = scenario
        .feeds
        .as_ref()
        .map(|f| (f.delta_direct_us, f.delta_sip_us))
        .unwrap_or((DEFAULT_DIRECT_FEED_US, DEFAULT_SIP_FEED_US));
    Ok(NetworkReport { links, sip_feed_us: sip, direct_feed_us: direct })
}

pub fn latency_table_csv(report: &NetworkReport) -> String {
    let mut out = String::from("pair,distance_km,light_time_us,fiber_time_us\n");
    for row in &report.links {
        writeln!(
            out,
            "{},{},{},{}",
            row.pair, row.distance_km, row.light_time_us, row.fiber_time_us
        )
        .expect("string write");
    }
    out
}

/// Distance-vs-time chart data: the light-time line, the fiber line, and the
/// two feed-latency horizontals, sampled at a fixed sweep plus every link
/// distance.
pub fn timescales_csv(report: &NetworkReport) -> String {
    let mut distances: Vec<f64> = [
        1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0, 1300.0,
    ]
    .into_iter()
    .chain(report.links.iter().map(|l| l.distance_km))
    .collect();
    distances.sort_by(f64::total_cmp);
    distances.dedup();
    let mut out =
        String::from("distance_km,light_time_us,fiber_time_us,sip_feed_us,direct_feed_us\n");
    for d in distances {
        writeln!(
            out,
            "{},{},{},{},{}",
            d,
            light_time_us(d),
            medium_time_us(d, 1.5),
            report.sip_feed_us,
            report.direct_feed_us
        )
        .expect("string write");
    }
    out
}

pub fn nodes_csv(scenario: &ResolvedScenario) -> String {
    let mut out = String::from("id,name,lat,lon,alt_m,clock_rate,drift_us_per_day\n");
    for node in scenario.network.nodes() {
        let drift = (node.clock_rate - 1.0) * 86_400.0e6;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            node.id,
            node.name,
            node.latitude_deg,
            node.longitude_deg,
            node.altitude_m,
            node.clock_rate,
            drift
        )
        .expect("string write");
    }
    out
}

/// Write the report tables; returns the report for printing.
pub fn report_to_dir(scenario: &ResolvedScenario) -> Result<NetworkReport, Error> {
    let report = network_report(scenario)?;
    let mut out = OutputDir::create(&scenario.out_dir)?;
    out.write("latency_table.csv", &latency_table_csv(&report))?;
    out.write("timescales.csv", &timescales_csv(&report))?;
    out.write("nodes.csv", &nodes_csv(scenario))?;
    out.finish(scenario.config_hash())?;
    Ok(report)
}

/// Race detection over a full scenario run.
pub fn races_run(
    scenario: &ResolvedScenario,
) -> Result<(Vec<RaceEvent>, RaceSummary), Error> {
    let feeds = scenario
        .feeds
        .as_ref()
        .ok_or_else(|| {
            crate::config::ConfigError::Invalid(vec![
                "feeds: required for race analysis but missing".into(),
            ])
        })?;
    let quotes = assemble_quotes(scenario)?;
    let arrivals = deliver(&quotes, &scenario.network)?;
    let races = detect_races(&arrivals, feeds);
    let duration = scenario.config.horizon_us.max(f64::MIN_POSITIVE);
    let summary = race_summary(&races, duration, scenario.config.n_securities);
    Ok((races, summary))
}

/// Write race outputs; returns the race list and summary.
pub fn races_to_dir(
    scenario: &ResolvedScenario,
) -> Result<(Vec<RaceEvent>, RaceSummary), Error> {
    let (races, summary) = races_run(scenario)?;
    let mut out = OutputDir::create(&scenario.out_dir)?;
    out.write("races.csv", &races_csv(&races))?;
    #[derive(Serialize)]
    struct RacesJson<'a> {
        summary: &'a RaceSummary,
        feed_ratio: f64,
        window_us: f64,
    }
    let feeds = scenario.feeds.as_ref().expect("checked in races_run");
    let mut json = serde_json::to_string_pretty(&RacesJson {
        summary: &summary,
        feed_ratio: feeds.feed_ratio(),
        window_us: feeds.window_us(),
    })
    .expect("summary serializes");
    json.push('\n');
    out.write("races_summary.json", &json)?;
    out.finish(scenario.config_hash())?;
    Ok((races, summary))
}

/// Everything the flip command reports for one event pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlipReport {
    pub event_a: String,
    pub event_b: String,
    pub interval_squared_km2: f64,
    pub class: IntervalClass,
    pub lab_ordering: FrameOrdering,
    /// Present only for spacelike pairs.
    pub boost_velocity_km_per_us: Option<[f64; 3]>,
    pub boost_beta: Option<f64>,
    pub flipped_ordering: Option<FrameOrdering>,
}

impl FlipReport {
    pub fn is_spacelike(&self) -> bool {
        self.class == IntervalClass::Spacelike
    }
}

/// Classify a scenario event pair and construct its order-flipping frame.
///
/// Unknown ids are an error; a non-spacelike pair is a valid (negative)
/// report — the caller decides the exit status.
pub fn flip_pair(
    scenario: &ResolvedScenario,
    id_a: &str,
    id_b: &str,
) -> Result<FlipReport, Error> {
    let quotes = assemble_quotes(scenario)?;
    let find = |id: &str| {
        quotes
            .iter()
            .find(|q| q.event.id == id)
            .map(|q| q.event.clone())
            .ok_or_else(|| crate::causal::CausalError::UnknownId(id.to_string()))
    };
    let a = find(id_a)?;
    let b = find(id_b)?;
    let s2 = interval_squared(&a, &b);
    let class = classify(&a, &b, DEFAULT_CLASSIFY_EPSILON_KM2);
    let lab_ordering =
        ordering_in_frame(&a, &b, &LorentzBoost::identity(), DEFAULT_ORDERING_TOLERANCE_US);
    let (velocity, beta, flipped) = match flip_boost(&a, &b, 0.01) {
        Ok(boost) => {
            let flipped =
                ordering_in_frame(&a, &b, &boost, DEFAULT_ORDERING_TOLERANCE_US);
            (Some(boost.velocity().into()), Some(boost.beta()), Some(flipped))
        }
        Err(_) => (None, None, None),
    };
    Ok(FlipReport {
        event_a: id_a.to_string(),
        event_b: id_b.to_string(),
        interval_squared_km2: s2,
        class,
        lab_ordering,
        boost_velocity_km_per_us: velocity,
        boost_beta: beta,
        flipped_ordering: flipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{load_config, resolve, Overrides};

    fn scenarios_dir() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
    }

    fn resolved(name: &str, out: &Path) -> ResolvedScenario {
        let path = scenarios_dir().join(name);
        let config = load_config(&path).unwrap();
        resolve(
            config,
            path.parent().unwrap(),
            &Overrides { out_dir: Some(out.to_path_buf()), ..Default::default() },
        )
        .unwrap()
    }

    #[test]
    fn simulate_order_flip_writes_deterministic_outputs() {
        let tmp = tempfile::tempdir().unwrap();
        let first = simulate_to_dir(&resolved("order_flip.toml", &tmp.path().join("a"))).unwrap();
        let second = simulate_to_dir(&resolved("order_flip.toml", &tmp.path().join("b"))).unwrap();
        assert_eq!(first, second, "byte-identical reruns");
        assert!(first.outputs.contains_key("arrivals.csv"));
        assert!(first.outputs.keys().any(|k| k.starts_with("nbbo_")));
    }

    #[test]
    fn order_flip_series_disagree_on_window() {
        let tmp = tempfile::tempdir().unwrap();
        let scenario = resolved("order_flip.toml", tmp.path());
        let result = run_simulation(&scenario).unwrap();
        let sip = &result.series.iter().find(|(_, c, _)| c.name() == "arrival_order").unwrap().2;
        let lab = &result.series.iter().find(|(_, c, _)| c.name() == "lab_frame").unwrap().2;
        let report = crate::analysis::nbbo_divergence(sip, lab, scenario.config.horizon_us);
        assert!(!report.is_empty());
        assert!(result.es.es1);
    }

    #[test]
    fn paper_network_report_rows() {
        let tmp = tempfile::tempdir().unwrap();
        let scenario = resolved("us_exchanges.toml", tmp.path());
        let report = network_report(&scenario).unwrap();
        let row = |pair: &str| report.links.iter().find(|r| r.pair == pair).unwrap();
        let mc = row("Mahwah-Carteret");
        assert_eq!(mc.distance_km, 43.0);
        assert!((mc.light_time_us - 143.0).abs() / 143.0 < 0.01);
        assert!((mc.fiber_time_us - 215.0).abs() / 215.0 < 0.01);
    }

    #[test]
    fn flip_report_on_fixture_pair() {
        let tmp = tempfile::tempdir().unwrap();
        let scenario = resolved("order_flip.toml", tmp.path());
        let report = flip_pair(&scenario, "A-0", "B-0").unwrap();
        assert!(report.is_spacelike());
        assert!((report.boost_beta.unwrap() - 0.352).abs() < 1e-3);
        assert_ne!(report.lab_ordering, report.flipped_ordering.unwrap());
    }

    #[test]
    fn flip_unknown_id_errors() {
        let tmp = tempfile::tempdir().unwrap();
        let scenario = resolved("order_flip.toml", tmp.path());
        assert!(flip_pair(&scenario, "A-0", "nope").is_err());
    }
}
