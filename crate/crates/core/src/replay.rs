//! Cycle-by-cycle trace replay through a codec, with the receiver running in
//! lockstep, and the switch-threshold sweep built on top of it.
//!
//! Delay is computed for every data TSV from the transitions actually driven
//! (off-grid neighbors absent). Classes are histogrammed only for victims,
//! one event per victim per cycle in which its logical data bit changes,
//! binned by the class of the pattern actually driven.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{reset_channel, CodecSpec, LinkCodec, SwitchThreshold};
use crate::error::{Error, Result};
use crate::layout::GridLayout;
use crate::model::{CouplingParams, CrosstalkClass, CLASS_COUNT};
use crate::trace::{Trace, Word};

/// How per-TSV delays combine into one bus delay per cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Slowest data TSV.
    #[default]
    Max,
    /// Mean over all data-carrying TSVs, steady ones counted as 0.
    Mean,
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Max => "max",
            Aggregation::Mean => "mean",
        })
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Aggregation::Max),
            "mean" => Ok(Aggregation::Mean),
            other => Err(Error::InvalidParameter {
                name: "aggregation",
                reason: format!("expected max or mean, got {other:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReplayOptions {
    pub params: CouplingParams,
    pub aggregation: Aggregation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleReport {
    /// 1-based.
    pub cycle: u64,
    pub intended_classes: Vec<CrosstalkClass>,
    pub actual_classes: Vec<CrosstalkClass>,
    /// Per grid position; padding TSVs are always 0.
    pub tsv_delays: Vec<f64>,
    pub bus_delay: f64,
    pub retained: usize,
    pub control_transitions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub codec: String,
    pub aggregation: Aggregation,
    pub cycles: u64,
    pub total_bus_delay: f64,
    pub mean_bus_delay: f64,
    pub max_bus_delay: f64,
    /// Set by [`RunReport::normalize_against`].
    pub normalized_delay: Option<f64>,
    /// Victim events per actual class.
    pub class_histogram: [u64; CLASS_COUNT],
    /// Victim/cycle pairs where the logical data bit changed.
    pub victim_events: u64,
    /// Victim/cycle pairs where the wire would have switched without coding.
    pub victim_attempts: u64,
    pub retained_events: u64,
    /// `retained_events / victim_attempts`.
    pub retention_rate: f64,
    pub control_transitions: u64,
    /// Non-retained victims whose actual class exceeds the intended one
    /// because a neighbor was retained.
    pub worsened_by_neighbors: u64,
}

impl RunReport {
    fn empty(codec: String, aggregation: Aggregation) -> Self {
        Self {
            codec,
            aggregation,
            cycles: 0,
            total_bus_delay: 0.0,
            mean_bus_delay: 0.0,
            max_bus_delay: 0.0,
            normalized_delay: None,
            class_histogram: [0; CLASS_COUNT],
            victim_events: 0,
            victim_attempts: 0,
            retained_events: 0,
            retention_rate: 0.0,
            control_transitions: 0,
            worsened_by_neighbors: 0,
        }
    }

    pub fn histogram_total(&self) -> u64 {
        self.class_histogram.iter().sum()
    }

    /// Events with class strictly above `class`.
    pub fn events_above(&self, class: u8) -> u64 {
        self.class_histogram[usize::from(class) + 1..].iter().sum()
    }

    pub fn normalize_against(&mut self, baseline: &RunReport) -> Result<f64> {
        let ratio = normalized_delay(self, baseline)?;
        self.normalized_delay = Some(ratio);
        Ok(ratio)
    }
}

/// Mean bus delay of `report` relative to `baseline`.
pub fn normalized_delay(report: &RunReport, baseline: &RunReport) -> Result<f64> {
    if report.cycles != baseline.cycles || report.aggregation != baseline.aggregation {
        return Err(Error::Incomparable(format!(
            "{} cycles ({}) vs {} cycles ({})",
            report.cycles, report.aggregation, baseline.cycles, baseline.aggregation
        )));
    }
    if baseline.mean_bus_delay == 0.0 {
        return Err(Error::ZeroBaseline);
    }
    Ok(report.mean_bus_delay / baseline.mean_bus_delay)
}

pub fn replay(
    trace: &Trace,
    layout: &Arc<GridLayout>,
    codec: &dyn LinkCodec,
    options: &ReplayOptions,
) -> Result<RunReport> {
    replay_with(trace, layout, codec, options, |_| {})
}

/// Like [`replay`], handing every cycle's report to `observer`.
pub fn replay_with<F>(
    trace: &Trace,
    layout: &Arc<GridLayout>,
    codec: &dyn LinkCodec,
    options: &ReplayOptions,
    mut observer: F,
) -> Result<RunReport>
where
    F: FnMut(&CycleReport),
{
    if trace.width() != layout.bit_width() {
        return Err(Error::WidthMismatch {
            what: "trace",
            expected: layout.bit_width(),
            actual: trace.width(),
        });
    }
    let mut report = RunReport::empty(codec.label(), options.aggregation);
    let mut tx = reset_channel(layout);
    let mut rx = reset_channel(layout);
    let mut previous = Word::zeros(layout.bit_width());
    let data_positions: Vec<usize> = (0..layout.bit_width())
        .map(|b| layout.bit_position(b))
        .collect();

    for (index, word) in trace.words().iter().enumerate() {
        let cycle = index as u64 + 1;
        let encoded = codec.encode(&mut tx, word)?;
        let decoded = codec.decode(&mut rx, &encoded.wire_next, &encoded.control_next)?;
        if &decoded != word {
            return Err(Error::DecoderMismatch { cycle });
        }

        let mut tsv_delays = vec![0.0; layout.tsv_count()];
        for &pos in &data_positions {
            if encoded.actual_transitions[pos].is_switching() {
                let (rho1, rho2) = layout.rho_at(pos, &encoded.actual_transitions);
                tsv_delays[pos] = options.params.switching_delay(rho1, rho2);
            }
        }
        let bus_delay = match options.aggregation {
            Aggregation::Max => data_positions
                .iter()
                .map(|&p| tsv_delays[p])
                .fold(0.0, f64::max),
            Aggregation::Mean => {
                data_positions.iter().map(|&p| tsv_delays[p]).sum::<f64>()
                    / data_positions.len() as f64
            }
        };

        let mut retained_iter = encoded.retained.iter().peekable();
        for (k, &pos) in layout.victims().iter().enumerate() {
            let was_retained = retained_iter.next_if_eq(&&k).is_some();
            if was_retained || encoded.actual_transitions[pos].is_switching() {
                report.victim_attempts += 1;
            }
            if !was_retained && encoded.actual_classes[k] > encoded.intended_classes[k] {
                report.worsened_by_neighbors += 1;
            }
            if let Some(bit) = layout.bit_at(pos) {
                if word.get(bit) != previous.get(bit) {
                    report.victim_events += 1;
                    report.class_histogram[usize::from(encoded.actual_classes[k].index())] += 1;
                }
            }
        }

        report.cycles = cycle;
        report.total_bus_delay += bus_delay;
        report.max_bus_delay = report.max_bus_delay.max(bus_delay);
        report.retained_events += encoded.retained.len() as u64;
        report.control_transitions += encoded.control_toggles() as u64;

        observer(&CycleReport {
            cycle,
            retained: encoded.retained.len(),
            control_transitions: encoded.control_toggles(),
            intended_classes: encoded.intended_classes,
            actual_classes: encoded.actual_classes,
            tsv_delays,
            bus_delay,
        });
        previous.clone_from(word);
    }

    if report.cycles > 0 {
        report.mean_bus_delay = report.total_bus_delay / report.cycles as f64;
    }
    if report.victim_attempts > 0 {
        report.retention_rate = report.retained_events as f64 / report.victim_attempts as f64;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub st: u8,
    pub report: RunReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub baseline: RunReport,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Threshold with the lowest mean bus delay; the lowest such threshold on ties.
    pub fn argmin(&self) -> Option<u8> {
        self.rows
            .iter()
            .min_by(|a, b| {
                a.report
                    .mean_bus_delay
                    .total_cmp(&b.report.mean_bus_delay)
                    .then(a.st.cmp(&b.st))
            })
            .map(|r| r.st)
    }

    /// The minimum lies strictly inside the swept range.
    pub fn has_interior_minimum(&self) -> bool {
        match (self.argmin(), self.rows.first(), self.rows.last()) {
            (Some(best), Some(first), Some(last)) => first.st < best && best < last.st,
            _ => false,
        }
    }

    pub fn normalized(&self, row: &SweepRow) -> Option<f64> {
        normalized_delay(&row.report, &self.baseline).ok()
    }
}

/// One retention replay per threshold, run in parallel and returned in
/// threshold order, plus the uncoded baseline.
pub fn sweep_st(
    trace: &Trace,
    layout: &Arc<GridLayout>,
    options: &ReplayOptions,
    thresholds: &[SwitchThreshold],
) -> Result<SweepTable> {
    let baseline = replay(trace, layout, &CodecSpec::Uncoded, options)?;
    let rows = thresholds
        .par_iter()
        .map(|&st| {
            replay(trace, layout, &CodecSpec::Retention { st }, options).map(|report| SweepRow {
                st: st.value(),
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { baseline, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout9() -> Arc<GridLayout> {
        Arc::new(GridLayout::new(3, 3, 9).unwrap())
    }

    fn trace9(words: &[&str]) -> Trace {
        let words = words
            .iter()
            .map(|w| Word::from_bits(w.chars().map(|c| c == '1')))
            .collect();
        Trace::new(9, words).unwrap()
    }

    #[test]
    fn empty_trace() {
        let r = replay(
            &trace9(&[]),
            &layout9(),
            &CodecSpec::Uncoded,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r.cycles, 0);
        assert_eq!(r.mean_bus_delay, 0.0);
        assert_eq!(r.max_bus_delay, 0.0);
        assert_eq!(r.histogram_total(), 0);
        assert_eq!(r.retention_rate, 0.0);
    }

    #[test]
    fn identical_words_have_no_delay() {
        let mut delays = Vec::new();
        replay_with(
            &trace9(&["101101011", "101101011"]),
            &layout9(),
            &CodecSpec::Uncoded,
            &Default::default(),
            |c| delays.push(c.bus_delay),
        )
        .unwrap();
        assert!(delays[0] > 0.0);
        assert_eq!(delays[1], 0.0);
    }

    #[test]
    fn worst_case_cycle() {
        let mut cycles = Vec::new();
        let r = replay_with(
            &trace9(&["000010000", "111101111"]),
            &layout9(),
            &CodecSpec::Uncoded,
            &Default::default(),
            |c| cycles.push(c.clone()),
        )
        .unwrap();
        let second = &cycles[1];
        assert_eq!(second.actual_classes[0].index(), 39);
        assert!((second.bus_delay - 76.68).abs() < 1e-9);
        assert!((r.max_bus_delay - 76.68).abs() < 1e-9);
        assert_eq!(r.class_histogram[39], 1);
    }

    #[test]
    fn width_mismatch() {
        let trace = Trace::new(8, vec![Word::zeros(8)]).unwrap();
        assert!(matches!(
            replay(&trace, &layout9(), &CodecSpec::Uncoded, &Default::default()),
            Err(Error::WidthMismatch { .. })
        ));
    }

    #[test]
    fn normalization() {
        let trace = trace9(&["000010000", "111101111", "000000000"]);
        let r = replay(&trace, &layout9(), &CodecSpec::Uncoded, &Default::default()).unwrap();
        assert_eq!(normalized_delay(&r, &r).unwrap(), 1.0);
        let empty = replay(
            &trace9(&[]),
            &layout9(),
            &CodecSpec::Uncoded,
            &Default::default(),
        )
        .unwrap();
        assert!(matches!(
            normalized_delay(&empty, &empty),
            Err(Error::ZeroBaseline)
        ));
        assert!(matches!(
            normalized_delay(&r, &empty),
            Err(Error::Incomparable(_))
        ));
    }

    #[test]
    fn mean_aggregation_averages_data_tsvs() {
        let trace = trace9(&["111111111"]);
        let options = ReplayOptions {
            aggregation: Aggregation::Mean,
            ..Default::default()
        };
        let r = replay(&trace, &layout9(), &CodecSpec::Uncoded, &options).unwrap();
        // Every TSV rises with its neighbors: pure pi0 each.
        assert_eq!(r.mean_bus_delay, 1.0);
    }

    #[test]
    fn retention_is_accounted() {
        let trace = trace9(&["111101111", "000010000"]);
        let codec = CodecSpec::Retention {
            st: SwitchThreshold::default(),
        };
        let r = replay(&trace, &layout9(), &codec, &Default::default()).unwrap();
        assert_eq!(r.retained_events, 1);
        assert_eq!(r.control_transitions, 1);
        assert_eq!(r.victim_events, 1);
        assert_eq!(r.victim_attempts, 1);
        assert_eq!(r.retention_rate, 1.0);
        // Retained victim is histogrammed at the reduced class.
        assert_eq!(r.class_histogram[19], 1);
    }

    #[test]
    fn sweep_of_empty_trace() {
        let sts: Vec<_> = (0..40).map(|s| SwitchThreshold::new(s).unwrap()).collect();
        let t = sweep_st(&trace9(&[]), &layout9(), &Default::default(), &sts).unwrap();
        assert_eq!(t.rows.len(), 40);
        assert!(t.rows.iter().all(|r| r.report.mean_bus_delay == 0.0));
        assert!(t.rows.iter().enumerate().all(|(i, r)| r.st as usize == i));
    }
}
