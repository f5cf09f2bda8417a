//! Retention codec: suppress a victim's transition when its neighborhood
//! would put it above the switch threshold, and signal the suppression by
//! toggling the victim's control TSV.
//!
//! All victims decide simultaneously from the intended (pre-suppression)
//! transitions, the way a per-cluster combinational coder would. Intended
//! transitions are taken against the physical wire levels, which may hold a
//! stale value from an earlier retention. A retained victim's wire therefore
//! always carries the complement of its data bit, which is what the decoder
//! restores when it sees the control toggle.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::GridLayout;
use crate::model::{CrosstalkClass, Transition};
use crate::trace::Word;

/// Class above which a victim's transition is suppressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SwitchThreshold(u8);

impl Default for SwitchThreshold {
    fn default() -> Self {
        SwitchThreshold(20)
    }
}

impl SwitchThreshold {
    pub fn new(st: u32) -> Result<Self> {
        if st > 39 {
            return Err(Error::ThresholdOutOfRange(st));
        }
        Ok(SwitchThreshold(st as u8))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Strictly greater than the threshold.
    pub fn exceeded_by(self, class: CrosstalkClass) -> bool {
        class.index() > self.0
    }
}

impl fmt::Display for SwitchThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Physical levels on one side of the link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelState {
    layout: Arc<GridLayout>,
    wire: Vec<bool>,
    control: Vec<bool>,
}

impl ChannelState {
    pub fn layout(&self) -> &Arc<GridLayout> {
        &self.layout
    }

    pub fn wire(&self) -> &[bool] {
        &self.wire
    }

    pub fn control(&self) -> &[bool] {
        &self.control
    }
}

/// All data and control TSVs at 0.
pub fn reset_channel(layout: &Arc<GridLayout>) -> ChannelState {
    ChannelState {
        layout: Arc::clone(layout),
        wire: vec![false; layout.tsv_count()],
        control: vec![false; layout.control_count()],
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodeResult {
    pub wire_next: Vec<bool>,
    pub control_next: Vec<bool>,
    /// Indices into `layout.victims()` whose transition was suppressed.
    pub retained: Vec<usize>,
    /// Per victim, the class the data alone would have produced.
    pub intended_classes: Vec<CrosstalkClass>,
    /// Per victim, the class of the pattern actually driven.
    pub actual_classes: Vec<CrosstalkClass>,
    /// Per data TSV, the transition actually driven.
    pub actual_transitions: Vec<Transition>,
}

impl EncodeResult {
    pub fn control_toggles(&self) -> usize {
        self.retained.len()
    }
}

fn encode_with(
    state: &mut ChannelState,
    word: &Word,
    threshold: Option<SwitchThreshold>,
) -> Result<EncodeResult> {
    let layout = Arc::clone(&state.layout);
    let target = layout.grid_of(word)?;
    let intended: Vec<Transition> = state
        .wire
        .iter()
        .zip(&target)
        .map(|(&prev, &next)| Transition::between(prev, next))
        .collect();

    let mut wire_next = target;
    let mut control_next = state.control.clone();
    let mut retained = Vec::new();
    let mut intended_classes = Vec::with_capacity(layout.control_count());
    for (k, &pos) in layout.victims().iter().enumerate() {
        let class = layout.class_at(pos, &intended);
        intended_classes.push(class);
        let retain =
            intended[pos].is_switching() && threshold.is_some_and(|st| st.exceeded_by(class));
        if retain {
            wire_next[pos] = state.wire[pos];
            control_next[k] = !control_next[k];
            retained.push(k);
        }
    }

    let actual_transitions: Vec<Transition> = if retained.is_empty() {
        intended
    } else {
        state
            .wire
            .iter()
            .zip(&wire_next)
            .map(|(&prev, &next)| Transition::between(prev, next))
            .collect()
    };
    let actual_classes = layout
        .victims()
        .iter()
        .map(|&pos| layout.class_at(pos, &actual_transitions))
        .collect();

    state.wire.clone_from(&wire_next);
    state.control.clone_from(&control_next);
    Ok(EncodeResult {
        wire_next,
        control_next,
        retained,
        intended_classes,
        actual_classes,
        actual_transitions,
    })
}

/// Encodes one word with retention at threshold `st`, advancing `state`.
pub fn encode(state: &mut ChannelState, word: &Word, st: SwitchThreshold) -> Result<EncodeResult> {
    encode_with(state, word, Some(st))
}

/// Drives the word as-is; control TSVs never move.
pub fn uncoded_encode(state: &mut ChannelState, word: &Word) -> Result<EncodeResult> {
    encode_with(state, word, None)
}

/// Recovers the data word from observed levels, advancing the receiver state.
pub fn decode(
    state: &mut ChannelState,
    wire_observed: &[bool],
    control_observed: &[bool],
) -> Result<Word> {
    let layout = Arc::clone(&state.layout);
    layout.check_grid("observed wire", wire_observed)?;
    if control_observed.len() != layout.control_count() {
        return Err(Error::WidthMismatch {
            what: "observed control",
            expected: layout.control_count(),
            actual: control_observed.len(),
        });
    }
    let mut grid = wire_observed.to_vec();
    for (k, &pos) in layout.victims().iter().enumerate() {
        if control_observed[k] != state.control[k] {
            grid[pos] = !wire_observed[pos];
        }
    }
    state.wire.copy_from_slice(wire_observed);
    state.control.copy_from_slice(control_observed);
    layout.word_of(&grid)
}

/// Encoder/decoder pair sharing a wire protocol.
pub trait LinkCodec: Send + Sync {
    fn label(&self) -> String;

    fn encode(&self, state: &mut ChannelState, word: &Word) -> Result<EncodeResult>;

    fn decode(
        &self,
        state: &mut ChannelState,
        wire_observed: &[bool],
        control_observed: &[bool],
    ) -> Result<Word>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "codec", rename_all = "snake_case")]
pub enum CodecSpec {
    Uncoded,
    #[serde(rename = "3dcam")]
    Retention {
        st: SwitchThreshold,
    },
}

impl CodecSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CodecSpec::Uncoded => "uncoded",
            CodecSpec::Retention { .. } => "3dcam",
        }
    }

    /// Parses a codec name (`uncoded` or `3dcam`), attaching `st` to the latter.
    pub fn parse(name: &str, st: SwitchThreshold) -> Result<Self> {
        match CodecKind::from_str(name)? {
            CodecKind::Uncoded => Ok(CodecSpec::Uncoded),
            CodecKind::Retention => Ok(CodecSpec::Retention { st }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodecKind {
    Uncoded,
    Retention,
}

impl FromStr for CodecKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uncoded" => Ok(CodecKind::Uncoded),
            "3dcam" => Ok(CodecKind::Retention),
            other => Err(Error::InvalidParameter {
                name: "codec",
                reason: format!("expected 3dcam or uncoded, got {other:?}"),
            }),
        }
    }
}

impl LinkCodec for CodecSpec {
    fn label(&self) -> String {
        match self {
            CodecSpec::Uncoded => "uncoded".into(),
            CodecSpec::Retention { st } => format!("3dcam(st={st})"),
        }
    }

    fn encode(&self, state: &mut ChannelState, word: &Word) -> Result<EncodeResult> {
        match *self {
            CodecSpec::Uncoded => uncoded_encode(state, word),
            CodecSpec::Retention { st } => encode(state, word, st),
        }
    }

    fn decode(
        &self,
        state: &mut ChannelState,
        wire_observed: &[bool],
        control_observed: &[bool],
    ) -> Result<Word> {
        match self {
            CodecSpec::Uncoded => {
                state.layout.check_grid("observed wire", wire_observed)?;
                state.wire.copy_from_slice(wire_observed);
                state.layout.word_of(wire_observed)
            }
            CodecSpec::Retention { .. } => decode(state, wire_observed, control_observed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(rows: usize, cols: usize) -> Arc<GridLayout> {
        Arc::new(GridLayout::new(rows, cols, rows * cols).unwrap())
    }

    fn word9(bits: &str) -> Word {
        Word::from_bits(bits.chars().map(|c| c == '1'))
    }

    fn st(v: u32) -> SwitchThreshold {
        SwitchThreshold::new(v).unwrap()
    }

    #[test]
    fn threshold_range() {
        assert!(SwitchThreshold::new(39).is_ok());
        assert!(matches!(
            SwitchThreshold::new(40),
            Err(Error::ThresholdOutOfRange(40))
        ));
        assert_eq!(SwitchThreshold::default().value(), 20);
    }

    #[test]
    fn reset_fixtures() {
        let s = reset_channel(&layout(3, 3));
        assert_eq!((s.wire().len(), s.control().len()), (9, 1));
        assert!(s.wire().iter().chain(s.control()).all(|b| !b));
        let l = layout(3, 22);
        let s = reset_channel(&l);
        assert_eq!((s.wire().len(), s.control().len()), (66, 20));
        assert_eq!(reset_channel(&l), reset_channel(&l));
    }

    // Rows NW N NE / W V E / SW S SE:
    //   prev 0 1 0 / 1 0 1 / 0 0 0   next 1 0 1 / 0 1 0 / 0 0 0
    // V rises; N, W, E fall; NW, NE rise; S, SW, SE steady.
    #[test]
    fn class_24_victim_is_retained() {
        let l = layout(3, 3);
        let mut enc = reset_channel(&l);
        let mut dec = reset_channel(&l);
        for w in ["010101000", "101010000"] {
            let word = word9(w);
            let r = encode(&mut enc, &word, st(20)).unwrap();
            assert_eq!(
                decode(&mut dec, &r.wire_next, &r.control_next).unwrap(),
                word
            );
            if w == "101010000" {
                assert_eq!(r.intended_classes[0].index(), 24);
                assert_eq!(r.retained, vec![0]);
                assert_eq!(r.actual_classes[0].index(), 12);
                assert!(r.control_next[0]);
                assert!(!r.wire_next[4]);
            }
        }
    }

    #[test]
    fn all_rise_is_class_zero() {
        let l = layout(3, 3);
        let mut s = reset_channel(&l);
        let word = word9("111111111");
        let r = encode(&mut s, &word, st(20)).unwrap();
        assert!(r.retained.is_empty());
        assert_eq!(r.intended_classes[0].index(), 0);
        assert_eq!(l.word_of(&r.wire_next).unwrap(), word);
    }

    #[test]
    fn threshold_39_never_retains() {
        let l = layout(3, 3);
        let mut s = reset_channel(&l);
        for w in ["000010000", "111101111", "000010000"] {
            let r = encode(&mut s, &word9(w), st(39)).unwrap();
            assert!(r.retained.is_empty());
            assert_eq!(l.word_of(&r.wire_next).unwrap(), word9(w));
        }
    }

    #[test]
    fn decode_fixtures() {
        let l = layout(3, 3);
        let mut s = reset_channel(&l);
        let mut wire = vec![false; 9];
        wire[4] = true;
        assert!(decode(&mut s, &wire, &[false]).unwrap().get(4));

        let mut s = reset_channel(&l);
        let w = decode(&mut s, &[false; 9], &[true]).unwrap();
        assert!(w.get(4));
        assert_eq!(w.count_ones(), 1);

        assert!(decode(&mut s, &[false; 8], &[true]).is_err());
        assert!(decode(&mut s, &[false; 9], &[]).is_err());
    }

    #[test]
    fn uncoded_fixtures() {
        let l = layout(3, 3);
        let mut s = reset_channel(&l);
        let word = word9("010110001");
        for _ in 0..2 {
            let r = uncoded_encode(&mut s, &word).unwrap();
            assert_eq!(l.word_of(&r.wire_next).unwrap(), word);
            assert!(r.control_next.iter().all(|c| !c));
        }
        assert!(s.wire().iter().zip(word.bits()).all(|(a, b)| *a == b));

        let mut s = reset_channel(&l);
        uncoded_encode(&mut s, &word9("000010000")).unwrap();
        let r = uncoded_encode(&mut s, &word9("111101111")).unwrap();
        assert_eq!(r.intended_classes[0].index(), 39);
        assert_eq!(r.actual_classes[0].index(), 39);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let l = layout(3, 3);
        let mut s = reset_channel(&l);
        assert!(matches!(
            encode(&mut s, &Word::zeros(8), st(20)),
            Err(Error::WidthMismatch {
                expected: 9,
                actual: 8,
                ..
            })
        ));
        assert!(uncoded_encode(&mut s, &Word::zeros(10)).is_err());
    }

    #[test]
    fn repeated_retention_keeps_wire_complemented() {
        // The victim keeps wanting to rise against a falling neighborhood.
        let l = layout(3, 3);
        let mut enc = reset_channel(&l);
        let mut dec = reset_channel(&l);
        for w in ["111101111", "000010000", "111111111", "000010000"] {
            let word = word9(w);
            let r = encode(&mut enc, &word, st(20)).unwrap();
            let out = decode(&mut dec, &r.wire_next, &r.control_next).unwrap();
            assert_eq!(out, word, "cycle word {w}");
        }
    }

    #[test]
    fn codec_spec_parsing() {
        assert_eq!(
            CodecSpec::parse("uncoded", st(3)).unwrap(),
            CodecSpec::Uncoded
        );
        assert_eq!(
            CodecSpec::parse("3dcam", st(3)).unwrap(),
            CodecSpec::Retention { st: st(3) }
        );
        assert!(CodecSpec::parse("3dlat", st(3)).is_err());
        assert_eq!(CodecSpec::Retention { st: st(20) }.label(), "3dcam(st=20)");
    }
}
