//! Brute-force enumeration of every 3x3 transition pattern.
//!
//! Coefficients here are recomputed from a literal 3x3 delta grid with
//! floating-point weights (1.5 for edge-sharing cells, 1.0 for corners) and
//! never go through [`TransitionPattern::coefficient`], so the two routes
//! check each other.

use std::collections::BTreeSet;

use rayon::prelude::*;

use std::sync::Arc;

use crate::codec::{encode, reset_channel, SwitchThreshold};
use crate::error::{Error, Result};
use crate::layout::GridLayout;
use crate::model::{Role, TransitionPattern, CLASS_COUNT};
use crate::trace::Word;

/// `3^9` victim and neighbor delta combinations.
pub const PATTERN_COUNT: usize = 19_683;

const NEIGHBOR_CELLS: [(usize, usize); 8] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (1, 0),
    (1, 2),
    (2, 0),
    (2, 1),
    (2, 2),
];

fn cell_weight(row: usize, col: usize) -> f64 {
    if row.abs_diff(1) + col.abs_diff(1) == 1 {
        1.5
    } else {
        1.0
    }
}

fn grid_coefficient(grid: &[[i8; 3]; 3]) -> f64 {
    let victim = grid[1][1];
    NEIGHBOR_CELLS
        .iter()
        .map(|&(r, c)| cell_weight(r, c) * f64::from((victim - grid[r][c]).abs()))
        .sum()
}

fn class_index(coefficient: f64) -> u8 {
    if coefficient == 0.0 {
        0
    } else {
        (2.0 * coefficient - 1.0) as u8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternEntry {
    pub index: u32,
    pub victim: i8,
    /// `NW, N, NE, W, E, SW, S, SE`.
    pub neighbors: [i8; 8],
    pub coefficient: f64,
    pub class: u8,
    pub retained_coefficient: f64,
    pub retained_class: u8,
}

impl PatternEntry {
    fn from_index(index: u32) -> Self {
        let mut rest = index;
        let mut digit = || {
            let d = (rest % 3) as i8 - 1;
            rest /= 3;
            d
        };
        let neighbors: [i8; 8] = std::array::from_fn(|_| digit());
        let victim = digit();

        let mut grid = [[0i8; 3]; 3];
        grid[1][1] = victim;
        for (&(r, c), &d) in NEIGHBOR_CELLS.iter().zip(&neighbors) {
            grid[r][c] = d;
        }
        let coefficient = grid_coefficient(&grid);
        grid[1][1] = 0;
        let retained_coefficient = grid_coefficient(&grid);
        Self {
            index,
            victim,
            neighbors,
            coefficient,
            class: class_index(coefficient),
            retained_coefficient,
            retained_class: class_index(retained_coefficient),
        }
    }

    pub fn is_switching(&self) -> bool {
        self.victim != 0
    }

    pub fn pattern(&self) -> TransitionPattern {
        TransitionPattern::from_deltas(self.victim, self.neighbors)
            .expect("enumerated deltas are in range")
    }
}

#[derive(Debug, Clone)]
pub struct PatternEnumeration {
    entries: Vec<PatternEntry>,
}

impl PatternEnumeration {
    pub fn entries(&self) -> &[PatternEntry] {
        &self.entries
    }

    pub fn switching(&self) -> impl Iterator<Item = &PatternEntry> {
        self.entries.iter().filter(|e| e.is_switching())
    }

    /// Attained coefficients, in half-units of `C_beta`.
    pub fn attained_half_units(&self, switching_only: bool) -> BTreeSet<u8> {
        self.entries
            .iter()
            .filter(|e| !switching_only || e.is_switching())
            .map(|e| (e.coefficient * 2.0) as u8)
            .collect()
    }

    pub fn attained_classes(&self) -> BTreeSet<u8> {
        self.entries.iter().map(|e| e.class).collect()
    }

    /// Pattern count per class over the whole enumeration.
    pub fn class_histogram(&self) -> [u64; CLASS_COUNT] {
        let mut hist = [0u64; CLASS_COUNT];
        for e in &self.entries {
            hist[usize::from(e.class)] += 1;
        }
        hist
    }
}

pub fn enumerate_all() -> PatternEnumeration {
    let entries = (0..PATTERN_COUNT as u32)
        .into_par_iter()
        .map(PatternEntry::from_index)
        .collect();
    PatternEnumeration { entries }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetentionReport {
    pub st: u8,
    /// Switching-victim patterns whose class exceeds `st`.
    pub candidates: usize,
    /// Candidates whose class does not strictly drop when retained.
    pub violations: Vec<u32>,
    /// Smallest class drop among candidates, if any.
    pub min_class_drop: Option<i16>,
}

impl RetentionReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn verify_retention_theorem(
    enumeration: &PatternEnumeration,
    st: SwitchThreshold,
) -> RetentionReport {
    let mut candidates = 0;
    let mut violations = Vec::new();
    let mut min_class_drop: Option<i16> = None;
    for e in enumeration.switching().filter(|e| e.class > st.value()) {
        candidates += 1;
        let drop = i16::from(e.class) - i16::from(e.retained_class);
        min_class_drop = Some(min_class_drop.map_or(drop, |m| m.min(drop)));
        if drop <= 0 {
            violations.push(e.index);
        }
    }
    RetentionReport {
        st: st.value(),
        candidates,
        violations,
        min_class_drop,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Retain,
    Send,
}

/// Reference retention decision for a switching victim.
pub fn decision_oracle(pattern: &TransitionPattern, st: SwitchThreshold) -> Result<Decision> {
    let victim = pattern.victim().delta();
    if victim == 0 {
        return Err(Error::SteadyVictim);
    }
    let coefficient: f64 = pattern
        .neighbors()
        .iter()
        .map(|n| {
            let weight = match n.role {
                Role::Direct => 1.5,
                Role::Diagonal => 1.0,
                Role::Absent => 0.0,
            };
            weight * f64::from((victim - n.transition.delta()).abs())
        })
        .sum();
    Ok(if class_index(coefficient) > st.value() {
        Decision::Retain
    } else {
        Decision::Send
    })
}

/// Entries whose coefficient or class disagrees with [`TransitionPattern`].
pub fn model_disagreements(enumeration: &PatternEnumeration) -> Vec<u32> {
    enumeration
        .entries()
        .iter()
        .filter(|e| {
            let p = e.pattern();
            p.coefficient().value() != e.coefficient
                || p.class().index() != e.class
                || p.retained().class().index() != e.retained_class
        })
        .map(|e| e.index)
        .collect()
}

/// Previous and next levels of a 3x3 cluster (row-major) realizing the
/// entry's deltas. Steady cells alternate between 0 and 1 by position.
pub fn embed_levels(entry: &PatternEntry) -> ([bool; 9], [bool; 9]) {
    let mut deltas = [0i8; 9];
    deltas[4] = entry.victim;
    for (&(r, c), &d) in NEIGHBOR_CELLS.iter().zip(&entry.neighbors) {
        deltas[r * 3 + c] = d;
    }
    let mut prev = [false; 9];
    let mut next = [false; 9];
    for (i, &d) in deltas.iter().enumerate() {
        (prev[i], next[i]) = match d {
            1 => (false, true),
            -1 => (true, false),
            _ => (i % 2 == 1, i % 2 == 1),
        };
    }
    (prev, next)
}

/// Switching-victim entries where the encoder's decision on a 3x3 channel
/// differs from [`decision_oracle`].
pub fn codec_disagreements(enumeration: &PatternEnumeration, st: SwitchThreshold) -> Vec<u32> {
    let layout = Arc::new(GridLayout::new(3, 3, 9).expect("3x3 layout is valid"));
    let word_of = |levels: [bool; 9]| Word::from_bits(levels);
    enumeration
        .switching()
        .par_bridge()
        .filter(|e| {
            let (prev, next) = embed_levels(e);
            let mut state = reset_channel(&layout);
            if encode(
                &mut state,
                &word_of(prev),
                SwitchThreshold::new(39).unwrap(),
            )
            .is_err()
            {
                return true;
            }
            let retained = match encode(&mut state, &word_of(next), st) {
                Ok(r) => !r.retained.is_empty(),
                Err(_) => return true,
            };
            let expected = matches!(decision_oracle(&e.pattern(), st), Ok(Decision::Retain));
            retained != expected
        })
        .map(|e| e.index)
        .collect::<BTreeSet<u32>>()
        .into_iter()
        .collect()
}
