//! Placement of data bits on an `R x N` TSV grid and the control TSVs that
//! protect the middle row.
//!
//! Every middle-row TSV with a complete 8-neighborhood (columns `1..N-1`)
//! is a victim and owns one control TSV. Control TSVs live in a separate
//! strip and never couple into the data grid. Grid positions with no data bit
//! are padding TSVs held at 0.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CrosstalkClass, Slot, Transition, TransitionPattern};
use crate::trace::Word;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitOrder {
    #[default]
    RowMajor,
    /// Row-major with every odd row reversed.
    Snake,
}

impl fmt::Display for BitOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BitOrder::RowMajor => "row_major",
            BitOrder::Snake => "snake",
        })
    }
}

impl FromStr for BitOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "row_major" | "row-major" => Ok(BitOrder::RowMajor),
            "snake" => Ok(BitOrder::Snake),
            other => Err(Error::InvalidParameter {
                name: "bit_order",
                reason: format!("expected row_major or snake, got {other:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridLayout {
    rows: usize,
    cols: usize,
    bit_width: usize,
    order: BitOrder,
    bit_positions: Vec<usize>,
    position_bits: Vec<Option<usize>>,
    victims: Vec<usize>,
    control_of: Vec<Option<usize>>,
    neighbors: Vec<[Option<usize>; 8]>,
    // Same as `neighbors`, with absent slots pointing back at the TSV itself.
    coupling: Vec<[usize; 8]>,
}

impl GridLayout {
    pub fn new(rows: usize, cols: usize, bit_width: usize) -> Result<Self> {
        Self::with_order(rows, cols, bit_width, BitOrder::RowMajor)
    }

    pub fn with_order(rows: usize, cols: usize, bit_width: usize, order: BitOrder) -> Result<Self> {
        if rows < 3 || cols < 3 {
            return Err(Error::Layout(format!(
                "{rows}x{cols} grid has no TSV with a complete 3x3 neighborhood"
            )));
        }
        let slots = rows * cols;
        if bit_width == 0 || bit_width > slots {
            return Err(Error::Layout(format!(
                "bit width {bit_width} does not fit a {rows}x{cols} grid of {slots} TSVs"
            )));
        }

        let bit_positions: Vec<usize> = (0..bit_width)
            .map(|bit| {
                let (row, col) = (bit / cols, bit % cols);
                let col = match order {
                    BitOrder::Snake if row % 2 == 1 => cols - 1 - col,
                    _ => col,
                };
                row * cols + col
            })
            .collect();
        let mut position_bits = vec![None; slots];
        for (bit, &pos) in bit_positions.iter().enumerate() {
            position_bits[pos] = Some(bit);
        }

        let middle = rows / 2;
        let victims: Vec<usize> = (1..cols - 1).map(|col| middle * cols + col).collect();
        let mut control_of = vec![None; slots];
        for (control, &pos) in victims.iter().enumerate() {
            control_of[pos] = Some(control);
        }

        let neighbors: Vec<[Option<usize>; 8]> = (0..slots)
            .map(|pos| {
                let (row, col) = ((pos / cols) as isize, (pos % cols) as isize);
                Slot::ALL.map(|slot| {
                    let (dr, dc) = slot.offset();
                    let (r, c) = (row + dr, col + dc);
                    (r >= 0 && c >= 0 && (r as usize) < rows && (c as usize) < cols)
                        .then(|| r as usize * cols + c as usize)
                })
            })
            .collect();
        let coupling = neighbors
            .iter()
            .enumerate()
            .map(|(pos, n)| n.map(|p| p.unwrap_or(pos)))
            .collect();

        Ok(Self {
            rows,
            cols,
            bit_width,
            order,
            bit_positions,
            position_bits,
            victims,
            control_of,
            neighbors,
            coupling,
        })
    }

    /// Smallest 3-row layout holding `bit_width` bits (at least 3 columns).
    pub fn for_width(bit_width: usize) -> Result<Self> {
        Self::new(3, bit_width.div_ceil(3).max(3), bit_width)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bit_width(&self) -> usize {
        self.bit_width
    }

    pub fn order(&self) -> BitOrder {
        self.order
    }

    /// Number of data TSVs, padding included.
    pub fn tsv_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn padding_count(&self) -> usize {
        self.tsv_count() - self.bit_width
    }

    pub fn control_count(&self) -> usize {
        self.victims.len()
    }

    /// Victim grid positions (flat row-major indices), in control-TSV order.
    pub fn victims(&self) -> &[usize] {
        &self.victims
    }

    pub fn victim_coords(&self) -> Vec<(usize, usize)> {
        self.victims.iter().map(|&p| self.coords(p)).collect()
    }

    pub fn coords(&self, pos: usize) -> (usize, usize) {
        (pos / self.cols, pos % self.cols)
    }

    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        (row < self.rows && col < self.cols).then(|| row * self.cols + col)
    }

    /// Grid position carrying data bit `bit`.
    pub fn bit_position(&self, bit: usize) -> usize {
        self.bit_positions[bit]
    }

    /// Data bit carried at `pos`, or `None` for padding.
    pub fn bit_at(&self, pos: usize) -> Option<usize> {
        self.position_bits[pos]
    }

    pub fn control_index(&self, pos: usize) -> Option<usize> {
        self.control_of[pos]
    }

    /// Neighbor positions in `NW, N, NE, W, E, SW, S, SE` order.
    pub fn neighbors(&self, pos: usize) -> &[Option<usize>; 8] {
        &self.neighbors[pos]
    }

    /// Pattern around any grid position from per-TSV transitions; off-grid
    /// neighbors are absent.
    pub fn pattern_from_transitions(&self, pos: usize, deltas: &[Transition]) -> TransitionPattern {
        let mut neighbors = [None; 8];
        for (out, n) in neighbors.iter_mut().zip(&self.neighbors[pos]) {
            *out = n.map(|p| deltas[p]);
        }
        TransitionPattern::with_absent(deltas[pos], neighbors)
    }

    /// `(rho1, rho2)` at `pos`, without building the pattern.
    #[inline]
    pub fn rho_at(&self, pos: usize, deltas: &[Transition]) -> (u8, u8) {
        let victim = deltas[pos];
        let n = &self.coupling[pos];
        let s = |slot: usize| victim.swing(deltas[n[slot]]);
        (s(1) + s(3) + s(4) + s(6), s(0) + s(2) + s(5) + s(7))
    }

    /// Class of the pattern at `pos`.
    #[inline]
    pub fn class_at(&self, pos: usize, deltas: &[Transition]) -> CrosstalkClass {
        let (rho1, rho2) = self.rho_at(pos, deltas);
        CrosstalkClass::from_rho(rho1, rho2)
    }

    /// Pattern around any grid position between two grid states.
    pub fn pattern_at(&self, pos: usize, prev: &[bool], next: &[bool]) -> TransitionPattern {
        let delta = |p: usize| Transition::between(prev[p], next[p]);
        let neighbors = self.neighbors[pos].map(|n| n.map(delta));
        TransitionPattern::with_absent(delta(pos), neighbors)
    }

    /// Pattern seen by the victim at `(row, col)`.
    pub fn neighborhood_of(
        &self,
        victim: (usize, usize),
        prev: &[bool],
        next: &[bool],
    ) -> Result<TransitionPattern> {
        let (row, col) = victim;
        let pos = self
            .position(row, col)
            .filter(|&p| self.control_of[p].is_some())
            .ok_or(Error::NotAVictim { row, col })?;
        for (what, grid) in [("previous grid", prev), ("next grid", next)] {
            self.check_grid(what, grid)?;
        }
        Ok(self.pattern_at(pos, prev, next))
    }

    pub(crate) fn check_grid(&self, what: &'static str, grid: &[bool]) -> Result<()> {
        if grid.len() != self.tsv_count() {
            return Err(Error::WidthMismatch {
                what,
                expected: self.tsv_count(),
                actual: grid.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_word(&self, word: &Word) -> Result<()> {
        if word.width() != self.bit_width {
            return Err(Error::WidthMismatch {
                what: "data word",
                expected: self.bit_width,
                actual: word.width(),
            });
        }
        Ok(())
    }

    /// TSV levels for a data word; padding positions are 0.
    pub fn grid_of(&self, word: &Word) -> Result<Vec<bool>> {
        self.check_word(word)?;
        let mut grid = vec![false; self.tsv_count()];
        for (bit, &pos) in self.bit_positions.iter().enumerate() {
            grid[pos] = word.get(bit);
        }
        Ok(grid)
    }

    /// Data word read back from TSV levels; padding is ignored.
    pub fn word_of(&self, grid: &[bool]) -> Result<Word> {
        self.check_grid("grid", grid)?;
        Ok(Word::from_bits(self.bit_positions.iter().map(|&p| grid[p])))
    }

    /// Extra TSVs as a percentage of data TSVs.
    pub fn tsv_overhead_percent(&self) -> f64 {
        100.0 * self.control_count() as f64 / self.tsv_count() as f64
    }
}
