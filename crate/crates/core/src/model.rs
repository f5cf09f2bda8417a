//! Crosstalk model for a victim TSV inside a 3x3 cluster.
//!
//! The victim couples to four direct (edge-sharing) neighbors with weight
//! `C_alpha` and four diagonal neighbors with weight `C_beta`. Class math fixes
//! `C_alpha = 1.5 C_beta`, so the effective coupling in excess of `C_G` is a
//! half-integer multiple of `C_beta` in `[0, 20]`. That coefficient maps onto
//! 40 ordinal crosstalk classes. Delay uses the configured `lambda1`/`lambda2`
//! ratios instead of the fixed class weights.
//!
//! All quantities are normalized to `Vdd = 1`, so a transition is an integer
//! delta in `{-1, 0, +1}` and every `|dV/Vdd|` term is an integer in `{0, 1, 2}`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class weight of a direct neighbor, in units of `C_beta`.
pub const DIRECT_WEIGHT: f64 = 1.5;
/// Class weight of a diagonal neighbor, in units of `C_beta`.
pub const DIAGONAL_WEIGHT: f64 = 1.0;

// Weights in half-units of C_beta, used for exact integer arithmetic.
const DIRECT_HALF_UNITS: u8 = 3;
const DIAGONAL_HALF_UNITS: u8 = 2;

/// Largest attainable coefficient: all eight neighbors switch against the victim.
pub const MAX_COEFFICIENT: f64 = 20.0;
/// Number of crosstalk classes.
pub const CLASS_COUNT: usize = 40;

/// A single wire's change between two consecutive cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(i8)]
pub enum Transition {
    Fall = -1,
    Steady = 0,
    Rise = 1,
}

impl Transition {
    pub const ALL: [Transition; 3] = [Transition::Fall, Transition::Steady, Transition::Rise];

    /// `next - prev` for logic levels.
    #[inline]
    pub fn between(prev: bool, next: bool) -> Self {
        match (prev, next) {
            (false, true) => Transition::Rise,
            (true, false) => Transition::Fall,
            _ => Transition::Steady,
        }
    }

    #[inline]
    pub fn delta(self) -> i8 {
        self as i8
    }

    pub fn from_delta(delta: i8) -> Result<Self> {
        match delta {
            -1 => Ok(Transition::Fall),
            0 => Ok(Transition::Steady),
            1 => Ok(Transition::Rise),
            other => Err(Error::InvalidDelta(other)),
        }
    }

    #[inline]
    pub fn is_switching(self) -> bool {
        self != Transition::Steady
    }

    pub fn negate(self) -> Self {
        match self {
            Transition::Fall => Transition::Rise,
            Transition::Steady => Transition::Steady,
            Transition::Rise => Transition::Fall,
        }
    }

    /// `|self - other|`, the normalized coupling swing between two wires.
    #[inline]
    pub fn swing(self, other: Transition) -> u8 {
        (self.delta() - other.delta()).unsigned_abs()
    }
}

/// Shorthand for [`Transition::between`].
pub fn transition_of(prev: bool, next: bool) -> Transition {
    Transition::between(prev, next)
}

/// Coupling role of a neighbor slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Direct,
    Diagonal,
    /// Outside the grid; contributes no coupling at all.
    Absent,
}

/// Neighbor slot positions in the fixed order used by [`TransitionPattern`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    NorthWest,
    North,
    NorthEast,
    West,
    East,
    SouthWest,
    South,
    SouthEast,
}

impl Slot {
    pub const ALL: [Slot; 8] = [
        Slot::NorthWest,
        Slot::North,
        Slot::NorthEast,
        Slot::West,
        Slot::East,
        Slot::SouthWest,
        Slot::South,
        Slot::SouthEast,
    ];

    /// `(row, col)` offset from the victim.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Slot::NorthWest => (-1, -1),
            Slot::North => (-1, 0),
            Slot::NorthEast => (-1, 1),
            Slot::West => (0, -1),
            Slot::East => (0, 1),
            Slot::SouthWest => (1, -1),
            Slot::South => (1, 0),
            Slot::SouthEast => (1, 1),
        }
    }

    /// Geometric role: edge-sharing slots are direct, corners diagonal.
    pub fn role(self) -> Role {
        match self {
            Slot::North | Slot::West | Slot::East | Slot::South => Role::Direct,
            _ => Role::Diagonal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Neighbor {
    pub role: Role,
    pub transition: Transition,
}

impl Neighbor {
    pub const ABSENT: Neighbor = Neighbor {
        role: Role::Absent,
        transition: Transition::Steady,
    };
}

/// The victim's transition together with its eight neighbors, in
/// `NW, N, NE, W, E, SW, S, SE` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransitionPattern {
    victim: Transition,
    neighbors: [Neighbor; 8],
}

impl TransitionPattern {
    /// A full cluster with every neighbor present and geometric roles.
    pub fn new(victim: Transition, neighbors: [Transition; 8]) -> Self {
        let mut slots = [Neighbor::ABSENT; 8];
        for ((slot, transition), out) in Slot::ALL.iter().zip(neighbors).zip(slots.iter_mut()) {
            *out = Neighbor {
                role: slot.role(),
                transition,
            };
        }
        Self {
            victim,
            neighbors: slots,
        }
    }

    /// A cluster where `None` entries lie outside the grid.
    pub fn with_absent(victim: Transition, neighbors: [Option<Transition>; 8]) -> Self {
        let mut slots = [Neighbor::ABSENT; 8];
        for ((slot, transition), out) in Slot::ALL.iter().zip(neighbors).zip(slots.iter_mut()) {
            if let Some(transition) = transition {
                *out = Neighbor {
                    role: slot.role(),
                    transition,
                };
            }
        }
        Self {
            victim,
            neighbors: slots,
        }
    }

    /// Builds a pattern from integer deltas; the victim comes first.
    pub fn from_deltas(victim: i8, neighbors: [i8; 8]) -> Result<Self> {
        let victim = Transition::from_delta(victim)?;
        let mut out = [Transition::Steady; 8];
        for (dst, delta) in out.iter_mut().zip(neighbors) {
            *dst = Transition::from_delta(delta)?;
        }
        Ok(Self::new(victim, out))
    }

    pub fn victim(&self) -> Transition {
        self.victim
    }

    pub fn neighbors(&self) -> &[Neighbor; 8] {
        &self.neighbors
    }

    pub fn neighbor(&self, slot: Slot) -> Neighbor {
        self.neighbors[slot as usize]
    }

    /// Same neighborhood with a different victim transition.
    pub fn with_victim(&self, victim: Transition) -> Self {
        Self {
            victim,
            neighbors: self.neighbors,
        }
    }

    /// Same pattern with the victim held at its previous level.
    pub fn retained(&self) -> Self {
        self.with_victim(Transition::Steady)
    }

    /// Every delta negated (a fall becomes a rise and vice versa).
    pub fn negated(&self) -> Self {
        let mut neighbors = self.neighbors;
        for n in neighbors.iter_mut() {
            n.transition = n.transition.negate();
        }
        Self {
            victim: self.victim.negate(),
            neighbors,
        }
    }

    /// Effective coupling coefficient in units of `C_beta`.
    pub fn coefficient(&self) -> Coefficient {
        let half_units = self
            .neighbors
            .iter()
            .map(|n| {
                let weight = match n.role {
                    Role::Direct => DIRECT_HALF_UNITS,
                    Role::Diagonal => DIAGONAL_HALF_UNITS,
                    Role::Absent => 0,
                };
                weight * self.victim.swing(n.transition)
            })
            .sum();
        Coefficient(half_units)
    }

    pub fn class(&self) -> CrosstalkClass {
        CrosstalkClass::from_coefficient(self.coefficient())
            .expect("a pattern's coefficient is never 0.5")
    }

    /// `(rho1, rho2)`: summed swings against direct and diagonal neighbors.
    pub fn rho(&self) -> (u8, u8) {
        self.neighbors
            .iter()
            .fold((0, 0), |(direct, diagonal), n| match n.role {
                Role::Direct => (direct + self.victim.swing(n.transition), diagonal),
                Role::Diagonal => (direct, diagonal + self.victim.swing(n.transition)),
                Role::Absent => (direct, diagonal),
            })
    }

    /// Transmission delay of the victim. A steady victim has no
    /// propagation event and reports zero.
    pub fn delay(&self, params: &CouplingParams) -> f64 {
        if !self.victim.is_switching() {
            return 0.0;
        }
        let (rho1, rho2) = self.rho();
        params.switching_delay(rho1, rho2)
    }
}

/// Effective coupling excess over `C_G`, stored in exact half-units of `C_beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Coefficient(u8);

impl Coefficient {
    pub const ZERO: Coefficient = Coefficient(0);
    pub const MAX: Coefficient = Coefficient(40);

    pub fn from_half_units(half_units: u8) -> Result<Self> {
        if half_units > Self::MAX.0 {
            return Err(Error::InvalidCoefficient(f64::from(half_units) / 2.0));
        }
        Ok(Coefficient(half_units))
    }

    /// Accepts multiples of 0.5 in `[0, 20]`.
    pub fn from_value(value: f64) -> Result<Self> {
        let doubled = value * 2.0;
        if !(0.0..=40.0).contains(&doubled) || doubled.fract() != 0.0 {
            return Err(Error::InvalidCoefficient(value));
        }
        Ok(Coefficient(doubled as u8))
    }

    pub fn half_units(self) -> u8 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}", self.value())
    }
}

/// Crosstalk class `0..=39`. Class 0 is coefficient 0; otherwise the
/// class is `2 * coefficient - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CrosstalkClass(u8);

impl CrosstalkClass {
    pub const MIN: CrosstalkClass = CrosstalkClass(0);
    pub const MAX: CrosstalkClass = CrosstalkClass(39);

    pub fn new(index: u8) -> Result<Self> {
        if usize::from(index) >= CLASS_COUNT {
            return Err(Error::ClassOutOfRange(index));
        }
        Ok(CrosstalkClass(index))
    }

    /// Rejects coefficient 0.5, which has no class (and no pattern produces it).
    pub fn from_coefficient(coefficient: Coefficient) -> Result<Self> {
        match coefficient.half_units() {
            0 => Ok(CrosstalkClass(0)),
            1 => Err(Error::InvalidCoefficient(0.5)),
            h => Ok(CrosstalkClass(h - 1)),
        }
    }

    /// Class for summed direct and diagonal swings.
    pub fn from_rho(rho1: u8, rho2: u8) -> Self {
        Self::from_coefficient(Coefficient(
            rho1 * DIRECT_HALF_UNITS + rho2 * DIAGONAL_HALF_UNITS,
        ))
        .expect("a pattern's coefficient is never 0.5")
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn coefficient(self) -> Coefficient {
        match self.0 {
            0 => Coefficient::ZERO,
            c => Coefficient(c + 1),
        }
    }
}

impl fmt::Display for CrosstalkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}C", self.0)
    }
}

/// Maps a raw coefficient value to its class.
pub fn class_of(coefficient: f64) -> Result<CrosstalkClass> {
    CrosstalkClass::from_coefficient(Coefficient::from_value(coefficient)?)
}

/// Coupling ratios and the ideal-channel delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    lambda1: f64,
    lambda2: f64,
    pi0: f64,
}

impl Default for CouplingParams {
    fn default() -> Self {
        Self {
            lambda1: 5.54,
            lambda2: 3.92,
            pi0: 1.0,
        }
    }
}

impl CouplingParams {
    pub fn new(lambda1: f64, lambda2: f64, pi0: f64) -> Result<Self> {
        for (name, value) in [("lambda1", lambda1), ("lambda2", lambda2), ("pi0", pi0)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be a positive finite number, got {value}"),
                });
            }
        }
        Ok(Self {
            lambda1,
            lambda2,
            pi0,
        })
    }

    /// Direct coupling to substrate ratio `C_alpha / C_G`.
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    /// Diagonal coupling to substrate ratio `C_beta / C_G`.
    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn pi0(&self) -> f64 {
        self.pi0
    }

    /// `(1 + rho1 lambda1 + rho2 lambda2) pi0` for a switching victim.
    #[inline]
    pub fn switching_delay(&self, rho1: u8, rho2: u8) -> f64 {
        (1.0 + f64::from(rho1) * self.lambda1 + f64::from(rho2) * self.lambda2) * self.pi0
    }
}

pub fn delay3d(pattern: &TransitionPattern, params: &CouplingParams) -> f64 {
    pattern.delay(params)
}

fn planar_rho(victim: Transition, left: Transition, right: Transition) -> u8 {
    victim.swing(left) + victim.swing(right)
}

/// Effective capacitance of the middle of three planar wires.
pub fn ceff2d(victim: Transition, left: Transition, right: Transition, c_g: f64, c_c: f64) -> f64 {
    c_g + c_c * f64::from(victim.swing(left)) + c_c * f64::from(victim.swing(right))
}

/// Planar three-wire delay `(1 + rho * lambda) * pi0`; zero for a steady victim.
pub fn delay2d(
    victim: Transition,
    left: Transition,
    right: Transition,
    lambda: f64,
    pi0: f64,
) -> f64 {
    if !victim.is_switching() {
        return 0.0;
    }
    (1.0 + f64::from(planar_rho(victim, left, right)) * lambda) * pi0
}
