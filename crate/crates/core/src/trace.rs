//! Bus traces: fixed-width data words, their text and binary file formats,
//! and a seeded synthetic generator.
//!
//! Text format: `#` comment lines and blank lines are ignored, the first
//! remaining line must be `width=<n>`, and every following line holds one
//! word in hexadecimal (an optional `0x` prefix is accepted).
//!
//! Binary format: a headerless sequence of little-endian records of
//! `ceil(width / 8)` bytes each. Bits above `width` in the last byte must be 0.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded through
//! `SeedableRng::seed_from_u64`, whose PCG32 seed expansion is fixed by
//! `rand_core`. Words draw `ceil(width / 64)` consecutive `next_u64` values,
//! least significant limb first, masking the top limb.

use std::fmt;
use std::str::FromStr;

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fixed-width bit vector; bit 0 is the least significant.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Word {
    width: usize,
    limbs: Vec<u64>,
}

fn limb_count(width: usize) -> usize {
    width.div_ceil(64)
}

impl Word {
    pub fn zeros(width: usize) -> Self {
        Self {
            width,
            limbs: vec![0; limb_count(width)],
        }
    }

    /// Low `width` bits of `value`.
    pub fn from_u64(width: usize, value: u64) -> Self {
        let mut word = Self::zeros(width);
        if let Some(first) = word.limbs.first_mut() {
            *first = value;
        }
        word.mask();
        word
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut word = Self::zeros(bits.len());
        for (i, bit) in bits.into_iter().enumerate() {
            word.set(i, bit);
        }
        word
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn limbs(&self) -> &[u64] {
        &self.limbs
    }

    pub fn get(&self, index: usize) -> bool {
        assert!(
            index < self.width,
            "bit {index} out of width {}",
            self.width
        );
        (self.limbs[index / 64] >> (index % 64)) & 1 == 1
    }

    pub fn set(&mut self, index: usize, value: bool) {
        assert!(
            index < self.width,
            "bit {index} out of width {}",
            self.width
        );
        let mask = 1u64 << (index % 64);
        if value {
            self.limbs[index / 64] |= mask;
        } else {
            self.limbs[index / 64] &= !mask;
        }
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.width).map(|i| self.get(i))
    }

    pub fn count_ones(&self) -> u32 {
        self.limbs.iter().map(|l| l.count_ones()).sum()
    }

    fn mask(&mut self) {
        let rem = self.width % 64;
        if rem != 0 {
            if let Some(top) = self.limbs.last_mut() {
                *top &= (1u64 << rem) - 1;
            }
        }
    }

    /// Parses a hexadecimal word, rejecting set bits at or above `width`.
    pub fn parse_hex(text: &str, width: usize) -> std::result::Result<Self, String> {
        let digits = text
            .strip_prefix("0x")
            .or_else(|| text.strip_prefix("0X"))
            .unwrap_or(text);
        if digits.is_empty() {
            return Err("empty hexadecimal word".into());
        }
        let mut word = Self::zeros(width);
        for (nibble_index, ch) in digits.chars().rev().enumerate() {
            let nibble = ch
                .to_digit(16)
                .ok_or_else(|| format!("malformed hexadecimal digit {ch:?}"))?;
            for b in 0..4 {
                if (nibble >> b) & 1 == 1 {
                    let bit = nibble_index * 4 + b;
                    if bit >= width {
                        return Err(format!("word {digits} exceeds width {width}"));
                    }
                    word.set(bit, true);
                }
            }
        }
        Ok(word)
    }

    /// Uppercase hex padded to `ceil(width / 4)` digits.
    pub fn to_hex(&self) -> String {
        let digits = self.width.div_ceil(4).max(1);
        (0..digits)
            .rev()
            .map(|d| {
                let nibble = (0..4)
                    .filter(|b| {
                        let bit = d * 4 + b;
                        bit < self.width && self.get(bit)
                    })
                    .fold(0u32, |acc, b| acc | (1 << b));
                char::from_digit(nibble, 16).unwrap().to_ascii_uppercase()
            })
            .collect()
    }

    pub fn record_len(width: usize) -> usize {
        width.div_ceil(8)
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        let len = Self::record_len(self.width);
        self.limbs
            .iter()
            .flat_map(|l| l.to_le_bytes())
            .take(len)
            .collect()
    }

    pub fn from_le_bytes(bytes: &[u8], width: usize) -> Option<Self> {
        let mut word = Self::zeros(width);
        for (i, byte) in bytes.iter().enumerate() {
            for b in 0..8 {
                if (byte >> b) & 1 == 1 {
                    let bit = i * 8 + b;
                    if bit >= width {
                        return None;
                    }
                    word.set(bit, true);
                }
            }
        }
        Some(word)
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({}'h{})", self.width, self.to_hex())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    width: usize,
    words: Vec<Word>,
}

impl Trace {
    pub fn new(width: usize, words: Vec<Word>) -> Result<Self> {
        if let Some(bad) = words.iter().find(|w| w.width() != width) {
            return Err(Error::WidthMismatch {
                what: "trace word",
                expected: width,
                actual: bad.width(),
            });
        }
        Ok(Self { width, words })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("width={}\n", self.width);
        for word in &self.words {
            out.push_str(&word.to_hex());
            out.push('\n');
        }
        out
    }

    pub fn to_binary(&self) -> Vec<u8> {
        self.words.iter().flat_map(Word::to_le_bytes).collect()
    }
}

pub fn parse_text_trace(bytes: &[u8]) -> Result<Trace> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::TraceParse {
        line: 1 + bytes[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count(),
        reason: "invalid UTF-8".into(),
    })?;

    let mut width = None;
    let mut words = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match width {
            None => {
                let value = line
                    .strip_prefix("width=")
                    .ok_or_else(|| Error::TraceParse {
                        line: line_no,
                        reason: "missing `width=<n>` header".into(),
                    })?;
                let parsed: usize = value.trim().parse().map_err(|_| Error::TraceParse {
                    line: line_no,
                    reason: format!("invalid width {value:?}"),
                })?;
                if parsed == 0 {
                    return Err(Error::TraceParse {
                        line: line_no,
                        reason: "width must be positive".into(),
                    });
                }
                width = Some(parsed);
            }
            Some(w) => {
                let word = Word::parse_hex(line, w).map_err(|reason| Error::TraceParse {
                    line: line_no,
                    reason,
                })?;
                words.push(word);
            }
        }
    }
    let width = width.ok_or_else(|| Error::TraceParse {
        line: text.lines().count().max(1),
        reason: "missing `width=<n>` header".into(),
    })?;
    Ok(Trace { width, words })
}

pub fn parse_binary_trace(bytes: &[u8], width: usize) -> Result<Trace> {
    if width == 0 {
        return Err(Error::InvalidParameter {
            name: "width",
            reason: "must be positive".into(),
        });
    }
    let record = Word::record_len(width);
    if !bytes.len().is_multiple_of(record) {
        return Err(Error::TraceTruncated {
            len: bytes.len(),
            record,
        });
    }
    let words = bytes
        .chunks_exact(record)
        .enumerate()
        .map(|(i, chunk)| {
            Word::from_le_bytes(chunk, width).ok_or(Error::TracePadding { record: i, width })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trace { width, words })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Every bit an independent fair coin.
    Uniform,
    /// Each bit toggles from the previous word with probability `p`.
    Flip { p: f64 },
    /// Word `t` is `t mod 2^width`.
    Counter,
    /// One uniform word, repeated.
    Constant,
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorKind::Uniform => write!(f, "uniform"),
            GeneratorKind::Flip { p } => write!(f, "flip({p})"),
            GeneratorKind::Counter => write!(f, "counter"),
            GeneratorKind::Constant => write!(f, "constant"),
        }
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    /// `uniform`, `counter`, `constant`, `flip` (p = 0.5) or `flip:<p>`.
    fn from_str(s: &str) -> Result<Self> {
        let kind = match s {
            "uniform" => GeneratorKind::Uniform,
            "counter" => GeneratorKind::Counter,
            "constant" => GeneratorKind::Constant,
            "flip" => GeneratorKind::Flip { p: 0.5 },
            other => match other.strip_prefix("flip:") {
                Some(p) => GeneratorKind::Flip {
                    p: p.parse().map_err(|_| Error::InvalidParameter {
                        name: "p",
                        reason: format!("not a number: {p:?}"),
                    })?,
                },
                None => {
                    return Err(Error::InvalidParameter {
                        name: "kind",
                        reason: format!("unknown generator kind {other:?}"),
                    })
                }
            },
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub seed: u64,
    pub count: usize,
    pub width: usize,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::InvalidParameter {
                name: "width",
                reason: "must be positive".into(),
            });
        }
        if let GeneratorKind::Flip { p } = self.kind {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter {
                    name: "p",
                    reason: format!("toggle probability {p} outside [0, 1]"),
                });
            }
        }
        Ok(())
    }
}

fn uniform_word(rng: &mut ChaCha8Rng, width: usize) -> Word {
    let mut word = Word::zeros(width);
    for limb in word.limbs.iter_mut() {
        *limb = rng.next_u64();
    }
    word.mask();
    word
}

// 53 high bits of one draw, scaled to [0, 1).
fn unit_interval(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn generate(spec: &GeneratorSpec) -> Result<Trace> {
    spec.validate()?;
    let width = spec.width;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let words = match spec.kind {
        GeneratorKind::Uniform => (0..spec.count)
            .map(|_| uniform_word(&mut rng, width))
            .collect(),
        GeneratorKind::Constant => {
            let word = uniform_word(&mut rng, width);
            vec![word; spec.count]
        }
        GeneratorKind::Counter => (0..spec.count)
            .map(|t| Word::from_u64(width, t as u64))
            .collect(),
        GeneratorKind::Flip { p } => {
            let mut words: Vec<Word> = Vec::with_capacity(spec.count);
            if spec.count > 0 {
                words.push(uniform_word(&mut rng, width));
            }
            for _ in 1..spec.count {
                let mut next = words.last().unwrap().clone();
                for bit in 0..width {
                    if unit_interval(&mut rng) < p {
                        let current = next.get(bit);
                        next.set(bit, !current);
                    }
                }
                words.push(next);
            }
            words
        }
    };
    Ok(Trace { width, words })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_fixtures() {
        let t = parse_text_trace(b"width=9\n1FF\n000").unwrap();
        assert_eq!(t.width(), 9);
        assert_eq!(t.len(), 2);
        assert_eq!(t.words()[0].count_ones(), 9);

        let t = parse_text_trace(b"width=9\n#c\n010").unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.words()[0].get(4));

        let t = parse_text_trace(b"# header comment\n\nwidth=4\n\n0xa\n").unwrap();
        assert_eq!(t.words(), &[Word::from_u64(4, 0xA)]);
    }

    #[test]
    fn text_errors_name_the_line() {
        match parse_text_trace(b"width=4\nFFF") {
            Err(Error::TraceParse { line: 2, reason }) => assert!(reason.contains("exceeds")),
            other => panic!("unexpected {other:?}"),
        }
        match parse_text_trace(b"#x\n12\n") {
            Err(Error::TraceParse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_text_trace(b"width=8\n1\nZZ\n") {
            Err(Error::TraceParse { line: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_text_trace(b"# only a comment\n").is_err());
        assert!(parse_text_trace(b"width=0\n").is_err());
    }

    #[test]
    fn leading_zero_digits_beyond_width_are_fine() {
        let w = Word::parse_hex("0001", 1).unwrap();
        assert!(w.get(0));
    }

    #[test]
    fn binary_fixtures() {
        let t = parse_binary_trace(&[0u8; 16], 64).unwrap();
        assert_eq!(t.len(), 2);
        assert!(matches!(
            parse_binary_trace(&[0u8; 9], 64),
            Err(Error::TraceTruncated { len: 9, record: 8 })
        ));
        let t = parse_binary_trace(&[0x01, 0x01], 9).unwrap();
        assert_eq!(t.words()[0], Word::from_u64(9, 0b1_0000_0001));
        assert!(matches!(
            parse_binary_trace(&[0x00, 0x02], 9),
            Err(Error::TracePadding { record: 0, .. })
        ));
    }

    #[test]
    fn wide_words_round_trip_hex() {
        let mut w = Word::zeros(66);
        w.set(65, true);
        w.set(0, true);
        assert_eq!(w.to_hex(), "20000000000000001");
        assert_eq!(Word::parse_hex(&w.to_hex(), 66).unwrap(), w);
    }

    #[test]
    fn generator_fixtures() {
        let spec = GeneratorSpec {
            kind: GeneratorKind::Uniform,
            seed: 42,
            count: 3,
            width: 66,
        };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());

        let flip = GeneratorSpec {
            kind: GeneratorKind::Flip { p: 0.0 },
            seed: 9,
            count: 5,
            width: 20,
        };
        let t = generate(&flip).unwrap();
        assert!(t.words().iter().all(|w| w == &t.words()[0]));

        let counter = GeneratorSpec {
            kind: GeneratorKind::Counter,
            seed: 0,
            count: 3,
            width: 4,
        };
        let t = generate(&counter).unwrap();
        let values: Vec<u64> = t.words().iter().map(|w| w.limbs()[0]).collect();
        assert_eq!(values, vec![0, 1, 2]);

        let wrap = GeneratorSpec {
            count: 18,
            ..counter
        };
        assert_eq!(generate(&wrap).unwrap().words()[17].limbs()[0], 1);
    }

    #[test]
    fn flip_one_inverts_every_bit() {
        let spec = GeneratorSpec {
            kind: GeneratorKind::Flip { p: 1.0 },
            seed: 3,
            count: 3,
            width: 70,
        };
        let t = generate(&spec).unwrap();
        for pair in t.words().windows(2) {
            assert!(pair[0].bits().zip(pair[1].bits()).all(|(a, b)| a != b));
        }
    }

    #[test]
    fn generator_rejects_bad_specs() {
        let bad_p = GeneratorSpec {
            kind: GeneratorKind::Flip { p: 1.5 },
            seed: 0,
            count: 1,
            width: 8,
        };
        assert!(generate(&bad_p).is_err());
        let bad_width = GeneratorSpec {
            kind: GeneratorKind::Uniform,
            seed: 0,
            count: 1,
            width: 0,
        };
        assert!(generate(&bad_width).is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!(
            "uniform".parse::<GeneratorKind>().unwrap(),
            GeneratorKind::Uniform
        );
        assert_eq!(
            "flip:0.25".parse::<GeneratorKind>().unwrap(),
            GeneratorKind::Flip { p: 0.25 }
        );
        assert!("gaussian".parse::<GeneratorKind>().is_err());
    }
}
