//! Run configuration: a flat `key = value` namespace shared by the config
//! file and command-line flags. Later sources override earlier ones.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use crate::codec::{CodecKind, CodecSpec, SwitchThreshold};
use crate::error::{Error, Result};
use crate::layout::{BitOrder, GridLayout};
use crate::model::CouplingParams;
use crate::replay::{Aggregation, ReplayOptions};
use crate::trace::{
    generate, parse_binary_trace, parse_text_trace, GeneratorKind, GeneratorSpec, Trace,
};

/// Keys understood by [`RunConfig::from_settings`].
pub const KEYS: &[&str] = &[
    "rows",
    "cols",
    "bitwidth",
    "bit_order",
    "codec",
    "st",
    "lambda1",
    "lambda2",
    "pi0",
    "aggregation",
    "trace",
    "trace_format",
    "gen",
    "p",
    "seed",
    "words",
    "width",
    "json",
    "csv",
];

/// Ordered `key -> value` settings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    /// Parses `key = value` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: index + 1,
                reason: format!("expected key = value, got {line:?}"),
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Config {
                    line: index + 1,
                    reason: format!("unknown key {key:?}"),
                });
            }
            map.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Settings(map))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &'static str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse().map_err(|e| Error::InvalidParameter {
                    name: key,
                    reason: format!("{v:?}: {e}"),
                })
            })
            .transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Text,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceSource {
    File { path: PathBuf, format: TraceFormat },
    Generated(GeneratorSpec),
}

impl fmt::Display for TraceSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceSource::File { path, .. } => write!(f, "{}", path.display()),
            TraceSource::Generated(g) => write!(
                f,
                "gen:{} seed={} words={} width={}",
                g.kind, g.seed, g.count, g.width
            ),
        }
    }
}

impl TraceSource {
    pub fn load(&self, binary_width: Option<usize>) -> Result<Trace> {
        match self {
            TraceSource::File { path, format } => {
                let bytes = std::fs::read(path)?;
                match format {
                    TraceFormat::Text => parse_text_trace(&bytes),
                    TraceFormat::Binary => {
                        let width = binary_width.ok_or(Error::InvalidParameter {
                            name: "width",
                            reason: "binary traces need an explicit width".into(),
                        })?;
                        parse_binary_trace(&bytes, width)
                    }
                }
            }
            TraceSource::Generated(spec) => generate(spec),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub rows: usize,
    pub cols: Option<usize>,
    pub bitwidth: Option<usize>,
    pub bit_order: BitOrder,
    pub codec: CodecKind,
    pub st: SwitchThreshold,
    pub params: CouplingParams,
    pub aggregation: Aggregation,
    pub trace: TraceSource,
    /// Explicit `width`, used for binary traces and generators.
    pub width: Option<usize>,
    pub json_out: Option<PathBuf>,
    pub csv_out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let defaults = CouplingParams::default();
        let params = CouplingParams::new(
            s.parsed("lambda1")?.unwrap_or(defaults.lambda1()),
            s.parsed("lambda2")?.unwrap_or(defaults.lambda2()),
            s.parsed("pi0")?.unwrap_or(defaults.pi0()),
        )?;
        let st = match s.parsed::<u32>("st")? {
            Some(v) => SwitchThreshold::new(v)?,
            None => SwitchThreshold::default(),
        };
        let width: Option<usize> = s.parsed("width")?;
        let bitwidth: Option<usize> = s.parsed("bitwidth")?;

        let trace = match (s.get("trace"), s.get("gen")) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidParameter {
                    name: "trace",
                    reason: "give either a trace file or a generator, not both".into(),
                })
            }
            (Some(path), None) => {
                let path = PathBuf::from(path);
                if !path.is_file() {
                    return Err(Error::InvalidParameter {
                        name: "trace",
                        reason: format!("{} does not exist", path.display()),
                    });
                }
                let format = match s.get("trace_format").unwrap_or("text") {
                    "text" => TraceFormat::Text,
                    "binary" => TraceFormat::Binary,
                    other => {
                        return Err(Error::InvalidParameter {
                            name: "trace_format",
                            reason: format!("expected text or binary, got {other:?}"),
                        })
                    }
                };
                TraceSource::File { path, format }
            }
            (None, Some(kind)) => {
                let mut kind: GeneratorKind = kind.parse()?;
                if let (GeneratorKind::Flip { .. }, Some(p)) = (kind, s.parsed::<f64>("p")?) {
                    kind = GeneratorKind::Flip { p };
                }
                let spec = GeneratorSpec {
                    kind,
                    seed: s.parsed("seed")?.unwrap_or(0),
                    count: s.parsed("words")?.unwrap_or(10_000),
                    width: width.or(bitwidth).unwrap_or(64),
                };
                spec.validate()?;
                TraceSource::Generated(spec)
            }
            (None, None) => {
                return Err(Error::InvalidParameter {
                    name: "trace",
                    reason: "no trace source: set a trace file or a generator".into(),
                })
            }
        };

        Ok(Self {
            rows: s.parsed("rows")?.unwrap_or(3),
            cols: s.parsed("cols")?,
            bitwidth,
            bit_order: s.parsed("bit_order")?.unwrap_or_default(),
            codec: s.parsed("codec")?.unwrap_or(CodecKind::Retention),
            st,
            params,
            aggregation: s.parsed("aggregation")?.unwrap_or_default(),
            trace,
            width,
            json_out: s.get("json").map(PathBuf::from),
            csv_out: s.get("csv").map(PathBuf::from),
        })
    }

    pub fn codec_spec(&self) -> CodecSpec {
        match self.codec {
            CodecKind::Uncoded => CodecSpec::Uncoded,
            CodecKind::Retention => CodecSpec::Retention { st: self.st },
        }
    }

    pub fn replay_options(&self) -> ReplayOptions {
        ReplayOptions {
            params: self.params,
            aggregation: self.aggregation,
        }
    }

    pub fn load_trace(&self) -> Result<Trace> {
        self.trace.load(self.width.or(self.bitwidth))
    }

    /// Layout for a trace of `trace_width` bits. Columns default to the
    /// fewest that fit the bits in `rows` rows.
    pub fn layout_for(&self, trace_width: usize) -> Result<Arc<GridLayout>> {
        let bitwidth = self.bitwidth.unwrap_or(trace_width);
        let cols = self
            .cols
            .unwrap_or_else(|| bitwidth.div_ceil(self.rows.max(1)).max(3));
        Ok(Arc::new(GridLayout::with_order(
            self.rows,
            cols,
            bitwidth,
            self.bit_order,
        )?))
    }
}

/// Parses `a:b` (inclusive) or a single threshold.
pub fn parse_threshold_range(text: &str) -> Result<Vec<SwitchThreshold>> {
    let bad = || Error::InvalidParameter {
        name: "st",
        reason: format!("expected N or A:B, got {text:?}"),
    };
    let (lo, hi) = match text.split_once(':') {
        Some((a, b)) => (
            a.trim().parse::<u32>().map_err(|_| bad())?,
            b.trim().parse::<u32>().map_err(|_| bad())?,
        ),
        None => {
            let v = text.trim().parse::<u32>().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    (lo..=hi).map(SwitchThreshold::new).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen_settings() -> Settings {
        let mut s = Settings::default();
        s.set("gen", "uniform");
        s.set("seed", "7");
        s.set("words", "100");
        s.set("width", "66");
        s
    }

    #[test]
    fn parse_settings_file() {
        let s = Settings::parse("# comment\nrows = 3\n\ncodec=uncoded\nst= 12\n").unwrap();
        assert_eq!(s.get("rows"), Some("3"));
        assert_eq!(s.get("codec"), Some("uncoded"));
        assert_eq!(s.get("st"), Some("12"));
        assert!(matches!(
            Settings::parse("rows 3"),
            Err(Error::Config { line: 1, .. })
        ));
        assert!(matches!(
            Settings::parse("\ncolour = red"),
            Err(Error::Config { line: 2, .. })
        ));
    }

    #[test]
    fn defaults() {
        let c = RunConfig::from_settings(&gen_settings()).unwrap();
        assert_eq!(c.rows, 3);
        assert_eq!(c.st.value(), 20);
        assert_eq!(c.codec, CodecKind::Retention);
        assert_eq!(c.params, CouplingParams::default());
        assert_eq!(c.aggregation, Aggregation::Max);
        let layout = c.layout_for(66).unwrap();
        assert_eq!((layout.rows(), layout.cols()), (3, 22));
        let layout = c.layout_for(64).unwrap();
        assert_eq!((layout.cols(), layout.padding_count()), (22, 2));
    }

    #[test]
    fn later_settings_win() {
        let mut s = Settings::parse("st = 5\ncodec = uncoded").unwrap();
        s.set("st", "30");
        s.set("gen", "counter");
        let c = RunConfig::from_settings(&s).unwrap();
        assert_eq!(c.st.value(), 30);
        assert_eq!(c.codec_spec(), CodecSpec::Uncoded);
    }

    #[test]
    fn validation_errors() {
        let mut s = gen_settings();
        s.set("st", "40");
        assert!(RunConfig::from_settings(&s).is_err());

        let mut s = gen_settings();
        s.set("lambda1", "-1");
        assert!(RunConfig::from_settings(&s).is_err());

        let mut s = gen_settings();
        s.set("trace", "/definitely/not/here.txt");
        assert!(RunConfig::from_settings(&s).is_err());

        let mut s = Settings::default();
        s.set("trace", "/definitely/not/here.txt");
        assert!(RunConfig::from_settings(&s).is_err());

        assert!(RunConfig::from_settings(&Settings::default()).is_err());
    }

    #[test]
    fn flip_probability_key() {
        let mut s = gen_settings();
        s.set("gen", "flip");
        s.set("p", "0.125");
        let c = RunConfig::from_settings(&s).unwrap();
        match c.trace {
            TraceSource::Generated(g) => assert_eq!(g.kind, GeneratorKind::Flip { p: 0.125 }),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn threshold_ranges() {
        assert_eq!(parse_threshold_range("0:39").unwrap().len(), 40);
        assert_eq!(parse_threshold_range("20").unwrap()[0].value(), 20);
        assert!(parse_threshold_range("5:2").is_err());
        assert!(parse_threshold_range("0:40").is_err());
        assert!(parse_threshold_range("a:b").is_err());
    }
}
