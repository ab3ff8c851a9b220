//! Curve spec files and deterministic JSON/CSV output.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::curve::{ellipse_curve, Projection, SupportCurve};
use crate::error::{Error, Result};

/// Table description as stored on disk.
///
/// ```json
/// {"type": "fourier", "a0": 1.0, "cos": {"4": 0.05}, "sin": {}, "symmetric": true}
/// {"type": "ellipse", "a": 2.0, "b": 1.0, "rotation": 0.5235987755982988}
/// ```
#[derive(Clone, Debug, PartialEq, SerializeDerive, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum CurveSpec {
    Fourier {
        a0: f64,
        #[serde(default)]
        cos: BTreeMap<String, f64>,
        #[serde(default)]
        sin: BTreeMap<String, f64>,
        #[serde(default = "default_true")]
        symmetric: bool,
    },
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default)]
        rotation: f64,
        /// Truncation order of the projected support series.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_max: Option<usize>,
    },
}

fn default_true() -> bool {
    true
}

fn harmonic_index(key: &str) -> Result<usize> {
    key.trim().parse::<usize>().map_err(|_| {
        Error::InvalidInput(format!(
            "harmonic key '{key}' is not a non-negative integer"
        ))
    })
}

impl CurveSpec {
    pub fn build(&self) -> Result<SupportCurve> {
        match self {
            CurveSpec::Fourier {
                a0,
                cos,
                sin,
                symmetric,
            } => {
                let mut table: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
                for (k, &v) in cos {
                    table.entry(harmonic_index(k)?).or_default().0 = v;
                }
                for (k, &v) in sin {
                    table.entry(harmonic_index(k)?).or_default().1 = v;
                }
                let harmonics: Vec<(usize, f64, f64)> =
                    table.into_iter().map(|(k, (c, s))| (k, c, s)).collect();
                SupportCurve::from_harmonics(*a0, &harmonics, *symmetric)
            }
            CurveSpec::Ellipse {
                a,
                b,
                rotation,
                k_max,
            } => {
                let proj = k_max.map(Projection::with_k_max).unwrap_or_default();
                ellipse_curve(*a, *b, *rotation, &proj)
            }
        }
    }

    /// Fourier spec listing every non-zero harmonic of `curve`.
    pub fn from_curve(curve: &SupportCurve) -> Self {
        let mut cos = BTreeMap::new();
        let mut sin = BTreeMap::new();
        for (k, c, s) in curve.harmonics() {
            if c != 0.0 {
                cos.insert(k.to_string(), c);
            }
            if s != 0.0 {
                sin.insert(k.to_string(), s);
            }
        }
        CurveSpec::Fourier {
            a0: curve.a0(),
            cos,
            sin,
            symmetric: curve.is_symmetric(),
        }
    }
}

pub fn parse_curve_spec(text: &str) -> Result<CurveSpec> {
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("curve spec: {e}")))
}

pub fn load_curve_spec(path: &Path) -> Result<CurveSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    parse_curve_spec(&text)
}

pub fn load_curve(path: &Path) -> Result<SupportCurve> {
    load_curve_spec(path)?.build()
}

/// Pretty JSON that prints every float with 17 significant digits.
struct ExactFloats<'a>(PrettyFormatter<'a>);

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }
    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }
    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }
    fn end_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_key(writer)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

/// Serializes with fixed formatting; non-finite floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut out,
        ExactFloats(PrettyFormatter::with_indent(b"  ")),
    );
    value
        .serialize(&mut ser)
        .expect("serializing to memory cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// Float cell with 17 significant digits.
pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "nan".into()
    }
}

/// CSV text with a header and pre-formatted cells.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
