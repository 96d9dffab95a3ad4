//! File formats: capture CSV, JSON with 17 significant digits, atomic writes.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::signal::{SamplingGrid, SignalCapture};

pub const CAPTURE_HEADER: &str = "t,x_re,x_im,dx_re,dx_im";

/// Scientific notation with 17 significant digits; lossless for f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Capture as CSV text.
pub fn capture_to_csv(capture: &SignalCapture) -> String {
    let mut out = String::with_capacity(capture.len() * 120);
    out.push_str(CAPTURE_HEADER);
    out.push('\n');
    for g in 0..capture.len() {
        let (x, d) = (capture.x[g], capture.xdot[g]);
        let cells = [capture.grid.time(g), x.re, x.im, d.re, d.im].map(fmt_f64);
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses capture CSV. Line numbers in errors are one-based file lines.
pub fn capture_from_csv(text: &str) -> Result<SignalCapture> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CAPTURE_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                detail: format!("expected header `{CAPTURE_HEADER}`"),
            })
        }
    }
    let (mut t, mut x, mut xdot) = (Vec::new(), Vec::new(), Vec::new());
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 5 {
            return Err(Error::Parse {
                line: line_no,
                detail: format!("expected 5 fields, found {}", cells.len()),
            });
        }
        let mut v = [0.0; 5];
        for (slot, cell) in v.iter_mut().zip(&cells) {
            *slot = cell.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: line_no,
                detail: format!("bad number `{cell}`: {e}"),
            })?;
            if !slot.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    detail: format!("non-finite value `{cell}`"),
                });
            }
        }
        t.push((v[0], line_no));
        x.push(Complex64::new(v[1], v[2]));
        xdot.push(Complex64::new(v[3], v[4]));
    }
    if t.is_empty() {
        return Err(Error::Parse {
            line: 2,
            detail: "capture has no samples".into(),
        });
    }
    let t0 = t[0].0;
    let dt = if t.len() > 1 { t[1].0 - t[0].0 } else { 1.0 };
    if !(dt > 0.0) {
        return Err(Error::Parse {
            line: t[1].1,
            detail: "times must be strictly increasing".into(),
        });
    }
    let span = (t[t.len() - 1].0 - t0).abs().max(dt);
    for (g, &(tg, line_no)) in t.iter().enumerate() {
        let expect = t0 + g as f64 * dt;
        if (tg - expect).abs() > 1e-9 * span.max(t0.abs()) {
            return Err(Error::Parse {
                line: line_no,
                detail: format!("time {tg} breaks uniform spacing"),
            });
        }
    }
    // Average spacing is a better estimate than the first difference.
    let dt = if t.len() > 1 {
        (t[t.len() - 1].0 - t0) / (t.len() - 1) as f64
    } else {
        dt
    };
    let grid = SamplingGrid::new(t0, dt, t.len())?;
    SignalCapture::new(grid, x, xdot)
}

struct SciFormatter<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

impl serde_json::ser::Formatter for SciFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Pretty JSON with every float written to 17 significant digits.
/// Non-finite floats become `null` unless the field uses [`lenient_f64`].
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let fmt = SciFormatter {
        inner: serde_json::ser::PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Serde adapter for floats that may be infinite or NaN: finite values stay
/// numbers, the others are written as the strings `inf`, `-inf` and `nan`.
pub mod lenient_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    impl Repr {
        fn value<E: de::Error>(self) -> Result<f64, E> {
            match self {
                Repr::Num(x) => Ok(x),
                Repr::Text(t) => match t.as_str() {
                    "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    "nan" => Ok(f64::NAN),
                    other => Err(E::custom(format!(
                        "expected a number, `inf`, `-inf` or `nan`, got `{other}`"
                    ))),
                },
            }
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&super::fmt_f64(*x))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Repr::deserialize(d)?.value()
    }

    pub mod vec {
        use super::Repr;
        use serde::ser::SerializeSeq;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
            struct One(f64);
            impl serde::Serialize for One {
                fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                    super::serialize(&self.0, s)
                }
            }
            let mut seq = s.serialize_seq(Some(xs.len()))?;
            for &x in xs {
                seq.serialize_element(&One(x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Vec::<Repr>::deserialize(d)?
                .into_iter()
                .map(Repr::value)
                .collect()
        }
    }
}

/// Writes through a temporary file in the target directory, then renames,
/// so a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
