//! Text formats: CSV tables, JSON spectral dumps and the JSON encoding of
//! non-finite reals.
//!
//! JSON has no infinities, so reals that may be infinite are written as
//! the strings `"+inf"`, `"-inf"` or `"nan"`. Readers accept either form.
//! CSV reals use Rust's shortest round-trip formatting (`{:?}`), so every
//! value parses back to the identical `f64`.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{Complex64, SpectralField, TorusGeometry};

/// Serde adapter for `f64` values that may be infinite or NaN.
pub mod ext_f64 {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(super::format_nonfinite(*v))
        }
    }

    struct V;

    impl<'de> Visitor<'de> for V {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or one of \"+inf\", \"-inf\", \"nan\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            super::parse_real(v).map_err(|_| E::custom(format!("bad real '{v}'")))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(V)
    }
}

/// `ext_f64` for `Option<f64>`.
pub mod ext_f64_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => super::ext_f64::serialize(x, s),
            None => s.serialize_none(),
        }
    }

    #[derive(serde::Deserialize)]
    struct W(#[serde(with = "super::ext_f64")] f64);

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
    }
}

fn format_nonfinite(v: f64) -> &'static str {
    if v.is_nan() {
        "nan"
    } else if v > 0.0 {
        "+inf"
    } else {
        "-inf"
    }
}

/// Shortest round-trip text for a real, with the non-finite spellings above.
pub fn format_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else {
        format_nonfinite(v).to_string()
    }
}

pub fn parse_real(s: &str) -> Result<f64> {
    match s.trim() {
        "+inf" | "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        t => t
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Parse {
                position: 1,
                message: format!("not a real number: '{t}'"),
            }),
    }
}

/// Simple CSV table with a header row. No quoting: cells never contain
/// commas or newlines.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_text(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or_else(|| Error::Parse {
            position: 1,
            message: "empty CSV".into(),
        })?;
        let header: Vec<String> = head.split(',').map(|s| s.trim().to_string()).collect();
        if header.iter().any(|h| h.is_empty()) {
            return Err(Error::Parse {
                position: 1,
                message: "empty column name".into(),
            });
        }
        let mut rows = Vec::new();
        for (ln, line) in lines {
            let row: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
            if row.len() != header.len() {
                return Err(Error::Parse {
                    position: ln + 1,
                    message: format!("expected {} cells, found {}", header.len(), row.len()),
                });
            }
            rows.push(row);
        }
        Ok(CsvTable { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse {
                position: 1,
                message: format!("missing column '{name}'"),
            })
    }
}

/// One row of `mu.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct MuRow {
    pub k: f64,
    pub mu: f64,
    pub lagrange: f64,
    pub residual: f64,
    pub iterations: usize,
    pub flags: String,
}

pub const MU_COLUMNS: [&str; 6] = ["k", "mu", "lagrange", "residual", "iterations", "flags"];

pub fn write_mu_csv(rows: &[MuRow]) -> String {
    let mut t = CsvTable::new(&MU_COLUMNS);
    for r in rows {
        t.push(vec![
            format_real(r.k),
            format_real(r.mu),
            format_real(r.lagrange),
            format_real(r.residual),
            r.iterations.to_string(),
            r.flags.clone(),
        ]);
    }
    t.to_text()
}

pub fn read_mu_csv(text: &str) -> Result<Vec<MuRow>> {
    let t = CsvTable::parse(text)?;
    let idx: Vec<usize> = MU_COLUMNS.iter().map(|c| t.column(c)).collect::<Result<_>>()?;
    t.rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let at = |e: Error| match e {
                Error::Parse { message, .. } => Error::Parse { position: i + 2, message },
                e => e,
            };
            Ok(MuRow {
                k: parse_real(&r[idx[0]]).map_err(at)?,
                mu: parse_real(&r[idx[1]]).map_err(at)?,
                lagrange: parse_real(&r[idx[2]]).map_err(at)?,
                residual: parse_real(&r[idx[3]]).map_err(at)?,
                iterations: r[idx[4]].parse().map_err(|_| Error::Parse {
                    position: i + 2,
                    message: format!("bad iteration count '{}'", r[idx[4]]),
                })?,
                flags: r[idx[5]].clone(),
            })
        })
        .collect()
}

/// Nodal dump: one row per grid node with its coordinates and value.
pub fn field_csv(u: &SpectralField) -> String {
    let g = u.geometry();
    let mut out = String::new();
    if g.d_eff() == 1 {
        out.push_str("x1,value\n");
    } else {
        out.push_str("x1,x2,value\n");
    }
    for (i, v) in u.samples().iter().enumerate() {
        let x = g.node(i);
        if g.d_eff() == 1 {
            let _ = writeln!(out, "{},{}", format_real(x[0]), format_real(*v));
        } else {
            let _ = writeln!(out, "{},{},{}", format_real(x[0]), format_real(x[1]), format_real(*v));
        }
    }
    out
}

/// JSON spectral dump: geometry plus the coefficients as `[re, im]` pairs
/// in storage order (`idx = i1 + M i2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralDump {
    pub schema_version: u32,
    pub n_ambient: usize,
    pub d_eff: usize,
    pub grid_size: usize,
    pub normalization: String,
    pub coeffs: Vec<[f64; 2]>,
}

pub const SPECTRAL_SCHEMA_VERSION: u32 = 1;

impl SpectralDump {
    pub fn from_field(u: &SpectralField, normalization: &str) -> Self {
        let g = u.geometry();
        SpectralDump {
            schema_version: SPECTRAL_SCHEMA_VERSION,
            n_ambient: g.n_ambient(),
            d_eff: g.d_eff(),
            grid_size: g.grid_size(),
            normalization: normalization.to_string(),
            coeffs: u.coeffs().iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let d: SpectralDump = serde_json::from_str(text).map_err(|e| Error::Parse {
            position: e.column().max(1),
            message: e.to_string(),
        })?;
        if d.schema_version != SPECTRAL_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported spectral dump version {}",
                d.schema_version
            )));
        }
        Ok(d)
    }

    /// Rebuild the field; validates the geometry and coefficient count.
    pub fn to_field(&self) -> Result<(Arc<TorusGeometry>, SpectralField)> {
        let g = TorusGeometry::new(self.n_ambient, self.d_eff, self.grid_size)?;
        let coeffs = self.coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect();
        let u = SpectralField::from_coeffs(&g, coeffs)?;
        Ok((g, u))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}
