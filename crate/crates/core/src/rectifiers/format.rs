//! Versioned `key = value` text serialization of fitted rectifiers.
//!
//! ```text
//! #format rectiprior-rectifier/1
//! kind = quantile-map
//! imputed = 10 20 30
//! truth = 1 2 3
//! ```
//!
//! Arrays are space-separated decimals written in shortest round-trip form, so
//! parsing a written rectifier reproduces it bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::{FittedRectifier, IsotonicMap, ProbRecalib, QuantileMap};

pub const RECTIFIER_FORMAT_TAG: &str = "#format rectiprior-rectifier/1";

fn join(v: &[f64]) -> String {
    let mut s = String::with_capacity(v.len() * 8);
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{x:?}").unwrap();
    }
    s
}

pub fn write_rectifier(r: &FittedRectifier) -> String {
    let mut out = format!("{RECTIFIER_FORMAT_TAG}\nkind = {}\n", r.kind());
    let mut kv = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    match r {
        FittedRectifier::Identity => {}
        FittedRectifier::QuantileMap(q) => {
            kv("imputed", join(q.imputed_grid()));
            kv("truth", join(q.true_grid()));
        }
        FittedRectifier::Isotonic(m) => {
            kv("knots", join(m.knots()));
            kv("values", join(m.values()));
        }
        FittedRectifier::MomentShift { shift } => kv("shift", format!("{shift:?}")),
        FittedRectifier::MomentAffine {
            intercept,
            slope,
            fallback,
        } => {
            kv("intercept", format!("{intercept:?}"));
            kv("slope", format!("{slope:?}"));
            kv("fallback", fallback.to_string());
        }
        FittedRectifier::ProbRecalib(p) => {
            kv("classes", p.num_classes.to_string());
            kv("covariates", p.d_x.to_string());
            kv("clamp", format!("{:?}", p.clamp));
            kv("bias", join(&p.bias));
            kv("weights", join(&p.weights));
        }
    }
    out
}

struct Doc {
    path: PathBuf,
    entries: BTreeMap<String, (u64, String)>,
}

impl Doc {
    fn err(&self, line: u64, message: impl Into<String>) -> Error {
        Error::Ingestion {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn raw(&self, key: &str) -> Result<(u64, &str)> {
        self.entries
            .get(key)
            .map(|(l, v)| (*l, v.as_str()))
            .ok_or_else(|| self.err(0, format!("missing key `{key}`")))
    }

    fn scalar<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let (line, v) = self.raw(key)?;
        v.parse()
            .map_err(|_| self.err(line, format!("`{key}`: cannot parse `{v}`")))
    }

    fn array(&self, key: &str) -> Result<Vec<f64>> {
        let (line, v) = self.raw(key)?;
        v.split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| self.err(line, format!("`{key}`: bad number `{t}`")))
            })
            .collect()
    }
}

/// Parse a serialized rectifier. Errors are reported against `origin`.
pub fn parse_rectifier(text: &str, origin: &Path) -> Result<FittedRectifier> {
    let mut doc = Doc {
        path: origin.to_path_buf(),
        entries: BTreeMap::new(),
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i as u64 + 1, l.trim()));
    match lines.next() {
        Some((_, tag)) if tag == RECTIFIER_FORMAT_TAG => {}
        _ => return Err(doc.err(1, format!("expected `{RECTIFIER_FORMAT_TAG}`"))),
    }
    for (line, l) in lines {
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let Some((k, v)) = l.split_once('=') else {
            return Err(doc.err(line, "expected `key = value`"));
        };
        let k = k.trim().to_string();
        if doc
            .entries
            .insert(k.clone(), (line, v.trim().to_string()))
            .is_some()
        {
            return Err(doc.err(line, format!("duplicate key `{k}`")));
        }
    }
    let (kind_line, kind) = doc.raw("kind")?;
    let invalid = |e: Error| doc.err(0, e.to_string());
    Ok(match kind {
        "identity" => FittedRectifier::Identity,
        "quantile-map" => FittedRectifier::QuantileMap(
            QuantileMap::from_sorted(doc.array("imputed")?, doc.array("truth")?)
                .map_err(invalid)?,
        ),
        "isotonic" => FittedRectifier::Isotonic(
            IsotonicMap::new(doc.array("knots")?, doc.array("values")?).map_err(invalid)?,
        ),
        "moment-shift" => FittedRectifier::MomentShift {
            shift: doc.scalar("shift")?,
        },
        "moment-affine" => FittedRectifier::MomentAffine {
            intercept: doc.scalar("intercept")?,
            slope: doc.scalar("slope")?,
            fallback: doc.scalar("fallback")?,
        },
        "prob-recalib" => {
            let num_classes: usize = doc.scalar("classes")?;
            let d_x: usize = doc.scalar("covariates")?;
            let clamp: f64 = doc.scalar("clamp")?;
            let bias = doc.array("bias")?;
            let weights = doc.array("weights")?;
            if num_classes < 2
                || bias.len() != num_classes
                || weights.len() != num_classes * (num_classes + d_x)
                || !(clamp > 0.0 && clamp <= super::RECALIB_MAX_CLAMP)
            {
                return Err(doc.err(0, "recalibration coefficients have inconsistent shapes"));
            }
            FittedRectifier::ProbRecalib(ProbRecalib {
                num_classes,
                d_x,
                weights,
                bias,
                clamp,
            })
        }
        other => return Err(doc.err(kind_line, format!("unknown rectifier kind `{other}`"))),
    })
}
