//! CSV ingestion and export of labeled samples and base measures.
//!
//! Columns are located by header name: covariates `x1..xd`, the labeled outcome
//! `y` (real) or `y_class` (integer label), and the AI imputation `yhat` (real)
//! or `p1..pC` (class probabilities). Decimal parsing is locale-independent.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::measures::{AtomicMeasure, Covariates, LabeledSample, Outcomes};

enum Imputation {
    None,
    Real(usize),
    Probs(Vec<usize>),
}

struct Layout {
    x: Vec<usize>,
    y: Option<usize>,
    y_class: Option<usize>,
    imputed: Imputation,
}

fn numbered(headers: &csv::StringRecord, prefix: &str) -> Vec<(usize, usize)> {
    headers
        .iter()
        .enumerate()
        .filter_map(|(col, h)| {
            let rest = h.trim().strip_prefix(prefix)?;
            let k: usize = rest.parse().ok()?;
            (k >= 1 && rest == k.to_string()).then_some((k, col))
        })
        .collect()
}

fn consecutive(mut found: Vec<(usize, usize)>, prefix: &str, path: &Path) -> Result<Vec<usize>> {
    found.sort_unstable();
    for (i, (k, _)) in found.iter().enumerate() {
        if *k != i + 1 {
            return Err(ingestion(
                path,
                1,
                format!(
                    "columns {prefix}1..{prefix}{} have a gap or duplicate",
                    found.len()
                ),
            ));
        }
    }
    Ok(found.into_iter().map(|(_, c)| c).collect())
}

fn ingestion(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Ingestion {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn layout(headers: &csv::StringRecord, path: &Path) -> Result<Layout> {
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let x = consecutive(numbered(headers, "x"), "x", path)?;
    let probs = consecutive(numbered(headers, "p"), "p", path)?;
    let y = find("y");
    let y_class = find("y_class");
    let yhat = find("yhat");
    let imputed = match (yhat, probs.is_empty()) {
        (Some(_), false) => {
            return Err(ingestion(
                path,
                1,
                "both `yhat` and probability columns present",
            ))
        }
        (Some(c), true) => Imputation::Real(c),
        (None, false) => Imputation::Probs(probs),
        (None, true) => Imputation::None,
    };
    let known = x.len()
        + usize::from(y.is_some())
        + usize::from(y_class.is_some())
        + match &imputed {
            Imputation::None => 0,
            Imputation::Real(_) => 1,
            Imputation::Probs(p) => p.len(),
        };
    if known != headers.len() {
        let extra: Vec<&str> = headers
            .iter()
            .filter(|h| {
                let h = h.trim();
                !(h == "y" || h == "y_class" || h == "yhat")
                    && numbered(&csv::StringRecord::from(vec![h]), "x").is_empty()
                    && numbered(&csv::StringRecord::from(vec![h]), "p").is_empty()
            })
            .collect();
        return Err(ingestion(
            path,
            1,
            format!("unrecognized or duplicate columns {extra:?}"),
        ));
    }
    Ok(Layout {
        x,
        y,
        y_class,
        imputed,
    })
}

struct Table {
    layout: Layout,
    rows: Vec<(u64, csv::StringRecord)>,
}

fn read_table<R: Read>(reader: R, path: &Path) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_ingestion(e, path))?.clone();
    let layout = layout(&headers, path)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_ingestion(e, path))?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec));
    }
    if rows.is_empty() {
        return Err(ingestion(path, 2, "no data rows"));
    }
    Ok(Table { layout, rows })
}

fn csv_ingestion(e: csv::Error, path: &Path) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => ingestion(
            path,
            line,
            format!("expected {expected_len} fields, found {len}"),
        ),
        other => ingestion(path, line, format!("{other:?}")),
    }
}

fn cell(rec: &csv::StringRecord, col: usize, line: u64, path: &Path) -> Result<f64> {
    let s = rec.get(col).unwrap_or("").trim();
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ingestion(
            path,
            line,
            format!("column {}: `{s}` is not a finite number", col + 1),
        )),
    }
}

impl Table {
    fn covariates(&self, path: &Path) -> Result<Covariates> {
        let d = self.layout.x.len();
        let mut data = Vec::with_capacity(self.rows.len() * d);
        for (line, rec) in &self.rows {
            for &c in &self.layout.x {
                data.push(cell(rec, c, *line, path)?);
            }
        }
        Covariates::new(self.rows.len(), d, data)
    }

    fn imputations(&self, path: &Path) -> Result<Option<Outcomes>> {
        match &self.layout.imputed {
            Imputation::None => Ok(None),
            Imputation::Real(c) => {
                let v = self
                    .rows
                    .iter()
                    .map(|(l, r)| cell(r, *c, *l, path))
                    .collect::<Result<_>>()?;
                Ok(Some(Outcomes::Real(v)))
            }
            Imputation::Probs(cols) => {
                let k = cols.len();
                if k < 2 {
                    return Err(ingestion(
                        path,
                        1,
                        "probability imputations need at least p1 and p2",
                    ));
                }
                let mut probs = Vec::with_capacity(self.rows.len() * k);
                for (line, rec) in &self.rows {
                    let row = cols
                        .iter()
                        .map(|&c| cell(rec, c, *line, path))
                        .collect::<Result<Vec<_>>>()?;
                    if row.iter().any(|p| *p < 0.0) {
                        return Err(ingestion(path, *line, "negative probability"));
                    }
                    let s: f64 = row.iter().sum();
                    if !(s > 0.0) {
                        return Err(ingestion(path, *line, "probability row sums to zero"));
                    }
                    probs.extend(row.iter().map(|p| p / s));
                }
                Ok(Some(Outcomes::ClassProbs {
                    probs,
                    num_classes: k,
                }))
            }
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| ingestion(path, 0, e.to_string()))
}

/// Labeled sample from CSV. `num_classes` declares `C` for `y_class` data; when
/// absent it is taken from the probability columns or the largest label.
pub fn load_labeled_csv(path: &Path, num_classes: Option<usize>) -> Result<LabeledSample> {
    read_labeled(open(path)?, path, num_classes)
}

pub fn read_labeled<R: Read>(
    reader: R,
    path: &Path,
    num_classes: Option<usize>,
) -> Result<LabeledSample> {
    let t = read_table(reader, path)?;
    let x = t.covariates(path)?;
    let imputed = t.imputations(path)?;
    let y = match (t.layout.y, t.layout.y_class) {
        (Some(c), None) => Outcomes::Real(
            t.rows
                .iter()
                .map(|(l, r)| cell(r, c, *l, path))
                .collect::<Result<_>>()?,
        ),
        (None, Some(c)) => {
            let mut labels = Vec::with_capacity(t.rows.len());
            for (line, rec) in &t.rows {
                let s = rec.get(c).unwrap_or("").trim();
                let l: usize = s
                    .parse()
                    .map_err(|_| ingestion(path, *line, format!("`{s}` is not a class label")))?;
                labels.push((l, *line));
            }
            let from_probs = imputed.as_ref().and_then(|o| o.num_classes());
            let c = num_classes
                .or(from_probs)
                .unwrap_or_else(|| labels.iter().map(|(l, _)| l + 1).max().unwrap_or(2).max(2));
            if c < 2 {
                return Err(ingestion(path, 1, "class outcomes need at least 2 classes"));
            }
            if let (Some(p), Some(declared)) = (from_probs, num_classes) {
                if p != declared {
                    return Err(ingestion(
                        path,
                        1,
                        format!("{p} probability columns but {declared} classes declared"),
                    ));
                }
            }
            if let Some((l, line)) = labels.iter().find(|(l, _)| *l >= c) {
                return Err(ingestion(
                    path,
                    *line,
                    format!("label {l} outside [0, {c})"),
                ));
            }
            Outcomes::Class {
                labels: labels.into_iter().map(|(l, _)| l).collect(),
                num_classes: c,
            }
        }
        (Some(_), Some(_)) => return Err(ingestion(path, 1, "both `y` and `y_class` present")),
        (None, None) => {
            return Err(ingestion(
                path,
                1,
                "missing outcome column `y` or `y_class`",
            ))
        }
    };
    let s = LabeledSample::new(x, y).map_err(|e| ingestion(path, 0, e.to_string()))?;
    match imputed {
        Some(i) => s
            .with_imputed(i)
            .map_err(|e| ingestion(path, 0, e.to_string())),
        None => Ok(s),
    }
}

/// Uniform-weight base measure from CSV with `yhat` or `p1..pC`.
pub fn load_base_csv(path: &Path) -> Result<AtomicMeasure> {
    read_base(open(path)?, path)
}

pub fn read_base<R: Read>(reader: R, path: &Path) -> Result<AtomicMeasure> {
    let t = read_table(reader, path)?;
    if t.layout.y.is_some() || t.layout.y_class.is_some() {
        return Err(ingestion(
            path,
            1,
            "base file must not carry labeled outcomes",
        ));
    }
    let x = t.covariates(path)?;
    let y = t
        .imputations(path)?
        .ok_or_else(|| ingestion(path, 1, "missing imputation column `yhat` or `p1..pC`"))?;
    AtomicMeasure::uniform(x, y)
}

fn header(d: usize, outcome: Option<&Outcomes>, imputed: Option<&Outcomes>) -> Vec<String> {
    let mut h: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    match outcome {
        Some(Outcomes::Real(_)) => h.push("y".into()),
        Some(_) => h.push("y_class".into()),
        None => {}
    }
    match imputed {
        Some(Outcomes::ClassProbs { num_classes, .. }) => {
            h.extend((1..=*num_classes).map(|k| format!("p{k}")))
        }
        Some(_) => h.push("yhat".into()),
        None => {}
    }
    h
}

fn push_outcome(row: &mut Vec<String>, o: &Outcomes, i: usize) {
    match o {
        Outcomes::Real(v) => row.push(format!("{:?}", v[i])),
        Outcomes::Class { labels, .. } => row.push(labels[i].to_string()),
        Outcomes::ClassProbs { probs, num_classes } => row.extend(
            probs[i * num_classes..(i + 1) * num_classes]
                .iter()
                .map(|p| format!("{p:?}")),
        ),
    }
}

fn write_rows<W: Write>(
    out: W,
    x: &Covariates,
    outcome: Option<&Outcomes>,
    imputed: Option<&Outcomes>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
    w.write_record(header(x.cols(), outcome, imputed))
        .map_err(io)?;
    for i in 0..x.rows() {
        let mut row: Vec<String> = x.row(i).iter().map(|v| format!("{v:?}")).collect();
        if let Some(o) = outcome {
            push_outcome(&mut row, o, i);
        }
        if let Some(o) = imputed {
            push_outcome(&mut row, o, i);
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a labeled sample (with its imputations, if any) in the ingestion
/// layout. Values round-trip exactly.
pub fn write_labeled_csv<W: Write>(sample: &LabeledSample, out: W) -> Result<()> {
    write_rows(
        out,
        sample.covariates(),
        Some(sample.outcomes()),
        sample.imputed(),
    )
}

/// Writes the atoms of a base measure. Weights are not stored; loading gives
/// uniform weights.
pub fn write_base_csv<W: Write>(base: &AtomicMeasure, out: W) -> Result<()> {
    if base.outcomes().kind() == crate::measures::OutcomeKind::Class {
        return Err(Error::mismatch(
            "base measure outcomes must be imputations, not labels",
        ));
    }
    write_rows(out, base.covariates(), None, Some(base.outcomes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeled(text: &str, c: Option<usize>) -> Result<LabeledSample> {
        read_labeled(text.as_bytes(), Path::new("t.csv"), c)
    }

    fn base(text: &str) -> Result<AtomicMeasure> {
        read_base(text.as_bytes(), Path::new("b.csv"))
    }

    #[test]
    fn real_outcome() {
        let s = labeled("x1,y\n1,2\n", None).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.outcomes(), &Outcomes::Real(vec![2.0]));
        assert_eq!(s.covariates().row(0), &[1.0]);
    }

    #[test]
    fn class_outcome() {
        let s = labeled("x1,y_class\n0,1\n", Some(2)).unwrap();
        assert_eq!(
            s.outcomes(),
            &Outcomes::Class {
                labels: vec![1],
                num_classes: 2
            }
        );
        assert!(labeled("x1,y_class\n0,2\n", Some(2)).is_err());
    }

    #[test]
    fn malformed_cell_reports_line() {
        match labeled("x1,y\n1,abc\n", None) {
            Err(Error::Ingestion { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match labeled("x1,y\n1,2\n3\n", None) {
            Err(Error::Ingestion { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(labeled("x1,y\n1,NaN\n", None).is_err());
        assert!(labeled("x1,z\n1,2\n", None).is_err());
        assert!(labeled("x2,y\n1,2\n", None).is_err());
    }

    #[test]
    fn base_rows_are_uniform() {
        let b = base("x1,yhat\n1,2\n3,4\n5,6\n").unwrap();
        assert_eq!(b.len(), 3);
        assert!(b.weights().iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn probabilities_are_renormalized() {
        let b = base("x1,p1,p2\n0,0.2,0.8001\n").unwrap();
        let Outcomes::ClassProbs { probs, .. } = b.outcomes() else {
            panic!()
        };
        assert!((probs[0] + probs[1] - 1.0).abs() < 1e-15);
        assert!(matches!(
            base("x1,p1,p2\n0,0,0\n"),
            Err(Error::Ingestion { line: 2, .. })
        ));
    }

    #[test]
    fn round_trip_is_exact() {
        let x = Covariates::new(2, 2, vec![0.1, 1e-300, -3.0, 2.0 / 3.0]).unwrap();
        let s = LabeledSample::new(x.clone(), Outcomes::Real(vec![0.3, -1e10]))
            .unwrap()
            .with_imputed(Outcomes::Real(vec![1.0 / 7.0, 5.0]))
            .unwrap();
        let mut buf = Vec::new();
        write_labeled_csv(&s, &mut buf).unwrap();
        assert_eq!(
            read_labeled(buf.as_slice(), Path::new("r"), None).unwrap(),
            s
        );

        let b = AtomicMeasure::uniform(
            x,
            Outcomes::ClassProbs {
                probs: vec![0.25, 0.75, 1.0, 0.0],
                num_classes: 2,
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_base_csv(&b, &mut buf).unwrap();
        assert_eq!(read_base(buf.as_slice(), Path::new("r")).unwrap(), b);
    }
}
