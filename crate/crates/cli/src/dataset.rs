//! Plain CSV datasets: one observation per row, `k` coordinates, optional
//! header and optional integer `sample` column.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use fvml_conc::sphere::SphericalSample;

use crate::failure::{io_context, Failure};

/// Rows whose norm is further than this from 1 are rejected.
pub const ROW_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub dim: usize,
    /// Renormalized rows, row-major.
    pub rows: Vec<f64>,
    pub labels: Option<Vec<i64>>,
}

impl Dataset {
    /// Splits by label, ordered by label value; unlabelled data is one group.
    pub fn groups(&self) -> Result<Vec<(Option<i64>, SphericalSample)>, Failure> {
        let Some(labels) = &self.labels else {
            return Ok(vec![(None, SphericalSample::from_rows(self.dim, self.rows.clone())?)]);
        };
        let mut by_label: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
        for (label, row) in labels.iter().zip(self.rows.chunks_exact(self.dim)) {
            by_label.entry(*label).or_default().extend_from_slice(row);
        }
        by_label
            .into_iter()
            .map(|(label, rows)| Ok((Some(label), SphericalSample::from_rows(self.dim, rows)?)))
            .collect()
    }
}

pub fn read_path(path: &Path) -> Result<Dataset, Failure> {
    let file = std::fs::File::open(path).map_err(io_context(path))?;
    read(file).map_err(|e| match e {
        Failure::Data(m) => Failure::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn read<R: Read>(input: R) -> Result<Dataset, Failure> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut records = reader.records().peekable();

    let mut label_col = None;
    let mut header_present = false;
    if let Some(Ok(first)) = records.peek() {
        if first.iter().any(|f| f.parse::<f64>().is_err()) {
            header_present = true;
            label_col = first.iter().position(|f| f.eq_ignore_ascii_case("sample"));
        }
    }
    if header_present {
        records.next();
    }

    let mut dim = None;
    let mut rows = Vec::new();
    let mut labels = label_col.map(|_| Vec::new());
    for (i, record) in records.enumerate() {
        let line = i + 1 + usize::from(header_present);
        let record = record.map_err(|e| Failure::Data(format!("line {line}: {e}")))?;
        let mut coords = Vec::with_capacity(record.len());
        for (j, field) in record.iter().enumerate() {
            if Some(j) == label_col {
                let label = field
                    .parse::<i64>()
                    .map_err(|_| Failure::Data(format!("line {line}: sample label `{field}` is not an integer")))?;
                if let Some(l) = labels.as_mut() {
                    l.push(label);
                }
            } else {
                let v = field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Failure::Data(format!("line {line}: `{field}` is not a finite number")))?;
                coords.push(v);
            }
        }
        let k = *dim.get_or_insert(coords.len());
        if coords.len() != k || k < 2 {
            return Err(Failure::Data(format!(
                "line {line}: expected {k} coordinates (k >= 2), found {}",
                coords.len()
            )));
        }
        let norm = coords.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > ROW_NORM_TOL {
            return Err(Failure::Data(format!(
                "line {line}: row norm {norm} is not within {ROW_NORM_TOL:e} of 1"
            )));
        }
        rows.extend(coords.iter().map(|x| x / norm));
    }
    let dim = dim.ok_or_else(|| Failure::Data("dataset has no observations".into()))?;
    Ok(Dataset { dim, rows, labels })
}

pub fn write<W: Write>(out: W, sample: &SphericalSample) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = (1..=sample.dim()).map(|i| format!("x{i}")).collect();
    let csv_err = |e: csv::Error| Failure::Io(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for row in sample.rows() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_labels() {
        let text = "sample,x,y\n1,1,0\n2,0,1\n1,0.6,0.8\n";
        let d = read(text.as_bytes()).unwrap();
        assert_eq!(d.dim, 2);
        assert_eq!(d.rows.len(), 6);
        let groups = d.groups().unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].1.len(), 2);
    }

    #[test]
    fn headerless_rows_are_renormalized() {
        let d = read("1.0000004,0\n0,-1\n".as_bytes()).unwrap();
        assert_eq!(d.rows[0], 1.0);
        assert!(d.labels.is_none());
    }

    #[test]
    fn off_sphere_rows_are_rejected() {
        let err = read("x,y\n1,0\n0.5,0.5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Failure::Data(ref m) if m.contains("line 3")), "{err}");
        assert!(read("1,0\n1,0,0\n".as_bytes()).is_err());
        assert!(read("x,y\n".as_bytes()).is_err());
        assert!(read("sample,x,y\na,1,0\n".as_bytes()).is_err());
    }

    #[test]
    fn write_then_read_is_exact() {
        let s = SphericalSample::from_rows(3, vec![0.6, 0.0, 0.8, 1.0 / 3f64.sqrt(), -1.0 / 3f64.sqrt(), 1.0 / 3f64.sqrt()])
            .unwrap();
        let mut buf = Vec::new();
        write(&mut buf, &s).unwrap();
        let back = read(buf.as_slice()).unwrap();
        assert_eq!(back.rows, s.as_flat());
    }
}
