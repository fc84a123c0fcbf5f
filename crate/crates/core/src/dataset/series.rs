use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// `M` timesteps of `T` real-valued variables, stored row-major, with
/// optional per-timestep 0/1 labels.
#[derive(Clone, Debug, PartialEq)]
pub struct MultivariateSeries {
    values: Vec<f64>,
    num_vars: usize,
    labels: Option<Vec<u8>>,
    variable_names: Vec<String>,
    pub timestep_unit: String,
}

impl MultivariateSeries {
    pub fn new(
        values: Vec<f64>,
        num_vars: usize,
        labels: Option<Vec<u8>>,
        variable_names: Vec<String>,
    ) -> Result<Self> {
        if num_vars == 0 || !values.len().is_multiple_of(num_vars) {
            return Err(Error::shape(
                "MultivariateSeries values",
                format!("multiple of {num_vars}"),
                values.len(),
            ));
        }
        if variable_names.len() != num_vars {
            return Err(Error::shape(
                "MultivariateSeries names",
                num_vars,
                variable_names.len(),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "series value at row {}, variable {}",
                i / num_vars,
                i % num_vars
            )));
        }
        let len = values.len() / num_vars;
        if let Some(l) = &labels {
            if l.len() != len {
                return Err(Error::shape("MultivariateSeries labels", len, l.len()));
            }
            if l.iter().any(|&v| v > 1) {
                return Err(Error::invalid("labels must be 0 or 1"));
            }
        }
        Ok(MultivariateSeries {
            values,
            num_vars,
            labels,
            variable_names,
            timestep_unit: String::new(),
        })
    }

    /// Unlabeled series with generated names `x0, x1, …`.
    pub fn from_values(values: Vec<f64>, num_vars: usize) -> Result<Self> {
        let names = (0..num_vars).map(|j| format!("x{j}")).collect();
        Self::new(values, num_vars, None, names)
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.num_vars
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.num_vars..(t + 1) * self.num_vars]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.num_vars)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn with_labels(mut self, labels: Option<Vec<u8>>) -> Result<Self> {
        let names = std::mem::take(&mut self.variable_names);
        let unit = std::mem::take(&mut self.timestep_unit);
        let mut s = Self::new(self.values, self.num_vars, labels, names)?;
        s.timestep_unit = unit;
        Ok(s)
    }

    /// Same shape and metadata, new values.
    pub(crate) fn with_values(&self, values: Vec<f64>, num_vars: usize) -> Result<Self> {
        let names = if num_vars == self.num_vars {
            self.variable_names.clone()
        } else {
            (0..num_vars).map(|j| format!("pc{j}")).collect()
        };
        let mut s = Self::new(values, num_vars, self.labels.clone(), names)?;
        s.timestep_unit = self.timestep_unit.clone();
        Ok(s)
    }

    /// Rows `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.len() {
            return Err(Error::invalid(format!(
                "slice {start}..{end} out of range for length {}",
                self.len()
            )));
        }
        let values = self.values[start * self.num_vars..end * self.num_vars].to_vec();
        let labels = self.labels.as_ref().map(|l| l[start..end].to_vec());
        let mut s = Self::new(values, self.num_vars, labels, self.variable_names.clone())?;
        s.timestep_unit = self.timestep_unit.clone();
        Ok(s)
    }
}

/// Reads a headed, comma-separated file. The column named `label_column`,
/// if present, becomes the label vector; every other column is a variable.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<MultivariateSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, label_column)
}

pub fn read_csv(reader: impl Read, label_column: Option<&str>) -> Result<MultivariateSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Csv {
            row: 0,
            column: String::new(),
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_idx = label_column.and_then(|name| header.iter().position(|h| h == name));
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if names.is_empty() {
        return Err(Error::Csv {
            row: 0,
            column: String::new(),
            message: "no variable columns".into(),
        });
    }

    let mut values = Vec::new();
    let mut labels = label_idx.map(|_| Vec::new());
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| Error::Csv {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(Error::Csv {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            let parsed: f64 = cell.parse().map_err(|_| Error::Csv {
                row,
                column: header[c].clone(),
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            if !parsed.is_finite() {
                return Err(Error::Csv {
                    row,
                    column: header[c].clone(),
                    message: format!("non-finite value {cell:?}"),
                });
            }
            if Some(c) == label_idx {
                if parsed != 0.0 && parsed != 1.0 {
                    return Err(Error::Csv {
                        row,
                        column: header[c].clone(),
                        message: format!("label {cell:?} is not 0 or 1"),
                    });
                }
                labels.as_mut().unwrap().push(parsed as u8);
            } else {
                values.push(parsed);
            }
        }
    }
    if values.is_empty() {
        return Err(Error::Csv {
            row: 0,
            column: String::new(),
            message: "no data rows".into(),
        });
    }
    MultivariateSeries::new(values, names.len(), labels, names)
}

/// Writes the series in the format [`load_csv`] reads; labels, when
/// present, go in a trailing column named `label_column`.
pub fn write_csv(
    series: &MultivariateSeries,
    mut out: impl Write,
    label_column: &str,
) -> std::io::Result<()> {
    let mut header = series.variable_names().join(",");
    if series.labels().is_some() {
        header.push(',');
        header.push_str(label_column);
    }
    writeln!(out, "{header}")?;
    for (t, row) in series.rows().enumerate() {
        let mut line = row
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        if let Some(l) = series.labels() {
            line.push_str(&format!(",{}", l[t]));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_file() {
        let text = "a,b,c\n1,2,3\n4,5,6\n7,8,9\n10,11,12\n";
        let s = read_csv(text.as_bytes(), None).unwrap();
        assert_eq!((s.len(), s.num_vars()), (4, 3));
        assert_eq!(s.row(1), &[4.0, 5.0, 6.0]);
        assert!(s.labels().is_none());
    }

    #[test]
    fn extracts_label_column() {
        let text = "a,attack,b\n1,0,2\n1,0,2\n1,1,2\n1,0,2\n";
        let s = read_csv(text.as_bytes(), Some("attack")).unwrap();
        assert_eq!(s.num_vars(), 2);
        assert_eq!(s.labels().unwrap(), &[0, 0, 1, 0]);
        assert_eq!(s.variable_names(), &["a".to_string(), "b".to_string()]);
        // Absent label column means no labels.
        let s = read_csv(text.as_bytes(), Some("missing")).unwrap();
        assert_eq!(s.num_vars(), 3);
        assert!(s.labels().is_none());
    }

    #[test]
    fn reports_bad_cell_row() {
        let mut text = String::from("a,b\n");
        for i in 1..=10 {
            text.push_str(if i == 7 { "1,abc\n" } else { "1,2\n" });
        }
        match read_csv(text.as_bytes(), None) {
            Err(Error::Csv { row, column, .. }) => {
                assert_eq!(row, 7);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_ragged_and_bad_labels() {
        assert!(read_csv("a,b\n1,2\n3\n".as_bytes(), None).is_err());
        assert!(read_csv("a,l\n1,2\n".as_bytes(), Some("l")).is_err());
        assert!(read_csv("a,b\n".as_bytes(), None).is_err());
        assert!(load_csv("/nonexistent/file.csv", None).is_err());
    }

    #[test]
    fn write_then_read_is_lossless() {
        let s = MultivariateSeries::new(
            vec![0.1, -2.5e-7, 1.0 / 3.0, 1e10],
            2,
            Some(vec![0, 1]),
            vec!["p".into(), "q".into()],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&s, &mut buf, "label").unwrap();
        let back = read_csv(buf.as_slice(), Some("label")).unwrap();
        assert_eq!(back, s);
    }
}
