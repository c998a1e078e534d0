//! Observation tables: a header row of variable names, then one row per observation.

use std::io::Read;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Categorical observations stored column by column.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteData {
    pub names: Vec<String>,
    pub cardinalities: Vec<usize>,
    columns: Vec<Vec<u32>>,
}

/// Real-valued observations, kept as the Gram matrix `yᵀy` plus the row count.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousData {
    pub names: Vec<String>,
    pub n: usize,
    pub gram: DMatrix<f64>,
}

/// Data rows with their 1-based line numbers.
type Rows = Vec<(usize, Vec<String>)>;

fn records<R: Read>(reader: R) -> Result<(Vec<String>, Rows)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(1, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if names.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "missing header row".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(line, e))?;
        if rec.len() != names.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", names.len(), rec.len()),
            });
        }
        rows.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok((names, rows))
}

fn parse_err(line: usize, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

impl DiscreteData {
    /// Builds from column-major values; cardinalities default to `1 + max`.
    pub fn new(
        names: Vec<String>,
        columns: Vec<Vec<u32>>,
        cardinalities: Option<Vec<usize>>,
    ) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::DimensionMismatch("columns differ in length".into()));
        }
        let observed: Vec<usize> = columns
            .iter()
            .map(|c| c.iter().max().map_or(1, |&m| m as usize + 1))
            .collect();
        let cardinalities = match cardinalities {
            None => observed,
            Some(c) => {
                if c.len() != columns.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} cardinalities for {} columns",
                        c.len(),
                        columns.len()
                    )));
                }
                if let Some(j) = (0..c.len()).find(|&j| c[j] < observed[j]) {
                    return Err(Error::InvalidConfig(format!(
                        "variable {} has values up to {} but cardinality {}",
                        names[j],
                        observed[j] - 1,
                        c[j]
                    )));
                }
                c
            }
        };
        Ok(DiscreteData {
            names,
            cardinalities,
            columns,
        })
    }

    pub fn from_csv<R: Read>(reader: R, cardinalities: Option<Vec<usize>>) -> Result<Self> {
        let (names, rows) = records(reader)?;
        let mut columns = vec![Vec::with_capacity(rows.len()); names.len()];
        for (line, row) in rows {
            for (j, field) in row.iter().enumerate() {
                let v: u32 = field.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("`{field}` is not a non-negative integer"),
                })?;
                columns[j].push(v);
            }
        }
        Self::new(names, columns, cardinalities)
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn n(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, j: usize) -> &[u32] {
        &self.columns[j]
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.names).expect("in-memory write");
        for i in 0..self.n() {
            w.write_record(self.columns.iter().map(|c| c[i].to_string()))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}

impl ContinuousData {
    /// Builds from a row-major `n × p` observation matrix.
    pub fn from_rows(names: Vec<String>, y: &DMatrix<f64>) -> Result<Self> {
        if names.len() != y.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} columns",
                names.len(),
                y.ncols()
            )));
        }
        Ok(ContinuousData {
            names,
            n: y.nrows(),
            gram: y.transpose() * y,
        })
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let (names, rows) = records(reader)?;
        let p = names.len();
        let mut values = Vec::with_capacity(rows.len() * p);
        for (line, row) in &rows {
            for field in row {
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    line: *line,
                    message: format!("`{field}` is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: *line,
                        message: format!("`{field}` is not finite"),
                    });
                }
                values.push(v);
            }
        }
        let y = DMatrix::from_row_slice(rows.len(), p, &values);
        Self::from_rows(names, &y)
    }

    pub fn p(&self) -> usize {
        self.names.len()
    }
}

/// Reads a square matrix from headerless CSV.
pub fn matrix_from_csv<R: Read>(reader: R) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(i + 1, e))?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 1,
                    message: format!("`{f}` is not a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let k = rows.len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::DimensionMismatch("matrix is not square".into()));
    }
    Ok(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_round_trip() {
        let text = "a,b\n0,1\n1,2\n0,0\n";
        let d = DiscreteData::from_csv(text.as_bytes(), None).unwrap();
        assert_eq!(d.cardinalities, vec![2, 3]);
        assert_eq!(d.n(), 3);
        assert_eq!(d.to_csv(), text);
    }

    #[test]
    fn reports_bad_line() {
        let err = DiscreteData::from_csv("a,b\n0,1\n1,x\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = ContinuousData::from_csv("a\n0.5\nnan\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn cardinality_override_must_cover_data() {
        assert!(DiscreteData::from_csv("a\n2\n".as_bytes(), Some(vec![2])).is_err());
        let d = DiscreteData::from_csv("a\n1\n".as_bytes(), Some(vec![4])).unwrap();
        assert_eq!(d.cardinalities, vec![4]);
    }

    #[test]
    fn gram_matrix() {
        let d = ContinuousData::from_csv("x,y\n1,2\n3,-1\n".as_bytes()).unwrap();
        assert_eq!(d.n, 2);
        assert_eq!(
            d.gram,
            DMatrix::from_row_slice(2, 2, &[10.0, -1.0, -1.0, 5.0])
        );
    }
}
