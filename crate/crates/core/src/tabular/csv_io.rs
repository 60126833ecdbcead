use std::fs;
use std::io::Write;
use std::path::Path;

use super::Dataset;
use crate::{Error, Result};

/// Read a comma-separated file with one header row into a [`Dataset`].
///
/// When `declared_schema` is given the header must contain exactly those
/// column names (in any order) and the dataset columns follow the declared
/// order. Data rows are numbered from 1 in error messages.
pub fn load_csv(path: impl AsRef<Path>, declared_schema: Option<&[&str]>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(std::io::BufReader::new(file));
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };

    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    for (i, name) in header.iter().enumerate() {
        if header[..i].contains(name) {
            return Err(Error::Schema(format!("duplicate column name {name:?}")));
        }
    }
    if let Some(schema) = declared_schema {
        let missing: Vec<&str> = schema
            .iter()
            .copied()
            .filter(|s| !header.iter().any(|h| h == s))
            .collect();
        let extra: Vec<&str> = header
            .iter()
            .map(String::as_str)
            .filter(|h| !schema.contains(h))
            .collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(Error::Schema(format!(
                "header does not match declared schema (missing {missing:?}, unexpected {extra:?})"
            )));
        }
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: r + 1,
                column: header[c].clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: r + 1,
                    column: header[c].clone(),
                    value: cell.to_string(),
                });
            }
            columns[c].push(v);
        }
    }

    let ds = Dataset::new(header, columns)?;
    match declared_schema {
        Some(schema) => {
            let order: Vec<usize> = schema
                .iter()
                .map(|s| ds.index_of(s))
                .collect::<Result<_>>()?;
            let names = order.iter().map(|&i| ds.column_names[i].clone()).collect();
            let cols = order.iter().map(|&i| ds.columns[i].clone()).collect();
            Dataset::new(names, cols)
        }
        None => Ok(ds),
    }
}

/// Write `ds` as CSV. Reals use the shortest representation that parses back
/// to the same bits. The file is written to a temporary sibling and renamed.
pub fn write_csv(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(ds.n_rows() * ds.n_cols() * 12);
    out.push_str(&ds.column_names().join(","));
    out.push('\n');
    let cols: Vec<&[f64]> = ds.columns().map(|(_, c)| c).collect();
    for r in 0..ds.n_rows() {
        for (j, c) in cols.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&c[r].to_string());
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp-write");
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn parses_three_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "a.csv",
            "temp,pressure,tracer\n1,1000,0\n2,1001,0.5\n3,1002,0\n",
        );
        let ds = load_csv(&p, Some(&["temp", "pressure", "tracer"])).unwrap();
        assert_eq!((ds.n_rows(), ds.n_cols()), (3, 3));
        assert_eq!(ds.column("tracer").unwrap(), &[0.0, 0.5, 0.0]);
    }

    #[test]
    fn reports_row_and_column_of_bad_cell() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.csv", "temp,pressure\n1,2\nabc,3\n");
        match load_csv(&p, None) {
            Err(Error::Parse { row, column, value }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "temp");
                assert_eq!(value, "abc");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_mismatch_missing_file_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.csv", "a,b\n1,2\n");
        assert!(matches!(load_csv(&p, Some(&["a", "c"])), Err(Error::Schema(_))));
        let d = write(dir.path(), "d.csv", "a,a\n1,2\n");
        assert!(matches!(load_csv(&d, None), Err(Error::Schema(_))));
        assert!(matches!(
            load_csv(dir.path().join("nope.csv"), None),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn column_order_follows_declared_schema() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.csv", "b,a\n1,2\n");
        let ds = load_csv(&p, Some(&["a", "b"])).unwrap();
        assert_eq!(ds.column_names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(ds.row(0), vec![2.0, 1.0]);
    }

    #[test]
    fn write_then_read_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let vals = vec![0.1 + 0.2, 1.0 / 3.0, -2.5e-12, 1e300];
        let ds = Dataset::new(vec!["x".into()], vec![vals.clone()]).unwrap();
        let p = dir.path().join("x.csv");
        write_csv(&p, &ds).unwrap();
        let back = load_csv(&p, None).unwrap();
        let got: Vec<u64> = back.column("x").unwrap().iter().map(|v| v.to_bits()).collect();
        let want: Vec<u64> = vals.iter().map(|v| v.to_bits()).collect();
        assert_eq!(got, want);
    }
}
