//! Signal files: CSV with header `n,value`, strictly increasing integer
//! indices and finite values.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Extension, Grid, GridFunction};

/// A parsed signal and the interior indices that were missing and zero-filled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Signal {
    pub function: GridFunction,
    pub filled: Vec<i64>,
}

pub fn parse_signal(path: &Path, h: f64) -> Result<Signal> {
    let file = std::fs::File::open(path)?;
    read_signal(file, h)
}

/// Parses from any reader. The window spans the smallest to the largest index
/// and the tails are zero.
pub fn read_signal<R: Read>(reader: R, h: f64) -> Result<Signal> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows: Vec<(i64, f64)> = Vec::new();
    let mut header_seen = false;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if !header_seen {
            if record.len() != 2 || &record[0] != "n" || &record[1] != "value" {
                return Err(Error::Parse {
                    line,
                    message: "expected the header `n,value`".into(),
                });
            }
            header_seen = true;
            continue;
        }
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let n: i64 = record[0].parse().map_err(|_| Error::Parse {
            line,
            message: format!("index {:?} is not an integer", &record[0]),
        })?;
        let value: f64 = record[1].parse().map_err(|_| Error::Parse {
            line,
            message: format!("value {:?} is not a number", &record[1]),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("value {value} is not finite"),
            });
        }
        if let Some(&(prev, _)) = rows.last() {
            if n == prev {
                return Err(Error::DuplicateIndex { index: n, line });
            }
            if n < prev {
                return Err(Error::Parse {
                    line,
                    message: format!("index {n} follows {prev}; indices must increase"),
                });
            }
        }
        rows.push((n, value));
    }
    if !header_seen {
        return Err(Error::Parse {
            line: 1,
            message: "missing header `n,value`".into(),
        });
    }
    let (Some(&(first, _)), Some(&(last, _))) = (rows.first(), rows.last()) else {
        return Err(Error::Parse {
            line: 2,
            message: "no data rows".into(),
        });
    };
    let grid = Grid::new(h, first, last)?;
    let mut samples = vec![0.0; grid.len()];
    let mut present = vec![false; grid.len()];
    for &(n, v) in &rows {
        let p = (n - first) as usize;
        samples[p] = v;
        present[p] = true;
    }
    let filled = grid
        .indices()
        .zip(&present)
        .filter(|(_, &p)| !p)
        .map(|(n, _)| n)
        .collect();
    Ok(Signal {
        function: GridFunction::new(grid, samples, Extension::ZeroOutside)?,
        filled,
    })
}

/// Writes every window index with the shortest round-tripping decimal form.
pub fn write_signal<W: Write>(writer: W, u: &GridFunction) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["n", "value"]).map_err(io)?;
    for (n, v) in u.grid().indices().zip(u.samples()) {
        w.write_record([n.to_string(), v.to_string()]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_signal(path: &Path, u: &GridFunction) -> Result<()> {
    write_signal(std::fs::File::create(path)?, u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Signal> {
        read_signal(text.as_bytes(), 1.0)
    }

    #[test]
    fn single_row_is_impulse() {
        let s = parse("n,value\n0,1\n").unwrap();
        assert_eq!(
            s.function,
            GridFunction::impulse(Grid::new(1.0, 0, 0).unwrap(), 0).unwrap()
        );
        assert!(s.filled.is_empty());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            parse("n,value\n1,1\n0,2\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse("n,value\n0,1\n0,2\n"),
            Err(Error::DuplicateIndex { index: 0, line: 3 })
        ));
        assert!(matches!(parse("n,value\n0,NaN\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse("n,value\n0,inf\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse("0,1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("n,value\n0.5,1\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse("n,value\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn zero_fills_gaps() {
        let s = parse("n,value\n-2,1.5\n1,-3\n").unwrap();
        assert_eq!(s.function.samples(), &[1.5, 0.0, 0.0, -3.0]);
        assert_eq!(s.filled, vec![-1, 0]);
    }

    #[test]
    fn round_trip() {
        let text = "n,value\n-1,0.1\n0,-2.5e-17\n1,3\n";
        let s = parse(text).unwrap();
        let mut out = Vec::new();
        write_signal(&mut out, &s.function).unwrap();
        let back = parse(std::str::from_utf8(&out).unwrap()).unwrap();
        assert_eq!(back.function, s.function);
    }
}
