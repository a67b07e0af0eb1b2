//! Canonical trace table.
//!
//! ```text
//! # timestep=0.1 types=s,n
//! t,missionPhase,y-vel
//! 0,Sweeping,0.1
//! 1,Sweeping,
//! ```
//!
//! The first column `t` holds consecutive integer timestep indices; the
//! remaining header cells name the variables. An empty cell is NULL. The
//! optional leading comment records the timestep in seconds (default 1) and
//! the column types (`n` numeric, `s` string); without it, a column whose
//! non-empty cells all parse as finite numbers is numeric.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Column, Trace, TraceError};

pub fn load_trace(path: impl AsRef<Path>) -> Result<Trace, TraceError> {
    let f = File::open(path.as_ref())?;
    read_trace(BufReader::new(f))
}

pub fn store_trace(trace: &Trace, path: impl AsRef<Path>) -> Result<(), TraceError> {
    let f = File::create(path.as_ref())?;
    let mut w = BufWriter::new(f);
    write_trace(trace, &mut w)?;
    w.flush()?;
    Ok(())
}

fn format_err(line: usize, message: impl Into<String>) -> TraceError {
    TraceError::Format {
        line,
        message: message.into(),
    }
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

pub fn read_trace<R: Read>(mut reader: R) -> Result<Trace, TraceError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;

    let mut timestep = 1.0;
    let mut declared_types: Option<Vec<char>> = None;
    let mut body = text.as_str();
    let mut first_line = 1;
    if body.starts_with('#') {
        let (meta, rest) = body.split_once('\n').unwrap_or((body, ""));
        for field in meta.trim_start_matches('#').split_whitespace() {
            match field.split_once('=') {
                Some(("timestep", v)) => {
                    timestep = parse_number(v)
                        .filter(|x| *x > 0.0)
                        .ok_or_else(|| format_err(1, format!("bad timestep `{v}`")))?;
                }
                Some(("types", v)) => {
                    let tys: Vec<char> = v.split(',').map(|s| s.chars().next().unwrap_or('?')).collect();
                    if let Some(bad) = tys.iter().find(|c| !matches!(c, 'n' | 's')) {
                        return Err(format_err(1, format!("unknown column type `{bad}`")));
                    }
                    declared_types = Some(tys);
                }
                _ => {}
            }
        }
        body = rest;
        first_line = 2;
    }

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(body.as_bytes());
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r?,
        None => return Err(format_err(first_line, "missing header row")),
    };
    if header.get(0).map(str::trim) != Some("t") {
        return Err(format_err(first_line, "first column must be `t`"));
    }
    let names: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    if let Some(tys) = &declared_types {
        if tys.len() != names.len() {
            return Err(format_err(1, "types list does not match the header"));
        }
    }

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); names.len()];
    let mut prev_t: Option<i64> = None;
    for (row, rec) in records.enumerate() {
        let line = first_line + 1 + row;
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(format_err(
                line,
                format!("expected {} cells, found {}", header.len(), rec.len()),
            ));
        }
        let t: i64 = rec[0]
            .trim()
            .parse()
            .map_err(|_| format_err(line, format!("bad timestep index `{}`", &rec[0])))?;
        if let Some(p) = prev_t {
            if t <= p {
                return Err(format_err(line, format!("non-monotone timestep index {t} after {p}")));
            }
            if t != p + 1 {
                return Err(format_err(line, format!("timestep index jumps from {p} to {t}")));
            }
        }
        prev_t = Some(t);
        for (col, cell) in cells.iter_mut().zip(rec.iter().skip(1)) {
            col.push(cell.to_string());
        }
    }
    if prev_t.is_none() {
        return Err(TraceError::EmptyTrace);
    }

    let mut columns = Vec::with_capacity(names.len());
    for (i, (name, raw)) in names.into_iter().zip(cells).enumerate() {
        let numeric = match &declared_types {
            Some(tys) => tys[i] == 'n',
            None => raw.iter().all(|c| c.is_empty() || parse_number(c).is_some()),
        };
        let column = if numeric {
            let mut vals = Vec::with_capacity(raw.len());
            for (row, c) in raw.iter().enumerate() {
                if c.is_empty() {
                    vals.push(None);
                } else {
                    let x = parse_number(c).ok_or_else(|| {
                        format_err(first_line + 1 + row, format!("`{c}` is not a number in `{name}`"))
                    })?;
                    vals.push(Some(x));
                }
            }
            Column::Numeric(vals)
        } else {
            Column::Text(raw.into_iter().map(|c| (!c.is_empty()).then_some(c)).collect())
        };
        columns.push((name, column));
    }
    Trace::from_columns(timestep, columns)
}

pub fn write_trace<W: Write>(trace: &Trace, out: &mut W) -> Result<(), TraceError> {
    let types: Vec<&str> = trace
        .columns()
        .iter()
        .map(|c| match c {
            Column::Numeric(_) => "n",
            Column::Text(_) => "s",
        })
        .collect();
    writeln!(out, "# timestep={} types={}", trace.timestep(), types.join(","))?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(trace.variables().iter().cloned());
    w.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..trace.len() {
        row.clear();
        row.push(i.to_string());
        for col in trace.columns() {
            row.push(match col {
                Column::Numeric(v) => v[i].map(|x| x.to_string()).unwrap_or_default(),
                Column::Text(v) => v[i].clone().unwrap_or_default(),
            });
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
