//! Table and document writers shared by the subcommands.

use std::io::Write;
use std::path::Path;

use pcgeom::conformal::Unembedded;
use serde_json::Value;

/// Marker written in place of coordinates of an ideal point.
pub const INF: &str = "INF";

/// Shortest decimal string that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn location_json(loc: &Unembedded) -> Value {
    match loc {
        Unembedded::Finite(p) => Value::from(p.as_slice().to_vec()),
        Unembedded::AtInfinity => Value::from(INF),
    }
}

/// `n` cells with the coordinates of `loc`, or `INF` in each cell.
pub fn location_cells(loc: &Unembedded, n: usize) -> Vec<String> {
    match loc {
        Unembedded::Finite(p) => p.iter().map(|&x| num(x)).collect(),
        Unembedded::AtInfinity => vec![INF.to_string(); n],
    }
}

pub fn numbered(prefix: &str, range: std::ops::Range<usize>) -> Vec<String> {
    range.map(|k| format!("{prefix}{k}")).collect()
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).map_err(|e| e.to_string())?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| e.to_string())?;
        }
        w.into_inner().map_err(|e| e.to_string())
    }
}

pub fn json_bytes(doc: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(doc).expect("JSON values serialize");
    out.push(b'\n');
    out
}

pub fn emit(bytes: &[u8], path: Option<&Path>) -> Result<(), String> {
    match path {
        Some(p) => {
            std::fs::write(p, bytes).map_err(|e| format!("cannot write {}: {e}", p.display()))
        }
        None => match std::io::stdout().lock().write_all(bytes) {
            // A closed pipe means the reader has seen enough.
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            r => r.map_err(|e| format!("cannot write output: {e}")),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-17, 1e300, 0.0, 12345.678] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.1), "0.1");
    }
}
