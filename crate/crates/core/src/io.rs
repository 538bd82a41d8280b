//! Plain-text formats.
//!
//! * Edge list: a `T <int>` line, then one 1-indexed `t t'` pair per line.
//! * Measurements: CSV with header `node,row,col,val`, 1-indexed, one line per
//!   nonzero. `#rows t m_t` declares the row count of node `t` (needed for
//!   all-zero rows) and `#dim n` the signal dimension.
//! * Observations: one value per line.
//! * Signals: CSV with header `node,coord,value`, 1-indexed.
//!
//! Lines starting with `#` are comments except for the directives above.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphKind, StackedSignal};
use crate::measurement::{Block, MeasurementSet};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_field<T: std::str::FromStr>(line: usize, field: &str, what: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {what} `{field}`")))
}

fn one_based(line: usize, v: usize, limit: usize, what: &str) -> Result<usize> {
    if v == 0 || v > limit {
        return Err(parse_err(line, format!("{what} {v} outside [1, {limit}]")));
    }
    Ok(v - 1)
}

pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing `T <int>` header"))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("T") {
        return Err(parse_err(hline, "expected `T <int>` header"));
    }
    let t: usize = parse_field(
        hline,
        parts.next().ok_or_else(|| parse_err(hline, "missing vertex count"))?,
        "vertex count",
    )?;
    let mut edges = Vec::new();
    for (ln, l) in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 2 {
            return Err(parse_err(ln, "expected two endpoints"));
        }
        let a = one_based(ln, parse_field(ln, f[0], "endpoint")?, t, "endpoint")?;
        let b = one_based(ln, parse_field(ln, f[1], "endpoint")?, t, "endpoint")?;
        if a == b {
            return Err(parse_err(ln, "self-loop"));
        }
        edges.push((a, b));
    }
    Graph::from_edges(t, edges, GraphKind::Custom)
}

pub fn format_edge_list(g: &Graph) -> String {
    let mut out = format!("# kind: {}\nT {}\n", g.kind(), g.vertex_count());
    for &(a, b) in g.edges() {
        let _ = writeln!(out, "{} {}", a + 1, b + 1);
    }
    out
}

/// Parses a measurement CSV for a graph on `t` nodes. `n` overrides any
/// `#dim` line; without either the dimension is the largest column seen.
pub fn parse_measurements(text: &str, t: usize, n: Option<usize>) -> Result<MeasurementSet> {
    let mut declared_rows = vec![0usize; t];
    let mut dim = n;
    let mut entries: Vec<(usize, usize, usize, f64)> = Vec::new();
    let mut saw_header = false;

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(rest) = l.strip_prefix('#') {
            let f: Vec<&str> = rest.split_whitespace().collect();
            match f.first().copied() {
                Some("rows") if f.len() == 3 => {
                    let node = one_based(ln, parse_field(ln, f[1], "node")?, t, "node")?;
                    declared_rows[node] = parse_field(ln, f[2], "row count")?;
                }
                Some("dim") if f.len() == 2 => {
                    let d: usize = parse_field(ln, f[1], "dimension")?;
                    if n.is_none() {
                        dim = Some(d);
                    }
                }
                _ => {}
            }
            continue;
        }
        if !saw_header {
            let cols: Vec<String> = l.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
            if cols != ["node", "row", "col", "val"] {
                return Err(parse_err(ln, "expected header `node,row,col,val`"));
            }
            saw_header = true;
            continue;
        }
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 4 {
            return Err(parse_err(ln, "expected four fields"));
        }
        let node = one_based(ln, parse_field(ln, f[0], "node")?, t, "node")?;
        let row: usize = parse_field(ln, f[1], "row")?;
        let col: usize = parse_field(ln, f[2], "col")?;
        let val: f64 = parse_field(ln, f[3], "value")?;
        if row == 0 || col == 0 {
            return Err(parse_err(ln, "row and col are 1-indexed"));
        }
        if !val.is_finite() {
            return Err(parse_err(ln, "non-finite value"));
        }
        entries.push((node, row - 1, col - 1, val));
    }
    if !saw_header {
        return Err(parse_err(1, "missing header `node,row,col,val`"));
    }
    let max_col = entries.iter().map(|e| e.2 + 1).max().unwrap_or(0);
    let n = dim.unwrap_or(max_col);
    if n == 0 {
        return Err(Error::Config("cannot infer signal dimension; add a `#dim n` line".into()));
    }
    if max_col > n {
        return Err(Error::Config(format!("column {max_col} exceeds dimension {n}")));
    }
    let mut rows_per_node = declared_rows;
    for e in &entries {
        rows_per_node[e.0] = rows_per_node[e.0].max(e.1 + 1);
    }
    let mut blocks: Vec<Block> = rows_per_node
        .iter()
        .map(|&m| Block {
            rows: vec![Vec::new(); m],
        })
        .collect();
    for (node, row, col, val) in entries {
        let r = &mut blocks[node].rows[row];
        match r.iter_mut().find(|(c, _)| *c == col) {
            Some(slot) => slot.1 += val,
            None => r.push((col, val)),
        }
    }
    for b in &mut blocks {
        for r in &mut b.rows {
            r.sort_by_key(|&(c, _)| c);
        }
    }
    MeasurementSet::new(n, blocks)
}

pub fn format_measurements(m: &MeasurementSet) -> String {
    let mut out = format!("#dim {}\n", m.n());
    for (t, b) in m.blocks().iter().enumerate() {
        let _ = writeln!(out, "#rows {} {}", t + 1, b.row_count());
    }
    out.push_str("node,row,col,val\n");
    for (t, b) in m.blocks().iter().enumerate() {
        for (r, row) in b.rows.iter().enumerate() {
            for &(c, v) in row {
                let _ = writeln!(out, "{},{},{},{:?}", t + 1, r + 1, c + 1, v);
            }
        }
    }
    out
}

pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    content_lines(text)
        .map(|(ln, l)| {
            let v: f64 = parse_field(ln, l, "value")?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(ln, "non-finite value"))
            }
        })
        .collect()
}

pub fn format_vector(v: &[f64]) -> String {
    let mut out = String::with_capacity(v.len() * 20);
    for x in v {
        let _ = writeln!(out, "{x:?}");
    }
    out
}

/// Values use the shortest round-trip representation, so parsing the output
/// reproduces the signal bit for bit.
pub fn format_signal(x: &StackedSignal) -> String {
    let mut out = String::from("node,coord,value\n");
    for (t, b) in x.blocks().enumerate() {
        for (k, v) in b.iter().enumerate() {
            let _ = writeln!(out, "{},{},{:?}", t + 1, k + 1, v);
        }
    }
    out
}

pub fn parse_signal(text: &str, n: usize, t: usize) -> Result<StackedSignal> {
    let mut x = StackedSignal::zeros(n, t);
    let mut seen = vec![false; n * t];
    let mut header = false;
    for (ln, l) in content_lines(text) {
        if !header {
            if l.replace(' ', "").to_ascii_lowercase() != "node,coord,value" {
                return Err(parse_err(ln, "expected header `node,coord,value`"));
            }
            header = true;
            continue;
        }
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 3 {
            return Err(parse_err(ln, "expected three fields"));
        }
        let node = one_based(ln, parse_field(ln, f[0], "node")?, t, "node")?;
        let coord = one_based(ln, parse_field(ln, f[1], "coord")?, n, "coord")?;
        let idx = node * n + coord;
        if seen[idx] {
            return Err(parse_err(ln, "duplicate entry"));
        }
        seen[idx] = true;
        x.as_mut_slice()[idx] = parse_field(ln, f[2], "value")?;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Config("signal CSV does not cover every (node, coord)".into()));
    }
    Ok(x)
}

pub fn read_to_string(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_star;
    use crate::measurement::{incidence_block, sample_sparse_rows};
    use crate::rng::SeededStream;

    #[test]
    fn edge_list_round_trip() {
        let g = build_star(5).unwrap();
        let back = parse_edge_list(&format_edge_list(&g)).unwrap();
        assert_eq!(back.edges(), g.edges());
        assert_eq!(back.vertex_count(), 5);
    }

    #[test]
    fn edge_list_errors() {
        assert!(parse_edge_list("").is_err());
        assert!(parse_edge_list("T 3\n1 1\n").is_err());
        assert!(parse_edge_list("T 3\n1 4\n").is_err());
        assert!(matches!(
            parse_edge_list("T 3\n1 2 3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        let g = parse_edge_list("# c\nT 3\n# x\n1 2\n2 1\n").unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn measurement_round_trip_keeps_zero_rows() {
        let m = sample_sparse_rows(3, 12, 0.4, &mut SeededStream::new(2)).unwrap();
        let back = parse_measurements(&format_measurements(&m), 12, None).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn measurement_incidence_round_trip() {
        let tri = crate::graph::build_complete(3).unwrap();
        let m = MeasurementSet::new(3, vec![incidence_block(&tri), Block { rows: vec![] }]).unwrap();
        let back = parse_measurements(&format_measurements(&m), 2, None).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn measurement_dimension_inferred() {
        let m = parse_measurements("node,row,col,val\n1,1,2,1.5\n", 2, None).unwrap();
        assert_eq!(m.n(), 2);
        assert_eq!(m.blocks()[1].row_count(), 0);
        assert!(parse_measurements("node,row,col,val\n", 2, None).is_err());
        assert!(parse_measurements("1,1,1,1\n", 1, None).is_err());
        assert!(parse_measurements("node,row,col,val\n3,1,1,1\n", 2, None).is_err());
    }

    #[test]
    fn signal_round_trip_bit_exact() {
        let data: Vec<f64> = (0..6).map(|i| (i as f64 * 0.1).sin() / 3.0).collect();
        let x = StackedSignal::new(2, 3, data).unwrap();
        let back = parse_signal(&format_signal(&x), 2, 3).unwrap();
        assert_eq!(back, x);
        assert!(parse_signal("node,coord,value\n1,1,0\n", 1, 2).is_err());
    }

    #[test]
    fn vector_round_trip() {
        let v = vec![1.0, -2.5e-300, 0.1 + 0.2];
        assert_eq!(parse_vector(&format_vector(&v)).unwrap(), v);
        assert!(parse_vector("1\nabc\n").is_err());
    }
}
