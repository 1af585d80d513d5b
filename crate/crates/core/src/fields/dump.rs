//! Binary field snapshots.
//!
//! A dump is a short plain-text header terminated by the line `end-header`,
//! followed by little-endian `f64` values for every real node `0..=N+1` in
//! row-major order (last axis fastest), components contiguous per node:
//!
//! ```text
//! qtensor-field v1
//! label=Q dim=2 N=39 h=0.05 side=2 origin=0,0,0 components=4 time=0.5
//! # model.a=-0.3
//! end-header
//! <binary payload>
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{FieldKind, GridField, GridSpec};
use crate::{Error, Result};

const MAGIC: &str = "qtensor-field v1";
const END: &str = "end-header";

/// Parsed dump header.
#[derive(Clone, Debug, PartialEq)]
pub struct DumpHeader {
    pub label: String,
    pub grid: GridSpec,
    pub components: usize,
    pub time: f64,
    /// Free-form `#` lines (resolved configuration echo).
    pub comments: Vec<String>,
}

pub fn write_dump<K: FieldKind>(
    path: &Path,
    field: &GridField<K>,
    label: &str,
    time: f64,
    comments: &[String],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let g = field.grid();
    let o = g.origin();
    let mut header = format!(
        "{MAGIC}\nlabel={label} dim={} N={} h={:e} side={:e} origin={:e},{:e},{:e} components={} time={:e}\n",
        g.dim(),
        g.n_interior(),
        g.h(),
        g.side(),
        o[0],
        o[1],
        o[2],
        field.ncomp(),
        time
    );
    for c in comments {
        header.push_str("# ");
        header.push_str(c);
        header.push('\n');
    }
    header.push_str(END);
    header.push('\n');
    let io = |e| Error::io(path, e);
    w.write_all(header.as_bytes()).map_err(io)?;
    for (_, p) in g.real_nodes() {
        for v in field.node(p) {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

fn parse_header(lines: &[String]) -> Result<DumpHeader> {
    let bad = |m: &str| Error::Format(m.to_string());
    if lines.first().map(String::as_str) != Some(MAGIC) {
        return Err(bad("missing magic line"));
    }
    let meta = lines.get(1).ok_or_else(|| bad("missing metadata line"))?;
    let mut label = None;
    let (mut dim, mut n, mut side, mut comps, mut time) = (None, None, None, None, None);
    let mut origin = [0.0; 3];
    for tok in meta.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| bad("metadata token without '='"))?;
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad("bad number in header"));
        match k {
            "label" => label = Some(v.to_string()),
            "dim" => dim = Some(num(v)? as usize),
            "N" => n = Some(num(v)? as usize),
            "h" => {}
            "side" => side = Some(num(v)?),
            "origin" => {
                for (slot, part) in origin.iter_mut().zip(v.split(',')) {
                    *slot = num(part)?;
                }
            }
            "components" => comps = Some(num(v)? as usize),
            "time" => time = Some(num(v)?),
            _ => return Err(bad("unknown metadata key")),
        }
    }
    let grid = GridSpec::new(
        dim.ok_or_else(|| bad("missing dim"))?,
        n.ok_or_else(|| bad("missing N"))?,
        origin,
        side.ok_or_else(|| bad("missing side"))?,
    )?;
    let comments = lines[2..]
        .iter()
        .filter_map(|l| l.strip_prefix("# ").map(str::to_string))
        .collect();
    Ok(DumpHeader {
        label: label.ok_or_else(|| bad("missing label"))?,
        grid,
        components: comps.ok_or_else(|| bad("missing components"))?,
        time: time.ok_or_else(|| bad("missing time"))?,
        comments,
    })
}

/// Reads a dump written by [`write_dump`]; ghosts come back as zero.
pub fn read_dump<K: FieldKind>(path: &Path) -> Result<(DumpHeader, GridField<K>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut lines = Vec::new();
    loop {
        let mut line = String::new();
        let n = r.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Err(Error::Format("unterminated header".into()));
        }
        let line = line.trim_end_matches('\n').to_string();
        if line == END {
            break;
        }
        lines.push(line);
    }
    let header = parse_header(&lines)?;
    if header.components != K::components(header.grid.dim()) {
        return Err(Error::Format(format!(
            "{} components in file, {} expected for a {} field",
            header.components,
            K::components(header.grid.dim()),
            K::NAME
        )));
    }
    let mut field = GridField::<K>::zeros(header.grid);
    let mut buf = [0u8; 8];
    let grid = header.grid;
    for (_, p) in grid.real_nodes() {
        for v in field.node_mut(p) {
            r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
            *v = f64::from_le_bytes(buf);
        }
    }
    if r.read(&mut buf).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    Ok((header, field))
}
