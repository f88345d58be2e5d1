//! Mesh text format and VTK legacy output.
//!
//! ```text
//! NODES k
//! x y                      (k lines)
//! TRIANGLES m
//! a b c tag                (m lines, zero-based node indices)
//! BOUNDARY b
//! a b segment              (b lines; segment -1 marks the outer square)
//! ```

use std::io::{BufRead, Write};

use super::{CurveEdge, Triangulation};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn write_mesh<T: Real, W: Write>(tri: &Triangulation<T>, mut out: W) -> Result<()> {
    writeln!(out, "NODES {}", tri.num_nodes())?;
    for p in &tri.nodes {
        writeln!(out, "{:.16e} {:.16e}", p[0].as_f64(), p[1].as_f64())?;
    }
    writeln!(out, "TRIANGLES {}", tri.num_triangles())?;
    for (t, v) in tri.triangles.iter().enumerate() {
        writeln!(out, "{} {} {} {}", v[0], v[1], v[2], tri.tags[t])?;
    }
    writeln!(out, "BOUNDARY {}", tri.curve_edges.len() + tri.outer_edges.len())?;
    for e in &tri.curve_edges {
        writeln!(out, "{} {} {}", e.nodes[0], e.nodes[1], e.segment)?;
    }
    for e in &tri.outer_edges {
        writeln!(out, "{} {} -1", e[0], e[1])?;
    }
    Ok(())
}

struct Lines<'a> {
    inner: Box<dyn Iterator<Item = (usize, &'a str)> + 'a>,
    total: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str)> {
        self.inner.next().ok_or(Error::Parse { line: self.total, message: "unexpected end of file".into() })
    }

    fn header(&mut self, name: &str) -> Result<usize> {
        let (i, l) = self.next()?;
        let f: Vec<&str> = l.split_whitespace().collect();
        match f.as_slice() {
            [tag, n] if *tag == name => n.parse().map_err(|_| Error::Parse { line: i + 1, message: format!("bad {name} count") }),
            _ => Err(Error::Parse { line: i + 1, message: format!("expected `{name} <count>`") }),
        }
    }

    fn record<V: std::str::FromStr>(&mut self, len: usize) -> Result<(usize, Vec<V>)> {
        let (i, l) = self.next()?;
        let v: Vec<V> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse { line: i + 1, message: "malformed record".into() })?;
        if v.len() != len {
            return Err(Error::Parse { line: i + 1, message: format!("expected {len} fields") });
        }
        Ok((i, v))
    }
}

pub fn read_mesh<T: Real, R: BufRead>(input: R) -> Result<Triangulation<T>> {
    let text: Vec<String> = input.lines().collect::<std::io::Result<_>>()?;
    let mut lines = Lines {
        inner: Box::new(text.iter().enumerate().map(|(i, l)| (i, l.trim())).filter(|(_, l)| !l.is_empty())),
        total: text.len(),
    };
    let bad = |i: usize, message: &str| Error::Parse { line: i + 1, message: message.into() };

    let nn = lines.header("NODES")?;
    let mut nodes = Vec::with_capacity(nn);
    for _ in 0..nn {
        let (_, x) = lines.record::<f64>(2)?;
        nodes.push([T::lit(x[0]), T::lit(x[1])]);
    }
    let nt = lines.header("TRIANGLES")?;
    let (mut triangles, mut tags) = (Vec::with_capacity(nt), Vec::with_capacity(nt));
    for _ in 0..nt {
        let (i, x) = lines.record::<usize>(4)?;
        if x[..3].iter().any(|&n| n >= nn) {
            return Err(bad(i, "node index out of range"));
        }
        triangles.push([x[0], x[1], x[2]]);
        tags.push(u8::try_from(x[3]).map_err(|_| bad(i, "tag out of range"))?);
    }
    let nb = lines.header("BOUNDARY")?;
    let (mut curve_edges, mut outer_edges) = (Vec::new(), Vec::new());
    for _ in 0..nb {
        let (i, x) = lines.record::<i64>(3)?;
        if x[..2].iter().any(|&n| n < 0 || n as usize >= nn) {
            return Err(bad(i, "node index out of range"));
        }
        let nodes = [x[0] as usize, x[1] as usize];
        if x[2] < 0 {
            outer_edges.push(nodes);
        } else {
            curve_edges.push(CurveEdge { nodes, segment: x[2] as usize });
        }
    }
    let mut tri = Triangulation { nodes, triangles, tags, curve_edges, outer_edges, grading: None, target_h: T::zero() };
    tri.target_h = tri.h();
    Ok(tri)
}

/// Named nodal field for VTK output.
pub struct PointField<'a, T> {
    pub name: &'a str,
    pub values: &'a [T],
}

/// Writes an ASCII VTK legacy unstructured grid: triangles as cell type 5,
/// the subdomain tag as cell data and the given nodal fields as point data.
pub fn write_vtk<T: Real, W: Write>(tri: &Triangulation<T>, fields: &[PointField<'_, T>], title: &str, mut out: W) -> Result<()> {
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.lines().next().unwrap_or("venttsel"))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", tri.num_nodes())?;
    for p in &tri.nodes {
        writeln!(out, "{:.16e} {:.16e} 0", p[0].as_f64(), p[1].as_f64())?;
    }
    let nt = tri.num_triangles();
    writeln!(out, "CELLS {} {}", nt, 4 * nt)?;
    for v in &tri.triangles {
        writeln!(out, "3 {} {} {}", v[0], v[1], v[2])?;
    }
    writeln!(out, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(out, "5")?;
    }
    writeln!(out, "CELL_DATA {nt}")?;
    writeln!(out, "SCALARS subdomain int 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for t in &tri.tags {
        writeln!(out, "{t}")?;
    }
    if !fields.is_empty() {
        writeln!(out, "POINT_DATA {}", tri.num_nodes())?;
        for f in fields {
            if f.values.len() != tri.num_nodes() {
                return Err(Error::InvalidArgument(format!("field `{}` has {} values for {} nodes", f.name, f.values.len(), tri.num_nodes())));
            }
            writeln!(out, "SCALARS {} double 1", f.name)?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for v in f.values {
                writeln!(out, "{:.16e}", v.as_f64())?;
            }
        }
    }
    Ok(())
}
