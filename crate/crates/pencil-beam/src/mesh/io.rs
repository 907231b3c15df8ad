//! Plain-text mesh exchange format.
//!
//! ```text
//! vertices N triangles M
//! <y> <eta>        N lines
//! <i> <j> <k>      M lines, CCW vertex indices
//! boundary_edges K
//! <v0> <v1> <tag>  K lines, tag in {inflow, outflow, characteristic}
//! ```
//!
//! Coordinates are written with Rust's shortest round-trip float
//! formatting, so export -> import -> export reproduces the file
//! byte for byte. Refinement genealogy (generation, parent, green
//! flags) is in-memory state and deliberately not serialized: an
//! imported mesh is a fresh starting point.

use super::{fresh_mesh_id, BoundaryEdge, BoundaryTag, Error, Rect, Result, TriMesh, Triangle};
use std::fmt::Write as _;
use std::path::Path;

impl TriMesh {
    pub fn export_text(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "vertices {} triangles {}",
            self.vertices.len(),
            self.triangles.len()
        )
        .unwrap();
        for v in &self.vertices {
            writeln!(s, "{} {}", v[0], v[1]).unwrap();
        }
        for t in &self.triangles {
            writeln!(s, "{} {} {}", t.v[0], t.v[1], t.v[2]).unwrap();
        }
        writeln!(s, "boundary_edges {}", self.boundary.len()).unwrap();
        for e in &self.boundary {
            writeln!(s, "{} {} {}", e.v[0], e.v[1], e.tag.as_str()).unwrap();
        }
        s
    }

    pub fn import_text(text: &str) -> Result<TriMesh> {
        let bad = |line: usize, what: &str| {
            Error::MeshFormat(format!("line {}: {what}", line + 1))
        };
        let lines: Vec<&str> = text.lines().collect();
        let header: Vec<&str> = lines
            .first()
            .ok_or_else(|| bad(0, "empty file"))?
            .split_whitespace()
            .collect();
        let [kw_v, n_str, kw_t, m_str] = header[..] else {
            return Err(bad(0, "expected `vertices N triangles M`"));
        };
        if kw_v != "vertices" || kw_t != "triangles" {
            return Err(bad(0, "expected `vertices N triangles M`"));
        }
        let n: usize = n_str.parse().map_err(|_| bad(0, "bad vertex count"))?;
        let m: usize = m_str.parse().map_err(|_| bad(0, "bad triangle count"))?;

        let slice = |from: usize, count: usize| -> Result<&[&str]> {
            lines.get(from..from + count).ok_or_else(|| {
                Error::MeshFormat(format!(
                    "file ends early: wanted {count} lines at line {}",
                    from + 1
                ))
            })
        };

        let mut vertices = Vec::with_capacity(n);
        for (off, line) in slice(1, n)?.iter().enumerate() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [ys, es] = parts[..] else {
                return Err(bad(1 + off, "expected `y eta`"));
            };
            let y: f64 = ys.parse().map_err(|_| bad(1 + off, "bad y coordinate"))?;
            let e: f64 = es.parse().map_err(|_| bad(1 + off, "bad eta coordinate"))?;
            if !y.is_finite() || !e.is_finite() {
                return Err(bad(1 + off, "non-finite coordinate"));
            }
            vertices.push([y, e]);
        }

        let mut triangles = Vec::with_capacity(m);
        for (off, line) in slice(1 + n, m)?.iter().enumerate() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [a, b, c] = parts[..] else {
                return Err(bad(1 + n + off, "expected `i j k`"));
            };
            let v = [
                a.parse().map_err(|_| bad(1 + n + off, "bad vertex index"))?,
                b.parse().map_err(|_| bad(1 + n + off, "bad vertex index"))?,
                c.parse().map_err(|_| bad(1 + n + off, "bad vertex index"))?,
            ];
            triangles.push(Triangle { v, generation: 0, parent: None, green: false });
        }

        let bline = 1 + n + m;
        let header: Vec<&str> = slice(bline, 1)?[0].split_whitespace().collect();
        let [kw, k_str] = header[..] else {
            return Err(bad(bline, "expected `boundary_edges K`"));
        };
        if kw != "boundary_edges" {
            return Err(bad(bline, "expected `boundary_edges K`"));
        }
        let k: usize = k_str.parse().map_err(|_| bad(bline, "bad edge count"))?;
        let edge_base = bline + 1;
        let mut boundary = Vec::with_capacity(k);
        for (off, line) in slice(edge_base, k)?.iter().enumerate() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [a, b, tag] = parts[..] else {
                return Err(bad(edge_base + off, "expected `v0 v1 tag`"));
            };
            boundary.push(BoundaryEdge {
                v: [
                    a.parse().map_err(|_| bad(edge_base + off, "bad vertex index"))?,
                    b.parse().map_err(|_| bad(edge_base + off, "bad vertex index"))?,
                ],
                tag: BoundaryTag::parse(tag)?,
            });
        }
        let end = edge_base + k;
        if lines[end..].iter().any(|l| !l.trim().is_empty()) {
            return Err(Error::MeshFormat(format!(
                "trailing content after line {end}"
            )));
        }

        if vertices.is_empty() {
            return Err(Error::MeshFormat("mesh has no vertices".into()));
        }
        let mut rect = Rect {
            y_min: f64::INFINITY,
            y_max: f64::NEG_INFINITY,
            eta_min: f64::INFINITY,
            eta_max: f64::NEG_INFINITY,
        };
        for v in &vertices {
            rect.y_min = rect.y_min.min(v[0]);
            rect.y_max = rect.y_max.max(v[0]);
            rect.eta_min = rect.eta_min.min(v[1]);
            rect.eta_max = rect.eta_max.max(v[1]);
        }
        if !(rect.y_min < rect.y_max && rect.eta_min < rect.eta_max) {
            return Err(Error::MeshFormat("vertices span a degenerate rectangle".into()));
        }

        let mesh = TriMesh { id: fresh_mesh_id(), rect, vertices, triangles, boundary };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn export_file(&self, path: &Path) -> Result<()> {
        crate::report::write_atomic(path, &self.export_text())
    }

    pub fn import_file(path: &Path) -> Result<TriMesh> {
        TriMesh::import_text(&std::fs::read_to_string(path)?)
    }
}
