use std::io::{BufRead, Write};

use super::{Element, Mesh, Problem};
use crate::error::{Error, Result};

impl Mesh {
    /// Plain-text dump: `nv ne nt`, then vertex lines `x y`, edge lines `a b tag`,
    /// element lines `v0 v1 v2 refinement_edge generation`.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {}", self.n_vertices(), self.n_edges(), self.n_elements())?;
        for p in &self.vertices {
            writeln!(w, "{:e} {:e}", p[0], p[1])?;
        }
        for e in &self.edges {
            writeln!(w, "{} {} {}", e.endpoints[0], e.endpoints[1], e.tag.code())?;
        }
        for el in &self.elements {
            writeln!(w, "{} {} {} {} {}", el.v[0], el.v[1], el.v[2], el.refinement_edge, el.generation)?;
        }
        Ok(())
    }

    /// Reads a dump; edges are rebuilt from the elements and checked against the file.
    pub fn load<R: BufRead>(r: R, problem: Problem) -> Result<Mesh> {
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines.next().ok_or_else(|| Error::InvalidMesh("unexpected end of file".into()))?.map_err(Error::from)
        };
        let bad = |what: &str, line: &str| Error::InvalidMesh(format!("bad {what} line `{line}`"));
        let header = next()?;
        let counts: Vec<usize> = header.split_whitespace().map(str::parse).collect::<std::result::Result<_, _>>().map_err(|_| bad("header", &header))?;
        let [nv, ne, nt] = counts[..] else { return Err(bad("header", &header)) };

        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let line = next()?;
            let v: Vec<f64> = line.split_whitespace().map(str::parse).collect::<std::result::Result<_, _>>().map_err(|_| bad("vertex", &line))?;
            let [x, y] = v[..] else { return Err(bad("vertex", &line)) };
            vertices.push([x, y]);
        }
        let mut edge_lines = Vec::with_capacity(ne);
        for _ in 0..ne {
            edge_lines.push(next()?);
        }
        let mut elements = Vec::with_capacity(nt);
        for _ in 0..nt {
            let line = next()?;
            let v: Vec<usize> = line.split_whitespace().map(str::parse).collect::<std::result::Result<_, _>>().map_err(|_| bad("element", &line))?;
            let [a, b, c, r, g] = v[..] else { return Err(bad("element", &line)) };
            if r > 2 {
                return Err(bad("element", &line));
            }
            elements.push(Element { v: [a, b, c], refinement_edge: r as u8, generation: g as u32 });
        }
        let mesh = Mesh::from_parts(problem, vertices, elements)?;
        if mesh.n_edges() != ne {
            return Err(Error::InvalidMesh(format!("edge count {ne} in file, {} rebuilt", mesh.n_edges())));
        }
        for (e, line) in mesh.edges.iter().zip(&edge_lines) {
            let expected = format!("{} {} {}", e.endpoints[0], e.endpoints[1], e.tag.code());
            if line.split_whitespace().collect::<Vec<_>>().join(" ") != expected {
                return Err(bad("edge", line));
            }
        }
        Ok(mesh)
    }
}
