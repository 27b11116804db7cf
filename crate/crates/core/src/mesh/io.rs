//! Plain-text mesh format:
//!
//! ```text
//! VEMESH 1
//! VERTICES m
//! x y            (m lines)
//! POLYGONS p
//! k i_1 ... i_k  (p lines, 0-based, counterclockwise)
//! ```
//!
//! Coordinates are written with the shortest round-trip representation, so
//! reading a written mesh reproduces it bit for bit. Connectivity is always
//! re-derived on load.

use std::io::{BufRead, Write};

use super::{build_mesh, PolygonalMesh, Vec2};
use crate::error::{Result, VemError};

pub fn write_mesh<W: Write>(mesh: &PolygonalMesh, mut w: W) -> Result<()> {
    writeln!(w, "VEMESH 1")?;
    writeln!(w, "VERTICES {}", mesh.num_vertices())?;
    for p in mesh.vertices() {
        writeln!(w, "{:?} {:?}", p.x, p.y)?;
    }
    writeln!(w, "POLYGONS {}", mesh.num_polygons())?;
    for poly in mesh.polygons() {
        write!(w, "{}", poly.len())?;
        for v in poly {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        loop {
            self.line += 1;
            match self.inner.next() {
                Some(l) => {
                    let l = l?;
                    let t = l.trim();
                    if !t.is_empty() && !t.starts_with('#') {
                        return Ok(t.to_string());
                    }
                }
                None => return Err(self.err("unexpected end of file")),
            }
        }
    }

    fn err(&self, message: &str) -> VemError {
        VemError::Parse {
            line: self.line,
            message: message.to_string(),
        }
    }

    fn header(&mut self, keyword: &str) -> Result<usize> {
        let l = self.next_line()?;
        let mut it = l.split_whitespace();
        if it.next() != Some(keyword) {
            return Err(self.err(&format!("expected `{keyword}`")));
        }
        it.next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.err(&format!("`{keyword}` needs a count")))
    }
}

pub fn read_mesh<R: BufRead>(r: R) -> Result<PolygonalMesh> {
    let mut lines = Lines {
        inner: r.lines(),
        line: 0,
    };
    let version = lines.header("VEMESH")?;
    if version != 1 {
        return Err(lines.err(&format!("unsupported version {version}")));
    }
    let m = lines.header("VERTICES")?;
    let mut vertices = Vec::with_capacity(m);
    for _ in 0..m {
        let l = lines.next_line()?;
        let xy: Vec<f64> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| lines.err("bad coordinate"))?;
        if xy.len() != 2 {
            return Err(lines.err("vertex line needs two coordinates"));
        }
        vertices.push(Vec2::new(xy[0], xy[1]));
    }
    let p = lines.header("POLYGONS")?;
    let mut polygons = Vec::with_capacity(p);
    for _ in 0..p {
        let l = lines.next_line()?;
        let ids: Vec<usize> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| lines.err("bad vertex index"))?;
        if ids.is_empty() || ids[0] != ids.len() - 1 {
            return Err(lines.err("polygon vertex count does not match"));
        }
        polygons.push(ids[1..].to_vec());
    }
    build_mesh(vertices, polygons)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_hex_mesh, generate_square_mesh};

    fn round_trip(mesh: &PolygonalMesh) -> PolygonalMesh {
        let mut buf = Vec::new();
        write_mesh(mesh, &mut buf).unwrap();
        read_mesh(buf.as_slice()).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        for m in [generate_square_mesh(3).unwrap(), generate_hex_mesh(3).unwrap()] {
            assert_eq!(round_trip(&m), m);
        }
    }

    #[test]
    fn format_layout() {
        let mut buf = Vec::new();
        write_mesh(&generate_square_mesh(1).unwrap(), &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(
            s,
            "VEMESH 1\nVERTICES 4\n0.0 0.0\n1.0 0.0\n0.0 1.0\n1.0 1.0\nPOLYGONS 1\n4 0 1 3 2\n"
        );
    }

    #[test]
    fn parse_errors_carry_line() {
        let bad = "VEMESH 1\nVERTICES 1\n0.0 zz\n";
        match read_mesh(bad.as_bytes()) {
            Err(VemError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(read_mesh("VEMESH 2\n".as_bytes()).is_err());
        assert!(read_mesh("VEMESH 1\nVERTICES 4\n0 0\n1 0\n1 1\n0 1\nPOLYGONS 1\n3 0 1 2 3\n".as_bytes()).is_err());
    }
}
