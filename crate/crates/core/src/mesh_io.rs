//! Plain-text mesh files and SVG wireframes.
//!
//! Mesh format: first non-comment line `N_V N_T`, then `N_V` lines `x y`,
//! then `N_T` lines `i0 i1 i2` with 0-based indices. Lines starting with `#`
//! are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{MeshError, Result};
use crate::mesh::{ConnectivityComplex, Mesh, VertexConfig};

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> MeshError {
    MeshError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let counts: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(hline, format!("bad count {t:?}"))))
        .collect::<Result<_>>()?;
    let [nv, nt] = counts[..] else {
        return Err(parse_err(hline, "header must be `N_V N_T`"));
    };

    let mut coords = Vec::with_capacity(nv);
    for k in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(0, format!("expected {nv} vertices, found {k}")))?;
        let xy: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(ln, format!("bad coordinate {t:?}"))))
            .collect::<Result<_>>()?;
        let [x, y] = xy[..] else {
            return Err(parse_err(ln, "vertex line must be `x y`"));
        };
        if !x.is_finite() || !y.is_finite() {
            return Err(parse_err(ln, "non-finite coordinate"));
        }
        coords.push([x, y]);
    }

    let mut triangles = Vec::with_capacity(nt);
    for k in 0..nt {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(0, format!("expected {nt} triangles, found {k}")))?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(ln, format!("bad index {t:?}"))))
            .collect::<Result<_>>()?;
        let [a, b, c] = idx[..] else {
            return Err(parse_err(ln, "triangle line must be `i0 i1 i2`"));
        };
        if let Some(&bad) = idx.iter().find(|&&i| i >= nv) {
            return Err(parse_err(ln, format!("index {bad} out of range for {nv} vertices")));
        }
        triangles.push([a, b, c]);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing data after triangles"));
    }

    Mesh::new(ConnectivityComplex::new(triangles, nv)?, VertexConfig::new(coords)?)
}

pub fn format_mesh(complex: &ConnectivityComplex, q: &VertexConfig) -> String {
    let mut s = String::new();
    writeln!(s, "# planar triangular mesh, 0-based indices").unwrap();
    writeln!(s, "{} {}", q.num_vertices(), complex.num_triangles()).unwrap();
    for p in q.coords() {
        // Display for f64 is the shortest exactly round-tripping form.
        writeln!(s, "{} {}", p[0], p[1]).unwrap();
    }
    for t in complex.triangles() {
        writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    s
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_mesh(&text)
}

pub fn write_mesh(path: impl AsRef<Path>, complex: &ConnectivityComplex, q: &VertexConfig) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_mesh(complex, q)).map_err(|e| io_err(path, e))
}

/// One `<line>` per edge; the view box is the bounding box padded by 5%.
pub fn format_svg(complex: &ConnectivityComplex, q: &VertexConfig) -> String {
    let (lo, hi) = q.bounding_box();
    let w = (hi[0] - lo[0]).max(f64::MIN_POSITIVE);
    let h = (hi[1] - lo[1]).max(f64::MIN_POSITIVE);
    let pad = 0.05 * w.max(h);
    let (x0, y0) = (lo[0] - pad, lo[1] - pad);
    let (vw, vh) = (w + 2.0 * pad, h + 2.0 * pad);
    let stroke = 0.002 * vw.max(vh);
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0} {y0} {vw} {vh}" width="800" height="{}">"#,
        (800.0 * vh / vw).round()
    )
    .unwrap();
    // Flip y so the mesh is drawn in the usual orientation.
    writeln!(
        s,
        r#"<g transform="translate(0 {}) scale(1 -1)" stroke="black" stroke-width="{stroke}" fill="none">"#,
        2.0 * y0 + vh
    )
    .unwrap();
    for e in complex.edges() {
        let a = q.point(e[0]);
        let b = q.point(e[1]);
        writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#, a[0], a[1], b[0], b[1]).unwrap();
    }
    s.push_str("</g>\n</svg>\n");
    s
}

pub fn write_svg(path: impl AsRef<Path>, complex: &ConnectivityComplex, q: &VertexConfig) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_svg(complex, q)).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_disc_mesh, make_square5_mesh};

    #[test]
    fn round_trip_square5() {
        let m = make_square5_mesh();
        let back = parse_mesh(&format_mesh(&m.complex, &m.coords)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = make_disc_mesh(3);
        let back = parse_mesh(&format_mesh(&m.complex, &m.coords)).unwrap();
        assert_eq!(back.coords.to_vec(), m.coords.to_vec());
        assert_eq!(back.complex.triangles(), m.complex.triangles());
    }

    #[test]
    fn index_out_of_range_is_parse_error() {
        let text = "3 1\n0 0\n1 0\n0 1\n0 1 3\n";
        assert!(matches!(parse_mesh(text), Err(MeshError::Parse { line: 5, .. })));
    }

    #[test]
    fn empty_triangle_section_is_not_pure() {
        let text = "# nothing\n3 0\n0 0\n1 0\n0 1\n";
        assert!(matches!(parse_mesh(text), Err(MeshError::NotPure(_))));
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(parse_mesh(""), Err(MeshError::Parse { .. })));
        assert!(matches!(parse_mesh("3\n"), Err(MeshError::Parse { .. })));
        assert!(matches!(
            parse_mesh("1 0\n0 zero\n"),
            Err(MeshError::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_mesh("3 1\n0 0\n1 0\n"), Err(MeshError::Parse { .. })));
        assert!(matches!(
            parse_mesh("3 1\n0 0\n1 0\n0 1\n0 1 2\n0 1 2\n"),
            Err(MeshError::Parse { line: 6, .. })
        ));
    }

    #[test]
    fn svg_has_one_line_per_edge() {
        let m = make_disc_mesh(2);
        let svg = format_svg(&m.complex, &m.coords);
        assert_eq!(svg.matches("<line").count(), m.complex.edges().len());
        assert!(svg.contains(r#"viewBox="-1.1 -1.1 2.2 2.2""#) || svg.contains("viewBox=\"-1.1"));
    }
}
