//! Connectivity complexes, vertex configurations and the elementary
//! geometric quantities of planar triangular meshes.

use std::collections::BTreeMap;

use crate::error::{MeshError, Result};

pub type Triangle = [usize; 3];
pub type Edge = [usize; 2];

/// Oriented, pure, 2-path connected abstract simplicial 2-complex.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityComplex {
    num_vertices: usize,
    triangles: Vec<Triangle>,
    edges: Vec<Edge>,
    boundary_edges: Vec<Edge>,
    boundary_vertices: Vec<usize>,
    on_boundary: Vec<bool>,
    triangle_adjacency: Vec<Vec<usize>>,
}

impl ConnectivityComplex {
    /// Validates the triangle list and derives edges, boundary sets and
    /// triangle adjacency.
    pub fn new(triangles: Vec<Triangle>, num_vertices: usize) -> Result<Self> {
        if triangles.is_empty() {
            return Err(MeshError::NotPure("no triangles".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &index in tri {
                if index >= num_vertices {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        index,
                        num_vertices,
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedVertex(t));
            }
        }

        // Unordered edge -> list of (triangle, directed edge as induced).
        let mut incidence: BTreeMap<Edge, Vec<(usize, Edge)>> = BTreeMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for l in 0..3 {
                let a = tri[(l + 1) % 3];
                let b = tri[(l + 2) % 3];
                incidence.entry([a.min(b), a.max(b)]).or_default().push((t, [a, b]));
            }
        }

        let mut used = vec![false; num_vertices];
        for tri in &triangles {
            for &v in tri {
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(MeshError::NotPure(format!("vertex {v} belongs to no triangle")));
        }

        let mut edges = Vec::with_capacity(incidence.len());
        let mut boundary_edges = Vec::new();
        let mut on_boundary = vec![false; num_vertices];
        let mut triangle_adjacency = vec![Vec::new(); triangles.len()];
        for (edge, inc) in &incidence {
            edges.push(*edge);
            match inc.as_slice() {
                [(_, directed)] => {
                    boundary_edges.push(*directed);
                    on_boundary[edge[0]] = true;
                    on_boundary[edge[1]] = true;
                }
                [(t0, d0), (t1, d1)] => {
                    if d0 == d1 {
                        return Err(MeshError::InconsistentOrientation(d0[0], d0[1]));
                    }
                    triangle_adjacency[*t0].push(*t1);
                    triangle_adjacency[*t1].push(*t0);
                }
                _ => return Err(MeshError::EdgeOveruse(edge[0], edge[1])),
            }
        }
        for adj in &mut triangle_adjacency {
            adj.sort_unstable();
        }

        let components = count_components(&triangle_adjacency);
        if components != 1 {
            return Err(MeshError::NotTwoPathConnected { components });
        }

        let boundary_vertices = (0..num_vertices).filter(|&v| on_boundary[v]).collect();
        Ok(Self {
            num_vertices,
            triangles,
            edges,
            boundary_edges,
            boundary_vertices,
            on_boundary,
            triangle_adjacency,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    /// All edges as sorted index pairs, in lexicographic order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Boundary edges, oriented as induced by their unique triangle.
    pub fn boundary_edges(&self) -> &[Edge] {
        &self.boundary_edges
    }

    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.on_boundary[v]
    }

    pub fn triangle_adjacency(&self) -> &[Vec<usize>] {
        &self.triangle_adjacency
    }

    /// (boundary vertex, boundary edge) pairs with the vertex not an
    /// endpoint of the edge, in a fixed order.
    pub fn boundary_pairs(&self) -> impl Iterator<Item = (usize, Edge)> + '_ {
        self.boundary_edges.iter().flat_map(move |&e| {
            self.boundary_vertices
                .iter()
                .copied()
                .filter(move |&v| v != e[0] && v != e[1])
                .map(move |v| (v, e))
        })
    }
}

fn count_components(adjacency: &[Vec<usize>]) -> usize {
    let mut seen = vec![false; adjacency.len()];
    let mut components = 0;
    let mut stack = Vec::new();
    for start in 0..adjacency.len() {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(t) = stack.pop() {
            for &u in &adjacency[t] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
    }
    components
}

/// Vertex coordinates; column `j` of the 2 x N_V matrix is `coords[j]`.
///
/// Flat vectors over configurations use the column-stacking order
/// `[x_0, y_0, x_1, y_1, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexConfig {
    coords: Vec<[f64; 2]>,
}

impl VertexConfig {
    pub fn new(coords: Vec<[f64; 2]>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(MeshError::NonFinite(i));
        }
        Ok(Self { coords })
    }

    /// From a column-stacked vector of length `2 N_V`.
    pub fn from_vec(v: &[f64]) -> Result<Self> {
        assert!(
            v.len().is_multiple_of(2),
            "vectorized configuration must have even length"
        );
        Self::new(v.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.coords.iter().flat_map(|p| p.iter().copied()).collect()
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        self.coords[i]
    }

    pub fn set_point(&mut self, i: usize, p: [f64; 2]) {
        self.coords[i] = p;
    }

    pub fn corners(&self, tri: &Triangle) -> [[f64; 2]; 3] {
        [self.coords[tri[0]], self.coords[tri[1]], self.coords[tri[2]]]
    }

    /// Applies `x -> R(angle) x + shift` to every vertex.
    pub fn rigid_motion(&self, angle: f64, shift: [f64; 2]) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            coords: self
                .coords
                .iter()
                .map(|p| [c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1]])
                .collect(),
        }
    }

    pub fn frobenius_dist_sq(&self, other: &Self) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))
            .sum()
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.coords {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    pub(crate) fn check_size(&self, complex: &ConnectivityComplex) -> Result<()> {
        if self.num_vertices() != complex.num_vertices() {
            return Err(MeshError::SizeMismatch {
                expected: complex.num_vertices(),
                got: self.num_vertices(),
            });
        }
        Ok(())
    }
}

/// Regularization scale `mu > 0` of the smoothed 1-norm distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParam(f64);

impl SmoothingParam {
    pub const DEFAULT: SmoothingParam = SmoothingParam(0.1);

    pub fn new(mu: f64) -> Option<Self> {
        (mu > 0.0 && mu.is_finite()).then_some(Self(mu))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for SmoothingParam {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// A complex together with one vertex configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub complex: ConnectivityComplex,
    pub coords: VertexConfig,
}

impl Mesh {
    pub fn new(complex: ConnectivityComplex, coords: VertexConfig) -> Result<Self> {
        coords.check_size(&complex)?;
        Ok(Self { complex, coords })
    }
}

// ---------------------------------------------------------------------------
// Elementary geometry

pub(crate) fn area_of(p: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[1][1]) - (p[2][0] - p[1][0]) * (p[1][1] - p[0][1]))
}

/// Gradient of the signed area with respect to each corner.
pub(crate) fn area_grad_of(p: &[[f64; 2]; 3]) -> [[f64; 2]; 3] {
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        g[i] = [0.5 * (a[1] - b[1]), 0.5 * (b[0] - a[0])];
    }
    g
}

pub(crate) fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn len2(a: [f64; 2]) -> f64 {
    a[0] * a[0] + a[1] * a[1]
}

pub(crate) fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Half the determinant `[q1 - q0, q2 - q1]`; positive for counter-clockwise
/// triangles.
pub fn signed_area(q: &VertexConfig, tri: &Triangle) -> f64 {
    area_of(&q.corners(tri))
}

/// Length of the edge opposite local vertex `ell`.
pub fn edge_length(q: &VertexConfig, tri: &Triangle, ell: usize) -> f64 {
    let a = q.point(tri[(ell + 1) % 3]);
    let b = q.point(tri[(ell + 2) % 3]);
    len2(sub(a, b)).sqrt()
}

/// Signed height from local vertex `ell` onto the opposite edge.
pub fn height(q: &VertexConfig, tri: &Triangle, ell: usize) -> Result<f64> {
    let e = edge_length(q, tri, ell);
    if e == 0.0 {
        return Err(MeshError::DegenerateEdge(tri[(ell + 1) % 3], tri[(ell + 2) % 3]));
    }
    Ok(2.0 * signed_area(q, tri) / e)
}

pub fn total_area(q: &VertexConfig, complex: &ConnectivityComplex) -> f64 {
    complex.triangles().iter().map(|t| signed_area(q, t)).sum()
}

pub fn min_signed_area(q: &VertexConfig, complex: &ConnectivityComplex) -> f64 {
    complex
        .triangles()
        .iter()
        .map(|t| signed_area(q, t))
        .fold(f64::INFINITY, f64::min)
}

/// Errors with the first triangle whose signed area is not strictly positive.
pub fn check_positive_areas(q: &VertexConfig, complex: &ConnectivityComplex) -> Result<()> {
    q.check_size(complex)?;
    for (t, tri) in complex.triangles().iter().enumerate() {
        let area = signed_area(q, tri);
        if !(area > 0.0) {
            return Err(MeshError::NonpositiveArea { triangle: t, area });
        }
    }
    Ok(())
}

// Smoothed |t| and max(t, 0).
fn abs_mu(t: f64, mu: f64) -> (f64, f64) {
    let r = (t * t + mu * mu).sqrt();
    let v = t * t / r;
    let d = t * (t * t + 2.0 * mu * mu) / (r * r * r);
    (v, d)
}

fn pos_mu(t: f64, mu: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    let s = t * t + mu * mu;
    let r3 = s * s.sqrt();
    let v = t.powi(4) / r3;
    let d = t.powi(3) * (t * t + 4.0 * mu * mu) / (s * r3);
    (v, d)
}

/// Value and gradients `(value, d/dvertex, d/dedge_start, d/dedge_end)` of the
/// regularized vertex-edge distance.
pub(crate) fn regularized_distance_with_grad(
    v: [f64; 2],
    a: [f64; 2],
    b: [f64; 2],
    mu: f64,
) -> Option<(f64, [[f64; 2]; 3])> {
    let e = sub(b, a);
    let l = len2(e).sqrt();
    if l == 0.0 {
        return None;
    }
    let t = [e[0] / l, e[1] / l];
    let n = [-t[1], t[0]];
    let w = sub(v, a);
    let xi = (w[0] * e[0] + w[1] * e[1]) / l;
    let eta = cross(e, w) / l;

    let (a_eta, da_eta) = abs_mu(eta, mu);
    let (m_lo, dm_lo) = pos_mu(-xi, mu);
    let (m_hi, dm_hi) = pos_mu(xi - l, mu);
    let value = a_eta + m_lo + m_hi;

    // Partial derivatives of xi, eta and L with respect to v and b; the
    // derivative with respect to a follows from translation invariance.
    let dxi_dv = t;
    let deta_dv = n;
    let dxi_db = [(w[0] - xi * t[0]) / l, (w[1] - xi * t[1]) / l];
    let deta_db = [(w[1] - eta * t[0]) / l, (-w[0] - eta * t[1]) / l];
    let dl_db = t;

    let mut g = [[0.0; 2]; 3];
    for d in 0..2 {
        let dxi = dm_hi - dm_lo;
        g[0][d] = da_eta * deta_dv[d] + dxi * dxi_dv[d];
        g[2][d] = da_eta * deta_db[d] + dxi * dxi_db[d] - dm_hi * dl_db[d];
        g[1][d] = -g[0][d] - g[2][d];
    }
    Some((value, g))
}

/// C^3 underestimate of the 1-norm distance (in the edge-aligned frame) from
/// `vertex` to the segment `edge`.
pub fn regularized_distance(q: &VertexConfig, vertex: usize, edge: Edge, mu: SmoothingParam) -> Result<f64> {
    regularized_distance_with_grad(q.point(vertex), q.point(edge[0]), q.point(edge[1]), mu.value())
        .map(|(v, _)| v)
        .ok_or(MeshError::DegenerateEdge(edge[0], edge[1]))
}

// ---------------------------------------------------------------------------
// Admissibility

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    cross(sub(b, a), sub(c, a))
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], p3: [f64; 2], p4: [f64; 2]) -> bool {
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(p3, p4, p1))
        || (d2 == 0.0 && on_segment(p3, p4, p2))
        || (d3 == 0.0 && on_segment(p1, p2, p3))
        || (d4 == 0.0 && on_segment(p1, p2, p4))
}

/// Positive signed areas, and optionally a conservative test that the
/// boundary does not self-intersect: no two vertex-disjoint boundary edges
/// meet and no boundary vertex lies in a triangle it does not belong to.
pub fn is_admissible(complex: &ConnectivityComplex, q: &VertexConfig, check_intersections: bool) -> bool {
    if q.num_vertices() != complex.num_vertices() {
        return false;
    }
    if complex.triangles().iter().any(|t| !(signed_area(q, t) > 0.0)) {
        return false;
    }
    if !check_intersections {
        return true;
    }
    let be = complex.boundary_edges();
    for (i, e) in be.iter().enumerate() {
        for f in &be[i + 1..] {
            if e.iter().any(|v| f.contains(v)) {
                continue;
            }
            if segments_intersect(q.point(e[0]), q.point(e[1]), q.point(f[0]), q.point(f[1])) {
                return false;
            }
        }
    }
    for &v in complex.boundary_vertices() {
        let p = q.point(v);
        for tri in complex.triangles() {
            if tri.contains(&v) {
                continue;
            }
            let c = q.corners(tri);
            if (0..3).all(|l| orient(c[l], c[(l + 1) % 3], p) >= 0.0) {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Refinement and generators

/// Bisects every edge and splits every triangle into four similar children.
/// New vertices are appended in the lexicographic order of the parent edges.
pub fn uniform_refine(complex: &ConnectivityComplex, q: &VertexConfig) -> Result<Mesh> {
    q.check_size(complex)?;
    let n = complex.num_vertices();
    let mut coords = q.coords().to_vec();
    let mut midpoint = BTreeMap::new();
    for (k, e) in complex.edges().iter().enumerate() {
        let a = q.point(e[0]);
        let b = q.point(e[1]);
        coords.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
        midpoint.insert(*e, n + k);
    }
    let mid = |a: usize, b: usize| midpoint[&[a.min(b), a.max(b)]];
    let mut triangles = Vec::with_capacity(4 * complex.num_triangles());
    for &[a, b, c] in complex.triangles() {
        let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    let num_vertices = coords.len();
    Mesh::new(
        ConnectivityComplex::new(triangles, num_vertices)?,
        VertexConfig::new(coords)?,
    )
}

/// Unit-disc triangulation by concentric rings: ring `k` has `6k` vertices at
/// radius `k / rings`.
pub fn make_disc_mesh(rings: usize) -> Mesh {
    assert!(rings >= 1, "disc mesh needs at least one ring");
    let mut coords = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize];
    for k in 1..=rings {
        ring_start.push(coords.len());
        let radius = k as f64 / rings as f64;
        let m = 6 * k;
        for j in 0..m {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            coords.push([radius * theta.cos(), radius * theta.sin()]);
        }
    }

    let mut triangles = Vec::with_capacity(6 * rings * rings);
    for j in 0..6 {
        triangles.push([1 + j, 1 + (j + 1) % 6, 0]);
    }
    for k in 2..=rings {
        // Zip ring k-1 (inner) and ring k (outer) by angle; the angle of
        // inner vertex i is i/(6(k-1)) turns, of outer vertex j is j/(6k).
        let inner_n = 6 * (k - 1);
        let outer_n = 6 * k;
        let inner = |i: usize| ring_start[k - 1] + i % inner_n;
        let outer = |j: usize| ring_start[k] + j % outer_n;
        let (mut i, mut j) = (0, 0);
        while i < inner_n || j < outer_n {
            let advance_outer = i == inner_n || (j < outer_n && (j + 1) * inner_n <= (i + 1) * outer_n);
            if advance_outer {
                triangles.push([outer(j), outer(j + 1), inner(i)]);
                j += 1;
            } else {
                triangles.push([inner(i), outer(j), inner(i + 1)]);
                i += 1;
            }
        }
    }
    let n = coords.len();
    Mesh::new(
        ConnectivityComplex::new(triangles, n).expect("disc mesh connectivity is valid"),
        VertexConfig::new(coords).expect("finite coordinates"),
    )
    .expect("sizes agree")
}

/// The square `[-1, 1]^2` split into four triangles around the centre vertex 4.
pub fn make_square5_mesh() -> Mesh {
    let coords = vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [0.0, 0.0]];
    let triangles = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]];
    Mesh::new(
        ConnectivityComplex::new(triangles, 5).expect("valid"),
        VertexConfig::new(coords).expect("finite"),
    )
    .expect("sizes agree")
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn config(p: &[[f64; 2]]) -> VertexConfig {
        VertexConfig::new(p.to_vec()).unwrap()
    }

    const T: Triangle = [0, 1, 2];

    #[test]
    fn fan_complex_boundary() {
        let m = make_square5_mesh();
        let c = &m.complex;
        assert_eq!(c.boundary_edges().len(), 4);
        assert_eq!(c.boundary_vertices(), &[0, 1, 2, 3]);
        assert_eq!(c.edges().len(), 8);
        assert!(!c.is_boundary_vertex(4));
    }

    #[test]
    fn single_triangle_all_boundary() {
        let c = ConnectivityComplex::new(vec![T], 3).unwrap();
        assert_eq!(c.boundary_edges().len(), 3);
        assert_eq!(c.boundary_vertices().len(), 3);
    }

    #[test]
    fn build_errors() {
        assert!(matches!(
            ConnectivityComplex::new(vec![[0, 1, 2], [0, 1, 3]], 4),
            Err(MeshError::InconsistentOrientation(0, 1))
        ));
        assert!(matches!(
            ConnectivityComplex::new(vec![], 3),
            Err(MeshError::NotPure(_))
        ));
        assert!(matches!(
            ConnectivityComplex::new(vec![T], 4),
            Err(MeshError::NotPure(_))
        ));
        assert!(matches!(
            ConnectivityComplex::new(vec![[0, 1, 2], [3, 4, 5]], 6),
            Err(MeshError::NotTwoPathConnected { components: 2 })
        ));
        // Bow-tie sharing only a vertex is not 2-path connected either.
        assert!(matches!(
            ConnectivityComplex::new(vec![[0, 1, 2], [0, 3, 4]], 5),
            Err(MeshError::NotTwoPathConnected { .. })
        ));
        assert!(matches!(
            ConnectivityComplex::new(vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]], 5),
            Err(MeshError::EdgeOveruse(0, 1)) | Err(MeshError::InconsistentOrientation(0, 1))
        ));
        assert!(matches!(
            ConnectivityComplex::new(vec![[0, 1, 3]], 3),
            Err(MeshError::IndexOutOfRange { index: 3, .. })
        ));
    }

    #[test]
    fn edge_overuse_detected() {
        // Three triangles on edge (0,1): two consistent, one more.
        let r = ConnectivityComplex::new(vec![[0, 1, 2], [1, 0, 3], [1, 0, 4]], 5);
        assert!(r.is_err());
        let r = ConnectivityComplex::new(vec![[0, 1, 2], [1, 0, 3], [2, 1, 4], [0, 1, 5]], 6);
        assert!(matches!(
            r,
            Err(MeshError::EdgeOveruse(0, 1)) | Err(MeshError::InconsistentOrientation(..))
        ));
    }

    #[test]
    fn areas() {
        assert_relative_eq!(signed_area(&config(&[[0., 0.], [1., 0.], [0., 1.]]), &T), 0.5);
        assert_relative_eq!(signed_area(&config(&[[0., 0.], [0., 1.], [1., 0.]]), &T), -0.5);
        let eq = config(&[[0., 0.], [1., 0.], [0.5, 3f64.sqrt() / 2.]]);
        assert_relative_eq!(signed_area(&eq, &T), 3f64.sqrt() / 4.0, epsilon = 1e-15);
        for l in 0..3 {
            assert_relative_eq!(edge_length(&eq, &T, l), 1.0, epsilon = 1e-15);
            assert_relative_eq!(height(&eq, &T, l).unwrap(), 3f64.sqrt() / 2.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn lengths_and_heights_of_right_triangle() {
        let q = config(&[[0., 0.], [1., 0.], [0., 1.]]);
        assert_relative_eq!(edge_length(&q, &T, 0), 2f64.sqrt());
        assert_relative_eq!(edge_length(&q, &T, 1), 1.0);
        assert_relative_eq!(height(&q, &T, 0).unwrap(), 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(height(&q, &T, 1).unwrap(), 1.0);
        let degenerate = config(&[[0., 0.], [1., 0.], [1., 0.]]);
        assert!(matches!(
            height(&degenerate, &T, 0),
            Err(MeshError::DegenerateEdge(1, 2))
        ));
    }

    #[test]
    fn regularized_distance_values() {
        let mu = SmoothingParam::new(0.1).unwrap();
        let q = config(&[[0., 2.], [0., 0.], [1., 0.], [0.5, 0.], [2., 0.]]);
        assert_relative_eq!(
            regularized_distance(&q, 0, [1, 2], mu).unwrap(),
            4.0 / 4.01f64.sqrt(),
            epsilon = 1e-15
        );
        assert_eq!(regularized_distance(&q, 3, [1, 2], mu).unwrap(), 0.0);
        // Overshoot of one edge length along the tangent.
        assert_relative_eq!(
            regularized_distance(&q, 4, [1, 2], mu).unwrap(),
            1.0 / 1.01f64.powf(1.5),
            epsilon = 1e-15
        );
        assert!(matches!(
            regularized_distance(&q, 0, [3, 3], mu),
            Err(MeshError::DegenerateEdge(3, 3))
        ));
    }

    #[test]
    fn regularized_distance_gradient_matches_fd() {
        let pts = [[0.3, 0.7], [-0.2, 0.1], [1.1, -0.3]];
        for mu in [1e-3, 0.1, 1.0] {
            for shift in [-1.5, 0.0, 0.4, 2.0] {
                let v = [pts[0][0] + shift, pts[0][1]];
                let (_, g) = regularized_distance_with_grad(v, pts[1], pts[2], mu).unwrap();
                let mut p = [v, pts[1], pts[2]];
                let h = 1e-6;
                for k in 0..3 {
                    for d in 0..2 {
                        let orig = p[k][d];
                        p[k][d] = orig + h;
                        let fp = regularized_distance_with_grad(p[0], p[1], p[2], mu).unwrap().0;
                        p[k][d] = orig - h;
                        let fm = regularized_distance_with_grad(p[0], p[1], p[2], mu).unwrap().0;
                        p[k][d] = orig;
                        assert_relative_eq!(g[k][d], (fp - fm) / (2.0 * h), epsilon = 1e-7);
                    }
                }
            }
        }
    }

    #[test]
    fn square5_admissibility() {
        let mut m = make_square5_mesh();
        assert!(is_admissible(&m.complex, &m.coords, true));
        assert_relative_eq!(total_area(&m.coords, &m.complex), 4.0);
        m.coords.set_point(4, [0.0, 1.0]);
        assert!(!is_admissible(&m.complex, &m.coords, false));
        m.coords.set_point(4, [0.0, 2.0]);
        assert!(!is_admissible(&m.complex, &m.coords, false));
        assert!(matches!(
            check_positive_areas(&m.coords, &m.complex),
            Err(MeshError::NonpositiveArea { .. })
        ));
    }

    #[test]
    fn boundary_self_intersection_detected() {
        // Fan around vertex 0 winding 400 degrees: every triangle is positively
        // oriented, but the last boundary vertex lands inside the first triangle.
        let tris: Vec<Triangle> = (1..9).map(|i| [0, i, i + 1]).collect();
        let c = ConnectivityComplex::new(tris, 10).unwrap();
        let mut pts = vec![[0.0, 0.0]];
        for i in 0..9 {
            let th = (50.0 * i as f64).to_radians();
            let r = if i == 8 { 0.5 } else { 1.0 };
            pts.push([r * th.cos(), r * th.sin()]);
        }
        let q = config(&pts);
        assert!(is_admissible(&c, &q, false));
        assert!(!is_admissible(&c, &q, true));
    }

    #[test]
    fn refinement_counts() {
        let single = Mesh::new(
            ConnectivityComplex::new(vec![T], 3).unwrap(),
            config(&[[0., 0.], [1., 0.], [0.2, 0.9]]),
        )
        .unwrap();
        let r = uniform_refine(&single.complex, &single.coords).unwrap();
        assert_eq!(r.complex.num_triangles(), 4);
        assert_eq!(r.complex.num_vertices(), 6);
        let sq = make_square5_mesh();
        let r = uniform_refine(&sq.complex, &sq.coords).unwrap();
        assert_eq!(r.complex.num_triangles(), 16);
        assert_eq!(r.complex.num_vertices(), 13);
        assert!(is_admissible(&r.complex, &r.coords, true));
        assert_relative_eq!(total_area(&r.coords, &r.complex), 4.0, epsilon = 1e-14);
    }

    #[test]
    fn disc_meshes() {
        for (rings, nv, nt) in [(1, 7, 6), (2, 19, 24), (5, 91, 150)] {
            let m = make_disc_mesh(rings);
            assert_eq!(m.complex.num_vertices(), nv);
            assert_eq!(m.complex.num_triangles(), nt);
            assert!(is_admissible(&m.complex, &m.coords, true));
            assert_eq!(m.complex.boundary_vertices().len(), 6 * rings);
        }
    }

    #[test]
    fn boundary_pairs_exclude_endpoints() {
        let m = make_square5_mesh();
        let pairs: Vec<_> = m.complex.boundary_pairs().collect();
        assert_eq!(pairs.len(), 4 * 2);
        assert!(pairs.iter().all(|(v, e)| !e.contains(v)));
    }
}
