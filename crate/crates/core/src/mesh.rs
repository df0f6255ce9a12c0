//! Triangulations of axis-aligned rectangles with face connectivity.
//!
//! The mesh is a structured diagonal-split grid: the rectangle is divided
//! into `nx x ny` squares and every square is cut along its lower-left to
//! upper-right diagonal. Element numbering is row-major over squares, with
//! the lower triangle before the upper one; this fixes the "smaller global
//! label on the left" convention that gives jumps and face normals a
//! deterministic sign.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    /// `[-1, 1]^2`, the domain used by all built-in experiments.
    pub fn unit_centered() -> Self {
        Rect::new(-1.0, -1.0, 1.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Boundary,
}

/// An undirected mesh edge with trace bookkeeping.
///
/// `vertices` is stored with the smaller vertex index first; the face is
/// parameterized from `vertices[0]` to `vertices[1]` on both sides so that
/// left and right traces are evaluated at the same physical point. The
/// normal points from the left element into the right one (outward on the
/// boundary), and on interior faces `left_elem < right_elem`.
#[derive(Clone, Debug)]
pub struct Face {
    pub vertices: [usize; 2],
    pub kind: FaceKind,
    pub left_elem: usize,
    pub right_elem: Option<usize>,
    pub normal: Point,
    /// Face length h_e.
    pub h_e: f64,
}

/// Per-element affine geometry: x = v0 + B * (xi, eta).
#[derive(Clone, Copy, Debug)]
pub struct ElemGeometry {
    pub v0: Point,
    /// Columns are the edge vectors v1 - v0 and v2 - v0.
    pub b: [[f64; 2]; 2],
    /// Inverse transpose of B, maps reference gradients to physical ones.
    pub b_inv_t: [[f64; 2]; 2],
    /// det B = 2 |K| (positive for counterclockwise triangles).
    pub det: f64,
    pub area: f64,
    /// Element diameter (longest edge).
    pub diameter: f64,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Vertex index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    pub faces: Vec<Face>,
    /// For each triangle, the face ids of its three edges
    /// (v0-v1, v1-v2, v2-v0).
    pub elem_faces: Vec<[usize; 3]>,
    /// Max element diameter.
    pub h_max: f64,
    pub domain: Rect,
    geometry: Vec<ElemGeometry>,
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elems(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn geometry(&self, elem: usize) -> &ElemGeometry {
        &self.geometry[elem]
    }

    /// Map reference coordinates in `elem` to physical coordinates.
    pub fn to_physical(&self, elem: usize, xi: Point) -> Point {
        let g = &self.geometry[elem];
        [
            g.v0[0] + g.b[0][0] * xi[0] + g.b[0][1] * xi[1],
            g.v0[1] + g.b[1][0] * xi[0] + g.b[1][1] * xi[1],
        ]
    }

    /// Map physical coordinates to reference coordinates of `elem`.
    pub fn to_reference(&self, elem: usize, x: Point) -> Point {
        let g = &self.geometry[elem];
        let dx = [x[0] - g.v0[0], x[1] - g.v0[1]];
        [
            (g.b[1][1] * dx[0] - g.b[0][1] * dx[1]) / g.det,
            (-g.b[1][0] * dx[0] + g.b[0][0] * dx[1]) / g.det,
        ]
    }

    /// Partition face ids into (interior, boundary).
    pub fn classify_faces(&self) -> (Vec<usize>, Vec<usize>) {
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        for (i, f) in self.faces.iter().enumerate() {
            match f.kind {
                FaceKind::Interior => interior.push(i),
                FaceKind::Boundary => boundary.push(i),
            }
        }
        (interior, boundary)
    }

    /// Interior face ids in index order.
    pub fn interior_faces(&self) -> impl Iterator<Item = usize> + '_ {
        self.faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.kind == FaceKind::Interior)
            .map(|(i, _)| i)
    }
}

fn triangle_geometry(v: [Point; 3]) -> ElemGeometry {
    let b = [
        [v[1][0] - v[0][0], v[2][0] - v[0][0]],
        [v[1][1] - v[0][1], v[2][1] - v[0][1]],
    ];
    let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    let b_inv_t = [
        [b[1][1] / det, -b[1][0] / det],
        [-b[0][1] / det, b[0][0] / det],
    ];
    let e = |a: Point, b: Point| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let diameter = e(v[0], v[1]).max(e(v[1], v[2])).max(e(v[2], v[0]));
    ElemGeometry {
        v0: v[0],
        b,
        b_inv_t,
        det,
        area: 0.5 * det.abs(),
        diameter,
    }
}

/// Build a structured triangulation of `domain` from `nx x ny` squares,
/// each split along the lower-left to upper-right diagonal.
pub fn build_uniform_mesh(nx: usize, ny: usize, domain: Rect) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::invalid(format!(
            "mesh subdivisions must be positive, got nx={nx}, ny={ny}"
        )));
    }
    if !(domain.width() > 0.0) || !(domain.height() > 0.0) {
        return Err(Error::invalid(format!(
            "degenerate domain rectangle [{}, {}] x [{}, {}]",
            domain.x0, domain.x1, domain.y0, domain.y1
        )));
    }

    let dx = domain.width() / nx as f64;
    let dy = domain.height() / ny as f64;
    let vid = |ix: usize, iy: usize| iy * (nx + 1) + ix;

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for iy in 0..=ny {
        for ix in 0..=nx {
            // Endpoints exact so boundary vertices land on the rectangle.
            let x = if ix == nx { domain.x1 } else { domain.x0 + ix as f64 * dx };
            let y = if iy == ny { domain.y1 } else { domain.y0 + iy as f64 * dy };
            vertices.push([x, y]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let bl = vid(ix, iy);
            let br = vid(ix + 1, iy);
            let tr = vid(ix + 1, iy + 1);
            let tl = vid(ix, iy + 1);
            triangles.push([bl, br, tr]); // lower triangle
            triangles.push([bl, tr, tl]); // upper triangle
        }
    }

    build_connectivity(vertices, triangles, domain)
}

/// Assemble face connectivity for a vertex/triangle soup. Faces are numbered
/// in first-encounter order scanning elements, which makes construction
/// deterministic.
fn build_connectivity(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, domain: Rect) -> Result<Mesh> {
    let geometry: Vec<ElemGeometry> = triangles
        .iter()
        .map(|t| triangle_geometry([vertices[t[0]], vertices[t[1]], vertices[t[2]]]))
        .collect();
    for (e, g) in geometry.iter().enumerate() {
        if g.det <= 0.0 {
            return Err(Error::invalid(format!(
                "triangle {e} has non-positive signed area"
            )));
        }
    }

    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut faces: Vec<Face> = Vec::new();
    let mut elem_faces = vec![[usize::MAX; 3]; triangles.len()];

    for (e, t) in triangles.iter().enumerate() {
        for (local, (a, b)) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])].into_iter().enumerate() {
            let key = (a.min(b), a.max(b));
            match edge_index.get(&key) {
                None => {
                    let id = faces.len();
                    edge_index.insert(key, id);
                    let pa = vertices[key.0];
                    let pb = vertices[key.1];
                    let h_e = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
                    faces.push(Face {
                        vertices: [key.0, key.1],
                        kind: FaceKind::Boundary,
                        left_elem: e,
                        right_elem: None,
                        normal: [0.0, 0.0],
                        h_e,
                    });
                    elem_faces[e][local] = id;
                }
                Some(&id) => {
                    let f = &mut faces[id];
                    if f.right_elem.is_some() {
                        return Err(Error::invalid(format!(
                            "edge {:?} shared by more than two triangles",
                            key
                        )));
                    }
                    f.kind = FaceKind::Interior;
                    // Keep the smaller element index on the left.
                    if e < f.left_elem {
                        f.right_elem = Some(f.left_elem);
                        f.left_elem = e;
                    } else {
                        f.right_elem = Some(e);
                    }
                    elem_faces[e][local] = id;
                }
            }
        }
    }

    // Normals: unit vector orthogonal to the face, oriented away from the
    // left element (outward on the boundary).
    for f in faces.iter_mut() {
        let pa = vertices[f.vertices[0]];
        let pb = vertices[f.vertices[1]];
        let tangent = [pb[0] - pa[0], pb[1] - pa[1]];
        let mut n = [tangent[1] / f.h_e, -tangent[0] / f.h_e];
        let g = &geometry[f.left_elem];
        let centroid = [
            g.v0[0] + (g.b[0][0] + g.b[0][1]) / 3.0,
            g.v0[1] + (g.b[1][0] + g.b[1][1]) / 3.0,
        ];
        let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        if n[0] * (mid[0] - centroid[0]) + n[1] * (mid[1] - centroid[1]) < 0.0 {
            n = [-n[0], -n[1]];
        }
        f.normal = n;
    }

    let h_max = geometry.iter().map(|g| g.diameter).fold(0.0, f64::max);

    Ok(Mesh {
        vertices,
        triangles,
        faces,
        elem_faces,
        h_max,
        domain,
        geometry,
    })
}
