//! From DG fields to interfaces: node-averaged continuous reconstruction,
//! piecewise-linear interpolation in time, marching-triangles extraction of
//! the zero-level set, and distances to reference interfaces (the analytic
//! shrinking circle of the mean curvature flow, or another curve).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::space::{DgFunction, DgSpace};

/// Continuous piecewise-P_r field given by values at the global Lagrange
/// nodes: mesh vertices, plus face midpoints for r = 2.
#[derive(Clone, Debug)]
pub struct NodalField {
    pub degree: usize,
    pub vertex_values: Vec<f64>,
    /// One value per mesh face (its midpoint); empty for r = 1.
    pub edge_values: Vec<f64>,
}

impl NodalField {
    pub fn lerp(a: &NodalField, b: &NodalField, theta: f64) -> NodalField {
        let mix = |x: &[f64], y: &[f64]| {
            x.iter()
                .zip(y)
                .map(|(u, v)| (1.0 - theta) * u + theta * v)
                .collect()
        };
        NodalField {
            degree: a.degree,
            vertex_values: mix(&a.vertex_values, &b.vertex_values),
            edge_values: mix(&a.edge_values, &b.edge_values),
        }
    }
}

/// Average the element-local degrees of freedom at every shared Lagrange
/// node, producing a continuous field. Continuous inputs are reproduced
/// exactly.
pub fn average_to_continuous(space: &DgSpace, v: &DgFunction) -> NodalField {
    let mesh = space.mesh();
    let mut vertex_sum = vec![0.0; mesh.n_vertices()];
    let mut vertex_count = vec![0u32; mesh.n_vertices()];
    for (e, tri) in mesh.triangles.iter().enumerate() {
        let c = v.local(e);
        for (i, &vid) in tri.iter().enumerate() {
            vertex_sum[vid] += c[i];
            vertex_count[vid] += 1;
        }
    }
    let vertex_values: Vec<f64> = vertex_sum
        .iter()
        .zip(&vertex_count)
        .map(|(s, n)| s / (*n).max(1) as f64)
        .collect();

    let edge_values = if space.degree() == 2 {
        let mut edge_sum = vec![0.0; mesh.n_faces()];
        let mut edge_count = vec![0u32; mesh.n_faces()];
        for e in 0..mesh.n_elems() {
            let c = v.local(e);
            for (k, &fid) in mesh.elem_faces[e].iter().enumerate() {
                edge_sum[fid] += c[3 + k];
                edge_count[fid] += 1;
            }
        }
        edge_sum
            .iter()
            .zip(&edge_count)
            .map(|(s, n)| s / (*n).max(1) as f64)
            .collect()
    } else {
        Vec::new()
    };

    NodalField {
        degree: space.degree(),
        vertex_values,
        edge_values,
    }
}

/// Represent a nodal field as a DG coefficient vector (it lies in V_h).
pub fn nodal_to_dg(space: &Arc<DgSpace>, field: &NodalField) -> DgFunction {
    let mesh = space.mesh();
    let nd = space.dofs_per_elem();
    let mut coeffs = vec![0.0; space.total_dofs()];
    for e in 0..mesh.n_elems() {
        let base = space.first_dof(e);
        for i in 0..3 {
            coeffs[base + i] = field.vertex_values[mesh.triangles[e][i]];
        }
        if nd == 6 {
            for (k, &fid) in mesh.elem_faces[e].iter().enumerate() {
                coeffs[base + 3 + k] = field.edge_values[fid];
            }
        }
    }
    DgFunction::from_coeffs(Arc::clone(space), coeffs).unwrap()
}

/// Piecewise-linear interpolation in time between two states:
/// coefficients ((t - t_m) u^{m+1} + (t_{m+1} - t) u^m) / k.
pub fn time_interpolant(
    u_m: &DgFunction,
    u_m1: &DgFunction,
    t_m: f64,
    t_m1: f64,
    t: f64,
) -> Result<DgFunction> {
    if !u_m.same_space(u_m1) {
        return Err(Error::invalid("snapshots live in different spaces".to_string()));
    }
    let k = t_m1 - t_m;
    if !(k > 0.0) {
        return Err(Error::invalid("snapshot times must be increasing".to_string()));
    }
    let slack = 1e-12 * k.max(1.0);
    if t < t_m - slack || t > t_m1 + slack {
        return Err(Error::invalid(format!(
            "time {t} outside the snapshot bracket [{t_m}, {t_m1}]"
        )));
    }
    let theta = ((t - t_m) / k).clamp(0.0, 1.0);
    let coeffs = u_m
        .coeffs
        .iter()
        .zip(&u_m1.coeffs)
        .map(|(a, b)| (1.0 - theta) * a + theta * b)
        .collect();
    DgFunction::from_coeffs(u_m.space_arc(), coeffs)
}

pub type Segment = [Point; 2];

/// Polyline representation of the numerical interface at one time.
#[derive(Clone, Debug, Default)]
pub struct InterfaceCurve {
    pub segments: Vec<Segment>,
    pub time: f64,
    /// Edges of cells whose field vanished identically; reported rather
    /// than silently dropped.
    pub degenerate: Vec<Segment>,
}

impl InterfaceCurve {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// Zero-level set of the continuous nodal field by marching triangles.
/// For r = 2 the extraction runs on the P1 sub-lattice (each triangle split
/// into four through its edge midpoints).
pub fn extract_zero_levelset(mesh: &Mesh, field: &NodalField, time: f64) -> InterfaceCurve {
    let max_abs = field
        .vertex_values
        .iter()
        .chain(field.edge_values.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    // Tie-breaking for exactly-zero vertices.
    let nudge = 1e-14 * max_abs;
    let adjust = |v: f64| if v == 0.0 { nudge } else { v };

    let mut segments = Vec::new();
    let mut degenerate = Vec::new();

    let mut march = |p: [Point; 3], raw: [f64; 3]| {
        if raw.iter().all(|v| v.abs() <= nudge) && max_abs > 0.0 {
            // Identically-zero cell: report its boundary.
            degenerate.push([p[0], p[1]]);
            degenerate.push([p[1], p[2]]);
            degenerate.push([p[2], p[0]]);
            return;
        }
        let v = [adjust(raw[0]), adjust(raw[1]), adjust(raw[2])];
        let mut crossings: Vec<Point> = Vec::with_capacity(2);
        for (i, j) in [(0usize, 1usize), (1, 2), (2, 0)] {
            if (v[i] > 0.0) != (v[j] > 0.0) {
                let t = v[i] / (v[i] - v[j]);
                crossings.push([
                    p[i][0] + t * (p[j][0] - p[i][0]),
                    p[i][1] + t * (p[j][1] - p[i][1]),
                ]);
            }
        }
        if crossings.len() == 2 {
            segments.push([crossings[0], crossings[1]]);
        }
    };

    for (e, tri) in mesh.triangles.iter().enumerate() {
        let pv = [
            mesh.vertices[tri[0]],
            mesh.vertices[tri[1]],
            mesh.vertices[tri[2]],
        ];
        let fv = [
            field.vertex_values[tri[0]],
            field.vertex_values[tri[1]],
            field.vertex_values[tri[2]],
        ];
        if field.degree == 1 {
            march(pv, fv);
        } else {
            let mid = |a: Point, b: Point| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let pm = [
                mid(pv[0], pv[1]),
                mid(pv[1], pv[2]),
                mid(pv[2], pv[0]),
            ];
            let fm = [
                field.edge_values[mesh.elem_faces[e][0]],
                field.edge_values[mesh.elem_faces[e][1]],
                field.edge_values[mesh.elem_faces[e][2]],
            ];
            march([pv[0], pm[0], pm[2]], [fv[0], fm[0], fm[2]]);
            march([pv[1], pm[1], pm[0]], [fv[1], fm[1], fm[0]]);
            march([pv[2], pm[2], pm[1]], [fv[2], fm[2], fm[1]]);
            march([pm[0], pm[1], pm[2]], [fm[0], fm[1], fm[2]]);
        }
    }

    InterfaceCurve {
        segments,
        time,
        degenerate,
    }
}

/// The circle shrinking under mean curvature flow: V_n = kappa gives
/// r(t) = sqrt(r0^2 - 2t), vanishing at t* = r0^2 / 2.
#[derive(Clone, Copy, Debug)]
pub struct CircleFlow {
    pub center: Point,
    pub r0: f64,
}

impl CircleFlow {
    pub fn new(center: Point, r0: f64) -> Result<Self> {
        if !(r0 > 0.0) {
            return Err(Error::invalid(format!("circle radius must be positive, got {r0}")));
        }
        Ok(CircleFlow { center, r0 })
    }

    pub fn extinction_time(&self) -> f64 {
        0.5 * self.r0 * self.r0
    }

    pub fn radius(&self, t: f64) -> Result<f64> {
        if t >= self.extinction_time() {
            return Err(Error::invalid(format!(
                "circle is extinct at t = {t} (t* = {})",
                self.extinction_time()
            )));
        }
        Ok((self.r0 * self.r0 - 2.0 * t).sqrt())
    }

    /// Signed distance to the circle at time 0 (positive inside), the
    /// profile argument of the tanh initial data.
    pub fn signed_distance(&self, x: Point) -> f64 {
        let d = ((x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2)).sqrt();
        self.r0 - d
    }
}

/// Reference set against which interface distances are measured.
pub enum Reference<'a> {
    Circle(&'a CircleFlow, f64),
    Curve(&'a InterfaceCurve),
}

fn point_segment_distance(p: Point, seg: &Segment) -> f64 {
    let d = [seg[1][0] - seg[0][0], seg[1][1] - seg[0][1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - seg[0][0]) * d[0] + (p[1] - seg[0][1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [seg[0][0] + t * d[0], seg[0][1] + t * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// sup over the curve's segment endpoints and midpoints of the distance to
/// the reference set (one-sided Hausdorff distance from curve to reference).
pub fn one_sided_hausdorff(curve: &InterfaceCurve, reference: &Reference) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::EmptyInterface);
    }
    let dist = |p: Point| -> Result<f64> {
        match reference {
            Reference::Circle(flow, t) => {
                let r = flow.radius(*t)?;
                let d = ((p[0] - flow.center[0]).powi(2) + (p[1] - flow.center[1]).powi(2)).sqrt();
                Ok((d - r).abs())
            }
            Reference::Curve(other) => {
                if other.is_empty() {
                    return Err(Error::EmptyInterface);
                }
                Ok(other
                    .segments
                    .iter()
                    .map(|s| point_segment_distance(p, s))
                    .fold(f64::INFINITY, f64::min))
            }
        }
    };
    let mut sup = 0.0f64;
    for seg in &curve.segments {
        let mid = [0.5 * (seg[0][0] + seg[1][0]), 0.5 * (seg[0][1] + seg[1][1])];
        for p in [seg[0], seg[1], mid] {
            sup = sup.max(dist(p)?);
        }
    }
    Ok(sup)
}
