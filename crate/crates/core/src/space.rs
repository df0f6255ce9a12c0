//! Broken polynomial spaces P_r (r = 1, 2) on a triangle mesh.
//!
//! Degrees of freedom are element-local Lagrange values on the principal
//! lattice (vertices for P1, vertices plus edge midpoints for P2), stored
//! in contiguous per-element blocks: dof(elem, i) = elem * dofs_per_elem + i.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{FaceKind, Mesh, Point};

/// Basis values and physical-space gradients at a single point.
/// Arrays are sized for the largest supported degree (P2, 6 functions).
#[derive(Clone, Copy, Debug)]
pub struct BasisEval {
    pub n: usize,
    pub values: [f64; 6],
    pub grads: [[f64; 2]; 6],
}

/// Reference-space basis values and gradients (element independent).
pub fn eval_basis_ref(degree: usize, xi: Point) -> BasisEval {
    let (l0, l1, l2) = (1.0 - xi[0] - xi[1], xi[0], xi[1]);
    // Reference gradients of the barycentric coordinates.
    const G: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    let mut out = BasisEval {
        n: 0,
        values: [0.0; 6],
        grads: [[0.0; 2]; 6],
    };
    match degree {
        1 => {
            out.n = 3;
            out.values[..3].copy_from_slice(&[l0, l1, l2]);
            out.grads[..3].copy_from_slice(&G);
        }
        2 => {
            out.n = 6;
            let l = [l0, l1, l2];
            for i in 0..3 {
                out.values[i] = l[i] * (2.0 * l[i] - 1.0);
                out.grads[i] = [G[i][0] * (4.0 * l[i] - 1.0), G[i][1] * (4.0 * l[i] - 1.0)];
            }
            // Edge bubbles on (0,1), (1,2), (2,0).
            for (k, (i, j)) in [(0usize, 1usize), (1, 2), (2, 0)].into_iter().enumerate() {
                out.values[3 + k] = 4.0 * l[i] * l[j];
                out.grads[3 + k] = [
                    4.0 * (G[i][0] * l[j] + G[j][0] * l[i]),
                    4.0 * (G[i][1] * l[j] + G[j][1] * l[i]),
                ];
            }
        }
        _ => panic!("unsupported polynomial degree {degree} (only r = 1, 2)"),
    }
    out
}

/// Per-face trace bookkeeping: reference coordinates of the face endpoints
/// in the adjacent element(s), following the face's canonical vertex order.
#[derive(Clone, Copy, Debug)]
struct FaceTrace {
    left_ref: [Point; 2],
    right_ref: Option<[Point; 2]>,
}

#[derive(Debug)]
pub struct DgSpace {
    mesh: Arc<Mesh>,
    degree: usize,
    dofs_per_elem: usize,
    face_traces: Vec<FaceTrace>,
}

impl DgSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        if !(1..=2).contains(&degree) {
            return Err(Error::invalid(format!(
                "polynomial degree must be 1 or 2, got {degree}"
            )));
        }
        let face_traces = mesh
            .faces
            .iter()
            .map(|f| {
                let pa = mesh.vertices[f.vertices[0]];
                let pb = mesh.vertices[f.vertices[1]];
                let left_ref = [
                    mesh.to_reference(f.left_elem, pa),
                    mesh.to_reference(f.left_elem, pb),
                ];
                let right_ref = f
                    .right_elem
                    .map(|r| [mesh.to_reference(r, pa), mesh.to_reference(r, pb)]);
                FaceTrace { left_ref, right_ref }
            })
            .collect();
        let dofs_per_elem = (degree + 1) * (degree + 2) / 2;
        Ok(DgSpace {
            mesh,
            degree,
            dofs_per_elem,
            face_traces,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<Mesh> {
        Arc::clone(&self.mesh)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dofs_per_elem(&self) -> usize {
        self.dofs_per_elem
    }

    pub fn total_dofs(&self) -> usize {
        self.mesh.n_elems() * self.dofs_per_elem
    }

    pub fn first_dof(&self, elem: usize) -> usize {
        elem * self.dofs_per_elem
    }

    /// Local Lagrange nodes in reference coordinates.
    pub fn reference_nodes(&self) -> Vec<Point> {
        match self.degree {
            1 => vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            _ => vec![
                [0.0, 0.0],
                [1.0, 0.0],
                [0.0, 1.0],
                [0.5, 0.0],
                [0.5, 0.5],
                [0.0, 0.5],
            ],
        }
    }

    /// Shape function values and physical gradients at a point inside `elem`
    /// given in reference coordinates.
    pub fn eval_basis(&self, elem: usize, xi: Point) -> Result<BasisEval> {
        const SLACK: f64 = 1e-12;
        if xi[0] < -SLACK || xi[1] < -SLACK || xi[0] + xi[1] > 1.0 + SLACK {
            return Err(Error::invalid(format!(
                "reference point ({}, {}) lies outside the reference triangle",
                xi[0], xi[1]
            )));
        }
        Ok(self.basis_physical(elem, xi))
    }

    /// Same as `eval_basis` but without the bounds check (hot path).
    pub fn basis_physical(&self, elem: usize, xi: Point) -> BasisEval {
        let mut b = eval_basis_ref(self.degree, xi);
        let jt = self.mesh.geometry(elem).b_inv_t;
        for g in b.grads[..b.n].iter_mut() {
            let gr = *g;
            *g = [
                jt[0][0] * gr[0] + jt[0][1] * gr[1],
                jt[1][0] * gr[0] + jt[1][1] * gr[1],
            ];
        }
        b
    }

    /// Reference coordinates, in the given element, of the point at face
    /// parameter `s` in [0, 1] along the face's canonical direction.
    pub fn face_point_in_elem(&self, face: usize, side: FaceSide, s: f64) -> Option<Point> {
        let tr = &self.face_traces[face];
        let ends = match side {
            FaceSide::Left => tr.left_ref,
            FaceSide::Right => tr.right_ref?,
        };
        Some([
            ends[0][0] + s * (ends[1][0] - ends[0][0]),
            ends[0][1] + s * (ends[1][1] - ends[0][1]),
        ])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceSide {
    Left,
    Right,
}

/// A function in the broken space: one coefficient per local Lagrange node.
#[derive(Clone, Debug)]
pub struct DgFunction {
    space: Arc<DgSpace>,
    pub coeffs: Vec<f64>,
}

/// Traces of a DG function on one face at a given parameter point.
/// On boundary faces the right trace mirrors the left one, matching the
/// convention [v] = v and {v} = v there.
#[derive(Clone, Copy, Debug)]
pub struct TracePair {
    pub left_value: f64,
    pub right_value: f64,
    pub left_grad: [f64; 2],
    pub right_grad: [f64; 2],
    pub is_boundary: bool,
}

impl TracePair {
    pub fn jump(&self) -> f64 {
        if self.is_boundary {
            self.left_value
        } else {
            self.left_value - self.right_value
        }
    }

    pub fn average(&self) -> f64 {
        if self.is_boundary {
            self.left_value
        } else {
            0.5 * (self.left_value + self.right_value)
        }
    }

    /// Average of the normal derivative with respect to `normal`.
    pub fn average_normal_deriv(&self, normal: Point) -> f64 {
        let dl = self.left_grad[0] * normal[0] + self.left_grad[1] * normal[1];
        if self.is_boundary {
            dl
        } else {
            let dr = self.right_grad[0] * normal[0] + self.right_grad[1] * normal[1];
            0.5 * (dl + dr)
        }
    }
}

impl DgFunction {
    pub fn zeros(space: Arc<DgSpace>) -> Self {
        let n = space.total_dofs();
        DgFunction {
            space,
            coeffs: vec![0.0; n],
        }
    }

    pub fn constant(space: Arc<DgSpace>, value: f64) -> Self {
        let n = space.total_dofs();
        DgFunction {
            space,
            coeffs: vec![value; n],
        }
    }

    pub fn from_coeffs(space: Arc<DgSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.total_dofs() {
            return Err(Error::invalid(format!(
                "coefficient length {} does not match total dofs {}",
                coeffs.len(),
                space.total_dofs()
            )));
        }
        Ok(DgFunction { space, coeffs })
    }

    pub fn space(&self) -> &DgSpace {
        &self.space
    }

    pub fn space_arc(&self) -> Arc<DgSpace> {
        Arc::clone(&self.space)
    }

    pub fn same_space(&self, other: &DgFunction) -> bool {
        Arc::ptr_eq(&self.space, &other.space)
    }

    pub fn local(&self, elem: usize) -> &[f64] {
        let n = self.space.dofs_per_elem();
        &self.coeffs[elem * n..(elem + 1) * n]
    }

    /// Value at a reference point of `elem`.
    pub fn eval_ref(&self, elem: usize, xi: Point) -> f64 {
        let b = eval_basis_ref(self.space.degree(), xi);
        let c = self.local(elem);
        (0..b.n).map(|i| c[i] * b.values[i]).sum()
    }

    /// Value and physical gradient at a reference point of `elem`.
    pub fn eval_with_grad(&self, elem: usize, xi: Point) -> (f64, [f64; 2]) {
        let b = self.space.basis_physical(elem, xi);
        let c = self.local(elem);
        let mut v = 0.0;
        let mut g = [0.0, 0.0];
        for i in 0..b.n {
            v += c[i] * b.values[i];
            g[0] += c[i] * b.grads[i][0];
            g[1] += c[i] * b.grads[i][1];
        }
        (v, g)
    }

    /// Left/right traces at parameter `s` in [0, 1] along face `face`.
    pub fn trace_pair(&self, face: usize, s: f64) -> Result<TracePair> {
        let mesh = self.space.mesh();
        let f = mesh
            .faces
            .get(face)
            .ok_or_else(|| Error::invalid(format!("face id {face} out of range")))?;
        let xi_l = self.space.face_point_in_elem(face, FaceSide::Left, s).unwrap();
        let (lv, lg) = self.eval_with_grad(f.left_elem, xi_l);
        match f.kind {
            FaceKind::Boundary => Ok(TracePair {
                left_value: lv,
                right_value: lv,
                left_grad: lg,
                right_grad: lg,
                is_boundary: true,
            }),
            FaceKind::Interior => {
                let xi_r = self.space.face_point_in_elem(face, FaceSide::Right, s).unwrap();
                let (rv, rg) = self.eval_with_grad(f.right_elem.unwrap(), xi_r);
                Ok(TracePair {
                    left_value: lv,
                    right_value: rv,
                    left_grad: lg,
                    right_grad: rg,
                    is_boundary: false,
                })
            }
        }
    }

    /// Nodal interpolation of a callable, element by element (no averaging:
    /// the result is discontinuous if `g` is).
    pub fn interpolate(space: Arc<DgSpace>, g: impl Fn(Point) -> f64) -> Self {
        let nodes = space.reference_nodes();
        let mut coeffs = vec![0.0; space.total_dofs()];
        for e in 0..space.mesh().n_elems() {
            for (i, &xi) in nodes.iter().enumerate() {
                let x = space.mesh().to_physical(e, xi);
                coeffs[space.first_dof(e) + i] = g(x);
            }
        }
        DgFunction { space, coeffs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_uniform_mesh, Rect};

    fn space(nx: usize, degree: usize) -> Arc<DgSpace> {
        let mesh = Arc::new(build_uniform_mesh(nx, nx, Rect::unit_centered()).unwrap());
        Arc::new(DgSpace::new(mesh, degree).unwrap())
    }

    #[test]
    fn p1_lagrange_property() {
        let b = eval_basis_ref(1, [0.0, 0.0]);
        assert_eq!(b.values[..3], [1.0, 0.0, 0.0]);
        let b = eval_basis_ref(1, [1.0, 0.0]);
        assert_eq!(b.values[..3], [0.0, 1.0, 0.0]);
        let b = eval_basis_ref(1, [0.0, 1.0]);
        assert_eq!(b.values[..3], [0.0, 0.0, 1.0]);
    }

    #[test]
    fn p1_gradients_unit_right_triangle() {
        // Barycentric gradients on the unit right triangle
        // {(0,0),(1,0),(0,1)} (the reference element).
        let b = eval_basis_ref(1, [0.25, 0.25]);
        assert_eq!(b.grads[0], [-1.0, -1.0]);
        assert_eq!(b.grads[1], [1.0, 0.0]);
        assert_eq!(b.grads[2], [0.0, 1.0]);

        // Physical gradients on the upper triangle {(0,0),(1,1),(0,1)} of
        // the 1x1 unit-square mesh: the shape functions are 1-y, x, y-x.
        let mesh = Arc::new(build_uniform_mesh(1, 1, Rect::new(0.0, 0.0, 1.0, 1.0)).unwrap());
        let sp = DgSpace::new(mesh, 1).unwrap();
        let b = sp.eval_basis(1, [0.25, 0.25]).unwrap();
        assert_eq!(b.grads[0], [0.0, -1.0]);
        assert_eq!(b.grads[1], [1.0, 0.0]);
        assert_eq!(b.grads[2], [-1.0, 1.0]);
    }

    #[test]
    fn partition_of_unity() {
        for degree in [1, 2] {
            for xi in [[0.3, 0.2], [0.0, 0.5], [1.0 / 3.0, 1.0 / 3.0]] {
                let b = eval_basis_ref(degree, xi);
                let s: f64 = b.values[..b.n].iter().sum();
                assert!((s - 1.0).abs() < 1e-14);
                let gx: f64 = b.grads[..b.n].iter().map(|g| g[0]).sum();
                let gy: f64 = b.grads[..b.n].iter().map(|g| g[1]).sum();
                assert!(gx.abs() < 1e-14 && gy.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn out_of_element_point_rejected() {
        let sp = space(1, 1);
        assert!(sp.eval_basis(0, [0.7, 0.7]).is_err());
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        // P1 reproduces affine functions, P2 quadratics, at random points.
        let check = |degree: usize, f: &dyn Fn(Point) -> f64| {
            let sp = space(3, degree);
            let u = DgFunction::interpolate(Arc::clone(&sp), f);
            let mut state = 88172645463325252u64;
            let mut rnd = move || {
                // xorshift64
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            for _ in 0..50 {
                let e = (rnd() * sp.mesh().n_elems() as f64) as usize;
                let mut a = rnd();
                let mut b = rnd();
                if a + b > 1.0 {
                    a = 1.0 - a;
                    b = 1.0 - b;
                }
                let x = sp.mesh().to_physical(e, [a, b]);
                let v = u.eval_ref(e, [a, b]);
                assert!((v - f(x)).abs() < 1e-12, "degree {degree}: {v} vs {}", f(x));
            }
        };
        check(1, &|x| 2.0 - 3.0 * x[0] + 0.5 * x[1]);
        check(2, &|x| 1.0 + x[0] * x[1] - 2.0 * x[1] * x[1] + x[0]);
    }

    #[test]
    fn continuous_interpolant_has_no_jumps() {
        for degree in [1, 2] {
            let sp = space(4, degree);
            let u = DgFunction::interpolate(Arc::clone(&sp), |x| {
                0.3 + 1.7 * x[0] - 0.4 * x[1] + if degree == 2 { x[0] * x[1] } else { 0.0 }
            });
            for f in sp.mesh().interior_faces() {
                for s in [0.0, 0.37, 1.0] {
                    let t = u.trace_pair(f, s).unwrap();
                    assert!(t.jump().abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn indicator_jump_and_average() {
        // One square, two triangles; 1 on the left (lower) element, 0 on the
        // right. The single interior face has jump 1 and average 1/2.
        let sp = space(1, 1);
        let mut u = DgFunction::zeros(Arc::clone(&sp));
        for i in 0..3 {
            u.coeffs[i] = 1.0;
        }
        let f = sp.mesh().interior_faces().next().unwrap();
        for s in [0.1, 0.5, 0.9] {
            let t = u.trace_pair(f, s).unwrap();
            assert!((t.jump() - 1.0).abs() < 1e-14);
            assert!((t.average() - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn boundary_trace_convention() {
        let sp = space(1, 1);
        let u = DgFunction::constant(Arc::clone(&sp), 2.5);
        let (_, bnd) = sp.mesh().classify_faces();
        let t = u.trace_pair(bnd[0], 0.5).unwrap();
        assert!(t.is_boundary);
        assert_eq!(t.jump(), 2.5);
        assert_eq!(t.average(), 2.5);
    }

    #[test]
    fn traces_meet_at_same_physical_point() {
        let sp = space(3, 2);
        let u = DgFunction::interpolate(Arc::clone(&sp), |x| x[0] * x[0] + 2.0 * x[1]);
        for f in sp.mesh().interior_faces() {
            let t = u.trace_pair(f, 0.25).unwrap();
            assert!(t.jump().abs() < 1e-12);
            assert!((t.left_grad[0] - t.right_grad[0]).abs() < 1e-11);
        }
    }

    #[test]
    fn invalid_face_id() {
        let sp = space(1, 1);
        let u = DgFunction::zeros(Arc::clone(&sp));
        assert!(u.trace_pair(999, 0.5).is_err());
    }
}
