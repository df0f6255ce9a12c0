//! Assembly of the discrete operators: broken mass matrix, the interior
//! penalty form
//!
//!   a_h(w, v) = (grad w, grad v) - <{dn w}, [v]> + lambda <[w], {dn v}> + j_h(w, v),
//!   j_h(w, v) = sum_e (sigma_e / h_e) <[w], [v]>,
//!
//! with all face sums over interior faces only (homogeneous Neumann data),
//! plus the nonlinear residual/Jacobian of the backward Euler step with
//! either treatment of the double-well term, the L2 and elliptic
//! projections, and the continuous initial datum.
//!
//! Element kernels are pure and evaluated in parallel; global insertion is
//! a serial scatter in element/face order, so assembly is deterministic.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{cg_jacobi, dense_solve, CsrMatrix, TripletBuilder};
use crate::mesh::Point;
use crate::quadrature::{face_quadrature, volume_quadrature, FaceQuadrature, QuadratureRule};
use crate::space::{eval_basis_ref, DgFunction, DgSpace, FaceSide};

/// Treatment of the nonlinear term f^{m+1} in the time-discrete scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// f^{m+1} = (u^{m+1})^3 - u^m: implicit convex part, explicit concave
    /// part; unconditionally energy stable.
    ConvexSplitting,
    /// f^{m+1} = (u^{m+1})^3 - u^{m+1}: energy stable for k < 2 eps^2.
    FullyImplicit,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::ConvexSplitting => "convex_splitting",
            Variant::FullyImplicit => "fully_implicit",
        }
    }
}

/// All scheme parameters of the fully discrete method.
#[derive(Clone, Debug)]
pub struct SchemeConfig {
    /// Interaction length eps.
    pub epsilon: f64,
    /// Time step k.
    pub dt: f64,
    /// Consistency-term switch, one of -1 (symmetric), 0, +1.
    pub lambda: i32,
    /// Uniform penalty sigma_e.
    pub sigma: f64,
    pub variant: Variant,
    /// Newton stop on the residual infinity norm.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Relative tolerance floor for the inner linear solves.
    pub linear_tol: f64,
    pub linear_max_iter: usize,
    pub t_final: f64,
}

pub fn default_sigma(degree: usize) -> f64 {
    // 2 r (r+1) times a safety factor of 4.
    (8 * degree * (degree + 1)) as f64
}

impl SchemeConfig {
    pub fn new(epsilon: f64, dt: f64) -> Self {
        SchemeConfig {
            epsilon,
            dt,
            lambda: -1,
            sigma: default_sigma(1),
            variant: Variant::ConvexSplitting,
            newton_tol: 1e-10,
            newton_max_iter: 30,
            linear_tol: 1e-8,
            linear_max_iter: 20_000,
            t_final: dt,
        }
    }

    pub fn validated(self) -> Result<Self> {
        let mut problems = Vec::new();
        if !(self.epsilon > 0.0) {
            problems.push(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.dt > 0.0) {
            problems.push(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.sigma > 0.0) {
            problems.push(format!("sigma must be positive, got {}", self.sigma));
        }
        if ![-1, 0, 1].contains(&self.lambda) {
            problems.push(format!(
                "lambda must be one of {{-1, 0, 1}}, got {}",
                self.lambda
            ));
        }
        if !(self.newton_tol > 0.0) || !(self.linear_tol > 0.0) {
            problems.push("solver tolerances must be positive".into());
        }
        if problems.is_empty() {
            Ok(self)
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// Quadrature degree that integrates the quartic Jacobian products
/// 3 u^2 phi phi exactly.
pub fn volume_rule_for(space: &DgSpace) -> QuadratureRule {
    volume_quadrature(4 * space.degree()).expect("supported degree")
}

pub fn face_rule_for(space: &DgSpace) -> FaceQuadrature {
    face_quadrature(2 * space.degree() + 1).expect("supported degree")
}

/// Broken mass matrix: block diagonal, M_ij = (phi_j, phi_i).
pub fn assemble_mass(space: &DgSpace) -> CsrMatrix {
    let nd = space.dofs_per_elem();
    let rule = volume_quadrature(2 * space.degree()).unwrap();
    let basis: Vec<_> = rule
        .points
        .iter()
        .map(|&p| eval_basis_ref(space.degree(), p))
        .collect();
    let mesh = space.mesh();
    let blocks: Vec<Vec<f64>> = (0..mesh.n_elems())
        .into_par_iter()
        .map(|e| {
            let det = mesh.geometry(e).det;
            let mut block = vec![0.0; nd * nd];
            for (q, b) in basis.iter().enumerate() {
                let w = rule.weights[q] * det;
                for i in 0..nd {
                    let wi = w * b.values[i];
                    for j in 0..nd {
                        block[i * nd + j] += wi * b.values[j];
                    }
                }
            }
            block
        })
        .collect();

    let mut t = TripletBuilder::with_capacity(
        space.total_dofs(),
        space.total_dofs(),
        mesh.n_elems() * nd * nd,
    );
    for (e, block) in blocks.iter().enumerate() {
        let base = space.first_dof(e);
        for i in 0..nd {
            for j in 0..nd {
                t.add(base + i, base + j, block[i * nd + j]);
            }
        }
    }
    t.build()
}

/// Basis traces on one side of a face at the face-rule points.
struct SideTrace {
    /// values[q][i]
    values: Vec<[f64; 6]>,
    /// normal derivative dn phi_i at point q
    dn: Vec<[f64; 6]>,
}

fn side_trace(
    space: &DgSpace,
    face: usize,
    side: FaceSide,
    elem: usize,
    normal: Point,
    rule: &FaceQuadrature,
) -> SideTrace {
    let nd = space.dofs_per_elem();
    let mut values = Vec::with_capacity(rule.points.len());
    let mut dn = Vec::with_capacity(rule.points.len());
    for &s in &rule.points {
        let xi = space.face_point_in_elem(face, side, s).unwrap();
        let b = space.basis_physical(elem, xi);
        let mut v = [0.0; 6];
        let mut d = [0.0; 6];
        for i in 0..nd {
            v[i] = b.values[i];
            d[i] = b.grads[i][0] * normal[0] + b.grads[i][1] * normal[1];
        }
        values.push(v);
        dn.push(d);
    }
    SideTrace { values, dn }
}

/// IP-DG matrix of a_h with a per-face penalty.
pub fn assemble_dg_laplacian_with(
    space: &DgSpace,
    lambda: f64,
    sigma_of_face: impl Fn(usize) -> f64 + Sync,
) -> CsrMatrix {
    let nd = space.dofs_per_elem();
    let mesh = space.mesh();
    let n = space.total_dofs();

    // Volume term: (grad phi_j, grad phi_i) per element.
    let rule = volume_quadrature(2 * space.degree()).unwrap();
    let vol_blocks: Vec<Vec<f64>> = (0..mesh.n_elems())
        .into_par_iter()
        .map(|e| {
            let det = mesh.geometry(e).det;
            let mut block = vec![0.0; nd * nd];
            for (q, &p) in rule.points.iter().enumerate() {
                let b = space.basis_physical(e, p);
                let w = rule.weights[q] * det;
                for i in 0..nd {
                    for j in 0..nd {
                        block[i * nd + j] +=
                            w * (b.grads[i][0] * b.grads[j][0] + b.grads[i][1] * b.grads[j][1]);
                    }
                }
            }
            block
        })
        .collect();

    // Face terms on interior faces. Each face contributes four nd x nd
    // couplings laid out [LL, LR, RL, RR].
    let frule = face_rule_for(space);
    let interior: Vec<usize> = space.mesh().interior_faces().collect();
    let face_blocks: Vec<Vec<f64>> = interior
        .par_iter()
        .map(|&fid| {
            let f = &mesh.faces[fid];
            let right = f.right_elem.unwrap();
            let lt = side_trace(space, fid, FaceSide::Left, f.left_elem, f.normal, &frule);
            let rt = side_trace(space, fid, FaceSide::Right, right, f.normal, &frule);
            let sigma_over_h = sigma_of_face(fid) / f.h_e;
            let mut block = vec![0.0; 4 * nd * nd];
            for (q, &wq) in frule.weights.iter().enumerate() {
                let w = wq * f.h_e;
                // jump(phi) = phi_L - phi_R, avg(dn phi) = (dn phi_L + dn phi_R)/2
                for i in 0..nd {
                    for j in 0..nd {
                        // trial w_h -> column j, test v_h -> row i
                        let mut add = |which: usize, v: f64| block[which * nd * nd + i * nd + j] += v;
                        let (jl_i, jr_i) = (lt.values[q][i], -rt.values[q][i]);
                        let (jl_j, jr_j) = (lt.values[q][j], -rt.values[q][j]);
                        let (al_i, ar_i) = (0.5 * lt.dn[q][i], 0.5 * rt.dn[q][i]);
                        let (al_j, ar_j) = (0.5 * lt.dn[q][j], 0.5 * rt.dn[q][j]);
                        // -<{dn w}, [v]>
                        add(0, -w * al_j * jl_i);
                        add(1, -w * ar_j * jl_i);
                        add(2, -w * al_j * jr_i);
                        add(3, -w * ar_j * jr_i);
                        // lambda <[w], {dn v}>
                        add(0, w * lambda * jl_j * al_i);
                        add(1, w * lambda * jr_j * al_i);
                        add(2, w * lambda * jl_j * ar_i);
                        add(3, w * lambda * jr_j * ar_i);
                        // penalty
                        add(0, w * sigma_over_h * jl_j * jl_i);
                        add(1, w * sigma_over_h * jr_j * jl_i);
                        add(2, w * sigma_over_h * jl_j * jr_i);
                        add(3, w * sigma_over_h * jr_j * jr_i);
                    }
                }
            }
            block
        })
        .collect();

    let cap = mesh.n_elems() * nd * nd + interior.len() * 4 * nd * nd;
    let mut t = TripletBuilder::with_capacity(n, n, cap);
    for (e, block) in vol_blocks.iter().enumerate() {
        let base = space.first_dof(e);
        for i in 0..nd {
            for j in 0..nd {
                t.add(base + i, base + j, block[i * nd + j]);
            }
        }
    }
    for (k, &fid) in interior.iter().enumerate() {
        let f = &mesh.faces[fid];
        let bl = space.first_dof(f.left_elem);
        let br = space.first_dof(f.right_elem.unwrap());
        let block = &face_blocks[k];
        for i in 0..nd {
            for j in 0..nd {
                t.add(bl + i, bl + j, block[i * nd + j]);
                t.add(bl + i, br + j, block[nd * nd + i * nd + j]);
                t.add(br + i, bl + j, block[2 * nd * nd + i * nd + j]);
                t.add(br + i, br + j, block[3 * nd * nd + i * nd + j]);
            }
        }
    }
    t.build()
}

pub fn assemble_dg_laplacian(space: &DgSpace, cfg: &SchemeConfig) -> CsrMatrix {
    assemble_dg_laplacian_with(space, cfg.lambda as f64, |_| cfg.sigma)
}

pub type SourceFn<'a> = &'a (dyn Fn(Point) -> f64 + Sync);

/// Residual of the backward Euler step at state `u_new`:
///
///   R_i = ((u_new - u_old)/k, phi_i) + a_h(u_new, phi_i)
///         + eps^{-2} (f^{m+1}, phi_i) - (g, phi_i).
pub fn assemble_nonlinear_residual(
    space: &DgSpace,
    cfg: &SchemeConfig,
    u_new: &DgFunction,
    u_old: &DgFunction,
    mass: &CsrMatrix,
    stiffness: &CsrMatrix,
    forcing: Option<SourceFn>,
) -> Result<Vec<f64>> {
    if !u_new.same_space(u_old) {
        return Err(Error::invalid(
            "u_new and u_old live in different spaces".to_string(),
        ));
    }
    let n = space.total_dofs();
    let nd = space.dofs_per_elem();
    let inv_eps2 = 1.0 / (cfg.epsilon * cfg.epsilon);

    // Linear-in-u parts via matrix products.
    let mut r = stiffness.mul_vec(&u_new.coeffs);
    let dt_u: Vec<f64> = u_new
        .coeffs
        .iter()
        .zip(&u_old.coeffs)
        .map(|(a, b)| (a - b) / cfg.dt)
        .collect();
    let m_dt = mass.mul_vec(&dt_u);
    for i in 0..n {
        r[i] += m_dt[i];
    }

    // Nonlinear term by quadrature, exact for the cubic.
    let rule = volume_rule_for(space);
    let basis: Vec<_> = rule
        .points
        .iter()
        .map(|&p| eval_basis_ref(space.degree(), p))
        .collect();
    let mesh = space.mesh();
    let variant = cfg.variant;
    let contrib: Vec<[f64; 6]> = (0..mesh.n_elems())
        .into_par_iter()
        .map(|e| {
            let det = mesh.geometry(e).det;
            let cn = u_new.local(e);
            let co = u_old.local(e);
            let mut acc = [0.0; 6];
            for (q, b) in basis.iter().enumerate() {
                let mut un = 0.0;
                let mut uo = 0.0;
                for i in 0..nd {
                    un += cn[i] * b.values[i];
                    uo += co[i] * b.values[i];
                }
                let f = match variant {
                    Variant::ConvexSplitting => un * un * un - uo,
                    Variant::FullyImplicit => un * un * un - un,
                };
                let w = rule.weights[q] * det * f;
                for i in 0..nd {
                    acc[i] += w * b.values[i];
                }
            }
            acc
        })
        .collect();
    for (e, acc) in contrib.iter().enumerate() {
        let base = space.first_dof(e);
        for i in 0..nd {
            r[base + i] += inv_eps2 * acc[i];
        }
    }

    if let Some(g) = forcing {
        let load = assemble_load(space, g);
        for i in 0..n {
            r[i] -= load[i];
        }
    }
    Ok(r)
}

/// Load vector (g, phi_i), integrated with the space's nonlinear rule.
pub fn assemble_load(space: &DgSpace, g: SourceFn) -> Vec<f64> {
    let nd = space.dofs_per_elem();
    let rule = volume_rule_for(space);
    let basis: Vec<_> = rule
        .points
        .iter()
        .map(|&p| eval_basis_ref(space.degree(), p))
        .collect();
    let mesh = space.mesh();
    let contrib: Vec<[f64; 6]> = (0..mesh.n_elems())
        .into_par_iter()
        .map(|e| {
            let det = mesh.geometry(e).det;
            let mut acc = [0.0; 6];
            for (q, b) in basis.iter().enumerate() {
                let x = mesh.to_physical(e, rule.points[q]);
                let w = rule.weights[q] * det * g(x);
                for i in 0..nd {
                    acc[i] += w * b.values[i];
                }
            }
            acc
        })
        .collect();
    let mut out = vec![0.0; space.total_dofs()];
    for (e, acc) in contrib.iter().enumerate() {
        let base = space.first_dof(e);
        for i in 0..nd {
            out[base + i] += acc[i];
        }
    }
    out
}

/// Reusable Newton-matrix assembler: J = M/k + A + eps^{-2} N(u), where
/// N has element-local blocks only, so J shares A's sparsity pattern.
pub struct JacobianAssembler {
    base: CsrMatrix,
    /// Per element, the nd x nd value slots of its diagonal block.
    slots: Vec<u32>,
    rule: QuadratureRule,
    basis: Vec<crate::space::BasisEval>,
}

impl JacobianAssembler {
    pub fn new(space: &DgSpace, cfg: &SchemeConfig, mass: &CsrMatrix, stiffness: &CsrMatrix) -> Self {
        let mut base = stiffness.clone();
        base.add_scaled_into_pattern(1.0 / cfg.dt, mass);
        let nd = space.dofs_per_elem();
        let mut slots = Vec::with_capacity(space.mesh().n_elems() * nd * nd);
        for e in 0..space.mesh().n_elems() {
            let first = space.first_dof(e);
            for i in 0..nd {
                let row = first + i;
                let (cols, _) = base.row(row);
                let start = base.row_offsets[row];
                for j in 0..nd {
                    let col = (first + j) as u32;
                    let k = cols.binary_search(&col).expect("block entry in pattern");
                    slots.push((start + k) as u32);
                }
            }
        }
        let rule = volume_rule_for(space);
        let basis = rule
            .points
            .iter()
            .map(|&p| eval_basis_ref(space.degree(), p))
            .collect();
        JacobianAssembler {
            base,
            slots,
            rule,
            basis,
        }
    }

    pub fn fresh_matrix(&self) -> CsrMatrix {
        self.base.clone()
    }

    /// Write J(u_new) into `out` (which must come from `fresh_matrix`).
    pub fn assemble_into(
        &self,
        space: &DgSpace,
        cfg: &SchemeConfig,
        u_new: &DgFunction,
        out: &mut CsrMatrix,
    ) {
        out.values.copy_from_slice(&self.base.values);
        let nd = space.dofs_per_elem();
        let inv_eps2 = 1.0 / (cfg.epsilon * cfg.epsilon);
        let mesh = space.mesh();
        let variant = cfg.variant;
        let rule = &self.rule;
        let basis = &self.basis;
        let blocks: Vec<[f64; 36]> = (0..mesh.n_elems())
            .into_par_iter()
            .map(|e| {
                let det = mesh.geometry(e).det;
                let cn = u_new.local(e);
                let mut block = [0.0; 36];
                for (q, b) in basis.iter().enumerate() {
                    let mut un = 0.0;
                    for i in 0..nd {
                        un += cn[i] * b.values[i];
                    }
                    let c = match variant {
                        Variant::ConvexSplitting => 3.0 * un * un,
                        Variant::FullyImplicit => 3.0 * un * un - 1.0,
                    };
                    let w = rule.weights[q] * det * c;
                    for i in 0..nd {
                        let wi = w * b.values[i];
                        for j in 0..nd {
                            block[i * nd + j] += wi * b.values[j];
                        }
                    }
                }
                block
            })
            .collect();
        for (e, block) in blocks.iter().enumerate() {
            let s = &self.slots[e * nd * nd..(e + 1) * nd * nd];
            for (slot, v) in s.iter().zip(block.iter().take(nd * nd)) {
                out.values[*slot as usize] += inv_eps2 * v;
            }
        }
    }
}

/// Newton matrix J = M/k + A + eps^{-2} N(u_new).
pub fn assemble_jacobian(
    space: &DgSpace,
    cfg: &SchemeConfig,
    u_new: &DgFunction,
    mass: &CsrMatrix,
    stiffness: &CsrMatrix,
) -> CsrMatrix {
    let asm = JacobianAssembler::new(space, cfg, mass, stiffness);
    let mut out = asm.fresh_matrix();
    asm.assemble_into(space, cfg, u_new, &mut out);
    out
}

/// L2 projection: element-local solves of M_K p = (g, phi)_K.
pub fn l2_project(space: &Arc<DgSpace>, g: impl Fn(Point) -> f64 + Sync) -> DgFunction {
    let nd = space.dofs_per_elem();
    let rule = volume_rule_for(space);
    let basis: Vec<_> = rule
        .points
        .iter()
        .map(|&p| eval_basis_ref(space.degree(), p))
        .collect();
    let mesh = space.mesh();
    let locals: Vec<Vec<f64>> = (0..mesh.n_elems())
        .into_par_iter()
        .map(|e| {
            let det = mesh.geometry(e).det;
            let mut m = vec![0.0; nd * nd];
            let mut b = vec![0.0; nd];
            for (q, be) in basis.iter().enumerate() {
                let w = rule.weights[q] * det;
                let x = mesh.to_physical(e, rule.points[q]);
                let gv = g(x);
                for i in 0..nd {
                    b[i] += w * gv * be.values[i];
                    for j in 0..nd {
                        m[i * nd + j] += w * be.values[i] * be.values[j];
                    }
                }
            }
            dense_solve(&m, &b).expect("element mass block is SPD")
        })
        .collect();
    let mut coeffs = vec![0.0; space.total_dofs()];
    for (e, local) in locals.iter().enumerate() {
        coeffs[space.first_dof(e)..space.first_dof(e) + nd].copy_from_slice(local);
    }
    DgFunction::from_coeffs(Arc::clone(space), coeffs).unwrap()
}

fn solve_projection_system(
    space: &DgSpace,
    cfg: &SchemeConfig,
    mass: &CsrMatrix,
    stiffness: &CsrMatrix,
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let mut sys = stiffness.clone();
    sys.add_scaled_into_pattern(1.0, mass);
    if cfg.lambda == -1 {
        let out = cg_jacobi(&sys, rhs, None, 1e-13, 100 * space.total_dofs().max(100))?;
        Ok(out.x)
    } else if space.total_dofs() <= 3000 {
        // Nonsymmetric projection systems only arise for lambda != -1;
        // fall back to a dense solve at small sizes.
        let n = sys.n_rows;
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            let (cols, vals) = sys.row(i);
            for (c, v) in cols.iter().zip(vals) {
                dense[i * n + *c as usize] = *v;
            }
        }
        dense_solve(&dense, rhs)
    } else {
        Err(Error::SolverFailure {
            message: "elliptic projection with lambda != -1 needs a dense solve; system too large"
                .into(),
            iterations: 0,
        })
    }
}

/// Elliptic projection of a discrete function: solves
/// (A + M) P = A v + M v, so P = v up to solver tolerance.
pub fn elliptic_project(
    space: &Arc<DgSpace>,
    cfg: &SchemeConfig,
    v: &DgFunction,
    mass: &CsrMatrix,
    stiffness: &CsrMatrix,
) -> Result<DgFunction> {
    let mut rhs = stiffness.mul_vec(&v.coeffs);
    let mv = mass.mul_vec(&v.coeffs);
    for i in 0..rhs.len() {
        rhs[i] += mv[i];
    }
    let x = solve_projection_system(space, cfg, mass, stiffness, &rhs)?;
    DgFunction::from_coeffs(Arc::clone(space), x)
}

/// Elliptic projection of a smooth field given by value and gradient
/// callables. Since [v] = 0 across faces, the right-hand side reduces to
/// the volume terms plus -<dn v, [phi_i]> on interior faces.
pub fn elliptic_project_fn(
    space: &Arc<DgSpace>,
    cfg: &SchemeConfig,
    v: impl Fn(Point) -> f64 + Sync,
    grad_v: impl Fn(Point) -> [f64; 2] + Sync,
    mass: &CsrMatrix,
    stiffness: &CsrMatrix,
) -> Result<DgFunction> {
    let nd = space.dofs_per_elem();
    let mesh = space.mesh();
    // Volume: (grad v, grad phi) + (v, phi); one degree above the space's
    // rule since v is not polynomial in general.
    let rule = volume_quadrature(crate::quadrature::MAX_VOLUME_DEGREE).unwrap();
    let vol: Vec<[f64; 6]> = (0..mesh.n_elems())
        .into_par_iter()
        .map(|e| {
            let det = mesh.geometry(e).det;
            let mut acc = [0.0; 6];
            for (q, &p) in rule.points.iter().enumerate() {
                let b = space.basis_physical(e, p);
                let x = mesh.to_physical(e, p);
                let w = rule.weights[q] * det;
                let gv = grad_v(x);
                let vv = v(x);
                for i in 0..nd {
                    acc[i] += w * (gv[0] * b.grads[i][0] + gv[1] * b.grads[i][1] + vv * b.values[i]);
                }
            }
            acc
        })
        .collect();
    let mut rhs = vec![0.0; space.total_dofs()];
    for (e, acc) in vol.iter().enumerate() {
        let base = space.first_dof(e);
        for i in 0..nd {
            rhs[base + i] += acc[i];
        }
    }

    // Interior faces: -<dn v, [phi_i]>.
    let frule = face_quadrature(crate::quadrature::MAX_FACE_DEGREE).unwrap();
    let interior: Vec<usize> = mesh.interior_faces().collect();
    let face_contrib: Vec<([f64; 6], [f64; 6])> = interior
        .par_iter()
        .map(|&fid| {
            let f = &mesh.faces[fid];
            let right = f.right_elem.unwrap();
            let mut left_acc = [0.0; 6];
            let mut right_acc = [0.0; 6];
            for (q, &s) in frule.points.iter().enumerate() {
                let w = frule.weights[q] * f.h_e;
                let xi_l = space.face_point_in_elem(fid, FaceSide::Left, s).unwrap();
                let x = mesh.to_physical(f.left_elem, xi_l);
                let g = grad_v(x);
                let dn = g[0] * f.normal[0] + g[1] * f.normal[1];
                let bl = space.basis_physical(f.left_elem, xi_l);
                let xi_r = space.face_point_in_elem(fid, FaceSide::Right, s).unwrap();
                let br = space.basis_physical(right, xi_r);
                for i in 0..nd {
                    // [phi_i] = phi_i^L on the left block, -phi_i^R on the right.
                    left_acc[i] -= w * dn * bl.values[i];
                    right_acc[i] += w * dn * br.values[i];
                }
            }
            (left_acc, right_acc)
        })
        .collect();
    for (k, &fid) in interior.iter().enumerate() {
        let f = &mesh.faces[fid];
        let (la, ra) = &face_contrib[k];
        let bl = space.first_dof(f.left_elem);
        let br = space.first_dof(f.right_elem.unwrap());
        for i in 0..nd {
            rhs[bl + i] += la[i];
            rhs[br + i] += ra[i];
        }
    }

    let x = solve_projection_system(space, cfg, mass, stiffness, &rhs)?;
    DgFunction::from_coeffs(Arc::clone(space), x)
}

/// Nodal interpolation of `u0` into the continuous subspace S_h = V_h + C0,
/// represented as a DG coefficient vector. Shared Lagrange nodes are
/// evaluated once, so interface jumps vanish identically.
pub fn initial_datum(space: &Arc<DgSpace>, u0: impl Fn(Point) -> f64) -> DgFunction {
    let mesh = space.mesh();
    let vertex_vals: Vec<f64> = mesh.vertices.iter().map(|&v| u0(v)).collect();
    let edge_vals: Vec<f64> = if space.degree() == 2 {
        mesh.faces
            .iter()
            .map(|f| {
                let a = mesh.vertices[f.vertices[0]];
                let b = mesh.vertices[f.vertices[1]];
                u0([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])])
            })
            .collect()
    } else {
        Vec::new()
    };

    let nd = space.dofs_per_elem();
    let mut coeffs = vec![0.0; space.total_dofs()];
    for e in 0..mesh.n_elems() {
        let tri = mesh.triangles[e];
        let base = space.first_dof(e);
        for i in 0..3 {
            coeffs[base + i] = vertex_vals[tri[i]];
        }
        if nd == 6 {
            for (k, fid) in mesh.elem_faces[e].iter().enumerate() {
                coeffs[base + 3 + k] = edge_vals[*fid];
            }
        }
    }
    DgFunction::from_coeffs(Arc::clone(space), coeffs).unwrap()
}
