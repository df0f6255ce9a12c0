//! Experiment drivers: plain runs, the manufactured-solution convergence
//! study, energy-decay verification, the stability sweep across the time
//! step, the eigenvalue sweep across eps, and the interface-convergence
//! study against the shrinking circle.
//!
//! Every driver writes its tables as CSV into the configured output
//! directory together with a `config.echo` that reproduces the run.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use acdg_core::assembly::{
    assemble_dg_laplacian, assemble_mass, default_sigma, elliptic_project_fn, initial_datum,
    SchemeConfig, Variant,
};
use acdg_core::diagnostics::{broken_norms, coercivity_probe, principal_eigenvalue_with};
use acdg_core::error::{Error, Result};
use acdg_core::interface::{
    average_to_continuous, extract_zero_levelset, one_sided_hausdorff, time_interpolant,
    CircleFlow, InterfaceCurve, Reference,
};
use acdg_core::io::{write_curve_csv, write_curve_vtk, write_field_vtk, write_mesh_vtk};
use acdg_core::mesh::{build_uniform_mesh, Mesh, Rect};
use acdg_core::space::{DgFunction, DgSpace};
use acdg_core::stepper::{evolve, outside_stability_region, EvolveOutcome};

use crate::config::{InitialCondition, RunConfig};
use crate::initial::{initial_condition, mms_exact, mms_forcing, mms_gradient};

pub struct Workspace {
    pub space: Arc<DgSpace>,
    pub scheme: SchemeConfig,
}

fn build_space(nx: usize, ny: usize, domain: Rect, degree: usize) -> Result<Arc<DgSpace>> {
    let mesh = Arc::new(build_uniform_mesh(nx, ny, domain)?);
    Ok(Arc::new(DgSpace::new(mesh, degree)?))
}

/// Subdivisions that put the element diameter at or below `h_target`.
fn subdivisions_for(domain: &Rect, h_target: f64) -> (usize, usize) {
    let side = h_target / 2f64.sqrt();
    let nx = (domain.width() / side).ceil() as usize;
    let ny = (domain.height() / side).ceil() as usize;
    (nx.max(1), ny.max(1))
}

/// Adjust the step so an integer number of steps lands exactly on t_final.
fn commensurate_steps(t_final: f64, k_nominal: f64) -> (usize, f64) {
    if t_final <= 0.0 {
        return (0, k_nominal);
    }
    let m = (t_final / k_nominal - 1e-9).ceil().max(1.0) as usize;
    (m, t_final / m as f64)
}

fn ensure_out(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    std::fs::write(cfg.out_dir.join("config.echo"), cfg.echo())?;
    Ok(())
}

fn coercivity_gate(space: &Arc<DgSpace>, scheme: &SchemeConfig, seed: u64) -> Result<f64> {
    let a = assemble_dg_laplacian(space, scheme);
    coercivity_probe(space, scheme, &a, 32, seed)
}

fn initial_state(space: &Arc<DgSpace>, cfg: &RunConfig) -> Result<DgFunction> {
    let u0 = initial_condition(&cfg.ic, cfg.epsilon)?;
    Ok(initial_datum(space, |x| u0(x)))
}

fn write_energy_csv(path: &Path, dt: f64, out: &EvolveOutcome) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,phi,potential,J,Rm")?;
    for (m, e) in out.energies.iter().enumerate() {
        // Rm on row m is the residual of the step that produced state m.
        let rm = if m == 0 { 0.0 } else { out.law_residuals[m - 1] };
        writeln!(
            w,
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            m as f64 * dt,
            e.phi,
            e.potential_part,
            e.total_j,
            rm
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// plain run
// ---------------------------------------------------------------------------

pub fn plain_run(cfg: &RunConfig) -> Result<()> {
    ensure_out(cfg)?;
    let space = build_space(cfg.nx, cfg.ny, cfg.domain, cfg.degree)?;
    let scheme = cfg.scheme().validated()?;
    coercivity_gate(&space, &scheme, cfg.seed)?;
    if outside_stability_region(&scheme) {
        eprintln!(
            "warning: fully implicit with k = {} >= 2 eps^2 = {}; outside the guaranteed stability region",
            scheme.dt,
            2.0 * scheme.epsilon * scheme.epsilon
        );
    }
    let u0 = initial_state(&space, cfg)?;

    let forcing = matches!(cfg.ic, InitialCondition::Mms).then(|| mms_forcing(cfg.epsilon));
    let forcing_ref: Option<&(dyn Fn(f64, [f64; 2]) -> f64 + Sync)> =
        forcing.as_ref().map(|f| f as _);
    let out = evolve(&space, &scheme, &u0, &cfg.snapshot_times, forcing_ref)?;

    write_energy_csv(&cfg.out_dir.join("energy.csv"), scheme.dt, &out)?;
    let fields = cfg.out_dir.join("fields");
    std::fs::create_dir_all(&fields)?;
    write_mesh_vtk(space.mesh(), &fields.join("mesh.vtk"))?;
    for snap in &out.snapshots {
        write_field_vtk(
            &space,
            &snap.state,
            "u",
            &fields.join(format!("u_t{}.vtk", snap.requested_t)),
        )?;
    }
    println!(
        "run: {} steps, final J = {:.6e}",
        out.reports.len(),
        out.energies.last().map(|e| e.total_j).unwrap_or(f64::NAN)
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// manufactured-solution convergence
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub h: f64,
    pub e_l2: f64,
    pub order_l2: Option<f64>,
    pub e_h1: f64,
    pub order_h1: Option<f64>,
}

/// h-halving ladder with k proportional to h^2: spatial errors against the
/// manufactured solution in the L-infinity(L2) and L2(broken H1) norms.
pub fn mms_run(cfg: &RunConfig) -> Result<Vec<ConvergenceRow>> {
    ensure_out(cfg)?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let forcing = mms_forcing(cfg.epsilon);

    for level in 0..cfg.levels {
        let nx = cfg.nx << level;
        let ny = cfg.ny << level;
        let space = build_space(nx, ny, cfg.domain, cfg.degree)?;
        let h = space.mesh().h_max;
        let (m_steps, k) = commensurate_steps(cfg.t_final, 0.5 * h * h);
        let mut scheme = cfg.scheme().validated()?;
        scheme.dt = k;
        scheme.t_final = cfg.t_final;
        if level == 0 {
            coercivity_gate(&space, &scheme, cfg.seed)?;
        }

        let u0 = initial_datum(&space, |x| mms_exact(0.0, x));
        let every_step: Vec<f64> = (0..=m_steps).map(|m| m as f64 * k).collect();
        let out = evolve(&space, &scheme, &u0, &every_step, Some(&forcing))?;

        // L-infinity(L2) over all steps; trapezoidal k-weighted sum for the
        // L2(0,T; broken H1) error.
        let mut max_l2 = 0.0f64;
        let mut h1_sq_sum = 0.0f64;
        for snap in &out.snapshots {
            let t = snap.t;
            let exact = move |x: [f64; 2]| mms_exact(t, x);
            let grad = move |x: [f64; 2]| mms_gradient(t, x);
            let n = broken_norms(&space, &scheme, &snap.state, Some((&exact, &grad)));
            max_l2 = max_l2.max(n.l2);
            let endpoint = snap.t == 0.0 || (snap.t - cfg.t_final).abs() < 1e-12;
            let weight = if endpoint { 0.5 } else { 1.0 };
            h1_sq_sum += weight * k * n.h1_broken * n.h1_broken;
        }
        let e_h1 = h1_sq_sum.sqrt();
        let (order_l2, order_h1) = match rows.last() {
            None => (None, None),
            Some(prev) => (
                Some((prev.e_l2 / max_l2).log2()),
                Some((prev.e_h1 / e_h1).log2()),
            ),
        };
        println!(
            "mms level {level}: nx={nx} h={h:.5} k={k:.6} L2={max_l2:.5e} (order {}) H1={e_h1:.5e} (order {})",
            order_l2.map(|o| format!("{o:.4}")).unwrap_or_default(),
            order_h1.map(|o| format!("{o:.4}")).unwrap_or_default(),
        );
        rows.push(ConvergenceRow {
            h,
            e_l2: max_l2,
            order_l2,
            e_h1,
            order_h1,
        });
    }

    let mut w = BufWriter::new(File::create(cfg.out_dir.join("convergence.csv"))?);
    writeln!(w, "h,e_L2,order_L2,e_H1,order_H1")?;
    for r in &rows {
        writeln!(
            w,
            "{:.12e},{:.12e},{},{:.12e},{}",
            r.h,
            r.e_l2,
            r.order_l2.map(|o| format!("{o:.6}")).unwrap_or_default(),
            r.e_h1,
            r.order_h1.map(|o| format!("{o:.6}")).unwrap_or_default(),
        )?;
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// energy decay
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct EnergyOutcome {
    /// Largest step-to-step energy increase (0 when strictly decaying).
    pub max_increase: f64,
    /// Largest violation of J(u^l) + k sum R^m <= J(u^0).
    pub law_slack: f64,
    pub monotone: bool,
    pub steps: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
}

pub fn energy_decay_run(cfg: &RunConfig) -> Result<EnergyOutcome> {
    ensure_out(cfg)?;
    let space = build_space(cfg.nx, cfg.ny, cfg.domain, cfg.degree)?;
    let scheme = cfg.scheme().validated()?;
    coercivity_gate(&space, &scheme, cfg.seed)?;
    if outside_stability_region(&scheme) {
        eprintln!(
            "warning: fully implicit with k = {} >= 2 eps^2; energy decay is not guaranteed here",
            scheme.dt
        );
    }
    let u0 = initial_state(&space, cfg)?;
    let out = evolve(&space, &scheme, &u0, &[], None)?;
    write_energy_csv(&cfg.out_dir.join("energy.csv"), scheme.dt, &out)?;
    Ok(summarize_energy(&scheme, &out))
}

fn summarize_energy(scheme: &SchemeConfig, out: &EvolveOutcome) -> EnergyOutcome {
    let mut max_increase = 0.0f64;
    for w in out.energies.windows(2) {
        max_increase = max_increase.max(w[1].total_j - w[0].total_j);
    }
    let j0 = out.energies[0].total_j;
    let mut law_slack = 0.0f64;
    let mut acc = 0.0;
    for (m, r) in out.law_residuals.iter().enumerate() {
        acc += scheme.dt * r;
        law_slack = law_slack.max(out.energies[m + 1].total_j + acc - j0);
    }
    // Monotonicity slack scales with the Newton tolerance and the state size.
    let u_scale = out
        .energies
        .iter()
        .map(|e| e.total_j.abs())
        .fold(0.0, f64::max);
    let tol = 10.0 * scheme.newton_tol * (1.0 + u_scale);
    EnergyOutcome {
        max_increase,
        law_slack,
        monotone: max_increase <= tol,
        steps: out.reports.len(),
        initial_energy: j0,
        final_energy: out.energies.last().unwrap().total_j,
    }
}

// ---------------------------------------------------------------------------
// stability sweep
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct StabilityRow {
    pub variant: Variant,
    pub k: f64,
    /// Outside the guaranteed region of the fully implicit variant.
    pub flagged: bool,
    pub completed: bool,
    pub monotone: bool,
    pub max_newton: usize,
    pub note: String,
}

pub fn stability_sweep(cfg: &RunConfig, k_values: &[f64]) -> Result<Vec<StabilityRow>> {
    ensure_out(cfg)?;
    let space = build_space(cfg.nx, cfg.ny, cfg.domain, cfg.degree)?;
    let base = cfg.scheme().validated()?;
    coercivity_gate(&space, &base, cfg.seed)?;
    let u0 = initial_state(&space, cfg)?;

    let mut rows = Vec::new();
    for &variant in &[Variant::ConvexSplitting, Variant::FullyImplicit] {
        for &k in k_values {
            let mut scheme = base.clone();
            scheme.variant = variant;
            let (m, k_adj) = commensurate_steps(cfg.t_final, k);
            scheme.dt = k_adj;
            scheme.t_final = m as f64 * k_adj;
            let flagged = outside_stability_region(&scheme);
            let row = match evolve(&space, &scheme, &u0, &[], None) {
                Ok(out) => {
                    let summary = summarize_energy(&scheme, &out);
                    StabilityRow {
                        variant,
                        k: k_adj,
                        flagged,
                        completed: true,
                        monotone: summary.monotone,
                        max_newton: out.reports.iter().map(|r| r.newton_iterations).max().unwrap_or(0),
                        note: String::new(),
                    }
                }
                Err(e) => StabilityRow {
                    variant,
                    k: k_adj,
                    flagged,
                    completed: false,
                    monotone: false,
                    max_newton: 0,
                    note: e.to_string().replace(',', ";").replace('\n', " "),
                },
            };
            println!(
                "stability {} k={:.5e}: completed={} monotone={} flagged={}",
                row.variant.as_str(),
                row.k,
                row.completed,
                row.monotone,
                row.flagged
            );
            rows.push(row);
        }
    }

    let mut w = BufWriter::new(File::create(cfg.out_dir.join("stability.csv"))?);
    writeln!(w, "variant,k,flagged,completed,monotone,max_newton,note")?;
    for r in &rows {
        writeln!(
            w,
            "{},{:.12e},{},{},{},{},{}",
            r.variant.as_str(),
            r.k,
            r.flagged,
            r.completed,
            r.monotone,
            r.max_newton,
            r.note
        )?;
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// spectrum sweep
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SpectrumRow {
    pub epsilon: f64,
    /// lambda at the elliptic projection of the analytic circle profile.
    pub lambda_min: f64,
    /// Control: u_ref = 1 (expected 2 / eps^2).
    pub lambda_one: f64,
    /// Control: u_ref = 0 (expected -1 / eps^2).
    pub lambda_zero: f64,
}

/// For each eps on a matched mesh (h = eps / 2): evolve circle data briefly
/// to t_probe, then linearize at the elliptic projection of the analytic
/// tanh profile at the shrunken radius and compute the smallest pencil
/// eigenvalue, plus the two constant-state control rows.
pub fn spectrum_sweep(cfg: &RunConfig, epsilons: &[f64]) -> Result<Vec<SpectrumRow>> {
    ensure_out(cfg)?;
    let (center, r0) = match cfg.ic {
        InitialCondition::Circle { center, radius } => (center, radius),
        _ => ([0.0, 0.0], 0.5),
    };
    let flow = CircleFlow::new(center, r0)?;
    let mut rows = Vec::new();

    for (i, &eps) in epsilons.iter().enumerate() {
        let (nx, ny) = subdivisions_for(&cfg.domain, 0.5 * eps);
        let space = build_space(nx, ny, cfg.domain, cfg.degree)?;
        let h = space.mesh().h_max;
        let (m_steps, k) = commensurate_steps(cfg.t_probe, 0.5 * h * h);
        let mut scheme = cfg.scheme().validated()?;
        scheme.epsilon = eps;
        scheme.dt = k;
        scheme.t_final = m_steps as f64 * k;
        if i == 0 {
            coercivity_gate(&space, &scheme, cfg.seed)?;
        }

        let scale = 1.0 / (2f64.sqrt() * eps);
        let u0 = initial_datum(&space, |x| (flow.signed_distance(x) * scale).tanh());
        evolve(&space, &scheme, &u0, &[], None)?;

        let mass = assemble_mass(&space);
        let stiffness = assemble_dg_laplacian(&space, &scheme);

        // Analytic profile at the shrunken radius, elliptically projected.
        let r_t = flow.radius(cfg.t_probe)?;
        let profile = move |x: [f64; 2]| {
            let d = r_t - ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt();
            (d * scale).tanh()
        };
        let profile_grad = move |x: [f64; 2]| {
            let dx = [x[0] - center[0], x[1] - center[1]];
            let rr = (dx[0] * dx[0] + dx[1] * dx[1]).sqrt();
            if rr < 1e-14 {
                return [0.0, 0.0];
            }
            let d = r_t - rr;
            let th = (d * scale).tanh();
            let dtanh = (1.0 - th * th) * scale;
            [-dtanh * dx[0] / rr, -dtanh * dx[1] / rr]
        };
        let u_ref = elliptic_project_fn(&space, &scheme, profile, profile_grad, &mass, &stiffness)?;
        let lambda_min = principal_eigenvalue_with(&space, &scheme, &u_ref, &mass, &stiffness)?;

        let one = DgFunction::constant(Arc::clone(&space), 1.0);
        let lambda_one = principal_eigenvalue_with(&space, &scheme, &one, &mass, &stiffness)?;
        let zero = DgFunction::zeros(Arc::clone(&space));
        let lambda_zero = principal_eigenvalue_with(&space, &scheme, &zero, &mass, &stiffness)?;

        println!(
            "spectrum eps={eps}: nx={nx} lambda={lambda_min:.6} (controls {lambda_one:.4}, {lambda_zero:.4})"
        );
        rows.push(SpectrumRow {
            epsilon: eps,
            lambda_min,
            lambda_one,
            lambda_zero,
        });
    }

    let mut w = BufWriter::new(File::create(cfg.out_dir.join("spectrum.csv"))?);
    writeln!(w, "epsilon,lambda_min")?;
    for r in &rows {
        writeln!(w, "{:.12e},{:.12e}", r.epsilon, r.lambda_min)?;
    }
    let mut w = BufWriter::new(File::create(cfg.out_dir.join("spectrum_controls.csv"))?);
    writeln!(w, "epsilon,state,lambda_min,expected")?;
    for r in &rows {
        let e2 = r.epsilon * r.epsilon;
        writeln!(w, "{:.12e},one,{:.12e},{:.12e}", r.epsilon, r.lambda_one, 2.0 / e2)?;
        writeln!(w, "{:.12e},zero,{:.12e},{:.12e}", r.epsilon, r.lambda_zero, -1.0 / e2)?;
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// interface study
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct InterfaceRow {
    pub epsilon: f64,
    pub t: f64,
    pub sup_distance: f64,
    pub segments: usize,
}

fn curve_at_time(
    space: &Arc<DgSpace>,
    mesh: &Mesh,
    out: &EvolveOutcome,
    t: f64,
) -> Result<InterfaceCurve> {
    // Snapshots were requested as the bracketing step times around t.
    let mut below: Option<(f64, &DgFunction)> = None;
    let mut above: Option<(f64, &DgFunction)> = None;
    for s in &out.snapshots {
        if s.t <= t + 1e-12 && below.map(|(bt, _)| s.t > bt).unwrap_or(true) {
            below = Some((s.t, &s.state));
        }
        if s.t >= t - 1e-12 && above.map(|(at, _)| s.t < at).unwrap_or(true) {
            above = Some((s.t, &s.state));
        }
    }
    let (t_lo, lo) = below.ok_or_else(|| Error::invalid(format!("no snapshot at or before t = {t}")))?;
    let (t_hi, hi) = above.ok_or_else(|| Error::invalid(format!("no snapshot at or after t = {t}")))?;
    let state = if t_hi > t_lo + 1e-15 {
        time_interpolant(lo, hi, t_lo, t_hi, t)?
    } else {
        lo.clone()
    };
    let nodal = average_to_continuous(space, &state);
    Ok(extract_zero_levelset(mesh, &nodal, t))
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

/// Circle data: for each eps on its matched mesh, evolve with k = h^2/2,
/// reconstruct the continuous interpolant, extract the zero-level set at
/// the observation times, and measure the one-sided distance to the
/// analytic circle. Test 1 / Test 2 data instead dump snapshot curves at
/// the benchmark times for visual comparison.
pub fn interface_run(cfg: &RunConfig, epsilons: &[f64]) -> Result<Vec<InterfaceRow>> {
    ensure_out(cfg)?;
    match cfg.ic {
        InitialCondition::Circle { center, radius } => {
            let flow = CircleFlow::new(center, radius)?;
            let obs: Vec<f64> = if cfg.snapshot_times.is_empty() {
                vec![0.05]
            } else {
                cfg.snapshot_times.clone()
            };
            let mut rows = Vec::new();
            for (i, &eps) in epsilons.iter().enumerate() {
                let (nx, ny) = subdivisions_for(&cfg.domain, 0.5 * eps);
                let space = build_space(nx, ny, cfg.domain, cfg.degree)?;
                let h = space.mesh().h_max;
                let t_max = obs.iter().cloned().fold(0.0, f64::max);
                let (m_steps, k) = commensurate_steps(t_max, 0.5 * h * h);
                let mut scheme = cfg.scheme().validated()?;
                scheme.epsilon = eps;
                scheme.dt = k;
                scheme.t_final = m_steps as f64 * k;
                if i == 0 {
                    coercivity_gate(&space, &scheme, cfg.seed)?;
                }

                let scale = 1.0 / (2f64.sqrt() * eps);
                let u0 = initial_datum(&space, |x| (flow.signed_distance(x) * scale).tanh());

                let mut wanted: Vec<f64> = Vec::new();
                for &t in &obs {
                    let m_lo = ((t / k + 1e-9).floor() as usize).min(m_steps);
                    wanted.push(m_lo as f64 * k);
                    wanted.push(((m_lo + 1).min(m_steps)) as f64 * k);
                }
                let out = evolve(&space, &scheme, &u0, &wanted, None)?;

                for &t in &obs {
                    let curve = curve_at_time(&space, space.mesh(), &out, t)?;
                    if curve.is_empty() {
                        return Err(Error::EmptyInterface);
                    }
                    let d = one_sided_hausdorff(&curve, &Reference::Circle(&flow, t))?;
                    let stem = format!("interface_{}_{}", fmt_num(eps), fmt_num(t));
                    write_curve_csv(&curve, &cfg.out_dir.join(format!("{stem}.csv")))?;
                    write_curve_vtk(&curve, &cfg.out_dir.join(format!("{stem}.vtk")))?;
                    println!(
                        "interface eps={eps} t={t}: nx={nx} segments={} sup-dist={d:.5e}",
                        curve.segments.len()
                    );
                    rows.push(InterfaceRow {
                        epsilon: eps,
                        t,
                        sup_distance: d,
                        segments: curve.segments.len(),
                    });
                }
            }
            let mut w = BufWriter::new(File::create(cfg.out_dir.join("interface_distances.csv"))?);
            writeln!(w, "epsilon,t,sup_distance,segments")?;
            for r in &rows {
                writeln!(
                    w,
                    "{:.12e},{:.12e},{:.12e},{}",
                    r.epsilon, r.t, r.sup_distance, r.segments
                )?;
            }
            Ok(rows)
        }
        InitialCondition::Test1 | InitialCondition::Test2 => {
            let default_times: Vec<f64> = match cfg.ic {
                InitialCondition::Test1 => vec![0.0, 0.06, 0.09, 0.2],
                _ => vec![0.0, 6e-3, 1.2e-2, 2e-2],
            };
            let obs = if cfg.snapshot_times.is_empty() {
                default_times
            } else {
                cfg.snapshot_times.clone()
            };
            let space = build_space(cfg.nx, cfg.ny, cfg.domain, cfg.degree)?;
            let t_max = obs.iter().cloned().fold(0.0, f64::max);
            let (m_steps, k) = commensurate_steps(t_max, cfg.dt);
            let mut scheme = cfg.scheme().validated()?;
            scheme.dt = k;
            scheme.t_final = m_steps as f64 * k;
            coercivity_gate(&space, &scheme, cfg.seed)?;
            let u0 = initial_state(&space, cfg)?;
            let mut wanted: Vec<f64> = Vec::new();
            for &t in &obs {
                let m_lo = ((t / k + 1e-9).floor() as usize).min(m_steps);
                wanted.push(m_lo as f64 * k);
                wanted.push(((m_lo + 1).min(m_steps)) as f64 * k);
            }
            let out = evolve(&space, &scheme, &u0, &wanted, None)?;
            let mut rows = Vec::new();
            for &t in &obs {
                let curve = curve_at_time(&space, space.mesh(), &out, t)?;
                let stem = format!("interface_{}_{}", fmt_num(cfg.epsilon), fmt_num(t));
                write_curve_csv(&curve, &cfg.out_dir.join(format!("{stem}.csv")))?;
                write_curve_vtk(&curve, &cfg.out_dir.join(format!("{stem}.vtk")))?;
                println!(
                    "interface {} t={t}: segments={}",
                    cfg.ic.name(),
                    curve.segments.len()
                );
                rows.push(InterfaceRow {
                    epsilon: cfg.epsilon,
                    t,
                    sup_distance: f64::NAN,
                    segments: curve.segments.len(),
                });
            }
            Ok(rows)
        }
        _ => Err(Error::invalid(
            "interface study needs circle, test1 or test2 initial data".to_string(),
        )),
    }
}

// ---------------------------------------------------------------------------

pub fn default_spectrum_epsilons(cfg: &RunConfig) -> Vec<f64> {
    if cfg.epsilons.is_empty() {
        vec![0.2, 0.1, 0.05]
    } else {
        cfg.epsilons.clone()
    }
}

pub fn default_interface_epsilons(cfg: &RunConfig) -> Vec<f64> {
    if cfg.epsilons.is_empty() {
        vec![0.1, 0.05, 0.025]
    } else {
        cfg.epsilons.clone()
    }
}

pub fn default_stability_ks(cfg: &RunConfig) -> Vec<f64> {
    if cfg.k_values.is_empty() {
        let e2 = cfg.epsilon * cfg.epsilon;
        vec![0.5 * e2, e2, 2.0 * e2, 4.0 * e2, 8.0 * e2]
    } else {
        cfg.k_values.clone()
    }
}

pub fn sigma_matches_degree(cfg: &RunConfig) -> bool {
    cfg.sigma == default_sigma(cfg.degree)
}
