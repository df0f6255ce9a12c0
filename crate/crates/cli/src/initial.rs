//! Initial-condition library: the diffuse circle profile, the two
//! dumbbell/ellipse benchmark data sets, constants, and the manufactured
//! solution with its forcing term.
//!
//! All diffuse profiles have the form tanh(d(x) / (sqrt(2) eps)) with d a
//! signed distance to the initial interface, positive inside.

use std::f64::consts::PI;

use acdg_core::error::{Error, Result};
use acdg_core::mesh::Point;

use crate::config::InitialCondition;

pub type Field = Box<dyn Fn(Point) -> f64 + Sync + Send>;

pub fn initial_condition(ic: &InitialCondition, epsilon: f64) -> Result<Field> {
    let scale = 1.0 / (2f64.sqrt() * epsilon);
    Ok(match ic {
        InitialCondition::Constant { value } => {
            let v = *value;
            Box::new(move |_| v)
        }
        InitialCondition::Circle { center, radius } => {
            if !(*radius > 0.0) {
                return Err(Error::invalid(format!(
                    "circle radius must be positive, got {radius}"
                )));
            }
            let c = *center;
            let r0 = *radius;
            Box::new(move |x| {
                let d = r0 - ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt();
                (d * scale).tanh()
            })
        }
        InitialCondition::Test1 => Box::new(move |x| test1_profile(x, scale)),
        InitialCondition::Test2 => Box::new(move |x| test2_profile(x, scale)),
        InitialCondition::Mms => Box::new(move |x| mms_exact(0.0, x)),
    })
}

/// A dumbbell: circles of radius 0.39 at (0.5, 0) and 0.25 at (-0.5, 0),
/// joined by the bar |y| <= 0.15 for -0.3 <= x <= 0.14, with the concave
/// junction wedges resolved through the corner points.
fn test1_profile(x: Point, scale: f64) -> f64 {
    let (px, py) = (x[0], x[1]);
    let dist = |cx: f64, cy: f64| ((px - cx).powi(2) + (py - cy).powi(2)).sqrt();
    let d = if px > 0.14 {
        if 0.0 <= py && py < -5.0 / 12.0 * (px - 0.5) {
            -dist(0.14, 0.15)
        } else if 5.0 / 12.0 * (px - 0.5) < py && py < 0.0 {
            -dist(0.14, -0.15)
        } else {
            dist(0.5, 0.0) - 0.39
        }
    } else if px < -0.3 {
        if 0.0 <= py && py < 0.75 * (px + 0.5) {
            -dist(-0.3, 0.15)
        } else if -0.75 * (px + 0.5) < py && py < 0.0 {
            -dist(-0.3, -0.15)
        } else {
            dist(-0.5, 0.0) - 0.25
        }
    } else {
        py.abs() - 0.15
    };
    (d * scale).tanh()
}

/// Two crossed ellipses x^2/0.04 + y^2/0.36 = 1 and x^2/0.36 + y^2/0.04 = 1;
/// positive where the memberships agree (inside both or outside both).
fn test2_profile(x: Point, scale: f64) -> f64 {
    let q1 = x[0] * x[0] / 0.04 + x[1] * x[1] / 0.36;
    let q2 = x[0] * x[0] / 0.36 + x[1] * x[1] / 0.04;
    let d1 = ellipse_distance(0.2, 0.6, x[0], x[1]);
    let d2 = ellipse_distance(0.6, 0.2, x[0], x[1]);
    let d = d1.min(d2);
    let inside1 = q1 < 1.0;
    let inside2 = q2 < 1.0;
    if inside1 == inside2 {
        (d * scale).tanh()
    } else {
        (-d * scale).tanh()
    }
}

/// Euclidean distance from (x, y) to the ellipse u^2/a^2 + v^2/b^2 = 1,
/// by the bisection of Eberly's robust formulation.
pub fn ellipse_distance(a: f64, b: f64, x: f64, y: f64) -> f64 {
    // Order the axes so e0 >= e1 and map the query to the first quadrant.
    let (e0, e1, y0, y1) = if a >= b {
        (a, b, x.abs(), y.abs())
    } else {
        (b, a, y.abs(), x.abs())
    };
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g != 0.0 {
                let r0 = (e0 / e1) * (e0 / e1);
                let sbar = ellipse_root(r0, z0, z1, g);
                let px = r0 * y0 / (sbar + r0);
                let py = y1 / (sbar + 1.0);
                ((px - y0).powi(2) + (py - y1).powi(2)).sqrt()
            } else {
                0.0
            }
        } else {
            (y1 - e1).abs()
        }
    } else {
        let numer0 = e0 * y0;
        let denom0 = e0 * e0 - e1 * e1;
        if denom0 > 0.0 && numer0 < denom0 {
            let xde0 = numer0 / denom0;
            let px = e0 * xde0;
            let py = e1 * (1.0 - xde0 * xde0).sqrt();
            ((px - y0).powi(2) + py * py).sqrt()
        } else {
            (y0 - e0).abs()
        }
    }
}

/// Root of F(s) = (r0 z0 / (s + r0))^2 + (z1 / (s + 1))^2 - 1 on the
/// interval bracketing the closest-point parameter.
fn ellipse_root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 {
        0.0
    } else {
        (n0 * n0 + z1 * z1).sqrt() - 1.0
    };
    let mut s = 0.5 * (s0 + s1);
    for _ in 0..200 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let ratio0 = n0 / (s + r0);
        let ratio1 = z1 / (s + 1.0);
        let f = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if f > 0.0 {
            s0 = s;
        } else if f < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

/// Manufactured exact solution e^{-t} cos(pi x) cos(pi y); its normal
/// derivative vanishes on the boundary of [-1, 1]^2.
pub fn mms_exact(t: f64, x: Point) -> f64 {
    (-t).exp() * (PI * x[0]).cos() * (PI * x[1]).cos()
}

pub fn mms_gradient(t: f64, x: Point) -> [f64; 2] {
    let e = (-t).exp();
    [
        -PI * e * (PI * x[0]).sin() * (PI * x[1]).cos(),
        -PI * e * (PI * x[0]).cos() * (PI * x[1]).sin(),
    ]
}

/// Forcing that makes the manufactured solution solve
/// u_t - lap(u) + eps^{-2}(u^3 - u) = g.
pub fn mms_forcing(epsilon: f64) -> impl Fn(f64, Point) -> f64 + Sync + Send {
    let inv_eps2 = 1.0 / (epsilon * epsilon);
    move |t: f64, x: Point| {
        let u = mms_exact(t, x);
        // u_t = -u, lap u = -2 pi^2 u.
        -u + 2.0 * PI * PI * u + inv_eps2 * (u * u * u - u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_profile_signs_and_zero_set() {
        let ic = InitialCondition::Circle {
            center: [0.0, 0.0],
            radius: 0.5,
        };
        let eps = 0.1;
        let u0 = initial_condition(&ic, eps).unwrap();
        let expected = (0.5 / (2f64.sqrt() * eps)).tanh();
        assert!((u0([0.0, 0.0]) - expected).abs() < 1e-15);
        assert!(u0([0.0, 0.0]) > 0.0);
        for angle in [0.0, 1.0, 2.5, 4.0] {
            let p = [0.5 * f64::cos(angle), 0.5 * f64::sin(angle)];
            assert!(u0(p).abs() < 1e-15);
        }
        assert!(u0([0.9, 0.0]) < 0.0);
    }

    #[test]
    fn test1_band_value() {
        // (-0.08, 0) lies in the band -0.3 <= x <= 0.14:
        // u0 = tanh((|0| - 0.15) / (sqrt(2) eps)) < 0.
        let eps = 0.1;
        let u0 = initial_condition(&InitialCondition::Test1, eps).unwrap();
        let expected = ((0.0f64 - 0.15) / (2f64.sqrt() * eps)).tanh();
        assert!((u0([-0.08, 0.0]) - expected).abs() < 1e-15);
        assert!(u0([-0.08, 0.0]) < 0.0);
    }

    #[test]
    fn test1_regions() {
        let eps = 0.05;
        let u0 = initial_condition(&InitialCondition::Test1, eps).unwrap();
        // The dumbbell (circles, bar, junction wedges) is the negative
        // phase; the far field is positive.
        assert!(u0([0.5, 0.0]) < -0.9);
        assert!(u0([-0.5, 0.0]) < -0.9);
        assert!(u0([0.0, 0.0]) < -0.9);
        assert!(u0([0.0, 0.9]) > 0.9);
        assert!(u0([0.2, 0.05]) < 0.0);
        // On the big circle the value vanishes.
        assert!(u0([0.89, 0.0]).abs() < 1e-12);
    }

    #[test]
    fn ellipse_distance_basics() {
        // Points on the ellipse have distance 0.
        for (a, b) in [(0.2, 0.6), (0.6, 0.2)] {
            for t in [0.0f64, 0.7, 1.3, 2.2, 4.0] {
                let p = [a * t.cos(), b * t.sin()];
                assert!(
                    ellipse_distance(a, b, p[0], p[1]) < 1e-12,
                    "on-ellipse point ({}, {})",
                    p[0],
                    p[1]
                );
            }
        }
        // Axis points.
        assert!((ellipse_distance(0.2, 0.6, 0.0, 0.9) - 0.3).abs() < 1e-12);
        assert!((ellipse_distance(0.2, 0.6, 0.5, 0.0) - 0.3).abs() < 1e-12);
        // Center: closest point is the semi-minor tip.
        assert!((ellipse_distance(0.2, 0.6, 0.0, 0.0) - 0.2).abs() < 1e-12);
        // Symmetry.
        let d1 = ellipse_distance(0.2, 0.6, 0.13, -0.27);
        let d2 = ellipse_distance(0.2, 0.6, -0.13, 0.27);
        assert!((d1 - d2).abs() < 1e-13);
    }

    #[test]
    fn ellipse_distance_matches_sampling_oracle() {
        // Brute-force minimum over a fine parametric sampling.
        let (a, b) = (0.2, 0.6);
        for p in [[0.3, 0.2], [-0.1, 0.5], [0.05, -0.7], [0.25, 0.66]] {
            let d = ellipse_distance(a, b, p[0], p[1]);
            let mut best = f64::INFINITY;
            let n = 200_000;
            for i in 0..n {
                let t = 2.0 * PI * i as f64 / n as f64;
                let q = [a * t.cos(), b * t.sin()];
                let dd = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                best = best.min(dd);
            }
            assert!((d - best).abs() < 1e-8, "{d} vs sampled {best}");
        }
    }

    #[test]
    fn test2_zero_on_ellipses_and_signs() {
        let eps = 0.1;
        let u0 = initial_condition(&InitialCondition::Test2, eps).unwrap();
        // On either ellipse (away from crossings) the value vanishes.
        assert!(u0([0.2, 0.0]).abs() < 1e-12);
        assert!(u0([0.0, 0.6]).abs() < 1e-12);
        assert!(u0([0.6, 0.0]).abs() < 1e-12);
        // Inside both (near origin): positive.
        assert!(u0([0.0, 0.0]) > 0.0);
        // Outside both: positive.
        assert!(u0([0.8, 0.8]) > 0.0);
        // Inside exactly one: negative.
        assert!(u0([0.0, 0.4]) < 0.0);
        assert!(u0([0.4, 0.0]) < 0.0);
    }

    #[test]
    fn mms_forcing_consistent_with_pde() {
        // Finite-difference check of u_t - lap u + eps^{-2} f(u) - g = 0.
        let eps = 0.3;
        let g = mms_forcing(eps);
        let h = 1e-5;
        for (t, x) in [(0.1, [0.3, -0.2]), (0.5, [-0.7, 0.4])] {
            let ut = (mms_exact(t + h, x) - mms_exact(t - h, x)) / (2.0 * h);
            let lap = (mms_exact(t, [x[0] + h, x[1]])
                + mms_exact(t, [x[0] - h, x[1]])
                + mms_exact(t, [x[0], x[1] + h])
                + mms_exact(t, [x[0], x[1] - h])
                - 4.0 * mms_exact(t, x))
                / (h * h);
            let u = mms_exact(t, x);
            let res = ut - lap + (u * u * u - u) / (eps * eps) - g(t, x);
            assert!(res.abs() < 1e-5, "PDE residual {res}");
        }
    }

    #[test]
    fn mms_neumann_boundary() {
        for y in [-1.0, -0.3, 0.2, 1.0] {
            let g = mms_gradient(0.2, [1.0, y]);
            assert!(g[0].abs() < 1e-12);
            let g = mms_gradient(0.2, [y, -1.0]);
            assert!(g[1].abs() < 1e-12);
        }
    }
}
