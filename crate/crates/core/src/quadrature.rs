//! Quadrature rules on the reference triangle and the unit interval.
//!
//! Triangle rules are symmetric positive-weight rules; the returned rule is
//! the smallest one that is exact for the requested polynomial degree.
//! Weights sum to the reference measure (1/2 for the triangle, 1 for the
//! interval).

use crate::error::{Error, Result};
use crate::mesh::Point;

pub const MAX_VOLUME_DEGREE: usize = 8;
pub const MAX_FACE_DEGREE: usize = 9;

/// Quadrature rule on the reference triangle {(0,0), (1,0), (0,1)}.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Highest polynomial degree integrated exactly.
    pub degree: usize,
}

/// Gauss-Legendre rule on [0, 1].
#[derive(Clone, Debug)]
pub struct FaceQuadrature {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Push the three (or fewer, if repeated) distinct cyclic images of the
/// barycentric point (a, b, b) and scale the area-normalized weight to the
/// reference triangle.
fn orbit3(points: &mut Vec<Point>, weights: &mut Vec<f64>, a: f64, w: f64) {
    let b = 0.5 * (1.0 - a);
    // barycentric (l0, l1, l2) -> reference (xi, eta) = (l1, l2)
    for bary in [[a, b, b], [b, a, b], [b, b, a]] {
        points.push([bary[1], bary[2]]);
        weights.push(w * 0.5);
    }
}

fn orbit6(points: &mut Vec<Point>, weights: &mut Vec<f64>, a: f64, b: f64, w: f64) {
    let c = 1.0 - a - b;
    for bary in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        points.push([bary[1], bary[2]]);
        weights.push(w * 0.5);
    }
}

fn centroid(points: &mut Vec<Point>, weights: &mut Vec<f64>, w: f64) {
    points.push([1.0 / 3.0, 1.0 / 3.0]);
    weights.push(w * 0.5);
}

/// Symmetric triangle rule exact for polynomials of total degree `degree`.
pub fn volume_quadrature(degree: usize) -> Result<QuadratureRule> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let exact = match degree {
        0 | 1 => {
            centroid(&mut points, &mut weights, 1.0);
            1
        }
        2 => {
            orbit3(&mut points, &mut weights, 2.0 / 3.0, 1.0 / 3.0);
            2
        }
        3 | 4 => {
            // 6-point degree-4 rule, all weights positive.
            orbit3(
                &mut points,
                &mut weights,
                0.816847572980459,
                0.109951743655322,
            );
            orbit3(
                &mut points,
                &mut weights,
                0.108103018168070,
                0.223381589678011,
            );
            4
        }
        5 => {
            // 7-point degree-5 rule.
            centroid(&mut points, &mut weights, 0.225);
            orbit3(
                &mut points,
                &mut weights,
                0.059715871789770,
                0.132394152788506,
            );
            orbit3(
                &mut points,
                &mut weights,
                0.797426985353087,
                0.125939180544827,
            );
            5
        }
        6 => {
            // 12-point degree-6 rule.
            orbit3(
                &mut points,
                &mut weights,
                0.501426509658179,
                0.116786275726379,
            );
            orbit3(
                &mut points,
                &mut weights,
                0.873821971016996,
                0.050844906370207,
            );
            orbit6(
                &mut points,
                &mut weights,
                0.053145049844816,
                0.310352451033785,
                0.082851075618374,
            );
            6
        }
        7 | 8 => {
            // 16-point degree-8 rule.
            centroid(&mut points, &mut weights, 0.144315607677787);
            orbit3(
                &mut points,
                &mut weights,
                0.081414823414554,
                0.095091634267285,
            );
            orbit3(
                &mut points,
                &mut weights,
                0.658861384496480,
                0.103217370534718,
            );
            orbit3(
                &mut points,
                &mut weights,
                0.898905543365938,
                0.032458497623198,
            );
            orbit6(
                &mut points,
                &mut weights,
                0.008394777409958,
                0.263112829634638,
                0.027230314174435,
            );
            8
        }
        _ => {
            return Err(Error::UnsupportedDegree {
                requested: degree,
                max: MAX_VOLUME_DEGREE,
            })
        }
    };
    Ok(QuadratureRule {
        points,
        weights,
        degree: exact,
    })
}

/// Gauss-Legendre rule on [0, 1] exact for polynomials of degree `degree`.
pub fn face_quadrature(degree: usize) -> Result<FaceQuadrature> {
    // n-point Gauss-Legendre is exact to degree 2n - 1.
    let n = degree / 2 + 1;
    // Nodes/weights on [-1, 1].
    let (nodes, weights): (Vec<f64>, Vec<f64>) = match n {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (3.0 / 5.0f64).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let s = (6.0 / 5.0f64).sqrt();
            let a = ((3.0 - 2.0 * s) / 7.0).sqrt();
            let b = ((3.0 + 2.0 * s) / 7.0).sqrt();
            let wa = (18.0 + 30f64.sqrt()) / 36.0;
            let wb = (18.0 - 30f64.sqrt()) / 36.0;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        5 => {
            let s = (10.0 / 7.0f64).sqrt();
            let a = (5.0 - 2.0 * s).sqrt() / 3.0;
            let b = (5.0 + 2.0 * s).sqrt() / 3.0;
            let wa = (322.0 + 13.0 * 70f64.sqrt()) / 900.0;
            let wb = (322.0 - 13.0 * 70f64.sqrt()) / 900.0;
            (
                vec![-b, -a, 0.0, a, b],
                vec![wb, wa, 128.0 / 225.0, wa, wb],
            )
        }
        _ => {
            return Err(Error::UnsupportedDegree {
                requested: degree,
                max: MAX_FACE_DEGREE,
            })
        }
    };
    Ok(FaceQuadrature {
        points: nodes.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        weights: weights.iter().map(|w| 0.5 * w).collect(),
        degree: 2 * n - 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact integral of x^p y^q over the reference triangle: p! q! / (p+q+2)!.
    fn exact_monomial(p: u32, q: u32) -> f64 {
        let fact = |n: u32| (1..=n as u64).product::<u64>() as f64;
        fact(p) * fact(q) / fact(p + q + 2)
    }

    #[test]
    fn constant_integrates_to_half() {
        let r = volume_quadrature(1).unwrap();
        let s: f64 = r.weights.iter().sum();
        assert!((s - 0.5).abs() < 1e-15);
    }

    #[test]
    fn monomial_exactness_all_rules() {
        for degree in 0..=MAX_VOLUME_DEGREE {
            let rule = volume_quadrature(degree).unwrap();
            assert!(rule.degree >= degree);
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for p in 0..=rule.degree as u32 {
                for q in 0..=(rule.degree as u32 - p) {
                    let num: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(pt, w)| w * pt[0].powi(p as i32) * pt[1].powi(q as i32))
                        .sum();
                    let exact = exact_monomial(p, q);
                    assert!(
                        (num - exact).abs() <= 1e-13 * exact.max(1.0),
                        "degree {degree} rule wrong on x^{p} y^{q}: {num} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn degree6_quartic_cross_term() {
        // integral of x^2 y^2 over the reference triangle = 1/180
        let rule = volume_quadrature(6).unwrap();
        let num: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(pt, w)| w * pt[0].powi(2) * pt[1].powi(2))
            .sum();
        assert!((num - 1.0 / 180.0).abs() < 1e-15);
    }

    #[test]
    fn face_rules_exact() {
        for degree in 0..=MAX_FACE_DEGREE {
            let rule = face_quadrature(degree).unwrap();
            assert!(rule.degree >= degree);
            for p in 0..=rule.degree as u32 {
                let num: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(t, w)| w * t.powi(p as i32))
                    .sum();
                let exact = 1.0 / (p as f64 + 1.0);
                assert!((num - exact).abs() < 1e-14, "t^{p}: {num} vs {exact}");
            }
        }
    }

    #[test]
    fn face_cubic_example() {
        let rule = face_quadrature(3).unwrap();
        let num: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(t, w)| w * t * t * t)
            .sum();
        assert!((num - 0.25).abs() < 1e-15);
    }

    #[test]
    fn unsupported_degrees_rejected() {
        assert!(matches!(
            volume_quadrature(9),
            Err(Error::UnsupportedDegree { .. })
        ));
        assert!(matches!(
            face_quadrature(10),
            Err(Error::UnsupportedDegree { .. })
        ));
    }
}
