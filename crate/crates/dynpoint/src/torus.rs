//! Geometry of the flat torus `T^d = [-1/2, 1/2)^d`.
//!
//! All coordinates are kept in the half-open fundamental domain; `+0.5` wraps
//! to `-0.5` so projection is total and deterministic. Distances use the
//! wraparound metric `min over integer shifts of the Euclidean norm`, which
//! for points in the fundamental domain only needs shifts in `{-1,0,1}^d`.

use crate::error::{Error, Result};

/// A point on the flat torus, every coordinate in `[-1/2, 1/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

/// An unbounded Euclidean displacement in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Displacement(pub Vec<f64>);

/// Wrap a single coordinate into `[-1/2, 1/2)`.
#[inline]
pub fn wrap_coord(x: f64) -> f64 {
    let w = x - (x + 0.5).floor();
    // floor(x + 0.5) can leave exactly +0.5 behind for values like
    // 0.5 - 2^-54; renormalize the boundary to the half-open convention.
    if w >= 0.5 {
        w - 1.0
    } else {
        w
    }
}

/// Shortest wrapped difference of two coordinates, in `[-1/2, 1/2)`.
#[inline]
pub fn wrap_diff(a: f64, b: f64) -> f64 {
    wrap_coord(a - b)
}

/// Project a Euclidean vector onto the torus.
pub fn project(v: &[f64]) -> Result<TorusPoint> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("project input"));
    }
    Ok(TorusPoint {
        coords: v.iter().map(|&x| wrap_coord(x)).collect(),
    })
}

impl TorusPoint {
    /// Construct from coordinates already in the fundamental domain,
    /// wrapping defensively.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        project(&coords)
    }

    pub fn origin(d: usize) -> Self {
        TorusPoint {
            coords: vec![0.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// Wraparound metric between two torus points.
pub fn distance(x: &TorusPoint, y: &TorusPoint) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    Ok(distance_coords(x.coords(), y.coords()))
}

/// Wraparound metric on raw coordinate slices (caller guarantees equal
/// length and fundamental-domain coordinates).
#[inline]
pub fn distance_coords(x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for (a, b) in x.iter().zip(y) {
        let mut dcoord = (a - b).abs();
        if dcoord > 0.5 {
            dcoord = 1.0 - dcoord;
        }
        s += dcoord * dcoord;
    }
    s.sqrt()
}

/// Set translation `Y ⊕ x`: coordinatewise addition followed by projection.
pub fn translate(points: &[TorusPoint], x: &TorusPoint) -> Result<Vec<TorusPoint>> {
    points
        .iter()
        .map(|y| {
            if y.dim() != x.dim() {
                return Err(Error::DimensionMismatch {
                    left: y.dim(),
                    right: x.dim(),
                });
            }
            let v: Vec<f64> = y
                .coords()
                .iter()
                .zip(x.coords())
                .map(|(a, b)| a + b)
                .collect();
            project(&v)
        })
        .collect()
}

/// Scalar multiplication `α ⊙ Y` for `α ∈ (0, 1]`. No wrap is needed since
/// `|α π⁻¹(y)_i| ≤ 1/2`.
pub fn scale(alpha: f64, points: &[TorusPoint]) -> Result<Vec<TorusPoint>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} not in (0, 1]")));
    }
    Ok(points
        .iter()
        .map(|y| TorusPoint {
            coords: y.coords().iter().map(|&c| alpha * c).collect(),
        })
        .collect())
}

/// Maximum pairwise wraparound distance; 0 for singletons.
pub fn diameter(points: &[TorusPoint]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut best = 0.0f64;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            best = best.max(distance(&points[i], &points[j])?);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Brute-force metric over a shift box of the given half-width.
    fn distance_brute(x: &[f64], y: &[f64], width: i64) -> f64 {
        fn rec(x: &[f64], y: &[f64], i: usize, acc: &mut Vec<f64>, width: i64, best: &mut f64) {
            if i == x.len() {
                let s: f64 = acc.iter().map(|v| v * v).sum();
                *best = best.min(s.sqrt());
                return;
            }
            for nu in -width..=width {
                acc.push(x[i] - y[i] + nu as f64);
                rec(x, y, i + 1, acc, width, best);
                acc.pop();
            }
        }
        let mut best = f64::INFINITY;
        rec(x, y, 0, &mut Vec::new(), width, &mut best);
        best
    }

    #[test]
    fn project_wraps() {
        assert_relative_eq!(project(&[0.7]).unwrap().coords()[0], -0.3);
        assert_eq!(project(&[0.0, 0.0]).unwrap().coords(), &[0.0, 0.0]);
        assert_eq!(project(&[-0.5]).unwrap().coords()[0], -0.5);
        assert_eq!(project(&[0.5]).unwrap().coords()[0], -0.5);
    }

    #[test]
    fn project_rejects_non_finite() {
        assert!(project(&[f64::NAN]).is_err());
        assert!(project(&[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn distance_wraps_and_is_bounded() {
        let x = project(&[0.4]).unwrap();
        let y = project(&[-0.4]).unwrap();
        assert_relative_eq!(distance(&x, &y).unwrap(), 0.2, max_relative = 1e-12);
        assert_eq!(distance(&x, &x).unwrap(), 0.0);

        let x = project(&[0.4, 0.4]).unwrap();
        let y = project(&[-0.4, -0.4]).unwrap();
        let expect = distance_brute(x.coords(), y.coords(), 1);
        assert_relative_eq!(distance(&x, &y).unwrap(), expect, max_relative = 1e-12);
        assert_relative_eq!(expect, (0.08f64).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn distance_dimension_mismatch() {
        let x = project(&[0.1]).unwrap();
        let y = project(&[0.1, 0.2]).unwrap();
        assert!(distance(&x, &y).is_err());
    }

    #[test]
    fn translate_examples() {
        let y = vec![project(&[0.1]).unwrap(), project(&[0.2]).unwrap()];
        let x = project(&[0.3]).unwrap();
        let t = translate(&y, &x).unwrap();
        assert_relative_eq!(t[0].coords()[0], 0.4);
        assert_relative_eq!(t[1].coords()[0], -0.5);
        // identity element
        let id = translate(&y, &TorusPoint::origin(1)).unwrap();
        assert_eq!(id, y);
    }

    #[test]
    fn scale_examples() {
        let y = vec![project(&[0.4]).unwrap()];
        assert_eq!(scale(1.0, &y).unwrap(), y);
        assert_relative_eq!(scale(0.5, &y).unwrap()[0].coords()[0], 0.2);
        assert!(scale(0.0, &y).is_err());
        assert!(scale(1.5, &y).is_err());
    }

    #[test]
    fn diameter_examples() {
        let single = vec![project(&[0.3]).unwrap()];
        assert_eq!(diameter(&single).unwrap(), 0.0);
        let pair = vec![project(&[0.0]).unwrap(), project(&[0.3]).unwrap()];
        assert_relative_eq!(diameter(&pair).unwrap(), 0.3);
        let wrapped = vec![project(&[-0.45]).unwrap(), project(&[0.45]).unwrap()];
        assert_relative_eq!(diameter(&wrapped).unwrap(), 0.1, max_relative = 1e-12);
        assert!(diameter(&[]).is_err());
    }

    proptest! {
        #[test]
        fn project_idempotent(v in proptest::collection::vec(-10.0..10.0f64, 1..4)) {
            let p = project(&v).unwrap();
            let pp = project(p.coords()).unwrap();
            prop_assert_eq!(p, pp);
        }

        #[test]
        fn project_periodic(v in proptest::collection::vec(-2.0..2.0f64, 1..4),
                            shift in proptest::collection::vec(-3i64..4, 1..4)) {
            prop_assume!(v.len() == shift.len());
            let shifted: Vec<f64> = v.iter().zip(&shift).map(|(x, s)| x + *s as f64).collect();
            let a = project(&v).unwrap();
            let b = project(&shifted).unwrap();
            for (x, y) in a.coords().iter().zip(b.coords()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn metric_translation_invariant(
            x in proptest::collection::vec(-0.5..0.5f64, 2),
            y in proptest::collection::vec(-0.5..0.5f64, 2),
            v in proptest::collection::vec(-3.0..3.0f64, 2),
        ) {
            let a = project(&x).unwrap();
            let b = project(&y).unwrap();
            let xs: Vec<f64> = x.iter().zip(&v).map(|(p, q)| p + q).collect();
            let ys: Vec<f64> = y.iter().zip(&v).map(|(p, q)| p + q).collect();
            let at = project(&xs).unwrap();
            let bt = project(&ys).unwrap();
            let d0 = distance(&a, &b).unwrap();
            let d1 = distance(&at, &bt).unwrap();
            prop_assert!((d0 - d1).abs() < 1e-12);
        }

        #[test]
        fn metric_matches_brute_force_over_larger_box(
            x in proptest::collection::vec(-0.5..0.5f64, 1..4),
            y in proptest::collection::vec(-0.5..0.5f64, 1..4),
        ) {
            prop_assume!(x.len() == y.len());
            let a = project(&x).unwrap();
            let b = project(&y).unwrap();
            let fast = distance(&a, &b).unwrap();
            let brute = distance_brute(a.coords(), b.coords(), 2);
            prop_assert!((fast - brute).abs() < 1e-12);
            prop_assert!(fast <= (x.len() as f64).sqrt() / 2.0 + 1e-12);
        }

        #[test]
        fn translate_preserves_distances(
            ys in proptest::collection::vec(proptest::collection::vec(-0.5..0.5f64, 2), 2..5),
            x in proptest::collection::vec(-0.5..0.5f64, 2),
        ) {
            let pts: Vec<TorusPoint> = ys.iter().map(|c| project(c).unwrap()).collect();
            let shift = project(&x).unwrap();
            let moved = translate(&pts, &shift).unwrap();
            for i in 0..pts.len() {
                for j in (i + 1)..pts.len() {
                    let d0 = distance(&pts[i], &pts[j]).unwrap();
                    let d1 = distance(&moved[i], &moved[j]).unwrap();
                    prop_assert!((d0 - d1).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn scale_scales_small_diameters(
            ys in proptest::collection::vec(proptest::collection::vec(-0.2..0.2f64, 2), 2..5),
            alpha in 0.05..1.0f64,
        ) {
            // diam < 1/2 so no wraparound interferes
            let pts: Vec<TorusPoint> = ys.iter().map(|c| project(c).unwrap()).collect();
            let d0 = diameter(&pts).unwrap();
            prop_assume!(d0 < 0.5);
            let scaled = scale(alpha, &pts).unwrap();
            let d1 = diameter(&scaled).unwrap();
            prop_assert!((d1 - alpha * d0).abs() < 1e-12);
        }
    }
}
