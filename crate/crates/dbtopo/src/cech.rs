//! Exact labeled Čech oracle for desk-scale inputs.
//!
//! A simplex on sites `S` enters the complex when (1) the closed
//! epsilon-balls around its vertices intersect, equivalently the smallest
//! enclosing ball of the vertices has radius at most epsilon, and (2) every
//! vertex lies within gamma of some reference point in `W`. Downward closure
//! follows because both conditions are monotone under taking subsets.
//!
//! Everything here is exhaustive and exact, which is the point: this is the
//! reference construction, not a scalable one. Inputs beyond the documented
//! limits are rejected loudly instead of silently crawling.

use serde::{Deserialize, Serialize};

use crate::cloud::LabeledPointCloud;
use crate::error::{Error, Result};
use crate::filtration::Simplex;

/// Hard limits for the exact oracle.
pub const MAX_SITES: usize = 15;
pub const MAX_AMBIENT_DIM: usize = 3;
pub const MAX_SIMPLEX_DIM: usize = 3;

/// Ball radius and reference proximity of the construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledCechParams {
    pub epsilon: f64,
    pub gamma: f64,
}

impl LabeledCechParams {
    pub fn new(epsilon: f64, gamma: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::invalid("epsilon", "must be > 0"));
        }
        if !(gamma >= 0.0) {
            return Err(Error::invalid("gamma", "must be >= 0"));
        }
        Ok(LabeledCechParams { epsilon, gamma })
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Smallest enclosing ball of up to a handful of points, by exhaustive
/// support-set search: the optimal ball is the circumball of some affinely
/// independent subset of at most d+1 points.
pub fn smallest_enclosing_ball(points: &[&[f64]]) -> (Vec<f64>, f64) {
    assert!(!points.is_empty(), "ball of nothing");
    let d = points[0].len();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let n = points.len();
    let mut subset = Vec::with_capacity(d + 1);

    fn recurse(
        points: &[&[f64]],
        subset: &mut Vec<usize>,
        start: usize,
        max_size: usize,
        best: &mut Option<(Vec<f64>, f64)>,
    ) {
        if !subset.is_empty() {
            if let Some((center, radius)) = circumball(points, subset) {
                let tol = 1e-10 * (1.0 + radius);
                if points.iter().all(|p| dist(&center, p) <= radius + tol)
                    && best.as_ref().map_or(true, |(_, r)| radius < *r)
                {
                    *best = Some((center, radius));
                }
            }
        }
        if subset.len() == max_size {
            return;
        }
        for i in start..points.len() {
            subset.push(i);
            recurse(points, subset, i + 1, max_size, best);
            subset.pop();
        }
    }

    recurse(points, &mut subset, 0, (d + 1).min(n), &mut best);
    best.expect("some support subset always yields a valid ball")
}

/// Circumball of an affinely independent point set (all points on the
/// boundary, minimal radius). Returns None when the set is degenerate.
fn circumball(points: &[&[f64]], subset: &[usize]) -> Option<(Vec<f64>, f64)> {
    let p0 = points[subset[0]];
    let d = p0.len();
    let k = subset.len() - 1;
    if k == 0 {
        return Some((p0.to_vec(), 0.0));
    }
    // Solve sum_j 2 (v_i . v_j) x_j = |v_i|^2 for the barycentric offsets.
    let vs: Vec<Vec<f64>> = subset[1..]
        .iter()
        .map(|&i| points[i].iter().zip(p0).map(|(a, b)| a - b).collect())
        .collect();
    let mut mat = vec![vec![0.0; k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            mat[i][j] = 2.0 * vs[i].iter().zip(&vs[j]).map(|(a, b)| a * b).sum::<f64>();
        }
        mat[i][k] = vs[i].iter().map(|a| a * a).sum();
    }
    let x = solve(&mut mat)?;
    let mut center = p0.to_vec();
    for (j, v) in vs.iter().enumerate() {
        for c in 0..d {
            center[c] += x[j] * v[c];
        }
    }
    let radius = dist(&center, p0);
    Some((center, radius))
}

// Gaussian elimination with partial pivoting; None on (near-)singularity.
fn solve(mat: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let n = mat.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| {
            mat[a][col].abs().partial_cmp(&mat[b][col].abs()).unwrap()
        })?;
        if mat[pivot][col].abs() < 1e-12 {
            return None;
        }
        mat.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let f = mat[row][col] / mat[col][col];
                for c in col..=n {
                    mat[row][c] -= f * mat[col][c];
                }
            }
        }
    }
    Some((0..n).map(|i| mat[i][n] / mat[i][i]).collect())
}

fn check_limits(n_sites: usize, dim: usize, max_dim: usize) -> Result<()> {
    if n_sites > MAX_SITES {
        return Err(Error::OracleScale(format!(
            "{n_sites} sites exceed the exact-oracle limit of {MAX_SITES}"
        )));
    }
    if dim > MAX_AMBIENT_DIM {
        return Err(Error::OracleScale(format!(
            "ambient dimension {dim} exceeds the exact-oracle limit of {MAX_AMBIENT_DIM}"
        )));
    }
    if max_dim > MAX_SIMPLEX_DIM {
        return Err(Error::OracleScale(format!(
            "max_dim {max_dim} exceeds the exact-oracle limit of {MAX_SIMPLEX_DIM}"
        )));
    }
    Ok(())
}

/// Labeled Čech complex on sites `s` with reference set `w`. Vertex ids in
/// the output index into `s`; each simplex's value is its enclosing-ball
/// radius. Output is sorted by (dimension, vertices).
pub fn labeled_cech(
    s: &[Vec<f64>],
    w: &[Vec<f64>],
    params: &LabeledCechParams,
    max_dim: usize,
) -> Result<Vec<Simplex>> {
    let dim = s.first().map_or(0, Vec::len);
    check_limits(s.len(), dim, max_dim)?;
    let covered: Vec<usize> = (0..s.len())
        .filter(|&i| w.iter().any(|p| dist(&s[i], p) <= params.gamma))
        .collect();

    let mut out: Vec<Simplex> = Vec::new();
    // Extend included simplices only: the enclosing-ball radius is monotone
    // under vertex insertion, so an excluded set has no included supersets.
    let mut stack: Vec<Vec<usize>> = covered.iter().map(|&i| vec![i]).collect();
    while let Some(verts) = stack.pop() {
        let pts: Vec<&[f64]> = verts.iter().map(|&i| s[i].as_slice()).collect();
        let (_, radius) = smallest_enclosing_ball(&pts);
        if radius > params.epsilon {
            continue;
        }
        if verts.len() <= max_dim {
            let last = *verts.last().unwrap();
            for &next in covered.iter().filter(|&&c| c > last) {
                let mut bigger = verts.clone();
                bigger.push(next);
                stack.push(bigger);
            }
        }
        out.push(Simplex::new(verts.iter().map(|&i| i as u32).collect(), radius));
    }
    out.sort_by(|a, b| a.vertices.len().cmp(&b.vertices.len()).then(a.vertices.cmp(&b.vertices)));
    Ok(out)
}

/// Union of both orientations on a labeled cloud: class 0 sites against
/// class 1 references and vice versa. Vertex ids are cloud ids, so the two
/// orientations live on disjoint vertex sets.
pub fn labeled_cech_union(
    cloud: &LabeledPointCloud,
    params: &LabeledCechParams,
    max_dim: usize,
) -> Result<Vec<Simplex>> {
    let mut out = Vec::new();
    for site_label in [0u8, 1u8] {
        let site_ids = cloud.class_indices(site_label);
        let sites = cloud.class_points(site_label);
        let refs = cloud.class_points(1 - site_label);
        for simplex in labeled_cech(&sites, &refs, params, max_dim)? {
            let vertices = simplex
                .vertices
                .iter()
                .map(|&local| site_ids[local as usize] as u32)
                .collect();
            out.push(Simplex { vertices, value: simplex.value });
        }
    }
    out.sort_by(|a, b| a.vertices.len().cmp(&b.vertices.len()).then(a.vertices.cmp(&b.vertices)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equilateral() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.5, 3.0f64.sqrt() / 2.0],
        ]
    }

    #[test]
    fn singleton_included_for_any_epsilon() {
        let s = vec![vec![0.0, 0.0]];
        let w = vec![vec![0.3, 0.0]];
        let params = LabeledCechParams::new(1e-6, 0.5).unwrap();
        let complex = labeled_cech(&s, &w, &params, 2).unwrap();
        assert_eq!(complex.len(), 1);
        assert_eq!(complex[0].vertices, vec![0]);
    }

    #[test]
    fn equilateral_triangle_threshold_is_circumradius() {
        let s = equilateral();
        let w = vec![vec![0.5, 0.3]];
        let circumradius = 1.0 / 3.0f64.sqrt();
        for (epsilon, expect_triangle) in [
            (circumradius + 1e-9, true),
            (circumradius - 1e-9, false),
        ] {
            let params = LabeledCechParams::new(epsilon, f64::INFINITY).unwrap();
            let complex = labeled_cech(&s, &w, &params, 2).unwrap();
            let has_triangle = complex.iter().any(|sx| sx.vertices.len() == 3);
            assert_eq!(has_triangle, expect_triangle, "epsilon {epsilon}");
        }
    }

    #[test]
    fn disjoint_reference_set_gives_empty_complex() {
        let s = equilateral();
        let w = vec![vec![100.0, 100.0]];
        let params = LabeledCechParams::new(10.0, 0.5).unwrap();
        let complex = labeled_cech(&s, &w, &params, 2).unwrap();
        assert!(complex.is_empty());
    }

    #[test]
    fn infinite_gamma_reduces_to_plain_cech() {
        let s = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.1],
            vec![2.1, -0.2],
            vec![0.4, 0.9],
        ];
        let w = vec![vec![50.0, 50.0]];
        let params = LabeledCechParams::new(0.8, f64::INFINITY).unwrap();
        let complex = labeled_cech(&s, &w, &params, 3).unwrap();
        // plain Čech: every subset whose enclosing ball has radius <= eps
        let mut expected = 0;
        for mask in 1usize..(1 << s.len()) {
            let verts: Vec<&[f64]> = (0..s.len())
                .filter(|&i| mask & (1 << i) != 0)
                .map(|i| s[i].as_slice())
                .collect();
            let (_, r) = smallest_enclosing_ball(&verts);
            if r <= 0.8 {
                expected += 1;
            }
        }
        assert_eq!(complex.len(), expected);
    }

    #[test]
    fn downward_closure() {
        let s = vec![
            vec![0.0, 0.0],
            vec![0.9, 0.0],
            vec![0.4, 0.7],
            vec![1.3, 0.6],
        ];
        let w = vec![vec![0.5, 0.2], vec![1.2, 0.4]];
        let params = LabeledCechParams::new(0.75, 0.8).unwrap();
        let complex = labeled_cech(&s, &w, &params, 3).unwrap();
        let contains = |verts: &[u32]| complex.iter().any(|sx| sx.vertices == verts);
        for sx in &complex {
            if sx.vertices.len() > 1 {
                for skip in 0..sx.vertices.len() {
                    let facet: Vec<u32> = sx
                        .vertices
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| k != skip)
                        .map(|(_, &v)| v)
                        .collect();
                    assert!(contains(&facet), "missing face {facet:?} of {:?}", sx.vertices);
                }
            }
        }
    }

    #[test]
    fn oracle_scale_is_enforced() {
        let s: Vec<Vec<f64>> = (0..16).map(|i| vec![i as f64, 0.0]).collect();
        let w = vec![vec![0.0, 0.0]];
        let params = LabeledCechParams::new(1.0, 1.0).unwrap();
        assert!(matches!(
            labeled_cech(&s, &w, &params, 2),
            Err(Error::OracleScale(_))
        ));
        let s4: Vec<Vec<f64>> = vec![vec![0.0; 4]];
        assert!(matches!(
            labeled_cech(&s4, &w, &params, 2),
            Err(Error::OracleScale(_))
        ));
    }

    #[test]
    fn union_uses_cloud_ids() {
        let cloud = LabeledPointCloud::new(
            vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![1.0, 0.0]],
            vec![0, 1, 0],
        )
        .unwrap();
        let params = LabeledCechParams::new(0.6, 0.6).unwrap();
        let complex = labeled_cech_union(&cloud, &params, 2).unwrap();
        // class-0 sites {0, 2} are both within gamma of the class-1 point
        assert!(complex.iter().any(|sx| sx.vertices == vec![0, 2]));
        assert!(complex.iter().any(|sx| sx.vertices == vec![1]));
    }

    #[test]
    fn seb_known_values() {
        let square: Vec<Vec<f64>> =
            vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![2.0, 2.0], vec![0.0, 2.0]];
        let refs: Vec<&[f64]> = square.iter().map(Vec::as_slice).collect();
        let (center, radius) = smallest_enclosing_ball(&refs);
        assert!((radius - 2.0f64.sqrt()).abs() < 1e-12);
        assert!((center[0] - 1.0).abs() < 1e-12 && (center[1] - 1.0).abs() < 1e-12);

        let pair: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![4.0, 0.0]];
        let refs: Vec<&[f64]> = pair.iter().map(Vec::as_slice).collect();
        let (_, radius) = smallest_enclosing_ball(&refs);
        assert_eq!(radius, 2.0);
    }
}
