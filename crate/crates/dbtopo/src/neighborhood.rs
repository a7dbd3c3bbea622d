//! Cross-class neighborhood graphs and local scales.
//!
//! Edges only ever join points of opposite classes. In plain mode an edge's
//! value is the raw distance; in locally scaled mode it is the distance
//! divided by the geometric mean of the two endpoint scales, where a point's
//! scale is the distance to its k-th nearest opposite-class point. Both
//! produce monotone graph inclusions as the threshold grows, which is what
//! the downstream filtration machinery relies on.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{DistanceOracle, LabeledPointCloud};
use crate::error::{Error, Result};

/// Which edge-value rule parameterizes the filtration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiltrationMode {
    /// Edge value = Euclidean (or precomputed) distance; threshold is a radius.
    Plain,
    /// Edge value = distance / sqrt(rho_i * rho_j); threshold is the scale
    /// multiplier, and 1 is the natural local scale of the data.
    LocallyScaled,
}

impl std::fmt::Display for FiltrationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FiltrationMode::Plain => write!(f, "plain"),
            FiltrationMode::LocallyScaled => write!(f, "locally-scaled"),
        }
    }
}

/// Per-point local scale: distance to the k-th nearest opposite-class point.
#[derive(Debug, Clone)]
pub struct LocalScales {
    rho: Vec<f64>,
    k: usize,
}

impl LocalScales {
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

fn check_two_classes(cloud: &LabeledPointCloud) -> Result<[usize; 2]> {
    let counts = cloud.class_counts();
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::SingleClass {
            reason: format!(
                "class 0 has {} points and class 1 has {}; both must be nonempty",
                counts[0], counts[1]
            ),
        });
    }
    Ok(counts)
}

/// Computes the local scale of every point: the k-th smallest distance to the
/// opposite class (the k-th order statistic by value, so ties are benign).
pub fn local_scales(
    cloud: &LabeledPointCloud,
    oracle: DistanceOracle<'_>,
    k: usize,
) -> Result<LocalScales> {
    if k == 0 {
        return Err(Error::invalid("k", "must be >= 1"));
    }
    let counts = check_two_classes(cloud)?;
    for class in [0u8, 1u8] {
        let opposite = counts[1 - class as usize];
        if k > opposite {
            return Err(Error::KTooLarge { class: 1 - class, k, available: opposite });
        }
    }
    let by_class = [cloud.class_indices(0), cloud.class_indices(1)];
    let rho: Vec<f64> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let opposite = &by_class[1 - cloud.label(i) as usize];
            let mut dists: Vec<f64> = opposite.iter().map(|&j| oracle.dist(i, j)).collect();
            let (_, kth, _) =
                dists.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).unwrap());
            *kth
        })
        .collect();
    Ok(LocalScales { rho, k })
}

/// One undirected cross-class edge, stored with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphEdge {
    pub i: u32,
    pub j: u32,
    pub value: f64,
}

/// Symmetrized capped neighborhood graph between the two classes. Edges are
/// canonically sorted by `(value, i, j)`, so construction is deterministic
/// regardless of parallelism.
#[derive(Debug, Clone)]
pub struct CrossClassGraph {
    n: usize,
    cap: usize,
    edges: Vec<GraphEdge>,
}

impl CrossClassGraph {
    #[cfg(test)]
    pub(crate) fn for_tests(n: usize, cap: usize, mut edges: Vec<GraphEdge>) -> Self {
        edges.sort_unstable_by(|a, b| {
            a.value.partial_cmp(&b.value).unwrap().then(a.i.cmp(&b.i)).then(a.j.cmp(&b.j))
        });
        CrossClassGraph { n, cap, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    /// CSV rows `(i, j, value)` in canonical order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["i", "j", "value"])?;
        for e in &self.edges {
            wtr.write_record(&[e.i.to_string(), e.j.to_string(), format!("{}", e.value)])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Edge value under `mode`. Duplicate points (distance 0) connect at 0 even
/// when a scale vanishes; a positive distance over a zero scale yields
/// infinity, i.e. an edge that never enters any finite filtration.
fn edge_value(mode: FiltrationMode, dist: f64, scales: Option<&LocalScales>, i: usize, j: usize) -> f64 {
    match mode {
        FiltrationMode::Plain => dist,
        FiltrationMode::LocallyScaled => {
            if dist == 0.0 {
                return 0.0;
            }
            let rho = scales.expect("locally scaled mode requires scales").rho();
            let denom = (rho[i] * rho[j]).sqrt();
            if denom == 0.0 {
                f64::INFINITY
            } else {
                dist / denom
            }
        }
    }
}

/// Builds the cross-class graph: each point contributes its `cap` nearest
/// opposite-class candidates under the mode's edge value (ties at the cap
/// boundary are all kept), and the edge set is the union over both endpoints.
/// Infinite-valued candidates are dropped.
pub fn build_graph(
    cloud: &LabeledPointCloud,
    oracle: DistanceOracle<'_>,
    mode: FiltrationMode,
    scales: Option<&LocalScales>,
    cap: usize,
) -> Result<CrossClassGraph> {
    if cap == 0 {
        return Err(Error::invalid("cap", "must be >= 1"));
    }
    if mode == FiltrationMode::LocallyScaled && scales.is_none() {
        return Err(Error::invalid("scales", "locally scaled mode requires local scales"));
    }
    check_two_classes(cloud)?;
    let by_class = [cloud.class_indices(0), cloud.class_indices(1)];

    let per_point: Vec<Vec<GraphEdge>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let opposite = &by_class[1 - cloud.label(i) as usize];
            let mut cand: Vec<(f64, usize)> = opposite
                .iter()
                .map(|&j| (edge_value(mode, oracle.dist(i, j), scales, i, j), j))
                .filter(|(v, _)| v.is_finite())
                .collect();
            cand.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            let keep = if cand.len() <= cap {
                cand.len()
            } else {
                let boundary = cand[cap - 1].0;
                cand.iter().take_while(|(v, _)| *v <= boundary).count()
            };
            cand.truncate(keep);
            cand.into_iter()
                .map(|(value, j)| {
                    let (a, b) = if i < j { (i, j) } else { (j, i) };
                    GraphEdge { i: a as u32, j: b as u32, value }
                })
                .collect()
        })
        .collect();

    let mut edges: Vec<GraphEdge> = per_point.into_iter().flatten().collect();
    edges.sort_unstable_by(|a, b| {
        a.value
            .partial_cmp(&b.value)
            .unwrap()
            .then(a.i.cmp(&b.i))
            .then(a.j.cmp(&b.j))
    });
    edges.dedup_by(|a, b| a.i == b.i && a.j == b.j && a.value == b.value);
    Ok(CrossClassGraph { n: cloud.len(), cap, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud_from(points: Vec<Vec<f64>>, labels: Vec<u8>) -> LabeledPointCloud {
        LabeledPointCloud::new(points, labels).unwrap()
    }

    fn random_two_class(seed: u64, n: usize, d: usize) -> LabeledPointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..n)
            .map(|_| (0..d).map(|_| rng.random::<f64>() * 10.0).collect())
            .collect();
        let mut labels: Vec<u8> = (0..n).map(|_| (rng.random::<f64>() < 0.5) as u8).collect();
        labels[0] = 0;
        labels[1] = 1;
        cloud_from_parts(points, labels)
    }

    fn cloud_from_parts(points: Vec<Vec<f64>>, labels: Vec<u8>) -> LabeledPointCloud {
        LabeledPointCloud::new(points, labels).unwrap()
    }

    #[test]
    fn two_point_scales_forced() {
        let c = cloud_from(vec![vec![0.0], vec![3.0]], vec![0, 1]);
        let s = local_scales(&c, DistanceOracle::Euclidean(&c), 1).unwrap();
        assert_eq!(s.rho(), &[3.0, 3.0]);
    }

    #[test]
    fn scales_match_brute_force_sort() {
        let c = random_two_class(21, 12, 3);
        let oracle = DistanceOracle::Euclidean(&c);
        let k = 3;
        let s = local_scales(&c, oracle, k).unwrap();
        for i in 0..c.len() {
            let mut d: Vec<f64> = (0..c.len())
                .filter(|&j| c.label(j) != c.label(i))
                .map(|j| oracle.dist(i, j))
                .collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(s.rho()[i], d[k - 1], "point {i}");
        }
    }

    #[test]
    fn k_too_large_names_class() {
        let c = cloud_from(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0, 0, 1]);
        match local_scales(&c, DistanceOracle::Euclidean(&c), 2) {
            Err(Error::KTooLarge { class, k, available }) => {
                assert_eq!((class, k, available), (1, 2, 1));
            }
            other => panic!("expected KTooLarge, got {other:?}"),
        }
    }

    #[test]
    fn single_class_rejected() {
        let c = cloud_from(vec![vec![0.0], vec![1.0]], vec![0, 0]);
        assert!(matches!(
            local_scales(&c, DistanceOracle::Euclidean(&c), 1),
            Err(Error::SingleClass { .. })
        ));
        assert!(matches!(
            build_graph(&c, DistanceOracle::Euclidean(&c), FiltrationMode::Plain, None, 5),
            Err(Error::SingleClass { .. })
        ));
    }

    #[test]
    fn plain_two_points_one_edge() {
        let c = cloud_from(vec![vec![0.0], vec![2.0]], vec![0, 1]);
        let g = build_graph(&c, DistanceOracle::Euclidean(&c), FiltrationMode::Plain, None, 20)
            .unwrap();
        assert_eq!(g.edges(), &[GraphEdge { i: 0, j: 1, value: 2.0 }]);
    }

    #[test]
    fn locally_scaled_two_points_unit_edge() {
        let c = cloud_from(vec![vec![0.0], vec![2.0]], vec![0, 1]);
        let oracle = DistanceOracle::Euclidean(&c);
        let s = local_scales(&c, oracle, 1).unwrap();
        assert_eq!(s.rho(), &[2.0, 2.0]);
        let g = build_graph(&c, oracle, FiltrationMode::LocallyScaled, Some(&s), 20).unwrap();
        assert_eq!(g.edges(), &[GraphEdge { i: 0, j: 1, value: 1.0 }]);
    }

    /// With cap at least the opposite-class size, the capped graph equals the
    /// uncapped double-loop construction.
    #[test]
    fn generous_cap_matches_uncapped_brute_force() {
        let c = random_two_class(5, 30, 2);
        let oracle = DistanceOracle::Euclidean(&c);
        for mode in [FiltrationMode::Plain, FiltrationMode::LocallyScaled] {
            let scales = (mode == FiltrationMode::LocallyScaled)
                .then(|| local_scales(&c, oracle, 2).unwrap());
            let g = build_graph(&c, oracle, mode, scales.as_ref(), c.len()).unwrap();
            let mut brute = Vec::new();
            for i in 0..c.len() {
                for j in (i + 1)..c.len() {
                    if c.label(i) != c.label(j) {
                        let v = edge_value(mode, oracle.dist(i, j), scales.as_ref(), i, j);
                        if v.is_finite() {
                            brute.push(GraphEdge { i: i as u32, j: j as u32, value: v });
                        }
                    }
                }
            }
            brute.sort_by(|a, b| {
                a.value.partial_cmp(&b.value).unwrap().then(a.i.cmp(&b.i)).then(a.j.cmp(&b.j))
            });
            assert_eq!(g.edges(), brute.as_slice());
        }
    }

    #[test]
    fn bipartite_and_symmetric() {
        let c = random_two_class(9, 24, 2);
        let oracle = DistanceOracle::Euclidean(&c);
        let g = build_graph(&c, oracle, FiltrationMode::Plain, None, 3).unwrap();
        for e in g.edges() {
            assert!(e.i < e.j);
            assert_ne!(c.label(e.i as usize), c.label(e.j as usize));
        }
        // Canonical order means no duplicate pairs in either direction.
        let mut pairs: Vec<(u32, u32)> = g.edges().iter().map(|e| (e.i, e.j)).collect();
        pairs.sort_unstable();
        pairs.dedup();
        assert_eq!(pairs.len(), g.edges().len());
    }

    #[test]
    fn plain_mode_scale_equivariant_locally_scaled_invariant() {
        let c = random_two_class(13, 20, 2);
        let scaled = c.scaled(3.0);
        let (o1, o2) = (DistanceOracle::Euclidean(&c), DistanceOracle::Euclidean(&scaled));
        let g1 = build_graph(&c, o1, FiltrationMode::Plain, None, 4).unwrap();
        let g2 = build_graph(&scaled, o2, FiltrationMode::Plain, None, 4).unwrap();
        assert_eq!(g1.edges().len(), g2.edges().len());
        for (a, b) in g1.edges().iter().zip(g2.edges()) {
            assert_eq!((a.i, a.j), (b.i, b.j));
            assert!((b.value - 3.0 * a.value).abs() <= 1e-12 * b.value.abs().max(1.0));
        }
        let s1 = local_scales(&c, o1, 2).unwrap();
        let s2 = local_scales(&scaled, o2, 2).unwrap();
        let l1 = build_graph(&c, o1, FiltrationMode::LocallyScaled, Some(&s1), 4).unwrap();
        let l2 = build_graph(&scaled, o2, FiltrationMode::LocallyScaled, Some(&s2), 4).unwrap();
        assert_eq!(l1.edges().len(), l2.edges().len());
        for (a, b) in l1.edges().iter().zip(l2.edges()) {
            assert_eq!((a.i, a.j), (b.i, b.j));
            assert!((b.value - a.value).abs() <= 1e-12 * a.value.abs().max(1.0));
        }
    }

    #[test]
    fn monotone_inclusion_in_threshold() {
        let c = random_two_class(17, 26, 2);
        let oracle = DistanceOracle::Euclidean(&c);
        let g = build_graph(&c, oracle, FiltrationMode::Plain, None, 5).unwrap();
        let at = |theta: f64| -> Vec<(u32, u32)> {
            g.edges().iter().filter(|e| e.value <= theta).map(|e| (e.i, e.j)).collect()
        };
        let (lo, hi) = (1.5, 4.0);
        let small = at(lo);
        let big = at(hi);
        assert!(small.iter().all(|p| big.contains(p)));
    }

    #[test]
    fn zero_distance_duplicates_connect_at_zero() {
        // Two coincident opposite-class points plus a far pair for k=1 scales.
        let c = cloud_from(
            vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![9.0, 0.0], vec![9.5, 0.0]],
            vec![0, 1, 0, 1],
        );
        let oracle = DistanceOracle::Euclidean(&c);
        let s = local_scales(&c, oracle, 1).unwrap();
        assert_eq!(s.rho()[0], 0.0);
        let g = build_graph(&c, oracle, FiltrationMode::LocallyScaled, Some(&s), 4).unwrap();
        let dup = g.edges().iter().find(|e| (e.i, e.j) == (0, 1)).unwrap();
        assert_eq!(dup.value, 0.0);
        // Positive distance over a zero scale never enters the graph.
        assert!(g.edges().iter().all(|e| e.value.is_finite()));
        assert!(!g.edges().iter().any(|e| (e.i, e.j) == (0, 3) || (e.i, e.j) == (1, 2)));
    }
}
