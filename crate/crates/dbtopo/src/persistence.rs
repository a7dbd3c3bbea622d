//! Persistent homology over Z/2, persistence diagrams, and Betti curves.
//!
//! Homology classes in dimension 0 follow a configurable convention: `All`
//! counts every connected component, while `NontrivialH0` counts only
//! components with at least two points. The latter is realized at the
//! filtration level by re-basing each vertex's birth to the value of its
//! first incident edge; vertices that never gain an edge produce no class.
//! That makes isolated points invisible, which is the right reading for
//! decision-boundary complexes where a class needs points from both sides.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtration::SimplicialFiltration;

/// How dimension-0 classes are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum H0Convention {
    /// Every connected component, singletons included (births at 0).
    All,
    /// Only components with two or more points; H0 births are edge values.
    NontrivialH0,
}

impl std::fmt::Display for H0Convention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            H0Convention::All => write!(f, "all"),
            H0Convention::NontrivialH0 => write!(f, "nontrivial-h0"),
        }
    }
}

/// One homology class: born when its creating simplex enters, dead when a
/// killing simplex caps it, `f64::INFINITY` if it survives the filtration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair {
    pub dim: usize,
    pub birth: f64,
    pub death: f64,
}

impl PersistencePair {
    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }

    /// Pairs with equal birth and death are kept in the diagram but carry no
    /// life interval; this flag marks them.
    pub fn is_zero_persistence(&self) -> bool {
        self.death == self.birth
    }

    pub fn lifetime(&self) -> f64 {
        self.death - self.birth
    }
}

/// Inclusive linear grid of `steps` scale values from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl ScaleGrid {
    pub fn new(start: f64, stop: f64, steps: usize) -> Result<Self> {
        if !start.is_finite() || !stop.is_finite() {
            return Err(Error::invalid("grid", "endpoints must be finite"));
        }
        if start > stop {
            return Err(Error::invalid("grid", format!("start {start} exceeds stop {stop}")));
        }
        if steps == 0 {
            return Err(Error::invalid("grid", "steps must be >= 1"));
        }
        Ok(ScaleGrid { start, stop, steps })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / (self.steps - 1) as f64
                }
            })
            .collect()
    }

    /// Spacing between consecutive grid values (0 for a single-point grid).
    pub fn step(&self) -> f64 {
        if self.steps <= 1 {
            0.0
        } else {
            (self.stop - self.start) / (self.steps - 1) as f64
        }
    }
}

/// Betti counts over a grid: `counts[t]` = classes with
/// `birth <= grid[t] < death`.
#[derive(Debug, Clone, PartialEq)]
pub struct BettiCurve {
    pub dim: usize,
    pub grid: ScaleGrid,
    pub counts: Vec<u64>,
}

impl BettiCurve {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// CSV rows `(theta, count)`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["theta", "count"])?;
        for (theta, count) in self.grid.values().iter().zip(&self.counts) {
            wtr.write_record(&[format!("{theta}"), count.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Multiset of persistence pairs, sorted by `(dim, birth, death)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    pairs: Vec<PersistencePair>,
    convention: H0Convention,
}

impl PersistenceDiagram {
    pub fn pairs(&self) -> &[PersistencePair] {
        &self.pairs
    }

    pub fn convention(&self) -> H0Convention {
        self.convention
    }

    pub fn pairs_in_dim(&self, dim: usize) -> impl Iterator<Item = &PersistencePair> {
        self.pairs.iter().filter(move |p| p.dim == dim)
    }

    /// Number of classes alive at `theta` (half-open life `[birth, death)`).
    pub fn betti_at(&self, theta: f64, dim: usize) -> u64 {
        self.pairs_in_dim(dim)
            .filter(|p| p.birth <= theta && theta < p.death)
            .count() as u64
    }

    pub fn betti_curve(&self, grid: &ScaleGrid, dim: usize) -> BettiCurve {
        let values = grid.values();
        let mut counts = vec![0u64; values.len()];
        for p in self.pairs_in_dim(dim) {
            let s = values.partition_point(|&g| g < p.birth);
            let e = values.partition_point(|&g| g < p.death);
            for c in &mut counts[s..e] {
                *c += 1;
            }
        }
        BettiCurve { dim, grid: grid.clone(), counts }
    }

    /// JSON list of `{dim, birth, death}`, with `"inf"` for essential deaths.
    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<()> {
        let items: Vec<serde_json::Value> = self
            .pairs
            .iter()
            .map(|p| {
                let death = if p.is_essential() {
                    serde_json::Value::String("inf".to_string())
                } else {
                    serde_json::json!(p.death)
                };
                serde_json::json!({ "dim": p.dim, "birth": p.birth, "death": death })
            })
            .collect();
        serde_json::to_writer_pretty(&mut writer, &items)?;
        writer.write_all(b"\n")?;
        Ok(())
    }
}

// Union-find with per-component birth metadata for the H0 sweep.
struct Components {
    parent: Vec<u32>,
    // (birth, tie) of the component root; birth = INFINITY while the
    // component is a singleton, tie = smallest vertex id for deterministic
    // elder resolution at equal births.
    birth: Vec<f64>,
    tie: Vec<u32>,
}

impl Components {
    fn new(n: usize) -> Self {
        Components {
            parent: (0..n as u32).collect(),
            birth: vec![f64::INFINITY; n],
            tie: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let up = self.parent[x as usize];
            self.parent[x as usize] = self.parent[up as usize];
            x = up;
        }
        x
    }
}

fn reduce_h0(
    filt: &SimplicialFiltration,
    convention: H0Convention,
) -> (Vec<PersistencePair>, Vec<bool>) {
    let n = filt.n_vertices();
    let edges = filt.dim_simplices(1.min(filt.max_dim()));
    let n_edges = if filt.max_dim() >= 1 { edges.len() } else { 0 };
    let mut positive = vec![false; n_edges];
    let mut pairs = Vec::new();
    let mut comps = Components::new(n);
    if let H0Convention::All = convention {
        for b in &mut comps.birth {
            *b = 0.0;
        }
    }

    for e in 0..n_edges {
        let verts = edges.vertices(1, e);
        let t = edges.values[e];
        let (ru, rv) = (comps.find(verts[0]), comps.find(verts[1]));
        if ru == rv {
            positive[e] = true;
            continue;
        }
        let (bu, bv) = (comps.birth[ru as usize], comps.birth[rv as usize]);
        // Elder rule on (birth, tie): the younger class dies at t.
        let u_elder = (bu, comps.tie[ru as usize]) <= (bv, comps.tie[rv as usize]);
        let (live, dead) = if u_elder { (ru, rv) } else { (rv, ru) };
        let dead_birth = comps.birth[dead as usize];
        if dead_birth.is_finite() {
            pairs.push(PersistencePair { dim: 0, birth: dead_birth, death: t });
        } else {
            // a singleton joins: under the nontrivial convention its class is
            // born and dies at this very edge
            pairs.push(PersistencePair { dim: 0, birth: t, death: t });
        }
        comps.parent[dead as usize] = live;
        let live_idx = live as usize;
        comps.birth[live_idx] = comps.birth[live_idx].min(t);
        comps.tie[live_idx] = comps.tie[live_idx].min(comps.tie[dead as usize]);
    }

    for v in 0..n as u32 {
        if comps.find(v) == v {
            let birth = comps.birth[v as usize];
            if birth.is_finite() {
                pairs.push(PersistencePair { dim: 0, birth, death: f64::INFINITY });
            }
        }
    }
    (pairs, positive)
}

// Symmetric difference of two sorted index lists.
fn xor_columns(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// Left-to-right reduction of the boundary matrix from dimension `q` to
/// `q - 1`. Returns `(killers, positive_q)`: pivot pairs `(facet index,
/// column index)` and which q-simplices reduced to zero.
fn reduce_boundary(
    filt: &SimplicialFiltration,
    q: usize,
    facet_index: &HashMap<Vec<u32>, u32>,
) -> (Vec<(u32, u32)>, Vec<bool>) {
    let cols = filt.dim_simplices(q);
    let n_cols = cols.len();
    let n_rows = filt.simplex_count(q - 1);
    const NONE: u32 = u32::MAX;
    let mut owner = vec![NONE; n_rows];
    let mut stored: Vec<Vec<u32>> = Vec::with_capacity(n_cols);
    let mut killers = Vec::new();
    let mut positive = vec![false; n_cols];
    let mut scratch = Vec::new();
    let mut facet = Vec::with_capacity(q);

    for j in 0..n_cols {
        let verts = cols.vertices(q, j);
        let mut col: Vec<u32> = (0..verts.len())
            .map(|skip| {
                facet.clear();
                facet.extend(verts.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &v)| v));
                facet_index[&facet]
            })
            .collect();
        col.sort_unstable();
        loop {
            match col.last() {
                None => {
                    positive[j] = true;
                    break;
                }
                Some(&piv) => {
                    let o = owner[piv as usize];
                    if o == NONE {
                        owner[piv as usize] = j as u32;
                        killers.push((piv, j as u32));
                        break;
                    }
                    xor_columns(&col, &stored[o as usize], &mut scratch);
                    std::mem::swap(&mut col, &mut scratch);
                }
            }
        }
        stored.push(col);
    }
    (killers, positive)
}

fn build_index(filt: &SimplicialFiltration, dim: usize) -> HashMap<Vec<u32>, u32> {
    let ds = filt.dim_simplices(dim);
    let mut map = HashMap::with_capacity(ds.len());
    for i in 0..ds.len() {
        map.insert(ds.vertices(dim, i).to_vec(), i as u32);
    }
    map
}

/// Checks that every facet of every simplex is present with a value no
/// larger than its coface's.
fn validate(filt: &SimplicialFiltration, indexes: &[HashMap<Vec<u32>, u32>]) -> Result<()> {
    for q in 1..=filt.max_dim() {
        let ds = filt.dim_simplices(q);
        let lower = &indexes[q - 1];
        let lower_values = &filt.dim_simplices(q - 1).values;
        let mut facet = Vec::with_capacity(q);
        for j in 0..ds.len() {
            let verts = ds.vertices(q, j);
            for skip in 0..verts.len() {
                facet.clear();
                facet.extend(verts.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &v)| v));
                match lower.get(&facet) {
                    Some(&idx) if lower_values[idx as usize] <= ds.values[j] => {}
                    _ => {
                        return Err(Error::InvalidFiltration {
                            simplex: format!("{verts:?}@{}", ds.values[j]),
                            facet: format!("{facet:?}"),
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Persistent homology of `filt` up to `max_hom_dim`, by union-find for H0
/// and column reduction of the Z/2 boundary matrix for higher dimensions.
/// For trustworthy deaths in the top dimension the filtration should contain
/// simplices one dimension higher.
pub fn persistent_homology(
    filt: &SimplicialFiltration,
    max_hom_dim: usize,
    convention: H0Convention,
) -> Result<PersistenceDiagram> {
    let indexes: Vec<HashMap<Vec<u32>, u32>> =
        (0..=filt.max_dim()).map(|d| build_index(filt, d)).collect();
    validate(filt, &indexes)?;

    let (mut pairs, mut positive) = reduce_h0(filt, convention);

    for p in 1..=max_hom_dim.min(filt.max_dim()) {
        let n_p = filt.simplex_count(p);
        let mut killed = vec![false; n_p];
        if p + 1 <= filt.max_dim() {
            let (killers, positive_next) = reduce_boundary(filt, p + 1, &indexes[p]);
            let birth_values = &filt.dim_simplices(p).values;
            let death_values = &filt.dim_simplices(p + 1).values;
            for (piv, col) in killers {
                debug_assert!(positive[piv as usize], "pivot must be a positive simplex");
                killed[piv as usize] = true;
                pairs.push(PersistencePair {
                    dim: p,
                    birth: birth_values[piv as usize],
                    death: death_values[col as usize],
                });
            }
            let values = &filt.dim_simplices(p).values;
            for i in 0..n_p {
                if positive[i] && !killed[i] {
                    pairs.push(PersistencePair { dim: p, birth: values[i], death: f64::INFINITY });
                }
            }
            positive = positive_next;
        } else {
            // no cofaces exist: every positive p-simplex is essential
            let values = &filt.dim_simplices(p).values;
            for i in 0..n_p {
                if positive[i] {
                    pairs.push(PersistencePair { dim: p, birth: values[i], death: f64::INFINITY });
                }
            }
            positive = Vec::new();
        }
    }

    pairs.sort_by(|a, b| {
        a.dim
            .cmp(&b.dim)
            .then(a.birth.partial_cmp(&b.birth).unwrap())
            .then(a.death.partial_cmp(&b.death).unwrap())
    });
    Ok(PersistenceDiagram { pairs, convention })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::{DistanceOracle, LabeledPointCloud};
    use crate::filtration::{expand, one_skeleton, Simplex, SimplicialFiltration};
    use crate::neighborhood::{build_graph, FiltrationMode};

    fn pipeline(points: Vec<Vec<f64>>, labels: Vec<u8>, max_dim: usize) -> SimplicialFiltration {
        let cloud = LabeledPointCloud::new(points, labels).unwrap();
        let graph = build_graph(
            &cloud,
            DistanceOracle::Euclidean(&cloud),
            FiltrationMode::Plain,
            None,
            cloud.len(),
        )
        .unwrap();
        expand(&one_skeleton(&graph, &cloud), max_dim)
    }

    #[test]
    fn grid_values_inclusive() {
        let grid = ScaleGrid::new(0.5, 1.5, 100).unwrap();
        let values = grid.values();
        assert_eq!(values.len(), 100);
        assert_eq!(values[0], 0.5);
        assert_eq!(values[99], 1.5);
        assert!(ScaleGrid::new(2.0, 1.0, 5).is_err());
        assert!(ScaleGrid::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn single_cross_pair() {
        let filt = pipeline(vec![vec![0.0], vec![3.0]], vec![0, 1], 2);
        let diagram = persistent_homology(&filt, 1, H0Convention::NontrivialH0).unwrap();
        let h0: Vec<_> = diagram.pairs_in_dim(0).collect();
        let nonzero: Vec<_> = h0.iter().filter(|p| !p.is_zero_persistence()).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!((nonzero[0].birth, nonzero[0].death), (3.0, f64::INFINITY));
        assert_eq!(diagram.pairs_in_dim(1).count(), 0);
    }

    #[test]
    fn unit_square_is_contractible_with_triangles() {
        let filt = pipeline(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]],
            vec![0, 1, 0, 1],
            3,
        );
        let diagram = persistent_homology(&filt, 1, H0Convention::NontrivialH0).unwrap();
        for theta in [1.0, 1.5, 10.0] {
            assert_eq!(diagram.betti_at(theta, 0), 1, "theta {theta}");
            assert_eq!(diagram.betti_at(theta, 1), 0, "theta {theta}");
        }
        assert_eq!(diagram.betti_at(0.99, 0), 0);
    }

    #[test]
    fn octagon_is_an_annulus_at_side_scale() {
        let r = 0.5 / (std::f64::consts::PI / 8.0).sin();
        let points: Vec<Vec<f64>> = (0..8)
            .map(|j| {
                let a = std::f64::consts::TAU * j as f64 / 8.0;
                vec![r * a.cos(), r * a.sin()]
            })
            .collect();
        let labels: Vec<u8> = (0..8).map(|j| (j % 2) as u8).collect();
        let filt = pipeline(points, labels, 2);
        let diagram = persistent_homology(&filt, 1, H0Convention::NontrivialH0).unwrap();
        // side length is 1 by construction (within float error)
        for theta in [1.0 + 1e-9, 1.5, 2.0] {
            assert_eq!(diagram.betti_at(theta, 0), 1, "theta {theta}");
            assert_eq!(diagram.betti_at(theta, 1), 1, "theta {theta}");
        }
    }

    #[test]
    fn all_convention_counts_singletons() {
        let filt = pipeline(
            vec![vec![0.0], vec![1.0], vec![50.0]],
            vec![0, 1, 0],
            2,
        );
        let all = persistent_homology(&filt, 0, H0Convention::All).unwrap();
        // at theta=2: component {0,1} plus both-singletons counting rules
        assert_eq!(all.betti_at(2.0, 0), 2);
        let nontrivial = persistent_homology(&filt, 0, H0Convention::NontrivialH0).unwrap();
        assert_eq!(nontrivial.betti_at(2.0, 0), 1);
        // vertex 2 connects to vertex 1 at distance 49 (cross edge)
        assert_eq!(all.betti_at(49.0, 0), 1);
        assert_eq!(nontrivial.betti_at(49.0, 0), 1);
        // below every edge nothing is nontrivial
        assert_eq!(nontrivial.betti_at(0.5, 0), 0);
        assert_eq!(all.betti_at(0.5, 0), 3);
    }

    #[test]
    fn nontrivial_h0_births_are_edge_values() {
        let filt = pipeline(
            vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![7.0, 0.0], vec![7.25, 0.0]],
            vec![0, 1, 0, 1],
            2,
        );
        let diagram = persistent_homology(&filt, 0, H0Convention::NontrivialH0).unwrap();
        let births: Vec<f64> = diagram
            .pairs_in_dim(0)
            .filter(|p| !p.is_zero_persistence())
            .map(|p| p.birth)
            .collect();
        let mut edge_values: Vec<f64> =
            filt.dim_simplices(1).values.to_vec();
        edge_values.dedup();
        for b in births {
            assert!(edge_values.contains(&b), "birth {b} not an edge value");
        }
    }

    #[test]
    fn invalid_filtration_is_reported() {
        // edge referencing a vertex that is missing from the 0-simplices
        let filt = SimplicialFiltration::from_simplices(
            2,
            vec![
                Simplex::new(vec![0], 0.0),
                Simplex::new(vec![1], 0.0),
                Simplex::new(vec![1, 2], 1.0),
            ],
            1,
        );
        assert!(matches!(
            persistent_homology(&filt, 0, H0Convention::All),
            Err(Error::InvalidFiltration { .. })
        ));
        // coface valued below its face
        let filt = SimplicialFiltration::from_simplices(
            2,
            vec![
                Simplex::new(vec![0], 0.0),
                Simplex::new(vec![1], 0.0),
                Simplex::new(vec![2], 0.0),
                Simplex::new(vec![0, 1], 2.0),
                Simplex::new(vec![0, 2], 0.5),
                Simplex::new(vec![1, 2], 0.5),
                Simplex::new(vec![0, 1, 2], 1.0),
            ],
            2,
        );
        assert!(matches!(
            persistent_homology(&filt, 1, H0Convention::All),
            Err(Error::InvalidFiltration { .. })
        ));
    }

    #[test]
    fn betti_curve_examples() {
        let diagram = PersistenceDiagram {
            pairs: vec![PersistencePair { dim: 0, birth: 1.0, death: f64::INFINITY }],
            convention: H0Convention::NontrivialH0,
        };
        let grid = ScaleGrid::new(0.5, 1.5, 3).unwrap();
        let curve = diagram.betti_curve(&grid, 0);
        assert_eq!(curve.counts, vec![0, 1, 1]);
        assert_eq!(curve.total(), 2);

        let empty = PersistenceDiagram { pairs: Vec::new(), convention: H0Convention::All };
        assert_eq!(empty.betti_curve(&grid, 0).counts, vec![0, 0, 0]);
        assert_eq!(empty.betti_curve(&grid, 1).counts, vec![0, 0, 0]);
    }

    #[test]
    fn half_open_interval_excludes_death() {
        let diagram = PersistenceDiagram {
            pairs: vec![PersistencePair { dim: 1, birth: 1.0, death: 2.0 }],
            convention: H0Convention::All,
        };
        assert_eq!(diagram.betti_at(1.0, 1), 1);
        assert_eq!(diagram.betti_at(1.999, 1), 1);
        assert_eq!(diagram.betti_at(2.0, 1), 0);
    }

    #[test]
    fn grid_refinement_preserves_shared_points() {
        let filt = pipeline(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]],
            vec![0, 1, 0, 1],
            2,
        );
        let diagram = persistent_homology(&filt, 1, H0Convention::NontrivialH0).unwrap();
        let coarse = ScaleGrid::new(0.0, 2.0, 5).unwrap();
        let fine = ScaleGrid::new(0.0, 2.0, 9).unwrap();
        let c0 = diagram.betti_curve(&coarse, 0);
        let f0 = diagram.betti_curve(&fine, 0);
        for (i, &theta) in coarse.values().iter().enumerate() {
            let j = fine.values().iter().position(|&v| v == theta).unwrap();
            assert_eq!(c0.counts[i], f0.counts[j]);
        }
    }

    #[test]
    fn diagram_json_marks_essential_deaths() {
        let diagram = PersistenceDiagram {
            pairs: vec![
                PersistencePair { dim: 0, birth: 1.0, death: f64::INFINITY },
                PersistencePair { dim: 1, birth: 1.0, death: 2.0 },
            ],
            convention: H0Convention::NontrivialH0,
        };
        let mut buf = Vec::new();
        diagram.write_json(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"inf\""));
        assert!(text.contains("2.0"));
    }
}
