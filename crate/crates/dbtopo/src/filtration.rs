//! Decision-boundary Vietoris-Rips filtrations.
//!
//! The one-skeleton is the cross-class graph plus a same-class edge for every
//! pair of points sharing a cross-class neighbor (a length-2 walk). A 2-hop
//! edge's value is the earliest threshold at which such a walk exists:
//! the minimum over shared witnesses of the larger of the two cross values.
//! Higher simplices come from standard clique expansion, each valued at the
//! maximum of its edge values, so faces always precede cofaces.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;

use crate::cloud::LabeledPointCloud;
use crate::error::Result;
use crate::neighborhood::CrossClassGraph;
use crate::persistence::ScaleGrid;

/// A single simplex: strictly increasing vertex ids plus a filtration value.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<u32>,
    pub value: f64,
}

impl Simplex {
    pub fn new(mut vertices: Vec<u32>, value: f64) -> Self {
        vertices.sort_unstable();
        vertices.dedup();
        Simplex { vertices, value }
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// Original bipartite edge between opposite classes.
    Cross,
    /// Same-class edge induced by a length-2 walk.
    TwoHop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonEdge {
    pub u: u32,
    pub v: u32,
    pub value: f64,
    pub kind: EdgeKind,
}

/// The full edge set of the decision-boundary complex, sorted by
/// `(value, u, v)`.
#[derive(Debug, Clone)]
pub struct OneSkeleton {
    n: usize,
    edges: Vec<SkeletonEdge>,
}

impl OneSkeleton {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[SkeletonEdge] {
        &self.edges
    }
}

/// Adds 2-hop same-class edges to the cross-class graph.
pub fn one_skeleton(graph: &CrossClassGraph, cloud: &LabeledPointCloud) -> OneSkeleton {
    debug_assert_eq!(graph.n(), cloud.len());
    let n = graph.n();
    let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for e in graph.edges() {
        adj[e.i as usize].push((e.j, e.value));
        adj[e.j as usize].push((e.i, e.value));
    }

    // min over witnesses of max(value(i,w), value(w,j))
    let mut two_hop: HashMap<u64, f64> = HashMap::new();
    for witness_adj in &adj {
        for (a, &(i, vi)) in witness_adj.iter().enumerate() {
            for &(j, vj) in &witness_adj[a + 1..] {
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                let via = vi.max(vj);
                two_hop
                    .entry((lo as u64) << 32 | hi as u64)
                    .and_modify(|v| *v = v.min(via))
                    .or_insert(via);
            }
        }
    }

    let mut edges: Vec<SkeletonEdge> = Vec::with_capacity(graph.edges().len() + two_hop.len());
    for e in graph.edges() {
        debug_assert_ne!(cloud.label(e.i as usize), cloud.label(e.j as usize));
        edges.push(SkeletonEdge { u: e.i, v: e.j, value: e.value, kind: EdgeKind::Cross });
    }
    for (key, value) in two_hop {
        let (u, v) = ((key >> 32) as u32, key as u32);
        debug_assert_eq!(cloud.label(u as usize), cloud.label(v as usize));
        edges.push(SkeletonEdge { u, v, value, kind: EdgeKind::TwoHop });
    }
    edges.sort_unstable_by(|a, b| {
        a.value.partial_cmp(&b.value).unwrap().then(a.u.cmp(&b.u)).then(a.v.cmp(&b.v))
    });
    OneSkeleton { n, edges }
}

/// Simplices of one dimension, stored flat: `dim + 1` vertex ids per simplex,
/// sorted by `(value, lexicographic vertices)`.
#[derive(Debug, Clone, Default)]
pub struct DimSimplices {
    pub flat: Vec<u32>,
    pub values: Vec<f64>,
}

impl DimSimplices {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vertices(&self, dim: usize, idx: usize) -> &[u32] {
        let w = dim + 1;
        &self.flat[idx * w..(idx + 1) * w]
    }
}

/// An ordered filtration of simplices up to `max_dim`. Every point appears
/// as a 0-simplex at value 0. The global filtration order is
/// `(value, dim, lexicographic vertices)`.
#[derive(Debug, Clone)]
pub struct SimplicialFiltration {
    n: usize,
    max_dim: usize,
    dims: Vec<DimSimplices>,
    grid: Option<ScaleGrid>,
}

/// Borrowed view of one simplex during iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexRef<'a> {
    pub vertices: &'a [u32],
    pub value: f64,
}

impl SimplexRef<'_> {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// All simplices present at one threshold, split by dimension.
#[derive(Debug, Clone)]
pub struct ComplexSnapshot {
    pub by_dim: Vec<Vec<Simplex>>,
}

impl ComplexSnapshot {
    pub fn simplex_count(&self) -> usize {
        self.by_dim.iter().map(Vec::len).sum()
    }
}

impl SimplicialFiltration {
    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn grid(&self) -> Option<&ScaleGrid> {
        self.grid.as_ref()
    }

    pub fn with_grid(mut self, grid: ScaleGrid) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn simplex_count(&self, dim: usize) -> usize {
        self.dims.get(dim).map_or(0, DimSimplices::len)
    }

    pub fn dim_simplices(&self, dim: usize) -> &DimSimplices {
        &self.dims[dim]
    }

    /// Builds a filtration from explicit simplices (vertices need not be
    /// pre-sorted). Missing vertices are not synthesized; tests use this to
    /// assemble malformed inputs on purpose.
    pub fn from_simplices(n: usize, simplices: Vec<Simplex>, max_dim: usize) -> Self {
        let mut dims: Vec<Vec<(Vec<u32>, f64)>> = vec![Vec::new(); max_dim + 1];
        for s in simplices {
            let d = s.dim();
            if d <= max_dim {
                dims[d].push((s.vertices, s.value));
            }
        }
        let dims = dims
            .into_iter()
            .map(|mut list| {
                list.sort_unstable_by(|a, b| {
                    a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0))
                });
                let mut flat = Vec::with_capacity(list.len() * 2);
                let mut values = Vec::with_capacity(list.len());
                for (verts, value) in list {
                    flat.extend_from_slice(&verts);
                    values.push(value);
                }
                DimSimplices { flat, values }
            })
            .collect();
        SimplicialFiltration { n, max_dim, dims, grid: None }
    }

    /// All simplices with value at most `theta`, monotone in `theta`.
    pub fn complex_at(&self, theta: f64) -> ComplexSnapshot {
        let by_dim = (0..=self.max_dim)
            .map(|d| {
                let ds = &self.dims[d];
                let cut = ds.values.partition_point(|&v| v <= theta);
                (0..cut)
                    .map(|i| Simplex {
                        vertices: ds.vertices(d, i).to_vec(),
                        value: ds.values[i],
                    })
                    .collect()
            })
            .collect();
        ComplexSnapshot { by_dim }
    }

    /// Iterates simplices in global filtration order.
    pub fn iter(&self) -> impl Iterator<Item = SimplexRef<'_>> {
        let mut cursors = vec![0usize; self.dims.len()];
        std::iter::from_fn(move || {
            let mut best: Option<(usize, f64)> = None;
            for (d, &c) in cursors.iter().enumerate() {
                if c < self.dims[d].len() {
                    let v = self.dims[d].values[c];
                    // ties resolved by dimension; lexicographic order holds
                    // within a dimension already
                    if best.map_or(true, |(_, bv)| v < bv) {
                        best = Some((d, v));
                    }
                }
            }
            let (d, value) = best?;
            let idx = cursors[d];
            cursors[d] += 1;
            Some(SimplexRef { vertices: self.dims[d].vertices(d, idx), value })
        })
    }

    /// CSV rows `(value, v0, v1, ...)` in filtration order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().flexible(true).from_writer(writer);
        for s in self.iter() {
            let mut record = vec![format!("{}", s.value)];
            record.extend(s.vertices.iter().map(u32::to_string));
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Clique-expands the one-skeleton into a filtration with simplices up to
/// `max_dim`. Simplex value = max over edge values, ties ordered by
/// `(value, dim, lexicographic vertices)`.
pub fn expand(skeleton: &OneSkeleton, max_dim: usize) -> SimplicialFiltration {
    let max_dim = max_dim.max(1);
    let n = skeleton.n();
    let mut dims: Vec<DimSimplices> = Vec::with_capacity(max_dim + 1);
    dims.push(DimSimplices { flat: (0..n as u32).collect(), values: vec![0.0; n] });

    // Sorted adjacency with edge values for O(log) lookups.
    let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for e in skeleton.edges() {
        adj[e.u as usize].push((e.v, e.value));
        adj[e.v as usize].push((e.u, e.value));
    }
    for list in &mut adj {
        list.sort_unstable_by_key(|&(v, _)| v);
    }
    let mut edges: Vec<(Vec<u32>, f64)> = skeleton
        .edges()
        .iter()
        .map(|e| (vec![e.u, e.v], e.value))
        .collect();
    sort_dim(&mut edges);
    dims.push(flatten(edges.iter()));

    let mut frontier = edges;
    for _dim in 2..=max_dim {
        let mut next: Vec<(Vec<u32>, f64)> = frontier
            .par_iter()
            .flat_map_iter(|(verts, value)| {
                let last = *verts.last().unwrap();
                // candidates: common neighbors of all vertices, above the
                // largest vertex (each clique enumerated exactly once)
                let base = &adj[verts[0] as usize];
                let start = base.partition_point(|&(v, _)| v <= last);
                let mut out = Vec::new();
                'cand: for &(c, v0) in &base[start..] {
                    let mut value_new: f64 = value.max(v0);
                    for &u in &verts[1..] {
                        let list = &adj[u as usize];
                        match list.binary_search_by_key(&c, |&(v, _)| v) {
                            Ok(pos) => value_new = value_new.max(list[pos].1),
                            Err(_) => continue 'cand,
                        }
                    }
                    let mut vs = Vec::with_capacity(verts.len() + 1);
                    vs.extend_from_slice(verts);
                    vs.push(c);
                    out.push((vs, value_new));
                }
                out
            })
            .collect();
        sort_dim(&mut next);
        dims.push(flatten(next.iter()));
        frontier = next;
        if frontier.is_empty() {
            // fill remaining dims with empties
            while dims.len() <= max_dim {
                dims.push(DimSimplices::default());
            }
            break;
        }
    }
    while dims.len() <= max_dim {
        dims.push(DimSimplices::default());
    }
    SimplicialFiltration { n, max_dim, dims, grid: None }
}

/// Convenience for the common pipeline: local scales (when needed), capped
/// cross-class graph, one-skeleton, clique expansion.
pub fn boundary_filtration(
    cloud: &LabeledPointCloud,
    oracle: crate::cloud::DistanceOracle<'_>,
    mode: crate::neighborhood::FiltrationMode,
    k: usize,
    cap: usize,
    max_dim: usize,
) -> Result<SimplicialFiltration> {
    use crate::neighborhood::{build_graph, local_scales, FiltrationMode};
    let scales = match mode {
        FiltrationMode::Plain => None,
        FiltrationMode::LocallyScaled => Some(local_scales(cloud, oracle, k)?),
    };
    let graph = build_graph(cloud, oracle, mode, scales.as_ref(), cap)?;
    Ok(expand(&one_skeleton(&graph, cloud), max_dim))
}

fn sort_dim(list: &mut [(Vec<u32>, f64)]) {
    list.sort_unstable_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
}

fn flatten<'a>(list: impl Iterator<Item = &'a (Vec<u32>, f64)>) -> DimSimplices {
    let mut flat = Vec::new();
    let mut values = Vec::new();
    for (verts, value) in list {
        flat.extend_from_slice(verts);
        values.push(*value);
    }
    DimSimplices { flat, values }
}
