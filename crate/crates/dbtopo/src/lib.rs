//! Estimation of decision-boundary topology from labeled point clouds.
//!
//! The pipeline: build a capped cross-class neighborhood graph (plain or
//! locally scaled), add same-class 2-hop edges to form the one-skeleton of
//! the decision-boundary complex, clique-expand into a filtration, and read
//! off persistent homology over Z/2. On top of that sit Betti curves,
//! grid-summed complexity measures, the exact small-scale labeled Čech
//! oracle, closed-form sampling calculators, and a model-selection harness
//! that matches datasets to pre-trained models by topological complexity.
//!
//! See the `examples/` directory for one runnable walkthrough per
//! capability, or the `dbtopo` binary for the file-based interface.

pub mod cech;
pub mod cli;
pub mod cloud;
pub mod complexity;
pub mod error;
pub mod filtration;
pub mod neighborhood;
pub mod persistence;
pub mod render;
pub mod selection;

pub use cech::{labeled_cech, labeled_cech_union, LabeledCechParams};
pub use cloud::{
    generate, read_csv, write_csv, DistanceMatrix, DistanceOracle, LabeledPointCloud,
    SyntheticShape, SyntheticSpec,
};
pub use complexity::{
    complexity, manifold_conditions, sample_bound, ComplexityRecord, ManifoldConditionInputs,
    ManifoldConditionReport, SampleBoundInputs,
};
pub use error::{Error, Result};
pub use filtration::{
    boundary_filtration, expand, one_skeleton, OneSkeleton, Simplex, SimplicialFiltration,
};
pub use neighborhood::{build_graph, local_scales, CrossClassGraph, FiltrationMode, LocalScales};
pub use persistence::{
    persistent_homology, BettiCurve, H0Convention, PersistenceDiagram, PersistencePair, ScaleGrid,
};
pub use selection::{
    accuracy_gap, rank_models, AccuracyMatrix, CiMethod, Measure, ModelCatalog, SelectionReport,
    Subgroup,
};

/// Defaults used throughout the tooling: k = 5 local-scale neighbors,
/// a 20-neighbor cap, simplices up to dimension 2, and 100-step grids
/// (0..10 plain, 0.5..1.5 locally scaled).
pub mod defaults {
    pub const K: usize = 5;
    pub const CAP: usize = 20;
    pub const MAX_DIM: usize = 2;
    pub const GRID_STEPS: usize = 100;
    pub const PLAIN_GRID: (f64, f64) = (0.0, 10.0);
    pub const LOCALLY_SCALED_GRID: (f64, f64) = (0.5, 1.5);
    pub const SELECTION_M: usize = 5;
}
