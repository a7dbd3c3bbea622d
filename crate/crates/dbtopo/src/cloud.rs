//! Labeled point clouds: the universal input of the pipeline.
//!
//! A cloud is a list of points in `R^d` with binary class labels. This module
//! also provides the distance oracle (Euclidean or precomputed), seeded
//! synthetic generators for the benchmark shapes, and CSV round-tripping.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points in `R^d` with labels in `{0, 1}`. Point ids are the indices
/// `0..n`, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPointCloud {
    points: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

impl LabeledPointCloud {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::invalid(
                "labels",
                format!("{} labels for {} points", labels.len(), points.len()),
            ));
        }
        if let Some(first) = points.first() {
            if first.is_empty() {
                return Err(Error::invalid("points", "points must have dimension >= 1"));
            }
            let d = first.len();
            if let Some(bad) = points.iter().position(|p| p.len() != d) {
                return Err(Error::invalid(
                    "points",
                    format!("point {bad} has dimension {}, expected {d}", points[bad].len()),
                ));
            }
        }
        if let Some(bad) = labels.iter().position(|&l| l > 1) {
            return Err(Error::invalid(
                "labels",
                format!("label {} at index {bad} is not in {{0, 1}}", labels[bad]),
            ));
        }
        Ok(Self { points, labels })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Ambient dimension; 0 for an empty cloud.
    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Number of points in class 0 and class 1.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    pub fn class_indices(&self, label: u8) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == label).collect()
    }

    /// Clones the coordinates of one class, e.g. as input for the Čech oracle.
    pub fn class_points(&self, label: u8) -> Vec<Vec<f64>> {
        self.class_indices(label).into_iter().map(|i| self.points[i].clone()).collect()
    }

    pub fn both_classes_nonempty(&self) -> bool {
        let [a, b] = self.class_counts();
        a > 0 && b > 0
    }

    /// A copy with point ids shuffled by `perm` (new id `i` = old id `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.len() {
            return Err(Error::invalid("perm", "length mismatch"));
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::invalid("perm", "not a permutation"));
            }
            seen[p] = true;
        }
        Ok(Self {
            points: perm.iter().map(|&p| self.points[p].clone()).collect(),
            labels: perm.iter().map(|&p| self.labels[p]).collect(),
        })
    }

    /// A copy with all coordinates multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            points: self.points.iter().map(|p| p.iter().map(|x| x * c).collect()).collect(),
            labels: self.labels.clone(),
        }
    }
}

/// Dense symmetric distance matrix with zero diagonal, for inputs whose
/// feature-space metric is computed elsewhere.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(
                    "distances",
                    format!("row {i} has {} entries, expected {n}", row.len()),
                ));
            }
        }
        for i in 0..n {
            if rows[i][i] != 0.0 {
                return Err(Error::invalid("distances", format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let d = rows[i][j];
                if !(d >= 0.0) {
                    return Err(Error::invalid(
                        "distances",
                        format!("negative or NaN entry at ({i}, {j})"),
                    ));
                }
                if d != rows[j][i] {
                    return Err(Error::invalid("distances", format!("asymmetry at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, data: rows.into_iter().flatten().collect() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Reads a headerless n-by-n CSV matrix.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let mut row = Vec::with_capacity(record.len());
            for field in record.iter() {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line,
                    reason: format!("non-numeric distance entry {field:?}"),
                })?;
                row.push(v);
            }
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    pub fn read_csv_path(path: &Path) -> Result<Self> {
        Self::read_csv(BufReader::new(File::open(path)?))
    }
}

/// Where pairwise distances come from.
#[derive(Debug, Clone, Copy)]
pub enum DistanceOracle<'a> {
    Euclidean(&'a LabeledPointCloud),
    Precomputed(&'a DistanceMatrix),
}

impl DistanceOracle<'_> {
    pub fn n(&self) -> usize {
        match self {
            DistanceOracle::Euclidean(c) => c.len(),
            DistanceOracle::Precomputed(m) => m.n(),
        }
    }

    /// Distance between points `i` and `j`, with bounds checking.
    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.n();
        for idx in [i, j] {
            if idx >= n {
                return Err(Error::IndexOutOfRange { index: idx, len: n });
            }
        }
        Ok(self.dist(i, j))
    }

    pub(crate) fn dist(&self, i: usize, j: usize) -> f64 {
        match self {
            DistanceOracle::Euclidean(c) => {
                let (a, b) = (c.point(i), c.point(j));
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            }
            DistanceOracle::Precomputed(m) => m.get(i, j),
        }
    }
}

/// One disk-inside-annulus pair; the disk takes one label, the annulus the
/// other, so the decision boundary between them is a circle.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CirclePairSpec {
    pub center: [f64; 2],
    pub disk_radius: f64,
    pub annulus_inner: f64,
    pub annulus_outer: f64,
    pub disk_count: usize,
    pub annulus_count: usize,
}

impl CirclePairSpec {
    /// Pair with boundary circle of radius `r`, using the calibrated shape
    /// ratios (disk r/2, annulus 1.5r..2r).
    pub fn with_boundary_radius(center: [f64; 2], r: f64, disk_count: usize, annulus_count: usize) -> Self {
        Self {
            center,
            disk_radius: 0.5 * r,
            annulus_inner: 1.5 * r,
            annulus_outer: 2.0 * r,
            disk_count,
            annulus_count,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.disk_radius > 0.0) {
            return Err(Error::invalid("disk_radius", "must be > 0"));
        }
        if !(self.annulus_inner > self.disk_radius) {
            return Err(Error::invalid("annulus_inner", "must exceed disk_radius"));
        }
        if !(self.annulus_outer > self.annulus_inner) {
            return Err(Error::invalid("annulus_outer", "must exceed annulus_inner"));
        }
        Ok(())
    }
}

/// Shape family of a synthetic dataset.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SyntheticShape {
    /// Two disk/annulus pairs of very different size and density; boundary
    /// homotopic to two circles.
    TwoCircles { pairs: Vec<CirclePairSpec> },
    /// Five groups of five pairs with boundary radii near the group radius;
    /// boundary homotopic to 25 circles of widely varying size.
    TwentyFiveCircles {
        group_radii: Vec<f64>,
        pairs_per_group: usize,
        disk_count: usize,
        annulus_count: usize,
    },
    /// Single-class noisy samples of a circle.
    NoisyCircle { radius: f64, noise: f64, count: usize },
    /// A disk of one class inside an annulus of the other, plus a second
    /// far-away annulus of the outer class: the per-class topology differs
    /// from the decision boundary's, which is a single circle.
    ClassTopologyCounterexample {
        disk_radius: f64,
        annulus_inner: f64,
        annulus_outer: f64,
        far_center: [f64; 2],
        disk_count: usize,
        annulus_count: usize,
        far_count: usize,
    },
}

/// A fully seeded recipe for a synthetic labeled cloud.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SyntheticSpec {
    #[serde(flatten)]
    pub shape: SyntheticShape,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Default two-circles benchmark: a small dense pair and a large sparse
    /// one, so no single plain scale captures both boundaries.
    pub fn two_circles(seed: u64) -> Self {
        SyntheticSpec {
            shape: SyntheticShape::TwoCircles {
                pairs: vec![
                    CirclePairSpec::with_boundary_radius([0.0, 0.0], 0.4, 160, 280),
                    CirclePairSpec::with_boundary_radius([14.0, 0.0], 2.0, 110, 190),
                ],
            },
            seed,
        }
    }

    /// Default 25-circles benchmark: five size groups of five pairs each.
    pub fn twenty_five_circles(seed: u64) -> Self {
        SyntheticSpec {
            shape: SyntheticShape::TwentyFiveCircles {
                group_radii: vec![1.0, 2.0, 3.0, 4.0, 5.0],
                pairs_per_group: 5,
                disk_count: 55,
                annulus_count: 110,
            },
            seed,
        }
    }

    pub fn noisy_circle(seed: u64) -> Self {
        SyntheticSpec {
            shape: SyntheticShape::NoisyCircle { radius: 1.0, noise: 0.05, count: 60 },
            seed,
        }
    }

    pub fn class_topology_counterexample(seed: u64) -> Self {
        SyntheticSpec {
            shape: SyntheticShape::ClassTopologyCounterexample {
                disk_radius: 0.5,
                annulus_inner: 1.5,
                annulus_outer: 2.0,
                far_center: [40.0, 0.0],
                disk_count: 60,
                annulus_count: 120,
                far_count: 120,
            },
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        match &self.shape {
            SyntheticShape::TwoCircles { pairs } => {
                if pairs.is_empty() {
                    return Err(Error::invalid("pairs", "need at least one pair"));
                }
                pairs.iter().try_for_each(CirclePairSpec::validate)
            }
            SyntheticShape::TwentyFiveCircles { group_radii, pairs_per_group, .. } => {
                if group_radii.is_empty() {
                    return Err(Error::invalid("group_radii", "need at least one group"));
                }
                if let Some(&r) = group_radii.iter().find(|&&r| !(r > 0.0)) {
                    return Err(Error::invalid("group_radii", format!("radius {r} must be > 0")));
                }
                if *pairs_per_group == 0 {
                    return Err(Error::invalid("pairs_per_group", "must be >= 1"));
                }
                Ok(())
            }
            SyntheticShape::NoisyCircle { radius, noise, .. } => {
                if !(*radius > 0.0) {
                    return Err(Error::invalid("radius", "must be > 0"));
                }
                if !(*noise >= 0.0) {
                    return Err(Error::invalid("noise", "must be >= 0"));
                }
                Ok(())
            }
            SyntheticShape::ClassTopologyCounterexample {
                disk_radius,
                annulus_inner,
                annulus_outer,
                ..
            } => {
                if !(*disk_radius > 0.0) {
                    return Err(Error::invalid("disk_radius", "must be > 0"));
                }
                if !(*annulus_inner > *disk_radius) {
                    return Err(Error::invalid("annulus_inner", "must exceed disk_radius"));
                }
                if !(*annulus_outer > *annulus_inner) {
                    return Err(Error::invalid("annulus_outer", "must exceed annulus_inner"));
                }
                Ok(())
            }
        }
    }

    /// Decision-boundary Betti numbers `(b0, b1)` implied by the shape, or
    /// `None` for single-class shapes that have no decision boundary.
    pub fn ground_truth(&self) -> Option<(usize, usize)> {
        match &self.shape {
            SyntheticShape::TwoCircles { pairs } => Some((pairs.len(), pairs.len())),
            SyntheticShape::TwentyFiveCircles { group_radii, pairs_per_group, .. } => {
                let n = group_radii.len() * pairs_per_group;
                Some((n, n))
            }
            SyntheticShape::NoisyCircle { .. } => None,
            SyntheticShape::ClassTopologyCounterexample { .. } => Some((1, 1)),
        }
    }

    pub fn read_json_path(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }

    pub fn write_json_path(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }
}

// Quasi-regular sampling of an annular region: concentric rings with
// stratified, jittered angles. Keeps rims evenly covered so the recovered
// topology is stable for moderate sample counts.
fn sample_annular(
    rng: &mut ChaCha8Rng,
    points: &mut Vec<Vec<f64>>,
    center: [f64; 2],
    r_lo: f64,
    r_hi: f64,
    count: usize,
) {
    if count == 0 {
        return;
    }
    let area = std::f64::consts::PI * (r_hi * r_hi - r_lo * r_lo);
    let spacing = (area / count as f64).sqrt();
    let rings = (((r_hi - r_lo) / spacing).round() as usize).max(1);
    let width = (r_hi - r_lo) / rings as f64;

    // Allocate points to rings proportionally to ring area (largest remainder).
    let mid = |j: usize| r_lo + (j as f64 + 0.5) * width;
    let total_weight: f64 = (0..rings).map(mid).sum();
    let mut alloc = vec![0usize; rings];
    let mut frac: Vec<(f64, usize)> = Vec::with_capacity(rings);
    let mut assigned = 0;
    for (j, a) in alloc.iter_mut().enumerate() {
        let share = count as f64 * mid(j) / total_weight;
        *a = share.floor() as usize;
        assigned += *a;
        frac.push((share - share.floor(), j));
    }
    frac.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for &(_, j) in frac.iter().take(count - assigned) {
        alloc[j] += 1;
    }

    for (j, &n_j) in alloc.iter().enumerate() {
        if n_j == 0 {
            continue;
        }
        let phase: f64 = rng.random();
        for i in 0..n_j {
            let da: f64 = rng.random::<f64>() - 0.5;
            let dr: f64 = rng.random::<f64>() - 0.5;
            let angle = (i as f64 + 0.5 + 0.9 * da) / n_j as f64 * std::f64::consts::TAU
                + phase * std::f64::consts::TAU;
            let radius = mid(j) + 0.9 * dr * width;
            points.push(vec![
                center[0] + radius * angle.cos(),
                center[1] + radius * angle.sin(),
            ]);
        }
    }
}

fn sample_pair(
    rng: &mut ChaCha8Rng,
    points: &mut Vec<Vec<f64>>,
    labels: &mut Vec<u8>,
    pair: &CirclePairSpec,
    disk_label: u8,
) {
    sample_annular(rng, points, pair.center, 0.0, pair.disk_radius, pair.disk_count);
    labels.extend(std::iter::repeat(disk_label).take(pair.disk_count));
    sample_annular(rng, points, pair.center, pair.annulus_inner, pair.annulus_outer, pair.annulus_count);
    labels.extend(std::iter::repeat(1 - disk_label).take(pair.annulus_count));
}

/// Centers for the 25-circles layout: one row per size group, spaced so that
/// the capped neighbor graph never links distinct pairs.
fn group_layout(group_radii: &[f64], pairs_per_group: usize) -> Vec<(usize, [f64; 2])> {
    let mut centers = Vec::new();
    let mut y = 0.0;
    let mut prev_outer = 0.0f64;
    for (g, &r) in group_radii.iter().enumerate() {
        let outer = 2.0 * r;
        if g > 0 {
            y += 2.0 * (prev_outer + outer);
        }
        let spacing = 8.0 * r;
        for p in 0..pairs_per_group {
            centers.push((g, [p as f64 * spacing, y]));
        }
        prev_outer = outer;
    }
    centers
}

/// Deterministically samples a labeled cloud from `spec`.
pub fn generate(spec: &SyntheticSpec) -> Result<LabeledPointCloud> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut points = Vec::new();
    let mut labels = Vec::new();
    match &spec.shape {
        SyntheticShape::TwoCircles { pairs } => {
            for pair in pairs {
                sample_pair(&mut rng, &mut points, &mut labels, pair, 0);
            }
        }
        SyntheticShape::TwentyFiveCircles { group_radii, pairs_per_group, disk_count, annulus_count } => {
            for (g, center) in group_layout(group_radii, *pairs_per_group) {
                let pair = CirclePairSpec::with_boundary_radius(
                    center,
                    group_radii[g],
                    *disk_count,
                    *annulus_count,
                );
                sample_pair(&mut rng, &mut points, &mut labels, &pair, 0);
            }
        }
        SyntheticShape::NoisyCircle { radius, noise, count } => {
            let phase: f64 = rng.random();
            for i in 0..*count {
                let da: f64 = rng.random::<f64>() - 0.5;
                let angle = (i as f64 + 0.5 + 0.9 * da) / *count as f64 * std::f64::consts::TAU
                    + phase * std::f64::consts::TAU;
                // Box-Muller; one normal draw per point, two uniforms consumed.
                let (u1, u2): (f64, f64) = (rng.random(), rng.random());
                let normal = (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                let r = radius + noise * normal;
                points.push(vec![r * angle.cos(), r * angle.sin()]);
                labels.push(0);
            }
        }
        SyntheticShape::ClassTopologyCounterexample {
            disk_radius,
            annulus_inner,
            annulus_outer,
            far_center,
            disk_count,
            annulus_count,
            far_count,
        } => {
            sample_annular(&mut rng, &mut points, [0.0, 0.0], 0.0, *disk_radius, *disk_count);
            labels.extend(std::iter::repeat(1).take(*disk_count));
            sample_annular(&mut rng, &mut points, [0.0, 0.0], *annulus_inner, *annulus_outer, *annulus_count);
            labels.extend(std::iter::repeat(0).take(*annulus_count));
            sample_annular(&mut rng, &mut points, *far_center, *annulus_inner, *annulus_outer, *far_count);
            labels.extend(std::iter::repeat(0).take(*far_count));
        }
    }
    LabeledPointCloud::new(points, labels)
}

/// Writes a cloud as CSV with an `x0,..,x{d-1},label` header.
pub fn write_csv<W: Write>(cloud: &LabeledPointCloud, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let d = cloud.dim();
    let mut header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    header.push("label".to_string());
    wtr.write_record(&header)?;
    let mut record = Vec::with_capacity(d + 1);
    for i in 0..cloud.len() {
        record.clear();
        for x in cloud.point(i) {
            // `{}` for f64 prints the shortest representation that round-trips.
            record.push(format!("{x}"));
        }
        record.push(cloud.label(i).to_string());
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_csv_path(cloud: &LabeledPointCloud, path: &Path) -> Result<()> {
    write_csv(cloud, BufWriter::new(File::create(path)?))
}

/// Reads a cloud from CSV: `d` coordinate columns then one integer label
/// column. Raw label values may be any two distinct integers; they are
/// mapped to `{0, 1}` by ascending value.
pub fn read_csv<R: Read>(reader: R, has_header: bool) -> Result<LabeledPointCloud> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .from_reader(reader);
    let mut coords: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<i64> = Vec::new();
    let mut distinct: Vec<i64> = Vec::new();
    let mut width = None;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() < 2 {
            return Err(Error::Parse {
                line,
                reason: format!("row has {} fields; need coordinates plus a label", record.len()),
            });
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Parse {
                line,
                reason: format!("row has {} fields, expected {w}", record.len()),
            });
        }
        let mut row = Vec::with_capacity(w - 1);
        for (col, field) in record.iter().take(w - 1).enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line,
                reason: format!("non-numeric coordinate {field:?} in column {col}"),
            })?;
            row.push(v);
        }
        let label_field = record.get(w - 1).unwrap();
        let raw: i64 = label_field.trim().parse().map_err(|_| Error::Parse {
            line,
            reason: format!("non-integer label {label_field:?}"),
        })?;
        if !distinct.contains(&raw) {
            if distinct.len() == 2 {
                return Err(Error::Parse {
                    line,
                    reason: format!(
                        "third distinct label {raw} (already saw {} and {})",
                        distinct[0], distinct[1]
                    ),
                });
            }
            distinct.push(raw);
        }
        coords.push(row);
        raw_labels.push(raw);
    }
    distinct.sort_unstable();
    let labels = raw_labels
        .into_iter()
        .map(|raw| distinct.iter().position(|&d| d == raw).unwrap() as u8)
        .collect();
    LabeledPointCloud::new(coords, labels)
}

pub fn read_csv_path(path: &Path, has_header: bool) -> Result<LabeledPointCloud> {
    read_csv(BufReader::new(File::open(path)?), has_header)
}
