//! Topological complexity measures and the closed-form theory calculators.
//!
//! The complexity of a labeled dataset is the sum of nontrivial Betti counts
//! over a scale grid (one total per homology dimension, plus their sum).
//! Summing over the discrete grid is a total-lifetime measure up to grid
//! spacing; essential classes are implicitly truncated at the grid's last
//! value.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cloud::{DistanceOracle, LabeledPointCloud};
use crate::error::{Error, Result};
use crate::filtration::boundary_filtration;
use crate::neighborhood::FiltrationMode;
use crate::persistence::{persistent_homology, H0Convention, ScaleGrid};

/// Grid-summed Betti totals for one dataset under one filtration mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRecord {
    pub h0_total: u64,
    pub h1_total: u64,
    pub combined: u64,
    pub grid: ScaleGrid,
    pub mode: FiltrationMode,
    pub k: usize,
    pub cap: usize,
}

impl ComplexityRecord {
    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut writer, self)?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    /// Score under one of the three measures.
    pub fn score(&self, measure: crate::selection::Measure) -> f64 {
        use crate::selection::Measure;
        match measure {
            Measure::Combined => self.combined as f64,
            Measure::H0 => self.h0_total as f64,
            Measure::H1 => self.h1_total as f64,
        }
    }
}

/// Runs the full pipeline (graph, filtration, persistence, Betti curves) and
/// sums the nontrivial Betti counts over the grid.
pub fn complexity(
    cloud: &LabeledPointCloud,
    oracle: DistanceOracle<'_>,
    mode: FiltrationMode,
    grid: &ScaleGrid,
    k: usize,
    cap: usize,
) -> Result<ComplexityRecord> {
    let filt = boundary_filtration(cloud, oracle, mode, k, cap, 2)?;
    let diagram = persistent_homology(&filt, 1, H0Convention::NontrivialH0)?;
    let h0_total = diagram.betti_curve(grid, 0).total();
    let h1_total = diagram.betti_curve(grid, 1).total();
    Ok(ComplexityRecord {
        h0_total,
        h1_total,
        combined: h0_total + h1_total,
        grid: grid.clone(),
        mode,
        k,
        cap,
    })
}

/// Inputs for the sample-size bound: mixture probability, per-class mass
/// lower bounds over two families of `l_a` and `l_b` sets, and failure
/// probability. For manifold covers, instantiate the set counts with
/// covering numbers and the mass bounds with the per-ball mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleBoundInputs {
    pub q: f64,
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub l_a: u64,
    pub l_b: u64,
    pub delta: f64,
}

impl SampleBoundInputs {
    pub fn new(q: f64, alpha_x: f64, alpha_y: f64, l_a: u64, l_b: u64, delta: f64) -> Self {
        SampleBoundInputs { q, alpha_x, alpha_y, l_a, l_b, delta }
    }

    /// Manifold-cover form: set counts are the r/2- and s/2-covering numbers
    /// and the mass bounds are the per-ball class masses.
    pub fn manifold_form(
        q: f64,
        mass_r2: f64,
        mass_s2: f64,
        covering_r2: u64,
        covering_s2: u64,
        delta: f64,
    ) -> Self {
        SampleBoundInputs {
            q,
            alpha_x: mass_r2,
            alpha_y: mass_s2,
            l_a: covering_r2,
            l_b: covering_s2,
            delta,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::invalid("q", "must lie in (0, 1)"));
        }
        for (name, a) in [("alpha_x", self.alpha_x), ("alpha_y", self.alpha_y)] {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::invalid(name, "must lie in (0, 1]"));
            }
        }
        for (name, l) in [("l_a", self.l_a), ("l_b", self.l_b)] {
            if l == 0 {
                return Err(Error::invalid(name, "must be >= 1"));
            }
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::invalid("delta", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Smallest sample count guaranteeing, with probability > 1 - delta, that
/// every set in both families is hit:
/// `ceil(max((ln 2l_a + ln 1/delta) / (alpha_x q),
///           (ln 2l_b + ln 1/delta) / (alpha_y (1 - q))))`.
/// Natural logarithms throughout.
pub fn sample_bound(inputs: &SampleBoundInputs) -> Result<u64> {
    inputs.validate()?;
    let log_inv_delta = (1.0 / inputs.delta).ln();
    let a = ((2.0 * inputs.l_a as f64).ln() + log_inv_delta) / (inputs.alpha_x * inputs.q);
    let b = ((2.0 * inputs.l_b as f64).ln() + log_inv_delta) / (inputs.alpha_y * (1.0 - inputs.q));
    Ok(a.max(b).ceil() as u64)
}

/// Geometry inputs for the manifold recovery conditions: reciprocal
/// condition number `tau` and the two density radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldConditionInputs {
    pub tau: f64,
    pub r: f64,
    pub s: f64,
}

impl ManifoldConditionInputs {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("tau", self.tau), ("r", self.r), ("s", self.s)] {
            if !(v > 0.0) {
                return Err(Error::invalid(name, "must be > 0"));
            }
        }
        Ok(())
    }
}

/// Result of checking the recovery conditions. The scale window is
/// reproduced from the printed closed form, whose two endpoints coincide;
/// `window_degenerate` is always set to make that explicit rather than
/// silently guessing a different formula. When `r` is too large relative to
/// `tau` the square root goes negative and no real window exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldConditionReport {
    pub r_ok: bool,
    pub epsilon_window: Option<(f64, f64)>,
    pub window_degenerate: bool,
}

/// Checks `r < (sqrt(9) - sqrt(8)) * tau` and evaluates the printed scale
/// window endpoints.
pub fn manifold_conditions(inputs: &ManifoldConditionInputs) -> Result<ManifoldConditionReport> {
    inputs.validate()?;
    let (r, tau) = (inputs.r, inputs.tau);
    let r_ok = r < (9.0f64.sqrt() - 8.0f64.sqrt()) * tau;
    let disc = r * r + tau * tau - 6.0 * tau * r;
    let epsilon_window = if disc >= 0.0 {
        let endpoint = ((r + tau) + disc.sqrt()) / 2.0;
        Some((endpoint, endpoint))
    } else {
        None
    };
    Ok(ManifoldConditionReport { r_ok, epsilon_window, window_degenerate: true })
}
