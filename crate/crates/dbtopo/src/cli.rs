//! Command-line front end. All commands are deterministic given their
//! inputs and flags; worker counts only affect wall time, never output.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cloud::{self, DistanceMatrix, DistanceOracle, LabeledPointCloud, SyntheticSpec};
use crate::complexity::complexity;
use crate::error::{Error, Result};
use crate::filtration::boundary_filtration;
use crate::neighborhood::FiltrationMode;
use crate::persistence::{persistent_homology, H0Convention, ScaleGrid};
use crate::render::render_complex_svg;
use crate::selection::{accuracy_gap, AccuracyMatrix, CiMethod, Measure, ModelCatalog, Subgroup};

#[derive(Debug, Parser)]
#[command(name = "dbtopo", version, about = "Persistent homology of decision boundaries")]
pub struct Cli {
    /// Cap on worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Emit errors as JSON on stderr.
    #[arg(long, global = true)]
    error_json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Plain,
    LocallyScaled,
}

impl From<ModeArg> for FiltrationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Plain => FiltrationMode::Plain,
            ModeArg::LocallyScaled => FiltrationMode::LocallyScaled,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConventionArg {
    All,
    NontrivialH0,
}

impl From<ConventionArg> for H0Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::All => H0Convention::All,
            ConventionArg::NontrivialH0 => H0Convention::NontrivialH0,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MeasureArg {
    Combined,
    H0,
    H1,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::Combined => Measure::Combined,
            MeasureArg::H0 => Measure::H0,
            MeasureArg::H1 => Measure::H1,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SubgroupArg {
    All,
    Lower,
    Higher,
}

impl From<SubgroupArg> for Subgroup {
    fn from(s: SubgroupArg) -> Self {
        match s {
            SubgroupArg::All => Subgroup::All,
            SubgroupArg::Lower => Subgroup::Lower,
            SubgroupArg::Higher => Subgroup::Higher,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CiArg {
    Normal,
    Student,
}

impl From<CiArg> for CiMethod {
    fn from(c: CiArg) -> Self {
        match c {
            CiArg::Normal => CiMethod::Normal,
            CiArg::Student => CiMethod::Student,
        }
    }
}

/// Pipeline parameters shared by the persistence/complexity/render commands.
#[derive(Debug, Args)]
struct PipelineArgs {
    /// Labeled cloud CSV (coordinates then label column).
    #[arg(long)]
    cloud: PathBuf,
    /// Treat the cloud CSV as headerless.
    #[arg(long)]
    no_header: bool,
    /// Optional precomputed n-by-n distance matrix CSV (headerless).
    #[arg(long)]
    distances: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "locally-scaled")]
    mode: ModeArg,
    /// Neighbors for the local scale.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Per-point neighbor cap before symmetrization.
    #[arg(long, default_value_t = 20)]
    cap: usize,
    /// Maximum simplex dimension.
    #[arg(long, default_value_t = 2)]
    max_dim: usize,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Grid start (default 0 for plain, 0.5 for locally-scaled).
    #[arg(long)]
    grid_start: Option<f64>,
    /// Grid stop (default 10 for plain, 1.5 for locally-scaled).
    #[arg(long)]
    grid_stop: Option<f64>,
    #[arg(long, default_value_t = 100)]
    grid_steps: usize,
}

impl GridArgs {
    fn resolve(&self, mode: FiltrationMode) -> Result<ScaleGrid> {
        let (d_start, d_stop) = match mode {
            FiltrationMode::Plain => (0.0, 10.0),
            FiltrationMode::LocallyScaled => (0.5, 1.5),
        };
        ScaleGrid::new(
            self.grid_start.unwrap_or(d_start),
            self.grid_stop.unwrap_or(d_stop),
            self.grid_steps,
        )
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a synthetic labeled cloud from a JSON spec.
    Generate {
        /// Spec JSON path.
        #[arg(long)]
        spec: PathBuf,
        /// Output cloud CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute a persistence diagram and Betti curves for a cloud.
    Persistence {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value = "nontrivial-h0")]
        convention: ConventionArg,
        /// Directory for diagram.json and betti_h*.csv.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Compute grid-summed topological complexity for a cloud.
    Complexity {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Output record JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank catalog models against datasets and report accuracy gaps.
    Select {
        /// Model catalog CSV: (model_id, h0_total, h1_total).
        #[arg(long)]
        catalog: PathBuf,
        /// Catalog is a pairwise table (class_a, class_b, h0_total, h1_total).
        #[arg(long)]
        pair_table: bool,
        /// Dataset scores CSV, same format as the catalog.
        #[arg(long)]
        datasets: PathBuf,
        /// Datasets file is a pairwise table.
        #[arg(long)]
        datasets_pair_table: bool,
        /// Optional accuracy matrix CSV: (model_id, dataset_id, accuracy).
        #[arg(long)]
        accuracy: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "combined")]
        measure: MeasureArg,
        /// Number of closest/farthest models per dataset.
        #[arg(long, default_value_t = 5)]
        m: usize,
        #[arg(long, value_enum, default_value = "all")]
        subgroup: SubgroupArg,
        /// Drop each dataset's own model before ranking.
        #[arg(long)]
        exclude_self: bool,
        #[arg(long, value_enum, default_value = "normal")]
        ci: CiArg,
        /// Output report JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write SVG snapshots of the complex at chosen scales (2-D clouds only).
    Render {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Comma-separated scale values.
        #[arg(long, value_delimiter = ',', conflicts_with = "theta_grid")]
        thetas: Option<Vec<f64>>,
        /// Evenly spaced scales as start:stop:count.
        #[arg(long)]
        theta_grid: Option<String>,
        /// Output directory for SVG files.
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn load_cloud(args: &PipelineArgs) -> Result<LabeledPointCloud> {
    cloud::read_csv_path(&args.cloud, !args.no_header)
}

fn load_distances(args: &PipelineArgs, cloud: &LabeledPointCloud) -> Result<Option<DistanceMatrix>> {
    match &args.distances {
        None => Ok(None),
        Some(path) => {
            let matrix = DistanceMatrix::read_csv_path(path)?;
            if matrix.n() != cloud.len() {
                return Err(Error::invalid(
                    "distances",
                    format!("matrix is {0}x{0} but the cloud has {1} points", matrix.n(), cloud.len()),
                ));
            }
            Ok(Some(matrix))
        }
    }
}

fn cmd_generate(spec_path: &Path, out: &Path) -> Result<()> {
    let spec = SyntheticSpec::read_json_path(spec_path)?;
    let cloud = cloud::generate(&spec)?;
    cloud::write_csv_path(&cloud, out)?;
    match spec.ground_truth() {
        Some((b0, b1)) => eprintln!("ground truth (β0, β1) = ({b0}, {b1})"),
        None => eprintln!("single-class cloud; no decision boundary"),
    }
    Ok(())
}

fn cmd_persistence(
    pipeline: &PipelineArgs,
    grid_args: &GridArgs,
    convention: H0Convention,
    out_dir: &Path,
) -> Result<()> {
    let cloud = load_cloud(pipeline)?;
    let mode = pipeline.mode.into();
    let grid = grid_args.resolve(mode)?;
    std::fs::create_dir_all(out_dir)?;
    let max_hom_dim = pipeline.max_dim.saturating_sub(1);

    let diagram = if cloud.is_empty() {
        // empty cloud: empty artifacts, success
        let filt = crate::filtration::SimplicialFiltration::from_simplices(0, Vec::new(), 1);
        persistent_homology(&filt, max_hom_dim, convention)?
    } else {
        let matrix = load_distances(pipeline, &cloud)?;
        let oracle = match &matrix {
            Some(m) => DistanceOracle::Precomputed(m),
            None => DistanceOracle::Euclidean(&cloud),
        };
        let filt =
            boundary_filtration(&cloud, oracle, mode, pipeline.k, pipeline.cap, pipeline.max_dim)?;
        persistent_homology(&filt, max_hom_dim, convention)?
    };

    diagram.write_json(BufWriter::new(File::create(out_dir.join("diagram.json"))?))?;
    for dim in 0..=max_hom_dim {
        let curve = diagram.betti_curve(&grid, dim);
        let path = out_dir.join(format!("betti_h{dim}.csv"));
        curve.write_csv(BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}

fn cmd_complexity(pipeline: &PipelineArgs, grid_args: &GridArgs, out: &Path) -> Result<()> {
    let cloud = load_cloud(pipeline)?;
    let mode = pipeline.mode.into();
    let grid = grid_args.resolve(mode)?;
    let matrix = load_distances(pipeline, &cloud)?;
    let oracle = match &matrix {
        Some(m) => DistanceOracle::Precomputed(m),
        None => DistanceOracle::Euclidean(&cloud),
    };
    let record = complexity(&cloud, oracle, mode, &grid, pipeline.k, pipeline.cap)?;
    record.write_json(BufWriter::new(File::create(out)?))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_select(
    catalog_path: &Path,
    pair_table: bool,
    datasets_path: &Path,
    datasets_pair_table: bool,
    accuracy_path: Option<&Path>,
    measure: Measure,
    m: usize,
    subgroup: Subgroup,
    exclude_self: bool,
    ci: CiMethod,
    out: &Path,
) -> Result<()> {
    let catalog = ModelCatalog::read_csv_path(catalog_path, pair_table)?;
    let datasets = ModelCatalog::read_csv_path(datasets_path, datasets_pair_table)?;
    let accuracy = accuracy_path.map(AccuracyMatrix::read_csv_path).transpose()?;
    let report = accuracy_gap(
        &catalog,
        &datasets,
        accuracy.as_ref(),
        measure,
        m,
        subgroup,
        exclude_self,
        ci,
    )?;
    report.write_json_path(out)?;
    Ok(())
}

fn parse_theta_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::invalid("theta-grid", "expected start:stop:count"));
    }
    let start: f64 =
        parts[0].parse().map_err(|_| Error::invalid("theta-grid", "bad start"))?;
    let stop: f64 = parts[1].parse().map_err(|_| Error::invalid("theta-grid", "bad stop"))?;
    let count: usize =
        parts[2].parse().map_err(|_| Error::invalid("theta-grid", "bad count"))?;
    Ok(ScaleGrid::new(start, stop, count)?.values())
}

fn cmd_render(
    pipeline: &PipelineArgs,
    thetas: Option<&[f64]>,
    theta_grid: Option<&str>,
    out_dir: &Path,
) -> Result<()> {
    let thetas: Vec<f64> = match (thetas, theta_grid) {
        (Some(list), None) => list.to_vec(),
        (None, Some(text)) => parse_theta_grid(text)?,
        _ => return Err(Error::invalid("thetas", "give exactly one of --thetas or --theta-grid")),
    };
    let cloud = load_cloud(pipeline)?;
    if cloud.dim() != 2 {
        return Err(Error::invalid(
            "cloud",
            format!("rendering requires 2-D points, got dimension {}", cloud.dim()),
        ));
    }
    let matrix = load_distances(pipeline, &cloud)?;
    let oracle = match &matrix {
        Some(m) => DistanceOracle::Precomputed(m),
        None => DistanceOracle::Euclidean(&cloud),
    };
    let mode = pipeline.mode.into();
    let filt = boundary_filtration(&cloud, oracle, mode, pipeline.k, pipeline.cap, pipeline.max_dim)?;
    std::fs::create_dir_all(out_dir)?;
    for theta in thetas {
        let snapshot = filt.complex_at(theta);
        let path = out_dir.join(format!("complex_{theta:.6}.svg"));
        render_complex_svg(&cloud, &snapshot, BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate { spec, out } => cmd_generate(spec, out),
        Command::Persistence { pipeline, grid, convention, out_dir } => {
            cmd_persistence(pipeline, grid, (*convention).into(), out_dir)
        }
        Command::Complexity { pipeline, grid, out } => cmd_complexity(pipeline, grid, out),
        Command::Select {
            catalog,
            pair_table,
            datasets,
            datasets_pair_table,
            accuracy,
            measure,
            m,
            subgroup,
            exclude_self,
            ci,
            out,
        } => cmd_select(
            catalog,
            *pair_table,
            datasets,
            *datasets_pair_table,
            accuracy.as_deref(),
            (*measure).into(),
            *m,
            (*subgroup).into(),
            *exclude_self,
            (*ci).into(),
            out,
        ),
        Command::Render { pipeline, thetas, theta_grid, out_dir } => {
            cmd_render(pipeline, thetas.as_deref(), theta_grid.as_deref(), out_dir)
        }
    }
}

/// Parses arguments, runs one command, and returns the process exit code:
/// 0 success, 2 input/validation error, 1 internal error.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(threads) = cli.threads {
        // ignore failure: the global pool may already exist in tests
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global();
    }
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            if cli.error_json {
                let payload = serde_json::json!({ "error": e.to_string(), "code": code });
                eprintln!("{payload}");
            } else {
                eprintln!("error: {e}");
            }
            code
        }
    }
}
