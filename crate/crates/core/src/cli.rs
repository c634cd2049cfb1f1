//! The `anw` command-line tool.
//!
//! Every `cmd_*` function returns the rendered output so it can be tested
//! without a process boundary; [`run`] writes it to `--out` or stdout.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigFile, OutputFormat, SweepSpec, ZGrid, DEFAULT_C0, DEFAULT_ETA, DEFAULT_N};
use crate::entanglement::{
    asymptotic_vlf, duan_nullifiers, large_coupling_covariance, large_coupling_vlf, lo_profile, nullifier_table,
    scan_relative_phases, vlf_suite, Variant, VlfReport,
};
use crate::error::{Error, Result};
use crate::gaussian::{change_basis, Basis, CovarianceMatrix, Direction};
use crate::graphcalc::{adjacency_matrices, approximation_error, cluster_limit_verdict, local_phase_search};
use crate::lattice::{zero_supermode_index, ArrayConfig};
use crate::propagation::{assemble_generator, basis_for, covariance_individual, propagate_numeric, supermode_params};

const UNITS: &str = "lengths in mm, rates in 1/mm, phases in rad";

#[derive(Debug, Parser)]
#[command(
    name = "anw",
    version,
    about = "Gaussian states and entanglement in nonlinear waveguide arrays"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true)]
    pub format: Option<OutputFormat>,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Supermode eigenvalues and vectors.
    Eigen {
        #[command(flatten)]
        array: ArrayArgs,
        /// Fail unless the array has a zero supermode.
        #[arg(long)]
        zero_supermode: bool,
    },
    /// Covariance matrix at one propagation distance.
    Propagate {
        #[command(flatten)]
        array: ArrayArgs,
        #[arg(long, default_value_t = 10.0)]
        z: f64,
        #[arg(long, default_value = "individual")]
        basis: String,
    },
    /// VLF inequalities along a z grid.
    Vlf {
        #[command(flatten)]
        array: ArrayArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        measurement: MeasurementArgs,
        /// Use the infinite-coupling state over this many modes.
        #[arg(long)]
        large_coupling: Option<usize>,
        /// Also scan the relative LO phase of each pair (step in rad).
        #[arg(long, num_args = 0..=1, default_missing_value = "0.017453292519943295")]
        phase_scan: Option<f64>,
    },
    /// Cross-product parameter sweep driven by a config file.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        variant: Option<Variant>,
        #[arg(long)]
        optimized: Option<bool>,
    },
    /// Entanglement graph and adjacency matrices of the large-coupling state.
    Graph {
        #[arg(long, default_value_t = 6)]
        l: usize,
        #[arg(long, default_value_t = DEFAULT_ETA)]
        eta: f64,
        #[arg(long, default_value_t = 100.0)]
        z: f64,
        #[arg(long, default_value_t = Variant::A)]
        variant: Variant,
        /// Also run the local-phase grid search (step in rad).
        #[arg(long, num_args = 0..=1, default_missing_value = "0.2617993877991494")]
        phase_scan: Option<f64>,
    },
    /// Pairwise nullifier variances.
    Nullifiers {
        #[command(flatten)]
        array: ArrayArgs,
        #[arg(long, default_value_t = 10.0)]
        z: f64,
        #[arg(long, default_value_t = Variant::A)]
        variant: Variant,
        #[arg(long)]
        large_coupling: Option<usize>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct ArrayArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub c0: Option<f64>,
    /// Comma-separated coupling factors f_1..f_{N-1}.
    #[arg(long, value_delimiter = ',')]
    pub profile: Option<Vec<f64>>,
    #[arg(long)]
    pub eta: Option<f64>,
}

impl ArrayArgs {
    /// Flags override the config file, which overrides the defaults.
    pub fn resolve(&self) -> Result<ArrayConfig> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let n = self.n.or(file.scalar("array.N")?).unwrap_or(DEFAULT_N);
        let c0 = self.c0.or(file.scalar("array.C0")?).unwrap_or(DEFAULT_C0);
        let eta = self.eta.or(file.scalar("array.eta")?).unwrap_or(DEFAULT_ETA);
        let profile = match &self.profile {
            Some(p) => Some(p.clone()),
            None if self.n.is_none() => file.list("array.f")?,
            None => None,
        };
        match profile {
            Some(f) => ArrayConfig::new(n, c0, f, eta),
            None => ArrayConfig::homogeneous(n, c0, eta),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub z_start: Option<f64>,
    #[arg(long)]
    pub z_stop: Option<f64>,
    #[arg(long)]
    pub z_steps: Option<usize>,
}

impl GridArgs {
    fn resolve(&self, base: ZGrid) -> Result<ZGrid> {
        ZGrid::new(
            self.z_start.unwrap_or(base.start),
            self.z_stop.unwrap_or(base.stop),
            self.z_steps.unwrap_or(base.steps),
        )
    }
}

#[derive(Debug, Clone, Args)]
pub struct MeasurementArgs {
    #[arg(long, default_value_t = Variant::A)]
    pub variant: Variant,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub optimized: bool,
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn cmd_eigen(array: &ArrayConfig, zero_supermode: bool, format: OutputFormat) -> Result<String> {
    let basis = basis_for(array)?;
    let zero = if zero_supermode {
        Some(zero_supermode_index(array.n())?)
    } else {
        zero_supermode_index(array.n()).ok()
    };
    match format {
        OutputFormat::Json => to_json(&json!({
            "units": UNITS,
            "config": array,
            "eigenvalues": basis.eigenvalues().as_slice(),
            "modes": basis.modes_rows(),
            "zero_supermode": zero,
        })),
        OutputFormat::Csv => {
            let mut out = String::new();
            let mut header = vec!["k".to_string(), "lambda_per_mm".to_string()];
            header.extend((1..=array.n()).map(|j| format!("m_{j}")));
            csv_row(&mut out, &header);
            for (k, row) in basis.modes_rows().iter().enumerate() {
                let mut cells = vec![(k + 1).to_string(), basis.eigenvalues()[k].to_string()];
                cells.extend(row.iter().map(f64::to_string));
                csv_row(&mut out, &cells);
            }
            Ok(out)
        }
    }
}

pub fn cmd_propagate(array: &ArrayConfig, z: f64, basis_name: &str, format: OutputFormat) -> Result<String> {
    let target: Basis = match basis_name.to_ascii_lowercase().as_str() {
        "individual" => Basis::Individual,
        "supermode" => Basis::Supermode,
        other => return Err(Error::InvalidArgument(format!("unknown basis {other:?}"))),
    };
    let basis = basis_for(array)?;
    let v = covariance_individual(array, &basis, z)?;

    // Cross-check against the matrix exponential of the full generator.
    let s = propagate_numeric(&assemble_generator(array), z)?;
    let numeric = &s * s.transpose();
    let oracle_residual = (&numeric - v.entries()).norm() / numeric.norm();

    let v = match target {
        Basis::Individual => v,
        Basis::Supermode => change_basis(&v, &basis, Direction::ToSupermode)?,
    };
    let regimes: Vec<String> = supermode_params(array, &basis)?
        .iter()
        .map(|p| p.regime.to_string())
        .collect();
    match format {
        OutputFormat::Json => to_json(&json!({
            "units": UNITS,
            "config": array,
            "z": z,
            "covariance": v,
            "regimes": regimes,
            "oracle_residual": oracle_residual,
        })),
        OutputFormat::Csv => Ok(matrix_csv(&v)),
    }
}

fn matrix_csv(v: &CovarianceMatrix) -> String {
    let e = v.entries();
    let mut out = String::new();
    let header: Vec<String> = (0..v.modes())
        .flat_map(|j| [format!("x_{}", j + 1), format!("y_{}", j + 1)])
        .collect();
    csv_row(&mut out, &header);
    for r in 0..e.nrows() {
        let cells: Vec<String> = (0..e.ncols()).map(|c| e[(r, c)].to_string()).collect();
        csv_row(&mut out, &cells);
    }
    out
}

/// VLF reports along `grid`, either for `array` or for the large-coupling
/// state over `large_coupling` modes.
pub fn vlf_curve(
    array: &ArrayConfig,
    large_coupling: Option<usize>,
    grid: &ZGrid,
    variant: Variant,
    optimized: bool,
    phase_scan: Option<f64>,
) -> Result<Vec<VlfReport>> {
    grid.points()
        .into_par_iter()
        .map(|z| {
            let mut report = match large_coupling {
                Some(l) => large_coupling_vlf(l, array.eta(), z, variant, optimized)?,
                None => vlf_suite(array, z, variant, optimized)?,
            };
            if let Some(step) = phase_scan {
                let v = match large_coupling {
                    Some(l) => large_coupling_covariance(l, array.eta(), z)?,
                    None => reduced_odd_covariance(array, z)?,
                };
                report.phase_scan = Some(scan_relative_phases(&v, variant, step)?);
            }
            Ok(report)
        })
        .collect()
}

fn reduced_odd_covariance(array: &ArrayConfig, z: f64) -> Result<CovarianceMatrix> {
    zero_supermode_index(array.n())?;
    let v = covariance_individual(array, &basis_for(array)?, z)?;
    let odd: Vec<usize> = (0..array.n()).step_by(2).collect();
    v.submatrix(&odd)
}

pub fn cmd_vlf(
    array: &ArrayConfig,
    large_coupling: Option<usize>,
    grid: &ZGrid,
    variant: Variant,
    optimized: bool,
    phase_scan: Option<f64>,
    format: OutputFormat,
) -> Result<String> {
    let reports = vlf_curve(array, large_coupling, grid, variant, optimized, phase_scan)?;
    match format {
        OutputFormat::Json => to_json(&json!({ "units": UNITS, "reports": reports })),
        OutputFormat::Csv => {
            let mut out = String::new();
            let pairs = reports.first().map(|r| r.pairs.clone()).unwrap_or_default();
            let mut header = vec!["z_mm".to_string()];
            header.extend((1..=pairs.len()).map(|k| format!("vlf_{k}")));
            header.push("asymptote".into());
            csv_row(&mut out, &header);
            for r in &reports {
                let mut cells = vec![r.z.to_string()];
                cells.extend(r.values.iter().map(f64::to_string));
                cells.push(r.asymptote.to_string());
                csv_row(&mut out, &cells);
            }
            Ok(out)
        }
    }
}

/// One evaluated point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub index: usize,
    pub c0: Option<f64>,
    pub eta: f64,
    pub n: Option<usize>,
    pub l: usize,
    pub variant: Variant,
    pub z: f64,
    pub values: Vec<f64>,
    pub asymptote: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy)]
enum SweepTarget {
    Array { c0: f64, n: usize },
    LargeCoupling { l: usize },
}

pub fn run_sweep(spec: &SweepSpec) -> Vec<SweepPoint> {
    spec.validate().ok();
    let targets: Vec<SweepTarget> = if spec.l.is_empty() {
        spec.c0
            .iter()
            .flat_map(|&c0| spec.n.iter().map(move |&n| SweepTarget::Array { c0, n }))
            .collect()
    } else {
        spec.l.iter().map(|&l| SweepTarget::LargeCoupling { l }).collect()
    };
    let zs = spec.z.points();
    let mut jobs = Vec::new();
    for target in &targets {
        for &eta in &spec.eta {
            for &variant in &spec.variant {
                for &z in &zs {
                    jobs.push((*target, eta, variant, z));
                }
            }
        }
    }
    jobs.into_par_iter()
        .enumerate()
        .map(|(index, (target, eta, variant, z))| {
            let (c0, n, l) = match target {
                SweepTarget::Array { c0, n } => (Some(c0), Some(n), n.div_ceil(2)),
                SweepTarget::LargeCoupling { l } => (None, None, l),
            };
            let outcome = match target {
                SweepTarget::Array { c0, n } => ArrayConfig::homogeneous(n, c0, eta)
                    .and_then(|a| vlf_suite(&a, z, variant, spec.optimized))
                    .map(|r| (r.values, r.asymptote)),
                SweepTarget::LargeCoupling { l } => asymptotic_vlf(l, eta, z, spec.optimized).map(|a| (vec![a], a)),
            };
            let (values, asymptote, error) = match outcome {
                Ok((values, a)) => (values, Some(a), None),
                Err(e) => (Vec::new(), None, Some(e.to_string())),
            };
            SweepPoint {
                index,
                c0,
                eta,
                n,
                l,
                variant,
                z,
                values,
                asymptote,
                error,
            }
        })
        .collect()
}

pub fn cmd_sweep(spec: &SweepSpec, format: OutputFormat) -> Result<String> {
    spec.validate()?;
    let points = run_sweep(spec);
    match format {
        OutputFormat::Json => to_json(&json!({
            "units": UNITS,
            "optimized": spec.optimized,
            "points": points,
        })),
        OutputFormat::Csv => {
            let mut out = String::new();
            let header = [
                "index",
                "C0_per_mm",
                "eta_per_mm",
                "N",
                "l",
                "variant",
                "z_mm",
                "inequality",
                "vlf",
                "asymptote",
                "error",
            ];
            csv_row(&mut out, &header.map(String::from));
            let opt = |v: Option<String>| v.unwrap_or_default();
            for p in &points {
                let common = [
                    p.index.to_string(),
                    opt(p.c0.map(|x| x.to_string())),
                    p.eta.to_string(),
                    opt(p.n.map(|x| x.to_string())),
                    p.l.to_string(),
                    p.variant.to_string(),
                    p.z.to_string(),
                ];
                let asym = opt(p.asymptote.map(|x| x.to_string()));
                if let Some(err) = &p.error {
                    let mut cells = common.to_vec();
                    cells.extend([String::new(), String::new(), String::new(), csv_cell(err)]);
                    csv_row(&mut out, &cells);
                    continue;
                }
                for (k, v) in p.values.iter().enumerate() {
                    let mut cells = common.to_vec();
                    let label = if p.n.is_some() {
                        (k + 1).to_string()
                    } else {
                        String::new()
                    };
                    cells.extend([label, v.to_string(), asym.clone(), String::new()]);
                    csv_row(&mut out, &cells);
                }
            }
            Ok(out)
        }
    }
}

pub fn cmd_graph(
    l: usize,
    eta: f64,
    z: f64,
    variant: Variant,
    phase_scan: Option<f64>,
    format: OutputFormat,
) -> Result<String> {
    let v = large_coupling_covariance(l, eta, z)?;
    let graph = duan_nullifiers(&v, variant)?;
    let adjacency = adjacency_matrices(l, eta, z)?;
    let trace_u = approximation_error(&adjacency);
    let verdict = cluster_limit_verdict(l, eta, &[z])?;
    let search = phase_scan.map(|step| local_phase_search(l, eta, z, step)).transpose()?;
    match format {
        OutputFormat::Json => {
            let mut value = json!({
                "units": UNITS,
                "l": l,
                "eta": eta,
                "z": z,
                "variant": variant,
                "theta": lo_profile(l, variant)?,
                "graph": graph,
                "components": graph.components(),
                "adjacency": adjacency,
                "trace_u": trace_u,
                "trace_u_limit": verdict.limit,
                "not_cluster": verdict.not_cluster,
            });
            if let Some(s) = search {
                value["phase_search"] = serde_json::to_value(s).map_err(|e| Error::Numerical(e.to_string()))?;
            }
            to_json(&value)
        }
        OutputFormat::Csv => {
            let mut out = String::new();
            csv_row(
                &mut out,
                &[
                    "i",
                    "j",
                    "waveguide_i",
                    "waveguide_j",
                    "difference_variance",
                    "sum_variance",
                    "weight",
                ]
                .map(String::from),
            );
            for e in &graph.edges {
                csv_row(
                    &mut out,
                    &[
                        e.i.to_string(),
                        e.j.to_string(),
                        (2 * e.i - 1).to_string(),
                        (2 * e.j - 1).to_string(),
                        e.difference_variance.to_string(),
                        e.sum_variance.to_string(),
                        e.weight.to_string(),
                    ],
                );
            }
            let _ = writeln!(out, "# trace_u={trace_u}");
            Ok(out)
        }
    }
}

pub fn cmd_nullifiers(
    array: &ArrayConfig,
    large_coupling: Option<usize>,
    z: f64,
    variant: Variant,
    format: OutputFormat,
) -> Result<String> {
    let v = match large_coupling {
        Some(l) => large_coupling_covariance(l, array.eta(), z)?,
        None => reduced_odd_covariance(array, z)?,
    };
    let table = nullifier_table(&v, variant)?;
    match format {
        OutputFormat::Json => to_json(&json!({
            "units": UNITS,
            "z": z,
            "variant": variant,
            "pairs": table,
            "graph": duan_nullifiers(&v, variant)?,
        })),
        OutputFormat::Csv => {
            let mut out = String::new();
            csv_row(
                &mut out,
                &["i", "j", "difference_variance", "sum_variance", "edge"].map(String::from),
            );
            for p in &table {
                csv_row(
                    &mut out,
                    &[
                        (p.i + 1).to_string(),
                        (p.j + 1).to_string(),
                        p.difference_variance.to_string(),
                        p.sum_variance.to_string(),
                        p.both_squeezed().to_string(),
                    ],
                );
            }
            Ok(out)
        }
    }
}

fn sweep_spec(
    config: Option<&PathBuf>,
    grid: &GridArgs,
    variant: Option<Variant>,
    optimized: Option<bool>,
) -> Result<SweepSpec> {
    let file = match config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let mut spec = file.sweep()?;
    spec.z = grid.resolve(spec.z)?;
    if let Some(v) = variant {
        spec.variant = vec![v];
    }
    if let Some(o) = optimized {
        spec.optimized = o;
    }
    spec.validate()?;
    Ok(spec)
}

/// Renders the output of `cli` and returns it with its destination.
pub fn render(cli: &Cli) -> Result<(String, Option<PathBuf>)> {
    let fmt = |default| cli.format.unwrap_or(default);
    let text = match &cli.command {
        Command::Eigen { array, zero_supermode } => {
            cmd_eigen(&array.resolve()?, *zero_supermode, fmt(OutputFormat::Json))?
        }
        Command::Propagate { array, z, basis } => cmd_propagate(&array.resolve()?, *z, basis, fmt(OutputFormat::Json))?,
        Command::Vlf {
            array,
            grid,
            measurement,
            large_coupling,
            phase_scan,
        } => {
            let resolved = array.resolve()?;
            let base = match &array.config {
                Some(path) => ConfigFile::load(path)?.sweep()?.z,
                None => ZGrid::new(0.0, 60.0, 601)?,
            };
            cmd_vlf(
                &resolved,
                *large_coupling,
                &grid.resolve(base)?,
                measurement.variant,
                measurement.optimized,
                *phase_scan,
                fmt(OutputFormat::Csv),
            )?
        }
        Command::Sweep {
            config,
            grid,
            variant,
            optimized,
        } => {
            let spec = sweep_spec(config.as_ref(), grid, *variant, *optimized)?;
            let text = cmd_sweep(&spec, cli.format.unwrap_or(spec.format))?;
            return Ok((text, cli.out.clone().or(spec.output)));
        }
        Command::Graph {
            l,
            eta,
            z,
            variant,
            phase_scan,
        } => cmd_graph(*l, *eta, *z, *variant, *phase_scan, fmt(OutputFormat::Json))?,
        Command::Nullifiers {
            array,
            z,
            variant,
            large_coupling,
        } => cmd_nullifiers(&array.resolve()?, *large_coupling, *z, *variant, fmt(OutputFormat::Csv))?,
    };
    Ok((text, cli.out.clone()))
}

/// Runs `cli`, writing to the chosen destination.
pub fn run(cli: &Cli) -> Result<()> {
    let work = || -> Result<()> {
        let (text, out) = render(cli)?;
        match out {
            Some(path) => std::fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
            None => {
                use std::io::Write;
                std::io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    };
    match cli.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}
