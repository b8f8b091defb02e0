//! `hsim`: metalens scenarios, compression, focal scans and trajectory tools.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hsim_core::compression::{
    checker_pattern, compress_values, grating_pattern, report_for, write_cube_list, CompressionMode,
};
use hsim_core::evolution::{evolve_trajectory, EvolutionPlan, Method};
use hsim_core::fdm::compare_to_quantum;
use hsim_core::grid::{Boundary, GridSpec, MaterialField, RegionMask, StateVector, SystemKind};
use hsim_core::gridtext::{GridText, TrajectoryDir};
use hsim_core::harness::{
    binary_speeds, build_initial_state, build_lens_pattern, compression_benchmark, format_report_table,
    run_scenario, summary, thickness_sweep, write_outputs, ScenarioConfig,
};
use hsim_core::observables::{focal_scan, reconstruct_ez, write_focal_csv, RegionSeries};
use hsim_core::operators::assemble;
use hsim_core::{Error, Result};
use num_complex::Complex64;

#[derive(Parser)]
#[command(name = "hsim", version, about = "Hamiltonian-simulation metalens experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a metalens scenario (or a thickness sweep) from a key-value config.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; one subdirectory per thickness when sweeping.
        #[arg(long, default_value = "hsim-out")]
        out: PathBuf,
        /// Comma-separated thicknesses to sweep, e.g. `8,16,24,30`.
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<usize>,
    },
    /// Compress a material grid into cube terms, or benchmark the reference patterns.
    Compress {
        /// Grid-text material file.
        #[arg(long, required_unless_present = "benchmark")]
        pattern: Option<PathBuf>,
        /// Benchmark reference patterns on a 2^n x 2^n grid instead.
        #[arg(long, conflicts_with = "pattern")]
        benchmark: Option<u32>,
        #[arg(long, value_enum, default_value_t = ModeArg::Heuristic)]
        mode: ModeArg,
        /// Cube list destination (default: stdout after the table).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Focal scan over an E_z trajectory directory.
    Scan {
        #[arg(long)]
        traj: PathBuf,
        /// First row below the lens (default: from the manifest).
        #[arg(long)]
        lens_bottom: Option<i64>,
        #[arg(long, default_value_t = 28)]
        x0: usize,
        #[arg(long, default_value_t = 8)]
        width: usize,
        #[arg(long, default_value_t = 4)]
        height: usize,
        #[arg(long, allow_negative_numbers = true)]
        start: Option<i64>,
        #[arg(long, allow_negative_numbers = true)]
        end: Option<i64>,
        #[arg(long)]
        window_start: Option<f64>,
        #[arg(long)]
        window_end: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative L2 deviation between two E_z trajectory directories.
    Compare {
        #[arg(long)]
        quantum: PathBuf,
        #[arg(long)]
        classical: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evolve a TM state and write every component per snapshot.
    Evolve {
        /// Qubits per axis, e.g. `4,4`.
        #[arg(long, value_delimiter = ',', default_values_t = [6u32, 6])]
        qubits: Vec<u32>,
        #[arg(long, default_value_t = 1.0)]
        h: f64,
        #[arg(long, default_value = "dirichlet")]
        bc: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Trotter1)]
        method: MethodArg,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long = "t", default_value_t = 1.0)]
        t_final: f64,
        #[arg(long, default_value_t = 10)]
        stride: usize,
        /// `pulse:<row>,<sigma>` or a grid-text file with the component-0 field.
        #[arg(long, default_value = "pulse:2,1")]
        init: String,
        /// Grid-text material speeds (default: uniform 1).
        #[arg(long)]
        material: Option<PathBuf>,
        #[arg(long, default_value = "hsim-evolve")]
        out: PathBuf,
    },
    /// Write a reference material pattern as grid text.
    Pattern {
        #[arg(value_enum)]
        kind: PatternKind,
        /// Qubits per axis (square grid).
        #[arg(long, default_value_t = 6)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        cell: usize,
        #[arg(long, default_value_t = 4)]
        period: usize,
        #[arg(long, default_value_t = 2)]
        on: usize,
        #[arg(long, default_value_t = 8)]
        thickness: usize,
        #[arg(long, default_value_t = 1.0)]
        c_vacuum: f64,
        #[arg(long, default_value_t = 0.45)]
        c_material: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Heuristic,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Trotter1,
    Exact,
    Rk4,
}

#[derive(Clone, Copy, ValueEnum)]
enum PatternKind {
    Checker,
    Grating,
    Lens,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() {
                2
            } else if e.is_numerical_guard() {
                3
            } else {
                1
            })
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config, out, sweep } => cmd_run(config.as_deref(), &out, &sweep),
        Command::Compress {
            pattern,
            benchmark,
            mode,
            out,
        } => {
            let mode = match mode {
                ModeArg::Exact => CompressionMode::Exact,
                ModeArg::Heuristic => CompressionMode::Heuristic,
            };
            match (pattern, benchmark) {
                (_, Some(n)) => {
                    print!("{}", format_report_table(&compression_benchmark(n, mode)?));
                    Ok(())
                }
                (Some(p), None) => cmd_compress(&p, mode, out.as_deref()),
                (None, None) => Err(Error::Config("either --pattern or --benchmark is required".into())),
            }
        }
        Command::Scan {
            traj,
            lens_bottom,
            x0,
            width,
            height,
            start,
            end,
            window_start,
            window_end,
            out,
        } => cmd_scan(
            &traj,
            ScanArgs {
                lens_bottom,
                x0,
                width,
                height,
                start,
                end,
                window_start,
                window_end,
            },
            out.as_deref(),
        ),
        Command::Compare {
            quantum,
            classical,
            out,
        } => cmd_compare(&quantum, &classical, out.as_deref()),
        Command::Evolve {
            qubits,
            h,
            bc,
            method,
            dt,
            t_final,
            stride,
            init,
            material,
            out,
        } => {
            let method = match method {
                MethodArg::Trotter1 => Method::Trotter1,
                MethodArg::Exact => Method::Exact,
                MethodArg::Rk4 => Method::Rk4,
            };
            let bc: Boundary = bc.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
            let grid = GridSpec::uniform(&qubits, h, bc).map_err(|e| Error::Config(e.to_string()))?;
            cmd_evolve(&grid, method, dt, t_final, stride, &init, material.as_deref(), &out)
        }
        Command::Pattern {
            kind,
            n,
            cell,
            period,
            on,
            thickness,
            c_vacuum,
            c_material,
            out,
        } => {
            let grid = GridSpec::uniform(&[n, n], 1.0, Boundary::Dirichlet).map_err(|e| Error::Config(e.to_string()))?;
            let values = match kind {
                PatternKind::Checker => checker_pattern(&grid, cell, c_vacuum, c_material),
                PatternKind::Grating => grating_pattern(&grid, period, on, c_vacuum, c_material),
                PatternKind::Lens => {
                    let config = ScenarioConfig {
                        nx_qubits: n,
                        ny_qubits: n,
                        thickness,
                        c_vacuum,
                        c_material,
                        ..ScenarioConfig::default()
                    };
                    binary_speeds(&build_lens_pattern(&config)?, c_vacuum, c_material)
                }
            };
            GridText::new(&grid, values)?.save(&out)
        }
    }
}

fn cmd_run(config: Option<&Path>, out: &Path, sweep: &[usize]) -> Result<()> {
    let base = match config {
        Some(p) => ScenarioConfig::from_file(p)?,
        None => ScenarioConfig::default(),
    };
    if sweep.is_empty() {
        let result = run_scenario(&base)?;
        write_outputs(out, &result)?;
        print!("{}", summary(&result));
        return Ok(());
    }
    let results = thickness_sweep(&base, sweep)?;
    println!("thickness,peak_focus,accumulated_focus,peak_at_24,accumulated_at_24");
    for r in &results {
        write_outputs(&out.join(format!("w{:02}", r.config.thickness)), r)?;
        let at = r.at_distance(24);
        println!(
            "{},{},{},{},{}",
            r.config.thickness,
            r.peak_focus(),
            r.accumulated_focus(),
            at.map_or("nan".into(), |e| format!("{:.6e}", e.peak)),
            at.map_or("nan".into(), |e| format!("{:.6e}", e.accumulated)),
        );
    }
    Ok(())
}

fn cmd_compress(pattern: &Path, mode: CompressionMode, out: Option<&Path>) -> Result<()> {
    let gt = GridText::read(pattern).map_err(|e| Error::Config(e.to_string()))?;
    let grid = gt.grid(Boundary::Dirichlet).map_err(|e| Error::Config(e.to_string()))?;
    if let Some((index, &value)) = gt.values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::NonPositiveMaterial { index, value });
    }
    let terms = compress_values(&gt.values, &grid, mode)?;
    let report = report_for(&terms, &gt.values);
    let name = pattern
        .file_stem()
        .map_or("pattern".to_string(), |s| s.to_string_lossy().into_owned());
    let mut buf = Vec::new();
    write_cube_list(&terms, &grid, &mut buf)?;
    match out {
        Some(p) => fs::write(p, &buf)?,
        None => print!("{}", String::from_utf8_lossy(&buf)),
    }
    print!("{}", format_report_table(&[(name, report)]));
    Ok(())
}

struct ScanArgs {
    lens_bottom: Option<i64>,
    x0: usize,
    width: usize,
    height: usize,
    start: Option<i64>,
    end: Option<i64>,
    window_start: Option<f64>,
    window_end: Option<f64>,
}

fn cmd_scan(traj: &Path, a: ScanArgs, out: Option<&Path>) -> Result<()> {
    let dir = TrajectoryDir::open(traj)?;
    let series = dir.read_field_series("ez")?;
    let first = series
        .first()
        .ok_or_else(|| Error::Config(format!("{} holds no snapshots", traj.display())))?;
    let grid = first.1.grid(Boundary::Dirichlet)?;
    let manifest = dir.read_manifest().ok();
    let from_manifest = |key: &str| -> Option<i64> { manifest.as_ref()?.get(key)?.parse().ok() };
    let lens_bottom = a
        .lens_bottom
        .or_else(|| from_manifest("lens_bottom"))
        .ok_or_else(|| Error::Config("lens bottom not given and not in the manifest".into()))?;
    let ny = grid.shape()[1] as i64;
    let start = a.start.unwrap_or(-from_manifest("thickness").unwrap_or(0));
    let end = a.end.unwrap_or(ny - a.height as i64 - lens_bottom);
    if start > end || lens_bottom + start < 0 || lens_bottom + end + a.height as i64 > ny {
        return Err(Error::Config(format!("scan distances {start}..={end} do not fit in the grid")));
    }
    let mut offsets = Vec::new();
    let mut regions = Vec::new();
    for d in start..=end {
        let top = (lens_bottom + d) as usize;
        regions.push(
            RegionMask::rectangle(&grid, [a.x0, top, 0], [a.width, a.height, 1])
                .map_err(|e| Error::Config(e.to_string()))?,
        );
        offsets.push(d);
    }
    let densities: Vec<(f64, Vec<f64>)> = series
        .iter()
        .map(|(t, g)| (*t, g.values.iter().map(|v| v * v).collect()))
        .collect();
    let region_series = RegionSeries::from_densities(&densities, &regions)?;
    let t_first = densities.first().map_or(0.0, |d| d.0);
    let t_last = densities.last().map_or(0.0, |d| d.0);
    let window = (a.window_start.unwrap_or(t_first), a.window_end.unwrap_or(t_last));
    let scan = focal_scan(&region_series, window)?;
    let mut buf = Vec::new();
    write_focal_csv(&scan, &offsets, &mut buf)?;
    match out {
        Some(p) => fs::write(p, &buf)?,
        None => print!("{}", String::from_utf8_lossy(&buf)),
    }
    eprintln!(
        "peak focus at distance {}, accumulated focus at distance {}",
        offsets[scan.peak_argmax], offsets[scan.accumulated_argmax]
    );
    Ok(())
}

fn cmd_compare(quantum: &Path, classical: &Path, out: Option<&Path>) -> Result<()> {
    let load = |p: &Path| -> Result<Vec<(f64, Vec<f64>)>> {
        Ok(TrajectoryDir::open(p)?
            .read_field_series("ez")?
            .into_iter()
            .map(|(t, g)| (t, g.values))
            .collect())
    };
    let q = load(quantum)?;
    let c = load(classical)?;
    let dev = compare_to_quantum(&c, &q)?;
    let mut text = String::from("time,relative_l2_deviation\n");
    for (t, d) in &dev {
        text.push_str(&format!("{t},{d:.12e}\n"));
    }
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_evolve(
    grid: &GridSpec,
    method: Method,
    dt: f64,
    t_final: f64,
    stride: usize,
    init: &str,
    material: Option<&Path>,
    out: &Path,
) -> Result<()> {
    if grid.dim() != 2 {
        return Err(Error::Config("evolve drives the 2D TM system; pass two qubit counts".into()));
    }
    let material = match material {
        Some(p) => {
            let gt = GridText::read(p)?;
            MaterialField::new(grid, gt.values).map_err(|e| e.context(p.display().to_string()))?
        }
        None => MaterialField::uniform(grid, 1.0)?,
    };
    let state = initial_state(grid, init)?;
    let h = assemble(grid, &material)?;
    let steps = t_final / dt;
    if !(dt > 0.0) || (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) || steps.round() < 1.0 {
        return Err(Error::Config(format!("t = {t_final} is not a positive multiple of dt = {dt}")));
    }
    let plan = EvolutionPlan::new(method, dt, steps.round() as usize, stride, &h);
    let dir = TrajectoryDir::create(out)?;
    let mut index = 0usize;
    let mut times = Vec::new();
    evolve_trajectory(&state, &plan, &h, |t, psi| {
        for c in 0..psi.components() {
            let amps = psi.component(c)?;
            let re: Vec<f64> = amps.iter().map(|a| a.re).collect();
            GridText::new(grid, re)?.save(&dir.field_path(&format!("u{c}_re"), index))?;
            if amps.iter().any(|a| a.im != 0.0) {
                let im: Vec<f64> = amps.iter().map(|a| a.im).collect();
                GridText::new(grid, im)?.save(&dir.field_path(&format!("u{c}_im"), index))?;
            }
        }
        GridText::new(grid, reconstruct_ez(psi, &material)?)?.save(&dir.field_path("ez", index))?;
        times.push(((t / dt).round() as usize, t));
        index += 1;
        Ok(())
    })?;
    dir.write_times(&times)?;
    dir.write_manifest(&[
        ("source", "evolve".to_string()),
        ("method", format!("{method:?}").to_lowercase()),
        ("dt", dt.to_string()),
        ("normalization", state.normalization().unwrap_or(1.0).to_string()),
        ("components", SystemKind::Tm2d.components().to_string()),
    ])?;
    println!("wrote {} snapshots to {}", times.len(), out.display());
    Ok(())
}

fn initial_state(grid: &GridSpec, init: &str) -> Result<StateVector> {
    if let Some(spec) = init.strip_prefix("pulse:") {
        let parts: Vec<f64> = spec
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| Error::Config(format!("bad pulse spec {init:?}"))))
            .collect::<Result<_>>()?;
        let [row, sigma] = parts[..] else {
            return Err(Error::Config(format!("pulse spec needs `row,sigma`, got {init:?}")));
        };
        let config = ScenarioConfig {
            nx_qubits: grid.axis_qubits(0),
            ny_qubits: grid.axis_qubits(1),
            h: grid.spacing(),
            pulse_row: row,
            pulse_sigma: sigma,
            ..ScenarioConfig::default()
        };
        return build_initial_state(&config);
    }
    let gt = GridText::read(Path::new(init))?;
    if gt.values.len() != grid.len() {
        return Err(Error::Config(format!(
            "initial field has {} values, grid needs {}",
            gt.values.len(),
            grid.len()
        )));
    }
    let field: Vec<Complex64> = gt.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    StateVector::from_fields(grid, SystemKind::Tm2d, &[field])
}
