//! Metalens scenarios: dithered lens patterns, impulse launch, quantum and
//! classical propagation, focal scans, thickness sweeps and the compression
//! benchmark.
//!
//! Geometry: `j_x` runs across the aperture and `j_y` is the propagation
//! axis, with row 0 at the top where the pulse starts. The lens occupies rows
//! `[lens_top, lens_top + w)`; monitor distances count pixels from the first
//! row below the lens, so negative distances lie inside it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::compression::{
    checker_pattern, compress_values, grating_pattern, report_for, write_cube_list, CompressionMode,
    CompressionReport, CubeTermSet,
};
use crate::error::{Error, Result};
use crate::evolution::{evolve_trajectory, EvolutionPlan, Method};
use crate::fdm::WaveSolver;
use crate::grid::{Boundary, GridSpec, MaterialField, RegionMask, StateVector, SystemKind};
use crate::gridtext::{parse_key_values, GridText, TrajectoryDir};
use crate::observables::{
    focal_scan, intensity_records, reconstruct_ez, write_focal_csv, FocalScan, Metric, RegionSeries,
};
use crate::operators::assemble_tm2d;

/// 4×4 ordered-dither threshold matrix, indexed `[y % 4][x % 4]`.
pub const BAYER_4X4: [[u8; 4]; 4] = [[0, 8, 2, 10], [12, 4, 14, 6], [3, 11, 1, 9], [15, 7, 13, 5]];

/// Full description of one metalens run.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub nx_qubits: u32,
    pub ny_qubits: u32,
    pub h: f64,
    pub boundary: Boundary,
    pub thickness: usize,
    pub lens_top: usize,
    /// Defaults to the grid centre `(N_x − 1)/2`.
    pub lens_center: Option<f64>,
    /// Defaults to `N_x`.
    pub lens_diameter: Option<f64>,
    pub lens_exponent: f64,
    pub c_vacuum: f64,
    pub c_material: f64,
    pub dt: f64,
    pub t_final: f64,
    pub snapshot_stride: usize,
    pub output_stride: usize,
    pub method: Method,
    pub monitor_x0: usize,
    pub monitor_width: usize,
    pub monitor_height: usize,
    /// Defaults to `−thickness` (the top row of the lens).
    pub scan_start: Option<i64>,
    /// Defaults to the last position that fits in the grid.
    pub scan_end: Option<i64>,
    pub window_start: f64,
    /// Defaults to `t_final`.
    pub window_end: Option<f64>,
    pub metric: Metric,
    pub pulse_row: f64,
    pub pulse_sigma: f64,
    pub classical: bool,
    pub compression_mode: CompressionMode,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            nx_qubits: 6,
            ny_qubits: 6,
            h: 1.0,
            boundary: Boundary::Dirichlet,
            thickness: 8,
            lens_top: 6,
            lens_center: None,
            lens_diameter: None,
            lens_exponent: 2.0,
            c_vacuum: 1.0,
            c_material: 0.45,
            dt: 0.01,
            t_final: 70.0,
            snapshot_stride: 5,
            output_stride: 20,
            method: Method::Trotter1,
            monitor_x0: 28,
            monitor_width: 8,
            monitor_height: 4,
            scan_start: None,
            scan_end: None,
            window_start: 0.0,
            window_end: None,
            metric: Metric::EzPower,
            pulse_row: 2.0,
            pulse_sigma: 1.0,
            classical: true,
            compression_mode: CompressionMode::Heuristic,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean {value:?} for {key}"))),
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Trotter1 => "trotter1",
        Method::Exact => "exact",
        Method::Rk4 => "rk4",
    }
}

impl ScenarioConfig {
    /// Applies `key = value` overrides on top of the defaults.
    pub fn from_key_values(kv: &BTreeMap<String, String>) -> Result<Self> {
        let mut c = ScenarioConfig::default();
        for (k, v) in kv {
            c.set(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_key_values(&parse_key_values(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let kind = |e: Error| Error::Config(format!("{key}: {e}"));
        match key {
            "nx_qubits" => self.nx_qubits = parse_value(key, v)?,
            "ny_qubits" => self.ny_qubits = parse_value(key, v)?,
            "h" => self.h = parse_value(key, v)?,
            "boundary" => self.boundary = v.parse().map_err(kind)?,
            "thickness" => self.thickness = parse_value(key, v)?,
            "lens_top" => self.lens_top = parse_value(key, v)?,
            "lens_center" => self.lens_center = Some(parse_value(key, v)?),
            "lens_diameter" => self.lens_diameter = Some(parse_value(key, v)?),
            "lens_exponent" => self.lens_exponent = parse_value(key, v)?,
            "c_vacuum" => self.c_vacuum = parse_value(key, v)?,
            "c_material" => self.c_material = parse_value(key, v)?,
            "dt" => self.dt = parse_value(key, v)?,
            "t_final" => self.t_final = parse_value(key, v)?,
            "snapshot_stride" => self.snapshot_stride = parse_value(key, v)?,
            "output_stride" => self.output_stride = parse_value(key, v)?,
            "method" => self.method = v.parse().map_err(kind)?,
            "monitor_x0" => self.monitor_x0 = parse_value(key, v)?,
            "monitor_width" => self.monitor_width = parse_value(key, v)?,
            "monitor_height" => self.monitor_height = parse_value(key, v)?,
            "scan_start" => self.scan_start = Some(parse_value(key, v)?),
            "scan_end" => self.scan_end = Some(parse_value(key, v)?),
            "window_start" => self.window_start = parse_value(key, v)?,
            "window_end" => self.window_end = Some(parse_value(key, v)?),
            "metric" => self.metric = v.parse().map_err(kind)?,
            "pulse_row" => self.pulse_row = parse_value(key, v)?,
            "pulse_sigma" => self.pulse_sigma = parse_value(key, v)?,
            "classical" => self.classical = parse_bool(key, v)?,
            "compression_mode" => self.compression_mode = v.parse().map_err(kind)?,
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Effective configuration as `key = value` lines, readable by [`Self::from_text`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("nx_qubits", self.nx_qubits.to_string());
        put("ny_qubits", self.ny_qubits.to_string());
        put("h", self.h.to_string());
        put("boundary", self.boundary.to_string());
        put("thickness", self.thickness.to_string());
        put("lens_top", self.lens_top.to_string());
        put("lens_center", self.lens_center().to_string());
        put("lens_diameter", self.lens_diameter().to_string());
        put("lens_exponent", self.lens_exponent.to_string());
        put("c_vacuum", self.c_vacuum.to_string());
        put("c_material", self.c_material.to_string());
        put("dt", self.dt.to_string());
        put("t_final", self.t_final.to_string());
        put("snapshot_stride", self.snapshot_stride.to_string());
        put("output_stride", self.output_stride.to_string());
        put("method", method_name(self.method).to_string());
        put("monitor_x0", self.monitor_x0.to_string());
        put("monitor_width", self.monitor_width.to_string());
        put("monitor_height", self.monitor_height.to_string());
        put("scan_start", self.scan_range().0.to_string());
        put("scan_end", self.scan_range().1.to_string());
        put("window_start", self.window_start.to_string());
        put("window_end", self.window().1.to_string());
        put(
            "metric",
            match self.metric {
                Metric::EzPower => "ez",
                Metric::Projector => "projector",
            }
            .to_string(),
        );
        put("pulse_row", self.pulse_row.to_string());
        put("pulse_sigma", self.pulse_sigma.to_string());
        put("classical", self.classical.to_string());
        put(
            "compression_mode",
            match self.compression_mode {
                CompressionMode::Exact => "exact",
                CompressionMode::Heuristic => "heuristic",
            }
            .to_string(),
        );
        s
    }

    pub fn nx(&self) -> usize {
        1 << self.nx_qubits
    }

    pub fn ny(&self) -> usize {
        1 << self.ny_qubits
    }

    pub fn lens_center(&self) -> f64 {
        self.lens_center.unwrap_or((self.nx() as f64 - 1.0) / 2.0)
    }

    pub fn lens_diameter(&self) -> f64 {
        self.lens_diameter.unwrap_or(self.nx() as f64)
    }

    /// First row below the lens.
    pub fn lens_bottom(&self) -> usize {
        self.lens_top + self.thickness
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Inclusive range of monitor distances.
    pub fn scan_range(&self) -> (i64, i64) {
        let start = self.scan_start.unwrap_or(-(self.thickness as i64));
        let last = self.ny() as i64 - self.monitor_height as i64 - self.lens_bottom() as i64;
        (start, self.scan_end.unwrap_or(last))
    }

    pub fn window(&self) -> (f64, f64) {
        (self.window_start, self.window_end.unwrap_or(self.t_final))
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::uniform(&[self.nx_qubits, self.ny_qubits], self.h, self.boundary)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.grid()?;
        for (name, v) in [
            ("c_vacuum", self.c_vacuum),
            ("c_material", self.c_material),
            ("dt", self.dt),
            ("t_final", self.t_final),
            ("lens_exponent", self.lens_exponent),
            ("lens_diameter", self.lens_diameter()),
            ("pulse_sigma", self.pulse_sigma),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.thickness == 0 {
            return bad("thickness must be positive".into());
        }
        if self.lens_bottom() > self.ny() {
            return bad(format!(
                "lens rows {}..{} exceed the grid height {}",
                self.lens_top,
                self.lens_bottom(),
                self.ny()
            ));
        }
        let center = self.lens_center();
        if !(center >= 0.0 && center <= (self.nx() - 1) as f64) {
            return bad(format!("lens centre {center} lies outside the grid"));
        }
        let steps = self.t_final / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) || steps.round() < 1.0 {
            return bad(format!("t_final {} is not a positive multiple of dt {}", self.t_final, self.dt));
        }
        if self.snapshot_stride == 0 || self.output_stride == 0 {
            return bad("strides must be at least 1".into());
        }
        if self.monitor_width == 0
            || self.monitor_height == 0
            || self.monitor_x0 + self.monitor_width > self.nx()
            || self.monitor_height > self.ny()
        {
            return bad("monitor region does not fit in the grid".into());
        }
        let (s, e) = self.scan_range();
        let top = self.lens_bottom() as i64 + s;
        let bottom = self.lens_bottom() as i64 + e + self.monitor_height as i64;
        if s > e || top < 0 || bottom > self.ny() as i64 {
            return bad(format!("scan distances {s}..={e} do not fit in the grid"));
        }
        let (w0, w1) = self.window();
        if !(w0 >= 0.0 && w1 > w0 && w1 <= self.t_final * (1.0 + 1e-12)) {
            return bad(format!("integration window [{w0}, {w1}] must lie inside [0, {}]", self.t_final));
        }
        Ok(())
    }
}

/// Target fill fraction `max(0, 1 − |2(x − x_c)/D|^p)` of column `x`.
pub fn lens_fill(config: &ScenarioConfig, x: usize) -> f64 {
    let u = (2.0 * (x as f64 - config.lens_center()) / config.lens_diameter()).abs();
    (1.0 - u.powf(config.lens_exponent)).max(0.0)
}

/// Binary material occupancy by ordered dithering of the fill profile
/// inside the lens slab. Indexed by linear grid index.
pub fn build_lens_pattern(config: &ScenarioConfig) -> Result<Vec<bool>> {
    config.validate()?;
    let grid = config.grid()?;
    let mut occ = vec![false; grid.len()];
    for x in 0..config.nx() {
        let fill = lens_fill(config, x);
        for y in config.lens_top..config.lens_bottom() {
            let threshold = (f64::from(BAYER_4X4[y % 4][x % 4]) + 0.5) / 16.0;
            occ[grid.linear_index([x, y, 0])] = fill > threshold;
        }
    }
    Ok(occ)
}

/// Per-pixel speeds of a binary pattern.
pub fn binary_speeds(occupancy: &[bool], c_vacuum: f64, c_material: f64) -> Vec<f64> {
    occupancy
        .iter()
        .map(|&m| if m { c_material } else { c_vacuum })
        .collect()
}

/// 3×3 edge-clamped mean of the per-pixel speeds.
pub fn smooth_3x3(grid: &GridSpec, occupancy: &[bool], c_vacuum: f64, c_material: f64) -> Result<MaterialField> {
    if grid.dim() != 2 {
        return Err(Error::DimensionMismatch("3x3 smoothing needs a 2D grid".into()));
    }
    if occupancy.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            actual: occupancy.len(),
        });
    }
    let speeds = binary_speeds(occupancy, c_vacuum, c_material);
    let [nx, ny, _] = grid.shape();
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut out = vec![0.0; grid.len()];
    for x in 0..nx {
        for y in 0..ny {
            let mut sum = 0.0;
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let xx = clamp(x as isize + dx, nx);
                    let yy = clamp(y as isize + dy, ny);
                    sum += speeds[grid.linear_index([xx, yy, 0])];
                }
            }
            out[grid.linear_index([x, y, 0])] = sum / 9.0;
        }
    }
    MaterialField::new(grid, out)
}

/// Plane-front Gaussian pulse in component 0, uniform across x.
pub fn build_initial_state(config: &ScenarioConfig) -> Result<StateVector> {
    let grid = config.grid()?;
    let s2 = 2.0 * config.pulse_sigma * config.pulse_sigma;
    let field: Vec<Complex64> = (0..grid.len())
        .map(|j| {
            let y = grid.coords(j)[1] as f64;
            Complex64::new((-(y - config.pulse_row).powi(2) / s2).exp(), 0.0)
        })
        .collect();
    StateVector::from_fields(&grid, SystemKind::Tm2d, &[field])
}

/// Monitor rectangles with their distances from the lens bottom.
pub fn monitor_regions(config: &ScenarioConfig) -> Result<Vec<(i64, RegionMask)>> {
    let grid = config.grid()?;
    let (start, end) = config.scan_range();
    (start..=end)
        .map(|d| {
            let top = (config.lens_bottom() as i64 + d) as usize;
            let mask = RegionMask::rectangle(
                &grid,
                [config.monitor_x0, top, 0],
                [config.monitor_width, config.monitor_height, 1],
            )?;
            Ok((d, mask))
        })
        .collect()
}

/// Everything a scenario produces.
#[derive(Clone, Debug)]
pub struct ScenarioOutput {
    pub config: ScenarioConfig,
    pub grid: GridSpec,
    pub occupancy: Vec<bool>,
    pub material: MaterialField,
    pub cube_terms: CubeTermSet,
    pub compression: CompressionReport,
    pub offsets: Vec<i64>,
    pub ez_series: RegionSeries,
    pub projector_series: RegionSeries,
    /// Scan with the configured metric.
    pub scan: FocalScan,
    /// Scan with the other metric.
    pub alternate_scan: FocalScan,
    /// `(time, ‖ψ‖)` at every snapshot.
    pub norms: Vec<(f64, f64)>,
    /// `(step, time, E_z)` from the quantum path at the output stride.
    pub quantum_frames: Vec<(usize, f64, Vec<f64>)>,
    /// Same for the classical path, when it ran.
    pub classical_frames: Vec<(usize, f64, Vec<f64>)>,
    /// `(time, relative L2 deviation)` at every snapshot, when the classical path ran.
    pub comparison: Option<Vec<(f64, f64)>>,
    pub cfl_warning: bool,
}

impl ScenarioOutput {
    pub fn peak_focus(&self) -> i64 {
        self.offsets[self.scan.peak_argmax]
    }

    pub fn accumulated_focus(&self) -> i64 {
        self.offsets[self.scan.accumulated_argmax]
    }

    /// Scan entry at a given distance, if scanned.
    pub fn at_distance(&self, d: i64) -> Option<&crate::observables::FocalEntry> {
        self.offsets.iter().position(|&o| o == d).map(|i| &self.scan.entries[i])
    }

    pub fn norm_range(&self) -> (f64, f64) {
        self.norms
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, n)| (lo.min(n), hi.max(n)))
    }

    pub fn max_deviation(&self) -> Option<f64> {
        self.comparison
            .as_ref()
            .map(|c| c.iter().map(|&(_, d)| d).fold(0.0, f64::max))
    }
}

struct SnapshotRecord {
    norm: f64,
    ez_region: Vec<f64>,
    projector_region: Vec<f64>,
}

/// Pattern → smoothing → compression → Hamiltonian → evolution (quantum and
/// classical) → focal scan.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutput> {
    let ctx = |stage: &str| format!("scenario w={} ({stage})", config.thickness);
    config.validate().map_err(|e| e.context(ctx("config")))?;
    let grid = config.grid()?;
    let occupancy = build_lens_pattern(config).map_err(|e| e.context(ctx("lens pattern")))?;
    let material = smooth_3x3(&grid, &occupancy, config.c_vacuum, config.c_material)
        .map_err(|e| e.context(ctx("smoothing")))?;
    let binary = binary_speeds(&occupancy, config.c_vacuum, config.c_material);
    let cube_terms =
        compress_values(&binary, &grid, config.compression_mode).map_err(|e| e.context(ctx("compression")))?;
    let compression = report_for(&cube_terms, &binary);
    let h = assemble_tm2d(&grid, &material).map_err(|e| e.context(ctx("assembly")))?;
    let state = build_initial_state(config).map_err(|e| e.context(ctx("initial state")))?;
    let regions = monitor_regions(config)?;
    let offsets: Vec<i64> = regions.iter().map(|r| r.0).collect();
    let masks: Vec<RegionMask> = regions.into_iter().map(|r| r.1).collect();

    let plan = EvolutionPlan::new(config.method, config.dt, config.n_steps(), config.snapshot_stride, &h);
    let solver = WaveSolver::new(&grid, &material)?;
    let mut classical = if config.classical {
        Some(solver.from_state(&state)?)
    } else {
        None
    };
    let mut classical_step = 0usize;
    let mut quantum_frames = Vec::new();
    let mut classical_frames = Vec::new();
    let mut comparison = Vec::new();
    let mut cfl_warning = false;

    let snapshots = evolve_trajectory(&state, &plan, &h, |t, psi| {
        let step = (t / config.dt).round() as usize;
        let ez = reconstruct_ez(psi, &material)?;
        let records = intensity_records(t, psi, &material, &masks)?;
        if let Some(field) = classical.as_mut() {
            while classical_step < step {
                *field = solver.leapfrog_step(field, config.dt)?;
                classical_step += 1;
            }
            cfl_warning |= field.cfl_warning;
            let ez_c = solver.ez(field);
            let diff: f64 = ez.iter().zip(&ez_c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let base: f64 = ez_c.iter().map(|a| a * a).sum::<f64>().sqrt();
            comparison.push((t, if base > 0.0 { diff / base } else { diff }));
            if step.is_multiple_of(config.output_stride) {
                classical_frames.push((step, t, ez_c));
            }
        }
        if step.is_multiple_of(config.output_stride) {
            quantum_frames.push((step, t, ez));
        }
        Ok(SnapshotRecord {
            norm: psi.norm(),
            ez_region: records.iter().map(|r| r.ez_power).collect(),
            projector_region: records.iter().map(|r| r.projector_expectation).collect(),
        })
    })
    .map_err(|e| e.context(ctx("evolution")))?;

    let times: Vec<f64> = snapshots.iter().map(|s| s.time).collect();
    let ez_series = RegionSeries {
        times: times.clone(),
        values: snapshots.iter().map(|s| s.record.ez_region.clone()).collect(),
    };
    let projector_series = RegionSeries {
        times,
        values: snapshots.iter().map(|s| s.record.projector_region.clone()).collect(),
    };
    let norms = snapshots.iter().map(|s| (s.time, s.record.norm)).collect();
    let window = config.window();
    let ez_scan = focal_scan(&ez_series, window).map_err(|e| e.context(ctx("focal scan")))?;
    let projector_scan = focal_scan(&projector_series, window).map_err(|e| e.context(ctx("focal scan")))?;
    let (scan, alternate_scan) = match config.metric {
        Metric::EzPower => (ez_scan, projector_scan),
        Metric::Projector => (projector_scan, ez_scan),
    };
    Ok(ScenarioOutput {
        config: config.clone(),
        grid,
        occupancy,
        material,
        cube_terms,
        compression,
        offsets,
        ez_series,
        projector_series,
        scan,
        alternate_scan,
        norms,
        quantum_frames,
        classical_frames,
        comparison: config.classical.then_some(comparison),
        cfl_warning,
    })
}

/// Runs one scenario per thickness, each on its own thread, results in input order.
pub fn thickness_sweep(base: &ScenarioConfig, thicknesses: &[usize]) -> Result<Vec<ScenarioOutput>> {
    let configs: Vec<ScenarioConfig> = thicknesses
        .iter()
        .map(|&w| ScenarioConfig {
            thickness: w,
            ..base.clone()
        })
        .collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || run_scenario(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    })
}

fn write_frames(dir: &Path, grid: &GridSpec, frames: &[(usize, f64, Vec<f64>)], manifest: &[(&str, String)]) -> Result<()> {
    let traj = TrajectoryDir::create(dir)?;
    traj.write_manifest(manifest)?;
    for (i, (_, _, ez)) in frames.iter().enumerate() {
        GridText::new(grid, ez.clone())?.save(&traj.field_path("ez", i))?;
    }
    traj.write_times(&frames.iter().map(|(s, t, _)| (*s, *t)).collect::<Vec<_>>())
}

/// Writes the configuration, scans, compression report, material maps,
/// trajectories and comparison into `dir`.
pub fn write_outputs(dir: &Path, out: &ScenarioOutput) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::from(e).context(dir.display().to_string()))?;
    let c = &out.config;
    fs::write(dir.join("config.txt"), c.to_text())?;
    let (primary, alternate) = match c.metric {
        Metric::EzPower => ("focal_scan.csv", "focal_scan_projector.csv"),
        Metric::Projector => ("focal_scan.csv", "focal_scan_ez.csv"),
    };
    let mut buf = Vec::new();
    write_focal_csv(&out.scan, &out.offsets, &mut buf)?;
    fs::write(dir.join(primary), &buf)?;
    buf.clear();
    write_focal_csv(&out.alternate_scan, &out.offsets, &mut buf)?;
    fs::write(dir.join(alternate), &buf)?;

    buf.clear();
    write_cube_list(&out.cube_terms, &out.grid, &mut buf)?;
    fs::write(dir.join("cubes.txt"), &buf)?;
    fs::write(
        dir.join("compression.txt"),
        format_report_table(&[(format!("lens w={}", c.thickness), out.compression.clone())]),
    )?;
    GridText::new(&out.grid, out.material.speeds().to_vec())?.save(&dir.join("material.grid"))?;
    GridText::new(&out.grid, out.occupancy.iter().map(|&m| f64::from(u8::from(m))).collect())?
        .save(&dir.join("occupancy.grid"))?;

    let manifest = |source: &str| {
        vec![
            ("source", source.to_string()),
            ("field", "ez".to_string()),
            ("nx", c.nx().to_string()),
            ("ny", c.ny().to_string()),
            ("h", c.h.to_string()),
            ("dt", c.dt.to_string()),
            ("thickness", c.thickness.to_string()),
            ("lens_bottom", c.lens_bottom().to_string()),
        ]
    };
    write_frames(&dir.join("quantum"), &out.grid, &out.quantum_frames, &manifest("quantum"))?;
    if let Some(cmp) = &out.comparison {
        write_frames(&dir.join("classical"), &out.grid, &out.classical_frames, &manifest("classical"))?;
        let mut text = String::from("time,relative_l2_deviation\n");
        for (t, d) in cmp {
            let _ = writeln!(text, "{t},{d:.12e}");
        }
        fs::write(dir.join("comparison.csv"), text)?;
    }
    fs::write(dir.join("summary.txt"), summary(out))?;
    Ok(())
}

/// Human-readable run summary.
pub fn summary(out: &ScenarioOutput) -> String {
    let (lo, hi) = out.norm_range();
    let mut s = String::new();
    let _ = writeln!(s, "thickness = {}", out.config.thickness);
    let _ = writeln!(s, "peak_focus = {}", out.peak_focus());
    let _ = writeln!(s, "accumulated_focus = {}", out.accumulated_focus());
    let _ = writeln!(s, "norm_min = {lo:.15}");
    let _ = writeln!(s, "norm_max = {hi:.15}");
    let _ = writeln!(s, "compression_before = {}", out.compression.before);
    let _ = writeln!(s, "compression_after = {}", out.compression.after);
    if let Some(d) = out.max_deviation() {
        let _ = writeln!(s, "max_classical_deviation = {d:.6e}");
    }
    if out.cfl_warning {
        let _ = writeln!(s, "warning = classical step exceeds the CFL bound");
    }
    s
}

/// Table with one column per pattern and rows Before, After, Ratio.
pub fn format_report_table(rows: &[(String, CompressionReport)]) -> String {
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(10);
    let mut s = format!("{:<8}", "");
    for (name, _) in rows {
        let _ = write!(s, " {name:>width$}");
    }
    s.push('\n');
    let mut line = |label: &str, f: &dyn Fn(&CompressionReport) -> String| {
        let _ = write!(s, "{label:<8}");
        for (_, r) in rows {
            let _ = write!(s, " {:>width$}", f(r));
        }
        s.push('\n');
    };
    line("Before", &|r| r.before.to_string());
    line("After", &|r| r.after.to_string());
    line("Ratio", &|r| {
        if r.homogeneous {
            "0 (homog.)".to_string()
        } else {
            format!("{:.1}%", 100.0 * r.ratio)
        }
    });
    s
}

/// Compression of the reference patterns on an `2^n × 2^n` grid.
pub fn compression_benchmark(n: u32, mode: CompressionMode) -> Result<Vec<(String, CompressionReport)>> {
    let grid = GridSpec::uniform(&[n, n], 1.0, Boundary::Dirichlet)?;
    let side = 1usize << n;
    let (cv, cm) = (1.0, 0.45);
    let mut patterns: Vec<(String, Vec<f64>)> = vec![
        ("checker 1px".to_string(), checker_pattern(&grid, 1, cv, cm)),
        (format!("checker {}px", (side / 8).max(1)), checker_pattern(&grid, (side / 8).max(1), cv, cm)),
        ("grating p4".to_string(), grating_pattern(&grid, 4, 2, cv, cm)),
    ];
    for w in [8usize, 16, 24, 30] {
        let config = ScenarioConfig {
            nx_qubits: n,
            ny_qubits: n,
            thickness: w,
            monitor_x0: side.saturating_sub(8) / 2,
            monitor_width: 8.min(side),
            ..ScenarioConfig::default()
        };
        // thicker lenses do not fit on small grids
        if config.validate().is_err() {
            continue;
        }
        let occ = build_lens_pattern(&config)?;
        patterns.push((format!("lens w={w}"), binary_speeds(&occ, cv, cm)));
    }
    patterns
        .into_iter()
        .map(|(name, values)| {
            let terms = compress_values(&values, &grid, mode)?;
            Ok((name, report_for(&terms, &values)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_text() {
        let c = ScenarioConfig::default();
        assert!(c.validate().is_ok());
        let back = ScenarioConfig::from_text(&c.to_text()).unwrap();
        assert_eq!(back.to_text(), c.to_text());
        assert_eq!(c.n_steps(), 7000);
        assert_eq!(c.scan_range(), (-8, 46));
    }

    #[test]
    fn bad_configs_are_config_errors() {
        for text in [
            "thickness = 70",
            "dt = -1",
            "bogus = 1",
            "t_final = 0.015",
            "monitor_x0 = 60",
            "boundary = sideways",
        ] {
            let err = ScenarioConfig::from_text(text).unwrap_err();
            assert!(err.is_config(), "{text}: {err}");
        }
    }

    #[test]
    fn lens_saturates_at_centre_and_vanishes_at_edges() {
        let c = ScenarioConfig::default();
        let occ = build_lens_pattern(&c).unwrap();
        let g = c.grid().unwrap();
        for y in c.lens_top..c.lens_bottom() {
            assert!(occ[g.linear_index([31, y, 0])]);
            assert!(occ[g.linear_index([32, y, 0])]);
            assert!(!occ[g.linear_index([0, y, 0])]);
            assert!(!occ[g.linear_index([63, y, 0])]);
        }
        for y in (0..c.lens_top).chain(c.lens_bottom()..64) {
            assert!((0..64).all(|x| !occ[g.linear_index([x, y, 0])]));
        }
    }

    #[test]
    fn smoothing_examples() {
        let g = GridSpec::uniform(&[2, 2], 1.0, Boundary::Dirichlet).unwrap();
        let all = smooth_3x3(&g, &[true; 16], 1.0, 0.45).unwrap();
        assert!(all.speeds().iter().all(|&c| (c - 0.45).abs() < 1e-15));
        let none = smooth_3x3(&g, &[false; 16], 1.0, 0.45).unwrap();
        assert!(none.speeds().iter().all(|&c| c == 1.0));
        // Centre pixel (1,1) with 5 material neighbours among its 3x3 block.
        let mut occ = [false; 16];
        for (x, y) in [(0, 0), (0, 1), (1, 1), (2, 1), (2, 2)] {
            occ[g.linear_index([x, y, 0])] = true;
        }
        let m = smooth_3x3(&g, &occ, 1.0, 0.45).unwrap();
        let expected = (5.0 * 0.45 + 4.0 * 1.0) / 9.0;
        assert!((m.speeds()[g.linear_index([1, 1, 0])] - expected).abs() < 1e-15);
    }

    #[test]
    fn report_table_layout() {
        let r = CompressionReport {
            before: 1024,
            after: 8,
            ratio: 8.0 / 1024.0,
            homogeneous: false,
        };
        let t = format_report_table(&[("a".into(), r)]);
        let lines: Vec<&str> = t.lines().collect();
        assert!(lines[1].starts_with("Before") && lines[1].ends_with("1024"));
        assert!(lines[3].ends_with("0.8%"));
    }
}
