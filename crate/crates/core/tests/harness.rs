use std::fs;
use std::path::Path;

use hsim_core::evolution::{evolve_trajectory, EvolutionPlan, Method};
use hsim_core::grid::{GridSpec, MaterialField, RegionMask};
use hsim_core::harness::{
    build_initial_state, build_lens_pattern, lens_fill, monitor_regions, run_scenario, smooth_3x3,
    thickness_sweep, write_outputs, ScenarioConfig, BAYER_4X4,
};
use hsim_core::observables::region_expectation;
use hsim_core::operators::assemble_tm2d;

fn small_config() -> ScenarioConfig {
    ScenarioConfig::from_text(
        "nx_qubits = 5\nny_qubits = 5\nthickness = 4\nlens_top = 4\nt_final = 4\nmonitor_x0 = 12\nmonitor_width = 8\n",
    )
    .unwrap()
}

#[test]
fn bayer_matrix_is_a_permutation() {
    let mut seen: Vec<u8> = BAYER_4X4.iter().flatten().copied().collect();
    seen.sort_unstable();
    assert_eq!(seen, (0..16).collect::<Vec<u8>>());
}

/// On every aligned 4×4 tile inside the slab the occupied fraction tracks the
/// mean fill: within half a quantization step plus the fill spread across the tile.
#[test]
fn dithered_tiles_track_fill() {
    for w in [8, 16, 24, 30] {
        let config = ScenarioConfig {
            thickness: w,
            ..ScenarioConfig::default()
        };
        let grid = config.grid().unwrap();
        let occ = build_lens_pattern(&config).unwrap();
        let first_tile_row = config.lens_top.div_ceil(4) * 4;
        let mut tiles = 0;
        for y0 in (first_tile_row..config.lens_bottom().saturating_sub(3)).step_by(4) {
            for x0 in (0..config.nx()).step_by(4) {
                let fills: Vec<f64> = (x0..x0 + 4).map(|x| lens_fill(&config, x)).collect();
                let mean_fill = fills.iter().sum::<f64>() / 4.0;
                let spread = fills.iter().cloned().fold(f64::MIN, f64::max) - fills.iter().cloned().fold(f64::MAX, f64::min);
                let occupied = (x0..x0 + 4)
                    .flat_map(|x| (y0..y0 + 4).map(move |y| (x, y)))
                    .filter(|&(x, y)| occ[grid.linear_index([x, y, 0])])
                    .count();
                let frac = occupied as f64 / 16.0;
                assert!((frac - mean_fill).abs() <= 1.0 / 32.0 + spread + 1e-12, "w={w} tile ({x0},{y0}): {frac} vs {mean_fill}");
                tiles += 1;
            }
        }
        assert!(tiles > 0);
    }
}

#[test]
fn dithering_saturates_and_stays_in_the_slab() {
    let config = ScenarioConfig::default();
    let grid = config.grid().unwrap();
    let occ = build_lens_pattern(&config).unwrap();
    for x in 0..config.nx() {
        let fill = lens_fill(&config, x);
        for y in 0..config.ny() {
            let m = occ[grid.linear_index([x, y, 0])];
            let inside = (config.lens_top..config.lens_bottom()).contains(&y);
            if !inside || fill <= 0.5 / 16.0 {
                assert!(!m, "({x},{y})");
            } else if fill > 15.5 / 16.0 {
                assert!(m, "({x},{y})");
            }
        }
    }
}

#[test]
fn smoothing_averages_the_neighbourhood() {
    let grid = GridSpec::uniform(&[2, 2], 1.0, hsim_core::grid::Boundary::Dirichlet).unwrap();
    let mut occ = vec![false; grid.len()];
    for (x, y) in [(0, 0), (1, 0), (2, 0), (0, 1), (0, 2)] {
        occ[grid.linear_index([x, y, 0])] = true;
    }
    let m = smooth_3x3(&grid, &occ, 1.0, 0.45).unwrap();
    let centre = m.speeds()[grid.linear_index([1, 1, 0])];
    assert!((centre - (5.0 * 0.45 + 4.0) / 9.0).abs() < 1e-15);
    let corner = m.speeds()[grid.linear_index([3, 3, 0])];
    assert_eq!(corner, 1.0);
}

#[test]
fn initial_pulse_is_uniform_across_x_and_sits_on_the_launch_rows() {
    let config = ScenarioConfig::default();
    let grid = config.grid().unwrap();
    let state = build_initial_state(&config).unwrap();
    let psi0 = state.component(0).unwrap();
    for y in 0..config.ny() {
        let first = psi0[grid.linear_index([0, y, 0])];
        for x in 1..config.nx() {
            assert_eq!(psi0[grid.linear_index([x, y, 0])], first);
        }
    }
    let launch = RegionMask::rectangle(&grid, [0, 0, 0], [config.nx(), 7, 1]).unwrap();
    assert!((region_expectation(&state, &launch, 0).unwrap() - 1.0).abs() < 1e-6);
}

/// A pulse centred between two rows splits into mirror-image fronts.
#[test]
fn centred_pulse_splits_evenly() {
    let config = ScenarioConfig {
        pulse_row: 31.5,
        ..ScenarioConfig::default()
    };
    let grid = config.grid().unwrap();
    let ny = config.ny();
    let material = MaterialField::uniform(&grid, 1.0).unwrap();
    let h = assemble_tm2d(&grid, &material).unwrap();
    let state = build_initial_state(&config).unwrap();
    let plan = EvolutionPlan::new(Method::Trotter1, 0.01, 10, 10, &h);
    let last = evolve_trajectory(&state, &plan, &h, |_, psi| Ok(psi.clone())).unwrap().pop().unwrap().record;
    let row = |c: usize, y: usize| -> f64 {
        let amps = last.component(c).unwrap();
        (0..config.nx()).map(|x| amps[grid.linear_index([x, y, 0])].norm_sqr()).sum()
    };
    // ψ_0 and ψ_x mirror about 31.5; ψ_y sits on the staggered rows and mirrors about 32.
    let mut up = 0.0;
    let mut down = 0.0;
    for y in 0..ny / 2 {
        up += row(0, y) + row(1, y);
        down += row(0, ny - 1 - y) + row(1, ny - 1 - y);
    }
    for y in 0..ny / 2 {
        up += row(2, y);
    }
    for y in ny / 2 + 1..ny {
        down += row(2, y);
    }
    let moved = 1.0 - (0..ny).map(|y| row(0, y)).sum::<f64>();
    assert!(moved > 1e-6, "the pulse did not move");
    assert!((up - down).abs() < 1e-10, "{up} vs {down}");
    let psi0 = last.component(0).unwrap();
    for y in 0..ny / 2 {
        let a = psi0[grid.linear_index([5, y, 0])];
        let b = psi0[grid.linear_index([5, ny - 1 - y, 0])];
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn monitor_regions_cover_the_scan_range() {
    let config = ScenarioConfig::default();
    assert_eq!(config.scan_range(), (-8, 46));
    let regions = monitor_regions(&config).unwrap();
    assert_eq!(regions.len(), 55);
    let grid = config.grid().unwrap();
    for (d, mask) in &regions {
        assert_eq!(mask.len(), 32);
        let top = mask.indices().iter().map(|&j| grid.coords(j)[1]).min().unwrap();
        assert_eq!(top as i64, config.lens_bottom() as i64 + d);
    }
}

#[test]
fn config_text_round_trips_and_rejects_nonsense() {
    let config = small_config();
    let again = ScenarioConfig::from_text(&config.to_text()).unwrap();
    assert_eq!(again.to_text(), config.to_text());
    assert_eq!(again.scan_range(), config.scan_range());
    assert_eq!(again.lens_center(), config.lens_center());
    assert_eq!(again.window(), config.window());
    for bad in [
        "thickness = 0",
        "dt = -1",
        "t_final = 0.015",
        "unknown_key = 3",
        "lens_top = 60\nthickness = 8",
        "monitor_x0 = 60",
        "method = sideways",
        "window_end = 100",
    ] {
        let err = ScenarioConfig::from_text(bad).and_then(|c| c.validate()).unwrap_err();
        assert!(err.is_config(), "{bad}: {err}");
    }
}

#[test]
fn compression_counts_occupied_pixels() {
    let out = run_scenario(&small_config()).unwrap();
    let occupied = out.occupancy.iter().filter(|&&m| m).count();
    assert_eq!(out.compression.before, occupied);
    assert!(out.compression.after <= occupied);
}

fn dir_contents(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn runs_are_deterministic() {
    let config = small_config();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_outputs(a.path(), &run_scenario(&config).unwrap()).unwrap();
    let threaded = thickness_sweep(&config, &[2, 4]).unwrap();
    write_outputs(b.path(), &threaded[1]).unwrap();
    let (ca, cb) = (dir_contents(a.path()), dir_contents(b.path()));
    assert!(ca.iter().any(|(name, _)| name == "focal_scan.csv"));
    assert_eq!(ca, cb);
}

/// Full 64×64, w=8 scenario: quantum and leapfrog E_z agree, and the gap
/// shrinks with the step.
#[test]
fn quantum_and_classical_agree_on_the_lens_scenario() {
    let coarse = run_scenario(&ScenarioConfig::default()).unwrap();
    let fine = run_scenario(&ScenarioConfig {
        dt: 0.005,
        snapshot_stride: 10,
        output_stride: 40,
        ..ScenarioConfig::default()
    })
    .unwrap();
    let (dc, df) = (coarse.max_deviation().unwrap(), fine.max_deviation().unwrap());
    assert!(dc <= 5e-2, "{dc}");
    assert!(df < dc, "{df} !< {dc}");
    assert!(!coarse.cfl_warning);
}
