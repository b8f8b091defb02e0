//! Region projectors, field reconstruction and focal-scan metrics.

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::{MaterialField, RegionMask, StateVector, SystemKind};

/// `Σ_{j ∈ region} |ψ(component, j)|²`, the expectation of the region projector.
pub fn region_expectation(state: &StateVector, region: &RegionMask, component: usize) -> Result<f64> {
    let amps = state.component(component)?;
    if let Some(&last) = region.indices().last() {
        if last >= amps.len() {
            return Err(Error::DimensionMismatch(format!(
                "region index {last} outside a grid of {} points",
                amps.len()
            )));
        }
    }
    Ok(region.indices().iter().map(|&j| amps[j].norm_sqr()).sum())
}

/// `E_z = −c · norm · Re ψ_0` on every grid point.
pub fn reconstruct_ez(state: &StateVector, material: &MaterialField) -> Result<Vec<f64>> {
    if state.components() != SystemKind::Tm2d.components() {
        return Err(Error::DimensionMismatch("E_z reconstruction needs a TM state".into()));
    }
    let norm = state.normalization().ok_or(Error::MissingNormalization)?;
    let psi0 = state.component(0)?;
    if material.len() != psi0.len() {
        return Err(Error::LengthMismatch {
            expected: psi0.len(),
            actual: material.len(),
        });
    }
    Ok(psi0
        .iter()
        .zip(material.speeds())
        .map(|(p, c)| -c * norm * p.re)
        .collect())
}

/// Measurement of one region at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityRecord {
    pub time: f64,
    pub region: usize,
    /// `Σ_region |ψ_0|²`, in `[0, 1]`.
    pub projector_expectation: f64,
    /// `Σ_region E_z²` in physical units.
    pub ez_power: f64,
}

/// Both region metrics for every region at the time of `state`.
pub fn intensity_records(
    time: f64,
    state: &StateVector,
    material: &MaterialField,
    regions: &[RegionMask],
) -> Result<Vec<IntensityRecord>> {
    let ez = reconstruct_ez(state, material)?;
    regions
        .iter()
        .enumerate()
        .map(|(region, mask)| {
            Ok(IntensityRecord {
                time,
                region,
                projector_expectation: region_expectation(state, mask, 0)?,
                ez_power: mask.indices().iter().map(|&j| ez[j] * ez[j]).sum(),
            })
        })
        .collect()
}

/// Which intensity a focal scan integrates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Metric {
    /// `|E_z|²`.
    #[default]
    EzPower,
    /// `|ψ_0|²`, the bare projector expectation.
    Projector,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ez" | "ez_power" | "e2" => Ok(Metric::EzPower),
            "projector" | "u0" => Ok(Metric::Projector),
            other => Err(Error::Parse(format!("unknown metric {other:?}"))),
        }
    }
}

/// Region intensities over time: `values[k][r]` is region `r` at `times[k]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegionSeries {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl RegionSeries {
    /// Sums per-pixel densities over each region.
    pub fn from_densities(snapshots: &[(f64, Vec<f64>)], regions: &[RegionMask]) -> Result<Self> {
        check_regions(regions)?;
        let mut series = RegionSeries::default();
        for (t, density) in snapshots {
            let row = regions
                .iter()
                .map(|r| {
                    r.indices()
                        .iter()
                        .map(|&j| {
                            density.get(j).copied().ok_or_else(|| {
                                Error::DimensionMismatch(format!(
                                    "region index {j} outside a snapshot of {} points",
                                    density.len()
                                ))
                            })
                        })
                        .sum::<Result<f64>>()
                })
                .collect::<Result<Vec<_>>>()?;
            series.times.push(*t);
            series.values.push(row);
        }
        Ok(series)
    }

    /// Picks one metric out of per-snapshot intensity records.
    pub fn from_records(records: &[Vec<IntensityRecord>], metric: Metric) -> Self {
        let mut series = RegionSeries::default();
        for snap in records {
            series.times.push(snap.first().map_or(0.0, |r| r.time));
            series.values.push(
                snap.iter()
                    .map(|r| match metric {
                        Metric::EzPower => r.ez_power,
                        Metric::Projector => r.projector_expectation,
                    })
                    .collect(),
            );
        }
        series
    }
}

fn check_regions(regions: &[RegionMask]) -> Result<()> {
    if let Some(first) = regions.first() {
        if let Some(r) = regions.iter().find(|r| r.len() != first.len()) {
            return Err(Error::DimensionMismatch(format!(
                "monitor regions differ in size ({} vs {})",
                first.len(),
                r.len()
            )));
        }
    }
    Ok(())
}

/// Metrics of one monitoring region.
#[derive(Clone, Debug, PartialEq)]
pub struct FocalEntry {
    pub peak: f64,
    pub accumulated: f64,
    pub t_of_peak: f64,
}

/// Per-region metrics and the regions maximizing each.
#[derive(Clone, Debug, PartialEq)]
pub struct FocalScan {
    pub entries: Vec<FocalEntry>,
    pub peak_argmax: usize,
    pub accumulated_argmax: usize,
}

/// Peak and time-integrated intensity per region over `[t0, t1]`.
///
/// The peak is the maximum over snapshots inside the window; the integral is
/// a left rectangle rule at snapshot resolution, clipped to the window.
pub fn focal_scan(series: &RegionSeries, window: (f64, f64)) -> Result<FocalScan> {
    let (t0, t1) = window;
    let empty = Error::EmptyWindow { start: t0, end: t1 };
    let times = &series.times;
    let eps = 1e-9 * t1.abs().max(1.0);
    if !(t1 > t0) || times.is_empty() || t0 < times[0] - eps || t1 > times[times.len() - 1] + eps {
        return Err(empty);
    }
    let inside: Vec<usize> = (0..times.len())
        .filter(|&k| times[k] >= t0 - eps && times[k] <= t1 + eps)
        .collect();
    if inside.is_empty() {
        return Err(empty);
    }
    let regions = series.values[inside[0]].len();
    let mut entries = Vec::with_capacity(regions);
    for r in 0..regions {
        let mut peak = f64::NEG_INFINITY;
        let mut t_of_peak = times[inside[0]];
        let mut accumulated = 0.0;
        for &k in &inside {
            let value = series.values[k][r];
            if value > peak {
                peak = value;
                t_of_peak = times[k];
            }
            if times[k] < t1 - eps {
                let next = times.get(k + 1).copied().unwrap_or(t1).min(t1);
                accumulated += value * (next - times[k]);
            }
        }
        entries.push(FocalEntry {
            peak,
            accumulated,
            t_of_peak,
        });
    }
    let argmax = |f: fn(&FocalEntry) -> f64| {
        entries
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, e)| if f(e) > best.1 { (i, f(e)) } else { best })
            .0
    };
    Ok(FocalScan {
        peak_argmax: argmax(|e| e.peak),
        accumulated_argmax: argmax(|e| e.accumulated),
        entries,
    })
}

/// CSV `region_offset,peak,accumulated,t_of_peak`, one row per region.
pub fn write_focal_csv<W: Write>(scan: &FocalScan, offsets: &[i64], mut out: W) -> Result<()> {
    if offsets.len() != scan.entries.len() {
        return Err(Error::LengthMismatch {
            expected: scan.entries.len(),
            actual: offsets.len(),
        });
    }
    writeln!(out, "region_offset,peak,accumulated,t_of_peak")?;
    for (d, e) in offsets.iter().zip(&scan.entries) {
        writeln!(out, "{d},{:.12e},{:.12e},{}", e.peak, e.accumulated, e.t_of_peak)?;
    }
    Ok(())
}
