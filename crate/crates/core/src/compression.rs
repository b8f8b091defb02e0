//! Logical compression of a diagonal material operator.
//!
//! The diagonal is written as `baseline · I + Σ δ_k P_k`, where each `P_k`
//! projects onto an aligned cube of grid indices described by a `{0,1,x}`
//! pattern. Points with the same value form a class; each non-baseline class
//! is partitioned into disjoint cubes, so every point receives at most one
//! delta and the expansion reproduces the input bit for bit.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::grid::{BitPattern, GridSpec, MaterialField};

/// Largest qubit count for exact minimization.
pub const MAX_EXACT_QUBITS: u32 = 16;
/// Below this qubit count exact mode runs a branch-and-bound minimum cover.
pub const BRANCH_AND_BOUND_QUBITS: u32 = 12;
/// Search-node budget for the branch-and-bound cover of one class.
pub const COVER_NODE_BUDGET: usize = 200_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CompressionMode {
    Exact,
    #[default]
    Heuristic,
}

impl std::str::FromStr for CompressionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(CompressionMode::Exact),
            "heuristic" | "greedy" => Ok(CompressionMode::Heuristic),
            other => Err(Error::Parse(format!("unknown compression mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CubeTerm {
    pub delta: f64,
    /// Rounding residual of `delta`; usually zero.
    pub delta_lo: f64,
    pub pattern: BitPattern,
}

impl CubeTerm {
    pub fn new(delta: f64, pattern: BitPattern) -> Self {
        CubeTerm {
            delta,
            delta_lo: 0.0,
            pattern,
        }
    }

    /// Value of a point covered by this cube alone.
    pub fn apply(&self, base: f64) -> f64 {
        (base + self.delta) + self.delta_lo
    }
}

/// Baseline plus cube terms over `n` spatial qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct CubeTermSet {
    pub baseline: f64,
    pub cubes: Vec<CubeTerm>,
    pub n: u32,
    /// True when every class cover is known to be minimum.
    pub optimal: bool,
}

impl CubeTermSet {
    pub fn term_count(&self) -> usize {
        self.cubes.len()
    }
}

/// Value classes in ascending value order, each with its sorted indices.
fn value_classes(values: &[f64]) -> Vec<(f64, Vec<u32>)> {
    let mut classes: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
    for (j, v) in values.iter().enumerate() {
        classes.entry(v.to_bits()).or_default().push(j as u32);
    }
    let mut out: Vec<(f64, Vec<u32>)> = classes.into_iter().map(|(b, idx)| (f64::from_bits(b), idx)).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Most frequent value; ties go to 1.0 when it is tied, else to the smallest.
fn pick_baseline(classes: &[(f64, Vec<u32>)]) -> f64 {
    let best = classes.iter().map(|c| c.1.len()).max().unwrap_or(0);
    let tied: Vec<f64> = classes.iter().filter(|c| c.1.len() == best).map(|c| c.0).collect();
    if tied.contains(&1.0) {
        1.0
    } else {
        tied.first().copied().unwrap_or(1.0)
    }
}

/// Split `value − baseline` into `hi + lo` with `(baseline + hi) + lo == value`.
///
/// A single delta is not always enough: `1.0 + d` lands on the `2^-53` grid
/// and can never equal a value such as 0.45 whose last bit is finer. The
/// residual `lo = value − (baseline + hi)` is exact by Sterbenz's lemma.
fn exact_delta(baseline: f64, value: f64) -> Result<(f64, f64)> {
    let hi = value - baseline;
    let partial = baseline + hi;
    let lo = value - partial;
    if hi.is_finite() && lo.is_finite() && partial + lo == value {
        Ok((hi, lo))
    } else {
        Err(Error::UnrepresentableDelta { baseline, value })
    }
}

/// Sort key ordering patterns by characters MSB first with `0 < 1 < x`.
fn lexicographic_key(p: &BitPattern) -> u64 {
    (0..p.len()).rev().fold(0u64, |acc, b| {
        let digit = if p.care() >> b & 1 == 0 {
            2
        } else {
            (p.value() >> b & 1) as u64
        };
        acc * 3 + digit
    })
}

/// Every implicant (cube contained in the ON-set), generated by merging
/// pairs that differ in one fixed bit, level by level.
fn all_implicants(on_set: &[u32], n: u32) -> Vec<BitPattern> {
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut level: Vec<(u32, u32)> = on_set.iter().map(|&m| (full, m)).collect();
    level.sort_unstable();
    level.dedup();
    let mut all = Vec::new();
    while !level.is_empty() {
        let mut next = Vec::new();
        for &(care, value) in &level {
            let mut bits = care & !value;
            while bits != 0 {
                let b = bits & bits.wrapping_neg();
                bits ^= b;
                if level.binary_search(&(care, value | b)).is_ok() {
                    next.push((care & !b, value));
                }
            }
        }
        next.sort_unstable();
        next.dedup();
        all.extend(level.iter().map(|&(c, v)| BitPattern::new(c, v, n)));
        level = next;
    }
    all
}

/// Implicants in selection order: larger first, then lexicographic.
fn ordered_implicants(on_set: &[u32], n: u32) -> Vec<BitPattern> {
    let mut imps = all_implicants(on_set, n);
    imps.sort_by_key(|p| (std::cmp::Reverse(p.size()), lexicographic_key(p)));
    imps
}

/// Bitmap over `2^n` indices.
struct Cover {
    words: Vec<u64>,
}

impl Cover {
    fn new(n: u32) -> Self {
        Cover {
            words: vec![0; (1usize << n).div_ceil(64)],
        }
    }

    fn get(&self, j: u32) -> bool {
        self.words[(j / 64) as usize] >> (j % 64) & 1 == 1
    }

    fn set(&mut self, j: u32, on: bool) {
        let w = &mut self.words[(j / 64) as usize];
        if on {
            *w |= 1 << (j % 64);
        } else {
            *w &= !(1 << (j % 64));
        }
    }
}

/// Greedy disjoint cover: scan implicants in selection order and keep each
/// one that touches no covered point.
fn greedy_cover(on_set: &[u32], n: u32, order: &[BitPattern]) -> Vec<BitPattern> {
    let mut cover = Cover::new(n);
    let mut covered = 0;
    let mut chosen = Vec::new();
    for p in order {
        if covered == on_set.len() {
            break;
        }
        let points = p.expand();
        if points.iter().all(|&j| !cover.get(j)) {
            for &j in &points {
                cover.set(j, true);
            }
            covered += points.len();
            chosen.push(*p);
        }
    }
    chosen
}

struct ExactSearch<'a> {
    on_set: &'a [u32],
    order: &'a [BitPattern],
    /// Implicant indices containing each ON-set point, in selection order.
    containing: Vec<Vec<usize>>,
    cover: Cover,
    largest: usize,
    best: Vec<usize>,
    current: Vec<usize>,
    nodes: usize,
    exhausted: bool,
}

impl ExactSearch<'_> {
    fn position(&self, j: u32) -> usize {
        self.on_set.binary_search(&j).expect("implicant points lie in the ON-set")
    }

    fn search(&mut self, remaining: usize) {
        if remaining == 0 {
            if self.current.len() < self.best.len() {
                self.best = self.current.clone();
            }
            return;
        }
        self.nodes += 1;
        if self.nodes > COVER_NODE_BUDGET {
            self.exhausted = true;
            return;
        }
        let bound = self.current.len() + remaining.div_ceil(self.largest);
        if bound >= self.best.len() {
            return;
        }
        let first = self
            .on_set
            .iter()
            .position(|&j| !self.cover.get(j))
            .expect("remaining points exist");
        let candidates = self.containing[first].clone();
        for k in candidates {
            let points = self.order[k].expand();
            if points.iter().any(|&j| self.cover.get(j)) {
                continue;
            }
            for &j in &points {
                self.cover.set(j, true);
            }
            self.current.push(k);
            self.search(remaining - points.len());
            self.current.pop();
            for &j in &points {
                self.cover.set(j, false);
            }
            if self.exhausted {
                return;
            }
        }
    }
}

/// Minimum disjoint cover by branch and bound, seeded with the greedy cover.
/// Returns the cover and whether the search finished within its budget.
fn exact_cover(on_set: &[u32], n: u32, order: &[BitPattern]) -> (Vec<BitPattern>, bool) {
    let greedy = greedy_cover(on_set, n, order);
    let mut search = ExactSearch {
        on_set,
        order,
        containing: vec![Vec::new(); on_set.len()],
        cover: Cover::new(n),
        largest: order.first().map_or(1, BitPattern::size),
        best: Vec::new(),
        current: Vec::new(),
        nodes: 0,
        exhausted: false,
    };
    for (k, p) in order.iter().enumerate() {
        for j in p.expand() {
            let pos = search.position(j);
            search.containing[pos].push(k);
        }
    }
    // Sentinel: any solution must beat the greedy one.
    search.best = vec![usize::MAX; greedy.len()];
    search.search(on_set.len());
    if search.best.first() == Some(&usize::MAX) {
        (greedy, !search.exhausted)
    } else {
        let cubes = search.best.iter().map(|&k| order[k]).collect();
        (cubes, !search.exhausted)
    }
}

/// Disjoint cube partition of an ON-set; the flag reports proven minimality.
pub fn minimize_on_set(on_set: &[u32], n: u32, mode: CompressionMode) -> Result<(Vec<BitPattern>, bool)> {
    if mode == CompressionMode::Exact && n > MAX_EXACT_QUBITS {
        return Err(Error::CostGuard(format!(
            "exact minimization is limited to {MAX_EXACT_QUBITS} qubits, got {n}"
        )));
    }
    let mut sorted = on_set.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() {
        return Ok((Vec::new(), true));
    }
    let order = ordered_implicants(&sorted, n);
    if mode == CompressionMode::Exact && n < BRANCH_AND_BOUND_QUBITS {
        return Ok(exact_cover(&sorted, n, &order));
    }
    let cover = greedy_cover(&sorted, n, &order);
    // A single cube is trivially minimum.
    let optimal = cover.len() <= 1;
    Ok((cover, optimal))
}

/// Compresses `material` into a baseline and disjoint cube terms.
pub fn compress_diagonal(material: &MaterialField, grid: &GridSpec, mode: CompressionMode) -> Result<CubeTermSet> {
    compress_values(material.speeds(), grid, mode)
}

/// Same as [`compress_diagonal`] for an arbitrary real field.
pub fn compress_values(values: &[f64], grid: &GridSpec, mode: CompressionMode) -> Result<CubeTermSet> {
    if values.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            actual: values.len(),
        });
    }
    let n = grid.spatial_qubits();
    if mode == CompressionMode::Exact && n > MAX_EXACT_QUBITS {
        return Err(Error::CostGuard(format!(
            "exact minimization is limited to {MAX_EXACT_QUBITS} qubits, got {n}"
        )));
    }
    let classes = value_classes(values);
    let baseline = pick_baseline(&classes);
    let mut cubes = Vec::new();
    let mut optimal = true;
    for (value, on_set) in &classes {
        if value.to_bits() == baseline.to_bits() {
            continue;
        }
        let (delta, delta_lo) = exact_delta(baseline, *value)?;
        let (cover, proven) = minimize_on_set(on_set, n, mode)?;
        optimal &= proven;
        cubes.extend(cover.into_iter().map(|pattern| CubeTerm {
            delta,
            delta_lo,
            pattern,
        }));
    }
    Ok(CubeTermSet {
        baseline,
        cubes,
        n,
        optimal,
    })
}

/// `baseline + Σ δ_k` over the cubes matching each grid index, adding each
/// delta's residual right after it.
pub fn expand_cubes(terms: &CubeTermSet, grid: &GridSpec) -> Result<Vec<f64>> {
    let n = grid.spatial_qubits();
    if terms.n != n {
        return Err(Error::PatternLength {
            pattern: format!("<{} qubits>", terms.n),
            expected: n as usize,
            actual: terms.n as usize,
        });
    }
    let mut out = vec![terms.baseline; grid.len()];
    for cube in &terms.cubes {
        if cube.pattern.len() != n {
            return Err(Error::PatternLength {
                pattern: cube.pattern.to_string(),
                expected: n as usize,
                actual: cube.pattern.len() as usize,
            });
        }
        for j in cube.pattern.expand() {
            let v = &mut out[j as usize];
            *v = cube.apply(*v);
        }
    }
    Ok(out)
}

/// Term counts before and after compression.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressionReport {
    /// Grid points whose value differs from the baseline.
    pub before: usize,
    /// Number of cube terms.
    pub after: usize,
    /// `after / before`, or 0 for a homogeneous medium.
    pub ratio: f64,
    pub homogeneous: bool,
}

pub fn report_for(terms: &CubeTermSet, values: &[f64]) -> CompressionReport {
    let before = values.iter().filter(|v| v.to_bits() != terms.baseline.to_bits()).count();
    let after = terms.cubes.len();
    CompressionReport {
        before,
        after,
        ratio: if before == 0 { 0.0 } else { after as f64 / before as f64 },
        homogeneous: before == 0,
    }
}

pub fn compression_report(material: &MaterialField, grid: &GridSpec, mode: CompressionMode) -> Result<CompressionReport> {
    let terms = compress_diagonal(material, grid, mode)?;
    Ok(report_for(&terms, material.speeds()))
}

/// Binary checkerboard with square cells of `cell` pixels: cells where the
/// cell coordinates have odd sum take `material`.
pub fn checker_pattern(grid: &GridSpec, cell: usize, vacuum: f64, material: f64) -> Vec<f64> {
    let cell = cell.max(1);
    (0..grid.len())
        .map(|j| {
            let [x, y, z] = grid.coords(j);
            if (x / cell + y / cell + z / cell) % 2 == 1 {
                material
            } else {
                vacuum
            }
        })
        .collect()
}

/// Stripes along x: `on` material columns followed by `period − on` vacuum columns.
pub fn grating_pattern(grid: &GridSpec, period: usize, on: usize, vacuum: f64, material: f64) -> Vec<f64> {
    let period = period.max(1);
    (0..grid.len())
        .map(|j| if grid.coords(j)[0] % period < on { material } else { vacuum })
        .collect()
}

/// Writes `# baseline <v>` then one `delta pattern_x pattern_y [pattern_z]`
/// line per cube. A nonzero residual is appended to the delta as `hi+lo`
/// (for example `-0.55+2.7755575615628914e-17`).
pub fn write_cube_list<W: Write>(terms: &CubeTermSet, grid: &GridSpec, mut out: W) -> Result<()> {
    writeln!(out, "# baseline {}", terms.baseline)?;
    for cube in &terms.cubes {
        if cube.delta_lo == 0.0 {
            write!(out, "{}", cube.delta)?;
        } else {
            write!(out, "{}{:+e}", cube.delta, cube.delta_lo)?;
        }
        for part in cube.pattern.split(grid.qubits()) {
            write!(out, " {part}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads the format produced by [`write_cube_list`].
pub fn read_cube_list<R: BufRead>(input: R, grid: &GridSpec) -> Result<CubeTermSet> {
    let mut baseline = None;
    let mut cubes = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("baseline") {
                baseline = Some(parse_f64(v.trim(), lineno)?);
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (delta, delta_lo) = parse_delta(fields.next().unwrap_or_default(), lineno)?;
        let parts = fields.map(BitPattern::parse).collect::<Result<Vec<_>>>()?;
        if parts.len() != grid.dim() {
            return Err(Error::Parse(format!(
                "line {}: expected {} axis patterns, found {}",
                lineno + 1,
                grid.dim(),
                parts.len()
            )));
        }
        for (axis, p) in parts.iter().enumerate() {
            if p.len() != grid.axis_qubits(axis) {
                return Err(Error::PatternLength {
                    pattern: p.to_string(),
                    expected: grid.axis_qubits(axis) as usize,
                    actual: p.len() as usize,
                });
            }
        }
        cubes.push(CubeTerm {
            delta,
            delta_lo,
            pattern: BitPattern::concat(&parts),
        });
    }
    Ok(CubeTermSet {
        baseline: baseline.ok_or_else(|| Error::Parse("cube list has no baseline line".into()))?,
        cubes,
        n: grid.spatial_qubits(),
        optimal: false,
    })
}

/// Parses `hi` or `hi±lo`; `hi` is printed without an exponent.
fn parse_delta(s: &str, lineno: usize) -> Result<(f64, f64)> {
    let split = s
        .char_indices()
        .skip(1)
        .find(|&(i, c)| (c == '+' || c == '-') && !s[..i].ends_with(['e', 'E']))
        .map(|(i, _)| i);
    match split {
        Some(i) => Ok((parse_f64(&s[..i], lineno)?, parse_f64(&s[i..], lineno)?)),
        None => Ok((parse_f64(s, lineno)?, 0.0)),
    }
}

fn parse_f64(s: &str, lineno: usize) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Parse(format!("line {}: {s:?} is not a number", lineno + 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    fn grid2(nx: u32, ny: u32) -> GridSpec {
        GridSpec::uniform(&[nx, ny], 1.0, Boundary::Dirichlet).unwrap()
    }

    #[test]
    fn homogeneous_has_no_terms() {
        let g = grid2(3, 3);
        let m = MaterialField::uniform(&g, 1.0).unwrap();
        let t = compress_diagonal(&m, &g, CompressionMode::Exact).unwrap();
        assert_eq!(t.baseline, 1.0);
        assert!(t.cubes.is_empty());
        let r = compression_report(&m, &g, CompressionMode::Heuristic).unwrap();
        assert_eq!((r.before, r.after, r.ratio, r.homogeneous), (0, 0, 0.0, true));
    }

    #[test]
    fn pixel_checkerboard_needs_two_cubes() {
        let g = grid2(2, 2);
        let values = checker_pattern(&g, 1, 1.0, 0.45);
        for mode in [CompressionMode::Exact, CompressionMode::Heuristic] {
            let t = compress_values(&values, &g, mode).unwrap();
            assert_eq!(t.baseline, 1.0);
            let mut pats: Vec<String> = t.cubes.iter().map(|c| c.pattern.to_string()).collect();
            pats.sort();
            assert_eq!(pats, vec!["x0x1", "x1x0"]);
            assert_eq!(expand_cubes(&t, &g).unwrap(), values);
        }
    }

    #[test]
    fn baseline_tie_prefers_vacuum_then_smallest() {
        assert_eq!(pick_baseline(&value_classes(&[0.45, 1.0])), 1.0);
        assert_eq!(pick_baseline(&value_classes(&[0.7, 0.45])), 0.45);
        assert_eq!(pick_baseline(&value_classes(&[0.7, 0.45, 0.7])), 0.7);
    }

    #[test]
    fn expansion_edge_cases() {
        let g = grid2(1, 2);
        let mut t = CubeTermSet {
            baseline: 0.3,
            cubes: Vec::new(),
            n: 3,
            optimal: true,
        };
        assert_eq!(expand_cubes(&t, &g).unwrap(), vec![0.3; 8]);
        t.cubes.push(CubeTerm::new(0.5, BitPattern::parse("xxx").unwrap()));
        assert_eq!(expand_cubes(&t, &g).unwrap(), vec![0.8; 8]);
        t.cubes.push(CubeTerm::new(0.5, BitPattern::parse("xx").unwrap()));
        assert!(matches!(expand_cubes(&t, &g), Err(Error::PatternLength { .. })));
    }

    #[test]
    fn awkward_deltas_stay_exact() {
        let g = grid2(2, 2);
        let values: Vec<f64> = (0..16).map(|j| if j % 3 == 0 { 0.1 + 0.2 } else { 0.7 }).collect();
        let t = compress_values(&values, &g, CompressionMode::Heuristic).unwrap();
        let back = expand_cubes(&t, &g).unwrap();
        assert!(back.iter().zip(&values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn exact_guard() {
        let g = GridSpec::uniform(&[9, 8], 1.0, Boundary::Dirichlet).unwrap();
        let values = checker_pattern(&g, 1, 1.0, 0.45);
        assert!(matches!(
            compress_values(&values, &g, CompressionMode::Exact),
            Err(Error::CostGuard(_))
        ));
    }

    #[test]
    fn cube_list_round_trips() {
        let g = grid2(3, 2);
        let values = grating_pattern(&g, 4, 2, 1.0, 0.45);
        let t = compress_values(&values, &g, CompressionMode::Heuristic).unwrap();
        let mut buf = Vec::new();
        write_cube_list(&t, &g, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(" x0x xx"));
        assert!(text.contains("-0.55+"));
        let back = read_cube_list(&buf[..], &g).unwrap();
        assert_eq!(expand_cubes(&back, &g).unwrap(), values);
    }

    #[test]
    fn lexicographic_order_puts_x_last() {
        let keys: Vec<u64> = ["0x", "10", "1x", "x0"]
            .iter()
            .map(|s| lexicographic_key(&BitPattern::parse(s).unwrap()))
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }
}
