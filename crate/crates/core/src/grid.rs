//! Qubit-register grids and the mapping between fields and state vectors.
//!
//! A grid with `n_μ` qubits on axis μ has `N_μ = 2^{n_μ}` points along that
//! axis. Spatial points are addressed by the linear index
//! `(j_x · N_y + j_y) · N_z + j_z`, and a multi-component state stacks the
//! component register in front: `|μ'⟩|j_x⟩|j_y⟩|j_z⟩` with μ' most
//! significant. Inside each axis register the coordinate is stored MSB first,
//! so the bit pattern `0111xx` on a 6-qubit axis reads as `j = 0b0111xx`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest number of spatial qubits accepted by [`GridSpec::new`].
pub const MAX_SPATIAL_QUBITS: u32 = 24;

/// Boundary condition applied at the far edge of an axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    Dirichlet,
    Neumann,
    Periodic,
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(Boundary::Dirichlet),
            "neumann" => Ok(Boundary::Neumann),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::Parse(format!("unknown boundary condition {other:?}"))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Boundary::Dirichlet => "dirichlet",
            Boundary::Neumann => "neumann",
            Boundary::Periodic => "periodic",
        };
        f.write_str(s)
    }
}

/// Geometry of a power-of-two grid: qubits per axis, spacing and boundary conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    qubits: Vec<u32>,
    h: f64,
    bc: Vec<Boundary>,
}

impl GridSpec {
    pub fn new(qubits: &[u32], h: f64, bc: &[Boundary]) -> Result<Self> {
        if qubits.is_empty() || qubits.len() > 3 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1, 2 or 3, got {}",
                qubits.len()
            )));
        }
        if bc.len() != qubits.len() {
            return Err(Error::InvalidGrid(format!(
                "{} boundary conditions for {} axes",
                bc.len(),
                qubits.len()
            )));
        }
        if let Some(axis) = qubits.iter().position(|&n| n == 0) {
            return Err(Error::InvalidGrid(format!("axis {axis} has zero qubits")));
        }
        let total: u32 = qubits.iter().sum();
        if total > MAX_SPATIAL_QUBITS {
            return Err(Error::InvalidGrid(format!(
                "{total} spatial qubits exceeds the limit of {MAX_SPATIAL_QUBITS}"
            )));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("grid spacing must be positive, got {h}")));
        }
        Ok(GridSpec {
            qubits: qubits.to_vec(),
            h,
            bc: bc.to_vec(),
        })
    }

    /// Grid with the same boundary condition on every axis.
    pub fn uniform(qubits: &[u32], h: f64, bc: Boundary) -> Result<Self> {
        Self::new(qubits, h, &vec![bc; qubits.len()])
    }

    pub fn dim(&self) -> usize {
        self.qubits.len()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn axis_qubits(&self, axis: usize) -> u32 {
        self.qubits[axis]
    }

    pub fn qubits(&self) -> &[u32] {
        &self.qubits
    }

    pub fn boundary(&self, axis: usize) -> Boundary {
        self.bc[axis]
    }

    pub fn boundaries(&self) -> &[Boundary] {
        &self.bc
    }

    /// Number of points along `axis`.
    pub fn axis_len(&self, axis: usize) -> usize {
        1usize << self.qubits[axis]
    }

    /// Per-axis sizes, padded with 1 up to three axes.
    pub fn shape(&self) -> [usize; 3] {
        let mut shape = [1; 3];
        for (axis, s) in shape.iter_mut().enumerate().take(self.dim()) {
            *s = self.axis_len(axis);
        }
        shape
    }

    /// Total number of spatial qubits.
    pub fn spatial_qubits(&self) -> u32 {
        self.qubits.iter().sum()
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        1usize << self.spatial_qubits()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Linear-index distance between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.qubits[axis + 1..].iter().map(|&n| 1usize << n).product()
    }

    pub fn check_axis(&self, axis: usize) -> Result<()> {
        if axis < self.dim() {
            Ok(())
        } else {
            Err(Error::InactiveAxis {
                axis,
                dim: self.dim(),
            })
        }
    }

    pub fn linear_index(&self, coords: [usize; 3]) -> usize {
        let shape = self.shape();
        (coords[0] * shape[1] + coords[1]) * shape[2] + coords[2]
    }

    pub fn coords(&self, index: usize) -> [usize; 3] {
        let shape = self.shape();
        [
            index / (shape[1] * shape[2]),
            (index / shape[2]) % shape[1],
            index % shape[2],
        ]
    }
}

/// A pattern over `{0, 1, x}` selecting an aligned block of `2^{#x}` indices.
///
/// Bit `len-1` is the leftmost character. `care` marks fixed bits, `value`
/// holds their required values (zero wherever `care` is clear).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitPattern {
    care: u32,
    value: u32,
    len: u32,
}

impl BitPattern {
    pub fn new(care: u32, value: u32, len: u32) -> Self {
        debug_assert!(len <= 32);
        let mask = low_mask(len);
        BitPattern {
            care: care & mask,
            value: value & care & mask,
            len,
        }
    }

    /// The fully specified pattern for one index.
    pub fn minterm(index: u32, len: u32) -> Self {
        Self::new(low_mask(len), index, len)
    }

    /// The all-don't-care pattern.
    pub fn full(len: u32) -> Self {
        Self::new(0, 0, len)
    }

    pub fn parse(s: &str) -> Result<Self> {
        let len = s.chars().count();
        if len > 32 {
            return Err(Error::PatternLength {
                pattern: s.to_string(),
                expected: 32,
                actual: len,
            });
        }
        let mut care = 0u32;
        let mut value = 0u32;
        for ch in s.chars() {
            care <<= 1;
            value <<= 1;
            match ch {
                '0' => care |= 1,
                '1' => {
                    care |= 1;
                    value |= 1;
                }
                'x' | 'X' => {}
                _ => {
                    return Err(Error::InvalidPatternChar {
                        pattern: s.to_string(),
                        ch,
                    })
                }
            }
        }
        Ok(BitPattern::new(care, value, len as u32))
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn care(&self) -> u32 {
        self.care
    }

    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn dont_cares(&self) -> u32 {
        self.len - self.care.count_ones()
    }

    /// Number of indices matched.
    pub fn size(&self) -> usize {
        1usize << self.dont_cares()
    }

    pub fn matches(&self, index: u32) -> bool {
        index & self.care == self.value
    }

    pub fn intersects(&self, other: &BitPattern) -> bool {
        (self.value ^ other.value) & self.care & other.care == 0
    }

    /// True when every index matched by `other` is matched by `self`.
    pub fn contains(&self, other: &BitPattern) -> bool {
        self.care & other.care == self.care && other.value & self.care == self.value
    }

    /// All indices matched, ascending.
    pub fn expand(&self) -> Vec<u32> {
        let free = !self.care & low_mask(self.len);
        let mut out = Vec::with_capacity(self.size());
        // Enumerate subsets of the free bits in increasing order.
        let mut sub = 0u32;
        loop {
            out.push(self.value | sub);
            if sub == free {
                break;
            }
            sub = (sub.wrapping_sub(free)) & free;
        }
        out
    }

    /// Split into consecutive sub-patterns of the given bit widths (MSB first).
    pub fn split(&self, widths: &[u32]) -> Vec<BitPattern> {
        let mut shift = self.len;
        widths
            .iter()
            .map(|&w| {
                shift -= w;
                let mask = low_mask(w);
                BitPattern::new((self.care >> shift) & mask, (self.value >> shift) & mask, w)
            })
            .collect()
    }

    /// Concatenate patterns, first argument most significant.
    pub fn concat(parts: &[BitPattern]) -> BitPattern {
        parts.iter().fold(BitPattern::full(0), |acc, p| {
            BitPattern::new(
                (acc.care << p.len) | p.care,
                (acc.value << p.len) | p.value,
                acc.len + p.len,
            )
        })
    }
}

impl fmt::Display for BitPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for bit in (0..self.len).rev() {
            let ch = if self.care >> bit & 1 == 0 {
                'x'
            } else if self.value >> bit & 1 == 1 {
                '1'
            } else {
                '0'
            };
            write!(f, "{ch}")?;
        }
        Ok(())
    }
}

fn low_mask(len: u32) -> u32 {
    if len >= 32 {
        u32::MAX
    } else {
        (1u32 << len) - 1
    }
}

/// Per-point propagation speed `c(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialField {
    speeds: Vec<f64>,
}

impl MaterialField {
    pub fn new(grid: &GridSpec, speeds: Vec<f64>) -> Result<Self> {
        if speeds.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: speeds.len(),
            });
        }
        if let Some((index, &value)) = speeds
            .iter()
            .enumerate()
            .find(|(_, c)| !(c.is_finite() && **c > 0.0))
        {
            return Err(Error::NonPositiveMaterial { index, value });
        }
        Ok(MaterialField { speeds })
    }

    pub fn uniform(grid: &GridSpec, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    pub fn max_speed(&self) -> f64 {
        self.speeds.iter().cloned().fold(0.0, f64::max)
    }
}

/// Which physical system a state vector carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SystemKind {
    /// `(Ȧ_z/c, ∂_x A_z, ∂_y A_z)` in a 2-qubit component register.
    Tm2d,
    /// `(Ȧ/c, ∇A)` with 12 components in a 4-qubit component register.
    Full3d,
}

impl SystemKind {
    /// Physical components.
    pub fn components(self) -> usize {
        match self {
            SystemKind::Tm2d => 3,
            SystemKind::Full3d => 12,
        }
    }

    /// Qubits in the component register (`⌈log2 components⌉`).
    pub fn index_qubits(self) -> u32 {
        match self {
            SystemKind::Tm2d => 2,
            SystemKind::Full3d => 4,
        }
    }

    pub fn spatial_dim(self) -> usize {
        match self {
            SystemKind::Tm2d => 2,
            SystemKind::Full3d => 3,
        }
    }
}

/// Amplitudes over the component register times the spatial registers.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    index_qubits: u32,
    components: usize,
    grid: GridSpec,
    normalization: Option<f64>,
}

impl StateVector {
    /// Builds a state from amplitudes laid out as `|μ'⟩|j⟩`. No normalization is applied.
    pub fn from_amplitudes(
        grid: GridSpec,
        index_qubits: u32,
        components: usize,
        amplitudes: Vec<Complex64>,
    ) -> Result<Self> {
        let register = 1usize << index_qubits;
        if components == 0 || components > register {
            return Err(Error::ComponentOutOfRange {
                index: components,
                available: register,
            });
        }
        let expected = register * grid.len();
        if amplitudes.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: amplitudes.len(),
            });
        }
        Ok(StateVector {
            amplitudes,
            index_qubits,
            components,
            grid,
            normalization: None,
        })
    }

    /// Stacks unnormalized component fields and normalizes them jointly,
    /// recording the normalization constant. Missing trailing components
    /// and the padding components are zero.
    pub fn from_fields(grid: &GridSpec, kind: SystemKind, fields: &[Vec<Complex64>]) -> Result<Self> {
        if grid.dim() != kind.spatial_dim() {
            return Err(Error::DimensionMismatch(format!(
                "{kind:?} needs a {}-dimensional grid, got {}",
                kind.spatial_dim(),
                grid.dim()
            )));
        }
        if fields.len() > kind.components() {
            return Err(Error::ComponentOutOfRange {
                index: fields.len() - 1,
                available: kind.components(),
            });
        }
        let n = grid.len();
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n << kind.index_qubits()];
        for (comp, field) in fields.iter().enumerate() {
            if field.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: field.len(),
                });
            }
            amplitudes[comp * n..(comp + 1) * n].copy_from_slice(field);
        }
        let norm = l2_norm(&amplitudes);
        if norm == 0.0 {
            return Err(Error::UnnormalizableField);
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(StateVector {
            amplitudes,
            index_qubits: kind.index_qubits(),
            components: kind.components(),
            grid: grid.clone(),
            normalization: Some(norm),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn index_qubits(&self) -> u32 {
        self.index_qubits
    }

    /// Physical component count (the rest of the register is padding).
    pub fn components(&self) -> usize {
        self.components
    }

    /// Size of the component register, `2^{index_qubits}`.
    pub fn register_size(&self) -> usize {
        1 << self.index_qubits
    }

    pub fn normalization(&self) -> Option<f64> {
        self.normalization
    }

    pub fn set_normalization(&mut self, norm: Option<f64>) {
        self.normalization = norm;
    }

    /// Basis index of `(component, spatial index)`.
    pub fn basis_index(&self, component: usize, spatial: usize) -> usize {
        component * self.grid.len() + spatial
    }

    pub fn amplitude(&self, component: usize, spatial: usize) -> Complex64 {
        self.amplitudes[self.basis_index(component, spatial)]
    }

    /// Amplitude slice of one component in spatial-index order.
    pub fn component(&self, component: usize) -> Result<&[Complex64]> {
        if component >= self.register_size() {
            return Err(Error::ComponentOutOfRange {
                index: component,
                available: self.register_size(),
            });
        }
        let n = self.grid.len();
        Ok(&self.amplitudes[component * n..(component + 1) * n])
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amplitudes)
    }

    /// Largest modulus found in the padding components.
    pub fn padding_leak(&self) -> f64 {
        let n = self.grid.len();
        self.amplitudes[self.components * n..]
            .iter()
            .map(|a| a.norm())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn l2_norm(values: &[Complex64]) -> f64 {
    values.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Normalized amplitudes of a single scalar field plus the factor removed.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedField {
    pub amplitudes: Vec<Complex64>,
    pub norm: f64,
}

/// Maps a real field on the grid onto unit-norm amplitudes over the spatial registers.
pub fn encode_scalar_field(values: &[f64], grid: &GridSpec) -> Result<EncodedField> {
    if values.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            actual: values.len(),
        });
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::UnnormalizableField);
    }
    Ok(EncodedField {
        amplitudes: values.iter().map(|&v| Complex64::new(v / norm, 0.0)).collect(),
        norm,
    })
}

/// Copy of the amplitudes of component `component`, in spatial-index order.
pub fn decode_component(state: &StateVector, component: usize) -> Result<Vec<Complex64>> {
    state.component(component).map(<[Complex64]>::to_vec)
}

/// A union of per-axis cubes together with the grid indices they select.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionMask {
    cubes: Vec<Vec<BitPattern>>,
    resolved: Vec<usize>,
}

impl RegionMask {
    pub fn cubes(&self) -> &[Vec<BitPattern>] {
        &self.cubes
    }

    /// Selected spatial indices, sorted and unique.
    pub fn indices(&self) -> &[usize] {
        &self.resolved
    }

    pub fn len(&self) -> usize {
        self.resolved.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resolved.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.resolved.binary_search(&index).is_ok()
    }

    /// Axis-aligned box `[lo, lo + extent)` per axis, without bit patterns.
    pub fn rectangle(grid: &GridSpec, lo: [usize; 3], extent: [usize; 3]) -> Result<Self> {
        let shape = grid.shape();
        for axis in 0..3 {
            let ext = if axis < grid.dim() { extent[axis] } else { 1 };
            let start = if axis < grid.dim() { lo[axis] } else { 0 };
            if ext == 0 || start + ext > shape[axis] {
                return Err(Error::DimensionMismatch(format!(
                    "rectangle [{start}, {}) exceeds axis {axis} of size {}",
                    start + ext,
                    shape[axis]
                )));
            }
        }
        let ext = |a: usize| if a < grid.dim() { extent[a] } else { 1 };
        let start = |a: usize| if a < grid.dim() { lo[a] } else { 0 };
        let mut resolved = Vec::with_capacity(ext(0) * ext(1) * ext(2));
        for x in start(0)..start(0) + ext(0) {
            for y in start(1)..start(1) + ext(1) {
                for z in start(2)..start(2) + ext(2) {
                    resolved.push(grid.linear_index([x, y, z]));
                }
            }
        }
        resolved.sort_unstable();
        Ok(RegionMask {
            cubes: Vec::new(),
            resolved,
        })
    }
}

/// Resolves a union of cubes, each given as one bit string per axis.
pub fn parse_region<S: AsRef<str>>(cubes: &[Vec<S>], grid: &GridSpec) -> Result<RegionMask> {
    let mut parsed = Vec::with_capacity(cubes.len());
    let mut resolved = Vec::new();
    for cube in cubes {
        if cube.len() != grid.dim() {
            return Err(Error::DimensionMismatch(format!(
                "region cube has {} axis patterns for a {}-dimensional grid",
                cube.len(),
                grid.dim()
            )));
        }
        let mut axes = Vec::with_capacity(cube.len());
        for (axis, s) in cube.iter().enumerate() {
            let p = BitPattern::parse(s.as_ref())?;
            if p.len() != grid.axis_qubits(axis) {
                return Err(Error::PatternLength {
                    pattern: s.as_ref().to_string(),
                    expected: grid.axis_qubits(axis) as usize,
                    actual: p.len() as usize,
                });
            }
            axes.push(p);
        }
        let full = BitPattern::concat(&axes);
        resolved.extend(full.expand().into_iter().map(|j| j as usize));
        parsed.push(axes);
    }
    resolved.sort_unstable();
    resolved.dedup();
    Ok(RegionMask {
        cubes: parsed,
        resolved,
    })
}

/// Parses region notation such as `{(0111xx, 1010xx)_2, (1000xx, 1010xx)_2}`.
///
/// Braces, the `_2` radix suffix and whitespace are optional; cubes may also be
/// separated by `;` as in `0111xx,1010xx;1000xx,1010xx`.
pub fn parse_region_notation(text: &str, grid: &GridSpec) -> Result<RegionMask> {
    let body = text.trim();
    let body = body.strip_prefix('{').unwrap_or(body);
    let body = body.strip_suffix('}').unwrap_or(body);
    let mut cubes: Vec<Vec<String>> = Vec::new();
    if body.contains('(') {
        let mut rest = body;
        while let Some(open) = rest.find('(') {
            let close = rest[open..]
                .find(')')
                .ok_or_else(|| Error::Parse(format!("unbalanced parenthesis in {text:?}")))?
                + open;
            cubes.push(split_axes(&rest[open + 1..close]));
            rest = &rest[close + 1..];
        }
    } else {
        for part in body.split(';').filter(|p| !p.trim().is_empty()) {
            cubes.push(split_axes(part));
        }
    }
    if cubes.is_empty() {
        return Err(Error::Parse(format!("no cubes in region {text:?}")));
    }
    parse_region(&cubes, grid)
}

fn split_axes(s: &str) -> Vec<String> {
    s.split(',').map(|p| p.trim().to_string()).collect()
}
