//! Shift and difference operators on axis registers and the Hermitian
//! Hamiltonians of the potential formulation.
//!
//! Difference operators are stored as `N × N` stencils acting on one axis
//! register and embedded into the full spatial space as `I ⊗ D ⊗ I`.
//! The backward operator used for assembly is always `D⁻ = −(D⁺)†`, which
//! makes every assembled Hamiltonian Hermitian by construction.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Boundary, GridSpec, MaterialField, StateVector, SystemKind};
use crate::sparse::CsrMatrix;

/// Shift direction on an axis register.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shift {
    /// `S⁻`: maps `|j+1⟩ → |j⟩` and annihilates `|0⟩`.
    Lowering,
    /// `S⁺ = (S⁻)†`: maps `|j⟩ → |j+1⟩` and annihilates `|N−1⟩`.
    Raising,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Embeds an axis-local `N × N` operator as `I ⊗ local ⊗ I` over the grid.
pub fn embed_axis_operator(local: &CsrMatrix<f64>, axis: usize, grid: &GridSpec) -> CsrMatrix<f64> {
    let n = grid.len();
    let stride = grid.stride(axis);
    let mut triplets = Vec::with_capacity(n * local.nnz() / local.nrows().max(1));
    for p in 0..n {
        let j = grid.coords(p)[axis];
        let (cols, vals) = local.row(j);
        for (&k, &v) in cols.iter().zip(vals) {
            let q = p + k * stride - j * stride;
            triplets.push((p, q, v));
        }
    }
    CsrMatrix::from_triplets(n, n, triplets)
}

fn shift_stencil(len: usize, shift: Shift) -> CsrMatrix<f64> {
    let lowering = CsrMatrix::from_triplets(len, len, (0..len - 1).map(|j| (j, j + 1, 1.0)));
    match shift {
        Shift::Lowering => lowering,
        Shift::Raising => lowering.transpose(),
    }
}

/// Shift operator along `axis`, without wrap-around.
pub fn build_shift(axis: usize, shift: Shift, grid: &GridSpec) -> Result<CsrMatrix<f64>> {
    grid.check_axis(axis)?;
    Ok(embed_axis_operator(&shift_stencil(grid.axis_len(axis), shift), axis, grid))
}

/// A first-order difference operator on one axis register.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffOperator {
    pub axis: usize,
    pub direction: Direction,
    pub bc: Boundary,
    pub h: f64,
    /// `N × N` stencil on the axis register.
    pub stencil: CsrMatrix<f64>,
    grid: GridSpec,
}

impl DiffOperator {
    /// The operator over the whole spatial space.
    pub fn embedded(&self) -> CsrMatrix<f64> {
        embed_axis_operator(&self.stencil, self.axis, &self.grid)
    }

    pub fn apply(&self, field: &[f64]) -> Vec<f64> {
        self.embedded().matvec(field)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
}

/// Forward or backward difference stencil with the requested boundary treatment.
///
/// Forward: `(u_{j+1} − u_j)/h`; the last row uses a zero ghost (Dirichlet),
/// vanishes (Neumann) or wraps to `u_0` (periodic). Backward is the literal
/// mirror `(u_j − u_{j−1})/h` with the boundary handled on the first row.
pub fn build_diff(axis: usize, direction: Direction, bc: Boundary, grid: &GridSpec) -> Result<DiffOperator> {
    grid.check_axis(axis)?;
    let n = grid.axis_len(axis);
    let h = grid.spacing();
    let inv = 1.0 / h;
    let mut t = Vec::with_capacity(2 * n);
    match direction {
        Direction::Forward => {
            for j in 0..n - 1 {
                t.push((j, j, -inv));
                t.push((j, j + 1, inv));
            }
            let last = n - 1;
            match bc {
                Boundary::Dirichlet => t.push((last, last, -inv)),
                Boundary::Neumann => {}
                Boundary::Periodic => {
                    t.push((last, last, -inv));
                    t.push((last, 0, inv));
                }
            }
        }
        Direction::Backward => {
            for j in 1..n {
                t.push((j, j - 1, -inv));
                t.push((j, j, inv));
            }
            match bc {
                Boundary::Dirichlet => t.push((0, 0, inv)),
                Boundary::Neumann => {}
                Boundary::Periodic => {
                    t.push((0, 0, inv));
                    t.push((0, n - 1, -inv));
                }
            }
        }
    }
    Ok(DiffOperator {
        axis,
        direction,
        bc,
        h,
        stencil: CsrMatrix::from_triplets(n, n, t),
        grid: grid.clone(),
    })
}

/// `D⁻ := −(D⁺)†`, the backward partner that keeps the Hamiltonian Hermitian.
pub fn adjoint_backward(forward: &DiffOperator) -> Result<DiffOperator> {
    if forward.direction != Direction::Forward {
        return Err(Error::InvalidOperator(
            "adjoint_backward expects a forward difference operator".into(),
        ));
    }
    Ok(DiffOperator {
        direction: Direction::Backward,
        stencil: forward.stencil.transpose().scale(-1.0),
        ..forward.clone()
    })
}

/// Diagonal operator `c̃ = Σ_j c(x_j) |j⟩⟨j|`.
pub fn build_material_diag(material: &MaterialField, grid: &GridSpec) -> Result<CsrMatrix<f64>> {
    if material.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            actual: material.len(),
        });
    }
    if let Some((index, &value)) = material
        .speeds()
        .iter()
        .enumerate()
        .find(|(_, c)| !(c.is_finite() && **c > 0.0))
    {
        return Err(Error::NonPositiveMaterial { index, value });
    }
    Ok(CsrMatrix::diagonal(material.speeds()))
}

/// One Hermitian coupling between a time-derivative component and one of its
/// gradient partners, already placed in the full register.
#[derive(Clone, Debug)]
pub struct HamiltonianTerm {
    pub axis: usize,
    /// Component carrying `Ȧ_r / c`.
    pub field_component: usize,
    /// Component carrying `∂_axis A_r`.
    pub gradient_component: usize,
    pub matrix: CsrMatrix<Complex64>,
}

/// Assembled Hamiltonian with its term decomposition.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    pub kind: SystemKind,
    pub terms: Vec<HamiltonianTerm>,
    pub total: CsrMatrix<Complex64>,
    pub grid: GridSpec,
    pub material: MaterialField,
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        self.total.nrows()
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        self.total.matvec(psi)
    }

    /// Rows and columns that carry at least one entry.
    pub fn active_indices(&self) -> Vec<usize> {
        self.total.nonempty_rows()
    }

    /// Sum of the given terms.
    pub fn group_matrix(&self, terms: &[usize]) -> CsrMatrix<Complex64> {
        let n = self.dim();
        CsrMatrix::from_triplets(
            n,
            n,
            terms.iter().flat_map(|&t| self.terms[t].matrix.triplets()),
        )
    }

    /// Expectation value `⟨ψ|H|ψ⟩` (real for Hermitian H).
    pub fn energy(&self, state: &StateVector) -> f64 {
        let hpsi = self.apply(state.amplitudes());
        state
            .amplitudes()
            .iter()
            .zip(&hpsi)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }
}

fn place_block(
    triplets: &mut Vec<(usize, usize, Complex64)>,
    row_comp: usize,
    col_comp: usize,
    nsp: usize,
    block: &CsrMatrix<f64>,
    factor: Complex64,
) {
    for (r, c, v) in block.triplets() {
        triplets.push((row_comp * nsp + r, col_comp * nsp + c, factor * v));
    }
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Builds `(D⁺, D⁻)` for an axis using the grid's boundary condition.
fn axis_pair(axis: usize, grid: &GridSpec) -> Result<(CsrMatrix<f64>, CsrMatrix<f64>)> {
    let forward = build_diff(axis, Direction::Forward, grid.boundary(axis), grid)?;
    let backward = adjoint_backward(&forward)?;
    Ok((forward.embedded(), backward.embedded()))
}

fn check_material(grid: &GridSpec, material: &MaterialField) -> Result<CsrMatrix<f64>> {
    build_material_diag(material, grid)
}

/// 2D TM Hamiltonian
/// `H = i [[0, D⁺_x c, D⁺_y c], [c D⁻_x, 0, 0], [c D⁻_y, 0, 0]]`
/// in a 4-component register whose last component is padding.
pub fn assemble_tm2d(grid: &GridSpec, material: &MaterialField) -> Result<Hamiltonian> {
    if grid.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "the TM system needs a 2D grid, got {}D",
            grid.dim()
        )));
    }
    let c = check_material(grid, material)?;
    let nsp = grid.len();
    let kind = SystemKind::Tm2d;
    let n = nsp << kind.index_qubits();
    let mut terms = Vec::with_capacity(2);
    for axis in 0..2 {
        let (dp, dm) = axis_pair(axis, grid)?;
        let upper = dp.matmul(&c);
        let lower = c.matmul(&dm);
        let grad = 1 + axis;
        let mut t = Vec::with_capacity(2 * (upper.nnz() + lower.nnz()));
        place_block(&mut t, 0, grad, nsp, &upper, I);
        place_block(&mut t, grad, 0, nsp, &lower, I);
        terms.push(HamiltonianTerm {
            axis,
            field_component: 0,
            gradient_component: grad,
            matrix: CsrMatrix::from_triplets(n, n, t),
        });
    }
    finish(kind, grid, material, terms)
}

/// Full 3D Hamiltonian: block `(r, 3+3r+μ) = i c̃ D⁺_μ` and its adjoint
/// `(3+3r+μ, r) = i D⁻_μ c̃`, in a 16-component register.
pub fn assemble_full3d(grid: &GridSpec, material: &MaterialField) -> Result<Hamiltonian> {
    if grid.dim() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "the full system needs a 3D grid, got {}D",
            grid.dim()
        )));
    }
    let c = check_material(grid, material)?;
    let nsp = grid.len();
    let kind = SystemKind::Full3d;
    let n = nsp << kind.index_qubits();
    let mut terms = Vec::with_capacity(9);
    for axis in 0..3 {
        let (dp, dm) = axis_pair(axis, grid)?;
        let upper = c.matmul(&dp);
        let lower = dm.matmul(&c);
        for r in 0..3 {
            let grad = 3 + 3 * r + axis;
            let mut t = Vec::with_capacity(2 * (upper.nnz() + lower.nnz()));
            place_block(&mut t, r, grad, nsp, &upper, I);
            place_block(&mut t, grad, r, nsp, &lower, I);
            terms.push(HamiltonianTerm {
                axis,
                field_component: r,
                gradient_component: grad,
                matrix: CsrMatrix::from_triplets(n, n, t),
            });
        }
    }
    finish(kind, grid, material, terms)
}

fn finish(
    kind: SystemKind,
    grid: &GridSpec,
    material: &MaterialField,
    terms: Vec<HamiltonianTerm>,
) -> Result<Hamiltonian> {
    let n = grid.len() << kind.index_qubits();
    let total = CsrMatrix::from_triplets(n, n, terms.iter().flat_map(|t| t.matrix.triplets()));
    Ok(Hamiltonian {
        kind,
        terms,
        total,
        grid: grid.clone(),
        material: material.clone(),
    })
}

/// Assembles the Hamiltonian matching the grid dimension (2 → TM, 3 → full).
pub fn assemble(grid: &GridSpec, material: &MaterialField) -> Result<Hamiltonian> {
    match grid.dim() {
        2 => assemble_tm2d(grid, material),
        3 => assemble_full3d(grid, material),
        d => Err(Error::DimensionMismatch(format!(
            "no Hamiltonian for a {d}-dimensional grid"
        ))),
    }
}

/// `∇·B` on the grid, with `B = ∇×A` read from the gradient components of a
/// full 3D state: `B_x = ∂_yA_z − ∂_zA_y`, `B_y = ∂_zA_x − ∂_xA_z`,
/// `B_z = ∂_xA_y − ∂_yA_x`. The divergence uses the same backward operator
/// that generates the gradient components, so it vanishes identically for
/// states built from discrete gradients.
///
/// Returns the real part; states built from real data stay real because `−iH`
/// is a real matrix.
pub fn discrete_div_of_b(state: &StateVector, grid: &GridSpec) -> Result<Vec<f64>> {
    if state.components() != SystemKind::Full3d.components() || grid.dim() != 3 {
        return Err(Error::DimensionMismatch(
            "divergence of B needs a full 3D state".into(),
        ));
    }
    if state.grid() != grid {
        return Err(Error::DimensionMismatch("state grid differs from the given grid".into()));
    }
    let grad = |r: usize, axis: usize| -> Vec<f64> {
        state
            .component(3 + 3 * r + axis)
            .expect("gradient components exist in the full register")
            .iter()
            .map(|a| a.re)
            .collect()
    };
    let diff = |a: Vec<f64>, b: Vec<f64>| -> Vec<f64> { a.iter().zip(&b).map(|(x, y)| x - y).collect() };
    let b = [
        diff(grad(2, 1), grad(1, 2)),
        diff(grad(0, 2), grad(2, 0)),
        diff(grad(1, 0), grad(0, 1)),
    ];
    let mut div = vec![0.0; grid.len()];
    for (axis, field) in b.iter().enumerate() {
        let forward = build_diff(axis, Direction::Forward, grid.boundary(axis), grid)?;
        let backward = adjoint_backward(&forward)?;
        for (d, v) in div.iter_mut().zip(backward.apply(field)) {
            *d += v;
        }
    }
    Ok(div)
}

/// Writes a matrix as `row col re im` lines.
pub fn write_coo<W: Write>(matrix: &CsrMatrix<Complex64>, mut out: W) -> std::io::Result<()> {
    for (r, c, v) in matrix.triplets() {
        writeln!(out, "{r} {c} {} {}", v.re, v.im)?;
    }
    Ok(())
}
