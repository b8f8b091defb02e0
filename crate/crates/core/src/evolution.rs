//! Time evolution under a Hamiltonian: first-order Trotter products, exact
//! exponentials (dense or Krylov) and classical RK4.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::StateVector;
use crate::operators::Hamiltonian;
use crate::sparse::CsrMatrix;

/// Largest active dimension accepted by [`exact_evolve`].
pub const MAX_EXACT_DIM: usize = 1 << 20;
/// Active dimension up to which exact evolution uses a dense eigendecomposition.
pub const DENSE_EXACT_DIM: usize = 256;
/// Largest connected block of a Trotter group that is exponentiated densely.
pub const MAX_BLOCK_DIM: usize = 4096;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Trotter1,
    Exact,
    Rk4,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "trotter1" | "trotter" => Ok(Method::Trotter1),
            "exact" => Ok(Method::Exact),
            "rk4" => Ok(Method::Rk4),
            other => Err(Error::Parse(format!("unknown evolution method {other:?}"))),
        }
    }
}

/// How to advance a state: method, step, count, grouping and snapshot stride.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionPlan {
    pub method: Method,
    pub dt: f64,
    pub n_steps: usize,
    /// Partition of the Hamiltonian terms, applied in this order.
    pub term_grouping: Vec<Vec<usize>>,
    pub snapshot_stride: usize,
}

impl EvolutionPlan {
    /// Plan with the axis-wise grouping of `h`.
    pub fn new(method: Method, dt: f64, n_steps: usize, snapshot_stride: usize, h: &Hamiltonian) -> Self {
        EvolutionPlan {
            method,
            dt,
            n_steps,
            term_grouping: default_grouping(h),
            snapshot_stride,
        }
    }

    pub fn final_time(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn validate(&self, h: &Hamiltonian) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidPlan(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidPlan("n_steps must be at least 1".into()));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidPlan("snapshot stride must be at least 1".into()));
        }
        let mut seen = vec![false; h.terms.len()];
        for &t in self.term_grouping.iter().flatten() {
            if t >= seen.len() {
                return Err(Error::InvalidPlan(format!(
                    "term {t} does not exist (Hamiltonian has {})",
                    seen.len()
                )));
            }
            if std::mem::replace(&mut seen[t], true) {
                return Err(Error::InvalidPlan(format!("term {t} appears in more than one group")));
            }
        }
        if let Some(t) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPlan(format!("term {t} is not assigned to any group")));
        }
        if self.term_grouping.iter().any(Vec::is_empty) {
            return Err(Error::InvalidPlan("empty term group".into()));
        }
        Ok(())
    }
}

/// One group per axis, holding every term that differentiates along it.
pub fn default_grouping(h: &Hamiltonian) -> Vec<Vec<usize>> {
    let axes = h.terms.iter().map(|t| t.axis).max().map_or(0, |a| a + 1);
    (0..axes)
        .map(|axis| {
            h.terms
                .iter()
                .enumerate()
                .filter(|(_, t)| t.axis == axis)
                .map(|(i, _)| i)
                .collect::<Vec<_>>()
        })
        .filter(|g| !g.is_empty())
        .collect()
}

/// Dense unitary on a subset of basis indices.
#[derive(Clone, Debug)]
enum BlockMatrix {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

#[derive(Clone, Debug)]
struct Block {
    indices: Vec<usize>,
    unitary: usize,
}

/// `exp(−i H_k dt)` for one group, stored per connected block.
#[derive(Clone, Debug)]
struct GroupPropagator {
    blocks: Vec<Block>,
    unitaries: Vec<BlockMatrix>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Splits the nonzero pattern of `m` into connected index sets, each sorted.
fn connected_blocks(m: &CsrMatrix<Complex64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut uf = UnionFind((0..n).collect());
    for (r, c, _) in m.triplets() {
        uf.union(r, c);
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for r in m.nonempty_rows() {
        let root = uf.find(r);
        groups.entry(root).or_default().push(r);
    }
    let mut blocks: Vec<Vec<usize>> = groups.into_values().collect();
    for b in &mut blocks {
        b.sort_unstable();
    }
    blocks.sort_unstable_by_key(|b| b[0]);
    blocks
}

fn dense_block(m: &CsrMatrix<Complex64>, indices: &[usize]) -> DMatrix<Complex64> {
    let k = indices.len();
    let mut dense = DMatrix::from_element(k, k, ZERO);
    for (a, &r) in indices.iter().enumerate() {
        let (cols, vals) = m.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            let b = indices.binary_search(&c).expect("block is closed under the sparsity graph");
            dense[(a, b)] = v;
        }
    }
    dense
}

/// `exp(−i A t)` for a dense Hermitian matrix.
fn dense_exponential(a: DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(a);
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -lambda * t);
        for x in scaled.column_mut(j).iter_mut() {
            *x *= phase;
        }
    }
    scaled * v.adjoint()
}

impl GroupPropagator {
    fn new(m: &CsrMatrix<Complex64>, dt: f64) -> Result<Self> {
        let purely_imaginary = m.triplets().all(|(_, _, v)| v.re == 0.0);
        let mut blocks = Vec::new();
        let mut unitaries = Vec::new();
        let mut cache: HashMap<Vec<u64>, usize> = HashMap::new();
        for indices in connected_blocks(m) {
            if indices.len() > MAX_BLOCK_DIM {
                return Err(Error::CostGuard(format!(
                    "Trotter group block of dimension {} exceeds {MAX_BLOCK_DIM}",
                    indices.len()
                )));
            }
            let dense = dense_block(m, &indices);
            let mut key = Vec::with_capacity(1 + 2 * dense.len());
            key.push(indices.len() as u64);
            key.extend(dense.iter().flat_map(|v| [v.re.to_bits(), v.im.to_bits()]));
            let unitary = match cache.get(&key) {
                Some(&u) => u,
                None => {
                    let u = dense_exponential(dense, dt);
                    let k = indices.len();
                    // Row-major storage for the apply loop.
                    let stored = if purely_imaginary {
                        BlockMatrix::Real((0..k * k).map(|p| u[(p / k, p % k)].re).collect())
                    } else {
                        BlockMatrix::Complex((0..k * k).map(|p| u[(p / k, p % k)]).collect())
                    };
                    unitaries.push(stored);
                    cache.insert(key, unitaries.len() - 1);
                    unitaries.len() - 1
                }
            };
            blocks.push(Block { indices, unitary });
        }
        Ok(GroupPropagator { blocks, unitaries })
    }

    fn apply(&self, psi: &mut [Complex64], scratch: &mut Scratch) {
        for block in &self.blocks {
            let k = block.indices.len();
            scratch.re.clear();
            scratch.im.clear();
            for &i in &block.indices {
                scratch.re.push(psi[i].re);
                scratch.im.push(psi[i].im);
            }
            match &self.unitaries[block.unitary] {
                BlockMatrix::Real(u) => {
                    let real_input = scratch.im.iter().all(|&x| x == 0.0);
                    for (row, &i) in u.chunks_exact(k).zip(&block.indices) {
                        let im = if real_input { 0.0 } else { dot(row, &scratch.im) };
                        psi[i] = Complex64::new(dot(row, &scratch.re), im);
                    }
                }
                BlockMatrix::Complex(u) => {
                    for (row, &i) in u.chunks_exact(k).zip(&block.indices) {
                        let mut acc = ZERO;
                        for (a, (&xr, &xi)) in row.iter().zip(scratch.re.iter().zip(&scratch.im)) {
                            acc += a * Complex64::new(xr, xi);
                        }
                        psi[i] = acc;
                    }
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[derive(Default)]
struct Scratch {
    re: Vec<f64>,
    im: Vec<f64>,
}

/// First-order Trotter stepper with the group exponentials computed once.
pub struct TrotterStepper {
    groups: Vec<GroupPropagator>,
    dt: f64,
    scratch: Scratch,
}

impl TrotterStepper {
    pub fn new(h: &Hamiltonian, grouping: &[Vec<usize>], dt: f64) -> Result<Self> {
        let mut groups = Vec::with_capacity(grouping.len());
        for (g, terms) in grouping.iter().enumerate() {
            let m = h.group_matrix(terms);
            let scale = m.triplets().map(|(_, _, v)| v.norm()).fold(0.0, f64::max);
            let deviation = m.hermitian_defect();
            if deviation > 1e-12 * scale.max(1.0) {
                return Err(Error::NonHermitian { group: g, deviation });
            }
            groups.push(GroupPropagator::new(&m, dt)?);
        }
        Ok(TrotterStepper {
            groups,
            dt,
            scratch: Scratch::default(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Applies `Π_k exp(−i H_k dt)`, first group first.
    pub fn step(&mut self, psi: &mut [Complex64]) {
        for g in &self.groups {
            g.apply(psi, &mut self.scratch);
        }
    }
}

/// One Trotter step with the plan's grouping and time step.
pub fn trotter_step(state: &StateVector, plan: &EvolutionPlan, h: &Hamiltonian) -> Result<StateVector> {
    if plan.method != Method::Trotter1 {
        return Err(Error::InvalidPlan("trotter_step needs a trotter1 plan".into()));
    }
    plan.validate(h)?;
    check_state(state, h)?;
    let mut stepper = TrotterStepper::new(h, &plan.term_grouping, plan.dt)?;
    let mut out = state.clone();
    stepper.step(out.amplitudes_mut());
    Ok(out)
}

fn check_state(state: &StateVector, h: &Hamiltonian) -> Result<()> {
    if state.amplitudes().len() != h.dim() {
        return Err(Error::LengthMismatch {
            expected: h.dim(),
            actual: state.amplitudes().len(),
        });
    }
    Ok(())
}

/// Propagator `exp(−iHt)` restricted to the rows on which H acts.
pub struct ExactPropagator<'a> {
    h: &'a CsrMatrix<Complex64>,
    active: Vec<usize>,
    dense: Option<SymmetricEigen<Complex64, nalgebra::Dyn>>,
    norm1: f64,
}

impl<'a> ExactPropagator<'a> {
    pub fn new(h: &'a CsrMatrix<Complex64>) -> Result<Self> {
        let active = h.nonempty_rows();
        if active.len() > MAX_EXACT_DIM {
            return Err(Error::CostGuard(format!(
                "active dimension {} exceeds the exact-evolution limit {MAX_EXACT_DIM}",
                active.len()
            )));
        }
        let scale = h.triplets().map(|(_, _, v)| v.norm()).fold(0.0, f64::max);
        let deviation = h.hermitian_defect();
        if deviation > 1e-12 * scale.max(1.0) {
            return Err(Error::NonHermitian { group: 0, deviation });
        }
        let dense = (active.len() <= DENSE_EXACT_DIM && !active.is_empty())
            .then(|| SymmetricEigen::new(dense_block(h, &active)));
        Ok(ExactPropagator {
            h,
            active,
            dense,
            norm1: h.norm1(),
        })
    }

    pub fn active_dim(&self) -> usize {
        self.active.len()
    }

    pub fn apply(&self, psi: &mut [Complex64], t: f64) -> Result<()> {
        if t == 0.0 || self.active.is_empty() {
            return Ok(());
        }
        match &self.dense {
            Some(eig) => {
                let x = nalgebra::DVector::from_iterator(
                    self.active.len(),
                    self.active.iter().map(|&i| psi[i]),
                );
                let v = &eig.eigenvectors;
                let mut coeff = v.adjoint() * x;
                for (c, &lambda) in coeff.iter_mut().zip(eig.eigenvalues.iter()) {
                    *c *= Complex64::from_polar(1.0, -lambda * t);
                }
                let y = v * coeff;
                for (&i, &val) in self.active.iter().zip(y.iter()) {
                    psi[i] = val;
                }
                Ok(())
            }
            None => self.krylov(psi, t),
        }
    }

    fn krylov(&self, psi: &mut [Complex64], t: f64) -> Result<()> {
        const M: usize = 40;
        const TOL: f64 = 1e-14;
        let mut remaining = t.abs();
        let sign = t.signum();
        let mut tau = remaining.min(15.0 / self.norm1.max(f64::MIN_POSITIVE));
        while remaining > 0.0 {
            tau = tau.min(remaining);
            let beta0 = crate::grid::l2_norm(psi);
            if beta0 == 0.0 {
                return Ok(());
            }
            let (basis, alpha, beta) = self.lanczos(psi, beta0, M);
            loop {
                let (y, err) = tridiagonal_exponential(&alpha, &beta, sign * tau);
                if err <= TOL {
                    psi.iter_mut().for_each(|p| *p = ZERO);
                    for (v, &c) in basis.iter().zip(y.iter()) {
                        let c = c * beta0;
                        for (p, &b) in psi.iter_mut().zip(v) {
                            *p += c * b;
                        }
                    }
                    remaining -= tau;
                    break;
                }
                tau *= 0.5;
                if tau < 1e-12 * t.abs() {
                    return Err(Error::NumericalGuard(format!(
                        "Krylov exponential did not converge (error estimate {err:e})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Lanczos basis with full reorthogonalization. `beta` has one more
    /// entry than `alpha` when the recursion did not break down; that last
    /// entry drives the error estimate.
    fn lanczos(&self, psi: &[Complex64], beta0: f64, m: usize) -> (Vec<Vec<Complex64>>, Vec<f64>, Vec<f64>) {
        let mut basis: Vec<Vec<Complex64>> = vec![psi.iter().map(|p| p / beta0).collect()];
        let mut alpha = Vec::with_capacity(m);
        let mut beta = Vec::with_capacity(m);
        let mut w = vec![ZERO; psi.len()];
        for j in 0..m {
            self.h.matvec_into(&basis[j], &mut w);
            let a: f64 = basis[j].iter().zip(&w).map(|(v, x)| (v.conj() * x).re).sum();
            alpha.push(a);
            for _ in 0..2 {
                for v in &basis {
                    let proj: Complex64 = v.iter().zip(&w).map(|(v, x)| v.conj() * x).sum();
                    for (x, &b) in w.iter_mut().zip(v) {
                        *x -= proj * b;
                    }
                }
            }
            let b = crate::grid::l2_norm(&w);
            if b <= 1e-13 * self.norm1.max(1e-300) {
                break;
            }
            beta.push(b);
            if j + 1 < m {
                basis.push(w.iter().map(|x| x / b).collect());
            }
        }
        (basis, alpha, beta)
    }
}

/// `exp(−i T t) e_1` for the Lanczos tridiagonal and the error estimate
/// `β_m |y_m|`.
fn tridiagonal_exponential(alpha: &[f64], beta: &[f64], t: f64) -> (Vec<Complex64>, f64) {
    let m = alpha.len();
    let mut tri = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        tri[(j, j)] = alpha[j];
        if j + 1 < m {
            tri[(j, j + 1)] = beta[j];
            tri[(j + 1, j)] = beta[j];
        }
    }
    let eig = SymmetricEigen::new(tri);
    let q = &eig.eigenvectors;
    let y: Vec<Complex64> = (0..m)
        .map(|r| {
            (0..m)
                .map(|k| Complex64::from_polar(q[(r, k)] * q[(0, k)], -eig.eigenvalues[k] * t))
                .sum()
        })
        .collect();
    let residual = if beta.len() >= m { beta[m - 1] * y[m - 1].norm() } else { 0.0 };
    (y, residual)
}

/// `exp(−iHt)·state`.
pub fn exact_evolve(state: &StateVector, h: &Hamiltonian, t: f64) -> Result<StateVector> {
    check_state(state, h)?;
    let prop = ExactPropagator::new(&h.total)?;
    let mut out = state.clone();
    prop.apply(out.amplitudes_mut(), t)?;
    Ok(out)
}

/// One classical RK4 step of `dψ/dt = −iHψ`.
pub fn rk4_step(h: &CsrMatrix<Complex64>, psi: &mut [Complex64], dt: f64) {
    let mi = Complex64::new(0.0, -1.0);
    let f = |x: &[Complex64]| -> Vec<Complex64> { h.matvec(x).into_iter().map(|v| mi * v).collect() };
    let axpy = |a: &[Complex64], s: f64, b: &[Complex64]| -> Vec<Complex64> {
        a.iter().zip(b).map(|(x, y)| x + y * s).collect()
    };
    let k1 = f(psi);
    let k2 = f(&axpy(psi, dt / 2.0, &k1));
    let k3 = f(&axpy(psi, dt / 2.0, &k2));
    let k4 = f(&axpy(psi, dt, &k3));
    for (i, p) in psi.iter_mut().enumerate() {
        *p += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
    }
}

/// A recorded point of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot<R> {
    pub step: usize,
    pub time: f64,
    pub record: R,
}

/// Evolves `state` for `plan.n_steps` steps and calls `recorder` at step 0,
/// every `snapshot_stride` steps and at the final step.
pub fn evolve_trajectory<R>(
    state: &StateVector,
    plan: &EvolutionPlan,
    h: &Hamiltonian,
    mut recorder: impl FnMut(f64, &StateVector) -> Result<R>,
) -> Result<Vec<Snapshot<R>>> {
    plan.validate(h)?;
    check_state(state, h)?;
    let mut current = state.clone();
    let mut out = Vec::with_capacity(plan.n_steps / plan.snapshot_stride + 2);
    out.push(Snapshot {
        step: 0,
        time: 0.0,
        record: recorder(0.0, &current)?,
    });
    let mut advance: Box<dyn FnMut(&mut [Complex64]) -> Result<()> + '_> = match plan.method {
        Method::Trotter1 => {
            let mut stepper = TrotterStepper::new(h, &plan.term_grouping, plan.dt)?;
            Box::new(move |psi| {
                stepper.step(psi);
                Ok(())
            })
        }
        Method::Exact => {
            let prop = ExactPropagator::new(&h.total)?;
            let dt = plan.dt;
            Box::new(move |psi| prop.apply(psi, dt))
        }
        Method::Rk4 => {
            let dt = plan.dt;
            let m = &h.total;
            Box::new(move |psi| {
                rk4_step(m, psi, dt);
                Ok(())
            })
        }
    };
    for step in 1..=plan.n_steps {
        advance(current.amplitudes_mut())?;
        if step % plan.snapshot_stride == 0 || step == plan.n_steps {
            let time = step as f64 * plan.dt;
            out.push(Snapshot {
                step,
                time,
                record: recorder(time, &current)?,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, GridSpec, MaterialField, SystemKind};
    use crate::operators::assemble_tm2d;

    fn small() -> (Hamiltonian, StateVector) {
        let g = GridSpec::uniform(&[2, 2], 1.0, Boundary::Dirichlet).unwrap();
        let speeds: Vec<f64> = (0..16).map(|j| 0.5 + 0.03 * j as f64).collect();
        let m = MaterialField::new(&g, speeds).unwrap();
        let h = assemble_tm2d(&g, &m).unwrap();
        let f0: Vec<Complex64> = (0..16).map(|j| Complex64::new((j as f64 * 0.7).sin(), 0.0)).collect();
        let s = StateVector::from_fields(&g, SystemKind::Tm2d, &[f0]).unwrap();
        (h, s)
    }

    #[test]
    fn plan_validation() {
        let (h, _) = small();
        let mut plan = EvolutionPlan::new(Method::Trotter1, 0.1, 10, 1, &h);
        assert_eq!(plan.term_grouping, vec![vec![0], vec![1]]);
        assert!(plan.validate(&h).is_ok());
        plan.term_grouping = vec![vec![0]];
        assert!(plan.validate(&h).is_err());
        plan.term_grouping = vec![vec![0, 1], vec![1]];
        assert!(plan.validate(&h).is_err());
        plan.term_grouping = vec![vec![0, 1]];
        plan.dt = 0.0;
        assert!(plan.validate(&h).is_err());
    }

    #[test]
    fn single_group_matches_exact() {
        let (h, s) = small();
        let mut plan = EvolutionPlan::new(Method::Trotter1, 0.3, 1, 1, &h);
        plan.term_grouping = vec![vec![0, 1]];
        let a = trotter_step(&s, &plan, &h).unwrap();
        let b = exact_evolve(&s, &h, 0.3).unwrap();
        let diff = crate::grid::l2_norm(
            &a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| x - y).collect::<Vec<_>>(),
        );
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn krylov_matches_dense() {
        let (h, s) = small();
        let prop = ExactPropagator {
            h: &h.total,
            active: h.total.nonempty_rows(),
            dense: None,
            norm1: h.total.norm1(),
        };
        let mut a = s.amplitudes().to_vec();
        prop.krylov(&mut a, 7.3).unwrap();
        let b = exact_evolve(&s, &h, 7.3).unwrap();
        let diff = a.iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-11, "{diff}");
    }

    #[test]
    fn rk4_is_close_for_small_steps() {
        let (h, s) = small();
        let mut psi = s.amplitudes().to_vec();
        for _ in 0..100 {
            rk4_step(&h.total, &mut psi, 0.01);
        }
        let b = exact_evolve(&s, &h, 1.0).unwrap();
        let diff = psi.iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn trajectory_includes_final_step() {
        let (h, s) = small();
        let plan = EvolutionPlan::new(Method::Trotter1, 0.1, 7, 3, &h);
        let snaps = evolve_trajectory(&s, &plan, &h, |t, _| Ok(t)).unwrap();
        let steps: Vec<usize> = snaps.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 3, 6, 7]);
        assert!((snaps[3].time - 0.7).abs() < 1e-15);
    }
}
