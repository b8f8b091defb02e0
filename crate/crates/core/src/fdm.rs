//! Classical finite-difference solver for the scalar wave equation
//! `∂²A/∂t² = c ∇·(c² ∇(A/c))`, discretized with the same difference pair as
//! the Hamiltonian so that only the time integrator differs.
//!
//! The quantum state corresponding to `(A, V = ∂A/∂t)` is
//! `ψ_0 = V/c`, `ψ_μ = c D⁻_μ (A/c)`; `H²` restricted to component 0 then
//! reproduces the acceleration operator up to the similarity by `c̃`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, MaterialField, StateVector, SystemKind};
use crate::operators::{adjoint_backward, build_diff, build_material_diag, Direction};
use crate::sparse::CsrMatrix;

/// Field snapshot of the classical solver.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveField {
    pub a: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
    /// Set once a step with `|dt|` above the CFL bound has been taken.
    pub cfl_warning: bool,
}

impl WaveField {
    pub fn zeros(n: usize) -> Self {
        WaveField {
            a: vec![0.0; n],
            v: vec![0.0; n],
            t: 0.0,
            cfl_warning: false,
        }
    }

    pub fn new(a: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if a.len() != v.len() {
            return Err(Error::LengthMismatch {
                expected: a.len(),
                actual: v.len(),
            });
        }
        if a.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::NumericalGuard("wave field holds non-finite values".into()));
        }
        Ok(WaveField {
            a,
            v,
            t: 0.0,
            cfl_warning: false,
        })
    }
}

/// Finite-difference wave solver on a fixed grid and material.
#[derive(Clone, Debug)]
pub struct WaveSolver {
    grid: GridSpec,
    speeds: Vec<f64>,
    /// `c ΣD⁺ c² D⁻ c⁻¹`.
    accel: CsrMatrix<f64>,
    /// `c D⁻_μ c⁻¹` per axis.
    gradients: Vec<CsrMatrix<f64>>,
    cfl_limit: f64,
}

impl WaveSolver {
    pub fn new(grid: &GridSpec, material: &MaterialField) -> Result<Self> {
        let c = build_material_diag(material, grid)?;
        let inv_c = CsrMatrix::diagonal(&material.speeds().iter().map(|s| 1.0 / s).collect::<Vec<_>>());
        let c2 = c.matmul(&c);
        let n = grid.len();
        let mut accel = CsrMatrix::zeros(n, n);
        let mut gradients = Vec::with_capacity(grid.dim());
        for axis in 0..grid.dim() {
            let fwd = build_diff(axis, Direction::Forward, grid.boundary(axis), grid)?;
            let dp = fwd.embedded();
            let dm = adjoint_backward(&fwd)?.embedded();
            let grad = c.matmul(&dm).matmul(&inv_c);
            accel = accel.add(&c.matmul(&dp).matmul(&c2).matmul(&dm).matmul(&inv_c));
            gradients.push(grad);
        }
        let cfl_limit = grid.spacing() / (material.max_speed() * (grid.dim() as f64).sqrt());
        Ok(WaveSolver {
            grid: grid.clone(),
            speeds: material.speeds().to_vec(),
            accel,
            gradients,
            cfl_limit,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Acceleration operator `A ↦ ∂²A/∂t²`.
    pub fn accel_matrix(&self) -> &CsrMatrix<f64> {
        &self.accel
    }

    /// Largest stable step `h / (c_max √dim)`.
    pub fn cfl_limit(&self) -> f64 {
        self.cfl_limit
    }

    fn check(&self, field: &WaveField) -> Result<()> {
        if field.a.len() != self.grid.len() || field.v.len() != self.grid.len() {
            return Err(Error::LengthMismatch {
                expected: self.grid.len(),
                actual: field.a.len().min(field.v.len()),
            });
        }
        Ok(())
    }

    /// Kick-drift-kick leapfrog. Negative `dt` runs backwards.
    pub fn leapfrog_step(&self, field: &WaveField, dt: f64) -> Result<WaveField> {
        self.check(field)?;
        let mut out = field.clone();
        let mut acc = self.accel.matvec(&out.a);
        for (v, a) in out.v.iter_mut().zip(&acc) {
            *v += 0.5 * dt * a;
        }
        for (a, v) in out.a.iter_mut().zip(&out.v) {
            *a += dt * v;
        }
        self.accel.matvec_into(&out.a, &mut acc);
        for (v, a) in out.v.iter_mut().zip(&acc) {
            *v += 0.5 * dt * a;
        }
        out.t += dt;
        out.cfl_warning |= dt.abs() > self.cfl_limit * (1.0 + 1e-12);
        Ok(out)
    }

    /// Classical RK4 on the first-order system `A' = V`, `V' = M A`.
    pub fn rk4_step(&self, field: &WaveField, dt: f64) -> Result<WaveField> {
        self.check(field)?;
        let f = |a: &[f64], v: &[f64]| -> (Vec<f64>, Vec<f64>) { (v.to_vec(), self.accel.matvec(a)) };
        let axpy = |x: &[f64], s: f64, y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| p + s * q).collect() };
        let (a0, v0) = (&field.a, &field.v);
        let k1 = f(a0, v0);
        let k2 = f(&axpy(a0, dt / 2.0, &k1.0), &axpy(v0, dt / 2.0, &k1.1));
        let k3 = f(&axpy(a0, dt / 2.0, &k2.0), &axpy(v0, dt / 2.0, &k2.1));
        let k4 = f(&axpy(a0, dt, &k3.0), &axpy(v0, dt, &k3.1));
        let combine = |x: &[f64], k: [&[f64]; 4]| -> Vec<f64> {
            x.iter()
                .enumerate()
                .map(|(i, p)| p + dt / 6.0 * (k[0][i] + 2.0 * (k[1][i] + k[2][i]) + k[3][i]))
                .collect()
        };
        let mut out = field.clone();
        out.a = combine(a0, [&k1.0, &k2.0, &k3.0, &k4.0]);
        out.v = combine(v0, [&k1.1, &k2.1, &k3.1, &k4.1]);
        out.t += dt;
        Ok(out)
    }

    /// Components `(V/c, c D⁻_μ (A/c))` of the matching quantum state, unnormalized.
    pub fn to_quantum(&self, field: &WaveField) -> Result<Vec<Vec<f64>>> {
        self.check(field)?;
        let mut comps = Vec::with_capacity(1 + self.gradients.len());
        comps.push(field.v.iter().zip(&self.speeds).map(|(v, c)| v / c).collect());
        for g in &self.gradients {
            comps.push(g.matvec(&field.a));
        }
        Ok(comps)
    }

    /// Normalized TM state for a 2D field, with the norm recorded.
    pub fn to_state(&self, field: &WaveField) -> Result<StateVector> {
        let comps = self.to_quantum(field)?;
        let fields: Vec<Vec<Complex64>> = comps
            .into_iter()
            .map(|c| c.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
            .collect();
        StateVector::from_fields(&self.grid, SystemKind::Tm2d, &fields)
    }

    /// Field with `A = 0` and `V = c · norm · Re ψ_0`, the data behind a
    /// state whose gradient components vanish.
    pub fn from_state(&self, state: &StateVector) -> Result<WaveField> {
        let norm = state.normalization().ok_or(Error::MissingNormalization)?;
        let psi0 = state.component(0)?;
        if psi0.len() != self.grid.len() {
            return Err(Error::DimensionMismatch("state grid differs from solver grid".into()));
        }
        let v = psi0.iter().zip(&self.speeds).map(|(p, c)| c * norm * p.re).collect();
        WaveField::new(vec![0.0; self.grid.len()], v)
    }

    /// `‖ψ(A, V)‖²`, the quantity the Hamiltonian flow conserves.
    pub fn energy(&self, field: &WaveField) -> Result<f64> {
        Ok(self
            .to_quantum(field)?
            .iter()
            .flatten()
            .map(|x| x * x)
            .sum())
    }

    /// `E_z = −∂A_z/∂t`.
    pub fn ez(&self, field: &WaveField) -> Vec<f64> {
        field.v.iter().map(|v| -v).collect()
    }
}

/// Relative L2 deviation `‖E_q − E_c‖ / ‖E_c‖` per matching snapshot pair.
pub fn compare_to_quantum(classical: &[(f64, Vec<f64>)], quantum: &[(f64, Vec<f64>)]) -> Result<Vec<(f64, f64)>> {
    if classical.len() != quantum.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} classical snapshots against {} quantum snapshots",
            classical.len(),
            quantum.len()
        )));
    }
    classical
        .iter()
        .zip(quantum)
        .map(|((tc, ec), (tq, eq))| {
            if ec.len() != eq.len() {
                return Err(Error::DimensionMismatch(format!(
                    "snapshot sizes differ: {} vs {}",
                    ec.len(),
                    eq.len()
                )));
            }
            if (tc - tq).abs() > 1e-9 * tc.abs().max(1.0) {
                return Err(Error::DimensionMismatch(format!("snapshot times differ: {tc} vs {tq}")));
            }
            let diff: f64 = ec.iter().zip(eq).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let base: f64 = ec.iter().map(|a| a * a).sum::<f64>().sqrt();
            Ok((*tc, if base > 0.0 { diff / base } else { diff }))
        })
        .collect()
}
