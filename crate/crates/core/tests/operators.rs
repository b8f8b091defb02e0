use hsim_core::grid::{parse_region, Boundary, GridSpec, MaterialField, StateVector, SystemKind};
use hsim_core::operators::{
    adjoint_backward, assemble, assemble_full3d, assemble_tm2d, build_diff, build_shift, discrete_div_of_b, Direction,
    Shift,
};
use hsim_core::sparse::CsrMatrix;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BCS: [Boundary; 3] = [Boundary::Dirichlet, Boundary::Neumann, Boundary::Periodic];

fn dense(m: &CsrMatrix<f64>) -> DMatrix<f64> {
    let rows = m.to_dense();
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| rows[r][c])
}

fn grid_strategy() -> impl Strategy<Value = (Vec<u32>, Vec<Boundary>)> {
    prop_oneof![
        prop::collection::vec(1u32..=3, 2),
        prop::collection::vec(1u32..=2, 3),
    ]
    .prop_flat_map(|q| {
        let n = q.len();
        (Just(q), prop::collection::vec(prop::sample::select(BCS.to_vec()), n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn hamiltonian_is_hermitian((qubits, bcs) in grid_strategy(), seed in any::<u64>(), h in 0.2f64..3.0) {
        let grid = GridSpec::new(&qubits, h, &bcs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let speeds: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(0.2..2.2)).collect();
        let material = MaterialField::new(&grid, speeds).unwrap();
        let ham = assemble(&grid, &material).unwrap();
        prop_assert!(ham.total.hermitian_defect() < 1e-13);
        for term in &ham.terms {
            prop_assert!(term.matrix.hermitian_defect() < 1e-13);
        }
    }

    #[test]
    fn distinct_axes_commute((qubits, bcs) in grid_strategy()) {
        let grid = GridSpec::new(&qubits, 1.0, &bcs).unwrap();
        for a in 0..grid.dim() {
            for b in a + 1..grid.dim() {
                for da in [Direction::Forward, Direction::Backward] {
                    for db in [Direction::Forward, Direction::Backward] {
                        let x = build_diff(a, da, grid.boundary(a), &grid).unwrap().embedded();
                        let y = build_diff(b, db, grid.boundary(b), &grid).unwrap().embedded();
                        prop_assert_eq!(x.matmul(&y).max_abs_diff(&y.matmul(&x)), 0.0);
                    }
                }
            }
        }
    }
}

#[test]
fn shift_product_is_projector_off_the_top() {
    let grid = GridSpec::uniform(&[2], 1.0, Boundary::Dirichlet).unwrap();
    let up = build_shift(0, Shift::Raising, &grid).unwrap();
    let down = build_shift(0, Shift::Lowering, &grid).unwrap();
    let product = up.matmul(&down);
    assert_eq!(product.max_abs_diff(&CsrMatrix::diagonal(&[0.0, 1.0, 1.0, 1.0])), 0.0);
    assert_eq!(down.matmul(&up).max_abs_diff(&CsrMatrix::diagonal(&[1.0, 1.0, 1.0, 0.0])), 0.0);
}

#[test]
fn stencil_tables() {
    let grid = GridSpec::uniform(&[2], 0.5, Boundary::Neumann).unwrap();
    let d = build_diff(0, Direction::Forward, Boundary::Neumann, &grid).unwrap();
    let expected = [
        [-2.0, 2.0, 0.0, 0.0],
        [0.0, -2.0, 2.0, 0.0],
        [0.0, 0.0, -2.0, 2.0],
        [0.0, 0.0, 0.0, 0.0],
    ];
    assert_eq!(d.stencil.to_dense(), expected.map(|r| r.to_vec()).to_vec());

    let grid = GridSpec::uniform(&[2], 0.5, Boundary::Dirichlet).unwrap();
    let d = build_diff(0, Direction::Forward, Boundary::Dirichlet, &grid).unwrap();
    assert_eq!(d.apply(&[1.0; 4]), vec![0.0, 0.0, 0.0, -2.0]);
}

#[test]
fn adjoint_backward_matches_literal_stencil_except_neumann() {
    let grid = GridSpec::uniform(&[1], 1.0, Boundary::Dirichlet).unwrap();
    let cases = [
        (Boundary::Dirichlet, [[1.0, 0.0], [-1.0, 1.0]], true),
        (Boundary::Periodic, [[1.0, -1.0], [-1.0, 1.0]], true),
        (Boundary::Neumann, [[1.0, 0.0], [-1.0, 0.0]], false),
    ];
    for (bc, expected, literal_agrees) in cases {
        let fwd = build_diff(0, Direction::Forward, bc, &grid).unwrap();
        let adj = adjoint_backward(&fwd).unwrap();
        assert_eq!(adj.stencil.to_dense(), expected.map(|r| r.to_vec()).to_vec(), "{bc}");
        let literal = build_diff(0, Direction::Backward, bc, &grid).unwrap();
        assert_eq!(adj.stencil.max_abs_diff(&literal.stencil) == 0.0, literal_agrees, "{bc}");
    }
    for q in 1..=4 {
        let grid = GridSpec::uniform(&[q], 0.7, Boundary::Dirichlet).unwrap();
        for bc in [Boundary::Dirichlet, Boundary::Periodic] {
            let fwd = build_diff(0, Direction::Forward, bc, &grid).unwrap();
            let literal = build_diff(0, Direction::Backward, bc, &grid).unwrap();
            assert!(adjoint_backward(&fwd).unwrap().stencil.max_abs_diff(&literal.stencil) < 1e-15);
        }
    }
    let back = build_diff(0, Direction::Backward, Boundary::Dirichlet, &grid).unwrap();
    assert!(adjoint_backward(&back).is_err());
}

/// `(H²)₀₀ = −Σ D⁺ c² D⁻` computed block by block from dense stencils.
#[test]
fn squared_hamiltonian_reproduces_wave_operator() {
    for (qubits, bc) in [(1, Boundary::Periodic), (2, Boundary::Dirichlet), (2, Boundary::Neumann)] {
        let grid = GridSpec::uniform(&[qubits, qubits], 1.0, bc).unwrap();
        let n = grid.len();
        let speeds: Vec<f64> = (0..n).map(|j| 0.45 + 0.55 * ((j * 7) % 5) as f64 / 4.0).collect();
        let material = MaterialField::new(&grid, speeds.clone()).unwrap();
        let h = assemble_tm2d(&grid, &material).unwrap();
        let h2 = h.total.matmul(&h.total);
        let c = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(speeds));
        let mut expected = DMatrix::<f64>::zeros(n, n);
        for axis in 0..2 {
            let fwd = build_diff(axis, Direction::Forward, bc, &grid).unwrap();
            let dp = dense(&fwd.embedded());
            let dm = -dp.transpose();
            expected -= &dp * &c * &c * &dm;
        }
        let mut worst = 0.0f64;
        for r in 0..n {
            for col in 0..n {
                let got = h2.get(r, col);
                worst = worst.max((got - Complex64::new(expected[(r, col)], 0.0)).norm());
            }
        }
        assert!(worst < 1e-13, "{bc}: {worst}");
    }
}

#[test]
fn periodic_uniform_spectrum_is_symmetric_with_zero() {
    let grid = GridSpec::uniform(&[1, 1], 1.0, Boundary::Periodic).unwrap();
    let material = MaterialField::uniform(&grid, 1.0).unwrap();
    let h = assemble_tm2d(&grid, &material).unwrap();
    let active = h.active_indices();
    assert_eq!(active.len(), 12);
    let m = nalgebra::DMatrix::<Complex64>::from_fn(12, 12, |r, c| h.total.get(active[r], active[c]));
    let mut eig: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    for k in 0..eig.len() {
        assert!((eig[k] + eig[eig.len() - 1 - k]).abs() < 1e-12, "{eig:?}");
    }
    assert!(eig.iter().any(|e| e.abs() < 1e-12));
}

#[test]
fn full3d_gradient_components_couple_only_to_their_parent() {
    let grid = GridSpec::uniform(&[1, 1, 1], 1.0, Boundary::Periodic).unwrap();
    let material = MaterialField::uniform(&grid, 1.0).unwrap();
    let h = assemble_full3d(&grid, &material).unwrap();
    assert!(h.total.hermitian_defect() < 1e-13);
    let n = grid.len();
    for (r, c, _) in h.total.triplets() {
        let (rc, cc) = (r / n, c / n);
        let (field, grad) = if rc < 3 { (rc, cc) } else { (cc, rc) };
        assert!(field < 3 && (3..12).contains(&grad), "block ({rc}, {cc})");
        assert_eq!((grad - 3) / 3, field, "block ({rc}, {cc})");
    }
}

#[test]
fn uniform_field_in_kernel() {
    let grid = GridSpec::uniform(&[2, 2], 1.0, Boundary::Periodic).unwrap();
    let material = MaterialField::uniform(&grid, 1.0).unwrap();
    let h = assemble_tm2d(&grid, &material).unwrap();
    let fields = vec![vec![Complex64::new(1.0, 0.0); grid.len()]];
    let state = StateVector::from_fields(&grid, SystemKind::Tm2d, &fields).unwrap();
    assert!(h.apply(state.amplitudes()).iter().all(|a| a.norm() < 1e-15));

    let grid = GridSpec::uniform(&[1, 1, 1], 1.0, Boundary::Periodic).unwrap();
    let material = MaterialField::uniform(&grid, 1.0).unwrap();
    let h = assemble_full3d(&grid, &material).unwrap();
    let fields = vec![vec![Complex64::new(1.0, 0.0); grid.len()]];
    let state = StateVector::from_fields(&grid, SystemKind::Full3d, &fields).unwrap();
    assert!(h.apply(state.amplitudes()).iter().all(|a| a.norm() < 1e-15));
}

#[test]
fn divergence_detects_non_gradient_data() {
    let grid = GridSpec::uniform(&[1, 1, 1], 1.0, Boundary::Dirichlet).unwrap();
    let fields: Vec<Vec<Complex64>> = (0..12)
        .map(|c| (0..grid.len()).map(|j| Complex64::new(((c * 31 + j * 17) % 11) as f64 - 5.0, 0.0)).collect())
        .collect();
    let state = StateVector::from_fields(&grid, SystemKind::Full3d, &fields).unwrap();
    let div = discrete_div_of_b(&state, &grid).unwrap();
    assert!(div.iter().any(|v| v.abs() > 1e-3));
}

#[test]
fn wrong_dimension_is_rejected() {
    let g2 = GridSpec::uniform(&[1, 1], 1.0, Boundary::Dirichlet).unwrap();
    let g3 = GridSpec::uniform(&[1, 1, 1], 1.0, Boundary::Dirichlet).unwrap();
    assert!(assemble_full3d(&g2, &MaterialField::uniform(&g2, 1.0).unwrap()).is_err());
    assert!(assemble_tm2d(&g3, &MaterialField::uniform(&g3, 1.0).unwrap()).is_err());
    assert!(build_diff(2, Direction::Forward, Boundary::Dirichlet, &g2).is_err());
}

#[test]
fn region_cardinality_matches_enumeration() {
    let grid = GridSpec::uniform(&[2, 1], 1.0, Boundary::Dirichlet).unwrap();
    let region = parse_region(&[vec!["10", "x"]], &grid).unwrap();
    let expected: Vec<usize> = [[2, 0, 0], [2, 1, 0]].iter().map(|&c| grid.linear_index(c)).collect();
    assert_eq!(region.indices(), expected.as_slice());
}
