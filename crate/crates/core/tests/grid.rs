use hsim_core::grid::{
    decode_component, encode_scalar_field, parse_region, parse_region_notation, BitPattern, Boundary, GridSpec,
    StateVector, SystemKind,
};
use hsim_core::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 96,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn pattern_strategy(len: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!['0', '1', 'x']), len).prop_map(|v| v.into_iter().collect())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn encode_decode_round_trip(values in prop::collection::vec(-5.0f64..5.0, 16)) {
        prop_assume!(values.iter().any(|v| v.abs() > 1e-3));
        let grid = GridSpec::uniform(&[2, 2], 1.0, Boundary::Dirichlet).unwrap();
        let enc = encode_scalar_field(&values, &grid).unwrap();
        let field: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let state = StateVector::from_fields(&grid, SystemKind::Tm2d, &[field]).unwrap();
        prop_assert!((state.norm() - 1.0).abs() < 1e-14);
        let back = decode_component(&state, 0).unwrap();
        let norm = state.normalization().unwrap();
        prop_assert!((norm - enc.norm).abs() <= 1e-14 * norm);
        for ((b, v), a) in back.iter().zip(&values).zip(&enc.amplitudes) {
            prop_assert!((b.re * norm - v).abs() < 1e-12);
            prop_assert_eq!(*b, *a);
        }
    }

    /// Region size and membership agree with enumerating every bit completion.
    #[test]
    fn region_matches_completion_enumeration(
        qx in 1usize..=5,
        qy in 1usize..=5,
        seeds in prop::collection::vec((pattern_strategy(5), pattern_strategy(5)), 1..4),
    ) {
        let grid = GridSpec::uniform(&[qx as u32, qy as u32], 1.0, Boundary::Dirichlet).unwrap();
        let cubes: Vec<Vec<String>> = seeds
            .iter()
            .map(|(a, b)| vec![a[..qx].to_string(), b[..qy].to_string()])
            .collect();
        let region = parse_region(&cubes, &grid).unwrap();
        let completions = |p: &str| -> Vec<usize> {
            let mut out = vec![0usize];
            for ch in p.chars() {
                out = out
                    .into_iter()
                    .flat_map(|v| match ch {
                        '0' => vec![2 * v],
                        '1' => vec![2 * v + 1],
                        _ => vec![2 * v, 2 * v + 1],
                    })
                    .collect();
            }
            out
        };
        let mut expected: Vec<usize> = cubes
            .iter()
            .flat_map(|c| {
                let ys = completions(&c[1]);
                completions(&c[0])
                    .into_iter()
                    .flat_map(move |x| ys.clone().into_iter().map(move |y| (x << qy) | y))
                    .collect::<Vec<_>>()
            })
            .collect();
        expected.sort_unstable();
        expected.dedup();
        prop_assert_eq!(region.indices(), expected.as_slice());
    }

    #[test]
    fn pattern_text_round_trips(p in pattern_strategy(9)) {
        let parsed = BitPattern::parse(&p).unwrap();
        prop_assert_eq!(parsed.to_string(), p.clone());
        prop_assert_eq!(parsed.expand().len(), parsed.size());
        prop_assert!(parsed.expand().iter().all(|&v| parsed.matches(v)));
    }
}

#[test]
fn register_order_matches_encoding() {
    let grid = GridSpec::uniform(&[2, 3], 1.0, Boundary::Periodic).unwrap();
    let (nx, ny) = (4, 8);
    let fields: Vec<Vec<Complex64>> = (0..3)
        .map(|c| {
            (0..grid.len())
                .map(|j| Complex64::new((100 * c + j + 1) as f64, 0.0))
                .collect()
        })
        .collect();
    let state = StateVector::from_fields(&grid, SystemKind::Tm2d, &fields).unwrap();
    let norm = state.normalization().unwrap();
    assert_eq!(state.register_size(), 4);
    assert_eq!(state.amplitudes().len(), 4 * grid.len());
    for c in 0..3 {
        for jx in 0..nx {
            for jy in 0..ny {
                let linear = (c * nx + jx) * ny + jy;
                let spatial = grid.linear_index([jx, jy, 0]);
                assert_eq!(state.basis_index(c, spatial), linear);
                let expected = (100 * c + spatial + 1) as f64 / norm;
                assert!((state.amplitudes()[linear].re - expected).abs() < 1e-15);
            }
        }
    }
    assert_eq!(state.padding_leak(), 0.0);
}

#[test]
fn sine_samples_keep_their_ratios() {
    let grid = GridSpec::uniform(&[3], 1.0, Boundary::Periodic).unwrap();
    let values: Vec<f64> = (0..8).map(|j| (2.0 * std::f64::consts::PI * j as f64 / 8.0).sin()).collect();
    let enc = encode_scalar_field(&values, &grid).unwrap();
    let norm: f64 = enc.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    assert!((norm - 1.0).abs() < 1e-15);
    assert!((enc.amplitudes[1].re / enc.amplitudes[2].re - values[1] / values[2]).abs() < 1e-15);
}

#[test]
fn basis_states_decode_to_single_entries() {
    let grid = GridSpec::uniform(&[1, 1], 1.0, Boundary::Dirichlet).unwrap();
    let mut amps = vec![Complex64::new(0.0, 0.0); 16];
    amps[1] = Complex64::new(0.6, 0.0);
    amps[4 + 3] = Complex64::new(0.0, 0.8);
    let state = StateVector::from_amplitudes(grid.clone(), 2, 3, amps).unwrap();
    for c in 0..2 {
        let decoded = decode_component(&state, c).unwrap();
        assert_eq!(decoded.iter().filter(|a| a.norm() > 0.0).count(), 1);
    }
}

#[test]
fn paper_style_region_has_32_pixels() {
    let grid = GridSpec::uniform(&[6, 6], 1.0, Boundary::Dirichlet).unwrap();
    let region = parse_region_notation("{(0111xx,1010xx)_2,(1000xx,1010xx)_2}", &grid).unwrap();
    assert_eq!(region.len(), 32);
    for &j in region.indices() {
        let [x, y, _] = grid.coords(j);
        assert!((28..=35).contains(&x) && (40..=43).contains(&y));
    }
    let small = GridSpec::uniform(&[2, 2], 1.0, Boundary::Dirichlet).unwrap();
    let r = parse_region(&[vec!["10", "x1"]], &small).unwrap();
    let expected: Vec<usize> = [[2, 1, 0], [2, 3, 0]].iter().map(|&c| small.linear_index(c)).collect();
    assert_eq!(r.indices(), expected.as_slice());
}

#[test]
fn invalid_inputs() {
    let grid = GridSpec::uniform(&[2, 2], 1.0, Boundary::Dirichlet).unwrap();
    assert!(matches!(encode_scalar_field(&[0.0; 16], &grid), Err(Error::UnnormalizableField)));
    assert!(matches!(encode_scalar_field(&[1.0; 15], &grid), Err(Error::LengthMismatch { .. })));
    assert!(matches!(BitPattern::parse("01a"), Err(Error::InvalidPatternChar { .. })));
    assert!(parse_region(&[vec!["101", "1"]], &grid).is_err());
    assert!(parse_region(&[vec!["10"]], &grid).is_err());
    let state = StateVector::from_fields(&grid, SystemKind::Tm2d, &[vec![Complex64::new(1.0, 0.0); 16]]).unwrap();
    assert!(matches!(decode_component(&state, 4), Err(Error::ComponentOutOfRange { .. })));
    assert!(GridSpec::uniform(&[2, 2, 2, 2], 1.0, Boundary::Dirichlet).is_err());
}
