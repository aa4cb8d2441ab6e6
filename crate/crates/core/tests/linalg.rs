use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use relaysim_core::numerics::{
    dominant_singular_pair, hermitian_solve, inner, sample_complex_gaussian, CMatrix, RngStream,
    C64,
};

fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
    let mut rng = RngStream::new(seed, 0).generator();
    sample_complex_gaussian(&mut rng, rows, cols, 1.0).unwrap()
}

fn to_nalgebra(a: &CMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(a.rows(), a.cols(), |r, c| a[(r, c)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn solve_residual_is_small(n in 1usize..=8, seed in any::<u64>(), shift in 1e-3f64..10.0) {
        let b = random_matrix(n, n, seed);
        let a = b.gram().add(&CMatrix::identity(n).scale(C64::new(shift, 0.0)));
        let rhs = random_matrix(n, 1, seed ^ 0x5eed);
        let x = hermitian_solve(&a, rhs.column(0)).unwrap();
        let r = a.mul_vec(&x);
        let scale = a.max_abs() * x.norm() + rhs.column_norm_sqr(0).sqrt();
        for (ri, bi) in r.iter().zip(rhs.column(0)) {
            prop_assert!((ri - bi).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn dominant_pair_matches_svd(rows in 1usize..=6, cols in 1usize..=6, seed in any::<u64>()) {
        let a = random_matrix(rows, cols, seed);
        let pair = dominant_singular_pair(&a).unwrap();
        let svd = to_nalgebra(&a).svd(false, true);
        let sv = &svd.singular_values;
        let sigma = sv.max();
        prop_assert!((pair.sigma - sigma).abs() <= 1e-10 * sigma, "{} vs {}", pair.sigma, sigma);

        // The direction is only defined up to phase, and only when the top
        // singular value is separated from the next.
        let mut sorted: Vec<f64> = sv.iter().copied().collect();
        sorted.sort_by(|x, y| y.total_cmp(x));
        if sorted.len() > 1 && sorted[0] - sorted[1] > 1e-3 * sorted[0] {
            let v_t = svd.v_t.unwrap();
            let top = sv.iter().position(|&s| s == sigma).unwrap();
            let oracle: Vec<C64> = v_t.row(top).iter().map(|z| z.conj()).collect();
            let overlap = inner(&oracle, &pair.v).norm();
            prop_assert!((overlap - 1.0).abs() < 1e-8, "overlap {overlap}");
        }
        prop_assert!((pair.v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn top_singular_value_dominates_columns(rows in 1usize..=6, cols in 1usize..=6, seed in any::<u64>()) {
        let a = random_matrix(rows, cols, seed);
        let pair = dominant_singular_pair(&a).unwrap();
        let best_column = (0..cols).map(|k| a.column_norm_sqr(k)).fold(0.0, f64::max);
        prop_assert!(pair.sigma * pair.sigma >= best_column * (1.0 - 1e-12));
    }
}
