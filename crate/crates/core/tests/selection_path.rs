use mna_core::seed::rng;
use mna_core::selection::{
    lambda_grid, lambda_max, lasso_path, select_lambda, standardize, SelectionParams, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use rand_distr::{Distribution, StandardNormal};

fn design(n: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..n).map(|_| (0..p).map(|_| StandardNormal.sample(&mut r)).collect()).collect()
}

fn names(p: usize) -> Vec<String> {
    (0..p).map(|i| format!("f{i}")).collect()
}

fn sparse_target(x: &[Vec<f64>], seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    x.iter()
        .map(|row| {
            let e: f64 = StandardNormal.sample(&mut r);
            (1.5 * row[3] - 1.0 * row[17] + 0.5 * e > 0.0) as u8 as f64
        })
        .collect()
}

#[test]
fn l1_norm_non_increasing_with_lambda() {
    for seed in 0..5 {
        let (x, _) = standardize(&design(80, 12, seed)).unwrap();
        let y = sparse_target(&design(80, 20, seed + 50), seed);
        let lm = lambda_max(&x, &y).unwrap();
        let grid = lambda_grid(lm, 50, 1e-3);
        let path = lasso_path(&x, &y, &grid, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        for w in path.windows(2) {
            assert!(w[1].l1_norm() >= w[0].l1_norm() - 1e-9, "seed {seed}");
        }
    }
}

#[test]
fn recovers_synthetic_support() {
    let (x, _) = standardize(&design(200, 30, 11)).unwrap();
    let y = sparse_target(&x, 12);
    let lm = lambda_max(&x, &y).unwrap();
    let s = select_lambda(&x, &y, &names(30), &lambda_grid(lm, 50, 1e-3), &SelectionParams::default()).unwrap();
    assert!(s.indices.contains(&3) && s.indices.contains(&17), "{:?}", s.indices);
    assert_eq!(s.names.len(), s.indices.len());
}

#[test]
fn same_seed_same_selection() {
    let (x, _) = standardize(&design(90, 15, 21)).unwrap();
    let y = sparse_target(&design(90, 20, 22), 23);
    let grid = lambda_grid(lambda_max(&x, &y).unwrap(), 50, 1e-3);
    let params = SelectionParams { seed: 99, ..Default::default() };
    let a = select_lambda(&x, &y, &names(15), &grid, &params).unwrap();
    let b = select_lambda(&x, &y, &names(15), &grid, &params).unwrap();
    assert_eq!(a, b);
}
