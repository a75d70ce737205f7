use kgeo_core::lobpcg::*;
use kgeo_core::rng::CounterRng;
use nalgebra::DMatrix;

#[test]
fn dbg_cluster() {
    // degenerate clusters mimicking the flat torus: 2 zero modes
    // (constants - deflated), 8 at 97.4, 8 at 389.6, rest spread
    let n = 400usize;
    let eigs: Vec<f64> = (0..n).map(|i| {
        if i < 2 { 0.0 }
        else if i < 10 { 97.4 }
        else if i < 18 { 389.6 }
        else { 500.0 + (i as f64) }
    }).collect();
    let e2 = eigs.clone();
    let apply_a = move |v: &[f64]| -> Vec<f64> { v.iter().enumerate().map(|(i, x)| e2[i] * x).collect() };
    let apply_b = |v: &[f64]| -> Vec<f64> { v.to_vec() };
    let e3 = eigs.clone();
    let precond = move |v: &[f64]| -> Vec<f64> { v.iter().enumerate().map(|(i, x)| x / (1.0 + e3[i])).collect() };
    let ops = Operators { apply_a: &apply_a, apply_b: &apply_b, precond: &precond };
    let rng = CounterRng::new(3).stream("cluster");
    let mut constraints = DMatrix::<f64>::zeros(n, 2);
    constraints[(0,0)] = 1.0; constraints[(1,1)] = 1.0;
    let opts = LobpcgOptions { block: 12, nev: 9, tol: 1e-7, lambda_tol: 0.0, max_iter: 300 };
    match lobpcg(n, &ops, &constraints, &opts, &rng) {
        Ok(r) => println!("OK {} iters: {:?}", r.iterations, &r.eigenvalues[..10]),
        Err(e) => println!("FAILED: {:?}", format!("{e:?}").chars().take(300).collect::<String>()),
    }
}
