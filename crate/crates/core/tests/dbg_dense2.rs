use kgeo_core::lobpcg::*;
use kgeo_core::rng::CounterRng;
use nalgebra::DMatrix;
use std::f64::consts::PI;

#[test]
fn dbg_dense_lobpcg() {
    // replicate the flat-torus pencil synthetically: eigenvalues of the
    // complex pencil: 0 (consts), pi^4 k^4 pattern; B = w I; T = 1/(1+eig)
    // BUT with eigenvectors NOT aligned to coordinates: use a random
    // orthogonal basis to mimic the Fourier-vs-coordinate mismatch.
    let n = 128usize;
    let w = 7.8e-3;
    let mut eigs = vec![0.0, 0.0];
    for k2 in [1.0f64, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0] { eigs.push(PI.powi(4) * k2 * k2); }
    { let mut k = 2.0; while eigs.len() < n { eigs.push(PI.powi(4) * k * k); k += 1.0; } }
    let eigs2: Vec<f64> = eigs.iter().map(|e| e * 2.0).collect(); // duplicate realified... just spread
    let _ = eigs2;
    // random orthogonal Q via Gram-Schmidt of random matrix
    let mut rng = CounterRng::new(99).stream("q");
    let mut q = DMatrix::<f64>::from_fn(n, n, |_, _| rng.normal());
    // QR orthonormalize
    let qr = q.clone().qr();
    q = qr.q();
    let lam = DMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_vec(eigs.clone()));
    let a_mat = &q * lam * q.transpose() * w;
    let apply_a = {
        let a = a_mat.clone();
        move |v: &[f64]| -> Vec<f64> {
            let x = nalgebra::DVector::from_column_slice(v);
            (&a * x).iter().cloned().collect()
        }
    };
    let apply_b = move |v: &[f64]| -> Vec<f64> { v.iter().map(|x| x * w).collect() };
    // preconditioner diagonal IN THE Q BASIS: T = Q diag(1/(1+eig)) Q^T (unscaled by w)
    let t_mat = {
        let d = DMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_vec(
            eigs.iter().map(|e| 1.0 / (1.0 + e)).collect()));
        &q * d * q.transpose()
    };
    let precond = {
        let t = t_mat.clone();
        move |v: &[f64]| -> Vec<f64> {
            let x = nalgebra::DVector::from_column_slice(v);
            (&t * x).iter().cloned().collect()
        }
    };
    let ops = Operators { apply_a: &apply_a, apply_b: &apply_b, precond: &precond };
    let rng2 = CounterRng::new(3).stream("dense2");
    // constraints: the two zero-modes, B-normalized
    let mut constraints = DMatrix::<f64>::zeros(n, 2);
    let cn = 1.0 / (w as f64).sqrt();
    for i in 0..n { constraints[(i,0)] = q[(i,0)] * cn; constraints[(i,1)] = q[(i,1)] * cn; }
    let opts = LobpcgOptions { block: 12, nev: 9, tol: 1e-6, lambda_tol: 0.0, max_iter: 200 };
    match lobpcg(n, &ops, &constraints, &opts, &rng2) {
        Ok(r) => println!("OK {} iters evs {:?}", r.iterations, r.eigenvalues.iter().take(10).map(|v| (v/PI.powi(4)*100.0).round()/100.0).collect::<Vec<_>>()),
        Err(e) => println!("ERR {}", format!("{e:?}").chars().take(200).collect::<String>()),
    }
}
