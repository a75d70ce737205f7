use kgeo_core::*;
use kgeo_core::field::*;
use kgeo_core::torus::TorusGrid;
use std::sync::Arc;
use std::f64::consts::PI;

#[test]
fn dbg_stiffness() {
    let grid = Arc::new(Grid::Torus(TorusGrid::new(1, 16).unwrap()));
    let g = MetricField::flat(grid.clone()).unwrap();
    let op = lichnerowicz::OperatorHandle::new(&g).unwrap();
    // A e_k should be w * pi^4 |k|^4 e_k with w = 2/256
    let w = 2.0 / 256.0;
    for (kx, ky) in [(1i64, 0i64), (0, 1), (1, 1), (2, 0)] {
        let u = ScalarField::from_fn(grid.clone(), |i| {
            let p = grid.as_torus().unwrap().node_point(i);
            (C64::new(0.0, 2.0*PI*(kx as f64*p[0] + ky as f64*p[1]))).exp()
        });
        let au = op.apply_stiffness(&u).unwrap();
        let k2 = (kx*kx + ky*ky) as f64;
        let want = w * PI.powi(4) * k2 * k2;
        // ratio at node 0 and max deviation from scalar multiple
        let mut worst = 0.0f64;
        for i in 0..grid.num_nodes() {
            let dev = (au.values[i] - want * u.values[i]).norm();
            if dev > worst { worst = dev; }
        }
        println!("k=({kx},{ky}): want {want:.6e}, worst dev {worst:.3e}");
    }
    // symmetry: <Au, v> vs <u, Av> in plain l2
    let rng = kgeo_core::rng::CounterRng::new(5).stream("sym");
    let t = grid.as_torus().unwrap();
    let u = ScalarField::new(grid.clone(), t.random_band_limited(&rng.substream(0), 5, 1.0), true);
    let v = ScalarField::new(grid.clone(), t.random_band_limited(&rng.substream(1), 5, 1.0), true);
    let au = op.apply_stiffness(&u).unwrap();
    let av = op.apply_stiffness(&v).unwrap();
    let mut d1 = C64::new(0.0,0.0); let mut d2 = C64::new(0.0,0.0);
    for i in 0..grid.num_nodes() {
        d1 += au.values[i] * v.values[i].conj();
        d2 += u.values[i] * av.values[i].conj();
    }
    println!("symmetry defect {:.3e}", (d1-d2).norm());
}
