use kgeo_core::*;
use kgeo_core::field::*;
use kgeo_core::chart::ChartGrid;
use std::sync::Arc;
use nalgebra::DMatrix;

#[test]
fn dbg_chart_dense() {
    let grid = Arc::new(Grid::Chart(ChartGrid::full(48, 12).unwrap()));
    let g = MetricField::fubini_study(grid.clone()).unwrap();
    let op = lichnerowicz::OperatorHandle::new(&g).unwrap();
    let n = grid.num_nodes();
    let dim = 2 * n;
    let weights: Vec<f64> = (0..n).map(|i| g.vol_density(i) * grid.node_weight(i)).collect();
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for c in 0..dim {
        let mut e = vec![C64::new(0.0, 0.0); n];
        if c < n { e[c] = C64::new(1.0, 0.0); } else { e[c - n] = C64::new(0.0, 1.0); }
        let u = ScalarField::new(grid.clone(), e, false);
        let au = op.apply_stiffness(&u).unwrap();
        for i in 0..n {
            a[(i, c)] = au.values[i].re;
            a[(n + i, c)] = au.values[i].im;
        }
    }
    // generalized: B^{-1/2} A B^{-1/2}
    let mut bs = vec![0.0; dim];
    for i in 0..n { bs[i] = weights[i].sqrt(); bs[n+i] = weights[i].sqrt(); }
    for i in 0..dim { for j in 0..dim { a[(i,j)] /= bs[i]*bs[j]; } }
    let a = (&a + a.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].partial_cmp(&eig.eigenvalues[y]).unwrap());
    println!("smallest 14: {:?}", order.iter().take(18).map(|&i| eig.eigenvalues[i]).collect::<Vec<_>>());
    // profile of eigenvector #8 (0-based; after 2 consts + 6 kernel)
    let chart = grid.as_chart().unwrap();
    for pick in [8usize, 9] {
        let col = order[pick];
        let mut ring_mass = vec![0.0f64; chart.nr];
        for i in 0..n {
            let v2 = eig.eigenvectors[(i, col)].powi(2) + eig.eigenvectors[(n+i, col)].powi(2);
            ring_mass[i / chart.ntheta] += v2;
        }
        let top: Vec<(usize, f64)> = {
            let mut idx: Vec<usize> = (0..chart.nr).collect();
            idx.sort_by(|&x, &y| ring_mass[y].partial_cmp(&ring_mass[x]).unwrap());
            idx.iter().take(4).map(|&j| (j, (ring_mass[j]*1000.0).round()/1000.0)).collect()
        };
        println!("eig[{pick}] = {:.4e}, mass concentrated at rings {:?} (nr={})", eig.eigenvalues[col], top, chart.nr);
    }
}
