use kgeo_core::*;
use kgeo_core::field::*;
use kgeo_core::torus::TorusGrid;
use std::sync::Arc;

#[test]
fn dbg_flat_kernel() {
    let grid = Arc::new(Grid::Torus(TorusGrid::new(1, 16).unwrap()));
    let g = MetricField::flat(grid.clone()).unwrap();
    match lichnerowicz::kernel_basis(&g, 0.0097, 42) {
        Ok(b) => println!("OK dim {}", b.dim()),
        Err(e) => println!("ERR {}", format!("{e:?}").chars().take(120).collect::<String>()),
    }
}
