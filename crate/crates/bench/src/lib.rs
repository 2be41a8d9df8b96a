//! Fixtures shared by the benchmarks.

use latspec_core::{BoxOperator, LatticeBox, LatticeField, Potential, Site};

/// Bumps of height `amplitude` at `k^2` along the first axis, inside `radius`.
pub fn square_bumps(dim: usize, radius: i64, amplitude: f64) -> Potential {
    let entries = (1..)
        .map(|k: i64| k * k)
        .take_while(|&n| n <= radius)
        .map(|n| {
            let mut coords = vec![0; dim];
            coords[0] = n;
            (Site::new(coords), amplitude)
        });
    Potential::from_entries(dim, entries).expect("valid potential")
}

pub fn dirichlet_operator(dim: usize, radius: i64, amplitude: f64) -> BoxOperator {
    let lattice = LatticeBox::dirichlet(dim, radius).expect("valid box");
    BoxOperator::new(lattice, square_bumps(dim, radius, amplitude)).expect("valid operator")
}

pub fn periodic_operator(dim: usize, radius: i64) -> (BoxOperator, LatticeField) {
    let lattice = LatticeBox::periodic(dim, radius).expect("valid box");
    let op = BoxOperator::new(lattice, square_bumps(dim, radius / 2, 1.0)).expect("valid operator");
    let f = LatticeField::gaussian(lattice, &Site::origin(dim), 1.5);
    (op, f)
}
