// Universal constants for n = 3..6 and the orthogonality check `∫δ^p ψ⁰ = 0`.

use multispike::bubble::{constants_for, orthogonality_integral};
use multispike::{Dimension, UniversalConstants};

pub fn run_example() -> Vec<(UniversalConstants, f64)> {
    (3..=6)
        .map(|n| {
            let dim = Dimension::new(n).expect("valid dimension");
            let c = constants_for(dim).expect("constants");
            let orth = orthogonality_integral(dim).expect("orthogonality");
            (c, orth.value)
        })
        .collect()
}

#[allow(dead_code)]
fn main() {
    println!("{:>2} {:>14} {:>14} {:>14} {:>14} {:>10} {:>10}", "n", "S^{n/2}", "cbar1", "Gamma1", "Gamma2", "cbar", "orth");
    for (c, orth) in run_example() {
        println!(
            "{:>2} {:>14.8} {:>14.8} {:>14.8} {:>14.8} {:>10.6} {:>10.2e}",
            c.n, c.sn_pow, c.cbar1, c.gamma1, c.gamma2, c.cbar, orth
        );
    }
}
