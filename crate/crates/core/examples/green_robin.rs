// Green and Robin functions of the unit ball in R⁴, checked against the whole-space limit
// and the boundary condition.

use multispike::domain::{dist_boundary, green_g, robin_h};
use multispike::BallDomain;

pub struct Sample {
    pub x: f64,
    pub robin_diag: f64,
    /// `(1 - |x|²)^{n-2} H(x, x)`; equals 1 for every x in the ball.
    pub scaled_diag: f64,
    pub green_near_boundary: f64,
}

pub fn run_example() -> Vec<Sample> {
    let ball = BallDomain::unit(4).expect("ball");
    [0.0, 0.25, 0.5, 0.75, 0.9]
        .iter()
        .map(|&t| {
            let x = [t, 0.0, 0.0, 0.0];
            let h = robin_h(&ball, &x, &x).expect("H");
            let d = dist_boundary(&ball, &x).expect("d");
            // a point just inside the sphere, opposite side
            let y = [-(1.0 - 1e-9), 0.0, 0.0, 0.0];
            Sample {
                x: t,
                robin_diag: h,
                scaled_diag: h * (d * (2.0 - d)).powi(2),
                green_near_boundary: green_g(&ball, &x, &y).expect("G"),
            }
        })
        .collect()
}

#[allow(dead_code)]
fn main() {
    println!("{:>5} {:>14} {:>14} {:>12}", "|x|", "H(x,x)", "scaled", "G(x,~bdry)");
    for s in run_example() {
        println!("{:>5.2} {:>14.6e} {:>14.10} {:>12.3e}", s.x, s.robin_diag, s.scaled_diag, s.green_near_boundary);
    }
}
