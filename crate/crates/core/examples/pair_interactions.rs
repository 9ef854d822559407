// Two spikes on a diameter of the unit ball: asymptotic pair expansions against quadrature.

use multispike::domain::Domain;
use multispike::interactions::{pair_inner_asymptotic, pair_inner_quadrature, SpikePair};
use multispike::quadrature::PairingPlan;
use multispike::{BubbleParams, QuadOptions};

pub struct Row {
    pub lambda: f64,
    pub eps_ij: f64,
    pub asymptotic: f64,
    pub quadrature: f64,
    pub rel_gap: f64,
}

pub fn run_example() -> Vec<Row> {
    let dom = Domain::unit_ball(4).expect("ball");
    let plan = PairingPlan::deterministic(QuadOptions { rel_tol: 1e-10, ..Default::default() });
    [20.0, 40.0, 80.0, 160.0]
        .iter()
        .map(|&l| {
            let bi = BubbleParams::new(vec![0.3, 0.0, 0.0, 0.0], l).unwrap();
            let bj = BubbleParams::new(vec![-0.3, 0.0, 0.0, 0.0], 1.25 * l).unwrap();
            let pair = SpikePair::new(bi, bj).unwrap();
            let asym = pair_inner_asymptotic(&pair, &dom).unwrap();
            let quad = pair_inner_quadrature(&pair, &dom, &plan).unwrap();
            Row {
                lambda: l,
                eps_ij: asym.eps_ij,
                asymptotic: asym.pp,
                quadrature: quad.pp.value,
                rel_gap: (asym.pp / quad.pp.value - 1.0).abs(),
            }
        })
        .collect()
}

#[allow(dead_code)]
fn main() {
    println!("{:>6} {:>11} {:>14} {:>14} {:>10}", "lambda", "eps_ij", "<Pdi,Pdj> asym", "quad", "rel gap");
    for r in run_example() {
        println!(
            "{:>6} {:>11.4e} {:>14.6e} {:>14.6e} {:>10.2e}",
            r.lambda, r.eps_ij, r.asymptotic, r.quadrature, r.rel_gap
        );
    }
}
