// Refined ansatz for one centered spike along a decreasing ε ladder.

use multispike::bubble::constants_for;
use multispike::constructor::{asymptotic_ansatz, refine, RefineOptions};
use multispike::domain::{Domain, GreenDomain};
use multispike::reduced::{find_critical_points, SearchConfig, SpikePattern};

pub struct Step {
    pub eps: f64,
    pub lambda_asymptotic: f64,
    pub lambda_refined: f64,
    pub alpha: f64,
    pub residual: f64,
}

pub fn run_example() -> Vec<Step> {
    let dom = Domain::unit_ball(4).expect("ball");
    let consts = constants_for(dom.dim()).unwrap();
    let pattern = SpikePattern::positive(1).unwrap();
    let cp = find_critical_points(&pattern, &dom, &SearchConfig::default())
        .unwrap()
        .into_iter()
        .find(|c| c.certified())
        .expect("the center is a certified critical point");
    [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
        .iter()
        .map(|&eps| {
            let seed = asymptotic_ansatz(eps, &pattern, &cp, &consts).unwrap();
            let r = refine(&seed, &cp, &dom, &consts, &RefineOptions::default()).unwrap();
            Step {
                eps,
                lambda_asymptotic: seed.lambda[0],
                lambda_refined: r.ansatz.lambda[0],
                alpha: r.ansatz.alpha[0],
                residual: r.residual,
            }
        })
        .collect()
}

#[allow(dead_code)]
fn main() {
    println!("{:>7} {:>12} {:>12} {:>10} {:>10}", "eps", "lambda0", "lambda", "alpha", "residual");
    for s in run_example() {
        println!(
            "{:>7.0e} {:>12.4e} {:>12.4e} {:>10.7} {:>10.2e}",
            s.eps, s.lambda_asymptotic, s.lambda_refined, s.alpha, s.residual
        );
    }
}
