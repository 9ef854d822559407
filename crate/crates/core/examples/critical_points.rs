// Critical points of the reduced function for one spike and for a sign-changing pair.

use multispike::domain::Domain;
use multispike::reduced::{find_critical_points, CriticalPoint, SearchConfig, SpikePattern};

pub fn run_example() -> Vec<(Vec<i8>, Vec<CriticalPoint>)> {
    let dom = Domain::unit_ball(4).expect("ball");
    [vec![1], vec![1, -1]]
        .into_iter()
        .map(|g| {
            let pattern = SpikePattern::new(g.clone()).unwrap();
            let cps = find_critical_points(&pattern, &dom, &SearchConfig::default()).expect("search");
            (g, cps)
        })
        .collect()
}

#[allow(dead_code)]
fn main() {
    for (g, cps) in run_example() {
        println!("gamma = {g:?}: {} critical point(s)", cps.len());
        for cp in &cps {
            let x1: Vec<String> = cp.x.iter().map(|x| format!("{:.6}", x[0])).collect();
            println!(
                "  x1 = [{}]  F = {:.6e}  |grad| = {:.1e}  certified = {}",
                x1.join(", "),
                cp.ftilde,
                cp.grad_norm,
                cp.certified()
            );
        }
    }
}
