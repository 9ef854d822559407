// The reduced function along the x₁ axis for one spike, and for an antipodal pair of
// opposite signs.

use multispike::domain::Domain;
use multispike::reduced::{antipodal_profile, ftilde, SpikePattern};

pub struct Profiles {
    pub t: Vec<f64>,
    pub single: Vec<f64>,
    pub antipodal: Vec<Option<f64>>,
}

pub fn run_example() -> Profiles {
    let dom = Domain::unit_ball(4).expect("ball");
    let t: Vec<f64> = (1..20).map(|i| 0.05 * i as f64).collect();
    let one = SpikePattern::positive(1).unwrap();
    let single = t
        .iter()
        .map(|&s| ftilde(&[vec![s, 0.0, 0.0, 0.0]], &one, &dom).expect("F"))
        .collect();
    let pair = SpikePattern::new(vec![1, -1]).unwrap();
    let antipodal = antipodal_profile(&pair, &dom, &t);
    Profiles { t, single, antipodal }
}

#[allow(dead_code)]
fn main() {
    let p = run_example();
    println!("{:>5} {:>14} {:>14}", "t", "F(t e1)", "F(t e1, -t e1)");
    for i in 0..p.t.len() {
        let a = p.antipodal[i].map(|v| format!("{v:14.6e}")).unwrap_or_else(|| format!("{:>14}", "-"));
        println!("{:>5.2} {:>14.6e} {a}", p.t[i], p.single[i]);
    }
}
