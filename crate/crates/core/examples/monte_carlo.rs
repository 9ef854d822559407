// Importance-sampled `∫_B δ^{p+1}` for an off-center spike: the estimate, its standard error
// and agreement with the axisymmetric quadrature, for a few seeds.

use multispike::bubble::delta_profile;
use multispike::domain::Domain;
use multispike::quadrature::mc::SpikeProposal;
use multispike::quadrature::axisym::{integrate_axisym, Focus};
use multispike::quadrature::{integrate_mc, AxialFrame, AxisymRegion};
use multispike::{BubbleParams, MCPlan, QuadOptions};

pub struct Estimate {
    pub seed: u64,
    pub value: f64,
    pub stderr: f64,
}

pub fn run_example() -> (f64, Vec<Estimate>) {
    let dom = Domain::unit_ball(4).expect("ball");
    let b = BubbleParams::new(vec![0.2, 0.3, 0.0, 0.0], 15.0).unwrap();
    let dim = b.dim();
    let p = dim.p();
    let f = |y: &[f64]| delta_profile(dim, b.lambda, b.dist2(y)).powf(p + 1.0);
    let frame = AxialFrame::through(&[0.0; 4], &[b.a.as_slice()], 1e-12, 1.0).unwrap();
    let focus = Focus { t: frame.t(&b.a), scale: 1.0 / b.lambda };
    let region = AxisymRegion::Ball { center_t: 0.0, radius: 1.0 };
    let opts = QuadOptions { rel_tol: 1e-11, ..Default::default() };
    let reference = integrate_axisym(dim, &frame, region, &[focus], f, &opts).expect("axisym").value;
    let spikes = [SpikeProposal { a: b.a.clone(), lambda: b.lambda }];
    let est = [1u64, 2, 3]
        .iter()
        .map(|&seed| {
            let plan = MCPlan::default().with_seed(seed).with_samples(400_000);
            let r = integrate_mc(&dom, &spikes, f, &plan).expect("mc");
            Estimate { seed, value: r.value, stderr: r.stderr_or_bound }
        })
        .collect();
    (reference, est)
}

#[allow(dead_code)]
fn main() {
    let (reference, est) = run_example();
    println!("axisymmetric reference {reference:.10}");
    for e in est {
        let z = (e.value - reference) / e.stderr;
        println!("seed {:>2}: {:.6} ± {:.1e}  (z = {z:+.2})", e.seed, e.value, e.stderr);
    }
}
