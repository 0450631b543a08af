//! Times kernel setup and one value+gradient evaluation on the standard grid.

use std::sync::Arc;
use std::time::Instant;

use fracpq::domain::{build_domain, cone_function, Shape};
use fracpq::seminorm::{FracParams, PairDiffs, SeminormKernel};

fn main() {
    let h = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(1.0 / 32.0);
    let t = Instant::now();
    let dom = Arc::new(build_domain(Shape::Disk { radius: 0.5 }, h, None).unwrap());
    println!(
        "domain: {} interior of {} nodes in {:?}",
        dom.interior_count(),
        dom.node_count(),
        t.elapsed()
    );
    let fp = FracParams::for_domain(0.75, 40.0, &dom).unwrap();
    let t = Instant::now();
    let k = SeminormKernel::new(&dom, fp).unwrap();
    println!("kernel setup {:?}", t.elapsed());
    let u = cone_function(&dom, dom.deepest[0]).unwrap();
    let mut g = vec![0.0; dom.interior_count()];
    let t = Instant::now();
    let reps = 10;
    let mut la = 0.0;
    for _ in 0..reps {
        let d = PairDiffs::new(u.values());
        la = k.log_power_and_grad(u.values(), &d, &mut g);
    }
    println!("value+grad: {:?} per call, ln a = {la}", t.elapsed() / reps);
}
