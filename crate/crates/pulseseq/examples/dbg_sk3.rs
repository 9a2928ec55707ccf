use pulseseq::twoqubit::{b2j, b2wj, infidelity4, u_zz};
use std::f64::consts::PI;

fn main() {
    let target = u_zz(PI);
    for e in [1e-4, 1e-3, 1e-2, 1e-1] {
        println!(
            "e={e:.0e}: b2j {:.3e}  b2wj(j) {:.3e}  b2wj(a) {:.3e}",
            infidelity4(&target, &b2j(PI, e).unwrap()),
            infidelity4(&target, &b2wj(PI, e, 0.0).unwrap()),
            infidelity4(&target, &b2wj(PI, 0.0, e).unwrap()),
        );
    }
}
