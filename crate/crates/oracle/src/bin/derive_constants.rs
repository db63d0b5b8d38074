//! Derivation script for the regression constants pinned in the
//! acceptance suite. Run with:
//!
//! ```text
//! cargo run --release -p dayflow-oracle --bin derive-constants
//! ```
//!
//! Every value is the exact optimum of the minimax TV-defect program at
//! the stated radius, computed by the exact-rational simplex in this
//! crate, printed both as a rational and as the nearest 64-bit float.

use std::sync::Arc;
use std::time::Instant;

use dayflow::{shared, GroupKind, GroupSpec};
use dayflow_oracle::{tv_optimum, Rat};

fn report(label: &str, spec: &Arc<GroupSpec>, radius: u32) {
    let start = Instant::now();
    match tv_optimum(spec, radius) {
        Ok(v) => println!(
            "{label} r={radius}: exact {v} = {:.17e}  [{:?}]",
            rat_to_f64(&v),
            start.elapsed()
        ),
        Err(e) => println!("{label} r={radius}: ERROR {e}"),
    }
}

fn rat_to_f64(v: &Rat) -> f64 {
    use num::ToPrimitive;
    v.to_f64().expect("constant fits in f64")
}

fn main() {
    let z = shared(GroupKind::Zd { d: 1 }).expect("Z");
    for r in 0..=3 {
        report("Z", &z, r);
    }
    let c5 = shared(GroupKind::FiniteCyclic { n: 5 }).expect("C5");
    report("C5", &c5, 2);
    let s3 = shared(GroupKind::Symmetric { n: 3 }).expect("S3");
    report("S3", &s3, 3);
    let nat = shared(GroupKind::NatAdd).expect("NatAdd");
    report("NatAdd", &nat, 3);
    let lamp = shared(GroupKind::Lamplighter).expect("Lamplighter");
    report("Lamplighter", &lamp, 1);
    let f2 = shared(GroupKind::FreeGroup { rank: 2 }).expect("F2");
    report("F2", &f2, 1);
    report("F2", &f2, 2);
}
