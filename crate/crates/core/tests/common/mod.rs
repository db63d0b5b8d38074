//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use std::sync::Arc;

use dayflow::{shared, AffineAction, AffineMap, Domain, Element, GroupKind};

pub fn ints(v: &[i64]) -> Element {
    Element::Ints(v.to_vec())
}

/// Rotation of the plane by `angle` about `center`, acting on the
/// integers: `k ▷ x` rotates `x` by `k·angle`. The domain is a ball
/// around the center wide enough for every orbit used in tests.
pub fn rotation_action(angle: f64, center: [f64; 2], domain_radius: f64) -> AffineAction {
    let z = shared(GroupKind::Zd { d: 1 }).expect("integers");
    let build = |theta: f64| -> AffineMap {
        let (s, c) = theta.sin_cos();
        let m = [[c, -s], [s, c]];
        let offset = [
            center[0] - m[0][0] * center[0] - m[0][1] * center[1],
            center[1] - m[1][0] * center[0] - m[1][1] * center[1],
        ];
        AffineMap::new(vec![m[0].to_vec(), m[1].to_vec()], offset.to_vec())
            .expect("rotation map")
    };
    AffineAction::new(
        z,
        [(ints(&[1]), build(angle)), (ints(&[-1]), build(-angle))],
        Domain::Ball { center: center.to_vec(), radius: domain_radius },
    )
    .expect("rotation action")
}

/// The group specs exercised by the cross-kind identity suites.
pub fn example_kinds() -> Vec<Arc<dayflow::GroupSpec>> {
    [
        GroupKind::Zd { d: 1 },
        GroupKind::Zd { d: 2 },
        GroupKind::FiniteCyclic { n: 7 },
        GroupKind::Symmetric { n: 4 },
        GroupKind::FreeGroup { rank: 2 },
        GroupKind::Heisenberg,
        GroupKind::Lamplighter,
        GroupKind::NatAdd,
        GroupKind::DirectProduct {
            factors: vec![GroupKind::Zd { d: 1 }, GroupKind::FiniteCyclic { n: 4 }],
        },
    ]
    .into_iter()
    .map(|k| shared(k).expect("example kind"))
    .collect()
}
