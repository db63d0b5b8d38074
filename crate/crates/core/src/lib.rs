//! Finitely supported means on discrete groups and semigroups.
//!
//! The crate builds one pipeline in small pieces:
//!
//! * [`group`] — finitely generated groups/semigroups with exact integer
//!   normal forms, Cayley balls, and word metrics;
//! * [`measure`] — finitely supported signed measures (molecular measures),
//!   convolution by group elements, total-variation norm;
//! * [`testfn`] — bounded test functions, translation operators,
//!   pseudometrics from function families, and translation-defect
//!   functionals (weak and bounded-Lipschitz);
//! * [`lp`] — an embedded dense simplex solver with a deterministic pivot
//!   rule, used by every optimization in the crate;
//! * [`solver`] — uniform ball/box means, minimal-defect means by linear
//!   programming, defect profiles over radii, and Day-style convexification;
//! * [`action`] — affine actions of a group on `R^n`, orbit maps, weighted
//!   orbit averages, approximate-fixed-point traces, and the canonical
//!   simplex action of a finite group;
//! * [`cli`] — the `dayflow` command-line front end (defect profiles,
//!   solves, fixed-point runs, witnesses, self-tests).
//!
//! The intended reading: a mean with small translation defect, pushed
//! through the orbit map of an affine action, lands on an approximate fixed
//! point — and every step of that chain is checkable numerics, not prose.

pub mod action;
pub mod cli;
pub mod error;
pub mod group;
pub mod lp;
pub mod measure;
pub mod solver;
pub mod testfn;

pub use action::{AffineAction, AffineMap, AfpTrace, Domain};
pub use error::{Error, Result};
pub use group::{shared, Distance, Element, GroupKind, GroupSpec};
pub use measure::MolecularMeasure;
pub use solver::{
    day_convexify, defect_profile, folner_box, folner_uniform, solve_invariant_mean,
    DayReport, DefectKind, DefectReport, LpStatus, ProfileRow, SolveConfig,
};
pub use testfn::{LipschitzBallSpec, MetricSource, TestFunction};
