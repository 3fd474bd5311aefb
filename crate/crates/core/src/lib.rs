//! Verification engine for spectral characterizations of minimal immersions.
//!
//! Given a chart `F: U ⊂ R^m → R^N` written in a small expression language,
//! the engine evaluates exact second-order jets of `F`, builds the induced
//! geometry (metric, Christoffel symbols, Laplace–Beltrami operator, mean
//! curvature) and checks whether `ΔF` satisfies the eigenvalue conditions
//! that characterize minimal immersions into spheres, cylinders
//! `S^n_c × R^k` and products of spheres `S^n × S^k`.
//!
//! Modules, bottom-up: [`jet`], [`expr`], [`geometry`], [`conditions`],
//! [`catalog`], [`report`].

pub mod catalog;
pub mod conditions;
pub mod expr;
pub mod geometry;
pub mod jet;
pub mod report;

pub use conditions::{
    check_cylinder, check_sphere, check_torus, recover_constants, run_check, Branch, CheckKind,
    ConditionResult, Tolerances, Verdict,
};
pub use expr::{parse, ImmersionSpec};
pub use geometry::{geometry_at, FrameSplit, GeometryAtPoint, Split};
pub use jet::Jet2;
