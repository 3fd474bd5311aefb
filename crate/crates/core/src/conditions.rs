//! Spectral characterizations of minimal immersions.
//!
//! * sphere: `ΔF = −mcF` with `c > 0` ([`check_sphere`]);
//! * cylinder `S^n_c × R^k`: `ΔF = −c(m − Σ_flat ‖T_j‖²) P` with
//!   `P = F − Σ_flat ⟨F,E_j⟩E_j` and `c = 1/⟨P,P⟩` ([`check_cylinder`]);
//! * product `S^n × S^k` inside the sphere of radius √2:
//!   `ΔF = −(m − S₂)N₁ − (m − S₁)N₂` with `S₁, S₂` the block sums of
//!   `‖T_i‖²` ([`check_torus`]).
//!
//! Each checker evaluates the geometry at every sample (in parallel),
//! recovers the constants the condition predicts, and reduces residuals in
//! sample order so results do not depend on the evaluation schedule.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::ImmersionSpec;
use crate::geometry::{geometry_at, FrameError, FrameSplit, GeometryAtPoint, GeometryError, Split};

/// Squared radius of the ambient sphere containing `S^n × S^k` (unit factors).
pub const PRODUCT_AMBIENT_NORM2: f64 = 2.0;

/// Below this `‖F‖` the sphere fit is degenerate.
pub const MIN_POSITION_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Bound on the normalized residual of the condition.
    pub check: f64,
    /// Bound on the sample standard deviation of recovered constants.
    pub constant: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            check: 1e-8,
            constant: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CheckKind {
    Sphere,
    Cylinder,
    Torus,
}

impl std::fmt::Display for CheckKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CheckKind::Sphere => "sphere",
            CheckKind::Cylinder => "cylinder",
            CheckKind::Torus => "torus",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Satisfied,
    Violated,
    Degenerate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

/// Which alternative of the product-of-spheres dichotomy applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// `S₁ = S₂` everywhere: minimal in the sphere of radius √2.
    SphereMinimal,
    /// `S₁ ≠ S₂` somewhere: minimal in the product.
    ProductMinimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub mean: f64,
    pub spread: f64,
    pub min: f64,
    pub max: f64,
}

impl SampleStats {
    pub fn of(values: &[f64]) -> Self {
        let est = recover_constants(values, 0.0);
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        Self {
            mean: est.mean,
            spread: est.spread,
            min,
            max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub kind: CheckKind,
    pub residual_max: f64,
    pub residual_rms: f64,
    /// Recovered constants (`c`, `eigen`, `r2`, `s2`).
    pub recovered: BTreeMap<String, f64>,
    /// Sample spread of every constant the condition requires to be constant.
    pub spread: BTreeMap<String, f64>,
    /// Per-sample quantities that are reported but not required constant.
    pub observed: BTreeMap<String, SampleStats>,
    /// Maximum residual of each supporting identity over the samples.
    pub identities: BTreeMap<String, f64>,
    pub branch: Option<Branch>,
    pub verdict: Verdict,
    pub samples_used: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("at least 2 samples are required, got {0}")]
    TooFewSamples(usize),
    #[error("{kind} check needs a {kind} split, got {split:?}")]
    WrongSplit { kind: CheckKind, split: Split },
    #[error("frame has dimension {frame}, chart has ambient dimension {chart}")]
    FrameDimension { frame: usize, chart: usize },
    #[error("{0} check needs a frame split")]
    MissingFrame(CheckKind),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantEstimate {
    pub mean: f64,
    /// Sample standard deviation (zero for a single value).
    pub spread: f64,
    pub is_constant: bool,
}

/// Mean and sample standard deviation (Welford, in input order).
pub fn recover_constants(values: &[f64], tol_const: f64) -> ConstantEstimate {
    assert!(
        !values.is_empty(),
        "recover_constants needs at least one value"
    );
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, &v) in values.iter().enumerate() {
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let spread = if values.len() > 1 {
        (m2 / (values.len() - 1) as f64).max(0.0).sqrt()
    } else {
        0.0
    };
    ConstantEstimate {
        mean,
        spread,
        is_constant: spread <= tol_const,
    }
}

fn evaluate(
    spec: &ImmersionSpec,
    samples: &[Vec<f64>],
) -> Result<Vec<GeometryAtPoint>, CheckError> {
    if samples.len() < 2 {
        return Err(CheckError::TooFewSamples(samples.len()));
    }
    let results: Vec<Result<GeometryAtPoint, GeometryError>> =
        samples.par_iter().map(|p| geometry_at(spec, p)).collect();
    // first failure in sample order
    results
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(CheckError::from)
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn rms(values: &[f64]) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

/// Identities that hold for every immersion, checked at one sample.
struct Common {
    laplacian_trace: f64,
    mean_curvature_normal: f64,
    norm_laplacian: f64,
    norm_laplacian_value: f64,
    frame_completeness: f64,
}

fn common_identities(geo: &GeometryAtPoint, basis: &DMatrix<f64>) -> Common {
    let m = geo.domain_dim() as f64;
    let laplacian_trace = (&geo.laplace_f - &geo.mean_curvature * m).amax();
    let h_norm = geo.mean_curvature.norm();
    let mean_curvature_normal = if h_norm == 0.0 {
        0.0
    } else {
        max_of(
            geo.d_f
                .column_iter()
                .map(|col| geo.mean_curvature.dot(&col).abs() / (h_norm * col.norm())),
        )
    };
    let lap_norm2 = geo.laplacian(&geo.norm_squared_jet());
    let predicted = 2.0 * (geo.laplace_f.dot(&geo.position) + m);
    let norm_laplacian = (lap_norm2 - predicted).abs() / lap_norm2.abs().max(1.0);
    let t: f64 = geo.tangent_projection_norms_in(basis).iter().sum();
    Common {
        laplacian_trace,
        mean_curvature_normal,
        norm_laplacian,
        norm_laplacian_value: lap_norm2,
        frame_completeness: (t - m).abs(),
    }
}

fn insert_common(identities: &mut BTreeMap<String, f64>, common: &[Common]) {
    identities.insert(
        "laplacian_equals_m_mean_curvature".into(),
        max_of(common.iter().map(|c| c.laplacian_trace)),
    );
    identities.insert(
        "mean_curvature_normal".into(),
        max_of(common.iter().map(|c| c.mean_curvature_normal)),
    );
    identities.insert(
        "norm_squared_laplacian".into(),
        max_of(common.iter().map(|c| c.norm_laplacian)),
    );
    identities.insert(
        "tangent_projections_sum_to_m".into(),
        max_of(common.iter().map(|c| c.frame_completeness)),
    );
}

fn check_frame(spec: &ImmersionSpec, frame: &FrameSplit) -> Result<(), CheckError> {
    if frame.ambient_dim() != spec.ambient_dim {
        return Err(CheckError::FrameDimension {
            frame: frame.ambient_dim(),
            chart: spec.ambient_dim,
        });
    }
    Ok(())
}

/// Takahashi condition `ΔF = −mcF`, `c > 0`.
pub fn check_sphere(
    spec: &ImmersionSpec,
    samples: &[Vec<f64>],
    tol: Tolerances,
) -> Result<ConditionResult, CheckError> {
    let geos = evaluate(spec, samples)?;
    let m = spec.domain_dim as f64;
    let standard = DMatrix::identity(spec.ambient_dim, spec.ambient_dim);

    let mut notes = Vec::new();
    let mut identities = BTreeMap::new();
    let common: Vec<Common> = geos
        .iter()
        .map(|g| common_identities(g, &standard))
        .collect();
    insert_common(&mut identities, &common);

    let degenerate = geos.iter().any(|g| g.position.norm() < MIN_POSITION_NORM);
    let num: f64 = geos.iter().map(|g| g.laplace_f.dot(&g.position)).sum();
    let den: f64 = geos.iter().map(|g| g.position.norm_squared()).sum();
    // `+ 0.0` turns a -0 fit into 0
    let c = if den > 0.0 {
        -num / (m * den) + 0.0
    } else {
        0.0
    };
    let ratios: Vec<f64> = geos
        .iter()
        .map(|g| {
            let f2 = g.position.norm_squared();
            if f2 > 0.0 {
                -g.laplace_f.dot(&g.position) / (m * f2)
            } else {
                0.0
            }
        })
        .collect();
    let c_est = recover_constants(&ratios, tol.constant);
    let residuals: Vec<f64> = geos
        .iter()
        .map(|g| (&g.laplace_f + &g.position * (m * c)).norm() / (m * g.position.norm().max(1.0)))
        .collect();
    let residual_max = max_of(residuals.iter().copied());

    let verdict = if degenerate {
        notes.push("position vanishes at a sample; the fit is degenerate".into());
        Verdict::Degenerate
    } else if c.abs() <= tol.constant {
        notes.push("recovered c = 0; the condition requires c != 0".into());
        Verdict::Violated
    } else if residual_max <= tol.check && c_est.is_constant && c > 0.0 {
        Verdict::Satisfied
    } else {
        if c < 0.0 {
            notes.push("recovered c < 0".into());
        }
        Verdict::Violated
    };

    let mut observed = BTreeMap::new();
    let norms: Vec<f64> = geos.iter().map(|g| g.position.norm_squared()).collect();
    observed.insert("position_norm2".into(), SampleStats::of(&norms));

    Ok(ConditionResult {
        kind: CheckKind::Sphere,
        residual_max,
        residual_rms: rms(&residuals),
        recovered: BTreeMap::from([("c".into(), c), ("eigen".into(), m * c)]),
        spread: BTreeMap::from([("c".into(), c_est.spread)]),
        observed,
        identities,
        branch: None,
        verdict,
        samples_used: geos.len(),
        notes,
    })
}

/// Minimality into `S^n_c × R^k` for the frame's cylinder split.
pub fn check_cylinder(
    spec: &ImmersionSpec,
    frame: &FrameSplit,
    samples: &[Vec<f64>],
    tol: Tolerances,
) -> Result<ConditionResult, CheckError> {
    let Split::Cylinder { .. } = frame.split() else {
        return Err(CheckError::WrongSplit {
            kind: CheckKind::Cylinder,
            split: frame.split(),
        });
    };
    check_frame(spec, frame)?;
    let geos = evaluate(spec, samples)?;
    let m = spec.domain_dim as f64;
    let flat = frame.second_block();

    let mut identities = BTreeMap::new();
    let common: Vec<Common> = geos
        .iter()
        .map(|g| common_identities(g, frame.basis()))
        .collect();
    insert_common(&mut identities, &common);

    let normals: Vec<DVector<f64>> = geos
        .iter()
        .map(|g| frame.remove_block(&g.position, flat.clone()))
        .collect();
    let flat_sums: Vec<f64> = geos
        .iter()
        .map(|g| {
            let t = g.tangent_projection_norms(frame);
            t[flat.clone()].iter().sum()
        })
        .collect();
    let p2: Vec<f64> = normals.iter().map(|p| p.norm_squared()).collect();
    let r2 = recover_constants(&p2, tol.constant);
    let c = if r2.mean > 0.0 { 1.0 / r2.mean } else { 0.0 };

    let residuals: Vec<f64> = geos
        .iter()
        .zip(&normals)
        .zip(&flat_sums)
        .map(|((g, p), &s)| {
            (&g.laplace_f + p * (c * (m - s))).norm() / (m * g.position.norm().max(1.0))
        })
        .collect();
    let residual_max = max_of(residuals.iter().copied());

    identities.insert(
        "norm_squared_laplacian_flat".into(),
        max_of(common.iter().zip(&flat_sums).map(|(cm, &s)| {
            (cm.norm_laplacian_value - 2.0 * s).abs() / cm.norm_laplacian_value.abs().max(1.0)
        })),
    );
    identities.insert(
        "normal_part_orthogonal_to_flat".into(),
        max_of(
            normals
                .iter()
                .flat_map(|p| flat.clone().map(move |j| (j, p)))
                .map(|(j, p)| frame.vector(j).dot(p).abs()),
        ),
    );
    identities.insert(
        "mean_curvature_along_normal_part".into(),
        max_of(geos.iter().zip(&normals).map(|(g, p)| {
            let h = &g.mean_curvature;
            let pn2 = p.norm_squared();
            let perp = if pn2 > 0.0 {
                h - p * (h.dot(p) / pn2)
            } else {
                h.clone()
            };
            perp.norm() / h.norm().max(1.0)
        })),
    );

    let mut notes = Vec::new();
    let verdict = if r2.mean <= MIN_POSITION_NORM * MIN_POSITION_NORM {
        notes.push("normal part P vanishes; image meets the axis of the cylinder".into());
        Verdict::Degenerate
    } else if !r2.is_constant {
        notes.push("<P,P> is not constant; the image lies in no cylinder of this split".into());
        Verdict::Degenerate
    } else if residual_max <= tol.check {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    };

    let mut observed = BTreeMap::new();
    observed.insert("flat_t2".into(), SampleStats::of(&flat_sums));

    Ok(ConditionResult {
        kind: CheckKind::Cylinder,
        residual_max,
        residual_rms: rms(&residuals),
        recovered: BTreeMap::from([("c".into(), c), ("r2".into(), r2.mean)]),
        spread: BTreeMap::from([("r2".into(), r2.spread)]),
        observed,
        identities,
        branch: None,
        verdict,
        samples_used: geos.len(),
        notes,
    })
}

/// Minimality into `S^n × S^k ⊂ S^{n+k+1}(√2)` for the frame's torus split.
pub fn check_torus(
    spec: &ImmersionSpec,
    frame: &FrameSplit,
    samples: &[Vec<f64>],
    tol: Tolerances,
) -> Result<ConditionResult, CheckError> {
    let Split::Torus { .. } = frame.split() else {
        return Err(CheckError::WrongSplit {
            kind: CheckKind::Torus,
            split: frame.split(),
        });
    };
    check_frame(spec, frame)?;
    let geos = evaluate(spec, samples)?;
    let m = spec.domain_dim as f64;
    let (first, second) = (frame.first_block(), frame.second_block());

    let mut identities = BTreeMap::new();
    let common: Vec<Common> = geos
        .iter()
        .map(|g| common_identities(g, frame.basis()))
        .collect();
    insert_common(&mut identities, &common);

    let ambient = max_of(
        geos.iter()
            .map(|g| (g.position.norm_squared() - PRODUCT_AMBIENT_NORM2).abs()),
    );
    identities.insert("ambient_sphere".into(), ambient);

    let n1: Vec<DVector<f64>> = geos
        .iter()
        .map(|g| frame.remove_block(&g.position, second.clone()))
        .collect();
    let n2: Vec<DVector<f64>> = geos
        .iter()
        .map(|g| frame.remove_block(&g.position, first.clone()))
        .collect();
    let (s1, s2): (Vec<f64>, Vec<f64>) = geos
        .iter()
        .map(|g| {
            let t = g.tangent_projection_norms(frame);
            (
                t[first.clone()].iter().sum::<f64>(),
                t[second.clone()].iter().sum::<f64>(),
            )
        })
        .unzip();

    let balanced = s1.iter().zip(&s2).all(|(a, b)| (a - b).abs() <= tol.check);
    let branch = if balanced {
        Branch::SphereMinimal
    } else {
        Branch::ProductMinimal
    };

    let n1_sq: Vec<f64> = n1.iter().map(|v| v.norm_squared()).collect();
    let n2_sq: Vec<f64> = n2.iter().map(|v| v.norm_squared()).collect();
    let r2 = recover_constants(&n1_sq, tol.constant);
    let s2_est = recover_constants(&n2_sq, tol.constant);

    let residuals: Vec<f64> = match branch {
        Branch::SphereMinimal => geos
            .iter()
            .map(|g| (&g.laplace_f + &g.position * (m / 2.0)).norm() / m)
            .collect(),
        Branch::ProductMinimal => geos
            .iter()
            .enumerate()
            .map(|(i, g)| (&g.laplace_f + &n1[i] * (m - s2[i]) + &n2[i] * (m - s1[i])).norm() / m)
            .collect(),
    };
    let residual_max = max_of(residuals.iter().copied());

    let mut recovered = BTreeMap::from([("r2".into(), r2.mean), ("s2".into(), s2_est.mean)]);
    let mut spread = BTreeMap::new();
    let mut observed = BTreeMap::new();
    observed.insert("first_block_t2".into(), SampleStats::of(&s1));
    observed.insert("second_block_t2".into(), SampleStats::of(&s2));
    let mut notes = Vec::new();

    let verdict = if ambient > tol.check {
        notes.push(format!(
            "|F|^2 deviates from {PRODUCT_AMBIENT_NORM2} by up to {ambient:e}; not in the ambient sphere"
        ));
        Verdict::Degenerate
    } else {
        match branch {
            Branch::SphereMinimal => {
                observed.insert("n1_norm2".into(), SampleStats::of(&n1_sq));
                observed.insert("n2_norm2".into(), SampleStats::of(&n2_sq));
                let num: f64 = geos.iter().map(|g| g.laplace_f.dot(&g.position)).sum();
                let den: f64 = geos.iter().map(|g| g.position.norm_squared()).sum();
                recovered.insert("c".into(), -num / (m * den));
                let satisfied = residual_max <= tol.check;
                if satisfied
                    && r2.is_constant
                    && s2_est.is_constant
                    && (r2.mean - 1.0).abs() <= tol.constant
                    && (s2_est.mean - 1.0).abs() <= tol.constant
                {
                    notes.push("product membership |N1| = |N2| = 1 also holds".into());
                }
                if satisfied {
                    Verdict::Satisfied
                } else {
                    Verdict::Violated
                }
            }
            Branch::ProductMinimal => {
                spread.insert("r2".into(), r2.spread);
                spread.insert("s2".into(), s2_est.spread);
                if !(r2.is_constant && s2_est.is_constant) {
                    notes.push("<N1,N1> or <N2,N2> is not constant".into());
                    Verdict::Degenerate
                } else if residual_max <= tol.check
                    && (r2.mean - 1.0).abs() <= tol.constant
                    && (s2_est.mean - 1.0).abs() <= tol.constant
                    && (r2.mean + s2_est.mean - PRODUCT_AMBIENT_NORM2).abs() <= tol.constant
                {
                    Verdict::Satisfied
                } else {
                    Verdict::Violated
                }
            }
        }
    };

    Ok(ConditionResult {
        kind: CheckKind::Torus,
        residual_max,
        residual_rms: rms(&residuals),
        recovered,
        spread,
        observed,
        identities,
        branch: Some(branch),
        verdict,
        samples_used: geos.len(),
        notes,
    })
}

/// Dispatches to the checker for `kind`; cylinder and torus checks need a frame.
pub fn run_check(
    kind: CheckKind,
    spec: &ImmersionSpec,
    frame: Option<&FrameSplit>,
    samples: &[Vec<f64>],
    tol: Tolerances,
) -> Result<ConditionResult, CheckError> {
    match (kind, frame) {
        (CheckKind::Sphere, _) => check_sphere(spec, samples, tol),
        (CheckKind::Cylinder, Some(f)) => check_cylinder(spec, f, samples, tol),
        (CheckKind::Torus, Some(f)) => check_torus(spec, f, samples, tol),
        (kind, None) => Err(CheckError::MissingFrame(kind)),
    }
}
