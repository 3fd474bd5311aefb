//! Intrinsic and extrinsic quantities of a chart at one sample point.
//!
//! Everything is derived from the second-order jets of the components:
//! the induced metric `g = dFᵀ dF`, Christoffel symbols from the ambient
//! formula `Γ^k_ij = g^kl ⟨∂i∂jF, ∂lF⟩`, the Laplace–Beltrami operator
//! `Δh = g^ij (∂i∂j h − Γ^k_ij ∂k h)` (trace of the Hessian, so `ΔF = −mF`
//! on the unit sphere) and the mean curvature vector `H = ΔF / m`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::expr::{Expr, ExprError, ImmersionSpec};
use crate::jet::{ArithOp, Jet2, JetError};

/// Charts with `det g` at or below this are rejected as non-immersive.
pub const IMMERSION_DET_MIN: f64 = 1e-10;

/// Orthonormality tolerance for ambient frames.
pub const FRAME_ORTHONORMAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("not an immersion at {point:?}: det g = {det:e}")]
    NotAnImmersion { point: Vec<f64>, det: f64 },
    #[error("scalar field evaluation failed: {0}")]
    Jet(#[from] JetError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("frame must be {expected}x{expected}, got {rows}x{cols}")]
    Shape {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("frame is not orthonormal: max |EᵀE − I| = {deviation:e}")]
    NotOrthonormal { deviation: f64 },
    #[error("split {split:?} does not fit ambient dimension {ambient_dim}")]
    SplitMismatch { split: Split, ambient_dim: usize },
}

/// How the ambient space is divided between the factors of the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Split {
    /// `S^n × R^k ⊂ R^{n+k+1}`; the last `k` frame vectors span the flat factor.
    Cylinder { n: usize, k: usize },
    /// `S^n × S^k ⊂ R^{n+k+2}`; the first `n+1` frame vectors span the first factor.
    Torus { n: usize, k: usize },
}

impl Split {
    pub fn ambient_dim(&self) -> usize {
        match *self {
            Split::Cylinder { n, k } => n + k + 1,
            Split::Torus { n, k } => n + k + 2,
        }
    }

    fn is_valid(&self) -> bool {
        match *self {
            Split::Cylinder { n, k } | Split::Torus { n, k } => n >= 1 && k >= 1,
        }
    }
}

/// A constant orthonormal frame `E_1..E_N` of the ambient space plus a split.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSplit {
    basis: DMatrix<f64>,
    split: Split,
}

impl FrameSplit {
    /// `basis` holds the frame vectors as columns.
    pub fn new(basis: DMatrix<f64>, split: Split) -> Result<Self, FrameError> {
        let n = split.ambient_dim();
        if !split.is_valid() {
            return Err(FrameError::SplitMismatch {
                split,
                ambient_dim: basis.nrows(),
            });
        }
        if basis.nrows() != n || basis.ncols() != n {
            return Err(FrameError::Shape {
                expected: n,
                rows: basis.nrows(),
                cols: basis.ncols(),
            });
        }
        let deviation = (basis.transpose() * &basis - DMatrix::identity(n, n)).amax();
        if deviation > FRAME_ORTHONORMAL_TOL {
            return Err(FrameError::NotOrthonormal { deviation });
        }
        Ok(Self { basis, split })
    }

    pub fn standard(split: Split) -> Result<Self, FrameError> {
        let n = split.ambient_dim();
        Self::new(DMatrix::identity(n, n), split)
    }

    /// Standard basis with the split checked against a chart's ambient dimension.
    pub fn standard_for(split: Split, ambient_dim: usize) -> Result<Self, FrameError> {
        if split.ambient_dim() != ambient_dim {
            return Err(FrameError::SplitMismatch { split, ambient_dim });
        }
        Self::standard(split)
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.basis.column(i).into_owned()
    }

    /// `Q·E` for an ambient rotation `Q`.
    pub fn rotated(&self, q: &DMatrix<f64>) -> Result<Self, FrameError> {
        Self::new(q * &self.basis, self.split)
    }

    /// Zero-based frame indices of the flat factor (cylinder) or of the
    /// second sphere factor (torus).
    pub fn second_block(&self) -> std::ops::Range<usize> {
        match self.split {
            Split::Cylinder { n, k } => (n + 1)..(n + k + 1),
            Split::Torus { n, k } => (n + 1)..(n + k + 2),
        }
    }

    /// Zero-based frame indices of the (first) sphere factor.
    pub fn first_block(&self) -> std::ops::Range<usize> {
        match self.split {
            Split::Cylinder { n, .. } | Split::Torus { n, .. } => 0..(n + 1),
        }
    }

    /// `v − Σ_{j ∈ block} ⟨v, E_j⟩ E_j`.
    pub fn remove_block(&self, v: &DVector<f64>, block: std::ops::Range<usize>) -> DVector<f64> {
        let mut out = v.clone();
        for j in block {
            let e = self.basis.column(j);
            let c = e.dot(v);
            out.axpy(-c, &e, 1.0);
        }
        out
    }
}

/// Everything the spectral conditions need at one point of the chart.
#[derive(Debug, Clone)]
pub struct GeometryAtPoint {
    pub point: Vec<f64>,
    /// Component jets `F^a`.
    pub jets: Vec<Jet2>,
    pub position: DVector<f64>,
    /// `N×m`, column `i` is `∂_i F`.
    pub d_f: DMatrix<f64>,
    /// `∂_i∂_j F` stored at `i*m + j`.
    pub d2_f: Vec<DVector<f64>>,
    pub metric: DMatrix<f64>,
    pub metric_inv: DMatrix<f64>,
    pub sqrt_det_g: f64,
    /// `Γ^k_ij` stored at `(k*m + i)*m + j`.
    pub christoffel: Vec<f64>,
    pub laplace_f: DVector<f64>,
    pub mean_curvature: DVector<f64>,
}

impl GeometryAtPoint {
    pub fn domain_dim(&self) -> usize {
        self.point.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.position.len()
    }

    #[inline]
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        let m = self.domain_dim();
        self.christoffel[(k * m + i) * m + j]
    }

    pub fn second_partial(&self, i: usize, j: usize) -> &DVector<f64> {
        &self.d2_f[i * self.domain_dim() + j]
    }

    /// Laplace–Beltrami of a scalar given as a jet in the chart coordinates.
    pub fn laplacian(&self, h: &Jet2) -> f64 {
        let m = self.domain_dim();
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                let mut hess = h.hess(i, j);
                for k in 0..m {
                    hess -= self.gamma(k, i, j) * h.grad()[k];
                }
                acc += self.metric_inv[(i, j)] * hess;
            }
        }
        acc
    }

    /// Jet of the height function `⟨F, v⟩`.
    pub fn height_jet(&self, v: &DVector<f64>) -> Jet2 {
        let m = self.domain_dim();
        self.jets
            .iter()
            .zip(v.iter())
            .fold(Jet2::constant(0.0, m), |acc, (jet, &w)| {
                acc.linear_combination(1.0, jet, w)
                    .expect("component jets share the chart dimension")
            })
    }

    /// Jet of `‖F‖²`, built by jet products of the components.
    pub fn norm_squared_jet(&self) -> Jet2 {
        let m = self.domain_dim();
        self.jets.iter().fold(Jet2::constant(0.0, m), |acc, jet| {
            let sq = jet.arith(jet, ArithOp::Mul).expect("same dimension");
            acc.arith(&sq, ArithOp::Add).expect("same dimension")
        })
    }

    /// `α_ij = ∂i∂jF − Γ^k_ij ∂kF`, stored at `i*m + j`.
    pub fn second_fundamental_form(&self) -> Vec<DVector<f64>> {
        let m = self.domain_dim();
        let mut out = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                let mut a = self.second_partial(i, j).clone();
                for k in 0..m {
                    a.axpy(-self.gamma(k, i, j), &self.d_f.column(k), 1.0);
                }
                out.push(a);
            }
        }
        out
    }

    /// `‖T_v‖² = g^ab ⟨v, ∂aF⟩⟨v, ∂bF⟩`, the squared norm of the tangential
    /// part of an ambient vector.
    pub fn tangent_norm_squared(&self, v: &DVector<f64>) -> f64 {
        let c = self.d_f.transpose() * v;
        c.dot(&(&self.metric_inv * &c))
    }

    /// `‖T_i‖²` for every vector of the frame.
    pub fn tangent_projection_norms(&self, frame: &FrameSplit) -> Vec<f64> {
        self.tangent_projection_norms_in(frame.basis())
    }

    /// `‖T_i‖²` for the columns of an arbitrary basis matrix.
    pub fn tangent_projection_norms_in(&self, basis: &DMatrix<f64>) -> Vec<f64> {
        // rows of Eᵀ dF are ⟨E_i, ∂_a F⟩
        let c = basis.transpose() * &self.d_f;
        let cg = &c * &self.metric_inv;
        (0..basis.ncols())
            .map(|i| c.row(i).dot(&cg.row(i)))
            .collect()
    }
}

/// Computes the induced geometry of `spec` at `point`.
pub fn geometry_at(spec: &ImmersionSpec, point: &[f64]) -> Result<GeometryAtPoint, GeometryError> {
    let jets = spec.eval_chart(point)?;
    geometry_from_jets(point, jets)
}

pub fn geometry_from_jets(
    point: &[f64],
    jets: Vec<Jet2>,
) -> Result<GeometryAtPoint, GeometryError> {
    let m = point.len();
    let n = jets.len();
    let position = DVector::from_iterator(n, jets.iter().map(Jet2::value));
    let d_f = DMatrix::from_fn(n, m, |a, i| jets[a].grad()[i]);
    let d2_f: Vec<DVector<f64>> = (0..m * m)
        .map(|ij| DVector::from_iterator(n, jets.iter().map(|jet| jet.hess_flat()[ij])))
        .collect();

    let metric = d_f.transpose() * &d_f;
    let lu = metric.clone().lu();
    let det = lu.determinant();
    if det.is_nan() || det <= IMMERSION_DET_MIN {
        return Err(GeometryError::NotAnImmersion {
            point: point.to_vec(),
            det,
        });
    }
    let metric_inv = lu
        .try_inverse()
        .ok_or_else(|| GeometryError::NotAnImmersion {
            point: point.to_vec(),
            det,
        })?;

    // ⟨∂i∂jF, ∂lF⟩ then raise l
    let mut christoffel = vec![0.0; m * m * m];
    for i in 0..m {
        for j in i..m {
            let lowered = d_f.transpose() * &d2_f[i * m + j];
            let raised = &metric_inv * lowered;
            for k in 0..m {
                christoffel[(k * m + i) * m + j] = raised[k];
                christoffel[(k * m + j) * m + i] = raised[k];
            }
        }
    }

    let mut laplace_f = DVector::zeros(n);
    for i in 0..m {
        for j in 0..m {
            let mut hess = d2_f[i * m + j].clone();
            for k in 0..m {
                hess.axpy(-christoffel[(k * m + i) * m + j], &d_f.column(k), 1.0);
            }
            laplace_f.axpy(metric_inv[(i, j)], &hess, 1.0);
        }
    }
    let mean_curvature = &laplace_f / m as f64;

    Ok(GeometryAtPoint {
        point: point.to_vec(),
        jets,
        position,
        d_f,
        d2_f,
        metric,
        metric_inv,
        sqrt_det_g: det.sqrt(),
        christoffel,
        laplace_f,
        mean_curvature,
    })
}

/// Laplace–Beltrami of a scalar field (which may reference `F1..FN`).
pub fn laplace_beltrami_scalar(
    spec: &ImmersionSpec,
    field: &Expr,
    point: &[f64],
) -> Result<f64, GeometryError> {
    let geo = geometry_at(spec, point)?;
    let h = spec.eval_scalar(field, point)?;
    Ok(geo.laplacian(&h))
}
