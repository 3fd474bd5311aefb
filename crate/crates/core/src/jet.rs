//! Second-order forward-mode jets.
//!
//! A [`Jet2`] carries the value, gradient and Hessian of a scalar with respect
//! to the `m` chart coordinates. All arithmetic propagates derivatives exactly
//! through the product, quotient and chain rules, so downstream geometry has
//! no truncation error.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("coordinate index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("jet dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("{func} is undefined at {value}")]
    Domain { func: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elementary {
    Sin,
    Cos,
    Exp,
    Sqrt,
    /// `x^p` for a fixed real exponent.
    PowConst(f64),
}

/// Value, gradient and (dense, symmetric) Hessian of a scalar quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    value: f64,
    grad: Vec<f64>,
    // row-major m×m, always exactly symmetric
    hess: Vec<f64>,
}

impl Jet2 {
    pub fn constant(value: f64, dim: usize) -> Self {
        Self {
            value,
            grad: vec![0.0; dim],
            hess: vec![0.0; dim * dim],
        }
    }

    /// Jet of the coordinate function `x_index` at `point`.
    pub fn seed(point: &[f64], index: usize) -> Result<Self, JetError> {
        let dim = point.len();
        if index >= dim {
            return Err(JetError::IndexOutOfRange { index, dim });
        }
        let mut jet = Self::constant(point[index], dim);
        jet.grad[index] = 1.0;
        Ok(jet)
    }

    /// Builds a jet from raw parts, symmetrizing the Hessian.
    pub fn from_parts(value: f64, grad: Vec<f64>, hess: Vec<f64>) -> Self {
        let dim = grad.len();
        assert_eq!(hess.len(), dim * dim, "hessian must be {dim}x{dim}");
        let mut jet = Self { value, grad, hess };
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (jet.hess[i * dim + j] + jet.hess[j * dim + i]);
                jet.hess[i * dim + j] = avg;
                jet.hess[j * dim + i] = avg;
            }
        }
        jet
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.value
    }

    #[inline]
    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    #[inline]
    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    /// Row-major Hessian entries.
    pub fn hess_flat(&self) -> &[f64] {
        &self.hess
    }

    fn check_dim(&self, other: &Self) -> Result<(), JetError> {
        if self.dim() != other.dim() {
            return Err(JetError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }

    /// Applies a scalar function `f` with `f(v) = f0`, `f'(v) = f1`, `f''(v) = f2`.
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let dim = self.dim();
        let grad = self.grad.iter().map(|g| f1 * g).collect();
        let mut hess = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let h = f2 * self.grad[i] * self.grad[j] + f1 * self.hess[i * dim + j];
                hess[i * dim + j] = h;
                hess[j * dim + i] = h;
            }
        }
        Self {
            value: f0,
            grad,
            hess,
        }
    }

    /// `alpha * self + beta * other`, computed componentwise.
    pub fn linear_combination(
        &self,
        alpha: f64,
        other: &Self,
        beta: f64,
    ) -> Result<Self, JetError> {
        self.check_dim(other)?;
        Ok(Self {
            value: alpha * self.value + beta * other.value,
            grad: zip_map(&self.grad, &other.grad, |a, b| alpha * a + beta * b),
            hess: zip_map(&self.hess, &other.hess, |a, b| alpha * a + beta * b),
        })
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            value: alpha * self.value,
            grad: self.grad.iter().map(|g| alpha * g).collect(),
            hess: self.hess.iter().map(|h| alpha * h).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn arith(&self, other: &Self, op: ArithOp) -> Result<Self, JetError> {
        self.check_dim(other)?;
        match op {
            ArithOp::Add => Ok(Self {
                value: self.value + other.value,
                grad: zip_map(&self.grad, &other.grad, |a, b| a + b),
                hess: zip_map(&self.hess, &other.hess, |a, b| a + b),
            }),
            ArithOp::Sub => Ok(Self {
                value: self.value - other.value,
                grad: zip_map(&self.grad, &other.grad, |a, b| a - b),
                hess: zip_map(&self.hess, &other.hess, |a, b| a - b),
            }),
            ArithOp::Mul => Ok(self.mul_unchecked(other)),
            ArithOp::Div => {
                if other.value == 0.0 {
                    return Err(JetError::DivisionByZero);
                }
                let v = other.value;
                let recip = other.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
                Ok(self.mul_unchecked(&recip))
            }
        }
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let dim = self.dim();
        let (a, b) = (self.value, other.value);
        let grad = zip_map(&self.grad, &other.grad, |ga, gb| a * gb + b * ga);
        let mut hess = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let k = i * dim + j;
                let h = a * other.hess[k]
                    + b * self.hess[k]
                    + self.grad[i] * other.grad[j]
                    + other.grad[i] * self.grad[j];
                hess[k] = h;
                hess[j * dim + i] = h;
            }
        }
        Self {
            value: a * b,
            grad,
            hess,
        }
    }

    pub fn elementary(&self, func: Elementary) -> Result<Self, JetError> {
        let x = self.value;
        match func {
            Elementary::Sin => {
                let (s, c) = x.sin_cos();
                Ok(self.chain(s, c, -s))
            }
            Elementary::Cos => {
                let (s, c) = x.sin_cos();
                Ok(self.chain(c, -s, -c))
            }
            Elementary::Exp => {
                let e = x.exp();
                Ok(self.chain(e, e, e))
            }
            Elementary::Sqrt => {
                if x <= 0.0 {
                    return Err(JetError::Domain {
                        func: "sqrt",
                        value: x,
                    });
                }
                let r = x.sqrt();
                Ok(self.chain(r, 0.5 / r, -0.25 / (r * x)))
            }
            Elementary::PowConst(p) => self.pow_const(p),
        }
    }

    fn pow_const(&self, p: f64) -> Result<Self, JetError> {
        let x = self.value;
        if p == 0.0 {
            return Ok(Self::constant(1.0, self.dim()));
        }
        if p == 1.0 {
            return Ok(self.clone());
        }
        let integral = p.fract() == 0.0 && p.abs() < i32::MAX as f64;
        if integral {
            if x == 0.0 && p < 0.0 {
                return Err(JetError::DivisionByZero);
            }
            let n = p as i32;
            let f0 = x.powi(n);
            let f1 = p * x.powi(n - 1);
            let f2 = if n == 1 {
                0.0
            } else {
                p * (p - 1.0) * x.powi(n - 2)
            };
            return Ok(self.chain(f0, f1, f2));
        }
        if x <= 0.0 {
            return Err(JetError::Domain {
                func: "pow",
                value: x,
            });
        }
        Ok(self.chain(
            x.powf(p),
            p * x.powf(p - 1.0),
            p * (p - 1.0) * x.powf(p - 2.0),
        ))
    }
}

fn zip_map(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}
