//! Immersion expression language.
//!
//! An immersion file declares optional parameters, the dimensions, the
//! component expressions and the coordinate box:
//!
//! ```text
//! # unit circle traversed at speed a
//! param a = 1.2;
//! dim 1 -> 2;
//! F = (cos(a*x1), sin(a*x1));
//! box x1 in [0, 2*pi];
//! ```
//!
//! Expressions use `+ - * / ^`, unary minus, parentheses, the functions
//! `sin cos exp sqrt`, the constants `pi` and `e`, coordinates `x1..xm` and
//! declared parameters. `^` binds tighter than unary minus, so `-x1^2` is
//! `-(x1^2)`; its exponent must not depend on the coordinates. `#` starts a
//! comment.

mod parser;

use std::fmt;

use thiserror::Error;

use crate::jet::{ArithOp, Elementary, Jet2, JetError};

pub use parser::{parse, parse_scalar, parse_with_overrides, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Chart coordinate, zero-based (`x1` is `Var(0)`).
    Var(usize),
    /// A parameter bound at parse time.
    Param {
        name: String,
        value: f64,
    },
    /// Ambient component `F{a+1}`; only valid in scalar fields.
    Component(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("component {component}: {source} at point {point:?}")]
    Domain {
        component: usize,
        point: Vec<f64>,
        #[source]
        source: JetError,
    },
    #[error("scalar field: {source} at point {point:?}")]
    ScalarDomain {
        point: Vec<f64>,
        #[source]
        source: JetError,
    },
    #[error("point {point:?} has {got} coordinates, chart expects {expected}")]
    WrongDimension {
        point: Vec<f64>,
        got: usize,
        expected: usize,
    },
    #[error("point {point:?} lies outside the domain box")]
    OutsideDomain { point: Vec<f64> },
    #[error("rotation must be {expected}x{expected}")]
    BadRotation { expected: usize },
}

impl Expr {
    pub fn unary(op: UnaryOp, arg: Expr) -> Self {
        Expr::Unary(op, Box::new(arg))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// True when the subtree references neither coordinates nor components.
    pub fn is_coordinate_free(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Param { .. } => true,
            Expr::Var(_) | Expr::Component(_) => false,
            Expr::Unary(_, a) => a.is_coordinate_free(),
            Expr::Binary(_, a, b) => a.is_coordinate_free() && b.is_coordinate_free(),
        }
    }

    /// Plain `f64` evaluation of a coordinate-free subtree.
    pub fn eval_constant(&self) -> Option<f64> {
        match self {
            Expr::Const(v) | Expr::Param { value: v, .. } => Some(*v),
            Expr::Var(_) | Expr::Component(_) => None,
            Expr::Unary(op, a) => {
                let a = a.eval_constant()?;
                Some(match op {
                    UnaryOp::Neg => -a,
                    UnaryOp::Sin => a.sin(),
                    UnaryOp::Cos => a.cos(),
                    UnaryOp::Exp => a.exp(),
                    UnaryOp::Sqrt => a.sqrt(),
                })
            }
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval_constant()?, b.eval_constant()?);
                Some(match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => a / b,
                    BinaryOp::Pow => a.powf(b),
                })
            }
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Var(i) => Some(*i),
            Expr::Const(_) | Expr::Param { .. } | Expr::Component(_) => None,
            Expr::Unary(_, a) => a.max_var(),
            Expr::Binary(_, a, b) => a.max_var().max(b.max_var()),
        }
    }

    /// Evaluates the expression as a second-order jet.
    ///
    /// `coords` are the seeded coordinate jets; `components` the ambient
    /// component jets for scalar fields (empty for chart components).
    pub fn eval_jet(&self, coords: &[Jet2], components: &[Jet2]) -> Result<Jet2, JetError> {
        let dim = coords.first().map_or(0, Jet2::dim);
        match self {
            Expr::Const(v) | Expr::Param { value: v, .. } => Ok(Jet2::constant(*v, dim)),
            Expr::Var(i) => coords.get(*i).cloned().ok_or(JetError::IndexOutOfRange {
                index: *i,
                dim: coords.len(),
            }),
            Expr::Component(a) => components
                .get(*a)
                .cloned()
                .ok_or(JetError::IndexOutOfRange {
                    index: *a,
                    dim: components.len(),
                }),
            Expr::Unary(op, a) => {
                let a = a.eval_jet(coords, components)?;
                match op {
                    UnaryOp::Neg => Ok(a.neg()),
                    UnaryOp::Sin => a.elementary(Elementary::Sin),
                    UnaryOp::Cos => a.elementary(Elementary::Cos),
                    UnaryOp::Exp => a.elementary(Elementary::Exp),
                    UnaryOp::Sqrt => a.elementary(Elementary::Sqrt),
                }
            }
            Expr::Binary(BinaryOp::Pow, base, exponent) => {
                // the parser guarantees a coordinate-free exponent
                let p = exponent
                    .eval_constant()
                    .expect("pow exponent must be coordinate-free");
                base.eval_jet(coords, components)?
                    .elementary(Elementary::PowConst(p))
            }
            Expr::Binary(op, a, b) => {
                let a = a.eval_jet(coords, components)?;
                let b = b.eval_jet(coords, components)?;
                let op = match op {
                    BinaryOp::Add => ArithOp::Add,
                    BinaryOp::Sub => ArithOp::Sub,
                    BinaryOp::Mul => ArithOp::Mul,
                    BinaryOp::Div => ArithOp::Div,
                    BinaryOp::Pow => unreachable!(),
                };
                a.arith(&b, op)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) if v.is_sign_negative() => write!(f, "(-{:?})", -v),
            Expr::Const(v) => write!(f, "{v:?}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Param { name, .. } => f.write_str(name),
            Expr::Component(a) => write!(f, "F{}", a + 1),
            Expr::Unary(UnaryOp::Neg, a) => write!(f, "(-{a})"),
            Expr::Unary(op, a) => {
                let name = match op {
                    UnaryOp::Sin => "sin",
                    UnaryOp::Cos => "cos",
                    UnaryOp::Exp => "exp",
                    UnaryOp::Sqrt => "sqrt",
                    UnaryOp::Neg => unreachable!(),
                };
                write!(f, "{name}({a})")
            }
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinaryOp::Add => "+",
                    BinaryOp::Sub => "-",
                    BinaryOp::Mul => "*",
                    BinaryOp::Div => "/",
                    BinaryOp::Pow => "^",
                };
                write!(f, "({a} {sym} {b})")
            }
        }
    }
}

/// A parsed chart `F: box ⊂ R^m → R^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImmersionSpec {
    pub domain_dim: usize,
    pub ambient_dim: usize,
    pub components: Vec<Expr>,
    /// Parameters in declaration order.
    pub params: Vec<(String, f64)>,
    pub domain_box: Vec<(f64, f64)>,
}

impl ImmersionSpec {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.domain_dim
            && point
                .iter()
                .zip(&self.domain_box)
                .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }

    fn coordinate_jets(&self, point: &[f64]) -> Result<Vec<Jet2>, ExprError> {
        if point.len() != self.domain_dim {
            return Err(ExprError::WrongDimension {
                point: point.to_vec(),
                got: point.len(),
                expected: self.domain_dim,
            });
        }
        if !self.contains(point) {
            return Err(ExprError::OutsideDomain {
                point: point.to_vec(),
            });
        }
        Ok((0..self.domain_dim)
            .map(|i| Jet2::seed(point, i).expect("index within dimension"))
            .collect())
    }

    /// Second-order jets of every component `F^a` at `point`.
    pub fn eval_chart(&self, point: &[f64]) -> Result<Vec<Jet2>, ExprError> {
        let coords = self.coordinate_jets(point)?;
        self.components
            .iter()
            .enumerate()
            .map(|(component, e)| {
                e.eval_jet(&coords, &[])
                    .map_err(|source| ExprError::Domain {
                        component,
                        point: point.to_vec(),
                        source,
                    })
            })
            .collect()
    }

    /// Plain values of the components, for finite-difference checks.
    pub fn eval_values(&self, point: &[f64]) -> Result<Vec<f64>, ExprError> {
        Ok(self.eval_chart(point)?.iter().map(Jet2::value).collect())
    }

    /// Jet of a scalar field (which may reference `F1..FN`) at `point`.
    pub fn eval_scalar(&self, field: &Expr, point: &[f64]) -> Result<Jet2, ExprError> {
        let coords = self.coordinate_jets(point)?;
        let components = self.eval_chart(point)?;
        field
            .eval_jet(&coords, &components)
            .map_err(|source| ExprError::ScalarDomain {
                point: point.to_vec(),
                source,
            })
    }

    /// The chart `Q·F` for an `N×N` matrix `Q` given row by row.
    pub fn transformed(&self, q: &[Vec<f64>]) -> Result<Self, ExprError> {
        let n = self.ambient_dim;
        if q.len() != n || q.iter().any(|row| row.len() != n) {
            return Err(ExprError::BadRotation { expected: n });
        }
        let components = q
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.components)
                    .map(|(&w, c)| Expr::binary(BinaryOp::Mul, Expr::Const(w), c.clone()))
                    .reduce(|acc, term| Expr::binary(BinaryOp::Add, acc, term))
                    .expect("ambient dimension is positive")
            })
            .collect();
        Ok(Self {
            components,
            ..self.clone()
        })
    }
}

impl fmt::Display for ImmersionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, value) in &self.params {
            writeln!(f, "param {name} = {};", Expr::Const(*value))?;
        }
        writeln!(f, "dim {} -> {};", self.domain_dim, self.ambient_dim)?;
        let comps: Vec<String> = self.components.iter().map(ToString::to_string).collect();
        writeln!(f, "F = ({});", comps.join(", "))?;
        let boxes: Vec<String> = self
            .domain_box
            .iter()
            .enumerate()
            .map(|(i, (lo, hi))| {
                format!("x{} in [{}, {}]", i + 1, Expr::Const(*lo), Expr::Const(*hi))
            })
            .collect();
        writeln!(f, "box {};", boxes.join(", "))
    }
}
