//! Built-in immersions with known answers.
//!
//! Every entry is generated as immersion-file source and parsed, so the
//! catalog exercises the same path as user files. Expected verdicts are
//! enforced by the test suite.
//!
//! `example34` is the family
//! `f(x) = (1/√n)(e^{i a x_1}, …, e^{i a x_n}, b Σ x_j)` into
//! `S^{2n−1} × R`, realified as interleaved `(cos, sin)` pairs followed by the
//! linear component. Its coordinates are not isometric to Euclidean `R^n`:
//! the induced metric is the constant Gram matrix `(a² I + b² 11ᵀ)/n`, and
//! all checks use it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::conditions::{Branch, CheckKind, Verdict};
use crate::expr::{parse, ImmersionSpec, ParseError};
use crate::geometry::{FrameError, FrameSplit, Split};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("unknown catalog entry `{0}`")]
    UnknownId(String),
    #[error("entry `{id}` has no parameter `{name}`")]
    UnknownParam { id: String, name: String },
    #[error("parameter {name} = {value} out of range: {reason}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        reason: String,
    },
    #[error("generated source failed to parse: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// What a checker is expected to report for an entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Expectation {
    pub verdict: Verdict,
    pub constants: Vec<(&'static str, f64)>,
    pub branch: Option<Branch>,
}

impl Expectation {
    fn verdict(verdict: Verdict) -> Self {
        Self {
            verdict,
            constants: Vec::new(),
            branch: None,
        }
    }

    fn with(mut self, name: &'static str, value: f64) -> Self {
        self.constants.push((name, value));
        self
    }

    fn branch(mut self, branch: Branch) -> Self {
        self.branch = Some(branch);
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ParamInfo {
    pub name: &'static str,
    pub default: f64,
    pub range: &'static str,
}

#[derive(Debug, Clone, Copy)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub description: &'static str,
    pub params: &'static [ParamInfo],
    pub provenance: &'static str,
}

/// A ready-to-check catalog immersion.
#[derive(Debug, Clone)]
pub struct Instance {
    pub id: &'static str,
    pub params: Vec<(String, f64)>,
    pub source: String,
    pub spec: ImmersionSpec,
    pub frame: Option<FrameSplit>,
    pub expected: BTreeMap<CheckKind, Expectation>,
    pub provenance: &'static str,
}

const fn param(name: &'static str, default: f64, range: &'static str) -> ParamInfo {
    ParamInfo {
        name,
        default,
        range,
    }
}

pub const ENTRIES: &[CatalogEntry] = &[
    CatalogEntry {
        id: "plane",
        description: "the plane z = 0 in R^3",
        params: &[],
        provenance: "totally geodesic; Delta F = 0 so c = 0",
    },
    CatalogEntry {
        id: "round_sphere",
        description: "unit sphere S^2 in spherical coordinates away from the poles",
        params: &[],
        provenance: "Delta F = -2F on the unit sphere",
    },
    CatalogEntry {
        id: "circle",
        description: "unit circle traversed at speed a",
        params: &[param("a", 1.0, "a > 0")],
        provenance: "g = a^2, Delta F = -F",
    },
    CatalogEntry {
        id: "latitude_circle",
        description: "circle of height z0 on the unit sphere",
        params: &[param("z0", 0.5, "-1 < z0 < 1")],
        provenance: "Delta F = -(cos t, sin t, 0)/rho; a geodesic of the cylinder of radius rho",
    },
    CatalogEntry {
        id: "clifford_torus",
        description: "(1/sqrt 2)(cos u, sin u, cos v, sin v), minimal in the unit S^3",
        params: &[],
        provenance: "metric diag(1/2, 1/2), Delta F = -2F",
    },
    CatalogEntry {
        id: "example34",
        description: "(1/sqrt n)(e^{i a x_1}, ..., e^{i a x_n}, b sum x_j) into S^{2n-1} x R",
        params: &[
            param("n", 2.0, "integer n >= 2"),
            param("a", 1.224_744_871_391_589, "sqrt(n-1) < a <= sqrt(n)"),
        ],
        provenance: "b^2 = a^2(n-a^2)/(n(a^2-n+1)); |T|^2 = nb^2/(a^2+nb^2) = n - a^2",
    },
    CatalogEntry {
        id: "right_cylinder",
        description: "(cos u, sin u, v), the cylinder S^1 x R itself",
        params: &[],
        provenance: "flat metric, Delta F = -P, flat projection 1",
    },
    CatalogEntry {
        id: "helix_graph",
        description: "(cos u, sin u, v + slope*u), a reparametrized cylinder",
        params: &[param("slope", 0.3, "any real")],
        provenance: "det g = 1, Gamma = 0, Delta F = -P; frozen from a 200-point oracle run",
    },
    CatalogEntry {
        id: "cylinder_wave",
        description: "(cos t, sin t, amp*sin t), a non-geodesic curve on the cylinder",
        params: &[param("amp", 0.5, "any real; amp = 0 is a geodesic")],
        provenance: "lies on S^1 x R but is not a helix, so not minimal there",
    },
    CatalogEntry {
        id: "product_circles",
        description: "(cos u, sin u, cos v, sin v) in S^1 x S^1",
        params: &[],
        provenance: "S1 = S2 = 1, Delta F = -F = -(m/2)F",
    },
    CatalogEntry {
        id: "diagonal_circle",
        description: "(cos t, sin t, cos t, sin t), a great circle of radius sqrt 2",
        params: &[],
        provenance: "g = 2, S1 = S2 = 1/2, Delta F = -F/2",
    },
    CatalogEntry {
        id: "scaled_product",
        description: "(r cos u, r sin u, s cos v, s sin v) with r^2 + s^2 = 2",
        params: &[param("r2", 1.5, "0 < r2 < 2")],
        provenance: "Delta F = -N1/r^2 - N2/s^2, equal to -(m/2)F only for r2 = 1",
    },
    CatalogEntry {
        id: "torus_geodesic",
        description: "(cos t, sin t, cos qt, sin qt), a geodesic of S^1 x S^1",
        params: &[param("q", 2.0, "q != 0")],
        provenance: "S1 = 1/(1+q^2), S2 = q^2/(1+q^2), Delta F = -S1 N1 - S2 N2",
    },
];

pub fn entry(id: &str) -> Option<&'static CatalogEntry> {
    ENTRIES.iter().find(|e| e.id == id)
}

fn out_of_range(name: &'static str, value: f64, reason: impl Into<String>) -> CatalogError {
    CatalogError::OutOfRange {
        name,
        value,
        reason: reason.into(),
    }
}

/// Positive `b` making the `example34` family minimal in `S^{2n−1} × R`:
/// `b² = a²(n − a²) / (n(a² − n + 1))` for `√(n−1) < a ≤ √n`.
pub fn solve_b(n: usize, a: f64) -> Result<f64, CatalogError> {
    if n < 2 {
        return Err(out_of_range("n", n as f64, "need n >= 2"));
    }
    let nf = n as f64;
    if a.is_nan() || a <= (nf - 1.0).sqrt() {
        return Err(out_of_range("a", a, format!("need a > sqrt({})", n - 1)));
    }
    let a2 = a * a;
    // a = sqrt(n) may square to n + 1 ulp
    let excess = a2 - nf;
    if excess > 4.0 * f64::EPSILON * nf {
        return Err(out_of_range("a", a, format!("need a <= sqrt({n})")));
    }
    if excess >= 0.0 {
        return Ok(0.0);
    }
    let denom = nf * (a2 - nf + 1.0);
    if denom.is_nan() || denom <= 0.0 {
        return Err(out_of_range("a", a, format!("need a > sqrt({})", n - 1)));
    }
    Ok((a2 * (nf - a2) / denom).sqrt())
}

fn resolve_params(
    entry: &CatalogEntry,
    given: &[(String, f64)],
) -> Result<Vec<(&'static str, f64)>, CatalogError> {
    for (name, _) in given {
        if !entry.params.iter().any(|p| p.name == name) {
            return Err(CatalogError::UnknownParam {
                id: entry.id.to_string(),
                name: name.clone(),
            });
        }
    }
    Ok(entry
        .params
        .iter()
        .map(|p| {
            let value = given
                .iter()
                .rev()
                .find(|(n, _)| n == p.name)
                .map_or(p.default, |(_, v)| *v);
            (p.name, value)
        })
        .collect())
}

fn lookup(params: &[(&'static str, f64)], name: &str) -> f64 {
    params
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, v)| *v)
        .expect("declared parameter")
}

fn cylinder(n: usize, k: usize) -> Result<Option<FrameSplit>, CatalogError> {
    Ok(Some(FrameSplit::standard(Split::Cylinder { n, k })?))
}

fn torus(n: usize, k: usize) -> Result<Option<FrameSplit>, CatalogError> {
    Ok(Some(FrameSplit::standard(Split::Torus { n, k })?))
}

fn example34_source(n: usize, a: f64, b: f64) -> String {
    let mut src = String::new();
    let _ = writeln!(src, "# realified (1/sqrt n)(e^(i a x_j), b sum x_j)");
    let _ = writeln!(src, "param n = {n};");
    let _ = writeln!(src, "param a = {a:?};");
    let _ = writeln!(src, "param b = {b:?};");
    let _ = writeln!(src, "dim {n} -> {};", 2 * n + 1);
    let mut comps = Vec::with_capacity(2 * n + 1);
    for j in 1..=n {
        comps.push(format!("cos(a*x{j})/sqrt(n)"));
        comps.push(format!("sin(a*x{j})/sqrt(n)"));
    }
    let sum: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
    comps.push(format!("b*({})/sqrt(n)", sum.join(" + ")));
    let _ = writeln!(src, "F = ({});", comps.join(", "));
    let boxes: Vec<String> = (1..=n).map(|j| format!("x{j} in [0, 2*pi]")).collect();
    let _ = writeln!(src, "box {};", boxes.join(", "));
    src
}

/// Builds a catalog immersion with its default frame and expectations.
pub fn instantiate(id: &str, given: &[(String, f64)]) -> Result<Instance, CatalogError> {
    use CheckKind::{Cylinder, Sphere, Torus};
    use Verdict::{Degenerate, Satisfied, Violated};

    let entry = entry(id).ok_or_else(|| CatalogError::UnknownId(id.to_string()))?;
    let params = resolve_params(entry, given)?;
    let mut expected = BTreeMap::new();

    let (source, frame) = match entry.id {
        "plane" => {
            expected.insert(Sphere, Expectation::verdict(Violated).with("c", 0.0));
            expected.insert(Cylinder, Expectation::verdict(Degenerate));
            (
                "dim 2 -> 3;\nF = (x1, x2, 0);\nbox x1 in [0, 1], x2 in [0, 1];\n".to_string(),
                cylinder(1, 1)?,
            )
        }
        "round_sphere" => {
            expected.insert(Sphere, Expectation::verdict(Satisfied).with("c", 1.0));
            expected.insert(Cylinder, Expectation::verdict(Degenerate));
            (
                "dim 2 -> 3;\n\
                 F = (sin(x1)*cos(x2), sin(x1)*sin(x2), cos(x1));\n\
                 box x1 in [0.2, pi - 0.2], x2 in [0, 2*pi];\n"
                    .to_string(),
                cylinder(1, 1)?,
            )
        }
        "circle" => {
            let a = lookup(&params, "a");
            if a.is_nan() || a <= 0.0 {
                return Err(out_of_range("a", a, "need a > 0"));
            }
            expected.insert(Sphere, Expectation::verdict(Satisfied).with("c", 1.0));
            (
                format!(
                    "param a = {a:?};\ndim 1 -> 2;\nF = (cos(a*x1), sin(a*x1));\nbox x1 in [0, 2*pi];\n"
                ),
                None,
            )
        }
        "latitude_circle" => {
            let z0 = lookup(&params, "z0");
            if z0.is_nan() || z0.abs() >= 1.0 {
                return Err(out_of_range("z0", z0, "need -1 < z0 < 1"));
            }
            let rho2 = 1.0 - z0 * z0;
            let sphere = if z0 == 0.0 {
                Expectation::verdict(Satisfied).with("c", 1.0)
            } else {
                Expectation::verdict(Violated)
            };
            expected.insert(Sphere, sphere);
            expected.insert(
                Cylinder,
                Expectation::verdict(Satisfied)
                    .with("c", 1.0 / rho2)
                    .with("r2", rho2),
            );
            (
                format!(
                    "param z0 = {z0:?};\nparam rho = sqrt(1 - z0^2);\ndim 1 -> 3;\n\
                     F = (rho*cos(x1), rho*sin(x1), z0);\nbox x1 in [0, 2*pi];\n"
                ),
                cylinder(1, 1)?,
            )
        }
        "clifford_torus" => {
            expected.insert(Sphere, Expectation::verdict(Satisfied).with("c", 1.0));
            expected.insert(Torus, Expectation::verdict(Degenerate));
            (
                "dim 2 -> 4;\n\
                 F = (cos(x1)/sqrt(2), sin(x1)/sqrt(2), cos(x2)/sqrt(2), sin(x2)/sqrt(2));\n\
                 box x1 in [0, 2*pi], x2 in [0, 2*pi];\n"
                    .to_string(),
                torus(1, 1)?,
            )
        }
        "example34" => {
            let n_raw = lookup(&params, "n");
            if !(n_raw >= 2.0 && n_raw.fract() == 0.0 && n_raw <= 64.0) {
                return Err(out_of_range("n", n_raw, "need an integer 2 <= n <= 64"));
            }
            let n = n_raw as usize;
            let a = lookup(&params, "a");
            let b = solve_b(n, a)?;
            expected.insert(
                Cylinder,
                Expectation::verdict(Satisfied)
                    .with("c", 1.0)
                    .with("r2", 1.0),
            );
            (example34_source(n, a, b), cylinder(2 * n - 1, 1)?)
        }
        "right_cylinder" => {
            expected.insert(Cylinder, Expectation::verdict(Satisfied).with("c", 1.0));
            (
                "dim 2 -> 3;\nF = (cos(x1), sin(x1), x2);\nbox x1 in [0, 2*pi], x2 in [-1, 1];\n"
                    .to_string(),
                cylinder(1, 1)?,
            )
        }
        "helix_graph" => {
            let slope = lookup(&params, "slope");
            expected.insert(Cylinder, Expectation::verdict(Satisfied).with("c", 1.0));
            (
                format!(
                    "param slope = {slope:?};\ndim 2 -> 3;\n\
                     F = (cos(x1), sin(x1), x2 + slope*x1);\n\
                     box x1 in [0, 2*pi], x2 in [-1, 1];\n"
                ),
                cylinder(1, 1)?,
            )
        }
        "cylinder_wave" => {
            let amp = lookup(&params, "amp");
            let verdict = if amp == 0.0 { Satisfied } else { Violated };
            expected.insert(Cylinder, Expectation::verdict(verdict).with("c", 1.0));
            (
                format!(
                    "param amp = {amp:?};\ndim 1 -> 3;\n\
                     F = (cos(x1), sin(x1), amp*sin(x1));\nbox x1 in [0, 2*pi];\n"
                ),
                cylinder(1, 1)?,
            )
        }
        "product_circles" => {
            expected.insert(Sphere, Expectation::verdict(Satisfied).with("c", 0.5));
            expected.insert(
                Torus,
                Expectation::verdict(Satisfied).branch(Branch::SphereMinimal),
            );
            (
                "dim 2 -> 4;\nF = (cos(x1), sin(x1), cos(x2), sin(x2));\n\
                 box x1 in [0, 2*pi], x2 in [0, 2*pi];\n"
                    .to_string(),
                torus(1, 1)?,
            )
        }
        "diagonal_circle" => {
            expected.insert(Sphere, Expectation::verdict(Satisfied).with("c", 0.5));
            expected.insert(
                Torus,
                Expectation::verdict(Satisfied).branch(Branch::SphereMinimal),
            );
            (
                "dim 1 -> 4;\nF = (cos(x1), sin(x1), cos(x1), sin(x1));\nbox x1 in [0, 2*pi];\n"
                    .to_string(),
                torus(1, 1)?,
            )
        }
        "scaled_product" => {
            let r2 = lookup(&params, "r2");
            if !(r2 > 0.0 && r2 < 2.0) {
                return Err(out_of_range("r2", r2, "need 0 < r2 < 2"));
            }
            let unit = r2 == 1.0;
            expected.insert(
                Sphere,
                if unit {
                    Expectation::verdict(Satisfied).with("c", 0.5)
                } else {
                    Expectation::verdict(Violated)
                },
            );
            expected.insert(
                Torus,
                Expectation::verdict(if unit { Satisfied } else { Violated })
                    .branch(Branch::SphereMinimal),
            );
            (
                format!(
                    "param r2 = {r2:?};\nparam r = sqrt(r2);\nparam s = sqrt(2 - r2);\ndim 2 -> 4;\n\
                     F = (r*cos(x1), r*sin(x1), s*cos(x2), s*sin(x2));\n\
                     box x1 in [0, 2*pi], x2 in [0, 2*pi];\n"
                ),
                torus(1, 1)?,
            )
        }
        "torus_geodesic" => {
            let q = lookup(&params, "q");
            if q == 0.0 || !q.is_finite() {
                return Err(out_of_range("q", q, "need q != 0"));
            }
            let balanced = q.abs() == 1.0;
            expected.insert(
                Sphere,
                if balanced {
                    Expectation::verdict(Satisfied).with("c", 0.5)
                } else {
                    Expectation::verdict(Violated)
                },
            );
            let torus_expect = if balanced {
                Expectation::verdict(Satisfied).branch(Branch::SphereMinimal)
            } else {
                Expectation::verdict(Satisfied)
                    .with("r2", 1.0)
                    .with("s2", 1.0)
                    .branch(Branch::ProductMinimal)
            };
            expected.insert(Torus, torus_expect);
            (
                format!(
                    "param q = {q:?};\ndim 1 -> 4;\n\
                     F = (cos(x1), sin(x1), cos(q*x1), sin(q*x1));\nbox x1 in [0, 2*pi];\n"
                ),
                torus(1, 1)?,
            )
        }
        _ => unreachable!("entry table and builder out of sync"),
    };

    let spec = parse(&source)?;
    Ok(Instance {
        id: entry.id,
        params: params.iter().map(|(n, v)| (n.to_string(), *v)).collect(),
        source,
        spec,
        frame,
        expected,
        provenance: entry.provenance,
    })
}

fn describe_split(frame: &Option<FrameSplit>) -> String {
    match frame.as_ref().map(FrameSplit::split) {
        Some(Split::Cylinder { n, k }) => format!("cylinder(n={n},k={k})"),
        Some(Split::Torus { n, k }) => format!("torus(n={n},k={k})"),
        None => "none".into(),
    }
}

fn describe_expectation(kind: CheckKind, e: &Expectation) -> String {
    let mut s = format!("{kind}={}", e.verdict);
    let mut extras: Vec<String> = e
        .constants
        .iter()
        .map(|(n, v)| format!("{n}={v}"))
        .collect();
    if let Some(b) = e.branch {
        extras.push(format!("branch={b:?}"));
    }
    if !extras.is_empty() {
        let _ = write!(s, "({})", extras.join(","));
    }
    s
}

impl Instance {
    /// `id  m=.. N=..  params: ..  frame: ..  expected: ..` on one line.
    pub fn summary_line(&self) -> String {
        let params = if self.params.is_empty() {
            "-".to_string()
        } else {
            self.params
                .iter()
                .map(|(n, v)| format!("{n}={v}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let expected = self
            .expected
            .iter()
            .map(|(k, e)| describe_expectation(*k, e))
            .collect::<Vec<_>>()
            .join(" ");
        format!(
            "{}\tm={}\tN={}\tparams: {}\tframe: {}\texpected: {}",
            self.id,
            self.spec.domain_dim,
            self.spec.ambient_dim,
            params,
            describe_split(&self.frame),
            expected
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_b_closed_form_values() {
        let b = solve_b(2, 1.5f64.sqrt()).unwrap();
        assert!((b * b - 0.75).abs() < 1e-14);
        assert!((b - 0.866_025_403_784_438_6).abs() < 1e-12);

        assert_eq!(solve_b(2, 2f64.sqrt()).unwrap(), 0.0);

        let b = solve_b(3, 2.5f64.sqrt()).unwrap();
        assert!((b * b - 5.0 / 6.0).abs() < 1e-14);

        assert!(matches!(
            solve_b(2, 1.0),
            Err(CatalogError::OutOfRange { .. })
        ));
        assert!(matches!(
            solve_b(2, 0.5),
            Err(CatalogError::OutOfRange { .. })
        ));
        assert!(matches!(
            solve_b(2, 1.5),
            Err(CatalogError::OutOfRange { .. })
        ));
        assert!(matches!(
            solve_b(1, 1.0),
            Err(CatalogError::OutOfRange { .. })
        ));
    }

    #[test]
    fn every_entry_instantiates_with_defaults() {
        for e in ENTRIES {
            let inst = instantiate(e.id, &[]).unwrap_or_else(|err| panic!("{}: {err}", e.id));
            assert!(!inst.expected.is_empty(), "{}", e.id);
            if let Some(frame) = &inst.frame {
                assert_eq!(frame.ambient_dim(), inst.spec.ambient_dim, "{}", e.id);
            }
            assert!(inst.summary_line().starts_with(e.id));
        }
    }

    #[test]
    fn example34_shape() {
        let inst = instantiate(
            "example34",
            &[("n".into(), 2.0), ("a".into(), 1.5f64.sqrt())],
        )
        .unwrap();
        assert_eq!((inst.spec.domain_dim, inst.spec.ambient_dim), (2, 5));
        assert_eq!(
            inst.frame.as_ref().unwrap().split(),
            Split::Cylinder { n: 3, k: 1 }
        );
        assert_eq!(
            inst.expected[&CheckKind::Cylinder].verdict,
            Verdict::Satisfied
        );

        let inst = instantiate(
            "example34",
            &[("n".into(), 3.0), ("a".into(), 2.5f64.sqrt())],
        )
        .unwrap();
        assert_eq!((inst.spec.domain_dim, inst.spec.ambient_dim), (3, 7));
    }

    #[test]
    fn parameter_errors() {
        assert!(matches!(
            instantiate("nope", &[]),
            Err(CatalogError::UnknownId(_))
        ));
        assert!(matches!(
            instantiate("plane", &[("a".into(), 1.0)]),
            Err(CatalogError::UnknownParam { .. })
        ));
        assert!(matches!(
            instantiate("example34", &[("a".into(), 1.0)]),
            Err(CatalogError::OutOfRange { .. })
        ));
        assert!(matches!(
            instantiate("scaled_product", &[("r2".into(), 2.0)]),
            Err(CatalogError::OutOfRange { .. })
        ));
    }

    #[test]
    fn plane_expects_violated_sphere_check() {
        let inst = instantiate("plane", &[]).unwrap();
        assert_eq!(inst.expected[&CheckKind::Sphere].verdict, Verdict::Violated);
        let inst = instantiate("scaled_product", &[("r2".into(), 1.5)]).unwrap();
        assert_eq!(inst.expected[&CheckKind::Torus].verdict, Verdict::Violated);
    }
}
