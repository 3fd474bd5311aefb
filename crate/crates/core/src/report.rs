//! Deterministic sampling and check reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conditions::{ConditionResult, Tolerances};
use crate::geometry::{FrameSplit, Split};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("sample count must be at least 2, got {0}")]
    TooFewSamples(usize),
    #[error("margin must lie in [0, 0.5), got {0}")]
    BadMargin(f64),
    #[error("invalid domain box: {0}")]
    BadBox(String),
    #[error("malformed report: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    UniformRandom,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub seed: u64,
    pub count: usize,
    /// Fraction of each box side trimmed from both ends.
    pub margin: f64,
    pub strategy: Strategy,
}

impl Default for SamplePlan {
    fn default() -> Self {
        Self {
            seed: 0,
            count: 200,
            margin: 0.05,
            strategy: Strategy::UniformRandom,
        }
    }
}

/// Sample points for `plan` inside the inset `domain_box`.
///
/// Random points are keyed by `(seed, index)`: point `i` comes from stream `i`
/// of a ChaCha generator seeded with `seed`, so any prefix of a larger plan
/// equals the smaller plan and points can be produced in any order.
///
/// Grids place `q` points per axis at `lo + (i+1)/(q+1)·(hi−lo)` with `q` the
/// smallest integer such that `q^m ≥ count`, so a grid may hold more than
/// `count` points.
pub fn generate_samples(
    plan: &SamplePlan,
    domain_box: &[(f64, f64)],
) -> Result<Vec<Vec<f64>>, ReportError> {
    if plan.count < 2 {
        return Err(ReportError::TooFewSamples(plan.count));
    }
    if !(0.0..0.5).contains(&plan.margin) {
        return Err(ReportError::BadMargin(plan.margin));
    }
    if domain_box.is_empty() {
        return Err(ReportError::BadBox("no coordinates".into()));
    }
    let inset: Vec<(f64, f64)> = domain_box
        .iter()
        .map(|&(lo, hi)| {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(ReportError::BadBox(format!("[{lo}, {hi}]")));
            }
            let w = hi - lo;
            Ok((lo + plan.margin * w, hi - plan.margin * w))
        })
        .collect::<Result<_, _>>()?;

    Ok(match plan.strategy {
        Strategy::UniformRandom => (0..plan.count)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
                rng.set_stream(i as u64);
                inset
                    .iter()
                    .map(|&(lo, hi)| lo + rng.random::<f64>() * (hi - lo))
                    .collect()
            })
            .collect(),
        Strategy::Grid => {
            let m = inset.len() as u32;
            let mut q = 1usize;
            while q.saturating_pow(m) < plan.count {
                q += 1;
            }
            let total = q.pow(m);
            (0..total)
                .map(|mut idx| {
                    let mut digits = vec![0usize; inset.len()];
                    for d in digits.iter_mut().rev() {
                        *d = idx % q;
                        idx /= q;
                    }
                    digits
                        .iter()
                        .zip(&inset)
                        .map(|(&i, &(lo, hi))| lo + (i + 1) as f64 / (q + 1) as f64 * (hi - lo))
                        .collect()
                })
                .collect()
        }
    })
}

/// Where the checked immersion came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    Catalog {
        id: String,
        params: BTreeMap<String, f64>,
    },
    File {
        path: String,
        /// Lowercase hex SHA-256 of the file bytes.
        sha256: String,
        params: BTreeMap<String, f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameInfo {
    pub split: Option<Split>,
    /// Rows of the frame matrix (columns are the frame vectors); `None` for
    /// the standard basis.
    pub basis: Option<Vec<Vec<f64>>>,
}

impl FrameInfo {
    pub fn none() -> Self {
        Self {
            split: None,
            basis: None,
        }
    }

    pub fn of(frame: &FrameSplit) -> Self {
        let e = frame.basis();
        let n = e.nrows();
        let standard = *e == nalgebra::DMatrix::identity(n, n);
        Self {
            split: Some(frame.split()),
            basis: (!standard)
                .then(|| (0..n).map(|i| e.row(i).iter().copied().collect()).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub identity: String,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub engine_version: String,
    pub input: Provenance,
    pub frame: FrameInfo,
    pub plan: SamplePlan,
    pub tolerances: Tolerances,
    pub result: ConditionResult,
    /// Sorted by identity name.
    pub residual_table: Vec<IdentityRow>,
}

impl CheckReport {
    pub fn new(
        input: Provenance,
        frame: FrameInfo,
        plan: SamplePlan,
        tolerances: Tolerances,
        result: ConditionResult,
    ) -> Self {
        // BTreeMap iteration is already name-ordered
        let residual_table = result
            .identities
            .iter()
            .map(|(k, v)| IdentityRow {
                identity: k.clone(),
                max_residual: *v,
            })
            .collect();
        Self {
            engine_version: ENGINE_VERSION.to_string(),
            input,
            frame,
            plan,
            tolerances,
            result,
            residual_table,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

pub fn write_report(report: &CheckReport, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut out =
                serde_json::to_vec_pretty(report).expect("reports contain only finite values");
            out.push(b'\n');
            out
        }
        Format::Text => render_text(report).into_bytes(),
    }
}

pub fn read_report(bytes: &[u8]) -> Result<CheckReport, ReportError> {
    serde_json::from_slice(bytes).map_err(|e| ReportError::Malformed(e.to_string()))
}

fn render_text(r: &CheckReport) -> String {
    let res = &r.result;
    let mut s = String::new();
    let _ = writeln!(s, "mincheck {}: {} check", r.engine_version, res.kind);
    match &r.input {
        Provenance::Catalog { id, params } => {
            let _ = writeln!(s, "input: catalog {id} {}", fmt_map(params));
        }
        Provenance::File {
            path,
            sha256,
            params,
        } => {
            let _ = writeln!(s, "input: {path} (sha256 {sha256}) {}", fmt_map(params));
        }
    }
    match (&r.frame.split, &r.frame.basis) {
        (Some(split), None) => {
            let _ = writeln!(s, "frame: standard basis, {split:?}");
        }
        (Some(split), Some(_)) => {
            let _ = writeln!(s, "frame: custom basis, {split:?}");
        }
        _ => {
            let _ = writeln!(s, "frame: none");
        }
    }
    let _ = writeln!(
        s,
        "samples: {} ({:?}, seed {}, margin {})",
        res.samples_used, r.plan.strategy, r.plan.seed, r.plan.margin
    );
    let _ = writeln!(
        s,
        "tolerances: check {:e}, constant {:e}",
        r.tolerances.check, r.tolerances.constant
    );
    let _ = writeln!(
        s,
        "residual: max {:e}, rms {:e}",
        res.residual_max, res.residual_rms
    );
    for (name, value) in &res.recovered {
        match res.spread.get(name) {
            Some(sd) => {
                let _ = writeln!(s, "recovered {name} = {value} (spread {sd:e})");
            }
            None => {
                let _ = writeln!(s, "recovered {name} = {value}");
            }
        }
    }
    for (name, st) in &res.observed {
        let _ = writeln!(
            s,
            "observed {name}: mean {} spread {:e} range [{}, {}]",
            st.mean, st.spread, st.min, st.max
        );
    }
    if let Some(b) = res.branch {
        let _ = writeln!(s, "branch: {b:?}");
    }
    let _ = writeln!(s, "identities:");
    for row in &r.residual_table {
        let _ = writeln!(s, "  {:<36} {:e}", row.identity, row.max_residual);
    }
    for note in &res.notes {
        let _ = writeln!(s, "note: {note}");
    }
    let _ = writeln!(s, "VERDICT: {}", res.verdict);
    s
}

fn fmt_map(m: &BTreeMap<String, f64>) -> String {
    m.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}
