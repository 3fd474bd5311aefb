use std::io::Write;

use clap::Args;

use mincheck_core::catalog::{self, CatalogError};
use mincheck_core::conditions::{run_check, CheckKind, Verdict};
use mincheck_core::report::generate_samples;

use crate::{CliError, KindArg, SamplingArgs};

#[derive(Debug, Args)]
pub(crate) struct SweepArgs {
    /// Catalog family to sweep.
    #[arg(long, default_value = "example34")]
    family: String,
    /// Parameter to vary; defaults to `a` for example34, else the first parameter.
    #[arg(long)]
    vary: Option<String>,
    /// Comma-separated parameter values.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "range"
    )]
    values: Vec<f64>,
    /// Evenly spaced values `lo:hi:count`, endpoints included.
    #[arg(long, value_parser = parse_range)]
    range: Option<Range>,
    /// Fixed parameter, `name=value`; repeatable.
    #[arg(long = "param", value_parser = crate::parse_param)]
    params: Vec<(String, f64)>,
    /// Condition to check; defaults to the family's first expected condition.
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    output: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone)]
pub(crate) struct Range(Vec<f64>);

fn parse_range(s: &str) -> Result<Range, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, count] = parts[..] else {
        return Err(format!("expected lo:hi:count, got `{s}`"));
    };
    let lo: f64 = lo.parse().map_err(|_| format!("bad lower bound `{lo}`"))?;
    let hi: f64 = hi.parse().map_err(|_| format!("bad upper bound `{hi}`"))?;
    let count: usize = count.parse().map_err(|_| format!("bad count `{count}`"))?;
    match count {
        0 => Err("count must be positive".into()),
        1 => Ok(Range(vec![lo])),
        _ => Ok(Range(
            (0..count)
                .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                .collect(),
        )),
    }
}

struct Row {
    param: f64,
    b: Option<f64>,
    residual_max: Option<f64>,
    c: Option<f64>,
    verdict: String,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Exit status 0 when every in-range row is Satisfied, 1 otherwise.
pub(crate) fn run(args: &SweepArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let entry =
        catalog::entry(&args.family).ok_or_else(|| CatalogError::UnknownId(args.family.clone()))?;
    let vary = match &args.vary {
        Some(v) => v.clone(),
        None if entry.id == "example34" => "a".to_string(),
        None => entry
            .params
            .first()
            .map(|p| p.name.to_string())
            .ok_or_else(|| CliError::Usage(format!("`{}` has no parameters", entry.id)))?,
    };
    if !entry.params.iter().any(|p| p.name == vary) {
        return Err(CatalogError::UnknownParam {
            id: entry.id.to_string(),
            name: vary,
        }
        .into());
    }
    let values = match &args.range {
        Some(r) => r.0.clone(),
        None => args.values.clone(),
    };
    if values.is_empty() {
        return Err(CliError::Usage("give --values or --range".into()));
    }
    let plan = args.sampling.plan();
    let tol = args.sampling.tolerances()?;

    let mut rows = Vec::with_capacity(values.len());
    for &value in &values {
        let mut params: Vec<(String, f64)> = args
            .params
            .iter()
            .filter(|(k, _)| *k != vary)
            .cloned()
            .collect();
        params.push((vary.clone(), value));
        let inst = match catalog::instantiate(entry.id, &params) {
            Ok(inst) => inst,
            Err(CatalogError::OutOfRange { .. }) => {
                rows.push(Row {
                    param: value,
                    b: None,
                    residual_max: None,
                    c: None,
                    verdict: "OutOfRange".into(),
                });
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let kind = match args.kind {
            Some(k) => CheckKind::from(k),
            None => *inst.expected.keys().next().ok_or_else(|| {
                CliError::Usage(format!(
                    "`{}` has no expected condition; pass --kind",
                    entry.id
                ))
            })?,
        };
        let frame = match kind {
            CheckKind::Sphere => None,
            _ => inst.frame.as_ref(),
        };
        let samples = generate_samples(&plan, &inst.spec.domain_box)?;
        let result = run_check(kind, &inst.spec, frame, &samples, tol)?;
        rows.push(Row {
            param: value,
            b: inst.spec.param("b"),
            residual_max: Some(result.residual_max),
            c: result.recovered.get("c").copied(),
            verdict: result.verdict.to_string(),
        });
    }

    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["param", "b", "residual_max", "c", "verdict"])?;
        for r in &rows {
            w.write_record([
                format!("{:?}", r.param),
                opt(r.b),
                opt(r.residual_max),
                opt(r.c),
                r.verdict.clone(),
            ])?;
        }
        w.flush().map_err(|source| CliError::Io {
            path: "<csv>".into(),
            source,
        })?;
    }
    match &args.output {
        Some(path) => std::fs::write(path, &buf).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?,
        None => crate::write_out(out, std::str::from_utf8(&buf).expect("csv is UTF-8"))?,
    }

    let all_ok = rows
        .iter()
        .all(|r| r.verdict == "OutOfRange" || r.verdict == Verdict::Satisfied.to_string());
    Ok(if all_ok { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_spec() {
        assert_eq!(parse_range("1:2:3").unwrap().0, vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_range("1:2:1").unwrap().0, vec![1.0]);
        assert!(parse_range("1:2").is_err());
        assert!(parse_range("1:2:0").is_err());
    }
}
