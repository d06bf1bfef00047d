//! CSV input and output.
//!
//! Input format: header `id,p[,pi,lambda,is_null]`. A missing `pi`
//! column defaults to `1/m`, a missing `lambda` column to 1, and the
//! optional `is_null` column (`0`/`1`) carries ground truth for
//! simulation scoring.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::simulation::ExperimentReport;
use crate::space::{HypothesisSpace, PValueVector};

/// A parsed p-value table.
#[derive(Clone, Debug)]
pub struct PValueTable {
    pub space: HypothesisSpace,
    pub pvalues: PValueVector,
    pub null_mask: Option<Vec<bool>>,
}

pub fn read_pvalue_csv<R: Read>(reader: R) -> Result<PValueTable> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let id_col = col("id").ok_or_else(|| Error::Csv("missing `id` column".into()))?;
    let p_col = col("p").ok_or_else(|| Error::Csv("missing `p` column".into()))?;
    let pi_col = col("pi");
    let lambda_col = col("lambda");
    let null_col = col("is_null");

    let parse_field = |record: &csv::StringRecord, idx: usize, line: u64| -> Result<f64> {
        let raw = record
            .get(idx)
            .ok_or_else(|| Error::Csv(format!("line {line}: missing field {idx}")))?;
        raw.parse()
            .map_err(|_| Error::Csv(format!("line {line}: `{raw}` is not a number")))
    };

    let mut labels = Vec::new();
    let mut pvalues = Vec::new();
    let mut pis: Vec<Option<f64>> = Vec::new();
    let mut lambdas = Vec::new();
    let mut nulls = Vec::new();
    for (i, record) in csv_reader.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let id = record
            .get(id_col)
            .ok_or_else(|| Error::Csv(format!("line {line}: missing id")))?;
        labels.push(id.to_string());
        pvalues.push(parse_field(&record, p_col, line)?);
        pis.push(match pi_col {
            Some(c) => Some(parse_field(&record, c, line)?),
            None => None,
        });
        lambdas.push(match lambda_col {
            Some(c) => parse_field(&record, c, line)?,
            None => 1.0,
        });
        if let Some(c) = null_col {
            let v = parse_field(&record, c, line)?;
            if v != 0.0 && v != 1.0 {
                return Err(Error::Csv(format!(
                    "line {line}: is_null must be 0 or 1, got {v}"
                )));
            }
            nulls.push(v == 1.0);
        }
    }
    let m = labels.len();
    let pi: Vec<f64> = pis
        .into_iter()
        .map(|v| v.unwrap_or(1.0 / m as f64))
        .collect();
    Ok(PValueTable {
        space: HypothesisSpace::new(labels, lambdas, pi)?,
        pvalues: PValueVector::new(pvalues)?,
        null_mask: if null_col.is_some() {
            Some(nulls)
        } else {
            None
        },
    })
}

/// Output of `apply`: `id,p,weighted_p,rejected` plus a footer comment
/// with the realized rejection volume and, for adaptive procedures, the
/// first-stage estimate of `Pi(H0)`.
pub fn write_apply_csv<W: Write>(
    mut w: W,
    space: &HypothesisSpace,
    p: &PValueVector,
    weighted: &[f64],
    rejected: &[bool],
    r_hat: f64,
    pi0_hat: Option<f64>,
) -> Result<()> {
    writeln!(w, "id,p,weighted_p,rejected")?;
    for h in 0..space.len() {
        writeln!(
            w,
            "{},{},{},{}",
            space.label(h),
            p.get(h),
            weighted[h],
            u8::from(rejected[h]),
        )?;
    }
    match pi0_hat {
        Some(v) => writeln!(w, "# r_hat={r_hat} pihat0={v}")?,
        None => writeln!(w, "# r_hat={r_hat} pihat0=NA")?,
    }
    Ok(())
}

/// Normalized shape table as CSV: columns `r,<shape-name>...`.
pub fn write_shape_table_csv<W: Write>(
    mut w: W,
    names: &[String],
    rows: &[Vec<f64>],
) -> Result<()> {
    writeln!(w, "r,{}", names.join(","))?;
    for (i, row) in rows.iter().enumerate() {
        write!(w, "{}", i + 1)?;
        for v in row {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Experiment reports as CSV, one row per grid cell.
pub fn write_report_csv<W: Write>(mut w: W, reports: &[ExperimentReport]) -> Result<()> {
    writeln!(
        w,
        "procedure,model,alpha,fdr,fdr_se,fwer,fwer_se,power,power_se,seed"
    )?;
    for r in reports {
        let e = &r.estimates;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.procedure,
            r.model,
            r.alpha,
            e.fdr,
            e.fdr_se,
            e.fwer,
            e.fwer_se,
            e.power,
            e.power_se,
            e.seed,
        )?;
    }
    Ok(())
}
