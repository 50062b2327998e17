use std::io::Write;

use serde::{Deserialize, Serialize};

use super::CalibrationExperiment;
use crate::error::{Error, Result};
use crate::stats::{confidence_interval, ConfidenceInterval};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiRow {
    pub parameter: String,
    pub interval: ConfidenceInterval,
}

/// 95% confidence interval of each final parameter across experiments.
pub fn aggregate_experiments(experiments: &[CalibrationExperiment]) -> Result<Vec<CiRow>> {
    let first = experiments
        .first()
        .ok_or_else(|| Error::Incompatible("no experiments".into()))?;
    if experiments.len() < 2 {
        return Err(Error::Incompatible("need at least two experiments".into()));
    }
    for e in experiments {
        if e.method != first.method || e.parameters != first.parameters {
            return Err(Error::Incompatible(format!(
                "mixed runs: {} {:?} vs {} {:?}",
                first.method.tag(),
                first.parameters,
                e.method.tag(),
                e.parameters
            )));
        }
    }
    first
        .parameters
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let values: Vec<f64> = experiments.iter().map(|e| e.final_params[i]).collect();
            Ok(CiRow {
                parameter: name.clone(),
                interval: confidence_interval(&values, 0.95)?,
            })
        })
        .collect()
}

pub fn write_ci_table<W: Write>(mut out: W, rows: &[CiRow]) -> std::io::Result<()> {
    writeln!(out, "parameter,lower,upper,std_err")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.parameter, r.interval.lower, r.interval.upper, r.interval.std_err
        )?;
    }
    Ok(())
}
