//! Tables of limit constants as CSV with columns `d, alpha, k, value`.
//!
//! Rows for `ϑ^k` carry the multi-index in the `k` column. The `κ_d(α)` row
//! uses `kappa` there and `γ_d(t)` rows use `gamma(t=...)`. Undefined values
//! are written as `undefined`.

use std::io::Write;

use serde::Serialize;

use crate::analytics::{gamma_d, kappa_d, theta_const};
use crate::error::Result;
use crate::multi_index::MultiIndex;
use crate::stable_motion::StableParams;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantRow {
    pub d: usize,
    pub alpha: f64,
    pub k: String,
    pub value: Option<f64>,
}

pub fn constants_table(params: &StableParams, max_order: u32, times: &[f64]) -> Result<Vec<ConstantRow>> {
    let d = params.dim();
    let alpha = params.alpha();
    let mut rows: Vec<ConstantRow> = MultiIndex::up_to_order(d, max_order)
        .into_iter()
        .map(|k| ConstantRow {
            d,
            alpha,
            value: Some(theta_const(params, &k)),
            k: k.to_string(),
        })
        .collect();
    rows.push(ConstantRow {
        d,
        alpha,
        k: "kappa".into(),
        value: kappa_d(params).ok(),
    });
    for &t in times {
        rows.push(ConstantRow {
            d,
            alpha,
            k: format!("gamma(t={t})"),
            value: Some(gamma_d(params, t)?),
        });
    }
    Ok(rows)
}

pub fn write_constants_csv<W: Write>(rows: &[ConstantRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["d", "alpha", "k", "value"])?;
    for r in rows {
        let value = match r.value {
            Some(v) => format!("{v:.17e}"),
            None => "undefined".into(),
        };
        w.write_record([r.d.to_string(), r.alpha.to_string(), r.k.clone(), value])?;
    }
    w.flush()?;
    Ok(())
}
