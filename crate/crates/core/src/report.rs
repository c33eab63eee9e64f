//! Flat per-user CSV output.

use std::io::Write;

use crate::channel::Zone;
use crate::error::{Error, Result};
use crate::pipeline::RunResult;

/// Column order of the CSV output. Never depends on configuration.
pub const COLUMNS: [&str; 12] = [
    "scheme",
    "seed",
    "snr_db",
    "beta",
    "user_id",
    "zone",
    "distance_m",
    "psnr_db",
    "mse_total",
    "mse_llse",
    "mse_discarded",
    "mse_undecodable_el",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scheme: String,
    pub seed: u64,
    pub snr_db: f64,
    pub beta: f64,
    pub user_id: usize,
    pub zone: Zone,
    pub distance_m: f64,
    pub psnr_db: f64,
    pub mse_total: f64,
    pub mse_llse: f64,
    pub mse_discarded: f64,
    pub mse_undecodable_el: f64,
}

impl ResultRow {
    fn fields(&self) -> [String; 12] {
        [
            self.scheme.clone(),
            self.seed.to_string(),
            self.snr_db.to_string(),
            self.beta.to_string(),
            self.user_id.to_string(),
            self.zone.as_str().to_string(),
            self.distance_m.to_string(),
            self.psnr_db.to_string(),
            self.mse_total.to_string(),
            self.mse_llse.to_string(),
            self.mse_discarded.to_string(),
            self.mse_undecodable_el.to_string(),
        ]
    }
}

/// One row per (run, user), in run order.
pub fn rows(results: &[RunResult]) -> Vec<ResultRow> {
    results
        .iter()
        .flat_map(|r| {
            r.users.iter().map(move |u| ResultRow {
                scheme: r.scheme.as_str().to_string(),
                seed: r.seed,
                snr_db: r.snr_db,
                beta: r.beta,
                user_id: u.user_id,
                zone: u.zone,
                distance_m: u.distance_m,
                psnr_db: u.psnr_db,
                mse_total: u.mse_total,
                mse_llse: u.breakdown.llse,
                mse_discarded: u.breakdown.discarded,
                mse_undecodable_el: u.breakdown.undecodable_el,
            })
        })
        .collect()
}

/// Writes a header and `rows` with LF line endings. Floats use the shortest
/// representation that round-trips.
pub fn write_csv<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let csv_err = |e: csv::Error| Error::Output(e.to_string());
    w.write_record(COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.fields()).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Output(e.to_string()))?;
    Ok(())
}

pub fn to_csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}
