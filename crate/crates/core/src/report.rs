//! CSV result table.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantization::BitVector;

pub const CSV_HEADER: [&str; 9] = [
    "snr_db",
    "scheme",
    "n_s",
    "bits",
    "delta_analytic",
    "delta_empirical",
    "capacity_bits",
    "adc_power_watts",
    "feasible",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub snr_db: f64,
    pub scheme: String,
    pub n_s: usize,
    pub bits: Option<BitVector>,
    pub delta_analytic: Option<f64>,
    pub delta_empirical: Option<f64>,
    pub capacity_bits: Option<f64>,
    pub adc_power_watts: Option<f64>,
    pub feasible: bool,
}

#[derive(Serialize, Deserialize)]
struct CsvRecord {
    snr_db: f64,
    scheme: String,
    n_s: usize,
    bits: String,
    delta_analytic: Option<f64>,
    delta_empirical: Option<f64>,
    capacity_bits: Option<f64>,
    adc_power_watts: Option<f64>,
    feasible: bool,
}

impl From<&ResultRow> for CsvRecord {
    fn from(r: &ResultRow) -> Self {
        Self {
            snr_db: r.snr_db,
            scheme: r.scheme.clone(),
            n_s: r.n_s,
            bits: r.bits.as_ref().map(BitVector::to_pipe_string).unwrap_or_default(),
            delta_analytic: r.delta_analytic,
            delta_empirical: r.delta_empirical,
            capacity_bits: r.capacity_bits,
            adc_power_watts: r.adc_power_watts,
            feasible: r.feasible,
        }
    }
}

impl TryFrom<CsvRecord> for ResultRow {
    type Error = Error;

    fn try_from(r: CsvRecord) -> Result<Self> {
        let bits = if r.bits.is_empty() {
            None
        } else {
            Some(BitVector::parse_pipe(&r.bits)?)
        };
        Ok(Self {
            snr_db: r.snr_db,
            scheme: r.scheme,
            n_s: r.n_s,
            bits,
            delta_analytic: r.delta_analytic,
            delta_empirical: r.delta_empirical,
            capacity_bits: r.capacity_bits,
            adc_power_watts: r.adc_power_watts,
            feasible: r.feasible,
        })
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Domain("no result rows to write".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(CsvRecord::from(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
    }
    r.deserialize::<CsvRecord>()
        .map(|rec| ResultRow::try_from(rec?))
        .collect()
}
