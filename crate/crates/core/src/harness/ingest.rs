use std::io::Cursor;

use serde::{Deserialize, Serialize};

use crate::bitstring::Bitstring;
use crate::error::{Error, Result};
use crate::graph::{Graph, Register};
use crate::mis::tarjan_mis;
use crate::noise::{calibrate, read_shots, CalibrationReport, ShotRecord};

/// Device export: register geometry plus one bitstring per shot, bit `i`
/// being the atom at `positions_um[i]`. Anything else is rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VendorExport {
    pub register: Register,
    pub measurements: Vec<VendorShot>,
}

/// A shot as a `"0101"` string or a `[0, 1, 0, 1]` array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VendorShot {
    Text(Bitstring),
    Sites(Vec<u8>),
}

impl VendorShot {
    fn to_bits(&self, index: usize) -> Result<Bitstring> {
        match self {
            VendorShot::Text(b) => Ok(b.clone()),
            VendorShot::Sites(v) => {
                let mut bools = Vec::with_capacity(v.len());
                for &x in v {
                    match x {
                        0 => bools.push(false),
                        1 => bools.push(true),
                        _ => {
                            return Err(Error::Record {
                                line: index + 1,
                                message: format!("site value {x} is not 0 or 1"),
                            })
                        }
                    }
                }
                Ok(Bitstring::from_bools(&bools))
            }
        }
    }
}

pub fn parse_vendor_export(text: &str, graph_id: &str) -> Result<(Register, Vec<ShotRecord>)> {
    let doc: VendorExport = serde_json::from_str(text)?;
    doc.register.validate()?;
    let records = doc
        .measurements
        .iter()
        .enumerate()
        .map(|(i, m)| {
            Ok(ShotRecord {
                graph_id: graph_id.to_string(),
                shot: i as u64,
                bits: m.to_bits(i)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok((doc.register, records))
}

/// Reads a shots document or a device export. The register is returned only
/// for exports.
pub fn read_shot_source(text: &str, graph_id: &str) -> Result<(Option<Register>, Vec<ShotRecord>)> {
    if let Ok(v) = serde_json::from_str::<serde_json::Value>(text) {
        if v.get("measurements").is_some() {
            let (reg, recs) = parse_vendor_export(text, graph_id)?;
            return Ok((Some(reg), recs));
        }
    }
    Ok((None, read_shots(Cursor::new(text))?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub graph_id: String,
    pub n: usize,
    pub mis_size: usize,
    /// Solver MIS the shots are calibrated against.
    pub reference: Bitstring,
    pub calibration: CalibrationReport,
    /// Shots heavier than the MIS.
    pub heavy_shots: Vec<u64>,
    pub shots: Vec<ShotRecord>,
}

/// Normalizes shots to `graph_id` and calibrates them against the MIS
/// witness of `g`.
pub fn ingest_measurements(g: &Graph, graph_id: &str, records: &[ShotRecord]) -> Result<IngestReport> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no shots to ingest".into()));
    }
    for r in records {
        if r.bits.len() != g.n() {
            return Err(Error::InvalidBitstring(format!(
                "shot {}: expected {} bits, found {}",
                r.shot,
                g.n(),
                r.bits.len()
            )));
        }
    }
    let mis = tarjan_mis(g);
    let bits: Vec<Bitstring> = records.iter().map(|r| r.bits.clone()).collect();
    let calibration = calibrate(&mis.witness, &bits)?;
    let heavy_shots = records
        .iter()
        .filter(|r| r.bits.weight() > mis.size)
        .map(|r| r.shot)
        .collect();
    let shots = records
        .iter()
        .map(|r| ShotRecord {
            graph_id: graph_id.to_string(),
            ..r.clone()
        })
        .collect();
    Ok(IngestReport {
        graph_id: graph_id.to_string(),
        n: g.n(),
        mis_size: mis.size,
        reference: mis.witness,
        calibration,
        heavy_shots,
        shots,
    })
}
