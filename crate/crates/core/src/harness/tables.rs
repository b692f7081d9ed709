use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analytics::{binary_entropy, brute_force_base, fit_exponent_base, iqr, median, pruned_base, pruned_c0, search_volume};
use crate::error::{Error, Result};

use super::campaign::{Method, ResultRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    /// `(n, median ops, IQR, T(n, p_eff))` per noise point.
    Scaling,
    /// `(p_eff, median ops, T(n, p_eff))` per geometry.
    RateSweep,
    /// `(p, c_emp, stderr, c_BF, c_th)` from Tarjan-DEM node counts.
    Exponent,
}

impl TableKind {
    pub fn name(self) -> &'static str {
        match self {
            TableKind::Scaling => "scaling",
            TableKind::RateSweep => "rate_sweep",
            TableKind::Exponent => "exponent",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub kind: TableKind,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Values of one column.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}

/// Total order key for a float column.
fn key(x: f64) -> u64 {
    // non-negative rates: bit patterns order like the values
    x.to_bits()
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    s / c as f64
}

/// `T(n, p)` plus the leading-order curves `2^(n*H2(p))` and
/// `2^(n*H2(p)) / sqrt(2*pi*n*p*(1-p))`; the last is empty at `p = 0`.
fn theory(n: usize, p: f64) -> Result<[String; 3]> {
    let m = search_volume(n, p.min(0.5))?;
    let h2 = (n as f64 * binary_entropy(p.min(0.5))).exp2();
    let asymptotic = m.log2_t_asymptotic.map_or_else(String::new, |l| l.exp2().to_string());
    Ok([m.t().to_string(), h2.to_string(), asymptotic])
}

pub fn emit_tables(rows: &[ResultRow], kind: TableKind) -> Result<Table> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no rows".into()));
    }
    let method = match kind {
        TableKind::Scaling | TableKind::RateSweep => Method::BfDem,
        TableKind::Exponent => Method::TarjanDem,
    };
    let rows: Vec<&ResultRow> = rows.iter().filter(|r| r.method == method).collect();
    if rows.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} table needs {} rows",
            kind.name(),
            match method {
                Method::BfDem => "bf_dem",
                Method::TarjanDem => "tarjan_dem",
            }
        )));
    }
    match kind {
        TableKind::Scaling => scaling(&rows),
        TableKind::RateSweep => rate_sweep(&rows),
        TableKind::Exponent => exponent(&rows),
    }
}

fn scaling(rows: &[&ResultRow]) -> Result<Table> {
    let mut groups: BTreeMap<(u64, u64, usize), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((key(r.p01), key(r.p10), r.n)).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((_, _, n), g) in groups {
        let ops: Vec<f64> = g.iter().map(|r| r.cost() as f64).collect();
        let p_eff = mean(g.iter().map(|r| r.p_eff));
        let mut row = vec![
            g[0].p01.to_string(),
            g[0].p10.to_string(),
            p_eff.to_string(),
            n.to_string(),
            ops.len().to_string(),
            median(&ops).to_string(),
            iqr(&ops).to_string(),
        ];
        row.extend(theory(n, p_eff)?);
        out.push(row);
    }
    Ok(Table {
        kind: TableKind::Scaling,
        header: vec![
            "p01",
            "p10",
            "p_eff",
            "n",
            "shots",
            "median_ops",
            "iqr_ops",
            "theory_t",
            "theory_h2",
            "theory_asymptotic",
        ],
        rows: out,
    })
}

fn rate_sweep(rows: &[&ResultRow]) -> Result<Table> {
    type Key = (String, u64, usize, u64, u64);
    let mut groups: BTreeMap<Key, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        let family = r.family.map_or_else(|| r.graph_id.clone(), |f| f.name().to_string());
        let ff = key(r.filling_fraction.unwrap_or(f64::NAN));
        groups
            .entry((family, ff, r.n, key(r.p01), key(r.p10)))
            .or_default()
            .push(r);
    }
    let mut out = Vec::new();
    for ((family, _, n, _, _), g) in groups {
        let ops: Vec<f64> = g.iter().map(|r| r.cost() as f64).collect();
        let p_eff = mean(g.iter().map(|r| r.p_eff));
        let ff = g[0].filling_fraction.map_or_else(String::new, |f| f.to_string());
        let mut row = vec![
            family,
            ff,
            n.to_string(),
            g[0].p01.to_string(),
            g[0].p10.to_string(),
            p_eff.to_string(),
            ops.len().to_string(),
            median(&ops).to_string(),
        ];
        row.extend(theory(n, p_eff)?);
        out.push(row);
    }
    Ok(Table {
        kind: TableKind::RateSweep,
        header: vec![
            "geometry",
            "filling_fraction",
            "n",
            "p01",
            "p10",
            "p_eff",
            "shots",
            "median_ops",
            "theory_t",
            "theory_h2",
            "theory_asymptotic",
        ],
        rows: out,
    })
}

fn exponent(rows: &[&ResultRow]) -> Result<Table> {
    let mut groups: BTreeMap<(u64, u64), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((key(r.p01), key(r.p10))).or_default().push(r);
    }
    let mut out = Vec::new();
    for g in groups.values() {
        let p = mean(g.iter().map(|r| r.p_eff));
        let points: Vec<(usize, f64)> = g.iter().map(|r| (r.n, r.cost() as f64)).collect();
        let fit = match fit_exponent_base(&points, p) {
            Ok(f) => f,
            Err(e) => {
                log::warn!("no exponent fit at p01={} p10={}: {e}", g[0].p01, g[0].p10);
                continue;
            }
        };
        out.push(vec![
            g[0].p01.to_string(),
            g[0].p10.to_string(),
            p.to_string(),
            fit.points.len().to_string(),
            fit.c_emp.to_string(),
            (fit.c_emp * fit.stderr).to_string(),
            brute_force_base(p).to_string(),
            pruned_base(p, pruned_c0())?.to_string(),
        ]);
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument(
            "exponent table needs at least 3 sizes per noise point".into(),
        ));
    }
    Ok(Table {
        kind: TableKind::Exponent,
        header: vec!["p01", "p10", "p", "sizes", "c_emp", "stderr", "c_bf", "c_th"],
        rows: out,
    })
}
