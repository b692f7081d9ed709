//! Bit-flip channel emulation and calibration of flip rates from
//! (ideal, measured) bitstring pairs.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::binary_entropy;
use crate::bitstring::Bitstring;
use crate::error::{Error, Result};

/// Per-site readout channel: a 0-site reads 1 with probability `p01`, a
/// 1-site reads 0 with probability `p10`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub p01: f64,
    pub p10: f64,
}

fn check_rate(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&value) {
        return Err(Error::InvalidProbability {
            name,
            value,
            lo: 0.0,
            hi: 0.5,
        });
    }
    Ok(())
}

fn check_fractions(f0: f64, f1: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&f0) || !(0.0..=1.0).contains(&f1) || (f0 + f1 - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "site fractions must be non-negative and sum to 1, got f0 = {f0}, f1 = {f1}"
        )));
    }
    Ok(())
}

impl NoiseModel {
    pub fn new(p01: f64, p10: f64) -> Result<Self> {
        let m = NoiseModel { p01, p10 };
        m.validate()?;
        Ok(m)
    }

    pub fn symmetric(p: f64) -> Result<Self> {
        Self::new(p, p)
    }

    pub fn validate(&self) -> Result<()> {
        check_rate("p01", self.p01)?;
        check_rate("p10", self.p10)
    }

    pub fn is_symmetric(&self) -> bool {
        self.p01 == self.p10
    }

    /// Entropy-matched symmetric rate for an ideal word with site fractions
    /// `f0`, `f1`.
    pub fn effective_rate(&self, f0: f64, f1: f64) -> Result<f64> {
        effective_rate(self.p01, self.p10, f0, f1)
    }
}

pub fn hamming_distance(a: &Bitstring, b: &Bitstring) -> Result<usize> {
    a.check_len(b)?;
    Ok(a.as_bitset().symmetric_difference_count(b.as_bitset()))
}

/// Random stream for one shot. Keyed by `(seed, shot_index)`; site `i`
/// consumes the `i`-th draw, so any partition of shots across workers
/// reproduces the same words.
pub fn shot_rng(seed: u64, shot_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot_index);
    rng
}

/// One noisy readout of `ideal`.
pub fn emulate_shot(ideal: &Bitstring, model: &NoiseModel, seed: u64, shot_index: u64) -> Bitstring {
    let mut rng = shot_rng(seed, shot_index);
    let mut out = ideal.clone();
    for i in 0..ideal.len() {
        let p = if ideal.get(i) { model.p10 } else { model.p01 };
        let u: f64 = rng.random();
        if u < p {
            out.flip(i);
        }
    }
    out
}

/// `shots` independent readouts of `ideal` through `model`.
pub fn apply_channel(
    ideal: &Bitstring,
    model: &NoiseModel,
    rng_seed: u64,
    shots: usize,
) -> Result<Vec<Bitstring>> {
    model.validate()?;
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    Ok((0..shots as u64)
        .into_par_iter()
        .map(|s| emulate_shot(ideal, model, rng_seed, s))
        .collect())
}

/// A rate estimate with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    /// The raw estimate exceeded 0.5 and was clipped.
    #[serde(default)]
    pub clipped: bool,
}

impl Estimate {
    fn from_counts(name: &str, flips: u64, trials: u64) -> Option<Estimate> {
        if trials == 0 {
            return None;
        }
        let raw = flips as f64 / trials as f64;
        let stderr = (raw * (1.0 - raw) / trials as f64).sqrt();
        let clipped = raw > 0.5;
        if clipped {
            log::warn!("{name} estimate {raw:.4} exceeds 0.5; clipped");
        }
        Some(Estimate {
            value: raw.min(0.5),
            stderr,
            clipped,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// Absent when the ideal word has no 0-sites.
    pub p01_hat: Option<Estimate>,
    /// Absent when the ideal word has no 1-sites.
    pub p10_hat: Option<Estimate>,
    pub f0: f64,
    pub f1: f64,
    pub p_eff: f64,
    pub shots: usize,
    pub flips01: u64,
    pub flips10: u64,
    /// Site-shot trials on 0-sites and 1-sites.
    pub trials0: u64,
    pub trials1: u64,
}

impl CalibrationReport {
    fn from_counts(shots: usize, flips01: u64, trials0: u64, flips10: u64, trials1: u64) -> Result<Self> {
        let total = (trials0 + trials1) as f64;
        let (f0, f1) = if total > 0.0 {
            (trials0 as f64 / total, trials1 as f64 / total)
        } else {
            (1.0, 0.0)
        };
        let p01_hat = Estimate::from_counts("p01", flips01, trials0);
        let p10_hat = Estimate::from_counts("p10", flips10, trials1);
        let p_eff = effective_rate(
            p01_hat.map_or(0.0, |e| e.value),
            p10_hat.map_or(0.0, |e| e.value),
            f0,
            f1,
        )?;
        Ok(CalibrationReport {
            p01_hat,
            p10_hat,
            f0,
            f1,
            p_eff,
            shots,
            flips01,
            flips10,
            trials0,
            trials1,
        })
    }
}

/// Counts 0→1 and 1→0 flips of every shot against `ideal`.
pub fn calibrate(ideal: &Bitstring, shots: &[Bitstring]) -> Result<CalibrationReport> {
    let counts = FlipCounts::collect(ideal, shots)?;
    counts.report()
}

#[derive(Clone, Copy, Debug, Default)]
struct FlipCounts {
    shots: usize,
    flips01: u64,
    trials0: u64,
    flips10: u64,
    trials1: u64,
}

impl FlipCounts {
    fn collect(ideal: &Bitstring, shots: &[Bitstring]) -> Result<Self> {
        if shots.is_empty() {
            return Err(Error::InvalidArgument("calibration needs at least one shot".into()));
        }
        let ones = ideal.weight() as u64;
        let zeros = ideal.len() as u64 - ones;
        let mut c = FlipCounts {
            shots: shots.len(),
            ..Default::default()
        };
        for shot in shots {
            let diff = ideal.xor(shot)?;
            let down = diff.as_bitset().intersection_count(ideal.as_bitset()) as u64;
            c.flips10 += down;
            c.flips01 += diff.weight() as u64 - down;
            c.trials0 += zeros;
            c.trials1 += ones;
        }
        Ok(c)
    }

    fn merge(self, other: FlipCounts) -> FlipCounts {
        FlipCounts {
            shots: self.shots + other.shots,
            flips01: self.flips01 + other.flips01,
            trials0: self.trials0 + other.trials0,
            flips10: self.flips10 + other.flips10,
            trials1: self.trials1 + other.trials1,
        }
    }

    fn report(&self) -> Result<CalibrationReport> {
        CalibrationReport::from_counts(self.shots, self.flips01, self.trials0, self.flips10, self.trials1)
    }
}

/// Calibration pooled across several instances, with the per-instance
/// breakdown kept alongside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PooledCalibration {
    pub pooled: CalibrationReport,
    pub per_group: Vec<(String, CalibrationReport)>,
}

pub fn calibrate_pooled(groups: &[(String, Bitstring, Vec<Bitstring>)]) -> Result<PooledCalibration> {
    if groups.is_empty() {
        return Err(Error::InvalidArgument("no calibration groups".into()));
    }
    let mut total = FlipCounts::default();
    let mut per_group = Vec::with_capacity(groups.len());
    for (label, ideal, shots) in groups {
        let c = FlipCounts::collect(ideal, shots)?;
        per_group.push((label.clone(), c.report()?));
        total = total.merge(c);
    }
    Ok(PooledCalibration {
        pooled: total.report()?,
        per_group,
    })
}

/// Symmetric rate whose binary entropy equals `f0*H2(p01) + f1*H2(p10)`,
/// found by bisection on `[0, 0.5]` to an absolute width of 1e-12.
pub fn effective_rate(p01: f64, p10: f64, f0: f64, f1: f64) -> Result<f64> {
    check_rate("p01", p01)?;
    check_rate("p10", p10)?;
    check_fractions(f0, f1)?;
    if p01 == p10 || f1 == 0.0 {
        return Ok(if f1 == 0.0 { p01 } else { p10 });
    }
    if f0 == 0.0 {
        return Ok(p10);
    }
    let target = f0 * binary_entropy(p01) + f1 * binary_entropy(p10);
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Second-order expansion of [`effective_rate`] about the weighted mean rate
/// `pbar = f0*p01 + f1*p10`. Returns `None` where `H2'(pbar)` vanishes or is
/// unbounded (`pbar` at 0.5 or 0) and the correction is nonzero.
pub fn effective_rate_second_order(p01: f64, p10: f64, f0: f64, f1: f64) -> Result<Option<f64>> {
    check_rate("p01", p01)?;
    check_rate("p10", p10)?;
    check_fractions(f0, f1)?;
    let pbar = f0 * p01 + f1 * p10;
    let dp = p01 - p10;
    let spread = f0 * f1 * dp * dp;
    if spread == 0.0 {
        return Ok(Some(pbar));
    }
    if pbar <= 0.0 || pbar >= 0.5 {
        return Ok(None);
    }
    let d1 = ((1.0 - pbar) / pbar).log2();
    let d2 = -1.0 / (std::f64::consts::LN_2 * pbar * (1.0 - pbar));
    Ok(Some(pbar + 0.5 * d2 / d1 * spread))
}

// ---------------------------------------------------------------------------
// Shots document: one JSON record per line.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotRecord {
    pub graph_id: String,
    pub shot: u64,
    pub bits: Bitstring,
}

pub fn read_shots<R: BufRead>(reader: R) -> Result<Vec<ShotRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ShotRecord = serde_json::from_str(&line).map_err(|e| Error::Record {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_shots<W: Write>(mut writer: W, records: &[ShotRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Bitstring {
        s.parse().unwrap()
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming_distance(&bits("101001101"), &bits("101010101")).unwrap(), 2);
        assert_eq!(hamming_distance(&bits("0110"), &bits("0110")).unwrap(), 0);
        assert_eq!(hamming_distance(&bits("0000"), &bits("1111")).unwrap(), 4);
        assert!(hamming_distance(&bits("01"), &bits("011")).is_err());
    }

    #[test]
    fn noiseless_channel_is_identity() {
        let ideal = bits("1010011");
        let shots = apply_channel(&ideal, &NoiseModel::symmetric(0.0).unwrap(), 3, 50).unwrap();
        assert!(shots.iter().all(|s| *s == ideal));
    }

    #[test]
    fn rates_outside_domain_are_rejected() {
        assert!(NoiseModel::new(1.0, 1.0).is_err());
        assert!(NoiseModel::new(-0.1, 0.1).is_err());
        assert!(NoiseModel::new(0.5, 0.5).is_ok());
        let bad = NoiseModel { p01: 1.0, p10: 1.0 };
        assert!(apply_channel(&bits("01"), &bad, 0, 1).is_err());
        assert!(apply_channel(&bits("01"), &NoiseModel::symmetric(0.1).unwrap(), 0, 0).is_err());
    }

    #[test]
    fn channel_is_seed_deterministic() {
        let ideal = bits("1010101010101");
        let m = NoiseModel::new(0.2, 0.3).unwrap();
        let a = apply_channel(&ideal, &m, 9, 200).unwrap();
        let b = apply_channel(&ideal, &m, 9, 200).unwrap();
        assert_eq!(a, b);
        let c = apply_channel(&ideal, &m, 10, 200).unwrap();
        assert_ne!(a, c);
        // any shot can be regenerated on its own
        assert_eq!(emulate_shot(&ideal, &m, 9, 137), a[137]);
    }

    #[test]
    fn hd_distribution_matches_binomial() {
        let n = 9;
        let p = 0.3;
        let shots = apply_channel(&Bitstring::zeros(n), &NoiseModel::symmetric(p).unwrap(), 1, 10_000)
            .unwrap();
        let hd: Vec<f64> = shots.iter().map(|s| s.weight() as f64).collect();
        let mean = hd.iter().sum::<f64>() / hd.len() as f64;
        let var = hd.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (hd.len() - 1) as f64;
        let target_var = n as f64 * p * (1.0 - p);
        let sigma_mean = (target_var / hd.len() as f64).sqrt();
        assert!((mean - 2.7).abs() < 3.0 * sigma_mean, "mean {mean}");
        assert!((var - target_var).abs() < 0.1 * target_var, "var {var}");
    }

    #[test]
    fn calibration_by_hand() {
        let r = calibrate(&bits("01"), &[bits("01"), bits("01"), bits("11"), bits("00")]).unwrap();
        assert_eq!(r.p01_hat.unwrap().value, 0.25);
        assert_eq!(r.p10_hat.unwrap().value, 0.25);
        assert_eq!((r.f0, r.f1), (0.5, 0.5));
        assert_eq!(r.shots, 4);
        assert_eq!(r.p_eff, 0.25);
    }

    #[test]
    fn calibration_noiseless() {
        let ideal = bits("0110");
        let r = calibrate(&ideal, &[ideal.clone(), ideal.clone()]).unwrap();
        assert_eq!(r.p01_hat.unwrap().value, 0.0);
        assert_eq!(r.p10_hat.unwrap().value, 0.0);
        assert_eq!(r.p_eff, 0.0);
    }

    #[test]
    fn calibration_missing_side() {
        let r = calibrate(&bits("000"), &[bits("010")]).unwrap();
        assert!(r.p10_hat.is_none());
        assert!((r.p01_hat.unwrap().value - 1.0 / 3.0).abs() < 1e-15);
        let r = calibrate(&bits("11"), &[bits("01")]).unwrap();
        assert!(r.p01_hat.is_none());
        assert_eq!(r.p10_hat.unwrap().value, 0.5);
        assert!(calibrate(&bits("11"), &[]).is_err());
        assert!(calibrate(&bits("11"), &[bits("1")]).is_err());
    }

    #[test]
    fn calibration_clips_above_half() {
        let r = calibrate(&bits("1"), &[bits("0"), bits("0"), bits("0"), bits("1")]).unwrap();
        let e = r.p10_hat.unwrap();
        assert!(e.clipped);
        assert_eq!(e.value, 0.5);
    }

    #[test]
    fn calibration_recovers_checkerboard_rates() {
        let ideal = Bitstring::from_indices(16, (0..16).filter(|i| (i / 4 + i % 4) % 2 == 0)).unwrap();
        let m = NoiseModel::new(0.33, 0.40).unwrap();
        let shots = apply_channel(&ideal, &m, 2024, 5000).unwrap();
        let r = calibrate(&ideal, &shots).unwrap();
        let e01 = r.p01_hat.unwrap();
        let e10 = r.p10_hat.unwrap();
        assert!((e01.value - 0.33).abs() < 3.0 * e01.stderr, "{e01:?}");
        assert!((e10.value - 0.40).abs() < 3.0 * e10.stderr, "{e10:?}");
    }

    #[test]
    fn pooled_calibration_sums_counts() {
        let g1 = ("a".to_string(), bits("01"), vec![bits("11"), bits("01")]);
        let g2 = ("b".to_string(), bits("0011"), vec![bits("0010")]);
        let p = calibrate_pooled(&[g1, g2]).unwrap();
        assert_eq!(p.per_group.len(), 2);
        assert_eq!(p.pooled.shots, 3);
        assert_eq!(p.pooled.flips01, 1);
        assert_eq!(p.pooled.flips10, 1);
        assert_eq!(p.pooled.trials0, 4);
        assert_eq!(p.pooled.trials1, 4);
    }

    #[test]
    fn effective_rate_examples() {
        assert_eq!(effective_rate(0.3, 0.3, 0.4, 0.6).unwrap(), 0.3);
        let p = effective_rate(0.2, 0.4, 0.5, 0.5).unwrap();
        assert!((p - 0.2735).abs() < 5e-4, "{p}");
        assert!(p < 0.3);
        assert!((binary_entropy(p) - 0.5 * (binary_entropy(0.2) + binary_entropy(0.4))).abs() < 1e-11);
        assert_eq!(effective_rate(0.2, 0.4, 1.0, 0.0).unwrap(), 0.2);
        assert_eq!(effective_rate(0.2, 0.4, 0.0, 1.0).unwrap(), 0.4);
        assert!(effective_rate(0.2, 0.6, 0.5, 0.5).is_err());
        assert!(effective_rate(0.2, 0.4, 0.5, 0.6).is_err());
    }

    #[test]
    fn effective_rate_device_regime() {
        // checkerboard-like MIS fractions on the measured rates
        let p = effective_rate(0.33, 0.40, 0.5, 0.5).unwrap();
        assert!((p - 0.36).abs() < 0.02, "{p}");
    }

    #[test]
    fn effective_rate_monotone() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.05).collect();
        for &other in &grid {
            let mut prev = -1.0;
            for &p in &grid {
                let e = effective_rate(p, other, 0.6, 0.4).unwrap();
                assert!(e >= prev - 1e-12);
                prev = e;
            }
            let mut prev = -1.0;
            for &p in &grid {
                let e = effective_rate(other, p, 0.6, 0.4).unwrap();
                assert!(e >= prev - 1e-12);
                prev = e;
            }
        }
    }

    #[test]
    fn second_order_examples() {
        assert_eq!(effective_rate_second_order(0.3, 0.3, 0.5, 0.5).unwrap(), Some(0.3));
        assert_eq!(effective_rate_second_order(0.2, 0.4, 1.0, 0.0).unwrap(), Some(0.2));
        let approx = effective_rate_second_order(0.2, 0.4, 0.5, 0.5).unwrap().unwrap();
        let exact = effective_rate(0.2, 0.4, 0.5, 0.5).unwrap();
        assert!(approx < 0.3);
        assert!((approx - exact).abs() < 0.2f64.powi(4), "{approx} vs {exact}");
        assert_eq!(effective_rate_second_order(0.5, 0.5, 0.5, 0.5).unwrap(), Some(0.5));
        assert_eq!(effective_rate_second_order(0.4, 0.5, 0.0, 1.0).unwrap(), Some(0.5));
        assert!(effective_rate_second_order(0.5, 0.5, 0.3, 0.7).unwrap().is_some());
    }

    #[test]
    fn second_order_undefined_at_half() {
        // pbar = 0.5 with nonzero spread is impossible inside the domain, so
        // exercise the zero end instead: pbar -> 0 needs both rates 0.
        assert_eq!(effective_rate_second_order(0.0, 0.0, 0.5, 0.5).unwrap(), Some(0.0));
    }

    #[test]
    fn shots_document_round_trip_and_errors() {
        let recs = vec![
            ShotRecord {
                graph_id: "g".into(),
                shot: 0,
                bits: bits("0101"),
            },
            ShotRecord {
                graph_id: "g".into(),
                shot: 1,
                bits: bits("0111"),
            },
        ];
        let mut buf = Vec::new();
        write_shots(&mut buf, &recs).unwrap();
        assert_eq!(read_shots(buf.as_slice()).unwrap(), recs);
        let bad = "{\"graph_id\":\"g\",\"shot\":0,\"bits\":\"01\"}\n{\"graph_id\":\"g\",\"shot\":1}\n";
        match read_shots(bad.as_bytes()) {
            Err(Error::Record { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
