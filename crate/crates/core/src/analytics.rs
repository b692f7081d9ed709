//! Closed-form cost model for Hamming-ball search.
//!
//! The number of candidates within radius `r` of a word of length `n` is the
//! cumulative binomial sum `sum_{k<=r} C(n, k)`, which equals
//! `2^n * I_{1/2}(n - r, r + 1)`. For `r ~ n*p` its size is
//! `2^(n*H2(p)) / sqrt(2*pi*n*p*(1-p))` to leading order.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest `n` for which [`search_volume`] sums binomials exactly.
pub const EXACT_CAP: usize = 10_000;

/// `c0` of the pruning-aware interpolation, `2^(1/3)`.
pub fn pruned_c0() -> f64 {
    2f64.powf(1.0 / 3.0)
}

/// Binary entropy in bits. `H2(0) = H2(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p), "p = {p}");
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

fn check_p(p: f64, hi: f64) -> Result<()> {
    if !(0.0..=hi).contains(&p) {
        return Err(Error::InvalidProbability {
            name: "p",
            value: p,
            lo: 0.0,
            hi,
        });
    }
    Ok(())
}

/// `n*p` snapped to the nearest integer when it is within rounding noise of
/// one, so that `9 * (2/9)` counts as 2.
fn scaled(n: usize, p: f64) -> f64 {
    let x = n as f64 * p;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.max(1.0) {
        r
    } else {
        x
    }
}

/// `ceil(n*p)`, the radius used by the search-volume model.
pub fn ceil_radius(n: usize, p: f64) -> usize {
    scaled(n, p).ceil() as usize
}

/// `floor(n*p)`, the radius used by the effective-search-space bound.
pub fn floor_radius(n: usize, p: f64) -> usize {
    scaled(n, p).floor() as usize
}

/// Exact `sum_{k=0}^{r} C(n, k)`.
pub fn ball_volume_exact(n: usize, r: usize) -> BigUint {
    let mut term = BigUint::one();
    let mut total = BigUint::one();
    for k in 0..r.min(n) {
        term = term * BigUint::from(n - k) / BigUint::from(k + 1);
        total += &term;
    }
    total
}

pub fn log2_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().expect("fits in 64 bits") as f64).log2();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("fits in 64 bits");
    (top as f64).log2() + shift as f64
}

/// `log2` of the cumulative binomial sum, by way of the incomplete beta
/// function. Works for any `n`.
pub fn log2_ball_volume(n: usize, r: usize) -> f64 {
    if r >= n {
        return n as f64;
    }
    if r == 0 {
        return 0.0;
    }
    let ln_i = ln_beta_reg((n - r) as f64, (r + 1) as f64, 0.5);
    n as f64 + ln_i / std::f64::consts::LN_2
}

// ---------------------------------------------------------------------------
// Regularized incomplete beta
// ---------------------------------------------------------------------------

/// Relative convergence tolerance of the continued fraction.
const CF_TOL: f64 = 1e-13;
const CF_MAX_ITER: usize = 100_000;
const CF_TINY: f64 = 1e-300;

/// Continued fraction for `I_x(a, b)` (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_TOL {
            break;
        }
    }
    h
}

/// `ln I_x(a, b)` for `a, b > 0`, `x` in `[0, 1]`, without underflow.
pub fn ln_beta_reg(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0 && (0.0..=1.0).contains(&x));
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    if x == 1.0 {
        return 0.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front + beta_cf(a, b, x).ln() - a.ln()
    } else {
        let tail = (ln_front + beta_cf(b, a, 1.0 - x).ln() - b.ln()).exp();
        (-tail).ln_1p()
    }
}

pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    ln_beta_reg(a, b, x).exp()
}

// ---------------------------------------------------------------------------
// Search volume and effective search space
// ---------------------------------------------------------------------------

mod biguint_string {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.collect_str(x),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigUint>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        s.map(|s| s.parse().map_err(serde::de::Error::custom)).transpose()
    }
}

/// Cost of a Hamming-ball search of radius `ceil(n*p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub n: usize,
    pub p: f64,
    pub radius: usize,
    /// Exact volume; absent above [`EXACT_CAP`].
    #[serde(with = "biguint_string")]
    pub t_exact: Option<BigUint>,
    pub log2_t_exact: f64,
    /// Leading-order estimate; absent at `p = 0`.
    pub log2_t_asymptotic: Option<f64>,
    /// `log2(2^n * I_{1/2}(n - r, r + 1))`.
    pub log2_t_identity: f64,
}

impl CostModel {
    /// The volume as a float (may be infinite for very large `n`).
    pub fn t(&self) -> f64 {
        self.t_exact
            .as_ref()
            .and_then(|t| t.to_f64())
            .unwrap_or_else(|| self.log2_t_exact.exp2())
    }
}

/// Leading-order `log2` of a ball of relative radius `p`:
/// `n*H2(p) - log2(2*pi*n*p*(1-p)) / 2`.
pub fn log2_volume_asymptotic(n: usize, p: f64) -> Option<f64> {
    if p <= 0.0 || p > 0.5 || n == 0 {
        return None;
    }
    let nf = n as f64;
    Some(nf * binary_entropy(p) - 0.5 * (2.0 * std::f64::consts::PI * nf * p * (1.0 - p)).log2())
}

pub fn search_volume(n: usize, p: f64) -> Result<CostModel> {
    search_volume_capped(n, p, EXACT_CAP)
}

pub fn search_volume_capped(n: usize, p: f64, exact_cap: usize) -> Result<CostModel> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    check_p(p, 0.5)?;
    let radius = ceil_radius(n, p);
    let identity = log2_ball_volume(n, radius);
    let t_exact = (n <= exact_cap).then(|| ball_volume_exact(n, radius));
    let log2_t_exact = t_exact.as_ref().map_or(identity, log2_biguint);
    Ok(CostModel {
        n,
        p,
        radius,
        t_exact,
        log2_t_exact,
        log2_t_asymptotic: log2_volume_asymptotic(n, p),
        log2_t_identity: identity,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSearchSpace {
    pub n: usize,
    pub p: f64,
    /// `floor(n*p)`.
    pub radius: usize,
    pub log2_m_eff: f64,
    /// `log2` of the exact ball volume at `radius`.
    pub log2_exact: f64,
}

pub fn effective_search_space(n: usize, p: f64) -> Result<EffectiveSearchSpace> {
    if !(p > 0.0 && p <= 0.5) {
        return Err(Error::InvalidProbability {
            name: "p",
            value: p,
            lo: 0.0,
            hi: 0.5,
        });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let radius = floor_radius(n, p);
    Ok(EffectiveSearchSpace {
        n,
        p,
        radius,
        log2_m_eff: log2_volume_asymptotic(n, p).expect("p in (0, 0.5]"),
        log2_exact: log2_ball_volume(n, radius),
    })
}

/// `c0^H2(p)`: the per-vertex branching base once the search is restricted to
/// the entropy-sized ball.
pub fn pruned_base(p: f64, c0: f64) -> Result<f64> {
    check_p(p, 0.5)?;
    if !(c0 > 1.0 && c0 <= 2.0) {
        return Err(Error::InvalidArgument(format!("c0 must lie in (1, 2], got {c0}")));
    }
    Ok(c0.powf(binary_entropy(p)))
}

/// Brute-force reference base `2^H2(p)`.
pub fn brute_force_base(p: f64) -> f64 {
    2f64.powf(binary_entropy(p))
}

// ---------------------------------------------------------------------------
// Summary statistics and exponent fits
// ---------------------------------------------------------------------------

/// Linear-interpolation quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Interquartile range.
pub fn iqr(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub p: f64,
    pub ln_c_emp: f64,
    pub c_emp: f64,
    pub intercept: f64,
    /// Standard error of `ln_c_emp`.
    pub stderr: f64,
    /// `(n, median cost)` pairs the line was fitted to.
    pub points: Vec<(usize, f64)>,
}

/// Ordinary least squares of `y` on `x`: `(slope, intercept, slope stderr)`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let m = x.len();
    if m != y.len() || m < 2 {
        return Err(Error::InvalidArgument("regression needs at least two points".into()));
    }
    let mf = m as f64;
    let mx = x.iter().sum::<f64>() / mf;
    let my = y.iter().sum::<f64>() / mf;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("degenerate design: all x equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if m > 2 {
        let ssr: f64 = x
            .iter()
            .zip(y)
            .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
            .sum();
        (ssr / (mf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, intercept, stderr))
}

/// Fits `ln(cost) = n * ln(c) + const` to the per-`n` medians of `points`.
pub fn fit_exponent_base(points: &[(usize, f64)], p: f64) -> Result<ExponentFit> {
    if let Some(&(n, c)) = points.iter().find(|&&(_, c)| !(c >= 1.0)) {
        return Err(Error::InvalidArgument(format!("cost {c} at n = {n} is below 1")));
    }
    let mut by_n: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    for &(n, c) in points {
        by_n.entry(n).or_default().push(c);
    }
    if by_n.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 distinct sizes, got {}",
            by_n.len()
        )));
    }
    let medians: Vec<(usize, f64)> = by_n.iter().map(|(&n, c)| (n, median(c))).collect();
    let x: Vec<f64> = medians.iter().map(|&(n, _)| n as f64).collect();
    let y: Vec<f64> = medians.iter().map(|&(_, c)| c.ln()).collect();
    let (slope, intercept, stderr) = ols(&x, &y)?;
    Ok(ExponentFit {
        p,
        ln_c_emp: slope,
        c_emp: slope.exp(),
        intercept,
        stderr,
        points: medians,
    })
}

// ---------------------------------------------------------------------------
// Breakeven size
// ---------------------------------------------------------------------------

/// Largest system size scanned by [`breakeven_size`].
pub const BREAKEVEN_MAX_N: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakevenReport {
    pub p_eff: f64,
    pub budget_ops: f64,
    /// Smallest `N` with `log2 T(N, 0.5) - log2 T(N, p_eff) >= log2(budget)`:
    /// the cost ratio against the uninformed search meets the budget.
    pub ratio_n: Option<usize>,
    /// Smallest `N` with `T(N, 0.5) - T(N, p_eff) >= budget`, taken literally.
    pub difference_n: Option<usize>,
}

/// Cost gap between an uninformed (`p = 0.5`) and an informed search.
/// Returns `(log2 ratio, log2 difference)`.
pub fn log2_cost_gap(n: usize, p_eff: f64) -> (f64, f64) {
    let full = log2_ball_volume(n, ceil_radius(n, 0.5));
    let informed = log2_ball_volume(n, ceil_radius(n, p_eff));
    let ratio = full - informed;
    // log2(2^a - 2^b) = a + log2(1 - 2^(b - a))
    let diff = if ratio <= 0.0 {
        f64::NEG_INFINITY
    } else {
        full + (-(-ratio).exp2()).ln_1p() / std::f64::consts::LN_2
    };
    (ratio, diff)
}

pub fn breakeven_size(p_eff: f64, budget_ops: f64) -> Result<BreakevenReport> {
    if !(p_eff > 0.0 && p_eff < 0.5) {
        return Err(Error::InvalidProbability {
            name: "p_eff",
            value: p_eff,
            lo: 0.0,
            hi: 0.5,
        });
    }
    if !(budget_ops > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "budget must be positive, got {budget_ops}"
        )));
    }
    let target = budget_ops.log2();
    let mut ratio_n = None;
    let mut difference_n = None;
    for n in 1..=BREAKEVEN_MAX_N {
        let (ratio, diff) = log2_cost_gap(n, p_eff);
        if difference_n.is_none() && diff >= target {
            difference_n = Some(n);
        }
        if ratio_n.is_none() && ratio >= target {
            ratio_n = Some(n);
        }
        if ratio_n.is_some() && difference_n.is_some() {
            break;
        }
    }
    Ok(BreakevenReport {
        p_eff,
        budget_ops,
        ratio_n,
        difference_n,
    })
}
