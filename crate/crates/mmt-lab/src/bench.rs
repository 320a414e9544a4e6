//! Numerical spot-checks of the dyadic geometric-measure bounds that stand
//! behind the bilinear and trilinear multiplier estimates used in the
//! threshold results.
//!
//! The operator-norm machinery itself is out of scope; what is checked is
//! the layer its proofs reduce to — planar (or linear) measures of level
//! sets of the resonance sum
//!
//! ```text
//! g(xi_a, xi_b) = s_a |xi_a|^alpha + s_b |xi_b|^alpha
//!                 + s_c |xi - xi_a - xi_b|^alpha ,
//! ```
//!
//! over products of frequency intervals, within a modulation window
//! `|g - tau| <= L`. Each case tag fixes an interval geometry on the
//! zero-sum frequency hyperplane (annuli for the pair interactions, short
//! localization boxes for the triple ones), the sign pattern `(s_a, s_b,
//! s_c)`, and a closed-form bound whose *scaling* in `(N, L)` is the
//! content under test. Implicit constants are calibrated on the smallest
//! `N` of each sweep and frozen with a 25% margin; the sweep then tests the
//! dyadic scaling.
//!
//! Sign patterns per case (the alternating pattern of the resonance sum,
//! with the slot of the fixed/eliminated variable absorbed into `tau`):
//!
//! | case | free pair        | signs (a, b, determined) |
//! |------|------------------|--------------------------|
//! | b1   | (big, small)     | (+, +, -)                |
//! | b2   | (small, big)     | (+, -, +)                |
//! | b3   | (big, big)       | (+, -, +)                |
//! | b4   | (big, small)     | (+, +, -)                |
//! | b5   | (big, small)     | (+, +, -)                |
//! | t1   | (tiny, medium)   | (-, +, -)                |
//! | t2   | (big, tiny)      | (+, -, +)                |
//! | t3   | (medium, tiny)   | (+, -, -)                |

use crate::spectral::abs_pow;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BenchError {
    #[error("value {0} is not a positive power of two")]
    NotDyadic(f64),
    #[error("unknown case tag {0:?}")]
    UnknownCase(String),
    #[error("no admissible sample found: {0}")]
    InfeasibleConfig(String),
}

/// True for exact powers of two (including negative powers).
///
/// ```
/// use mmt_lab::bench::is_dyadic;
/// assert!(is_dyadic(64.0) && is_dyadic(0.25));
/// assert!(!is_dyadic(48.0));
/// ```
pub fn is_dyadic(x: f64) -> bool {
    x > 0.0 && x.is_finite() && (x.log2() - x.log2().round()).abs() < 1e-12
}

/// Dyadic frequency/modulation scales for one configuration.
#[derive(Debug, Clone, Serialize)]
pub struct DyadicConfig {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub n4: Option<f64>,
    pub l_levels: Vec<f64>,
    pub alpha: f64,
}

impl DyadicConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        for &v in [self.n1, self.n2, self.n3]
            .iter()
            .chain(self.n4.iter())
            .chain(self.l_levels.iter())
        {
            if !is_dyadic(v) {
                return Err(BenchError::NotDyadic(v));
            }
        }
        Ok(())
    }
}

/// A deterministic grid-counting measure value with a discretization-error
/// estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Range report for the resonance sum `h = |xi1|^a - |xi2|^a + |xi3|^a` on
/// the zero-sum plane with `|xi_j|` in the dyadic annulus `[N_j, 2N_j)`.
#[derive(Debug, Clone, Serialize)]
pub struct HRangeReport {
    pub alpha: f64,
    pub samples_used: usize,
    /// min of `|h| / (N_max^(alpha-1) N_min)`.
    pub min_lower_ratio: f64,
    /// max of `|h| / N_max^alpha`.
    pub max_upper_ratio: f64,
    /// Batch-scatter of the lower-ratio minimum (10 batches).
    pub stderr: f64,
    pub lower_c: f64,
    pub upper_c: f64,
    pub pass: bool,
}

/// Monte-Carlo check that `N_max^(alpha-1) N_min <~ |h| <~ N_max^alpha` on
/// the constrained annuli. The frozen constants are `0.25 (alpha - 1)`
/// below (the mean-value-theorem coefficient with annulus slop) and `9`
/// above (triangle inequality with annulus slop).
pub fn h_range_check(
    cfg: &DyadicConfig,
    samples: usize,
    seed: u64,
) -> Result<HRangeReport, BenchError> {
    cfg.validate()?;
    assert!(samples >= 1000);
    let alpha = cfg.alpha;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_max = cfg.n1.max(cfg.n2).max(cfg.n3);
    let n_min = cfg.n1.min(cfg.n2).min(cfg.n3);
    let lower_scale = abs_pow(n_max, alpha - 1.0) * n_min;
    let upper_scale = abs_pow(n_max, alpha);

    let mut batch_mins = Vec::new();
    let mut min_lower = f64::INFINITY;
    let mut max_upper = 0.0f64;
    let mut used = 0usize;
    let mut attempts = 0usize;
    let mut batch_min = f64::INFINITY;
    while used < samples {
        attempts += 1;
        if attempts > 1_000_000 && used == 0 {
            return Err(BenchError::InfeasibleConfig(format!(
                "no zero-sum triple with annuli ({}, {}, {})",
                cfg.n1, cfg.n2, cfg.n3
            )));
        }
        let draw = |rng: &mut ChaCha8Rng, n: f64| {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            sign * rng.gen_range(n..2.0 * n)
        };
        let x1 = draw(&mut rng, cfg.n1);
        let x2 = draw(&mut rng, cfg.n2);
        let x3 = -x1 - x2;
        if !(cfg.n3..2.0 * cfg.n3).contains(&x3.abs()) {
            continue;
        }
        used += 1;
        let h = abs_pow(x1, alpha) - abs_pow(x2, alpha) + abs_pow(x3, alpha);
        let lower_ratio = h.abs() / lower_scale;
        min_lower = min_lower.min(lower_ratio);
        batch_min = batch_min.min(lower_ratio);
        max_upper = max_upper.max(h.abs() / upper_scale);
        if used % (samples / 10).max(1) == 0 {
            batch_mins.push(batch_min);
            batch_min = f64::INFINITY;
        }
    }
    let mean = batch_mins.iter().sum::<f64>() / batch_mins.len() as f64;
    let var = batch_mins.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / batch_mins.len() as f64;
    let lower_c = 0.25 * (alpha - 1.0);
    let upper_c = 9.0;
    Ok(HRangeReport {
        alpha,
        samples_used: used,
        min_lower_ratio: min_lower,
        max_upper_ratio: max_upper,
        stderr: (var / batch_mins.len() as f64).sqrt(),
        lower_c,
        upper_c,
        pass: min_lower >= lower_c && max_upper <= upper_c,
    })
}

/// Grid-counting estimate of the planar measure of
/// `{(xi_a, xi_b) in A x B : |g(xi_a, xi_b) - tau| <= l}` with the signed
/// resonance sum `g` defined at module level. Cells are squares of side
/// `min(|A|, |B|) / resolution`; `stderr` is half the spread between the
/// counts at windows `l -/+ (Lipschitz margin)`, a deterministic
/// discretization bound.
#[allow(clippy::too_many_arguments)]
pub fn level_set_measure(
    a: (f64, f64),
    b: (f64, f64),
    signs: [i8; 3],
    xi: f64,
    tau: f64,
    l: f64,
    alpha: f64,
    resolution: usize,
) -> MeasureEstimate {
    assert!(a.1 > a.0 && b.1 > b.0 && l > 0.0 && resolution >= 2);
    let g = |xa: f64, xb: f64| -> f64 {
        signs[0] as f64 * abs_pow(xa, alpha)
            + signs[1] as f64 * abs_pow(xb, alpha)
            + signs[2] as f64 * abs_pow(xi - xa - xb, alpha)
    };
    let wa = a.1 - a.0;
    let wb = b.1 - b.0;
    let cell = wa.min(wb) / resolution as f64;
    let na = (wa / cell).round() as usize;
    let nb = (wb / cell).round() as usize;

    // Lipschitz margin from coarse finite differences
    let mut lip = 0.0f64;
    let coarse = 16;
    for i in 0..coarse {
        for j in 0..coarse {
            let xa = a.0 + (i as f64 + 0.5) * wa / coarse as f64;
            let xb = b.0 + (j as f64 + 0.5) * wb / coarse as f64;
            let d = cell.min(wa.min(wb) / 100.0);
            let gx = (g(xa + d, xb) - g(xa - d, xb)).abs() / (2.0 * d);
            let gy = (g(xa, xb + d) - g(xa, xb - d)).abs() / (2.0 * d);
            lip = lip.max(gx.hypot(gy));
        }
    }
    let margin = lip * cell * std::f64::consts::SQRT_2 / 2.0;

    let mut hits = 0usize;
    let mut inner = 0usize;
    let mut outer = 0usize;
    for i in 0..na {
        let xa = a.0 + (i as f64 + 0.5) * cell;
        for j in 0..nb {
            let xb = b.0 + (j as f64 + 0.5) * cell;
            let dev = (g(xa, xb) - tau).abs();
            if dev <= l {
                hits += 1;
            }
            if dev <= l - margin {
                inner += 1;
            }
            if dev <= l + margin {
                outer += 1;
            }
        }
    }
    let area = cell * cell;
    MeasureEstimate {
        value: hits as f64 * area,
        stderr: (outer - inner) as f64 * area / 2.0,
        samples: na * nb,
        seed: 0,
    }
}

/// One case of the measure-level estimate sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    /// Pair interaction, largest modulation on the first factor, first
    /// frequency comparable to the largest; measured over (big, small).
    B1,
    /// Pair interaction, two largest frequencies on the non-measured slots.
    B2,
    /// Pair interaction, all three frequencies comparable.
    B3,
    /// Pair interaction, largest modulation on the middle factor, separated
    /// smallest frequency.
    B4,
    /// Pair interaction, dominant modulations much larger than the
    /// resonance sum; trivial box bound.
    B5,
    /// Triple interaction, dominant modulations above the resonance level;
    /// trivial box bound over the two smallest slots.
    T1,
    /// Triple interaction, outer frequencies comparable to the largest,
    /// resonance-sized modulation on an inner slot.
    T2,
    /// Triple interaction, remaining resonance-dominated regimes.
    T3,
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseTag::B1 => "b1",
            CaseTag::B2 => "b2",
            CaseTag::B3 => "b3",
            CaseTag::B4 => "b4",
            CaseTag::B5 => "b5",
            CaseTag::T1 => "t1",
            CaseTag::T2 => "t2",
            CaseTag::T3 => "t3",
        };
        f.write_str(s)
    }
}

impl FromStr for CaseTag {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, BenchError> {
        Ok(match s {
            "b1" => CaseTag::B1,
            "b2" => CaseTag::B2,
            "b3" => CaseTag::B3,
            "b4" => CaseTag::B4,
            "b5" => CaseTag::B5,
            "t1" => CaseTag::T1,
            "t2" => CaseTag::T2,
            "t3" => CaseTag::T3,
            other => return Err(BenchError::UnknownCase(other.to_string())),
        })
    }
}

pub const ALL_CASES: [CaseTag; 8] = [
    CaseTag::B1,
    CaseTag::B2,
    CaseTag::B3,
    CaseTag::B4,
    CaseTag::B5,
    CaseTag::T1,
    CaseTag::T2,
    CaseTag::T3,
];

/// Interval geometry + bound form of one case at scales `(n, l)`.
struct CaseGeometry {
    a: (f64, f64),
    b: (f64, f64),
    signs: [i8; 3],
    xi: f64,
    bound: f64,
}

fn case_geometry(tag: CaseTag, alpha: f64, n: f64, l: f64) -> CaseGeometry {
    match tag {
        // big free variable in [n, 2n], small companion in [2, 4], third
        // determined near -n; bound n * min(n_min, l * n^(1-alpha))
        CaseTag::B1 | CaseTag::B4 => CaseGeometry {
            a: (n, 2.0 * n),
            b: (2.0, 4.0),
            signs: [1, 1, -1],
            xi: 0.0,
            bound: n * (2.0f64).min(l * abs_pow(n, 1.0 - alpha)),
        },
        // small slot free in [2, 4], two big slots; bound
        // n * min(n_min, n^(2-alpha) l / n_min)
        CaseTag::B2 => CaseGeometry {
            a: (2.0, 4.0),
            b: (n, 2.0 * n),
            signs: [1, -1, 1],
            xi: 0.0,
            bound: n * (2.0f64).min(abs_pow(n, 2.0 - alpha) * l / 2.0),
        },
        // all comparable; trivial bound n_max * n_min ~ n^2
        CaseTag::B3 => CaseGeometry {
            a: (n, 2.0 * n),
            b: (n, 2.0 * n),
            signs: [1, -1, 1],
            xi: 0.0,
            bound: n * n,
        },
        CaseTag::B5 => CaseGeometry {
            a: (n, 2.0 * n),
            b: (2.0, 4.0),
            signs: [1, 1, -1],
            xi: 0.0,
            bound: n * 2.0,
        },
        // free (tiny, medium) boxes, fixed big at 1.5n; bound n_min * n_med
        CaseTag::T1 => CaseGeometry {
            a: (1.0, 2.0),
            b: (0.25 * n, 0.5 * n),
            signs: [-1, 1, -1],
            xi: -1.5 * n,
            bound: 1.0 * 0.25 * n,
        },
        // outer pair at n_max, fixed medium at 0.75n; bound
        // l * n_min^(1/3) n_med^(1/3) n_max^(4/3 - alpha)
        CaseTag::T2 => CaseGeometry {
            a: (1.375 * n, 1.625 * n),
            b: (1.0, 2.0),
            signs: [1, -1, 1],
            xi: -0.75 * n,
            bound: l * (0.5 * n).powf(1.0 / 3.0) * abs_pow(n, 4.0 / 3.0 - alpha),
        },
        // comparable pair on slots 1 and 2, fixed big at 1.5n; bound
        // l * n_min^(1/2) n_max^(3/2 - alpha)
        CaseTag::T3 => CaseGeometry {
            a: (0.25 * n, 0.5 * n),
            b: (1.0, 2.0),
            signs: [1, -1, -1],
            xi: -1.5 * n,
            bound: l * abs_pow(n, 1.5 - alpha),
        },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub n: f64,
    pub l: f64,
    pub measured: f64,
    pub bound: f64,
    /// `measured / (calibration * bound)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub case: CaseTag,
    pub alpha: f64,
    pub calibration_constant: f64,
    pub worst_ratio: f64,
    pub rows: Vec<SweepRow>,
    pub seed: u64,
}

/// Largest measure over a few `tau` quantiles of the attained resonance-sum
/// values (the constraint is re-centred where it is most active).
fn peak_measure(geo: &CaseGeometry, alpha: f64, l: f64, resolution: usize) -> f64 {
    let g = |xa: f64, xb: f64| -> f64 {
        geo.signs[0] as f64 * abs_pow(xa, alpha)
            + geo.signs[1] as f64 * abs_pow(xb, alpha)
            + geo.signs[2] as f64 * abs_pow(geo.xi - xa - xb, alpha)
    };
    let coarse = 24;
    let mut values: Vec<f64> = Vec::with_capacity(coarse * coarse);
    for i in 0..coarse {
        for j in 0..coarse {
            let xa = geo.a.0 + (i as f64 + 0.5) * (geo.a.1 - geo.a.0) / coarse as f64;
            let xb = geo.b.0 + (j as f64 + 0.5) * (geo.b.1 - geo.b.0) / coarse as f64;
            values.push(g(xa, xb));
        }
    }
    values.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut best = 0.0f64;
    for q in [0.25, 0.5, 0.75] {
        let tau = values[((values.len() - 1) as f64 * q) as usize];
        let est = level_set_measure(geo.a, geo.b, geo.signs, geo.xi, tau, l, alpha, resolution);
        best = best.max(est.value);
    }
    best
}

/// Sweep one case over dyadic `(n, l)`, calibrate the implicit constant on
/// the smallest `n` (max over the `l` column, margin 1.25), and report the
/// worst measured/bound ratio.
pub fn counting_bound_check(
    tag: CaseTag,
    alpha: f64,
    n_sweep: &[f64],
    l_sweep: &[f64],
    resolution: usize,
) -> Result<CaseReport, BenchError> {
    for &v in n_sweep.iter().chain(l_sweep) {
        if !is_dyadic(v) {
            return Err(BenchError::NotDyadic(v));
        }
    }
    assert!(!n_sweep.is_empty() && !l_sweep.is_empty());

    let mut raw: Vec<(f64, f64, f64, f64)> = Vec::new();
    for &n in n_sweep {
        for &l in l_sweep {
            let geo = case_geometry(tag, alpha, n, l);
            let measured = peak_measure(&geo, alpha, l, resolution);
            raw.push((n, l, measured, geo.bound));
        }
    }
    let n0 = n_sweep[0];
    let cal_base = raw
        .iter()
        .filter(|r| r.0 == n0)
        .map(|r| r.2 / r.3)
        .fold(0.0f64, f64::max);
    if cal_base == 0.0 {
        return Err(BenchError::InfeasibleConfig(format!(
            "case {tag}: empty level sets at smallest scale n = {n0}"
        )));
    }
    let calibration = 1.25 * cal_base;
    let rows: Vec<SweepRow> = raw
        .into_iter()
        .map(|(n, l, measured, bound)| SweepRow {
            n,
            l,
            measured,
            bound,
            ratio: measured / (calibration * bound),
        })
        .collect();
    let worst_ratio = rows.iter().map(|r| r.ratio).fold(0.0f64, f64::max);
    Ok(CaseReport { case: tag, alpha, calibration_constant: calibration, worst_ratio, rows, seed: 0 })
}

/// CSV for a batch of case reports plus a JSON summary line per report.
pub fn case_reports_csv(reports: &[CaseReport]) -> String {
    let mut out = String::from("case,alpha,N,L,measured,bound,ratio\n");
    for rep in reports {
        for r in &rep.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                rep.case, rep.alpha, r.n, r.l, r.measured, r.bound, r.ratio
            ));
        }
    }
    let summary = serde_json::json!({
        "reports": reports.iter().map(|r| serde_json::json!({
            "case": r.case.to_string(),
            "alpha": r.alpha,
            "worst_ratio": r.worst_ratio,
            "calibration_constant": r.calibration_constant,
            "seed": r.seed,
        })).collect::<Vec<_>>(),
    });
    out.push_str(&format!("# {summary}\n"));
    out
}
