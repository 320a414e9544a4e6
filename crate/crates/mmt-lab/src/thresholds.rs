//! Closed-form regularity arithmetic in the `(alpha, beta, s)` parameter
//! space: the scaling-critical index, the piecewise local well-posedness
//! threshold, the predicate for failure of third-order smoothness of the
//! solution map, region charts over `(beta, s)`, the scaling transform on
//! data, and the derivative-NLS corollary threshold.

use crate::spectral::SpectralField;
use crate::ModelParams;
use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ThresholdError {
    #[error("alpha must lie in (1, 2] for threshold arithmetic, got {0}")]
    AlphaOutOfRange(f64),
    #[error("beta = {beta} outside the admissible interval (-1/4, (alpha-1)/2) at alpha = {alpha}")]
    BetaOutOfRange { alpha: f64, beta: f64 },
    #[error("dilation factor {0} is not a power of two; the dilated field does not live on a mode lattice")]
    IncompatibleDilation(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    WellPosed,
    IllPosedC3,
    Open,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::WellPosed => "WellPosed",
            Classification::IllPosedC3 => "IllPosedC3",
            Classification::Open => "Open",
        })
    }
}

/// Which piece of the piecewise threshold `s_{beta,alpha}` is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// `(4/3) beta + (2 - alpha)/6`, low-`beta` piece.
    B1FourThirds,
    /// `beta + 5/8 - alpha/2 (+ delta)`, middle piece; entry is strict at
    /// `delta = 0`.
    B2Linear,
    /// `2 beta + (2 - alpha)/4`, high-`beta` piece (matches the smoothness-
    /// failure boundary).
    B3TwoBeta,
    None,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::B1FourThirds => "B1_four_thirds",
            Branch::B2Linear => "B2_linear",
            Branch::B3TwoBeta => "B3_two_beta",
            Branch::None => "None",
        })
    }
}

/// One `(beta, s)` point of a region chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionCell {
    pub beta: f64,
    pub s: f64,
    pub classification: Classification,
    pub branch: Branch,
    pub threshold_value: f64,
}

/// Exponents of the dilation symmetry `u -> lambda^((4 beta - alpha)/2)
/// u(x / lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingLaw {
    pub lambda: f64,
    pub data_exponent: f64,
    pub norm_exponent: f64,
}

impl ScalingLaw {
    pub fn new(lambda: f64, params: &ModelParams) -> Self {
        let data_exponent = (4.0 * params.beta - params.alpha) / 2.0;
        Self {
            lambda,
            data_exponent,
            norm_exponent: data_exponent + 0.5 - params.s,
        }
    }
}

/// Index `s_c = 2 beta + (1 - alpha)/2` left invariant by the dilation
/// symmetry.
pub fn critical_index(alpha: f64, beta: f64) -> f64 {
    2.0 * beta + (1.0 - alpha) / 2.0
}

fn check_alpha(alpha: f64) -> Result<(), ThresholdError> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(ThresholdError::AlphaOutOfRange(alpha));
    }
    Ok(())
}

/// Smallest regularity with a positive local existence result, as a
/// piecewise function of `beta` at fixed `alpha in (1, 2]`, with the active
/// branch. `delta` shifts the middle branch (whose endpoint is open).
///
/// ```
/// use mmt_lab::thresholds::{lwp_threshold, Branch};
///
/// let (s, branch) = lwp_threshold(2.0, 0.25, 0.0)?;
/// assert_eq!(branch, Branch::B3TwoBeta);
/// assert!((s - 0.5).abs() < 1e-12);
/// # Ok::<(), mmt_lab::thresholds::ThresholdError>(())
/// ```
pub fn lwp_threshold(alpha: f64, beta: f64, delta: f64) -> Result<(f64, Branch), ThresholdError> {
    check_alpha(alpha)?;
    if !(beta > -0.25 && beta < (alpha - 1.0) / 2.0) {
        return Err(ThresholdError::BetaOutOfRange { alpha, beta });
    }
    let b1_end = 7.0 / 8.0 - alpha;
    let b2_end = 1.0 / 8.0 - alpha / 4.0;
    if beta <= b1_end {
        Ok((4.0 / 3.0 * beta + (2.0 - alpha) / 6.0, Branch::B1FourThirds))
    } else if beta <= b2_end {
        Ok((beta + 5.0 / 8.0 - alpha / 2.0 + delta, Branch::B2Linear))
    } else {
        Ok((2.0 * beta + (2.0 - alpha) / 4.0, Branch::B3TwoBeta))
    }
}

/// True when the data-to-solution map is known to fail third-order
/// differentiability at the origin: `s < 2 beta + (2 - alpha)/4`, or `beta`
/// strictly outside `[-1/4, (alpha - 1)/2]`.
pub fn illposed_predicate(alpha: f64, beta: f64, s: f64) -> bool {
    s < 2.0 * beta + (2.0 - alpha) / 4.0 || beta < -0.25 || beta > (alpha - 1.0) / 2.0
}

/// Classify one `(beta, s)` point. Points that are neither covered by the
/// positive results nor by the smoothness-failure predicate are `Open`;
/// that includes the two `beta` endpoints themselves.
pub fn classify(alpha: f64, beta: f64, s: f64, delta: f64) -> Result<RegionCell, ThresholdError> {
    check_alpha(alpha)?;
    let failure_line = 2.0 * beta + (2.0 - alpha) / 4.0;
    if illposed_predicate(alpha, beta, s) {
        return Ok(RegionCell {
            beta,
            s,
            classification: Classification::IllPosedC3,
            branch: Branch::None,
            threshold_value: failure_line,
        });
    }
    match lwp_threshold(alpha, beta, delta) {
        Ok((threshold, branch)) => {
            // The middle branch comes from a strict-inequality result; at
            // delta = 0 the endpoint s = threshold stays Open. The strict
            // branch entry also enforces the companion constraint
            // s >= failure_line automatically, since the middle branch
            // dominates it throughout its beta range.
            let admitted = if branch == Branch::B2Linear && delta == 0.0 {
                s > threshold
            } else {
                s >= threshold
            };
            Ok(RegionCell {
                beta,
                s,
                classification: if admitted {
                    Classification::WellPosed
                } else {
                    Classification::Open
                },
                branch,
                threshold_value: threshold,
            })
        }
        Err(ThresholdError::BetaOutOfRange { .. }) => Ok(RegionCell {
            beta,
            s,
            classification: Classification::Open,
            branch: Branch::None,
            threshold_value: failure_line,
        }),
        Err(e) => Err(e),
    }
}

/// Rectangular scan of [`classify`]; rows ordered by `beta`, then `s`,
/// endpoints included.
pub fn region_chart(
    alpha: f64,
    beta_range: (f64, f64),
    s_range: (f64, f64),
    resolution: usize,
    delta: f64,
) -> Result<Vec<RegionCell>, ThresholdError> {
    check_alpha(alpha)?;
    assert!(resolution >= 2, "resolution must be at least 2");
    let lerp = |range: (f64, f64), i: usize| {
        range.0 + (range.1 - range.0) * i as f64 / (resolution - 1) as f64
    };
    let mut cells = Vec::with_capacity(resolution * resolution);
    for i in 0..resolution {
        let beta = lerp(beta_range, i);
        for j in 0..resolution {
            cells.push(classify(alpha, beta, lerp(s_range, j), delta)?);
        }
    }
    Ok(cells)
}

/// CSV for a chart: `beta,s,classification,branch,threshold`, one row per
/// cell, floats at 17 significant digits.
pub fn region_chart_csv(cells: &[RegionCell]) -> String {
    let mut out = String::from("beta,s,classification,branch,threshold\n");
    for c in cells {
        out.push_str(&format!(
            "{:.16e},{:.16e},{},{},{:.16e}\n",
            c.beta, c.s, c.classification, c.branch, c.threshold_value
        ));
    }
    out
}

/// Apply the dilation symmetry to lattice data: the dilated field lives on
/// the same number of modes over a box stretched by `lambda`, with each
/// coefficient scaled by `lambda^((4 beta - alpha)/2 + 1)`. `lambda` must be
/// a power of two so boxes stay dyadically related across repeated scalings.
pub fn rescale_data(
    u: &SpectralField,
    lambda: f64,
    params: &ModelParams,
) -> Result<SpectralField, ThresholdError> {
    if !(lambda > 0.0) || (lambda.log2() - lambda.log2().round()).abs() > 1e-12 {
        return Err(ThresholdError::IncompatibleDilation(lambda));
    }
    let grid = u.grid();
    let new_grid = crate::spectral::GridSpec::new(grid.num_modes(), grid.box_length() * lambda)
        .expect("scaled box stays valid");
    let amp = lambda.powf((4.0 * params.beta - params.alpha) / 2.0 + 1.0);
    let modes = u.modes().iter().map(|m| m * amp).collect();
    Ok(SpectralField::from_modes(new_grid, modes).expect("length preserved"))
}

/// Threshold `beta + (2 - alpha)/4` for the family obtained by substituting
/// `v = D^beta u`, valid for `0 <= beta < (alpha - 1)/2`.
pub fn dnls_threshold(alpha: f64, beta: f64) -> Result<f64, ThresholdError> {
    check_alpha(alpha)?;
    if !(beta >= 0.0 && beta < (alpha - 1.0) / 2.0) {
        return Err(ThresholdError::BetaOutOfRange { alpha, beta });
    }
    Ok(beta + (2.0 - alpha) / 4.0)
}
