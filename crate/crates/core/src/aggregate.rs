//! Reduced section-total dynamics.
//!
//! Summing the interphase density over age turns the age/space system into
//! one scalar per section. With the net age-boundary flux closed as
//! `α(j)·U(j)`, one time step reads
//!
//! ```text
//! U(k+1,j) = (1 + c·α(j))·U(k,j) + w·((U(k,j-1) + U(k,j+1))/2 − U(k,j))
//! ```
//!
//! where `c = v1·dt/da` and `w = 2·D·dt/dx²`. Dropping the small diffusion
//! term gives the closed form `U(K,j) = (1 + c·α(j))^K · U(0,j)`, which is
//! then spread over the expanded domain and linearly interpolated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SectionProfile;

/// Per-section growth coefficients of the reduced dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaBetaProfile {
    pub alpha: Vec<f64>,
    /// Net multiplication over the stage divided by the expansion factor,
    /// i.e. the ratio between the averaged expanded-domain density and the
    /// initial section total.
    pub beta: Vec<f64>,
    /// `v1·dt/da`.
    pub coupling_coefficient: f64,
    pub steps: u32,
    pub expansion_factor: f64,
}

impl AlphaBetaProfile {
    pub fn from_alpha(alpha: Vec<f64>, coupling: f64, steps: u32, expansion: f64) -> Result<Self> {
        check_shape_params(coupling, expansion)?;
        let beta = alpha
            .iter()
            .map(|&a| (1.0 + coupling * a).powi(steps as i32) / expansion)
            .collect();
        Self::checked(alpha, beta, coupling, steps, expansion)
    }

    pub fn from_beta(beta: Vec<f64>, coupling: f64, steps: u32, expansion: f64) -> Result<Self> {
        check_shape_params(coupling, expansion)?;
        if steps == 0 {
            return Err(Error::Domain("step count must be positive".into()));
        }
        let alpha = beta
            .iter()
            .map(|&b| ((expansion * b).powf(1.0 / steps as f64) - 1.0) / coupling)
            .collect();
        Self::checked(alpha, beta, coupling, steps, expansion)
    }

    pub fn uniform(sections: usize, alpha: f64, coupling: f64, steps: u32, expansion: f64) -> Result<Self> {
        Self::from_alpha(vec![alpha; sections], coupling, steps, expansion)
    }

    fn checked(alpha: Vec<f64>, beta: Vec<f64>, coupling: f64, steps: u32, expansion: f64) -> Result<Self> {
        if let Some(j) = beta.iter().position(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(Error::Domain(format!("β({}) = {} is not positive", j + 1, beta[j])));
        }
        Ok(AlphaBetaProfile {
            alpha,
            beta,
            coupling_coefficient: coupling,
            steps,
            expansion_factor: expansion,
        })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// Multiplication of section `j` (0-based) over the whole stage.
    pub fn growth_factor(&self, j: usize) -> f64 {
        (1.0 + self.coupling_coefficient * self.alpha[j]).powi(self.steps as i32)
    }

    /// Largest relative mismatch between `β` and the value implied by `α`.
    pub fn consistency_error(&self) -> f64 {
        (0..self.len())
            .map(|j| {
                let implied = self.growth_factor(j) / self.expansion_factor;
                ((implied - self.beta[j]) / self.beta[j]).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn check_shape_params(coupling: f64, expansion: f64) -> Result<()> {
    if !(coupling > 0.0 && coupling.is_finite()) {
        return Err(Error::Domain(format!("coupling coefficient must be positive, got {coupling}")));
    }
    if !(expansion > 0.0 && expansion.is_finite()) {
        return Err(Error::Domain(format!("expansion factor must be positive, got {expansion}")));
    }
    Ok(())
}

/// `2·D·dt/dx²`, the weight on `(neighbour mean − self)` in the reduced step.
pub fn diffusion_weight(diffusion: f64, dt: f64, dx: f64) -> f64 {
    2.0 * diffusion * dt / (dx * dx)
}

fn check_lengths(totals: &SectionProfile, profile: &AlphaBetaProfile) -> Result<()> {
    if totals.len() != profile.len() {
        return Err(Error::Contract(format!(
            "profile has {} sections but growth coefficients cover {}",
            totals.len(),
            profile.len()
        )));
    }
    Ok(())
}

pub fn induction_step(totals: &SectionProfile, profile: &AlphaBetaProfile, diffusion_weight: f64) -> Result<SectionProfile> {
    check_lengths(totals, profile)?;
    let u = &totals.values;
    let n = u.len();
    let c = profile.coupling_coefficient;
    let values = (0..n)
        .map(|j| {
            let left = u[j.saturating_sub(1)];
            let right = u[(j + 1).min(n - 1)];
            (1.0 + c * profile.alpha[j]) * u[j] + diffusion_weight * (0.5 * (left + right) - u[j])
        })
        .collect();
    Ok(SectionProfile {
        label: totals.label.clone(),
        start: totals.start,
        values,
    })
}

/// Iterates [`induction_step`] `profile.steps` times.
pub fn induction_run(initial: &SectionProfile, profile: &AlphaBetaProfile, diffusion_weight: f64) -> Result<SectionProfile> {
    let mut totals = initial.clone();
    for _ in 0..profile.steps {
        totals = induction_step(&totals, profile, diffusion_weight)?;
    }
    Ok(totals)
}

pub fn closed_form_growth(initial: &SectionProfile, profile: &AlphaBetaProfile) -> Result<SectionProfile> {
    check_lengths(initial, profile)?;
    let values = initial
        .values
        .iter()
        .enumerate()
        .map(|(j, u)| u * profile.growth_factor(j))
        .collect();
    Ok(SectionProfile {
        label: initial.label.clone(),
        start: initial.start,
        values,
    })
}

/// Uniform growth rate taking a mean section total from `initial_mean` to
/// `final_mean` in `steps` steps. Returns `(α, β)`.
pub fn calibrate_uniform_alpha(
    initial_mean: f64,
    final_mean: f64,
    coupling: f64,
    steps: u32,
    expansion: f64,
) -> Result<(f64, f64)> {
    if !(initial_mean > 0.0 && final_mean > 0.0) {
        return Err(Error::Domain(format!(
            "section means must be positive (got {initial_mean} and {final_mean})"
        )));
    }
    check_shape_params(coupling, expansion)?;
    if steps == 0 {
        return Err(Error::Domain("step count must be positive".into()));
    }
    let alpha = ((final_mean / initial_mean).powf(1.0 / steps as f64) - 1.0) / coupling;
    let beta = (1.0 + coupling * alpha).powi(steps as i32) / expansion;
    Ok((alpha, beta))
}

/// Piecewise-linear proliferation profile along the 96 sections of the E4
/// tectum: rising over the first six sections, flat up to the midpoint,
/// then declining towards the caudal end.
pub fn beta_e4e6(j: usize) -> f64 {
    let j = j as f64;
    if j <= 6.0 {
        0.1 * j + 0.525
    } else if j <= 48.0 {
        1.125
    } else {
        -0.01 * j + 1.605
    }
}

pub const E4E6_COUPLING: f64 = 0.765;
pub const E4E6_EXPANSION: f64 = 2.4;
pub const STAGE_STEPS: u32 = 288;

pub fn beta_profile_e4e6(sections: usize) -> Result<AlphaBetaProfile> {
    if sections != 96 {
        return Err(Error::UnsupportedProfile(sections));
    }
    let beta = (1..=sections).map(beta_e4e6).collect();
    AlphaBetaProfile::from_beta(beta, E4E6_COUPLING, STAGE_STEPS, E4E6_EXPANSION)
}

/// Spreads section totals over a domain `expansion` times longer.
///
/// Source section `m` (0-based) covers `[e·m, e·(m+1))` with uniform density
/// `U(m)/e`. Target section `s` covers `[s, s+1)` and receives the
/// coverage-weighted sum of the source densities it overlaps, so the total
/// is preserved exactly. The output has `ceil(e·n)` sections numbered from
/// `target_start`.
pub fn redistribute(final_totals: &SectionProfile, expansion: f64, target_start: usize) -> Result<SectionProfile> {
    if !(expansion > 0.0 && expansion.is_finite()) {
        return Err(Error::Domain(format!("expansion factor must be positive, got {expansion}")));
    }
    let n = final_totals.len();
    let extent = expansion * n as f64;
    // Guard against 2.4·5 = 12.000000000000002 producing a spurious section.
    let targets = (extent - 1e-9).ceil().max(0.0) as usize;
    let mut values = vec![0.0; targets];
    for (m, &u) in final_totals.values.iter().enumerate() {
        let lo = expansion * m as f64;
        let hi = expansion * (m + 1) as f64;
        let density = u / expansion;
        let first = lo.floor() as usize;
        for (s, value) in values.iter_mut().enumerate().skip(first) {
            let overlap = hi.min(s as f64 + 1.0) - lo.max(s as f64);
            if overlap <= 0.0 {
                break;
            }
            *value += overlap * density;
        }
    }
    Ok(SectionProfile {
        label: final_totals.label.clone(),
        start: target_start,
        values,
    })
}

/// Linear interpolation through anchors placed at `origin + spacing·m`,
/// evaluated at the integer abscissae `target_start, target_start + 1, …`.
///
/// `right_extrapolation` is a virtual anchor one spacing past the last one,
/// so the final interval has something to interpolate towards.
pub fn interpolate_profile(
    anchors: &SectionProfile,
    spacing: f64,
    origin: f64,
    target_start: usize,
    target_sections: usize,
    right_extrapolation: f64,
) -> Result<SectionProfile> {
    if anchors.is_empty() {
        return Err(Error::Contract("cannot interpolate an empty profile".into()));
    }
    if target_sections == 0 {
        return Err(Error::Contract("target section count must be at least 1".into()));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::Domain(format!("anchor spacing must be positive, got {spacing}")));
    }
    let mut nodes = anchors.values.clone();
    nodes.push(right_extrapolation);
    let last_segment = nodes.len() - 2;
    let values = (0..target_sections)
        .map(|k| {
            let s = (target_start + k) as f64;
            let p = ((s - origin) / spacing).max(0.0);
            let m = (p.floor() as usize).min(last_segment);
            let f = p - m as f64;
            if f == 0.0 {
                nodes[m]
            } else {
                (1.0 - f) * nodes[m] + f * nodes[m + 1]
            }
        })
        .collect();
    Ok(SectionProfile {
        label: anchors.label.clone(),
        start: target_start,
        values,
    })
}

/// Virtual section just past the right end of `initial`, obtained by
/// mirroring the left-end first difference: `U(n) − (U(2) − U(1))`.
pub fn right_extrapolation_anchor(initial: &SectionProfile) -> Result<f64> {
    let u = &initial.values;
    if u.len() < 2 {
        return Err(Error::Contract(format!(
            "extrapolation needs at least 2 sections, got {}",
            u.len()
        )));
    }
    Ok((u[u.len() - 1] - (u[1] - u[0])).max(0.0))
}
