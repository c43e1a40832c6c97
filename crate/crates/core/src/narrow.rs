//! Rounding with local flips for Δ-narrow graphs.
//!
//! After hyperplane rounding of the triangle-constrained relaxation, the
//! vertices whose projection on the rounding direction is small form the
//! band `F`. A band vertex is flipped when the weight of its neighbours
//! outside `F` that share its side exceeds everything that could be lost by
//! flipping it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{cut_value_unchecked, CutAssignment, Graph};
use crate::rng::{derive_named, derive_seed};
use crate::sdp::{gaussian_direction, hyperplane_round_with, solve_sdp, SdpConfig, SdpSolution};

/// `δ = 1 / (C d √ln d)` with `d = Δ / η²`.
pub fn fkl_band_width(delta: usize, eta: f64, c: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::param("eta", format!("{eta} not in (0, 1]")));
    }
    if !(c > 0.0) {
        return Err(Error::param("c", "must be positive"));
    }
    let d = delta as f64 / (eta * eta);
    if d < 3.0 {
        return Err(Error::param("delta", format!("d = Δ/η² = {d} is below 3")));
    }
    Ok(1.0 / (c * d * d.ln().sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandVertex {
    pub vertex: usize,
    /// `w(B_i)`: same side, outside the band.
    pub same_side: f64,
    /// `w(C_i)`: other side, outside the band.
    pub other_side: f64,
    /// `w(D_i)`: inside the band.
    pub in_band: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlipReport {
    pub delta_band: f64,
    pub band: Vec<BandVertex>,
    pub flipped: Vec<usize>,
    pub gain: f64,
}

pub fn flip_step(
    g: &Graph,
    x_hat: &CutAssignment,
    sol: &SdpSolution,
    gvec: &[f64],
    delta_band: f64,
) -> Result<(CutAssignment, FlipReport)> {
    if x_hat.len() != g.n() || sol.n() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            got: x_hat.len(),
        });
    }
    if gvec.len() != sol.dim {
        return Err(Error::Dimension {
            expected: sol.dim,
            got: gvec.len(),
        });
    }
    if cfg!(debug_assertions) && hyperplane_round_with(sol, gvec) != *x_hat {
        return Err(Error::Precondition(
            "rounding does not match the supplied direction".into(),
        ));
    }
    let proj = |i: usize| sol.vector(i).iter().zip(gvec).map(|(a, b)| a * b).sum::<f64>();
    let in_f: Vec<bool> = (0..g.n()).map(|i| proj(i).abs() <= delta_band).collect();
    let x = x_hat.as_slice();
    let mut band = Vec::new();
    let mut flipped = Vec::new();
    for i in (0..g.n()).filter(|&i| in_f[i]) {
        let (mut b, mut c, mut d) = (0.0, 0.0, 0.0);
        for &(j, w) in g.neighbors(i) {
            if in_f[j] {
                d += w;
            } else if x[j] == x[i] {
                b += w;
            } else {
                c += w;
            }
        }
        if b > c + d {
            flipped.push(i);
        }
        band.push(BandVertex {
            vertex: i,
            same_side: b,
            other_side: c,
            in_band: d,
        });
    }
    let mut out = x_hat.clone();
    for &i in &flipped {
        out.flip(i);
    }
    let gain = cut_value_unchecked(g, out.as_slice()) - cut_value_unchecked(g, x);
    Ok((
        out,
        FlipReport {
            delta_band,
            band,
            flipped,
            gain,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NarrowParams {
    pub delta: usize,
    pub eta: f64,
    /// Constant `C` of the band width.
    pub band_constant: f64,
    pub restarts: usize,
}

impl NarrowParams {
    pub fn new(delta: usize, eta: f64) -> Self {
        NarrowParams {
            delta,
            eta,
            band_constant: 1.0,
            restarts: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NarrowOutcome {
    pub cut: CutAssignment,
    pub value: f64,
    pub sdp_value: f64,
    /// Dual bound on the triangle relaxation, when the solver produced one.
    pub sdp_upper_bound: Option<f64>,
    pub triangle_violation: f64,
    pub best_restart: usize,
    /// Restarts whose flip step strictly improved the rounding.
    pub improving_restarts: usize,
}

/// Triangle relaxation, then `restarts` rounds of hyperplane + flip.
pub fn solve_narrow(g: &Graph, params: &NarrowParams, seed: u64) -> Result<NarrowOutcome> {
    let band = fkl_band_width(params.delta, params.eta, params.band_constant)?;
    let cfg = SdpConfig {
        triangle: true,
        ..SdpConfig::with_seed(derive_named(seed, "sdp"))
    };
    let sol = solve_sdp(g, &cfg)?;
    let base = derive_named(seed, "narrow-round");
    let runs: Vec<(usize, f64, CutAssignment, bool)> = (0..params.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let gvec = gaussian_direction(sol.dim, derive_seed(base, r as u64));
            let x = hyperplane_round_with(&sol, &gvec);
            let (out, rep) = flip_step(g, &x, &sol, &gvec, band).expect("consistent rounding");
            (r, cut_value_unchecked(g, out.as_slice()), out, rep.gain > 0.0)
        })
        .collect();
    let improving = runs.iter().filter(|r| r.3).count();
    let (best_restart, value, cut, _) = runs
        .into_iter()
        .reduce(|a, b| if b.1 > a.1 { b } else { a })
        .expect("at least one restart");
    Ok(NarrowOutcome {
        cut,
        value,
        sdp_value: sol.objective_value,
        sdp_upper_bound: sol.upper_bound,
        triangle_violation: sol.report.triangle.unwrap_or(0.0),
        best_restart,
        improving_restarts: improving,
    })
}
