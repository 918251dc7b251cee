//! Per-task beamformer design: maximize the uplink SINR subject to the echo
//! quality gate and the power budget.
//!
//! The fractional objective is lifted to matrix variables, normalized into a
//! linear SDP via the Charnes-Cooper substitution `W = W'/xi`, `F = F'/xi`,
//! and solved by [`crate::sdp`]. The lift is tight: returned blocks are
//! rank-1 up to solver precision and the beamformers are recovered from
//! their principal eigenpairs. Two independent oracles (a zero-forcing
//! closed form and a brute-force grid search over the relevant subspace)
//! validate the optimizer.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{comm_sinr, sensing_sinr, ComplexVector, SystemConfig};
use crate::sdp::{
    self, BlockId, ConstraintSense, LinearExpr, ScalarId, SdpProblem, SdpSolution, SdpStatus,
    Sense, ToleranceSet,
};

/// Transmit vectors for one phase.
#[derive(Clone, Debug, serde::Serialize)]
pub struct BeamformerPair {
    /// Radar sequence beamformer.
    pub w: ComplexVector,
    /// Data stream beamformer.
    pub f: ComplexVector,
    /// `||w||^2 + ||f||^2`, watts.
    pub power_used: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum BeamformStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

/// Result of one per-task design, with the recovered vectors, the SINRs
/// recomputed from those vectors, and solver diagnostics.
#[derive(Clone, Debug)]
pub struct BeamformOutcome {
    pub pair: BeamformerPair,
    pub sinr_com: f64,
    pub sinr_sen: f64,
    /// Worst second-to-first eigenvalue ratio over the returned SDP blocks.
    pub rank1_defect: f64,
    pub status: BeamformStatus,
    /// Raw SDP solution, kept for diagnosis; `None` for the closed-form
    /// zero-threshold path.
    pub sdp: Option<SdpSolution>,
}

/// Rank-1 defect beyond which recovery is flagged as a numerical failure.
const RANK1_FAILURE: f64 = 1e-4;

fn outer(v: &ComplexVector) -> DMatrix<Complex64> {
    let nv = v.to_nalgebra();
    &nv * nv.adjoint()
}

/// Assembles the normalized SDP for given raw coefficients. Layout: PSD
/// blocks `W'`, `F'` (declared in that order) and the scalar `xi`.
///
/// `normalization` is the free constant of the fractional-program
/// substitution: the denominator is pinned to `sigma^2 xi + tr(W'H) =
/// normalization` and the objective value comes out as `normalization` times
/// the optimal SINR. Any positive value gives the same recovered `W'/xi`;
/// picking it near `sigma^2` keeps the variables O(1) at high SNR.
fn ccp_from_parts(
    h: &ComplexVector,
    g: &ComplexVector,
    noise_w: f64,
    sensing_floor: f64,
    power_w: f64,
    normalization: f64,
) -> (SdpProblem, BlockId, BlockId, ScalarId) {
    let n = h.len();
    let big_h = outer(h);
    let big_g = outer(g);
    let eye = DMatrix::<Complex64>::identity(n, n);

    let mut p = SdpProblem::new();
    let w = p.add_psd_block("W'", n);
    let f = p.add_psd_block("F'", n);
    let xi = p.add_scalar("xi");

    p.set_objective(
        Sense::Maximize,
        LinearExpr::new().with_block(f, big_h.clone()),
    );
    // Denominator normalization: sigma^2 xi + tr(W' H) = normalization.
    p.add_constraint(
        LinearExpr::new()
            .with_block(w, big_h)
            .with_scalar(xi, noise_w),
        ConstraintSense::Equal,
        normalization,
    );
    // Echo power floor: eta (sigma^2 + c) xi <= tr(W' G).
    p.add_constraint(
        LinearExpr::new()
            .with_block(w, big_g)
            .with_scalar(xi, -sensing_floor),
        ConstraintSense::GreaterEq,
        0.0,
    );
    // Power budget: tr(W') + tr(F') <= xi P.
    p.add_constraint(
        LinearExpr::new()
            .with_block(w, eye.clone())
            .with_block(f, eye)
            .with_scalar(xi, -power_w),
        ConstraintSense::LessEq,
        0.0,
    );
    (p, w, f, xi)
}

/// Builds the normalized beamforming SDP for task parameters `(h, g, eta)`:
/// variables `W'`, `F'` (N x N Hermitian PSD) and `xi >= 0`, constraints
/// `sigma^2 xi + tr(W'H) = 1`, `eta (sigma^2 + c) xi <= tr(W'G)`,
/// `tr(W') + tr(F') <= xi P`, objective `max tr(F'H)`.
pub fn build_ccp_sdp(
    h: &ComplexVector,
    g: &ComplexVector,
    eta: f64,
    cfg: &SystemConfig,
) -> Result<SdpProblem> {
    if h.len() != g.len() {
        return Err(Error::DimensionMismatch {
            context: "build_ccp_sdp",
            expected: h.len(),
            actual: g.len(),
        });
    }
    let sensing_floor = eta * (cfg.noise_power_w + cfg.clutter_power_w);
    let (p, _, _, _) = ccp_from_parts(h, g, cfg.noise_power_w, sensing_floor, cfg.max_power_w, 1.0);
    Ok(p)
}

fn infeasible_outcome(n: usize, sdp: Option<SdpSolution>) -> BeamformOutcome {
    BeamformOutcome {
        pair: BeamformerPair {
            w: ComplexVector::zeros(n),
            f: ComplexVector::zeros(n),
            power_used: 0.0,
        },
        sinr_com: 0.0,
        sinr_sen: 0.0,
        rank1_defect: 0.0,
        status: BeamformStatus::Infeasible,
        sdp,
    }
}

/// Solves the per-task design and recovers rank-1 beamformers.
///
/// A zero threshold short-circuits to full-power MRC with no radar beam.
/// Otherwise the SDP is posed on unit-norm channels with a unit power budget
/// (the SINRs are invariant under that rescaling, which keeps the interior
/// point iteration on O(1) data), the blocks are unscaled by `xi`, and the
/// principal eigenpairs give `w` and `f`. Both SINRs are recomputed from the
/// recovered vectors, never read off the matrices.
pub fn solve_beamforming(
    h: &ComplexVector,
    g: &ComplexVector,
    eta: f64,
    cfg: &SystemConfig,
) -> Result<BeamformOutcome> {
    if h.len() != g.len() {
        return Err(Error::DimensionMismatch {
            context: "solve_beamforming",
            expected: h.len(),
            actual: g.len(),
        });
    }
    if eta < 0.0 || !eta.is_finite() {
        return Err(Error::InvalidValue {
            context: "sensing threshold",
            value: eta,
        });
    }
    let n = h.len();
    let power = cfg.max_power_w;
    let noise = cfg.noise_power_w;
    let clutter = cfg.clutter_power_w;
    let h_sq = h.norm_sq();
    let g_sq = g.norm_sq();
    if h_sq <= 0.0 {
        return Err(Error::InvalidValue {
            context: "uplink channel norm",
            value: h_sq,
        });
    }

    if eta == 0.0 {
        // Pure MRC: all power on the data beam, no radar constraint.
        let f = h.scale_re((power / h_sq).sqrt()).canonical_phase();
        let w = ComplexVector::zeros(n);
        let sinr_com = comm_sinr(&f, &w, h, noise)?;
        let sinr_sen = sensing_sinr(&w, g, noise, clutter)?;
        return Ok(BeamformOutcome {
            pair: BeamformerPair {
                power_used: f.norm_sq(),
                w,
                f,
            },
            sinr_com,
            sinr_sen,
            rank1_defect: 0.0,
            status: BeamformStatus::Optimal,
            sdp: None,
        });
    }
    if g_sq <= 0.0 {
        return Ok(infeasible_outcome(n, None));
    }

    // Normalized problem: unit channels, unit power, noise 1/SNR and the
    // sensing floor as a fraction of the full-power echo strength.
    let h_unit = h.scale_re(1.0 / h_sq.sqrt());
    let g_unit = g.scale_re(1.0 / g_sq.sqrt());
    let noise_scaled = noise / (power * h_sq);
    let floor_scaled = eta * (noise + clutter) / (power * g_sq);

    let (problem, w_id, f_id, xi_id) = ccp_from_parts(
        &h_unit,
        &g_unit,
        noise_scaled,
        floor_scaled,
        1.0,
        noise_scaled,
    );
    let sol = sdp::solve(&problem, &ToleranceSet::default())?;

    match sol.status {
        SdpStatus::Infeasible => return Ok(infeasible_outcome(n, Some(sol))),
        SdpStatus::NumericalFailure => {
            return Ok(BeamformOutcome {
                pair: BeamformerPair {
                    w: ComplexVector::zeros(n),
                    f: ComplexVector::zeros(n),
                    power_used: 0.0,
                },
                sinr_com: 0.0,
                sinr_sen: 0.0,
                rank1_defect: f64::NAN,
                status: BeamformStatus::NumericalFailure,
                sdp: Some(sol),
            })
        }
        SdpStatus::Optimal => {}
    }

    let xi = sol.scalar(xi_id);
    let defect = crate::linalg::rank1_defect(sol.block(w_id))
        .max(crate::linalg::rank1_defect(sol.block(f_id)));
    let mut status = BeamformStatus::Optimal;
    if !(xi > 1e-12) || defect > RANK1_FAILURE {
        status = BeamformStatus::NumericalFailure;
    }

    // Principal eigenpair of W'/xi and F'/xi, then undo the power rescaling.
    let extract = |block: &DMatrix<Complex64>| -> ComplexVector {
        let scaled = block / Complex64::new(xi.max(1e-300), 0.0);
        let (vals, vecs) = crate::linalg::hermitian_eigen(&scaled);
        let amp = (vals[0].max(0.0) * power).sqrt();
        ComplexVector::from_nalgebra(&(&vecs[0] * Complex64::new(amp, 0.0))).canonical_phase()
    };
    let mut w = extract(sol.block(w_id));
    let mut f = extract(sol.block(f_id));

    if status == BeamformStatus::Optimal {
        // Polish the extraction: force the echo floor to hold exactly, then
        // re-fit the data beam inside the remaining power budget.
        let kappa = eta * (noise + clutter);
        let echo = g.dot_h(&w).norm_sqr();
        if echo < 0.5 * kappa {
            status = BeamformStatus::NumericalFailure;
        } else if echo < kappa {
            w = w.scale_re((kappa / echo).sqrt());
        }
        let headroom = power - w.norm_sq();
        let f_sq = f.norm_sq();
        if f_sq > headroom {
            if headroom <= 0.0 {
                f = ComplexVector::zeros(n);
            } else {
                f = f.scale_re((headroom / f_sq).sqrt());
            }
        }
    }

    let sinr_sen = sensing_sinr(&w, g, noise, clutter)?;
    let sinr_com = comm_sinr(&f, &w, h, noise)?;
    Ok(BeamformOutcome {
        pair: BeamformerPair {
            power_used: w.norm_sq() + f.norm_sq(),
            w,
            f,
        },
        sinr_com,
        sinr_sen,
        rank1_defect: defect,
        status,
        sdp: Some(sol),
    })
}

/// Zero-forcing closed form: point the radar beam along the component of `g`
/// orthogonal to `h`, leaving the uplink interference-free.
///
/// Returns `(sinr_com, feasible)`; `feasible = false` means the orthogonal
/// component alone cannot reach the echo floor within the power budget (the
/// grid oracle still applies there). Errors when `g` is parallel to `h` or
/// only one antenna exists, where no orthogonal direction is available.
pub fn zf_oracle(
    h: &ComplexVector,
    g: &ComplexVector,
    eta: f64,
    cfg: &SystemConfig,
) -> Result<(f64, bool)> {
    if h.len() != g.len() {
        return Err(Error::DimensionMismatch {
            context: "zf_oracle",
            expected: h.len(),
            actual: g.len(),
        });
    }
    if h.len() < 2 {
        return Err(Error::OracleNotApplicable(
            "zero-forcing needs at least two antennas",
        ));
    }
    let h_sq = h.norm_sq();
    let along = h.dot_h(g); // h^H g
    let g_perp = g.sub(&h.scale(along / h_sq));
    let perp_sq = g_perp.norm_sq();
    if perp_sq <= 1e-12 * g.norm_sq() {
        return Err(Error::OracleNotApplicable(
            "echo channel is parallel to the uplink channel",
        ));
    }
    let radar_power = eta * (cfg.noise_power_w + cfg.clutter_power_w) / perp_sq;
    if radar_power <= cfg.max_power_w {
        let sinr = (cfg.max_power_w - radar_power) * h_sq / cfg.noise_power_w;
        Ok((sinr, true))
    } else {
        Ok((0.0, false))
    }
}

/// Brute-force oracle: exhaustive search of the radar beam over
/// `span{g, h}` and the power split, with the data beam matched to `h`.
///
/// Only the projections onto `h` and `g` enter the objective and the
/// constraints, so restricting `w` to that span and `f` to the matched
/// direction loses nothing. Two axes also sample their exact per-direction
/// optima alongside the plain grid: the power axis at the echo-floor
/// boundary (the objective is strictly decreasing in radar power), and the
/// phase axis at the alignment `arg(g^H u1)` that maximizes the echo for
/// any polar angle. One refinement pass shrinks the grid around the
/// incumbent. Returns `-inf` when no grid point is feasible.
pub fn grid_oracle(
    h: &ComplexVector,
    g: &ComplexVector,
    eta: f64,
    cfg: &SystemConfig,
    resolution: usize,
) -> Result<f64> {
    if h.len() != g.len() {
        return Err(Error::DimensionMismatch {
            context: "grid_oracle",
            expected: h.len(),
            actual: g.len(),
        });
    }
    let res = resolution.max(2);
    let power = cfg.max_power_w;
    let noise = cfg.noise_power_w;
    let kappa = eta * (noise + cfg.clutter_power_w);
    let h_sq = h.norm_sq();

    // Orthonormal basis of span{h, g}: u1 along h, u2 along the residual of g.
    let u1 = h.scale_re(1.0 / h_sq.sqrt());
    let residual = g.sub(&u1.scale(u1.dot_h(g)));
    let res_norm_sq = residual.norm_sq();
    let two_dim = res_norm_sq > 1e-18 * g.norm_sq().max(1e-300);
    let a1 = g.dot_h(&u1); // g^H u1
    let a2 = if two_dim { res_norm_sq.sqrt() } else { 0.0 }; // g^H u2, real by construction

    let evaluate = |p_w: f64, echo_gain: f64, cos_t: f64| -> Option<f64> {
        if p_w > power {
            return None;
        }
        let echo = p_w * echo_gain;
        if echo + 1e-12 * kappa.max(1e-300) < kappa {
            return None;
        }
        let interference = p_w * cos_t * cos_t * h_sq;
        Some((power - p_w) * h_sq / (noise + interference))
    };

    let theta_span = std::f64::consts::FRAC_PI_2;
    let phi_span = std::f64::consts::TAU;
    let phi_align = a1.arg();
    let mut best: Option<(f64, f64, f64)> = None;

    let scan =
        |best: &mut Option<(f64, f64, f64)>, center: Option<(f64, f64)>, step: (f64, f64)| {
            for j in 0..=res {
                let theta = match center {
                    None => theta_span * j as f64 / res as f64,
                    Some((t0, _)) => {
                        (t0 - step.0 + 2.0 * step.0 * j as f64 / res as f64).clamp(0.0, theta_span)
                    }
                };
                let (cos_t, sin_t) = if two_dim {
                    (theta.cos(), theta.sin())
                } else {
                    (1.0, 0.0)
                };
                // Grid phases plus the exact alignment; the base grid excludes
                // the wrapping endpoint.
                let phi_count = if two_dim { res + 1 } else { 1 };
                for k in 0..=phi_count {
                    let phi = if k == phi_count {
                        phi_align
                    } else {
                        match center {
                            None if k == res => continue,
                            None => phi_span * k as f64 / res as f64,
                            Some((_, f0)) => f0 - step.1 + 2.0 * step.1 * k as f64 / res as f64,
                        }
                    };
                    let echo_gain =
                        (a1 * cos_t + Complex64::from_polar(1.0, phi) * (a2 * sin_t)).norm_sqr();
                    let mut consider = |v: Option<f64>| {
                        if let Some(v) = v {
                            if best.is_none_or(|(b, _, _)| v > b) {
                                *best = Some((v, theta, phi));
                            }
                        }
                    };
                    for i in 0..=res {
                        let p_w = power * i as f64 / res as f64;
                        consider(evaluate(p_w, echo_gain, cos_t));
                    }
                    // Exact minimal feasible power for this direction.
                    if echo_gain > 0.0 {
                        consider(evaluate(kappa / echo_gain, echo_gain, cos_t));
                    }
                    if !two_dim {
                        break;
                    }
                }
                if !two_dim {
                    break;
                }
            }
        };

    scan(&mut best, None, (0.0, 0.0));
    if let Some((_, t0, f0)) = best {
        let step = (theta_span / res as f64, phi_span / res as f64);
        scan(&mut best, Some((t0, f0)), step);
    }
    Ok(best.map(|(v, _, _)| v).unwrap_or(f64::NEG_INFINITY))
}
