use std::io::Write;

use serde::{Deserialize, Serialize};

use super::kernel::QuarticKernel;
use super::rank::{build_direction_matrix, extract_rank_one, rank_ratio};
use super::sdp::{self, nep_lifted, ConvexSubproblem, SolverOptions};
use super::solve_ci_subproblem;
use crate::dsp::{ComplexMat, C64};
use crate::error::{Error, Result};
use crate::metrics::{csv_err, osbep_matrix, FrequencyGrid};
use crate::precoder::{ShapingSet, WaveformConfig};

/// Parameters of the CI + MM procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerParams {
    /// OSBEP bound factor, `U = beta U_min`.
    pub beta: f64,
    /// NEP tolerance, `zeta <= (1 + eps) S^2 / rho`.
    pub eps: f64,
    /// CI weight on `tr(Y B)`.
    pub w: f64,
    pub eps_ci: f64,
    pub eps_mm: f64,
    pub max_ci_iters: usize,
    pub max_mm_iters: usize,
    pub rank_one_tol: f64,
    /// Energy of `p`; `None` selects `M`.
    pub rho: Option<f64>,
    /// Data symbol energy and fourth moment.
    pub es: f64,
    pub sigma4: f64,
    /// Cap on `S^2` for the lifted kernel.
    pub max_lifted_dim: usize,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        Self {
            beta: 10.0,
            eps: 0.0,
            w: 1000.0,
            eps_ci: 1e-8,
            eps_mm: 1e-10,
            max_ci_iters: 200,
            max_mm_iters: 2000,
            rank_one_tol: 1e-5,
            rho: None,
            es: 1.0,
            sigma4: 1.32,
            max_lifted_dim: 48 * 48,
        }
    }
}

/// One logged iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub phase: String,
    pub iteration: usize,
    /// CI: `w tr(Y B) + tr(Omega Y)`; MM: `f(X)` via the lifted kernel.
    pub objective: f64,
    pub osbep: f64,
    pub nep: f64,
    pub rank_ratio: f64,
    /// MM: `g = tr(V X)`; CI: 0.
    pub surrogate: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizerOutcome {
    pub p_opt: Vec<C64>,
    pub shaping: ShapingSet,
    pub x_final: ComplexMat,
    pub u_min: f64,
    pub osbep_bound: f64,
    pub kernel_min_eigenvalue: f64,
    pub trace: Vec<TraceRow>,
}

/// Writes the trace as CSV: `phase,iteration,objective,osbep,nep,rank_ratio,surrogate`.
pub fn write_trace_csv<W: Write>(trace: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in trace {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the CI process (minimum-OSBEP rank-one start) followed by the MM process and
/// returns the optimized shaping vector.
pub fn run_algorithm1(cfg: &WaveformConfig, grid: &FrequencyGrid, params: &OptimizerParams) -> Result<OptimizerOutcome> {
    cfg.validate()?;
    let (k, m) = (cfg.k, cfg.m);
    let s = cfg.subcarriers();
    let rho = params.rho.unwrap_or(m as f64);
    if !(params.beta >= 1.0 && params.w > 0.0 && params.eps >= 0.0 && rho > 0.0) {
        return Err(Error::InvalidConfig("need beta >= 1, w > 0, eps >= 0, rho > 0".into()));
    }
    let omega = osbep_matrix(cfg, grid, params.es)?;
    let kernel = QuarticKernel::build(cfg, params.es, params.sigma4, params.max_lifted_dim)?;
    let opts = SolverOptions::default();
    let nep_f = super::sdp::nep_vectors(k, m);
    let osbep = |x: &ComplexMat| sdp::re_inner(&omega, x);
    let mut trace = Vec::new();

    // convex iteration
    let mut b = ComplexMat::zeros(s, s);
    let mut y: Option<ComplexMat> = None;
    let mut u_prev: Option<f64> = None;
    let mut ci_done = false;
    for it in 0..params.max_ci_iters {
        let sol = solve_ci_subproblem(&b, params.w, &omega, rho, k, m, params.eps, y.as_ref())?;
        let u = osbep(&sol.x);
        trace.push(TraceRow {
            phase: "ci".into(),
            iteration: it,
            objective: sol.objective,
            osbep: u,
            nep: nep_lifted(&nep_f, &sol.x),
            rank_ratio: rank_ratio(&sol.x),
            surrogate: 0.0,
        });
        b = build_direction_matrix(&sol.x);
        y = Some(sol.x);
        if let Some(prev) = u_prev {
            if (u - prev).abs() <= params.eps_ci {
                ci_done = true;
                break;
            }
        }
        u_prev = Some(u);
    }
    if !ci_done {
        return Err(Error::Convergence { stage: "convex iteration".into(), iterations: params.max_ci_iters, trace });
    }
    let y_min = y.expect("at least one CI iteration");
    let u_min = osbep(&y_min);
    let bound = params.beta * u_min;

    // majorization-minimization
    let mut x = y_min;
    let mut f_cur = kernel.evaluate(&x);
    let mut g_prev: Option<f64> = None;
    let mut mm_done = false;
    for it in 0..params.max_mm_iters {
        let v = kernel.surrogate_gradient(&x);
        let prob = ConvexSubproblem::new(v.clone(), omega.clone(), Some(bound), rho, k, m, params.eps)?;
        let sol = sdp::solve(&prob, Some(&x), &opts)?;
        let g = sdp::re_inner(&v, &sol.x);
        let f_new = kernel.evaluate(&sol.x);
        // an ascent step means the subproblem solve hit its accuracy floor
        if f_new > f_cur {
            mm_done = true;
            break;
        }
        x = sol.x;
        f_cur = f_new;
        trace.push(TraceRow {
            phase: "mm".into(),
            iteration: it,
            objective: f_new,
            osbep: osbep(&x),
            nep: nep_lifted(&nep_f, &x),
            rank_ratio: rank_ratio(&x),
            surrogate: g,
        });
        if let Some(prev) = g_prev {
            if (g - prev).abs() <= params.eps_mm {
                mm_done = true;
                break;
            }
        }
        g_prev = Some(g);
    }
    if !mm_done {
        return Err(Error::Convergence { stage: "majorization-minimization".into(), iterations: params.max_mm_iters, trace });
    }
    let p_opt = extract_rank_one(&x, params.rank_one_tol)?;
    let shaping = ShapingSet::from_shaping_vector(p_opt.clone(), k, m)?;
    Ok(OptimizerOutcome {
        p_opt,
        shaping,
        x_final: x,
        u_min,
        osbep_bound: bound,
        kernel_min_eigenvalue: kernel.min_eigenvalue(),
        trace,
    })
}
