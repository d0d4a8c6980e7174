//! Log-barrier interior-point solver for the lifted subproblems
//!
//! ```text
//! minimize    tr(C X)
//! subject to  tr(X) = rho,  tr(Omega X) <= U (optional),
//!             sum_i 1 / d_i(X) <= tau   or   d_i(X) = rho / S for all i,
//!             X >= 0 (Hermitian),
//! ```
//!
//! with `d_i(X) = f_i^H X f_i`. Each reciprocal term is carried by an auxiliary
//! `t_i` with `[[d_i, 1], [1, t_i]] >= 0` and `sum t_i <= tau`. The solver works on
//! complex Hermitian `X` directly. Newton directions use the Kronecker structure of
//! the log-det Hessian: `dX = -X (G + sum_b u_b B_b) X` over a handful of constraint
//! matrices `B_b`, which leaves a small dense linear system in the coefficients `u`.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::dsp::{ComplexMat, ComplexVec, C64};
use crate::error::{Error, Result};
use crate::precoder::nep_domain;

/// NEP constraint flavor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NepConstraint {
    /// `sum_i 1/d_i <= tau`.
    Bound(f64),
    /// `d_i = value` for every `i` (the zero-tolerance case, which has no interior
    /// under the inequality form).
    Equal(f64),
}

/// Tolerance below which the NEP slack counts as zero.
pub const NEP_EQUALITY_EPS: f64 = 1e-12;

/// Lifted convex subproblem with a linear objective.
#[derive(Debug, Clone)]
pub struct ConvexSubproblem {
    pub objective: ComplexMat,
    pub omega: ComplexMat,
    pub osbep_bound: Option<f64>,
    pub rho: f64,
    pub nep_vectors: Vec<ComplexVec>,
    pub nep: NepConstraint,
}

/// Vectors `f_i` with `d_i(p p^H) = |[(W_K^H kron I_M) p]_i|^2`.
pub fn nep_vectors(k: usize, m: usize) -> Vec<ComplexVec> {
    let s = k * m;
    // row i of the transform F; f_i = conj(F[i, :])
    let mut f = vec![ComplexVec::zeros(s); s];
    for j in 0..s {
        let mut e = vec![C64::new(0.0, 0.0); s];
        e[j] = C64::new(1.0, 0.0);
        let col = nep_domain(&e, k, m);
        for i in 0..s {
            f[i][j] = col[i].conj();
        }
    }
    f
}

/// `d_i(X) = f_i^H X f_i`.
pub fn nep_entries(vectors: &[ComplexVec], x: &ComplexMat) -> Vec<f64> {
    vectors.iter().map(|f| f.dotc(&(x * f)).re).collect()
}

/// `zeta(X) = sum_i 1 / d_i(X)`.
pub fn nep_lifted(vectors: &[ComplexVec], x: &ComplexMat) -> f64 {
    nep_entries(vectors, x).iter().map(|d| 1.0 / d).sum()
}

impl ConvexSubproblem {
    /// Problem over waveform `K x M` with NEP tolerance `eps` (`tau = (1 + eps) S^2 / rho`).
    pub fn new(objective: ComplexMat, omega: ComplexMat, osbep_bound: Option<f64>, rho: f64, k: usize, m: usize, eps: f64) -> Result<Self> {
        let s = k * m;
        if objective.shape() != (s, s) || omega.shape() != (s, s) {
            return Err(Error::InvalidDimension(format!("objective/Omega must be {s}x{s}")));
        }
        if !(rho > 0.0) || !(eps >= 0.0) {
            return Err(Error::InvalidArgument(format!("rho = {rho}, eps = {eps}")));
        }
        let nep = if eps <= NEP_EQUALITY_EPS {
            NepConstraint::Equal(rho / s as f64)
        } else {
            NepConstraint::Bound((1.0 + eps) * (s * s) as f64 / rho)
        };
        Ok(Self { objective, omega, osbep_bound, rho, nep_vectors: nep_vectors(k, m), nep })
    }

    pub fn size(&self) -> usize {
        self.objective.nrows()
    }

    pub fn objective_value(&self, x: &ComplexMat) -> f64 {
        re_inner(&self.objective, x)
    }

    /// Largest violation of the constraints at `X` (absolute units of each constraint).
    pub fn max_violation(&self, x: &ComplexMat) -> f64 {
        let mut v = (x.trace().re - self.rho).abs();
        if let Some(u) = self.osbep_bound {
            v = v.max(re_inner(&self.omega, x) - u);
        }
        match self.nep {
            NepConstraint::Bound(tau) => v = v.max(nep_lifted(&self.nep_vectors, x) - tau),
            NepConstraint::Equal(c) => {
                for d in nep_entries(&self.nep_vectors, x) {
                    v = v.max((d - c).abs());
                }
            }
        }
        v.max(0.0)
    }
}

/// Barrier-method parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop when `barrier parameter / k <= gap_tol * max(1, |objective|)`.
    pub gap_tol: f64,
    /// Growth of `k` between centering stages.
    pub mu: f64,
    pub max_newton: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-9, mu: 20.0, max_newton: 5000 }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: ComplexMat,
    pub objective: f64,
    pub gap: f64,
    pub newton_steps: usize,
}

/// `Re tr(A B)` for Hermitian `A`, `B`.
pub(crate) fn re_inner(a: &ComplexMat, b: &ComplexMat) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

fn hermitize(a: &ComplexMat) -> ComplexMat {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Basis matrices spanning the low-rank part of the Hessian and the equality normals.
#[derive(Clone, Copy)]
enum Basis {
    Rank1(usize),
    Omega,
    Identity,
}

struct State<'a> {
    prob: &'a ConvexSubproblem,
    x: ComplexMat,
    t: Vec<f64>,
}

impl<'a> State<'a> {
    fn uses_t(&self) -> bool {
        matches!(self.prob.nep, NepConstraint::Bound(_))
    }

    /// Barrier value (objective weight `k`), or `None` outside the domain.
    fn phi(&self, k: f64, x: &ComplexMat, t: &[f64]) -> Option<f64> {
        let logdet = hermitian_logdet(x)?;
        let mut val = k * re_inner(&self.prob.objective, x) - logdet;
        if let Some(u) = self.prob.osbep_bound {
            let r = u - re_inner(&self.prob.omega, x);
            if !(r > 0.0) {
                return None;
            }
            val -= r.ln();
        }
        if let NepConstraint::Bound(tau) = self.prob.nep {
            let d = nep_entries(&self.prob.nep_vectors, x);
            for (di, ti) in d.iter().zip(t) {
                let a = di * ti - 1.0;
                if !(a > 0.0 && *di > 0.0) {
                    return None;
                }
                val -= a.ln();
            }
            let s = tau - t.iter().sum::<f64>();
            if !(s > 0.0) {
                return None;
            }
            val -= s.ln();
        }
        Some(val)
    }

    fn barrier_parameter(&self) -> f64 {
        let s = self.prob.size() as f64;
        let mut nu = s;
        if self.prob.osbep_bound.is_some() {
            nu += 1.0;
        }
        if self.uses_t() {
            nu += 2.0 * s + 1.0;
        }
        nu
    }

    /// One damped Newton step at weight `k`. Returns the squared Newton decrement and
    /// whether the line search made progress.
    fn newton_step(&mut self, k: f64) -> Result<(f64, bool)> {
        let prob = self.prob;
        let s = prob.size();
        let x = &self.x;
        let f = &prob.nep_vectors;
        let z: Vec<ComplexVec> = f.iter().map(|fi| x * fi).collect();
        let d: Vec<f64> = f.iter().zip(&z).map(|(fi, zi)| fi.dotc(zi).re).collect();

        let mut basis: Vec<Basis> = Vec::new();
        let nep_bound = match prob.nep {
            NepConstraint::Bound(tau) => Some(tau),
            NepConstraint::Equal(_) => None,
        };
        if nep_bound.is_some() {
            basis.extend((0..s).map(Basis::Rank1));
        }
        let omega_idx = prob.osbep_bound.map(|_| {
            basis.push(Basis::Omega);
            basis.len() - 1
        });
        let eq_start = basis.len();
        match prob.nep {
            NepConstraint::Bound(_) => basis.push(Basis::Identity),
            NepConstraint::Equal(_) => basis.extend((0..s).map(Basis::Rank1)),
        }
        let nb = basis.len();
        let q = if nep_bound.is_some() { s } else { 0 };

        // products with X used by every Gram entry
        let ox = &prob.omega * x;
        let cx = &prob.objective * x;
        let xx = x * x;
        let full = |b: Basis| -> Option<&ComplexMat> {
            match b {
                Basis::Omega => Some(&ox),
                _ => None,
            }
        };
        // <A, X B X> for basis pairs
        let gram = |a: Basis, b: Basis| -> f64 {
            match (a, b) {
                (Basis::Rank1(i), Basis::Rank1(j)) => f[i].dotc(&z[j]).norm_sqr(),
                (Basis::Rank1(i), Basis::Omega) | (Basis::Omega, Basis::Rank1(i)) => z[i].dotc(&(&prob.omega * &z[i])).re,
                (Basis::Rank1(i), Basis::Identity) | (Basis::Identity, Basis::Rank1(i)) => z[i].norm_squared(),
                (Basis::Omega, Basis::Omega) => re_inner(full(Basis::Omega).unwrap(), &ox),
                (Basis::Omega, Basis::Identity) | (Basis::Identity, Basis::Omega) => re_inner(&prob.omega, &xx),
                (Basis::Identity, Basis::Identity) => xx.trace().re,
            }
        };
        let with_c = |a: Basis| -> f64 {
            match a {
                Basis::Rank1(i) => z[i].dotc(&(&prob.objective * &z[i])).re,
                Basis::Omega => re_inner(&cx, &ox),
                Basis::Identity => re_inner(&prob.objective, &xx),
            }
        };
        let with_x = |a: Basis| -> f64 {
            match a {
                Basis::Rank1(i) => d[i],
                Basis::Omega => ox.trace().re,
                Basis::Identity => x.trace().re,
            }
        };

        // gradient pieces other than -X^{-1}: k C + sum_i w_i F_i + Omega / r
        let r = prob.osbep_bound.map(|u| u - ox.trace().re);
        let (a_i, w, g_t, s_slack) = if let Some(tau) = nep_bound {
            let a: Vec<f64> = d.iter().zip(&self.t).map(|(di, ti)| di * ti - 1.0).collect();
            let w: Vec<f64> = self.t.iter().zip(&a).map(|(ti, ai)| -ti / ai).collect();
            let ss = tau - self.t.iter().sum::<f64>();
            let gt: Vec<f64> = d.iter().zip(&a).map(|(di, ai)| -di / ai + 1.0 / ss).collect();
            (a, w, gt, ss)
        } else {
            (vec![], vec![], vec![], 1.0)
        };

        let mut kmat = DMatrix::<f64>::zeros(nb, nb);
        for a in 0..nb {
            for b in a..nb {
                let v = gram(basis[a], basis[b]);
                kmat[(a, b)] = v;
                kmat[(b, a)] = v;
            }
        }
        // kg_b = <B_b, X G X> with G the full gradient in X
        let mut kg = DVector::<f64>::zeros(nb);
        for a in 0..nb {
            let mut v = k * with_c(basis[a]) - with_x(basis[a]);
            for i in 0..q {
                v += w[i] * gram(basis[a], Basis::Rank1(i));
            }
            if let Some(rv) = r {
                v += gram(basis[a], Basis::Omega) / rv;
            }
            kg[a] = v;
        }

        // unknowns: u (nb) then dt (q)
        let n = nb + q;
        let mut sys = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for i in 0..q {
            let (ai, ti, di) = (a_i[i], self.t[i], d[i]);
            // a^2 u_i + t^2 (K u)_i - dt_i = -t^2 kg_i
            sys[(i, i)] += ai * ai;
            for b in 0..nb {
                sys[(i, b)] += ti * ti * kmat[(i, b)];
            }
            sys[(i, nb + i)] -= 1.0;
            rhs[i] = -ti * ti * kg[i];
            // -(K u)_i + d^2 dt_i + (a^2 / s^2) sum dt = -a^2 g_t_i + kg_i
            let row = nb + i;
            for b in 0..nb {
                sys[(row, b)] -= kmat[(i, b)];
            }
            sys[(row, nb + i)] += di * di;
            for j in 0..q {
                sys[(row, nb + j)] += ai * ai / (s_slack * s_slack);
            }
            rhs[row] = -ai * ai * g_t[i] + kg[i];
        }
        if let (Some(oi), Some(rv)) = (omega_idx, r) {
            // r^2 u_O + (K u)_O = -kg_O
            sys[(oi, oi)] += rv * rv;
            for b in 0..nb {
                sys[(oi, b)] += kmat[(oi, b)];
            }
            rhs[oi] = -kg[oi];
        }
        for e in eq_start..nb {
            // <E_e, dX> = c_e - <E_e, X>:  -(K u)_e = res_e + kg_e
            let target = match (prob.nep, basis[e]) {
                (NepConstraint::Equal(c), Basis::Rank1(_)) => c,
                _ => prob.rho,
            };
            let res = target - with_x(basis[e]);
            for b in 0..nb {
                sys[(e, b)] -= kmat[(e, b)];
            }
            rhs[e] = res + kg[e];
        }
        let sol = solve_dense(&sys, &rhs)?;

        // dX = -X (k C + sum_i w_i F_i + Omega / r + sum_b u_b B_b) X + X
        let mut m = &prob.objective * C64::new(k, 0.0);
        let add_basis = |b: Basis, coef: f64, m: &mut ComplexMat| match b {
            Basis::Rank1(i) => m.gerc(C64::new(coef, 0.0), &f[i], &f[i], C64::new(1.0, 0.0)),
            Basis::Omega => *m += &prob.omega * C64::new(coef, 0.0),
            Basis::Identity => {
                for j in 0..s {
                    m[(j, j)] += C64::new(coef, 0.0);
                }
            }
        };
        for i in 0..q {
            add_basis(Basis::Rank1(i), w[i], &mut m);
        }
        if let Some(rv) = r {
            add_basis(Basis::Omega, 1.0 / rv, &mut m);
        }
        for b in 0..nb {
            add_basis(basis[b], sol[b], &mut m);
        }
        let dx = hermitize(&(x - x * &m * x));
        let dt: Vec<f64> = (0..q).map(|i| sol[nb + i]).collect();

        // directional derivative <grad, d>; the -X^{-1} part gives -tr(X^{-1} dX)
        let mut grad_m = &prob.objective * C64::new(k, 0.0);
        for i in 0..q {
            grad_m.gerc(C64::new(w[i], 0.0), &f[i], &f[i], C64::new(1.0, 0.0));
        }
        if let Some(rv) = r {
            grad_m += &prob.omega * C64::new(1.0 / rv, 0.0);
        }
        let xinv_dx = Cholesky::new(x.clone())
            .map(|c| c.solve(&dx).trace().re)
            .ok_or_else(|| Error::Numeric { iterations: 0, reason: "iterate left the PSD cone".into() })?;
        let mut slope = re_inner(&grad_m, &dx) - xinv_dx;
        for i in 0..q {
            slope += g_t[i] * dt[i];
        }
        let decrement = -slope;

        // backtracking line search
        let phi0 = self.phi(k, x, &self.t).ok_or_else(|| Error::Numeric { iterations: 0, reason: "iterate outside the barrier domain".into() })?;
        let mut step = 1.0;
        while step >= 1e-14 {
            let xn = x + &dx * C64::new(step, 0.0);
            let tn: Vec<f64> = self.t.iter().zip(&dt).map(|(a, b)| a + step * b).collect();
            if let Some(p) = self.phi(k, &xn, &tn) {
                if p <= phi0 + 0.25 * step * slope {
                    let xn = hermitize(&xn);
                    let xp = project_equalities(prob, &xn);
                    self.x = if self.phi(k, &xp, &tn).is_some() { xp } else { xn };
                    self.t = tn;
                    return Ok((decrement, true));
                }
            }
            step *= 0.5;
        }
        Ok((decrement, false))
    }
}

/// Restores the equality constraints exactly: a congruence that rescales every
/// `d_i` to its target in the NEP-equality mode, a plain rescaling for the trace.
fn project_equalities(prob: &ConvexSubproblem, x: &ComplexMat) -> ComplexMat {
    match prob.nep {
        NepConstraint::Equal(c) => {
            let f = &prob.nep_vectors;
            let s = f.len();
            let d = nep_entries(f, x);
            if d.iter().any(|v| !(*v > 0.0)) {
                return x.clone();
            }
            // D = F^H diag(sqrt(c / d)) F with rows of F equal to f_i^H
            let fm = ComplexMat::from_fn(s, s, |i, j| f[i][j].conj());
            let mut scaled = fm.clone();
            for i in 0..s {
                let g = (c / d[i]).sqrt();
                scaled.row_mut(i).scale_mut(g);
            }
            let dm = fm.adjoint() * scaled;
            hermitize(&(&dm * x * &dm))
        }
        NepConstraint::Bound(_) => x * C64::new(prob.rho / x.trace().re, 0.0),
    }
}

/// `log det X` through a Cholesky factorization with explicit pivot checks, or
/// `None` when `X` is not positive definite.
pub(crate) fn hermitian_logdet(x: &ComplexMat) -> Option<f64> {
    let n = x.nrows();
    let mut l = ComplexMat::zeros(n, n);
    let mut logdet = 0.0;
    for j in 0..n {
        let mut diag = x[(j, j)].re;
        for q in 0..j {
            diag -= l[(j, q)].norm_sqr();
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        let ljj = diag.sqrt();
        logdet += 2.0 * ljj.ln();
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut v = x[(i, j)];
            for q in 0..j {
                v -= l[(i, q)] * l[(j, q)].conj();
            }
            l[(i, j)] = v / ljj;
        }
    }
    Some(logdet)
}

fn solve_dense(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = a.clone().lu();
    let mut x = lu.solve(b).ok_or_else(|| Error::Numeric { iterations: 0, reason: "singular Newton system".into() })?;
    // one step of iterative refinement
    let r = b - a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Ok(x)
}

/// Strictly feasible start: mixes `hint` with `(rho/S) I`.
fn interior_start(prob: &ConvexSubproblem, hint: Option<&ComplexMat>) -> Option<ComplexMat> {
    let s = prob.size();
    let center = ComplexMat::identity(s, s) * C64::new(prob.rho / s as f64, 0.0);
    let strictly_feasible = |x: &ComplexMat| -> bool {
        if let Some(u) = prob.osbep_bound {
            if re_inner(&prob.omega, x) >= u {
                return false;
            }
        }
        if let NepConstraint::Bound(tau) = prob.nep {
            let d = nep_entries(&prob.nep_vectors, x);
            if d.iter().any(|v| *v <= 0.0) || d.iter().map(|v| 1.0 / v).sum::<f64>() >= tau {
                return false;
            }
        }
        true
    };
    let mut kappa = 1.0;
    for _ in 0..60 {
        let x = match hint {
            Some(h) => h * C64::new(1.0 - kappa, 0.0) + &center * C64::new(kappa, 0.0),
            None => center.clone(),
        };
        if strictly_feasible(&x) {
            return Some(x);
        }
        if hint.is_none() {
            return None;
        }
        kappa *= 0.5;
    }
    None
}

/// Solves the subproblem; `hint` is a feasible (possibly boundary) point used to
/// build the interior start. Without a usable start a phase-I problem minimizing the
/// out-of-subband power is solved first.
pub fn solve(prob: &ConvexSubproblem, hint: Option<&ComplexMat>, opts: &SolverOptions) -> Result<SdpSolution> {
    let s = prob.size();
    if prob.nep_vectors.len() != s {
        return Err(Error::InvalidDimension("NEP vectors do not match the problem size".into()));
    }
    if let NepConstraint::Bound(tau) = prob.nep {
        if tau <= (s * s) as f64 / prob.rho {
            return Err(Error::Infeasible(format!("NEP bound {tau} below the minimum S^2/rho")));
        }
    }
    let mut start = interior_start(prob, hint).or_else(|| hint.and_then(|_| interior_start(prob, None)));
    if start.is_none() {
        let u = prob.osbep_bound.expect("only the OSBEP bound can exclude the centre");
        let phase1 = ConvexSubproblem { objective: prob.omega.clone(), osbep_bound: None, ..prob.clone() };
        let sol = solve(&phase1, None, opts)?;
        if sol.objective >= u {
            return Err(Error::Infeasible(format!("minimum out-of-subband power {:e} exceeds the bound {u:e}", sol.objective)));
        }
        start = interior_start(prob, Some(&sol.x));
    }
    let x0 = start.ok_or_else(|| Error::Infeasible("no strictly feasible starting point".into()))?;
    run_barrier(prob, x0, opts)
}

fn run_barrier(prob: &ConvexSubproblem, x0: ComplexMat, opts: &SolverOptions) -> Result<SdpSolution> {
    let t0 = match prob.nep {
        NepConstraint::Bound(tau) => {
            let d = nep_entries(&prob.nep_vectors, &x0);
            let zeta: f64 = d.iter().map(|v| 1.0 / v).sum();
            let c = (tau / zeta).sqrt();
            d.iter().map(|v| c / v).collect()
        }
        NepConstraint::Equal(_) => vec![],
    };
    let mut st = State { prob, x: x0, t: t0 };
    let nu = st.barrier_parameter();
    let cnorm = prob.objective.norm().max(1e-300);
    let mut k = nu / (prob.rho * cnorm);
    let mut steps = 0;
    loop {
        // centering
        let mut centred = false;
        for _ in 0..200 {
            let (dec, moved) = st.newton_step(k)?;
            steps += 1;
            if dec / 2.0 <= 1e-9 {
                centred = true;
                break;
            }
            if !moved {
                break;
            }
            if steps >= opts.max_newton {
                return Err(Error::Numeric { iterations: steps, reason: format!("Newton budget exhausted (decrement {dec:e}, gap {:e})", nu / k) });
            }
        }
        let obj = prob.objective_value(&st.x);
        let gap = nu / k;
        if centred && gap <= opts.gap_tol * obj.abs().max(1.0) {
            return Ok(SdpSolution { x: st.x, objective: obj, gap, newton_steps: steps });
        }
        if !centred && gap <= 1e3 * opts.gap_tol * obj.abs().max(1.0) {
            // numerical floor reached close to the target
            return Ok(SdpSolution { x: st.x, objective: obj, gap, newton_steps: steps });
        }
        k *= opts.mu;
    }
}
