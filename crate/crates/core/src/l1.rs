//! Euclidean projection onto the L1 ball and the L1-constrained linear subproblem solved at
//! every outer iteration.
//!
//! The subproblem minimizes `‖Λx − g‖²` subject to `‖x‖₁ ≤ T`, with `Λ = JᵀJ + μ·diag(JᵀJ)`
//! and `g = Λθʲ − Jᵀr`. When the unconstrained minimizer `Λ⁻¹g` is feasible it is returned
//! directly. Otherwise a monotone accelerated projected gradient method runs on the
//! objective, and every few iterations the sign pattern of the iterate is used to solve the
//! equality-constrained KKT system exactly; that candidate is accepted once it satisfies the
//! first-order optimality test.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;
const POLISH_EVERY: usize = 10;
const POWER_ITERS: usize = 500;
/// Relative tolerance of the KKT test applied to active-set candidates.
const KKT_RTOL: f64 = 1e-9;
/// Safety margin on the power-iteration estimate of the Lipschitz constant.
const LIPSCHITZ_MARGIN: f64 = 1.01;

/// Projects `v` onto `{u : ‖u‖₁ ≤ radius}`.
pub fn project_l1(v: &[f64], radius: f64) -> Result<Vec<f64>> {
    if !(radius >= 0.0) {
        return Err(Error::Argument(format!("L1 radius must be non-negative, got {radius}")));
    }
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return Ok(v.to_vec());
    }
    if radius == 0.0 {
        return Ok(vec![0.0; v.len()]);
    }
    let threshold = l1_threshold(v, radius);
    Ok(v.iter().map(|&x| x.signum() * (x.abs() - threshold).max(0.0)).collect())
}

/// Soft-threshold level that maps `v` onto the sphere of the given radius.
fn l1_threshold(v: &[f64], radius: f64) -> f64 {
    let mut mags: Vec<(usize, f64)> = v.iter().map(|x| x.abs()).enumerate().collect();
    // descending magnitude; stable sort keeps index order among ties
    mags.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut cumsum = 0.0;
    let mut threshold = 0.0;
    for (j, &(_, u)) in mags.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - radius) / (j + 1) as f64;
        if u - candidate > 0.0 {
            threshold = candidate;
        } else {
            break;
        }
    }
    threshold
}

/// `min ‖Λx − g‖²  s.t.  ‖x‖₁ ≤ radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSpec {
    lambda: DMatrix<f64>,
    target: DVector<f64>,
    radius: f64,
}

impl SubproblemSpec {
    pub fn new(lambda: DMatrix<f64>, target: DVector<f64>, radius: f64) -> Result<Self> {
        let p = lambda.nrows();
        if lambda.ncols() != p || target.len() != p {
            return Err(Error::Argument(format!(
                "subproblem shapes disagree: Λ is {}×{}, g has {}",
                lambda.nrows(),
                lambda.ncols(),
                target.len()
            )));
        }
        if !(radius >= 0.0) {
            return Err(Error::Argument(format!("L1 radius must be non-negative, got {radius}")));
        }
        let scale = lambda.amax().max(1.0);
        let asym = (&lambda - lambda.transpose()).amax();
        if asym > 1e-10 * scale {
            return Err(Error::Argument(format!("Λ is not symmetric (max asymmetry {asym:e})")));
        }
        if let Some(k) = (0..p).find(|&k| !(lambda[(k, k)] > 0.0)) {
            return Err(Error::Argument(format!(
                "Λ diagonal entry {k} is not positive ({})",
                lambda[(k, k)]
            )));
        }
        Ok(SubproblemSpec { lambda, target, radius })
    }

    /// Builds the subproblem for the linearization `(JᵀJ, Jᵀr)` at `current` with damping `mu`.
    pub fn from_linearization(
        jtj: &DMatrix<f64>,
        jtr: &DVector<f64>,
        current: &DVector<f64>,
        mu: f64,
        radius: f64,
    ) -> Result<Self> {
        let mut lambda = jtj.clone();
        for k in 0..lambda.nrows() {
            lambda[(k, k)] += mu * jtj[(k, k)];
        }
        let target = &lambda * current - jtr;
        Self::new(lambda, target, radius)
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }

    /// `‖Λx − g‖²`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        (&self.lambda * DVector::from_column_slice(x) - &self.target).norm_squared()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubproblemMethod {
    /// The unconstrained minimizer was feasible.
    Unconstrained,
    /// Accelerated projected gradient reached the tolerance on its own.
    ProjectedGradient,
    /// The exact KKT solve on the iterate's sign pattern passed the optimality test.
    Polished,
}

#[derive(Debug, Clone, Copy)]
pub struct SubproblemOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub record_history: bool,
    /// Active-set polish cadence in iterations; 0 disables it.
    pub polish_every: usize,
}

impl Default for SubproblemOptions {
    fn default() -> Self {
        SubproblemOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            record_history: false,
            polish_every: POLISH_EVERY,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Norm of `x − P(x − ∇/L)`, the step-scaled projected-gradient residual.
    pub residual: f64,
    pub iterations: usize,
    pub method: SubproblemMethod,
    /// Objective at the start and after each inner iteration, when requested.
    pub history: Vec<f64>,
}

pub fn solve_subproblem(sp: &SubproblemSpec, warm_start: &[f64], tol: f64) -> Result<Vec<f64>> {
    solve_subproblem_with(
        sp,
        warm_start,
        &SubproblemOptions {
            tol,
            ..Default::default()
        },
    )
    .map(|s| s.x)
}

/// Internal quadratic `½xᵀHx − cᵀx` with `H = ΛᵀΛ`, `c = Λᵀg`; same minimizers as `‖Λx − g‖²`.
struct Quadratic<'a> {
    sp: &'a SubproblemSpec,
    h: DMatrix<f64>,
    c: DVector<f64>,
    lipschitz: f64,
}

impl Quadratic<'_> {
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.h * x - &self.c
    }

    fn objective(&self, x: &DVector<f64>) -> f64 {
        self.sp.objective(x.as_slice())
    }

    fn residual(&self, x: &DVector<f64>) -> Result<f64> {
        let g = self.gradient(x);
        let step: Vec<f64> = x
            .iter()
            .zip(g.iter())
            .map(|(xi, gi)| xi - gi / self.lipschitz)
            .collect();
        let proj = project_l1(&step, self.sp.radius)?;
        Ok(x.iter().zip(&proj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
    }

    /// Exact minimizer over the face given by the sign pattern of `x`, if it is consistent.
    /// Solves the KKT system `H_SS x_S + ν s = c_S`, `sᵀx_S = T` for a support and signs.
    fn kkt_solve(&self, support: &[(usize, f64)]) -> Option<(DVector<f64>, f64)> {
        let m = support.len();
        let mut kkt = DMatrix::zeros(m + 1, m + 1);
        let mut rhs = DVector::zeros(m + 1);
        for (a, &(i, s)) in support.iter().enumerate() {
            for (b, &(j, _)) in support.iter().enumerate() {
                kkt[(a, b)] = self.h[(i, j)];
            }
            kkt[(a, m)] = s;
            kkt[(m, a)] = s;
            rhs[a] = self.c[i];
        }
        rhs[m] = self.sp.radius;
        let sol = kkt.lu().solve(&rhs)?;
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut out = DVector::zeros(self.h.nrows());
        for (a, &(i, _)) in support.iter().enumerate() {
            out[i] = sol[a];
        }
        Some((out, sol[m]))
    }

    /// Active-set refinement starting from the sign pattern of `x`. Returns a point that
    /// satisfies the KKT conditions of the boundary problem to a relative tolerance.
    fn polish(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let p = x.len();
        let mut support: Vec<(usize, f64)> = (0..p).filter(|&i| x[i] != 0.0).map(|i| (i, x[i].signum())).collect();
        if support.is_empty() {
            let g = self.gradient(x);
            let k = (0..p).max_by(|&a, &b| g[a].abs().total_cmp(&g[b].abs()))?;
            support.push((k, -g[k].signum()));
        }
        let scale = self.c.amax().max(self.h.amax() * self.sp.radius).max(f64::MIN_POSITIVE);
        for _ in 0..3 * p + 3 {
            let (cand, nu) = self.kkt_solve(&support)?;
            // Drop coordinates whose sign flipped, then add the worst off-support violator.
            if let Some(pos) = support.iter().position(|&(i, s)| cand[i] * s <= 0.0) {
                support.remove(pos);
                if support.is_empty() {
                    return None;
                }
                continue;
            }
            if nu < -KKT_RTOL * scale {
                return None;
            }
            let g = self.gradient(&cand);
            let worst = (0..p)
                .filter(|i| support.iter().all(|&(j, _)| j != *i))
                .map(|i| (i, g[i].abs() - nu.max(0.0)))
                .max_by(|a, b| a.1.total_cmp(&b.1));
            match worst {
                Some((i, excess)) if excess > KKT_RTOL * scale => {
                    support.push((i, -g[i].signum()));
                    support.sort_by_key(|&(j, _)| j);
                }
                _ => return Some(cand),
            }
        }
        None
    }
}

fn lipschitz(h: &DMatrix<f64>) -> f64 {
    let p = h.nrows();
    let mut v = DVector::from_fn(p, |i, _| 1.0 + 0.01 * i as f64);
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..POWER_ITERS {
        let w = h * &v;
        let norm = w.norm();
        if norm == 0.0 {
            break;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - est).abs() <= 1e-12 * next.abs() {
            est = next;
            break;
        }
        est = next;
    }
    est * LIPSCHITZ_MARGIN
}

pub fn solve_subproblem_with(
    sp: &SubproblemSpec,
    warm_start: &[f64],
    opts: &SubproblemOptions,
) -> Result<SubproblemSolution> {
    let p = sp.dim();
    if warm_start.len() != p {
        return Err(Error::Argument(format!(
            "warm start has {} entries, subproblem has {p}",
            warm_start.len()
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {}", opts.tol)));
    }

    let unconstrained = match sp.lambda.clone().cholesky() {
        Some(ch) => ch.solve(&sp.target),
        None => sp
            .lambda
            .clone()
            .lu()
            .solve(&sp.target)
            .ok_or_else(|| Error::Argument("Λ is singular".into()))?,
    };
    let l1: f64 = unconstrained.iter().map(|v| v.abs()).sum();
    if l1 <= sp.radius {
        let objective = sp.objective(unconstrained.as_slice());
        return Ok(SubproblemSolution {
            x: unconstrained.iter().copied().collect(),
            objective,
            residual: 0.0,
            iterations: 0,
            method: SubproblemMethod::Unconstrained,
            history: if opts.record_history {
                vec![objective]
            } else {
                Vec::new()
            },
        });
    }

    let h = sp.lambda.transpose() * &sp.lambda;
    let c = sp.lambda.transpose() * &sp.target;
    // The residual bounds the distance to the minimizer only up to the condition number.
    let curvature = h.clone().symmetric_eigenvalues().min().max(0.0);
    let q = Quadratic {
        sp,
        lipschitz: lipschitz(&h),
        h,
        c,
    };
    let stop = opts.tol * (curvature / q.lipschitz).min(1.0);

    let mut x = DVector::from_vec(project_l1(warm_start, sp.radius)?);
    let mut fx = q.objective(&x);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut history = Vec::new();
    if opts.record_history {
        history.push(fx);
    }
    let finish = |x: DVector<f64>, objective, residual, iterations, method, history| SubproblemSolution {
        x: x.iter().copied().collect(),
        objective,
        residual,
        iterations,
        method,
        history,
    };
    let try_polish = |x: &DVector<f64>, fx: f64, history: &mut Vec<f64>| -> Result<Option<(DVector<f64>, f64, f64)>> {
        let Some(cand) = q.polish(x) else {
            return Ok(None);
        };
        let fc = q.objective(&cand);
        let l1: f64 = cand.iter().map(|v| v.abs()).sum();
        if fc > fx * (1.0 + 1e-12) + f64::MIN_POSITIVE || l1 > sp.radius * (1.0 + 1e-12) {
            return Ok(None);
        }
        let fc = fc.min(fx);
        if opts.record_history {
            history.push(fc);
        }
        let rc = q.residual(&cand)?;
        Ok(Some((cand, fc, rc)))
    };

    let mut residual = q.residual(&x)?;
    if residual <= stop {
        return Ok(finish(x, fx, residual, 0, SubproblemMethod::ProjectedGradient, history));
    }
    if opts.polish_every > 0 {
        if let Some((cand, fc, rc)) = try_polish(&x, fx, &mut history)? {
            return Ok(finish(cand, fc, rc, 0, SubproblemMethod::Polished, history));
        }
    }

    for iter in 1..=opts.max_iter {
        let g = q.gradient(&y);
        let step: Vec<f64> = y.iter().zip(g.iter()).map(|(yi, gi)| yi - gi / q.lipschitz).collect();
        let z = DVector::from_vec(project_l1(&step, sp.radius)?);
        let fz = q.objective(&z);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let prev = x.clone();
        if fz <= fx {
            x = z;
            fx = fz;
            y = &x + (&x - &prev) * ((t - 1.0) / t_next);
            t = t_next;
        } else {
            // monotone safeguard doubles as an adaptive restart
            y = x.clone();
            t = 1.0;
        }
        if opts.record_history {
            history.push(fx);
        }
        residual = q.residual(&x)?;
        if residual <= stop {
            return Ok(finish(
                x,
                fx,
                residual,
                iter,
                SubproblemMethod::ProjectedGradient,
                history,
            ));
        }
        if opts.polish_every > 0 && iter % opts.polish_every == 0 {
            if let Some((cand, fc, rc)) = try_polish(&x, fx, &mut history)? {
                return Ok(finish(cand, fc, rc, iter, SubproblemMethod::Polished, history));
            }
        }
    }
    Err(Error::Subproblem {
        iterations: opts.max_iter,
        residual,
        best: x.iter().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Projection by bisection on the soft-threshold level.
    fn threshold_search(v: &[f64], radius: f64) -> Vec<f64> {
        let l1: f64 = v.iter().map(|x| x.abs()).sum();
        if l1 <= radius {
            return v.to_vec();
        }
        let shrink = |t: f64| -> f64 { v.iter().map(|x| (x.abs() - t).max(0.0)).sum() };
        let (mut lo, mut hi) = (0.0, v.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if shrink(mid) > radius {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        v.iter().map(|x| x.signum() * (x.abs() - t).max(0.0)).collect()
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_l1(&[0.2, -0.3], 1.0).unwrap(), vec![0.2, -0.3]);
        assert_eq!(project_l1(&[3.0, 0.0], 1.0).unwrap(), vec![1.0, 0.0]);
        assert_eq!(project_l1(&[2.0, 1.0], 2.0).unwrap(), vec![1.5, 0.5]);
        assert_eq!(project_l1(&[2.0, -1.0], 0.0).unwrap(), vec![0.0, 0.0]);
        assert!(project_l1(&[1.0], -1.0).is_err());
        assert!(project_l1(&[1.0], f64::NAN).is_err());
    }

    #[test]
    fn projection_ties_are_deterministic() {
        let out = project_l1(&[1.0, -1.0, 1.0, 0.5], 1.5).unwrap();
        assert_eq!(out, vec![0.5, -0.5, 0.5, 0.0]);
    }

    proptest! {
        #[test]
        fn projection_feasible_and_matches_search(
            v in proptest::collection::vec(-5.0f64..5.0, 1..10),
            r in 0.0f64..6.0,
        ) {
            let p = project_l1(&v, r).unwrap();
            let l1: f64 = p.iter().map(|x| x.abs()).sum();
            prop_assert!(l1 <= r + 1e-12);
            let oracle = threshold_search(&v, r);
            for (a, b) in p.iter().zip(&oracle) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
        }

        #[test]
        fn projection_non_expansive(
            u in proptest::collection::vec(-5.0f64..5.0, 6),
            v in proptest::collection::vec(-5.0f64..5.0, 6),
            r in 0.0f64..4.0,
        ) {
            let pu = project_l1(&u, r).unwrap();
            let pv = project_l1(&v, r).unwrap();
            let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            prop_assert!(d(&pu, &pv) <= d(&u, &v) + 1e-12);
        }
    }

    fn random_spd(rng: &mut ChaCha8Rng, p: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(p + 3, p, |_, _| rng.random_range(-1.0..1.0));
        let mut l = a.transpose() * &a;
        for k in 0..p {
            l[(k, k)] += 0.1;
        }
        l
    }

    #[test]
    fn identity_lambda_reduces_to_projection() {
        let g = DVector::from_vec(vec![0.8, -1.4, 0.3]);
        let sp = SubproblemSpec::new(DMatrix::identity(3, 3), g.clone(), 1.0).unwrap();
        let x = solve_subproblem(&sp, &[0.0; 3], 1e-12).unwrap();
        let p = project_l1(g.as_slice(), 1.0).unwrap();
        for (a, b) in x.iter().zip(&p) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn huge_radius_gives_plain_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = random_spd(&mut rng, 4);
        let g = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        let sp = SubproblemSpec::new(l.clone(), g.clone(), f64::INFINITY).unwrap();
        let sol = solve_subproblem_with(&sp, &[0.0; 4], &Default::default()).unwrap();
        assert_eq!(sol.method, SubproblemMethod::Unconstrained);
        let expect = l.lu().solve(&g).unwrap();
        for (a, b) in sol.x.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn objective_history_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let p = 6;
            let l = random_spd(&mut rng, p);
            let g = DVector::from_fn(p, |_, _| rng.random_range(-3.0..3.0));
            let sp = SubproblemSpec::new(l, g, 0.5).unwrap();
            let opts = SubproblemOptions {
                tol: 1e-6,
                record_history: true,
                polish_every: 0,
                ..Default::default()
            };
            let sol = solve_subproblem_with(&sp, &[0.0; 6], &opts).unwrap();
            for w in sol.history.windows(2) {
                assert!(w[1] <= w[0], "objective increased: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn warm_start_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let l = random_spd(&mut rng, 5);
        let g = DVector::from_fn(5, |_, _| rng.random_range(-3.0..3.0));
        let sp = SubproblemSpec::new(l, g, 0.7).unwrap();
        let a = solve_subproblem(&sp, &[0.0; 5], 1e-10).unwrap();
        let b = solve_subproblem(&sp, &[0.3, -0.2, 0.1, 0.0, 0.1], 1e-10).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-8);
        }
    }

    #[test]
    fn radius_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let l = random_spd(&mut rng, 5);
        let g = DVector::from_fn(5, |_, _| rng.random_range(-3.0..3.0));
        let mut last = f64::INFINITY;
        for r in [0.0, 0.1, 0.3, 0.6, 1.0, 2.0, 5.0] {
            let sp = SubproblemSpec::new(l.clone(), g.clone(), r).unwrap();
            let x = solve_subproblem(&sp, &[0.0; 5], 1e-10).unwrap();
            let f = sp.objective(&x);
            assert!(f <= last + 1e-12);
            last = f;
        }
    }

    #[test]
    fn invalid_specs() {
        let g = DVector::from_vec(vec![1.0, 1.0]);
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(SubproblemSpec::new(asym, g.clone(), 1.0).is_err());
        let zero_diag = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        assert!(SubproblemSpec::new(zero_diag, g.clone(), 1.0).is_err());
        assert!(SubproblemSpec::new(DMatrix::identity(2, 2), g.clone(), -1.0).is_err());
        let sp = SubproblemSpec::new(DMatrix::identity(2, 2), g, 1.0).unwrap();
        assert!(solve_subproblem(&sp, &[0.0; 2], 0.0).is_err());
        assert!(solve_subproblem(&sp, &[0.0; 3], 1e-8).is_err());
    }

    #[test]
    fn non_convergence_reports_best_iterate() {
        let l = DMatrix::from_row_slice(2, 2, &[1.0, 0.999, 0.999, 1.0]);
        let g = DVector::from_vec(vec![3.0, -2.0]);
        let sp = SubproblemSpec::new(l, g, 0.5).unwrap();
        let opts = SubproblemOptions {
            tol: 1e-14,
            max_iter: 3,
            record_history: false,
            polish_every: 0,
        };
        match solve_subproblem_with(&sp, &[0.0, 0.0], &opts) {
            Err(Error::Subproblem { iterations, best, .. }) => {
                assert_eq!(iterations, 3);
                assert_eq!(best.len(), 2);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
