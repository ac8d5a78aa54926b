//! Local objective suites with counted gradient oracles.
//!
//! Each of the n agents owns a local function f_i; the network minimizes the
//! average f = (1/n) sum_i f_i. Two families are provided:
//!
//! - quadratic: f_i(x) = (1/2) x' A_i x - b_i' x with symmetric positive
//!   definite A_i, so the global minimizer solves (mean A_i) x = mean b_i
//!   in closed form;
//! - logistic_l2: f_i(x) = log(1 + exp(-y_i z_i' x)) + (mu/2) ||x||^2, the
//!   penalized logistic regression loss on one training example per agent.
//!
//! Both are mu-strongly convex and L-smooth with constants computed from the
//! data, never hard-coded. Every gradient evaluation passes through a
//! [`GradientCounter`] so runs can report exact oracle complexity.

use std::path::Path;

use crate::error::{Error, Result};
use crate::mat::{sym_eigenvalues, Mat};
use crate::rng::SplitMix64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteKind {
    Quadratic,
    LogisticL2,
}

#[derive(Clone, Debug)]
enum SuiteData {
    Quadratic {
        /// Per-agent symmetric positive definite d x d matrices.
        a: Vec<Mat>,
        /// Per-agent linear terms, one row each.
        b: Vec<Vec<f64>>,
        /// Entrywise means of a and b, cached for global evaluations.
        a_mean: Mat,
        b_mean: Vec<f64>,
    },
    Logistic {
        /// Row i is agent i's feature vector z_i.
        z: Mat,
        /// Labels in {-1, +1}.
        y: Vec<f64>,
        mu_reg: f64,
    },
}

/// The n local functions with their shared smoothness constants.
#[derive(Clone, Debug)]
pub struct ObjectiveSuite {
    n: usize,
    d: usize,
    data: SuiteData,
    l_smooth: f64,
    mu_convex: f64,
}

/// Counts single-agent gradient evaluations. Optionally logs the set of
/// iterations at which any evaluation happened, which is how runs report
/// "gradient iterations" separately from raw evaluation totals.
#[derive(Clone, Debug, Default)]
pub struct GradientCounter {
    total_evals: u64,
    current_iteration: u64,
    log_flags: bool,
    flags: Vec<u64>,
}

impl GradientCounter {
    pub fn new(log_flags: bool) -> Self {
        GradientCounter {
            total_evals: 0,
            current_iteration: 0,
            log_flags,
            flags: Vec::new(),
        }
    }

    /// Marks the start of iteration k for flag attribution.
    pub fn begin_iteration(&mut self, k: u64) {
        self.current_iteration = k;
    }

    fn add(&mut self, count: u64) {
        self.total_evals += count;
        if self.log_flags && count > 0 {
            if self.flags.last() != Some(&self.current_iteration) {
                self.flags.push(self.current_iteration);
            }
        }
    }

    pub fn total_evals(&self) -> u64 {
        self.total_evals
    }

    /// Iterations at which at least one gradient was evaluated (when
    /// logging was enabled).
    pub fn flagged_iterations(&self) -> &[u64] {
        &self.flags
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(t)) without overflow for large |t|.
fn log1p_exp(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

impl ObjectiveSuite {
    /// Quadratic suite from explicit per-agent (A_i, b_i). Validates
    /// symmetry and strict positive definiteness of every A_i.
    pub fn quadratic(a: Vec<Mat>, b: Vec<Vec<f64>>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::InvalidObjective(format!(
                "need matching nonempty agent data, got {} matrices and {} vectors",
                a.len(),
                b.len()
            )));
        }
        let n = a.len();
        let d = a[0].rows();
        let mut l_smooth = f64::NEG_INFINITY;
        let mut mu_convex = f64::INFINITY;
        for (i, ai) in a.iter().enumerate() {
            if ai.rows() != d || ai.cols() != d || b[i].len() != d {
                return Err(Error::Shape(format!(
                    "agent {i}: expected {d}x{d} matrix and {d}-vector"
                )));
            }
            for r in 0..d {
                for c in 0..r {
                    if ai[(r, c)] != ai[(c, r)] {
                        return Err(Error::InvalidObjective(format!(
                            "agent {i}: matrix is not symmetric"
                        )));
                    }
                }
            }
            let eigs = sym_eigenvalues(ai)?;
            let lo = eigs[0];
            let hi = eigs[d - 1];
            if lo <= 0.0 {
                return Err(Error::InvalidObjective(format!(
                    "agent {i}: matrix has eigenvalue {lo:.3e}, not positive definite"
                )));
            }
            l_smooth = l_smooth.max(hi);
            mu_convex = mu_convex.min(lo);
        }
        let inv_n = 1.0 / n as f64;
        let mut a_mean = Mat::zeros(d, d);
        let mut b_mean = vec![0.0; d];
        for ai in &a {
            for r in 0..d {
                for c in 0..d {
                    a_mean[(r, c)] += ai[(r, c)];
                }
            }
        }
        for r in 0..d {
            for c in 0..d {
                a_mean[(r, c)] *= inv_n;
            }
        }
        for bi in &b {
            for (j, v) in bi.iter().enumerate() {
                b_mean[j] += v;
            }
        }
        for v in &mut b_mean {
            *v *= inv_n;
        }
        Ok(ObjectiveSuite {
            n,
            d,
            data: SuiteData::Quadratic {
                a,
                b,
                a_mean,
                b_mean,
            },
            l_smooth,
            mu_convex,
        })
    }

    /// Logistic suite from features (one row per agent), labels in {-1, +1},
    /// and the l2 penalty weight.
    pub fn logistic_l2(z: Mat, y: Vec<f64>, mu_reg: f64) -> Result<Self> {
        let n = z.rows();
        let d = z.cols();
        if n == 0 || d == 0 {
            return Err(Error::InvalidObjective("empty feature matrix".into()));
        }
        if y.len() != n {
            return Err(Error::Shape(format!(
                "{} labels for {} agents",
                y.len(),
                n
            )));
        }
        if !(mu_reg > 0.0) {
            return Err(Error::InvalidObjective(format!(
                "l2 penalty must be positive, got {mu_reg}"
            )));
        }
        for (i, yi) in y.iter().enumerate() {
            if *yi != 1.0 && *yi != -1.0 {
                return Err(Error::InvalidObjective(format!(
                    "label of agent {i} is {yi}, expected -1 or +1"
                )));
            }
        }
        // Per-agent Hessian norm is bounded by ||z_i||^2 / 4 + mu.
        let mut max_znorm_sq = 0.0_f64;
        for i in 0..n {
            let s: f64 = z.row(i).iter().map(|v| v * v).sum();
            max_znorm_sq = max_znorm_sq.max(s);
        }
        Ok(ObjectiveSuite {
            n,
            d,
            data: SuiteData::Logistic { z, y, mu_reg },
            l_smooth: max_znorm_sq / 4.0 + mu_reg,
            mu_convex: mu_reg,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> SuiteKind {
        match self.data {
            SuiteData::Quadratic { .. } => SuiteKind::Quadratic,
            SuiteData::Logistic { .. } => SuiteKind::LogisticL2,
        }
    }

    /// Gradient of agent i's local function at x (not counted; counting
    /// happens in the stacked operations below).
    fn grad_local(&self, i: usize, x: &[f64]) -> Vec<f64> {
        match &self.data {
            SuiteData::Quadratic { a, b, .. } => {
                let ai = &a[i];
                let mut g = vec![0.0; self.d];
                for r in 0..self.d {
                    let mut acc = 0.0;
                    for c in 0..self.d {
                        acc += ai[(r, c)] * x[c];
                    }
                    g[r] = acc - b[i][r];
                }
                g
            }
            SuiteData::Logistic { z, y, mu_reg } => {
                let zi = z.row(i);
                let u: f64 = zi.iter().zip(x).map(|(a, b)| a * b).sum();
                let s = sigmoid(-y[i] * u);
                let mut g = vec![0.0; self.d];
                for j in 0..self.d {
                    g[j] = -y[i] * s * zi[j] + mu_reg * x[j];
                }
                g
            }
        }
    }

    /// Local loss f_i(x).
    pub fn local_loss(&self, i: usize, x: &[f64]) -> f64 {
        match &self.data {
            SuiteData::Quadratic { a, b, .. } => {
                let ai = &a[i];
                let mut quad = 0.0;
                for r in 0..self.d {
                    let mut acc = 0.0;
                    for c in 0..self.d {
                        acc += ai[(r, c)] * x[c];
                    }
                    quad += x[r] * acc;
                }
                let lin: f64 = b[i].iter().zip(x).map(|(a, b)| a * b).sum();
                0.5 * quad - lin
            }
            SuiteData::Logistic { z, y, mu_reg } => {
                let zi = z.row(i);
                let u: f64 = zi.iter().zip(x).map(|(a, b)| a * b).sum();
                let sq: f64 = x.iter().map(|v| v * v).sum();
                log1p_exp(-y[i] * u) + 0.5 * mu_reg * sq
            }
        }
    }

    /// Global loss f(x), the average of local losses. For quadratics this
    /// uses the cached mean (A, b), which equals the agent average exactly
    /// in exact arithmetic and to roundoff in floating point.
    pub fn loss(&self, x: &[f64]) -> f64 {
        match &self.data {
            SuiteData::Quadratic { a_mean, b_mean, .. } => {
                let mut quad = 0.0;
                for r in 0..self.d {
                    let mut acc = 0.0;
                    for c in 0..self.d {
                        acc += a_mean[(r, c)] * x[c];
                    }
                    quad += x[r] * acc;
                }
                let lin: f64 = b_mean.iter().zip(x).map(|(a, b)| a * b).sum();
                0.5 * quad - lin
            }
            SuiteData::Logistic { .. } => {
                let mut total = 0.0;
                for i in 0..self.n {
                    total += self.local_loss(i, x);
                }
                total / self.n as f64
            }
        }
    }

    /// Gradient of the global loss f at x (uncounted; used by the reference
    /// minimizer and diagnostics glue, not by the decentralized methods).
    pub fn global_grad(&self, x: &[f64]) -> Vec<f64> {
        match &self.data {
            SuiteData::Quadratic { a_mean, b_mean, .. } => {
                let mut g = vec![0.0; self.d];
                for r in 0..self.d {
                    let mut acc = 0.0;
                    for c in 0..self.d {
                        acc += a_mean[(r, c)] * x[c];
                    }
                    g[r] = acc - b_mean[r];
                }
                g
            }
            SuiteData::Logistic { .. } => {
                let mut g = vec![0.0; self.d];
                for i in 0..self.n {
                    for (j, v) in self.grad_local(i, x).into_iter().enumerate() {
                        g[j] += v;
                    }
                }
                let inv = 1.0 / self.n as f64;
                for v in &mut g {
                    *v *= inv;
                }
                g
            }
        }
    }

    /// Stacked gradient: row i is grad f_i(row i of X). Counts n
    /// single-agent evaluations.
    pub fn grad_all(&self, x: &Mat, counter: &mut GradientCounter) -> Result<Mat> {
        if x.rows() != self.n || x.cols() != self.d {
            return Err(Error::Shape(format!(
                "grad_all: iterate block is {}x{}, suite expects {}x{}",
                x.rows(),
                x.cols(),
                self.n,
                self.d
            )));
        }
        let mut g = Mat::zeros(self.n, self.d);
        for i in 0..self.n {
            let gi = self.grad_local(i, x.row(i));
            g.row_mut(i).copy_from_slice(&gi);
        }
        counter.add(self.n as u64);
        Ok(g)
    }

    /// Every agent's gradient at one common point. Counts n evaluations.
    pub fn grad_at_common(&self, x: &[f64], counter: &mut GradientCounter) -> Result<Mat> {
        if x.len() != self.d {
            return Err(Error::Shape(format!(
                "grad_at_common: point has {} coordinates, suite expects {}",
                x.len(),
                self.d
            )));
        }
        let mut g = Mat::zeros(self.n, self.d);
        for i in 0..self.n {
            let gi = self.grad_local(i, x);
            g.row_mut(i).copy_from_slice(&gi);
        }
        counter.add(self.n as u64);
        Ok(g)
    }

    /// Smoothness and strong-convexity constants (L, mu) computed from the
    /// data at construction time.
    pub fn smoothness_constants(&self) -> (f64, f64) {
        (self.l_smooth, self.mu_convex)
    }

    pub fn kappa(&self) -> f64 {
        self.l_smooth / self.mu_convex
    }

    /// Closed-form global minimizer for quadratic suites: the solution of
    /// (mean A_i) x = mean b_i. None for non-quadratic suites.
    pub fn exact_minimizer(&self) -> Option<Vec<f64>> {
        match &self.data {
            SuiteData::Quadratic { a_mean, b_mean, .. } => {
                solve_spd(a_mean, b_mean).ok()
            }
            SuiteData::Logistic { .. } => None,
        }
    }

    /// Centralized reference minimizer: direct linear solve for quadratics,
    /// Nesterov's accelerated gradient descent for everything else
    /// (stepsize 1/L, momentum (sqrt(kappa)-1)/(sqrt(kappa)+1)), run until
    /// ||grad f(x)|| <= tol. Fails after 10^6 iterations.
    pub fn reference_minimizer(&self, tol: f64) -> Result<Vec<f64>> {
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
        }
        if let Some(x) = self.exact_minimizer() {
            let g = self.global_grad(&x);
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= tol {
                return Ok(x);
            }
            // Fall through to gradient polishing from the solved point.
            return self.agd_from(x, tol);
        }
        self.agd_from(vec![0.0; self.d], tol)
    }

    fn agd_from(&self, x0: Vec<f64>, tol: f64) -> Result<Vec<f64>> {
        const CAP: u64 = 1_000_000;
        let l = self.l_smooth;
        let kappa = self.kappa();
        let momentum = (kappa.sqrt() - 1.0) / (kappa.sqrt() + 1.0);
        let mut x = x0.clone();
        let mut v = x0;
        let mut residual = f64::INFINITY;
        for it in 0..CAP {
            let gx = self.global_grad(&x);
            residual = gx.iter().map(|g| g * g).sum::<f64>().sqrt();
            if residual <= tol {
                return Ok(x);
            }
            let gv = self.global_grad(&v);
            let mut xn = vec![0.0; self.d];
            for j in 0..self.d {
                xn[j] = v[j] - gv[j] / l;
            }
            for j in 0..self.d {
                v[j] = xn[j] + momentum * (xn[j] - x[j]);
            }
            x = xn;
            let _ = it;
        }
        Err(Error::NonConvergence {
            iters: CAP,
            residual,
        })
    }
}

/// Solves A x = b for symmetric positive definite A by Gaussian elimination
/// with partial pivoting (dimensions here are tiny).
fn solve_spd(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let d = a.rows();
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..d {
        let mut piv = col;
        for r in col + 1..d {
            if m[(r, col)].abs() > m[(piv, col)].abs() {
                piv = r;
            }
        }
        if m[(piv, col)].abs() < 1e-300 {
            return Err(Error::Numerical("singular mean matrix".into()));
        }
        if piv != col {
            for c in 0..d {
                let t = m[(col, c)];
                m[(col, c)] = m[(piv, c)];
                m[(piv, c)] = t;
            }
            rhs.swap(col, piv);
        }
        for r in col + 1..d {
            let factor = m[(r, col)] / m[(col, col)];
            if factor == 0.0 {
                continue;
            }
            for c in col..d {
                m[(r, c)] -= factor * m[(col, c)];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; d];
    for col in (0..d).rev() {
        let mut acc = rhs[col];
        for c in col + 1..d {
            acc -= m[(col, c)] * x[c];
        }
        x[col] = acc / m[(col, col)];
    }
    Ok(x)
}

/// Synthetic quadratic suite with controlled condition number. Every A_i is
/// diagonal with eigenvalues log-uniform in [1/kappa, 1]; one agent is
/// pinned to attain both endpoints so the realized condition number equals
/// the target exactly. Linear terms are approximately standard normal
/// (sum of twelve uniforms minus six). The global minimizer is known in
/// closed form.
pub fn synth_quadratic(n: usize, d: usize, kappa: f64, seed: u64) -> Result<ObjectiveSuite> {
    if !(kappa >= 1.0) {
        return Err(Error::Domain(format!(
            "condition number target must be >= 1, got {kappa}"
        )));
    }
    if n == 0 || d == 0 {
        return Err(Error::Domain("need n >= 1 agents and d >= 1 dimensions".into()));
    }
    if kappa > 1.0 && n == 1 && d == 1 {
        return Err(Error::Domain(
            "a single 1-dimensional agent cannot realize kappa > 1".into(),
        ));
    }
    let mu = 1.0 / kappa;
    let l = 1.0_f64;
    let mut rng = SplitMix64::new(seed);
    let log_mu = mu.ln();
    let log_l = l.ln();
    let mut eigs = Mat::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            let u = rng.next_f64();
            eigs[(i, j)] = (log_mu + u * (log_l - log_mu)).exp();
        }
    }
    if kappa > 1.0 {
        eigs[(0, 0)] = mu;
        if d > 1 {
            eigs[(0, 1)] = l;
        } else {
            eigs[(1 % n, 0)] = l;
        }
    }
    let mut b = Vec::with_capacity(n);
    for _ in 0..n {
        let mut bi = vec![0.0; d];
        for v in bi.iter_mut() {
            let mut s = 0.0;
            for _ in 0..12 {
                s += rng.next_f64();
            }
            *v = s - 6.0;
        }
        b.push(bi);
    }
    let a: Vec<Mat> = (0..n)
        .map(|i| Mat::from_fn(d, d, |r, c| if r == c { eigs[(i, r)] } else { 0.0 }))
        .collect();
    ObjectiveSuite::quadratic(a, b)
}

/// Loads the four-feature banknote authentication CSV: columns
/// `v1,v2,v3,v4,label` with labels in {0, 1}, mapped to {-1, +1}. A header
/// line whose first field is not numeric is skipped. Samples `n_agents`
/// rows without replacement using the seed, then builds a logistic suite
/// with the given l2 penalty.
pub fn load_banknote(
    path: &Path,
    n_agents: usize,
    mu_reg: f64,
    seed: u64,
) -> Result<ObjectiveSuite> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<[f64; 4]> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if ln == 0 && fields[0].parse::<f64>().is_err() {
            continue;
        }
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: ln + 1,
                msg: format!("expected 5 comma-separated fields, found {}", fields.len()),
            });
        }
        let mut feat = [0.0; 4];
        for (j, f) in fields[..4].iter().enumerate() {
            feat[j] = f.parse().map_err(|_| Error::Parse {
                line: ln + 1,
                msg: format!("invalid feature '{f}'"),
            })?;
        }
        let label: f64 = fields[4].parse().map_err(|_| Error::Parse {
            line: ln + 1,
            msg: format!("invalid label '{}'", fields[4]),
        })?;
        if label != 0.0 && label != 1.0 {
            return Err(Error::Parse {
                line: ln + 1,
                msg: format!("label must be 0 or 1, got {label}"),
            });
        }
        rows.push(feat);
        labels.push(if label == 1.0 { 1.0 } else { -1.0 });
    }
    if rows.len() < n_agents {
        return Err(Error::Data(format!(
            "file has {} usable rows, need {}",
            rows.len(),
            n_agents
        )));
    }
    // Seeded partial Fisher-Yates: the first n_agents positions of the
    // shuffled index list are the sample, order included.
    let mut idx: Vec<usize> = (0..rows.len()).collect();
    let mut rng = SplitMix64::new(seed);
    for i in 0..n_agents {
        let remaining = idx.len() - i;
        let j = i + (rng.next_u64() % remaining as u64) as usize;
        idx.swap(i, j);
    }
    let mut z = Mat::zeros(n_agents, 4);
    let mut y = Vec::with_capacity(n_agents);
    for (row, &source) in idx[..n_agents].iter().enumerate() {
        z.row_mut(row).copy_from_slice(&rows[source]);
        y.push(labels[source]);
    }
    ObjectiveSuite::logistic_l2(z, y, mu_reg)
}
