//! Gossip matrices and their spectral machinery.
//!
//! A gossip matrix W encodes one communication round: symmetric, doubly
//! stochastic, positive diagonal, connected support. The key scalar is the
//! spectral gap delta = 1 - ||W - (1/n)11^T||_2, which controls how fast
//! repeated mixing contracts disagreement between agents.
//!
//! The augmented operator applied by [`apply_augmented`] realizes one round
//! of loopless Chebyshev acceleration: instead of running an inner loop of
//! Chebyshev-polynomial gossip rounds, the two-block recursion couples the
//! current and lagged iterate so that a single communication per iteration
//! achieves the accelerated sqrt(delta) contraction on average. The bound
//! that makes this sound is checked numerically by [`verify_lca`].

use std::collections::{BTreeSet, VecDeque};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::{sym_eigenvalues, Mat};
use crate::rng::SplitMix64;

/// Symmetric doubly-stochastic mixing weights over n agents, with the edge
/// set of its positive off-diagonal support and a flag recording whether the
/// matrix is known positive semidefinite. The spectral gap is computed once
/// and cached.
#[derive(Debug)]
pub struct GossipMatrix {
    n: usize,
    weights: Mat,
    edge_set: Vec<(usize, usize)>,
    psd: bool,
    gap: OnceLock<f64>,
}

impl Clone for GossipMatrix {
    fn clone(&self) -> Self {
        let gap = OnceLock::new();
        if let Some(g) = self.gap.get() {
            let _ = gap.set(*g);
        }
        GossipMatrix {
            n: self.n,
            weights: self.weights.clone(),
            edge_set: self.edge_set.clone(),
            psd: self.psd,
            gap,
        }
    }
}

impl GossipMatrix {
    /// Validates weights against the structural requirements (exact symmetry,
    /// row sums within 1e-12 of one, nonnegative entries, positive diagonal,
    /// connected support) and derives the edge set from the support.
    pub fn from_weights(weights: Mat, psd: bool) -> Result<Self> {
        let n = weights.rows();
        if n == 0 || weights.cols() != n {
            return Err(Error::InvalidGraph(format!(
                "weights must be square and nonempty, got {}x{}",
                weights.rows(),
                weights.cols()
            )));
        }
        let mut edge_set = Vec::new();
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidGraph(format!(
                        "weight [{i}][{j}] = {w} is negative or not finite"
                    )));
                }
                if weights[(j, i)] != w {
                    return Err(Error::InvalidGraph(format!(
                        "weights are not symmetric at [{i}][{j}]"
                    )));
                }
                row_sum += w;
                if i < j && w > 0.0 {
                    edge_set.push((i, j));
                }
            }
            if (row_sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidGraph(format!(
                    "row {i} sums to {row_sum}, not 1"
                )));
            }
            if weights[(i, i)] <= 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "diagonal entry [{i}][{i}] must be positive"
                )));
            }
        }
        if !edges_connected(n, &edge_set) {
            return Err(Error::InvalidGraph(
                "support graph of positive off-diagonal weights is disconnected".into(),
            ));
        }
        Ok(GossipMatrix {
            n,
            weights,
            edge_set,
            psd,
            gap: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &Mat {
        &self.weights
    }

    pub fn edge_set(&self) -> &[(usize, usize)] {
        &self.edge_set
    }

    pub fn psd(&self) -> bool {
        self.psd
    }

    /// One communication round: W * A.
    pub fn mix(&self, a: &Mat) -> Mat {
        self.weights.matmul(a)
    }

    /// Spectral gap delta = 1 - max_{k >= 2} |lambda_k(W)|, computed from the
    /// eigenvalues of W - (1/n)11^T and cached on first use.
    pub fn spectral_gap(&self) -> Result<f64> {
        if let Some(g) = self.gap.get() {
            return Ok(*g);
        }
        let n = self.n;
        let shift = 1.0 / n as f64;
        let centered = Mat::from_fn(n, n, |i, j| self.weights[(i, j)] - shift);
        let eigs = sym_eigenvalues(&centered)?;
        let radius = eigs.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let delta = 1.0 - radius;
        if delta <= 1e-14 {
            return Err(Error::InvalidGraph(format!(
                "spectral gap {delta:.3e} is not positive; the support graph is disconnected or the chain is periodic"
            )));
        }
        let _ = self.gap.set(delta);
        Ok(delta)
    }

    /// Derived mixing constants for the cached spectral gap.
    pub fn spectral_constants(&self) -> Result<SpectralConstants> {
        spectral_constants(self.spectral_gap()?)
    }

    /// Plain-text form: first line `n`, then n rows of n weights.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for i in 0..self.n {
            let mut first = true;
            for v in self.weights.row(i) {
                if !first {
                    s.push(' ');
                }
                s.push_str(&format!("{:.16e}", v));
                first = false;
            }
            s.push('\n');
        }
        s
    }

    /// Parses the [`GossipMatrix::to_text`] format and revalidates all
    /// structural invariants. The psd flag is established spectrally.
    pub fn from_text(text: &str) -> Result<Self> {
        let first = text.lines().next().ok_or_else(|| Error::Parse {
            line: 1,
            msg: "empty gossip matrix file".into(),
        })?;
        let n: usize = first.trim().parse().map_err(|_| Error::Parse {
            line: 1,
            msg: format!("expected agent count, got '{}'", first.trim()),
        })?;
        let body: String = format!("{} {}\n", n, n)
            + &text
                .lines()
                .skip(1)
                .map(|l| format!("{l}\n"))
                .collect::<String>();
        let weights = Mat::from_text(&body, 0).map_err(|e| match e {
            // The synthetic header occupies the real file's first line, so
            // body line numbers already match the file.
            Error::Parse { line, msg } => Error::Parse { line, msg },
            other => other,
        })?;
        let eigs = sym_eigenvalues(&weights)?;
        let psd = eigs.first().map(|e| *e >= -1e-12).unwrap_or(false);
        GossipMatrix::from_weights(weights, psd)
    }
}

fn edges_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    if n == 0 {
        return false;
    }
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                queue.push_back(w);
            }
        }
    }
    count == n
}

/// Cycle topology: W[i][i] = 1/2 and W[i][i +- 1 mod n] = 1/4. Positive
/// semidefinite since its circulant eigenvalues 1/2 + cos(2 pi k/n)/2 are
/// nonnegative. Requires n >= 3; a 2-cycle would double its single edge.
pub fn build_ring(n: usize) -> Result<GossipMatrix> {
    if n < 3 {
        return Err(Error::InvalidGraph(format!(
            "ring requires n >= 3 agents, got {n}"
        )));
    }
    let w = Mat::from_fn(n, n, |i, j| {
        if i == j {
            0.5
        } else if (i + 1) % n == j || (j + 1) % n == i {
            0.25
        } else {
            0.0
        }
    });
    GossipMatrix::from_weights(w, true)
}

/// Lazy Metropolis weights on an explicit undirected edge set:
/// W[i][j] = 1/(2 max(deg i, deg j)) on edges, diagonal takes the slack.
/// Every diagonal entry is at least 1/2, which makes the matrix diagonally
/// dominant and hence positive semidefinite.
pub fn build_metropolis_lazy(n: usize, edge_set: &[(usize, usize)]) -> Result<GossipMatrix> {
    if n == 0 {
        return Err(Error::InvalidGraph("empty graph".into()));
    }
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(edge_set.len());
    for &(a, b) in edge_set {
        if a == b {
            return Err(Error::InvalidGraph(format!("self-loop at agent {a}")));
        }
        if a >= n || b >= n {
            return Err(Error::InvalidGraph(format!(
                "edge ({a}, {b}) exceeds agent count {n}"
            )));
        }
        let e = (a.min(b), a.max(b));
        if !edges.contains(&e) {
            edges.push(e);
        }
    }
    if !edges_connected(n, &edges) {
        return Err(Error::InvalidGraph("edge graph is disconnected".into()));
    }
    let mut deg = vec![0usize; n];
    for &(i, j) in &edges {
        deg[i] += 1;
        deg[j] += 1;
    }
    let mut w = Mat::zeros(n, n);
    for &(i, j) in &edges {
        let v = 1.0 / (2.0 * deg[i].max(deg[j]) as f64);
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    GossipMatrix::from_weights(w, true)
}

/// Ring of n agents plus `chords` distinct extra edges drawn by seeded
/// rejection sampling, weighted with [`build_metropolis_lazy`]. Each proposal
/// consumes two raw draws (both endpoints uniform mod n) and is discarded on
/// a self-loop or an edge already present, ring edges included, so a given
/// (n, chords, seed) triple names exactly one graph.
pub fn build_chorded_ring(n: usize, chords: usize, seed: u64) -> Result<GossipMatrix> {
    if n < 3 {
        return Err(Error::InvalidGraph(format!(
            "chorded ring requires n >= 3 agents, got {n}"
        )));
    }
    let max_chords = n * (n - 1) / 2 - n;
    if chords > max_chords {
        return Err(Error::InvalidGraph(format!(
            "{chords} chords requested but only {max_chords} non-ring pairs exist for n = {n}"
        )));
    }
    let mut edges: BTreeSet<(usize, usize)> = (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            (i.min(j), i.max(j))
        })
        .collect();
    let mut rng = SplitMix64::new(seed);
    let mut added = 0;
    while added < chords {
        let i = (rng.next_u64() % n as u64) as usize;
        let j = (rng.next_u64() % n as u64) as usize;
        if i == j {
            continue;
        }
        if edges.insert((i.min(j), i.max(j))) {
            added += 1;
        }
    }
    let list: Vec<(usize, usize)> = edges.into_iter().collect();
    build_metropolis_lazy(n, &list)
}

/// Shifts any admissible gossip matrix to the positive semidefinite
/// (I + W)/2, preserving symmetry, stochasticity and support.
pub fn make_psd(w: &GossipMatrix) -> GossipMatrix {
    let n = w.n();
    let half = Mat::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        (id + w.weights()[(i, j)]) / 2.0
    });
    GossipMatrix::from_weights(half, true)
        .expect("(I + W)/2 of an admissible gossip matrix is admissible")
}

/// Mixing constants derived from the spectral gap:
/// theta solves (1 - delta)^2 (1 + theta)^2 = 4 theta, eta_w = (1 + theta)/2
/// is the lagged-mixing weight, rho_w = sqrt(eta_w) the per-round contraction
/// modulus, and delta_tilde = 1 - rho_w the effective gap, of order
/// sqrt(delta) rather than delta.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralConstants {
    pub delta: f64,
    pub theta: f64,
    pub eta_w: f64,
    pub rho_w: f64,
    pub delta_tilde: f64,
}

/// Closed-form evaluation of [`SpectralConstants`] for a gap in (0, 1].
pub fn spectral_constants(delta: f64) -> Result<SpectralConstants> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!(
            "spectral gap must lie in (0, 1], got {delta}"
        )));
    }
    let lam = 1.0 - delta;
    let root = (1.0 - lam * lam).sqrt();
    let theta = (1.0 - root) / (1.0 + root);
    let eta_w = (1.0 + theta) / 2.0;
    let rho_w = eta_w.sqrt();
    let delta_tilde = 1.0 - rho_w;
    Ok(SpectralConstants {
        delta,
        theta,
        eta_w,
        rho_w,
        delta_tilde,
    })
}

/// Duplicates an n x d block into the 2n x d stacked form whose top and
/// bottom halves are equal.
pub fn ca_stack(a: &Mat) -> Mat {
    a.vstack(a)
}

/// Top (current) n rows of a 2n-row stacked matrix.
pub fn top_block(a: &Mat) -> Mat {
    a.row_block(0, a.rows() / 2)
}

/// Bottom (lagged) n rows of a 2n-row stacked matrix.
pub fn bottom_block(a: &Mat) -> Mat {
    a.row_block(a.rows() / 2, a.rows() / 2)
}

/// One application of the augmented mixing operator to a 2n x d stack:
/// top out = (1 + eta_w) W (top of A) - eta_w (bottom of A), bottom out =
/// top of A. Only block operations are used; the 2n x 2n operator is never
/// materialized.
pub fn apply_augmented(w: &GossipMatrix, eta_w: f64, a: &Mat) -> Result<Mat> {
    let n = w.n();
    if a.rows() != 2 * n {
        return Err(Error::Shape(format!(
            "stacked matrix has {} rows, expected 2n = {}",
            a.rows(),
            2 * n
        )));
    }
    let top = top_block(a);
    let bot = bottom_block(a);
    let mixed = w.mix(&top);
    let new_top = mixed.scale(1.0 + eta_w).add_scaled(-eta_w, &bot);
    Ok(new_top.vstack(&top))
}

/// Total squared disagreement: sum over agents of the squared distance of
/// each row from the average row.
pub fn consensus_error(a: &Mat) -> f64 {
    let mean = a.mean_row();
    let mut total = 0.0;
    for i in 0..a.rows() {
        for (j, v) in a.row(i).iter().enumerate() {
            let dev = v - mean[j];
            total += dev * dev;
        }
    }
    total
}

/// Outcome of the loopless-Chebyshev-acceleration polynomial check.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LcaReport {
    pub max_ratio: f64,
    pub pass: bool,
}

/// Numerically certifies the polynomial bound behind loopless Chebyshev
/// acceleration: with T_0 = T_1 = 1 and
/// T_{k+2}(x) = (1 + eta) x T_{k+1}(x) - eta T_k(x), the ratio
/// T_k(x)^2 / eta^k stays at most 7 for all x in [0, 1 - delta] and
/// eta in [(1 + theta)/2, 1).
///
/// Evaluated on a uniform grid in x over k = 0..k_max using the rescaled
/// recursion t_k = T_k / eta^{k/2}, which keeps every quantity O(1) instead
/// of multiplying two exponentially vanishing numbers.
pub fn verify_lca(delta: f64, eta: f64, k_max: usize, grid: usize) -> Result<LcaReport> {
    let consts = spectral_constants(delta)?;
    if grid < 2 {
        return Err(Error::Domain(format!("grid must be >= 2, got {grid}")));
    }
    if !(eta < 1.0) {
        return Err(Error::Domain(format!("eta must be < 1, got {eta}")));
    }
    if eta < (1.0 + consts.theta) / 2.0 {
        return Err(Error::Domain(format!(
            "eta = {eta} is below the lemma threshold (1 + theta)/2 = {}",
            (1.0 + consts.theta) / 2.0
        )));
    }
    let sqrt_eta = eta.sqrt();
    let mut max_ratio = 0.0_f64;
    for g in 0..grid {
        let x = (1.0 - delta) * g as f64 / (grid - 1) as f64;
        let coeff = (1.0 + eta) * x / sqrt_eta;
        // t_0 = T_0 = 1; t_1 = T_1 / sqrt(eta).
        let mut prev = 1.0_f64;
        let mut cur = 1.0 / sqrt_eta;
        max_ratio = max_ratio.max(prev * prev);
        if k_max >= 1 {
            max_ratio = max_ratio.max(cur * cur);
        }
        for _k in 2..=k_max {
            let next = coeff * cur - prev;
            prev = cur;
            cur = next;
            max_ratio = max_ratio.max(cur * cur);
        }
    }
    Ok(LcaReport {
        max_ratio,
        pass: max_ratio <= 7.0,
    })
}

/// Serializes an undirected edge set as one `i j` pair per line.
pub fn edges_to_text(edges: &[(usize, usize)]) -> String {
    let mut s = String::new();
    for &(i, j) in edges {
        s.push_str(&format!("{} {}\n", i, j));
    }
    s
}

/// Parses the [`edges_to_text`] format, reporting 1-based line numbers.
pub fn edges_from_text(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::Parse {
                line: ln + 1,
                msg: format!("expected 'i j', got '{}'", line.trim()),
            });
        }
        let parse = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse {
                line: ln + 1,
                msg: format!("invalid agent index '{s}'"),
            })
        };
        edges.push((parse(toks[0])?, parse(toks[1])?));
    }
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_rows_and_validity() {
        let w = build_ring(4).unwrap();
        assert_eq!(w.weights().row(0), &[0.5, 0.25, 0.0, 0.25]);
        assert!(w.psd());
        assert_eq!(w.edge_set().len(), 4);

        let w3 = build_ring(3).unwrap();
        for i in 0..3 {
            let mut row = w3.weights().row(i).to_vec();
            row.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(row, vec![0.25, 0.25, 0.5]);
        }
        assert!(build_ring(2).is_err());
    }

    #[test]
    fn metropolis_path_of_three() {
        let w = build_metropolis_lazy(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(w.weights().row(0), &[0.75, 0.25, 0.0]);
        assert_eq!(w.weights().row(1), &[0.25, 0.5, 0.25]);
        assert_eq!(w.weights().row(2), &[0.0, 0.25, 0.75]);
        let eigs = sym_eigenvalues(w.weights()).unwrap();
        for (e, expect) in eigs.iter().zip([0.25, 0.75, 1.0]) {
            assert!((e - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn metropolis_two_agents() {
        let w = build_metropolis_lazy(2, &[(0, 1)]).unwrap();
        assert_eq!(w.weights().row(0), &[0.5, 0.5]);
        assert_eq!(w.weights().row(1), &[0.5, 0.5]);
    }

    #[test]
    fn metropolis_rejects_bad_graphs() {
        assert!(build_metropolis_lazy(4, &[(0, 1), (2, 3)]).is_err());
        assert!(build_metropolis_lazy(3, &[(0, 0), (1, 2)]).is_err());
        assert!(build_metropolis_lazy(3, &[(0, 5)]).is_err());
    }

    #[test]
    fn chorded_ring_matches_reference_spectrum() {
        // Frozen against the dense-eigensolver reference for these seeds.
        let w = build_chorded_ring(50, 12, 9).unwrap();
        assert_eq!(w.edge_set().len(), 50 + 12);
        assert!(w.edge_set().contains(&(6, 28)));
        assert!(w.edge_set().contains(&(4, 43)));
        assert!(w.psd());
        assert!((w.spectral_gap().unwrap() - 1.947630857695e-2).abs() < 1e-10);
        let sc = w.spectral_constants().unwrap();
        assert!((sc.eta_w - 0.835840267976).abs() < 1e-9);
        assert!((sc.delta_tilde - 0.085756997306).abs() < 1e-9);

        let dense = build_chorded_ring(200, 50, 7).unwrap();
        assert_eq!(dense.edge_set().len(), 250);
        assert!((dense.spectral_gap().unwrap() - 9.621623628007e-3).abs() < 1e-10);
    }

    #[test]
    fn chorded_ring_is_deterministic_and_bounded() {
        let a = build_chorded_ring(20, 5, 123).unwrap();
        let b = build_chorded_ring(20, 5, 123).unwrap();
        assert_eq!(a.edge_set(), b.edge_set());
        let c = build_chorded_ring(20, 5, 124).unwrap();
        assert_ne!(a.edge_set(), c.edge_set());

        // n = 4 has exactly two possible chords (the diagonals).
        assert!(build_chorded_ring(4, 2, 0).is_ok());
        assert!(build_chorded_ring(4, 3, 0).is_err());
        assert!(build_chorded_ring(2, 0, 0).is_err());
    }

    #[test]
    fn make_psd_examples() {
        let ring = build_ring(4).unwrap();
        let h = make_psd(&ring);
        assert_eq!(h.weights()[(0, 0)], 0.75);
        assert_eq!(h.weights()[(0, 1)], 0.125);
        assert_eq!(h.weights()[(0, 2)], 0.0);

        let flip = GossipMatrix::from_weights(
            Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
            false,
        );
        // The 2-cycle is periodic, so construction itself must reject it...
        assert!(flip.is_err());
        // ...but (I + W)/2 of a near-flip matrix is fine.
        let near = GossipMatrix::from_weights(
            Mat::from_rows(&[vec![0.1, 0.9], vec![0.9, 0.1]]).unwrap(),
            false,
        )
        .unwrap();
        let h = make_psd(&near);
        assert_eq!(h.weights()[(0, 0)], 0.55);
        assert_eq!(h.weights()[(0, 1)], 0.45);
    }

    #[test]
    fn gap_of_ring_four_is_half() {
        let w = build_ring(4).unwrap();
        let d = w.spectral_gap().unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        // Second call hits the cache and agrees.
        assert_eq!(w.spectral_gap().unwrap(), d);
    }

    #[test]
    fn gap_of_complete_mixing_is_one() {
        let n = 5;
        let w = GossipMatrix::from_weights(Mat::from_fn(n, n, |_, _| 0.2), false).unwrap();
        assert!((w.spectral_gap().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gap_of_ring_200_matches_analytic_value() {
        let w = build_ring(200).unwrap();
        let d = w.spectral_gap().unwrap();
        let analytic = (std::f64::consts::PI / 200.0).sin().powi(2);
        assert!((d - analytic).abs() < 1e-10, "{d} vs {analytic}");
        assert!((d - 2.467e-4).abs() < 1e-6);
    }

    #[test]
    fn ring_gap_matches_circulant_oracle() {
        for n in 3..=64usize {
            let w = build_ring(n).unwrap();
            let d = w.spectral_gap().unwrap();
            let mut radius = 0.0_f64;
            for k in 1..n {
                let lam = 0.5 + 0.5 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos();
                radius = radius.max(lam.abs());
            }
            assert!((d - (1.0 - radius)).abs() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn disconnected_gap_rejected() {
        // Block-diagonal pair of complete graphs is a valid stochastic
        // matrix but its support is disconnected. from_weights refuses it.
        let w = Mat::from_rows(&[
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.0, 0.0, 0.5, 0.5],
            vec![0.0, 0.0, 0.5, 0.5],
        ])
        .unwrap();
        assert!(GossipMatrix::from_weights(w, false).is_err());
    }

    #[test]
    fn spectral_constants_examples() {
        let c = spectral_constants(1.0).unwrap();
        assert_eq!(c.theta, 0.0);
        assert_eq!(c.eta_w, 0.5);
        assert!((c.rho_w - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((c.delta_tilde - (1.0 - 0.5f64.sqrt())).abs() < 1e-15);

        let c = spectral_constants(2.467e-4).unwrap();
        assert!((c.eta_w - 0.978).abs() < 5e-4, "eta_w = {}", c.eta_w);

        let c = spectral_constants(0.009).unwrap();
        assert!((c.eta_w - 0.883).abs() < 5e-3, "eta_w = {}", c.eta_w);

        assert!(spectral_constants(0.0).is_err());
        assert!(spectral_constants(1.5).is_err());
        assert!(spectral_constants(f64::NAN).is_err());
    }

    #[test]
    fn spectral_constants_defining_identity() {
        for delta in [1e-4, 1e-3, 1e-2, 0.1, 0.5, 0.9, 1.0] {
            let c = spectral_constants(delta).unwrap();
            let r = (1.0 - delta).powi(2) * (1.0 + c.theta).powi(2) - 4.0 * c.theta;
            assert!(r.abs() < 1e-10, "delta = {delta}: r = {r}");
            // The effective gap is of square-root order: for small delta it
            // is much larger than delta itself, which is what the lagged
            // mixing buys.
            assert!(c.delta_tilde > 0.0 && c.delta_tilde < 1.0);
            assert!(c.delta_tilde >= delta.sqrt() / 4.0, "delta = {delta}");
            assert!(c.delta_tilde <= delta.sqrt(), "delta = {delta}");
        }
    }

    #[test]
    fn augmented_scalar_and_fixed_point() {
        let w = GossipMatrix::from_weights(Mat::from_rows(&[vec![1.0]]).unwrap(), true).unwrap();
        let a = Mat::from_rows(&[vec![3.0], vec![5.0]]).unwrap();
        let out = apply_augmented(&w, 0.25, &a).unwrap();
        assert_eq!(out[(0, 0)], 1.25 * 3.0 - 0.25 * 5.0);
        assert_eq!(out[(1, 0)], 3.0);

        // Consensual input with equal blocks is a fixed point, exactly so
        // for dyadic weights and entries.
        let ring = build_ring(4).unwrap();
        let row = vec![1.5, -2.25];
        let x = Mat::from_rows(&vec![row; 8]).unwrap();
        let out = apply_augmented(&ring, 0.5, &x).unwrap();
        assert_eq!(out, x);

        assert!(apply_augmented(&ring, 0.5, &Mat::zeros(7, 2)).is_err());
    }

    #[test]
    fn consensus_error_examples() {
        let same = Mat::from_rows(&vec![vec![2.0, -1.0]; 6]).unwrap();
        assert_eq!(consensus_error(&same), 0.0);
        let two = Mat::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(consensus_error(&two), 2.0);
    }

    #[test]
    fn consensus_error_equals_projection_norm() {
        let mut rng = crate::rng::SplitMix64::new(8);
        let a = Mat::from_fn(5, 3, |_, _| rng.next_f64() * 4.0 - 2.0);
        let projected = a.center_rows();
        assert!((consensus_error(&a) - projected.frobenius_sq()).abs() < 1e-12);
    }

    #[test]
    fn lca_ratio_starts_at_one() {
        // T_0 = 1 gives ratio exactly 1 at k = 0 for every x; with k_max = 0
        // the maximum over the grid is exactly 1.
        let r = verify_lca(0.3, 0.9, 0, 101).unwrap();
        assert_eq!(r.max_ratio, 1.0);
        // T_1 = 1 as well, so at k = 1 the ratio is 1/eta, still within the
        // bound; through k = 2 at x = 0 the ratio T_2(0)^2 / eta^2 = 1.
        let c = spectral_constants(0.3).unwrap();
        let eta = (1.0 + c.theta) / 2.0;
        let r = verify_lca(0.3, eta, 1, 2).unwrap();
        assert!((r.max_ratio - 1.0 / eta).abs() < 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn lca_bound_holds_at_threshold_eta() {
        let delta = 0.01;
        let c = spectral_constants(delta).unwrap();
        let r = verify_lca(delta, (1.0 + c.theta) / 2.0, 2000, 10001).unwrap();
        assert!(r.pass, "max_ratio = {}", r.max_ratio);
        assert!(r.max_ratio <= 7.0);
    }

    #[test]
    fn lca_rejects_bad_inputs() {
        let c = spectral_constants(0.5).unwrap();
        let low = (1.0 + c.theta) / 2.0 - 0.01;
        assert!(verify_lca(0.5, low, 100, 11).is_err());
        assert!(verify_lca(0.5, 1.0, 100, 11).is_err());
        assert!(verify_lca(0.5, 0.9, 100, 1).is_err());
        assert!(verify_lca(0.0, 0.9, 100, 11).is_err());
    }

    #[test]
    fn stacked_mixing_decays_at_accelerated_rate() {
        // Repeated augmented mixing of a centered ca-stack contracts in
        // Frobenius norm like rho_w^k with constant at most 14. Blocks are
        // re-centered after every application: mixing preserves centered
        // blocks exactly in exact arithmetic, and the projection removes the
        // mean-mode component that floating-point roundoff reinjects, which
        // would otherwise dominate once the signal decays below 1e-16 of its
        // starting size.
        let w = build_ring(8).unwrap();
        let c = w.spectral_constants().unwrap();
        let mut rng = crate::rng::SplitMix64::new(17);
        let a = Mat::from_fn(8, 3, |_, _| rng.next_f64() * 2.0 - 1.0).center_rows();
        let initial = a.frobenius_sq();
        let mut stack = ca_stack(&a);
        let mut worst = 0.0_f64;
        for k in 1..=500 {
            stack = apply_augmented(&w, c.eta_w, &stack).unwrap();
            stack = top_block(&stack)
                .center_rows()
                .vstack(&bottom_block(&stack).center_rows());
            let bound = 14.0 * c.rho_w.powi(2 * k) * initial;
            let norm = stack.frobenius_sq();
            worst = worst.max(norm / bound);
            assert!(
                norm <= bound,
                "k = {k}: {norm:.3e} > bound {bound:.3e}"
            );
        }
        assert!(worst > 1e-3, "bound should be active, worst ratio {worst}");
    }

    #[test]
    fn gossip_text_roundtrip() {
        let w = build_ring(5).unwrap();
        let text = w.to_text();
        let r = GossipMatrix::from_text(&text).unwrap();
        assert_eq!(r.weights(), w.weights());
        assert!(r.psd());
        assert_eq!(r.edge_set(), w.edge_set());

        let bad = "3\n0.5 0.25 0.25\n0.25 0.5 oops\n0.25 0.25 0.5\n";
        match GossipMatrix::from_text(bad).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn edge_text_roundtrip() {
        let edges = vec![(0, 1), (1, 2), (0, 3)];
        let text = edges_to_text(&edges);
        assert_eq!(edges_from_text(&text).unwrap(), edges);
        assert!(edges_from_text("0 1\n2 x\n").is_err());
    }
}
