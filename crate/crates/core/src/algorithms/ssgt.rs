//! Snapshot-based stochastic gradient tracking.
//!
//! The method keeps a snapshot point Q with its cached gradient stack
//! M = grad F(Q) and a tracker G whose column mean stays equal to the mean
//! of M. Each iteration mixes communication-only updates; with probability
//! q (the zeta draw) the Z-update gets a variance-reduction correction
//! built from M minus a fresh gradient at the current point, and with
//! probability p (the xi draw) the snapshot itself is refreshed. When both
//! fire in the same iteration the fresh gradient stack is computed once and
//! shared.

use crate::error::{Error, Result};
use crate::graph::GossipMatrix;
use crate::mat::{named_sections, sections_to_text, Mat};
use crate::objective::{GradientCounter, ObjectiveSuite};
use crate::rng::CoupledBernoulliStream;

use super::{counter_section, counter_value, expect_shape, HyperParams};

/// Iterate block for one SS-GT run. `x` is the current coupling point
/// X^k = (1 - alpha - tau) Y + alpha Z + tau U, maintained by `init` and
/// `step_ssgt` so metrics never recompute it.
#[derive(Clone, Debug)]
pub struct SsgtState {
    pub x: Mat,
    pub y: Mat,
    pub z: Mat,
    pub u: Mat,
    pub q: Mat,
    /// Snapshot gradient cache, identically grad F(Q).
    pub m: Mat,
    /// Gradient tracker.
    pub g: Mat,
    pub k: u64,
}

impl SsgtState {
    /// Initial state: Y = Z = U = Q = X0 and G = M = grad F(X0). The one
    /// construction-time gradient stack is counted.
    pub fn init(x0: Mat, suite: &ObjectiveSuite, counter: &mut GradientCounter) -> Result<Self> {
        let m = suite.grad_all(&x0, counter)?;
        Ok(SsgtState {
            y: x0.clone(),
            z: x0.clone(),
            u: x0.clone(),
            q: x0.clone(),
            g: m.clone(),
            m,
            x: x0,
            k: 0,
        })
    }

    /// Plain-text snapshot: the iteration counter plus all seven iterate
    /// matrices as named sections.
    pub fn to_text(&self) -> String {
        sections_to_text(&[
            ("k", &counter_section(self.k)),
            ("x", &self.x),
            ("y", &self.y),
            ("z", &self.z),
            ("u", &self.u),
            ("q", &self.q),
            ("m", &self.m),
            ("g", &self.g),
        ])
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut m = named_sections(text, &["k", "x", "y", "z", "u", "q", "m", "g"])?;
        let k = counter_value(&m[0])?;
        let (rows, cols) = (m[1].rows(), m[1].cols());
        for (sec, name) in m[2..].iter().zip(["y", "z", "u", "q", "m", "g"]) {
            expect_shape(sec, rows, cols, name)?;
        }
        let g = m.pop().expect("eight sections");
        let mm = m.pop().expect("eight sections");
        let q = m.pop().expect("eight sections");
        let u = m.pop().expect("eight sections");
        let z = m.pop().expect("eight sections");
        let y = m.pop().expect("eight sections");
        let x = m.pop().expect("eight sections");
        Ok(SsgtState { x, y, z, u, q, m: mm, g, k })
    }
}

pub fn step_ssgt(
    state: &SsgtState,
    w: &GossipMatrix,
    params: &HyperParams,
    stream: &mut CoupledBernoulliStream,
    suite: &ObjectiveSuite,
    counter: &mut GradientCounter,
) -> Result<SsgtState> {
    if state.x.rows() != w.n() {
        return Err(Error::Shape(format!(
            "state has {} agents, gossip matrix has {}",
            state.x.rows(),
            w.n()
        )));
    }
    let (xi, zeta) = stream.next();
    let x = &state.x;

    // At most one fresh gradient stack per iteration, shared between the
    // correction and refresh branches.
    let mut fresh: Option<Mat> = None;

    let inner = state
        .z
        .add_scaled(params.beta, x)
        .add_scaled(-params.eta, &state.g);
    let inner = if zeta != 0.0 {
        let f = suite.grad_all(x, counter)?;
        let corrected = inner.add_scaled(params.eta / params.q, &state.m.sub(&f));
        fresh = Some(f);
        corrected
    } else {
        inner
    };
    let z_next = w.mix(&inner).scale(1.0 / (1.0 + params.beta));

    let y_next = x.add_scaled(params.gamma, &z_next.sub(&state.z));

    let (m_next, u_next, g_next, q_next) = if xi == 1.0 {
        let m_next = match fresh.take() {
            Some(f) => f,
            None => suite.grad_all(x, counter)?,
        };
        let u_next = w.mix(x);
        let g_next = w.mix(&state.g).add(&m_next).sub(&state.m);
        (m_next, u_next, g_next, x.clone())
    } else {
        (
            state.m.clone(),
            w.mix(&state.u),
            w.mix(&state.g),
            state.q.clone(),
        )
    };

    let x_next = Mat::lin3(
        1.0 - params.alpha - params.tau,
        &y_next,
        params.alpha,
        &z_next,
        params.tau,
        &u_next,
    );

    Ok(SsgtState {
        x: x_next,
        y: y_next,
        z: z_next,
        u: u_next,
        q: q_next,
        m: m_next,
        g: g_next,
        k: state.k + 1,
    })
}
