//! Classical gradient tracking and its accelerated variant.
//!
//! Both evaluate one fresh gradient stack per iteration and keep the
//! tracker S whose column mean always equals the mean of the current
//! gradient stack.

use crate::error::Result;
use crate::graph::GossipMatrix;
use crate::mat::{named_sections, sections_to_text, Mat};
use crate::objective::{GradientCounter, ObjectiveSuite};

use super::{counter_section, counter_value, expect_shape};

/// Plain gradient tracking: X' = WX - eta S, S' = WS + grad F(X') - grad F(X).
#[derive(Clone, Debug)]
pub struct GtState {
    pub x: Mat,
    pub s: Mat,
    /// Cached grad F(X) for the tracker update; never recomputed.
    pub grad: Mat,
    pub k: u64,
}

impl GtState {
    pub fn init(x0: Mat, suite: &ObjectiveSuite, counter: &mut GradientCounter) -> Result<Self> {
        let grad = suite.grad_all(&x0, counter)?;
        Ok(GtState {
            x: x0,
            s: grad.clone(),
            grad,
            k: 0,
        })
    }

    /// Plain-text snapshot: named matrix sections with the iteration counter
    /// first. Round-trips exactly through [`GtState::from_text`].
    pub fn to_text(&self) -> String {
        sections_to_text(&[
            ("k", &counter_section(self.k)),
            ("x", &self.x),
            ("s", &self.s),
            ("grad", &self.grad),
        ])
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut m = named_sections(text, &["k", "x", "s", "grad"])?;
        let k = counter_value(&m[0])?;
        let (rows, cols) = (m[1].rows(), m[1].cols());
        expect_shape(&m[2], rows, cols, "s")?;
        expect_shape(&m[3], rows, cols, "grad")?;
        let grad = m.pop().expect("four sections");
        let s = m.pop().expect("four sections");
        let x = m.pop().expect("four sections");
        Ok(GtState { x, s, grad, k })
    }
}

pub fn step_gt(
    state: &GtState,
    w: &GossipMatrix,
    eta: f64,
    suite: &ObjectiveSuite,
    counter: &mut GradientCounter,
) -> Result<GtState> {
    let x_next = w.mix(&state.x).add_scaled(-eta, &state.s);
    let grad_next = suite.grad_all(&x_next, counter)?;
    let s_next = w.mix(&state.s).add(&grad_next).sub(&state.grad);
    Ok(GtState {
        x: x_next,
        s: s_next,
        grad: grad_next,
        k: state.k + 1,
    })
}

/// Accelerated gradient tracking with momentum parameter beta_momentum
/// (typically sqrt(mu alpha)/2) and stepsize alpha.
#[derive(Clone, Debug)]
pub struct AccGtState {
    pub x: Mat,
    pub y: Mat,
    pub z: Mat,
    pub s: Mat,
    pub grad: Mat,
    pub k: u64,
}

impl AccGtState {
    pub fn init(x0: Mat, suite: &ObjectiveSuite, counter: &mut GradientCounter) -> Result<Self> {
        let grad = suite.grad_all(&x0, counter)?;
        Ok(AccGtState {
            y: x0.clone(),
            z: x0.clone(),
            s: grad.clone(),
            grad,
            x: x0,
            k: 0,
        })
    }

    /// Plain-text snapshot in the same named-section format as the other
    /// states.
    pub fn to_text(&self) -> String {
        sections_to_text(&[
            ("k", &counter_section(self.k)),
            ("x", &self.x),
            ("y", &self.y),
            ("z", &self.z),
            ("s", &self.s),
            ("grad", &self.grad),
        ])
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut m = named_sections(text, &["k", "x", "y", "z", "s", "grad"])?;
        let k = counter_value(&m[0])?;
        let (rows, cols) = (m[1].rows(), m[1].cols());
        for (sec, name) in m[2..].iter().zip(["y", "z", "s", "grad"]) {
            expect_shape(sec, rows, cols, name)?;
        }
        let grad = m.pop().expect("six sections");
        let s = m.pop().expect("six sections");
        let z = m.pop().expect("six sections");
        let y = m.pop().expect("six sections");
        let x = m.pop().expect("six sections");
        Ok(AccGtState { x, y, z, s, grad, k })
    }
}

pub fn step_accgt(
    state: &AccGtState,
    w: &GossipMatrix,
    alpha: f64,
    beta_momentum: f64,
    mu: f64,
    suite: &ObjectiveSuite,
    counter: &mut GradientCounter,
) -> Result<AccGtState> {
    let c = mu * alpha / beta_momentum;
    // Z' = (W(cX + Z) - (alpha/beta) S) / (1 + c)
    let pre_mix = state.z.add_scaled(c, &state.x);
    let z_next = w
        .mix(&pre_mix)
        .add_scaled(-alpha / beta_momentum, &state.s)
        .scale(1.0 / (1.0 + c));
    // Y' = beta Z' + (1 - beta) WY
    let y_next = w
        .mix(&state.y)
        .scale(1.0 - beta_momentum)
        .add_scaled(beta_momentum, &z_next);
    // X' = beta Z' + (1 - beta) Y'
    let x_next = y_next
        .scale(1.0 - beta_momentum)
        .add_scaled(beta_momentum, &z_next);
    let grad_next = suite.grad_all(&x_next, counter)?;
    let s_next = w.mix(&state.s).add(&grad_next).sub(&state.grad);
    Ok(AccGtState {
        x: x_next,
        y: y_next,
        z: z_next,
        s: s_next,
        grad: grad_next,
        k: state.k + 1,
    })
}
