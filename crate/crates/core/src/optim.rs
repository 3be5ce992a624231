//! Update rules: Padam, Amsgrad, Adam and heavy-ball SGD.
//!
//! All four share one contract: take parameters, gradients, state,
//! hyperparameters and the current step size, and return fresh parameters and
//! fresh state. Nothing is mutated in place.
//!
//! # The partial-adaptivity exponent
//!
//! Padam divides the bias-corrected first moment by the clamped second moment
//! raised to `p`. Since `v̂^p = (√v̂)^{2p}`, the denominator is written here as
//!
//! ```text
//! denom = (√v̂ + ε)^{2p},   p ∈ [0, 0.5]
//! ```
//!
//! With `ε` inside the power, `p = 0` gives `denom = 1` exactly (bias-corrected
//! momentum SGD) and `p = 0.5` gives `√v̂ + ε` exactly (Amsgrad).
//!
//! Weight decay is coupled L2 for every rule: `g ← g + wd·θ` before any moment
//! is touched. `v̂` is the running max of the *bias-corrected* second moment,
//! so state keeps raw `m`, raw `v`, the clamped `v̂` and the step counter.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{pow_scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Padam,
    Adam,
    Amsgrad,
    Sgd,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 4] = [
        OptimizerKind::Padam,
        OptimizerKind::Adam,
        OptimizerKind::Amsgrad,
        OptimizerKind::Sgd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerKind::Padam => "padam",
            OptimizerKind::Adam => "adam",
            OptimizerKind::Amsgrad => "amsgrad",
            OptimizerKind::Sgd => "sgd",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownOptimizer { name: s.to_owned() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub alpha0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub p: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub momentum: f64,
}

impl HyperParams {
    /// Baseline presets: Padam α₀=0.1, β₂=0.999, wd=5e-4, p=0.125;
    /// SGD α₀=0.1, momentum 0.9, wd=5e-4; Adam/Amsgrad α₀=1e-3, β₂=0.99, wd=1e-4.
    pub fn defaults(kind: OptimizerKind) -> Self {
        let base = HyperParams {
            alpha0: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            p: 0.125,
            epsilon: 1e-8,
            weight_decay: 0.0005,
            momentum: 0.9,
        };
        match kind {
            OptimizerKind::Padam | OptimizerKind::Sgd => base,
            OptimizerKind::Adam | OptimizerKind::Amsgrad => HyperParams {
                alpha0: 0.001,
                beta2: 0.99,
                p: 0.5,
                weight_decay: 0.0001,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidHyperparameter(what));
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return bad(format!("alpha0 must be > 0, got {}", self.alpha0));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return bad(format!("beta1 must be in [0, 1), got {}", self.beta1));
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return bad(format!("beta2 must be in [0, 1), got {}", self.beta2));
        }
        check_p(self.p)?;
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight_decay must be >= 0, got {}", self.weight_decay));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        Ok(())
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::InvalidHyperparameter(format!(
            "p must be in [0, 0.5], got {p}"
        )));
    }
    Ok(())
}

/// Partial hyperparameters; unset fields fall back to the optimizer's preset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParamOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_decay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub momentum: Option<f64>,
}

impl HyperParamOverrides {
    pub fn resolve(&self, kind: OptimizerKind) -> HyperParams {
        let d = HyperParams::defaults(kind);
        HyperParams {
            alpha0: self.alpha0.unwrap_or(d.alpha0),
            beta1: self.beta1.unwrap_or(d.beta1),
            beta2: self.beta2.unwrap_or(d.beta2),
            p: self.p.unwrap_or(d.p),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            weight_decay: self.weight_decay.unwrap_or(d.weight_decay),
            momentum: self.momentum.unwrap_or(d.momentum),
        }
    }

    /// Fields set in `other` win.
    pub fn merged(&self, other: &HyperParamOverrides) -> HyperParamOverrides {
        HyperParamOverrides {
            alpha0: other.alpha0.or(self.alpha0),
            beta1: other.beta1.or(self.beta1),
            beta2: other.beta2.or(self.beta2),
            p: other.p.or(self.p),
            epsilon: other.epsilon.or(self.epsilon),
            weight_decay: other.weight_decay.or(self.weight_decay),
            momentum: other.momentum.or(self.momentum),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    pub m: Tensor,
    pub v: Tensor,
    pub vhat: Tensor,
    pub t: u64,
}

impl MomentState {
    pub fn new(shape: &[usize]) -> Result<Self> {
        Ok(Self {
            m: Tensor::zeros(shape)?,
            v: Tensor::zeros(shape)?,
            vhat: Tensor::zeros(shape)?,
            t: 0,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdState {
    pub velocity: Tensor,
    pub t: u64,
}

impl SgdState {
    pub fn new(shape: &[usize]) -> Result<Self> {
        Ok(Self {
            velocity: Tensor::zeros(shape)?,
            t: 0,
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum Denominator {
    /// `(√v̂ + ε)^exponent` on the clamped second moment.
    Clamped { exponent: f64 },
    /// `√v_corr + ε`, no clamp.
    Unclamped,
}

const UNNAMED: &str = "<tensor>";

fn check_step_inputs(params: &Tensor, grads: &Tensor, lr: f64, block: &str) -> Result<()> {
    params.same_shape(grads)?;
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::invalid(format!("step size must be > 0, got {lr}")));
    }
    if !grads.is_finite() {
        return Err(Error::NonFiniteInput {
            block: block.to_owned(),
        });
    }
    Ok(())
}

fn bias_correction(beta: f64, t: u64) -> f64 {
    1.0 - beta.powi(t.min(i32::MAX as u64) as i32)
}

fn moment_step(
    params: &Tensor,
    grads: &Tensor,
    state: &MomentState,
    hp: &HyperParams,
    lr: f64,
    denom_kind: Denominator,
    block: &str,
) -> Result<(Tensor, MomentState)> {
    check_step_inputs(params, grads, lr, block)?;
    params.same_shape(&state.m)?;
    params.same_shape(&state.v)?;
    params.same_shape(&state.vhat)?;

    let t = state.t + 1;
    let bc1 = bias_correction(hp.beta1, t);
    let bc2 = bias_correction(hp.beta2, t);
    let (b1, b2, eps, wd) = (hp.beta1, hp.beta2, hp.epsilon, hp.weight_decay);

    let n = params.len();
    let mut theta = Vec::with_capacity(n);
    let mut m = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut vhat = Vec::with_capacity(n);

    for i in 0..n {
        let th = params.data()[i];
        let g = grads.data()[i] + wd * th;
        let mi = b1 * state.m.data()[i] + (1.0 - b1) * g;
        let vi = b2 * state.v.data()[i] + (1.0 - b2) * g * g;
        let m_hat = mi / bc1;
        let v_corr = vi / bc2;
        let (denom, vh) = match denom_kind {
            Denominator::Clamped { exponent } => {
                let vh = state.vhat.data()[i].max(v_corr);
                (pow_scalar(vh.sqrt() + eps, exponent)?, vh)
            }
            Denominator::Unclamped => (v_corr.sqrt() + eps, state.vhat.data()[i]),
        };
        theta.push(th - lr * m_hat / denom);
        m.push(mi);
        v.push(vi);
        vhat.push(vh);
    }

    let shape = params.shape();
    Ok((
        Tensor::from_vec(shape, theta)?,
        MomentState {
            m: Tensor::from_vec(shape, m)?,
            v: Tensor::from_vec(shape, v)?,
            vhat: Tensor::from_vec(shape, vhat)?,
            t,
        },
    ))
}

fn padam_named(
    params: &Tensor,
    grads: &Tensor,
    state: &MomentState,
    hp: &HyperParams,
    lr: f64,
    block: &str,
) -> Result<(Tensor, MomentState)> {
    check_p(hp.p)?;
    let exponent = 2.0 * hp.p;
    moment_step(params, grads, state, hp, lr, Denominator::Clamped { exponent }, block)
}

pub fn padam_step(
    params: &Tensor,
    grads: &Tensor,
    state: &MomentState,
    hp: &HyperParams,
    lr: f64,
) -> Result<(Tensor, MomentState)> {
    padam_named(params, grads, state, hp, lr, UNNAMED)
}

/// Padam with `p` pinned to 0.5; `hp.p` is ignored.
pub fn amsgrad_step(
    params: &Tensor,
    grads: &Tensor,
    state: &MomentState,
    hp: &HyperParams,
    lr: f64,
) -> Result<(Tensor, MomentState)> {
    let hp = HyperParams { p: 0.5, ..*hp };
    padam_named(params, grads, state, &hp, lr, UNNAMED)
}

/// Leaves `state.vhat` as it was.
pub fn adam_step(
    params: &Tensor,
    grads: &Tensor,
    state: &MomentState,
    hp: &HyperParams,
    lr: f64,
) -> Result<(Tensor, MomentState)> {
    moment_step(params, grads, state, hp, lr, Denominator::Unclamped, UNNAMED)
}

fn sgd_named(
    params: &Tensor,
    grads: &Tensor,
    state: &SgdState,
    hp: &HyperParams,
    lr: f64,
    block: &str,
) -> Result<(Tensor, SgdState)> {
    check_step_inputs(params, grads, lr, block)?;
    params.same_shape(&state.velocity)?;
    let (mu, wd) = (hp.momentum, hp.weight_decay);
    let effective = params.map2(grads, |th, g| g + wd * th)?;
    let velocity = state.velocity.map2(&effective, |vel, g| mu * vel + g)?;
    let theta = params.map2(&velocity, |th, vel| th - lr * vel)?;
    Ok((
        theta,
        SgdState {
            velocity,
            t: state.t + 1,
        },
    ))
}

/// Heavy-ball momentum without dampening or Nesterov:
/// `vel ← μ·vel + (g + wd·θ)`, `θ ← θ − lr·vel`.
pub fn sgd_momentum_step(
    params: &Tensor,
    grads: &Tensor,
    state: &SgdState,
    hp: &HyperParams,
    lr: f64,
) -> Result<(Tensor, SgdState)> {
    sgd_named(params, grads, state, hp, lr, UNNAMED)
}

#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerState {
    Moment(MomentState),
    Sgd(SgdState),
}

/// Immutable optimizer handle: a rule plus its resolved hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    hp: HyperParams,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, hp: HyperParams) -> Result<Self> {
        hp.validate()?;
        Ok(Self { kind, hp })
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn hyper_params(&self) -> &HyperParams {
        &self.hp
    }

    /// Same rule with a different `p` (used by p-schedules).
    pub fn with_p(&self, p: f64) -> Result<Self> {
        check_p(p)?;
        Ok(Self {
            kind: self.kind,
            hp: HyperParams { p, ..self.hp },
        })
    }

    /// The adaptivity actually applied: Padam's `p`, 0.5 for Adam/Amsgrad, 0 for SGD.
    pub fn effective_p(&self) -> f64 {
        match self.kind {
            OptimizerKind::Padam => self.hp.p,
            OptimizerKind::Adam | OptimizerKind::Amsgrad => 0.5,
            OptimizerKind::Sgd => 0.0,
        }
    }

    pub fn init_state(&self, shape: &[usize]) -> Result<OptimizerState> {
        Ok(match self.kind {
            OptimizerKind::Sgd => OptimizerState::Sgd(SgdState::new(shape)?),
            _ => OptimizerState::Moment(MomentState::new(shape)?),
        })
    }

    pub fn step(
        &self,
        params: &Tensor,
        grads: &Tensor,
        state: &OptimizerState,
        lr: f64,
    ) -> Result<(Tensor, OptimizerState)> {
        self.step_named(UNNAMED, params, grads, state, lr)
    }

    /// As [`Optimizer::step`], naming `block` in non-finite-gradient errors.
    pub fn step_named(
        &self,
        block: &str,
        params: &Tensor,
        grads: &Tensor,
        state: &OptimizerState,
        lr: f64,
    ) -> Result<(Tensor, OptimizerState)> {
        let hp = &self.hp;
        match (self.kind, state) {
            (OptimizerKind::Padam, OptimizerState::Moment(s)) => {
                padam_named(params, grads, s, hp, lr, block)
                    .map(|(p, s)| (p, OptimizerState::Moment(s)))
            }
            (OptimizerKind::Amsgrad, OptimizerState::Moment(s)) => {
                let hp = HyperParams { p: 0.5, ..*hp };
                padam_named(params, grads, s, &hp, lr, block)
                    .map(|(p, s)| (p, OptimizerState::Moment(s)))
            }
            (OptimizerKind::Adam, OptimizerState::Moment(s)) => {
                moment_step(params, grads, s, hp, lr, Denominator::Unclamped, block)
                    .map(|(p, s)| (p, OptimizerState::Moment(s)))
            }
            (OptimizerKind::Sgd, OptimizerState::Sgd(s)) => {
                sgd_named(params, grads, s, hp, lr, block).map(|(p, s)| (p, OptimizerState::Sgd(s)))
            }
            (kind, _) => Err(Error::invalid(format!(
                "state variant does not belong to optimizer `{kind}`"
            ))),
        }
    }
}

/// Resolve `name` and fill unset hyperparameters from the rule's preset.
pub fn make_optimizer(name: &str, overrides: &HyperParamOverrides) -> Result<Optimizer> {
    let kind: OptimizerKind = name.parse()?;
    Optimizer::new(kind, overrides.resolve(kind))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64) -> Tensor {
        Tensor::scalar(x)
    }

    fn hp(p: f64) -> HyperParams {
        HyperParams {
            alpha0: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            p,
            epsilon: 0.0,
            weight_decay: 0.0,
            momentum: 0.0,
        }
    }

    #[test]
    fn padam_first_step_closed_forms() {
        let st = MomentState::new(&[1]).unwrap();
        for (p, expect) in [(0.25, -0.2), (0.0, -0.4), (0.5, -0.1)] {
            let (theta, next) = padam_step(&s(0.0), &s(4.0), &st, &hp(p), 0.1).unwrap();
            assert_eq!(theta.data()[0], expect, "p = {p}");
            assert_eq!(next.t, 1);
        }
    }

    #[test]
    fn amsgrad_and_adam_first_step() {
        let h = HyperParams {
            beta2: 0.99,
            ..hp(0.5)
        };
        let st = MomentState::new(&[1]).unwrap();
        let (a, _) = amsgrad_step(&s(0.0), &s(9.0), &st, &h, 0.001).unwrap();
        let (b, _) = adam_step(&s(0.0), &s(9.0), &st, &h, 0.001).unwrap();
        // first step: m̂ = g and √v̂ = |g|, so the step is exactly −lr·sign(g)
        assert!((a.data()[0] + 0.001).abs() < 1e-15);
        assert_eq!(a, b);
    }

    #[test]
    fn clamp_holds_denominator_on_shrinking_gradients() {
        // g = 4 then 0.1, β₁ = 0.9, β₂ = 0.999, ε = 0
        // step 2: v = 0.999·0.016 + 0.001·0.01 = 0.015994, v_corr = 0.015994 / (1 − 0.999²)
        let h = hp(0.5);
        let st = MomentState::new(&[1]).unwrap();
        let (t1, s1) = amsgrad_step(&s(0.0), &s(4.0), &st, &h, 0.1).unwrap();
        let (_, s2) = amsgrad_step(&t1, &s(0.1), &s1, &h, 0.1).unwrap();
        let v_corr2 = (0.999 * 0.016 + 0.001 * 0.01) / (1.0 - 0.999f64 * 0.999);
        assert!(v_corr2 < 16.0);
        assert_eq!(s1.vhat.data()[0], 16.0);
        assert_eq!(s2.vhat.data()[0], 16.0);

        let (a1, a_s1) = adam_step(&s(0.0), &s(4.0), &st, &h, 0.1).unwrap();
        let (a2, a_s2) = adam_step(&a1, &s(0.1), &a_s1, &h, 0.1).unwrap();
        assert!((a_s2.v.data()[0] / (1.0 - 0.999f64 * 0.999) - v_corr2).abs() < 1e-13);
        assert_eq!(a_s2.vhat.data()[0], 0.0, "adam leaves vhat alone");
        // same m̂ both ways, so the smaller denominator means a bigger step
        let (b2, _) = amsgrad_step(&t1, &s(0.1), &s1, &h, 0.1).unwrap();
        let adam_step2 = (a2.data()[0] - a1.data()[0]).abs();
        let ams_step2 = (b2.data()[0] - t1.data()[0]).abs();
        assert!(adam_step2 > ams_step2);
        let m_hat2 = (0.9 * 0.4 + 0.1 * 0.1) / (1.0 - 0.81);
        assert!((ams_step2 - 0.1 * m_hat2 / 4.0).abs() < 1e-15);
        assert!((adam_step2 - 0.1 * m_hat2 / v_corr2.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sgd_examples() {
        let st = SgdState::new(&[1]).unwrap();
        let (t, _) = sgd_momentum_step(&s(0.0), &s(2.0), &st, &hp(0.0), 0.1).unwrap();
        assert!((t.data()[0] + 0.2).abs() < 1e-15);

        let h = HyperParams {
            weight_decay: 0.0005,
            ..hp(0.0)
        };
        let (t, _) = sgd_momentum_step(&s(100.0), &s(0.0), &st, &h, 0.1).unwrap();
        assert!((t.data()[0] - (100.0 - 0.005)).abs() < 1e-12);

        let h = HyperParams {
            momentum: 0.9,
            ..hp(0.0)
        };
        let mut state = st;
        let mut theta = s(0.0);
        let mut last = 0.0;
        for _ in 0..500 {
            let (next, ns) = sgd_momentum_step(&theta, &s(1.0), &state, &h, 0.1).unwrap();
            last = (next.data()[0] - theta.data()[0]).abs();
            theta = next;
            state = ns;
        }
        assert!((last - 1.0).abs() < 1e-6, "step {last}");
    }

    #[test]
    fn adam_constant_gradient_is_sign_like() {
        let h = HyperParams {
            alpha0: 0.001,
            beta2: 0.99,
            ..hp(0.5)
        };
        let mut st = MomentState::new(&[1]).unwrap();
        let mut theta = s(0.0);
        let mut last = 0.0;
        for _ in 0..2000 {
            let (next, ns) = adam_step(&theta, &s(3.0), &st, &h, 0.001).unwrap();
            last = (next.data()[0] - theta.data()[0]).abs();
            theta = next;
            st = ns;
        }
        assert!((last / 0.001 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn contract_errors() {
        let st = MomentState::new(&[2]).unwrap();
        let two = Tensor::vector(vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            padam_step(&two, &s(1.0), &st, &hp(0.1), 0.1),
            Err(Error::ShapeMismatch { .. })
        ));
        let bad = Tensor::vector(vec![1.0, f64::NAN]).unwrap();
        assert!(matches!(
            padam_step(&two, &bad, &st, &hp(0.1), 0.1),
            Err(Error::NonFiniteInput { .. })
        ));
        assert!(matches!(
            padam_step(&two, &two, &st, &hp(0.6), 0.1),
            Err(Error::InvalidHyperparameter(_))
        ));
        assert!(matches!(
            padam_step(&two, &two, &st, &hp(-0.1), 0.1),
            Err(Error::InvalidHyperparameter(_))
        ));
        assert!(matches!(
            padam_step(&two, &two, &st, &hp(0.1), 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn named_steps_report_the_block() {
        let opt = make_optimizer("padam", &HyperParamOverrides::default()).unwrap();
        let state = opt.init_state(&[1]).unwrap();
        let err = opt
            .step_named("w1", &s(0.0), &s(f64::INFINITY), &state, 0.1)
            .unwrap_err();
        assert!(matches!(err, Error::NonFiniteInput { ref block } if block == "w1"));
    }

    #[test]
    fn make_optimizer_presets() {
        let none = HyperParamOverrides::default();
        let p = make_optimizer("padam", &none).unwrap();
        let h = p.hyper_params();
        assert_eq!((h.alpha0, h.beta1, h.beta2, h.weight_decay, h.p), (0.1, 0.9, 0.999, 0.0005, 0.125));

        let a = make_optimizer("adam", &none).unwrap();
        let h = a.hyper_params();
        assert_eq!((h.alpha0, h.beta1, h.beta2, h.weight_decay), (0.001, 0.9, 0.99, 0.0001));
        assert_eq!(make_optimizer("amsgrad", &none).unwrap().hyper_params(), h);

        let sgd = make_optimizer("sgd", &none).unwrap();
        let h = sgd.hyper_params();
        assert_eq!((h.alpha0, h.momentum, h.weight_decay), (0.1, 0.9, 0.0005));

        let err = make_optimizer("adamw", &none).unwrap_err();
        assert!(matches!(err, Error::UnknownOptimizer { .. }));
        assert!(err.to_string().contains("padam, adam, amsgrad, sgd"));

        let over = HyperParamOverrides {
            p: Some(0.7),
            ..Default::default()
        };
        assert!(matches!(
            make_optimizer("padam", &over),
            Err(Error::InvalidHyperparameter(_))
        ));
    }

    #[test]
    fn state_variant_must_match() {
        let opt = make_optimizer("sgd", &HyperParamOverrides::default()).unwrap();
        let wrong = OptimizerState::Moment(MomentState::new(&[1]).unwrap());
        assert!(opt.step(&s(0.0), &s(1.0), &wrong, 0.1).is_err());
    }
}
