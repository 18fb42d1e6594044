use alloc::format;
use alloc::vec;

use crate::env::{ActionVec, EnvModel, StateVec};
use crate::math::{sqrt, BoxBounds, Coords, Interval};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FamilyKind {
    /// `φ(s; w) = w`, `w ∈ [-1, 1]`.
    RiverswimConst,
    /// `φ(s; w) = w1 + w2 s`, `w ∈ [-1, 1] × [-0.5, 0.5]`.
    RiverswimAffine,
    /// `φ(s; w) = w1 + w2 s + w3 s²`, `w ∈ [-1, 1] × [-0.5, 0.5]²`.
    RiverswimQuad,
    /// `φ((e, b); w) = 1{w1 + w2 e < b}`, `w ∈ [1, 3] × [-1, -0.01]`.
    SchedulingThreshold,
    /// `φ(s; w) = w`, `w ∈ [0, 1]`, for the two-arm test chain.
    TwoArmConst,
}

impl FamilyKind {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "riverswim_const" => Self::RiverswimConst,
            "riverswim_affine" => Self::RiverswimAffine,
            "riverswim_quad" => Self::RiverswimQuad,
            "scheduling_threshold" => Self::SchedulingThreshold,
            "two_arm_const" => Self::TwoArmConst,
            other => return Err(Error::config(format!("unknown policy family `{other}`"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::RiverswimConst => "riverswim_const",
            Self::RiverswimAffine => "riverswim_affine",
            Self::RiverswimQuad => "riverswim_quad",
            Self::SchedulingThreshold => "scheduling_threshold",
            Self::TwoArmConst => "two_arm_const",
        }
    }

    fn env_name(self) -> &'static str {
        match self {
            Self::RiverswimConst | Self::RiverswimAffine | Self::RiverswimQuad => "riverswim",
            Self::SchedulingThreshold => "scheduling",
            Self::TwoArmConst => "two_arm_chain",
        }
    }

    fn param_bounds(self) -> BoxBounds {
        let iv = Interval::new;
        BoxBounds::new(match self {
            Self::RiverswimConst => vec![iv(-1.0, 1.0)],
            Self::RiverswimAffine => vec![iv(-1.0, 1.0), iv(-0.5, 0.5)],
            Self::RiverswimQuad => vec![iv(-1.0, 1.0), iv(-0.5, 0.5), iv(-0.5, 0.5)],
            Self::SchedulingThreshold => vec![iv(1.0, 3.0), iv(-1.0, -0.01)],
            Self::TwoArmConst => vec![iv(0.0, 1.0)],
        })
    }

    /// Default `L_W`, the smallest constant with `‖w - w'‖₂ ≤ L_W ρ_∞(φ_w, φ_w')`
    /// for the unclamped family on `S = [0, 6]`.
    ///
    /// Affine: `min_{|u|=1} max(|u1|, |u1 + 6 u2|) = 3/√10`. Quadratic: the
    /// extremal polynomial is the shifted Chebyshev polynomial
    /// `(2/9)s² - (4/3)s + 1` with sup 1 and coefficient norm `√229/9`.
    /// The threshold family is not Lipschitz in `w`; it uses the plain
    /// parameter distance.
    fn default_lip_param(self) -> f64 {
        match self {
            Self::RiverswimConst | Self::TwoArmConst | Self::SchedulingThreshold => 1.0,
            Self::RiverswimAffine => sqrt(10.0) / 3.0,
            Self::RiverswimQuad => sqrt(229.0) / 9.0,
        }
    }

    /// Default Lipschitz constant `L_φ` of the member policies in the state.
    fn default_lip_policy(self, states: &BoxBounds) -> f64 {
        let s_max = states.sides().first().map_or(0.0, |s| s.hi.abs().max(s.lo.abs()));
        match self {
            Self::RiverswimConst | Self::TwoArmConst => 0.0,
            Self::RiverswimAffine => 0.5,
            Self::RiverswimQuad => 0.5 + 2.0 * 0.5 * s_max,
            Self::SchedulingThreshold => 1.0,
        }
    }
}

/// A policy family together with the boxes it lives on.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyFamily {
    pub kind: FamilyKind,
    /// Parameter box `W`.
    pub params: BoxBounds,
    /// State box the policies are evaluated on.
    pub states: BoxBounds,
    pub actions: Interval,
    /// `L_φ`.
    pub lip_policy: f64,
    /// `L_W`.
    pub lip_param: f64,
}

impl PolicyFamily {
    pub fn new(kind: FamilyKind, env: &EnvModel) -> Result<Self> {
        if kind.env_name() != env.name() {
            return Err(Error::config(format!(
                "family `{}` does not apply to environment `{}`",
                kind.name(),
                env.name()
            )));
        }
        let states = env.state_bounds.clone();
        Ok(Self {
            kind,
            params: kind.param_bounds(),
            lip_policy: kind.default_lip_policy(&states),
            lip_param: kind.default_lip_param(),
            actions: env.action_bounds.sides()[0],
            states,
        })
    }

    /// Replaces the parameter box, e.g. to restrict a family for a test.
    pub fn with_params(mut self, params: BoxBounds) -> Result<Self> {
        if params.dim() != self.params.dim() {
            return Err(Error::config("parameter box has the wrong dimension"));
        }
        self.params = params;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn policy(&self, w: Coords) -> ParamPolicy {
        debug_assert!(self.params.contains(&w), "{w:?} outside {:?}", self.params);
        ParamPolicy { kind: self.kind, w }
    }

    /// Action of policy `w` at state `s`, clamped into the action bounds.
    pub fn evaluate_params(&self, w: &Coords, s: &StateVec) -> f64 {
        let a = match self.kind {
            FamilyKind::RiverswimConst | FamilyKind::TwoArmConst => w[0],
            FamilyKind::RiverswimAffine => w[0] + w[1] * s[0],
            FamilyKind::RiverswimQuad => w[0] + w[1] * s[0] + w[2] * s[0] * s[0],
            FamilyKind::SchedulingThreshold => {
                if w[0] + w[1] * s[0] < s[1] {
                    1.0
                } else {
                    0.0
                }
            }
        };
        self.actions.clamp(a)
    }

    pub fn evaluate(&self, policy: &ParamPolicy, s: &StateVec) -> ActionVec {
        debug_assert_eq!(policy.kind, self.kind);
        Coords::scalar(self.evaluate_params(&policy.w, s))
    }
}

/// A member of a policy family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamPolicy {
    pub kind: FamilyKind,
    pub w: Coords,
}
