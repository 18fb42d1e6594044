//! Policy-zooming agents: model-free and model-based index rules on an
//! adaptively activated policy set, plus the uniform-net baseline.

mod baseline;
mod mb;
mod mf;

pub use baseline::{build_net, UniformNet, DEFAULT_NET_CAP};
pub use mb::{mb_evaluate, mb_index, optimistic_rewards, MbContext, MbEvaluation, MbModel};
pub use mf::{mf_diameter, mf_index, select_policy, IndexConstants};

use alloc::vec::Vec;

use crate::constants::{derive_constants, ConstantInputs, Constants};
use crate::env::{ActionVec, EnvModel, StateVec};
use crate::error::{Error, Result};
use crate::kernel::RadiusConstants;
use crate::math::{ln, powf, Coords};
use crate::partition::PartitionConstants;
use crate::policy::{find_uncovered, CoverGrid, MetricSpec, ParamPolicy, PolicyBall, PolicyFamily};

/// Play statistics of one active policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyRecord {
    /// Activation ordinal.
    pub id: usize,
    pub policy: ParamPolicy,
    /// `N`: number of plays.
    pub plays: u64,
    /// `K`: number of episodes in which the policy was played.
    pub episodes: u64,
    pub reward_sum: f64,
}

impl PolicyRecord {
    pub fn new(id: usize, policy: ParamPolicy) -> Self {
        Self {
            id,
            policy,
            plays: 0,
            episodes: 0,
            reward_sum: 0.0,
        }
    }

    /// Empirical mean reward, 0 before the first play.
    pub fn mean(&self) -> f64 {
        self.reward_sum / self.plays.max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    ModelFree,
    ModelBased,
    Uniform,
}

impl AgentKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "pzrl_mf" => Ok(Self::ModelFree),
            "pzrl_mb" => Ok(Self::ModelBased),
            "policy_ucb" => Ok(Self::Uniform),
            other => Err(Error::config(alloc::format!("unknown agent `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::ModelFree => "pzrl_mf",
            Self::ModelBased => "pzrl_mb",
            Self::Uniform => "policy_ucb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentOptions {
    pub kind: AgentKind,
    pub horizon: u64,
    pub delta: f64,
    pub c_f: f64,
    pub c_b: f64,
    pub c_p: f64,
    pub kappa: f64,
    pub kappa_prime: f64,
    /// Net spacing for [`AgentKind::Uniform`].
    pub epsilon: f64,
    pub net_cap: usize,
    pub metric: MetricSpec,
    /// Finest spacing of the covering grid.
    pub resolution_floor: f64,
    /// Largest number of points of the covering grid.
    pub max_cover_points: usize,
    pub evi_tol: f64,
    /// Re-check covering with the standalone oracle every this many episodes.
    pub verify_cover_every: Option<u64>,
}

impl AgentOptions {
    pub fn new(kind: AgentKind, horizon: u64, delta: f64) -> Self {
        Self {
            kind,
            horizon,
            delta,
            c_f: 1.0,
            c_b: 1.0,
            c_p: 0.0,
            kappa: 1.0,
            kappa_prime: 1.0,
            epsilon: 0.1,
            net_cap: DEFAULT_NET_CAP,
            metric: MetricSpec::default(),
            resolution_floor: 1e-3,
            max_cover_points: 1 << 22,
            evi_tol: crate::evi::EviOptions::DEFAULT_TOL,
            verify_cover_every: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config(alloc::format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        for (name, v) in [("c_f", self.c_f), ("c_b", self.c_b), ("resolution_floor", self.resolution_floor)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(alloc::format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.c_p >= 0.0) {
            return Err(Error::config("c_p must be nonnegative"));
        }
        if !(self.evi_tol > 0.0) {
            return Err(Error::config("evi_tol must be positive"));
        }
        self.metric.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub start: u64,
    /// Activation ordinal of the policy played.
    pub policy: usize,
    /// Its index when it was selected.
    pub index: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationEvent {
    pub t: u64,
    pub policy: ParamPolicy,
    /// Radius of the nearest active ball at activation time, if any.
    pub parent_radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AgentStats {
    pub evi_truncations: u64,
    pub span_tripwires: u64,
    pub cover_checks: u64,
    pub cover_rebuilds: u64,
}

/// Covering grid plus the radius currently registered for every record.
#[derive(Debug, Clone)]
struct ActiveCover {
    grid: CoverGrid,
    radii: Vec<f64>,
    floor: f64,
}

/// Learning agent; the run loop alternates [`Agent::act`] and
/// [`Agent::observe`].
#[derive(Debug, Clone)]
pub struct Agent {
    opts: AgentOptions,
    env: EnvModel,
    family: PolicyFamily,
    constants: Constants,
    index_constants: IndexConstants,
    radius_constants: RadiusConstants,
    partition_constants: PartitionConstants,
    records: Vec<PolicyRecord>,
    models: Vec<MbModel>,
    cover: Option<ActiveCover>,
    current: Option<usize>,
    played_in_episode: u64,
    episode_len: u64,
    t: u64,
    episodes: Vec<EpisodeRecord>,
    activations: Vec<ActivationEvent>,
    stats: AgentStats,
}

impl Agent {
    pub fn new(env: &EnvModel, family: PolicyFamily, opts: AgentOptions) -> Result<Self> {
        opts.validate()?;
        let mut inputs = ConstantInputs::new(
            env.ergodicity_alpha,
            env.ergodicity_c,
            env.lip_reward,
            env.lip_kernel,
            env.state_dim(),
        );
        inputs.lip_policy = family.lip_policy;
        inputs.c_p = opts.c_p;
        inputs.c_b = opts.c_b;
        inputs.c_f = opts.c_f;
        inputs.kappa = opts.kappa;
        inputs.kappa_prime = opts.kappa_prime;
        let constants = derive_constants(inputs)?;
        let log_term = ln(opts.horizon as f64 / opts.delta);
        let index_constants = IndexConstants {
            c: env.ergodicity_c,
            alpha: env.ergodicity_alpha,
            c_f: opts.c_f,
            log_term,
            lip_gain: constants.lip_gain,
        };
        let partition_constants = PartitionConstants::new(opts.c_b, opts.horizon, opts.delta);
        let radius_constants = RadiusConstants {
            scale: partition_constants.scale(),
            lip_policy: family.lip_policy,
            lip_kernel: env.lip_kernel,
            c_p: opts.c_p,
        };
        let mut agent = Self {
            opts,
            env: env.clone(),
            family,
            constants,
            index_constants,
            radius_constants,
            partition_constants,
            records: Vec::new(),
            models: Vec::new(),
            cover: None,
            current: None,
            played_in_episode: 0,
            episode_len: 0,
            t: 0,
            episodes: Vec::new(),
            activations: Vec::new(),
            stats: AgentStats::default(),
        };
        if opts.kind == AgentKind::Uniform {
            let net = build_net(&agent.family, opts.epsilon, opts.net_cap)?;
            for p in net.policies {
                agent.records.push(PolicyRecord::new(agent.records.len(), p));
            }
        } else {
            let volume = agent.family.params.volume();
            let d = agent.family.dim() as f64;
            let floor = opts
                .resolution_floor
                .max(powf(volume / opts.max_cover_points as f64, 1.0 / d));
            agent.cover = Some(ActiveCover {
                grid: CoverGrid::new(&agent.family, coarsest_fit(floor, &agent.family)),
                radii: Vec::new(),
                floor,
            });
        }
        Ok(agent)
    }

    pub fn kind(&self) -> AgentKind {
        self.opts.kind
    }

    pub fn family(&self) -> &PolicyFamily {
        &self.family
    }

    pub fn constants(&self) -> &Constants {
        &self.constants
    }

    pub fn index_constants(&self) -> &IndexConstants {
        &self.index_constants
    }

    pub fn records(&self) -> &[PolicyRecord] {
        &self.records
    }

    pub fn models(&self) -> &[MbModel] {
        &self.models
    }

    pub fn current(&self) -> Option<usize> {
        self.current
    }

    pub fn episodes(&self) -> &[EpisodeRecord] {
        &self.episodes
    }

    pub fn activations(&self) -> &[ActivationEvent] {
        &self.activations
    }

    pub fn stats(&self) -> AgentStats {
        self.stats
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Spacing of the covering grid, `None` for the uniform baseline.
    pub fn cover_resolution(&self) -> Option<f64> {
        self.cover.as_ref().map(|c| c.grid.resolution())
    }

    /// Balls whose union must cover the parameter box.
    pub fn balls(&self) -> Vec<PolicyBall> {
        self.records
            .iter()
            .map(|r| PolicyBall {
                center: r.policy,
                radius: self.radius(r.id),
            })
            .collect()
    }

    /// Covering radius of record `i`: the model-free diameter, or the
    /// approximate model-based diameter.
    pub fn radius(&self, i: usize) -> f64 {
        match self.opts.kind {
            AgentKind::ModelBased => self.models[i].diam_b,
            _ => mf_diameter(&self.records[i], &self.index_constants),
        }
    }

    /// Current index of record `i`.
    pub fn index(&self, i: usize) -> f64 {
        let rec = &self.records[i];
        match self.opts.kind {
            AgentKind::ModelFree => mf_index(rec, self.radius(i), self.index_constants.lip_gain),
            AgentKind::Uniform => rec.mean() + self.radius(i),
            AgentKind::ModelBased => self.models[i].index,
        }
    }

    /// Action for state `s`; starts a new episode first when the current one
    /// is over.
    pub fn act(&mut self, s: &StateVec) -> Result<ActionVec> {
        if self.current.is_none() || self.played_in_episode >= self.episode_len {
            self.boundary()?;
        }
        let cur = self.current.ok_or_else(|| Error::usage("no policy selected"))?;
        self.played_in_episode += 1;
        Ok(self.family.evaluate(&self.records[cur].policy, s))
    }

    /// Credits the reward of the last action to the current policy.
    pub fn observe(&mut self, s: &StateVec, reward: f64, next: &StateVec) -> Result<()> {
        let cur = self.current.ok_or_else(|| Error::usage("observe called before act"))?;
        let rec = &mut self.records[cur];
        rec.plays += 1;
        rec.reward_sum += reward;
        if self.opts.kind == AgentKind::ModelBased {
            self.models[cur].record(s, next)?;
        }
        self.t += 1;
        Ok(())
    }

    pub fn mb_context(&self) -> MbContext<'_> {
        MbContext {
            env: &self.env,
            family: &self.family,
            constants: &self.constants,
            radius: self.radius_constants,
            evi_tol: self.opts.evi_tol,
        }
    }

    /// Full model-based evaluation of record `i`.
    pub fn evaluate_model(&self, i: usize) -> Result<MbEvaluation> {
        let model = self
            .models
            .get(i)
            .ok_or_else(|| Error::usage("record has no model"))?;
        mb_evaluate(model, &self.records[i].policy, &self.mb_context())
    }

    fn refresh_model(&mut self, i: usize) -> Result<()> {
        if !self.models[i].dirty {
            return Ok(());
        }
        let eval = self.evaluate_model(i)?;
        if eval.truncated {
            self.stats.evi_truncations += 1;
        }
        if eval.gain.max_value_span > 10.0 * self.constants.c_v {
            self.stats.span_tripwires += 1;
        }
        let m = &mut self.models[i];
        m.gain = eval.gain.gain;
        m.diam_b = eval.diam_b;
        m.index = eval.index;
        m.dirty = false;
        Ok(())
    }

    fn boundary(&mut self) -> Result<()> {
        if let Some(prev) = self.current {
            if self.opts.kind == AgentKind::ModelBased {
                self.refresh_model(prev)?;
            }
            self.sync_radius(prev);
        }
        if self.cover.is_some() {
            self.activate()?;
        }
        let indices: Vec<f64> = (0..self.records.len()).map(|i| self.index(i)).collect();
        let next = select_policy(&indices)?;
        let rec = &mut self.records[next];
        self.episode_len = rec.plays.max(1);
        rec.episodes += 1;
        self.played_in_episode = 0;
        self.current = Some(next);
        self.episodes.push(EpisodeRecord {
            start: self.t,
            policy: next,
            index: indices[next],
        });
        self.sync_radius(next);
        if let Some(every) = self.opts.verify_cover_every {
            if every > 0 && (self.episodes.len() as u64 - 1) % every == 0 {
                self.verify_cover()?;
            }
        }
        Ok(())
    }

    /// Re-registers the ball of record `i` if its radius changed.
    fn sync_radius(&mut self, i: usize) {
        let r = self.radius(i);
        let Some(cover) = self.cover.as_mut() else {
            return;
        };
        let old = cover.radii[i];
        if old == r {
            return;
        }
        let center = self.records[i].policy.w;
        cover.grid.remove_ball(&self.family, &self.opts.metric, &center, old);
        cover.grid.add_ball(&self.family, &self.opts.metric, &center, r);
        cover.radii[i] = r;
    }

    /// Refines the covering grid when the smallest radius calls for it.
    fn refine_grid(&mut self, min_radius: f64) {
        let cover = self.cover.as_mut().expect("covering agent");
        let target = (min_radius / 4.0).max(cover.floor);
        if cover.grid.resolution() <= target {
            return;
        }
        let mut res = cover.grid.resolution();
        while res > target {
            res *= 0.5;
        }
        let res = res.max(cover.floor);
        let mut grid = CoverGrid::new(&self.family, res);
        for (rec, &r) in self.records.iter().zip(&cover.radii) {
            grid.add_ball(&self.family, &self.opts.metric, &rec.policy.w, r);
        }
        cover.grid = grid;
        self.stats.cover_rebuilds += 1;
    }

    fn activate(&mut self) -> Result<usize> {
        let fresh = self.fresh_radius();
        let min_radius = self
            .cover
            .as_ref()
            .map(|c| c.radii.iter().copied().fold(fresh, f64::min))
            .unwrap_or(fresh);
        self.refine_grid(min_radius);
        let mut start = 0;
        let mut count = 0;
        loop {
            let cover = self.cover.as_ref().expect("covering agent");
            let Some(i) = cover.grid.first_uncovered_from(start) else {
                break;
            };
            start = i;
            let w = cover.grid.point(i);
            self.push_policy(w)?;
            count += 1;
        }
        Ok(count)
    }

    /// Covering radius of a policy that has never been played.
    pub fn fresh_radius(&self) -> f64 {
        match self.opts.kind {
            AgentKind::ModelBased => 1.0,
            _ => {
                let rec = PolicyRecord::new(0, self.family.policy(self.family.params.center()));
                mf_diameter(&rec, &self.index_constants)
            }
        }
    }

    fn push_policy(&mut self, w: Coords) -> Result<()> {
        let id = self.records.len();
        let policy = self.family.policy(w);
        let parent_radius = self
            .records
            .iter()
            .map(|r| (self.opts.metric.param_distance(&self.family, &r.policy.w, &w), r.id))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, j)| self.radius(j));
        self.records.push(PolicyRecord::new(id, policy));
        if self.opts.kind == AgentKind::ModelBased {
            self.models
                .push(MbModel::new(&self.env.state_bounds, self.partition_constants)?);
            self.refresh_model(id)?;
        }
        let r = self.radius(id);
        let cover = self.cover.as_mut().expect("covering agent");
        cover.radii.push(r);
        cover.grid.add_ball(&self.family, &self.opts.metric, &w, r);
        self.activations.push(ActivationEvent {
            t: self.t,
            policy,
            parent_radius,
        });
        Ok(())
    }

    /// Runs the standalone covering oracle at the grid's resolution.
    pub fn verify_cover(&mut self) -> Result<()> {
        let Some(cover) = self.cover.as_ref() else {
            return Ok(());
        };
        self.stats.cover_checks += 1;
        let res = cover.grid.resolution();
        match find_uncovered(&self.balls(), &self.family, res, &self.opts.metric)? {
            None => Ok(()),
            Some(p) => Err(Error::domain(alloc::format!(
                "covering invariance violated at {:?}",
                p.w.as_slice()
            ))),
        }
    }
}

/// Coarsest power-of-two multiple of `floor` not exceeding the widest side.
fn coarsest_fit(floor: f64, family: &PolicyFamily) -> f64 {
    let widest = family
        .params
        .sides()
        .iter()
        .map(|s| s.width())
        .fold(0.0, f64::max);
    let mut res = floor;
    while res * 2.0 <= widest {
        res *= 2.0;
    }
    res
}
