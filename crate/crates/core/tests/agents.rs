use policy_zoom_core::agent::{mb_evaluate, Agent, AgentKind, AgentOptions, MbModel};
use policy_zoom_core::env::{make_env, EnvModel, EnvSpec};
use policy_zoom_core::math::{BoxBounds, Coords, Interval};
use policy_zoom_core::policy::{find_uncovered, FamilyKind, MetricSpec, PolicyBall, PolicyFamily};
use policy_zoom_core::sim::run_agent;
use policy_zoom_core::Error;

fn setup(env: &str, family: FamilyKind) -> (EnvModel, PolicyFamily) {
    let env = make_env(&EnvSpec::new(env)).unwrap();
    let family = PolicyFamily::new(family, &env).unwrap();
    (env, family)
}

fn agent(env: &EnvModel, family: &PolicyFamily, kind: AgentKind, horizon: u64) -> Agent {
    let mut opts = AgentOptions::new(kind, horizon, 0.1);
    opts.epsilon = 0.25;
    Agent::new(env, family.clone(), opts).unwrap()
}

#[test]
fn first_boundary_activates_one_policy_at_the_lower_corner() {
    for (env, fam) in [
        ("riverswim", FamilyKind::RiverswimAffine),
        ("riverswim", FamilyKind::RiverswimQuad),
        ("scheduling", FamilyKind::SchedulingThreshold),
        ("two_arm_chain", FamilyKind::TwoArmConst),
    ] {
        let (env, family) = setup(env, fam);
        let mut a = agent(&env, &family, AgentKind::ModelFree, 1000);
        // initial radius from the standalone oracle: one ball at the corner covers W
        let r0 = a.fresh_radius();
        let corner = family.policy(Coords::new(
            &family.params.sides().iter().map(|s| s.lo).collect::<Vec<_>>(),
        ));
        let ball = PolicyBall { center: corner, radius: r0 };
        assert!(find_uncovered(&[ball], &family, 1e-2, &MetricSpec::default()).unwrap().is_none());
        let run = run_agent(&env, &mut a, 1, 3).unwrap();
        assert_eq!(run.activations.len(), 1);
        assert_eq!(run.episodes.len(), 1);
        assert_eq!(run.activations[0].policy.w, corner.w);
    }
}

#[test]
fn accounting_and_doubling() {
    for kind in [AgentKind::ModelFree, AgentKind::Uniform, AgentKind::ModelBased] {
        let (env, family) = setup("riverswim", FamilyKind::RiverswimConst);
        let horizon = if kind == AgentKind::ModelBased { 3000 } else { 30_000 };
        let mut a = agent(&env, &family, kind, horizon);
        let run = run_agent(&env, &mut a, horizon, 11).unwrap();
        let plays: u64 = a.records().iter().map(|r| r.plays).sum();
        let episodes: u64 = a.records().iter().map(|r| r.episodes).sum();
        assert_eq!(plays, horizon);
        assert_eq!(episodes as usize, run.episodes.len());
        for rec in a.records() {
            assert!(rec.reward_sum >= 0.0 && rec.reward_sum <= rec.plays as f64);
            if rec.plays >= 1 {
                assert!(rec.episodes <= rec.plays);
                assert!(rec.episodes as f64 <= (rec.plays as f64).log2() + 2.0, "{rec:?}");
            }
        }
        // plays per episode of every policy never decrease (the final episode may be cut short)
        let ends: Vec<u64> = run.episodes.iter().skip(1).map(|e| e.start).chain([horizon]).collect();
        let mut last = vec![0u64; a.records().len()];
        for (k, (ep, end)) in run.episodes.iter().zip(&ends).enumerate() {
            let len = end - ep.start;
            if k + 1 < run.episodes.len() {
                assert!(len >= last[ep.policy], "{kind:?} episode {k}");
            }
            last[ep.policy] = len;
        }
        let mut starts = run.episodes.iter().map(|e| e.start);
        let mut prev = starts.next().unwrap();
        for s in starts {
            assert!(s > prev);
            prev = s;
        }
    }
}

#[test]
fn covering_holds_at_checked_boundaries() {
    let (env, family) = setup("riverswim", FamilyKind::RiverswimAffine);
    let mut opts = AgentOptions::new(AgentKind::ModelFree, 20_000, 0.1);
    opts.verify_cover_every = Some(100);
    let mut a = Agent::new(&env, family, opts).unwrap();
    run_agent(&env, &mut a, 20_000, 5).unwrap();
    assert!(a.stats().cover_checks >= 2);
    a.verify_cover().unwrap();
}

#[test]
fn model_based_covering_under_diameter_radii() {
    let (env, family) = setup("two_arm_chain", FamilyKind::TwoArmConst);
    let mut opts = AgentOptions::new(AgentKind::ModelBased, 2000, 0.1);
    opts.verify_cover_every = Some(10);
    let mut a = Agent::new(&env, family, opts).unwrap();
    run_agent(&env, &mut a, 2000, 2).unwrap();
    a.verify_cover().unwrap();
    assert!(a.models().iter().all(|m| m.diam_b > 0.0 && m.diam_b <= 1.0));
}

#[test]
fn same_seed_same_schedule() {
    let (env, family) = setup("scheduling", FamilyKind::SchedulingThreshold);
    let r1 = run_agent(&env, &mut agent(&env, &family, AgentKind::ModelFree, 20_000), 20_000, 9).unwrap();
    let r2 = run_agent(&env, &mut agent(&env, &family, AgentKind::ModelFree, 20_000), 20_000, 9).unwrap();
    assert_eq!(r1, r2);
    let r3 = run_agent(&env, &mut agent(&env, &family, AgentKind::ModelFree, 20_000), 20_000, 10).unwrap();
    assert_ne!(r1.rewards, r3.rewards);
}

#[test]
fn uniform_net_sweeps_every_policy_then_stays_fixed() {
    let (env, family) = setup("riverswim", FamilyKind::RiverswimConst);
    let mut a = agent(&env, &family, AgentKind::Uniform, 5000);
    let n = a.records().len();
    assert!(n > 1);
    let run = run_agent(&env, &mut a, 5000, 1).unwrap();
    // one play raises (1 + K)/N from 1 to 2, so each policy gets two
    // single-step episodes before the next fresh one wins
    let first: Vec<usize> = run.episodes.iter().take(2 * n).map(|e| e.policy).collect();
    let expected: Vec<usize> = (0..n).flat_map(|i| [i, i]).collect();
    assert_eq!(first, expected);
    assert_eq!(a.records().len(), n);
    assert!(run.activations.is_empty());
}

#[test]
fn single_policy_net_doubles() {
    let (env, family) = setup("two_arm_chain", FamilyKind::TwoArmConst);
    let mut opts = AgentOptions::new(AgentKind::Uniform, 100, 0.1);
    opts.epsilon = 5.0;
    let mut a = Agent::new(&env, family, opts).unwrap();
    assert_eq!(a.records().len(), 1);
    let run = run_agent(&env, &mut a, 100, 1).unwrap();
    let starts: Vec<u64> = run.episodes.iter().map(|e| e.start).collect();
    assert_eq!(starts, vec![0, 1, 2, 4, 8, 16, 32, 64]);
}

#[test]
fn model_based_first_episode_and_own_tree() {
    let (env, family) = setup("two_arm_chain", FamilyKind::TwoArmConst);
    let mut a = agent(&env, &family, AgentKind::ModelBased, 500);
    let run = run_agent(&env, &mut a, 500, 4).unwrap();
    assert_eq!(run.episodes[1].start, 1);
    for (rec, model) in a.records().iter().zip(a.models()) {
        assert_eq!(model.tree.total_visits(), rec.plays);
        assert_eq!(model.log.len() as u64, rec.plays);
    }
}

#[test]
fn fresh_model_index_dominates_a_well_explored_poor_policy() {
    let (env, family) = setup("two_arm_chain", FamilyKind::TwoArmConst);
    let mut a = agent(&env, &family, AgentKind::ModelBased, 20_000);
    let run = run_agent(&env, &mut a, 1, 0).unwrap();
    assert_eq!(run.activations.len(), 1);
    let fresh = a.index(0);
    // feed 20k transitions of the a = 0 policy into a separate model
    let mut model = MbModel::new(&env.state_bounds, *a.models()[0].tree.constants()).unwrap();
    let mut rng = policy_zoom_core::rng::stream(1, "toy");
    let mut state = env.reset(&mut rng);
    for _ in 0..20_000 {
        let tr = env.step(&state, &Coords::scalar(0.0), &mut rng);
        model.record(&state.obs, &tr.next.obs).unwrap();
        state = tr.next;
    }
    let poor = family.policy(Coords::scalar(0.0));
    let eval = mb_evaluate(&model, &poor, &a.mb_context()).unwrap();
    assert!(fresh >= eval.index, "{fresh} vs {}", eval.index);
    assert!(eval.gain.gain >= 0.25 - 0.05);
}

#[test]
fn configuration_errors() {
    let (env, family) = setup("riverswim", FamilyKind::RiverswimAffine);
    let mut opts = AgentOptions::new(AgentKind::ModelFree, 0, 0.1);
    assert!(matches!(Agent::new(&env, family.clone(), opts), Err(Error::Config(_))));
    opts.horizon = 10;
    opts.delta = 1.5;
    assert!(matches!(Agent::new(&env, family.clone(), opts), Err(Error::Config(_))));
    let mut opts = AgentOptions::new(AgentKind::Uniform, 10, 0.1);
    opts.epsilon = 1e-5;
    assert!(matches!(Agent::new(&env, family.clone(), opts), Err(Error::Config(_))));
    let narrow = family
        .clone()
        .with_params(BoxBounds::new(vec![Interval::new(0.0, 0.0), Interval::new(0.0, 0.0)]))
        .unwrap();
    let mut a = Agent::new(&env, narrow, AgentOptions::new(AgentKind::ModelFree, 10, 0.1)).unwrap();
    let run = run_agent(&env, &mut a, 10, 1).unwrap();
    assert_eq!(run.final_policies.len(), 1);
}
