//! Closed-loop navigation episode: render, score, plan, track, step.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::competency::{CompetencyEstimator, CompetencyRecord};
use crate::control::{schedule_for, track, GainSchedule};
use crate::dynamics::{step, ControlInput, Trajectory, VehicleState};
use crate::error::{config, Result};
use crate::image::Image;
use crate::planner::{PlanKind, PlanResult, Planner, PlannerConfig, PlannerVariant};

use super::config::{RunConfig, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Timeout,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub outcome: Outcome,
    pub collided: bool,
    /// Simulated seconds until arrival, or the timeout.
    pub nav_time: f64,
    pub path_length: f64,
    pub variant: PlannerVariant,
    pub scenario_id: usize,
    pub seed: u64,
    /// Control steps that ended in contact.
    pub contact_steps: usize,
    pub safe_maneuvers: usize,
}

pub const EPISODE_CSV_HEADER: [&str; 9] = [
    "scenario",
    "variant",
    "seed",
    "outcome",
    "collided",
    "nav_time",
    "path_length",
    "contact_steps",
    "safe_maneuvers",
];

impl EpisodeResult {
    pub fn csv_record(&self) -> [String; 9] {
        [
            self.scenario_id.to_string(),
            self.variant.name().to_string(),
            self.seed.to_string(),
            self.outcome.as_str().to_string(),
            self.collided.to_string(),
            format!("{:.2}", self.nav_time),
            format!("{:.4}", self.path_length),
            self.contact_steps.to_string(),
            self.safe_maneuvers.to_string(),
        ]
    }
}

pub fn write_episodes_csv(results: &[EpisodeResult], path: impl AsRef<Path>) -> Result<()> {
    let mut wr = csv::Writer::from_path(path)?;
    wr.write_record(EPISODE_CSV_HEADER)?;
    for r in results {
        wr.write_record(r.csv_record())?;
    }
    wr.flush()?;
    Ok(())
}

/// Camera view and planning decision at one replanning step.
#[derive(Debug, Clone)]
pub struct Frame {
    pub step: usize,
    pub state: VehicleState,
    pub image: Image,
    pub record: Option<CompetencyRecord>,
    pub plan: PlanResult,
}

#[derive(Debug, Clone, Default)]
pub struct EpisodeTrace {
    /// Executed states, one per control step plus the initial state.
    pub states: Vec<VehicleState>,
    pub inputs: Vec<ControlInput>,
    pub frames: Vec<Frame>,
}

impl EpisodeTrace {
    pub fn trajectory(&self) -> Trajectory {
        Trajectory {
            states: self.states.clone(),
            inputs: self.inputs.clone(),
        }
    }
}

enum Active {
    Idle,
    Path {
        reference: Trajectory,
        gains: GainSchedule<5, 2>,
        since: usize,
    },
    Maneuver {
        actions: Vec<ControlInput>,
        next: usize,
    },
}

/// Start pose perturbed by up to ±0.1 m and ±3° so trials differ.
pub fn jittered_start(start: &VehicleState, seed: u64) -> VehicleState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_0F_57A7);
    VehicleState::at_rest(
        start.x + rng.gen_range(-0.1..0.1),
        start.y + rng.gen_range(-0.1..0.1),
        start.theta + rng.gen_range(-3f64..3.0).to_radians(),
    )
}

fn plan_seed(seed: u64, plan_index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(plan_index as u64)
}

pub fn run_episode(
    scenario: &Scenario,
    variant: PlannerVariant,
    estimator: Option<&CompetencyEstimator>,
    cfg: &RunConfig,
    seed: u64,
) -> Result<EpisodeResult> {
    run_episode_traced(scenario, variant, estimator, cfg, seed, false).map(|(r, _)| r)
}

/// Runs one episode; `keep_frames` retains every camera image and plan.
pub fn run_episode_traced(
    scenario: &Scenario,
    variant: PlannerVariant,
    estimator: Option<&CompetencyEstimator>,
    cfg: &RunConfig,
    seed: u64,
    keep_frames: bool,
) -> Result<(EpisodeResult, EpisodeTrace)> {
    if variant != PlannerVariant::Baseline && estimator.is_none() {
        return Err(config(format!("variant {} needs a competency estimator", variant.name())));
    }
    let camera = scenario.camera.unwrap_or(cfg.camera);
    let planner_cfg = PlannerConfig { variant, ..cfg.planner.clone() };
    let footprint = planner_cfg.footprint;
    let mut planner = Planner::new(planner_cfg, cfg.dynamics, camera)?;
    let dt = cfg.dynamics.dt;
    let goal = scenario.goal;
    let max_steps = (goal.timeout / dt).round() as usize;
    let world = &scenario.world;

    let mut state = jittered_start(&scenario.start, seed);
    let mut trace = EpisodeTrace {
        states: vec![state],
        ..Default::default()
    };
    let mut active = Active::Idle;
    let (mut plans, mut maneuvers, mut contacts) = (0usize, 0usize, 0usize);
    let mut path_length = 0.0;
    let mut arrived_at = None;

    for k in 0..max_steps {
        if goal.reached(&state) {
            arrived_at = Some(k);
            break;
        }
        let replan = match &active {
            Active::Idle => true,
            Active::Path { since, .. } => *since >= cfg.replan_every,
            Active::Maneuver { actions, next } => *next >= actions.len(),
        };
        if replan {
            let image = world.render_camera(&state, &camera);
            let record = match (variant, estimator) {
                (PlannerVariant::Baseline, _) | (_, None) => None,
                (v, Some(est)) => Some(est.record(&image, v.uses_regional())?),
            };
            let plan = planner.plan(&state, &goal, record.as_ref(), plan_seed(seed, plans))?;
            plans += 1;
            active = match &plan.kind {
                PlanKind::FollowPath { reference, .. } => Active::Path {
                    gains: schedule_for(reference, &cfg.dynamics, &cfg.lqr)?,
                    reference: reference.clone(),
                    since: 0,
                },
                PlanKind::SafeManeuver { actions } => {
                    maneuvers += 1;
                    Active::Maneuver {
                        actions: actions.clone(),
                        next: 0,
                    }
                }
            };
            if keep_frames {
                trace.frames.push(Frame {
                    step: k,
                    state,
                    image,
                    record,
                    plan,
                });
            }
        }
        let u = match &mut active {
            Active::Path { reference, gains, since } => {
                let j = *since;
                *since += 1;
                track(&state, &reference.states[j], &reference.inputs[j], &gains.gains[j], &cfg.dynamics.limits)
            }
            Active::Maneuver { actions, next } => {
                // an empty maneuver falls through to a stop and a replan
                let u = actions.get(*next).copied().unwrap_or(ControlInput::new(0.0, 0.0));
                *next += 1;
                u
            }
            Active::Idle => unreachable!("a plan was just made"),
        };
        let mut next = step(&state, &u, &cfg.dynamics);
        if world.collision_query(&next, &footprint) {
            contacts += 1;
            let off = world.penetration_resolution(&next, &footprint);
            next.x += off[0];
            next.y += off[1];
        }
        path_length += (next.x - state.x).hypot(next.y - state.y);
        state = next;
        trace.states.push(state);
        trace.inputs.push(u.clamp(&cfg.dynamics.limits));
    }
    if arrived_at.is_none() && goal.reached(&state) {
        arrived_at = Some(max_steps);
    }
    let (outcome, nav_time) = match arrived_at {
        Some(k) => (Outcome::Success, k as f64 * dt),
        None => (Outcome::Timeout, goal.timeout),
    };
    let result = EpisodeResult {
        outcome,
        collided: contacts > 0,
        nav_time,
        path_length,
        variant,
        scenario_id: scenario.id,
        seed,
        contact_steps: contacts,
        safe_maneuvers: maneuvers,
    };
    Ok((result, trace))
}
