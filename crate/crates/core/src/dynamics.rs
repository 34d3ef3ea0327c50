//! Discrete time-varying vehicle model.
//!
//! The state is `[x, y, θ, v, ω]` and the input `[t, s]` (commanded linear
//! velocity and turn rate). Each step applies
//! `x_{k+1} = A_k x_k + B u_k` where `A_k` is built from a heading estimate
//! `θ̃_k`; velocity and turn rate relax toward the commands with factors
//! `α` and `β`.

use std::f64::consts::PI;

use nalgebra::{SMatrix, SVector};

pub type StateVector = SVector<f64, 5>;
pub type InputVector = SVector<f64, 2>;
pub type StateMatrix = SMatrix<f64, 5, 5>;
pub type InputMatrix = SMatrix<f64, 5, 2>;

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, theta: f64, v: f64, omega: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
            v,
            omega,
        }
    }

    pub fn at_rest(x: f64, y: f64, theta: f64) -> Self {
        Self::new(x, y, theta, 0.0, 0.0)
    }

    pub fn to_vector(&self) -> StateVector {
        StateVector::new(self.x, self.y, self.theta, self.v, self.omega)
    }

    /// Converts back from a vector, wrapping the heading.
    pub fn from_vector(v: &StateVector) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4])
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    /// Desired linear velocity (m/s).
    pub t: f64,
    /// Desired turn rate (rad/s).
    pub s: f64,
}

impl ControlInput {
    pub fn new(t: f64, s: f64) -> Self {
        Self { t, s }
    }

    pub fn to_vector(&self) -> InputVector {
        InputVector::new(self.t, self.s)
    }

    pub fn from_vector(v: &InputVector) -> Self {
        Self { t: v[0], s: v[1] }
    }

    pub fn clamp(&self, bounds: &InputBounds) -> Self {
        Self {
            t: self.t.clamp(bounds.min.t, bounds.max.t),
            s: self.s.clamp(bounds.min.s, bounds.max.s),
        }
    }
}

/// Axis-aligned box `[min, max]` on the input space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputBounds {
    pub min: ControlInput,
    pub max: ControlInput,
}

impl InputBounds {
    pub fn new(min: ControlInput, max: ControlInput) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, u: &ControlInput) -> bool {
        u.t >= self.min.t && u.t <= self.max.t && u.s >= self.min.s && u.s <= self.max.s
    }

    pub fn is_valid(&self) -> bool {
        self.min.t <= self.max.t && self.min.s <= self.max.s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsParams {
    /// Time step (s).
    pub dt: f64,
    /// Linear velocity factor.
    pub alpha: f64,
    /// Turn rate factor.
    pub beta: f64,
    /// Actuator limits applied by `step`. Wider than the planner's sampling
    /// box so that the reverse leg of the safe maneuver is executable.
    pub limits: InputBounds,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        Self {
            dt: 0.1,
            alpha: 0.26,
            beta: 0.35,
            limits: InputBounds::new(ControlInput::new(-0.8, -0.4), ControlInput::new(0.8, 0.4)),
        }
    }
}

/// Builds `(A_k, B)` for the heading estimate `theta_tilde`.
pub fn linearize(theta_tilde: f64, params: &DynamicsParams) -> (StateMatrix, InputMatrix) {
    let dt = params.dt;
    let mut a = StateMatrix::identity();
    a[(0, 3)] = dt * theta_tilde.cos();
    a[(1, 3)] = dt * theta_tilde.sin();
    a[(2, 4)] = dt;
    a[(3, 3)] = 1.0 - params.alpha;
    a[(4, 4)] = 1.0 - params.beta;
    let mut b = InputMatrix::zeros();
    b[(3, 0)] = params.alpha;
    b[(4, 1)] = params.beta;
    (a, b)
}

/// One step with a caller-supplied heading estimate, no clamping and no
/// heading wrap. Exactly linear in `(x, u)`.
pub fn step_linear(x: &StateVector, u: &InputVector, theta_tilde: f64, params: &DynamicsParams) -> StateVector {
    let (a, b) = linearize(theta_tilde, params);
    a * x + b * u
}

/// Advances the vehicle one step using the current heading as `θ̃_k`.
pub fn step(state: &VehicleState, input: &ControlInput, params: &DynamicsParams) -> VehicleState {
    let u = input.clamp(&params.limits);
    let next = step_linear(&state.to_vector(), &u.to_vector(), state.theta, params);
    VehicleState::from_vector(&next)
}

/// Horizon-indexed states and the inputs that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<VehicleState>,
    pub inputs: Vec<ControlInput>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.inputs.len()
    }

    pub fn terminal(&self) -> &VehicleState {
        self.states.last().expect("trajectory has at least one state")
    }

    /// Heading estimates `θ̃_k` used for each transition.
    pub fn headings(&self) -> Vec<f64> {
        self.states[..self.inputs.len()].iter().map(|s| s.theta).collect()
    }

    pub fn path_length(&self) -> f64 {
        self.states
            .windows(2)
            .map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y))
            .sum()
    }

    /// CSV rows `k,x,y,theta,v,omega,t,s`; the terminal row leaves the input empty.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> crate::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["k", "x", "y", "theta", "v", "omega", "t", "s"])?;
        for (k, s) in self.states.iter().enumerate() {
            let (t, sv) = match self.inputs.get(k) {
                Some(u) => (u.t.to_string(), u.s.to_string()),
                None => (String::new(), String::new()),
            };
            wr.write_record([
                k.to_string(),
                s.x.to_string(),
                s.y.to_string(),
                s.theta.to_string(),
                s.v.to_string(),
                s.omega.to_string(),
                t,
                sv,
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Propagates `inputs` from `state0`, linearizing each step about the
/// heading of the state propagated so far.
pub fn rollout(state0: &VehicleState, inputs: &[ControlInput], params: &DynamicsParams) -> Trajectory {
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(*state0);
    let mut cur = *state0;
    for u in inputs {
        cur = step(&cur, u, params);
        states.push(cur);
    }
    Trajectory {
        states,
        inputs: inputs.iter().map(|u| u.clamp(&params.limits)).collect(),
    }
}
