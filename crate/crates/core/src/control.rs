//! Finite-horizon LQR reference tracking over the time-varying linearization.

use nalgebra::SMatrix;

use crate::dynamics::{linearize, wrap_angle, ControlInput, DynamicsParams, InputBounds, Trajectory, VehicleState};
use crate::error::{Error, Result};

/// Diagonal state and input costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqrWeights {
    pub q: SMatrix<f64, 5, 5>,
    pub r: SMatrix<f64, 2, 2>,
}

impl LqrWeights {
    pub fn from_diagonals(q: [f64; 5], r: [f64; 2]) -> Result<Self> {
        if q.iter().any(|v| !(*v >= 0.0)) || r.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Config("LQR weights need Q >= 0 and R > 0".into()));
        }
        Ok(Self {
            q: SMatrix::from_diagonal(&q.into()),
            r: SMatrix::from_diagonal(&r.into()),
        })
    }
}

impl Default for LqrWeights {
    fn default() -> Self {
        Self::from_diagonals([1.0, 1.0, 2.0, 0.5, 0.0], [0.1, 0.1]).expect("default weights are valid")
    }
}

/// Gains `K_0..K_{H-1}` and cost matrices `P_0..P_H` with `P_H = Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSchedule<const N: usize, const M: usize> {
    pub gains: Vec<SMatrix<f64, M, N>>,
    pub costs: Vec<SMatrix<f64, N, N>>,
}

/// Backward Riccati recursion
/// `K_k = (R + BᵀP_{k+1}B)⁻¹ BᵀP_{k+1}A_k`,
/// `P_k = Q + K_kᵀRK_k + (A_k − BK_k)ᵀP_{k+1}(A_k − BK_k)`.
pub fn riccati_backward<const N: usize, const M: usize>(
    a_seq: &[SMatrix<f64, N, N>],
    b: &SMatrix<f64, N, M>,
    q: &SMatrix<f64, N, N>,
    r: &SMatrix<f64, M, M>,
) -> Result<GainSchedule<N, M>> {
    let h = a_seq.len();
    let mut costs = vec![SMatrix::<f64, N, N>::zeros(); h + 1];
    let mut gains = vec![SMatrix::<f64, M, N>::zeros(); h];
    costs[h] = *q;
    for k in (0..h).rev() {
        let p = &costs[k + 1];
        let a = &a_seq[k];
        let s = r + b.transpose() * p * b;
        let s_inv = s
            .try_inverse()
            .ok_or_else(|| Error::Numerical("R + BᵀPB is singular".into()))?;
        let kk = s_inv * b.transpose() * p * a;
        let acl = a - b * kk;
        let pk = q + kk.transpose() * r * kk + acl.transpose() * p * acl;
        // symmetrize against round-off drift
        costs[k] = (pk + pk.transpose()) * 0.5;
        gains[k] = kk;
    }
    Ok(GainSchedule { gains, costs })
}

/// Gain schedule for following `reference`, linearized about its headings.
pub fn schedule_for(reference: &Trajectory, params: &DynamicsParams, weights: &LqrWeights) -> Result<GainSchedule<5, 2>> {
    let (_, b) = linearize(0.0, params);
    let a_seq: Vec<_> = reference.headings().into_iter().map(|th| linearize(th, params).0).collect();
    riccati_backward(&a_seq, &b, &weights.q, &weights.r)
}

/// `u = −K(x − x_ref) + u_ref` with the heading error wrapped, then clamped.
pub fn track(
    state: &VehicleState,
    reference: &VehicleState,
    reference_input: &ControlInput,
    gain: &SMatrix<f64, 2, 5>,
    bounds: &InputBounds,
) -> ControlInput {
    let mut e = state.to_vector() - reference.to_vector();
    e[2] = wrap_angle(e[2]);
    let u = reference_input.to_vector() - gain * e;
    ControlInput::from_vector(&u).clamp(bounds)
}
