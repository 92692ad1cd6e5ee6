//! Sparse flow-smoothing controllers: FollowerStopper and IDM with
//! relaxation, behind a common longitudinal-controller interface.
//!
//! FollowerStopper emits a target *speed*; IDM+R emits an *acceleration*.
//! [`command_to_accel`] normalizes either to an acceleration before
//! integration.

use serde::{Deserialize, Serialize};

use crate::cfm::{self, CfmInput, IdmParams, PAPER_IDM};
use crate::error::{Result, WavebenchError};

/// Default FollowerStopper band offsets dx0 (m), innermost first.
pub const FS_DEFAULT_DX0: [f64; 3] = [4.5, 5.25, 6.0];
/// Default FollowerStopper band decelerations (m/s^2), innermost first.
/// Larger deceleration on the inner band keeps the quadratic boundaries
/// nested for every speed difference.
pub const FS_DEFAULT_DECEL: [f64; 3] = [1.5, 1.0, 0.5];

/// Parameterization of one controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerSpec {
    FollowerStopper {
        v_desired: f64,
        #[serde(default = "default_dx0")]
        dx0: [f64; 3],
        #[serde(default = "default_decel")]
        decel: [f64; 3],
    },
    IdmRelaxation {
        v_desired: f64,
        gamma: f64,
        #[serde(default = "default_idm")]
        idm: IdmParams,
    },
}

fn default_dx0() -> [f64; 3] {
    FS_DEFAULT_DX0
}

fn default_decel() -> [f64; 3] {
    FS_DEFAULT_DECEL
}

fn default_idm() -> IdmParams {
    PAPER_IDM
}

impl ControllerSpec {
    pub fn follower_stopper(v_desired: f64) -> Self {
        Self::FollowerStopper {
            v_desired,
            dx0: FS_DEFAULT_DX0,
            decel: FS_DEFAULT_DECEL,
        }
    }

    pub fn idm_relaxation(v_desired: f64, gamma: f64) -> Self {
        Self::IdmRelaxation {
            v_desired,
            gamma,
            idm: PAPER_IDM,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::FollowerStopper {
                v_desired,
                dx0,
                decel,
            } => {
                if !(*v_desired > 0.0) {
                    return Err(WavebenchError::InvalidParameter {
                        field: "v_desired",
                        message: format!("must be > 0, got {v_desired}"),
                    });
                }
                if dx0.windows(2).any(|w| w[1] <= w[0]) || dx0[0] <= 0.0 {
                    return Err(WavebenchError::InvalidParameter {
                        field: "dx0",
                        message: "band offsets must be positive and strictly increasing".into(),
                    });
                }
                // inner bands must decelerate harder so boundaries stay nested
                if decel.windows(2).any(|w| w[1] >= w[0]) || decel[2] <= 0.0 {
                    return Err(WavebenchError::InvalidParameter {
                        field: "decel",
                        message: "band decelerations must be positive and strictly decreasing from the inner band".into(),
                    });
                }
                Ok(())
            }
            Self::IdmRelaxation {
                v_desired,
                gamma,
                idm,
            } => {
                if !(*v_desired > 0.0) {
                    return Err(WavebenchError::InvalidParameter {
                        field: "v_desired",
                        message: format!("must be > 0, got {v_desired}"),
                    });
                }
                if !(*gamma > 0.0) {
                    return Err(WavebenchError::InvalidParameter {
                        field: "gamma",
                        message: format!("must be > 0, got {gamma}"),
                    });
                }
                idm.validate()
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::FollowerStopper { v_desired, .. } => format!("fs_v{v_desired:.2}"),
            Self::IdmRelaxation {
                v_desired, gamma, ..
            } => format!("idmr_v{v_desired:.2}_g{gamma:.2}"),
        }
    }

    /// Evaluate the controller for one vehicle at one step.
    pub fn command(&self, input: &CfmInput) -> Result<ControlCommand> {
        match self {
            Self::FollowerStopper { .. } => {
                Ok(ControlCommand::TargetSpeed(follower_stopper_command(
                    input, self,
                )?))
            }
            Self::IdmRelaxation { .. } => {
                Ok(ControlCommand::Accel(idm_relaxation_accel(input, self)?))
            }
        }
    }
}

/// What a controller asks of the actuation layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlCommand {
    /// Target speed (m/s), FollowerStopper style.
    TargetSpeed(f64),
    /// Commanded acceleration (m/s^2), IDM+R style.
    Accel(f64),
}

/// IDM with relaxation: f_IDM(s, v, dv) + gamma * (v_desired - v).
///
/// The standstill clamp applies to the *sum*: a stopped vehicle never
/// receives a negative total command.
pub fn idm_relaxation_accel(input: &CfmInput, spec: &ControllerSpec) -> Result<f64> {
    let ControllerSpec::IdmRelaxation {
        v_desired,
        gamma,
        idm,
    } = spec
    else {
        return Err(WavebenchError::InvalidParameter {
            field: "spec",
            message: "expected an IdmRelaxation spec".into(),
        });
    };
    let total = cfm::idm_accel_raw(input, idm)? + gamma * (v_desired - input.speed);
    Ok(if total < 0.0 && input.speed == 0.0 {
        0.0
    } else {
        total
    })
}

/// FollowerStopper band law: commanded speed in [0, v_desired].
///
/// Band boundaries are `dx_k = dx0_k + dv_minus^2 / (2 * decel_k)` with
/// `dv_minus = min{0, v_lead - v_ego}`. Below the innermost band the
/// command is 0; between bands it blends linearly; above the outermost
/// band it is v_desired.
pub fn follower_stopper_command(input: &CfmInput, spec: &ControllerSpec) -> Result<f64> {
    let ControllerSpec::FollowerStopper {
        v_desired,
        dx0,
        decel,
    } = spec
    else {
        return Err(WavebenchError::InvalidParameter {
            field: "spec",
            message: "expected a FollowerStopper spec".into(),
        });
    };
    let dv_minus = input.dv.min(0.0);
    let boundary = |k: usize| dx0[k] + dv_minus * dv_minus / (2.0 * decel[k]);
    let (dx1, dx2, dx3) = (boundary(0), boundary(1), boundary(2));
    let v_lead = (input.speed + input.dv).max(0.0);
    let v = v_lead.min(*v_desired);
    let s = input.gap;
    let u = if s <= dx1 {
        0.0
    } else if s <= dx2 {
        v * (s - dx1) / (dx2 - dx1)
    } else if s <= dx3 {
        v + (v_desired - v) * (s - dx2) / (dx3 - dx2)
    } else {
        *v_desired
    };
    Ok(u.clamp(0.0, *v_desired))
}

/// Normalize a control command to an acceleration and clip it to bounds.
pub fn command_to_accel(cmd: &ControlCommand, speed: f64, dt: f64, bounds: (f64, f64)) -> f64 {
    let raw = match cmd {
        ControlCommand::TargetSpeed(u) => (u - speed) / dt,
        ControlCommand::Accel(a) => *a,
    };
    raw.clamp(bounds.0, bounds.1)
}
