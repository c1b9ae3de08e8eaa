//! Deterministic plants: a whole-body kinematic plant for the planner and a
//! second-order local-coordinate plant for the arm controllers.

mod disturbance;
mod dynamic;
mod kinematic;

pub use disturbance::{
    smooth_sign, Channel, DisturbanceSpec, DisturbanceTerm, NoiseBank, CART_MASS, GRAVITY, ROLLING_COEFF,
};
pub use dynamic::{DynamicLocalPlant, DynamicPlantConfig};
pub use kinematic::{KinematicPlant, KinematicPlantConfig};
