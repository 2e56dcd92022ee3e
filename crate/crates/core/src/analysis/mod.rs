//! Derived objects of the canard and fold problems.

mod classify;
mod conserved;
mod criticals;
mod cycle;
mod fold;
mod manifold;

pub use classify::{
    classify_orbit, find_Pc, find_Pc_with, pc_window, Classifier, CycleSide, OrbitClass, Outcome, PcLocation, Side,
    LINE_MARGIN,
};
pub use conserved::{c_of_h, gamma_c2, return_map_linearized, H_value};
pub use criticals::{
    critical_values, lambda_H_leading, lambda_H_numeric, lambda_c_in, lambda_c_leading, lambda_c_numeric,
    lambda_sc_in, lambda_sc_numeric, lambda_star_in, lambda_star_numeric, Critical, CriticalValues, Method,
};
pub use cycle::{cycle_exists, half_cycle, HalfCycle};
pub use fold::{fold_exit_heights, fold_scaling_fit, FoldFit};
pub use manifold::{attracting_manifold_deviation, gamma_e, nullcline_u, slow_manifold_x, Branch};
