use serde::Serialize;

use crate::statistic::StatValue;

/// Which component of D̂ was reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    #[serde(rename = "independence-branch")]
    Independence,
    #[serde(rename = "fd-branch")]
    FunctionalDependence,
}

/// `D̂ = T̂_I` when `T̂_FD <= ½`, else `T̂_FD`.
///
/// T̂_I is reported raw (for the default `bkr` its population range is
/// [0, 1)), so the independence branch is not a normalized quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinedMeasure {
    pub t_i: f64,
    pub t_fd: f64,
    pub d: f64,
    pub branch: Branch,
}

pub const SWITCH_POINT: f64 = 0.5;

pub fn combined_d(t_i: &StatValue, t_fd: &StatValue) -> CombinedMeasure {
    let (d, branch) = if t_fd.value <= SWITCH_POINT {
        (t_i.value, Branch::Independence)
    } else {
        (t_fd.value, Branch::FunctionalDependence)
    };
    CombinedMeasure {
        t_i: t_i.value,
        t_fd: t_fd.value,
        d,
        branch,
    }
}
