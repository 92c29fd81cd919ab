//! Markov extensions: Young towers over first-return maps and the Hofbauer
//! tower.

pub mod hofbauer;
pub mod young;

pub use hofbauer::{
    hofbauer_build, hofbauer_build_with, level_measures, lift_occupation, stationarity_defect, HofbauerTower, Level,
    IDENTIFICATION_TOL, MAX_HOFBAUER_DEPTH,
};
pub use young::{
    induce_first_return, invariance_defect, kac_and_lambda, pull_back_measure, pull_back_measure_union, Cell, InducedMap,
    KacReport, PulledBack, TailModel, TailRecord, TowerMetric, TowerPoint, YoungTower,
};
