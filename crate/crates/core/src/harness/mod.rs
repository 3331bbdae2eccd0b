//! Scenes, reference solutions, parallel runs and file outputs.

pub mod output;
pub mod reference;
pub mod run;
pub mod scene;
pub mod stats;

pub use output::{write_field, RangeMode};
pub use reference::Reference;
pub use run::{
    compare_wos, convergence_study, run_field, run_wos, with_threads, ConvergenceRow, EfficiencyRow, FieldGrid,
    HarnessError, PointEstimate,
};
pub use scene::{load_scene, GridCfg, Scene, SceneError, ScenePoint};
