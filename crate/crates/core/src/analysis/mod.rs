//! Delay times, parameter sweeps and geometry of the Dicke triangle.

mod delay;
mod geometry;
mod sweep;
mod table1;

pub use delay::{effective_delay_time, refine_delay_time, DelayTime};
pub use geometry::{
    boundary_curves, emission_field, trajectory_jm, write_boundary_csv, write_field_csv, BoundaryCurve,
    BoundaryPoint, FieldPoint, LossDephasingRatio, Trajectory,
};
pub use sweep::{sweep_phase_diagram, write_sweep_csv, DephasingGrid, SweepRow, SweepSpec};
pub use table1::{table1_report, table1_report_at, Derivative, Table1Cell, Table1Entry, Table1Report, TABLE1_N};
