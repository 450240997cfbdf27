//! Anisotropic wavefront propagation along lightlike pregeodesics of
//! Lorentz-Finsler spacetimes, with Zermelo navigation queries on top.

pub mod error;
pub mod expr;
pub mod field;
pub mod finsler;
pub mod geodesics;
pub(crate) mod jet;
pub(crate) mod linalg;
pub mod navigation;
pub mod spacetime;
pub mod wavefront;

pub use error::{Error, Result};
pub use field::{Bounds, RegularGrid, ScalarField, SymField, VectorField};
pub use finsler::{
    randers_from_zermelo, zermelo_from_randers, Branch, CustomFinsler, DomainClass, FinslerMetricSpec, MetricKind,
    Navigation, NavigationData, RandersCoefficients, SampledCurve, TimeMode, WindRegime,
};
pub use spacetime::{
    fermat_from_sstk, navigation_of, sstk_from_zermelo, CausalClass, Christoffel, SpacetimeMetric, SpacetimeVector,
    SstkMetric, SstkPoint,
};
pub use geodesics::{
    conservation_report, integrate_finsler_geodesic, integrate_pregeodesic, lightlike_orthogonal_init,
    orthogonal_directions, select_side, ConservationReport, IntegratorParams, OrthoMethod, OrthogonalDirection, Side,
    Stop, Trajectory, TrajectoryState,
};
pub use wavefront::{
    arrival_time_field, detect_cuts, front_at, propagate, wavemap_arrival_field, ArrivalField, ArrivalGrid, CutCause,
    CutRecord, CutReport, FrontSample, FrontShape, FrontSegment, FrontSlice, InitialFront, ResolutionWarning, Seed,
    Wavemap, Witness,
};
pub use navigation::{
    ball_boundary, distance, distances_from, fastest_path, spacetime_for, BallSide, NavOptions, PathResult, PathStatus,
    PointSource,
};
