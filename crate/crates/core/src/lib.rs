//! Two-dimensional monotone cellular automata (U-bootstrap percolation) with the Duarte
//! model as the main example.
//!
//! The crate covers closure dynamics on finite geometries, exact classification of update
//! families by their stable directions, Duarte droplets, the spanning algorithm, and
//! Monte Carlo experiments on the torus.

pub mod classify;
pub mod direction;
pub mod droplet;
pub mod error;
pub mod family;
pub mod lab;
pub mod lattice;
pub mod rng;
pub mod span;

pub use classify::{
    classify, difficulty, Balance, Budget, ClassificationReport, DifficultyEstimate,
    DifficultyValue, FamilyClassification, Kind, Side,
};
pub use direction::{is_stable, stable_set, Arc, RationalDirection, StableSetDescription};
pub use droplet::{
    enumerate_droplet_shapes, f_eval, f_inverse, f_prime, is_bichain, minimal_region,
    profiles_to_sets, region_contains, Droplet, DuarteRegion, GrowthParams, ShapeCount, TOL,
};
pub use error::{Error, Result};
pub use family::{BuiltinFamily, Site, UpdateFamily, UpdateRule};
pub use lattice::{
    closure, closure_in_plane, closure_queue, percolates, step, Geometry, LatticeState, Rect,
};
pub use span::{
    critical_pair, extract_subdroplet, internally_spanned, span, span_ordered, strongly_connected,
    CriticalPair, MergeOrder, SpanResult, SpanTrace,
};

/// Version tag written into every JSON document this crate produces.
pub const SCHEMA_VERSION: u32 = 1;
