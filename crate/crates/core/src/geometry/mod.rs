//! Mesh representation and the offline geometric analysis of segmented
//! models.

pub mod contact;
pub mod mesh;
pub mod obb;
pub mod symmetry;

pub use contact::{connector_smoothness, detect_pair_contacts, ContactCluster};
pub use mesh::{Aabb, TriangleMesh};
pub use obb::{compute_obb, insertion_ratios, InsertionRatios, OrientedBoundingBox};
pub use symmetry::{
    detect_global_symmetry, detect_inter_part_symmetry, PartSymmetry, ReflectionPlane,
};
