//! Turning retrieved parts into a model: fit, relative placement, mirroring,
//! snapping and stitching.

pub mod fit;
pub mod place;
pub mod snap;
pub mod state;
pub mod stitch;

pub use fit::{fit_to_sketch, PlaneBox};
pub use place::{mirror_transform, relative_translation, RelativePlacement};
pub use snap::{snap_contacts, SnapHandle, SnapParams, SnapReport};
pub use state::{AssemblyState, PlacedPart, PlacementReport, PlacementRule, Slot};
pub use stitch::{stitch, StitchParams, StitchReport};
