//! Design sessions and the HTTP API the drawing front end talks to.

pub mod error;
pub mod http;
pub mod service;
pub mod session;

pub use error::{ServiceError, ServiceResult};
pub use http::{router, serve, SelectRequest, ViewRequest};
pub use service::{ClassInfo, CreateSession, SessionService};
pub use session::{
    canvas_strokes, contour_strokes, default_view, rasterize_strokes, Breakdown, Canvas,
    DesignSession, Gallery, GalleryEntry, Origin, Selection, SessionInfo, SlotInfo, StrokeRequest,
    SuggestionEntry,
};
