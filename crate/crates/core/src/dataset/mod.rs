//! Synthetic training data: analytic shapes, occupancy queries, silhouettes
//! and scale/translation augmentation.

mod augment;
mod generate;
mod queries;
mod shapes;
mod silhouette;

pub use augment::{augment, Augmented, MAX_JITTER};
pub use generate::{
    build_sample, generate_dataset, ground_truth_mesh, Dataset, GenConfig, Manifest, Sample, SampleRecord, Split,
    MANIFEST_FILE, TRAIN_FRACTION,
};
pub use queries::{sample_near_surface_queries, sample_queries, QuerySet, DEFAULT_QUERIES};
pub use shapes::{
    make_field, make_field_with, make_smooth_field, overfit_shapes, random_spec, FieldMode, Part, Primitive, Shape,
    ShapeField, ShapeKind, ShapeSpec, MAX_SCALE, MIN_SCALE, SHAPE_HALF_EXTENT, SMOOTH_SHARPNESS,
};
pub use silhouette::{render_silhouette, Silhouette, ViewAxis, DEFAULT_RESOLUTION, DEPTH_SAMPLES};
