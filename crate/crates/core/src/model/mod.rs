//! Domain types and the pure fold from event logs to layouts.

mod annotation;
mod event;
mod ids;
mod layout;
mod pose;
mod records;
mod scenario;

pub use annotation::{
    ActivityType, Annotation, AnnotationBody, AnnotationError, CategorySet, TextField, UiType,
};
pub use event::{EventKind, InteractionEvent, PoseSample};
pub use ids::{BlobHash, ClusterId, ScreenshotId, WidgetId};
pub use layout::{fold_events, fold_prefix, Applied, Cluster, FoldError, Layout};
pub use pose::{validate_pose, Pose, PoseError, Quaternion, QUATERNION_NORM_TOLERANCE};
pub use records::{
    classify_crop, CropClass, CropError, CropRegion, Screenshot, Widget, WHOLE_CROP_TOLERANCE,
};
pub use scenario::{ScenarioKey, ScenarioKeyError};
