use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ids::{BlobHash, ScreenshotId, WidgetId};

/// Per-coordinate tolerance when deciding whether a crop covers the whole screenshot.
pub const WHOLE_CROP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("invalid crop ({x0}, {y0}, {x1}, {y1}): need 0 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1")]
pub struct CropError {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

/// Rectangle in normalized screenshot coordinates, origin top-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCrop")]
pub struct CropRegion {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

#[derive(Deserialize)]
struct RawCrop {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl TryFrom<RawCrop> for CropRegion {
    type Error = CropError;
    fn try_from(r: RawCrop) -> Result<Self, CropError> {
        CropRegion::new(r.x0, r.y0, r.x1, r.y1)
    }
}

impl CropRegion {
    pub const FULL: CropRegion = CropRegion {
        x0: 0.0,
        y0: 0.0,
        x1: 1.0,
        y1: 1.0,
    };

    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, CropError> {
        let ok = (0.0..=1.0).contains(&x0)
            && (0.0..=1.0).contains(&y0)
            && (0.0..=1.0).contains(&x1)
            && (0.0..=1.0).contains(&y1)
            && x0 < x1
            && y0 < y1;
        if ok {
            Ok(Self { x0, y0, x1, y1 })
        } else {
            Err(CropError { x0, y0, x1, y1 })
        }
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn y0(&self) -> f64 {
        self.y0
    }
    pub fn x1(&self) -> f64 {
        self.x1
    }
    pub fn y1(&self) -> f64 {
        self.y1
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn class(&self) -> CropClass {
        classify_crop(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CropClass {
    Whole,
    Cropped,
}

pub fn classify_crop(crop: &CropRegion) -> CropClass {
    let near = |v: f64, target: f64| (v - target).abs() <= WHOLE_CROP_TOLERANCE;
    if near(crop.x0, 0.0) && near(crop.y0, 0.0) && near(crop.x1, 1.0) && near(crop.y1, 1.0) {
        CropClass::Whole
    } else {
        CropClass::Cropped
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Screenshot {
    pub id: ScreenshotId,
    pub participant_id: String,
    pub image_ref: BlobHash,
    #[serde(default)]
    pub app_hint: Option<String>,
    pub captured_at_ms: u64,
    #[serde(default)]
    pub redacted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Widget {
    pub id: WidgetId,
    pub screenshot_id: ScreenshotId,
    pub crop: CropRegion,
    pub image_ref: BlobHash,
    pub created_at_ms: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_bounds_are_whole() {
        assert_eq!(classify_crop(&CropRegion::FULL), CropClass::Whole);
    }

    #[test]
    fn strict_subrectangle_is_cropped() {
        let c = CropRegion::new(0.1, 0.2, 0.9, 0.8).unwrap();
        assert_eq!(classify_crop(&c), CropClass::Cropped);
    }

    #[test]
    fn within_tolerance_is_whole() {
        let c = CropRegion::new(0.0, 0.0, 1.0, 1.0 - 1e-7).unwrap();
        assert_eq!(classify_crop(&c), CropClass::Whole);
        let c = CropRegion::new(0.0, 0.0, 1.0, 1.0 - 2e-6).unwrap();
        assert_eq!(classify_crop(&c), CropClass::Cropped);
    }

    #[test]
    fn invalid_crops_rejected() {
        assert!(CropRegion::new(0.5, 0.0, 0.5, 1.0).is_err());
        assert!(CropRegion::new(-0.1, 0.0, 0.5, 1.0).is_err());
        assert!(CropRegion::new(0.0, 0.0, 1.1, 1.0).is_err());
        assert!(CropRegion::new(0.0, f64::NAN, 1.0, 1.0).is_err());
        assert!(
            serde_json::from_str::<CropRegion>(r#"{"x0":0.9,"y0":0,"x1":0.1,"y1":1}"#).is_err()
        );
    }
}
