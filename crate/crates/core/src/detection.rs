use alloc::string::String;

use crate::error::{Error, Result};
use crate::geometry::PixelPoint;

/// One animal's axis-aligned bounding box in a video frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame: u64,
    pub bbox_min: PixelPoint,
    pub bbox_max: PixelPoint,
    pub behavior: Option<String>,
    pub track_id: Option<u32>,
}

impl Detection {
    /// Builds a detection, rejecting boxes narrower or shorter than one pixel.
    pub fn new(frame: u64, bbox_min: PixelPoint, bbox_max: PixelPoint) -> Result<Self> {
        let w = bbox_max.x - bbox_min.x;
        let h = bbox_max.y - bbox_min.y;
        if !(w >= 1.0 && h >= 1.0) {
            return Err(Error::Domain(
                "bounding box must be at least 1 px on each axis",
            ));
        }
        Ok(Self {
            frame,
            bbox_min,
            bbox_max,
            behavior: None,
            track_id: None,
        })
    }

    pub fn with_behavior(mut self, behavior: impl Into<String>) -> Self {
        self.behavior = Some(behavior.into());
        self
    }

    pub fn with_track_id(mut self, id: u32) -> Self {
        self.track_id = Some(id);
        self
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.bbox_max.x - self.bbox_min.x
    }

    #[inline]
    pub fn height(&self) -> f64 {
        self.bbox_max.y - self.bbox_min.y
    }

    #[inline]
    pub fn center(&self) -> PixelPoint {
        PixelPoint::new(
            0.5 * (self.bbox_min.x + self.bbox_max.x),
            0.5 * (self.bbox_min.y + self.bbox_max.y),
        )
    }
}
