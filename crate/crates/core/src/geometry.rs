//! Nadir pinhole camera over flat ground.
//!
//! Conventions: pixel x grows to the right and pixel y grows downward. The UAV heading is
//! fixed at north, so image right is ground east (+x) and image up is ground north (+y).

use crate::detection::Detection;
use crate::error::{invalid, Error, Result};

/// A point (or offset) in image pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PixelPoint {
    pub x: f64,
    pub y: f64,
}

impl PixelPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    image_width: u32,
    image_height: u32,
    horizontal_fov: f64,
}

impl Default for CameraIntrinsics {
    /// 4K frame with a ~88 degree horizontal field of view.
    fn default() -> Self {
        Self {
            image_width: 3840,
            image_height: 2160,
            horizontal_fov: 1.536,
        }
    }
}

impl CameraIntrinsics {
    pub const MIN_DIMENSION: u32 = 64;

    pub fn new(image_width: u32, image_height: u32, horizontal_fov: f64) -> Result<Self> {
        if image_width < Self::MIN_DIMENSION {
            return Err(invalid("camera.image_width", "must be at least 64 px"));
        }
        if image_height < Self::MIN_DIMENSION {
            return Err(invalid("camera.image_height", "must be at least 64 px"));
        }
        if !(horizontal_fov > 0.0 && horizontal_fov < core::f64::consts::PI) {
            return Err(invalid(
                "camera.horizontal_fov",
                "must lie in (0, pi) radians",
            ));
        }
        Ok(Self {
            image_width,
            image_height,
            horizontal_fov,
        })
    }

    pub fn image_width(&self) -> u32 {
        self.image_width
    }

    pub fn image_height(&self) -> u32 {
        self.image_height
    }

    pub fn horizontal_fov(&self) -> f64 {
        self.horizontal_fov
    }

    pub fn center(&self) -> PixelPoint {
        PixelPoint::new(
            f64::from(self.image_width) / 2.0,
            f64::from(self.image_height) / 2.0,
        )
    }

    /// Meters of ground covered by one pixel at `altitude` meters above ground.
    pub fn ground_sample_distance(&self, altitude: f64) -> Result<f64> {
        check_altitude(altitude)?;
        Ok(2.0 * altitude * libm::tan(self.horizontal_fov / 2.0) / f64::from(self.image_width))
    }

    /// Scales an image-aligned pixel offset to meters (x right, y down).
    pub fn pixel_offset_to_ground_offset(
        &self,
        altitude: f64,
        offset: PixelPoint,
    ) -> Result<(f64, f64)> {
        let gsd = self.ground_sample_distance(altitude)?;
        Ok((offset.x * gsd, offset.y * gsd))
    }

    /// Inverse of [`pixel_offset_to_ground_offset`](Self::pixel_offset_to_ground_offset).
    pub fn ground_offset_to_pixel_offset(
        &self,
        altitude: f64,
        offset: (f64, f64),
    ) -> Result<PixelPoint> {
        let gsd = self.ground_sample_distance(altitude)?;
        Ok(PixelPoint::new(offset.0 / gsd, offset.1 / gsd))
    }

    /// Half extents (east, north) in meters of the ground footprint at `altitude`.
    pub fn footprint_half_extent(&self, altitude: f64) -> Result<(f64, f64)> {
        let gsd = self.ground_sample_distance(altitude)?;
        Ok((
            0.5 * f64::from(self.image_width) * gsd,
            0.5 * f64::from(self.image_height) * gsd,
        ))
    }

    /// Renders a ground target of `target_size` (east, north extent in meters) seen from
    /// `uav_position`. Returns `None` when the target center lies outside the footprint or
    /// the clipped box is thinner than a pixel.
    pub fn project_target(
        &self,
        uav_position: (f64, f64, f64),
        target: (f64, f64),
        target_size: (f64, f64),
    ) -> Result<Option<Detection>> {
        let (ux, uy, z) = uav_position;
        let gsd = self.ground_sample_distance(z)?;
        if !(target_size.0 > 0.0 && target_size.1 > 0.0) {
            return Err(Error::Domain("target size must be positive"));
        }
        let c = self.center();
        let cx = c.x + (target.0 - ux) / gsd;
        let cy = c.y - (target.1 - uy) / gsd;
        Ok(self.clipped_box(cx, cy, target_size.0 / gsd, target_size.1 / gsd))
    }

    /// Builds a detection centered at (`cx`, `cy`) clipped to the image, or `None` if the
    /// center is off-image or the clipped box degenerates.
    pub fn clipped_box(&self, cx: f64, cy: f64, w: f64, h: f64) -> Option<Detection> {
        let (iw, ih) = (f64::from(self.image_width), f64::from(self.image_height));
        if !(0.0..=iw).contains(&cx) || !(0.0..=ih).contains(&cy) {
            return None;
        }
        let min = PixelPoint::new((cx - w / 2.0).max(0.0), (cy - h / 2.0).max(0.0));
        let max = PixelPoint::new((cx + w / 2.0).min(iw), (cy + h / 2.0).min(ih));
        Detection::new(0, min, max).ok()
    }
}

fn check_altitude(altitude: f64) -> Result<()> {
    if altitude > 0.0 && altitude.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain("altitude must be positive"))
    }
}
