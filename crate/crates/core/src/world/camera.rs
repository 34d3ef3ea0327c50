//! Flat-ground pinhole camera rigidly mounted on the vehicle.

use crate::dynamics::VehicleState;
use crate::error::{domain, Result};
use crate::image::PixelMask;

use super::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    /// Height of the optical center above the ground (m).
    pub height_above_ground: f64,
    /// Downward pitch of the optical axis (rad).
    pub pitch: f64,
    pub horizontal_fov: f64,
    pub vertical_fov: f64,
    pub image_width: usize,
    pub image_height: usize,
    /// Rays hitting the ground farther than this render as sky (m).
    pub max_view_distance: f64,
    /// Forward offset of the camera from the vehicle center (m); negative
    /// places the camera behind the center so the vehicle's own position
    /// is in view.
    pub mount_offset: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            height_above_ground: 0.5,
            pitch: 15f64.to_radians(),
            horizontal_fov: 90f64.to_radians(),
            vertical_fov: 90f64.to_radians(),
            image_width: 64,
            image_height: 64,
            max_view_distance: 12.0,
            mount_offset: -0.6,
        }
    }
}

/// Camera center and orthonormal axes in world coordinates.
#[derive(Debug, Clone, Copy)]
struct Pose {
    center: [f64; 3],
    axis: [f64; 3],
    right: [f64; 3],
    up: [f64; 3],
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        let fov_ok = |f: f64| f > 0.0 && f < std::f64::consts::PI;
        if !fov_ok(self.horizontal_fov) || !fov_ok(self.vertical_fov) {
            return Err(domain("camera fields of view must lie in (0, π)"));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(domain("camera image must be non-empty"));
        }
        if self.height_above_ground <= 0.0 || self.max_view_distance <= 0.0 {
            return Err(domain("camera height and view distance must be positive"));
        }
        Ok(())
    }

    pub fn focal_x(&self) -> f64 {
        self.image_width as f64 / 2.0 / (self.horizontal_fov / 2.0).tan()
    }

    pub fn focal_y(&self) -> f64 {
        self.image_height as f64 / 2.0 / (self.vertical_fov / 2.0).tan()
    }

    fn principal(&self) -> (f64, f64) {
        (self.image_width as f64 / 2.0, self.image_height as f64 / 2.0)
    }

    fn pose(&self, state: &VehicleState) -> Pose {
        let (c, s) = (state.theta.cos(), state.theta.sin());
        let (cp, sp) = (self.pitch.cos(), self.pitch.sin());
        Pose {
            center: [
                state.x + self.mount_offset * c,
                state.y + self.mount_offset * s,
                self.height_above_ground,
            ],
            axis: [cp * c, cp * s, -sp],
            right: [s, -c, 0.0],
            up: [sp * c, sp * s, cp],
        }
    }

    /// Continuous pixel coordinates `(u, v)` of a ground point, or `None`
    /// when it is behind the camera, beyond the view distance, or outside
    /// the image. Pixel `(i, j)` covers `[i, i+1) × [j, j+1)`.
    pub fn project_ground_point(&self, state: &VehicleState, p: Point) -> Option<(f64, f64)> {
        let pose = self.pose(state);
        let rel = [p[0] - pose.center[0], p[1] - pose.center[1], -pose.center[2]];
        let depth = dot3(rel, pose.axis);
        if depth <= 1e-9 {
            return None;
        }
        if rel[0].hypot(rel[1]) > self.max_view_distance {
            return None;
        }
        let (cx, cy) = self.principal();
        let u = cx + self.focal_x() * dot3(rel, pose.right) / depth;
        let v = cy - self.focal_y() * dot3(rel, pose.up) / depth;
        let in_bounds = u >= 0.0 && u < self.image_width as f64 && v >= 0.0 && v < self.image_height as f64;
        in_bounds.then_some((u, v))
    }

    /// Integer pixel hit by a ground point.
    pub fn project_to_pixel(&self, state: &VehicleState, p: Point) -> Option<(usize, usize)> {
        self.project_ground_point(state, p)
            .map(|(u, v)| (u.floor() as usize, v.floor() as usize))
    }

    /// Ground point seen along the ray through continuous pixel `(u, v)`.
    pub fn pixel_to_ground(&self, state: &VehicleState, u: f64, v: f64) -> Option<Point> {
        let pose = self.pose(state);
        let (cx, cy) = self.principal();
        let a = (u - cx) / self.focal_x();
        let b = (v - cy) / self.focal_y();
        let dir: [f64; 3] = std::array::from_fn(|k| pose.axis[k] + a * pose.right[k] - b * pose.up[k]);
        if dir[2] >= -1e-12 {
            return None;
        }
        let t = pose.center[2] / -dir[2];
        let gx = pose.center[0] + t * dir[0];
        let gy = pose.center[1] + t * dir[1];
        if (gx - pose.center[0]).hypot(gy - pose.center[1]) > self.max_view_distance {
            return None;
        }
        Some([gx, gy])
    }

    /// Ground point under the center of pixel `(i, j)`.
    pub fn pixel_center_to_ground(&self, state: &VehicleState, i: usize, j: usize) -> Option<Point> {
        self.pixel_to_ground(state, i as f64 + 0.5, j as f64 + 0.5)
    }

    /// Horizon mask: `true` for pixels whose ray misses the ground within
    /// the view distance. Independent of the vehicle pose.
    pub fn sky_mask(&self) -> PixelMask {
        let origin = VehicleState::default();
        PixelMask::from_fn(self.image_width, self.image_height, |i, j| {
            self.pixel_center_to_ground(&origin, i, j).is_none()
        })
    }

    /// Ground point of each pixel center in the vehicle frame
    /// (forward, left), `None` for sky.
    pub fn pixel_ground_offsets(&self) -> Vec<Option<Point>> {
        let origin = VehicleState::default();
        (0..self.image_height)
            .flat_map(|j| (0..self.image_width).map(move |i| (i, j)))
            .map(|(i, j)| self.pixel_center_to_ground(&origin, i, j))
            .collect()
    }
}
