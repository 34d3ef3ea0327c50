//! Deterministic 2D world: class-labeled terrain, unfamiliar obstacles,
//! a flat-ground camera renderer and collision queries.

pub mod camera;
pub mod geometry;
pub mod texture;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::VehicleState;
use crate::error::{domain, Result};
use crate::image::Image;

pub use camera::CameraModel;
pub use geometry::{ConvexPolygon, Point};
pub use texture::{TerrainClass, TerrainPalette, UnfamiliarPattern};

/// Constant color of pixels whose ray misses the ground.
pub const SKY_COLOR: [f64; 3] = [0.5, 0.5, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextureKind {
    Familiar,
    Unfamiliar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub footprint: ConvexPolygon,
    pub texture_kind: TextureKind,
    pub texture_seed: u64,
}

impl Obstacle {
    pub fn unfamiliar(footprint: ConvexPolygon, texture_seed: u64) -> Self {
        Self {
            footprint,
            texture_kind: TextureKind::Unfamiliar,
            texture_seed,
        }
    }
}

/// How terrain classes are laid out over the ground.
#[derive(Debug, Clone, PartialEq)]
pub enum TerrainLayout {
    Uniform(TerrainClass),
    /// Square cells of `cell_size` meters, each assigned a class by hashing
    /// the world seed with the cell index.
    Patches { cell_size: f64 },
}

/// Axis-aligned rectangular extent in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extent {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Extent {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub extent: Extent,
    pub layout: TerrainLayout,
    pub obstacles: Vec<Obstacle>,
    pub seed: u64,
    pub palette: TerrainPalette,
}

/// What the ray through a pixel hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelLabel {
    Sky,
    Terrain(TerrainClass),
    Obstacle(usize),
}

impl PixelLabel {
    pub fn is_unfamiliar(&self, world: &World) -> bool {
        matches!(self, PixelLabel::Obstacle(i) if world.obstacles[*i].texture_kind == TextureKind::Unfamiliar)
    }
}

impl World {
    pub fn new(extent: Extent, layout: TerrainLayout, seed: u64, palette: TerrainPalette) -> Result<Self> {
        if extent.x_max <= extent.x_min || extent.y_max <= extent.y_min {
            return Err(domain("world extent must have positive size"));
        }
        match &layout {
            TerrainLayout::Uniform(c) => {
                palette.spec(*c)?;
            }
            TerrainLayout::Patches { cell_size } if *cell_size <= 0.0 => {
                return Err(domain("patch cell size must be positive"));
            }
            TerrainLayout::Patches { .. } => {}
        }
        Ok(Self {
            extent,
            layout,
            obstacles: Vec::new(),
            seed,
            palette,
        })
    }

    pub fn with_obstacle(mut self, obstacle: Obstacle) -> Self {
        self.obstacles.push(obstacle);
        self
    }

    /// Terrain class at a ground point; total over the plane.
    pub fn terrain_class(&self, x: f64, y: f64) -> TerrainClass {
        match &self.layout {
            TerrainLayout::Uniform(c) => *c,
            TerrainLayout::Patches { cell_size } => {
                let ix = (x / cell_size).floor() as i64 as u64;
                let iy = (y / cell_size).floor() as i64 as u64;
                let h = texture::mix(self.seed ^ texture::mix(ix.wrapping_mul(0x9E37) ^ iy.rotate_left(29)));
                TerrainClass((h % self.palette.n_classes() as u64) as usize)
            }
        }
    }

    fn obstacle_color(&self, o: &Obstacle, p: Point) -> [f64; 3] {
        match o.texture_kind {
            TextureKind::Unfamiliar => UnfamiliarPattern::from_seed(o.texture_seed).color(p[0], p[1]),
            TextureKind::Familiar => {
                let class = TerrainClass((o.texture_seed % self.palette.n_classes() as u64) as usize);
                self.palette.color(class, o.texture_seed, p[0], p[1])
            }
        }
    }

    /// Label and color of a ground point.
    pub fn ground_sample(&self, p: Point) -> (PixelLabel, [f64; 3]) {
        for (i, o) in self.obstacles.iter().enumerate() {
            if o.footprint.contains(p) {
                return (PixelLabel::Obstacle(i), self.obstacle_color(o, p));
            }
        }
        let class = self.terrain_class(p[0], p[1]);
        (PixelLabel::Terrain(class), self.palette.color(class, self.seed, p[0], p[1]))
    }

    /// Renders the camera view and the per-pixel hit labels.
    pub fn render_with_labels(&self, state: &VehicleState, cam: &CameraModel) -> (Image, Vec<PixelLabel>) {
        let (w, h) = (cam.image_width, cam.image_height);
        let mut img = Image::filled(w, h, SKY_COLOR);
        let mut labels = vec![PixelLabel::Sky; w * h];
        for j in 0..h {
            for i in 0..w {
                if let Some(p) = cam.pixel_center_to_ground(state, i, j) {
                    let (label, color) = self.ground_sample(p);
                    img.set(i, j, color);
                    labels[j * w + i] = label;
                }
            }
        }
        (img, labels)
    }

    pub fn render_camera(&self, state: &VehicleState, cam: &CameraModel) -> Image {
        self.render_with_labels(state, cam).0
    }

    /// True iff the vehicle rectangle intersects any obstacle (closed sets).
    pub fn collision_query(&self, state: &VehicleState, footprint: &Footprint) -> bool {
        let body = footprint.polygon(state);
        self.obstacles.iter().any(|o| o.footprint.intersects(&body))
    }

    /// Translation that resolves all penetrations, applied greedily
    /// obstacle by obstacle. Zero when collision-free.
    pub fn penetration_resolution(&self, state: &VehicleState, footprint: &Footprint) -> Point {
        let mut offset = [0.0, 0.0];
        for o in &self.obstacles {
            let moved = VehicleState { x: state.x + offset[0], y: state.y + offset[1], ..*state };
            if let Some(m) = footprint.polygon(&moved).minimum_translation(&o.footprint) {
                // small margin so the resolved pose is strictly outside
                let n = m[0].hypot(m[1]);
                let scale = if n > 0.0 { (n + 1e-6) / n } else { 0.0 };
                offset[0] += m[0] * scale;
                offset[1] += m[1] * scale;
            }
        }
        offset
    }
}

/// Vehicle rectangle (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub length: f64,
    pub width: f64,
}

impl Default for Footprint {
    fn default() -> Self {
        Self { length: 0.9, width: 0.6 }
    }
}

impl Footprint {
    pub fn polygon(&self, state: &VehicleState) -> ConvexPolygon {
        ConvexPolygon::rectangle([state.x, state.y], state.theta, self.length, self.width)
    }

    /// Four corners followed by a 3×3 interior grid, in world coordinates.
    pub fn sample_points(&self, state: &VehicleState) -> [Point; 13] {
        let (c, s) = (state.theta.cos(), state.theta.sin());
        let (hl, hw) = (self.length / 2.0, self.width / 2.0);
        let mut local = [[0.0; 2]; 13];
        local[..4].copy_from_slice(&[[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]]);
        let fr = [-0.5, 0.0, 0.5];
        for (k, (a, b)) in fr.iter().flat_map(|a| fr.iter().map(move |b| (a, b))).enumerate() {
            local[4 + k] = [a * hl, b * hw];
        }
        local.map(|[a, b]| [state.x + c * a - s * b, state.y + s * a + c * b])
    }
}

/// Camera view of single-class terrain from a seed-derived pose; the
/// training unit for the classifier and autoencoder.
pub fn generate_tile(palette: &TerrainPalette, class: TerrainClass, seed: u64, cam: &CameraModel) -> Result<Image> {
    let (world, state) = tile_scene(palette, class, seed)?;
    Ok(world.render_camera(&state, cam))
}

/// World and vehicle pose behind `generate_tile`.
pub fn tile_scene(palette: &TerrainPalette, class: TerrainClass, seed: u64) -> Result<(World, VehicleState)> {
    palette.spec(class)?;
    let mut rng = ChaCha8Rng::seed_from_u64(texture::mix(seed ^ ((class.0 as u64) << 48)));
    let world = World::new(
        Extent { x_min: -1e4, x_max: 1e4, y_min: -1e4, y_max: 1e4 },
        TerrainLayout::Uniform(class),
        rng.gen(),
        palette.clone(),
    )?;
    let state = VehicleState::at_rest(
        rng.gen_range(-500.0..500.0),
        rng.gen_range(-500.0..500.0),
        rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
    );
    Ok((world, state))
}

/// Tile of a square `size × size` image with the default camera geometry.
pub fn generate_square_tile(palette: &TerrainPalette, class: TerrainClass, seed: u64, size: usize) -> Result<Image> {
    if size == 0 {
        return Err(domain("tile size must be positive"));
    }
    let cam = CameraModel {
        image_width: size,
        image_height: size,
        ..CameraModel::default()
    };
    generate_tile(palette, class, seed, &cam)
}
