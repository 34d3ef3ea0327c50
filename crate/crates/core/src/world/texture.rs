//! Seeded procedural textures: value-noise terrain and unfamiliar patterns.

use crate::error::{domain, Result};

/// Terrain class id in `[0, |C|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TerrainClass(pub usize);

/// One octave of value noise: spatial frequency (cycles per meter) and amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Octave {
    pub frequency: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerrainClassSpec {
    pub name: String,
    pub base: [f64; 3],
    pub octaves: Vec<Octave>,
    /// Folds the noise into sharp ridges (crater rims).
    pub ridged: bool,
}

/// Fixed per-class texture parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainPalette {
    classes: Vec<TerrainClassSpec>,
}

impl Default for TerrainPalette {
    fn default() -> Self {
        let oct = |f: f64, a: f64| Octave { frequency: f, amplitude: a };
        Self {
            classes: vec![
                TerrainClassSpec {
                    name: "smooth".into(),
                    base: [0.66, 0.64, 0.60],
                    octaves: vec![oct(0.35, 0.08), oct(1.5, 0.03)],
                    ridged: false,
                },
                TerrainClassSpec {
                    name: "bumpy".into(),
                    base: [0.54, 0.52, 0.49],
                    octaves: vec![oct(0.35, 0.08), oct(2.5, 0.09), oct(6.0, 0.06)],
                    ridged: false,
                },
                TerrainClassSpec {
                    name: "crater-edge".into(),
                    base: [0.47, 0.46, 0.45],
                    octaves: vec![oct(0.35, 0.08), oct(1.2, 0.14)],
                    ridged: true,
                },
                TerrainClassSpec {
                    name: "crater-interior".into(),
                    base: [0.33, 0.33, 0.34],
                    octaves: vec![oct(0.35, 0.08), oct(3.0, 0.03)],
                    ridged: false,
                },
            ],
        }
    }
}

impl TerrainPalette {
    pub fn new(classes: Vec<TerrainClassSpec>) -> Result<Self> {
        if classes.len() < 2 {
            return Err(domain("at least two terrain classes are required"));
        }
        Ok(Self { classes })
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.name.clone()).collect()
    }

    pub fn spec(&self, class: TerrainClass) -> Result<&TerrainClassSpec> {
        self.classes
            .get(class.0)
            .ok_or_else(|| domain(format!("unknown terrain class id {}", class.0)))
    }

    pub fn class_by_name(&self, name: &str) -> Option<TerrainClass> {
        self.classes.iter().position(|c| c.name == name).map(TerrainClass)
    }

    /// Ground color of `class` at world point `(x, y)` for texture seed `seed`.
    /// Panics on an unknown class; callers validate ids up front.
    pub fn color(&self, class: TerrainClass, seed: u64, x: f64, y: f64) -> [f64; 3] {
        let spec = &self.classes[class.0];
        let class_seed = mix(seed ^ (class.0 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut shade = 0.0;
        for (i, o) in spec.octaves.iter().enumerate() {
            let n = value_noise(mix(class_seed.wrapping_add(i as u64)), x * o.frequency, y * o.frequency);
            let centered = if spec.ridged && i + 1 == spec.octaves.len() {
                // sharp bright rims along the zero set of the noise
                1.0 - 2.0 * (2.0 * n - 1.0).abs() - 0.5
            } else {
                2.0 * n - 1.0
            };
            shade += o.amplitude * centered;
        }
        spec.base.map(|b| (b + shade).clamp(0.0, 1.0))
    }
}

/// Saturated color pairs that never occur on terrain.
const UNFAMILIAR_PALETTES: [([f64; 3], [f64; 3]); 6] = [
    ([0.95, 0.15, 0.10], [0.98, 0.85, 0.10]),
    ([0.10, 0.25, 0.95], [0.98, 0.98, 0.98]),
    ([0.10, 0.80, 0.20], [0.90, 0.10, 0.80]),
    ([0.98, 0.55, 0.05], [0.05, 0.05, 0.05]),
    ([0.05, 0.85, 0.90], [0.85, 0.05, 0.25]),
    ([0.98, 0.98, 0.98], [0.90, 0.10, 0.10]),
];

/// Stripe or checker pattern derived from a seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnfamiliarPattern {
    pub colors: ([f64; 3], [f64; 3]),
    pub period: f64,
    pub angle: f64,
    pub checker: bool,
}

impl UnfamiliarPattern {
    pub fn from_seed(seed: u64) -> Self {
        let h = |salt: u64| unit(mix(seed.wrapping_mul(0x2545_F491_4F6C_DD1D) ^ salt));
        let idx = (mix(seed ^ 0xA5A5) % UNFAMILIAR_PALETTES.len() as u64) as usize;
        Self {
            colors: UNFAMILIAR_PALETTES[idx],
            period: 0.15 + 0.25 * h(1),
            angle: std::f64::consts::PI * h(2),
            checker: h(3) < 0.5,
        }
    }

    pub fn color(&self, x: f64, y: f64) -> [f64; 3] {
        let (c, s) = (self.angle.cos(), self.angle.sin());
        let u = (c * x + s * y) / self.period;
        let v = (-s * x + c * y) / self.period;
        let parity = if self.checker {
            (u.floor() as i64 + v.floor() as i64).rem_euclid(2)
        } else {
            (u.floor() as i64).rem_euclid(2)
        };
        if parity == 0 {
            self.colors.0
        } else {
            self.colors.1
        }
    }
}

/// splitmix64 finalizer.
pub(crate) fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn unit(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn lattice(seed: u64, ix: i64, iy: i64) -> f64 {
    unit(mix(seed ^ mix((ix as u64).wrapping_mul(0x8CB9_2BA7_2F3D_8DD7) ^ (iy as u64))))
}

/// Smoothstep-interpolated lattice noise in `[0, 1]`.
pub fn value_noise(seed: u64, x: f64, y: f64) -> f64 {
    let (fx, fy) = (x.floor(), y.floor());
    let (ix, iy) = (fx as i64, fy as i64);
    let (tx, ty) = (x - fx, y - fy);
    let sx = tx * tx * (3.0 - 2.0 * tx);
    let sy = ty * ty * (3.0 - 2.0 * ty);
    let v00 = lattice(seed, ix, iy);
    let v10 = lattice(seed, ix + 1, iy);
    let v01 = lattice(seed, ix, iy + 1);
    let v11 = lattice(seed, ix + 1, iy + 1);
    let a = v00 + sx * (v10 - v00);
    let b = v01 + sx * (v11 - v01);
    a + sy * (b - a)
}
