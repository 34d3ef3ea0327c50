//! Generated evaluation corpus: labeled single-class tiles split into
//! train/holdout/test, and out-of-distribution renders with unfamiliar
//! obstacles and their ground-truth pixel masks.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::VehicleState;
use crate::error::{config, Error, Result};
use crate::image::{save_pgm, Image};
use crate::perception::{write_manifest, LabeledDataset, Split};
use crate::world::{tile_scene, CameraModel, ConvexPolygon, Obstacle, TerrainClass, TerrainPalette};

const COMPOSITE_SEED_BASE: u64 = 10_000;
const SCENE_SEED_BASE: u64 = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusConfig {
    pub tiles_per_class: usize,
    pub n_train: usize,
    pub n_holdout: usize,
    pub n_test: usize,
    /// Whole-image OOD set for the overall score.
    pub n_ood_composites: usize,
    /// OOD set with pixel masks for regional maps.
    pub n_ood_scenes: usize,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            tiles_per_class: 200,
            n_train: 120,
            n_holdout: 40,
            n_test: 40,
            n_ood_composites: 100,
            n_ood_scenes: 50,
            seed: 0,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_train + self.n_holdout + self.n_test != self.tiles_per_class {
            return Err(config("corpus splits must add up to tiles_per_class"));
        }
        if self.n_train < 10 || self.n_holdout < 2 {
            return Err(config("corpus needs >= 10 training and >= 2 holdout tiles per class"));
        }
        Ok(())
    }
}

/// Render containing an unfamiliar obstacle; `unfamiliar[p]` marks pixels
/// that see it.
#[derive(Debug, Clone, PartialEq)]
pub struct OodScene {
    pub image: Image,
    pub unfamiliar: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub train: LabeledDataset,
    pub holdout: LabeledDataset,
    pub test: LabeledDataset,
    pub ood_composites: Vec<OodScene>,
    pub ood_scenes: Vec<OodScene>,
}

/// A tile pose with one unfamiliar square (side 1–2 m) placed 1–3.5 m
/// ahead, randomly rotated.
pub fn ood_render(palette: &TerrainPalette, cam: &CameraModel, class: TerrainClass, seed: u64) -> Result<OodScene> {
    let (world, pose) = tile_scene(palette, class, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x00D5);
    let dist = rng.gen_range(1.0..3.5);
    let side = rng.gen_range(1.0..2.0);
    let (c, s) = (pose.theta.cos(), pose.theta.sin());
    let center = [pose.x + c * dist, pose.y + s * dist];
    let poly = ConvexPolygon::rectangle(center, rng.gen_range(0.0..std::f64::consts::PI), side, side);
    let world = world.with_obstacle(Obstacle::unfamiliar(poly, seed));
    let (image, labels) = world.render_with_labels(&VehicleState::at_rest(pose.x, pose.y, pose.theta), cam);
    let unfamiliar = labels.iter().map(|l| l.is_unfamiliar(&world)).collect();
    Ok(OodScene { image, unfamiliar })
}

fn tile_seed(cfg: &CorpusConfig, index: usize) -> u64 {
    cfg.seed.wrapping_mul(1_000_003).wrapping_add(index as u64)
}

pub fn generate_corpus(palette: &TerrainPalette, cam: &CameraModel, cfg: &CorpusConfig) -> Result<Corpus> {
    cfg.validate()?;
    let mut parts: [(Vec<Image>, Vec<TerrainClass>); 3] = Default::default();
    for c in 0..palette.n_classes() {
        let class = TerrainClass(c);
        for i in 0..cfg.tiles_per_class {
            let img = crate::world::generate_tile(palette, class, tile_seed(cfg, i), cam)?;
            let part = if i < cfg.n_train {
                0
            } else if i < cfg.n_train + cfg.n_holdout {
                1
            } else {
                2
            };
            parts[part].0.push(img);
            parts[part].1.push(class);
        }
    }
    let [train, holdout, test] = parts;
    let ood = |base: u64, n: usize| -> Result<Vec<OodScene>> {
        (0..n)
            .map(|k| {
                let class = TerrainClass(k % palette.n_classes());
                ood_render(palette, cam, class, tile_seed(cfg, base as usize + k))
            })
            .collect()
    };
    Ok(Corpus {
        train: LabeledDataset::new(train.0, train.1, Split::Train)?,
        holdout: LabeledDataset::new(holdout.0, holdout.1, Split::Holdout)?,
        test: LabeledDataset::new(test.0, test.1, Split::Test)?,
        ood_composites: ood(COMPOSITE_SEED_BASE, cfg.n_ood_composites)?,
        ood_scenes: ood(SCENE_SEED_BASE, cfg.n_ood_scenes)?,
    })
}

fn load_mask(path: &Path, expect: usize) -> Result<Vec<bool>> {
    let img = image::open(path)?.to_luma8();
    if img.len() != expect {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: "mask size does not match its image".into(),
        });
    }
    Ok(img.as_raw().iter().map(|v| *v >= 128).collect())
}

impl Corpus {
    /// Writes `tiles/*.ppm` with `manifest.csv`, and `ood/*.ppm` plus
    /// `*_mask.pgm` with `ood_manifest.csv`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir.join("tiles"))?;
        std::fs::create_dir_all(dir.join("ood"))?;
        let mut entries = Vec::new();
        for set in [&self.train, &self.holdout, &self.test] {
            for (i, (img, l)) in set.images.iter().zip(&set.labels).enumerate() {
                let rel = format!("tiles/{}_{}_{i:04}.ppm", set.split.as_str(), l.0);
                img.save_ppm(dir.join(&rel))?;
                entries.push((rel, *l, set.split));
            }
        }
        write_manifest(dir.join("manifest.csv"), &entries)?;
        let mut wr = csv::Writer::from_path(dir.join("ood_manifest.csv"))?;
        wr.write_record(["ppm_path", "mask_path", "kind"])?;
        for (kind, scenes) in [("composite", &self.ood_composites), ("scene", &self.ood_scenes)] {
            for (k, s) in scenes.iter().enumerate() {
                let img = format!("ood/{kind}_{k:04}.ppm");
                let mask = format!("ood/{kind}_{k:04}_mask.pgm");
                s.image.save_ppm(dir.join(&img))?;
                let values: Vec<f64> = s.unfamiliar.iter().map(|b| if *b { 1.0 } else { 0.0 }).collect();
                save_pgm(s.image.width(), s.image.height(), &values, dir.join(&mask))?;
                wr.write_record([img.as_str(), mask.as_str(), kind])?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest = dir.join("manifest.csv");
        let mut composites = Vec::new();
        let mut scenes = Vec::new();
        let path = dir.join("ood_manifest.csv");
        let mut rd = csv::Reader::from_path(&path)?;
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(Error::Format {
                    path: path.clone(),
                    msg: "rows need ppm_path,mask_path,kind".into(),
                });
            }
            let image = Image::load_ppm(dir.join(&rec[0]))?;
            let unfamiliar = load_mask(&dir.join(&rec[1]), image.n_pixels())?;
            let scene = OodScene { image, unfamiliar };
            match &rec[2] {
                "composite" => composites.push(scene),
                "scene" => scenes.push(scene),
                other => {
                    return Err(Error::Format {
                        path: path.clone(),
                        msg: format!("unknown OOD kind '{other}'"),
                    })
                }
            }
        }
        Ok(Self {
            train: LabeledDataset::load_manifest(&manifest, Split::Train)?,
            holdout: LabeledDataset::load_manifest(&manifest, Split::Holdout)?,
            test: LabeledDataset::load_manifest(&manifest, Split::Test)?,
            ood_composites: composites,
            ood_scenes: scenes,
        })
    }
}
