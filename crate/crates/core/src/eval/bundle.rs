//! Fitting and persisting the full model bundle behind the competency
//! estimator.

use std::path::Path;

use crate::competency::{calibrate_overall, calibrate_regional, ClassLossModel, CompetencyEstimator};
use crate::perception::{train_classifier, Classifier, LabeledDataset, TrainOptions};
use crate::reconstruction::{fit_autoencoder, LinearAutoencoder};
use crate::Result;

use super::config::RunConfig;

const CLASSIFIER_FILE: &str = "classifier.bin";
const AUTOENCODER_FILE: &str = "autoencoder.bin";
const OVERALL_FILE: &str = "overall_calibration.csv";
const REGIONAL_FILE: &str = "regional_calibration.csv";

pub fn train(train_set: &LabeledDataset, class_names: &[String], cfg: &RunConfig) -> Result<Classifier> {
    let opts = TrainOptions {
        epochs: cfg.training.epochs,
        learning_rate: cfg.training.learning_rate,
        seed: cfg.seed,
    };
    train_classifier(train_set, class_names, &opts)
}

pub fn fit_ae(train_set: &LabeledDataset, cfg: &RunConfig) -> Result<LinearAutoencoder> {
    fit_autoencoder(train_set, cfg.training.rank, cfg.seed)
}

/// Assembles an estimator from fitted models and the run configuration.
pub fn assemble(
    classifier: Classifier,
    autoencoder: LinearAutoencoder,
    overall_model: ClassLossModel,
    regional_model: ClassLossModel,
    cfg: &RunConfig,
) -> CompetencyEstimator {
    CompetencyEstimator {
        classifier,
        autoencoder,
        overall_model,
        regional_model,
        config: cfg.competency,
        segmentation: cfg.segmentation,
        sky: Some(cfg.camera.sky_mask()),
    }
}

/// Trains, fits and calibrates everything from the train and holdout splits.
pub fn build_estimator(
    train_set: &LabeledDataset,
    holdout: &LabeledDataset,
    class_names: &[String],
    cfg: &RunConfig,
) -> Result<CompetencyEstimator> {
    let classifier = train(train_set, class_names, cfg)?;
    let ae = fit_ae(train_set, cfg)?;
    let overall = calibrate_overall(&ae, &classifier, holdout)?;
    let sky = cfg.camera.sky_mask();
    let regional = calibrate_regional(&ae, &classifier, holdout, &cfg.segmentation, Some(&sky))?;
    Ok(assemble(classifier, ae, overall, regional, cfg))
}

pub fn save_bundle(est: &CompetencyEstimator, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    est.classifier.save(dir.join(CLASSIFIER_FILE))?;
    est.autoencoder.save(dir.join(AUTOENCODER_FILE))?;
    est.overall_model.write_csv(dir.join(OVERALL_FILE))?;
    est.regional_model.write_csv(dir.join(REGIONAL_FILE))?;
    Ok(())
}

pub fn save_classifier(c: &Classifier, dir: impl AsRef<Path>) -> Result<()> {
    std::fs::create_dir_all(dir.as_ref())?;
    c.save(dir.as_ref().join(CLASSIFIER_FILE))
}

pub fn load_classifier(dir: impl AsRef<Path>) -> Result<Classifier> {
    Classifier::load(dir.as_ref().join(CLASSIFIER_FILE))
}

pub fn save_autoencoder(ae: &LinearAutoencoder, dir: impl AsRef<Path>) -> Result<()> {
    std::fs::create_dir_all(dir.as_ref())?;
    ae.save(dir.as_ref().join(AUTOENCODER_FILE))
}

pub fn load_autoencoder(dir: impl AsRef<Path>) -> Result<LinearAutoencoder> {
    LinearAutoencoder::load(dir.as_ref().join(AUTOENCODER_FILE))
}

pub fn save_calibration(model: &ClassLossModel, dir: impl AsRef<Path>, regional: bool) -> Result<()> {
    std::fs::create_dir_all(dir.as_ref())?;
    model.write_csv(dir.as_ref().join(if regional { REGIONAL_FILE } else { OVERALL_FILE }))
}

pub fn load_bundle(dir: impl AsRef<Path>, cfg: &RunConfig) -> Result<CompetencyEstimator> {
    let dir = dir.as_ref();
    Ok(assemble(
        Classifier::load(dir.join(CLASSIFIER_FILE))?,
        LinearAutoencoder::load(dir.join(AUTOENCODER_FILE))?,
        ClassLossModel::read_csv(dir.join(OVERALL_FILE))?,
        ClassLossModel::read_csv(dir.join(REGIONAL_FILE))?,
        cfg,
    ))
}
