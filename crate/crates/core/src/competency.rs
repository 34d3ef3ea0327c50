//! Competency estimation from reconstruction loss: per-class Gaussian loss
//! calibration, the overall score, regional maps and softmax baselines.

use std::path::Path;

use crate::error::{domain, Error, Result};
use crate::image::{save_pgm, Image, PixelMask};
use crate::perception::{logsumexp, softmax, ClassPosterior, Classifier, LabeledDataset};
use crate::reconstruction::{LinearAutoencoder, ReconLoss};
use crate::segmentation::{segment, FhParams, SegmentMap};

pub const SIGMA_MIN: f64 = 1e-6;

/// Standard normal CDF.
pub fn gaussian_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard-normal quantile of `confidence` percent, by bisection.
pub fn z_from_confidence(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 100.0) {
        return Err(domain(format!("confidence {confidence} outside (0, 100)")));
    }
    let target = confidence / 100.0;
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if gaussian_cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Probability that an input of class `c` with this loss is in-distribution:
/// `1 − Φ((loss − 2μ)/σ − z)`.
pub fn p_id_given_class(loss: f64, mu: f64, sigma: f64, z: f64) -> f64 {
    // (loss − 2μ)/σ − z, arranged so the argument is exactly 0 at loss = 2μ + zσ
    let anchor = 2.0 * mu + z * sigma;
    (1.0 - gaussian_cdf((loss - anchor) / sigma)).clamp(0.0, 1.0)
}

/// Per-class Gaussian model of reconstruction loss.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassLossModel {
    pub mu: Vec<f64>,
    /// Sample standard deviations, clamped below at `SIGMA_MIN`.
    pub sigma: Vec<f64>,
    pub n_samples: Vec<usize>,
}

impl ClassLossModel {
    /// Fits sample mean and `n − 1` standard deviation per true class.
    pub fn from_losses(losses: &[(usize, f64)], n_classes: usize) -> Result<Self> {
        let mut groups = vec![Vec::new(); n_classes];
        for &(c, l) in losses {
            if c >= n_classes {
                return Err(domain(format!("class {c} outside the class set")));
            }
            if !l.is_finite() || l < 0.0 {
                return Err(domain("losses must be finite and nonnegative"));
            }
            groups[c].push(l);
        }
        let short: Vec<usize> = (0..n_classes).filter(|&c| groups[c].len() < 2).collect();
        if !short.is_empty() {
            return Err(Error::Calibration { classes: short });
        }
        let mut model = Self {
            mu: Vec::with_capacity(n_classes),
            sigma: Vec::with_capacity(n_classes),
            n_samples: Vec::with_capacity(n_classes),
        };
        for mut g in groups {
            // sorted summation makes the fit independent of sample order
            g.sort_by(f64::total_cmp);
            let n = g.len() as f64;
            let mu = g.iter().sum::<f64>() / n;
            let var = g.iter().map(|l| (l - mu).powi(2)).sum::<f64>() / (n - 1.0);
            model.mu.push(mu);
            model.sigma.push(var.sqrt().max(SIGMA_MIN));
            model.n_samples.push(g.len());
        }
        Ok(model)
    }

    pub fn n_classes(&self) -> usize {
        self.mu.len()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut wr = csv::Writer::from_path(path)?;
        wr.write_record(["class_id", "mu", "sigma", "n"])?;
        for c in 0..self.n_classes() {
            wr.write_record([
                c.to_string(),
                format!("{:e}", self.mu[c]),
                format!("{:e}", self.sigma[c]),
                self.n_samples[c].to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bad = |msg: String| Error::Format {
            path: path.to_path_buf(),
            msg,
        };
        let mut rows: Vec<(usize, f64, f64, usize)> = Vec::new();
        for rec in csv::Reader::from_path(path)?.records() {
            let rec = rec?;
            if rec.len() != 4 {
                return Err(bad("calibration rows need class_id,mu,sigma,n".into()));
            }
            let parse_f = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("not a number: {s}")));
            let parse_u = |s: &str| s.trim().parse::<usize>().map_err(|_| bad(format!("not an integer: {s}")));
            rows.push((parse_u(&rec[0])?, parse_f(&rec[1])?, parse_f(&rec[2])?, parse_u(&rec[3])?));
        }
        rows.sort_by_key(|r| r.0);
        if rows.iter().enumerate().any(|(i, r)| r.0 != i) || rows.is_empty() {
            return Err(bad("class ids must be 0..n without gaps".into()));
        }
        if rows.iter().any(|r| !(r.2 > 0.0)) {
            return Err(bad("sigma must be positive".into()));
        }
        Ok(Self {
            mu: rows.iter().map(|r| r.1).collect(),
            sigma: rows.iter().map(|r| r.2).collect(),
            n_samples: rows.iter().map(|r| r.3).collect(),
        })
    }
}

/// `ρ̂ = p̂_ĉ · Σ_c p̂_c · p_id(loss | c)`.
pub fn overall_score(posterior: &ClassPosterior, loss: ReconLoss, model: &ClassLossModel, z: f64) -> f64 {
    let mix: f64 = posterior
        .probs
        .iter()
        .enumerate()
        .map(|(c, p)| p * p_id_given_class(loss.0, model.mu[c], model.sigma[c], z))
        .sum();
    (posterior.max_prob() * mix).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompetencyConfig {
    /// Percent confidence for the whole-image score.
    pub confidence_overall: f64,
    pub confidence_regional: f64,
    pub threshold_overall: f64,
    pub threshold_regional: f64,
}

impl Default for CompetencyConfig {
    fn default() -> Self {
        Self {
            confidence_overall: 95.0,
            confidence_regional: 95.0,
            threshold_overall: 0.8,
            threshold_regional: 0.8,
        }
    }
}

impl CompetencyConfig {
    pub fn validate(&self) -> Result<()> {
        z_from_confidence(self.confidence_overall)?;
        z_from_confidence(self.confidence_regional)?;
        for t in [self.threshold_overall, self.threshold_regional] {
            if !(t > 0.0 && t < 1.0) {
                return Err(domain(format!("competency threshold {t} outside (0, 1)")));
            }
        }
        Ok(())
    }

    pub fn z_overall(&self) -> Result<f64> {
        z_from_confidence(self.confidence_overall)
    }

    pub fn z_regional(&self) -> Result<f64> {
        z_from_confidence(self.confidence_regional)
    }
}

/// Inpainting loss of one segment; a segment covering the whole image has
/// no visible context and is scored against the mean image.
fn segment_loss(ae: &LinearAutoencoder, image: &Image, mask: &PixelMask) -> Result<ReconLoss> {
    if mask.count_missing() == mask.bits().len() {
        let d = ae.mean.len() as f64;
        let sq = image.as_slice().iter().zip(ae.mean.iter()).map(|(x, m)| (x - m).powi(2)).sum::<f64>();
        return Ok(ReconLoss(sq / d));
    }
    Ok(ae.inpaint(image, mask)?.1)
}

/// Segments with at least one non-sky pixel, paired with their inpainting losses.
fn scored_segments(
    ae: &LinearAutoencoder,
    image: &Image,
    seg: &SegmentMap,
    sky: Option<&PixelMask>,
) -> Result<Vec<Option<ReconLoss>>> {
    let mut has_ground = vec![false; seg.n_segments()];
    for (p, &id) in seg.ids().iter().enumerate() {
        if !sky.is_some_and(|s| s.get(p)) {
            has_ground[id] = true;
        }
    }
    (0..seg.n_segments())
        .map(|s| {
            if has_ground[s] {
                segment_loss(ae, image, &seg.mask(s)).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect()
}

/// Overall-mode calibration: whole-image reconstruction loss by true label.
pub fn calibrate_overall(ae: &LinearAutoencoder, classifier: &Classifier, holdout: &LabeledDataset) -> Result<ClassLossModel> {
    let losses = holdout
        .images
        .iter()
        .zip(&holdout.labels)
        .map(|(im, l)| Ok((l.0, ae.reconstruction_loss(im)?.0)))
        .collect::<Result<Vec<_>>>()?;
    ClassLossModel::from_losses(&losses, classifier.n_classes())
}

/// Regional-mode calibration: per-segment inpainting loss, pooled by the
/// true label of the source image. Pure-sky segments are skipped.
pub fn calibrate_regional(
    ae: &LinearAutoencoder,
    classifier: &Classifier,
    holdout: &LabeledDataset,
    fh: &FhParams,
    sky: Option<&PixelMask>,
) -> Result<ClassLossModel> {
    let mut losses = Vec::new();
    for (im, l) in holdout.images.iter().zip(&holdout.labels) {
        let seg = segment(im, fh)?;
        for loss in scored_segments(ae, im, &seg, sky)?.into_iter().flatten() {
            losses.push((l.0, loss.0));
        }
    }
    ClassLossModel::from_losses(&losses, classifier.n_classes())
}

/// Segment-constant per-pixel competency.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionalMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub segments: SegmentMap,
    /// Score per segment; 1 for pure-sky segments.
    pub segment_scores: Vec<f64>,
}

impl RegionalMap {
    pub fn value(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        save_pgm(self.width, self.height, &self.values, path)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut wr = csv::Writer::from_path(path)?;
        wr.write_record(["x", "y", "segment", "competency"])?;
        for y in 0..self.height {
            for x in 0..self.width {
                let p = y * self.width + x;
                wr.write_record([x.to_string(), y.to_string(), self.segments.id(p).to_string(), self.values[p].to_string()])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Scores every segment with the whole-image posterior and the regional
/// loss model; sky pixels are fully competent.
pub fn regional_map(
    image: &Image,
    posterior: &ClassPosterior,
    ae: &LinearAutoencoder,
    segments: &SegmentMap,
    model: &ClassLossModel,
    z: f64,
    sky: Option<&PixelMask>,
) -> Result<RegionalMap> {
    if !segments.matches(image) || sky.is_some_and(|s| !s.matches(image)) {
        return Err(domain("segment map or sky mask does not match the image"));
    }
    let segment_scores: Vec<f64> = scored_segments(ae, image, segments, sky)?
        .into_iter()
        .map(|l| l.map_or(1.0, |l| overall_score(posterior, l, model, z)))
        .collect();
    let values = segments
        .ids()
        .iter()
        .enumerate()
        .map(|(p, &id)| if sky.is_some_and(|s| s.get(p)) { 1.0 } else { segment_scores[id] })
        .collect();
    Ok(RegionalMap {
        width: image.width(),
        height: image.height(),
        values,
        segments: segments.clone(),
        segment_scores,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMethod {
    Msp,
    Temperature,
    Entropy,
    Energy,
}

impl BaselineMethod {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineMethod::Msp => "msp",
            BaselineMethod::Temperature => "temperature",
            BaselineMethod::Entropy => "entropy",
            BaselineMethod::Energy => "energy",
        }
    }
}

/// Softmax-derived confidence; higher always means more in-distribution.
pub fn score_baseline(method: BaselineMethod, logits: &[f64], temperature: f64) -> Result<f64> {
    if logits.is_empty() || logits.iter().any(|l| !l.is_finite()) {
        return Err(domain("baseline scores need finite logits"));
    }
    Ok(match method {
        BaselineMethod::Msp => softmax(logits).into_iter().fold(0.0, f64::max),
        BaselineMethod::Temperature => {
            if !(temperature > 0.0) {
                return Err(domain("temperature must be positive"));
            }
            let scaled: Vec<f64> = logits.iter().map(|l| l / temperature).collect();
            softmax(&scaled).into_iter().fold(0.0, f64::max)
        }
        BaselineMethod::Entropy => softmax(logits).iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum(),
        BaselineMethod::Energy => logsumexp(logits),
    })
}

/// Whole-image and, optionally, regional competency of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct CompetencyRecord {
    pub overall: f64,
    pub regional: Option<RegionalMap>,
}

impl CompetencyRecord {
    /// Record that reports full competency everywhere.
    pub fn fully_competent(width: usize, height: usize) -> Self {
        let segments = SegmentMap::from_labels(width, height, &vec![0; width * height]).expect("consistent dimensions");
        Self {
            overall: 1.0,
            regional: Some(RegionalMap {
                width,
                height,
                values: vec![1.0; width * height],
                segments,
                segment_scores: vec![1.0],
            }),
        }
    }
}

/// Trained and calibrated models bundled for scoring.
#[derive(Debug, Clone)]
pub struct CompetencyEstimator {
    pub classifier: Classifier,
    pub autoencoder: LinearAutoencoder,
    pub overall_model: ClassLossModel,
    pub regional_model: ClassLossModel,
    pub config: CompetencyConfig,
    pub segmentation: FhParams,
    /// Pixels whose ray never meets the ground.
    pub sky: Option<PixelMask>,
}

impl CompetencyEstimator {
    pub fn overall(&self, image: &Image) -> Result<f64> {
        let post = self.classifier.predict(image)?;
        let loss = self.autoencoder.reconstruction_loss(image)?;
        Ok(overall_score(&post, loss, &self.overall_model, self.config.z_overall()?))
    }

    pub fn regional(&self, image: &Image) -> Result<RegionalMap> {
        let post = self.classifier.predict(image)?;
        self.regional_with_posterior(image, &post)
    }

    fn regional_with_posterior(&self, image: &Image, post: &ClassPosterior) -> Result<RegionalMap> {
        let seg = segment(image, &self.segmentation)?;
        regional_map(
            image,
            post,
            &self.autoencoder,
            &seg,
            &self.regional_model,
            self.config.z_regional()?,
            self.sky.as_ref(),
        )
    }

    pub fn record(&self, image: &Image, with_regional: bool) -> Result<CompetencyRecord> {
        let post = self.classifier.predict(image)?;
        let loss = self.autoencoder.reconstruction_loss(image)?;
        let overall = overall_score(&post, loss, &self.overall_model, self.config.z_overall()?);
        let regional = if with_regional {
            Some(self.regional_with_posterior(image, &post)?)
        } else {
            None
        };
        Ok(CompetencyRecord { overall, regional })
    }
}
