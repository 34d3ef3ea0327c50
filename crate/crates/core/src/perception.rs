//! Softmax classifier over raw pixels plus per-channel summary statistics.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::image::Image;
use crate::io::{read_f64s, read_u64, write_f64s, write_u64};
use crate::world::TerrainClass;

const MAGIC: &[u8; 8] = b"PARCECLF";
const SUMMARY_FEATURES: usize = 6;

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// `log Σ exp(logits)`, max-subtracted.
pub fn logsumexp(logits: &[f64]) -> f64 {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassPosterior {
    pub probs: Vec<f64>,
    pub logits: Vec<f64>,
}

impl ClassPosterior {
    pub fn from_logits(logits: Vec<f64>) -> Self {
        Self {
            probs: softmax(&logits),
            logits,
        }
    }

    /// Predicted class `ĉ`.
    pub fn predicted(&self) -> usize {
        argmax(&self.logits)
    }

    /// `p̂_ĉ`.
    pub fn max_prob(&self) -> f64 {
        self.probs[self.predicted()]
    }

    pub fn n_classes(&self) -> usize {
        self.probs.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Holdout,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Holdout => "holdout",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "train" => Ok(Split::Train),
            "holdout" => Ok(Split::Holdout),
            "test" => Ok(Split::Test),
            other => Err(domain(format!("unknown split '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub images: Vec<Image>,
    pub labels: Vec<TerrainClass>,
    pub split: Split,
}

impl LabeledDataset {
    pub fn new(images: Vec<Image>, labels: Vec<TerrainClass>, split: Split) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(domain("dataset images and labels differ in length"));
        }
        Ok(Self { images, labels, split })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn class_counts(&self, n_classes: usize) -> Vec<usize> {
        let mut counts = vec![0; n_classes];
        for l in &self.labels {
            if l.0 < n_classes {
                counts[l.0] += 1;
            }
        }
        counts
    }

    /// Loads the rows of a `(ppm_path, label_id, split)` manifest matching
    /// `split`. Relative paths resolve against the manifest's directory.
    pub fn load_manifest(path: impl AsRef<Path>, split: Split) -> Result<Self> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new("."));
        let mut rd = csv::Reader::from_path(path)?;
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let bad = |msg: &str| Error::Format {
                path: path.to_path_buf(),
                msg: msg.to_string(),
            };
            if rec.len() != 3 {
                return Err(bad("manifest rows need ppm_path,label_id,split"));
            }
            if Split::parse(&rec[2])? != split {
                continue;
            }
            let label: usize = rec[1].trim().parse().map_err(|_| bad("label_id is not an integer"))?;
            images.push(Image::load_ppm(base.join(rec[0].trim()))?);
            labels.push(TerrainClass(label));
        }
        Self::new(images, labels, split)
    }
}

/// Writes manifest rows; `entries` are `(relative ppm path, label, split)`.
pub fn write_manifest(path: impl AsRef<Path>, entries: &[(String, TerrainClass, Split)]) -> Result<()> {
    let mut wr = csv::Writer::from_path(path)?;
    wr.write_record(["ppm_path", "label_id", "split"])?;
    for (p, l, s) in entries {
        wr.write_record([p.as_str(), &l.0.to_string(), s.as_str()])?;
    }
    wr.flush()?;
    Ok(())
}

/// Raw pixel channels followed by per-channel mean and variance.
pub fn image_features(image: &Image) -> Vec<f64> {
    let raw = image.as_slice();
    let mut f = Vec::with_capacity(raw.len() + SUMMARY_FEATURES);
    f.extend_from_slice(raw);
    let n = image.n_pixels() as f64;
    for c in 0..3 {
        let mean = raw.iter().skip(c).step_by(3).sum::<f64>() / n;
        let var = raw.iter().skip(c).step_by(3).map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        f.push(mean);
        f.push(var);
    }
    f
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    /// `|C| × D` weights on standardized features.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    /// Standardization applied before the linear map: `(f - shift) * scale`.
    pub feature_shift: DVector<f64>,
    pub feature_scale: DVector<f64>,
    pub class_names: Vec<String>,
    /// `(width, height, channels)`.
    pub input_shape: (usize, usize, usize),
}

impl Classifier {
    /// Classifier acting on unstandardized features.
    pub fn from_parts(weights: DMatrix<f64>, bias: DVector<f64>, class_names: Vec<String>, input_shape: (usize, usize, usize)) -> Result<Self> {
        let d = input_shape.0 * input_shape.1 * input_shape.2 + SUMMARY_FEATURES;
        if weights.ncols() != d || weights.nrows() != bias.len() || bias.len() != class_names.len() {
            return Err(domain("classifier parameter dimensions are inconsistent"));
        }
        Ok(Self {
            weights,
            bias,
            feature_shift: DVector::zeros(d),
            feature_scale: DVector::from_element(d, 1.0),
            class_names,
            input_shape,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.bias.len()
    }

    fn check_shape(&self, image: &Image) -> Result<()> {
        if (image.width(), image.height(), Image::CHANNELS) != self.input_shape {
            return Err(domain(format!(
                "image is {}x{}, classifier expects {}x{}",
                image.width(),
                image.height(),
                self.input_shape.0,
                self.input_shape.1
            )));
        }
        Ok(())
    }

    fn standardized(&self, image: &Image) -> DVector<f64> {
        let f = DVector::from_vec(image_features(image));
        (f - &self.feature_shift).component_mul(&self.feature_scale)
    }

    pub fn logits(&self, image: &Image) -> Result<Vec<f64>> {
        self.check_shape(image)?;
        let z = &self.weights * self.standardized(image) + &self.bias;
        Ok(z.iter().copied().collect())
    }

    pub fn predict(&self, image: &Image) -> Result<ClassPosterior> {
        Ok(ClassPosterior::from_logits(self.logits(image)?))
    }

    pub fn accuracy(&self, data: &LabeledDataset) -> Result<f64> {
        let mut correct = 0;
        for (img, l) in data.images.iter().zip(&data.labels) {
            if self.predict(img)?.predicted() == l.0 {
                correct += 1;
            }
        }
        Ok(correct as f64 / data.len().max(1) as f64)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        w.write_all(MAGIC)?;
        let (c, d) = (self.weights.nrows(), self.weights.ncols());
        for v in [c, d, self.input_shape.0, self.input_shape.1, self.input_shape.2] {
            write_u64(&mut w, v as u64)?;
        }
        // nalgebra storage is column-major; the file is row-major
        write_f64s(&mut w, self.weights.transpose().as_slice())?;
        write_f64s(&mut w, self.bias.as_slice())?;
        write_f64s(&mut w, self.feature_shift.as_slice())?;
        write_f64s(&mut w, self.feature_scale.as_slice())?;
        for name in &self.class_names {
            write_u64(&mut w, name.len() as u64)?;
            w.write_all(name.as_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bad = |msg: &str| Error::Format {
            path: path.to_path_buf(),
            msg: msg.to_string(),
        };
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("bad magic, expected PARCECLF"));
        }
        let c = read_u64(&mut r)? as usize;
        let d = read_u64(&mut r)? as usize;
        let shape = (read_u64(&mut r)? as usize, read_u64(&mut r)? as usize, read_u64(&mut r)? as usize);
        if shape.0 * shape.1 * shape.2 + SUMMARY_FEATURES != d || c == 0 {
            return Err(bad("inconsistent header dimensions"));
        }
        let w = DMatrix::from_row_slice(c, d, &read_f64s(&mut r, c * d)?);
        let bias = DVector::from_vec(read_f64s(&mut r, c)?);
        let shift = DVector::from_vec(read_f64s(&mut r, d)?);
        let scale = DVector::from_vec(read_f64s(&mut r, d)?);
        let mut names = Vec::with_capacity(c);
        for _ in 0..c {
            let n = read_u64(&mut r)? as usize;
            let mut buf = vec![0u8; n];
            r.read_exact(&mut buf)?;
            names.push(String::from_utf8(buf).map_err(|_| bad("class name is not UTF-8"))?);
        }
        Ok(Self {
            weights: w,
            bias,
            feature_shift: shift,
            feature_scale: scale,
            class_names: names,
            input_shape: shape,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.5,
            seed: 0,
        }
    }
}

/// Mean cross-entropy of `logits + b` and the residual `softmax − onehot`.
fn cross_entropy_residual(logits: &DMatrix<f64>, b: &DVector<f64>, labels: &[usize]) -> (f64, DMatrix<f64>) {
    let n = logits.nrows();
    let mut loss = 0.0;
    let mut resid = DMatrix::zeros(n, logits.ncols());
    for i in 0..n {
        let row: Vec<f64> = logits.row(i).iter().zip(b.iter()).map(|(l, b)| l + b).collect();
        let lse = logsumexp(&row);
        loss += lse - row[labels[i]];
        for (c, &l) in row.iter().enumerate() {
            resid[(i, c)] = (l - lse).exp();
        }
        resid[(i, labels[i])] -= 1.0;
    }
    (loss / n as f64, resid)
}

/// Mean cross-entropy of `W x + b` over the rows of `x`, and its gradient.
#[cfg(test)]
pub(crate) fn cross_entropy_and_gradient(
    w: &DMatrix<f64>,
    b: &DVector<f64>,
    x: &DMatrix<f64>,
    labels: &[usize],
) -> (f64, DMatrix<f64>, DVector<f64>) {
    let n = x.nrows();
    let (loss, resid) = cross_entropy_residual(&(x * w.transpose()), b, labels);
    let grad_w = resid.transpose() * x / n as f64;
    let grad_b = resid.row_sum().transpose() / n as f64;
    (loss, grad_w, grad_b)
}

/// Full-batch gradient descent on softmax cross-entropy. Returns the
/// classifier and the training loss before each epoch plus the final loss.
pub fn train_classifier_with_history(
    train: &LabeledDataset,
    class_names: &[String],
    opts: &TrainOptions,
) -> Result<(Classifier, Vec<f64>)> {
    let n_classes = class_names.len();
    if n_classes < 2 {
        return Err(Error::Training("need at least two classes".into()));
    }
    if train.labels.iter().any(|l| l.0 >= n_classes) {
        return Err(Error::Training("label outside the class set".into()));
    }
    for (c, &n) in train.class_counts(n_classes).iter().enumerate() {
        if n < 10 {
            return Err(Error::Training(format!(
                "class {c} ({}) has {n} examples, at least 10 required",
                class_names[c]
            )));
        }
    }
    if !(opts.learning_rate > 0.0) {
        return Err(Error::Training("learning rate must be positive".into()));
    }
    let first = &train.images[0];
    let shape = (first.width(), first.height(), Image::CHANNELS);
    if train.images.iter().any(|im| !im.same_shape(first)) {
        return Err(Error::Training("training images differ in shape".into()));
    }

    let rows: Vec<Vec<f64>> = train.images.iter().map(image_features).collect();
    let d = rows[0].len();
    let n = rows.len();
    let mut x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    let shift = DVector::from_fn(d, |j, _| x.column(j).mean());
    // unit-variance features divided by sqrt(D) so that E‖x‖² ≈ 1 and step
    // sizes do not depend on the image resolution
    let norm = (d as f64).sqrt();
    let scale = DVector::from_fn(d, |j, _| {
        let sd = x.column(j).variance().sqrt();
        if sd > 1e-12 {
            1.0 / (sd * norm)
        } else {
            1.0
        }
    });
    for j in 0..d {
        let (m, s) = (shift[j], scale[j]);
        x.column_mut(j).apply(|v| *v = (*v - m) * s);
    }
    let labels: Vec<usize> = train.labels.iter().map(|l| l.0).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let w0 = DMatrix::from_fn(n_classes, d, |_, _| rng.gen_range(-0.01..0.01));
    // Every gradient of W is a combination of the rows of X, so the iterates
    // stay in W0 + A·X and descent runs on the n×n Gram matrix instead.
    let gram = &x * x.transpose();
    let base_logits = &x * w0.transpose();
    let mut a = DMatrix::<f64>::zeros(n_classes, n);
    let mut b = DVector::zeros(n_classes);
    let mut history = Vec::with_capacity(opts.epochs + 1);
    for epoch in 0..=opts.epochs {
        let logits = &base_logits + &gram * a.transpose();
        let (loss, resid) = cross_entropy_residual(&logits, &b, &labels);
        history.push(loss);
        if epoch == opts.epochs {
            break;
        }
        a -= resid.transpose() * (opts.learning_rate / n as f64);
        b -= resid.row_sum().transpose() * (opts.learning_rate / n as f64);
    }
    let w = w0 + &a * &x;
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Training("weights diverged; lower the learning rate".into()));
    }
    let clf = Classifier {
        weights: w,
        bias: b,
        feature_shift: shift,
        feature_scale: scale,
        class_names: class_names.to_vec(),
        input_shape: shape,
    };
    Ok((clf, history))
}

pub fn train_classifier(train: &LabeledDataset, class_names: &[String], opts: &TrainOptions) -> Result<Classifier> {
    train_classifier_with_history(train, class_names, opts).map(|(c, _)| c)
}

fn nll_at_temperature(logits: &[Vec<f64>], labels: &[usize], t: f64) -> f64 {
    logits
        .iter()
        .zip(labels)
        .map(|(l, &y)| {
            let scaled: Vec<f64> = l.iter().map(|v| v / t).collect();
            logsumexp(&scaled) - scaled[y]
        })
        .sum::<f64>()
        / logits.len() as f64
}

/// Single temperature minimizing holdout negative log-likelihood, found by
/// golden-section search over `log T ∈ [log 0.01, log 100]`.
pub fn fit_temperature(classifier: &Classifier, holdout: &LabeledDataset) -> Result<f64> {
    if holdout.is_empty() {
        return Err(domain("temperature fit needs a non-empty holdout set"));
    }
    let logits = holdout
        .images
        .iter()
        .map(|im| classifier.logits(im))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = holdout.labels.iter().map(|l| l.0).collect();
    let f = |log_t: f64| nll_at_temperature(&logits, &labels, log_t.exp());
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.01f64.ln(), 100f64.ln());
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-8 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    Ok(((a + b) / 2.0).exp())
}
