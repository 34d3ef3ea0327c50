//! Linear autoencoder: empirical mean plus a truncated orthonormal basis.
//! Provides full-image reconstruction loss and masked inpainting loss.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{domain, Error, Result};
use crate::image::{Image, PixelMask};
use crate::io::{read_f64s, read_u64, write_f64s, write_u64};
use crate::perception::LabeledDataset;

const MAGIC: &[u8; 8] = b"PARCEAE0";
const INPAINT_RIDGE: f64 = 1e-6;

/// Mean squared error per pixel-channel; always finite and nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ReconLoss(pub f64);

impl ReconLoss {
    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearAutoencoder {
    pub mean: DVector<f64>,
    /// `d × r`, orthonormal columns.
    pub basis: DMatrix<f64>,
    /// `(width, height, channels)`.
    pub input_shape: (usize, usize, usize),
}

/// Variance bookkeeping from a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// Eigenvalues of the sample covariance, descending.
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
}

impl SpectrumReport {
    /// Fraction of total variance captured by the retained components;
    /// 1 for zero-variance data.
    pub fn retained_fraction(&self) -> f64 {
        let total: f64 = self.eigenvalues.iter().sum();
        if total <= 0.0 {
            return 1.0;
        }
        self.eigenvalues[..self.rank.min(self.eigenvalues.len())].iter().sum::<f64>() / total
    }
}

/// Fits mean and top-`rank` principal directions of the training images.
/// The fit is deterministic; `seed` is accepted for interface symmetry and unused.
pub fn fit_autoencoder(train: &LabeledDataset, rank: usize, seed: u64) -> Result<LinearAutoencoder> {
    fit_autoencoder_with_report(&train.images, rank, seed).map(|(ae, _)| ae)
}

pub fn fit_autoencoder_with_report(images: &[Image], rank: usize, _seed: u64) -> Result<(LinearAutoencoder, SpectrumReport)> {
    let first = images.first().ok_or_else(|| domain("autoencoder fit needs at least one image"))?;
    if images.iter().any(|im| !im.same_shape(first)) {
        return Err(domain("training images differ in shape"));
    }
    let n = images.len();
    let d = first.feature_len();
    if rank == 0 || rank > d.min(n) {
        return Err(domain(format!("rank {rank} outside [1, min(d={d}, n={n})]")));
    }
    let mean = DVector::from_fn(d, |j, _| images.iter().map(|im| im.as_slice()[j]).sum::<f64>() / n as f64);
    let x = DMatrix::from_fn(n, d, |i, j| images[i].as_slice()[j] - mean[j]);
    let denom = (n.max(2) - 1) as f64;

    // Right singular vectors of the centered data, via whichever Gram matrix is smaller.
    let (mut eig, mut dirs): (Vec<f64>, Vec<DVector<f64>>) = (Vec::new(), Vec::new());
    if d <= n {
        let cov = x.transpose() * &x;
        let se = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
        for &k in &order {
            eig.push(se.eigenvalues[k].max(0.0) / denom);
            dirs.push(se.eigenvectors.column(k).into_owned());
        }
    } else {
        let gram = &x * x.transpose();
        let se = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
        let scale = se.eigenvalues.iter().cloned().fold(0.0, f64::max).max(1e-300);
        for (pos, &k) in order.iter().enumerate() {
            let lam = se.eigenvalues[k].max(0.0);
            eig.push(lam / denom);
            if pos < rank && lam > 1e-12 * scale {
                dirs.push(x.tr_mul(&se.eigenvectors.column(k)) / lam.sqrt());
            }
        }
    }
    let keep: Vec<DVector<f64>> = dirs
        .into_iter()
        .zip(&eig)
        .take(rank)
        .filter(|(_, &l)| l > 1e-14 * eig[0].max(1e-300))
        .map(|(v, _)| v)
        .collect();
    let basis = orthonormal_completion(keep, d, rank);
    let report = SpectrumReport { eigenvalues: eig, rank };
    Ok((
        LinearAutoencoder {
            mean,
            basis,
            input_shape: (first.width(), first.height(), Image::CHANNELS),
        },
        report,
    ))
}

/// Gram-Schmidt over `seed` vectors then standard basis vectors until `rank`
/// orthonormal columns exist; each column's largest-magnitude entry is positive.
fn orthonormal_completion(seed: Vec<DVector<f64>>, d: usize, rank: usize) -> DMatrix<f64> {
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(rank);
    let candidates = seed.into_iter().chain((0..d).map(|i| DVector::from_fn(d, |j, _| if i == j { 1.0 } else { 0.0 })));
    for mut v in candidates {
        if cols.len() == rank {
            break;
        }
        // two passes keep orthogonality at machine precision
        for _ in 0..2 {
            for c in &cols {
                let p = c.dot(&v);
                v.axpy(-p, c, 1.0);
            }
        }
        let norm = v.norm();
        if norm < 1e-8 {
            continue;
        }
        v /= norm;
        let (imax, _) = v.iter().enumerate().fold((0, 0.0f64), |(bi, bv), (i, x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) });
        if v[imax] < 0.0 {
            v = -v;
        }
        cols.push(v);
    }
    DMatrix::from_columns(&cols)
}

impl LinearAutoencoder {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn feature_len(&self) -> usize {
        self.mean.len()
    }

    fn check_shape(&self, image: &Image) -> Result<()> {
        if (image.width(), image.height(), Image::CHANNELS) != self.input_shape {
            return Err(domain(format!(
                "image is {}x{}, autoencoder expects {}x{}",
                image.width(),
                image.height(),
                self.input_shape.0,
                self.input_shape.1
            )));
        }
        Ok(())
    }

    fn centered(&self, image: &Image) -> DVector<f64> {
        DVector::from_column_slice(image.as_slice()) - &self.mean
    }

    /// Projection onto the affine span; the loss is computed before clamping.
    pub fn reconstruct(&self, image: &Image) -> Result<(Image, ReconLoss)> {
        self.check_shape(image)?;
        let c = self.centered(image);
        let code = self.basis.tr_mul(&c);
        let proj = &self.basis * code;
        let loss = (&c - &proj).norm_squared() / c.len() as f64;
        let out = proj + &self.mean;
        let img = Image::from_raw(image.width(), image.height(), out.iter().copied().collect())?;
        Ok((img, ReconLoss(loss)))
    }

    pub fn reconstruction_loss(&self, image: &Image) -> Result<ReconLoss> {
        self.check_shape(image)?;
        let c = self.centered(image);
        let code = self.basis.tr_mul(&c);
        // ‖c‖² − ‖Bᵀc‖² can cancel badly; use the explicit residual
        let loss = (&c - &self.basis * code).norm_squared() / c.len() as f64;
        Ok(ReconLoss(loss))
    }

    /// Fits the latent code to visible pixel-channels only (ridge-regularized)
    /// and reports the mean squared error of the decode over missing ones.
    pub fn inpaint(&self, image: &Image, mask: &PixelMask) -> Result<(Image, ReconLoss)> {
        self.inpaint_with_ridge(image, mask, INPAINT_RIDGE)
    }

    /// `inpaint` with an explicit ridge on the code's normal equations.
    pub fn inpaint_with_ridge(&self, image: &Image, mask: &PixelMask, ridge: f64) -> Result<(Image, ReconLoss)> {
        if !(ridge >= 0.0) {
            return Err(domain("inpainting ridge must be nonnegative"));
        }
        self.check_shape(image)?;
        if !mask.matches(image) {
            return Err(domain("mask dimensions do not match image"));
        }
        let n_missing = mask.count_missing();
        if n_missing == 0 || n_missing == mask.bits().len() {
            return Err(domain("inpainting mask needs at least one visible and one missing pixel"));
        }
        let ch = Image::CHANNELS;
        let r = self.rank();
        let c = self.centered(image);
        let missing_rows: Vec<usize> = mask
            .bits()
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .flat_map(|(p, _)| (0..ch).map(move |k| p * ch + k))
            .collect();
        let bm = self.basis.select_rows(missing_rows.iter());
        let cm = DVector::from_iterator(missing_rows.len(), missing_rows.iter().map(|&i| c[i]));
        // Bᵀ_V B_V = I − Bᵀ_M B_M when the missing set is the smaller side
        let (gram, rhs) = if missing_rows.len() * 2 <= c.len() {
            let g = DMatrix::identity(r, r) - bm.tr_mul(&bm);
            let rhs = self.basis.tr_mul(&c) - bm.tr_mul(&cm);
            (g, rhs)
        } else {
            let visible_rows: Vec<usize> = (0..c.len()).filter(|i| !mask.get(i / ch)).collect();
            let bv = self.basis.select_rows(visible_rows.iter());
            let cv = DVector::from_iterator(visible_rows.len(), visible_rows.iter().map(|&i| c[i]));
            (bv.tr_mul(&bv), bv.tr_mul(&cv))
        };
        let a = gram + DMatrix::identity(r, r) * ridge;
        let code = a
            .cholesky()
            .ok_or_else(|| Error::Numerical("inpainting system is not positive definite".into()))?
            .solve(&rhs);
        let decoded_m = &bm * &code;
        let loss = (&decoded_m - &cm).norm_squared() / missing_rows.len() as f64;
        let mut out: Vec<f64> = image.as_slice().to_vec();
        for (k, &i) in missing_rows.iter().enumerate() {
            out[i] = decoded_m[k] + self.mean[i];
        }
        Ok((Image::from_raw(image.width(), image.height(), out)?, ReconLoss(loss)))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        w.write_all(MAGIC)?;
        let (d, r) = self.basis.shape();
        for v in [d, r, self.input_shape.0, self.input_shape.1, self.input_shape.2] {
            write_u64(&mut w, v as u64)?;
        }
        write_f64s(&mut w, self.mean.as_slice())?;
        // row-major d × r
        write_f64s(&mut w, self.basis.transpose().as_slice())?;
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
            return Err(bad("bad magic, expected PARCEAE0"));
        }
        let d = read_u64(&mut r)? as usize;
        let rank = read_u64(&mut r)? as usize;
        let shape = (read_u64(&mut r)? as usize, read_u64(&mut r)? as usize, read_u64(&mut r)? as usize);
        if shape.0 * shape.1 * shape.2 != d || rank == 0 || rank > d {
            return Err(bad("inconsistent header dimensions"));
        }
        let mean = DVector::from_vec(read_f64s(&mut r, d)?);
        let basis = DMatrix::from_row_slice(d, rank, &read_f64s(&mut r, d * rank)?);
        Ok(Self {
            mean,
            basis,
            input_shape: shape,
        })
    }
}
