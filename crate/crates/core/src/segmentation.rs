//! Felzenszwalb–Huttenlocher graph segmentation.

use std::path::Path;

use crate::error::{domain, Result};
use crate::image::{save_label_pgm, Image, PixelMask};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhParams {
    /// Scale of observation, on the 0–255 color scale.
    pub k: f64,
    pub min_size: usize,
    pub smoothing_sigma: f64,
}

impl Default for FhParams {
    fn default() -> Self {
        Self {
            k: 100.0,
            min_size: 10,
            smoothing_sigma: 0.8,
        }
    }
}

impl FhParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) || self.min_size == 0 || !(self.smoothing_sigma >= 0.0) {
            return Err(domain("segmentation needs k > 0, min_size >= 1, sigma >= 0"));
        }
        Ok(())
    }
}

/// Per-pixel segment ids, contiguous in `[0, n_segments)` and numbered in
/// first-pixel scan order; every segment is 4-connected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentMap {
    width: usize,
    height: usize,
    ids: Vec<usize>,
    n_segments: usize,
}

impl SegmentMap {
    /// Relabels arbitrary per-pixel labels by first appearance in scan order.
    pub fn from_labels(width: usize, height: usize, labels: &[usize]) -> Result<Self> {
        if labels.len() != width * height {
            return Err(domain("label count does not match dimensions"));
        }
        let mut remap = std::collections::HashMap::new();
        let ids = labels
            .iter()
            .map(|l| {
                let next = remap.len();
                *remap.entry(*l).or_insert(next)
            })
            .collect();
        Ok(Self {
            width,
            height,
            ids,
            n_segments: remap.len(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_segments(&self) -> usize {
        self.n_segments
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn id(&self, index: usize) -> usize {
        self.ids[index]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_segments];
        for &i in &self.ids {
            s[i] += 1;
        }
        s
    }

    /// Mask with the pixels of `segment` marked missing.
    pub fn mask(&self, segment: usize) -> PixelMask {
        PixelMask::new(self.width, self.height, self.ids.iter().map(|&i| i == segment).collect())
            .expect("map dimensions are consistent")
    }

    pub fn matches(&self, image: &Image) -> bool {
        self.width == image.width() && self.height == image.height()
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        save_label_pgm(self.width, self.height, &self.ids, path)
    }
}

struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    /// Union by size; returns the surviving root.
    fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return a;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        a
    }
}

/// Weighted pixel-graph edge; `a < b` in scan order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Edge {
    pub w: f64,
    pub a: usize,
    pub b: usize,
}

/// Separable Gaussian blur with clamped borders, 0–255 scale output.
pub(crate) fn smoothed_channels(image: &Image, sigma: f64) -> Vec<[f64; 3]> {
    let (w, h) = (image.width(), image.height());
    let px: Vec<[f64; 3]> = (0..w * h).map(|i| image.pixel(i).map(|c| c * 255.0)).collect();
    if sigma <= 0.0 {
        return px;
    }
    let r = (4.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|v| *v /= s);
    let blur = |src: &[[f64; 3]], horizontal: bool| -> Vec<[f64; 3]> {
        let mut out = vec![[0.0; 3]; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = [0.0; 3];
                for (t, kv) in kernel.iter().enumerate() {
                    let o = t as isize - r;
                    let (sx, sy) = if horizontal {
                        ((x as isize + o).clamp(0, w as isize - 1) as usize, y)
                    } else {
                        (x, (y as isize + o).clamp(0, h as isize - 1) as usize)
                    };
                    let p = src[sy * w + sx];
                    for c in 0..3 {
                        acc[c] += kv * p[c];
                    }
                }
                out[y * w + x] = acc;
            }
        }
        out
    };
    blur(&blur(&px, true), false)
}

fn dist(p: [f64; 3], q: [f64; 3]) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
}

/// Edges to the right, down, down-right and down-left neighbors (8-connectivity)
/// or right and down only, sorted by `(weight, a, b)`.
pub(crate) fn sorted_edges(px: &[[f64; 3]], w: usize, h: usize, eight: bool) -> Vec<Edge> {
    let mut edges = Vec::with_capacity(w * h * if eight { 4 } else { 2 });
    for y in 0..h {
        for x in 0..w {
            let a = y * w + x;
            let mut push = |b: usize| edges.push(Edge { w: dist(px[a], px[b]), a: a.min(b), b: a.max(b) });
            if x + 1 < w {
                push(a + 1);
            }
            if y + 1 < h {
                push(a + w);
                if eight {
                    if x + 1 < w {
                        push(a + w + 1);
                    }
                    if x > 0 {
                        push(a + w - 1);
                    }
                }
            }
        }
    }
    edges.sort_by(|e, f| e.w.total_cmp(&f.w).then(e.a.cmp(&f.a)).then(e.b.cmp(&f.b)));
    edges
}

/// Segments an image: smoothing, greedy merging under the adaptive
/// predicate, splitting into 4-connected pieces, absorbing undersized
/// pieces along the cheapest 4-neighbor edges, scan-order relabeling.
pub fn segment(image: &Image, params: &FhParams) -> Result<SegmentMap> {
    params.validate()?;
    let (w, h) = (image.width(), image.height());
    if w * h == 0 {
        return Err(domain("cannot segment an empty image"));
    }
    let n = w * h;
    let px = smoothed_channels(image, params.smoothing_sigma);

    let mut ds = DisjointSets::new(n);
    let mut threshold = vec![params.k; n];
    for e in sorted_edges(&px, w, h, true) {
        let (ra, rb) = (ds.find(e.a), ds.find(e.b));
        if ra != rb && e.w <= threshold[ra].min(threshold[rb]) {
            let root = ds.union(ra, rb);
            // edges arrive in nondecreasing order, so e.w is the new internal difference
            threshold[root] = e.w + params.k / ds.size[root] as f64;
        }
    }

    // split diagonal-only connections
    let edges4 = sorted_edges(&px, w, h, false);
    let fh_label: Vec<usize> = (0..n).map(|i| ds.find(i)).collect();
    let mut ds4 = DisjointSets::new(n);
    for e in &edges4 {
        if fh_label[e.a] == fh_label[e.b] {
            ds4.union(e.a, e.b);
        }
    }

    for e in &edges4 {
        let (ra, rb) = (ds4.find(e.a), ds4.find(e.b));
        if ra != rb && (ds4.size[ra] < params.min_size || ds4.size[rb] < params.min_size) {
            ds4.union(ra, rb);
        }
    }
    let labels: Vec<usize> = (0..n).map(|i| ds4.find(i)).collect();
    SegmentMap::from_labels(w, h, &labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Literal reference: components are label arrays rewritten on every
    /// merge, sizes are recounted, connectivity is found by flood fill.
    fn reference(image: &Image, params: &FhParams) -> Vec<usize> {
        let (w, h) = (image.width(), image.height());
        let n = w * h;
        let px = smoothed_channels(image, params.smoothing_sigma);
        let mut lab: Vec<usize> = (0..n).collect();
        let mut internal = vec![0.0; n];
        let size_of = |lab: &[usize], l: usize| lab.iter().filter(|&&x| x == l).count();
        for e in sorted_edges(&px, w, h, true) {
            let (la, lb) = (lab[e.a], lab[e.b]);
            if la == lb {
                continue;
            }
            let ta = internal[la] + params.k / size_of(&lab, la) as f64;
            let tb = internal[lb] + params.k / size_of(&lab, lb) as f64;
            if e.w <= ta.min(tb) {
                for l in lab.iter_mut() {
                    if *l == lb {
                        *l = la;
                    }
                }
                internal[la] = e.w;
            }
        }
        // 4-connected flood fill within each label
        let mut comp = vec![usize::MAX; n];
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            comp[s] = s;
            while let Some(p) = stack.pop() {
                let (x, y) = (p % w, p / w);
                let mut nb = Vec::new();
                if x > 0 {
                    nb.push(p - 1);
                }
                if x + 1 < w {
                    nb.push(p + 1);
                }
                if y > 0 {
                    nb.push(p - w);
                }
                if y + 1 < h {
                    nb.push(p + w);
                }
                for q in nb {
                    if comp[q] == usize::MAX && lab[q] == lab[p] {
                        comp[q] = s;
                        stack.push(q);
                    }
                }
            }
        }
        for e in sorted_edges(&px, w, h, false) {
            let (ca, cb) = (comp[e.a], comp[e.b]);
            if ca != cb && (size_of(&comp, ca) < params.min_size || size_of(&comp, cb) < params.min_size) {
                for c in comp.iter_mut() {
                    if *c == cb {
                        *c = ca;
                    }
                }
            }
        }
        SegmentMap::from_labels(w, h, &comp).unwrap().ids
    }

    /// Pixels take texture A or B by mask bit, each with a fixed per-pixel
    /// jitter so intra-texture edges have distinct nonzero weights.
    fn two_texture(w: usize, h: usize, bits: u64) -> Image {
        let mut data = Vec::with_capacity(w * h * 3);
        for p in 0..w * h {
            let jitter = ((p * 7 + 3) % 5) as f64 * 0.01;
            let base = if bits >> p & 1 == 1 { [0.70, 0.35, 0.30] } else { [0.30, 0.40, 0.55] };
            data.extend(base.iter().map(|b| b + jitter));
        }
        Image::from_raw(w, h, data).unwrap()
    }

    fn is_four_connected(map: &SegmentMap) -> bool {
        let (w, h) = (map.width(), map.height());
        let mut seen = vec![false; w * h];
        let mut starts = vec![0usize; map.n_segments()];
        let mut found = vec![false; map.n_segments()];
        for (p, &id) in map.ids().iter().enumerate() {
            if !found[id] {
                found[id] = true;
                starts[id] = p;
            }
        }
        for &s in &starts {
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(p) = stack.pop() {
                let (x, y) = (p % w, p / w);
                for (ok, q) in [(x > 0, p.wrapping_sub(1)), (x + 1 < w, p + 1), (y > 0, p.wrapping_sub(w)), (y + 1 < h, p + w)] {
                    if ok && !seen[q] && map.id(q) == map.id(p) {
                        seen[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
        seen.iter().all(|s| *s)
    }

    #[test]
    fn constant_image_is_one_segment() {
        let map = segment(&Image::filled(16, 9, [0.3, 0.6, 0.1]), &FhParams::default()).unwrap();
        assert_eq!(map.n_segments(), 1);
    }

    #[test]
    fn two_solid_halves_split_on_the_color_edge() {
        let mut img = Image::filled(20, 10, [0.0, 0.0, 0.0]);
        for y in 0..10 {
            for x in 10..20 {
                img.set(x, y, [1.0, 1.0, 1.0]);
            }
        }
        let map = segment(&img, &FhParams { k: 50.0, min_size: 5, smoothing_sigma: 0.0 }).unwrap();
        assert_eq!(map.n_segments(), 2);
        for y in 0..10 {
            for x in 0..20 {
                assert_eq!(map.id(y * 20 + x), usize::from(x >= 10));
            }
        }
    }

    #[test]
    fn invalid_params_are_rejected() {
        let img = Image::filled(2, 2, [0.0; 3]);
        assert!(segment(&img, &FhParams { k: 0.0, ..Default::default() }).is_err());
        assert!(segment(&img, &FhParams { min_size: 0, ..Default::default() }).is_err());
        assert!(segment(&Image::filled(0, 0, [0.0; 3]), &FhParams::default()).is_err());
    }

    #[test]
    fn diagonal_only_touching_pixels_are_separate_segments() {
        // checkerboard merges under 8-connectivity but no two same-color pixels are 4-adjacent
        let img = Image::from_raw(2, 2, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let map = segment(&img, &FhParams { k: 1.0, min_size: 1, smoothing_sigma: 0.0 }).unwrap();
        assert_eq!(map.n_segments(), 4);
        assert!(is_four_connected(&map));
    }

    #[test]
    fn matches_reference_on_all_4x4_two_texture_images() {
        for (k, min_size) in [(40.0, 3), (150.0, 2)] {
            let params = FhParams { k, min_size, smoothing_sigma: 0.0 };
            for bits in 0..1u64 << 16 {
                let img = two_texture(4, 4, bits);
                let got = segment(&img, &params).unwrap();
                assert_eq!(got.ids(), reference(&img, &params).as_slice(), "mask {bits:#06x}");
                assert!(is_four_connected(&got));
            }
        }
    }

    #[test]
    fn matches_reference_on_sampled_5x5_images_with_smoothing() {
        let mut state = 0x1234_5678u64;
        for i in 0..4000 {
            state = crate::world::texture::mix(state);
            let bits = state & ((1 << 25) - 1);
            let sigma = if i % 2 == 0 { 0.0 } else { 0.8 };
            let params = FhParams { k: 60.0, min_size: 3, smoothing_sigma: sigma };
            let img = two_texture(5, 5, bits);
            let got = segment(&img, &params).unwrap();
            assert_eq!(got.ids(), reference(&img, &params).as_slice());
            assert!(got.sizes().iter().all(|&s| s >= 3));
        }
    }

    #[test]
    fn rendered_terrain_yields_moderate_segment_counts() {
        let pal = crate::world::TerrainPalette::default();
        let cam = crate::world::CameraModel::default();
        for s in 0..8u64 {
            let img = crate::world::generate_tile(&pal, crate::world::TerrainClass((s % 4) as usize), s, &cam).unwrap();
            let a = segment(&img, &FhParams::default()).unwrap();
            assert_eq!(a, segment(&img, &FhParams::default()).unwrap());
            assert!(is_four_connected(&a));
            assert!(a.sizes().iter().all(|&n| n >= 10));
            assert!((2..=40).contains(&a.n_segments()));
        }
    }
}
