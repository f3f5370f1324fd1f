//! Color classification and gap-tolerant blob segmentation.
//!
//! Pixels are classified directly in RGB by per-channel range containment.
//! A class mask is then split into objects: two set pixels belong to the same
//! object when a chain of set pixels links them in which consecutive pixels
//! differ by at most `gap_px` in x and at most `gap_px` in y. Blobs below the
//! minimum area are dropped after grouping.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::frame::Frame;
use crate::geometry::{Point, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Platform,
    Goal,
    Obstacle,
    Auxiliary,
}

/// Inclusive per-channel RGB range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RgbRange {
    pub min: [u8; 3],
    pub max: [u8; 3],
}

impl RgbRange {
    pub const fn new(min: [u8; 3], max: [u8; 3]) -> Self {
        Self { min, max }
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|c| self.min[c] <= self.max[c])
    }

    #[inline]
    pub fn contains(&self, px: [u8; 3]) -> bool {
        px[0] >= self.min[0]
            && px[0] <= self.max[0]
            && px[1] >= self.min[1]
            && px[1] <= self.max[1]
            && px[2] >= self.min[2]
            && px[2] <= self.max[2]
    }

    pub fn overlaps(&self, o: &RgbRange) -> bool {
        (0..3).all(|c| self.min[c] <= o.max[c] && o.min[c] <= self.max[c])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorClass {
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub platform_id: Option<u32>,
    pub range: RgbRange,
}

impl ColorClass {
    pub fn new(role: Role, range: RgbRange) -> Self {
        Self { role, platform_id: None, range }
    }

    pub fn platform(id: u32, range: RgbRange) -> Self {
        Self { role: Role::Platform, platform_id: Some(id), range }
    }

    pub fn object_class(&self) -> ObjectClass {
        ObjectClass { role: self.role, platform_id: self.platform_id }
    }
}

/// Checks a class list: ranges well formed, platform classes carry a unique
/// id, and no two ranges of the same role overlap.
pub fn validate_classes(classes: &[ColorClass]) -> Result<(), Error> {
    if classes.is_empty() {
        return Err(Error::Config("no color classes".into()));
    }
    if classes.len() > u8::MAX as usize - 1 {
        return Err(Error::Config(format!("too many color classes ({})", classes.len())));
    }
    for (i, c) in classes.iter().enumerate() {
        if !c.range.is_valid() {
            return Err(Error::Config(format!("class {i} has min > max")));
        }
        match (c.role, c.platform_id) {
            (Role::Platform, None) => {
                return Err(Error::Config(format!("platform class {i} has no platform id")))
            }
            (Role::Platform, Some(_)) | (_, None) => {}
            (_, Some(_)) => {
                return Err(Error::Config(format!("class {i} is not a platform but has a platform id")))
            }
        }
        for (j, o) in classes.iter().enumerate().skip(i + 1) {
            if c.role != o.role {
                continue;
            }
            if c.role == Role::Platform && c.platform_id == o.platform_id {
                return Err(Error::Config(format!(
                    "platform {} has more than one range",
                    c.platform_id.unwrap_or_default()
                )));
            }
            if c.range.overlaps(&o.range) {
                return Err(Error::Config(format!("classes {i} and {j} overlap within one role")));
            }
        }
    }
    Ok(())
}

/// Role plus platform id, the identity of a segmented object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectClass {
    pub role: Role,
    pub platform_id: Option<u32>,
}

/// Inclusive integer pixel bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[i32; 4]", into = "[i32; 4]")]
pub struct BBox {
    pub x_min: i32,
    pub y_min: i32,
    pub x_max: i32,
    pub y_max: i32,
}

impl From<[i32; 4]> for BBox {
    fn from(v: [i32; 4]) -> Self {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [i32; 4] {
    fn from(b: BBox) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

impl BBox {
    pub const fn new(x_min: i32, y_min: i32, x_max: i32, y_max: i32) -> Self {
        Self { x_min, y_min, x_max, y_max }
    }

    pub fn to_rect(self) -> Rect {
        Rect::new(self.x_min as f64, self.y_min as f64, self.x_max as f64, self.y_max as f64)
    }

    pub fn union(self, o: BBox) -> BBox {
        BBox::new(
            self.x_min.min(o.x_min),
            self.y_min.min(o.y_min),
            self.x_max.max(o.x_max),
            self.y_max.max(o.y_max),
        )
    }

    /// Larger of the horizontal and vertical separation, 0 when the boxes
    /// overlap on both axes.
    pub fn axis_gap(self, o: BBox) -> i64 {
        let h = (o.x_min as i64 - self.x_max as i64).max(self.x_min as i64 - o.x_max as i64).max(0);
        let v = (o.y_min as i64 - self.y_max as i64).max(self.y_min as i64 - o.y_max as i64).max(0);
        h.max(v)
    }
}

/// One segmented object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    #[serde(rename = "class")]
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub platform_id: Option<u32>,
    pub pixel_count: u64,
    pub centroid: Point,
    pub bbox: BBox,
    pub area_mm2: f64,
}

impl SceneObject {
    pub fn class(&self) -> ObjectClass {
        ObjectClass { role: self.role, platform_id: self.platform_id }
    }

    fn sort_key(&self) -> (BBox, ObjectClass) {
        (self.bbox, self.class())
    }
}

fn cmp_objects(a: &SceneObject, b: &SceneObject) -> Ordering {
    a.sort_key()
        .cmp(&b.sort_key())
        .then(a.pixel_count.cmp(&b.pixel_count))
        .then(a.centroid.x.total_cmp(&b.centroid.x))
        .then(a.centroid.y.total_cmp(&b.centroid.y))
}

/// Binary pixel mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, bits: vec![false; width as usize * height as usize] }
    }

    pub fn from_points(width: u32, height: u32, pts: &[(u32, u32)]) -> Self {
        let mut m = Self::new(width, height);
        for &(x, y) in pts {
            m.set(x, y);
        }
        m
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn set(&mut self, x: u32, y: u32) {
        let i = y as usize * self.width as usize + x as usize;
        self.bits[i] = true;
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Set pixels in row-major order.
    pub fn points(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| ((i % w) as u32, (i / w) as u32))
    }
}

/// Per-pixel class labels: 0 is background, `k + 1` is `classes[k]`.
#[derive(Debug, Clone)]
pub struct ClassMasks {
    width: u32,
    height: u32,
    labels: Vec<u8>,
    classes: Vec<ColorClass>,
}

impl ClassMasks {
    pub fn classes(&self) -> &[ColorClass] {
        &self.classes
    }

    pub fn label(&self, x: u32, y: u32) -> Option<usize> {
        match self.labels[y as usize * self.width as usize + x as usize] {
            0 => None,
            l => Some(l as usize - 1),
        }
    }

    pub fn mask(&self, class_idx: usize) -> Mask {
        let want = class_idx as u8 + 1;
        Mask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|l| *l == want).collect(),
        }
    }

    /// Total number of classified (non-background) pixels.
    pub fn classified(&self) -> usize {
        self.labels.iter().filter(|l| **l != 0).count()
    }
}

/// Labels every pixel with the first class whose range contains it.
pub fn classify_pixels(frame: &Frame, classes: &[ColorClass]) -> Result<ClassMasks, Error> {
    validate_classes(classes)?;
    let ranges: Vec<RgbRange> = classes.iter().map(|c| c.range).collect();
    let labels = frame
        .pixels()
        .chunks_exact(3)
        .map(|px| {
            let px = [px[0], px[1], px[2]];
            ranges.iter().position(|r| r.contains(px)).map_or(0, |k| k as u8 + 1)
        })
        .collect();
    Ok(ClassMasks { width: frame.width(), height: frame.height(), labels, classes: classes.to_vec() })
}

/// Mean of the pixel coordinates.
pub fn centroid(pixels: &[(u32, u32)]) -> Result<Point, Error> {
    if pixels.is_empty() {
        return Err(Error::EmptyPixelSet);
    }
    let (sx, sy) = pixels.iter().fold((0u64, 0u64), |(sx, sy), &(x, y)| (sx + x as u64, sy + y as u64));
    let n = pixels.len() as f64;
    Ok(Point::new(sx as f64 / n, sy as f64 / n))
}

/// Smallest pixel count whose ground area reaches `min_area_cm2`.
pub fn min_area_pixels(min_area_cm2: f64, mm_per_px: f64) -> u64 {
    let px = min_area_cm2 * 100.0 / (mm_per_px * mm_per_px);
    let nearest = libm::round(px);
    // absorb representation error so an exact multiple does not round up
    let n = if libm::fabs(px - nearest) <= 1e-9 * nearest.max(1.0) { nearest } else { libm::ceil(px) };
    (n as u64).max(1)
}

/// Pixel statistics of one segmented blob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    pub pixel_count: u64,
    pub centroid: Point,
    pub bbox: BBox,
}

impl Blob {
    pub fn into_object(self, class: ObjectClass, mm_per_px: f64) -> SceneObject {
        SceneObject {
            role: class.role,
            platform_id: class.platform_id,
            pixel_count: self.pixel_count,
            centroid: self.centroid,
            bbox: self.bbox,
            area_mm2: self.pixel_count as f64 * mm_per_px * mm_per_px,
        }
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect() }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        true
    }
}

#[derive(Clone, Copy)]
struct Acc {
    count: u64,
    sx: u64,
    sy: u64,
    bbox: BBox,
}

impl Acc {
    fn new(x: u32, y: u32) -> Self {
        Self { count: 0, sx: 0, sy: 0, bbox: BBox::new(x as i32, y as i32, x as i32, y as i32) }
    }

    fn push(&mut self, x: u32, y: u32) {
        self.count += 1;
        self.sx += x as u64;
        self.sy += y as u64;
        self.bbox = self.bbox.union(BBox::new(x as i32, y as i32, x as i32, y as i32));
    }

    fn finish(self) -> Blob {
        let n = self.count as f64;
        Blob { pixel_count: self.count, centroid: Point::new(self.sx as f64 / n, self.sy as f64 / n), bbox: self.bbox }
    }
}

/// Groups the set pixels of `mask` into blobs.
///
/// Connectivity with tolerance `gap_px` is computed on a dilated grid: each
/// pixel covers a `gap_px`-wide box, and two boxes overlap or touch
/// (8-neighbourhood) exactly when their pixels are within `gap_px` on both
/// axes. Labelling the dilated grid therefore yields the chain relation in
/// linear time.
pub fn segment_objects(mask: &Mask, gap_px: u32, min_area_px: u64) -> Vec<Blob> {
    let min_area_px = min_area_px.max(1);
    let Some((x0, y0, x1, y1)) = mask_extent(mask) else {
        return Vec::new();
    };
    let mut blobs = if gap_px == 0 {
        mask.points().map(|(x, y)| {
            let mut a = Acc::new(x, y);
            a.push(x, y);
            a.finish()
        }).collect::<Vec<_>>()
    } else {
        label_dilated(mask, gap_px, (x0, y0, x1, y1))
    };
    blobs.retain(|b| b.pixel_count >= min_area_px);
    blobs.sort_by(|a, b| {
        a.bbox
            .cmp(&b.bbox)
            .then(a.pixel_count.cmp(&b.pixel_count))
            .then(a.centroid.x.total_cmp(&b.centroid.x))
            .then(a.centroid.y.total_cmp(&b.centroid.y))
    });
    blobs
}

fn mask_extent(mask: &Mask) -> Option<(u32, u32, u32, u32)> {
    let mut ext: Option<(u32, u32, u32, u32)> = None;
    for (x, y) in mask.points() {
        ext = Some(match ext {
            None => (x, y, x, y),
            Some((a, b, c, d)) => (a.min(x), b.min(y), c.max(x), d.max(y)),
        });
    }
    ext
}

fn label_dilated(mask: &Mask, gap_px: u32, extent: (u32, u32, u32, u32)) -> Vec<Blob> {
    let (x0, y0, x1, y1) = extent;
    // A pixel at local (x, y) covers grid cells [x, x + k] x [y, y + k].
    let k = gap_px as usize - 1;
    let w = (x1 - x0 + 1) as usize;
    let h = (y1 - y0 + 1) as usize;
    let gw = w + k;
    let gh = h + k;

    // Horizontal dilation: row[y][cx] = any set pixel x in [cx - k, cx].
    let mut rows = vec![false; gw * h];
    for y in 0..h {
        let mut last_set: Option<usize> = None;
        for cx in 0..gw {
            if cx < w && mask.get(x0 + cx as u32, y0 + y as u32) {
                last_set = Some(cx);
            }
            rows[y * gw + cx] = matches!(last_set, Some(s) if cx - s <= k);
        }
    }
    // Vertical dilation.
    let mut grid = vec![false; gw * gh];
    for cx in 0..gw {
        let mut last_set: Option<usize> = None;
        for cy in 0..gh {
            if cy < h && rows[cy * gw + cx] {
                last_set = Some(cy);
            }
            grid[cy * gw + cx] = matches!(last_set, Some(s) if cy - s <= k);
        }
    }

    let mut ds = DisjointSet::new(gw * gh);
    for cy in 0..gh {
        for cx in 0..gw {
            let i = cy * gw + cx;
            if !grid[i] {
                continue;
            }
            if cx > 0 && grid[i - 1] {
                ds.union(i as u32, (i - 1) as u32);
            }
            if cy > 0 {
                let up = i - gw;
                if grid[up] {
                    ds.union(i as u32, up as u32);
                }
                if cx > 0 && grid[up - 1] {
                    ds.union(i as u32, (up - 1) as u32);
                }
                if cx + 1 < gw && grid[up + 1] {
                    ds.union(i as u32, (up + 1) as u32);
                }
            }
        }
    }

    let mut accs: BTreeMap<u32, Acc> = BTreeMap::new();
    for (x, y) in mask.points() {
        let cell = (y - y0) as usize * gw + (x - x0) as usize;
        let root = ds.find(cell as u32);
        accs.entry(root).or_insert_with(|| Acc::new(x, y)).push(x, y);
    }
    accs.into_values().map(Acc::finish).collect()
}

/// Classifies the frame and segments every class into scene objects, sorted
/// by bounding box.
pub fn detect_objects(
    frame: &Frame,
    classes: &[ColorClass],
    gap_px: u32,
    min_area_px: u64,
) -> Result<Vec<SceneObject>, Error> {
    let masks = classify_pixels(frame, classes)?;
    let mut out = Vec::new();
    for (k, class) in classes.iter().enumerate() {
        let mask = masks.mask(k);
        out.extend(
            segment_objects(&mask, gap_px, min_area_px)
                .into_iter()
                .map(|b| b.into_object(class.object_class(), frame.mm_per_px())),
        );
    }
    out.sort_by(cmp_objects);
    Ok(out)
}

/// Merges obstacles whose boxes are closer than `min_corridor_px` on the
/// larger axis gap, repeating until no such pair remains.
pub fn merge_impassable(obstacles: &[SceneObject], min_corridor_px: f64) -> Vec<SceneObject> {
    let mut current: Vec<SceneObject> = obstacles.to_vec();
    current.sort_by(cmp_objects);
    loop {
        let n = current.len();
        let mut ds = DisjointSet::new(n);
        let mut merged_any = false;
        for i in 0..n {
            for j in i + 1..n {
                if (current[i].bbox.axis_gap(current[j].bbox) as f64) < min_corridor_px {
                    merged_any |= ds.union(i as u32, j as u32);
                }
            }
        }
        if !merged_any {
            return current;
        }
        let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            groups.entry(ds.find(i as u32)).or_default().push(i);
        }
        let mut next: Vec<SceneObject> = groups.into_values().map(|g| combine(&current, &g)).collect();
        next.sort_by(cmp_objects);
        current = next;
    }
}

fn combine(objs: &[SceneObject], members: &[usize]) -> SceneObject {
    let first = &objs[members[0]];
    if members.len() == 1 {
        return first.clone();
    }
    let mut count = 0u64;
    let (mut wx, mut wy, mut area) = (0.0, 0.0, 0.0);
    let mut bbox = first.bbox;
    for &m in members {
        let o = &objs[m];
        count += o.pixel_count;
        wx += o.centroid.x * o.pixel_count as f64;
        wy += o.centroid.y * o.pixel_count as f64;
        area += o.area_mm2;
        bbox = bbox.union(o.bbox);
    }
    SceneObject {
        role: Role::Obstacle,
        platform_id: None,
        pixel_count: count,
        centroid: Point::new(wx / count as f64, wy / count as f64),
        bbox,
        area_mm2: area,
    }
}
