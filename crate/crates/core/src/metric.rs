//! Weighted point sets and validated distance oracles.
//!
//! A [`MetricSpace`] answers distance queries over a *ground space* of point
//! ids; the dynamic input is a [`PointSet`] (id -> positive weight) over a
//! subset of those ids. All distances between distinct ground points lie in
//! `[1, delta]`. Matrix-backed spaces are validated exhaustively at load
//! (symmetry, zero diagonal, range, triangle inequality); coordinate-backed
//! spaces are rescaled at load so the sampled minimum pairwise distance is
//! at least 1, with `delta` supplied by the caller and checked on sampled
//! pairs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::{BuildHasherDefault, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multiplicative hasher for point-id keys; distance lookups sit on every
/// hot path, so the default SipHash is measurable overhead.
#[derive(Default, Clone)]
pub struct IdHasher(u64);

impl Hasher for IdHasher {
    #[inline]
    fn finish(&self) -> u64 {
        self.0
    }

    #[inline]
    fn write_u64(&mut self, x: u64) {
        let mut h = x.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        h ^= h >> 32;
        self.0 = h;
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = self.0.rotate_left(8) ^ u64::from(b);
        }
    }
}

type IdMap<V> = HashMap<u64, V, BuildHasherDefault<IdHasher>>;

/// Opaque handle for a ground-space point. Ids are never reused for a
/// different location within one run; a deleted id may reappear through
/// re-insertion of the same ground point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointId(pub u64);

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Reserved id for synthetic points (e.g. the contraction super-point);
/// never a valid ground id.
pub const SYNTHETIC_ID: PointId = PointId(u64::MAX);

/// A ground point together with a strictly positive weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedPoint {
    pub id: PointId,
    pub weight: f64,
}

impl WeightedPoint {
    pub fn new(id: PointId, weight: f64) -> Result<Self> {
        if !(weight > 0.0) {
            return Err(Error::NonpositiveWeight { id, weight });
        }
        Ok(Self { id, weight })
    }
}

/// Set of centers. Kept ordered so iteration (and therefore every
/// tie-break and floating-point summation order) is deterministic.
pub type CenterSet = BTreeSet<PointId>;

/// Distance oracle. Implementations must satisfy the metric axioms on the
/// ids they serve; callers only pass ids they know to exist.
pub trait Metric {
    fn dist(&self, a: PointId, b: PointId) -> f64;
}

#[derive(Debug, Clone)]
enum Backing {
    /// Explicit symmetric matrix over ids `0..n`.
    Matrix { n: usize, d: Vec<f64> },
    /// Per-id coordinates with a p-norm; `scale` is applied to every raw
    /// distance so the minimum pairwise distance is >= 1. Coordinates live
    /// in one dim-strided slab indexed through a cheap id hash.
    Coords {
        norm: f64,
        dim: usize,
        scale: f64,
        slab: Vec<f64>,
        slots: IdMap<u32>,
        ids: BTreeSet<PointId>,
    },
}

/// Validated distance oracle over ground point ids.
#[derive(Debug, Clone)]
pub struct MetricSpace {
    backing: Backing,
    delta: f64,
}

fn pnorm(a: &[f64], b: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        if a.len() == 2 {
            let dx = a[0] - b[0];
            let dy = a[1] - b[1];
            return (dx * dx + dy * dy).sqrt();
        }
        let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        return s.sqrt();
    }
    if p.is_infinite() {
        return a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
    }
    if p == 1.0 {
        return a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    }
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(p)).sum();
    s.powf(1.0 / p)
}

impl MetricSpace {
    /// Build from an explicit `n x n` matrix. Validates the zero diagonal,
    /// symmetry, the `[1, delta]` range on distinct pairs, and the triangle
    /// inequality on every triple. `delta` is the maximum observed distance
    /// (at least 1).
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMetric(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
        }
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = rows[i][j];
            }
        }
        let mut delta: f64 = 1.0;
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(Error::InvalidMetric(format!(
                    "d({i},{i}) = {} is nonzero",
                    d[i * n + i]
                )));
            }
            for j in (i + 1)..n {
                let dij = d[i * n + j];
                if dij != d[j * n + i] {
                    return Err(Error::InvalidMetric(format!(
                        "asymmetric entry at ({i},{j}): {dij} vs {}",
                        d[j * n + i]
                    )));
                }
                if !dij.is_finite() || dij < 1.0 {
                    // Duplicate locations (d = 0 between distinct ids) are
                    // rejected rather than guessed around.
                    return Err(Error::InvalidMetric(format!(
                        "d({i},{j}) = {dij} outside [1, delta]"
                    )));
                }
                delta = delta.max(dij);
            }
        }
        for a in 0..n {
            for b in 0..n {
                let dab = d[a * n + b];
                for c in 0..n {
                    if dab > d[a * n + c] + d[c * n + b] {
                        return Err(Error::InvalidMetric(format!(
                            "triangle violated on ({a},{b},{c}): {dab} > {} + {}",
                            d[a * n + c],
                            d[c * n + b]
                        )));
                    }
                }
            }
        }
        Ok(Self {
            backing: Backing::Matrix { n, d },
            delta,
        })
    }

    /// Parse the matrix file format: first line `n`, then `n` rows of
    /// whitespace-separated reals.
    pub fn from_matrix_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix file".into()))?
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("bad point count: {e}")))?;
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing matrix row {i}")))?;
            let row: std::result::Result<Vec<f64>, _> =
                line.split_whitespace().map(str::parse::<f64>).collect();
            rows.push(row.map_err(|e| Error::Parse(format!("row {i}: {e}")))?);
        }
        Self::from_matrix(rows)
    }

    /// Empty coordinate-backed space; points are registered as they appear.
    /// `delta` comes from configuration and bounds all pairwise distances.
    pub fn coords(norm: f64, dim: usize, delta: f64) -> Result<Self> {
        if !(norm >= 1.0) {
            return Err(Error::InvalidConfig(format!("p-norm {norm} < 1")));
        }
        if !(delta >= 1.0) {
            return Err(Error::InvalidConfig(format!("delta {delta} < 1")));
        }
        if dim == 0 {
            return Err(Error::InvalidConfig("zero-dimensional space".into()));
        }
        Ok(Self {
            backing: Backing::Coords {
                norm,
                dim,
                scale: 1.0,
                slab: Vec::new(),
                slots: IdMap::default(),
                ids: BTreeSet::new(),
            },
            delta,
        })
    }

    /// Build a coordinate-backed space from initial points, rescaling so the
    /// minimum pairwise distance over sampled pairs is at least 1. All pairs
    /// are sampled up to 2000 points; beyond that, 500k random-ish pairs.
    pub fn from_coords(
        initial: &[(PointId, Vec<f64>)],
        norm: f64,
        delta: f64,
    ) -> Result<Self> {
        let dim = initial.first().map(|(_, c)| c.len()).unwrap_or(1);
        let mut space = Self::coords(norm, dim, delta)?;
        for (id, c) in initial {
            space.register_point(*id, c.clone())?;
        }
        space.rescale_to_unit_min()?;
        Ok(space)
    }

    /// Parse the coordinate file format: one line per point,
    /// `id w x1 x2 ... xd`. Returns the space plus the listed weights.
    pub fn from_coords_text(text: &str, norm: f64, delta: f64) -> Result<(Self, PointSet)> {
        let mut pts = Vec::new();
        let mut weights = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 3 {
                return Err(Error::Parse(format!("line {}: expected `id w x1 ...`", ln + 1)));
            }
            let id = PointId(
                toks[0]
                    .parse()
                    .map_err(|e| Error::Parse(format!("line {}: id: {e}", ln + 1)))?,
            );
            let w: f64 = toks[1]
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: weight: {e}", ln + 1)))?;
            let coords: std::result::Result<Vec<f64>, _> =
                toks[2..].iter().map(|t| t.parse::<f64>()).collect();
            pts.push((id, coords.map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))?));
            weights.push((id, w));
        }
        let space = Self::from_coords(&pts, norm, delta)?;
        let mut set = PointSet::new();
        for (id, w) in weights {
            set.insert_new(id, w)?;
        }
        Ok((space, set))
    }

    fn rescale_to_unit_min(&mut self) -> Result<()> {
        let (ids, norm) = match &self.backing {
            Backing::Coords { ids, norm, .. } => (ids.iter().copied().collect::<Vec<_>>(), *norm),
            Backing::Matrix { .. } => return Ok(()),
        };
        let n = ids.len();
        if n < 2 {
            return Ok(());
        }
        let mut min_d = f64::INFINITY;
        let mut max_d: f64 = 0.0;
        let mut probe = |a: PointId, b: PointId, space: &Self| -> Result<()> {
            let d = space.raw_dist(a, b);
            if d == 0.0 {
                return Err(Error::InvalidMetric(format!(
                    "points {a} and {b} share a location"
                )));
            }
            min_d = min_d.min(d);
            max_d = max_d.max(d);
            Ok(())
        };
        if n <= 2000 {
            for i in 0..n {
                for j in (i + 1)..n {
                    probe(ids[i], ids[j], self)?;
                }
            }
        } else {
            // Deterministic stride-based pair sample; exact global minimum is
            // too expensive at this size.
            let mut step = 1usize;
            let budget = 500_000usize;
            while n * (n / step) / 2 > budget {
                step += 1;
            }
            for i in 0..n {
                let mut j = i + 1;
                while j < n {
                    probe(ids[i], ids[j], self)?;
                    j += step;
                }
            }
        }
        let scale = if min_d < 1.0 { 1.0 / min_d } else { 1.0 };
        if let Backing::Coords { scale: s, .. } = &mut self.backing {
            *s = scale;
        }
        let _ = norm;
        if max_d * scale > self.delta {
            return Err(Error::InvalidMetric(format!(
                "sampled distance {} exceeds configured delta {}",
                max_d * scale,
                self.delta
            )));
        }
        Ok(())
    }

    /// Register a ground point for a coordinate-backed space. Re-registering
    /// an id with identical coordinates is a no-op; a changed location is an
    /// error (ids are never reused for different ground points).
    pub fn register_point(&mut self, id: PointId, coords: Vec<f64>) -> Result<()> {
        if id == SYNTHETIC_ID {
            return Err(Error::InvalidArgument("id u64::MAX is reserved".into()));
        }
        match &mut self.backing {
            Backing::Matrix { .. } => Err(Error::InvalidArgument(
                "matrix-backed spaces have a fixed ground set".into(),
            )),
            Backing::Coords {
                dim,
                slab,
                slots,
                ids,
                ..
            } => {
                if coords.len() != *dim {
                    return Err(Error::InvalidArgument(format!(
                        "point {id} has {} coordinates, space is {dim}-dimensional",
                        coords.len()
                    )));
                }
                if let Some(&slot) = slots.get(&id.0) {
                    let start = slot as usize * *dim;
                    if slab[start..start + *dim] != coords[..] {
                        return Err(Error::InvalidUpdate(format!(
                            "id {id} re-registered at a different location"
                        )));
                    }
                    return Ok(());
                }
                let slot = (slab.len() / *dim) as u32;
                slab.extend_from_slice(&coords);
                slots.insert(id.0, slot);
                ids.insert(id);
                Ok(())
            }
        }
    }

    pub fn contains(&self, id: PointId) -> bool {
        match &self.backing {
            Backing::Matrix { n, .. } => (id.0 as usize) < *n,
            Backing::Coords { slots, .. } => slots.contains_key(&id.0),
        }
    }

    /// Aspect-ratio bound: all pairwise distances lie in `[1, delta]`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Every ground id, in increasing order (deleted input points remain
    /// part of the ground space).
    pub fn ground_ids(&self) -> Vec<PointId> {
        match &self.backing {
            Backing::Matrix { n, .. } => (0..*n as u64).map(PointId).collect(),
            Backing::Coords { ids, .. } => ids.iter().copied().collect(),
        }
    }

    pub fn ground_len(&self) -> usize {
        match &self.backing {
            Backing::Matrix { n, .. } => *n,
            Backing::Coords { slots, .. } => slots.len(),
        }
    }

    fn raw_dist(&self, a: PointId, b: PointId) -> f64 {
        match &self.backing {
            Backing::Matrix { n, d } => d[a.0 as usize * n + b.0 as usize],
            Backing::Coords {
                norm,
                dim,
                slab,
                slots,
                ..
            } => {
                let sa = slots[&a.0] as usize * dim;
                let sb = slots[&b.0] as usize * dim;
                pnorm(&slab[sa..sa + dim], &slab[sb..sb + dim], *norm)
            }
        }
    }

    /// Checked distance query; `O(1)` per call.
    pub fn distance(&self, a: PointId, b: PointId) -> Result<f64> {
        if !self.contains(a) {
            return Err(Error::UnknownPoint(a));
        }
        if !self.contains(b) {
            return Err(Error::UnknownPoint(b));
        }
        Ok(self.dist(a, b))
    }
}

impl Metric for MetricSpace {
    #[inline]
    fn dist(&self, a: PointId, b: PointId) -> f64 {
        if a == b {
            return 0.0;
        }
        match &self.backing {
            Backing::Matrix { n, d } => d[a.0 as usize * n + b.0 as usize],
            Backing::Coords {
                norm,
                dim,
                scale,
                slab,
                slots,
                ..
            } => {
                let sa = slots[&a.0] as usize * dim;
                let sb = slots[&b.0] as usize * dim;
                pnorm(&slab[sa..sa + dim], &slab[sb..sb + dim], *norm) * scale
            }
        }
    }
}

/// The current input: a map id -> strictly positive weight. Iteration is in
/// id order, which fixes tie-breaks and summation order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointSet {
    members: BTreeMap<PointId, f64>,
}

impl PointSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (PointId, f64)>) -> Result<Self> {
        let mut s = Self::new();
        for (id, w) in pairs {
            s.insert_new(id, w)?;
        }
        Ok(s)
    }

    /// Insert a point that must not already be present.
    pub fn insert_new(&mut self, id: PointId, weight: f64) -> Result<()> {
        if !(weight > 0.0) {
            return Err(Error::NonpositiveWeight { id, weight });
        }
        if self.members.contains_key(&id) {
            return Err(Error::DuplicatePoint(id));
        }
        self.members.insert(id, weight);
        Ok(())
    }

    /// Remove a point that must be present; returns its weight.
    pub fn remove(&mut self, id: PointId) -> Result<f64> {
        self.members
            .remove(&id)
            .ok_or(Error::UnknownPoint(id))
    }

    pub fn weight(&self, id: PointId) -> Option<f64> {
        self.members.get(&id).copied()
    }

    pub fn contains(&self, id: PointId) -> bool {
        self.members.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.members.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (PointId, f64)> + '_ {
        self.members.iter().map(|(id, w)| (*id, *w))
    }

    pub fn ids(&self) -> impl Iterator<Item = PointId> + '_ {
        self.members.keys().copied()
    }

    pub fn id_set(&self) -> CenterSet {
        self.members.keys().copied().collect()
    }

    /// Symmetric difference as ids. A point present on both sides with
    /// different weights counts as changed and is included.
    pub fn sym_diff(&self, other: &PointSet) -> Vec<PointId> {
        let mut out = Vec::new();
        for (id, w) in &self.members {
            match other.members.get(id) {
                Some(w2) if w2 == w => {}
                _ => out.push(*id),
            }
        }
        for id in other.members.keys() {
            if !self.members.contains_key(id) {
                out.push(*id);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Ids of `self` that are absent from `other` or carry a different
    /// weight there (the weight-sensitive `self - other`).
    pub fn diff_from(&self, other: &PointSet) -> Vec<PointId> {
        self.members
            .iter()
            .filter(|(id, w)| other.members.get(id) != Some(w))
            .map(|(id, _)| *id)
            .collect()
    }
}

/// Weighted service cost of `points` under `centers`:
/// sum over p of `w(p) * min_{u in centers} d(p, u)`. Empty point set costs 0;
/// an empty center set with nonempty points has no defined objective.
pub fn cost<M: Metric>(m: &M, centers: &CenterSet, points: &PointSet) -> Result<f64> {
    if points.is_empty() {
        return Ok(0.0);
    }
    if centers.is_empty() {
        return Err(Error::EmptyCenters);
    }
    let cs: Vec<PointId> = centers.iter().copied().collect();
    let mut total = 0.0;
    for (p, w) in points.iter() {
        let mut best = f64::INFINITY;
        for &c in &cs {
            let d = m.dist(p, c);
            if d < best {
                best = d;
            }
        }
        total += w * best;
    }
    Ok(total)
}

/// Cost of a single center against a subset (common special case).
pub fn cost_single<M: Metric>(m: &M, center: PointId, points: &PointSet) -> f64 {
    points.iter().map(|(p, w)| w * m.dist(p, center)).sum()
}

/// Average cost: `cost / total weight`. Errors on zero total weight.
pub fn avcost<M: Metric>(m: &M, centers: &CenterSet, subset: &PointSet) -> Result<f64> {
    let w = subset.total_weight();
    if !(w > 0.0) {
        return Err(Error::ZeroWeight);
    }
    Ok(cost(m, centers, subset)? / w)
}

/// Members of `points` within `radius` (inclusive) of `center`. The center
/// itself is included only when it is a member of `points`.
pub fn ball<M: Metric>(m: &M, points: &PointSet, center: PointId, radius: f64) -> PointSet {
    let mut out = PointSet::new();
    for (p, w) in points.iter() {
        if m.dist(center, p) <= radius {
            out.members.insert(p, w);
        }
    }
    out
}

/// Nearest member of `targets` to `p`, ties broken by smallest id.
pub fn nearest<M: Metric>(
    m: &M,
    p: PointId,
    targets: &CenterSet,
) -> Result<(PointId, f64)> {
    let mut best: Option<(PointId, f64)> = None;
    for &t in targets {
        let d = m.dist(p, t);
        match best {
            Some((_, bd)) if d >= bd => {}
            _ => best = Some((t, d)),
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("nearest over empty target set".into()))
}

/// Distance from `p` to the set `targets - p`; `+inf` when that set is empty.
pub fn dist_to_others<M: Metric>(m: &M, p: PointId, targets: &CenterSet) -> f64 {
    let mut best = f64::INFINITY;
    for &t in targets {
        if t == p {
            continue;
        }
        let d = m.dist(p, t);
        if d < best {
            best = d;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_space() -> MetricSpace {
        // Points on a line at 0, 1, 2, 5.
        let pos: [f64; 4] = [0.0, 1.0, 2.0, 5.0];
        let rows: Vec<Vec<f64>> = pos
            .iter()
            .map(|a| pos.iter().map(|b| (a - b).abs()).collect())
            .collect();
        MetricSpace::from_matrix(rows).unwrap()
    }

    #[test]
    fn distance_identity_and_readback() {
        let m = MetricSpace::from_matrix(vec![vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(m.distance(PointId(0), PointId(0)).unwrap(), 0.0);
        assert_eq!(m.distance(PointId(0), PointId(1)).unwrap(), 3.0);
        assert_eq!(m.delta(), 3.0);
        assert!(matches!(
            m.distance(PointId(7), PointId(0)),
            Err(Error::UnknownPoint(PointId(7)))
        ));
    }

    #[test]
    fn euclidean_pythagorean() {
        let m = MetricSpace::from_coords(
            &[
                (PointId(0), vec![0.0, 0.0]),
                (PointId(1), vec![3.0, 4.0]),
            ],
            2.0,
            10.0,
        )
        .unwrap();
        assert_eq!(m.distance(PointId(0), PointId(1)).unwrap(), 5.0);
    }

    #[test]
    fn coords_rescaled_to_unit_min() {
        let m = MetricSpace::from_coords(
            &[
                (PointId(0), vec![0.0, 0.0]),
                (PointId(1), vec![0.25, 0.0]),
                (PointId(2), vec![1.0, 0.0]),
            ],
            2.0,
            100.0,
        )
        .unwrap();
        assert!((m.dist(PointId(0), PointId(1)) - 1.0).abs() < 1e-12);
        assert!((m.dist(PointId(0), PointId(2)) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_validation_rejects_bad_inputs() {
        // Triangle violation.
        let bad = MetricSpace::from_matrix(vec![
            vec![0.0, 1.0, 9.0],
            vec![1.0, 0.0, 1.0],
            vec![9.0, 1.0, 0.0],
        ]);
        assert!(matches!(bad, Err(Error::InvalidMetric(_))));
        // Asymmetry.
        let bad = MetricSpace::from_matrix(vec![vec![0.0, 2.0], vec![3.0, 0.0]]);
        assert!(matches!(bad, Err(Error::InvalidMetric(_))));
        // Sub-unit distance between distinct points.
        let bad = MetricSpace::from_matrix(vec![vec![0.0, 0.5], vec![0.5, 0.0]]);
        assert!(matches!(bad, Err(Error::InvalidMetric(_))));
    }

    #[test]
    fn duplicate_coordinate_locations_rejected() {
        let r = MetricSpace::from_coords(
            &[
                (PointId(0), vec![1.0, 1.0]),
                (PointId(1), vec![1.0, 1.0]),
            ],
            2.0,
            10.0,
        );
        assert!(matches!(r, Err(Error::InvalidMetric(_))));
    }

    #[test]
    fn cost_basics() {
        let m = MetricSpace::from_matrix(vec![vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        let pts = PointSet::from_pairs([(PointId(0), 1.0), (PointId(1), 1.0)]).unwrap();
        let centers: CenterSet = [PointId(0)].into_iter().collect();
        assert_eq!(cost(&m, &centers, &pts).unwrap(), 2.0);
        assert_eq!(cost(&m, &centers, &PointSet::new()).unwrap(), 0.0);
        assert!(matches!(
            cost(&m, &CenterSet::new(), &pts),
            Err(Error::EmptyCenters)
        ));
    }

    #[test]
    fn avcost_mean_of_distances() {
        let m = line_space();
        // Unit-weight points at distance 1 and 3 from center id 1 (pos 1).
        let pts = PointSet::from_pairs([(PointId(0), 1.0), (PointId(3), 1.0)]).unwrap();
        let centers: CenterSet = [PointId(1)].into_iter().collect();
        assert_eq!(avcost(&m, &centers, &pts).unwrap(), 2.5);
        // Co-located with the center.
        let only = PointSet::from_pairs([(PointId(1), 4.0)]).unwrap();
        assert_eq!(avcost(&m, &centers, &only).unwrap(), 0.0);
        assert!(matches!(
            avcost(&m, &centers, &PointSet::new()),
            Err(Error::ZeroWeight)
        ));
    }

    #[test]
    fn ball_semantics() {
        let m = line_space();
        let pts = PointSet::from_pairs([
            (PointId(0), 1.0),
            (PointId(1), 1.0),
            (PointId(2), 1.0),
            (PointId(3), 1.0),
        ])
        .unwrap();
        // Radius 1.5 around position 1 -> positions {0, 1, 2}.
        let b = ball(&m, &pts, PointId(1), 1.5);
        assert_eq!(b.id_set(), [PointId(0), PointId(1), PointId(2)].into_iter().collect());
        // Radius 0 with the center absent from the set.
        let absent = PointSet::from_pairs([(PointId(0), 1.0), (PointId(3), 1.0)]).unwrap();
        assert!(ball(&m, &absent, PointId(1), 0.0).is_empty());
        // Radius >= delta captures everything.
        let all = ball(&m, &pts, PointId(0), m.delta());
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn nearest_tie_break_smallest_id() {
        let m = line_space();
        // Ids 0 (pos 0) and 2 (pos 2) are equidistant from id 1 (pos 1).
        let targets: CenterSet = [PointId(0), PointId(2)].into_iter().collect();
        let (id, d) = nearest(&m, PointId(1), &targets).unwrap();
        assert_eq!((id, d), (PointId(0), 1.0));
        // p in targets resolves to itself at distance zero.
        let with_self: CenterSet = [PointId(1), PointId(3)].into_iter().collect();
        assert_eq!(nearest(&m, PointId(1), &with_self).unwrap(), (PointId(1), 0.0));
        assert!(nearest(&m, PointId(0), &CenterSet::new()).is_err());
    }

    #[test]
    fn sym_diff_counts_weight_changes() {
        let a = PointSet::from_pairs([(PointId(1), 1.0), (PointId(2), 2.0)]).unwrap();
        let b = PointSet::from_pairs([(PointId(1), 1.0), (PointId(2), 3.0), (PointId(4), 1.0)])
            .unwrap();
        assert_eq!(a.sym_diff(&b), vec![PointId(2), PointId(4)]);
        assert_eq!(b.diff_from(&a), vec![PointId(2), PointId(4)]);
    }
}
