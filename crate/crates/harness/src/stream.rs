//! Update-stream file format and the seeded stream generators.
//!
//! A stream file is line-delimited JSON: a header line declaring the
//! distance backing, then one event per line, `{"op":"i","id":7,"w":1.0,
//! "x":[...]}` for insertions and `{"op":"d","id":7}` for deletions.
//!
//! Generators draw from a fixed ground pool of jittered grid cells (cell
//! side 2, jitter 0.25), which guarantees a minimum pairwise distance of
//! 1.5 and keeps the ground space small enough for exact oracles: deleted
//! ids are re-inserted rather than replaced.

use std::fmt;
use std::path::Path;

use anyhow::{bail, Context};
use dynkmedian::metric::{MetricSpace, PointId};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "backing")]
pub enum StreamHeader {
    #[serde(rename = "coords")]
    Coords { norm: f64, dim: usize, delta: f64 },
    #[serde(rename = "matrix")]
    Matrix { path: String, delta: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StreamEvent {
    pub op: String,
    pub id: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamFile {
    pub header: StreamHeader,
    pub events: Vec<StreamEvent>,
}

impl StreamFile {
    pub fn to_string(&self) -> anyhow::Result<String> {
        let mut out = serde_json::to_string(&self.header)?;
        out.push('\n');
        for ev in &self.events {
            out.push_str(&serde_json::to_string(ev)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, self.to_string()?)
            .with_context(|| format!("writing stream to {}", path.display()))
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading stream from {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().context("empty stream file")?;
        let header: StreamHeader =
            serde_json::from_str(first).context("parsing stream header (line 1)")?;
        let mut events = Vec::new();
        for (ln, line) in lines {
            let ev: StreamEvent = serde_json::from_str(line)
                .with_context(|| format!("parsing event at line {}", ln + 1))?;
            match ev.op.as_str() {
                "i" => {
                    if ev.w.is_none() {
                        bail!("line {}: insert without weight", ln + 1);
                    }
                }
                "d" => {}
                other => bail!("line {}: unknown op {other:?}", ln + 1),
            }
            events.push(ev);
        }
        Ok(Self { header, events })
    }

    /// Build the metric space the stream runs against. Matrix-backed
    /// streams resolve the matrix path relative to `base_dir`.
    pub fn build_space(&self, base_dir: &Path) -> anyhow::Result<MetricSpace> {
        match &self.header {
            StreamHeader::Coords { norm, dim, delta } => {
                MetricSpace::coords(*norm, *dim, *delta).map_err(Into::into)
            }
            StreamHeader::Matrix { path, .. } => {
                let full = base_dir.join(path);
                let text = std::fs::read_to_string(&full)
                    .with_context(|| format!("reading matrix {}", full.display()))?;
                MetricSpace::from_matrix_text(&text).map_err(Into::into)
            }
        }
    }

    pub fn delta(&self) -> f64 {
        match &self.header {
            StreamHeader::Coords { delta, .. } => *delta,
            StreamHeader::Matrix { delta, .. } => *delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum StreamKind {
    /// Inserts and deletes over a uniform box, with two drain phases that
    /// shrink the live set (exercising the small-input fallback).
    UniformBox,
    /// Two activation anchors orbiting in opposite phases; live points
    /// concentrate near the anchors and decay behind them.
    TwoClusterDrift,
    /// Warm up to the window size, then alternate oldest-delete / insert.
    SlidingWindow,
    /// Bursts of insertion and deletion concentrated around hotspots in the
    /// live set, stressing the suspect-detection path.
    AdversarialChurn,
}

impl fmt::Display for StreamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StreamKind::UniformBox => "uniform-box",
            StreamKind::TwoClusterDrift => "two-cluster-drift",
            StreamKind::SlidingWindow => "sliding-window",
            StreamKind::AdversarialChurn => "adversarial-churn",
        };
        f.write_str(s)
    }
}

/// Fixed ground pool: `n` jittered grid positions, ids `0..n`.
struct GroundPool {
    positions: Vec<[f64; 2]>,
}

impl GroundPool {
    fn build(n: usize, rng: &mut ChaCha8Rng) -> Self {
        let g = ((2 * n.max(2)) as f64).sqrt().ceil() as u32;
        let mut cells = Vec::with_capacity(n);
        let mut used = std::collections::BTreeSet::new();
        while cells.len() < n {
            let c = (rng.random_range(0..g), rng.random_range(0..g));
            if used.insert(c) {
                cells.push(c);
            }
        }
        let positions = cells
            .into_iter()
            .map(|(cx, cy)| {
                let jx: f64 = rng.random::<f64>() * 0.5 - 0.25;
                let jy: f64 = rng.random::<f64>() * 0.5 - 0.25;
                [2.0 * cx as f64 + 1.0 + jx, 2.0 * cy as f64 + 1.0 + jy]
            })
            .collect();
        Self { positions }
    }

    fn len(&self) -> usize {
        self.positions.len()
    }

    fn pos(&self, id: usize) -> [f64; 2] {
        self.positions[id]
    }

    fn nearest_matching(
        &self,
        target: [f64; 2],
        pred: impl Fn(usize) -> bool,
    ) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (id, p) in self.positions.iter().enumerate() {
            if !pred(id) {
                continue;
            }
            let d = (p[0] - target[0]).hypot(p[1] - target[1]);
            match best {
                Some((bd, _)) if d >= bd => {}
                _ => best = Some((d, id)),
            }
        }
        best.map(|(_, id)| id)
    }
}

struct StreamBuilder {
    pool: GroundPool,
    live: Vec<usize>, // insertion order
    present: Vec<bool>,
    events: Vec<StreamEvent>,
}

impl StreamBuilder {
    fn new(pool: GroundPool) -> Self {
        let n = pool.len();
        Self {
            pool,
            live: Vec::new(),
            present: vec![false; n],
            events: Vec::new(),
        }
    }

    fn insert(&mut self, id: usize, w: f64) {
        debug_assert!(!self.present[id]);
        self.present[id] = true;
        self.live.push(id);
        let p = self.pool.pos(id);
        self.events.push(StreamEvent {
            op: "i".into(),
            id: id as u64,
            w: Some(w),
            x: Some(vec![p[0], p[1]]),
        });
    }

    fn delete(&mut self, id: usize) {
        debug_assert!(self.present[id]);
        self.present[id] = false;
        self.live.retain(|&l| l != id);
        self.events.push(StreamEvent {
            op: "d".into(),
            id: id as u64,
            w: None,
            x: None,
        });
    }

    fn random_absent(&self, rng: &mut ChaCha8Rng) -> Option<usize> {
        let absent: Vec<usize> = (0..self.pool.len()).filter(|&i| !self.present[i]).collect();
        if absent.is_empty() {
            None
        } else {
            Some(absent[rng.random_range(0..absent.len())])
        }
    }

    fn random_live(&self, rng: &mut ChaCha8Rng) -> Option<usize> {
        if self.live.is_empty() {
            None
        } else {
            Some(self.live[rng.random_range(0..self.live.len())])
        }
    }

    fn delta(&self) -> f64 {
        let mut max = 4.0f64;
        for p in &self.pool.positions {
            for q in &self.pool.positions {
                max = max.max((p[0] - q[0]).hypot(p[1] - q[1]));
            }
        }
        // Headroom above the realized diameter keeps the declared bound a
        // round number.
        if max <= 100.0 {
            100.0
        } else {
            1e4
        }
    }
}

/// Generate a deterministic stream of `t` events over a ground pool of
/// `n_max` points.
pub fn generate(kind: StreamKind, n_max: usize, t: usize, seed: u64) -> StreamFile {
    assert!(t >= 1, "stream length must be at least 1");
    assert!(n_max >= 2, "pool needs at least two points");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7374_7265_616d);
    let pool = GroundPool::build(n_max, &mut rng);
    let mut b = StreamBuilder::new(pool);
    match kind {
        StreamKind::UniformBox => gen_uniform(&mut b, n_max, t, &mut rng),
        StreamKind::TwoClusterDrift => gen_drift(&mut b, n_max, t, &mut rng),
        StreamKind::SlidingWindow => gen_window(&mut b, n_max, t, &mut rng),
        StreamKind::AdversarialChurn => gen_churn(&mut b, n_max, t, &mut rng),
    }
    debug_assert_eq!(b.events.len(), t);
    let delta = b.delta();
    StreamFile {
        header: StreamHeader::Coords {
            norm: 2.0,
            dim: 2,
            delta,
        },
        events: b.events,
    }
}

fn gen_uniform(b: &mut StreamBuilder, n_max: usize, t: usize, rng: &mut ChaCha8Rng) {
    let drain_len = (n_max / 8).max(8);
    let drains = [(t * 2 / 5, drain_len), (t * 3 / 4, drain_len)];
    for step in 0..t {
        let draining = drains
            .iter()
            .any(|&(start, len)| step >= start && step < start + len);
        let want_insert = if draining {
            b.live.is_empty()
        } else {
            b.live.len() < 2 || (b.live.len() < n_max && rng.random::<f64>() < 0.62)
        };
        if want_insert {
            if let Some(id) = b.random_absent(rng) {
                b.insert(id, 1.0);
                continue;
            }
        }
        if let Some(id) = b.random_live(rng) {
            b.delete(id);
        } else {
            let id = b.random_absent(rng).expect("pool nonempty");
            b.insert(id, 1.0);
        }
    }
}

fn gen_drift(b: &mut StreamBuilder, n_max: usize, t: usize, rng: &mut ChaCha8Rng) {
    let g = ((2 * n_max) as f64).sqrt().ceil();
    let center = g; // grid coordinates span [0, 2g]
    let radius = g * 0.6;
    for step in 0..t {
        let theta = 2.0 * std::f64::consts::PI * step as f64 / t as f64;
        let a = [center + radius * theta.cos(), center + radius * theta.sin()];
        let bb = [center - radius * theta.cos(), center - radius * theta.sin()];
        let target = if step % 2 == 0 { a } else { bb };
        let at_cap = b.live.len() >= n_max;
        if !at_cap && (b.live.len() < 2 || rng.random::<f64>() < 0.6) {
            let weight = 0.5 + rng.random::<f64>() * 2.0;
            if let Some(id) = b.pool.nearest_matching(target, |i| !b.present[i]) {
                b.insert(id, weight);
                continue;
            }
        }
        // Decay: drop the live point farthest from both anchors.
        let far = b
            .live
            .iter()
            .copied()
            .max_by(|&x, &y| {
                let dx = dist_to_anchors(b.pool.pos(x), a, bb);
                let dy = dist_to_anchors(b.pool.pos(y), a, bb);
                dx.total_cmp(&dy).then(x.cmp(&y))
            });
        if let Some(id) = far {
            b.delete(id);
        } else {
            let id = b.random_absent(rng).expect("pool nonempty");
            b.insert(id, 1.0);
        }
    }
}

fn dist_to_anchors(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let da = (p[0] - a[0]).hypot(p[1] - a[1]);
    let db = (p[0] - b[0]).hypot(p[1] - b[1]);
    da.min(db)
}

fn gen_window(b: &mut StreamBuilder, n_max: usize, t: usize, rng: &mut ChaCha8Rng) {
    let mut next = 0usize;
    for step in 0..t {
        let warm = b.live.len() < n_max && step < n_max;
        if warm || step % 2 == 1 {
            // Insert the next absent pool id in round-robin order.
            let mut tries = 0;
            while b.present[next % b.pool.len()] && tries <= b.pool.len() {
                next += 1;
                tries += 1;
            }
            if tries <= b.pool.len() {
                let id = next % b.pool.len();
                next += 1;
                b.insert(id, 1.0);
                continue;
            }
        }
        if let Some(&oldest) = b.live.first() {
            b.delete(oldest);
        } else {
            let id = b.random_absent(rng).expect("pool nonempty");
            b.insert(id, 1.0);
        }
    }
}

fn gen_churn(b: &mut StreamBuilder, n_max: usize, t: usize, rng: &mut ChaCha8Rng) {
    let warmup = (n_max / 2).max(2).min(t);
    for _ in 0..warmup {
        let id = b.random_absent(rng).expect("warmup fits the pool");
        b.insert(id, 1.0);
    }
    let mut hotspot = b.pool.pos(b.live[0]);
    for step in warmup..t {
        if step % 8 == 0 {
            if let Some(id) = b.random_live(rng) {
                hotspot = b.pool.pos(id);
            }
        }
        let at_cap = b.live.len() >= n_max;
        let insert = !at_cap && (b.live.len() < 2 || rng.random::<f64>() < 0.55);
        if insert {
            if let Some(id) = b.pool.nearest_matching(hotspot, |i| !b.present[i]) {
                b.insert(id, 1.0);
                continue;
            }
        }
        if let Some(id) = b.pool.nearest_matching(hotspot, |i| b.present[i]) {
            b.delete(id);
        } else {
            let id = b.random_absent(rng).expect("pool nonempty");
            b.insert(id, 1.0);
        }
    }
}

/// Convert a stream event into the engine's update type, registering the
/// ground point first when coordinates are present.
pub fn apply_event_prelude(
    engine: &mut dynkmedian::engine::Engine,
    ev: &StreamEvent,
) -> anyhow::Result<dynkmedian::engine::UpdateEvent> {
    let id = PointId(ev.id);
    match ev.op.as_str() {
        "i" => {
            if let Some(x) = &ev.x {
                engine.register_ground_point(id, x.clone())?;
            }
            Ok(dynkmedian::engine::UpdateEvent::Insert {
                id,
                weight: ev.w.context("insert without weight")?,
            })
        }
        "d" => Ok(dynkmedian::engine::UpdateEvent::Delete { id }),
        other => bail!("unknown op {other:?}"),
    }
}
