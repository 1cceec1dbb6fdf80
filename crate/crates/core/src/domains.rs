//! Sampling-based verification of intrinsic-vs-extrinsic distance bounds in
//! Euclidean domains: Lipschitz-graph epigraphs, small-boundary complements
//! (deleted points, a deleted round sphere), and products with cube fibers.
//!
//! Intrinsic distances are estimated on nested dyadic grids with all
//! `3^d - 1` neighbour moves and an A* search (Euclidean heuristic, exact
//! shortest grid paths, deterministic tie-breaking). The grid slack `eta` is
//! computed from the connectivity geometry and reported, never assumed.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
// resolves float math in no_std builds; shadowed when std is in the crate graph
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::mat::vecn;
use crate::rng::SplitMix64;

/// Graph functions shipped with the fixtures: `f(z) = -slope * |z|`
/// (slope 0 is a half-space, slope `k` a cone graph of Lipschitz constant
/// `k`).
#[derive(Debug, Clone, Copy)]
pub enum GraphFn {
    NegAbs { slope: f64 },
}

impl GraphFn {
    pub fn eval(&self, z: &[f64]) -> f64 {
        match self {
            GraphFn::NegAbs { slope } => -slope * vecn::norm(z),
        }
    }

    pub fn lipschitz_constant(&self) -> f64 {
        match self {
            GraphFn::NegAbs { slope } => *slope,
        }
    }

    /// Empirical check of the declared constant on sampled difference
    /// quotients.
    pub fn lipschitz_check(&self, dim_z: usize, samples: usize, rng: &mut SplitMix64) -> bool {
        let k = self.lipschitz_constant();
        for _ in 0..samples {
            let a: Vec<f64> = (0..dim_z).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let b: Vec<f64> = (0..dim_z).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let dz = vecn::dist(&a, &b);
            if dz < 1e-12 {
                continue;
            }
            if (self.eval(&a) - self.eval(&b)).abs() > k * dz * (1.0 + 1e-6) + 1e-12 {
                return false;
            }
        }
        true
    }
}

/// An open domain of `R^d` given by its complement.
#[derive(Debug, Clone)]
pub enum Domain {
    /// Epigraph `{ (z, t) : t > f(z) }`, the last coordinate distinguished.
    LipschitzGraph { f: GraphFn, dim: usize },
    /// Complement of finitely many points.
    DeletedPoints { points: Vec<Vec<f64>>, dim: usize },
    /// Complement of a round `(d-2)`-sphere `{ |x' - c| = r, x_d = h }`
    /// (primes denoting the first `d-1` coordinates).
    DeletedSphere { center: Vec<f64>, radius: f64, height: f64, dim: usize },
    /// Product of a base domain with a cube fiber `[0, w]^m`.
    Product { base: alloc::boxed::Box<Domain>, fiber_width: f64, fiber_dim: usize },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::LipschitzGraph { dim, .. } => *dim,
            Domain::DeletedPoints { dim, .. } => *dim,
            Domain::DeletedSphere { dim, .. } => *dim,
            Domain::Product { base, fiber_dim, .. } => base.dim() + fiber_dim,
        }
    }

    /// Clearance test. For graphs the margin is measured as the vertical gap
    /// `t - f(z)`; for deleted sets it is the Euclidean distance; fiber cube
    /// walls count as boundary.
    pub fn contains(&self, x: &[f64], margin: f64) -> bool {
        match self {
            Domain::LipschitzGraph { f, dim } => {
                let z = &x[..dim - 1];
                x[dim - 1] - f.eval(z) >= margin
            }
            Domain::DeletedPoints { points, .. } => {
                points.iter().all(|p| vecn::dist(x, p) >= margin)
            }
            Domain::DeletedSphere { center, radius, height, dim } => {
                let planar = vecn::dist(&x[..dim - 1], center);
                let d2 = (planar - radius) * (planar - radius)
                    + (x[dim - 1] - height) * (x[dim - 1] - height);
                d2.sqrt() >= margin
            }
            Domain::Product { base, fiber_width, fiber_dim } => {
                let bd = base.dim();
                if !base.contains(&x[..bd], margin) {
                    return false;
                }
                x[bd..bd + fiber_dim]
                    .iter()
                    .all(|&y| y >= margin && y <= fiber_width - margin)
            }
        }
    }

    /// Upper bound on the intrinsic/extrinsic ratio guaranteed for the
    /// shape, before grid slack.
    pub fn bilipschitz_bound(&self) -> f64 {
        match self {
            Domain::LipschitzGraph { f, .. } => {
                let k = f.lipschitz_constant();
                (1.0 + k * k).sqrt()
            }
            Domain::DeletedPoints { .. } | Domain::DeletedSphere { .. } => 1.0,
            Domain::Product { base, .. } => 2.0 * base.bilipschitz_bound(),
        }
    }

    /// Box-counting estimate of the deleted set's dimension, checked against
    /// the small-boundary requirement `<= d - 2`.
    pub fn deleted_set_dimension_check(&self) -> Option<(f64, bool)> {
        let sample: Vec<Vec<f64>> = match self {
            Domain::DeletedPoints { points, .. } => points.clone(),
            Domain::DeletedSphere { center, radius, height, dim } => {
                // densely sample the sphere (shipped fixtures have d <= 3,
                // so the deleted sphere is a circle or a point pair)
                let m = 4096;
                (0..m)
                    .map(|i| {
                        let a = core::f64::consts::TAU * i as f64 / m as f64;
                        let mut x = vec![0.0; *dim];
                        if *dim >= 3 {
                            x[0] = center[0] + radius * a.cos();
                            x[1] = center[1] + radius * a.sin();
                            for j in 2..dim - 1 {
                                x[j] = center[j];
                            }
                        } else {
                            x[0] = center[0] + radius * if i % 2 == 0 { 1.0 } else { -1.0 };
                        }
                        x[dim - 1] = *height;
                        x
                    })
                    .collect()
            }
            _ => return None,
        };
        let dim = self.dim();
        let scales = [0.4, 0.2, 0.1, 0.05, 0.025];
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &eps in &scales {
            let mut cells: alloc::collections::BTreeSet<Vec<i64>> =
                alloc::collections::BTreeSet::new();
            for p in &sample {
                cells.insert(p.iter().map(|v| (v / eps).floor() as i64).collect());
            }
            xs.push((1.0 / eps).ln());
            ys.push((cells.len() as f64).ln());
        }
        let m = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / m;
        let my = ys.iter().sum::<f64>() / m;
        let sxx: f64 = xs.iter().map(|v| (v - mx) * (v - mx)).sum();
        let sxy: f64 = xs.iter().zip(ys.iter()).map(|(a, b)| (a - mx) * (b - my)).sum();
        let est = sxy / sxx;
        Some((est, est <= (dim as f64 - 2.0) + 0.2))
    }
}

/// Nested dyadic grid estimator for intrinsic distances.
///
/// Refinements halve `h` but keep the anchor, the obstacle margin and the
/// edge-clearance sampling step, so finer grids contain every coarse node
/// and edge: refinement can only shorten paths.
#[derive(Debug, Clone)]
pub struct GridEstimator {
    pub h: f64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Obstacle clearance required of nodes and edge samples.
    pub margin: f64,
    /// Sampling step along candidate edges for the clearance check.
    pub check_step: f64,
}

impl GridEstimator {
    /// Estimator at resolution `h` with the conventions of the fixtures:
    /// margin `h/4`, edge checks every `h/2`.
    pub fn new(h: f64, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        GridEstimator { h, lo, hi, margin: h / 4.0, check_step: h / 2.0 }
    }

    /// Halves `h`, keeping anchor, margin and clearance step (nesting).
    pub fn refined(&self) -> Self {
        GridEstimator {
            h: self.h / 2.0,
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            margin: self.margin,
            check_step: self.check_step,
        }
    }

    fn dims(&self) -> Vec<usize> {
        self.lo
            .iter()
            .zip(self.hi.iter())
            .map(|(a, b)| ((b - a) / self.h).round() as usize + 1)
            .collect()
    }

    fn node_pos(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(self.lo.iter())
            .map(|(&i, &a)| a + self.h * i as f64)
            .collect()
    }

    fn snap(&self, x: &[f64]) -> Vec<usize> {
        let dims = self.dims();
        x.iter()
            .zip(self.lo.iter())
            .zip(dims.iter())
            .map(|((&v, &a), &m)| (((v - a) / self.h).round().max(0.0) as usize).min(m - 1))
            .collect()
    }
}

/// Worst-direction overestimation factor of the `3^d - 1` connectivity:
/// `|c| - 1` for the chamfer weight increments `c_j = sqrt(j) - sqrt(j-1)`.
pub fn eta_connectivity(d: usize) -> f64 {
    let mut s = 0.0;
    for j in 1..=d {
        let c = (j as f64).sqrt() - ((j - 1) as f64).sqrt();
        s += c * c;
    }
    s.sqrt() - 1.0
}

/// Total grid slack for a pair at distance `dist`: connectivity factor plus
/// endpoint-snapping and margin-detour terms.
pub fn eta(h: f64, d: usize, margin: f64, dist: f64) -> f64 {
    eta_connectivity(d) + (2.0 * (d as f64).sqrt() * h + 8.0 * margin) / dist.max(1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Result of one grid shortest-path query.
#[derive(Debug, Clone)]
pub struct GridDistance {
    pub value: f64,
    /// Euclidean distance between the snapped endpoints.
    pub extrinsic_snapped: f64,
    /// Euclidean distance between the requested endpoints.
    pub extrinsic: f64,
    pub expanded_nodes: usize,
}

/// Shortest grid path between (the snapped versions of) `x` and `y` through
/// the domain, by A* with the Euclidean heuristic; exact on the grid graph,
/// ties broken by lexicographic node order.
pub fn intrinsic_distance(
    domain: &Domain,
    est: &GridEstimator,
    x: &[f64],
    y: &[f64],
) -> Result<GridDistance> {
    let d = domain.dim();
    if x.len() != d || y.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    let dims = est.dims();
    let total: usize = dims.iter().product();
    if total > 40_000_000 {
        return Err(Error::ResolutionTooFine { required: total, budget: 40_000_000 });
    }
    let strides = {
        let mut s = vec![1usize; d];
        for i in (0..d - 1).rev() {
            s[i] = s[i + 1] * dims[i + 1];
        }
        s
    };
    let to_linear = |idx: &[usize]| -> usize {
        idx.iter().zip(strides.iter()).map(|(a, b)| a * b).sum()
    };
    let to_idx = |mut lin: usize| -> Vec<usize> {
        let mut idx = vec![0usize; d];
        for i in 0..d {
            idx[i] = lin / strides[i];
            lin %= strides[i];
        }
        idx
    };

    // canonical orientation makes the query bit-exactly symmetric
    let (xa, yb) = if x <= y { (x, y) } else { (y, x) };

    let snap_valid = |p: &[f64]| -> Result<Vec<usize>> {
        let idx = est.snap(p);
        if domain.contains(&est.node_pos(&idx), est.margin) {
            return Ok(idx);
        }
        // search the immediate neighbourhood for a valid node
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut stack = vec![idx.clone()];
        for offset in neighbour_offsets(d) {
            let mut cand = idx.clone();
            let mut ok = true;
            for (c, (&o, &m)) in cand.iter_mut().zip(offset.iter().zip(dims.iter())) {
                let v = *c as i64 + o;
                if v < 0 || v as usize >= m {
                    ok = false;
                    break;
                }
                *c = v as usize;
            }
            if ok {
                stack.push(cand);
            }
        }
        for cand in stack {
            let pos = est.node_pos(&cand);
            if domain.contains(&pos, est.margin) {
                let dd = vecn::dist(&pos, p);
                if best.as_ref().map(|(b, _)| dd < *b).unwrap_or(true) {
                    best = Some((dd, cand));
                }
            }
        }
        best.map(|(_, c)| c).ok_or_else(|| {
            Error::InvalidParameter("endpoint too close to the boundary to snap".into())
        })
    };
    let start_idx = snap_valid(xa)?;
    let goal_idx = snap_valid(yb)?;
    let start_pos = est.node_pos(&start_idx);
    let goal_pos = est.node_pos(&goal_idx);
    let start = to_linear(&start_idx);
    let goal = to_linear(&goal_idx);

    let offsets = neighbour_offsets(d);
    let weights: Vec<f64> = offsets
        .iter()
        .map(|o| est.h * (o.iter().map(|v| (v * v) as f64).sum::<f64>()).sqrt())
        .collect();

    let mut dist_map: Vec<f64> = vec![f64::INFINITY; total];
    let mut heap: BinaryHeap<core::cmp::Reverse<(OrdF64, usize, OrdF64)>> = BinaryHeap::new();
    dist_map[start] = 0.0;
    heap.push(core::cmp::Reverse((
        OrdF64(vecn::dist(&start_pos, &goal_pos)),
        start,
        OrdF64(0.0),
    )));
    let mut expanded = 0usize;
    let mut found = None;
    while let Some(core::cmp::Reverse((_f, node, OrdF64(g)))) = heap.pop() {
        if g > dist_map[node] {
            continue;
        }
        if node == goal {
            found = Some(g);
            break;
        }
        expanded += 1;
        let idx = to_idx(node);
        let pos = est.node_pos(&idx);
        for (o, w) in offsets.iter().zip(weights.iter()) {
            let mut nidx = idx.clone();
            let mut ok = true;
            for (c, (&ov, &m)) in nidx.iter_mut().zip(o.iter().zip(dims.iter())) {
                let v = *c as i64 + ov;
                if v < 0 || v as usize >= m {
                    ok = false;
                    break;
                }
                *c = v as usize;
            }
            if !ok {
                continue;
            }
            let nlin = to_linear(&nidx);
            let ng = g + w;
            if ng >= dist_map[nlin] {
                continue;
            }
            let npos = est.node_pos(&nidx);
            if !domain.contains(&npos, est.margin) {
                continue;
            }
            if !edge_clear(domain, est, &pos, &npos) {
                continue;
            }
            dist_map[nlin] = ng;
            heap.push(core::cmp::Reverse((
                OrdF64(ng + vecn::dist(&npos, &goal_pos)),
                nlin,
                OrdF64(ng),
            )));
        }
    }
    match found {
        Some(v) => Ok(GridDistance {
            value: v,
            extrinsic_snapped: vecn::dist(&start_pos, &goal_pos),
            extrinsic: vecn::dist(xa, yb),
            expanded_nodes: expanded,
        }),
        None => Err(Error::Unreachable),
    }
}

fn neighbour_offsets(d: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let total = 3usize.pow(d as u32);
    for code in 0..total {
        let mut c = code;
        let mut off = vec![0i64; d];
        for item in off.iter_mut() {
            *item = (c % 3) as i64 - 1;
            c /= 3;
        }
        if off.iter().any(|&v| v != 0) {
            out.push(off);
        }
    }
    out
}

fn edge_clear(domain: &Domain, est: &GridEstimator, a: &[f64], b: &[f64]) -> bool {
    let len = vecn::dist(a, b);
    let steps = (len / est.check_step).ceil().max(1.0) as usize;
    for j in 1..steps {
        let t = j as f64 / steps as f64;
        let p: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x + t * (y - x)).collect();
        if !domain.contains(&p, est.margin) {
            return false;
        }
    }
    true
}

/// One row of a bi-Lipschitz sweep.
#[derive(Debug, Clone)]
pub struct RatioRow {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub intrinsic: f64,
    pub extrinsic: f64,
    pub ratio: f64,
}

/// Worst intrinsic/extrinsic ratio over sample pairs, with the shape bound.
#[derive(Debug, Clone)]
pub struct BilipschitzReport {
    pub rows: Vec<RatioRow>,
    pub worst_ratio: f64,
    /// Shape bound before grid slack (`sqrt(1 + k^2)`, 1, or `2 k_base`).
    pub shape_bound: f64,
    /// Grid slack of the worst pair.
    pub eta: f64,
    pub pass: bool,
    pub unreachable: usize,
}

/// Sweeps the sample pairs with the grid estimator and checks the shape's
/// bi-Lipschitz bound at slack `eta(h)`.
pub fn bilipschitz_report(
    domain: &Domain,
    est: &GridEstimator,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> Result<BilipschitzReport> {
    let d = domain.dim();
    let mut rows = Vec::new();
    let mut unreachable = 0usize;
    let mut worst = 0.0f64;
    let mut worst_eta = 0.0f64;
    for (x, y) in pairs {
        match intrinsic_distance(domain, est, x, y) {
            Ok(gd) => {
                if gd.extrinsic_snapped < est.h {
                    continue;
                }
                let ratio = gd.value / gd.extrinsic_snapped;
                if ratio > worst {
                    worst = ratio;
                    worst_eta = eta(est.h, d, est.margin, gd.extrinsic_snapped);
                }
                rows.push(RatioRow {
                    x: x.clone(),
                    y: y.clone(),
                    intrinsic: gd.value,
                    extrinsic: gd.extrinsic_snapped,
                    ratio,
                });
            }
            Err(Error::Unreachable) => unreachable += 1,
            Err(e) => return Err(e),
        }
    }
    if rows.is_empty() {
        return Err(Error::InvalidParameter("no reachable pair".into()));
    }
    let shape_bound = domain.bilipschitz_bound();
    let pass = worst <= shape_bound * (1.0 + worst_eta);
    Ok(BilipschitzReport { rows, worst_ratio: worst, shape_bound, eta: worst_eta, pass, unreachable })
}

/// Length of a product-path with the given fiber trace, and the product
/// lower bound it must respect.
#[derive(Debug, Clone)]
pub struct ProductLength {
    pub length: f64,
    pub minimum: f64,
    /// `length >= minimum - slack` (always true; recorded for the report).
    pub at_least_minimum: bool,
}

/// Length of `u -> (u, beta(u))` over `[0, l]` by piecewise-linear
/// quadrature; with `beta` omitted returns the linear minimum
/// `sqrt(l^2 + |y2 - y1|^2)` exactly.
pub fn product_min_length(
    l: f64,
    y1: &[f64],
    y2: &[f64],
    beta: Option<&[Vec<f64>]>,
) -> Result<ProductLength> {
    if l <= 0.0 {
        return Err(Error::InvalidParameter("base length must be positive".into()));
    }
    let minimum = (l * l + vecn::dist(y1, y2).powi(2)).sqrt();
    let length = match beta {
        None => minimum,
        Some(samples) => {
            if samples.len() < 2 {
                return Err(Error::InvalidParameter("need at least 2 fiber samples".into()));
            }
            let first = samples.first().unwrap();
            let last = samples.last().unwrap();
            if vecn::dist(first, y1) > 1e-9 || vecn::dist(last, y2) > 1e-9 {
                return Err(Error::InvalidParameter("fiber path endpoints mismatch".into()));
            }
            let du = l / (samples.len() - 1) as f64;
            samples
                .windows(2)
                .map(|w| (du * du + vecn::dist(&w[0], &w[1]).powi(2)).sqrt())
                .sum()
        }
    };
    Ok(ProductLength { length, minimum, at_least_minimum: length >= minimum - 1e-9 })
}

/// Per-pair record of the fibered-constant verification.
#[derive(Debug, Clone)]
pub struct FiberedRow {
    pub intrinsic: f64,
    pub extrinsic: f64,
    pub ratio: f64,
    /// `sqrt((k_base * base_ext)^2 + |dy|^2)`, the proof's composite bound.
    pub composite: f64,
    pub composite_ok: bool,
}

#[derive(Debug, Clone)]
pub struct FiberedReport {
    pub rows: Vec<FiberedRow>,
    pub worst_ratio: f64,
    /// `K = 2 k_base`.
    pub k_bound: f64,
    pub eta: f64,
    pub pass: bool,
}

/// Verifies the product-domain constant `K = 2 k_base` on sample pairs of a
/// `base x cube` domain, along with the composite inequality
/// `sqrt((k_base L)^2 + |dy|^2) <= K sqrt(L^2 + |dy|^2)`.
pub fn fibered_constant_check(
    product: &Domain,
    est: &GridEstimator,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> Result<FiberedReport> {
    let (base, fiber_dim) = match product {
        Domain::Product { base, fiber_dim, .. } => (base.as_ref(), *fiber_dim),
        _ => return Err(Error::InvalidParameter("expected a product domain".into())),
    };
    let bd = base.dim();
    let k_base = base.bilipschitz_bound();
    let k_bound = 2.0 * k_base;
    let d = product.dim();
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut worst_eta = 0.0f64;
    for (x, y) in pairs {
        let gd = match intrinsic_distance(product, est, x, y) {
            Ok(g) => g,
            Err(Error::Unreachable) => continue,
            Err(e) => return Err(e),
        };
        if gd.extrinsic_snapped < est.h {
            continue;
        }
        let base_ext = vecn::dist(&x[..bd], &y[..bd]);
        let dy = vecn::dist(&x[bd..bd + fiber_dim], &y[bd..bd + fiber_dim]);
        let composite = ((k_base * base_ext).powi(2) + dy * dy).sqrt();
        let e = eta(est.h, d, est.margin, gd.extrinsic_snapped);
        let composite_ok = composite <= k_bound * gd.extrinsic + 1e-12
            && gd.value <= composite * (1.0 + e) + 4.0 * est.h;
        let ratio = gd.value / gd.extrinsic_snapped;
        if ratio > worst {
            worst = ratio;
            worst_eta = e;
        }
        rows.push(FiberedRow {
            intrinsic: gd.value,
            extrinsic: gd.extrinsic_snapped,
            ratio,
            composite,
            composite_ok,
        });
    }
    if rows.is_empty() {
        return Err(Error::InvalidParameter("no reachable pair".into()));
    }
    let pass = worst <= k_bound * (1.0 + worst_eta) && rows.iter().all(|r| r.composite_ok);
    Ok(FiberedReport { rows, worst_ratio: worst, k_bound, eta: worst_eta, pass })
}

/// Deterministic sample pairs with clearance inside a box.
pub fn sample_pairs(
    domain: &Domain,
    lo: &[f64],
    hi: &[f64],
    clearance: f64,
    count: usize,
    rng: &mut SplitMix64,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let d = domain.dim();
    let mut out = Vec::with_capacity(count);
    let mut guard = 0;
    while out.len() < count && guard < count * 1000 {
        guard += 1;
        let p: Vec<f64> = (0..d).map(|i| rng.uniform(lo[i], hi[i])).collect();
        let q: Vec<f64> = (0..d).map(|i| rng.uniform(lo[i], hi[i])).collect();
        if domain.contains(&p, clearance) && domain.contains(&q, clearance) {
            out.push((p, q));
        }
    }
    out
}
