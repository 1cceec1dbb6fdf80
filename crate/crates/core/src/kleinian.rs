//! Finitely generated Kleinian groups: word-ball enumeration, limit-set
//! approximation, density and maximality verdicts, simple divergence and the
//! projective-model tangent hyperplanes.
//!
//! The hyperbolic fixtures live on the upper hemisphere `{ xi_n > 0 }` of the
//! model sphere, whose stabilizer is the block `O(1, n) x {1}`; the boundary
//! sphere is the equator `{ xi_n = 0 }` and Klein-model coordinates are the
//! first `n` entries of `xi`. All verdicts that depend on a depth or a grid
//! resolution say so: finite data gives one-sided evidence, never a proof of
//! density.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
// resolves float math in no_std builds; shadowed when std is in the crate graph
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::group::{kak, lorentz_check, GroupElement, LorentzForm};
use crate::mat::{vecn, Mat};
use crate::sphere::{act, basepoint, round_distance, SpherePoint};

/// Matrix distance below which two canonical representatives are merged.
pub const DEDUP_TOL: f64 = 1e-8;

/// Hyperbolic distance from the basepoint beyond which orbit points are
/// projected to the boundary.
pub const ORBIT_CUTOFF: f64 = 8.0;

/// A finite generating set; inverses are added automatically.
#[derive(Debug, Clone)]
pub struct GroupPresentation {
    generators: Vec<GroupElement>,
    labels: Vec<String>,
    n: usize,
}

impl GroupPresentation {
    pub fn new(generators: Vec<GroupElement>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != generators.len() {
            return Err(Error::InvalidParameter("one label per generator".into()));
        }
        let n = generators.first().map(|g| g.n()).unwrap_or(2);
        for g in &generators {
            if g.n() != n {
                return Err(Error::DimensionMismatch { expected: n + 2, got: g.n() + 2 });
            }
            let (ok, res) = lorentz_check(g.mat())?;
            if !ok {
                return Err(Error::NotInGroup { residual: res });
            }
            if g.projective_dist(&GroupElement::identity(n)) < DEDUP_TOL {
                return Err(Error::InvalidParameter("generator equals the identity".into()));
            }
        }
        Ok(GroupPresentation { generators, labels, n })
    }

    /// The trivial group (no generators) in model dimension `n`.
    pub fn trivial(n: usize) -> Self {
        GroupPresentation { generators: vec![], labels: vec![], n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn is_trivial(&self) -> bool {
        self.generators.is_empty()
    }

    /// Generators followed by their inverses; letter `i + count` inverts
    /// letter `i`.
    pub fn alphabet(&self) -> Vec<GroupElement> {
        let mut out = self.generators.clone();
        out.extend(self.generators.iter().map(|g| g.inverse().canonicalize()));
        out
    }
}

/// Breadth-first enumeration of reduced words up to a length.
#[derive(Debug, Clone)]
pub struct WordBall {
    /// Canonical representatives in BFS order, identity first.
    pub elements: Vec<GroupElement>,
    /// Letter sequences matching `elements` (alphabet indices).
    pub words: Vec<Vec<usize>>,
    /// Number of reduced words merged by the matrix dedup; nonzero counts
    /// witness relations in the presentation.
    pub collisions: usize,
}

/// Two-grid quantization so that matrices within [`DEDUP_TOL`] always share
/// at least one key.
fn dedup_keys(m: &Mat) -> (Vec<i64>, Vec<i64>) {
    const Q: f64 = 1e-4;
    let a = m.data.iter().map(|v| (v / Q).floor() as i64).collect();
    let b = m.data.iter().map(|v| (v / Q + 0.5).floor() as i64).collect();
    (a, b)
}

/// All reduced products of at most `max_len` generators, deduplicated by
/// canonical-representative distance, breadth-first and deterministic.
pub fn word_ball(g: &GroupPresentation, max_len: usize, budget: usize) -> Result<WordBall> {
    let n = g.n();
    let alphabet = g.alphabet();
    let letters = alphabet.len();
    let inverse_of = |letter: usize| (letter + g.generators.len()) % letters.max(1);

    let mut elements: Vec<GroupElement> = vec![GroupElement::identity(n)];
    let mut words: Vec<Vec<usize>> = vec![vec![]];
    let mut collisions = 0usize;
    let mut index: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    let (k1, k2) = dedup_keys(elements[0].mat());
    index.insert(k1, vec![0]);
    index.entry(k2).or_default().push(0);

    let mut frontier: Vec<usize> = vec![0];
    for _level in 1..=max_len {
        let mut next = Vec::new();
        for &widx in &frontier {
            let last_letter = words[widx].last().copied();
            for letter in 0..letters {
                if let Some(last) = last_letter {
                    if inverse_of(last) == letter {
                        continue; // free reduction
                    }
                }
                let cand = elements[widx].mul(&alphabet[letter]).canonicalize();
                let (ka, kb) = dedup_keys(cand.mat());
                let mut dup = false;
                for key in [&ka, &kb] {
                    if let Some(ids) = index.get(key) {
                        for &i in ids {
                            if cand.projective_dist(&elements[i]) < DEDUP_TOL {
                                dup = true;
                                break;
                            }
                        }
                    }
                    if dup {
                        break;
                    }
                }
                if dup {
                    collisions += 1;
                    continue;
                }
                if elements.len() >= budget {
                    return Err(Error::BudgetExceeded { limit: budget });
                }
                let mut w = words[widx].clone();
                w.push(letter);
                let id = elements.len();
                elements.push(cand);
                words.push(w);
                index.entry(ka).or_default().push(id);
                index.entry(kb).or_default().push(id);
                next.push(id);
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    Ok(WordBall { elements, words, collisions })
}

/// How a limit-set approximation was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitSetMethod {
    /// Orbit of the hemisphere center, far points projected radially to the
    /// equator.
    OrbitAccumulation,
    /// Attracting fixed points of loxodromic words.
    LoxodromicFixedPoints,
}

/// A finite approximation of the limit set on the equator sphere.
#[derive(Debug, Clone)]
pub struct LimitSetApprox {
    /// Points on the boundary sphere `{ xi_n = 0 }`; may be empty for
    /// trivial or elliptic-only groups.
    pub points: Vec<SpherePoint>,
    pub method: LimitSetMethod,
    pub depth: usize,
    pub warning: Option<String>,
}

impl LimitSetApprox {
    /// Largest nearest-neighbour gap inside the sample; a resolution scale.
    pub fn covering_radius_estimate(&self) -> f64 {
        if self.points.len() < 2 {
            return core::f64::consts::PI;
        }
        let mut worst = 0.0f64;
        for (i, p) in self.points.iter().enumerate() {
            let mut best = f64::INFINITY;
            for (j, q) in self.points.iter().enumerate() {
                if i != j {
                    best = best.min(round_distance(p, q));
                }
            }
            worst = worst.max(best);
        }
        worst
    }
}

/// Checks that a generator stabilizes the upper hemisphere: the embedded
/// matrix must fix the last ambient coordinate.
fn preserves_hemisphere(g: &GroupElement) -> bool {
    let d = g.n() + 2;
    let m = g.mat();
    for j in 0..d {
        let want_row = if j == d - 1 { 1.0 } else { 0.0 };
        if (m[(d - 1, j)] - want_row).abs() > 1e-9 {
            return false;
        }
        if (m[(j, d - 1)] - want_row).abs() > 1e-9 {
            return false;
        }
    }
    true
}

/// Attracting fixed point of a loxodromic element, by power iteration on the
/// squared-up matrix (the dominant eigenvector of an `O(1, n+1)` matrix with
/// spectral radius > 1 spans a null line).
pub fn attracting_fixed_point(g: &GroupElement) -> Result<SpherePoint> {
    let d = g.n() + 2;
    // squaring sharpens the spectral gap; e^t stays comfortably inside f64
    let mut pow = g.mat().clone();
    for _ in 0..6 {
        let next = pow.mul(&pow);
        if next.norm_inf() > 1e100 {
            break;
        }
        pow = next;
    }
    let mut v: Vec<f64> = (0..d).map(|i| 1.0 / ((i + 2) as f64).sqrt()).collect();
    for _ in 0..200 {
        let mut w = pow.mul_vec(&v);
        let nn = vecn::norm(&w);
        if nn < 1e-300 {
            return Err(Error::InvalidParameter("power iteration collapsed".into()));
        }
        for x in w.iter_mut() {
            *x /= nn;
        }
        if vecn::dist(&w, &v) < 1e-15 || vecn::dist(&vecn::scale(&w, -1.0), &v) < 1e-15 {
            v = w;
            break;
        }
        v = w;
    }
    // validate: v is an eigenvector of g itself (residual scaled by the
    // matrix magnitude, which bounds the attainable float accuracy)
    let gv = g.mat().mul_vec(&v);
    let lam = vecn::dot(&gv, &v);
    let res = vecn::dist(&gv, &vecn::scale(&v, lam));
    if res > 1e-8 * (1.0 + g.mat().norm_inf()) || lam.abs() <= 1.0 + 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "element is not loxodromic (eigen residual {res:e}, |lambda| {})",
            lam.abs()
        )));
    }
    if v[0].abs() < 1e-12 {
        return Err(Error::InvalidParameter("dominant direction is not null".into()));
    }
    let xi: Vec<f64> = v[1..].iter().map(|x| x / v[0]).collect();
    SpherePoint::from_unnormalized(&xi)
}

/// Limit-set approximation at the given word-ball depth.
///
/// Requires every generator to stabilize the hemisphere. Trivial groups give
/// an empty set; generating sets with no loxodromic words give an empty set
/// with a warning under [`LimitSetMethod::LoxodromicFixedPoints`].
pub fn limit_set(
    g: &GroupPresentation,
    depth: usize,
    method: LimitSetMethod,
    budget: usize,
) -> Result<LimitSetApprox> {
    let n = g.n();
    for gen in g.generators() {
        if !preserves_hemisphere(gen) {
            return Err(Error::InvalidParameter(
                "generator does not stabilize the hemisphere fixture".into(),
            ));
        }
    }
    if g.is_trivial() {
        return Ok(LimitSetApprox {
            points: vec![],
            method,
            depth,
            warning: Some("trivial group: empty limit set".into()),
        });
    }
    let ball = word_ball(g, depth, budget)?;
    let mut points: Vec<SpherePoint> = Vec::new();
    let mut warning = None;
    match method {
        LimitSetMethod::OrbitAccumulation => {
            let o = basepoint(n);
            let cutoff = 1.0 / ORBIT_CUTOFF.cosh();
            for w in &ball.elements {
                let p = act(w, &o);
                let height = p.xi()[n];
                if height < cutoff {
                    // Klein coordinates are the equator components; radial
                    // projection drops the height
                    let mut y = p.xi()[..n].to_vec();
                    if let Some(u) = vecn::normalize(&y) {
                        y = u;
                    } else {
                        continue;
                    }
                    let mut xi = y;
                    xi.push(0.0);
                    points.push(SpherePoint::new(xi)?);
                }
            }
            if points.is_empty() {
                warning = Some(format!(
                    "no orbit point left the cutoff ball at depth {depth}; \
                     the group may be elliptic or the depth too small"
                ));
            }
        }
        LimitSetMethod::LoxodromicFixedPoints => {
            for (w, _word) in ball.elements.iter().zip(ball.words.iter()).skip(1) {
                let dec = kak(w)?;
                if dec.t < 0.05 {
                    continue;
                }
                if let Ok(p) = attracting_fixed_point(w) {
                    points.push(p);
                }
            }
            if points.is_empty() {
                warning = Some(format!(
                    "no loxodromic word at depth {depth}; elliptic-only generators?"
                ));
            }
        }
    }
    // enforce the boundary invariant and deduplicate
    let mut clean: Vec<SpherePoint> = Vec::new();
    for p in points {
        if p.xi()[n].abs() > 1e-9 {
            return Err(Error::InvalidParameter(
                "limit point off the boundary sphere".into(),
            ));
        }
        let mut xi = p.xi().to_vec();
        xi[n] = 0.0;
        let p = SpherePoint::from_unnormalized(&xi)?;
        if clean.iter().all(|q| round_distance(q, &p) > 1e-9) {
            clean.push(p);
        }
    }
    Ok(LimitSetApprox { points: clean, method, depth, warning })
}

/// Density verdict for a limit set on the equator sphere.
#[derive(Debug, Clone)]
pub struct DensityReport {
    /// Every grid cell lies within `eps` of a limit point.
    pub dense: bool,
    pub eps: f64,
    /// Worst grid-to-set distance found.
    pub max_min_distance: f64,
    /// Center of the largest empty cap found.
    pub gap_center: SpherePoint,
    /// Radius of that empty cap (equals `max_min_distance`).
    pub gap_radius: f64,
    /// Diameter `2 * gap_radius`, the reported gap angle.
    pub gap_angle: f64,
    pub grid_size: usize,
    /// Density at resolution eps is one-sided evidence, not a proof.
    pub caveat: &'static str,
}

/// Grid on the equator sphere `{ xi_n = 0 }` with spacing about `eps / 2`.
fn equator_grid(n: usize, eps: f64) -> Result<Vec<SpherePoint>> {
    match n {
        2 => {
            let m = ((core::f64::consts::TAU / (eps / 2.0)).ceil() as usize).max(8);
            Ok((0..m)
                .map(|i| {
                    let a = core::f64::consts::TAU * i as f64 / m as f64;
                    SpherePoint::new(vec![a.cos(), a.sin(), 0.0]).expect("unit")
                })
                .collect())
        }
        3 => {
            // Fibonacci sphere; N chosen so the covering radius is well
            // below eps / 2
            let m = ((60.0 / (eps * eps)).ceil() as usize).max(32);
            let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
            Ok((0..m)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let a = core::f64::consts::TAU * (i as f64 / golden).fract();
                    SpherePoint::new(vec![r * a.cos(), r * a.sin(), z, 0.0]).expect("unit")
                })
                .collect())
        }
        _ => Err(Error::InvalidParameter(format!(
            "density grids available for model dimensions 2 and 3, got {n}"
        ))),
    }
}

/// Covers the equator with a grid of spacing `eps/2` and reports whether
/// every cell is within `eps` of a limit point, plus the largest empty cap.
pub fn density_report(lam: &LimitSetApprox, n: usize, eps: f64) -> Result<DensityReport> {
    let grid = equator_grid(n, eps)?;
    let mut worst = -1.0f64;
    let mut worst_center = grid[0].clone();
    for gpt in &grid {
        let mut best = core::f64::consts::PI;
        for p in &lam.points {
            let d = round_distance(gpt, p);
            if d < best {
                best = d;
            }
        }
        if best > worst {
            worst = best;
            worst_center = gpt.clone();
        }
    }
    Ok(DensityReport {
        dense: worst <= eps,
        eps,
        max_min_distance: worst,
        gap_center: worst_center,
        gap_radius: worst,
        gap_angle: 2.0 * worst,
        grid_size: grid.len(),
        caveat: "epsilon-density of a finite sample is one-sided evidence for a dense limit set",
    })
}

/// The built-in quotients whose maximality criteria are implemented.
#[derive(Debug, Clone)]
pub enum OmegaFixture {
    /// Upper hemisphere (hyperbolic space); criterion: the limit set fills
    /// the equator.
    Hemisphere,
    /// Sphere minus the basepoint (Euclidean space); criterion: the group is
    /// nontrivial (it fixes the deleted point, so no larger open set carries
    /// a free action).
    SphereMinusPoint,
    /// Sphere minus a round `(m-1)`-sphere (the span of the first `m`
    /// equator coordinates); criterion: the generators fix the boundary
    /// sphere pointwise and the group is nontrivial.
    SphereMinusSphere { m: usize },
}

/// Maximality verdict; every variant records the resolution or depth of the
/// evidence behind it.
#[derive(Debug, Clone)]
pub enum MaximalityVerdict {
    /// Hemisphere criterion satisfied at resolution `eps` and depth `depth`.
    MaximalAtResolution { eps: f64, depth: usize },
    /// Criterion satisfied exactly (pointwise checks).
    Maximal { reason: String },
    NotMaximal { reason: String, gap: Option<DensityReport> },
}

impl MaximalityVerdict {
    pub fn is_maximal(&self) -> bool {
        !matches!(self, MaximalityVerdict::NotMaximal { .. })
    }
}

/// Deterministic sample of the boundary `(m-1)`-sphere of the
/// sphere-minus-sphere fixture.
pub fn boundary_sphere_sample(n: usize, m: usize, count: usize) -> Result<Vec<SpherePoint>> {
    if m < 1 || m > n {
        return Err(Error::InvalidParameter(format!("need 1 <= m <= n, got m = {m}")));
    }
    if m == 1 {
        // a 0-sphere: two points
        let mut a = vec![0.0; n + 1];
        a[0] = 1.0;
        let b = vecn::scale(&a, -1.0);
        return Ok(vec![SpherePoint::new(a)?, SpherePoint::new(b)?]);
    }
    let mut rng = crate::rng::SplitMix64::new(0x5eed_b0a7);
    (0..count)
        .map(|_| {
            let u = rng.unit_vector(m);
            let mut xi = vec![0.0; n + 1];
            xi[..m].copy_from_slice(&u);
            SpherePoint::new(xi)
        })
        .collect()
}

/// Maximality verdict for a presentation acting on one of the built-in
/// fixtures.
pub fn maximality_verdict(
    g: &GroupPresentation,
    fixture: &OmegaFixture,
    eps: f64,
    depth: usize,
    budget: usize,
) -> Result<MaximalityVerdict> {
    let n = g.n();
    match fixture {
        OmegaFixture::Hemisphere => {
            let lam = limit_set(g, depth, LimitSetMethod::OrbitAccumulation, budget)?;
            let report = density_report(&lam, n, eps)?;
            if report.dense {
                Ok(MaximalityVerdict::MaximalAtResolution { eps, depth })
            } else {
                Ok(MaximalityVerdict::NotMaximal {
                    reason: format!(
                        "limit set misses the equator: empty cap of angle {:.4} rad at depth {depth}",
                        report.gap_angle
                    ),
                    gap: Some(report),
                })
            }
        }
        OmegaFixture::SphereMinusPoint => {
            let o = basepoint(n);
            for (gen, label) in g.generators().iter().zip(g.labels()) {
                if round_distance(&act(gen, &o), &o) > 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "generator {label} does not fix the deleted point"
                    )));
                }
            }
            if g.is_trivial() {
                Ok(MaximalityVerdict::NotMaximal {
                    reason: "trivial group: the conformal Euclidean space extends to the sphere"
                        .into(),
                    gap: None,
                })
            } else {
                Ok(MaximalityVerdict::Maximal {
                    reason: "nontrivial group fixes the deleted point, so the action is free \
                             on no larger open set"
                        .into(),
                })
            }
        }
        OmegaFixture::SphereMinusSphere { m } => {
            let sample = boundary_sphere_sample(n, *m, 64)?;
            for (gen, label) in g.generators().iter().zip(g.labels()) {
                for pt in &sample {
                    let moved = round_distance(&act(gen, pt), pt);
                    if moved > 1e-9 {
                        return Ok(MaximalityVerdict::NotMaximal {
                            reason: format!(
                                "generator {label} moves a boundary point by {moved:.3e}; \
                                 the pointwise-fixing criterion fails"
                            ),
                            gap: None,
                        });
                    }
                }
            }
            if g.is_trivial() {
                Ok(MaximalityVerdict::NotMaximal {
                    reason: "trivial group: the complement of a small sphere embeds strictly"
                        .into(),
                    gap: None,
                })
            } else {
                Ok(MaximalityVerdict::Maximal {
                    reason: format!(
                        "every generator fixes the boundary {}-sphere pointwise",
                        m - 1
                    ),
                })
            }
        }
    }
}

/// Limits of a simply diverging sequence.
#[derive(Debug, Clone)]
pub struct SimpleDivergence {
    pub l1: GroupElement,
    pub l2: GroupElement,
    /// KAK translation lengths along the schedule.
    pub t: Vec<f64>,
    /// `l1 . p_plus` where `p_plus` is the attracting fixed point of the
    /// boost axis (the basepoint `o` under the fixed convention).
    pub p_plus: SpherePoint,
    /// `l2^{-1} . p_minus` with `p_minus` the repelling fixed point.
    pub p_minus: SpherePoint,
}

#[derive(Debug, Clone)]
pub enum SimpleDivergenceOutcome {
    Simple(SimpleDivergence),
    /// KAK factors did not stabilize: pass a subsequence.
    NotSimple { variation: f64 },
}

/// Runs the KAK convention over a diverging sequence and extracts the limit
/// `K`-factors when they stabilize (tail variation below `1e-6`).
pub fn simple_divergence(seq: &[GroupElement]) -> Result<SimpleDivergenceOutcome> {
    if seq.len() < 4 {
        return Err(Error::InvalidParameter("need at least 4 elements".into()));
    }
    let n = seq[0].n();
    let decs: Vec<_> = seq.iter().map(kak).collect::<Result<Vec<_>>>()?;
    let ts: Vec<f64> = decs.iter().map(|d| d.t).collect();
    let m = ts.len();
    let increasing = ts.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    if !(increasing && ts[m - 1] > 3.0) {
        return Err(Error::NonDivergent);
    }
    let tail = &decs[m - 4..];
    let var1 = tail
        .iter()
        .map(|d| d.k1.projective_dist(&tail[3].k1))
        .fold(0.0f64, f64::max);
    let var2 = tail
        .iter()
        .map(|d| d.k2.projective_dist(&tail[3].k2))
        .fold(0.0f64, f64::max);
    let variation = var1.max(var2);
    if variation > 1e-6 {
        return Ok(SimpleDivergenceOutcome::NotSimple { variation });
    }
    let l1 = tail[3].k1.clone();
    let l2 = tail[3].k2.clone();
    let o = basepoint(n);
    let p_plus = act(&l1, &o);
    let p_minus = act(&l2.inverse(), &o.antipode());
    Ok(SimpleDivergenceOutcome::Simple(SimpleDivergence { l1, l2, t: ts, p_plus, p_minus }))
}

/// A point of the projective model `RP^n`, stored as a sign-canonical unit
/// vector of `R^{n+1}`.
#[derive(Debug, Clone)]
pub struct ProjectivePoint {
    w: Vec<f64>,
}

impl ProjectivePoint {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        let mut u = vecn::normalize(&w).ok_or(Error::ZeroVector)?;
        for v in u.clone() {
            if v.abs() > 1e-12 {
                if v < 0.0 {
                    u = vecn::scale(&u, -1.0);
                }
                break;
            }
        }
        Ok(ProjectivePoint { w: u })
    }

    pub fn coords(&self) -> &[f64] {
        &self.w
    }

    /// Value of the `(1, n)` form `-w_0^2 + |w_rest|^2`.
    pub fn q(&self) -> f64 {
        let f = LorentzForm::new(self.w.len() - 2);
        f.pair(&self.w, &self.w)
    }
}

/// The tangent hyperplane to the isotropic cone at a boundary point of the
/// projective hyperbolic model, with its side test on the double cover.
#[derive(Debug, Clone)]
pub struct SigmaHyperplane {
    /// Representative `u_x` with positive first coordinate, so the lifted
    /// positive cone of the model pairs strictly negative.
    pub normal: Vec<f64>,
}

impl SigmaHyperplane {
    /// `x` must be `q`-isotropic within 1e-9.
    pub fn at(x: &ProjectivePoint) -> Result<Self> {
        if x.q().abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "point is not isotropic: q = {:e}",
                x.q()
            )));
        }
        let mut u = x.coords().to_vec();
        if u[0] < 0.0 {
            u = vecn::scale(&u, -1.0);
        }
        if u[0].abs() < 1e-12 {
            return Err(Error::InvalidParameter("isotropic vector with null time part".into()));
        }
        Ok(SigmaHyperplane { normal: u })
    }

    /// The defining functional `v -> <v, u_x>_q` on the double cover.
    pub fn value(&self, v: &[f64]) -> f64 {
        -v[0] * self.normal[0] + vecn::dot(&v[1..], &self.normal[1..])
    }

    /// Side of the hyperplane on the sphere double cover: -1 is the side of
    /// the lifted model, +1 the complement side, 0 on the hyperplane.
    pub fn side(&self, v: &[f64], tol: f64) -> i8 {
        let val = self.value(v);
        if val.abs() <= tol {
            0
        } else if val < 0.0 {
            -1
        } else {
            1
        }
    }
}

/// Properness/freeness probe at a finite depth. Passing is evidence at the
/// stated depth, not a proof.
#[derive(Debug, Clone)]
pub struct PropernessReport {
    pub depth: usize,
    /// First violation found: indices of the word and sample point, with the
    /// displacement.
    pub free_violation: Option<(usize, usize, f64)>,
    /// Largest number of words sending one sample `eps`-ball near another.
    pub max_pair_count: usize,
    pub words_checked: usize,
    pub caveat: &'static str,
}

impl PropernessReport {
    pub fn free_at_depth(&self) -> bool {
        self.free_violation.is_none()
    }
}

/// Checks that no nontrivial word at the given depth nearly fixes a sample
/// point, and counts words carrying one sample ball into another.
pub fn properness_probe(
    g: &GroupPresentation,
    omega_sample: &[SpherePoint],
    depth: usize,
    eps: f64,
    fix_tol: f64,
    budget: usize,
) -> Result<PropernessReport> {
    let ball = word_ball(g, depth, budget)?;
    let mut free_violation = None;
    'outer: for (wi, w) in ball.elements.iter().enumerate().skip(1) {
        for (pi, p) in omega_sample.iter().enumerate() {
            let moved = round_distance(&act(w, p), p);
            if moved < fix_tol {
                free_violation = Some((wi, pi, moved));
                break 'outer;
            }
        }
    }
    let mut max_pair_count = 0usize;
    if !omega_sample.is_empty() {
        let mut counts = vec![0usize; omega_sample.len() * omega_sample.len()];
        for w in ball.elements.iter() {
            let images: Vec<SpherePoint> = omega_sample.iter().map(|p| act(w, p)).collect();
            for (i, img) in images.iter().enumerate() {
                for (j, q) in omega_sample.iter().enumerate() {
                    if round_distance(img, q) < 2.0 * eps {
                        counts[i * omega_sample.len() + j] += 1;
                    }
                }
            }
        }
        max_pair_count = counts.into_iter().max().unwrap_or(0);
    }
    Ok(PropernessReport {
        depth,
        free_violation,
        max_pair_count,
        words_checked: ball.elements.len(),
        caveat: "finite-depth probe: passing is evidence at this depth, not a proof",
    })
}

/// Fixture constructions shared by tests, the acceptance suite and the
/// scenario runner.
pub mod fixtures {
    use super::*;
    use crate::group::compact_element;

    /// Lift of `SL(2, R)` acting on symmetric matrices to `SO(1, 2)`,
    /// embedded in `O(1, n+1)` on the ambient coordinates `(w_0, w_1, w_2)`.
    pub fn sl2_to_group(n: usize, m: [[f64; 2]; 2]) -> Result<GroupElement> {
        // symmetric basis s0 = id, s1 = diag(1,-1), s2 = offdiag; the
        // determinant form is x0^2 - x1^2 - x2^2
        let conj = |s: [[f64; 2]; 2]| -> [[f64; 2]; 2] {
            let ms = [
                [
                    m[0][0] * s[0][0] + m[0][1] * s[1][0],
                    m[0][0] * s[0][1] + m[0][1] * s[1][1],
                ],
                [
                    m[1][0] * s[0][0] + m[1][1] * s[1][0],
                    m[1][0] * s[0][1] + m[1][1] * s[1][1],
                ],
            ];
            [
                [
                    ms[0][0] * m[0][0] + ms[0][1] * m[0][1],
                    ms[0][0] * m[1][0] + ms[0][1] * m[1][1],
                ],
                [
                    ms[1][0] * m[0][0] + ms[1][1] * m[0][1],
                    ms[1][0] * m[1][0] + ms[1][1] * m[1][1],
                ],
            ]
        };
        let basis = [[[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, -1.0]], [[0.0, 1.0], [1.0, 0.0]]];
        let mut block = Mat::zeros(3, 3);
        for (j, s) in basis.iter().enumerate() {
            let t = conj(*s);
            block[(0, j)] = 0.5 * (t[0][0] + t[1][1]);
            block[(1, j)] = 0.5 * (t[0][0] - t[1][1]);
            block[(2, j)] = t[0][1];
        }
        let d = n + 2;
        let mut out = Mat::identity(d);
        for i in 0..3 {
            for j in 0..3 {
                out[(i, j)] = block[(i, j)];
            }
        }
        GroupElement::new(out)
    }

    /// Loxodromic isometry of the hemisphere with attracting/repelling fixed
    /// points at the given equator angles and translation length `t`.
    pub fn loxodromic(n: usize, attract: f64, repel: f64, t: f64) -> Result<GroupElement> {
        // boundary angle theta corresponds to the projective direction
        // (cos theta/2, sin theta/2)
        let va = [(attract / 2.0).cos(), (attract / 2.0).sin()];
        let vr = [(repel / 2.0).cos(), (repel / 2.0).sin()];
        let det = va[0] * vr[1] - va[1] * vr[0];
        if det.abs() < 1e-9 {
            return Err(Error::InvalidParameter("fixed points coincide".into()));
        }
        let (ea, er) = ((t / 2.0).exp(), (-t / 2.0).exp());
        // m = v (diag) v^{-1}
        let vinv = [[vr[1] / det, -vr[0] / det], [-va[1] / det, va[0] / det]];
        let m = [
            [
                ea * va[0] * vinv[0][0] + er * vr[0] * vinv[1][0],
                ea * va[0] * vinv[0][1] + er * vr[0] * vinv[1][1],
            ],
            [
                ea * va[1] * vinv[0][0] + er * vr[1] * vinv[1][0],
                ea * va[1] * vinv[0][1] + er * vr[1] * vinv[1][1],
            ],
        ];
        sl2_to_group(n, m)
    }

    /// Two-generator Schottky group on the equator circle: generators pair
    /// caps around the four fixed points `0, pi, pi/2, 3pi/2`.
    pub fn schottky_pair(n: usize, t: f64) -> Result<GroupPresentation> {
        let g1 = loxodromic(n, 0.0, core::f64::consts::PI, t)?;
        let g2 = loxodromic(n, core::f64::consts::FRAC_PI_2, 1.5 * core::f64::consts::PI, t)?;
        GroupPresentation::new(vec![g1, g2], vec!["a".into(), "b".into()])
    }

    /// Chart translation by `v` (a parabolic fixing the basepoint, used on
    /// the sphere-minus-point fixture).
    pub fn translation_group(v: &[f64]) -> Result<GroupPresentation> {
        let p = crate::group::ParabolicElement::translation(v);
        GroupPresentation::new(vec![p.to_group()], vec!["t".into()])
    }

    /// Rotation acting only on the ambient coordinates orthogonal to the
    /// boundary `(m-1)`-sphere; fixes that sphere pointwise.
    pub fn boundary_fixing_rotation(n: usize, m: usize, angle: f64) -> Result<GroupPresentation> {
        if n + 1 - m < 2 {
            return Err(Error::InvalidParameter(
                "need at least a 2-plane orthogonal to the boundary sphere".into(),
            ));
        }
        let mut q = Mat::identity(n + 1);
        let (c, s) = (angle.cos(), angle.sin());
        let (i, j) = (m, m + 1);
        q[(i, i)] = c;
        q[(i, j)] = -s;
        q[(j, i)] = s;
        q[(j, j)] = c;
        GroupPresentation::new(vec![compact_element(&q)?], vec!["r".into()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{boost, compact_element, random_rotation};
    use crate::rng::SplitMix64;
    use crate::sphere::hausdorff;
    use crate::sphere::SampledSet;

    const BUDGET: usize = 300_000;

    #[test]
    fn word_ball_of_trivial_group() {
        let g = GroupPresentation::trivial(2);
        let ball = word_ball(&g, 0, BUDGET).unwrap();
        assert_eq!(ball.elements.len(), 1);
        assert_eq!(ball.words, vec![Vec::<usize>::new()]);
    }

    #[test]
    fn word_ball_counts_free_group() {
        // free group on 2 generators, length 3: 1 + 4 + 12 + 36 = 53
        let g = fixtures::schottky_pair(2, 4.0).unwrap();
        let ball = word_ball(&g, 3, BUDGET).unwrap();
        assert_eq!(ball.elements.len(), 53);
        assert_eq!(ball.collisions, 0);
    }

    #[test]
    fn word_ball_counts_cyclic_group() {
        let g = GroupPresentation::new(
            vec![fixtures::loxodromic(2, 0.0, core::f64::consts::PI, 1.0).unwrap()],
            vec!["g".into()],
        )
        .unwrap();
        let ball = word_ball(&g, 5, BUDGET).unwrap();
        assert_eq!(ball.elements.len(), 11); // powers -5..5
    }

    #[test]
    fn word_ball_is_deterministic() {
        let g = fixtures::schottky_pair(2, 4.0).unwrap();
        let a = word_ball(&g, 4, BUDGET).unwrap();
        let b = word_ball(&g, 4, BUDGET).unwrap();
        assert_eq!(a.elements.len(), b.elements.len());
        for (x, y) in a.elements.iter().zip(b.elements.iter()) {
            assert_eq!(x.mat().data, y.mat().data);
        }
        assert_eq!(a.words, b.words);
    }

    #[test]
    fn word_ball_budget() {
        let g = fixtures::schottky_pair(2, 4.0).unwrap();
        assert!(matches!(word_ball(&g, 8, 100), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn loxodromic_fixture_has_prescribed_fixed_points() {
        let th = 0.7;
        let g = fixtures::loxodromic(2, th, th + core::f64::consts::PI, 2.0).unwrap();
        let p = attracting_fixed_point(&g).unwrap();
        let want = SpherePoint::new(vec![th.cos(), th.sin(), 0.0]).unwrap();
        assert!(round_distance(&p, &want) < 1e-9, "{:?}", p.xi());
        // repelling fixed point of g = attracting of g^{-1}
        let q = attracting_fixed_point(&g.inverse()).unwrap();
        let want_r =
            SpherePoint::new(vec![(th + core::f64::consts::PI).cos(), (th + core::f64::consts::PI).sin(), 0.0])
                .unwrap();
        assert!(round_distance(&q, &want_r) < 1e-9);
    }

    #[test]
    fn limit_set_of_trivial_group_is_empty() {
        let g = GroupPresentation::trivial(2);
        let lam = limit_set(&g, 4, LimitSetMethod::OrbitAccumulation, BUDGET).unwrap();
        assert!(lam.points.is_empty());
        assert!(lam.warning.is_some());
    }

    #[test]
    fn limit_set_of_cyclic_loxodromic_is_two_points() {
        let g = GroupPresentation::new(
            vec![fixtures::loxodromic(2, 0.3, 0.3 + core::f64::consts::PI, 3.0).unwrap()],
            vec!["g".into()],
        )
        .unwrap();
        let lam = limit_set(&g, 6, LimitSetMethod::LoxodromicFixedPoints, BUDGET).unwrap();
        assert_eq!(lam.points.len(), 2, "attracting + repelling");
        // cross-check against orbit accumulation
        let orbit = limit_set(&g, 6, LimitSetMethod::OrbitAccumulation, BUDGET).unwrap();
        assert!(!orbit.points.is_empty());
        let a = SampledSet::new(lam.points.clone(), 0.05).unwrap();
        let b = SampledSet::new(orbit.points.clone(), 0.05).unwrap();
        assert!(hausdorff(&a, &b).unwrap() < 1e-3);
    }

    #[test]
    fn limit_set_rejects_hemisphere_breakers() {
        // a boost moving the last coordinate does not stabilize the fixture
        let g = GroupPresentation::new(vec![boost(2, 1.0)], vec!["g".into()]).unwrap();
        assert!(limit_set(&g, 3, LimitSetMethod::OrbitAccumulation, BUDGET).is_err());
    }

    #[test]
    fn schottky_limit_set_stays_in_the_four_caps() {
        let g = fixtures::schottky_pair(2, 4.0).unwrap();
        let lam = limit_set(&g, 7, LimitSetMethod::OrbitAccumulation, BUDGET).unwrap();
        assert!(lam.points.len() > 50);
        let centers = [0.0, core::f64::consts::FRAC_PI_2, core::f64::consts::PI, 1.5 * core::f64::consts::PI];
        let cap = 0.35; // empirical cap radius for t = 4
        for p in &lam.points {
            let ang = p.xi()[1].atan2(p.xi()[0]).rem_euclid(core::f64::consts::TAU);
            let near = centers
                .iter()
                .map(|c| {
                    let d = (ang - c).abs();
                    d.min(core::f64::consts::TAU - d)
                })
                .fold(f64::INFINITY, f64::min);
            assert!(near < cap, "limit point at angle {ang} escaped the caps");
        }
    }

    #[test]
    fn limit_set_methods_agree_on_schottky() {
        let g = fixtures::schottky_pair(2, 4.0).unwrap();
        let a = limit_set(&g, 7, LimitSetMethod::OrbitAccumulation, BUDGET).unwrap();
        let b = limit_set(&g, 7, LimitSetMethod::LoxodromicFixedPoints, BUDGET).unwrap();
        let ra = a.covering_radius_estimate();
        let rb = b.covering_radius_estimate();
        let sa = SampledSet::new(a.points.clone(), ra).unwrap();
        let sb = SampledSet::new(b.points.clone(), rb).unwrap();
        let d = hausdorff(&sa, &sb).unwrap();
        assert!(d <= 3.0 * ra.max(rb), "methods disagree: {d} vs 3*{}", ra.max(rb));
    }

    #[test]
    fn limit_set_generator_stability() {
        // moderate translation lengths keep the conjugated fixed points
        // within float accuracy of the 1e-8 contract
        let g = fixtures::schottky_pair(2, 2.5).unwrap();
        let ball = word_ball(&g, 3, BUDGET).unwrap();
        let gen = &g.generators()[0];
        for w in ball.elements.iter().skip(1) {
            if kak(w).unwrap().t < 0.05 {
                continue;
            }
            if let Ok(xi) = attracting_fixed_point(w) {
                let conj = gen.mul(w).mul(&gen.inverse());
                let moved = act(gen, &xi);
                let fixed = attracting_fixed_point(&conj).unwrap();
                assert!(round_distance(&moved, &fixed) < 1e-8);
            }
        }
    }

    #[test]
    fn density_of_the_grid_itself() {
        let eps = 0.05;
        let pts = equator_grid(2, eps).unwrap();
        let lam = LimitSetApprox {
            points: pts,
            method: LimitSetMethod::OrbitAccumulation,
            depth: 0,
            warning: None,
        };
        let rep = density_report(&lam, 2, eps).unwrap();
        assert!(rep.dense);
    }

    #[test]
    fn density_of_two_points_has_pi_gap() {
        let lam = LimitSetApprox {
            points: vec![
                SpherePoint::new(vec![1.0, 0.0, 0.0]).unwrap(),
                SpherePoint::new(vec![-1.0, 0.0, 0.0]).unwrap(),
            ],
            method: LimitSetMethod::LoxodromicFixedPoints,
            depth: 1,
            warning: None,
        };
        let rep = density_report(&lam, 2, 0.2).unwrap();
        assert!(!rep.dense);
        // the grid quantizes the gap center at spacing eps/2
        assert!((rep.gap_angle - core::f64::consts::PI).abs() < 0.2, "gap {}", rep.gap_angle);
    }

    #[test]
    fn density_monotone_on_schottky_fixture() {
        let g = fixtures::schottky_pair(2, 4.0).unwrap();
        let lam = limit_set(&g, 7, LimitSetMethod::OrbitAccumulation, BUDGET).unwrap();
        let mut last_dense = false;
        for eps in [0.05, 0.1, 0.2, 0.5, 1.0, 2.0] {
            let rep = density_report(&lam, 2, eps).unwrap();
            assert!(
                rep.dense || !last_dense,
                "density must be monotone in eps (failed at {eps})"
            );
            last_dense = rep.dense;
        }
    }

    #[test]
    fn maximality_of_translation_group_on_flat_fixture() {
        let g = fixtures::translation_group(&[1.0, 0.0]).unwrap();
        let v = maximality_verdict(&g, &OmegaFixture::SphereMinusPoint, 0.1, 4, BUDGET).unwrap();
        assert!(v.is_maximal(), "{v:?}");
        let trivial = GroupPresentation::trivial(2);
        let v =
            maximality_verdict(&trivial, &OmegaFixture::SphereMinusPoint, 0.1, 4, BUDGET).unwrap();
        assert!(!v.is_maximal());
    }

    #[test]
    fn maximality_of_schottky_on_hemisphere_fails_with_gap() {
        let g = fixtures::schottky_pair(2, 4.0).unwrap();
        let v = maximality_verdict(&g, &OmegaFixture::Hemisphere, 0.1, 8, BUDGET).unwrap();
        match v {
            MaximalityVerdict::NotMaximal { gap: Some(rep), .. } => {
                // the four caps have radius ~0.35; separation pi/2 - 2*0.35
                assert!(rep.gap_angle > 0.8, "gap {}", rep.gap_angle);
            }
            other => panic!("expected a gap witness, got {other:?}"),
        }
    }

    #[test]
    fn maximality_of_trivial_group_on_hemisphere_fails() {
        let trivial = GroupPresentation::trivial(2);
        let v = maximality_verdict(&trivial, &OmegaFixture::Hemisphere, 0.3, 4, BUDGET).unwrap();
        assert!(!v.is_maximal());
    }

    #[test]
    fn maximality_of_boundary_fixing_rotations() {
        let g = fixtures::boundary_fixing_rotation(3, 2, 1.0).unwrap();
        let v =
            maximality_verdict(&g, &OmegaFixture::SphereMinusSphere { m: 2 }, 0.1, 4, BUDGET)
                .unwrap();
        assert!(v.is_maximal(), "{v:?}");
        // a generator moving the boundary sphere must fail
        let bad = GroupPresentation::new(
            vec![fixtures::loxodromic(3, 0.0, core::f64::consts::PI, 2.0).unwrap()],
            vec!["g".into()],
        )
        .unwrap();
        let v =
            maximality_verdict(&bad, &OmegaFixture::SphereMinusSphere { m: 2 }, 0.1, 4, BUDGET)
                .unwrap();
        assert!(!v.is_maximal());
    }

    #[test]
    fn simple_divergence_of_pure_boosts() {
        let n = 2;
        let seq: Vec<GroupElement> = (1..=8).map(|k| boost(n, k as f64)).collect();
        match simple_divergence(&seq).unwrap() {
            SimpleDivergenceOutcome::Simple(sd) => {
                assert!(sd.l1.projective_dist(&GroupElement::identity(n)) < 1e-8);
                assert!(sd.l2.projective_dist(&GroupElement::identity(n)) < 1e-8);
                let o = basepoint(n);
                assert!(round_distance(&sd.p_plus, &o) < 1e-9);
                assert!(round_distance(&sd.p_minus, &o.antipode()) < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn simple_divergence_of_rotated_boosts() {
        let n = 2;
        let mut rng = SplitMix64::new(21);
        let r = compact_element(&random_rotation(&mut rng, n + 1)).unwrap();
        let seq: Vec<GroupElement> = (1..=8).map(|k| r.mul(&boost(n, 0.5 * k as f64))).collect();
        match simple_divergence(&seq).unwrap() {
            SimpleDivergenceOutcome::Simple(sd) => {
                assert!(sd.l1.projective_dist(&r) < 1e-8, "l1 must be the fixed rotation");
                let o = basepoint(n);
                assert!(round_distance(&sd.p_plus, &act(&r, &o)) < 1e-9);
                // reconstruction at every index
                for (k, g) in (1..=8).zip(seq.iter()) {
                    let d = kak(g).unwrap();
                    assert!((d.t - 0.5 * k as f64).abs() < 1e-9);
                    assert!(d.reconstruct().max_abs_diff(g) < 1e-9);
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn simple_divergence_detects_alternating_rotations() {
        let n = 2;
        let th = 0.9f64;
        let mut q = Mat::identity(n + 1);
        q[(0, 0)] = th.cos();
        q[(0, 1)] = -th.sin();
        q[(1, 0)] = th.sin();
        q[(1, 1)] = th.cos();
        let r = compact_element(&q).unwrap();
        let seq: Vec<GroupElement> = (1..=8)
            .map(|k| {
                if k % 2 == 0 {
                    r.mul(&boost(n, k as f64))
                } else {
                    boost(n, k as f64)
                }
            })
            .collect();
        assert!(matches!(
            simple_divergence(&seq).unwrap(),
            SimpleDivergenceOutcome::NotSimple { .. }
        ));
    }

    #[test]
    fn simple_divergence_rejects_bounded_sequences() {
        let n = 2;
        let seq: Vec<GroupElement> = (0..6).map(|_| GroupElement::identity(n)).collect();
        assert!(matches!(simple_divergence(&seq), Err(Error::NonDivergent)));
    }

    #[test]
    fn sigma_hyperplane_tangency_and_sides() {
        let n = 2;
        // isotropic vector (1, cos, sin) on the projective model of H^2
        let th = 1.1f64;
        let x = ProjectivePoint::new(vec![1.0, th.cos(), th.sin(), 0.0]).unwrap();
        // note: projective model vectors live in R^{n+1}; embed in the
        // ambient by padding with zero, so q agrees with the (1, n+1) pairing
        let sigma = SigmaHyperplane::at(&x).unwrap();
        // vanishes at x itself (tangency / isotropy)
        assert!(sigma.value(x.coords()).abs() < 1e-12);
        // interior points of the model (timelike cone, positive time) pair
        // strictly negative
        let mut rng = SplitMix64::new(33);
        for _ in 0..200 {
            let y: Vec<f64> = (0..n + 1).map(|_| rng.uniform(-0.9, 0.9)).collect();
            let norm = vecn::norm(&y);
            if norm >= 0.95 {
                continue;
            }
            let mut v = vec![1.0];
            v.extend_from_slice(&y);
            v.push(0.0);
            assert!(sigma.value(&v) < 0.0, "interior point on the wrong side");
            assert_eq!(sigma.side(&v, 1e-12), -1);
        }
        // non-isotropic input rejected
        assert!(SigmaHyperplane::at(&ProjectivePoint::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap())
            .is_err());
    }

    #[test]
    fn properness_probe_finds_fixed_point_of_translations() {
        let g = fixtures::translation_group(&[1.0, 0.0]).unwrap();
        let o = basepoint(2);
        let rep = properness_probe(&g, &[o], 3, 0.05, 1e-6, BUDGET).unwrap();
        assert!(!rep.free_at_depth(), "the translation fixes the basepoint");
    }

    #[test]
    fn properness_probe_passes_on_schottky_domain_sample() {
        let g = fixtures::schottky_pair(2, 4.0).unwrap();
        // sample of the domain of discontinuity: equator points far from the
        // four caps, lifted slightly into the hemisphere
        let angles = [0.8, 0.8 + core::f64::consts::FRAC_PI_2];
        let mut sample = Vec::new();
        for a in angles {
            for h in [0.3, 0.7] {
                let r = (1.0f64 - h * h).sqrt();
                sample.push(SpherePoint::new(vec![r * a.cos(), r * a.sin(), h]).unwrap());
            }
        }
        let rep = properness_probe(&g, &sample, 8, 0.01, 1e-6, BUDGET).unwrap();
        assert!(rep.free_at_depth(), "violation: {:?}", rep.free_violation);
        assert!(rep.max_pair_count <= 3, "count {}", rep.max_pair_count);
    }

    #[test]
    fn properness_probe_trivial_group_vacuous() {
        let g = GroupPresentation::trivial(2);
        let o = basepoint(2);
        let rep = properness_probe(&g, &[o], 5, 0.05, 1e-6, BUDGET).unwrap();
        assert!(rep.free_at_depth());
    }
}
