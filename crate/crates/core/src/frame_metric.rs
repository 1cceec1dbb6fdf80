//! The left-invariant Riemannian metric on the group that makes the
//! Maurer-Cartan frame of the fixed Lie-algebra basis orthonormal, with path
//! lengths, an upper-bound distance optimizer, the right-multiplication
//! Jacobian identity, and Cauchy-boundary probes on punctured-sphere
//! fixtures.
//!
//! Distances are never certified: the optimizer reports upper bounds
//! (piecewise-exponential paths refined within a budget), and Cauchy-probe
//! consumers pair them with the extrinsic chordal norm for the lower side.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::group::{
    adjoint, algebra_basis, basis_coords, from_basis_coords, kak, AlgebraElement, GroupElement,
    ParabolicElement,
};
use crate::mat::{vecn, Mat};
use crate::sphere::{act, basepoint, round_distance, SpherePoint};

/// Frobenius-norm bound defining the valid transition region of a path.
pub const LOG_REGION: f64 = 0.5;

/// The parallelism metric data: the fixed orthonormal basis of the algebra.
#[derive(Debug, Clone)]
pub struct FrameMetric {
    n: usize,
    basis: Vec<AlgebraElement>,
}

impl FrameMetric {
    pub fn new(n: usize) -> Self {
        FrameMetric { n, basis: algebra_basis(n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[AlgebraElement] {
        &self.basis
    }

    /// Norm of an algebra element in the frame metric (basis coordinates).
    pub fn norm(&self, x: &AlgebraElement) -> f64 {
        vecn::norm(&basis_coords(&self.basis, x))
    }

    /// Gram matrix of the left-invariant frame `{g X_i}` at `g`, computed
    /// through a numerical inverse (a real check, not the tautology).
    pub fn gram_at(&self, g: &GroupElement) -> Result<Mat> {
        let ginv = g.mat().inverse()?;
        let m = self.dim();
        let coords: Vec<Vec<f64>> = self
            .basis
            .iter()
            .map(|x| {
                let frame_vec = g.mat().mul(x.mat());
                let pulled = AlgebraElement::from_mat_unchecked(ginv.mul(&frame_vec));
                basis_coords(&self.basis, &pulled)
            })
            .collect();
        Ok(Mat::from_fn(m, m, |i, j| vecn::dot(&coords[i], &coords[j])))
    }

    /// Length of one transition `g -> h`, `|log(g^{-1} h)|` in the frame.
    pub fn step_length(&self, g: &GroupElement, h: &GroupElement) -> Result<f64> {
        let t = g.inverse().mul(h);
        let delta = t.mat().sub(&Mat::identity(self.n + 2)).norm();
        if delta > LOG_REGION {
            return Err(Error::TransitionTooLarge { norm: delta });
        }
        let x = AlgebraElement::from_mat_unchecked(t.mat().logm()?);
        Ok(self.norm(&x))
    }
}

/// A discretized path in the group; consecutive nodes must stay within the
/// matrix-log convergence region.
#[derive(Debug, Clone)]
pub struct GroupPath {
    pub nodes: Vec<GroupElement>,
}

impl GroupPath {
    pub fn new(nodes: Vec<GroupElement>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidParameter("path needs at least one node".into()));
        }
        let d = nodes[0].n() + 2;
        for w in nodes.windows(2) {
            let t = w[0].inverse().mul(&w[1]);
            let delta = t.mat().sub(&Mat::identity(d)).norm();
            if delta > LOG_REGION {
                return Err(Error::TransitionTooLarge { norm: delta });
            }
        }
        Ok(GroupPath { nodes })
    }
}

/// Sum of transition lengths; additive under concatenation by construction.
pub fn path_length(fm: &FrameMetric, path: &GroupPath) -> Result<f64> {
    let mut total = 0.0;
    for w in path.nodes.windows(2) {
        total += fm.step_length(&w[0], &w[1])?;
    }
    Ok(total)
}

/// An upper bound on the frame-metric distance, with the realizing path.
#[derive(Debug, Clone)]
pub struct DistanceEstimate {
    pub upper_bound: f64,
    pub nodes: Vec<GroupElement>,
    pub budget: usize,
}

fn transition_log(g: &GroupElement, h: &GroupElement) -> Result<AlgebraElement> {
    let t = g.inverse().mul(h);
    Ok(AlgebraElement::from_mat_unchecked(t.mat().logm()?))
}

fn nodes_length(fm: &FrameMetric, nodes: &[GroupElement]) -> Result<f64> {
    let mut total = 0.0;
    for w in nodes.windows(2) {
        total += fm.norm(&transition_log(&w[0], &w[1])?);
    }
    Ok(total)
}

/// Seed path from `g` to `h`: the direct chord when its log exists, else the
/// interpolating KAK factorization `g -> g k1 -> g k1 a(t) -> h`.
fn seed_path(fm: &FrameMetric, g: &GroupElement, h: &GroupElement) -> Result<Vec<GroupElement>> {
    let t = g.inverse().mul(h);
    if t.mat().logm().is_ok() {
        return Ok(vec![g.clone(), h.clone()]);
    }
    let dec = kak(&t)?;
    let mut nodes = vec![g.clone()];
    let mut cur = g.clone();
    for factor in [
        dec.k1.clone(),
        crate::group::boost(fm.n, dec.t),
        dec.k2.clone(),
    ] {
        if factor.mat().max_abs_diff(&Mat::identity(fm.n + 2)) < 1e-14 {
            continue;
        }
        if factor.mat().logm().is_err() {
            return Err(Error::LogFailed);
        }
        cur = cur.mul(&factor);
        nodes.push(cur.clone());
    }
    if nodes.len() == 1 {
        nodes.push(h.clone());
    }
    Ok(nodes)
}

fn subdivide(_fm: &FrameMetric, nodes: &[GroupElement]) -> Result<Vec<GroupElement>> {
    let mut out = Vec::with_capacity(nodes.len() * 2 - 1);
    for w in nodes.windows(2) {
        let x = transition_log(&w[0], &w[1])?;
        let mid = w[0].mul(&AlgebraElement::from_mat_unchecked(x.mat().scale(0.5)).exp());
        out.push(w[0].clone());
        out.push(mid);
    }
    out.push(nodes.last().unwrap().clone());
    Ok(out)
}

/// One coordinate-descent sweep over interior nodes; accepts only strict
/// improvements, so the total length never increases.
fn descent_sweep(fm: &FrameMetric, nodes: &mut [GroupElement]) -> Result<()> {
    let m = fm.dim();
    let fd = 1e-4;
    for j in 1..nodes.len() - 1 {
        let local = |v: &GroupElement| -> Result<f64> {
            Ok(fm.norm(&transition_log(&nodes[j - 1], v)?)
                + fm.norm(&transition_log(v, &nodes[j + 1])?))
        };
        let base = local(&nodes[j])?;
        let mut grad = vec![0.0; m];
        for i in 0..m {
            let dx = &fm.basis()[i];
            let plus = nodes[j].mul(&AlgebraElement::from_mat_unchecked(dx.mat().scale(fd)).exp());
            let minus =
                nodes[j].mul(&AlgebraElement::from_mat_unchecked(dx.mat().scale(-fd)).exp());
            grad[i] = (local(&plus)? - local(&minus)?) / (2.0 * fd);
        }
        let gnorm = vecn::norm(&grad);
        if gnorm < 1e-12 {
            continue;
        }
        let mut step = 0.25 * base.max(1e-6) / gnorm;
        for _ in 0..8 {
            let dir = from_basis_coords(fm.basis(), &vecn::scale(&grad, -step));
            let cand = nodes[j].mul(&dir.exp());
            if let Ok(val) = local(&cand) {
                if val < base - 1e-15 {
                    nodes[j] = cand;
                    break;
                }
            }
            step *= 0.5;
        }
    }
    Ok(())
}

fn optimize_one_direction(
    fm: &FrameMetric,
    g: &GroupElement,
    h: &GroupElement,
    budget: usize,
) -> Result<DistanceEstimate> {
    let mut nodes = seed_path(fm, g, h)?;
    let mut best_len = nodes_length(fm, &nodes)?;
    let mut best_nodes = nodes.clone();
    for _cycle in 0..budget {
        if nodes.len() < 33 {
            nodes = subdivide(fm, &nodes)?;
        }
        descent_sweep(fm, &mut nodes)?;
        let len = nodes_length(fm, &nodes)?;
        if len < best_len {
            best_len = len;
            best_nodes = nodes.clone();
        }
    }
    Ok(DistanceEstimate { upper_bound: best_len, nodes: best_nodes, budget })
}

/// Upper bound on the frame-metric distance between `g` and `h`.
///
/// At budget 0 this is the chord `|log(g^{-1} h)|` (pre-subdivided through
/// the KAK factors when the direct log fails); the bound is non-increasing
/// in the budget and symmetric (both directions are optimized, min taken).
pub fn approx_distance(
    fm: &FrameMetric,
    g: &GroupElement,
    h: &GroupElement,
    budget: usize,
) -> Result<DistanceEstimate> {
    let fwd = optimize_one_direction(fm, g, h, budget)?;
    let bwd = optimize_one_direction(fm, h, g, budget)?;
    Ok(if bwd.upper_bound < fwd.upper_bound {
        let mut nodes = bwd.nodes;
        nodes.reverse();
        DistanceEstimate { upper_bound: bwd.upper_bound, nodes, budget }
    } else {
        fwd
    })
}

/// Analytic vs finite-difference Jacobian of right multiplication in the
/// orthonormal frame.
#[derive(Debug, Clone)]
pub struct JacobianCheck {
    pub analytic: Mat,
    pub finite_difference: Mat,
    pub max_abs_diff: f64,
}

/// The Jacobian of `R_p` in the frame equals the matrix of `Ad(p^{-1})`;
/// this computes both sides (central differences with the given step) and
/// returns the discrepancy.
pub fn right_jacobian_check(
    fm: &FrameMetric,
    p: &ParabolicElement,
    fd_step: f64,
) -> Result<JacobianCheck> {
    let pg = p.to_group();
    let analytic = adjoint(&pg.inverse());
    let m = fm.dim();
    let pinv = pg.inverse();
    let mut fd = Mat::zeros(m, m);
    for i in 0..m {
        let xi = &fm.basis()[i];
        let eval = |s: f64| -> Result<Vec<f64>> {
            let moved = AlgebraElement::from_mat_unchecked(xi.mat().scale(s)).exp();
            let t = pinv.mul(&moved).mul(&pg);
            let x = AlgebraElement::from_mat_unchecked(t.mat().logm()?);
            Ok(basis_coords(fm.basis(), &x))
        };
        let plus = eval(fd_step)?;
        let minus = eval(-fd_step)?;
        for j in 0..m {
            fd[(j, i)] = (plus[j] - minus[j]) / (2.0 * fd_step);
        }
    }
    let max_abs_diff = analytic.max_abs_diff(&fd);
    Ok(JacobianCheck { analytic, finite_difference: fd, max_abs_diff })
}

/// Extremal singular values of `Ad(p^{-1})` in the frame basis: `R_p` is
/// `c_max`-Lipschitz and `R_p^{-1}` is `1/c_min`-Lipschitz.
pub fn bilipschitz_of_right_action(p: &GroupElement) -> (f64, f64) {
    let ad = adjoint(&p.inverse());
    let sv = ad.singular_values();
    (sv[sv.len() - 1], sv[0])
}

/// Punctured-sphere fixtures for the Cauchy-boundary probe.
#[derive(Debug, Clone)]
pub enum BundleFixture {
    /// The bundle over the sphere minus one point: its Cauchy boundary is a
    /// single `P`-orbit, so every admissible tail pair is equivalent.
    SphereMinusPoint { deleted: SpherePoint },
    /// Two punctures: tails into different deleted fibers are inequivalent.
    SphereMinusTwoPoints { first: SpherePoint, second: SpherePoint },
}

impl BundleFixture {
    pub fn deleted_points(&self) -> Vec<&SpherePoint> {
        match self {
            BundleFixture::SphereMinusPoint { deleted } => vec![deleted],
            BundleFixture::SphereMinusTwoPoints { first, second } => vec![first, second],
        }
    }
}

/// Outcome of a Cauchy-boundary probe.
#[derive(Debug, Clone)]
pub enum CauchyVerdict {
    /// Same boundary point: the coset solve found `p` in the stabilizer and
    /// the intrinsic upper bounds between matched tail nodes decay below the
    /// threshold.
    Equivalent {
        coset_residual: f64,
        /// The stabilizer element carrying one limit frame to the other.
        coset_solution: GroupElement,
        /// Matched-node intrinsic distance upper bounds (last indices).
        distance_rows: Vec<f64>,
        /// Worst proximity of any optimized path node to a deleted fiber.
        path_margin: f64,
    },
    /// The coset solve failed: the tails end on different fibers.
    Inequivalent { coset_residual: f64 },
}

/// Probe parameters.
#[derive(Debug, Clone)]
pub struct CauchyProbeOptions {
    /// Extrinsic distance below which tails count as reaching the boundary.
    pub approach_tol: f64,
    /// Residual below which the coset solve accepts.
    pub coset_tol: f64,
    /// Final matched-node distance bound for equivalence.
    pub distance_threshold: f64,
    /// Optimizer budget per matched pair.
    pub budget: usize,
    /// Number of tail indices (from the end) to compare.
    pub compare: usize,
}

impl Default for CauchyProbeOptions {
    fn default() -> Self {
        CauchyProbeOptions {
            approach_tol: 1e-3,
            coset_tol: 1e-8,
            distance_threshold: 1e-2,
            budget: 2,
            compare: 3,
        }
    }
}

fn nearest_deleted(fixture: &BundleFixture, p: &SpherePoint) -> f64 {
    fixture
        .deleted_points()
        .iter()
        .map(|q| round_distance(p, q))
        .fold(f64::INFINITY, f64::min)
}

/// Decides whether two Cauchy tails define the same boundary point of the
/// punctured-bundle completion.
///
/// Equivalence requires (a) the group limits to lie in the same fiber, i.e.
/// `p = lim1^{-1} lim2` stabilizes the basepoint, and (b) intrinsic-distance
/// upper bounds between matched tail nodes (after right-translating the
/// second tail by `p^{-1}`) to fall below the threshold, along paths that
/// stay inside the punctured bundle.
pub fn cauchy_probe(
    fm: &FrameMetric,
    fixture: &BundleFixture,
    tail1: &[GroupElement],
    tail2: &[GroupElement],
    opts: &CauchyProbeOptions,
) -> Result<CauchyVerdict> {
    if tail1.len() < 2 || tail2.len() < 2 {
        return Err(Error::InvalidParameter("tails need at least 2 nodes".into()));
    }
    let n = fm.n();
    let o = basepoint(n);
    for tail in [tail1, tail2] {
        let last = tail.last().unwrap();
        let proj = act(last, &o);
        let gap = nearest_deleted(fixture, &proj);
        if gap > opts.approach_tol {
            return Err(Error::InvalidParameter(format!(
                "tail does not approach the deleted fiber (extrinsic gap {gap:.3e})"
            )));
        }
        // Cauchy in the ambient group norm
        let m = tail.len();
        let step_last = tail[m - 1].max_abs_diff(&tail[m - 2]);
        let step_first = tail[1].max_abs_diff(&tail[0]);
        if step_last > step_first * 0.9 + 1e-12 {
            return Err(Error::InvalidParameter(
                "tail steps do not contract; not a Cauchy tail".into(),
            ));
        }
    }
    // Richardson-style limit estimate: doubling the last step cancels the
    // first-order approach term of a geometrically contracting tail
    let est_limit = |tail: &[GroupElement]| -> GroupElement {
        let m = tail.len();
        let step = tail[m - 2].inverse().mul(&tail[m - 1]);
        tail[m - 1].mul(&step)
    };
    let lim1 = est_limit(tail1);
    let lim2 = est_limit(tail2);
    let p = lim1.inverse().mul(&lim2);
    let coset_residual = round_distance(&act(&p, &o), &o);
    if coset_residual > opts.coset_tol {
        return Ok(CauchyVerdict::Inequivalent { coset_residual });
    }
    let pinv = p.inverse();
    let count = opts.compare.min(tail1.len()).min(tail2.len());
    let mut distance_rows = Vec::with_capacity(count);
    let mut path_margin = f64::INFINITY;
    for idx in 0..count {
        let i1 = tail1.len() - count + idx;
        let i2 = tail2.len() - count + idx;
        let a = &tail1[i1];
        let b = tail2[i2].mul(&pinv);
        let est = approx_distance(fm, a, &b, opts.budget)?;
        for node in &est.nodes {
            let margin = nearest_deleted(fixture, &act(node, &o));
            path_margin = path_margin.min(margin);
        }
        distance_rows.push(est.upper_bound);
    }
    if path_margin <= 0.0 {
        return Err(Error::InvalidParameter(
            "optimized path touches a deleted fiber; refine the tails".into(),
        ));
    }
    let final_d = *distance_rows.last().unwrap();
    if final_d > opts.distance_threshold {
        return Err(Error::InvalidParameter(format!(
            "coset solve succeeded but matched-node distances stay at {final_d:.3e}; \
             tails are not Cauchy-matched"
        )));
    }
    Ok(CauchyVerdict::Equivalent {
        coset_residual,
        coset_solution: p,
        distance_rows,
        path_margin,
    })
}

/// Fixtures whose deleted-set codimension the gate can compute.
#[derive(Debug, Clone)]
pub enum NormalityFixture {
    SphereMinusPoint { n: usize },
    SphereMinusTwoPoints { n: usize },
    /// Hypothetical fixture with a declared deleted-set codimension.
    CustomCodimension { codim: usize },
}

/// Bookkeeping record authorizing (or refusing) the intrinsic-extrinsic
/// shortcut used by the Cauchy probe.
#[derive(Debug, Clone)]
pub struct NormalityRecord {
    pub group_dim: usize,
    pub fiber_dim: usize,
    /// Codimension of each deleted fiber inside the group.
    pub codimension: usize,
    /// Codimension > 1 makes the punctured domain normal, so intrinsic and
    /// extrinsic distances agree near the boundary.
    pub authorized: bool,
    pub note: String,
}

/// Computes the codimension arithmetic for a fixture and records whether the
/// shortcut is authorized.
pub fn normality_gate(fixture: &NormalityFixture) -> NormalityRecord {
    match fixture {
        NormalityFixture::SphereMinusPoint { n } | NormalityFixture::SphereMinusTwoPoints { n } => {
            let group_dim = (n + 1) * (n + 2) / 2;
            let fiber_dim = 1 + n + n * (n - 1) / 2;
            let codim = group_dim - fiber_dim;
            NormalityRecord {
                group_dim,
                fiber_dim,
                codimension: codim,
                authorized: codim > 1,
                note: format!(
                    "deleted fibers are P-orbits of dimension {fiber_dim} in a \
                     {group_dim}-dimensional group: codimension {codim}"
                ),
            }
        }
        NormalityFixture::CustomCodimension { codim } => NormalityRecord {
            group_dim: 0,
            fiber_dim: 0,
            codimension: *codim,
            authorized: *codim > 1,
            note: if *codim > 1 {
                "declared codimension exceeds 1".into()
            } else {
                "codimension <= 1: the boundary may disconnect intrinsic \
                 neighbourhoods; shortcut refused"
                    .into()
            },
        },
    }
}
