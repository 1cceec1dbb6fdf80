//! The model sphere `S^n` as projectivised null cone, the group action,
//! stereographic charts, the inversion chart on `n+`, sampled Hausdorff
//! distance and box-counting dimension.
//!
//! A [`SpherePoint`] stores the unit vector `xi` of round-sphere coordinates;
//! the corresponding null line is spanned by `(1, xi)`. The basepoint `o`
//! (fixed by `P`) is `xi = e_last`, and the chart is centred so that `o` is
//! the point at infinity: `x = xi_{0..n} / (1 - xi_n)`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
// resolves float math in no_std builds; shadowed when std is in the crate graph
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::mat::vecn;

/// Euclidean chart coordinates (the basepoint `o` sits at infinity).
pub type ChartPoint = Vec<f64>;

/// A point of `S^n`: unit vector in `R^{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    xi: Vec<f64>,
}

impl SpherePoint {
    pub fn new(xi: Vec<f64>) -> Result<Self> {
        let n = vecn::norm(&xi);
        if (n - 1.0).abs() > 1e-12 {
            if n < 1e-300 {
                return Err(Error::ZeroVector);
            }
            return Ok(SpherePoint { xi: vecn::scale(&xi, 1.0 / n) });
        }
        Ok(SpherePoint { xi })
    }

    pub fn from_unnormalized(xi: &[f64]) -> Result<Self> {
        match vecn::normalize(xi) {
            Some(u) => Ok(SpherePoint { xi: u }),
            None => Err(Error::ZeroVector),
        }
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// Model dimension `n` (the vector lives in `R^{n+1}`).
    pub fn n(&self) -> usize {
        self.xi.len() - 1
    }

    pub fn antipode(&self) -> SpherePoint {
        SpherePoint { xi: vecn::scale(&self.xi, -1.0) }
    }
}

/// The basepoint `o` fixed by `P`: `xi = e_last`.
pub fn basepoint(n: usize) -> SpherePoint {
    let mut xi = vec![0.0; n + 1];
    xi[n] = 1.0;
    SpherePoint { xi }
}

/// Left action of `O(1, n+1)` on the sphere: apply `g` to the null vector
/// `(1, xi)` and renormalize the first coordinate (sign included), then the
/// unit part. Never fails for group elements.
pub fn act(g: &GroupElement, p: &SpherePoint) -> SpherePoint {
    let n = p.n();
    debug_assert_eq!(g.n(), n);
    let mut w = vec![0.0; n + 2];
    w[0] = 1.0;
    w[1..].copy_from_slice(&p.xi);
    let img = g.mat().mul_vec(&w);
    let mut xi: Vec<f64> = img[1..].iter().map(|v| v / img[0]).collect();
    // exact group elements keep the vector null; renormalize drift away,
    // leaving already-unit vectors bit-identical
    let nn = vecn::norm(&xi);
    if nn > 1e-300 && (nn - 1.0).abs() > 1e-12 {
        for v in xi.iter_mut() {
            *v /= nn;
        }
    }
    SpherePoint { xi }
}

/// Stereographic chart with `o` at infinity. Errors at `o` itself.
pub fn chart(p: &SpherePoint) -> Result<ChartPoint> {
    let n = p.n();
    let denom = 1.0 - p.xi[n];
    if denom.abs() < 1e-14 {
        return Err(Error::PointAtInfinity);
    }
    Ok(p.xi[..n].iter().map(|v| v / denom).collect())
}

/// Inverse of [`chart`]: `xi = (2x, |x|^2 - 1) / (|x|^2 + 1)`.
pub fn chart_inv(x: &[f64]) -> SpherePoint {
    let n = x.len();
    let x2 = vecn::dot(x, x);
    let denom = x2 + 1.0;
    let mut xi = vec![0.0; n + 1];
    for i in 0..n {
        xi[i] = 2.0 * x[i] / denom;
    }
    xi[n] = (x2 - 1.0) / denom;
    SpherePoint { xi }
}

/// The chart realization of exponentials of `n+`: Euclidean inversion
/// `u -> u / |u|^2`. Maps the sphere of radius `lambda` to the sphere of
/// radius `1/lambda` and preserves lines through the origin.
pub fn s_plus(u: &[f64]) -> Result<ChartPoint> {
    let n2 = vecn::dot(u, u);
    if n2 < 1e-300 {
        return Err(Error::ZeroVector);
    }
    Ok(vecn::scale(u, 1.0 / n2))
}

/// Round (great-circle) distance in radians, computed from the chord
/// (`2 asin(|p - q| / 2)`), which stays accurate near zero.
pub fn round_distance(p: &SpherePoint, q: &SpherePoint) -> f64 {
    let half_chord = 0.5 * vecn::dist(&p.xi, &q.xi);
    2.0 * half_chord.clamp(-1.0, 1.0).asin()
}

/// A finite point cloud with a declared covering resolution (radians).
#[derive(Debug, Clone)]
pub struct SampledSet {
    pub points: Vec<SpherePoint>,
    pub resolution: f64,
}

impl SampledSet {
    pub fn new(points: Vec<SpherePoint>, resolution: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(SampledSet { points, resolution })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Image under a group element, keeping the declared resolution.
    pub fn map(&self, g: &GroupElement) -> SampledSet {
        SampledSet {
            points: self.points.iter().map(|p| act(g, p)).collect(),
            resolution: self.resolution,
        }
    }
}

/// Uniform-cell nearest-neighbour index over ambient coordinates.
///
/// Keys are clamped to 4 ambient dimensions, which covers the shipped model
/// dimensions (n <= 3); higher dimensions and tiny sets fall back to a
/// linear scan.
struct NnIndex<'a> {
    pts: &'a [SpherePoint],
    cell: f64,
    map: BTreeMap<[i64; 4], Vec<usize>>,
    linear: bool,
}

impl<'a> NnIndex<'a> {
    fn build(pts: &'a [SpherePoint], cell: f64) -> Self {
        let dim = pts[0].xi.len();
        let linear = dim > 4 || pts.len() < 64;
        let mut map = BTreeMap::new();
        if !linear {
            for (i, p) in pts.iter().enumerate() {
                map.entry(Self::key(p, cell)).or_insert_with(Vec::new).push(i);
            }
        }
        NnIndex { pts, cell, map, linear }
    }

    fn key(p: &SpherePoint, cell: f64) -> [i64; 4] {
        let mut k = [0i64; 4];
        for (i, v) in p.xi.iter().enumerate().take(4) {
            k[i] = (v / cell).floor() as i64;
        }
        k
    }

    /// Chord distance from `q` to the nearest indexed point.
    fn nearest_chord(&self, q: &SpherePoint) -> f64 {
        if self.linear {
            return self.scan(q);
        }
        let dim = q.xi.len().min(4);
        let base = Self::key(q, self.cell);
        let mut best = f64::INFINITY;
        // points in shells beyond `s` sit at chord distance > (s-1)*cell,
        // so a hit at distance <= (shell-1)*cell is provably nearest; far
        // queries fall back to a scan instead of widening the shell search
        for shell in 0i64..=6 {
            let mut keys: Vec<[i64; 4]> = Vec::new();
            enumerate_shell(&base, shell, dim, &mut keys);
            for key in keys {
                if let Some(ids) = self.map.get(&key) {
                    for &i in ids {
                        let d = vecn::dist(&self.pts[i].xi, &q.xi);
                        if d < best {
                            best = d;
                        }
                    }
                }
            }
            if best <= (shell as f64 - 1.0) * self.cell {
                return best;
            }
        }
        if best <= 5.0 * self.cell {
            return best;
        }
        self.scan(q)
    }

    fn scan(&self, q: &SpherePoint) -> f64 {
        self.pts
            .iter()
            .map(|p| vecn::dist(&p.xi, &q.xi))
            .fold(f64::INFINITY, f64::min)
    }
}

fn enumerate_shell(base: &[i64; 4], shell: i64, dims: usize, out: &mut Vec<[i64; 4]>) {
    fn rec(
        base: &[i64; 4],
        shell: i64,
        dims: usize,
        d: usize,
        cur: &mut [i64; 4],
        on_shell: bool,
        out: &mut Vec<[i64; 4]>,
    ) {
        if d == dims {
            if on_shell {
                out.push(*cur);
            }
            return;
        }
        for off in -shell..=shell {
            cur[d] = base[d] + off;
            rec(base, shell, dims, d + 1, cur, on_shell || off.abs() == shell, out);
        }
    }
    let mut cur = *base;
    if shell == 0 {
        out.push(cur);
        return;
    }
    rec(base, shell, dims, 0, &mut cur, false, out);
}

fn directed_hausdorff(from: &SampledSet, to: &SampledSet) -> f64 {
    let cell = (to.resolution.max(1e-3)).min(0.5);
    let idx = NnIndex::build(&to.points, cell);
    let mut sup_chord = 0.0f64;
    for p in &from.points {
        let d = idx.nearest_chord(p);
        if d > sup_chord {
            sup_chord = d;
        }
    }
    // chord -> arc
    2.0 * (sup_chord / 2.0).clamp(-1.0, 1.0).asin()
}

/// Hausdorff distance (radians) between finite samples; exact on the samples.
pub fn hausdorff(x: &SampledSet, y: &SampledSet) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(directed_hausdorff(x, y).max(directed_hausdorff(y, x)))
}

/// Result of a box-counting fit.
#[derive(Debug, Clone)]
pub struct BoxCountFit {
    /// Least-squares slope of `log N(eps)` against `log(1/eps)`.
    ///
    /// Estimates the box-counting dimension, an upper proxy for Hausdorff
    /// dimension; this is not a Hausdorff-measure computation.
    pub dimension: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
    /// `(eps, N(eps))` per requested scale.
    pub counts: Vec<(f64, usize)>,
    /// Set when the counts carry no scaling information.
    pub degenerate: bool,
}

/// Box-counting dimension estimate from ambient voxel counts at the given
/// scales. Requires at least 3 scales spanning at least one decade.
pub fn box_counting_dimension(x: &SampledSet, scales: &[f64]) -> Result<BoxCountFit> {
    if x.is_empty() {
        return Err(Error::EmptySet);
    }
    if scales.len() < 3 {
        return Err(Error::InvalidParameter("need at least 3 scales".into()));
    }
    let mut smin = f64::INFINITY;
    let mut smax = 0.0f64;
    for &s in scales {
        if s <= 0.0 {
            return Err(Error::InvalidParameter("scales must be positive".into()));
        }
        smin = smin.min(s);
        smax = smax.max(s);
    }
    if smax / smin < 10.0 * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter("scales must span at least one decade".into()));
    }
    let mut counts = Vec::with_capacity(scales.len());
    for &eps in scales {
        let mut cells: alloc::collections::BTreeSet<Vec<i64>> = alloc::collections::BTreeSet::new();
        for p in &x.points {
            let key: Vec<i64> = p.xi().iter().map(|v| (v / eps).floor() as i64).collect();
            cells.insert(key);
        }
        counts.push((eps, cells.len()));
    }
    // least squares of ln N on ln(1/eps)
    let xs: Vec<f64> = counts.iter().map(|(e, _)| (1.0 / e).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|(_, n)| (*n as f64).ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys.iter()).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx < 1e-12 {
        return Err(Error::DegenerateFit);
    }
    let slope = sxy / sxx;
    let rms = (xs
        .iter()
        .zip(ys.iter())
        .map(|(a, b)| {
            let pred = my + slope * (a - mx);
            (b - pred) * (b - pred)
        })
        .sum::<f64>()
        / m)
        .sqrt();
    let n_min = counts.iter().map(|&(_, n)| n).min().unwrap();
    let n_max = counts.iter().map(|&(_, n)| n).max().unwrap();
    Ok(BoxCountFit { dimension: slope, residual: rms, counts, degenerate: n_min == n_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{boost, compact_element, random_group_element, random_parabolic, ParabolicElement};
    use crate::mat::Mat;
    use crate::rng::SplitMix64;

    #[test]
    fn identity_action_fixes_points() {
        let mut rng = SplitMix64::new(1);
        let id = GroupElement::identity(3);
        for _ in 0..10 {
            let p = SpherePoint::new(rng.unit_vector(4)).unwrap();
            let q = act(&id, &p);
            assert!(vecn::dist(p.xi(), q.xi()) < 1e-15);
        }
    }

    #[test]
    fn parabolic_fixes_basepoint() {
        let mut rng = SplitMix64::new(2);
        let o = basepoint(2);
        for _ in 0..10 {
            let p = random_parabolic(&mut rng, 2, 1.0);
            let img = act(&p.to_group(), &o);
            assert!(round_distance(&img, &o) < 1e-12);
        }
    }

    #[test]
    fn action_is_a_left_action() {
        let mut rng = SplitMix64::new(3);
        for _ in 0..30 {
            let g = random_group_element(&mut rng, 2, 1.0, true);
            let h = random_group_element(&mut rng, 2, 1.0, true);
            let p = SpherePoint::new(rng.unit_vector(3)).unwrap();
            let lhs = act(&g, &act(&h, &p));
            let rhs = act(&g.mul(&h), &p);
            assert!(round_distance(&lhs, &rhs) < 1e-10);
        }
    }

    #[test]
    fn chart_inv_of_zero_is_antipode_of_basepoint() {
        let p = chart_inv(&[0.0, 0.0, 0.0]);
        let o = basepoint(3);
        assert!(round_distance(&p, &o.antipode()) < 1e-15);
    }

    #[test]
    fn chart_errors_at_infinity() {
        let o = basepoint(2);
        assert_eq!(chart(&o).unwrap_err(), Error::PointAtInfinity);
    }

    #[test]
    fn chart_roundtrip() {
        let mut rng = SplitMix64::new(4);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..3).map(|_| rng.uniform(-5.0, 5.0)).collect();
            let back = chart(&chart_inv(&x)).unwrap();
            assert!(vecn::dist(&x, &back) < 1e-10);
        }
    }

    #[test]
    fn chart_conjugates_parabolics_to_similarities() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..100 {
            let p = random_parabolic(&mut rng, 3, 1.2);
            let g = p.to_group();
            let x: Vec<f64> = (0..3).map(|_| rng.uniform(-3.0, 3.0)).collect();
            let via_sphere = chart(&act(&g, &chart_inv(&x))).unwrap();
            let via_chart = p.apply_chart(&x);
            assert!(vecn::dist(&via_sphere, &via_chart) < 1e-9);
        }
    }

    #[test]
    fn homothety_doubles_chart() {
        // chart action of a(t) is x -> e^t x; lambda = 2 is t = ln 2
        let p = ParabolicElement::homothety(2, 2.0);
        let g = p.to_group();
        assert!(g.max_abs_diff(&boost(2, 2.0f64.ln())) < 1e-12);
        let mut rng = SplitMix64::new(6);
        for _ in 0..100 {
            let x: Vec<f64> = (0..2).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let img = chart(&act(&g, &chart_inv(&x))).unwrap();
            assert!(vecn::dist(&img, &vecn::scale(&x, 2.0)) < 1e-9);
        }
    }

    #[test]
    fn translation_acts_by_translation() {
        let p = ParabolicElement::translation(&[1.0, 0.0]);
        let g = p.to_group();
        let mut rng = SplitMix64::new(7);
        for _ in 0..100 {
            let x: Vec<f64> = (0..2).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let img = chart(&act(&g, &chart_inv(&x))).unwrap();
            assert!(vecn::dist(&img, &[x[0] + 1.0, x[1]]) < 1e-9);
        }
    }

    #[test]
    fn s_plus_radius_law() {
        let mut rng = SplitMix64::new(8);
        for _ in 0..1000 {
            let u = vecn::scale(&rng.unit_vector(3), rng.uniform(0.05, 20.0));
            let img = s_plus(&u).unwrap();
            assert!((vecn::norm(&img) * vecn::norm(&u) - 1.0).abs() < 1e-10);
        }
        // |u| = 2 -> |s+(u)| = 1/2, unit sphere fixed
        let img = s_plus(&[2.0, 0.0]).unwrap();
        assert!((vecn::norm(&img) - 0.5).abs() < 1e-14);
        let fixed = s_plus(&[1.0, 0.0, 0.0]).unwrap();
        assert!(vecn::dist(&fixed, &[1.0, 0.0, 0.0]) < 1e-15);
    }

    #[test]
    fn s_plus_preserves_rays_and_involutes() {
        let mut rng = SplitMix64::new(9);
        for _ in 0..100 {
            let u = vecn::scale(&rng.unit_vector(2), rng.uniform(0.1, 4.0));
            let t = rng.uniform(0.2, 3.0);
            let a = s_plus(&vecn::scale(&u, t)).unwrap();
            let cosang = vecn::dot(&a, &u) / (vecn::norm(&a) * vecn::norm(&u));
            assert!(cosang > 1.0 - 1e-12, "collinear with positive orientation");
            let back = s_plus(&s_plus(&u).unwrap()).unwrap();
            assert!(vecn::dist(&back, &u) < 1e-12);
        }
        assert_eq!(s_plus(&[0.0, 0.0]).unwrap_err(), Error::ZeroVector);
    }

    #[test]
    fn round_distance_cases() {
        let p = SpherePoint::new(vec![1.0, 0.0, 0.0]).unwrap();
        let q = SpherePoint::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(round_distance(&p, &p), 0.0);
        assert!((round_distance(&p, &p.antipode()) - core::f64::consts::PI).abs() < 1e-15);
        assert!((round_distance(&p, &q) - core::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn compact_rotations_are_round_isometries() {
        let mut rng = SplitMix64::new(10);
        for _ in 0..20 {
            let q = crate::group::random_rotation(&mut rng, 4);
            let k = compact_element(&q).unwrap();
            let p1 = SpherePoint::new(rng.unit_vector(4)).unwrap();
            let p2 = SpherePoint::new(rng.unit_vector(4)).unwrap();
            let before = round_distance(&p1, &p2);
            let after = round_distance(&act(&k, &p1), &act(&k, &p2));
            assert!((before - after).abs() < 1e-10);
        }
    }

    #[test]
    fn hausdorff_basics() {
        let north = SpherePoint::new(vec![0.0, 0.0, 1.0]).unwrap();
        let south = north.antipode();
        let x = SampledSet::new(vec![north.clone()], 0.01).unwrap();
        let y = SampledSet::new(vec![south], 0.01).unwrap();
        assert_eq!(hausdorff(&x, &x).unwrap(), 0.0);
        assert!((hausdorff(&x, &y).unwrap() - core::f64::consts::PI).abs() < 1e-12);
        assert!(SampledSet::new(vec![], 0.1).is_err());
    }

    #[test]
    fn hausdorff_of_rotated_sample_bounded_by_angle() {
        // brute-force oracle: rotating a sample by theta moves it at most
        // theta, and the sampled distance cannot exceed theta + 2*resolution
        let res = 0.01;
        let mut pts = Vec::new();
        let m = 700;
        for i in 0..m {
            let a = core::f64::consts::TAU * i as f64 / m as f64;
            pts.push(SpherePoint::new(vec![a.cos(), a.sin(), 0.0]).unwrap());
        }
        let x = SampledSet::new(pts, res).unwrap();
        // rotate about an axis inside the circle plane so the set really moves
        let theta = 0.07f64;
        let rot = Mat::from_rows(&[
            &[1.0, 0.0, 0.0],
            &[0.0, theta.cos(), -theta.sin()],
            &[0.0, theta.sin(), theta.cos()],
        ]);
        let k = compact_element(&rot).unwrap();
        let y = x.map(&k);
        let d = hausdorff(&x, &y).unwrap();
        assert!(d <= theta + 2.0 * res, "{d} vs {theta}");
        // and the rotation really moved the set
        assert!(d > theta / 2.0);
    }

    #[test]
    fn hausdorff_symmetry_and_triangle() {
        let mut rng = SplitMix64::new(11);
        let mk = |rng: &mut SplitMix64, k: usize| {
            let pts = (0..k)
                .map(|_| SpherePoint::new(rng.unit_vector(3)).unwrap())
                .collect::<Vec<_>>();
            SampledSet::new(pts, 0.05).unwrap()
        };
        for _ in 0..20 {
            let x = mk(&mut rng, 9);
            let y = mk(&mut rng, 7);
            let z = mk(&mut rng, 8);
            let dxy = hausdorff(&x, &y).unwrap();
            let dyx = hausdorff(&y, &x).unwrap();
            assert!((dxy - dyx).abs() < 1e-12);
            let dxz = hausdorff(&x, &z).unwrap();
            let dyz = hausdorff(&y, &z).unwrap();
            assert!(dxz <= dxy + dyz + 1e-12);
        }
    }

    #[test]
    fn box_counting_saturates_on_finite_sets() {
        let mut rng = SplitMix64::new(12);
        let pts: Vec<SpherePoint> = (0..10)
            .map(|_| SpherePoint::new(rng.unit_vector(3)).unwrap())
            .collect();
        let x = SampledSet::new(pts, 0.5).unwrap();
        let fit = box_counting_dimension(&x, &[2.0, 1.2, 0.8, 0.5, 0.2]).unwrap();
        assert!(fit.dimension.abs() < 0.2, "dimension {}", fit.dimension);
    }

    #[test]
    fn box_counting_of_great_circle_in_s3() {
        let m = 10_000;
        let pts: Vec<SpherePoint> = (0..m)
            .map(|i| {
                let a = core::f64::consts::TAU * i as f64 / m as f64;
                SpherePoint::new(vec![a.cos(), a.sin(), 0.0, 0.0]).unwrap()
            })
            .collect();
        let x = SampledSet::new(pts, 0.001).unwrap();
        let scales = [0.4, 0.2, 0.1, 0.05, 0.025];
        let fit = box_counting_dimension(&x, &scales).unwrap();
        assert!(
            fit.dimension > 0.9 && fit.dimension < 1.1,
            "great circle dimension {}",
            fit.dimension
        );
        assert!(!fit.degenerate);
    }

    #[test]
    fn box_counting_preconditions() {
        let x = SampledSet::new(vec![basepoint(2)], 0.1).unwrap();
        assert!(box_counting_dimension(&x, &[0.5, 0.4]).is_err());
        assert!(box_counting_dimension(&x, &[0.5, 0.4, 0.3]).is_err());
    }
}
