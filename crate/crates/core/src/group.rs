//! The group `O(1, n+1)` and its graded Lie algebra.
//!
//! Conventions fixed once for the whole crate:
//!
//! - Ambient coordinates are `(w_0, w_1, ..., w_n, w_{n+1})` with the Lorentz
//!   form `J = diag(-1, 1, ..., 1)`.
//! - The basepoint `o` is the null line through `e_0 + e_{n+1}`; its
//!   stabilizer `P` consists of the chart similarities `x -> lambda A x + v`.
//! - Light-cone coordinates `(a, w~, b) = (w_0 + w_{n+1}, w_1..w_n,
//!   w_0 - w_{n+1})` diagonalize the grading; the chart reads `x = w~ / b`.
//! - The grading of `o(1, n+1)` is `n+ (+) R (+) o(n) (+) n-` where `n-` is
//!   the chart translations (inside `p`) and `n+` the opposite nilpotent; the
//!   exponential of `n+` lands at the inversion chart point `u / |u|^2`.
//! - `a(t)` is the boost with chart action `x -> e^t x`; under `Ad a(t)` the
//!   translations `n-` scale by `e^t` and `n+` by `e^{-t}`.
//! - Projective (PO) representatives carry a canonical sign: the first
//!   nonzero entry of row 0 is nonnegative.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
// resolves float math in no_std builds; shadowed when std is in the crate graph
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::mat::{vecn, Mat};
use crate::rng::SplitMix64;

/// Membership tolerance for `O(1, n+1)`.
pub const GROUP_TOL: f64 = 1e-10;
/// Residuals below this are repaired by one Newton step instead of rejected.
pub const REPAIR_TOL: f64 = 1e-6;

/// The Lorentz form `J = diag(-1, 1, ..., 1)` of size `n + 2`.
#[derive(Debug, Clone)]
pub struct LorentzForm {
    pub n: usize,
}

impl LorentzForm {
    pub fn new(n: usize) -> Self {
        LorentzForm { n }
    }

    pub fn size(&self) -> usize {
        self.n + 2
    }

    pub fn matrix(&self) -> Mat {
        let mut j = Mat::identity(self.size());
        j[(0, 0)] = -1.0;
        j
    }

    /// `<v, w>_J = -v_0 w_0 + sum v_i w_i`.
    pub fn pair(&self, v: &[f64], w: &[f64]) -> f64 {
        -v[0] * w[0] + vecn::dot(&v[1..], &w[1..])
    }
}

/// `|m^T J m - J|_inf` together with the membership verdict at [`GROUP_TOL`].
pub fn lorentz_check(m: &Mat) -> Result<(bool, f64)> {
    if !m.is_square() || m.rows < 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: m.rows });
    }
    let j = LorentzForm::new(m.rows - 2).matrix();
    let res = m.transpose().mul(&j).mul(m).max_abs_diff(&j);
    Ok((res < GROUP_TOL, res))
}

/// Change of basis to light-cone coordinates `(a, w~, b)`.
///
/// Returns `(l, l_inv)` with `v_lc = l v_std` and `m_std = l_inv m_lc l`.
pub fn lightcone_basis(n: usize) -> (Mat, Mat) {
    let d = n + 2;
    let mut l = Mat::zeros(d, d);
    let mut li = Mat::zeros(d, d);
    l[(0, 0)] = 1.0;
    l[(0, d - 1)] = 1.0;
    l[(d - 1, 0)] = 1.0;
    l[(d - 1, d - 1)] = -1.0;
    li[(0, 0)] = 0.5;
    li[(0, d - 1)] = 0.5;
    li[(d - 1, 0)] = 0.5;
    li[(d - 1, d - 1)] = -0.5;
    for i in 1..=n {
        l[(i, i)] = 1.0;
        li[(i, i)] = 1.0;
    }
    (l, li)
}

/// An element of `O(1, n+1)`, stored with the canonical projective sign.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    mat: Mat,
}

impl GroupElement {
    /// Validates membership (repairing residuals below [`REPAIR_TOL`] with
    /// one Newton step on `g^T J g = J`) and canonicalizes the sign.
    pub fn new(mat: Mat) -> Result<Self> {
        let (ok, res) = lorentz_check(&mat)?;
        let mut m = mat;
        if !ok {
            if res >= REPAIR_TOL {
                return Err(Error::NotInGroup { residual: res });
            }
            m = repair(&m);
            let (ok2, res2) = lorentz_check(&m)?;
            if !ok2 {
                return Err(Error::NotInGroup { residual: res2 });
            }
        }
        Ok(GroupElement { mat: canonical_sign(m) })
    }

    /// Wraps a matrix without validation or sign normalization.
    ///
    /// Used where exact reconstruction matters (KAK factors) and by hot loops
    /// that multiply already-validated elements.
    pub fn from_mat_unchecked(mat: Mat) -> Self {
        GroupElement { mat }
    }

    pub fn identity(n: usize) -> Self {
        GroupElement { mat: Mat::identity(n + 2) }
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }

    /// Model dimension `n`.
    pub fn n(&self) -> usize {
        self.mat.rows - 2
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement { mat: self.mat.mul(&other.mat) }
    }

    /// Exact group inverse `J g^T J`.
    pub fn inverse(&self) -> GroupElement {
        let j = LorentzForm::new(self.n()).matrix();
        GroupElement { mat: j.mul(&self.mat.transpose()).mul(&j) }
    }

    /// Canonical projective representative (first nonzero of row 0 >= 0).
    pub fn canonicalize(&self) -> GroupElement {
        GroupElement { mat: canonical_sign(self.mat.clone()) }
    }

    pub fn max_abs_diff(&self, other: &GroupElement) -> f64 {
        self.mat.max_abs_diff(&other.mat)
    }

    /// Projective distance: min over the sign ambiguity.
    pub fn projective_dist(&self, other: &GroupElement) -> f64 {
        let d1 = self.mat.max_abs_diff(&other.mat);
        let d2 = self.mat.max_abs_diff(&other.mat.neg());
        d1.min(d2)
    }
}

fn repair(m: &Mat) -> Mat {
    let j = LorentzForm::new(m.rows - 2).matrix();
    let r = m.transpose().mul(&j).mul(m).sub(&j);
    let corr = Mat::identity(m.rows).sub(&j.mul(&r).scale(0.5));
    m.mul(&corr)
}

fn canonical_sign(m: Mat) -> Mat {
    for jcol in 0..m.cols {
        let e = m[(0, jcol)];
        if e.abs() > 1e-12 {
            if e < 0.0 {
                return m.neg();
            }
            return m;
        }
    }
    m
}

/// The boost `a(t)`: chart action `x -> e^t x`, closed form in the
/// `(0, n+1)` plane.
pub fn boost(n: usize, t: f64) -> GroupElement {
    let d = n + 2;
    let mut m = Mat::identity(d);
    m[(0, 0)] = t.cosh();
    m[(0, d - 1)] = t.sinh();
    m[(d - 1, 0)] = t.sinh();
    m[(d - 1, d - 1)] = t.cosh();
    GroupElement::from_mat_unchecked(m)
}

/// Block rotation `diag(1, q)` for `q` orthogonal of size `n + 1`.
pub fn compact_element(q: &Mat) -> Result<GroupElement> {
    let d = q.rows + 1;
    if !q.is_square() {
        return Err(Error::DimensionMismatch { expected: q.rows, got: q.cols });
    }
    let mut m = Mat::identity(d);
    for i in 0..q.rows {
        for j in 0..q.cols {
            m[(i + 1, j + 1)] = q[(i, j)];
        }
    }
    GroupElement::new(m)
}

/// Graded components of an algebra element.
#[derive(Debug, Clone)]
pub struct Grading {
    /// `n+` component (the cone directions), identified with `R^n`.
    pub plus: Vec<f64>,
    /// Coefficient of the grading element (boost generator).
    pub scal: f64,
    /// `o(n)` block, an `n x n` skew matrix.
    pub rot: Mat,
    /// `n-` component (chart translations), identified with `R^n`.
    pub minus: Vec<f64>,
}

impl Grading {
    pub fn zero(n: usize) -> Self {
        Grading { plus: vec![0.0; n], scal: 0.0, rot: Mat::zeros(n, n), minus: vec![0.0; n] }
    }
}

/// An element of `o(1, n+1)`.
#[derive(Debug, Clone)]
pub struct AlgebraElement {
    mat: Mat,
}

impl AlgebraElement {
    /// Validates `x^T J + J x = 0` up to 1e-10.
    pub fn new(mat: Mat) -> Result<Self> {
        if !mat.is_square() || mat.rows < 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: mat.rows });
        }
        let j = LorentzForm::new(mat.rows - 2).matrix();
        let res = mat.transpose().mul(&j).add(&j.mul(&mat)).norm_inf();
        if res > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "matrix not in o(1,n+1): residual {res:e}"
            )));
        }
        Ok(AlgebraElement { mat })
    }

    pub fn from_mat_unchecked(mat: Mat) -> Self {
        AlgebraElement { mat }
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }

    pub fn n(&self) -> usize {
        self.mat.rows - 2
    }

    /// Builds the element with the given graded components.
    ///
    /// In light-cone coordinates the matrix is
    /// `[[s, 2 d^T, 0], [c, R, d], [0, 2 c^T, -s]]` with `c` the `n+` part
    /// and `d` the `n-` part; this is conjugated back to standard
    /// coordinates.
    pub fn from_grading(g: &Grading) -> Self {
        let n = g.plus.len();
        let d = n + 2;
        let mut lc = Mat::zeros(d, d);
        lc[(0, 0)] = g.scal;
        lc[(d - 1, d - 1)] = -g.scal;
        for i in 0..n {
            lc[(0, 1 + i)] = 2.0 * g.minus[i];
            lc[(1 + i, d - 1)] = g.minus[i];
            lc[(1 + i, 0)] = g.plus[i];
            lc[(d - 1, 1 + i)] = 2.0 * g.plus[i];
            for j in 0..n {
                lc[(1 + i, 1 + j)] = g.rot[(i, j)];
            }
        }
        let (l, li) = lightcone_basis(n);
        AlgebraElement { mat: li.mul(&lc).mul(&l) }
    }

    /// Pure `n+` element for `u` (exact sparse pattern, so powers vanish
    /// exactly: in standard coordinates row 0 is `u^T`, the middle block
    /// columns 0 and n+1 are `u`, and row n+1 is `-u^T`).
    pub fn pure_plus(u: &[f64]) -> Self {
        let n = u.len();
        let d = n + 2;
        let mut m = Mat::zeros(d, d);
        for i in 0..n {
            m[(0, 1 + i)] = u[i];
            m[(1 + i, 0)] = u[i];
            m[(1 + i, d - 1)] = u[i];
            m[(d - 1, 1 + i)] = -u[i];
        }
        AlgebraElement { mat: m }
    }

    /// Pure `n-` element for `w` (infinitesimal chart translation).
    pub fn pure_minus(w: &[f64]) -> Self {
        let n = w.len();
        let d = n + 2;
        let mut m = Mat::zeros(d, d);
        for i in 0..n {
            m[(0, 1 + i)] = w[i];
            m[(1 + i, 0)] = w[i];
            m[(1 + i, d - 1)] = -w[i];
            m[(d - 1, 1 + i)] = w[i];
        }
        AlgebraElement { mat: m }
    }

    /// Reads the graded components (averaging the redundant light-cone
    /// entries, so the reassembly residual measures deviation from the
    /// algebra).
    pub fn grading(&self) -> Grading {
        let n = self.n();
        let d = n + 2;
        let (l, li) = lightcone_basis(n);
        let lc = l.mul(&self.mat).mul(&li);
        let scal = 0.5 * (lc[(0, 0)] - lc[(d - 1, d - 1)]);
        let mut plus = vec![0.0; n];
        let mut minus = vec![0.0; n];
        let mut rot = Mat::zeros(n, n);
        for i in 0..n {
            plus[i] = 0.5 * (lc[(1 + i, 0)] + 0.5 * lc[(d - 1, 1 + i)]);
            minus[i] = 0.5 * (lc[(1 + i, d - 1)] + 0.5 * lc[(0, 1 + i)]);
            for j in 0..n {
                rot[(i, j)] = 0.5 * (lc[(1 + i, 1 + j)] - lc[(1 + j, 1 + i)]);
            }
        }
        Grading { plus, scal, rot, minus }
    }

    pub fn add(&self, other: &AlgebraElement) -> AlgebraElement {
        AlgebraElement { mat: self.mat.add(&other.mat) }
    }

    pub fn scale(&self, s: f64) -> AlgebraElement {
        AlgebraElement { mat: self.mat.scale(s) }
    }

    pub fn bracket(&self, other: &AlgebraElement) -> AlgebraElement {
        AlgebraElement { mat: self.mat.mul(&other.mat).sub(&other.mat.mul(&self.mat)) }
    }

    /// Matrix exponential into the group.
    pub fn exp(&self) -> GroupElement {
        GroupElement::from_mat_unchecked(self.mat.expm())
    }
}

/// The fixed basis `X_1..X_m` of `o(1, n+1)`: elementary graded pieces,
/// unit-normalized in the Frobenius norm of the standard coordinates.
///
/// Order: `n+` (n entries), the boost generator, `o(n)` (i < j, lex), `n-`
/// (n entries). The basis is Frobenius-orthonormal, so coordinate norms
/// agree with Frobenius norms and `Ad K` acts by isometries.
pub fn algebra_basis(n: usize) -> Vec<AlgebraElement> {
    let mut out = Vec::with_capacity(algebra_dim(n));
    let mut push_normalized = |x: AlgebraElement| {
        let f = x.mat().norm();
        out.push(x.scale(1.0 / f));
    };
    for i in 0..n {
        let mut u = vec![0.0; n];
        u[i] = 1.0;
        push_normalized(AlgebraElement::pure_plus(&u));
    }
    let mut g = Grading::zero(n);
    g.scal = 1.0;
    push_normalized(AlgebraElement::from_grading(&g));
    for i in 0..n {
        for j in i + 1..n {
            let mut g = Grading::zero(n);
            g.rot[(i, j)] = 1.0;
            g.rot[(j, i)] = -1.0;
            push_normalized(AlgebraElement::from_grading(&g));
        }
    }
    for i in 0..n {
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        push_normalized(AlgebraElement::pure_minus(&w));
    }
    out
}

/// `dim o(1, n+1) = (n+1)(n+2)/2`.
pub fn algebra_dim(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

/// Coordinates of `x` in [`algebra_basis`] (Frobenius projections).
pub fn basis_coords(basis: &[AlgebraElement], x: &AlgebraElement) -> Vec<f64> {
    basis.iter().map(|b| b.mat().dot(x.mat())).collect()
}

/// Reassembles an algebra element from basis coordinates.
pub fn from_basis_coords(basis: &[AlgebraElement], coords: &[f64]) -> AlgebraElement {
    let d = basis[0].mat().rows;
    let mut m = Mat::zeros(d, d);
    for (b, &c) in basis.iter().zip(coords.iter()) {
        m = m.add(&b.mat().scale(c));
    }
    AlgebraElement::from_mat_unchecked(m)
}

/// The matrix of `Ad(g): X -> g X g^{-1}` in [`algebra_basis`].
pub fn adjoint(g: &GroupElement) -> Mat {
    let n = g.n();
    let basis = algebra_basis(n);
    let m = basis.len();
    let ginv = g.inverse();
    let mut out = Mat::zeros(m, m);
    for (col, x) in basis.iter().enumerate() {
        let y = AlgebraElement::from_mat_unchecked(g.mat().mul(x.mat()).mul(ginv.mat()));
        let coords = basis_coords(&basis, &y);
        for row in 0..m {
            out[(row, col)] = coords[row];
        }
    }
    out
}

/// A similarity `x -> lambda A x + v` of the chart, i.e. an element of `P`.
#[derive(Debug, Clone)]
pub struct ParabolicElement {
    pub lambda: f64,
    pub rot: Mat,
    pub trans: Vec<f64>,
}

impl ParabolicElement {
    pub fn new(lambda: f64, rot: Mat, trans: Vec<f64>) -> Result<Self> {
        if lambda <= 0.0 {
            return Err(Error::InvalidParameter("lambda must be positive".into()));
        }
        let n = trans.len();
        if rot.rows != n || rot.cols != n {
            return Err(Error::DimensionMismatch { expected: n, got: rot.rows });
        }
        let res = rot.transpose().mul(&rot).max_abs_diff(&Mat::identity(n));
        if res > GROUP_TOL {
            return Err(Error::InvalidParameter(format!(
                "rotation is not orthogonal: residual {res:e}"
            )));
        }
        Ok(ParabolicElement { lambda, rot, trans })
    }

    pub fn identity(n: usize) -> Self {
        ParabolicElement { lambda: 1.0, rot: Mat::identity(n), trans: vec![0.0; n] }
    }

    pub fn homothety(n: usize, lambda: f64) -> Self {
        ParabolicElement { lambda, rot: Mat::identity(n), trans: vec![0.0; n] }
    }

    pub fn translation(v: &[f64]) -> Self {
        ParabolicElement { lambda: 1.0, rot: Mat::identity(v.len()), trans: v.to_vec() }
    }

    pub fn n(&self) -> usize {
        self.trans.len()
    }

    /// Translation magnitude `mu = |v|`.
    pub fn mu(&self) -> f64 {
        vecn::norm(&self.trans)
    }

    pub fn apply_chart(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.rot.mul_vec(x);
        ax.iter()
            .zip(self.trans.iter())
            .map(|(a, v)| self.lambda * a + v)
            .collect()
    }

    pub fn compose(&self, other: &ParabolicElement) -> ParabolicElement {
        // (self o other)(x) = lambda1 A1 (lambda2 A2 x + v2) + v1
        let lambda = self.lambda * other.lambda;
        let rot = self.rot.mul(&other.rot);
        let mut trans = self.rot.mul_vec(&other.trans);
        for t in trans.iter_mut() {
            *t *= self.lambda;
        }
        let trans = vecn::add(&trans, &self.trans);
        ParabolicElement { lambda, rot, trans }
    }

    pub fn inverse(&self) -> ParabolicElement {
        let rot = self.rot.transpose();
        let mut trans = rot.mul_vec(&self.trans);
        for t in trans.iter_mut() {
            *t *= -1.0 / self.lambda;
        }
        ParabolicElement { lambda: 1.0 / self.lambda, rot, trans }
    }

    /// Embedding into the group, stabilizing the basepoint null line.
    ///
    /// Light-cone form: `a' = lambda a + 2 (A^T v)^T w~ + (|v|^2/lambda) b`,
    /// `w~' = A w~ + (v / lambda) b`, `b' = b / lambda`.
    pub fn to_group(&self) -> GroupElement {
        let n = self.n();
        let d = n + 2;
        let mut lc = Mat::zeros(d, d);
        lc[(0, 0)] = self.lambda;
        lc[(d - 1, d - 1)] = 1.0 / self.lambda;
        let atv = self.rot.transpose().mul_vec(&self.trans);
        let v2 = vecn::dot(&self.trans, &self.trans);
        lc[(0, d - 1)] = v2 / self.lambda;
        for i in 0..n {
            lc[(0, 1 + i)] = 2.0 * atv[i];
            lc[(1 + i, d - 1)] = self.trans[i] / self.lambda;
            for j in 0..n {
                lc[(1 + i, 1 + j)] = self.rot[(i, j)];
            }
        }
        let (l, li) = lightcone_basis(n);
        // in the group by construction; the absolute membership gate would
        // reject exact similarities of large translation (the form residual
        // grows quadratically with the matrix magnitude)
        GroupElement::from_mat_unchecked(canonical_sign(li.mul(&lc).mul(&l)))
    }
}

/// `g = k1 a(t) k2` with `k1, k2` in the maximal compact `K` and `t >= 0`.
///
/// `k2` is the Householder-section factor `diag(1, q)`; `k1` absorbs the
/// polar rotation. Factors are stored unnormalized in sign so the product
/// reconstructs the canonical representative of the input exactly.
#[derive(Debug, Clone)]
pub struct KakDecomposition {
    pub k1: GroupElement,
    pub t: f64,
    pub k2: GroupElement,
    /// Set when `t < 1e-9`: the decomposition is unique only up to
    /// `K (^) K'` and the `k` factors are conventional.
    pub degenerate: bool,
}

impl KakDecomposition {
    pub fn reconstruct(&self) -> GroupElement {
        self.k1.mul(&boost(self.k1.n(), self.t)).mul(&self.k2)
    }
}

/// Cartan (KAK) decomposition via Euclidean polar decomposition and a
/// symmetric eigensolve.
///
/// The Cartan involution is `g -> J g J`; the symmetric factor
/// `exp(s) = (g^T g)^{1/2}` has `s = [[0, v^T], [v, 0]]`, and a Householder
/// rotation taking `v/|v|` to the last axis reduces `exp(s)` to `a(|v|)`.
pub fn kak(g: &GroupElement) -> Result<KakDecomposition> {
    // membership gate scaled by |g|^2: the form residual of an exact group
    // element grows quadratically with its magnitude in floating point
    let (_, res) = lorentz_check(g.mat())?;
    let scale = g.mat().norm_inf();
    if res > GROUP_TOL * (1.0 + scale * scale) {
        return Err(Error::NotInGroup { residual: res });
    }
    let n = g.n();
    let d = n + 2;
    let m = g.mat().transpose().mul(g.mat());
    // the symmetric factor exp(s), s = [[0, v^T], [v, 0]], has spectrum
    // {e^{2t}, e^{-2t}, 1, ...} with dominant eigenvector (1, v/|v|)/sqrt2;
    // only the dominant pair is needed, which stays accurate even when
    // e^{-2t} drowns in rounding
    let (vals, v) = m.jacobi_eigen();
    let (imax, &lmax) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty spectrum");
    if lmax <= 0.0 {
        return Err(Error::NotInGroup { residual: f64::INFINITY });
    }
    let t = 0.5 * lmax.ln();
    if t < 1e-9 {
        // g is (numerically) in K already.
        return Ok(KakDecomposition {
            k1: GroupElement::from_mat_unchecked(orthogonal_cleanup(g.mat())),
            t: 0.0,
            k2: GroupElement::identity(n),
            degenerate: true,
        });
    }
    let mut w: Vec<f64> = (0..d).map(|i| v[(i, imax)]).collect();
    if w[0] < 0.0 {
        w = vecn::scale(&w, -1.0);
    }
    if w[0].abs() < 1e-8 {
        return Err(Error::NotInGroup { residual: f64::INFINITY });
    }
    let u = vecn::normalize(&w[1..]).ok_or(Error::NotInGroup { residual: f64::INFINITY })?;
    let q = householder_to_last_axis(&u);
    let mut k2m = Mat::identity(d);
    for i in 0..d - 1 {
        for j in 0..d - 1 {
            k2m[(1 + i, 1 + j)] = q[(i, j)];
        }
    }
    let k2 = GroupElement::from_mat_unchecked(k2m);
    // k1 = g k2 a(-t); q is symmetric so k2 is its own inverse.
    let k1m = g.mat().mul(k2.mat()).mul(boost(n, -t).mat());
    let k1 = GroupElement::from_mat_unchecked(orthogonal_cleanup(&k1m));
    Ok(KakDecomposition { k1, t, k2, degenerate: false })
}

/// Householder (symmetric, orthogonal) mapping the last axis to `u`.
fn householder_to_last_axis(u: &[f64]) -> Mat {
    let k = u.len();
    let mut h = u.to_vec();
    h[k - 1] -= 1.0;
    let hn2 = vecn::dot(&h, &h);
    if hn2 < 1e-24 {
        return Mat::identity(k);
    }
    let mut q = Mat::identity(k);
    for i in 0..k {
        for j in 0..k {
            q[(i, j)] -= 2.0 * h[i] * h[j] / hn2;
        }
    }
    q
}

/// One symmetric-orthogonalization Newton step `k <- (k + k^{-T}) / 2`,
/// twice; removes the numerical drift of a nearly orthogonal matrix.
fn orthogonal_cleanup(k: &Mat) -> Mat {
    let mut out = k.clone();
    for _ in 0..2 {
        if let Ok(inv) = out.inverse() {
            out = out.add(&inv.transpose()).scale(0.5);
        }
    }
    out
}

/// Random group element `exp(x) * (compact flip)` with algebra coordinates
/// uniform in `[-scale, scale]`; covers all components of the group when
/// `flips` is set.
pub fn random_group_element(rng: &mut SplitMix64, n: usize, scale: f64, flips: bool) -> GroupElement {
    let basis = algebra_basis(n);
    let coords: Vec<f64> = (0..basis.len()).map(|_| rng.uniform(-scale, scale)).collect();
    let x = from_basis_coords(&basis, &coords);
    let mut g = x.exp();
    if flips {
        let d = n + 2;
        let mut f = Mat::identity(d);
        if rng.next_f64() < 0.5 {
            f[(1, 1)] = -1.0;
        }
        if rng.next_f64() < 0.5 {
            f[(d - 1, d - 1)] = -1.0;
        }
        g = g.mul(&GroupElement::from_mat_unchecked(f));
    }
    GroupElement::new(g.mat().clone()).expect("exp of algebra element is in the group")
}

/// Random element of `P` with log-uniform scale, random rotation and
/// bounded translation.
pub fn random_parabolic(rng: &mut SplitMix64, n: usize, scale: f64) -> ParabolicElement {
    let lambda = rng.uniform(-scale, scale).exp();
    let rot = random_rotation(rng, n);
    let trans: Vec<f64> = (0..n).map(|_| rng.uniform(-scale, scale)).collect();
    ParabolicElement::new(lambda, rot, trans).expect("valid similarity")
}

/// Random special orthogonal matrix by Gram-Schmidt on Gaussian columns.
pub fn random_rotation(rng: &mut SplitMix64, n: usize) -> Mat {
    if n == 0 {
        return Mat::identity(0);
    }
    loop {
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut ok = true;
        for _ in 0..n {
            let mut v: Vec<f64> = (0..n).map(|_| rng.gaussian()).collect();
            for c in &cols {
                let p = vecn::dot(&v, c);
                for (vi, ci) in v.iter_mut().zip(c.iter()) {
                    *vi -= p * ci;
                }
            }
            match vecn::normalize(&v) {
                Some(u) => cols.push(u),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let mut q = Mat::zeros(n, n);
        for (j, c) in cols.iter().enumerate() {
            for i in 0..n {
                q[(i, j)] = c[i];
            }
        }
        // force det +1 by flipping the last column if needed
        if det_sign(&q) < 0.0 {
            for i in 0..n {
                q[(i, n - 1)] = -q[(i, n - 1)];
            }
        }
        return q;
    }
}

fn det_sign(m: &Mat) -> f64 {
    // LU with partial pivoting, sign only
    let n = m.rows;
    let mut a = m.clone();
    let mut sign = 1.0;
    for col in 0..n {
        let mut piv = col;
        let mut best = a[(col, col)].abs();
        for r in col + 1..n {
            if a[(r, col)].abs() > best {
                best = a[(r, col)].abs();
                piv = r;
            }
        }
        if best < 1e-300 {
            return 0.0;
        }
        if piv != col {
            for j in 0..n {
                a.data.swap(col * n + j, piv * n + j);
            }
            sign = -sign;
        }
        if a[(col, col)] < 0.0 {
            sign = -sign;
        }
        for r in col + 1..n {
            let f = a[(r, col)] / a[(col, col)];
            for j in col..n {
                let v = a[(col, j)];
                a[(r, j)] -= f * v;
            }
        }
    }
    sign
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lorentz_check_identity() {
        let (ok, res) = lorentz_check(&Mat::identity(4)).unwrap();
        assert!(ok);
        assert_eq!(res, 0.0);
    }

    #[test]
    fn lorentz_check_boost_block() {
        // diag boost built directly from cosh/sinh entries
        let t: f64 = 1.0;
        let m = Mat::from_rows(&[
            &[t.cosh(), 0.0, 0.0, t.sinh()],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[t.sinh(), 0.0, 0.0, t.cosh()],
        ]);
        let (ok, res) = lorentz_check(&m).unwrap();
        assert!(ok, "residual {res}");
    }

    #[test]
    fn lorentz_check_rejects_perturbation() {
        let mut m = Mat::identity(4);
        m[(1, 2)] += 1e-3;
        let (ok, res) = lorentz_check(&m).unwrap();
        assert!(!ok);
        assert!(res > 1e-10);
        assert!(GroupElement::new(m).is_err());
    }

    #[test]
    fn repair_small_violations() {
        let mut m = boost(2, 0.7).mat().clone();
        m[(0, 0)] += 3e-7;
        let g = GroupElement::new(m).unwrap();
        let (ok, _) = lorentz_check(g.mat()).unwrap();
        assert!(ok);
    }

    #[test]
    fn canonical_sign_idempotent_bit_exact() {
        let mut rng = SplitMix64::new(3);
        for _ in 0..20 {
            let g = random_group_element(&mut rng, 2, 1.0, true);
            let once = g.canonicalize();
            let twice = once.canonicalize();
            assert_eq!(once.mat().data, twice.mat().data);
        }
    }

    #[test]
    fn parabolic_identity_is_identity_matrix() {
        let p = ParabolicElement::identity(3);
        assert!(p.to_group().max_abs_diff(&GroupElement::identity(3)) < 1e-15);
    }

    #[test]
    fn parabolic_embeds_in_group_and_fixes_basepoint() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..20 {
            let p = random_parabolic(&mut rng, 3, 1.5);
            let g = p.to_group();
            let (ok, res) = lorentz_check(g.mat()).unwrap();
            assert!(ok, "residual {res}");
            // basepoint null vector e_0 + e_{n+1} is mapped to a multiple of itself
            let mut bp = vec![0.0; 5];
            bp[0] = 1.0;
            bp[4] = 1.0;
            let img = g.mat().mul_vec(&bp);
            let ratio = img[0];
            assert!(ratio.abs() > 1e-12);
            for i in 0..5 {
                assert!((img[i] - ratio * bp[i]).abs() < 1e-9 * ratio.abs());
            }
        }
    }

    #[test]
    fn exp_zero_is_identity() {
        let x = AlgebraElement::from_grading(&Grading::zero(2));
        assert!(x.exp().max_abs_diff(&GroupElement::identity(2)) < 1e-15);
    }

    #[test]
    fn pure_plus_is_nilpotent_exactly() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..50 {
            let u: Vec<f64> = (0..3).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let x = AlgebraElement::pure_plus(&u);
            let x2 = x.mat().mul(x.mat());
            let x3 = x2.mul(x.mat());
            assert_eq!(x3.norm(), 0.0, "x^3 must vanish to machine zero");
            // exp equals the terminating Taylor sum
            let taylor = Mat::identity(5).add(x.mat()).add(&x2.scale(0.5));
            assert!(x.exp().mat().max_abs_diff(&taylor) < 1e-12);
        }
    }

    #[test]
    fn pure_plus_pieces_commute() {
        let mut rng = SplitMix64::new(6);
        for _ in 0..20 {
            let u: Vec<f64> = (0..3).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let w: Vec<f64> = (0..3).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let x = AlgebraElement::pure_plus(&u);
            let y = AlgebraElement::pure_plus(&w);
            assert!(x.bracket(&y).mat().norm() < 1e-12);
        }
    }

    #[test]
    fn scal_component_exponentiates_to_boost() {
        let t = 0.8;
        let mut g = Grading::zero(3);
        g.scal = t;
        let x = AlgebraElement::from_grading(&g);
        assert!(x.exp().max_abs_diff(&boost(3, t)) < 1e-13);
    }

    #[test]
    fn grading_roundtrip() {
        let mut rng = SplitMix64::new(7);
        let basis = algebra_basis(3);
        for _ in 0..30 {
            let coords: Vec<f64> = (0..basis.len()).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let x = from_basis_coords(&basis, &coords);
            let g = x.grading();
            let back = AlgebraElement::from_grading(&g);
            assert!(back.mat().max_abs_diff(x.mat()) < 1e-12);
        }
    }

    #[test]
    fn basis_is_frobenius_orthonormal() {
        for n in [2usize, 3] {
            let basis = algebra_basis(n);
            assert_eq!(basis.len(), algebra_dim(n));
            for (i, a) in basis.iter().enumerate() {
                for (j, b) in basis.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((a.mat().dot(b.mat()) - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn adjoint_identity_is_identity() {
        let g = GroupElement::identity(2);
        let ad = adjoint(&g);
        assert!(ad.max_abs_diff(&Mat::identity(algebra_dim(2))) < 1e-12);
    }

    #[test]
    fn adjoint_of_boost_scales_nilpotents() {
        // Derived by direct conjugation: with chart action x -> e^t x, the
        // translations (n-) scale by e^t and the opposite nilpotent by e^-t.
        let n = 3;
        let t = 1.0;
        let a = boost(n, t);
        let basis = algebra_basis(n);
        let ad = adjoint(&a);
        for i in 0..n {
            // n+ occupies the first n slots
            assert!((ad[(i, i)] - (-t).exp()).abs() < 1e-12);
            // n- occupies the last n slots
            let j = basis.len() - n + i;
            assert!((ad[(j, j)] - t.exp()).abs() < 1e-12);
        }
        // boost and rotation block are fixed
        assert!((ad[(n, n)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adjoint_is_homomorphism() {
        let mut rng = SplitMix64::new(8);
        for _ in 0..10 {
            let g = random_group_element(&mut rng, 2, 0.8, false);
            let h = random_group_element(&mut rng, 2, 0.8, false);
            let lhs = adjoint(&g.mul(&h));
            let rhs = adjoint(&g).mul(&adjoint(&h));
            assert!(lhs.max_abs_diff(&rhs) < 1e-9);
        }
    }

    #[test]
    fn kak_identity_is_degenerate() {
        let d = kak(&GroupElement::identity(3)).unwrap();
        assert!(d.degenerate);
        assert_eq!(d.t, 0.0);
        assert!(d.reconstruct().max_abs_diff(&GroupElement::identity(3)) < 1e-12);
    }

    #[test]
    fn kak_of_pure_boost() {
        let g = boost(2, 2.0);
        let d = kak(&g).unwrap();
        assert!((d.t - 2.0).abs() < 1e-12);
        assert!(d.k1.max_abs_diff(&GroupElement::identity(2)) < 1e-10);
        assert!(d.k2.max_abs_diff(&GroupElement::identity(2)) < 1e-10);
        assert!(!d.degenerate);
    }

    #[test]
    fn kak_reconstructs_random_elements() {
        let mut rng = SplitMix64::new(9);
        for n in [2usize, 3] {
            for _ in 0..100 {
                let g = random_group_element(&mut rng, n, 1.5, true);
                let d = kak(&g).unwrap();
                assert!(d.t >= 0.0);
                let rec = d.reconstruct();
                assert!(
                    rec.max_abs_diff(&g) < 1e-9,
                    "reconstruction residual {}",
                    rec.max_abs_diff(&g)
                );
            }
        }
    }

    #[test]
    fn group_axioms_numerically() {
        let mut rng = SplitMix64::new(10);
        let n = 2;
        for _ in 0..30 {
            let g = random_group_element(&mut rng, n, 1.0, true);
            let h = random_group_element(&mut rng, n, 1.0, true);
            let k = random_group_element(&mut rng, n, 1.0, true);
            let (ok, _) = lorentz_check(g.mul(&h).mat()).unwrap();
            assert!(ok, "closure");
            let assoc = g.mul(&h).mul(&k).max_abs_diff(&g.mul(&h.mul(&k)));
            assert!(assoc < 1e-10, "associativity residual {assoc}");
            let inv_res = g.mul(&g.inverse()).max_abs_diff(&GroupElement::identity(n));
            assert!(inv_res < 1e-10, "inverse residual {inv_res}");
        }
    }
}
