//! Dense kernels for small complex matrices: one-sided Jacobi SVD and
//! polynomial root extraction via companion-matrix QR iteration.
//!
//! Sizes of interest are tiny (3..=64), so the implementations favor
//! determinism and accuracy over asymptotics. Everything here is pure and
//! allocation-local; no shared state.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("input contains a non-finite entry")]
    NonFiniteInput,
    #[error("matrix must be square {0}x{0} with 2 <= size <= 64, got {1}x{2}")]
    BadShape(usize, usize, usize),
    #[error("iteration cap reached without convergence")]
    NoConvergence,
    #[error("polynomial has degree zero after trimming")]
    DegreeZero,
}

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c));
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// SVD factors `m = U * diag(S) * Vh` with `S` sorted descending.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub vh: CMatrix,
}

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_TOL: f64 = 1e-14;

/// One-sided Jacobi SVD of a square complex matrix.
///
/// Deterministic for a given input: fixed cyclic sweep order and a phase
/// gauge that makes the largest-magnitude component of each left singular
/// vector real positive.
pub fn svd(m: &CMatrix) -> Result<SvdResult, LinalgError> {
    let n = m.rows();
    if m.rows() != m.cols() || !(2..=64).contains(&n) {
        return Err(LinalgError::BadShape(n, m.rows(), m.cols()));
    }
    if !m.is_finite() {
        return Err(LinalgError::NonFiniteInput);
    }

    // Work in column-major storage: Jacobi only ever touches column pairs.
    let mut w = vec![Complex64::new(0.0, 0.0); n * n];
    let mut v = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for i in 0..n {
            w[j * n + i] = m[(i, j)];
        }
        v[j * n + j] = Complex64::new(1.0, 0.0);
    }

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (alpha, beta, gamma) = column_gram(&w, n, p, q);
                let g = gamma.norm();
                if g <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let tau = (beta - alpha) / (2.0 * g);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = (c * t) * (gamma / g);
                rotate_columns(&mut w, n, p, q, c, s);
                rotate_columns(&mut v, n, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence);
    }

    // Column norms are the singular values; sort descending. Ties keep the
    // earlier column first so the factorization is reproducible.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| w[j * n..(j + 1) * n].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap().then(a.cmp(&b)));

    let mut u_cols = vec![Complex64::new(0.0, 0.0); n * n];
    let mut v_cols = vec![Complex64::new(0.0, 0.0); n * n];
    let mut s = Vec::with_capacity(n);
    let s_max = norms[order[0]];
    for (k, &j) in order.iter().enumerate() {
        s.push(norms[j]);
        v_cols[k * n..(k + 1) * n].copy_from_slice(&v[j * n..(j + 1) * n]);
        if norms[j] > s_max * 1e-300 && norms[j] > 0.0 {
            for i in 0..n {
                u_cols[k * n + i] = w[j * n + i] / norms[j];
            }
        }
        // zero-norm columns are filled by basis completion below
    }
    complete_orthonormal(&mut u_cols, n, &s, s_max);

    // Phase gauge: rotate each (u_k, v_k) pair so the dominant component of
    // u_k is real positive; u s v^H is unchanged.
    for k in 0..n {
        let col = &u_cols[k * n..(k + 1) * n];
        let mut best = 0usize;
        for i in 1..n {
            if col[i].norm_sqr() > col[best].norm_sqr() {
                best = i;
            }
        }
        let a = col[best];
        if a.norm() > 0.0 {
            let phase = a.conj() / a.norm();
            for i in 0..n {
                u_cols[k * n + i] *= phase;
                v_cols[k * n + i] *= phase;
            }
        }
    }

    let mut u = CMatrix::zeros(n, n);
    let mut vh = CMatrix::zeros(n, n);
    for k in 0..n {
        for i in 0..n {
            u[(i, k)] = u_cols[k * n + i];
            vh[(k, i)] = v_cols[k * n + i].conj();
        }
    }
    Ok(SvdResult { u, s, vh })
}

fn column_gram(w: &[Complex64], n: usize, p: usize, q: usize) -> (f64, f64, Complex64) {
    let cp = &w[p * n..(p + 1) * n];
    let cq = &w[q * n..(q + 1) * n];
    let mut alpha = 0.0;
    let mut beta = 0.0;
    let mut gamma = Complex64::new(0.0, 0.0);
    for i in 0..n {
        alpha += cp[i].norm_sqr();
        beta += cq[i].norm_sqr();
        gamma += cp[i].conj() * cq[i];
    }
    (alpha, beta, gamma)
}

#[inline]
fn rotate_columns(w: &mut [Complex64], n: usize, p: usize, q: usize, c: f64, s: Complex64) {
    debug_assert!(p < q);
    let (head, tail) = w.split_at_mut(q * n);
    let cp = &mut head[p * n..(p + 1) * n];
    let cq = &mut tail[..n];
    let s_conj = s.conj();
    for i in 0..n {
        let wp = cp[i];
        let wq = cq[i];
        cp[i] = c * wp - s_conj * wq;
        cq[i] = s * wp + c * wq;
    }
}

/// Replace (near-)zero columns with unit vectors orthogonal to the rest.
fn complete_orthonormal(u_cols: &mut [Complex64], n: usize, s: &[f64], s_max: f64) {
    for k in 0..n {
        if s[k] > s_max * 1e-300 && s[k] > 0.0 {
            continue;
        }
        // Gram-Schmidt each standard basis vector against the filled columns
        // and keep the one with the largest residual.
        let mut best: Option<(f64, Vec<Complex64>)> = None;
        for e in 0..n {
            let mut cand = vec![Complex64::new(0.0, 0.0); n];
            cand[e] = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j == k {
                    continue;
                }
                let col = &u_cols[j * n..(j + 1) * n];
                let dot: Complex64 = col.iter().zip(cand.iter()).map(|(a, b)| a.conj() * b).sum();
                for i in 0..n {
                    cand[i] -= dot * u_cols[j * n + i];
                }
            }
            let norm = cand.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if best.as_ref().map_or(true, |(bn, _)| norm > *bn) {
                best = Some((norm, cand));
            }
        }
        let (norm, cand) = best.unwrap();
        for i in 0..n {
            u_cols[k * n + i] = cand[i] / norm;
        }
    }
}

/// Top singular pair `(u1, v1)` of a square matrix by alternating power
/// iteration, for callers that only need the dominant subspace. Returns
/// `None` when the iteration has not settled within `max_iters` (e.g. when
/// the two leading singular values are nearly equal); callers then fall back
/// to the full SVD.
pub(crate) fn top_singular_pair(
    m: &CMatrix,
    max_iters: usize,
) -> Option<(Vec<Complex64>, Vec<Complex64>)> {
    let n = m.rows();
    debug_assert_eq!(n, m.cols());

    // Start from the largest-norm column (deterministic tie on first index).
    let mut best = 0usize;
    let mut best_norm = -1.0;
    for j in 0..n {
        let nj: f64 = (0..n).map(|i| m[(i, j)].norm_sqr()).sum();
        if nj > best_norm {
            best_norm = nj;
            best = j;
        }
    }
    if best_norm <= 0.0 {
        return None;
    }
    let mut u: Vec<Complex64> = (0..n).map(|i| m[(i, best)]).collect();
    normalize(&mut u)?;
    let mut v = vec![Complex64::new(0.0, 0.0); n];

    let mut prev_u = u.clone();
    for it in 0..max_iters {
        // v <- normalize(M^H u), u <- normalize(M v)
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                acc += m[(i, j)].conj() * u[i];
            }
            v[j] = acc;
        }
        normalize(&mut v)?;
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            let row = &m.data[i * n..(i + 1) * n];
            for j in 0..n {
                acc += row[j] * v[j];
            }
            u[i] = acc;
        }
        normalize(&mut u)?;

        if it > 0 {
            // Phase-aligned distance between successive iterates.
            let overlap: Complex64 = prev_u.iter().zip(&u).map(|(a, b)| a.conj() * b).sum();
            let misalign = (1.0 - overlap.norm()).abs();
            if misalign < 1e-26 {
                return Some((u, v));
            }
        }
        prev_u.copy_from_slice(&u);
    }
    None
}

fn normalize(v: &mut [Complex64]) -> Option<f64> {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    let inv = 1.0 / norm;
    for c in v.iter_mut() {
        *c *= inv;
    }
    Some(norm)
}

/// Complex polynomial with coefficients in ascending degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct CPolynomial {
    pub coeffs: Vec<Complex64>,
}

impl CPolynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    /// Coefficients with exactly-zero leading terms removed.
    pub fn trimmed(&self) -> &[Complex64] {
        let mut end = self.coeffs.len();
        while end > 1 && self.coeffs[end - 1] == Complex64::new(0.0, 0.0) {
            end -= 1;
        }
        &self.coeffs[..end]
    }

    pub fn degree(&self) -> usize {
        self.trimmed().len() - 1
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Scale-invariant residual of a candidate root.
    pub fn root_residual(&self, z: Complex64) -> f64 {
        let mut scale = 0.0;
        let mut pw = 1.0;
        let zb = z.norm().max(1.0);
        for c in self.coeffs.iter() {
            scale += c.norm() * pw;
            pw *= zb;
        }
        if scale == 0.0 {
            return 0.0;
        }
        self.eval(z).norm() / scale
    }

    pub fn derivative(&self) -> CPolynomial {
        if self.coeffs.len() <= 1 {
            return CPolynomial::new(vec![Complex64::new(0.0, 0.0)]);
        }
        CPolynomial::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, &c)| c * (i + 1) as f64)
                .collect(),
        )
    }

    /// Monic polynomial with the given roots (test and synthesis helper).
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= r * c;
            }
            coeffs = next;
        }
        Self::new(coeffs)
    }
}

const QR_MAX_ITERS_PER_ROOT: usize = 30;
const ROOT_RESIDUAL_CONTRACT: f64 = 1e-8;

/// All roots (with multiplicity) of a complex polynomial.
///
/// The engine is Aberth-Ehrlich simultaneous iteration from deterministic
/// circle guesses; if it cannot meet the residual contract the balanced
/// companion-matrix QR eigensolver takes over. Either way every returned
/// root satisfies the scale-invariant residual bound 1e-8.
pub fn companion_roots(p: &CPolynomial) -> Result<Vec<Complex64>, LinalgError> {
    companion_roots_hinted(p, None)
}

/// Like [`companion_roots`], but optionally seeded with start points (e.g.
/// the roots of a nearby polynomial). Falls back to cold starts and then to
/// the QR eigensolver whenever the residual contract is not met.
pub fn companion_roots_hinted(
    p: &CPolynomial,
    hint: Option<&[Complex64]>,
) -> Result<Vec<Complex64>, LinalgError> {
    let coeffs = p.trimmed();
    if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(LinalgError::NonFiniteInput);
    }
    let d = coeffs.len() - 1;
    if d == 0 {
        return Err(LinalgError::DegreeZero);
    }
    let poly = CPolynomial::new(coeffs.to_vec());

    // A relatively negligible leading coefficient puts roots near 1/eps;
    // simultaneous iteration cannot reach them, so go straight to QR.
    let max_c = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if coeffs[d].norm() >= 1e-13 * max_c {
        if let Some(start) = hint {
            if start.len() == d {
                if let Some(roots) = aberth(&poly, start, 20) {
                    return Ok(roots);
                }
            }
        }
        if let Some(roots) = aberth(&poly, &initial_circle(&poly), 60) {
            return Ok(roots);
        }
    }
    companion_roots_qr(&poly)
}

/// Deterministic cold-start points: a circle at the geometric-mean root
/// radius `|c0/cd|^(1/d)` (clamped by the Cauchy bound) with an angular
/// offset that breaks conjugate symmetry.
fn initial_circle(p: &CPolynomial) -> Vec<Complex64> {
    let coeffs = p.trimmed();
    let d = coeffs.len() - 1;
    let lead = coeffs[d].norm();
    let cauchy = 1.0 + coeffs[..d].iter().map(|c| c.norm() / lead).fold(0.0, f64::max);
    let tail = coeffs[0].norm();
    let radius = if tail > 0.0 {
        (tail / lead).powf(1.0 / d as f64).clamp(0.1, cauchy)
    } else {
        0.5f64.min(cauchy)
    };
    (0..d)
        .map(|k| Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / d as f64 + 0.4))
        .collect()
}

#[inline]
fn recip(z: Complex64) -> Complex64 {
    z.conj() * (1.0 / z.norm_sqr())
}

/// Aberth-Ehrlich simultaneous iteration. Returns `None` unless every root
/// meets the residual contract.
///
/// Stops when every step is at roundoff, or when the largest step stagnates
/// at a small value (multiple roots plateau at ~sqrt(eps) and cannot
/// improve further).
fn aberth(p: &CPolynomial, start: &[Complex64], max_iters: usize) -> Option<Vec<Complex64>> {
    let coeffs = &p.coeffs;
    let d = coeffs.len() - 1;
    let mut z: Vec<Complex64> = start.to_vec();
    let mut frozen = vec![false; d];
    let mut prev_max_step = f64::INFINITY;

    for _ in 0..max_iters {
        let mut max_step = 0.0f64;
        for i in 0..d {
            if frozen[i] {
                continue;
            }
            let zi = z[i];
            // Horner for p and p' in one pass.
            let mut pv = coeffs[d];
            let mut dv = Complex64::new(0.0, 0.0);
            for k in (0..d).rev() {
                dv = dv * zi + pv;
                pv = pv * zi + coeffs[k];
            }
            if pv.norm_sqr() == 0.0 {
                frozen[i] = true;
                continue;
            }
            if dv.norm_sqr() == 0.0 {
                // Perturb off the stationary point; deterministic.
                z[i] = zi + Complex64::new(1e-8, 1e-8) * (1.0 + zi.norm());
                max_step = f64::INFINITY;
                continue;
            }
            let newton = pv * recip(dv);
            let mut repulse = Complex64::new(0.0, 0.0);
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    let diff = zi - zj;
                    if diff.norm_sqr() > 0.0 {
                        repulse += recip(diff);
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * repulse;
            let step = if denom.norm_sqr() == 0.0 {
                newton
            } else {
                newton * recip(denom)
            };
            let zn = zi - step;
            let rel = step.norm() / (1.0 + zi.norm());
            if rel <= 1e-14 {
                frozen[i] = true;
            }
            max_step = max_step.max(rel);
            z[i] = zn;
        }
        if max_step <= 1e-13 {
            break;
        }
        // Plateau near multiple roots: steps are small but stop shrinking.
        if max_step <= 1e-6 && max_step >= 0.5 * prev_max_step {
            break;
        }
        prev_max_step = max_step;
    }

    if z.iter().all(|&zi| p.root_residual(zi) <= ROOT_RESIDUAL_CONTRACT) {
        Some(z)
    } else {
        None
    }
}

/// Roots as eigenvalues of the balanced companion matrix via shifted QR,
/// followed by a guarded Newton polish.
pub fn companion_roots_qr(p: &CPolynomial) -> Result<Vec<Complex64>, LinalgError> {
    let coeffs = p.trimmed();
    if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(LinalgError::NonFiniteInput);
    }
    let d = coeffs.len() - 1;
    if d == 0 {
        return Err(LinalgError::DegreeZero);
    }

    // Monic companion matrix: ones on the subdiagonal, -c_i/c_d in the last
    // column. Upper Hessenberg by construction.
    let lead = coeffs[d];
    let mut h = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 1..d {
        h[i * d + (i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..d {
        h[i * d + (d - 1)] = -coeffs[i] / lead;
    }
    balance(&mut h, d);

    let mut roots = hessenberg_eigenvalues(&mut h, d)?;

    // Guarded Newton polish: keep a step only if it reduces |p(z)|.
    let poly = CPolynomial::new(coeffs.to_vec());
    let dpoly = poly.derivative();
    for r in roots.iter_mut() {
        let mut z = *r;
        let mut pz = poly.eval(z);
        for _ in 0..3 {
            let dz = dpoly.eval(z);
            if dz.norm() == 0.0 {
                break;
            }
            let step = pz / dz;
            let z_new = z - step;
            let pz_new = poly.eval(z_new);
            if pz_new.norm() < pz.norm() {
                z = z_new;
                pz = pz_new;
            } else {
                break;
            }
        }
        *r = z;
    }
    Ok(roots)
}

/// Parlett-Reinsch balancing with radix-2 scaling (exact in binary fp).
fn balance(h: &mut [Complex64], n: usize) {
    const RADIX: f64 = 2.0;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += h[j * n + i].norm();
                    r += h[i * n + j].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            while c < r / RADIX {
                c *= RADIX;
                r /= RADIX;
                f *= RADIX;
            }
            while c >= r * RADIX {
                c /= RADIX;
                r *= RADIX;
                f /= RADIX;
            }
            if c + r < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    h[i * n + j] *= inv; // row i
                    h[j * n + i] *= f; // column i
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Eigenvalues of an upper Hessenberg complex matrix by explicit-shift QR
/// with Givens rotations and Wilkinson shifts.
fn hessenberg_eigenvalues(h: &mut [Complex64], n: usize) -> Result<Vec<Complex64>, LinalgError> {
    let eps = f64::EPSILON;
    let mut roots = Vec::with_capacity(n);
    let mut hi = n;
    let mut stall = 0usize;
    let budget = QR_MAX_ITERS_PER_ROOT * n;
    let mut total = 0usize;

    let at = |h: &[Complex64], i: usize, j: usize| h[i * n + j];

    while hi > 0 {
        // Deflate trailing 1x1 / 2x2 blocks and find the active block start.
        let mut lo = hi - 1;
        while lo > 0 {
            let sub = at(h, lo, lo - 1).norm();
            if sub <= eps * (at(h, lo - 1, lo - 1).norm() + at(h, lo, lo).norm()) {
                h[lo * n + (lo - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }

        if lo == hi - 1 {
            roots.push(at(h, lo, lo));
            hi -= 1;
            stall = 0;
            continue;
        }
        if lo == hi - 2 {
            let (r1, r2) = eig2(at(h, lo, lo), at(h, lo, lo + 1), at(h, lo + 1, lo), at(h, lo + 1, lo + 1));
            roots.push(r1);
            roots.push(r2);
            hi -= 2;
            stall = 0;
            continue;
        }

        total += 1;
        stall += 1;
        if total > budget {
            return Err(LinalgError::NoConvergence);
        }

        // Wilkinson shift from the trailing 2x2; every 10 stalled iterations
        // fall back to an exceptional real shift to break symmetry cycles.
        let mu = if stall % 10 == 0 {
            Complex64::new(
                at(h, hi - 1, hi - 2).norm() + at(h, hi - 2, hi.saturating_sub(3).max(lo)).norm(),
                0.0,
            )
        } else {
            let a = at(h, hi - 2, hi - 2);
            let b = at(h, hi - 2, hi - 1);
            let c = at(h, hi - 1, hi - 2);
            let d = at(h, hi - 1, hi - 1);
            let (r1, r2) = eig2(a, b, c, d);
            if (r1 - d).norm() <= (r2 - d).norm() {
                r1
            } else {
                r2
            }
        };

        qr_step(h, n, lo, hi, mu);
    }
    Ok(roots)
}

/// Eigenvalues of a 2x2 complex matrix.
fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let half_tr = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (half_tr * half_tr - det).sqrt();
    (half_tr + disc, half_tr - disc)
}

/// One explicit-shift QR sweep on the active block `[lo, hi)`.
fn qr_step(h: &mut [Complex64], n: usize, lo: usize, hi: usize, mu: Complex64) {
    for i in lo..hi {
        h[i * n + i] -= mu;
    }

    // Left Givens sweep: zero the subdiagonal, remembering each rotation.
    let m = hi - lo - 1;
    let mut rot = Vec::with_capacity(m);
    for i in lo..hi - 1 {
        let f = h[i * n + i];
        let g = h[(i + 1) * n + i];
        let (c, s) = givens(f, g);
        rot.push((c, s));
        for j in i..hi {
            let a = h[i * n + j];
            let b = h[(i + 1) * n + j];
            h[i * n + j] = c * a + s * b;
            h[(i + 1) * n + j] = -s.conj() * a + c * b;
        }
    }

    // Right multiply by the adjoints: H <- R * G_lo^H ... G_{hi-2}^H.
    for (k, &(c, s)) in rot.iter().enumerate() {
        let i = lo + k;
        let s_conj = s.conj();
        let top = (i + 2).min(hi);
        for r in lo..top {
            let a = h[r * n + i];
            let b = h[r * n + i + 1];
            h[r * n + i] = c * a + s_conj * b;
            h[r * n + i + 1] = -s * a + c * b;
        }
    }

    for i in lo..hi {
        h[i * n + i] += mu;
    }
}

/// Complex Givens rotation zeroing `g` against `f`.
fn givens(f: Complex64, g: Complex64) -> (f64, Complex64) {
    let fa = f.norm();
    let ga = g.norm();
    if ga == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if fa == 0.0 {
        return (0.0, g.conj() / ga);
    }
    let r = (fa * fa + ga * ga).sqrt();
    let c = fa / r;
    let s = (f / fa) * (g.conj() / r);
    (c, s)
}
