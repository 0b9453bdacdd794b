//! Exact rational linear algebra and lattice enumeration.
//!
//! Everything here is arbitrary precision: matrix entries are
//! [`BigRational`], lattice vectors are [`BigInt`]. No floating point.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;

/// Exact rational scalar, always reduced with positive denominator.
pub type Rational = BigRational;

/// Lattice vector with arbitrary-precision integer entries.
pub type IntVector = Vec<BigInt>;

/// Dense integer matrix, row major.
pub type IntMatrix = Vec<Vec<BigInt>>;

#[derive(Debug, thiserror::Error)]
pub enum ExactError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric at entry ({i},{j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("matrix is not positive definite: leading principal minor {order} is not positive")]
    NotPositiveDefinite { order: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("candidate list for column {column} has {size} vectors, exceeding cap {cap}")]
    SearchSpaceExceeded { column: usize, size: usize, cap: usize },
    #[error("cannot parse rational from {input:?}")]
    ParseRational { input: String },
}

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Formats as `"p/q"`, or just `"p"` when the denominator is 1.
pub fn rational_to_string(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"p/q"` or `"p"`.
pub fn rational_from_str(s: &str) -> Result<Rational, ExactError> {
    let err = || ExactError::ParseRational { input: s.to_string() };
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| err())?;
            let q: BigInt = q.trim().parse().map_err(|_| err())?;
            if q.is_zero() {
                return Err(err());
            }
            Ok(Rational::new(p, q))
        }
        None => {
            let p: BigInt = s.parse().map_err(|_| err())?;
            Ok(Rational::from_integer(p))
        }
    }
}

/// Symmetric positive definite rational form; the tropical Riemann matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct QuadForm {
    g: usize,
    entries: Vec<Vec<Rational>>,
}

impl fmt::Debug for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "QuadForm {}x{} [", self.g, self.g)?;
        for row in &self.entries {
            let cells: Vec<String> = row.iter().map(rational_to_string).collect();
            writeln!(f, "  {}", cells.join(" "))?;
        }
        write!(f, "]")
    }
}

impl QuadForm {
    /// Validates symmetry and positive definiteness.
    pub fn new(entries: Vec<Vec<Rational>>) -> Result<Self, ExactError> {
        check_symmetric(&entries)?;
        if !is_positive_definite(&entries)? {
            let order = first_nonpositive_minor(&entries).unwrap_or(entries.len());
            return Err(ExactError::NotPositiveDefinite { order });
        }
        Ok(QuadForm { g: entries.len(), entries })
    }

    pub fn identity(g: usize) -> Self {
        let entries = (0..g)
            .map(|i| (0..g).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
            .collect();
        QuadForm { g, entries }
    }

    pub fn from_int_rows(rows: &[Vec<i64>]) -> Result<Self, ExactError> {
        let entries = rows.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect();
        QuadForm::new(entries)
    }

    pub fn dim(&self) -> usize {
        self.g
    }

    pub fn entries(&self) -> &Vec<Vec<Rational>> {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i][j]
    }

    /// Evaluates the quadratic form `v^t Q v` at an integer vector.
    pub fn norm_int(&self, v: &[BigInt]) -> Rational {
        let vr: Vec<Rational> = v.iter().map(|x| Rational::from_integer(x.clone())).collect();
        self.norm(&vr)
    }

    /// Evaluates `v^t Q v` at a rational vector.
    pub fn norm(&self, v: &[Rational]) -> Rational {
        self.pairing(v, v)
    }

    /// Evaluates the bilinear form `a^t Q b`.
    pub fn pairing(&self, a: &[Rational], b: &[Rational]) -> Rational {
        assert_eq!(a.len(), self.g);
        assert_eq!(b.len(), self.g);
        let mut acc = Rational::zero();
        for i in 0..self.g {
            if a[i].is_zero() {
                continue;
            }
            for j in 0..self.g {
                if b[j].is_zero() {
                    continue;
                }
                acc += &a[i] * &self.entries[i][j] * &b[j];
            }
        }
        acc
    }

    /// `a^t Q b` for integer vectors.
    pub fn pairing_int(&self, a: &[BigInt], b: &[BigInt]) -> Rational {
        let ar: Vec<Rational> = a.iter().map(|x| Rational::from_integer(x.clone())).collect();
        let br: Vec<Rational> = b.iter().map(|x| Rational::from_integer(x.clone())).collect();
        self.pairing(&ar, &br)
    }

    /// Matrix-vector product `Q x` over the rationals.
    pub fn apply(&self, x: &[Rational]) -> Vec<Rational> {
        (0..self.g)
            .map(|i| {
                let mut acc = Rational::zero();
                for j in 0..self.g {
                    acc += &self.entries[i][j] * &x[j];
                }
                acc
            })
            .collect()
    }

    /// Congruent transform `X^t Q X` for an integer matrix `X` (columns are images).
    pub fn congruent(&self, x: &IntMatrix) -> Result<Self, ExactError> {
        let g = self.g;
        if x.len() != g || x.iter().any(|r| r.len() != g) {
            return Err(ExactError::DimensionMismatch { expected: g, got: x.len() });
        }
        let cols: Vec<IntVector> = (0..g).map(|j| (0..g).map(|i| x[i][j].clone()).collect()).collect();
        let entries: Vec<Vec<Rational>> = (0..g)
            .map(|i| (0..g).map(|j| self.pairing_int(&cols[i], &cols[j])).collect())
            .collect();
        QuadForm::new(entries)
    }

    pub fn scale(&self, c: &Rational) -> Result<Self, ExactError> {
        let entries = self
            .entries
            .iter()
            .map(|row| row.iter().map(|e| e * c).collect())
            .collect();
        QuadForm::new(entries)
    }
}

fn check_symmetric(m: &[Vec<Rational>]) -> Result<(), ExactError> {
    let n = m.len();
    for row in m.iter() {
        if row.len() != n {
            return Err(ExactError::NotSquare { rows: n, cols: row.len() });
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if m[i][j] != m[j][i] {
                return Err(ExactError::NotSymmetric { i, j });
            }
        }
    }
    Ok(())
}

/// Exact positive-definiteness test: all leading principal minors positive.
pub fn is_positive_definite(m: &[Vec<Rational>]) -> Result<bool, ExactError> {
    check_symmetric(m)?;
    Ok(first_nonpositive_minor(m).is_none())
}

/// Runs symmetric elimination; returns the order of the first leading
/// principal minor that fails to be positive, or None when PD.
fn first_nonpositive_minor(m: &[Vec<Rational>]) -> Option<usize> {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    for k in 0..n {
        // pivot a[k][k] equals minor_{k+1}/minor_k, so PD iff all pivots > 0
        if a[k][k] <= Rational::zero() {
            return Some(k + 1);
        }
        for i in (k + 1)..n {
            let factor = &a[i][k] / &a[k][k];
            if factor.is_zero() {
                continue;
            }
            for j in k..n {
                let sub = &factor * &a[k][j];
                a[i][j] -= sub;
            }
        }
    }
    None
}

/// Square-root-free factorization `Q = L diag(D) L^t` with unit lower
/// triangular `L`, exact over the rationals.
pub fn ldl_decompose(q: &QuadForm) -> Result<(Vec<Vec<Rational>>, Vec<Rational>), ExactError> {
    let g = q.dim();
    let mut l: Vec<Vec<Rational>> = (0..g)
        .map(|i| (0..g).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
        .collect();
    let mut d: Vec<Rational> = vec![Rational::zero(); g];
    for j in 0..g {
        let mut dj = q.entry(j, j).clone();
        for k in 0..j {
            dj -= &l[j][k] * &l[j][k] * &d[k];
        }
        if dj <= Rational::zero() {
            return Err(ExactError::NotPositiveDefinite { order: j + 1 });
        }
        d[j] = dj;
        for i in (j + 1)..g {
            let mut v = q.entry(i, j).clone();
            for k in 0..j {
                v -= &l[i][k] * &l[j][k] * &d[k];
            }
            l[i][j] = v / &d[j];
        }
    }
    Ok((l, d))
}

/// All `lambda` in `Z^g` with `(lambda-x)^t Q (lambda-x) <= bound`, each with
/// its squared distance.
///
/// Fincke–Pohst recursion over the LDL factorization; the per-level integer
/// interval is scanned outward from the real center with exact inequality
/// tests, so no square roots are needed.
pub fn enumerate_close_vectors(
    q: &QuadForm,
    x: &[Rational],
    bound: &Rational,
) -> Result<Vec<(IntVector, Rational)>, ExactError> {
    let g = q.dim();
    if x.len() != g {
        return Err(ExactError::DimensionMismatch { expected: g, got: x.len() });
    }
    if bound < &Rational::zero() {
        return Ok(Vec::new());
    }
    let (l, d) = ldl_decompose(q)?;
    let mut out: Vec<(IntVector, Rational)> = Vec::new();
    let mut v: Vec<BigInt> = vec![BigInt::zero(); g];
    // levels run from g-1 down to 0; w_i = (v_i - x_i) + sum_{j>i} L[j][i] (v_j - x_j)
    struct Ctx<'a> {
        l: &'a [Vec<Rational>],
        d: &'a [Rational],
        x: &'a [Rational],
        bound: &'a Rational,
    }
    fn descend(
        ctx: &Ctx,
        level: usize,
        used: &Rational,
        v: &mut Vec<BigInt>,
        out: &mut Vec<(IntVector, Rational)>,
    ) {
        let g = ctx.d.len();
        let i = level;
        let mut center = ctx.x[i].clone();
        for j in (i + 1)..g {
            center -= &ctx.l[j][i] * (Rational::from_integer(v[j].clone()) - &ctx.x[j]);
        }
        let remaining = ctx.bound - used;
        // scan v_i downward from floor(center), then upward from floor(center)+1
        let floor_c = center.floor().to_integer();
        let try_value =
            |t: &BigInt, v: &mut Vec<BigInt>, out: &mut Vec<(IntVector, Rational)>| -> bool {
                let w = Rational::from_integer(t.clone()) - &center;
                let contrib = &ctx.d[i] * &w * &w;
                if contrib > remaining {
                    return false;
                }
                v[i] = t.clone();
                let used2 = used + contrib;
                if i == 0 {
                    out.push((v.clone(), used2));
                } else {
                    descend(ctx, i - 1, &used2, v, out);
                }
                true
            };
        let mut t = floor_c.clone();
        while try_value(&t, v, out) {
            t -= 1;
        }
        let mut t: BigInt = &floor_c + 1;
        while try_value(&t, v, out) {
            t += 1;
        }
        v[i] = BigInt::zero();
    }
    let ctx = Ctx { l: &l, d: &d, x, bound };
    descend(&ctx, g - 1, &Rational::zero(), &mut v, &mut out);
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// All `v` in `Z^g` with `v^t Q v <= bound`, in lexicographic order.
pub fn enumerate_by_norm(q: &QuadForm, bound: &Rational) -> Result<Vec<IntVector>, ExactError> {
    let zero = vec![Rational::zero(); q.dim()];
    Ok(enumerate_close_vectors(q, &zero, bound)?.into_iter().map(|(v, _)| v).collect())
}

/// Closest lattice point to `x` in the norm of `Q`: returns the minimizer
/// (lexicographically smallest on ties) and the squared distance.
pub fn closest_vector(q: &QuadForm, x: &[Rational]) -> Result<(IntVector, Rational), ExactError> {
    let g = q.dim();
    if x.len() != g {
        return Err(ExactError::DimensionMismatch { expected: g, got: x.len() });
    }
    let (l, d) = ldl_decompose(q)?;
    // incumbent from componentwise rounding
    let rounded: IntVector = x.iter().map(round_rational).collect();
    let diff: Vec<Rational> = (0..g)
        .map(|i| Rational::from_integer(rounded[i].clone()) - &x[i])
        .collect();
    let mut best_dist = q.norm(&diff);
    let mut best_vec = rounded;

    struct Ctx<'a> {
        l: &'a [Vec<Rational>],
        d: &'a [Rational],
        x: &'a [Rational],
    }
    // explores v_i outward from the continuous center so good candidates come early
    fn descend(
        ctx: &Ctx,
        level: usize,
        used: &Rational,
        v: &mut Vec<BigInt>,
        best_dist: &mut Rational,
        best_vec: &mut IntVector,
    ) {
        let g = ctx.d.len();
        let i = level;
        // w_i = (v_i - x_i) + sum_{j>i} L[j][i] (v_j - x_j); center of v_i is where w_i = 0
        let mut center = ctx.x[i].clone();
        for j in (i + 1)..g {
            center -= &ctx.l[j][i] * (Rational::from_integer(v[j].clone()) - &ctx.x[j]);
        }
        let mut candidates: Vec<BigInt> = Vec::new();
        let floor_c = center.floor().to_integer();
        let mut down = floor_c.clone();
        let mut up: BigInt = &floor_c + 1;
        // alternate down/up by true distance from center
        loop {
            let wd = &center - Rational::from_integer(down.clone());
            let wu = Rational::from_integer(up.clone()) - &center;
            let (t, w) = if wd <= wu {
                let t = down.clone();
                down -= 1;
                (t, wd)
            } else {
                let t = up.clone();
                up += 1;
                (t, wu)
            };
            let contrib = &ctx.d[i] * &w * &w;
            if used + &contrib > *best_dist {
                break;
            }
            candidates.push(t);
        }
        for t in candidates {
            let w = Rational::from_integer(t.clone()) - &center;
            let contrib = &ctx.d[i] * &w * &w;
            let used2 = used + &contrib;
            if used2 > *best_dist {
                continue;
            }
            v[i] = t;
            if i == 0 {
                if used2 < *best_dist || (used2 == *best_dist && *v < *best_vec) {
                    *best_dist = used2.clone();
                    *best_vec = v.clone();
                }
            } else {
                descend(ctx, i - 1, &used2, v, best_dist, best_vec);
            }
        }
        v[i] = BigInt::zero();
    }
    let ctx = Ctx { l: &l, d: &d, x };
    let mut v = vec![BigInt::zero(); g];
    descend(&ctx, g - 1, &Rational::zero(), &mut v, &mut best_dist, &mut best_vec);
    Ok((best_vec, best_dist))
}

/// Nearest integer to a rational, halves rounded up.
fn round_rational(r: &Rational) -> BigInt {
    (r + ratio(1, 2)).floor().to_integer()
}

pub const GL_CANDIDATE_CAP: usize = 1_000_000;

/// Searches for `X` in `GL_g(Z)` with `X^t Q X = Q'`.
///
/// Candidate columns are lattice vectors whose `Q`-norm matches the target
/// diagonal; backtracking checks pairwise inner products, columns are filled
/// in order of increasing candidate-list size.
pub fn gl_equivalence(
    q: &QuadForm,
    q_prime: &QuadForm,
    cap: usize,
) -> Result<Option<IntMatrix>, ExactError> {
    let g = q.dim();
    if q_prime.dim() != g {
        return Err(ExactError::DimensionMismatch { expected: g, got: q_prime.dim() });
    }
    if det_rational(q.entries()) != det_rational(q_prime.entries()) {
        return Ok(None);
    }
    let mut candidates: Vec<Vec<IntVector>> = Vec::with_capacity(g);
    for j in 0..g {
        let target = q_prime.entry(j, j);
        let all = enumerate_by_norm(q, target)?;
        let list: Vec<IntVector> = all.into_iter().filter(|v| &q.norm_int(v) == target).collect();
        if list.len() > cap {
            return Err(ExactError::SearchSpaceExceeded { column: j, size: list.len(), cap });
        }
        candidates.push(list);
    }
    let mut order: Vec<usize> = (0..g).collect();
    order.sort_by_key(|&j| candidates[j].len());

    // cols[j] = chosen column j of X (in original indexing)
    let mut cols: Vec<Option<IntVector>> = vec![None; g];
    fn place(
        q: &QuadForm,
        q_prime: &QuadForm,
        order: &[usize],
        candidates: &[Vec<IntVector>],
        pos: usize,
        cols: &mut Vec<Option<IntVector>>,
    ) -> bool {
        let g = order.len();
        if pos == g {
            let x: IntMatrix = (0..g)
                .map(|i| (0..g).map(|j| cols[j].as_ref().unwrap()[i].clone()).collect())
                .collect();
            let det = det_int(&x);
            return det.abs().is_one();
        }
        let j = order[pos];
        'cand: for cand in &candidates[j] {
            for &k in order[..pos].iter() {
                let placed = cols[k].as_ref().unwrap();
                if &q.pairing_int(cand, placed) != q_prime.entry(j, k) {
                    continue 'cand;
                }
            }
            cols[j] = Some(cand.clone());
            if place(q, q_prime, order, candidates, pos + 1, cols) {
                return true;
            }
            cols[j] = None;
        }
        false
    }
    if place(q, q_prime, &order, &candidates, 0, &mut cols) {
        let x: IntMatrix = (0..g)
            .map(|i| (0..g).map(|j| cols[j].as_ref().unwrap()[i].clone()).collect())
            .collect();
        Ok(Some(x))
    } else {
        Ok(None)
    }
}

// ---------------------------------------------------------------------------
// small exact matrix helpers shared by the tropical modules
// ---------------------------------------------------------------------------

pub fn det_rational(m: &[Vec<Rational>]) -> Rational {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    let mut det = Rational::one();
    for k in 0..n {
        let pivot_row = match (k..n).find(|&r| !a[r][k].is_zero()) {
            Some(r) => r,
            None => return Rational::zero(),
        };
        if pivot_row != k {
            a.swap(pivot_row, k);
            det = -det;
        }
        det *= &a[k][k].clone();
        for i in (k + 1)..n {
            let factor = &a[i][k] / &a[k][k];
            if factor.is_zero() {
                continue;
            }
            for j in k..n {
                let sub = &factor * &a[k][j];
                a[i][j] -= sub;
            }
        }
    }
    det
}

/// Fraction-free Bareiss determinant of an integer matrix.
pub fn det_int(m: &IntMatrix) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let mut sign = 1i8;
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match ((k + 1)..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(r, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                let t = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = &t / &prev;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    if sign < 0 {
        -a[n - 1][n - 1].clone()
    } else {
        a[n - 1][n - 1].clone()
    }
}

/// Solves `A y = b` exactly; None when `A` is singular.
pub fn solve_linear(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    for k in 0..n {
        let pivot_row = (k..n).find(|&r| !m[r][k].is_zero())?;
        m.swap(pivot_row, k);
        for i in 0..n {
            if i == k || m[i][k].is_zero() {
                continue;
            }
            let factor = &m[i][k] / &m[k][k];
            for j in k..=n {
                let sub = &factor * &m[k][j];
                m[i][j] -= sub;
            }
        }
    }
    Some((0..n).map(|i| &m[i][n] / &m[i][i]).collect())
}

/// Row rank of a rational matrix.
pub fn rank_rational(rows: &[Vec<Rational>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let ncols = m[0].len();
    let mut rank = 0;
    let mut col = 0;
    while rank < m.len() && col < ncols {
        match (rank..m.len()).find(|&r| !m[r][col].is_zero()) {
            None => {
                col += 1;
                continue;
            }
            Some(pr) => {
                m.swap(pr, rank);
                for i in (rank + 1)..m.len() {
                    if m[i][col].is_zero() {
                        continue;
                    }
                    let factor = &m[i][col] / &m[rank][col];
                    for j in col..ncols {
                        let sub = &factor * &m[rank][j];
                        m[i][j] -= sub;
                    }
                }
                rank += 1;
                col += 1;
            }
        }
    }
    rank
}

pub fn int_vec(v: &[i64]) -> IntVector {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

pub fn int_mat(rows: &[Vec<i64>]) -> IntMatrix {
    rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
}

/// Matrix product of integer matrices.
pub fn int_mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let n = a.len();
    let k = b.len();
    let m = b[0].len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut acc = BigInt::zero();
                    for t in 0..k {
                        acc += &a[i][t] * &b[t][j];
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub fn int_mat_transpose(a: &IntMatrix) -> IntMatrix {
    let n = a.len();
    let m = a[0].len();
    (0..m).map(|j| (0..n).map(|i| a[i][j].clone()).collect()).collect()
}
