//! Numerical Riemann theta functions with characteristics, the
//! Schottky–Igusa modular form, Kempf recovery of the canonical curve,
//! tritangent planes, and the tropical-limit checker.
//!
//! Everything here is double precision. The series (over `n` in `Z^4`) is
//! truncated to an ellipsoid whose radius comes from a Gaussian-tail bound;
//! at `z = 0` terms are summed in `+-` pairs so that odd theta constants
//! cancel exactly.

use crate::exact::QuadForm;
use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub type C64 = Complex64;

#[derive(Debug, thiserror::Error)]
pub enum ClassicalError {
    #[error("matrix is not symmetric: |tau[{i}][{j}] - tau[{j}][{i}]| too large")]
    NotSymmetric { i: usize, j: usize },
    #[error("imaginary part is not positive definite")]
    ImaginaryPartNotPD,
    #[error("accuracy must be positive")]
    BadAccuracy,
    #[error("no singular point of the theta divisor found after {restarts} restarts")]
    NoSingularityFound { restarts: usize },
}

// ---------------------------------------------------------------------------
// characteristics
// ---------------------------------------------------------------------------

/// Theta characteristic m = (m', m'') in (Z/2Z)^8.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Characteristic {
    pub upper: [u8; 4],
    pub lower: [u8; 4],
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Parity {
    Even,
    Odd,
}

impl Characteristic {
    pub fn new(upper: [u8; 4], lower: [u8; 4]) -> Self {
        Characteristic { upper: upper.map(|b| b & 1), lower: lower.map(|b| b & 1) }
    }

    pub fn zero() -> Self {
        Characteristic { upper: [0; 4], lower: [0; 4] }
    }

    /// Bit encoding: bits 0..4 = m', bits 4..8 = m''.
    pub fn bits(&self) -> u8 {
        let mut b = 0u8;
        for i in 0..4 {
            b |= self.upper[i] << i;
            b |= self.lower[i] << (4 + i);
        }
        b
    }

    pub fn from_bits(b: u8) -> Self {
        let mut m = Characteristic::zero();
        for i in 0..4 {
            m.upper[i] = (b >> i) & 1;
            m.lower[i] = (b >> (4 + i)) & 1;
        }
        m
    }

    pub fn add(&self, other: &Characteristic) -> Characteristic {
        Characteristic {
            upper: std::array::from_fn(|i| self.upper[i] ^ other.upper[i]),
            lower: std::array::from_fn(|i| self.lower[i] ^ other.lower[i]),
        }
    }

    pub fn all() -> impl Iterator<Item = Characteristic> {
        (0u16..256).map(|b| Characteristic::from_bits(b as u8))
    }

    /// Eight digits, m' then m''.
    pub fn label(&self) -> String {
        let mut s = String::with_capacity(8);
        for b in self.upper.iter().chain(&self.lower) {
            s.push(if *b == 0 { '0' } else { '1' });
        }
        s
    }
}

/// Sign e(m) = (-1)^{m' . m''} classifying characteristics as even or odd.
pub fn parity(m: &Characteristic) -> Parity {
    let dot: u8 = (0..4).map(|i| m.upper[i] & m.lower[i]).fold(0, |a, b| a ^ b);
    if dot == 0 {
        Parity::Even
    } else {
        Parity::Odd
    }
}

fn sign(m: &Characteristic) -> i32 {
    match parity(m) {
        Parity::Even => 1,
        Parity::Odd => -1,
    }
}

/// e(m1) e(m2) e(m3) e(m1+m2+m3) = -1.
pub fn is_azygetic(m1: &Characteristic, m2: &Characteristic, m3: &Characteristic) -> bool {
    let m123 = m1.add(m2).add(m3);
    sign(m1) * sign(m2) * sign(m3) * sign(&m123) == -1
}

// ---------------------------------------------------------------------------
// Riemann matrices
// ---------------------------------------------------------------------------

/// Complex symmetric 4x4 matrix with positive definite imaginary part.
#[derive(Clone, Debug)]
pub struct RiemannMatrix {
    tau: Matrix4<C64>,
    im: Matrix4<f64>,
    /// upper-triangular Cholesky factor of Im tau: im = U^t U
    chol_u: Matrix4<f64>,
    lambda_min: f64,
}

impl RiemannMatrix {
    pub fn new(rows: [[C64; 4]; 4]) -> Result<Self, ClassicalError> {
        let tau = Matrix4::from_fn(|i, j| rows[i][j]);
        // relative symmetry tolerance 1e-12
        let scale = tau.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
        for i in 0..4 {
            for j in (i + 1)..4 {
                if (tau[(i, j)] - tau[(j, i)]).norm() > 1e-12 * scale {
                    return Err(ClassicalError::NotSymmetric { i, j });
                }
            }
        }
        let im = Matrix4::from_fn(|i, j| tau[(i, j)].im);
        let chol = nalgebra::Cholesky::new(im).ok_or(ClassicalError::ImaginaryPartNotPD)?;
        let chol_u = chol.l().transpose();
        let eig = nalgebra::SymmetricEigen::new(im);
        let lambda_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(lambda_min > 0.0) {
            return Err(ClassicalError::ImaginaryPartNotPD);
        }
        Ok(RiemannMatrix { tau, im, chol_u, lambda_min })
    }

    pub fn from_re_im(re: [[f64; 4]; 4], im: [[f64; 4]; 4]) -> Result<Self, ClassicalError> {
        RiemannMatrix::new(std::array::from_fn(|i| {
            std::array::from_fn(|j| C64::new(re[i][j], im[i][j]))
        }))
    }

    /// tau = P + t i Q for a rational form Q and real symmetric shift P.
    pub fn from_scaled_form(p: &[[f64; 4]; 4], q: &QuadForm, t: f64) -> Result<Self, ClassicalError> {
        let qf: [[f64; 4]; 4] = std::array::from_fn(|i| {
            std::array::from_fn(|j| q.entry(i, j).to_f64().unwrap_or(f64::NAN))
        });
        RiemannMatrix::new(std::array::from_fn(|i| {
            std::array::from_fn(|j| C64::new(p[i][j], t * qf[i][j]))
        }))
    }

    pub fn entries(&self) -> &Matrix4<C64> {
        &self.tau
    }

    pub fn im(&self) -> &Matrix4<f64> {
        &self.im
    }

    fn q_im(&self, x: &Vector4<f64>) -> f64 {
        let ux = self.chol_u * x;
        ux.dot(&ux)
    }
}

// ---------------------------------------------------------------------------
// series evaluation
// ---------------------------------------------------------------------------

/// Lattice points n with (n + center)^t Y (n + center) <= radius^2,
/// recursively from the Cholesky factor. Deterministic order:
/// decreasing ellipsoidal norm, then lexicographic.
fn ellipsoid_points(rm: &RiemannMatrix, center: &Vector4<f64>, radius: f64) -> Vec<(Vector4<f64>, f64)> {
    let u = &rm.chol_u;
    let r2 = radius * radius;
    let mut out: Vec<(Vector4<f64>, f64)> = Vec::new();
    let mut n = [0f64; 4];
    // level i from 3 down to 0; partial = sum of d_k w_k^2 for k > i
    fn descend(
        u: &Matrix4<f64>,
        center: &Vector4<f64>,
        r2: f64,
        level: usize,
        used: f64,
        n: &mut [f64; 4],
        out: &mut Vec<(Vector4<f64>, f64)>,
    ) {
        let i = level;
        // w_i = u[i][i] (n_i + c_i) + sum_{j>i} u[i][j] (n_j + c_j)
        let mut shift = 0.0;
        for j in (i + 1)..4 {
            shift += u[(i, j)] * (n[j] + center[j]);
        }
        let uii = u[(i, i)];
        let rem = r2 - used;
        if rem < 0.0 {
            return;
        }
        let half_width = rem.sqrt() / uii;
        let c = -center[i] - shift / uii;
        let lo = (c - half_width).ceil() as i64;
        let hi = (c + half_width).floor() as i64;
        for t in lo..=hi {
            n[i] = t as f64;
            let w = uii * (n[i] - c);
            let used2 = used + w * w;
            if used2 > r2 + 1e-9 {
                continue;
            }
            if i == 0 {
                let v = Vector4::new(n[0], n[1], n[2], n[3]);
                out.push((v, used2));
            } else {
                descend(u, center, r2, i - 1, used2, n, out);
            }
        }
        n[i] = 0.0;
    }
    descend(u, center, r2, 3, 0.0, &mut n, &mut out);
    out.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| a.0.iter().partial_cmp(b.0.iter()).unwrap())
    });
    out
}

/// Truncation radius so the dropped tail is below eps times the leading
/// term, for derivative order `order`. Conservative shell-count bound:
/// the tail over q(v) > rho^2 is at most
///   sum_j N(rho+j) (2 pi (rho+j+1)/sqrt(lmin))^order exp(-pi (rho+j)^2)
/// with N(r) = (2(r+1)/sqrt(lmin) + 2)^4 box-counted lattice points.
fn truncation_radius(lambda_min: f64, q0: f64, eps: f64, order: usize) -> f64 {
    let sl = lambda_min.sqrt();
    let target = eps * (-PI * q0).exp();
    let tail = |rho: f64| -> f64 {
        let mut acc = 0.0;
        for j in 0..200 {
            let r = rho + j as f64;
            let count = (2.0 * (r + 1.0) / sl + 2.0).powi(4);
            let deriv = (2.0 * PI * (r + 1.0) / sl).powi(order as i32).max(1.0);
            let term = count * deriv * (-PI * r * r).exp();
            acc += term;
            if term < 1e-300 {
                break;
            }
        }
        acc
    };
    let mut rho = q0.sqrt() + 1.0;
    while tail(rho) > target && rho < 60.0 {
        rho += 0.25;
    }
    rho
}

/// Value and derivative tensors of theta[m](tau, .) at a point.
#[derive(Clone, Debug)]
pub struct ThetaJet {
    pub value: C64,
    pub grad: [C64; 4],
    pub hess: [[C64; 4]; 4],
    pub third: [[[C64; 4]; 4]; 4],
    pub order: usize,
}

impl ThetaJet {
    fn zero(order: usize) -> Self {
        ThetaJet {
            value: C64::new(0.0, 0.0),
            grad: [C64::new(0.0, 0.0); 4],
            hess: [[C64::new(0.0, 0.0); 4]; 4],
            third: [[[C64::new(0.0, 0.0); 4]; 4]; 4],
            order,
        }
    }

    fn accumulate(&mut self, v: &Vector4<f64>, base: C64) {
        self.value += base;
        if self.order == 0 {
            return;
        }
        let f = C64::new(0.0, 2.0 * PI); // 2 pi i
        for a in 0..4 {
            let ta = base * f * v[a];
            self.grad[a] += ta;
            if self.order >= 2 {
                for b in 0..4 {
                    let tb = ta * f * v[b];
                    self.hess[a][b] += tb;
                    if self.order >= 3 {
                        for c in 0..4 {
                            self.third[a][b][c] += tb * f * v[c];
                        }
                    }
                }
            }
        }
    }
}

/// cos(pi s) and sin(pi s) for s an exact multiple of 1/2.
fn cos_sin_pi_half_integer(s: f64) -> (f64, f64) {
    let t = (2.0 * s).round() as i64;
    match t.rem_euclid(4) {
        0 => (1.0, 0.0),
        1 => (0.0, 1.0),
        2 => (-1.0, 0.0),
        _ => (0.0, -1.0),
    }
}

/// Riemann theta with characteristic, value and derivatives up to `order`.
///
/// At `z = 0` the sum is organized in pairs (v, -v), which makes every odd
/// theta constant vanish identically and halves the work.
pub fn theta_jet(
    m: &Characteristic,
    rm: &RiemannMatrix,
    z: &[C64; 4],
    order: usize,
    eps: f64,
) -> ThetaJet {
    assert!(order <= 3, "derivatives implemented up to order 3");
    let at_zero = z.iter().all(|c| c.re == 0.0 && c.im == 0.0);
    let half_m1 = Vector4::new(
        m.upper[0] as f64 / 2.0,
        m.upper[1] as f64 / 2.0,
        m.upper[2] as f64 / 2.0,
        m.upper[3] as f64 / 2.0,
    );
    let tau = &rm.tau;
    let quad = |v: &Vector4<f64>| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                acc += tau[(i, j)] * v[i] * v[j];
            }
        }
        acc
    };

    if at_zero {
        // center = m'/2; q0 from the rounded closest point
        let closest = Vector4::from_fn(|i, _| -half_m1[i].round());
        let q0 = rm.q_im(&(closest + half_m1));
        let rho = truncation_radius(rm.lambda_min, q0, eps, order);
        let pts = ellipsoid_points(rm, &half_m1, rho);
        let mut jet = ThetaJet::zero(order);
        for (n, _) in &pts {
            let v = n + half_m1;
            // canonical representative of the pair {v, -v}
            let first_nonzero = v.iter().find(|x| **x != 0.0);
            match first_nonzero {
                None => {
                    // v = 0 contributes exp(0) = 1 to the value only
                    jet.value += C64::new(1.0, 0.0);
                }
                Some(x) if *x > 0.0 => {
                    // s = v . m'' is an exact multiple of 1/2
                    let s: f64 =
                        (0..4).map(|i| v[i] * m.lower[i] as f64).sum();
                    let (c, si) = cos_sin_pi_half_integer(s);
                    let e = (C64::new(0.0, PI) * quad(&v)).exp();
                    // even orders pick up 2cos(pi s), odd orders 2i sin(pi s)
                    let pair_even = e * (2.0 * c);
                    let pair_odd = e * C64::new(0.0, 2.0 * si);
                    jet.value += pair_even;
                    if order >= 1 {
                        let f = C64::new(0.0, 2.0 * PI);
                        for a in 0..4 {
                            let ta = f * v[a];
                            jet.grad[a] += pair_odd * ta;
                            if order >= 2 {
                                for b in 0..4 {
                                    let tb = ta * f * v[b];
                                    jet.hess[a][b] += pair_even * tb;
                                    if order >= 3 {
                                        for cc in 0..4 {
                                            jet.third[a][b][cc] += pair_odd * tb * f * v[cc];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        return jet;
    }

    // general z: single-term loop over the shifted ellipsoid
    let y_im = Vector4::new(z[0].im, z[1].im, z[2].im, z[3].im);
    let w = rm
        .im
        .clone()
        .lu()
        .solve(&y_im)
        .unwrap_or_else(|| Vector4::zeros());
    let center = half_m1 + w;
    let closest = Vector4::from_fn(|i, _| -center[i].round());
    let q0 = rm.q_im(&(closest + center));
    let rho = truncation_radius(rm.lambda_min, q0, eps, order);
    let pts = ellipsoid_points(rm, &center, rho);
    let zs = Vector4::new(
        z[0] + C64::new(m.lower[0] as f64 / 2.0, 0.0),
        z[1] + C64::new(m.lower[1] as f64 / 2.0, 0.0),
        z[2] + C64::new(m.lower[2] as f64 / 2.0, 0.0),
        z[3] + C64::new(m.lower[3] as f64 / 2.0, 0.0),
    );
    let mut jet = ThetaJet::zero(order);
    // factor exp(pi y^t Y^-1 y) is NOT divided out: terms are summed as is,
    // smallest magnitude first
    for (n, _) in &pts {
        let v = n + half_m1;
        let mut lin = C64::new(0.0, 0.0);
        for i in 0..4 {
            lin += zs[i] * v[i];
        }
        let exponent = C64::new(0.0, PI) * quad(&v) + C64::new(0.0, 2.0 * PI) * lin;
        jet.accumulate(&v, exponent.exp());
    }
    jet
}

/// theta[m](tau, z) to accuracy eps.
pub fn theta(m: &Characteristic, rm: &RiemannMatrix, z: &[C64; 4], eps: f64) -> C64 {
    theta_jet(m, rm, z, 0, eps).value
}

/// Theta constant theta[m](tau, 0).
pub fn theta_constant(m: &Characteristic, rm: &RiemannMatrix, eps: f64) -> C64 {
    theta_jet(m, rm, &[C64::new(0.0, 0.0); 4], 0, eps).value
}

// ---------------------------------------------------------------------------
// log-scale theta constants for the tropical limit
// ---------------------------------------------------------------------------

/// Complex value stored as `unit * exp(log_mag)`.
#[derive(Clone, Copy, Debug)]
pub struct LogComplex {
    pub log_mag: f64,
    pub unit: C64,
}

impl LogComplex {
    pub fn zero() -> Self {
        LogComplex { log_mag: f64::NEG_INFINITY, unit: C64::new(0.0, 0.0) }
    }

    pub fn from_c64(c: C64) -> Self {
        let n = c.norm();
        if n == 0.0 {
            Self::zero()
        } else {
            LogComplex { log_mag: n.ln(), unit: c / n }
        }
    }

    pub fn value(&self) -> C64 {
        self.unit * self.log_mag.exp()
    }

    pub fn mul(&self, other: &LogComplex) -> LogComplex {
        LogComplex { log_mag: self.log_mag + other.log_mag, unit: self.unit * other.unit }
    }

    /// Max-factored sum of scaled terms `coeff_k * t_k`.
    pub fn sum(terms: &[(f64, LogComplex)]) -> LogComplex {
        let m = terms
            .iter()
            .filter(|(c, t)| *c != 0.0 && t.log_mag.is_finite())
            .map(|(_, t)| t.log_mag)
            .fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return LogComplex::zero();
        }
        let mut acc = C64::new(0.0, 0.0);
        for (c, t) in terms {
            if *c != 0.0 && t.log_mag.is_finite() {
                acc += (t.log_mag - m).exp() * t.unit * *c;
            }
        }
        let n = acc.norm();
        if n == 0.0 {
            LogComplex::zero()
        } else {
            LogComplex { log_mag: m + n.ln(), unit: acc / n }
        }
    }
}

/// Theta constant as a LogComplex, for regimes where the value underflows.
pub fn theta_constant_log(m: &Characteristic, rm: &RiemannMatrix, eps: f64) -> LogComplex {
    let half_m1 = Vector4::new(
        m.upper[0] as f64 / 2.0,
        m.upper[1] as f64 / 2.0,
        m.upper[2] as f64 / 2.0,
        m.upper[3] as f64 / 2.0,
    );
    let closest = Vector4::from_fn(|i, _| -half_m1[i].round());
    let q0 = rm.q_im(&(closest + half_m1));
    let rho = truncation_radius(rm.lambda_min, q0, eps, 0);
    let pts = ellipsoid_points(rm, &half_m1, rho);
    let tau = &rm.tau;
    // pair terms, magnitudes factored against exp(-pi q0)
    let mut terms: Vec<(f64, LogComplex)> = Vec::new();
    for (n, _) in &pts {
        let v = n + half_m1;
        let first_nonzero = v.iter().find(|x| **x != 0.0);
        let (coeff, phase_re): (f64, C64) = match first_nonzero {
            None => (1.0, C64::new(1.0, 0.0)),
            Some(x) if *x > 0.0 => {
                let s: f64 = (0..4).map(|i| v[i] * m.lower[i] as f64).sum();
                let (c, _) = cos_sin_pi_half_integer(s);
                if c == 0.0 {
                    continue;
                }
                // exp(pi i v^t tau v) = exp(pi i Re) * exp(-pi q(v))
                let mut re_quad = 0.0;
                for i in 0..4 {
                    for j in 0..4 {
                        re_quad += tau[(i, j)].re * v[i] * v[j];
                    }
                }
                (2.0 * c, (C64::new(0.0, PI * re_quad)).exp())
            }
            _ => continue,
        };
        let q = rm.q_im(&v);
        terms.push((coeff, LogComplex { log_mag: -PI * q, unit: phase_re }));
    }
    LogComplex::sum(&terms)
}

// ---------------------------------------------------------------------------
// the Schottky–Igusa modular form
// ---------------------------------------------------------------------------

/// The fixed azygetic triple and subgroup generators used for the degree-16
/// modular form.
pub fn igusa_characteristics() -> ([Characteristic; 3], [Characteristic; 3]) {
    (
        [
            Characteristic::new([1, 0, 1, 0], [1, 0, 1, 0]),
            Characteristic::new([0, 0, 0, 1], [1, 0, 0, 0]),
            Characteristic::new([0, 0, 1, 1], [1, 0, 1, 1]),
        ],
        [
            Characteristic::new([0, 0, 0, 1], [1, 1, 1, 0]),
            Characteristic::new([0, 0, 1, 1], [0, 0, 0, 1]),
            Characteristic::new([0, 0, 1, 0], [1, 0, 1, 1]),
        ],
    )
}

/// The three cosets m_i + N, eight characteristics each.
pub fn igusa_cosets() -> [[Characteristic; 8]; 3] {
    let (ms, ns) = igusa_characteristics();
    std::array::from_fn(|i| {
        let mut coset = [Characteristic::zero(); 8];
        for a in 0u8..8 {
            let mut m = ms[i];
            for (k, n) in ns.iter().enumerate() {
                if (a >> k) & 1 == 1 {
                    m = m.add(n);
                }
            }
            coset[a as usize] = m;
        }
        coset
    })
}

#[derive(Clone, Debug)]
pub struct SchottkyIgusa {
    /// the three coset products pi_i
    pub products: [LogComplex; 3],
    pub sum_squares: C64,
    pub sum_cross: C64,
    /// pi1^2 + pi2^2 + pi3^2 - 2 pi1 pi2 - 2 pi1 pi3 - 2 pi2 pi3
    pub value: C64,
    pub value_log: LogComplex,
    /// max(|pi_1|, |pi_2|, |pi_3|)^2 for relative judgments
    pub scale: f64,
    pub scale_log: f64,
}

impl SchottkyIgusa {
    /// |value| / scale, computed in log space.
    pub fn relative_magnitude(&self) -> f64 {
        (self.value_log.log_mag - self.scale_log).exp()
    }
}

/// Evaluates the Schottky–Igusa modular form at tau.
pub fn schottky_igusa(rm: &RiemannMatrix, eps: f64) -> SchottkyIgusa {
    let cosets = igusa_cosets();
    let products: [LogComplex; 3] = std::array::from_fn(|i| {
        let mut p = LogComplex::from_c64(C64::new(1.0, 0.0));
        for m in &cosets[i] {
            p = p.mul(&theta_constant_log(m, rm, eps));
        }
        p
    });
    let sq: [LogComplex; 3] = std::array::from_fn(|i| products[i].mul(&products[i]));
    let p12 = products[0].mul(&products[1]);
    let p13 = products[0].mul(&products[2]);
    let p23 = products[1].mul(&products[2]);
    let sum_squares = sq[0].value() + sq[1].value() + sq[2].value();
    let sum_cross = 2.0 * (p12.value() + p13.value() + p23.value());
    let value_log = LogComplex::sum(&[
        (1.0, sq[0]),
        (1.0, sq[1]),
        (1.0, sq[2]),
        (-2.0, p12),
        (-2.0, p13),
        (-2.0, p23),
    ]);
    let scale_log = 2.0
        * products
            .iter()
            .map(|p| p.log_mag)
            .fold(f64::NEG_INFINITY, f64::max);
    SchottkyIgusa {
        products,
        sum_squares,
        sum_cross,
        value: value_log.value(),
        value_log,
        scale: (scale_log).exp(),
        scale_log,
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Classification {
    Jacobian,
    NotJacobian,
    Undecided,
}

/// Threshold test on |form|/scale with an explicit undecided band
/// between `threshold` and `100 * threshold`.
pub fn decide_classical(rm: &RiemannMatrix, eps: f64, threshold: f64) -> (Classification, f64) {
    let form = schottky_igusa(rm, eps);
    let rel = form.relative_magnitude();
    let class = if rel < threshold {
        Classification::Jacobian
    } else if rel > 100.0 * threshold {
        Classification::NotJacobian
    } else {
        Classification::Undecided
    };
    (class, rel)
}

// ---------------------------------------------------------------------------
// Kempf recovery
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SingularPoint {
    pub z: [C64; 4],
    pub theta_abs: f64,
    pub grad_norm: f64,
    pub restarts_used: usize,
}

/// Searches for a singular point of the theta divisor from random starts
/// z = u + tau v: Levenberg–Marquardt on the five holomorphic equations
/// theta = d theta/dz_1 = ... = d theta/dz_4 = 0.
///
/// Plain Newton on the gradient system alone converges to ordinary critical
/// points with theta != 0; the value equation must steer the iteration.
pub fn find_theta_singularity(
    rm: &RiemannMatrix,
    seed: u64,
    max_restarts: usize,
    eps: f64,
) -> Result<SingularPoint, ClassicalError> {
    find_theta_singularity_with_tolerance(rm, seed, max_restarts, eps, 1e-3)
}

/// As [`find_theta_singularity`], with an explicit relative tolerance on
/// |theta(z*)|.
///
/// For a Riemann matrix exactly on the Schottky locus the critical value at
/// a divisor-singular point is zero; truncating tau to k decimals displaces
/// it to roughly the truncation error, while ordinary critical points of
/// theta stay at relative magnitude near 1. The default 1e-3 separates the
/// two regimes by orders of magnitude on all desk-scale inputs.
pub fn find_theta_singularity_with_tolerance(
    rm: &RiemannMatrix,
    seed: u64,
    max_restarts: usize,
    eps: f64,
    value_tol_rel: f64,
) -> Result<SingularPoint, ClassicalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = theta_constant(&Characteristic::zero(), rm, eps).norm().max(1e-300);
    let grad_tol = 1e-9 * scale;
    let value_tol = value_tol_rel * scale;
    for restart in 0..max_restarts {
        let u = Vector4::from_fn(|_, _| rng.gen::<f64>());
        let v = Vector4::from_fn(|_, _| rng.gen::<f64>());
        let mut z: Vector4<C64> = Vector4::from_fn(|i, _| {
            let mut acc = C64::new(u[i], 0.0);
            for j in 0..4 {
                acc += rm.tau[(i, j)] * v[j];
            }
            acc
        });
        // residual F = (theta, grad); Jacobian rows = (grad, hessian)
        let residual_sq = |jet: &ThetaJet| -> f64 {
            jet.value.norm_sqr() + jet.grad.iter().map(|c| c.norm_sqr()).sum::<f64>()
        };
        let mut lambda = 1e-3;
        let mut converged = false;
        let mut jet = theta_jet(&Characteristic::zero(), rm, &[z[0], z[1], z[2], z[3]], 2, eps);
        for _ in 0..120 {
            let gnorm = jet.grad.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if gnorm < grad_tol && jet.value.norm() < value_tol {
                converged = true;
                break;
            }
            // normal equations (J^H J + lambda I) delta = -J^H F over C^4
            let mut jhj = Matrix4::from_fn(|_, _| C64::new(0.0, 0.0));
            let mut jhf = Vector4::from_fn(|_, _| C64::new(0.0, 0.0));
            let rows: [[C64; 4]; 5] = [
                jet.grad,
                jet.hess[0],
                jet.hess[1],
                jet.hess[2],
                jet.hess[3],
            ];
            let vals: [C64; 5] =
                [jet.value, jet.grad[0], jet.grad[1], jet.grad[2], jet.grad[3]];
            for r in 0..5 {
                for a in 0..4 {
                    jhf[a] += rows[r][a].conj() * vals[r];
                    for b in 0..4 {
                        jhj[(a, b)] += rows[r][a].conj() * rows[r][b];
                    }
                }
            }
            let current = residual_sq(&jet);
            let mut improved = false;
            for _ in 0..24 {
                let damped = jhj + Matrix4::identity() * C64::new(lambda, 0.0);
                let Some(delta) = damped.lu().solve(&(-jhf)) else {
                    lambda *= 10.0;
                    continue;
                };
                let zc = z + delta;
                let jc = theta_jet(
                    &Characteristic::zero(),
                    rm,
                    &[zc[0], zc[1], zc[2], zc[3]],
                    2,
                    eps,
                );
                if residual_sq(&jc) < current {
                    z = zc;
                    jet = jc;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    break;
                }
                lambda *= 10.0;
            }
            if !improved {
                break; // stuck at a nonzero local minimum of the residual
            }
        }
        if !converged {
            continue;
        }
        // reduce to the fundamental domain: z = u + tau v with u, v in [0,1)
        let zim = Vector4::new(z[0].im, z[1].im, z[2].im, z[3].im);
        let vre = rm.im.clone().lu().solve(&zim).unwrap_or_else(Vector4::zeros);
        let vfrac = Vector4::from_fn(|i, _| vre[i] - vre[i].floor());
        let zre = Vector4::from_fn(|i, _| {
            let mut acc = z[i].re;
            for j in 0..4 {
                acc -= rm.tau[(i, j)].re * vre[j];
            }
            acc
        });
        let ufrac = Vector4::from_fn(|i, _| zre[i] - zre[i].floor());
        let zred: Vector4<C64> = Vector4::from_fn(|i, _| {
            let mut acc = C64::new(ufrac[i], 0.0);
            for j in 0..4 {
                acc += rm.tau[(i, j)] * vfrac[j];
            }
            acc
        });
        let za = [zred[0], zred[1], zred[2], zred[3]];
        let jet = theta_jet(&Characteristic::zero(), rm, &za, 1, eps);
        let gnorm = jet.grad.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let tval = jet.value.norm();
        if gnorm < grad_tol * 10.0 && tval < value_tol {
            return Ok(SingularPoint {
                z: za,
                theta_abs: tval,
                grad_norm: gnorm,
                restarts_used: restart + 1,
            });
        }
    }
    Err(ClassicalError::NoSingularityFound { restarts: max_restarts })
}

/// Canonical curve data: quadric and cubic Taylor coefficients of theta at a
/// singular point of the theta divisor.
#[derive(Clone, Debug)]
pub struct CanonicalCurve {
    /// f2(x) = x^t quadric x (symmetric tensor, half the Hessian)
    pub quadric: [[C64; 4]; 4],
    /// f3(x) = sum over (i,j,k) of cubic[i][j][k] x_i x_j x_k (third tensor / 6)
    pub cubic: [[[C64; 4]; 4]; 4],
    pub singular_point: SingularPoint,
    /// |theta|, |grad| at the singular point
    pub residuals: (f64, f64),
}

impl CanonicalCurve {
    /// Monomial map of f2, keys like "1100" for x1 x2.
    pub fn f2_monomials(&self) -> Vec<(String, C64)> {
        let mut out = Vec::new();
        for i in 0..4 {
            for j in i..4 {
                let mut exps = [0u8; 4];
                exps[i] += 1;
                exps[j] += 1;
                let coeff = if i == j { self.quadric[i][j] } else { self.quadric[i][j] * 2.0 };
                out.push((exps.map(|e| (b'0' + e) as char).iter().collect(), coeff));
            }
        }
        out
    }

    /// Monomial map of f3.
    pub fn f3_monomials(&self) -> Vec<(String, C64)> {
        let mut out = Vec::new();
        for i in 0..4 {
            for j in i..4 {
                for k in j..4 {
                    let mut exps = [0u8; 4];
                    exps[i] += 1;
                    exps[j] += 1;
                    exps[k] += 1;
                    let mult = if i == j && j == k {
                        1.0
                    } else if i == j || j == k {
                        3.0
                    } else {
                        6.0
                    };
                    out.push((
                        exps.map(|e| (b'0' + e) as char).iter().collect(),
                        self.cubic[i][j][k] * mult,
                    ));
                }
            }
        }
        out
    }

    /// f2(x) at a complex point.
    pub fn eval_f2(&self, x: &[C64; 4]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                acc += self.quadric[i][j] * x[i] * x[j];
            }
        }
        acc
    }

    pub fn eval_f3(&self, x: &[C64; 4]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    acc += self.cubic[i][j][k] * x[i] * x[j] * x[k];
                }
            }
        }
        acc
    }
}

/// Kempf recovery: Taylor coefficients of degree 2 and 3 at a singular point.
pub fn canonical_curve(
    rm: &RiemannMatrix,
    seed: u64,
    max_restarts: usize,
    eps: f64,
) -> Result<CanonicalCurve, ClassicalError> {
    let sp = find_theta_singularity(rm, seed, max_restarts, eps)?;
    let jet = theta_jet(&Characteristic::zero(), rm, &sp.z, 3, eps);
    let quadric: [[C64; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| jet.hess[i][j] / 2.0));
    let cubic: [[[C64; 4]; 4]; 4] = std::array::from_fn(|i| {
        std::array::from_fn(|j| std::array::from_fn(|k| jet.third[i][j][k] / 6.0))
    });
    let residuals = (sp.theta_abs, sp.grad_norm);
    Ok(CanonicalCurve { quadric, cubic, singular_point: sp, residuals })
}

/// The 120 tritangent planes: gradients of the odd theta functions at 0,
/// normalized to unit max-modulus entry.
pub fn tritangent_planes(rm: &RiemannMatrix, eps: f64) -> Vec<(Characteristic, [C64; 4])> {
    let mut out = Vec::with_capacity(120);
    for m in Characteristic::all() {
        if parity(&m) != Parity::Odd {
            continue;
        }
        let jet = theta_jet(&m, rm, &[C64::new(0.0, 0.0); 4], 1, eps);
        let maxmod = jet.grad.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let coeffs: [C64; 4] = if maxmod > 0.0 {
            std::array::from_fn(|i| jet.grad[i] / maxmod)
        } else {
            jet.grad
        };
        out.push((m, coeffs));
    }
    out
}

// ---------------------------------------------------------------------------
// tropical limit
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct TropicalLimitReport {
    /// (t, ratio) samples of |theta[m](P + t i Q, 0)| / exp(t pi Theta_{m'}(Q))
    pub ratios: Vec<(f64, f64)>,
    pub max_ratio: f64,
    pub min_tail_ratio: f64,
}

/// Ratio check of the boundedness statement: the classical theta constant
/// against the tropical growth exp(t pi Theta_{m'}(Q)), in log space.
pub fn tropical_limit_ratio(
    q: &QuadForm,
    m: &Characteristic,
    t_grid: &[f64],
    p: &[[f64; 4]; 4],
    eps: f64,
) -> Result<TropicalLimitReport, ClassicalError> {
    let u: Vec<num_bigint::BigInt> =
        m.upper.iter().map(|&b| num_bigint::BigInt::from(b)).collect();
    let trop = crate::tropical::trop_theta_constant(q, &u)
        .map_err(|_| ClassicalError::ImaginaryPartNotPD)?;
    let trop_f = trop.to_f64().unwrap_or(f64::NAN);
    let mut ratios = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let rm = RiemannMatrix::from_scaled_form(p, q, t)?;
        let lc = theta_constant_log(m, &rm, eps);
        let log_ratio = lc.log_mag - t * PI * trop_f;
        ratios.push((t, log_ratio.exp()));
    }
    let max_ratio = ratios.iter().map(|&(_, r)| r).fold(0.0, f64::max);
    let tail_start = t_grid.len() / 2;
    let min_tail_ratio = ratios[tail_start..]
        .iter()
        .map(|&(_, r)| r)
        .fold(f64::INFINITY, f64::min);
    Ok(TropicalLimitReport { ratios, max_ratio, min_tail_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn jacobian_tau() -> RiemannMatrix {
        let re = [
            [0.16913, -0.81736, -0.05626, 0.24724],
            [-0.81736, -0.31319, -0.02813, 0.34132],
            [-0.05626, -0.02813, 0.32393, -0.96494],
            [0.24724, 0.34132, -0.96494, 0.62362],
        ];
        let im = [
            [1.41714, -0.25138, -0.44830, 0.36327],
            [-0.25138, 0.67096, -0.57155, 0.40334],
            [-0.44830, -0.57155, 1.44947, -0.63753],
            [0.36327, 0.40334, -0.63753, 0.73694],
        ];
        RiemannMatrix::from_re_im(re, im).unwrap()
    }

    #[test]
    fn parity_counts() {
        let mut even = 0;
        let mut odd = 0;
        for m in Characteristic::all() {
            match parity(&m) {
                Parity::Even => even += 1,
                Parity::Odd => odd += 1,
            }
        }
        assert_eq!((even, odd), (136, 120));
        assert_eq!(parity(&Characteristic::zero()), Parity::Even);
        assert_eq!(
            parity(&Characteristic::new([1, 0, 0, 0], [1, 0, 0, 0])),
            Parity::Odd
        );
    }

    #[test]
    fn igusa_choice_is_azygetic_with_even_cosets() {
        let (ms, _) = igusa_characteristics();
        assert!(is_azygetic(&ms[0], &ms[1], &ms[2]));
        assert!(!is_azygetic(
            &Characteristic::zero(),
            &Characteristic::zero(),
            &Characteristic::zero()
        ));
        for coset in igusa_cosets() {
            for m in coset {
                assert_eq!(parity(&m), Parity::Even);
            }
        }
    }

    #[test]
    fn theta_identity_matrix_oracle() {
        // theta[0](i I, 0) = (sum over n of e^{-pi n^2})^4
        let rm = RiemannMatrix::from_re_im([[0.0; 4]; 4], {
            let mut im = [[0.0; 4]; 4];
            for i in 0..4 {
                im[i][i] = 1.0;
            }
            im
        })
        .unwrap();
        let got = theta_constant(&Characteristic::zero(), &rm, 1e-12);
        let one_d: f64 = (1..20).map(|n| (-PI * (n * n) as f64).exp()).sum::<f64>() * 2.0 + 1.0;
        let expect = one_d.powi(4);
        assert!((got.re - expect).abs() < 1e-12 * expect, "{got} vs {expect}");
        assert!(got.im.abs() < 1e-14);
    }

    #[test]
    fn odd_theta_constants_vanish_exactly() {
        let rm = jacobian_tau();
        for m in Characteristic::all() {
            if parity(&m) == Parity::Odd {
                let v = theta_constant(&m, &rm, 1e-10);
                assert_eq!(v, C64::new(0.0, 0.0), "odd constant must cancel in pairs");
            }
        }
    }

    #[test]
    fn jacobian_tau_partial_sums() {
        let rm = jacobian_tau();
        let f = schottky_igusa(&rm, 1e-10);
        // published partial sums, tau printed to 5 decimals
        let sq = f.sum_squares;
        let cross = f.sum_cross;
        assert!((sq.re - -5.13472888270289).abs() < 2e-3, "sum of squares re: {}", sq.re);
        assert!((sq.im - 6.13887870578982).abs() < 2e-3, "sum of squares im: {}", sq.im);
        assert!((cross.re - -5.13472882638710).abs() < 2e-3, "cross re: {}", cross.re);
        assert!((cross.im - 6.13887931435788).abs() < 2e-3, "cross im: {}", cross.im);
        assert!(f.relative_magnitude() < 1e-3, "rel mag: {}", f.relative_magnitude());
    }

    #[test]
    fn eps_tightening_is_stable() {
        let rm = jacobian_tau();
        let a = schottky_igusa(&rm, 1e-8);
        let b = schottky_igusa(&rm, 1e-10);
        let denom = b.sum_squares.norm().max(1e-30);
        assert!((a.sum_squares - b.sum_squares).norm() / denom < 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let rm = jacobian_tau();
        let m = Characteristic::new([1, 0, 0, 0], [0, 1, 0, 0]);
        let z = [
            C64::new(0.131, 0.17),
            C64::new(-0.23, 0.04),
            C64::new(0.055, -0.09),
            C64::new(0.21, 0.11),
        ];
        let jet = theta_jet(&m, &rm, &z, 1, 1e-12);
        let h = 1e-5;
        for k in 0..4 {
            let mut zp = z;
            let mut zm = z;
            zp[k] += C64::new(h, 0.0);
            zm[k] -= C64::new(h, 0.0);
            let fd = (theta(&m, &rm, &zp, 1e-12) - theta(&m, &rm, &zm, 1e-12)) / (2.0 * h);
            let rel = (jet.grad[k] - fd).norm() / jet.grad[k].norm().max(1e-12);
            assert!(rel < 1e-6, "coordinate {k}: rel {rel}");
        }
    }

    #[test]
    fn newton_finds_singularity_at_jacobian_tau() {
        let rm = jacobian_tau();
        let sp = find_theta_singularity(&rm, 9, 50, 1e-10).expect("singularity expected");
        let scale = theta_constant(&Characteristic::zero(), &rm, 1e-10).norm();
        assert!(sp.grad_norm < 1e-8 * scale, "grad norm {}", sp.grad_norm);
        // tau is printed to 5 decimals, so the critical value sits at the
        // truncation scale rather than at zero
        assert!(sp.theta_abs < 1e-4 * scale, "theta abs {}", sp.theta_abs);
        assert!(sp.z.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
    }

    #[test]
    fn taylor_extraction_at_singularity() {
        let rm = jacobian_tau();
        let curve = canonical_curve(&rm, 9, 50, 1e-10).unwrap();
        // remainder after subtracting the computed jet decays quartically
        let z = curve.singular_point.z;
        let jet = theta_jet(&Characteristic::zero(), &rm, &z, 1, 1e-12);
        let dir = [
            C64::new(0.31, 0.11),
            C64::new(-0.62, 0.25),
            C64::new(0.44, -0.52),
            C64::new(0.12, 0.33),
        ];
        let norm: f64 = dir.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let mut rems = Vec::new();
        for scale_x in [1e-2, 1e-3] {
            let x: [C64; 4] = std::array::from_fn(|i| dir[i] / norm * scale_x);
            let zx: [C64; 4] = std::array::from_fn(|i| z[i] + x[i]);
            let lin: C64 = (0..4).map(|i| jet.grad[i] * x[i]).sum();
            let rem = theta(&Characteristic::zero(), &rm, &zx, 1e-12)
                - jet.value
                - lin
                - curve.eval_f2(&x)
                - curve.eval_f3(&x);
            rems.push(rem.norm());
        }
        let exponent = (rems[0] / rems[1]).log10();
        assert!(exponent >= 3.7, "observed decay exponent {exponent}");
    }

    #[test]
    fn tritangents_count_and_nonzero() {
        let rm = jacobian_tau();
        let planes = tritangent_planes(&rm, 1e-10);
        assert_eq!(planes.len(), 120);
        for (m, coeffs) in &planes {
            assert_eq!(parity(m), Parity::Odd);
            let maxmod = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
            assert!((maxmod - 1.0).abs() < 1e-12, "normalized to unit max modulus");
            assert!(coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max) > 1e-10);
        }
    }

    #[test]
    fn classification_bands() {
        let rm = jacobian_tau();
        let (class, rel) = decide_classical(&rm, 1e-10, 1e-4);
        assert_eq!(class, Classification::Jacobian, "rel {rel}");

        // shifting the real part off the locus raises the form by orders of
        // magnitude; the family minimizes at shift zero
        let mut re = [[0.0f64; 4]; 4];
        let mut im = [[0.0f64; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                re[i][j] = rm.entries()[(i, j)].re;
                im[i][j] = rm.entries()[(i, j)].im;
            }
        }
        let diag = [2.0, 3.0, 5.0, 7.0];
        for i in 0..4 {
            re[i][i] += 0.25 * diag[i];
        }
        let shifted = RiemannMatrix::from_re_im(re, im).unwrap();
        let (class_s, rel_s) = decide_classical(&shifted, 1e-10, 1e-4);
        assert_ne!(class_s, Classification::Jacobian, "rel {rel_s}");
        assert!(rel_s > rel, "off-locus magnitude must exceed on-locus");

        // the undecided band sits between threshold and 100x threshold
        let (class_m, _) = decide_classical(&shifted, 1e-10, rel_s / 50.0);
        assert_eq!(class_m, Classification::Undecided);
    }

    #[test]
    fn tropical_limit_identity_ratio_tends_to_one() {
        let q = QuadForm::identity(4);
        let m = Characteristic::zero();
        let grid: Vec<f64> = (1..=8).map(|t| t as f64).collect();
        let rep = tropical_limit_ratio(&q, &m, &grid, &[[0.0; 4]; 4], 1e-12).unwrap();
        // Theta_0 = 0 and the n = 0 term dominates for large t
        let last = rep.ratios.last().unwrap().1;
        assert!((last - 1.0).abs() < 1e-9, "ratio at t=8: {last}");
        assert!(rep.max_ratio < 1.5);
    }
}




