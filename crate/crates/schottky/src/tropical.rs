//! Tropical theta functions, theta constants, the signed sums
//! `vartheta_v`, the theta matroid, and Voronoi cells of a quadratic form.
//!
//! The tropical theta function is evaluated through the closest-vector
//! identity `Theta(Q,x) = x^tQx/2 - d^2/2`, where `d^2` is the squared
//! distance from `x` to the lattice in the `Q`-norm; everything stays in
//! exact rational arithmetic.

use crate::exact::{closest_vector, ExactError, IntVector, QuadForm, Rational};
use crate::polytope::{vertices_from_halfspaces, Halfspace, Polytope, PolytopeError};
use num_bigint::BigInt;
use num_traits::{One, Zero};

/// Label in (Z/2Z)^g, entries 0/1.
pub type F2Vector = Vec<u8>;

/// Reduces an integer vector mod 2.
pub fn f2_of(v: &[BigInt]) -> F2Vector {
    v.iter().map(|x| if (x % 2u8).is_zero() { 0 } else { 1 }).collect()
}

/// All 2^g vectors of (Z/2Z)^g in lexicographic order.
pub fn f2_all(g: usize) -> Vec<F2Vector> {
    (0..1usize << g)
        .map(|m| (0..g).map(|i| ((m >> (g - 1 - i)) & 1) as u8).collect())
        .collect()
}

fn f2_dot(a: &[u8], b: &[u8]) -> u8 {
    a.iter().zip(b).map(|(x, y)| x & y).fold(0, |acc, t| acc ^ t)
}

/// A tropical theta constant `Theta_u(Q)`; always nonpositive, zero iff the
/// characteristic is even (u = 0 mod 2).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TropThetaConstant {
    pub label: F2Vector,
    pub value: Rational,
}

/// The binary matroid on labels v with `vartheta_v(Q) != 0`.
///
/// `elements` carries the positive weights; labels with strictly negative
/// value are kept aside as certificates that no metric graph realizes `Q`.
#[derive(Clone, Debug)]
pub struct ThetaMatroid {
    pub elements: Vec<(F2Vector, Rational)>,
    pub negatives: Vec<(F2Vector, Rational)>,
}

impl ThetaMatroid {
    pub fn realizable_by_graph(&self) -> bool {
        self.negatives.is_empty()
    }

    pub fn labels(&self) -> Vec<F2Vector> {
        self.elements.iter().map(|(l, _)| l.clone()).collect()
    }

    pub fn weight_of(&self, label: &[u8]) -> Option<&Rational> {
        self.elements.iter().find(|(l, _)| l == label).map(|(_, w)| w)
    }
}

/// Tropical theta function `max over lattice points of (l^tQx - l^tQl/2)`.
pub fn tropical_theta(q: &QuadForm, x: &[Rational]) -> Result<Rational, ExactError> {
    let (_, d2) = closest_vector(q, x)?;
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    Ok(&half * q.norm(x) - &half * d2)
}

/// Tropical theta constant `Theta_u(Q) = 2 Theta(Q, u/2) - u^tQu/4`.
///
/// Equals minus the squared lattice distance of `u/2`, hence depends on `u`
/// only mod 2.
pub fn trop_theta_constant(q: &QuadForm, u: &[BigInt]) -> Result<Rational, ExactError> {
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let x: Vec<Rational> = u.iter().map(|c| Rational::from_integer(c.clone()) * &half).collect();
    let (_, d2) = closest_vector(q, &x)?;
    Ok(-d2)
}

/// Signed sum of tropical theta constants over all of (Z/2Z)^g.
pub fn vartheta(q: &QuadForm, v: &[BigInt]) -> Result<Rational, ExactError> {
    let g = q.dim();
    let vm = f2_of(v);
    let mut acc = Rational::zero();
    for u in f2_all(g) {
        let ui: IntVector = u.iter().map(|&b| BigInt::from(b)).collect();
        let theta_u = trop_theta_constant(q, &ui)?;
        if f2_dot(&u, &vm) == 1 {
            acc -= theta_u;
        } else {
            acc += theta_u;
        }
    }
    Ok(acc)
}

/// Evaluates `vartheta` on all 15 nonzero labels and assembles the matroid.
pub fn theta_matroid(q: &QuadForm) -> Result<ThetaMatroid, ExactError> {
    let g = q.dim();
    let mut elements = Vec::new();
    let mut negatives = Vec::new();
    for v in f2_all(g).into_iter().skip(1) {
        let vi: IntVector = v.iter().map(|&b| BigInt::from(b)).collect();
        let w = vartheta(q, &vi)?;
        if w > Rational::zero() {
            elements.push((v, w));
        } else if w < Rational::zero() {
            negatives.push((v, w));
        }
    }
    Ok(ThetaMatroid { elements, negatives })
}

/// Voronoi-relevant vectors of `Q`: the x such that +-x are the unique
/// minimizers of the norm in the coset x + 2Z^g. Closed under negation,
/// at most 2(2^g - 1) vectors.
///
/// Coset members are v = c + 2w, so the search enumerates w near -c/2 with
/// squared distance at most norm(c)/4 (the {0,1}-representative bound).
pub fn voronoi_relevant_vectors(q: &QuadForm) -> Result<Vec<IntVector>, ExactError> {
    let g = q.dim();
    let half = Rational::new(BigInt::from(-1), BigInt::from(2));
    let quarter = Rational::new(BigInt::one(), BigInt::from(4));
    let mut out: Vec<IntVector> = Vec::new();
    for coset in f2_all(g).into_iter().skip(1) {
        let rep: IntVector = coset.iter().map(|&b| BigInt::from(b)).collect();
        let center: Vec<Rational> =
            rep.iter().map(|c| Rational::from_integer(c.clone()) * &half).collect();
        let bound = q.norm_int(&rep) * &quarter;
        let candidates = crate::exact::enumerate_close_vectors(q, &center, &bound)?;
        let mut best: Option<Rational> = None;
        let mut minimizers: Vec<IntVector> = Vec::new();
        for (w, d2) in candidates {
            let v: IntVector = w.iter().zip(&rep).map(|(wi, ci)| wi * 2 + ci).collect();
            match &best {
                Some(b) if &d2 > b => {}
                Some(b) if &d2 == b => minimizers.push(v),
                _ => {
                    best = Some(d2);
                    minimizers = vec![v];
                }
            }
        }
        if minimizers.len() == 2 {
            out.extend(minimizers);
        }
    }
    out.sort();
    Ok(out)
}

/// The exact Voronoi cell `{p : 2 p^tQx <= x^tQx for all relevant x}`.
pub fn voronoi_polytope(q: &QuadForm) -> Result<Polytope, PolytopeError> {
    let relevant = voronoi_relevant_vectors(q)?;
    let two = Rational::from_integer(BigInt::from(2));
    let halfspaces: Vec<Halfspace> = relevant
        .iter()
        .map(|x| {
            let xr: Vec<Rational> = x.iter().map(|c| Rational::from_integer(c.clone())).collect();
            let normal: Vec<Rational> = q.apply(&xr).into_iter().map(|e| &two * e).collect();
            Halfspace { normal, offset: q.norm_int(x) }
        })
        .collect();
    vertices_from_halfspaces(&halfspaces)
}
