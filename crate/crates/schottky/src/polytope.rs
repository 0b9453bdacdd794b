//! Exact convex polytopes: vertex enumeration from halfspaces, face
//! lattices and f-vectors, zonotopes.
//!
//! All coordinates are rationals. Instance sizes are small (at most ~30
//! facets, ~102 vertices), so vertex enumeration solves every g-subset of
//! the facet system and keeps the feasible solutions.

use crate::exact::{det_int, rank_rational, solve_linear, ExactError, IntVector, Rational};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum PolytopeError {
    #[error("halfspace normal is zero")]
    ZeroNormal,
    #[error("halfspace dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("polyhedron is unbounded (recession direction found)")]
    Unbounded,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("f-vector computation requires dimension 4, got {0}")]
    UnsupportedDimension(usize),
    #[error("too many vertices for incidence masks: {0} > 128")]
    TooManyVertices(usize),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Closed halfspace `{p : normal . p <= offset}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Halfspace {
    pub normal: Vec<Rational>,
    pub offset: Rational,
}

impl Halfspace {
    pub fn new(normal: Vec<Rational>, offset: Rational) -> Result<Self, PolytopeError> {
        if normal.iter().all(Zero::is_zero) {
            return Err(PolytopeError::ZeroNormal);
        }
        Ok(Halfspace { normal, offset })
    }

    fn eval(&self, p: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (a, x) in self.normal.iter().zip(p) {
            acc += a * x;
        }
        acc
    }

    pub fn contains(&self, p: &[Rational]) -> bool {
        self.eval(p) <= self.offset
    }

    pub fn is_tight(&self, p: &[Rational]) -> bool {
        self.eval(p) == self.offset
    }

    /// Scales so the first nonzero normal entry is +-1; directions then
    /// compare equal iff the halfspaces are parallel with equal orientation.
    fn canonical(&self) -> (Vec<Rational>, Rational) {
        let pivot = self.normal.iter().find(|x| !x.is_zero()).expect("nonzero normal");
        let scale = pivot.abs();
        let dir: Vec<Rational> = self.normal.iter().map(|x| x / &scale).collect();
        (dir, &self.offset / &scale)
    }
}

/// Face counts `(f0, f1, f2, f3)` of a 4-polytope.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FVector(pub [usize; 4]);

impl FVector {
    pub fn euler_holds(&self) -> bool {
        let [f0, f1, f2, f3] = self.0;
        f0 + f2 == f1 + f3
    }
}

impl fmt::Display for FVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "({a},{b},{c},{d})")
    }
}

/// Bounded full-dimensional polytope with exact vertices, an irredundant
/// facet list, and the vertex-facet incidence relation.
#[derive(Clone, Debug)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Vec<Rational>>,
    facets: Vec<Halfspace>,
    /// incidence[f] = bitmask over vertex indices tight on facet f
    incidence: Vec<u128>,
}

impl Polytope {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<Rational>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Halfspace] {
        &self.facets
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn facet_count(&self) -> usize {
        self.facets.len()
    }

    pub fn incidence(&self) -> &[u128] {
        &self.incidence
    }

    /// Central symmetry of the vertex set: v in P iff -v in P.
    pub fn is_centrally_symmetric(&self) -> bool {
        let set: HashSet<&Vec<Rational>> = self.vertices.iter().collect();
        self.vertices.iter().all(|v| {
            let neg: Vec<Rational> = v.iter().map(|x| -x).collect();
            set.contains(&neg)
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        use crate::exact::rational_to_string;
        let f_vector = if self.dim == 4 {
            face_lattice_fvector(self)
                .map(|fv| serde_json::json!(fv.0))
                .unwrap_or(serde_json::Value::Null)
        } else {
            serde_json::Value::Null
        };
        serde_json::json!({
            "dim": self.dim,
            "vertices": self.vertices.iter()
                .map(|v| v.iter().map(rational_to_string).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "facets": self.facets.iter().map(|h| serde_json::json!({
                "normal": h.normal.iter().map(rational_to_string).collect::<Vec<_>>(),
                "offset": rational_to_string(&h.offset),
            })).collect::<Vec<_>>(),
            "f_vector": f_vector,
        })
    }
}

/// Exact vertex enumeration of a bounded intersection of halfspaces.
///
/// Every g-subset of the (deduplicated) system is solved; feasible unique
/// solutions are vertices. Bounded- and full-dimensionality are verified,
/// redundant halfspaces are pruned by incidence rank.
pub fn vertices_from_halfspaces(halfspaces: &[Halfspace]) -> Result<Polytope, PolytopeError> {
    if halfspaces.is_empty() {
        return Err(PolytopeError::Degenerate("no halfspaces".into()));
    }
    let g = halfspaces[0].normal.len();
    for h in halfspaces {
        if h.normal.len() != g {
            return Err(PolytopeError::DimensionMismatch { expected: g, got: h.normal.len() });
        }
        if h.normal.iter().all(Zero::is_zero) {
            return Err(PolytopeError::ZeroNormal);
        }
    }

    // dedupe parallel halfspaces, keeping the tightest offset per direction
    let mut by_dir: HashMap<Vec<Rational>, (Rational, Halfspace)> = HashMap::new();
    for h in halfspaces {
        let (dir, scaled_offset) = h.canonical();
        match by_dir.get(&dir) {
            Some((best, _)) if best <= &scaled_offset => {}
            _ => {
                by_dir.insert(dir, (scaled_offset, h.clone()));
            }
        }
    }
    let mut system: Vec<Halfspace> = by_dir.into_values().map(|(_, h)| h).collect();
    // deterministic processing order
    system.sort_by(|a, b| (&a.normal, &a.offset).cmp(&(&b.normal, &b.offset)));

    let normals: Vec<Vec<Rational>> = system.iter().map(|h| h.normal.clone()).collect();
    if rank_rational(&normals) < g {
        // lineality space is nonzero
        return Err(PolytopeError::Unbounded);
    }

    // integerized system: primitive (a, b) with a . p <= b scaled from each halfspace
    let int_system: Vec<(Vec<BigInt>, BigInt)> = system.iter().map(integerize).collect();

    // a direction-symmetric system has recession cone = lineality = 0;
    // otherwise hunt for an extreme recession ray
    let dirs: HashSet<&Vec<BigInt>> = int_system.iter().map(|(a, _)| a).collect();
    let symmetric = int_system.iter().all(|(a, _)| {
        let neg: Vec<BigInt> = a.iter().map(|x| -x).collect();
        dirs.contains(&neg)
    });
    if !symmetric {
        check_no_recession_ray(&system, g)?;
    }

    // candidate vertices from g-subsets, solved by integer Cramer
    let n = system.len();
    if n < g {
        return Err(PolytopeError::Unbounded);
    }
    let mut seen: HashSet<(Vec<BigInt>, BigInt)> = HashSet::new();
    let mut int_vertices: Vec<(Vec<BigInt>, BigInt)> = Vec::new();
    for_each_combination(n, g, |subset| {
        let a: Vec<Vec<BigInt>> = subset.iter().map(|&i| int_system[i].0.clone()).collect();
        let det = det_int(&a);
        if det.is_zero() {
            return;
        }
        // Cramer: numerator_i = det of a with column i replaced by the offsets
        let mut num: Vec<BigInt> = Vec::with_capacity(g);
        for col in 0..g {
            let mut ai = a.clone();
            for (r, &si) in subset.iter().enumerate() {
                ai[r][col] = int_system[si].1.clone();
            }
            num.push(det_int(&ai));
        }
        let mut den = det;
        if den < BigInt::zero() {
            den = -den;
            for x in num.iter_mut() {
                *x = -x.clone();
            }
        }
        // feasibility: a . num <= b * den for every halfspace
        for (av, bv) in &int_system {
            let mut dot = BigInt::zero();
            for (c, x) in av.iter().zip(&num) {
                dot += c * x;
            }
            if dot > bv * &den {
                return;
            }
        }
        // reduce to canonical (num, den)
        let mut gcd = den.clone();
        for x in &num {
            gcd = num_integer::gcd(gcd, x.abs());
        }
        if !gcd.is_one() && !gcd.is_zero() {
            for x in num.iter_mut() {
                *x = &*x / &gcd;
            }
            den = &den / &gcd;
        }
        let key = (num, den);
        if !seen.contains(&key) {
            seen.insert(key.clone());
            int_vertices.push(key);
        }
    });

    let mut vertices: Vec<Vec<Rational>> = int_vertices
        .into_iter()
        .map(|(num, den)| {
            num.into_iter().map(|x| Rational::new(x, den.clone())).collect::<Vec<Rational>>()
        })
        .collect();

    if vertices.is_empty() {
        return Err(PolytopeError::Degenerate("no vertices (empty interior)".into()));
    }
    if affine_dim(&vertices) < g {
        return Err(PolytopeError::Degenerate(format!(
            "vertex set spans affine dimension {} < {}",
            affine_dim(&vertices),
            g
        )));
    }
    if vertices.len() > 128 {
        return Err(PolytopeError::TooManyVertices(vertices.len()));
    }
    vertices.sort();

    // facets: halfspaces whose tight vertex set has affine dimension g-1
    let mut facets = Vec::new();
    let mut incidence = Vec::new();
    for h in &system {
        let mut mask: u128 = 0;
        let mut tight: Vec<Vec<Rational>> = Vec::new();
        for (vi, v) in vertices.iter().enumerate() {
            if h.is_tight(v) {
                mask |= 1u128 << vi;
                tight.push(v.clone());
            }
        }
        if !tight.is_empty() && affine_dim(&tight) == g - 1 {
            facets.push(h.clone());
            incidence.push(mask);
        }
    }

    Ok(Polytope { dim: g, vertices, facets, incidence })
}

/// Scales a halfspace to a primitive integer pair (a, b) with a . p <= b.
fn integerize(h: &Halfspace) -> (Vec<BigInt>, BigInt) {
    let mut lcm = h.offset.denom().clone();
    for c in &h.normal {
        lcm = num_integer::lcm(lcm, c.denom().clone());
    }
    let mut a: Vec<BigInt> = h
        .normal
        .iter()
        .map(|c| c.numer() * (&lcm / c.denom()))
        .collect();
    let mut b = h.offset.numer() * (&lcm / h.offset.denom());
    let mut gcd = b.abs();
    for x in &a {
        gcd = num_integer::gcd(gcd, x.abs());
    }
    if !gcd.is_one() && !gcd.is_zero() {
        for x in a.iter_mut() {
            *x = &*x / &gcd;
        }
        b = &b / &gcd;
    }
    (a, b)
}

/// Visits all k-subsets of 0..n in lexicographic order.
fn for_each_combination<F: FnMut(&[usize])>(n: usize, k: usize, mut visit: F) {
    if k == 0 || k > n {
        return;
    }
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        visit(&subset);
        let mut i = k;
        let mut advanced = false;
        while i > 0 {
            i -= 1;
            if subset[i] != i + n - k {
                subset[i] += 1;
                for j in (i + 1)..k {
                    subset[j] = subset[j - 1] + 1;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            return;
        }
    }
}

/// Rejects systems whose recession cone contains a ray. The cone is pointed
/// (full-rank normals checked by the caller), so any nonzero recession
/// direction lies over some (g-1)-subset of tight normals.
fn check_no_recession_ray(system: &[Halfspace], g: usize) -> Result<(), PolytopeError> {
    let n = system.len();
    if g < 2 {
        let pos = system.iter().any(|h| h.normal[0] > Rational::zero());
        let neg = system.iter().any(|h| h.normal[0] < Rational::zero());
        return if pos && neg { Ok(()) } else { Err(PolytopeError::Unbounded) };
    }
    let mut unbounded = false;
    for_each_combination(n, g - 1, |subset| {
        if unbounded {
            return;
        }
        let rows: Vec<Vec<Rational>> = subset.iter().map(|&i| system[i].normal.clone()).collect();
        if rank_rational(&rows) != g - 1 {
            return;
        }
        if let Some(d) = kernel_vector(&rows, g) {
            let neg: Vec<Rational> = d.iter().map(|x| -x).collect();
            for cand in [&d, &neg] {
                let recedes = system.iter().all(|h| {
                    let mut acc = Rational::zero();
                    for (a, x) in h.normal.iter().zip(cand.iter()) {
                        acc += a * x;
                    }
                    acc <= Rational::zero()
                });
                if recedes {
                    unbounded = true;
                    return;
                }
            }
        }
    });
    if unbounded {
        Err(PolytopeError::Unbounded)
    } else {
        Ok(())
    }
}

/// One nonzero kernel vector of a rank g-1 system, or None.
fn kernel_vector(rows: &[Vec<Rational>], g: usize) -> Option<Vec<Rational>> {
    // pin one coordinate to 1 so the extended system becomes regular
    let mut pinned = None;
    for i in 0..g {
        let mut m = rows.to_vec();
        let mut e = vec![Rational::zero(); g];
        e[i] = Rational::one();
        m.push(e);
        if rank_rational(&m) == g {
            pinned = Some(i);
            break;
        }
    }
    let pin = pinned?;
    let mut a = rows.to_vec();
    let mut e = vec![Rational::zero(); g];
    e[pin] = Rational::one();
    a.push(e);
    let mut rhs = vec![Rational::zero(); rows.len()];
    rhs.push(Rational::one());
    solve_linear(&a, &rhs)
}

/// Affine dimension of a point set (rank of difference vectors).
pub fn affine_dim(points: &[Vec<Rational>]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let base = &points[0];
    let diffs: Vec<Vec<Rational>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    rank_rational(&diffs)
}

/// Counts faces of dimensions 0..3 from vertex-facet incidences.
///
/// Every proper face is an intersection of facets, so closing the facet
/// incidence masks under intersection enumerates the whole lattice.
pub fn face_lattice_fvector(p: &Polytope) -> Result<FVector, PolytopeError> {
    if p.dim != 4 {
        return Err(PolytopeError::UnsupportedDimension(p.dim));
    }
    let mut faces: BTreeSet<u128> = BTreeSet::new();
    let mut frontier: Vec<u128> = Vec::new();
    for &m in &p.incidence {
        if m != 0 && faces.insert(m) {
            frontier.push(m);
        }
    }
    while let Some(f) = frontier.pop() {
        for &g in &p.incidence {
            let h = f & g;
            if h != 0 && h != f && faces.insert(h) {
                frontier.push(h);
            }
        }
    }
    let mut counts = [0usize; 4];
    for &mask in &faces {
        let pts: Vec<Vec<Rational>> = (0..p.vertices.len())
            .filter(|&i| mask & (1u128 << i) != 0)
            .map(|i| p.vertices[i].clone())
            .collect();
        let d = affine_dim(&pts);
        debug_assert!(d <= 3, "proper face of dimension {d}");
        counts[d] += 1;
    }
    let fv = FVector(counts);
    debug_assert_eq!(counts[0], p.vertices.len(), "every vertex is a face");
    debug_assert!(fv.euler_holds(), "Euler relation fails for {fv}");
    Ok(fv)
}

/// Zonotope sum_i [-b_i, b_i] of integer generators, as a vertex-form polytope.
///
/// Each facet normal is orthogonal to g-1 independent generators; the offset
/// is the support value sum_i |n . b_i|. The resulting exact halfspace system
/// is fed to the vertex enumerator.
pub fn zonotope(generators: &[IntVector]) -> Result<Polytope, PolytopeError> {
    if generators.is_empty() {
        return Err(PolytopeError::Degenerate("no generators".into()));
    }
    let g = generators[0].len();
    let rows: Vec<Vec<Rational>> = generators
        .iter()
        .map(|v| v.iter().map(|x| Rational::from_integer(x.clone())).collect())
        .collect();
    if rank_rational(&rows) < g {
        return Err(PolytopeError::Degenerate("generators do not span".into()));
    }
    let m = generators.len();
    let k = g - 1;
    let mut normals: HashSet<Vec<Rational>> = HashSet::new();
    for_each_combination(m, k, |subset| {
        let sel: Vec<Vec<Rational>> = subset.iter().map(|&i| rows[i].clone()).collect();
        if rank_rational(&sel) != k {
            return;
        }
        if let Some(d) = kernel_vector(&sel, g) {
            // canonical orientation and scale: first nonzero entry = +1
            let pivot = d.iter().find(|x| !x.is_zero()).unwrap().clone();
            let d: Vec<Rational> = d.iter().map(|x| x / &pivot).collect();
            normals.insert(d);
        }
    });
    let mut halfspaces = Vec::new();
    for n in normals {
        let mut support = Rational::zero();
        for row in &rows {
            let mut dot = Rational::zero();
            for (a, x) in n.iter().zip(row) {
                dot += a * x;
            }
            support += dot.abs();
        }
        let neg: Vec<Rational> = n.iter().map(|x| -x).collect();
        halfspaces.push(Halfspace { normal: n, offset: support.clone() });
        halfspaces.push(Halfspace { normal: neg, offset: support });
    }
    vertices_from_halfspaces(&halfspaces)
}
