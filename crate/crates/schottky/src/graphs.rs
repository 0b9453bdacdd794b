//! Metric graphs, cycle bases, tropical Riemann matrices, and the genus-4
//! cographic catalog.
//!
//! The catalog ships the 16 genus-4 graphs together with a fixed edge order,
//! orientation, and cycle basis for each; the representative Riemann matrix
//! `Q_rep` equals `B B^t` exactly for the shipped basis with unit lengths.

use crate::exact::{ExactError, QuadForm, Rational};
use crate::polytope::FVector;
use crate::tropical::{F2Vector, ThetaMatroid};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::VecDeque;
use std::sync::OnceLock;

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("graph is disconnected")]
    Disconnected,
    #[error("edge {0} has nonpositive length")]
    NonPositiveLength(usize),
    #[error("vertex weights must be zero for this operation")]
    WeightedUnsupported,
    #[error("graph has genus 0, no cycle basis exists")]
    GenusZero,
    #[error("cycle basis does not fit graph: {0}")]
    BasisMismatch(String),
    #[error("edge endpoint {0} out of range")]
    BadEndpoint(usize),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Directed edge with a positive rational length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub length: Rational,
}

/// Connected metric graph with nonnegative integer vertex weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    weights: Vec<u32>,
}

impl MetricGraph {
    pub fn new(
        vertex_count: usize,
        edges: Vec<Edge>,
        weights: Vec<u32>,
    ) -> Result<Self, GraphError> {
        assert_eq!(weights.len(), vertex_count);
        for (i, e) in edges.iter().enumerate() {
            if e.tail >= vertex_count {
                return Err(GraphError::BadEndpoint(e.tail));
            }
            if e.head >= vertex_count {
                return Err(GraphError::BadEndpoint(e.head));
            }
            if e.length <= Rational::zero() {
                return Err(GraphError::NonPositiveLength(i));
            }
        }
        let g = MetricGraph { vertex_count, edges, weights };
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    /// Graph with all edge lengths 1 and zero weights.
    pub fn with_unit_lengths(vertex_count: usize, pairs: &[(usize, usize)]) -> Self {
        let edges = pairs
            .iter()
            .map(|&(t, h)| Edge { tail: t, head: h, length: Rational::one() })
            .collect();
        MetricGraph::new(vertex_count, edges, vec![0; vertex_count]).expect("valid static graph")
    }

    pub fn with_lengths(
        vertex_count: usize,
        pairs: &[(usize, usize)],
        lengths: &[Rational],
    ) -> Result<Self, GraphError> {
        assert_eq!(pairs.len(), lengths.len());
        let edges = pairs
            .iter()
            .zip(lengths)
            .map(|(&(t, h), l)| Edge { tail: t, head: h, length: l.clone() })
            .collect();
        MetricGraph::new(vertex_count, edges, vec![0; vertex_count])
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn lengths(&self) -> Vec<Rational> {
        self.edges.iter().map(|e| e.length.clone()).collect()
    }

    pub fn loop_count(&self) -> usize {
        self.edges.iter().filter(|e| e.tail == e.head).count()
    }

    pub fn is_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return false;
        }
        let mut seen = vec![false; self.vertex_count];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for e in &self.edges {
                for (a, b) in [(e.tail, e.head), (e.head, e.tail)] {
                    if a == v && !seen[b] {
                        seen[b] = true;
                        queue.push_back(b);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn to_json(&self) -> serde_json::Value {
        use crate::exact::rational_to_string;
        serde_json::json!({
            "vertices": (0..self.vertex_count).collect::<Vec<_>>(),
            "weights": self.weights,
            "edges": self.edges.iter().map(|e| serde_json::json!({
                "tail": e.tail,
                "head": e.head,
                "length": rational_to_string(&e.length),
            })).collect::<Vec<_>>(),
        })
    }

    /// DOT digraph with edge lengths as red labels.
    pub fn to_dot(&self, name: &str) -> String {
        use crate::exact::rational_to_string;
        let mut out = format!("digraph \"{name}\" {{\n");
        for v in 0..self.vertex_count {
            out.push_str(&format!("  v{v} [shape=point];\n"));
        }
        for (i, e) in self.edges.iter().enumerate() {
            out.push_str(&format!(
                "  v{} -> v{} [label=\"{}\", fontcolor=red, taillabel=\"e{}\"];\n",
                e.tail,
                e.head,
                rational_to_string(&e.length),
                i + 1
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// Genus `|E| - |V| + 1 + sum of weights` of a connected graph.
pub fn genus(graph: &MetricGraph) -> Result<usize, GraphError> {
    if !graph.is_connected() {
        return Err(GraphError::Disconnected);
    }
    let w: usize = graph.weights.iter().map(|&x| x as usize).sum();
    Ok(graph.edge_count() + 1 + w - graph.vertex_count())
}

/// Cycle basis of a graph: a g x m matrix with entries in {-1,0,+1} whose
/// rows generate the integer cycle space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleBasis {
    pub rows: Vec<Vec<BigInt>>,
}

impl CycleBasis {
    pub fn genus(&self) -> usize {
        self.rows.len()
    }

    pub fn edge_count(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }

    /// Column i, the coefficients of edge i across the basis cycles.
    pub fn column(&self, i: usize) -> Vec<BigInt> {
        self.rows.iter().map(|r| r[i].clone()).collect()
    }

    /// Column i mod 2.
    pub fn column_residue(&self, i: usize) -> F2Vector {
        self.rows.iter().map(|r| if (&r[i] % 2u8).is_zero() { 0 } else { 1 }).collect()
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        CycleBasis {
            rows: rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect(),
        }
    }

    /// Signed edge incidences must cancel at every vertex, for every row.
    pub fn is_valid_for(&self, graph: &MetricGraph) -> bool {
        if self.edge_count() != graph.edge_count() {
            return false;
        }
        for row in &self.rows {
            let mut net = vec![BigInt::zero(); graph.vertex_count()];
            for (c, e) in row.iter().zip(graph.edges()) {
                if e.tail != e.head {
                    net[e.tail] += c;
                    net[e.head] -= c;
                }
            }
            if net.iter().any(|x| !x.is_zero()) {
                return false;
            }
        }
        let rows_rat: Vec<Vec<Rational>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|x| Rational::from_integer(x.clone())).collect())
            .collect();
        crate::exact::rank_rational(&rows_rat) == self.rows.len()
    }
}

/// Fundamental cycle basis from a BFS spanning tree rooted at vertex 0;
/// every non-tree edge (loops included) contributes one row.
pub fn cycle_basis(graph: &MetricGraph) -> Result<CycleBasis, GraphError> {
    if graph.weights.iter().any(|&w| w != 0) {
        return Err(GraphError::WeightedUnsupported);
    }
    let g = genus(graph)?;
    if g == 0 {
        return Err(GraphError::GenusZero);
    }
    let n = graph.vertex_count();
    // BFS tree: parent_edge[v] = (edge index, true when edge points v -> parent)
    let mut parent: Vec<Option<(usize, usize, bool)>> = vec![None; n]; // (parent, edge, v_is_tail)
    let mut depth = vec![usize::MAX; n];
    let mut in_tree = vec![false; graph.edge_count()];
    depth[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for (ei, e) in graph.edges.iter().enumerate() {
            if e.tail == e.head {
                continue;
            }
            for (a, b, a_is_tail) in [(e.tail, e.head, true), (e.head, e.tail, false)] {
                if a == v && depth[b] == usize::MAX {
                    depth[b] = depth[v] + 1;
                    parent[b] = Some((v, ei, !a_is_tail));
                    in_tree[ei] = true;
                    queue.push_back(b);
                }
            }
        }
    }
    let mut rows = Vec::with_capacity(g);
    for (ei, e) in graph.edges.iter().enumerate() {
        if in_tree[ei] {
            continue;
        }
        let mut row = vec![BigInt::zero(); graph.edge_count()];
        row[ei] = BigInt::one();
        if e.tail != e.head {
            // close the cycle with the tree path head -> tail
            let (mut x, mut y) = (e.head, e.tail);
            let mut up_x: Vec<(usize, bool)> = Vec::new(); // (edge, traversed tail->head)
            let mut up_y: Vec<(usize, bool)> = Vec::new();
            while depth[x] > depth[y] {
                let (p, pe, x_is_tail) = parent[x].unwrap();
                up_x.push((pe, x_is_tail));
                x = p;
            }
            while depth[y] > depth[x] {
                let (p, pe, y_is_tail) = parent[y].unwrap();
                up_y.push((pe, y_is_tail));
                y = p;
            }
            while x != y {
                let (px, pex, x_is_tail) = parent[x].unwrap();
                up_x.push((pex, x_is_tail));
                x = px;
                let (py, pey, y_is_tail) = parent[y].unwrap();
                up_y.push((pey, y_is_tail));
                y = py;
            }
            // walking from head up to the meeting vertex follows each parent
            // edge in its stored direction; the tail side is traversed backwards
            for (pe, was_tail) in up_x {
                row[pe] += if was_tail { 1 } else { -1 };
            }
            for (pe, was_tail) in up_y {
                row[pe] += if was_tail { -1 } else { 1 };
            }
        }
        rows.push(row);
    }
    debug_assert_eq!(rows.len(), g);
    let basis = CycleBasis { rows };
    debug_assert!(basis.is_valid_for(graph));
    Ok(basis)
}

/// Tropical Riemann matrix `B diag(lengths) B^t` with bridge diagnostics.
#[derive(Clone, Debug)]
pub struct TropicalRiemann {
    pub entries: Vec<Vec<Rational>>,
    /// edges whose basis column is identically zero; nonempty means the
    /// matrix is only positive semidefinite
    pub bridges: Vec<usize>,
}

impl TropicalRiemann {
    pub fn quad_form(&self) -> Result<QuadForm, ExactError> {
        QuadForm::new(self.entries.clone())
    }
}

pub fn riemann_matrix(
    graph: &MetricGraph,
    basis: &CycleBasis,
) -> Result<TropicalRiemann, GraphError> {
    if basis.edge_count() != graph.edge_count() {
        return Err(GraphError::BasisMismatch(format!(
            "basis has {} edges, graph has {}",
            basis.edge_count(),
            graph.edge_count()
        )));
    }
    let g = basis.genus();
    let mut entries = vec![vec![Rational::zero(); g]; g];
    let mut bridges = Vec::new();
    for (i, e) in graph.edges.iter().enumerate() {
        let col = basis.column(i);
        if col.iter().all(Zero::is_zero) {
            bridges.push(i);
            continue;
        }
        for a in 0..g {
            if col[a].is_zero() {
                continue;
            }
            for b in 0..g {
                if col[b].is_zero() {
                    continue;
                }
                entries[a][b] +=
                    &e.length * Rational::from_integer(&col[a] * &col[b]);
            }
        }
    }
    Ok(TropicalRiemann { entries, bridges })
}

// ---------------------------------------------------------------------------
// the genus-4 cographic catalog
// ---------------------------------------------------------------------------

/// One row of the catalog: graph, shipped cycle basis, representative
/// Riemann matrix, Voronoi f-vector, secondary-cone dimension.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub index: usize,
    pub name: &'static str,
    pub graph: MetricGraph,
    pub basis: CycleBasis,
    pub q_rep: QuadForm,
    pub f_vector: FVector,
    pub cone_dim: usize,
}

impl CatalogEntry {
    /// Residues of the basis columns mod 2; distinct for every catalog graph.
    pub fn column_residues(&self) -> Vec<F2Vector> {
        (0..self.graph.edge_count()).map(|i| self.basis.column_residue(i)).collect()
    }
}

struct RawEntry {
    index: usize,
    name: &'static str,
    vertex_count: usize,
    edges: &'static [(usize, usize)],
    basis: &'static [&'static [i64]],
    q_rep: [[i64; 4]; 4],
    f_vector: [usize; 4],
}

// Graph combinatorics per row (data-review reference):
//   idx name              |V| |E| loops  parallel classes
//    1 triangular prism    6   9    0    none
//    2 K33                 6   9    0    none
//    3 pinched square      5   8    0    one double
//    4 wheel W4            5   8    0    none
//    5 K4 + double edge    4   7    0    one double
//    6 chain of doubles    4   7    0    three doubles
//    7 two doubled spokes  4   7    0    two doubles
//    8 K4 + loop           4   7    1    none
//    9 theta triangle      3   6    0    three doubles
//   10 double-triple       3   6    0    one double, one triple
//   11 theta pair + loop   3   6    1    two doubles
//   12 dumbbell thetas     3   6    0    two triples
//   13 banana B5           2   5    0    one quintuple
//   14 banana B4 + loop    2   5    1    one quadruple
//   15 theta + two loops   2   5    2    one triple
//   16 rose R4             1   4    4    four loops
static RAW_CATALOG: &[RawEntry] = &[
    RawEntry {
        index: 1,
        name: "triangular prism",
        vertex_count: 6,
        // edge order and orientations of the published recovery drawing
        edges: &[(2, 3), (2, 1), (2, 0), (3, 5), (3, 4), (1, 0), (1, 5), (0, 4), (5, 4)],
        basis: &[
            &[0, 1, -1, 0, 0, 1, 0, 0, 0],
            &[-1, 1, 0, -1, 0, 0, 1, 0, 0],
            &[-1, 0, 1, 0, -1, 0, 0, 1, 0],
            &[0, 0, 0, -1, 1, 0, 0, 0, -1],
        ],
        q_rep: [[3, 1, -1, 0], [1, 4, 1, 1], [-1, 1, 4, -1], [0, 1, -1, 3]],
        f_vector: [96, 198, 130, 28],
    },
    RawEntry {
        index: 2,
        name: "K33",
        vertex_count: 6,
        edges: &[(0, 3), (0, 4), (0, 5), (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5)],
        basis: &[
            &[-1, 0, 1, 0, 0, 0, 1, 0, -1],
            &[0, 0, 0, -1, 0, 1, 1, 0, -1],
            &[1, -1, 0, 0, 0, 0, -1, 1, 0],
            &[0, 0, 0, 1, -1, 0, -1, 1, 0],
        ],
        q_rep: [[4, 2, -2, -1], [2, 4, -1, -2], [-2, -1, 4, 2], [-1, -2, 2, 4]],
        f_vector: [102, 216, 144, 30],
    },
    RawEntry {
        index: 3,
        name: "pinched square",
        vertex_count: 5,
        edges: &[(0, 2), (3, 1), (1, 0), (0, 4), (4, 3), (4, 1), (2, 3), (2, 3)],
        basis: &[
            &[0, 0, 0, 0, 0, 0, 1, -1],
            &[0, 0, -1, -1, 0, -1, 0, 0],
            &[-1, -1, -1, 0, 0, 0, -1, 0],
            &[0, 1, 0, 0, 1, -1, 0, 0],
        ],
        q_rep: [[2, 0, -1, 0], [0, 3, 1, 1], [-1, 1, 4, -1], [0, 1, -1, 3]],
        f_vector: [72, 150, 102, 24],
    },
    RawEntry {
        index: 4,
        name: "wheel W4",
        vertex_count: 5,
        edges: &[(0, 2), (2, 3), (3, 1), (1, 0), (0, 4), (4, 3), (2, 4), (4, 1)],
        basis: &[
            &[0, 0, 0, -1, -1, 0, 0, -1],
            &[-1, 0, 0, -1, 0, 0, -1, -1],
            &[-1, -1, -1, -1, 0, 0, 0, 0],
            &[0, 0, -1, 0, 0, -1, 0, 1],
        ],
        q_rep: [[3, 2, 1, -1], [2, 4, 2, -1], [1, 2, 4, 1], [-1, -1, 1, 3]],
        f_vector: [78, 168, 116, 26],
    },
    RawEntry {
        index: 5,
        name: "K4 plus double edge",
        vertex_count: 4,
        edges: &[(0, 2), (0, 1), (0, 3), (2, 3), (2, 3), (1, 3), (1, 2)],
        basis: &[
            &[1, -1, 0, 0, 0, 0, -1],
            &[0, -1, 1, 0, 0, -1, 0],
            &[-1, 0, 1, 0, -1, 0, 0],
            &[-1, 0, 1, -1, 0, 0, 0],
        ],
        q_rep: [[3, 1, -1, -1], [1, 3, 1, 1], [-1, 1, 3, 2], [-1, 1, 2, 3]],
        f_vector: [60, 134, 98, 24],
    },
    RawEntry {
        index: 6,
        name: "chain of doubles",
        vertex_count: 4,
        edges: &[(0, 2), (2, 3), (2, 3), (1, 3), (1, 3), (0, 1), (0, 1)],
        basis: &[
            &[0, 0, 0, 0, 0, 1, -1],
            &[0, 0, 0, 1, -1, 0, 0],
            &[1, 1, 0, -1, 0, -1, 0],
            &[1, 0, 1, -1, 0, -1, 0],
        ],
        q_rep: [[2, 0, -1, -1], [0, 2, -1, -1], [-1, -1, 4, 3], [-1, -1, 3, 4]],
        f_vector: [54, 116, 84, 22],
    },
    RawEntry {
        index: 7,
        name: "two doubled spokes",
        vertex_count: 4,
        edges: &[(0, 2), (0, 1), (0, 3), (2, 3), (2, 3), (1, 3), (1, 3)],
        basis: &[
            &[0, 0, 0, 0, 0, 1, -1],
            &[0, 0, 0, 1, -1, 0, 0],
            &[0, -1, 1, 0, 0, -1, 0],
            &[-1, 0, 1, -1, 0, 0, 0],
        ],
        q_rep: [[2, 0, -1, 0], [0, 2, 0, -1], [-1, 0, 3, 1], [0, -1, 1, 3]],
        f_vector: [54, 114, 80, 20],
    },
    RawEntry {
        index: 8,
        name: "K4 plus loop",
        vertex_count: 4,
        edges: &[(0, 2), (0, 1), (0, 3), (2, 3), (1, 3), (1, 2), (2, 2)],
        basis: &[
            &[1, -1, 0, 0, 0, -1, 0],
            &[0, 0, 0, -1, 1, -1, 0],
            &[-1, 0, 1, -1, 0, 0, 0],
            &[0, 0, 0, 0, 0, 0, -1],
        ],
        q_rep: [[3, 1, -1, 0], [1, 3, 1, 0], [-1, 1, 3, 0], [0, 0, 0, 1]],
        f_vector: [48, 96, 64, 16],
    },
    RawEntry {
        index: 9,
        name: "theta triangle",
        vertex_count: 3,
        edges: &[(0, 1), (0, 1), (0, 2), (0, 2), (1, 2), (1, 2)],
        basis: &[
            &[0, 0, 0, 0, 1, -1],
            &[0, 0, 1, -1, 0, 0],
            &[0, -1, 1, 0, -1, 0],
            &[-1, 0, 1, 0, -1, 0],
        ],
        q_rep: [[2, 0, -1, -1], [0, 2, 1, 1], [-1, 1, 3, 2], [-1, 1, 2, 3]],
        f_vector: [46, 108, 84, 22],
    },
    RawEntry {
        index: 10,
        name: "double-triple triangle",
        vertex_count: 3,
        edges: &[(0, 1), (0, 1), (0, 2), (0, 2), (1, 2), (0, 2)],
        basis: &[
            &[1, -1, 0, 0, 0, 0],
            &[0, 1, 0, 0, 1, -1],
            &[0, 1, 0, -1, 1, 0],
            &[0, 1, -1, 0, 1, 0],
        ],
        q_rep: [[2, -1, -1, -1], [-1, 3, 2, 2], [-1, 2, 3, 2], [-1, 2, 2, 3]],
        f_vector: [42, 94, 72, 20],
    },
    RawEntry {
        index: 11,
        name: "theta pair plus loop",
        vertex_count: 3,
        edges: &[(0, 1), (0, 1), (0, 2), (0, 2), (1, 2), (0, 0)],
        basis: &[
            &[0, 0, 1, -1, 0, 0],
            &[0, -1, 1, 0, -1, 0],
            &[-1, 0, 1, 0, -1, 0],
            &[0, 0, 0, 0, 0, -1],
        ],
        q_rep: [[2, 1, 1, 0], [1, 3, 2, 0], [1, 2, 3, 0], [0, 0, 0, 1]],
        f_vector: [36, 74, 52, 14],
    },
    RawEntry {
        index: 12,
        name: "dumbbell of thetas",
        vertex_count: 3,
        edges: &[(0, 1), (0, 1), (0, 1), (1, 2), (1, 2), (1, 2)],
        basis: &[
            &[0, 0, 0, 1, 0, -1],
            &[0, 0, 0, 0, 1, -1],
            &[1, 0, -1, 0, 0, 0],
            &[0, 1, -1, 0, 0, 0],
        ],
        q_rep: [[2, 1, 0, 0], [1, 2, 0, 0], [0, 0, 2, 1], [0, 0, 1, 2]],
        f_vector: [36, 72, 48, 12],
    },
    RawEntry {
        index: 13,
        name: "banana B5",
        vertex_count: 2,
        edges: &[(0, 1), (0, 1), (0, 1), (0, 1), (0, 1)],
        basis: &[
            &[1, 0, 0, 0, -1],
            &[0, 1, 0, 0, -1],
            &[0, 0, 1, 0, -1],
            &[0, 0, 0, 1, -1],
        ],
        q_rep: [[2, 1, 1, 1], [1, 2, 1, 1], [1, 1, 2, 1], [1, 1, 1, 2]],
        f_vector: [30, 70, 60, 20],
    },
    RawEntry {
        index: 14,
        name: "banana B4 plus loop",
        vertex_count: 2,
        edges: &[(0, 1), (0, 1), (0, 1), (0, 1), (1, 1)],
        basis: &[
            &[1, 0, 0, -1, 0],
            &[0, 1, 0, -1, 0],
            &[0, 0, 1, -1, 0],
            &[0, 0, 0, 0, -1],
        ],
        q_rep: [[2, 1, 1, 0], [1, 2, 1, 0], [1, 1, 2, 0], [0, 0, 0, 1]],
        f_vector: [28, 62, 48, 14],
    },
    RawEntry {
        index: 15,
        name: "theta plus two loops",
        vertex_count: 2,
        edges: &[(0, 1), (0, 1), (0, 1), (1, 1), (1, 1)],
        basis: &[
            &[1, 0, -1, 0, 0],
            &[0, 1, -1, 0, 0],
            &[0, 0, 0, 0, -1],
            &[0, 0, 0, -1, 0],
        ],
        q_rep: [[2, 1, 0, 0], [1, 2, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]],
        f_vector: [24, 48, 34, 10],
    },
    RawEntry {
        index: 16,
        name: "rose R4",
        vertex_count: 1,
        edges: &[(0, 0), (0, 0), (0, 0), (0, 0)],
        basis: &[
            &[1, 0, 0, 0],
            &[0, 1, 0, 0],
            &[0, 0, 1, 0],
            &[0, 0, 0, 1],
        ],
        q_rep: [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]],
        f_vector: [16, 32, 24, 8],
    },
];

static CATALOG: OnceLock<Vec<CatalogEntry>> = OnceLock::new();

/// The 16 genus-4 cographic types with representative matrices and f-vectors.
///
/// Load-time self-check: every `Q_rep` is symmetric positive definite and
/// equals `B B^t` for the shipped unit-length basis.
pub fn catalog() -> &'static [CatalogEntry] {
    CATALOG.get_or_init(|| {
        RAW_CATALOG
            .iter()
            .map(|raw| {
                let graph = MetricGraph::with_unit_lengths(raw.vertex_count, raw.edges);
                let basis = CycleBasis::from_i64(
                    &raw.basis.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
                );
                let q_rep = QuadForm::from_int_rows(
                    &raw.q_rep.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
                )
                .unwrap_or_else(|e| panic!("catalog entry {}: bad Q_rep: {e}", raw.index));
                assert!(
                    basis.is_valid_for(&graph),
                    "catalog entry {}: basis is not a cycle basis",
                    raw.index
                );
                let rm = riemann_matrix(&graph, &basis)
                    .unwrap_or_else(|e| panic!("catalog entry {}: {e}", raw.index));
                assert!(rm.bridges.is_empty(), "catalog entry {}: bridge", raw.index);
                assert_eq!(
                    &rm.entries,
                    q_rep.entries(),
                    "catalog entry {}: B B^t != Q_rep",
                    raw.index
                );
                CatalogEntry {
                    index: raw.index,
                    name: raw.name,
                    graph,
                    basis,
                    q_rep,
                    f_vector: FVector(raw.f_vector),
                    cone_dim: raw.edges.len(),
                }
            })
            .collect()
    })
}

/// f-vector lookup: the catalog entry whose Voronoi f-vector matches.
pub fn entry_by_fvector(fv: &FVector) -> Option<&'static CatalogEntry> {
    catalog().iter().find(|e| &e.f_vector == fv)
}

// ---------------------------------------------------------------------------
// GL_4(F_2) and cographic matching
// ---------------------------------------------------------------------------

fn label_mask(v: &[u8]) -> u8 {
    v.iter().fold(0u8, |acc, &b| (acc << 1) | (b & 1))
}

fn mask_label(m: u8, g: usize) -> F2Vector {
    (0..g).map(|i| (m >> (g - 1 - i)) & 1).collect()
}

/// Applies a row-mask encoded F2 matrix to a mask-encoded vector.
fn apply_f2(s: &[u8; 4], v: u8) -> u8 {
    let mut out = 0u8;
    for (i, row) in s.iter().enumerate() {
        out |= (((row & v).count_ones() & 1) as u8) << (3 - i);
    }
    out
}

fn f2_det_nonzero(rows: [u8; 4]) -> bool {
    let mut m = rows;
    for col in 0..4 {
        let bit = 1u8 << (3 - col);
        let pivot = (col..4).find(|&r| m[r] & bit != 0);
        match pivot {
            None => return false,
            Some(p) => {
                m.swap(col, p);
                for r in 0..4 {
                    if r != col && m[r] & bit != 0 {
                        m[r] ^= m[col];
                    }
                }
            }
        }
    }
    true
}

static GL4_F2: OnceLock<Vec<[u8; 4]>> = OnceLock::new();

/// All 20160 invertible 4x4 matrices over F2, rows encoded as 4-bit masks.
pub fn gl4_f2() -> &'static [[u8; 4]] {
    GL4_F2.get_or_init(|| {
        let mut out = Vec::with_capacity(20160);
        for a in 1u8..16 {
            for b in 1u8..16 {
                for c in 1u8..16 {
                    for d in 1u8..16 {
                        let rows = [a, b, c, d];
                        if f2_det_nonzero(rows) {
                            out.push(rows);
                        }
                    }
                }
            }
        }
        assert_eq!(out.len(), 20160);
        out
    })
}

/// A matroid-to-catalog match: `relabel` maps matroid labels onto the basis
/// column residues of the entry, inducing `edge_labels[i]` = the matroid
/// label assigned to edge i.
#[derive(Clone, Debug)]
pub struct CographicMatch {
    pub entry: &'static CatalogEntry,
    pub relabel: [u8; 4],
    pub edge_labels: Vec<F2Vector>,
}

/// All catalog matches of a positive-weight theta matroid, in deterministic
/// order (catalog index, then relabel enumeration order).
pub fn match_cographic_all(m: &ThetaMatroid) -> Vec<CographicMatch> {
    let labels: Vec<u8> = m.elements.iter().map(|(l, _)| label_mask(l)).collect();
    let mut out = Vec::new();
    for entry in catalog() {
        if entry.graph.edge_count() != labels.len() {
            continue;
        }
        let residues: Vec<u8> =
            entry.column_residues().iter().map(|r| label_mask(r)).collect();
        let residue_set: u32 = residues.iter().fold(0u32, |acc, &r| acc | (1 << r));
        for s in gl4_f2() {
            let mapped: u32 = labels.iter().fold(0u32, |acc, &l| acc | (1 << apply_f2(s, l)));
            if mapped != residue_set {
                continue;
            }
            // S maps the label set onto the residue set; edge i gets S^{-1}(b_i)
            let mut edge_labels = Vec::with_capacity(residues.len());
            for &r in &residues {
                let lab = labels
                    .iter()
                    .copied()
                    .find(|&l| apply_f2(s, l) == r)
                    .expect("bijective on the set");
                edge_labels.push(mask_label(lab, 4));
            }
            out.push(CographicMatch { entry, relabel: *s, edge_labels });
        }
    }
    out
}

/// First catalog match, if the matroid is cographic for g = 4.
pub fn match_cographic(m: &ThetaMatroid) -> Option<CographicMatch> {
    match_cographic_all(m).into_iter().next()
}
