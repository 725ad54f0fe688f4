//! Labeled quivers, path enumeration, and the additive closure of the free
//! R-linear path category.
//!
//! Vertices and edges are index-addressed; labels are unique strings used
//! only for canonical ordering and display.  Paths are edge-index sequences
//! in diagram order.  All path enumeration requires an acyclic quiver;
//! cyclic diagram shapes are handled by [`unroll_loops`] with an explicit
//! depth bound.

use std::collections::VecDeque;

use num_traits::Zero;

use crate::matrix::{Matrix, Ring, Scalar};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub label: String,
    pub src: usize,
    pub dst: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Quiver {
    pub vertices: Vec<String>,
    pub edges: Vec<Edge>,
}

impl Quiver {
    pub fn new(vertices: Vec<String>, edges: Vec<(String, usize, usize)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for v in &vertices {
            if !seen.insert(v.clone()) {
                return Err(Error::Invalid(format!("duplicate vertex label {v}")));
            }
        }
        let mut seen_edges = std::collections::HashSet::new();
        let mut es = Vec::new();
        for (label, src, dst) in edges {
            if src >= vertices.len() || dst >= vertices.len() {
                return Err(Error::Invalid(format!("edge {label} references missing vertex")));
            }
            if !seen_edges.insert(label.clone()) {
                return Err(Error::Invalid(format!("duplicate edge label {label}")));
            }
            es.push(Edge { label, src, dst });
        }
        Ok(Quiver { vertices, edges: es })
    }

    pub fn vertex_index(&self, label: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == label)
    }

    pub fn edge_index(&self, label: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.label == label)
    }

    /// Reachability matrix through at least one edge.
    fn reaches(&self) -> Vec<Vec<bool>> {
        let n = self.vertices.len();
        let mut r = vec![vec![false; n]; n];
        for e in &self.edges {
            r[e.src][e.dst] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    r[i][j] = r[i][j] || (r[i][k] && r[k][j]);
                }
            }
        }
        r
    }

    pub fn is_acyclic(&self) -> bool {
        let r = self.reaches();
        (0..self.vertices.len()).all(|v| !r[v][v])
    }

    fn require_acyclic(&self) -> Result<()> {
        if self.is_acyclic() {
            Ok(())
        } else {
            Err(Error::Cyclic("path enumeration needs an acyclic quiver".into()))
        }
    }

    /// All directed paths `u -> v` in canonical order (lexicographic on the
    /// edge label sequence; the empty path at `u = v` comes first).
    pub fn enumerate_paths(&self, u: usize, v: usize) -> Result<Vec<Path>> {
        self.require_acyclic()?;
        let mut out = Vec::new();
        let mut stack = vec![(u, Vec::new())];
        while let Some((at, path)) = stack.pop() {
            if at == v {
                out.push(Path { from: u, to: v, edges: path.clone() });
            }
            for (idx, e) in self.edges.iter().enumerate() {
                if e.src == at {
                    let mut next = path.clone();
                    next.push(idx);
                    stack.push((e.dst, next));
                }
            }
        }
        out.sort_by(|a, b| self.label_seq(a).cmp(&self.label_seq(b)));
        Ok(out)
    }

    fn label_seq<'a>(&'a self, p: &Path) -> Vec<&'a str> {
        p.edges.iter().map(|&e| self.edges[e].label.as_str()).collect()
    }

    pub fn path_display(&self, p: &Path) -> String {
        if p.edges.is_empty() {
            format!("id({})", self.vertices[p.from])
        } else {
            self.label_seq(p).join(";")
        }
    }
}

/// Edge-index sequence in diagram order (first edge applied first).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    pub from: usize,
    pub to: usize,
    pub edges: Vec<usize>,
}

impl Path {
    pub fn identity(v: usize) -> Self {
        Path { from: v, to: v, edges: Vec::new() }
    }

    /// Concatenation in diagram order: first `self`, then `g`.
    pub fn then(&self, g: &Path) -> Path {
        assert_eq!(self.to, g.from, "paths do not compose");
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&g.edges);
        Path { from: self.from, to: g.to, edges }
    }
}

/// Incidence-preserving map of quivers (vertices to vertices, edges to
/// edges).
#[derive(Clone, Debug)]
pub struct QuiverMorphism {
    pub src: Quiver,
    pub dst: Quiver,
    pub vertex_map: Vec<usize>,
    pub edge_map: Vec<usize>,
}

impl QuiverMorphism {
    pub fn new(src: Quiver, dst: Quiver, vertex_map: Vec<usize>, edge_map: Vec<usize>) -> Result<Self> {
        if vertex_map.len() != src.vertices.len() || edge_map.len() != src.edges.len() {
            return Err(Error::Invalid("quiver morphism maps have wrong lengths".into()));
        }
        for (i, e) in src.edges.iter().enumerate() {
            let img = dst
                .edges
                .get(edge_map[i])
                .ok_or_else(|| Error::Invalid("edge image out of range".into()))?;
            if img.src != vertex_map[e.src] || img.dst != vertex_map[e.dst] {
                return Err(Error::Invalid(format!(
                    "incidence broken at edge {}: image endpoints disagree",
                    e.label
                )));
            }
        }
        Ok(QuiverMorphism { src, dst, vertex_map, edge_map })
    }

    pub fn identity(q: &Quiver) -> Self {
        QuiverMorphism {
            src: q.clone(),
            dst: q.clone(),
            vertex_map: (0..q.vertices.len()).collect(),
            edge_map: (0..q.edges.len()).collect(),
        }
    }

    pub fn map_path(&self, p: &Path) -> Path {
        Path {
            from: self.vertex_map[p.from],
            to: self.vertex_map[p.to],
            edges: p.edges.iter().map(|&e| self.edge_map[e]).collect(),
        }
    }
}

/// Formal R-linear combination of parallel paths, kept in normal form:
/// terms sorted by path, no zero coefficients, no duplicate paths.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PathCombination {
    pub from: usize,
    pub to: usize,
    pub terms: Vec<(Scalar, Path)>,
}

impl PathCombination {
    pub fn zero(from: usize, to: usize) -> Self {
        PathCombination { from, to, terms: Vec::new() }
    }

    pub fn single(c: Scalar, p: Path) -> Self {
        let mut s = PathCombination { from: p.from, to: p.to, terms: vec![(c, p)] };
        s.normalize();
        s
    }

    pub fn identity(v: usize) -> Self {
        PathCombination::single(Scalar::from_integer(1.into()), Path::identity(v))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn normalize(&mut self) {
        self.terms.sort_by(|a, b| a.1.cmp(&b.1));
        let mut merged: Vec<(Scalar, Path)> = Vec::new();
        for (c, p) in self.terms.drain(..) {
            if let Some(last) = merged.last_mut() {
                if last.1 == p {
                    last.0 += c;
                    continue;
                }
            }
            merged.push((c, p));
        }
        merged.retain(|(c, _)| !c.is_zero());
        self.terms = merged;
    }

    pub fn add(&self, other: &PathCombination) -> PathCombination {
        assert_eq!((self.from, self.to), (other.from, other.to));
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        let mut out = PathCombination { from: self.from, to: self.to, terms };
        out.normalize();
        out
    }

    pub fn neg(&self) -> PathCombination {
        PathCombination {
            from: self.from,
            to: self.to,
            terms: self.terms.iter().map(|(c, p)| (-c, p.clone())).collect(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> PathCombination {
        let mut out = PathCombination {
            from: self.from,
            to: self.to,
            terms: self.terms.iter().map(|(d, p)| (c * d, p.clone())).collect(),
        };
        out.normalize();
        out
    }

    /// Composition in diagram order: first `self`, then `g`.
    pub fn then(&self, g: &PathCombination) -> PathCombination {
        assert_eq!(self.to, g.from, "path combinations do not compose");
        let mut terms = Vec::new();
        for (c, p) in &self.terms {
            for (d, q) in &g.terms {
                terms.push((c * d, p.then(q)));
            }
        }
        let mut out = PathCombination { from: self.from, to: g.to, terms };
        out.normalize();
        out
    }

    pub fn map_along(&self, g: &QuiverMorphism) -> PathCombination {
        let mut out = PathCombination {
            from: g.vertex_map[self.from],
            to: g.vertex_map[self.to],
            terms: self.terms.iter().map(|(c, p)| (c.clone(), g.map_path(p))).collect(),
        };
        out.normalize();
        out
    }
}

/// Formal finite direct sum of quiver vertices; the empty sum is the zero
/// object.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AdditiveObject(pub Vec<usize>);

impl AdditiveObject {
    pub fn zero() -> Self {
        AdditiveObject(Vec::new())
    }

    pub fn vertex(v: usize) -> Self {
        AdditiveObject(vec![v])
    }

    pub fn direct_sum(&self, other: &AdditiveObject) -> AdditiveObject {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        AdditiveObject(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Matrix of path combinations; entry `(i, j)` runs from `src[j]` to
/// `dst[i]`, and composition is matrix product over path concatenation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AdditiveMorphism {
    pub src: AdditiveObject,
    pub dst: AdditiveObject,
    /// Row-major: entries[i][j]: src[j] -> dst[i].
    pub entries: Vec<Vec<PathCombination>>,
}

impl AdditiveMorphism {
    pub fn new(src: AdditiveObject, dst: AdditiveObject, entries: Vec<Vec<PathCombination>>) -> Result<Self> {
        if entries.len() != dst.len() || entries.iter().any(|row| row.len() != src.len()) {
            return Err(Error::Dimension("additive morphism entry grid has wrong shape".into()));
        }
        for (i, row) in entries.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                if e.from != src.0[j] || e.to != dst.0[i] {
                    return Err(Error::Invalid(format!(
                        "entry ({i},{j}) endpoints do not match the objects"
                    )));
                }
            }
        }
        Ok(AdditiveMorphism { src, dst, entries })
    }

    pub fn zero_mor(src: &AdditiveObject, dst: &AdditiveObject) -> Self {
        let entries = dst
            .0
            .iter()
            .map(|&ti| src.0.iter().map(|&sj| PathCombination::zero(sj, ti)).collect())
            .collect();
        AdditiveMorphism { src: src.clone(), dst: dst.clone(), entries }
    }

    pub fn identity(obj: &AdditiveObject) -> Self {
        let entries = obj
            .0
            .iter()
            .enumerate()
            .map(|(i, &ti)| {
                obj.0
                    .iter()
                    .enumerate()
                    .map(|(j, &sj)| {
                        if i == j {
                            PathCombination::identity(ti)
                        } else {
                            PathCombination::zero(sj, ti)
                        }
                    })
                    .collect()
            })
            .collect();
        AdditiveMorphism { src: obj.clone(), dst: obj.clone(), entries }
    }

    /// Composition in diagram order: first `self`, then `g`.
    pub fn then(&self, g: &AdditiveMorphism) -> AdditiveMorphism {
        assert_eq!(self.dst, g.src, "additive morphisms do not compose");
        let entries = (0..g.dst.len())
            .map(|i| {
                (0..self.src.len())
                    .map(|j| {
                        let mut acc = PathCombination::zero(self.src.0[j], g.dst.0[i]);
                        for k in 0..self.dst.len() {
                            acc = acc.add(&self.entries[k][j].then(&g.entries[i][k]));
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        AdditiveMorphism { src: self.src.clone(), dst: g.dst.clone(), entries }
    }

    pub fn add(&self, other: &AdditiveMorphism) -> AdditiveMorphism {
        assert_eq!(self.src, other.src);
        assert_eq!(self.dst, other.dst);
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(r1, r2)| r1.iter().zip(r2).map(|(a, b)| a.add(b)).collect())
            .collect();
        AdditiveMorphism { src: self.src.clone(), dst: self.dst.clone(), entries }
    }

    pub fn neg(&self) -> AdditiveMorphism {
        let entries = self
            .entries
            .iter()
            .map(|row| row.iter().map(|e| e.neg()).collect())
            .collect();
        AdditiveMorphism { src: self.src.clone(), dst: self.dst.clone(), entries }
    }

    pub fn scale(&self, c: &Scalar) -> AdditiveMorphism {
        let entries = self
            .entries
            .iter()
            .map(|row| row.iter().map(|e| e.scale(c)).collect())
            .collect();
        AdditiveMorphism { src: self.src.clone(), dst: self.dst.clone(), entries }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|row| row.iter().all(|e| e.is_zero()))
    }

    /// Block matrix `[self 0; 0 other]` on the direct sums.
    pub fn direct_sum(&self, other: &AdditiveMorphism) -> AdditiveMorphism {
        let src = self.src.direct_sum(&other.src);
        let dst = self.dst.direct_sum(&other.dst);
        let mut out = AdditiveMorphism::zero_mor(&src, &dst);
        for i in 0..self.dst.len() {
            for j in 0..self.src.len() {
                out.entries[i][j] = self.entries[i][j].clone();
            }
        }
        for i in 0..other.dst.len() {
            for j in 0..other.src.len() {
                out.entries[self.dst.len() + i][self.src.len() + j] = other.entries[i][j].clone();
            }
        }
        out
    }

    pub fn map_along(&self, g: &QuiverMorphism) -> AdditiveMorphism {
        let src = AdditiveObject(self.src.0.iter().map(|&v| g.vertex_map[v]).collect());
        let dst = AdditiveObject(self.dst.0.iter().map(|&v| g.vertex_map[v]).collect());
        let entries = self
            .entries
            .iter()
            .map(|row| row.iter().map(|e| e.map_along(g)).collect())
            .collect();
        AdditiveMorphism { src, dst, entries }
    }
}

/// Canonically ordered basis of Hom(src, dst) in the additive closure: one
/// basis element per (target slot, source slot, path).
#[derive(Clone, Debug)]
pub struct HomSpace {
    pub src: AdditiveObject,
    pub dst: AdditiveObject,
    pub basis: Vec<(usize, usize, Path)>,
}

impl HomSpace {
    pub fn new(q: &Quiver, src: &AdditiveObject, dst: &AdditiveObject) -> Result<Self> {
        let mut basis = Vec::new();
        for (i, &ti) in dst.0.iter().enumerate() {
            for (j, &sj) in src.0.iter().enumerate() {
                for p in q.enumerate_paths(sj, ti)? {
                    basis.push((i, j, p));
                }
            }
        }
        Ok(HomSpace { src: src.clone(), dst: dst.clone(), basis })
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Coordinate column of a morphism in this basis.
    pub fn coordinates(&self, m: &AdditiveMorphism, ring: Ring) -> Matrix {
        assert_eq!(m.src, self.src);
        assert_eq!(m.dst, self.dst);
        let mut col = Matrix::zero(self.rank(), 1, ring);
        for (bi, (i, j, p)) in self.basis.iter().enumerate() {
            for (c, path) in &m.entries[*i][*j].terms {
                if path == p {
                    col.set(bi, 0, c.clone());
                }
            }
        }
        debug_assert_eq!(&self.morphism_from(&col), m, "coordinates must round-trip");
        col
    }

    /// Reconstruct a morphism from a coordinate column.
    pub fn morphism_from(&self, col: &Matrix) -> AdditiveMorphism {
        assert_eq!(col.rows, self.rank());
        assert_eq!(col.cols, 1);
        let mut m = AdditiveMorphism::zero_mor(&self.src, &self.dst);
        for (bi, (i, j, p)) in self.basis.iter().enumerate() {
            let c = col.at(bi, 0);
            if !c.is_zero() {
                let term = PathCombination::single(c.clone(), p.clone());
                m.entries[*i][*j] = m.entries[*i][*j].add(&term);
            }
        }
        m
    }

    /// Matrix of `f -> f.then(g)` from this space into `target_space`.
    pub fn post_compose_operator(
        &self,
        target_space: &HomSpace,
        g: &AdditiveMorphism,
        ring: Ring,
    ) -> Matrix {
        assert_eq!(g.src, self.dst);
        assert_eq!(g.dst, target_space.dst);
        assert_eq!(self.src, target_space.src);
        let mut op = Matrix::zero(target_space.rank(), self.rank(), ring);
        for (bi, (i, j, p)) in self.basis.iter().enumerate() {
            let mut basis_mor = AdditiveMorphism::zero_mor(&self.src, &self.dst);
            basis_mor.entries[*i][*j] =
                PathCombination::single(Scalar::from_integer(1.into()), p.clone());
            let composed = basis_mor.then(g);
            let col = target_space.coordinates(&composed, ring);
            for r in 0..op.rows {
                op.set(r, bi, col.at(r, 0).clone());
            }
        }
        op
    }

    /// Matrix of `f -> g.then(f)` from this space into `target_space`.
    pub fn pre_compose_operator(
        &self,
        target_space: &HomSpace,
        g: &AdditiveMorphism,
        ring: Ring,
    ) -> Matrix {
        assert_eq!(g.dst, self.src);
        assert_eq!(g.src, target_space.src);
        assert_eq!(self.dst, target_space.dst);
        let mut op = Matrix::zero(target_space.rank(), self.rank(), ring);
        for (bi, (i, j, p)) in self.basis.iter().enumerate() {
            let mut basis_mor = AdditiveMorphism::zero_mor(&self.src, &self.dst);
            basis_mor.entries[*i][*j] =
                PathCombination::single(Scalar::from_integer(1.into()), p.clone());
            let composed = g.then(&basis_mor);
            let col = target_space.coordinates(&composed, ring);
            for r in 0..op.rows {
                op.set(r, bi, col.at(r, 0).clone());
            }
        }
        op
    }
}

/// Replace every vertex lying on a directed cycle by layered copies so the
/// result is acyclic; the projection collapses copies back.
///
/// Construction: within each strongly connected component, edges that do not
/// increase the vertex index advance the layer by one; cross-component edges
/// land in layer zero.  Copies further than `depth` edges from every
/// layer-zero copy are dropped.  Every path of length at most `depth` in `q`
/// then lifts to the result starting at layer zero.
pub fn unroll_loops(q: &Quiver, depth: usize) -> (Quiver, QuiverMorphism) {
    assert!(depth >= 1, "unroll depth must be at least one");
    if q.is_acyclic() {
        return (q.clone(), QuiverMorphism::identity(q));
    }
    let reach = q.reaches();
    let n = q.vertices.len();
    let same_scc =
        |u: usize, v: usize| u == v || (reach[u][v] && reach[v][u]);
    let cyclic: Vec<bool> = (0..n).map(|v| reach[v][v]).collect();

    // Candidate copies (vertex, layer).
    let mut copy_id = std::collections::HashMap::new();
    let mut copies = Vec::new();
    for v in 0..n {
        let layers = if cyclic[v] { depth + 1 } else { 1 };
        for k in 0..layers {
            copy_id.insert((v, k), copies.len());
            copies.push((v, k));
        }
    }

    // Candidate edges between copies.
    let mut cedges: Vec<(usize, usize, usize)> = Vec::new(); // (copy src, copy dst, edge)
    for (ei, e) in q.edges.iter().enumerate() {
        let src_layers = if cyclic[e.src] { depth + 1 } else { 1 };
        for k in 0..src_layers {
            let target_layer = if same_scc(e.src, e.dst) && cyclic[e.src] && cyclic[e.dst] {
                if e.dst <= e.src {
                    k + 1
                } else {
                    k
                }
            } else {
                0
            };
            if let Some(&to) = copy_id.get(&(e.dst, target_layer)) {
                let from = copy_id[&(e.src, k)];
                cedges.push((from, to, ei));
            }
        }
    }

    // Keep copies within `depth` steps of some layer-zero copy.
    let mut dist = vec![usize::MAX; copies.len()];
    let mut queue = VecDeque::new();
    for (ci, &(_, k)) in copies.iter().enumerate() {
        if k == 0 {
            dist[ci] = 0;
            queue.push_back(ci);
        }
    }
    while let Some(ci) = queue.pop_front() {
        if dist[ci] == depth {
            continue;
        }
        for &(from, to, _) in &cedges {
            if from == ci && dist[to] == usize::MAX {
                dist[to] = dist[ci] + 1;
                queue.push_back(to);
            }
        }
    }

    let kept: Vec<usize> = (0..copies.len()).filter(|&ci| dist[ci] != usize::MAX).collect();
    let mut new_index = vec![usize::MAX; copies.len()];
    for (ni, &ci) in kept.iter().enumerate() {
        new_index[ci] = ni;
    }
    let vertices: Vec<String> = kept
        .iter()
        .map(|&ci| {
            let (v, k) = copies[ci];
            if cyclic[v] {
                format!("{}#{}", q.vertices[v], k)
            } else {
                q.vertices[v].clone()
            }
        })
        .collect();
    let vertex_map: Vec<usize> = kept.iter().map(|&ci| copies[ci].0).collect();

    let mut edges = Vec::new();
    let mut edge_map = Vec::new();
    let mut per_edge_count = vec![0usize; q.edges.len()];
    for &(from, to, ei) in &cedges {
        if new_index[from] != usize::MAX && new_index[to] != usize::MAX {
            per_edge_count[ei] += 1;
        }
    }
    let mut per_edge_seen = vec![0usize; q.edges.len()];
    for &(from, to, ei) in &cedges {
        if new_index[from] == usize::MAX || new_index[to] == usize::MAX {
            continue;
        }
        let label = if per_edge_count[ei] > 1 {
            let l = format!("{}#{}", q.edges[ei].label, per_edge_seen[ei]);
            per_edge_seen[ei] += 1;
            l
        } else {
            q.edges[ei].label.clone()
        };
        edges.push((label, new_index[from], new_index[to]));
        edge_map.push(ei);
    }

    let unrolled = Quiver::new(vertices, edges).expect("unrolled quiver is well-formed");
    debug_assert!(unrolled.is_acyclic(), "unrolled quiver must be acyclic");
    let proj = QuiverMorphism::new(unrolled.clone(), q.clone(), vertex_map, edge_map)
        .expect("projection preserves incidence");
    (unrolled, proj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::int;
    use proptest::prelude::*;

    fn chain3() -> Quiver {
        Quiver::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![("e".into(), 0, 1), ("f".into(), 1, 2)],
        )
        .unwrap()
    }

    fn parallel_pair() -> Quiver {
        // a => b plus b -> c.
        Quiver::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![("p".into(), 0, 1), ("q".into(), 0, 1), ("r".into(), 1, 2)],
        )
        .unwrap()
    }

    #[test]
    fn path_enumeration_examples() {
        let edgeless = Quiver::new(vec!["a".into()], vec![]).unwrap();
        let paths = edgeless.enumerate_paths(0, 0).unwrap();
        assert_eq!(paths, vec![Path::identity(0)]);

        let q = chain3();
        let paths = q.enumerate_paths(0, 2).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].edges.len(), 2);

        let q = parallel_pair();
        let paths = q.enumerate_paths(0, 2).unwrap();
        assert_eq!(paths.len(), 2);

        // Exhaustive DFS oracle: count by brute-force matrix power of the
        // adjacency count.
        let reach_counts = |q: &Quiver, u: usize, v: usize| -> usize {
            // Sum over lengths 0..=edges of the number of edge sequences.
            let n = q.vertices.len();
            let mut total = 0;
            let mut frontier = vec![0usize; n];
            frontier[u] = 1;
            if u == v {
                total += 1;
            }
            for _ in 0..q.edges.len() {
                let mut next = vec![0usize; n];
                for e in &q.edges {
                    next[e.dst] += frontier[e.src];
                }
                total += next[v];
                frontier = next;
            }
            total
        };
        assert_eq!(reach_counts(&q, 0, 2), 2);

        let cyclic = Quiver::new(vec!["a".into()], vec![("l".into(), 0, 0)]).unwrap();
        assert!(matches!(cyclic.enumerate_paths(0, 0), Err(Error::Cyclic(_))));
    }

    #[test]
    fn hom_space_examples() {
        let q = parallel_pair();
        let zero = AdditiveObject::zero();
        let a = AdditiveObject::vertex(0);
        let b = AdditiveObject::vertex(1);
        assert_eq!(HomSpace::new(&q, &zero, &b).unwrap().rank(), 0);

        let edgeless = Quiver::new(vec!["a".into()], vec![]).unwrap();
        let aa = HomSpace::new(&edgeless, &AdditiveObject::vertex(0), &AdditiveObject::vertex(0))
            .unwrap();
        assert_eq!(aa.rank(), 1);

        let a2 = a.direct_sum(&a);
        let h = HomSpace::new(&q, &a2, &b).unwrap();
        assert_eq!(h.rank(), 4);

        // Rank equals the sum over entries of path counts.
        let mut expected = 0;
        for &t in &b.0 {
            for &s in &a2.0 {
                expected += q.enumerate_paths(s, t).unwrap().len();
            }
        }
        assert_eq!(h.rank(), expected);
    }

    #[test]
    fn coordinates_round_trip_and_operators() {
        let q = parallel_pair();
        let a = AdditiveObject::vertex(0);
        let b = AdditiveObject::vertex(1);
        let c = AdditiveObject::vertex(2);
        let hab = HomSpace::new(&q, &a, &b).unwrap();
        let hac = HomSpace::new(&q, &a, &c).unwrap();

        // f = 2p - q, g = r; post-composition must send coords(f) to
        // coords(f then g).
        let p = q.enumerate_paths(0, 1).unwrap();
        let f_comb = PathCombination::single(int(2), p[0].clone())
            .add(&PathCombination::single(-int(1), p[1].clone()));
        let f = AdditiveMorphism::new(a.clone(), b.clone(), vec![vec![f_comb]]).unwrap();
        let r = q.enumerate_paths(1, 2).unwrap();
        let g = AdditiveMorphism::new(
            b.clone(),
            c.clone(),
            vec![vec![PathCombination::single(int(1), r[0].clone())]],
        )
        .unwrap();

        let coords = hab.coordinates(&f, Ring::Int);
        let op = hab.post_compose_operator(&hac, &g, Ring::Int);
        let image_coords = op.mul(&coords);
        assert_eq!(hac.morphism_from(&image_coords), f.then(&g));
    }

    #[test]
    fn unroll_examples() {
        // Acyclic quivers come back unchanged.
        let q = chain3();
        let (u, proj) = unroll_loops(&q, 3);
        assert_eq!(u, q);
        assert_eq!(proj.vertex_map, vec![0, 1, 2]);

        // One loop, depth 2: a three-vertex chain.
        let l = Quiver::new(vec!["v".into()], vec![("l".into(), 0, 0)]).unwrap();
        let (u, proj) = unroll_loops(&l, 2);
        assert_eq!(u.vertices, vec!["v#0", "v#1", "v#2"]);
        assert_eq!(u.edges.len(), 2);
        assert!(u.is_acyclic());
        assert_eq!(proj.vertex_map, vec![0, 0, 0]);

        // Two-cycle, depth 1.
        let two = Quiver::new(
            vec!["a".into(), "b".into()],
            vec![("f".into(), 0, 1), ("g".into(), 1, 0)],
        )
        .unwrap();
        let (u, proj) = unroll_loops(&two, 1);
        let mut names = u.vertices.clone();
        names.sort();
        assert_eq!(names, vec!["a#0", "a#1", "b#0"]);
        assert_eq!(u.edges.len(), 2);
        assert!(u.is_acyclic());
        // The chain runs a#0 -> b#0 -> a#1.
        let at = |l: &str| u.vertex_index(l).unwrap();
        assert!(u.edges.iter().any(|e| e.src == at("a#0") && e.dst == at("b#0")));
        assert!(u.edges.iter().any(|e| e.src == at("b#0") && e.dst == at("a#1")));
        // Path lifting for length <= 1: each original edge has a lift.
        for e in &two.edges {
            let found = u.edges.iter().enumerate().any(|(i, ue)| {
                proj.edge_map[i] == two.edge_index(&e.label).unwrap()
                    && proj.vertex_map[ue.src] == e.src
                    && proj.vertex_map[ue.dst] == e.dst
            });
            assert!(found, "edge {} must lift", e.label);
        }
    }

    #[test]
    fn unroll_lifts_bounded_paths() {
        // Mixed quiver: a -> b, b -> a, b -> b, c -> a; depth 3.
        let q = Quiver::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                ("f".into(), 0, 1),
                ("g".into(), 1, 0),
                ("h".into(), 1, 1),
                ("k".into(), 2, 0),
            ],
        )
        .unwrap();
        let depth = 3;
        let (u, proj) = unroll_loops(&q, depth);
        assert!(u.is_acyclic());
        // Exhaustively enumerate walks of length <= depth in q and check
        // each lifts from a layer-zero start.
        let mut walks: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..depth {
            let mut next = Vec::new();
            for w in &walks {
                let at = if let Some(&last) = w.last() {
                    q.edges[last].dst
                } else {
                    usize::MAX
                };
                for (ei, e) in q.edges.iter().enumerate() {
                    if w.is_empty() || e.src == at {
                        let mut nw = w.clone();
                        nw.push(ei);
                        next.push(nw);
                    }
                }
            }
            walks.extend(next.clone());
            walks = {
                let mut dedup = walks.clone();
                dedup.sort();
                dedup.dedup();
                dedup
            };
        }
        for w in walks.iter().filter(|w| !w.is_empty()) {
            // Find a lift: a copy-start at layer 0 of w[0].src and a chain
            // of unrolled edges projecting to w.
            let start = q.edges[w[0]].src;
            let starts: Vec<usize> = (0..u.vertices.len())
                .filter(|&cv| proj.vertex_map[cv] == start && u.vertices[cv].ends_with("#0")
                    || proj.vertex_map[cv] == start && !u.vertices[cv].contains('#'))
                .collect();
            let mut frontier = starts;
            for &step in w {
                let mut next = Vec::new();
                for (uei, ue) in u.edges.iter().enumerate() {
                    if proj.edge_map[uei] == step && frontier.contains(&ue.src) {
                        next.push(ue.dst);
                    }
                }
                frontier = next;
                frontier.sort();
                frontier.dedup();
            }
            assert!(!frontier.is_empty(), "walk {w:?} must lift");
        }
    }

    fn arb_small_quiver() -> impl Strategy<Value = Quiver> {
        (2usize..=4, proptest::collection::vec((0usize..4, 0usize..4), 0..5)).prop_map(
            |(n, raw_edges)| {
                let vertices: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
                let mut edges = Vec::new();
                for (i, (s, d)) in raw_edges.into_iter().enumerate() {
                    // Force acyclic by orienting upward.
                    let (s, d) = (s % n, d % n);
                    if s < d {
                        edges.push((format!("e{i}"), s, d));
                    }
                }
                Quiver::new(vertices, edges).unwrap()
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn composition_associative_and_unital(q in arb_small_quiver(), seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = q.vertices.len();
            let objs: Vec<AdditiveObject> = (0..4)
                .map(|_| {
                    let len = rng.gen_range(0..=2);
                    AdditiveObject((0..len).map(|_| rng.gen_range(0..n)).collect())
                })
                .collect();
            let random_mor = |rng: &mut rand_chacha::ChaCha8Rng,
                              src: &AdditiveObject,
                              dst: &AdditiveObject| {
                let mut m = AdditiveMorphism::zero_mor(src, dst);
                for i in 0..dst.len() {
                    for j in 0..src.len() {
                        let paths = q.enumerate_paths(src.0[j], dst.0[i]).unwrap();
                        let mut comb = PathCombination::zero(src.0[j], dst.0[i]);
                        for p in paths {
                            let c = rng.gen_range(-2i64..=2);
                            comb = comb.add(&PathCombination::single(int(c), p));
                        }
                        m.entries[i][j] = comb;
                    }
                }
                m
            };
            let f = random_mor(&mut rng, &objs[0], &objs[1]);
            let g = random_mor(&mut rng, &objs[1], &objs[2]);
            let h = random_mor(&mut rng, &objs[2], &objs[3]);
            prop_assert_eq!(f.then(&g).then(&h), f.then(&g.then(&h)));
            prop_assert_eq!(AdditiveMorphism::identity(&objs[0]).then(&f), f.clone());
            prop_assert_eq!(f.then(&AdditiveMorphism::identity(&objs[1])), f);
        }

        #[test]
        fn unroll_always_acyclic(
            n in 1usize..=3,
            raw in proptest::collection::vec((0usize..3, 0usize..3), 1..5),
            depth in 1usize..=3,
        ) {
            let vertices: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
            let edges: Vec<(String, usize, usize)> = raw
                .into_iter()
                .enumerate()
                .map(|(i, (s, d))| (format!("e{i}"), s % n, d % n))
                .collect();
            let q = Quiver::new(vertices, edges).unwrap();
            let (u, proj) = unroll_loops(&q, depth);
            prop_assert!(u.is_acyclic());
            for (i, e) in u.edges.iter().enumerate() {
                let orig = &q.edges[proj.edge_map[i]];
                prop_assert_eq!(proj.vertex_map[e.src], orig.src);
                prop_assert_eq!(proj.vertex_map[e.dst], orig.dst);
            }
        }
    }
}
