//! Finite simplicial complexes and the combinatorial calculus the sheaf
//! layer is built on: barycentric subdivision, fibre products of ordered
//! complexes, filtrations, and module-valued cochain complexes.
//!
//! Faces are stored as sorted vertex-id lists, ordered by (dimension,
//! lexicographic).  A face's id is its position in that order, so ids are
//! stable under re-construction and subcomplex extraction preserves the
//! relative order of surviving faces.

use crate::module::{FpModule, ModuleMap};
use crate::{Error, Matrix, Result, Ring, Scalar};
use std::collections::BTreeSet;

/// A set of face ids of some ambient complex.
pub type FaceSet = BTreeSet<usize>;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SimplicialComplex {
    pub labels: Vec<String>,
    /// Every face, as a sorted vertex-id list, ordered by (dim, lex).
    pub faces: Vec<Vec<usize>>,
}

fn face_key(f: &[usize]) -> (usize, Vec<usize>) {
    (f.len(), f.to_vec())
}

impl SimplicialComplex {
    /// Builds the complex generated by `facets`.  Every subset of a facet
    /// becomes a face; vertices not covered by any facet are rejected.
    pub fn new(labels: Vec<String>, facets: Vec<Vec<usize>>) -> Result<Self> {
        let n = labels.len();
        {
            let mut seen = BTreeSet::new();
            for l in &labels {
                if l.is_empty() || !seen.insert(l.clone()) {
                    return Err(Error::Invalid(format!("bad vertex label {:?}", l)));
                }
            }
        }
        let mut all: BTreeSet<Vec<usize>> = BTreeSet::new();
        for f in &facets {
            let mut vs: Vec<usize> = f.clone();
            vs.sort_unstable();
            vs.dedup();
            if vs.len() != f.len() {
                return Err(Error::Invalid(format!("facet {:?} repeats a vertex", f)));
            }
            if vs.iter().any(|&v| v >= n) {
                return Err(Error::Invalid(format!("facet {:?} uses unknown vertex", f)));
            }
            // All nonempty subsets, via bitmasks of the facet.
            for mask in 1u64..(1u64 << vs.len()) {
                let sub: Vec<usize> = (0..vs.len()).filter(|i| mask >> i & 1 == 1).map(|i| vs[i]).collect();
                all.insert(sub);
            }
        }
        let mut covered = vec![false; n];
        for f in &all {
            for &v in f {
                covered[v] = true;
            }
        }
        if covered.iter().any(|c| !c) {
            return Err(Error::Invalid("vertex not covered by any facet".into()));
        }
        let mut faces: Vec<Vec<usize>> = all.into_iter().collect();
        faces.sort_by(|a, b| face_key(a).cmp(&face_key(b)));
        Ok(SimplicialComplex { labels, faces })
    }

    pub fn empty() -> Self {
        SimplicialComplex { labels: Vec::new(), faces: Vec::new() }
    }

    pub fn point(label: &str) -> Self {
        SimplicialComplex::new(vec![label.to_string()], vec![vec![0]]).unwrap()
    }

    pub fn n_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    /// Dimension of the largest face; 0 for the empty complex.
    pub fn top_dim(&self) -> usize {
        self.faces.last().map_or(0, |f| f.len() - 1)
    }

    pub fn dim_of(&self, face: usize) -> usize {
        self.faces[face].len() - 1
    }

    pub fn face_id(&self, vertices: &[usize]) -> Option<usize> {
        self.faces
            .binary_search_by(|probe| face_key(probe).cmp(&face_key(vertices)))
            .ok()
    }

    pub fn faces_of_dim(&self, d: usize) -> Vec<usize> {
        (0..self.faces.len()).filter(|&f| self.dim_of(f) == d).collect()
    }

    /// Faces that are not proper subsets of any other face.
    pub fn facet_ids(&self) -> Vec<usize> {
        let mut is_facet = vec![true; self.faces.len()];
        for f in 0..self.faces.len() {
            if self.dim_of(f) == 0 {
                continue;
            }
            for (b, _) in self.boundary_with_signs(f) {
                is_facet[b] = false;
            }
        }
        (0..self.faces.len()).filter(|&f| is_facet[f]).collect()
    }

    pub fn face_label(&self, face: usize) -> String {
        self.faces[face]
            .iter()
            .map(|&v| self.labels[v].clone())
            .collect::<Vec<_>>()
            .join(".")
    }

    pub fn full_set(&self) -> FaceSet {
        (0..self.faces.len()).collect()
    }

    /// Faces of dimension at most `a`.
    pub fn skeleton(&self, a: usize) -> FaceSet {
        (0..self.faces.len()).filter(|&f| self.dim_of(f) <= a).collect()
    }

    pub fn is_closed(&self, set: &FaceSet) -> bool {
        set.iter().all(|&f| {
            self.dim_of(f) == 0
                || self.boundary_with_signs(f).iter().all(|(b, _)| set.contains(b))
        })
    }

    pub fn closure(&self, set: &FaceSet) -> FaceSet {
        let mut out = FaceSet::new();
        let mut stack: Vec<usize> = set.iter().copied().collect();
        while let Some(f) = stack.pop() {
            if out.insert(f) && self.dim_of(f) > 0 {
                for (b, _) in self.boundary_with_signs(f) {
                    stack.push(b);
                }
            }
        }
        out
    }

    /// All faces whose union with `face` is again a face.
    pub fn closed_star(&self, face: usize) -> FaceSet {
        let sigma = &self.faces[face];
        (0..self.faces.len())
            .filter(|&g| {
                let mut u: Vec<usize> = self.faces[g].iter().chain(sigma.iter()).copied().collect();
                u.sort_unstable();
                u.dedup();
                self.face_id(&u).is_some()
            })
            .collect()
    }

    /// Codimension-one faces of `face` with the alternating sign of the
    /// omitted vertex position.
    pub fn boundary_with_signs(&self, face: usize) -> Vec<(usize, i64)> {
        let vs = &self.faces[face];
        let mut out = Vec::with_capacity(vs.len());
        for j in 0..vs.len() {
            let mut sub = vs.clone();
            sub.remove(j);
            if sub.is_empty() {
                continue;
            }
            let id = self.face_id(&sub).expect("complex is closed under subsets");
            out.push((id, if j % 2 == 0 { 1 } else { -1 }));
        }
        out
    }

    /// Extracts the closed face set as its own complex, keeping ambient
    /// vertex order.
    pub fn extract(&self, set: &FaceSet) -> Result<Extraction> {
        if !self.is_closed(set) {
            return Err(Error::Invalid("extract needs a closed face set".into()));
        }
        let mut verts: Vec<usize> = set
            .iter()
            .filter(|&&f| self.dim_of(f) == 0)
            .map(|&f| self.faces[f][0])
            .collect();
        verts.sort_unstable();
        let rank = |v: usize| verts.binary_search(&v).unwrap();
        let labels: Vec<String> = verts.iter().map(|&v| self.labels[v].clone()).collect();
        let facets: Vec<Vec<usize>> = set
            .iter()
            .map(|&f| self.faces[f].iter().map(|&v| rank(v)).collect())
            .collect();
        let complex = SimplicialComplex::new(labels, facets)?;
        let face_to_ambient: Vec<usize> = complex
            .faces
            .iter()
            .map(|f| {
                let amb: Vec<usize> = f.iter().map(|&v| verts[v]).collect();
                self.face_id(&amb).expect("extracted face exists in ambient complex")
            })
            .collect();
        let inclusion = SimplicialMap::new(complex.clone(), self.clone(), verts.clone())?;
        Ok(Extraction { complex, vertex_to_ambient: verts, face_to_ambient, inclusion })
    }

    /// Disjoint union, with inclusion maps.  Labels get `#0` / `#1`
    /// suffixes so they stay unique.
    pub fn disjoint_union(&self, other: &SimplicialComplex) -> (SimplicialComplex, SimplicialMap, SimplicialMap) {
        let n = self.n_vertices();
        let mut labels: Vec<String> = self.labels.iter().map(|l| format!("{l}#0")).collect();
        labels.extend(other.labels.iter().map(|l| format!("{l}#1")));
        let mut facets: Vec<Vec<usize>> = self.faces.clone();
        facets.extend(other.faces.iter().map(|f| f.iter().map(|&v| v + n).collect::<Vec<_>>()));
        let both = SimplicialComplex::new(labels, facets).expect("union of valid complexes");
        let left = SimplicialMap::new(self.clone(), both.clone(), (0..n).collect()).unwrap();
        let right = SimplicialMap::new(other.clone(), both.clone(), (n..n + other.n_vertices()).collect()).unwrap();
        (both, left, right)
    }

    /// Barycentric subdivision.  Vertex `k` of the subdivision is face `k`
    /// of this complex; faces are the strict chains in the face poset.
    pub fn sd(&self) -> Subdivision {
        let labels: Vec<String> = (0..self.n_faces()).map(|f| self.face_label(f)).collect();
        let mut facets: Vec<Vec<usize>> = Vec::new();
        for &top in &self.facet_ids() {
            // Maximal chains below `top` correspond to orderings of its
            // vertices: the j-th chain member spans the first j+1 of them.
            let vs = self.faces[top].clone();
            let mut perm: Vec<usize> = (0..vs.len()).collect();
            loop {
                let mut chain = Vec::with_capacity(vs.len());
                let mut sofar: Vec<usize> = Vec::new();
                for &p in &perm {
                    sofar.push(vs[p]);
                    sofar.sort_unstable();
                    chain.push(self.face_id(&sofar).unwrap());
                }
                facets.push(chain);
                if !next_permutation(&mut perm) {
                    break;
                }
            }
        }
        let complex = SimplicialComplex::new(labels, facets).expect("subdivision of a valid complex");
        Subdivision { base: self.clone(), complex }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// A closed subcomplex re-issued as a standalone complex.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub complex: SimplicialComplex,
    pub vertex_to_ambient: Vec<usize>,
    pub face_to_ambient: Vec<usize>,
    pub inclusion: SimplicialMap,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SimplicialMap {
    pub src: SimplicialComplex,
    pub dst: SimplicialComplex,
    pub vertex_map: Vec<usize>,
}

impl SimplicialMap {
    pub fn new(src: SimplicialComplex, dst: SimplicialComplex, vertex_map: Vec<usize>) -> Result<Self> {
        if vertex_map.len() != src.n_vertices() {
            return Err(Error::Invalid("vertex map length mismatch".into()));
        }
        if vertex_map.iter().any(|&v| v >= dst.n_vertices()) {
            return Err(Error::Invalid("vertex map hits unknown vertex".into()));
        }
        let map = SimplicialMap { src, dst, vertex_map };
        for f in 0..map.src.n_faces() {
            if map.image_of(f).is_none() {
                return Err(Error::Invalid(format!(
                    "image of face {} is not a face",
                    map.src.face_label(f)
                )));
            }
        }
        Ok(map)
    }

    pub fn identity(c: &SimplicialComplex) -> Self {
        SimplicialMap {
            src: c.clone(),
            dst: c.clone(),
            vertex_map: (0..c.n_vertices()).collect(),
        }
    }

    fn image_of(&self, face: usize) -> Option<usize> {
        let mut img: Vec<usize> = self.src.faces[face].iter().map(|&v| self.vertex_map[v]).collect();
        img.sort_unstable();
        img.dedup();
        self.dst.face_id(&img)
    }

    pub fn map_face(&self, face: usize) -> usize {
        self.image_of(face).expect("checked at construction")
    }

    pub fn then(&self, g: &SimplicialMap) -> Result<SimplicialMap> {
        if self.dst != g.src {
            return Err(Error::Invalid("composition endpoints differ".into()));
        }
        SimplicialMap::new(
            self.src.clone(),
            g.dst.clone(),
            self.vertex_map.iter().map(|&v| g.vertex_map[v]).collect(),
        )
    }

    /// Face ids of the source whose image lands in `set`.
    pub fn preimage(&self, set: &FaceSet) -> FaceSet {
        (0..self.src.n_faces()).filter(|&f| set.contains(&self.map_face(f))).collect()
    }
}

/// Barycentric subdivision of `base`.  Faces of `complex` are strict chains
/// of `base` faces; a chain's vertex list is already sorted by dimension
/// because smaller faces get smaller ids.
#[derive(Clone, Debug)]
pub struct Subdivision {
    pub base: SimplicialComplex,
    pub complex: SimplicialComplex,
}

impl Subdivision {
    /// The chain of base face ids a subdivision face stands for, ascending.
    pub fn chain_of(&self, sd_face: usize) -> &[usize] {
        &self.complex.faces[sd_face]
    }

    /// Largest base face in the chain.
    pub fn top_of(&self, sd_face: usize) -> usize {
        *self.chain_of(sd_face).last().unwrap()
    }

    /// Subdivision faces whose chain stays inside the base face set.
    pub fn faces_inside(&self, set: &FaceSet) -> FaceSet {
        (0..self.complex.n_faces())
            .filter(|&f| self.chain_of(f).iter().all(|b| set.contains(b)))
            .collect()
    }

    /// Subdivision faces whose whole chain lies above `base_face`: the
    /// closed cell of the face in the subdivided coordinates.  These sets
    /// shrink as the base face grows, which is what restriction maps ride.
    pub fn upward_set(&self, base_face: usize) -> FaceSet {
        let sigma = &self.base.faces[base_face];
        (0..self.complex.n_faces())
            .filter(|&f| {
                let min = self.chain_of(f)[0];
                let vs = &self.base.faces[min];
                sigma.iter().all(|v| vs.binary_search(v).is_ok())
            })
            .collect()
    }
}

/// Subdivided version of a simplicial map: chains map to chains.
pub fn sd_map(f: &SimplicialMap, sd_src: &Subdivision, sd_dst: &Subdivision) -> Result<SimplicialMap> {
    if sd_src.base != f.src || sd_dst.base != f.dst {
        return Err(Error::Invalid("subdivisions do not match the map".into()));
    }
    let vm: Vec<usize> = (0..f.src.n_faces()).map(|face| f.map_face(face)).collect();
    SimplicialMap::new(sd_src.complex.clone(), sd_dst.complex.clone(), vm)
}

/// Fibre product of `f: X -> S` and `g: T -> S` as an ordered complex.
///
/// Vertices are the pairs (x, t) with matching images, ordered by
/// (image, source id) in each coordinate; faces are the strict chains in
/// the product order that project into faces on both sides.  Returns the
/// product with its two projections.
pub fn fibre_product(
    f: &SimplicialMap,
    g: &SimplicialMap,
) -> Result<(SimplicialComplex, SimplicialMap, SimplicialMap)> {
    if f.dst != g.dst {
        return Err(Error::Invalid("fibre product needs a shared target".into()));
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for x in 0..f.src.n_vertices() {
        for t in 0..g.src.n_vertices() {
            if f.vertex_map[x] == g.vertex_map[t] {
                pairs.push((x, t));
            }
        }
    }
    pairs.sort_unstable();
    let pair_id = |x: usize, t: usize| pairs.binary_search(&(x, t)).unwrap();
    let key_x = |x: usize| (f.vertex_map[x], x);
    let key_t = |t: usize| (g.vertex_map[t], t);
    let below = |a: (usize, usize), b: (usize, usize)| {
        key_x(a.0) <= key_x(b.0) && key_t(a.1) <= key_t(b.1) && a != b
    };

    let labels: Vec<String> = pairs
        .iter()
        .map(|&(x, t)| format!("{}|{}", f.src.labels[x], g.src.labels[t]))
        .collect();

    let mut facets: BTreeSet<Vec<usize>> = BTreeSet::new();
    for &fx in &f.src.facet_ids() {
        for &ft in &g.src.facet_ids() {
            let mut w: Vec<(usize, usize)> = Vec::new();
            for &x in &f.src.faces[fx] {
                for &t in &g.src.faces[ft] {
                    if f.vertex_map[x] == g.vertex_map[t] {
                        w.push((x, t));
                    }
                }
            }
            w.sort_unstable_by_key(|&(x, t)| (key_x(x), key_t(t)));
            // Depth-first over strict chains in the product order.
            let mut stack: Vec<Vec<usize>> = (0..w.len()).map(|i| vec![i]).collect();
            while let Some(chain) = stack.pop() {
                let last = w[*chain.last().unwrap()];
                let mut extended = false;
                for j in (chain.last().unwrap() + 1)..w.len() {
                    if below(last, w[j]) {
                        let mut longer = chain.clone();
                        longer.push(j);
                        stack.push(longer);
                        extended = true;
                    }
                }
                if !extended {
                    facets.insert(chain.iter().map(|&i| pair_id(w[i].0, w[i].1)).collect());
                }
            }
        }
    }
    let product = SimplicialComplex::new(labels, facets.into_iter().collect())?;
    let pi_x = SimplicialMap::new(product.clone(), f.src.clone(), pairs.iter().map(|p| p.0).collect())?;
    let pi_t = SimplicialMap::new(product.clone(), g.src.clone(), pairs.iter().map(|p| p.1).collect())?;
    Ok((product, pi_x, pi_t))
}

/// Increasing chain of closed face sets ending at the full complex.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Filtration {
    pub stages: Vec<FaceSet>,
}

impl Filtration {
    pub fn new(complex: &SimplicialComplex, stages: Vec<FaceSet>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::Invalid("filtration needs at least one stage".into()));
        }
        for (i, s) in stages.iter().enumerate() {
            if !complex.is_closed(s) {
                return Err(Error::Invalid(format!("filtration stage {i} is not closed")));
            }
            if i + 1 < stages.len() && !s.is_subset(&stages[i + 1]) {
                return Err(Error::Invalid(format!("filtration stage {i} not contained in the next")));
            }
        }
        if *stages.last().unwrap() != complex.full_set() {
            return Err(Error::Invalid("filtration must end at the full complex".into()));
        }
        Ok(Filtration { stages })
    }

    pub fn skeletal(complex: &SimplicialComplex) -> Self {
        let stages = (0..=complex.top_dim()).map(|a| complex.skeleton(a)).collect();
        Filtration::new(complex, stages).expect("skeleta filter any complex")
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Stage `a`, empty below the range and constant above it.
    pub fn stage(&self, a: isize) -> FaceSet {
        if a < 0 {
            FaceSet::new()
        } else if (a as usize) < self.stages.len() {
            self.stages[a as usize].clone()
        } else {
            self.stages.last().unwrap().clone()
        }
    }

    /// Stagewise containment, comparing past the shorter end.
    pub fn contained_in(&self, other: &Filtration) -> bool {
        let n = self.stages.len().max(other.stages.len());
        (0..n as isize).all(|a| self.stage(a).is_subset(&other.stage(a)))
    }
}

/// A bounded cochain complex of finitely presented modules.
#[derive(Clone, Debug)]
pub struct ModuleComplex {
    pub terms: Vec<FpModule>,
    pub maps: Vec<ModuleMap>,
}

/// Cohomology at one degree together with the maps that present it:
/// `emb` embeds the cocycles, `lift` carries the incoming differential
/// into them, `proj` quotients the cocycles onto the cohomology module.
#[derive(Clone, Debug)]
pub struct CohomologySlot {
    pub kernel: FpModule,
    pub emb: ModuleMap,
    pub lift: ModuleMap,
    pub module: FpModule,
    pub proj: ModuleMap,
}

impl ModuleComplex {
    pub fn new(terms: Vec<FpModule>, maps: Vec<ModuleMap>) -> Result<Self> {
        if terms.is_empty() || maps.len() + 1 != terms.len() {
            return Err(Error::Invalid("complex shape mismatch".into()));
        }
        for (k, m) in maps.iter().enumerate() {
            if m.src != terms[k] || m.dst != terms[k + 1] {
                return Err(Error::Invalid(format!("differential {k} endpoints mismatch")));
            }
        }
        for k in 0..maps.len().saturating_sub(1) {
            if !maps[k].then(&maps[k + 1]).is_zero_map() {
                return Err(Error::Invalid(format!("d^2 != 0 at degree {k}")));
            }
        }
        Ok(ModuleComplex { terms, maps })
    }

    pub fn ring(&self) -> Ring {
        self.terms[0].ring
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn d_out(&self, k: usize) -> ModuleMap {
        if k + 1 < self.terms.len() {
            self.maps[k].clone()
        } else {
            ModuleMap::zero_map(&self.terms[k], &FpModule::zero_module(self.ring()))
        }
    }

    pub fn d_in(&self, k: usize) -> ModuleMap {
        if k == 0 {
            ModuleMap::zero_map(&FpModule::zero_module(self.ring()), &self.terms[0])
        } else {
            self.maps[k - 1].clone()
        }
    }

    pub fn slot(&self, k: usize) -> CohomologySlot {
        let d_out = self.d_out(k);
        let d_in = self.d_in(k);
        let (kernel, emb) = d_out.kernel();
        let lift = d_out
            .kernel_lift(&kernel, &emb, &d_in)
            .expect("d^2 = 0 was checked at construction");
        let (module, proj) = lift.cokernel();
        CohomologySlot { kernel, emb, lift, module, proj }
    }

    pub fn cohomology(&self, k: usize) -> FpModule {
        if k >= self.terms.len() {
            return FpModule::zero_module(self.ring());
        }
        self.slot(k).module
    }

    pub fn all_cohomology(&self) -> Vec<FpModule> {
        (0..self.terms.len()).map(|k| self.cohomology(k)).collect()
    }
}

/// The map on cohomology induced by one leg `phi` of a chain map,
/// `src.terms[k_src] -> dst.terms[k_dst]`.  Fails honestly when `phi`
/// does not respect cocycles or coboundaries at these degrees.
pub fn induced_on_cohomology(
    src: &ModuleComplex,
    k_src: usize,
    dst: &ModuleComplex,
    k_dst: usize,
    phi: &ModuleMap,
) -> Result<(CohomologySlot, CohomologySlot, ModuleMap)> {
    let s = src.slot(k_src);
    let t = dst.slot(k_dst);
    let map = induced_between_slots(&s, &t, &dst.d_out(k_dst), phi)?;
    Ok((s, t, map))
}

/// Same computation with slots the caller already holds.
pub fn induced_between_slots(
    s: &CohomologySlot,
    t: &CohomologySlot,
    d_out_dst: &ModuleMap,
    phi: &ModuleMap,
) -> Result<ModuleMap> {
    let into_dst = s.emb.then(phi);
    let on_kernels = d_out_dst.kernel_lift(&t.kernel, &t.emb, &into_dst)?;
    let to_target = on_kernels.then(&t.proj);
    s.lift.cokernel_descend(&s.module, &to_target)
}

/// Basis-tracked relative cochain complex of a pair of closed face sets.
#[derive(Clone, Debug)]
pub struct CochainComplexData {
    /// Face ids contributing to each degree, ascending.
    pub bases: Vec<Vec<usize>>,
    pub complex: ModuleComplex,
}

/// Cochains on `dom` vanishing on `rel`, with the alternating-sign
/// coboundary.  Both sets must be closed and `rel` contained in `dom`.
pub fn relative_cochain_complex(
    ambient: &SimplicialComplex,
    dom: &FaceSet,
    rel: &FaceSet,
    ring: Ring,
) -> Result<CochainComplexData> {
    if !rel.is_subset(dom) {
        return Err(Error::Invalid("relative set not inside the domain".into()));
    }
    if !ambient.is_closed(dom) || !ambient.is_closed(rel) {
        return Err(Error::Invalid("cochains need closed face sets".into()));
    }
    let top = ambient.top_dim();
    let mut bases: Vec<Vec<usize>> = vec![Vec::new(); top + 1];
    for &f in dom {
        if !rel.contains(&f) {
            bases[ambient.dim_of(f)].push(f);
        }
    }
    let terms: Vec<FpModule> = bases.iter().map(|b| FpModule::free(b.len(), ring)).collect();
    let mut maps = Vec::with_capacity(top);
    for k in 0..top {
        let mut mat = Matrix::zero(bases[k + 1].len(), bases[k].len(), ring);
        for (row, &tau) in bases[k + 1].iter().enumerate() {
            for (sigma, sign) in ambient.boundary_with_signs(tau) {
                if let Ok(col) = bases[k].binary_search(&sigma) {
                    mat.set(row, col, Scalar::from_integer(sign.into()));
                }
            }
        }
        maps.push(ModuleMap::new(terms[k].clone(), terms[k + 1].clone(), mat)?);
    }
    let complex = ModuleComplex::new(terms, maps)?;
    Ok(CochainComplexData { bases, complex })
}

/// Matrix of the cochain pullback along `f` in degree `k`, from the `dst`
/// basis to the `src` basis.  A face with collapsing image contributes
/// zero; otherwise the entry is the sign of sorting the image vertices.
pub fn cochain_pullback_matrix(
    f: &SimplicialMap,
    dst_basis: &[usize],
    src_basis: &[usize],
    ring: Ring,
) -> Matrix {
    let mut mat = Matrix::zero(src_basis.len(), dst_basis.len(), ring);
    for (row, &alpha) in src_basis.iter().enumerate() {
        let img: Vec<usize> = f.src.faces[alpha].iter().map(|&v| f.vertex_map[v]).collect();
        let (sorted, sign) = sort_with_sign(&img);
        if sign == 0 {
            continue;
        }
        if let Some(id) = f.dst.face_id(&sorted) {
            if let Ok(col) = dst_basis.binary_search(&id) {
                let old = mat.at(row, col).clone();
                mat.set(row, col, old + Scalar::from_integer(sign.into()));
            }
        }
    }
    mat
}

/// Sorts a tuple, returning the permutation sign, or 0 on a repeat.
pub fn sort_with_sign(tuple: &[usize]) -> (Vec<usize>, i64) {
    let mut v = tuple.to_vec();
    let mut sign = 1i64;
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            match v[i].cmp(&v[j]) {
                std::cmp::Ordering::Greater => {
                    v.swap(i, j);
                    sign = -sign;
                }
                std::cmp::Ordering::Equal => return (v, 0),
                std::cmp::Ordering::Less => {}
            }
        }
    }
    (v, sign)
}

/// Euler characteristic from the face vector.
pub fn euler_characteristic(c: &SimplicialComplex) -> i64 {
    c.faces
        .iter()
        .map(|f| if (f.len() - 1) % 2 == 0 { 1i64 } else { -1i64 })
        .sum()
}

/// Zero complex in a single degree, a convenience for base cases.
pub fn zero_complex(ring: Ring) -> ModuleComplex {
    ModuleComplex::new(vec![FpModule::zero_module(ring)], Vec::new()).unwrap()
}

/// Checks that `phi_k` assemble to a chain map between the complexes.
pub fn is_chain_map(src: &ModuleComplex, dst: &ModuleComplex, legs: &[ModuleMap]) -> bool {
    if legs.len() != src.len() || src.len() != dst.len() {
        return false;
    }
    for k in 0..src.len() - 1 {
        let a = legs[k].then(&dst.maps[k]);
        let b = src.maps[k].then(&legs[k + 1]);
        if !a.equal_to(&b) {
            return false;
        }
    }
    true
}
