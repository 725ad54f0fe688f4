//! Diagrams of geometric pairs over a fixed base and the universal abelian
//! category they span.
//!
//! A fragment declares pairs as vertices and two kinds of edges: pullbacks
//! along maps of pairs over the base, and boundary maps of nested triples.
//! Every vertex must pass the base-change gate before it is admitted, so
//! realization equality inside the spanned category is a complete decision
//! procedure.  Edges are stored with the geometric data that produced them;
//! tensoring, base pullback, and coefficient change transport that data and
//! leave object presentations untouched.

use std::collections::BTreeMap;

use crate::category::AbelianCategory;
use crate::freyd::{AdelmanMorphism, AdelmanObject, Representation};
use crate::matrix::{int, Ring};
use crate::module::ModuleMap;
use crate::quiver::{
    unroll_loops, AdditiveMorphism, Path, PathCombination, Quiver, QuiverMorphism,
};
use crate::quotient::{QuotientMorphism, QuotientObject, UniversalCategory};
use crate::sheaf::{
    base_change_report, product_pair, pullback_pair, relative_sheaf, relative_sheaf_data,
    type1_restriction, type2_connecting, CellSheafCategory, CellSheafMorphism, CellularSheaf,
    SimplicialPair,
};
use crate::simplicial::{fibre_product, FaceSet, SimplicialComplex, SimplicialMap};
use crate::{Error, Result};

/// A declared pair together with its display name.  Admission to a fragment
/// certifies the pair against the base-change gate.
#[derive(Clone, PartialEq, Debug)]
pub struct DeltaVertex {
    pub pair: SimplicialPair,
    pub name: String,
}

/// Geometric provenance of an edge, kept so fragments can be transported.
///
/// `Restriction` stores the map of totals running against the edge, in the
/// direction opposite to the realized morphism.  `Connecting` stores the
/// inner subcomplex of the triple in the coordinates of the top vertex's
/// total complex.  `ExcisedConnecting` is a connecting map whose low vertex
/// is identified with the middle subcomplex through an invertible
/// restriction; the extra map embeds the low total into the extracted
/// middle.
#[derive(Clone, Debug)]
pub enum EdgeData {
    Restriction { g: SimplicialMap },
    Connecting { z_ambient: FaceSet },
    ExcisedConnecting { z_ambient: FaceSet, excision: SimplicialMap },
}

impl EdgeData {
    /// Connecting edges shift degree and carry odd parity.
    pub fn is_connecting(&self) -> bool {
        !matches!(self, EdgeData::Restriction { .. })
    }
}

/// One quiver edge of a fragment; `from -> to` points in the direction of
/// the realized sheaf morphism.
#[derive(Clone, Debug)]
pub struct FragmentEdge {
    pub name: String,
    pub from: usize,
    pub to: usize,
    pub data: EdgeData,
}

/// A finite diagram of certified pairs with its spanned universal abelian
/// category.
pub struct DeltaFragment {
    pub base: SimplicialComplex,
    pub ring: Ring,
    pub vertices: Vec<DeltaVertex>,
    pub edge_info: Vec<FragmentEdge>,
    pub universal: UniversalCategory<CellSheafCategory>,
}

impl DeltaFragment {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Realized sheaf of a vertex.
    pub fn vertex_sheaf(&self, v: usize) -> &CellularSheaf {
        &self.universal.rep.objects[v]
    }

    /// Realized sheaf morphism of an edge.
    pub fn edge_sheaf_map(&self, e: usize) -> &CellSheafMorphism {
        &self.universal.rep.edges[e]
    }

    pub fn category(&self) -> &CellSheafCategory {
        &self.universal.rep.cat
    }
}

/// Probes used by the admission gate: one point inclusion per base vertex.
fn vertex_probes(base: &SimplicialComplex) -> Vec<SimplicialMap> {
    (0..base.n_vertices())
        .map(|v| {
            SimplicialMap::new(crate::fixtures::point(), base.clone(), vec![v])
                .expect("a single vertex always maps simplicially")
        })
        .collect()
}

/// Incremental fragment assembly.  Vertices realize to relative sheaves and
/// edges to the corresponding sheaf morphisms; every addition is validated
/// eagerly so errors name the offending declaration.
pub struct FragmentBuilder {
    base: SimplicialComplex,
    ring: Ring,
    vertices: Vec<DeltaVertex>,
    sheaves: Vec<CellularSheaf>,
    edges: Vec<FragmentEdge>,
    morphisms: Vec<CellSheafMorphism>,
}

impl FragmentBuilder {
    pub fn new(base: &SimplicialComplex, ring: Ring) -> Self {
        FragmentBuilder {
            base: base.clone(),
            ring,
            vertices: Vec::new(),
            sheaves: Vec::new(),
            edges: Vec::new(),
            morphisms: Vec::new(),
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn pair_of(&self, v: usize) -> &SimplicialPair {
        &self.vertices[v].pair
    }

    pub fn rename(&mut self, v: usize, name: String) {
        self.vertices[v].name = name;
    }

    fn check_base(&self, pair: &SimplicialPair) -> Result<()> {
        if *pair.base() != self.base {
            return Err(Error::NotOverBase("declared pair lives over a different base".into()));
        }
        Ok(())
    }

    /// Admit a pair after running the base-change gate at every base vertex.
    pub fn vertex(&mut self, pair: SimplicialPair) -> Result<usize> {
        self.check_base(&pair)?;
        for probe in vertex_probes(&self.base) {
            let report = base_change_report(&probe, &pair, self.ring)?;
            if !report.holds {
                return Err(Error::BaseChangeFailed(format!(
                    "vertex {} fails over base vertex {}{}",
                    self.vertices.len(),
                    probe.vertex_map[0],
                    report
                        .witness
                        .map(|w| format!(" at fibre face {w}"))
                        .unwrap_or_default(),
                )));
            }
        }
        self.vertex_trusted(pair)
    }

    /// Admit a pair produced by a gate-stable construction (pullback or
    /// product of certified pairs) without re-probing.
    pub fn vertex_trusted(&mut self, pair: SimplicialPair) -> Result<usize> {
        self.check_base(&pair)?;
        let sheaf = relative_sheaf(&pair, self.ring)?;
        let name = format!("h^{}[{}:{}]", pair.degree, pair.total.n_faces(), pair.sub.len());
        self.vertices.push(DeltaVertex { pair, name });
        self.sheaves.push(sheaf);
        Ok(self.vertices.len() - 1)
    }

    fn push_edge(
        &mut self,
        from: usize,
        to: usize,
        data: EdgeData,
        m: CellSheafMorphism,
    ) -> Result<usize> {
        if m.src != self.sheaves[from] || m.dst != self.sheaves[to] {
            return Err(Error::Invalid("edge realization endpoints disagree".into()));
        }
        let name = format!("e{}", self.edges.len());
        self.edges.push(FragmentEdge { name, from, to, data });
        self.morphisms.push(m);
        Ok(self.edges.len() - 1)
    }

    /// Pullback edge along `g: total(g_src) -> total(g_dst)`.  The stored
    /// edge runs `g_dst -> g_src`, the direction of the realized morphism.
    pub fn restriction(&mut self, g: SimplicialMap, g_src: usize, g_dst: usize) -> Result<usize> {
        if g_src >= self.vertices.len() || g_dst >= self.vertices.len() {
            return Err(Error::Invalid("restriction edge references a missing vertex".into()));
        }
        let m = type1_restriction(
            &g,
            &self.vertices[g_src].pair,
            &self.vertices[g_dst].pair,
            self.ring,
        )?;
        self.push_edge(g_dst, g_src, EdgeData::Restriction { g }, m)
    }

    /// Boundary edge `low -> top` of the triple whose middle subcomplex is
    /// the sub of the top pair.  The low pair must be the extracted middle
    /// with its inner subcomplex.
    pub fn connecting(&mut self, low: usize, top: usize) -> Result<usize> {
        if low >= self.vertices.len() || top >= self.vertices.len() {
            return Err(Error::Invalid("connecting edge references a missing vertex".into()));
        }
        let tp = &self.vertices[top].pair;
        let lp = &self.vertices[low].pair;
        if tp.degree != lp.degree + 1 {
            return Err(Error::ChainNotNested("connecting edge must raise the degree by one".into()));
        }
        let ext = tp.total.extract(&tp.sub)?;
        if lp.total != ext.complex {
            return Err(Error::ChainNotNested(
                "low total is not the middle subcomplex of the top pair".into(),
            ));
        }
        let z_ambient: FaceSet = lp.sub.iter().map(|&f| ext.face_to_ambient[f]).collect();
        self.connecting_raw(low, top, z_ambient)
    }

    fn connecting_raw(&mut self, low: usize, top: usize, z_ambient: FaceSet) -> Result<usize> {
        let tp = &self.vertices[top].pair;
        let lp = &self.vertices[low].pair;
        let t2 =
            type2_connecting(&tp.total, &tp.sub, &z_ambient, &tp.map, lp.degree, tp.model, self.ring)?;
        if t2.low_pair != *lp {
            return Err(Error::ChainNotNested(
                "declared low pair disagrees with the boundary triple".into(),
            ));
        }
        self.push_edge(low, top, EdgeData::Connecting { z_ambient }, t2.delta)
    }

    /// Admit both pairs of a nested triple and the boundary edge between
    /// them in one step.
    pub fn connecting_triple(
        &mut self,
        total: &SimplicialComplex,
        y: &FaceSet,
        z: &FaceSet,
        f: &SimplicialMap,
        i: usize,
    ) -> Result<(usize, usize, usize)> {
        let t2 = type2_connecting(total, y, z, f, i, crate::sheaf::StalkModel::Subdivided, self.ring)?;
        let low = self.vertex(t2.low_pair.clone())?;
        let top = self.vertex(t2.top_pair.clone())?;
        let e = self.push_edge(low, top, EdgeData::Connecting { z_ambient: z.clone() }, t2.delta)?;
        Ok((low, top, e))
    }

    /// Boundary edge whose low vertex is identified with the extracted
    /// middle subcomplex through the given inclusion of totals.
    pub fn excised_connecting(
        &mut self,
        low: usize,
        top: usize,
        z_ambient: FaceSet,
        excision: SimplicialMap,
    ) -> Result<usize> {
        if low >= self.vertices.len() || top >= self.vertices.len() {
            return Err(Error::Invalid("connecting edge references a missing vertex".into()));
        }
        let m = realize_excised(&self.vertices, low, top, &z_ambient, &excision, self.ring)?;
        self.push_edge(low, top, EdgeData::ExcisedConnecting { z_ambient, excision }, m)
    }

    fn assemble_quiver(&self) -> Result<Quiver> {
        let names: Vec<String> = (0..self.vertices.len()).map(|k| format!("v{k}")).collect();
        let edges: Vec<(String, usize, usize)> = self
            .edges
            .iter()
            .enumerate()
            .map(|(k, e)| (format!("e{k}"), e.from, e.to))
            .collect();
        Quiver::new(names, edges)
    }

    pub fn build(self) -> Result<DeltaFragment> {
        let quiver = self.assemble_quiver()?;
        if !quiver.is_acyclic() {
            return Err(Error::Cyclic(
                "fragment shape has a directed cycle; build an unrolled form instead".into(),
            ));
        }
        let cat = CellSheafCategory::new(self.base.clone(), self.ring);
        let rep = Representation::new(quiver, cat, self.sheaves, self.morphisms)?;
        Ok(DeltaFragment {
            base: self.base,
            ring: self.ring,
            vertices: self.vertices,
            edge_info: self.edges,
            universal: UniversalCategory::new(rep)?,
        })
    }

    /// Acyclic form of a cyclic shape: vertices on cycles are copied up to
    /// the given depth.  Returns the projection onto the declared shape.
    pub fn build_unrolled(self, depth: usize) -> Result<(DeltaFragment, QuiverMorphism)> {
        let quiver = self.assemble_quiver()?;
        let (uq, proj) = unroll_loops(&quiver, depth);
        let vertices: Vec<DeltaVertex> =
            proj.vertex_map.iter().map(|&v| self.vertices[v].clone()).collect();
        let sheaves: Vec<CellularSheaf> =
            proj.vertex_map.iter().map(|&v| self.sheaves[v].clone()).collect();
        let edge_info: Vec<FragmentEdge> = uq
            .edges
            .iter()
            .enumerate()
            .map(|(k, e)| FragmentEdge {
                name: format!("e{k}"),
                from: e.src,
                to: e.dst,
                data: self.edges[proj.edge_map[k]].data.clone(),
            })
            .collect();
        let morphisms: Vec<CellSheafMorphism> =
            proj.edge_map.iter().map(|&e| self.morphisms[e].clone()).collect();
        let cat = CellSheafCategory::new(self.base.clone(), self.ring);
        let rep = Representation::new(uq, cat, sheaves, morphisms)?;
        let fragment = DeltaFragment {
            base: self.base,
            ring: self.ring,
            vertices,
            edge_info,
            universal: UniversalCategory::new(rep)?,
        };
        Ok((fragment, proj))
    }
}

/// Connecting map composed with an inverse excision comparison.
fn realize_excised(
    vertices: &[DeltaVertex],
    low: usize,
    top: usize,
    z_ambient: &FaceSet,
    excision: &SimplicialMap,
    ring: Ring,
) -> Result<CellSheafMorphism> {
    let tp = &vertices[top].pair;
    let lp = &vertices[low].pair;
    if tp.degree != lp.degree + 1 {
        return Err(Error::ChainNotNested("connecting edge must raise the degree by one".into()));
    }
    let t2 = type2_connecting(&tp.total, &tp.sub, z_ambient, &tp.map, lp.degree, tp.model, ring)?;
    let exc = type1_restriction(excision, lp, &t2.low_pair, ring)?;
    let cat = CellSheafCategory::new(tp.base().clone(), ring);
    if !cat.is_iso(&exc) {
        return Err(Error::Invalid("excision comparison is not invertible".into()));
    }
    let exc_inv = cat.inverse(&exc)?;
    Ok(cat.compose(&exc_inv, &t2.delta))
}

/// An object of the universal category of a fragment.  The carrier is pure
/// diagram data, so it transports verbatim along shape-preserving fragment
/// constructions.
#[derive(Clone, PartialEq, Debug)]
pub struct Motive {
    pub object: QuotientObject,
    pub name: String,
}

pub fn canonical_motive(frag: &DeltaFragment, v: usize) -> Motive {
    Motive { object: QuotientObject::canonical(v), name: frag.vertices[v].name.clone() }
}

pub fn zero_motive() -> Motive {
    Motive { object: QuotientObject::zero(), name: "0".into() }
}

/// The declared vertex a motive is the canonical object of, if any.
pub fn as_canonical_vertex(frag: &DeltaFragment, m: &Motive) -> Option<usize> {
    (0..frag.n_vertices()).find(|&v| m.object == QuotientObject::canonical(v))
}

/// Realize a motive as a cellular sheaf over the base.
pub fn betti_realize(frag: &DeltaFragment, m: &Motive) -> CellularSheaf {
    frag.universal.realize_obj(&m.object)
}

pub fn betti_realize_map(frag: &DeltaFragment, f: &QuotientMorphism) -> CellSheafMorphism {
    frag.universal.realize_mor(f)
}

/// The morphism of canonical motives induced by a declared edge.
pub fn edge_morphism(frag: &DeltaFragment, e: usize) -> Result<QuotientMorphism> {
    let edge = frag
        .universal
        .rep
        .quiver
        .edges
        .get(e)
        .ok_or_else(|| Error::Invalid(format!("fragment has no edge {e}")))?;
    let src = AdelmanObject::canonical(edge.src);
    let dst = AdelmanObject::canonical(edge.dst);
    let middle = AdditiveMorphism::new(
        src.middle().clone(),
        dst.middle().clone(),
        vec![vec![PathCombination::single(
            int(1),
            Path { from: edge.src, to: edge.dst, edges: vec![e] },
        )]],
    )?;
    Ok(frag.universal.plain(AdelmanMorphism { src, dst, middle }))
}

/// Whether the local cohomology of a pair vanishes outside its own degree.
fn concentrated(p: &SimplicialPair, ring: Ring) -> Result<bool> {
    let data = relative_sheaf_data(p, ring)?;
    for s in &data.stalks {
        for k in 0..s.cx.complex.len() {
            if k == p.degree {
                continue;
            }
            if !s.cx.complex.cohomology(k).is_zero_module() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Index of a product complex by its coordinate pair.
fn pair_index(pl: &SimplicialMap, pr: &SimplicialMap) -> BTreeMap<(usize, usize), usize> {
    (0..pl.src.n_vertices()).map(|p| ((pl.vertex_map[p], pr.vertex_map[p]), p)).collect()
}

/// Map between product complexes acting coordinatewise.
fn paired_map(
    src_pl: &SimplicialMap,
    src_pr: &SimplicialMap,
    dst_index: &BTreeMap<(usize, usize), usize>,
    dst_total: &SimplicialComplex,
    fl: impl Fn(usize) -> usize,
    fr: impl Fn(usize) -> usize,
) -> Result<SimplicialMap> {
    let vm = (0..src_pl.src.n_vertices())
        .map(|p| {
            let key = (fl(src_pl.vertex_map[p]), fr(src_pr.vertex_map[p]));
            dst_index
                .get(&key)
                .copied()
                .ok_or_else(|| Error::Invalid("paired vertex is missing from the target product".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    SimplicialMap::new(src_pl.src.clone(), dst_total.clone(), vm)
}

fn ambient_inverse(v2a: &[usize]) -> BTreeMap<usize, usize> {
    v2a.iter().enumerate().map(|(k, &a)| (a, k)).collect()
}

/// A tensored fragment with its coordinate projections, indexed like the
/// right factor's vertices.
pub struct TensorAssembly {
    pub fragment: DeltaFragment,
    pub to_left: Vec<SimplicialMap>,
    pub to_right: Vec<SimplicialMap>,
}

/// Tensor a fragment on the left by a cellular vertex motive.  The left
/// factor must be a declared vertex whose local cohomology is concentrated
/// in its own degree; over the integers every product additionally checks
/// stalk flatness.
pub fn tensor_fragment(
    left_frag: &DeltaFragment,
    left: &Motive,
    right_frag: &DeltaFragment,
) -> Result<TensorAssembly> {
    let lv = as_canonical_vertex(left_frag, left).ok_or_else(|| {
        Error::NotCellular("left tensor factor must be the motive of a declared vertex".into())
    })?;
    if left_frag.base != right_frag.base || left_frag.ring != right_frag.ring {
        return Err(Error::NotOverBase("tensor factors live over different settings".into()));
    }
    let lp = &left_frag.vertices[lv].pair;
    if !concentrated(lp, left_frag.ring)? {
        return Err(Error::NotCellular(format!(
            "left factor cohomology is not concentrated in degree {}",
            lp.degree
        )));
    }
    let ring = right_frag.ring;
    let mut b = FragmentBuilder::new(&right_frag.base, ring);
    let mut to_left = Vec::new();
    let mut to_right = Vec::new();
    for v in &right_frag.vertices {
        let pp = product_pair(lp, &v.pair, ring)?;
        let k = b.vertex_trusted(pp.pair)?;
        b.rename(k, format!("{}*{}", left_frag.vertices[lv].name, v.name));
        to_left.push(pp.to_left);
        to_right.push(pp.to_right);
    }
    for e in &right_frag.edge_info {
        match &e.data {
            EdgeData::Restriction { g } => {
                // g runs total(e.to) -> total(e.from); the product acts on
                // the right coordinate only.
                let dst_index = pair_index(&to_left[e.from], &to_right[e.from]);
                let gp = paired_map(
                    &to_left[e.to],
                    &to_right[e.to],
                    &dst_index,
                    &b.pair_of(e.from).total.clone(),
                    |z| z,
                    |x| g.vertex_map[x],
                )?;
                b.restriction(gp, e.to, e.from)?;
            }
            EdgeData::Connecting { z_ambient } | EdgeData::ExcisedConnecting { z_ambient, .. } => {
                let low = e.from;
                let top = e.to;
                let mut z_new = to_left[top].preimage(&lp.sub);
                z_new.extend(to_right[top].preimage(z_ambient));

                let right_top = &right_frag.vertices[top].pair;
                let ext_r = right_top.total.extract(&right_top.sub)?;
                let ptop = b.pair_of(top).clone();
                let ext_p = ptop.total.extract(&ptop.sub)?;
                let pid = pair_index(&to_left[top], &to_right[top]);
                let einv = ambient_inverse(&ext_p.vertex_to_ambient);

                let low_total = b.pair_of(low).total.clone();
                let mut vm = Vec::with_capacity(low_total.n_vertices());
                for p in 0..low_total.n_vertices() {
                    let zv = to_left[low].vertex_map[p];
                    let rv = to_right[low].vertex_map[p];
                    let xv = match &e.data {
                        EdgeData::Connecting { .. } => ext_r.vertex_to_ambient[rv],
                        EdgeData::ExcisedConnecting { excision, .. } => {
                            ext_r.vertex_to_ambient[excision.vertex_map[rv]]
                        }
                        EdgeData::Restriction { .. } => unreachable!(),
                    };
                    let pv = *pid.get(&(zv, xv)).ok_or_else(|| {
                        Error::Invalid("paired vertex is missing from the target product".into())
                    })?;
                    vm.push(*einv.get(&pv).ok_or_else(|| {
                        Error::Invalid("product vertex falls outside the extracted middle".into())
                    })?);
                }
                let iota = SimplicialMap::new(low_total, ext_p.complex.clone(), vm)?;
                b.excised_connecting(low, top, z_new, iota)?;
            }
        }
    }
    let fragment = b.build()?;
    Ok(TensorAssembly { fragment, to_left, to_right })
}

/// Tensor a motive by a cellular vertex motive; the carrier transports
/// unchanged into the product fragment.
pub fn tensor(
    left_frag: &DeltaFragment,
    left: &Motive,
    right_frag: &DeltaFragment,
    right: &Motive,
) -> Result<(TensorAssembly, Motive)> {
    let asm = tensor_fragment(left_frag, left, right_frag)?;
    let m = Motive {
        object: right.object.clone(),
        name: format!("{}*{}", left.name, right.name),
    };
    Ok((asm, m))
}

/// A fragment pulled back along a map of bases, with the projections of
/// each vertex's total complex onto the original one.
pub struct InverseImageAssembly {
    pub fragment: DeltaFragment,
    pub to_total: Vec<SimplicialMap>,
}

/// Pull a fragment back along `g: T -> S`.  Every vertex is re-certified
/// over the new base; carriers of motives transport unchanged.
pub fn inverse_image(g: &SimplicialMap, frag: &DeltaFragment) -> Result<InverseImageAssembly> {
    if g.dst != frag.base {
        return Err(Error::NotOverBase("pullback map must land in the fragment base".into()));
    }
    let mut b = FragmentBuilder::new(&g.src, frag.ring);
    let mut to_total = Vec::new();
    for v in &frag.vertices {
        let pb = pullback_pair(g, &v.pair)?;
        let k = b.vertex(pb.pair)?;
        b.rename(k, v.name.clone());
        to_total.push(pb.to_total);
    }
    for e in &frag.edge_info {
        match &e.data {
            EdgeData::Restriction { g: ge } => {
                let dst_index = pair_index(&to_total[e.from], &b.pair_of(e.from).map);
                let gp = paired_map(
                    &to_total[e.to],
                    &b.pair_of(e.to).map.clone(),
                    &dst_index,
                    &b.pair_of(e.from).total.clone(),
                    |x| ge.vertex_map[x],
                    |t| t,
                )?;
                b.restriction(gp, e.to, e.from)?;
            }
            EdgeData::Connecting { .. } => {
                // The pulled low pair is again the extracted middle of the
                // pulled top pair, so the edge pulls back to a plain
                // boundary edge.
                b.connecting(e.from, e.to)?;
            }
            EdgeData::ExcisedConnecting { z_ambient, excision } => {
                let z_new = to_total[e.to].preimage(z_ambient);
                let orig_top = &frag.vertices[e.to].pair;
                let ext_r = orig_top.total.extract(&orig_top.sub)?;
                let ptop = b.pair_of(e.to).clone();
                let ext_p = ptop.total.extract(&ptop.sub)?;
                let pid = pair_index(&to_total[e.to], &ptop.map);
                let einv = ambient_inverse(&ext_p.vertex_to_ambient);
                let low_total = b.pair_of(e.from).total.clone();
                let low_map = b.pair_of(e.from).map.clone();
                let mut vm = Vec::with_capacity(low_total.n_vertices());
                for p in 0..low_total.n_vertices() {
                    let xl = to_total[e.from].vertex_map[p];
                    let t = low_map.vertex_map[p];
                    let amb = ext_r.vertex_to_ambient[excision.vertex_map[xl]];
                    let pv = *pid.get(&(amb, t)).ok_or_else(|| {
                        Error::Invalid("paired vertex is missing from the pulled product".into())
                    })?;
                    vm.push(*einv.get(&pv).ok_or_else(|| {
                        Error::Invalid("pulled vertex falls outside the extracted middle".into())
                    })?);
                }
                let iota = SimplicialMap::new(low_total, ext_p.complex.clone(), vm)?;
                b.excised_connecting(e.from, e.to, z_new, iota)?;
            }
        }
    }
    let fragment = b.build()?;
    Ok(InverseImageAssembly { fragment, to_total })
}

fn sheaf_to_rationals(f: &CellularSheaf) -> Result<CellularSheaf> {
    CellularSheaf::new(
        f.base.clone(),
        Ring::Rat,
        f.stalks.iter().map(|s| s.to_rationals()).collect(),
        f.restrictions.iter().map(|(&k, m)| (k, m.to_rationals())).collect(),
    )
}

fn morphism_to_rationals(m: &CellSheafMorphism) -> Result<CellSheafMorphism> {
    CellSheafMorphism::new(
        sheaf_to_rationals(&m.src)?,
        sheaf_to_rationals(&m.dst)?,
        m.components.iter().map(|c| c.to_rationals()).collect(),
    )
}

/// Extend scalars of an integral fragment to the rationals.  Stalks are
/// free resolutions localized termwise, so realizations extend exactly and
/// carriers transport unchanged.
pub fn change_coefficients(frag: &DeltaFragment) -> Result<DeltaFragment> {
    if frag.ring != Ring::Int {
        return Err(Error::Ring("coefficient change starts from integral coefficients".into()));
    }
    let sheaves = frag
        .universal
        .rep
        .objects
        .iter()
        .map(sheaf_to_rationals)
        .collect::<Result<Vec<_>>>()?;
    let morphisms = frag
        .universal
        .rep
        .edges
        .iter()
        .map(morphism_to_rationals)
        .collect::<Result<Vec<_>>>()?;
    let cat = CellSheafCategory::new(frag.base.clone(), Ring::Rat);
    let rep = Representation::new(frag.universal.rep.quiver.clone(), cat, sheaves, morphisms)?;
    Ok(DeltaFragment {
        base: frag.base.clone(),
        ring: Ring::Rat,
        vertices: frag.vertices.clone(),
        edge_info: frag.edge_info.clone(),
        universal: UniversalCategory::new(rep)?,
    })
}

/// The weight-one twisting pair: the product of the base with a pointed
/// circle, in degree one.
pub fn lefschetz_pair(base: &SimplicialComplex, model: crate::sheaf::StalkModel) -> Result<SimplicialPair> {
    let circ = crate::fixtures::circle();
    let (total, pi_s, pi_c) =
        fibre_product(&crate::fixtures::to_point(base), &crate::fixtures::to_point(&circ))?;
    let vface = circ.face_id(&[0]).expect("the circle has a vertex");
    let sub = pi_c.preimage(&FaceSet::from([vface]));
    Ok(SimplicialPair::new(total, sub, pi_s, 1)?.with_model(model))
}

/// A single-vertex fragment holding the twisting motive over the base.
pub fn lefschetz_fragment(base: &SimplicialComplex, ring: Ring) -> Result<(DeltaFragment, Motive)> {
    let pair = lefschetz_pair(base, crate::sheaf::StalkModel::Subdivided)?;
    let mut b = FragmentBuilder::new(base, ring);
    let v = b.vertex(pair)?;
    b.rename(v, "L".into());
    let frag = b.build()?;
    let m = canonical_motive(&frag, v);
    Ok((frag, m))
}

/// Tensor a motive with the twisting motive over its own base.
pub fn lefschetz(frag: &DeltaFragment, m: &Motive) -> Result<(TensorAssembly, Motive)> {
    let (lf, lm) = lefschetz_fragment(&frag.base, frag.ring)?;
    tensor(&lf, &lm, frag, m)
}

/// A motive with a twist weight; `(M, w)` is identified with the twisting
/// product `(L*M, w+1)`.
#[derive(Clone, PartialEq, Debug)]
pub struct LocalizedMotive {
    pub motive: Motive,
    pub weight: i64,
}

pub fn localize(m: &Motive) -> LocalizedMotive {
    LocalizedMotive { motive: m.clone(), weight: 0 }
}

pub fn twist(lm: &LocalizedMotive, w: i64) -> LocalizedMotive {
    LocalizedMotive { motive: lm.motive.clone(), weight: lm.weight + w }
}

/// A morphism of localized motives at a given weight.
#[derive(Clone, Debug)]
pub struct LocalizedMorphism {
    pub mor: QuotientMorphism,
    pub weight: i64,
}

pub fn twist_map(f: &LocalizedMorphism, w: i64) -> LocalizedMorphism {
    LocalizedMorphism { mor: f.mor.clone(), weight: f.weight + w }
}

/// Rebuild a fragment tensored by the twisting motive `k` times.
fn raised(frag: &DeltaFragment, k: u32) -> Result<Option<DeltaFragment>> {
    let mut cur: Option<DeltaFragment> = None;
    for _ in 0..k {
        let src = cur.as_ref().unwrap_or(frag);
        let (lf, lm) = lefschetz_fragment(&src.base, src.ring)?;
        cur = Some(tensor_fragment(&lf, &lm, src)?.fragment);
    }
    Ok(cur)
}

/// Whether two fragments carry the same declared shape and pairs.
fn comparable(a: &DeltaFragment, b: &DeltaFragment) -> bool {
    a.base == b.base
        && a.ring == b.ring
        && a.n_vertices() == b.n_vertices()
        && a.vertices.iter().zip(&b.vertices).all(|(x, y)| x.pair == y.pair)
        && a.edge_info.len() == b.edge_info.len()
        && a.edge_info
            .iter()
            .zip(&b.edge_info)
            .all(|(x, y)| x.from == y.from && x.to == y.to)
}

/// Decide equality of morphisms of localized motives by twisting both to
/// the larger weight and comparing in the stabilized fragment.
pub fn loc_hom_equal(
    frag_f: &DeltaFragment,
    f: &LocalizedMorphism,
    frag_g: &DeltaFragment,
    g: &LocalizedMorphism,
) -> Result<bool> {
    let w = f.weight.max(g.weight);
    let fr = raised(frag_f, (w - f.weight) as u32)?;
    let gr = raised(frag_g, (w - g.weight) as u32)?;
    let fa = fr.as_ref().unwrap_or(frag_f);
    let ga = gr.as_ref().unwrap_or(frag_g);
    if !comparable(fa, ga) {
        return Err(Error::Invalid(
            "localized morphisms do not stabilize to a common fragment".into(),
        ));
    }
    Ok(fa.universal.equal(&f.mor, &g.mor))
}

/// Equality of localized motives after stabilization, decided on carrier
/// presentations.
pub fn loc_motive_equal(
    frag_a: &DeltaFragment,
    a: &LocalizedMotive,
    frag_b: &DeltaFragment,
    b: &LocalizedMotive,
) -> Result<bool> {
    let w = a.weight.max(b.weight);
    let ar = raised(frag_a, (w - a.weight) as u32)?;
    let br = raised(frag_b, (w - b.weight) as u32)?;
    let aa = ar.as_ref().unwrap_or(frag_a);
    let bb = br.as_ref().unwrap_or(frag_b);
    if !comparable(aa, bb) {
        return Err(Error::Invalid(
            "localized motives do not stabilize to a common fragment".into(),
        ));
    }
    if a.motive.object == b.motive.object {
        return Ok(true);
    }
    Ok(aa.universal.is_zero_object(&a.motive.object)
        && bb.universal.is_zero_object(&b.motive.object))
}

/// The tensor relation battery, decided by realization equality.  Returns
/// one named verdict per relation.
pub fn tensor_relation_suite(ring: Ring) -> Result<Vec<(String, bool)>> {
    let pt = crate::fixtures::point();
    let interval = crate::fixtures::interval();
    let to_pt = crate::fixtures::to_point(&interval);
    let boundary: FaceSet = interval.skeleton(0);
    let cat = CellSheafCategory::new(pt.clone(), ring);
    let mut out = Vec::new();

    // Interval triple: a boundary edge from the two endpoints into the
    // relative interval class.
    let mut nb = FragmentBuilder::new(&pt, ring);
    let (_, n_top, _) = nb.connecting_triple(&interval, &boundary, &FaceSet::new(), &to_pt, 0)?;
    let n = nb.build()?;

    // Unit: tensoring with the point pair compares isomorphically and
    // naturally with the identity.
    let mut ub = FragmentBuilder::new(&pt, ring);
    let unit_v = ub.vertex(SimplicialPair::new(
        pt.clone(),
        FaceSet::new(),
        SimplicialMap::identity(&pt),
        0,
    )?)?;
    let uf = ub.build()?;
    let unit_m = canonical_motive(&uf, unit_v);
    let asm = tensor_fragment(&uf, &unit_m, &n)?;
    let mut unit_ok = true;
    let mut thetas = Vec::new();
    for k in 0..n.n_vertices() {
        let theta = type1_restriction(
            &asm.to_right[k],
            &asm.fragment.vertices[k].pair,
            &n.vertices[k].pair,
            ring,
        )?;
        unit_ok &= cat.is_iso(&theta);
        thetas.push(theta);
    }
    for (ei, e) in n.edge_info.iter().enumerate() {
        let lhs = cat.compose(n.edge_sheaf_map(ei), &thetas[e.to]);
        let rhs = cat.compose(&thetas[e.from], asm.fragment.edge_sheaf_map(ei));
        unit_ok &= cat.equal(&lhs, &rhs);
    }
    out.push(("unit comparison".into(), unit_ok));

    // Identity: the transported identity realizes to the identity.
    let top_m = Motive { object: QuotientObject::canonical(n_top), name: "top".into() };
    let (asm_id, tm) = tensor(&uf, &unit_m, &n, &top_m)?;
    let idr = betti_realize_map(&asm_id.fragment, &asm_id.fragment.universal.identity(&tm.object));
    let ident_ok = cat.equal(&idr, &cat.identity(&betti_realize(&asm_id.fragment, &tm)));
    out.push(("identity transport".into(), ident_ok));

    // Symmetry: the coordinate swap on the self-product is an involution
    // and acts by the sign of the degree product on the top class.
    let cell = SimplicialPair::new(interval.clone(), boundary.clone(), to_pt.clone(), 1)?;
    let pp = product_pair(&cell, &cell, ring)?;
    let swap_index = pair_index(&pp.to_right, &pp.to_left);
    let swap = paired_map(&pp.to_left, &pp.to_right, &swap_index, &pp.pair.total, |a| a, |b| b)?;
    let sigma = type1_restriction(&swap, &pp.pair, &pp.pair, ring)?;
    let square_sheaf = relative_sheaf(&pp.pair, ring)?;
    let mut sym_ok = cat.is_iso(&sigma)
        && cat.equal(&cat.compose(&sigma, &sigma), &cat.identity(&square_sheaf));
    let minus = ModuleMap::identity(&square_sheaf.stalks[0]).neg();
    sym_ok &= sigma.components[0].equal_to(&minus);
    out.push(("symmetry involution with sign".into(), sym_ok));

    // Associativity: both product orders agree through coordinatewise
    // reassociation, in both directions.
    let pab = product_pair(&cell, &cell, ring)?;
    let left = product_pair(&pab.pair, &cell, ring)?;
    let pbc = product_pair(&cell, &cell, ring)?;
    let right = product_pair(&cell, &pbc.pair, ring)?;
    let label_of = |c: &SimplicialComplex, v: usize| c.labels[v].clone();
    let right_labels: BTreeMap<String, usize> = (0..right.pair.total.n_vertices())
        .map(|v| (label_of(&right.pair.total, v), v))
        .collect();
    let beta_vm = (0..left.pair.total.n_vertices())
        .map(|v| {
            right_labels
                .get(&label_of(&left.pair.total, v))
                .copied()
                .ok_or_else(|| Error::Invalid("reassociated vertex label is missing".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let beta = SimplicialMap::new(left.pair.total.clone(), right.pair.total.clone(), beta_vm)?;
    let left_labels: BTreeMap<String, usize> = (0..left.pair.total.n_vertices())
        .map(|v| (label_of(&left.pair.total, v), v))
        .collect();
    let beta_inv_vm = (0..right.pair.total.n_vertices())
        .map(|v| {
            left_labels
                .get(&label_of(&right.pair.total, v))
                .copied()
                .ok_or_else(|| Error::Invalid("reassociated vertex label is missing".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let beta_inv =
        SimplicialMap::new(right.pair.total.clone(), left.pair.total.clone(), beta_inv_vm)?;
    let b1 = type1_restriction(&beta, &left.pair, &right.pair, ring)?;
    let b2 = type1_restriction(&beta_inv, &right.pair, &left.pair, ring)?;
    let left_sheaf = relative_sheaf(&left.pair, ring)?;
    let right_sheaf = relative_sheaf(&right.pair, ring)?;
    let assoc_ok = cat.is_iso(&b1)
        && cat.is_iso(&b2)
        && cat.equal(&cat.compose(&b1, &b2), &cat.identity(&right_sheaf))
        && cat.equal(&cat.compose(&b2, &b1), &cat.identity(&left_sheaf));
    out.push(("associativity comparison".into(), assoc_ok));

    // Interchange: the two boundary routes through the square of products
    // of interval triples anticommute.
    let ends = interval.extract(&boundary)?;
    let a_low = SimplicialPair::new(
        ends.complex.clone(),
        FaceSet::new(),
        ends.inclusion.then(&to_pt)?,
        0,
    )?;
    let a_top = cell.clone();
    let p00 = product_pair(&a_low, &a_low, ring)?;
    let p10 = product_pair(&a_top, &a_low, ring)?;
    let p01 = product_pair(&a_low, &a_top, ring)?;
    let p11 = product_pair(&a_top, &a_top, ring)?;
    let mut sb = FragmentBuilder::new(&pt, ring);
    let m00 = sb.vertex(p00.pair.clone())?;
    let m10 = sb.vertex(p10.pair.clone())?;
    let m01 = sb.vertex(p01.pair.clone())?;
    let m11 = sb.vertex(p11.pair.clone())?;
    // Routes out of the corner: the factors with empty inner subcomplex
    // give plain boundary edges.
    let e_b = sb.connecting(m00, m01)?;
    let e_a = sb.connecting(m00, m10)?;
    // Routes into the top: the other factor keeps its boundary, so the low
    // vertex embeds through an excision.
    let ext11 = p11.pair.total.extract(&p11.pair.sub)?;
    let einv11 = ambient_inverse(&ext11.vertex_to_ambient);
    let pid11 = pair_index(&p11.to_left, &p11.to_right);
    let iota_of = |pl: &SimplicialMap,
                   pr: &SimplicialMap,
                   la: &[usize],
                   ra: &[usize]|
     -> Result<SimplicialMap> {
        let vm = (0..pl.src.n_vertices())
            .map(|p| {
                let key = (la[pl.vertex_map[p]], ra[pr.vertex_map[p]]);
                let pv = pid11
                    .get(&key)
                    .copied()
                    .ok_or_else(|| Error::Invalid("square vertex is missing".into()))?;
                einv11
                    .get(&pv)
                    .copied()
                    .ok_or_else(|| Error::Invalid("square vertex is not in the boundary".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        SimplicialMap::new(pl.src.clone(), ext11.complex.clone(), vm)
    };
    let idv: Vec<usize> = (0..interval.n_vertices()).collect();
    let z_a = p11.to_left.preimage(&boundary);
    let iota_a = iota_of(&p10.to_left, &p10.to_right, &idv, &ends.vertex_to_ambient)?;
    let e_a_top = sb.excised_connecting(m10, m11, z_a, iota_a)?;
    let z_b = p11.to_right.preimage(&boundary);
    let iota_b = iota_of(&p01.to_left, &p01.to_right, &ends.vertex_to_ambient, &idv)?;
    let e_b_top = sb.excised_connecting(m01, m11, z_b, iota_b)?;
    let square = sb.build()?;
    let u = &square.universal;
    let route_b_first = u.compose(&edge_morphism(&square, e_b)?, &edge_morphism(&square, e_b_top)?);
    let route_a_first = u.compose(&edge_morphism(&square, e_a)?, &edge_morphism(&square, e_a_top)?);
    let inter_ok = !u.is_zero_mor(&route_b_first)
        && u.equal(&route_b_first, &u.neg(&route_a_first));
    out.push(("interchange with sign".into(), inter_ok));

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::module::invariant_list;
    use crate::sheaf::StalkModel;

    fn over_point(c: &SimplicialComplex, sub: FaceSet, degree: usize) -> SimplicialPair {
        SimplicialPair::new(c.clone(), sub, fixtures::to_point(c), degree).unwrap()
    }

    fn pointed_circle() -> SimplicialPair {
        let circ = fixtures::circle();
        let v = circ.face_id(&[0]).unwrap();
        over_point(&circ, FaceSet::from([v]), 1)
    }

    fn invariants_of(f: &CellularSheaf) -> Vec<String> {
        invariant_list(&f.stalks)
    }

    #[test]
    fn empty_fragment_has_only_zero_objects() {
        let frag = FragmentBuilder::new(&fixtures::point(), Ring::Int).build().unwrap();
        assert!(frag.universal.is_zero_object(&QuotientObject::zero()));
        assert_eq!(frag.n_vertices(), 0);
    }

    #[test]
    fn constant_motive_over_the_circle() {
        let circ = fixtures::circle();
        let mut b = FragmentBuilder::new(&circ, Ring::Int);
        let pair =
            SimplicialPair::new(circ.clone(), FaceSet::new(), SimplicialMap::identity(&circ), 0)
                .unwrap();
        let v = b.vertex(pair).unwrap();
        let frag = b.build().unwrap();
        let m = canonical_motive(&frag, v);
        let f = betti_realize(&frag, &m);
        assert_eq!(invariants_of(&f), vec!["R^1"; circ.n_faces()]);
        for r in f.restrictions.values() {
            assert!(r.is_iso());
        }
        assert!(frag.category().is_iso(&frag.universal.rep.canonical_comparison(v)));
    }

    #[test]
    fn admission_gate_rejects_the_star_model() {
        let s4 = fixtures::path(4);
        let star_c = s4.extract(&s4.closed_star(s4.face_id(&[1]).unwrap())).unwrap();
        let pair = SimplicialPair::new(
            star_c.complex.clone(),
            FaceSet::new(),
            star_c.inclusion.clone(),
            0,
        )
        .unwrap()
        .with_model(StalkModel::ClosedStar);
        let mut b = FragmentBuilder::new(&s4, Ring::Int);
        match b.vertex(pair) {
            Err(Error::BaseChangeFailed(_)) => {}
            other => panic!("expected the admission gate to fire, got {other:?}"),
        }
        // The subdivided model admits the same geometry.
        let good = SimplicialPair::new(
            star_c.complex.clone(),
            FaceSet::new(),
            star_c.inclusion.clone(),
            0,
        )
        .unwrap();
        assert!(b.vertex(good).is_ok());
    }

    #[test]
    fn connecting_edge_of_the_disk_triple_is_an_isomorphism() {
        let disk = fixtures::disk();
        let mut b = FragmentBuilder::new(&fixtures::point(), Ring::Int);
        let (_, _, e) = b
            .connecting_triple(&disk, &disk.skeleton(1), &FaceSet::new(), &fixtures::to_point(&disk), 1)
            .unwrap();
        let frag = b.build().unwrap();
        let delta = edge_morphism(&frag, e).unwrap();
        assert!(frag.universal.is_iso(&delta));
        let (k, _) = frag.universal.kernel(&delta);
        assert!(frag.universal.is_zero_object(&k));
    }

    #[test]
    fn pointed_circle_realizes_in_rank_one() {
        let mut b = FragmentBuilder::new(&fixtures::point(), Ring::Int);
        let v = b.vertex(pointed_circle()).unwrap();
        let frag = b.build().unwrap();
        let f = betti_realize(&frag, &canonical_motive(&frag, v));
        assert_eq!(invariants_of(&f), vec!["R^1"]);
    }

    #[test]
    fn inverse_image_along_the_identity_is_stable() {
        let circ = fixtures::circle();
        let mut b = FragmentBuilder::new(&circ, Ring::Int);
        let pair =
            SimplicialPair::new(circ.clone(), FaceSet::new(), SimplicialMap::identity(&circ), 0)
                .unwrap();
        let v = b.vertex(pair).unwrap();
        let frag = b.build().unwrap();
        let pulled = inverse_image(&SimplicialMap::identity(&circ), &frag).unwrap();
        let m = canonical_motive(&frag, v);
        assert_eq!(
            invariants_of(&betti_realize(&pulled.fragment, &m)),
            invariants_of(&betti_realize(&frag, &m)),
        );
    }

    #[test]
    fn inverse_image_at_a_base_vertex_is_the_fibre() {
        let (t2, pi1, _) = fixtures::torus();
        let circ = pi1.dst.clone();
        let mut b = FragmentBuilder::new(&circ, Ring::Int);
        let v = b
            .vertex(SimplicialPair::new(t2.clone(), FaceSet::new(), pi1.clone(), 1).unwrap())
            .unwrap();
        let frag = b.build().unwrap();
        let probe = SimplicialMap::new(fixtures::point(), circ.clone(), vec![0]).unwrap();
        let pulled = inverse_image(&probe, &frag).unwrap();
        let m = canonical_motive(&frag, v);
        let f = betti_realize(&pulled.fragment, &m);
        assert_eq!(invariants_of(&f), vec!["R^1"]);
        assert_eq!(pulled.fragment.vertices[0].pair.total.top_dim(), 1);
    }

    #[test]
    fn inverse_image_of_a_point_pair_is_constant() {
        let circ = fixtures::circle();
        let mut b = FragmentBuilder::new(&fixtures::point(), Ring::Int);
        let v = b.vertex(pointed_circle()).unwrap();
        let frag = b.build().unwrap();
        let pulled = inverse_image(&fixtures::to_point(&circ), &frag).unwrap();
        let f = betti_realize(&pulled.fragment, &canonical_motive(&frag, v));
        assert_eq!(invariants_of(&f), vec!["R^1"; circ.n_faces()]);
        for r in f.restrictions.values() {
            assert!(r.is_iso());
        }
    }

    #[test]
    fn coefficient_change_kills_torsion_classes() {
        let rp2 = fixtures::projective_plane();
        let mut b = FragmentBuilder::new(&fixtures::point(), Ring::Int);
        let v = b.vertex(over_point(&rp2, FaceSet::new(), 2)).unwrap();
        let frag = b.build().unwrap();
        let m = canonical_motive(&frag, v);
        assert_eq!(invariants_of(&betti_realize(&frag, &m)), vec!["R/2"]);
        let rational = change_coefficients(&frag).unwrap();
        assert!(rational.universal.is_zero_object(&m.object));
    }

    #[test]
    fn coefficient_change_commutes_with_kernels() {
        let circ = fixtures::circle();
        let cover = fixtures::double_cover();
        let mut b = FragmentBuilder::new(&fixtures::point(), Ring::Int);
        let small = b.vertex(over_point(&circ, FaceSet::new(), 1)).unwrap();
        let big = b
            .vertex(
                SimplicialPair::new(
                    cover.src.clone(),
                    FaceSet::new(),
                    fixtures::to_point(&cover.src),
                    1,
                )
                .unwrap(),
            )
            .unwrap();
        let e = b.restriction(cover.clone(), big, small).unwrap();
        let frag = b.build().unwrap();
        let phi = edge_morphism(&frag, e).unwrap();
        let (coker, _) = frag.universal.cokernel(&phi);
        assert_eq!(invariants_of(&betti_realize(&frag, &Motive { object: coker.clone(), name: String::new() })), vec!["R/2"]);
        let rational = change_coefficients(&frag).unwrap();
        // The transported cokernel dies rationally, matching the freshly
        // computed one.
        assert!(rational.universal.is_zero_object(&coker));
        let (coker_q, _) = rational.universal.cokernel(&phi);
        assert!(rational.universal.is_zero_object(&coker_q));
    }

    #[test]
    fn realization_is_exact_on_a_short_exact_sequence() {
        let circ = fixtures::circle();
        let cover = fixtures::double_cover();
        let mut b = FragmentBuilder::new(&fixtures::point(), Ring::Int);
        let small = b.vertex(over_point(&circ, FaceSet::new(), 1)).unwrap();
        let big = b
            .vertex(
                SimplicialPair::new(
                    cover.src.clone(),
                    FaceSet::new(),
                    fixtures::to_point(&cover.src),
                    1,
                )
                .unwrap(),
            )
            .unwrap();
        let e = b.restriction(cover.clone(), big, small).unwrap();
        let frag = b.build().unwrap();
        let phi = edge_morphism(&frag, e).unwrap();
        let (_, cproj) = frag.universal.cokernel(&phi);
        let rphi = betti_realize_map(&frag, &phi);
        let rproj = betti_realize_map(&frag, &cproj);
        // Stalkwise exactness of the realized sequence.
        assert!(rphi.components[0].exact_with(&rproj.components[0]));
        // The realized kernel matches the kernel of the realization.
        let (_, kemb) = frag.universal.kernel(&phi);
        let remb = betti_realize_map(&frag, &kemb);
        let cat = frag.category();
        let (_, kembc) = cat.kernel(&rphi);
        let cmp = cat.kernel_lift(&rphi, &kembc, &remb).unwrap();
        assert!(cat.is_iso(&cmp));
    }

    #[test]
    fn tensor_square_of_the_pointed_circle() {
        let mut lb = FragmentBuilder::new(&fixtures::point(), Ring::Rat);
        let lv = lb.vertex(pointed_circle()).unwrap();
        let lf = lb.build().unwrap();
        let lm = canonical_motive(&lf, lv);
        let mut rb = FragmentBuilder::new(&fixtures::point(), Ring::Rat);
        let rv = rb.vertex(pointed_circle()).unwrap();
        let rf = rb.build().unwrap();
        let rm = canonical_motive(&rf, rv);
        let (asm, m) = tensor(&lf, &lm, &rf, &rm).unwrap();
        assert_eq!(asm.fragment.vertices[0].pair.degree, 2);
        let f = betti_realize(&asm.fragment, &m);
        assert_eq!(invariants_of(&f), vec!["R^1"]);
    }

    #[test]
    fn tensor_rejects_spread_out_factors() {
        let circ = fixtures::circle();
        let mut lb = FragmentBuilder::new(&fixtures::point(), Ring::Rat);
        let lv = lb.vertex(over_point(&circ, FaceSet::new(), 0)).unwrap();
        let lf = lb.build().unwrap();
        let lm = canonical_motive(&lf, lv);
        let mut rb = FragmentBuilder::new(&fixtures::point(), Ring::Rat);
        let rv = rb.vertex(pointed_circle()).unwrap();
        let rf = rb.build().unwrap();
        match tensor(&lf, &lm, &rf, &canonical_motive(&rf, rv)) {
            Err(Error::NotCellular(_)) => {}
            Err(e) => panic!("expected a concentration failure, got {e:?}"),
            Ok(_) => panic!("expected a concentration failure, got a product"),
        }
    }

    #[test]
    fn tensor_requires_flat_stalks_over_the_integers() {
        let rp2 = fixtures::projective_plane();
        let v0 = rp2.face_id(&[0]).unwrap();
        let mut lb = FragmentBuilder::new(&fixtures::point(), Ring::Int);
        let lv = lb.vertex(over_point(&rp2, FaceSet::from([v0]), 2)).unwrap();
        let lf = lb.build().unwrap();
        let lm = canonical_motive(&lf, lv);
        let mut rb = FragmentBuilder::new(&fixtures::point(), Ring::Int);
        let rv = rb.vertex(pointed_circle()).unwrap();
        let rf = rb.build().unwrap();
        match tensor(&lf, &lm, &rf, &canonical_motive(&rf, rv)) {
            Err(Error::FlatnessRequired(_)) => {}
            Err(e) => panic!("expected a flatness failure, got {e:?}"),
            Ok(_) => panic!("expected a flatness failure, got a product"),
        }
    }

    #[test]
    fn tensor_relations_hold_rationally() {
        for (name, ok) in tensor_relation_suite(Ring::Rat).unwrap() {
            assert!(ok, "relation failed: {name}");
        }
    }

    #[test]
    fn twisting_preserves_realization_rank() {
        let mut b = FragmentBuilder::new(&fixtures::point(), Ring::Rat);
        let v = b.vertex(pointed_circle()).unwrap();
        let frag = b.build().unwrap();
        let m = canonical_motive(&frag, v);
        let before = betti_realize(&frag, &m).stalks[0].invariants().free_rank;
        let (asm, lm) = lefschetz(&frag, &m).unwrap();
        let after = betti_realize(&asm.fragment, &lm).stalks[0].invariants().free_rank;
        assert_eq!(before, after);
        assert_eq!(asm.fragment.vertices[0].pair.degree, 2);
    }

    #[test]
    fn twist_weights_add() {
        let m = zero_motive();
        let lm = localize(&m);
        assert_eq!(twist(&twist(&lm, 2), 3).weight, twist(&lm, 5).weight);
    }

    #[test]
    fn localized_morphism_equality_stabilizes() {
        let pt = fixtures::point();
        let interval = fixtures::interval();
        let mut b = FragmentBuilder::new(&pt, Ring::Rat);
        let (low, _, e) = b
            .connecting_triple(
                &interval,
                &interval.skeleton(0),
                &FaceSet::new(),
                &fixtures::to_point(&interval),
                0,
            )
            .unwrap();
        let frag = b.build().unwrap();
        let delta = edge_morphism(&frag, e).unwrap();
        let f = LocalizedMorphism { mor: delta.clone(), weight: 0 };
        assert!(loc_hom_equal(&frag, &f, &frag, &f).unwrap());

        let low_obj = QuotientObject::canonical(low);
        let idm = LocalizedMorphism { mor: frag.universal.identity(&low_obj), weight: 0 };
        let zm = LocalizedMorphism {
            mor: frag.universal.zero_mor(&low_obj, &low_obj),
            weight: 0,
        };
        assert!(!loc_hom_equal(&frag, &idm, &frag, &zm).unwrap());

        // A morphism agrees with its twisted transport.
        let (lfrag, lmot) = lefschetz_fragment(&pt, Ring::Rat).unwrap();
        let raised_frag = tensor_fragment(&lfrag, &lmot, &frag).unwrap().fragment;
        let g = LocalizedMorphism { mor: delta.clone(), weight: 1 };
        assert!(loc_hom_equal(&frag, &f, &raised_frag, &g).unwrap());
    }

    #[test]
    fn localized_motives_respect_the_twist_relation() {
        let pt = fixtures::point();
        let mut b = FragmentBuilder::new(&pt, Ring::Rat);
        let v = b.vertex(pointed_circle()).unwrap();
        let frag = b.build().unwrap();
        let m = canonical_motive(&frag, v);
        let (asm, lm) = lefschetz(&frag, &m).unwrap();
        let a = localize(&lm);
        let bm = twist(&localize(&m), -1);
        assert!(loc_motive_equal(&asm.fragment, &a, &frag, &bm).unwrap());
    }

    #[test]
    fn cyclic_shapes_build_through_unrolling() {
        let circ = fixtures::circle();
        let mut b = FragmentBuilder::new(&circ, Ring::Int);
        let pair =
            SimplicialPair::new(circ.clone(), FaceSet::new(), SimplicialMap::identity(&circ), 0)
                .unwrap();
        let v = b.vertex(pair).unwrap();
        b.restriction(SimplicialMap::identity(&circ), v, v).unwrap();
        let mut b2 = FragmentBuilder::new(&circ, Ring::Int);
        let pair2 =
            SimplicialPair::new(circ.clone(), FaceSet::new(), SimplicialMap::identity(&circ), 0)
                .unwrap();
        let v2 = b2.vertex(pair2).unwrap();
        b2.restriction(SimplicialMap::identity(&circ), v2, v2).unwrap();
        match b2.build() {
            Err(Error::Cyclic(_)) => {}
            Err(e) => panic!("expected a cycle rejection, got {e:?}"),
            Ok(_) => panic!("expected a cycle rejection, got a diagram"),
        }
        let (frag, proj) = b.build_unrolled(2).unwrap();
        assert!(frag.universal.rep.quiver.is_acyclic());
        assert_eq!(proj.vertex_map.len(), frag.n_vertices());
        let m = canonical_motive(&frag, 0);
        assert_eq!(invariants_of(&betti_realize(&frag, &m)), vec!["R^1"; circ.n_faces()]);
    }

    #[test]
    fn unit_stalk_of_a_tensor_is_unchanged() {
        // Tensoring with the unit over the point and checking the stored
        // invariants of the realized module.
        let mut lb = FragmentBuilder::new(&fixtures::point(), Ring::Int);
        let pt = fixtures::point();
        let lv = lb
            .vertex(
                SimplicialPair::new(pt.clone(), FaceSet::new(), SimplicialMap::identity(&pt), 0)
                    .unwrap(),
            )
            .unwrap();
        let lf = lb.build().unwrap();
        let lm = canonical_motive(&lf, lv);
        let mut rb = FragmentBuilder::new(&pt, Ring::Int);
        let rv = rb.vertex(pointed_circle()).unwrap();
        let rf = rb.build().unwrap();
        let (asm, m) = tensor(&lf, &lm, &rf, &canonical_motive(&rf, rv)).unwrap();
        let f = betti_realize(&asm.fragment, &m);
        assert_eq!(invariants_of(&f), vec!["R^1"]);
        assert_eq!(f.stalks[0].invariants().free_rank, 1);
    }
}
