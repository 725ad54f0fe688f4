//! Direct images of motives along maps of base complexes.
//!
//! A filtration of the source base cuts every certified pair into a chain
//! of relative pairs over the target; the hypercohomology of that chain is
//! the direct image.  Chains for different pairs, filtrations, or terms of
//! a complex live in one fragment, so comparison maps between them are
//! honest morphisms and every identity is decided by realization: all
//! differentials are certified to square to zero, comparison squares to
//! commute, and excision legs to invert.

use std::collections::{BTreeMap, BTreeSet};

use crate::category::AbelianCategory;
use crate::matrix::{int, Ring};
use crate::module::{FpModule, ModuleMap};
use crate::motive::{
    as_canonical_vertex, betti_realize_map, canonical_motive, edge_morphism, zero_motive,
    DeltaFragment, EdgeData, FragmentBuilder, LocalizedMotive, Motive,
};
use crate::quotient::{QuotientMorphism, QuotientObject, UniversalCategory};
use crate::sheaf::{adapted_check, pullback_pair, CellSheafCategory, SimplicialPair};
use crate::simplicial::{
    fibre_product, Extraction, FaceSet, Filtration, ModuleComplex, SimplicialComplex,
    SimplicialMap,
};
use crate::{Error, Result};

/// A bounded cochain complex of motives inside one fragment's category.
/// Differentials are certified to square to zero when the chain is built.
#[derive(Clone)]
pub struct MotiveChain {
    pub terms: Vec<Motive>,
    pub diffs: Vec<QuotientMorphism>,
}

impl MotiveChain {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

fn term_at(c: &MotiveChain, j: usize) -> QuotientObject {
    c.terms
        .get(j)
        .map(|m| m.object.clone())
        .unwrap_or_else(QuotientObject::zero)
}

fn diff_at(u: &UniversalCategory<CellSheafCategory>, c: &MotiveChain, j: usize) -> QuotientMorphism {
    c.diffs
        .get(j)
        .cloned()
        .unwrap_or_else(|| u.zero_mor(&term_at(c, j), &term_at(c, j + 1)))
}

fn prev_at(u: &UniversalCategory<CellSheafCategory>, c: &MotiveChain, j: usize) -> QuotientMorphism {
    if j == 0 {
        u.zero_mor(&QuotientObject::zero(), &term_at(c, 0))
    } else {
        diff_at(u, c, j - 1)
    }
}

/// Cohomology of a chain in one degree, kept with the presentation data
/// needed to lift maps through it.
pub struct CohomologyAt {
    pub object: QuotientObject,
    pub kernel: QuotientObject,
    pub emb: QuotientMorphism,
    pub lifted_prev: QuotientMorphism,
    pub proj: QuotientMorphism,
}

/// Cycles modulo boundaries at degree `j`, presented inside the fragment's
/// category.  The same inputs always produce the same presentation.
pub fn chain_cohomology_at(
    u: &UniversalCategory<CellSheafCategory>,
    c: &MotiveChain,
    j: usize,
) -> Result<CohomologyAt> {
    let next = diff_at(u, c, j);
    let prev = prev_at(u, c, j);
    let (kernel, emb) = u.kernel(&next);
    let lifted_prev = u.kernel_lift(&next, &kernel, &emb, &prev)?;
    let (object, proj) = u.cokernel(&lifted_prev);
    Ok(CohomologyAt { object, kernel, emb, lifted_prev, proj })
}

/// Map induced on degree-`j` cohomology by a termwise chain map `f`.
/// `f` only needs to commute with the differentials up to sign.
pub fn induced_on_homology(
    u: &UniversalCategory<CellSheafCategory>,
    src: &MotiveChain,
    scoh: &CohomologyAt,
    dst: &MotiveChain,
    dcoh: &CohomologyAt,
    f: &[QuotientMorphism],
    j: usize,
) -> Result<QuotientMorphism> {
    let fj = f
        .get(j)
        .cloned()
        .unwrap_or_else(|| u.zero_mor(&term_at(src, j), &term_at(dst, j)));
    let next_dst = diff_at(u, dst, j);
    let umap = u.compose(&scoh.emb, &fj);
    let lift = u.kernel_lift(&next_dst, &dcoh.kernel, &dcoh.emb, &umap)?;
    let w = u.compose(&lift, &dcoh.proj);
    u.cokernel_descend(&scoh.lifted_prev, &scoh.object, &scoh.proj, &w)
}

struct ConeData {
    chain: MotiveChain,
    parts: Vec<Vec<QuotientObject>>,
}

/// Shifted mapping cone of a termwise chain map `f: a -> b`; exact exactly
/// when `f` is a quasi-isomorphism.
fn cone_of(
    u: &UniversalCategory<CellSheafCategory>,
    a: &MotiveChain,
    b: &MotiveChain,
    f: &[QuotientMorphism],
) -> Result<ConeData> {
    let n = a.terms.len().max(b.terms.len() + 1);
    let mut parts = Vec::new();
    let mut terms = Vec::new();
    for t in 0..n {
        let pb = if t == 0 { QuotientObject::zero() } else { term_at(b, t - 1) };
        let pt = vec![term_at(a, t), pb];
        terms.push(Motive { object: u.sum_object(&pt), name: format!("cone{t}") });
        parts.push(pt);
    }
    let mut diffs = Vec::new();
    for t in 0..n.saturating_sub(1) {
        let ps = &parts[t];
        let pt = &parts[t + 1];
        let da = diff_at(u, a, t);
        let db = if t == 0 {
            u.zero_mor(&ps[1], &term_at(b, 0))
        } else {
            diff_at(u, b, t - 1)
        };
        let ft = f
            .get(t)
            .cloned()
            .unwrap_or_else(|| u.zero_mor(&term_at(a, t), &term_at(b, t)));
        let mut d = u.compose(&u.compose(&u.projection(ps, 0), &u.neg(&da)), &u.injection(pt, 0));
        d = u.add(&d, &u.compose(&u.compose(&u.projection(ps, 0), &ft), &u.injection(pt, 1)));
        d = u.add(&d, &u.compose(&u.compose(&u.projection(ps, 1), &db), &u.injection(pt, 1)));
        diffs.push(d);
    }
    for t in 0..diffs.len().saturating_sub(1) {
        if !u.is_zero_mor(&u.compose(&diffs[t], &diffs[t + 1])) {
            return Err(Error::Invalid("cone differential does not square to zero".into()));
        }
    }
    Ok(ConeData { chain: MotiveChain { terms, diffs }, parts })
}

fn chain_is_exact(u: &UniversalCategory<CellSheafCategory>, c: &MotiveChain) -> Result<bool> {
    for j in 0..c.terms.len() {
        if !u.is_zero_object(&chain_cohomology_at(u, c, j)?.object) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Realize a chain over a one-face base as a complex of modules.
pub fn point_chain_complex(frag: &DeltaFragment, chain: &MotiveChain) -> Result<ModuleComplex> {
    if frag.base.n_faces() != 1 {
        return Err(Error::Invalid("chain realization needs a one-face base".into()));
    }
    let terms: Vec<FpModule> = chain
        .terms
        .iter()
        .map(|m| crate::motive::betti_realize(frag, m).stalks[0].clone())
        .collect();
    let maps: Vec<ModuleMap> = chain
        .diffs
        .iter()
        .map(|d| betti_realize_map(frag, d).components[0].clone())
        .collect();
    ModuleComplex::new(terms, maps)
}

/// A fragment together with a filtration of its base and, per vertex, the
/// verdict of the stage-concentration check.  Vertices that fail are kept
/// but excluded from direct-image constructions.
pub struct AdaptedFragment {
    pub fragment: DeltaFragment,
    pub filtration: Filtration,
    pub adapted: Vec<bool>,
    pub excluded: Vec<usize>,
}

fn validate_filtration(base: &SimplicialComplex, filt: &Filtration) -> Result<()> {
    for (i, s) in filt.stages.iter().enumerate() {
        if s.iter().any(|&f| f >= base.n_faces()) || !base.is_closed(s) {
            return Err(Error::Invalid(format!("filtration stage {i} is not closed in the base")));
        }
    }
    if filt.stage(filt.len() as isize - 1) != base.full_set() {
        return Err(Error::Invalid("filtration does not exhaust the base".into()));
    }
    Ok(())
}

/// Check every vertex of a fragment against a filtration of its base.
pub fn adapted_fragment(fragment: DeltaFragment, filtration: Filtration) -> Result<AdaptedFragment> {
    validate_filtration(&fragment.base, &filtration)?;
    let mut adapted = Vec::new();
    let mut excluded = Vec::new();
    for (v, dv) in fragment.vertices.iter().enumerate() {
        let ok = adapted_check(&dv.pair, &filtration, fragment.ring)?;
        adapted.push(ok);
        if !ok {
            excluded.push(v);
        }
    }
    Ok(AdaptedFragment { fragment, filtration, adapted, excluded })
}

fn ambient_face_translate(ext: &Extraction, set: &FaceSet) -> Result<FaceSet> {
    let inv: BTreeMap<usize, usize> =
        ext.face_to_ambient.iter().enumerate().map(|(l, &a)| (a, l)).collect();
    set.iter()
        .map(|f| {
            inv.get(f)
                .copied()
                .ok_or_else(|| Error::Invalid("face lies outside the extracted stage".into()))
        })
        .collect()
}

fn ambient_vertex_map(
    src: &Extraction,
    dst: &Extraction,
    ambient: impl Fn(usize) -> usize,
) -> Result<Vec<usize>> {
    let inv: BTreeMap<usize, usize> =
        dst.vertex_to_ambient.iter().enumerate().map(|(l, &a)| (a, l)).collect();
    src.vertex_to_ambient
        .iter()
        .map(|&a| {
            inv.get(&ambient(a))
                .copied()
                .ok_or_else(|| Error::Invalid("vertex lies outside the target stage".into()))
        })
        .collect()
}

struct KChainIdx {
    term: Vec<usize>,
    aux: Vec<usize>,
    exc: Vec<Option<usize>>,
    delta: Vec<usize>,
    ext: Vec<Extraction>,
}

/// Admit the stage pairs of one filtered vertex, the boundary edges between
/// consecutive stages, and the excision legs identifying them with the
/// displayed relative terms.
fn push_k_chain(
    b: &mut FragmentBuilder,
    pair: &SimplicialPair,
    g: &SimplicialMap,
    filt: &Filtration,
    r: usize,
) -> Result<KChainIdx> {
    let fg = pair.map.then(g)?;
    let x = &pair.total;
    let y = &pair.sub;
    let mut idx =
        KChainIdx { term: Vec::new(), aux: Vec::new(), exc: Vec::new(), delta: Vec::new(), ext: Vec::new() };
    for a in 0..r {
        let x_sa = pair.map.preimage(&filt.stage(a as isize));
        let x_sam1 = pair.map.preimage(&filt.stage(a as isize - 1));
        let ext_t = x.extract(&x_sa)?;
        let term_sub_ambient: FaceSet = y
            .intersection(&x_sa)
            .copied()
            .chain(x_sam1.iter().copied())
            .collect();
        let term = SimplicialPair::new(
            ext_t.complex.clone(),
            ambient_face_translate(&ext_t, &term_sub_ambient)?,
            ext_t.inclusion.then(&fg)?,
            pair.degree + a,
        )?
        .with_model(pair.model);
        let t = b.vertex(term)?;
        if y.is_subset(&x_sa) {
            // The stage carries the whole declared subcomplex, so the
            // displayed term already is the boundary-triple pair.
            idx.aux.push(t);
            idx.exc.push(None);
        } else {
            let g_a: FaceSet = x_sa.union(y).copied().collect();
            let g_am1: FaceSet = x_sam1.union(y).copied().collect();
            let ext_a = x.extract(&g_a)?;
            let aux = SimplicialPair::new(
                ext_a.complex.clone(),
                ambient_face_translate(&ext_a, &g_am1)?,
                ext_a.inclusion.then(&fg)?,
                pair.degree + a,
            )?
            .with_model(pair.model);
            let av = b.vertex(aux)?;
            let vm = ambient_vertex_map(&ext_t, &ext_a, |w| w)?;
            let iota = SimplicialMap::new(ext_t.complex.clone(), ext_a.complex.clone(), vm)?;
            let e = b.restriction(iota, t, av)?;
            idx.aux.push(av);
            idx.exc.push(Some(e));
        }
        idx.term.push(t);
        idx.ext.push(ext_t);
    }
    for a in 0..r.saturating_sub(1) {
        idx.delta.push(b.connecting(idx.aux[a], idx.aux[a + 1])?);
    }
    Ok(idx)
}

/// Assemble the public differentials: conjugate each boundary edge by the
/// excision legs, then certify that the squares vanish.
fn chain_from_indices(frag: &DeltaFragment, idx: &KChainIdx) -> Result<MotiveChain> {
    let u = &frag.universal;
    let terms: Vec<Motive> = idx.term.iter().map(|&v| canonical_motive(frag, v)).collect();
    let mut diffs = Vec::new();
    for a in 0..idx.delta.len() {
        let delta = edge_morphism(frag, idx.delta[a])?;
        let pre = match idx.exc[a] {
            Some(e) => u.inverse(&edge_morphism(frag, e)?)?,
            None => u.identity(&QuotientObject::canonical(idx.term[a])),
        };
        let post = match idx.exc[a + 1] {
            Some(e) => edge_morphism(frag, e)?,
            None => u.identity(&QuotientObject::canonical(idx.term[a + 1])),
        };
        diffs.push(u.compose(&u.compose(&pre, &delta), &post));
    }
    for a in 0..diffs.len().saturating_sub(1) {
        if !u.is_zero_mor(&u.compose(&diffs[a], &diffs[a + 1])) {
            return Err(Error::Invalid("stage differential does not square to zero".into()));
        }
    }
    Ok(MotiveChain { terms, diffs })
}

fn build_k(
    pair: &SimplicialPair,
    ring: Ring,
    g: &SimplicialMap,
    filt: &Filtration,
) -> Result<(DeltaFragment, MotiveChain)> {
    let mut b = FragmentBuilder::new(&g.dst, ring);
    let idx = push_k_chain(&mut b, pair, g, filt, filt.len())?;
    let frag = b.build()?;
    let chain = chain_from_indices(&frag, &idx)?;
    Ok((frag, chain))
}

/// Stage chain of one vertex over a one-face target, kept with the degree
/// offset of the underlying pair.
pub struct FiltrationComplex {
    pub fragment: DeltaFragment,
    pub chain: MotiveChain,
    pub offset: usize,
}

/// Collapse a certified vertex to the point through the stored filtration.
pub fn k_complex(af: &AdaptedFragment, v: usize) -> Result<FiltrationComplex> {
    if !af.adapted[v] {
        return Err(Error::AdaptednessViolated(format!(
            "vertex {v} is not concentrated along the filtration stages"
        )));
    }
    let g = point_collapse(&af.fragment.base);
    let pair = &af.fragment.vertices[v].pair;
    let (fragment, chain) = build_k(pair, af.fragment.ring, &g, &af.filtration)?;
    Ok(FiltrationComplex { fragment, chain, offset: pair.degree })
}

fn point_collapse(c: &SimplicialComplex) -> SimplicialMap {
    let pt = SimplicialComplex::point("pt");
    SimplicialMap::new(c.clone(), pt, vec![0; c.n_vertices()]).expect("constant map to a point")
}

enum MapClass {
    Inclusion,
    Point,
    Proper,
}

fn classify(g: &SimplicialMap) -> Result<MapClass> {
    let mut seen = BTreeSet::new();
    if g.vertex_map.iter().all(|&v| seen.insert(v)) {
        return Ok(MapClass::Inclusion);
    }
    if g.dst.n_faces() == 1 {
        return Ok(MapClass::Point);
    }
    let hit: BTreeSet<usize> = (0..g.src.n_faces()).map(|f| g.map_face(f)).collect();
    if hit.len() == g.dst.n_faces() {
        return Ok(MapClass::Proper);
    }
    Err(Error::UnsupportedMap(
        "direct image needs an embedding, a one-face target, or a face-onto map".into(),
    ))
}

/// Faces graded by how much dimension they lose under `g`; each grade cut
/// is closed because removing a vertex drops the image dimension by at
/// most one.
fn relative_dim_filtration(g: &SimplicialMap) -> Result<Filtration> {
    let s = &g.src;
    let rel: Vec<usize> =
        (0..s.n_faces()).map(|f| s.dim_of(f) - g.dst.dim_of(g.map_face(f))).collect();
    let amax = rel.iter().copied().max().unwrap_or(0);
    let stages: Vec<FaceSet> = (0..=amax)
        .map(|a| (0..s.n_faces()).filter(|&f| rel[f] <= a).collect())
        .collect();
    Filtration::new(s, stages)
}

fn filtration_for(af: &AdaptedFragment, class: &MapClass, g: &SimplicialMap) -> Result<Filtration> {
    match class {
        MapClass::Inclusion => Filtration::new(&g.src, vec![g.src.full_set()]),
        MapClass::Point => Ok(af.filtration.clone()),
        MapClass::Proper => relative_dim_filtration(g),
    }
}

/// Certify stage concentration on every point fibre of `g`.
fn fibrewise_adapted(
    g: &SimplicialMap,
    pair: &SimplicialPair,
    filt: &Filtration,
    ring: Ring,
) -> Result<bool> {
    for q in 0..g.dst.n_vertices() {
        let probe = SimplicialMap::new(SimplicialComplex::point("q"), g.dst.clone(), vec![q])?;
        let (_, to_s, _) = fibre_product(g, &probe)?;
        let pb = pullback_pair(&to_s, pair)?;
        let stages: Vec<FaceSet> = filt.stages.iter().map(|s| to_s.preimage(s)).collect();
        let tf = Filtration::new(&to_s.src, stages)?;
        if !adapted_check(&pb.pair, &tf, ring)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn gate_vertex(
    af: &AdaptedFragment,
    v: usize,
    class: &MapClass,
    g: &SimplicialMap,
    filt: &Filtration,
) -> Result<()> {
    let ok = match class {
        // Fibres of an embedding are single points; nothing to certify.
        MapClass::Inclusion => true,
        MapClass::Point => af.adapted[v],
        MapClass::Proper => {
            fibrewise_adapted(g, &af.fragment.vertices[v].pair, filt, af.fragment.ring)?
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::AdaptednessViolated(format!(
            "vertex {v} is not concentrated on the fibres of the map"
        )))
    }
}

/// A direct-image motive together with the fragment over the target that
/// presents it.
pub struct Pushforward {
    pub fragment: DeltaFragment,
    pub motive: Motive,
}

/// Degree-`j` direct image of a declared vertex along `g`.
pub fn r_pushforward(
    af: &AdaptedFragment,
    m: &Motive,
    g: &SimplicialMap,
    j: usize,
) -> Result<Pushforward> {
    let frag = &af.fragment;
    if g.src != frag.base {
        return Err(Error::NotOverBase("map does not start at the fragment base".into()));
    }
    let v = as_canonical_vertex(frag, m)
        .ok_or_else(|| Error::Invalid("direct image needs the motive of a declared vertex".into()))?;
    let class = classify(g)?;
    if let MapClass::Inclusion = class {
        // An embedding re-bases the pair; higher images vanish.
        let mut b = FragmentBuilder::new(&g.dst, frag.ring);
        if j > 0 {
            return Ok(Pushforward { fragment: b.build()?, motive: zero_motive() });
        }
        let p = &frag.vertices[v].pair;
        let re = SimplicialPair::new(p.total.clone(), p.sub.clone(), p.map.then(g)?, p.degree)?
            .with_model(p.model);
        let nv = b.vertex(re)?;
        let fragment = b.build()?;
        let motive = Motive { name: format!("r0[{}]", m.name), ..canonical_motive(&fragment, nv) };
        return Ok(Pushforward { fragment, motive });
    }
    let filt = filtration_for(af, &class, g)?;
    gate_vertex(af, v, &class, g, &filt)?;
    let (fragment, chain) = build_k(&frag.vertices[v].pair, frag.ring, g, &filt)?;
    let coh = chain_cohomology_at(&fragment.universal, &chain, j)?;
    let motive = Motive { object: coh.object, name: format!("r{j}[{}]", m.name) };
    Ok(Pushforward { fragment, motive })
}

/// Direct image of a localized motive; the twist passes through untouched.
pub fn r_pushforward_localized(
    af: &AdaptedFragment,
    lm: &LocalizedMotive,
    g: &SimplicialMap,
    j: usize,
) -> Result<(Pushforward, LocalizedMotive)> {
    let pf = r_pushforward(af, &lm.motive, g, j)?;
    let loc = LocalizedMotive { motive: pf.motive.clone(), weight: lm.weight };
    Ok((pf, loc))
}

/// Two stage chains of one vertex and the comparison map between them,
/// with the certified verdict on whether the comparison is invertible in
/// cohomology.
pub struct Refinement {
    pub fragment: DeltaFragment,
    pub coarse: MotiveChain,
    pub fine: MotiveChain,
    pub comparison: Vec<QuotientMorphism>,
    pub quasi_iso: bool,
}

/// Build the stage chains of vertex `v` for a filtration and a stagewise
/// finer one, joined by the termwise inclusion comparison.
pub fn refine(
    frag: &DeltaFragment,
    v: usize,
    big: &Filtration,
    small: &Filtration,
) -> Result<Refinement> {
    if !small.contained_in(big) {
        return Err(Error::NotARefinement(
            "stages of the second filtration must sit inside the first".into(),
        ));
    }
    validate_filtration(&frag.base, big)?;
    validate_filtration(&frag.base, small)?;
    let pair = &frag.vertices[v].pair;
    for f in [big, small] {
        if !adapted_check(pair, f, frag.ring)? {
            return Err(Error::AdaptednessViolated(
                "vertex is not concentrated along both filtrations".into(),
            ));
        }
    }
    let g = point_collapse(&frag.base);
    let r = big.len().max(small.len());
    let mut b = FragmentBuilder::new(&g.dst, frag.ring);
    let big_idx = push_k_chain(&mut b, pair, &g, big, r)?;
    let small_idx = push_k_chain(&mut b, pair, &g, small, r)?;
    let mut cmp_edges = Vec::new();
    for t in 0..r {
        let vm = ambient_vertex_map(&small_idx.ext[t], &big_idx.ext[t], |w| w)?;
        let iota = SimplicialMap::new(
            small_idx.ext[t].complex.clone(),
            big_idx.ext[t].complex.clone(),
            vm,
        )?;
        cmp_edges.push(b.restriction(iota, small_idx.term[t], big_idx.term[t])?);
    }
    let fragment = b.build()?;
    let coarse = chain_from_indices(&fragment, &big_idx)?;
    let fine = chain_from_indices(&fragment, &small_idx)?;
    let comparison: Vec<QuotientMorphism> = cmp_edges
        .iter()
        .map(|&e| edge_morphism(&fragment, e))
        .collect::<Result<_>>()?;
    let u = &fragment.universal;
    for t in 0..r.saturating_sub(1) {
        let p1 = u.compose(&comparison[t], &fine.diffs[t]);
        let p2 = u.compose(&coarse.diffs[t], &comparison[t + 1]);
        if !u.equal(&p1, &p2) {
            return Err(Error::SquareDoesNotCommute(format!(
                "refinement comparison fails at stage {t}"
            )));
        }
    }
    let cone = cone_of(u, &coarse, &fine, &comparison)?;
    let quasi_iso = chain_is_exact(u, &cone.chain)?;
    Ok(Refinement { fragment, coarse, fine, comparison, quasi_iso })
}

/// Integer combination of declared edges between two vertices, realized in
/// the fragment's category.
pub fn combo_morphism(
    frag: &DeltaFragment,
    combo: &[(i64, usize)],
    src_v: usize,
    dst_v: usize,
) -> Result<QuotientMorphism> {
    let u = &frag.universal;
    let mut acc = u.zero_mor(&QuotientObject::canonical(src_v), &QuotientObject::canonical(dst_v));
    for &(c, e) in combo {
        let info = &frag.edge_info[e];
        if info.from != src_v || info.to != dst_v {
            return Err(Error::Invalid("combination edge endpoints disagree".into()));
        }
        acc = u.add(&acc, &u.scale(&int(c), &edge_morphism(frag, e)?));
    }
    Ok(acc)
}

/// Transport a combination of pullback edges to every filtration stage.
/// Returns, per stage, the edge combination in the new fragment.
fn push_stage_combo(
    b: &mut FragmentBuilder,
    src_frag: &DeltaFragment,
    combo: &[(i64, usize)],
    from_v: usize,
    to_v: usize,
    from_idx: &KChainIdx,
    to_idx: &KChainIdx,
    r: usize,
) -> Result<Vec<Vec<(i64, usize)>>> {
    let mut out = vec![Vec::new(); r];
    for &(c, e) in combo {
        let info = &src_frag.edge_info[e];
        if info.from != from_v || info.to != to_v {
            return Err(Error::Invalid("combination edge endpoints disagree".into()));
        }
        let EdgeData::Restriction { g } = &info.data else {
            return Err(Error::UnsupportedMap(
                "only pullback edges transport to filtration stages".into(),
            ));
        };
        for t in 0..r {
            let vm = ambient_vertex_map(&to_idx.ext[t], &from_idx.ext[t], |w| g.vertex_map[w])?;
            let gt = SimplicialMap::new(
                to_idx.ext[t].complex.clone(),
                from_idx.ext[t].complex.clone(),
                vm,
            )?;
            let ke = b.restriction(gt, to_idx.term[t], from_idx.term[t])?;
            out[t].push((c, ke));
        }
    }
    Ok(out)
}

fn realized_exact(
    frag: &DeltaFragment,
    alpha: &QuotientMorphism,
    beta: &QuotientMorphism,
) -> bool {
    let cat = frag.category();
    let ra = betti_realize_map(frag, alpha);
    let rb = betti_realize_map(frag, beta);
    let (ka, _) = cat.kernel(&ra);
    let (cb, _) = cat.cokernel(&rb);
    cat.is_zero_object(&ka)
        && cat.is_zero_object(&cb)
        && ra.components.iter().zip(&rb.components).all(|(x, y)| x.exact_with(y))
}

/// A short exact sequence of declared vertices: edge combinations
/// `alpha: first -> middle` and `beta: middle -> last` whose realization
/// is stalkwise exact.
pub struct VertexSes {
    pub first: usize,
    pub middle: usize,
    pub last: usize,
    pub alpha: Vec<(i64, usize)>,
    pub beta: Vec<(i64, usize)>,
}

/// The three stage chains of a short exact sequence over the target, with
/// the termwise maps between them.  Stagewise exactness and both chain-map
/// squares are certified.
pub struct SesPushforward {
    pub fragment: DeltaFragment,
    pub first: MotiveChain,
    pub middle: MotiveChain,
    pub last: MotiveChain,
    pub alpha: Vec<QuotientMorphism>,
    pub beta: Vec<QuotientMorphism>,
}

pub fn ses_k_complexes(
    af: &AdaptedFragment,
    ses: &VertexSes,
    g: &SimplicialMap,
) -> Result<SesPushforward> {
    let frag = &af.fragment;
    if g.src != frag.base {
        return Err(Error::NotOverBase("map does not start at the fragment base".into()));
    }
    let al = combo_morphism(frag, &ses.alpha, ses.first, ses.middle)?;
    let be = combo_morphism(frag, &ses.beta, ses.middle, ses.last)?;
    if !frag.universal.is_zero_mor(&frag.universal.compose(&al, &be))
        || !realized_exact(frag, &al, &be)
    {
        return Err(Error::Invalid("sequence is not exact at realization".into()));
    }
    let class = classify(g)?;
    let filt = filtration_for(af, &class, g)?;
    for v in [ses.first, ses.middle, ses.last] {
        gate_vertex(af, v, &class, g, &filt).map_err(|_| {
            Error::NoCommonAdaptedFiltration(format!(
                "vertex {v} is not concentrated along the shared filtration"
            ))
        })?;
    }
    let r = filt.len();
    let mut b = FragmentBuilder::new(&g.dst, frag.ring);
    let ia = push_k_chain(&mut b, &frag.vertices[ses.first].pair, g, &filt, r)?;
    let ib = push_k_chain(&mut b, &frag.vertices[ses.middle].pair, g, &filt, r)?;
    let ic = push_k_chain(&mut b, &frag.vertices[ses.last].pair, g, &filt, r)?;
    let sa = push_stage_combo(&mut b, frag, &ses.alpha, ses.first, ses.middle, &ia, &ib, r)?;
    let sb = push_stage_combo(&mut b, frag, &ses.beta, ses.middle, ses.last, &ib, &ic, r)?;
    let fragment = b.build()?;
    let first = chain_from_indices(&fragment, &ia)?;
    let middle = chain_from_indices(&fragment, &ib)?;
    let last = chain_from_indices(&fragment, &ic)?;
    let alpha: Vec<QuotientMorphism> = (0..r)
        .map(|t| combo_morphism(&fragment, &sa[t], ia.term[t], ib.term[t]))
        .collect::<Result<_>>()?;
    let beta: Vec<QuotientMorphism> = (0..r)
        .map(|t| combo_morphism(&fragment, &sb[t], ib.term[t], ic.term[t]))
        .collect::<Result<_>>()?;
    let u = &fragment.universal;
    for t in 0..r {
        if !u.is_zero_mor(&u.compose(&alpha[t], &beta[t]))
            || !realized_exact(&fragment, &alpha[t], &beta[t])
        {
            return Err(Error::Invalid(format!("stage {t} sequence is not exact")));
        }
    }
    for t in 0..r.saturating_sub(1) {
        let sq_a = (
            u.compose(&alpha[t], &middle.diffs[t]),
            u.compose(&first.diffs[t], &alpha[t + 1]),
        );
        let sq_b =
            (u.compose(&beta[t], &last.diffs[t]), u.compose(&middle.diffs[t], &beta[t + 1]));
        if !u.equal(&sq_a.0, &sq_a.1) || !u.equal(&sq_b.0, &sq_b.1) {
            return Err(Error::SquareDoesNotCommute(format!(
                "stage map fails to commute with the differential at stage {t}"
            )));
        }
    }
    Ok(SesPushforward { fragment, first, middle, last, alpha, beta })
}

/// Boundary map `H^j(last) -> H^{j+1}(first)` of a pushed short exact
/// sequence, computed through the cone of `alpha`.
pub fn connecting_delta(sp: &SesPushforward, j: usize) -> Result<QuotientMorphism> {
    let u = &sp.fragment.universal;
    let cone = cone_of(u, &sp.first, &sp.middle, &sp.alpha)?;
    // The last chain shifted up one degree; its cohomology at j + 1 has the
    // very same presentation as the unshifted chain at j.
    let mut sh_terms = vec![zero_motive()];
    sh_terms.extend(sp.last.terms.iter().cloned());
    let mut sh_diffs = vec![u.zero_mor(&QuotientObject::zero(), &term_at(&sp.last, 0))];
    sh_diffs.extend(sp.last.diffs.iter().cloned());
    let shifted = MotiveChain { terms: sh_terms, diffs: sh_diffs };
    let n = cone.chain.terms.len();
    let mut pi = Vec::new();
    let mut rho = Vec::new();
    for t in 0..n {
        let ps = &cone.parts[t];
        rho.push(u.projection(ps, 0));
        let down = if t == 0 {
            u.zero_mor(&ps[1], &term_at(&shifted, 0))
        } else {
            sp.beta[t - 1].clone()
        };
        pi.push(u.compose(&u.projection(ps, 1), &down));
    }
    let hcone = chain_cohomology_at(u, &cone.chain, j + 1)?;
    let hshift = chain_cohomology_at(u, &shifted, j + 1)?;
    if hshift.object != chain_cohomology_at(u, &sp.last, j)?.object {
        return Err(Error::Invalid("shifted chain changed the cohomology presentation".into()));
    }
    let hfirst = chain_cohomology_at(u, &sp.first, j + 1)?;
    let pi_ind = induced_on_homology(u, &cone.chain, &hcone, &shifted, &hshift, &pi, j + 1)?;
    let rho_ind = induced_on_homology(u, &cone.chain, &hcone, &sp.first, &hfirst, &rho, j + 1)?;
    Ok(u.compose(&u.inverse(&pi_ind)?, &rho_ind))
}

/// A bounded complex of declared vertices: differentials are edge
/// combinations whose realization squares to zero.
pub struct VertexComplex {
    pub terms: Vec<usize>,
    pub diffs: Vec<Vec<(i64, usize)>>,
}

/// Stage chains of every term arranged as rows, with the transported
/// differentials as columns; vertical maps carry the alternating sign.
pub struct DoubleComplex {
    pub fragment: DeltaFragment,
    pub rows: Vec<MotiveChain>,
    pub vert: Vec<Vec<QuotientMorphism>>,
}

/// A double complex together with its certified total complex.
pub struct DerivedPushforward {
    pub double: DoubleComplex,
    pub total: MotiveChain,
}

pub fn derived_pushforward(
    af: &AdaptedFragment,
    vc: &VertexComplex,
    g: &SimplicialMap,
) -> Result<DerivedPushforward> {
    let frag = &af.fragment;
    if g.src != frag.base {
        return Err(Error::NotOverBase("map does not start at the fragment base".into()));
    }
    if vc.terms.is_empty() {
        return Err(Error::Invalid("complex needs at least one term".into()));
    }
    if vc.diffs.len() + 1 != vc.terms.len() {
        return Err(Error::Invalid("differential count must be one less than the term count".into()));
    }
    let downstairs: Vec<QuotientMorphism> = (0..vc.diffs.len())
        .map(|n| combo_morphism(frag, &vc.diffs[n], vc.terms[n], vc.terms[n + 1]))
        .collect::<Result<_>>()?;
    for n in 0..downstairs.len().saturating_sub(1) {
        if !frag.universal.is_zero_mor(&frag.universal.compose(&downstairs[n], &downstairs[n + 1]))
        {
            return Err(Error::Invalid("differential does not square to zero".into()));
        }
    }
    let class = classify(g)?;
    let filt = filtration_for(af, &class, g)?;
    for &v in &vc.terms {
        gate_vertex(af, v, &class, g, &filt)?;
    }
    let r = filt.len();
    let nrows = vc.terms.len();
    let mut b = FragmentBuilder::new(&g.dst, frag.ring);
    let mut idxs = Vec::new();
    for &v in &vc.terms {
        idxs.push(push_k_chain(&mut b, &frag.vertices[v].pair, g, &filt, r)?);
    }
    let mut stage_combos = Vec::new();
    for n in 0..nrows - 1 {
        stage_combos.push(push_stage_combo(
            &mut b,
            frag,
            &vc.diffs[n],
            vc.terms[n],
            vc.terms[n + 1],
            &idxs[n],
            &idxs[n + 1],
            r,
        )?);
    }
    let fragment = b.build()?;
    let rows: Vec<MotiveChain> = idxs
        .iter()
        .map(|idx| chain_from_indices(&fragment, idx))
        .collect::<Result<_>>()?;
    let u = &fragment.universal;
    let mut vert: Vec<Vec<QuotientMorphism>> = Vec::new();
    for n in 0..nrows - 1 {
        let mut col = Vec::new();
        for t in 0..r {
            let m = combo_morphism(&fragment, &stage_combos[n][t], idxs[n].term[t], idxs[n + 1].term[t])?;
            col.push(if t % 2 == 1 { u.neg(&m) } else { m });
        }
        vert.push(col);
    }
    for n in 0..nrows.saturating_sub(2) {
        for t in 0..r {
            if !u.is_zero_mor(&u.compose(&vert[n][t], &vert[n + 1][t])) {
                return Err(Error::Invalid("vertical differential does not square to zero".into()));
            }
        }
    }
    for n in 0..nrows - 1 {
        for t in 0..r.saturating_sub(1) {
            let p1 = u.compose(&rows[n].diffs[t], &vert[n][t + 1]);
            let p2 = u.compose(&vert[n][t], &rows[n + 1].diffs[t]);
            if !u.equal(&p1, &u.neg(&p2)) {
                return Err(Error::SquareDoesNotCommute(format!(
                    "mixed square fails to anticommute at row {n}, stage {t}"
                )));
            }
        }
    }
    let tmax = (nrows - 1) + r.saturating_sub(1);
    let cells_at = |t: usize| -> Vec<(usize, usize)> {
        (0..nrows)
            .filter_map(|n| t.checked_sub(n).map(|a| (n, a)))
            .filter(|&(_, a)| a < r)
            .collect()
    };
    let objs_at = |t: usize| -> Vec<QuotientObject> {
        cells_at(t).iter().map(|&(n, a)| rows[n].terms[a].object.clone()).collect()
    };
    let mut total_terms = Vec::new();
    for t in 0..=tmax {
        total_terms.push(Motive { object: u.sum_object(&objs_at(t)), name: format!("tot{t}") });
    }
    let mut total_diffs = Vec::new();
    for t in 0..tmax {
        let cs = cells_at(t);
        let ct = cells_at(t + 1);
        let objs_s = objs_at(t);
        let objs_t = objs_at(t + 1);
        let mut d = u.zero_mor(&total_terms[t].object, &total_terms[t + 1].object);
        for (i, &(n, a)) in cs.iter().enumerate() {
            if a + 1 < r {
                let k = ct.iter().position(|&c| c == (n, a + 1)).expect("horizontal cell");
                let blk =
                    u.compose(&u.compose(&u.projection(&objs_s, i), &rows[n].diffs[a]), &u.injection(&objs_t, k));
                d = u.add(&d, &blk);
            }
            if n + 1 < nrows {
                let k = ct.iter().position(|&c| c == (n + 1, a)).expect("vertical cell");
                let blk =
                    u.compose(&u.compose(&u.projection(&objs_s, i), &vert[n][a]), &u.injection(&objs_t, k));
                d = u.add(&d, &blk);
            }
        }
        total_diffs.push(d);
    }
    for t in 0..total_diffs.len().saturating_sub(1) {
        if !u.is_zero_mor(&u.compose(&total_diffs[t], &total_diffs[t + 1])) {
            return Err(Error::Invalid("total differential does not square to zero".into()));
        }
    }
    let total = MotiveChain { terms: total_terms, diffs: total_diffs };
    Ok(DerivedPushforward { double: DoubleComplex { fragment, rows, vert }, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{circle_n, disk, interval, to_point};
    use crate::module::invariant_list;
    use crate::motive::{betti_realize, lefschetz, localize, twist};
    use crate::sheaf::{pushforward_oracle, sheaf_cohomology};
    use crate::simplicial::SimplicialComplex;

    fn unit_pair(c: &SimplicialComplex) -> SimplicialPair {
        SimplicialPair::new(c.clone(), FaceSet::new(), SimplicialMap::identity(c), 0).unwrap()
    }

    fn unit_fragment(c: &SimplicialComplex, ring: Ring) -> DeltaFragment {
        let mut b = FragmentBuilder::new(c, ring);
        b.vertex(unit_pair(c)).unwrap();
        b.build().unwrap()
    }

    fn ranks(frag: &DeltaFragment, m: &Motive) -> Vec<String> {
        invariant_list(&betti_realize(frag, m).stalks)
    }

    fn h_ranks(frag: &DeltaFragment, chain: &MotiveChain, j: usize) -> Vec<String> {
        let coh = chain_cohomology_at(&frag.universal, chain, j).unwrap();
        ranks(frag, &Motive { object: coh.object, name: format!("h{j}") })
    }

    #[test]
    fn adapted_fragments_filter_by_stage_concentration() {
        let c3 = circle_n(3);
        let frag = unit_fragment(&c3, Ring::Int);
        let af = adapted_fragment(frag, Filtration::skeletal(&c3)).unwrap();
        assert_eq!(af.adapted, vec![true]);
        assert!(af.excluded.is_empty());

        // A single-stage filtration sees both cohomology degrees at once.
        let frag = unit_fragment(&c3, Ring::Int);
        let flat = Filtration::new(&c3, vec![c3.full_set()]).unwrap();
        let af = adapted_fragment(frag, flat).unwrap();
        assert_eq!(af.adapted, vec![false]);
        assert_eq!(af.excluded, vec![0]);
        match k_complex(&af, 0) {
            Err(Error::AdaptednessViolated(_)) => {}
            Err(e) => panic!("expected the concentration gate, got {e:?}"),
            Ok(_) => panic!("expected the concentration gate, got a chain"),
        }

        let frag = unit_fragment(&c3, Ring::Int);
        let c6 = circle_n(6);
        match adapted_fragment(frag, Filtration::skeletal(&c6)) {
            Err(Error::Invalid(_)) => {}
            Err(e) => panic!("expected a base mismatch error, got {e:?}"),
            Ok(_) => panic!("expected a base mismatch error, got a fragment"),
        }
    }

    #[test]
    fn k_complex_of_the_circle_matches_global_cohomology() {
        let c3 = circle_n(3);
        let frag = unit_fragment(&c3, Ring::Int);
        let oracle = invariant_list(&sheaf_cohomology(frag.vertex_sheaf(0)).unwrap());
        let af = adapted_fragment(frag, Filtration::skeletal(&c3)).unwrap();
        let fc = k_complex(&af, 0).unwrap();
        assert_eq!(fc.offset, 0);
        let mc = point_chain_complex(&fc.fragment, &fc.chain).unwrap();
        assert_eq!(invariant_list(&mc.terms), vec!["R^3", "R^3"]);
        let direct = invariant_list(&mc.all_cohomology());
        assert_eq!(direct, oracle);
        let universal: Vec<String> = (0..2)
            .flat_map(|j| h_ranks(&fc.fragment, &fc.chain, j))
            .collect();
        assert_eq!(universal, oracle);
        assert_eq!(universal, vec!["R^1", "R^1"]);
    }

    #[test]
    fn k_complex_sees_local_systems_through_covers() {
        let c3 = circle_n(3);
        let c6 = circle_n(6);
        let cover = SimplicialMap::new(c6.clone(), c3.clone(), vec![0, 1, 2, 0, 1, 2]).unwrap();
        let pair = SimplicialPair::new(c6.clone(), FaceSet::new(), cover, 0).unwrap();
        let mut b = FragmentBuilder::new(&c3, Ring::Int);
        b.vertex(pair).unwrap();
        let frag = b.build().unwrap();
        let oracle = invariant_list(&sheaf_cohomology(frag.vertex_sheaf(0)).unwrap());
        let af = adapted_fragment(frag, Filtration::skeletal(&c3)).unwrap();
        let fc = k_complex(&af, 0).unwrap();
        let mc = point_chain_complex(&fc.fragment, &fc.chain).unwrap();
        assert_eq!(invariant_list(&mc.terms), vec!["R^6", "R^6"]);
        assert_eq!(invariant_list(&mc.all_cohomology()), oracle);
        for j in 0..2 {
            assert_eq!(h_ranks(&fc.fragment, &fc.chain, j), vec!["R^1"]);
        }
    }

    #[test]
    fn k_complex_of_a_relative_disk_concentrates_at_the_top() {
        let d = disk();
        let boundary = d.skeleton(1);
        let pair = SimplicialPair::new(d.clone(), boundary.clone(), SimplicialMap::identity(&d), 0)
            .unwrap();
        let mut b = FragmentBuilder::new(&d, Ring::Int);
        b.vertex(pair).unwrap();
        let frag = b.build().unwrap();
        let oracle = invariant_list(&sheaf_cohomology(frag.vertex_sheaf(0)).unwrap());
        assert_eq!(oracle, vec!["0", "0", "R^1"]);
        let af = adapted_fragment(frag, Filtration::skeletal(&d)).unwrap();
        assert!(af.excluded.is_empty());
        let fc = k_complex(&af, 0).unwrap();
        let mc = point_chain_complex(&fc.fragment, &fc.chain).unwrap();
        assert_eq!(invariant_list(&mc.all_cohomology()), oracle);
        let universal: Vec<String> = (0..3)
            .map(|j| {
                let coh = chain_cohomology_at(&fc.fragment.universal, &fc.chain, j).unwrap();
                if fc.fragment.universal.is_zero_object(&coh.object) {
                    "0".to_string()
                } else {
                    h_ranks(&fc.fragment, &fc.chain, j)[0].clone()
                }
            })
            .collect();
        assert_eq!(universal, oracle);
    }

    #[test]
    fn pushforward_to_the_point_gives_global_cohomology() {
        let c3 = circle_n(3);
        let frag = unit_fragment(&c3, Ring::Int);
        let m = canonical_motive(&frag, 0);
        let af = adapted_fragment(frag, Filtration::skeletal(&c3)).unwrap();
        let g = to_point(&c3);
        let r0 = r_pushforward(&af, &m, &g, 0).unwrap();
        assert_eq!(ranks(&r0.fragment, &r0.motive), vec!["R^1"]);
        let r1 = r_pushforward(&af, &m, &g, 1).unwrap();
        assert_eq!(ranks(&r1.fragment, &r1.motive), vec!["R^1"]);
        let r2 = r_pushforward(&af, &m, &g, 2).unwrap();
        assert!(r2.fragment.universal.is_zero_object(&r2.motive.object));
    }

    #[test]
    fn pushforward_along_inclusions_rebases() {
        let c3 = circle_n(3);
        let frag = unit_fragment(&c3, Ring::Int);
        let m = canonical_motive(&frag, 0);
        let before = invariant_list(&frag.vertex_sheaf(0).stalks);
        let af = adapted_fragment(frag, Filtration::skeletal(&c3)).unwrap();
        let idm = SimplicialMap::identity(&c3);
        let r0 = r_pushforward(&af, &m, &idm, 0).unwrap();
        assert_eq!(ranks(&r0.fragment, &r0.motive), before);
        let r1 = r_pushforward(&af, &m, &idm, 1).unwrap();
        assert!(r1.fragment.universal.is_zero_object(&r1.motive.object));

        // Embed the rim circle into the disk and compare stalkwise with the
        // fibrewise direct-image computation.
        let d = disk();
        let ext = d.extract(&d.skeleton(1)).unwrap();
        let rim = ext.complex.clone();
        let frag = unit_fragment(&rim, Ring::Int);
        let m = canonical_motive(&frag, 0);
        let oracle0 = pushforward_oracle(&ext.inclusion, frag.vertex_sheaf(0), 0).unwrap();
        let oracle1 = pushforward_oracle(&ext.inclusion, frag.vertex_sheaf(0), 1).unwrap();
        let af = adapted_fragment(frag, Filtration::skeletal(&rim)).unwrap();
        let r0 = r_pushforward(&af, &m, &ext.inclusion, 0).unwrap();
        assert_eq!(
            ranks(&r0.fragment, &r0.motive),
            invariant_list(&oracle0.stalks)
        );
        let r1 = r_pushforward(&af, &m, &ext.inclusion, 1).unwrap();
        assert!(r1.fragment.universal.is_zero_object(&r1.motive.object));
        assert!(oracle1.stalks.iter().all(|s| s.is_zero_module()));
    }

    #[test]
    fn unsupported_targets_are_rejected() {
        let c3 = circle_n(3);
        let frag = unit_fragment(&c3, Ring::Int);
        let m = canonical_motive(&frag, 0);
        let af = adapted_fragment(frag, Filtration::skeletal(&c3)).unwrap();
        let i = interval();
        let squash = SimplicialMap::new(c3.clone(), i.clone(), vec![0, 0, 0]).unwrap();
        match r_pushforward(&af, &m, &squash, 0) {
            Err(Error::UnsupportedMap(_)) => {}
            Err(e) => panic!("expected the map classification to fail, got {e:?}"),
            Ok(_) => panic!("expected the map classification to fail, got an image"),
        }
    }

    #[test]
    fn pushforward_along_the_product_projection() {
        let c3 = circle_n(3);
        let (t2, pi1, _) = fibre_product(&to_point(&c3), &to_point(&c3)).unwrap();
        let frag = unit_fragment(&t2, Ring::Int);
        let m = canonical_motive(&frag, 0);
        let oracle0 = pushforward_oracle(&pi1, frag.vertex_sheaf(0), 0).unwrap();
        let oracle1 = pushforward_oracle(&pi1, frag.vertex_sheaf(0), 1).unwrap();
        let af = adapted_fragment(frag, Filtration::skeletal(&t2)).unwrap();
        for j in 0..2 {
            let pf = r_pushforward(&af, &m, &pi1, j).unwrap();
            let sheaf = betti_realize(&pf.fragment, &pf.motive);
            assert_eq!(
                invariant_list(&sheaf.stalks),
                vec!["R^1"; c3.n_faces()],
                "degree {j} image should be an invertible-stalk system"
            );
            assert!(sheaf.restrictions.values().all(|r| r.is_iso()));
            let oracle = if j == 0 { &oracle0 } else { &oracle1 };
            assert_eq!(invariant_list(&sheaf.stalks), invariant_list(&oracle.stalks));
        }
    }

    #[test]
    fn refinement_comparison_is_a_quasi_isomorphism() {
        let c6 = circle_n(6);
        let frag = unit_fragment(&c6, Ring::Int);
        let skeletal = Filtration::skeletal(&c6);
        let sparse = Filtration::new(
            &c6,
            vec![[0usize, 2, 4].into_iter().collect(), c6.full_set()],
        )
        .unwrap();
        let rf = refine(&frag, 0, &skeletal, &sparse).unwrap();
        assert!(rf.quasi_iso);
        let coarse = point_chain_complex(&rf.fragment, &rf.coarse).unwrap();
        let fine = point_chain_complex(&rf.fragment, &rf.fine).unwrap();
        assert_eq!(invariant_list(&coarse.terms), vec!["R^6", "R^6"]);
        assert_eq!(invariant_list(&fine.terms), vec!["R^3", "R^3"]);
        for j in 0..2 {
            assert_eq!(h_ranks(&rf.fragment, &rf.coarse, j), vec!["R^1"]);
            assert_eq!(h_ranks(&rf.fragment, &rf.fine, j), vec!["R^1"]);
        }

        let rf_id = refine(&frag, 0, &skeletal, &skeletal).unwrap();
        assert!(rf_id.quasi_iso);
        for c in &rf_id.comparison {
            assert!(rf_id.fragment.universal.is_iso(c));
        }

        let one = Filtration::new(&c6, vec![[1usize].into_iter().collect(), c6.full_set()]).unwrap();
        let zero = Filtration::new(&c6, vec![[0usize].into_iter().collect(), c6.full_set()]).unwrap();
        match refine(&frag, 0, &one, &zero) {
            Err(Error::NotARefinement(_)) => {}
            Err(e) => panic!("expected the containment gate, got {e:?}"),
            Ok(_) => panic!("expected the containment gate, got a comparison"),
        }
    }

    #[test]
    fn refinements_compose_at_realization() {
        let c6 = circle_n(6);
        let frag = unit_fragment(&c6, Ring::Int);
        let a = Filtration::skeletal(&c6);
        let b = Filtration::new(
            &c6,
            vec![[0usize, 2, 4].into_iter().collect(), c6.full_set()],
        )
        .unwrap();
        let c = Filtration::new(&c6, vec![[0usize].into_iter().collect(), c6.full_set()]).unwrap();
        let rab = refine(&frag, 0, &a, &b).unwrap();
        let rbc = refine(&frag, 0, &b, &c).unwrap();
        let rac = refine(&frag, 0, &a, &c).unwrap();
        assert!(rab.quasi_iso && rbc.quasi_iso && rac.quasi_iso);
        for t in 0..2 {
            let mab = betti_realize_map(&rab.fragment, &rab.comparison[t]).components[0].clone();
            let mbc = betti_realize_map(&rbc.fragment, &rbc.comparison[t]).components[0].clone();
            let mac = betti_realize_map(&rac.fragment, &rac.comparison[t]).components[0].clone();
            assert!(mab.then(&mbc).equal_to(&mac));
        }
    }

    #[test]
    fn split_sequence_has_zero_connecting_map() {
        let c3 = circle_n(3);
        let (two, inc1, inc2) = c3.disjoint_union(&c3);
        let fold_vm: Vec<usize> = (0..two.n_vertices()).map(|v| v % c3.n_vertices()).collect();
        let fold = SimplicialMap::new(two.clone(), c3.clone(), fold_vm).unwrap();
        let mut b = FragmentBuilder::new(&c3, Ring::Int);
        let va = b.vertex(unit_pair(&c3)).unwrap();
        let vb = b
            .vertex(SimplicialPair::new(two.clone(), FaceSet::new(), fold.clone(), 0).unwrap())
            .unwrap();
        let vc = b.vertex(unit_pair(&c3)).unwrap();
        let ea = b.restriction(fold, vb, va).unwrap();
        let e1 = b.restriction(inc1, vc, vb).unwrap();
        let e2 = b.restriction(inc2, vc, vb).unwrap();
        let frag = b.build().unwrap();
        // A one-sided projection is not exact against the diagonal.
        let broken = VertexSes {
            first: va,
            middle: vb,
            last: vc,
            alpha: vec![(1, ea)],
            beta: vec![(1, e1)],
        };
        let af = adapted_fragment(frag, Filtration::skeletal(&c3)).unwrap();
        match ses_k_complexes(&af, &broken, &to_point(&c3)) {
            Err(Error::Invalid(_)) => {}
            Err(e) => panic!("expected the exactness gate, got {e:?}"),
            Ok(_) => panic!("expected the exactness gate, got chains"),
        }

        let ses = VertexSes {
            first: va,
            middle: vb,
            last: vc,
            alpha: vec![(1, ea)],
            beta: vec![(1, e1), (-1, e2)],
        };
        let sp = ses_k_complexes(&af, &ses, &to_point(&c3)).unwrap();
        let u = &sp.fragment.universal;
        let d0 = connecting_delta(&sp, 0).unwrap();
        assert!(u.is_zero_mor(&d0));
        assert_eq!(h_ranks(&sp.fragment, &sp.first, 1), vec!["R^1"]);
        assert_eq!(h_ranks(&sp.fragment, &sp.last, 0), vec!["R^1"]);
    }

    #[test]
    fn two_arc_cover_gives_an_exact_six_term_sequence() {
        let c6 = circle_n(6);
        let edge = |a: usize, b: usize| c6.face_id(&[a, b]).unwrap();
        let arc1: FaceSet = c6.closure(&[edge(0, 1), edge(1, 2), edge(2, 3)].into_iter().collect());
        let arc2: FaceSet = c6.closure(&[edge(3, 4), edge(4, 5), edge(0, 5)].into_iter().collect());
        let x1 = c6.extract(&arc1).unwrap();
        let x2 = c6.extract(&arc2).unwrap();
        let (xb, j1, j2) = x1.complex.disjoint_union(&x2.complex);
        let fold_vm: Vec<usize> = x1
            .vertex_to_ambient
            .iter()
            .chain(x2.vertex_to_ambient.iter())
            .copied()
            .collect();
        let fold = SimplicialMap::new(xb.clone(), c6.clone(), fold_vm).unwrap();
        let meet: FaceSet = c6.face_id(&[0]).into_iter().chain(c6.face_id(&[3])).collect();
        let xc_ext = c6.extract(&meet).unwrap();
        let xc = xc_ext.complex.clone();
        let into = |part: &crate::simplicial::Extraction, inc: &SimplicialMap| -> SimplicialMap {
            let inv: BTreeMap<usize, usize> = part
                .vertex_to_ambient
                .iter()
                .enumerate()
                .map(|(l, &a)| (a, l))
                .collect();
            let vm: Vec<usize> = xc_ext
                .vertex_to_ambient
                .iter()
                .map(|a| inc.vertex_map[inv[a]])
                .collect();
            SimplicialMap::new(xc.clone(), xb.clone(), vm).unwrap()
        };
        let mut b = FragmentBuilder::new(&c6, Ring::Int);
        let va = b.vertex(unit_pair(&c6)).unwrap();
        let vb = b
            .vertex(SimplicialPair::new(xb.clone(), FaceSet::new(), fold.clone(), 0).unwrap())
            .unwrap();
        let vc = b
            .vertex(
                SimplicialPair::new(xc.clone(), FaceSet::new(), xc_ext.inclusion.clone(), 0)
                    .unwrap(),
            )
            .unwrap();
        let ea = b.restriction(fold, vb, va).unwrap();
        let eb1 = b.restriction(into(&x1, &j1), vc, vb).unwrap();
        let eb2 = b.restriction(into(&x2, &j2), vc, vb).unwrap();
        let frag = b.build().unwrap();
        let af = adapted_fragment(frag, Filtration::skeletal(&c6)).unwrap();
        assert!(af.excluded.is_empty());
        let ses = VertexSes {
            first: va,
            middle: vb,
            last: vc,
            alpha: vec![(1, ea)],
            beta: vec![(1, eb1), (-1, eb2)],
        };
        let sp = ses_k_complexes(&af, &ses, &to_point(&c6)).unwrap();
        let u = &sp.fragment.universal;

        let h = |chain: &MotiveChain, j: usize| chain_cohomology_at(u, chain, j).unwrap();
        let ha0 = h(&sp.first, 0);
        let hb0 = h(&sp.middle, 0);
        let hc0 = h(&sp.last, 0);
        let ha1 = h(&sp.first, 1);
        let hb1 = h(&sp.middle, 1);
        let a0 = induced_on_homology(u, &sp.first, &ha0, &sp.middle, &hb0, &sp.alpha, 0).unwrap();
        let b0 = induced_on_homology(u, &sp.middle, &hb0, &sp.last, &hc0, &sp.beta, 0).unwrap();
        let d0 = connecting_delta(&sp, 0).unwrap();
        let a1 = induced_on_homology(u, &sp.first, &ha1, &sp.middle, &hb1, &sp.alpha, 1).unwrap();

        let pt_mor = |f: &QuotientMorphism| betti_realize_map(&sp.fragment, f).components[0].clone();
        let ra0 = pt_mor(&a0);
        let rb0 = pt_mor(&b0);
        let rd0 = pt_mor(&d0);
        let ra1 = pt_mor(&a1);
        assert_eq!(
            invariant_list(&[ra0.src.clone(), rb0.src.clone(), rd0.src.clone(), ra1.src.clone()]),
            vec!["R^1", "R^2", "R^2", "R^1"]
        );
        assert!(ra0.kernel().0.is_zero_module());
        assert!(ra0.exact_with(&rb0));
        assert!(rb0.exact_with(&rd0));
        assert!(rd0.exact_with(&ra1));
        assert!(!u.is_zero_mor(&d0));
        assert!(ra1.cokernel().0.is_zero_module());
        assert!(pt_mor(&induced_on_homology(u, &sp.middle, &hb1, &sp.last, &h(&sp.last, 1), &sp.beta, 1).unwrap())
            .src
            .is_zero_module());
    }

    #[test]
    fn derived_image_of_a_single_term_collapses() {
        let c3 = circle_n(3);
        let frag = unit_fragment(&c3, Ring::Int);
        let m = canonical_motive(&frag, 0);
        let af = adapted_fragment(frag, Filtration::skeletal(&c3)).unwrap();
        let g = to_point(&c3);
        let one = VertexComplex { terms: vec![0], diffs: vec![] };
        let dp = derived_pushforward(&af, &one, &g).unwrap();
        for j in 0..2 {
            let pf = r_pushforward(&af, &m, &g, j).unwrap();
            assert_eq!(
                h_ranks(&dp.double.fragment, &dp.total, j),
                ranks(&pf.fragment, &pf.motive)
            );
        }

        // A zero differential sums the rows degreewise.
        let mut b = FragmentBuilder::new(&c3, Ring::Int);
        b.vertex(unit_pair(&c3)).unwrap();
        b.vertex(unit_pair(&c3)).unwrap();
        let frag = b.build().unwrap();
        let af = adapted_fragment(frag, Filtration::skeletal(&c3)).unwrap();
        let two = VertexComplex { terms: vec![0, 1], diffs: vec![vec![]] };
        let dp = derived_pushforward(&af, &two, &g).unwrap();
        assert_eq!(h_ranks(&dp.double.fragment, &dp.total, 0), vec!["R^1"]);
        assert_eq!(h_ranks(&dp.double.fragment, &dp.total, 1), vec!["R^2"]);
        assert_eq!(h_ranks(&dp.double.fragment, &dp.total, 2), vec!["R^1"]);
    }

    #[test]
    fn derived_image_of_a_boundary_restriction_is_a_cone() {
        let d = disk();
        let ext = d.extract(&d.skeleton(1)).unwrap();
        let mut b = FragmentBuilder::new(&d, Ring::Int);
        let v0 = b.vertex(unit_pair(&d)).unwrap();
        let v1 = b
            .vertex(
                SimplicialPair::new(ext.complex.clone(), FaceSet::new(), ext.inclusion.clone(), 0)
                    .unwrap(),
            )
            .unwrap();
        let e = b.restriction(ext.inclusion.clone(), v1, v0).unwrap();
        let frag = b.build().unwrap();
        let af = adapted_fragment(frag, Filtration::skeletal(&d)).unwrap();
        assert!(af.excluded.is_empty());
        let vc = VertexComplex { terms: vec![v0, v1], diffs: vec![vec![(1, e)]] };
        let dp = derived_pushforward(&af, &vc, &to_point(&d)).unwrap();
        let u = &dp.double.fragment.universal;
        let expected = ["0", "0", "R^1", "0"];
        for j in 0..4 {
            let coh = chain_cohomology_at(u, &dp.total, j).unwrap();
            if expected[j] == "0" {
                assert!(u.is_zero_object(&coh.object), "degree {j} should vanish");
            } else {
                assert_eq!(h_ranks(&dp.double.fragment, &dp.total, j), vec![expected[j]]);
            }
        }
        let mc = point_chain_complex(&dp.double.fragment, &dp.total).unwrap();
        assert_eq!(invariant_list(&mc.all_cohomology()), vec!["0", "0", "R^1", "0"]);
    }

    #[test]
    fn localized_image_commutes_with_twisting() {
        let c3 = circle_n(3);
        let frag = unit_fragment(&c3, Ring::Rat);
        let m = canonical_motive(&frag, 0);
        let (asm, lm) = lefschetz(&frag, &m).unwrap();
        let af_l = adapted_fragment(asm.fragment, Filtration::skeletal(&c3)).unwrap();
        let g = to_point(&c3);
        let tw = twist(&localize(&lm), 1);
        let (pf_l, loc_l) = r_pushforward_localized(&af_l, &tw, &g, 1).unwrap();
        assert_eq!(loc_l.weight, 1);

        let af = adapted_fragment(unit_fragment(&c3, Ring::Rat), Filtration::skeletal(&c3)).unwrap();
        let (pf, loc) = r_pushforward_localized(&af, &localize(&m), &g, 0).unwrap();
        let loc_tw = twist(&loc, 1);
        assert_eq!(loc_l.weight, loc_tw.weight);
        assert_eq!(
            ranks(&pf_l.fragment, &pf_l.motive),
            ranks(&pf.fragment, &pf.motive)
        );
        assert_eq!(ranks(&pf_l.fragment, &pf_l.motive), vec!["R^1"]);
    }
}
