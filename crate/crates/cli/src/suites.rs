//! Verification suites runnable from the command line.  Each suite is a
//! list of named instances with a pass verdict and a short detail string;
//! built-in fixtures always run, and instances derived from a provided
//! scene are appended where the suite can use them.

use motives::category::{AbelianCategory, ModuleCategory};
use motives::fixtures;
use motives::freyd::{AdelmanMorphism, AdelmanObject, Representation};
use motives::matrix::{int, Matrix, Ring, Scalar};
use motives::module::{FpModule, ModuleMap};
use motives::motive::{
    as_canonical_vertex, betti_realize, betti_realize_map, canonical_motive, edge_morphism,
    tensor, tensor_relation_suite, FragmentBuilder,
};
use motives::pushforward::{adapted_fragment, point_chain_complex, r_pushforward, refine};
use motives::quiver::{AdditiveMorphism, Path, PathCombination, Quiver};
use motives::quotient::{QuotientMorphism, QuotientObject, UniversalCategory};
use motives::sheaf::{pushforward_oracle, relative_sheaf, SimplicialPair};
use motives::simplicial::{fibre_product, FaceSet, Filtration, SimplicialComplex, SimplicialMap};
use motives::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exec::{build_all, FragmentOutcome};
use crate::scene::Scene;
use crate::CliError;

pub const SUITES: [&str; 6] = [
    "abelian-axioms",
    "exactness",
    "kunneth",
    "pushforward-oracle",
    "refinement",
    "tensor-relations",
];

pub struct SuiteInstance {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

pub struct SuiteOutcome {
    pub suite: String,
    pub instances: Vec<SuiteInstance>,
}

impl SuiteOutcome {
    pub fn all_pass(&self) -> bool {
        self.instances.iter().all(|i| i.pass)
    }

    pub fn text(&self) -> String {
        let mut out = format!("suite {}\n", self.suite);
        for i in &self.instances {
            let mark = if i.pass { "pass" } else { "FAIL" };
            out.push_str(&format!("  {mark} {}: {}\n", i.name, i.detail));
        }
        let verdict = if self.all_pass() { "all pass" } else { "FAILED" };
        out.push_str(&format!(
            "suite {}: {verdict} ({} instances)\n",
            self.suite,
            self.instances.len()
        ));
        out
    }
}

pub fn run_suite(
    suite: &str,
    scene: Option<&Scene>,
    unroll_depth: usize,
) -> Result<SuiteOutcome, CliError> {
    let instances = match suite {
        "abelian-axioms" => abelian_axioms(),
        "exactness" => exactness(scene, unroll_depth),
        "kunneth" => kunneth(),
        "pushforward-oracle" => pushforward_oracle_suite(scene, unroll_depth),
        "refinement" => refinement_suite(),
        "tensor-relations" => tensor_relations(scene),
        other => {
            return Err(CliError::Engine(
                Error::UnknownSuite(format!(
                    "no suite named '{other}'; known: {}",
                    SUITES.join(", ")
                ))
                .to_string(),
            ))
        }
    };
    let instances = instances.map_err(|e| CliError::Engine(e.to_string()))?;
    Ok(SuiteOutcome { suite: suite.to_string(), instances })
}

fn instance(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> SuiteInstance {
    SuiteInstance { name: name.into(), pass, detail: detail.into() }
}

// ---------------------------------------------------------------- axioms

fn random_module(rng: &mut ChaCha8Rng, ring: Ring) -> FpModule {
    let gens = rng.gen_range(1..=4usize);
    let rels = rng.gen_range(0..=2usize);
    if rels == 0 {
        return FpModule::free(gens, ring);
    }
    let rows: Vec<Vec<Scalar>> = (0..rels)
        .map(|_| (0..gens).map(|_| int(rng.gen_range(-3..=3i64))).collect())
        .collect();
    FpModule::new(ring, Matrix::from_rows(ring, &rows))
}

/// A random well-defined map; falls back to zero when sampling misses,
/// which keeps every edge valid without biasing the checked axioms.
fn random_map(rng: &mut ChaCha8Rng, src: &FpModule, dst: &FpModule) -> ModuleMap {
    for _ in 0..40 {
        let rows: Vec<Vec<Scalar>> = (0..dst.generators())
            .map(|_| (0..src.generators()).map(|_| int(rng.gen_range(-3..=3i64))).collect())
            .collect();
        if let Ok(m) = ModuleMap::new(src.clone(), dst.clone(), Matrix::from_rows(src.ring, &rows))
        {
            return m;
        }
    }
    ModuleMap::zero_map(src, dst)
}

fn random_representation(
    rng: &mut ChaCha8Rng,
    ring: Ring,
) -> Result<Representation<ModuleCategory>, Error> {
    let n = rng.gen_range(1..=4usize);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if edges.len() < 5 && rng.gen_bool(0.6) {
                edges.push((format!("e{}", edges.len()), i, j));
            }
        }
    }
    let quiver = Quiver::new((0..n).map(|v| format!("v{v}")).collect(), edges.clone())?;
    let objects: Vec<FpModule> = (0..n).map(|_| random_module(rng, ring)).collect();
    let maps: Vec<ModuleMap> = edges
        .iter()
        .map(|&(_, i, j)| random_map(rng, &objects[i], &objects[j]))
        .collect();
    Representation::new(quiver, ModuleCategory::new(ring), objects, maps)
}

/// Generator morphism of the universal category attached to edge `e`.
fn generator(
    u: &UniversalCategory<ModuleCategory>,
    e: usize,
) -> Result<QuotientMorphism, Error> {
    let edge = &u.rep.quiver.edges[e];
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
    Ok(u.plain(AdelmanMorphism { src, dst, middle }))
}

fn axiom_checks(
    u: &UniversalCategory<ModuleCategory>,
    rep_objects: &[FpModule],
    rep_maps: &[ModuleMap],
) -> Result<(bool, String), Error> {
    let cat = ModuleCategory::new(rep_objects[0].ring);

    // The canonical functor agrees with the representation on objects...
    for (v, obj) in rep_objects.iter().enumerate() {
        let realized = u.realize_obj(&QuotientObject::canonical(v));
        if realized.invariants() != obj.invariants() {
            return Ok((false, format!("canonical object {v} realizes wrongly")));
        }
    }
    // ...and on the generating morphisms, up to the comparison isomorphism:
    // realizing the edge then comparing equals comparing then applying the
    // representation map.
    let mut generators = Vec::new();
    for e in 0..u.rep.quiver.edges.len() {
        generators.push(generator(u, e)?);
    }
    for (e, f) in generators.iter().enumerate() {
        let rf = u.realize_mor(f);
        let ta = u.rep.canonical_comparison(u.rep.quiver.edges[e].src);
        let tb = u.rep.canonical_comparison(u.rep.quiver.edges[e].dst);
        if !cat.equal(&rf.then(&tb), &ta.then(&rep_maps[e])) {
            return Ok((false, format!("generator {e} square does not commute")));
        }
    }

    // Composable pairs and sums widen the sample beyond the generators.
    let mut sample = generators.clone();
    for (i, f) in generators.iter().enumerate() {
        for (j, g) in generators.iter().enumerate() {
            if u.rep.quiver.edges[i].dst == u.rep.quiver.edges[j].src {
                sample.push(u.compose(f, g));
            }
            if i < j
                && u.rep.quiver.edges[i].src == u.rep.quiver.edges[j].src
                && u.rep.quiver.edges[i].dst == u.rep.quiver.edges[j].dst
            {
                sample.push(u.add(f, &u.neg(g)));
            }
        }
    }

    for (k, f) in sample.iter().enumerate() {
        let (kobj, emb) = u.kernel(f);
        let (cobj, proj) = u.cokernel(f);

        // Kernel and cokernel compose to zero.
        if !u.is_zero_mor(&u.compose(&emb, f)) {
            return Ok((false, format!("morphism {k}: emb;f is not zero")));
        }
        if !u.is_zero_mor(&u.compose(f, &proj)) {
            return Ok((false, format!("morphism {k}: f;proj is not zero")));
        }

        // Universal property: maps killed by f factor through the kernel,
        // dually for the cokernel.
        let lift = u.kernel_lift(f, &kobj, &emb, &emb)?;
        if !u.equal(&u.compose(&lift, &emb), &emb) {
            return Ok((false, format!("morphism {k}: kernel lift does not factor")));
        }
        let desc = u.cokernel_descend(f, &cobj, &proj, &proj)?;
        if !u.equal(&u.compose(&proj, &desc), &proj) {
            return Ok((false, format!("morphism {k}: cokernel descend does not factor")));
        }

        // Monomorphisms are kernels of their cokernels.
        let (_, cproj) = u.cokernel(&emb);
        let (k2, emb2) = u.kernel(&cproj);
        let comp = u.kernel_lift(&cproj, &k2, &emb2, &emb)?;
        if !u.is_iso(&comp) {
            return Ok((false, format!("morphism {k}: monic is not the kernel of its cokernel")));
        }

        // Epimorphisms are cokernels of their kernels.
        let (_, kemb) = u.kernel(&proj);
        let (c2, proj2) = u.cokernel(&kemb);
        let comp2 = u.cokernel_descend(&kemb, &c2, &proj2, &proj)?;
        if !u.is_iso(&comp2) {
            return Ok((false, format!("morphism {k}: epic is not the cokernel of its kernel")));
        }

        // The realization functor is exact and decides equality.
        let rf = u.realize_mor(f);
        let remb = u.realize_mor(&emb);
        let rproj = u.realize_mor(&proj);
        if !remb.exact_with(&rf) {
            return Ok((false, format!("morphism {k}: realized kernel is not exact")));
        }
        if !rf.exact_with(&rproj) {
            return Ok((false, format!("morphism {k}: realized cokernel is not exact")));
        }
        if u.is_zero_mor(f) != cat.is_zero_mor(&rf) {
            return Ok((false, format!("morphism {k}: equality disagrees with realization")));
        }
    }
    Ok((true, format!("{} morphisms checked", sample.len())))
}

fn abelian_axioms() -> Result<Vec<SuiteInstance>, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_CA7);
    let mut out = Vec::new();
    for ring in [Ring::Int, Ring::Rat] {
        for k in 0..16 {
            let rep = random_representation(&mut rng, ring)?;
            let objects = rep.objects.clone();
            let maps = rep.edges.clone();
            let nv = rep.quiver.vertices.len();
            let ne = rep.quiver.edges.len();
            let u = UniversalCategory::new(rep)?;
            let (pass, detail) = axiom_checks(&u, &objects, &maps)?;
            out.push(instance(
                format!("{ring}-rep-{k}"),
                pass,
                format!("{nv} vertices, {ne} edges: {detail}"),
            ));
        }
    }
    Ok(out)
}

// -------------------------------------------------------------- exactness

/// Fixture fragments whose edge realizations must be exact at every kernel
/// and cokernel, plus any fragments a scene provides.
fn exactness(scene: Option<&Scene>, unroll_depth: usize) -> Result<Vec<SuiteInstance>, Error> {
    let mut frags = Vec::new();

    let c3 = fixtures::circle();
    let vface = c3.face_id(&[0]).expect("circle vertex");
    let mut b = FragmentBuilder::new(&c3, Ring::Int);
    b.connecting_triple(
        &c3,
        &c3.closure(&[vface].into()),
        &FaceSet::new(),
        &SimplicialMap::identity(&c3),
        0,
    )?;
    frags.push(("pointed-circle-triple".to_string(), b.build()?));

    let d = fixtures::disk();
    let mut b = FragmentBuilder::new(&d, Ring::Int);
    b.connecting_triple(&d, &d.skeleton(1), &FaceSet::new(), &SimplicialMap::identity(&d), 0)?;
    frags.push(("disk-boundary-triple".to_string(), b.build()?));

    if let Some(scene) = scene {
        for (name, outcome) in build_all(scene, unroll_depth) {
            if let FragmentOutcome::Ok(bf) = outcome {
                frags.push((format!("scene-{name}"), bf.fragment));
            }
        }
    }

    let mut out = Vec::new();
    for (name, frag) in frags {
        let u = &frag.universal;
        let mut pass = true;
        let mut detail = String::new();
        let mut checked = 0usize;
        for e in 0..frag.edge_info.len() {
            let f = edge_morphism(&frag, e)?;
            let (_, emb) = u.kernel(&f);
            let (_, proj) = u.cokernel(&f);
            let rf = betti_realize_map(&frag, &f);
            let remb = betti_realize_map(&frag, &emb);
            let rproj = betti_realize_map(&frag, &proj);
            let stalkwise = remb
                .components
                .iter()
                .zip(&rf.components)
                .all(|(a, b)| a.exact_with(b))
                && rf
                    .components
                    .iter()
                    .zip(&rproj.components)
                    .all(|(a, b)| a.exact_with(b));
            if !stalkwise {
                pass = false;
                detail = format!("edge {e} realizes inexactly");
                break;
            }
            checked += 1;
        }
        if pass {
            detail = format!("{checked} edges exact");
        }
        out.push(instance(name, pass, detail));
    }
    Ok(out)
}

// ---------------------------------------------------------------- kunneth

/// Circle relative to a basepoint: cohomology concentrated in degree 1,
/// so the pair carries a well-defined weight-one motive.
fn circle_h1_motive(ring: Ring) -> Result<(motives::motive::DeltaFragment, motives::motive::Motive), Error> {
    let pt = fixtures::point();
    let c3 = fixtures::circle();
    let base_vertex = c3.closure(&[c3.face_id(&[0]).expect("circle vertex")].into_iter().collect());
    let mut b = FragmentBuilder::new(&pt, ring);
    let v = b.vertex(SimplicialPair::new(
        c3.clone(),
        base_vertex,
        fixtures::to_point(&c3),
        1,
    )?)?;
    let frag = b.build()?;
    let m = canonical_motive(&frag, v);
    Ok((frag, m))
}

fn kunneth() -> Result<Vec<SuiteInstance>, Error> {
    let ring = Ring::Rat;
    let c3 = fixtures::circle();
    let (t2, _, _) = fibre_product(&fixtures::to_point(&c3), &fixtures::to_point(&c3))?;
    let to_pt = fixtures::to_point(&t2);
    let mut out = Vec::new();

    let expected = [1usize, 2, 1];
    for (j, want) in expected.iter().enumerate() {
        let pair = SimplicialPair::new(t2.clone(), FaceSet::new(), to_pt.clone(), j)?;
        let sheaf = relative_sheaf(&pair, ring)?;
        let got = sheaf.stalks[0].invariants();
        let pass = got.free_rank == *want && got.torsion.is_empty();
        out.push(instance(
            format!("torus-h{j}"),
            pass,
            format!("rank {} (want {want})", got.free_rank),
        ));
    }

    // h^1 x h^1 lands in degree two with rank one.
    let (fa, ma) = circle_h1_motive(ring)?;
    let (fb, mb) = circle_h1_motive(ring)?;
    let (asm, m) = tensor(&fa, &ma, &fb, &mb)?;
    let v = as_canonical_vertex(&asm.fragment, &m)
        .ok_or_else(|| Error::Invalid("tensor motive lost its vertex".into()))?;
    let degree = asm.fragment.vertices[v].pair.degree;
    let inv = betti_realize(&asm.fragment, &m).stalks[0].invariants();
    out.push(instance(
        "h1-tensor-h1",
        degree == 2 && inv.free_rank == 1 && inv.torsion.is_empty(),
        format!("degree {degree}, rank {}", inv.free_rank),
    ));

    for (name, pass) in tensor_relation_suite(ring)? {
        out.push(instance(format!("relation-{name}"), pass, "realization equality"));
    }
    Ok(out)
}

// ---------------------------------------------------- pushforward oracle

/// Compare the stage-chain route against the cellular oracle stalk by
/// stalk.
fn oracle_instance(
    name: &str,
    pair: SimplicialPair,
    g: &SimplicialMap,
    filt: Filtration,
    degrees: std::ops::Range<usize>,
    ring: Ring,
) -> Result<SuiteInstance, Error> {
    let base = pair.base().clone();
    let mut b = FragmentBuilder::new(&base, ring);
    let v = b.vertex(pair)?;
    let frag = b.build()?;
    let m = canonical_motive(&frag, v);
    let upstream = betti_realize(&frag, &m);
    let af = adapted_fragment(frag, filt)?;
    for j in degrees {
        let pf = r_pushforward(&af, &m, g, j)?;
        let got = betti_realize(&pf.fragment, &pf.motive);
        let want = pushforward_oracle(g, &upstream, j)?;
        let same = got.stalks.len() == want.stalks.len()
            && got
                .stalks
                .iter()
                .zip(&want.stalks)
                .all(|(a, b)| a.invariants() == b.invariants());
        if !same {
            return Ok(instance(name, false, format!("degree {j} disagrees with the oracle")));
        }
    }
    Ok(instance(name, true, "all degrees match the oracle"))
}

fn pushforward_oracle_suite(
    scene: Option<&Scene>,
    unroll_depth: usize,
) -> Result<Vec<SuiteInstance>, Error> {
    let ring = Ring::Int;
    let mut out = Vec::new();

    let c3 = fixtures::circle();
    out.push(oracle_instance(
        "circle-to-point",
        SimplicialPair::new(c3.clone(), FaceSet::new(), SimplicialMap::identity(&c3), 0)?,
        &fixtures::to_point(&c3),
        Filtration::skeletal(&c3),
        0..2,
        ring,
    )?);

    let c6 = fixtures::circle_n(6);
    let cover = SimplicialMap::new(c6.clone(), c3.clone(), vec![0, 1, 2, 0, 1, 2])?;
    out.push(oracle_instance(
        "double-cover",
        SimplicialPair::new(c6.clone(), FaceSet::new(), SimplicialMap::identity(&c6), 0)?,
        &cover,
        Filtration::skeletal(&c6),
        0..2,
        ring,
    )?);

    let d = fixtures::disk();
    out.push(oracle_instance(
        "disk-rel-boundary",
        SimplicialPair::new(d.clone(), d.skeleton(1), SimplicialMap::identity(&d), 0)?,
        &fixtures::to_point(&d),
        Filtration::skeletal(&d),
        0..3,
        ring,
    )?);

    if let Some(scene) = scene {
        let built = build_all(scene, unroll_depth);
        for (fname, decl) in &scene.fragments {
            let FragmentOutcome::Ok(bf) = &built[fname] else { continue };
            for (filt_name, (cname, filt)) in &scene.filtrations {
                if cname != &decl.base {
                    continue;
                }
                let g = fixtures::to_point(&bf.fragment.base);
                for (vname, _) in &decl.vertices {
                    let pair = bf.fragment.vertices[bf.index[vname]].pair.clone();
                    out.push(oracle_instance(
                        &format!("scene-{fname}-{vname}-{filt_name}"),
                        pair,
                        &g,
                        filt.clone(),
                        0..2,
                        scene.ring,
                    )?);
                }
            }
        }
    }
    Ok(out)
}

// ------------------------------------------------------------- refinement

fn refinement_instance(
    name: &str,
    base: &SimplicialComplex,
    pair: SimplicialPair,
    big: Filtration,
    small: Filtration,
    ring: Ring,
) -> Result<SuiteInstance, Error> {
    let mut b = FragmentBuilder::new(base, ring);
    let v = b.vertex(pair)?;
    let frag = b.build()?;
    let r = refine(&frag, v, &big, &small)?;
    if !r.quasi_iso {
        return Ok(instance(name, false, "comparison fails to be a quasi-isomorphism"));
    }
    let coarse = point_chain_complex(&r.fragment, &r.coarse)?;
    let fine = point_chain_complex(&r.fragment, &r.fine)?;
    let top = coarse.len().max(fine.len());
    for j in 0..top {
        if coarse.cohomology(j).invariants() != fine.cohomology(j).invariants() {
            return Ok(instance(name, false, format!("cohomology differs at degree {j}")));
        }
    }
    Ok(instance(name, true, "quasi-isomorphism with equal cohomology"))
}

fn refinement_suite() -> Result<Vec<SuiteInstance>, Error> {
    let ring = Ring::Int;
    let mut out = Vec::new();

    let c6 = fixtures::circle_n(6);
    let sparse = Filtration::new(
        &c6,
        vec![
            c6.closure(
                &[
                    c6.face_id(&[0]).unwrap(),
                    c6.face_id(&[2]).unwrap(),
                    c6.face_id(&[4]).unwrap(),
                ]
                .into(),
            ),
            c6.full_set(),
        ],
    )?;
    out.push(refinement_instance(
        "circle-skeletal-vs-sparse",
        &c6,
        SimplicialPair::new(c6.clone(), FaceSet::new(), SimplicialMap::identity(&c6), 0)?,
        Filtration::skeletal(&c6),
        sparse,
        Ring::Int,
    )?);

    out.push(refinement_instance(
        "circle-identity",
        &c6,
        SimplicialPair::new(c6.clone(), FaceSet::new(), SimplicialMap::identity(&c6), 0)?,
        Filtration::skeletal(&c6),
        Filtration::skeletal(&c6),
        ring,
    )?);

    // Two stages against three: the skeletal stages sit inside the padded
    // coarse ones.
    let d = fixtures::disk();
    let coarse = Filtration::new(&d, vec![d.skeleton(0), d.full_set()])?;
    out.push(refinement_instance(
        "disk-two-stage-vs-skeletal",
        &d,
        SimplicialPair::new(d.clone(), FaceSet::new(), SimplicialMap::identity(&d), 0)?,
        coarse,
        Filtration::skeletal(&d),
        ring,
    )?);
    Ok(out)
}

// -------------------------------------------------------- tensor relations

fn tensor_relations(scene: Option<&Scene>) -> Result<Vec<SuiteInstance>, Error> {
    let rings: Vec<Ring> = match scene {
        Some(s) => vec![s.ring],
        None => vec![Ring::Int, Ring::Rat],
    };
    let mut out = Vec::new();
    for ring in rings {
        for (name, pass) in tensor_relation_suite(ring)? {
            out.push(instance(format!("{ring}-{name}"), pass, "realization equality"));
        }
    }
    Ok(out)
}
