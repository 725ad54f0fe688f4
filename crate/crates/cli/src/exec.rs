//! Scene execution: build every declared fragment, then run the command
//! list in order.  A fragment whose vertex fails the base-change gate is
//! recorded as rejected with its witness; commands that reference it come
//! back `rejected` rather than aborting the run.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use motives::motive::{
    as_canonical_vertex, betti_realize, canonical_motive, localize, tensor, twist, DeltaFragment,
    FragmentBuilder,
};
use motives::pushforward::{adapted_fragment, k_complex, point_chain_complex, r_pushforward};
use motives::sheaf::{relative_sheaf, sheaf_cohomology, CellularSheaf};
use motives::Error;
use serde_json::{json, Value};

use crate::cache::{scene_digest, Cache};
use crate::report::{invariants_json, matrix_json, module_json, CommandReport, FragmentReport, Report};
use crate::scene::{Command, EdgeDecl, Scene};

pub struct RunOptions {
    pub cache_dir: PathBuf,
    pub unroll_depth: usize,
}

pub struct BuiltFragment {
    pub fragment: DeltaFragment,
    /// Declared vertex name to index in the built fragment.
    pub index: BTreeMap<String, usize>,
    pub unrolled: bool,
}

pub enum FragmentOutcome {
    Ok(Box<BuiltFragment>),
    Rejected { vertex: String, witness: String },
    Failed { message: String },
}

pub fn build_fragment(
    scene: &Scene,
    name: &str,
    unroll_depth: usize,
) -> FragmentOutcome {
    let decl = &scene.fragments[name];
    let base = &scene.complexes[&decl.base];

    let assemble = || -> Result<FragmentBuilder, FragmentOutcome> {
        let mut b = FragmentBuilder::new(base, scene.ring);
        for (vname, pname) in &decl.vertices {
            match b.vertex(scene.pairs[pname].clone()) {
                Ok(v) => b.rename(v, vname.clone()),
                Err(Error::BaseChangeFailed(witness)) => {
                    return Err(FragmentOutcome::Rejected {
                        vertex: vname.clone(),
                        witness,
                    })
                }
                Err(e) => {
                    return Err(FragmentOutcome::Failed {
                        message: format!("vertex {vname}: {e}"),
                    })
                }
            }
        }
        let at = |v: &str| decl.vertices.iter().position(|(n, _)| n == v).unwrap();
        for e in &decl.edges {
            let r = match e {
                EdgeDecl::Pullback { map, src, dst, .. } => {
                    b.restriction(scene.maps[map].clone(), at(src), at(dst))
                }
                EdgeDecl::Connecting { low, top, .. } => b.connecting(at(low), at(top)),
            };
            if let Err(err) = r {
                return Err(FragmentOutcome::Failed {
                    message: format!("edge {}: {err}", e.name()),
                });
            }
        }
        Ok(b)
    };

    let b = match assemble() {
        Ok(b) => b,
        Err(outcome) => return outcome,
    };
    match b.build() {
        Ok(fragment) => {
            let index = decl
                .vertices
                .iter()
                .enumerate()
                .map(|(k, (n, _))| (n.clone(), k))
                .collect();
            FragmentOutcome::Ok(Box::new(BuiltFragment { fragment, index, unrolled: false }))
        }
        Err(Error::Cyclic(_)) => {
            let b = match assemble() {
                Ok(b) => b,
                Err(outcome) => return outcome,
            };
            match b.build_unrolled(unroll_depth) {
                Ok((fragment, proj)) => {
                    // A declared vertex lands on its first unrolled copy.
                    let index = scene.fragments[name]
                        .vertices
                        .iter()
                        .enumerate()
                        .filter_map(|(k, (n, _))| {
                            proj.vertex_map
                                .iter()
                                .position(|&v| v == k)
                                .map(|uk| (n.clone(), uk))
                        })
                        .collect();
                    FragmentOutcome::Ok(Box::new(BuiltFragment {
                        fragment,
                        index,
                        unrolled: true,
                    }))
                }
                Err(e) => FragmentOutcome::Failed { message: e.to_string() },
            }
        }
        Err(e) => FragmentOutcome::Failed { message: e.to_string() },
    }
}

pub fn build_all(scene: &Scene, unroll_depth: usize) -> BTreeMap<String, FragmentOutcome> {
    scene
        .fragments
        .keys()
        .map(|name| (name.clone(), build_fragment(scene, name, unroll_depth)))
        .collect()
}

fn sheaf_json(sheaf: &CellularSheaf, with_matrices: bool) -> Result<Value, Error> {
    let stalks: Vec<Value> = sheaf.stalks.iter().map(module_json).collect();
    let cohomology: Vec<Value> = sheaf_cohomology(sheaf)?.iter().map(module_json).collect();
    let mut v = json!({ "stalks": stalks, "cohomology": cohomology });
    if with_matrices {
        let restrictions: Vec<Value> = sheaf
            .restrictions
            .iter()
            .map(|((s, t), m)| json!({ "from": s, "to": t, "matrix": matrix_json(m) }))
            .collect();
        v["restrictions"] = Value::Array(restrictions);
    }
    Ok(v)
}

fn fragment_for<'a>(
    built: &'a BTreeMap<String, FragmentOutcome>,
    name: &str,
) -> Result<&'a BuiltFragment, CommandStatus> {
    match &built[name] {
        FragmentOutcome::Ok(bf) => Ok(bf),
        FragmentOutcome::Rejected { vertex, witness } => Err(CommandStatus::Rejected {
            detail: json!({ "fragment": name, "vertex": vertex, "witness": witness }),
        }),
        FragmentOutcome::Failed { message } => Err(CommandStatus::Error {
            message: format!("fragment {name} failed to build: {message}"),
        }),
    }
}

/// Fresh build of a declared fragment.  The adapted-fragment commands move
/// the fragment into the stage machinery, so they cannot borrow from the
/// shared build table; rebuilding is deterministic.
fn owned_fragment(
    scene: &Scene,
    name: &str,
    unroll_depth: usize,
) -> Result<BuiltFragment, CommandStatus> {
    match build_fragment(scene, name, unroll_depth) {
        FragmentOutcome::Ok(bf) => Ok(*bf),
        FragmentOutcome::Rejected { vertex, witness } => Err(CommandStatus::Rejected {
            detail: json!({ "fragment": name, "vertex": vertex, "witness": witness }),
        }),
        FragmentOutcome::Failed { message } => Err(CommandStatus::Error {
            message: format!("fragment {name} failed to build: {message}"),
        }),
    }
}

enum CommandStatus {
    Rejected { detail: Value },
    Error { message: String },
}

fn run_command(
    scene: &Scene,
    built: &BTreeMap<String, FragmentOutcome>,
    cmd: &Command,
    unroll_depth: usize,
) -> Result<Value, CommandStatus> {
    let engine_err = |e: Error| CommandStatus::Error { message: e.to_string() };
    match cmd {
        Command::Realize { fragment, vertex } => {
            let bf = fragment_for(built, fragment)?;
            let m = canonical_motive(&bf.fragment, bf.index[vertex]);
            let sheaf = betti_realize(&bf.fragment, &m);
            let mut data = sheaf_json(&sheaf, true).map_err(engine_err)?;
            data["motive"] = json!(m.name);
            data["unrolled"] = json!(bf.unrolled);
            Ok(data)
        }
        Command::Cohomology { pair } => {
            let sheaf = relative_sheaf(&scene.pairs[pair], scene.ring).map_err(engine_err)?;
            let cohomology: Vec<Value> = sheaf_cohomology(&sheaf)
                .map_err(engine_err)?
                .iter()
                .map(module_json)
                .collect();
            Ok(json!({ "pair": pair, "cohomology": cohomology }))
        }
        Command::KComplex { fragment, vertex, filtration } => {
            let (fc_name, filt) = &scene.filtrations[filtration];
            if *fc_name != scene.fragments[fragment].base {
                return Err(CommandStatus::Error {
                    message: format!(
                        "filtration {filtration} is on complex {fc_name}, not the fragment base"
                    ),
                });
            }
            let bf = owned_fragment(scene, fragment, unroll_depth)?;
            let af = adapted_fragment(bf.fragment, filt.clone()).map_err(engine_err)?;
            let fc = k_complex(&af, bf.index[vertex]).map_err(engine_err)?;
            let mc = point_chain_complex(&fc.fragment, &fc.chain).map_err(engine_err)?;
            let terms: Vec<Value> = mc.terms.iter().map(module_json).collect();
            let cohomology: Vec<Value> =
                (0..mc.len()).map(|k| module_json(&mc.cohomology(k))).collect();
            Ok(json!({
                "offset": fc.offset,
                "terms": terms,
                "cohomology": cohomology,
            }))
        }
        Command::Pushforward { fragment, vertex, map, filtration, degree } => {
            let (fc_name, filt) = &scene.filtrations[filtration];
            if *fc_name != scene.fragments[fragment].base {
                return Err(CommandStatus::Error {
                    message: format!(
                        "filtration {filtration} is on complex {fc_name}, not the fragment base"
                    ),
                });
            }
            let bf = owned_fragment(scene, fragment, unroll_depth)?;
            let af = adapted_fragment(bf.fragment, filt.clone()).map_err(engine_err)?;
            let m = canonical_motive(&af.fragment, bf.index[vertex]);
            let pf = r_pushforward(&af, &m, &scene.maps[map], *degree).map_err(engine_err)?;
            let sheaf = betti_realize(&pf.fragment, &pf.motive);
            let mut data = sheaf_json(&sheaf, false).map_err(engine_err)?;
            data["motive"] = json!(pf.motive.name);
            data["degree"] = json!(degree);
            Ok(data)
        }
        Command::Tensor { left_fragment, left_vertex, right_fragment, right_vertex } => {
            let lf = fragment_for(built, left_fragment)?;
            let rf = fragment_for(built, right_fragment)?;
            let lm = canonical_motive(&lf.fragment, lf.index[left_vertex]);
            let rm = canonical_motive(&rf.fragment, rf.index[right_vertex]);
            let (asm, m) = tensor(&lf.fragment, &lm, &rf.fragment, &rm).map_err(engine_err)?;
            let sheaf = betti_realize(&asm.fragment, &m);
            let mut data = sheaf_json(&sheaf, false).map_err(engine_err)?;
            data["motive"] = json!(m.name);
            if let Some(v) = as_canonical_vertex(&asm.fragment, &m) {
                data["degree"] = json!(asm.fragment.vertices[v].pair.degree);
            }
            Ok(data)
        }
        Command::Twist { fragment, vertex, weight } => {
            let bf = fragment_for(built, fragment)?;
            let m = canonical_motive(&bf.fragment, bf.index[vertex]);
            let tw = twist(&localize(&m), *weight);
            let sheaf = betti_realize(&bf.fragment, &tw.motive);
            let stalks: Vec<Value> = sheaf.stalks.iter().map(module_json).collect();
            Ok(json!({
                "motive": tw.motive.name,
                "weight": tw.weight,
                "stalks": stalks,
            }))
        }
    }
}

pub fn run(scene: &Scene, opts: &RunOptions) -> Report {
    let digest = scene_digest(&scene.source);
    let ring = scene.ring.to_string();
    let cache = Cache::open(opts.cache_dir.clone());

    let t0 = Instant::now();
    let built = build_all(scene, opts.unroll_depth);
    let build_secs = t0.elapsed().as_secs_f64();

    let mut fragments = Vec::new();
    for (name, outcome) in &built {
        let fr = match outcome {
            FragmentOutcome::Ok(bf) => FragmentReport {
                status: "ok".into(),
                vertices: bf
                    .index
                    .iter()
                    .map(|(n, &v)| format!("{n} = {}", bf.fragment.vertices[v].name))
                    .collect(),
                detail: json!({ "unrolled": bf.unrolled }),
            },
            FragmentOutcome::Rejected { vertex, witness } => FragmentReport {
                status: "rejected".into(),
                vertices: Vec::new(),
                detail: json!({ "vertex": vertex, "witness": witness }),
            },
            FragmentOutcome::Failed { message } => FragmentReport {
                status: "failed".into(),
                vertices: Vec::new(),
                detail: json!({ "message": message }),
            },
        };
        fragments.push((name.clone(), fr));
    }

    let mut commands = Vec::new();
    let mut timings = vec![("fragments".to_string(), build_secs)];
    for (text, cmd) in &scene.commands {
        let t = Instant::now();
        let (status, data, cached) = match cache.get(crate::ENGINE, &ring, &scene.source, text) {
            Some(hit) => {
                let status = hit["status"].as_str().unwrap_or("error").to_string();
                (status, hit["data"].clone(), true)
            }
            None => {
                let (status, data) = match run_command(scene, &built, cmd, opts.unroll_depth) {
                    Ok(data) => ("ok".to_string(), data),
                    Err(CommandStatus::Rejected { detail }) => ("rejected".to_string(), detail),
                    Err(CommandStatus::Error { message }) => {
                        ("error".to_string(), json!({ "message": message }))
                    }
                };
                cache.put(
                    crate::ENGINE,
                    &ring,
                    &scene.source,
                    text,
                    &json!({ "status": status, "data": data }),
                );
                (status, data, false)
            }
        };
        let label = if cached { format!("{text} [cached]") } else { text.clone() };
        timings.push((label, t.elapsed().as_secs_f64()));
        commands.push(CommandReport { command: text.clone(), status, data });
    }

    Report {
        engine: crate::ENGINE.to_string(),
        scene: scene.name.clone(),
        digest,
        ring,
        fragments,
        commands,
        timings,
    }
}

/// Realized invariants of a declared vertex, used by the verify suites.
pub fn vertex_invariants(bf: &BuiltFragment, vertex: &str) -> Value {
    let m = canonical_motive(&bf.fragment, bf.index[vertex]);
    let sheaf = betti_realize(&bf.fragment, &m);
    Value::Array(sheaf.stalks.iter().map(|s| invariants_json(&s.invariants())).collect())
}
