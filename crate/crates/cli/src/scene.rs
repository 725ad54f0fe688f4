//! Line-oriented scene files: complexes, maps, pairs, filtrations,
//! fragments, and a command list, all by name.
//!
//! Directives start at column zero; indented lines belong to the block
//! opened above them.  `#` starts a comment.  Names must be declared before
//! they are referenced, and every resolution error is reported with its
//! line number rather than stopping at the first.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use motives::sheaf::{SimplicialPair, StalkModel};
use motives::simplicial::{fibre_product, FaceSet, Filtration, SimplicialComplex, SimplicialMap};
use motives::Ring;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagKind {
    Parse,
    UnresolvedReference,
    RingMismatch,
}

impl fmt::Display for DiagKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagKind::Parse => write!(f, "parse error"),
            DiagKind::UnresolvedReference => write!(f, "unresolved reference"),
            DiagKind::RingMismatch => write!(f, "ring mismatch"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub line: usize,
    pub kind: DiagKind,
    pub message: String,
}

#[derive(Debug)]
pub struct SceneError {
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for SceneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.diagnostics {
            writeln!(f, "line {}: {}: {}", d.line, d.kind, d.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for SceneError {}

#[derive(Debug, Clone)]
pub enum EdgeDecl {
    Pullback { name: String, map: String, src: String, dst: String },
    Connecting { name: String, low: String, top: String },
}

impl EdgeDecl {
    pub fn name(&self) -> &str {
        match self {
            EdgeDecl::Pullback { name, .. } => name,
            EdgeDecl::Connecting { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FragmentDecl {
    pub base: String,
    pub vertices: Vec<(String, String)>,
    pub edges: Vec<EdgeDecl>,
}

#[derive(Debug, Clone)]
pub enum Command {
    Realize { fragment: String, vertex: String },
    Cohomology { pair: String },
    KComplex { fragment: String, vertex: String, filtration: String },
    Pushforward { fragment: String, vertex: String, map: String, filtration: String, degree: usize },
    Tensor { left_fragment: String, left_vertex: String, right_fragment: String, right_vertex: String },
    Twist { fragment: String, vertex: String, weight: i64 },
}

pub struct Scene {
    pub name: String,
    pub source: String,
    pub ring: Ring,
    pub complexes: BTreeMap<String, SimplicialComplex>,
    pub maps: BTreeMap<String, SimplicialMap>,
    pub pairs: BTreeMap<String, SimplicialPair>,
    /// Filtration together with the name of the complex it filters.
    pub filtrations: BTreeMap<String, (String, Filtration)>,
    pub fragments: BTreeMap<String, FragmentDecl>,
    /// Commands in order, each with its verbatim source text.
    pub commands: Vec<(String, Command)>,
}

pub fn parse_scene(path: &Path) -> Result<Scene, SceneError> {
    let source = std::fs::read_to_string(path).map_err(|e| SceneError {
        diagnostics: vec![Diagnostic {
            line: 0,
            kind: DiagKind::Parse,
            message: format!("cannot read {}: {e}", path.display()),
        }],
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scene".into());
    parse_scene_str(&name, &source)
}

struct Parser<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

impl<'a> Parser<'a> {
    fn new(source: &'a str) -> Self {
        let lines = source
            .lines()
            .enumerate()
            .map(|(i, l)| {
                let body = match l.find('#') {
                    Some(k) => &l[..k],
                    None => l,
                };
                (i + 1, body)
            })
            .filter(|(_, l)| !l.trim().is_empty())
            .collect();
        Parser { lines, pos: 0, diags: Vec::new() }
    }

    fn err(&mut self, line: usize, kind: DiagKind, message: String) {
        self.diags.push(Diagnostic { line, kind, message });
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.lines.get(self.pos).copied()
    }

    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        let l = self.peek();
        if l.is_some() {
            self.pos += 1;
        }
        l
    }

    /// Indented lines following the current directive.
    fn block(&mut self) -> Vec<(usize, &'a str)> {
        let mut out = Vec::new();
        while let Some((n, l)) = self.peek() {
            if l.starts_with(' ') || l.starts_with('\t') {
                out.push((n, l.trim()));
                self.pos += 1;
            } else {
                break;
            }
        }
        out
    }
}

fn vertex_index(c: &SimplicialComplex, label: &str) -> Option<usize> {
    c.labels.iter().position(|l| l == label)
}

/// Parse `{ ... }` face-set syntax: bracketed vertex-label faces and the
/// `skeleton K` shorthand; the closure of everything listed.
fn parse_face_set(
    c: &SimplicialComplex,
    text: &str,
    line: usize,
    diags: &mut Vec<Diagnostic>,
) -> Option<FaceSet> {
    let inner = text.trim();
    let inner = inner.strip_prefix('{')?.strip_suffix('}')?.trim();
    let mut set = FaceSet::new();
    let mut rest = inner;
    while !rest.is_empty() {
        if let Some(stripped) = rest.strip_prefix("skeleton") {
            let mut it = stripped.trim_start().splitn(2, char::is_whitespace);
            let k = it.next().unwrap_or("");
            match k.parse::<usize>() {
                Ok(k) => set.extend(c.skeleton(k)),
                Err(_) => {
                    diags.push(Diagnostic {
                        line,
                        kind: DiagKind::Parse,
                        message: format!("bad skeleton dimension '{k}'"),
                    });
                    return None;
                }
            }
            rest = it.next().unwrap_or("").trim_start();
            continue;
        }
        let Some(open) = rest.find('[') else {
            diags.push(Diagnostic {
                line,
                kind: DiagKind::Parse,
                message: format!("expected '[face]' in face set, found '{rest}'"),
            });
            return None;
        };
        let Some(close) = rest[open..].find(']') else {
            diags.push(Diagnostic {
                line,
                kind: DiagKind::Parse,
                message: "unterminated '[' in face set".into(),
            });
            return None;
        };
        let face_text = &rest[open + 1..open + close];
        let mut verts = Vec::new();
        let mut ok = true;
        for label in face_text.split_whitespace() {
            match vertex_index(c, label) {
                Some(v) => verts.push(v),
                None => {
                    diags.push(Diagnostic {
                        line,
                        kind: DiagKind::UnresolvedReference,
                        message: format!("no vertex '{label}' in the complex"),
                    });
                    ok = false;
                }
            }
        }
        if ok {
            verts.sort_unstable();
            match c.face_id(&verts) {
                Some(f) => {
                    set.insert(f);
                }
                None => diags.push(Diagnostic {
                    line,
                    kind: DiagKind::UnresolvedReference,
                    message: format!("no face [{face_text}] in the complex"),
                }),
            }
        }
        rest = rest[open + close + 1..].trim_start();
    }
    Some(c.closure(&set))
}

pub fn parse_scene_str(name: &str, source: &str) -> Result<Scene, SceneError> {
    let mut p = Parser::new(source);
    let mut ring: Option<(usize, Ring)> = None;
    let mut complexes: BTreeMap<String, SimplicialComplex> = BTreeMap::new();
    let mut maps: BTreeMap<String, SimplicialMap> = BTreeMap::new();
    let mut pairs: BTreeMap<String, SimplicialPair> = BTreeMap::new();
    let mut filtrations: BTreeMap<String, (String, Filtration)> = BTreeMap::new();
    let mut fragments: BTreeMap<String, FragmentDecl> = BTreeMap::new();
    let mut commands: Vec<(String, Command)> = Vec::new();

    while let Some((line, raw)) = p.next_line() {
        if raw.starts_with(' ') || raw.starts_with('\t') {
            p.err(line, DiagKind::Parse, "indented line outside any block".into());
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        match toks[0] {
            "ring" => {
                let r = match toks.get(1) {
                    Some(&"Z") => Some(Ring::Int),
                    Some(&"Q") => Some(Ring::Rat),
                    other => {
                        p.err(
                            line,
                            DiagKind::Parse,
                            format!("ring must be Z or Q, found {:?}", other.unwrap_or(&"")),
                        );
                        None
                    }
                };
                if let Some(r) = r {
                    match ring {
                        None => ring = Some((line, r)),
                        Some((_, prev)) if prev == r => {}
                        Some((first, _)) => p.err(
                            line,
                            DiagKind::RingMismatch,
                            format!("ring already declared differently on line {first}"),
                        ),
                    }
                }
            }
            "complex" => {
                let Some(&cname) = toks.get(1) else {
                    p.err(line, DiagKind::Parse, "complex needs a name".into());
                    p.block();
                    continue;
                };
                let mut labels: Vec<String> = Vec::new();
                let mut facets: Vec<Vec<usize>> = Vec::new();
                let mut ok = true;
                for (bl, b) in p.block() {
                    let bt: Vec<&str> = b.split_whitespace().collect();
                    match bt.first() {
                        Some(&"vertices") => {
                            labels = bt[1..].iter().map(|s| s.to_string()).collect()
                        }
                        Some(&"facet") => {
                            let mut f = Vec::new();
                            for lb in &bt[1..] {
                                match labels.iter().position(|x| x == lb) {
                                    Some(v) => f.push(v),
                                    None => {
                                        p.diags.push(Diagnostic {
                                            line: bl,
                                            kind: DiagKind::UnresolvedReference,
                                            message: format!("no vertex '{lb}' in complex {cname}"),
                                        });
                                        ok = false;
                                    }
                                }
                            }
                            f.sort_unstable();
                            facets.push(f);
                        }
                        _ => {
                            p.diags.push(Diagnostic {
                                line: bl,
                                kind: DiagKind::Parse,
                                message: format!("unknown complex item '{b}'"),
                            });
                            ok = false;
                        }
                    }
                }
                if labels.is_empty() {
                    p.err(line, DiagKind::Parse, format!("complex {cname} has no vertices"));
                    ok = false;
                }
                if ok {
                    match SimplicialComplex::new(labels, facets) {
                        Ok(c) => {
                            complexes.insert(cname.to_string(), c);
                        }
                        Err(e) => p.err(line, DiagKind::Parse, format!("complex {cname}: {e}")),
                    }
                }
            }
            "map" => {
                // map N : A -> B  (+ indented `v -> w` lines)
                // map N = identity(A) | constant(A, B, w)
                let Some(&mname) = toks.get(1) else {
                    p.err(line, DiagKind::Parse, "map needs a name".into());
                    p.block();
                    continue;
                };
                if toks.get(2) == Some(&"=") {
                    let spec = toks[3..].join(" ");
                    if let Some(arg) = spec.strip_prefix("identity(").and_then(|s| s.strip_suffix(')')) {
                        match complexes.get(arg.trim()) {
                            Some(c) => {
                                maps.insert(mname.to_string(), SimplicialMap::identity(c));
                            }
                            None => p.err(
                                line,
                                DiagKind::UnresolvedReference,
                                format!("no complex '{}'", arg.trim()),
                            ),
                        }
                    } else if let Some(arg) =
                        spec.strip_prefix("constant(").and_then(|s| s.strip_suffix(')'))
                    {
                        let parts: Vec<&str> = arg.split(',').map(|s| s.trim()).collect();
                        if parts.len() != 3 {
                            p.err(line, DiagKind::Parse, "constant needs (src, dst, vertex)".into());
                            continue;
                        }
                        let (Some(a), Some(b)) = (complexes.get(parts[0]), complexes.get(parts[1]))
                        else {
                            for n in &parts[..2] {
                                if !complexes.contains_key(*n) {
                                    p.err(
                                        line,
                                        DiagKind::UnresolvedReference,
                                        format!("no complex '{n}'"),
                                    );
                                }
                            }
                            continue;
                        };
                        match vertex_index(b, parts[2]) {
                            Some(w) => match SimplicialMap::new(
                                a.clone(),
                                b.clone(),
                                vec![w; a.n_vertices()],
                            ) {
                                Ok(m) => {
                                    maps.insert(mname.to_string(), m);
                                }
                                Err(e) => {
                                    p.err(line, DiagKind::Parse, format!("map {mname}: {e}"))
                                }
                            },
                            None => p.err(
                                line,
                                DiagKind::UnresolvedReference,
                                format!("no vertex '{}' in {}", parts[2], parts[1]),
                            ),
                        }
                    } else {
                        p.err(line, DiagKind::Parse, format!("unknown map shorthand '{spec}'"));
                    }
                    continue;
                }
                if toks.len() != 6 || toks[2] != ":" || toks[4] != "->" {
                    p.err(line, DiagKind::Parse, "expected 'map NAME : SRC -> DST'".into());
                    p.block();
                    continue;
                }
                let (src_name, dst_name) = (toks[3], toks[5]);
                let body = p.block();
                let (Some(a), Some(b)) = (complexes.get(src_name), complexes.get(dst_name)) else {
                    for n in [src_name, dst_name] {
                        if !complexes.contains_key(n) {
                            p.err(line, DiagKind::UnresolvedReference, format!("no complex '{n}'"));
                        }
                    }
                    continue;
                };
                let mut vm = vec![usize::MAX; a.n_vertices()];
                let mut ok = true;
                for (bl, bline) in body {
                    let bt: Vec<&str> = bline.split_whitespace().collect();
                    if bt.len() != 3 || bt[1] != "->" {
                        p.diags.push(Diagnostic {
                            line: bl,
                            kind: DiagKind::Parse,
                            message: format!("expected 'v -> w', found '{bline}'"),
                        });
                        ok = false;
                        continue;
                    }
                    match (vertex_index(a, bt[0]), vertex_index(b, bt[2])) {
                        (Some(v), Some(w)) => vm[v] = w,
                        _ => {
                            p.diags.push(Diagnostic {
                                line: bl,
                                kind: DiagKind::UnresolvedReference,
                                message: format!("unknown vertex in '{bline}'"),
                            });
                            ok = false;
                        }
                    }
                }
                if vm.contains(&usize::MAX) {
                    p.err(line, DiagKind::Parse, format!("map {mname} leaves vertices unassigned"));
                    ok = false;
                }
                if ok {
                    match SimplicialMap::new(a.clone(), b.clone(), vm) {
                        Ok(m) => {
                            maps.insert(mname.to_string(), m);
                        }
                        Err(e) => p.err(line, DiagKind::Parse, format!("map {mname}: {e}")),
                    }
                }
            }
            "product" => {
                // product T2 = A x B ; defines T2 and maps T2.left / T2.right
                if toks.len() != 6 || toks[2] != "=" || toks[4] != "x" {
                    p.err(line, DiagKind::Parse, "expected 'product NAME = A x B'".into());
                    continue;
                }
                let pname = toks[1];
                let (Some(a), Some(b)) = (complexes.get(toks[3]), complexes.get(toks[5])) else {
                    for n in [toks[3], toks[5]] {
                        if !complexes.contains_key(n) {
                            p.err(line, DiagKind::UnresolvedReference, format!("no complex '{n}'"));
                        }
                    }
                    continue;
                };
                let pt = SimplicialComplex::point("pt");
                let fa = SimplicialMap::new(a.clone(), pt.clone(), vec![0; a.n_vertices()]).unwrap();
                let fb = SimplicialMap::new(b.clone(), pt.clone(), vec![0; b.n_vertices()]).unwrap();
                match fibre_product(&fa, &fb) {
                    Ok((total, pl, pr)) => {
                        complexes.insert(pname.to_string(), total);
                        maps.insert(format!("{pname}.left"), pl);
                        maps.insert(format!("{pname}.right"), pr);
                    }
                    Err(e) => p.err(line, DiagKind::Parse, format!("product {pname}: {e}")),
                }
            }
            "pair" => {
                // pair N = (COMPLEX, {faces}, MAP, DEGREE) [closed-star]
                let joined = toks[1..].join(" ");
                let Some((pname, spec)) = joined.split_once('=') else {
                    p.err(line, DiagKind::Parse, "expected 'pair NAME = (...)'".into());
                    continue;
                };
                let pname = pname.trim();
                let spec = spec.trim();
                let closed_star = spec.ends_with("closed-star");
                let spec = spec.trim_end_matches("closed-star").trim();
                let Some(inner) = spec.strip_prefix('(').and_then(|s| s.strip_suffix(')')) else {
                    p.err(line, DiagKind::Parse, "pair needs '(complex, {faces}, map, degree)'".into());
                    continue;
                };
                // Split on top-level commas (the face set may contain none).
                let Some(bo) = inner.find('{') else {
                    p.err(line, DiagKind::Parse, "pair needs a '{...}' subcomplex".into());
                    continue;
                };
                let Some(bc) = inner[bo..].find('}') else {
                    p.err(line, DiagKind::Parse, "unterminated '{' in pair".into());
                    continue;
                };
                let cname = inner[..bo].trim().trim_end_matches(',').trim();
                let faces_text = &inner[bo..bo + bc + 1];
                let tail: Vec<&str> = inner[bo + bc + 1..]
                    .split(',')
                    .map(|s| s.trim())
                    .filter(|s| !s.is_empty())
                    .collect();
                if tail.len() != 2 {
                    p.err(line, DiagKind::Parse, "pair needs '..., map, degree'".into());
                    continue;
                }
                let Some(c) = complexes.get(cname) else {
                    p.err(line, DiagKind::UnresolvedReference, format!("no complex '{cname}'"));
                    continue;
                };
                let Some(m) = maps.get(tail[0]) else {
                    p.err(line, DiagKind::UnresolvedReference, format!("no map '{}'", tail[0]));
                    continue;
                };
                let Ok(degree) = tail[1].parse::<usize>() else {
                    p.err(line, DiagKind::Parse, format!("bad degree '{}'", tail[1]));
                    continue;
                };
                let Some(sub) = parse_face_set(c, faces_text, line, &mut p.diags) else {
                    continue;
                };
                if m.src != *c {
                    p.err(
                        line,
                        DiagKind::UnresolvedReference,
                        format!("map '{}' does not start at complex '{cname}'", tail[0]),
                    );
                    continue;
                }
                match SimplicialPair::new(c.clone(), sub, m.clone(), degree) {
                    Ok(pair) => {
                        let pair = if closed_star {
                            pair.with_model(StalkModel::ClosedStar)
                        } else {
                            pair
                        };
                        pairs.insert(pname.to_string(), pair);
                    }
                    Err(e) => p.err(line, DiagKind::Parse, format!("pair {pname}: {e}")),
                }
            }
            "filtration" => {
                // filtration N = skeletal(COMPLEX)
                // filtration N on COMPLEX  (+ `stage ...` lines)
                let Some(&fname) = toks.get(1) else {
                    p.err(line, DiagKind::Parse, "filtration needs a name".into());
                    p.block();
                    continue;
                };
                if toks.get(2) == Some(&"=") {
                    let spec = toks[3..].join(" ");
                    if let Some(arg) =
                        spec.strip_prefix("skeletal(").and_then(|s| s.strip_suffix(')'))
                    {
                        match complexes.get(arg.trim()) {
                            Some(c) => {
                                filtrations.insert(
                                    fname.to_string(),
                                    (arg.trim().to_string(), Filtration::skeletal(c)),
                                );
                            }
                            None => p.err(
                                line,
                                DiagKind::UnresolvedReference,
                                format!("no complex '{}'", arg.trim()),
                            ),
                        }
                    } else {
                        p.err(line, DiagKind::Parse, format!("unknown filtration shorthand '{spec}'"));
                    }
                    continue;
                }
                if toks.get(2) != Some(&"on") || toks.get(3).is_none() {
                    p.err(line, DiagKind::Parse, "expected 'filtration NAME on COMPLEX'".into());
                    p.block();
                    continue;
                }
                let cname = toks[3];
                let body = p.block();
                let Some(c) = complexes.get(cname) else {
                    p.err(line, DiagKind::UnresolvedReference, format!("no complex '{cname}'"));
                    continue;
                };
                let mut stages = Vec::new();
                let mut ok = true;
                for (bl, bline) in body {
                    let rest = bline.strip_prefix("stage").map(str::trim);
                    match rest {
                        Some("full") => stages.push(c.full_set()),
                        Some(faces) => {
                            match parse_face_set(c, &format!("{{{faces}}}"), bl, &mut p.diags) {
                                Some(s) => stages.push(s),
                                None => ok = false,
                            }
                        }
                        None => {
                            p.diags.push(Diagnostic {
                                line: bl,
                                kind: DiagKind::Parse,
                                message: format!("expected 'stage ...', found '{bline}'"),
                            });
                            ok = false;
                        }
                    }
                }
                if ok {
                    match Filtration::new(c, stages) {
                        Ok(f) => {
                            filtrations.insert(fname.to_string(), (cname.to_string(), f));
                        }
                        Err(e) => p.err(line, DiagKind::Parse, format!("filtration {fname}: {e}")),
                    }
                }
            }
            "fragment" => {
                // fragment N on COMPLEX (+ vertex/edge lines)
                if toks.len() != 4 || toks[2] != "on" {
                    p.err(line, DiagKind::Parse, "expected 'fragment NAME on COMPLEX'".into());
                    p.block();
                    continue;
                }
                let fname = toks[1];
                let cname = toks[3];
                let body = p.block();
                if !complexes.contains_key(cname) {
                    p.err(line, DiagKind::UnresolvedReference, format!("no complex '{cname}'"));
                    continue;
                }
                let mut decl = FragmentDecl {
                    base: cname.to_string(),
                    vertices: Vec::new(),
                    edges: Vec::new(),
                };
                let mut ok = true;
                for (bl, bline) in body {
                    let bt: Vec<&str> = bline.split_whitespace().collect();
                    match bt.first() {
                        Some(&"vertex") if bt.len() == 4 && bt[2] == "=" => {
                            if !pairs.contains_key(bt[3]) {
                                p.diags.push(Diagnostic {
                                    line: bl,
                                    kind: DiagKind::UnresolvedReference,
                                    message: format!("no pair '{}'", bt[3]),
                                });
                                ok = false;
                            } else {
                                decl.vertices.push((bt[1].to_string(), bt[3].to_string()));
                            }
                        }
                        Some(&"edge") if bt.len() >= 4 && bt[2] == "=" => {
                            let spec = bt[3..].join(" ");
                            let parsed = spec
                                .strip_prefix("pullback(")
                                .and_then(|s| s.strip_suffix(')'))
                                .map(|args| ("pullback", args))
                                .or_else(|| {
                                    spec.strip_prefix("connecting(")
                                        .and_then(|s| s.strip_suffix(')'))
                                        .map(|args| ("connecting", args))
                                });
                            match parsed {
                                Some(("pullback", args)) => {
                                    let a: Vec<&str> =
                                        args.split(',').map(str::trim).collect();
                                    if a.len() == 3 {
                                        if !maps.contains_key(a[0]) {
                                            p.diags.push(Diagnostic {
                                                line: bl,
                                                kind: DiagKind::UnresolvedReference,
                                                message: format!("no map '{}'", a[0]),
                                            });
                                            ok = false;
                                        }
                                        decl.edges.push(EdgeDecl::Pullback {
                                            name: bt[1].to_string(),
                                            map: a[0].to_string(),
                                            src: a[1].to_string(),
                                            dst: a[2].to_string(),
                                        });
                                    } else {
                                        p.diags.push(Diagnostic {
                                            line: bl,
                                            kind: DiagKind::Parse,
                                            message: "pullback needs (map, src, dst)".into(),
                                        });
                                        ok = false;
                                    }
                                }
                                Some(("connecting", args)) => {
                                    let a: Vec<&str> =
                                        args.split(',').map(str::trim).collect();
                                    if a.len() == 2 {
                                        decl.edges.push(EdgeDecl::Connecting {
                                            name: bt[1].to_string(),
                                            low: a[0].to_string(),
                                            top: a[1].to_string(),
                                        });
                                    } else {
                                        p.diags.push(Diagnostic {
                                            line: bl,
                                            kind: DiagKind::Parse,
                                            message: "connecting needs (low, top)".into(),
                                        });
                                        ok = false;
                                    }
                                }
                                _ => {
                                    p.diags.push(Diagnostic {
                                        line: bl,
                                        kind: DiagKind::Parse,
                                        message: format!("unknown edge form '{spec}'"),
                                    });
                                    ok = false;
                                }
                            }
                        }
                        _ => {
                            p.diags.push(Diagnostic {
                                line: bl,
                                kind: DiagKind::Parse,
                                message: format!("unknown fragment item '{bline}'"),
                            });
                            ok = false;
                        }
                    }
                }
                // Edge endpoints must name declared vertices.
                let names: Vec<&str> = decl.vertices.iter().map(|(n, _)| n.as_str()).collect();
                for e in &decl.edges {
                    let (a, b) = match e {
                        EdgeDecl::Pullback { src, dst, .. } => (src, dst),
                        EdgeDecl::Connecting { low, top, .. } => (low, top),
                    };
                    for v in [a, b] {
                        if !names.contains(&v.as_str()) {
                            p.err(
                                line,
                                DiagKind::UnresolvedReference,
                                format!("fragment {fname}: edge references unknown vertex '{v}'"),
                            );
                            ok = false;
                        }
                    }
                }
                if ok {
                    fragments.insert(fname.to_string(), decl);
                }
            }
            "command" => {
                let text = toks[1..].join(" ");
                let ct: Vec<&str> = toks[1..].to_vec();
                let cmd = parse_command(&ct);
                match cmd {
                    Ok(c) => {
                        let refs_ok = check_command_refs(
                            &c,
                            &pairs,
                            &fragments,
                            &filtrations,
                            &maps,
                            line,
                            &mut p.diags,
                        );
                        if refs_ok {
                            commands.push((text, c));
                        }
                    }
                    Err(msg) => p.err(line, DiagKind::Parse, msg),
                }
            }
            other => {
                p.err(line, DiagKind::Parse, format!("unknown directive '{other}'"));
                p.block();
            }
        }
    }

    let ring = match ring {
        Some((_, r)) => r,
        None => {
            if !source.trim().is_empty() {
                p.diags.push(Diagnostic {
                    line: 1,
                    kind: DiagKind::Parse,
                    message: "scene must declare 'ring Z' or 'ring Q'".into(),
                });
            }
            Ring::Int
        }
    };

    if p.diags.is_empty() {
        Ok(Scene {
            name: name.to_string(),
            source: source.to_string(),
            ring,
            complexes,
            maps,
            pairs,
            filtrations,
            fragments,
            commands,
        })
    } else {
        Err(SceneError { diagnostics: p.diags })
    }
}

/// Parse and resolve a command given outside any scene file, against an
/// already-parsed scene.
pub fn adhoc_command(scene: &Scene, text: &str) -> Result<Command, SceneError> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    let mut diags = Vec::new();
    match parse_command(&toks) {
        Ok(c) => {
            if check_command_refs(
                &c,
                &scene.pairs,
                &scene.fragments,
                &scene.filtrations,
                &scene.maps,
                0,
                &mut diags,
            ) {
                Ok(c)
            } else {
                Err(SceneError { diagnostics: diags })
            }
        }
        Err(message) => Err(SceneError {
            diagnostics: vec![Diagnostic { line: 0, kind: DiagKind::Parse, message }],
        }),
    }
}

fn parse_command(t: &[&str]) -> Result<Command, String> {
    match t.first() {
        Some(&"realize") if t.len() == 3 => Ok(Command::Realize {
            fragment: t[1].into(),
            vertex: t[2].into(),
        }),
        Some(&"cohomology") if t.len() == 2 => Ok(Command::Cohomology { pair: t[1].into() }),
        Some(&"kcomplex") if t.len() == 5 && t[3] == "filtration" => Ok(Command::KComplex {
            fragment: t[1].into(),
            vertex: t[2].into(),
            filtration: t[4].into(),
        }),
        Some(&"pushforward")
            if t.len() == 9 && t[3] == "along" && t[5] == "filtration" && t[7] == "degree" =>
        {
            Ok(Command::Pushforward {
                fragment: t[1].into(),
                vertex: t[2].into(),
                map: t[4].into(),
                filtration: t[6].into(),
                degree: t[8].parse().map_err(|_| format!("bad degree '{}'", t[8]))?,
            })
        }
        Some(&"tensor") if t.len() == 5 => Ok(Command::Tensor {
            left_fragment: t[1].into(),
            left_vertex: t[2].into(),
            right_fragment: t[3].into(),
            right_vertex: t[4].into(),
        }),
        Some(&"twist") if t.len() == 5 && t[3] == "weight" => Ok(Command::Twist {
            fragment: t[1].into(),
            vertex: t[2].into(),
            weight: t[4].parse().map_err(|_| format!("bad weight '{}'", t[4]))?,
        }),
        _ => Err(format!("unknown command '{}'", t.join(" "))),
    }
}

#[allow(clippy::too_many_arguments)]
fn check_command_refs(
    c: &Command,
    pairs: &BTreeMap<String, SimplicialPair>,
    fragments: &BTreeMap<String, FragmentDecl>,
    filtrations: &BTreeMap<String, (String, Filtration)>,
    maps: &BTreeMap<String, SimplicialMap>,
    line: usize,
    diags: &mut Vec<Diagnostic>,
) -> bool {
    let mut ok = true;
    let mut need_fragment_vertex = |f: &String, v: &String, ok: &mut bool| match fragments.get(f) {
        None => {
            diags.push(Diagnostic {
                line,
                kind: DiagKind::UnresolvedReference,
                message: format!("no fragment '{f}'"),
            });
            *ok = false;
        }
        Some(d) => {
            if !d.vertices.iter().any(|(n, _)| n == v) {
                diags.push(Diagnostic {
                    line,
                    kind: DiagKind::UnresolvedReference,
                    message: format!("fragment '{f}' has no vertex '{v}'"),
                });
                *ok = false;
            }
        }
    };
    match c {
        Command::Realize { fragment, vertex } | Command::Twist { fragment, vertex, .. } => {
            need_fragment_vertex(fragment, vertex, &mut ok)
        }
        Command::Cohomology { pair } => {
            if !pairs.contains_key(pair) {
                diags.push(Diagnostic {
                    line,
                    kind: DiagKind::UnresolvedReference,
                    message: format!("no pair '{pair}'"),
                });
                ok = false;
            }
        }
        Command::KComplex { fragment, vertex, filtration } => {
            need_fragment_vertex(fragment, vertex, &mut ok);
            if !filtrations.contains_key(filtration) {
                diags.push(Diagnostic {
                    line,
                    kind: DiagKind::UnresolvedReference,
                    message: format!("no filtration '{filtration}'"),
                });
                ok = false;
            }
        }
        Command::Pushforward { fragment, vertex, map, filtration, .. } => {
            need_fragment_vertex(fragment, vertex, &mut ok);
            if !filtrations.contains_key(filtration) {
                diags.push(Diagnostic {
                    line,
                    kind: DiagKind::UnresolvedReference,
                    message: format!("no filtration '{filtration}'"),
                });
                ok = false;
            }
            if !maps.contains_key(map) {
                diags.push(Diagnostic {
                    line,
                    kind: DiagKind::UnresolvedReference,
                    message: format!("no map '{map}'"),
                });
                ok = false;
            }
        }
        Command::Tensor { left_fragment, left_vertex, right_fragment, right_vertex } => {
            need_fragment_vertex(left_fragment, left_vertex, &mut ok);
            need_fragment_vertex(right_fragment, right_vertex, &mut ok);
        }
    }
    ok
}
