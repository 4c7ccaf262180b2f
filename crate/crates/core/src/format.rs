//! Line-oriented text formats for graphs, patterns, models, scenarios,
//! chains, discovery results and curve tables.
//!
//! ```text
//! vars: A,B,C
//! A -> B
//! B -- C            # patterns only
//! coef A -> B = 0.5 # models only
//! var A = 1.0       # models without `standardized = true`
//! ```
//!
//! Whitespace is insignificant and `#` starts a comment.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::chickering::{FlipChain, Move, MoveKind};
use crate::discovery::DiscoveryResult;
use crate::error::{Error, Result};
use crate::graph::{lookup, vertex_table, Dag, OrientationAnswer, Pattern};
use crate::lab::{FrequencyCurves, RetractionProfile, SampleGrid, ScenarioConfig};
use crate::sem::LinearSem;

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Attaches a line number to errors that lack one.
fn at<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { .. } => e,
        other => perr(line, other.to_string()),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Item {
    Vars(Vec<String>),
    Directed(String, String),
    Undirected(String, String),
    Coef(String, String, f64),
    Var(String, f64),
    Standardized(bool),
    Section(String),
    Key(String, String),
}

/// Non-blank, comment-stripped lines with their 1-based numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn split_arrow<'a>(s: &'a str, arrow: &str) -> Option<(&'a str, &'a str)> {
    let (a, b) = s.split_once(arrow)?;
    Some((a.trim(), b.trim()))
}

fn number(line: usize, s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| perr(line, format!("`{}` is not a number", s.trim())))?;
    if !v.is_finite() {
        return Err(perr(line, "value must be finite"));
    }
    Ok(v)
}

fn item(line: usize, l: &str) -> Result<Item> {
    if let Some(rest) = l.strip_prefix("vars:") {
        let names: Vec<String> = rest.split(',').map(|s| s.trim().to_owned()).filter(|s| !s.is_empty()).collect();
        return Ok(Item::Vars(names));
    }
    if l.starts_with('[') && l.ends_with(']') {
        return Ok(Item::Section(l[1..l.len() - 1].trim().to_owned()));
    }
    if let Some(rest) = l.strip_prefix("coef ") {
        let (edge, val) = rest.split_once('=').ok_or_else(|| perr(line, "expected `coef A -> B = value`"))?;
        let (t, h) = split_arrow(edge, "->").ok_or_else(|| perr(line, "expected `coef A -> B = value`"))?;
        return Ok(Item::Coef(t.into(), h.into(), number(line, val)?));
    }
    if let Some(rest) = l.strip_prefix("var ") {
        let (v, val) = rest.split_once('=').ok_or_else(|| perr(line, "expected `var A = value`"))?;
        return Ok(Item::Var(v.trim().into(), number(line, val)?));
    }
    if let Some((k, v)) = l.split_once('=') {
        let (k, v) = (k.trim(), v.trim());
        if k == "standardized" {
            return match v {
                "true" => Ok(Item::Standardized(true)),
                "false" => Ok(Item::Standardized(false)),
                _ => Err(perr(line, format!("`standardized` must be true or false, not `{v}`"))),
            };
        }
        return Ok(Item::Key(k.into(), v.into()));
    }
    if let Some((t, h)) = split_arrow(l, "->") {
        return Ok(Item::Directed(t.into(), h.into()));
    }
    if let Some((a, b)) = split_arrow(l, "--") {
        return Ok(Item::Undirected(a.into(), b.into()));
    }
    Err(perr(line, format!("unrecognized line `{l}`")))
}

type Section = (usize, String, Vec<(usize, String, String)>);

/// Everything a file can say before any `[section]`.
struct Body {
    names: Arc<[String]>,
    directed: Vec<(usize, usize, usize)>,
    undirected: Vec<(usize, usize, usize)>,
    coefs: Vec<(usize, usize, usize, f64)>,
    vars: Vec<(usize, usize, f64)>,
    standardized: Option<(usize, bool)>,
    sections: Vec<Section>,
}

fn body(text: &str) -> Result<Body> {
    let mut it = lines(text);
    let (first, head) = it.next().ok_or_else(|| perr(1, "missing `vars:` header"))?;
    let Item::Vars(raw) = item(first, head)? else {
        return Err(perr(first, "first line must be `vars: ...`"));
    };
    let names = at(first, vertex_table(&raw))?;
    let idx = |line: usize, s: &str| at(line, lookup(&names, s));
    let mut b = Body {
        names: names.clone(),
        directed: vec![],
        undirected: vec![],
        coefs: vec![],
        vars: vec![],
        standardized: None,
        sections: vec![],
    };
    for (line, l) in it {
        let parsed = item(line, l)?;
        if let Some((_, _, keys)) = b.sections.last_mut() {
            match parsed {
                Item::Key(k, v) => keys.push((line, k, v)),
                Item::Section(s) => b.sections.push((line, s, vec![])),
                _ => return Err(perr(line, "only `key = value` lines may follow a section header")),
            }
            continue;
        }
        match parsed {
            Item::Vars(_) => return Err(perr(line, "`vars:` may appear only once")),
            Item::Directed(t, h) => b.directed.push((line, idx(line, &t)?, idx(line, &h)?)),
            Item::Undirected(x, y) => b.undirected.push((line, idx(line, &x)?, idx(line, &y)?)),
            Item::Coef(t, h, v) => b.coefs.push((line, idx(line, &t)?, idx(line, &h)?, v)),
            Item::Var(v, x) => b.vars.push((line, idx(line, &v)?, x)),
            Item::Standardized(s) => {
                if b.standardized.is_some() {
                    return Err(perr(line, "`standardized` given twice"));
                }
                b.standardized = Some((line, s));
            }
            Item::Section(s) => b.sections.push((line, s, vec![])),
            Item::Key(k, _) => return Err(perr(line, format!("unknown key `{k}`"))),
        }
    }
    Ok(b)
}

fn dag_from(names: &Arc<[String]>, edges: impl IntoIterator<Item = (usize, usize, usize)>) -> Result<Dag> {
    let mut g = Dag::from_parents(names.clone(), vec![Default::default(); names.len()])?;
    for (line, t, h) in edges {
        g = at(line, g.with_edge(t, h))?;
    }
    Ok(g)
}

fn reject(b: &Body, what: &str, undirected: bool, model: bool, sections: bool) -> Result<()> {
    if !undirected {
        if let Some(&(line, ..)) = b.undirected.first() {
            return Err(perr(line, format!("undirected edges are not allowed in a {what}")));
        }
    }
    if !model {
        let line = b
            .coefs
            .first()
            .map(|c| c.0)
            .or(b.vars.first().map(|v| v.0))
            .or(b.standardized.map(|s| s.0));
        if let Some(line) = line {
            return Err(perr(line, format!("model parameters are not allowed in a {what}")));
        }
    }
    if !sections {
        if let Some((line, s, _)) = b.sections.first() {
            return Err(perr(*line, format!("unexpected section `[{s}]` in a {what}")));
        }
    }
    Ok(())
}

pub fn parse_dag(text: &str) -> Result<Dag> {
    let b = body(text)?;
    reject(&b, "graph", false, false, false)?;
    dag_from(&b.names, b.directed.iter().copied())
}

pub fn render_dag(g: &Dag) -> String {
    let mut s = format!("vars: {}\n", g.names().join(","));
    for (t, h) in g.edges() {
        let _ = writeln!(s, "{} -> {}", g.name(t), g.name(h));
    }
    s
}

pub fn parse_pattern(text: &str) -> Result<Pattern> {
    let b = body(text)?;
    reject(&b, "pattern", true, false, false)?;
    pattern_from(&b)
}

fn pattern_from(b: &Body) -> Result<Pattern> {
    let d: Vec<(usize, usize)> = b.directed.iter().map(|&(_, t, h)| (t, h)).collect();
    let u: Vec<(usize, usize)> = b.undirected.iter().map(|&(_, x, y)| (x, y)).collect();
    let line = b.directed.iter().chain(&b.undirected).map(|e| e.0).max().unwrap_or(1);
    at(line, Pattern::new(b.names.clone(), &d, &u))
}

pub fn render_pattern(p: &Pattern) -> String {
    let mut s = format!("vars: {}\n", p.names().join(","));
    for (t, h) in p.directed_edges() {
        let _ = writeln!(s, "{} -> {}", p.name(t), p.name(h));
    }
    for (a, b) in p.undirected_edges() {
        let _ = writeln!(s, "{} -- {}", p.name(a), p.name(b));
    }
    s
}

fn sem_from(b: &Body) -> Result<LinearSem> {
    let standardized = b.standardized.is_some_and(|s| s.1);
    if standardized {
        if let Some(&(line, ..)) = b.vars.first() {
            return Err(perr(line, "`var` lines are not allowed in a standardized model"));
        }
    }
    let mut edges = b.directed.clone();
    for &(line, t, h, _) in &b.coefs {
        if !b.directed.iter().any(|&(_, a, c)| (a, c) == (t, h)) {
            edges.push((line, t, h));
        }
    }
    let g = dag_from(&b.names, edges)?;
    let mut coefs = Vec::new();
    let mut seen = BTreeSet::new();
    for &(line, t, h, v) in &b.coefs {
        if !seen.insert((t, h)) {
            return Err(perr(line, format!("second coefficient for {} -> {}", g.name(t), g.name(h))));
        }
        coefs.push((t, h, v));
    }
    if let Some(&(line, t, h)) = b.directed.iter().find(|&&(_, t, h)| !seen.contains(&(t, h))) {
        return Err(perr(line, format!("edge {} -> {} has no coefficient", g.name(t), g.name(h))));
    }
    if standardized {
        let line = b.standardized.map_or(1, |s| s.0);
        return at(line, LinearSem::new_standardized(g, &coefs));
    }
    let mut error_var = vec![1.0; g.len()];
    let mut given = BTreeSet::new();
    for &(line, v, x) in &b.vars {
        if !given.insert(v) {
            return Err(perr(line, format!("second variance for `{}`", g.name(v))));
        }
        if x <= 0.0 {
            return Err(perr(line, format!("variance of `{}` must be positive", g.name(v))));
        }
        error_var[v] = x;
    }
    LinearSem::new(g, &coefs, error_var)
}

pub fn parse_sem(text: &str) -> Result<LinearSem> {
    let b = body(text)?;
    reject(&b, "model", false, true, false)?;
    sem_from(&b)
}

/// Standardized models are written without `var` lines; others list every
/// error variance.
pub fn render_sem(m: &LinearSem) -> String {
    let mut s = render_dag(m.dag());
    for (t, h, b) in m.coefficients() {
        let _ = writeln!(s, "coef {} -> {} = {b:?}", m.dag().name(t), m.dag().name(h));
    }
    if m.is_standardized() {
        s.push_str("standardized = true\n");
    } else {
        for v in 0..m.len() {
            let _ = writeln!(s, "var {} = {:?}", m.dag().name(v), m.error_var(v));
        }
    }
    s
}

fn name_pair(line: usize, names: &[String], v: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    let [a, b] = parts[..] else {
        return Err(perr(line, "expected two vertex names separated by a comma"));
    };
    Ok((at(line, lookup(names, a))?, at(line, lookup(names, b))?))
}

/// A model followed by a `[scenario]` block with `focus = X, Y` and any of
/// `grid` (`lo:hi:points` or a comma list), `trials`, `seed` and
/// `reconstructed` (a comma list of `A -> B`).
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let b = body(text)?;
    reject(&b, "scenario", false, true, true)?;
    let sem = sem_from(&b)?;
    let names = b.names.clone();
    let (line, name, keys) = match &b.sections[..] {
        [] => return Err(perr(1, "missing `[scenario]` block")),
        [one] => one,
        [_, (line, ..), ..] => return Err(perr(*line, "only one section is allowed")),
    };
    if name != "scenario" {
        return Err(perr(*line, format!("unknown section `[{name}]`")));
    }
    let mut focus = None;
    let (mut grid, mut trials, mut seed, mut reconstructed) = (None, None, None, BTreeSet::new());
    let mut seen = BTreeSet::new();
    for (line, k, v) in keys {
        let line = *line;
        if !seen.insert(k.as_str()) {
            return Err(perr(line, format!("`{k}` given twice")));
        }
        match k.as_str() {
            "focus" => focus = Some(name_pair(line, &names, v)?),
            "grid" => {
                let g = if v.contains(':') {
                    SampleGrid::parse(v)
                } else {
                    v.split(',')
                        .map(|s| s.trim().parse::<usize>().map_err(|_| perr(line, format!("`{s}` is not a count"))))
                        .collect::<Result<Vec<_>>>()
                        .and_then(SampleGrid::new)
                };
                grid = Some(at(line, g)?);
            }
            "trials" => {
                let t: u32 = v.parse().map_err(|_| perr(line, format!("`{v}` is not a trial count")))?;
                if t == 0 {
                    return Err(perr(line, "trials must be positive"));
                }
                trials = Some(t);
            }
            "seed" => seed = Some(v.parse().map_err(|_| perr(line, format!("`{v}` is not a seed")))?),
            "reconstructed" => {
                for e in v.split(',').map(str::trim).filter(|e| !e.is_empty()) {
                    let (t, h) = split_arrow(e, "->").ok_or_else(|| perr(line, format!("`{e}` is not an edge")))?;
                    let (t, h) = (at(line, lookup(&names, t))?, at(line, lookup(&names, h))?);
                    if !sem.dag().has_edge(t, h) {
                        return Err(perr(line, format!("`{e}` is not an edge of the model")));
                    }
                    reconstructed.insert((t, h));
                }
            }
            _ => return Err(perr(line, format!("unknown scenario key `{k}`"))),
        }
    }
    let focus = focus.ok_or_else(|| perr(*line, "`focus` is required"))?;
    let mut c = at(*line, ScenarioConfig::new(sem, focus))?;
    c.grid = grid;
    c.trials = trials;
    c.seed = seed;
    c.reconstructed = reconstructed;
    Ok(c)
}

pub fn render_scenario(c: &ScenarioConfig) -> String {
    let g = c.sem.dag();
    let mut s = render_sem(&c.sem);
    s.push_str("[scenario]\n");
    let _ = writeln!(s, "focus = {}, {}", g.name(c.focus.0), g.name(c.focus.1));
    if let Some(grid) = &c.grid {
        let _ = writeln!(s, "grid = {grid}");
    }
    if let Some(t) = c.trials {
        let _ = writeln!(s, "trials = {t}");
    }
    if let Some(seed) = c.seed {
        let _ = writeln!(s, "seed = {seed}");
    }
    if !c.reconstructed.is_empty() {
        let e: Vec<String> = c.reconstructed.iter().map(|&(t, h)| format!("{} -> {}", g.name(t), g.name(h))).collect();
        let _ = writeln!(s, "reconstructed = {}", e.join(", "));
    }
    s
}

/// `focus: X,Y`, the first graph, then for each step a line
/// `--- step i: <moves>` and the graph it reaches.
pub fn render_chain(c: &FlipChain) -> String {
    let names = c.graphs[0].names();
    let mut s = format!("focus: {},{}\n", names[c.focus.0], names[c.focus.1]);
    s.push_str(&render_dag(&c.graphs[0]));
    for (i, (mvs, g)) in c.moves.iter().zip(&c.graphs[1..]).enumerate() {
        let m: Vec<String> = mvs.iter().map(|m| m.display(names).to_string()).collect();
        let _ = writeln!(s, "--- step {}: {}", i + 1, m.join(", "));
        s.push_str(&render_dag(g));
    }
    s
}

fn parse_move(line: usize, names: &[String], s: &str) -> Result<Move> {
    let (verb, edge) = s.trim().split_once(' ').ok_or_else(|| perr(line, format!("bad move `{s}`")))?;
    let (t, h) = split_arrow(edge, "->").ok_or_else(|| perr(line, format!("bad move `{s}`")))?;
    let (t, h) = (at(line, lookup(names, t))?, at(line, lookup(names, h))?);
    match verb {
        "flip" => Ok(Move { kind: MoveKind::CoveredFlip, tail: t, head: h }),
        "add" => Ok(Move { kind: MoveKind::AddEdge, tail: t, head: h }),
        _ => Err(perr(line, format!("unknown move `{verb}`"))),
    }
}

/// Parses and replays a chain; moves must be legal and reach each block.
pub fn parse_chain(text: &str) -> Result<FlipChain> {
    let mut blocks: Vec<(usize, String, String)> = Vec::new();
    let mut focus_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if let Some(f) = t.strip_prefix("focus:") {
            if focus_line.is_some() || !blocks.is_empty() {
                return Err(perr(line, "`focus:` must come first, once"));
            }
            focus_line = Some((line, f.trim().to_owned()));
            blocks.push((line, String::new(), String::new()));
            continue;
        }
        if let Some(rest) = t.strip_prefix("--- step") {
            let (_, mv) = rest.split_once(':').ok_or_else(|| perr(line, "expected `--- step i: moves`"))?;
            blocks.push((line, mv.trim().to_owned(), String::new()));
            continue;
        }
        let Some(block) = blocks.last_mut() else {
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Err(perr(line, "chain must start with `focus: X,Y`"));
        };
        // keep line numbers meaningful by padding
        while block.2.lines().count() + block.0 < line - 1 {
            block.2.push('\n');
        }
        block.2.push_str(raw);
        block.2.push('\n');
    }
    let (fline, focus) = focus_line.ok_or_else(|| perr(1, "missing `focus:` line"))?;
    let mut graphs = Vec::new();
    let mut moves = Vec::new();
    for (i, (line, mv, dag)) in blocks.iter().enumerate() {
        let shifted = format!("{}{}", "\n".repeat(*line), dag);
        let g = parse_dag(&shifted)?;
        if i > 0 {
            let names = g.names();
            let m: Vec<Move> = mv
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| parse_move(*line, names, s))
                .collect::<Result<_>>()?;
            moves.push(m);
        }
        graphs.push(g);
    }
    let focus = name_pair(fline, graphs[0].names(), &focus)?;
    let chain = FlipChain { graphs, moves, focus };
    for (i, (mvs, g)) in chain.moves.iter().zip(&chain.graphs[1..]).enumerate() {
        let mut cur = chain.graphs[i].clone();
        for mv in mvs {
            cur = at(blocks[i + 1].0, mv.apply(&cur))?;
        }
        if &cur != g {
            return Err(perr(blocks[i + 1].0, format!("moves of step {} do not reach the graph below", i + 1)));
        }
    }
    Ok(chain)
}

/// Unshielded triples `(x, mid, z)`.
pub type Triples = BTreeSet<(usize, usize, usize)>;

/// The pattern, then `ambiguous: (X,Y,Z); ...` (possibly empty).
pub fn render_discovery(r: &DiscoveryResult) -> String {
    let p = &r.pattern;
    let mut s = render_pattern(p);
    let t: Vec<String> =
        r.ambiguous.iter().map(|&(x, y, z)| format!("({},{},{})", p.name(x), p.name(y), p.name(z))).collect();
    let _ = writeln!(s, "ambiguous: {}", t.join("; "));
    s
}

/// Inverse of [`render_discovery`] for the pattern and the ambiguous triples.
/// An `answer:` line, as written by the command line tool, is skipped.
pub fn parse_discovery(text: &str) -> Result<(Pattern, Triples)> {
    let mut kept = String::new();
    let mut amb = None;
    for (i, raw) in text.lines().enumerate() {
        let t = raw.trim();
        if let Some(rest) = t.strip_prefix("ambiguous:") {
            amb = Some((i + 1, rest.trim().to_owned()));
        } else if !t.starts_with("answer:") {
            kept.push_str(raw);
        }
        kept.push('\n');
    }
    let p = parse_pattern(&kept)?;
    let mut set = BTreeSet::new();
    if let Some((line, rest)) = amb {
        for t in rest.split(';').map(str::trim).filter(|t| !t.is_empty()) {
            let inner = t
                .strip_prefix('(')
                .and_then(|t| t.strip_suffix(')'))
                .ok_or_else(|| perr(line, format!("bad triple `{t}`")))?;
            let v: Vec<usize> = inner.split(',').map(|n| at(line, lookup(p.names(), n.trim()))).collect::<Result<_>>()?;
            let [x, y, z] = v[..] else {
                return Err(perr(line, format!("bad triple `{t}`")));
            };
            set.insert((x, y, z));
        }
    }
    Ok((p, set))
}

/// Rounded to nine decimals so sums of tallies print cleanly.
fn num(v: f64) -> f64 {
    let r = (v * 1e9).round() / 1e9;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub const CURVES_HEADER: &str = "scenario,method,n,trials,theory,frequency";
pub const RETRACTION_HEADER: &str = "scenario,method,theory,retraction_total";

/// One row per grid point and answer.
pub fn curves_csv(scenario: &str, method: &str, c: &FrequencyCurves, header: bool) -> String {
    let mut s = String::new();
    if header {
        s.push_str(CURVES_HEADER);
        s.push('\n');
    }
    for (i, &n) in c.grid.sizes().iter().enumerate() {
        for a in OrientationAnswer::ALL {
            let _ = writeln!(s, "{scenario},{method},{n},{},{a},{}", c.trials, num(c.frequency(a, i)));
        }
    }
    s
}

/// One row per answer plus a `total` row.
pub fn retraction_csv(scenario: &str, method: &str, r: &RetractionProfile, header: bool) -> String {
    let mut s = String::new();
    if header {
        s.push_str(RETRACTION_HEADER);
        s.push('\n');
    }
    for a in OrientationAnswer::ALL {
        let _ = writeln!(s, "{scenario},{method},{a},{}", num(r.of(a)));
    }
    let _ = writeln!(s, "{scenario},{method},total,{}", num(r.total));
    s
}
