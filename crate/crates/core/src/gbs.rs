//! Weighted graphs of generalized Baumslag–Solitar groups and the two
//! valuation criteria on them.

use std::collections::VecDeque;

use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::nu_p;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GbsEdge {
    pub from: usize,
    pub to: usize,
    pub w_minus: i64,
    pub w_plus: i64,
}

/// Edge `x → y` with weights `(m, n)` means `s_x^m` is conjugate to `s_y^n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GBSGraph {
    pub vertices: Vec<String>,
    pub edges: Vec<GbsEdge>,
}

#[derive(Deserialize)]
struct GbsRepr {
    vertices: Vec<String>,
    edges: Vec<GbsEdge>,
}

impl<'de> Deserialize<'de> for GBSGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = GbsRepr::deserialize(d)?;
        GBSGraph::new(r.vertices, r.edges).map_err(serde::de::Error::custom)
    }
}

/// An edge traversed forwards or backwards. Traversing backwards swaps the
/// weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Oriented {
    pub edge: usize,
    pub reversed: bool,
}

impl GBSGraph {
    pub fn new(vertices: Vec<String>, edges: Vec<GbsEdge>) -> Result<Self> {
        let nv = vertices.len();
        if nv == 0 {
            return Err(Error::Parse("a GBS graph needs a vertex".into()));
        }
        for (i, e) in edges.iter().enumerate() {
            if e.from >= nv || e.to >= nv {
                return Err(Error::Parse(format!("edge {i} references a missing vertex")));
            }
            if e.w_minus == 0 || e.w_plus == 0 {
                return Err(Error::Parse(format!("edge {i} has a zero weight")));
            }
        }
        let g = GBSGraph { vertices, edges };
        let reached = g.bfs_tree(0, |_| true).0;
        if reached.iter().any(|r| r.is_none()) {
            return Err(Error::Parse("GBS graph is not connected".into()));
        }
        Ok(g)
    }

    /// Single loop for `⟨s, t | t s^n t^{-1} = s^m⟩`.
    pub fn baumslag_solitar(m: i64, n: i64) -> Result<Self> {
        GBSGraph::new(vec!["s".into()], vec![GbsEdge { from: 0, to: 0, w_minus: n, w_plus: m }])
    }

    pub fn oriented_edges(&self) -> impl Iterator<Item = Oriented> + '_ {
        (0..self.edges.len()).flat_map(|e| [false, true].map(|reversed| Oriented { edge: e, reversed }))
    }

    pub fn tail(&self, o: Oriented) -> usize {
        let e = &self.edges[o.edge];
        if o.reversed {
            e.to
        } else {
            e.from
        }
    }
    pub fn head(&self, o: Oriented) -> usize {
        let e = &self.edges[o.edge];
        if o.reversed {
            e.from
        } else {
            e.to
        }
    }
    pub fn w_minus(&self, o: Oriented) -> i64 {
        let e = &self.edges[o.edge];
        if o.reversed {
            e.w_plus
        } else {
            e.w_minus
        }
    }
    pub fn w_plus(&self, o: Oriented) -> i64 {
        let e = &self.edges[o.edge];
        if o.reversed {
            e.w_minus
        } else {
            e.w_plus
        }
    }

    /// `(ν_p(w_-(P)), ν_p(w_+(P)))` along a path.
    pub fn path_valuations(&self, path: &[Oriented], p: u64) -> (u32, u32) {
        path.iter().fold((0, 0), |(a, b), &o| {
            (a + nu_p(p, self.w_minus(o).unsigned_abs()), b + nu_p(p, self.w_plus(o).unsigned_abs()))
        })
    }

    /// Consecutive edges connect; returns the endpoints.
    pub fn path_endpoints(&self, path: &[Oriented]) -> Option<(usize, usize)> {
        let first = path.first()?;
        for w in path.windows(2) {
            if self.head(w[0]) != self.tail(w[1]) {
                return None;
            }
        }
        Some((self.tail(*first), self.head(*path.last().unwrap())))
    }

    /// BFS from `root` along oriented edges accepted by `keep`: reached flags
    /// and the edge used to reach each vertex.
    fn bfs_tree(&self, root: usize, keep: impl Fn(Oriented) -> bool) -> (Vec<Option<usize>>, Vec<Option<Oriented>>) {
        self.bfs_multi(&[root], keep)
    }

    fn bfs_multi(&self, roots: &[usize], keep: impl Fn(Oriented) -> bool) -> (Vec<Option<usize>>, Vec<Option<Oriented>>) {
        let nv = self.vertices.len();
        let mut dist = vec![None; nv];
        let mut via = vec![None; nv];
        let mut queue = VecDeque::new();
        for &r in roots {
            if dist[r].is_none() {
                dist[r] = Some(0);
                queue.push_back(r);
            }
        }
        let oriented: Vec<Oriented> = self.oriented_edges().collect();
        while let Some(x) = queue.pop_front() {
            for &o in &oriented {
                if self.tail(o) == x && keep(o) {
                    let y = self.head(o);
                    if dist[y].is_none() {
                        dist[y] = Some(dist[x].unwrap() + 1);
                        via[y] = Some(o);
                        queue.push_back(y);
                    }
                }
            }
        }
        (dist, via)
    }

    fn path_to(via: &[Option<Oriented>], g: &GBSGraph, target: usize) -> Vec<Oriented> {
        let mut path = Vec::new();
        let mut y = target;
        while let Some(o) = via[y] {
            path.push(o);
            y = g.tail(o);
        }
        path.reverse();
        path
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PifreeReport {
    pub met: bool,
    /// Closed paths with `ν_p(w_-) = 0 < ν_p(w_+)`.
    pub cycles: Vec<Vec<Oriented>>,
    /// Per vertex: a path from a cycle vertex with `ν_p(w_+) = 0`
    /// (empty when the vertex lies on a cycle).
    pub access_paths: Vec<Option<Vec<Oriented>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VpfreeReport {
    pub met: bool,
    pub cycle: Option<Vec<Oriented>>,
    /// `ν_p(w_+(C)) - ν_p(w_-(C))` along the witness.
    pub valuation_difference: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateClass {
    Optimal,
    Linear,
    Quadratic,
    None,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionReport {
    pub p: u64,
    pub pifree: PifreeReport,
    pub vpfree: VpfreeReport,
    /// Strongest estimate implied by the criteria met.
    pub estimate: EstimateClass,
}

/// Cycles are searched in the subgraph `H` of oriented edges with
/// `ν_p(w_-) = 0`: a qualifying closed path exists iff some strongly
/// connected component of `H` contains an edge with `ν_p(w_+) > 0`.
pub fn check_pifree_criterion(g: &GBSGraph, p: u64) -> PifreeReport {
    let nv = g.vertices.len();
    let vm = |o: Oriented| nu_p(p, g.w_minus(o).unsigned_abs());
    let vp = |o: Oriented| nu_p(p, g.w_plus(o).unsigned_abs());
    let h_edges: Vec<Oriented> = g.oriented_edges().filter(|&o| vm(o) == 0).collect();

    let mut dg: DiGraph<(), ()> = DiGraph::new();
    let nodes: Vec<_> = (0..nv).map(|_| dg.add_node(())).collect();
    for &o in &h_edges {
        dg.add_edge(nodes[g.tail(o)], nodes[g.head(o)], ());
    }
    let mut comp = vec![usize::MAX; nv];
    for (ci, scc) in kosaraju_scc(&dg).iter().enumerate() {
        for n in scc {
            comp[n.index()] = ci;
        }
    }

    let mut cycles = Vec::new();
    let mut done_comp = Vec::new();
    let mut on_cycle = vec![false; nv];
    for &o in &h_edges {
        let (x, y) = (g.tail(o), g.head(o));
        if vp(o) > 0 && comp[x] == comp[y] && !done_comp.contains(&comp[x]) {
            done_comp.push(comp[x]);
            let (_, via) = g.bfs_tree(y, |e| vm(e) == 0);
            let mut cycle = vec![o];
            cycle.extend(GBSGraph::path_to(&via, g, x));
            for v in 0..nv {
                if comp[v] == comp[x] {
                    on_cycle[v] = true;
                }
            }
            cycles.push(cycle);
        }
    }
    if cycles.is_empty() {
        return PifreeReport { met: false, cycles, access_paths: vec![None; nv] };
    }
    let roots: Vec<usize> = (0..nv).filter(|&v| on_cycle[v]).collect();
    let (dist, via) = g.bfs_multi(&roots, |o| vp(o) == 0);
    let access_paths: Vec<_> = (0..nv).map(|v| dist[v].map(|_| GBSGraph::path_to(&via, g, v))).collect();
    PifreeReport { met: access_paths.iter().all(|a| a.is_some()), cycles, access_paths }
}

/// `d(e) = ν_p(w_+(e)) - ν_p(w_-(e))` is a coboundary iff every closed path
/// has `ν_p(w_-) = ν_p(w_+)`; checked with spanning-tree potentials.
pub fn check_vpfree_criterion(g: &GBSGraph, p: u64) -> VpfreeReport {
    let d = |o: Oriented| nu_p(p, g.w_plus(o).unsigned_abs()) as i64 - nu_p(p, g.w_minus(o).unsigned_abs()) as i64;
    let (_, via) = g.bfs_tree(0, |_| true);
    let nv = g.vertices.len();
    let mut pot = vec![0i64; nv];
    let mut order: Vec<usize> = (0..nv).collect();
    let depth = |v: usize| GBSGraph::path_to(&via, g, v).len();
    order.sort_by_key(|&v| depth(v));
    for &v in &order {
        if let Some(o) = via[v] {
            pot[v] = pot[g.tail(o)] + d(o);
        }
    }
    let tree: Vec<usize> = via.iter().flatten().map(|o| o.edge).collect();
    for e in 0..g.edges.len() {
        if tree.contains(&e) {
            continue;
        }
        let o = Oriented { edge: e, reversed: false };
        let (x, y) = (g.tail(o), g.head(o));
        let diff = pot[x] + d(o) - pot[y];
        if diff != 0 {
            // x -e-> y, then back along the tree: y up to the root, root down to x.
            let mut cycle = vec![o];
            let up: Vec<Oriented> = GBSGraph::path_to(&via, g, y)
                .into_iter()
                .rev()
                .map(|o| Oriented { edge: o.edge, reversed: !o.reversed })
                .collect();
            cycle.extend(up);
            cycle.extend(GBSGraph::path_to(&via, g, x));
            let (a, b) = g.path_valuations(&cycle, p);
            return VpfreeReport { met: true, cycle: Some(cycle), valuation_difference: b as i64 - a as i64 };
        }
    }
    VpfreeReport { met: false, cycle: None, valuation_difference: 0 }
}

pub fn criterion_report(g: &GBSGraph, p: u64) -> CriterionReport {
    let pifree = check_pifree_criterion(g, p);
    let vpfree = check_vpfree_criterion(g, p);
    let estimate = if pifree.met {
        EstimateClass::Optimal
    } else if vpfree.met {
        EstimateClass::Linear
    } else {
        EstimateClass::None
    };
    CriterionReport { p, pifree, vpfree, estimate }
}

/// Per-vertex bound on `ν_p` of the order of `s_v` in finite quotients.
/// Zero under the first criterion; under the second, vertices on the witness
/// cycle get `min(ν_p(w_-(C)), ν_p(w_+(C)))` and an edge `x → y` adds
/// `ν_p(w_+)`; the least such bound is taken.
pub fn gbs_vertex_order_bound(g: &GBSGraph, p: u64, report: &CriterionReport) -> Result<Vec<u32>> {
    let nv = g.vertices.len();
    if report.pifree.met {
        return Ok(vec![0; nv]);
    }
    let cycle = match (&report.vpfree.met, &report.vpfree.cycle) {
        (true, Some(c)) => c,
        _ => return Err(Error::CriterionNotMet(format!("neither criterion holds at p = {p}"))),
    };
    let (a, b) = g.path_valuations(cycle, p);
    let start = a.min(b);
    let mut best = vec![u32::MAX; nv];
    for &o in cycle {
        best[g.tail(o)] = start;
    }
    // Bellman–Ford style relaxation; weights are non-negative and the graph is tiny.
    let oriented: Vec<Oriented> = g.oriented_edges().collect();
    for _ in 0..nv {
        for &o in &oriented {
            let (x, y) = (g.tail(o), g.head(o));
            if best[x] != u32::MAX {
                let cand = best[x] + nu_p(p, g.w_plus(o).unsigned_abs());
                if cand < best[y] {
                    best[y] = cand;
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baumslag_solitar_table() {
        let cases = [(2, 3, 2, true, true), (2, 3, 3, true, true), (2, 3, 5, false, false), (4, 6, 2, false, true), (2, 2, 2, false, false), (3, 6, 3, false, false)];
        for (m, n, p, pi, vp) in cases {
            let g = GBSGraph::baumslag_solitar(m, n).unwrap();
            let r = criterion_report(&g, p);
            assert_eq!((r.pifree.met, r.vpfree.met), (pi, vp), "BS({m},{n}) p={p}");
        }
    }

    #[test]
    fn vertex_bounds() {
        let g = GBSGraph::baumslag_solitar(4, 6).unwrap();
        let r = criterion_report(&g, 2);
        assert_eq!(gbs_vertex_order_bound(&g, 2, &r).unwrap(), vec![1]);
        let g = GBSGraph::baumslag_solitar(2, 3).unwrap();
        let r = criterion_report(&g, 3);
        assert_eq!(gbs_vertex_order_bound(&g, 3, &r).unwrap(), vec![0]);
        let g = GBSGraph::baumslag_solitar(2, 2).unwrap();
        let r = criterion_report(&g, 2);
        assert!(matches!(gbs_vertex_order_bound(&g, 2, &r), Err(Error::CriterionNotMet(_))));
    }

    #[test]
    fn tree_has_no_cycles() {
        let g = GBSGraph::new(vec!["a".into(), "b".into()], vec![GbsEdge { from: 0, to: 1, w_minus: 2, w_plus: 4 }]).unwrap();
        assert!(!check_vpfree_criterion(&g, 2).met);
        assert!(!check_pifree_criterion(&g, 2).met);
    }
}
