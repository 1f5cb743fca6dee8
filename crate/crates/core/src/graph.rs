//! Graphs of groups over an ambient presentation, and their repair: lift each
//! vertex group, then conjugate across tree edges and correct the stable
//! letters of the remaining edges.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbs::GBSGraph;
use crate::lifting::{conjugate_homs, lift_images, LedgerStep, PrecisionLedger, RepairOptions};
use crate::matrix::UMatrix;
use crate::presentation::{ApproxRep, Presentation, PresentationRepr, Word};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexGroup {
    pub presentation: Presentation,
    /// Ambient generator index of each vertex generator.
    pub generator_map: Vec<usize>,
}

/// Edge group generators `x_i` with `t φ(src_i) t^{-1} = φ(tgt_i)`, where
/// `t` is the stable letter, or the identity for tree edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GogEdge {
    pub source: usize,
    pub target: usize,
    pub edge_words: Vec<(Word, Word)>,
    pub letter: Option<usize>,
    pub in_tree: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphOfGroups {
    pub presentation: Presentation,
    pub vertices: Vec<VertexGroup>,
    pub edges: Vec<GogEdge>,
}

#[derive(Serialize, Deserialize)]
struct VertexRepr {
    presentation: PresentationRepr,
    generator_map: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct EdgeRepr {
    source: usize,
    target: usize,
    edge_words: Vec<[Vec<String>; 2]>,
    letter: Option<usize>,
    in_tree: bool,
}

#[derive(Serialize, Deserialize)]
struct GogRepr {
    presentation: PresentationRepr,
    vertices: Vec<VertexRepr>,
    edges: Vec<EdgeRepr>,
}

impl Serialize for GraphOfGroups {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let names = &self.presentation.generators;
        GogRepr {
            presentation: self.presentation.to_repr(),
            vertices: self
                .vertices
                .iter()
                .map(|v| VertexRepr { presentation: v.presentation.to_repr(), generator_map: v.generator_map.clone() })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRepr {
                    source: e.source,
                    target: e.target,
                    edge_words: e.edge_words.iter().map(|(a, b)| [a.to_strings(names), b.to_strings(names)]).collect(),
                    letter: e.letter,
                    in_tree: e.in_tree,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GraphOfGroups {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = GogRepr::deserialize(d)?;
        let build = || -> Result<GraphOfGroups> {
            let presentation = Presentation::from_repr(r.presentation)?;
            let names = presentation.generators.clone();
            let vertices = r
                .vertices
                .into_iter()
                .map(|v| Ok(VertexGroup { presentation: Presentation::from_repr(v.presentation)?, generator_map: v.generator_map }))
                .collect::<Result<Vec<_>>>()?;
            let edges = r
                .edges
                .into_iter()
                .map(|e| {
                    let words = e
                        .edge_words
                        .iter()
                        .map(|[a, b]| Ok((Word::parse(a, &names)?, Word::parse(b, &names)?)))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(GogEdge { source: e.source, target: e.target, edge_words: words, letter: e.letter, in_tree: e.in_tree })
                })
                .collect::<Result<Vec<_>>>()?;
            GraphOfGroups::new(presentation, vertices, edges)
        };
        build().map_err(serde::de::Error::custom)
    }
}

impl GraphOfGroups {
    pub fn new(presentation: Presentation, vertices: Vec<VertexGroup>, edges: Vec<GogEdge>) -> Result<Self> {
        let ng = presentation.num_generators();
        let nv = vertices.len();
        if nv == 0 {
            return Err(Error::Parse("graph of groups without vertices".into()));
        }
        for v in &vertices {
            if v.generator_map.len() != v.presentation.num_generators() || v.generator_map.iter().any(|&g| g >= ng) {
                return Err(Error::Parse("vertex generator map does not match the presentations".into()));
            }
        }
        for (i, e) in edges.iter().enumerate() {
            if e.source >= nv || e.target >= nv {
                return Err(Error::Parse(format!("edge {i} references a missing vertex")));
            }
            if !e.in_tree && e.letter.is_none() {
                return Err(Error::Parse(format!("edge {i} is outside the tree but has no stable letter")));
            }
            if e.letter.is_some_and(|l| l >= ng) {
                return Err(Error::Parse(format!("edge {i} letter is not an ambient generator")));
            }
        }
        let tree: Vec<&GogEdge> = edges.iter().filter(|e| e.in_tree).collect();
        if tree.len() + 1 != nv {
            return Err(Error::Parse(format!("{} tree edges for {nv} vertices", tree.len())));
        }
        let g = GraphOfGroups { presentation, vertices, edges };
        if g.tree_order().len() != nv - 1 {
            return Err(Error::Parse("tree edges do not span the graph".into()));
        }
        Ok(g)
    }

    /// Tree edges in BFS order from vertex 0, as `(edge, parent, child)`.
    pub fn tree_order(&self) -> Vec<(usize, usize, usize)> {
        let nv = self.vertices.len();
        let mut seen = vec![false; nv];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        let mut out = Vec::new();
        while let Some(u) = queue.pop_front() {
            for (i, e) in self.edges.iter().enumerate() {
                if !e.in_tree {
                    continue;
                }
                let other = if e.source == u {
                    e.target
                } else if e.target == u {
                    e.source
                } else {
                    continue;
                };
                if !seen[other] {
                    seen[other] = true;
                    out.push((i, u, other));
                    queue.push_back(other);
                }
            }
        }
        out
    }

    /// Standard presentation of a GBS group: generator `s_v` per vertex, a
    /// stable letter per edge outside a BFS spanning tree, relators
    /// `t s_x^{w_-} t^{-1} s_y^{-w_+}` (with `t = 1` on tree edges).
    pub fn from_gbs(g: &GBSGraph) -> Result<Self> {
        let nv = g.vertices.len();
        let mut seen = vec![false; nv];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        let mut in_tree = vec![false; g.edges.len()];
        while let Some(u) = queue.pop_front() {
            for (i, e) in g.edges.iter().enumerate() {
                let other = if e.from == u {
                    e.to
                } else if e.to == u {
                    e.from
                } else {
                    continue;
                };
                if !seen[other] {
                    seen[other] = true;
                    in_tree[i] = true;
                    queue.push_back(other);
                }
            }
        }
        let non_tree = in_tree.iter().filter(|t| !**t).count();
        let vname = |v: usize| if nv == 1 { "s".to_string() } else { format!("s{v}") };
        let mut generators: Vec<String> = (0..nv).map(vname).collect();
        let mut relators = Vec::new();
        let mut edges = Vec::new();
        for (i, e) in g.edges.iter().enumerate() {
            let src = Word::gen(e.from).pow(e.w_minus);
            let tgt = Word::gen(e.to).pow(e.w_plus);
            let letter = if in_tree[i] {
                None
            } else {
                generators.push(if non_tree == 1 { "t".to_string() } else { format!("t{i}") });
                Some(generators.len() - 1)
            };
            let lhs = match letter {
                Some(t) => Word::conjugate(&Word::gen(t), &src),
                None => src.clone(),
            };
            relators.push(lhs.concat(&tgt.inverse()));
            edges.push(GogEdge { source: e.from, target: e.to, edge_words: vec![(src, tgt)], letter, in_tree: in_tree[i] });
        }
        let vertices = (0..nv)
            .map(|v| VertexGroup { presentation: Presentation::free(&[&vname(v)]), generator_map: vec![v] })
            .collect();
        GraphOfGroups::new(Presentation::new(generators, relators)?, vertices, edges)
    }

    pub fn baumslag_solitar(m: i64, n: i64) -> Result<Self> {
        GraphOfGroups::from_gbs(&GBSGraph::baumslag_solitar(m, n)?)
    }
}

fn eval_all(images: &[UMatrix], words: impl Iterator<Item = Word>) -> Result<Vec<UMatrix>> {
    words.map(|w| ApproxRep::eval_on(images, &w)).collect()
}

/// Repair a representation of the fundamental group of a graph of groups.
/// The guaranteed distance valuation is `k - (max l_v + max l_e)` where the
/// `l` are p-parts of the vertex images and of the edge pair groups.
pub fn graph_repair(gog: &GraphOfGroups, rep: &ApproxRep, opts: &RepairOptions) -> Result<(ApproxRep, PrecisionLedger)> {
    if rep.presentation() != &gog.presentation {
        return Err(Error::ShapeMismatch("representation is not over the graph-of-groups presentation".into()));
    }
    let ring = rep.ring();
    let kk = ring.precision();
    let n = rep.n();
    let k_in = rep.defect_val();
    let mut images = rep.images().to_vec();
    for e in &gog.edges {
        if let (true, Some(t)) = (e.in_tree, e.letter) {
            images[t] = UMatrix::identity(ring, n);
        }
    }
    let h0 = rep.with_images(images.clone())?.defect_val();
    let mut steps: Vec<LedgerStep> = Vec::new();
    if h0 >= kk {
        let out = rep.with_images(images)?;
        let d = rep.rep_dist_val(&out)?;
        let ledger = PrecisionLedger { initial_defect_val: k_in, p_part: 0, steps, bound_val: k_in.min(d), final_distance_val: d };
        return Ok((out, ledger));
    }
    if h0 == 0 {
        return Err(Error::DefectTooLarge { required: 1, actual: 0 });
    }

    let mut l_vertex = 0;
    for (vi, v) in gog.vertices.iter().enumerate() {
        if v.generator_map.is_empty() {
            continue;
        }
        let vimgs: Vec<UMatrix> = v.generator_map.iter().map(|&g| images[g].clone()).collect();
        let (lifted, st) = lift_images(&vimgs, h0, opts, &format!("vertex {vi}"))?;
        l_vertex = l_vertex.max(st.iter().map(|s| s.p_part).max().unwrap_or(0));
        steps.extend(st);
        for (&g, m) in v.generator_map.iter().zip(lifted) {
            images[g] = m;
        }
    }

    let mut l_edge = 0;
    for (ei, parent, child) in gog.tree_order() {
        let e = &gog.edges[ei];
        if e.edge_words.is_empty() {
            continue;
        }
        let (pw, cw): (Vec<Word>, Vec<Word>) = if e.source == parent {
            e.edge_words.iter().cloned().unzip()
        } else {
            let (a, b): (Vec<Word>, Vec<Word>) = e.edge_words.iter().cloned().unzip();
            (b, a)
        };
        let psi_parent = eval_all(&images, pw.into_iter())?;
        let psi_child = eval_all(&images, cw.into_iter())?;
        let (tau, st) = conjugate_homs(&psi_child, &psi_parent, kk, opts, &format!("tree edge {ei}"))?;
        l_edge = l_edge.max(st.iter().map(|s| s.p_part).max().unwrap_or(0));
        steps.extend(st);
        for &g in &gog.vertices[child].generator_map {
            images[g] = images[g].conj(&tau)?;
        }
    }

    for (ei, e) in gog.edges.iter().enumerate() {
        if e.in_tree || e.edge_words.is_empty() {
            continue;
        }
        let t = e.letter.expect("validated");
        let (sw, tw): (Vec<Word>, Vec<Word>) = e.edge_words.iter().cloned().unzip();
        let psi1 = eval_all(&images, sw.into_iter())?.into_iter().map(|m| m.conj(&images[t])).collect::<Result<Vec<_>>>()?;
        let psi2 = eval_all(&images, tw.into_iter())?;
        let (tau, st) = conjugate_homs(&psi1, &psi2, kk, opts, &format!("edge {ei}"))?;
        l_edge = l_edge.max(st.iter().map(|s| s.p_part).max().unwrap_or(0));
        steps.extend(st);
        images[t] = tau.mul(&images[t])?;
    }

    let out = rep.with_images(images)?;
    if !out.defect().is_saturated() {
        return Err(Error::VerificationFailed(format!("graph repair left defect valuation {}", out.defect_val())));
    }
    let ledger = PrecisionLedger {
        initial_defect_val: k_in,
        p_part: l_vertex.max(l_edge),
        steps,
        bound_val: h0.min(k_in).saturating_sub(l_vertex + l_edge),
        final_distance_val: rep.rep_dist_val(&out)?,
    };
    Ok((out, ledger))
}
