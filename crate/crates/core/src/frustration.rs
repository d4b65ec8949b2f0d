//! Frustrated cycles in the support of a fractional LP solution.
//!
//! Each edge's support (configurations with non-negligible belief) is read
//! as a set of 2-SAT clauses: an absent configuration `(a, b)` on `(i, j)`
//! forbids `x_i = a ∧ x_j = b`, giving the implications `(i = a) → (j ≠ b)`
//! and `(j = b) → (i ≠ a)`. Literal `2·i + s` stands for "site `i` is in
//! state `s`"; state 0 is `i⁺`, state 1 is `i⁻`. A site whose two literals
//! share a strongly connected component is frustrated.
//!
//! A fractional vertex can have satisfiable supports.
//! [`violated_cycle_inequalities`] separates cycles directly from the edge
//! beliefs instead.

use std::collections::{HashMap, HashSet, VecDeque};
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::lp_build::{pair_config, BeliefLp, CliqueSpec};
use crate::lp_solve::LpSolution;

pub const DEFAULT_SUPPORT_TOL: f64 = 1e-7;

pub const fn literal(var: usize, state: usize) -> usize {
    2 * var + state
}

pub const fn negate(lit: usize) -> usize {
    lit ^ 1
}

fn literal_name(lit: usize) -> String {
    format!("{}{}", lit / 2, if lit & 1 == 0 { '+' } else { '-' })
}

/// Configurations of edge `(i, j)`, `i < j`, carrying belief above the
/// support tolerance. Indexed by `2·x_i + x_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SupportPattern {
    pub i: usize,
    pub j: usize,
    pub support: [bool; 4],
}

impl SupportPattern {
    /// Builds a pattern from configurations given as `(x_i, x_j)` pairs.
    pub fn new(i: usize, j: usize, configs: &[(usize, usize)]) -> Self {
        assert!(i < j, "edge endpoints must be increasing");
        let mut support = [false; 4];
        for &(a, b) in configs {
            support[pair_config(a, b)] = true;
        }
        SupportPattern { i, j, support }
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.support[pair_config(a, b)]
    }

    pub fn len(&self) -> usize {
        self.support.iter().filter(|&&s| s).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The state of `i` (first) or `j` (second) shared by every supported
    /// configuration, if any.
    fn pinned(&self) -> (Option<usize>, Option<usize>) {
        let mut first = [false; 2];
        let mut second = [false; 2];
        for a in 0..2 {
            for b in 0..2 {
                if self.contains(a, b) {
                    first[a] = true;
                    second[b] = true;
                }
            }
        }
        let pin = |seen: [bool; 2]| match seen {
            [true, false] => Some(0),
            [false, true] => Some(1),
            _ => None,
        };
        (pin(first), pin(second))
    }
}

/// One pattern per installed edge, read from the edge beliefs. Clique
/// beliefs need no separate projection: consistency rows make the edge
/// beliefs equal to the clique marginals.
pub fn extract_supports(solution: &LpSolution, lp: &BeliefLp, support_tol: f64) -> Vec<SupportPattern> {
    lp.edges()
        .iter()
        .enumerate()
        .map(|(e, info)| {
            let b = lp.edge_beliefs(e, &solution.beliefs);
            SupportPattern {
                i: info.i,
                j: info.j,
                support: b.map(|v| v > support_tol),
            }
        })
        .collect()
}

/// Pairwise support constraints keyed by ordered edge.
#[derive(Clone, Debug, Default)]
pub struct SupportSystem {
    patterns: HashMap<(usize, usize), [bool; 4]>,
}

impl SupportSystem {
    pub fn new(supports: &[SupportPattern]) -> Self {
        SupportSystem {
            patterns: supports.iter().map(|p| ((p.i, p.j), p.support)).collect(),
        }
    }

    /// Whether `x_u = a, x_v = b` is allowed; pairs without a pattern are
    /// unconstrained.
    pub fn allowed(&self, u: usize, a: usize, v: usize, b: usize) -> bool {
        let (key, config) = if u < v {
            ((u, v), pair_config(a, b))
        } else {
            ((v, u), pair_config(b, a))
        };
        self.patterns.get(&key).is_none_or(|s| s[config])
    }

    pub fn satisfied_by(&self, states: &[usize]) -> bool {
        self.patterns
            .iter()
            .all(|(&(i, j), s)| s[pair_config(states[i], states[j])])
    }

    /// Whether the constraints on consecutive pairs of `cycle` (closing back
    /// to the first site) admit a common assignment.
    pub fn cycle_satisfiable(&self, cycle: &[usize]) -> bool {
        let k = cycle.len();
        // Boolean transfer matrix around the cycle; satisfiable iff its trace
        // is nonzero.
        let mut reach = [[true, false], [false, true]];
        for t in 0..k {
            let (u, v) = (cycle[t], cycle[(t + 1) % k]);
            let mut next = [[false; 2]; 2];
            for (s, row) in reach.iter().enumerate() {
                for (a, &on) in row.iter().enumerate() {
                    if on {
                        for b in 0..2 {
                            if self.allowed(u, a, v, b) {
                                next[s][b] = true;
                            }
                        }
                    }
                }
            }
            reach = next;
        }
        reach[0][0] || reach[1][1]
    }

    /// Whether the constraints on every edge of the fan triangulation of
    /// `cycle` (cycle edges plus chords from its lowest site) admit a common
    /// assignment.
    pub fn fan_satisfiable(&self, cycle: &[usize]) -> bool {
        let order = fan_order(cycle);
        let hub = order[0];
        (0..2).any(|s| {
            let mut reach = [false; 2];
            for b in 0..2 {
                reach[b] = self.allowed(hub, s, order[1], b);
            }
            for m in 1..order.len() - 1 {
                let mut next = [false; 2];
                for b in 0..2 {
                    next[b] = self.allowed(hub, s, order[m + 1], b)
                        && (0..2).any(|a| reach[a] && self.allowed(order[m], a, order[m + 1], b));
                }
                reach = next;
            }
            reach.iter().any(|&r| r)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    /// Edge whose support produced the arc.
    pub origin: (usize, usize),
}

#[derive(Clone, Debug)]
pub struct ImplicationGraph {
    num_vars: usize,
    arcs: Vec<Arc>,
    adjacency: Vec<Vec<usize>>,
    system: SupportSystem,
}

pub fn build_implication_graph(num_vars: usize, supports: &[SupportPattern]) -> ImplicationGraph {
    let mut arcs = Vec::new();
    let mut seen = HashSet::new();
    let mut add = |from: usize, to: usize, origin: (usize, usize)| {
        if seen.insert((from, to)) {
            arcs.push(Arc { from, to, origin });
        }
    };
    for p in supports {
        assert!(p.j < num_vars, "support references site {}", p.j);
        let origin = (p.i, p.j);
        for a in 0..2 {
            for b in 0..2 {
                if !p.contains(a, b) {
                    add(literal(p.i, a), literal(p.j, 1 - b), origin);
                    add(literal(p.j, b), literal(p.i, 1 - a), origin);
                }
            }
        }
        // Pinned sites also get the unit clause as an explicit arc.
        let (pin_i, pin_j) = p.pinned();
        if let Some(a) = pin_i {
            add(literal(p.i, 1 - a), literal(p.i, a), origin);
        }
        if let Some(b) = pin_j {
            add(literal(p.j, 1 - b), literal(p.j, b), origin);
        }
    }
    let mut adjacency = vec![Vec::new(); 2 * num_vars];
    for (k, arc) in arcs.iter().enumerate() {
        adjacency[arc.from].push(k);
    }
    ImplicationGraph {
        num_vars,
        arcs,
        adjacency,
        system: SupportSystem::new(supports),
    }
}

impl ImplicationGraph {
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn system(&self) -> &SupportSystem {
        &self.system
    }

    pub fn successors(&self, lit: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[lit].iter().map(|&k| self.arcs[k].to)
    }

    pub fn has_arc(&self, from: usize, to: usize) -> bool {
        self.successors(from).any(|t| t == to)
    }

    /// Every arc `u → v` has its partner `¬v → ¬u`.
    pub fn is_contrapositive_closed(&self) -> bool {
        self.arcs.iter().all(|a| self.has_arc(negate(a.to), negate(a.from)))
    }

    /// Strongly connected component of every literal (Tarjan).
    pub fn components(&self) -> Vec<usize> {
        let n = 2 * self.num_vars;
        const UNSEEN: usize = usize::MAX;
        let mut index = vec![UNSEEN; n];
        let mut low = vec![0; n];
        let mut comp = vec![UNSEEN; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut next_index = 0;
        let mut next_comp = 0;
        // (node, next adjacency slot)
        let mut call: Vec<(usize, usize)> = Vec::new();
        for root in 0..n {
            if index[root] != UNSEEN {
                continue;
            }
            call.push((root, 0));
            while let Some(&mut (v, ref mut slot)) = call.last_mut() {
                if *slot == 0 && index[v] == UNSEEN {
                    index[v] = next_index;
                    low[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                }
                if let Some(&k) = self.adjacency[v].get(*slot) {
                    *slot += 1;
                    let w = self.arcs[k].to;
                    if index[w] == UNSEEN {
                        call.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                    continue;
                }
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("component root is on the stack");
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
        comp
    }

    /// Sites whose two literals lie in one component.
    pub fn frustrated_variables(&self) -> Vec<usize> {
        let comp = self.components();
        (0..self.num_vars)
            .filter(|&i| comp[literal(i, 0)] == comp[literal(i, 1)])
            .collect()
    }

    /// Shortest literal path `from ⇝ to`, both ends included.
    fn shortest_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        const NONE: usize = usize::MAX;
        let mut parent = vec![NONE; 2 * self.num_vars];
        parent[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            if u == to {
                let mut path = vec![to];
                let mut v = to;
                while v != from {
                    v = parent[v];
                    path.push(v);
                }
                path.reverse();
                return Some(path);
            }
            for w in self.successors(u) {
                if parent[w] == NONE {
                    parent[w] = u;
                    queue.push_back(w);
                }
            }
        }
        None
    }

    /// Literal path `from ⇝ to` along the tree of an iterative depth-first
    /// search that visits successors in arc order.
    fn depth_first_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut visited = vec![false; 2 * self.num_vars];
        visited[from] = true;
        let mut stack: Vec<(usize, usize)> = vec![(from, 0)];
        while let Some(&mut (u, ref mut slot)) = stack.last_mut() {
            if u == to {
                return Some(stack.iter().map(|&(v, _)| v).collect());
            }
            if let Some(&k) = self.adjacency[u].get(*slot) {
                *slot += 1;
                let w = self.arcs[k].to;
                if !visited[w] {
                    visited[w] = true;
                    stack.push((w, 0));
                }
            } else {
                stack.pop();
            }
        }
        None
    }

    /// Writes the graph in Graphviz DOT format; literal nodes are named
    /// `"{site}+"` and `"{site}-"`, arcs are labelled with their source edge.
    pub fn write_dot<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "digraph implications {{")?;
        for lit in 0..2 * self.num_vars {
            if !self.adjacency[lit].is_empty() {
                writeln!(out, "  \"{}\";", literal_name(lit))?;
            }
        }
        for a in &self.arcs {
            writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{},{}\"];",
                literal_name(a.from),
                literal_name(a.to),
                a.origin.0,
                a.origin.1
            )?;
        }
        writeln!(out, "}}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrustratedCycle {
    /// Sites in cyclic order; consecutive sites share a support edge.
    pub variables: Vec<usize>,
    /// Literal walk `i⁺ ⇝ i⁻ ⇝ i⁺` through which the cycle was found.
    pub witness: Vec<usize>,
}

/// Splits a closed walk over sites into the simple cycles it traverses.
fn simple_cycles(walk: &[usize]) -> Vec<Vec<usize>> {
    let mut cycles = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut position: HashMap<usize, usize> = HashMap::new();
    for &v in walk {
        if let Some(&p) = position.get(&v) {
            let cycle: Vec<usize> = stack[p..].to_vec();
            for u in stack.drain(p + 1..) {
                position.remove(&u);
            }
            if cycle.len() >= 2 {
                cycles.push(cycle);
            }
        } else {
            position.insert(v, stack.len());
            stack.push(v);
        }
    }
    cycles
}

/// How witness paths between the two literals of a site are searched.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum WitnessSearch {
    /// Breadth-first: shortest literal paths.
    #[default]
    Shortest,
    /// The tree path of a depth-first search.
    DepthFirst,
}

/// Which simple cycles of a witness walk are kept.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum CycleSelection {
    /// Cycles unsatisfiable on their own; all cycles when there are none.
    #[default]
    PreferFrustrated,
    All,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CycleSearch {
    pub witness: WitnessSearch,
    pub selection: CycleSelection,
}

/// [`find_frustrated_cycles_with`] under the default search.
pub fn find_frustrated_cycles(graph: &ImplicationGraph) -> Vec<FrustratedCycle> {
    find_frustrated_cycles_with(graph, CycleSearch::default())
}

/// One witness per frustrated site, broken into simple site cycles of
/// length at least three and filtered per `search.selection`. Cycles with
/// the same site set are reported once.
pub fn find_frustrated_cycles_with(graph: &ImplicationGraph, search: CycleSearch) -> Vec<FrustratedCycle> {
    let mut out = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let path = |from, to| match search.witness {
        WitnessSearch::Shortest => graph.shortest_path(from, to),
        WitnessSearch::DepthFirst => graph.depth_first_path(from, to),
    };
    for i in graph.frustrated_variables() {
        let (plus, minus) = (literal(i, 0), literal(i, 1));
        let (Some(there), Some(back)) = (path(plus, minus), path(minus, plus)) else {
            continue;
        };
        let mut witness = there;
        witness.extend_from_slice(&back[1..]);
        let mut walk: Vec<usize> = witness.iter().map(|&l| l / 2).collect();
        walk.dedup();
        let cycles: Vec<Vec<usize>> = simple_cycles(&walk).into_iter().filter(|c| c.len() >= 3).collect();
        let frustrated: Vec<&Vec<usize>> = match search.selection {
            CycleSelection::PreferFrustrated => cycles
                .iter()
                .filter(|c| !graph.system().cycle_satisfiable(c))
                .collect(),
            CycleSelection::All => Vec::new(),
        };
        let chosen: Vec<&Vec<usize>> = if frustrated.is_empty() {
            cycles.iter().collect()
        } else {
            frustrated
        };
        for c in chosen {
            let mut key = c.clone();
            key.sort_unstable();
            if seen.insert(key) {
                out.push(FrustratedCycle {
                    variables: c.clone(),
                    witness: witness.clone(),
                });
            }
        }
    }
    out
}

/// Smallest left-hand side of the cycle inequalities of `cycle`,
/// `min over odd F ⊆ C of Σ_F (1 − d_e) + Σ_{C∖F} d_e`, where `d_e` is the
/// disagreement mass of edge `e`. Valid beliefs give at least 1.
fn cycle_inequality_lhs(cycle: &[usize], disagreement: &HashMap<(usize, usize), f64>) -> f64 {
    let k = cycle.len();
    let mut total = 0.0;
    let mut parity = 0;
    let mut min_penalty = f64::INFINITY;
    for t in 0..k {
        let (u, v) = (cycle[t], cycle[(t + 1) % k]);
        let d = disagreement.get(&(u.min(v), u.max(v))).copied().unwrap_or(0.5);
        let (keep, flip) = (d, 1.0 - d);
        if flip < keep {
            total += flip;
            parity ^= 1;
        } else {
            total += keep;
        }
        min_penalty = min_penalty.min((keep - flip).abs());
    }
    if parity == 1 {
        total
    } else {
        total + min_penalty
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Cycles of at most `max_len` sites over installed edges whose cycle
/// inequality is violated by more than `min_violation` at `beliefs`.
/// Searched as closed odd-parity walks in the doubled graph: from each
/// source, the cheapest walk that returns through each incident edge.
/// Reported cycles carry an empty witness.
pub fn violated_cycle_inequalities(
    lp: &BeliefLp,
    beliefs: &[f64],
    min_violation: f64,
    max_len: usize,
) -> Vec<FrustratedCycle> {
    let sites = lp.num_sites();
    let mut disagreement = HashMap::new();
    let mut neighbors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); sites];
    for (e, info) in lp.edges().iter().enumerate() {
        let b = lp.edge_beliefs(e, beliefs);
        let d = (b[pair_config(0, 1)] + b[pair_config(1, 0)]).clamp(0.0, 1.0);
        disagreement.insert((info.i, info.j), d);
        neighbors[info.i].push((info.j, d));
        neighbors[info.j].push((info.i, d));
    }
    let bound = 1.0 - min_violation;
    // Node 2·v + p: site v reached with parity p.
    let mut out = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    const NONE: usize = usize::MAX;
    for source in 0..sites {
        let mut dist = vec![f64::INFINITY; 2 * sites];
        let mut parent = vec![NONE; 2 * sites];
        let start = 2 * source;
        dist[start] = 0.0;
        let mut heap = std::collections::BinaryHeap::from([HeapItem(0.0, start)]);
        while let Some(HeapItem(du, u)) = heap.pop() {
            if du > dist[u] || du >= bound || u / 2 == source && u != start {
                continue;
            }
            let (v, p) = (u / 2, u & 1);
            for &(w, d) in &neighbors[v] {
                for (q, cost) in [(p, d), (p ^ 1, 1.0 - d)] {
                    let node = 2 * w + q;
                    let nd = du + cost;
                    if nd < dist[node] {
                        dist[node] = nd;
                        parent[node] = u;
                        heap.push(HeapItem(nd, node));
                    }
                }
            }
        }
        // Closed walks, keyed by the parity node of the last site before
        // returning to the source.
        let mut ends = Vec::new();
        for &(w, d) in &neighbors[source] {
            for (q, closing) in [(0, 1.0 - d), (1, d)] {
                let node = 2 * w + q;
                if dist[node] + closing < bound && parent[node] != start {
                    ends.push(node);
                }
            }
        }
        for end in ends {
            let mut walk = vec![source];
            let mut node = end;
            while node != start {
                walk.push(node / 2);
                node = parent[node];
            }
            walk.push(source);
            walk.dedup();
            for c in simple_cycles(&walk) {
                if c.len() < 3 || c.len() > max_len || cycle_inequality_lhs(&c, &disagreement) >= bound {
                    continue;
                }
                let mut key = c.clone();
                key.sort_unstable();
                if seen.insert(key) {
                    out.push(FrustratedCycle {
                        variables: c,
                        witness: Vec::new(),
                    });
                }
            }
        }
    }
    out
}

/// The cycle rotated to start at its lowest site, direction preserved.
fn fan_order(cycle: &[usize]) -> Vec<usize> {
    let start = (0..cycle.len()).min_by_key(|&t| cycle[t]).unwrap_or(0);
    cycle[start..].iter().chain(&cycle[..start]).copied().collect()
}

/// Fan triangulation from the lowest site `v₁`: triangles
/// `{v₁, v_m, v_{m+1}}` for `m = 2..k−1`.
pub fn triangulate_cycle(cycle: &FrustratedCycle) -> Result<Vec<CliqueSpec>> {
    let k = cycle.variables.len();
    let distinct: HashSet<_> = cycle.variables.iter().collect();
    if k < 3 || distinct.len() != k {
        return Err(Error::DegenerateCycle(k));
    }
    let order = fan_order(&cycle.variables);
    (1..k - 1)
        .map(|m| CliqueSpec::triangle(order[0], order[m], order[m + 1]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn xor(i: usize, j: usize) -> SupportPattern {
        SupportPattern::new(i, j, &[(0, 1), (1, 0)])
    }

    fn equal(i: usize, j: usize) -> SupportPattern {
        SupportPattern::new(i, j, &[(0, 0), (1, 1)])
    }

    fn brute_force_satisfiable(num_vars: usize, supports: &[SupportPattern]) -> bool {
        (0..1usize << num_vars).any(|code| {
            supports
                .iter()
                .all(|p| p.contains(code >> p.i & 1, code >> p.j & 1))
        })
    }

    #[test]
    fn three_element_support_gives_two_arcs() {
        let p = SupportPattern::new(0, 1, &[(0, 1), (1, 0), (1, 1)]);
        let g = build_implication_graph(2, &[p]);
        let arcs: HashSet<(usize, usize)> = g.arcs().iter().map(|a| (a.from, a.to)).collect();
        let expect: HashSet<(usize, usize)> = [(literal(0, 0), literal(1, 1)), (literal(1, 0), literal(0, 1))].into();
        assert_eq!(arcs, expect);
    }

    #[test]
    fn equality_support_gives_four_arcs() {
        let g = build_implication_graph(2, &[equal(0, 1)]);
        let arcs: HashSet<(usize, usize)> = g.arcs().iter().map(|a| (a.from, a.to)).collect();
        let expect: HashSet<(usize, usize)> = [(0, 2), (2, 0), (1, 3), (3, 1)].into();
        assert_eq!(arcs, expect);
        let full = SupportPattern::new(0, 1, &[(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert!(build_implication_graph(2, &[full]).arcs().is_empty());
    }

    #[test]
    fn arcs_match_clause_encoding() {
        // Clause (¬(i=a) ∨ ¬(j=b)) per absent configuration.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let mask: u8 = rng.random_range(1..16);
            let configs: Vec<(usize, usize)> = (0..4).filter(|c| mask >> c & 1 == 1).map(|c| (c / 2, c % 2)).collect();
            let p = SupportPattern::new(0, 1, &configs);
            let g = build_implication_graph(2, &[p]);
            assert!(g.is_contrapositive_closed());
            for u in 0..4 {
                for v in 0..4 {
                    if u / 2 == v / 2 {
                        continue;
                    }
                    // u → v is entailed iff (u ∧ ¬v) is impossible.
                    let (a, b) = if u < v { (u & 1, negate(v) & 1) } else { (negate(v) & 1, u & 1) };
                    assert_eq!(g.has_arc(u, v), !p.contains(a, b), "mask {mask} arc {u}->{v}");
                }
            }
        }
    }

    #[test]
    fn pinned_support_adds_unit_arc() {
        let p = SupportPattern::new(0, 1, &[(0, 0), (0, 1)]);
        let g = build_implication_graph(2, &[p]);
        assert!(g.has_arc(literal(0, 1), literal(0, 0)));
        assert!(g.is_contrapositive_closed());
        assert!(g.frustrated_variables().is_empty());
    }

    #[test]
    fn odd_antiferromagnetic_triangle_is_frustrated() {
        let g = build_implication_graph(3, &[xor(0, 1), xor(1, 2), xor(0, 2)]);
        let cycles = find_frustrated_cycles(&g);
        assert_eq!(cycles.len(), 1);
        let mut vars = cycles[0].variables.clone();
        vars.sort_unstable();
        assert_eq!(vars, vec![0, 1, 2]);
        let w = &cycles[0].witness;
        assert_eq!(w.first(), w.last());
        assert!(w.contains(&negate(w[0])));
    }

    #[test]
    fn even_parity_triangle_is_not_frustrated() {
        let g = build_implication_graph(3, &[xor(0, 1), xor(1, 2), equal(0, 2)]);
        assert!(find_frustrated_cycles(&g).is_empty());
        assert!(brute_force_satisfiable(3, &[xor(0, 1), xor(1, 2), equal(0, 2)]));
    }

    #[test]
    fn frustration_verdict_matches_satisfiability() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xf00d);
        for case in 0..300 {
            let vars = rng.random_range(3..=10);
            let mut supports = Vec::new();
            for i in 0..vars {
                for j in i + 1..vars {
                    if rng.random_bool(0.35) {
                        let mask: u8 = rng.random_range(1..16);
                        let configs: Vec<(usize, usize)> =
                            (0..4).filter(|c| mask >> c & 1 == 1).map(|c| (c / 2, c % 2)).collect();
                        supports.push(SupportPattern::new(i, j, &configs));
                    }
                }
            }
            let g = build_implication_graph(vars, &supports);
            assert_eq!(
                g.frustrated_variables().is_empty(),
                brute_force_satisfiable(vars, &supports),
                "case {case}"
            );
        }
    }

    #[test]
    fn fan_triangulation() {
        let c = |v: Vec<usize>| FrustratedCycle {
            variables: v,
            witness: Vec::new(),
        };
        let tri = triangulate_cycle(&c(vec![4, 2, 7])).unwrap();
        assert_eq!(tri, vec![CliqueSpec::triangle(2, 4, 7).unwrap()]);
        let quad = triangulate_cycle(&c(vec![5, 1, 3, 9])).unwrap();
        assert_eq!(
            quad,
            vec![CliqueSpec::triangle(1, 3, 9).unwrap(), CliqueSpec::triangle(1, 5, 9).unwrap()]
        );
        for k in 3..12 {
            let cycle: Vec<usize> = (0..k).map(|t| (t * 7 + 3) % 13).collect();
            let tris = triangulate_cycle(&c(cycle.clone())).unwrap();
            assert_eq!(tris.len(), k - 2);
            let mut edges = HashSet::new();
            for t in &tris {
                let m = t.members();
                edges.extend([(m[0], m[1]), (m[0], m[2]), (m[1], m[2])]);
            }
            assert_eq!(edges.len(), k + k - 3);
            for t in 0..k {
                let (a, b) = (cycle[t], cycle[(t + 1) % k]);
                assert!(edges.contains(&(a.min(b), a.max(b))));
            }
        }
        assert!(matches!(triangulate_cycle(&c(vec![1, 2])), Err(Error::DegenerateCycle(2))));
    }

    #[test]
    fn fan_satisfiability_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..300 {
            let k = rng.random_range(3..=8);
            let cycle: Vec<usize> = {
                let mut v: Vec<usize> = (0..k).collect();
                for t in (1..k).rev() {
                    v.swap(t, rng.random_range(0..=t));
                }
                v
            };
            let mut supports = Vec::new();
            for i in 0..k {
                for j in i + 1..k {
                    let mask: u8 = rng.random_range(1..16);
                    let configs: Vec<(usize, usize)> =
                        (0..4).filter(|c| mask >> c & 1 == 1).map(|c| (c / 2, c % 2)).collect();
                    supports.push(SupportPattern::new(i, j, &configs));
                }
            }
            let tris = triangulate_cycle(&FrustratedCycle {
                variables: cycle.clone(),
                witness: Vec::new(),
            })
            .unwrap();
            let fan_edges: HashSet<(usize, usize)> = tris
                .iter()
                .flat_map(|t| {
                    let m = t.members();
                    [(m[0], m[1]), (m[0], m[2]), (m[1], m[2])]
                })
                .collect();
            let on_fan: Vec<SupportPattern> =
                supports.iter().filter(|p| fan_edges.contains(&(p.i, p.j))).copied().collect();
            let on_cycle: Vec<SupportPattern> = supports
                .iter()
                .filter(|p| (0..k).any(|t| (cycle[t].min(cycle[(t + 1) % k]), cycle[t].max(cycle[(t + 1) % k])) == (p.i, p.j)))
                .copied()
                .collect();
            let system = SupportSystem::new(&supports);
            assert_eq!(system.fan_satisfiable(&cycle), brute_force_satisfiable(k, &on_fan));
            assert_eq!(system.cycle_satisfiable(&cycle), brute_force_satisfiable(k, &on_cycle));
        }
    }

    #[test]
    fn cycle_inequality_separation_on_frustrated_triangle() {
        use crate::lp_solve::{solve, SolverParams};
        let lp = BeliefLp::from_couplings(3, &[0.0; 3], &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let sol = solve(&lp, &SolverParams::default()).unwrap();
        let cycles = violated_cycle_inequalities(&lp, &sol.beliefs, 1e-6, usize::MAX);
        assert_eq!(cycles.len(), 1);
        let mut v = cycles[0].variables.clone();
        v.sort_unstable();
        assert_eq!(v, vec![0, 1, 2]);
        assert!(violated_cycle_inequalities(&lp, &sol.beliefs, 1e-6, 2).is_empty());
        // Integral beliefs violate nothing.
        let w = crate::model::SpinWord::new(vec![1, -1, 1]).unwrap();
        assert!(violated_cycle_inequalities(&lp, &lp.vertex(&w), 1e-6, usize::MAX).is_empty());
    }

    #[test]
    fn cycle_inequality_lhs_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let k = rng.random_range(3..=7);
            let cycle: Vec<usize> = (0..k).collect();
            let mut d = HashMap::new();
            let xs: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
            for t in 0..k {
                let (u, v) = (t, (t + 1) % k);
                d.insert((u.min(v), u.max(v)), xs[t]);
            }
            let mut best = f64::INFINITY;
            for f in 0..1u32 << k {
                if f.count_ones() % 2 == 1 {
                    let lhs: f64 = (0..k).map(|t| if f >> t & 1 == 1 { 1.0 - xs[t] } else { xs[t] }).sum();
                    best = best.min(lhs);
                }
            }
            assert!((cycle_inequality_lhs(&cycle, &d) - best).abs() < 1e-12);
        }
    }

    #[test]
    fn walk_decomposition() {
        assert_eq!(simple_cycles(&[0, 1, 2, 0]), vec![vec![0, 1, 2]]);
        assert_eq!(
            simple_cycles(&[0, 1, 2, 3, 1, 4, 0]),
            vec![vec![1, 2, 3], vec![0, 1, 4]]
        );
        assert_eq!(simple_cycles(&[0, 1, 0]), vec![vec![0, 1]]);
    }

    #[test]
    fn dot_dump() {
        let g = build_implication_graph(3, &[xor(0, 1)]);
        let mut buf = Vec::new();
        g.write_dot(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("digraph implications {"));
        assert!(text.contains("\"0+\" -> \"1-\" [label=\"0,1\"];"));
        assert_eq!(text.matches("->").count(), g.arcs().len());
    }
}
