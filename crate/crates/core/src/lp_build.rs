//! Belief LP relaxations of the MAP problem.
//!
//! Columns are beliefs: two per site, four per edge, `2^k` per installed
//! clique of size `k`. Site beliefs come first (`2·i + state`), edge and
//! clique blocks follow in installation order. Every edge carries one
//! normalization row and four marginalization rows tying it to its sites;
//! every higher clique carries four consistency rows per member pair tying
//! it to that pair's edge beliefs. All equality rows use ±1 coefficients, so
//! [`BeliefLp::nnz`] is an exact structural count.

use std::collections::HashMap;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{GridModel, SpinWord};

/// Bridge between spins and belief states: state 0 is spin +1 (literal
/// `i⁺`), state 1 is spin −1 (literal `i⁻`).
pub struct SpinStateMap;

impl SpinStateMap {
    pub const UP: usize = 0;
    pub const DOWN: usize = 1;

    pub const fn spin(state: usize) -> f64 {
        if state == Self::UP {
            1.0
        } else {
            -1.0
        }
    }

    pub fn state(spin: i8) -> usize {
        if spin > 0 {
            Self::UP
        } else {
            Self::DOWN
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CliqueKind {
    Edge,
    Triangle,
    FiveClique,
}

/// A set of sites with strictly increasing members.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CliqueSpec {
    members: Vec<usize>,
    kind: CliqueKind,
}

impl CliqueSpec {
    /// Sorts `members`; rejects repeated sites and sizes other than 2, 3, 5.
    pub fn new(mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        let kind = match members.len() {
            2 => CliqueKind::Edge,
            3 => CliqueKind::Triangle,
            5 => CliqueKind::FiveClique,
            _ => return Err(Error::MalformedClique(members)),
        };
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::MalformedClique(members));
        }
        Ok(CliqueSpec { members, kind })
    }

    pub fn triangle(a: usize, b: usize, c: usize) -> Result<Self> {
        Self::new(vec![a, b, c])
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn kind(&self) -> CliqueKind {
        self.kind
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PerturbMagnitude {
    /// Half-width `delta` of the uniform perturbation.
    Absolute(f64),
    /// `delta = scale × max |objective coefficient|`.
    Relative(f64),
}

/// Tie-breaking noise on the pairwise objective coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbSpec {
    pub seed: u64,
    pub magnitude: PerturbMagnitude,
}

pub const DEFAULT_PERTURB_SCALE: f64 = 1e-6;

impl PerturbSpec {
    pub fn none() -> Self {
        PerturbSpec {
            seed: 0,
            magnitude: PerturbMagnitude::Absolute(0.0),
        }
    }

    pub fn relative(seed: u64, scale: f64) -> Self {
        PerturbSpec {
            seed,
            magnitude: PerturbMagnitude::Relative(scale),
        }
    }

    pub fn absolute(seed: u64, delta: f64) -> Self {
        PerturbSpec {
            seed,
            magnitude: PerturbMagnitude::Absolute(delta),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EqRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct EdgeInfo {
    pub i: usize,
    pub j: usize,
    base: usize,
    /// Present in the model's coupling support (as opposed to a chord
    /// installed for a clique).
    pub weighted: bool,
}

#[derive(Clone, Debug)]
pub struct InstalledClique {
    pub spec: CliqueSpec,
    base: usize,
}

#[derive(Clone, Debug)]
pub struct BeliefLp {
    num_sites: usize,
    objective: Vec<f64>,
    rows: Vec<EqRow>,
    nnz: usize,
    edges: Vec<EdgeInfo>,
    edge_index: HashMap<(usize, usize), usize>,
    cliques: Vec<InstalledClique>,
    clique_index: HashMap<Vec<usize>, usize>,
    perturb_delta: f64,
}

/// Index of the configuration `(a, b)` inside an edge block.
pub const fn pair_config(a: usize, b: usize) -> usize {
    2 * a + b
}

impl BeliefLp {
    /// Pairwise LP of a general Ising-type model with objective
    /// `Σ_{(i,j)} w_ij x_i x_j − Σ_i field_i x_i`.
    ///
    /// Sites not touched by any coupling get an explicit normalization row so
    /// their beliefs stay on the simplex.
    pub fn from_couplings(num_sites: usize, field: &[f64], couplings: &[(usize, usize, f64)]) -> Result<Self> {
        assert_eq!(field.len(), num_sites);
        let mut lp = BeliefLp {
            num_sites,
            objective: Vec::with_capacity(2 * num_sites + 4 * couplings.len()),
            rows: Vec::new(),
            nnz: 0,
            edges: Vec::new(),
            edge_index: HashMap::new(),
            cliques: Vec::new(),
            clique_index: HashMap::new(),
            perturb_delta: 0.0,
        };
        for &h in field {
            for s in 0..2 {
                lp.objective.push(-h * SpinStateMap::spin(s));
            }
        }
        for &(i, j, w) in couplings {
            if i == j || i >= num_sites || j >= num_sites {
                return Err(Error::MalformedClique(vec![i, j]));
            }
            let e = lp.ensure_edge(i.min(j), i.max(j));
            lp.edges[e].weighted = true;
            let base = lp.edges[e].base;
            for a in 0..2 {
                for b in 0..2 {
                    lp.objective[base + pair_config(a, b)] +=
                        w * SpinStateMap::spin(a) * SpinStateMap::spin(b);
                }
            }
        }
        let mut covered = vec![false; num_sites];
        for e in &lp.edges {
            covered[e.i] = true;
            covered[e.j] = true;
        }
        for (i, _) in covered.iter().enumerate().filter(|(_, &c)| !c) {
            lp.push_row(vec![(2 * i, 1.0), (2 * i + 1, 1.0)], 1.0);
        }
        Ok(lp)
    }

    fn push_row(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.nnz += coeffs.len();
        self.rows.push(EqRow { coeffs, rhs });
    }

    fn push_columns(&mut self, count: usize) -> usize {
        let base = self.objective.len();
        self.objective.resize(base + count, 0.0);
        base
    }

    /// Installs edge `(i, j)` with zero objective if it is not present.
    fn ensure_edge(&mut self, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        if let Some(&e) = self.edge_index.get(&(i, j)) {
            return e;
        }
        let base = self.push_columns(4);
        let col = |a, b| base + pair_config(a, b);
        self.push_row((0..4).map(|c| (base + c, 1.0)).collect(), 1.0);
        for a in 0..2 {
            self.push_row(vec![(2 * i + a, 1.0), (col(a, 0), -1.0), (col(a, 1), -1.0)], 0.0);
        }
        for b in 0..2 {
            self.push_row(vec![(2 * j + b, 1.0), (col(0, b), -1.0), (col(1, b), -1.0)], 0.0);
        }
        let e = self.edges.len();
        self.edges.push(EdgeInfo {
            i,
            j,
            base,
            weighted: false,
        });
        self.edge_index.insert((i, j), e);
        e
    }

    /// Installs a higher clique with consistency rows against each member
    /// pair. Returns false if the same member set is already installed.
    fn install_clique(&mut self, spec: CliqueSpec) -> bool {
        if self.clique_index.contains_key(spec.members()) {
            return false;
        }
        let k = spec.members().len();
        let members = spec.members().to_vec();
        let mut pair_edges = Vec::new();
        for p in 0..k {
            for q in p + 1..k {
                pair_edges.push((p, q, self.ensure_edge(members[p], members[q])));
            }
        }
        let base = self.push_columns(1 << k);
        for (p, q, e) in pair_edges {
            let edge_base = self.edges[e].base;
            for a in 0..2 {
                for b in 0..2 {
                    let mut coeffs = vec![(edge_base + pair_config(a, b), 1.0)];
                    for config in 0..1usize << k {
                        if (config >> p) & 1 == a && (config >> q) & 1 == b {
                            coeffs.push((base + config, -1.0));
                        }
                    }
                    self.push_row(coeffs, 0.0);
                }
            }
        }
        self.clique_index.insert(members, self.cliques.len());
        self.cliques.push(InstalledClique { spec, base });
        true
    }

    /// Adds the given triangles, skipping any already installed. Missing
    /// constituent edges are installed with zero objective weight. Returns
    /// the number of triangles actually added.
    pub fn add_triangle_cliques(&mut self, triangles: &[CliqueSpec]) -> Result<usize> {
        for t in triangles {
            if t.kind() != CliqueKind::Triangle || t.members().iter().any(|&v| v >= self.num_sites) {
                return Err(Error::MalformedClique(t.members().to_vec()));
            }
        }
        Ok(triangles
            .iter()
            .filter(|t| self.install_clique((*t).clone()))
            .count())
    }

    /// Adds i.i.d. `Uniform(−delta, delta)` noise to every coupling-edge
    /// configuration coefficient. Deterministic in `spec.seed`; a zero
    /// magnitude leaves the objective untouched.
    pub fn apply_perturbation(&mut self, spec: &PerturbSpec) {
        let delta = match spec.magnitude {
            PerturbMagnitude::Absolute(d) => d,
            PerturbMagnitude::Relative(scale) => {
                scale * self.objective.iter().fold(0.0f64, |m, c| m.max(c.abs()))
            }
        };
        if delta.is_nan() || delta <= 0.0 {
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for e in self.edges.iter().filter(|e| e.weighted) {
            for c in 0..4 {
                self.objective[e.base + c] += rng.random_range(-delta..delta);
            }
        }
        self.perturb_delta = delta;
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn num_columns(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Structural nonzeros of the equality-constraint matrix.
    pub fn nnz(&self) -> usize {
        self.nnz
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn rows(&self) -> &[EqRow] {
        &self.rows
    }

    pub fn edges(&self) -> &[EdgeInfo] {
        &self.edges
    }

    pub fn cliques(&self) -> &[InstalledClique] {
        &self.cliques
    }

    /// Half-width of the applied perturbation (zero when none).
    pub fn perturb_delta(&self) -> f64 {
        self.perturb_delta
    }

    pub fn node_col(&self, site: usize, state: usize) -> usize {
        debug_assert!(site < self.num_sites && state < 2);
        2 * site + state
    }

    pub fn edge_id(&self, i: usize, j: usize) -> Option<usize> {
        self.edge_index.get(&(i.min(j), i.max(j))).copied()
    }

    /// Column of `b_ij(a, b)` for edge `e`, with `a` the state of the lower
    /// site index.
    pub fn edge_col(&self, e: usize, a: usize, b: usize) -> usize {
        self.edges[e].base + pair_config(a, b)
    }

    /// Column of `b_C(config)` where bit `p` of `config` is the state of the
    /// clique's `p`-th member.
    pub fn clique_col(&self, c: usize, config: usize) -> usize {
        self.cliques[c].base + config
    }

    pub fn clique_id(&self, members: &[usize]) -> Option<usize> {
        self.clique_index.get(members).copied()
    }

    /// Edge beliefs in the order `00, 01, 10, 11`.
    pub fn edge_beliefs(&self, e: usize, beliefs: &[f64]) -> [f64; 4] {
        let base = self.edges[e].base;
        [beliefs[base], beliefs[base + 1], beliefs[base + 2], beliefs[base + 3]]
    }

    /// The 0/1 belief vector induced by a spin word.
    pub fn vertex(&self, word: &SpinWord) -> Vec<f64> {
        assert_eq!(word.len(), self.num_sites);
        let state = |i: usize| SpinStateMap::state(word.spins()[i]);
        let mut b = vec![0.0; self.objective.len()];
        for i in 0..self.num_sites {
            b[self.node_col(i, state(i))] = 1.0;
        }
        for e in &self.edges {
            b[e.base + pair_config(state(e.i), state(e.j))] = 1.0;
        }
        for c in &self.cliques {
            let config = c
                .spec
                .members()
                .iter()
                .enumerate()
                .fold(0usize, |acc, (p, &v)| acc | state(v) << p);
            b[c.base + config] = 1.0;
        }
        b
    }

    /// LP objective at the vertex of `word`, evaluated term by term.
    pub fn word_objective(&self, word: &SpinWord) -> f64 {
        let state = |i: usize| SpinStateMap::state(word.spins()[i]);
        let mut v = 0.0;
        for i in 0..self.num_sites {
            v += self.objective[self.node_col(i, state(i))];
        }
        for e in &self.edges {
            v += self.objective[e.base + pair_config(state(e.i), state(e.j))];
        }
        v
    }

    pub fn objective_at(&self, beliefs: &[f64]) -> f64 {
        self.objective.iter().zip(beliefs).map(|(c, b)| c * b).sum()
    }

    /// Largest absolute equality-row residual at `beliefs`.
    pub fn max_row_residual(&self, beliefs: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.coeffs.iter().map(|&(c, a)| a * beliefs[c]).sum::<f64>() - r.rhs).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_problem(&self) -> Result<lp_simplex::Problem> {
        let mut p = lp_simplex::Problem::new();
        for &c in &self.objective {
            p.add_var(c, 0.0, 1.0);
        }
        for r in &self.rows {
            p.add_eq_row(&r.coeffs, r.rhs)?;
        }
        Ok(p)
    }

    fn column_name(&self, col: usize) -> String {
        if col < 2 * self.num_sites {
            return format!("n{}_{}", col / 2, col % 2);
        }
        // Edge and clique blocks are laid out in installation order.
        if let Some(e) = self.edges.iter().find(|e| (e.base..e.base + 4).contains(&col)) {
            let c = col - e.base;
            return format!("e{}_{}_{}{}", e.i, e.j, c / 2, c % 2);
        }
        let (k, c) = self
            .cliques
            .iter()
            .enumerate()
            .find(|(_, c)| (c.base..c.base + (1 << c.spec.members().len())).contains(&col))
            .expect("column belongs to an installed block");
        let width = c.spec.members().len();
        let config: String = (0..width)
            .map(|p| if (col - c.base) >> p & 1 == 1 { '1' } else { '0' })
            .collect();
        format!("c{k}_{config}")
    }

    /// Writes the LP in CPLEX LP text format. Column names are `n{site}_{s}`
    /// for site beliefs, `e{i}_{j}_{ab}` for edge beliefs and
    /// `c{clique}_{bits}` for clique beliefs (bit `p` = state of member `p`).
    pub fn write_lp_format<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let names: Vec<String> = (0..self.num_columns()).map(|c| self.column_name(c)).collect();
        let term = |first: bool, coef: f64, name: &str| -> String {
            match (coef < 0.0, first) {
                (true, _) => format!(" - {} {name}", -coef),
                (false, true) => format!(" {coef} {name}"),
                (false, false) => format!(" + {coef} {name}"),
            }
        };
        writeln!(
            out,
            "\\ belief LP: {} sites, {} edges, {} cliques, {} nonzeros",
            self.num_sites,
            self.edges.len(),
            self.cliques.len(),
            self.nnz
        )?;
        writeln!(out, "Minimize")?;
        write!(out, " obj:")?;
        let mut first = true;
        for (c, &v) in self.objective.iter().enumerate() {
            if v != 0.0 {
                write!(out, "{}", term(first, v, &names[c]))?;
                first = false;
            }
        }
        if first {
            write!(out, " 0 {}", names[0])?;
        }
        writeln!(out)?;
        writeln!(out, "Subject To")?;
        for (k, r) in self.rows.iter().enumerate() {
            write!(out, " r{k}:")?;
            for (t, &(c, a)) in r.coeffs.iter().enumerate() {
                write!(out, "{}", term(t == 0, a, &names[c]))?;
            }
            writeln!(out, " = {}", r.rhs)?;
        }
        writeln!(out, "Bounds")?;
        for name in &names {
            writeln!(out, " 0 <= {name} <= 1")?;
        }
        writeln!(out, "End")
    }
}

/// Pairwise LP over the model's coupling support, perturbed per `perturb`.
pub fn build_pairwise_lp(model: &GridModel, field: &[f64], perturb: &PerturbSpec) -> BeliefLp {
    assert_eq!(field.len(), model.num_sites());
    let mut lp = BeliefLp::from_couplings(model.num_sites(), field, &model.couplings())
        .expect("model couplings are well formed");
    lp.apply_perturbation(perturb);
    lp
}

/// The site plus its four periodic neighbours.
pub fn five_clique(model: &GridModel, site: usize) -> Result<CliqueSpec> {
    let mut members = vec![site];
    members.extend(model.neighbors(site));
    CliqueSpec::new(members)
}

/// Pairwise LP plus one five-clique centred on every site.
pub fn build_block_lp(model: &GridModel, field: &[f64], perturb: &PerturbSpec) -> Result<BeliefLp> {
    if model.n() < 3 {
        return Err(Error::InvalidConfig(format!(
            "five-cliques need a grid side of at least 3, got {}",
            model.n()
        )));
    }
    let mut lp = build_pairwise_lp(model, field, perturb);
    for site in 0..model.num_sites() {
        lp.install_clique(five_clique(model, site)?);
    }
    Ok(lp)
}

/// Every unordered triple of distinct sites, lexicographically.
pub fn candidate_triangles(num_sites: usize) -> impl Iterator<Item = [usize; 3]> {
    (0..num_sites).flat_map(move |a| {
        (a + 1..num_sites).flat_map(move |b| (b + 1..num_sites).map(move |c| [a, b, c]))
    })
}

/// Triangles of the coupling-support graph.
pub fn support_triangles(model: &GridModel) -> Vec<[usize; 3]> {
    let sites = model.num_sites();
    let adjacent: Vec<Vec<usize>> = (0..sites)
        .map(|i| model.r_matrix().row(i).map(|(j, _)| j).filter(|&j| j > i).collect())
        .collect();
    let mut out = Vec::new();
    for a in 0..sites {
        for (t, &b) in adjacent[a].iter().enumerate() {
            for &c in &adjacent[a][t + 1..] {
                if adjacent[b].binary_search(&c).is_ok() {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}
