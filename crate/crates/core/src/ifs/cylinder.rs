use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::ifs::map::AffineMap;
use crate::ifs::model::IFSModel;
use crate::series::Accumulator;

/// Default cap on nodes touched by a stopping-set enumeration.
pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;

/// A finite word `J = (j_1, …, j_k)` with `ρ_J`, `P_J` and `S_{j_1}∘⋯∘S_{j_k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderIndex {
    pub word: Vec<usize>,
    pub rho: f64,
    pub mass: f64,
    pub composed: AffineMap,
}

impl CylinderIndex {
    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }
}

/// Composes the maps named by `word`, left to right.
pub fn word_map(model: &IFSModel, word: &[usize]) -> Result<CylinderIndex> {
    let mut composed = AffineMap::identity(model.dim());
    let mut mass = 1.0;
    for &j in word {
        let map = model.map(j)?;
        composed.then_apply_inner(map.ratio(), map.orthogonal(), map.translation());
        mass *= model.weights().weight(j);
    }
    Ok(CylinderIndex {
        word: word.to_vec(),
        rho: composed.scale(),
        mass,
        composed,
    })
}

/// The head of `Λ(t)` returned by [`enumerate_stopping_set`].
#[derive(Clone, Debug)]
pub struct StoppingSet {
    pub t: f64,
    /// Words in non-increasing order of `P_J`.
    pub words: Vec<CylinderIndex>,
    pub retained_mass: f64,
    pub mass_tol: f64,
    /// True when the search frontier emptied, i.e. the full `Λ(t)` was listed.
    pub exhausted: bool,
    pub nodes_visited: usize,
}

impl StoppingSet {
    /// Human-readable statement of the rule that produced the list.
    pub fn rule(&self) -> String {
        format!(
            "words J with rho_J < {} <= rho_parent(J), best-first by P_J until retained mass >= 1 - {}",
            self.t, self.mass_tol
        )
    }
}

struct Node {
    parent: usize,
    letter: usize,
    rho: f64,
    mass: f64,
}

#[derive(PartialEq)]
struct Frontier {
    mass: f64,
    node: usize,
    /// Popping this node also pushes the next sibling.
    spawns_sibling: bool,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        self.mass
            .total_cmp(&other.mass)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const ROOT: usize = usize::MAX;

/// Lists the maximal words with `ρ_J < t ≤ ρ_{parent(J)}`, heaviest first,
/// until the retained mass reaches `1 − mass_tol` or the set is exhausted;
/// `mass_tol = 0` lists all of `Λ(t)` (finite families only).
pub fn enumerate_stopping_set(model: &IFSModel, t: f64, mass_tol: f64) -> Result<StoppingSet> {
    enumerate_stopping_set_with_budget(model, t, mass_tol, DEFAULT_NODE_BUDGET)
}

pub fn enumerate_stopping_set_with_budget(
    model: &IFSModel,
    t: f64,
    mass_tol: f64,
    budget: usize,
) -> Result<StoppingSet> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::invalid(format!("t = {t} not in (0,1)")));
    }
    if !(0.0..1.0).contains(&mass_tol) {
        return Err(Error::invalid(format!(
            "mass_tol = {mass_tol} not in [0,1)"
        )));
    }
    let weights = model.weights();
    let ratios = model.ratios();
    let explicit_children = weights.monotone_from();
    let infinite = !weights.is_finite();

    let mut arena: Vec<Node> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut accepted: Vec<usize> = Vec::new();
    let mut retained = Accumulator::default();

    let push_child = |arena: &mut Vec<Node>,
                      heap: &mut BinaryHeap<Frontier>,
                      parent: usize,
                      parent_rho: f64,
                      parent_mass: f64,
                      letter: usize,
                      spawns_sibling: bool| {
        let p = weights.weight(letter);
        if p <= 0.0 && !spawns_sibling {
            return;
        }
        let rho = parent_rho * ratios.ratio(letter).unwrap();
        let mass = parent_mass * p;
        arena.push(Node {
            parent,
            letter,
            rho,
            mass,
        });
        heap.push(Frontier {
            mass,
            node: arena.len() - 1,
            spawns_sibling,
        });
    };

    let expand = |arena: &mut Vec<Node>, heap: &mut BinaryHeap<Frontier>, parent: usize| {
        let (rho, mass) = if parent == ROOT {
            (1.0, 1.0)
        } else {
            (arena[parent].rho, arena[parent].mass)
        };
        for j in 1..=explicit_children {
            push_child(arena, heap, parent, rho, mass, j, false);
        }
        if infinite {
            push_child(arena, heap, parent, rho, mass, explicit_children + 1, true);
        }
    };

    expand(&mut arena, &mut heap, ROOT);
    let mut visited = 0usize;
    // With mass_tol = 0 the search runs until the frontier empties.
    while mass_tol == 0.0 || retained.value() < 1.0 - mass_tol {
        let Some(top) = heap.pop() else { break };
        visited += 1;
        if arena.len() > budget {
            return Err(Error::Budget {
                budget,
                retained_mass: retained.value(),
            });
        }
        let node = &arena[top.node];
        let (parent, letter) = (node.parent, node.letter);
        if top.spawns_sibling && node.mass > 0.0 {
            let (prho, pmass) = if parent == ROOT {
                (1.0, 1.0)
            } else {
                (arena[parent].rho, arena[parent].mass)
            };
            push_child(&mut arena, &mut heap, parent, prho, pmass, letter + 1, true);
        }
        let node = &arena[top.node];
        if node.mass <= 0.0 {
            continue;
        }
        if node.rho < t {
            retained.add(node.mass);
            accepted.push(top.node);
        } else {
            expand(&mut arena, &mut heap, top.node);
        }
    }
    let exhausted = heap.is_empty();

    let mut words = Vec::with_capacity(accepted.len());
    for idx in accepted {
        let mut word = Vec::new();
        let mut cur = idx;
        while cur != ROOT {
            word.push(arena[cur].letter);
            cur = arena[cur].parent;
        }
        word.reverse();
        let mut cyl = word_map(model, &word)?;
        // Keep the products accumulated along the search path.
        cyl.rho = arena[idx].rho;
        cyl.mass = arena[idx].mass;
        words.push(cyl);
    }
    Ok(StoppingSet {
        t,
        words,
        retained_mass: retained.value(),
        mass_tol,
        exhausted,
        nodes_visited: visited,
    })
}

/// `Λ₁(t)`: the members of a stopping set with `ρ_J ≥ ε t`.
pub fn filter_lambda1(stopping: &[CylinderIndex], t: f64, eps: f64) -> Result<Vec<CylinderIndex>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("eps = {eps} not in (0,1)")));
    }
    Ok(stopping
        .iter()
        .filter(|c| c.rho >= eps * t)
        .cloned()
        .collect())
}
