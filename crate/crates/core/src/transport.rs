//! Exact transportation solver: primal network simplex on the bipartite
//! supply/demand graph with an artificial root and big-M starting basis.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{input_err, Error, Result};

/// Ordered field the solver runs over.
pub trait Scalar:
    Copy
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn from_i64(v: i64) -> Self;
    /// Reduced costs above `-tolerance` count as non-negative.
    fn pricing_tolerance(max_abs_cost: Self) -> Self;
    /// Allowed gap between total supply and total demand.
    fn balance_tolerance(total: Self) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn pricing_tolerance(max_abs_cost: Self) -> Self {
        1e-12 * max_abs_cost.max(1.0)
    }

    fn balance_tolerance(total: Self) -> Self {
        1e-9 * total.max(1.0)
    }
}

fn abs<S: Scalar>(x: S) -> S {
    if x < S::zero() {
        -x
    } else {
        x
    }
}

/// Optimal coupling between `supply.len()` sources and `demand.len()` sinks.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan<S> {
    pub rows: usize,
    pub cols: usize,
    /// Nonzero entries `(i, j, θ_ij)`, sorted by `(i, j)`.
    pub entries: Vec<(usize, usize, S)>,
    pub cost: S,
    pub supply: Vec<S>,
    pub demand: Vec<S>,
    pub pivots: usize,
}

impl<S: Scalar> TransportPlan<S> {
    pub fn row_sums(&self) -> Vec<S> {
        let mut out = vec![S::zero(); self.rows];
        for &(i, _, x) in &self.entries {
            out[i] = out[i] + x;
        }
        out
    }

    pub fn col_sums(&self) -> Vec<S> {
        let mut out = vec![S::zero(); self.cols];
        for &(_, j, x) in &self.entries {
            out[j] = out[j] + x;
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&(i, j)))
            .map(|k| self.entries[k].2)
            .unwrap_or_else(|_| S::zero())
    }
}

impl TransportPlan<f64> {
    /// Largest absolute deviation of the plan's marginals from the targets.
    pub fn marginal_residual(&self) -> f64 {
        let (rs, cs) = (self.row_sums(), self.col_sums());
        let r = rs.iter().zip(&self.supply).map(|(a, b)| (a - b).abs());
        let c = cs.iter().zip(&self.demand).map(|(a, b)| (a - b).abs());
        r.chain(c).fold(0.0, f64::max)
    }
}

struct Arc<S> {
    from: usize,
    to: usize,
    cost: S,
    flow: S,
}

struct Tree<S> {
    parent: Vec<usize>,
    pred: Vec<usize>,
    depth: Vec<usize>,
    potential: Vec<S>,
}

const NONE: usize = usize::MAX;

/// Minimum-cost coupling with row sums `supply` and column sums `demand`.
///
/// `cost` is row-major `supply.len() × demand.len()`.
pub fn solve_transport<S: Scalar>(cost: &[S], supply: &[S], demand: &[S]) -> Result<TransportPlan<S>> {
    let m = supply.len();
    let n = demand.len();
    if m == 0 || n == 0 {
        return Err(input_err!("transport problem needs at least one source and one sink"));
    }
    if cost.len() != m * n {
        return Err(input_err!("cost has {} entries, expected {}×{}", cost.len(), m, n));
    }
    if supply.iter().chain(demand).any(|&x| !(x >= S::zero())) {
        return Err(input_err!("marginals must be non-negative"));
    }
    let total_s = supply.iter().fold(S::zero(), |a, &x| a + x);
    let total_d = demand.iter().fold(S::zero(), |a, &x| a + x);
    if abs(total_s - total_d) > S::balance_tolerance(total_s) {
        return Err(input_err!(
            "unequal total mass: supply {:?}, demand {:?}",
            total_s,
            total_d
        ));
    }

    let max_c = cost.iter().fold(S::zero(), |a, &c| {
        let c = abs(c);
        if c > a {
            c
        } else {
            a
        }
    });
    let big_m = S::from_i64(1) + S::from_i64((m + n) as i64) * max_c;
    let tol = S::pricing_tolerance(max_c);

    let root = m + n;
    let num_nodes = m + n + 1;
    let mut arcs: Vec<Arc<S>> = Vec::with_capacity(m * n + m + n);
    for i in 0..m {
        for j in 0..n {
            arcs.push(Arc {
                from: i,
                to: m + j,
                cost: cost[i * n + j],
                flow: S::zero(),
            });
        }
    }
    let first_artificial = arcs.len();
    for (i, &s) in supply.iter().enumerate() {
        let (from, to) = if s > S::zero() { (i, root) } else { (root, i) };
        arcs.push(Arc {
            from,
            to,
            cost: big_m,
            flow: s,
        });
    }
    for (j, &d) in demand.iter().enumerate() {
        arcs.push(Arc {
            from: root,
            to: m + j,
            cost: big_m,
            flow: d,
        });
    }

    let mut in_tree = vec![false; arcs.len()];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
    for a in first_artificial..arcs.len() {
        in_tree[a] = true;
        incident[arcs[a].from].push(a);
        incident[arcs[a].to].push(a);
    }

    let mut tree = Tree {
        parent: vec![NONE; num_nodes],
        pred: vec![NONE; num_nodes],
        depth: vec![0; num_nodes],
        potential: vec![S::zero(); num_nodes],
    };
    rebuild(&mut tree, &arcs, &incident, root);

    let max_pivots = 50 * arcs.len() + 1000;
    let mut pivots = 0;
    loop {
        let mut entering = NONE;
        let mut best = -tol;
        for (a, arc) in arcs.iter().enumerate() {
            if in_tree[a] {
                continue;
            }
            let rc = arc.cost + tree.potential[arc.from] - tree.potential[arc.to];
            if rc < best {
                best = rc;
                entering = a;
            }
        }
        if entering == NONE {
            break;
        }
        if pivots == max_pivots {
            return Err(Error::Solver(alloc::format!(
                "network simplex exceeded {} pivots",
                max_pivots
            )));
        }
        pivots += 1;

        let (u, v) = (arcs[entering].from, arcs[entering].to);
        let join = {
            let (mut a, mut b) = (u, v);
            while a != b {
                if tree.depth[a] >= tree.depth[b] {
                    a = tree.parent[a];
                } else {
                    b = tree.parent[b];
                }
            }
            a
        };

        // Cycle: u -> v, then v up to join, then join down to u.
        let mut delta: Option<S> = None;
        let mut leaving = NONE;
        let mut w = u;
        while w != join {
            let a = tree.pred[w];
            let backward = arcs[a].from == w;
            if backward && delta.is_none_or(|d| arcs[a].flow < d) {
                delta = Some(arcs[a].flow);
                leaving = a;
            }
            w = tree.parent[w];
        }
        let mut w = v;
        while w != join {
            let a = tree.pred[w];
            let backward = arcs[a].to == w;
            if backward && delta.is_none_or(|d| arcs[a].flow <= d) {
                delta = Some(arcs[a].flow);
                leaving = a;
            }
            w = tree.parent[w];
        }
        let delta = delta.ok_or_else(|| Error::Solver("unbounded transport cycle".into()))?;

        arcs[entering].flow = delta;
        let mut w = u;
        while w != join {
            let a = tree.pred[w];
            let f = arcs[a].flow;
            arcs[a].flow = if arcs[a].from == w { f - delta } else { f + delta };
            w = tree.parent[w];
        }
        let mut w = v;
        while w != join {
            let a = tree.pred[w];
            let f = arcs[a].flow;
            arcs[a].flow = if arcs[a].to == w { f - delta } else { f + delta };
            w = tree.parent[w];
        }

        in_tree[leaving] = false;
        for end in [arcs[leaving].from, arcs[leaving].to] {
            incident[end].retain(|&x| x != leaving);
        }
        in_tree[entering] = true;
        incident[u].push(entering);
        incident[v].push(entering);
        rebuild(&mut tree, &arcs, &incident, root);
    }

    for arc in &arcs[first_artificial..] {
        if arc.flow > S::balance_tolerance(total_s) {
            return Err(Error::Solver("no feasible coupling".into()));
        }
    }

    let mut entries = Vec::new();
    let mut total = S::zero();
    for arc in &arcs[..first_artificial] {
        if arc.flow > S::zero() {
            entries.push((arc.from, arc.to - m, arc.flow));
            total = total + arc.flow * arc.cost;
        }
    }
    Ok(TransportPlan {
        rows: m,
        cols: n,
        entries,
        cost: total,
        supply: supply.to_vec(),
        demand: demand.to_vec(),
        pivots,
    })
}

fn rebuild<S: Scalar>(tree: &mut Tree<S>, arcs: &[Arc<S>], incident: &[Vec<usize>], root: usize) {
    tree.parent.iter_mut().for_each(|p| *p = NONE);
    tree.parent[root] = root;
    tree.pred[root] = NONE;
    tree.depth[root] = 0;
    tree.potential[root] = S::zero();
    let mut queue = VecDeque::from([root]);
    while let Some(w) = queue.pop_front() {
        for &a in &incident[w] {
            let arc = &arcs[a];
            let x = if arc.from == w { arc.to } else { arc.from };
            if tree.parent[x] != NONE {
                continue;
            }
            tree.parent[x] = w;
            tree.pred[x] = a;
            tree.depth[x] = tree.depth[w] + 1;
            tree.potential[x] = if arc.from == w {
                tree.potential[w] + arc.cost
            } else {
                tree.potential[w] - arc.cost
            };
            queue.push_back(x);
        }
    }
}
