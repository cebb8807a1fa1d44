//! Arborescence weights, the static rate function and the Markov chain tree
//! theorem.
//!
//! A tree in `𝒯(i)` is a spanning in-tree rooted at `i` over the complete
//! directed graph on `0..l`: every vertex other than `i` has exactly one
//! outgoing edge `(m, n)`, oriented from the child `m` to the parent `n`, and
//! following the edges from any vertex leads to `i`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// An optimal in-tree: `parent[m]` for every non-root vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arborescence {
    pub root: usize,
    pub weight: f64,
    pub parent: Vec<Option<usize>>,
}

impl Arborescence {
    /// `(child, parent)` pairs in increasing child order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.parent.iter().enumerate().filter_map(|(m, p)| p.map(|n| (m, n))).collect()
    }
}

fn check_square(v: &[Vec<f64>]) -> Result<usize> {
    let l = v.len();
    if l == 0 || v.iter().any(|row| row.len() != l) {
        return Err(Error::InvalidArgument("weight matrix must be square and nonempty".into()));
    }
    Ok(l)
}

/// Chu–Liu/Edmonds on an out-arborescence problem: `w[u][x]` is the cost of
/// making `u` the parent of `x`. Returns `par[x]` (`par[root] = root`).
fn edmonds(w: &[Vec<f64>], root: usize) -> Vec<usize> {
    let n = w.len();
    let mut par = vec![root; n];
    for x in 0..n {
        if x == root {
            continue;
        }
        let mut best = usize::MAX;
        for u in 0..n {
            if u != x && (best == usize::MAX || w[u][x] < w[best][x]) {
                best = u;
            }
        }
        par[x] = best;
    }
    // Look for a cycle among the chosen edges.
    let mut mark = vec![usize::MAX; n];
    let mut cycle = None;
    for start in 0..n {
        let mut x = start;
        while x != root && mark[x] == usize::MAX {
            mark[x] = start;
            x = par[x];
        }
        if x != root && mark[x] == start {
            let mut c = vec![x];
            let mut y = par[x];
            while y != x {
                c.push(y);
                y = par[y];
            }
            c.sort_unstable();
            cycle = Some(c);
            break;
        }
    }
    let Some(cycle) = cycle else { return par };

    let in_cycle: Vec<bool> = (0..n).map(|x| cycle.binary_search(&x).is_ok()).collect();
    let outside: Vec<usize> = (0..n).filter(|&x| !in_cycle[x]).collect();
    let k = outside.len();
    let c = k; // contracted vertex
    let mut index = vec![c; n];
    for (i, &x) in outside.iter().enumerate() {
        index[x] = i;
    }
    let mut w2 = vec![vec![f64::INFINITY; k + 1]; k + 1];
    let mut enter = vec![usize::MAX; k]; // cycle vertex entered from outside[i]
    let mut leave = vec![usize::MAX; k]; // cycle vertex leaving towards outside[i]
    for (i, &u) in outside.iter().enumerate() {
        for (j, &x) in outside.iter().enumerate() {
            if i != j {
                w2[i][j] = w[u][x];
            }
        }
        for &y in &cycle {
            let into = w[u][y] - w[par[y]][y];
            if into < w2[i][c] {
                w2[i][c] = into;
                enter[i] = y;
            }
            if w[y][u] < w2[c][i] {
                w2[c][i] = w[y][u];
                leave[i] = y;
            }
        }
    }
    let sub = edmonds(&w2, index[root]);
    let mut out = par.clone();
    for (j, &x) in outside.iter().enumerate() {
        if x == root {
            continue;
        }
        out[x] = if sub[j] == c { leave[j] } else { outside[sub[j]] };
    }
    let u = sub[c];
    out[enter[u]] = outside[u];
    out
}

/// Minimum-weight in-tree rooted at `root`, edge `(m, n)` weighing `v[m][n]`.
///
/// Ties are resolved deterministically by preferring the smallest parent
/// index at every selection step.
pub fn min_arborescence(v: &[Vec<f64>], root: usize) -> Result<Arborescence> {
    let l = check_square(v)?;
    if root >= l {
        return Err(Error::InvalidArgument(format!("root {root} out of range for {l} vertices")));
    }
    if (0..l).any(|m| (0..l).any(|n| m != n && !v[m][n].is_finite())) {
        return Err(Error::InvalidArgument("off-diagonal weights must be finite".into()));
    }
    // Out-arborescence formulation: parent u of x costs v[x][u].
    let w: Vec<Vec<f64>> = (0..l).map(|u| (0..l).map(|x| v[x][u]).collect()).collect();
    let par = edmonds(&w, root);
    let parent: Vec<Option<usize>> = (0..l).map(|x| (x != root).then_some(par[x])).collect();
    let weight = parent.iter().enumerate().filter_map(|(m, p)| p.map(|n| v[m][n])).sum();
    Ok(Arborescence { root, weight, parent })
}

/// Calls `visit` with the parent array of every tree in `𝒯(root)`.
///
/// Parents are assigned vertex by vertex; an assignment is pruned as soon as
/// it closes a cycle, which can only pass through the vertex just assigned.
pub fn for_each_in_tree(l: usize, root: usize, mut visit: impl FnMut(&[usize])) {
    fn closes_cycle(parent: &[usize], root: usize, x: usize) -> bool {
        let mut y = parent[x];
        while y != root && parent[y] != usize::MAX {
            if y == x {
                return true;
            }
            y = parent[y];
        }
        false
    }
    fn rec(l: usize, root: usize, x: usize, parent: &mut [usize], visit: &mut dyn FnMut(&[usize])) {
        if x == l {
            visit(parent);
            return;
        }
        if x == root {
            rec(l, root, x + 1, parent, visit);
            return;
        }
        for p in (0..l).filter(|&p| p != x) {
            parent[x] = p;
            if !closes_cycle(parent, root, x) {
                rec(l, root, x + 1, parent, visit);
            }
        }
        parent[x] = usize::MAX;
    }
    let mut parent = vec![usize::MAX; l];
    parent[root] = root;
    rec(l, root, 0, &mut parent, &mut visit);
}

/// Exhaustive minimum over `𝒯(root)`.
pub fn brute_force_min_tree(v: &[Vec<f64>], root: usize) -> f64 {
    let mut best = f64::INFINITY;
    for_each_in_tree(v.len(), root, |par| {
        let w: f64 = (0..v.len()).filter(|&m| m != root).map(|m| v[m][par[m]]).sum();
        best = best.min(w);
    });
    best
}

/// Number of trees in `𝒯(root)`; `l^{l-2}` by Cayley's formula.
pub fn count_in_trees(l: usize, root: usize) -> usize {
    let mut n = 0;
    for_each_in_tree(l, root, |_| n += 1);
    n
}

/// Tree weights `w_i`, their minimum `w` and `w̄_i = w_i - w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeWeights {
    pub w: Vec<f64>,
    pub w_min: f64,
    pub normalized: Vec<f64>,
    pub argmin: Vec<usize>,
    pub trees: Vec<Arborescence>,
}

impl TreeWeights {
    pub fn compute(v: &[Vec<f64>]) -> Result<Self> {
        let l = check_square(v)?;
        let trees = (0..l).map(|i| min_arborescence(v, i)).collect::<Result<Vec<_>>>()?;
        let w: Vec<f64> = trees.iter().map(|t| t.weight).collect();
        let w_min = w.iter().copied().fold(f64::INFINITY, f64::min);
        let normalized: Vec<f64> = w.iter().map(|x| x - w_min).collect();
        let argmin = (0..l).filter(|&i| normalized[i] == 0.0).collect();
        Ok(Self { w, w_min, normalized, argmin, trees })
    }

    /// First violation of `w_i ≤ w_j + v_ji`, if any, as `(i, j)`.
    pub fn triangle_violation(&self, v: &[Vec<f64>], tol: f64) -> Option<(usize, usize)> {
        let l = self.w.len();
        (0..l).flat_map(|i| (0..l).map(move |j| (i, j))).find(|&(i, j)| i != j && self.w[i] > self.w[j] + v[j][i] + tol)
    }
}

/// `W(ϱ) = min_i {w̄_i + V_i(ϱ)}`.
pub fn w_eval(costs: &[f64], tw: &TreeWeights) -> Result<f64> {
    if costs.len() != tw.w.len() {
        return Err(Error::Mismatch(format!("{} costs for {} families", costs.len(), tw.w.len())));
    }
    if costs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument("costs must be finite".into()));
    }
    Ok(costs.iter().zip(&tw.normalized).map(|(c, w)| c + w).fold(f64::INFINITY, f64::min))
}

/// `Q_i = Σ_{g ∈ 𝒯(i)} Π_{(m,n) ∈ g} p_mn` by enumeration.
pub fn tree_polynomial_enumerated(p: &[Vec<f64>], i: usize) -> Result<f64> {
    let l = check_square(p)?;
    if l > 12 {
        return Err(Error::InvalidArgument(format!("enumeration is limited to 12 states, got {l}")));
    }
    let mut q = 0.0;
    for_each_in_tree(l, i, |par| {
        q += (0..l).filter(|&m| m != i).map(|m| p[m][par[m]]).product::<f64>();
    });
    Ok(q)
}

/// `Q_i` as the principal minor, row and column `i` removed, of the
/// Laplacian `L = diag(Σ_n p_mn) - p`.
pub fn tree_polynomial_determinant(p: &[Vec<f64>], i: usize) -> Result<f64> {
    let l = check_square(p)?;
    if l == 1 {
        return Ok(1.0);
    }
    let idx: Vec<usize> = (0..l).filter(|&m| m != i).collect();
    let minor = DMatrix::from_fn(l - 1, l - 1, |r, c| {
        let (m, n) = (idx[r], idx[c]);
        if m == n {
            (0..l).filter(|&k| k != m).map(|k| p[m][k]).sum()
        } else {
            -p[m][n]
        }
    });
    Ok(minor.determinant())
}

/// Per-state bounds `a^{-2(l-1)} Q_i / Σ Q̃_j ≤ ν_i ≤ a^{2(l-1)} Q̃_i / Σ Q_j`,
/// `Q` built from `p_low` and `Q̃` from `p_high`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Sandwich {
    pub fn contains(&self, nu: &[f64], tol: f64) -> bool {
        nu.iter().enumerate().all(|(i, &x)| x >= self.lower[i] - tol && x <= self.upper[i] + tol)
    }
}

pub fn invariant_sandwich(p_low: &[Vec<f64>], p_high: &[Vec<f64>], a: f64) -> Result<Sandwich> {
    let l = check_square(p_low)?;
    if check_square(p_high)? != l {
        return Err(Error::Mismatch("kernels have different sizes".into()));
    }
    if !(a >= 1.0) {
        return Err(Error::InvalidArgument(format!("a = {a} must be at least 1")));
    }
    let q: Vec<f64> = (0..l).map(|i| tree_polynomial_determinant(p_low, i)).collect::<Result<_>>()?;
    let qt: Vec<f64> = (0..l).map(|i| tree_polynomial_determinant(p_high, i)).collect::<Result<_>>()?;
    let (sq, sqt) = (q.iter().sum::<f64>(), qt.iter().sum::<f64>());
    let f = a.powi(2 * (l as i32 - 1));
    Ok(Sandwich { lower: q.iter().map(|x| x / (f * sqt)).collect(), upper: qt.iter().map(|x| f * x / sq).collect() })
}

/// Stationary vector of a stochastic matrix (rows sum to one) by solving
/// `ν (P - I) = 0`, `Σ ν = 1`.
pub fn stationary_vector(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let l = check_square(p)?;
    let mut a = DMatrix::from_fn(l, l, |r, c| p[c][r] - if r == c { 1.0 } else { 0.0 });
    for c in 0..l {
        a[(l - 1, c)] = 1.0;
    }
    let mut rhs = vec![0.0; l];
    rhs[l - 1] = 1.0;
    crate::linalg::solve_dense(a, &rhs)
}

/// Tree report entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeReport {
    pub root: usize,
    pub weight: f64,
    pub edges: Vec<(usize, usize, f64)>,
}

pub fn tree_report(v: &[Vec<f64>], tw: &TreeWeights) -> Vec<TreeReport> {
    tw.trees
        .iter()
        .map(|t| TreeReport {
            root: t.root,
            weight: t.weight,
            edges: t.edges().into_iter().map(|(m, n)| (m, n, v[m][n])).collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*seed >> 11) as f64 / (1u64 << 53) as f64
    }

    fn random_matrix(l: usize, seed: &mut u64) -> Vec<Vec<f64>> {
        (0..l).map(|m| (0..l).map(|n| if m == n { 0.0 } else { lcg(seed) }).collect()).collect()
    }

    #[test]
    fn cayley_counts() {
        for l in 1..=6 {
            assert_eq!(count_in_trees(l, 0), if l == 1 { 1 } else { l.pow(l as u32 - 2) });
        }
    }

    #[test]
    fn two_vertices() {
        let v = vec![vec![0.0, 3.0], vec![5.0, 0.0]];
        let tw = TreeWeights::compute(&v).unwrap();
        assert_eq!(tw.w, vec![5.0, 3.0]);
        assert_eq!(tree_polynomial_enumerated(&v, 0).unwrap(), 5.0);
        assert_eq!(tree_polynomial_determinant(&v, 1).unwrap(), 3.0);
    }

    #[test]
    fn contraction_matches_enumeration() {
        let mut seed = 7;
        for l in 2..=6 {
            for _ in 0..50 {
                let v = random_matrix(l, &mut seed);
                for root in 0..l {
                    let t = min_arborescence(&v, root).unwrap();
                    assert!((t.weight - brute_force_min_tree(&v, root)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn unreachable_root_has_zero_tree_polynomial() {
        // Nobody can move to state 2.
        let p = vec![vec![0.0, 0.4, 0.0], vec![0.3, 0.0, 0.0], vec![0.5, 0.5, 0.0]];
        assert_eq!(tree_polynomial_enumerated(&p, 2).unwrap(), 0.0);
        assert!(tree_polynomial_determinant(&p, 2).unwrap().abs() < 1e-15);
    }

    #[test]
    fn sandwich_collapses_when_a_is_one() {
        let p = vec![vec![0.0, 0.2, 0.1], vec![0.3, 0.0, 0.4], vec![0.05, 0.25, 0.0]];
        let s = invariant_sandwich(&p, &p, 1.0).unwrap();
        let mut stoch = p.clone();
        for (m, row) in stoch.iter_mut().enumerate() {
            row[m] = 1.0 - row.iter().sum::<f64>();
        }
        let nu = stationary_vector(&stoch).unwrap();
        for ((lo, hi), v) in s.lower.iter().zip(&s.upper).zip(&nu) {
            assert!((lo - hi).abs() < 1e-14);
            assert!((lo - v).abs() < 1e-12);
        }
    }

    #[test]
    fn w_eval_examples() {
        let v = vec![vec![0.0, 1.0, 2.0], vec![0.0, 0.0, 0.0], vec![2.0, 1.0, 0.0]];
        let tw = TreeWeights::compute(&v).unwrap();
        assert!(tw.triangle_violation(&v, 1e-12).is_none());
        for i in 0..3 {
            let mut costs = vec![10.0; 3];
            costs[i] = 0.0;
            let w = w_eval(&costs, &tw).unwrap();
            assert!(w <= tw.normalized[i] + 1e-15);
        }
    }
}
