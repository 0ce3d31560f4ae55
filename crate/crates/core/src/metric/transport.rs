//! Balanced transportation problems over exact rationals.

use std::collections::VecDeque;

use num_traits::{Signed, Zero};

use crate::error::MetricError;
use crate::eval::Rational;

/// Row-major cost entries in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rational>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Rational>) -> Result<Self, MetricError> {
        if entries.len() != rows * cols {
            return Err(MetricError::Dimension { rows, cols, left: entries.len(), right: rows * cols });
        }
        for c in &entries {
            if c.is_negative() || *c > Rational::from_integer(1.into()) {
                return Err(MetricError::OutOfRange(c.to_string()));
            }
        }
        Ok(CostMatrix { rows, cols, entries })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Result<Rational, MetricError>,
    ) -> Result<Self, MetricError> {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j)?);
            }
        }
        CostMatrix::new(rows, cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.cols + j]
    }
}

/// An optimal plan together with the dual potentials proving optimality.
#[derive(Clone, Debug)]
pub struct Transport {
    pub value: Rational,
    /// Basic cells `(i, j, flow)`; cells not listed carry no mass.
    pub plan: Vec<(usize, usize, Rational)>,
    pub u: Vec<Rational>,
    pub v: Vec<Rational>,
}

impl Transport {
    /// Dual feasibility `u_i + v_j ≤ c_ij` and equality of the primal and
    /// dual objectives.
    pub fn certifies(&self, cost: &CostMatrix, supply: &[Rational], demand: &[Rational]) -> bool {
        for i in 0..cost.rows {
            for j in 0..cost.cols {
                if &self.u[i] + &self.v[j] > *cost.get(i, j) {
                    return false;
                }
            }
        }
        let dual: Rational = supply.iter().zip(&self.u).map(|(a, u)| a * u).sum::<Rational>()
            + demand.iter().zip(&self.v).map(|(b, v)| b * v).sum::<Rational>();
        let primal: Rational = self.plan.iter().map(|(i, j, x)| x * cost.get(*i, *j)).sum();
        dual == self.value && primal == self.value
    }
}

struct Tableau<'a> {
    cost: &'a CostMatrix,
    /// `flow[i][j]` is `Some` exactly on basic cells.
    flow: Vec<Vec<Option<Rational>>>,
}

impl Tableau<'_> {
    fn m(&self) -> usize {
        self.cost.rows
    }

    fn n(&self) -> usize {
        self.cost.cols
    }

    /// Tree adjacency: rows are nodes `0..m`, columns `m..m+n`.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let (m, n) = (self.m(), self.n());
        let mut adj = vec![Vec::new(); m + n];
        for i in 0..m {
            for j in 0..n {
                if self.flow[i][j].is_some() {
                    adj[i].push(m + j);
                    adj[m + j].push(i);
                }
            }
        }
        adj
    }

    fn potentials(&self) -> (Vec<Rational>, Vec<Rational>) {
        let (m, n) = (self.m(), self.n());
        let adj = self.adjacency();
        let mut pot: Vec<Option<Rational>> = vec![None; m + n];
        pot[0] = Some(Rational::zero());
        let mut queue = VecDeque::from([0]);
        while let Some(a) = queue.pop_front() {
            let pa = pot[a].clone().expect("visited");
            for &b in &adj[a] {
                if pot[b].is_some() {
                    continue;
                }
                let (i, j) = if a < m { (a, b - m) } else { (b, a - m) };
                pot[b] = Some(self.cost.get(i, j) - &pa);
                queue.push_back(b);
            }
        }
        let pot: Vec<Rational> = pot.into_iter().map(|p| p.expect("basis spans")).collect();
        (pot[..m].to_vec(), pot[m..].to_vec())
    }

    /// Basic cells on the tree path from row `i` to column `j`.
    fn path(&self, i: usize, j: usize) -> Vec<(usize, usize)> {
        let m = self.m();
        let adj = self.adjacency();
        let mut parent = vec![usize::MAX; adj.len()];
        parent[i] = i;
        let mut queue = VecDeque::from([i]);
        while let Some(a) = queue.pop_front() {
            if a == m + j {
                break;
            }
            for &b in &adj[a] {
                if parent[b] == usize::MAX {
                    parent[b] = a;
                    queue.push_back(b);
                }
            }
        }
        let mut cells = Vec::new();
        let mut b = m + j;
        while b != i {
            let a = parent[b];
            cells.push(if a < m { (a, b - m) } else { (b, a - m) });
            b = a;
        }
        cells.reverse();
        cells
    }
}

/// Minimises `Σ x_ij c_ij` subject to row sums `supply` and column sums
/// `demand`. Northwest-corner start, MODI pricing, Bland's rule on both
/// entering and leaving cells.
pub fn solve(cost: &CostMatrix, supply: &[Rational], demand: &[Rational]) -> Result<Transport, MetricError> {
    let (m, n) = (cost.rows, cost.cols);
    if supply.len() != m || demand.len() != n {
        return Err(MetricError::Dimension { rows: m, cols: n, left: supply.len(), right: demand.len() });
    }
    let left: Rational = supply.iter().sum();
    let right: Rational = demand.iter().sum();
    if left != right {
        return Err(MetricError::Unbalanced { left: left.to_string(), right: right.to_string() });
    }
    if m == 0 || n == 0 {
        return Ok(Transport {
            value: Rational::zero(),
            plan: Vec::new(),
            u: vec![Rational::zero(); m],
            v: vec![Rational::zero(); n],
        });
    }

    let mut flow = vec![vec![None; n]; m];
    let (mut a, mut b) = (supply.to_vec(), demand.to_vec());
    let (mut i, mut j) = (0, 0);
    loop {
        let x = if a[i] < b[j] { a[i].clone() } else { b[j].clone() };
        a[i] -= &x;
        b[j] -= &x;
        flow[i][j] = Some(x);
        if i == m - 1 && j == n - 1 {
            break;
        }
        if (a[i].is_zero() && i < m - 1) || j == n - 1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    let mut t = Tableau { cost, flow };

    loop {
        let (u, v) = t.potentials();
        let entering = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .find(|&(i, j)| t.flow[i][j].is_none() && cost.get(i, j) - &u[i] - &v[j] < Rational::zero());
        let Some((ei, ej)) = entering else {
            let mut plan = Vec::new();
            let mut value = Rational::zero();
            for (i, row) in t.flow.iter().enumerate() {
                for (j, x) in row.iter().enumerate() {
                    if let Some(x) = x {
                        value += x * cost.get(i, j);
                        plan.push((i, j, x.clone()));
                    }
                }
            }
            return Ok(Transport { value, plan, u, v });
        };
        let path = t.path(ei, ej);
        let k = path.len();
        let minus: Vec<(usize, usize)> =
            path.iter().enumerate().filter(|(s, _)| (k - 1 - s).is_multiple_of(2)).map(|(_, c)| *c).collect();
        let theta =
            minus.iter().map(|&(i, j)| t.flow[i][j].clone().expect("basic")).min().expect("cycle has a minus cell");
        let leaving = minus
            .iter()
            .filter(|&&(i, j)| t.flow[i][j].as_ref() == Some(&theta))
            .min()
            .copied()
            .expect("minimum attained");
        for (s, &(i, j)) in path.iter().enumerate() {
            let x = t.flow[i][j].as_mut().expect("basic");
            if (k - 1 - s).is_multiple_of(2) {
                *x -= &theta;
            } else {
                *x += &theta;
            }
        }
        t.flow[leaving.0][leaving.1] = None;
        t.flow[ei][ej] = Some(theta);
    }
}
