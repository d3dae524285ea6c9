//! Primal network simplex for the dense transportation problem.
//!
//! Spanning-tree bookkeeping follows the thread/successor representation of
//! LEMON's `NetworkSimplex` with block-search pivoting. Supplies and costs
//! are `f64`; all arcs are uncapacitated.

const STATE_TREE: i8 = 0;
const STATE_LOWER: i8 = 1;
const DIR_UP: i8 = 1;
const DIR_DOWN: i8 = -1;
const NONE: usize = usize::MAX;

pub(crate) struct Solution {
    /// `(source, target, flow)` for positive flows, in arc order.
    pub flows: Vec<(usize, usize, f64)>,
    /// Node potentials: sources first, then targets. Reduced costs
    /// `c_ij + pi_i - pi_j` are nonnegative at optimality.
    pub pi: Vec<f64>,
}

struct Ns {
    n1: usize,
    n2: usize,
    arcs: usize,
    source: Vec<u32>,
    target: Vec<u32>,
    cost: Vec<f64>,
    flow: Vec<f64>,
    state: Vec<i8>,
    pi: Vec<f64>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    pred_dir: Vec<i8>,
    dirty_revs: Vec<usize>,
    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: f64,
    next_arc: usize,
    block: usize,
    eps: f64,
}

/// Solve `min sum c_ij x_ij` with row sums `supply` and column sums
/// `demand`. `cost` is row-major `n1 x n2`. Totals must agree; the caller
/// absorbs rounding beforehand.
pub(crate) fn solve(supply: &[f64], demand: &[f64], cost: &[f64]) -> Solution {
    let (n1, n2) = (supply.len(), demand.len());
    if n1 == 0 || n2 == 0 {
        return Solution {
            flows: Vec::new(),
            pi: vec![0.0; n1 + n2],
        };
    }
    let mut ns = Ns::new(supply, demand, cost);
    ns.run();
    ns.solution()
}

impl Ns {
    fn new(supply: &[f64], demand: &[f64], cost: &[f64]) -> Self {
        let (n1, n2) = (supply.len(), demand.len());
        let n = n1 + n2;
        let m = n1 * n2;
        let all = m + n;
        let root = n;
        let mut source = Vec::with_capacity(all);
        let mut target = Vec::with_capacity(all);
        for i in 0..n1 {
            for j in 0..n2 {
                source.push(i as u32);
                target.push((n1 + j) as u32);
            }
        }
        let max_cost = cost.iter().cloned().fold(0.0, f64::max);
        let art_cost = (max_cost + 1.0) * n as f64;
        let mut c = cost.to_vec();
        c.resize(all, 0.0);
        source.resize(all, 0);
        target.resize(all, 0);
        let mut ns = Ns {
            n1,
            n2,
            arcs: m,
            source,
            target,
            cost: c,
            flow: vec![0.0; all],
            state: vec![STATE_LOWER; all],
            pi: vec![0.0; n + 1],
            parent: vec![NONE; n + 1],
            pred: vec![NONE; n + 1],
            thread: vec![0; n + 1],
            rev_thread: vec![0; n + 1],
            succ_num: vec![0; n + 1],
            last_succ: vec![0; n + 1],
            pred_dir: vec![0; n + 1],
            dirty_revs: Vec::new(),
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0.0,
            next_arc: 0,
            block: ((m as f64).sqrt() as usize).max(10),
            eps: 64.0 * f64::EPSILON * art_cost.max(1.0),
        };
        ns.thread[root] = 0;
        ns.rev_thread[0] = root;
        ns.succ_num[root] = n + 1;
        ns.last_succ[root] = root - 1;
        for u in 0..n {
            let e = m + u;
            ns.parent[u] = root;
            ns.pred[u] = e;
            ns.thread[u] = u + 1;
            ns.rev_thread[u + 1] = u;
            ns.succ_num[u] = 1;
            ns.last_succ[u] = u;
            ns.state[e] = STATE_TREE;
            let s = if u < n1 { supply[u] } else { -demand[u - n1] };
            if s >= 0.0 {
                ns.pred_dir[u] = DIR_UP;
                ns.pi[u] = 0.0;
                ns.source[e] = u as u32;
                ns.target[e] = root as u32;
                ns.flow[e] = s;
                ns.cost[e] = 0.0;
            } else {
                ns.pred_dir[u] = DIR_DOWN;
                ns.pi[u] = art_cost;
                ns.source[e] = root as u32;
                ns.target[e] = u as u32;
                ns.flow[e] = -s;
                ns.cost[e] = art_cost;
            }
        }
        ns
    }

    fn reduced(&self, e: usize) -> f64 {
        self.state[e] as f64
            * (self.cost[e] + self.pi[self.source[e] as usize] - self.pi[self.target[e] as usize])
    }

    fn find_entering(&mut self) -> bool {
        let mut min = -self.eps;
        let mut found = NONE;
        let mut cnt = self.block;
        let m = self.arcs;
        let start = self.next_arc;
        let mut e = start;
        for _ in 0..m {
            let c = self.reduced(e);
            if c < min {
                min = c;
                found = e;
            }
            e += 1;
            if e == m {
                e = 0;
            }
            cnt -= 1;
            if cnt == 0 {
                if found != NONE {
                    break;
                }
                cnt = self.block;
            }
        }
        if found == NONE {
            return false;
        }
        self.in_arc = found;
        self.next_arc = e;
        true
    }

    fn find_join(&mut self) {
        let mut u = self.source[self.in_arc] as usize;
        let mut v = self.target[self.in_arc] as usize;
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    /// Returns whether the tree changes (always, for uncapacitated arcs).
    fn find_leaving(&mut self) -> bool {
        let (first, second) = (
            self.source[self.in_arc] as usize,
            self.target[self.in_arc] as usize,
        );
        self.delta = f64::INFINITY;
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            let e = self.pred[u];
            let d = if self.pred_dir[u] == DIR_DOWN {
                f64::INFINITY
            } else {
                self.flow[e]
            };
            if d < self.delta {
                self.delta = d;
                self.u_out = u;
                result = 1;
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != self.join {
            let e = self.pred[u];
            let d = if self.pred_dir[u] == DIR_UP {
                f64::INFINITY
            } else {
                self.flow[e]
            };
            if d <= self.delta {
                self.delta = d;
                self.u_out = u;
                result = 2;
            }
            u = self.parent[u];
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        result != 0
    }

    fn change_flow(&mut self) {
        let val = self.delta;
        if val > 0.0 {
            self.flow[self.in_arc] += val;
            let mut u = self.source[self.in_arc] as usize;
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] -= self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
            let mut u = self.target[self.in_arc] as usize;
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] += self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
        }
        self.state[self.in_arc] = STATE_TREE;
        let out = self.pred[self.u_out];
        self.flow[out] = 0.0;
        self.state[out] = STATE_LOWER;
    }

    fn update_tree(&mut self) {
        let u_in = self.u_in;
        let v_in = self.v_in;
        let u_out = self.u_out;
        let join = self.join;
        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = if u_in == self.source[self.in_arc] as usize {
                DIR_UP
            } else {
                DIR_DOWN
            };
            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue = if old_rev_thread == v_in {
                self.thread[old_last_succ]
            } else {
                self.thread[v_in]
            };
            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);
                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;
                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;
                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;
            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }
            for k in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[k];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }
            let mut tmp_sc = 0usize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            while u != u_in {
                let p = self.parent[u];
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                tmp_sc += self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
            }
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = if u_in == self.source[self.in_arc] as usize {
                DIR_UP
            } else {
                DIR_DOWN
            };
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[join] == v_in {
            join
        } else {
            NONE
        };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }
        if join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }
        let mut u = v_in;
        while u != join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let u_in = self.u_in;
        let c = self.cost[self.in_arc];
        let sigma = self.pi[self.v_in] - self.pi[u_in] - self.pred_dir[u_in] as f64 * c;
        let end = self.thread[self.last_succ[u_in]];
        let mut u = u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    fn run(&mut self) {
        while self.find_entering() {
            self.find_join();
            if !self.find_leaving() || !self.delta.is_finite() {
                break;
            }
            self.change_flow();
            self.update_tree();
            self.update_potential();
        }
    }

    fn solution(&self) -> Solution {
        let mut flows = Vec::new();
        for e in 0..self.arcs {
            if self.flow[e] > 0.0 {
                flows.push((e / self.n2, e % self.n2, self.flow[e]));
            }
        }
        let n = self.n1 + self.n2;
        Solution {
            flows,
            pi: self.pi[..n].to_vec(),
        }
    }
}
