//! Progressive edge growth with an ACE constraint.
//!
//! Variable nodes are connected one edge at a time in order of decreasing
//! degree. For every new edge the current Tanner graph is explored from the
//! variable node; this yields, for each check node, its distance and the
//! smallest ACE (sum of `degree - 2` over the variable nodes) of any path to
//! it no longer than `2 * ace_depth - 1`. A check is eligible if it still has
//! spare degree, is not at distance 1 or 3 (no repeated edges, no 4-cycles),
//! and closing the cycle through it would not create a cycle of length at
//! most `2 * ace_depth` with ACE below `ace_eta`. Among eligible checks those
//! below their target degree come first, then the farthest, then the one with
//! most spare degree, then the one with the largest cycle ACE; remaining ties
//! are broken at random.

use super::degree::DegreeDistribution;
use super::encoder::gf2_rank;
use super::sparse::SparseMatrix;
use super::{LdpcCode, LdpcError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

const UNREACHED: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructParams {
    pub ace_depth: usize,
    pub ace_eta: u32,
    pub seed: u64,
    /// Fresh attempts (new seed stream) after a dead end or a rank-deficient
    /// matrix.
    pub max_retries: usize,
}

impl Default for ConstructParams {
    fn default() -> Self {
        ConstructParams {
            ace_depth: 10,
            ace_eta: 4,
            seed: 1,
            max_retries: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionReport {
    pub n: usize,
    pub k: usize,
    pub girth: Option<usize>,
    /// Variable degree -> (target count, realized count).
    pub variable_degrees: BTreeMap<usize, (usize, usize)>,
    /// Check degree -> realized count.
    pub check_degrees: BTreeMap<usize, usize>,
    pub ace_depth: usize,
    pub ace_eta: u32,
    /// Smallest ACE over cycles of length <= 2 * ace_depth, `None` if there
    /// are no such cycles.
    pub min_cycle_ace: Option<u32>,
    pub attempts: usize,
    /// Whether checks were allowed past their target degree.
    pub relaxed_check_degrees: bool,
}

impl ConstructionReport {
    /// Largest |target - realized| over variable degrees.
    pub fn max_degree_deviation(&self) -> usize {
        self.variable_degrees
            .values()
            .map(|&(t, r)| t.abs_diff(r))
            .max()
            .unwrap_or(0)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "n = {}\nk = {}\ngirth = {}\nace_depth = {}\nace_eta = {}\nmin_cycle_ace = {}\nattempts = {}\nrelaxed_check_degrees = {}\n",
            self.n,
            self.k,
            self.girth.map_or("inf".to_string(), |g| g.to_string()),
            self.ace_depth,
            self.ace_eta,
            self.min_cycle_ace.map_or("none".to_string(), |a| a.to_string()),
            self.attempts,
            self.relaxed_check_degrees,
        );
        s.push_str("variable_degree target realized deviation\n");
        for (d, (t, r)) in &self.variable_degrees {
            s.push_str(&format!("{d} {t} {r} {}\n", t.abs_diff(*r)));
        }
        s.push_str("check_degree count\n");
        for (d, c) in &self.check_degrees {
            s.push_str(&format!("{d} {c}\n"));
        }
        s
    }
}

/// Splits `total` items over `fractions` with largest-remainder rounding.
pub fn apportion(fractions: &BTreeMap<usize, f64>, total: usize) -> BTreeMap<usize, usize> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut rema: Vec<(f64, usize)> = Vec::new();
    let mut assigned = 0;
    for (&d, &f) in fractions {
        let exact = f * total as f64;
        let base = exact.floor() as usize;
        counts.insert(d, base);
        assigned += base;
        rema.push((exact - base as f64, d));
    }
    rema.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, d) in rema.iter().cycle().take(total.saturating_sub(assigned)) {
        *counts.get_mut(&d).unwrap() += 1;
    }
    counts
}

/// Builds an `(n, k)` code realizing `dd`.
pub fn construct_peg_ace(
    dd: &DegreeDistribution,
    n: usize,
    k: usize,
    params: &ConstructParams,
) -> Result<(LdpcCode, ConstructionReport), LdpcError> {
    if k == 0 || k >= n {
        return Err(LdpcError::Construction {
            column: None,
            reason: format!("need 0 < k < n, got n = {n}, k = {k}"),
        });
    }
    if params.ace_depth < 2 {
        return Err(LdpcError::Construction {
            column: None,
            reason: "ace_depth must be at least 2".into(),
        });
    }
    let m = n - k;
    let var_counts = apportion(dd.variable(), n);
    if let Some(&d) = var_counts.keys().find(|&&d| d < 2 || d > m) {
        return Err(LdpcError::Construction {
            column: None,
            reason: format!("variable degree {d} not realizable with {m} checks"),
        });
    }
    // Highest degree first: in a dense high-rate graph the wide columns run
    // out of 4-cycle-free checks if they are placed last.
    let var_degrees: Vec<usize> = var_counts
        .iter()
        .rev()
        .flat_map(|(&d, &c)| std::iter::repeat_n(d, c))
        .collect();
    let edges: usize = var_degrees.iter().sum();
    let check_targets = check_targets(dd, m, edges)?;

    // Strict passes first. If every seed dead-ends, the same seeds are rerun
    // letting full checks take extra edges, which trades exact check degrees
    // for completing the graph.
    let mut last_err = None;
    let tries = params.max_retries + 1;
    for attempt in 0..2 * tries {
        let seed = params
            .seed
            .wrapping_add(((attempt % tries) as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let relaxed = attempt >= tries;
        let mut peg = Peg::new(&var_degrees, &check_targets, params, seed, relaxed);
        match peg.run() {
            Ok(mut h) => {
                if gf2_rank(&h) < m {
                    last_err = Some(LdpcError::Construction {
                        column: None,
                        reason: "parity-check matrix is rank deficient".into(),
                    });
                    continue;
                }
                h.normalize();
                let min_cycle_ace = min_cycle_ace(&h, params.ace_depth);
                let girth = h.girth();
                let realized = (0..n).fold(BTreeMap::new(), |mut acc, c| {
                    *acc.entry(h.col_weight(c)).or_insert(0usize) += 1;
                    acc
                });
                let mut variable_degrees: BTreeMap<usize, (usize, usize)> = var_counts
                    .iter()
                    .map(|(&d, &c)| (d, (c, realized.get(&d).copied().unwrap_or(0))))
                    .collect();
                for (&d, &c) in &realized {
                    variable_degrees.entry(d).or_insert((0, c));
                }
                let check_degrees = (0..m).fold(BTreeMap::new(), |mut acc, r| {
                    *acc.entry(h.row_weight(r)).or_insert(0usize) += 1;
                    acc
                });
                let code = LdpcCode::from_h(h)?;
                let report = ConstructionReport {
                    n,
                    k,
                    girth,
                    variable_degrees,
                    check_degrees,
                    ace_depth: params.ace_depth,
                    ace_eta: params.ace_eta,
                    min_cycle_ace,
                    attempts: attempt + 1,
                    relaxed_check_degrees: relaxed,
                };
                return Ok((code, report));
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// Per-check target degrees summing to `edges`, drawn from the check
/// distribution and evened out one unit at a time.
fn check_targets(dd: &DegreeDistribution, m: usize, edges: usize) -> Result<Vec<usize>, LdpcError> {
    let counts = apportion(dd.check(), m);
    let mut targets: Vec<usize> = counts
        .iter()
        .flat_map(|(&d, &c)| std::iter::repeat_n(d, c))
        .collect();
    let mut sum: usize = targets.iter().sum();
    let mut i = 0;
    while sum < edges {
        // Raise the smallest targets first.
        let j = (0..m)
            .min_by_key(|&j| (targets[j], (j + m - i % m) % m))
            .unwrap();
        targets[j] += 1;
        sum += 1;
        i += 1;
    }
    while sum > edges {
        let j = (0..m).max_by_key(|&j| (targets[j], (j + i) % m)).unwrap();
        if targets[j] <= 1 {
            break;
        }
        targets[j] -= 1;
        sum -= 1;
        i += 1;
    }
    if sum != edges {
        return Err(LdpcError::Construction {
            column: None,
            reason: format!("cannot spread {edges} edges over {m} checks"),
        });
    }
    Ok(targets)
}

struct Peg<'a> {
    var_degrees: &'a [usize],
    targets: &'a [usize],
    ace: Vec<u32>,
    cols: Vec<Vec<usize>>,
    rows: Vec<Vec<usize>>,
    search: AceSearch,
    limit: usize,
    eta: u32,
    relaxed: bool,
    rng: ChaCha8Rng,
}

impl<'a> Peg<'a> {
    fn new(
        var_degrees: &'a [usize],
        targets: &'a [usize],
        params: &ConstructParams,
        seed: u64,
        relaxed: bool,
    ) -> Self {
        let n = var_degrees.len();
        let m = targets.len();
        Peg {
            var_degrees,
            targets,
            ace: var_degrees.iter().map(|&d| d as u32 - 2).collect(),
            cols: vec![Vec::new(); n],
            rows: vec![Vec::new(); m],
            search: AceSearch::new(n, m),
            limit: 2 * params.ace_depth - 1,
            eta: params.ace_eta,
            relaxed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn run(&mut self) -> Result<SparseMatrix, LdpcError> {
        let n = self.var_degrees.len();
        let m = self.targets.len();
        for v in 0..n {
            for _ in 0..self.var_degrees[v] {
                let c = self.pick_check(v)?;
                self.cols[v].push(c);
                self.rows[c].push(v);
            }
        }
        let entries = self
            .cols
            .iter()
            .enumerate()
            .flat_map(|(v, cs)| cs.iter().map(move |&c| (c, v)));
        Ok(SparseMatrix::from_entries(m, n, entries).expect("construction never repeats an edge"))
    }

    fn pick_check(&mut self, v: usize) -> Result<usize, LdpcError> {
        let m = self.targets.len();
        let spare = |c: usize| self.targets[c] as i64 - self.rows[c].len() as i64;
        if self.cols[v].is_empty() {
            let best = (0..m).map(spare).max().unwrap_or(0);
            let ties: Vec<usize> = (0..m).filter(|&c| spare(c) == best).collect();
            return Ok(ties[self.rng.random_range(0..ties.len())]);
        }

        self.search
            .run(&self.cols, &self.rows, &self.ace, v, None, self.limit);
        // Larger is better. In relaxed mode checks already at their target
        // degree stay eligible as a last resort.
        let mut best_key = None;
        let mut ties = Vec::new();
        for c in 0..m {
            let dist = self.search.check_dist[c];
            if dist <= 3 {
                continue;
            }
            let cycle_ace = self.search.check_ace[c];
            if cycle_ace != UNREACHED && cycle_ace < self.eta {
                continue;
            }
            let s = spare(c);
            if s <= 0 && !self.relaxed {
                continue;
            }
            let key = (s > 0, dist, s, cycle_ace);
            match best_key {
                Some(b) if key < b => {}
                Some(b) if key == b => ties.push(c),
                _ => {
                    best_key = Some(key);
                    ties.clear();
                    ties.push(c);
                }
            }
        }
        if ties.is_empty() {
            return Err(self.dead_end(v, "no check node satisfies the girth and ACE constraints"));
        }
        Ok(ties[self.rng.random_range(0..ties.len())])
    }

    fn dead_end(&self, v: usize, reason: &str) -> LdpcError {
        LdpcError::Construction {
            column: Some(v),
            reason: format!(
                "{reason} (column {v}, degree {}, edge {})",
                self.var_degrees[v],
                self.cols[v].len() + 1
            ),
        }
    }
}

/// Bounded-length search from one variable node recording, for every check,
/// its BFS distance and the minimum ACE over walks of at most `limit` edges.
/// Walk minima equal path minima because ACE terms are nonnegative.
struct AceSearch {
    var_ace: Vec<u32>,
    check_ace: Vec<u32>,
    check_dist: Vec<u32>,
    var_dist: Vec<u32>,
    frontier: Vec<usize>,
    next: Vec<usize>,
}

impl AceSearch {
    fn new(n: usize, m: usize) -> Self {
        AceSearch {
            var_ace: vec![UNREACHED; n],
            check_ace: vec![UNREACHED; m],
            check_dist: vec![UNREACHED; m],
            var_dist: vec![UNREACHED; n],
            frontier: Vec::new(),
            next: Vec::new(),
        }
    }

    /// `skip` removes the single edge `(start, check)` from the graph.
    fn run(
        &mut self,
        cols: &[Vec<usize>],
        rows: &[Vec<usize>],
        ace: &[u32],
        start: usize,
        skip: Option<usize>,
        limit: usize,
    ) {
        self.var_ace.fill(UNREACHED);
        self.var_dist.fill(UNREACHED);
        self.check_ace.fill(UNREACHED);
        self.check_dist.fill(UNREACHED);
        self.frontier.clear();
        self.var_ace[start] = ace[start];
        self.var_dist[start] = 0;
        self.frontier.push(start);
        let mut step = 0u32;
        while !self.frontier.is_empty() {
            step += 1;
            let within = step as usize <= limit;
            self.next.clear();
            if step % 2 == 1 {
                for &u in &self.frontier {
                    let val = self.var_ace[u];
                    for &c in &cols[u] {
                        if u == start && Some(c) == skip {
                            continue;
                        }
                        let mut push = false;
                        if self.check_dist[c] == UNREACHED {
                            self.check_dist[c] = step;
                            push = true;
                        }
                        if within && val < self.check_ace[c] {
                            self.check_ace[c] = val;
                            push = true;
                        }
                        if push {
                            self.next.push(c);
                        }
                    }
                }
            } else {
                for &c in &self.frontier {
                    let val = self.check_ace[c];
                    for &u in &rows[c] {
                        if u == start && Some(c) == skip {
                            continue;
                        }
                        let mut push = false;
                        if self.var_dist[u] == UNREACHED {
                            self.var_dist[u] = step;
                            push = true;
                        }
                        if within && val != UNREACHED && val + ace[u] < self.var_ace[u] {
                            self.var_ace[u] = val + ace[u];
                            push = true;
                        }
                        if push {
                            self.next.push(u);
                        }
                    }
                }
            }
            self.next.sort_unstable();
            self.next.dedup();
            std::mem::swap(&mut self.frontier, &mut self.next);
        }
    }
}

/// Minimum ACE over all cycles of length at most `2 * depth`, using each
/// column's actual weight as its degree.
pub fn min_cycle_ace(h: &SparseMatrix, depth: usize) -> Option<u32> {
    let n = h.num_cols();
    let m = h.num_rows();
    let cols: Vec<Vec<usize>> = (0..n).map(|c| h.col(c).to_vec()).collect();
    let rows: Vec<Vec<usize>> = (0..m).map(|r| h.row(r).to_vec()).collect();
    let ace: Vec<u32> = (0..n)
        .map(|c| (h.col_weight(c) as u32).saturating_sub(2))
        .collect();
    let mut search = AceSearch::new(n, m);
    let mut best: Option<u32> = None;
    for v in 0..n {
        for &c in &cols[v] {
            search.run(&cols, &rows, &ace, v, Some(c), 2 * depth - 1);
            let a = search.check_ace[c];
            if a != UNREACHED {
                best = Some(best.map_or(a, |b| b.min(a)));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn regular(dv: usize, dc: usize) -> DegreeDistribution {
        DegreeDistribution::new(
            [(dv, 1.0)].into_iter().collect(),
            [(dc, 1.0)].into_iter().collect(),
            1.0 - dv as f64 / dc as f64,
        )
        .unwrap()
    }

    #[test]
    fn apportion_is_exact() {
        let f: BTreeMap<usize, f64> = [(2, 0.08), (3, 0.85), (8, 0.065), (19, 0.005)]
            .into_iter()
            .collect();
        let c = apportion(&f, 2048);
        assert_eq!(c.values().sum::<usize>(), 2048);
        for (d, &cnt) in &c {
            assert!((cnt as f64 - f[d] * 2048.0).abs() < 1.0);
        }
    }

    #[test]
    fn small_regular_code() {
        let params = ConstructParams {
            ace_depth: 3,
            ace_eta: 0,
            ..ConstructParams::default()
        };
        let (code, report) = construct_peg_ace(&regular(3, 6), 40, 20, &params).unwrap();
        assert_eq!((code.h().num_rows(), code.h().num_cols()), (20, 40));
        assert!(code.h().girth().unwrap_or(usize::MAX) >= 6);
        assert_eq!(report.max_degree_deviation(), 0);
        assert!((0..40).all(|c| code.h().col_weight(c) == 3));
        assert!((0..20).all(|r| code.h().row_weight(r) == 6));
    }

    #[test]
    fn four_cycle_free_sixteen_by_eight_is_impossible() {
        // 16 weight-3 columns need 48 distinct row pairs; 8 rows have 28.
        let params = ConstructParams {
            ace_depth: 3,
            ace_eta: 0,
            ..ConstructParams::default()
        };
        assert!(matches!(
            construct_peg_ace(&regular(3, 6), 16, 8, &params),
            Err(LdpcError::Construction {
                column: Some(_),
                ..
            })
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let params = ConstructParams {
            ace_eta: 0,
            ..ConstructParams::default()
        };
        let a = construct_peg_ace(&regular(3, 6), 64, 32, &params)
            .unwrap()
            .0;
        let b = construct_peg_ace(&regular(3, 6), 64, 32, &params)
            .unwrap()
            .0;
        assert_eq!(a.h(), b.h());
    }

    #[test]
    fn min_cycle_ace_of_known_graph() {
        // 6-cycle through three degree-2 columns, plus a degree-3 column.
        let h = SparseMatrix::from_entries(
            3,
            4,
            [
                (0, 0),
                (2, 0),
                (0, 1),
                (1, 1),
                (1, 2),
                (2, 2),
                (0, 3),
                (1, 3),
                (2, 3),
            ],
        )
        .unwrap();
        assert_eq!(min_cycle_ace(&h, 3), Some(0));
        assert_eq!(min_cycle_ace(&h, 1), None);
    }

    #[test]
    fn ace_constraint_is_enforced() {
        // Degree-2 columns only: every cycle has ACE 0, so eta = 1 with a
        // reach covering the graph must fail and report a column.
        let dd = DegreeDistribution::new(
            [(2, 1.0)].into_iter().collect(),
            [(4, 1.0)].into_iter().collect(),
            0.5,
        )
        .unwrap();
        let params = ConstructParams {
            ace_depth: 10,
            ace_eta: 1,
            max_retries: 2,
            ..ConstructParams::default()
        };
        match construct_peg_ace(&dd, 40, 20, &params) {
            Err(LdpcError::Construction {
                column: Some(_), ..
            }) => {}
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
