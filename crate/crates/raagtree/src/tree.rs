//! Labeled trees on `{1..n}`: construction, Prüfer coding, metric structure,
//! deep nodes, the invariant `upsilon`, and the vertex partial order.

use std::collections::VecDeque;

use crate::error::TreeError;

/// An unrooted tree on nodes `{1..n}` with cached adjacency lists.
///
/// Immutable after construction; all operations are pure and the value is
/// safe to share across threads.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledTree {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl LabeledTree {
    /// Builds a tree from an edge list, verifying that it really is one:
    /// labels in range, no self-loops or duplicate edges, exactly `n - 1`
    /// edges and connected. `n = 1` with no edges is accepted.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, TreeError> {
        if n == 0 {
            return Err(TreeError::NotATree("a tree has at least one node".into()));
        }
        if edges.len() != n - 1 {
            return Err(TreeError::NotATree(format!(
                "expected {} edges, got {}",
                n - 1,
                edges.len()
            )));
        }
        let mut norm: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u == 0 || u > n {
                return Err(TreeError::BadLabel { label: u, n });
            }
            if v == 0 || v > n {
                return Err(TreeError::BadLabel { label: v, n });
            }
            if u == v {
                return Err(TreeError::NotATree(format!("self-loop at {u}")));
            }
            norm.push((u.min(v), u.max(v)));
        }
        norm.sort_unstable();
        if norm.windows(2).any(|w| w[0] == w[1]) {
            return Err(TreeError::NotATree("duplicate edge".into()));
        }
        let mut adj = vec![Vec::new(); n + 1];
        for &(u, v) in &norm {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let tree = LabeledTree { n, edges: norm, adj };
        // n-1 edges and no duplicates, so connectivity is the only thing left.
        if tree.reachable_from(1) != n {
            return Err(TreeError::NotATree("disconnected".into()));
        }
        Ok(tree)
    }

    /// Parses the tree text format: first line `n`, then `n-1` lines `u v`,
    /// or the single line `prufer: c1 c2 ... c_{n-2}`.
    pub fn parse(text: &str) -> Result<Self, TreeError> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let first = lines
            .next()
            .ok_or_else(|| TreeError::NotATree("empty input".into()))?;
        if let Some(rest) = first.strip_prefix("prufer:") {
            let code: Vec<usize> = rest
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>()
                        .map_err(|_| TreeError::NotATree(format!("bad code symbol {tok:?}")))
                })
                .collect::<Result<_, _>>()?;
            let n = code.len() + 2;
            return PruferCode::new(n, code)?.decode();
        }
        let n: usize = first
            .parse()
            .map_err(|_| TreeError::NotATree(format!("bad node count {first:?}")))?;
        let mut edges = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace();
            let u = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| TreeError::NotATree(format!("bad edge line {line:?}")))?;
            let v = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| TreeError::NotATree(format!("bad edge line {line:?}")))?;
            edges.push((u, v));
        }
        Self::from_edges(n, &edges)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Edges as `(min, max)` pairs in sorted order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Neighbors of `v` in ascending order (the link of `v`).
    pub fn link(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.adj[v].len() == 1
    }

    /// Degree-1 nodes in ascending order.
    pub fn leaves(&self) -> Vec<usize> {
        (1..=self.n).filter(|&v| self.is_leaf(v)).collect()
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    fn check_label(&self, v: usize) -> Result<(), TreeError> {
        if v == 0 || v > self.n {
            Err(TreeError::BadLabel { label: v, n: self.n })
        } else {
            Ok(())
        }
    }

    fn reachable_from(&self, start: usize) -> usize {
        let mut seen = vec![false; self.n + 1];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 0;
        while let Some(v) = stack.pop() {
            count += 1;
            for &w in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        count
    }

    /// Breadth-first distances from `v` to every node.
    pub fn distances_from(&self, v: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n + 1];
        dist[v] = 0;
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            for &w in &self.adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn distance(&self, u: usize, v: usize) -> usize {
        self.distances_from(u)[v]
    }

    /// Distance to the boundary for every node, by multi-source BFS from all
    /// leaves. Entry 0 of the returned vector is unused.
    fn boundary_distances(&self) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n + 1];
        let mut queue = VecDeque::new();
        for v in 1..=self.n {
            if self.is_leaf(v) {
                dist[v] = 0;
                queue.push_back(v);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &w in &self.adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Boundary distances, deep set, shallowness and the invariant `upsilon`.
    ///
    /// Rejects the single-node tree: it has no boundary in the degree-1
    /// sense, so the profile is undefined there.
    pub fn boundary_profile(&self) -> Result<BoundaryProfile, TreeError> {
        if self.n < 2 {
            return Err(TreeError::TooSmall { n: self.n, min: 2 });
        }
        let dist = self.boundary_distances();
        let deep: Vec<usize> = (1..=self.n).filter(|&v| dist[v] >= 3).collect();
        let upsilon: u64 = deep
            .iter()
            .map(|&v| self.second_generation_size(v) as u64)
            .sum();
        Ok(BoundaryProfile {
            dist_to_boundary: dist,
            shallow: deep.is_empty(),
            deep,
            upsilon,
        })
    }

    /// Number of nodes exactly two steps away from `v`; for a tree this is
    /// `sum over w in lk(v) of (deg(w) - 1)`.
    pub fn second_generation_size(&self, v: usize) -> usize {
        self.adj[v].iter().map(|&w| self.degree(w) - 1).sum()
    }

    /// The vertex partial order: `v <= w` iff `lk(v)` is contained in `st(w)`.
    pub fn leq(&self, v: usize, w: usize) -> Result<bool, TreeError> {
        self.check_label(v)?;
        self.check_label(w)?;
        Ok(self.adj[v]
            .iter()
            .all(|&x| x == w || self.adjacent(x, w)))
    }

    /// Two-sided `<=`.
    pub fn sim(&self, v: usize, w: usize) -> Result<bool, TreeError> {
        Ok(self.leq(v, w)? && self.leq(w, v)?)
    }

    /// A node is thin when its `~`-equivalence class is a singleton.
    pub fn is_thin(&self, v: usize) -> Result<bool, TreeError> {
        self.check_label(v)?;
        for w in 1..=self.n {
            if w != v && self.sim(v, w)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Tree characterization of `<=`: for trees with at least 3 nodes,
    /// `v <= w` iff `v` is a leaf and `d(v, w) <= 2`. The diagonal is a
    /// special case: `v <= v` always holds by reflexivity even though the
    /// leaf criterion reads false for internal nodes.
    pub fn leq_tree_characterization(&self, v: usize, w: usize) -> Result<bool, TreeError> {
        if self.n < 3 {
            return Err(TreeError::TooSmall { n: self.n, min: 3 });
        }
        self.check_label(v)?;
        self.check_label(w)?;
        if v == w {
            return Ok(true);
        }
        Ok(self.is_leaf(v) && self.distance(v, w) <= 2)
    }

    /// Tree characterization of `~`: `v ~ w` iff both are leaves with a
    /// common neighbor. Diagonal special-cased as in
    /// [`LabeledTree::leq_tree_characterization`].
    pub fn sim_tree_characterization(&self, v: usize, w: usize) -> Result<bool, TreeError> {
        if self.n < 3 {
            return Err(TreeError::TooSmall { n: self.n, min: 3 });
        }
        self.check_label(v)?;
        self.check_label(w)?;
        if v == w {
            return Ok(true);
        }
        Ok(self.is_leaf(v)
            && self.is_leaf(w)
            && (1..=self.n).any(|u| self.adjacent(v, u) && self.adjacent(w, u)))
    }

    /// The `~`-equivalence classes with at least two elements, each sorted.
    /// In a tree these are exactly the sets of leaves sharing a neighbor.
    pub fn sim_classes(&self) -> Vec<Vec<usize>> {
        let mut classes = Vec::new();
        let mut assigned = vec![false; self.n + 1];
        for v in 1..=self.n {
            if assigned[v] {
                continue;
            }
            let mut class = vec![v];
            for w in v + 1..=self.n {
                if !assigned[w] && self.sim(v, w).unwrap() {
                    class.push(w);
                    assigned[w] = true;
                }
            }
            if class.len() >= 2 {
                classes.push(class);
            }
        }
        classes
    }

    /// Connected components of the full subgraph on `V - st(v)`, each sorted,
    /// ordered by smallest element.
    pub fn components_without_star(&self, v: usize) -> Vec<Vec<usize>> {
        let mut removed = vec![false; self.n + 1];
        removed[v] = true;
        for &w in &self.adj[v] {
            removed[w] = true;
        }
        let mut seen = vec![false; self.n + 1];
        let mut comps = Vec::new();
        for start in 1..=self.n {
            if removed[start] || seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &w in &self.adj[u] {
                    if !removed[w] && !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    /// Prüfer code of this tree under the smallest-leaf-first convention.
    pub fn prufer_encode(&self) -> PruferCode {
        if self.n <= 2 {
            return PruferCode {
                n: self.n,
                code: Vec::new(),
            };
        }
        let mut degree: Vec<usize> = (0..=self.n).map(|v| self.adj[v].len()).collect();
        let mut gone = vec![false; self.n + 1];
        let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = (1..=self.n)
            .filter(|&v| degree[v] == 1)
            .map(std::cmp::Reverse)
            .collect();
        let mut code = Vec::with_capacity(self.n - 2);
        for _ in 0..self.n - 2 {
            let leaf = heap.pop().expect("tree always has a leaf").0;
            gone[leaf] = true;
            let &parent = self.adj[leaf]
                .iter()
                .find(|&&w| !gone[w])
                .expect("leaf has a live neighbor");
            code.push(parent);
            degree[parent] -= 1;
            if degree[parent] == 1 {
                heap.push(std::cmp::Reverse(parent));
            }
        }
        PruferCode { n: self.n, code }
    }

    /// Applies a relabeling `perm` (1-based, `perm[v]` is the new label of `v`).
    pub fn relabel(&self, perm: &[usize]) -> Result<Self, TreeError> {
        if perm.len() != self.n + 1 {
            return Err(TreeError::NotATree("bad permutation length".into()));
        }
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        Self::from_edges(self.n, &edges)
    }

    /// Lexicographically-least edge list over all relabelings. Brute force
    /// over permutations; intended for deduplication at small n.
    pub fn canonical_edges(&self) -> Vec<(usize, usize)> {
        let mut perm: Vec<usize> = (0..=self.n).collect();
        let mut best: Option<Vec<(usize, usize)>> = None;
        permute(&mut perm, 1, &mut |p| {
            let mut edges: Vec<(usize, usize)> = self
                .edges
                .iter()
                .map(|&(u, v)| (p[u].min(p[v]), p[u].max(p[v])))
                .collect();
            edges.sort_unstable();
            if best.as_ref().is_none_or(|b| edges < *b) {
                best = Some(edges);
            }
        });
        best.unwrap_or_default()
    }
}

fn permute(perm: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k >= perm.len() {
        visit(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, visit);
        perm.swap(k, i);
    }
}

/// Per-node distance to the boundary together with the derived deep-node data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryProfile {
    dist_to_boundary: Vec<usize>,
    deep: Vec<usize>,
    shallow: bool,
    upsilon: u64,
}

impl BoundaryProfile {
    /// `d(v, boundary)` in graph-distance units.
    pub fn dist(&self, v: usize) -> usize {
        self.dist_to_boundary[v]
    }

    /// The deep nodes (distance at least 3 from every leaf), ascending.
    pub fn deep(&self) -> &[usize] {
        &self.deep
    }

    pub fn is_shallow(&self) -> bool {
        self.shallow
    }

    /// `upsilon = sum over deep v of sum over w in lk(v) of (deg(w) - 1)`.
    pub fn upsilon(&self) -> u64 {
        self.upsilon
    }
}

/// A Prüfer sequence: `n - 2` labels in `{1..n}` (empty for `n <= 2`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PruferCode {
    n: usize,
    code: Vec<usize>,
}

impl PruferCode {
    pub fn new(n: usize, code: Vec<usize>) -> Result<Self, TreeError> {
        if n == 0 {
            return Err(TreeError::TooSmall { n, min: 1 });
        }
        if code.len() != n.saturating_sub(2) {
            return Err(TreeError::NotATree(format!(
                "code length {} does not match n = {}",
                code.len(),
                n
            )));
        }
        for &c in &code {
            if c == 0 || c > n {
                return Err(TreeError::BadLabel { label: c, n });
            }
        }
        Ok(PruferCode { n, code })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn symbols(&self) -> &[usize] {
        &self.code
    }

    /// Rebuilds the tree: repeatedly join the smallest remaining leaf to the
    /// next code symbol. Inverse of [`LabeledTree::prufer_encode`].
    pub fn decode(&self) -> Result<LabeledTree, TreeError> {
        let n = self.n;
        if n == 1 {
            return LabeledTree::from_edges(1, &[]);
        }
        if n == 2 {
            return LabeledTree::from_edges(2, &[(1, 2)]);
        }
        let mut degree = vec![1usize; n + 1];
        for &c in &self.code {
            degree[c] += 1;
        }
        let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = (1..=n)
            .filter(|&v| degree[v] == 1)
            .map(std::cmp::Reverse)
            .collect();
        let mut edges = Vec::with_capacity(n - 1);
        for &c in &self.code {
            let leaf = heap.pop().expect("code leaves a leaf available").0;
            edges.push((leaf, c));
            degree[leaf] -= 1;
            degree[c] -= 1;
            if degree[c] == 1 {
                heap.push(std::cmp::Reverse(c));
            }
        }
        let u = heap.pop().expect("two nodes remain").0;
        let v = heap.pop().expect("two nodes remain").0;
        edges.push((u, v));
        LabeledTree::from_edges(n, &edges)
    }
}

/// The path `1 - 2 - ... - n`.
pub fn path_tree(n: usize) -> LabeledTree {
    let edges: Vec<(usize, usize)> = (1..n).map(|v| (v, v + 1)).collect();
    LabeledTree::from_edges(n, &edges).expect("path is a tree")
}

/// The star with center `1` and leaves `2..=n`.
pub fn star_tree(n: usize) -> LabeledTree {
    let edges: Vec<(usize, usize)> = (2..=n).map(|v| (1, v)).collect();
    LabeledTree::from_edges(n, &edges).expect("star is a tree")
}
