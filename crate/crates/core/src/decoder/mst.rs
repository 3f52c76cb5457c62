//! Chu-Liu/Edmonds maximum spanning arborescence over a dense score
//! matrix.
//!
//! The contraction follows the usual recipe for the maximizing variant:
//! pick the best incoming arc of every node, contract a cycle into a single
//! node whose incoming arcs are rescored by the cycle arc they replace,
//! recurse, then expand. The constant cycle weight is dropped from the
//! contracted scores since every arborescence of the contracted graph
//! enters the cycle exactly once.

/// `weights[h][d]` is the score of the arc `h -> d`; node 0 is the root.
/// Returns the parent of every node (`parents[0]` is meaningless).
pub(crate) fn chu_liu_edmonds(weights: &[Vec<f64>]) -> Vec<usize> {
    let size = weights.len();
    let best = best_incoming(weights);

    let cycle = match find_cycle(&best) {
        Some(c) => c,
        None => return best,
    };

    let mut in_cycle = vec![false; size];
    for &v in &cycle {
        in_cycle[v] = true;
    }

    // Nodes outside the cycle keep their relative order; the contracted
    // node gets the last index.
    let mut new_index = vec![usize::MAX; size];
    let mut old_index = Vec::with_capacity(size - cycle.len() + 1);
    for v in 0..size {
        if !in_cycle[v] {
            new_index[v] = old_index.len();
            old_index.push(v);
        }
    }
    let contracted = old_index.len();
    let reduced_size = contracted + 1;

    let mut reduced = vec![vec![f64::NEG_INFINITY; reduced_size]; reduced_size];
    // entered[u'] = cycle node entered when u' -> contracted is chosen
    let mut entered = vec![usize::MAX; reduced_size];
    // source[v'] = cycle node heading v' when contracted -> v' is chosen
    let mut source = vec![usize::MAX; reduced_size];

    for (nu, &u) in old_index.iter().enumerate() {
        for (nv, &v) in old_index.iter().enumerate() {
            if u != v && v != 0 {
                reduced[nu][nv] = weights[u][v];
            }
        }

        let mut best_score = f64::NEG_INFINITY;
        let mut best_v = usize::MAX;
        for &v in &cycle {
            let s = weights[u][v] - weights[best[v]][v];
            if best_v == usize::MAX || s > best_score || (s == best_score && v < best_v) {
                best_score = s;
                best_v = v;
            }
        }
        reduced[nu][contracted] = best_score;
        entered[nu] = best_v;
    }

    for (nv, &v) in old_index.iter().enumerate() {
        if v == 0 {
            continue;
        }
        let mut best_score = f64::NEG_INFINITY;
        let mut best_u = usize::MAX;
        for &u in &cycle {
            let s = weights[u][v];
            if best_u == usize::MAX || s > best_score || (s == best_score && u < best_u) {
                best_score = s;
                best_u = u;
            }
        }
        reduced[contracted][nv] = best_score;
        source[nv] = best_u;
    }

    let reduced_parents = chu_liu_edmonds(&reduced);

    let mut parents = best;
    for (nv, &v) in old_index.iter().enumerate() {
        if v == 0 {
            continue;
        }
        let p = reduced_parents[nv];
        parents[v] = if p == contracted {
            source[nv]
        } else {
            old_index[p]
        };
    }
    let p = reduced_parents[contracted];
    parents[entered[p]] = old_index[p];
    parents
}

/// Highest-scoring head of every non-root node; the lowest index wins ties.
fn best_incoming(weights: &[Vec<f64>]) -> Vec<usize> {
    let size = weights.len();
    let mut best = vec![0; size];
    for v in 1..size {
        let mut best_h = usize::MAX;
        let mut best_s = f64::NEG_INFINITY;
        for (h, row) in weights.iter().enumerate() {
            if h == v {
                continue;
            }
            if best_h == usize::MAX || row[v] > best_s {
                best_h = h;
                best_s = row[v];
            }
        }
        best[v] = best_h;
    }
    best
}

fn find_cycle(parents: &[usize]) -> Option<Vec<usize>> {
    let size = parents.len();
    // 0 = unseen, 1 = on the current walk, 2 = done
    let mut state = vec![0u8; size];
    state[0] = 2;
    for start in 1..size {
        let mut walk = Vec::new();
        let mut v = start;
        while state[v] == 0 {
            state[v] = 1;
            walk.push(v);
            v = parents[v];
        }
        if state[v] == 1 {
            let pos = walk.iter().position(|&x| x == v).unwrap();
            return Some(walk[pos..].to_vec());
        }
        for w in walk {
            state[w] = 2;
        }
    }
    None
}
