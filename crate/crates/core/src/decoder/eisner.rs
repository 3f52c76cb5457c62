//! First-order projective decoding (Eisner's cubic-time dynamic program).
//!
//! The root sits at position 0, so the trees found are exactly those with
//! no crossing arcs when root arcs are included. The root may take several
//! children.

#[derive(Clone, Copy)]
struct Cell {
    score: f64,
    split: usize,
}

const EMPTY: Cell = Cell {
    score: f64::NEG_INFINITY,
    split: usize::MAX,
};

struct Chart {
    size: usize,
    cells: Vec<Cell>,
}

impl Chart {
    fn new(size: usize) -> Self {
        Chart {
            size,
            cells: vec![EMPTY; size * size],
        }
    }

    fn get(&self, s: usize, t: usize) -> Cell {
        self.cells[s * self.size + t]
    }

    fn set(&mut self, s: usize, t: usize, cell: Cell) {
        self.cells[s * self.size + t] = cell;
    }
}

/// `weights[h][d]` is the score of `h -> d` over nodes `0..size`. Returns
/// the parent of every node.
pub(crate) fn eisner(weights: &[Vec<f64>]) -> Vec<usize> {
    let size = weights.len();
    // incomplete: `left` has head t (arc t -> s), `right` has head s.
    let mut inc_left = Chart::new(size);
    let mut inc_right = Chart::new(size);
    // complete: `left` is headed at t, `right` at s.
    let mut com_left = Chart::new(size);
    let mut com_right = Chart::new(size);
    for s in 0..size {
        let unit = Cell {
            score: 0.0,
            split: s,
        };
        com_left.set(s, s, unit);
        com_right.set(s, s, unit);
    }

    for width in 1..size {
        for s in 0..size - width {
            let t = s + width;

            let mut best = EMPTY;
            for r in s..t {
                let v = com_right.get(s, r).score + com_left.get(r + 1, t).score;
                if v > best.score {
                    best = Cell { score: v, split: r };
                }
            }
            if s != 0 {
                inc_left.set(
                    s,
                    t,
                    Cell {
                        score: best.score + weights[t][s],
                        split: best.split,
                    },
                );
            }
            inc_right.set(
                s,
                t,
                Cell {
                    score: best.score + weights[s][t],
                    split: best.split,
                },
            );

            let mut best = EMPTY;
            for r in s..t {
                let v = com_left.get(s, r).score + inc_left.get(r, t).score;
                if v > best.score {
                    best = Cell { score: v, split: r };
                }
            }
            com_left.set(s, t, best);

            let mut best = EMPTY;
            for r in s + 1..=t {
                let v = inc_right.get(s, r).score + com_right.get(r, t).score;
                if v > best.score {
                    best = Cell { score: v, split: r };
                }
            }
            com_right.set(s, t, best);
        }
    }

    let mut parents = vec![0; size];
    let charts = Charts {
        inc_left: &inc_left,
        inc_right: &inc_right,
        com_left: &com_left,
        com_right: &com_right,
    };
    charts.backtrack_complete(0, size - 1, true, &mut parents);
    parents
}

struct Charts<'a> {
    inc_left: &'a Chart,
    inc_right: &'a Chart,
    com_left: &'a Chart,
    com_right: &'a Chart,
}

impl Charts<'_> {
    fn backtrack_complete(&self, s: usize, t: usize, right: bool, parents: &mut [usize]) {
        if s == t {
            return;
        }
        if right {
            let r = self.com_right.get(s, t).split;
            self.backtrack_incomplete(s, r, true, parents);
            self.backtrack_complete(r, t, true, parents);
        } else {
            let r = self.com_left.get(s, t).split;
            self.backtrack_complete(s, r, false, parents);
            self.backtrack_incomplete(r, t, false, parents);
        }
    }

    fn backtrack_incomplete(&self, s: usize, t: usize, right: bool, parents: &mut [usize]) {
        let r = if right {
            parents[t] = s;
            self.inc_right.get(s, t).split
        } else {
            parents[s] = t;
            self.inc_left.get(s, t).split
        };
        self.backtrack_complete(s, r, true, parents);
        self.backtrack_complete(r + 1, t, false, parents);
    }
}
