//! Binomial coefficients, colexicographic ranking and subset iteration.

/// Exact binomial coefficient, `None` on overflow of `u128`.
pub fn binom(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Pascal table for small ground sets, used on hot paths.
#[derive(Clone, Debug)]
pub struct BinomTable {
    n: usize,
    rows: Vec<u64>,
}

impl BinomTable {
    pub fn new(n: usize) -> Self {
        let w = n + 1;
        let mut rows = vec![0u64; w * w];
        for a in 0..=n {
            rows[a * w] = 1;
            for b in 1..=a {
                let up = rows[(a - 1) * w + b - 1];
                let left = if b < a { rows[(a - 1) * w + b] } else { 0 };
                rows[a * w + b] = up.saturating_add(left);
            }
        }
        BinomTable { n, rows }
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> u64 {
        if b > a || a > self.n {
            return 0;
        }
        self.rows[a * (self.n + 1) + b]
    }

    pub fn max_n(&self) -> usize {
        self.n
    }

    /// Colex rank of a strictly increasing set of 1-based elements.
    #[inline]
    pub fn rank(&self, set: &[u32]) -> u64 {
        let mut r = 0u64;
        for (j, &a) in set.iter().enumerate() {
            r += self.get(a as usize - 1, j + 1);
        }
        r
    }
}

/// Colex rank of a strictly increasing set of 1-based elements (arbitrary ground size).
pub fn colex_rank(set: &[u32]) -> u128 {
    set.iter().enumerate().map(|(j, &a)| binom(a as u64 - 1, j as u64 + 1).expect("rank overflow")).sum()
}

/// Inverse of [`colex_rank`] for `k`-subsets.
pub fn colex_unrank(mut rank: u128, k: usize) -> Vec<u32> {
    let mut out = vec![0u32; k];
    for j in (1..=k).rev() {
        // largest a with C(a, j) <= rank
        let mut a = (j - 1) as u64;
        while binom(a + 1, j as u64).unwrap() <= rank {
            a += 1;
        }
        rank -= binom(a, j as u64).unwrap();
        out[j - 1] = a as u32 + 1;
    }
    out
}

/// Iterates the `k`-subsets of `0..n` in colex order, as index vectors.
#[derive(Clone, Debug)]
pub struct Colex {
    n: usize,
    cur: Vec<usize>,
    done: bool,
}

impl Colex {
    pub fn new(n: usize, k: usize) -> Self {
        Colex { n, cur: (0..k).collect(), done: k > n }
    }

    /// Current subset, or `None` once exhausted; pair with [`Colex::advance`].
    pub fn next_ref(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        Some(&self.cur)
    }

    pub fn advance(&mut self) {
        let k = self.cur.len();
        let mut j = 0;
        while j < k {
            let limit = if j + 1 < k { self.cur[j + 1] } else { self.n };
            if self.cur[j] + 1 < limit {
                self.cur[j] += 1;
                for (i, c) in self.cur.iter_mut().enumerate().take(j) {
                    *c = i;
                }
                return;
            }
            j += 1;
        }
        self.done = true;
    }
}

impl Iterator for Colex {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        self.advance();
        Some(out)
    }
}

/// Calls `f` on every `k`-subset of `items` in colex order of positions.
pub fn for_each_subset<T: Copy>(items: &[T], k: usize, mut f: impl FnMut(&[T])) {
    let mut it = Colex::new(items.len(), k);
    let mut buf: Vec<T> = Vec::with_capacity(k);
    while let Some(idx) = it.next_ref() {
        buf.clear();
        buf.extend(idx.iter().map(|&i| items[i]));
        f(&buf);
        it.advance();
    }
}

/// Lexicographic successor of a strictly increasing index vector drawn from `0..n`.
pub fn next_lex(cur: &mut [usize], n: usize) -> bool {
    let k = cur.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if cur[i] < n - k + i {
            cur[i] += 1;
            for j in i + 1..k {
                cur[j] = cur[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
