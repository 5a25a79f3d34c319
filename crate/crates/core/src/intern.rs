use alloc::collections::BTreeMap;
use alloc::vec::Vec;

/// Assigns dense ids to keys in order of first appearance.
#[derive(Debug, Default)]
pub(crate) struct Interner<K: Ord> {
    ids: BTreeMap<K, u32>,
}

impl<K: Ord> Interner<K> {
    pub(crate) fn new() -> Self {
        Interner { ids: BTreeMap::new() }
    }

    pub(crate) fn intern(&mut self, key: K) -> u32 {
        let next = self.ids.len() as u32;
        *self.ids.entry(key).or_insert(next)
    }

    pub(crate) fn len(&self) -> usize {
        self.ids.len()
    }
}

/// Per-level structural ids: a vertex's id is the interned list of the ids of
/// its in-edge sources, prefixed by an optional tag (a color).
pub(crate) fn structural_ids(
    levels: &[Vec<Vec<usize>>],
    tag: impl Fn(usize, usize) -> u32,
) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = Vec::with_capacity(levels.len());
    for (n, level) in levels.iter().enumerate() {
        let mut interner = Interner::new();
        let ids = level
            .iter()
            .enumerate()
            .map(|(v, sources)| {
                let mut key = Vec::with_capacity(sources.len() + 1);
                key.push(tag(n, v));
                if n > 0 {
                    key.extend(sources.iter().map(|&s| out[n - 1][s]));
                }
                interner.intern(key)
            })
            .collect();
        out.push(ids);
    }
    out
}

/// Lexicographically first pair `(a, b)`, `a < b`, with equal ids.
pub(crate) fn first_collision(ids: &[u32]) -> Option<(usize, usize)> {
    let mut first_seen: BTreeMap<u32, usize> = BTreeMap::new();
    let mut best: Option<(usize, usize)> = None;
    for (b, id) in ids.iter().enumerate() {
        match first_seen.get(id) {
            Some(&a) => {
                let cand = (a, b);
                if best.is_none_or(|cur| cand < cur) {
                    best = Some(cand);
                }
            }
            None => {
                first_seen.insert(*id, b);
            }
        }
    }
    best
}
