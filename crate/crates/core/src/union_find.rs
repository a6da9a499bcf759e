/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    merges: usize,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        assert!(
            len <= u32::MAX as usize,
            "union-find limited to u32 elements"
        );
        Self {
            parent: (0..len as u32).collect(),
            size: vec![1; len],
            merges: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    /// Joins the sets of `a` and `b`. Returns false when they were already
    /// joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        self.merges += 1;
        true
    }

    /// Number of successful unions so far. The set count is `len - merges`.
    pub fn merges(&self) -> usize {
        self.merges
    }

    pub fn set_count(&self) -> usize {
        self.len() - self.merges
    }

    pub fn set_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r] as usize
    }
}
