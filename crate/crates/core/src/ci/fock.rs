//! Number-conserving bosonic occupation bases and the annihilation tables
//! that connect `N`- and `(N−1)`-particle spaces.

use std::collections::HashMap;

/// Binomial coefficient `n choose k`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// All occupations `(n_1, …, n_d)` with `Σ n_i = N`, in reverse-lexicographic
/// order so index 0 is the configuration with every boson in orbital 0.
#[derive(Debug, Clone)]
pub struct FockSpace {
    particles: usize,
    orbitals: usize,
    occ: Vec<u16>,
    index: HashMap<Vec<u16>, usize>,
}

impl FockSpace {
    pub fn new(particles: usize, orbitals: usize) -> Self {
        assert!(orbitals >= 1, "need at least one orbital");
        let dim = binomial(particles + orbitals - 1, orbitals - 1);
        let mut occ = Vec::with_capacity(dim * orbitals);
        let mut cur = vec![0u16; orbitals];
        fill(&mut cur, 0, particles, &mut occ);
        let index = occ
            .chunks_exact(orbitals)
            .enumerate()
            .map(|(i, c)| (c.to_vec(), i))
            .collect();
        Self {
            particles,
            orbitals,
            occ,
            index,
        }
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn orbitals(&self) -> usize {
        self.orbitals
    }

    pub fn dim(&self) -> usize {
        self.occ.len() / self.orbitals
    }

    pub fn occupation(&self, i: usize) -> &[u16] {
        &self.occ[i * self.orbitals..(i + 1) * self.orbitals]
    }

    pub fn index_of(&self, occ: &[u16]) -> Option<usize> {
        self.index.get(occ).copied()
    }
}

fn fill(cur: &mut [u16], pos: usize, left: usize, out: &mut Vec<u16>) {
    if pos + 1 == cur.len() {
        cur[pos] = left as u16;
        out.extend_from_slice(cur);
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k as u16;
        fill(cur, pos + 1, left - k, out);
    }
    cur[pos] = 0;
}

/// One nonzero of `a_q |m⟩ = √n_q |target⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lowering {
    pub orbital: u32,
    pub target: u32,
    pub factor: f64,
}

/// Sparse annihilation operators from an `N`-particle space into the
/// `(N−1)`-particle space over the same orbitals, stored row by row.
#[derive(Debug, Clone)]
pub struct LowerTable {
    offsets: Vec<usize>,
    entries: Vec<Lowering>,
    from_dim: usize,
    to_dim: usize,
}

impl LowerTable {
    pub fn new(from: &FockSpace, to: &FockSpace) -> Self {
        assert_eq!(from.orbitals(), to.orbitals());
        assert_eq!(from.particles(), to.particles() + 1);
        let mut offsets = Vec::with_capacity(from.dim() + 1);
        let mut entries = Vec::new();
        offsets.push(0);
        let mut buf = vec![0u16; from.orbitals()];
        for m in 0..from.dim() {
            let occ = from.occupation(m);
            for q in 0..from.orbitals() {
                if occ[q] == 0 {
                    continue;
                }
                buf.copy_from_slice(occ);
                buf[q] -= 1;
                let target = to.index_of(&buf).expect("lowered occupation exists");
                entries.push(Lowering {
                    orbital: q as u32,
                    target: target as u32,
                    factor: f64::from(occ[q]).sqrt(),
                });
            }
            offsets.push(entries.len());
        }
        Self {
            offsets,
            entries,
            from_dim: from.dim(),
            to_dim: to.dim(),
        }
    }

    pub fn row(&self, m: usize) -> &[Lowering] {
        &self.entries[self.offsets[m]..self.offsets[m + 1]]
    }

    pub fn from_dim(&self) -> usize {
        self.from_dim
    }

    pub fn to_dim(&self) -> usize {
        self.to_dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quoted_dimensions() {
        assert_eq!(FockSpace::new(4, 3).dim(), 15);
        assert_eq!(FockSpace::new(2, 6).dim(), 21);
        assert_eq!(FockSpace::new(10, 3).dim(), 66);
        assert_eq!(FockSpace::new(0, 5).dim(), 1);
    }

    #[test]
    fn first_configuration_fills_lowest_orbital() {
        let f = FockSpace::new(3, 4);
        assert_eq!(f.occupation(0), &[3, 0, 0, 0]);
        assert_eq!(f.occupation(f.dim() - 1), &[0, 0, 0, 3]);
    }

    #[test]
    fn lowering_factors() {
        let f2 = FockSpace::new(2, 2);
        let f1 = FockSpace::new(1, 2);
        let t = LowerTable::new(&f2, &f1);
        // |2,0⟩ → √2 |1,0⟩
        let row = t.row(f2.index_of(&[2, 0]).unwrap());
        assert_eq!(row.len(), 1);
        assert!((row[0].factor - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(row[0].target as usize, f1.index_of(&[1, 0]).unwrap());
        assert_eq!(t.nnz(), 4);
    }

    proptest! {
        #[test]
        fn dimension_and_bijection(n in 0usize..7, d in 1usize..6) {
            let f = FockSpace::new(n, d);
            prop_assert_eq!(f.dim(), binomial(n + d - 1, d - 1));
            for i in 0..f.dim() {
                let occ = f.occupation(i);
                prop_assert_eq!(occ.iter().map(|&x| x as usize).sum::<usize>(), n);
                prop_assert_eq!(f.index_of(occ), Some(i));
            }
        }
    }
}
