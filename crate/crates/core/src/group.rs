//! Finite groups given by Cayley tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    labels: Vec<String>,
    table: Vec<Vec<usize>>,
    identity: usize,
    inverses: Vec<usize>,
}

/// Serialized form: labels plus the multiplication table by index.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupDoc {
    pub order: usize,
    pub labels: Vec<String>,
    pub table: Vec<Vec<usize>>,
}

impl FiniteGroup {
    /// Validate a Cayley table: closure, associativity, identity, inverses.
    pub fn new(labels: Vec<String>, table: Vec<Vec<usize>>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Group("empty group".into()));
        }
        if table.len() != n || table.iter().any(|r| r.len() != n) {
            return Err(Error::Group(format!("table must be {n}×{n}")));
        }
        if table.iter().flatten().any(|&x| x >= n) {
            return Err(Error::Group("table entry out of range".into()));
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|g| table[e][g] == g && table[g][e] == g))
            .ok_or_else(|| Error::Group("no identity element".into()))?;
        for g in 0..n {
            for h in 0..n {
                for k in 0..n {
                    if table[table[g][h]][k] != table[g][table[h][k]] {
                        return Err(Error::Group(format!(
                            "associativity fails at ({}, {}, {})",
                            labels[g], labels[h], labels[k]
                        )));
                    }
                }
            }
        }
        let mut inverses = Vec::with_capacity(n);
        for g in 0..n {
            let inv = (0..n)
                .find(|&h| table[g][h] == identity && table[h][g] == identity)
                .ok_or_else(|| Error::Group(format!("{} has no inverse", labels[g])))?;
            inverses.push(inv);
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != n {
            return Err(Error::Group("duplicate labels".into()));
        }
        Ok(FiniteGroup {
            labels,
            table,
            identity,
            inverses,
        })
    }

    pub fn from_doc(doc: &GroupDoc) -> Result<Self> {
        if doc.order != doc.labels.len() {
            return Err(Error::Group(format!(
                "order {} but {} labels",
                doc.order,
                doc.labels.len()
            )));
        }
        Self::new(doc.labels.clone(), doc.table.clone())
    }

    pub fn to_doc(&self) -> GroupDoc {
        GroupDoc {
            order: self.order(),
            labels: self.labels.clone(),
            table: self.table.clone(),
        }
    }

    /// Build from an element list and a multiplication closure.
    pub fn from_elements<T: PartialEq>(
        elems: &[T],
        labels: Vec<String>,
        mul: impl Fn(&T, &T) -> T,
    ) -> Result<Self> {
        let table = elems
            .iter()
            .map(|a| {
                elems
                    .iter()
                    .map(|b| {
                        let p = mul(a, b);
                        elems
                            .iter()
                            .position(|x| *x == p)
                            .ok_or_else(|| Error::Group("not closed".into()))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels, table)
    }

    /// `Z_n` with elements `0..n`.
    pub fn cyclic(n: usize) -> Self {
        let elems: Vec<usize> = (0..n).collect();
        Self::from_elements(
            &elems,
            elems.iter().map(|i| i.to_string()).collect(),
            |a, b| (a + b) % n,
        )
        .unwrap()
    }

    /// Direct product; element `(g, h)` has index `g · |H| + h`.
    pub fn product(a: &FiniteGroup, b: &FiniteGroup) -> Self {
        let (na, nb) = (a.order(), b.order());
        let mut labels = Vec::with_capacity(na * nb);
        let mut table = vec![vec![0; na * nb]; na * nb];
        for g in 0..na {
            for h in 0..nb {
                labels.push(format!("({},{})", a.labels[g], b.labels[h]));
                for g2 in 0..na {
                    for h2 in 0..nb {
                        table[g * nb + h][g2 * nb + h2] = a.mul(g, g2) * nb + b.mul(h, h2);
                    }
                }
            }
        }
        Self::new(labels, table).unwrap()
    }

    /// `Z₂ × Z₂`.
    pub fn klein() -> Self {
        Self::product(&Self::cyclic(2), &Self::cyclic(2))
    }

    /// Symmetric group on `n` letters (small `n`); composition `(p·q)(i) = p(q(i))`.
    pub fn symmetric(n: usize) -> Self {
        let mut perms: Vec<Vec<usize>> = vec![(0..n).collect()];
        // Heap-free lexicographic enumeration.
        let mut cur: Vec<usize> = (0..n).collect();
        while next_permutation(&mut cur) {
            perms.push(cur.clone());
        }
        let labels = perms
            .iter()
            .map(|p| p.iter().map(|i| (i + 1).to_string()).collect::<String>())
            .collect();
        Self::from_elements(&perms, labels, |p, q| q.iter().map(|&i| p[i]).collect()).unwrap()
    }

    /// Dihedral group of order `2n`: pairs `(r, s)` meaning `ρ^r τ^s`.
    pub fn dihedral(n: usize) -> Self {
        let elems: Vec<(usize, usize)> = (0..2).flat_map(|s| (0..n).map(move |r| (r, s))).collect();
        let labels = elems.iter().map(|(r, s)| format!("r{r}s{s}")).collect();
        Self::from_elements(&elems, labels, |&(r1, s1), &(r2, s2)| {
            let r = if s1 == 0 {
                (r1 + r2) % n
            } else {
                (r1 + n - r2) % n
            };
            (r, (s1 + s2) % 2)
        })
        .unwrap()
    }

    /// Quaternion group `Q₈` realized by unit quaternions.
    pub fn quaternion() -> Self {
        type Q = [i32; 4];
        fn qmul(a: &Q, b: &Q) -> Q {
            [
                a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
                a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
                a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
                a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
            ]
        }
        let mut elems = Vec::new();
        let mut labels = Vec::new();
        for (i, name) in ["1", "i", "j", "k"].iter().enumerate() {
            for sign in [1, -1] {
                let mut q = [0; 4];
                q[i] = sign;
                elems.push(q);
                labels.push(if sign == 1 {
                    name.to_string()
                } else {
                    format!("-{name}")
                });
            }
        }
        Self::from_elements(&elems, labels, qmul).unwrap()
    }

    pub fn order(&self) -> usize {
        self.labels.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    #[inline]
    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.table[g][h]
    }

    #[inline]
    pub fn inv(&self, g: usize) -> usize {
        self.inverses[g]
    }

    pub fn label(&self, g: usize) -> &str {
        &self.labels[g]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order()).all(|g| (0..self.order()).all(|h| self.mul(g, h) == self.mul(h, g)))
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order()
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
