use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A named tensor factor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub dim: usize,
}

/// Ordered tensor-product layout; the first register is the slowest-varying factor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceLayout {
    regs: Vec<Register>,
}

impl SpaceLayout {
    pub fn new<S: Into<String>>(regs: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let mut out: Vec<Register> = Vec::new();
        for (name, dim) in regs {
            let name = name.into();
            if dim == 0 {
                return Err(invalid(format!("register `{name}` has dimension 0")));
            }
            if out.iter().any(|r| r.name == name) {
                return Err(Error::DuplicateRegister(name));
            }
            out.push(Register { name, dim });
        }
        if out.is_empty() {
            return Err(invalid("layout needs at least one register"));
        }
        Ok(Self { regs: out })
    }

    pub fn registers(&self) -> &[Register] {
        &self.regs
    }

    pub fn dims(&self) -> Vec<usize> {
        self.regs.iter().map(|r| r.dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.regs.iter().map(|r| r.dim).product()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.regs
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn dim_of(&self, name: &str) -> Result<usize> {
        Ok(self.regs[self.index_of(name)?].dim)
    }

    /// Resolves distinct register names to indices.
    pub fn indices_of(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let i = self.index_of(n)?;
            if out.contains(&i) {
                return Err(Error::DuplicateRegister(n.to_string()));
            }
            out.push(i);
        }
        Ok(out)
    }

    /// Row-major strides of each factor.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.regs.len()];
        for i in (0..self.regs.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.regs[i + 1].dim;
        }
        s
    }

    /// Digits of a global basis index, one per register.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut d = vec![0; self.regs.len()];
        for i in (0..self.regs.len()).rev() {
            d[i] = index % self.regs[i].dim;
            index /= self.regs[i].dim;
        }
        d
    }

    pub fn index_of_digits(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.regs)
            .fold(0, |acc, (&d, r)| acc * r.dim + d)
    }

    /// Global offset contributed by each local index of the listed factors.
    pub(crate) fn local_offsets(&self, targets: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut offsets = vec![0usize];
        for &t in targets {
            let mut next = Vec::with_capacity(offsets.len() * self.regs[t].dim);
            for &o in &offsets {
                for d in 0..self.regs[t].dim {
                    next.push(o + d * strides[t]);
                }
            }
            offsets = next;
        }
        offsets
    }

    /// Global indices with every listed factor at digit 0, in increasing order.
    pub(crate) fn outer_bases(&self, targets: &[usize]) -> Vec<usize> {
        let rest: Vec<usize> = (0..self.regs.len()).filter(|i| !targets.contains(i)).collect();
        let mut out = self.local_offsets(&rest);
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strides_and_digits_round_trip() {
        let l = SpaceLayout::new([("B", 3), ("A", 2), ("W", 4)]).unwrap();
        assert_eq!(l.dim(), 24);
        assert_eq!(l.strides(), vec![8, 4, 1]);
        for i in 0..24 {
            assert_eq!(l.index_of_digits(&l.digits(i)), i);
        }
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(matches!(
            SpaceLayout::new([("A", 2), ("A", 2)]),
            Err(Error::DuplicateRegister(_))
        ));
    }

    #[test]
    fn offsets_partition_the_space() {
        let l = SpaceLayout::new([("B", 3), ("A", 2), ("W", 4)]).unwrap();
        let t = vec![2, 0];
        let mut all: Vec<usize> = l
            .outer_bases(&t)
            .iter()
            .flat_map(|b| l.local_offsets(&t).into_iter().map(move |o| b + o))
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..24).collect::<Vec<_>>());
    }
}
