//! Systematic encoder by Gauss-Jordan elimination over GF(2).
//!
//! The parity positions are pivots found in the right-most block columns of
//! H. Elimination on `[H_region | I]` yields a transform `T` with
//! `T * H_pivots = I`, so the parity bits are `T * s` where `s` is the
//! syndrome contributed by the known (information and frozen) bits.
//!
//! All-circulant regular base matrices have rank `M - (rows - 1)`; the extra
//! non-pivot positions are frozen to zero so that the design rate
//! `k = n - M` holds exactly.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub(crate) struct Encoder {
    info: Vec<usize>,
    frozen: Vec<usize>,
    pivots: Vec<usize>,
    /// `pivots.len()` rows of `words` u64 each.
    transform: Vec<u64>,
    words: usize,
    m: usize,
}

struct BitMatrix {
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    fn new(rows: usize, bits: usize) -> BitMatrix {
        let words = bits.div_ceil(64);
        BitMatrix {
            words,
            data: vec![0; rows * words],
        }
    }

    #[inline]
    fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.words + c / 64] >> (c % 64) & 1 == 1
    }

    #[inline]
    fn flip(&mut self, r: usize, c: usize) {
        self.data[r * self.words + c / 64] ^= 1 << (c % 64);
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let w = self.words;
        let (lo, hi) = (a.min(b), a.max(b));
        let (head, tail) = self.data.split_at_mut(hi * w);
        head[lo * w..(lo + 1) * w].swap_with_slice(&mut tail[..w]);
    }

    /// `row[dst] ^= row[src]`.
    fn xor_rows(&mut self, dst: usize, src: usize) {
        let w = self.words;
        let (d, s) = if dst < src {
            let (head, tail) = self.data.split_at_mut(src * w);
            (&mut head[dst * w..(dst + 1) * w], &tail[..w])
        } else {
            let (head, tail) = self.data.split_at_mut(dst * w);
            (&mut tail[..w], &head[src * w..(src + 1) * w])
        };
        for (a, b) in d.iter_mut().zip(s) {
            *a ^= b;
        }
    }
}

impl Encoder {
    pub(crate) fn new(
        n: usize,
        m: usize,
        z: usize,
        cols: usize,
        k: usize,
        check_ptr: &[usize],
        check_vars: &[usize],
    ) -> Result<Encoder> {
        let rows_base = m / z;
        let mut var_checks = vec![Vec::new(); n];
        for r in 0..m {
            for &v in &check_vars[check_ptr[r]..check_ptr[r + 1]] {
                var_checks[v].push(r);
            }
        }
        let mut region_blocks = rows_base;
        loop {
            let start = (cols - region_blocks) * z;
            let width = n - start;
            let mut a = BitMatrix::new(m, width + m);
            for r in 0..m {
                for &v in &check_vars[check_ptr[r]..check_ptr[r + 1]] {
                    if v >= start {
                        a.flip(r, v - start);
                    }
                }
                a.flip(r, width + r);
            }
            let mut pivots = Vec::new();
            for col in (0..width).rev() {
                let rank = pivots.len();
                let Some(p) = (rank..m).find(|&r| a.get(r, col)) else {
                    continue;
                };
                a.swap_rows(rank, p);
                for r in 0..m {
                    if r != rank && a.get(r, col) {
                        a.xor_rows(r, rank);
                    }
                }
                pivots.push(start + col);
                if pivots.len() == m {
                    break;
                }
            }
            let rank = pivots.len();
            // Rows below the rank are left null vectors of the region; every
            // column outside it must be orthogonal to them, otherwise the
            // region does not span the column space of H.
            let spans = (0..start).all(|v| {
                (rank..m).all(|r| var_checks[v].iter().filter(|&&c| a.get(r, width + c)).count() % 2 == 0)
            });
            if spans {
                let words = m.div_ceil(64);
                let mut transform = vec![0u64; rank * words];
                for r in 0..rank {
                    for c in 0..m {
                        if a.get(r, width + c) {
                            transform[r * words + c / 64] |= 1 << (c % 64);
                        }
                    }
                }
                let mut is_pivot = vec![false; n];
                for &p in &pivots {
                    is_pivot[p] = true;
                }
                let free: Vec<usize> = (0..n).filter(|&v| !is_pivot[v]).collect();
                if free.len() < k {
                    return Err(Error::Construction("parity-check matrix rank exceeds its row count".into()));
                }
                return Ok(Encoder {
                    info: free[..k].to_vec(),
                    frozen: free[k..].to_vec(),
                    pivots,
                    transform,
                    words,
                    m,
                });
            }
            if region_blocks == cols {
                return Err(Error::Construction("elimination failed to span H".into()));
            }
            region_blocks += 1;
        }
    }

    pub(crate) fn info_positions(&self) -> &[usize] {
        &self.info
    }

    pub(crate) fn encode(&self, info: &[u8], check_ptr: &[usize], check_vars: &[usize]) -> Vec<u8> {
        let n = self.info.len() + self.frozen.len() + self.pivots.len();
        let mut cw = vec![0u8; n];
        for (&p, &b) in self.info.iter().zip(info) {
            cw[p] = b;
        }
        // Syndrome of the known part; parity and frozen bits are zero here.
        let mut s = vec![0u64; self.words];
        for r in 0..self.m {
            let parity = check_vars[check_ptr[r]..check_ptr[r + 1]]
                .iter()
                .fold(0u8, |acc, &v| acc ^ cw[v]);
            if parity == 1 {
                s[r / 64] |= 1 << (r % 64);
            }
        }
        for (i, &p) in self.pivots.iter().enumerate() {
            let row = &self.transform[i * self.words..(i + 1) * self.words];
            let ones: u32 = row.iter().zip(&s).map(|(a, b)| (a & b).count_ones()).sum();
            cw[p] = (ones & 1) as u8;
        }
        cw
    }
}
