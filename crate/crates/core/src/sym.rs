//! Small dense symmetric matrices.
//!
//! The second-derivative argument of the model right-hand sides and the
//! matrix samples drawn by the certifier are symmetric d x d matrices with
//! d <= 5. A tiny owned type avoids pulling a linear-algebra dependency into
//! the public API.

/// Symmetric d x d matrix, full row-major storage.
///
/// Symmetry is the caller's responsibility on construction; all constructors
/// here produce symmetric data.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat {
    dim: usize,
    data: Vec<f64>,
}

impl SymMat {
    pub fn zeros(dim: usize) -> Self {
        SymMat {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = SymMat::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    /// Builds from a row-major slice; the slice is symmetrized as
    /// (A + A^T) / 2 so approximate inputs stay usable.
    pub fn from_rows(dim: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), dim * dim, "row data must be dim*dim");
        let mut m = SymMat::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = 0.5 * (rows[i * dim + j] + rows[j * dim + i]);
            }
        }
        m
    }

    /// 1x1 convenience constructor.
    pub fn scalar(x: f64) -> Self {
        SymMat { dim: 1, data: vec![x] }
    }

    /// Rank-one update target: sum_k coeff_k * v_k v_k^T.
    pub fn from_rank_one_sum(dim: usize, terms: &[(f64, &[f64])]) -> Self {
        let mut m = SymMat::zeros(dim);
        for (c, v) in terms {
            assert_eq!(v.len(), dim);
            for i in 0..dim {
                for j in 0..dim {
                    m.data[i * dim + j] += c * v[i] * v[j];
                }
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn mul_vec(&self, p: &[f64]) -> Vec<f64> {
        assert_eq!(p.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * p[j]).sum())
            .collect()
    }

    /// Quadratic form p^T A p.
    pub fn quad(&self, p: &[f64]) -> f64 {
        self.mul_vec(p).iter().zip(p).map(|(ap, pi)| ap * pi).sum()
    }

    /// Matrix square A*A (symmetric for symmetric A).
    pub fn square(&self) -> SymMat {
        let d = self.dim;
        let mut out = SymMat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += self.get(i, k) * self.get(k, j);
                }
                out.data[i * d + j] = s;
            }
        }
        out
    }

    /// Frobenius inner product A : B = sum_ij A_ij B_ij.
    pub fn frobenius_inner(&self, other: &SymMat) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// A + c * B.
    pub fn add_scaled(&self, c: f64, other: &SymMat) -> SymMat {
        assert_eq!(self.dim, other.dim);
        SymMat {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Orthonormal frame whose first column is p / |p|, extended by
/// Gram-Schmidt over the standard basis. Returns `dim` columns.
///
/// Requires |p| > 0.
pub fn frame_from_direction(p: &[f64]) -> Vec<Vec<f64>> {
    let dim = p.len();
    let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(norm > 0.0, "frame direction must be nonzero");
    let e0: Vec<f64> = p.iter().map(|x| x / norm).collect();
    let mut frame = vec![e0];
    for k in 0..dim {
        if frame.len() == dim {
            break;
        }
        let mut v = vec![0.0; dim];
        v[k] = 1.0;
        for q in &frame {
            let proj: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= proj * qi;
            }
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nv > 1e-8 {
            for vi in v.iter_mut() {
                *vi /= nv;
            }
            frame.push(v);
        }
    }
    assert_eq!(frame.len(), dim, "failed to complete orthonormal frame");
    frame
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_and_quad_match_hand_values() {
        let m = SymMat::from_rows(2, &[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(m.trace(), 4.0);
        // p^T A p with p = (1, -1): 1 - 2 - 2 + 3 = 0
        assert_eq!(m.quad(&[1.0, -1.0]), 0.0);
    }

    #[test]
    fn square_matches_manual_product() {
        let m = SymMat::from_rows(2, &[1.0, 2.0, 2.0, 3.0]);
        let sq = m.square();
        assert_eq!(sq.get(0, 0), 5.0);
        assert_eq!(sq.get(0, 1), 8.0);
        assert_eq!(sq.get(1, 1), 13.0);
    }

    #[test]
    fn frobenius_of_square_is_sum_of_squared_entries() {
        let m = SymMat::from_rows(2, &[1.0, -2.0, -2.0, 0.5]);
        let tr_sq = m.square().trace();
        let frob: f64 = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j) * m.get(i, j))
            .sum();
        assert!((tr_sq - frob).abs() < 1e-15, "tr(A^2) = |A|_F^2 for symmetric A");
    }

    #[test]
    fn frame_is_orthonormal_and_starts_at_direction() {
        for dim in 1..=5 {
            let p: Vec<f64> = (0..dim).map(|k| 0.3 + 0.7 * k as f64).collect();
            let frame = frame_from_direction(&p);
            assert_eq!(frame.len(), dim);
            let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            for i in 0..dim {
                assert!((frame[0][i] - p[i] / norm).abs() < 1e-14);
                for j in 0..=i {
                    let dot: f64 = frame[i].iter().zip(&frame[j]).map(|(a, b)| a * b).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (dot - want).abs() < 1e-12,
                        "frame columns {i},{j} not orthonormal: dot = {dot}"
                    );
                }
            }
        }
    }

    #[test]
    fn rank_one_sum_annihilates_direction() {
        // X = sum lambda_k q_k q_k^T over tangent columns kills p.
        let p = [0.6, -0.8, 0.2];
        let frame = frame_from_direction(&p);
        let x = SymMat::from_rank_one_sum(3, &[(2.0, &frame[1][..]), (-1.5, &frame[2][..])]);
        let xp = x.mul_vec(&p);
        for c in xp {
            assert!(c.abs() < 1e-13, "X p should vanish, got component {c}");
        }
    }
}
