//! Dense linear-algebra helpers over nalgebra.

use nalgebra::DMatrix;

use crate::poly::C64;

pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;

/// Singular values below this are treated as zero.
pub const SINGULAR_THRESHOLD: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conditioning {
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl Conditioning {
    pub fn condition_number(&self) -> f64 {
        if self.sigma_min == 0.0 {
            f64::INFINITY
        } else {
            self.sigma_max / self.sigma_min
        }
    }
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

pub fn conditioning(m: &CMat) -> Conditioning {
    let s = singular_values(m);
    if s.is_empty() {
        return Conditioning { sigma_min: 0.0, sigma_max: 0.0 };
    }
    Conditioning {
        sigma_min: s.iter().copied().fold(f64::INFINITY, f64::min),
        sigma_max: s.iter().copied().fold(0.0, f64::max),
    }
}

pub fn numerical_rank(m: &CMat) -> usize {
    singular_values(m).into_iter().filter(|&s| s > SINGULAR_THRESHOLD).count()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn pseudo_inverse(m: &CMat) -> CMat {
    if m.is_empty() {
        return CMat::zeros(m.ncols(), m.nrows());
    }
    m.clone().svd(true, true).pseudo_inverse(SINGULAR_THRESHOLD).expect("both factors computed")
}

/// `max(‖R⁺R − I‖, ‖RR⁺ − I‖)` in the max norm. Zero iff `R` is invertible
/// within the singular threshold. Square matrices are inverted by LU, which
/// stays accurate at sizes where the SVD does not.
pub fn inversion_deviation(r: &CMat) -> f64 {
    let p = if r.is_square() && !r.is_empty() {
        match r.clone().full_piv_lu().try_inverse() {
            Some(inv) => inv,
            None => return f64::INFINITY,
        }
    } else {
        pseudo_inverse(r)
    };
    let left = &p * r - CMat::identity(r.ncols(), r.ncols());
    let right = r * &p - CMat::identity(r.nrows(), r.nrows());
    max_abs(&left).max(max_abs(&right))
}

/// Least-squares solution of `a x = b` for real `a` with full column rank.
pub fn real_pseudo_inverse(a: &RMat) -> RMat {
    if a.is_empty() {
        return RMat::zeros(a.ncols(), a.nrows());
    }
    a.clone().svd(true, true).pseudo_inverse(1e-12).expect("both factors computed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_perfectly_conditioned() {
        let i = CMat::identity(4, 4);
        let c = conditioning(&i);
        assert!((c.condition_number() - 1.0).abs() < 1e-12);
        assert!(inversion_deviation(&i) < 1e-14);
        assert_eq!(numerical_rank(&i), 4);
    }

    #[test]
    fn rank_deficiency_shows_up() {
        let mut m = CMat::identity(3, 3);
        m[(2, 2)] = C64::new(0.0, 0.0);
        assert_eq!(numerical_rank(&m), 2);
        assert!(inversion_deviation(&m) > 0.5);
        let tall = CMat::from_element(3, 2, C64::new(1.0, 0.0));
        assert!(inversion_deviation(&tall) > 0.5);
    }
}
