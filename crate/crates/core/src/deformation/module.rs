use crate::annulus::{endo_validate, Endomorphism, LaurentElement, Space};
use crate::error::{Error, Result};
use crate::lognorm::LogNorm;
use crate::twisted::{check_level, std_apply};

/// Square matrix of annulus functions, row-major.
pub type Matrix = Vec<Vec<LaurentElement>>;

pub fn mat_identity(space: Space, m: usize) -> Matrix {
    (0..m)
        .map(|i| (0..m).map(|j| if i == j { LaurentElement::one(space) } else { LaurentElement::zero(space) }).collect())
        .collect()
}

pub fn mat_zero(space: Space, m: usize) -> Matrix {
    vec![vec![LaurentElement::zero(space); m]; m]
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let m = a.len();
    let space = a[0][0].space();
    let mut out = mat_zero(space, m);
    for i in 0..m {
        for j in 0..m {
            let mut acc = LaurentElement::zero(space);
            for l in 0..m {
                if !a[i][l].is_zero() && !b[l][j].is_zero() {
                    acc = &acc + &(&a[i][l] * &b[l][j]);
                }
            }
            out[i][j] = acc;
        }
    }
    out
}

pub fn mat_add(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter().zip(b).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect()).collect()
}

pub fn mat_sub(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter().zip(b).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect()).collect()
}

/// `f A`, entrywise.
pub fn mat_scale(f: &LaurentElement, a: &Matrix) -> Matrix {
    a.iter().map(|row| row.iter().map(|x| f * x).collect()).collect()
}

pub fn mat_apply(a: &Matrix, v: &[LaurentElement]) -> Vec<LaurentElement> {
    a.iter()
        .map(|row| {
            let space = row[0].space();
            row.iter().zip(v).fold(LaurentElement::zero(space), |acc, (x, y)| &acc + &(x * y))
        })
        .collect()
}

/// Largest entry norm.
pub fn mat_norm(a: &Matrix) -> LogNorm {
    a.iter().flatten().map(LaurentElement::gauss_norm).fold(LogNorm::Zero, LogNorm::max)
}

/// Largest visible entry difference; tails are not included.
pub fn mat_distance(a: &Matrix, b: &Matrix) -> LogNorm {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| x.distance(y))
        .fold(LogNorm::Zero, LogNorm::max)
}

pub fn vec_norm(v: &[LaurentElement]) -> LogNorm {
    v.iter().map(LaurentElement::gauss_norm).fold(LogNorm::Zero, LogNorm::max)
}

fn check_square(matrix: &Matrix, space: Space) -> Result<usize> {
    let m = matrix.len();
    if m == 0 {
        return Err(Error::Shape("rank must be positive".into()));
    }
    if matrix.iter().any(|row| row.len() != m) {
        return Err(Error::Shape(format!("matrix is not {m} x {m}")));
    }
    if matrix.iter().flatten().any(|c| c.space() != space) {
        return Err(Error::Shape("matrix entries live on another space".into()));
    }
    Ok(m)
}

/// A free module with basis `e_1..e_m` and `d(e_j) = sum_i G_(i,j) e_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectionModule {
    matrix: Matrix,
    endo: Endomorphism,
    level: LogNorm,
}

impl ConnectionModule {
    pub fn new(matrix: Matrix, endo: Endomorphism, level: LogNorm) -> Result<Self> {
        check_square(&matrix, endo.space())?;
        check_level(&endo, level)?;
        Ok(ConnectionModule { matrix, endo, level })
    }

    /// A usual connection, attached to the identity.
    pub fn untwisted(matrix: Matrix, space: Space, level: LogNorm) -> Result<Self> {
        Self::new(matrix, Endomorphism::identity(space), level)
    }

    pub fn rank(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn endo(&self) -> &Endomorphism {
        &self.endo
    }

    pub fn level(&self) -> LogNorm {
        self.level
    }

    pub fn space(&self) -> Space {
        self.endo.space()
    }

    /// Coordinates of `d_M(v) = d(v) + G v`.
    pub fn derivative(&self, v: &[LaurentElement]) -> Result<Vec<LaurentElement>> {
        if v.len() != self.rank() {
            return Err(Error::Shape(format!("vector of length {} for rank {}", v.len(), self.rank())));
        }
        let gv = mat_apply(&self.matrix, v);
        v.iter()
            .zip(gv)
            .map(|(c, g)| Ok(&std_apply(1, c, &self.endo)? + &g))
            .collect()
    }
}

/// A free module with a `sigma`-semilinear map `sigma_M(e_j) = sum_i S_(i,j) e_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaModule {
    matrix: Matrix,
    endo: Endomorphism,
    level: LogNorm,
    order: usize,
    tail: LogNorm,
}

impl SigmaModule {
    pub fn new(matrix: Matrix, endo: Endomorphism, level: LogNorm, order: usize, tail: LogNorm) -> Result<Self> {
        check_square(&matrix, endo.space())?;
        Ok(SigmaModule { matrix, endo, level, order, tail })
    }

    pub fn rank(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn endo(&self) -> &Endomorphism {
        &self.endo
    }

    pub fn level(&self) -> LogNorm {
        self.level
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Bound on the entries of everything dropped from the matrix.
    pub fn tail(&self) -> LogNorm {
        self.tail
    }

    /// Coordinates of `sigma_M(v) = S sigma(v)`; the matrix tail enters the result.
    pub fn apply(&self, v: &[LaurentElement]) -> Result<Vec<LaurentElement>> {
        if v.len() != self.rank() {
            return Err(Error::Shape(format!("vector of length {} for rank {}", v.len(), self.rank())));
        }
        let shifted = v.iter().map(|c| self.endo.apply(c)).collect::<Result<Vec<_>>>()?;
        let spill = self.tail.mul(vec_norm(&shifted));
        Ok(mat_apply(&self.matrix, &shifted).into_iter().map(|c| c.with_tail(spill)).collect())
    }

    /// `sigma` bijective and `det S` a certified unit; ranks above 4 are not attempted.
    pub fn is_invertible(&self) -> bool {
        let e = &self.endo;
        let bijective = endo_validate(e.q(), e.h(), &e.space()).bijective;
        bijective && self.rank() <= 4 && mat_det(&self.matrix).dominant_monomial().is_some()
    }
}

/// Cofactor expansion along the first row.
pub fn mat_det(a: &Matrix) -> LaurentElement {
    let m = a.len();
    if m == 1 {
        return a[0][0].clone();
    }
    let space = a[0][0].space();
    let mut acc = LaurentElement::zero(space);
    for j in 0..m {
        if a[0][j].is_zero() {
            continue;
        }
        let minor: Matrix = a[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|(l, _)| *l != j).map(|(_, c)| c.clone()).collect())
            .collect();
        let term = &a[0][j] * &mat_det(&minor);
        acc = if j % 2 == 0 { &acc + &term } else { &acc - &term };
    }
    acc
}
