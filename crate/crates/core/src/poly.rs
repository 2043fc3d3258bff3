//! Multivariate polynomials with rational coefficients.
//!
//! All smooth problem data (objectives, constraints) is carried as
//! polynomials so that values, gradients, and Hessians at rational points
//! are exact. Differentiation is symbolic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::scalar::{self, int, is_zero, Scalar};

/// One term `coef · Π v_i^exps[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial {
    pub coef: Scalar,
    pub exps: Vec<u32>,
}

/// Sum of monomials over a fixed number of variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    pub vars: usize,
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn zero(vars: usize) -> Self {
        Polynomial {
            vars,
            terms: Vec::new(),
        }
    }

    pub fn constant(vars: usize, c: Scalar) -> Self {
        let mut p = Polynomial::zero(vars);
        if !is_zero(&c) {
            p.terms.push(Monomial {
                coef: c,
                exps: vec![0; vars],
            });
        }
        p
    }

    /// The linear form `coefsᵀ v + constant`.
    pub fn affine(coefs: &[Scalar], constant: Scalar) -> Self {
        let vars = coefs.len();
        let mut p = Polynomial::constant(vars, constant);
        for (i, c) in coefs.iter().enumerate() {
            if !is_zero(c) {
                let mut exps = vec![0; vars];
                exps[i] = 1;
                p.terms.push(Monomial {
                    coef: c.clone(),
                    exps,
                });
            }
        }
        p.normalize();
        p
    }

    pub fn push_term(&mut self, coef: Scalar, exps: Vec<u32>) {
        assert_eq!(exps.len(), self.vars, "monomial arity mismatch");
        self.terms.push(Monomial { coef, exps });
        self.normalize();
    }

    /// Merges duplicate exponent patterns and drops zero coefficients.
    fn normalize(&mut self) {
        self.terms.sort_by(|a, b| a.exps.cmp(&b.exps));
        let mut merged: Vec<Monomial> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            match merged.last_mut() {
                Some(last) if last.exps == t.exps => last.coef += t.coef,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| !is_zero(&t.coef));
        self.terms = merged;
    }

    pub fn eval(&self, point: &[Scalar]) -> Scalar {
        assert_eq!(point.len(), self.vars, "evaluation arity mismatch");
        let mut acc = int(0);
        for t in &self.terms {
            let mut term = t.coef.clone();
            for (v, &e) in point.iter().zip(&t.exps) {
                for _ in 0..e {
                    term *= v;
                }
            }
            acc += term;
        }
        acc
    }

    pub fn partial(&self, var: usize) -> Polynomial {
        assert!(var < self.vars);
        let mut out = Polynomial::zero(self.vars);
        for t in &self.terms {
            let e = t.exps[var];
            if e == 0 {
                continue;
            }
            let mut exps = t.exps.clone();
            exps[var] = e - 1;
            out.terms.push(Monomial {
                coef: &t.coef * int(e as i64),
                exps,
            });
        }
        out.normalize();
        out
    }

    pub fn gradient(&self, point: &[Scalar]) -> Vector {
        (0..self.vars)
            .map(|v| self.partial(v).eval(point))
            .collect()
    }

    pub fn hessian(&self, point: &[Scalar]) -> Matrix {
        let mut h = Matrix::zero(self.vars, self.vars);
        for i in 0..self.vars {
            let pi = self.partial(i);
            for j in i..self.vars {
                let v = pi.partial(j).eval(point);
                *h.at_mut(i, j) = v.clone();
                *h.at_mut(j, i) = v;
            }
        }
        h
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.exps.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Maximum exponent of one particular variable.
    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.iter().map(|t| t.exps[var]).max().unwrap_or(0)
    }

    /// True if no term mentions any of `vars`.
    pub fn independent_of(&self, vars: &[usize]) -> bool {
        self.terms
            .iter()
            .all(|t| vars.iter().all(|&v| t.exps[v] == 0))
    }

    pub fn scale(&self, t: &Scalar) -> Polynomial {
        let mut out = self.clone();
        for term in &mut out.terms {
            term.coef *= t;
        }
        out.normalize();
        out
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.vars, other.vars);
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        out.normalize();
        out
    }
}

/// Wire form of a monomial: rational coefficient as a string plus the
/// exponent vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonomialSpec {
    pub coef: String,
    pub exps: Vec<u32>,
}

pub fn poly_from_spec(vars: usize, terms: &[MonomialSpec]) -> Result<Polynomial> {
    let mut p = Polynomial::zero(vars);
    for t in terms {
        if t.exps.len() != vars {
            return Err(Error::Schema(format!(
                "monomial exponent vector of length {} in a {}-variable polynomial",
                t.exps.len(),
                vars
            )));
        }
        p.terms.push(Monomial {
            coef: scalar::parse(&t.coef)?,
            exps: t.exps.clone(),
        });
    }
    p.normalize();
    Ok(p)
}

pub fn poly_to_spec(p: &Polynomial) -> Vec<MonomialSpec> {
    p.terms
        .iter()
        .map(|t| MonomialSpec {
            coef: scalar::render(&t.coef),
            exps: t.exps.clone(),
        })
        .collect()
}
