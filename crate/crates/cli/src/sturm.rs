//! Exact univariate polynomial tools for the growth oracle: Sturm-sequence
//! root counting, root isolation by bisection, and interval evaluation.
//! Everything runs on rationals; algebraic numbers are carried as refinable
//! isolating intervals.

use strictmin::scalar::{int, is_zero, Scalar};

/// Dense univariate polynomial, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniPoly {
    pub coefs: Vec<Scalar>,
}

impl UniPoly {
    pub fn new(mut coefs: Vec<Scalar>) -> Self {
        while coefs.len() > 1 && is_zero(coefs.last().unwrap()) {
            coefs.pop();
        }
        if coefs.is_empty() {
            coefs.push(int(0));
        }
        UniPoly { coefs }
    }

    pub fn degree(&self) -> usize {
        self.coefs.len() - 1
    }

    pub fn is_zero_poly(&self) -> bool {
        self.coefs.iter().all(is_zero)
    }

    pub fn eval(&self, x: &Scalar) -> Scalar {
        let mut acc = int(0);
        for c in self.coefs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> UniPoly {
        if self.coefs.len() <= 1 {
            return UniPoly::new(vec![int(0)]);
        }
        UniPoly::new(
            self.coefs[1..]
                .iter()
                .enumerate()
                .map(|(i, c)| c * int(i as i64 + 1))
                .collect(),
        )
    }

    fn neg_rem(&self, divisor: &UniPoly) -> UniPoly {
        // -(self mod divisor), the Sturm chain step.
        let d = divisor.degree();
        let lead = divisor.coefs[d].clone();
        let mut rem = self.coefs.clone();
        loop {
            while rem.len() > 1 && is_zero(rem.last().unwrap()) {
                rem.pop();
            }
            let k = rem.len() - 1;
            if k < d || (k == 0 && is_zero(&rem[0])) {
                break;
            }
            let factor = &rem[k] / &lead;
            for i in 0..=d {
                let v = &rem[k - d + i] - &factor * &divisor.coefs[i];
                rem[k - d + i] = v;
            }
            debug_assert!(is_zero(&rem[k]));
        }
        UniPoly::new(rem.into_iter().map(|c| -c).collect())
    }

    /// Monotone interval evaluation: the exact image bounds of the interval
    /// under the polynomial, by interval Horner.
    pub fn eval_interval(&self, lo: &Scalar, hi: &Scalar) -> (Scalar, Scalar) {
        debug_assert!(lo <= hi);
        let mut acc_lo = int(0);
        let mut acc_hi = int(0);
        for c in self.coefs.iter().rev() {
            // [acc_lo, acc_hi] * [lo, hi] + c
            let candidates = [&acc_lo * lo, &acc_lo * hi, &acc_hi * lo, &acc_hi * hi];
            acc_lo = candidates.iter().min().unwrap().clone() + c;
            acc_hi = candidates.iter().max().unwrap().clone() + c;
        }
        (acc_lo, acc_hi)
    }
}

/// Sturm chain of p: p, p', and negated remainders down to a constant.
pub struct SturmChain {
    chain: Vec<UniPoly>,
}

impl SturmChain {
    pub fn new(p: &UniPoly) -> Self {
        let mut chain = vec![p.clone()];
        if p.degree() >= 1 {
            chain.push(p.derivative());
            loop {
                let k = chain.len();
                let next = chain[k - 2].neg_rem(&chain[k - 1]);
                if next.is_zero_poly() {
                    break;
                }
                chain.push(next.clone());
                if next.degree() == 0 {
                    break;
                }
            }
        }
        SturmChain { chain }
    }

    fn sign_changes_at(&self, x: &Scalar) -> usize {
        let mut changes = 0;
        let mut last: Option<bool> = None; // sign as "positive?"
        for p in &self.chain {
            let v = p.eval(x);
            if is_zero(&v) {
                continue;
            }
            let positive = v > int(0);
            if let Some(prev) = last {
                if prev != positive {
                    changes += 1;
                }
            }
            last = Some(positive);
        }
        changes
    }

    /// Number of distinct real roots in the half-open interval (a, b].
    pub fn roots_in(&self, a: &Scalar, b: &Scalar) -> usize {
        debug_assert!(a <= b);
        self.sign_changes_at(a) - self.sign_changes_at(b)
    }
}

/// Cauchy root bound: all real roots lie in [-B, B].
pub fn root_bound(p: &UniPoly) -> Scalar {
    let d = p.degree();
    if d == 0 {
        return int(1);
    }
    let lead = strictmin::scalar::abs(&p.coefs[d]);
    let max_rest = p.coefs[..d]
        .iter()
        .map(strictmin::scalar::abs)
        .max()
        .unwrap_or_else(|| int(0));
    int(1) + max_rest / lead
}

/// An isolating interval for one distinct real root: `poly` has exactly one
/// root in `[lo, hi]`, and the interval can be bisected on demand.
#[derive(Debug, Clone)]
pub struct AlgebraicRoot {
    pub poly: UniPoly,
    pub lo: Scalar,
    pub hi: Scalar,
}

impl AlgebraicRoot {
    /// Exact rational value when the interval has collapsed.
    pub fn exact(&self) -> Option<Scalar> {
        if self.lo == self.hi {
            Some(self.lo.clone())
        } else {
            None
        }
    }

    pub fn width(&self) -> Scalar {
        &self.hi - &self.lo
    }

    /// Halves the isolating interval, keeping the root inside.
    pub fn refine(&mut self) {
        if self.lo == self.hi {
            return;
        }
        let mid = (&self.lo + &self.hi) / int(2);
        if is_zero(&self.poly.eval(&mid)) {
            self.lo = mid.clone();
            self.hi = mid;
            return;
        }
        let chain = SturmChain::new(&self.poly);
        if chain.roots_in(&self.lo, &mid) == 1 {
            self.hi = mid;
        } else {
            self.lo = mid;
        }
    }

    pub fn refine_below(&mut self, width: &Scalar) {
        while self.exact().is_none() && &self.width() > width {
            self.refine();
        }
    }
}

/// Isolates all distinct real roots of `p` into disjoint intervals with
/// rational endpoints that are not roots themselves.
pub fn isolate_roots(p: &UniPoly) -> Vec<AlgebraicRoot> {
    if p.is_zero_poly() || p.degree() == 0 {
        return Vec::new();
    }
    let chain = SturmChain::new(p);
    let bound = root_bound(p);
    let mut stack = vec![(-bound.clone(), bound.clone())];
    let mut out: Vec<AlgebraicRoot> = Vec::new();
    while let Some((lo, hi)) = stack.pop() {
        match chain.roots_in(&lo, &hi) {
            0 => {}
            1 => out.push(AlgebraicRoot {
                poly: p.clone(),
                lo,
                hi,
            }),
            _ => {
                // Split at a point that is not itself a root, so the
                // half-open interval queries stay disjoint.
                let mut mid = (&lo + &hi) / int(2);
                let mut offset = (&hi - &lo) / int(16);
                while is_zero(&p.eval(&mid)) {
                    mid += &offset;
                    offset = offset / int(2);
                }
                debug_assert!(lo < mid && mid < hi);
                stack.push((lo, mid.clone()));
                stack.push((mid, hi));
            }
        }
    }
    out.sort_by(|a, b| a.lo.cmp(&b.lo));
    out
}
