//! Exact frontdoor and backdoor identification on discrete structural causal models with
//! the graph `K → X → P → S` and `K → S`.
//!
//! `K` is the confounder, `X` the input, `P` the prompt (mediator) and `S` the extracted
//! span. The estimators take marginal tables as input, so the frontdoor estimator has no
//! way to read `K`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domains {
    pub k: usize,
    pub x: usize,
    pub p: usize,
    pub s: usize,
}

/// Conditional tables: `prior_k[k]`, `cond_x[k][x]`, `cond_p[x][p]`, `cond_s[p][k][s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteScm {
    pub domains: Domains,
    pub prior_k: Vec<f64>,
    pub cond_x: Vec<Vec<f64>>,
    pub cond_p: Vec<Vec<f64>>,
    pub cond_s: Vec<Vec<Vec<f64>>>,
}

fn check_row(name: &str, row: &[f64], len: usize) -> Result<()> {
    if row.len() != len {
        return Err(Error::Validation(format!("{name} has {} entries, expected {len}", row.len())));
    }
    if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Validation(format!("{name} has a negative or non-finite entry")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOL {
        return Err(Error::Validation(format!("{name} sums to {sum}, not 1")));
    }
    Ok(())
}

fn check_table(name: &str, rows: &[Vec<f64>], n_rows: usize, len: usize) -> Result<()> {
    if rows.len() != n_rows {
        return Err(Error::Validation(format!("{name} has {} rows, expected {n_rows}", rows.len())));
    }
    for (i, r) in rows.iter().enumerate() {
        check_row(&format!("{name}[{i}]"), r, len)?;
    }
    Ok(())
}

impl DiscreteScm {
    pub fn validate(&self) -> Result<()> {
        let d = self.domains;
        if d.k == 0 || d.x == 0 || d.p == 0 || d.s == 0 {
            return Err(Error::Validation("every domain needs at least one value".into()));
        }
        check_row("prior_k", &self.prior_k, d.k)?;
        check_table("cond_x", &self.cond_x, d.k, d.x)?;
        check_table("cond_p", &self.cond_p, d.x, d.p)?;
        if self.cond_s.len() != d.p {
            return Err(Error::Validation(format!("cond_s has {} blocks, expected {}", self.cond_s.len(), d.p)));
        }
        for (p, block) in self.cond_s.iter().enumerate() {
            check_table(&format!("cond_s[{p}]"), block, d.k, d.s)?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scm: DiscreteScm = serde_json::from_str(text)?;
        scm.validate()?;
        Ok(scm)
    }

    /// Every conditional drawn from a flat Dirichlet.
    pub fn random<R: Rng>(domains: Domains, rng: &mut R) -> Self {
        let mut row = |n: usize| dirichlet(n, rng);
        let prior_k = row(domains.k);
        let cond_x = (0..domains.k).map(|_| row(domains.x)).collect();
        let cond_p = (0..domains.x).map(|_| row(domains.p)).collect();
        let cond_s = (0..domains.p).map(|_| (0..domains.k).map(|_| row(domains.s)).collect()).collect();
        DiscreteScm {
            domains,
            prior_k,
            cond_x,
            cond_p,
            cond_s,
        }
    }

    /// Random SCM with every domain size drawn uniformly from `min..=max`.
    pub fn random_sized<R: Rng>(min: usize, max: usize, rng: &mut R) -> Self {
        let mut size = || rng.random_range(min..=max);
        let domains = Domains {
            k: size(),
            x: size(),
            p: size(),
            s: size(),
        };
        Self::random(domains, rng)
    }
}

fn dirichlet<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect::<Vec<f64>>();
    let total: f64 = draws.iter().sum();
    let mut row: Vec<f64> = draws.iter().map(|v| v / total).collect();
    // Push the rounding residue into the largest entry so the row sums to 1 within an ulp or two.
    let residue = 1.0 - row.iter().sum::<f64>();
    let i = crate::classifier::argmax(&row);
    row[i] += residue;
    row
}

/// Dense joint table over `(K, X, P, S)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointKxps {
    pub domains: Domains,
    pub values: Vec<f64>,
}

impl JointKxps {
    fn index(&self, k: usize, x: usize, p: usize, s: usize) -> usize {
        let d = self.domains;
        ((k * d.x + x) * d.p + p) * d.s + s
    }

    pub fn get(&self, k: usize, x: usize, p: usize, s: usize) -> f64 {
        self.values[self.index(k, x, p, s)]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// The observables available when `K` is hidden.
    pub fn observe_xps(&self) -> ObservedXps {
        let d = self.domains;
        let mut values = vec![0.0; d.x * d.p * d.s];
        for k in 0..d.k {
            for x in 0..d.x {
                for p in 0..d.p {
                    for s in 0..d.s {
                        values[(x * d.p + p) * d.s + s] += self.get(k, x, p, s);
                    }
                }
            }
        }
        ObservedXps {
            x: d.x,
            p: d.p,
            s: d.s,
            values,
        }
    }

    /// The observables available when `K` is measured but `P` is ignored.
    pub fn observe_kxs(&self) -> ObservedKxs {
        let d = self.domains;
        let mut values = vec![0.0; d.k * d.x * d.s];
        for k in 0..d.k {
            for x in 0..d.x {
                for p in 0..d.p {
                    for s in 0..d.s {
                        values[(k * d.x + x) * d.s + s] += self.get(k, x, p, s);
                    }
                }
            }
        }
        ObservedKxs {
            k: d.k,
            x: d.x,
            s: d.s,
            values,
        }
    }
}

/// `P(k, x, p, s) = P(k) P(x|k) P(p|x) P(s|p,k)`.
pub fn observational_joint(scm: &DiscreteScm) -> Result<JointKxps> {
    scm.validate()?;
    let d = scm.domains;
    let mut values = Vec::with_capacity(d.k * d.x * d.p * d.s);
    for k in 0..d.k {
        for x in 0..d.x {
            for p in 0..d.p {
                for s in 0..d.s {
                    values.push(scm.prior_k[k] * scm.cond_x[k][x] * scm.cond_p[x][p] * scm.cond_s[p][k][s]);
                }
            }
        }
    }
    Ok(JointKxps { domains: d, values })
}

fn check_x(x: usize, n: usize) -> Result<()> {
    if x >= n {
        return Err(Error::InvalidArgument(format!("x = {x} outside a domain of size {n}")));
    }
    Ok(())
}

/// `P(S | do(X = x)) = Σ_k P(k) Σ_p P(p|x) P(s|p,k)`, evaluated on the mutilated graph.
pub fn interventional_truth(scm: &DiscreteScm, x: usize) -> Result<Vec<f64>> {
    scm.validate()?;
    let d = scm.domains;
    check_x(x, d.x)?;
    let mut out = vec![0.0; d.s];
    for k in 0..d.k {
        for p in 0..d.p {
            let w = scm.prior_k[k] * scm.cond_p[x][p];
            for (s, o) in out.iter_mut().enumerate() {
                *o += w * scm.cond_s[p][k][s];
            }
        }
    }
    Ok(out)
}

/// Joint table over `(X, P, S)` only.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedXps {
    pub x: usize,
    pub p: usize,
    pub s: usize,
    pub values: Vec<f64>,
}

impl ObservedXps {
    pub fn get(&self, x: usize, p: usize, s: usize) -> f64 {
        self.values[(x * self.p + p) * self.s + s]
    }

    pub fn p_x(&self, x: usize) -> f64 {
        (0..self.p).flat_map(|p| (0..self.s).map(move |s| (p, s))).map(|(p, s)| self.get(x, p, s)).sum()
    }

    pub fn p_xp(&self, x: usize, p: usize) -> f64 {
        (0..self.s).map(|s| self.get(x, p, s)).sum()
    }

    /// Plain conditional `P(S | X = x)`.
    pub fn conditional_s_given_x(&self, x: usize) -> Result<Vec<f64>> {
        check_x(x, self.x)?;
        let px = self.p_x(x);
        if px <= 0.0 {
            return Err(Error::UnsupportedConditioning(format!("P(X={x}) = 0")));
        }
        Ok((0..self.s).map(|s| (0..self.p).map(|p| self.get(x, p, s)).sum::<f64>() / px).collect())
    }
}

/// Joint table over `(K, X, S)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedKxs {
    pub k: usize,
    pub x: usize,
    pub s: usize,
    pub values: Vec<f64>,
}

impl ObservedKxs {
    pub fn get(&self, k: usize, x: usize, s: usize) -> f64 {
        self.values[(k * self.x + x) * self.s + s]
    }
}

/// `Σ_p P(p|x) Σ_x' P(s|p,x') P(x')`, computed from the `(X, P, S)` table alone.
pub fn frontdoor_estimate(obs: &ObservedXps, x: usize) -> Result<Vec<f64>> {
    check_x(x, obs.x)?;
    let px = obs.p_x(x);
    if px <= 0.0 {
        return Err(Error::UnsupportedConditioning(format!("P(X={x}) = 0")));
    }
    let marg_x: Vec<f64> = (0..obs.x).map(|xx| obs.p_x(xx)).collect();
    let mut out = vec![0.0; obs.s];
    for p in 0..obs.p {
        let p_given_x = obs.p_xp(x, p) / px;
        if p_given_x == 0.0 {
            continue;
        }
        for (xx, &pxx) in marg_x.iter().enumerate() {
            if pxx == 0.0 {
                continue;
            }
            let pxp = obs.p_xp(xx, p);
            if pxp <= 0.0 {
                return Err(Error::UnsupportedConditioning(format!("P(P={p}, X={xx}) = 0")));
            }
            for (s, o) in out.iter_mut().enumerate() {
                *o += p_given_x * (obs.get(xx, p, s) / pxp) * pxx;
            }
        }
    }
    Ok(out)
}

/// `Σ_k P(s|x,k) P(k)`, computed from the `(K, X, S)` table.
pub fn backdoor_estimate(obs: &ObservedKxs, x: usize) -> Result<Vec<f64>> {
    check_x(x, obs.x)?;
    let mut out = vec![0.0; obs.s];
    for k in 0..obs.k {
        let pk: f64 = (0..obs.x).flat_map(|xx| (0..obs.s).map(move |s| (xx, s))).map(|(xx, s)| obs.get(k, xx, s)).sum();
        if pk == 0.0 {
            continue;
        }
        let pkx: f64 = (0..obs.s).map(|s| obs.get(k, x, s)).sum();
        if pkx <= 0.0 {
            return Err(Error::UnsupportedConditioning(format!("P(X={x}, K={k}) = 0")));
        }
        for (s, o) in out.iter_mut().enumerate() {
            *o += obs.get(k, x, s) / pkx * pk;
        }
    }
    Ok(out)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Side-by-side comparison for one SCM and one value of `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalComparison {
    pub x: usize,
    pub truth: Vec<f64>,
    pub frontdoor: Vec<f64>,
    pub backdoor: Vec<f64>,
    pub conditional: Vec<f64>,
    pub frontdoor_deviation: f64,
    pub backdoor_deviation: f64,
    /// Gap between the plain conditional and the truth, i.e. the confounding bias.
    pub conditional_gap: f64,
}

pub fn compare(scm: &DiscreteScm, x: usize) -> Result<CausalComparison> {
    let joint = observational_joint(scm)?;
    let truth = interventional_truth(scm, x)?;
    let xps = joint.observe_xps();
    let frontdoor = frontdoor_estimate(&xps, x)?;
    let backdoor = backdoor_estimate(&joint.observe_kxs(), x)?;
    let conditional = xps.conditional_s_given_x(x)?;
    Ok(CausalComparison {
        x,
        frontdoor_deviation: max_abs_diff(&frontdoor, &truth),
        backdoor_deviation: max_abs_diff(&backdoor, &truth),
        conditional_gap: max_abs_diff(&conditional, &truth),
        truth,
        frontdoor,
        backdoor,
        conditional,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalSummary {
    pub scms: usize,
    pub comparisons: usize,
    pub max_frontdoor_deviation: f64,
    pub max_backdoor_deviation: f64,
    pub max_conditional_gap: f64,
}

/// Checks every value of `X` on `count` random SCMs with domain sizes in `2..=5`.
pub fn random_check<R: Rng>(count: usize, rng: &mut R) -> Result<CausalSummary> {
    let mut summary = CausalSummary {
        scms: count,
        comparisons: 0,
        max_frontdoor_deviation: 0.0,
        max_backdoor_deviation: 0.0,
        max_conditional_gap: 0.0,
    };
    for _ in 0..count {
        let scm = DiscreteScm::random_sized(2, 5, rng);
        for x in 0..scm.domains.x {
            let c = compare(&scm, x)?;
            summary.comparisons += 1;
            summary.max_frontdoor_deviation = summary.max_frontdoor_deviation.max(c.frontdoor_deviation);
            summary.max_backdoor_deviation = summary.max_backdoor_deviation.max(c.backdoor_deviation);
            summary.max_conditional_gap = summary.max_conditional_gap.max(c.conditional_gap);
        }
    }
    Ok(summary)
}
