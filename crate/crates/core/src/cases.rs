//! Catalog of the 42 convergence-rate cases and their predicted exponents.

use serde::{Deserialize, Serialize};

use crate::bounds::BoundKind;
use crate::density::{Drift, Pattern};
use crate::error::{BegError, Result};
use crate::model::{critical_k, g_derivs_at_zero, schedule_eval, ModelParams, Schedule, BETA_C};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Theorem {
    #[serde(rename = "fixed-A")]
    FixedA,
    #[serde(rename = "fixed-B")]
    FixedB,
    #[serde(rename = "fixed-C")]
    FixedC,
    #[serde(rename = "seq-A")]
    SeqA,
    B1,
    B2,
    B3,
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
}

impl Theorem {
    pub fn name(&self) -> &'static str {
        match self {
            Theorem::FixedA => "fixed-A",
            Theorem::FixedB => "fixed-B",
            Theorem::FixedC => "fixed-C",
            Theorem::SeqA => "seq-A",
            Theorem::B1 => "B1",
            Theorem::B2 => "B2",
            Theorem::B3 => "B3",
            Theorem::C1 => "C1",
            Theorem::C2 => "C2",
            Theorem::C3 => "C3",
            Theorem::C4 => "C4",
            Theorem::C5 => "C5",
            Theorem::C6 => "C6",
            Theorem::C7 => "C7",
            Theorem::C8 => "C8",
        }
    }

    pub fn is_b(&self) -> bool {
        matches!(self, Theorem::B1 | Theorem::B2 | Theorem::B3)
    }

    pub fn is_c(&self) -> bool {
        matches!(
            self,
            Theorem::C1 | Theorem::C2 | Theorem::C3 | Theorem::C4 | Theorem::C5 | Theorem::C6 | Theorem::C7 | Theorem::C8
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub id: String,
    pub theorem: Theorem,
    pub subcase: String,
    pub gamma: f64,
    pub schedule: Schedule,
    pub pattern: Pattern,
    /// λ = n^{−lambda_exponent}.
    pub lambda_exponent: f64,
    pub validity: String,
}

const EPS: f64 = 1e-9;

fn eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= EPS
}

impl CaseSpec {
    fn invalid(&self, reason: impl Into<String>) -> BegError {
        BegError::InvalidCase { case: self.id.clone(), reason: reason.into() }
    }

    fn deltas(&self) -> (f64, f64) {
        match self.schedule {
            Schedule::FixedBeta { delta2, .. } => (0.0, delta2),
            Schedule::MovingBeta { delta1, delta2, .. } => (delta1, delta2),
            _ => (0.0, 0.0),
        }
    }

    pub fn params_at(&self, n: usize) -> Result<ModelParams> {
        schedule_eval(&self.schedule, n)
    }

    pub fn bound_kind(&self) -> BoundKind {
        if self.pattern == Pattern::GAUSSIAN {
            BoundKind::Normal
        } else {
            BoundKind::General
        }
    }

    /// Cases converging to the tricritical point use a longer ladder.
    pub fn extended_ladder(&self) -> bool {
        self.theorem == Theorem::FixedC || self.theorem.is_c()
    }

    /// Regression drift at (β_n, K_n) restricted to the case's pattern.
    pub fn drift(&self, p: &ModelParams, n: usize) -> Drift {
        let d = g_derivs_at_zero(p);
        let c = p.coupling();
        let nf = n as f64;
        let g = self.gamma;
        let a = [
            d.g2 / c / nf,
            d.g4 / (6.0 * c) * nf.powf(-1.0 - 2.0 * g),
            d.g6 / (120.0 * c) * nf.powf(-1.0 - 4.0 * g),
        ];
        let lambda = nf.powf(-self.lambda_exponent);
        let active = self.pattern.active();
        let mut q = [0.0; 3];
        for j in 0..3 {
            if active[j] {
                q[j] = a[j] / lambda;
            }
        }
        Drift { lambda, q }
    }

    /// Exponent r of the asserted bound C·n^{−r}; fails when the parameters
    /// violate the branch predicate of the case.
    pub fn predicted_rate(&self) -> Result<f64> {
        let g = self.gamma;
        let (d1, d2) = self.deltas();
        let need = |ok: bool, what: &str| if ok { Ok(()) } else { Err(self.invalid(what.to_string())) };
        match self.theorem {
            Theorem::FixedA | Theorem::SeqA => {
                let lim = self.schedule.limit();
                need(eq(g, 0.5), "gamma must be 1/2")?;
                need(lim.beta <= BETA_C && lim.k < critical_k(lim.beta), "limit must lie in region A")?;
                if self.theorem == Theorem::FixedA {
                    need(matches!(self.schedule, Schedule::Fixed { .. }), "fixed parameters required")?;
                }
                Ok(0.5)
            }
            Theorem::FixedB => {
                let Schedule::Fixed { beta, k } = self.schedule else {
                    return Err(self.invalid("fixed parameters required"));
                };
                need(eq(g, 0.25), "gamma must be 1/4")?;
                need(beta < BETA_C && (k - critical_k(beta)).abs() <= EPS * k, "(beta, K) must lie on B")?;
                Ok(0.25)
            }
            Theorem::FixedC => {
                let Schedule::Fixed { beta, k } = self.schedule else {
                    return Err(self.invalid("fixed parameters required"));
                };
                need(eq(g, 1.0 / 6.0), "gamma must be 1/6")?;
                need(eq(beta, BETA_C) && eq(k, critical_k(BETA_C)), "(beta, K) must be the tricritical point")?;
                Ok(1.0 / 6.0)
            }
            Theorem::B1 | Theorem::B2 | Theorem::B3 => {
                let Schedule::FixedBeta { beta_fixed, k, .. } = self.schedule else {
                    return Err(self.invalid("fixed-beta schedule required"));
                };
                need(beta_fixed > 0.0 && beta_fixed < BETA_C, "beta must lie in (0, beta_c)")?;
                let v = (2.0 * g + d2 - 1.0).min(4.0 * g - 1.0);
                need(eq(v, 0.0), "v = min(2γ+Δ₂−1, 4γ−1) must vanish")?;
                match self.theorem {
                    Theorem::B1 => {
                        need(eq(g, 0.25) && eq(d2, 0.5), "needs γ = 1/4, Δ₂ = 1/2")?;
                        Ok(0.25)
                    }
                    Theorem::B2 => {
                        need(eq(2.0 * g, 1.0 - d2), "needs 2γ = 1 − Δ₂")?;
                        need(g > 0.25 && g < 0.5 && d2 > 0.0 && d2 < 0.5, "needs γ ∈ (1/4,1/2)")?;
                        need(k > 0.0, "needs k > 0")?;
                        Ok(if g <= 1.0 / 3.0 { 4.0 * g - 1.0 } else { g })
                    }
                    _ => {
                        need(eq(g, 0.25) && d2 > 0.5 + EPS, "needs γ = 1/4, Δ₂ > 1/2")?;
                        Ok(if d2 < 0.75 { d2 - 0.5 } else { 0.25 })
                    }
                }
            }
            _ => {
                let Schedule::MovingBeta { b, k, .. } = self.schedule else {
                    return Err(self.invalid("moving-beta schedule required"));
                };
                need(g >= 1.0 / 6.0 - EPS && g <= 0.5 + EPS, "gamma must lie in [1/6, 1/2]")?;
                let w = (2.0 * g + d2 - 1.0).min(4.0 * g + d1 - 1.0).min(6.0 * g - 1.0);
                need(eq(w, 0.0), "w = min(2γ+Δ₂−1, 4γ+Δ₁−1, 6γ−1) must vanish")?;
                self.c_rate(g, d1, d2, b, k)
            }
        }
    }

    fn c_rate(&self, g: f64, d1: f64, d2: f64, b: f64, k: f64) -> Result<f64> {
        let need = |ok: bool, what: &str| if ok { Ok(()) } else { Err(self.invalid(what.to_string())) };
        let sixth = 1.0 / 6.0;
        let third = 1.0 / 3.0;
        match self.theorem {
            Theorem::C1 => {
                need(eq(g, sixth) && eq(d1, third) && eq(d2, 2.0 * third), "needs γ=1/6, Δ₁=1/3, Δ₂=2/3")?;
                Ok(sixth)
            }
            Theorem::C2 => {
                need(eq(2.0 * g, 1.0 - d2), "needs 2γ = 1 − Δ₂")?;
                need(g > 0.25 && g < 0.5 && d1 > 0.0, "needs γ ∈ (1/4,1/2), Δ₁ > 0")?;
                need(k > 0.0, "needs k > 0")?;
                Ok(if g <= third && d1 < 1.0 - 3.0 * g { 4.0 * g + d1 - 1.0 } else { g })
            }
            Theorem::C3 => {
                need(eq(2.0 * g, 1.0 - d2), "needs 2γ = 1 − Δ₂")?;
                need(g > sixth && g <= 0.25 + EPS, "needs γ ∈ (1/6,1/4]")?;
                need(d2 >= 0.5 - EPS && d2 < 2.0 * third, "needs Δ₂ ∈ [1/2,2/3)")?;
                need(d1 > 2.0 * d2 - 1.0 + EPS, "needs Δ₁ > 2Δ₂ − 1")?;
                need(k > 0.0, "needs k > 0")?;
                Ok(if g <= 0.2 {
                    if d1 < 2.0 * g { 4.0 * g + d1 - 1.0 } else { 6.0 * g - 1.0 }
                } else if d1 < 1.0 - 3.0 * g {
                    4.0 * g + d1 - 1.0
                } else {
                    g
                })
            }
            Theorem::C4 => {
                need(eq(g, sixth) && d1 > third + EPS && d2 > 2.0 * third + EPS, "needs γ=1/6, Δ₁>1/3, Δ₂>2/3")?;
                Ok(match (d1 < 0.5, d2 < 5.0 * sixth) {
                    (true, true) if d1 <= d2 - third => d1 - third,
                    (true, true) => d2 - 2.0 * third,
                    (true, false) => d1 - third,
                    (false, true) => d2 - 2.0 * third,
                    (false, false) => sixth,
                })
            }
            Theorem::C5 => {
                need(eq(4.0 * g, 1.0 - d1), "needs 4γ = 1 − Δ₁")?;
                need(g > sixth && g < 0.25 && d1 > 0.0 && d1 < third, "needs γ ∈ (1/6,1/4)")?;
                need(2.0 * d2 > d1 + 1.0 + EPS, "needs 2Δ₂ > Δ₁ + 1")?;
                need(b > 0.0, "needs b > 0")?;
                Ok(if g < 0.2 {
                    if d2 < 4.0 * g { 2.0 * g + d2 - 1.0 } else { 6.0 * g - 1.0 }
                } else if d2 < 1.0 - g {
                    2.0 * g + d2 - 1.0
                } else {
                    g
                })
            }
            Theorem::C6 => {
                need(eq(g, sixth) && eq(d1, third) && d2 > 2.0 * third + EPS, "needs γ=1/6, Δ₁=1/3, Δ₂>2/3")?;
                Ok(if d2 < 5.0 * sixth { d2 - 2.0 * third } else { sixth })
            }
            Theorem::C7 => {
                need(eq(g, sixth) && d1 > third + EPS && eq(d2, 2.0 * third), "needs γ=1/6, Δ₁>1/3, Δ₂=2/3")?;
                Ok(if d1 < 0.5 { d1 - third } else { sixth })
            }
            Theorem::C8 => {
                need(eq(4.0 * g, 1.0 - d1) && eq(2.0 * d2, d1 + 1.0), "needs 4γ = 1 − Δ₁, 2Δ₂ = Δ₁ + 1")?;
                need(g > sixth && g < 0.25, "needs γ ∈ (1/6,1/4)")?;
                need(b > 0.0, "needs b > 0")?;
                Ok(if g <= 0.2 { 6.0 * g - 1.0 } else { g })
            }
            _ => unreachable!("c_rate called for a non-C theorem"),
        }
    }
}

fn sign(x: f64) -> &'static str {
    if x > 0.0 {
        "+"
    } else {
        "-"
    }
}

struct Builder {
    out: Vec<CaseSpec>,
}

impl Builder {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        id: String,
        theorem: Theorem,
        subcase: &str,
        gamma: f64,
        schedule: Schedule,
        pattern: Pattern,
        lambda_exponent: f64,
        validity: &str,
    ) {
        self.out.push(CaseSpec {
            id,
            theorem,
            subcase: subcase.to_string(),
            gamma,
            schedule,
            pattern,
            lambda_exponent,
            validity: validity.to_string(),
        });
    }
}

/// All 42 cases with representative parameters. Sign variants of k and b are
/// separate entries.
pub fn case_catalog() -> Vec<CaseSpec> {
    let third = 1.0 / 3.0;
    let sixth = 1.0 / 6.0;
    let mut c = Builder { out: Vec::with_capacity(42) };
    let both = |a: bool, b: bool, s: bool| Pattern { quadratic: a, quartic: b, sextic: s };

    c.push("fixed-A".into(), Theorem::FixedA, "(beta,K) in A", 0.5,
        Schedule::Fixed { beta: 1.0, k: 0.6 }, Pattern::GAUSSIAN, 1.0, "beta <= beta_c, K < K_c(beta)");
    c.push("fixed-B".into(), Theorem::FixedB, "(beta,K_c(beta)) in B", 0.25,
        Schedule::Fixed { beta: 1.0, k: critical_k(1.0) }, Pattern::QUARTIC, 1.5, "beta < beta_c, K = K_c(beta)");
    c.push("fixed-C".into(), Theorem::FixedC, "tricritical point", sixth,
        Schedule::Fixed { beta: BETA_C, k: critical_k(BETA_C) }, Pattern::SEXTIC, 5.0 / 3.0, "beta = beta_c, K = K_c(beta_c)");
    c.push("seq-A".into(), Theorem::SeqA, "(beta_n,K_n) -> (1, 0.6) in A", 0.5,
        Schedule::Drift { beta: 1.0, k: 0.6, c_beta: 0.2, c_k: 0.3, exponent: 0.5 },
        Pattern::GAUSSIAN, 1.0, "limit in A");

    for k in [1.0, -1.0] {
        c.push(format!("B1.k{}", sign(k)), Theorem::B1, "gamma=1/4, D2=1/2", 0.25,
            Schedule::FixedBeta { beta_fixed: 1.0, k, delta2: 0.5 }, both(true, true, false), 1.5,
            "gamma = 1/4, D2 = 1/2");
    }
    for (tag, gamma, d2, sub) in [("a", 0.3, 0.4, "gamma in (1/4,1/3]"), ("b", 0.4, 0.2, "gamma in [1/3,1/2)")] {
        c.push(format!("B2{tag}"), Theorem::B2, sub, gamma,
            Schedule::FixedBeta { beta_fixed: 1.0, k: 1.0, delta2: d2 }, Pattern::GAUSSIAN, 1.0 + d2,
            "2 gamma = 1 - D2, gamma in (1/4,1/2), k > 0");
    }
    for (tag, d2, sub) in [("a", 0.6, "D2 in (1/2,3/4)"), ("b", 0.8, "D2 >= 3/4")] {
        c.push(format!("B3{tag}"), Theorem::B3, sub, 0.25,
            Schedule::FixedBeta { beta_fixed: 1.0, k: 1.0, delta2: d2 }, Pattern::QUARTIC, 1.5,
            "gamma = 1/4, D2 > 1/2");
    }

    for k in [1.0, -1.0] {
        for b in [1.0, -1.0] {
            c.push(format!("C1.k{}b{}", sign(k), sign(b)), Theorem::C1, "gamma=1/6, D1=1/3, D2=2/3", sixth,
                Schedule::MovingBeta { b, k, delta1: third, delta2: 2.0 * third }, both(true, true, true),
                5.0 / 3.0, "gamma = 1/6, D1 = 1/3, D2 = 2/3");
        }
    }
    for (tag, gamma, d1, sub) in [
        ("a", 0.3, 0.05, "gamma in (1/4,1/3], D1 < 1-3gamma"),
        ("b", 0.3, 0.5, "gamma in (1/4,1/3], D1 >= 1-3gamma"),
        ("c", 0.4, 0.5, "gamma in [1/3,1/2)"),
    ] {
        let d2 = 1.0 - 2.0 * gamma;
        c.push(format!("C2{tag}"), Theorem::C2, sub, gamma,
            Schedule::MovingBeta { b: 1.0, k: 1.0, delta1: d1, delta2: d2 }, Pattern::GAUSSIAN, 1.0 + d2,
            "2 gamma = 1 - D2, gamma in (1/4,1/2), D1 > 0, k > 0");
    }
    for (tag, gamma, d1, sub) in [
        ("a", 0.19, 0.3, "gamma in (1/6,1/5], 1-4gamma < D1 < 2gamma"),
        ("b", 0.19, 0.5, "gamma in (1/6,1/5], D1 >= 2gamma"),
        ("c", 0.225, 0.2, "gamma in [1/5,1/4], 1-4gamma < D1 < 1-3gamma"),
        ("d", 0.225, 0.5, "gamma in [1/5,1/4], D1 >= 1-3gamma"),
    ] {
        let d2 = 1.0 - 2.0 * gamma;
        c.push(format!("C3{tag}"), Theorem::C3, sub, gamma,
            Schedule::MovingBeta { b: 1.0, k: 1.0, delta1: d1, delta2: d2 }, Pattern::GAUSSIAN, 1.0 + d2,
            "2 gamma = 1 - D2, gamma in (1/6,1/4], D2 in [1/2,2/3), D1 > 2 D2 - 1, k > 0");
    }
    for (tag, d1, d2, sub) in [
        ("a", 0.4, 0.8, "D1 in (1/3,1/2), D2 in (2/3,5/6), D1 <= D2-1/3"),
        ("b", 0.45, 0.75, "D1 in (1/3,1/2), D2 in (2/3,5/6), D1 > D2-1/3"),
        ("c", 0.4, 0.9, "D1 in (1/3,1/2), D2 >= 5/6"),
        ("d", 0.6, 0.75, "D1 >= 1/2, D2 in (2/3,5/6)"),
        ("e", 0.6, 0.9, "D1 >= 1/2, D2 >= 5/6"),
    ] {
        c.push(format!("C4{tag}"), Theorem::C4, sub, sixth,
            Schedule::MovingBeta { b: 1.0, k: 1.0, delta1: d1, delta2: d2 }, Pattern::SEXTIC, 5.0 / 3.0,
            "gamma = 1/6, D1 > 1/3, D2 > 2/3");
    }
    for (tag, gamma, d2, sub) in [
        ("a", 0.19, 0.7, "gamma in (1/6,1/5), D2 < 4gamma"),
        ("b", 0.19, 0.9, "gamma in (1/6,1/5), D2 >= 4gamma"),
        ("c", 0.225, 0.7, "gamma in [1/5,1/4), D2 < 1-gamma"),
        ("d", 0.225, 0.9, "gamma in [1/5,1/4), D2 >= 1-gamma"),
    ] {
        c.push(format!("C5{tag}"), Theorem::C5, sub, gamma,
            Schedule::MovingBeta { b: 1.0, k: 1.0, delta1: 1.0 - 4.0 * gamma, delta2: d2 }, Pattern::QUARTIC,
            2.0 - 2.0 * gamma, "4 gamma = 1 - D1, gamma in (1/6,1/4), 2 D2 > D1 + 1, b > 0");
    }
    for (tag, d2, sub) in [("a", 0.75, "D2 in (2/3,5/6)"), ("b", 0.9, "D2 >= 5/6")] {
        for b in [1.0, -1.0] {
            c.push(format!("C6{tag}.b{}", sign(b)), Theorem::C6, sub, sixth,
                Schedule::MovingBeta { b, k: 1.0, delta1: third, delta2: d2 }, both(false, true, true),
                5.0 / 3.0, "gamma = 1/6, D1 = 1/3, D2 > 2/3");
        }
    }
    for (tag, d1, sub) in [("a", 0.45, "D1 in (1/3,1/2)"), ("b", 0.6, "D1 >= 1/2")] {
        for k in [1.0, -1.0] {
            c.push(format!("C7{tag}.k{}", sign(k)), Theorem::C7, sub, sixth,
                Schedule::MovingBeta { b: 1.0, k, delta1: d1, delta2: 2.0 * third }, both(true, false, true),
                5.0 / 3.0, "gamma = 1/6, D1 > 1/3, D2 = 2/3");
        }
    }
    for (tag, gamma, sub) in [("a", 0.19, "gamma in (1/6,1/5]"), ("b", 0.225, "gamma in [1/5,1/4)")] {
        let d1 = 1.0 - 4.0 * gamma;
        let d2 = 0.5 * (d1 + 1.0);
        for k in [1.0, -1.0] {
            c.push(format!("C8{tag}.k{}", sign(k)), Theorem::C8, sub, gamma,
                Schedule::MovingBeta { b: 1.0, k, delta1: d1, delta2: d2 }, both(true, true, false), 1.0 + d2,
                "4 gamma = 1 - D1, gamma in (1/6,1/4), 2 D2 = D1 + 1, b > 0");
        }
    }
    c.out
}

pub fn find_case(id: &str) -> Result<CaseSpec> {
    case_catalog()
        .into_iter()
        .find(|c| c.id == id)
        .ok_or_else(|| BegError::InvalidCase { case: id.to_string(), reason: "unknown case id".into() })
}
