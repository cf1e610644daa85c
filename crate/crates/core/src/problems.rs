//! Manufactured exact solutions on the unit square and cube.
//!
//! Both velocity fields are derived from stream functions: in 2D
//! `u = (∂₂ψ, −∂₁ψ)`, in 3D `u = curl Ψ`, so `∇·u = 0` holds identically.
//! Every stream-function component has the separable form
//!
//! ```text
//! c · f₁(x₁) f₂(x₂) f₃(x₃) · sin(π(ℓ·x + t)),   f_i ∈ {1, sin(πx), sin²(πx)}
//! ```
//!
//! and any mixed derivative is evaluated exactly with the Leibniz rule from
//! closed-form univariate derivatives. The forcing follows from
//! `f = ∂ₜu + (u·∇)u − νΔu + ∇p`, which relies on `∇·u = 0`.

use std::f64::consts::PI;

use crate::{Error, Gradient, Point, Result};

/// Highest spatial derivative order needed (Δu of a curl is third order).
const MAX_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Factor {
    One,
    Sin,
    SinSq,
}

impl Factor {
    /// `d^k/dx^k` of the factor, for `k = 0..=MAX_ORDER`.
    fn derivatives(self, x: f64) -> [f64; MAX_ORDER + 1] {
        let mut out = [0.0; MAX_ORDER + 1];
        match self {
            Factor::One => out[0] = 1.0,
            Factor::Sin => {
                let (s, c) = (PI * x).sin_cos();
                // sin(θ + kπ/2) cycles through s, c, −s, −c
                let cyc = [s, c, -s, -c];
                let mut pk = 1.0;
                for (k, o) in out.iter_mut().enumerate() {
                    *o = pk * cyc[k % 4];
                    pk *= PI;
                }
            }
            Factor::SinSq => {
                let s = (PI * x).sin();
                out[0] = s * s;
                // sin² = (1 − cos 2θ)/2
                let (s2, c2) = (2.0 * PI * x).sin_cos();
                let cyc = [c2, -s2, -c2, s2];
                let mut pk = 2.0 * PI;
                for (k, o) in out.iter_mut().enumerate().skip(1) {
                    *o = -0.5 * pk * cyc[k % 4];
                    pk *= 2.0 * PI;
                }
            }
        }
        out
    }
}

/// `c · Π f_i(x_i) · sin(π(ℓ·x + t))`.
#[derive(Debug, Clone, Copy)]
struct SeparableWave {
    coef: f64,
    factors: [Factor; 3],
    wave: [f64; 3],
}

/// All derivatives of a [`SeparableWave`] at one point.
struct Jet {
    coef: f64,
    wave: [f64; 3],
    factor: [[f64; MAX_ORDER + 1]; 3],
    carrier: [f64; MAX_ORDER + 2],
}

impl SeparableWave {
    fn jet(&self, x: &Point, t: f64) -> Jet {
        let phase = PI * (self.wave[0] * x[0] + self.wave[1] * x[1] + self.wave[2] * x[2] + t);
        let (s, c) = phase.sin_cos();
        let cyc = [s, c, -s, -c];
        let mut carrier = [0.0; MAX_ORDER + 2];
        let mut pk = 1.0;
        for (k, o) in carrier.iter_mut().enumerate() {
            *o = pk * cyc[k % 4];
            pk *= PI;
        }
        Jet {
            coef: self.coef,
            wave: self.wave,
            factor: [
                self.factors[0].derivatives(x[0]),
                self.factors[1].derivatives(x[1]),
                self.factors[2].derivatives(x[2]),
            ],
            carrier,
        }
    }
}

const BINOM: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0],
    [1.0, 3.0, 3.0, 1.0],
];

impl Jet {
    /// `∂^α ∂_t^{at}` by the Leibniz rule.
    fn derivative(&self, alpha: [usize; 3], at: usize) -> f64 {
        let mut total = 0.0;
        for k0 in 0..=alpha[0] {
            for k1 in 0..=alpha[1] {
                for k2 in 0..=alpha[2] {
                    let mut c = BINOM[alpha[0]][k0]
                        * BINOM[alpha[1]][k1]
                        * BINOM[alpha[2]][k2]
                        * self.factor[0][k0]
                        * self.factor[1][k1]
                        * self.factor[2][k2];
                    if c == 0.0 {
                        continue;
                    }
                    let rest = [alpha[0] - k0, alpha[1] - k1, alpha[2] - k2];
                    for i in 0..3 {
                        c *= self.wave[i].powi(rest[i] as i32);
                    }
                    total += c * self.carrier[rest[0] + rest[1] + rest[2] + at];
                }
            }
        }
        self.coef * total
    }
}

/// One signed stream-function derivative contributing to a velocity
/// component: `sign · ∂_axis Ψ_term`.
#[derive(Debug, Clone, Copy)]
struct CurlPart {
    sign: f64,
    term: usize,
    axis: usize,
}

/// Everything the assembly and error code need from the exact solution at
/// one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactState {
    pub velocity: [f64; 3],
    pub gradient: Gradient,
    pub time_derivative: [f64; 3],
    pub laplacian: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct ManufacturedProblem {
    dim: usize,
    nu: f64,
    stream: Vec<SeparableWave>,
    curl: [Vec<CurlPart>; 3],
    pressure_wave: [f64; 3],
}

impl ManufacturedProblem {
    pub fn new(dim: usize, nu: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::Config(format!("viscosity must be positive, got {nu}")));
        }
        use Factor::*;
        match dim {
            2 => {
                let psi = SeparableWave {
                    coef: 3f64.sqrt() / (2.0 * PI),
                    factors: [SinSq, SinSq, One],
                    wave: [1.0, 1.0, 0.0],
                };
                let part = |sign, axis| CurlPart { sign, term: 0, axis };
                Ok(ManufacturedProblem {
                    dim,
                    nu,
                    stream: vec![psi],
                    curl: [vec![part(1.0, 1)], vec![part(-1.0, 0)], vec![]],
                    pressure_wave: [1.0, 2.0, 0.0],
                })
            }
            3 => {
                let coef = 8.0 * 3f64.sqrt() / (27.0 * PI);
                let stream = vec![
                    SeparableWave {
                        coef,
                        factors: [Sin, SinSq, SinSq],
                        wave: [0.0, 1.0, 1.0],
                    },
                    SeparableWave {
                        coef,
                        factors: [SinSq, Sin, SinSq],
                        wave: [1.0, 0.0, 1.0],
                    },
                    SeparableWave {
                        coef,
                        factors: [SinSq, SinSq, Sin],
                        wave: [1.0, 1.0, 0.0],
                    },
                ];
                let p = |sign, term, axis| CurlPart { sign, term, axis };
                // curl Ψ = (∂₂Ψ₃ − ∂₃Ψ₂, ∂₃Ψ₁ − ∂₁Ψ₃, ∂₁Ψ₂ − ∂₂Ψ₁)
                Ok(ManufacturedProblem {
                    dim,
                    nu,
                    stream,
                    curl: [
                        vec![p(1.0, 2, 1), p(-1.0, 1, 2)],
                        vec![p(1.0, 0, 2), p(-1.0, 2, 0)],
                        vec![p(1.0, 1, 0), p(-1.0, 0, 1)],
                    ],
                    pressure_wave: [1.0, 2.0, 1.0],
                })
            }
            _ => Err(Error::Dimension(dim)),
        }
    }

    /// Looks a problem up by its configuration name (`mms2d`, `mms3d`).
    pub fn by_name(name: &str, nu: f64) -> Result<Self> {
        match name {
            "mms2d" => Self::new(2, nu),
            "mms3d" => Self::new(3, nu),
            other => Err(Error::Config(format!("unknown problem '{other}'"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    fn jets(&self, x: &Point, t: f64) -> Vec<Jet> {
        self.stream.iter().map(|s| s.jet(x, t)).collect()
    }

    fn velocity_derivative(&self, jets: &[Jet], comp: usize, alpha: [usize; 3], at: usize) -> f64 {
        self.curl[comp]
            .iter()
            .map(|p| {
                let mut a = alpha;
                a[p.axis] += 1;
                p.sign * jets[p.term].derivative(a, at)
            })
            .sum()
    }

    pub fn velocity(&self, x: &Point, t: f64) -> [f64; 3] {
        let jets = self.jets(x, t);
        let mut u = [0.0; 3];
        for (c, uc) in u.iter_mut().enumerate().take(self.dim) {
            *uc = self.velocity_derivative(&jets, c, [0; 3], 0);
        }
        u
    }

    /// `grad[i][j] = ∂u_i/∂x_j`.
    pub fn velocity_gradient(&self, x: &Point, t: f64) -> Gradient {
        self.state(x, t).gradient
    }

    /// Velocity with its first space/time derivatives and Laplacian.
    pub fn state(&self, x: &Point, t: f64) -> ExactState {
        let d = self.dim;
        let jets = self.jets(x, t);
        let mut st = ExactState {
            velocity: [0.0; 3],
            gradient: [[0.0; 3]; 3],
            time_derivative: [0.0; 3],
            laplacian: [0.0; 3],
        };
        for c in 0..d {
            st.velocity[c] = self.velocity_derivative(&jets, c, [0; 3], 0);
            st.time_derivative[c] = self.velocity_derivative(&jets, c, [0; 3], 1);
            for j in 0..d {
                let mut a = [0; 3];
                a[j] = 1;
                st.gradient[c][j] = self.velocity_derivative(&jets, c, a, 0);
                a[j] = 2;
                st.laplacian[c] += self.velocity_derivative(&jets, c, a, 0);
            }
        }
        st
    }

    pub fn pressure(&self, x: &Point, t: f64) -> f64 {
        (PI * (self.phase(x) + t)).sin()
    }

    pub fn pressure_gradient(&self, x: &Point, t: f64) -> [f64; 3] {
        let c = PI * (PI * (self.phase(x) + t)).cos();
        [
            c * self.pressure_wave[0],
            c * self.pressure_wave[1],
            c * self.pressure_wave[2],
        ]
    }

    fn phase(&self, x: &Point) -> f64 {
        self.pressure_wave[0] * x[0] + self.pressure_wave[1] * x[1] + self.pressure_wave[2] * x[2]
    }

    /// `f = ∂ₜu + (u·∇)u − νΔu + ∇p`.
    pub fn forcing(&self, x: &Point, t: f64) -> [f64; 3] {
        let st = self.state(x, t);
        let gp = self.pressure_gradient(x, t);
        let mut f = [0.0; 3];
        for i in 0..self.dim {
            let conv: f64 = (0..self.dim).map(|j| st.velocity[j] * st.gradient[i][j]).sum();
            f[i] = st.time_derivative[i] + conv - self.nu * st.laplacian[i] + gp[i];
        }
        f
    }

    /// Initial velocity `u⁰ = u(·, 0)`.
    pub fn initial_velocity(&self, x: &Point) -> [f64; 3] {
        self.velocity(x, 0.0)
    }
}

/// Data the time loop needs from a problem with known solution.
pub trait FlowProblem: Sync {
    fn dim(&self) -> usize;
    fn velocity(&self, x: &Point, t: f64) -> [f64; 3];
    fn velocity_gradient(&self, x: &Point, t: f64) -> Gradient;
    fn pressure(&self, x: &Point, t: f64) -> f64;
    fn forcing(&self, x: &Point, t: f64) -> [f64; 3];
}

impl FlowProblem for ManufacturedProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn velocity(&self, x: &Point, t: f64) -> [f64; 3] {
        ManufacturedProblem::velocity(self, x, t)
    }

    fn velocity_gradient(&self, x: &Point, t: f64) -> Gradient {
        ManufacturedProblem::velocity_gradient(self, x, t)
    }

    fn pressure(&self, x: &Point, t: f64) -> f64 {
        ManufacturedProblem::pressure(self, x, t)
    }

    fn forcing(&self, x: &Point, t: f64) -> [f64; 3] {
        ManufacturedProblem::forcing(self, x, t)
    }
}
