//! Output regulation of `z₁' = A₁z₁ + B_dC_dz₂ + B₁u` driven by the
//! exosystem `z₂' = A₂z₂`, with tracking error `y = C₁z₁ + C₂z₂` as the only
//! measurement.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::design::{
    check_cascade_observability, is_observable_pair, place_poles_observer, CascadeSystem, StateSpace, RANK_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, expm, rank, Lu};
use crate::matrix::Matrix;
use crate::sim::{SimConfig, Trajectory};
use crate::sylvester::{solve_sylvester, SylvesterProblem};

/// Exosystem eigenvalues may sit this far left of the imaginary axis.
const EXO_SPECTRUM_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RegulationProblem {
    pub a1: Matrix,
    pub b1: Matrix,
    pub bd: Matrix,
    pub c1: Matrix,
    pub a2: Matrix,
    pub cd: Matrix,
    pub c2: Matrix,
}

impl RegulationProblem {
    pub fn new(a1: Matrix, b1: Matrix, bd: Matrix, c1: Matrix, a2: Matrix, cd: Matrix, c2: Matrix) -> Result<Self> {
        let (n1, n2) = (a1.rows(), a2.rows());
        let ok = a1.is_square()
            && a2.is_square()
            && b1.rows() == n1
            && b1.cols() >= 1
            && bd.rows() == n1
            && cd.shape() == (bd.cols(), n2)
            && c1.shape() == (1, n1)
            && c2.shape() == (1, n2);
        if !ok {
            return Err(Error::dim(
                "RegulationProblem",
                format!(
                    "A1 {:?}, B1 {:?}, Bd {:?}, C1 {:?}, A2 {:?}, Cd {:?}, C2 {:?}",
                    a1.shape(),
                    b1.shape(),
                    bd.shape(),
                    c1.shape(),
                    a2.shape(),
                    cd.shape(),
                    c2.shape()
                ),
            ));
        }
        let m1 = eigenvalues(&a1)?.stability_margin;
        if !(m1 < 0.0) {
            return Err(Error::Input(format!("A1 must be Hurwitz, max real part is {m1:.4e}")));
        }
        let s2 = eigenvalues(&a2)?;
        if let Some(z) = s2.eigenvalues.iter().find(|z| z.re < -EXO_SPECTRUM_SLACK) {
            return Err(Error::Input(format!(
                "exosystem eigenvalue {:.4}{:+.4}i lies in the open left half-plane",
                z.re, z.im
            )));
        }
        Ok(RegulationProblem {
            a1,
            b1,
            bd,
            c1,
            a2,
            cd,
            c2,
        })
    }

    pub fn plant_order(&self) -> usize {
        self.a1.rows()
    }

    pub fn exo_order(&self) -> usize {
        self.a2.rows()
    }

    pub fn inputs(&self) -> usize {
        self.b1.cols()
    }

    /// `B_dC_d`.
    pub fn disturbance_coupling(&self) -> Matrix {
        &self.bd * &self.cd
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegulatorSolution {
    pub pi: Matrix,
    pub q: Matrix,
}

impl RegulatorSolution {
    /// Frobenius residuals of `A₁Π − ΠA₂ + B_dC_d − B₁Q` and `C₁Π + C₂`.
    pub fn residuals(&self, p: &RegulationProblem) -> (f64, f64) {
        let r1 = &(&(&(&p.a1 * &self.pi) - &(&self.pi * &p.a2)) + &p.disturbance_coupling()) - &(&p.b1 * &self.q);
        let r2 = &(&p.c1 * &self.pi) + &p.c2;
        (r1.norm_fro(), r2.norm_fro())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegulationGains {
    pub gamma: Matrix,
    pub k2: Matrix,
    pub k1: Matrix,
}

/// Linear map `(vec Π, vec Q) ↦ (vec(A₁Π − ΠA₂ − B₁Q), vec(C₁Π))`, column-major.
fn regulator_operator(p: &RegulationProblem) -> Matrix {
    let (n1, n2, m) = (p.plant_order(), p.exo_order(), p.inputs());
    let rows = n1 * n2 + n2;
    let cols = n1 * n2 + m * n2;
    let mut op = Matrix::zeros(rows, cols);
    // Π column j sits at unknowns j·n1 .. j·n1+n1, Q column j at n1·n2 + j·m
    for j in 0..n2 {
        for i in 0..n1 {
            let r = j * n1 + i;
            for k in 0..n1 {
                op[(r, j * n1 + k)] += p.a1[(i, k)];
            }
            for l in 0..n2 {
                op[(r, l * n1 + i)] -= p.a2[(l, j)];
            }
            for k in 0..m {
                op[(r, n1 * n2 + j * m + k)] -= p.b1[(i, k)];
            }
        }
        for k in 0..n1 {
            op[(n1 * n2 + j, j * n1 + k)] = p.c1[(0, k)];
        }
    }
    op
}

/// Solves the regulator equations jointly. With more inputs than outputs the
/// minimum-norm solution is returned.
pub fn solve_regulator_equations(p: &RegulationProblem) -> Result<RegulatorSolution> {
    let (n1, n2, m) = (p.plant_order(), p.exo_order(), p.inputs());
    let op = regulator_operator(p);
    let mut rhs = Vec::with_capacity(op.rows());
    let bdcd = p.disturbance_coupling();
    for j in 0..n2 {
        rhs.extend((0..n1).map(|i| -bdcd[(i, j)]));
    }
    rhs.extend((0..n2).map(|j| -p.c2[(0, j)]));

    let r = rank(&op.to_complex(), RANK_TOL)?;
    if r < op.rows() {
        return Err(Error::Unsolvable {
            reason: format!(
                "regulator equations are rank deficient ({r} < {}): (A1, B1, C1) has a \
                 transmission zero at an exosystem eigenvalue, so the regulation problem \
                 is unsolvable",
                op.rows()
            ),
            eigenvalue: None,
        });
    }
    let x = if op.is_square() {
        Lu::new(&op)?.solve_vec(&rhs)
    } else {
        let opt = op.transpose();
        let y = Lu::new(&(&op * &opt))?.solve_vec(&rhs);
        opt.mul_vec(&y)
    };
    let pi = Matrix::from_columns_vec(n1, n2, &x[..n1 * n2]);
    let q = Matrix::from_columns_vec(m, n2, &x[n1 * n2..]);
    let sol = RegulatorSolution { pi, q };
    let (r1, r2) = sol.residuals(p);
    let scale = 1.0 + op.norm_fro() * (sol.pi.norm_fro() + sol.q.norm_fro());
    if !(r1.max(r2) <= 1e-9 * scale) {
        return Err(Error::Numerical(format!(
            "regulator equations solved with residuals {r1:.3e}, {r2:.3e}"
        )));
    }
    Ok(sol)
}

/// `Γ` from `A₁Γ − ΓA₂ = B_dC_d`, `K₂` placing `σ(A₂ + K₂(C₁Γ − C₂))`,
/// and `K₁ = ΓK₂`. The regulator equations are not used.
pub fn design_regulation_observer(p: &RegulationProblem, exo_poles: &[Complex64]) -> Result<RegulationGains> {
    if let Some(z) = exo_poles.iter().find(|z| !(z.re < 0.0)) {
        return Err(Error::Input(format!(
            "observer pole {:.4}{:+.4}i is not in the open left half-plane",
            z.re, z.im
        )));
    }
    let gamma = solve_sylvester(&SylvesterProblem::new(
        p.a1.clone(),
        p.a2.clone(),
        p.disturbance_coupling(),
    )?)?;
    let h = &(&p.c1 * &gamma) - &p.c2;
    let k2 = place_poles_observer(&p.a2, &h, exo_poles).map_err(|e| match e {
        Error::Design(_) => Error::Design(
            "detection pair (A2, C1 Γ − C2) is not observable; the exosystem cannot be \
             reconstructed from the tracking error"
                .into(),
        ),
        other => other,
    })?;
    let k1 = &gamma * &k2;
    let g = RegulationGains { gamma, k2, k1 };
    let margin = eigenvalues(&observer_error_matrix(p, &g)?)?.stability_margin;
    if !(margin < 0.0) {
        return Err(Error::Design(format!(
            "observer error system is not Hurwitz (max real part {margin:.4e})"
        )));
    }
    Ok(g)
}

/// `[[A₁+K₁C₁, B_dC_d+K₁C₂], [−K₂C₁, A₂−K₂C₂]]`, the dynamics of
/// `(z₁−ẑ₁, z₂−ẑ₂)`.
pub fn observer_error_matrix(p: &RegulationProblem, g: &RegulationGains) -> Result<Matrix> {
    let (n1, n2) = (p.plant_order(), p.exo_order());
    if g.k1.shape() != (n1, 1) || g.k2.shape() != (n2, 1) {
        return Err(Error::dim(
            "observer_error_matrix",
            format!("K1 {:?}, K2 {:?}", g.k1.shape(), g.k2.shape()),
        ));
    }
    Matrix::block2(
        &(&p.a1 + &(&g.k1 * &p.c1)),
        &(&p.disturbance_coupling() + &(&g.k1 * &p.c2)),
        &(&g.k2 * &p.c1).scale(-1.0),
        &(&p.a2 - &(&g.k2 * &p.c2)),
    )
}

/// Cascade seen through `x₁ = z₁ − Πz₂`: sensor `(A₁, B₁, C₁)`, plant
/// `(A₂, 0, Q)`, interconnection `B₁Q`.
pub fn transform_to_cascade(p: &RegulationProblem, rs: &RegulatorSolution) -> Result<CascadeSystem> {
    let sensor = StateSpace::new(p.a1.clone(), p.b1.clone(), p.c1.clone())?;
    let plant = StateSpace::new(p.a2.clone(), Matrix::zeros(p.exo_order(), 1), rs.q.clone())?;
    CascadeSystem::new(sensor, plant)
}

/// Outcome of both observability tests on the same problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegulationObservability {
    /// `(A₂, C₁Γ − C₂)` observable.
    pub direct: bool,
    /// Factored cascade test on the transformed system; `None` when the
    /// regulator equations have no solution.
    pub cascade: Option<bool>,
}

impl RegulationObservability {
    pub fn agree(&self) -> bool {
        self.cascade.is_none_or(|c| c == self.direct)
    }
}

pub fn check_regulation_observability(p: &RegulationProblem) -> Result<RegulationObservability> {
    let gamma = solve_sylvester(&SylvesterProblem::new(
        p.a1.clone(),
        p.a2.clone(),
        p.disturbance_coupling(),
    )?)?;
    let direct = is_observable_pair(&p.a2, &(&(&p.c1 * &gamma) - &p.c2))?;
    let cascade = match solve_regulator_equations(p) {
        Ok(rs) => Some(check_cascade_observability(&transform_to_cascade(p, &rs)?)?),
        Err(Error::Unsolvable { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(RegulationObservability { direct, cascade })
}

/// Generator of `(z₁, z₂, ẑ₁, ẑ₂)` under observer feedback `u = −Qẑ₂`.
pub fn closed_loop_matrix(p: &RegulationProblem, rs: &RegulatorSolution, g: &RegulationGains) -> Result<Matrix> {
    let (n1, n2) = (p.plant_order(), p.exo_order());
    if rs.pi.shape() != (n1, n2) || rs.q.shape() != (p.inputs(), n2) {
        return Err(Error::dim(
            "closed_loop_matrix",
            format!("Π {:?}, Q {:?}", rs.pi.shape(), rs.q.shape()),
        ));
    }
    observer_error_matrix(p, g)?;
    let n = 2 * (n1 + n2);
    let mut m = Matrix::zeros(n, n);
    let (z1, z2, h1, h2) = (0, n1, n1 + n2, 2 * n1 + n2);
    let bdcd = p.disturbance_coupling();
    let b1q = &p.b1 * &rs.q;
    let k1c1 = &g.k1 * &p.c1;
    let k1c2 = &g.k1 * &p.c2;
    let k2c1 = &g.k2 * &p.c1;
    let k2c2 = &g.k2 * &p.c2;
    m.set_block(z1, z1, &p.a1);
    m.set_block(z1, z2, &bdcd);
    m.set_block(z1, h2, &b1q.scale(-1.0));
    m.set_block(z2, z2, &p.a2);
    m.set_block(h1, z1, &k1c1.scale(-1.0));
    m.set_block(h1, z2, &k1c2.scale(-1.0));
    m.set_block(h1, h1, &(&p.a1 + &k1c1));
    m.set_block(h1, h2, &(&(&bdcd + &k1c2) - &b1q));
    m.set_block(h2, z1, &k2c1);
    m.set_block(h2, z2, &k2c2);
    m.set_block(h2, h1, &k2c1.scale(-1.0));
    m.set_block(h2, h2, &(&p.a2 - &k2c2));
    Ok(m)
}

/// Initial data for the closed loop.
#[derive(Debug, Clone, PartialEq)]
pub struct RegulationInitial {
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    pub z1_hat: Vec<f64>,
    pub z2_hat: Vec<f64>,
}

/// Simulates plant, exosystem and observer under `u = −Qẑ₂`. The loop is
/// linear and autonomous, so each step applies the exact propagator
/// `e^{M·dt}`; the exosystem block is a pure rotation for harmonic
/// signals. Recorded series: `y`, `u_{i}`, `err_z1_2norm`, `err_z2_2norm`,
/// `err_observer_2norm`.
pub fn simulate_regulation_closed_loop(
    p: &RegulationProblem,
    rs: &RegulatorSolution,
    g: &RegulationGains,
    init: &RegulationInitial,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    if !(cfg.dt > 0.0) || !(cfg.t_end >= cfg.dt) || cfg.record_every == 0 {
        return Err(Error::Config(format!(
            "need dt > 0, T >= dt and record_every >= 1, got dt = {}, T = {}, record_every = {}",
            cfg.dt, cfg.t_end, cfg.record_every
        )));
    }
    let (n1, n2, m) = (p.plant_order(), p.exo_order(), p.inputs());
    if init.z1.len() != n1 || init.z1_hat.len() != n1 || init.z2.len() != n2 || init.z2_hat.len() != n2 {
        return Err(Error::dim(
            "simulate_regulation_closed_loop",
            format!("plant order {n1}, exosystem order {n2}"),
        ));
    }
    let gen = closed_loop_matrix(p, rs, g)?;
    let phi = expm(&gen, cfg.dt)?;
    // the exosystem block is exact by itself
    let phi_exo = expm(&p.a2, cfg.dt)?;

    let mut names: Vec<String> = vec!["y".into()];
    names.extend((1..=m).map(|i| format!("u_{i}")));
    names.extend(["err_z1_2norm", "err_z2_2norm", "err_observer_2norm"].map(Into::into));
    let mut traj = Trajectory::with_series(&names);
    let mut row = vec![0.0; names.len()];

    let mut x: Vec<f64> = init
        .z1
        .iter()
        .chain(&init.z2)
        .chain(&init.z1_hat)
        .chain(&init.z2_hat)
        .copied()
        .collect();
    let steps = cfg.steps();
    for k in 0..=steps {
        if k % cfg.record_every == 0 || k == steps {
            let (z1, rest) = x.split_at(n1);
            let (z2, rest) = rest.split_at(n2);
            let (h1, h2) = rest.split_at(n1);
            row[0] =
                (0..n1).map(|i| p.c1[(0, i)] * z1[i]).sum::<f64>() + (0..n2).map(|j| p.c2[(0, j)] * z2[j]).sum::<f64>();
            let u = rs.q.mul_vec(h2);
            for i in 0..m {
                row[1 + i] = -u[i];
            }
            let e1: f64 = z1.iter().zip(h1).map(|(a, b)| (a - b) * (a - b)).sum();
            let e2: f64 = z2.iter().zip(h2).map(|(a, b)| (a - b) * (a - b)).sum();
            row[m + 1] = libm::sqrt(e1);
            row[m + 2] = libm::sqrt(e2);
            row[m + 3] = libm::sqrt(e1 + e2);
            traj.push(k as f64 * cfg.dt, &row);
        }
        if k == steps {
            break;
        }
        let exo = phi_exo.mul_vec(&x[n1..n1 + n2]);
        x = phi.mul_vec(&x);
        x[n1..n1 + n2].copy_from_slice(&exo);
    }
    Ok(traj)
}
