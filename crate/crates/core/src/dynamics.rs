//! Hamiltonians of the dispersive qubit-cavity system, deterministic Lindblad
//! evolution, and the diffusive stochastic master equation (SME) for
//! continuous `σ_z` monitoring.
//!
//! Units: `ħ = 1`, all frequencies angular. The measured observable is always
//! `σ_z` on factor 0 (the qubit), and the record increment is
//! `dV = √(2ηΓ_m)⟨σ_z⟩dt + dW`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::quantum::{
    annihilation, hermitian_eigenvalues, number, sigma_y, sigma_z, trace_of_product, CMatrix,
    DensityMatrix, HilbertSpace, Operator, Tensor, C64, I,
};

/// Largest allowed `dt · max(rate, ‖H‖)`.
pub const MAX_STEP_PRODUCT: f64 = 0.1;
/// States whose smallest eigenvalue drops below this abort the trajectory.
pub const POSITIVITY_ABORT: f64 = -1e-6;

/// Frame in which [`HamiltonianSpec::build`] writes the Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Frame {
    /// Bare dispersive Hamiltonian, no drives.
    #[default]
    Lab,
    /// Rotating at the qubit drive frequency.
    QubitDrive,
    /// Rotating at the cavity drive frequency.
    CavityDrive,
}

/// Parameters of the dispersive and driven Hamiltonians.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub qubit_freq: f64,
    pub cavity_freq: f64,
    /// Dispersive shift, `≥ 0`.
    pub chi: f64,
    /// Qubit drive detuning.
    pub qubit_detuning: f64,
    /// Cavity drive detuning.
    pub cavity_detuning: f64,
    /// Coefficient of `σ_y` in the driven-qubit Hamiltonian.
    pub qubit_drive: f64,
    /// Cavity drive amplitude.
    pub cavity_drive: f64,
    /// Phase of the cavity drive: the term is `Ω_c(e^{iφ}a† + e^{−iφ}a)`.
    pub cavity_drive_phase: f64,
    pub frame: Frame,
}

impl Default for HamiltonianSpec {
    fn default() -> Self {
        Self {
            qubit_freq: 1.0,
            cavity_freq: 1.0,
            chi: 0.0,
            qubit_detuning: 0.0,
            cavity_detuning: 0.0,
            qubit_drive: 0.0,
            cavity_drive: 0.0,
            cavity_drive_phase: 0.0,
            frame: Frame::Lab,
        }
    }
}

impl HamiltonianSpec {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("qubit_freq", self.qubit_freq),
            ("cavity_freq", self.cavity_freq),
            ("chi", self.chi),
            ("qubit_detuning", self.qubit_detuning),
            ("cavity_detuning", self.cavity_detuning),
            ("qubit_drive", self.qubit_drive),
            ("cavity_drive", self.cavity_drive),
            ("cavity_drive_phase", self.cavity_drive_phase),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(invalid(name, format!("{v} is not finite")));
            }
        }
        if self.chi < 0.0 {
            return Err(invalid("chi", format!("{} must be >= 0", self.chi)));
        }
        Ok(())
    }

    /// Hamiltonian for `self.frame`.
    pub fn build(&self, n_cav: usize) -> Result<Operator> {
        match self.frame {
            Frame::Lab => build_dispersive(self, n_cav),
            Frame::QubitDrive => build_driven_qubit(self, n_cav),
            Frame::CavityDrive => build_driven_cavity(self, n_cav),
        }
    }
}

fn qubit_cavity_parts(n_cav: usize) -> Result<(HilbertSpace, Operator, Operator, Operator)> {
    let space = HilbertSpace::qubit_cavity(n_cav)?;
    let sz = sigma_z().embed(&space, 0)?;
    let a = annihilation(n_cav)?.embed(&space, 1)?;
    let n = number(n_cav)?.embed(&space, 1)?;
    Ok((space, sz, a, n))
}

/// `ω_q σ_z/2 + ω_c a†a − (χ/2) a†a σ_z` on qubit ⊗ cavity.
pub fn build_dispersive(spec: &HamiltonianSpec, n_cav: usize) -> Result<Operator> {
    spec.validate()?;
    let (_, sz, _, n) = qubit_cavity_parts(n_cav)?;
    let h = &(&sz.scale_real(0.5 * spec.qubit_freq) + &n.scale_real(spec.cavity_freq))
        - &(&n * &sz).scale_real(0.5 * spec.chi);
    Ok(h)
}

/// `½(δ − χ a†a)σ_z + Ω σ_y` in the frame of the qubit drive.
pub fn build_driven_qubit(spec: &HamiltonianSpec, n_cav: usize) -> Result<Operator> {
    spec.validate()?;
    let (space, sz, _, n) = qubit_cavity_parts(n_cav)?;
    let detuning =
        &Operator::identity(&space).scale_real(spec.qubit_detuning) - &n.scale_real(spec.chi);
    let sy = sigma_y().embed(&space, 0)?;
    Ok(&(&detuning * &sz).scale_real(0.5) + &sy.scale_real(spec.qubit_drive))
}

/// `(Δ − χσ_z/2) a†a + Ω_c(e^{iφ}a† + e^{−iφ}a)` in the frame of the cavity drive.
pub fn build_driven_cavity(spec: &HamiltonianSpec, n_cav: usize) -> Result<Operator> {
    spec.validate()?;
    let (space, sz, a, n) = qubit_cavity_parts(n_cav)?;
    let shift = &Operator::identity(&space).scale_real(spec.cavity_detuning)
        - &sz.scale_real(0.5 * spec.chi);
    let phase = C64::from_polar(spec.cavity_drive, spec.cavity_drive_phase);
    let drive = &a.dagger().scale(phase) + &a.scale(phase.conj());
    Ok(&(&shift * &n) + &drive)
}

/// Qubit-only driven Hamiltonian `½δσ_z + Ωσ_y` (the cavity-free sector of
/// [`build_driven_qubit`]).
pub fn driven_qubit_hamiltonian(detuning: f64, drive: f64) -> Operator {
    &sigma_z().scale_real(0.5 * detuning) + &sigma_y().scale_real(drive)
}

/// Measurement rate `κ|α_e − α_g|²/2`.
pub fn measurement_rate(kappa: f64, alpha_g: C64, alpha_e: C64) -> Result<f64> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(invalid("kappa", format!("{kappa} must be finite and >= 0")));
    }
    Ok(0.5 * kappa * (alpha_e - alpha_g).norm_sqr())
}

/// Jump operator with a rate; the dissipator is `rate · D[operator]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladChannel {
    pub rate: f64,
    pub operator: Operator,
}

impl LindbladChannel {
    pub fn new(rate: f64, operator: Operator) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(invalid("rate", format!("{rate} must be finite and >= 0")));
        }
        Ok(Self { rate, operator })
    }

    /// Qubit dephasing `(Γ_m/2) D[σ_z]`, the unconditional effect of monitoring.
    pub fn measurement_dephasing(gamma_m: f64, space: &HilbertSpace) -> Result<Self> {
        Self::new(0.5 * gamma_m, sigma_z().embed(space, 0)?)
    }

    /// Qubit decay `γ_a D[σ_−]`.
    pub fn qubit_decay(gamma_a: f64, space: &HilbertSpace) -> Result<Self> {
        Self::new(gamma_a, crate::quantum::sigma_minus().embed(space, 0)?)
    }

    fn scaled(&self) -> CMatrix {
        self.operator.matrix() * C64::new(self.rate.sqrt(), 0.0)
    }
}

fn check_space(space: &HilbertSpace, op: &Operator) -> Result<()> {
    if op.space().dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: op.space().dim(),
        });
    }
    Ok(())
}

fn check_step(dt: f64, rates: impl IntoIterator<Item = f64>, h: &Operator) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", format!("{dt} must be finite and > 0")));
    }
    let scale = rates.into_iter().fold(h.hermitian_norm(), f64::max);
    if dt * scale > MAX_STEP_PRODUCT {
        return Err(Error::StepTooLarge(dt * scale));
    }
    Ok(())
}

/// Number of steps of size `dt` in `duration`, failing when they do not fit.
pub fn step_count(duration: f64, dt: f64) -> Result<usize> {
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(invalid(
            "duration",
            format!("{duration} must be finite and >= 0"),
        ));
    }
    let n = (duration / dt).round();
    if (n * dt - duration).abs() > 1e-9 * duration.max(1.0) {
        return Err(Error::NonIntegerSteps { duration, dt });
    }
    Ok(n as usize)
}

/// Time-stepping scheme for deterministic Lindblad evolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LindbladScheme {
    /// `ρ + dt·L(ρ)`.
    Euler,
    /// Classical fourth-order Runge–Kutta on `L`.
    #[default]
    RungeKutta4,
}

/// Precomputed Lindblad generator `L(ρ) = −i[H,ρ] + Σ D[c_k]ρ`.
#[derive(Clone, Debug)]
pub struct LindbladIntegrator {
    space: HilbertSpace,
    /// `−iH − ½Σc†c`, so that `L(ρ) = Kρ + ρK† + Σ cρc†`.
    k: CMatrix,
    jumps: Vec<CMatrix>,
    dt: f64,
    scheme: LindbladScheme,
}

impl LindbladIntegrator {
    pub fn new(
        h: &Operator,
        channels: &[LindbladChannel],
        dt: f64,
        scheme: LindbladScheme,
    ) -> Result<Self> {
        let space = h.space().clone();
        for ch in channels {
            check_space(&space, &ch.operator)?;
        }
        check_step(dt, channels.iter().map(|c| c.rate), h)?;
        let jumps: Vec<CMatrix> = channels.iter().map(LindbladChannel::scaled).collect();
        let mut k = h.matrix() * -I;
        for c in &jumps {
            k -= c.adjoint() * c * C64::new(0.5, 0.0);
        }
        Ok(Self {
            space,
            k,
            jumps,
            dt,
            scheme,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn generator(&self, rho: &CMatrix) -> CMatrix {
        let kr = &self.k * rho;
        let mut out = &kr + kr.adjoint();
        for c in &self.jumps {
            out += c * rho * c.adjoint();
        }
        out
    }

    /// One step, Hermitized and renormalized.
    pub fn step(&self, rho: &DensityMatrix) -> DensityMatrix {
        let r = rho.matrix();
        let dt = C64::new(self.dt, 0.0);
        let next = match self.scheme {
            LindbladScheme::Euler => r + self.generator(r) * dt,
            LindbladScheme::RungeKutta4 => {
                let half = C64::new(0.5 * self.dt, 0.0);
                let k1 = self.generator(r);
                let k2 = self.generator(&(r + &k1 * half));
                let k3 = self.generator(&(r + &k2 * half));
                let k4 = self.generator(&(r + &k3 * dt));
                r + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(self.dt / 6.0, 0.0)
            }
        };
        DensityMatrix::from_raw_normalized(self.space.clone(), next)
    }

    /// States at `0, dt, ..., n·dt` (length `n + 1`).
    pub fn evolve(&self, rho0: &DensityMatrix, steps: usize) -> Result<Vec<DensityMatrix>> {
        if rho0.space().dim() != self.space.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                got: rho0.space().dim(),
            });
        }
        let mut out = Vec::with_capacity(steps + 1);
        out.push(rho0.clone());
        for _ in 0..steps {
            let next = self.step(out.last().expect("nonempty"));
            out.push(next);
        }
        Ok(out)
    }
}

/// One Lindblad step with the default scheme. Repeated stepping should build
/// a [`LindbladIntegrator`] once instead.
pub fn lindblad_step(
    rho: &DensityMatrix,
    h: &Operator,
    channels: &[LindbladChannel],
    dt: f64,
) -> Result<DensityMatrix> {
    check_space(rho.space(), h)?;
    Ok(LindbladIntegrator::new(h, channels, dt, LindbladScheme::default())?.step(rho))
}

/// Discretization of the stochastic master equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SmeScheme {
    /// Plain Euler–Maruyama, Hermitized only.
    EulerMaruyama,
    /// Euler–Maruyama followed by Hermitization and trace renormalization.
    NormalizedEuler,
    /// First-order Kraus-form step `M ρ M† + (1−η)dt cρc† + dt Σ LρL†`,
    /// normalized. Positivity-preserving and exactly purity-preserving at η = 1.
    Kraus,
    /// Symmetric splitting: half a step of drive and extra channels, an exact
    /// Gaussian measurement of `σ_z` over `dt` with the record drawn from its
    /// Born distribution, then another half step. The ensemble-averaged map
    /// is second-order accurate; positivity and (at η = 1) purity are exact.
    #[default]
    GaussianSplit,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmeConfig {
    pub dt: f64,
    pub eta: f64,
    pub gamma_m: f64,
    pub seed: u64,
    pub scheme: SmeScheme,
}

impl SmeConfig {
    pub fn new(dt: f64, eta: f64, gamma_m: f64, seed: u64) -> Result<Self> {
        let cfg = Self {
            dt,
            eta,
            gamma_m,
            seed,
            scheme: SmeScheme::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_scheme(mut self, scheme: SmeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("{} must be finite and > 0", self.dt)));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(invalid("eta", format!("{} must lie in [0, 1]", self.eta)));
        }
        if !(self.gamma_m >= 0.0 && self.gamma_m.is_finite()) {
            return Err(invalid(
                "gamma_m",
                format!("{} must be finite and >= 0", self.gamma_m),
            ));
        }
        Ok(())
    }

    /// `√(2ηΓ_m)`, the record's signal gain on `⟨σ_z⟩`.
    pub fn record_gain(&self) -> f64 {
        (2.0 * self.eta * self.gamma_m).sqrt()
    }
}

/// Stochastic integrator for one Hamiltonian, measurement config and set of
/// extra channels. Cheap to clone; holds no RNG.
#[derive(Clone, Debug)]
pub struct SmeIntegrator {
    space: HilbertSpace,
    cfg: SmeConfig,
    h: CMatrix,
    sz: CMatrix,
    /// `√(Γ_m/2) σ_z`
    meas: CMatrix,
    extra: Vec<CMatrix>,
    /// No-jump part `I − (iH + ½c†c + ½ΣL†L)dt` of the Kraus operator.
    kraus_drift: CMatrix,
    /// `−iH − ½c†c − ½ΣL†L`, the non-Hermitian generator for Euler schemes.
    k: CMatrix,
    /// `σ_z` eigenvalue of each basis state.
    levels: Vec<f64>,
    /// Exact dephasing factors of the unmonitored `(1 − η)` share over `dt`.
    unmonitored: CMatrix,
    half_step: HalfStep,
}

/// Drive and extra channels over `dt/2`.
#[derive(Clone, Debug)]
enum HalfStep {
    /// Column-stacked propagator `exp(L dt/2)`.
    Propagator(CMatrix),
    /// Too large for a dense propagator.
    RungeKutta(LindbladIntegrator),
}

/// Largest dimension for which the half-step propagator is stored densely.
const DENSE_PROPAGATOR_DIM: usize = 8;

impl HalfStep {
    fn new(h: &Operator, extra: &[LindbladChannel], dt: f64) -> Result<Self> {
        let d = h.space().dim();
        if d > DENSE_PROPAGATOR_DIM {
            return Ok(HalfStep::RungeKutta(LindbladIntegrator::new(
                h,
                extra,
                0.5 * dt,
                LindbladScheme::RungeKutta4,
            )?));
        }
        let id = CMatrix::identity(d, d);
        let hm = h.matrix();
        let mut l = (id.kronecker(hm) - hm.transpose().kronecker(&id)) * -I;
        for c in extra.iter().map(LindbladChannel::scaled) {
            let cdc = c.adjoint() * &c;
            l += c.conjugate().kronecker(&c);
            l -= (id.kronecker(&cdc) + cdc.transpose().kronecker(&id)) * C64::new(0.5, 0.0);
        }
        Ok(HalfStep::Propagator((l * C64::new(0.5 * dt, 0.0)).exp()))
    }

    fn apply(&self, space: &HilbertSpace, rho: &CMatrix) -> CMatrix {
        match self {
            HalfStep::Propagator(p) => {
                let d = rho.nrows();
                // nalgebra storage is column-major, i.e. already column-stacked
                let v = p * nalgebra::DVector::from_column_slice(rho.as_slice());
                CMatrix::from_column_slice(d, d, v.as_slice())
            }
            HalfStep::RungeKutta(integ) => integ
                .step(&DensityMatrix::from_raw(space.clone(), rho.clone()))
                .matrix()
                .clone(),
        }
    }
}

fn normal_tail(x: f64, upper: bool) -> f64 {
    let x = if upper { x } else { -x };
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

impl SmeIntegrator {
    pub fn new(h: &Operator, cfg: SmeConfig, extra_channels: &[LindbladChannel]) -> Result<Self> {
        cfg.validate()?;
        let space = h.space().clone();
        for ch in extra_channels {
            check_space(&space, &ch.operator)?;
        }
        check_step(
            cfg.dt,
            extra_channels.iter().map(|c| c.rate).chain([cfg.gamma_m]),
            h,
        )?;
        let sz = monitored_sigma_z(&space)?;
        let meas = &sz * C64::new((0.5 * cfg.gamma_m).sqrt(), 0.0);
        let extra: Vec<CMatrix> = extra_channels.iter().map(LindbladChannel::scaled).collect();
        let mut k = h.matrix() * -I - meas.adjoint() * &meas * C64::new(0.5, 0.0);
        for c in &extra {
            k -= c.adjoint() * c * C64::new(0.5, 0.0);
        }
        let d = space.dim();
        let kraus_drift = CMatrix::identity(d, d) + &k * C64::new(cfg.dt, 0.0);
        let levels: Vec<f64> = (0..d).map(|j| sz[(j, j)].re).collect();
        let rate = 0.25 * (1.0 - cfg.eta) * cfg.gamma_m * cfg.dt;
        let unmonitored = CMatrix::from_fn(d, d, |j, k| {
            C64::new((-rate * (levels[j] - levels[k]).powi(2)).exp(), 0.0)
        });
        let half_step = HalfStep::new(h, extra_channels, cfg.dt)?;
        Ok(Self {
            space,
            cfg,
            h: h.matrix().clone(),
            sz,
            meas,
            extra,
            kraus_drift,
            k,
            levels,
            unmonitored,
            half_step,
        })
    }

    pub fn config(&self) -> &SmeConfig {
        &self.cfg
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.h
    }

    /// `⟨σ_z⟩` of the monitored qubit.
    pub fn sigma_z_mean(&self, rho: &DensityMatrix) -> f64 {
        trace_of_product(rho.matrix(), &self.sz).re
    }

    /// Advance with a Wiener increment `dw ~ N(0, dt)` drawn by the caller.
    /// Returns the new state, the record increment, and the trace drift
    /// removed by renormalization.
    ///
    /// Under [`SmeScheme::GaussianSplit`] the record is the quantile of its
    /// Born distribution at the level `Φ(dw/√dt)`, which reduces to
    /// `√(2ηΓ_m)⟨σ_z⟩dt + dw` up to `O(dt^{3/2})`.
    pub fn step(&self, rho: &DensityMatrix, dw: f64) -> (DensityMatrix, f64, f64) {
        if self.cfg.scheme == SmeScheme::GaussianSplit {
            let mid = self.half_step.apply(&self.space, rho.matrix());
            let dv = self.born_record(&mid, dw);
            return (self.split_finish(mid, dv), dv, 0.0);
        }
        let dv = self.cfg.record_gain() * self.sigma_z_mean(rho) * self.cfg.dt + dw;
        let (next, drift) = self.update(rho, dv, dw);
        (next, dv, drift)
    }

    /// Update a filter state with an externally generated record increment.
    pub fn filter(&self, rho: &DensityMatrix, dv: f64) -> (DensityMatrix, f64) {
        if self.cfg.scheme == SmeScheme::GaussianSplit {
            let mid = self.half_step.apply(&self.space, rho.matrix());
            return (self.split_finish(mid, dv), 0.0);
        }
        let innovation = dv - self.cfg.record_gain() * self.sigma_z_mean(rho) * self.cfg.dt;
        self.update(rho, dv, innovation)
    }

    /// Measurement with record `dv` followed by the second half step.
    fn split_finish(&self, mut mid: CMatrix, dv: f64) -> DensityMatrix {
        let dt = self.cfg.dt;
        let shift = self.cfg.record_gain() * dt;
        // Kraus operator diag(exp(−(dv − shift·λ_j)²/4dt)), scaled by its largest entry
        let logw: Vec<f64> = self
            .levels
            .iter()
            .map(|l| -(dv - shift * l).powi(2) / (4.0 * dt))
            .collect();
        let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logw.iter().map(|x| (x - top).exp()).collect();
        for k in 0..mid.ncols() {
            for j in 0..mid.nrows() {
                mid[(j, k)] *= self.unmonitored[(j, k)] * (w[j] * w[k]);
            }
        }
        let out = self.half_step.apply(&self.space, &mid);
        DensityMatrix::from_raw_normalized(self.space.clone(), out)
    }

    /// Quantile of the record distribution `Σ_j p_j N(shift·λ_j, dt)` at the
    /// level the Wiener increment `dw` has under `N(0, dt)`.
    fn born_record(&self, rho: &CMatrix, dw: f64) -> f64 {
        let dt = self.cfg.dt;
        let sd = dt.sqrt();
        let shift = self.cfg.record_gain() * dt;
        let mut p_up = 0.0;
        for (j, l) in self.levels.iter().enumerate() {
            if *l > 0.0 {
                p_up += rho[(j, j)].re;
            }
        }
        let p_up = p_up.clamp(0.0, 1.0);
        let mut v = shift * (2.0 * p_up - 1.0) + dw;
        if shift == 0.0 {
            return v;
        }
        // solve in whichever tail is smaller to keep precision
        let upper = dw > 0.0;
        let target = normal_tail(dw / sd, upper);
        for _ in 0..50 {
            let (a, b) = ((v - shift) / sd, (v + shift) / sd);
            let tail = p_up * normal_tail(a, upper) + (1.0 - p_up) * normal_tail(b, upper);
            let density = (p_up * normal_pdf(a) + (1.0 - p_up) * normal_pdf(b)) / sd;
            if density <= 0.0 || !density.is_finite() {
                break;
            }
            let delta = if upper {
                (tail - target) / density
            } else {
                (target - tail) / density
            };
            v += delta;
            if delta.abs() <= 1e-14 * sd {
                break;
            }
        }
        v
    }

    fn update(&self, rho: &DensityMatrix, dv: f64, innovation: f64) -> (DensityMatrix, f64) {
        let r = rho.matrix();
        let dt = self.cfg.dt;
        let eta = self.cfg.eta;
        let raw = match self.cfg.scheme {
            SmeScheme::GaussianSplit => unreachable!("split steps do not go through update"),
            SmeScheme::Kraus => {
                let m = &self.kraus_drift + &self.meas * C64::new(eta.sqrt() * dv, 0.0);
                let mut out = &m * r * m.adjoint();
                if eta < 1.0 {
                    out += &self.meas * r * self.meas.adjoint() * C64::new((1.0 - eta) * dt, 0.0);
                }
                for c in &self.extra {
                    out += c * r * c.adjoint() * C64::new(dt, 0.0);
                }
                out
            }
            SmeScheme::EulerMaruyama | SmeScheme::NormalizedEuler => {
                let kr = &self.k * r;
                let mut drift = &kr + kr.adjoint() + &self.meas * r * self.meas.adjoint();
                for c in &self.extra {
                    drift += c * r * c.adjoint();
                }
                // M[σ_z]ρ = ½{σ_z − ⟨σ_z⟩, ρ}
                let mean = C64::new(trace_of_product(r, &self.sz).re, 0.0);
                let sr = &self.sz * r;
                let backaction = (&sr + sr.adjoint()) * C64::new(0.5, 0.0) - r * mean;
                r + drift * C64::new(dt, 0.0)
                    + backaction * C64::new(self.cfg.record_gain() * innovation, 0.0)
            }
        };
        let tr = (0..raw.nrows()).map(|i| raw[(i, i)].re).sum::<f64>();
        let drift = match self.cfg.scheme {
            // the Kraus normalization factor is not a numerical error
            SmeScheme::Kraus => 0.0,
            _ => (tr - 1.0).abs(),
        };
        let next = match self.cfg.scheme {
            SmeScheme::EulerMaruyama => {
                let herm = (&raw + raw.adjoint()) * C64::new(0.5, 0.0);
                DensityMatrix::from_raw(self.space.clone(), herm)
            }
            _ => DensityMatrix::from_raw_normalized(self.space.clone(), raw),
        };
        (next, drift)
    }

    /// Smallest eigenvalue, checked against [`POSITIVITY_ABORT`].
    pub fn check_positive(&self, rho: &DensityMatrix, step: usize) -> Result<()> {
        let min = hermitian_eigenvalues(rho.matrix())[0];
        if min < POSITIVITY_ABORT || !min.is_finite() {
            return Err(Error::PositivityLost {
                step,
                min_eigenvalue: min,
                dt: self.cfg.dt,
            });
        }
        Ok(())
    }

    /// Run `steps` steps from `rho0`, drawing Wiener increments from `rng`.
    /// `energy` defines the work bookkeeping: each step's work increment is
    /// the energy the drive removes, `dt · Tr(E · i[H, ρ])`.
    pub fn run<R: Rng + ?Sized>(
        &self,
        rho0: &DensityMatrix,
        steps: usize,
        energy: &Operator,
        rng: &mut R,
    ) -> Result<TrajectoryRecord> {
        check_space(&self.space, energy)?;
        if rho0.space().dim() != self.space.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                got: rho0.space().dim(),
            });
        }
        let dt = self.cfg.dt;
        let sqrt_dt = dt.sqrt();
        // i[E, H] gives Tr(E·i[H,ρ]) = Tr(ρ·i[E,H])
        let work_op = (energy.matrix() * &self.h - &self.h * energy.matrix()) * I;
        let mut rec = TrajectoryRecord {
            times: Vec::with_capacity(steps + 1),
            dv: Vec::with_capacity(steps),
            states: Vec::with_capacity(steps + 1),
            work_increments: Vec::with_capacity(steps),
            max_trace_drift: 0.0,
        };
        rec.times.push(0.0);
        rec.states.push(rho0.clone());
        let mut rho = rho0.clone();
        for step in 0..steps {
            let z: f64 = rng.sample(StandardNormal);
            rec.work_increments
                .push(dt * trace_of_product(rho.matrix(), &work_op).re);
            let (next, dv, drift) = self.step(&rho, z * sqrt_dt);
            self.check_positive(&next, step + 1)?;
            rec.max_trace_drift = rec.max_trace_drift.max(drift);
            rec.dv.push(dv);
            rec.times.push((step + 1) as f64 * dt);
            rec.states.push(next.clone());
            rho = next;
        }
        Ok(rec)
    }
}

fn monitored_sigma_z(space: &HilbertSpace) -> Result<CMatrix> {
    if space.dims()[0] != 2 {
        return Err(Error::InvalidSpace(format!(
            "monitored factor 0 must be a qubit, got dims {:?}",
            space.dims()
        )));
    }
    if space.n_factors() == 1 {
        Ok(sigma_z().into_matrix())
    } else {
        Ok(sigma_z().embed(space, 0)?.into_matrix())
    }
}

/// One SME step. Builds the integrator on every call; loops should use
/// [`SmeIntegrator`] directly. Aborts when positivity is lost.
pub fn sme_step(
    rho: &DensityMatrix,
    h: &Operator,
    cfg: &SmeConfig,
    extra_channels: &[LindbladChannel],
    noise: f64,
) -> Result<(DensityMatrix, f64)> {
    check_space(rho.space(), h)?;
    let integ = SmeIntegrator::new(h, *cfg, extra_channels)?;
    let (next, dv, _) = integ.step(rho, noise);
    integ.check_positive(&next, 1)?;
    Ok((next, dv))
}

/// One conditioned trajectory of duration `t_m`. The Wiener noise comes from
/// `ChaCha8Rng::seed_from_u64(cfg.seed)`; work is booked against the qubit
/// energy `σ_z/2` (units of `ω_q`).
pub fn simulate_trajectory(
    rho0: &DensityMatrix,
    h: &Operator,
    cfg: &SmeConfig,
    t_m: f64,
    extra_channels: &[LindbladChannel],
) -> Result<TrajectoryRecord> {
    check_space(rho0.space(), h)?;
    let steps = step_count(t_m, cfg.dt)?;
    let integ = SmeIntegrator::new(h, *cfg, extra_channels)?;
    let energy = qubit_energy(rho0.space())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    integ.run(rho0, steps, &energy, &mut rng)
}

/// Qubit energy `σ_z/2` in units of `ω_q`, embedded in `space`.
pub fn qubit_energy(space: &HilbertSpace) -> Result<Operator> {
    let e = sigma_z().scale_real(0.5);
    if space.n_factors() == 1 {
        Operator::new(space.clone(), e.into_matrix())
    } else {
        e.embed(space, 0)
    }
}

/// Conditioned trajectory. `states` and `times` have one more entry than
/// `dv` and `work_increments`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub dv: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Work extracted by the drive during each step (units of `ω_q`).
    pub work_increments: Vec<f64>,
    /// Largest trace correction applied by renormalization.
    pub max_trace_drift: f64,
}

impl TrajectoryRecord {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory has an initial state")
    }

    pub fn total_work(&self) -> f64 {
        self.work_increments.iter().sum()
    }
}

/// `ρ_q ⊗ |0⟩⟨0|` helper used by tests and the autonomous protocol.
pub fn with_cavity_vacuum(rho_q: &DensityMatrix, n_cav: usize) -> Result<DensityMatrix> {
    let vac = crate::quantum::PureState::fock(0, n_cav)?.to_density();
    Ok(rho_q.tensor(&vac))
}
