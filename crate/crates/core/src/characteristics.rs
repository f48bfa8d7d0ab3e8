//! Method of characteristics for the transport of phase equation.
//!
//! Writing the equation as `F(p, q, r, s, x, y, z) = 2kr − (p² + q²) + Î = 0`
//! with `p = φ_x`, `q = φ_y`, `r = φ_z`, `s = φ`, the solution is carried
//! along curves obeying seven coupled ODEs:
//!
//! ```text
//! x' = −2p     y' = −2q     z' = 2k
//! s' = −2p² − 2q² + 2kr
//! p' = −Î_x    q' = −Î_y    r' = −Î_z
//! ```
//!
//! Initial values on Ω₀ come from the surface data g via the compatibility
//! conditions; `∂F/∂r = 2k ≠ 0` guarantees a local solution. The curves are
//! integrated with classical RK4 at fixed step, along which F is conserved.

use std::fmt::Write as _;

use crate::beams::GaussianBeamParams;
use crate::error::TpeError;
use crate::grid::ScalarField2D;
use crate::interp::{BicubicInterpolant, StackInterpolant};

/// Component magnitude beyond which a trajectory is declared blown up.
const BLOW_UP_LIMIT: f64 = 1e12;

/// The 7-tuple evolved along one characteristic curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// φ along the curve.
    pub s: f64,
    /// φ_x along the curve.
    pub p: f64,
    /// φ_y along the curve.
    pub q: f64,
    /// φ_z along the curve.
    pub r: f64,
}

impl CharacteristicState {
    fn as_array(&self) -> [f64; 7] {
        [self.x, self.y, self.z, self.s, self.p, self.q, self.r]
    }

    fn from_array(v: [f64; 7]) -> Self {
        Self {
            x: v[0],
            y: v[1],
            z: v[2],
            s: v[3],
            p: v[4],
            q: v[5],
            r: v[6],
        }
    }
}

/// The reduced intensity term Î as a callable model with first derivatives.
#[derive(Debug)]
pub enum IHatModel {
    /// Î ≡ 0 (transversally constant intensity).
    Zero,
    /// Closed-form Î of a Gaussian beam.
    GaussianBeam(GaussianBeamParams),
    /// Î sampled on a slice stack, interpolated bicubically with linear
    /// blending in z.
    Sampled(StackInterpolant),
}

impl IHatModel {
    pub fn value(&self, x: f64, y: f64, z: f64) -> Result<f64, TpeError> {
        match self {
            IHatModel::Zero => Ok(0.0),
            IHatModel::GaussianBeam(p) => Ok(p.i_hat(x, y, z)),
            IHatModel::Sampled(s) => s.value(x, y, z),
        }
    }

    /// (Î_x, Î_y, Î_z).
    pub fn gradient(&self, x: f64, y: f64, z: f64) -> Result<[f64; 3], TpeError> {
        match self {
            IHatModel::Zero => Ok([0.0; 3]),
            IHatModel::GaussianBeam(p) => Ok(p.i_hat_gradient(x, y, z)),
            IHatModel::Sampled(s) => s.value_and_gradient(x, y, z).map(|(_, g)| g),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            IHatModel::Zero => "zero".into(),
            IHatModel::GaussianBeam(p) => format!("gaussian-beam:zr={},k={}", p.z_r, p.k),
            IHatModel::Sampled(_) => "sampled-stack".into(),
        }
    }
}

/// Affine surface data `g(x, y) = αx + βy + γ`.
#[derive(Debug, Clone, Copy)]
pub struct AffineSurface {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

enum SurfaceKind {
    Affine(AffineSurface),
    Fns {
        g: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
        gx: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
        gy: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    },
    Sampled(BicubicInterpolant),
}

/// Initial phase data `φ(x, y, 0) = g(x, y)` with its gradient.
pub struct InitialSurfaceData {
    kind: SurfaceKind,
    k: f64,
}

impl InitialSurfaceData {
    pub fn affine(alpha: f64, beta: f64, gamma: f64, k: f64) -> Result<Self, TpeError> {
        Self::with_kind(SurfaceKind::Affine(AffineSurface { alpha, beta, gamma }), k)
    }

    pub fn constant(c: f64, k: f64) -> Result<Self, TpeError> {
        Self::affine(0.0, 0.0, c, k)
    }

    pub fn from_fns(
        g: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        gx: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        gy: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        k: f64,
    ) -> Result<Self, TpeError> {
        Self::with_kind(
            SurfaceKind::Fns {
                g: Box::new(g),
                gx: Box::new(gx),
                gy: Box::new(gy),
            },
            k,
        )
    }

    /// Sampled surface; gradient by differentiating the interpolant.
    pub fn from_field(field: &ScalarField2D, k: f64) -> Result<Self, TpeError> {
        Self::with_kind(SurfaceKind::Sampled(BicubicInterpolant::new(field)), k)
    }

    fn with_kind(kind: SurfaceKind, k: f64) -> Result<Self, TpeError> {
        if !(k > 0.0) {
            return Err(TpeError::NonPositiveWavenumber(k));
        }
        Ok(Self { kind, k })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// (g, g_x, g_y) at a point of Ω₀.
    pub fn eval(&self, x: f64, y: f64) -> Result<(f64, f64, f64), TpeError> {
        match &self.kind {
            SurfaceKind::Affine(a) => Ok((a.alpha * x + a.beta * y + a.gamma, a.alpha, a.beta)),
            SurfaceKind::Fns { g, gx, gy } => Ok((g(x, y), gx(x, y), gy(x, y))),
            SurfaceKind::Sampled(interp) => interp.value_and_gradient(x, y),
        }
    }
}

/// The defining function `F = 2kr − (p² + q²) + Î(x, y, z)`.
///
/// Zero on solutions; conserved along exact characteristic flow.
pub fn tpe_constraint(
    state: &CharacteristicState,
    ihat: &IHatModel,
    k: f64,
) -> Result<f64, TpeError> {
    let ih = ihat.value(state.x, state.y, state.z)?;
    Ok(2.0 * k * state.r - (state.p * state.p + state.q * state.q) + ih)
}

/// Noncharacteristic condition `∂F/∂r = 2k ≠ 0`.
///
/// Trivially true for every positive wavenumber; kept as the explicit
/// assertion point for local solvability.
pub fn noncharacteristic_check(k: f64) -> bool {
    2.0 * k != 0.0
}

/// Initial state at `(x0, y0, 0)` satisfying the compatibility conditions.
///
/// `s = g`, `(p, q) = ∇g`, and `r = (p² + q² − Î(x0, y0, 0)) / (2k)` so that
/// `F = 0` holds at τ = 0 by construction.
pub fn compatibility_init(
    x0: f64,
    y0: f64,
    data: &InitialSurfaceData,
    ihat: &IHatModel,
) -> Result<CharacteristicState, TpeError> {
    let (s, p, q) = data.eval(x0, y0)?;
    let ih = ihat.value(x0, y0, 0.0)?;
    let r = (p * p + q * q - ih) / (2.0 * data.k);
    let state = CharacteristicState {
        x: x0,
        y: y0,
        z: 0.0,
        s,
        p,
        q,
        r,
    };
    debug_assert!(
        tpe_constraint(&state, ihat, data.k).map_or(true, |f| f.abs() < 1e-10),
        "compatibility conditions must zero the constraint"
    );
    Ok(state)
}

/// Right-hand side of the seven characteristic ODEs.
pub fn characteristic_rhs(
    state: &CharacteristicState,
    ihat: &IHatModel,
    k: f64,
) -> Result<[f64; 7], TpeError> {
    let [ihx, ihy, ihz] = ihat.gradient(state.x, state.y, state.z)?;
    Ok([
        -2.0 * state.p,
        -2.0 * state.q,
        2.0 * k,
        -2.0 * (state.p * state.p + state.q * state.q) + 2.0 * k * state.r,
        -ihx,
        -ihy,
        -ihz,
    ])
}

/// Axis-aligned box in which trajectories are allowed to travel.
#[derive(Debug, Clone, Copy)]
pub struct CharDomain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl CharDomain {
    /// Ω = [0,1]³.
    pub fn unit_cube() -> Self {
        Self {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
            z_min: 0.0,
            z_max: 1.0,
        }
    }

    fn contains(&self, s: &CharacteristicState) -> bool {
        let sx = 1e-9 * (self.x_max - self.x_min).abs().max(1.0);
        let sy = 1e-9 * (self.y_max - self.y_min).abs().max(1.0);
        let sz = 1e-9 * (self.z_max - self.z_min).abs().max(1.0);
        s.x >= self.x_min - sx
            && s.x <= self.x_max + sx
            && s.y >= self.y_min - sy
            && s.y <= self.y_max + sy
            && s.z >= self.z_min - sz
            && s.z <= self.z_max + sz
    }
}

/// Fixed-step RK4 setup for characteristic integration.
#[derive(Debug, Clone, Copy)]
pub struct IntegrationOptions {
    pub dtau: f64,
    pub tau_end: f64,
    pub domain: CharDomain,
}

impl IntegrationOptions {
    pub fn new(dtau: f64, tau_end: f64, domain: CharDomain) -> Result<Self, TpeError> {
        if !(dtau > 0.0) || !(tau_end > 0.0) {
            return Err(TpeError::InvalidIntegration(format!(
                "need dtau > 0 and tau_end > 0, got {dtau}, {tau_end}"
            )));
        }
        Ok(Self {
            dtau,
            tau_end,
            domain,
        })
    }
}

/// Why a trajectory stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Reached τ = tau_end.
    Completed,
    /// Left the integration box; the trajectory is partial.
    LeftDomain,
    /// A state component passed the blow-up limit.
    BlowUp,
    /// Sampled data was exhausted mid-step.
    OutOfData,
}

#[derive(Debug, Clone, Copy)]
pub struct TrajectoryPoint {
    pub tau: f64,
    pub state: CharacteristicState,
}

/// One integrated characteristic, possibly partial.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn last_state(&self) -> &CharacteristicState {
        &self.points[self.points.len() - 1].state
    }
}

fn rk4_step(
    state: &CharacteristicState,
    ihat: &IHatModel,
    k: f64,
    dtau: f64,
) -> Result<CharacteristicState, TpeError> {
    let y0 = state.as_array();
    let k1 = characteristic_rhs(state, ihat, k)?;
    let mut y = [0.0; 7];
    for m in 0..7 {
        y[m] = y0[m] + 0.5 * dtau * k1[m];
    }
    let k2 = characteristic_rhs(&CharacteristicState::from_array(y), ihat, k)?;
    for m in 0..7 {
        y[m] = y0[m] + 0.5 * dtau * k2[m];
    }
    let k3 = characteristic_rhs(&CharacteristicState::from_array(y), ihat, k)?;
    for m in 0..7 {
        y[m] = y0[m] + dtau * k3[m];
    }
    let k4 = characteristic_rhs(&CharacteristicState::from_array(y), ihat, k)?;
    for m in 0..7 {
        y[m] = y0[m] + dtau / 6.0 * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m]);
    }
    Ok(CharacteristicState::from_array(y))
}

/// Integrate one characteristic with classical RK4 at fixed step.
///
/// The trajectory includes the τ = 0 state. It stops early with a flag when
/// it leaves `opts.domain`, blows up, or runs out of sampled data; those are
/// partial trajectories, not errors.
pub fn integrate_characteristic(
    init: CharacteristicState,
    ihat: &IHatModel,
    k: f64,
    opts: &IntegrationOptions,
) -> Result<Trajectory, TpeError> {
    if !(k > 0.0) {
        return Err(TpeError::NonPositiveWavenumber(k));
    }
    let mut points = vec![TrajectoryPoint {
        tau: 0.0,
        state: init,
    }];
    if !opts.domain.contains(&init) {
        return Ok(Trajectory {
            points,
            termination: Termination::LeftDomain,
        });
    }
    let mut tau = 0.0;
    let mut state = init;
    let end_slack = 1e-12 * opts.tau_end.max(1.0);
    while tau < opts.tau_end - end_slack {
        let dtau = opts.dtau.min(opts.tau_end - tau);
        let next = match rk4_step(&state, ihat, k, dtau) {
            Ok(next) => next,
            Err(TpeError::InterpolationOutOfDomain { .. }) => {
                return Ok(Trajectory {
                    points,
                    termination: Termination::OutOfData,
                })
            }
            Err(e) => return Err(e),
        };
        if next.as_array().iter().any(|v| v.abs() > BLOW_UP_LIMIT) {
            return Ok(Trajectory {
                points,
                termination: Termination::BlowUp,
            });
        }
        if !opts.domain.contains(&next) {
            return Ok(Trajectory {
                points,
                termination: Termination::LeftDomain,
            });
        }
        tau += dtau;
        state = next;
        points.push(TrajectoryPoint { tau, state });
    }
    Ok(Trajectory {
        points,
        termination: Termination::Completed,
    })
}

/// Global closed-form solution for transversally constant intensity and
/// affine surface data: `φ(x, y, z) = g(x, y) + z (α² + β²) / (2k)`.
pub fn constant_intensity_solution(surface: &AffineSurface, k: f64, x: f64, y: f64, z: f64) -> f64 {
    surface.alpha * x
        + surface.beta * y
        + surface.gamma
        + z * (surface.alpha * surface.alpha + surface.beta * surface.beta) / (2.0 * k)
}

/// Scattered phase sample produced by a characteristic fan.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct PhaseSample {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub phi: f64,
}

/// One seed's outcome inside a fan.
pub struct SeedRun {
    pub seed: (f64, f64),
    pub outcome: Result<Trajectory, TpeError>,
}

/// A fan of characteristics seeded on Ω₀.
pub struct FanResult {
    pub runs: Vec<SeedRun>,
}

impl FanResult {
    pub fn succeeded(&self) -> usize {
        self.runs.iter().filter(|r| r.outcome.is_ok()).count()
    }

    /// All (x, y, z, φ) samples along every successful trajectory.
    pub fn phase_samples(&self) -> Vec<PhaseSample> {
        let mut out = Vec::new();
        for run in &self.runs {
            if let Ok(t) = &run.outcome {
                for pt in &t.points {
                    out.push(PhaseSample {
                        x: pt.state.x,
                        y: pt.state.y,
                        z: pt.state.z,
                        phi: pt.state.s,
                    });
                }
            }
        }
        out
    }

    /// Concatenated trajectory CSV: `seed,tau,x,y,z,s,p,q,r`.
    pub fn trajectories_csv(&self) -> String {
        let mut out = String::from("seed,tau,x,y,z,s,p,q,r\n");
        for (n, run) in self.runs.iter().enumerate() {
            if let Ok(t) = &run.outcome {
                for pt in &t.points {
                    let s = &pt.state;
                    writeln!(
                        out,
                        "{n},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                        pt.tau, s.x, s.y, s.z, s.s, s.p, s.q, s.r
                    )
                    .unwrap();
                }
            }
        }
        out
    }

    /// Sample-cloud CSV: `x,y,z,phi`.
    pub fn samples_csv(&self) -> String {
        let mut out = String::from("x,y,z,phi\n");
        for s in self.phase_samples() {
            writeln!(out, "{:e},{:e},{:e},{:e}", s.x, s.y, s.z, s.phi).unwrap();
        }
        out
    }
}

/// Integrate one characteristic per seed; individual failures do not stop
/// the fan.
pub fn characteristic_fan(
    seeds: &[(f64, f64)],
    data: &InitialSurfaceData,
    ihat: &IHatModel,
    opts: &IntegrationOptions,
) -> Result<FanResult, TpeError> {
    if seeds.is_empty() {
        return Err(TpeError::InvalidIntegration("empty seed list".into()));
    }
    let runs = seeds
        .iter()
        .map(|&(x0, y0)| {
            let outcome = compatibility_init(x0, y0, data, ihat)
                .and_then(|init| integrate_characteristic(init, ihat, data.k(), opts));
            SeedRun {
                seed: (x0, y0),
                outcome,
            }
        })
        .collect();
    Ok(FanResult { runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn gauss_ihat() -> IHatModel {
        IHatModel::GaussianBeam(GaussianBeamParams::new(1.0, 1.0, 1.0).unwrap())
    }

    fn wide_domain() -> CharDomain {
        CharDomain {
            x_min: -10.0,
            x_max: 10.0,
            y_min: -10.0,
            y_max: 10.0,
            z_min: 0.0,
            z_max: 10.0,
        }
    }

    #[test]
    fn compatibility_conditions_linear_surface() {
        let data = InitialSurfaceData::affine(1.0, 1.0, 0.0, 1.0).unwrap();
        let s = compatibility_init(0.3, 0.4, &data, &IHatModel::Zero).unwrap();
        assert_abs_diff_eq!(s.s, 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(s.p, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.q, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.r, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            tpe_constraint(&s, &IHatModel::Zero, 1.0).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn compatibility_conditions_constant_surface() {
        let data = InitialSurfaceData::constant(5.0, 1.0).unwrap();
        let s = compatibility_init(0.5, 0.5, &data, &IHatModel::Zero).unwrap();
        assert_eq!((s.p, s.q, s.r), (0.0, 0.0, 0.0));

        // Gaussian Î(0,0,0) = −2, so r = 1 for constant data on the axis.
        let s = compatibility_init(
            0.0,
            0.0,
            &InitialSurfaceData::constant(1.5 * PI, 1.0).unwrap(),
            &gauss_ihat(),
        )
        .unwrap();
        assert_abs_diff_eq!(s.r, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn noncharacteristic_condition_positive_wavenumbers() {
        assert!(noncharacteristic_check(1.0));
        assert!(noncharacteristic_check(10.0));
        // k = 0 never reaches this check: the surface data constructor
        // rejects it up front.
        assert!(InitialSurfaceData::constant(0.0, 0.0).is_err());
    }

    #[test]
    fn rhs_matches_hand_substitution() {
        let state = CharacteristicState {
            x: 0.0,
            y: 0.0,
            z: 0.0,
            s: 0.0,
            p: 1.0,
            q: 1.0,
            r: 1.0,
        };
        let rhs = characteristic_rhs(&state, &IHatModel::Zero, 1.0).unwrap();
        assert_eq!(rhs, [-2.0, -2.0, 2.0, -2.0, 0.0, 0.0, 0.0]);

        let rest = CharacteristicState {
            p: 0.0,
            q: 0.0,
            r: 0.0,
            ..state
        };
        let rhs = characteristic_rhs(&rest, &IHatModel::Zero, 1.0).unwrap();
        assert_eq!(rhs, [0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn rhs_gaussian_gradient_value() {
        // p' = −8x/w⁴ = −2 at (1, 0, 0) where w²(0) = 2.
        let state = CharacteristicState {
            x: 1.0,
            y: 0.0,
            z: 0.0,
            s: 0.0,
            p: 0.0,
            q: 0.0,
            r: 0.0,
        };
        let rhs = characteristic_rhs(&state, &gauss_ihat(), 1.0).unwrap();
        assert_abs_diff_eq!(rhs[4], -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rhs[5], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn constant_ihat_matches_closed_form_exactly() {
        // Constant RHS: RK4 is exact; compare against the line solution.
        let data = InitialSurfaceData::affine(1.0, 1.0, 0.0, 1.0).unwrap();
        let init = compatibility_init(0.0, 0.0, &data, &IHatModel::Zero).unwrap();
        let opts = IntegrationOptions::new(0.05, 0.5, wide_domain()).unwrap();
        let t = integrate_characteristic(init, &IHatModel::Zero, 1.0, &opts).unwrap();
        assert_eq!(t.termination, Termination::Completed);
        for pt in &t.points {
            let tau = pt.tau;
            assert_abs_diff_eq!(pt.state.x, -2.0 * tau, epsilon = 1e-12);
            assert_abs_diff_eq!(pt.state.y, -2.0 * tau, epsilon = 1e-12);
            assert_abs_diff_eq!(pt.state.z, 2.0 * tau, epsilon = 1e-12);
            assert_abs_diff_eq!(pt.state.s, -2.0 * tau, epsilon = 1e-12);
            assert_abs_diff_eq!(pt.state.p, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_gradient_gives_vertical_line() {
        let data = InitialSurfaceData::constant(2.0, 1.0).unwrap();
        let init = compatibility_init(0.25, 0.75, &data, &IHatModel::Zero).unwrap();
        let opts = IntegrationOptions::new(0.01, 0.5, wide_domain()).unwrap();
        let t = integrate_characteristic(init, &IHatModel::Zero, 1.0, &opts).unwrap();
        let last = t.last_state();
        assert_abs_diff_eq!(last.x, 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(last.y, 0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(last.s, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(last.z, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn on_axis_gaussian_characteristic_stays_on_axis() {
        let data = InitialSurfaceData::constant(1.5 * PI, 1.0).unwrap();
        let ihat = gauss_ihat();
        let init = compatibility_init(0.0, 0.0, &data, &ihat).unwrap();
        let opts = IntegrationOptions::new(1e-3, 0.5, wide_domain()).unwrap();
        let t = integrate_characteristic(init, &ihat, 1.0, &opts).unwrap();
        assert_eq!(t.termination, Termination::Completed);
        for pt in &t.points {
            assert_abs_diff_eq!(pt.state.x, 0.0, epsilon = 1e-13);
            assert_abs_diff_eq!(pt.state.y, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn z_advances_as_2k_tau_for_all_models() {
        for (ihat, k) in [
            (IHatModel::Zero, 1.0),
            (gauss_ihat(), 1.0),
            (IHatModel::Zero, 2.5),
        ] {
            let data = InitialSurfaceData::constant(1.0, k).unwrap();
            let init = compatibility_init(0.1, 0.2, &data, &ihat).unwrap();
            let opts = IntegrationOptions::new(1e-2, 0.4, wide_domain()).unwrap();
            let t = integrate_characteristic(init, &ihat, k, &opts).unwrap();
            for pt in &t.points {
                assert_abs_diff_eq!(pt.state.z, 2.0 * k * pt.tau, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn constraint_conserved_along_gaussian_characteristics() {
        let data = InitialSurfaceData::constant(1.5 * PI, 1.0).unwrap();
        let ihat = gauss_ihat();
        for seed in [(0.3, 0.4), (0.5, 0.0), (0.9, 0.9)] {
            let init = compatibility_init(seed.0, seed.1, &data, &ihat).unwrap();
            let opts = IntegrationOptions::new(1e-3, 0.5, wide_domain()).unwrap();
            let t = integrate_characteristic(init, &ihat, 1.0, &opts).unwrap();
            for pt in &t.points {
                let f = tpe_constraint(&pt.state, &ihat, 1.0).unwrap();
                assert!(f.abs() <= 1e-8, "|F| = {} at tau = {}", f.abs(), pt.tau);
            }
        }
    }

    #[test]
    fn rk4_is_fourth_order_on_gaussian_model() {
        let data = InitialSurfaceData::constant(1.5 * PI, 1.0).unwrap();
        let ihat = gauss_ihat();
        let init = compatibility_init(0.6, 0.2, &data, &ihat).unwrap();
        let tau_end = 0.25;
        let reference = {
            let opts = IntegrationOptions::new(1e-4, tau_end, wide_domain()).unwrap();
            *integrate_characteristic(init, &ihat, 1.0, &opts)
                .unwrap()
                .last_state()
        };
        // Steps chosen so errors sit well above roundoff.
        let mut errs = Vec::new();
        for dtau in [1.6e-2, 8e-3, 4e-3] {
            let opts = IntegrationOptions::new(dtau, tau_end, wide_domain()).unwrap();
            let last = *integrate_characteristic(init, &ihat, 1.0, &opts)
                .unwrap()
                .last_state();
            let err = last
                .as_array()
                .iter()
                .zip(reference.as_array())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            errs.push(err.max(1e-16));
        }
        assert!(errs[0] / errs[1] >= 8.0, "ratios {errs:?}");
        assert!(errs[1] / errs[2] >= 8.0, "ratios {errs:?}");
    }

    #[test]
    fn closed_form_solution_values() {
        let s = AffineSurface {
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.0,
        };
        assert_abs_diff_eq!(
            constant_intensity_solution(&s, 1.0, 0.3, 0.4, 0.5),
            1.2,
            epsilon = 1e-15
        );
        let flat = AffineSurface {
            alpha: 0.0,
            beta: 0.0,
            gamma: 2.5,
        };
        assert_eq!(constant_intensity_solution(&flat, 1.0, 9.0, -3.0, 7.0), 2.5);
        let sx = AffineSurface {
            alpha: 2.0,
            beta: 0.0,
            gamma: 0.0,
        };
        assert_abs_diff_eq!(
            constant_intensity_solution(&sx, 1.0, 0.0, 0.0, 1.0),
            2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn fan_samples_match_closed_form_for_affine_data() {
        let data = InitialSurfaceData::affine(1.0, 1.0, 0.0, 1.0).unwrap();
        let surface = AffineSurface {
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.0,
        };
        let seeds: Vec<(f64, f64)> = (1..5)
            .flat_map(|i| (1..5).map(move |j| (i as f64 / 5.0, j as f64 / 5.0)))
            .collect();
        let opts = IntegrationOptions::new(0.01, 0.5, wide_domain()).unwrap();
        let fan = characteristic_fan(&seeds, &data, &IHatModel::Zero, &opts).unwrap();
        assert_eq!(fan.succeeded(), seeds.len());
        let samples = fan.phase_samples();
        assert!(!samples.is_empty());
        for s in samples {
            let expect = constant_intensity_solution(&surface, 1.0, s.x, s.y, s.z);
            assert_abs_diff_eq!(s.phi, expect, epsilon = 1e-10);
        }
    }

    #[test]
    fn single_seed_fan_equals_direct_integration() {
        let data = InitialSurfaceData::affine(0.5, -0.25, 1.0, 1.0).unwrap();
        let opts = IntegrationOptions::new(0.02, 0.3, wide_domain()).unwrap();
        let fan = characteristic_fan(&[(0.4, 0.6)], &data, &IHatModel::Zero, &opts).unwrap();
        let init = compatibility_init(0.4, 0.6, &data, &IHatModel::Zero).unwrap();
        let direct = integrate_characteristic(init, &IHatModel::Zero, 1.0, &opts).unwrap();
        let t = fan.runs[0].outcome.as_ref().unwrap();
        assert_eq!(t.points.len(), direct.points.len());
        for (a, b) in t.points.iter().zip(&direct.points) {
            assert_eq!(a.state, b.state);
        }
    }

    #[test]
    fn empty_seed_list_is_invalid() {
        let data = InitialSurfaceData::constant(0.0, 1.0).unwrap();
        let opts = IntegrationOptions::new(0.01, 0.1, wide_domain()).unwrap();
        assert!(matches!(
            characteristic_fan(&[], &data, &IHatModel::Zero, &opts),
            Err(TpeError::InvalidIntegration(_))
        ));
    }

    #[test]
    fn ring_of_seeds_bends_radially_symmetrically() {
        // Rotation-invariant Î with constant data: ‖(x,y)(τ)‖ depends only
        // on the seed radius.
        let data = InitialSurfaceData::constant(1.5 * PI, 1.0).unwrap();
        let ihat = gauss_ihat();
        let radius: f64 = 0.5;
        let seeds: Vec<(f64, f64)> = [0.0, 0.3, PI / 4.0, 1.0, PI / 2.0, 2.2, PI, 4.0]
            .iter()
            .map(|&angle| (radius * angle.cos(), radius * angle.sin()))
            .collect();
        let opts = IntegrationOptions::new(1e-3, 0.5, wide_domain()).unwrap();
        let fan = characteristic_fan(&seeds, &data, &ihat, &opts).unwrap();
        let radii: Vec<Vec<f64>> = fan
            .runs
            .iter()
            .map(|r| {
                r.outcome
                    .as_ref()
                    .unwrap()
                    .points
                    .iter()
                    .map(|pt| (pt.state.x * pt.state.x + pt.state.y * pt.state.y).sqrt())
                    .collect()
            })
            .collect();
        let first = &radii[0];
        // Trajectories bend outward: p' has sign opposite to x.
        assert!(first.last().unwrap() > &radius);
        for other in &radii[1..] {
            assert_eq!(other.len(), first.len());
            for (a, b) in first.iter().zip(other) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn trajectory_stops_at_domain_boundary() {
        let data = InitialSurfaceData::affine(1.0, 0.0, 0.0, 1.0).unwrap();
        let init = compatibility_init(0.5, 0.5, &data, &IHatModel::Zero).unwrap();
        let opts = IntegrationOptions::new(0.01, 10.0, CharDomain::unit_cube()).unwrap();
        // x' = −2: leaves through x = 0 quickly.
        let t = integrate_characteristic(init, &IHatModel::Zero, 1.0, &opts).unwrap();
        assert_eq!(t.termination, Termination::LeftDomain);
        for pt in &t.points {
            assert!(pt.state.x >= -1e-9);
        }
    }

    #[test]
    fn sampled_ihat_reproduces_gaussian_dynamics() {
        // Sample the Gaussian Î on a fine stack and check the integrated
        // trajectory tracks the analytic model.
        let params = GaussianBeamParams::new(1.0, 1.0, 1.0).unwrap();
        let grid = Grid2D::new(129, 129, -2.0, 2.0, -2.0, 2.0).unwrap();
        let slices: Vec<ScalarField2D> = (0..=40)
            .map(|n| {
                let z = n as f64 * 0.025;
                ScalarField2D::from_fn(grid, z, |x, y| params.i_hat(x, y, z)).unwrap()
            })
            .collect();
        let stack = crate::grid::FieldStack::new(slices).unwrap();
        let sampled = IHatModel::Sampled(StackInterpolant::new(&stack));
        let analytic = IHatModel::GaussianBeam(params);
        let data = InitialSurfaceData::constant(1.5 * PI, 1.0).unwrap();
        let opts = IntegrationOptions::new(1e-3, 0.45, wide_domain()).unwrap();
        let a = integrate_characteristic(
            compatibility_init(0.5, 0.25, &data, &analytic).unwrap(),
            &analytic,
            1.0,
            &opts,
        )
        .unwrap();
        let b = integrate_characteristic(
            compatibility_init(0.5, 0.25, &data, &sampled).unwrap(),
            &sampled,
            1.0,
            &opts,
        )
        .unwrap();
        assert_eq!(b.termination, Termination::Completed);
        let last_a = a.last_state();
        let last_b = b.last_state();
        assert_abs_diff_eq!(last_a.x, last_b.x, epsilon = 2e-3);
        assert_abs_diff_eq!(last_a.s, last_b.s, epsilon = 2e-3);
    }

    #[test]
    fn sampled_ihat_derivative_consistency() {
        // Interpolant partials agree with finite differences of the
        // interpolant value to O(h²).
        let params = GaussianBeamParams::new(1.0, 1.0, 1.0).unwrap();
        let grid = Grid2D::new(65, 65, -1.0, 1.0, -1.0, 1.0).unwrap();
        let slices: Vec<ScalarField2D> = (0..=10)
            .map(|n| {
                let z = n as f64 * 0.1;
                ScalarField2D::from_fn(grid, z, |x, y| params.i_hat(x, y, z)).unwrap()
            })
            .collect();
        let stack = crate::grid::FieldStack::new(slices).unwrap();
        let model = IHatModel::Sampled(StackInterpolant::new(&stack));
        let h = 1e-5;
        for &(x, y, z) in &[(0.31, -0.42, 0.23), (-0.49, 0.1, 0.77), (0.05, 0.61, 0.5)] {
            let [gx, gy, _] = model.gradient(x, y, z).unwrap();
            let fx =
                (model.value(x + h, y, z).unwrap() - model.value(x - h, y, z).unwrap()) / (2.0 * h);
            let fy =
                (model.value(x, y + h, z).unwrap() - model.value(x, y - h, z).unwrap()) / (2.0 * h);
            assert_abs_diff_eq!(gx, fx, epsilon = 1e-7);
            assert_abs_diff_eq!(gy, fy, epsilon = 1e-7);
        }
    }
}
