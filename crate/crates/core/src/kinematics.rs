//! Pedestrian and bicyclist scatterer models.
//!
//! Each object is a rigid carrier (torso or bike frame) moving at constant
//! velocity plus a few micro-motion parts whose radial velocity adds a
//! sinusoid on top of the carrier's:
//!
//! | object     | part        | amplitude (m/s)     | rate (Hz)              | phase |
//! |------------|-------------|---------------------|------------------------|-------|
//! | pedestrian | left leg    | `1.2 v`             | `v / (1.346 √h)`       | 0     |
//! | pedestrian | right leg   | `1.2 v`             | same                   | π     |
//! | pedestrian | left arm    | `0.6 v`             | same                   | π     |
//! | pedestrian | right arm   | `0.6 v`             | same                   | 0     |
//! | bicyclist  | front wheel | `v`                 | `v / (2π r_wheel)`     | 0     |
//! | bicyclist  | rear wheel  | `v`                 | same                   | π/2   |
//! | bicyclist  | legs        | `2π f_p r_crank`    | `f_p = f_wheel / gear` | 0     |
//!
//! Coasting bicyclists have a zero leg term. Part ranges integrate the part
//! velocity so range and Doppler stay consistent.
//!
//! Geometry is bistatic: Tx at the origin, Rx at (50, 0, 0) m, and the path
//! length is `|p - tx| + |p - rx|`. Radial velocity is the rate at which that
//! path *shortens*, so an approaching target has positive Doppler.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ofdm::OfdmConfig;
use crate::{cis_cycles, SPEED_OF_LIGHT};

pub type Vec3 = [f64; 3];

pub const TX_POSITION: Vec3 = [0.0, 0.0, 0.0];
pub const RX_POSITION: Vec3 = [50.0, 0.0, 0.0];

/// Gait cadence `f_g = v / (GAIT_CADENCE_COEFF * sqrt(height))`.
pub const GAIT_CADENCE_COEFF: f64 = 1.346;
pub const LEG_SWING_GAIN: f64 = 1.2;
pub const ARM_SWING_GAIN: f64 = 0.6;
pub const WHEEL_RADIUS: f64 = 0.35;
pub const CRANK_RADIUS: f64 = 0.17;
/// Relative cross-section of limbs, wheels and pedaling legs.
pub const MICRO_PART_RCS: f64 = 0.3;

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: Vec3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub fn bistatic_range(p: Vec3, tx: Vec3, rx: Vec3) -> f64 {
    norm(sub(p, tx)) + norm(sub(p, rx))
}

/// `∇_p (|p - tx| + |p - rx|)`, the sum of the two outward unit vectors.
pub fn bistatic_gradient(p: Vec3, tx: Vec3, rx: Vec3) -> Vec3 {
    let a = sub(p, tx);
    let b = sub(p, rx);
    let (na, nb) = (norm(a), norm(b));
    std::array::from_fn(|i| a[i] / na + b[i] / nb)
}

fn heading_unit(heading_deg: f64) -> Vec3 {
    let h = heading_deg.to_radians();
    [h.cos(), h.sin(), 0.0]
}

/// Rectangle the objects start in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Default for Area {
    fn default() -> Self {
        Self {
            x: [5.0, 45.0],
            y: [-10.0, 10.0],
        }
    }
}

impl Area {
    pub fn contains(&self, p: Vec3) -> bool {
        (self.x[0]..=self.x[1]).contains(&p[0]) && (self.y[0]..=self.y[1]).contains(&p[1]) && p[2] == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PedestrianParams {
    /// m
    pub height: f64,
    /// m/s
    pub speed: f64,
    /// degrees from +x
    pub heading: f64,
    /// m
    pub location: Vec3,
}

impl PedestrianParams {
    pub fn nominal() -> Self {
        Self {
            height: 1.7,
            speed: 1.3,
            heading: 140.0,
            location: [22.0, 4.0, 0.0],
        }
    }

    pub fn sample(rng: &mut impl Rng, area: &Area) -> Self {
        let height = rng.gen_range(1.5..=2.0);
        Self {
            height,
            speed: rng.gen_range(0.0..=1.4 * height),
            heading: rng.gen_range(-180.0..=180.0),
            location: [
                rng.gen_range(area.x[0]..=area.x[1]),
                rng.gen_range(area.y[0]..=area.y[1]),
                0.0,
            ],
        }
    }

    pub fn validate(&self, area: &Area) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        if !(1.5..=2.0).contains(&self.height) {
            return bad(format!("pedestrian height {} outside [1.5, 2]", self.height));
        }
        if !(0.0..=1.4 * self.height).contains(&self.speed) {
            return bad(format!("pedestrian speed {} outside [0, 1.4*height]", self.speed));
        }
        if !(-180.0..=180.0).contains(&self.heading) {
            return bad(format!("pedestrian heading {} outside [-180, 180]", self.heading));
        }
        if !area.contains(self.location) {
            return bad(format!("pedestrian location {:?} outside area", self.location));
        }
        Ok(())
    }

    /// Gait cycles per second.
    pub fn gait_frequency(&self) -> f64 {
        self.speed / (GAIT_CADENCE_COEFF * self.height.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BicyclistParams {
    pub speed: f64,
    pub heading: f64,
    pub location: Vec3,
    pub gear_ratio: f64,
    pub pedaling: bool,
}

impl BicyclistParams {
    pub fn nominal() -> Self {
        Self {
            speed: 4.5,
            heading: -30.0,
            location: [10.0, -4.0, 0.0],
            gear_ratio: 4.0,
            pedaling: true,
        }
    }

    pub fn sample(rng: &mut impl Rng, area: &Area) -> Self {
        Self {
            speed: rng.gen_range(1.0..=10.0),
            heading: rng.gen_range(-180.0..=180.0),
            location: [
                rng.gen_range(area.x[0]..=area.x[1]),
                rng.gen_range(area.y[0]..=area.y[1]),
                0.0,
            ],
            gear_ratio: rng.gen_range(0.5..=6.0),
            pedaling: rng.gen_bool(0.5),
        }
    }

    pub fn validate(&self, area: &Area) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        if !(1.0..=10.0).contains(&self.speed) {
            return bad(format!("bicyclist speed {} outside [1, 10]", self.speed));
        }
        if !(-180.0..=180.0).contains(&self.heading) {
            return bad(format!("bicyclist heading {} outside [-180, 180]", self.heading));
        }
        if !(0.5..=6.0).contains(&self.gear_ratio) {
            return bad(format!("gear ratio {} outside [0.5, 6]", self.gear_ratio));
        }
        if !area.contains(self.location) {
            return bad(format!("bicyclist location {:?} outside area", self.location));
        }
        Ok(())
    }

    /// Wheel revolutions per second.
    pub fn wheel_rate(&self) -> f64 {
        self.speed / (TAU * WHEEL_RADIUS)
    }

    /// Crank revolutions per second; zero when coasting.
    pub fn cadence(&self) -> f64 {
        if self.pedaling {
            self.wheel_rate() / self.gear_ratio
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetObject {
    Pedestrian(PedestrianParams),
    Bicyclist(BicyclistParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ObjectKind {
    Pedestrian,
    Bicyclist,
}

impl TargetObject {
    fn kind(&self) -> ObjectKind {
        match self {
            TargetObject::Pedestrian(_) => ObjectKind::Pedestrian,
            TargetObject::Bicyclist(_) => ObjectKind::Bicyclist,
        }
    }

    fn location(&self) -> Vec3 {
        match self {
            TargetObject::Pedestrian(p) => p.location,
            TargetObject::Bicyclist(b) => b.location,
        }
    }

    fn velocity(&self) -> Vec3 {
        let (speed, heading) = match self {
            TargetObject::Pedestrian(p) => (p.speed, p.heading),
            TargetObject::Bicyclist(b) => (b.speed, b.heading),
        };
        heading_unit(heading).map(|c| c * speed)
    }

    /// Carrier position at time `t`.
    pub fn position(&self, t: f64) -> Vec3 {
        let (p0, v) = (self.location(), self.velocity());
        std::array::from_fn(|i| p0[i] + v[i] * t)
    }

    fn micro_parts(&self) -> Vec<MicroMotion> {
        match self {
            TargetObject::Pedestrian(p) => {
                let f = p.gait_frequency();
                let leg = LEG_SWING_GAIN * p.speed;
                let arm = ARM_SWING_GAIN * p.speed;
                vec![
                    MicroMotion::new(BodyPart::LeftLeg, leg, f, 0.0),
                    MicroMotion::new(BodyPart::RightLeg, leg, f, PI),
                    MicroMotion::new(BodyPart::LeftArm, arm, f, PI),
                    MicroMotion::new(BodyPart::RightArm, arm, f, 0.0),
                ]
            }
            TargetObject::Bicyclist(b) => {
                let fw = b.wheel_rate();
                let fp = b.cadence();
                vec![
                    MicroMotion::new(BodyPart::FrontWheel, b.speed, fw, 0.0),
                    MicroMotion::new(BodyPart::RearWheel, b.speed, fw, PI / 2.0),
                    MicroMotion::new(BodyPart::Legs, TAU * fp * CRANK_RADIUS, fp, 0.0),
                ]
            }
        }
    }

    fn carrier_part(&self) -> BodyPart {
        match self.kind() {
            ObjectKind::Pedestrian => BodyPart::Torso,
            ObjectKind::Bicyclist => BodyPart::Frame,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyPart {
    Torso,
    LeftLeg,
    RightLeg,
    LeftArm,
    RightArm,
    Frame,
    FrontWheel,
    RearWheel,
    Legs,
}

impl BodyPart {
    pub fn is_carrier(self) -> bool {
        matches!(self, BodyPart::Torso | BodyPart::Frame)
    }
}

#[derive(Debug, Clone, Copy)]
struct MicroMotion {
    part: BodyPart,
    amplitude: f64,
    rate: f64,
    phase: f64,
}

impl MicroMotion {
    fn new(part: BodyPart, amplitude: f64, rate: f64, phase: f64) -> Self {
        Self {
            part,
            amplitude,
            rate,
            phase,
        }
    }

    fn velocity(&self, t: f64) -> f64 {
        self.amplitude * (TAU * self.rate * t + self.phase).sin()
    }

    /// Path shortening accumulated since t = 0.
    fn displacement(&self, t: f64) -> f64 {
        if self.rate == 0.0 || self.amplitude == 0.0 {
            return 0.0;
        }
        let w = TAU * self.rate;
        self.amplitude / w * (self.phase.cos() - (w * t + self.phase).cos())
    }
}

/// Range/velocity of one reflecting part at one instant, before it is turned
/// into a complex path gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathKinematics {
    pub part: BodyPart,
    pub bistatic_range: f64,
    pub radial_velocity: f64,
    /// Relative cross-section before path loss.
    pub rcs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    #[serde(rename = "PED")]
    Ped,
    #[serde(rename = "BIC")]
    Bic,
    #[serde(rename = "PED_BIC")]
    PedBic,
    #[serde(rename = "PED_PED")]
    PedPed,
    #[serde(rename = "BIC_BIC")]
    BicBic,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 5] = [
        ClassLabel::Ped,
        ClassLabel::Bic,
        ClassLabel::PedBic,
        ClassLabel::PedPed,
        ClassLabel::BicBic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Ped => "PED",
            ClassLabel::Bic => "BIC",
            ClassLabel::PedBic => "PED_BIC",
            ClassLabel::PedPed => "PED_PED",
            ClassLabel::BicBic => "BIC_BIC",
        }
    }

    fn kinds(self) -> &'static [ObjectKind] {
        use ObjectKind::*;
        match self {
            ClassLabel::Ped => &[Pedestrian],
            ClassLabel::Bic => &[Bicyclist],
            ClassLabel::PedBic => &[Pedestrian, Bicyclist],
            ClassLabel::PedPed => &[Pedestrian, Pedestrian],
            ClassLabel::BicBic => &[Bicyclist, Bicyclist],
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassLabel::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Scenario(format!("unknown class label {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub class_label: ClassLabel,
    pub objects: Vec<TargetObject>,
    pub tx_pos: Vec3,
    pub rx_pos: Vec3,
    pub area: Area,
}

impl Scenario {
    pub fn new(class_label: ClassLabel, objects: Vec<TargetObject>) -> Result<Self> {
        let s = Self {
            class_label,
            objects,
            tx_pos: TX_POSITION,
            rx_pos: RX_POSITION,
            area: Area::default(),
        };
        s.validate()?;
        Ok(s)
    }

    /// Every object at the Tables' nominal column.
    pub fn nominal(class_label: ClassLabel) -> Self {
        let objects = class_label
            .kinds()
            .iter()
            .map(|k| match k {
                ObjectKind::Pedestrian => TargetObject::Pedestrian(PedestrianParams::nominal()),
                ObjectKind::Bicyclist => TargetObject::Bicyclist(BicyclistParams::nominal()),
            })
            .collect();
        Self::new(class_label, objects).expect("nominal parameters are in range")
    }

    pub fn validate(&self) -> Result<()> {
        let kinds: Vec<_> = self.objects.iter().map(TargetObject::kind).collect();
        if kinds != self.class_label.kinds() {
            return Err(Error::Scenario(format!(
                "objects {:?} do not match class {}",
                kinds, self.class_label
            )));
        }
        for o in &self.objects {
            match o {
                TargetObject::Pedestrian(p) => p.validate(&self.area)?,
                TargetObject::Bicyclist(b) => b.validate(&self.area)?,
            }
        }
        Ok(())
    }

    /// Kinematics of every reflecting part at time `t`. `dt` is the
    /// slow-time step; carrier radial velocity is the path shortening over
    /// `[t, t + dt]` so that `R(t + dt) = R(t) - v dt` holds exactly.
    pub fn paths_at(&self, t: f64, dt: f64) -> Vec<PathKinematics> {
        let mut out = Vec::with_capacity(5 * self.objects.len());
        for obj in &self.objects {
            let r0 = bistatic_range(obj.position(t), self.tx_pos, self.rx_pos);
            let r1 = bistatic_range(obj.position(t + dt), self.tx_pos, self.rx_pos);
            let v = (r0 - r1) / dt;
            out.push(PathKinematics {
                part: obj.carrier_part(),
                bistatic_range: r0,
                radial_velocity: v,
                rcs: 1.0,
            });
            for mm in obj.micro_parts() {
                out.push(PathKinematics {
                    part: mm.part,
                    bistatic_range: r0 - mm.displacement(t),
                    radial_velocity: v + mm.velocity(t),
                    rcs: MICRO_PART_RCS,
                });
            }
        }
        out
    }
}

/// One reflecting path at one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScattererState {
    /// Complex path gain `a_l`, including path loss and carrier phase.
    pub amplitude: Complex64,
    /// m
    pub bistatic_range: f64,
    /// m/s, positive when the path shortens.
    pub radial_velocity: f64,
    /// Hz
    pub doppler: f64,
}

impl ScattererState {
    /// A path with the Doppler implied by `radial_velocity` at `cfg`'s carrier.
    pub fn new(amplitude: Complex64, bistatic_range: f64, radial_velocity: f64, cfg: &OfdmConfig) -> Self {
        Self {
            amplitude,
            bistatic_range,
            radial_velocity,
            doppler: cfg.carrier_freq() * radial_velocity / SPEED_OF_LIGHT,
        }
    }

    /// Turns part kinematics at frame `m` into a path gain.
    ///
    /// Magnitude is `rcs / R²`. The carrier phase is taken at the range the
    /// path would have had at frame 0 moving at its current velocity,
    /// `R + v m T_slow`, so that `a_l e^{j2π f_D m T_slow}` equals
    /// `|a_l| e^{-j2π f_c R(m)/c}` and the received phase tracks the true
    /// path length even for accelerating parts.
    pub fn from_kinematics(path: &PathKinematics, cfg: &OfdmConfig, m: usize) -> Self {
        let r = path.bistatic_range;
        let doppler = cfg.carrier_freq() * path.radial_velocity / SPEED_OF_LIGHT;
        let carrier_cycles = cfg.carrier_freq() * r / SPEED_OF_LIGHT;
        let slow_cycles = doppler * m as f64 * cfg.slow_time_step();
        let amplitude =
            cis_cycles(-(carrier_cycles.rem_euclid(1.0) + slow_cycles.rem_euclid(1.0))) * (path.rcs / (r * r));
        Self {
            amplitude,
            bistatic_range: r,
            radial_velocity: path.radial_velocity,
            doppler,
        }
    }
}

/// Draws a scenario for `class_label`, uniform over each parameter's
/// acceptable range.
pub fn sample_scenario(class_label: ClassLabel, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let area = Area::default();
    let objects = class_label
        .kinds()
        .iter()
        .map(|k| match k {
            ObjectKind::Pedestrian => TargetObject::Pedestrian(PedestrianParams::sample(&mut rng, &area)),
            ObjectKind::Bicyclist => TargetObject::Bicyclist(BicyclistParams::sample(&mut rng, &area)),
        })
        .collect();
    Scenario::new(class_label, objects).expect("sampled parameters are in range")
}

/// Scatterer states of every body part at frame `m`, time `m * T_slow`.
pub fn scatterer_states(scenario: &Scenario, cfg: &OfdmConfig, m: usize) -> Result<Vec<ScattererState>> {
    cfg.check_frame(m)?;
    let dt = cfg.slow_time_step();
    Ok(scenario
        .paths_at(m as f64 * dt, dt)
        .iter()
        .map(|p| ScattererState::from_kinematics(p, cfg, m))
        .collect())
}

/// [`scatterer_states`] for all `M` frames.
pub fn scatterer_tracks(scenario: &Scenario, cfg: &OfdmConfig) -> Vec<Vec<ScattererState>> {
    (0..cfg.n_frames())
        .into_par_iter()
        .map(|m| scatterer_states(scenario, cfg, m).expect("frame index in range"))
        .collect()
}
