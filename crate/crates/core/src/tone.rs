//! Tone vectors, their colour encoding and the tone-wheel geometry.
//!
//! Formality, sentiment and complexity map to the red, green and blue
//! channels. The wheel is the hue/saturation disc of the hexcone model with
//! the value kept as a hidden third coordinate, which makes the slider to
//! wheel mapping invertible on the whole lattice.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest value of a tone axis.
pub const TONE_MAX: u8 = 10;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("tone component {0} is outside 0..=10")]
pub struct ToneRangeError(pub u8);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawTone")]
pub struct ToneVector {
    pub formality: u8,
    pub sentiment: u8,
    pub complexity: u8,
}

#[derive(Deserialize)]
struct RawTone {
    formality: u8,
    sentiment: u8,
    complexity: u8,
}

impl TryFrom<RawTone> for ToneVector {
    type Error = ToneRangeError;

    fn try_from(raw: RawTone) -> Result<Self, Self::Error> {
        ToneVector::new(raw.formality, raw.sentiment, raw.complexity)
    }
}

impl ToneVector {
    pub fn new(formality: u8, sentiment: u8, complexity: u8) -> Result<Self, ToneRangeError> {
        for c in [formality, sentiment, complexity] {
            if c > TONE_MAX {
                return Err(ToneRangeError(c));
            }
        }
        Ok(ToneVector { formality, sentiment, complexity })
    }

    /// Neutral mid-point of the lattice.
    pub const NEUTRAL: ToneVector = ToneVector { formality: 5, sentiment: 5, complexity: 5 };

    pub fn components(self) -> [u8; 3] {
        [self.formality, self.sentiment, self.complexity]
    }

    /// Every lattice point, formality-major.
    pub fn lattice() -> impl Iterator<Item = ToneVector> {
        (0..=TONE_MAX).flat_map(|f| {
            (0..=TONE_MAX).flat_map(move |s| {
                (0..=TONE_MAX).map(move |c| ToneVector { formality: f, sentiment: s, complexity: c })
            })
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ToneColour {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

/// A point on the tone wheel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WheelPosition {
    /// Degrees in `[0, 360)`; `0` whenever `saturation == 0`.
    pub hue_deg: f64,
    pub saturation: f64,
    /// Retained third coordinate; not shown on the disc.
    pub value: f64,
}

impl WheelPosition {
    /// Cartesian disc coordinates, radius 1 at full saturation.
    pub fn disc(&self) -> (f64, f64) {
        let h = self.hue_deg.to_radians();
        (self.saturation * h.cos(), self.saturation * h.sin())
    }

    pub fn from_disc(x: f64, y: f64, value: f64) -> WheelPosition {
        let saturation = x.hypot(y);
        let hue_deg = if saturation == 0.0 { 0.0 } else { y.atan2(x).to_degrees().rem_euclid(360.0) };
        WheelPosition { hue_deg, saturation, value }
    }
}

fn channel(component: u8) -> u8 {
    (255.0 * f64::from(component) / 10.0).round() as u8
}

fn quantize(channel: f64) -> u8 {
    (10.0 * channel / 255.0).round().clamp(0.0, 10.0) as u8
}

pub fn tone_to_colour(t: ToneVector) -> ToneColour {
    ToneColour { r: channel(t.formality), g: channel(t.sentiment), b: channel(t.complexity) }
}

pub fn colour_to_tone(c: ToneColour) -> ToneVector {
    ToneVector {
        formality: quantize(f64::from(c.r)),
        sentiment: quantize(f64::from(c.g)),
        complexity: quantize(f64::from(c.b)),
    }
}

/// Hexcone RGB (channels in `[0, 1]`) to hue/saturation/value.
pub fn rgb_to_hsv(r: f64, g: f64, b: f64) -> WheelPosition {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let saturation = if max > 0.0 { delta / max } else { 0.0 };
    let hue_deg = if delta == 0.0 || saturation == 0.0 {
        0.0
    } else if max == r {
        (60.0 * ((g - b) / delta)).rem_euclid(360.0)
    } else if max == g {
        60.0 * ((b - r) / delta) + 120.0
    } else {
        60.0 * ((r - g) / delta) + 240.0
    };
    WheelPosition { hue_deg, saturation, value: max }
}

/// Hexcone hue/saturation/value to RGB channels in `[0, 1]`.
///
/// The formula is evaluated as-is, so saturations above 1 extrapolate
/// linearly instead of clamping.
pub fn hsv_to_rgb(w: WheelPosition) -> (f64, f64, f64) {
    let h = w.hue_deg.rem_euclid(360.0) / 60.0;
    let sector = h.floor();
    let f = h - sector;
    let v = w.value;
    let p = v * (1.0 - w.saturation);
    let q = v * (1.0 - w.saturation * f);
    let t = v * (1.0 - w.saturation * (1.0 - f));
    match sector as u8 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    }
}

pub fn tone_to_wheel(t: ToneVector) -> WheelPosition {
    let c = tone_to_colour(t);
    rgb_to_hsv(f64::from(c.r) / 255.0, f64::from(c.g) / 255.0, f64::from(c.b) / 255.0)
}

/// Continuous (unquantized) tone coordinates of a wheel position, each in
/// `[0, 10]` inside the disc.
pub fn wheel_to_tone_continuous(w: WheelPosition) -> [f64; 3] {
    let (r, g, b) = hsv_to_rgb(w);
    [10.0 * r, 10.0 * g, 10.0 * b]
}

pub fn wheel_to_tone(w: WheelPosition) -> ToneVector {
    let (r, g, b) = hsv_to_rgb(w);
    ToneVector { formality: quantize(255.0 * r), sentiment: quantize(255.0 * g), complexity: quantize(255.0 * b) }
}

/// Finite-difference step, in units of the disc radius.
pub const ARROW_STEP: f64 = 1e-3;
/// Gradients with a smaller norm produce a zero arrow.
pub const ARROW_EPSILON: f64 = 1e-9;

/// Unit directions on the disc along which formality, sentiment and
/// complexity increase fastest at `w`.
///
/// Gradients are central differences along x and y. Where that stencil would
/// reach the grey centre, where the hexcone is not differentiable, the
/// gradient is instead the least-squares fit of central differences along
/// three axes 60° apart, which keeps the wheel's threefold symmetry.
pub fn strongest_change_arrows(w: WheelPosition) -> [[f64; 2]; 3] {
    let (x0, y0) = w.disc();
    let axes: &[f64] = if w.saturation <= ARROW_STEP { &[0.0, 60.0, 120.0] } else { &[0.0, 90.0] };
    // Unit directions satisfy sum(u u^T) = (n/2) I.
    let weight = 2.0 / axes.len() as f64;
    let mut grad = [[0.0f64; 2]; 3];
    for &deg in axes {
        let theta = deg.to_radians();
        let (ux, uy) = if deg == 90.0 { (0.0, 1.0) } else { (theta.cos(), theta.sin()) };
        let plus = wheel_to_tone_continuous(WheelPosition::from_disc(
            x0 + ARROW_STEP * ux,
            y0 + ARROW_STEP * uy,
            w.value,
        ));
        let minus = wheel_to_tone_continuous(WheelPosition::from_disc(
            x0 - ARROW_STEP * ux,
            y0 - ARROW_STEP * uy,
            w.value,
        ));
        for axis in 0..3 {
            let directional = (plus[axis] - minus[axis]) / (2.0 * ARROW_STEP);
            grad[axis][0] += directional * ux * weight;
            grad[axis][1] += directional * uy * weight;
        }
    }
    grad.map(|[gx, gy]| {
        let norm = gx.hypot(gy);
        if norm < ARROW_EPSILON {
            [0.0, 0.0]
        } else {
            [gx / norm, gy / norm]
        }
    })
}
