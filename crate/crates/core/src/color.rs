//! sRGB colors with alpha, hex encoding and simple source-over compositing.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An sRGB-encoded color. Every component lives in `[0, 1]`.
///
/// Serializes as `{r, g, b, a}`; deserializes from that or a hex string.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Color {
    pub r: f64,
    pub g: f64,
    pub b: f64,
    pub a: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ColorRepr {
    Hex(String),
    Components {
        r: f64,
        g: f64,
        b: f64,
        #[serde(default = "opaque")]
        a: f64,
    },
}

fn opaque() -> f64 {
    1.0
}

impl<'de> Deserialize<'de> for Color {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let parsed = match ColorRepr::deserialize(d)? {
            ColorRepr::Hex(hex) => Color::from_hex(&hex),
            ColorRepr::Components { r, g, b, a } => Color::try_new(r, g, b, a),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ColorError {
    #[error("invalid hex color {0:?}: expected #RRGGBB or #RRGGBBAA")]
    Hex(String),
    #[error("color component {name} = {value} is outside [0, 1]")]
    Range { name: &'static str, value: String },
}

impl Color {
    pub const WHITE: Color = Color::rgb(1.0, 1.0, 1.0);
    pub const BLACK: Color = Color::rgb(0.0, 0.0, 0.0);

    pub const fn rgb(r: f64, g: f64, b: f64) -> Self {
        Color { r, g, b, a: 1.0 }
    }

    pub const fn rgba(r: f64, g: f64, b: f64, a: f64) -> Self {
        Color { r, g, b, a }
    }

    /// Builds an opaque color from 8-bit channels.
    pub fn from_rgb8(r: u8, g: u8, b: u8) -> Self {
        Color::rgb(r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0)
    }

    /// Checked constructor: rejects NaN and anything outside `[0, 1]`.
    pub fn try_new(r: f64, g: f64, b: f64, a: f64) -> Result<Self, ColorError> {
        let c = Color { r, g, b, a };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ColorError> {
        for (name, value) in [("r", self.r), ("g", self.g), ("b", self.b), ("a", self.a)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ColorError::Range {
                    name,
                    value: value.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Parses `#RRGGBB` or `#RRGGBBAA` (case-insensitive, leading `#` optional).
    pub fn from_hex(text: &str) -> Result<Self, ColorError> {
        let err = || ColorError::Hex(text.to_string());
        let digits = text.trim().strip_prefix('#').unwrap_or(text.trim());
        if !(digits.len() == 6 || digits.len() == 8) || !digits.is_ascii() {
            return Err(err());
        }
        let channel = |i: usize| u8::from_str_radix(&digits[i..i + 2], 16).map_err(|_| err());
        let (r, g, b) = (channel(0)?, channel(2)?, channel(4)?);
        let a = if digits.len() == 8 { channel(6)? } else { 255 };
        Ok(Color::rgba(
            r as f64 / 255.0,
            g as f64 / 255.0,
            b as f64 / 255.0,
            a as f64 / 255.0,
        ))
    }

    /// 8-bit channels, rounded to nearest.
    pub fn to_rgba8(&self) -> [u8; 4] {
        let q = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        [q(self.r), q(self.g), q(self.b), q(self.a)]
    }

    /// `#RRGGBB` when opaque after quantization, `#RRGGBBAA` otherwise.
    pub fn to_hex(&self) -> String {
        let [r, g, b, a] = self.to_rgba8();
        if a == 255 {
            format!("#{r:02X}{g:02X}{b:02X}")
        } else {
            format!("#{r:02X}{g:02X}{b:02X}{a:02X}")
        }
    }

    /// Snaps every channel to the nearest 8-bit value.
    pub fn quantized(&self) -> Color {
        let [r, g, b, a] = self.to_rgba8();
        Color::rgba(
            r as f64 / 255.0,
            g as f64 / 255.0,
            b as f64 / 255.0,
            a as f64 / 255.0,
        )
    }

    pub fn with_alpha(self, a: f64) -> Color {
        Color { a, ..self }
    }

    pub fn is_opaque(&self) -> bool {
        self.a >= 1.0
    }

    /// Source-over compositing of `self` onto an opaque `backdrop`, on
    /// sRGB-encoded components. The result is opaque.
    pub fn over(&self, backdrop: Color) -> Color {
        let a = self.a;
        Color::rgb(
            self.r * a + backdrop.r * (1.0 - a),
            self.g * a + backdrop.g * (1.0 - a),
            self.b * a + backdrop.b * (1.0 - a),
        )
    }

    /// True when r, g and b each differ by at most `tolerance`. Alpha is ignored.
    pub fn approx_rgb_eq(&self, other: &Color, tolerance: f64) -> bool {
        // absorbs float noise from 8-bit/255 conversions at the boundary
        let tol = tolerance + 1e-9;
        (self.r - other.r).abs() <= tol
            && (self.g - other.g).abs() <= tol
            && (self.b - other.b).abs() <= tol
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}
