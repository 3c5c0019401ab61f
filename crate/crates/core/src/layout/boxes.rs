//! Relative boxes and the fixed superlative position table.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Box in relative image coordinates: center plus width and height, all in
/// `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl RelBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        let b = RelBox { cx, cy, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        if !(in_unit(self.cx) && in_unit(self.cy) && in_unit(self.w) && in_unit(self.h)) {
            return Err(Error::InvalidValue(format!("box {self} has values outside [0, 1]")));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::InvalidValue(format!("box {self} has zero area")));
        }
        Ok(())
    }

    /// Box spanning `[x0, x1] × [y0, y1]`.
    pub fn from_extent(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        RelBox {
            cx: (x0 + x1) / 2.0,
            cy: (y0 + y1) / 2.0,
            w: x1 - x0,
            h: y1 - y0,
        }
    }

    pub fn x0(&self) -> f64 {
        self.cx - self.w / 2.0
    }

    pub fn x1(&self) -> f64 {
        self.cx + self.w / 2.0
    }

    pub fn y0(&self) -> f64 {
        self.cy - self.h / 2.0
    }

    pub fn y1(&self) -> f64 {
        self.cy + self.h / 2.0
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Inclusive containment of a relative point.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (x - self.cx).abs() <= self.w / 2.0 && (y - self.cy).abs() <= self.h / 2.0
    }

    /// Same center, both sides scaled by `factor`.
    pub fn shrink(&self, factor: f64) -> Self {
        RelBox {
            w: self.w * factor,
            h: self.h * factor,
            ..*self
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.cx, self.cy, self.w, self.h]
    }
}

impl fmt::Display for RelBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.2}, {:.2}, {:.2}, {:.2})", self.cx, self.cy, self.w, self.h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuperlativeTerm {
    Left,
    Right,
    Above,
    Below,
    Middle,
    UpperLeft,
    UpperRight,
    LowerLeft,
    LowerRight,
}

impl SuperlativeTerm {
    pub const ALL: [SuperlativeTerm; 9] = [
        SuperlativeTerm::Left,
        SuperlativeTerm::Right,
        SuperlativeTerm::Above,
        SuperlativeTerm::Below,
        SuperlativeTerm::Middle,
        SuperlativeTerm::UpperLeft,
        SuperlativeTerm::UpperRight,
        SuperlativeTerm::LowerLeft,
        SuperlativeTerm::LowerRight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuperlativeTerm::Left => "left",
            SuperlativeTerm::Right => "right",
            SuperlativeTerm::Above => "above",
            SuperlativeTerm::Below => "below",
            SuperlativeTerm::Middle => "middle",
            SuperlativeTerm::UpperLeft => "upper-left",
            SuperlativeTerm::UpperRight => "upper-right",
            SuperlativeTerm::LowerLeft => "lower-left",
            SuperlativeTerm::LowerRight => "lower-right",
        }
    }

    /// The predefined target box for this position.
    pub fn target_box(self) -> RelBox {
        let (cx, cy, w, h) = match self {
            SuperlativeTerm::Left => (0.20, 0.50, 0.33, 1.00),
            SuperlativeTerm::Right => (0.80, 0.50, 0.33, 1.00),
            SuperlativeTerm::Above => (0.50, 0.20, 1.00, 0.33),
            SuperlativeTerm::Below => (0.50, 0.80, 1.00, 0.33),
            SuperlativeTerm::Middle => (0.50, 0.50, 0.50, 0.50),
            SuperlativeTerm::UpperLeft => (0.25, 0.25, 0.50, 0.50),
            SuperlativeTerm::UpperRight => (0.75, 0.25, 0.50, 0.50),
            SuperlativeTerm::LowerLeft => (0.25, 0.75, 0.50, 0.50),
            SuperlativeTerm::LowerRight => (0.75, 0.75, 0.50, 0.50),
        };
        RelBox { cx, cy, w, h }
    }

    /// Edge terms claim a full-width or full-height band of the image.
    pub fn is_edge(self) -> bool {
        matches!(
            self,
            SuperlativeTerm::Left
                | SuperlativeTerm::Right
                | SuperlativeTerm::Above
                | SuperlativeTerm::Below
        )
    }
}

impl fmt::Display for SuperlativeTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuperlativeTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_lowercase();
        SuperlativeTerm::ALL
            .into_iter()
            .find(|t| t.as_str() == lower)
            .ok_or_else(|| Error::UnknownTerm(s.to_string()))
    }
}

pub fn assign_superlative_box(term: &str) -> Result<RelBox> {
    term.parse::<SuperlativeTerm>().map(SuperlativeTerm::target_box)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_lookup() {
        assert_eq!(
            assign_superlative_box("left").unwrap().as_array(),
            [0.20, 0.50, 0.33, 1.00]
        );
        assert_eq!(
            assign_superlative_box("lower-right").unwrap().as_array(),
            [0.75, 0.75, 0.50, 0.50]
        );
        assert!(matches!(
            assign_superlative_box("diagonal"),
            Err(Error::UnknownTerm(t)) if t == "diagonal"
        ));
    }

    #[test]
    fn all_table_boxes_are_valid() {
        for t in SuperlativeTerm::ALL {
            t.target_box().validate().unwrap();
            assert_eq!(t.as_str().parse::<SuperlativeTerm>().unwrap(), t);
        }
    }

    #[test]
    fn box_rejects_out_of_range() {
        assert!(RelBox::new(0.5, 0.5, 0.0, 0.5).is_err());
        assert!(RelBox::new(1.5, 0.5, 0.1, 0.5).is_err());
        assert!(RelBox::new(0.5, f64::NAN, 0.1, 0.5).is_err());
    }

    #[test]
    fn containment_is_inclusive() {
        let b = RelBox::new(0.5, 0.5, 0.5, 0.5).unwrap();
        assert!(b.contains(0.25, 0.75));
        assert!(!b.contains(0.2, 0.5));
    }
}
