//! Scene description and its `scene v1` text format.

use std::fmt::Write as _;

use crate::classifier::WeaponClass;
use crate::model_io::{fmt_f64, ParseError, Records};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Facing {
    Left,
    Right,
}

impl Facing {
    /// +1 for right, −1 for left.
    pub fn sign(self) -> f64 {
        match self {
            Facing::Left => -1.0,
            Facing::Right => 1.0,
        }
    }

    fn token(self) -> &'static str {
        match self {
            Facing::Left => "left",
            Facing::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntityKind {
    PersonUnarmed,
    PersonArmed(WeaponClass),
}

impl EntityKind {
    /// `NoWeapon` for unarmed people.
    pub fn label(self) -> WeaponClass {
        match self {
            EntityKind::PersonUnarmed => WeaponClass::NoWeapon,
            EntityKind::PersonArmed(w) => w,
        }
    }

    pub fn from_label(label: WeaponClass) -> Self {
        match label {
            WeaponClass::NoWeapon => EntityKind::PersonUnarmed,
            w => EntityKind::PersonArmed(w),
        }
    }

    pub fn is_armed(self) -> bool {
        matches!(self, EntityKind::PersonArmed(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entity {
    /// 1-based, in file order.
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub kind: EntityKind,
    /// Direction the sprite faces on screen in ground view.
    pub facing: Facing,
}

/// Ground-vehicle start pose: metres and degrees counter-clockwise from +x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartPose {
    pub x: f64,
    pub y: f64,
    pub heading_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// World extent in metres; entities lie in `[0, w] × [0, h]`.
    pub bounds: (f64, f64),
    pub background_seed: u64,
    pub start: StartPose,
    pub uav_altitude: f64,
    pub entities: Vec<Entity>,
}

pub const DEFAULT_UAV_ALTITUDE: f64 = 8.0;

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("entity {id} at ({x}, {y}) lies outside the {w}x{h} bounds")]
    OutOfBounds {
        id: u32,
        x: f64,
        y: f64,
        w: f64,
        h: f64,
    },
    #[error("invalid scene: {0}")]
    Invalid(String),
}

impl Scene {
    pub fn new(bounds: (f64, f64), background_seed: u64) -> Result<Self, SceneError> {
        let (w, h) = bounds;
        if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
            return Err(SceneError::Invalid(format!(
                "bounds must be positive, got {w}x{h}"
            )));
        }
        Ok(Self {
            bounds,
            background_seed,
            start: StartPose {
                x: w / 2.0,
                y: 0.0,
                heading_deg: 90.0,
            },
            uav_altitude: DEFAULT_UAV_ALTITUDE,
            entities: Vec::new(),
        })
    }

    /// Appends an entity and returns its id.
    pub fn add(
        &mut self,
        x: f64,
        y: f64,
        kind: EntityKind,
        facing: Facing,
    ) -> Result<u32, SceneError> {
        let id = self.entities.len() as u32 + 1;
        let (w, h) = self.bounds;
        if !(x >= 0.0 && x <= w && y >= 0.0 && y <= h) {
            return Err(SceneError::OutOfBounds { id, x, y, w, h });
        }
        self.entities.push(Entity {
            id,
            x,
            y,
            kind,
            facing,
        });
        Ok(id)
    }

    /// Parses the `scene v1` format:
    ///
    /// ```text
    /// scene v1
    /// bounds <w> <h>
    /// background <seed>
    /// robot <x> <y> <heading_deg>          (optional)
    /// altitude <metres>                    (optional)
    /// entity PERSON_UNARMED <x> <y> left|right
    /// entity PERSON_ARMED <weapon> <x> <y> left|right
    /// ```
    pub fn parse(text: &str) -> Result<Self, SceneError> {
        let mut recs = Records::new(text);
        let head = recs.expect("scene header")?;
        head.keyword("scene", 1)?;
        if head.tokens[1] != "v1" {
            return Err(ParseError::new(
                head.line,
                format!("unsupported version `{}`", head.tokens[1]),
            )
            .into());
        }
        let b = recs.expect("bounds")?;
        b.keyword("bounds", 2)?;
        let bounds = (b.parse::<f64>(1, "width")?, b.parse::<f64>(2, "height")?);
        let bg = recs.expect("background")?;
        bg.keyword("background", 1)?;
        let mut scene = Scene::new(bounds, bg.parse(1, "seed")?).map_err(|e| match e {
            SceneError::Invalid(m) => SceneError::Parse(ParseError::new(b.line, m)),
            e => e,
        })?;
        for r in recs {
            let at = |m: String| SceneError::Parse(ParseError::new(r.line, m));
            match r.tokens[0] {
                "robot" => {
                    r.keyword("robot", 3)?;
                    scene.start = StartPose {
                        x: finite(r.parse(1, "x")?, r.line)?,
                        y: finite(r.parse(2, "y")?, r.line)?,
                        heading_deg: finite(r.parse(3, "heading")?, r.line)?,
                    };
                }
                "altitude" => {
                    r.keyword("altitude", 1)?;
                    let a: f64 = r.parse(1, "altitude")?;
                    if !(a > 0.0 && a.is_finite()) {
                        return Err(at(format!("altitude must be positive, got {a}")));
                    }
                    scene.uav_altitude = a;
                }
                "entity" => {
                    let (kind, rest) = match r.tokens.get(1).copied() {
                        Some("PERSON_UNARMED") => {
                            r.keyword("entity", 4)?;
                            (EntityKind::PersonUnarmed, 2)
                        }
                        Some("PERSON_ARMED") => {
                            r.keyword("entity", 5)?;
                            let w = WeaponClass::from_name(r.tokens[2])
                                .filter(|w| w.is_armed())
                                .ok_or_else(|| at(format!("unknown weapon `{}`", r.tokens[2])))?;
                            (EntityKind::PersonArmed(w), 3)
                        }
                        other => {
                            return Err(at(format!(
                                "unknown entity kind `{}`",
                                other.unwrap_or("")
                            )))
                        }
                    };
                    let x = finite(r.parse(rest, "x")?, r.line)?;
                    let y = finite(r.parse(rest + 1, "y")?, r.line)?;
                    let facing = match r.tokens[rest + 2] {
                        "left" => Facing::Left,
                        "right" => Facing::Right,
                        f => return Err(at(format!("facing must be left or right, got `{f}`"))),
                    };
                    scene
                        .add(x, y, kind, facing)
                        .map_err(|e| at(e.to_string()))?;
                }
                other => return Err(at(format!("unknown record `{other}`"))),
            }
        }
        Ok(scene)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scene v1");
        let _ = writeln!(
            out,
            "bounds {} {}",
            fmt_f64(self.bounds.0),
            fmt_f64(self.bounds.1)
        );
        let _ = writeln!(out, "background {}", self.background_seed);
        let s = self.start;
        let _ = writeln!(
            out,
            "robot {} {} {}",
            fmt_f64(s.x),
            fmt_f64(s.y),
            fmt_f64(s.heading_deg)
        );
        let _ = writeln!(out, "altitude {}", fmt_f64(self.uav_altitude));
        for e in &self.entities {
            let kind = match e.kind {
                EntityKind::PersonUnarmed => "PERSON_UNARMED".to_string(),
                EntityKind::PersonArmed(w) => format!("PERSON_ARMED {w}"),
            };
            let _ = writeln!(
                out,
                "entity {kind} {} {} {}",
                fmt_f64(e.x),
                fmt_f64(e.y),
                e.facing.token()
            );
        }
        out
    }
}

fn finite(v: f64, line: usize) -> Result<f64, SceneError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ParseError::new(line, "non-finite value").into())
    }
}
