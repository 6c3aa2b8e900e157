//! Landmark schemes and indexed 2D/3D point sets.
//!
//! A scheme names a landmark layout (count, semantic roles, and the
//! left/right index permutation used for horizontal mirroring). Point sets
//! carry their scheme id and role map so serialized documents are
//! self-describing: `{scheme, points: [[x,y(,z)],...], roles: {name: index}}`.

use std::collections::BTreeMap;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the built-in 68-point scheme.
pub const GENERIC_68: &str = "generic-68";

/// Semantic landmark roles. "Left" and "right" refer to the image side when
/// the face is frontal: the left eye appears on the low-x side of the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    OuterEyeCornerLeft,
    OuterEyeCornerRight,
    EyeCenterLeft,
    EyeCenterRight,
    NoseTip,
    MouthCornerLeft,
    MouthCornerRight,
}

impl Role {
    /// The role on the opposite side of the face, if any.
    pub fn mirrored(self) -> Role {
        match self {
            Role::OuterEyeCornerLeft => Role::OuterEyeCornerRight,
            Role::OuterEyeCornerRight => Role::OuterEyeCornerLeft,
            Role::EyeCenterLeft => Role::EyeCenterRight,
            Role::EyeCenterRight => Role::EyeCenterLeft,
            Role::NoseTip => Role::NoseTip,
            Role::MouthCornerLeft => Role::MouthCornerRight,
            Role::MouthCornerRight => Role::MouthCornerLeft,
        }
    }
}

/// Static description of a landmark layout.
#[derive(Debug, Clone)]
pub struct LandmarkScheme {
    pub id: String,
    pub count: usize,
    pub roles: BTreeMap<Role, usize>,
    /// `mirror[i]` is the index whose point becomes index `i` after a
    /// horizontal flip. Must be an involution.
    pub mirror: Option<Vec<usize>>,
}

impl LandmarkScheme {
    /// Look up a built-in scheme by id.
    pub fn builtin(id: &str) -> Option<LandmarkScheme> {
        if id == GENERIC_68 {
            Some(generic_68_scheme())
        } else {
            None
        }
    }
}

/// The built-in 68-point layout.
///
/// Index blocks, left to right in image x when frontal:
/// - 0..=16 jawline (8 = chin)
/// - 17..=26 brows (17..=21 left, 22..=26 right)
/// - 27..=30 nose bridge (30 = tip)
/// - 31..=35 nose base (33 = center)
/// - 36..=41 left eye: outer corner, upper-outer lid, upper-inner lid,
///   inner corner, lower lid, eye center
/// - 42..=47 right eye: inner corner, upper-inner lid, upper-outer lid,
///   outer corner, lower lid, eye center
/// - 48..=59 outer mouth ring (48 left corner, 51 top center, 54 right
///   corner, 57 bottom center)
/// - 60..=67 inner mouth ring (60 left, 62 top center, 64 right, 66 bottom)
pub fn generic_68_scheme() -> LandmarkScheme {
    let mut roles = BTreeMap::new();
    roles.insert(Role::OuterEyeCornerLeft, 36);
    roles.insert(Role::EyeCenterLeft, 41);
    roles.insert(Role::OuterEyeCornerRight, 45);
    roles.insert(Role::EyeCenterRight, 47);
    roles.insert(Role::NoseTip, 30);
    roles.insert(Role::MouthCornerLeft, 48);
    roles.insert(Role::MouthCornerRight, 54);

    let mut mirror: Vec<usize> = (0..68).collect();
    let mut swap = |a: usize, b: usize| {
        mirror[a] = b;
        mirror[b] = a;
    };
    // Jawline.
    for i in 0..8 {
        swap(i, 16 - i);
    }
    // Brows.
    for i in 0..5 {
        swap(17 + i, 26 - i);
    }
    // Nose base (bridge is on the midline).
    swap(31, 35);
    swap(32, 34);
    // Eyes.
    swap(36, 45);
    swap(37, 44);
    swap(38, 43);
    swap(39, 42);
    swap(40, 46);
    swap(41, 47);
    // Outer mouth ring.
    swap(48, 54);
    swap(49, 53);
    swap(50, 52);
    swap(55, 59);
    swap(56, 58);
    // Inner mouth ring.
    swap(60, 64);
    swap(61, 63);
    swap(65, 67);

    LandmarkScheme {
        id: GENERIC_68.to_string(),
        count: 68,
        roles,
        mirror: Some(mirror),
    }
}

/// Indexed 2D landmark set in pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet2D {
    scheme: String,
    points: Vec<Vector2<f64>>,
    roles: BTreeMap<Role, usize>,
    visibility: Option<Vec<bool>>,
}

/// Indexed 3D landmark set in model units.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet3D {
    scheme: String,
    points: Vec<Vector3<f64>>,
    roles: BTreeMap<Role, usize>,
}

fn validate_common(
    scheme: &str,
    len: usize,
    roles: &BTreeMap<Role, usize>,
    visibility: Option<&Vec<bool>>,
) -> Result<()> {
    if let Some(known) = LandmarkScheme::builtin(scheme) {
        if len != known.count {
            return Err(Error::invalid(format!(
                "scheme {scheme} declares {} points, got {len}",
                known.count
            )));
        }
    }
    for (role, &idx) in roles {
        if idx >= len {
            return Err(Error::invalid(format!(
                "role {role:?} resolves to index {idx}, but the set has {len} points"
            )));
        }
    }
    if let Some(vis) = visibility {
        if vis.len() != len {
            return Err(Error::invalid(format!(
                "visibility has {} entries for {len} points",
                vis.len()
            )));
        }
    }
    Ok(())
}

impl LandmarkSet2D {
    pub fn new(
        scheme: impl Into<String>,
        points: Vec<Vector2<f64>>,
        roles: BTreeMap<Role, usize>,
        visibility: Option<Vec<bool>>,
    ) -> Result<Self> {
        let scheme = scheme.into();
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::invalid("landmark coordinates must be finite"));
        }
        validate_common(&scheme, points.len(), &roles, visibility.as_ref())?;
        Ok(LandmarkSet2D {
            scheme,
            points,
            roles,
            visibility,
        })
    }

    pub fn scheme(&self) -> &str {
        &self.scheme
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vector2<f64>] {
        &self.points
    }

    pub fn roles(&self) -> &BTreeMap<Role, usize> {
        &self.roles
    }

    pub fn visibility(&self) -> Option<&[bool]> {
        self.visibility.as_deref()
    }

    pub fn role_index(&self, role: Role) -> Option<usize> {
        self.roles.get(&role).copied()
    }

    pub fn role_point(&self, role: Role) -> Option<Vector2<f64>> {
        self.role_index(role).map(|i| self.points[i])
    }

    /// Rebuild with the same scheme/roles/visibility but new coordinates.
    pub fn with_points(&self, points: Vec<Vector2<f64>>) -> Result<Self> {
        if points.len() != self.points.len() {
            return Err(Error::invalid("point count change is not allowed"));
        }
        LandmarkSet2D::new(
            self.scheme.clone(),
            points,
            self.roles.clone(),
            self.visibility.clone(),
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(Landmark2DDoc::from(self)).expect("landmark doc serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let doc: Landmark2DDoc = serde_json::from_value(value.clone())?;
        doc.try_into()
    }
}

impl LandmarkSet3D {
    pub fn new(
        scheme: impl Into<String>,
        points: Vec<Vector3<f64>>,
        roles: BTreeMap<Role, usize>,
    ) -> Result<Self> {
        let scheme = scheme.into();
        if points
            .iter()
            .any(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
        {
            return Err(Error::invalid("landmark coordinates must be finite"));
        }
        validate_common(&scheme, points.len(), &roles, None)?;
        Ok(LandmarkSet3D {
            scheme,
            points,
            roles,
        })
    }

    pub fn scheme(&self) -> &str {
        &self.scheme
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn roles(&self) -> &BTreeMap<Role, usize> {
        &self.roles
    }

    pub fn role_index(&self, role: Role) -> Option<usize> {
        self.roles.get(&role).copied()
    }

    pub fn role_point(&self, role: Role) -> Option<Vector3<f64>> {
        self.role_index(role).map(|i| self.points[i])
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(Landmark3DDoc::from(self)).expect("landmark doc serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let doc: Landmark3DDoc = serde_json::from_value(value.clone())?;
        doc.try_into()
    }
}

// Wire formats. Points are arrays so the documents read as plain geometry.

#[derive(Serialize, Deserialize)]
struct Landmark2DDoc {
    scheme: String,
    points: Vec<[f64; 2]>,
    roles: BTreeMap<Role, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    visibility: Option<Vec<bool>>,
}

#[derive(Serialize, Deserialize)]
struct Landmark3DDoc {
    scheme: String,
    points: Vec<[f64; 3]>,
    roles: BTreeMap<Role, usize>,
}

impl From<&LandmarkSet2D> for Landmark2DDoc {
    fn from(set: &LandmarkSet2D) -> Self {
        Landmark2DDoc {
            scheme: set.scheme.clone(),
            points: set.points.iter().map(|p| [p.x, p.y]).collect(),
            roles: set.roles.clone(),
            visibility: set.visibility.clone(),
        }
    }
}

impl TryFrom<Landmark2DDoc> for LandmarkSet2D {
    type Error = Error;
    fn try_from(doc: Landmark2DDoc) -> Result<Self> {
        LandmarkSet2D::new(
            doc.scheme,
            doc.points
                .iter()
                .map(|p| Vector2::new(p[0], p[1]))
                .collect(),
            doc.roles,
            doc.visibility,
        )
    }
}

impl From<&LandmarkSet3D> for Landmark3DDoc {
    fn from(set: &LandmarkSet3D) -> Self {
        Landmark3DDoc {
            scheme: set.scheme.clone(),
            points: set.points.iter().map(|p| [p.x, p.y, p.z]).collect(),
            roles: set.roles.clone(),
        }
    }
}

impl TryFrom<Landmark3DDoc> for LandmarkSet3D {
    type Error = Error;
    fn try_from(doc: Landmark3DDoc) -> Result<Self> {
        LandmarkSet3D::new(
            doc.scheme,
            doc.points
                .iter()
                .map(|p| Vector3::new(p[0], p[1], p[2]))
                .collect(),
            doc.roles,
        )
    }
}

impl Serialize for LandmarkSet2D {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        Landmark2DDoc::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LandmarkSet2D {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let doc = Landmark2DDoc::deserialize(deserializer)?;
        doc.try_into().map_err(serde::de::Error::custom)
    }
}

impl Serialize for LandmarkSet3D {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        Landmark3DDoc::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LandmarkSet3D {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let doc = Landmark3DDoc::deserialize(deserializer)?;
        doc.try_into().map_err(serde::de::Error::custom)
    }
}
