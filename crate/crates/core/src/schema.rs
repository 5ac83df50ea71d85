//! Closed vocabularies used by project records.
//!
//! Every enumeration serializes to a lowercase snake-case token. Parsing is
//! lenient about case and separators, so `CoDesign`, `co-design`, `Co Design`
//! and `co_design` all resolve to [`Tier::CoDesign`]. Anything that does not
//! collapse onto a known token is rejected.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Error returned when a literal is not part of a closed vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} value {value:?}")]
pub struct UnknownVariant {
    pub kind: &'static str,
    pub value: String,
}

/// Lowercase and drop every non-alphanumeric character.
fn compact(raw: &str) -> String {
    raw.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

macro_rules! closed_enum {
    (
        $(#[$meta:meta])*
        $name:ident, $kind:literal {
            $( $variant:ident => $token:literal, $label:literal $(| $alias:literal)* ; )+
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $( $variant, )+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[ $( $name::$variant, )+ ];

            /// Machine token used in CSV, JSON and query strings.
            pub fn token(self) -> &'static str {
                match self { $( $name::$variant => $token, )+ }
            }

            /// Human-readable label.
            pub fn label(self) -> &'static str {
                match self { $( $name::$variant => $label, )+ }
            }
        }

        impl FromStr for $name {
            type Err = UnknownVariant;

            fn from_str(raw: &str) -> Result<Self, Self::Err> {
                let key = compact(raw);
                $(
                    if !key.is_empty()
                        && (key == compact($token) $(|| key == compact($alias))*)
                    {
                        return Ok($name::$variant);
                    }
                )+
                Err(UnknownVariant { kind: $kind, value: raw.to_string() })
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.token())
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.token())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let raw = String::deserialize(d)?;
                raw.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

closed_enum! {
    /// Macro-region a record is counted under.
    Region, "region" {
        Africa => "africa", "Africa";
        Asia => "asia", "Asia";
        Europe => "europe", "Europe";
        LatinAmerica => "latin_america", "Latin America" | "latam" | "south america";
        NorthAmerica => "north_america", "North America";
        Oceania => "oceania", "Oceania";
        MultiRegion => "multi_region", "Multi-region" | "multi-country";
        Global => "global", "Global";
    }
}

closed_enum! {
    /// Coded participation arrangement.
    Tier, "participation tier" {
        CommunityLed => "community_led", "Community-led";
        CoDesign => "co_design", "Co-design";
        ParticipatoryGovernance => "participatory_governance", "Participatory governance";
        PublicConsultation => "public_consultation", "Public consultation";
        ParticipatoryAudit => "participatory_audit", "Participatory audit";
        CoGovernance => "co_governance", "Co-governance";
    }
}

closed_enum! {
    /// AI lifecycle stage where participation is documented.
    LifecycleStage, "lifecycle stage" {
        ProblemFormulation => "problem_formulation", "Problem formulation" | "problem framing";
        Design => "design", "Design";
        DataCollection => "data_collection", "Data collection";
        ModelDevelopment => "model_development", "Model development";
        ModelTraining => "model_training", "Model training";
        Evaluation => "evaluation", "Evaluation";
        Deployment => "deployment", "Deployment";
        Governance => "governance", "Governance" | "oversight";
    }
}

closed_enum! {
    /// How the record's claims were checked.
    Verification, "verification status" {
        LiveVerified => "live_verified", "Live verified";
        IndirectVerified => "indirect_verified", "Indirectly verified";
        MixedVerified => "mixed_verified", "Mixed verification";
        PaperVerified => "paper_verified", "Verified from publication";
    }
}

closed_enum! {
    /// Curated evidence grade, A strongest.
    Grade, "evidence grade" {
        A => "A", "A";
        B => "B", "B";
        C => "C", "C";
    }
}

closed_enum! {
    /// Curatorial review state.
    Review, "review status" {
        Core => "core", "Core";
        Cautious => "cautious", "Cautious";
        ReviewCandidate => "review_candidate", "Review candidate";
    }
}

closed_enum! {
    /// Activity status of the initiative.
    Status, "activity status" {
        Active => "active", "Active";
        Completed => "completed", "Completed";
        PublishedCase => "published_case", "Published case";
        Pilot => "pilot", "Pilot";
        Funded => "funded", "Funded";
        Legacy => "legacy", "Legacy";
    }
}

closed_enum! {
    /// How precisely a location anchor pins a record.
    Precision, "precision" {
        Locality => "locality", "Locality";
        Country => "country", "Country";
        None => "none", "Not geocoded";
    }
}

impl Grade {
    /// Strength rank, higher is stronger evidence.
    pub fn strength(self) -> u8 {
        match self {
            Grade::A => 3,
            Grade::B => 2,
            Grade::C => 1,
        }
    }
}
