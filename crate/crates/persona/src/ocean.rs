// SPDX-License-Identifier: MIT OR Apache-2.0

//! OCEAN trait taxonomy: five dimensions, each spanning a high and a low pole.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One of the five OCEAN personality dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dimension {
    Openness,
    Conscientiousness,
    Extraversion,
    Agreeableness,
    Neuroticism,
}

impl Dimension {
    /// All five dimensions in O, C, E, A, N order.
    pub const ALL: [Dimension; 5] = [
        Dimension::Openness,
        Dimension::Conscientiousness,
        Dimension::Extraversion,
        Dimension::Agreeableness,
        Dimension::Neuroticism,
    ];

    /// Single-letter code: O, C, E, A or N.
    pub fn code(self) -> char {
        match self {
            Dimension::Openness => 'O',
            Dimension::Conscientiousness => 'C',
            Dimension::Extraversion => 'E',
            Dimension::Agreeableness => 'A',
            Dimension::Neuroticism => 'N',
        }
    }

    /// Full dimension name.
    pub fn name(self) -> &'static str {
        match self {
            Dimension::Openness => "Openness",
            Dimension::Conscientiousness => "Conscientiousness",
            Dimension::Extraversion => "Extraversion",
            Dimension::Agreeableness => "Agreeableness",
            Dimension::Neuroticism => "Neuroticism",
        }
    }

    /// The pole of this dimension with the given polarity.
    pub fn pole(self, polarity: Polarity) -> TraitPole {
        use Dimension::*;
        use Polarity::*;
        match (self, polarity) {
            (Openness, High) => TraitPole::Inventive,
            (Openness, Low) => TraitPole::Consistent,
            (Conscientiousness, High) => TraitPole::Dependable,
            (Conscientiousness, Low) => TraitPole::Careless,
            (Extraversion, High) => TraitPole::Outgoing,
            (Extraversion, Low) => TraitPole::Solitary,
            (Agreeableness, High) => TraitPole::Compassionate,
            (Agreeableness, Low) => TraitPole::SelfInterested,
            (Neuroticism, High) => TraitPole::Nervous,
            (Neuroticism, Low) => TraitPole::Calm,
        }
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "o" | "openness" => Ok(Dimension::Openness),
            "c" | "conscientiousness" => Ok(Dimension::Conscientiousness),
            "e" | "extraversion" => Ok(Dimension::Extraversion),
            "a" | "agreeableness" => Ok(Dimension::Agreeableness),
            "n" | "neuroticism" => Ok(Dimension::Neuroticism),
            other => Err(Error::Config(format!("unknown dimension `{other}`"))),
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether a pole sits at the high or low end of its dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    High,
    Low,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::High => "high",
            Polarity::Low => "low",
        }
    }
}

/// One of the ten trait poles (two per OCEAN dimension).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraitPole {
    Inventive,
    Consistent,
    Dependable,
    Careless,
    Outgoing,
    Solitary,
    Compassionate,
    SelfInterested,
    Nervous,
    Calm,
}

impl TraitPole {
    /// All ten poles, high pole before low pole, dimensions in O, C, E, A, N order.
    pub const ALL: [TraitPole; 10] = [
        TraitPole::Inventive,
        TraitPole::Consistent,
        TraitPole::Dependable,
        TraitPole::Careless,
        TraitPole::Outgoing,
        TraitPole::Solitary,
        TraitPole::Compassionate,
        TraitPole::SelfInterested,
        TraitPole::Nervous,
        TraitPole::Calm,
    ];

    /// The dimension this pole belongs to.
    pub fn dimension(self) -> Dimension {
        use TraitPole::*;
        match self {
            Inventive | Consistent => Dimension::Openness,
            Dependable | Careless => Dimension::Conscientiousness,
            Outgoing | Solitary => Dimension::Extraversion,
            Compassionate | SelfInterested => Dimension::Agreeableness,
            Nervous | Calm => Dimension::Neuroticism,
        }
    }

    /// High or low end of the dimension.
    pub fn polarity(self) -> Polarity {
        use TraitPole::*;
        match self {
            Inventive | Dependable | Outgoing | Compassionate | Nervous => Polarity::High,
            Consistent | Careless | Solitary | SelfInterested | Calm => Polarity::Low,
        }
    }

    /// The pole at the other end of the same dimension.
    pub fn opposite(self) -> TraitPole {
        let polarity = match self.polarity() {
            Polarity::High => Polarity::Low,
            Polarity::Low => Polarity::High,
        };
        self.dimension().pole(polarity)
    }

    /// Human-readable pole name, e.g. "Self-interested".
    pub fn name(self) -> &'static str {
        use TraitPole::*;
        match self {
            Inventive => "Inventive",
            Consistent => "Consistent",
            Dependable => "Dependable",
            Careless => "Careless",
            Outgoing => "Outgoing",
            Solitary => "Solitary",
            Compassionate => "Compassionate",
            SelfInterested => "Self-interested",
            Nervous => "Nervous",
            Calm => "Calm",
        }
    }

    /// Stable lowercase identifier used in file names and CLI arguments.
    pub fn slug(self) -> &'static str {
        use TraitPole::*;
        match self {
            Inventive => "inventive",
            Consistent => "consistent",
            Dependable => "dependable",
            Careless => "careless",
            Outgoing => "outgoing",
            Solitary => "solitary",
            Compassionate => "compassionate",
            SelfInterested => "self_interested",
            Nervous => "nervous",
            Calm => "calm",
        }
    }

    /// Behavioral characterization of the pole, used when prompting artifact
    /// generators and judges.
    pub fn description(self) -> &'static str {
        use TraitPole::*;
        match self {
            Inventive => "values novelty, creativity, and abstract thinking; prefers unconventional approaches, intellectual curiosity, and exploring new ideas; embraces change and complexity",
            Consistent => "prefers routine, tradition, and practicality; values established methods, concrete solutions, and proven approaches; favors stability and familiarity",
            Dependable => "organized, disciplined, and goal-oriented; emphasizes planning, reliability, and attention to detail; values structure and responsibility",
            Careless => "spontaneous, flexible, and less concerned with details; prioritizes adaptability over structure; comfortable with improvisation and minimal planning",
            Outgoing => "socially energetic, talkative, and assertive; seeks social interaction, external stimulation, and group activities; thrives in collaborative environments",
            Solitary => "reserved, independent, and introspective; prefers individual activities, quiet reflection, and limited social engagement; recharges through solitude",
            Compassionate => "cooperative, empathetic, and trusting; prioritizes harmony, others' needs, and collaborative relationships; values kindness and understanding",
            SelfInterested => "competitive, skeptical, and direct; prioritizes personal goals, critical evaluation, and straightforward communication; values independence over conformity",
            Nervous => "emotionally reactive, anxious, and sensitive to stress; exhibits heightened emotional awareness and concern for potential problems; vigilant to threats",
            Calm => "emotionally stable, resilient, and composed; maintains equilibrium under pressure; exhibits low reactivity to stressors and challenges",
        }
    }
}

impl FromStr for TraitPole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        TraitPole::ALL
            .into_iter()
            .find(|p| p.slug() == norm)
            .ok_or_else(|| Error::Config(format!("unknown trait pole `{s}`")))
    }
}

impl fmt::Display for TraitPole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poles_cover_all_dimension_polarity_pairs() {
        for dim in Dimension::ALL {
            for pol in [Polarity::High, Polarity::Low] {
                let pole = dim.pole(pol);
                assert_eq!(pole.dimension(), dim);
                assert_eq!(pole.polarity(), pol);
            }
        }
    }

    #[test]
    fn pole_table_matches_expected_pairing() {
        assert_eq!(Dimension::Extraversion.pole(Polarity::High), TraitPole::Outgoing);
        assert_eq!(Dimension::Extraversion.pole(Polarity::Low), TraitPole::Solitary);
        assert_eq!(Dimension::Agreeableness.pole(Polarity::Low), TraitPole::SelfInterested);
        assert_eq!(TraitPole::Calm.dimension(), Dimension::Neuroticism);
        assert_eq!(TraitPole::Calm.polarity(), Polarity::Low);
    }

    #[test]
    fn opposite_is_an_involution() {
        for pole in TraitPole::ALL {
            assert_eq!(pole.opposite().opposite(), pole);
            assert_eq!(pole.opposite().dimension(), pole.dimension());
            assert_ne!(pole.opposite(), pole);
        }
    }

    #[test]
    fn slug_round_trips_through_from_str() {
        for pole in TraitPole::ALL {
            assert_eq!(pole.slug().parse::<TraitPole>().unwrap(), pole);
            assert_eq!(pole.name().parse::<TraitPole>().unwrap(), pole);
        }
        assert!("brave".parse::<TraitPole>().is_err());
    }
}
