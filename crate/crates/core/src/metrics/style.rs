use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The seven annotation configurations the tool can run in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StylePreset {
    XClick,
    Click,
    Boxes,
    Autotrack,
    AutotrackBoxes,
    AutotrackBoxesSparklines,
    AutotrackBoxesSparklinesSmartjump,
}

impl StylePreset {
    pub const ALL: [StylePreset; 7] = [
        StylePreset::XClick,
        StylePreset::Click,
        StylePreset::Boxes,
        StylePreset::Autotrack,
        StylePreset::AutotrackBoxes,
        StylePreset::AutotrackBoxesSparklines,
        StylePreset::AutotrackBoxesSparklinesSmartjump,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StylePreset::XClick => "xclick",
            StylePreset::Click => "click",
            StylePreset::Boxes => "boxes",
            StylePreset::Autotrack => "autotrack",
            StylePreset::AutotrackBoxes => "autotrack-boxes",
            StylePreset::AutotrackBoxesSparklines => "autotrack-boxes-sparklines",
            StylePreset::AutotrackBoxesSparklinesSmartjump => "autotrack-boxes-sparklines-smartjump",
        }
    }

    pub fn style(self) -> AnnotationStyle {
        AnnotationStyle::from(self)
    }
}

impl fmt::Display for StylePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StylePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let preset = match s {
            "xclick" => StylePreset::XClick,
            "click" => StylePreset::Click,
            "boxes" => StylePreset::Boxes,
            "autotrack" => StylePreset::Autotrack,
            "autotrack-boxes" => StylePreset::AutotrackBoxes,
            "autotrack-boxes-sparklines" | "autotrack-boxes-spark" => StylePreset::AutotrackBoxesSparklines,
            "autotrack-boxes-sparklines-smartjump" | "autotrack-boxes-spark-jmp" => {
                StylePreset::AutotrackBoxesSparklinesSmartjump
            }
            other => {
                return Err(Error::Parse(format!(
                    "unknown style '{other}' (expected one of: {})",
                    StylePreset::ALL.map(StylePreset::name).join(", ")
                )))
            }
        };
        Ok(preset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StyleFlags {
    pub timeline: bool,
    pub autotrack: bool,
    pub show_boxes_on_annotations: bool,
    pub sparklines: bool,
    pub smartjump: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Presentation {
    RandomOrder,
    Timeline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClickMode {
    Point,
    #[serde(rename = "xclick")]
    XClick,
}

/// Feature configuration of a session. Only the presets can be built, so
/// the flag implications always hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct AnnotationStyle {
    preset: StylePreset,
}

impl AnnotationStyle {
    pub fn preset(&self) -> StylePreset {
        self.preset
    }

    pub fn name(&self) -> &'static str {
        self.preset.name()
    }

    pub fn flags(&self) -> StyleFlags {
        use StylePreset::*;
        let p = self.preset;
        let autotrack = matches!(
            p,
            Autotrack | AutotrackBoxes | AutotrackBoxesSparklines | AutotrackBoxesSparklinesSmartjump
        );
        StyleFlags {
            timeline: autotrack,
            autotrack,
            show_boxes_on_annotations: matches!(
                p,
                Boxes | AutotrackBoxes | AutotrackBoxesSparklines | AutotrackBoxesSparklinesSmartjump
            ),
            sparklines: matches!(p, AutotrackBoxesSparklines | AutotrackBoxesSparklinesSmartjump),
            smartjump: p == AutotrackBoxesSparklinesSmartjump,
        }
    }

    pub fn presentation(&self) -> Presentation {
        if self.flags().timeline {
            Presentation::Timeline
        } else {
            Presentation::RandomOrder
        }
    }

    pub fn click_mode(&self) -> ClickMode {
        if self.preset == StylePreset::XClick {
            ClickMode::XClick
        } else {
            ClickMode::Point
        }
    }

    /// Whether labels produced under this style carry boxes. Only plain
    /// point clicking yields points alone.
    pub fn produces_boxes(&self) -> bool {
        self.preset != StylePreset::Click
    }
}

impl From<StylePreset> for AnnotationStyle {
    fn from(preset: StylePreset) -> Self {
        AnnotationStyle { preset }
    }
}

impl From<AnnotationStyle> for String {
    fn from(s: AnnotationStyle) -> String {
        s.name().to_string()
    }
}

impl TryFrom<String> for AnnotationStyle {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for AnnotationStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<StylePreset>().map(AnnotationStyle::from)
    }
}

impl fmt::Display for AnnotationStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
