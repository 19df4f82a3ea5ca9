//! Readability formulas and their level tables.
//!
//! Band tables follow one boundary convention: a value sitting on a boundary
//! shared by two printed ranges goes to the upper band, and integer ranges
//! such as `1-4`, `5-8` cover the gap up to the next range's start (`[1, 5)`).
//! Scores outside a table's domain keep their raw value and get the
//! [`OUT_OF_RANGE`] label.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{HardWordRule, Language, TextStats};

pub const OUT_OF_RANGE: &str = "out of table range";

/// Tolerance used by the YOD success predicate unless a caller overrides it.
pub const DEFAULT_YOD_TOLERANCE: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    Fres,
    Gfi,
    Smog,
    Ari,
    Atesman,
    CetinkayaUzun,
    Yod,
}

impl Formula {
    pub const ALL: [Formula; 7] = [
        Formula::Fres,
        Formula::Gfi,
        Formula::Smog,
        Formula::Ari,
        Formula::Atesman,
        Formula::CetinkayaUzun,
        Formula::Yod,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Formula::Fres => "fres",
            Formula::Gfi => "gfi",
            Formula::Smog => "smog",
            Formula::Ari => "ari",
            Formula::Atesman => "atesman",
            Formula::CetinkayaUzun => "cetinkaya_uzun",
            Formula::Yod => "yod",
        }
    }

    /// The language the formula was calibrated for.
    pub fn native_language(self) -> Language {
        match self {
            Formula::Fres | Formula::Gfi | Formula::Smog | Formula::Ari => Language::English,
            Formula::Atesman | Formula::CetinkayaUzun | Formula::Yod => Language::Turkish,
        }
    }

    pub fn hard_word_rule(self) -> HardWordRule {
        match self {
            Formula::Gfi => HardWordRule::Gunning,
            _ => HardWordRule::Polysyllabic,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Formula {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Ok(match key.as_str() {
            "fres" | "flesch" => Formula::Fres,
            "gfi" | "gunning_fog" | "fog" => Formula::Gfi,
            "smog" => Formula::Smog,
            "ari" => Formula::Ari,
            "atesman" => Formula::Atesman,
            "cetinkaya_uzun" | "cetinkaya" => Formula::CetinkayaUzun,
            "yod" | "bezirci_yilmaz" => Formula::Yod,
            _ => return Err(format!("unknown formula '{s}'")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReadabilityScore {
    pub formula: Formula,
    pub value: f64,
    pub level_label: &'static str,
    /// Row of the formula's table, counted from the first printed row;
    /// `None` when the value falls outside the table.
    pub level_index: Option<usize>,
}

impl ReadabilityScore {
    fn new(formula: Formula, value: f64, level: (Option<usize>, &'static str)) -> Self {
        ReadabilityScore { formula, value, level_label: level.1, level_index: level.0 }
    }
}

/// A half-open band `[lo, hi)`; the first band of a table may be closed at `hi`.
struct Band {
    lo: f64,
    hi: f64,
    label: &'static str,
}

const fn band(lo: f64, hi: f64, label: &'static str) -> Band {
    Band { lo, hi, label }
}

/// Bands in printed order; the first row holds the highest values when
/// `closed_top` is set.
fn lookup(bands: &[Band], closed_top: bool, value: f64) -> (Option<usize>, &'static str) {
    for (i, b) in bands.iter().enumerate() {
        let top_ok = if closed_top && i == 0 { value <= b.hi } else { value < b.hi };
        if value >= b.lo && top_ok {
            return (Some(i), b.label);
        }
    }
    (None, OUT_OF_RANGE)
}

// Flesch reading ease, school level (US). Shared boundaries go up: 90 is 5th grade.
const FRES_TABLE: [Band; 8] = [
    band(90.0, 100.0, "5th grade"),
    band(80.0, 90.0, "6th grade"),
    band(70.0, 80.0, "7th grade"),
    band(60.0, 70.0, "8th & 9th grade"),
    band(50.0, 60.0, "10th to 12th grade"),
    band(30.0, 50.0, "College"),
    band(10.0, 30.0, "College graduate"),
    band(0.0, 10.0, "Professional"),
];

// Gunning fog, one row per integer index from 17 down to 6.
const GFI_ROWS: [&str; 12] = [
    "College graduate",
    "College senior",
    "College junior",
    "College sophomore",
    "College freshman",
    "High school senior",
    "High school junior",
    "High school sophomore",
    "High school freshman",
    "Eighth grade",
    "Seventh grade",
    "Sixth grade",
];

// SMOG grade bands 1-4, 5-8, 9-12, 13-16, 17+.
const SMOG_TABLE: [Band; 5] = [
    band(1.0, 5.0, "Elementary School"),
    band(5.0, 9.0, "Middle School"),
    band(9.0, 13.0, "High School"),
    band(13.0, 17.0, "Undergraduate"),
    band(17.0, f64::INFINITY, "Graduate"),
];

// ARI score rows 1..=14.
const ARI_ROWS: [&str; 14] = [
    "Kindergarten",
    "First Grade",
    "Second Grade",
    "Third Grade",
    "Fourth Grade",
    "Fifth Grade",
    "Sixth Grade",
    "Seventh Grade",
    "Eighth Grade",
    "Ninth Grade",
    "Tenth Grade",
    "Eleventh Grade",
    "Twelfth Grade",
    "College Student",
];

// Ateşman: 90-100, 70-89, 50-69, 30-49, 1-29. The bottom band starts at 0,
// the bottom of the formula's 0-100 scale.
const ATESMAN_TABLE: [Band; 5] = [
    band(90.0, 100.0, "Very Easy"),
    band(70.0, 90.0, "Easy"),
    band(50.0, 70.0, "Moderately Difficult"),
    band(30.0, 50.0, "Difficult"),
    band(0.0, 30.0, "Very Difficult"),
];

// Çetinkaya-Uzun: 0-34, 35-50, 51+.
const CETINKAYA_UZUN_TABLE: [Band; 3] = [
    band(0.0, 35.0, "Insufficient Reading Level"),
    band(35.0, 51.0, "Educational Reading Level"),
    band(51.0, f64::INFINITY, "Independent Reading Level"),
];

// Bezirci-Yılmaz: 1-8, 9-12, 13-15, 16+. YOD 0 joins the elementary band.
const YOD_TABLE: [Band; 4] = [
    band(0.0, 9.0, "Elementary School"),
    band(9.0, 13.0, "High School"),
    band(13.0, 16.0, "Undergraduate Level"),
    band(16.0, f64::INFINITY, "Academic/Professional Level"),
];

pub fn fres_level(value: f64) -> (Option<usize>, &'static str) {
    lookup(&FRES_TABLE, true, value)
}

/// Nearest integer row, clamped to 6..=17.
pub fn gfi_level(value: f64) -> (Option<usize>, &'static str) {
    let row = if value.is_nan() { 6.0 } else { value.round().clamp(6.0, 17.0) };
    let idx = (17.0 - row) as usize;
    (Some(idx), GFI_ROWS[idx])
}

pub fn smog_level(value: f64) -> (Option<usize>, &'static str) {
    lookup(&SMOG_TABLE, false, value)
}

/// Rounded up, clamped to 1..=14.
pub fn ari_level(value: f64) -> (Option<usize>, &'static str) {
    let row = if value.is_nan() { 1.0 } else { value.ceil().clamp(1.0, 14.0) };
    let idx = row as usize - 1;
    (Some(idx), ARI_ROWS[idx])
}

pub fn atesman_level(value: f64) -> (Option<usize>, &'static str) {
    lookup(&ATESMAN_TABLE, true, value)
}

pub fn cetinkaya_uzun_level(value: f64) -> (Option<usize>, &'static str) {
    lookup(&CETINKAYA_UZUN_TABLE, false, value)
}

pub fn yod_band(value: f64) -> (Option<usize>, &'static str) {
    lookup(&YOD_TABLE, false, value)
}

/// Flesch reading ease: `206.835 - 1.015 ASL - 84.6 ASW`.
pub fn fres(stats: &TextStats) -> ReadabilityScore {
    let value = 206.835 - 1.015 * stats.asl - 84.6 * stats.asw;
    ReadabilityScore::new(Formula::Fres, value, fres_level(value))
}

/// Gunning fog: `0.4 (ASL + 100 PHW)`.
pub fn gunning_fog(stats: &TextStats) -> ReadabilityScore {
    let value = 0.4 * (stats.asl + 100.0 * stats.phw);
    ReadabilityScore::new(Formula::Gfi, value, gfi_level(value))
}

/// SMOG: `1.0430 sqrt(PC * 30 / SC) + 3.1291`.
pub fn smog(stats: &TextStats) -> ReadabilityScore {
    let value = 1.0430 * (stats.polysyllable_count as f64 * 30.0 / stats.sentence_count as f64).sqrt() + 3.1291;
    ReadabilityScore::new(Formula::Smog, value, smog_level(value))
}

/// Automated readability index: `4.71 AWL + 0.5 ASL - 21.43`, AWL in letters.
pub fn ari(stats: &TextStats) -> ReadabilityScore {
    let value = 4.71 * stats.awl_chars + 0.5 * stats.asl - 21.43;
    ReadabilityScore::new(Formula::Ari, value, ari_level(value))
}

/// Ateşman: `198.825 - 40.175 ASW - 2.610 ASL`.
pub fn atesman(stats: &TextStats) -> ReadabilityScore {
    let value = 198.825 - 40.175 * stats.asw - 2.610 * stats.asl;
    ReadabilityScore::new(Formula::Atesman, value, atesman_level(value))
}

/// Çetinkaya-Uzun: `118.823 - 25.987 AWL - 0.971 ASL`, AWL in syllables.
pub fn cetinkaya_uzun(stats: &TextStats) -> ReadabilityScore {
    let value = 118.823 - 25.987 * stats.awl_syllables - 0.971 * stats.asl;
    ReadabilityScore::new(Formula::CetinkayaUzun, value, cetinkaya_uzun_level(value))
}

/// Bezirci-Yılmaz YOD: `sqrt(OKS (0.84 H3 + 1.5 H4 + 3.5 H5 + 26.25 H6))`.
pub fn yod_value(stats: &TextStats) -> f64 {
    let weighted = stats.h3 * 0.84 + stats.h4 * 1.5 + stats.h5 * 3.5 + stats.h6 * 26.25;
    (stats.asl * weighted).sqrt()
}

pub fn yod(stats: &TextStats) -> ReadabilityScore {
    let value = yod_value(stats);
    ReadabilityScore::new(Formula::Yod, value, yod_band(value))
}

pub fn score(formula: Formula, stats: &TextStats) -> ReadabilityScore {
    match formula {
        Formula::Fres => fres(stats),
        Formula::Gfi => gunning_fog(stats),
        Formula::Smog => smog(stats),
        Formula::Ari => ari(stats),
        Formula::Atesman => atesman(stats),
        Formula::CetinkayaUzun => cetinkaya_uzun(stats),
        Formula::Yod => yod(stats),
    }
}

/// Integer YOD level in `1..=16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct YodLevel(u8);

impl YodLevel {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = 16;
    pub const COUNT: usize = 16;

    pub fn new(level: i64) -> Result<Self> {
        if (1..=16).contains(&level) {
            Ok(YodLevel(level as u8))
        } else {
            Err(Error::InvalidLevel(level))
        }
    }

    /// Continuous YOD to level: round half up, then clamp to `1..=16`.
    pub fn from_value(value: f64) -> Self {
        let rounded = (value + 0.5).floor();
        let clamped = if rounded.is_nan() { 1.0 } else { rounded.clamp(1.0, 16.0) };
        YodLevel(clamped as u8)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based class index (level 1 → 0).
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(index: usize) -> Result<Self> {
        Self::new(index as i64 + 1)
    }

    pub fn all() -> impl Iterator<Item = YodLevel> {
        (1..=16).map(YodLevel)
    }

    pub fn group(self) -> YodGroup {
        match self.0 {
            1..=8 => YodGroup::Elementary,
            9..=12 => YodGroup::HighSchool,
            13..=15 => YodGroup::Undergraduate,
            _ => YodGroup::Academic,
        }
    }
}

impl TryFrom<i64> for YodLevel {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        YodLevel::new(v)
    }
}

impl From<YodLevel> for u8 {
    fn from(l: YodLevel) -> u8 {
        l.0
    }
}

impl fmt::Display for YodLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn yod_to_level(value: f64) -> YodLevel {
    YodLevel::from_value(value)
}

/// Education groups of the YOD table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YodGroup {
    Elementary,
    HighSchool,
    Undergraduate,
    Academic,
}

impl YodGroup {
    pub const ALL: [YodGroup; 4] =
        [YodGroup::Elementary, YodGroup::HighSchool, YodGroup::Undergraduate, YodGroup::Academic];

    pub fn levels(self) -> std::ops::RangeInclusive<u8> {
        match self {
            YodGroup::Elementary => 1..=8,
            YodGroup::HighSchool => 9..=12,
            YodGroup::Undergraduate => 13..=15,
            YodGroup::Academic => 16..=16,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            YodGroup::Elementary => "Elementary (1-8)",
            YodGroup::HighSchool => "High School (9-12)",
            YodGroup::Undergraduate => "Undergraduate (13-15)",
            YodGroup::Academic => "Academic/Professional (16)",
        }
    }
}

/// True iff the achieved YOD lies within `tolerance` of the target level.
pub fn yod_success(achieved: f64, target: YodLevel, tolerance: f64) -> bool {
    (achieved - f64::from(target.get())).abs() <= tolerance
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stats() -> TextStats {
        TextStats {
            sentence_count: 1,
            word_count: 1,
            syllable_count: 1,
            letter_count: 1,
            asl: 1.0,
            asw: 1.0,
            awl_chars: 1.0,
            awl_syllables: 1.0,
            phw: 0.0,
            polysyllable_count: 0,
            h3: 0.0,
            h4: 0.0,
            h5: 0.0,
            h6: 0.0,
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn fres_examples() {
        let s = TextStats { asl: 10.0, asw: 1.5, ..stats() };
        let r = fres(&s);
        assert!(close(r.value, 69.785));
        assert_eq!(r.level_label, "8th & 9th grade");
        let r = fres(&TextStats { asl: 1.0, asw: 1.0, ..stats() });
        assert!(close(r.value, 121.22));
        assert_eq!(r.level_label, OUT_OF_RANGE);
        assert_eq!(r.level_index, None);
    }

    #[test]
    fn gfi_examples() {
        let r = gunning_fog(&TextStats { asl: 10.0, phw: 0.10, ..stats() });
        assert!(close(r.value, 8.0));
        assert_eq!(r.level_label, "Eighth grade");
        let r = gunning_fog(&TextStats { asl: 6.0, phw: 0.0, ..stats() });
        assert!(close(r.value, 2.4));
        assert_eq!(r.level_label, "Sixth grade");
        let r = gunning_fog(&TextStats { asl: 20.0, phw: 0.25, ..stats() });
        assert!(close(r.value, 18.0));
        assert_eq!(r.level_label, "College graduate");
    }

    #[test]
    fn smog_examples() {
        let r = smog(&TextStats { polysyllable_count: 30, sentence_count: 30, ..stats() });
        assert!(close(r.value, 1.0430 * 30f64.sqrt() + 3.1291));
        assert!((r.value - 8.8418).abs() < 1e-4);
        assert_eq!(r.level_label, "Middle School");
        let r = smog(&TextStats { polysyllable_count: 0, sentence_count: 7, ..stats() });
        assert_eq!(r.value, 3.1291);
        assert_eq!(r.level_label, "Elementary School");
        let r = smog(&TextStats { polysyllable_count: 90, sentence_count: 30, ..stats() });
        assert!((r.value - 13.024).abs() < 1e-3);
        assert_eq!(r.level_label, "Undergraduate");
    }

    #[test]
    fn ari_examples() {
        let r = ari(&TextStats { awl_chars: 4.0, asl: 10.0, ..stats() });
        assert!(close(r.value, 2.41));
        assert_eq!(r.level_label, "Second Grade");
        let r = ari(&TextStats { awl_chars: 5.0, asl: 20.0, ..stats() });
        assert!(close(r.value, 12.12));
        assert_eq!(r.level_label, "Twelfth Grade");
        let r = ari(&TextStats { awl_chars: 3.0, asl: 2.0, ..stats() });
        assert!(close(r.value, -6.3));
        assert_eq!(r.level_label, "Kindergarten");
    }

    #[test]
    fn atesman_examples() {
        let r = atesman(&TextStats { asw: 2.0, asl: 10.0, ..stats() });
        assert!(close(r.value, 92.375));
        assert_eq!(r.level_label, "Very Easy");
        let r = atesman(&TextStats { asw: 3.0, asl: 25.0, ..stats() });
        assert!(close(r.value, 13.05));
        assert_eq!(r.level_label, "Very Difficult");
        let r = atesman(&TextStats { asw: 1.0, asl: 1.0, ..stats() });
        assert!(close(r.value, 156.04));
        assert_eq!(r.level_label, OUT_OF_RANGE);
    }

    #[test]
    fn cetinkaya_uzun_examples() {
        let r = cetinkaya_uzun(&TextStats { awl_syllables: 2.5, asl: 8.0, ..stats() });
        assert!(close(r.value, 46.0875));
        assert_eq!(r.level_label, "Educational Reading Level");
        let r = cetinkaya_uzun(&TextStats { awl_syllables: 2.0, asl: 5.0, ..stats() });
        assert!(close(r.value, 61.994));
        assert_eq!(r.level_label, "Independent Reading Level");
        let r = cetinkaya_uzun(&TextStats { awl_syllables: 3.5, asl: 20.0, ..stats() });
        assert!(close(r.value, 8.4485));
        assert_eq!(r.level_label, "Insufficient Reading Level");
    }

    #[test]
    fn yod_examples() {
        assert_eq!(yod(&stats()).value, 0.0);
        let r = yod(&TextStats { asl: 4.0, h3: 4.0, ..stats() });
        assert!((r.value - 3.6661).abs() < 1e-4);
        assert_eq!(r.level_label, "Elementary School");
        let r = yod(&TextStats { asl: 10.0, h6: 1.0, ..stats() });
        assert!((r.value - 16.202).abs() < 1e-3);
        assert_eq!(r.level_label, "Academic/Professional Level");
    }

    #[test]
    fn level_binning() {
        assert_eq!(yod_to_level(3.6661).get(), 4);
        assert_eq!(yod_to_level(0.2).get(), 1);
        assert_eq!(yod_to_level(21.3).get(), 16);
        assert_eq!(yod_to_level(4.5).get(), 5);
        assert_eq!(yod_to_level(4.4999).get(), 4);
        assert!(YodLevel::new(0).is_err());
        assert!(YodLevel::new(17).is_err());
    }

    #[test]
    fn success_examples() {
        let eight = YodLevel::new(8).unwrap();
        assert!(yod_success(9.4, eight, 1.5));
        assert!(!yod_success(9.6, eight, 1.5));
        assert!(yod_success(8.0, eight, 0.0));
    }

    #[test]
    fn groups_cover_levels() {
        for level in YodLevel::all() {
            assert!(level.group().levels().contains(&level.get()));
        }
    }

    #[test]
    fn formula_names_parse() {
        for f in Formula::ALL {
            assert_eq!(f.name().parse::<Formula>().unwrap(), f);
        }
        assert_eq!("gunning-fog".parse::<Formula>().unwrap(), Formula::Gfi);
        assert!("dale_chall".parse::<Formula>().is_err());
    }

    proptest! {
        #[test]
        fn yod_is_monotone_in_each_class(
            oks in 1.0f64..40.0,
            h in proptest::array::uniform4(0.0f64..5.0),
            which in 0usize..4,
            bump in 0.0f64..3.0,
        ) {
            let base = TextStats { asl: oks, h3: h[0], h4: h[1], h5: h[2], h6: h[3], ..stats() };
            let mut bumped = base;
            match which {
                0 => bumped.h3 += bump,
                1 => bumped.h4 += bump,
                2 => bumped.h5 += bump,
                _ => bumped.h6 += bump,
            }
            prop_assert!(yod_value(&bumped) >= yod_value(&base));
        }

        #[test]
        fn every_value_maps_to_one_label(v in proptest::num::f64::ANY) {
            for f in [fres_level, gfi_level, smog_level, ari_level, atesman_level, cetinkaya_uzun_level, yod_band] {
                let (idx, label) = f(v);
                prop_assert_eq!(idx.is_none(), label == OUT_OF_RANGE);
            }
        }

        #[test]
        fn success_is_symmetric_and_monotone(target in 1i64..=16, err in 0.0f64..5.0, tol in 0.0f64..3.0, extra in 0.0f64..2.0) {
            let t = YodLevel::new(target).unwrap();
            let up = yod_success(target as f64 + err, t, tol);
            let down = yod_success(target as f64 - err, t, tol);
            prop_assert_eq!(up, down);
            if up {
                prop_assert!(yod_success(target as f64 + err, t, tol + extra));
            }
        }
    }
}
