use chrono::{DateTime, Datelike, Duration, Timelike, Utc, Weekday};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DayType {
    Weekday,
    Saturday,
    Sunday,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Season {
    Winter,
    Summer,
    Transition,
}

impl DayType {
    pub const ALL: [DayType; 3] = [DayType::Weekday, DayType::Saturday, DayType::Sunday];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl Season {
    pub const ALL: [Season; 3] = [Season::Winter, Season::Summer, Season::Transition];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CalendarFeatures {
    pub day_type: DayType,
    pub season: Season,
    pub hour_of_day: u32,
}

/// A calendar date without year, used for season boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MonthDay {
    pub month: u32,
    pub day: u32,
}

impl MonthDay {
    pub const fn new(month: u32, day: u32) -> Self {
        Self { month, day }
    }
}

/// Inclusive `[first, last]` range of calendar days; may wrap over New Year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeasonRange {
    pub first: MonthDay,
    pub last: MonthDay,
}

impl SeasonRange {
    pub fn contains(&self, day: MonthDay) -> bool {
        if self.first <= self.last {
            self.first <= day && day <= self.last
        } else {
            day >= self.first || day <= self.last
        }
    }
}

/// Maps timestamps to day type and season. Days outside winter and summer are transition days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeasonCalendar {
    pub winter: SeasonRange,
    pub summer: SeasonRange,
    /// Fixed offset applied to UTC before reading the local date and hour.
    pub utc_offset_hours: i32,
}

impl Default for SeasonCalendar {
    fn default() -> Self {
        Self {
            winter: SeasonRange {
                first: MonthDay::new(11, 1),
                last: MonthDay::new(3, 20),
            },
            summer: SeasonRange {
                first: MonthDay::new(5, 15),
                last: MonthDay::new(9, 14),
            },
            utc_offset_hours: 0,
        }
    }
}

impl SeasonCalendar {
    pub fn features(&self, t: DateTime<Utc>) -> CalendarFeatures {
        let local = t.naive_utc() + Duration::hours(self.utc_offset_hours as i64);
        let day_type = match local.weekday() {
            Weekday::Sat => DayType::Saturday,
            Weekday::Sun => DayType::Sunday,
            _ => DayType::Weekday,
        };
        let md = MonthDay::new(local.month(), local.day());
        let season = if self.winter.contains(md) {
            Season::Winter
        } else if self.summer.contains(md) {
            Season::Summer
        } else {
            Season::Transition
        };
        CalendarFeatures {
            day_type,
            season,
            hour_of_day: local.hour(),
        }
    }
}

/// Calendar features of `t` under `calendar`.
pub fn calendar_features(t: DateTime<Utc>, calendar: &SeasonCalendar) -> CalendarFeatures {
    calendar.features(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn at(y: i32, m: u32, d: u32, h: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(y, m, d, h, 0, 0).unwrap()
    }

    #[test]
    fn sunday_is_sunday() {
        let f = calendar_features(at(2019, 1, 6, 0), &SeasonCalendar::default());
        assert_eq!(f.day_type, DayType::Sunday);
    }

    #[test]
    fn new_year_noon_is_winter() {
        let f = calendar_features(at(2019, 1, 1, 12), &SeasonCalendar::default());
        assert_eq!(f.season, Season::Winter);
        assert_eq!(f.hour_of_day, 12);
        assert_eq!(f.day_type, DayType::Weekday);
    }

    #[test]
    fn july_first_2019_is_summer_weekday() {
        let f = calendar_features(at(2019, 7, 1, 8), &SeasonCalendar::default());
        assert_eq!(f.day_type, DayType::Weekday);
        assert_eq!(f.season, Season::Summer);
    }

    #[test]
    fn season_boundaries_are_inclusive() {
        let cal = SeasonCalendar::default();
        let season = |m, d| cal.features(at(2020, m, d, 0)).season;
        assert_eq!(season(3, 20), Season::Winter);
        assert_eq!(season(3, 21), Season::Transition);
        assert_eq!(season(5, 14), Season::Transition);
        assert_eq!(season(5, 15), Season::Summer);
        assert_eq!(season(9, 14), Season::Summer);
        assert_eq!(season(9, 15), Season::Transition);
        assert_eq!(season(10, 31), Season::Transition);
        assert_eq!(season(11, 1), Season::Winter);
        assert_eq!(season(12, 31), Season::Winter);
    }

    #[test]
    fn offset_shifts_local_hour_and_date() {
        let cal = SeasonCalendar {
            utc_offset_hours: 1,
            ..SeasonCalendar::default()
        };
        // Saturday 23:00 UTC is Sunday 00:00 at UTC+1.
        let f = cal.features(at(2019, 1, 5, 23));
        assert_eq!(f.hour_of_day, 0);
        assert_eq!(f.day_type, DayType::Sunday);
    }
}
