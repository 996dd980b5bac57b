//! Time representation.
//!
//! All times and durations are integer *ticks*, one tick being a tenth of a
//! minute. Inputs in decimal minutes are scaled exactly or rejected; this
//! keeps arc lengths, longest-path labels and cycle detection free of
//! floating-point error (conflict arcs carry the small constant `epsilon`
//! and negative lengths, so exactness matters).

/// A point in time or a signed duration, in tenths of a minute.
pub type Ticks = i64;

/// Ticks per minute.
pub const TICKS_PER_MINUTE: Ticks = 10;

/// Converts decimal minutes to ticks, requiring the value to be an exact
/// multiple of 0.1 minute (within 1e-6 of one).
pub fn ticks_from_minutes(minutes: f64) -> Option<Ticks> {
    if !minutes.is_finite() {
        return None;
    }
    let scaled = minutes * TICKS_PER_MINUTE as f64;
    let rounded = scaled.round();
    if (scaled - rounded).abs() > 1e-6 || rounded.abs() > 9e15 {
        return None;
    }
    Some(rounded as Ticks)
}

/// Converts whole minutes to ticks.
pub fn ticks_from_whole_minutes(minutes: i64) -> Ticks {
    minutes * TICKS_PER_MINUTE
}

pub fn ticks_to_minutes(ticks: Ticks) -> f64 {
    ticks as f64 / TICKS_PER_MINUTE as f64
}

/// Formats ticks as decimal minutes without trailing noise ("15", "0.1",
/// "-3.5"). Used by reports and the graph dump; the output is stable.
pub fn format_minutes(ticks: Ticks) -> String {
    let whole = ticks / TICKS_PER_MINUTE;
    let tenth = (ticks % TICKS_PER_MINUTE).abs();
    if tenth == 0 {
        format!("{whole}")
    } else if ticks < 0 && whole == 0 {
        format!("-0.{tenth}")
    } else {
        format!("{whole}.{tenth}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_minute_scaling() {
        assert_eq!(ticks_from_minutes(12.3), Some(123));
        assert_eq!(ticks_from_minutes(0.0), Some(0));
        assert_eq!(ticks_from_minutes(1440.0), Some(14400));
        // Not representable in tenths of a minute.
        assert_eq!(ticks_from_minutes(0.25), None);
        assert_eq!(ticks_from_minutes(f64::NAN), None);
    }

    #[test]
    fn minute_formatting() {
        assert_eq!(format_minutes(150), "15");
        assert_eq!(format_minutes(1), "0.1");
        assert_eq!(format_minutes(-35), "-3.5");
        assert_eq!(format_minutes(-1), "-0.1");
        assert_eq!(format_minutes(-13800), "-1380");
    }
}
