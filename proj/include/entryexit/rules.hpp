#pragma once

namespace entryexit {

/// Entry decision rule as data, so simulators and external tools can
/// execute the same stopping rule. Decision times are first hitting times
/// of the entry set; execution follows delta later.
struct EntryRule {
    enum class Kind {
        Never,           ///< never enter (testing / competitor rule)
        Immediately,     ///< enter at t = 0
        HitAbove,        ///< first time P >= upper
        HitOutsideBand,  ///< first time P <= lower or P >= upper
    };
    Kind kind = Kind::Never;
    double lower = 0.0;
    double upper = 0.0;

    static EntryRule never() { return {Kind::Never, 0.0, 0.0}; }
    static EntryRule immediately() { return {Kind::Immediately, 0.0, 0.0}; }
    static EntryRule hit_above(double p) { return {Kind::HitAbove, 0.0, p}; }
    static EntryRule hit_outside_band(double lo, double hi) {
        return {Kind::HitOutsideBand, lo, hi};
    }
};

/// Exit decision rule. FirstBelowAfterEntry exits at the first time after
/// the entry decision with P <= threshold; if P is already at or below the
/// threshold when entry is decided, the exit decision falls on the same
/// instant.
struct ExitRule {
    enum class Kind {
        Never,
        FirstBelowAfterEntry,
    };
    Kind kind = Kind::Never;
    double threshold = 0.0;

    static ExitRule never() { return {Kind::Never, 0.0}; }
    static ExitRule first_below(double p) {
        return {Kind::FirstBelowAfterEntry, p};
    }
};

}  // namespace entryexit
