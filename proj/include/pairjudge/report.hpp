#pragma once

#include "pairjudge/judge.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pairjudge {

// Win / loss / tie percentages for one (candidate, dataset) cell group.
// Percentages are integers over the non-errored records, repaired by
// largest remainder so each row sums to exactly 100; rows with no
// non-errored records render as an em dash.
struct WinRateRow {
    std::string candidate_model;
    std::string dataset;
    std::size_t wins = 0;
    std::size_t losses = 0;
    std::size_t ties = 0;
    std::size_t errored = 0;
    std::optional<std::array<int, 3>> percentages; // win, loss, tie

    std::size_t non_errored() const { return wins + losses + ties; }
};

// Largest-remainder integer percentages for (wins, losses, ties): floor the
// exact percentages, then hand out the missing points to the largest
// fractional remainders, breaking ties in the order win > loss > tie.
std::array<int, 3> largest_remainder_percentages(std::size_t wins, std::size_t losses,
                                                 std::size_t ties);

// One row per (candidate, dataset) present in the records, sorted by
// (candidate, dataset) so the result is independent of input order.
std::vector<WinRateRow> win_rates(const std::vector<ComparisonRecord>& records);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Percentile-bootstrap intervals for the win/loss/tie percentages.
// Errored records are dropped first. Resampling uses mt19937_64 seeded
// with `seed`, drawing n indices per resample as engine() % n, resamples
// generated in order; interval bounds are the linearly interpolated
// empirical quantiles at rank q * (resamples - 1). Throws error on empty
// input or a level outside (0, 1).
struct BootstrapIntervals {
    Interval win;
    Interval loss;
    Interval tie;
};
BootstrapIntervals bootstrap_ci(const std::vector<ComparisonRecord>& records, double level,
                                std::size_t resamples, std::uint64_t seed);

// Fraction of records where the two order verdicts tracked a position
// rather than a summary — the (First, First) and (Second, Second)
// patterns. Records with an unparseable or errored verdict are excluded.
double position_flip_rate(const std::vector<ComparisonRecord>& records);

// Judge-vs-human agreement over the three outcome classes
// (candidate win, target win, tie).
struct AgreementReport {
    std::size_t n_pairs = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    // confusion[human][judge], class order: candidate win, target win, tie.
    std::array<std::array<std::size_t, 3>, 3> confusion{};
};

// Accuracy and unweighted macro-F1 from the 3x3 confusion matrix. The
// macro average runs over the classes present in either list, so identical
// lists always score 1.0. Throws error on length mismatch or any Errored
// entry (callers filter those out first).
AgreementReport agreement_metrics(const std::vector<FinalVerdict>& judge,
                                  const std::vector<FinalVerdict>& human);

enum class TableFormat { Markdown, Csv, Json };
TableFormat table_format_from_string(const std::string& name);

// Renders rows pivoted per dataset: one line per candidate, and per
// dataset the three percentage columns (candidate, target, tie) plus the
// errored count. `dataset_order` fixes the column grouping; datasets not
// listed are appended in sorted order. Output is byte-deterministic.
std::string render_table(const std::vector<WinRateRow>& rows, TableFormat format,
                         const std::vector<std::string>& dataset_order = {},
                         const std::string& target_display_name = "Target");

} // namespace pairjudge
