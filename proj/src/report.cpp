#include "pairjudge/report.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace pairjudge {

using nlohmann::ordered_json;

std::array<int, 3> largest_remainder_percentages(std::size_t wins, std::size_t losses,
                                                 std::size_t ties) {
    const std::size_t total = wins + losses + ties;
    if (total == 0) {
        throw error("largest_remainder_percentages: no records");
    }

    const std::array<std::size_t, 3> counts{wins, losses, ties};
    std::array<int, 3> floors{};
    std::array<double, 3> remainders{};
    int assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double exact = 100.0 * static_cast<double>(counts[i]) / static_cast<double>(total);
        floors[i] = static_cast<int>(std::floor(exact));
        remainders[i] = exact - std::floor(exact);
        assigned += floors[i];
    }

    int points = 100 - assigned;
    // Hand the leftover points to the largest remainders; ties broken in
    // the fixed order win > loss > tie (index order).
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
    for (std::size_t i = 0; i < 3 && points > 0; ++i, --points) {
        ++floors[order[i]];
    }
    return floors;
}

std::vector<WinRateRow> win_rates(const std::vector<ComparisonRecord>& records) {
    std::map<std::pair<std::string, std::string>, WinRateRow> groups;
    for (const auto& record : records) {
        auto& row = groups[{record.candidate_model, record.dataset}];
        row.candidate_model = record.candidate_model;
        row.dataset = record.dataset;
        switch (record.final.outcome) {
        case Outcome::CandidateWin:
            ++row.wins;
            break;
        case Outcome::TargetWin:
            ++row.losses;
            break;
        case Outcome::Tie:
            ++row.ties;
            break;
        case Outcome::Errored:
            ++row.errored;
            break;
        }
    }

    std::vector<WinRateRow> rows;
    rows.reserve(groups.size());
    for (auto& [key, row] : groups) {
        if (row.non_errored() > 0) {
            row.percentages = largest_remainder_percentages(row.wins, row.losses, row.ties);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

BootstrapIntervals bootstrap_ci(const std::vector<ComparisonRecord>& records, double level,
                                std::size_t resamples, std::uint64_t seed) {
    if (records.empty()) {
        throw error("bootstrap_ci: no records");
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw error("bootstrap_ci: level must be inside (0, 1)");
    }
    if (resamples == 0) {
        throw error("bootstrap_ci: need at least one resample");
    }

    // Errored records carry no outcome; drop them before resampling.
    std::vector<int> outcomes; // 0 = win, 1 = loss, 2 = tie
    outcomes.reserve(records.size());
    for (const auto& record : records) {
        switch (record.final.outcome) {
        case Outcome::CandidateWin:
            outcomes.push_back(0);
            break;
        case Outcome::TargetWin:
            outcomes.push_back(1);
            break;
        case Outcome::Tie:
            outcomes.push_back(2);
            break;
        case Outcome::Errored:
            break;
        }
    }
    if (outcomes.empty()) {
        throw error("bootstrap_ci: every record is errored");
    }

    const std::size_t n = outcomes.size();
    std::mt19937_64 engine(seed);
    std::array<std::vector<double>, 3> stats;
    for (auto& s : stats) {
        s.reserve(resamples);
    }
    for (std::size_t r = 0; r < resamples; ++r) {
        std::array<std::size_t, 3> counts{};
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t index = static_cast<std::size_t>(engine() % n);
            ++counts[static_cast<std::size_t>(outcomes[index])];
        }
        for (std::size_t c = 0; c < 3; ++c) {
            stats[c].push_back(100.0 * static_cast<double>(counts[c]) /
                               static_cast<double>(n));
        }
    }

    // Linearly interpolated empirical quantile at rank q * (R - 1).
    auto quantile = [](std::vector<double> values, double q) {
        std::sort(values.begin(), values.end());
        const double rank = q * static_cast<double>(values.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
        const std::size_t hi = static_cast<std::size_t>(std::ceil(rank));
        const double weight = rank - static_cast<double>(lo);
        return values[lo] * (1.0 - weight) + values[hi] * weight;
    };

    const double alpha = (1.0 - level) / 2.0;
    BootstrapIntervals intervals;
    Interval* slots[3] = {&intervals.win, &intervals.loss, &intervals.tie};
    for (std::size_t c = 0; c < 3; ++c) {
        slots[c]->lo = quantile(stats[c], alpha);
        slots[c]->hi = quantile(stats[c], 1.0 - alpha);
    }
    return intervals;
}

double position_flip_rate(const std::vector<ComparisonRecord>& records) {
    std::size_t considered = 0;
    std::size_t flips = 0;
    for (const auto& record : records) {
        if (record.final.outcome == Outcome::Errored) {
            continue;
        }
        const Preferred p1 = record.verdict_order1.preferred;
        const Preferred p2 = record.verdict_order2.preferred;
        if (p1 == Preferred::Unparseable || p2 == Preferred::Unparseable) {
            continue;
        }
        ++considered;
        const bool tracked_position = (p1 == Preferred::First && p2 == Preferred::First) ||
                                      (p1 == Preferred::Second && p2 == Preferred::Second);
        if (tracked_position) {
            ++flips;
        }
    }
    if (considered == 0) {
        return 0.0;
    }
    return static_cast<double>(flips) / static_cast<double>(considered);
}

namespace {

std::size_t outcome_class(Outcome outcome) {
    switch (outcome) {
    case Outcome::CandidateWin:
        return 0;
    case Outcome::TargetWin:
        return 1;
    case Outcome::Tie:
        return 2;
    case Outcome::Errored:
        break;
    }
    throw error("agreement_metrics: filter Errored verdicts before computing agreement");
}

} // namespace

AgreementReport agreement_metrics(const std::vector<FinalVerdict>& judge,
                                  const std::vector<FinalVerdict>& human) {
    if (judge.size() != human.size()) {
        throw error("agreement_metrics: list lengths differ (" + std::to_string(judge.size()) +
                    " vs " + std::to_string(human.size()) + ")");
    }

    AgreementReport report;
    report.n_pairs = judge.size();
    for (std::size_t i = 0; i < judge.size(); ++i) {
        const std::size_t h = outcome_class(human[i].outcome);
        const std::size_t j = outcome_class(judge[i].outcome);
        ++report.confusion[h][j];
    }

    if (report.n_pairs == 0) {
        return report;
    }

    std::size_t agree = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        agree += report.confusion[c][c];
    }
    report.accuracy = static_cast<double>(agree) / static_cast<double>(report.n_pairs);

    // Macro F1 over the classes that occur in either list; a class absent
    // from both would contribute an arbitrary 0 and break the identity
    // property (identical lists must score 1.0 whatever classes they use).
    double f1_sum = 0.0;
    std::size_t classes_present = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        std::size_t gold = 0;
        std::size_t predicted = 0;
        for (std::size_t k = 0; k < 3; ++k) {
            gold += report.confusion[c][k];
            predicted += report.confusion[k][c];
        }
        if (gold == 0 && predicted == 0) {
            continue;
        }
        ++classes_present;
        const std::size_t tp = report.confusion[c][c];
        const double precision =
            predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted);
        const double recall =
            gold == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(gold);
        const double f1 =
            (precision + recall) == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
        f1_sum += f1;
    }
    report.macro_f1 = classes_present == 0 ? 0.0 : f1_sum / static_cast<double>(classes_present);
    return report;
}

TableFormat table_format_from_string(const std::string& name) {
    if (name == "md" || name == "markdown") {
        return TableFormat::Markdown;
    }
    if (name == "csv") {
        return TableFormat::Csv;
    }
    if (name == "json") {
        return TableFormat::Json;
    }
    throw error("unknown table format '" + name + "' (expected md, csv, or json)");
}

namespace {

std::vector<std::string> resolve_dataset_order(const std::vector<WinRateRow>& rows,
                                               const std::vector<std::string>& requested) {
    std::vector<std::string> present;
    for (const auto& row : rows) {
        if (std::find(present.begin(), present.end(), row.dataset) == present.end()) {
            present.push_back(row.dataset);
        }
    }
    std::sort(present.begin(), present.end());

    std::vector<std::string> order;
    for (const auto& name : requested) {
        if (std::find(present.begin(), present.end(), name) != present.end() &&
            std::find(order.begin(), order.end(), name) == order.end()) {
            order.push_back(name);
        }
    }
    for (const auto& name : present) {
        if (std::find(order.begin(), order.end(), name) == order.end()) {
            order.push_back(name);
        }
    }
    return order;
}

std::vector<std::string> candidate_order(const std::vector<WinRateRow>& rows) {
    std::vector<std::string> candidates;
    for (const auto& row : rows) {
        if (std::find(candidates.begin(), candidates.end(), row.candidate_model) ==
            candidates.end()) {
            candidates.push_back(row.candidate_model);
        }
    }
    std::sort(candidates.begin(), candidates.end());
    return candidates;
}

const WinRateRow* find_row(const std::vector<WinRateRow>& rows, const std::string& candidate,
                           const std::string& dataset) {
    for (const auto& row : rows) {
        if (row.candidate_model == candidate && row.dataset == dataset) {
            return &row;
        }
    }
    return nullptr;
}

std::array<std::string, 3> percent_cells(const WinRateRow* row) {
    if (row == nullptr || !row->percentages) {
        return {"—", "—", "—"};
    }
    const auto& p = *row->percentages;
    return {std::to_string(p[0]) + "%", std::to_string(p[1]) + "%", std::to_string(p[2]) + "%"};
}

} // namespace

std::string render_table(const std::vector<WinRateRow>& rows, TableFormat format,
                         const std::vector<std::string>& dataset_order,
                         const std::string& target_display_name) {
    const std::vector<std::string> datasets = resolve_dataset_order(rows, dataset_order);
    const std::vector<std::string> candidates = candidate_order(rows);

    std::ostringstream out;
    switch (format) {
    case TableFormat::Markdown: {
        out << "| Model A Candidates |";
        for (const auto& dataset : datasets) {
            out << ' ' << dataset << " Model A | " << dataset << ' ' << target_display_name
                << " | " << dataset << " Tie | " << dataset << " Err |";
        }
        out << '\n';
        out << "| --- |";
        for (std::size_t i = 0; i < datasets.size(); ++i) {
            out << " --- | --- | --- | --- |";
        }
        out << '\n';
        for (const auto& candidate : candidates) {
            out << "| " << candidate << " |";
            for (const auto& dataset : datasets) {
                const WinRateRow* row = find_row(rows, candidate, dataset);
                const auto cells = percent_cells(row);
                out << ' ' << cells[0] << " | " << cells[1] << " | " << cells[2] << " | "
                    << (row ? std::to_string(row->errored) : std::string("—")) << " |";
            }
            out << '\n';
        }
        break;
    }
    case TableFormat::Csv: {
        out << "candidate";
        for (const auto& dataset : datasets) {
            out << ',' << dataset << " win%," << dataset << ' ' << target_display_name << " win%,"
                << dataset << " tie%," << dataset << " errored";
        }
        out << '\n';
        for (const auto& candidate : candidates) {
            out << candidate;
            for (const auto& dataset : datasets) {
                const WinRateRow* row = find_row(rows, candidate, dataset);
                const auto cells = percent_cells(row);
                out << ',' << cells[0] << ',' << cells[1] << ',' << cells[2] << ','
                    << (row ? std::to_string(row->errored) : std::string("—"));
            }
            out << '\n';
        }
        break;
    }
    case TableFormat::Json: {
        ordered_json doc;
        doc["datasets"] = datasets;
        doc["target"] = target_display_name;
        ordered_json rows_json = ordered_json::array();
        for (const auto& candidate : candidates) {
            ordered_json row_json;
            row_json["candidate"] = candidate;
            ordered_json cells = ordered_json::object();
            for (const auto& dataset : datasets) {
                const WinRateRow* row = find_row(rows, candidate, dataset);
                if (row == nullptr) {
                    cells[dataset] = nullptr;
                    continue;
                }
                ordered_json cell;
                cell["counts"] = {{"wins", row->wins},
                                  {"losses", row->losses},
                                  {"ties", row->ties},
                                  {"errored", row->errored}};
                if (row->percentages) {
                    cell["percentages"] = {{"win", (*row->percentages)[0]},
                                           {"loss", (*row->percentages)[1]},
                                           {"tie", (*row->percentages)[2]}};
                } else {
                    cell["percentages"] = nullptr;
                }
                cells[dataset] = std::move(cell);
            }
            row_json["cells"] = std::move(cells);
            rows_json.push_back(std::move(row_json));
        }
        doc["rows"] = std::move(rows_json);
        out << doc.dump(2) << '\n';
        break;
    }
    }
    return out.str();
}

} // namespace pairjudge
