#pragma once

#include "pairjudge/backend.hpp"
#include "pairjudge/prompt.hpp"
#include "pairjudge/sample.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pairjudge {

enum class Preferred { First, Second, Tie, Unparseable };
enum class PresentationOrder { CandidateFirst, TargetFirst };
enum class Outcome { CandidateWin, TargetWin, Tie, Errored };

std::string to_string(Preferred preferred);
std::string to_string(PresentationOrder order);
std::string to_string(Outcome outcome);
Preferred preferred_from_string(const std::string& name);
PresentationOrder order_from_string(const std::string& name);
Outcome outcome_from_string(const std::string& name);

// The judge's preference for one presentation order, derived solely from
// the terminal verdict token of its reply.
struct OrderVerdict {
    Preferred preferred = Preferred::Unparseable;
    std::string raw_text;
    PresentationOrder order = PresentationOrder::CandidateFirst;
};

// The swap-debiased outcome. `unparseable_flagged` marks verdicts where a
// reply stayed unparseable after the re-ask and was folded into a tie.
struct FinalVerdict {
    Outcome outcome = Outcome::Tie;
    bool unparseable_flagged = false;

    bool operator==(const FinalVerdict&) const = default;
};

struct ComparisonError {
    PresentationOrder failing_order = PresentationOrder::CandidateFirst;
    std::string message;
};

struct ComparisonRecord {
    std::string dataset;
    std::string sample_id;
    std::string candidate_model;
    std::string target_model;
    OrderVerdict verdict_order1; // candidate presented first
    OrderVerdict verdict_order2; // target presented first
    FinalVerdict final;
    std::pair<std::string, std::string> judge_request_digests;
    std::optional<ComparisonError> error;
};

nlohmann::ordered_json comparison_record_to_json(const ComparisonRecord& record);
ComparisonRecord comparison_record_from_json(const nlohmann::json& value, const std::string& where);

// Target-anchored schedule: one (candidate, target) pair per non-target
// model, in input order — n-1 comparisons for n models. Throws error if the
// target is missing, names repeat, or there are no candidates.
std::vector<std::pair<std::string, std::string>> schedule_comparisons(
    const std::vector<std::string>& models, const std::string& target);

// Scans the reply for the last occurrence of a legal verdict token:
// [[A]] -> First, [[B]] -> Second, [[C]] -> Tie. No token -> Unparseable.
Preferred parse_verdict(const std::string& raw);

// The both-orders victory rule. v1 must be the candidate-first verdict and
// v2 the target-first verdict (error otherwise). The candidate wins only
// when preferred in both orders, the target likewise; every other
// combination is a tie. Unparseable entries fold into a flagged tie.
FinalVerdict combine_swapped(const OrderVerdict& v1, const OrderVerdict& v2);

struct JudgeTask {
    const Sample* sample = nullptr;
    std::string dataset;
    std::string candidate_model;
    std::string target_model;
    std::string candidate_summary;
    std::string target_summary;
};

struct JudgeOptions {
    JudgePromptTemplate prompt_template;
    // Model ids, backend names, and dataset names that must never appear in
    // a rendered judge prompt.
    std::vector<std::string> forbidden_names;
    // Character budget applied to the {context} text; 0 = unlimited.
    std::size_t context_char_limit = 0;
};

// Appended to the prompt when the first reply carries no verdict token.
inline constexpr const char* kReaskInstruction =
    "Reply with only [[A]], [[B]], or [[C]].";

// Runs the double judging for one (sample, candidate, target) triple:
// two judge calls with swapped answer positions, one re-ask per order if a
// reply is unparseable, then combine_swapped. Backend failures surface as
// an Errored verdict with the failing order recorded, never as a throw —
// except anonymity violations, which throw prompt_error before any call.
ComparisonRecord judge_pair(Backend& judge, const JudgeOptions& options, const JudgeTask& task);

} // namespace pairjudge
