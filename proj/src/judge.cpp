#include "pairjudge/judge.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace pairjudge {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(Preferred preferred) {
    switch (preferred) {
    case Preferred::First:
        return "first";
    case Preferred::Second:
        return "second";
    case Preferred::Tie:
        return "tie";
    case Preferred::Unparseable:
        return "unparseable";
    }
    return "unparseable";
}

Preferred preferred_from_string(const std::string& name) {
    if (name == "first") return Preferred::First;
    if (name == "second") return Preferred::Second;
    if (name == "tie") return Preferred::Tie;
    if (name == "unparseable") return Preferred::Unparseable;
    throw journal_error("unknown preference '" + name + "'");
}

std::string to_string(PresentationOrder order) {
    return order == PresentationOrder::CandidateFirst ? "candidate_first" : "target_first";
}

PresentationOrder order_from_string(const std::string& name) {
    if (name == "candidate_first") return PresentationOrder::CandidateFirst;
    if (name == "target_first") return PresentationOrder::TargetFirst;
    throw journal_error("unknown presentation order '" + name + "'");
}

std::string to_string(Outcome outcome) {
    switch (outcome) {
    case Outcome::CandidateWin:
        return "candidate_win";
    case Outcome::TargetWin:
        return "target_win";
    case Outcome::Tie:
        return "tie";
    case Outcome::Errored:
        return "errored";
    }
    return "errored";
}

Outcome outcome_from_string(const std::string& name) {
    if (name == "candidate_win") return Outcome::CandidateWin;
    if (name == "target_win") return Outcome::TargetWin;
    if (name == "tie") return Outcome::Tie;
    if (name == "errored") return Outcome::Errored;
    throw journal_error("unknown outcome '" + name + "'");
}

std::vector<std::pair<std::string, std::string>> schedule_comparisons(
    const std::vector<std::string>& models, const std::string& target) {
    if (std::find(models.begin(), models.end(), target) == models.end()) {
        throw error("target model '" + target + "' is not among the evaluated models");
    }
    for (std::size_t i = 0; i < models.size(); ++i) {
        for (std::size_t j = i + 1; j < models.size(); ++j) {
            if (models[i] == models[j]) {
                throw error("duplicate model name '" + models[i] + "'");
            }
        }
    }
    if (models.size() < 2) {
        throw error("need at least two models to compare (got " +
                    std::to_string(models.size()) + ")");
    }

    std::vector<std::pair<std::string, std::string>> pairs;
    pairs.reserve(models.size() - 1);
    for (const auto& model : models) {
        if (model != target) {
            pairs.emplace_back(model, target);
        }
    }
    return pairs;
}

Preferred parse_verdict(const std::string& raw) {
    struct TokenRule {
        const char* token;
        Preferred preferred;
    };
    static constexpr TokenRule rules[] = {
        {"[[A]]", Preferred::First},
        {"[[B]]", Preferred::Second},
        {"[[C]]", Preferred::Tie},
    };

    std::size_t best_pos = std::string::npos;
    Preferred best = Preferred::Unparseable;
    for (const auto& rule : rules) {
        const std::size_t pos = raw.rfind(rule.token);
        if (pos != std::string::npos && (best_pos == std::string::npos || pos > best_pos)) {
            best_pos = pos;
            best = rule.preferred;
        }
    }
    return best;
}

FinalVerdict combine_swapped(const OrderVerdict& v1, const OrderVerdict& v2) {
    if (v1.order != PresentationOrder::CandidateFirst ||
        v2.order != PresentationOrder::TargetFirst) {
        throw error("combine_swapped: verdicts must be (candidate_first, target_first)");
    }

    FinalVerdict verdict;
    verdict.unparseable_flagged =
        v1.preferred == Preferred::Unparseable || v2.preferred == Preferred::Unparseable;

    // Victory needs the same summary preferred in both orders; a stubbornly
    // unparseable reply counts as a tie for its order.
    const bool candidate_both =
        v1.preferred == Preferred::First && v2.preferred == Preferred::Second;
    const bool target_both =
        v1.preferred == Preferred::Second && v2.preferred == Preferred::First;
    if (candidate_both) {
        verdict.outcome = Outcome::CandidateWin;
    } else if (target_both) {
        verdict.outcome = Outcome::TargetWin;
    } else {
        verdict.outcome = Outcome::Tie;
    }
    return verdict;
}

namespace {

json order_verdict_to_json(const OrderVerdict& verdict) {
    return {{"preferred", to_string(verdict.preferred)},
            {"order", to_string(verdict.order)},
            {"raw_text", verdict.raw_text}};
}

OrderVerdict order_verdict_from_json(const json& value, const std::string& where) {
    OrderVerdict verdict;
    try {
        verdict.preferred = preferred_from_string(value.at("preferred").get<std::string>());
        verdict.order = order_from_string(value.at("order").get<std::string>());
        verdict.raw_text = value.at("raw_text").get<std::string>();
    } catch (const json::exception& ex) {
        throw journal_error(where + ": bad order verdict: " + ex.what());
    }
    return verdict;
}

} // namespace

ordered_json comparison_record_to_json(const ComparisonRecord& record) {
    ordered_json out;
    out["dataset"] = record.dataset;
    out["sample_id"] = record.sample_id;
    out["candidate_model"] = record.candidate_model;
    out["target_model"] = record.target_model;
    out["order1"] = order_verdict_to_json(record.verdict_order1);
    out["order2"] = order_verdict_to_json(record.verdict_order2);
    out["final"] = {{"outcome", to_string(record.final.outcome)},
                    {"unparseable_flagged", record.final.unparseable_flagged}};
    out["judge_request_digests"] = {record.judge_request_digests.first,
                                    record.judge_request_digests.second};
    if (record.error) {
        out["error"] = {{"failing_order", to_string(record.error->failing_order)},
                        {"message", record.error->message}};
    }
    return out;
}

ComparisonRecord comparison_record_from_json(const json& value, const std::string& where) {
    ComparisonRecord record;
    try {
        record.dataset = value.at("dataset").get<std::string>();
        record.sample_id = value.at("sample_id").get<std::string>();
        record.candidate_model = value.at("candidate_model").get<std::string>();
        record.target_model = value.at("target_model").get<std::string>();
        record.verdict_order1 = order_verdict_from_json(value.at("order1"), where);
        record.verdict_order2 = order_verdict_from_json(value.at("order2"), where);
        record.final.outcome = outcome_from_string(value.at("final").at("outcome").get<std::string>());
        record.final.unparseable_flagged =
            value.at("final").at("unparseable_flagged").get<bool>();
        const auto& digests = value.at("judge_request_digests");
        record.judge_request_digests = {digests.at(0).get<std::string>(),
                                        digests.at(1).get<std::string>()};
        if (value.contains("error")) {
            ComparisonError err;
            err.failing_order =
                order_from_string(value.at("error").at("failing_order").get<std::string>());
            err.message = value.at("error").at("message").get<std::string>();
            record.error = std::move(err);
        }
    } catch (const json::exception& ex) {
        throw journal_error(where + ": bad comparison record: " + ex.what());
    }
    return record;
}

namespace {

std::string truncate_context(const std::string& context, std::size_t limit) {
    if (limit == 0 || context.size() <= limit) {
        return context;
    }
    return context.substr(0, limit);
}

struct JudgeCall {
    OrderVerdict verdict;
    std::string request_digest;
};

JudgeCall ask_judge(Backend& judge, const JudgeOptions& options, const std::string& context,
                    const std::string& first_answer, const std::string& second_answer,
                    PresentationOrder order) {
    const Prompt prompt =
        build_judge_prompt(options.prompt_template, context, first_answer, second_answer);
    if (const auto leaked = find_forbidden_name(prompt.rendered, options.forbidden_names)) {
        throw prompt_error("judge prompt would leak identity '" + *leaked + "'");
    }

    CompletionRequest request;
    request.backend_name = judge.config().name;
    request.messages = {{Role::User, prompt.rendered}};
    request.temperature = judge.config().temperature;
    request.max_tokens = judge.config().max_tokens;

    JudgeCall call;
    CompletionResult result = judge.complete(request);
    call.request_digest = result.request_digest;
    call.verdict.order = order;
    call.verdict.raw_text = result.text;
    call.verdict.preferred = parse_verdict(result.text);

    if (call.verdict.preferred == Preferred::Unparseable) {
        // One immediate re-ask with an explicit token instruction.
        CompletionRequest retry_request = request;
        retry_request.messages = {
            {Role::User, prompt.rendered + "\n\n" + kReaskInstruction}};
        CompletionResult retry_result = judge.complete(retry_request);
        call.verdict.raw_text = retry_result.text;
        call.verdict.preferred = parse_verdict(retry_result.text);
        call.request_digest = retry_result.request_digest;
    }
    return call;
}

} // namespace

ComparisonRecord judge_pair(Backend& judge, const JudgeOptions& options, const JudgeTask& task) {
    if (task.sample == nullptr) {
        throw error("judge_pair: task.sample must be set");
    }
    if (task.candidate_summary.empty() || task.target_summary.empty()) {
        throw error("judge_pair: both summaries must be present");
    }

    ComparisonRecord record;
    record.dataset = task.dataset;
    record.sample_id = task.sample->id;
    record.candidate_model = task.candidate_model;
    record.target_model = task.target_model;
    record.verdict_order1.order = PresentationOrder::CandidateFirst;
    record.verdict_order2.order = PresentationOrder::TargetFirst;

    const std::string context =
        truncate_context(judge_context(*task.sample), options.context_char_limit);

    auto run_order = [&](PresentationOrder order) -> std::optional<std::string> {
        const bool candidate_first = order == PresentationOrder::CandidateFirst;
        OrderVerdict& slot =
            candidate_first ? record.verdict_order1 : record.verdict_order2;
        std::string& digest_slot = candidate_first ? record.judge_request_digests.first
                                                   : record.judge_request_digests.second;
        try {
            const JudgeCall call = ask_judge(
                judge, options, context,
                candidate_first ? task.candidate_summary : task.target_summary,
                candidate_first ? task.target_summary : task.candidate_summary, order);
            slot = call.verdict;
            digest_slot = call.request_digest;
            return std::nullopt;
        } catch (const backend_error& ex) {
            return std::string(ex.what());
        }
    };

    const auto failure_1 = run_order(PresentationOrder::CandidateFirst);
    std::optional<std::string> failure_2;
    if (!failure_1) {
        failure_2 = run_order(PresentationOrder::TargetFirst);
    }

    if (failure_1 || failure_2) {
        record.final.outcome = Outcome::Errored;
        record.error = ComparisonError{
            failure_1 ? PresentationOrder::CandidateFirst : PresentationOrder::TargetFirst,
            failure_1 ? *failure_1 : *failure_2};
        return record;
    }

    record.final = combine_swapped(record.verdict_order1, record.verdict_order2);
    return record;
}

} // namespace pairjudge
