#pragma once

#include <string>
#include <vector>

#include "sketcher/dataset.hpp"
#include "sketcher/judge.hpp"
#include "sketcher/pipeline.hpp"

namespace sketcher {

// Majority-vote outcome. decision is Correct iff correct ballots reach the
// threshold; voting stops as soon as the outcome is decided, and a
// deterministic judge decides with a single ballot.
struct Verdict {
  std::vector<Vote> votes;
  Vote decision = Vote::Incorrect;
  bool unjudgeable = false;  // judge transport failed after retries
};

Verdict judge_vote(const std::string& answer, const std::string& gold,
                   Judge& judge, int k = 3, int threshold = 2);

struct EvalItemRow {
  std::string id;
  std::string final_answer;
  std::string decision;  // correct | incorrect | unjudgeable | error
  std::string status;    // session status
  int turns = 0;         // assistant turns (CoT length)
  int rethinks = 0;      // turns that deleted/replaced an earlier turn's mark
  std::string error;
};

struct EvalReport {
  std::vector<EvalItemRow> rows;
  int total = 0;
  int judged = 0;   // rows included in the accuracy denominator
  int correct = 0;
  double accuracy = 0;
  double mean_turns = 0;
  double mean_rethinks_correct = 0;
  double mean_rethinks_incorrect = 0;
};

struct EvalOptions {
  int votes = 3;
  int threshold = 2;
  int parallel = 1;  // concurrent sessions
};

// Runs one session per item and aggregates accuracy, mean CoT length, and
// mean rethink counts split by correctness. Per-item failures are recorded
// and the run continues; an empty dataset is an error. Items without an
// image path run against a blank 800x600 base.
EvalReport evaluate(const std::vector<QaItem>& dataset, ModelClient& model,
                    Judge& judge, const PipelineConfig& config,
                    const EvalOptions& options = {},
                    const std::string& artifact_dir = {});

std::string report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);

}  // namespace sketcher
