#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sketcher/eval.hpp"
#include "support/fixtures.hpp"

using namespace sketcher;
using namespace sketcher::testing;

TEST_CASE("exact match normalizes whitespace, case, and numbers") {
  ExactMatchJudge judge;
  CHECK(judge.verdict("  57 ", "57") == Vote::Correct);
  CHECK(judge.verdict("Blue", "blue") == Vote::Correct);
  CHECK(judge.verdict("57.0000001", "57") == Vote::Correct);   // 1e-6 relative
  CHECK(judge.verdict("57.1", "57") == Vote::Incorrect);
  CHECK(judge.verdict("0", "0.0") == Vote::Correct);
  CHECK(judge.verdict("sixty", "60") == Vote::Incorrect);
  CHECK(judge.deterministic());
}

TEST_CASE("the model judge parses verdict words from the reply") {
  auto scripted = std::make_shared<ScriptedModel>();
  auto ask = [&](const std::string& answer, const std::string& gold,
                 const std::string& reply) {
    std::vector<Message> prompt = {
        Message::text(Role::User, ModelJudge::build_prompt(answer, gold))};
    scripted->add_response(prompt, 0.0, {reply});
    ModelJudge judge(scripted);
    return judge.verdict(answer, gold);
  };
  CHECK(ask("57", "57", "correct") == Vote::Correct);
  CHECK(ask("58", "57", "Incorrect.") == Vote::Incorrect);
  // "incorrect" embeds "correct"; the longer word must win.
  CHECK(ask("59", "57", "That is incorrect") == Vote::Incorrect);
  CHECK(ask("60", "57", "no idea") == Vote::Incorrect);
  ModelJudge judge(scripted);
  CHECK_FALSE(judge.deterministic());
}

TEST_CASE("the correct-correct-incorrect ballot carries the vote") {
  ScriptedJudge judge({Vote::Correct, Vote::Correct, Vote::Incorrect});
  Verdict verdict = judge_vote("a", "g", judge, 3, 2);
  CHECK(verdict.decision == Vote::Correct);
  CHECK(verdict.votes.size() == 2);  // decided after two ballots
}

TEST_CASE("voting short-circuits when the threshold is unreachable") {
  ScriptedJudge judge({Vote::Incorrect, Vote::Incorrect, Vote::Correct});
  Verdict verdict = judge_vote("a", "g", judge, 3, 2);
  CHECK(verdict.decision == Vote::Incorrect);
  CHECK(judge.calls() == 2);
}

TEST_CASE("a deterministic judge decides with one effective vote") {
  ExactMatchJudge judge;
  Verdict verdict = judge_vote("57", "57", judge, 3, 2);
  CHECK(verdict.decision == Vote::Correct);
  CHECK(verdict.votes.size() == 1);
  Verdict wrong = judge_vote("12", "57", judge, 3, 2);
  CHECK(wrong.decision == Vote::Incorrect);
  CHECK(wrong.votes.size() == 1);
}

TEST_CASE("the decision is invariant to ballot order") {
  std::vector<std::vector<Vote>> permutations = {
      {Vote::Correct, Vote::Correct, Vote::Incorrect},
      {Vote::Correct, Vote::Incorrect, Vote::Correct},
      {Vote::Incorrect, Vote::Correct, Vote::Correct},
  };
  for (const auto& ballots : permutations) {
    ScriptedJudge judge(ballots);
    CHECK(judge_vote("a", "g", judge, 3, 2).decision == Vote::Correct);
  }
}

TEST_CASE("judge_vote validates its counts") {
  ExactMatchJudge judge;
  CHECK_THROWS_AS((void)judge_vote("a", "g", judge, 1, 2), std::invalid_argument);
  CHECK_THROWS_AS((void)judge_vote("a", "g", judge, 3, 0), std::invalid_argument);
}

namespace {

// Four items: q0..q2 answered with the gold text, q3 answered wrongly after
// a short drawing detour that reworks an earlier mark.
void script_eval_fixture(ScriptedModel& model, const PipelineConfig& config) {
  auto base = blank_image();
  script_turn(model, "q0", base, {}, config.temperature, {"10"}, config);
  script_turn(model, "q1", base, {}, config.temperature, {"11"}, config);

  std::string draw = "BEGIN\ncreate_point a 0.200 0.200 red\nEND";
  script_turn(model, "q2", base, {}, config.temperature, {draw}, config);
  script_turn(model, "q2", base, {draw}, config.temperature, {"12"}, config);

  std::string draw1 = "BEGIN\ncreate_point a 0.300 0.300 red\nEND";
  std::string draw2 = "BEGIN\ncreate_point b 0.500 0.500 blue\nEND";
  std::string rework = "BEGIN\ndelete a\ncreate_point a 0.350 0.300 red\nEND";
  script_turn(model, "q3", base, {}, config.temperature, {draw1}, config);
  script_turn(model, "q3", base, {draw1}, config.temperature, {draw2}, config);
  script_turn(model, "q3", base, {draw1, draw2}, config.temperature, {rework}, config);
  script_turn(model, "q3", base, {draw1, draw2, rework}, config.temperature,
              {"wrong answer"}, config);
}

std::vector<QaItem> eval_dataset() {
  return {
      {"q0", "q0", "10", "", ""},
      {"q1", "q1", "11", "", ""},
      {"q2", "q2", "12", "", ""},
      {"q3", "q3", "13", "", ""},
  };
}

}  // namespace

TEST_CASE("evaluate reports accuracy 0.75 on the four-item fixture") {
  PipelineConfig config;
  ScriptedModel model;
  script_eval_fixture(model, config);
  ExactMatchJudge judge;

  EvalReport report = evaluate(eval_dataset(), model, judge, config);
  CHECK(report.total == 4);
  CHECK(report.judged == 4);
  CHECK(report.correct == 3);
  CHECK(report.accuracy == doctest::Approx(0.75));

  // q3's third turn deleted a mark from its first turn.
  const EvalItemRow* q3 = nullptr;
  for (const EvalItemRow& row : report.rows) {
    if (row.id == "q3") q3 = &row;
  }
  REQUIRE(q3 != nullptr);
  CHECK(q3->rethinks >= 1);
  CHECK(q3->turns == 4);
  CHECK(q3->decision == "incorrect");

  // Aggregates recompute exactly from the per-item rows.
  int correct_rows = 0;
  double turn_sum = 0;
  for (const EvalItemRow& row : report.rows) {
    correct_rows += row.decision == "correct" ? 1 : 0;
    turn_sum += row.turns;
  }
  CHECK(correct_rows == report.correct);
  CHECK(report.mean_turns == doctest::Approx(turn_sum / report.total));
}

TEST_CASE("evaluate runs items concurrently with identical results") {
  PipelineConfig config;
  ScriptedModel model;
  script_eval_fixture(model, config);
  ExactMatchJudge judge;
  EvalOptions options;
  options.parallel = 4;

  EvalReport report = evaluate(eval_dataset(), model, judge, config, options);
  CHECK(report.accuracy == doctest::Approx(0.75));
  CHECK(report.rows[0].id == "q0");  // rows keep dataset order
  CHECK(report.rows[3].id == "q3");
}

TEST_CASE("an empty dataset is an error, not an empty report") {
  PipelineConfig config;
  ScriptedModel model;
  ExactMatchJudge judge;
  CHECK_THROWS_AS((void)evaluate({}, model, judge, config), std::invalid_argument);
}

TEST_CASE("per-item failures are recorded and the run continues") {
  PipelineConfig config;
  ScriptedModel model;
  auto base = blank_image();
  script_turn(model, "good", base, {}, config.temperature, {"1"}, config);
  // "bad" has no fixture and will throw inside its session.
  std::vector<QaItem> dataset = {
      {"bad", "bad", "1", "", ""},
      {"good", "good", "1", "", ""},
  };
  ExactMatchJudge judge;
  EvalReport report = evaluate(dataset, model, judge, config);
  CHECK(report.rows[0].decision == "error");
  CHECK_FALSE(report.rows[0].error.empty());
  CHECK(report.rows[1].decision == "correct");
  CHECK(report.judged == 1);
  CHECK(report.accuracy == doctest::Approx(1.0));
}

namespace {

// A judge whose transport always fails, as a remote judge might.
class DownJudge : public Judge {
 public:
  Vote verdict(const std::string&, const std::string&) override {
    throw ModelError(ModelError::Kind::Network, "judge endpoint unreachable");
  }
};

}  // namespace

TEST_CASE("judge transport failures mark items unjudgeable, not incorrect") {
  DownJudge down;
  Verdict verdict = judge_vote("57", "57", down, 3, 2);
  CHECK(verdict.unjudgeable);

  PipelineConfig config;
  ScriptedModel model;
  auto base = blank_image();
  script_turn(model, "q0", base, {}, config.temperature, {"10"}, config);
  std::vector<QaItem> dataset = {{"q0", "q0", "10", "", ""}};
  EvalReport report = evaluate(dataset, model, down, config);
  CHECK(report.rows[0].decision == "unjudgeable");
  CHECK(report.judged == 0);  // excluded from the accuracy denominator
}

TEST_CASE("reports serialize to JSON and CSV") {
  PipelineConfig config;
  ScriptedModel model;
  script_eval_fixture(model, config);
  ExactMatchJudge judge;
  EvalReport report = evaluate(eval_dataset(), model, judge, config);

  std::string doc = report_to_json(report);
  CHECK(doc.find("\"accuracy\": 0.75") != std::string::npos);
  std::string csv = report_to_csv(report);
  CHECK(csv.rfind("id,decision,status,turns,rethinks,final_answer\n", 0) == 0);
  CHECK(csv.find("q3,incorrect") != std::string::npos);
}
