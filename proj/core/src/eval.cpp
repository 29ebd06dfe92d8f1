#include "sketcher/eval.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace sketcher {

using json = nlohmann::json;

Verdict judge_vote(const std::string& answer, const std::string& gold,
                   Judge& judge, int k, int threshold) {
  if (k < threshold || threshold < 1) {
    throw std::invalid_argument("judge_vote requires k >= threshold >= 1");
  }
  Verdict verdict;
  int correct = 0;
  int incorrect = 0;
  for (int i = 0; i < k; ++i) {
    Vote vote;
    try {
      vote = judge.verdict(answer, gold);
    } catch (const ModelError&) {
      verdict.unjudgeable = true;
      return verdict;
    }
    verdict.votes.push_back(vote);
    if (vote == Vote::Correct) {
      ++correct;
    } else {
      ++incorrect;
    }
    if (judge.deterministic()) {
      // Repeating a deterministic judge cannot change the ballot.
      verdict.decision = vote;
      return verdict;
    }
    if (correct >= threshold) break;
    if (incorrect > k - threshold) break;  // threshold is out of reach
  }
  verdict.decision = correct >= threshold ? Vote::Correct : Vote::Incorrect;
  return verdict;
}

EvalReport evaluate(const std::vector<QaItem>& dataset, ModelClient& model,
                    Judge& judge, const PipelineConfig& config,
                    const EvalOptions& options, const std::string& artifact_dir) {
  if (dataset.empty()) {
    throw std::invalid_argument("evaluate: dataset is empty");
  }
  EvalReport report;
  report.rows.resize(dataset.size());
  report.total = static_cast<int>(dataset.size());

  std::atomic<std::size_t> next{0};
  std::mutex judge_mutex;

  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= dataset.size()) return;
      const QaItem& item = dataset[i];
      EvalItemRow& row = report.rows[i];
      row.id = item.id;
      try {
        std::shared_ptr<const Image> base;
        if (!item.image_path.empty()) {
          base = std::make_shared<Image>(load_png(item.image_path));
        } else {
          base = std::make_shared<Image>(Image(800, 600));
        }
        std::string dir =
            artifact_dir.empty() ? std::string() : artifact_dir + "/" + item.id;
        Session session = run_session(item.question, base, model, config, dir);
        row.status = std::string(to_string(session.status));
        row.turns = session.assistant_turns;
        row.rethinks = session.rethink_turns;
        row.final_answer = session.final_answer.value_or("");

        Verdict verdict;
        {
          std::lock_guard lock(judge_mutex);
          verdict = judge_vote(row.final_answer, item.gold, judge, options.votes,
                               options.threshold);
        }
        if (verdict.unjudgeable) {
          row.decision = "unjudgeable";
        } else {
          row.decision = verdict.decision == Vote::Correct ? "correct" : "incorrect";
        }
      } catch (const std::exception& ex) {
        row.decision = "error";
        row.error = ex.what();
      }
    }
  };

  int threads = std::max(1, options.parallel);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  long turn_sum = 0;
  long rethink_correct = 0, rethink_incorrect = 0;
  int n_correct_rows = 0, n_incorrect_rows = 0;
  for (const EvalItemRow& row : report.rows) {
    turn_sum += row.turns;
    if (row.decision == "correct") {
      ++report.judged;
      ++report.correct;
      rethink_correct += row.rethinks;
      ++n_correct_rows;
    } else if (row.decision == "incorrect") {
      ++report.judged;
      rethink_incorrect += row.rethinks;
      ++n_incorrect_rows;
    }
  }
  report.accuracy = report.judged > 0
                        ? static_cast<double>(report.correct) / report.judged
                        : 0.0;
  report.mean_turns = static_cast<double>(turn_sum) / report.total;
  report.mean_rethinks_correct =
      n_correct_rows > 0 ? static_cast<double>(rethink_correct) / n_correct_rows : 0.0;
  report.mean_rethinks_incorrect =
      n_incorrect_rows > 0 ? static_cast<double>(rethink_incorrect) / n_incorrect_rows
                           : 0.0;
  return report;
}

std::string report_to_json(const EvalReport& report) {
  json doc;
  doc["total"] = report.total;
  doc["judged"] = report.judged;
  doc["correct"] = report.correct;
  doc["accuracy"] = report.accuracy;
  doc["mean_turns"] = report.mean_turns;
  doc["mean_rethinks_correct"] = report.mean_rethinks_correct;
  doc["mean_rethinks_incorrect"] = report.mean_rethinks_incorrect;
  json rows = json::array();
  for (const EvalItemRow& row : report.rows) {
    rows.push_back({{"id", row.id},
                    {"final_answer", row.final_answer},
                    {"decision", row.decision},
                    {"status", row.status},
                    {"turns", row.turns},
                    {"rethinks", row.rethinks},
                    {"error", row.error}});
  }
  doc["items"] = std::move(rows);
  return doc.dump(2);
}

std::string report_to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "id,decision,status,turns,rethinks,final_answer\n";
  auto escape = [](const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string quoted = "\"";
    for (char c : field) {
      if (c == '"') quoted += "\"\"";
      else quoted += c;
    }
    quoted += '"';
    return quoted;
  };
  for (const EvalItemRow& row : report.rows) {
    out << escape(row.id) << ',' << row.decision << ',' << row.status << ','
        << row.turns << ',' << row.rethinks << ',' << escape(row.final_answer)
        << '\n';
  }
  return out.str();
}

}  // namespace sketcher
