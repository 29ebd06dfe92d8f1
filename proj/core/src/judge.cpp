#include "sketcher/judge.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

namespace sketcher {

std::string ExactMatchJudge::normalize(const std::string& text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  std::string out = text.substr(begin, end - begin);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

namespace {

bool parse_full_number(const std::string& text, double& out) {
  if (text.empty()) return false;
  char* end = nullptr;
  out = std::strtod(text.c_str(), &end);
  return end == text.c_str() + text.size() && std::isfinite(out);
}

}  // namespace

Vote ExactMatchJudge::verdict(const std::string& final_answer, const std::string& gold) {
  std::string a = normalize(final_answer);
  std::string b = normalize(gold);
  if (a == b) return Vote::Correct;
  double x = 0, y = 0;
  if (parse_full_number(a, x) && parse_full_number(b, y)) {
    if (x == y) return Vote::Correct;
    double tol = 1e-6 * std::max(std::abs(x), std::abs(y));
    if (std::abs(x - y) <= tol) return Vote::Correct;
  }
  return Vote::Incorrect;
}

ModelJudge::ModelJudge(std::shared_ptr<ModelClient> model, double temperature)
    : model_(std::move(model)), temperature_(temperature) {}

std::string ModelJudge::build_prompt(const std::string& final_answer,
                                     const std::string& gold) {
  return "You are grading a chart question. Decide whether the candidate answer "
         "matches the reference answer in meaning; minor formatting differences "
         "do not matter. Reply with exactly one word: correct or incorrect.\n\n"
         "Reference answer: " + gold + "\nCandidate answer: " + final_answer + "\n";
}

Vote ModelJudge::verdict(const std::string& final_answer, const std::string& gold) {
  std::vector<Message> prompt;
  prompt.push_back(Message::text(Role::User, build_prompt(final_answer, gold)));
  std::vector<std::string> replies = model_->complete(prompt, temperature_, 1);
  std::string text = ExactMatchJudge::normalize(replies.at(0));
  // Look for a standalone verdict word; "incorrect" must win over its suffix.
  if (text.find("incorrect") != std::string::npos) return Vote::Incorrect;
  if (text.find("correct") != std::string::npos) return Vote::Correct;
  return Vote::Incorrect;
}

}  // namespace sketcher
